//! Finite-difference Hamiltonian in compressed-row form.
//!
//! Dirichlet walls sit one spacing outside the outermost nodes, reflecting
//! walls mirror the neighbour (self-adjoint under the trapezoid weights),
//! periodic axes wrap. The radial operator acts on `chi = r psi` with
//! `chi(0) = 0`. Magnetic coupling enters through Peierls link factors
//! `exp(i kappa h (A_i + A_j) / 2 hbar)`.

use num_complex::Complex64;

use crate::fields::{Boundary, Geometry, Grid};

use super::{HamiltonianSpec, SchrodingerError};

#[derive(Debug, Clone)]
pub struct DiscreteHamiltonian {
    grid: Grid,
    weights: Vec<f64>,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<Complex64>,
    real: bool,
    mass: f64,
    hbar: f64,
}

impl DiscreteHamiltonian {
    pub fn build(spec: &HamiltonianSpec) -> Result<Self, SchrodingerError> {
        spec.validate()?;
        let grid = spec.potential.grid().clone();
        let (mass, hbar) = (spec.mass, spec.hbar);
        let n = grid.len();
        let mut diag: Vec<f64> = spec.potential.values().to_vec();
        if let Some(phi) = &spec.scalar_potential {
            for (d, p) in diag.iter_mut().zip(phi.values()) {
                *d += spec.charge * p;
            }
        }
        let phase = |axis: usize, a: usize, b: usize| -> Complex64 {
            match &spec.vector_potential {
                None => Complex64::new(1.0, 0.0),
                Some(field) => {
                    let comp = field.component(axis);
                    let h = grid.spacing()[axis];
                    Complex64::from_polar(1.0, spec.kappa * h * 0.5 * (comp[a] + comp[b]) / hbar)
                }
            }
        };

        let mut row_ptr = Vec::with_capacity(n + 1);
        let mut cols = Vec::with_capacity(n * (1 + 2 * grid.ndim()));
        let mut vals = Vec::with_capacity(cols.capacity());
        row_ptr.push(0);
        for k in 0..n {
            let idx = grid.multi_index(k);
            let mut d = diag[k];
            let row_start = cols.len();
            cols.push(k);
            vals.push(Complex64::new(0.0, 0.0));
            match grid.geometry() {
                Geometry::Radial => {
                    let h = grid.spacing()[0];
                    let t = hbar * hbar / (2.0 * mass * h * h);
                    let r = grid.coord(k, 0);
                    d += 2.0 * t;
                    if k > 0 {
                        cols.push(k - 1);
                        vals.push(Complex64::new(-t * grid.coord(k - 1, 0) / r, 0.0));
                    }
                    if k + 1 < n {
                        cols.push(k + 1);
                        vals.push(Complex64::new(-t * grid.coord(k + 1, 0) / r, 0.0));
                    }
                }
                Geometry::Cartesian => {
                    for axis in 0..grid.ndim() {
                        let h = grid.spacing()[axis];
                        let t = hbar * hbar / (2.0 * mass * h * h);
                        let dim = grid.dims()[axis];
                        let stride = grid.stride(axis);
                        let i = idx[axis];
                        d += 2.0 * t;
                        let (lo, hi) = (i == 0, i + 1 == dim);
                        let prev = if lo { k + (dim - 1) * stride } else { k - stride };
                        let next = if hi { k - (dim - 1) * stride } else { k + stride };
                        match grid.boundary() {
                            Boundary::Periodic => {
                                cols.push(prev);
                                vals.push(-t * phase(axis, prev, k).conj());
                                cols.push(next);
                                vals.push(-t * phase(axis, k, next));
                            }
                            Boundary::DirichletZero => {
                                if !lo {
                                    cols.push(prev);
                                    vals.push(-t * phase(axis, prev, k).conj());
                                }
                                if !hi {
                                    cols.push(next);
                                    vals.push(-t * phase(axis, k, next));
                                }
                            }
                            Boundary::Reflecting => {
                                let mirror = if lo || hi { 2.0 } else { 1.0 };
                                if !lo {
                                    cols.push(prev);
                                    vals.push(Complex64::new(-t * mirror, 0.0));
                                }
                                if !hi {
                                    cols.push(next);
                                    vals.push(Complex64::new(-t * mirror, 0.0));
                                }
                            }
                        }
                    }
                }
            }
            vals[row_start] = Complex64::new(d, 0.0);
            row_ptr.push(cols.len());
        }
        Ok(Self {
            weights: grid.weights(),
            grid,
            row_ptr,
            cols,
            vals,
            real: spec.vector_potential.is_none(),
            mass,
            hbar,
        })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.grid.len()
    }

    pub fn is_real(&self) -> bool {
        self.real
    }

    pub fn mass(&self) -> f64 {
        self.mass
    }

    pub fn hbar(&self) -> f64 {
        self.hbar
    }

    pub fn apply(&self, x: &[Complex64], y: &mut [Complex64]) {
        for (k, out) in y.iter_mut().enumerate() {
            let mut s = Complex64::new(0.0, 0.0);
            for j in self.row_ptr[k]..self.row_ptr[k + 1] {
                s += self.vals[j] * x[self.cols[j]];
            }
            *out = s;
        }
    }

    /// Real part of the operator applied to a real vector.
    pub fn apply_real(&self, x: &[f64], y: &mut [f64]) {
        for (k, out) in y.iter_mut().enumerate() {
            let mut s = 0.0;
            for j in self.row_ptr[k]..self.row_ptr[k + 1] {
                s += self.vals[j].re * x[self.cols[j]];
            }
            *out = s;
        }
    }

    /// Entry `(row, col)`, zero when absent.
    pub fn entry(&self, row: usize, col: usize) -> Complex64 {
        (self.row_ptr[row]..self.row_ptr[row + 1])
            .filter(|&j| self.cols[j] == col)
            .map(|j| self.vals[j])
            .sum()
    }

    /// Whether the operator is tridiagonal in node order.
    pub fn is_tridiagonal(&self) -> bool {
        self.grid.ndim() == 1 && self.grid.boundary() != Boundary::Periodic
    }

    /// `(sub, diag, sup)` of a tridiagonal operator.
    pub fn bands(&self) -> (Vec<Complex64>, Vec<Complex64>, Vec<Complex64>) {
        let n = self.len();
        let diag = (0..n).map(|i| self.entry(i, i)).collect();
        let sub = (0..n - 1).map(|i| self.entry(i + 1, i)).collect();
        let sup = (0..n - 1).map(|i| self.entry(i, i + 1)).collect();
        (sub, diag, sup)
    }

    /// Lower bound on the spectrum (Gershgorin in the symmetric basis).
    pub fn lower_bound(&self) -> f64 {
        let mut lo = f64::INFINITY;
        for k in 0..self.len() {
            let mut d = 0.0;
            let mut r = 0.0;
            for j in self.row_ptr[k]..self.row_ptr[k + 1] {
                let c = self.cols[j];
                if c == k {
                    d += self.vals[j].re;
                } else {
                    let sym = (self.weights[k] / self.weights[c]).sqrt();
                    r += self.vals[j].norm() * sym;
                }
            }
            lo = lo.min(d - r);
        }
        lo
    }

    /// Largest row sum of magnitudes, a bound on the spectral radius.
    pub fn spectral_radius_bound(&self) -> f64 {
        (0..self.len())
            .map(|k| {
                (self.row_ptr[k]..self.row_ptr[k + 1])
                    .map(|j| {
                        let c = self.cols[j];
                        self.vals[j].norm() * (self.weights[k] / self.weights[c]).sqrt()
                    })
                    .sum::<f64>()
            })
            .fold(0.0, f64::max)
    }

    pub fn inner(&self, a: &[Complex64], b: &[Complex64]) -> Complex64 {
        a.iter()
            .zip(b)
            .zip(&self.weights)
            .map(|((x, y), w)| x.conj() * y * w)
            .sum()
    }

    pub fn norm(&self, a: &[Complex64]) -> f64 {
        a.iter()
            .zip(&self.weights)
            .map(|(x, w)| x.norm_sqr() * w)
            .sum::<f64>()
            .sqrt()
    }

    pub fn inner_real(&self, a: &[f64], b: &[f64]) -> f64 {
        a.iter().zip(b).zip(&self.weights).map(|((x, y), w)| x * y * w).sum()
    }
}
