//! Finite-difference operators on [`Grid`] node data.
//!
//! Interior nodes use second-order central stencils. On non-periodic axes the
//! first derivative falls back to first-order one-sided differences and the
//! second derivative to the shifted three-point stencil. Radial grids use the
//! spherical forms `(1/r^2) d(r^2 F)/dr` and `(1/r) d^2(r f)/dr^2` with the
//! regular value `r^2 F = r f = 0` at the origin.

use std::f64::consts::PI;

use super::{Boundary, Geometry, Grid, ScalarField, VectorField};

/// Neighbour bookkeeping for one axis.
#[derive(Clone, Copy)]
struct Axis {
    n: usize,
    stride: usize,
    h: f64,
    periodic: bool,
}

impl Axis {
    fn new(grid: &Grid, axis: usize) -> Self {
        Self {
            n: grid.dims()[axis],
            stride: grid.stride(axis),
            h: grid.spacing()[axis],
            periodic: grid.boundary() == Boundary::Periodic,
        }
    }

    #[inline]
    fn index(&self, flat: usize) -> usize {
        (flat / self.stride) % self.n
    }

    /// Flat index of the node `offset` steps along the axis (wrapping if periodic).
    #[inline]
    fn shift(&self, flat: usize, i: usize, offset: isize) -> usize {
        let j = (i as isize + offset).rem_euclid(self.n as isize) as usize;
        flat - i * self.stride + j * self.stride
    }
}

/// First derivative of `values` along `axis`.
pub fn derivative(grid: &Grid, values: &[f64], axis: usize) -> Vec<f64> {
    let ax = Axis::new(grid, axis);
    (0..values.len())
        .map(|k| {
            let i = ax.index(k);
            let f = |o| values[ax.shift(k, i, o)];
            if ax.periodic || (i > 0 && i + 1 < ax.n) {
                (f(1) - f(-1)) / (2.0 * ax.h)
            } else if i == 0 {
                (f(1) - f(0)) / ax.h
            } else {
                (f(0) - f(-1)) / ax.h
            }
        })
        .collect()
}

/// Second derivative of `values` along `axis`.
pub fn second_derivative(grid: &Grid, values: &[f64], axis: usize) -> Vec<f64> {
    let ax = Axis::new(grid, axis);
    let h2 = ax.h * ax.h;
    (0..values.len())
        .map(|k| {
            let i = ax.index(k);
            let f = |o| values[ax.shift(k, i, o)];
            if ax.periodic || (i > 0 && i + 1 < ax.n) {
                (f(1) - 2.0 * f(0) + f(-1)) / h2
            } else if i == 0 {
                (f(0) - 2.0 * f(1) + f(2)) / h2
            } else {
                (f(0) - 2.0 * f(-1) + f(-2)) / h2
            }
        })
        .collect()
}

/// Wraps an angle difference into `(-pi, pi]`.
pub fn wrap_angle(d: f64) -> f64 {
    let w = d - 2.0 * PI * (d / (2.0 * PI)).round();
    if w <= -PI {
        w + 2.0 * PI
    } else {
        w
    }
}

/// First derivative of a phase, with every neighbour difference wrapped.
pub fn phase_derivative(grid: &Grid, phase: &[f64], axis: usize) -> Vec<f64> {
    let ax = Axis::new(grid, axis);
    (0..phase.len())
        .map(|k| {
            let i = ax.index(k);
            let f = |o| phase[ax.shift(k, i, o)];
            if ax.periodic || (i > 0 && i + 1 < ax.n) {
                (wrap_angle(f(1) - f(0)) + wrap_angle(f(0) - f(-1))) / (2.0 * ax.h)
            } else if i == 0 {
                wrap_angle(f(1) - f(0)) / ax.h
            } else {
                wrap_angle(f(0) - f(-1)) / ax.h
            }
        })
        .collect()
}

pub fn gradient(f: &ScalarField) -> VectorField {
    let g = f.grid();
    VectorField::from_parts_unchecked(
        g.clone(),
        (0..g.ndim()).map(|a| derivative(g, f.values(), a)).collect(),
    )
}

/// Gradient of a phase field (wrapped differences).
pub fn phase_gradient(s: &ScalarField) -> VectorField {
    let g = s.grid();
    VectorField::from_parts_unchecked(
        g.clone(),
        (0..g.ndim())
            .map(|a| phase_derivative(g, s.values(), a))
            .collect(),
    )
}

pub fn divergence(f: &VectorField) -> ScalarField {
    let g = f.grid();
    let values = match g.geometry() {
        Geometry::Cartesian => {
            let mut acc = vec![0.0; g.len()];
            for a in 0..g.ndim() {
                for (s, d) in acc.iter_mut().zip(derivative(g, f.component(a), a)) {
                    *s += d;
                }
            }
            acc
        }
        Geometry::Radial => radial_divergence(g, f.component(0)),
    };
    ScalarField::from_parts_unchecked(g.clone(), values)
}

fn radial_divergence(g: &Grid, fr: &[f64]) -> Vec<f64> {
    let h = g.spacing()[0];
    let r = g.axis_coords(0);
    let n = r.len();
    let flux: Vec<f64> = (0..n).map(|i| r[i] * r[i] * fr[i]).collect();
    (0..n)
        .map(|i| {
            let d = if i == 0 {
                flux[1] / (2.0 * h)
            } else if i + 1 < n {
                (flux[i + 1] - flux[i - 1]) / (2.0 * h)
            } else {
                (flux[i] - flux[i - 1]) / h
            };
            d / (r[i] * r[i])
        })
        .collect()
}

pub fn laplacian(f: &ScalarField) -> ScalarField {
    let g = f.grid();
    let values = match g.geometry() {
        Geometry::Cartesian => {
            let mut acc = vec![0.0; g.len()];
            for a in 0..g.ndim() {
                for (s, d) in acc.iter_mut().zip(second_derivative(g, f.values(), a)) {
                    *s += d;
                }
            }
            acc
        }
        Geometry::Radial => {
            let h2 = g.spacing()[0].powi(2);
            let r = g.axis_coords(0);
            let n = r.len();
            let chi: Vec<f64> = (0..n).map(|i| r[i] * f.values()[i]).collect();
            (0..n)
                .map(|i| {
                    let d2 = if i == 0 {
                        chi[1] - 2.0 * chi[0]
                    } else if i + 1 < n {
                        chi[i + 1] - 2.0 * chi[i] + chi[i - 1]
                    } else {
                        chi[i] - 2.0 * chi[i - 1] + chi[i - 2]
                    };
                    d2 / (h2 * r[i])
                })
                .collect()
        }
    };
    ScalarField::from_parts_unchecked(g.clone(), values)
}

/// Vector Laplacian. Cartesian grids act componentwise; radial fields are
/// irrotational, so `grad(div F)` is used there.
pub fn vector_laplacian(f: &VectorField) -> VectorField {
    let g = f.grid();
    match g.geometry() {
        Geometry::Cartesian => VectorField::from_parts_unchecked(
            g.clone(),
            f.components()
                .iter()
                .map(|c| {
                    let mut acc = vec![0.0; g.len()];
                    for a in 0..g.ndim() {
                        for (s, d) in acc.iter_mut().zip(second_derivative(g, c, a)) {
                            *s += d;
                        }
                    }
                    acc
                })
                .collect(),
        ),
        Geometry::Radial => gradient(&divergence(f)),
    }
}

/// Directional derivative `(a . grad) f` of a vector field.
pub fn advective(a: &VectorField, f: &VectorField) -> VectorField {
    let g = f.grid();
    let n = g.len();
    let mut out = vec![vec![0.0; n]; g.ndim()];
    for (j, fj) in f.components().iter().enumerate() {
        for i in 0..g.ndim() {
            let d = derivative(g, fj, i);
            let ai = a.component(i);
            for k in 0..n {
                out[j][k] += ai[k] * d[k];
            }
        }
    }
    VectorField::from_parts_unchecked(g.clone(), out)
}

/// Directional derivative `(a . grad) f` of a scalar field.
pub fn advective_scalar(a: &VectorField, f: &ScalarField) -> ScalarField {
    let grad = gradient(f);
    a.dot(&grad).expect("same grid")
}

/// Multilinear interpolation of node data at `point`. Periodic axes wrap;
/// other axes clamp to the outermost nodes.
pub fn interpolate(grid: &Grid, values: &[f64], point: &[f64]) -> f64 {
    let nd = grid.ndim();
    let mut lo = [0usize; 3];
    let mut hi = [0usize; 3];
    let mut t = [0.0; 3];
    for a in 0..nd {
        let n = grid.dims()[a];
        let h = grid.spacing()[a];
        let s = (point[a] - grid.origin()[a]) / h;
        if grid.boundary() == Boundary::Periodic {
            let s = s.rem_euclid(n as f64);
            let i = (s.floor() as usize).min(n - 1);
            lo[a] = i;
            hi[a] = (i + 1) % n;
            t[a] = s - i as f64;
        } else {
            let s = s.clamp(0.0, (n - 1) as f64);
            let i = (s.floor() as usize).min(n - 2);
            lo[a] = i;
            hi[a] = i + 1;
            t[a] = s - i as f64;
        }
    }
    let mut acc = 0.0;
    for corner in 0..(1usize << nd) {
        let mut w = 1.0;
        let mut idx = [0usize; 3];
        for a in 0..nd {
            if corner >> a & 1 == 1 {
                idx[a] = hi[a];
                w *= t[a];
            } else {
                idx[a] = lo[a];
                w *= 1.0 - t[a];
            }
        }
        if w != 0.0 {
            acc += w * values[grid.flat_index(&idx[..nd])];
        }
    }
    acc
}
