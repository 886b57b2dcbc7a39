//! Reference Schrödinger solvers: lowest eigenpairs, Crank–Nicolson
//! propagation with optional minimal coupling, and the Madelung field set.

mod hamiltonian;
pub mod linalg;

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

use crate::fields::ops::{divergence, gradient};
use crate::fields::{
    density_from_wavefunction, drift_fields, phase_and_amplitude, transition_velocity, Boundary,
    FieldError, Geometry, ScalarField, VectorField, WaveFunction,
};

pub use hamiltonian::DiscreteHamiltonian;
use linalg::{tridiagonal_eigenvalue, tridiagonal_eigenvector, TridiagonalLu};

/// Eigensolver residual contract, relative to the energy scale.
pub const EIGEN_RESIDUAL_TOLERANCE: f64 = 1e-8;
/// Relative tolerance of iterative linear solves.
pub const LINEAR_SOLVE_TOLERANCE: f64 = 1e-12;
/// Norm drift that aborts a propagation.
pub const INSTABILITY_NORM_DRIFT: f64 = 1e-6;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SchrodingerError {
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error("invalid Hamiltonian: {0}")]
    InvalidSpec(String),
    #[error("eigensolver did not converge after {iterations} iterations (residuals {history:?})")]
    NonConvergence { iterations: usize, history: Vec<f64> },
    #[error("linear solve stalled at relative residual {residual:e} after {iterations} iterations")]
    LinearSolve { iterations: usize, residual: f64 },
    #[error("propagation unstable at step {step}: norm {norm}")]
    Unstable { step: usize, norm: f64 },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

/// Spatially uniform energy from the volume-velocity coupling.
#[derive(Debug, Clone, PartialEq)]
pub enum CouplingTerm {
    /// Fixed energy in J.
    Constant(f64),
    /// `m sum w |upsilon| div(v)`, recomputed from the current state each step.
    Functional { v: VectorField },
}

/// Hamiltonian `(-i hbar grad + kappa A)^2 / 2m + V + q phi + E_k + coupling`.
#[derive(Debug, Clone, PartialEq)]
pub struct HamiltonianSpec {
    pub potential: ScalarField,
    pub mass: f64,
    pub hbar: f64,
    pub kinetic_energy: Option<f64>,
    pub coupling: Option<CouplingTerm>,
    pub vector_potential: Option<VectorField>,
    pub scalar_potential: Option<ScalarField>,
    /// Charge multiplying `phi`.
    pub charge: f64,
    /// Minimal-coupling constant multiplying `A` (`e/c` in Gaussian units, `-q` in SI).
    pub kappa: f64,
}

impl HamiltonianSpec {
    pub fn new(potential: ScalarField, mass: f64, hbar: f64) -> Self {
        Self {
            potential,
            mass,
            hbar,
            kinetic_energy: None,
            coupling: None,
            vector_potential: None,
            scalar_potential: None,
            charge: 0.0,
            kappa: 0.0,
        }
    }

    pub fn with_kinetic_energy(mut self, e_k: f64) -> Self {
        self.kinetic_energy = Some(e_k);
        self
    }

    pub fn with_coupling(mut self, c: CouplingTerm) -> Self {
        self.coupling = Some(c);
        self
    }

    pub fn with_vector_potential(mut self, a: VectorField, kappa: f64) -> Self {
        self.vector_potential = Some(a);
        self.kappa = kappa;
        self
    }

    pub fn with_scalar_potential(mut self, phi: ScalarField, charge: f64) -> Self {
        self.scalar_potential = Some(phi);
        self.charge = charge;
        self
    }

    pub fn validate(&self) -> Result<(), SchrodingerError> {
        let g = self.potential.grid();
        if !(self.mass > 0.0 && self.hbar > 0.0) {
            return Err(SchrodingerError::InvalidSpec(format!(
                "mass {} and hbar {} must be positive",
                self.mass, self.hbar
            )));
        }
        if let Some(a) = &self.vector_potential {
            g.ensure_same(a.grid())?;
            if g.geometry() == Geometry::Radial || g.boundary() == Boundary::Reflecting {
                return Err(SchrodingerError::InvalidSpec(
                    "vector potential needs a Cartesian Dirichlet or periodic grid".into(),
                ));
            }
            if !self.kappa.is_finite() {
                return Err(SchrodingerError::InvalidSpec("kappa must be finite".into()));
            }
        }
        if let Some(phi) = &self.scalar_potential {
            g.ensure_same(phi.grid())?;
        }
        if let Some(CouplingTerm::Functional { v }) = &self.coupling {
            g.ensure_same(v.grid())?;
        }
        for (name, x) in [("kinetic energy", self.kinetic_energy), ("coupling", self.constant_coupling())] {
            if let Some(x) = x {
                if !x.is_finite() {
                    return Err(SchrodingerError::InvalidSpec(format!("{name} must be finite")));
                }
            }
        }
        Ok(())
    }

    fn constant_coupling(&self) -> Option<f64> {
        match self.coupling {
            Some(CouplingTerm::Constant(c)) => Some(c),
            _ => None,
        }
    }

    /// Uniform energy that does not depend on the state.
    fn static_shift(&self) -> f64 {
        self.kinetic_energy.unwrap_or(0.0) + self.constant_coupling().unwrap_or(0.0)
    }

    /// Uniform energy for the current state.
    pub fn uniform_energy(&self, psi: &WaveFunction) -> Result<f64, SchrodingerError> {
        let mut e = self.static_shift();
        if let Some(CouplingTerm::Functional { v }) = &self.coupling {
            e += coupling_functional(psi, v)?;
        }
        Ok(e)
    }
}

/// `m sum w |upsilon| div(v)` with `upsilon = (hbar/m) grad(S) - v`.
pub fn coupling_functional(psi: &WaveFunction, v: &VectorField) -> Result<f64, SchrodingerError> {
    let (_, s) = phase_and_amplitude(psi)?;
    let upsilon = transition_velocity(&s, v, psi.mass(), psi.hbar())?;
    let div = divergence(v);
    let g = psi.grid();
    Ok(psi.mass()
        * crate::stats::pairwise_sum_by(g.len(), |i| {
            let a = upsilon.at(i);
            g.weight(i) * (a[0] * a[0] + a[1] * a[1] + a[2] * a[2]).sqrt() * div.get(i)
        }))
}

#[derive(Debug, Clone)]
pub struct EigenSolution {
    /// Eigenvalue plus the uniform terms (`E_v = E_0 + E_k`).
    pub energy: f64,
    pub psi: WaveFunction,
    pub iterations: usize,
    /// `||H psi - E psi|| / (||psi|| * scale)` with `scale = max(|E|, hbar^2 / 2 m L^2)`.
    pub residual_norm: f64,
}

fn energy_scale(h: &DiscreteHamiltonian, e: f64) -> f64 {
    let g = h.grid();
    let extent = (0..g.ndim())
        .map(|a| g.spacing()[a] * g.dims()[a] as f64)
        .fold(0.0, f64::max);
    e.abs().max(h.hbar() * h.hbar() / (2.0 * h.mass() * extent * extent))
}

fn relative_residual(h: &DiscreteHamiltonian, x: &[f64], lambda: f64) -> f64 {
    let mut hx = vec![0.0; x.len()];
    h.apply_real(x, &mut hx);
    let r: Vec<f64> = hx.iter().zip(x).map(|(a, b)| a - lambda * b).collect();
    (h.inner_real(&r, &r) / h.inner_real(x, x)).sqrt() / energy_scale(h, lambda)
}

fn real_wavefunction(h: &DiscreteHamiltonian, x: &[f64]) -> Result<WaveFunction, FieldError> {
    let amps = x.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    WaveFunction::normalized(h.grid().clone(), amps, h.mass(), h.hbar())
}

/// Lowest `k` eigenpairs, sorted ascending.
pub fn solve_stationary(spec: &HamiltonianSpec, k: usize) -> Result<Vec<EigenSolution>, SchrodingerError> {
    if spec.vector_potential.is_some() {
        return Err(SchrodingerError::InvalidSpec(
            "stationary solver needs a real Hamiltonian".into(),
        ));
    }
    let h = DiscreteHamiltonian::build(spec)?;
    if k == 0 || k > h.len() {
        return Err(SchrodingerError::InvalidArgument(format!(
            "cannot compute {k} eigenpairs on {} nodes",
            h.len()
        )));
    }
    let shift = spec.static_shift();
    let pairs = if h.is_tridiagonal() {
        tridiagonal_pairs(&h, k)
    } else {
        subspace_pairs(&h, k)?
    };
    pairs
        .into_iter()
        .map(|(lambda, x, iterations)| {
            let residual_norm = relative_residual(&h, &x, lambda);
            if !(residual_norm <= EIGEN_RESIDUAL_TOLERANCE) {
                return Err(SchrodingerError::NonConvergence {
                    iterations,
                    history: vec![residual_norm],
                });
            }
            Ok(EigenSolution {
                energy: lambda + shift,
                psi: real_wavefunction(&h, &x)?,
                iterations,
                residual_norm,
            })
        })
        .collect()
}

fn rayleigh(h: &DiscreteHamiltonian, x: &[f64]) -> f64 {
    let mut hx = vec![0.0; x.len()];
    h.apply_real(x, &mut hx);
    h.inner_real(x, &hx) / h.inner_real(x, x)
}

fn tridiagonal_pairs(h: &DiscreteHamiltonian, k: usize) -> Vec<(f64, Vec<f64>, usize)> {
    let (sub, diag, sup) = h.bands();
    let d: Vec<f64> = diag.iter().map(|c| c.re).collect();
    let e: Vec<f64> = sub
        .iter()
        .zip(&sup)
        .map(|(a, b)| -(a.re * b.re).max(0.0).sqrt())
        .collect();
    let w = h.weights();
    (0..k)
        .map(|j| {
            let lambda = tridiagonal_eigenvalue(&d, &e, j);
            let y = tridiagonal_eigenvector(&d, &e, lambda);
            let x: Vec<f64> = y.iter().zip(w).map(|(v, w)| v / w.sqrt()).collect();
            (rayleigh(h, &x), x, 1)
        })
        .collect()
}

/// Conjugate gradients for `(H - sigma) x = b`, symmetric under the grid weights.
fn shifted_cg(h: &DiscreteHamiltonian, sigma: f64, b: &[f64], x: &mut [f64]) -> Result<usize, SchrodingerError> {
    let n = b.len();
    let mut ax = vec![0.0; n];
    let apply = |v: &[f64], out: &mut [f64]| {
        h.apply_real(v, out);
        out.iter_mut().zip(v).for_each(|(o, v)| *o -= sigma * v);
    };
    apply(x, &mut ax);
    let mut r: Vec<f64> = b.iter().zip(&ax).map(|(b, a)| b - a).collect();
    let mut p = r.clone();
    let bnorm = h.inner_real(b, b).sqrt().max(f64::MIN_POSITIVE);
    let mut rr = h.inner_real(&r, &r);
    let cap = 20 * n + 100;
    for it in 0..cap {
        if rr.sqrt() <= 1e-13 * bnorm {
            return Ok(it);
        }
        apply(&p, &mut ax);
        let alpha = rr / h.inner_real(&p, &ax);
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ax[i];
        }
        let rr_new = h.inner_real(&r, &r);
        let beta = rr_new / rr;
        rr = rr_new;
        for i in 0..n {
            p[i] = r[i] + beta * p[i];
        }
    }
    Err(SchrodingerError::LinearSolve {
        iterations: cap,
        residual: rr.sqrt() / bnorm,
    })
}

/// Block shift-invert subspace iteration with Rayleigh–Ritz projection.
fn subspace_pairs(h: &DiscreteHamiltonian, k: usize) -> Result<Vec<(f64, Vec<f64>, usize)>, SchrodingerError> {
    const MAX_ITERATIONS: usize = 300;
    let n = h.len();
    let p = (k + 4).min(n);
    let scale0 = energy_scale(h, 0.0);
    let sigma = h.lower_bound() - scale0;
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let mut block: Vec<Vec<f64>> = (0..p)
        .map(|_| (0..n).map(|_| rng.random_range(-1.0..1.0)).collect())
        .collect();
    let mut ritz = vec![sigma; p];
    let mut history = Vec::new();
    for it in 1..=MAX_ITERATIONS {
        let mut next = Vec::with_capacity(p);
        for (x, &theta) in block.iter().zip(&ritz) {
            let mut y: Vec<f64> = x.iter().map(|v| v / (theta - sigma).max(scale0)).collect();
            shifted_cg(h, sigma, x, &mut y)?;
            next.push(y);
        }
        let (values, vectors) = rayleigh_ritz(h, &next)?;
        block = vectors;
        ritz = values;
        let worst = (0..k)
            .map(|j| relative_residual(h, &block[j], ritz[j]))
            .fold(0.0, f64::max);
        history.push(worst);
        if worst <= 0.1 * EIGEN_RESIDUAL_TOLERANCE {
            return Ok((0..k)
                .map(|j| (ritz[j], block[j].clone(), it))
                .collect());
        }
    }
    Err(SchrodingerError::NonConvergence {
        iterations: MAX_ITERATIONS,
        history,
    })
}

fn rayleigh_ritz(h: &DiscreteHamiltonian, basis: &[Vec<f64>]) -> Result<(Vec<f64>, Vec<Vec<f64>>), SchrodingerError> {
    let p = basis.len();
    let n = h.len();
    let hb: Vec<Vec<f64>> = basis
        .iter()
        .map(|x| {
            let mut y = vec![0.0; n];
            h.apply_real(x, &mut y);
            y
        })
        .collect();
    let gram = DMatrix::from_fn(p, p, |i, j| h.inner_real(&basis[i], &basis[j]));
    let proj = DMatrix::from_fn(p, p, |i, j| 0.5 * (h.inner_real(&basis[i], &hb[j]) + h.inner_real(&hb[i], &basis[j])));
    let chol = gram
        .cholesky()
        .ok_or_else(|| SchrodingerError::InvalidArgument("subspace basis collapsed".into()))?;
    let l = chol.l();
    let linv = l
        .clone()
        .try_inverse()
        .ok_or_else(|| SchrodingerError::InvalidArgument("subspace basis collapsed".into()))?;
    let c = &linv * proj * linv.transpose();
    let c = 0.5 * (&c + c.transpose());
    let eig = SymmetricEigen::new(c);
    let mut order: Vec<usize> = (0..p).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let coeffs = linv.transpose() * &eig.eigenvectors;
    let values = order.iter().map(|&j| eig.eigenvalues[j]).collect();
    let vectors = order
        .iter()
        .map(|&j| {
            let mut v = vec![0.0; n];
            for (i, b) in basis.iter().enumerate() {
                let c = coeffs[(i, j)];
                v.iter_mut().zip(b).for_each(|(v, b)| *v += c * b);
            }
            let s = h.inner_real(&v, &v).sqrt();
            v.iter_mut().for_each(|x| *x /= s);
            v
        })
        .collect();
    Ok((values, vectors))
}

/// Per-snapshot diagnostics.
#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct StepDiagnostic {
    pub step: usize,
    pub t: f64,
    pub norm: f64,
    pub energy: f64,
    /// `|<psi_0|psi(t)>|`.
    pub overlap: f64,
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    pub dt: f64,
    pub states: Vec<WaveFunction>,
    pub diagnostics: Vec<StepDiagnostic>,
    /// Largest per-step change of the norm.
    pub max_step_norm_drift: f64,
}

impl Trajectory {
    pub fn last(&self) -> &WaveFunction {
        self.states.last().expect("trajectory holds the initial state")
    }

    pub fn ledger_json(&self) -> serde_json::Value {
        serde_json::json!({
            "dt": self.dt,
            "max_step_norm_drift": self.max_step_norm_drift,
            "snapshots": self.diagnostics,
        })
    }
}

enum CnSolver {
    Banded(TridiagonalLu<Complex64>),
    Iterative,
}

/// Crank–Nicolson propagator for a fixed Hamiltonian and step.
pub struct CrankNicolson {
    h: DiscreteHamiltonian,
    alpha: f64,
    solver: CnSolver,
}

impl CrankNicolson {
    pub fn new(spec: &HamiltonianSpec, dt: f64) -> Result<Self, SchrodingerError> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(SchrodingerError::InvalidArgument(format!("dt must be positive, got {dt}")));
        }
        let h = DiscreteHamiltonian::build(spec)?;
        let alpha = dt / (2.0 * spec.hbar);
        let i = Complex64::i();
        let solver = if h.is_tridiagonal() {
            let (sub, diag, sup) = h.bands();
            let sub: Vec<Complex64> = sub.iter().map(|v| i * alpha * v).collect();
            let sup: Vec<Complex64> = sup.iter().map(|v| i * alpha * v).collect();
            let diag: Vec<Complex64> = diag.iter().map(|v| 1.0 + i * alpha * v).collect();
            match TridiagonalLu::factor(&sub, &diag, &sup, None) {
                Some(lu) => CnSolver::Banded(lu),
                None => CnSolver::Iterative,
            }
        } else {
            CnSolver::Iterative
        };
        Ok(Self { h, alpha, solver })
    }

    pub fn hamiltonian(&self) -> &DiscreteHamiltonian {
        &self.h
    }

    /// One step `(I + i a H) psi' = (I - i a H) psi`.
    pub fn step(&self, psi: &[Complex64]) -> Result<Vec<Complex64>, SchrodingerError> {
        let n = psi.len();
        let i = Complex64::i();
        let mut hp = vec![Complex64::new(0.0, 0.0); n];
        self.h.apply(psi, &mut hp);
        let rhs: Vec<Complex64> = psi.iter().zip(&hp).map(|(p, h)| p - i * self.alpha * h).collect();
        match &self.solver {
            CnSolver::Banded(lu) => {
                let mut x = rhs;
                lu.solve_in_place(&mut x);
                Ok(x)
            }
            CnSolver::Iterative => self.solve_normal(&rhs, psi),
        }
    }

    /// CG on `(I + a^2 H^2) x = (I - i a H) rhs`, self-adjoint under the weights.
    fn solve_normal(&self, rhs: &[Complex64], guess: &[Complex64]) -> Result<Vec<Complex64>, SchrodingerError> {
        let n = rhs.len();
        let a = self.alpha;
        let i = Complex64::i();
        let h = &self.h;
        let mut tmp = vec![Complex64::new(0.0, 0.0); n];
        let mut tmp2 = vec![Complex64::new(0.0, 0.0); n];
        let mut normal = |v: &[Complex64], out: &mut [Complex64]| {
            h.apply(v, &mut tmp);
            h.apply(&tmp, &mut tmp2);
            for k in 0..n {
                out[k] = v[k] + a * a * tmp2[k];
            }
        };
        let mut b = vec![Complex64::new(0.0, 0.0); n];
        h.apply(rhs, &mut b);
        for k in 0..n {
            b[k] = rhs[k] - i * a * b[k];
        }
        let mut x = guess.to_vec();
        let mut ax = vec![Complex64::new(0.0, 0.0); n];
        normal(&x, &mut ax);
        let mut r: Vec<Complex64> = b.iter().zip(&ax).map(|(b, a)| b - a).collect();
        let mut p = r.clone();
        let bnorm = h.norm(&b).max(f64::MIN_POSITIVE);
        let mut rr = h.inner(&r, &r).re;
        let cap = 10 * n + 100;
        for _ in 0..cap {
            if rr.sqrt() <= LINEAR_SOLVE_TOLERANCE * bnorm {
                return Ok(x);
            }
            normal(&p, &mut ax);
            let alpha = rr / h.inner(&p, &ax).re;
            for k in 0..n {
                x[k] += alpha * p[k];
                r[k] -= alpha * ax[k];
            }
            let rr_new = h.inner(&r, &r).re;
            let beta = rr_new / rr;
            rr = rr_new;
            for k in 0..n {
                p[k] = r[k] + beta * p[k];
            }
        }
        Err(SchrodingerError::LinearSolve {
            iterations: cap,
            residual: rr.sqrt() / bnorm,
        })
    }

    /// `<psi|H|psi> / <psi|psi>` without the uniform terms.
    pub fn expectation(&self, psi: &[Complex64]) -> f64 {
        let mut hp = vec![Complex64::new(0.0, 0.0); psi.len()];
        self.h.apply(psi, &mut hp);
        self.h.inner(psi, &hp).re / self.h.inner(psi, psi).re
    }
}

fn check_state(spec: &HamiltonianSpec, psi0: &WaveFunction) -> Result<(), SchrodingerError> {
    spec.potential.grid().ensure_same(psi0.grid())?;
    if psi0.mass() != spec.mass || psi0.hbar() != spec.hbar {
        return Err(SchrodingerError::InvalidArgument(
            "wave function mass/hbar differ from the Hamiltonian".into(),
        ));
    }
    Ok(())
}

/// Propagates `psi0` for `n_steps`, recording every snapshot.
pub fn evolve(
    spec: &HamiltonianSpec,
    psi0: &WaveFunction,
    dt: f64,
    n_steps: usize,
) -> Result<Trajectory, SchrodingerError> {
    evolve_strided(spec, psi0, dt, n_steps, 1)
}

/// As [`evolve`], keeping every `stride`-th snapshot plus the final one.
///
/// Uniform energy terms commute with the Hamiltonian and are applied as the
/// exact phase factor `exp(-i E dt / hbar)` after each step.
pub fn evolve_strided(
    spec: &HamiltonianSpec,
    psi0: &WaveFunction,
    dt: f64,
    n_steps: usize,
    stride: usize,
) -> Result<Trajectory, SchrodingerError> {
    check_state(spec, psi0)?;
    if stride == 0 {
        return Err(SchrodingerError::InvalidArgument("stride must be positive".into()));
    }
    let cn = CrankNicolson::new(spec, dt)?;
    let grid = psi0.grid().clone();
    let (mass, hbar) = (psi0.mass(), psi0.hbar());
    let wrap = |amps: Vec<Complex64>| WaveFunction::from_parts_unchecked(grid.clone(), amps, mass, hbar);
    let h = cn.hamiltonian();
    let first = psi0.amplitudes().to_vec();
    let norm0 = h.norm(&first);
    let diag = |step: usize, amps: &[Complex64], uniform: f64| StepDiagnostic {
        step,
        t: step as f64 * dt,
        norm: h.norm(amps).powi(2),
        energy: cn.expectation(amps) + uniform,
        overlap: h.inner(&first, amps).norm() / (norm0 * norm0),
    };
    let mut uniform = spec.uniform_energy(psi0)?;
    let mut diagnostics = vec![diag(0, &first, uniform)];
    let mut states = vec![psi0.clone()];
    let mut current = first.clone();
    let mut last_norm = norm0;
    let mut max_drift: f64 = 0.0;
    for step in 1..=n_steps {
        let mut next = cn.step(&current)?;
        if uniform != 0.0 {
            let rot = Complex64::from_polar(1.0, -uniform * dt / hbar);
            next.iter_mut().for_each(|a| *a *= rot);
        }
        let norm = h.norm(&next);
        if !norm.is_finite() || (norm - norm0).abs() > INSTABILITY_NORM_DRIFT * norm0 {
            return Err(SchrodingerError::Unstable { step, norm });
        }
        max_drift = max_drift.max(((norm * norm) - (last_norm * last_norm)).abs());
        last_norm = norm;
        current = next;
        if matches!(spec.coupling, Some(CouplingTerm::Functional { .. })) {
            uniform = spec.uniform_energy(&wrap(current.clone()))?;
        }
        if step % stride == 0 || step == n_steps {
            diagnostics.push(diag(step, &current, uniform));
            states.push(wrap(current.clone()));
        }
    }
    Ok(Trajectory {
        dt,
        states,
        diagnostics,
        max_step_norm_drift: max_drift,
    })
}

/// Minimal-coupling propagation; requires a vector potential.
pub fn evolve_magnetic(
    spec: &HamiltonianSpec,
    psi0: &WaveFunction,
    dt: f64,
    n_steps: usize,
) -> Result<Trajectory, SchrodingerError> {
    if spec.vector_potential.is_none() {
        return Err(SchrodingerError::InvalidSpec("evolve_magnetic needs a vector potential".into()));
    }
    evolve(spec, psi0, dt, n_steps)
}

/// `<psi| -i hbar d/dx_axis |psi>` with the link-centred difference.
pub fn canonical_momentum(psi: &WaveFunction, axis: usize) -> Result<f64, SchrodingerError> {
    let g = psi.grid();
    if g.geometry() != Geometry::Cartesian || axis >= g.ndim() {
        return Err(SchrodingerError::InvalidArgument("canonical momentum needs a Cartesian axis".into()));
    }
    let a = psi.amplitudes();
    let h = g.spacing()[axis];
    let stride = g.stride(axis);
    let dim = g.dims()[axis];
    let w = g.weights();
    let mut total = Complex64::new(0.0, 0.0);
    for k in 0..g.len() {
        let i = g.multi_index(k)[axis];
        let (prev, next) = match g.boundary() {
            Boundary::Periodic => (
                if i == 0 { a[k + (dim - 1) * stride] } else { a[k - stride] },
                if i + 1 == dim { a[k - (dim - 1) * stride] } else { a[k + stride] },
            ),
            _ => (
                if i == 0 { Complex64::new(0.0, 0.0) } else { a[k - stride] },
                if i + 1 == dim { Complex64::new(0.0, 0.0) } else { a[k + stride] },
            ),
        };
        let d = (next - prev) / (2.0 * h);
        total += a[k].conj() * (-Complex64::i() * psi.hbar()) * d * w[k];
    }
    Ok(total.re / psi.norm_squared())
}

/// Density, osmotic, transition and drift velocities of one wave function.
#[derive(Debug, Clone)]
pub struct MadelungFields {
    pub rho: ScalarField,
    pub u: VectorField,
    pub upsilon: VectorField,
    pub b: VectorField,
    pub b_star: VectorField,
}

/// `u = (hbar/m) grad(R)`, `upsilon = (hbar/m) grad(S) - v`, `b, b* = upsilon +- u`.
pub fn madelung_fields(psi: &WaveFunction, v: &VectorField) -> Result<MadelungFields, SchrodingerError> {
    psi.grid().ensure_same(v.grid())?;
    let rho = density_from_wavefunction(psi)?;
    let (r, s) = phase_and_amplitude(psi)?;
    let k = psi.hbar() / psi.mass();
    let u = gradient(&r).scale(k);
    let upsilon = transition_velocity(&s, v, psi.mass(), psi.hbar())?;
    let (b, b_star) = drift_fields(&upsilon, &u)?;
    Ok(MadelungFields {
        rho,
        u,
        upsilon,
        b,
        b_star,
    })
}

#[cfg(test)]
mod tests;
