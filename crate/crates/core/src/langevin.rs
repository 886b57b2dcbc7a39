//! Langevin path ensembles, mean forward/backward derivatives and
//! diffusion-constant recovery.
//!
//! Paths follow the Euler–Maruyama update
//! `x' = x + (b + F/xi) dt + sqrt(2 beta dt) n` with `n` standard normal per
//! axis, so a single step has variance `2 beta dt` per axis.
//!
//! Every path draws from its own ChaCha8 stream: the generator is seeded with
//! the master seed and the stream id is set to the path index. A path's noise
//! therefore depends only on `(master_seed, path_index)` and never on how
//! paths are scheduled across threads.

use std::f64::consts::PI;
use std::io::Write;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::fields::ops::{advective, advective_scalar, interpolate, laplacian, vector_laplacian};
use crate::fields::{FieldError, Grid, ScalarField, TimePair, VectorField};
use crate::stats::{linear_fit, pairwise_sum_by, LinearFit};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LangevinError {
    #[error("invalid stepper config: {0}")]
    InvalidConfig(String),
    #[error("non-finite drift on path {path} at step {step}")]
    NonFiniteDrift { path: usize, step: usize },
    #[error("transient cut {cut} s is shorter than 5 m/xi = {required} s")]
    TransientTooShort { cut: f64, required: f64 },
    #[error("ensemble too short: {0}")]
    TooShort(String),
    #[error("relaxation has no asymptote without friction")]
    NoAsymptote,
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error(transparent)]
    Field(#[from] FieldError),
}

/// Deterministic external force acting through the friction, `drift += F / xi`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ExternalForce {
    #[default]
    None,
    /// Uniform force (N).
    Constant { force: [f64; 3] },
    /// `F = -k (x - centre)`.
    Harmonic { stiffness: f64, centre: [f64; 3] },
}

impl ExternalForce {
    pub fn eval(&self, x: &[f64; 3]) -> [f64; 3] {
        match *self {
            ExternalForce::None => [0.0; 3],
            ExternalForce::Constant { force } => force,
            ExternalForce::Harmonic { stiffness, centre } => {
                [0, 1, 2].map(|a| -stiffness * (x[a] - centre[a]))
            }
        }
    }

    fn is_none(&self) -> bool {
        matches!(self, ExternalForce::None)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepperConfig {
    pub dt: f64,
    pub n_steps: usize,
    pub n_paths: usize,
    /// Diffusion constant (m^2/s).
    pub beta: f64,
    pub master_seed: u64,
    pub mass: f64,
    /// Friction coefficient xi (kg/s).
    pub friction: f64,
    pub dim: usize,
    pub initial_position: [f64; 3],
    /// Keep every `record_stride`-th step (the final step is always kept).
    pub record_stride: usize,
    #[serde(default)]
    pub external_force: ExternalForce,
}

impl StepperConfig {
    /// Free diffusion from the origin with every step recorded.
    pub fn free(dt: f64, n_steps: usize, n_paths: usize, beta: f64, seed: u64, dim: usize) -> Self {
        Self {
            dt,
            n_steps,
            n_paths,
            beta,
            master_seed: seed,
            mass: 1.0,
            friction: 0.0,
            dim,
            initial_position: [0.0; 3],
            record_stride: 1,
            external_force: ExternalForce::None,
        }
    }

    pub fn validate(&self) -> Result<(), LangevinError> {
        let bad = |m: String| Err(LangevinError::InvalidConfig(m));
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return bad(format!("dt must be positive, got {}", self.dt));
        }
        if self.n_paths == 0 {
            return bad("n_paths must be at least 1".into());
        }
        if !(self.beta >= 0.0 && self.beta.is_finite()) {
            return bad(format!("beta must be non-negative, got {}", self.beta));
        }
        if !(self.friction >= 0.0 && self.friction.is_finite()) {
            return bad(format!("friction must be non-negative, got {}", self.friction));
        }
        if !(self.mass > 0.0 && self.mass.is_finite()) {
            return bad(format!("mass must be positive, got {}", self.mass));
        }
        if !(1..=3).contains(&self.dim) {
            return bad(format!("dim must be 1, 2 or 3, got {}", self.dim));
        }
        if self.record_stride == 0 {
            return bad("record_stride must be at least 1".into());
        }
        if !self.external_force.is_none() && self.friction == 0.0 {
            return bad("an external force needs positive friction".into());
        }
        Ok(())
    }

    /// Step indices that are stored in the ensemble.
    pub fn recorded_steps(&self) -> Vec<usize> {
        let mut steps: Vec<usize> = (0..=self.n_steps).step_by(self.record_stride).collect();
        if *steps.last().unwrap() != self.n_steps {
            steps.push(self.n_steps);
        }
        steps
    }
}

/// Drift velocity `b(x, t)`.
pub trait Drift: Sync {
    fn eval(&self, x: &[f64; 3], t: f64) -> [f64; 3];

    /// Spatial dimension the drift is defined for, if fixed.
    fn dim(&self) -> Option<usize> {
        None
    }
}

pub struct ZeroDrift;

impl Drift for ZeroDrift {
    fn eval(&self, _: &[f64; 3], _: f64) -> [f64; 3] {
        [0.0; 3]
    }
}

/// `b(x) = M x + offset`.
pub struct LinearDrift {
    pub matrix: [[f64; 3]; 3],
    pub offset: [f64; 3],
}

impl LinearDrift {
    /// Isotropic restoring drift `b = -omega x`.
    pub fn restoring(omega: f64) -> Self {
        let mut matrix = [[0.0; 3]; 3];
        for (a, row) in matrix.iter_mut().enumerate() {
            row[a] = -omega;
        }
        Self {
            matrix,
            offset: [0.0; 3],
        }
    }
}

impl Drift for LinearDrift {
    fn eval(&self, x: &[f64; 3], _: f64) -> [f64; 3] {
        [0, 1, 2].map(|a| {
            self.offset[a] + (0..3).map(|b| self.matrix[a][b] * x[b]).sum::<f64>()
        })
    }
}

/// Drift sampled on a grid and interpolated multilinearly.
pub struct GridDrift(pub VectorField);

impl Drift for GridDrift {
    fn eval(&self, x: &[f64; 3], _: f64) -> [f64; 3] {
        let g = self.0.grid();
        let mut out = [0.0; 3];
        for (a, o) in out.iter_mut().enumerate().take(g.ndim()) {
            *o = interpolate(g, self.0.component(a), &x[..g.ndim()]);
        }
        out
    }

    fn dim(&self) -> Option<usize> {
        Some(self.0.grid().ndim())
    }
}

/// Drift given by a closure.
pub struct FnDrift<F>(pub F);

impl<F: Fn(&[f64; 3], f64) -> [f64; 3] + Sync> Drift for FnDrift<F> {
    fn eval(&self, x: &[f64; 3], t: f64) -> [f64; 3] {
        (self.0)(x, t)
    }
}

/// One Euler–Maruyama update, `pos + drift dt + sqrt(2 beta dt) noise`.
pub fn euler_maruyama_step(
    pos: [f64; 3],
    drift: [f64; 3],
    beta: f64,
    dt: f64,
    noise: [f64; 3],
) -> [f64; 3] {
    let s = (2.0 * beta * dt).sqrt();
    [0, 1, 2].map(|a| pos[a] + drift[a] * dt + s * noise[a])
}

/// Generator for path `path` of an ensemble seeded with `master_seed`.
pub fn path_rng(master_seed: u64, path: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(path as u64);
    rng
}

#[derive(Debug, Clone, PartialEq)]
pub struct PathEnsemble {
    times: Vec<f64>,
    /// `n_paths x n_records x dim`, path-major.
    positions: Vec<f64>,
    config: StepperConfig,
}

impl PathEnsemble {
    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn config(&self) -> &StepperConfig {
        &self.config
    }

    pub fn n_paths(&self) -> usize {
        self.config.n_paths
    }

    pub fn n_records(&self) -> usize {
        self.times.len()
    }

    pub fn dim(&self) -> usize {
        self.config.dim
    }

    /// Position of `path` at record `rec`.
    pub fn position(&self, path: usize, rec: usize) -> &[f64] {
        let d = self.dim();
        let k = (path * self.n_records() + rec) * d;
        &self.positions[k..k + d]
    }

    pub fn positions(&self) -> &[f64] {
        &self.positions
    }

    /// Coordinates along `axis` of every path at record `rec`.
    pub fn snapshot(&self, rec: usize, axis: usize) -> Vec<f64> {
        (0..self.n_paths())
            .map(|p| self.position(p, rec)[axis])
            .collect()
    }

    /// CSV rows `time,path,x[,y[,z]]`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        let axes = ["x", "y", "z"];
        writeln!(w, "time,path,{}", axes[..self.dim()].join(","))?;
        for p in 0..self.n_paths() {
            for (r, t) in self.times.iter().enumerate() {
                let coords: Vec<String> =
                    self.position(p, r).iter().map(|x| format!("{x:e}")).collect();
                writeln!(w, "{t:e},{p},{}", coords.join(","))?;
            }
        }
        Ok(())
    }
}

/// Simulates `config.n_paths` independent paths in parallel.
pub fn simulate_ensemble<D: Drift + ?Sized>(
    config: &StepperConfig,
    drift: &D,
) -> Result<PathEnsemble, LangevinError> {
    config.validate()?;
    if let Some(d) = drift.dim() {
        if d != config.dim {
            return Err(LangevinError::InvalidConfig(format!(
                "drift is {d}-D but the stepper is {}-D",
                config.dim
            )));
        }
    }
    let steps = config.recorded_steps();
    let times: Vec<f64> = steps.iter().map(|&s| s as f64 * config.dt).collect();
    let dim = config.dim;
    let per_path = steps.len() * dim;
    let mut positions = vec![0.0; config.n_paths * per_path];

    let failures: Vec<Option<usize>> = positions
        .par_chunks_mut(per_path)
        .enumerate()
        .map(|(path, out)| run_path(config, drift, path, &steps, out).err())
        .collect();
    if let Some((path, step)) = failures
        .iter()
        .enumerate()
        .find_map(|(p, f)| f.map(|s| (p, s)))
    {
        return Err(LangevinError::NonFiniteDrift { path, step });
    }
    Ok(PathEnsemble {
        times,
        positions,
        config: config.clone(),
    })
}

/// Integrates one path, writing recorded positions into `out`. Returns the
/// failing step on a non-finite drift.
fn run_path<D: Drift + ?Sized>(
    config: &StepperConfig,
    drift: &D,
    path: usize,
    steps: &[usize],
    out: &mut [f64],
) -> Result<(), usize> {
    let dim = config.dim;
    let mut rng = path_rng(config.master_seed, path);
    let mut x = config.initial_position;
    for a in dim..3 {
        x[a] = 0.0;
    }
    let record = |x: &[f64; 3], r: usize, out: &mut [f64]| {
        out[r * dim..(r + 1) * dim].copy_from_slice(&x[..dim]);
    };
    record(&x, 0, out);
    let mut next = 1;
    for step in 0..config.n_steps {
        let t = step as f64 * config.dt;
        let mut b = drift.eval(&x, t);
        if !config.external_force.is_none() {
            let f = config.external_force.eval(&x);
            for a in 0..3 {
                b[a] += f[a] / config.friction;
            }
        }
        if b[..dim].iter().any(|v| !v.is_finite()) {
            return Err(step);
        }
        let mut noise = [0.0; 3];
        for n in noise.iter_mut().take(dim) {
            *n = StandardNormal.sample(&mut rng);
        }
        for a in dim..3 {
            b[a] = 0.0;
        }
        x = euler_maruyama_step(x, b, config.beta, config.dt, noise);
        if next < steps.len() && steps[next] == step + 1 {
            record(&x, next, out);
            next += 1;
        }
    }
    Ok(())
}

/// Friction coefficient `xi = 4 pi m nu`.
pub fn friction_coefficient(mass: f64, frequency: f64) -> Result<f64, LangevinError> {
    if !(mass > 0.0) || !(frequency >= 0.0) || !frequency.is_finite() {
        return Err(LangevinError::InvalidArgument(format!(
            "need m > 0 and nu >= 0, got m = {mass}, nu = {frequency}"
        )));
    }
    Ok(4.0 * PI * mass * frequency)
}

/// `alpha(t) = 2 h nu / xi + C exp(-xi t / m)`.
pub fn alpha_relaxation(
    t: f64,
    h_nu: f64,
    friction: f64,
    mass: f64,
    c: f64,
) -> Result<f64, LangevinError> {
    Ok(alpha_asymptote(h_nu, friction)? + c * (-friction * t / mass).exp())
}

/// Long-time limit `2 h nu / xi`.
pub fn alpha_asymptote(h_nu: f64, friction: f64) -> Result<f64, LangevinError> {
    if !(friction > 0.0) {
        return Err(LangevinError::NoAsymptote);
    }
    Ok(2.0 * h_nu / friction)
}

/// Mean squared displacement curve and the fitted diffusion constant.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MsdResult {
    pub times: Vec<f64>,
    pub msd: Vec<f64>,
    /// `slope / (2 dim)` over `t > transient_cut`.
    pub beta_hat: f64,
    pub fit: LinearFit,
    pub transient_cut: f64,
}

/// Minimum number of paths [`msd_and_diffusion`] accepts.
pub const MIN_MSD_PATHS: usize = 100;

pub fn msd_and_diffusion(
    ensemble: &PathEnsemble,
    transient_cut: f64,
) -> Result<MsdResult, LangevinError> {
    let cfg = ensemble.config();
    if ensemble.n_paths() < MIN_MSD_PATHS {
        return Err(LangevinError::TooShort(format!(
            "{} paths, need at least {MIN_MSD_PATHS}",
            ensemble.n_paths()
        )));
    }
    if cfg.friction > 0.0 {
        let required = 5.0 * cfg.mass / cfg.friction;
        if transient_cut < required {
            return Err(LangevinError::TransientTooShort {
                cut: transient_cut,
                required,
            });
        }
    }
    let n = ensemble.n_paths();
    let msd: Vec<f64> = (0..ensemble.n_records())
        .map(|r| {
            pairwise_sum_by(n, |p| {
                let x = ensemble.position(p, r);
                let x0 = ensemble.position(p, 0);
                x.iter().zip(x0).map(|(a, b)| (a - b).powi(2)).sum::<f64>()
            }) / n as f64
        })
        .collect();
    let (t_fit, y_fit): (Vec<f64>, Vec<f64>) = ensemble
        .times()
        .iter()
        .zip(&msd)
        .filter(|(t, _)| **t > transient_cut)
        .map(|(t, y)| (*t, *y))
        .unzip();
    let fit = linear_fit(&t_fit, &y_fit).ok_or_else(|| {
        LangevinError::TooShort(format!(
            "{} recorded times after the transient cut, need at least 2",
            t_fit.len()
        ))
    })?;
    Ok(MsdResult {
        times: ensemble.times().to_vec(),
        msd,
        beta_hat: fit.slope / (2.0 * ensemble.dim() as f64),
        fit,
        transient_cut,
    })
}

/// Fields the mean derivatives act on.
pub trait DiffusionOperand: Clone + Sized {
    fn grid(&self) -> &Grid;
    /// `a + s b`.
    fn axpy(&self, s: f64, other: &Self) -> Result<Self, FieldError>;
    fn scale(&self, s: f64) -> Self;
    fn advect(&self, drift: &VectorField) -> Self;
    fn laplace(&self) -> Self;
}

impl DiffusionOperand for ScalarField {
    fn grid(&self) -> &Grid {
        ScalarField::grid(self)
    }
    fn axpy(&self, s: f64, other: &Self) -> Result<Self, FieldError> {
        ScalarField::axpy(self, s, other)
    }
    fn scale(&self, s: f64) -> Self {
        ScalarField::scale(self, s)
    }
    fn advect(&self, drift: &VectorField) -> Self {
        advective_scalar(drift, self)
    }
    fn laplace(&self) -> Self {
        laplacian(self)
    }
}

impl DiffusionOperand for VectorField {
    fn grid(&self) -> &Grid {
        VectorField::grid(self)
    }
    fn axpy(&self, s: f64, other: &Self) -> Result<Self, FieldError> {
        VectorField::axpy(self, s, other)
    }
    fn scale(&self, s: f64) -> Self {
        VectorField::scale(self, s)
    }
    fn advect(&self, drift: &VectorField) -> Self {
        advective(drift, self)
    }
    fn laplace(&self) -> Self {
        vector_laplacian(self)
    }
}

fn mean_derivative<T: DiffusionOperand>(
    f: &TimePair<T>,
    drift: &VectorField,
    beta: f64,
    sign: f64,
) -> Result<T, LangevinError> {
    f.earlier.grid().ensure_same(f.later.grid())?;
    f.earlier.grid().ensure_same(drift.grid())?;
    if !(f.dt > 0.0 && f.dt.is_finite()) {
        return Err(LangevinError::InvalidArgument(format!(
            "time separation must be positive, got {}",
            f.dt
        )));
    }
    let dfdt = f.later.axpy(-1.0, &f.earlier)?.scale(1.0 / f.dt);
    let mid = f.earlier.axpy(1.0, &f.later)?.scale(0.5);
    let out = dfdt
        .axpy(1.0, &mid.advect(drift))?
        .axpy(sign * beta, &mid.laplace())?;
    Ok(out)
}

/// `D f = df/dt + (b . grad) f + beta lap f`. Spatial terms use the mean of
/// the two slices.
pub fn mean_forward_derivative<T: DiffusionOperand>(
    f: &TimePair<T>,
    b: &VectorField,
    beta: f64,
) -> Result<T, LangevinError> {
    mean_derivative(f, b, beta, 1.0)
}

/// `D* f = df/dt + (b* . grad) f - beta lap f`.
pub fn mean_backward_derivative<T: DiffusionOperand>(
    f: &TimePair<T>,
    b_star: &VectorField,
    beta: f64,
) -> Result<T, LangevinError> {
    mean_derivative(f, b_star, beta, -1.0)
}

/// Mean acceleration `(D D* + D* D) x / 2`.
///
/// The inner derivative is taken on each time slice with that slice's drift;
/// the outer one uses the mean drift of the pair.
pub fn mean_acceleration(
    x: &TimePair<VectorField>,
    b: &TimePair<VectorField>,
    b_star: &TimePair<VectorField>,
    beta: f64,
) -> Result<VectorField, LangevinError> {
    let dxdt = x.later.axpy(-1.0, &x.earlier)?.scale(1.0 / x.dt);
    let inner = |drift: &VectorField, xs: &VectorField, sign: f64| -> Result<VectorField, LangevinError> {
        Ok(dxdt
            .axpy(1.0, &xs.advect(drift))?
            .axpy(sign * beta, &xs.laplace())?)
    };
    let pair = |first: &TimePair<VectorField>, sign: f64| -> Result<TimePair<VectorField>, LangevinError> {
        Ok(TimePair::new(
            inner(&first.earlier, &x.earlier, sign)?,
            inner(&first.later, &x.later, sign)?,
            x.dt,
        ))
    };
    let mid = |p: &TimePair<VectorField>| -> Result<VectorField, LangevinError> {
        Ok(p.earlier.axpy(1.0, &p.later)?.scale(0.5))
    };
    let dd_star = mean_forward_derivative(&pair(b_star, -1.0)?, &mid(b)?, beta)?;
    let d_star_d = mean_backward_derivative(&pair(b, 1.0)?, &mid(b_star)?, beta)?;
    Ok(dd_star.axpy(1.0, &d_star_d)?.scale(0.5))
}
