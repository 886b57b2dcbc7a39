//! Forward/backward modified Fokker–Planck evolution and the continuity,
//! stationarity and coupled-field residuals.
//!
//! The centred scheme is written in flux form, `drho/dt = -Div(J)` with
//! `J = w rho - s beta G(rho)`, where `G` and `Div` share one central stencil
//! and `s = +1` (forward) or `-1` (backward). Sharing the stencil makes the
//! half-sum and half-difference identities hold node by node, and on
//! reflecting grids zeroing the wall-normal flux conserves the trapezoid
//! mass exactly. Dirichlet axes use zero ghost nodes and lose mass through
//! the walls; periodic axes wrap.

use serde::Serialize;
use thiserror::Error;

use crate::fields::ops::{advective, divergence, gradient, vector_laplacian};
use crate::fields::{Boundary, FieldError, Geometry, Grid, ScalarField, TimePair, VectorField};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FpError {
    #[error("time step {dt} exceeds the stability bound {bound}")]
    Unstable { dt: f64, bound: f64 },
    #[error("clipped negative mass {clipped} exceeds {limit} of the total")]
    ClippedMass { clipped: f64, limit: f64 },
    #[error("invalid state: {0}")]
    InvalidState(String),
    #[error(transparent)]
    Field(#[from] FieldError),
}

/// Density, total drift (`b + v` or `b* + v`), diffusion constant and time.
#[derive(Debug, Clone, PartialEq)]
pub struct FPState {
    pub rho: ScalarField,
    pub drift_total: VectorField,
    pub beta: f64,
    pub t: f64,
}

impl FPState {
    pub fn new(rho: ScalarField, drift_total: VectorField, beta: f64, t: f64) -> Result<Self, FpError> {
        let s = Self {
            rho,
            drift_total,
            beta,
            t,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<(), FpError> {
        self.rho.grid().ensure_same(self.drift_total.grid())?;
        if self.rho.grid().geometry() != Geometry::Cartesian {
            return Err(FpError::InvalidState(
                "Fokker-Planck evolution needs a Cartesian grid".into(),
            ));
        }
        if !(self.beta >= 0.0 && self.beta.is_finite()) {
            return Err(FpError::InvalidState(format!("beta must be non-negative, got {}", self.beta)));
        }
        if self.rho.min() < -NEGATIVE_TOLERANCE {
            return Err(FpError::InvalidState(format!("negative density {}", self.rho.min())));
        }
        Ok(())
    }

    pub fn mass(&self) -> f64 {
        self.rho.integral()
    }
}

/// Densities above `-NEGATIVE_TOLERANCE` count as non-negative.
pub const NEGATIVE_TOLERANCE: f64 = 1e-14;

/// Sense of the diffusion term.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    /// `+beta lap rho`.
    Forward,
    /// `-beta lap rho` (anti-diffusive).
    Backward,
}

impl Direction {
    fn sign(self) -> f64 {
        match self {
            Direction::Forward => 1.0,
            Direction::Backward => -1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum FluxScheme {
    #[default]
    Centered,
    /// Donor-cell advective face fluxes with compact diffusion.
    Upwind,
}

/// Flux-form first derivative: periodic wrap, zero ghosts on Dirichlet axes,
/// one-sided at reflecting walls.
fn flux_derivative(grid: &Grid, values: &[f64], axis: usize) -> Vec<f64> {
    let n = grid.dims()[axis];
    let stride = grid.stride(axis);
    let h = grid.spacing()[axis];
    let bc = grid.boundary();
    (0..values.len())
        .map(|k| {
            let i = (k / stride) % n;
            let at = |j: isize| -> f64 {
                let jj = match bc {
                    Boundary::Periodic => j.rem_euclid(n as isize) as usize,
                    _ if j < 0 || j >= n as isize => return 0.0,
                    _ => j as usize,
                };
                values[k - i * stride + jj * stride]
            };
            let i = i as isize;
            if bc == Boundary::Reflecting && i == 0 {
                (at(1) - at(0)) / h
            } else if bc == Boundary::Reflecting && i == n as isize - 1 {
                (at(i) - at(i - 1)) / h
            } else {
                (at(i + 1) - at(i - 1)) / (2.0 * h)
            }
        })
        .collect()
}

fn is_wall(grid: &Grid, k: usize, axis: usize) -> bool {
    let n = grid.dims()[axis];
    let i = (k / grid.stride(axis)) % n;
    i == 0 || i + 1 == n
}

/// `Div(J)` with the wall-normal flux removed on reflecting grids.
fn flux_divergence(grid: &Grid, flux: &[Vec<f64>]) -> Vec<f64> {
    let mut acc = vec![0.0; grid.len()];
    for (a, comp) in flux.iter().enumerate() {
        let d = if grid.boundary() == Boundary::Reflecting {
            let masked: Vec<f64> = comp
                .iter()
                .enumerate()
                .map(|(k, &j)| if is_wall(grid, k, a) { 0.0 } else { j })
                .collect();
            flux_derivative(grid, &masked, a)
        } else {
            flux_derivative(grid, comp, a)
        };
        for (s, v) in acc.iter_mut().zip(d) {
            *s += v;
        }
    }
    acc
}

fn flux_gradient(grid: &Grid, values: &[f64]) -> Vec<Vec<f64>> {
    (0..grid.ndim())
        .map(|a| flux_derivative(grid, values, a))
        .collect()
}

fn check_cartesian(grid: &Grid) -> Result<(), FpError> {
    if grid.geometry() != Geometry::Cartesian {
        return Err(FpError::InvalidState(
            "Fokker-Planck operators need a Cartesian grid".into(),
        ));
    }
    Ok(())
}

/// Advective divergence `Div(w rho)`.
pub fn drift_divergence(rho: &ScalarField, w: &VectorField) -> Result<ScalarField, FpError> {
    rho.grid().ensure_same(w.grid())?;
    check_cartesian(rho.grid())?;
    let g = rho.grid();
    let flux: Vec<Vec<f64>> = w
        .components()
        .iter()
        .map(|c| c.iter().zip(rho.values()).map(|(a, b)| a * b).collect())
        .collect();
    Ok(ScalarField::from_parts_unchecked(g.clone(), flux_divergence(g, &flux)))
}

/// Flux-form Laplacian `Div(G rho)`.
pub fn flux_laplacian(rho: &ScalarField) -> Result<ScalarField, FpError> {
    check_cartesian(rho.grid())?;
    let g = rho.grid();
    let grad = flux_gradient(g, rho.values());
    Ok(ScalarField::from_parts_unchecked(g.clone(), flux_divergence(g, &grad)))
}

/// Osmotic velocity `beta G(rho) / rho` built from the flux stencil.
pub fn flux_osmotic_velocity(rho: &ScalarField, beta: f64, floor: f64) -> Result<VectorField, FpError> {
    check_cartesian(rho.grid())?;
    let g = rho.grid();
    let max = rho.max();
    if !(max > 0.0) {
        return Err(FieldError::DegenerateDensity.into());
    }
    let lo = floor * max;
    let comps = flux_gradient(g, rho.values())
        .into_iter()
        .map(|c| {
            c.iter()
                .zip(rho.values())
                .map(|(d, r)| beta * d / r.max(lo))
                .collect()
        })
        .collect();
    Ok(VectorField::from_parts_unchecked(g.clone(), comps))
}

/// Right-hand side `-Div(w rho) +- beta lap rho`.
pub fn fp_rhs(
    rho: &ScalarField,
    w: &VectorField,
    beta: f64,
    direction: Direction,
) -> Result<ScalarField, FpError> {
    rho.grid().ensure_same(w.grid())?;
    check_cartesian(rho.grid())?;
    let g = rho.grid();
    let s = direction.sign() * beta;
    let grad = flux_gradient(g, rho.values());
    let flux: Vec<Vec<f64>> = w
        .components()
        .iter()
        .zip(&grad)
        .map(|(wc, gc)| {
            wc.iter()
                .zip(rho.values())
                .zip(gc)
                .map(|((w, r), d)| w * r - s * d)
                .collect()
        })
        .collect();
    let div = flux_divergence(g, &flux);
    Ok(ScalarField::from_parts_unchecked(
        g.clone(),
        div.into_iter().map(|d| -d).collect(),
    ))
}

/// Donor-cell right-hand side on staggered faces.
fn upwind_rhs(rho: &ScalarField, w: &VectorField, beta: f64, direction: Direction) -> Vec<f64> {
    let g = rho.grid();
    let s = direction.sign() * beta;
    let r = rho.values();
    let mut out = vec![0.0; g.len()];
    for a in 0..g.ndim() {
        let n = g.dims()[a];
        let stride = g.stride(a);
        let h = g.spacing()[a];
        let wa = w.component(a);
        let bc = g.boundary();
        // Flux through the face between node i and node i+1 of this line.
        let face = |k: usize, i: isize| -> f64 {
            let base = k - ((k / stride) % n) * stride;
            let idx = |j: isize| -> Option<usize> {
                match bc {
                    Boundary::Periodic => Some(base + j.rem_euclid(n as isize) as usize * stride),
                    _ if j < 0 || j >= n as isize => None,
                    _ => Some(base + j as usize * stride),
                }
            };
            let (l, rr) = (idx(i), idx(i + 1));
            if bc == Boundary::Reflecting && (l.is_none() || rr.is_none()) {
                return 0.0;
            }
            let rho_l = l.map_or(0.0, |l| r[l]);
            let rho_r = rr.map_or(0.0, |x| r[x]);
            let w_l = l.map_or_else(|| wa[rr.unwrap()], |l| wa[l]);
            let w_r = rr.map_or_else(|| wa[l.unwrap()], |x| wa[x]);
            let wf = 0.5 * (w_l + w_r);
            wf.max(0.0) * rho_l + wf.min(0.0) * rho_r - s * (rho_r - rho_l) / h
        };
        for (k, o) in out.iter_mut().enumerate() {
            let i = ((k / stride) % n) as isize;
            let width = if bc == Boundary::Reflecting && (i == 0 || i == n as isize - 1) {
                0.5 * h
            } else {
                h
            };
            *o -= (face(k, i) - face(k, i - 1)) / width;
        }
    }
    out
}

/// Largest admissible explicit step for the given scheme.
///
/// Centred: `0.9 min(h^2/(2 d beta), h/W, 2 beta/W^2)` with `W = max|w|`; the
/// last term keeps forward Euler stable on centred advection. Upwind:
/// `0.9 / (2 sum_a (beta/h_a^2 + W/h_a))`, which keeps every update weight
/// non-negative including the half cells on reflecting walls.
pub fn stability_bound(grid: &Grid, w: &VectorField, beta: f64, scheme: FluxScheme) -> f64 {
    let beta = beta.abs();
    let wmax = w.max_abs();
    let d = grid.ndim() as f64;
    let h = grid.min_spacing();
    match scheme {
        FluxScheme::Centered => {
            let mut b = f64::INFINITY;
            if beta > 0.0 {
                b = b.min(h * h / (2.0 * d * beta));
            }
            if wmax > 0.0 {
                b = b.min(h / wmax).min(2.0 * beta / (wmax * wmax));
            }
            0.9 * b
        }
        FluxScheme::Upwind => {
            let rate: f64 = grid
                .spacing()
                .iter()
                .map(|h| beta / (h * h) + wmax / h)
                .sum();
            if rate > 0.0 {
                0.9 / (2.0 * rate)
            } else {
                f64::INFINITY
            }
        }
    }
}

/// Running totals a stepper keeps across calls.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct ClipStats {
    pub clipped_nodes: usize,
    pub clipped_mass: f64,
}

/// Explicit stepper with a flux scheme and clipping policy.
#[derive(Debug, Clone)]
pub struct FpStepper {
    pub scheme: FluxScheme,
    /// Abort when more than this fraction of the mass would be clipped in one step.
    pub clip_abort_fraction: f64,
    stats: ClipStats,
}

impl Default for FpStepper {
    fn default() -> Self {
        Self::new(FluxScheme::Centered)
    }
}

impl FpStepper {
    pub fn new(scheme: FluxScheme) -> Self {
        Self {
            scheme,
            clip_abort_fraction: 1e-6,
            stats: ClipStats::default(),
        }
    }

    pub fn stats(&self) -> ClipStats {
        self.stats
    }

    pub fn bound(&self, state: &FPState) -> f64 {
        stability_bound(state.rho.grid(), &state.drift_total, state.beta, self.scheme)
    }

    pub fn rhs(&self, state: &FPState, direction: Direction) -> Result<ScalarField, FpError> {
        match self.scheme {
            FluxScheme::Centered => fp_rhs(&state.rho, &state.drift_total, state.beta, direction),
            FluxScheme::Upwind => Ok(ScalarField::from_parts_unchecked(
                state.rho.grid().clone(),
                upwind_rhs(&state.rho, &state.drift_total, state.beta, direction),
            )),
        }
    }

    pub fn step(&mut self, state: &FPState, dt: f64, direction: Direction) -> Result<FPState, FpError> {
        state.validate()?;
        let bound = self.bound(state);
        if !(dt > 0.0) || dt > bound {
            return Err(FpError::Unstable { dt, bound });
        }
        let rhs = self.rhs(state, direction)?;
        let mut rho: Vec<f64> = state
            .rho
            .values()
            .iter()
            .zip(rhs.values())
            .map(|(r, d)| r + dt * d)
            .collect();
        let grid = state.rho.grid();
        let total: f64 = (0..rho.len()).map(|i| rho[i].max(0.0) * grid.weight(i)).sum();
        let mut clipped_nodes = 0;
        let mut clipped = 0.0;
        for (i, r) in rho.iter_mut().enumerate() {
            if *r < 0.0 {
                clipped -= *r * grid.weight(i);
                clipped_nodes += 1;
                *r = 0.0;
            }
        }
        if clipped_nodes > 0 {
            let limit = self.clip_abort_fraction * total;
            if clipped > limit {
                return Err(FpError::ClippedMass { clipped, limit });
            }
            log::warn!("clipped {clipped_nodes} negative density nodes (mass {clipped:e})");
            self.stats.clipped_nodes += clipped_nodes;
            self.stats.clipped_mass += clipped;
        }
        Ok(FPState {
            rho: ScalarField::from_parts_unchecked(grid.clone(), rho),
            drift_total: state.drift_total.clone(),
            beta: state.beta,
            t: state.t + dt,
        })
    }

    pub fn forward(&mut self, state: &FPState, dt: f64) -> Result<FPState, FpError> {
        self.step(state, dt, Direction::Forward)
    }

    pub fn backward(&mut self, state: &FPState, dt: f64) -> Result<FPState, FpError> {
        self.step(state, dt, Direction::Backward)
    }

    /// Forward evolution keeping every `stride`-th state (and the last one).
    pub fn evolve(
        &mut self,
        state: &FPState,
        dt: f64,
        n_steps: usize,
        stride: usize,
    ) -> Result<FpRun, FpError> {
        let stride = stride.max(1);
        let m0 = state.mass();
        let bound = self.bound(state);
        let mut snapshots = vec![state.clone()];
        let mut cur = state.clone();
        let mut max_step_drift: f64 = 0.0;
        for k in 1..=n_steps {
            let before = cur.mass();
            cur = self.forward(&cur, dt)?;
            max_step_drift = max_step_drift.max((cur.mass() - before).abs());
            if k % stride == 0 || k == n_steps {
                snapshots.push(cur.clone());
            }
        }
        let diagnostics = FpDiagnostics {
            steps: n_steps,
            dt,
            stability_bound: bound,
            initial_mass: m0,
            final_mass: cur.mass(),
            mass_drift: cur.mass() - m0,
            max_step_mass_drift: max_step_drift,
            clip: self.stats,
            scheme: self.scheme,
        };
        Ok(FpRun {
            snapshots,
            diagnostics,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FpDiagnostics {
    pub steps: usize,
    pub dt: f64,
    pub stability_bound: f64,
    pub initial_mass: f64,
    pub final_mass: f64,
    pub mass_drift: f64,
    pub max_step_mass_drift: f64,
    pub clip: ClipStats,
    pub scheme: FluxScheme,
}

#[derive(Debug, Clone)]
pub struct FpRun {
    pub snapshots: Vec<FPState>,
    pub diagnostics: FpDiagnostics,
}

/// One centred forward step.
pub fn fp_forward_step(state: &FPState, dt: f64) -> Result<FPState, FpError> {
    FpStepper::default().forward(state, dt)
}

/// One centred backward (anti-diffusive) step.
pub fn fp_backward_step(state: &FPState, dt: f64) -> Result<FPState, FpError> {
    FpStepper::default().backward(state, dt)
}

/// `(rho1 - rho0)/dt + Div((upsilon + v) rho)` with the flux averaged over
/// both slices.
pub fn continuity_residual(
    rho: &TimePair<ScalarField>,
    upsilon: &TimePair<VectorField>,
    v: &TimePair<VectorField>,
) -> Result<ScalarField, FpError> {
    let g = rho.earlier.grid();
    for other in [rho.later.grid(), upsilon.earlier.grid(), upsilon.later.grid(), v.earlier.grid(), v.later.grid()] {
        g.ensure_same(other)?;
    }
    let f0 = drift_divergence(&rho.earlier, &upsilon.earlier.axpy(1.0, &v.earlier)?)?;
    let f1 = drift_divergence(&rho.later, &upsilon.later.axpy(1.0, &v.later)?)?;
    let dt = rho.dt;
    let values = (0..g.len())
        .map(|i| (rho.later.get(i) - rho.earlier.get(i)) / dt + 0.5 * (f0.get(i) + f1.get(i)))
        .collect();
    Ok(ScalarField::from_parts_unchecked(g.clone(), values))
}

/// `E0/m + (hbar/2m) div u + u^2/2 - V/m`.
pub fn stationarity_residual(
    u: &VectorField,
    potential: &ScalarField,
    e0: f64,
    mass: f64,
    hbar: f64,
) -> Result<ScalarField, FpError> {
    u.grid().ensure_same(potential.grid())?;
    let div = divergence(u);
    let u2 = u.norm_squared();
    let k = hbar / (2.0 * mass);
    let values = (0..u.grid().len())
        .map(|i| e0 / mass + k * div.get(i) + 0.5 * u2.get(i) - potential.get(i) / mass)
        .collect();
    Ok(ScalarField::from_parts_unchecked(u.grid().clone(), values))
}

/// Density-weighted norm `sqrt(sum w rho r^2)`.
pub fn weighted_residual_norm(residual: &ScalarField, rho: &ScalarField) -> Result<f64, FpError> {
    residual.grid().ensure_same(rho.grid())?;
    let g = residual.grid();
    Ok(crate::stats::pairwise_sum_by(g.len(), |i| {
        g.weight(i) * rho.get(i) * residual.get(i).powi(2)
    })
    .sqrt())
}

/// Field set entering the coupled residuals.
#[derive(Debug, Clone)]
pub struct CoupledFields {
    pub u: TimePair<VectorField>,
    pub upsilon: TimePair<VectorField>,
    pub v: TimePair<VectorField>,
    pub potential: ScalarField,
    pub external_force: VectorField,
    pub mass: f64,
    pub hbar: f64,
}

fn mid(p: &TimePair<VectorField>) -> Result<VectorField, FieldError> {
    Ok(p.earlier.axpy(1.0, &p.later)?.scale(0.5))
}

fn rate(p: &TimePair<VectorField>) -> Result<VectorField, FieldError> {
    Ok(p.later.axpy(-1.0, &p.earlier)?.scale(1.0 / p.dt))
}

/// Left-minus-right sides of the `u` and `upsilon + v` evolution equations:
///
/// * `du/dt + (hbar/2m) grad div(upsilon + v) + grad(u . (upsilon + v))`
/// * `d(upsilon + v)/dt + (grad V - F)/m + (upsilon . grad)(upsilon + v)
///   - (u . grad) u - (hbar/2m) lap u`
///
/// Time derivatives difference the two slices; spatial terms use slice means.
pub fn coupled_field_residuals(f: &CoupledFields) -> Result<(VectorField, VectorField), FpError> {
    let g = f.u.earlier.grid();
    for other in [
        f.u.later.grid(),
        f.upsilon.earlier.grid(),
        f.upsilon.later.grid(),
        f.v.earlier.grid(),
        f.v.later.grid(),
        f.potential.grid(),
        f.external_force.grid(),
    ] {
        g.ensure_same(other)?;
    }
    let k = f.hbar / (2.0 * f.mass);
    let u = mid(&f.u)?;
    let ups = mid(&f.upsilon)?;
    let total = ups.axpy(1.0, &mid(&f.v)?)?;
    let total_rate = rate(&f.upsilon)?.axpy(1.0, &rate(&f.v)?)?;

    let r39 = rate(&f.u)?
        .axpy(k, &gradient(&divergence(&total)))?
        .axpy(1.0, &gradient(&u.dot(&total)?))?;
    let r40 = total_rate
        .axpy(1.0 / f.mass, &gradient(&f.potential).axpy(-1.0, &f.external_force)?)?
        .axpy(1.0, &advective(&ups, &total))?
        .axpy(-1.0, &advective(&u, &u))?
        .axpy(-k, &vector_laplacian(&u))?;
    Ok((r39, r40))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::DEFAULT_DENSITY_FLOOR;
    use approx::assert_abs_diff_eq;

    fn gaussian(g: &Grid, sigma: f64) -> ScalarField {
        let rho = ScalarField::from_fn(g, |x| (-x[0] * x[0] / (2.0 * sigma * sigma)).exp()).unwrap();
        let m = rho.integral();
        rho.scale(1.0 / m)
    }

    fn variance(rho: &ScalarField) -> f64 {
        let g = rho.grid();
        (0..g.len()).map(|i| g.weight(i) * rho.get(i) * g.coord(i, 0).powi(2)).sum::<f64>()
            / rho.integral()
    }

    #[test]
    fn uniform_density_is_stationary() {
        let g = Grid::periodic_line(32, 0.0, 1.0).unwrap();
        let s = FPState::new(ScalarField::constant(&g, 1.0), VectorField::zeros(&g), 0.3, 0.0).unwrap();
        let next = fp_forward_step(&s, 1e-4).unwrap();
        assert_eq!(next.rho, s.rho);
        assert_eq!(next.t, 1e-4);
    }

    #[test]
    fn heat_kernel_variance_law() {
        let g = Grid::line(801, -8.0, 8.0, Boundary::Reflecting).unwrap();
        let beta = 0.5;
        let s0 = FPState::new(gaussian(&g, 1.0), VectorField::zeros(&g), beta, 0.0).unwrap();
        let mut st = FpStepper::default();
        let dt = 0.9 * st.bound(&s0);
        let run = st.evolve(&s0, dt, 100, 100).unwrap();
        let last = run.snapshots.last().unwrap();
        let expected = variance(&s0.rho) + 2.0 * beta * last.t;
        assert!((variance(&last.rho) / expected - 1.0).abs() < 0.01);
        assert!(run.diagnostics.max_step_mass_drift < 1e-10);
    }

    #[test]
    fn osmotic_drift_keeps_gaussian_stationary() {
        let g = Grid::line(6401, -8.0, 8.0, Boundary::Reflecting).unwrap();
        let beta = 0.5;
        let rho = gaussian(&g, 1.0);
        let exact = flux_osmotic_velocity(&rho, beta, 1e-300).unwrap();
        let rhs = fp_rhs(&rho, &exact, beta, Direction::Forward).unwrap();
        assert!(rhs.max_abs() < 1e-12, "{}", rhs.max_abs());
        let analytic = VectorField::from_fn(&g, |x| [-beta * x[0], 0.0, 0.0]).unwrap();
        let rhs = fp_rhs(&rho, &analytic, beta, Direction::Forward).unwrap();
        assert!(rhs.max_abs() < 1e-6, "{}", rhs.max_abs());
    }

    #[test]
    fn forward_then_backward_round_trip_at_stationarity() {
        let g = Grid::line(401, -8.0, 8.0, Boundary::Reflecting).unwrap();
        let beta = 0.5;
        let rho = gaussian(&g, 1.0);
        let u = flux_osmotic_velocity(&rho, beta, DEFAULT_DENSITY_FLOOR).unwrap();
        let fwd = FPState::new(rho.clone(), u.clone(), beta, 0.0).unwrap();
        let mut st = FpStepper::default();
        let dt = 0.5 * st.bound(&fwd);
        let a = st.forward(&fwd, dt).unwrap();
        let back = FPState::new(a.rho, u.scale(-1.0), beta, a.t).unwrap();
        let b = st.backward(&back, dt).unwrap();
        assert!(b.rho.axpy(-1.0, &rho).unwrap().max_abs() < 1e-8);
    }

    #[test]
    fn zero_beta_zero_drift_backward_is_identity() {
        let g = Grid::line(11, 0.0, 1.0, Boundary::Reflecting).unwrap();
        let rho = gaussian(&g, 0.3);
        let s = FPState::new(rho.clone(), VectorField::zeros(&g), 0.0, 0.0).unwrap();
        assert_eq!(fp_backward_step(&s, 1.0).unwrap().rho, rho);
    }

    #[test]
    fn half_sum_and_difference_identities() {
        let g = Grid::new(vec![17, 13], vec![0.1, 0.15], vec![0.0, 0.0], Boundary::Reflecting).unwrap();
        let rho = ScalarField::from_fn(&g, |x| 1.0 + 0.5 * (x[0] * 3.0).sin() * (x[1] * 2.0).cos()).unwrap();
        let ups = VectorField::from_fn(&g, |x| [x[1].sin(), 0.3 * x[0], 0.0]).unwrap();
        let v = VectorField::from_fn(&g, |x| [0.1, -0.2 * x[1] * x[0], 0.0]).unwrap();
        let beta = 0.7;
        let u = flux_osmotic_velocity(&rho, beta, DEFAULT_DENSITY_FLOOR).unwrap();
        let total = ups.axpy(1.0, &v).unwrap();
        let fwd = fp_rhs(&rho, &total.axpy(1.0, &u).unwrap(), beta, Direction::Forward).unwrap();
        let bwd = fp_rhs(&rho, &total.axpy(-1.0, &u).unwrap(), beta, Direction::Backward).unwrap();
        let cont = drift_divergence(&rho, &total).unwrap();
        for i in 0..g.len() {
            assert_abs_diff_eq!(0.5 * (fwd.get(i) + bwd.get(i)), -cont.get(i), epsilon = 1e-12);
            assert_abs_diff_eq!(fwd.get(i) - bwd.get(i), 0.0, epsilon = 1e-10);
        }
    }

    #[test]
    fn step_above_bound_is_rejected_with_bound() {
        let g = Grid::line(101, -1.0, 1.0, Boundary::Reflecting).unwrap();
        let s = FPState::new(gaussian(&g, 0.2), VectorField::zeros(&g), 1.0, 0.0).unwrap();
        match fp_forward_step(&s, 1.0).unwrap_err() {
            FpError::Unstable { dt, bound } => {
                assert_eq!(dt, 1.0);
                assert_abs_diff_eq!(bound, 0.9 * 0.02f64.powi(2) / 2.0, epsilon = 1e-15);
            }
            e => panic!("{e}"),
        }
    }

    #[test]
    fn reflecting_walls_conserve_mass_with_drift() {
        for scheme in [FluxScheme::Centered, FluxScheme::Upwind] {
            let g = Grid::new(vec![21, 15], vec![0.1, 0.1], vec![-1.0, -0.7], Boundary::Reflecting).unwrap();
            let rho = ScalarField::from_fn(&g, |x| (-(x[0] - 0.3).powi(2) * 4.0 - x[1] * x[1]).exp()).unwrap();
            let w = VectorField::from_fn(&g, |x| [0.4 - x[0], 0.3 * x[0], 0.0]).unwrap();
            let s = FPState::new(rho, w, 0.2, 0.0).unwrap();
            let mut st = FpStepper::new(scheme);
            let dt = st.bound(&s);
            let run = st.evolve(&s, dt, 200, 50).unwrap();
            assert!(run.diagnostics.max_step_mass_drift < 1e-10, "{scheme:?}");
            assert_eq!(run.snapshots.len(), 5);
        }
    }

    #[test]
    fn upwind_pure_advection_stays_non_negative() {
        let g = Grid::periodic_line(200, 0.0, 1.0).unwrap();
        let rho = ScalarField::from_fn(&g, |x| if (0.2..0.4).contains(&x[0]) { 5.0 } else { 0.0 }).unwrap();
        let s = FPState::new(rho, VectorField::uniform(&g, &[1.0]), 0.0, 0.0).unwrap();
        let mut st = FpStepper::new(FluxScheme::Upwind);
        let dt = st.bound(&s);
        let run = st.evolve(&s, dt, 100, 100).unwrap();
        assert!(run.snapshots.last().unwrap().rho.min() >= 0.0);
        assert_eq!(run.diagnostics.clip.clipped_nodes, 0);
        assert!(run.diagnostics.mass_drift.abs() < 1e-12);
    }

    #[test]
    fn centered_pure_advection_has_zero_bound() {
        let g = Grid::periodic_line(50, 0.0, 1.0).unwrap();
        let s = FPState::new(ScalarField::constant(&g, 1.0), VectorField::uniform(&g, &[1.0]), 0.0, 0.0).unwrap();
        assert_eq!(FpStepper::default().bound(&s), 0.0);
    }

    #[test]
    fn radial_grids_are_rejected() {
        let g = Grid::radial(10, 0.1).unwrap();
        assert!(FPState::new(ScalarField::constant(&g, 1.0), VectorField::zeros(&g), 1.0, 0.0).is_err());
    }

    #[test]
    fn continuity_residual_cases() {
        let g = Grid::periodic_line(64, 0.0, 1.0).unwrap();
        let rho = ScalarField::constant(&g, 1.0);
        let z = VectorField::zeros(&g);
        let r = continuity_residual(
            &TimePair::stationary(rho.clone()),
            &TimePair::stationary(z.clone()),
            &TimePair::stationary(z.clone()),
        )
        .unwrap();
        assert_eq!(r.max_abs(), 0.0);

        // Rigid translation rho(x - c t) solves continuity with upsilon = c.
        let c = 0.3;
        let dt = 1e-3;
        let wave = |t: f64| {
            ScalarField::from_fn(&g, |x| 1.0 + 0.2 * (2.0 * std::f64::consts::PI * (x[0] - c * t)).sin()).unwrap()
        };
        let ups = VectorField::uniform(&g, &[c]);
        let good = continuity_residual(
            &TimePair::new(wave(0.0), wave(dt), dt),
            &TimePair::stationary(ups.clone()),
            &TimePair::stationary(z.clone()),
        )
        .unwrap();
        let bad = continuity_residual(
            &TimePair::new(wave(0.0), wave(dt), dt),
            &TimePair::stationary(ups.scale(2.0)),
            &TimePair::stationary(z),
        )
        .unwrap();
        assert!(good.max_abs() < 2e-3 * bad.max_abs());
        let advective = drift_divergence(&wave(0.0), &ups).unwrap().max_abs();
        assert!((bad.max_abs() / advective - 1.0).abs() < 0.01);
    }

    #[test]
    fn harmonic_stationarity_residual_vanishes() {
        let (m, hbar, omega) = (1.0, 1.0, 1.3);
        let g = Grid::line(401, -6.0, 6.0, Boundary::DirichletZero).unwrap();
        let u = VectorField::from_fn(&g, |x| [-omega * x[0], 0.0, 0.0]).unwrap();
        let v = ScalarField::from_fn(&g, |x| 0.5 * m * omega * omega * x[0] * x[0]).unwrap();
        let r = stationarity_residual(&u, &v, 0.5 * hbar * omega, m, hbar).unwrap();
        assert!(r.max_abs() < 1e-10);
        let off = stationarity_residual(&u, &v, 0.5 * hbar * omega + 0.25, m, hbar).unwrap();
        for x in off.values() {
            assert_abs_diff_eq!(*x, 0.25 / m, epsilon = 1e-10);
        }
    }

    #[test]
    fn hydrogen_stationarity_residual_vanishes() {
        let g = Grid::radial(500, 0.02).unwrap();
        let u = VectorField::uniform(&g, &[-1.0]);
        let v = ScalarField::from_fn(&g, |x| -1.0 / x[0]).unwrap();
        let r = stationarity_residual(&u, &v, -0.5, 1.0, 1.0).unwrap();
        for x in &r.values()[..g.len() - 1] {
            assert_abs_diff_eq!(*x, 0.0, epsilon = 1e-9);
        }
    }

    #[test]
    fn coupled_residuals_vanish_for_trivial_and_harmonic_sets() {
        let g = Grid::line(201, -4.0, 4.0, Boundary::DirichletZero).unwrap();
        let z = TimePair::stationary(VectorField::zeros(&g));
        let trivial = CoupledFields {
            u: z.clone(),
            upsilon: z.clone(),
            v: z.clone(),
            potential: ScalarField::constant(&g, 3.0),
            external_force: VectorField::zeros(&g),
            mass: 1.0,
            hbar: 1.0,
        };
        let (a, b) = coupled_field_residuals(&trivial).unwrap();
        assert_eq!(a.max_abs() + b.max_abs(), 0.0);

        let omega = 0.8;
        let harmonic = CoupledFields {
            u: TimePair::stationary(VectorField::from_fn(&g, |x| [-omega * x[0], 0.0, 0.0]).unwrap()),
            potential: ScalarField::from_fn(&g, |x| 0.5 * omega * omega * x[0] * x[0]).unwrap(),
            ..trivial
        };
        let (a, b) = coupled_field_residuals(&harmonic).unwrap();
        assert!(a.max_abs() < 1e-12);
        let interior = (1..g.len() - 1).map(|i| b.component(0)[i].abs()).fold(0.0, f64::max);
        assert!(interior < 1e-10, "{interior}");
    }
}
