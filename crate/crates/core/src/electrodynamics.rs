//! Electromagnetic bookkeeping of a transition: Biot–Savart fields, magnetic
//! energy and mass, Larmor radiation and the spin-orbit/spin-spin split.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::constants::{PhysicalConstants, CLASSICAL_ELECTRON_RADIUS, ELEMENTARY_CHARGE, MU0, PLANCK, SPEED_OF_LIGHT};
use crate::fields::ops::gradient;
use crate::fields::{cross3, dot3, norm3, FieldError, ScalarField, VectorField, DEFAULT_DENSITY_FLOOR};
use crate::mass_ledger::{self, MassLedgerError};

/// Default upper radius of the energy quadrature, in units of `r_min`.
pub const DEFAULT_RMAX_FACTOR: f64 = 1e6;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EmError {
    #[error("{0} must be positive and finite")]
    NonPositive(&'static str),
    #[error("mu0 eps0 c^2 = {0}, expected 1")]
    Inconsistent(f64),
    #[error("distance must be positive, got {0}")]
    ZeroDistance(f64),
    #[error("field point is {distance} from source node {node}, inside guard radius {guard}")]
    InsideGuard { node: usize, distance: f64, guard: f64 },
    #[error("n-hat must be a unit vector (norm {0})")]
    NotUnit(f64),
    #[error(transparent)]
    Ledger(#[from] MassLedgerError),
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

/// Prefactor of the Biot–Savart field.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum FieldConvention {
    /// `B = -(1/c) n x q dv / R^2`.
    #[default]
    InverseC,
    /// `B = -(mu0/4pi) n x q dv / R^2`.
    Si,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EmConstants {
    pub mu0: f64,
    pub eps0: f64,
    pub c: f64,
    pub q: f64,
    pub r_min: f64,
    #[serde(default)]
    pub convention: FieldConvention,
}

impl Default for EmConstants {
    fn default() -> Self {
        Self {
            mu0: MU0,
            eps0: 1.0 / (MU0 * SPEED_OF_LIGHT * SPEED_OF_LIGHT),
            c: SPEED_OF_LIGHT,
            q: ELEMENTARY_CHARGE,
            r_min: CLASSICAL_ELECTRON_RADIUS,
            convention: FieldConvention::InverseC,
        }
    }
}

impl EmConstants {
    pub fn new(mu0: f64, eps0: f64, c: f64, q: f64, r_min: f64, convention: FieldConvention) -> Result<Self, EmError> {
        let k = Self {
            mu0,
            eps0,
            c,
            q,
            r_min,
            convention,
        };
        k.validate()?;
        Ok(k)
    }

    pub fn from_physical(p: &PhysicalConstants, convention: FieldConvention) -> Result<Self, EmError> {
        Self::new(p.mu0, p.eps0, p.c, p.charge, p.electron_radius, convention)
    }

    pub fn with_convention(self, convention: FieldConvention) -> Self {
        Self { convention, ..self }
    }

    pub fn validate(&self) -> Result<(), EmError> {
        for (name, v) in [("mu0", self.mu0), ("eps0", self.eps0), ("c", self.c), ("r_min", self.r_min)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(EmError::NonPositive(name));
            }
        }
        if !self.q.is_finite() {
            return Err(EmError::InvalidArgument("charge must be finite".into()));
        }
        let p = self.mu0 * self.eps0 * self.c * self.c;
        if (p - 1.0).abs() > 1e-10 {
            return Err(EmError::Inconsistent(p));
        }
        Ok(())
    }

    pub fn field_prefactor(&self) -> f64 {
        match self.convention {
            FieldConvention::InverseC => 1.0 / self.c,
            FieldConvention::Si => self.mu0 / (4.0 * PI),
        }
    }
}

/// `J = (2u + dvol) rho_e` nodewise.
pub fn transition_current(rho_e: &ScalarField, u: &VectorField, dvol: [f64; 3]) -> Result<VectorField, EmError> {
    rho_e.grid().ensure_same(u.grid())?;
    let n = rho_e.grid().len();
    let comps = (0..u.ndim())
        .map(|a| (0..n).map(|i| (2.0 * u.component(a)[i] + dvol[a]) * rho_e.get(i)).collect())
        .collect();
    Ok(VectorField::new(rho_e.grid().clone(), comps)?)
}

/// `B = -k n x q dv / R^2` for a point source.
pub fn biot_savart_point(dv: [f64; 3], r: f64, n_hat: [f64; 3], k: &EmConstants) -> Result<[f64; 3], EmError> {
    if !(r > 0.0 && r.is_finite()) {
        return Err(EmError::ZeroDistance(r));
    }
    let nn = norm3(&n_hat);
    if (nn - 1.0).abs() > 1e-12 {
        return Err(EmError::NotUnit(nn));
    }
    let c = cross3(&n_hat, &dv);
    let s = -k.field_prefactor() * k.q / (r * r);
    Ok([s * c[0], s * c[1], s * c[2]])
}

/// `B(x) = k sum w n x (-J) / R^2`, `n = (x - x') / R`.
///
/// Source nodes with non-zero current closer than `guard` (default half the
/// smallest spacing) are rejected.
pub fn magnetic_field_from_current(
    j: &VectorField,
    point: [f64; 3],
    k: &EmConstants,
    guard: Option<f64>,
) -> Result<[f64; 3], EmError> {
    let g = j.grid();
    let guard = guard.unwrap_or(0.5 * g.min_spacing());
    let pre = k.field_prefactor();
    let mut b = [0.0; 3];
    for i in 0..g.len() {
        let jv = j.at(i);
        if jv == [0.0; 3] {
            continue;
        }
        let x = g.position(i);
        let d = [point[0] - x[0], point[1] - x[1], point[2] - x[2]];
        let r = norm3(&d);
        if r <= guard {
            return Err(EmError::InsideGuard {
                node: i,
                distance: r,
                guard,
            });
        }
        let n = [d[0] / r, d[1] / r, d[2] / r];
        let c = cross3(&n, &jv);
        let s = -pre * g.weight(i) / (r * r);
        for a in 0..3 {
            b[a] += s * c[a];
        }
    }
    Ok(b)
}

/// `m_mag = mu0 q^2 / (4 pi r_min)`.
pub fn magnetic_mass(k: &EmConstants) -> f64 {
    k.mu0 * k.q * k.q / (4.0 * PI * k.r_min)
}

/// `E_mag = (mu0 q^2 / 8 pi r_min) dv^2 = m_mag dv^2 / 2`.
pub fn magnetic_energy(dv: f64, k: &EmConstants) -> f64 {
    0.5 * magnetic_mass(k) * dv * dv
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EnergyQuadrature {
    /// Integral over `[r_min, r_max]`.
    pub truncated: f64,
    /// Analytic contribution of `[r_max, inf)`.
    pub tail: f64,
    pub total: f64,
}

/// `int B^2/(2 mu0) dV` of the isotropic point-source field over
/// `R >= r_min`, Simpson in `ln R` up to `r_max_factor r_min` plus the tail.
pub fn magnetic_energy_quadrature(dv: f64, k: &EmConstants, r_max_factor: f64, intervals: usize) -> Result<EnergyQuadrature, EmError> {
    if !(r_max_factor > 1.0) || intervals < 2 {
        return Err(EmError::InvalidArgument("need r_max_factor > 1 and at least 2 intervals".into()));
    }
    let n = intervals + intervals % 2;
    let b0 = k.field_prefactor() * k.q * dv.abs();
    // dE/dR = (b0^2 / 2 mu0) 4 pi R^2 / R^4
    let pre = b0 * b0 / (2.0 * k.mu0) * 4.0 * PI;
    let (lo, hi) = (k.r_min.ln(), (k.r_min * r_max_factor).ln());
    let h = (hi - lo) / n as f64;
    let f = |s: f64| {
        let r = s.exp();
        pre / (r * r) * r
    };
    let mut acc = f(lo) + f(hi);
    for i in 1..n {
        acc += if i % 2 == 1 { 4.0 } else { 2.0 } * f(lo + i as f64 * h);
    }
    let truncated = acc * h / 3.0;
    let tail = pre / (k.r_min * r_max_factor);
    Ok(EnergyQuadrature {
        truncated,
        tail,
        total: truncated + tail,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LarmorResult {
    pub theta: Vec<f64>,
    /// `|S|` on the sphere `R0 = 1`.
    pub poynting: Vec<f64>,
    /// `(3/8) q^2 |dv| a^2 / c^3`.
    pub power: f64,
    /// Trapezoid integral of `|S| 2 pi R0^2 sin(theta)` over the grid.
    pub power_quadrature: f64,
    /// `power_quadrature / (q^2 |dv| a^2 / c^3)`.
    pub quadrature_prefactor: f64,
}

/// Uniform polar grid on `[0, pi]`.
pub fn theta_grid(n: usize) -> Vec<f64> {
    (0..n).map(|i| PI * i as f64 / (n - 1) as f64).collect()
}

/// `S = q^2 |dv| a^2 sin^3(theta) / (2 pi c^3 R0^2)` and the radiated power.
pub fn poynting_and_larmor(dv: f64, accel: f64, theta: &[f64], k: &EmConstants) -> Result<LarmorResult, EmError> {
    if theta.len() < 2 || theta.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(EmError::InvalidArgument("theta grid must be increasing with >= 2 points".into()));
    }
    let scale = k.q * k.q * dv.abs() * accel * accel / k.c.powi(3);
    let poynting: Vec<f64> = theta.iter().map(|t| scale * t.sin().powi(3) / (2.0 * PI)).collect();
    let integrand: Vec<f64> = theta.iter().zip(&poynting).map(|(t, s)| s * 2.0 * PI * t.sin()).collect();
    let power_quadrature = theta
        .windows(2)
        .zip(integrand.windows(2))
        .map(|(t, f)| 0.5 * (t[1] - t[0]) * (f[0] + f[1]))
        .sum::<f64>();
    let quadrature_prefactor = if scale == 0.0 {
        theta
            .windows(2)
            .map(|t| 0.5 * (t[1] - t[0]) * (t[0].sin().powi(4) + t[1].sin().powi(4)))
            .sum()
    } else {
        power_quadrature / scale
    };
    Ok(LarmorResult {
        theta: theta.to_vec(),
        poynting,
        power: 0.375 * scale,
        power_quadrature,
        quadrature_prefactor,
    })
}

/// `E_rad = (3/8) m_mag dv^4 / c^2`.
pub fn radiated_energy(dv: f64, k: &EmConstants) -> Result<f64, EmError> {
    if !(dv.abs() < k.c) {
        return Err(MassLedgerError::Superluminal { dv, c: k.c }.into());
    }
    Ok(0.375 * magnetic_mass(k) * dv.powi(4) / (k.c * k.c))
}

/// Spin variant with `dv = |b* - b|`.
pub fn spin_radiated_energy(b: [f64; 3], b_star: [f64; 3], k: &EmConstants) -> Result<f64, EmError> {
    let d = [b_star[0] - b[0], b_star[1] - b[1], b_star[2] - b[2]];
    radiated_energy(norm3(&d), k)
}

/// Where the spin-transition field is evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Sampling {
    Node(usize),
    /// Average over nodes within `radius` of `center`.
    Ball { center: [f64; 3], radius: f64 },
}

/// `B = (q/m c^2)(1/4 pi eps0 R^3) [(h/2) grad(rho)/rho] x (b + v)` with the
/// bracket and `b + v` averaged over the sampling region.
pub fn spin_transition_bfield(
    rho: &ScalarField,
    b: &VectorField,
    v: &VectorField,
    r: f64,
    mass: f64,
    planck: f64,
    k: &EmConstants,
    sampling: Sampling,
) -> Result<[f64; 3], EmError> {
    if !(r > 0.0 && r.is_finite()) {
        return Err(EmError::ZeroDistance(r));
    }
    if !(mass > 0.0) {
        return Err(EmError::NonPositive("mass"));
    }
    let g = rho.grid();
    g.ensure_same(b.grid())?;
    g.ensure_same(v.grid())?;
    let grad = gradient(rho);
    let max = rho.max();
    if !(max > 0.0) {
        return Err(FieldError::DegenerateDensity.into());
    }
    let nodes: Vec<usize> = match sampling {
        Sampling::Node(i) if i < g.len() => vec![i],
        Sampling::Node(i) => return Err(EmError::InvalidArgument(format!("node {i} out of range"))),
        Sampling::Ball { center, radius } => (0..g.len())
            .filter(|&i| {
                let x = g.position(i);
                let d = [x[0] - center[0], x[1] - center[1], x[2] - center[2]];
                norm3(&d) <= radius
            })
            .collect(),
    };
    if nodes.is_empty() {
        return Err(EmError::InvalidArgument("sampling region contains no nodes".into()));
    }
    let mut ps = [0.0; 3];
    let mut w = [0.0; 3];
    let floor = DEFAULT_DENSITY_FLOOR * max;
    for &i in &nodes {
        let inv = 1.0 / rho.get(i).max(floor);
        let gi = grad.at(i);
        let (bi, vi) = (b.at(i), v.at(i));
        for a in 0..3 {
            ps[a] += 0.5 * planck * gi[a] * inv;
            w[a] += bi[a] + vi[a];
        }
    }
    let count = nodes.len() as f64;
    let ps = ps.map(|x| x / count);
    let w = w.map(|x| x / count);
    let s = k.q / (mass * k.c * k.c) / (4.0 * PI * k.eps0 * r.powi(3));
    Ok(cross3(&ps, &w).map(|x| s * x))
}

/// Planck constant `h` for the SI preset.
pub fn planck_si() -> f64 {
    PLANCK
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct InteractionPotentials {
    /// `-(v x E)/c`.
    pub b_orbit: [f64; 3],
    /// `-(b x E)/c`.
    pub b_spin: [f64; 3],
    /// `(q/mc) P_S . B_0`.
    pub spin_orbit: f64,
    /// `(q/mc) P_S . B_s`.
    pub spin_spin: f64,
    /// `-(q/mc^2) P_S . [(b + v) x E]`.
    pub unsplit: f64,
}

pub fn interaction_potentials(
    p_s: [f64; 3],
    b: [f64; 3],
    v: [f64; 3],
    e: [f64; 3],
    mass: f64,
    c: f64,
    q: f64,
) -> Result<InteractionPotentials, EmError> {
    if !(mass > 0.0 && c > 0.0) {
        return Err(EmError::NonPositive("mass and c"));
    }
    let vxe = cross3(&v, &e);
    let bxe = cross3(&b, &e);
    let b_orbit = vxe.map(|x| -x / c);
    let b_spin = bxe.map(|x| -x / c);
    let k = q / (mass * c);
    let w = [b[0] + v[0], b[1] + v[1], b[2] + v[2]];
    Ok(InteractionPotentials {
        b_orbit,
        b_spin,
        spin_orbit: k * dot3(&p_s, &b_orbit),
        spin_spin: k * dot3(&p_s, &b_spin),
        unsplit: -q / (mass * c * c) * dot3(&p_s, &cross3(&w, &e)),
    })
}

/// Energy budget of one transition speed.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EmBudget {
    pub q: f64,
    pub r_min: f64,
    pub dv: f64,
    pub magnetic_mass: f64,
    pub magnetic_energy: f64,
    pub radiated_energy: f64,
    pub series_terms: Vec<f64>,
    pub series_coefficients: Vec<f64>,
    pub exact_energy: f64,
    pub split_magnetic: f64,
    pub split_radiation: f64,
    /// `|E_mag + E_rad - exact| / exact` of the split.
    pub split_residual: f64,
    /// `|radiated_energy - series term 2| / radiated_energy`.
    pub series_link_residual: f64,
    /// `|magnetic_energy - series term 1| / magnetic_energy`.
    pub magnetic_link_residual: f64,
    pub quadrature_energy_si: f64,
    pub quadrature_relative_error_si: f64,
    pub larmor_prefactor_quadrature: f64,
}

fn rel(a: f64, b: f64) -> f64 {
    if b == 0.0 {
        a.abs()
    } else {
        (a - b).abs() / b.abs()
    }
}

pub fn em_budget(k: &EmConstants, dv: f64, order: usize) -> Result<EmBudget, EmError> {
    k.validate()?;
    let m = magnetic_mass(k);
    let series = mass_ledger::relativistic_expansion(m, dv, k.c, order.max(2))?;
    let split = mass_ledger::energy_split(m, dv, k.c)?;
    let e_mag = magnetic_energy(dv, k);
    let e_rad = radiated_energy(dv, k)?;
    let quad = magnetic_energy_quadrature(dv, &k.with_convention(FieldConvention::Si), DEFAULT_RMAX_FACTOR, 4000)?;
    let larmor = poynting_and_larmor(1.0, 1.0, &theta_grid(2001), k)?;
    Ok(EmBudget {
        q: k.q,
        r_min: k.r_min,
        dv,
        magnetic_mass: m,
        magnetic_energy: e_mag,
        radiated_energy: e_rad,
        series_terms: series.terms.clone(),
        series_coefficients: series.coefficients.clone(),
        exact_energy: series.exact,
        split_magnetic: split.magnetic,
        split_radiation: split.radiation,
        split_residual: rel(split.magnetic + split.radiation, split.exact),
        series_link_residual: rel(e_rad, series.terms[1]),
        magnetic_link_residual: rel(e_mag, series.terms[0]),
        quadrature_energy_si: quad.total,
        quadrature_relative_error_si: rel(quad.total, e_mag),
        larmor_prefactor_quadrature: larmor.quadrature_prefactor,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::{Boundary, Grid};
    use crate::mass_ledger::{energy_split, relativistic_expansion};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn k() -> EmConstants {
        EmConstants::default()
    }

    #[test]
    fn magnetic_mass_matches_reference_value() {
        let m = magnetic_mass(&k());
        assert!((m - 9.10952e-31).abs() / 9.10952e-31 < 5e-7, "{m:e}");
        let half = EmConstants { r_min: 2.0 * k().r_min, ..k() };
        assert!((magnetic_mass(&half) - 0.5 * m).abs() <= 1e-15 * m);
        let twice = EmConstants { q: 2.0 * k().q, ..k() };
        assert!((magnetic_mass(&twice) - 4.0 * m).abs() <= 1e-15 * m);
    }

    #[test]
    fn constants_must_be_consistent() {
        assert!(EmConstants::new(MU0, 1.0, SPEED_OF_LIGHT, 1.0, 1.0, FieldConvention::Si).is_err());
        assert!(EmConstants::from_physical(&PhysicalConstants::natural(), FieldConvention::InverseC).is_ok());
    }

    #[test]
    fn magnetic_energy_closed_form() {
        assert_eq!(magnetic_energy(0.0, &k()), 0.0);
        let e = magnetic_energy(1.0, &k());
        assert!((e - 0.5 * 9.10952e-31).abs() / e < 5e-7);
        let closed = k().mu0 * k().q.powi(2) / (8.0 * PI) / k().r_min;
        assert!((e - closed).abs() <= 1e-15 * e);
    }

    #[test]
    fn si_quadrature_matches_closed_form() {
        let dv = 1e5;
        let q = magnetic_energy_quadrature(dv, &k().with_convention(FieldConvention::Si), DEFAULT_RMAX_FACTOR, 4000).unwrap();
        let e = magnetic_energy(dv, &k());
        assert!((q.truncated - e).abs() / e < 5e-3);
        assert!((q.total - e).abs() / e < 1e-9);
    }

    #[test]
    fn inverse_c_quadrature_gives_unreduced_form() {
        // 2 pi q^2 dv^2 / (c^2 mu0 r_min), before the 1/c = mu0/4pi substitution
        let dv = 1e5;
        let kk = k();
        let q = magnetic_energy_quadrature(dv, &kk, DEFAULT_RMAX_FACTOR, 4000).unwrap();
        let unreduced = 2.0 * PI * kk.q.powi(2) * dv * dv / (kk.c * kk.c * kk.mu0) / kk.r_min;
        assert!((q.total - unreduced).abs() / unreduced < 1e-9);
    }

    #[test]
    fn point_biot_savart() {
        let kk = k();
        let b = biot_savart_point([1.0, 0.0, 0.0], 1.0, [0.0, 1.0, 0.0], &kk).unwrap();
        assert!((norm3(&b) - kk.q / kk.c).abs() / (kk.q / kk.c) < 1e-15);
        assert!((norm3(&b) - 5.344e-28).abs() / 5.344e-28 < 1e-3);
        assert!(b[2] > 0.0);
        let par = biot_savart_point([0.0, 2.0, 0.0], 1.0, [0.0, 1.0, 0.0], &kk).unwrap();
        assert_eq!(par, [0.0; 3]);
        let far = biot_savart_point([1.0, 0.0, 0.0], 2.0, [0.0, 1.0, 0.0], &kk).unwrap();
        assert!((norm3(&far) * 4.0 - norm3(&b)).abs() < 1e-40);
        let anti = biot_savart_point([-1.0, 0.0, 0.0], 1.0, [0.0, 1.0, 0.0], &kk).unwrap();
        assert_eq!(anti, b.map(|x| -x));
        assert!(biot_savart_point([1.0, 0.0, 0.0], 0.0, [0.0, 1.0, 0.0], &kk).is_err());
    }

    #[test]
    fn current_densities() {
        let g = Grid::new(vec![9, 9, 9], vec![0.1; 3], vec![-0.4; 3], Boundary::DirichletZero).unwrap();
        let zero = transition_current(&ScalarField::constant(&g, 2.0), &VectorField::zeros(&g), [0.0; 3]).unwrap();
        assert_eq!(zero.max_abs(), 0.0);
        let j = transition_current(&ScalarField::constant(&g, 2.0), &VectorField::zeros(&g), [1.0, 0.0, 0.0]).unwrap();
        assert!(j.component(0).iter().all(|&x| x == 2.0));
        let q = 3.0;
        let s = 0.12;
        let rho = ScalarField::from_fn(&g, |x| (-(x[0] * x[0] + x[1] * x[1] + x[2] * x[2]) / (2.0 * s * s)).exp()).unwrap();
        let rho = rho.scale(q / rho.integral());
        let u = VectorField::uniform(&g, &[0.5, -1.0, 0.0]);
        let j = transition_current(&rho, &u, [0.0, 0.0, 2.0]).unwrap();
        let total = j.integral();
        for (t, e) in total.iter().zip([q, -2.0 * q, 2.0 * q]) {
            assert!((t - e).abs() < 1e-12 * q);
        }
    }

    #[test]
    fn grid_field_reduces_to_point_source() {
        let h = 1e-3;
        let g = Grid::new(vec![5, 5, 5], vec![h; 3], vec![-2.0 * h; 3], Boundary::DirichletZero).unwrap();
        let kk = k();
        let centre = g.flat_index(&[2, 2, 2]);
        let dv = [0.0, 0.0, 3.0];
        let mut comps = vec![vec![0.0; g.len()]; 3];
        comps[2][centre] = kk.q * dv[2] / g.weight(centre);
        let j = VectorField::new(g.clone(), comps).unwrap();
        let r = 100.0 * h;
        let b = magnetic_field_from_current(&j, [r, 0.0, 0.0], &kk, None).unwrap();
        let reference = biot_savart_point(dv, r, [1.0, 0.0, 0.0], &kk).unwrap();
        assert!((norm3(&b) - norm3(&reference)).abs() / norm3(&reference) < 1e-2);
        assert!(magnetic_field_from_current(&j, [1e-4, 0.0, 0.0], &kk, None).is_err());
        let empty = magnetic_field_from_current(&VectorField::zeros(&g), [0.0; 3], &kk, None).unwrap();
        assert_eq!(empty, [0.0; 3]);
    }

    #[test]
    fn mirrored_currents_cancel_at_midpoint() {
        let h = 0.5;
        let g = Grid::new(vec![5, 3, 3], vec![h; 3], vec![-1.0, -0.5, -0.5], Boundary::DirichletZero).unwrap();
        let mut comps = vec![vec![0.0; g.len()]; 3];
        comps[1][g.flat_index(&[0, 1, 1])] = 1.0;
        comps[1][g.flat_index(&[4, 1, 1])] = 1.0;
        let j = VectorField::new(g, comps).unwrap();
        let b = magnetic_field_from_current(&j, [0.0, 0.0, 0.0], &k(), None).unwrap();
        assert!(norm3(&b) <= 1e-12 * k().q.abs());
    }

    #[test]
    fn larmor_closed_form_and_quadrature() {
        let kk = k();
        let l = poynting_and_larmor(1.0, 1.0, &theta_grid(2001), &kk).unwrap();
        let unit = kk.q * kk.q / kk.c.powi(3);
        assert!((l.power - 0.375 * unit).abs() <= 1e-15 * l.power);
        // the sin^4 integral over [0, pi] is 3 pi / 8
        assert!((l.quadrature_prefactor - 3.0 * PI / 8.0).abs() < 1e-12);
        assert!((l.power_quadrature / l.power - PI).abs() < 1e-12);
        let zero = poynting_and_larmor(0.0, 1.0, &theta_grid(11), &kk).unwrap();
        assert_eq!(zero.power, 0.0);
    }

    #[test]
    fn radiated_energy_links_to_series() {
        let kk = k();
        let m = magnetic_mass(&kk);
        assert_eq!(radiated_energy(0.0, &kk).unwrap(), 0.0);
        for f in [1e-4, 0.01, 0.3] {
            let dv = f * kk.c;
            let e = radiated_energy(dv, &kk).unwrap();
            let t = relativistic_expansion(m, dv, kk.c, 2).unwrap().terms[1];
            assert!((e - t).abs() <= 1e-12 * e);
            let ratio = e / magnetic_energy(dv, &kk);
            assert!((ratio - 0.75 * f * f).abs() <= 1e-12 * ratio);
            if f > 1e-3 {
                assert!(energy_split(m, dv, kk.c).unwrap().radiation > e);
            }
        }
        let dv = 1e-4 * kk.c;
        let split = energy_split(m, dv, kk.c).unwrap();
        assert!((split.radiation / radiated_energy(dv, &kk).unwrap() - 1.0).abs() < 1e-6);
        assert!(radiated_energy(kk.c, &kk).is_err());
        let s = spin_radiated_energy([0.0, 1e5, 0.0], [0.0, -1e5, 0.0], &kk).unwrap();
        assert_eq!(s, radiated_energy(2e5, &kk).unwrap());
    }

    #[test]
    fn interaction_split_is_exact() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut v3 = |s: f64| [0; 3].map(|_| rng.random_range(-s..s));
        for _ in 0..10_000 {
            let (p, b, v, e) = (v3(1e-24), v3(1e6), v3(1e6), v3(1e10));
            let r = interaction_potentials(p, b, v, e, 9.1e-31, SPEED_OF_LIGHT, -1.6e-19).unwrap();
            let scale = r.spin_orbit.abs() + r.spin_spin.abs();
            assert!((r.spin_orbit + r.spin_spin - r.unsplit).abs() <= 1e-12 * scale);
        }
        let z = interaction_potentials([1.0; 3], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0; 3], 1.0, 1.0, 1.0).unwrap();
        assert_eq!((z.spin_orbit, z.spin_spin), (0.0, 0.0));
        let nb = interaction_potentials([1.0, 2.0, 3.0], [0.0; 3], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0], 1.0, 2.0, 1.0).unwrap();
        assert_eq!(nb.spin_spin, 0.0);
        assert_eq!(nb.spin_orbit, nb.unsplit);
    }

    #[test]
    fn spin_field_vanishes_when_parallel_or_uniform() {
        let g = Grid::new(vec![7, 7, 7], vec![0.2; 3], vec![-0.6; 3], Boundary::Reflecting).unwrap();
        let kk = k();
        let rho = ScalarField::from_fn(&g, |x| (-x[0]).exp()).unwrap();
        let along = VectorField::uniform(&g, &[1.0, 0.0, 0.0]);
        let zero = VectorField::zeros(&g);
        let b = spin_transition_bfield(&rho, &along, &zero, 1.0, 1.0, 1.0, &kk, Sampling::Node(171)).unwrap();
        assert_eq!(norm3(&b), 0.0);
        let flat = ScalarField::constant(&g, 1.0);
        let cross = VectorField::uniform(&g, &[0.0, 1.0, 0.0]);
        let b = spin_transition_bfield(&flat, &cross, &zero, 1.0, 1.0, 1.0, &kk, Sampling::Ball { center: [0.0; 3], radius: 0.5 }).unwrap();
        assert_eq!(norm3(&b), 0.0);
        assert!(spin_transition_bfield(&flat, &cross, &zero, 0.0, 1.0, 1.0, &kk, Sampling::Node(0)).is_err());
    }

    #[test]
    fn spin_field_hydrogen_sample_point() {
        // 1s density exp(-2r/a): grad(rho)/rho = -(2/a) r_hat; on the x axis
        // interior differences give -(2/a) sinh(2h/a)/(2h/a) x_hat.
        let a = 1.0;
        let h = 0.05;
        let g = Grid::new(vec![41, 41, 41], vec![h; 3], vec![-1.0; 3], Boundary::DirichletZero).unwrap();
        let rho = ScalarField::from_fn(&g, |x| (-2.0 * (x[0] * x[0] + x[1] * x[1] + x[2] * x[2]).sqrt() / a).exp()).unwrap();
        let node = g.flat_index(&[39, 20, 20]);
        assert!((g.position(node)[0] - (1.0 - h)).abs() < 1e-12);
        let (hbar, m, kk) = (1.0, 1.0, EmConstants::from_physical(&PhysicalConstants::natural(), FieldConvention::InverseC).unwrap());
        let kx = 2.0;
        let bv = VectorField::uniform(&g, &[0.0, hbar * kx / m, 0.0]);
        let zero = VectorField::zeros(&g);
        let planck = 2.0 * PI * hbar;
        let r = 0.7;
        let b = spin_transition_bfield(&rho, &bv, &zero, r, m, planck, &kk, Sampling::Node(node)).unwrap();
        let d = 2.0 * h / a;
        let gx = -(2.0 / a) * (d.sinh() / d);
        // [(h/2) gx x_hat] x [(hbar k/m) y_hat] = (h/2) gx (hbar k/m) z_hat
        let pre = kk.q / (m * kk.c * kk.c) / (4.0 * PI * kk.eps0 * r.powi(3));
        let expect = pre * 0.5 * planck * gx * hbar * kx / m;
        assert!(b[0].abs() < 1e-12 && b[1].abs() < 1e-12);
        assert!((b[2] - expect).abs() < 1e-9 * expect.abs(), "{} vs {expect}", b[2]);
    }

    #[test]
    fn budget_reports_consistent_parts() {
        let b = em_budget(&k(), 0.01 * SPEED_OF_LIGHT, 4).unwrap();
        assert!(b.split_residual < 1e-12);
        assert!(b.series_link_residual < 1e-12);
        assert!(b.magnetic_link_residual < 1e-12);
        assert!(b.quadrature_relative_error_si < 5e-3);
        assert_eq!(b.series_coefficients, vec![0.5, 0.375, 0.3125, 35.0 / 128.0]);
        let json = serde_json::to_string(&b).unwrap();
        assert!(json.contains("magnetic_mass"));
    }
}
