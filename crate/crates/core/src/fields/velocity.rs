use num_complex::Complex64;

use super::ops::{gradient, phase_gradient, wrap_angle};
use super::{
    cross3, dot3, FieldError, ScalarField, SpinAxis, VectorField, WaveFunction,
    NORMALIZATION_TOLERANCE,
};

/// Relative density floor used when dividing by `rho`.
pub const DEFAULT_DENSITY_FLOOR: f64 = 1e-12;

fn check_normalized(total: f64) -> Result<(), FieldError> {
    if (total - 1.0).abs() > NORMALIZATION_TOLERANCE {
        Err(FieldError::NotNormalized { total })
    } else {
        Ok(())
    }
}

/// Probability density `|psi|^2`.
pub fn density_from_wavefunction(psi: &WaveFunction) -> Result<ScalarField, FieldError> {
    check_normalized(psi.norm_squared())?;
    let values = psi.amplitudes().iter().map(Complex64::norm_sqr).collect();
    Ok(ScalarField::from_parts_unchecked(psi.grid().clone(), values))
}

/// Charge and mass densities `(q rho, m rho)`.
pub fn charge_mass_density(
    rho: &ScalarField,
    q: f64,
    m: f64,
) -> Result<(ScalarField, ScalarField), FieldError> {
    if !(q.is_finite() && m.is_finite()) {
        return Err(FieldError::InvalidArgument(format!(
            "charge {q} and mass {m} must be finite"
        )));
    }
    if rho.min() < 0.0 {
        return Err(FieldError::InvalidArgument("negative density".into()));
    }
    check_normalized(rho.integral())?;
    Ok((rho.scale(q), rho.scale(m)))
}

fn floored_inverse(rho: &ScalarField, floor: f64) -> Result<Vec<f64>, FieldError> {
    if !(floor > 0.0) {
        return Err(FieldError::InvalidArgument(format!(
            "density floor must be positive, got {floor}"
        )));
    }
    if rho.min() < 0.0 {
        return Err(FieldError::InvalidArgument("negative density".into()));
    }
    let max = rho.max();
    if !(max > 0.0) {
        return Err(FieldError::DegenerateDensity);
    }
    let lo = floor * max;
    Ok(rho.values().iter().map(|&r| 1.0 / r.max(lo)).collect())
}

/// `grad(rho) / max(rho, floor * max(rho))` per component.
fn log_gradient(rho: &ScalarField, floor: f64) -> Result<VectorField, FieldError> {
    let inv = floored_inverse(rho, floor)?;
    let g = gradient(rho);
    let comps = g
        .components()
        .iter()
        .map(|c| c.iter().zip(&inv).map(|(d, i)| d * i).collect())
        .collect();
    Ok(VectorField::from_parts_unchecked(rho.grid().clone(), comps))
}

/// Osmotic velocity `u = beta grad(rho) / rho`.
pub fn osmotic_velocity(
    rho: &ScalarField,
    beta: f64,
    floor: f64,
) -> Result<VectorField, FieldError> {
    Ok(log_gradient(rho, floor)?.scale(beta))
}

/// Madelung amplitude and phase, `psi = exp(R + iS)`.
///
/// `S` is unwrapped axis by axis: first along axis 0 through the origin node,
/// then each later axis starting from the already unwrapped hyperplane.
/// Zero amplitude on a non-periodic boundary node is tolerated and gets the
/// floored `R` of [`DEFAULT_DENSITY_FLOOR`].
pub fn phase_and_amplitude(psi: &WaveFunction) -> Result<(ScalarField, ScalarField), FieldError> {
    let g = psi.grid();
    let amps = psi.amplitudes();
    let rho: Vec<f64> = amps.iter().map(Complex64::norm_sqr).collect();
    let max = rho.iter().copied().fold(0.0, f64::max);
    if !(max > 0.0) {
        return Err(FieldError::DegenerateDensity);
    }
    if let Some(index) = (0..g.len()).find(|&i| rho[i] == 0.0 && !g.is_boundary_node(i)) {
        return Err(FieldError::NodalSurface {
            index,
            position: g.position(index)[..g.ndim()].to_vec(),
        });
    }
    let lo = DEFAULT_DENSITY_FLOOR * max;
    let r: Vec<f64> = rho
        .iter()
        .map(|&p| 0.5 * if p > 0.0 { p.ln() } else { lo.ln() })
        .collect();

    let mut s: Vec<f64> = amps.iter().map(|a| a.arg()).collect();
    for axis in 0..g.ndim() {
        let n = g.dims()[axis];
        let stride = g.stride(axis);
        for start in 0..g.len() {
            let idx = g.multi_index(start);
            if idx[axis] != 0 || (axis + 1..g.ndim()).any(|b| idx[b] != 0) {
                continue;
            }
            for i in 1..n {
                let k = start + i * stride;
                let prev = s[k - stride];
                s[k] = prev + wrap_angle(s[k] - prev);
            }
        }
    }
    Ok((
        ScalarField::from_parts_unchecked(g.clone(), r),
        ScalarField::from_parts_unchecked(g.clone(), s),
    ))
}

/// Transition velocity `(hbar/m) grad(S) - v`.
pub fn transition_velocity(
    s: &ScalarField,
    v: &VectorField,
    m: f64,
    hbar: f64,
) -> Result<VectorField, FieldError> {
    s.grid().ensure_same(v.grid())?;
    phase_gradient(s).scale(hbar / m).axpy(-1.0, v)
}

/// Forward and backward drifts `b = upsilon + u`, `b* = upsilon - u`.
pub fn drift_fields(
    upsilon: &VectorField,
    u: &VectorField,
) -> Result<(VectorField, VectorField), FieldError> {
    Ok((upsilon.axpy(1.0, u)?, upsilon.axpy(-1.0, u)?))
}

fn require_3d(rho: &ScalarField) -> Result<(), FieldError> {
    if rho.grid().ndim() != 3 {
        return Err(FieldError::Dimension {
            expected: 3,
            got: rho.grid().ndim(),
        });
    }
    Ok(())
}

fn cross_with(f: &VectorField, s: [f64; 3]) -> VectorField {
    let n = f.grid().len();
    let mut out = vec![vec![0.0; n]; 3];
    for i in 0..n {
        let c = cross3(&f.at(i), &s);
        for a in 0..3 {
            out[a][i] = c[a];
        }
    }
    VectorField::from_parts_unchecked(f.grid().clone(), out)
}

/// Spin drifts `b = beta (grad(rho)/rho) x s`, `b* = -b`, on a 3-D grid.
pub fn spin_drift(
    rho: &ScalarField,
    axis: SpinAxis,
    beta: f64,
) -> Result<(VectorField, VectorField), FieldError> {
    require_3d(rho)?;
    let b = cross_with(&log_gradient(rho, DEFAULT_DENSITY_FLOOR)?, axis.direction()).scale(beta);
    let b_star = b.scale(-1.0);
    Ok((b, b_star))
}

/// Sense of the spin term in [`spin_current_density`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SpinSense {
    Plus,
    Minus,
}

impl SpinSense {
    pub fn sign(self) -> f64 {
        match self {
            SpinSense::Plus => 1.0,
            SpinSense::Minus => -1.0,
        }
    }
}

/// Spin current `J = [+-(grad(rho)/(m rho)) x s + v] rho` with `s = (hbar/2) s_hat`.
pub fn spin_current_density(
    rho: &ScalarField,
    axis: SpinAxis,
    v: &VectorField,
    m: f64,
    hbar: f64,
    sense: SpinSense,
) -> Result<VectorField, FieldError> {
    require_3d(rho)?;
    rho.grid().ensure_same(v.grid())?;
    let spin = axis.direction().map(|c| 0.5 * hbar * c);
    let spin_part = cross_with(&log_gradient(rho, DEFAULT_DENSITY_FLOOR)?, spin);
    spin_part.scale(sense.sign() / m).axpy(1.0, v)?.mul_scalar(rho)
}

/// `|(g x s)^2 - g^2 s^2|`.
pub fn clifford_identity_residual(g: [f64; 3], s: [f64; 3]) -> f64 {
    let c = cross3(&g, &s);
    (dot3(&c, &c) - dot3(&g, &g) * dot3(&s, &s)).abs()
}
