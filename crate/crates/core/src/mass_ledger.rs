//! Invariant-mass bookkeeping: `m = E_net / (4 pi R^2 nu_vib nu_rot)` with
//! `E_net = E + sum(sign * term)`, vibration-period time units and the
//! relativistic mass/energy expansion.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Agreement required between the stored mass and its recomputation.
pub const RECOMPUTE_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MassLedgerError {
    #[error("{0} must be positive and finite")]
    NonPositive(&'static str),
    #[error("|dv| = {dv} is not below c = {c}")]
    Superluminal { dv: f64, c: f64 },
    #[error("transition would leave net energy {e_net} <= 0")]
    Unphysical { e_net: f64 },
    #[error("new terms change the net energy by {got}, transition supplies {expected}")]
    Unbalanced { expected: f64, got: f64 },
    #[error("stored mass {stored} disagrees with recomputed {recomputed}")]
    InvariantViolated { stored: f64, recomputed: f64 },
    #[error("after-state mass {after} differs from before-state mass {before}")]
    MassChanged { before: f64, after: f64 },
    #[error("invalid event log: {0}")]
    Log(String),
}

/// Named energy terms of a state, in J.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct LedgerTerms {
    pub v1: f64,
    pub v2: f64,
    pub e_k: f64,
    pub v_noise: f64,
}

/// Sign each term carries in the net energy.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SignPattern {
    pub v1: f64,
    pub v2: f64,
    pub e_k: f64,
    pub v_noise: f64,
}

impl Default for SignPattern {
    /// `E - V1 + V2 + E_k + V_noise`.
    fn default() -> Self {
        Self {
            v1: -1.0,
            v2: 1.0,
            e_k: 1.0,
            v_noise: 1.0,
        }
    }
}

impl SignPattern {
    fn validate(&self) -> Result<(), MassLedgerError> {
        for s in [self.v1, self.v2, self.e_k, self.v_noise] {
            if s != 1.0 && s != -1.0 {
                return Err(MassLedgerError::Log(format!("term signs must be +1 or -1, got {s}")));
            }
        }
        Ok(())
    }

    /// `sum(sign * term)` over the system terms (noise excluded).
    pub fn system(&self, t: &LedgerTerms) -> f64 {
        self.v1 * t.v1 + self.v2 * t.v2 + self.e_k * t.e_k
    }

    pub fn total(&self, t: &LedgerTerms) -> f64 {
        self.system(t) + self.v_noise * t.v_noise
    }
}

/// One state of the ledger; `mass` is the stored invariant.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LedgerState {
    pub energy: f64,
    pub terms: LedgerTerms,
    pub signs: SignPattern,
    pub nu_vib: f64,
    pub nu_rot: f64,
    pub radius: f64,
    pub mass: f64,
}

fn positive(name: &'static str, x: f64) -> Result<(), MassLedgerError> {
    if x > 0.0 && x.is_finite() {
        Ok(())
    } else {
        Err(MassLedgerError::NonPositive(name))
    }
}

impl LedgerState {
    /// Builds a state and fixes its mass from the definition.
    pub fn new(
        energy: f64,
        terms: LedgerTerms,
        signs: SignPattern,
        nu_vib: f64,
        nu_rot: f64,
        radius: f64,
    ) -> Result<Self, MassLedgerError> {
        let mut s = Self {
            energy,
            terms,
            signs,
            nu_vib,
            nu_rot,
            radius,
            mass: 0.0,
        };
        s.check_inputs()?;
        s.mass = s.recomputed_mass();
        positive("mass", s.mass)?;
        Ok(s)
    }

    /// Interaction-free state with `4 pi R^2 nu_vib nu_rot = c^2`.
    pub fn free_particle(energy: f64, radius: f64, nu_rot: f64, c: f64) -> Result<Self, MassLedgerError> {
        positive("radius", radius)?;
        positive("nu_rot", nu_rot)?;
        positive("c", c)?;
        let nu_vib = c * c / (4.0 * PI * radius * radius * nu_rot);
        Self::new(energy, LedgerTerms::default(), SignPattern::default(), nu_vib, nu_rot, radius)
    }

    /// Free electron with rim speed `c`: `nu_rot = c / 2 pi R`.
    pub fn electron(mass: f64, radius: f64, c: f64) -> Result<Self, MassLedgerError> {
        Self::free_particle(mass * c * c, radius, c / (2.0 * PI * radius), c)
    }

    fn check_inputs(&self) -> Result<(), MassLedgerError> {
        positive("radius", self.radius)?;
        positive("nu_vib", self.nu_vib)?;
        positive("nu_rot", self.nu_rot)?;
        self.signs.validate()?;
        let t = &self.terms;
        if ![self.energy, t.v1, t.v2, t.e_k, t.v_noise].iter().all(|x| x.is_finite()) {
            return Err(MassLedgerError::Log("energies must be finite".into()));
        }
        let e_net = self.net_energy();
        if !(e_net > 0.0) {
            return Err(MassLedgerError::Unphysical { e_net });
        }
        Ok(())
    }

    /// `E_0 = -sum(sign * term)` over the system terms.
    pub fn transformed_energy(&self) -> f64 {
        -self.signs.system(&self.terms)
    }

    /// `E - E_0 + sign_noise V_noise`.
    pub fn net_energy(&self) -> f64 {
        self.energy + self.signs.total(&self.terms)
    }

    /// `4 pi R^2 nu_vib nu_rot`.
    pub fn surface_rate(&self) -> f64 {
        4.0 * PI * self.radius * self.radius * self.nu_vib * self.nu_rot
    }

    pub fn recomputed_mass(&self) -> f64 {
        self.net_energy() / self.surface_rate()
    }

    pub fn time_unit(&self) -> Result<f64, MassLedgerError> {
        time_unit(self.nu_vib)
    }
}

/// Stored invariant mass, after checking it against the definition.
pub fn ledger_mass(state: &LedgerState) -> Result<f64, MassLedgerError> {
    state.check_inputs()?;
    let recomputed = state.recomputed_mass();
    if (recomputed - state.mass).abs() > RECOMPUTE_TOLERANCE * state.mass.abs() {
        return Err(MassLedgerError::InvariantViolated {
            stored: state.mass,
            recomputed,
        });
    }
    Ok(state.mass)
}

/// How a transition redistributes its energy over the terms.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TermUpdate {
    /// `dE` enters `E_k` and `delta` enters `V_noise`, each with its sign.
    #[default]
    Default,
    /// Explicit new terms; their signed change must equal `dE + delta`.
    Explicit { terms: LedgerTerms },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TransitionRecord {
    pub delta_e: f64,
    pub delta_noise: f64,
    pub delta_v: f64,
    pub before: LedgerState,
    pub after: LedgerState,
}

/// Absorbs `delta_e + delta_noise` (positive on absorption) and solves the
/// new vibration frequency so the stored mass is unchanged.
pub fn apply_transition(
    state: &LedgerState,
    delta_e: f64,
    delta_noise: f64,
    update: TermUpdate,
    delta_v: f64,
) -> Result<TransitionRecord, MassLedgerError> {
    let mass = ledger_mass(state)?;
    if !(delta_e.is_finite() && delta_noise.is_finite() && delta_v.is_finite()) {
        return Err(MassLedgerError::Log("transition energies must be finite".into()));
    }
    let s = state.signs;
    let terms = match update {
        TermUpdate::Default => {
            let mut t = state.terms;
            t.e_k += s.e_k * delta_e;
            t.v_noise += s.v_noise * delta_noise;
            t
        }
        TermUpdate::Explicit { terms } => {
            let got = s.total(&terms) - s.total(&state.terms);
            let expected = delta_e + delta_noise;
            let scale = state.energy.abs().max(expected.abs()).max(f64::MIN_POSITIVE);
            if (got - expected).abs() > RECOMPUTE_TOLERANCE * scale {
                return Err(MassLedgerError::Unbalanced { expected, got });
            }
            terms
        }
    };
    let mut after = LedgerState { terms, ..*state };
    let e_net = after.net_energy();
    if !(e_net > 0.0) {
        return Err(MassLedgerError::Unphysical { e_net });
    }
    if delta_e == 0.0 && delta_noise == 0.0 && terms == state.terms {
        after.nu_vib = state.nu_vib;
    } else {
        after.nu_vib = e_net / (4.0 * PI * state.radius * state.radius * state.nu_rot * mass);
    }
    positive("nu_vib", after.nu_vib)?;
    Ok(TransitionRecord {
        delta_e,
        delta_noise,
        delta_v,
        before: *state,
        after,
    })
}

/// `T = 1 / nu_vib`.
pub fn time_unit(nu_vib: f64) -> Result<f64, MassLedgerError> {
    positive("nu_vib", nu_vib)?;
    Ok(1.0 / nu_vib)
}

fn check_speed(dv: f64, c: f64) -> Result<f64, MassLedgerError> {
    positive("c", c)?;
    let beta = dv / c;
    if !(beta.abs() < 1.0) {
        return Err(MassLedgerError::Superluminal { dv, c });
    }
    Ok(beta)
}

/// `1 / sqrt(1 - dv^2/c^2)`.
pub fn lorentz_factor(dv: f64, c: f64) -> Result<f64, MassLedgerError> {
    let b = check_speed(dv, c)?;
    Ok(1.0 / ((1.0 - b) * (1.0 + b)).sqrt())
}

/// `gamma - 1` without cancellation.
pub fn lorentz_factor_minus_one(dv: f64, c: f64) -> Result<f64, MassLedgerError> {
    let b = check_speed(dv, c)?;
    Ok((-0.5 * (-b * b).ln_1p()).exp_m1())
}

/// `T = T'' / sqrt(1 - dv^2/c^2)`.
pub fn related_time_units(t_other: f64, dv: f64, c: f64) -> Result<f64, MassLedgerError> {
    positive("time unit", t_other)?;
    Ok(t_other * lorentz_factor(dv, c)?)
}

/// Coefficient of `(dv/c)^(2k)` in `gamma - 1`: `C(2k, k) / 4^k`.
pub fn series_coefficients(order: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(order);
    let mut c = 0.5;
    for k in 1..=order {
        out.push(c);
        c *= (2 * k + 1) as f64 / (2 * k + 2) as f64;
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RelativisticExpansion {
    pub coefficients: Vec<f64>,
    /// `coefficient_k m0 dv^(2k) / c^(2k-2)`.
    pub terms: Vec<f64>,
    pub partial_sums: Vec<f64>,
    /// `m0 (gamma - 1) c^2`.
    pub exact: f64,
}

impl RelativisticExpansion {
    pub fn sum(&self) -> f64 {
        self.partial_sums.last().copied().unwrap_or(0.0)
    }

    pub fn relative_error(&self) -> f64 {
        if self.exact == 0.0 {
            self.sum().abs()
        } else {
            (self.exact - self.sum()).abs() / self.exact.abs()
        }
    }
}

/// First `order` terms of `(m - m0) c^2` and the exact value.
pub fn relativistic_expansion(m0: f64, dv: f64, c: f64, order: usize) -> Result<RelativisticExpansion, MassLedgerError> {
    positive("m0", m0)?;
    let b = check_speed(dv, c)?;
    let coefficients = series_coefficients(order);
    let b2 = b * b;
    let rest = m0 * c * c;
    let mut power = b2;
    let mut terms = Vec::with_capacity(order);
    for &k in &coefficients {
        terms.push(k * rest * power);
        power *= b2;
    }
    let mut partial_sums = Vec::with_capacity(order);
    let mut acc = 0.0;
    for &t in &terms {
        acc += t;
        partial_sums.push(acc);
    }
    Ok(RelativisticExpansion {
        coefficients,
        terms,
        partial_sums,
        exact: rest * lorentz_factor_minus_one(dv, c)?,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EnergySplit {
    /// `m0 dv^2 / 2`.
    pub magnetic: f64,
    /// Remainder `m0 (gamma - 1) c^2 - magnetic`.
    pub radiation: f64,
    pub exact: f64,
}

pub fn energy_split(m0: f64, dv: f64, c: f64) -> Result<EnergySplit, MassLedgerError> {
    positive("m0", m0)?;
    let exact = m0 * c * c * lorentz_factor_minus_one(dv, c)?;
    let magnetic = 0.5 * m0 * dv * dv;
    Ok(EnergySplit {
        magnetic,
        radiation: exact - magnetic,
        exact,
    })
}

/// Spin-transition split with `dv = |b* - b|`.
pub fn spin_energy_split(m0: f64, b: [f64; 3], b_star: [f64; 3], c: f64) -> Result<EnergySplit, MassLedgerError> {
    let d = [b_star[0] - b[0], b_star[1] - b[1], b_star[2] - b[2]];
    energy_split(m0, (d[0] * d[0] + d[1] * d[1] + d[2] * d[2]).sqrt(), c)
}

/// `(m0, m)` with `m0` the before-state invariant and `m = gamma m0`.
pub fn state_relative_mass(
    before: &LedgerState,
    after: &LedgerState,
    dv: f64,
    c: f64,
) -> Result<(f64, f64), MassLedgerError> {
    let m0 = ledger_mass(before)?;
    let m_after = ledger_mass(after)?;
    if m_after != m0 {
        return Err(MassLedgerError::MassChanged {
            before: m0,
            after: m_after,
        });
    }
    Ok((m0, m0 * lorentz_factor(dv, c)?))
}

/// One transition request in an event log.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LedgerEvent {
    pub delta_e: f64,
    #[serde(default)]
    pub delta_noise: f64,
    #[serde(default)]
    pub update: TermUpdate,
    #[serde(default)]
    pub delta_v: f64,
}

/// Initial state plus a sequence of transitions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LedgerLog {
    pub initial: LedgerState,
    pub events: Vec<LedgerEvent>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LedgerHistory {
    pub initial: LedgerState,
    pub transitions: Vec<TransitionRecord>,
    /// Largest `|m_stored - m_recomputed| / m` over every state.
    pub max_recompute_error: f64,
    /// Largest `|m_k - m_0| / m_0` over every state.
    pub max_mass_drift: f64,
}

/// Replays `log`, re-verifying the invariant after every event.
pub fn replay(log: &LedgerLog) -> Result<LedgerHistory, MassLedgerError> {
    let m0 = ledger_mass(&log.initial)?;
    let mut state = log.initial;
    let mut transitions = Vec::with_capacity(log.events.len());
    let mut max_recompute_error: f64 = 0.0;
    let mut max_mass_drift: f64 = 0.0;
    for ev in &log.events {
        let rec = apply_transition(&state, ev.delta_e, ev.delta_noise, ev.update, ev.delta_v)?;
        let m = ledger_mass(&rec.after)?;
        max_recompute_error = max_recompute_error.max((rec.after.recomputed_mass() - m).abs() / m);
        max_mass_drift = max_mass_drift.max((m - m0).abs() / m0);
        state = rec.after;
        transitions.push(rec);
    }
    Ok(LedgerHistory {
        initial: log.initial,
        transitions,
        max_recompute_error,
        max_mass_drift,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constants::PhysicalConstants;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    const C: f64 = 299_792_458.0;

    fn atom() -> LedgerState {
        let k = PhysicalConstants::si();
        let e = k.electron_mass * C * C;
        let terms = LedgerTerms {
            v1: 4.36e-18,
            v2: 0.0,
            e_k: 2.18e-18,
            v_noise: 0.0,
        };
        let free = LedgerState::electron(k.electron_mass, k.electron_radius, C).unwrap();
        let nu_vib = (e - 4.36e-18 + 2.18e-18) / (free.surface_rate() / free.nu_vib * k.electron_mass);
        LedgerState::new(e, terms, SignPattern::default(), nu_vib, free.nu_rot, free.radius).unwrap()
    }

    #[test]
    fn free_particle_mass_is_e_over_c_squared() {
        let k = PhysicalConstants::si();
        let s = LedgerState::electron(k.electron_mass, k.electron_radius, C).unwrap();
        assert!((s.energy - 8.18710e-14).abs() / 8.18710e-14 < 1e-6);
        let m = ledger_mass(&s).unwrap();
        assert!((m - 9.10938e-31).abs() / 9.10938e-31 < 1e-6);
        assert!((m - s.energy / (C * C)).abs() <= 1e-15 * m);
        assert_eq!(s.transformed_energy(), 0.0);
    }

    #[test]
    fn doubling_vibration_halves_mass() {
        let s = atom();
        let d = LedgerState::new(s.energy, s.terms, s.signs, 2.0 * s.nu_vib, s.nu_rot, s.radius).unwrap();
        assert!((d.mass - 0.5 * s.mass).abs() <= 1e-15 * s.mass);
    }

    #[test]
    fn transformed_energy_follows_sign_pattern() {
        let s = atom();
        assert_eq!(s.transformed_energy(), s.terms.v1 - s.terms.v2 - s.terms.e_k);
    }

    #[test]
    fn identity_transition() {
        let s = atom();
        let r = apply_transition(&s, 0.0, 0.0, TermUpdate::Default, 0.0).unwrap();
        assert_eq!(r.after, s);
    }

    #[test]
    fn emission_rescales_vibration() {
        let s = atom();
        let de = -2.18e-18;
        let r = apply_transition(&s, de, 0.0, TermUpdate::Default, 0.0).unwrap();
        let ratio = r.after.nu_vib / s.nu_vib;
        let expect = (s.net_energy() + de) / s.net_energy();
        assert!((ratio - expect).abs() < 1e-15);
        assert!(ratio < 1.0);
        assert_eq!(ledger_mass(&r.after).unwrap(), ledger_mass(&s).unwrap());
        assert!((r.after.recomputed_mass() - s.mass).abs() <= 1e-15 * s.mass);
    }

    #[test]
    fn explicit_terms_must_balance() {
        let s = atom();
        let mut t = s.terms;
        t.v1 += 1e-19;
        let ok = apply_transition(&s, -1e-19, 0.0, TermUpdate::Explicit { terms: t }, 0.0).unwrap();
        assert_eq!(ok.after.terms, t);
        assert!(matches!(
            apply_transition(&s, 1e-19, 0.0, TermUpdate::Explicit { terms: t }, 0.0),
            Err(MassLedgerError::Unbalanced { .. })
        ));
    }

    #[test]
    fn unphysical_transition_is_rejected() {
        let s = atom();
        let e = apply_transition(&s, -2.0 * s.net_energy(), 0.0, TermUpdate::Default, 0.0);
        assert!(matches!(e, Err(MassLedgerError::Unphysical { .. })));
        assert!(LedgerState::free_particle(1.0, 0.0, 1.0, C).is_err());
    }

    #[test]
    fn random_transitions_keep_mass() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut s = atom();
        let m0 = s.mass;
        for _ in 0..10_000 {
            let de = rng.random_range(-1e-17..1e-17);
            let dn = rng.random_range(-1e-19..1e-19);
            let r = apply_transition(&s, de, dn, TermUpdate::Default, 0.0).unwrap();
            assert_eq!(r.before.mass, r.after.mass);
            s = r.after;
        }
        assert_eq!(ledger_mass(&s).unwrap(), m0);
        assert!((s.recomputed_mass() - m0).abs() <= 1e-12 * m0);
    }

    #[test]
    fn time_units() {
        assert_eq!(time_unit(1e15).unwrap(), 1e-15);
        assert_eq!(related_time_units(2.0, 0.0, C).unwrap(), 2.0);
        let t = related_time_units(1.0, 0.6 * C, C).unwrap();
        assert!((t - 1.25).abs() < 1e-15);
        assert!(matches!(related_time_units(1.0, C, C), Err(MassLedgerError::Superluminal { .. })));
        assert!(time_unit(0.0).is_err());
    }

    #[test]
    fn leading_series_coefficients() {
        assert_eq!(series_coefficients(4), vec![0.5, 0.375, 0.3125, 35.0 / 128.0]);
        fn binom(n: u64, k: u64) -> u64 {
            (1..=k).fold(1, |acc, i| acc * (n - k + i) / i)
        }
        for (k, c) in series_coefficients(12).iter().enumerate() {
            let k = k as u64 + 1;
            assert_eq!(*c, binom(2 * k, k) as f64 / 4f64.powi(k as i32));
        }
    }

    #[test]
    fn series_converges_monotonically() {
        let x = relativistic_expansion(1.0, 0.5 * C, C, 30).unwrap();
        for w in x.partial_sums.windows(2) {
            assert!(w[1] >= w[0]);
        }
        assert!(x.partial_sums[5] > x.partial_sums[4]);
        assert!(x.partial_sums.iter().all(|&s| s <= x.exact));
        assert!(x.relative_error() < 1e-9);
        let zero = relativistic_expansion(1.0, 0.0, C, 4).unwrap();
        assert!(zero.terms.iter().all(|&t| t == 0.0) && zero.exact == 0.0);
    }

    #[test]
    fn four_term_error_at_a_tenth_of_c() {
        let x = relativistic_expansion(1.0, 0.1 * C, C, 4).unwrap();
        let long = relativistic_expansion(1.0, 0.1 * C, C, 40).unwrap();
        let tail: f64 = long.terms[4..].iter().sum();
        assert!((x.relative_error() - tail / x.exact).abs() / x.relative_error() < 1e-6);
        assert!(x.relative_error() > 4.9e-9 && x.relative_error() < 5.0e-9, "{}", x.relative_error());
    }

    #[test]
    fn split_sums_to_exact() {
        let m = PhysicalConstants::si().electron_mass;
        for f in [0.001, 0.1, 0.5] {
            let s = energy_split(m, f * C, C).unwrap();
            assert!((s.magnetic + s.radiation - s.exact).abs() <= 1e-12 * s.exact);
            let series = relativistic_expansion(m, f * C, C, 60).unwrap().sum();
            assert!((s.exact - series).abs() <= 1e-12 * s.exact);
        }
        let s = energy_split(m, 0.01 * C, C).unwrap();
        assert!((s.radiation / s.magnetic / 7.5e-5 - 1.0).abs() < 0.01);
        assert_eq!(energy_split(m, 0.0, C).unwrap().magnetic, 0.0);
        let spin = spin_energy_split(m, [0.0, 0.03 * C, 0.0], [0.0, -0.03 * C, 0.0], C).unwrap();
        assert_eq!(spin, energy_split(m, 0.06 * C, C).unwrap());
    }

    #[test]
    fn relative_mass_matches_series() {
        let s = atom();
        let r = apply_transition(&s, -1e-18, 0.0, TermUpdate::Default, 0.0).unwrap();
        let (m0, m) = state_relative_mass(&r.before, &r.after, 0.6 * C, C).unwrap();
        assert!((m - 1.25 * m0).abs() <= 1e-15 * m);
        let (a, b) = state_relative_mass(&s, &s, 0.0, C).unwrap();
        assert_eq!(a, b);
        let dv = 0.1 * C;
        let (m0, m) = state_relative_mass(&s, &s, dv, C).unwrap();
        let split = energy_split(m0, dv, C).unwrap();
        assert!(((m - m0) * C * C - split.exact).abs() <= 1e-12 * split.exact);
    }

    #[test]
    fn replay_round_trips_through_json() {
        let log = LedgerLog {
            initial: atom(),
            events: vec![
                LedgerEvent {
                    delta_e: -1.6e-18,
                    delta_noise: 1e-21,
                    update: TermUpdate::Default,
                    delta_v: 1e5,
                },
                LedgerEvent {
                    delta_e: 1.6e-18,
                    delta_noise: 0.0,
                    update: TermUpdate::Default,
                    delta_v: -1e5,
                },
            ],
        };
        let text = serde_json::to_string(&log).unwrap();
        let back: LedgerLog = serde_json::from_str(&text).unwrap();
        assert_eq!(back, log);
        let h = replay(&back).unwrap();
        assert_eq!(h.transitions.len(), 2);
        assert_eq!(h.max_mass_drift, 0.0);
        assert!(h.max_recompute_error < 1e-12);
    }

    #[test]
    fn corrupted_mass_is_detected() {
        let mut s = atom();
        s.mass *= 1.0 + 1e-9;
        assert!(matches!(ledger_mass(&s), Err(MassLedgerError::InvariantViolated { .. })));
    }
}
