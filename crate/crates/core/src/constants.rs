//! Physical constants with SI and natural-unit presets.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Elementary charge used throughout the electromagnetic budget (C).
pub const ELEMENTARY_CHARGE: f64 = 1.602189e-19;
/// Classical electron radius (m).
pub const CLASSICAL_ELECTRON_RADIUS: f64 = 2.8179403e-15;
/// Vacuum permeability `4 pi 1e-7` (Wb/(A m)).
pub const MU0: f64 = 4.0e-7 * PI;
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;
pub const HBAR: f64 = 1.054571817e-34;
pub const PLANCK: f64 = 2.0 * PI * HBAR;
pub const ELECTRON_MASS: f64 = 9.1093837015e-31;
pub const BOHR_RADIUS: f64 = 5.29177210903e-11;
/// Speed of light in atomic units (inverse fine-structure constant).
pub const C_ATOMIC: f64 = 137.035999084;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum UnitPreset {
    #[serde(alias = "SI")]
    Si,
    Natural,
}

#[derive(Debug, Error, PartialEq)]
pub enum ConstantsError {
    #[error("constant `{0}` must be positive and finite")]
    NotPositive(&'static str),
    #[error("mu0 eps0 c^2 = {0}, expected 1")]
    Inconsistent(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhysicalConstants {
    pub hbar: f64,
    pub c: f64,
    pub mu0: f64,
    pub eps0: f64,
    pub charge: f64,
    pub electron_mass: f64,
    pub electron_radius: f64,
    pub bohr_radius: f64,
}

impl PhysicalConstants {
    pub fn new(
        hbar: f64,
        c: f64,
        mu0: f64,
        eps0: f64,
        charge: f64,
        electron_mass: f64,
        electron_radius: f64,
        bohr_radius: f64,
    ) -> Result<Self, ConstantsError> {
        let k = Self {
            hbar,
            c,
            mu0,
            eps0,
            charge,
            electron_mass,
            electron_radius,
            bohr_radius,
        };
        k.validate()?;
        Ok(k)
    }

    pub fn validate(&self) -> Result<(), ConstantsError> {
        for (name, v) in [
            ("hbar", self.hbar),
            ("c", self.c),
            ("mu0", self.mu0),
            ("eps0", self.eps0),
            ("charge", self.charge),
            ("electron_mass", self.electron_mass),
            ("electron_radius", self.electron_radius),
            ("bohr_radius", self.bohr_radius),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(ConstantsError::NotPositive(name));
            }
        }
        let p = self.mu0 * self.eps0 * self.c * self.c;
        if (p - 1.0).abs() > 1e-10 {
            return Err(ConstantsError::Inconsistent(p));
        }
        Ok(())
    }

    /// SI values; `eps0` follows from `mu0` and `c`.
    pub fn si() -> Self {
        Self {
            hbar: HBAR,
            c: SPEED_OF_LIGHT,
            mu0: MU0,
            eps0: 1.0 / (MU0 * SPEED_OF_LIGHT * SPEED_OF_LIGHT),
            charge: ELEMENTARY_CHARGE,
            electron_mass: ELECTRON_MASS,
            electron_radius: CLASSICAL_ELECTRON_RADIUS,
            bohr_radius: BOHR_RADIUS,
        }
    }

    /// Atomic units: `hbar = m_e = e = 4 pi eps0 = a0 = 1`.
    pub fn natural() -> Self {
        let eps0 = 1.0 / (4.0 * PI);
        Self {
            hbar: 1.0,
            c: C_ATOMIC,
            mu0: 1.0 / (eps0 * C_ATOMIC * C_ATOMIC),
            eps0,
            charge: 1.0,
            electron_mass: 1.0,
            electron_radius: 1.0 / (C_ATOMIC * C_ATOMIC),
            bohr_radius: 1.0,
        }
    }

    pub fn preset(p: UnitPreset) -> Self {
        match p {
            UnitPreset::Si => Self::si(),
            UnitPreset::Natural => Self::natural(),
        }
    }

    /// Planck constant `h = 2 pi hbar`.
    pub fn planck(&self) -> f64 {
        2.0 * PI * self.hbar
    }

    /// Electron diffusion constant `hbar / 2 m_e`.
    pub fn electron_beta(&self) -> f64 {
        self.hbar / (2.0 * self.electron_mass)
    }

    /// Coulomb constant `1 / (4 pi eps0)`.
    pub fn coulomb(&self) -> f64 {
        1.0 / (4.0 * PI * self.eps0)
    }
}

impl Default for PhysicalConstants {
    fn default() -> Self {
        Self::si()
    }
}
