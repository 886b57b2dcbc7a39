//! Grid fields and the velocity fields derived from densities and wave functions.
//!
//! Everything here is a pure function of immutable inputs. Derivatives use
//! second-order central differences in the interior and first-order one-sided
//! differences on non-periodic boundaries (see [`ops`]).

mod grid;
pub mod io;
pub mod ops;
mod velocity;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use grid::{Boundary, Geometry, Grid};
pub use velocity::{
    charge_mass_density, clifford_identity_residual, density_from_wavefunction, drift_fields,
    osmotic_velocity, phase_and_amplitude, spin_current_density, spin_drift, transition_velocity,
    SpinSense, DEFAULT_DENSITY_FLOOR,
};

/// Normalization tolerance for densities and wave functions.
pub const NORMALIZATION_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FieldError {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("field has {got} values, grid has {expected} nodes")]
    LengthMismatch { expected: usize, got: usize },
    #[error("non-finite value at node {0}")]
    NonFinite(usize),
    #[error("fields live on different grids")]
    GridMismatch,
    #[error("not normalized: total probability {total}")]
    NotNormalized { total: f64 },
    #[error("density is identically zero")]
    DegenerateDensity,
    #[error("nodal surface: zero amplitude at interior node {index} (position {position:?})")]
    NodalSurface { index: usize, position: Vec<f64> },
    #[error("operation requires a {expected}-D grid, got {got}-D")]
    Dimension { expected: usize, got: usize },
    #[error("spin axis must have unit norm, got {0}")]
    NotUnit(f64),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

/// Real value per grid node.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalarField {
    grid: Grid,
    values: Vec<f64>,
}

impl ScalarField {
    pub fn new(grid: Grid, values: Vec<f64>) -> Result<Self, FieldError> {
        if values.len() != grid.len() {
            return Err(FieldError::LengthMismatch {
                expected: grid.len(),
                got: values.len(),
            });
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(FieldError::NonFinite(i));
        }
        Ok(Self { grid, values })
    }

    pub fn zeros(grid: &Grid) -> Self {
        Self::constant(grid, 0.0)
    }

    pub fn constant(grid: &Grid, value: f64) -> Self {
        Self {
            grid: grid.clone(),
            values: vec![value; grid.len()],
        }
    }

    /// Samples `f` at every node position.
    pub fn from_fn(grid: &Grid, f: impl Fn([f64; 3]) -> f64) -> Result<Self, FieldError> {
        let values = (0..grid.len()).map(|i| f(grid.position(i))).collect();
        Self::new(grid.clone(), values)
    }

    pub(crate) fn from_parts_unchecked(grid: Grid, values: Vec<f64>) -> Self {
        debug_assert_eq!(grid.len(), values.len());
        Self { grid, values }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn get(&self, flat: usize) -> f64 {
        self.values[flat]
    }

    /// Grid quadrature of the field.
    pub fn integral(&self) -> f64 {
        let w = self.grid.weights();
        crate::stats::pairwise_sum_by(self.values.len(), |i| self.values[i] * w[i])
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self::from_parts_unchecked(
            self.grid.clone(),
            self.values.iter().map(|&v| f(v)).collect(),
        )
    }

    pub fn scale(&self, s: f64) -> Self {
        self.map(|v| v * s)
    }

    /// `self + s * other`.
    pub fn axpy(&self, s: f64, other: &Self) -> Result<Self, FieldError> {
        self.grid.ensure_same(&other.grid)?;
        Ok(Self::from_parts_unchecked(
            self.grid.clone(),
            self.values
                .iter()
                .zip(&other.values)
                .map(|(a, b)| a + s * b)
                .collect(),
        ))
    }

    /// Weighted L2 norm `sqrt(sum w_i f_i^2)`.
    pub fn l2_norm(&self) -> f64 {
        let w = self.grid.weights();
        crate::stats::pairwise_sum_by(self.values.len(), |i| w[i] * self.values[i].powi(2)).sqrt()
    }
}

/// Real vector (one component per grid axis) per node.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VectorField {
    grid: Grid,
    components: Vec<Vec<f64>>,
}

impl VectorField {
    pub fn new(grid: Grid, components: Vec<Vec<f64>>) -> Result<Self, FieldError> {
        if components.len() != grid.ndim() {
            return Err(FieldError::Dimension {
                expected: grid.ndim(),
                got: components.len(),
            });
        }
        for c in &components {
            if c.len() != grid.len() {
                return Err(FieldError::LengthMismatch {
                    expected: grid.len(),
                    got: c.len(),
                });
            }
            if let Some(i) = c.iter().position(|v| !v.is_finite()) {
                return Err(FieldError::NonFinite(i));
            }
        }
        Ok(Self { grid, components })
    }

    pub fn zeros(grid: &Grid) -> Self {
        Self {
            grid: grid.clone(),
            components: vec![vec![0.0; grid.len()]; grid.ndim()],
        }
    }

    /// Same vector at every node. Extra trailing components are ignored.
    pub fn uniform(grid: &Grid, v: &[f64]) -> Self {
        Self {
            grid: grid.clone(),
            components: (0..grid.ndim())
                .map(|a| vec![v.get(a).copied().unwrap_or(0.0); grid.len()])
                .collect(),
        }
    }

    pub fn from_fn(grid: &Grid, f: impl Fn([f64; 3]) -> [f64; 3]) -> Result<Self, FieldError> {
        let mut components = vec![vec![0.0; grid.len()]; grid.ndim()];
        for i in 0..grid.len() {
            let v = f(grid.position(i));
            for (a, c) in components.iter_mut().enumerate() {
                c[i] = v[a];
            }
        }
        Self::new(grid.clone(), components)
    }

    /// Position field `x(r) = r`.
    pub fn coordinates(grid: &Grid) -> Self {
        Self {
            grid: grid.clone(),
            components: (0..grid.ndim())
                .map(|a| (0..grid.len()).map(|i| grid.coord(i, a)).collect())
                .collect(),
        }
    }

    pub(crate) fn from_parts_unchecked(grid: Grid, components: Vec<Vec<f64>>) -> Self {
        Self { grid, components }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn ndim(&self) -> usize {
        self.components.len()
    }

    pub fn component(&self, axis: usize) -> &[f64] {
        &self.components[axis]
    }

    pub fn components(&self) -> &[Vec<f64>] {
        &self.components
    }

    /// Vector at node `flat`, padded with zeros to three components.
    pub fn at(&self, flat: usize) -> [f64; 3] {
        let mut v = [0.0; 3];
        for (a, c) in self.components.iter().enumerate() {
            v[a] = c[flat];
        }
        v
    }

    pub fn max_norm(&self) -> f64 {
        (0..self.grid.len())
            .map(|i| {
                self.components
                    .iter()
                    .map(|c| c[i] * c[i])
                    .sum::<f64>()
                    .sqrt()
            })
            .fold(0.0, f64::max)
    }

    pub fn max_abs(&self) -> f64 {
        self.components
            .iter()
            .flat_map(|c| c.iter())
            .fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn scale(&self, s: f64) -> Self {
        Self::from_parts_unchecked(
            self.grid.clone(),
            self.components
                .iter()
                .map(|c| c.iter().map(|v| v * s).collect())
                .collect(),
        )
    }

    /// `self + s * other`.
    pub fn axpy(&self, s: f64, other: &Self) -> Result<Self, FieldError> {
        self.grid.ensure_same(&other.grid)?;
        Ok(Self::from_parts_unchecked(
            self.grid.clone(),
            self.components
                .iter()
                .zip(&other.components)
                .map(|(a, b)| a.iter().zip(b).map(|(x, y)| x + s * y).collect())
                .collect(),
        ))
    }

    /// Nodewise product with a scalar field.
    pub fn mul_scalar(&self, f: &ScalarField) -> Result<Self, FieldError> {
        self.grid.ensure_same(f.grid())?;
        Ok(Self::from_parts_unchecked(
            self.grid.clone(),
            self.components
                .iter()
                .map(|c| c.iter().zip(f.values()).map(|(a, b)| a * b).collect())
                .collect(),
        ))
    }

    /// Nodewise dot product.
    pub fn dot(&self, other: &Self) -> Result<ScalarField, FieldError> {
        self.grid.ensure_same(&other.grid)?;
        let values = (0..self.grid.len())
            .map(|i| {
                self.components
                    .iter()
                    .zip(&other.components)
                    .map(|(a, b)| a[i] * b[i])
                    .sum()
            })
            .collect();
        Ok(ScalarField::from_parts_unchecked(self.grid.clone(), values))
    }

    pub fn norm_squared(&self) -> ScalarField {
        self.dot(self).expect("same grid")
    }

    /// Grid quadrature of each component.
    pub fn integral(&self) -> Vec<f64> {
        let w = self.grid.weights();
        self.components
            .iter()
            .map(|c| crate::stats::pairwise_sum_by(c.len(), |i| c[i] * w[i]))
            .collect()
    }
}

/// Complex amplitude per node together with the particle mass and ħ.
#[derive(Debug, Clone, PartialEq)]
pub struct WaveFunction {
    grid: Grid,
    amplitudes: Vec<Complex64>,
    mass: f64,
    hbar: f64,
}

impl WaveFunction {
    /// Wraps already-normalized amplitudes.
    pub fn new(
        grid: Grid,
        amplitudes: Vec<Complex64>,
        mass: f64,
        hbar: f64,
    ) -> Result<Self, FieldError> {
        let psi = Self::checked_parts(grid, amplitudes, mass, hbar)?;
        let total = psi.norm_squared();
        if (total - 1.0).abs() > NORMALIZATION_TOLERANCE {
            return Err(FieldError::NotNormalized { total });
        }
        Ok(psi)
    }

    /// Rescales `amplitudes` to unit probability.
    pub fn normalized(
        grid: Grid,
        amplitudes: Vec<Complex64>,
        mass: f64,
        hbar: f64,
    ) -> Result<Self, FieldError> {
        let mut psi = Self::checked_parts(grid, amplitudes, mass, hbar)?;
        let total = psi.norm_squared();
        if !(total > 0.0) {
            return Err(FieldError::DegenerateDensity);
        }
        let s = total.sqrt().recip();
        psi.amplitudes.iter_mut().for_each(|a| *a *= s);
        Ok(psi)
    }

    /// Samples `f` at every node and normalizes.
    pub fn from_fn(
        grid: &Grid,
        mass: f64,
        hbar: f64,
        f: impl Fn([f64; 3]) -> Complex64,
    ) -> Result<Self, FieldError> {
        let amps = (0..grid.len()).map(|i| f(grid.position(i))).collect();
        Self::normalized(grid.clone(), amps, mass, hbar)
    }

    fn checked_parts(
        grid: Grid,
        amplitudes: Vec<Complex64>,
        mass: f64,
        hbar: f64,
    ) -> Result<Self, FieldError> {
        if amplitudes.len() != grid.len() {
            return Err(FieldError::LengthMismatch {
                expected: grid.len(),
                got: amplitudes.len(),
            });
        }
        if let Some(i) = amplitudes
            .iter()
            .position(|a| !(a.re.is_finite() && a.im.is_finite()))
        {
            return Err(FieldError::NonFinite(i));
        }
        if !(mass > 0.0 && hbar > 0.0) {
            return Err(FieldError::InvalidArgument(format!(
                "mass and hbar must be positive (mass {mass}, hbar {hbar})"
            )));
        }
        Ok(Self {
            grid,
            amplitudes,
            mass,
            hbar,
        })
    }

    /// Trajectory snapshots keep whatever norm the propagator produced.
    pub(crate) fn from_parts_unchecked(
        grid: Grid,
        amplitudes: Vec<Complex64>,
        mass: f64,
        hbar: f64,
    ) -> Self {
        Self {
            grid,
            amplitudes,
            mass,
            hbar,
        }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn mass(&self) -> f64 {
        self.mass
    }

    pub fn hbar(&self) -> f64 {
        self.hbar
    }

    /// Diffusion constant `ħ / 2m`.
    pub fn beta(&self) -> f64 {
        self.hbar / (2.0 * self.mass)
    }

    /// `sum |psi|^2 w`.
    pub fn norm_squared(&self) -> f64 {
        let w = self.grid.weights();
        crate::stats::pairwise_sum_by(self.amplitudes.len(), |i| {
            self.amplitudes[i].norm_sqr() * w[i]
        })
    }

    /// `<self|other>` under the grid quadrature.
    pub fn inner(&self, other: &WaveFunction) -> Result<Complex64, FieldError> {
        self.grid.ensure_same(&other.grid)?;
        let w = self.grid.weights();
        Ok(self
            .amplitudes
            .iter()
            .zip(&other.amplitudes)
            .zip(&w)
            .map(|((a, b), w)| a.conj() * b * w)
            .sum())
    }

    /// Multiplies every amplitude by `exp(i phase(x))`.
    pub fn with_phase(&self, phase: impl Fn([f64; 3]) -> f64) -> Self {
        let amplitudes = self
            .amplitudes
            .iter()
            .enumerate()
            .map(|(i, a)| a * Complex64::from_polar(1.0, phase(self.grid.position(i))))
            .collect();
        Self {
            amplitudes,
            ..self.clone()
        }
    }
}

/// Unit direction of the internal spinning motion.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpinAxis([f64; 3]);

impl SpinAxis {
    pub fn new(direction: [f64; 3]) -> Result<Self, FieldError> {
        let n = norm3(&direction);
        if (n - 1.0).abs() > 1e-12 {
            return Err(FieldError::NotUnit(n));
        }
        Ok(Self(direction))
    }

    /// Normalizes a non-zero direction.
    pub fn from_direction(direction: [f64; 3]) -> Result<Self, FieldError> {
        let n = norm3(&direction);
        if !(n > 0.0 && n.is_finite()) {
            return Err(FieldError::NotUnit(n));
        }
        Ok(Self(direction.map(|c| c / n)))
    }

    pub fn z() -> Self {
        Self([0.0, 0.0, 1.0])
    }

    pub fn direction(&self) -> [f64; 3] {
        self.0
    }
}

pub(crate) fn cross3(a: &[f64; 3], b: &[f64; 3]) -> [f64; 3] {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

pub(crate) fn dot3(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

pub(crate) fn norm3(a: &[f64; 3]) -> f64 {
    dot3(a, a).sqrt()
}

/// Two snapshots of a field separated by `dt`.
#[derive(Debug, Clone, PartialEq)]
pub struct TimePair<T> {
    pub earlier: T,
    pub later: T,
    pub dt: f64,
}

impl<T: Clone> TimePair<T> {
    pub fn new(earlier: T, later: T, dt: f64) -> Self {
        Self { earlier, later, dt }
    }

    /// Time-independent field: both slices equal, unit separation.
    pub fn stationary(field: T) -> Self {
        Self {
            earlier: field.clone(),
            later: field,
            dt: 1.0,
        }
    }
}
