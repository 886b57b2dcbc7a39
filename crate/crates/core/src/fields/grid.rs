use serde::{Deserialize, Serialize};

use super::FieldError;

/// Boundary treatment shared by every axis of a grid.
///
/// * `DirichletZero`: the field vanishes one spacing beyond the first and last
///   node; nodes carry uniform quadrature weight.
/// * `Reflecting`: walls sit on the first and last node; quadrature is the
///   trapezoid rule and normal fluxes vanish on the walls.
/// * `Periodic`: the axis wraps with period `dims * spacing`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Boundary {
    DirichletZero,
    Reflecting,
    Periodic,
}

impl Boundary {
    pub fn as_str(&self) -> &'static str {
        match self {
            Boundary::DirichletZero => "dirichlet-zero",
            Boundary::Reflecting => "reflecting",
            Boundary::Periodic => "periodic",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "dirichlet-zero" | "dirichlet" => Some(Boundary::DirichletZero),
            "reflecting" => Some(Boundary::Reflecting),
            "periodic" => Some(Boundary::Periodic),
            _ => None,
        }
    }
}

/// Coordinate interpretation of the node positions.
///
/// `Radial` grids are one-dimensional in `r` and describe spherically
/// symmetric 3-D fields: divergence and Laplacian use the spherical forms and
/// quadrature carries the `4 pi r^2` shell factor. The origin `r = 0` is never
/// a node; the field is regular there and vanishes past the outer node.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Geometry {
    Cartesian,
    Radial,
}

impl Geometry {
    pub fn as_str(&self) -> &'static str {
        match self {
            Geometry::Cartesian => "cartesian",
            Geometry::Radial => "radial",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "cartesian" => Some(Geometry::Cartesian),
            "radial" => Some(Geometry::Radial),
            _ => None,
        }
    }
}

/// Uniform rectangular grid with row-major node ordering (last axis fastest).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    dims: Vec<usize>,
    spacing: Vec<f64>,
    origin: Vec<f64>,
    boundary: Boundary,
    geometry: Geometry,
}

impl Grid {
    pub fn new(
        dims: Vec<usize>,
        spacing: Vec<f64>,
        origin: Vec<f64>,
        boundary: Boundary,
    ) -> Result<Self, FieldError> {
        Self::with_geometry(dims, spacing, origin, boundary, Geometry::Cartesian)
    }

    pub fn with_geometry(
        dims: Vec<usize>,
        spacing: Vec<f64>,
        origin: Vec<f64>,
        boundary: Boundary,
        geometry: Geometry,
    ) -> Result<Self, FieldError> {
        if dims.is_empty() || dims.len() > 3 {
            return Err(FieldError::InvalidGrid(format!(
                "grid must have 1 to 3 axes, got {}",
                dims.len()
            )));
        }
        if spacing.len() != dims.len() || origin.len() != dims.len() {
            return Err(FieldError::InvalidGrid(
                "dims, spacing and origin must have the same length".into(),
            ));
        }
        if let Some(d) = dims.iter().find(|&&d| d < 3) {
            return Err(FieldError::InvalidGrid(format!(
                "every axis needs at least 3 points, got {d}"
            )));
        }
        if let Some(h) = spacing.iter().find(|&&h| !(h > 0.0 && h.is_finite())) {
            return Err(FieldError::InvalidGrid(format!(
                "spacing must be positive and finite, got {h}"
            )));
        }
        if origin.iter().any(|o| !o.is_finite()) {
            return Err(FieldError::InvalidGrid("origin must be finite".into()));
        }
        if geometry == Geometry::Radial {
            if dims.len() != 1 {
                return Err(FieldError::InvalidGrid(
                    "radial grids are one-dimensional".into(),
                ));
            }
            if boundary != Boundary::DirichletZero {
                return Err(FieldError::InvalidGrid(
                    "radial grids use a Dirichlet outer boundary".into(),
                ));
            }
            if (origin[0] - spacing[0]).abs() > 1e-12 * spacing[0] {
                return Err(FieldError::InvalidGrid(
                    "radial grids start one spacing from r = 0".into(),
                ));
            }
        }
        Ok(Self {
            dims,
            spacing,
            origin,
            boundary,
            geometry,
        })
    }

    /// Radial grid with nodes at `r = h, 2h, ..., n h`.
    pub fn radial(n: usize, spacing: f64) -> Result<Self, FieldError> {
        Self::with_geometry(
            vec![n],
            vec![spacing],
            vec![spacing],
            Boundary::DirichletZero,
            Geometry::Radial,
        )
    }

    /// Cartesian 1-D grid covering `[lo, hi]` with `n` nodes (endpoints included).
    pub fn line(n: usize, lo: f64, hi: f64, boundary: Boundary) -> Result<Self, FieldError> {
        if n < 2 || !(hi > lo) {
            return Err(FieldError::InvalidGrid(format!(
                "invalid line [{lo}, {hi}] with {n} nodes"
            )));
        }
        Self::new(
            vec![n],
            vec![(hi - lo) / (n - 1) as f64],
            vec![lo],
            boundary,
        )
    }

    /// Periodic 1-D grid of length `length` starting at `lo`.
    pub fn periodic_line(n: usize, lo: f64, length: f64) -> Result<Self, FieldError> {
        Self::new(vec![n], vec![length / n as f64], vec![lo], Boundary::Periodic)
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn spacing(&self) -> &[f64] {
        &self.spacing
    }

    pub fn origin(&self) -> &[f64] {
        &self.origin
    }

    pub fn boundary(&self) -> Boundary {
        self.boundary
    }

    pub fn geometry(&self) -> Geometry {
        self.geometry
    }

    pub fn ndim(&self) -> usize {
        self.dims.len()
    }

    pub fn len(&self) -> usize {
        self.dims.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn min_spacing(&self) -> f64 {
        self.spacing.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// Stride of `axis` in the flat node vector.
    pub fn stride(&self, axis: usize) -> usize {
        self.dims[axis + 1..].iter().product()
    }

    pub fn multi_index(&self, mut flat: usize) -> [usize; 3] {
        let mut idx = [0; 3];
        for axis in (0..self.ndim()).rev() {
            idx[axis] = flat % self.dims[axis];
            flat /= self.dims[axis];
        }
        idx
    }

    pub fn flat_index(&self, idx: &[usize]) -> usize {
        idx.iter()
            .zip(&self.dims)
            .fold(0, |acc, (&i, &d)| acc * d + i)
    }

    /// Coordinate of node `flat` along `axis`.
    pub fn coord(&self, flat: usize, axis: usize) -> f64 {
        let i = self.multi_index(flat)[axis];
        self.origin[axis] + i as f64 * self.spacing[axis]
    }

    /// Node position, padded with zeros beyond `ndim`.
    pub fn position(&self, flat: usize) -> [f64; 3] {
        let idx = self.multi_index(flat);
        let mut x = [0.0; 3];
        for axis in 0..self.ndim() {
            x[axis] = self.origin[axis] + idx[axis] as f64 * self.spacing[axis];
        }
        x
    }

    /// Axis coordinates `origin + i * spacing`.
    pub fn axis_coords(&self, axis: usize) -> Vec<f64> {
        (0..self.dims[axis])
            .map(|i| self.origin[axis] + i as f64 * self.spacing[axis])
            .collect()
    }

    /// Whether node `flat` sits on a non-periodic boundary face.
    pub fn is_boundary_node(&self, flat: usize) -> bool {
        if self.boundary == Boundary::Periodic {
            return false;
        }
        let idx = self.multi_index(flat);
        (0..self.ndim()).any(|a| {
            let first = idx[a] == 0 && self.geometry != Geometry::Radial;
            first || idx[a] + 1 == self.dims[a]
        })
    }

    /// Quadrature weight of one node (volume it represents).
    pub fn weight(&self, flat: usize) -> f64 {
        match self.geometry {
            Geometry::Radial => {
                let r = self.coord(flat, 0);
                4.0 * std::f64::consts::PI * r * r * self.spacing[0]
            }
            Geometry::Cartesian => {
                let idx = self.multi_index(flat);
                let mut w = 1.0;
                for a in 0..self.ndim() {
                    let mut wa = self.spacing[a];
                    if self.boundary == Boundary::Reflecting
                        && (idx[a] == 0 || idx[a] + 1 == self.dims[a])
                    {
                        wa *= 0.5;
                    }
                    w *= wa;
                }
                w
            }
        }
    }

    pub fn weights(&self) -> Vec<f64> {
        (0..self.len()).map(|i| self.weight(i)).collect()
    }

    /// Total measure of the domain under the grid quadrature.
    pub fn volume(&self) -> f64 {
        self.weights().iter().sum()
    }

    pub fn ensure_same(&self, other: &Grid) -> Result<(), FieldError> {
        if self == other {
            Ok(())
        } else {
            Err(FieldError::GridMismatch)
        }
    }
}
