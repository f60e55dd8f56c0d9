//! Nondecreasing maps of [0, 1] fixing the endpoints, sampled on a uniform grid.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::SpaceGrid;

/// Absolute tolerance for the boundary values and for negative round-off increments.
pub const TOL_MONO: f64 = 1e-12;

/// Checks and cleans one row of nodal values so that it represents a map in Mon₊.
///
/// Boundary values within [`TOL_MONO`] of 0 and 1 are snapped, negative increments
/// no larger than [`TOL_MONO`] are clamped to zero. `row` only labels errors.
pub fn clean_monotone_row(values: &mut [f64], row: usize) -> Result<()> {
    let n = values.len();
    if n < 2 {
        return Err(Error::Shape(format!("a map needs at least 2 nodes, got {n}")));
    }
    if let Some(j) = values.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFinite { row, node: j });
    }
    if values[0].abs() > TOL_MONO {
        return Err(Error::BoundaryViolation { node: 0, value: values[0], expected: 0.0 });
    }
    if (values[n - 1] - 1.0).abs() > TOL_MONO {
        return Err(Error::BoundaryViolation { node: n - 1, value: values[n - 1], expected: 1.0 });
    }
    values[0] = 0.0;
    values[n - 1] = 1.0;
    for j in 0..n - 1 {
        let inc = values[j + 1] - values[j];
        if inc < -TOL_MONO {
            return Err(Error::MonotonicityViolation { row, node: j, increment: inc });
        }
        if inc < 0.0 {
            values[j + 1] = values[j];
        }
    }
    // Clamping can push an interior value just past the right endpoint.
    for v in values.iter_mut() {
        *v = v.clamp(0.0, 1.0);
    }
    Ok(())
}

/// A point of Mon₊ sampled at the nodes of a [`SpaceGrid`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonotoneMap {
    grid: SpaceGrid,
    values: Vec<f64>,
}

impl MonotoneMap {
    /// Validates nodal values (length `n + 1`) into a map.
    pub fn new(mut values: Vec<f64>) -> Result<Self> {
        if values.len() < 2 {
            return Err(Error::Shape(format!("a map needs at least 2 nodes, got {}", values.len())));
        }
        let grid = SpaceGrid::new(values.len() - 1)?;
        clean_monotone_row(&mut values, 0)?;
        Ok(Self { grid, values })
    }

    pub fn identity(grid: SpaceGrid) -> Self {
        Self { grid, values: grid.nodes() }
    }

    /// Samples an analytic map. `f` must be nondecreasing with `f(0) = 0`, `f(1) = 1`.
    pub fn from_fn(grid: SpaceGrid, f: impl Fn(f64) -> f64) -> Result<Self> {
        Self::new(grid.sample(f))
    }

    /// Builds a map from nonnegative cell densities, normalised to unit mass.
    pub fn from_densities(densities: &[f64]) -> Result<Self> {
        if densities.is_empty() {
            return Err(Error::Shape("no cells".into()));
        }
        if densities.iter().any(|d| !(d.is_finite() && *d >= 0.0)) {
            return Err(Error::Domain("densities must be finite and nonnegative".into()));
        }
        let total: f64 = densities.iter().sum();
        if total <= 0.0 {
            return Err(Error::Domain("densities have zero mass".into()));
        }
        let mut values = Vec::with_capacity(densities.len() + 1);
        let mut acc = 0.0;
        values.push(0.0);
        for d in densities {
            acc += d / total;
            values.push(acc);
        }
        *values.last_mut().unwrap() = 1.0;
        Self::new(values)
    }

    pub fn grid(&self) -> SpaceGrid {
        self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    /// Cell increments `φ_{j+1} - φ_j`.
    pub fn increments(&self) -> Vec<f64> {
        self.values.windows(2).map(|w| w[1] - w[0]).collect()
    }

    /// Piecewise-linear interpolation of the nodal values.
    pub fn eval(&self, x: f64) -> Result<f64> {
        if !(0.0..=1.0).contains(&x) {
            return Err(Error::Domain(format!("x = {x} is outside [0, 1]")));
        }
        Ok(interp_uniform(&self.values, x))
    }

    /// `ψ(y) = inf { x : φ(x) ≥ y }` of the interpolant, sampled on `out_grid`.
    pub fn generalized_inverse(&self, out_grid: SpaceGrid) -> MonotoneMap {
        let h = self.grid.h();
        let mut out = Vec::with_capacity(out_grid.len());
        let mut j = 0usize;
        for y in out_grid.nodes() {
            if y <= 0.0 {
                out.push(0.0);
                continue;
            }
            // First node with φ_j ≥ y; y is nondecreasing so the scan is monotone.
            while self.values[j] < y {
                j += 1;
            }
            let (lo, hi) = (self.values[j - 1], self.values[j]);
            let x = self.grid.node(j - 1) + h * (y - lo) / (hi - lo);
            out.push(x.min(self.grid.node(j)));
        }
        *out.last_mut().unwrap() = 1.0;
        MonotoneMap::new(out).expect("generalized inverse of a monotone map is monotone")
    }

    /// `self ∘ inner`, sampled on the grid of `inner`.
    pub fn compose(&self, inner: &MonotoneMap) -> MonotoneMap {
        let values = inner.values.iter().map(|&x| interp_uniform(&self.values, x)).collect();
        MonotoneMap::new(values).expect("composition of monotone maps is monotone")
    }

    /// Sup-norm distance of the nodal values (grids must match).
    pub fn sup_distance(&self, other: &MonotoneMap) -> Result<f64> {
        if self.grid != other.grid {
            return Err(Error::Shape("maps live on different grids".into()));
        }
        Ok(self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max))
    }
}

/// Validates raw values into a map.
pub fn validate_monotone(values: Vec<f64>) -> Result<MonotoneMap> {
    MonotoneMap::new(values)
}

/// Piecewise-linear interpolation of uniformly spaced samples on [0, 1].
pub(crate) fn interp_uniform(values: &[f64], x: f64) -> f64 {
    let n = values.len() - 1;
    let s = (x * n as f64).clamp(0.0, n as f64);
    let j = (s.floor() as usize).min(n - 1);
    let w = s - j as f64;
    values[j] + w * (values[j + 1] - values[j])
}
