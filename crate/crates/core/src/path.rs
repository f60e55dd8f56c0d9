//! Space-time arrays: paths in Mon₊, Eulerian velocity fields, and jump data.

use ndarray::{Array2, ArrayView1};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{SpaceGrid, TimeGrid};
use crate::map::{clean_monotone_row, interp_uniform, MonotoneMap};

/// A discrete Lagrangian path `Φ[k, j] = φ(t_k, x_j)`; every time slice is in Mon₊.
#[derive(Debug, Clone, PartialEq)]
pub struct PathGrid {
    tgrid: TimeGrid,
    sgrid: SpaceGrid,
    values: Array2<f64>,
}

impl PathGrid {
    /// Validates every row of `values` (shape `(m + 1, n + 1)`).
    pub fn new(tgrid: TimeGrid, sgrid: SpaceGrid, mut values: Array2<f64>) -> Result<Self> {
        if values.dim() != (tgrid.len(), sgrid.len()) {
            return Err(Error::Shape(format!(
                "path values have shape {:?}, grids need ({}, {})",
                values.dim(),
                tgrid.len(),
                sgrid.len()
            )));
        }
        for (k, mut row) in values.rows_mut().into_iter().enumerate() {
            let slice = row.as_slice_mut().expect("standard layout");
            clean_monotone_row(slice, k)?;
        }
        Ok(Self { tgrid, sgrid, values })
    }

    /// Builds a path from rows that the caller guarantees to be clean.
    pub(crate) fn from_clean(tgrid: TimeGrid, sgrid: SpaceGrid, values: Array2<f64>) -> Self {
        debug_assert_eq!(values.dim(), (tgrid.len(), sgrid.len()));
        Self { tgrid, sgrid, values }
    }

    pub fn from_fn(tgrid: TimeGrid, sgrid: SpaceGrid, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        let t = tgrid.nodes();
        let x = sgrid.nodes();
        let values = Array2::from_shape_fn((tgrid.len(), sgrid.len()), |(k, j)| f(t[k], x[j]));
        Self::new(tgrid, sgrid, values)
    }

    /// The constant path sitting at `map`.
    pub fn constant(tgrid: TimeGrid, map: &MonotoneMap) -> Self {
        let sgrid = map.grid();
        let values =
            Array2::from_shape_fn((tgrid.len(), sgrid.len()), |(_, j)| map.values()[j]);
        Self { tgrid, sgrid, values }
    }

    /// Stacks slices into a path. All slices must share one space grid.
    pub fn from_slices(tgrid: TimeGrid, slices: &[MonotoneMap]) -> Result<Self> {
        if slices.len() != tgrid.len() {
            return Err(Error::Shape(format!("{} slices for {} time nodes", slices.len(), tgrid.len())));
        }
        let sgrid = slices[0].grid();
        if slices.iter().any(|s| s.grid() != sgrid) {
            return Err(Error::Shape("slices live on different grids".into()));
        }
        let values = Array2::from_shape_fn((tgrid.len(), sgrid.len()), |(k, j)| slices[k].values()[j]);
        Ok(Self { tgrid, sgrid, values })
    }

    pub fn tgrid(&self) -> TimeGrid {
        self.tgrid
    }

    pub fn sgrid(&self) -> SpaceGrid {
        self.sgrid
    }

    pub fn values(&self) -> &Array2<f64> {
        &self.values
    }

    pub fn into_values(self) -> Array2<f64> {
        self.values
    }

    pub fn row(&self, k: usize) -> ArrayView1<'_, f64> {
        self.values.row(k)
    }

    pub fn slice(&self, k: usize) -> MonotoneMap {
        MonotoneMap::new(self.values.row(k).to_vec()).expect("path rows are valid maps")
    }

    pub fn first(&self) -> MonotoneMap {
        self.slice(0)
    }

    pub fn last(&self) -> MonotoneMap {
        self.slice(self.tgrid.steps())
    }

    /// Path traversed backwards in time.
    pub fn reversed(&self) -> Self {
        let m = self.tgrid.steps();
        let values = Array2::from_shape_fn(self.values.dim(), |(k, j)| self.values[[m - k, j]]);
        Self { tgrid: self.tgrid, sgrid: self.sgrid, values }
    }

    /// Replaces the time grid keeping the nodal values (used to rescale the horizon).
    pub fn with_horizon(&self, horizon: f64) -> Result<Self> {
        let tgrid = TimeGrid::new(self.tgrid.steps(), horizon)?;
        Ok(Self { tgrid, sgrid: self.sgrid, values: self.values.clone() })
    }

    /// Max nodal distance of the first and last slices to the given endpoints.
    pub fn endpoint_error(&self, start: &MonotoneMap, end: &MonotoneMap) -> Result<f64> {
        let a = self.first().sup_distance(start)?;
        let b = self.last().sup_distance(end)?;
        Ok(a.max(b))
    }

    /// Smallest cell density `Δφ / h` over the whole path.
    pub fn min_density(&self) -> f64 {
        let h = self.sgrid.h();
        self.values
            .rows()
            .into_iter()
            .flat_map(|r| r.windows(2).into_iter().map(|w| (w[1] - w[0]) / h).collect::<Vec<_>>())
            .fold(f64::INFINITY, f64::min)
    }

    /// Per-slice minimum of the cell densities.
    pub fn min_density_trace(&self) -> Vec<f64> {
        let h = self.sgrid.h();
        self.values
            .rows()
            .into_iter()
            .map(|r| {
                r.as_slice()
                    .unwrap()
                    .windows(2)
                    .map(|w| (w[1] - w[0]) / h)
                    .fold(f64::INFINITY, f64::min)
            })
            .collect()
    }
}

/// Eulerian velocity `V[k, j] = v(t_k, x_j)` with `v(t, 0) = v(t, 1) = 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct VelocityField {
    tgrid: TimeGrid,
    sgrid: SpaceGrid,
    values: Array2<f64>,
}

/// Largest boundary value that is still snapped to the Dirichlet condition.
pub const TOL_DIRICHLET: f64 = 1e-12;

impl VelocityField {
    pub fn new(tgrid: TimeGrid, sgrid: SpaceGrid, mut values: Array2<f64>) -> Result<Self> {
        if values.dim() != (tgrid.len(), sgrid.len()) {
            return Err(Error::Shape(format!(
                "velocity values have shape {:?}, grids need ({}, {})",
                values.dim(),
                tgrid.len(),
                sgrid.len()
            )));
        }
        let n = sgrid.cells();
        for (k, mut row) in values.rows_mut().into_iter().enumerate() {
            if let Some(j) = row.iter().position(|v| !v.is_finite()) {
                return Err(Error::NonFinite { row: k, node: j });
            }
            for j in [0, n] {
                if row[j].abs() > TOL_DIRICHLET {
                    return Err(Error::BoundaryViolation { node: j, value: row[j], expected: 0.0 });
                }
                row[j] = 0.0;
            }
        }
        Ok(Self { tgrid, sgrid, values })
    }

    pub fn zeros(tgrid: TimeGrid, sgrid: SpaceGrid) -> Self {
        Self { tgrid, sgrid, values: Array2::zeros((tgrid.len(), sgrid.len())) }
    }

    pub fn from_fn(tgrid: TimeGrid, sgrid: SpaceGrid, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        let t = tgrid.nodes();
        let x = sgrid.nodes();
        let values = Array2::from_shape_fn((tgrid.len(), sgrid.len()), |(k, j)| f(t[k], x[j]));
        Self::new(tgrid, sgrid, values)
    }

    /// Time-independent field repeating one nodal profile.
    pub fn autonomous(tgrid: TimeGrid, profile: &[f64]) -> Result<Self> {
        let sgrid = SpaceGrid::new(profile.len().saturating_sub(1).max(1))?;
        if profile.len() != sgrid.len() {
            return Err(Error::Shape("profile needs at least 2 nodes".into()));
        }
        let values = Array2::from_shape_fn((tgrid.len(), sgrid.len()), |(_, j)| profile[j]);
        Self::new(tgrid, sgrid, values)
    }

    pub fn tgrid(&self) -> TimeGrid {
        self.tgrid
    }

    pub fn sgrid(&self) -> SpaceGrid {
        self.sgrid
    }

    pub fn values(&self) -> &Array2<f64> {
        &self.values
    }

    pub fn row(&self, k: usize) -> ArrayView1<'_, f64> {
        self.values.row(k)
    }

    /// Bilinear interpolation in `(t, x)`; `t` is clamped to the horizon.
    pub fn eval(&self, t: f64, x: f64) -> f64 {
        let m = self.tgrid.steps();
        let dt = self.tgrid.dt();
        let s = if dt > 0.0 { (t / dt).clamp(0.0, m as f64) } else { 0.0 };
        let k = (s.floor() as usize).min(m - 1);
        let w = s - k as f64;
        let a = interp_uniform(self.values.row(k).as_slice().unwrap(), x.clamp(0.0, 1.0));
        if w == 0.0 {
            return a;
        }
        let b = interp_uniform(self.values.row(k + 1).as_slice().unwrap(), x.clamp(0.0, 1.0));
        a + w * (b - a)
    }

    /// The field `t ↦ -v(T - t)`, which drives the time-reversed flow.
    pub fn time_reversed(&self) -> Self {
        let m = self.tgrid.steps();
        let values = Array2::from_shape_fn(self.values.dim(), |(k, j)| -self.values[[m - k, j]]);
        Self { tgrid: self.tgrid, sgrid: self.sgrid, values }
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |a, v| a.max(v.abs()))
    }
}

/// Left/right limits of a path at one discontinuity location, over the time nodes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JumpRecord {
    pub location: f64,
    pub left_limits: Vec<f64>,
    pub right_limits: Vec<f64>,
    pub left_velocities: Vec<f64>,
    pub right_velocities: Vec<f64>,
}

impl JumpRecord {
    /// Stores the data as given; velocities are not checked against the limits here
    /// (see [`JumpRecord::velocity_mismatch`]).
    pub fn new(
        location: f64,
        left_limits: Vec<f64>,
        right_limits: Vec<f64>,
        left_velocities: Vec<f64>,
        right_velocities: Vec<f64>,
    ) -> Result<Self> {
        if !(location > 0.0 && location < 1.0) {
            return Err(Error::Domain(format!("jump location {location} is not interior")));
        }
        let len = left_limits.len();
        if len == 0
            || right_limits.len() != len
            || left_velocities.len() != len
            || right_velocities.len() != len
        {
            return Err(Error::Shape("jump record arrays must be nonempty and of equal length".into()));
        }
        for (k, (lo, hi)) in left_limits.iter().zip(&right_limits).enumerate() {
            if !(lo.is_finite() && hi.is_finite()) {
                return Err(Error::NonFinite { row: k, node: 0 });
            }
            if lo - hi > crate::map::TOL_MONO {
                return Err(Error::InconsistentJump(format!(
                    "left limit {lo} exceeds right limit {hi} at time node {k}"
                )));
            }
        }
        if left_velocities.iter().chain(&right_velocities).any(|v| !v.is_finite()) {
            return Err(Error::Domain("jump velocities must be finite".into()));
        }
        Ok(Self { location, left_limits, right_limits, left_velocities, right_velocities })
    }

    /// Builds a record whose velocities are finite differences of the limits.
    pub fn from_limits(location: f64, tgrid: TimeGrid, left: Vec<f64>, right: Vec<f64>) -> Result<Self> {
        if left.len() != tgrid.len() {
            return Err(Error::Shape("limits must be sampled on the time grid".into()));
        }
        let lv = time_derivative(&left, tgrid.dt());
        let rv = time_derivative(&right, tgrid.dt());
        Self::new(location, left, right, lv, rv)
    }

    /// Reads the limits off a path at the cell containing `location`.
    pub fn from_path(path: &PathGrid, location: f64) -> Result<Self> {
        let j = path.sgrid().cell_of(location);
        let left = path.values().column(j).to_vec();
        let right = path.values().column(j + 1).to_vec();
        Self::from_limits(location, path.tgrid(), left, right)
    }

    pub fn len(&self) -> usize {
        self.left_limits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.left_limits.is_empty()
    }

    pub fn gap(&self, k: usize) -> f64 {
        (self.right_limits[k] - self.left_limits[k]).max(0.0)
    }

    pub fn max_gap(&self) -> f64 {
        (0..self.len()).map(|k| self.gap(k)).fold(0.0, f64::max)
    }

    /// Largest difference between the stored velocities and finite differences of the limits.
    pub fn velocity_mismatch(&self, tgrid: TimeGrid) -> f64 {
        let lv = time_derivative(&self.left_limits, tgrid.dt());
        let rv = time_derivative(&self.right_limits, tgrid.dt());
        lv.iter()
            .zip(&self.left_velocities)
            .chain(rv.iter().zip(&self.right_velocities))
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

/// Second-order finite-difference derivative of a uniformly sampled series.
pub fn time_derivative(values: &[f64], dt: f64) -> Vec<f64> {
    let len = values.len();
    match len {
        0 => vec![],
        1 => vec![0.0],
        2 => {
            let d = (values[1] - values[0]) / dt;
            vec![d, d]
        }
        _ => (0..len)
            .map(|k| {
                if k == 0 {
                    (-3.0 * values[0] + 4.0 * values[1] - values[2]) / (2.0 * dt)
                } else if k == len - 1 {
                    (3.0 * values[k] - 4.0 * values[k - 1] + values[k - 2]) / (2.0 * dt)
                } else {
                    (values[k + 1] - values[k - 1]) / (2.0 * dt)
                }
            })
            .collect(),
    }
}
