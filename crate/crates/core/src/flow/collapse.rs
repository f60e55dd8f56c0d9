//! Cube-root fields whose flows merge particles, so that one field carries several
//! Lagrangian flows.
//!
//! `ẏ = -|y - ½|^{1/3}` (for `y > ½`) reaches `½` at `t* = (3/2)|y₀ - ½|^{2/3}` and
//! can stay there. Read backwards, a particle resting at `½` may leave at any time.
//! The same happens at the boundary for `ẏ = -|y - 1|^{1/3}`: the particle at `1`
//! may stay or detach along `1 - ((2/3)(t - s))^{3/2}`.

use serde::{Deserialize, Serialize};

use super::integrate_flow;
use crate::error::{Error, Result};
use crate::grid::{SpaceGrid, TimeGrid};
use crate::map::MonotoneMap;
use crate::path::VelocityField;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CollapseKind {
    /// `sgn(½ - x) |x - ½|^{1/3}`, with both boundary nodes set to 0.
    ToHalf,
    /// `-|x - 1|^{1/3}`, cut off smoothly to 0 on `[0, ½]`.
    FromBoundary,
}

fn smoothstep(u: f64) -> f64 {
    let u = u.clamp(0.0, 1.0);
    u * u * (3.0 - 2.0 * u)
}

/// Nodal profile of the collapsing field on `grid`.
pub fn collapse_field(kind: CollapseKind, grid: SpaceGrid) -> Vec<f64> {
    let n = grid.cells();
    let mut out = grid.sample(|x| match kind {
        CollapseKind::ToHalf => {
            let d = x - 0.5;
            -d.signum() * d.abs().cbrt()
        }
        CollapseKind::FromBoundary => -(1.0 - x).abs().cbrt() * smoothstep(2.0 * x),
    });
    if let Some(mid) = (n % 2 == 0).then_some(n / 2) {
        out[mid] = 0.0;
    }
    out[0] = 0.0;
    out[n] = 0.0;
    out
}

/// `1 - ((2/3)(t - s))^{3/2}` for `t ≥ s`, and `1` before: the particle that rests at
/// the boundary until `s` and then detaches under the `FromBoundary` field.
pub fn departing_trajectory(s: f64, t: f64) -> f64 {
    if t <= s {
        1.0
    } else {
        1.0 - (2.0 / 3.0 * (t - s)).powf(1.5)
    }
}

/// Trajectories of the `ToHalf` flow from the identity.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CollapseDemo {
    pub start: f64,
    pub times: Vec<f64>,
    /// Computed trajectory of the particle starting at `start`.
    pub moving: Vec<f64>,
    /// Closed-form trajectory `½ ± (|x₀ - ½|^{2/3} - (2/3)t)₊^{3/2}`.
    pub moving_exact: Vec<f64>,
    /// Computed trajectory of the particle starting at `½`.
    pub resting: Vec<f64>,
    /// First time the computed particle is within one cell of `½`.
    pub arrival_time: Option<f64>,
    pub arrival_time_exact: f64,
    /// `max_t |φ(t, ½) - ½|`.
    pub resting_drift: f64,
}

impl CollapseDemo {
    pub fn arrival_error(&self) -> Option<f64> {
        self.arrival_time.map(|t| (t - self.arrival_time_exact).abs() / self.arrival_time_exact)
    }
}

/// Integrates the `ToHalf` field from the identity on `n` cells (`n` even) and `m`
/// steps over `[0, T]`, following the particles starting at `start` and at `½`.
pub fn collapse_demo(n: usize, m: usize, horizon: f64, start: f64) -> Result<CollapseDemo> {
    if n % 2 != 0 {
        return Err(Error::Domain("collapse demo needs an even number of cells".into()));
    }
    if !(0.0..=1.0).contains(&start) {
        return Err(Error::Domain(format!("start {start} is outside [0, 1]")));
    }
    let sgrid = SpaceGrid::new(n)?;
    let tgrid = TimeGrid::new(m, horizon)?;
    let v = VelocityField::autonomous(tgrid, &collapse_field(CollapseKind::ToHalf, sgrid))?;
    let path = integrate_flow(&v, &MonotoneMap::identity(sgrid))?;
    let j0 = (start * n as f64).round() as usize;
    let x0 = sgrid.node(j0);
    let times = tgrid.nodes();
    let moving = path.values().column(j0).to_vec();
    let resting = path.values().column(n / 2).to_vec();
    let d0 = (x0 - 0.5).abs();
    let sign = if x0 >= 0.5 { 1.0 } else { -1.0 };
    let moving_exact = times
        .iter()
        .map(|&t| 0.5 + sign * (d0.powf(2.0 / 3.0) - 2.0 / 3.0 * t).max(0.0).powf(1.5))
        .collect();
    let h = sgrid.h();
    let arrival_time = moving.iter().position(|y| (y - 0.5).abs() <= h).map(|k| times[k]);
    let resting_drift = resting.iter().map(|y| (y - 0.5).abs()).fold(0.0, f64::max);
    Ok(CollapseDemo {
        start: x0,
        times,
        moving,
        moving_exact,
        resting,
        arrival_time,
        arrival_time_exact: 1.5 * d0.powf(2.0 / 3.0),
        resting_drift,
    })
}
