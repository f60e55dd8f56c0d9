//! Lagrangian flows of velocity fields: integration, residuals and Hölder checks,
//! the collapsing cube-root fields, the jump/stairs transforms and gap filling.

mod collapse;
mod fill;
mod jumps;

pub use collapse::{collapse_demo, collapse_field, departing_trajectory, CollapseDemo, CollapseKind};
pub use fill::{fill_between, fill_jumps, FillReport, FilledGap};
pub use jumps::{jump_function_f, pushforward_check, stairs_function_g, JumpSpec, PushforwardReport};

use ndarray::Array2;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::map::MonotoneMap;
use crate::path::{PathGrid, VelocityField};

/// Largest negative increment a flow step may produce before it is rejected.
pub const TOL_STEP: f64 = 1e-8;

/// One classical RK4 step of `ẏ = f(t, y)`.
#[inline]
pub(crate) fn rk4_step(f: impl Fn(f64, f64) -> f64, t: f64, y: f64, dt: f64) -> f64 {
    let k1 = f(t, y);
    let k2 = f(t + 0.5 * dt, y + 0.5 * dt * k1);
    let k3 = f(t + 0.5 * dt, y + 0.5 * dt * k2);
    let k4 = f(t + dt, y + dt * k3);
    y + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
}

/// Clamps negative increments up to `tol`; returns the worst defect if it exceeds `tol`.
pub(crate) fn repair_row(row: &mut [f64], lo: f64, hi: f64, tol: f64) -> std::result::Result<(), f64> {
    let mut worst = 0.0f64;
    for j in 1..row.len() {
        let inc = row[j] - row[j - 1];
        if inc < 0.0 {
            worst = worst.max(-inc);
            row[j] = row[j - 1];
        }
    }
    for v in row.iter_mut() {
        *v = v.clamp(lo, hi);
    }
    if worst > tol {
        Err(worst)
    } else {
        Ok(())
    }
}

/// Integrates `∂ₜφ = v(t, φ)` from `φ₀` on the time grid of `v`, one RK4 step per
/// time step and node, with `v` interpolated bilinearly.
pub fn integrate_flow(v: &VelocityField, phi0: &MonotoneMap) -> Result<PathGrid> {
    let sgrid = v.sgrid();
    if phi0.grid() != sgrid {
        return Err(Error::Shape(format!(
            "initial map has {} cells, field has {}",
            phi0.grid().cells(),
            sgrid.cells()
        )));
    }
    let tgrid = v.tgrid();
    let dt = tgrid.dt();
    let n = sgrid.cells();
    let mut values = Array2::zeros((tgrid.len(), sgrid.len()));
    values.row_mut(0).assign(&ndarray::ArrayView1::from(phi0.values()));
    let mut current = phi0.values().to_vec();
    for k in 0..tgrid.steps() {
        let t = tgrid.node(k);
        let mut next: Vec<f64> = current
            .par_iter()
            .enumerate()
            .map(|(j, &y)| if j == 0 || j == n { y } else { rk4_step(|s, x| v.eval(s, x), t, y, dt) })
            .collect();
        next[0] = 0.0;
        next[n] = 1.0;
        repair_row(&mut next, 0.0, 1.0, TOL_STEP).map_err(|defect| Error::StepRejected { step: k, defect })?;
        values.row_mut(k + 1).assign(&ndarray::ArrayView1::from(&next[..]));
        current = next;
    }
    Ok(PathGrid::from_clean(tgrid, sgrid, values))
}

fn check_grids(path: &PathGrid, v: &VelocityField) -> Result<()> {
    if path.sgrid() != v.sgrid() || path.tgrid() != v.tgrid() {
        return Err(Error::Shape("path and field live on different grids".into()));
    }
    Ok(())
}

/// `max_{k,j} |Φ[k+1,j] - Φ[k,j] - Δt · v(t_{k+½}, (Φ[k,j] + Φ[k+1,j]) / 2)|`.
pub fn flow_residual(path: &PathGrid, v: &VelocityField) -> Result<f64> {
    check_grids(path, v)?;
    let tgrid = path.tgrid();
    let dt = tgrid.dt();
    let values = path.values();
    let worst = (0..tgrid.steps())
        .into_par_iter()
        .map(|k| {
            let tm = tgrid.node(k) + 0.5 * dt;
            let lo = values.row(k);
            let hi = values.row(k + 1);
            lo.iter()
                .zip(hi.iter())
                .map(|(&a, &b)| (b - a - dt * v.eval(tm, 0.5 * (a + b))).abs())
                .fold(0.0, f64::max)
        })
        .collect::<Vec<f64>>();
    Ok(worst.into_iter().fold(0.0, f64::max))
}

/// Outcome of [`holder_bound_check`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HolderReport {
    /// `max |Φ[k,j] - Φ[l,j]| / (2 √E √(t_k - t_l))` over node pairs.
    pub worst_ratio: f64,
    pub worst_node: (usize, usize, usize),
    pub holds: bool,
}

/// Checks `|φ(t,x) - φ(s,x)| ≤ 2 √E √(t - s)` on every pair of time nodes.
pub fn holder_bound_check(path: &PathGrid, energy: f64) -> HolderReport {
    let tgrid = path.tgrid();
    let values = path.values();
    let m = tgrid.steps();
    let scale = 2.0 * energy.max(0.0).sqrt();
    let per_k: Vec<(f64, (usize, usize, usize))> = (0..=m)
        .into_par_iter()
        .map(|k| {
            let mut best = (0.0, (k, k, 0));
            for l in 0..k {
                let root = (tgrid.node(k) - tgrid.node(l)).sqrt();
                for j in 0..values.ncols() {
                    let diff = (values[[k, j]] - values[[l, j]]).abs();
                    if diff == 0.0 {
                        continue;
                    }
                    let denom = scale * root;
                    let ratio = if denom > 0.0 { diff / denom } else { f64::INFINITY };
                    if ratio > best.0 {
                        best = (ratio, (l, k, j));
                    }
                }
            }
            best
        })
        .collect();
    let (worst_ratio, worst_node) =
        per_k.into_iter().fold((0.0, (0, 0, 0)), |acc, x| if x.0 > acc.0 { x } else { acc });
    HolderReport { worst_ratio, worst_node, holds: worst_ratio <= 1.0 }
}
