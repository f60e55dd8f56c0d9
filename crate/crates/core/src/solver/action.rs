//! The discrete action as a function of the nodal values, and its exact gradient.
//!
//! Per space-time cell the action is `h Δt [w² (ρ₀ + ρ₁)/2 + (√ρ₁ - √ρ₀)² / Δt²]`,
//! the same number as [`crate::energy::lagrangian_energy`] computes (its Fisher-Rao
//! stencil simplifies to the squared difference of square roots).

use ndarray::Array2;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::path::PathGrid;

#[inline]
fn cell_value(a0: f64, a1: f64, b0: f64, b1: f64, h: f64, dt: f64) -> f64 {
    let r0 = (a1 - a0) / h;
    let r1 = (b1 - b0) / h;
    let w = ((b0 + b1) - (a0 + a1)) / (2.0 * dt);
    let ds = r1.max(0.0).sqrt() - r0.max(0.0).sqrt();
    w * w * 0.5 * (r0 + r1) + ds * ds / (dt * dt)
}

pub(crate) fn action_raw(values: &Array2<f64>, h: f64, dt: f64) -> f64 {
    let (rows, cols) = values.dim();
    let per_step: Vec<f64> = (0..rows - 1)
        .into_par_iter()
        .map(|k| {
            let lo = values.row(k);
            let hi = values.row(k + 1);
            let mut acc = 0.0;
            for j in 0..cols - 1 {
                acc += cell_value(lo[j], lo[j + 1], hi[j], hi[j + 1], h, dt);
            }
            acc
        })
        .collect();
    per_step.iter().sum::<f64>() * h * dt
}

/// Gradient row `k` (an interior time node) of the action.
fn gradient_row(values: &Array2<f64>, k: usize, h: f64, dt: f64, out: &mut [f64]) {
    let cols = values.ncols();
    let n = cols - 1;
    let prev = values.row(k - 1);
    let cur = values.row(k);
    let next = values.row(k + 1);
    let scale = h * dt;
    let inv2dt = 1.0 / (2.0 * dt);
    let dt2 = dt * dt;
    // partials of cell j in the step ending at k (row k holds the b-nodes)
    let mut from_before = vec![(0.0, 0.0); n];
    // and in the step starting at k (row k holds the a-nodes)
    let mut from_after = vec![(0.0, 0.0); n];
    for j in 0..n {
        let r0 = (prev[j + 1] - prev[j]) / h;
        let r1 = (cur[j + 1] - cur[j]) / h;
        let w = ((cur[j] + cur[j + 1]) - (prev[j] + prev[j + 1])) * inv2dt;
        let s0 = r0.max(0.0).sqrt();
        let s1 = r1.sqrt();
        let d_w = w * (r0 + r1);
        let d_r1 = 0.5 * w * w + (s1 - s0) / (dt2 * s1);
        from_before[j] = (d_w, d_r1);

        let r0 = r1;
        let r1 = (next[j + 1] - next[j]) / h;
        let w = ((next[j] + next[j + 1]) - (cur[j] + cur[j + 1])) * inv2dt;
        let s0 = r0.sqrt();
        let s1 = r1.max(0.0).sqrt();
        let d_w = w * (r0 + r1);
        let d_r0 = 0.5 * w * w - (s1 - s0) / (dt2 * s0);
        from_after[j] = (d_w, d_r0);
    }
    out[0] = 0.0;
    out[n] = 0.0;
    for j in 1..n {
        let (bw_r, br_r) = from_before[j - 1]; // node is b1 of cell j-1
        let (bw_l, br_l) = from_before[j]; // node is b0 of cell j
        let (aw_r, ar_r) = from_after[j - 1]; // node is a1 of cell j-1
        let (aw_l, ar_l) = from_after[j]; // node is a0 of cell j
        let g = (bw_r + bw_l) * inv2dt + (br_r - br_l) / h - (aw_r + aw_l) * inv2dt + (ar_r - ar_l) / h;
        out[j] = g * scale;
    }
}

pub(crate) fn gradient_raw(values: &Array2<f64>, h: f64, dt: f64) -> Array2<f64> {
    let (rows, cols) = values.dim();
    let mut grad = Array2::zeros((rows, cols));
    if rows < 3 {
        return grad;
    }
    let slice = grad.as_slice_mut().expect("standard layout");
    slice
        .par_chunks_mut(cols)
        .enumerate()
        .filter(|(k, _)| *k > 0 && *k < rows - 1)
        .for_each(|(k, row)| gradient_row(values, k, h, dt, row));
    grad
}

/// Smallest cell density among the interior time slices.
pub(crate) fn min_interior_density(values: &Array2<f64>, h: f64) -> (f64, usize, usize) {
    let rows = values.nrows();
    let mut best = (f64::INFINITY, 0, 0);
    for k in 1..rows.saturating_sub(1) {
        let row = values.row(k);
        for j in 0..row.len() - 1 {
            let d = (row[j + 1] - row[j]) / h;
            if d < best.0 {
                best = (d, k, j);
            }
        }
    }
    best
}

/// Discrete action of `path`; equals its Lagrangian energy up to rounding.
pub fn discrete_action(path: &PathGrid) -> f64 {
    action_raw(path.values(), path.sgrid().h(), path.tgrid().dt())
}

/// Value and gradient with respect to every nodal value. Entries of the endpoint
/// slices and of the boundary nodes are zero (they are fixed).
///
/// Interior slices need cell densities of at least `delta`.
pub fn discrete_action_gradient(path: &PathGrid, delta: f64) -> Result<(f64, Array2<f64>)> {
    let h = path.sgrid().h();
    let dt = path.tgrid().dt();
    if dt == 0.0 {
        return Err(Error::Domain("zero time step".into()));
    }
    let values = path.values();
    let (min, k, j) = min_interior_density(values, h);
    if min < delta || min <= 0.0 {
        return Err(Error::DegenerateDensity { step: k, cell: j, density: min });
    }
    Ok((action_raw(values, h, dt), gradient_raw(values, h, dt)))
}
