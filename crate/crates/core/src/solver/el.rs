//! Pointwise residual of the Euler-Lagrange equation of the action
//!
//! `-2 φ̈ φ' - 2 φ̇ φ̇' - ∂ₓ(φ̇²) + ½ ∂ₓₜₜ log φ' + T₄ = 0`,
//!
//! with two readings of the last term: `T₄ = ¼ ∂ₓ((∂ₜ log φ')²)`, which is what the
//! variation of `¼ (∂ₜₓφ)² / ∂ₓφ` produces, and `T₄ = ¼ ∂ₓₜ log φ'`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::path::PathGrid;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ElReading {
    /// `¼ ∂ₓₜ log φ'`.
    Literal,
    /// `¼ ∂ₓ((∂ₜ log φ')²)`.
    Derived,
}

/// Max-norm of the residual over nodes `1 ≤ k ≤ m-1`, `2 ≤ j ≤ n-2`, by centred
/// differences (`φ'` itself is the centred difference of the nodal values).
pub fn el_residual(path: &PathGrid, reading: ElReading) -> Result<f64> {
    let v = path.values();
    let (rows, cols) = v.dim();
    if rows < 3 || cols < 5 {
        return Ok(0.0);
    }
    let h = path.sgrid().h();
    let dt = path.tgrid().dt();
    // φ' at nodes 1..=n-1
    let dx = |k: usize, j: usize| (v[[k, j + 1]] - v[[k, j - 1]]) / (2.0 * h);
    let mut log_d = ndarray::Array2::zeros((rows, cols));
    for k in 0..rows {
        for j in 1..cols - 1 {
            let d = dx(k, j);
            if d <= 0.0 {
                return Err(Error::DegenerateDensity { step: k, cell: j, density: d });
            }
            log_d[[k, j]] = d.ln();
        }
    }
    let vel = |k: usize, j: usize| (v[[k + 1, j]] - v[[k - 1, j]]) / (2.0 * dt);
    let log_t = |k: usize, j: usize| (log_d[[k + 1, j]] - log_d[[k - 1, j]]) / (2.0 * dt);
    let log_tt = |k: usize, j: usize| (log_d[[k + 1, j]] - 2.0 * log_d[[k, j]] + log_d[[k - 1, j]]) / (dt * dt);
    let mut worst = 0.0f64;
    for k in 1..rows - 1 {
        for j in 2..cols - 2 {
            let acc = (v[[k + 1, j]] - 2.0 * v[[k, j]] + v[[k - 1, j]]) / (dt * dt);
            let d = dx(k, j);
            let d_t = (dx(k + 1, j) - dx(k - 1, j)) / (2.0 * dt);
            let u = vel(k, j);
            let flux = (vel(k, j + 1).powi(2) - vel(k, j - 1).powi(2)) / (2.0 * h);
            let third = (log_tt(k, j + 1) - log_tt(k, j - 1)) / (2.0 * h);
            let last = match reading {
                ElReading::Derived => (log_t(k, j + 1).powi(2) - log_t(k, j - 1).powi(2)) / (2.0 * h),
                ElReading::Literal => (log_t(k, j + 1) - log_t(k, j - 1)) / (2.0 * h),
            };
            let r = -2.0 * acc * d - 2.0 * u * d_t - flux + 0.5 * third + 0.25 * last;
            worst = worst.max(r.abs());
        }
    }
    Ok(worst)
}
