//! Constant-coefficient model of the action's Hessian, `P = 2hΔt (-D_tt) ⊗ (I - ¼ D_xx)`
//! on the interior nodes, applied through two tridiagonal sweeps.

use ndarray::Array2;

use crate::error::Result;
use crate::tridiag::SymTridiag;

#[derive(Debug, Clone)]
pub(crate) struct Preconditioner {
    time: SymTridiag,
    space: SymTridiag,
    scale: f64,
    rows: usize,
    cols: usize,
}

impl Preconditioner {
    /// `m` time steps and `n` cells of sizes `dt` and `h`.
    pub fn new(m: usize, n: usize, h: f64, dt: f64) -> Result<Self> {
        let rows = m.saturating_sub(1);
        let cols = n.saturating_sub(1);
        let time = SymTridiag::new(rows, 2.0 / (dt * dt), -1.0 / (dt * dt))?;
        let space = SymTridiag::new(cols, 1.0 + 0.5 / (h * h), -0.25 / (h * h))?;
        Ok(Self { time, space, scale: 2.0 * h * dt, rows, cols })
    }

    /// `P⁻¹ g` on the interior block; boundary entries of the result are zero.
    pub fn solve(&self, g: &Array2<f64>) -> Array2<f64> {
        let mut out = Array2::zeros(g.dim());
        if self.rows == 0 || self.cols == 0 {
            return out;
        }
        let mut block: Vec<f64> = Vec::with_capacity(self.rows * self.cols);
        for k in 1..=self.rows {
            for j in 1..=self.cols {
                block.push(g[[k, j]] / self.scale);
            }
        }
        for chunk in block.chunks_mut(self.cols) {
            self.space.solve_in_place(chunk);
        }
        for j in 0..self.cols {
            self.time.solve_strided(&mut block, j, self.cols);
        }
        for k in 1..=self.rows {
            for j in 1..=self.cols {
                out[[k, j]] = block[(k - 1) * self.cols + (j - 1)];
            }
        }
        out
    }
}
