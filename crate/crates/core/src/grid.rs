//! Uniform space and time grids.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Uniform grid on [0, 1] with `n` cells and nodes `x_j = j / n`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SpaceGrid {
    n: usize,
}

impl SpaceGrid {
    pub fn new(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::Domain("space grid needs at least one cell".into()));
        }
        Ok(Self { n })
    }

    /// Number of cells.
    pub fn cells(&self) -> usize {
        self.n
    }

    /// Number of nodes, `n + 1`.
    pub fn len(&self) -> usize {
        self.n + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn h(&self) -> f64 {
        1.0 / self.n as f64
    }

    /// Node `j`. The last node is exactly 1.
    pub fn node(&self, j: usize) -> f64 {
        if j == self.n {
            1.0
        } else {
            j as f64 / self.n as f64
        }
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..=self.n).map(|j| self.node(j)).collect()
    }

    /// Midpoint of cell `j` (between nodes `j` and `j + 1`).
    pub fn center(&self, j: usize) -> f64 {
        (j as f64 + 0.5) / self.n as f64
    }

    /// Samples `f` at every node.
    pub fn sample(&self, f: impl Fn(f64) -> f64) -> Vec<f64> {
        (0..=self.n).map(|j| f(self.node(j))).collect()
    }

    /// Index of the cell containing `x` (cells are half-open, the last one closed).
    pub fn cell_of(&self, x: f64) -> usize {
        let c = (x * self.n as f64).floor();
        if c < 0.0 {
            0
        } else {
            (c as usize).min(self.n - 1)
        }
    }
}

/// Uniform time grid on [0, T] with `m` steps.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid {
    m: usize,
    horizon: f64,
}

impl TimeGrid {
    pub fn new(m: usize, horizon: f64) -> Result<Self> {
        if m == 0 {
            return Err(Error::Domain("time grid needs at least one step".into()));
        }
        if !(horizon.is_finite() && horizon >= 0.0) {
            return Err(Error::Domain(format!("horizon must be finite and nonnegative, got {horizon}")));
        }
        Ok(Self { m, horizon })
    }

    /// Unit horizon, the setting of the distance.
    pub fn unit(m: usize) -> Result<Self> {
        Self::new(m, 1.0)
    }

    pub fn steps(&self) -> usize {
        self.m
    }

    pub fn len(&self) -> usize {
        self.m + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn dt(&self) -> f64 {
        self.horizon / self.m as f64
    }

    pub fn node(&self, k: usize) -> f64 {
        if k == self.m {
            self.horizon
        } else {
            k as f64 * self.horizon / self.m as f64
        }
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..=self.m).map(|k| self.node(k)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn endpoints_are_exact() {
        for n in [1, 3, 7, 10, 129] {
            let g = SpaceGrid::new(n).unwrap();
            assert_eq!(g.node(0), 0.0);
            assert_eq!(g.node(n), 1.0);
        }
        let t = TimeGrid::new(7, 0.3).unwrap();
        assert_eq!(t.node(0), 0.0);
        assert_eq!(t.node(7), 0.3);
    }

    #[test]
    fn rejects_empty_grids() {
        assert!(SpaceGrid::new(0).is_err());
        assert!(TimeGrid::new(0, 1.0).is_err());
        assert!(TimeGrid::new(4, -1.0).is_err());
        assert!(TimeGrid::new(4, f64::NAN).is_err());
    }

    #[test]
    fn cell_lookup() {
        let g = SpaceGrid::new(4).unwrap();
        assert_eq!(g.cell_of(0.0), 0);
        assert_eq!(g.cell_of(0.3), 1);
        assert_eq!(g.cell_of(1.0), 3);
        assert_eq!(g.cell_of(-0.1), 0);
    }
}
