//! Tridiagonal linear solves.

use crate::error::{Error, Result};

/// Solves `A x = rhs` for tridiagonal `A` with sub-diagonal `sub`, diagonal `diag` and
/// super-diagonal `sup` (Thomas algorithm, no pivoting). `sub[0]` and `sup[n-1]` are ignored.
pub fn solve_tridiagonal(sub: &[f64], diag: &[f64], sup: &[f64], rhs: &[f64]) -> Result<Vec<f64>> {
    let n = diag.len();
    if sub.len() != n || sup.len() != n || rhs.len() != n {
        return Err(Error::Shape(format!(
            "tridiagonal system of size {n} with bands {}, {} and rhs {}",
            sub.len(),
            sup.len(),
            rhs.len()
        )));
    }
    if n == 0 {
        return Ok(Vec::new());
    }
    let mut c = vec![0.0; n];
    let mut d = vec![0.0; n];
    let mut beta = diag[0];
    if beta == 0.0 {
        return Err(Error::Domain("singular tridiagonal system".into()));
    }
    c[0] = sup[0] / beta;
    d[0] = rhs[0] / beta;
    for i in 1..n {
        beta = diag[i] - sub[i] * c[i - 1];
        if beta == 0.0 {
            return Err(Error::Domain("singular tridiagonal system".into()));
        }
        c[i] = sup[i] / beta;
        d[i] = (rhs[i] - sub[i] * d[i - 1]) / beta;
    }
    for i in (0..n - 1).rev() {
        d[i] -= c[i] * d[i + 1];
    }
    Ok(d)
}

/// Constant-coefficient symmetric tridiagonal operator `a·I + b·(shift up + shift down)`,
/// factored once and solved many times.
#[derive(Debug, Clone)]
pub struct SymTridiag {
    off: f64,
    c: Vec<f64>,
    beta: Vec<f64>,
}

impl SymTridiag {
    pub fn new(size: usize, diag: f64, off: f64) -> Result<Self> {
        let mut c = vec![0.0; size];
        let mut beta = vec![0.0; size];
        for i in 0..size {
            let b = if i == 0 { diag } else { diag - off * c[i - 1] };
            if b == 0.0 {
                return Err(Error::Domain("singular tridiagonal system".into()));
            }
            beta[i] = b;
            c[i] = off / b;
        }
        Ok(Self { off, c, beta })
    }

    pub fn len(&self) -> usize {
        self.beta.len()
    }

    pub fn is_empty(&self) -> bool {
        self.beta.is_empty()
    }

    /// Overwrites `x` (the right-hand side) with the solution.
    pub fn solve_in_place(&self, x: &mut [f64]) {
        let n = self.beta.len();
        debug_assert_eq!(x.len(), n);
        if n == 0 {
            return;
        }
        x[0] /= self.beta[0];
        for i in 1..n {
            x[i] = (x[i] - self.off * x[i - 1]) / self.beta[i];
        }
        for i in (0..n - 1).rev() {
            x[i] -= self.c[i] * x[i + 1];
        }
    }

    /// Same solve along a strided view (`x[offset + i * stride]`).
    pub fn solve_strided(&self, x: &mut [f64], offset: usize, stride: usize) {
        let n = self.beta.len();
        if n == 0 {
            return;
        }
        let at = |i: usize| offset + i * stride;
        x[at(0)] /= self.beta[0];
        for i in 1..n {
            x[at(i)] = (x[at(i)] - self.off * x[at(i - 1)]) / self.beta[i];
        }
        for i in (0..n - 1).rev() {
            x[at(i)] -= self.c[i] * x[at(i + 1)];
        }
    }
}
