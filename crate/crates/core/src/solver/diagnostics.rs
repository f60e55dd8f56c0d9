//! Numerical checks of the distance axioms on a triple of maps.

use serde::Serialize;

use super::{solve_geodesic, SolverOptions};
use crate::error::Result;
use crate::map::MonotoneMap;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricReport {
    pub d_ab: f64,
    pub d_ba: f64,
    pub d_ac: f64,
    pub d_bc: f64,
    /// `d(a∘η, b∘η)`.
    pub d_ab_eta: f64,
    /// `|d(a,b) - d(b,a)| / d(a,b)`.
    pub symmetry_rel: f64,
    /// Largest `d(x,z) - d(x,y) - d(y,z)` over the three orderings of the triple.
    pub triangle_excess: f64,
    /// `|d(a∘η, b∘η) - d(a,b)| / d(a,b)`.
    pub right_invariance_rel: f64,
    /// Largest `‖x - y‖_∞ / (2 d(x,y))` over the solved pairs.
    pub sup_ratio: f64,
    pub all_converged: bool,
    pub symmetry_ok: bool,
    pub triangle_ok: bool,
    pub right_invariance_ok: bool,
    pub sup_domination_ok: bool,
}

/// Relative tolerance of the symmetry and right-invariance checks.
pub const METRIC_REL_TOL: f64 = 0.02;

fn rel(a: f64, b: f64) -> f64 {
    if a == b {
        0.0
    } else {
        (a - b).abs() / a.abs().max(b.abs())
    }
}

/// Solves the five geodesic problems `ab, ba, ac, bc` and `(a∘η)(b∘η)` and checks
/// symmetry, the triangle inequality (up to `triangle_tol`), right-invariance and
/// `‖x - y‖_∞ ≤ 2 d(x, y)`.
pub fn metric_diagnostics(
    a: &MonotoneMap,
    b: &MonotoneMap,
    c: &MonotoneMap,
    eta: &MonotoneMap,
    opts: &SolverOptions,
    triangle_tol: f64,
) -> Result<MetricReport> {
    let solve = |x: &MonotoneMap, y: &MonotoneMap| solve_geodesic(x, y, opts);
    let ab = solve(a, b)?;
    let ba = solve(b, a)?;
    let ac = solve(a, c)?;
    let bc = solve(b, c)?;
    let ab_eta = solve(&a.compose(eta), &b.compose(eta))?;

    let (d_ab, d_ba, d_ac, d_bc, d_ab_eta) = (ab.distance, ba.distance, ac.distance, bc.distance, ab_eta.distance);
    let triangle_excess = [d_ac - d_ab - d_bc, d_ab - d_ac - d_bc, d_bc - d_ab - d_ac].into_iter().fold(f64::MIN, f64::max);

    let pairs = [
        (a.clone(), b.clone(), d_ab),
        (b.clone(), a.clone(), d_ba),
        (a.clone(), c.clone(), d_ac),
        (b.clone(), c.clone(), d_bc),
        (a.compose(eta), b.compose(eta), d_ab_eta),
    ];
    let mut sup_ratio = 0.0f64;
    let mut sup_ok = true;
    for (x, y, d) in &pairs {
        let s = x.sup_distance(y)?;
        sup_ok &= s <= 2.0 * d;
        if s > 0.0 {
            sup_ratio = sup_ratio.max(s / (2.0 * d));
        }
    }
    let symmetry_rel = rel(d_ab, d_ba);
    let right_invariance_rel = rel(d_ab, d_ab_eta);
    Ok(MetricReport {
        d_ab,
        d_ba,
        d_ac,
        d_bc,
        d_ab_eta,
        symmetry_rel,
        triangle_excess,
        right_invariance_rel,
        sup_ratio,
        all_converged: [&ab, &ba, &ac, &bc, &ab_eta].iter().all(|r| r.converged),
        symmetry_ok: symmetry_rel <= METRIC_REL_TOL,
        triangle_ok: triangle_excess <= triangle_tol,
        right_invariance_ok: right_invariance_rel <= METRIC_REL_TOL,
        sup_domination_ok: sup_ok,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::SpaceGrid;

    #[test]
    fn trivial_triple() {
        let id = MonotoneMap::identity(SpaceGrid::new(8).unwrap());
        let r = metric_diagnostics(&id, &id, &id, &id, &SolverOptions::with_steps(4), 1e-6).unwrap();
        assert_eq!((r.d_ab, r.d_ba, r.d_ac, r.d_bc, r.d_ab_eta), (0.0, 0.0, 0.0, 0.0, 0.0));
        assert!(r.symmetry_ok && r.triangle_ok && r.right_invariance_ok && r.sup_domination_ok);
    }
}
