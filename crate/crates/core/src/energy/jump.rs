//! Jump terms of the relaxed action.
//!
//! Across an open gap `[φ⁻, φ⁺]` of the image, the cheapest velocity field matching
//! the boundary velocities is a `sinh` combination, and its energy prices the jump.

use serde::{Deserialize, Serialize};

use super::{lagrangian_parts, trapezoid, EnergyBreakdown, FisherRaoOptions};
use crate::error::{Error, Result};
use crate::grid::TimeGrid;
use crate::path::{JumpRecord, PathGrid};

/// Closed-form `min ∫ₐᵇ v² + v'²` subject to `v(a) = v⁻`, `v(b) = v⁺`:
/// `(v⁻² + v⁺²) coth L - 2 v⁻ v⁺ / sinh L` with `L = b - a`.
pub fn e_sh_closed(v_minus: f64, v_plus: f64, a: f64, b: f64) -> Result<f64> {
    let len = b - a;
    if !(len > 0.0) {
        return Err(Error::Domain(format!("E_sh needs b > a, got a = {a}, b = {b}")));
    }
    Ok(e_sh_len(v_minus, v_plus, len))
}

/// Same value written as `(v⁻ - v⁺)² coth L + 2 v⁻ v⁺ tanh(L / 2)`, which stays
/// accurate for short and long intervals.
fn e_sh_len(u: f64, w: f64, len: f64) -> f64 {
    let d = u - w;
    let value = d * d / len.tanh() + 2.0 * u * w * (0.5 * len).tanh();
    value.max(0.0)
}

/// `min ∫ₐᵇ v² + ¼ v'²` with the same boundary data; the substitution `y = 2x` turns it
/// into `½ · E_sh(v⁻, v⁺, 2a, 2b)`.
pub fn e_sh_metric(v_minus: f64, v_plus: f64, a: f64, b: f64) -> Result<f64> {
    Ok(0.5 * e_sh_closed(v_minus, v_plus, 2.0 * a, 2.0 * b)?)
}

/// Minimizer of `∫ v² + v'²/κ²` on `[a, b]` with `v(a) = v⁻`, `v(b) = v⁺`:
/// `v⁺ sinh(κ(x-a))/sinh(κL) + v⁻ sinh(κ(b-x))/sinh(κL)`.
///
/// `rate = 1` is the unweighted problem, `rate = 2` the metric's.
pub fn sinh_interpolant(v_minus: f64, v_plus: f64, a: f64, b: f64, rate: f64, x: f64) -> f64 {
    let s = (rate * (b - a)).sinh();
    if s == 0.0 {
        return 0.5 * (v_minus + v_plus);
    }
    (v_plus * (rate * (x - a)).sinh() + v_minus * (rate * (b - x)).sinh()) / s
}

/// Which expression prices a jump.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum JumpFormula {
    /// `E_sh` of the unweighted functional `∫ v² + v'²`.
    ClosedForm,
    /// `L · E_sh`: the jump expression with leading `(φ⁺ - φ⁻)` factors on both terms.
    AsPrinted,
    /// Minimal `∫ v² + ¼ v'²`, the weighting of the metric itself.
    #[default]
    Metric,
}

fn jump_density(formula: JumpFormula, u: f64, w: f64, gap: f64) -> f64 {
    match formula {
        JumpFormula::ClosedForm => e_sh_len(u, w, gap),
        JumpFormula::AsPrinted => {
            // (φ₊ - φ₋)(u² + w²) coth(φ₊ - φ₋) - 2 (φ₊ - φ₋) u w / sinh(φ₊ - φ₋)
            gap * ((u * u + w * w) / gap.tanh() - 2.0 * u * w / gap.sinh())
        }
        JumpFormula::Metric => 0.5 * e_sh_len(u, w, 2.0 * gap),
    }
}

/// Time integral (trapezoid over the time nodes) of the jump terms.
/// Closed jumps (`φ⁺ = φ⁻`) contribute nothing.
pub fn jump_energy(jumps: &[JumpRecord], tgrid: TimeGrid, formula: JumpFormula) -> Result<f64> {
    let mut total = 0.0;
    for rec in jumps {
        if rec.len() != tgrid.len() {
            return Err(Error::Shape(format!(
                "jump at {} has {} samples, time grid has {}",
                rec.location,
                rec.len(),
                tgrid.len()
            )));
        }
        let samples: Vec<f64> = (0..rec.len())
            .map(|k| {
                let gap = rec.gap(k);
                if gap > 0.0 {
                    jump_density(formula, rec.left_velocities[k], rec.right_velocities[k], gap)
                } else {
                    0.0
                }
            })
            .collect();
        total += trapezoid(&samples, tgrid.dt());
    }
    Ok(total)
}

/// Tolerance for matching jump limits against the path's nodal values.
const LIMIT_TOL: f64 = 1e-9;

/// Cells of `path` that carry the jumps, checked against the recorded limits.
pub(crate) fn jump_cells(path: &PathGrid, jumps: &[JumpRecord]) -> Result<Vec<usize>> {
    let sgrid = path.sgrid();
    let mut cells = Vec::with_capacity(jumps.len());
    for rec in jumps {
        if rec.len() != path.tgrid().len() {
            return Err(Error::Shape(format!("jump at {} is not sampled on the path's time grid", rec.location)));
        }
        let j = sgrid.cell_of(rec.location);
        if cells.contains(&j) {
            return Err(Error::InconsistentJump(format!("two jumps share cell {j}")));
        }
        for k in 0..rec.len() {
            let lo = path.values()[[k, j]];
            let hi = path.values()[[k, j + 1]];
            if (lo - rec.left_limits[k]).abs() > LIMIT_TOL || (hi - rec.right_limits[k]).abs() > LIMIT_TOL {
                return Err(Error::InconsistentJump(format!(
                    "limits of jump at {} do not match the path at time node {k}",
                    rec.location
                )));
            }
        }
        cells.push(j);
    }
    Ok(cells)
}

/// Relaxed action of a path with jumps.
///
/// `path` samples the whole map; each jump sits in the grid cell containing its
/// location and that cell's increment is priced by the jump term instead of the
/// continuous integrand.
pub fn relaxed_energy(
    path: &PathGrid,
    jumps: &[JumpRecord],
    opts: FisherRaoOptions,
    formula: JumpFormula,
) -> Result<EnergyBreakdown> {
    let cells = jump_cells(path, jumps)?;
    let (kin, fr) = lagrangian_parts(path, opts, &cells)?;
    let jump = jump_energy(jumps, path.tgrid(), formula)?;
    Ok(EnergyBreakdown::new(kin, fr, jump))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::energy::lagrangian_energy;
    use crate::grid::SpaceGrid;
    use crate::map::MonotoneMap;
    use crate::tridiag::solve_tridiagonal;

    /// Composite Simpson quadrature of ∫ v² + v'² for the sinh minimizer.
    fn quadrature_oracle(u: f64, w: f64, len: f64) -> f64 {
        let n = 20_000;
        let s = len.sinh();
        let step = len / n as f64;
        let f = |x: f64| {
            let v = (w * x.sinh() + u * (len - x).sinh()) / s;
            let dv = (w * x.cosh() - u * (len - x).cosh()) / s;
            v * v + dv * dv
        };
        let mut acc = f(0.0) + f(len);
        for i in 1..n {
            acc += if i % 2 == 1 { 4.0 } else { 2.0 } * f(i as f64 * step);
        }
        acc * step / 3.0
    }

    /// Discrete minimization of Σ (v_i² + ((v_{i+1} - v_i)/Δ)²)Δ: tridiagonal normal equations.
    fn discrete_oracle(u: f64, w: f64, len: f64, points: usize) -> f64 {
        let cells = points - 1;
        let d = len / cells as f64;
        let inner = cells - 1;
        // (2/d² + 1) v_i - (v_{i-1} + v_{i+1})/d² = 0 with Dirichlet data (trapezoid mass)
        let sub = vec![-1.0 / (d * d); inner];
        let diag = vec![1.0 + 2.0 / (d * d); inner];
        let sup = vec![-1.0 / (d * d); inner];
        let mut rhs = vec![0.0; inner];
        rhs[0] += u / (d * d);
        rhs[inner - 1] += w / (d * d);
        let v_inner = solve_tridiagonal(&sub, &diag, &sup, &rhs).unwrap();
        let mut v = vec![u];
        v.extend(v_inner);
        v.push(w);
        let mut acc = 0.0;
        for i in 0..cells {
            let g = (v[i + 1] - v[i]) / d;
            acc += g * g * d;
        }
        for (i, vi) in v.iter().enumerate() {
            let wgt = if i == 0 || i == cells { 0.5 } else { 1.0 };
            acc += wgt * vi * vi * d;
        }
        acc
    }

    #[test]
    fn e_sh_examples() {
        assert_eq!(e_sh_closed(0.0, 0.0, 0.0, 1.0).unwrap(), 0.0);
        let coth1 = 1.0 / 1f64.tanh();
        assert!((e_sh_closed(0.0, 1.0, 0.0, 1.0).unwrap() - coth1).abs() < 1e-12);
        assert!((e_sh_closed(1.0, 1.0, 0.0, 1.0).unwrap() - 2.0 * 0.5f64.tanh()).abs() < 1e-12);
        assert!((coth1 - 1.313035).abs() < 1e-6);
        assert!((2.0 * 0.5f64.tanh() - 0.924234).abs() < 1e-6);
        assert!(matches!(e_sh_closed(1.0, 1.0, 1.0, 1.0), Err(Error::Domain(_))));
    }

    #[test]
    fn e_sh_against_both_oracles() {
        for &(u, w, len) in &[(0.0, 1.0, 1.0), (1.0, 1.0, 1.0), (-0.7, 1.3, 0.4), (2.0, -0.5, 3.0)] {
            let closed = e_sh_closed(u, w, 0.0, len).unwrap();
            let q = quadrature_oracle(u, w, len);
            assert!((closed - q).abs() <= 1e-9 * closed.max(1.0), "{closed} vs quadrature {q}");
            let d = discrete_oracle(u, w, len, 2000);
            assert!((closed - d).abs() <= 1e-4 * closed, "{closed} vs discrete {d}");
        }
    }

    #[test]
    fn e_sh_symmetry_and_limits() {
        for &(u, w, len) in &[(0.3, -2.0, 0.01), (1.0, 4.0, 2.0), (-1.0, -1.0, 0.5)] {
            assert_eq!(e_sh_closed(u, w, 0.0, len).unwrap(), e_sh_closed(w, u, 0.0, len).unwrap());
            assert!(e_sh_closed(u, w, 0.0, len).unwrap() >= 0.0);
            let far = e_sh_closed(u, w, 0.0, 40.0).unwrap();
            assert!((far - (u * u + w * w)).abs() < 1e-9);
        }
    }

    #[test]
    fn metric_variant_is_rescaled_closed_form() {
        // direct quadrature of v² + ¼ v'² for the rate-2 interpolant
        let (u, w, a, b) = (0.4, -1.1, 0.2, 0.55);
        let n = 20_000;
        let mut acc = 0.0;
        let eps = 1e-6;
        for i in 0..n {
            let x = a + (i as f64 + 0.5) * (b - a) / n as f64;
            let v = sinh_interpolant(u, w, a, b, 2.0, x);
            let dv = (sinh_interpolant(u, w, a, b, 2.0, x + eps) - sinh_interpolant(u, w, a, b, 2.0, x - eps))
                / (2.0 * eps);
            acc += v * v + 0.25 * dv * dv;
        }
        acc *= (b - a) / n as f64;
        let closed = e_sh_metric(u, w, a, b).unwrap();
        assert!((acc - closed).abs() < 1e-6 * closed, "{acc} vs {closed}");
        assert_eq!(sinh_interpolant(u, w, a, b, 2.0, a), u);
        assert!((sinh_interpolant(u, w, a, b, 2.0, b) - w).abs() < 1e-15);
    }

    fn static_jump(tgrid: TimeGrid, lo: f64, hi: f64, u: f64, w: f64) -> JumpRecord {
        let len = tgrid.len();
        JumpRecord::new(0.5, vec![lo; len], vec![hi; len], vec![u; len], vec![w; len]).unwrap()
    }

    #[test]
    fn jump_energy_modes() {
        let tg = TimeGrid::unit(10).unwrap();
        assert_eq!(jump_energy(&[], tg, JumpFormula::ClosedForm).unwrap(), 0.0);
        let rec = static_jump(tg, 0.35, 0.65, 0.0, 1.0);
        let closed = jump_energy(std::slice::from_ref(&rec), tg, JumpFormula::ClosedForm).unwrap();
        let coth = 1.0 / 0.3f64.tanh();
        assert!((closed - coth).abs() < 1e-12);
        let printed = jump_energy(std::slice::from_ref(&rec), tg, JumpFormula::AsPrinted).unwrap();
        assert!((printed - 0.3 * closed).abs() < 1e-12);
        let metric = jump_energy(&[rec], tg, JumpFormula::Metric).unwrap();
        assert!((metric - 0.5 / 0.6f64.tanh()).abs() < 1e-12);
    }

    #[test]
    fn closed_jump_contributes_nothing() {
        let tg = TimeGrid::unit(4).unwrap();
        let rec = static_jump(tg, 0.5, 0.5, 3.0, -2.0);
        assert_eq!(jump_energy(&[rec], tg, JumpFormula::ClosedForm).unwrap(), 0.0);
    }

    fn step_path(tg: TimeGrid, sg: SpaceGrid, lo: f64, hi: f64) -> PathGrid {
        // jump in the cell containing 0.5, linear elsewhere
        let n = sg.cells();
        let jc = sg.cell_of(0.5);
        let values: Vec<f64> = (0..=n)
            .map(|j| {
                if j <= jc {
                    lo * j as f64 / jc as f64
                } else {
                    hi + (1.0 - hi) * (j - jc - 1) as f64 / (n - jc - 1) as f64
                }
            })
            .collect();
        PathGrid::constant(tg, &MonotoneMap::new(values).unwrap())
    }

    #[test]
    fn relaxed_energy_components() {
        let tg = TimeGrid::unit(8).unwrap();
        let sg = SpaceGrid::new(21).unwrap();
        let path = step_path(tg, sg, 0.35, 0.65);
        let plain = lagrangian_energy(&path, FisherRaoOptions::strict()).unwrap();
        let none = relaxed_energy(&path, &[], FisherRaoOptions::strict(), JumpFormula::Metric).unwrap();
        assert_eq!(plain, none);

        let rec = JumpRecord::from_path(&path, 0.5).unwrap();
        let e = relaxed_energy(&path, &[rec], FisherRaoOptions::strict(), JumpFormula::ClosedForm).unwrap();
        assert_eq!(e.kinetic, 0.0);
        assert_eq!(e.fisher_rao, 0.0);
        // static limits have zero velocity: the gap is free
        assert!(e.jump < 1e-25);

        let moving = JumpRecord::new(0.5, vec![0.35; 9], vec![0.65; 9], vec![0.0; 9], vec![1.0; 9]).unwrap();
        let e = relaxed_energy(&path, &[moving], FisherRaoOptions::strict(), JumpFormula::ClosedForm).unwrap();
        assert!(e.jump > 0.0);
        assert_eq!(e.total, e.kinetic + e.fisher_rao + e.jump);
    }

    #[test]
    fn relaxed_energy_rejects_mismatched_limits() {
        let tg = TimeGrid::unit(4).unwrap();
        let sg = SpaceGrid::new(21).unwrap();
        let path = step_path(tg, sg, 0.35, 0.65);
        let rec = static_jump(tg, 0.3, 0.65, 0.0, 0.0);
        assert!(matches!(
            relaxed_energy(&path, &[rec], FisherRaoOptions::strict(), JumpFormula::Metric),
            Err(Error::InconsistentJump(_))
        ));
    }

    #[test]
    fn jump_term_vanishes_with_the_gap() {
        // matched velocities: E_sh(v, v, L) = 2 v² tanh(L/2) → 0
        let tg = TimeGrid::unit(4).unwrap();
        let mut last = f64::INFINITY;
        for &gap in &[0.4, 0.1, 0.01, 1e-4, 1e-8] {
            let rec = static_jump(tg, 0.5 - gap / 2.0, 0.5 + gap / 2.0, 0.7, 0.7);
            for formula in [JumpFormula::ClosedForm, JumpFormula::Metric] {
                let e = jump_energy(std::slice::from_ref(&rec), tg, formula).unwrap();
                assert!(e <= 0.49 * gap + 1e-15, "{e} for gap {gap}");
            }
            let e = jump_energy(&[rec], tg, JumpFormula::ClosedForm).unwrap();
            assert!(e < last);
            last = e;
        }
    }
}
