//! Turning jumps into continuous flows.
//!
//! A gap `[φ⁻(t), φ⁺(t)]` of the image is filled with particles advected by the
//! cheapest field matching the boundary velocities, the `sinh` interpolant of the
//! metric (`∫ v² + ¼ v'²`). Filling every jump of a path on a widened domain and
//! rescaling back to `[0, 1]` gives a continuous path whose action equals the
//! relaxed action of the original.

use ndarray::Array2;
use serde::Serialize;

use super::jumps::JumpSpec;
use super::{repair_row, rk4_step};
use crate::energy::{jump_cells, sinh_interpolant, step_energy, FisherRaoOptions};
use crate::error::{Error, Result};
use crate::grid::{SpaceGrid, TimeGrid};
use crate::map::interp_uniform;
use crate::path::{JumpRecord, PathGrid};

/// Gaps narrower than this are treated as closed.
pub const GAP_COLLAPSE: f64 = 1e-12;

/// Particles filling one gap: `values[k, i]` for `i = 0..=q+1`, the first and last
/// columns being the two boundary curves.
#[derive(Debug, Clone, PartialEq)]
pub struct FilledGap {
    pub tgrid: TimeGrid,
    pub values: Array2<f64>,
    /// Time nodes at which the gap was closed and the interior pinned.
    pub collapsed: Vec<usize>,
}

impl FilledGap {
    /// Discrete Lagrangian action of the filled region, with the stencils of
    /// [`crate::energy::lagrangian_energy`].
    pub fn energy(&self) -> Result<f64> {
        let cells = self.values.ncols() - 1;
        let h = 1.0 / cells as f64;
        let dt = self.tgrid.dt();
        let mut total = 0.0;
        for k in 0..self.tgrid.steps() {
            let lo = self.values.row(k).to_vec();
            let hi = self.values.row(k + 1).to_vec();
            let (kin, fr) = step_energy(&lo, &hi, h, dt, FisherRaoOptions::strict(), &[], k)?;
            total += kin + fr;
        }
        Ok(total)
    }
}

fn lerp(a: f64, b: f64, w: f64) -> f64 {
    a + w * (b - a)
}

/// Fills the gap between the curves `lo ≤ hi` (sampled on `tgrid`) with `interior`
/// particles, seeded affinely at `t = 0` and advected by the `sinh` interpolant
/// between `(lo, v_lo)` and `(hi, v_hi)`.
pub fn fill_between(
    tgrid: TimeGrid,
    lo: &[f64],
    hi: &[f64],
    v_lo: &[f64],
    v_hi: &[f64],
    interior: usize,
) -> Result<FilledGap> {
    let len = tgrid.len();
    if [lo.len(), hi.len(), v_lo.len(), v_hi.len()].iter().any(|&l| l != len) {
        return Err(Error::Shape("boundary curves must be sampled on the time grid".into()));
    }
    if let Some(k) = (0..len).find(|&k| lo[k] > hi[k] + crate::map::TOL_MONO) {
        return Err(Error::InconsistentJump(format!("lower curve above upper curve at time node {k}")));
    }
    let cols = interior + 2;
    let dt = tgrid.dt();
    let mut values = Array2::zeros((len, cols));
    let mut collapsed = Vec::new();
    let mut y: Vec<f64> = (0..cols)
        .map(|i| {
            let s = i as f64 / (cols - 1) as f64;
            (1.0 - s) * lo[0] + s * hi[0]
        })
        .collect();
    for k in 0..len {
        if k > 0 {
            let t0 = tgrid.node(k - 1);
            let field = |t: f64, x: f64| {
                let w = if dt > 0.0 { ((t - t0) / dt).clamp(0.0, 1.0) } else { 0.0 };
                let a = lerp(lo[k - 1], lo[k], w);
                let b = lerp(hi[k - 1], hi[k], w);
                let ua = lerp(v_lo[k - 1], v_lo[k], w);
                let ub = lerp(v_hi[k - 1], v_hi[k], w);
                if b - a < GAP_COLLAPSE {
                    0.5 * (ua + ub)
                } else {
                    sinh_interpolant(ua, ub, a, b, 2.0, x.clamp(a, b))
                }
            };
            for yi in y.iter_mut().take(cols - 1).skip(1) {
                *yi = rk4_step(field, t0, *yi, dt);
            }
        }
        y[0] = lo[k];
        y[cols - 1] = hi[k].max(lo[k]);
        if y[cols - 1] - y[0] < GAP_COLLAPSE {
            collapsed.push(k);
            for yi in y.iter_mut().skip(1) {
                *yi = lo[k];
            }
        } else {
            // particles never leave the gap; clamping only removes round-off
            let top = y[cols - 1];
            let _ = repair_row(&mut y, lo[k], top, f64::INFINITY);
        }
        values.row_mut(k).assign(&ndarray::ArrayView1::from(&y[..]));
    }
    Ok(FilledGap { tgrid, values, collapsed })
}

/// Output of [`fill_jumps`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FillReport {
    #[serde(skip)]
    pub path: PathGrid,
    /// The opened gaps, with widths snapped to whole input cells.
    pub spec: JumpSpec,
    /// Interior particles per jump (`q_i`, the gap width in input cells).
    pub interior: Vec<usize>,
    /// `Σ ε_i` after snapping.
    pub effective_eps: f64,
    /// `max_t ∫ |φ_ε(t, x) - φ(t, x)| dx`.
    pub l1_distance: f64,
    /// Largest nodal increment of any output slice.
    pub max_increment: f64,
    /// Mesh size of the output grid.
    pub h_out: f64,
}

/// Opens a gap of width `ε_i ∝ max_t (φ⁺ - φ⁻)` (`Σ ε_i ≈ eps`) at every jump, fills
/// it with [`fill_between`] and maps the widened domain back to `[0, 1]`.
///
/// Widths are snapped to `q_i ≥ 1` input cells so the output stays on a uniform grid
/// of `n + Σ q_i` cells. Each jump's grid cell becomes `q_i + 1` cells of the filled
/// region.
pub fn fill_jumps(path: &PathGrid, jumps: &[JumpRecord], eps: f64) -> Result<FillReport> {
    let sgrid = path.sgrid();
    let tgrid = path.tgrid();
    let n = sgrid.cells();
    let h = sgrid.h();
    let cells = jump_cells(path, jumps)?;
    if !jumps.is_empty() && !(eps > 0.0 && eps.is_finite()) {
        return Err(Error::Domain(format!("widening eps must be positive, got {eps}")));
    }
    let mut order: Vec<usize> = (0..jumps.len()).collect();
    order.sort_by_key(|&i| cells[i]);

    let gaps: Vec<f64> = jumps.iter().map(|r| r.max_gap()).collect();
    let gap_sum: f64 = gaps.iter().sum();
    let interior: Vec<usize> = order
        .iter()
        .map(|&i| {
            let share = if gap_sum > 0.0 { gaps[i] / gap_sum } else { 1.0 / jumps.len() as f64 };
            ((share * eps / h).round() as usize).max(1)
        })
        .collect();

    let values = path.values();
    let mut fills = Vec::with_capacity(order.len());
    for (slot, &i) in order.iter().enumerate() {
        let c = cells[i];
        let lo = values.column(c).to_vec();
        let hi = values.column(c + 1).to_vec();
        let rec = &jumps[i];
        fills.push(fill_between(tgrid, &lo, &hi, &rec.left_velocities, &rec.right_velocities, interior[slot])?);
    }

    let added: usize = interior.iter().sum();
    let out_grid = SpaceGrid::new(n + added)?;
    let mut out = Array2::zeros((tgrid.len(), out_grid.len()));
    for k in 0..tgrid.len() {
        let mut col = 0;
        let mut next_fill = 0;
        for j in 0..=n {
            out[[k, col]] = values[[k, j]];
            col += 1;
            if next_fill < order.len() && cells[order[next_fill]] == j {
                let f = &fills[next_fill].values;
                for i in 1..f.ncols() - 1 {
                    out[[k, col]] = f[[k, i]];
                    col += 1;
                }
                next_fill += 1;
            }
        }
    }
    let filled = PathGrid::new(tgrid, out_grid, out)?;

    let spec = JumpSpec::new(
        order.iter().map(|&i| jumps[i].location).collect(),
        interior.iter().map(|&q| q as f64 * h).collect(),
    )?;

    let samples = 8 * out_grid.len().max(sgrid.len());
    let mut l1 = 0.0f64;
    for k in 0..tgrid.len() {
        let a = filled.values().row(k).to_vec();
        let b = values.row(k).to_vec();
        let d: f64 = (0..samples)
            .map(|i| {
                let x = (i as f64 + 0.5) / samples as f64;
                (interp_uniform(&a, x) - interp_uniform(&b, x)).abs()
            })
            .sum::<f64>()
            / samples as f64;
        l1 = l1.max(d);
    }
    let max_increment = filled
        .values()
        .rows()
        .into_iter()
        .flat_map(|r| r.windows(2).into_iter().map(|w| w[1] - w[0]).collect::<Vec<_>>())
        .fold(0.0, f64::max);

    Ok(FillReport {
        path: filled,
        effective_eps: spec.total(),
        spec,
        interior,
        l1_distance: l1,
        max_increment,
        h_out: out_grid.h(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::energy::{e_sh_metric, relaxed_energy, JumpFormula};
    use crate::map::MonotoneMap;

    #[test]
    fn static_gap_stays_affine() {
        let tg = TimeGrid::unit(10).unwrap();
        let lo = vec![0.2; 11];
        let hi = vec![0.6; 11];
        let zero = vec![0.0; 11];
        let g = fill_between(tg, &lo, &hi, &zero, &zero, 3).unwrap();
        for k in 0..=10 {
            for i in 0..5 {
                assert!((g.values[[k, i]] - (0.2 + 0.1 * i as f64)).abs() < 1e-15);
            }
        }
        assert!(g.collapsed.is_empty());
        assert_eq!(g.energy().unwrap(), 0.0);
    }

    #[test]
    fn closing_gap_keeps_order() {
        let m = 200;
        let tg = TimeGrid::unit(m).unwrap();
        let len = 0.3;
        let lo = vec![0.4; m + 1];
        let hi: Vec<f64> = tg.nodes().iter().map(|t| 0.4 + len * (1.0 - t)).collect();
        let g = fill_between(tg, &lo, &hi, &vec![0.0; m + 1], &vec![-len; m + 1], 9).unwrap();
        for k in 0..=m {
            let row = g.values.row(k);
            for i in 0..row.len() - 1 {
                assert!(row[i] <= row[i + 1]);
            }
            assert!(row[0] >= lo[k] && row[row.len() - 1] <= hi[k]);
        }
        assert!(g.values.row(m).iter().all(|&y| (y - 0.4).abs() < 1e-12));
        assert_eq!(g.collapsed, vec![m]);
    }

    #[test]
    fn filled_energy_is_minimal_norm() {
        let m = 128;
        let tg = TimeGrid::unit(m).unwrap();
        let t = tg.nodes();
        let lo: Vec<f64> = t.iter().map(|t| 0.3 + 0.1 * t).collect();
        let hi: Vec<f64> = t.iter().map(|t| 0.7 - 0.05 * t * t).collect();
        let v_lo = vec![0.1; m + 1];
        let v_hi: Vec<f64> = t.iter().map(|t| -0.1 * t).collect();
        let g = fill_between(tg, &lo, &hi, &v_lo, &v_hi, 31).unwrap();
        let samples: Vec<f64> = (0..=m).map(|k| e_sh_metric(v_lo[k], v_hi[k], lo[k], hi[k]).unwrap()).collect();
        let closed = crate::energy::trapezoid(&samples, tg.dt());
        let e = g.energy().unwrap();
        assert!((e - closed).abs() <= 0.01 * closed, "{e} vs {closed}");
    }

    fn jump_path(n: usize, m: usize, lo: impl Fn(f64) -> f64, hi: impl Fn(f64) -> f64) -> (PathGrid, JumpRecord) {
        let sg = SpaceGrid::new(n).unwrap();
        let tg = TimeGrid::unit(m).unwrap();
        let c = sg.cell_of(0.5);
        let xc = sg.node(c);
        let xc1 = sg.node(c + 1);
        let path = PathGrid::from_fn(tg, sg, |t, x| {
            if x <= xc {
                lo(t) * x / xc
            } else {
                hi(t) + (1.0 - hi(t)) * (x - xc1) / (1.0 - xc1)
            }
        })
        .unwrap();
        let rec = JumpRecord::from_path(&path, 0.5).unwrap();
        (path, rec)
    }

    #[test]
    fn no_jumps_is_identity() {
        let sg = SpaceGrid::new(16).unwrap();
        let path = PathGrid::constant(TimeGrid::unit(4).unwrap(), &MonotoneMap::from_fn(sg, |x| x * x).unwrap());
        let r = fill_jumps(&path, &[], 0.1).unwrap();
        assert_eq!(r.path, path);
        assert_eq!(r.effective_eps, 0.0);
        assert_eq!(r.l1_distance, 0.0);
    }

    #[test]
    fn static_jump_becomes_continuous() {
        let (path, rec) = jump_path(128, 8, |_| 0.35, |_| 0.65);
        let r = fill_jumps(&path, &[rec], 0.12).unwrap();
        assert_eq!(r.interior, vec![15]);
        assert!(r.max_increment <= 3.0 * r.h_out, "{} vs {}", r.max_increment, r.h_out);
        assert!(r.l1_distance <= r.effective_eps);
    }

    #[test]
    fn moving_jump_preserves_energy() {
        let (path, rec) = jump_path(128, 64, |t| 0.35 + 0.1 * t, |t| 0.65 - 0.05 * t);
        let relaxed = relaxed_energy(&path, &[rec.clone()], FisherRaoOptions::strict(), JumpFormula::Metric).unwrap();
        let r = fill_jumps(&path, &[rec], 0.12).unwrap();
        let filled = crate::energy::lagrangian_energy(&r.path, FisherRaoOptions::strict()).unwrap();
        assert!(
            (filled.total - relaxed.total).abs() <= 0.01 * relaxed.total,
            "{} vs {}",
            filled.total,
            relaxed.total
        );
    }
}
