//! Camassa-Holm evolution, the pressure of a solution and the minimality certificate.
//!
//! The equation is advanced in momentum form `mₜ + v mₓ + 2 m vₓ = 0` with
//! `m = v - ¼ vₓₓ` and `v(0) = v(1) = 0`. The pressure is the field `p` with
//!
//! `½ vₜₓ + ¼ vₓ² + ½ v vₓₓ - v² = -2p` and `vₜ + 2 v vₓ = -pₓ`,
//!
//! and a solution on `[0, T]` minimizes the relaxed action as soon as
//! `T² |[[pₓₓ, 2pₓ], [2pₓ, 2p]]| ≤ π²` everywhere.

use std::f64::consts::PI;

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::energy::slice_h1_energy;
use crate::error::{Error, Result};
use crate::flow::integrate_flow;
use crate::grid::{SpaceGrid, TimeGrid};
use crate::map::MonotoneMap;
use crate::path::{VelocityField, TOL_DIRICHLET};
use crate::tridiag::SymTridiag;

/// Largest admissible `max|vₓ| · Δt`.
pub const BLOWUP_RATIO: f64 = 0.5;

fn grid_of(len: usize) -> Result<SpaceGrid> {
    if len < 3 {
        return Err(Error::Shape(format!("profile needs at least 3 nodes, got {len}")));
    }
    SpaceGrid::new(len - 1)
}

/// Centred first derivative, second-order one-sided at the ends.
fn d1(v: &[f64], h: f64) -> Vec<f64> {
    let n = v.len() - 1;
    (0..=n)
        .map(|j| {
            if j == 0 {
                (-3.0 * v[0] + 4.0 * v[1] - v[2]) / (2.0 * h)
            } else if j == n {
                (3.0 * v[n] - 4.0 * v[n - 1] + v[n - 2]) / (2.0 * h)
            } else {
                (v[j + 1] - v[j - 1]) / (2.0 * h)
            }
        })
        .collect()
}

/// Centred second derivative, second-order one-sided at the ends (needs 4 nodes).
fn d2(v: &[f64], h: f64) -> Vec<f64> {
    let n = v.len() - 1;
    let h2 = h * h;
    (0..=n)
        .map(|j| {
            if j == 0 {
                (2.0 * v[0] - 5.0 * v[1] + 4.0 * v[2] - v[3]) / h2
            } else if j == n {
                (2.0 * v[n] - 5.0 * v[n - 1] + 4.0 * v[n - 2] - v[n - 3]) / h2
            } else {
                (v[j + 1] - 2.0 * v[j] + v[j - 1]) / h2
            }
        })
        .collect()
}

/// Factored Dirichlet operator `I - ¼ D_xx` on the interior nodes.
#[derive(Debug, Clone)]
pub struct Helmholtz {
    grid: SpaceGrid,
    op: SymTridiag,
}

impl Helmholtz {
    pub fn new(grid: SpaceGrid) -> Result<Self> {
        let h = grid.h();
        let op = SymTridiag::new(grid.cells() - 1, 1.0 + 0.5 / (h * h), -0.25 / (h * h))?;
        Ok(Self { grid, op })
    }

    /// Solves `(I - ¼ D_xx) v = m` with `v(0) = v(1) = 0`; boundary entries of `m` are unused.
    pub fn solve(&self, m: &[f64]) -> Vec<f64> {
        let n = self.grid.cells();
        let mut v = m.to_vec();
        v[0] = 0.0;
        v[n] = 0.0;
        self.op.solve_in_place(&mut v[1..n]);
        v
    }

    /// `m = v - ¼ v_xx`; interior nodes use the operator that [`Helmholtz::solve`]
    /// inverts, boundary nodes a one-sided second difference.
    pub fn apply(&self, v: &[f64]) -> Vec<f64> {
        let h = self.grid.h();
        let vxx = d2(v, h);
        v.iter().zip(&vxx).map(|(a, b)| a - 0.25 * b).collect()
    }
}

/// Solves `(I - ¼ ∂ₓₓ) v = m` with homogeneous Dirichlet conditions.
pub fn helmholtz_solve(m: &[f64]) -> Result<Vec<f64>> {
    let grid = grid_of(m.len())?;
    Ok(Helmholtz::new(grid)?.solve(m))
}

/// Output of [`ch_evolve`].
#[derive(Debug, Clone, PartialEq)]
pub struct ChEvolution {
    /// Velocity at the computed time nodes (all of them unless the run was cut short).
    pub field: VelocityField,
    /// `E(t) = ∫ v² + ¼ vₓ²` at the same nodes.
    pub energy: Vec<f64>,
    /// Set when the blowup guard stopped the run.
    pub blowup: Option<Error>,
    /// Steps requested.
    pub requested_steps: usize,
}

impl ChEvolution {
    /// `max_t |E(t) - E(0)| / E(0)`.
    pub fn energy_drift(&self) -> f64 {
        let e0 = self.energy[0];
        if e0 == 0.0 {
            return 0.0;
        }
        self.energy.iter().map(|e| (e - e0).abs() / e0).fold(0.0, f64::max)
    }

    pub fn truncated(&self) -> bool {
        self.blowup.is_some()
    }
}

fn check_profile(v0: &[f64]) -> Result<SpaceGrid> {
    let grid = grid_of(v0.len())?;
    if v0.len() < 4 {
        return Err(Error::Shape("profile needs at least 4 nodes".into()));
    }
    if let Some(j) = v0.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFinite { row: 0, node: j });
    }
    let n = grid.cells();
    for j in [0, n] {
        if v0[j].abs() > TOL_DIRICHLET {
            return Err(Error::BoundaryViolation { node: j, value: v0[j], expected: 0.0 });
        }
    }
    Ok(grid)
}

/// Runs RK4 on the momentum equation over `steps` steps of `[0, T]`, stopping early
/// (and recording why) when `max|vₓ| · Δt` exceeds [`BLOWUP_RATIO`].
pub fn ch_evolve_partial(v0: &[f64], horizon: f64, steps: usize) -> Result<ChEvolution> {
    let grid = check_profile(v0)?;
    let tgrid = TimeGrid::new(steps, horizon)?;
    let n = grid.cells();
    let h = grid.h();
    let dt = tgrid.dt();
    let helm = Helmholtz::new(grid)?;

    let mut v = v0.to_vec();
    v[0] = 0.0;
    v[n] = 0.0;
    let mut m = helm.apply(&v);

    let rhs = |m: &[f64]| -> Vec<f64> {
        let v = helm.solve(m);
        let vx = d1(&v, h);
        (0..=n)
            .map(|j| {
                let mx = if j == 0 || j == n { 0.0 } else { (m[j + 1] - m[j - 1]) / (2.0 * h) };
                -v[j] * mx - 2.0 * m[j] * vx[j]
            })
            .collect()
    };
    let axpy = |a: &[f64], s: f64, b: &[f64]| -> Vec<f64> { a.iter().zip(b).map(|(x, y)| x + s * y).collect() };

    let mut rows = vec![v.clone()];
    let mut energy = vec![slice_h1_energy(&v, h)];
    let mut blowup = None;
    for k in 0..steps {
        let vx = d1(&v, h);
        let ratio = vx.iter().fold(0.0f64, |a, x| a.max(x.abs())) * dt;
        if !(ratio <= BLOWUP_RATIO) {
            blowup = Some(Error::BlowupDetected { step: k, time: tgrid.node(k), ratio });
            break;
        }
        let k1 = rhs(&m);
        let k2 = rhs(&axpy(&m, 0.5 * dt, &k1));
        let k3 = rhs(&axpy(&m, 0.5 * dt, &k2));
        let k4 = rhs(&axpy(&m, dt, &k3));
        for j in 0..=n {
            m[j] += dt / 6.0 * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j]);
        }
        v = helm.solve(&m);
        rows.push(v.clone());
        energy.push(slice_h1_energy(&v, h));
    }

    let done = rows.len() - 1;
    let (field_grid, values) = if done == 0 {
        // nothing integrated: keep a single degenerate step holding v₀
        (TimeGrid::new(1, 0.0)?, Array2::from_shape_fn((2, n + 1), |(_, j)| rows[0][j]))
    } else {
        (
            TimeGrid::new(done, if done == steps { horizon } else { done as f64 * dt })?,
            Array2::from_shape_fn((done + 1, n + 1), |(k, j)| rows[k][j]),
        )
    };
    if done == 0 {
        energy.push(energy[0]);
    }
    Ok(ChEvolution { field: VelocityField::new(field_grid, grid, values)?, energy, blowup, requested_steps: steps })
}

/// [`ch_evolve_partial`], failing with `BlowupDetected` if the guard trips.
pub fn ch_evolve(v0: &[f64], horizon: f64, steps: usize) -> Result<ChEvolution> {
    let mut run = ch_evolve_partial(v0, horizon, steps)?;
    match run.blowup.take() {
        Some(e) => Err(e),
        None => Ok(run),
    }
}

/// Pressure of a velocity field and the residual of the momentum equation it implies.
#[derive(Debug, Clone, PartialEq)]
pub struct Pressure {
    pub tgrid: TimeGrid,
    pub sgrid: SpaceGrid,
    pub p: Array2<f64>,
    /// `max |vₜ + 2 v vₓ + pₓ|` over interior time nodes and nodes at least two cells from the walls.
    pub residual: f64,
    /// `residual / (‖vₜ‖ + ‖2 v vₓ‖ + ‖pₓ‖)`.
    pub relative_residual: f64,
}

/// Relative residual above which a field is reported as not solving the equation.
pub const NON_SOLUTION_THRESHOLD: f64 = 0.1;

impl Pressure {
    pub fn flagged(&self) -> bool {
        self.relative_residual > NON_SOLUTION_THRESHOLD
    }
}

/// First-order one-sided at the ends, centred inside.
fn time_diff(values: &Array2<f64>, dt: f64) -> Array2<f64> {
    let (rows, cols) = values.dim();
    Array2::from_shape_fn((rows, cols), |(k, j)| {
        if k == 0 {
            (values[[1, j]] - values[[0, j]]) / dt
        } else if k == rows - 1 {
            (values[[k, j]] - values[[k - 1, j]]) / dt
        } else {
            (values[[k + 1, j]] - values[[k - 1, j]]) / (2.0 * dt)
        }
    })
}

/// `p = -½ [½ vₜₓ + ¼ vₓ² + ½ v vₓₓ - v²]` on every node.
pub fn compute_pressure(v: &VelocityField) -> Result<Pressure> {
    let tgrid = v.tgrid();
    let sgrid = v.sgrid();
    let (rows, cols) = v.values().dim();
    if rows < 2 || cols < 4 {
        return Err(Error::Shape("pressure needs at least 2 time nodes and 4 space nodes".into()));
    }
    let h = sgrid.h();
    let dt = tgrid.dt();
    if dt == 0.0 {
        return Err(Error::Domain("pressure needs a positive time step".into()));
    }
    let vals = v.values();
    let mut vx = Array2::zeros((rows, cols));
    let mut vxx = Array2::zeros((rows, cols));
    for k in 0..rows {
        let row = vals.row(k).to_vec();
        vx.row_mut(k).assign(&ndarray::Array1::from(d1(&row, h)));
        vxx.row_mut(k).assign(&ndarray::Array1::from(d2(&row, h)));
    }
    let vt = time_diff(vals, dt);
    let vtx = time_diff(&vx, dt);
    let p = Array2::from_shape_fn((rows, cols), |(k, j)| {
        let u = vals[[k, j]];
        -0.5 * (0.5 * vtx[[k, j]] + 0.25 * vx[[k, j]].powi(2) + 0.5 * u * vxx[[k, j]] - u * u)
    });

    let mut residual = 0.0f64;
    let mut scale = [0.0f64; 3];
    let interior: Vec<usize> = if rows > 2 { (1..rows - 1).collect() } else { (0..rows).collect() };
    // pₓ next to the walls differentiates one-sided stencils and is only first order;
    // there v = 0 and the equation says nothing beyond pₓ = 0, so those nodes are skipped
    let nodes = if cols >= 5 { 2..cols - 2 } else { 0..cols };
    for &k in &interior {
        let px = d1(&p.row(k).to_vec(), h);
        for j in nodes.clone() {
            let a = vt[[k, j]];
            let b = 2.0 * vals[[k, j]] * vx[[k, j]];
            residual = residual.max((a + b + px[j]).abs());
            scale[0] = scale[0].max(a.abs());
            scale[1] = scale[1].max(b.abs());
            scale[2] = scale[2].max(px[j].abs());
        }
    }
    let denom: f64 = scale.iter().sum();
    let relative_residual = if denom > 0.0 { residual / denom } else { 0.0 };
    Ok(Pressure { tgrid, sgrid, p, residual, relative_residual })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    StrictMinimizer,
    Minimizer,
    Inconclusive,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Certificate {
    #[serde(rename = "T")]
    pub horizon: f64,
    pub sup_opnorm: f64,
    /// `π² - T² · sup_opnorm`.
    pub margin: f64,
    pub verdict: Verdict,
}

/// Margins within this band of zero count as equality.
pub fn margin_band() -> f64 {
    8.0 * f64::EPSILON * PI * PI
}

/// Operator norm of the symmetric matrix `[[a, b], [b, c]]`.
pub fn sym_opnorm(a: f64, b: f64, c: f64) -> f64 {
    0.5 * (a + c).abs() + (0.25 * (a - c) * (a - c) + b * b).sqrt()
}

/// Verdict for horizon `T` given `sup |M|`.
pub fn certificate_from_sup(sup_opnorm: f64, horizon: f64) -> Certificate {
    let margin = PI * PI - horizon * horizon * sup_opnorm;
    let verdict = if margin.abs() <= margin_band() {
        Verdict::Minimizer
    } else if margin > 0.0 {
        Verdict::StrictMinimizer
    } else {
        Verdict::Inconclusive
    };
    Certificate { horizon, sup_opnorm, margin, verdict }
}

/// `sup |[[pₓₓ, 2pₓ], [2pₓ, 2p]]|` over the nodes of `p` (rows are time slices).
/// The first and last slices are skipped unless `include_boundary_slices`.
pub fn pressure_opnorm(p: &Array2<f64>, h: f64, include_boundary_slices: bool) -> f64 {
    let rows = p.nrows();
    let range = if include_boundary_slices || rows <= 2 { 0..rows } else { 1..rows - 1 };
    let mut sup = 0.0f64;
    for k in range {
        let row = p.row(k).to_vec();
        let px = d1(&row, h);
        let pxx = d2(&row, h);
        for j in 0..row.len() {
            sup = sup.max(sym_opnorm(pxx[j], 2.0 * px[j], 2.0 * row[j]));
        }
    }
    sup
}

/// Certificate of a computed solution on the horizon `T`.
pub fn minimality_certificate(v: &VelocityField, horizon: f64, include_boundary_slices: bool) -> Result<Certificate> {
    if !(horizon > 0.0 && horizon.is_finite()) {
        return Err(Error::Domain(format!("horizon must be positive, got {horizon}")));
    }
    let pressure = compute_pressure(v)?;
    let sup = pressure_opnorm(&pressure.p, v.sgrid().h(), include_boundary_slices);
    Ok(certificate_from_sup(sup, horizon))
}

/// Smoothed peakon-antipeakon pair `a (e^{-|x-0.4|/w} - e^{-|x-0.6|/w})`, with `|·|`
/// replaced by `√(·² + σ²)` and a window that brings it to 0 at both ends.
pub fn peakon_pair(grid: SpaceGrid, amplitude: f64, width: f64, smoothing: f64) -> Vec<f64> {
    let soft = |d: f64| (d * d + smoothing * smoothing).sqrt();
    let step = |u: f64| {
        let u = u.clamp(0.0, 1.0);
        u * u * (3.0 - 2.0 * u)
    };
    let n = grid.cells();
    let mut v = grid.sample(|x| {
        let window = step(x / 0.15) * step((1.0 - x) / 0.15);
        amplitude * ((-soft(x - 0.4) / width).exp() - (-soft(x - 0.6) / width).exp()) * window
    });
    v[0] = 0.0;
    v[n] = 0.0;
    v
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PeakonReport {
    pub times: Vec<f64>,
    /// `min_x ∂ₓφ` of the Lagrangian flow at each computed time.
    pub min_density: Vec<f64>,
    /// Energy `E(t)` at each computed time.
    pub energy: Vec<f64>,
    pub blowup: Option<String>,
    /// The trace decreases at every step.
    pub monotone: bool,
    pub final_min_density: f64,
}

/// Evolves the peakon pair until `T` or the blowup guard and follows the flow map's
/// smallest density.
pub fn peakon_demo(n: usize, steps: usize, horizon: f64, amplitude: f64, width: f64) -> Result<PeakonReport> {
    let grid = SpaceGrid::new(n)?;
    let v0 = peakon_pair(grid, amplitude, width, 0.25 * width);
    let run = ch_evolve_partial(&v0, horizon, steps)?;
    let path = integrate_flow(&run.field, &MonotoneMap::identity(grid))?;
    let min_density = path.min_density_trace();
    let monotone = min_density.windows(2).all(|w| w[1] <= w[0]);
    Ok(PeakonReport {
        times: run.field.tgrid().nodes(),
        final_min_density: *min_density.last().unwrap(),
        min_density,
        energy: run.energy,
        blowup: run.blowup.map(|e| e.to_string()),
        monotone,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn helmholtz_zero_and_eigenfunction() {
        assert!(helmholtz_solve(&[0.0; 17]).unwrap().iter().all(|&v| v == 0.0));
        let g = SpaceGrid::new(256).unwrap();
        let m = g.sample(|x| (1.0 + PI * PI / 4.0) * (PI * x).sin());
        let v = helmholtz_solve(&m).unwrap();
        let err = g.nodes().iter().zip(&v).map(|(x, v)| (v - (PI * x).sin()).abs()).fold(0.0, f64::max);
        assert!(err <= 1e-4, "{err}");
    }

    #[test]
    fn helmholtz_residual() {
        let g = SpaceGrid::new(100).unwrap();
        let m = g.sample(|x| (7.0 * x).cos() + x * x);
        let helm = Helmholtz::new(g).unwrap();
        let v = helm.solve(&m);
        let back = helm.apply(&v);
        for j in 1..100 {
            assert!((back[j] - m[j]).abs() <= 1e-12 * (1.0 + m[j].abs()) * 1e2);
        }
    }

    #[test]
    fn zero_data_stays_zero() {
        let run = ch_evolve(&[0.0; 33], 0.3, 10).unwrap();
        assert_eq!(run.field.max_abs(), 0.0);
        let p = compute_pressure(&run.field).unwrap();
        assert!(p.p.iter().all(|&x| x == 0.0));
        assert_eq!(p.residual, 0.0);
        let c = minimality_certificate(&run.field, 100.0, false).unwrap();
        assert_eq!(c.sup_opnorm, 0.0);
        assert_eq!(c.verdict, Verdict::StrictMinimizer);
    }

    #[test]
    fn rejects_bad_profiles() {
        assert!(matches!(ch_evolve(&[0.1, 0.0, 0.0, 0.0], 1.0, 2), Err(Error::BoundaryViolation { .. })));
        assert!(ch_evolve(&[0.0, 0.0], 1.0, 2).is_err());
    }

    #[test]
    fn opnorm_closed_form() {
        assert_eq!(sym_opnorm(0.0, 0.0, -3.0), 3.0);
        assert!((sym_opnorm(1.0, 2.0, 1.0) - 3.0).abs() < 1e-15);
        assert!((sym_opnorm(2.0, 0.0, -5.0) - 5.0).abs() < 1e-15);
    }

    #[test]
    fn constant_pressure_flips_at_threshold() {
        let c = -0.7;
        let p = Array2::from_elem((5, 9), c);
        let sup = pressure_opnorm(&p, 1.0 / 8.0, false);
        assert_eq!(sup, 2.0 * c.abs());
        let t_star = PI / (2.0 * c.abs()).sqrt();
        assert_eq!(certificate_from_sup(sup, t_star).verdict, Verdict::Minimizer);
        assert_eq!(certificate_from_sup(sup, t_star * (1.0 - 1e-9)).verdict, Verdict::StrictMinimizer);
        assert_eq!(certificate_from_sup(sup, t_star * (1.0 + 1e-9)).verdict, Verdict::Inconclusive);
    }

    #[test]
    fn frozen_field_is_flagged() {
        let g = SpaceGrid::new(128).unwrap();
        let v0 = g.sample(|x| 0.1 * (PI * x).sin());
        let frozen = VelocityField::autonomous(TimeGrid::new(64, 0.3).unwrap(), &v0).unwrap();
        assert!(compute_pressure(&frozen).unwrap().flagged());
        let run = ch_evolve(&v0, 0.3, 64).unwrap();
        assert!(!compute_pressure(&run.field).unwrap().flagged());
    }

    #[test]
    fn smooth_solution_conserves_and_has_consistent_pressure() {
        let g = SpaceGrid::new(512).unwrap();
        let run = ch_evolve(&g.sample(|x| 0.1 * (PI * x).sin()), 0.3, 512).unwrap();
        assert!(run.energy_drift() <= 1e-3);
        let p = compute_pressure(&run.field).unwrap();
        assert!(p.residual <= 5e-3, "{}", p.residual);
        let c = minimality_certificate(&run.field, 0.3, false).unwrap();
        assert_eq!(c.verdict, Verdict::StrictMinimizer);
    }

    #[test]
    fn blowup_guard_truncates() {
        let g = SpaceGrid::new(64).unwrap();
        let v0 = peakon_pair(g, 2.0, 0.05, 0.01);
        let run = ch_evolve_partial(&v0, 1.0, 4).unwrap();
        assert!(run.truncated());
        assert!(matches!(ch_evolve(&v0, 1.0, 4), Err(Error::BlowupDetected { step: 0, .. })));
        assert_eq!(run.field.tgrid().len(), 2);
    }
}
