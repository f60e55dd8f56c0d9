//! Geodesics between two maps by direct minimization of the discrete action over
//! paths with fixed endpoints.
//!
//! Projected gradient descent: the direction is the gradient preconditioned by a
//! constant-coefficient model of the Hessian, the trial step is the Barzilai-Borwein
//! length, and a backtracking Armijo search accepts it. Interior slices are kept in
//! Mon₊ with cell densities at least `δ` by projecting the increments.

mod action;
mod diagnostics;
mod el;
mod precond;

pub use action::{discrete_action, discrete_action_gradient};
pub use diagnostics::{metric_diagnostics, MetricReport};
pub use el::{el_residual, ElReading};

use ndarray::{Array2, Zip};
use serde::Serialize;

use crate::energy::{lagrangian_energy, EnergyBreakdown, FisherRaoOptions};
use crate::error::{Error, Result};
use crate::grid::TimeGrid;
use crate::hellinger::hellinger_path;
use crate::map::MonotoneMap;
use crate::path::PathGrid;
use action::{action_raw, gradient_raw, min_interior_density};
use precond::Preconditioner;

/// Armijo sufficient-decrease constant.
pub const ARMIJO: f64 = 1e-4;
/// Backtracking factor.
pub const BACKTRACK: f64 = 0.5;

/// Starting path of the descent.
#[derive(Debug, Clone, PartialEq)]
pub enum Init {
    Hellinger,
    /// `(1 - t) φ₀ + t φ₁`.
    Linear,
    Given(PathGrid),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverOptions {
    /// Time steps of the path on `[0, 1]`.
    pub steps: usize,
    pub max_iters: usize,
    pub grad_tol: f64,
    /// `δ`: lower bound on interior cell densities.
    pub density_floor: f64,
    pub init: Init,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self { steps: 32, max_iters: 5000, grad_tol: 1e-7, density_floor: 1e-8, init: Init::Hellinger }
    }
}

impl SolverOptions {
    pub fn with_steps(steps: usize) -> Self {
        Self { steps, ..Self::default() }
    }

    fn validate(&self) -> Result<()> {
        if self.steps == 0 || self.max_iters == 0 {
            return Err(Error::Domain("steps and max_iters must be positive".into()));
        }
        if !(self.grad_tol > 0.0) {
            return Err(Error::Domain(format!("grad_tol must be positive, got {}", self.grad_tol)));
        }
        if !(self.density_floor >= 0.0 && self.density_floor.is_finite()) {
            return Err(Error::Domain(format!("density floor must be nonnegative, got {}", self.density_floor)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GeodesicResult {
    #[serde(skip)]
    pub path: PathGrid,
    pub energy: EnergyBreakdown,
    /// `√(energy.total)`.
    pub distance: f64,
    pub iterations: usize,
    /// Preconditioned norm of the projected gradient step at the last iterate.
    pub grad_norm: f64,
    pub converged: bool,
    pub init_energy: f64,
    /// Action after each accepted step, starting with the initial path.
    pub history: Vec<f64>,
    /// Some interior density sits within 10δ of the floor.
    pub near_degenerate: bool,
}

/// Clamps interior increments to at least `δh` and rescales the excess so every
/// interior slice still ends at 1.
fn project(values: &mut Array2<f64>, delta: f64) {
    let (rows, cols) = values.dim();
    let n = cols - 1;
    let floor = delta / n as f64;
    for k in 1..rows - 1 {
        let mut row = values.row_mut(k);
        let clamped = (0..n).any(|j| row[j + 1] - row[j] < floor);
        if !clamped {
            continue;
        }
        let inc: Vec<f64> = (0..n).map(|j| (row[j + 1] - row[j]).max(floor) - floor).collect();
        let excess: f64 = inc.iter().sum();
        let room = 1.0 - floor * n as f64;
        let factor = if excess > 0.0 { room / excess } else { 0.0 };
        let mut acc = 0.0;
        row[0] = 0.0;
        for j in 0..n {
            acc += floor + inc[j] * factor;
            row[j + 1] = acc.min(1.0);
        }
        row[n] = 1.0;
    }
}

fn dot(a: &Array2<f64>, b: &Array2<f64>) -> f64 {
    Zip::from(a).and(b).fold(0.0, |acc, x, y| acc + x * y)
}

fn initial_path(phi0: &MonotoneMap, phi1: &MonotoneMap, opts: &SolverOptions) -> Result<PathGrid> {
    let tgrid = TimeGrid::unit(opts.steps)?;
    match &opts.init {
        Init::Hellinger => Ok(hellinger_path(phi0, phi1, opts.steps)?.path),
        Init::Linear => PathGrid::from_slices(
            tgrid,
            &tgrid
                .nodes()
                .iter()
                .map(|&t| {
                    let v = phi0.values().iter().zip(phi1.values()).map(|(a, b)| (1.0 - t) * a + t * b).collect();
                    MonotoneMap::new(v)
                })
                .collect::<Result<Vec<_>>>()?,
        ),
        Init::Given(p) => {
            if p.tgrid() != tgrid || p.sgrid() != phi0.grid() {
                return Err(Error::Shape("initial path does not match the requested grids".into()));
            }
            if p.endpoint_error(phi0, phi1)? > 1e-12 {
                return Err(Error::Domain("initial path does not join the endpoints".into()));
            }
            Ok(p.clone())
        }
    }
}

/// Minimizes the discrete action over paths from `φ₀` to `φ₁` on `opts.steps` time steps.
///
/// Returns the best path found; `converged` tells whether the gradient test passed
/// within `max_iters`.
pub fn solve_geodesic(phi0: &MonotoneMap, phi1: &MonotoneMap, opts: &SolverOptions) -> Result<GeodesicResult> {
    opts.validate()?;
    if phi0.grid() != phi1.grid() {
        return Err(Error::Shape("endpoints live on different grids".into()));
    }
    let init = initial_path(phi0, phi1, opts)?;
    let tgrid = init.tgrid();
    let sgrid = init.sgrid();
    let h = sgrid.h();
    let dt = tgrid.dt();
    let delta = opts.density_floor;

    let mut x = init.into_values();
    project(&mut x, delta);
    let pre = Preconditioner::new(tgrid.steps(), sgrid.cells(), h, dt)?;

    let mut e = action_raw(&x, h, dt);
    let init_energy = e;
    let mut g = gradient_raw(&x, h, dt);
    let mut history = vec![e];
    let mut alpha = 1.0;
    let mut iterations = 0;
    let mut grad_norm;
    let mut converged = false;

    loop {
        let mut d = pre.solve(&g);
        d.mapv_inplace(|v| -v);
        let mut probe = &x + &d;
        project(&mut probe, delta);
        grad_norm = (-dot(&g, &(&probe - &x))).max(0.0).sqrt();
        if grad_norm <= opts.grad_tol {
            converged = true;
            break;
        }
        if iterations >= opts.max_iters {
            break;
        }

        let mut step = alpha;
        let mut accepted = None;
        while step > 1e-14 {
            let mut trial = &x + &(&d * step);
            project(&mut trial, delta);
            let e_trial = action_raw(&trial, h, dt);
            let decrease = dot(&g, &(&trial - &x));
            if e_trial.is_finite() && e_trial <= e + ARMIJO * decrease && e_trial <= e {
                accepted = Some((trial, e_trial));
                break;
            }
            step *= BACKTRACK;
        }
        let Some((x_new, e_new)) = accepted else {
            break;
        };
        let g_new = gradient_raw(&x_new, h, dt);
        let s = &x_new - &x;
        let y = &g_new - &g;
        let sy = dot(&s, &y);
        let pyy = dot(&y, &pre.solve(&y));
        alpha = if sy > 0.0 && pyy > 0.0 { (sy / pyy).clamp(1e-8, 1e4) } else { (2.0 * step).min(1e4) };

        x = x_new;
        e = e_new;
        g = g_new;
        history.push(e);
        iterations += 1;
    }

    let near_degenerate = min_interior_density(&x, h).0 <= 10.0 * delta;
    let path = PathGrid::new(tgrid, sgrid, x)?;
    let energy = lagrangian_energy(&path, FisherRaoOptions::strict())?;
    Ok(GeodesicResult {
        distance: energy.total.sqrt(),
        path,
        energy,
        iterations,
        grad_norm,
        converged,
        init_energy,
        history,
        near_degenerate,
    })
}
