//! Energy functionals of the H¹ right-invariant metric.
//!
//! The metric weights the derivative term by [`DERIVATIVE_WEIGHT`] = 1/4:
//! `∫∫ v² + ¼ (∂ₓv)²` in Eulerian form, and
//! `∫∫ (∂ₜφ)² ∂ₓφ + ¼ (∂ₜₓφ)² / ∂ₓφ` in Lagrangian form.
//!
//! Discrete Lagrangian quantities live on space-time cells `[t_k, t_{k+1}] × [x_j, x_{j+1}]`:
//!
//! * `ρ₀, ρ₁` are the cell densities `Δₓφ / h` at the two time nodes,
//! * `∂ₜφ` is the time difference of the cell-averaged value `(φ_j + φ_{j+1}) / 2`,
//! * `∂ₜₓφ = (ρ₁ - ρ₀) / Δt` is the mixed difference,
//! * the kinetic weight is `(ρ₀ + ρ₁) / 2` and the Fisher-Rao denominator is
//!   `((√ρ₀ + √ρ₁) / 2)²`.
//!
//! With these choices the square-root lift `z = √ρ e^{iφ}` reproduces the action
//! exactly: `|∂ₜz|² = (∂ₜ|z|)² + |z|² (∂ₜ arg z)²` splits into the Fisher-Rao and the
//! kinetic parts cell by cell.

mod jump;

pub(crate) use jump::jump_cells;
pub use jump::{e_sh_closed, e_sh_metric, jump_energy, relaxed_energy, sinh_interpolant, JumpFormula};

use ndarray::Array2;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::path::{PathGrid, VelocityField};

/// Weight of the derivative term in the metric.
pub const DERIVATIVE_WEIGHT: f64 = 0.25;

/// Energy split into its kinetic, Fisher-Rao and jump contributions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnergyBreakdown {
    pub kinetic: f64,
    pub fisher_rao: f64,
    pub jump: f64,
    pub total: f64,
}

impl EnergyBreakdown {
    pub fn new(kinetic: f64, fisher_rao: f64, jump: f64) -> Self {
        Self { kinetic, fisher_rao, jump, total: kinetic + fisher_rao + jump }
    }

    pub fn zero() -> Self {
        Self::new(0.0, 0.0, 0.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FisherRaoMode {
    Strict,
    Floored,
}

/// How the Fisher-Rao integrand treats vanishing densities.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FisherRaoOptions {
    floor: f64,
    mode: FisherRaoMode,
}

impl FisherRaoOptions {
    pub const DEFAULT_FLOOR: f64 = 1e-10;

    pub fn strict() -> Self {
        Self { floor: 0.0, mode: FisherRaoMode::Strict }
    }

    pub fn floored(floor: f64) -> Result<Self> {
        if !(floor.is_finite() && floor >= 0.0) {
            return Err(Error::Domain(format!("Fisher-Rao floor must be nonnegative, got {floor}")));
        }
        Ok(Self { floor, mode: FisherRaoMode::Floored })
    }

    pub fn floor(&self) -> f64 {
        self.floor
    }

    pub fn mode(&self) -> FisherRaoMode {
        self.mode
    }
}

impl Default for FisherRaoOptions {
    fn default() -> Self {
        Self::strict()
    }
}

/// The one-homogeneous integrand `r(a, b) = ¼ b² / a`, extended by 0 at the origin
/// and `+∞` elsewhere off `a > 0`.
pub fn fr_integrand(a: f64, b: f64, opts: FisherRaoOptions) -> f64 {
    let a = match opts.mode {
        FisherRaoMode::Strict => a,
        FisherRaoMode::Floored => a.max(opts.floor),
    };
    if a > 0.0 {
        DERIVATIVE_WEIGHT * b * b / a
    } else if a == 0.0 && b == 0.0 {
        0.0
    } else {
        f64::INFINITY
    }
}

/// `∫₀ᵀ ∫₀¹ v² + ¼ (∂ₓv)²` by the trapezoidal rule in both variables.
pub fn eulerian_energy(v: &VelocityField) -> f64 {
    let h = v.sgrid().h();
    let dt = v.tgrid().dt();
    let per_slice: Vec<f64> = v
        .values()
        .rows()
        .into_iter()
        .map(|row| slice_h1_energy(row.as_slice().unwrap(), h))
        .collect();
    trapezoid(&per_slice, dt)
}

/// `∫₀¹ v² + ¼ (∂ₓv)²` of one nodal profile (trapezoid, second-order differences).
pub fn slice_h1_energy(v: &[f64], h: f64) -> f64 {
    let dx = derivative(v, h);
    let integrand: Vec<f64> =
        v.iter().zip(&dx).map(|(a, d)| a * a + DERIVATIVE_WEIGHT * d * d).collect();
    trapezoid(&integrand, h)
}

/// Second-order nodal derivative: centered inside, one-sided at the ends.
pub(crate) fn derivative(v: &[f64], h: f64) -> Vec<f64> {
    crate::path::time_derivative(v, h)
}

pub(crate) fn trapezoid(values: &[f64], step: f64) -> f64 {
    match values.len() {
        0 | 1 => 0.0,
        len => {
            let inner: f64 = values[1..len - 1].iter().sum();
            step * (inner + 0.5 * (values[0] + values[len - 1]))
        }
    }
}

/// The three discrete derivatives of one space-time cell.
#[derive(Debug, Clone, Copy)]
pub(crate) struct CellStencil {
    pub rho0: f64,
    pub rho1: f64,
    /// `∂ₜφ` of the cell average.
    pub velocity: f64,
}

impl CellStencil {
    /// `a0, a1` are `φ(t_k, x_j), φ(t_k, x_{j+1})`, `b0, b1` the same at `t_{k+1}`.
    #[inline]
    pub fn new(a0: f64, a1: f64, b0: f64, b1: f64, h: f64, dt: f64) -> Self {
        Self {
            rho0: (a1 - a0) / h,
            rho1: (b1 - b0) / h,
            velocity: ((b0 + b1) - (a0 + a1)) / (2.0 * dt),
        }
    }

    #[inline]
    pub fn kinetic(&self) -> f64 {
        self.velocity * self.velocity * 0.5 * (self.rho0 + self.rho1)
    }

    /// Mixed derivative and the Fisher-Rao denominator.
    #[inline]
    pub fn fr_args(&self, dt: f64) -> (f64, f64) {
        let r = 0.5 * (self.rho0.max(0.0).sqrt() + self.rho1.max(0.0).sqrt());
        (r * r, (self.rho1 - self.rho0) / dt)
    }
}

/// Kinetic and Fisher-Rao sums of one time step, skipping the cells in `skip`.
pub(crate) fn step_energy(
    lo: &[f64],
    hi: &[f64],
    h: f64,
    dt: f64,
    opts: FisherRaoOptions,
    skip: &[usize],
    step: usize,
) -> Result<(f64, f64)> {
    let mut kin = 0.0;
    let mut fr = 0.0;
    for j in 0..lo.len() - 1 {
        if skip.contains(&j) {
            continue;
        }
        let c = CellStencil::new(lo[j], lo[j + 1], hi[j], hi[j + 1], h, dt);
        kin += c.kinetic();
        let (a, b) = c.fr_args(dt);
        let r = fr_integrand(a, b, opts);
        if r.is_infinite() {
            return Err(Error::DegenerateDensity { step, cell: j, density: a });
        }
        fr += r;
    }
    Ok((kin * h * dt, fr * h * dt))
}

pub(crate) fn lagrangian_parts(path: &PathGrid, opts: FisherRaoOptions, skip: &[usize]) -> Result<(f64, f64)> {
    let m = path.tgrid().steps();
    let h = path.sgrid().h();
    let dt = path.tgrid().dt();
    if dt == 0.0 {
        return Ok((0.0, 0.0));
    }
    let values = path.values();
    let per_step: Vec<Result<(f64, f64)>> = (0..m)
        .into_par_iter()
        .map(|k| {
            let lo = values.row(k);
            let hi = values.row(k + 1);
            step_energy(lo.as_slice().unwrap(), hi.as_slice().unwrap(), h, dt, opts, skip, k)
        })
        .collect();
    // fixed-order reduction
    let mut kin = 0.0;
    let mut fr = 0.0;
    for r in per_step {
        let (a, b) = r?;
        kin += a;
        fr += b;
    }
    Ok((kin, fr))
}

/// Lagrangian action `∫∫ (∂ₜφ)² ∂ₓφ + ¼ (∂ₜₓφ)² / ∂ₓφ` of a continuous path.
pub fn lagrangian_energy(path: &PathGrid, opts: FisherRaoOptions) -> Result<EnergyBreakdown> {
    let (kin, fr) = lagrangian_parts(path, opts, &[])?;
    Ok(EnergyBreakdown::new(kin, fr, 0.0))
}

/// Cell-centred lift `z = √(Δₓφ / h) · exp(i · (φ_j + φ_{j+1}) / 2)`, shape `(m + 1, n)`.
pub fn sqrt_lift(path: &PathGrid) -> Array2<Complex64> {
    let h = path.sgrid().h();
    let values = path.values();
    let (rows, cols) = values.dim();
    Array2::from_shape_fn((rows, cols - 1), |(k, j)| {
        let rho = ((values[[k, j + 1]] - values[[k, j]]) / h).max(0.0);
        let theta = 0.5 * (values[[k, j]] + values[[k, j + 1]]);
        Complex64::from_polar(rho.sqrt(), theta)
    })
}

/// `∫∫ |∂ₜz|²` of the lift, split as `(modulus part, phase part)`.
///
/// The modulus part equals the Fisher-Rao term and the phase part the kinetic term of
/// [`lagrangian_energy`]. Phases of vanishing cells are lost, so the identity needs
/// positive densities.
pub fn sqrt_lift_energy_parts(path: &PathGrid) -> (f64, f64) {
    let z = sqrt_lift(path);
    let h = path.sgrid().h();
    let dt = path.tgrid().dt();
    if dt == 0.0 {
        return (0.0, 0.0);
    }
    let m = path.tgrid().steps();
    let per_step: Vec<(f64, f64)> = (0..m)
        .into_par_iter()
        .map(|k| {
            let mut modulus = 0.0;
            let mut phase = 0.0;
            for (z0, z1) in z.row(k).iter().zip(z.row(k + 1).iter()) {
                let dr = (z1.norm() - z0.norm()) / dt;
                let dtheta = (z1.arg() - z0.arg()) / dt;
                modulus += dr * dr;
                phase += 0.5 * (z0.norm_sqr() + z1.norm_sqr()) * dtheta * dtheta;
            }
            (modulus * h * dt, phase * h * dt)
        })
        .collect();
    per_step.iter().fold((0.0, 0.0), |(a, b), (c, d)| (a + c, b + d))
}

/// `∫∫ |∂ₜz|²` of the square-root lift.
pub fn sqrt_lift_energy(path: &PathGrid) -> f64 {
    let (a, b) = sqrt_lift_energy_parts(path);
    a + b
}
