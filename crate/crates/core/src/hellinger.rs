//! Explicit interpolation between two maps through their square-root densities.
//!
//! With `r = √(∂ₓφ)`, `f_t = t r₁ + (1 - t) r₀` and `φ̃(t, x) = ∫₀ˣ f_t²`, the path
//! `φ(t) = φ̃(t) / (1 - t(1-t) d²)` stays in Mon₊, joins the endpoints exactly, and has
//! action at most `144 d²` where `d² = ∫ (r₁ - r₀)²`.

use ndarray::Array2;
use rayon::prelude::*;
use serde::Serialize;

use crate::energy::{lagrangian_energy, EnergyBreakdown, FisherRaoOptions};
use crate::error::{Error, Result};
use crate::grid::TimeGrid;
use crate::map::{clean_monotone_row, MonotoneMap};
use crate::path::PathGrid;

/// Constant of the energy bound.
pub const HELLINGER_CONSTANT: f64 = 144.0;

fn check_grids(a: &MonotoneMap, b: &MonotoneMap) -> Result<()> {
    if a.grid() != b.grid() {
        return Err(Error::Shape(format!(
            "maps have {} and {} cells",
            a.grid().cells(),
            b.grid().cells()
        )));
    }
    Ok(())
}

fn roots(map: &MonotoneMap) -> Vec<f64> {
    let h = map.grid().h();
    map.increments().iter().map(|d| (d.max(0.0) / h).sqrt()).collect()
}

/// `d² = Σ_j (√Δφ₁ - √Δφ₀)²`, the squared Hellinger distance of the cell densities.
pub fn hellinger_distance_sq(phi0: &MonotoneMap, phi1: &MonotoneMap) -> Result<f64> {
    check_grids(phi0, phi1)?;
    Ok(phi0
        .increments()
        .iter()
        .zip(phi1.increments())
        .map(|(a, b)| {
            let d = b.max(0.0).sqrt() - a.max(0.0).sqrt();
            d * d
        })
        .sum())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HellingerReport {
    pub d_squared: f64,
    #[serde(skip)]
    pub path: PathGrid,
    pub energy: EnergyBreakdown,
    /// `144 d²`.
    pub bound: f64,
    /// `max |∂ₜφ|` over nodes, by forward differences.
    pub max_velocity: f64,
    /// `max_k ∫ |∂ₜ √ρ|²` over time steps.
    pub max_root_rate: f64,
}

impl HellingerReport {
    pub fn within_bound(&self) -> bool {
        self.energy.total <= self.bound
    }

    /// `4d + 6d²`.
    pub fn velocity_bound(&self) -> f64 {
        let d = self.d_squared.sqrt();
        4.0 * d + 6.0 * self.d_squared
    }

    /// `4d² + 2d⁴`.
    pub fn root_rate_bound(&self) -> f64 {
        4.0 * self.d_squared + 2.0 * self.d_squared * self.d_squared
    }
}

/// The interpolation path on `m` unit-horizon steps, with its energy and bounds.
pub fn hellinger_path(phi0: &MonotoneMap, phi1: &MonotoneMap, m: usize) -> Result<HellingerReport> {
    check_grids(phi0, phi1)?;
    let sgrid = phi0.grid();
    let tgrid = TimeGrid::unit(m)?;
    let h = sgrid.h();
    let r0 = roots(phi0);
    let r1 = roots(phi1);
    let d2 = hellinger_distance_sq(phi0, phi1)?;

    let rows: Vec<Result<Vec<f64>>> = (0..=m)
        .into_par_iter()
        .map(|k| {
            if k == 0 || d2 == 0.0 {
                return Ok(phi0.values().to_vec());
            }
            if k == m {
                return Ok(phi1.values().to_vec());
            }
            let t = tgrid.node(k);
            let norm = 1.0 - t * (1.0 - t) * d2;
            let mut row = Vec::with_capacity(sgrid.len());
            let mut acc = 0.0;
            row.push(0.0);
            for (a, b) in r0.iter().zip(&r1) {
                let f = t * b + (1.0 - t) * a;
                acc += f * f * h;
                row.push(acc / norm);
            }
            clean_monotone_row(&mut row, k)?;
            Ok(row)
        })
        .collect();
    let mut values = Array2::zeros((tgrid.len(), sgrid.len()));
    for (k, row) in rows.into_iter().enumerate() {
        values.row_mut(k).assign(&ndarray::ArrayView1::from(&row?[..]));
    }
    let path = PathGrid::new(tgrid, sgrid, values)?;
    let energy = lagrangian_energy(&path, FisherRaoOptions::strict())?;

    let dt = tgrid.dt();
    let v = path.values();
    let mut max_velocity = 0.0f64;
    let mut max_root_rate = 0.0f64;
    for k in 0..m {
        for j in 0..sgrid.len() {
            max_velocity = max_velocity.max((v[[k + 1, j]] - v[[k, j]]).abs() / dt);
        }
        let rate: f64 = (0..sgrid.cells())
            .map(|j| {
                let a = ((v[[k, j + 1]] - v[[k, j]]).max(0.0) / h).sqrt();
                let b = ((v[[k + 1, j + 1]] - v[[k + 1, j]]).max(0.0) / h).sqrt();
                ((b - a) / dt).powi(2) * h
            })
            .sum();
        max_root_rate = max_root_rate.max(rate);
    }

    Ok(HellingerReport {
        d_squared: d2,
        path,
        energy,
        bound: HELLINGER_CONSTANT * d2,
        max_velocity,
        max_root_rate,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::SpaceGrid;
    use proptest::prelude::*;

    #[test]
    fn identical_maps() {
        let sg = SpaceGrid::new(32).unwrap();
        let a = MonotoneMap::from_fn(sg, |x| x * x).unwrap();
        assert_eq!(hellinger_distance_sq(&a, &a).unwrap(), 0.0);
        let r = hellinger_path(&a, &a, 8).unwrap();
        assert_eq!(r.energy.total, 0.0);
        for k in 0..=8 {
            assert!(r.path.slice(k).sup_distance(&a).unwrap() < 1e-12);
        }
    }

    #[test]
    fn id_to_square() {
        let sg = SpaceGrid::new(256).unwrap();
        let id = MonotoneMap::identity(sg);
        let sq = MonotoneMap::from_fn(sg, |x| x * x).unwrap();
        let exact = 2.0 - 4.0 * 2f64.sqrt() / 3.0;
        let d2 = hellinger_distance_sq(&id, &sq).unwrap();
        assert!((d2 - exact).abs() <= 0.005 * exact, "{d2} vs {exact}");
        let r = hellinger_path(&id, &sq, 64).unwrap();
        assert!(r.within_bound());
        assert!(r.max_velocity <= r.velocity_bound());
        assert!(r.max_root_rate <= r.root_rate_bound());
        assert_eq!(r.path.first(), id);
        assert_eq!(r.path.last(), sq);
        for k in 0..=64 {
            let row = r.path.row(k);
            assert_eq!(row[0], 0.0);
            assert_eq!(row[256], 1.0);
        }
    }

    #[test]
    fn rejects_mismatched_grids() {
        let a = MonotoneMap::identity(SpaceGrid::new(4).unwrap());
        let b = MonotoneMap::identity(SpaceGrid::new(8).unwrap());
        assert!(hellinger_distance_sq(&a, &b).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn bounds_on_random_pairs(
            a in proptest::collection::vec(0.0f64..1.0, 24),
            b in proptest::collection::vec(0.0f64..1.0, 24),
        ) {
            prop_assume!(a.iter().sum::<f64>() > 0.1 && b.iter().sum::<f64>() > 0.1);
            let p = MonotoneMap::from_densities(&a).unwrap();
            let q = MonotoneMap::from_densities(&b).unwrap();
            let d2 = hellinger_distance_sq(&p, &q).unwrap();
            prop_assert!(d2 <= 2.0 + 1e-12);
            prop_assert!((d2 - hellinger_distance_sq(&q, &p).unwrap()).abs() < 1e-15);
            let r = hellinger_path(&p, &q, 16).unwrap();
            prop_assert!(r.within_bound());
        }
    }
}
