//! Numerical toolkit for the H¹ right-invariant metric on nondecreasing maps of `[0, 1]`.
//!
//! Paths of maps, their Eulerian and Lagrangian energies, relaxed energies with jumps,
//! Hellinger interpolation, a direct geodesic solver, Camassa-Holm evolution and the
//! pressure-based minimality certificate.

pub mod ch;
pub mod energy;
pub mod error;
pub mod flow;
pub mod grid;
pub mod hellinger;
pub mod io;
pub mod map;
pub mod path;
pub mod solver;
pub mod tridiag;

/// Library version, recorded in run manifests.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

pub use energy::{
    e_sh_closed, e_sh_metric, eulerian_energy, fr_integrand, jump_energy, lagrangian_energy, relaxed_energy,
    sqrt_lift, sqrt_lift_energy, EnergyBreakdown, FisherRaoMode, FisherRaoOptions, JumpFormula,
};
pub use error::{Error, Result};
pub use grid::{SpaceGrid, TimeGrid};
pub use map::{validate_monotone, MonotoneMap};
pub use path::{JumpRecord, PathGrid, VelocityField};
