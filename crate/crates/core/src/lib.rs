//! Boundary-corrected Scott-Vogelius finite elements for the Stokes problem
//! on unfitted meshes.
//!
//! A Cartesian background mesh is clipped to the triangles inside a
//! level-set domain and refined by the Clough-Tocher split. Velocity is
//! continuous P2, pressure discontinuous P1 and the normal boundary
//! condition is imposed by a P2 Lagrange multiplier on the mesh boundary,
//! with a second-order Taylor transfer of the boundary data from the true
//! boundary. The discrete velocity is exactly divergence free.

// Index loops mirror the element formulas; `!(x > 0.0)` rejects NaN.
#![allow(clippy::needless_range_loop, clippy::neg_cmp_op_on_partial_ord, clippy::excessive_precision)]

pub mod assembly;
pub mod error;
pub mod fem;
pub mod geometry;
pub mod mesh;
pub mod solver;
pub mod verify;

pub use assembly::{Discretization, DiscretizationOptions, Parallelism, PressureGauge, SaddleSystem, StokesData};
pub use error::{Error, Result};
pub use geometry::LevelSetDomain;
pub use solver::{solve_direct, SolutionFields, StokesSolver};
pub use verify::{ErrorReport, ManufacturedCase, RateTable};
