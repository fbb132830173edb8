//! A cut-cell finite element solver for thin-plate bending.
//!
//! The plate occupies a smooth implicitly defined region embedded in a
//! structured background grid; cells meeting the region carry bicubic
//! Hermite elements, the boundary condition is enforced weakly through
//! symmetric consistency terms and a penalty, and ghost penalties on
//! derivative jumps across faces near the boundary keep the system well
//! conditioned no matter how the boundary cuts the grid.
//!
//! The crate is organized bottom-up:
//!
//! - [`domain`]: implicit domains with exact boundary frames.
//! - [`quadrature`]: Gauss rules on intervals, rectangles, and triangles.
//! - [`intersect`]: cell classification and boundary-perimeter intersection.
//! - [`mesh`]: the active background mesh and degree-of-freedom layout.
//! - [`boundary`]: the piecewise-cubic discrete boundary.
//! - [`decomp`]: curved triangulations of cut cells for volume quadrature.
//! - [`basis`]: bicubic Hermite shape functions.
//! - [`forms`]: weak forms and system assembly.
//! - [`solver`]: sparse symmetric linear algebra.
//! - [`pipeline`]: per-level geometry construction.
//! - [`verify`]: reference solution, error norms, and convergence studies.

pub mod basis;
pub mod boundary;
pub mod decomp;
pub mod domain;
pub mod error;
pub mod forms;
pub mod intersect;
pub mod mesh;
pub mod pipeline;
pub mod quadrature;
pub mod solver;
pub mod verify;

pub use boundary::BoundaryMode;
pub use domain::{Circle, Domain, Point, Rect, Vec2};
pub use error::{ConfigError, Error, GeometryError, Result, SolverError};
pub use forms::{Material, NitscheParams};
pub use verify::{ExactSolution, StudyConfig};
