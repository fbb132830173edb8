//! Error taxonomy for the cut-cell pipeline.
//!
//! Geometry errors signal configurations the cut model cannot represent
//! (the fix is almost always a finer background grid); solver errors signal
//! loss of positive definiteness or iteration failure.

use thiserror::Error;

/// Failures while building cut geometry.
#[derive(Debug, Error)]
pub enum GeometryError {
    /// The boundary crosses a cell perimeter more than twice, violating the
    /// one-segment-per-cell model.  Refine the background grid.
    #[error("ambiguous cut in cell ({ix},{iy}): {count} boundary-perimeter intersections (expected 2)")]
    AmbiguousCut { ix: u32, iy: u32, count: usize },

    /// Root finding on a cell edge failed to reach the target residual.
    #[error("edge root finding did not converge (|distance| = {residual:.3e} after {iters} iterations)")]
    RootNoConvergence { residual: f64, iters: usize },

    /// A fan triangle of a cut-cell decomposition collapsed.
    #[error("degenerate triangle in cell ({ix},{iy}): area {area:.3e}")]
    DegenerateTriangle { ix: u32, iy: u32, area: f64 },

    /// The isoparametric map of a curved triangle folds over.
    #[error("non-positive curved-triangle Jacobian in cell ({ix},{iy})")]
    NonPositiveJacobian { ix: u32, iy: u32 },

    /// Boundary segments do not chain into a single closed loop.
    #[error("discrete boundary is not a single closed loop ({n_chained} of {n_total} segments chained)")]
    OpenLoop { n_chained: usize, n_total: usize },

    /// A dropped sliver cell has no active neighbor to host its boundary segment.
    #[error("sliver cell ({ix},{iy}) has no active neighbor to host its boundary segment")]
    OrphanSliver { ix: u32, iy: u32 },

    /// The active mesh has no fully interior cell, so the stabilized cut
    /// formulation is not meaningful.  The grid is too coarse.
    #[error("active mesh has no fully interior cell at h = {h}; refine the grid")]
    NoInteriorCell { h: f64 },
}

/// Failures in the linear algebra layer.
#[derive(Debug, Error)]
pub enum SolverError {
    /// A Cholesky pivot became non-positive: the assembled operator is not
    /// positive definite (stabilization or penalty too weak, or none at all).
    #[error("matrix is not positive definite (pivot {index} = {pivot:.3e})")]
    NotPositiveDefinite { index: usize, pivot: f64 },

    /// The iterative solver exhausted its iteration budget.
    #[error("conjugate gradients stalled at relative residual {residual:.3e} after {iters} iterations")]
    IterationLimit { residual: f64, iters: usize },

    /// Power iteration for the condition estimate did not settle.
    #[error("condition estimate did not converge")]
    EstimateNoConvergence,
}

/// Configuration errors (CLI / config file).
#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("unknown configuration key '{key}'")]
    UnknownKey { key: String },

    #[error("invalid value for '{key}': {message}")]
    InvalidValue { key: String, message: String },

    #[error("malformed configuration line {line}: '{text}'")]
    MalformedLine { line: usize, text: String },

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

/// Crate-level error.
#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Geometry(#[from] GeometryError),

    #[error(transparent)]
    Solver(#[from] SolverError),

    #[error(transparent)]
    Config(#[from] ConfigError),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
