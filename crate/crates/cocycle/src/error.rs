//! Error types shared across the crate.

use num_complex::Complex64;
use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("matrix must be square, got {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("matrix tagged real has imaginary entries (max |Im| = {max_imag:.3e})")]
    NotReal { max_imag: f64 },

    #[error("matrix is numerically singular (smallest singular value {sigma_min:.3e})")]
    Singular { sigma_min: f64 },

    #[error("eigenvalue {eigenvalue} lies on the closed negative real axis; outside principal branch")]
    OutsidePrincipalBranch { eigenvalue: Complex64 },

    #[error("iteration failed to converge after {iters} steps (residual {residual:.3e})")]
    NoConvergence { iters: usize, residual: f64 },

    #[error("not a cocycle: residual {residual:.3e} exceeds tolerance {tol:.3e}")]
    NotACocycle { residual: f64, tol: f64 },

    #[error("group table is not associative at ({i}, {j}, {k})")]
    NotAssociative { i: usize, j: usize, k: usize },

    #[error("group table has no two-sided identity")]
    MissingIdentity,

    #[error("group element {index} has no inverse")]
    MissingInverse { index: usize },

    #[error("not a group action: {0}")]
    NotAnAction(String),

    #[error("not a G-module: {0}")]
    NotAModule(String),

    #[error("fails {kind} membership (residual {residual:.3e})")]
    NotAMember { kind: String, residual: f64 },

    #[error(
        "no local convergence after {iters} Newton steps (residual {residual:.3e}); \
         the inputs may not be cohomologous, or lie outside the local neighborhood"
    )]
    NoLocalConvergence { iters: usize, residual: f64 },

    #[error("inputs are {distance:.3e} apart, beyond the locality radius {radius:.3e}")]
    OutsideLocalityRadius { distance: f64, radius: f64 },

    #[error("inputs lie in different components: the coboundary classes differ")]
    DifferentComponents,

    #[error("relative retraction failed in {stage}: {source}")]
    RelativeStage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },

    #[error("structure constants are not associative: ({i}, {j}, {k})")]
    NotAssociativeAlgebra { i: usize, j: usize, k: usize },

    #[error("unit axiom fails: {0}")]
    BadUnit(String),

    #[error("star structure invalid: {0}")]
    BadStar(String),

    #[error("star structure required but absent: {0}")]
    MissingStar(String),

    #[error("invalid bimodule: {0}")]
    BadBimodule(String),

    #[error("no separability data: {0}")]
    NotKnownSeparable(String),

    #[error("block decomposition does not reproduce the structure constants: {0}")]
    BadBlocks(String),

    #[error("not an algebra morphism: {0}")]
    NotAMorphism(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("integer arithmetic overflow in lattice computation")]
    LatticeOverflow,

    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),

    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),
}
