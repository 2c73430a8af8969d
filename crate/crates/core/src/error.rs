use thiserror::Error;

/// Errors raised by the numerical core.
///
/// Values are widened to `f64` so one error type serves every scalar.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("expected {expected} samples, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },

    #[error("sampled functions live on different grids")]
    GridMismatch,

    #[error("non-finite value {value} at node {index}")]
    NonFinite { index: usize, value: f64 },

    #[error("operation needs {0}")]
    MaskedInput(&'static str),

    #[error("function must be strictly positive, found {value} at node {index}")]
    NonPositive { index: usize, value: f64 },

    #[error("wave function is not normalized (norm {norm})")]
    Unnormalized { norm: f64 },

    #[error(
        "lambda = {lambda} lies in the singular band [{lower}, {upper}]; \
         the endpoints are the Abraham-Moses (lambda = -1) and Pursey (lambda = 0) limits"
    )]
    SingularBand { lambda: f64, lower: f64, upper: f64 },

    #[error(
        "lambda = {lambda} is numerically singular: min |I0 + lambda| = {min_denominator} on the grid \
         (too close to the Abraham-Moses/Pursey limits of the band [{lower}, {upper}])"
    )]
    NearSingular { lambda: f64, min_denominator: f64, lower: f64, upper: f64 },

    #[error("lambda = {lambda} makes the order-{order} logarithm argument cross zero on the grid")]
    ZeroCrossing { order: usize, lambda: f64 },

    #[error("eigenvalue computation did not converge: {0}")]
    NotConverged(String),

    #[error("lowest eigenvalues are degenerate (gap {gap})")]
    Degenerate { gap: f64 },

    #[error("ground state changes sign at node {index}")]
    Nodal { index: usize },

    #[error("factorization energy {energy} must lie below the ground-state energy {ground}")]
    EnergyNotBelowGround { energy: f64, ground: f64 },

    #[error("requested {requested} levels, operator has {available}")]
    LevelCount { requested: usize, available: usize },

    #[error("numerical overflow that rescaling could not absorb at node {index}")]
    Overflow { index: usize },

    #[error("potential is not short-range: |V| = {value} at the grid edge exceeds {tol}")]
    NotShortRange { value: f64, tol: f64 },

    #[error("scattering integration unreliable: unitarity defect {defect} exceeds {limit}")]
    Unitarity { defect: f64, limit: f64 },

    #[error("wavenumber must be positive, got {0}")]
    Wavenumber(f64),

    #[error("parameters must be pairwise distinct: {0}")]
    CoincidentParameters(String),

    #[error("degenerate Riccati triple: {0}")]
    DegenerateTriple(String),

    #[error("degenerate cross-ratio configuration: every node is masked")]
    DegenerateConfiguration,

    #[error("superpotentials do not share a fermionic partner (deviation {deviation} > {tol})")]
    PartnerMismatch { deviation: f64, tol: f64 },

    #[error("lambda = {lambda}: {source}")]
    AtLambda { lambda: f64, source: Box<Error> },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

impl Error {
    /// Attaches the deformation parameter that triggered the failure.
    pub fn at_lambda(self, lambda: f64) -> Self {
        match self {
            e @ (Error::AtLambda { .. }
            | Error::SingularBand { .. }
            | Error::NearSingular { .. }
            | Error::ZeroCrossing { .. }) => e,
            e => Error::AtLambda { lambda, source: Box::new(e) },
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
