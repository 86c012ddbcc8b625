use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("{func}: argument {value} outside the supported domain ({expected})")]
    Domain {
        func: &'static str,
        value: f64,
        expected: &'static str,
    },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("unsupported dimension n = {0} (supported: 1..=3)")]
    UnsupportedDimension(usize),

    #[error("quadrature did not converge: value {value:e}, error estimate {err_est:e} after {levels} levels")]
    NonConvergence {
        value: f64,
        err_est: f64,
        levels: usize,
    },

    #[error("integrand is not finite at x = {0}")]
    NonFinite(f64),

    #[error("truncation point {cut} lies beyond the allowed range {cap}")]
    CutBeyondCap { cut: f64, cap: f64 },

    #[error("integrand {measured:e} exceeds the decay envelope {bound:e} at the cut {cut}")]
    TailBound { cut: f64, measured: f64, bound: f64 },

    #[error("order k = {k} too small: need k > n + |gamma| - 1 = {min}")]
    OrderTooSmall { k: f64, min: f64 },

    #[error("mean profile covers radii up to {available}, but {required} is needed")]
    ProfileRange { required: f64, available: f64 },

    #[error("no mean profile supplied for stencil point {0:?}")]
    MissingProfile(Vec<f64>),

    #[error("window vanishes at t = {0}")]
    WindowVanishes(f64),

    #[error("decay certificate missing: {0}")]
    DecayMissing(&'static str),

    #[error("frequency point (tau = {tau}, xi = {xi}) is within {margin} of the light cone")]
    NearCone { tau: f64, xi: f64, margin: f64 },

    #[error("invalid parameter: {0}")]
    Invalid(String),
}
