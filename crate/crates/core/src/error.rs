use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("point {x} lies outside the support {support}")]
    OutsideSupport { x: f64, support: String },
    #[error("derivative of order {requested} requested, at most {available} available")]
    DerivativeOrder { requested: usize, available: usize },
    #[error("integral appears to diverge: {0}")]
    Divergent(String),
    #[error("s = {re}{im:+}i lies outside the Mellin strip")]
    OutsideMellinStrip { re: f64, im: f64 },
    #[error("oscillatory tail did not converge after {terms} terms (last partial sums {last:?})")]
    TailNotConverged { terms: usize, last: Vec<f64> },
    #[error("degenerate ensemble: {0}")]
    Degenerate(String),
    #[error("incompatible space: {0}")]
    IncompatibleSpace(String),
    #[error("support mismatch: {0}")]
    SupportMismatch(String),
    #[error("positivity violated: density {value} at {at:?}")]
    PositivityViolation { value: f64, at: Vec<f64> },
}

pub type Result<T> = std::result::Result<T, Error>;
