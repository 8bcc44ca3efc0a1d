use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("tail exponent tau = {0} is outside the open interval (3, 4)")]
    InvalidTau(f64),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("window factor 1 + lambda n^-eta = {factor} is negative (lambda = {lambda}, n = {n})")]
    NegativeWindow { factor: f64, lambda: f64, n: usize },
    #[error("quantile is invalid at u = {u}: {reason}")]
    InvalidQuantile { u: f64, reason: &'static str },
    #[error("empty input: {0}")]
    Empty(&'static str),
    #[error("n = {n} exceeds the dense generation guard {guard}")]
    DenseGuard { n: usize, guard: usize },
    #[error("coalescent threshold {0} at t = {1} is negative")]
    NegativeThreshold(f64, f64),
    #[error("residual weight outside the forbidden set is zero")]
    ZeroResidualWeight,
    #[error("vertex {vertex} is outside 1..={n}")]
    VertexOutOfRange { vertex: usize, n: usize },
    #[error("branching process is not subcritical: nu_n = {0}")]
    NotSubcritical(f64),
    #[error("clock set carries no Poisson streams")]
    MissingStreams,
    #[error("unknown experiment '{0}'")]
    UnknownExperiment(String),
    #[error("invalid config: {0}")]
    Config(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
