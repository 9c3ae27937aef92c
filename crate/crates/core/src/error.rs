use thiserror::Error;

/// Errors raised by the numerical routines of this crate.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("{what} did not converge within {iterations} iterations")]
    Convergence { what: &'static str, iterations: usize },

    #[error("resource cap exceeded: {what} = {requested} > cap {cap}")]
    Resource {
        what: &'static str,
        requested: usize,
        cap: usize,
    },

    #[error("invalid measure: {0}")]
    InvalidMeasure(String),

    #[error("unsupported input: {0}")]
    Unsupported(String),

    #[error("Gram matrix is numerically singular (condition estimate {condition:.3e})")]
    Singular { condition: f64 },

    #[error("band resolution failure: {0}")]
    Resolution(String),

    #[error("lambda = {lambda} lies inside band {band} = [{lo}, {hi}]")]
    InsideBand {
        lambda: f64,
        band: usize,
        lo: f64,
        hi: f64,
    },

    #[error("degenerate fit: {0}")]
    DegenerateFit(String),

    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;
