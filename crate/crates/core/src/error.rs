use thiserror::Error;

/// Errors surfaced by the library. CLI exit codes map `Config` to 2 and
/// `Resource`/`BandLimit` to 3.
#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("resource limit exceeded: {0}")]
    Resource(String),

    #[error("grid band limit {actual} too small, need at least {required}")]
    BandLimit { required: u32, actual: u32 },

    #[error("iteration failed to converge: {0}")]
    Convergence(String),

    #[error("need at least {needed} samples, got {got}")]
    TooFewSamples { needed: usize, got: usize },

    #[error("invalid configuration: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, Error>;
