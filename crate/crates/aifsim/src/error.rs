use thiserror::Error;

/// Errors produced by model construction, simulation, and analysis.
#[derive(Debug, Clone, Error)]
pub enum Error {
    /// Dimension mismatches, out-of-range species indices, malformed networks.
    #[error("structural error: {0}")]
    Structure(String),

    /// The requested operation needs structure the network does not have
    /// (e.g. linearization of a bimolecular network).
    #[error("unsupported structure: {0}")]
    Unsupported(String),

    /// Invalid run configuration (empty grids, too few trajectories, ...).
    #[error("configuration error: {0}")]
    Config(String),

    /// Overflow, NaN, or a failed numerical routine.
    #[error("numeric error: {0}")]
    Numeric(String),

    /// The open loop has no unique stationary mean or a matrix is singular.
    #[error("analysis error: {0}")]
    Analysis(String),

    /// The moment-closure approximation is outside its validity domain.
    #[error("approximation outside validity domain: {0}")]
    Domain(String),

    /// A statistical estimate cannot be formed (e.g. zero variance).
    #[error("estimation error: {0}")]
    Estimation(String),
}

pub type Result<T> = std::result::Result<T, Error>;
