use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid instance: {0}")]
    InvalidInstance(String),

    #[error("invalid schedule: {0}")]
    InvalidSchedule(String),

    #[error("invalid topology: {0}")]
    InvalidTopology(String),

    #[error("mapping precondition violated: {0}")]
    MappingPrecondition(String),

    #[error(
        "state norm underflowed to zero after a work step with delta_beta = {delta_beta}; \
         use a finer beta grid so each step applies a smaller delta_beta"
    )]
    Underflow { delta_beta: f64 },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("config error: {0}")]
    Config(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T> = std::result::Result<T, Error>;
