use thiserror::Error;

/// Errors raised by the simulator.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error(
        "coherent input (mean {mean}) truncated at {truncation} leaves tail mass {tail:e} above \
         tolerance {tolerance:e}; use a truncation of at least {required}"
    )]
    TruncationTooSmall {
        mean: f64,
        truncation: usize,
        tail: f64,
        tolerance: f64,
        required: usize,
    },

    #[error("cascade produced {count} branches, above the cap of {cap}; lower the input truncation or stage count")]
    BranchOverflow { count: usize, cap: usize },

    #[error("full Fock-space truncation {truncation} exceeds the limit {limit} ((t+1)^3 basis states)")]
    DimensionTooLarge { truncation: usize, limit: usize },

    #[error("step-halving error estimate {estimate:e} exceeds {tolerance:e} with {steps} steps; increase the step count")]
    IntegrationTolerance {
        estimate: f64,
        tolerance: f64,
        steps: usize,
    },
}

pub type Result<T> = std::result::Result<T, Error>;
