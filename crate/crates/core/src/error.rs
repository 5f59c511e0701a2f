use alloc::string::String;

/// Errors raised by field construction, sampling, density evaluation and the
/// statistical checks.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid domain: {0}")]
    InvalidDomain(String),
    #[error("rate field must be strictly positive, got {value} at cell {cell}")]
    NonPositiveRate { cell: usize, value: f64 },
    #[error("field is not finite at cell {cell}")]
    InvalidField { cell: usize },
    #[error("grid field has {got} values but the domain has {expected} cells")]
    GridSize { expected: usize, got: usize },
    #[error("noise law rejected: {0}")]
    NoiseLaw(String),
    #[error("function has no points")]
    EmptyFunction,
    #[error("record sampler gave up after {cap} points ({found} values kept, partial sum {partial_sum})")]
    IterationCap {
        cap: usize,
        found: usize,
        partial_sum: f64,
    },
    #[error("quadrature did not reach tolerance (estimate {estimate})")]
    Quadrature { estimate: f64 },
    #[error("density integrates to {total}, expected 1")]
    Normalization { total: f64 },
    #[error("argument out of range: {0}")]
    OutOfRange(String),
    #[error("need at least {needed} samples, got {got}")]
    SampleSize { needed: usize, got: usize },
    #[error("empty input")]
    EmptyInput,
    #[error("unsupported: {0}")]
    Unsupported(String),
}

pub type Result<T> = core::result::Result<T, Error>;
