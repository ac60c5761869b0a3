use thiserror::Error;

/// Errors raised by the library. Regime and hypothesis outcomes are not
/// errors; they are reported through tagged result types.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid field parameters: {0}")]
    InvalidParams(String),

    #[error("index {index} out of range for field of size {size}")]
    IndexOutOfRange { index: usize, size: usize },

    #[error("digit {digit} is not a residue mod {p}")]
    DigitOutOfRange { digit: u32, p: u32 },

    #[error("field parameters do not match: (p={p1}, n={n1}) vs (p={p2}, n={n2})")]
    ParamsMismatch { p1: u32, n1: u32, p2: u32, n2: u32 },

    #[error("expected a nonzero vector")]
    ZeroVector,

    #[error("subspaces are not complementary: {0}")]
    NotComplementary(String),

    #[error("function value {value} at index {index} lies outside [0, 1]")]
    ValueOutOfRange { index: usize, value: f64 },

    #[error("expected {expected} values, found {found}")]
    LengthMismatch { expected: usize, found: usize },

    #[error("rank {rank} out of range 1..={max}")]
    RankOutOfRange { rank: usize, max: usize },

    #[error("spectrum is inconsistent with a nonnegative real source: {0}")]
    NotNonnegativeSource(String),

    #[error("spectral sum has imaginary residue {residue:e} (scale {scale:e})")]
    ImaginaryResidue { residue: f64, scale: f64 },

    #[error("count {value} is not within 1e-6 of an integer")]
    NotIntegral { value: f64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("sampler exhausted its budget of {budget} draws")]
    BudgetExhausted { budget: usize },

    #[error("infeasible request: {0}")]
    Infeasible(String),

    #[error("format error: {0}")]
    Format(String),
}

pub type Result<T> = std::result::Result<T, Error>;
