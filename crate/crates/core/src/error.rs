use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("exponent {p} outside (0, 1]")]
    ExponentOutOfRange { p: f64 },

    #[error("seminorm weight {index} is {value}; weights must be finite and nonnegative")]
    InvalidWeight { index: usize, value: f64 },

    #[error("non-finite value in {what}")]
    NonFinite { what: &'static str },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("seminorm family is empty")]
    EmptyFamily,

    #[error("prefix of length {len} is too short; need at least {min}")]
    PrefixTooShort { len: usize, min: usize },

    #[error("index {index} out of range {min}..={max}")]
    IndexOutOfRange { index: u64, min: u64, max: u64 },

    #[error("enumeration over {terms} events exceeds the cap of {cap}")]
    EnumerationTooLarge { terms: usize, cap: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    /// Variant name, for diagnostics.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::ExponentOutOfRange { .. } => "ExponentOutOfRange",
            Error::InvalidWeight { .. } => "InvalidWeight",
            Error::NonFinite { .. } => "NonFinite",
            Error::DimensionMismatch { .. } => "DimensionMismatch",
            Error::EmptyFamily => "EmptyFamily",
            Error::PrefixTooShort { .. } => "PrefixTooShort",
            Error::IndexOutOfRange { .. } => "IndexOutOfRange",
            Error::EnumerationTooLarge { .. } => "EnumerationTooLarge",
            Error::InvalidArgument(_) => "InvalidArgument",
        }
    }
}
