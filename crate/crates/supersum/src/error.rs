//! Error types shared across the crate.

use std::path::PathBuf;

pub type Result<T> = std::result::Result<T, SumError>;

#[derive(Debug, thiserror::Error)]
pub enum SumError {
    /// Input contained a NaN or infinity and the caller did not opt into
    /// IEEE short-circuit semantics.
    #[error("non-finite input value {0}")]
    NonFiniteInput(f64),

    /// Two accumulators with different digit widths were combined.
    #[error("radix config mismatch: digit width {left} vs {right}")]
    ConfigMismatch { left: u32, right: u32 },

    /// A carry propagated past the most significant digit. Cannot happen for
    /// sums of fewer than 2^63 finite binary64 values; reaching it means the
    /// accumulator was fed out-of-contract data.
    #[error("carry out of the most significant digit (accumulator capacity exceeded)")]
    CapacityOverflow,

    #[error("digit index {index} outside the accumulator range")]
    IndexOutOfRange { index: i32 },

    /// An operation that needs at least one digit was applied to an
    /// accumulator with none.
    #[error("operation requires a non-empty accumulator")]
    EmptyAccumulator,

    #[error("invalid parameter: {0}")]
    InvalidSpec(String),

    /// External-memory budget cannot hold even two sort blocks.
    #[error("memory budget too small: need at least {required} bytes, got {given}")]
    BudgetTooSmall { required: u64, given: u64 },

    #[error("I/O failure on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("wire decode failed: {0}")]
    Decode(#[from] DecodeError),
}

/// Failures while decoding a serialized accumulator.
#[derive(Debug, PartialEq, Eq, thiserror::Error)]
pub enum DecodeError {
    #[error("bad magic bytes")]
    BadMagic,
    #[error("unsupported format version {0}")]
    BadVersion(u8),
    #[error("digit width {found} does not match expected {expected}")]
    WidthMismatch { expected: u32, found: u32 },
    #[error("byte length does not match the declared record count")]
    Truncated,
    #[error("digit indices not strictly ascending")]
    UnsortedIndices,
}

impl SumError {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        SumError::Io { path: path.into(), source }
    }
}
