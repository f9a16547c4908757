//! Correctly rounded floating-point summation.
//!
//! The crate computes the IEEE-754 binary64 value nearest to the exact sum of
//! a stream of doubles, independent of input order and thread count. The core
//! is a fixed-point superaccumulator split into signed digits wide enough
//! that digit additions cannot ripple: every carry is decided locally from a
//! threshold, so accumulators combine in parallel without carry chains.
//!
//! Entry points by scale:
//! - [`DenseAccumulator`] for in-memory streams,
//! - [`sum_tree`] for multi-threaded reduction,
//! - [`sum_truncated`] for an adaptive engine that keeps only the most
//!   significant digits and retries until the rounding is provably right,
//! - [`sum_external`] for datasets larger than memory,
//! - [`run_job`] for a map/shuffle/reduce round over partitions.

pub mod accum;
pub mod bench;
pub mod datasets;
pub mod error;
pub mod extmem;
pub mod mapreduce;
pub mod oracle;
pub mod parallel;
pub mod sparse;

mod rng;
#[cfg(test)]
mod testutil;

pub use accum::{
    add_accumulators, decompose, nonfinite_shortcut, DenseAccumulator, Digit, RadixConfig,
    RoundDirection, RoundedSum,
};
pub use bench::{
    run_algo, run_algo_output, run_grid, to_csv, Algo, AlgoOpts, AlgoOutput, BenchReport,
    GridConfig,
};
pub use datasets::{generate, DatasetKind, DatasetSpec};
pub use error::{DecodeError, Result, SumError};
pub use extmem::{sum_external, sum_external_with_stats, sum_inmemory_stream, ExtmemStats, MemoryBudget};
pub use mapreduce::{
    decode_accumulator, encode_accumulator, run_job, run_job_with_stats, JobConfig, JobStats,
    ReducerAssignment,
};
pub use oracle::{compensated_sum, naive_sum, oracle_sum, window_fold_sum, ExactFixedPoint};
pub use parallel::{
    condition_number, stopping_condition, sum_tree, sum_truncated, sum_truncated_with,
    ConditionReport, ReductionPlan, StopReason, StoppingMode, TruncatedRunReport,
};
pub use sparse::{merge_add, SparseAccumulator};
