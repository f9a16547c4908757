//! Multi-threaded reduction engines and exact conditioning analysis.
//!
//! Both engines reduce over a binary tree whose shape depends only on the
//! input length and the leaf chunk size, never on the worker count, so the
//! result bits are identical no matter how the work is scheduled. The carry
//! discipline makes the combines associative in exact value; the fixed shape
//! makes them reproducible digit for digit.

use crate::accum::{
    add_accumulators, ceil_log2, pow2, split_finite, DenseAccumulator, Digit, RadixConfig,
    RoundedSum,
};
use crate::error::{Result, SumError};
use crate::oracle::{dense_scaled, log2_big_ratio, round_big_ratio, round_scaled};
use crate::sparse::{merge_add, SparseAccumulator};
use num_traits::Zero;

/// Shape and scheduling knobs for the tree engines.
#[derive(Clone, Debug)]
pub struct ReductionPlan {
    workers: usize,
    chunk: usize,
}

impl ReductionPlan {
    /// One leaf per `chunk` consecutive inputs, workers = available cores.
    pub fn new() -> Self {
        ReductionPlan {
            workers: std::thread::available_parallelism().map_or(1, |p| p.get()),
            chunk: 4096,
        }
    }

    /// Worker thread count. Changes scheduling only, never the result.
    pub fn with_workers(mut self, workers: usize) -> Self {
        self.workers = workers.max(1);
        self
    }

    /// Leaf size in elements. Part of the tree shape: two runs agree bit for
    /// bit only when their chunk sizes agree.
    pub fn with_chunk(mut self, chunk: usize) -> Self {
        self.chunk = chunk.max(1);
        self
    }

    pub fn workers(&self) -> usize {
        self.workers
    }

    pub fn chunk(&self) -> usize {
        self.chunk
    }
}

impl Default for ReductionPlan {
    fn default() -> Self {
        ReductionPlan::new()
    }
}

/// Recursive chunk-range reduction with a schedule-independent shape: the
/// range always splits at its chunk-count midpoint.
fn reduce_chunks<T: Send>(
    xs: &[f64],
    chunk: usize,
    lo: usize,
    hi: usize,
    parallel: bool,
    leaf: &(impl Fn(&[f64]) -> Result<T> + Sync),
    combine: &(impl Fn(&T, &T) -> Result<T> + Sync),
) -> Result<T> {
    debug_assert!(lo < hi);
    if hi - lo == 1 {
        let start = lo * chunk;
        let end = (start + chunk).min(xs.len());
        return leaf(&xs[start..end]);
    }
    let mid = lo + (hi - lo) / 2;
    let (left, right) = if parallel {
        rayon::join(
            || reduce_chunks(xs, chunk, lo, mid, true, leaf, combine),
            || reduce_chunks(xs, chunk, mid, hi, true, leaf, combine),
        )
    } else {
        (
            reduce_chunks(xs, chunk, lo, mid, false, leaf, combine),
            reduce_chunks(xs, chunk, mid, hi, false, leaf, combine),
        )
    };
    combine(&left?, &right?)
}

fn run_reduction<T: Send>(
    xs: &[f64],
    plan: &ReductionPlan,
    leaf: impl Fn(&[f64]) -> Result<T> + Sync,
    combine: impl Fn(&T, &T) -> Result<T> + Sync,
) -> Result<T> {
    let chunks = xs.len().div_ceil(plan.chunk);
    debug_assert!(chunks >= 1);
    if plan.workers == 1 {
        reduce_chunks(xs, plan.chunk, 0, chunks, false, &leaf, &combine)
    } else {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(plan.workers)
            .build()
            .map_err(|e| SumError::InvalidSpec(format!("thread pool: {e}")))?;
        pool.install(|| reduce_chunks(xs, plan.chunk, 0, chunks, true, &leaf, &combine))
    }
}

/// Correctly rounded sum via a parallel tree of exact accumulators.
///
/// Leaves fold their chunk into a dense accumulator and renormalize; internal
/// nodes combine carry-free. The result is bit-identical for any worker
/// count sharing the same chunk size.
pub fn sum_tree(xs: &[f64], plan: &ReductionPlan) -> Result<RoundedSum> {
    let config = RadixConfig::binary64();
    if xs.is_empty() {
        return Ok(DenseAccumulator::new(config).finish_and_round(0)?);
    }
    let mut root = run_reduction(
        xs,
        plan,
        |slice| {
            let mut acc = DenseAccumulator::new(config);
            for &x in slice {
                acc.add_scalar(x)?;
            }
            acc.renormalize()?;
            Ok(acc)
        },
        |a, b| add_accumulators(a, b),
    )?;
    root.finish_and_round(xs.len() as u64)
}

/// How the adaptive engine decides a truncated result is safe to return.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StoppingMode {
    /// Screen on the rounded value's lowest set bit against the retained
    /// window bottom plus a log n allowance for the dropped mass.
    ExponentGap,
    /// Screen by perturbing the rounded value with the dropped-mass bound in
    /// plain double arithmetic and demanding it not move.
    FloatProbe,
}

/// Why the adaptive engine returned.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StopReason {
    /// No pass dropped mass; the result is the exact rounding.
    Untruncated,
    /// Mass was dropped but the stopping test cleared the rounding.
    StoppingCondition,
}

/// Outcome of an adaptive run.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TruncatedRunReport {
    pub result: RoundedSum,
    pub iterations: u32,
    /// Window width of the pass that produced `result`.
    pub final_r: usize,
    pub stopped_by: StopReason,
}

/// Stopping test for a truncated accumulator rounded to `rounded`. Returns
/// true only when the dropped mass provably cannot move the rounded value.
///
/// Every digit dropped on the way to `acc` lies strictly below the unit of
/// its least retained position, so the total dropped mass is below
/// n * 2^least_kept_exponent. Each mode's quick test screens on that bound;
/// a positive answer is then certified by rounding the perturbed accumulator
/// exactly, because neither quick test can see how close the kept sum sits
/// to a rounding boundary.
pub fn stopping_condition(
    acc: &SparseAccumulator,
    rounded: &RoundedSum,
    n: u64,
    mode: StoppingMode,
) -> bool {
    if !acc.truncated_any() {
        return true;
    }
    let Some(e) = acc.least_kept_exponent() else {
        return false;
    };
    let y = rounded.value;
    let screen = match mode {
        StoppingMode::ExponentGap => {
            if y == 0.0 {
                false
            } else if y.is_infinite() {
                true
            } else {
                let (_, m, shift) = split_finite(y);
                let lsb_exp = shift as i64 - 1074 + m.trailing_zeros() as i64;
                lsb_exp >= e as i64 + ceil_log2(n) as i64
            }
        }
        StoppingMode::FloatProbe => {
            if e > 1023 {
                false
            } else {
                let bound = (n as f64) * pow2(e);
                y + bound == y && y - bound == y
            }
        }
    };
    screen && exact_probe(acc, rounded, n)
}

/// The certificate behind both stopping tests. The kept value Y is held
/// exactly, and the true sum lies within [Y - B, Y + B] for
/// B = 2^(E + ceil(log2 n) + 1): there are fewer than 2n truncation events
/// (one per insert, one per merge), each dropping less than 2^E. Rounding is
/// monotone, so when Y - B and Y + B both round to `rounded`, every sum the
/// dropped mass could produce rounds there too. A false answer never breaks
/// correctness, it only forces another pass.
fn exact_probe(acc: &SparseAccumulator, rounded: &RoundedSum, n: u64) -> bool {
    let config = *acc.config();
    let Some(first) = acc.digits().first() else {
        return false;
    };
    let w = config.digit_width() as i64;
    let bit = first.index as i64 * w + ceil_log2(n.max(1)) as i64 + 1;
    let index = (bit / w) as i32;
    let offset = (bit % w) as u32;
    if index as usize >= config.digit_count() {
        return false;
    }
    let Ok(dense) = acc.to_dense() else {
        return false;
    };
    let target = rounded.value.to_bits();
    for sign in [1i64, -1] {
        let probe = match DenseAccumulator::from_digits(
            config,
            [Digit { index, mantissa: sign << offset }],
        ) {
            Ok(p) => p,
            Err(_) => return false,
        };
        let Ok(mut shifted) = add_accumulators(&dense, &probe) else {
            return false;
        };
        // Hint 0: the shifted value lives outside the n-summand magnitude
        // envelope by construction, and the hint never changes the rounding.
        let Ok(bumped) = shifted.finish_and_round(0) else {
            return false;
        };
        if bumped.value.to_bits() != target {
            return false;
        }
    }
    true
}

/// Adaptive truncated summation with the default stopping test.
pub fn sum_truncated(xs: &[f64], plan: &ReductionPlan) -> Result<TruncatedRunReport> {
    sum_truncated_with(xs, plan, StoppingMode::ExponentGap)
}

/// Adaptive truncated summation.
///
/// Each pass reduces the whole input through sparse accumulators that keep
/// only the `r` most significant active positions, starting at r = 2 and
/// squaring after every failed pass. A pass ends the run when it never
/// dropped mass, or when the stopping test shows the dropped mass cannot
/// reach the rounded value. Once r covers every digit position a pass cannot
/// truncate, so the loop always terminates.
pub fn sum_truncated_with(
    xs: &[f64],
    plan: &ReductionPlan,
    mode: StoppingMode,
) -> Result<TruncatedRunReport> {
    let config = RadixConfig::binary64();
    let n = xs.len() as u64;
    let mut r = 2usize;
    let mut iterations = 0u32;
    loop {
        iterations += 1;
        let acc = if xs.is_empty() {
            SparseAccumulator::with_truncation(config, r)?
        } else {
            run_reduction(
                xs,
                plan,
                |slice| {
                    let mut acc = SparseAccumulator::with_truncation(config, r)?;
                    for &x in slice {
                        acc.add_double(x)?;
                    }
                    Ok(acc)
                },
                |a, b| merge_add(a, b),
            )?
        };
        let result = acc.round(n)?;
        if !acc.truncated_any() {
            return Ok(TruncatedRunReport {
                result,
                iterations,
                final_r: r,
                stopped_by: StopReason::Untruncated,
            });
        }
        if stopping_condition(&acc, &result, n, mode) {
            return Ok(TruncatedRunReport {
                result,
                iterations,
                final_r: r,
                stopped_by: StopReason::StoppingCondition,
            });
        }
        r = (r * r).min(config.digit_count());
    }
}

/// Conditioning of a summation instance, computed exactly.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ConditionReport {
    /// sum|x| / |sum x|, correctly rounded; infinite when the sum cancels to
    /// zero, exactly 1 when nothing cancels.
    pub condition: f64,
    /// log2 of the same ratio, usable when the ratio itself overflows.
    pub log2_condition: f64,
    pub sum: RoundedSum,
    pub abs_sum: RoundedSum,
}

/// Exact condition number sum|x| / |sum x| of a finite stream. Both sums run
/// through exact accumulators and the quotient is rounded once.
pub fn condition_number(xs: &[f64]) -> Result<ConditionReport> {
    let config = RadixConfig::binary64();
    let mut signed = DenseAccumulator::new(config);
    let mut absolute = DenseAccumulator::new(config);
    for &x in xs {
        signed.add_scalar(x)?;
        absolute.add_scalar(x.abs())?;
    }
    let s = dense_scaled(&signed);
    let a = dense_scaled(&absolute);
    let sum = round_scaled(&s);
    let abs_sum = round_scaled(&a);
    if a.is_zero() {
        // Sum of zeros: nothing to amplify.
        return Ok(ConditionReport { condition: 1.0, log2_condition: 0.0, sum, abs_sum });
    }
    if s.is_zero() {
        return Ok(ConditionReport {
            condition: f64::INFINITY,
            log2_condition: f64::INFINITY,
            sum,
            abs_sum,
        });
    }
    Ok(ConditionReport {
        condition: round_big_ratio(a.magnitude(), s.magnitude(), 0, false),
        log2_condition: log2_big_ratio(a.magnitude(), s.magnitude()),
        sum,
        abs_sum,
    })
}
