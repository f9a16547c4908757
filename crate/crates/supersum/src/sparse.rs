//! Sparse digit-list accumulator with optional significance truncation.
//!
//! Digits live in an ascending (index, mantissa) list holding only positions
//! that have ever carried mass. The truncating form keeps the `gamma` most
//! significant active positions after every merge. A position that cancels to
//! zero stays in the list: active positions only ever extend upward, so the
//! kept window never slides down and every digit a merge drops sits strictly
//! below the bottom of the final window. The adaptive engine's stopping test
//! leans on that ordering.

use crate::accum::{decompose_into, DenseAccumulator, Digit, RadixConfig, RoundedSum};
use crate::error::{Result, SumError};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SparseAccumulator {
    config: RadixConfig,
    digits: Vec<Digit>,
    gamma: Option<usize>,
    truncated_any: bool,
    min_kept_index: Option<i32>,
}

impl SparseAccumulator {
    /// Exact accumulator: every active position is retained.
    pub fn new(config: RadixConfig) -> Self {
        SparseAccumulator {
            config,
            digits: Vec::new(),
            gamma: None,
            truncated_any: false,
            min_kept_index: None,
        }
    }

    /// Accumulator that keeps only the `gamma` most significant active
    /// positions after each completed merge.
    pub fn with_truncation(config: RadixConfig, gamma: usize) -> Result<Self> {
        if gamma == 0 {
            return Err(SumError::InvalidSpec(
                "truncation window must keep at least one digit".into(),
            ));
        }
        let mut acc = SparseAccumulator::new(config);
        acc.gamma = Some(gamma);
        Ok(acc)
    }

    pub fn from_double(x: f64, config: RadixConfig) -> Result<Self> {
        let mut acc = SparseAccumulator::new(config);
        acc.add_double(x)?;
        Ok(acc)
    }

    pub fn from_double_truncated(x: f64, config: RadixConfig, gamma: usize) -> Result<Self> {
        let mut acc = SparseAccumulator::with_truncation(config, gamma)?;
        acc.add_double(x)?;
        Ok(acc)
    }

    /// Nonzero digits of a regularized dense accumulator.
    pub fn from_dense(acc: &DenseAccumulator) -> Self {
        assert!(acc.is_regularized(), "from_dense requires a renormalized accumulator");
        let digits = acc
            .digits()
            .iter()
            .enumerate()
            .filter(|&(_, &m)| m != 0)
            .map(|(i, &m)| Digit { index: i as i32, mantissa: m })
            .collect();
        SparseAccumulator {
            config: *acc.config(),
            digits,
            gamma: None,
            truncated_any: false,
            min_kept_index: None,
        }
    }

    /// Build from an explicit ascending digit list, validating order, index
    /// range and the regularized bound. Exact mode.
    pub fn from_digits(config: RadixConfig, digits: Vec<Digit>) -> Result<Self> {
        let max = config.max_digit();
        let count = config.digit_count() as i32;
        let mut prev: Option<i32> = None;
        for d in &digits {
            if d.index < 0 || d.index >= count {
                return Err(SumError::IndexOutOfRange { index: d.index });
            }
            if prev.is_some_and(|p| p >= d.index) {
                return Err(SumError::InvalidSpec("digit indices must ascend strictly".into()));
            }
            if d.mantissa.abs() > max {
                return Err(SumError::InvalidSpec(format!(
                    "digit mantissa {} exceeds regularized bound {max}",
                    d.mantissa
                )));
            }
            prev = Some(d.index);
        }
        Ok(SparseAccumulator {
            config,
            digits,
            gamma: None,
            truncated_any: false,
            min_kept_index: None,
        })
    }

    pub fn config(&self) -> &RadixConfig {
        &self.config
    }

    /// Active digits, ascending by index. Zero mantissas are positions that
    /// held mass and cancelled.
    pub fn digits(&self) -> &[Digit] {
        &self.digits
    }

    pub fn gamma(&self) -> Option<usize> {
        self.gamma
    }

    /// True if any merge into this accumulator ever dropped nonzero mass.
    pub fn truncated_any(&self) -> bool {
        self.truncated_any
    }

    /// Lowest window bottom over all truncation events that lost mass.
    pub fn min_kept_index(&self) -> Option<i32> {
        self.min_kept_index
    }

    pub fn is_zero(&self) -> bool {
        self.digits.iter().all(|d| d.mantissa == 0)
    }

    /// Bit exponent of the unit of the least significant retained position.
    /// Every digit ever dropped here is strictly smaller than 2^this.
    pub fn least_kept_exponent(&self) -> Option<i32> {
        self.digits.first().map(|d| self.config.bit_exponent(d.index))
    }

    /// Fold one finite double in through a merge.
    pub fn add_double(&mut self, x: f64) -> Result<()> {
        let mut rhs = SparseAccumulator::new(self.config);
        let digits = &mut rhs.digits;
        decompose_into(x, &self.config, |index, mantissa| {
            digits.push(Digit { index, mantissa });
        })?;
        if rhs.digits.is_empty() {
            return Ok(());
        }
        *self = merge_add(self, &rhs)?;
        Ok(())
    }

    pub fn to_dense(&self) -> Result<DenseAccumulator> {
        DenseAccumulator::from_digits(
            self.config,
            self.digits.iter().copied().filter(|d| d.mantissa != 0),
        )
    }

    /// Round the retained value to the nearest double.
    pub fn round(&self, n_hint: u64) -> Result<RoundedSum> {
        self.to_dense()?.finish_and_round(n_hint)
    }

    #[cfg(test)]
    pub(crate) fn mark_truncated_for_tests(&mut self) {
        self.truncated_any = true;
    }

    fn truncate_to_window(&mut self) {
        let Some(g) = self.gamma else { return };
        if self.digits.len() <= g {
            return;
        }
        let cut = self.digits.len() - g;
        let lost = self.digits[..cut].iter().any(|d| d.mantissa != 0);
        self.digits.drain(..cut);
        if lost {
            self.truncated_any = true;
            let bottom = self.digits[0].index;
            self.min_kept_index = Some(self.min_kept_index.map_or(bottom, |m| m.min(bottom)));
        }
    }
}

/// Merge two sparse accumulators digit by digit, ascending. Same threshold
/// carry rule as the dense addition: a position sum at or past +-(R-1) sheds
/// R and sends a unit carry one position up, so a carry never chains. The
/// result window is the tighter of the two operands' windows and truncation
/// runs once, after the merge completes.
pub fn merge_add(a: &SparseAccumulator, b: &SparseAccumulator) -> Result<SparseAccumulator> {
    if a.config != b.config {
        return Err(SumError::ConfigMismatch {
            left: a.config.digit_width(),
            right: b.config.digit_width(),
        });
    }
    let r = a.config.radix();
    let threshold = r - 1;
    let count = a.config.digit_count() as i32;

    let mut merged = Vec::with_capacity(a.digits.len() + b.digits.len() + 1);
    let (mut i, mut j) = (0usize, 0usize);
    let mut carry: i64 = 0;
    let mut carry_at: i32 = 0;
    loop {
        let mut next = i32::MAX;
        if let Some(d) = a.digits.get(i) {
            next = next.min(d.index);
        }
        if let Some(d) = b.digits.get(j) {
            next = next.min(d.index);
        }
        if carry != 0 {
            next = next.min(carry_at);
        }
        if next == i32::MAX {
            break;
        }
        let mut t = 0i64;
        if a.digits.get(i).is_some_and(|d| d.index == next) {
            t += a.digits[i].mantissa;
            i += 1;
        }
        if b.digits.get(j).is_some_and(|d| d.index == next) {
            t += b.digits[j].mantissa;
            j += 1;
        }
        if carry != 0 && carry_at == next {
            t += carry;
            carry = 0;
        }
        let out = if t >= threshold {
            carry = 1;
            carry_at = next + 1;
            t - r
        } else if t <= -threshold {
            carry = -1;
            carry_at = next + 1;
            t + r
        } else {
            t
        };
        if next >= count {
            return Err(SumError::CapacityOverflow);
        }
        merged.push(Digit { index: next, mantissa: out });
    }

    let gamma = match (a.gamma, b.gamma) {
        (None, g) | (g, None) => g,
        (Some(x), Some(y)) => Some(x.min(y)),
    };
    let min_kept_index = match (a.min_kept_index, b.min_kept_index) {
        (None, m) | (m, None) => m,
        (Some(x), Some(y)) => Some(x.min(y)),
    };
    let mut out = SparseAccumulator {
        config: a.config,
        digits: merged,
        gamma,
        truncated_any: a.truncated_any || b.truncated_any,
        min_kept_index,
    };
    out.truncate_to_window();
    Ok(out)
}
