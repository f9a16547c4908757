//! Fixed-point superaccumulator over signed digits.
//!
//! A binary64 value is split into digits of `w` bits each; digit `i` carries
//! weight `2^(i*w - 1074)`, so the digit grid bottoms out exactly at the
//! smallest subnormal and every finite double is an integer on it. Digits are
//! signed 64-bit words, which leaves headroom above the `w`-bit payload: many
//! raw additions can be batched before any carry work, and a whole-accumulator
//! addition resolves carries in one pass with no ripple.

use crate::error::{Result, SumError};

/// Bit span of finite binary64: from 2^-1074 up to (not including) 2^1024.
const SPAN_BITS: u32 = 2098;
/// Extra digits above the span so sums of up to 2^63 values cannot carry out.
const HEADROOM_BITS: u32 = 64;

/// Digit geometry. `digit_width` is the payload width `w`; the radix is
/// `R = 2^w`. Width 51 is the binary64 production shape; smaller widths are
/// for exercising the carry logic where saturation is easy to reach.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct RadixConfig {
    digit_width: u32,
}

impl RadixConfig {
    /// Weight of digit 0, as a power-of-two exponent.
    pub const MIN_BIT: i32 = -1074;

    /// `w` must leave at least one bit of batching headroom in an i64 digit:
    /// 2 <= w <= 60.
    pub fn new(digit_width: u32) -> Result<Self> {
        if !(2..=60).contains(&digit_width) {
            return Err(SumError::InvalidSpec(format!(
                "digit width must be in 2..=60, got {digit_width}"
            )));
        }
        let cfg = RadixConfig { digit_width };
        debug_assert!(cfg.digit_count() as u32 * digit_width >= SPAN_BITS + HEADROOM_BITS);
        Ok(cfg)
    }

    /// Production configuration: 51-bit digits, 44 of them.
    pub fn binary64() -> Self {
        RadixConfig { digit_width: 51 }
    }

    pub fn digit_width(&self) -> u32 {
        self.digit_width
    }

    /// R = 2^w.
    pub fn radix(&self) -> i64 {
        1i64 << self.digit_width
    }

    /// Largest regularized digit magnitude, R - 1.
    pub fn max_digit(&self) -> i64 {
        self.radix() - 1
    }

    pub fn digit_count(&self) -> usize {
        let w = self.digit_width;
        (SPAN_BITS.div_ceil(w) + HEADROOM_BITS.div_ceil(w)) as usize
    }

    /// Raw additions allowed between renormalizations. Keeps every digit
    /// magnitude below 2^62: (K+1) * (R-1) < 2^62.
    pub fn raw_add_limit(&self) -> u64 {
        (1u64 << (62 - self.digit_width)) - 2
    }

    /// Power-of-two exponent of digit `index`'s unit.
    pub fn bit_exponent(&self, index: i32) -> i32 {
        index * self.digit_width as i32 + Self::MIN_BIT
    }
}

impl Default for RadixConfig {
    fn default() -> Self {
        RadixConfig::binary64()
    }
}

/// One signed digit: `mantissa * 2^(index*w - 1074)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Digit {
    pub index: i32,
    pub mantissa: i64,
}

/// Which way the returned double sits relative to the exact sum.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RoundDirection {
    Exact,
    RoundedDown,
    RoundedUp,
}

/// A correctly rounded result with provenance.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RoundedSum {
    pub value: f64,
    /// True iff `value` equals the exact sum.
    pub exact: bool,
    pub direction: RoundDirection,
    /// Bit position of the exact sum's leading bit, `None` for an exact zero.
    pub msd_exponent: Option<i32>,
}

impl RoundedSum {
    pub(crate) fn zero() -> Self {
        RoundedSum {
            value: 0.0,
            exact: true,
            direction: RoundDirection::Exact,
            msd_exponent: None,
        }
    }
}

/// Exact power of two as a double. `e` must be a representable exponent.
pub(crate) fn pow2(e: i32) -> f64 {
    debug_assert!((-1074..=1023).contains(&e));
    if e >= -1022 {
        f64::from_bits(((e + 1023) as u64) << 52)
    } else {
        f64::from_bits(1u64 << (e + 1074))
    }
}

/// (negative, integer significand, scaled shift): |x| = significand * 2^shift
/// in units of 2^-1074. Zero significand for ±0.0.
pub(crate) fn split_finite(x: f64) -> (bool, u64, u32) {
    debug_assert!(x.is_finite());
    let bits = x.to_bits();
    let neg = bits >> 63 == 1;
    let biased = ((bits >> 52) & 0x7ff) as u32;
    let frac = bits & ((1u64 << 52) - 1);
    if biased == 0 {
        (neg, frac, 0)
    } else {
        (neg, frac | (1u64 << 52), biased - 1)
    }
}

/// Split `x` into at most a few digits on the fixed-point grid. Digits are
/// emitted in ascending index order, each with |mantissa| <= R-1 and the sign
/// of `x`; zero chunks are skipped. For w=51 a double covers 1..=3 digits.
pub fn decompose(x: f64, config: &RadixConfig) -> Result<Vec<Digit>> {
    let mut out = Vec::with_capacity(3);
    decompose_into(x, config, |index, mantissa| out.push(Digit { index, mantissa }))?;
    Ok(out)
}

/// Allocation-free decompose used by the hot paths.
pub(crate) fn decompose_into(
    x: f64,
    config: &RadixConfig,
    mut emit: impl FnMut(i32, i64),
) -> Result<()> {
    if !x.is_finite() {
        return Err(SumError::NonFiniteInput(x));
    }
    let (neg, m, shift) = split_finite(x);
    if m == 0 {
        return Ok(());
    }
    let w = config.digit_width;
    let mut index = (shift / w) as i32;
    let offset = shift % w;
    // 53 significand bits shifted by at most w-1 fit comfortably in 128 bits.
    let mut v = (m as u128) << offset;
    let mask = (1u128 << w) - 1;
    while v != 0 {
        let chunk = (v & mask) as i64;
        if chunk != 0 {
            emit(index, if neg { -chunk } else { chunk });
        }
        v >>= w;
        index += 1;
    }
    Ok(())
}

/// Dense fixed-width accumulator: one i64 per digit position.
///
/// State discipline: `raw_adds == 0` implies every digit is regularized
/// (|digit| <= R-1). `add_scalar` grows digits without carry work and bumps
/// the counter; `renormalize` restores the canonical-carry form and resets it.
#[derive(Clone, Debug, PartialEq)]
pub struct DenseAccumulator {
    config: RadixConfig,
    digits: Vec<i64>,
    raw_adds: u64,
    canonical: bool,
}

impl DenseAccumulator {
    pub fn new(config: RadixConfig) -> Self {
        DenseAccumulator {
            digits: vec![0; config.digit_count()],
            config,
            raw_adds: 0,
            canonical: true,
        }
    }

    /// Build from explicit digits, validating regularization and bounds.
    pub fn from_digits(config: RadixConfig, digits: impl IntoIterator<Item = Digit>) -> Result<Self> {
        let mut acc = DenseAccumulator::new(config);
        let max = config.max_digit();
        for d in digits {
            if d.index < 0 || d.index as usize >= acc.digits.len() {
                return Err(SumError::IndexOutOfRange { index: d.index });
            }
            if d.mantissa.abs() > max {
                return Err(SumError::InvalidSpec(format!(
                    "digit mantissa {} exceeds regularized bound {max}",
                    d.mantissa
                )));
            }
            acc.digits[d.index as usize] += d.mantissa;
        }
        // Colliding indices fold together; the folded value must still be
        // regularized or the raw-add invariant would lie.
        if acc.digits.iter().any(|&d| d.abs() > max) {
            return Err(SumError::InvalidSpec(
                "folded digits exceed the regularized bound".into(),
            ));
        }
        acc.canonical = false;
        Ok(acc)
    }

    pub fn config(&self) -> &RadixConfig {
        &self.config
    }

    pub fn digits(&self) -> &[i64] {
        &self.digits
    }

    pub fn raw_adds(&self) -> u64 {
        self.raw_adds
    }

    /// True when every digit is within the regularized range [-(R-1), R-1].
    pub fn is_regularized(&self) -> bool {
        self.raw_adds == 0
    }

    pub fn is_zero(&self) -> bool {
        self.digits.iter().all(|&d| d == 0)
    }

    /// Add one finite double. Digit words absorb the value without carry
    /// propagation; a renormalize is forced only when enough raw adds have
    /// accumulated that another could push a digit past 2^62.
    pub fn add_scalar(&mut self, x: f64) -> Result<()> {
        if !x.is_finite() {
            return Err(SumError::NonFiniteInput(x));
        }
        if self.raw_adds >= self.config.raw_add_limit() {
            self.renormalize()?;
        }
        let digits = &mut self.digits;
        decompose_into(x, &self.config, |index, mantissa| {
            digits[index as usize] += mantissa;
        })?;
        if x != 0.0 {
            self.raw_adds += 1;
        }
        self.canonical = false;
        Ok(())
    }

    /// Carry-resolving pass, least significant digit first. Afterwards every
    /// digit lies in [-R/2, R/2-1] (the balanced form, unique per value) and
    /// the raw-add counter resets. Value-preserving and idempotent.
    pub fn renormalize(&mut self) -> Result<()> {
        let r = self.config.radix();
        let half = r / 2;
        let mut carry: i64 = 0;
        for d in self.digits.iter_mut() {
            let t = *d + carry;
            let mut rem = t % r;
            let mut c = t / r;
            if rem >= half {
                rem -= r;
                c += 1;
            } else if rem < -half {
                rem += r;
                c -= 1;
            }
            *d = rem;
            carry = c;
        }
        if carry != 0 {
            return Err(SumError::CapacityOverflow);
        }
        self.raw_adds = 0;
        self.canonical = false;
        Ok(())
    }

    /// Flip every digit onto the sign of the total so the magnitude can be
    /// read off directly. Requires a regularized accumulator. Afterwards all
    /// digits share one sign with magnitudes in [0, R-1].
    ///
    /// The sign of the total is the sign of the most significant nonzero
    /// digit: the lower digits sum to at most (R-1)(R^k - 1)/(R-1) < R^k in
    /// magnitude, so they can never overturn it.
    pub fn canonicalize(&mut self) {
        assert!(
            self.is_regularized(),
            "canonicalize requires a renormalized accumulator"
        );
        let sign = self
            .digits
            .iter()
            .rev()
            .find(|&&d| d != 0)
            .map(|&d| d.signum())
            .unwrap_or(0);
        if sign == 0 {
            self.canonical = true;
            return;
        }
        let r = self.config.radix();
        let mut borrow: i64 = 0;
        for d in self.digits.iter_mut() {
            let t = *d + borrow;
            if sign > 0 {
                if t < 0 {
                    *d = t + r;
                    borrow = -1;
                } else {
                    *d = t;
                    borrow = 0;
                }
            } else if t > 0 {
                *d = t - r;
                borrow = 1;
            } else {
                *d = t;
                borrow = 0;
            }
        }
        debug_assert_eq!(borrow, 0, "canonical borrow escaped the top digit");
        self.canonical = true;
    }

    fn msd(&self) -> Option<usize> {
        self.digits.iter().rposition(|&d| d != 0)
    }

    /// Round the exact accumulator value to the nearest double, ties to even.
    /// Requires a canonicalized accumulator. `n_hint` is the number of
    /// summands folded in, used only to audit that the magnitude stayed within
    /// the headroom the accumulator was sized for.
    pub fn round_to_double(&self, n_hint: u64) -> RoundedSum {
        assert!(self.canonical, "round_to_double requires a canonicalized accumulator");
        let k = match self.msd() {
            Some(k) => k,
            None => return RoundedSum::zero(),
        };
        let negative = self.digits[k] < 0;
        let w = self.config.digit_width as i64;
        let mags: Vec<u64> = self.digits[..=k].iter().map(|&d| d.unsigned_abs()).collect();
        // Leading bit position on the scaled grid.
        let hb = 63 - mags[k].leading_zeros() as i64;
        let p = k as i64 * w + hb;
        let msd_exponent = (p + RadixConfig::MIN_BIT as i64) as i32;
        debug_assert!(
            n_hint == 0 || (msd_exponent as i64) < 1024 + 64.min(ceil_log2(n_hint) as i64 + 1),
            "magnitude outside the audited envelope"
        );

        let bit = |pos: i64| -> u64 {
            if pos < 0 {
                0
            } else {
                (mags[(pos / w) as usize] >> (pos % w)) & 1
            }
        };

        let mut q: u64 = 0;
        for j in 0..53 {
            q = (q << 1) | bit(p - j);
        }
        let round_bit = bit(p - 53);
        let cut = p - 53; // bits strictly below feed the sticky flag
        let sticky = if cut <= 0 {
            false
        } else {
            let ci = (cut / w) as usize;
            let off = (cut % w) as u32;
            (mags[ci] & ((1u64 << off) - 1)) != 0 || mags[..ci].iter().any(|&m| m != 0)
        };

        let mut e_ulp = (p - 52 + RadixConfig::MIN_BIT as i64) as i32;
        let inexact = round_bit == 1 || sticky;
        let increment = round_bit == 1 && (sticky || q & 1 == 1);
        if increment {
            q += 1;
            if q == 1u64 << 53 {
                q = 1u64 << 52;
                e_ulp += 1;
            }
        }

        let mag_direction = if !inexact {
            RoundDirection::Exact
        } else if increment {
            RoundDirection::RoundedUp
        } else {
            RoundDirection::RoundedDown
        };
        let direction = match (mag_direction, negative) {
            (RoundDirection::RoundedUp, true) => RoundDirection::RoundedDown,
            (RoundDirection::RoundedDown, true) => RoundDirection::RoundedUp,
            (d, _) => d,
        };

        // Overflow: leading bit at or above 2^1024 after rounding.
        if e_ulp + 52 > 1023 {
            return RoundedSum {
                value: if negative { f64::NEG_INFINITY } else { f64::INFINITY },
                exact: false,
                direction: if negative {
                    RoundDirection::RoundedDown
                } else {
                    RoundDirection::RoundedUp
                },
                msd_exponent: Some(msd_exponent),
            };
        }

        let value = if p <= 52 {
            // The whole magnitude fits below the 53-bit window: gather it and
            // scale by the grid unit. Exact, including subnormals.
            let mut m: u64 = 0;
            for pos in (0..=p).rev() {
                m = (m << 1) | bit(pos);
            }
            (m as f64) * pow2(RadixConfig::MIN_BIT)
        } else {
            (q as f64) * pow2(e_ulp)
        };
        let value = if negative { -value } else { value };

        RoundedSum {
            value,
            exact: !inexact,
            direction,
            msd_exponent: Some(msd_exponent),
        }
    }

    /// renormalize + canonicalize + round in one call.
    pub fn finish_and_round(&mut self, n_hint: u64) -> Result<RoundedSum> {
        self.renormalize()?;
        self.canonicalize();
        Ok(self.round_to_double(n_hint))
    }
}

/// Carry-free addition of two regularized accumulators.
///
/// Per digit: `P_i = Y_i + Z_i`; the outgoing carry is decided by threshold
/// alone (`P_i >= R-1` gives +1, `P_i <= -(R-1)` gives -1), the kept part is
/// `W_i = P_i - C_{i+1}*R`, and the result digit is `S_i = W_i + C_i`. Each
/// output digit therefore depends only on positions i and i-1, the output is
/// again regularized, and no carry chain forms.
pub fn add_accumulators(a: &DenseAccumulator, b: &DenseAccumulator) -> Result<DenseAccumulator> {
    if a.config != b.config {
        return Err(SumError::ConfigMismatch {
            left: a.config.digit_width(),
            right: b.config.digit_width(),
        });
    }
    assert!(
        a.is_regularized() && b.is_regularized(),
        "add_accumulators requires regularized operands"
    );
    let r = a.config.radix();
    let threshold = r - 1;
    let mut out = Vec::with_capacity(a.digits.len());
    let mut carry_in: i64 = 0;
    for (&ya, &yb) in a.digits.iter().zip(&b.digits) {
        let p = ya + yb;
        let carry_out = if p >= threshold {
            1
        } else if p <= -threshold {
            -1
        } else {
            0
        };
        out.push(p - carry_out * r + carry_in);
        carry_in = carry_out;
    }
    if carry_in != 0 {
        return Err(SumError::CapacityOverflow);
    }
    Ok(DenseAccumulator {
        config: a.config,
        digits: out,
        raw_adds: 0,
        canonical: false,
    })
}

/// Smallest k with n <= 2^k (0 for n <= 1).
pub(crate) fn ceil_log2(n: u64) -> u32 {
    if n <= 1 {
        0
    } else {
        64 - (n - 1).leading_zeros()
    }
}

/// IEEE semantics for inputs containing NaN or infinities: `Some(result)` when
/// any non-finite value is present (NaN wins, opposing infinities give NaN),
/// `None` when the stream is all finite. Callers that opt into IEEE behavior
/// use this as a pre-pass in place of the default reject-with-error policy.
pub fn nonfinite_shortcut(xs: impl IntoIterator<Item = f64>) -> Option<f64> {
    let mut seen_pos = false;
    let mut seen_neg = false;
    for x in xs {
        if x.is_nan() {
            return Some(f64::NAN);
        }
        if x == f64::INFINITY {
            seen_pos = true;
        } else if x == f64::NEG_INFINITY {
            seen_neg = true;
        }
    }
    match (seen_pos, seen_neg) {
        (true, true) => Some(f64::NAN),
        (true, false) => Some(f64::INFINITY),
        (false, true) => Some(f64::NEG_INFINITY),
        (false, false) => None,
    }
}
