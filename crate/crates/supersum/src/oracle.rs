//! Exact reference summation and floating-point baselines.
//!
//! [`oracle_sum`] folds each input into an arbitrary-size integer holding the
//! sum scaled by 2^1074, then rounds once. It deliberately shares no code
//! with the digit accumulators it is used to check: values are split straight
//! from their IEEE bit patterns and summed with `num_bigint`. A second exact
//! path, [`window_fold_sum`], recomputes the same result through a fixed-width
//! two's-complement limb window so the two can be played against each other.

use crate::accum::{pow2, DenseAccumulator, RadixConfig, RoundDirection, RoundedSum};
use crate::error::{Result, SumError};
use num_bigint::{BigInt, BigUint, Sign};
use num_traits::Zero;

/// |x| = m * 2^shift in units of 2^-1074, from raw bits. Exponent-field value
/// e maps to shift e-1 for normals (implicit bit joins the mantissa), 0 for
/// subnormals.
fn split_bits(x: f64) -> (bool, u64, u32) {
    let b = x.to_bits();
    let neg = b >> 63 == 1;
    let e = ((b >> 52) & 0x7ff) as u32;
    let frac = b & 0x000f_ffff_ffff_ffff;
    if e == 0 {
        (neg, frac, 0)
    } else {
        (neg, frac | (1u64 << 52), e - 1)
    }
}

/// Exact scaled integer of one finite double (units of 2^-1074).
pub(crate) fn scaled_int(x: f64) -> BigInt {
    let (neg, m, shift) = split_bits(x);
    let mag = BigInt::from(m) << shift;
    if neg {
        -mag
    } else {
        mag
    }
}

/// Sign-magnitude fixed-point image of a running sum, scaled by 2^1074.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ExactFixedPoint {
    acc: BigInt,
}

impl ExactFixedPoint {
    pub fn new() -> Self {
        ExactFixedPoint { acc: BigInt::zero() }
    }

    pub fn add_value(&mut self, x: f64) -> Result<()> {
        if !x.is_finite() {
            return Err(SumError::NonFiniteInput(x));
        }
        if x != 0.0 {
            self.acc += scaled_int(x);
        }
        Ok(())
    }

    pub fn is_zero(&self) -> bool {
        self.acc.is_zero()
    }

    /// The exact sum in units of 2^-1074.
    pub fn scaled_value(&self) -> &BigInt {
        &self.acc
    }

    pub fn round(&self) -> RoundedSum {
        round_scaled(&self.acc)
    }
}

/// Correctly rounded sum of a finite stream; the reference every engine is
/// checked against.
pub fn oracle_sum(xs: impl IntoIterator<Item = f64>) -> Result<RoundedSum> {
    let mut acc = ExactFixedPoint::new();
    for x in xs {
        acc.add_value(x)?;
    }
    Ok(acc.round())
}

/// Round an exact scaled integer (units of 2^-1074) to the nearest double,
/// ties to even.
pub(crate) fn round_scaled(v: &BigInt) -> RoundedSum {
    let (sign, mag) = (v.sign(), v.magnitude());
    if sign == Sign::NoSign {
        return RoundedSum::zero();
    }
    let negative = sign == Sign::Minus;
    let nb = mag.bits();
    let msd_exponent = (nb as i64 - 1 + RadixConfig::MIN_BIT as i64) as i32;

    if nb <= 53 {
        // At most 53 significant bits on a grid the double format reaches
        // exactly: no rounding ever happens down here.
        let m = u64::try_from(mag).expect("<= 53 bits");
        let value = (m as f64) * pow2(RadixConfig::MIN_BIT);
        return RoundedSum {
            value: if negative { -value } else { value },
            exact: true,
            direction: RoundDirection::Exact,
            msd_exponent: Some(msd_exponent),
        };
    }

    let sh = nb - 54;
    let q54 = u64::try_from(mag >> sh).expect("54 bits");
    let round_bit = q54 & 1;
    let mut q = q54 >> 1;
    let sticky = mag.trailing_zeros().unwrap_or(0) < sh;
    let inexact = round_bit == 1 || sticky;
    let increment = round_bit == 1 && (sticky || q & 1 == 1);
    let mut e_ulp = (sh as i64 + 1 + RadixConfig::MIN_BIT as i64) as i32;
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
    let value = (q as f64) * pow2(e_ulp);
    RoundedSum {
        value: if negative { -value } else { value },
        exact: !inexact,
        direction,
        msd_exponent: Some(msd_exponent),
    }
}

// --- independent cross-check path ---------------------------------------

/// Limb count covering bits -1074..1023 plus carry headroom: 35*64 = 2240.
const WINDOW_LIMBS: usize = 35;

/// Exact sum through a fixed two's-complement window, inputs folded in
/// descending exponent order. Exists so the big-integer oracle has a second,
/// mechanically different implementation to agree with.
pub fn window_fold_sum(xs: &[f64]) -> Result<RoundedSum> {
    for &x in xs {
        if !x.is_finite() {
            return Err(SumError::NonFiniteInput(x));
        }
    }
    let mut order: Vec<usize> = (0..xs.len()).collect();
    order.sort_by_key(|&i| std::cmp::Reverse(xs[i].to_bits() >> 52 & 0x7ff));

    let mut limbs = [0u64; WINDOW_LIMBS];
    for &i in &order {
        let (neg, m, shift) = split_bits(xs[i]);
        if m == 0 {
            continue;
        }
        let word = (shift / 64) as usize;
        let off = shift % 64;
        let wide = (m as u128) << off;
        let parts = [wide as u64, (wide >> 64) as u64];
        if !neg {
            let mut carry = 0u64;
            for (k, &p) in parts.iter().enumerate() {
                let (s1, c1) = limbs[word + k].overflowing_add(p);
                let (s2, c2) = s1.overflowing_add(carry);
                limbs[word + k] = s2;
                carry = (c1 | c2) as u64;
            }
            let mut j = word + 2;
            // Carries past the top limb wrap; arithmetic is mod 2^2240 and
            // the final sum sits far inside the signed range.
            while carry != 0 && j < WINDOW_LIMBS {
                let (s, c) = limbs[j].overflowing_add(carry);
                limbs[j] = s;
                carry = c as u64;
                j += 1;
            }
        } else {
            let mut borrow = 0u64;
            for (k, &p) in parts.iter().enumerate() {
                let (s1, b1) = limbs[word + k].overflowing_sub(p);
                let (s2, b2) = s1.overflowing_sub(borrow);
                limbs[word + k] = s2;
                borrow = (b1 | b2) as u64;
            }
            let mut j = word + 2;
            while borrow != 0 && j < WINDOW_LIMBS {
                let (s, b) = limbs[j].overflowing_sub(borrow);
                limbs[j] = s;
                borrow = b as u64;
                j += 1;
            }
        }
    }

    let negative = limbs[WINDOW_LIMBS - 1] >> 63 == 1;
    if negative {
        let mut carry = 1u64;
        for l in limbs.iter_mut() {
            let (s, c) = (!*l).overflowing_add(carry);
            *l = s;
            carry = c as u64;
        }
    }
    let mut bytes = Vec::with_capacity(WINDOW_LIMBS * 8);
    for l in limbs {
        bytes.extend_from_slice(&l.to_le_bytes());
    }
    let mag = BigUint::from_bytes_le(&bytes);
    let v = BigInt::from_biguint(if mag.is_zero() { Sign::NoSign } else if negative { Sign::Minus } else { Sign::Plus }, mag);
    Ok(round_scaled(&v))
}

/// Exact scaled value (units of 2^-1074) of a dense accumulator's digit
/// array. Works on any digit state, regularized or not.
pub(crate) fn dense_scaled(acc: &DenseAccumulator) -> BigInt {
    let w = acc.config().digit_width();
    let mut v = BigInt::zero();
    for &d in acc.digits().iter().rev() {
        v = (v << w) + d;
    }
    v
}

// --- correctly rounded big ratio ----------------------------------------

/// Round (num/den) * 2^exp2 to the nearest double, ties to even. num may be
/// zero; den must not be. Used for exact condition-number ratios and exact
/// means, where both operands come out of superaccumulators or counts.
pub(crate) fn round_big_ratio(num: &BigUint, den: &BigUint, exp2: i64, negative: bool) -> f64 {
    debug_assert!(!den.is_zero());
    if num.is_zero() {
        return if negative { -0.0 } else { 0.0 };
    }
    let an = num.bits() as i64;
    let ad = den.bits() as i64;
    let e_est = an - ad + exp2; // true msb is e_est or e_est - 1
    let t = (e_est - 54).max(-1075);
    // Q = floor(num * 2^(exp2 - t) / den), ulp(Q) = 2^t.
    let s = exp2 - t;
    let (scaled_num, scaled_den) = if s >= 0 {
        (num << s as u64, den.clone())
    } else {
        (num.clone(), den << (-s) as u64)
    };
    let q_big = &scaled_num / &scaled_den;
    let mut sticky = &q_big * &scaled_den != scaled_num;
    let qb = q_big.bits() as i64;
    let e_msb = t + qb - 1;
    let u = (e_msb - 52).max(-1074);
    let sd = u - t;
    debug_assert!(sd >= 1, "one guard bit below the target ulp");
    let q_full = &q_big >> (sd - 1) as u64; // keep exactly one guard bit
    sticky = sticky || (&q_full << (sd - 1) as u64) != q_big;
    let q_full = u64::try_from(q_full).expect("<= 54 bits");
    let round_bit = q_full & 1;
    let mut q = q_full >> 1;
    let mut u = u;
    if round_bit == 1 && (sticky || q & 1 == 1) {
        q += 1;
        if q == 1u64 << 53 {
            q = 1u64 << 52;
            u += 1;
        }
    }
    if q == 0 {
        return if negative { -0.0 } else { 0.0 };
    }
    let value = if u + 52 > 1023 && q >= 1u64 << 52 {
        f64::INFINITY
    } else if u > 1023 {
        f64::INFINITY
    } else {
        (q as f64) * pow2(u as i32)
    };
    if negative {
        -value
    } else {
        value
    }
}

/// log2 of num/den to double precision, for condition reports whose ratio may
/// exceed the double range.
pub(crate) fn log2_big_ratio(num: &BigUint, den: &BigUint) -> f64 {
    debug_assert!(!num.is_zero() && !den.is_zero());
    let top = |v: &BigUint| -> (f64, i64) {
        let b = v.bits() as i64;
        let keep = b.min(53);
        let m = u64::try_from(v >> (b - keep) as u64).expect("<= 53 bits");
        (m as f64, b - keep)
    };
    let (nm, ns) = top(num);
    let (dm, ds) = top(den);
    (nm.log2() + ns as f64) - (dm.log2() + ds as f64)
}

// --- floating-point baselines -------------------------------------------

/// Plain left-to-right IEEE addition. The baseline that correctly rounded
/// summation is measured against; propagates specials as IEEE does.
pub fn naive_sum(xs: impl IntoIterator<Item = f64>) -> f64 {
    xs.into_iter().fold(0.0, |a, x| a + x)
}

/// Compensated summation: each add runs through the two-term error-free
/// transform and the dropped low part is carried in a side term.
pub fn compensated_sum(xs: impl IntoIterator<Item = f64>) -> f64 {
    let mut sum = 0.0f64;
    let mut comp = 0.0f64;
    for x in xs {
        let t = sum + x;
        if sum.abs() >= x.abs() {
            comp += (sum - t) + x;
        } else {
            comp += (x - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testutil::{random_finite, splitmix64};

    #[test]
    fn rounds_point_one_plus_point_two() {
        let r = oracle_sum([0.1, 0.2]).unwrap();
        assert_eq!(r.value.to_bits(), 0x3fd3_3333_3333_3334);
        assert!(!r.exact);
    }

    #[test]
    fn empty_sum_is_positive_zero() {
        let r = oracle_sum([]).unwrap();
        assert_eq!(r.value.to_bits(), 0);
        assert!(r.exact);
        assert_eq!(r.msd_exponent, None);
    }

    #[test]
    fn singletons_come_back_exact() {
        let mut s = 31u64;
        for _ in 0..3000 {
            let x = random_finite(&mut s);
            let r = oracle_sum([x]).unwrap();
            assert_eq!(r.value.to_bits(), if x == 0.0 { 0 } else { x.to_bits() });
            assert!(r.exact);
        }
    }

    #[test]
    fn recovers_cancelled_unit() {
        let r = oracle_sum([1e16, 1.0, -1e16]).unwrap();
        assert_eq!(r.value, 1.0);
        assert!(r.exact);
        assert_eq!(naive_sum([1e16, 1.0, -1e16]), 0.0);
        assert_eq!(compensated_sum([1e16, 1.0, -1e16]), 1.0);
    }

    #[test]
    fn overflow_rounds_to_infinity() {
        let x = pow2(1023);
        let r = oracle_sum([x, x]).unwrap();
        assert_eq!(r.value, f64::INFINITY);
        assert_eq!(r.msd_exponent, Some(1024));
        let r = oracle_sum([-x, -x]).unwrap();
        assert_eq!(r.value, f64::NEG_INFINITY);
    }

    #[test]
    fn rejects_nonfinite() {
        assert!(matches!(
            oracle_sum([1.0, f64::NAN]),
            Err(SumError::NonFiniteInput(_))
        ));
    }

    #[test]
    fn two_exact_paths_agree() {
        let mut s = 0x0badu64;
        for case in 0..500 {
            let n = 1 + (splitmix64(&mut s) % 40) as usize;
            let mut xs: Vec<f64> = (0..n).map(|_| random_finite(&mut s)).collect();
            // Half the cases get heavy cancellation: append exact negations.
            if case % 2 == 0 {
                let negs: Vec<f64> = xs.iter().map(|&x| -x).collect();
                xs.extend(negs);
                xs.push(random_finite(&mut s));
            }
            let a = oracle_sum(xs.iter().copied()).unwrap();
            let b = window_fold_sum(&xs).unwrap();
            assert_eq!(a.value.to_bits(), b.value.to_bits(), "case {case}");
            assert_eq!(a.exact, b.exact, "case {case}");
            assert_eq!(a.direction, b.direction, "case {case}");
        }
    }

    #[test]
    fn ratio_rounding_frozen_cases() {
        let big = |v: u128| BigUint::from(v);
        let cases: &[(u128, u128, i64, u64)] = &[
            (1, 3, 0, 0x3fd5_5555_5555_5555),
            (2, 3, 0, 0x3fe5_5555_5555_5555),
            (100_000_000_000_000_000_000, 7, 0, 0x43e8_c821_ae86_5725),
            (1, 1, -1075, 0x0),                    // tie at half the smallest subnormal: even
            (3, 1, -1075, 0x2),                    // 1.5 ulp: tie to even
            (1, 3, -1074, 0x0),                    // below half ulp
            (3, 4, -1074, 0x1),                    // above half ulp
            (5, 7, 900, 0x7826_db6d_b6db_6db7),
            (12_345_678_901_234_567, 1_000_000_007, 0, 0x4167_8c29_da12_f685),
        ];
        for &(n, d, e, want) in cases {
            let got = round_big_ratio(&big(n), &big(d), e, false);
            assert_eq!(got.to_bits(), want, "{n}/{d} * 2^{e}");
        }
        // Just above half ulp via a long fraction: (2^53+1)/2^54 * ulp.
        let got = round_big_ratio(
            &(BigUint::from(1u8) << 53usize | BigUint::from(1u8)),
            &(BigUint::from(1u8) << 54usize),
            -1074,
            false,
        );
        assert_eq!(got.to_bits(), 0x1);
        // Overflow.
        let got = round_big_ratio(&BigUint::from(3u8), &BigUint::from(1u8), 1098, false);
        assert_eq!(got, f64::INFINITY);
        assert_eq!(
            round_big_ratio(&BigUint::from(3u8), &BigUint::from(1u8), 1098, true),
            f64::NEG_INFINITY
        );
    }

    #[test]
    fn ratio_matches_nearest_double_on_randoms() {
        // Exhaustive agreement with the scaled-integer rounder: num/2^k.
        let mut s = 7u64;
        for _ in 0..2000 {
            let num = splitmix64(&mut s) >> (splitmix64(&mut s) % 30);
            if num == 0 {
                continue;
            }
            let k = (splitmix64(&mut s) % 80) as i64;
            let via_ratio = round_big_ratio(&BigUint::from(num), &BigUint::from(1u8), -k, false);
            let exact = BigInt::from(num) << (1074 - k) as u64;
            let via_scaled = round_scaled(&exact).value;
            assert_eq!(via_ratio.to_bits(), via_scaled.to_bits(), "{num} / 2^{k}");
        }
    }

    #[test]
    fn log2_ratio_tracks_bit_lengths() {
        let n = BigUint::from(1u8) << 1000usize;
        let d = BigUint::from(1u8) << 400usize;
        assert!((log2_big_ratio(&n, &d) - 600.0).abs() < 1e-9);
        let three = BigUint::from(3u8);
        let one = BigUint::from(1u8);
        assert!((log2_big_ratio(&three, &one) - 3f64.log2()).abs() < 1e-12);
    }

    #[test]
    fn compensated_tracks_oracle_on_mild_data() {
        let xs: Vec<f64> = (0..1000).map(|i| (i as f64) * 0.1).collect();
        let want = oracle_sum(xs.iter().copied()).unwrap().value;
        assert_eq!(compensated_sum(xs.iter().copied()), want);
    }
}
