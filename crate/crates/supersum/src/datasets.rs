//! Deterministic dataset families for exercising and measuring the engines.
//!
//! All families draw from one splitmix64 stream seeded by the
//! [`DatasetSpec`], with a fixed per-value draw order (exponent, then
//! mantissa, then sign where the family uses one), so a `DatasetSpec` names
//! its data exactly, across platforms.
//!
//! `delta` controls the exponent spread: values take unbiased exponents from
//! a window of `delta` octaves, anchored at 2^0 and sliding up only as far as
//! the normal range allows (a window wider than 1024 is pinned to top out at
//! 2^1023). Spread is what separates the families in difficulty: same-sign
//! data stays perfectly conditioned at any spread, while mean-shifted data
//! with a wide window cancels catastrophically.

use crate::accum::DenseAccumulator;
use crate::error::{Result, SumError};
use crate::oracle::{dense_scaled, round_big_ratio};
use crate::rng::{bounded, splitmix64};
use num_bigint::Sign;
use num_traits::Zero;

/// The four generator families, in increasing order of summation difficulty.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DatasetKind {
    /// Kind 1: positive values only. Condition number exactly 1.
    UniformPositive,
    /// Kind 2: random signs. Mild cancellation.
    MixedSign,
    /// Kind 3: random signs shifted by the correctly rounded mean, so the sum
    /// collapses toward zero and the condition number explodes.
    NearCancelled,
    /// Kind 4: shuffled (v, -v) pairs, padded with +0.0 when n is odd. The
    /// exact sum is +0.0.
    PairedZero,
}

impl DatasetKind {
    /// Family from its 1-based index.
    pub fn from_index(k: u8) -> Result<Self> {
        match k {
            1 => Ok(DatasetKind::UniformPositive),
            2 => Ok(DatasetKind::MixedSign),
            3 => Ok(DatasetKind::NearCancelled),
            4 => Ok(DatasetKind::PairedZero),
            _ => Err(SumError::InvalidSpec(format!("dataset kind {k} is not 1..=4"))),
        }
    }

    pub fn index(self) -> u8 {
        match self {
            DatasetKind::UniformPositive => 1,
            DatasetKind::MixedSign => 2,
            DatasetKind::NearCancelled => 3,
            DatasetKind::PairedZero => 4,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            DatasetKind::UniformPositive => "uniform-positive",
            DatasetKind::MixedSign => "mixed-sign",
            DatasetKind::NearCancelled => "near-cancelled",
            DatasetKind::PairedZero => "paired-zero",
        }
    }
}

/// Everything that determines a dataset, value for value.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct DatasetSpec {
    pub kind: DatasetKind,
    pub n: usize,
    /// Exponent window width in octaves, 0..=2046.
    pub delta: u32,
    pub seed: u64,
}

/// Low edge of the unbiased exponent window for a given spread.
fn exponent_floor(delta: u32) -> i32 {
    if delta <= 1024 {
        0
    } else {
        1024 - delta as i32
    }
}

/// One normal double: exponent draw, then mantissa draw. Always positive.
fn draw_magnitude(state: &mut u64, e_lo: i32, width: u64) -> f64 {
    let e = e_lo + bounded(state, width) as i32;
    let frac = splitmix64(state) & ((1u64 << 52) - 1);
    f64::from_bits((((e + 1023) as u64) << 52) | frac)
}

/// Generate the dataset a spec names.
pub fn generate(spec: &DatasetSpec) -> Result<Vec<f64>> {
    if spec.n == 0 {
        return Err(SumError::InvalidSpec("dataset needs at least one value".into()));
    }
    if spec.delta > 2046 {
        return Err(SumError::InvalidSpec(format!(
            "exponent spread {} exceeds the normal range (max 2046)",
            spec.delta
        )));
    }
    let e_lo = exponent_floor(spec.delta);
    let width = u64::from(spec.delta).max(1);
    let mut state = spec.seed;
    let mut xs = Vec::with_capacity(spec.n);

    match spec.kind {
        DatasetKind::UniformPositive => {
            for _ in 0..spec.n {
                xs.push(draw_magnitude(&mut state, e_lo, width));
            }
        }
        DatasetKind::MixedSign | DatasetKind::NearCancelled => {
            for _ in 0..spec.n {
                let v = draw_magnitude(&mut state, e_lo, width);
                let neg = splitmix64(&mut state) & 1 == 1;
                xs.push(if neg { -v } else { v });
            }
            if spec.kind == DatasetKind::NearCancelled {
                shift_by_exact_mean(&mut xs)?;
            }
        }
        DatasetKind::PairedZero => {
            for _ in 0..spec.n / 2 {
                let v = draw_magnitude(&mut state, e_lo, width);
                xs.push(v);
                xs.push(-v);
            }
            // Fisher-Yates over the pairs, then the odd padding zero goes on
            // the end so it can never displace a pair member.
            for i in (1..xs.len()).rev() {
                let j = bounded(&mut state, i as u64 + 1) as usize;
                xs.swap(i, j);
            }
            if spec.n % 2 == 1 {
                xs.push(0.0);
            }
        }
    }
    Ok(xs)
}

/// Subtract the correctly rounded mean from every element, in place. One IEEE
/// subtraction per element; the residual sum is the accumulated rounding of
/// those subtractions, tiny against sum|x|.
fn shift_by_exact_mean(xs: &mut [f64]) -> Result<()> {
    let mut acc = DenseAccumulator::new(Default::default());
    for &x in xs.iter() {
        acc.add_scalar(x)?;
    }
    let s = dense_scaled(&acc);
    if s.is_zero() {
        return Ok(());
    }
    let mean = round_big_ratio(
        s.magnitude(),
        &(xs.len() as u64).into(),
        -1074,
        s.sign() == Sign::Minus,
    );
    for x in xs.iter_mut() {
        let shifted = *x - mean;
        if !shifted.is_finite() {
            return Err(SumError::InvalidSpec(
                "mean shift left the finite range; use a narrower exponent window".into(),
            ));
        }
        *x = shifted;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle;
    use crate::parallel::condition_number;

    fn spec(kind: DatasetKind, n: usize, delta: u32, seed: u64) -> DatasetSpec {
        DatasetSpec { kind, n, delta, seed }
    }

    #[test]
    fn generation_is_deterministic() {
        for kind in [
            DatasetKind::UniformPositive,
            DatasetKind::MixedSign,
            DatasetKind::NearCancelled,
            DatasetKind::PairedZero,
        ] {
            let a = generate(&spec(kind, 500, 100, 7)).unwrap();
            let b = generate(&spec(kind, 500, 100, 7)).unwrap();
            assert_eq!(a, b);
            let c = generate(&spec(kind, 500, 100, 8)).unwrap();
            assert_ne!(a, c, "{kind:?} must react to the seed");
        }
    }

    #[test]
    fn exponents_stay_inside_the_window() {
        for delta in [0u32, 1, 10, 1024, 1500, 2046] {
            let e_lo = exponent_floor(delta);
            let e_hi = e_lo + delta.max(1) as i32 - 1;
            let xs = generate(&spec(DatasetKind::MixedSign, 2000, delta, 3)).unwrap();
            for &x in &xs {
                assert!(x.is_finite() && x != 0.0);
                let e = ((x.abs().to_bits() >> 52) & 0x7ff) as i32 - 1023;
                assert!(
                    (e_lo..=e_hi).contains(&e),
                    "delta={delta}: exponent {e} outside [{e_lo}, {e_hi}]"
                );
            }
        }
    }

    #[test]
    fn window_tops_out_at_the_normal_range() {
        assert_eq!(exponent_floor(2046), -1022);
        assert_eq!(exponent_floor(1025), -1);
        assert_eq!(exponent_floor(1024), 0);
        assert_eq!(exponent_floor(10), 0);
    }

    #[test]
    fn positive_family_is_perfectly_conditioned() {
        let xs = generate(&spec(DatasetKind::UniformPositive, 3000, 800, 11)).unwrap();
        assert!(xs.iter().all(|&x| x > 0.0));
        let rep = condition_number(&xs).unwrap();
        assert_eq!(rep.condition, 1.0);
    }

    #[test]
    fn mixed_family_carries_both_signs() {
        let xs = generate(&spec(DatasetKind::MixedSign, 1000, 10, 5)).unwrap();
        assert!(xs.iter().any(|&x| x > 0.0));
        assert!(xs.iter().any(|&x| x < 0.0));
    }

    #[test]
    fn mean_shift_collapses_the_sum() {
        for seed in [1u64, 2, 3] {
            let base = generate(&spec(DatasetKind::MixedSign, 10_000, 100, seed)).unwrap();
            let shifted = generate(&spec(DatasetKind::NearCancelled, 10_000, 100, seed)).unwrap();
            let c_base = condition_number(&base).unwrap();
            let c_shifted = condition_number(&shifted).unwrap();
            assert!(
                c_shifted.log2_condition >= c_base.log2_condition + 20.0,
                "seed {seed}: shift must cost at least 20 bits of conditioning \
                 (base {:.1}, shifted {:.1})",
                c_base.log2_condition,
                c_shifted.log2_condition
            );
        }
    }

    #[test]
    fn paired_family_sums_to_positive_zero() {
        for n in [2usize, 9, 1000, 1001] {
            let xs = generate(&spec(DatasetKind::PairedZero, n, 2000, 13)).unwrap();
            assert_eq!(xs.len(), n);
            let r = oracle::oracle_sum(xs.iter().copied()).unwrap();
            assert_eq!(r.value.to_bits(), 0, "n={n}");
            assert!(r.exact);
        }
    }

    #[test]
    fn paired_family_is_a_shuffle_of_exact_pairs() {
        let xs = generate(&spec(DatasetKind::PairedZero, 400, 500, 21)).unwrap();
        let mut mags: Vec<u64> = xs.iter().map(|x| x.abs().to_bits()).collect();
        mags.sort_unstable();
        for pair in mags.chunks(2) {
            assert_eq!(pair[0], pair[1], "every magnitude appears an even number of times");
        }
        let odd = generate(&spec(DatasetKind::PairedZero, 5, 10, 21)).unwrap();
        assert_eq!(odd[4].to_bits(), 0, "odd padding is trailing +0.0");
    }

    #[test]
    fn rejects_out_of_range_specs() {
        assert!(generate(&spec(DatasetKind::MixedSign, 0, 10, 1)).is_err());
        assert!(generate(&spec(DatasetKind::MixedSign, 10, 2047, 1)).is_err());
    }

    #[test]
    fn kind_indices_round_trip() {
        for k in 1u8..=4 {
            assert_eq!(DatasetKind::from_index(k).unwrap().index(), k);
        }
        assert!(DatasetKind::from_index(0).is_err());
        assert!(DatasetKind::from_index(5).is_err());
    }
}
