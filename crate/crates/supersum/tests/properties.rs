//! Randomized invariants over the public API.

mod common;

use common::dense_value;
use num_bigint::BigInt;
use proptest::prelude::*;
use supersum::{
    add_accumulators, decompose, generate, merge_add, oracle_sum, sum_inmemory_stream, sum_tree,
    sum_truncated, DatasetKind, DatasetSpec, DenseAccumulator, Digit, RadixConfig,
    ReductionPlan, SparseAccumulator,
};

fn finite_f64() -> impl Strategy<Value = f64> {
    any::<u64>().prop_map(f64::from_bits).prop_filter("finite", |v| v.is_finite())
}

fn small_width() -> impl Strategy<Value = u32> {
    prop_oneof![Just(3u32), Just(8), Just(51)]
}

proptest! {
    #[test]
    fn stream_sum_is_the_correctly_rounded_sum(xs in prop::collection::vec(finite_f64(), 0..200)) {
        let got = sum_inmemory_stream(xs.iter().copied()).unwrap();
        let want = oracle_sum(xs.iter().copied()).unwrap();
        prop_assert_eq!(got.value.to_bits(), want.value.to_bits());
        prop_assert_eq!(got.exact, want.exact);
        prop_assert_eq!(got.direction, want.direction);
    }

    #[test]
    fn tree_shape_never_changes_the_bits(
        xs in prop::collection::vec(finite_f64(), 0..150),
        workers in 1usize..9,
        chunk in 1usize..70,
    ) {
        let plan = ReductionPlan::new().with_workers(workers).with_chunk(chunk);
        let tree = sum_tree(&xs, &plan).unwrap();
        let stream = sum_inmemory_stream(xs.iter().copied()).unwrap();
        prop_assert_eq!(tree.value.to_bits(), stream.value.to_bits());
    }

    #[test]
    fn adaptive_engine_agrees_with_the_tree(
        xs in prop::collection::vec(finite_f64(), 0..150),
        chunk in 1usize..70,
    ) {
        let plan = ReductionPlan::new().with_workers(1).with_chunk(chunk);
        let adaptive = sum_truncated(&xs, &plan).unwrap();
        let tree = sum_tree(&xs, &plan).unwrap();
        prop_assert_eq!(adaptive.result.value.to_bits(), tree.value.to_bits());
        prop_assert!(adaptive.iterations <= 5);
    }

    #[test]
    fn sparse_merge_commutes_and_associates(
        a in prop::collection::vec(finite_f64(), 0..20),
        b in prop::collection::vec(finite_f64(), 0..20),
        c in prop::collection::vec(finite_f64(), 0..20),
    ) {
        let radix = RadixConfig::binary64();
        let build = |xs: &[f64]| {
            let mut acc = SparseAccumulator::new(radix);
            for &x in xs {
                acc.add_double(x).unwrap();
            }
            acc
        };
        let n = (a.len() + b.len() + c.len()) as u64;
        let (a, b, c) = (build(&a), build(&b), build(&c));
        let ab = merge_add(&a, &b).unwrap();
        let ba = merge_add(&b, &a).unwrap();
        prop_assert_eq!(ab.digits(), ba.digits());
        // Association can land on a different digit vector for the same
        // value (carry-free form is not unique), so compare exact values
        // and the rounding they produce.
        let ab_c = merge_add(&ab, &c).unwrap();
        let a_bc = merge_add(&a, &merge_add(&b, &c).unwrap()).unwrap();
        prop_assert_eq!(common::sparse_value(&ab_c), common::sparse_value(&a_bc));
        prop_assert_eq!(
            ab_c.round(n).unwrap().value.to_bits(),
            a_bc.round(n).unwrap().value.to_bits()
        );
    }

    #[test]
    fn carry_free_addition_preserves_value_at_any_width(
        width in small_width(),
        seed in any::<u64>(),
    ) {
        let config = RadixConfig::new(width).unwrap();
        let r = config.radix();
        let count = config.digit_count();
        let mut s = seed;
        let mut next = move || {
            s = s.wrapping_add(0x9e3779b97f4a7c15);
            let mut z = s;
            z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
            z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
            z ^ (z >> 31)
        };
        let mut make = |top_limit: i64| {
            let digits: Vec<Digit> = (0..count)
                .map(|i| {
                    let limit = if i + 1 == count { top_limit } else { r - 1 };
                    Digit {
                        index: i as i32,
                        mantissa: (next() % (2 * limit + 1) as u64) as i64 - limit,
                    }
                })
                .collect();
            DenseAccumulator::from_digits(config, digits).unwrap()
        };
        let a = make(r / 4);
        let b = make(r / 4);
        let out = add_accumulators(&a, &b).unwrap();
        let max = config.max_digit();
        prop_assert!(out.digits().iter().all(|d| d.abs() <= max));
        prop_assert_eq!(dense_value(&a) + dense_value(&b), dense_value(&out));
    }

    #[test]
    fn decomposition_reassembles_the_exact_value(x in finite_f64()) {
        let config = RadixConfig::binary64();
        let digits = decompose(x, &config).unwrap();
        let mut total = BigInt::from(0);
        for d in &digits {
            prop_assert!(d.mantissa != 0);
            prop_assert!(d.mantissa.abs() <= config.max_digit());
            total += BigInt::from(d.mantissa) << (d.index as u32 * config.digit_width());
        }
        // Reference value in units of 2^-1074, taken straight from the bit
        // layout: subnormals are the raw fraction, normals get the hidden
        // bit and a shift of biased_exponent - 1.
        let bits = x.to_bits();
        let raw_mantissa = (bits & ((1 << 52) - 1)) as i64;
        let biased = ((bits >> 52) & 0x7ff) as i64;
        let signed = |v: i64| if bits >> 63 == 1 { -v } else { v };
        let want = if biased == 0 {
            BigInt::from(signed(raw_mantissa))
        } else {
            BigInt::from(signed(raw_mantissa + (1 << 52))) << (biased - 1) as u32
        };
        prop_assert_eq!(total, want);
    }

    #[test]
    fn paired_datasets_cancel_to_positive_zero(
        n in 1usize..64,
        delta in 0u32..2047,
        seed in any::<u64>(),
    ) {
        let data = generate(&DatasetSpec { kind: DatasetKind::PairedZero, n, delta, seed }).unwrap();
        prop_assert_eq!(data.len(), n);
        let sum = sum_inmemory_stream(data.iter().copied()).unwrap();
        prop_assert_eq!(sum.value.to_bits(), 0);
        prop_assert!(sum.exact);
    }

    #[test]
    fn wire_round_trip_is_lossless(xs in prop::collection::vec(finite_f64(), 0..30)) {
        let radix = RadixConfig::binary64();
        let mut acc = SparseAccumulator::new(radix);
        for &x in &xs {
            acc.add_double(x).unwrap();
        }
        let bytes = supersum::encode_accumulator(&acc);
        let back = supersum::decode_accumulator(&bytes, radix).unwrap();
        prop_assert_eq!(back.digits(), acc.digits());
        prop_assert_eq!(back.round(xs.len() as u64).unwrap().value.to_bits(),
            acc.round(xs.len() as u64).unwrap().value.to_bits());
    }
}
