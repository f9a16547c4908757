//! Helpers shared by the integration suites.

#![allow(dead_code)]

use num_bigint::BigInt;
use supersum::{DenseAccumulator, SparseAccumulator};

pub fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9e3779b97f4a7c15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
    z ^ (z >> 31)
}

/// A finite double drawn over the full exponent range, subnormals included.
pub fn random_finite(state: &mut u64) -> f64 {
    loop {
        let bits = splitmix64(state);
        let v = f64::from_bits(bits);
        if v.is_finite() {
            return v;
        }
    }
}

pub fn shuffled(values: &[f64], seed: u64) -> Vec<f64> {
    let mut out = values.to_vec();
    let mut s = seed;
    for i in (1..out.len()).rev() {
        let j = (splitmix64(&mut s) % (i as u64 + 1)) as usize;
        out.swap(i, j);
    }
    out
}

/// Value of a dense accumulator in units of 2^-1074, computed independently
/// of the crate's own arithmetic.
pub fn dense_value(acc: &DenseAccumulator) -> BigInt {
    let w = acc.config().digit_width();
    let mut total = BigInt::from(0);
    for &d in acc.digits().iter().rev() {
        total = (total << w) + d;
    }
    total
}

/// Value of a sparse accumulator on the same 2^-1074 grid.
pub fn sparse_value(acc: &SparseAccumulator) -> BigInt {
    let w = acc.config().digit_width();
    let mut total = BigInt::from(0);
    for d in acc.digits() {
        total += BigInt::from(d.mantissa) << (w * d.index as u32);
    }
    total
}
