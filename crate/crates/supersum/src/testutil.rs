//! Helpers shared by unit tests: exact digit-array valuation and a
//! full-range finite double generator.

pub(crate) use crate::rng::splitmix64;

use crate::accum::DenseAccumulator;
use crate::sparse::SparseAccumulator;
use num_bigint::BigInt;

/// Random finite double spanning the whole exponent range, subnormals and
/// zeros included.
pub(crate) fn random_finite(state: &mut u64) -> f64 {
    let mant_sign = splitmix64(state) & 0x800f_ffff_ffff_ffff;
    let biased = splitmix64(state) % 2047; // 0..=2046: finite exponents only
    f64::from_bits(mant_sign | (biased << 52))
}

/// Exact value of a dense accumulator in grid units (2^-1074).
pub(crate) fn value_of_dense(acc: &DenseAccumulator) -> BigInt {
    let w = acc.config().digit_width();
    let mut v = BigInt::from(0);
    for &d in acc.digits().iter().rev() {
        v = (v << w) + d;
    }
    v
}

/// Exact value of a sparse accumulator in grid units (2^-1074).
pub(crate) fn value_of_sparse(acc: &SparseAccumulator) -> BigInt {
    let w = acc.config().digit_width();
    let mut v = BigInt::from(0);
    for d in acc.digits() {
        v += BigInt::from(d.mantissa) << (d.index as u32 * w);
    }
    v
}
