//! Seeded 64-bit generator (splitmix64). Hand-rolled so generated datasets and
//! shuffle assignments are byte-stable across platforms and dependency bumps.

pub(crate) fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9e37_79b9_7f4a_7c15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Uniform draw from [0, bound) without modulo bias (fixed-point multiply).
pub(crate) fn bounded(state: &mut u64, bound: u64) -> u64 {
    debug_assert!(bound > 0);
    ((splitmix64(state) as u128 * bound as u128) >> 64) as u64
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn splitmix_reference_stream() {
        // First outputs for seed 0, cross-checked against the reference
        // implementation; pins the stream golden tests depend on.
        let mut s = 0u64;
        assert_eq!(splitmix64(&mut s), 0xe220a8397b1dcdaf);
        assert_eq!(splitmix64(&mut s), 0x6e789e6aa1b965f4);
        assert_eq!(splitmix64(&mut s), 0x06c45d188009454f);
    }

    #[test]
    fn bounded_stays_in_range() {
        let mut s = 42u64;
        for _ in 0..1000 {
            assert!(bounded(&mut s, 7) < 7);
        }
    }
}
