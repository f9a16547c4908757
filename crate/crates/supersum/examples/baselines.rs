//! Where ordinary summation breaks down and exact summation does not.

use supersum::{compensated_sum, naive_sum, oracle_sum, sum_tree, ReductionPlan};
use supersum::{generate, DatasetKind, DatasetSpec};

fn main() -> supersum::Result<()> {
    // A hand-built instance first: the small terms vanish under naive
    // left-to-right addition.
    let small = [1e16, 1.0, 1.0, 1.0, 1.0, -1e16];
    let exact = oracle_sum(small.iter().copied())?;
    println!("hand case   naive={:<6} compensated={:<6} exact={}",
        naive_sum(small.iter().copied()),
        compensated_sum(small.iter().copied()),
        exact.value);
    assert_eq!(exact.value, 4.0);

    // Generated cancellation data with a huge exponent spread. Compensated
    // summation carries one extra term of precision; here that is not enough.
    let data = generate(&DatasetSpec {
        kind: DatasetKind::NearCancelled,
        n: 1_000_000,
        delta: 2000,
        seed: 1,
    })?;
    let exact = oracle_sum(data.iter().copied())?;
    let tree = sum_tree(&data, &ReductionPlan::new())?;
    let naive = naive_sum(data.iter().copied());
    let comp = compensated_sum(data.iter().copied());

    println!("n=10^6 cancellation, exponent spread 2000 octaves:");
    println!("  naive       = {naive:+.17e}");
    println!("  compensated = {comp:+.17e}");
    println!("  exact       = {:+.17e}", exact.value);
    assert_eq!(tree.value.to_bits(), exact.value.to_bits());
    println!("  naive off:       {}", naive.to_bits() != exact.value.to_bits());
    println!("  compensated off: {}", comp.to_bits() != exact.value.to_bits());
    Ok(())
}
