//! Sum a short stream exactly and inspect the rounding metadata.

use supersum::{DenseAccumulator, RadixConfig, RoundDirection};

fn main() -> supersum::Result<()> {
    // 0.1 + 0.2 in binary64 is famously not 0.3. The accumulator holds the
    // exact sum internally and rounds once at the end.
    let values = [0.1, 0.2];
    let mut acc = DenseAccumulator::new(RadixConfig::binary64());
    for &x in &values {
        acc.add_scalar(x)?;
    }
    let sum = acc.finish_and_round(values.len() as u64)?;

    println!("value      = {}", sum.value);
    println!("bits       = {:#018x}", sum.value.to_bits());
    println!("exact      = {}", sum.exact);
    println!("direction  = {:?}", sum.direction);
    assert_eq!(sum.value, 0.30000000000000004);
    assert_eq!(sum.direction, RoundDirection::RoundedUp);

    // A sum that cancels completely is still exact.
    let mut acc = DenseAccumulator::new(RadixConfig::binary64());
    for x in [1e308, 3.5, -1e308, -3.5] {
        acc.add_scalar(x)?;
    }
    let sum = acc.finish_and_round(4)?;
    println!("cancelled  = {} (exact = {})", sum.value, sum.exact);
    assert_eq!(sum.value, 0.0);
    assert!(sum.exact);
    Ok(())
}
