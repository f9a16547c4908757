//! The parallel tree reduction returns the same bits for any worker count.

use supersum::{generate, sum_tree, DatasetKind, DatasetSpec, ReductionPlan};

fn main() -> supersum::Result<()> {
    let data = generate(&DatasetSpec {
        kind: DatasetKind::NearCancelled,
        n: 200_000,
        delta: 60,
        seed: 11,
    })?;

    let mut first = None;
    for workers in [1, 2, 4, 8] {
        let plan = ReductionPlan::new().with_workers(workers).with_chunk(1024);
        let sum = sum_tree(&data, &plan)?;
        println!("workers={workers}  value={:+.17e}  bits={:#018x}", sum.value, sum.value.to_bits());
        match first {
            None => first = Some(sum.value.to_bits()),
            Some(bits) => assert_eq!(bits, sum.value.to_bits()),
        }
    }
    println!("identical bits for every worker count");
    Ok(())
}
