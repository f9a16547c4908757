//! The adaptive engine keeps only the top accumulator digits and widens its
//! window until the rounding is provably unaffected by what it dropped.

use supersum::{
    generate, oracle_sum, sum_truncated, DatasetKind, DatasetSpec, ReductionPlan, StopReason,
};

fn main() -> supersum::Result<()> {
    let plan = ReductionPlan::new().with_workers(1).with_chunk(4096);
    for (label, kind, delta) in [
        ("benign, all positive", DatasetKind::UniformPositive, 40),
        ("mixed signs", DatasetKind::MixedSign, 400),
        ("heavy cancellation", DatasetKind::NearCancelled, 1200),
    ] {
        let data = generate(&DatasetSpec { kind, n: 100_000, delta, seed: 5 })?;
        let report = sum_truncated(&data, &plan)?;
        let reference = oracle_sum(data.iter().copied())?;
        assert_eq!(report.result.value.to_bits(), reference.value.to_bits());
        let stop = match report.stopped_by {
            StopReason::Untruncated => "window held every active digit",
            StopReason::StoppingCondition => "dropped mass provably below rounding",
        };
        println!(
            "{label:22} passes={} window={:2} digits  value={:+.6e}  [{stop}]",
            report.iterations, report.final_r, report.result.value
        );
    }
    Ok(())
}
