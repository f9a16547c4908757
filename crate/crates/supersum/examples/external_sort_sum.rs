//! Summing a stream that is not allowed to fit in memory: digits spill to
//! sorted runs on disk and merge back with a bounded record budget.

use supersum::{generate, sum_external_with_stats, DatasetKind, DatasetSpec, MemoryBudget};

fn main() -> supersum::Result<()> {
    let data = generate(&DatasetSpec {
        kind: DatasetKind::MixedSign,
        n: 120_000,
        delta: 300,
        seed: 21,
    })?;
    let dir = tempfile::tempdir().expect("temp dir");

    // A few kilobytes of working memory for a dataset needing megabytes.
    let budget = MemoryBudget::new(24 * 1024)?;
    let (sum, stats) = sum_external_with_stats(data.iter().copied(), &budget, dir.path())?;

    println!("value            = {:+.17e}", sum.value);
    println!("bits             = {:#018x}", sum.value.to_bits());
    println!("runs created     = {}", stats.runs_created);
    println!("merge passes     = {}", stats.merge_passes);
    println!("resident records = {} of {} budgeted", stats.peak_resident_records, stats.budget_records);
    assert!(stats.peak_resident_records <= stats.budget_records);

    // Same bits as the fully in-memory path.
    let reference = supersum::sum_inmemory_stream(data.iter().copied())?;
    assert_eq!(sum.value.to_bits(), reference.value.to_bits());
    println!("matches the in-memory engine bit for bit");
    Ok(())
}
