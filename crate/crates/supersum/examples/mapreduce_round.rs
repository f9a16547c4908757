//! One combine/shuffle/reduce round over partitioned input, dumping the
//! shuffle messages so they can be inspected on disk.

use supersum::{
    generate, oracle_sum, run_job_with_stats, DatasetKind, DatasetSpec, JobConfig,
    ReducerAssignment,
};

fn main() -> supersum::Result<()> {
    let data = generate(&DatasetSpec {
        kind: DatasetKind::MixedSign,
        n: 90_000,
        delta: 200,
        seed: 31,
    })?;
    // Partition as a real ingest would: fixed-size splits of the input.
    let partitions: Vec<&[f64]> = data.chunks(8192).collect();

    let dump = tempfile::tempdir().expect("temp dir");
    let config = JobConfig {
        reducers: 3,
        assignment: ReducerAssignment::Random { seed: 99 },
        dump_dir: Some(dump.path().to_path_buf()),
    };
    let (sum, stats) = run_job_with_stats(&partitions, &config)?;

    println!("partitions     = {}", partitions.len());
    println!("messages       = {}", stats.messages);
    println!("shuffled bytes = {}", stats.shuffled_bytes);
    println!("per reducer    = {:?}", stats.per_reducer);
    println!("value          = {:+.17e}", sum.value);

    let reference = oracle_sum(data.iter().copied())?;
    assert_eq!(sum.value.to_bits(), reference.value.to_bits());

    let mut dumped: Vec<_> = std::fs::read_dir(dump.path())
        .expect("read dump dir")
        .map(|e| e.expect("dir entry").file_name().into_string().unwrap())
        .collect();
    dumped.sort();
    println!("dumped {} messages, first: {}", dumped.len(), dumped[0]);
    Ok(())
}
