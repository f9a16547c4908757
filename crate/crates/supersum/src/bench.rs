//! Timing harness over the summation engines.
//!
//! A grid run generates each dataset once, times every requested engine on
//! it, and verifies each result bit-for-bit against the exact reference
//! unless told not to. Reports serialize to JSON via serde or to CSV.

use crate::accum::RoundedSum;
use crate::datasets::{generate, DatasetKind, DatasetSpec};
use crate::error::{Result, SumError};
use crate::extmem::{sum_external, MemoryBudget};
use crate::mapreduce::{run_job, JobConfig, ReducerAssignment};
use crate::oracle::{compensated_sum, naive_sum, oracle_sum};
use crate::parallel::{sum_tree, sum_truncated, ReductionPlan};
use serde::Serialize;
use std::path::PathBuf;
use std::time::Instant;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Algo {
    Naive,
    Compensated,
    Stream,
    Tree,
    Truncated,
    Extmem,
    Mapreduce,
    Oracle,
}

impl Algo {
    pub const ALL: [Algo; 8] = [
        Algo::Naive,
        Algo::Compensated,
        Algo::Stream,
        Algo::Tree,
        Algo::Truncated,
        Algo::Extmem,
        Algo::Mapreduce,
        Algo::Oracle,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Algo::Naive => "naive",
            Algo::Compensated => "compensated",
            Algo::Stream => "stream",
            Algo::Tree => "tree",
            Algo::Truncated => "truncated",
            Algo::Extmem => "extmem",
            Algo::Mapreduce => "mapreduce",
            Algo::Oracle => "oracle",
        }
    }

    pub fn from_name(name: &str) -> Option<Algo> {
        Algo::ALL.into_iter().find(|a| a.name() == name)
    }

    /// Whether the engine promises the correctly rounded value.
    pub fn is_exact(self) -> bool {
        !matches!(self, Algo::Naive | Algo::Compensated)
    }
}

/// Tuning knobs shared by the engines; each engine reads only what it uses.
#[derive(Clone, Debug)]
pub struct AlgoOpts {
    /// Worker threads for the tree engines. 0 picks the machine's count.
    pub workers: usize,
    pub reducers: usize,
    /// Leaf size for the tree engines, partition size for the shuffle round.
    pub chunk: usize,
    pub budget_bytes: u64,
    /// Spill directory for the external engine; a fresh temp dir when unset.
    pub tmpdir: Option<PathBuf>,
}

impl Default for AlgoOpts {
    fn default() -> Self {
        AlgoOpts {
            workers: 0,
            reducers: 4,
            chunk: 4096,
            budget_bytes: 1 << 20,
            tmpdir: None,
        }
    }
}

impl AlgoOpts {
    pub fn plan(&self) -> ReductionPlan {
        let plan = ReductionPlan::new().with_chunk(self.chunk);
        if self.workers == 0 {
            plan
        } else {
            plan.with_workers(self.workers)
        }
    }
}

/// What an engine produced: the exact engines report rounding metadata, the
/// error-prone baselines only a value.
#[derive(Clone, Copy, Debug)]
pub enum AlgoOutput {
    Rounded(RoundedSum),
    Plain(f64),
}

impl AlgoOutput {
    pub fn value(&self) -> f64 {
        match self {
            AlgoOutput::Rounded(r) => r.value,
            AlgoOutput::Plain(v) => *v,
        }
    }
}

/// Run one engine over `data`.
pub fn run_algo_output(algo: Algo, data: &[f64], opts: &AlgoOpts) -> Result<AlgoOutput> {
    let xs = data.iter().copied();
    let rounded = match algo {
        Algo::Naive => return Ok(AlgoOutput::Plain(naive_sum(xs))),
        Algo::Compensated => return Ok(AlgoOutput::Plain(compensated_sum(xs))),
        Algo::Stream => crate::extmem::sum_inmemory_stream(xs)?,
        Algo::Tree => sum_tree(data, &opts.plan())?,
        Algo::Truncated => sum_truncated(data, &opts.plan())?.result,
        Algo::Extmem => {
            let budget = MemoryBudget::new(opts.budget_bytes)?;
            match &opts.tmpdir {
                Some(dir) => sum_external(xs, &budget, dir)?,
                None => {
                    let dir = tempfile::tempdir().map_err(|e| SumError::Io {
                        path: std::env::temp_dir(),
                        source: e,
                    })?;
                    sum_external(xs, &budget, dir.path())?
                }
            }
        }
        Algo::Mapreduce => {
            let parts: Vec<&[f64]> = data.chunks(opts.chunk.max(1)).collect();
            let config = JobConfig {
                reducers: opts.reducers.max(1),
                assignment: ReducerAssignment::RoundRobin,
                dump_dir: None,
            };
            run_job(&parts, &config)?
        }
        Algo::Oracle => oracle_sum(xs)?,
    };
    Ok(AlgoOutput::Rounded(rounded))
}

/// Run one engine over `data` and return its value.
pub fn run_algo(algo: Algo, data: &[f64], opts: &AlgoOpts) -> Result<f64> {
    run_algo_output(algo, data, opts).map(|out| out.value())
}

#[derive(Clone, Debug, Serialize)]
pub struct BenchReport {
    pub algo: Algo,
    pub n: usize,
    pub kind: &'static str,
    pub delta: u32,
    pub threads: usize,
    pub seconds: f64,
    /// Input values consumed per second.
    pub throughput: f64,
    pub value_hex: String,
    /// Bit equality against the exact reference; absent when unverified.
    pub pass: Option<bool>,
}

#[derive(Clone, Debug)]
pub struct GridConfig {
    pub algos: Vec<Algo>,
    pub kinds: Vec<DatasetKind>,
    pub sizes: Vec<usize>,
    pub deltas: Vec<u32>,
    pub seed: u64,
    pub opts: AlgoOpts,
    pub verify: bool,
}

impl Default for GridConfig {
    fn default() -> Self {
        GridConfig {
            algos: Algo::ALL.to_vec(),
            kinds: vec![
                DatasetKind::UniformPositive,
                DatasetKind::MixedSign,
                DatasetKind::NearCancelled,
                DatasetKind::PairedZero,
            ],
            sizes: vec![100_000],
            deltas: vec![100],
            seed: 1,
            opts: AlgoOpts::default(),
            verify: true,
        }
    }
}

/// Time every engine on every dataset cell.
pub fn run_grid(config: &GridConfig) -> Result<Vec<BenchReport>> {
    let mut reports = Vec::new();
    for &kind in &config.kinds {
        for &n in &config.sizes {
            for &delta in &config.deltas {
                let spec = DatasetSpec { kind, n, delta, seed: config.seed };
                let data = generate(&spec)?;
                let expect = if config.verify {
                    Some(oracle_sum(data.iter().copied())?.value.to_bits())
                } else {
                    None
                };
                for &algo in &config.algos {
                    let start = Instant::now();
                    let value = run_algo(algo, &data, &config.opts)?;
                    let seconds = start.elapsed().as_secs_f64();
                    let threads = match algo {
                        Algo::Tree | Algo::Truncated => config.opts.plan().workers(),
                        _ => 1,
                    };
                    reports.push(BenchReport {
                        algo,
                        n,
                        kind: kind.name(),
                        delta,
                        threads,
                        seconds,
                        throughput: if seconds > 0.0 { n as f64 / seconds } else { f64::INFINITY },
                        value_hex: format!("{:#018x}", value.to_bits()),
                        pass: expect.map(|bits| bits == value.to_bits()),
                    });
                }
            }
        }
    }
    Ok(reports)
}

pub fn to_csv(reports: &[BenchReport]) -> String {
    let mut out = String::from("algo,n,kind,delta,threads,seconds,throughput,value_hex,pass\n");
    for r in reports {
        let pass = match r.pass {
            Some(true) => "yes",
            Some(false) => "no",
            None => "",
        };
        out.push_str(&format!(
            "{},{},{},{},{},{:.6},{:.1},{},{}\n",
            r.algo.name(),
            r.n,
            r.kind,
            r.delta,
            r.threads,
            r.seconds,
            r.throughput,
            r.value_hex,
            pass
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testutil::random_finite;

    #[test]
    fn every_exact_engine_matches_the_reference() {
        let mut s = 0xbe9cu64;
        let data: Vec<f64> = (0..500).map(|_| random_finite(&mut s)).collect();
        let want = oracle_sum(data.iter().copied()).unwrap().value.to_bits();
        let opts = AlgoOpts { workers: 2, chunk: 64, budget_bytes: 4096, ..AlgoOpts::default() };
        for algo in Algo::ALL {
            let got = run_algo(algo, &data, &opts).unwrap();
            if algo.is_exact() {
                assert_eq!(got.to_bits(), want, "{}", algo.name());
            }
        }
    }

    #[test]
    fn names_round_trip() {
        for algo in Algo::ALL {
            assert_eq!(Algo::from_name(algo.name()), Some(algo));
        }
        assert_eq!(Algo::from_name("fast"), None);
    }

    #[test]
    fn empty_input_sums_to_zero_everywhere() {
        let opts = AlgoOpts::default();
        for algo in Algo::ALL {
            assert_eq!(run_algo(algo, &[], &opts).unwrap(), 0.0, "{}", algo.name());
        }
    }

    #[test]
    fn grid_report_covers_the_whole_cross_product() {
        let config = GridConfig {
            algos: vec![Algo::Stream, Algo::Naive],
            kinds: vec![DatasetKind::MixedSign],
            sizes: vec![50, 200],
            deltas: vec![10, 100],
            seed: 9,
            opts: AlgoOpts::default(),
            verify: true,
        };
        let reports = run_grid(&config).unwrap();
        assert_eq!(reports.len(), 2 * 2 * 2);
        for r in &reports {
            assert!(r.pass.is_some());
            if r.algo.is_exact() {
                assert_eq!(r.pass, Some(true));
            }
            assert!(r.value_hex.starts_with("0x") && r.value_hex.len() == 18);
        }
        let csv = to_csv(&reports);
        assert_eq!(csv.lines().count(), reports.len() + 1);
        assert!(csv.lines().all(|l| l.matches(',').count() == 8));
    }

    #[test]
    fn reports_serialize_to_json() {
        let config = GridConfig {
            algos: vec![Algo::Tree],
            kinds: vec![DatasetKind::UniformPositive],
            sizes: vec![32],
            deltas: vec![10],
            seed: 3,
            opts: AlgoOpts::default(),
            verify: false,
        };
        let reports = run_grid(&config).unwrap();
        let json = serde_json::to_string(&reports).unwrap();
        assert!(json.contains("\"algo\":\"tree\""));
        assert!(json.contains("\"pass\":null"));
    }
}
