//! Command line front end: generate datasets, sum them with a chosen engine,
//! verify engines against the exact reference, and run the timing grid.
//!
//! Exit codes: 0 success, 1 verification mismatch, 2 bad usage or bad data,
//! 3 I/O failure.

use clap::{Args, Parser, Subcommand, ValueEnum};
use std::io::{Read, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use supersum::{
    generate, nonfinite_shortcut, oracle_sum, run_algo_output, run_grid, to_csv, Algo, AlgoOpts,
    AlgoOutput, DatasetKind, DatasetSpec, GridConfig, Result, RoundDirection, RoundedSum,
    SumError,
};

#[derive(Parser)]
#[command(name = "supersum", version, about = "Correctly rounded summation of binary64 streams")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a dataset with a known exact sum profile
    Gen(GenArgs),
    /// Sum values and print the correctly rounded total
    Sum(SumArgs),
    /// Check engines bit-for-bit against the exact reference
    Verify(VerifyArgs),
    /// Time engines over a grid of datasets
    Bench(BenchArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum WireFormat {
    /// Raw little endian 8-byte doubles
    Bin,
    /// One decimal value per line
    Text,
}

#[derive(Args)]
struct GenArgs {
    /// Dataset family, by index 1..=4 or name
    #[arg(long, value_parser = parse_kind)]
    kind: DatasetKind,
    #[arg(long)]
    n: usize,
    /// Exponent spread in octaves
    #[arg(long, default_value_t = 100)]
    delta: u32,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long, value_enum, default_value_t = WireFormat::Bin)]
    format: WireFormat,
    /// Destination file; stdout when omitted
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct EngineKnobs {
    /// Worker threads for the tree engines; 0 uses every core
    #[arg(long, default_value_t = 0)]
    threads: usize,
    /// Tree leaf size, also the shuffle partition size
    #[arg(long, default_value_t = 4096)]
    chunk: usize,
    #[arg(long, default_value_t = 4)]
    reducers: usize,
    /// Memory budget for the external engine
    #[arg(long, default_value_t = 1 << 20)]
    budget_bytes: u64,
    /// Spill directory for the external engine
    #[arg(long)]
    tmpdir: Option<PathBuf>,
}

impl EngineKnobs {
    fn opts(&self) -> AlgoOpts {
        AlgoOpts {
            workers: self.threads,
            reducers: self.reducers,
            chunk: self.chunk,
            budget_bytes: self.budget_bytes,
            tmpdir: self.tmpdir.clone(),
        }
    }
}

#[derive(Args)]
struct SumArgs {
    /// Input file; stdin when omitted
    input: Option<PathBuf>,
    #[arg(long, value_parser = parse_algo, default_value = "stream")]
    algo: Algo,
    #[arg(long, value_enum, default_value_t = WireFormat::Bin)]
    format: WireFormat,
    #[command(flatten)]
    knobs: EngineKnobs,
    /// Follow IEEE semantics for NaN and infinities instead of rejecting them
    #[arg(long)]
    allow_nonfinite: bool,
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct VerifyArgs {
    /// Input file; stdin when omitted
    input: Option<PathBuf>,
    /// Engines to check; defaults to every exact engine
    #[arg(long, value_delimiter = ',', value_parser = parse_algo)]
    algos: Vec<Algo>,
    #[arg(long, value_enum, default_value_t = WireFormat::Bin)]
    format: WireFormat,
    #[command(flatten)]
    knobs: EngineKnobs,
}

#[derive(Args)]
struct BenchArgs {
    #[arg(long, value_delimiter = ',', value_parser = parse_algo)]
    algos: Vec<Algo>,
    #[arg(long, value_delimiter = ',', value_parser = parse_kind)]
    kinds: Vec<DatasetKind>,
    #[arg(long, value_delimiter = ',', default_values_t = [100_000usize])]
    sizes: Vec<usize>,
    #[arg(long, value_delimiter = ',', default_values_t = [100u32])]
    deltas: Vec<u32>,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[command(flatten)]
    knobs: EngineKnobs,
    /// Skip the bit-equality check against the exact reference
    #[arg(long)]
    no_verify: bool,
    /// Emit JSON instead of CSV
    #[arg(long)]
    json: bool,
}

fn parse_kind(s: &str) -> std::result::Result<DatasetKind, String> {
    if let Ok(k) = s.parse::<u8>() {
        return DatasetKind::from_index(k).map_err(|e| e.to_string());
    }
    [
        DatasetKind::UniformPositive,
        DatasetKind::MixedSign,
        DatasetKind::NearCancelled,
        DatasetKind::PairedZero,
    ]
    .into_iter()
    .find(|k| k.name() == s)
    .ok_or_else(|| format!("unknown dataset kind {s:?}; use 1..=4 or a family name"))
}

fn parse_algo(s: &str) -> std::result::Result<Algo, String> {
    Algo::from_name(s).ok_or_else(|| {
        let names: Vec<&str> = Algo::ALL.iter().map(|a| a.name()).collect();
        format!("unknown engine {s:?}; one of {}", names.join(", "))
    })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                SumError::Io { .. } => ExitCode::from(3),
                _ => ExitCode::from(2),
            }
        }
    }
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Gen(args) => {
            let spec = DatasetSpec {
                kind: args.kind,
                n: args.n,
                delta: args.delta,
                seed: args.seed,
            };
            let values = generate(&spec)?;
            write_values(&values, args.output.as_deref(), args.format)?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Sum(args) => {
            let values = read_values(args.input.as_deref(), args.format)?;
            let n = values.len() as u64;
            let output = if args.allow_nonfinite {
                match nonfinite_shortcut(values.iter().copied()) {
                    Some(v) => AlgoOutput::Plain(v),
                    None => run_algo_output(args.algo, &values, &args.knobs.opts())?,
                }
            } else {
                run_algo_output(args.algo, &values, &args.knobs.opts())?
            };
            print_sum(&output, n, args.json);
            Ok(ExitCode::SUCCESS)
        }
        Command::Verify(args) => {
            let values = read_values(args.input.as_deref(), args.format)?;
            let algos = if args.algos.is_empty() {
                vec![Algo::Stream, Algo::Tree, Algo::Truncated, Algo::Extmem, Algo::Mapreduce]
            } else {
                args.algos
            };
            let want = oracle_sum(values.iter().copied())?;
            let opts = args.knobs.opts();
            let mut failed = false;
            for algo in algos {
                let got = run_algo_output(algo, &values, &opts)?.value();
                if got.to_bits() == want.value.to_bits() {
                    println!("{}: ok", algo.name());
                } else {
                    failed = true;
                    println!(
                        "{}: MISMATCH got {:#018x} want {:#018x}",
                        algo.name(),
                        got.to_bits(),
                        want.value.to_bits()
                    );
                }
            }
            Ok(if failed { ExitCode::from(1) } else { ExitCode::SUCCESS })
        }
        Command::Bench(args) => {
            let config = GridConfig {
                algos: if args.algos.is_empty() { Algo::ALL.to_vec() } else { args.algos },
                kinds: if args.kinds.is_empty() {
                    vec![
                        DatasetKind::UniformPositive,
                        DatasetKind::MixedSign,
                        DatasetKind::NearCancelled,
                        DatasetKind::PairedZero,
                    ]
                } else {
                    args.kinds
                },
                sizes: args.sizes,
                deltas: args.deltas,
                seed: args.seed,
                opts: args.knobs.opts(),
                verify: !args.no_verify,
            };
            let reports = run_grid(&config)?;
            if args.json {
                println!("{}", serde_json::to_string_pretty(&reports).expect("reports are plain data"));
            } else {
                print!("{}", to_csv(&reports));
            }
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn print_sum(output: &AlgoOutput, n: u64, json: bool) {
    let value = output.value();
    let hex = format!("{:#018x}", value.to_bits());
    let (exact, direction) = match output {
        AlgoOutput::Rounded(RoundedSum { exact, direction, .. }) => {
            let d = match direction {
                RoundDirection::Exact => "exact",
                RoundDirection::RoundedDown => "down",
                RoundDirection::RoundedUp => "up",
            };
            (Some(*exact), Some(d))
        }
        // A baseline engine or a nonfinite shortcut: no rounding claim made.
        AlgoOutput::Plain(_) => (None, None),
    };
    if json {
        let object = serde_json::json!({
            "value_hex": hex,
            "value": value,
            "exact": exact,
            "direction": direction,
            "n": n,
        });
        println!("{object}");
    } else {
        println!("{hex} {value}");
    }
}

fn read_values(path: Option<&Path>, format: WireFormat) -> Result<Vec<f64>> {
    let bytes = match path {
        Some(p) => std::fs::read(p).map_err(|e| SumError::Io { path: p.into(), source: e })?,
        None => {
            let mut buf = Vec::new();
            std::io::stdin()
                .read_to_end(&mut buf)
                .map_err(|e| SumError::Io { path: "<stdin>".into(), source: e })?;
            buf
        }
    };
    match format {
        WireFormat::Bin => {
            if bytes.len() % 8 != 0 {
                return Err(SumError::InvalidSpec(format!(
                    "binary input is {} bytes, not a multiple of 8",
                    bytes.len()
                )));
            }
            Ok(bytes
                .chunks_exact(8)
                .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
                .collect())
        }
        WireFormat::Text => {
            let text = String::from_utf8(bytes)
                .map_err(|_| SumError::InvalidSpec("text input is not UTF-8".into()))?;
            let mut values = Vec::new();
            for (i, line) in text.lines().enumerate() {
                let line = line.trim();
                if line.is_empty() {
                    continue;
                }
                let v: f64 = line.parse().map_err(|_| {
                    SumError::InvalidSpec(format!("line {}: cannot parse {line:?}", i + 1))
                })?;
                values.push(v);
            }
            Ok(values)
        }
    }
}

fn write_values(values: &[f64], path: Option<&Path>, format: WireFormat) -> Result<()> {
    let mut encoded = Vec::with_capacity(values.len() * 8);
    match format {
        WireFormat::Bin => {
            for v in values {
                encoded.extend_from_slice(&v.to_le_bytes());
            }
        }
        WireFormat::Text => {
            for v in values {
                encoded.extend_from_slice(format!("{v}\n").as_bytes());
            }
        }
    }
    match path {
        Some(p) => {
            std::fs::write(p, &encoded).map_err(|e| SumError::Io { path: p.into(), source: e })
        }
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(&encoded)
                .and_then(|_| out.flush())
                .map_err(|e| SumError::Io { path: "<stdout>".into(), source: e })
        }
    }
}
