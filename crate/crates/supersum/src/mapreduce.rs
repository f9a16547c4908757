//! A map/shuffle/reduce round over partitioned input, with a stable wire
//! format for accumulator state.
//!
//! Each partition combines locally into a dense accumulator, regularizes,
//! and ships its nonzero digits as one message. Messages route to reducers
//! either round-robin or by a seeded hash draw; reducers merge what they
//! receive and a final merge across reducers produces the rounded sum. Every
//! stage is deterministic given the job config, including the shuffle.
//!
//! The wire format is versioned and self-describing enough to reject a
//! mismatched peer: magic "SSAC", format version, digit width, reserved
//! flags, digit count, then the digits ascending by index, each as a little
//! endian i32 index and i64 mantissa.

use crate::accum::{DenseAccumulator, Digit, RadixConfig, RoundedSum};
use crate::error::{DecodeError, Result, SumError};
use crate::rng::splitmix64;
use crate::sparse::{merge_add, SparseAccumulator};
use std::path::PathBuf;

const MAGIC: &[u8; 4] = b"SSAC";
const WIRE_VERSION: u8 = 1;
const HEADER_BYTES: usize = 12;
const DIGIT_BYTES: usize = 12;

/// Serialize an accumulator's digit state. Only the digits travel: window
/// bookkeeping stays local to the sender.
pub fn encode_accumulator(acc: &SparseAccumulator) -> Vec<u8> {
    let digits = acc.digits();
    let mut out = Vec::with_capacity(HEADER_BYTES + digits.len() * DIGIT_BYTES);
    out.extend_from_slice(MAGIC);
    out.push(WIRE_VERSION);
    out.push(acc.config().digit_width() as u8);
    out.extend_from_slice(&0u16.to_le_bytes());
    out.extend_from_slice(&(digits.len() as u32).to_le_bytes());
    for d in digits {
        out.extend_from_slice(&d.index.to_le_bytes());
        out.extend_from_slice(&d.mantissa.to_le_bytes());
    }
    out
}

/// Parse a message produced by [`encode_accumulator`], insisting it matches
/// `config`. The byte slice must hold exactly the declared digit count.
pub fn decode_accumulator(bytes: &[u8], config: RadixConfig) -> Result<SparseAccumulator> {
    if bytes.len() < HEADER_BYTES {
        return Err(DecodeError::Truncated.into());
    }
    if &bytes[0..4] != MAGIC {
        return Err(DecodeError::BadMagic.into());
    }
    if bytes[4] != WIRE_VERSION {
        return Err(DecodeError::BadVersion(bytes[4]).into());
    }
    let found = bytes[5] as u32;
    if found != config.digit_width() {
        return Err(DecodeError::WidthMismatch { expected: config.digit_width(), found }.into());
    }
    let count = u32::from_le_bytes(bytes[8..12].try_into().unwrap()) as usize;
    if bytes.len() != HEADER_BYTES + count * DIGIT_BYTES {
        return Err(DecodeError::Truncated.into());
    }
    let mut digits = Vec::with_capacity(count);
    let mut prev = i32::MIN;
    for k in 0..count {
        let at = HEADER_BYTES + k * DIGIT_BYTES;
        let index = i32::from_le_bytes(bytes[at..at + 4].try_into().unwrap());
        let mantissa = i64::from_le_bytes(bytes[at + 4..at + 12].try_into().unwrap());
        if index <= prev {
            return Err(DecodeError::UnsortedIndices.into());
        }
        prev = index;
        digits.push(Digit { index, mantissa });
    }
    SparseAccumulator::from_digits(config, digits)
}

/// How shuffle messages map to reducers.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ReducerAssignment {
    /// Message i goes to reducer i mod p.
    RoundRobin,
    /// One seeded draw per message, mapped onto the reducer range. Skewed
    /// loads happen, as they do in practice; the seed makes them repeatable.
    Random { seed: u64 },
}

/// Shape of one summation round.
#[derive(Clone, Debug)]
pub struct JobConfig {
    pub reducers: usize,
    pub assignment: ReducerAssignment,
    /// When set, every shuffle message is also written here, one file per
    /// partition, named map_{partition}_reduce_{reducer}.bin.
    pub dump_dir: Option<PathBuf>,
}

impl JobConfig {
    pub fn new(reducers: usize) -> Self {
        JobConfig {
            reducers,
            assignment: ReducerAssignment::RoundRobin,
            dump_dir: None,
        }
    }
}

/// Shuffle accounting for one run.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct JobStats {
    pub messages: usize,
    pub shuffled_bytes: u64,
    /// Messages received per reducer.
    pub per_reducer: Vec<usize>,
}

/// Run one combine/shuffle/reduce round and round the total.
pub fn run_job(partitions: &[impl AsRef<[f64]>], config: &JobConfig) -> Result<RoundedSum> {
    run_job_with_stats(partitions, config).map(|(r, _)| r)
}

pub fn run_job_with_stats(
    partitions: &[impl AsRef<[f64]>],
    config: &JobConfig,
) -> Result<(RoundedSum, JobStats)> {
    if config.reducers == 0 {
        return Err(SumError::InvalidSpec("a round needs at least one reducer".into()));
    }
    let radix = RadixConfig::binary64();
    let p = config.reducers;
    let mut stats = JobStats { per_reducer: vec![0; p], ..JobStats::default() };
    let mut draw_state = match config.assignment {
        ReducerAssignment::Random { seed } => seed,
        ReducerAssignment::RoundRobin => 0,
    };

    let mut inboxes: Vec<Vec<Vec<u8>>> = vec![Vec::new(); p];
    let mut n = 0u64;
    for (i, part) in partitions.iter().enumerate() {
        let part = part.as_ref();
        n += part.len() as u64;
        // Combine: local pre-aggregation to one regularized accumulator.
        let mut acc = DenseAccumulator::new(radix);
        for &x in part {
            acc.add_scalar(x)?;
        }
        acc.renormalize()?;
        let message = encode_accumulator(&SparseAccumulator::from_dense(&acc));

        let reducer = match config.assignment {
            ReducerAssignment::RoundRobin => i % p,
            ReducerAssignment::Random { .. } => {
                let key = splitmix64(&mut draw_state);
                ((key as u128 * p as u128) >> 64) as usize
            }
        };
        if let Some(dir) = &config.dump_dir {
            let path = dir.join(format!("map_{i:04}_reduce_{reducer:02}.bin"));
            std::fs::write(&path, &message).map_err(|e| SumError::io(&path, e))?;
        }
        stats.messages += 1;
        stats.shuffled_bytes += message.len() as u64;
        stats.per_reducer[reducer] += 1;
        inboxes[reducer].push(message);
    }

    // Reduce: merge each inbox, then merge across reducers in fixed order.
    let mut total = SparseAccumulator::new(radix);
    for inbox in &inboxes {
        let mut acc = SparseAccumulator::new(radix);
        for message in inbox {
            acc = merge_add(&acc, &decode_accumulator(message, radix)?)?;
        }
        total = merge_add(&total, &acc)?;
    }
    Ok((total.round(n)?, stats))
}
