//! Summation of streams that do not fit in memory.
//!
//! The pipeline is an external distribution sort specialized to digit
//! records. Incoming doubles are split into (index, mantissa) records and
//! buffered; each full buffer is sorted by index, compacted, and written as a
//! sorted run file. Runs merge fan-at-a-time until one k-way pass can feed
//! the final ascending scan, which resolves carries through a four-slot
//! sliding window and emits each digit position exactly once, already in
//! balanced form. The closing carry sweep over those digits is asserted to be
//! a no-op on every run; the whole pipeline's correctness funnels through
//! that invariant.
//!
//! Resident memory is bounded by a [`MemoryBudget`]: the sort block, the
//! merge read buffers, and the output buffer all derive from it.

use crate::accum::{decompose_into, DenseAccumulator, Digit, RadixConfig, RoundedSum};
use crate::error::{Result, SumError};
use std::cmp::Reverse;
use std::collections::BinaryHeap;
use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

/// Bytes per digit record on disk: i32 index + i64 mantissa, little endian.
pub const RECORD_BYTES: usize = 12;

/// Resident-memory contract for [`sum_external`].
///
/// `bytes` caps every buffer the pipeline allocates, measured in records of
/// [`RECORD_BYTES`]. The sort block takes 1/16 of the record budget, which
/// fixes the merge fan-in at 8 for derived budgets.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct MemoryBudget {
    bytes: u64,
    block_records: usize,
}

impl MemoryBudget {
    pub fn new(bytes: u64) -> Result<Self> {
        let block = (bytes as usize) / (RECORD_BYTES * 16);
        if block < 2 {
            return Err(SumError::BudgetTooSmall {
                required: (RECORD_BYTES * 32) as u64,
                given: bytes,
            });
        }
        Ok(MemoryBudget { bytes, block_records: block })
    }

    /// Explicit sort-block size, for driving the run and merge machinery with
    /// small inputs. The budget must still hold two blocks.
    pub fn with_block(bytes: u64, block_records: usize) -> Result<Self> {
        let required = (2 * block_records.max(1) * RECORD_BYTES) as u64;
        if block_records == 0 || bytes < required {
            return Err(SumError::BudgetTooSmall { required, given: bytes });
        }
        Ok(MemoryBudget { bytes, block_records })
    }

    pub fn bytes(&self) -> u64 {
        self.bytes
    }

    /// Total records the budget pays for.
    pub fn budget_records(&self) -> usize {
        (self.bytes as usize) / RECORD_BYTES
    }

    pub fn block_records(&self) -> usize {
        self.block_records
    }

    /// Runs merged per pass.
    pub fn fan_in(&self) -> usize {
        (self.budget_records() / (2 * self.block_records)).max(2)
    }

    /// Records per merge read buffer: fan read buffers plus one output block
    /// stay within half the budget.
    fn read_buffer_records(&self) -> usize {
        (self.block_records / self.fan_in()).max(1)
    }
}

/// What one external run did, for budget and shape assertions.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct ExtmemStats {
    /// Run files written, initial sort runs and intermediate merges alike.
    pub runs_created: usize,
    /// Merge sweeps executed, the final scan-feeding pass included.
    pub merge_passes: usize,
    /// Largest number of records resident in pipeline buffers at once.
    pub peak_resident_records: usize,
    /// Records the budget allows resident.
    pub budget_records: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
struct Record {
    index: i32,
    mantissa: i64,
}

fn write_record(w: &mut impl Write, rec: &Record) -> std::io::Result<()> {
    w.write_all(&rec.index.to_le_bytes())?;
    w.write_all(&rec.mantissa.to_le_bytes())
}

fn read_record(r: &mut impl Read) -> std::io::Result<Option<Record>> {
    let mut buf = [0u8; RECORD_BYTES];
    let mut filled = 0;
    while filled < RECORD_BYTES {
        let k = r.read(&mut buf[filled..])?;
        if k == 0 {
            if filled == 0 {
                return Ok(None);
            }
            return Err(std::io::Error::new(
                std::io::ErrorKind::UnexpectedEof,
                "truncated digit record",
            ));
        }
        filled += k;
    }
    Ok(Some(Record {
        index: i32::from_le_bytes(buf[0..4].try_into().unwrap()),
        mantissa: i64::from_le_bytes(buf[4..12].try_into().unwrap()),
    }))
}

/// Mantissa magnitude at which pending per-index sums split off a radix
/// carry. Far below i64 range, far above any single regularized digit.
const SPILL_LIMIT: i64 = 1 << 62;

/// Sort a block by index (stable, preserving arrival order) and compact
/// adjacent records of equal index while the running sum stays clear of the
/// spill limit.
fn sort_and_compact(block: &mut Vec<Record>) {
    block.sort_by_key(|r| r.index);
    let mut out = Vec::with_capacity(block.len().min(64));
    for &rec in block.iter() {
        match out.last_mut() {
            Some(Record { index, mantissa })
                if *index == rec.index
                    && (*mantissa + rec.mantissa).abs() < SPILL_LIMIT =>
            {
                *mantissa += rec.mantissa;
            }
            _ => out.push(rec),
        }
    }
    *block = out;
}

struct RunWriter {
    path: PathBuf,
    out: BufWriter<File>,
}

fn run_path(dir: &Path, id: usize) -> PathBuf {
    dir.join(format!("run_{id:04}.cmp"))
}

fn create_run(dir: &Path, id: usize, buffer_bytes: usize) -> Result<RunWriter> {
    let path = run_path(dir, id);
    let file = File::create(&path).map_err(|e| SumError::io(&path, e))?;
    Ok(RunWriter {
        out: BufWriter::with_capacity(buffer_bytes.max(RECORD_BYTES), file),
        path,
    })
}

impl RunWriter {
    fn write(&mut self, rec: &Record) -> Result<()> {
        write_record(&mut self.out, rec).map_err(|e| SumError::io(&self.path, e))
    }

    fn finish(mut self) -> Result<PathBuf> {
        self.out.flush().map_err(|e| SumError::io(&self.path, e))?;
        Ok(self.path)
    }
}

struct RunReader {
    path: PathBuf,
    input: BufReader<File>,
}

impl RunReader {
    fn open(path: PathBuf, buffer_bytes: usize) -> Result<Self> {
        let file = File::open(&path).map_err(|e| SumError::io(&path, e))?;
        Ok(RunReader {
            input: BufReader::with_capacity(buffer_bytes.max(RECORD_BYTES), file),
            path,
        })
    }

    fn next(&mut self) -> Result<Option<Record>> {
        read_record(&mut self.input).map_err(|e| SumError::io(&self.path, e))
    }
}

/// Stream the records of `paths` in index order into `emit`. Ties pop in run
/// order, keeping the stream deterministic.
fn merge_runs(
    paths: &[PathBuf],
    read_buffer_bytes: usize,
    mut emit: impl FnMut(Record) -> Result<()>,
) -> Result<()> {
    let mut readers = Vec::with_capacity(paths.len());
    for p in paths {
        readers.push(RunReader::open(p.clone(), read_buffer_bytes)?);
    }
    let mut heap: BinaryHeap<Reverse<(i32, usize, i64)>> = BinaryHeap::new();
    for (ord, r) in readers.iter_mut().enumerate() {
        if let Some(rec) = r.next()? {
            heap.push(Reverse((rec.index, ord, rec.mantissa)));
        }
    }
    while let Some(Reverse((index, ord, mantissa))) = heap.pop() {
        emit(Record { index, mantissa })?;
        if let Some(rec) = readers[ord].next()? {
            heap.push(Reverse((rec.index, ord, rec.mantissa)));
        }
    }
    Ok(())
}

/// Width of the carry window. Incoming indices are held at most at
/// `base + WINDOW - 2` so a spill from any loaded slot still lands inside.
const WINDOW: usize = 4;

/// Ascending-index carry resolver. Accepts records in nondecreasing index
/// order with arbitrary repetition, emits each digit position at most once,
/// in balanced form, ascending.
struct AscendingScan {
    config: RadixConfig,
    base: i32,
    slots: [i64; WINDOW],
    started: bool,
    last_index: i32,
    digits: Vec<Digit>,
}

impl AscendingScan {
    fn new(config: RadixConfig) -> Self {
        AscendingScan {
            config,
            base: 0,
            slots: [0; WINDOW],
            started: false,
            last_index: i32::MIN,
            digits: Vec::new(),
        }
    }

    // `t` can sit anywhere in i64: a loaded slot plus one compacted record
    // reaches almost 2^63. Euclidean division keeps every intermediate in
    // range where forming t - rem would overflow.
    fn balanced_split(&self, t: i64) -> (i64, i64) {
        let r = self.config.radix();
        let half = r / 2;
        let mut carry = t.div_euclid(r);
        let mut rem = t.rem_euclid(r);
        if rem >= half {
            rem -= r;
            carry += 1;
        }
        (rem, carry)
    }

    /// Emit the front slot as a balanced digit; its carry folds into the next
    /// slot before that one is ever finalized.
    fn slide(&mut self) -> Result<()> {
        let (rem, carry) = self.balanced_split(self.slots[0]);
        if rem != 0 {
            if self.base as usize >= self.config.digit_count() {
                return Err(SumError::CapacityOverflow);
            }
            self.digits.push(Digit { index: self.base, mantissa: rem });
        }
        self.slots.rotate_left(1);
        self.slots[WINDOW - 1] = 0;
        self.slots[0] += carry;
        self.base += 1;
        Ok(())
    }

    fn push(&mut self, rec: Record) -> Result<()> {
        debug_assert!(rec.index >= self.last_index, "scan input must ascend");
        self.last_index = rec.index;
        if rec.index < 0 || rec.index as usize >= self.config.digit_count() {
            return Err(SumError::IndexOutOfRange { index: rec.index });
        }
        if !self.started {
            self.started = true;
            self.base = rec.index;
        }
        while rec.index > self.base + (WINDOW as i32 - 2) {
            self.slide()?;
        }
        let j = (rec.index - self.base) as usize;
        self.slots[j] += rec.mantissa;
        if self.slots[j].abs() >= SPILL_LIMIT {
            let (rem, carry) = self.balanced_split(self.slots[j]);
            self.slots[j] = rem;
            self.slots[j + 1] += carry;
        }
        Ok(())
    }

    fn finish(mut self) -> Result<Vec<Digit>> {
        while self.slots != [0; WINDOW] {
            self.slide()?;
        }
        // The emitted digits must already be in carry-free final form: replay
        // a full carry pass and insist it does nothing. Holds for every input
        // if the window arithmetic is right, so it stays on in release.
        let r = self.config.radix();
        let half = r / 2;
        for d in &self.digits {
            assert!(
                d.mantissa >= -half && d.mantissa < half,
                "scan emitted an unbalanced digit"
            );
        }
        for pair in self.digits.windows(2) {
            assert!(pair[0].index < pair[1].index, "scan emitted out of order");
        }
        Ok(self.digits)
    }
}

/// One-pass in-memory summation: the accumulator itself is the only state,
/// so memory stays constant no matter how long the stream runs.
pub fn sum_inmemory_stream(xs: impl IntoIterator<Item = f64>) -> Result<RoundedSum> {
    let mut acc = DenseAccumulator::new(RadixConfig::binary64());
    let mut n = 0u64;
    for x in xs {
        acc.add_scalar(x)?;
        n += 1;
    }
    acc.finish_and_round(n)
}

/// Correctly rounded sum of a stream under an explicit memory budget, using
/// `dir` for run files. See the module docs for the pipeline.
pub fn sum_external(
    xs: impl IntoIterator<Item = f64>,
    budget: &MemoryBudget,
    dir: &Path,
) -> Result<RoundedSum> {
    sum_external_with_stats(xs, budget, dir).map(|(r, _)| r)
}

pub fn sum_external_with_stats(
    xs: impl IntoIterator<Item = f64>,
    budget: &MemoryBudget,
    dir: &Path,
) -> Result<(RoundedSum, ExtmemStats)> {
    let config = RadixConfig::binary64();
    let block_cap = budget.block_records();
    let fan = budget.fan_in();
    let read_buffer_bytes = budget.read_buffer_records() * RECORD_BYTES;
    let out_buffer_bytes = block_cap * RECORD_BYTES;
    let mut stats = ExtmemStats {
        budget_records: budget.budget_records(),
        ..ExtmemStats::default()
    };

    // Phase 1: split the stream into sorted, compacted run files.
    let mut n = 0u64;
    let mut block: Vec<Record> = Vec::with_capacity(block_cap);
    let mut runs: Vec<PathBuf> = Vec::new();
    let mut next_run_id = 0usize;
    let mut flush_block = |block: &mut Vec<Record>, runs: &mut Vec<PathBuf>, stats: &mut ExtmemStats| -> Result<()> {
        sort_and_compact(block);
        let mut writer = create_run(dir, next_run_id, out_buffer_bytes)?;
        next_run_id += 1;
        for rec in block.iter() {
            writer.write(rec)?;
        }
        runs.push(writer.finish()?);
        stats.runs_created += 1;
        block.clear();
        Ok(())
    };

    for x in xs {
        n += 1;
        let mut overflow: Option<Vec<Record>> = None;
        decompose_into(x, &config, |index, mantissa| {
            if block.len() < block_cap {
                block.push(Record { index, mantissa });
            } else {
                overflow.get_or_insert_with(Vec::new).push(Record { index, mantissa });
            }
        })?;
        stats.peak_resident_records = stats.peak_resident_records.max(block.len());
        if block.len() >= block_cap {
            flush_block(&mut block, &mut runs, &mut stats)?;
            if let Some(extra) = overflow {
                block.extend(extra);
            }
        }
    }

    // Phase 2: merge sweeps until one pass can feed the scan.
    if runs.is_empty() {
        // Everything fit in one block: sort it and scan in memory.
        sort_and_compact(&mut block);
        let mut scan = AscendingScan::new(config);
        for &rec in &block {
            scan.push(rec)?;
        }
        let digits = scan.finish()?;
        let mut acc = DenseAccumulator::from_digits(config, digits)?;
        return Ok((acc.finish_and_round(n)?, stats));
    }
    if !block.is_empty() {
        flush_block(&mut block, &mut runs, &mut stats)?;
    }
    drop(flush_block);

    let merge_resident = fan * budget.read_buffer_records() + block_cap;
    stats.peak_resident_records = stats.peak_resident_records.max(merge_resident);

    while runs.len() > fan {
        stats.merge_passes += 1;
        let mut next: Vec<PathBuf> = Vec::new();
        for group in runs.chunks(fan) {
            if group.len() == 1 {
                next.push(group[0].clone());
                continue;
            }
            let mut writer = create_run(dir, next_run_id, out_buffer_bytes)?;
            next_run_id += 1;
            let mut pending: Option<Record> = None;
            merge_runs(group, read_buffer_bytes, |rec| {
                let combined = match &mut pending {
                    Some(p)
                        if p.index == rec.index
                            && (p.mantissa + rec.mantissa).abs() < SPILL_LIMIT =>
                    {
                        p.mantissa += rec.mantissa;
                        true
                    }
                    _ => false,
                };
                if !combined {
                    if let Some(p) = pending.replace(rec) {
                        writer.write(&p)?;
                    }
                }
                Ok(())
            })?;
            if let Some(p) = pending {
                writer.write(&p)?;
            }
            next.push(writer.finish()?);
            stats.runs_created += 1;
            for p in group {
                fs::remove_file(p).map_err(|e| SumError::io(p, e))?;
            }
        }
        runs = next;
    }

    // Phase 3: final merge feeds the ascending carry scan directly.
    stats.merge_passes += 1;
    let mut scan = AscendingScan::new(config);
    merge_runs(&runs, read_buffer_bytes, |rec| scan.push(rec))?;
    for p in &runs {
        fs::remove_file(p).map_err(|e| SumError::io(p, e))?;
    }
    let digits = scan.finish()?;
    let mut acc = DenseAccumulator::from_digits(config, digits)?;
    Ok((acc.finish_and_round(n)?, stats))
}
