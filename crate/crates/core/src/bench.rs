//! Benchmark harness: mine freshly generated random sequences of growing
//! length and emit one CSV row per run.
//!
//! Runs are executed one at a time so that wall times are not perturbed by
//! concurrent runs. A run that exceeds its time or memory budget, or that
//! the naive miner refuses, is kept as a censored row rather than dropped.

use std::fmt;
use std::io;
use std::str::FromStr;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::limits::{self, RunLimits};
use crate::miner::{mine_naive_with, mine_with, MiningParams, Threshold};
use crate::occurrence::ConstraintSet;
use crate::sequence::generate_random_sequence;

pub const CSV_HEADER: &str = "sequence_length,alphabet_size,threshold,miner,constrained,wall_time_s,peak_memory_bytes,pattern_count,repetition,seed,censored";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MinerKind {
    Incremental,
    Naive,
}

impl fmt::Display for MinerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            MinerKind::Incremental => "incremental",
            MinerKind::Naive => "naive",
        })
    }
}

impl FromStr for MinerKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "incremental" => Ok(MinerKind::Incremental),
            "naive" => Ok(MinerKind::Naive),
            other => Err(Error::param(format!("unknown miner {other:?}"))),
        }
    }
}

/// One benchmark run. Field names are the CSV column names.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchRecord {
    pub sequence_length: usize,
    pub alphabet_size: usize,
    /// Relative threshold as a fraction of the sequence length.
    pub threshold: f64,
    pub miner: MinerKind,
    pub constrained: bool,
    pub wall_time_s: f64,
    /// Approximate process peak RSS during the run.
    pub peak_memory_bytes: u64,
    pub pattern_count: usize,
    pub repetition: usize,
    pub seed: u64,
    pub censored: bool,
}

#[derive(Debug, Clone)]
pub struct BenchConfig {
    pub lengths: Vec<usize>,
    pub reps: usize,
    pub alphabet: usize,
    pub threshold: Threshold,
    pub max_pattern_len: usize,
    pub miners: Vec<MinerKind>,
    /// `None` runs unconstrained.
    pub constraints: Option<ConstraintSet>,
    pub time_budget: Option<Duration>,
    pub mem_budget: Option<u64>,
    pub seed: u64,
}

impl Default for BenchConfig {
    fn default() -> Self {
        BenchConfig {
            lengths: vec![20],
            reps: 5,
            alphabet: 10,
            threshold: Threshold::Relative(0.10),
            max_pattern_len: 10,
            miners: vec![MinerKind::Incremental],
            constraints: None,
            time_budget: None,
            mem_budget: None,
            seed: 0,
        }
    }
}

/// Seed of the sequence for `(length, repetition)`. Every miner and
/// constraint setting sees the same sequence for a given pair.
pub fn sequence_seed(base: u64, length: usize, repetition: usize) -> u64 {
    base.wrapping_add((length as u64).wrapping_mul(1_000_003))
        .wrapping_add(repetition as u64)
}

/// Parses `A..B:STEP` (inclusive), `A..B` (step 1), or a comma list.
pub fn parse_lengths(spec: &str) -> Result<Vec<usize>> {
    let bad = || Error::param(format!("invalid length list {spec:?}"));
    let spec = spec.trim();
    if let Some((range, step)) = spec.split_once("..").map(|(a, rest)| {
        let (b, step) = rest.split_once(':').unwrap_or((rest, "1"));
        ((a, b), step)
    }) {
        let a: usize = range.0.trim().parse().map_err(|_| bad())?;
        let b: usize = range.1.trim().parse().map_err(|_| bad())?;
        let step: usize = step.trim().parse().map_err(|_| bad())?;
        if step == 0 || b < a {
            return Err(bad());
        }
        return Ok((a..=b).step_by(step).collect());
    }
    let out = spec
        .split(',')
        .map(|s| s.trim().parse::<usize>().map_err(|_| bad()))
        .collect::<Result<Vec<_>>>()?;
    if out.is_empty() {
        return Err(bad());
    }
    Ok(out)
}

/// Parses `key=value,...` with keys `maxgap`, `mingap`, `maxduration`
/// (alias `maxlength`, the duration bound) and `maxpatternlen`.
pub fn parse_constraints(spec: &str) -> Result<ConstraintSet> {
    let mut c = ConstraintSet::default();
    for part in spec.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        let (key, value) = part
            .split_once('=')
            .ok_or_else(|| Error::param(format!("expected key=value, got {part:?}")))?;
        let value: i64 = value
            .trim()
            .parse()
            .map_err(|_| Error::param(format!("invalid value in {part:?}")))?;
        let non_negative = |v: i64| {
            if v < 0 {
                Err(Error::param(format!("negative value in {part:?}")))
            } else {
                Ok(v)
            }
        };
        c = match key.trim() {
            "maxgap" => c.with_max_gap(non_negative(value)?),
            "mingap" => c.with_min_gap(non_negative(value)?),
            "maxduration" | "maxlength" => c.with_max_duration(non_negative(value)?),
            "maxpatternlen" => c.with_max_pattern_len(non_negative(value)? as usize),
            other => return Err(Error::param(format!("unknown constraint {other:?}"))),
        };
    }
    c.validate()?;
    Ok(c)
}

/// Generates the sequence for `(length, repetition)` and mines it once.
pub fn run_one(cfg: &BenchConfig, length: usize, repetition: usize, miner: MinerKind) -> Result<BenchRecord> {
    let seed = sequence_seed(cfg.seed, length, repetition);
    let seq = generate_random_sequence(length, cfg.alphabet, seed)?;
    let params = MiningParams::new(cfg.threshold)
        .with_max_pattern_len(cfg.max_pattern_len)
        .with_constraints(cfg.constraints.clone().unwrap_or_default());

    let mut limits = RunLimits::forced();
    if let Some(b) = cfg.mem_budget {
        limits = limits.with_memory_budget(b);
    }
    limits::reset_peak_rss();
    let started = Instant::now();
    if let Some(t) = cfg.time_budget {
        limits.deadline = Some(started + t);
    }
    let outcome = match miner {
        MinerKind::Incremental => mine_with(&seq, &params, &limits, |_, _| {}),
        MinerKind::Naive => mine_naive_with(&seq, &params, &limits, |_, _| {}),
    };
    let wall = started.elapsed().as_secs_f64();
    let peak = limits::peak_rss_bytes();

    let threshold = match cfg.threshold {
        Threshold::Relative(f) => f,
        Threshold::Absolute(n) => n as f64 / length.max(1) as f64,
    };
    let (pattern_count, censored) = match outcome {
        Ok(r) => (r.len(), false),
        Err(Error::InvalidParameter(msg)) => return Err(Error::InvalidParameter(msg)),
        Err(_) => (0, true),
    };
    Ok(BenchRecord {
        sequence_length: length,
        alphabet_size: cfg.alphabet,
        threshold,
        miner,
        constrained: cfg.constraints.is_some(),
        wall_time_s: wall,
        peak_memory_bytes: peak,
        pattern_count,
        repetition,
        seed,
        censored,
    })
}

/// Runs every `(length, repetition, miner)` combination in that order,
/// handing each record to `sink` as soon as it completes.
pub fn run<F>(cfg: &BenchConfig, mut sink: F) -> Result<()>
where
    F: FnMut(&BenchRecord) -> Result<()>,
{
    if cfg.reps == 0 || cfg.lengths.is_empty() || cfg.miners.is_empty() {
        return Err(Error::param("need at least one length, repetition and miner"));
    }
    if cfg.alphabet == 0 {
        return Err(Error::param("alphabet size must be at least 1"));
    }
    for &length in &cfg.lengths {
        for rep in 0..cfg.reps {
            for &miner in &cfg.miners {
                sink(&run_one(cfg, length, rep, miner)?)?;
            }
        }
    }
    Ok(())
}

/// Convenience wrapper collecting all records.
pub fn run_collect(cfg: &BenchConfig) -> Result<Vec<BenchRecord>> {
    let mut out = Vec::new();
    run(cfg, |r| {
        out.push(r.clone());
        Ok(())
    })?;
    Ok(out)
}

pub fn csv_writer<W: io::Write>(w: W) -> csv::Writer<W> {
    csv::WriterBuilder::new().has_headers(true).from_writer(w)
}

pub fn write_record<W: io::Write>(w: &mut csv::Writer<W>, r: &BenchRecord) -> Result<()> {
    w.serialize(r).map_err(|e| Error::param(format!("csv: {e}")))?;
    w.flush().map_err(|e| Error::param(format!("csv: {e}")))
}

pub fn read_records<R: io::Read>(r: R) -> Result<Vec<BenchRecord>> {
    csv::Reader::from_reader(r)
        .deserialize()
        .enumerate()
        .map(|(i, row)| row.map_err(|e| Error::format(i + 2, e.to_string())))
        .collect()
}

/// Mean wall time over `records`, censored rows included (their times are
/// lower bounds), or `None` when empty.
pub fn mean_wall_time<'a>(records: impl IntoIterator<Item = &'a BenchRecord>) -> Option<f64> {
    let (sum, n) = records
        .into_iter()
        .fold((0.0, 0usize), |(s, n), r| (s + r.wall_time_s, n + 1));
    (n > 0).then(|| sum / n as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn length_lists() {
        assert_eq!(parse_lengths("20..130:10").unwrap().len(), 12);
        assert_eq!(parse_lengths("20..130:10").unwrap().last(), Some(&130));
        assert_eq!(parse_lengths("20").unwrap(), vec![20]);
        assert_eq!(parse_lengths("5, 7,9").unwrap(), vec![5, 7, 9]);
        assert_eq!(parse_lengths("3..5").unwrap(), vec![3, 4, 5]);
        assert!(parse_lengths("10..5:1").is_err());
        assert!(parse_lengths("1..5:0").is_err());
        assert!(parse_lengths("abc").is_err());
    }

    #[test]
    fn constraint_specs() {
        let c = parse_constraints("maxgap=7,mingap=0,maxduration=20").unwrap();
        assert_eq!(c.max_gap(), Some(7));
        assert_eq!(c.min_gap(), 1);
        assert_eq!(c.max_duration(), Some(20));
        assert_eq!(parse_constraints("maxlength=5").unwrap().max_duration(), Some(5));
        assert!(parse_constraints("maxgap=1,mingap=3").is_err());
        assert!(parse_constraints("foo=1").is_err());
        assert!(parse_constraints("maxgap").is_err());
        assert_eq!(parse_constraints("").unwrap(), ConstraintSet::default());
    }

    #[test]
    fn miner_names() {
        assert_eq!("naive".parse::<MinerKind>().unwrap(), MinerKind::Naive);
        assert_eq!(MinerKind::Incremental.to_string(), "incremental");
        assert!("fast".parse::<MinerKind>().is_err());
    }

    #[test]
    fn csv_header_matches_record_fields() {
        let mut w = csv_writer(Vec::new());
        let cfg = BenchConfig {
            lengths: vec![15],
            reps: 1,
            ..BenchConfig::default()
        };
        let r = run_one(&cfg, 15, 0, MinerKind::Incremental).unwrap();
        write_record(&mut w, &r).unwrap();
        let bytes = w.into_inner().unwrap();
        let text = String::from_utf8(bytes).unwrap();
        assert_eq!(text.lines().next(), Some(CSV_HEADER));
        let back = read_records(text.as_bytes()).unwrap();
        assert_eq!(back, vec![r]);
    }

    #[test]
    fn runs_are_replayable_from_seed() {
        let cfg = BenchConfig {
            lengths: vec![18],
            reps: 2,
            max_pattern_len: 5,
            miners: vec![MinerKind::Incremental, MinerKind::Naive],
            ..BenchConfig::default()
        };
        let rows = run_collect(&cfg).unwrap();
        assert_eq!(rows.len(), 4);
        assert_eq!(rows[0].seed, rows[1].seed);
        assert_ne!(rows[0].seed, rows[2].seed);
        assert_eq!(rows[0].pattern_count, rows[1].pattern_count);
        let again = run_one(&cfg, 18, 0, MinerKind::Incremental).unwrap();
        assert_eq!(again.pattern_count, rows[0].pattern_count);
    }

    #[test]
    fn budget_overrun_is_censored() {
        let cfg = BenchConfig {
            lengths: vec![60],
            reps: 1,
            miners: vec![MinerKind::Naive],
            time_budget: Some(Duration::from_millis(1)),
            ..BenchConfig::default()
        };
        let r = run_one(&cfg, 60, 0, MinerKind::Naive).unwrap();
        assert!(r.censored);
        assert_eq!(r.pattern_count, 0);
    }
}
