//! Randomized cross-checking of the two miners against the oracle.
//!
//! Each trial draws a small random sequence (sometimes with sparse
//! timestamps and multi-item itemsets), a threshold, a length bound and,
//! depending on [`ConstraintMode`], random gap, duration and item
//! constraints. It then checks that:
//!
//! * `mine` and `mine_naive` report identical patterns, supports and
//!   occurrence lists;
//! * every reported occurrence list equals the oracle's minimal occurrences;
//! * when the alphabet is small enough, the frequent set equals the one
//!   found by evaluating every string over the alphabet with the oracle;
//! * every occurrence list is a dominance antichain with distinct starts
//!   and distinct ends;
//! * without constraints, each frequent pattern's prefix is frequent with at
//!   least the same support;
//! * without a maximum gap, each minimal occurrence's prefix is a minimal
//!   occurrence of the prefix pattern.

use std::collections::BTreeSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::miner::{mine, mine_naive, MiningParams, MiningResult, Threshold};
use crate::occurrence::{dominates, ConstraintSet, MinimalOccurrenceSet, Oracle};
use crate::pattern::Pattern;
use crate::sequence::{parse_sequence, Entry, ItemId, Itemset, SymbolTable, TimedSequence};

/// Exhaustive completeness check is skipped above this many strings.
const EXHAUSTIVE_PATTERN_BOUND: usize = 4_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConstraintMode {
    /// Default constraints in every trial.
    None,
    /// Random constraints in every trial.
    Random,
    /// Random constraints in every odd trial.
    Mixed,
}

#[derive(Debug, Clone)]
pub struct VerifyConfig {
    pub trials: usize,
    pub max_sequence_len: usize,
    pub max_alphabet: usize,
    pub max_threshold: usize,
    pub max_pattern_len: usize,
    pub mode: ConstraintMode,
    pub seed: u64,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        VerifyConfig {
            trials: 500,
            max_sequence_len: 25,
            max_alphabet: 5,
            max_threshold: 4,
            max_pattern_len: 5,
            mode: ConstraintMode::Mixed,
            seed: 0,
        }
    }
}

impl VerifyConfig {
    fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::param("trial count must be at least 1"));
        }
        if self.max_alphabet == 0 || self.max_threshold == 0 || self.max_pattern_len == 0 {
            return Err(Error::param("alphabet, threshold and pattern length bounds must be at least 1"));
        }
        Ok(())
    }
}

/// One generated instance.
#[derive(Debug, Clone)]
pub struct TrialCase {
    pub trial: usize,
    pub seed: u64,
    pub sequence: TimedSequence,
    pub params: MiningParams,
}

/// A failing trial in a self-contained, replayable form. Items are named by
/// token so the case survives re-parsing.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Counterexample {
    pub trial: usize,
    pub seed: u64,
    pub sequence: String,
    pub threshold: usize,
    pub max_pattern_len: usize,
    pub min_gap: i64,
    pub max_gap: Option<i64>,
    pub max_duration: Option<i64>,
    pub constraint_max_pattern_len: Option<usize>,
    pub excluded: Vec<String>,
    pub problem: String,
}

impl Counterexample {
    fn new(case: &TrialCase, problem: String) -> Self {
        let c = &case.params.constraints;
        let alphabet = case.sequence.alphabet();
        Counterexample {
            trial: case.trial,
            seed: case.seed,
            sequence: case.sequence.to_text(),
            threshold: case.params.threshold.resolve(case.sequence.len()).unwrap_or(1),
            max_pattern_len: case.params.max_pattern_len,
            min_gap: c.min_gap(),
            max_gap: c.max_gap(),
            max_duration: c.max_duration(),
            constraint_max_pattern_len: c.max_pattern_len(),
            excluded: c
                .excluded_items()
                .iter()
                .filter_map(|&i| alphabet.token(i).map(str::to_owned))
                .collect(),
            problem,
        }
    }

    /// Rebuilds the trial; excluded tokens absent from the sequence are dropped.
    pub fn to_case(&self) -> Result<TrialCase> {
        let sequence = parse_sequence(&self.sequence)?;
        let mut c = ConstraintSet::default()
            .with_min_gap(self.min_gap)
            .with_excluded(self.excluded.iter().filter_map(|t| sequence.alphabet().id(t)));
        if let Some(g) = self.max_gap {
            c = c.with_max_gap(g);
        }
        if let Some(d) = self.max_duration {
            c = c.with_max_duration(d);
        }
        if let Some(m) = self.constraint_max_pattern_len {
            c = c.with_max_pattern_len(m);
        }
        Ok(TrialCase {
            trial: self.trial,
            seed: self.seed,
            sequence,
            params: MiningParams::new(Threshold::Absolute(self.threshold))
                .with_max_pattern_len(self.max_pattern_len)
                .with_constraints(c),
        })
    }
}

#[derive(Debug, Clone, Default)]
pub struct VerifyReport {
    pub trials: usize,
    pub patterns_checked: usize,
    pub occurrences_checked: usize,
    pub exhaustive_trials: usize,
    pub counterexample: Option<Counterexample>,
}

impl VerifyReport {
    pub fn passed(&self) -> bool {
        self.counterexample.is_none()
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct CaseStats {
    pub patterns: usize,
    pub occurrences: usize,
    pub exhaustive: bool,
}

/// Derives the per-trial seed from the run seed.
pub fn trial_seed(seed: u64, trial: usize) -> u64 {
    seed ^ (trial as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15)
}

pub fn random_case(cfg: &VerifyConfig, trial: usize) -> TrialCase {
    let seed = trial_seed(cfg.seed, trial);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let q = rng.gen_range(1..=cfg.max_alphabet);
    let len = rng.gen_range(0..=cfg.max_sequence_len);
    let sparse = rng.gen_bool(0.3);
    let multi = q > 1 && rng.gen_bool(0.3);

    let mut entries = Vec::with_capacity(len);
    let mut t = 0i64;
    for _ in 0..len {
        t += if sparse { rng.gen_range(1..=3) } else { 1 };
        let size = if multi { rng.gen_range(1..=q.min(3)) } else { 1 };
        let mut items = BTreeSet::new();
        while items.len() < size {
            items.insert(ItemId(rng.gen_range(1..=q as u32)));
        }
        entries.push(Entry {
            timestamp: t,
            itemset: Itemset::new(items.into_iter().collect()).expect("distinct"),
        });
    }
    let sequence = TimedSequence::new(SymbolTable::numeric(q), entries).expect("valid by construction");

    let constrained = match cfg.mode {
        ConstraintMode::None => false,
        ConstraintMode::Random => true,
        ConstraintMode::Mixed => trial % 2 == 1,
    };
    let constraints = if constrained {
        random_constraints(&mut rng, q, cfg.max_pattern_len)
    } else {
        ConstraintSet::default()
    };
    let params = MiningParams::new(Threshold::Absolute(rng.gen_range(1..=cfg.max_threshold)))
        .with_max_pattern_len(rng.gen_range(1..=cfg.max_pattern_len))
        .with_constraints(constraints);

    TrialCase {
        trial,
        seed,
        sequence,
        params,
    }
}

fn random_constraints(rng: &mut ChaCha8Rng, q: usize, max_len: usize) -> ConstraintSet {
    let min_gap = *[1, 1, 2, 3].get(rng.gen_range(0..4)).unwrap();
    let mut c = ConstraintSet::default().with_min_gap(min_gap);
    if rng.gen_bool(0.6) {
        c = c.with_max_gap(min_gap + rng.gen_range(0..=4));
    }
    if rng.gen_bool(0.5) {
        c = c.with_max_duration(rng.gen_range(0..=12));
    }
    if rng.gen_bool(0.3) {
        c = c.with_excluded((1..=q as u32).filter(|_| rng.gen_bool(0.25)).map(ItemId));
    }
    if rng.gen_bool(0.2) {
        c = c.with_max_pattern_len(rng.gen_range(1..=max_len));
    }
    c
}

/// Runs every check on one case; `Err` carries a description of the first
/// discrepancy.
pub fn check_case(case: &TrialCase) -> std::result::Result<CaseStats, String> {
    let seq = &case.sequence;
    let params = &case.params;
    let c = &params.constraints;
    let oracle = Oracle::default();

    let inc = mine(seq, params).map_err(|e| format!("mine failed: {e}"))?;
    let naive = mine_naive(seq, params).map_err(|e| format!("mine_naive failed: {e}"))?;
    if inc.patterns != naive.patterns {
        return Err(format!("mine and mine_naive disagree: {}", describe_difference(seq, &inc, &naive)));
    }

    let mut stats = CaseStats::default();
    for m in &inc.patterns {
        let expected = oracle
            .minimal_occurrences(m.pattern(), seq, c)
            .map_err(|e| format!("oracle failed: {e}"))?;
        if expected.occurrences() != m.occurrences() {
            return Err(format!(
                "occurrences of {:?}: miner {:?}, oracle {:?}",
                m.pattern().tokens(seq.alphabet()),
                m.occurrences(),
                expected.occurrences()
            ));
        }
        if m.support() < inc.threshold {
            return Err(format!("{:?} reported below threshold", m.pattern().tokens(seq.alphabet())));
        }
        check_antichain(seq, m)?;
        stats.patterns += 1;
        stats.occurrences += m.support();
    }

    if let Some(all) = exhaustive_frequent(seq, params, &oracle)? {
        let reported: Vec<&Pattern> = inc.pattern_list();
        if all.iter().collect::<Vec<_>>() != reported {
            return Err(format!(
                "exhaustive enumeration found {} frequent patterns, miners found {}",
                all.len(),
                reported.len()
            ));
        }
        stats.exhaustive = true;
    }

    if *c == ConstraintSet::default() {
        check_prefix_support(seq, &inc)?;
    }
    if c.max_gap().is_none() {
        check_prefix_minimality(seq, &inc, c, &oracle)?;
    }
    Ok(stats)
}

fn describe_difference(seq: &TimedSequence, a: &MiningResult, b: &MiningResult) -> String {
    let name = |m: &MinimalOccurrenceSet| m.pattern().tokens(seq.alphabet()).join(" ");
    for m in &a.patterns {
        match b.get(m.pattern()) {
            None => return format!("<{}> only found by mine", name(m)),
            Some(o) if o != m => return format!("<{}> differs: {:?} vs {:?}", name(m), m.occurrences(), o.occurrences()),
            _ => {}
        }
    }
    for m in &b.patterns {
        if a.get(m.pattern()).is_none() {
            return format!("<{}> only found by mine_naive", name(m));
        }
    }
    "ordering differs".to_owned()
}

fn check_antichain(seq: &TimedSequence, m: &MinimalOccurrenceSet) -> std::result::Result<(), String> {
    let occ = m.occurrences();
    let label = || m.pattern().tokens(seq.alphabet()).join(" ");
    for (i, a) in occ.iter().enumerate() {
        for b in &occ[i + 1..] {
            if dominates(a, b).unwrap_or(true) || dominates(b, a).unwrap_or(true) {
                return Err(format!("<{}>: {a:?} and {b:?} are comparable", label()));
            }
            if a.start() == b.start() || a.end() == b.end() {
                return Err(format!("<{}>: {a:?} and {b:?} share a bound", label()));
            }
        }
    }
    Ok(())
}

fn check_prefix_support(seq: &TimedSequence, r: &MiningResult) -> std::result::Result<(), String> {
    for m in &r.patterns {
        if let Some(prefix) = m.pattern().prefix() {
            match r.support(&prefix) {
                Some(s) if s >= m.support() => {}
                other => {
                    return Err(format!(
                        "prefix of <{}> has support {other:?} below {}",
                        m.pattern().tokens(seq.alphabet()).join(" "),
                        m.support()
                    ))
                }
            }
        }
    }
    Ok(())
}

fn check_prefix_minimality(
    seq: &TimedSequence,
    r: &MiningResult,
    c: &ConstraintSet,
    oracle: &Oracle,
) -> std::result::Result<(), String> {
    for m in &r.patterns {
        let Some(prefix) = m.pattern().prefix() else { continue };
        let minimal = oracle
            .minimal_occurrences(&prefix, seq, c)
            .map_err(|e| format!("oracle failed: {e}"))?;
        for o in m.occurrences() {
            if !minimal.occurrences().contains(&o.prefix()) {
                return Err(format!(
                    "prefix of {o:?} for <{}> is not minimal",
                    m.pattern().tokens(seq.alphabet()).join(" ")
                ));
            }
        }
    }
    Ok(())
}

/// Frequent patterns found by testing every string over the non-excluded
/// alphabet, or `None` when there are too many strings.
fn exhaustive_frequent(
    seq: &TimedSequence,
    params: &MiningParams,
    oracle: &Oracle,
) -> std::result::Result<Option<Vec<Pattern>>, String> {
    let c = &params.constraints;
    let items: Vec<ItemId> = seq.alphabet().ids().filter(|&i| !c.is_excluded(i)).collect();
    let max_len = params.effective_max_len();
    let sigma = params.threshold.resolve(seq.len()).map_err(|e| e.to_string())?;

    let mut total = 0usize;
    let mut level = 1usize;
    for _ in 0..max_len {
        level = level.saturating_mul(items.len());
        total = total.saturating_add(level);
    }
    if total > EXHAUSTIVE_PATTERN_BOUND || items.is_empty() {
        return Ok(if items.is_empty() { Some(Vec::new()) } else { None });
    }

    let mut frequent = Vec::new();
    let mut layer: Vec<Vec<ItemId>> = vec![Vec::new()];
    for _ in 0..max_len {
        layer = layer
            .iter()
            .flat_map(|p| items.iter().map(move |&i| [p.as_slice(), &[i]].concat()))
            .collect();
        for items in &layer {
            let p = Pattern::new(items.clone()).expect("nonempty");
            if oracle.support(&p, seq, c).map_err(|e| e.to_string())? >= sigma {
                frequent.push(p);
            }
        }
    }
    frequent.sort_by(Pattern::canonical_cmp);
    Ok(Some(frequent))
}

/// Runs all trials. The reported counterexample is the failing trial with
/// the smallest index.
pub fn run(cfg: &VerifyConfig) -> Result<VerifyReport> {
    cfg.validate()?;
    let outcomes: Vec<(TrialCase, std::result::Result<CaseStats, String>)> = (0..cfg.trials)
        .into_par_iter()
        .map(|trial| {
            let case = random_case(cfg, trial);
            let outcome = check_case(&case);
            (case, outcome)
        })
        .collect();

    let mut report = VerifyReport {
        trials: cfg.trials,
        ..VerifyReport::default()
    };
    for (case, outcome) in outcomes {
        match outcome {
            Ok(stats) => {
                report.patterns_checked += stats.patterns;
                report.occurrences_checked += stats.occurrences;
                report.exhaustive_trials += usize::from(stats.exhaustive);
            }
            Err(problem) => {
                report.counterexample = Some(Counterexample::new(&case, problem));
                break;
            }
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cases_are_deterministic() {
        let cfg = VerifyConfig::default();
        let a = random_case(&cfg, 17);
        let b = random_case(&cfg, 17);
        assert_eq!(a.sequence, b.sequence);
        assert_eq!(a.params, b.params);
        assert!(a.sequence.len() <= cfg.max_sequence_len);
    }

    #[test]
    fn mixed_mode_constrains_odd_trials_only() {
        let cfg = VerifyConfig::default();
        for t in (0..40).step_by(2) {
            assert_eq!(random_case(&cfg, t).params.constraints, ConstraintSet::default());
        }
    }

    #[test]
    fn counterexample_round_trips() {
        let cfg = VerifyConfig {
            mode: ConstraintMode::Random,
            ..VerifyConfig::default()
        };
        let case = (0..50).map(|t| random_case(&cfg, t)).find(|c| !c.sequence.is_empty()).unwrap();
        let cx = Counterexample::new(&case, "synthetic".into());
        let json = serde_json::to_string(&cx).unwrap();
        let back: Counterexample = serde_json::from_str(&json).unwrap();
        assert_eq!(back, cx);
        let replay = back.to_case().unwrap();
        let token_sets = |s: &TimedSequence| -> Vec<(i64, BTreeSet<String>)> {
            s.entries()
                .iter()
                .map(|e| {
                    let toks = e.itemset.items().iter().map(|&i| s.alphabet().token(i).unwrap().to_owned());
                    (e.timestamp, toks.collect())
                })
                .collect()
        };
        assert_eq!(token_sets(&replay.sequence), token_sets(&case.sequence));
        assert_eq!(
            mine(&replay.sequence, &replay.params).unwrap().len(),
            mine(&case.sequence, &case.params).unwrap().len()
        );
    }

    #[test]
    fn zero_trials_rejected() {
        let cfg = VerifyConfig {
            trials: 0,
            ..VerifyConfig::default()
        };
        assert!(matches!(run(&cfg), Err(Error::InvalidParameter(_))));
    }

    #[test]
    fn small_run_passes() {
        let report = run(&VerifyConfig {
            trials: 60,
            ..VerifyConfig::default()
        })
        .unwrap();
        assert!(report.passed(), "{:?}", report.counterexample);
        assert!(report.patterns_checked > 0);
    }
}
