//! Frequent pattern miners.
//!
//! [`mine`] is the level-wise incremental miner: patterns of length `n` are
//! grown from frequent patterns of length `n - 1` by extending their stored
//! occurrences with one more item. [`mine_naive`] generates every candidate
//! string level by level, independently of earlier levels, and counts each
//! one with the brute-force oracle. Both return the same [`MiningResult`].
//!
//! # Extension state
//!
//! The incremental miner does not extend the minimal occurrences of a
//! pattern directly. Under a maximum gap, a minimal occurrence of `P⊕r` can
//! have a prefix that is *not* minimal for `P` (its minimal rival ends too
//! early to reach the next `r`). Instead each pattern carries an
//! [`OccurrenceFrontier`]: for every end timestamp, the least occurrence
//! ending there under the dominance order. Among occurrences sharing an
//! end, the latest start wins and ties are broken by the earliest
//! second-to-last timestamp, recursively. Any occurrence of `P⊕r` whose
//! prefix is off the frontier is dominated by the same extension of the
//! frontier member with that prefix's end, which remains valid under every
//! gap and duration bound. So the frontier of `P⊕r` is computed from the
//! frontier of `P` alone, and the minimal occurrences are the frontier
//! members whose interval contains no other member's interval.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::limits::RunLimits;
use crate::occurrence::{dominates_unchecked, ConstraintSet, MinimalOccurrenceSet, Occurrence};
use crate::pattern::Pattern;
use crate::sequence::{ItemId, Timestamp, TimedSequence};

/// Default bound on pattern length.
pub const DEFAULT_MAX_PATTERN_LEN: usize = 10;

/// Minimum support, absolute or as a fraction of the sequence length.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Threshold {
    Absolute(usize),
    /// Fraction in `(0, 1]`, resolved as `ceil(fraction * |S|)`.
    Relative(f64),
}

impl Threshold {
    /// The absolute support for a sequence of `len` entries; never below 1.
    pub fn resolve(&self, len: usize) -> Result<usize> {
        match *self {
            Threshold::Absolute(0) => Err(Error::param("threshold must be at least 1")),
            Threshold::Absolute(n) => Ok(n),
            Threshold::Relative(f) if !(f > 0.0 && f <= 1.0) => {
                Err(Error::param(format!("relative threshold {f} outside (0, 1]")))
            }
            Threshold::Relative(f) => {
                // Absorb representation error, e.g. 0.1 * 20 = 2.0000000000000004.
                let raw = f * len as f64;
                Ok(((raw - 1e-9).ceil() as usize).max(1))
            }
        }
    }
}

impl FromStr for Threshold {
    type Err = Error;

    /// `"N"` for an absolute count, `"P%"` for a percentage of |S|.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if let Some(pct) = s.strip_suffix('%') {
            let p: f64 = pct
                .trim()
                .parse()
                .map_err(|_| Error::param(format!("invalid percentage {s:?}")))?;
            let t = Threshold::Relative(p / 100.0);
            t.resolve(1)?;
            Ok(t)
        } else {
            let n: usize = s
                .parse()
                .map_err(|_| Error::param(format!("invalid threshold {s:?}")))?;
            let t = Threshold::Absolute(n);
            t.resolve(1)?;
            Ok(t)
        }
    }
}

impl fmt::Display for Threshold {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Threshold::Absolute(n) => write!(f, "{n}"),
            Threshold::Relative(p) => write!(f, "{}%", p * 100.0),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MiningParams {
    pub threshold: Threshold,
    pub max_pattern_len: usize,
    pub constraints: ConstraintSet,
}

impl MiningParams {
    pub fn new(threshold: Threshold) -> Self {
        MiningParams {
            threshold,
            max_pattern_len: DEFAULT_MAX_PATTERN_LEN,
            constraints: ConstraintSet::default(),
        }
    }

    pub fn with_max_pattern_len(mut self, len: usize) -> Self {
        self.max_pattern_len = len;
        self
    }

    pub fn with_constraints(mut self, constraints: ConstraintSet) -> Self {
        self.constraints = constraints;
        self
    }

    /// The tighter of the two length bounds.
    pub fn effective_max_len(&self) -> usize {
        self.constraints
            .max_pattern_len()
            .map_or(self.max_pattern_len, |m| m.min(self.max_pattern_len))
    }

    fn validate(&self) -> Result<()> {
        if self.max_pattern_len == 0 {
            return Err(Error::param("max pattern length must be at least 1"));
        }
        self.constraints.validate()
    }
}

/// All frequent patterns with their minimal occurrences, shorter patterns
/// first and lexicographic by item id within a length.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MiningResult {
    /// The resolved absolute threshold.
    pub threshold: usize,
    /// Number of levels evaluated.
    pub levels: usize,
    pub patterns: Vec<MinimalOccurrenceSet>,
}

impl MiningResult {
    pub fn len(&self) -> usize {
        self.patterns.len()
    }

    pub fn is_empty(&self) -> bool {
        self.patterns.is_empty()
    }

    pub fn get(&self, pattern: &Pattern) -> Option<&MinimalOccurrenceSet> {
        self.patterns
            .binary_search_by(|m| m.pattern().canonical_cmp(pattern))
            .ok()
            .map(|i| &self.patterns[i])
    }

    pub fn support(&self, pattern: &Pattern) -> Option<usize> {
        self.get(pattern).map(MinimalOccurrenceSet::support)
    }

    pub fn pattern_list(&self) -> Vec<&Pattern> {
        self.patterns.iter().map(MinimalOccurrenceSet::pattern).collect()
    }
}

/// Per end timestamp, the dominance-least occurrence of a pattern ending there.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OccurrenceFrontier {
    pattern: Pattern,
    /// Sorted by end, one member per end.
    members: Vec<Occurrence>,
}

impl OccurrenceFrontier {
    /// Frontier of a length-1 pattern: every timestamp containing `item`.
    pub fn for_item(item: ItemId, seq: &TimedSequence) -> Self {
        OccurrenceFrontier {
            pattern: Pattern::single(item),
            members: seq
                .timestamps_of(item)
                .into_iter()
                .map(|t| Occurrence::new(vec![t]))
                .collect(),
        }
    }

    /// Reduces `occurrences` of `pattern` to one least member per end.
    ///
    /// Passing the minimal occurrence set is enough to seed extension when
    /// no maximum gap is set; with a maximum gap, pass every occurrence.
    pub fn from_occurrences(pattern: Pattern, mut occurrences: Vec<Occurrence>) -> Result<Self> {
        if occurrences.iter().any(|o| o.len() != pattern.len() || !o.is_increasing()) {
            return Err(Error::param("occurrence does not fit the pattern"));
        }
        occurrences.sort_by_key(Occurrence::end);
        let mut members: Vec<Occurrence> = Vec::new();
        for o in occurrences {
            match members.last_mut() {
                Some(last) if last.end() == o.end() => {
                    if dominates_unchecked(o.positions(), last.positions()) {
                        *last = o;
                    }
                }
                _ => members.push(o),
            }
        }
        Ok(OccurrenceFrontier { pattern, members })
    }

    pub fn pattern(&self) -> &Pattern {
        &self.pattern
    }

    pub fn members(&self) -> &[Occurrence] {
        &self.members
    }

    /// Number of distinct start timestamps. Bounds the support of every
    /// extension, since minimal occurrences have pairwise distinct starts.
    pub fn distinct_starts(&self) -> usize {
        let mut starts: Vec<Timestamp> = self.members.iter().map(Occurrence::start).collect();
        starts.sort_unstable();
        starts.dedup();
        starts.len()
    }

    /// Members whose interval strictly contains no other member's interval.
    pub fn minimal(&self) -> MinimalOccurrenceSet {
        let mut latest_start = Timestamp::MIN;
        let mut kept = Vec::new();
        for o in &self.members {
            if o.start() > latest_start {
                kept.push(o.clone());
                latest_start = o.start();
            }
        }
        MinimalOccurrenceSet::new(self.pattern.clone(), kept)
    }
}

/// Frontier of `frontier.pattern() ⊕ item`.
///
/// For each timestamp `q` holding `item`, considers every frontier member
/// that `q` can follow within the gap and duration bounds and keeps the
/// one with the latest start, breaking ties by the earliest end.
pub fn extend_occurrences(
    frontier: &OccurrenceFrontier,
    item: ItemId,
    seq: &TimedSequence,
    constraints: &ConstraintSet,
) -> OccurrenceFrontier {
    let pattern = frontier.pattern.extend(item);
    let members = &frontier.members;
    let mut out = Vec::new();
    if !constraints.admits_pattern(&pattern) {
        return OccurrenceFrontier { pattern, members: out };
    }

    for q in seq.timestamps_of(item) {
        let hi = members.partition_point(|o| o.end() <= q - constraints.min_gap());
        let lo = constraints
            .max_gap()
            .map_or(0, |g| members[..hi].partition_point(|o| o.end() < q - g));
        let mut best: Option<&Occurrence> = None;
        for o in &members[lo..hi] {
            if !constraints.admits_duration(o.start(), q) {
                continue;
            }
            if best.is_none_or(|b| o.start() > b.start()) {
                best = Some(o);
            }
        }
        if let Some(b) = best {
            out.push(b.extend(q));
        }
    }
    OccurrenceFrontier { pattern, members: out }
}

/// Length-1 patterns over non-excluded items appearing at `threshold`
/// timestamps or more, with all their occurrences.
pub fn frequent_items(seq: &TimedSequence, params: &MiningParams) -> Result<Vec<MinimalOccurrenceSet>> {
    params.validate()?;
    let sigma = params.threshold.resolve(seq.len())?;
    Ok(frequent_item_frontiers(seq, &params.constraints, sigma)
        .iter()
        .map(OccurrenceFrontier::minimal)
        .collect())
}

fn frequent_item_frontiers(seq: &TimedSequence, constraints: &ConstraintSet, sigma: usize) -> Vec<OccurrenceFrontier> {
    seq.alphabet()
        .ids()
        .filter(|&i| !constraints.is_excluded(i))
        .map(|i| OccurrenceFrontier::for_item(i, seq))
        .filter(|f| f.members.len() >= sigma)
        .collect()
}

/// Incremental level-wise miner.
pub fn mine(seq: &TimedSequence, params: &MiningParams) -> Result<MiningResult> {
    mine_with(seq, params, &RunLimits::default(), |_, _| {})
}

/// [`mine`] with budgets and a callback receiving each completed level's
/// frequent patterns in canonical order.
pub fn mine_with<F>(seq: &TimedSequence, params: &MiningParams, limits: &RunLimits, mut on_level: F) -> Result<MiningResult>
where
    F: FnMut(usize, &[MinimalOccurrenceSet]),
{
    params.validate()?;
    let sigma = params.threshold.resolve(seq.len())?;
    let max_len = params.effective_max_len();
    let constraints = &params.constraints;
    // Without a maximum gap, minimal-occurrence support is anti-monotone
    // along prefixes. With one, only the frontier's distinct starts bound
    // the support of extensions, so a pattern below threshold may still
    // have frequent extensions.
    let keep_for_extension = |f: &OccurrenceFrontier, support: usize| {
        if constraints.max_gap().is_none() {
            support >= sigma
        } else {
            f.distinct_starts() >= sigma
        }
    };

    let items = frequent_item_frontiers(seq, constraints, sigma);
    let extension_items: Vec<ItemId> = items.iter().map(|f| f.pattern.last()).collect();

    let mut all = Vec::new();
    let mut level_frequent: Vec<MinimalOccurrenceSet> = items.iter().map(OccurrenceFrontier::minimal).collect();
    let mut frontiers = items;
    let mut levels = 0;

    for level in 1..=max_len {
        limits.check()?;
        if level > 1 {
            let extended: Vec<(OccurrenceFrontier, MinimalOccurrenceSet)> = frontiers
                .par_iter()
                .flat_map_iter(|f| extension_items.iter().map(move |&r| (f, r)))
                .map(|(f, r)| {
                    limits.check_time()?;
                    let next = extend_occurrences(f, r, seq, constraints);
                    let minimal = next.minimal();
                    Ok((next, minimal))
                })
                .collect::<Result<Vec<_>>>()?;

            frontiers = Vec::new();
            level_frequent = Vec::new();
            for (frontier, minimal) in extended {
                let support = minimal.support();
                if keep_for_extension(&frontier, support) {
                    frontiers.push(frontier);
                }
                if support >= sigma {
                    level_frequent.push(minimal);
                }
            }
        }
        levels = level;
        level_frequent.sort_by(|a, b| a.pattern().canonical_cmp(b.pattern()));
        on_level(level, &level_frequent);
        all.append(&mut level_frequent);
        if frontiers.is_empty() {
            break;
        }
    }

    all.sort_by(|a, b| a.pattern().canonical_cmp(b.pattern()));
    Ok(MiningResult {
        threshold: sigma,
        levels,
        patterns: all,
    })
}

/// Naive generate-and-test miner.
pub fn mine_naive(seq: &TimedSequence, params: &MiningParams) -> Result<MiningResult> {
    mine_naive_with(seq, params, &RunLimits::default(), |_, _| {})
}

/// [`mine_naive`] with budgets and a per-level callback.
///
/// At each length `n` the candidates are every distinct length-`n` string
/// over the non-excluded items that has at least one occurrence in the
/// sequence, ignoring gap and duration bounds. Nothing learned at shorter
/// lengths is reused. Each candidate's support is computed by the oracle.
/// Refuses with [`Error::SafetyBound`] once more than the configured number
/// of candidates has been generated, or when the oracle refuses the sequence.
pub fn mine_naive_with<F>(
    seq: &TimedSequence,
    params: &MiningParams,
    limits: &RunLimits,
    mut on_level: F,
) -> Result<MiningResult>
where
    F: FnMut(usize, &[MinimalOccurrenceSet]),
{
    params.validate()?;
    let sigma = params.threshold.resolve(seq.len())?;
    let max_len = params.effective_max_len();
    let constraints = &params.constraints;
    limits.oracle.check_size(seq)?;

    let index = NextOccurrence::new(seq, constraints);
    let mut generated = 0usize;
    let mut all = Vec::new();
    let mut levels = 0;

    for level in 1..=max_len {
        limits.check()?;
        let candidates = index.distinct_strings(level, limits, &mut generated)?;
        if candidates.is_empty() {
            break;
        }
        let mut frequent: Vec<MinimalOccurrenceSet> = candidates
            .par_iter()
            .enumerate()
            .map(|(i, p)| {
                limits.check_time()?;
                if i % 4096 == 0 {
                    limits.check_memory()?;
                }
                limits.oracle.minimal_occurrences(p, seq, constraints)
            })
            .collect::<Result<Vec<_>>>()?
            .into_iter()
            .filter(|m| m.support() >= sigma)
            .collect();
        frequent.sort_by(|a, b| a.pattern().canonical_cmp(b.pattern()));
        levels = level;
        on_level(level, &frequent);
        all.append(&mut frequent);
    }

    Ok(MiningResult {
        threshold: sigma,
        levels,
        patterns: all,
    })
}

/// `next[i][k]`: index of the first entry at or after `i` holding the k-th
/// allowed item.
struct NextOccurrence {
    items: Vec<ItemId>,
    next: Vec<Vec<Option<usize>>>,
}

impl NextOccurrence {
    fn new(seq: &TimedSequence, constraints: &ConstraintSet) -> Self {
        let items: Vec<ItemId> = seq.alphabet().ids().filter(|&i| !constraints.is_excluded(i)).collect();
        let n = seq.len();
        let mut next = vec![vec![None; items.len()]; n + 1];
        for i in (0..n).rev() {
            next[i] = next[i + 1].clone();
            for (k, &item) in items.iter().enumerate() {
                if seq.entries()[i].itemset.contains(item) {
                    next[i][k] = Some(i);
                }
            }
        }
        NextOccurrence { items, next }
    }

    /// Each distinct string of length `len` embedded in the sequence, found
    /// once through its leftmost embedding.
    fn distinct_strings(&self, len: usize, limits: &RunLimits, generated: &mut usize) -> Result<Vec<Pattern>> {
        let mut out = Vec::new();
        let mut current = Vec::with_capacity(len);
        self.walk(0, len, &mut current, &mut out, limits, generated)?;
        Ok(out)
    }

    fn walk(
        &self,
        from: usize,
        len: usize,
        current: &mut Vec<ItemId>,
        out: &mut Vec<Pattern>,
        limits: &RunLimits,
        generated: &mut usize,
    ) -> Result<()> {
        if current.len() == len {
            *generated += 1;
            if let Some(bound) = limits.naive_candidate_bound {
                if *generated > bound {
                    return Err(Error::SafetyBound(format!(
                        "naive miner exceeded {bound} candidate patterns"
                    )));
                }
            }
            if generated.is_multiple_of(65_536) {
                limits.check()?;
            }
            out.push(Pattern::new(current.clone()).expect("len >= 1"));
            return Ok(());
        }
        for (k, &item) in self.items.iter().enumerate() {
            if let Some(i) = self.next[from][k] {
                current.push(item);
                self.walk(i + 1, len, current, out, limits, generated)?;
                current.pop();
            }
        }
        Ok(())
    }
}
