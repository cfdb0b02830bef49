//! Occurrences, the dominance relation between them, constraints, and the
//! brute-force oracle every miner is checked against.
//!
//! An occurrence of `P = <p1..pn>` is a strictly increasing tuple of
//! timestamps `(t1..tn)` with `pk` in the itemset at `tk`; it spans the
//! interval `[t1, tn]`. `T` dominates `U` when `T`'s interval is strictly
//! inside `U`'s, or both share their bounds and the `n-1` prefix of `T`
//! dominates that of `U`. Minimal occurrences are the undominated ones and
//! the support of a pattern is how many there are.

use std::collections::{BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pattern::Pattern;
use crate::sequence::{ItemId, Timestamp, TimedSequence};

/// Strictly increasing timestamps locating a pattern in the sequence.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Occurrence(Vec<Timestamp>);

impl Occurrence {
    /// Does not check monotonicity; see [`Occurrence::is_increasing`].
    pub fn new(positions: Vec<Timestamp>) -> Self {
        Occurrence(positions)
    }

    pub fn positions(&self) -> &[Timestamp] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn start(&self) -> Timestamp {
        self.0[0]
    }

    pub fn end(&self) -> Timestamp {
        self.0[self.0.len() - 1]
    }

    pub fn is_increasing(&self) -> bool {
        self.0.windows(2).all(|w| w[0] < w[1])
    }

    /// The first `len - 1` timestamps.
    pub fn prefix(&self) -> Occurrence {
        Occurrence(self.0[..self.0.len().saturating_sub(1)].to_vec())
    }

    pub fn extend(&self, t: Timestamp) -> Occurrence {
        let mut v = Vec::with_capacity(self.0.len() + 1);
        v.extend_from_slice(&self.0);
        v.push(t);
        Occurrence(v)
    }
}

impl From<Vec<Timestamp>> for Occurrence {
    fn from(v: Vec<Timestamp>) -> Self {
        Occurrence(v)
    }
}

/// The dominance relation: `t` dominates `u` (`t ◁ u`).
pub fn dominates(t: &Occurrence, u: &Occurrence) -> Result<bool> {
    if t.len() != u.len() {
        return Err(Error::param(format!(
            "cannot compare occurrences of lengths {} and {}",
            t.len(),
            u.len()
        )));
    }
    if t.is_empty() {
        return Ok(false);
    }
    Ok(dominates_unchecked(t.positions(), u.positions()))
}

pub(crate) fn dominates_unchecked(t: &[Timestamp], u: &[Timestamp]) -> bool {
    let n = t.len();
    let (t1, tn, u1, un) = (t[0], t[n - 1], u[0], u[n - 1]);
    let strictly_inside = u1 <= t1 && tn <= un && (u1, un) != (t1, tn);
    if strictly_inside {
        return true;
    }
    n > 1 && t1 == u1 && tn == un && dominates_unchecked(&t[..n - 1], &u[..n - 1])
}

/// Pattern and occurrence constraints. Defaults leave everything unbounded
/// with a minimum gap of one time unit.
///
/// Gaps are inclusive: every consecutive pair must satisfy
/// `min_gap <= t[k+1] - t[k] <= max_gap`. A minimum gap of 0 is read as 1,
/// since occurrences are strictly increasing anyway. Duration is measured
/// from the first to the last matched timestamp.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConstraintSet {
    excluded_items: BTreeSet<ItemId>,
    max_pattern_len: Option<usize>,
    max_duration: Option<Timestamp>,
    min_gap: Timestamp,
    max_gap: Option<Timestamp>,
}

impl Default for ConstraintSet {
    fn default() -> Self {
        ConstraintSet {
            excluded_items: BTreeSet::new(),
            max_pattern_len: None,
            max_duration: None,
            min_gap: 1,
            max_gap: None,
        }
    }
}

impl ConstraintSet {
    pub fn unconstrained() -> Self {
        Self::default()
    }

    pub fn with_excluded(mut self, items: impl IntoIterator<Item = ItemId>) -> Self {
        self.excluded_items.extend(items);
        self
    }

    pub fn with_max_pattern_len(mut self, len: usize) -> Self {
        self.max_pattern_len = Some(len);
        self
    }

    pub fn with_max_duration(mut self, d: Timestamp) -> Self {
        self.max_duration = Some(d);
        self
    }

    pub fn with_min_gap(mut self, g: Timestamp) -> Self {
        self.min_gap = g.max(1);
        self
    }

    pub fn with_max_gap(mut self, g: Timestamp) -> Self {
        self.max_gap = Some(g);
        self
    }

    pub fn validate(&self) -> Result<()> {
        if let Some(max_gap) = self.max_gap {
            if max_gap < self.min_gap {
                return Err(Error::param(format!(
                    "max gap {max_gap} is below min gap {}",
                    self.min_gap
                )));
            }
        }
        if matches!(self.max_duration, Some(d) if d < 0) {
            return Err(Error::param("max duration must be non-negative"));
        }
        if self.max_pattern_len == Some(0) {
            return Err(Error::param("max pattern length must be at least 1"));
        }
        Ok(())
    }

    pub fn excluded_items(&self) -> &BTreeSet<ItemId> {
        &self.excluded_items
    }

    pub fn is_excluded(&self, item: ItemId) -> bool {
        self.excluded_items.contains(&item)
    }

    pub fn max_pattern_len(&self) -> Option<usize> {
        self.max_pattern_len
    }

    pub fn max_duration(&self) -> Option<Timestamp> {
        self.max_duration
    }

    pub fn min_gap(&self) -> Timestamp {
        self.min_gap
    }

    pub fn max_gap(&self) -> Option<Timestamp> {
        self.max_gap
    }

    /// True when any occurrence-level bound (gap or duration) is set.
    pub fn has_temporal_bounds(&self) -> bool {
        self.min_gap > 1 || self.max_gap.is_some() || self.max_duration.is_some()
    }

    /// Item and length constraints, which depend on the pattern only.
    pub fn admits_pattern(&self, p: &Pattern) -> bool {
        !p.items().iter().any(|i| self.is_excluded(*i))
            && self.max_pattern_len.is_none_or(|m| p.len() <= m)
    }

    /// Gap check for one consecutive pair.
    pub fn admits_gap(&self, from: Timestamp, to: Timestamp) -> bool {
        let g = to - from;
        g >= self.min_gap && self.max_gap.is_none_or(|m| g <= m)
    }

    pub fn admits_duration(&self, start: Timestamp, end: Timestamp) -> bool {
        self.max_duration.is_none_or(|d| end - start <= d)
    }
}

/// Whether `(p, t)` honours every constraint in `c`.
pub fn satisfies_constraints(p: &Pattern, t: &Occurrence, c: &ConstraintSet) -> bool {
    if !c.admits_pattern(p) || t.len() != p.len() {
        return false;
    }
    let ts = t.positions();
    c.admits_duration(ts[0], ts[ts.len() - 1]) && ts.windows(2).all(|w| c.admits_gap(w[0], w[1]))
}

/// Whether `t` locates `p` in `s`.
pub fn is_occurrence(p: &Pattern, t: &Occurrence, s: &TimedSequence) -> bool {
    t.len() == p.len()
        && t.is_increasing()
        && p
            .items()
            .iter()
            .zip(t.positions())
            .all(|(&item, &ts)| s.itemset_at(ts).is_some_and(|set| set.contains(item)))
}

/// A pattern together with all of its minimal occurrences, sorted by start.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MinimalOccurrenceSet {
    pattern: Pattern,
    occurrences: Vec<Occurrence>,
}

impl MinimalOccurrenceSet {
    /// Sorts `occurrences` by start; the caller guarantees minimality.
    pub fn new(pattern: Pattern, mut occurrences: Vec<Occurrence>) -> Self {
        occurrences.sort();
        MinimalOccurrenceSet { pattern, occurrences }
    }

    pub fn pattern(&self) -> &Pattern {
        &self.pattern
    }

    pub fn occurrences(&self) -> &[Occurrence] {
        &self.occurrences
    }

    pub fn support(&self) -> usize {
        self.occurrences.len()
    }

    pub fn into_parts(self) -> (Pattern, Vec<Occurrence>) {
        (self.pattern, self.occurrences)
    }
}

/// Default size above which the oracle refuses to run.
pub const DEFAULT_ORACLE_LIMIT: usize = 40;

/// Exhaustive evaluation of occurrences and minimality. Exponential in the
/// pattern length; only meant for verification and for the naive miner.
#[derive(Debug, Clone, Copy)]
pub struct Oracle {
    max_entries: Option<usize>,
}

impl Default for Oracle {
    fn default() -> Self {
        Oracle {
            max_entries: Some(DEFAULT_ORACLE_LIMIT),
        }
    }
}

impl Oracle {
    pub fn with_limit(max_entries: usize) -> Self {
        Oracle {
            max_entries: Some(max_entries),
        }
    }

    /// No size limit.
    pub fn forced() -> Self {
        Oracle { max_entries: None }
    }

    pub fn check_size(&self, s: &TimedSequence) -> Result<()> {
        match self.max_entries {
            Some(limit) if s.len() > limit => Err(Error::SafetyBound(format!(
                "oracle refuses sequences longer than {limit} entries (got {})",
                s.len()
            ))),
            _ => Ok(()),
        }
    }

    /// Every constrained occurrence of `p` in `s`, in lexicographic order.
    pub fn enumerate_occurrences(
        &self,
        p: &Pattern,
        s: &TimedSequence,
        c: &ConstraintSet,
    ) -> Result<Vec<Occurrence>> {
        self.check_size(s)?;
        if !c.admits_pattern(p) {
            return Ok(Vec::new());
        }
        let positions: Vec<Vec<Timestamp>> = p.items().iter().map(|&i| s.timestamps_of(i)).collect();
        let mut out = Vec::new();
        let mut current = Vec::with_capacity(p.len());
        enumerate_tuples(&positions, &mut current, &mut out);
        // Depth-first over ascending timestamp lists yields lexicographic order.
        out.retain(|t| satisfies_constraints(p, t, c));
        debug_assert!(out.iter().all(|t| is_occurrence(p, t, s)));
        Ok(out)
    }

    /// The undominated members of [`Oracle::enumerate_occurrences`].
    /// Minimality is taken within the constrained occurrence set.
    pub fn minimal_occurrences(
        &self,
        p: &Pattern,
        s: &TimedSequence,
        c: &ConstraintSet,
    ) -> Result<MinimalOccurrenceSet> {
        let all = self.enumerate_occurrences(p, s, c)?;
        Ok(MinimalOccurrenceSet::new(p.clone(), minimal_elements(&all)))
    }

    pub fn support(&self, p: &Pattern, s: &TimedSequence, c: &ConstraintSet) -> Result<usize> {
        Ok(self.minimal_occurrences(p, s, c)?.support())
    }
}

fn enumerate_tuples(positions: &[Vec<Timestamp>], current: &mut Vec<Timestamp>, out: &mut Vec<Occurrence>) {
    let k = current.len();
    if k == positions.len() {
        out.push(Occurrence(current.clone()));
        return;
    }
    let after = current.last().copied();
    for &t in &positions[k] {
        if after.is_some_and(|prev| t <= prev) {
            continue;
        }
        current.push(t);
        enumerate_tuples(positions, current, out);
        current.pop();
    }
}

/// Members of `occs` not dominated by any other member.
///
/// Occurrences are bucketed by their `(start, end)` bounds so that each
/// candidate is only compared against one representative per strictly
/// smaller interval and against every member sharing its own bounds.
pub fn minimal_elements(occs: &[Occurrence]) -> Vec<Occurrence> {
    let mut buckets: HashMap<(Timestamp, Timestamp), Vec<&Occurrence>> = HashMap::new();
    for o in occs {
        buckets.entry((o.start(), o.end())).or_default().push(o);
    }
    let mut bounds: Vec<(Timestamp, Timestamp)> = buckets.keys().copied().collect();
    bounds.sort_unstable();

    occs.iter()
        .filter(|t| {
            let own = (t.start(), t.end());
            let from = bounds.partition_point(|&(s, _)| s < own.0);
            let by_smaller_interval = bounds[from..]
                .iter()
                .take_while(|&&(s, _)| s <= own.1)
                .any(|&(s, e)| {
                    (s, e) != own
                        && e <= own.1
                        && dominates_unchecked(buckets[&(s, e)][0].positions(), t.positions())
                });
            let by_same_bounds = buckets[&own]
                .iter()
                .any(|u| dominates_unchecked(u.positions(), t.positions()));
            !(by_smaller_interval || by_same_bounds)
        })
        .cloned()
        .collect()
}

/// [`Oracle::enumerate_occurrences`] with the default size limit.
pub fn enumerate_occurrences(p: &Pattern, s: &TimedSequence, c: &ConstraintSet) -> Result<Vec<Occurrence>> {
    Oracle::default().enumerate_occurrences(p, s, c)
}

/// [`Oracle::minimal_occurrences`] with the default size limit.
pub fn minimal_occurrences(p: &Pattern, s: &TimedSequence, c: &ConstraintSet) -> Result<MinimalOccurrenceSet> {
    Oracle::default().minimal_occurrences(p, s, c)
}

/// [`Oracle::support`] with the default size limit.
pub fn support(p: &Pattern, s: &TimedSequence, c: &ConstraintSet) -> Result<usize> {
    Oracle::default().support(p, s, c)
}
