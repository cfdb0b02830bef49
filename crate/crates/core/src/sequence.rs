//! The long sequence: an interned alphabet, itemsets, and timestamped entries.
//!
//! Sequence files are plain text, one entry per line:
//!
//! ```text
//! # comment
//! 1 a
//! 2 b c
//! 4 a c
//! ```
//!
//! Timestamps are integers and must strictly increase; they need not be
//! contiguous. All temporal semantics (gaps, durations, intervals) use the
//! explicit timestamp, never the line position.

use std::collections::HashMap;
use std::fmt;
use std::fmt::Write as _;

use rand::RngCore;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Timestamp = i64;

/// Dense, 1-based item identifier. Id order is the item total order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ItemId(pub u32);

impl ItemId {
    pub fn index(self) -> usize {
        self.0 as usize - 1
    }
}

impl fmt::Display for ItemId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Bijection between textual tokens and item ids `1..=len`.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SymbolTable {
    symbols: Vec<String>,
    ids: HashMap<String, ItemId>,
}

impl SymbolTable {
    pub fn new() -> Self {
        Self::default()
    }

    /// Tokens `"1"..="n"` mapped to ids `1..=n`.
    pub fn numeric(n: usize) -> Self {
        let mut table = Self::new();
        for i in 1..=n {
            table.intern(&i.to_string());
        }
        table
    }

    /// Returns the id for `token`, assigning the next id on first sight.
    pub fn intern(&mut self, token: &str) -> ItemId {
        if let Some(&id) = self.ids.get(token) {
            return id;
        }
        self.symbols.push(token.to_owned());
        let id = ItemId(self.symbols.len() as u32);
        self.ids.insert(token.to_owned(), id);
        id
    }

    pub fn id(&self, token: &str) -> Option<ItemId> {
        self.ids.get(token).copied()
    }

    pub fn token(&self, id: ItemId) -> Option<&str> {
        if id.0 == 0 {
            return None;
        }
        self.symbols.get(id.index()).map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }

    pub fn ids(&self) -> impl Iterator<Item = ItemId> {
        (1..=self.symbols.len() as u32).map(ItemId)
    }
}

/// Sorted, duplicate-free set of items attached to one timestamp.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Itemset(Vec<ItemId>);

impl Itemset {
    /// Sorts the items; fails on duplicates.
    pub fn new(mut items: Vec<ItemId>) -> Result<Self> {
        items.sort_unstable();
        if items.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::param("duplicate item in itemset"));
        }
        Ok(Itemset(items))
    }

    pub fn singleton(item: ItemId) -> Self {
        Itemset(vec![item])
    }

    pub fn contains(&self, item: ItemId) -> bool {
        self.0.binary_search(&item).is_ok()
    }

    pub fn items(&self) -> &[ItemId] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Sub-itemset relation (set inclusion).
    pub fn is_subset(&self, other: &Itemset) -> bool {
        self.0.iter().all(|&i| other.contains(i))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Entry {
    pub timestamp: Timestamp,
    pub itemset: Itemset,
}

/// The single long sequence being mined. Immutable once built.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct TimedSequence {
    entries: Vec<Entry>,
    alphabet: SymbolTable,
}

impl TimedSequence {
    /// Validates strictly increasing timestamps, nonempty itemsets and that
    /// every item belongs to `alphabet`.
    pub fn new(alphabet: SymbolTable, entries: Vec<Entry>) -> Result<Self> {
        for (i, entry) in entries.iter().enumerate() {
            if entry.itemset.is_empty() {
                return Err(Error::param(format!("empty itemset at timestamp {}", entry.timestamp)));
            }
            if i > 0 && entries[i - 1].timestamp >= entry.timestamp {
                return Err(Error::param(format!(
                    "timestamps not strictly increasing at {}",
                    entry.timestamp
                )));
            }
            if let Some(bad) = entry.itemset.items().iter().find(|id| id.0 == 0 || id.index() >= alphabet.len()) {
                return Err(Error::param(format!("item id {bad} outside the alphabet")));
            }
        }
        Ok(TimedSequence { entries, alphabet })
    }

    pub fn entries(&self) -> &[Entry] {
        &self.entries
    }

    pub fn alphabet(&self) -> &SymbolTable {
        &self.alphabet
    }

    /// Number of entries, |S|.
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Total number of items over all entries, ‖S‖.
    pub fn total_items(&self) -> usize {
        self.entries.iter().map(|e| e.itemset.len()).sum()
    }

    pub fn position_of(&self, t: Timestamp) -> Option<usize> {
        self.entries.binary_search_by_key(&t, |e| e.timestamp).ok()
    }

    pub fn itemset_at(&self, t: Timestamp) -> Option<&Itemset> {
        self.position_of(t).map(|i| &self.entries[i].itemset)
    }

    /// Timestamps of the entries containing `item`, ascending.
    pub fn timestamps_of(&self, item: ItemId) -> Vec<Timestamp> {
        self.entries
            .iter()
            .filter(|e| e.itemset.contains(item))
            .map(|e| e.timestamp)
            .collect()
    }

    /// Serializes to the line format accepted by [`parse_sequence`].
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for entry in &self.entries {
            write!(out, "{}", entry.timestamp).unwrap();
            for &item in entry.itemset.items() {
                out.push(' ');
                out.push_str(self.alphabet.token(item).expect("validated on construction"));
            }
            out.push('\n');
        }
        out
    }
}

/// Parses the sequence line format. Tokens are interned in first-appearance
/// order.
pub fn parse_sequence(text: &str) -> Result<TimedSequence> {
    let mut alphabet = SymbolTable::new();
    let mut entries: Vec<Entry> = Vec::new();

    for (lineno, raw) in text.lines().enumerate() {
        let line_no = lineno + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut fields = line.split_whitespace();
        let ts_field = fields.next().expect("line is not blank");
        let timestamp: Timestamp = ts_field
            .parse()
            .map_err(|_| Error::format(line_no, format!("invalid timestamp {ts_field:?}")))?;

        if let Some(prev) = entries.last() {
            if prev.timestamp == timestamp {
                return Err(Error::format(line_no, format!("duplicate timestamp {timestamp}")));
            }
            if prev.timestamp > timestamp {
                return Err(Error::format(
                    line_no,
                    format!("timestamp {timestamp} follows {}", prev.timestamp),
                ));
            }
        }

        let items: Vec<ItemId> = fields.map(|tok| alphabet.intern(tok)).collect();
        if items.is_empty() {
            return Err(Error::format(line_no, "empty itemset"));
        }
        let itemset = Itemset::new(items)
            .map_err(|_| Error::format(line_no, "duplicate item within one itemset"))?;
        entries.push(Entry { timestamp, itemset });
    }

    Ok(TimedSequence { entries, alphabet })
}

/// Random singleton-itemset sequence with equiprobable items.
///
/// Entries have timestamps `1..=length`; items are tokens `"1"..="alphabet_size"`.
/// The generator is ChaCha8 seeded with `ChaCha8Rng::seed_from_u64(seed)`.
/// Each item is drawn from `next_u32()` by rejection sampling: values at or
/// above `floor(2^32 / q) * q` are discarded, otherwise the item id is
/// `1 + value % q`. Any implementation of that recipe reproduces the same
/// sequences.
pub fn generate_random_sequence(length: usize, alphabet_size: usize, seed: u64) -> Result<TimedSequence> {
    if alphabet_size == 0 {
        return Err(Error::param("alphabet size must be at least 1"));
    }
    let q = u64::try_from(alphabet_size)
        .ok()
        .filter(|&q| q <= u64::from(u32::MAX))
        .ok_or_else(|| Error::param("alphabet size too large"))?;
    let zone = (1u64 << 32) / q * q;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let entries = (1..=length)
        .map(|t| {
            let value = loop {
                let v = u64::from(rng.next_u32());
                if v < zone {
                    break v;
                }
            };
            Entry {
                timestamp: t as Timestamp,
                itemset: Itemset::singleton(ItemId((1 + value % q) as u32)),
            }
        })
        .collect();

    Ok(TimedSequence {
        entries,
        alphabet: SymbolTable::numeric(alphabet_size),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_input_is_empty_sequence() {
        let s = parse_sequence("").unwrap();
        assert_eq!(s.len(), 0);
        assert_eq!(s.total_items(), 0);
    }

    #[test]
    fn parses_running_example() {
        let s = parse_sequence("1 a\n2 b c\n3 a c\n4 c\n5 d").unwrap();
        assert_eq!(s.len(), 5);
        assert_eq!(s.total_items(), 7);
        let a = s.alphabet().id("a").unwrap();
        let c = s.alphabet().id("c").unwrap();
        assert_eq!(a, ItemId(1));
        assert_eq!(s.alphabet().id("d"), Some(ItemId(4)));
        assert_eq!(s.timestamps_of(c), vec![2, 3, 4]);
        assert_eq!(s.timestamps_of(a), vec![1, 3]);
    }

    #[test]
    fn comments_blank_lines_and_extra_spaces() {
        let s = parse_sequence("# header\n\n10   x  y\n  # indented comment\n20\tz\n").unwrap();
        assert_eq!(s.len(), 2);
        assert_eq!(s.entries()[0].timestamp, 10);
        assert_eq!(s.entries()[1].itemset.len(), 1);
    }

    #[test]
    fn itemsets_are_sorted_by_id() {
        let s = parse_sequence("1 c b\n2 b a\n").unwrap();
        let items = s.entries()[1].itemset.items();
        assert!(items.windows(2).all(|w| w[0] < w[1]));
        assert_eq!(s.to_text(), "1 c b\n2 b a\n");
    }

    #[test]
    fn format_errors() {
        let dup_ts = parse_sequence("1 a\n1 b").unwrap_err();
        assert!(matches!(dup_ts, Error::Format { line: 2, .. }), "{dup_ts}");
        assert!(matches!(parse_sequence("2 a\n1 b"), Err(Error::Format { line: 2, .. })));
        assert!(matches!(parse_sequence("1 a a"), Err(Error::Format { line: 1, .. })));
        assert!(matches!(parse_sequence("1 a\n3\n"), Err(Error::Format { line: 2, .. })));
        assert!(matches!(parse_sequence("x a"), Err(Error::Format { line: 1, .. })));
    }

    #[test]
    fn generator_shape_and_determinism() {
        assert!(generate_random_sequence(0, 10, 42).unwrap().is_empty());

        let s = generate_random_sequence(20, 10, 42).unwrap();
        assert_eq!(s.len(), 20);
        for (i, e) in s.entries().iter().enumerate() {
            assert_eq!(e.timestamp, i as i64 + 1);
            assert_eq!(e.itemset.len(), 1);
            let id = e.itemset.items()[0];
            assert!((1..=10).contains(&id.0));
            assert_eq!(s.alphabet().token(id), Some(id.0.to_string().as_str()));
        }
        assert_eq!(s, generate_random_sequence(20, 10, 42).unwrap());
        assert_ne!(s, generate_random_sequence(20, 10, 43).unwrap());
    }

    #[test]
    fn generator_rejects_empty_alphabet() {
        assert!(matches!(generate_random_sequence(5, 0, 1), Err(Error::InvalidParameter(_))));
    }

    #[test]
    fn generator_marginals_are_uniform() {
        let n = 100_000;
        let q = 10;
        let s = generate_random_sequence(n, q, 7).unwrap();
        let mut counts = vec![0usize; q];
        for e in s.entries() {
            counts[e.itemset.items()[0].index()] += 1;
        }
        let p = 1.0 / q as f64;
        let mean = n as f64 * p;
        let sd = (n as f64 * p * (1.0 - p)).sqrt();
        for (i, &c) in counts.iter().enumerate() {
            assert!((c as f64 - mean).abs() <= 3.0 * sd, "item {} count {c}", i + 1);
        }
    }

    #[test]
    fn rejects_invalid_entries() {
        let table = SymbolTable::numeric(2);
        let bad = vec![
            Entry { timestamp: 2, itemset: Itemset::singleton(ItemId(1)) },
            Entry { timestamp: 2, itemset: Itemset::singleton(ItemId(2)) },
        ];
        assert!(TimedSequence::new(table.clone(), bad).is_err());
        let out_of_range = vec![Entry { timestamp: 1, itemset: Itemset::singleton(ItemId(3)) }];
        assert!(TimedSequence::new(table, out_of_range).is_err());
    }
}
