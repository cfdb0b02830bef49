//! Frequent string pattern mining in a single long sequence of timestamped
//! itemsets, with support counted as the number of minimal occurrences.
//!
//! * [`sequence`]: alphabet, itemsets, the long sequence, parsing and the
//!   random sequence generator.
//! * [`occurrence`]: occurrences, dominance, constraints and the brute-force
//!   oracle.
//! * [`miner`]: the incremental miner and the naive generate-and-test miner.
//! * [`bench`] and [`verify`]: benchmark harness and oracle fuzzing.

pub mod bench;
pub mod error;
pub mod limits;
pub mod miner;
pub mod occurrence;
pub mod pattern;
pub mod sequence;
pub mod verify;

pub use error::{BudgetKind, Error, Result};
pub use limits::RunLimits;
pub use miner::{
    extend_occurrences, frequent_items, mine, mine_naive, mine_naive_with, mine_with, MiningParams,
    MiningResult, OccurrenceFrontier, Threshold,
};
pub use occurrence::{
    dominates, enumerate_occurrences, is_occurrence, minimal_occurrences, satisfies_constraints, support,
    ConstraintSet, MinimalOccurrenceSet, Occurrence, Oracle,
};
pub use pattern::{is_prefix, Pattern};
pub use sequence::{generate_random_sequence, parse_sequence, ItemId, Itemset, SymbolTable, TimedSequence, Timestamp};
