//! Run budgets and process memory accounting.
//!
//! Memory figures come from `/proc/self` on Linux and are approximate: they
//! count the whole process, not a single mining run. Elsewhere they read 0.

use std::fs;
use std::time::{Duration, Instant};

use crate::error::{BudgetKind, Error, Result};
use crate::occurrence::Oracle;

/// Default cap on the number of candidate patterns the naive miner will test.
pub const DEFAULT_NAIVE_CANDIDATE_BOUND: usize = 2_000_000;

/// Budgets and safety bounds applied to one mining run.
#[derive(Debug, Clone, Copy)]
pub struct RunLimits {
    pub deadline: Option<Instant>,
    pub memory_bytes: Option<u64>,
    /// `None` lifts the bound.
    pub naive_candidate_bound: Option<usize>,
    pub oracle: Oracle,
}

impl Default for RunLimits {
    fn default() -> Self {
        RunLimits {
            deadline: None,
            memory_bytes: None,
            naive_candidate_bound: Some(DEFAULT_NAIVE_CANDIDATE_BOUND),
            oracle: Oracle::default(),
        }
    }
}

impl RunLimits {
    /// Lifts the naive candidate bound and the oracle size limit.
    pub fn forced() -> Self {
        RunLimits {
            naive_candidate_bound: None,
            oracle: Oracle::forced(),
            ..Self::default()
        }
    }

    pub fn with_time_budget(mut self, budget: Duration) -> Self {
        self.deadline = Some(Instant::now() + budget);
        self
    }

    pub fn with_memory_budget(mut self, bytes: u64) -> Self {
        self.memory_bytes = Some(bytes);
        self
    }

    pub fn check_time(&self) -> Result<()> {
        match self.deadline {
            Some(d) if Instant::now() >= d => Err(Error::BudgetExceeded(BudgetKind::Time)),
            _ => Ok(()),
        }
    }

    pub fn check_memory(&self) -> Result<()> {
        match self.memory_bytes {
            Some(limit) if current_rss_bytes() > limit => Err(Error::BudgetExceeded(BudgetKind::Memory)),
            _ => Ok(()),
        }
    }

    pub fn check(&self) -> Result<()> {
        self.check_time()?;
        self.check_memory()
    }
}

/// Resident set size right now.
pub fn current_rss_bytes() -> u64 {
    fs::read_to_string("/proc/self/statm")
        .ok()
        .and_then(|s| s.split_whitespace().nth(1)?.parse::<u64>().ok())
        .map_or(0, |pages| pages * page_size())
}

/// High-water mark of the resident set size (`VmHWM`).
pub fn peak_rss_bytes() -> u64 {
    fs::read_to_string("/proc/self/status")
        .ok()
        .and_then(|s| {
            s.lines()
                .find(|l| l.starts_with("VmHWM:"))
                .and_then(|l| l.split_whitespace().nth(1)?.parse::<u64>().ok())
        })
        .map_or(0, |kb| kb * 1024)
}

/// Resets the kernel's high-water mark to the current RSS. Returns false
/// where that is unsupported, in which case peaks are cumulative.
pub fn reset_peak_rss() -> bool {
    fs::write("/proc/self/clear_refs", "5").is_ok()
}

fn page_size() -> u64 {
    4096
}
