//! Exact operation counters.
//!
//! Cost model: one weight read or write is one tick (a write ticks even when
//! the weight already holds its target value); each per-cluster max, argmax
//! or sampling-scan comparison is one tick; each random value drawn is one
//! tick. `new_weights` additionally records writes that actually changed a
//! weight from zero. Wall time is advisory and excluded from equality checks.

use std::ops::{Add, AddAssign};

use serde::Serialize;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct CostReport {
    pub weight_reads: u64,
    pub weight_writes: u64,
    pub comparisons: u64,
    pub rng_draws: u64,
    pub new_weights: u64,
    pub wall_nanos: u64,
}

impl CostReport {
    /// The deterministic operation counts, `(reads, writes, comparisons, rng draws)`.
    pub fn counts(&self) -> (u64, u64, u64, u64) {
        (
            self.weight_reads,
            self.weight_writes,
            self.comparisons,
            self.rng_draws,
        )
    }

    /// Operations performed since `earlier` was snapshotted from the same accumulator.
    pub fn since(&self, earlier: &CostReport) -> CostReport {
        CostReport {
            weight_reads: self.weight_reads - earlier.weight_reads,
            weight_writes: self.weight_writes - earlier.weight_writes,
            comparisons: self.comparisons - earlier.comparisons,
            rng_draws: self.rng_draws - earlier.rng_draws,
            new_weights: self.new_weights - earlier.new_weights,
            wall_nanos: self.wall_nanos.saturating_sub(earlier.wall_nanos),
        }
    }
}

impl AddAssign for CostReport {
    fn add_assign(&mut self, rhs: Self) {
        self.weight_reads += rhs.weight_reads;
        self.weight_writes += rhs.weight_writes;
        self.comparisons += rhs.comparisons;
        self.rng_draws += rhs.rng_draws;
        self.new_weights += rhs.new_weights;
        self.wall_nanos += rhs.wall_nanos;
    }
}

impl Add for CostReport {
    type Output = CostReport;

    fn add(mut self, rhs: Self) -> CostReport {
        self += rhs;
        self
    }
}
