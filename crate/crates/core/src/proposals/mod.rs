//! Temporal proposal generation from the actioness signal.
//!
//! [`retag`] floods the robustly normalized rate at every threshold of a
//! grid, merges nearby runs at every merge threshold, drops short intervals,
//! scores the union and removes near-duplicates with interval NMS.
//! [`event_tag`], [`watershed_baseline`] and [`sliding_window`] are the
//! comparison methods.

mod nms;
mod score;
mod sliding;
mod tag;
mod watershed;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::interval::Interval;

pub use nms::{interval_nms, proposal_order};
pub use score::{score_proposal, RateIntegral};
pub use sliding::{sliding_window, SlidingWindowConfig};
pub use tag::{event_tag, retag, watershed_baseline};
pub use watershed::{merge_intervals, watershed_intervals};

/// A scored candidate interval. `provenance` records which method (and
/// threshold pair) produced it and breaks ranking ties.
#[derive(Debug, Clone, PartialEq)]
pub struct Proposal {
    pub interval: Interval,
    pub score: f64,
    pub provenance: String,
}

impl Proposal {
    pub fn new(interval: Interval, score: f64, provenance: impl Into<String>) -> Self {
        Self {
            interval,
            score,
            provenance: provenance.into(),
        }
    }
}

/// The default threshold grid `{0.05, 0.10, ..., 0.95}`.
pub fn default_threshold_grid() -> Vec<f64> {
    (1..=19).map(|k| k as f64 / 20.0).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ProposalConfig {
    /// Flood thresholds.
    pub lambda_grid: Vec<f64>,
    /// Merge thresholds.
    pub mu_grid: Vec<f64>,
    /// tIoU above which a lower-ranked proposal is suppressed.
    pub nms_tiou: f64,
    /// Minimum proposal length in seconds, applied after merging.
    pub min_duration: f64,
}

impl Default for ProposalConfig {
    fn default() -> Self {
        Self {
            lambda_grid: default_threshold_grid(),
            mu_grid: default_threshold_grid(),
            nms_tiou: 0.95,
            min_duration: 2.0,
        }
    }
}

impl ProposalConfig {
    pub fn validate(&self) -> Result<()> {
        let in_unit = |v: f64| v > 0.0 && v < 1.0;
        if self.lambda_grid.is_empty() || !self.lambda_grid.iter().copied().all(in_unit) {
            return Err(invalid("lambda grid must be non-empty with values in (0, 1)"));
        }
        if self.mu_grid.is_empty() || !self.mu_grid.iter().copied().all(in_unit) {
            return Err(invalid("mu grid must be non-empty with values in (0, 1)"));
        }
        if !(self.nms_tiou > 0.0 && self.nms_tiou <= 1.0) {
            return Err(invalid("nms tIoU must lie in (0, 1]"));
        }
        if !(self.min_duration >= 0.0) {
            return Err(invalid("minimum duration must be non-negative"));
        }
        Ok(())
    }
}

/// Tolerance for comparing durations built from microsecond boundaries.
pub(crate) const DURATION_EPS: f64 = 1e-9;
