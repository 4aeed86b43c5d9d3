use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::interval::Interval;

/// A proposal extended by a start stage and an end stage of width `d / W`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AugmentedProposal {
    pub core: Interval,
    pub start_stage: Interval,
    pub end_stage: Interval,
    pub divisor: f64,
}

pub fn augment_proposal(p: &Interval, divisor: f64) -> Result<AugmentedProposal> {
    if !(divisor > 0.0) || !divisor.is_finite() {
        return Err(invalid("augmentation divisor must be positive"));
    }
    let ext = p.duration() / divisor;
    Ok(AugmentedProposal {
        core: *p,
        start_stage: Interval::new(p.start() - ext, p.start())?,
        end_stage: Interval::new(p.end(), p.end() + ext)?,
        divisor,
    })
}

/// Number of snapshots per stage.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct SamplingConfig {
    pub n_core: usize,
    pub n_start: usize,
    pub n_end: usize,
}

impl Default for SamplingConfig {
    fn default() -> Self {
        Self {
            n_core: 3,
            n_start: 1,
            n_end: 1,
        }
    }
}

impl SamplingConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_core == 0 {
            return Err(invalid("at least one core sample is required"));
        }
        Ok(())
    }

    pub fn total(&self) -> usize {
        self.n_start + self.n_core + self.n_end
    }
}

/// Midpoints of `n` equal sub-intervals.
pub(crate) fn midpoints(i: &Interval, n: usize) -> impl Iterator<Item = f64> + '_ {
    let step = i.duration() / n.max(1) as f64;
    (0..n).map(move |k| i.start() + (k as f64 + 0.5) * step)
}

/// Sample times ordered start stage, core, end stage.
pub fn sample_timestamps(a: &AugmentedProposal, cfg: &SamplingConfig) -> Vec<f64> {
    midpoints(&a.start_stage, cfg.n_start)
        .chain(midpoints(&a.core, cfg.n_core))
        .chain(midpoints(&a.end_stage, cfg.n_end))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn iv(a: f64, b: f64) -> Interval {
        Interval::new(a, b).unwrap()
    }

    #[test]
    fn augmentation_examples() {
        let a = augment_proposal(&iv(0.0, 9.0), 3.0).unwrap();
        assert_eq!((a.start_stage, a.end_stage), (iv(-3.0, 0.0), iv(9.0, 12.0)));
        let a = augment_proposal(&iv(5.0, 8.0), 3.0).unwrap();
        assert_eq!((a.start_stage, a.end_stage), (iv(4.0, 5.0), iv(8.0, 9.0)));
        let a = augment_proposal(&iv(0.0, 9.0), 900.0).unwrap();
        assert!((a.start_stage.duration() - 0.01).abs() < 1e-12);
        assert!((a.end_stage.duration() - 0.01).abs() < 1e-12);
        assert!(augment_proposal(&iv(0.0, 1.0), 0.0).is_err());
    }

    #[test]
    fn sampling_examples() {
        let a = augment_proposal(&iv(0.0, 9.0), 3.0).unwrap();
        let cfg = SamplingConfig::default();
        assert_eq!(sample_timestamps(&a, &cfg), vec![-1.5, 1.5, 4.5, 7.5, 10.5]);
        let core_only = SamplingConfig {
            n_core: 3,
            n_start: 0,
            n_end: 0,
        };
        assert_eq!(sample_timestamps(&a, &core_only), vec![1.5, 4.5, 7.5]);
    }
}
