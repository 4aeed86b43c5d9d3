use serde::{Deserialize, Serialize};

use super::Proposal;
use crate::error::{invalid, Result};
use crate::interval::Interval;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SlidingWindowConfig {
    pub n_widths: usize,
    pub w_min: f64,
    pub w_max: f64,
    pub stride: f64,
}

impl Default for SlidingWindowConfig {
    fn default() -> Self {
        Self {
            n_widths: 30,
            w_min: 2.0,
            w_max: 40.0,
            stride: 0.1,
        }
    }
}

impl SlidingWindowConfig {
    /// Geometric progression of `n_widths` widths from `w_min` to `w_max`.
    pub fn widths(&self) -> Vec<f64> {
        let last = (self.n_widths - 1) as f64;
        let ratio = self.w_max / self.w_min;
        (0..self.n_widths)
            .map(|k| match k {
                0 => self.w_min,
                k if k + 1 == self.n_widths => self.w_max,
                k => self.w_min * ratio.powf(k as f64 / last),
            })
            .collect()
    }
}

/// Every window of every width starting at `t_begin + k * stride` that fits
/// inside `[t_begin, t_end]`. Scores are a constant 0.5.
pub fn sliding_window(t_begin: f64, t_end: f64, cfg: &SlidingWindowConfig) -> Result<Vec<Proposal>> {
    if !(cfg.w_min > 0.0 && cfg.w_min < cfg.w_max) {
        return Err(invalid("sliding window needs 0 < w_min < w_max"));
    }
    if cfg.n_widths < 2 {
        return Err(invalid("sliding window needs at least two widths"));
    }
    if !(cfg.stride > 0.0) {
        return Err(invalid("sliding window stride must be positive"));
    }
    let span = t_end - t_begin;
    let mut out = Vec::new();
    for w in cfg.widths() {
        if w > span + 1e-9 {
            continue;
        }
        let count = ((span - w) / cfg.stride + 1e-9).floor() as usize + 1;
        let provenance = format!("sliding width={w:.3}");
        for k in 0..count {
            let start = t_begin + k as f64 * cfg.stride;
            out.push(Proposal::new(Interval::new(start, start + w)?, 0.5, provenance.clone()));
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn width_endpoints() {
        let w = SlidingWindowConfig::default().widths();
        assert_eq!(w.len(), 30);
        assert_eq!((w[0], w[29]), (2.0, 40.0));
        assert!(w.windows(2).all(|p| p[1] > p[0]));
        let ratio = w[1] / w[0];
        assert!(w.windows(2).all(|p| (p[1] / p[0] - ratio).abs() < 1e-12));
        let two = SlidingWindowConfig {
            n_widths: 2,
            w_min: 2.0,
            w_max: 8.0,
            stride: 1.0,
        };
        assert_eq!(two.widths(), vec![2.0, 8.0]);
    }

    #[test]
    fn start_enumeration() {
        let cfg = SlidingWindowConfig {
            n_widths: 2,
            w_min: 4.0,
            w_max: 12.0,
            stride: 2.0,
        };
        let out = sliding_window(0.0, 10.0, &cfg).unwrap();
        let starts: Vec<f64> = out.iter().map(|p| p.interval.start()).collect();
        assert_eq!(starts, vec![0.0, 2.0, 4.0, 6.0]);
        assert!(out.iter().all(|p| p.score == 0.5));
    }

    #[test]
    fn invalid_params() {
        let mut cfg = SlidingWindowConfig {
            n_widths: 1,
            ..SlidingWindowConfig::default()
        };
        assert!(sliding_window(0.0, 10.0, &cfg).is_err());
        cfg = SlidingWindowConfig::default();
        cfg.stride = 0.0;
        assert!(sliding_window(0.0, 10.0, &cfg).is_err());
    }
}
