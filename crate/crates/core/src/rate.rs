//! Binned event rate and its percentile-robust normalization.
//!
//! The normalized rate is the actioness signal that drives proposal
//! generation: `(clip(r, lo, hi) - lo) / (hi - lo)` where `lo` and `hi` are
//! the `p`-th and `(100 - p)`-th nearest-rank percentiles of the binned rate.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::ingest::EventStream;

/// Rate samples on a regular grid of bins starting at `t0_us`.
#[derive(Debug, Clone, PartialEq)]
pub struct RateSeries {
    values: Vec<f64>,
    bin_us: u64,
    t0_us: u64,
    normalized: bool,
}

impl RateSeries {
    pub fn new(values: Vec<f64>, bin_width: f64, t0_us: u64, normalized: bool) -> Result<Self> {
        let bin_us = bin_width_us(bin_width)?;
        if values.is_empty() {
            return Err(invalid("rate series needs at least one bin"));
        }
        if values.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(invalid("rate values must be finite and non-negative"));
        }
        if normalized && values.iter().any(|v| *v > 1.0) {
            return Err(invalid("normalized rate values must lie in [0, 1]"));
        }
        Ok(Self {
            values,
            bin_us,
            t0_us,
            normalized,
        })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Bin width in seconds.
    pub fn bin_width(&self) -> f64 {
        self.bin_us as f64 / 1e6
    }

    pub fn bin_width_us(&self) -> u64 {
        self.bin_us
    }

    pub fn t0_us(&self) -> u64 {
        self.t0_us
    }

    pub fn is_normalized(&self) -> bool {
        self.normalized
    }

    /// Start of bin `k` in microseconds.
    #[inline]
    pub fn bin_start_us(&self, k: usize) -> u64 {
        self.t0_us + k as u64 * self.bin_us
    }

    /// Start of bin `k` in seconds (`k == len()` gives the series end).
    #[inline]
    pub fn bin_start_secs(&self, k: usize) -> f64 {
        self.bin_start_us(k) as f64 / 1e6
    }

    pub fn start_secs(&self) -> f64 {
        self.bin_start_secs(0)
    }

    pub fn end_secs(&self) -> f64 {
        self.bin_start_secs(self.values.len())
    }
}

fn bin_width_us(bin_width: f64) -> Result<u64> {
    if !(bin_width > 0.0) || !bin_width.is_finite() {
        return Err(invalid("bin width must be positive"));
    }
    let us = (bin_width * 1e6).round();
    if us < 1.0 {
        return Err(invalid("bin width must be at least one microsecond"));
    }
    Ok(us as u64)
}

/// Rate parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RateConfig {
    /// Bin width in seconds.
    pub bin_width: f64,
    /// Robust percentile in percent, `0 <= p < 50`.
    pub percentile: f64,
}

impl Default for RateConfig {
    fn default() -> Self {
        Self {
            bin_width: 0.033,
            percentile: 1.0,
        }
    }
}

impl RateConfig {
    pub fn validate(&self) -> Result<()> {
        bin_width_us(self.bin_width)?;
        check_percentile(self.percentile)
    }
}

fn check_percentile(p: f64) -> Result<()> {
    if (0.0..50.0).contains(&p) {
        Ok(())
    } else {
        Err(invalid(format!("percentile {p} outside [0, 50)")))
    }
}

/// Events per second in half-open bins `[t_begin + k*w, t_begin + (k+1)*w)`.
///
/// There are `(t_end - t_begin) / w + 1` bins so that an event at `t_end`
/// is always counted; the last bin may extend past `t_end` and is still
/// divided by the nominal width. Consequently `sum(values) * w` equals the
/// event count exactly. Polarity is ignored.
pub fn event_rate(s: &EventStream, bin_width: f64) -> Result<RateSeries> {
    let bin_us = bin_width_us(bin_width)?;
    let n_bins = ((s.t_end() - s.t_begin()) / bin_us + 1) as usize;
    let mut counts = vec![0u64; n_bins];
    let t0 = s.t_begin();
    for e in s.events() {
        counts[((e.t - t0) / bin_us) as usize] += 1;
    }
    let w = bin_us as f64 / 1e6;
    Ok(RateSeries {
        values: counts.into_iter().map(|c| c as f64 / w).collect(),
        bin_us,
        t0_us: t0,
        normalized: false,
    })
}

/// Nearest-rank percentile of an ascending slice: the value at rank
/// `ceil(q/100 * n)` (1-based, clamped to `[1, n]`).
pub fn nearest_rank(sorted: &[f64], q: f64) -> f64 {
    let n = sorted.len();
    assert!(n > 0, "percentile of empty slice");
    let rank = (q * n as f64 / 100.0).ceil() as usize;
    sorted[rank.clamp(1, n) - 1]
}

/// The robust minimum and maximum (`p`-th and `(100-p)`-th percentiles).
pub fn robust_bounds(values: &[f64], p: f64) -> Result<(f64, f64)> {
    check_percentile(p)?;
    if values.is_empty() {
        return Err(invalid("empty rate series"));
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    Ok((nearest_rank(&sorted, p), nearest_rank(&sorted, 100.0 - p)))
}

/// Clips to the robust bounds and rescales to `[0, 1]`. A degenerate range
/// (`hi == lo`) yields all zeros.
pub fn robust_normalize(r: &RateSeries, p: f64) -> Result<RateSeries> {
    if r.normalized {
        return Err(invalid("rate series is already normalized"));
    }
    let (lo, hi) = robust_bounds(&r.values, p)?;
    let span = hi - lo;
    let values = if span > 0.0 {
        r.values
            .iter()
            .map(|v| ((v.clamp(lo, hi) - lo) / span).clamp(0.0, 1.0))
            .collect()
    } else {
        vec![0.0; r.values.len()]
    };
    Ok(RateSeries {
        values,
        bin_us: r.bin_us,
        t0_us: r.t0_us,
        normalized: true,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::Event;

    fn raw(values: Vec<f64>) -> RateSeries {
        RateSeries::new(values, 1.0, 0, false).unwrap()
    }

    #[test]
    fn uniform_events_in_one_bin() {
        // 33 events inside the first 33 ms bin -> 1000 ev/s
        let events = (0..33u64).map(|i| Event::new(i * 1000, 0, 0, i % 2 == 0)).collect();
        let s = EventStream::new(events, 1, 1, 0, 99_999).unwrap();
        let r = event_rate(&s, 0.033).unwrap();
        assert!((r.values()[0] - 1000.0).abs() < 1e-9);
        assert!(r.values()[1..].iter().all(|&v| v == 0.0));
        assert_eq!(r.len(), 99_999 / 33_000 + 1);
    }

    #[test]
    fn empty_stream_single_zero_bin() {
        let s = EventStream::new(vec![], 4, 4, 0, 0).unwrap();
        let r = event_rate(&s, 0.033).unwrap();
        assert_eq!(r.values(), &[0.0]);
    }

    #[test]
    fn concentrated_events() {
        let events = (0..7).map(|_| Event::new(2_500_000, 0, 0, true)).collect();
        let s = EventStream::new(events, 1, 1, 0, 4_000_000).unwrap();
        let r = event_rate(&s, 1.0).unwrap();
        assert_eq!(r.values(), &[0.0, 0.0, 7.0, 0.0, 0.0]);
    }

    #[test]
    fn last_partial_bin_uses_nominal_width() {
        // extent 2.5 s with 1 s bins -> bins [0,1), [1,2), [2,3); an event at
        // t_end lands in the partial third bin and counts over a full second
        let events = vec![Event::new(0, 0, 0, true), Event::new(2_500_000, 0, 0, true)];
        let s = EventStream::new(events, 1, 1, 0, 2_500_000).unwrap();
        let r = event_rate(&s, 1.0).unwrap();
        assert_eq!(r.values(), &[1.0, 0.0, 1.0]);
        // t_end on a bin boundary opens one more bin
        let events = vec![Event::new(2_000_000, 0, 0, true)];
        let s = EventStream::new(events, 1, 1, 0, 2_000_000).unwrap();
        assert_eq!(event_rate(&s, 1.0).unwrap().values(), &[0.0, 0.0, 1.0]);
    }

    #[test]
    fn linear_rescale_with_p0() {
        let n = robust_normalize(&raw(vec![0.0, 5.0, 10.0]), 0.0).unwrap();
        assert_eq!(n.values(), &[0.0, 0.5, 1.0]);
        assert!(n.is_normalized());
        assert!(robust_normalize(&n, 0.0).is_err());
    }

    #[test]
    fn constant_series_is_zero() {
        let n = robust_normalize(&raw(vec![3.0; 10]), 1.0).unwrap();
        assert!(n.values().iter().all(|&v| v == 0.0));
    }

    /// Independent nearest-rank oracle: the smallest value v such that at
    /// least q% of the samples are <= v.
    fn percentile_oracle(values: &[f64], q: f64) -> f64 {
        let mut candidates = values.to_vec();
        candidates.sort_by(f64::total_cmp);
        candidates.dedup();
        for v in candidates {
            let at_or_below = values.iter().filter(|&&x| x <= v).count() as f64;
            if at_or_below * 100.0 >= q * values.len() as f64 {
                return v;
            }
        }
        unreachable!()
    }

    #[test]
    fn spike_and_floor_series() {
        // 198 bins of 10, one of 0, one of 1000. The 1st percentile by nearest
        // rank is the 2nd smallest sample (10), not the single 0.
        let mut v = vec![10.0; 198];
        v.push(0.0);
        v.push(1000.0);
        let (lo, hi) = robust_bounds(&v, 1.0).unwrap();
        assert_eq!((lo, hi), (percentile_oracle(&v, 1.0), percentile_oracle(&v, 99.0)));
        assert_eq!((lo, hi), (10.0, 10.0));
        // degenerate range -> flat
        assert!(robust_normalize(&raw(v), 1.0)
            .unwrap()
            .values()
            .iter()
            .all(|&x| x == 0.0));

        // with two floor bins the low percentile reaches 0 and the plateau
        // and the clipped spike both map to 1
        let mut v = vec![10.0; 197];
        v.extend([0.0, 0.0, 1000.0]);
        let (lo, hi) = robust_bounds(&v, 1.0).unwrap();
        assert_eq!((lo, hi), (0.0, 10.0));
        let n = robust_normalize(&raw(v), 1.0).unwrap();
        assert_eq!(n.values()[199], 1.0);
        assert_eq!(n.values()[0], 1.0);
        assert_eq!(n.values()[197], 0.0);
    }

    #[test]
    fn percentile_matches_oracle() {
        let v: Vec<f64> = (0..137).map(|i| ((i * 7919) % 101) as f64).collect();
        for q in [0.0, 1.0, 2.5, 10.0, 33.0, 49.0, 51.0, 90.0, 99.0, 100.0] {
            let mut s = v.clone();
            s.sort_by(f64::total_cmp);
            assert_eq!(nearest_rank(&s, q), percentile_oracle(&v, q), "q={q}");
        }
    }

    #[test]
    fn bad_percentile() {
        assert!(robust_normalize(&raw(vec![1.0, 2.0]), 50.0).is_err());
        assert!(robust_normalize(&raw(vec![1.0, 2.0]), -1.0).is_err());
    }
}
