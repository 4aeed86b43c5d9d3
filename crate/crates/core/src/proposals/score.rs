use crate::error::{invalid, Result};
use crate::interval::Interval;
use crate::rate::RateSeries;

/// Prefix sums of a rate series for O(1) interval means.
#[derive(Debug, Clone)]
pub struct RateIntegral<'a> {
    series: &'a RateSeries,
    prefix: Vec<f64>,
}

impl<'a> RateIntegral<'a> {
    pub fn new(series: &'a RateSeries) -> Self {
        let mut prefix = Vec::with_capacity(series.len() + 1);
        let mut acc = 0.0;
        prefix.push(acc);
        for v in series.values() {
            acc += v;
            prefix.push(acc);
        }
        Self { series, prefix }
    }

    /// Position of time `t` (seconds) in fractional bins from the series start.
    fn position(&self, t: f64) -> f64 {
        let mut offset = t * 1e6 - self.series.t0_us() as f64;
        let snapped = offset.round();
        if (offset - snapped).abs() < 1e-4 {
            offset = snapped;
        }
        offset / self.series.bin_width_us() as f64
    }

    /// Integral of the series in bin units from the start to position `u`.
    fn cumulative(&self, u: f64) -> f64 {
        let n = self.series.len();
        let k = (u.floor().max(0.0) as usize).min(n);
        let frac = if k < n { u - k as f64 } else { 0.0 };
        self.prefix[k] + frac * self.series.values().get(k).copied().unwrap_or(0.0)
    }

    /// Overlap-weighted mean over `interval`.
    pub fn mean(&self, interval: &Interval) -> Result<f64> {
        let n = self.series.len() as f64;
        let ua = self.position(interval.start());
        let ub = self.position(interval.end());
        let tol = 1e-9 * n.max(1.0);
        if ua < -tol || ub > n + tol {
            return Err(invalid(format!(
                "interval [{}, {}) outside rate series [{}, {})",
                interval.start(),
                interval.end(),
                self.series.start_secs(),
                self.series.end_secs()
            )));
        }
        let (ua, ub) = (ua.clamp(0.0, n), ub.clamp(0.0, n));
        if ub <= ua {
            return Ok(0.0);
        }
        Ok((self.cumulative(ub) - self.cumulative(ua)) / (ub - ua))
    }
}

/// Mean normalized rate over the bins covered by `interval`, partial bins
/// weighted by their overlap. In `[0, 1]` for a normalized series.
pub fn score_proposal(r: &RateSeries, interval: &Interval) -> Result<f64> {
    let m = RateIntegral::new(r).mean(interval)?;
    Ok(if r.is_normalized() { m.clamp(0.0, 1.0) } else { m })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn iv(a: f64, b: f64) -> Interval {
        Interval::new(a, b).unwrap()
    }

    #[test]
    fn examples() {
        let flat = RateSeries::new(vec![1.0; 10], 0.5, 0, true).unwrap();
        assert_eq!(score_proposal(&flat, &iv(1.3, 4.1)).unwrap(), 1.0);

        let r = RateSeries::new(vec![0.0, 0.4, 0.2, 0.6, 0.0], 1.0, 0, true).unwrap();
        assert_eq!(score_proposal(&r, &iv(1.0, 2.0)).unwrap(), 0.4);
        assert!((score_proposal(&r, &iv(2.0, 4.0)).unwrap() - 0.4).abs() < 1e-15);
        // half of bin 1 (0.4) and all of bin 2 (0.2): (0.2 + 0.2) / 1.5
        assert!((score_proposal(&r, &iv(1.5, 3.0)).unwrap() - 0.4 / 1.5).abs() < 1e-12);
        // inside a single bin
        assert!((score_proposal(&r, &iv(3.25, 3.75)).unwrap() - 0.6).abs() < 1e-12);
    }

    #[test]
    fn offset_bins() {
        let r = RateSeries::new(vec![0.2, 0.6], 0.033, 2_000_000, true).unwrap();
        let both = Interval::from_us(2_000_000, 2_066_000).unwrap();
        assert!((score_proposal(&r, &both).unwrap() - 0.4).abs() < 1e-12);
    }

    #[test]
    fn outside_series_is_error() {
        let r = RateSeries::new(vec![0.5; 4], 1.0, 0, true).unwrap();
        assert!(score_proposal(&r, &iv(3.0, 5.0)).is_err());
        assert!(score_proposal(&r, &iv(-1.0, 1.0)).is_err());
        assert!(score_proposal(&r, &iv(0.0, 4.0)).is_ok());
    }
}
