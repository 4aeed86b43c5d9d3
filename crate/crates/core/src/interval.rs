//! Time intervals in seconds and temporal intersection-over-union.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Half-open time span `[start, end)` in seconds, with `end > start`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawInterval", into = "RawInterval")]
pub struct Interval {
    start: f64,
    end: f64,
}

#[derive(Serialize, Deserialize)]
struct RawInterval {
    start: f64,
    end: f64,
}

impl TryFrom<RawInterval> for Interval {
    type Error = Error;

    fn try_from(raw: RawInterval) -> Result<Self> {
        Interval::new(raw.start, raw.end)
    }
}

impl From<Interval> for RawInterval {
    fn from(i: Interval) -> Self {
        RawInterval {
            start: i.start,
            end: i.end,
        }
    }
}

impl Interval {
    pub fn new(start: f64, end: f64) -> Result<Self> {
        if start.is_finite() && end.is_finite() && end > start {
            Ok(Self { start, end })
        } else {
            Err(Error::InvalidInterval { start, end })
        }
    }

    /// Builds an interval from microsecond timestamps.
    pub fn from_us(start_us: i64, end_us: i64) -> Result<Self> {
        Self::new(us_to_secs(start_us), us_to_secs(end_us))
    }

    #[inline]
    pub fn start(&self) -> f64 {
        self.start
    }

    #[inline]
    pub fn end(&self) -> f64 {
        self.end
    }

    #[inline]
    pub fn duration(&self) -> f64 {
        self.end - self.start
    }

    pub fn midpoint(&self) -> f64 {
        0.5 * (self.start + self.end)
    }

    /// Start and end rounded to whole microseconds.
    pub fn to_us(&self) -> (i64, i64) {
        (secs_to_us(self.start), secs_to_us(self.end))
    }

    pub fn intersection(&self, other: &Interval) -> f64 {
        (self.end.min(other.end) - self.start.max(other.start)).max(0.0)
    }

    pub fn contains(&self, t: f64) -> bool {
        t >= self.start && t < self.end
    }
}

pub fn us_to_secs(us: i64) -> f64 {
    us as f64 / 1e6
}

pub fn secs_to_us(s: f64) -> i64 {
    (s * 1e6).round() as i64
}

/// Temporal intersection over union, in `[0, 1]`.
pub fn tiou(a: &Interval, b: &Interval) -> f64 {
    let inter = a.intersection(b);
    if inter <= 0.0 {
        return 0.0;
    }
    let union = a.duration() + b.duration() - inter;
    (inter / union).clamp(0.0, 1.0)
}

/// Ranking order shared by NMS, top-N selection and AP matching: score
/// descending, then longer duration, then earlier start.
pub fn rank_order(score_a: f64, a: &Interval, score_b: f64, b: &Interval) -> Ordering {
    score_b
        .total_cmp(&score_a)
        .then_with(|| b.duration().total_cmp(&a.duration()))
        .then_with(|| a.start.total_cmp(&b.start))
}
