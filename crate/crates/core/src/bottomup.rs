//! Bottom-up baseline: classify single snapshots at a fixed stride, close
//! short gaps with a 1D morphological filter and report runs of positives.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::classify::{snapshot_feature, Detection, FeatureConfig, LabeledSample, Model};
use crate::error::{invalid, Result};
use crate::ingest::EventStream;
use crate::interval::Interval;
use crate::represent::{event_histogram, Grid, GridKind, RepresentConfig};

/// Per-sample binary decisions; sample `k` covers `[t0 + k*stride, t0 + (k+1)*stride)`.
#[derive(Debug, Clone, PartialEq)]
pub struct BinarySeries {
    pub values: Vec<bool>,
    pub stride: f64,
    pub t0: f64,
}

impl BinarySeries {
    pub fn new(values: Vec<bool>, stride: f64, t0: f64) -> Result<Self> {
        if !(stride > 0.0) || !stride.is_finite() {
            return Err(invalid("stride must be positive"));
        }
        Ok(Self { values, stride, t0 })
    }

    /// Inverse of [`extract_regions`] for `len` samples.
    pub fn from_regions(regions: &[Interval], len: usize, stride: f64, t0: f64) -> Result<Self> {
        let mut values = vec![false; len];
        for r in regions {
            let a = ((r.start() - t0) / stride).round().max(0.0) as usize;
            let b = (((r.end() - t0) / stride).round() as usize).min(len);
            values[a.min(b)..b].iter_mut().for_each(|v| *v = true);
        }
        Self::new(values, stride, t0)
    }
}

/// `t_begin + k*stride` for `k = 0..=floor(duration / stride)`, in seconds.
pub fn snapshot_times(s: &EventStream, stride: f64) -> Result<Vec<f64>> {
    if !(stride > 0.0) {
        return Err(invalid("stride must be positive"));
    }
    let t0 = s.t_begin() as f64 / 1e6;
    // tolerate float error so an exact multiple lands on t_end
    let n = (s.duration_secs() / stride + 1e-9).floor() as usize;
    Ok((0..=n).map(|k| t0 + k as f64 * stride).collect())
}

/// Full-resolution histograms of width `window` centred on every snapshot time.
pub fn snapshot_series(s: &EventStream, window: f64, stride: f64) -> Result<Vec<Grid>> {
    if !(window > 0.0) {
        return Err(invalid("window must be positive"));
    }
    Ok(snapshot_times(s, stride)?
        .into_par_iter()
        .map(|t| event_histogram(s, t, window))
        .collect())
}

/// Dilation followed by erosion with a centred window of `kernel` samples.
///
/// The series is treated as zero outside its support, and the erosion is
/// evaluated on the dilated, zero-extended signal, so solid runs touching
/// the borders survive and the result is extensive and idempotent.
pub fn morphological_close(b: &BinarySeries, kernel: usize) -> Result<BinarySeries> {
    if kernel == 0 || kernel.is_multiple_of(2) {
        return Err(invalid("closing kernel must be an odd positive count"));
    }
    let r = kernel / 2;
    let n = b.values.len();
    // dilation on the index range [-r, n + r)
    let ext: Vec<bool> = (0..n + 2 * r)
        .map(|j| b.values.get(j.wrapping_sub(r)).copied().unwrap_or(false))
        .collect();
    let ones_prefix = prefix_counts(&ext);
    let window_any = |lo: usize, hi: usize| ones_prefix[hi] > ones_prefix[lo];
    let dilated: Vec<bool> = (0..n + 2 * r)
        .map(|j| window_any(j.saturating_sub(r), (j + r + 1).min(n + 2 * r)))
        .collect();
    let dil_prefix = prefix_counts(&dilated);
    let values = (0..n)
        .map(|i| {
            // original index i sits at extended index i + r; its erosion
            // window [i, i + 2r] lies inside the extended range
            dil_prefix[i + 2 * r + 1] - dil_prefix[i] == kernel
        })
        .collect();
    BinarySeries::new(values, b.stride, b.t0)
}

fn prefix_counts(v: &[bool]) -> Vec<usize> {
    let mut out = Vec::with_capacity(v.len() + 1);
    out.push(0);
    let mut acc = 0;
    for &x in v {
        acc += usize::from(x);
        out.push(acc);
    }
    out
}

/// Maximal runs of positives as intervals in seconds.
pub fn extract_regions(b: &BinarySeries) -> Vec<Interval> {
    let mut out = Vec::new();
    let mut start = None;
    for (i, &v) in b.values.iter().chain(std::iter::once(&false)).enumerate() {
        match (v, start) {
            (true, None) => start = Some(i),
            (false, Some(a)) => {
                let iv = Interval::new(b.t0 + a as f64 * b.stride, b.t0 + i as f64 * b.stride)
                    .expect("runs have positive length");
                out.push(iv);
                start = None;
            }
            _ => {}
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BottomUpConfig {
    /// Spacing of classified snapshots in seconds.
    pub stride: f64,
    /// Closing kernel in samples; `None` disables the filter.
    pub kernel: Option<usize>,
    /// Probability above which a snapshot is positive.
    pub threshold: f64,
    /// Snapshot features used for training.
    pub features: FeatureConfig,
    pub label: String,
}

impl Default for BottomUpConfig {
    fn default() -> Self {
        Self {
            stride: 0.033,
            kernel: Some(15),
            threshold: 0.5,
            features: FeatureConfig {
                kind: GridKind::Histogram,
                represent: RepresentConfig {
                    window: 5.0,
                    ..RepresentConfig::default()
                },
                ..FeatureConfig::default()
            },
            label: "ED".to_string(),
        }
    }
}

/// One sample per snapshot time, positive when the time lies inside a
/// ground-truth interval.
pub fn snapshot_training_samples(s: &EventStream, gt: &[Interval], cfg: &BottomUpConfig) -> Result<Vec<LabeledSample>> {
    cfg.features.validate()?;
    Ok(snapshot_times(s, cfg.stride)?
        .into_par_iter()
        .map(|t| LabeledSample {
            features: snapshot_feature(s, t, &cfg.features).0,
            label: gt.iter().any(|g| g.contains(t)),
        })
        .collect())
}

/// Per-snapshot decisions of a snapshot model.
pub fn classify_series(s: &EventStream, model: &Model, cfg: &BottomUpConfig) -> Result<BinarySeries> {
    let times = snapshot_times(s, cfg.stride)?;
    let values = times
        .par_iter()
        .map(|&t| Ok(model.predict(snapshot_feature(s, t, &model.features).as_slice())? > cfg.threshold))
        .collect::<Result<Vec<bool>>>()?;
    BinarySeries::new(values, cfg.stride, s.t_begin() as f64 / 1e6)
}

/// Classify, optionally close, extract runs. Every region scores 1.0.
pub fn detect_bottomup(s: &EventStream, roi_id: &str, model: &Model, cfg: &BottomUpConfig) -> Result<Vec<Detection>> {
    let mut series = classify_series(s, model, cfg)?;
    if let Some(k) = cfg.kernel {
        series = morphological_close(&series, k)?;
    }
    Ok(extract_regions(&series)
        .into_iter()
        .map(|interval| Detection {
            roi_id: roi_id.to_string(),
            interval,
            score: 1.0,
            label: cfg.label.clone(),
        })
        .collect())
}
