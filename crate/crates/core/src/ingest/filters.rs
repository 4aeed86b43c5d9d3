//! Sensor-artefact filters and spatial cropping.

use serde::{Deserialize, Serialize};

use super::annotations::BoundingBox;
use super::stream::EventStream;
use crate::error::{invalid, Error, Result};

/// Removes every event of any pixel whose whole-stream rate exceeds
/// `rate_threshold` events per second.
pub fn hot_pixel_filter(s: &EventStream, rate_threshold: f64) -> Result<EventStream> {
    if !(rate_threshold > 0.0) {
        return Err(invalid("hot pixel rate threshold must be positive"));
    }
    let duration = s.duration_secs();
    if duration <= 0.0 {
        return Err(Error::ZeroDuration);
    }
    let mut counts = vec![0u64; s.pixel_count()];
    for e in s.events() {
        counts[s.pixel_index(e)] += 1;
    }
    let hot: Vec<bool> = counts.iter().map(|&c| c as f64 / duration > rate_threshold).collect();
    if !hot.iter().any(|&h| h) {
        return Ok(s.clone());
    }
    let kept = s.events().iter().filter(|e| !hot[s.pixel_index(e)]).copied().collect();
    Ok(s.with_events(kept))
}

/// Parameters of [`ir_flash_filter`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FlashFilterConfig {
    /// Bin width in seconds.
    pub bin_width: f64,
    /// A bin is a burst when its count exceeds this multiple of the median.
    pub burst_factor: f64,
    /// ...and more than this fraction of the sensor's pixels fired in it.
    pub coverage_fraction: f64,
}

impl Default for FlashFilterConfig {
    fn default() -> Self {
        Self {
            bin_width: 0.033,
            burst_factor: 5.0,
            coverage_fraction: 0.5,
        }
    }
}

impl FlashFilterConfig {
    fn validate(&self) -> Result<()> {
        if !(self.bin_width > 0.0) {
            return Err(invalid("flash filter bin width must be positive"));
        }
        if !(self.burst_factor > 1.0) {
            return Err(invalid("flash filter burst factor must exceed 1"));
        }
        if !(self.coverage_fraction > 0.0 && self.coverage_fraction <= 1.0) {
            return Err(invalid("flash filter coverage fraction must lie in (0, 1]"));
        }
        Ok(())
    }
}

fn median(values: &[u64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_unstable();
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2] as f64
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2]) as f64
    }
}

/// Flags bins that are both far above the median count and cover a large
/// share of the sensor. Returns `None` when nothing is flagged.
fn flash_bins(s: &EventStream, bin_us: u64, cfg: &FlashFilterConfig) -> Option<Vec<bool>> {
    let n_bins = ((s.t_end() - s.t_begin()) / bin_us + 1) as usize;
    let mut counts = vec![0u64; n_bins];
    let mut active = vec![0u64; n_bins];
    // last bin index (plus one) in which each pixel was seen
    let mut stamp = vec![0usize; s.pixel_count()];
    for e in s.events() {
        let bin = ((e.t - s.t_begin()) / bin_us) as usize;
        counts[bin] += 1;
        let px = s.pixel_index(e);
        if stamp[px] != bin + 1 {
            stamp[px] = bin + 1;
            active[bin] += 1;
        }
    }
    let med = median(&counts);
    let pixels = s.pixel_count().max(1) as f64;
    let flagged: Vec<bool> = counts
        .iter()
        .zip(&active)
        .map(|(&c, &a)| c as f64 > cfg.burst_factor * med && a as f64 / pixels > cfg.coverage_fraction)
        .collect();
    flagged.iter().any(|&f| f).then_some(flagged)
}

/// Drops events in time bins that look like global illumination flashes.
///
/// Removing a flash lowers the median bin count, which can expose further
/// bursts; the rule is applied until no bin is flagged, so the result is a
/// fixed point and a second application is a no-op.
pub fn ir_flash_filter(s: &EventStream, cfg: &FlashFilterConfig) -> Result<EventStream> {
    cfg.validate()?;
    let bin_us = ((cfg.bin_width * 1e6).round() as u64).max(1);
    let mut current = s.clone();
    while let Some(flagged) = flash_bins(&current, bin_us, cfg) {
        let t0 = current.t_begin();
        let kept = current
            .events()
            .iter()
            .filter(|e| !flagged[((e.t - t0) / bin_us) as usize])
            .copied()
            .collect();
        current = current.with_events(kept);
    }
    Ok(current)
}

/// Keeps events inside `[b.x, b.x + b.w) x [b.y, b.y + b.h)` with coordinates
/// re-based to the box corner. The stream extent is unchanged.
pub fn crop_to_roi(s: &EventStream, b: &BoundingBox) -> Result<EventStream> {
    if b.w == 0 || b.h == 0 || b.x + b.w > s.width() || b.y + b.h > s.height() {
        return Err(invalid(format!(
            "roi `{}` ({}, {}, {}x{}) not within sensor {}x{}",
            b.roi_id,
            b.x,
            b.y,
            b.w,
            b.h,
            s.width(),
            s.height()
        )));
    }
    let events = s
        .events()
        .iter()
        .filter(|e| b.contains(u32::from(e.x), u32::from(e.y)))
        .map(|e| {
            let mut e = *e;
            e.x -= b.x as u16;
            e.y -= b.y as u16;
            e
        })
        .collect();
    Ok(EventStream::from_parts_unchecked(
        events,
        b.w,
        b.h,
        s.t_begin(),
        s.t_end(),
    ))
}
