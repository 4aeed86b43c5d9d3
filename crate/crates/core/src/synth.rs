//! Seeded synthetic scenes: per-pixel Poisson background plus scripted
//! high-rate bursts inside rois, with the burst intervals as ground truth.
//!
//! Every pixel and every process component draws from its own generator,
//! seeded from `(seed, pixel, component)`, so the output does not depend on
//! scheduling or iteration order.

use std::f64::consts::{FRAC_PI_2, PI};

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::ingest::{AnnotationSet, BoundingBox, Event, EventStream, Instance};
use crate::interval::{secs_to_us, Interval};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Pattern {
    /// Every roi pixel fires at the burst rate.
    #[default]
    Uniform,
    /// A Gaussian blob swinging horizontally across the roi. The event rate
    /// follows the blob's speed, so it dips twice per period.
    OscillatingBlob,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ActionSpec {
    pub roi_id: String,
    /// Seconds from the scene start.
    pub t_start: f64,
    pub t_end: f64,
    /// Burst rate as a multiple of the base rate.
    pub multiplier: f64,
    #[serde(default)]
    pub pattern: Pattern,
    /// Oscillation frequency in Hz (blob pattern only).
    #[serde(default = "default_frequency")]
    pub frequency: f64,
}

fn default_frequency() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SceneConfig {
    pub width: u32,
    pub height: u32,
    /// Seconds.
    pub duration: f64,
    pub rois: Vec<BoundingBox>,
    /// Events per second per pixel.
    pub background_rate: f64,
    /// Rate the burst multiplier applies to; the background rate if unset.
    #[serde(default)]
    pub action_base_rate: Option<f64>,
    #[serde(default)]
    pub actions: Vec<ActionSpec>,
    #[serde(default)]
    pub seed: u64,
}

impl SceneConfig {
    pub fn base_rate(&self) -> f64 {
        self.action_base_rate.unwrap_or(self.background_rate)
    }

    pub fn validate(&self) -> Result<()> {
        if self.width == 0 || self.height == 0 || self.width > 1 << 16 || self.height > 1 << 16 {
            return Err(invalid("sensor dimensions must lie in [1, 65536]"));
        }
        if !(self.duration > 0.0) || !self.duration.is_finite() {
            return Err(invalid("scene duration must be positive"));
        }
        if !(self.background_rate >= 0.0) || !(self.base_rate() >= 0.0) {
            return Err(invalid("rates must be non-negative"));
        }
        for b in &self.rois {
            if b.w == 0 || b.h == 0 || b.x + b.w > self.width || b.y + b.h > self.height {
                return Err(invalid(format!("roi `{}` does not fit the sensor", b.roi_id)));
            }
        }
        for a in &self.actions {
            if !self.rois.iter().any(|b| b.roi_id == a.roi_id) {
                return Err(crate::Error::UnknownRoi(a.roi_id.clone()));
            }
            if !(a.t_start >= 0.0 && a.t_end > a.t_start && a.t_end <= self.duration) {
                return Err(invalid(format!(
                    "action [{}, {}) in roi `{}` is not inside [0, {}]",
                    a.t_start, a.t_end, a.roi_id, self.duration
                )));
            }
            if !(a.multiplier > 1.0) {
                return Err(invalid("burst multiplier must exceed 1"));
            }
            if a.pattern == Pattern::OscillatingBlob && !(a.frequency > 0.0) {
                return Err(invalid("oscillation frequency must be positive"));
            }
        }
        for (i, a) in self.actions.iter().enumerate() {
            for b in &self.actions[i + 1..] {
                if a.roi_id == b.roi_id && a.t_start < b.t_end && b.t_start < a.t_end {
                    return Err(invalid(format!("overlapping actions in roi `{}`", a.roi_id)));
                }
            }
        }
        Ok(())
    }

    pub fn annotations(&self) -> Result<AnnotationSet> {
        let set = AnnotationSet {
            rois: self.rois.clone(),
            instances: self
                .actions
                .iter()
                .map(|a| {
                    Ok(Instance {
                        roi_id: a.roi_id.clone(),
                        interval: Interval::from_us(secs_to_us(a.t_start), secs_to_us(a.t_end))?,
                        label: "ED".to_string(),
                    })
                })
                .collect::<Result<_>>()?,
        };
        set.validate()?;
        Ok(set)
    }
}

/// SplitMix64 finalizer over the combined key.
fn stream_seed(seed: u64, pixel: u64, component: u64) -> u64 {
    let mut z = seed
        .wrapping_mul(0x9E37_79B9_7F4A_7C15)
        .wrapping_add(pixel.wrapping_mul(0xD1B5_4A32_D192_ED69))
        .wrapping_add(component.wrapping_mul(0xCA5A_8263_9512_1157));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn pixel_rng(seed: u64, pixel: u64, component: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(stream_seed(seed, pixel, component))
}

/// Homogeneous Poisson arrivals on `[t0, t1)` seconds, thinned by `accept`.
fn poisson_times(
    rng: &mut ChaCha8Rng,
    rate: f64,
    t0: f64,
    t1: f64,
    mut accept: impl FnMut(f64) -> f64,
    mut emit: impl FnMut(f64, bool),
) {
    if !(rate > 0.0) {
        return;
    }
    let exp = Exp::new(rate).expect("positive rate");
    let mut t = t0;
    loop {
        t += exp.sample(rng);
        if t >= t1 {
            break;
        }
        let keep = accept(t);
        let u: f64 = rng.random();
        let polarity: bool = rng.random();
        if u < keep {
            emit(t, polarity);
        }
    }
}

/// Spatial and temporal intensity of one burst relative to its mean rate.
struct BurstShape {
    pattern: Pattern,
    box_: BoundingBox,
    t_start: f64,
    frequency: f64,
    sigma: f64,
    amplitude: f64,
    /// Row factor of the separable Gaussian, summed over the roi.
    row_sum: f64,
}

impl BurstShape {
    fn new(a: &ActionSpec, b: &BoundingBox) -> Self {
        let sigma = (b.w.max(b.h) as f64 / 6.0).max(0.75);
        let cy = b.y as f64 + 0.5 * (b.h as f64 - 1.0);
        let row_sum = (b.y..b.y + b.h).map(|y| gauss(y as f64 - cy, sigma)).sum();
        Self {
            pattern: a.pattern,
            box_: b.clone(),
            t_start: a.t_start,
            frequency: a.frequency,
            sigma,
            amplitude: 0.25 * b.w as f64,
            row_sum,
        }
    }

    fn center(&self, t: f64) -> (f64, f64) {
        let b = &self.box_;
        let phase = 2.0 * PI * self.frequency * (t - self.t_start);
        (
            b.x as f64 + 0.5 * (b.w as f64 - 1.0) + self.amplitude * phase.sin(),
            b.y as f64 + 0.5 * (b.h as f64 - 1.0),
        )
    }

    /// Intensity factor at pixel `(x, y)` and time `t`. Averaged over the
    /// roi and over whole half-periods it equals 1.
    fn factor(&self, x: u32, y: u32, t: f64) -> f64 {
        match self.pattern {
            Pattern::Uniform => 1.0,
            Pattern::OscillatingBlob => {
                let (cx, cy) = self.center(t);
                let b = &self.box_;
                let col_sum: f64 = (b.x..b.x + b.w).map(|c| gauss(c as f64 - cx, self.sigma)).sum();
                let spatial = gauss(x as f64 - cx, self.sigma) * gauss(y as f64 - cy, self.sigma)
                    / (col_sum * self.row_sum)
                    * b.area() as f64;
                let speed = FRAC_PI_2 * (2.0 * PI * self.frequency * (t - self.t_start)).cos().abs();
                spatial * speed
            }
        }
    }

    /// An upper bound of [`Self::factor`] over the burst, for thinning.
    fn bound(&self) -> f64 {
        match self.pattern {
            Pattern::Uniform => 1.0,
            Pattern::OscillatingBlob => {
                // the column sum is smallest when the blob sits at an extreme
                let b = &self.box_;
                let edge_cx = b.x as f64 + 0.5 * (b.w as f64 - 1.0) + self.amplitude;
                let col_min: f64 = (b.x..b.x + b.w).map(|c| gauss(c as f64 - edge_cx, self.sigma)).sum();
                let col_min = col_min.min(
                    (b.x..b.x + b.w)
                        .map(|c| gauss(c as f64 - (2.0 * b.x as f64 + b.w as f64 - 1.0 - edge_cx), self.sigma))
                        .sum(),
                );
                FRAC_PI_2 * b.area() as f64 / (col_min * self.row_sum)
            }
        }
    }
}

fn gauss(d: f64, sigma: f64) -> f64 {
    (-0.5 * d * d / (sigma * sigma)).exp()
}

/// Generates the event stream and its ground truth.
pub fn generate_scene(cfg: &SceneConfig) -> Result<(EventStream, AnnotationSet)> {
    cfg.validate()?;
    let annotations = cfg.annotations()?;
    let shapes: Vec<(usize, BurstShape)> = cfg
        .actions
        .iter()
        .enumerate()
        .map(|(k, a)| {
            let b = cfg.rois.iter().find(|b| b.roi_id == a.roi_id).expect("validated");
            (k, BurstShape::new(a, b))
        })
        .collect();
    let (w, h) = (cfg.width, cfg.height);
    let base = cfg.base_rate();
    let duration = cfg.duration;

    let mut events: Vec<Event> = (0..(w as u64 * h as u64))
        .into_par_iter()
        .flat_map_iter(|pixel| {
            let x = (pixel % w as u64) as u32;
            let y = (pixel / w as u64) as u32;
            let mut out = Vec::new();
            let mut push = |t: f64, p: bool| {
                out.push(Event::new((t * 1e6) as u64, x as u16, y as u16, p));
            };
            let mut rng = pixel_rng(cfg.seed, pixel, 0);
            poisson_times(&mut rng, cfg.background_rate, 0.0, duration, |_| 1.0, &mut push);
            for (k, shape) in &shapes {
                if !shape.box_.contains(x, y) {
                    continue;
                }
                let a = &cfg.actions[*k];
                let bound = shape.bound();
                let mut rng = pixel_rng(cfg.seed, pixel, *k as u64 + 1);
                poisson_times(
                    &mut rng,
                    base * a.multiplier * bound,
                    a.t_start,
                    a.t_end,
                    |t| shape.factor(x, y, t) / bound,
                    &mut push,
                );
            }
            out
        })
        .collect();
    events.par_sort_unstable_by_key(|e| (e.t, e.y, e.x, e.p));
    let stream = EventStream::new(events, w, h, 0, secs_to_us(duration) as u64)?;
    Ok((stream, annotations))
}

/// Adds `n` distinct hot pixels firing as Poisson processes at `rate`
/// over the stream extent.
pub fn add_hot_pixels(s: &EventStream, n: usize, rate: f64, seed: u64) -> Result<EventStream> {
    if n > s.pixel_count() {
        return Err(invalid(format!("cannot pick {n} hot pixels from {}", s.pixel_count())));
    }
    if !(rate >= 0.0) {
        return Err(invalid("hot pixel rate must be non-negative"));
    }
    if n == 0 {
        return Ok(s.clone());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let pixels = sample(&mut rng, s.pixel_count(), n).into_vec();
    let (t0, t1) = (s.t_begin() as f64 / 1e6, s.t_end() as f64 / 1e6);
    let w = s.width() as usize;
    let added: Vec<Event> = pixels
        .par_iter()
        .flat_map_iter(|&pixel| {
            let mut out = Vec::new();
            let mut rng = pixel_rng(seed, pixel as u64, u64::MAX);
            let (x, y) = ((pixel % w) as u16, (pixel / w) as u16);
            poisson_times(
                &mut rng,
                rate,
                t0,
                t1,
                |_| 1.0,
                |t, p| {
                    out.push(Event::new((t * 1e6) as u64, x, y, p));
                },
            );
            out
        })
        .collect();
    let mut events = s.events().to_vec();
    events.extend(added);
    events.par_sort_unstable_by_key(|e| (e.t, e.y, e.x, e.p));
    Ok(s.with_events(events))
}

/// Adds `n` sensor-wide flashes at seeded random times. During each flash
/// every pixel fires a Poisson number of events (mean `events_per_pixel`)
/// spread uniformly over `width` seconds.
pub fn add_rate_spikes(s: &EventStream, n: usize, events_per_pixel: f64, width: f64, seed: u64) -> Result<EventStream> {
    if !(events_per_pixel >= 0.0) || !(width > 0.0) {
        return Err(invalid("spike size must be non-negative and width positive"));
    }
    let (t0, t1) = (s.t_begin() as f64 / 1e6, s.t_end() as f64 / 1e6);
    if n == 0 || t1 - t0 <= width {
        return Ok(s.clone());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(stream_seed(seed, u64::MAX, 1));
    let starts: Vec<f64> = (0..n).map(|_| rng.random_range(t0..t1 - width)).collect();
    let w = s.width() as u64;
    let added: Vec<Event> = (0..s.pixel_count() as u64)
        .into_par_iter()
        .flat_map_iter(|pixel| {
            let (x, y) = ((pixel % w) as u16, (pixel / w) as u16);
            let mut out = Vec::new();
            for (k, &a) in starts.iter().enumerate() {
                let mut rng = pixel_rng(seed, pixel, u64::MAX - 1 - k as u64);
                poisson_times(
                    &mut rng,
                    events_per_pixel / width,
                    a,
                    a + width,
                    |_| 1.0,
                    |t, p| {
                        out.push(Event::new((t * 1e6) as u64, x, y, p));
                    },
                );
            }
            out
        })
        .collect();
    let mut events = s.events().to_vec();
    events.extend(added);
    events.par_sort_unstable_by_key(|e| (e.t, e.y, e.x, e.p));
    Ok(s.with_events(events))
}

/// Layout and burst statistics for randomly scripted scenes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RandomSceneConfig {
    pub width: u32,
    pub height: u32,
    pub duration: f64,
    pub n_rois: usize,
    pub bursts_min: usize,
    pub bursts_max: usize,
    /// Burst length range in seconds.
    pub burst_min: f64,
    pub burst_max: f64,
    /// Minimum quiet time between bursts of one roi.
    pub min_gap: f64,
    pub multiplier_min: f64,
    pub multiplier_max: f64,
    pub background_rate: f64,
    /// Probability that a burst uses the blob pattern.
    pub blob_fraction: f64,
    pub frequency_min: f64,
    pub frequency_max: f64,
}

impl Default for RandomSceneConfig {
    fn default() -> Self {
        Self {
            width: 96,
            height: 64,
            duration: 180.0,
            n_rois: 5,
            bursts_min: 3,
            bursts_max: 8,
            burst_min: 4.0,
            burst_max: 12.0,
            min_gap: 5.0,
            multiplier_min: 8.0,
            multiplier_max: 16.0,
            background_rate: 0.05,
            blob_fraction: 0.5,
            frequency_min: 0.5,
            frequency_max: 2.0,
        }
    }
}

/// Tiles the sensor with `n` rois and scripts random non-overlapping bursts.
pub fn random_scene(cfg: &RandomSceneConfig, seed: u64) -> Result<SceneConfig> {
    if cfg.n_rois == 0 || cfg.bursts_min > cfg.bursts_max || !(cfg.burst_min > 0.0 && cfg.burst_min <= cfg.burst_max) {
        return Err(invalid("invalid random scene ranges"));
    }
    let cols = (cfg.n_rois as f64).sqrt().ceil() as u32;
    let rows = (cfg.n_rois as u32).div_ceil(cols);
    let (cw, ch) = (cfg.width / cols, cfg.height / rows);
    let margin = 1;
    if cw <= 2 * margin || ch <= 2 * margin {
        return Err(invalid("sensor too small for the requested roi count"));
    }
    let rois: Vec<BoundingBox> = (0..cfg.n_rois as u32)
        .map(|k| BoundingBox {
            roi_id: format!("roi{k}"),
            x: (k % cols) * cw + margin,
            y: (k / cols) * ch + margin,
            w: cw - 2 * margin,
            h: ch - 2 * margin,
        })
        .collect();

    let mut rng = ChaCha8Rng::seed_from_u64(stream_seed(seed, u64::MAX, 0));
    let mut actions = Vec::new();
    for roi in &rois {
        let n = rng.random_range(cfg.bursts_min..=cfg.bursts_max);
        let lengths: Vec<f64> = (0..n)
            .map(|_| rng.random_range(cfg.burst_min..=cfg.burst_max))
            .collect();
        let busy: f64 = lengths.iter().sum::<f64>() + cfg.min_gap * (n + 1) as f64;
        let slack = cfg.duration - busy;
        if slack < 0.0 {
            return Err(invalid("bursts do not fit the scene duration"));
        }
        // split the slack at n sorted uniform cut points
        let mut cuts: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..=slack)).collect();
        cuts.sort_by(f64::total_cmp);
        let mut t = cfg.min_gap;
        let mut prev_cut = 0.0;
        for (len, cut) in lengths.iter().zip(&cuts) {
            t += cut - prev_cut;
            prev_cut = *cut;
            let start = (t * 1000.0).round() / 1000.0;
            let end = ((t + len) * 1000.0).round() / 1000.0;
            let blob = rng.random::<f64>() < cfg.blob_fraction;
            actions.push(ActionSpec {
                roi_id: roi.roi_id.clone(),
                t_start: start,
                t_end: end,
                multiplier: rng.random_range(cfg.multiplier_min..=cfg.multiplier_max),
                pattern: if blob {
                    Pattern::OscillatingBlob
                } else {
                    Pattern::Uniform
                },
                frequency: rng.random_range(cfg.frequency_min..=cfg.frequency_max),
            });
            t += len + cfg.min_gap;
        }
    }
    let scene = SceneConfig {
        width: cfg.width,
        height: cfg.height,
        duration: cfg.duration,
        rois,
        background_rate: cfg.background_rate,
        action_base_rate: None,
        actions,
        seed,
    };
    scene.validate()?;
    Ok(scene)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::hot_pixel_filter;

    fn roi(id: &str, x: u32, y: u32, w: u32, h: u32) -> BoundingBox {
        BoundingBox {
            roi_id: id.into(),
            x,
            y,
            w,
            h,
        }
    }

    fn scene(background: f64, actions: Vec<ActionSpec>) -> SceneConfig {
        SceneConfig {
            width: 16,
            height: 12,
            duration: 20.0,
            rois: vec![roi("a", 2, 2, 8, 6)],
            background_rate: background,
            action_base_rate: Some(2.0),
            actions,
            seed: 7,
        }
    }

    fn action(a: f64, b: f64, pattern: Pattern) -> ActionSpec {
        ActionSpec {
            roi_id: "a".into(),
            t_start: a,
            t_end: b,
            multiplier: 10.0,
            pattern,
            frequency: 1.0,
        }
    }

    #[test]
    fn zero_background_keeps_events_inside_action() {
        for pattern in [Pattern::Uniform, Pattern::OscillatingBlob] {
            let (s, ann) = generate_scene(&scene(0.0, vec![action(5.0, 10.0, pattern)])).unwrap();
            assert!(!s.is_empty());
            let b = &ann.rois[0];
            assert!(s
                .events()
                .iter()
                .all(|e| (5_000_000..10_000_000).contains(&e.t) && b.contains(e.x as u32, e.y as u32)));
            assert_eq!(ann.instances.len(), 1);
            assert_eq!(ann.instances[0].label, "ED");
        }
    }

    #[test]
    fn background_count_is_poisson() {
        let cfg = scene(3.0, vec![]);
        let (s, _) = generate_scene(&cfg).unwrap();
        let mean = 3.0 * 16.0 * 12.0 * 20.0;
        assert!(
            (s.len() as f64 - mean).abs() < 4.0 * mean.sqrt(),
            "{} vs {mean}",
            s.len()
        );
    }

    #[test]
    fn burst_rate_matches_multiplier() {
        // whole half-periods so the blob's speed modulation averages to 1
        for pattern in [Pattern::Uniform, Pattern::OscillatingBlob] {
            let (s, _) = generate_scene(&scene(0.0, vec![action(5.0, 10.0, pattern)])).unwrap();
            let expected = 2.0 * 10.0 * 48.0 * 5.0;
            let n = s.len() as f64;
            assert!(
                (n - expected).abs() < 4.0 * expected.sqrt(),
                "{pattern:?}: {n} vs {expected}"
            );
        }
    }

    #[test]
    fn deterministic_per_seed() {
        let cfg = scene(1.0, vec![action(5.0, 10.0, Pattern::OscillatingBlob)]);
        let a = generate_scene(&cfg).unwrap();
        assert_eq!(a, generate_scene(&cfg).unwrap());
        let other = SceneConfig { seed: 8, ..cfg };
        assert_ne!(a.0, generate_scene(&other).unwrap().0);
    }

    #[test]
    fn invalid_scenes() {
        let overlap = scene(
            1.0,
            vec![action(1.0, 5.0, Pattern::Uniform), action(4.0, 6.0, Pattern::Uniform)],
        );
        assert!(generate_scene(&overlap).is_err());
        let outside = scene(1.0, vec![action(15.0, 25.0, Pattern::Uniform)]);
        assert!(generate_scene(&outside).is_err());
        let mut weak = action(1.0, 2.0, Pattern::Uniform);
        weak.multiplier = 1.0;
        assert!(generate_scene(&scene(1.0, vec![weak])).is_err());
        let mut unknown = action(1.0, 2.0, Pattern::Uniform);
        unknown.roi_id = "zz".into();
        assert!(generate_scene(&scene(1.0, vec![unknown])).is_err());
    }

    #[test]
    fn hot_pixels_round_trip() {
        let (s, _) = generate_scene(&scene(0.5, vec![])).unwrap();
        assert_eq!(add_hot_pixels(&s, 0, 100.0, 1).unwrap(), s);

        let hot = add_hot_pixels(&s, 1, 100.0, 1).unwrap();
        let added = hot.len() - s.len();
        assert!(added > 1000);
        let filtered = hot_pixel_filter(&hot, 10.0).unwrap();
        // find the hot pixel: the one the filter removed
        let mut counts = std::collections::HashMap::new();
        for e in hot.events() {
            *counts.entry((e.x, e.y)).or_insert(0usize) += 1;
        }
        let (&px, _) = counts.iter().max_by_key(|(_, c)| **c).unwrap();
        let expected: Vec<Event> = s.events().iter().filter(|e| (e.x, e.y) != px).copied().collect();
        assert_eq!(filtered.events(), expected.as_slice());

        let all = add_hot_pixels(&s, s.pixel_count(), 100.0, 2).unwrap();
        assert!(hot_pixel_filter(&all, 10.0).unwrap().is_empty());
    }

    #[test]
    fn random_scenes_are_valid() {
        let cfg = RandomSceneConfig::default();
        for seed in 0..20 {
            let sc = random_scene(&cfg, seed).unwrap();
            assert_eq!(sc.rois.len(), 5);
            for r in &sc.rois {
                let n = sc.actions.iter().filter(|a| a.roi_id == r.roi_id).count();
                assert!((3..=8).contains(&n));
            }
            assert!(sc.actions.iter().all(|a| a.multiplier >= 8.0));
        }
        assert_eq!(random_scene(&cfg, 3).unwrap(), random_scene(&cfg, 3).unwrap());
    }
}
