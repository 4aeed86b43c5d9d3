//! Run configuration file. Every section is optional and falls back to the
//! library defaults; command-line flags override file values.

use std::path::Path;

use anyhow::{Context, Result};
use evtad::bottomup::BottomUpConfig;
use evtad::classify::{FeatureConfig, POSITIVE_TIOU};
use evtad::ingest::FlashFilterConfig;
use evtad::proposals::SlidingWindowConfig;
use evtad::synth::{RandomSceneConfig, SceneConfig};
use evtad::{EvalConfig, ProposalConfig, RateConfig, TrainConfig};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Seed for every randomized step unless `--seed` is given.
    pub seed: Option<u64>,
    pub filters: FilterConfig,
    pub rate: RateConfig,
    pub proposals: ProposalConfig,
    pub sliding: SlidingWindowConfig,
    pub features: FeatureConfig,
    pub labeling: LabelingConfig,
    pub train: TrainConfig,
    pub detect: DetectSection,
    pub bottomup: BottomUpConfig,
    pub eval: EvalConfig,
    /// Fully scripted scene for `synth`; a random scene is drawn otherwise.
    pub scene: Option<SceneConfig>,
    pub random_scene: RandomSceneConfig,
    pub artifacts: ArtifactConfig,
}

/// Preprocessing applied to every loaded stream.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FilterConfig {
    /// Drop pixels firing faster than this (events per second).
    pub hot_pixel_rate: Option<f64>,
    pub flash: Option<FlashFilterConfig>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LabelingConfig {
    pub positive_tiou: f64,
    pub negative_factor: usize,
    pub include_ground_truth: bool,
}

impl Default for LabelingConfig {
    fn default() -> Self {
        Self {
            positive_tiou: POSITIVE_TIOU,
            negative_factor: 1,
            include_ground_truth: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DetectSection {
    pub nms_tiou: f64,
    pub min_score: Option<f64>,
    pub label: String,
}

impl Default for DetectSection {
    fn default() -> Self {
        let d = evtad::DetectConfig::default();
        Self {
            nms_tiou: d.nms_tiou,
            min_score: d.min_score,
            label: d.label,
        }
    }
}

/// Sensor artefacts injected by `synth`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ArtifactConfig {
    pub hot_pixels: usize,
    pub hot_pixel_rate: f64,
    pub spikes: usize,
    pub spike_events_per_pixel: f64,
}

impl Default for ArtifactConfig {
    fn default() -> Self {
        Self {
            hot_pixels: 0,
            hot_pixel_rate: 50.0,
            spikes: 0,
            spike_events_per_pixel: 1.0,
        }
    }
}

impl RunConfig {
    /// Reads a run configuration, or a bare scene description (an object
    /// with `rois` and `duration` at top level) as the `scene` section.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        let value: serde_json::Value =
            serde_json::from_str(&text).with_context(|| format!("parsing config {}", path.display()))?;
        let is_scene = value.get("rois").is_some() && value.get("duration").is_some();
        if is_scene {
            let scene: SceneConfig =
                serde_json::from_value(value).with_context(|| format!("scene config {}", path.display()))?;
            return Ok(Self {
                scene: Some(scene),
                ..Self::default()
            });
        }
        serde_json::from_value(value).with_context(|| format!("run config {}", path.display()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_object_is_default() {
        let c: RunConfig = serde_json::from_str("{}").unwrap();
        assert_eq!(c, RunConfig::default());
    }

    #[test]
    fn unknown_sections_rejected() {
        assert!(serde_json::from_str::<RunConfig>(r#"{"ratez": {}}"#).is_err());
    }

    #[test]
    fn partial_sections_keep_defaults() {
        let c: RunConfig = serde_json::from_str(r#"{"rate": {"bin_width": 0.01}, "seed": 3}"#).unwrap();
        assert_eq!(c.rate.bin_width, 0.01);
        assert_eq!(c.rate.percentile, 1.0);
        assert_eq!(c.seed, Some(3));
    }
}
