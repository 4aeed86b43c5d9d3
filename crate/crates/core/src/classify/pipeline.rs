use std::collections::HashMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::features::{proposal_feature, FeatureConfig};
use super::labeling::{label_proposals, max_tiou, POSITIVE_TIOU};
use super::model::{LabeledSample, Model};
use super::Detection;
use crate::error::{invalid, Result};
use crate::ingest::{crop_to_roi, AnnotationSet, BoundingBox, EventStream};
use crate::interval::Interval;
use crate::proposals::{interval_nms, retag, Proposal, ProposalConfig};
use crate::rate::{event_rate, robust_normalize, RateConfig};

/// Scores a candidate interval of a (cropped) roi stream with a probability.
pub trait ProposalClassifier: Sync {
    fn score(&self, roi_id: &str, s: &EventStream, p: &Interval) -> Result<f64>;
}

impl ProposalClassifier for Model {
    fn score(&self, _roi_id: &str, s: &EventStream, p: &Interval) -> Result<f64> {
        let x = proposal_feature(s, p, &self.features)?;
        self.predict(x.as_slice())
    }
}

/// Ground-truth oracle: 1.0 iff the best tIoU with the roi's instances is
/// strictly above `threshold`.
#[derive(Debug, Clone, Default)]
pub struct PerfectClassifier {
    gt: HashMap<String, Vec<Interval>>,
    threshold: f64,
}

impl PerfectClassifier {
    pub fn new(annotations: &AnnotationSet, threshold: f64) -> Self {
        let mut gt: HashMap<String, Vec<Interval>> = HashMap::new();
        for inst in &annotations.instances {
            gt.entry(inst.roi_id.clone()).or_default().push(inst.interval);
        }
        Self { gt, threshold }
    }
}

impl ProposalClassifier for PerfectClassifier {
    fn score(&self, roi_id: &str, _s: &EventStream, p: &Interval) -> Result<f64> {
        let gt = self.gt.get(roi_id).map(Vec::as_slice).unwrap_or(&[]);
        Ok(if max_tiou(p, gt) > self.threshold { 1.0 } else { 0.0 })
    }
}

/// Assigns the same score to every proposal.
#[derive(Debug, Clone, Copy)]
pub struct ConstantClassifier(pub f64);

impl ProposalClassifier for ConstantClassifier {
    fn score(&self, _roi_id: &str, _s: &EventStream, _p: &Interval) -> Result<f64> {
        Ok(self.0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DetectConfig {
    pub rate: RateConfig,
    pub proposals: ProposalConfig,
    /// Final NMS threshold.
    pub nms_tiou: f64,
    /// Drop detections scored below this before NMS.
    pub min_score: Option<f64>,
    pub label: String,
}

impl Default for DetectConfig {
    fn default() -> Self {
        Self {
            rate: RateConfig::default(),
            proposals: ProposalConfig::default(),
            nms_tiou: 0.6,
            min_score: None,
            label: "ED".to_string(),
        }
    }
}

impl DetectConfig {
    pub fn validate(&self) -> Result<()> {
        self.rate.validate()?;
        self.proposals.validate()?;
        if !(self.nms_tiou > 0.0 && self.nms_tiou <= 1.0) {
            return Err(invalid("nms tIoU must lie in (0, 1]"));
        }
        if let Some(m) = self.min_score {
            if !(0.0..=1.0).contains(&m) {
                return Err(invalid("minimum score must lie in [0, 1]"));
            }
        }
        Ok(())
    }
}

/// Rate, robust normalization and reTAG on one roi stream.
pub fn propose_retag(s: &EventStream, rate: &RateConfig, proposals: &ProposalConfig) -> Result<Vec<Proposal>> {
    rate.validate()?;
    let r = event_rate(s, rate.bin_width)?;
    retag(&robust_normalize(&r, rate.percentile)?, proposals)
}

/// Rescores `proposals` with the classifier and applies the final NMS.
pub fn detect_from_proposals<C: ProposalClassifier + ?Sized>(
    s: &EventStream,
    roi_id: &str,
    proposals: Vec<Proposal>,
    cfg: &DetectConfig,
    classifier: &C,
) -> Result<Vec<Detection>> {
    cfg.validate()?;
    let scored: Vec<Proposal> = proposals
        .into_par_iter()
        .map(|p| {
            let score = classifier.score(roi_id, s, &p.interval)?;
            if !(0.0..=1.0).contains(&score) {
                return Err(invalid(format!("classifier returned score {score} outside [0, 1]")));
            }
            Ok(Proposal { score, ..p })
        })
        .collect::<Result<_>>()?;
    let kept: Vec<Proposal> = match cfg.min_score {
        Some(m) => scored.into_iter().filter(|p| p.score >= m).collect(),
        None => scored,
    };
    Ok(interval_nms(kept, cfg.nms_tiou)
        .into_iter()
        .map(|p| Detection {
            roi_id: roi_id.to_string(),
            interval: p.interval,
            score: p.score,
            label: cfg.label.clone(),
        })
        .collect())
}

/// Full pipeline on one roi stream.
pub fn detect<C: ProposalClassifier + ?Sized>(
    s: &EventStream,
    roi_id: &str,
    cfg: &DetectConfig,
    classifier: &C,
) -> Result<Vec<Detection>> {
    cfg.validate()?;
    let proposals = propose_retag(s, &cfg.rate, &cfg.proposals)?;
    detect_from_proposals(s, roi_id, proposals, cfg, classifier)
}

/// Crops the stream to every roi and runs [`detect`] on each. Output is
/// grouped by roi in input order.
pub fn detect_scene<C: ProposalClassifier + ?Sized>(
    s: &EventStream,
    rois: &[BoundingBox],
    cfg: &DetectConfig,
    classifier: &C,
) -> Result<Vec<Detection>> {
    let per_roi = rois
        .par_iter()
        .map(|b| detect(&crop_to_roi(s, b)?, &b.roi_id, cfg, classifier))
        .collect::<Result<Vec<_>>>()?;
    Ok(per_roi.into_iter().flatten().collect())
}

/// How training samples are drawn from a labeled stream.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainingSetConfig {
    pub rate: RateConfig,
    pub proposals: ProposalConfig,
    pub features: FeatureConfig,
    pub positive_tiou: f64,
    /// Keep one in `negative_factor` negatives.
    pub negative_factor: usize,
    /// Add each ground-truth interval as a positive sample.
    pub include_ground_truth: bool,
    pub seed: u64,
}

impl Default for TrainingSetConfig {
    fn default() -> Self {
        Self {
            rate: RateConfig::default(),
            proposals: ProposalConfig::default(),
            features: FeatureConfig::default(),
            positive_tiou: POSITIVE_TIOU,
            negative_factor: 1,
            include_ground_truth: true,
            seed: 0,
        }
    }
}

/// reTAG proposals of one roi stream, labeled against `gt` and encoded.
pub fn training_samples(s: &EventStream, gt: &[Interval], cfg: &TrainingSetConfig) -> Result<Vec<LabeledSample>> {
    cfg.features.validate()?;
    let mut labeled = label_proposals(
        &propose_retag(s, &cfg.rate, &cfg.proposals)?,
        gt,
        cfg.positive_tiou,
        cfg.negative_factor,
        cfg.seed,
    )?;
    if cfg.include_ground_truth {
        labeled.extend(gt.iter().map(|g| (Proposal::new(*g, 1.0, "ground-truth"), true)));
    }
    labeled
        .par_iter()
        .map(|(p, label)| {
            Ok(LabeledSample {
                features: proposal_feature(s, &p.interval, &cfg.features)?.0,
                label: *label,
            })
        })
        .collect()
}

/// [`training_samples`] over every roi of an annotated scene.
pub fn scene_training_samples(
    s: &EventStream,
    annotations: &AnnotationSet,
    cfg: &TrainingSetConfig,
) -> Result<Vec<LabeledSample>> {
    let mut out = Vec::new();
    for (k, roi) in annotations.rois.iter().enumerate() {
        let sub = TrainingSetConfig {
            seed: cfg.seed.wrapping_add(k as u64),
            ..cfg.clone()
        };
        out.extend(training_samples(
            &crop_to_roi(s, roi)?,
            &annotations.intervals_for(&roi.roi_id),
            &sub,
        )?);
    }
    Ok(out)
}
