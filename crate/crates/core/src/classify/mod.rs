//! Proposal classification: augmentation with start and end stages, sparse
//! snapshot sampling, a pooled-patch encoder, stage consensus and a small
//! trainable head, followed by the final NMS.

mod augment;
mod features;
mod labeling;
mod model;
mod pipeline;

use crate::interval::Interval;

pub use augment::{augment_proposal, sample_timestamps, AugmentedProposal, SamplingConfig};
pub use features::{
    assemble_feature, consensus, encode_snapshot, encoding_len, proposal_feature, snapshot_feature, FeatureConfig,
    FeatureVector,
};
pub use labeling::{label_proposals, max_tiou, perfect_classifier, POSITIVE_TIOU};
pub use model::{sigmoid, train, LabeledSample, Mlp, Model, TrainConfig, CHECKPOINT_VERSION};
pub use pipeline::{
    detect, detect_from_proposals, detect_scene, propose_retag, scene_training_samples, training_samples,
    ConstantClassifier, DetectConfig, PerfectClassifier, ProposalClassifier, TrainingSetConfig,
};

/// A scored, labeled interval attributed to a roi.
#[derive(Debug, Clone, PartialEq)]
pub struct Detection {
    pub roi_id: String,
    pub interval: Interval,
    pub score: f64,
    pub label: String,
}
