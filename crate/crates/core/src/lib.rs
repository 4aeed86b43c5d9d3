//! Temporal action detection on event-camera streams.
//!
//! The pipeline turns an event stream into an event-rate curve, groups it
//! into temporal proposals at many thresholds, classifies each proposal from
//! a few sparse snapshots (with start and end context) and suppresses
//! duplicates. A bottom-up per-snapshot baseline, tIoU-based evaluation and
//! a seeded synthetic scene generator complete the toolkit.
//!
//! ```
//! use evtad::synth::{generate_scene, ActionSpec, Pattern, SceneConfig};
//! use evtad::{detect_scene, mean_ap, DetectConfig, EvalConfig, PerfectClassifier};
//! use evtad::ingest::BoundingBox;
//!
//! let scene = SceneConfig {
//!     width: 16,
//!     height: 16,
//!     duration: 30.0,
//!     rois: vec![BoundingBox { roi_id: "nest".into(), x: 0, y: 0, w: 16, h: 16 }],
//!     background_rate: 0.5,
//!     action_base_rate: None,
//!     actions: vec![ActionSpec {
//!         roi_id: "nest".into(),
//!         t_start: 10.0,
//!         t_end: 18.0,
//!         multiplier: 12.0,
//!         pattern: Pattern::Uniform,
//!         frequency: 1.0,
//!     }],
//!     seed: 1,
//! };
//! let (stream, truth) = generate_scene(&scene).unwrap();
//! let oracle = PerfectClassifier::new(&truth, 0.5);
//! let dets = detect_scene(&stream, &truth.rois, &DetectConfig::default(), &oracle).unwrap();
//! let at_half = EvalConfig { tiou_thresholds: vec![0.5], ..EvalConfig::default() };
//! let map = mean_ap(&dets, &truth.instances, &at_half).unwrap();
//! assert_eq!(map.average, 1.0);
//! ```

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bottomup;
pub mod classify;
mod error;
pub mod eval;
pub mod ingest;
pub mod interval;
pub mod proposals;
pub mod rate;
pub mod represent;
pub mod synth;

pub use classify::{
    detect, detect_scene, ConstantClassifier, DetectConfig, Detection, FeatureConfig, Model, PerfectClassifier,
    ProposalClassifier, TrainConfig,
};
pub use error::{Error, Result};
pub use eval::{average_recall, mean_ap, EvalConfig};
pub use ingest::{AnnotationSet, BoundingBox, Event, EventStream, Instance};
pub use interval::{tiou, Interval};
pub use proposals::{Proposal, ProposalConfig};
pub use rate::{RateConfig, RateSeries};
