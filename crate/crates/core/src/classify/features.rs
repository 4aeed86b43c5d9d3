//! Snapshot encoder and proposal feature assembly.
//!
//! A snapshot is summarised by a `P x P` block partition (mean and max of
//! each block) followed by the global mean, max and nonzero fraction.
//! A proposal feature concatenates the stage-averaged encodings of the
//! start stage, core and end stage.

use serde::{Deserialize, Serialize};

use super::augment::{augment_proposal, midpoints, SamplingConfig};
use crate::error::{invalid, Error, Result};
use crate::ingest::EventStream;
use crate::interval::Interval;
use crate::represent::{snapshot, Grid, GridKind, RepresentConfig};

/// Fixed-length feature vector.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector(pub Vec<f64>);

impl FeatureVector {
    pub fn zeros(len: usize) -> Self {
        Self(vec![0.0; len])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }
}

/// Encoding length for a `patches x patches` partition.
pub fn encoding_len(patches: usize) -> usize {
    2 * patches * patches + 3
}

pub fn encode_snapshot(g: &Grid, patches: usize) -> FeatureVector {
    assert!(patches >= 1, "patch partition must be at least 1x1");
    let mut out = Vec::with_capacity(encoding_len(patches));
    for bi in 0..patches {
        let (r0, r1) = (bi * g.h / patches, (bi + 1) * g.h / patches);
        for bj in 0..patches {
            let (c0, c1) = (bj * g.w / patches, (bj + 1) * g.w / patches);
            let mut sum = 0.0;
            let mut max = 0.0f64;
            let mut n = 0usize;
            for r in r0..r1 {
                for &v in &g.values[r * g.w + c0..r * g.w + c1] {
                    sum += v;
                    max = max.max(v);
                    n += 1;
                }
            }
            out.push(if n > 0 { sum / n as f64 } else { 0.0 });
            out.push(max);
        }
    }
    let n = g.values.len();
    let (sum, max, nonzero) = g.values.iter().fold((0.0, 0.0f64, 0usize), |(s, m, z), &v| {
        (s + v, m.max(v), z + usize::from(v != 0.0))
    });
    out.push(if n > 0 { sum / n as f64 } else { 0.0 });
    out.push(max);
    out.push(if n > 0 { nonzero as f64 / n as f64 } else { 0.0 });
    FeatureVector(out)
}

/// Element-wise mean.
pub fn consensus(vectors: &[FeatureVector]) -> Result<FeatureVector> {
    let first = vectors.first().ok_or_else(|| invalid("consensus of zero vectors"))?;
    let len = first.len();
    let mut acc = vec![0.0; len];
    for v in vectors {
        if v.len() != len {
            return Err(Error::DimensionMismatch {
                expected: len,
                actual: v.len(),
            });
        }
        for (a, x) in acc.iter_mut().zip(&v.0) {
            *a += x;
        }
    }
    let n = vectors.len() as f64;
    Ok(FeatureVector(acc.into_iter().map(|a| a / n).collect()))
}

/// Start, core, end concatenation.
pub fn assemble_feature(start: &FeatureVector, core: &FeatureVector, end: &FeatureVector) -> FeatureVector {
    let mut out = Vec::with_capacity(start.len() + core.len() + end.len());
    out.extend_from_slice(&start.0);
    out.extend_from_slice(&core.0);
    out.extend_from_slice(&end.0);
    FeatureVector(out)
}

/// Everything needed to turn a proposal into a feature vector.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FeatureConfig {
    pub kind: GridKind,
    pub represent: RepresentConfig,
    pub sampling: SamplingConfig,
    /// Augmentation divisor `W`: stages are `d / W` wide.
    pub divisor: f64,
    /// Encoder block partition size.
    pub patches: usize,
}

impl Default for FeatureConfig {
    fn default() -> Self {
        Self {
            kind: GridKind::Timemap,
            represent: RepresentConfig::default(),
            sampling: SamplingConfig::default(),
            divisor: 3.0,
            patches: 4,
        }
    }
}

impl FeatureConfig {
    pub fn validate(&self) -> Result<()> {
        self.represent.validate()?;
        self.sampling.validate()?;
        if self.patches == 0 {
            return Err(invalid("patch partition must be at least 1x1"));
        }
        if !(self.divisor > 0.0) {
            return Err(invalid("augmentation divisor must be positive"));
        }
        Ok(())
    }

    /// Length of an assembled proposal feature.
    pub fn proposal_len(&self) -> usize {
        3 * encoding_len(self.patches)
    }

    pub fn snapshot_len(&self) -> usize {
        encoding_len(self.patches)
    }
}

/// Encoding of a single snapshot at `t`.
pub fn snapshot_feature(s: &EventStream, t: f64, cfg: &FeatureConfig) -> FeatureVector {
    encode_snapshot(&snapshot(s, t, cfg.kind, &cfg.represent), cfg.patches)
}

fn stage_feature(s: &EventStream, stage: &Interval, n: usize, cfg: &FeatureConfig) -> Result<FeatureVector> {
    if n == 0 {
        return Ok(FeatureVector::zeros(cfg.snapshot_len()));
    }
    let encoded: Vec<FeatureVector> = midpoints(stage, n).map(|t| snapshot_feature(s, t, cfg)).collect();
    consensus(&encoded)
}

/// Augment, sample, encode, average per stage and concatenate.
pub fn proposal_feature(s: &EventStream, proposal: &Interval, cfg: &FeatureConfig) -> Result<FeatureVector> {
    let aug = augment_proposal(proposal, cfg.divisor)?;
    let SamplingConfig { n_core, n_start, n_end } = cfg.sampling;
    let start = stage_feature(s, &aug.start_stage, n_start, cfg)?;
    let core = stage_feature(s, &aug.core, n_core, cfg)?;
    let end = stage_feature(s, &aug.end_stage, n_end, cfg)?;
    Ok(assemble_feature(&start, &core, &end))
}
