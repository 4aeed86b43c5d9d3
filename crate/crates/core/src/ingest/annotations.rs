//! Annotation and detection JSON documents.
//!
//! Annotations:
//! `{"rois": [{"id", "x", "y", "w", "h"}], "instances": [{"roi_id", "t_start_us", "t_end_us", "label"}]}`
//!
//! Detections: `[{"roi_id", "t_start_us", "t_end_us", "score", "label"}]`.
//! Proposals use the detection schema without `label`.

use std::collections::{BTreeMap, HashSet};

use serde::{Deserialize, Serialize};

use crate::classify::Detection;
use crate::error::{Error, Result};
use crate::interval::Interval;
use crate::proposals::Proposal;

/// Axis-aligned region of interest in sensor pixels.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundingBox {
    #[serde(rename = "id")]
    pub roi_id: String,
    pub x: u32,
    pub y: u32,
    pub w: u32,
    pub h: u32,
}

impl BoundingBox {
    #[inline]
    pub fn contains(&self, x: u32, y: u32) -> bool {
        x >= self.x && x < self.x + self.w && y >= self.y && y < self.y + self.h
    }

    pub fn area(&self) -> u64 {
        u64::from(self.w) * u64::from(self.h)
    }
}

/// One labelled ground-truth action.
#[derive(Debug, Clone, PartialEq)]
pub struct Instance {
    pub roi_id: String,
    pub interval: Interval,
    pub label: String,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct AnnotationSet {
    pub rois: Vec<BoundingBox>,
    pub instances: Vec<Instance>,
}

impl AnnotationSet {
    /// Checks id uniqueness, references, box extents and per-roi overlap.
    pub fn validate(&self) -> Result<()> {
        let mut ids = HashSet::new();
        for b in &self.rois {
            if b.w == 0 || b.h == 0 {
                return Err(Error::Schema(format!("roi `{}` has an empty box", b.roi_id)));
            }
            if !ids.insert(b.roi_id.as_str()) {
                return Err(Error::Schema(format!("duplicate roi id `{}`", b.roi_id)));
            }
        }
        for (roi, intervals) in self.by_roi_checked()? {
            for w in intervals.windows(2) {
                if w[1].start() < w[0].end() {
                    return Err(Error::Schema(format!(
                        "overlapping instances in roi `{roi}` at {:.6}s",
                        w[1].start()
                    )));
                }
            }
        }
        Ok(())
    }

    fn by_roi_checked(&self) -> Result<BTreeMap<&str, Vec<Interval>>> {
        let ids: HashSet<&str> = self.rois.iter().map(|b| b.roi_id.as_str()).collect();
        let mut map: BTreeMap<&str, Vec<Interval>> = BTreeMap::new();
        for inst in &self.instances {
            if !ids.contains(inst.roi_id.as_str()) {
                return Err(Error::UnknownRoi(inst.roi_id.clone()));
            }
            map.entry(inst.roi_id.as_str()).or_default().push(inst.interval);
        }
        for v in map.values_mut() {
            v.sort_by(|a, b| a.start().total_cmp(&b.start()));
        }
        Ok(map)
    }

    pub fn roi(&self, id: &str) -> Option<&BoundingBox> {
        self.rois.iter().find(|b| b.roi_id == id)
    }

    /// Ground-truth intervals of one roi, sorted by start.
    pub fn intervals_for(&self, roi_id: &str) -> Vec<Interval> {
        let mut v: Vec<Interval> = self
            .instances
            .iter()
            .filter(|i| i.roi_id == roi_id)
            .map(|i| i.interval)
            .collect();
        v.sort_by(|a, b| a.start().total_cmp(&b.start()));
        v
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RoiRecord {
    id: String,
    x: u32,
    y: u32,
    w: u32,
    h: u32,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct InstanceRecord {
    roi_id: String,
    t_start_us: u64,
    t_end_us: u64,
    label: String,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct AnnotationDoc {
    rois: Vec<RoiRecord>,
    #[serde(default)]
    instances: Vec<InstanceRecord>,
}

pub fn parse_annotations(text: &str) -> Result<AnnotationSet> {
    let doc: AnnotationDoc = serde_json::from_str(text)?;
    let rois = doc
        .rois
        .into_iter()
        .map(|r| BoundingBox {
            roi_id: r.id,
            x: r.x,
            y: r.y,
            w: r.w,
            h: r.h,
        })
        .collect();
    let instances = doc
        .instances
        .into_iter()
        .map(|i| {
            if i.t_end_us <= i.t_start_us {
                return Err(Error::Schema(format!(
                    "instance in roi `{}`: t_end_us {} must exceed t_start_us {}",
                    i.roi_id, i.t_end_us, i.t_start_us
                )));
            }
            Ok(Instance {
                interval: Interval::from_us(i.t_start_us as i64, i.t_end_us as i64)?,
                roi_id: i.roi_id,
                label: i.label,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let set = AnnotationSet { rois, instances };
    set.validate()?;
    Ok(set)
}

pub fn write_annotations(set: &AnnotationSet) -> Result<String> {
    let doc = AnnotationDoc {
        rois: set
            .rois
            .iter()
            .map(|b| RoiRecord {
                id: b.roi_id.clone(),
                x: b.x,
                y: b.y,
                w: b.w,
                h: b.h,
            })
            .collect(),
        instances: set
            .instances
            .iter()
            .map(|i| {
                let (a, b) = i.interval.to_us();
                InstanceRecord {
                    roi_id: i.roi_id.clone(),
                    t_start_us: a.max(0) as u64,
                    t_end_us: b.max(0) as u64,
                    label: i.label.clone(),
                }
            })
            .collect(),
    };
    Ok(serde_json::to_string_pretty(&doc)?)
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct DetectionRecord {
    roi_id: String,
    t_start_us: i64,
    t_end_us: i64,
    score: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    label: Option<String>,
}

impl DetectionRecord {
    fn into_detection(self) -> Result<Detection> {
        if !(0.0..=1.0).contains(&self.score) {
            return Err(Error::Schema(format!(
                "score {} outside [0, 1] in roi `{}`",
                self.score, self.roi_id
            )));
        }
        Ok(Detection {
            interval: Interval::from_us(self.t_start_us, self.t_end_us)?,
            roi_id: self.roi_id,
            score: self.score,
            label: self.label.unwrap_or_default(),
        })
    }
}

/// Parses a detection (or proposal) document. A missing label reads as "".
pub fn parse_detections(text: &str) -> Result<Vec<Detection>> {
    let records: Vec<DetectionRecord> = serde_json::from_str(text)?;
    records.into_iter().map(DetectionRecord::into_detection).collect()
}

/// Times are written in whole microseconds; intervals built from integer
/// microsecond boundaries round-trip exactly.
pub fn write_detections(detections: &[Detection]) -> Result<String> {
    let records: Vec<DetectionRecord> = detections
        .iter()
        .map(|d| {
            let (a, b) = d.interval.to_us();
            DetectionRecord {
                roi_id: d.roi_id.clone(),
                t_start_us: a,
                t_end_us: b,
                score: d.score,
                label: Some(d.label.clone()),
            }
        })
        .collect();
    Ok(serde_json::to_string_pretty(&records)?)
}

/// Proposals of several rois in the detection schema, label omitted.
pub fn write_proposals<'a>(groups: impl IntoIterator<Item = (&'a str, &'a [Proposal])>) -> Result<String> {
    let records: Vec<DetectionRecord> = groups
        .into_iter()
        .flat_map(|(roi, ps)| {
            ps.iter().map(move |p| {
                let (a, b) = p.interval.to_us();
                DetectionRecord {
                    roi_id: roi.to_string(),
                    t_start_us: a,
                    t_end_us: b,
                    score: p.score,
                    label: None,
                }
            })
        })
        .collect();
    Ok(serde_json::to_string_pretty(&records)?)
}
