//! Average recall at top-N and average precision at tIoU thresholds.
//!
//! Predictions and ground truth are grouped by `roi_id`; a prediction can
//! only match ground truth of its own roi. Recall and precision are pooled
//! over all groups.

use std::cmp::Ordering;
use std::collections::HashMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::classify::Detection;
use crate::error::{invalid, Error, Result};
use crate::ingest::Instance;
use crate::interval::{rank_order, tiou, Interval};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EvalConfig {
    pub tiou_thresholds: Vec<f64>,
    pub top_n: Vec<usize>,
    /// Use the interpolated precision envelope instead of the raw curve.
    pub interpolated: bool,
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self {
            tiou_thresholds: vec![0.1, 0.3, 0.5, 0.7],
            top_n: vec![20, 30, 50],
            interpolated: false,
        }
    }
}

impl EvalConfig {
    pub fn validate(&self) -> Result<()> {
        if self.tiou_thresholds.is_empty() || self.tiou_thresholds.iter().any(|&t| !(t > 0.0 && t <= 1.0)) {
            return Err(invalid("tIoU thresholds must be non-empty and lie in (0, 1]"));
        }
        if self.top_n.is_empty() || self.top_n.contains(&0) {
            return Err(invalid("top-N values must be positive"));
        }
        Ok(())
    }

    pub fn ap_mode(&self) -> ApMode {
        if self.interpolated {
            ApMode::Interpolated
        } else {
            ApMode::Raw
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ApMode {
    /// Mean of the precision at each true-positive rank over `|gt|`.
    Raw,
    /// Area under the monotone precision envelope.
    Interpolated,
}

fn group_gt(gt: &[Instance]) -> HashMap<&str, Vec<Interval>> {
    let mut out: HashMap<&str, Vec<Interval>> = HashMap::new();
    for g in gt {
        out.entry(g.roi_id.as_str()).or_default().push(g.interval);
    }
    out
}

/// Detection indices in ranking order: score descending, then longer, then
/// earlier start, then roi id, then input position.
fn ranking(dets: &[Detection]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..dets.len()).collect();
    idx.sort_by(|&a, &b| {
        let (da, db) = (&dets[a], &dets[b]);
        rank_order(da.score, &da.interval, db.score, &db.interval)
            .then_with(|| da.roi_id.cmp(&db.roi_id))
            .then(a.cmp(&b))
    });
    idx
}

/// Recall at every `(top_n, threshold)` pair: `recall[n][t]`.
pub fn recall_table(proposals: &[Detection], gt: &[Instance], cfg: &EvalConfig) -> Result<Vec<Vec<f64>>> {
    cfg.validate()?;
    if gt.is_empty() {
        return Err(Error::EmptyGroundTruth);
    }
    let groups = group_gt(gt);
    let mut by_roi: HashMap<&str, Vec<usize>> = HashMap::new();
    for i in ranking(proposals) {
        by_roi.entry(proposals[i].roi_id.as_str()).or_default().push(i);
    }
    let mut table = Vec::with_capacity(cfg.top_n.len());
    for &n in &cfg.top_n {
        let mut recalled = vec![0usize; cfg.tiou_thresholds.len()];
        for (roi, gts) in &groups {
            let kept = by_roi.get(roi).map(Vec::as_slice).unwrap_or(&[]);
            let kept = &kept[..kept.len().min(n)];
            for g in gts {
                let best = kept
                    .iter()
                    .map(|&i| tiou(&proposals[i].interval, g))
                    .fold(0.0, f64::max);
                for (k, &t) in cfg.tiou_thresholds.iter().enumerate() {
                    if best >= t {
                        recalled[k] += 1;
                    }
                }
            }
        }
        table.push(recalled.into_iter().map(|r| r as f64 / gt.len() as f64).collect());
    }
    Ok(table)
}

/// AR for every configured top-N, as `(n, ar)` pairs.
pub fn average_recall(proposals: &[Detection], gt: &[Instance], cfg: &EvalConfig) -> Result<Vec<(usize, f64)>> {
    let table = recall_table(proposals, gt, cfg)?;
    Ok(cfg
        .top_n
        .iter()
        .zip(table)
        .map(|(&n, row)| (n, row.iter().sum::<f64>() / row.len() as f64))
        .collect())
}

/// True-positive flags in ranking order under greedy matching at `t`.
fn match_detections(dets: &[Detection], order: &[usize], gt: &HashMap<&str, Vec<Interval>>, t: f64) -> Vec<bool> {
    let mut used: HashMap<&str, Vec<bool>> = gt.iter().map(|(k, v)| (*k, vec![false; v.len()])).collect();
    order
        .iter()
        .map(|&i| {
            let d = &dets[i];
            let Some(gts) = gt.get(d.roi_id.as_str()) else {
                return false;
            };
            let taken = used.get_mut(d.roi_id.as_str()).expect("same keys");
            let mut best: Option<(usize, f64)> = None;
            for (j, g) in gts.iter().enumerate() {
                if taken[j] {
                    continue;
                }
                let v = tiou(&d.interval, g);
                if v < t {
                    continue;
                }
                let better = match best {
                    None => true,
                    Some((b, bv)) => match v.partial_cmp(&bv).unwrap_or(Ordering::Equal) {
                        Ordering::Greater => true,
                        Ordering::Equal => g.start() < gts[b].start(),
                        Ordering::Less => false,
                    },
                };
                if better {
                    best = Some((j, v));
                }
            }
            match best {
                Some((j, _)) => {
                    taken[j] = true;
                    true
                }
                None => false,
            }
        })
        .collect()
}

fn ap_from_flags(tp: &[bool], n_gt: usize, mode: ApMode) -> f64 {
    let mut hits = 0usize;
    let mut points = Vec::new();
    for (rank, &is_tp) in tp.iter().enumerate() {
        if is_tp {
            hits += 1;
            points.push(hits as f64 / (rank + 1) as f64);
        }
    }
    match mode {
        ApMode::Raw => points.iter().fold(0.0, |a, p| a + p) / n_gt as f64,
        ApMode::Interpolated => {
            // each recall step 1/|gt| weighted by the best precision at
            // that recall or beyond; precision at later TP ranks bounds
            // every later point of the curve
            let mut envelope = 0.0f64;
            let mut area = 0.0;
            for p in points.iter().rev() {
                envelope = envelope.max(*p);
                area += envelope;
            }
            area / n_gt as f64
        }
    }
}

/// Average precision at threshold `t`.
pub fn ap_at_tiou(dets: &[Detection], gt: &[Instance], t: f64, mode: ApMode) -> Result<f64> {
    if gt.is_empty() {
        return Err(Error::EmptyGroundTruth);
    }
    if !(t > 0.0 && t <= 1.0) {
        return Err(invalid("tIoU threshold must lie in (0, 1]"));
    }
    let groups = group_gt(gt);
    let tp = match_detections(dets, &ranking(dets), &groups, t);
    Ok(ap_from_flags(&tp, gt.len(), mode))
}

#[derive(Debug, Clone, PartialEq)]
pub struct MapTable {
    /// `(threshold, ap)` in configuration order.
    pub per_threshold: Vec<(f64, f64)>,
    pub average: f64,
}

pub fn mean_ap(dets: &[Detection], gt: &[Instance], cfg: &EvalConfig) -> Result<MapTable> {
    cfg.validate()?;
    let per_threshold = cfg
        .tiou_thresholds
        .iter()
        .map(|&t| Ok((t, ap_at_tiou(dets, gt, t, cfg.ap_mode())?)))
        .collect::<Result<Vec<_>>>()?;
    let average = per_threshold.iter().map(|(_, v)| v).sum::<f64>() / per_threshold.len() as f64;
    Ok(MapTable { per_threshold, average })
}

#[derive(Debug, Clone, PartialEq)]
pub struct RoiRow {
    pub roi_id: String,
    pub n_gt: usize,
    pub n_detections: usize,
    /// `None` when the roi has no ground truth.
    pub map: Option<MapTable>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RoiReport {
    pub rows: Vec<RoiRow>,
    pub thresholds: Vec<f64>,
}

impl RoiReport {
    /// Unweighted mean over rois with ground truth, per threshold and overall.
    pub fn averages(&self) -> Option<MapTable> {
        let scored: Vec<&MapTable> = self.rows.iter().filter_map(|r| r.map.as_ref()).collect();
        if scored.is_empty() {
            return None;
        }
        let n = scored.len() as f64;
        let per_threshold = self
            .thresholds
            .iter()
            .enumerate()
            .map(|(k, &t)| (t, scored.iter().map(|m| m.per_threshold[k].1).sum::<f64>() / n))
            .collect();
        Some(MapTable {
            per_threshold,
            average: scored.iter().map(|m| m.average).sum::<f64>() / n,
        })
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("roi_id,n_gt,n_detections");
        for t in &self.thresholds {
            let _ = write!(out, ",ap@{t}");
        }
        out.push_str(",map\n");
        let fmt_row = |out: &mut String, id: &str, n_gt: String, n_det: String, m: Option<&MapTable>| {
            let _ = write!(out, "{id},{n_gt},{n_det}");
            match m {
                Some(m) => {
                    for (_, v) in &m.per_threshold {
                        let _ = write!(out, ",{v:.6}");
                    }
                    let _ = writeln!(out, ",{:.6}", m.average);
                }
                None => {
                    for _ in 0..=self.thresholds.len() {
                        out.push_str(",n/a");
                    }
                    out.push('\n');
                }
            }
        };
        for r in &self.rows {
            fmt_row(
                &mut out,
                &r.roi_id,
                r.n_gt.to_string(),
                r.n_detections.to_string(),
                r.map.as_ref(),
            );
        }
        let n_gt: usize = self.rows.iter().map(|r| r.n_gt).sum();
        let n_det: usize = self.rows.iter().map(|r| r.n_detections).sum();
        fmt_row(
            &mut out,
            "mean",
            n_gt.to_string(),
            n_det.to_string(),
            self.averages().as_ref(),
        );
        out
    }
}

/// [`mean_ap`] restricted to each roi in `roi_ids`. Rois without ground
/// truth get a row with no scores and are left out of the averages.
pub fn per_roi_report(dets: &[Detection], gt: &[Instance], roi_ids: &[String], cfg: &EvalConfig) -> Result<RoiReport> {
    cfg.validate()?;
    let rows = roi_ids
        .iter()
        .map(|id| {
            let d: Vec<Detection> = dets.iter().filter(|x| &x.roi_id == id).cloned().collect();
            let g: Vec<Instance> = gt.iter().filter(|x| &x.roi_id == id).cloned().collect();
            let map = if g.is_empty() {
                None
            } else {
                Some(mean_ap(&d, &g, cfg)?)
            };
            Ok(RoiRow {
                roi_id: id.clone(),
                n_gt: g.len(),
                n_detections: d.len(),
                map,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(RoiReport {
        rows,
        thresholds: cfg.tiou_thresholds.clone(),
    })
}

/// Rows of the metric report CSV (`metric,param,value`).
#[derive(Debug, Clone, PartialEq, Default)]
pub struct MetricReport {
    pub rows: Vec<(String, String, f64)>,
}

impl MetricReport {
    pub fn push_ar(&mut self, ar: &[(usize, f64)]) {
        for (n, v) in ar {
            self.rows.push(("ar".into(), format!("top{n}"), *v));
        }
    }

    pub fn push_map(&mut self, m: &MapTable) {
        for (t, v) in &m.per_threshold {
            self.rows.push(("map".into(), format!("{t}"), *v));
        }
        self.rows.push(("map".into(), "avg".into(), m.average));
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("metric,param,value\n");
        for (m, p, v) in &self.rows {
            let _ = writeln!(out, "{m},{p},{v:.6}");
        }
        out
    }
}
