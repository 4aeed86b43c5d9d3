use std::collections::HashMap;

use rayon::prelude::*;

use super::{interval_nms, merge_intervals, watershed_intervals, Proposal, ProposalConfig, RateIntegral, DURATION_EPS};
use crate::error::{invalid, Result};
use crate::interval::Interval;
use crate::rate::{robust_normalize, RateSeries};

/// Robust event-rate TAG on a series already normalized with
/// [`robust_normalize`].
///
/// Every `(lambda, mu)` cell floods, merges and drops intervals shorter
/// than `min_duration`; the union of all cells is scored with the mean
/// normalized rate and reduced by NMS at `nms_tiou`.
pub fn retag(r: &RateSeries, cfg: &ProposalConfig) -> Result<Vec<Proposal>> {
    if !r.is_normalized() {
        return Err(invalid("retag expects a normalized rate series"));
    }
    cfg.validate()?;
    grouped_proposals(r, cfg, "retag")
}

/// TAG without the robust bounds: the raw rate is min-max normalized.
pub fn event_tag(raw: &RateSeries, cfg: &ProposalConfig) -> Result<Vec<Proposal>> {
    cfg.validate()?;
    let normalized = robust_normalize(raw, 0.0)?;
    grouped_proposals(&normalized, cfg, "etag")
}

/// Single-threshold flooding without merging.
pub fn watershed_baseline(r: &RateSeries, lambda: f64, min_duration: f64) -> Result<Vec<Proposal>> {
    if !r.is_normalized() {
        return Err(invalid("watershed expects a normalized rate series"));
    }
    if !(lambda > 0.0 && lambda < 1.0) {
        return Err(invalid("watershed threshold must lie in (0, 1)"));
    }
    let integral = RateIntegral::new(r);
    let provenance = format!("watershed lambda={lambda:.2}");
    watershed_intervals(r, lambda)
        .into_iter()
        .filter(|i| i.duration() >= min_duration - DURATION_EPS)
        .map(|i| Ok(Proposal::new(i, integral.mean(&i)?.clamp(0.0, 1.0), provenance.clone())))
        .collect()
}

fn grouped_proposals(r: &RateSeries, cfg: &ProposalConfig, tag: &str) -> Result<Vec<Proposal>> {
    // cells are independent; collecting in grid order keeps the union
    // deterministic regardless of scheduling
    let cells: Vec<Vec<(Interval, String)>> = cfg
        .lambda_grid
        .par_iter()
        .map(|&lambda| {
            let runs = watershed_intervals(r, lambda);
            let mut out = Vec::new();
            for &mu in &cfg.mu_grid {
                for i in merge_intervals(&runs, mu) {
                    if i.duration() >= cfg.min_duration - DURATION_EPS {
                        out.push((i, format!("{tag} lambda={lambda:.2} mu={mu:.2}")));
                    }
                }
            }
            out
        })
        .collect();

    // Identical intervals get identical scores, so only the lexicographically
    // smallest provenance can survive NMS; dedupe before scoring.
    let mut unique: HashMap<(u64, u64), (Interval, String)> = HashMap::new();
    for (i, prov) in cells.into_iter().flatten() {
        let key = (i.start().to_bits(), i.end().to_bits());
        match unique.get_mut(&key) {
            Some(existing) if existing.1 <= prov => {}
            Some(existing) => existing.1 = prov,
            None => {
                unique.insert(key, (i, prov));
            }
        }
    }
    let integral = RateIntegral::new(r);
    let proposals = unique
        .into_values()
        .map(|(i, prov)| Ok(Proposal::new(i, integral.mean(&i)?.clamp(0.0, 1.0), prov)))
        .collect::<Result<Vec<_>>>()?;
    Ok(interval_nms(proposals, cfg.nms_tiou))
}
