use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{invalid, Result};
use crate::interval::{tiou, Interval};
use crate::proposals::Proposal;

/// Positive-label threshold: a proposal is positive iff its best tIoU with
/// the ground truth is strictly above this.
pub const POSITIVE_TIOU: f64 = 0.7;

/// Best tIoU of `p` against any ground-truth interval, 0 when there is none.
pub fn max_tiou(p: &Interval, gt: &[Interval]) -> f64 {
    gt.iter().map(|g| tiou(p, g)).fold(0.0, f64::max)
}

/// Labels each proposal by its best tIoU (`> pos_thr` is positive) and keeps
/// one in `neg_factor` negatives, chosen by a seeded draw. Input order is
/// preserved among the kept proposals.
pub fn label_proposals(
    ps: &[Proposal],
    gt: &[Interval],
    pos_thr: f64,
    neg_factor: usize,
    seed: u64,
) -> Result<Vec<(Proposal, bool)>> {
    if neg_factor == 0 {
        return Err(invalid("negative subsampling factor must be at least 1"));
    }
    let labels: Vec<bool> = ps.iter().map(|p| max_tiou(&p.interval, gt) > pos_thr).collect();
    let negatives: Vec<usize> = (0..ps.len()).filter(|&i| !labels[i]).collect();
    let mut keep = labels.clone();
    let n_keep = negatives.len().div_ceil(neg_factor);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for k in sample(&mut rng, negatives.len(), n_keep) {
        keep[negatives[k]] = true;
    }
    Ok(ps
        .iter()
        .zip(labels)
        .zip(keep)
        .filter(|(_, k)| *k)
        .map(|((p, l), _)| (p.clone(), l))
        .collect())
}

/// 1.0 for proposals whose best tIoU is strictly above `thr`, else 0.0.
pub fn perfect_classifier(ps: &[Proposal], gt: &[Interval], thr: f64) -> Vec<f64> {
    ps.iter()
        .map(|p| if max_tiou(&p.interval, gt) > thr { 1.0 } else { 0.0 })
        .collect()
}
