use std::cmp::Ordering;
use std::collections::HashSet;

use super::Proposal;
use crate::interval::{rank_order, tiou};

/// Score descending, longer first, earlier start first, then provenance.
pub fn proposal_order(a: &Proposal, b: &Proposal) -> Ordering {
    rank_order(a.score, &a.interval, b.score, &b.interval).then_with(|| a.provenance.cmp(&b.provenance))
}

/// Greedy non-maximum suppression: walk proposals in [`proposal_order`] and
/// keep one iff its tIoU with every kept proposal is below `thr`.
///
/// Kept proposals are indexed by start time. A kept interval `k` can only
/// reach `tiou >= thr` with candidate `c` when
/// `|start_c - start_k| <= (1 - thr) / thr * len_c`, so only that start range
/// is scanned.
pub fn interval_nms(mut proposals: Vec<Proposal>, thr: f64) -> Vec<Proposal> {
    assert!(thr > 0.0 && thr <= 1.0, "nms threshold must lie in (0, 1]");
    proposals.sort_by(proposal_order);

    let mut kept: Vec<Proposal> = Vec::new();
    // (start, index into kept), sorted by start
    let mut by_start: Vec<(f64, usize)> = Vec::new();
    // An exact repeat of an earlier interval is always suppressed: either the
    // earlier copy was kept (tIoU 1) or whatever suppressed it also
    // suppresses the repeat.
    let mut seen: HashSet<(u64, u64)> = HashSet::new();
    let reach = (1.0 - thr) / thr;

    for p in proposals {
        let key = (p.interval.start().to_bits(), p.interval.end().to_bits());
        if !seen.insert(key) {
            continue;
        }
        let delta = reach * p.interval.duration() * (1.0 + 1e-9) + 1e-9;
        let lo = p.interval.start() - delta;
        let hi = p.interval.start() + delta;
        let first = by_start.partition_point(|(s, _)| *s < lo);
        let suppressed = by_start[first..]
            .iter()
            .take_while(|(s, _)| *s <= hi)
            .any(|(_, k)| tiou(&kept[*k].interval, &p.interval) >= thr);
        if !suppressed {
            let pos = by_start.partition_point(|(s, _)| *s <= p.interval.start());
            by_start.insert(pos, (p.interval.start(), kept.len()));
            kept.push(p);
        }
    }
    kept
}
