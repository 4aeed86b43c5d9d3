use crate::interval::Interval;
use crate::rate::RateSeries;

/// Maximal runs of bins with value strictly above `lambda`, as intervals at
/// bin boundaries.
pub fn watershed_intervals(r: &RateSeries, lambda: f64) -> Vec<Interval> {
    let mut out = Vec::new();
    let mut run_start = None;
    for (k, &v) in r.values().iter().enumerate() {
        match (v > lambda, run_start) {
            (true, None) => run_start = Some(k),
            (false, Some(a)) => {
                out.push(bins_to_interval(r, a, k));
                run_start = None;
            }
            _ => {}
        }
    }
    if let Some(a) = run_start {
        out.push(bins_to_interval(r, a, r.len()));
    }
    out
}

fn bins_to_interval(r: &RateSeries, a: usize, b: usize) -> Interval {
    Interval::new(r.bin_start_secs(a), r.bin_start_secs(b)).expect("non-empty run")
}

/// Greedy left-to-right merge: the next interval joins the current group when
/// the summed member durations cover at least `mu` of the merged span.
///
/// Input must be sorted by start and pairwise non-overlapping.
pub fn merge_intervals(sorted: &[Interval], mu: f64) -> Vec<Interval> {
    let mut out = Vec::with_capacity(sorted.len());
    let mut iter = sorted.iter();
    let Some(first) = iter.next() else {
        return out;
    };
    let (mut start, mut end, mut covered) = (first.start(), first.end(), first.duration());
    for next in iter {
        let span = next.end().max(end) - start;
        let total = covered + next.duration();
        if total / span >= mu {
            end = end.max(next.end());
            covered = total;
        } else {
            out.push(Interval::new(start, end).expect("valid group"));
            start = next.start();
            end = next.end();
            covered = next.duration();
        }
    }
    out.push(Interval::new(start, end).expect("valid group"));
    out
}
