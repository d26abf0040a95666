//! Closed time-interval arithmetic for ground-truth selections.

/// Normalize a set of closed intervals: drop empty ones, sort, and merge
/// overlapping or touching neighbours into a disjoint union.
pub fn normalize_union(intervals: &[(f64, f64)]) -> Vec<(f64, f64)> {
    let mut xs: Vec<(f64, f64)> = intervals
        .iter()
        .copied()
        .filter(|(s, e)| e > s)
        .collect();
    xs.sort_by(|a, b| a.partial_cmp(b).expect("finite interval endpoints"));
    let mut out: Vec<(f64, f64)> = Vec::with_capacity(xs.len());
    for (s, e) in xs {
        match out.last_mut() {
            Some(last) if s <= last.1 => last.1 = last.1.max(e),
            _ => out.push((s, e)),
        }
    }
    out
}

/// Total length of a disjoint interval union.
pub fn total_len(union: &[(f64, f64)]) -> f64 {
    union.iter().map(|(s, e)| e - s).sum()
}

/// Length of the intersection between one interval and a disjoint union.
pub fn intersect_len(interval: (f64, f64), union: &[(f64, f64)]) -> f64 {
    let (a, b) = interval;
    union
        .iter()
        .map(|&(s, e)| (b.min(e) - a.max(s)).max(0.0))
        .sum()
}
