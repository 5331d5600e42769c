//! Pareto frontier extraction and 80%-rule winner selection.

use super::benchmark::EvalPoint;
use super::metrics::FairnessMetric;

/// Fairness ratio treated as acceptable under the 80% rule.
pub const RULE80_THRESHOLD: f64 = 0.8;

/// Indices of points not strictly dominated by any other point, where
/// point `b` dominates `a` when `b ≥ a` in both coordinates and `> a` in
/// at least one. Duplicates of a frontier point are all retained. Output
/// indices are ascending.
pub fn pareto_frontier(points: &[(f64, f64)]) -> Vec<usize> {
    if points.is_empty() {
        return Vec::new();
    }
    // sort by performance desc; sweep groups of equal performance while
    // tracking the best fairness seen at strictly higher performance
    let mut order: Vec<usize> = (0..points.len()).collect();
    order.sort_by(|&a, &b| {
        points[b]
            .0
            .total_cmp(&points[a].0)
            .then(points[b].1.total_cmp(&points[a].1))
    });

    let mut frontier = Vec::new();
    let mut best_fair_above = f64::NEG_INFINITY;
    let mut k = 0;
    while k < order.len() {
        let perf = points[order[k]].0;
        let mut end = k;
        while end < order.len() && points[order[end]].0 == perf {
            end += 1;
        }
        // within the group, order is fairness desc, so the group max is first
        let group_max_fair = points[order[k]].1;
        for &idx in &order[k..end] {
            let fair = points[idx].1;
            if fair > best_fair_above && fair == group_max_fair {
                frontier.push(idx);
            }
        }
        if group_max_fair > best_fair_above {
            best_fair_above = group_max_fair;
        }
        k = end;
    }
    frontier.sort_unstable();
    frontier
}

/// Best-performing point whose fairness for `metric` is at least 0.8.
///
/// Ties break toward higher fairness, then lower model id, then lower
/// point index. `None` when no point qualifies.
pub fn rule80_winner(points: &[EvalPoint], metric: FairnessMetric) -> Option<usize> {
    let mut winner: Option<usize> = None;
    for (i, point) in points.iter().enumerate() {
        let fair = point.fairness[&metric];
        if fair < RULE80_THRESHOLD {
            continue;
        }
        let better = match winner {
            None => true,
            Some(w) => {
                let cur = &points[w];
                let cur_fair = cur.fairness[&metric];
                point.performance > cur.performance
                    || (point.performance == cur.performance && fair > cur_fair)
                    || (point.performance == cur.performance
                        && fair == cur_fair
                        && point.model_id < cur.model_id)
            }
        };
        if better {
            winner = Some(i);
        }
    }
    winner
}
