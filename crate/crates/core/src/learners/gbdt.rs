//! Gradient boosted regression trees on the logistic loss.
//!
//! Trees are grown leaf-wise (best gain first) with histogram-based
//! split search: each feature is bucketed into at most 255 bins whose
//! edges are observed values, per-leaf histograms of weighted gradient
//! statistics are scanned for the best boundary, and a sibling's
//! histogram is obtained by subtraction. Split statistics, leaf values,
//! and the `min_child_samples` constraint all use weighted counts, so a
//! row with weight 2 is equivalent to the same row duplicated (bin edges
//! come from distinct values only, which keeps that equivalence exact).
//! There is no row or feature subsampling; fits are fully deterministic.

use ndarray::ArrayView2;
use serde::{Deserialize, Serialize};

use super::{clamp_probability, sigmoid, LearnerSpec};
use crate::error::{Error, Result};

/// Denominator regularizer for leaf values and split gains.
const REG_LAMBDA: f64 = 1e-3;
/// Gains at or below this are treated as no improvement.
const MIN_GAIN: f64 = 1e-12;
/// Maximum histogram bins per feature.
const MAX_BINS: usize = 255;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub(crate) enum Node {
    Leaf {
        value: f64,
    },
    Split {
        feature: usize,
        /// Rows with `x[feature] <= threshold` go left. The threshold is
        /// always an observed training value.
        threshold: f64,
        left: usize,
        right: usize,
    },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub(crate) struct Tree {
    nodes: Vec<Node>,
}

impl Tree {
    fn predict_row(&self, row: ndarray::ArrayView1<'_, f64>) -> f64 {
        let mut idx = 0;
        loop {
            match &self.nodes[idx] {
                Node::Leaf { value } => return *value,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    idx = if row[*feature] <= *threshold { *left } else { *right };
                }
            }
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GbdtModel {
    pub(crate) base_score: f64,
    pub(crate) learning_rate: f64,
    pub(crate) trees: Vec<Tree>,
    pub(crate) n_features: usize,
    pub(crate) spec: LearnerSpec,
}

/// Per-feature bucketing: `edges[b]` is the largest value of bin `b`,
/// and doubles as the split threshold after that bin.
struct FeatureBins {
    edges: Vec<f64>,
}

impl FeatureBins {
    /// Bin edges are chosen from the distinct values of the active rows:
    /// all of them when few, equally spaced ranks otherwise.
    fn build(values: &[f64]) -> FeatureBins {
        let mut uniques: Vec<f64> = values.to_vec();
        uniques.sort_by(f64::total_cmp);
        uniques.dedup();
        if uniques.len() <= MAX_BINS {
            return FeatureBins { edges: uniques };
        }
        let u = uniques.len();
        let mut edges = Vec::with_capacity(MAX_BINS);
        for b in 1..=MAX_BINS {
            let pos = b * u / MAX_BINS - 1;
            let edge = uniques[pos];
            if edges.last() != Some(&edge) {
                edges.push(edge);
            }
        }
        FeatureBins { edges }
    }

    /// Index of the first edge ≥ v; values above every edge share the
    /// last bin.
    fn bin_of(&self, v: f64) -> u8 {
        let mut lo = 0usize;
        let mut hi = self.edges.len();
        while lo < hi {
            let mid = (lo + hi) / 2;
            if self.edges[mid] < v {
                lo = mid + 1;
            } else {
                hi = mid;
            }
        }
        lo.min(self.edges.len() - 1) as u8
    }

    fn n_bins(&self) -> usize {
        self.edges.len()
    }
}

/// (weighted gradient, weighted hessian, weight) accumulator per bin.
#[derive(Clone, Copy, Default)]
struct BinStats {
    g: f64,
    h: f64,
    w: f64,
}

struct SplitCandidate {
    gain: f64,
    feature: usize,
    threshold: f64,
}

/// A growable leaf: row set, per-feature histograms, summed statistics,
/// and the best split found (if any).
struct LeafState {
    node_slot: usize,
    depth: usize,
    rows: Vec<u32>,
    hist: Vec<Vec<BinStats>>,
    sum_g: f64,
    sum_h: f64,
    sum_w: f64,
    best: Option<SplitCandidate>,
}

struct TreeContext<'a> {
    bins: &'a [FeatureBins],
    /// Bin index per (feature, row).
    codes: &'a [Vec<u8>],
    wg: &'a [f64],
    wh: &'a [f64],
    weights: &'a [f64],
    num_leaves: usize,
    min_child_weight: f64,
    max_depth: usize,
}

impl GbdtModel {
    pub(crate) fn fit(
        spec: &LearnerSpec,
        x: ArrayView2<'_, f64>,
        y: &[u8],
        weights: Option<&[f64]>,
    ) -> Result<GbdtModel> {
        let LearnerSpec::GradientBoostedTrees {
            n_estimators,
            num_leaves,
            min_child_samples,
            max_depth,
            learning_rate,
            ..
        } = spec
        else {
            return Err(Error::Validation("expected a boosted-trees spec".into()));
        };
        let n = x.nrows();
        let d = x.ncols();
        let w: Vec<f64> = match weights {
            Some(w) => w.to_vec(),
            None => vec![1.0; n],
        };

        // Zero-weight rows are excluded everywhere, including from the
        // bin edges.
        let active: Vec<u32> = (0..n).filter(|&i| w[i] > 0.0).map(|i| i as u32).collect();
        let total_w: f64 = active.iter().map(|&i| w[i as usize]).sum();
        if total_w <= 0.0 {
            return Err(Error::Validation("total sample weight must be positive".into()));
        }
        let prior = active
            .iter()
            .map(|&i| w[i as usize] * f64::from(y[i as usize]))
            .sum::<f64>()
            / total_w;
        let prior = clamp_probability(prior);
        let base_score = (prior / (1.0 - prior)).ln();

        let mut bins = Vec::with_capacity(d);
        let mut codes: Vec<Vec<u8>> = Vec::with_capacity(d);
        for j in 0..d {
            let col: Vec<f64> = x.column(j).to_vec();
            let active_values: Vec<f64> = active.iter().map(|&i| col[i as usize]).collect();
            let fb = FeatureBins::build(&active_values);
            let code: Vec<u8> = col.iter().map(|v| fb.bin_of(*v)).collect();
            bins.push(fb);
            codes.push(code);
        }

        let mut scores = vec![base_score; n];
        let mut wg = vec![0.0; n];
        let mut wh = vec![0.0; n];
        let mut trees = Vec::with_capacity(*n_estimators);
        for _ in 0..*n_estimators {
            for &i in &active {
                let i = i as usize;
                let p = sigmoid(scores[i]);
                wg[i] = w[i] * (p - f64::from(y[i]));
                wh[i] = w[i] * (p * (1.0 - p));
            }
            let ctx = TreeContext {
                bins: &bins,
                codes: &codes,
                wg: &wg,
                wh: &wh,
                weights: &w,
                num_leaves: *num_leaves,
                min_child_weight: *min_child_samples as f64,
                max_depth: *max_depth,
            };
            let (tree, leaf_rows) = build_tree(&ctx, active.clone());
            for (value, rows) in &leaf_rows {
                for &i in rows {
                    scores[i as usize] += learning_rate * value;
                }
            }
            trees.push(tree);
        }

        Ok(GbdtModel {
            base_score,
            learning_rate: *learning_rate,
            trees,
            n_features: d,
            spec: spec.clone(),
        })
    }

    pub(crate) fn predict_proba(&self, x: ArrayView2<'_, f64>) -> Vec<f64> {
        (0..x.nrows())
            .map(|i| {
                let row = x.row(i);
                let mut score = self.base_score;
                for tree in &self.trees {
                    score += self.learning_rate * tree.predict_row(row);
                }
                clamp_probability(sigmoid(score))
            })
            .collect()
    }

    pub(crate) fn n_features(&self) -> usize {
        self.n_features
    }
}

fn build_histograms(ctx: &TreeContext<'_>, rows: &[u32]) -> Vec<Vec<BinStats>> {
    let d = ctx.codes.len();
    let mut hist: Vec<Vec<BinStats>> = (0..d)
        .map(|j| vec![BinStats::default(); ctx.bins[j].n_bins()])
        .collect();
    for (j, feature_hist) in hist.iter_mut().enumerate() {
        let code = &ctx.codes[j];
        for &i in rows {
            let i = i as usize;
            let s = &mut feature_hist[code[i] as usize];
            s.g += ctx.wg[i];
            s.h += ctx.wh[i];
            s.w += ctx.weights[i];
        }
    }
    hist
}

fn subtract_histograms(parent: &[Vec<BinStats>], small: &[Vec<BinStats>]) -> Vec<Vec<BinStats>> {
    parent
        .iter()
        .zip(small)
        .map(|(p, s)| {
            p.iter()
                .zip(s)
                .map(|(a, b)| BinStats {
                    g: a.g - b.g,
                    h: a.h - b.h,
                    w: a.w - b.w,
                })
                .collect()
        })
        .collect()
}

fn build_tree(ctx: &TreeContext<'_>, root_rows: Vec<u32>) -> (Tree, Vec<(f64, Vec<u32>)>) {
    let mut nodes = vec![Node::Leaf { value: 0.0 }];
    let hist = build_histograms(ctx, &root_rows);
    let (sum_g, sum_h, sum_w) = totals(&hist[0]);
    let mut root = LeafState {
        node_slot: 0,
        depth: 0,
        rows: root_rows,
        hist,
        sum_g,
        sum_h,
        sum_w,
        best: None,
    };
    if ctx.max_depth > 0 {
        root.best = best_split(ctx, &root);
    }
    let mut leaves = vec![root];

    while leaves.len() < ctx.num_leaves {
        // Highest gain wins; ties keep the earliest-created node slot.
        let mut pick: Option<usize> = None;
        for (i, leaf) in leaves.iter().enumerate() {
            if let Some(cand) = &leaf.best {
                let better = match pick {
                    None => true,
                    Some(p) => {
                        let cur = leaves[p].best.as_ref().unwrap();
                        cand.gain > cur.gain
                            || (cand.gain == cur.gain && leaf.node_slot < leaves[p].node_slot)
                    }
                };
                if better {
                    pick = Some(i);
                }
            }
        }
        let Some(pick) = pick else { break };
        let leaf = leaves.swap_remove(pick);
        let cand = leaf.best.as_ref().unwrap();
        let split_bin = ctx.bins[cand.feature].bin_of(cand.threshold);
        let code = &ctx.codes[cand.feature];

        let mut left_rows = Vec::with_capacity(leaf.rows.len());
        let mut right_rows = Vec::with_capacity(leaf.rows.len());
        for &i in &leaf.rows {
            if code[i as usize] <= split_bin {
                left_rows.push(i);
            } else {
                right_rows.push(i);
            }
        }

        // Build the smaller child's histogram directly; derive the other
        // by subtraction from the parent.
        let (small_rows, large_rows, small_is_left) = if left_rows.len() <= right_rows.len() {
            (&left_rows, &right_rows, true)
        } else {
            (&right_rows, &left_rows, false)
        };
        let small_hist = build_histograms(ctx, small_rows);
        let large_hist = subtract_histograms(&leaf.hist, &small_hist);
        let _ = large_rows;
        let (left_hist, right_hist) = if small_is_left {
            (small_hist, large_hist)
        } else {
            (large_hist, small_hist)
        };

        let left_slot = nodes.len();
        let right_slot = left_slot + 1;
        nodes[leaf.node_slot] = Node::Split {
            feature: cand.feature,
            threshold: cand.threshold,
            left: left_slot,
            right: right_slot,
        };
        nodes.push(Node::Leaf { value: 0.0 });
        nodes.push(Node::Leaf { value: 0.0 });

        for (slot, rows, hist) in [
            (left_slot, left_rows, left_hist),
            (right_slot, right_rows, right_hist),
        ] {
            let (sum_g, sum_h, sum_w) = totals(&hist[0]);
            let mut child = LeafState {
                node_slot: slot,
                depth: leaf.depth + 1,
                rows,
                hist,
                sum_g,
                sum_h,
                sum_w,
                best: None,
            };
            if child.depth < ctx.max_depth {
                child.best = best_split(ctx, &child);
            }
            leaves.push(child);
        }
    }

    let mut assignments = Vec::with_capacity(leaves.len());
    for mut leaf in leaves {
        let value = -leaf.sum_g / (leaf.sum_h + REG_LAMBDA);
        nodes[leaf.node_slot] = Node::Leaf { value };
        assignments.push((value, std::mem::take(&mut leaf.rows)));
    }
    (Tree { nodes }, assignments)
}

fn totals(first_feature_hist: &[BinStats]) -> (f64, f64, f64) {
    let mut g = 0.0;
    let mut h = 0.0;
    let mut w = 0.0;
    for s in first_feature_hist {
        g += s.g;
        h += s.h;
        w += s.w;
    }
    (g, h, w)
}

fn best_split(ctx: &TreeContext<'_>, leaf: &LeafState) -> Option<SplitCandidate> {
    let parent_score = leaf.sum_g * leaf.sum_g / (leaf.sum_h + REG_LAMBDA);
    let mut best: Option<SplitCandidate> = None;
    let mut best_gain = MIN_GAIN;
    for (feature, hist) in leaf.hist.iter().enumerate() {
        let mut gl = 0.0;
        let mut hl = 0.0;
        let mut wl = 0.0;
        for b in 0..hist.len().saturating_sub(1) {
            let s = &hist[b];
            gl += s.g;
            hl += s.h;
            wl += s.w;
            if wl < ctx.min_child_weight {
                continue;
            }
            let wr = leaf.sum_w - wl;
            if wr < ctx.min_child_weight {
                break;
            }
            let gr = leaf.sum_g - gl;
            let hr = leaf.sum_h - hl;
            let gain = gl * gl / (hl + REG_LAMBDA) + gr * gr / (hr + REG_LAMBDA) - parent_score;
            if gain > best_gain {
                best_gain = gain;
                best = Some(SplitCandidate {
                    gain,
                    feature,
                    threshold: ctx.bins[feature].edges[b],
                });
            }
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::learners::Model;
    use ndarray::Array2;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn gbdt_spec(n_estimators: usize) -> LearnerSpec {
        LearnerSpec::GradientBoostedTrees {
            n_estimators,
            num_leaves: 15,
            min_child_samples: 2,
            max_depth: 4,
            learning_rate: 0.3,
            seed: 0,
        }
    }

    fn random_data(n: usize, d: usize, seed: u64) -> (Array2<f64>, Vec<u8>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x = Array2::from_shape_fn((n, d), |_| rng.random::<f64>() * 4.0 - 2.0);
        let y: Vec<u8> = (0..n)
            .map(|i| u8::from(x[(i, 0)] + 0.3 * x[(i, 1 % d)] + rng.random::<f64>() * 0.5 > 0.2))
            .collect();
        (x, y)
    }

    #[test]
    fn bin_edges_round_trip_values() {
        let values = vec![3.0, 1.0, 2.0, 2.0, 1.0, 5.0];
        let fb = FeatureBins::build(&values);
        assert_eq!(fb.edges, vec![1.0, 2.0, 3.0, 5.0]);
        assert_eq!(fb.bin_of(1.0), 0);
        assert_eq!(fb.bin_of(2.5), 2); // lands with 3.0
        assert_eq!(fb.bin_of(99.0), 3); // clamps to the last bin
        assert_eq!(fb.bin_of(-1.0), 0);
    }

    #[test]
    fn many_distinct_values_build_capped_increasing_edges() {
        let values: Vec<f64> = (0..10_000).map(|i| i as f64 * 0.37).collect();
        let fb = FeatureBins::build(&values);
        assert!(fb.n_bins() <= MAX_BINS);
        assert!(fb.edges.windows(2).all(|w| w[0] < w[1]));
        // every edge is an observed value
        for e in &fb.edges {
            assert!(values.iter().any(|v| v == e));
        }
    }

    #[test]
    fn weight_two_equals_duplicated_row() {
        let (x, y) = random_data(80, 3, 5);
        // duplicate row 7
        let mut dup_rows: Vec<f64> = x.iter().copied().collect();
        dup_rows.extend(x.row(7).iter().copied());
        let x_dup = Array2::from_shape_vec((81, 3), dup_rows).unwrap();
        let mut y_dup = y.clone();
        y_dup.push(y[7]);

        let mut w = vec![1.0; 80];
        w[7] = 2.0;

        let spec = gbdt_spec(30);
        let m_weighted = Model::fit(&spec, x.view(), &y, Some(&w)).unwrap();
        let m_dup = Model::fit(&spec, x_dup.view(), &y_dup, None).unwrap();

        let (probe, _) = random_data(40, 3, 99);
        let p1 = m_weighted.predict_proba(probe.view()).unwrap();
        let p2 = m_dup.predict_proba(probe.view()).unwrap();
        for (a, b) in p1.iter().zip(&p2) {
            assert!((a - b).abs() < 1e-6, "{a} vs {b}");
        }
    }

    #[test]
    fn monotone_probabilities_on_monotone_data() {
        let n = 100;
        let x = Array2::from_shape_fn((n, 1), |(i, _)| i as f64 / 10.0);
        let y: Vec<u8> = (0..n).map(|i| u8::from(i >= 40)).collect();
        let m = Model::fit(&gbdt_spec(25), x.view(), &y, None).unwrap();
        let probe = Array2::from_shape_fn((50, 1), |(i, _)| i as f64 / 5.0);
        let p = m.predict_proba(probe.view()).unwrap();
        for win in p.windows(2) {
            assert!(win[1] >= win[0] - 1e-12, "{} then {}", win[0], win[1]);
        }
    }

    #[test]
    fn zero_estimators_predicts_weighted_base_rate() {
        let (x, y) = random_data(50, 2, 8);
        let w: Vec<f64> = (0..50).map(|i| 1.0 + (i % 3) as f64).collect();
        let m = Model::fit(&gbdt_spec(0), x.view(), &y, Some(&w)).unwrap();
        let total: f64 = w.iter().sum();
        let prior: f64 = w
            .iter()
            .zip(&y)
            .map(|(wi, yi)| wi * f64::from(*yi))
            .sum::<f64>()
            / total;
        let p = m.predict_proba(x.view()).unwrap();
        for pi in p {
            assert!((pi - prior).abs() < 1e-12, "{pi} vs {prior}");
        }
    }

    #[test]
    fn constant_labels_collapse_to_prior() {
        let (x, _) = random_data(30, 2, 4);
        let y = vec![1u8; 30];
        let m = Model::fit_unguarded(&gbdt_spec(10), x.view(), &y, None).unwrap();
        let p = m.predict_proba(x.view()).unwrap();
        for pi in p {
            assert!(pi > 1.0 - 1e-9, "expected ≈1.0, got {pi}");
        }
    }

    #[test]
    fn uninformative_features_stay_at_prior() {
        let x = Array2::<f64>::zeros((40, 2));
        let y: Vec<u8> = (0..40).map(|i| u8::from(i < 12)).collect();
        let m = Model::fit(&gbdt_spec(20), x.view(), &y, None).unwrap();
        let p = m.predict_proba(x.view()).unwrap();
        for pi in p {
            assert!((pi - 0.3).abs() < 1e-9, "expected class prior 0.3, got {pi}");
        }
    }

    #[test]
    fn zero_weight_rows_do_not_shape_the_model() {
        let (x, y) = random_data(60, 3, 21);
        // rows 40.. get zero weight; the model must match a fit on rows <40
        let mut w = vec![1.0; 60];
        for wi in w.iter_mut().skip(40) {
            *wi = 0.0;
        }
        let head = x.slice(ndarray::s![..40, ..]).to_owned();
        let m_zero = Model::fit(&gbdt_spec(15), x.view(), &y, Some(&w)).unwrap();
        let m_head = Model::fit(&gbdt_spec(15), head.view(), &y[..40], None).unwrap();
        let (probe, _) = random_data(30, 3, 77);
        assert_eq!(
            m_zero.predict_proba(probe.view()).unwrap(),
            m_head.predict_proba(probe.view()).unwrap()
        );
    }

    #[test]
    fn refit_is_deterministic() {
        let (x, y) = random_data(120, 4, 13);
        let spec = gbdt_spec(20);
        let m1 = Model::fit(&spec, x.view(), &y, None).unwrap();
        let m2 = Model::fit(&spec, x.view(), &y, None).unwrap();
        assert_eq!(
            m1.predict_proba(x.view()).unwrap(),
            m2.predict_proba(x.view()).unwrap()
        );
    }

    #[test]
    fn separates_a_clean_step_function() {
        let n = 400;
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let x = Array2::from_shape_fn((n, 2), |_| rng.random::<f64>());
        let y: Vec<u8> = (0..n).map(|i| u8::from(x[(i, 0)] > 0.6)).collect();
        let m = Model::fit(&gbdt_spec(40), x.view(), &y, None).unwrap();
        let p = m.predict_proba(x.view()).unwrap();
        for (i, pi) in p.iter().enumerate() {
            if y[i] == 1 {
                assert!(*pi > 0.8, "row {i}: {pi}");
            } else {
                assert!(*pi < 0.2, "row {i}: {pi}");
            }
        }
    }
}
