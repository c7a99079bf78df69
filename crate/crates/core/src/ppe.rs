//! Proxy performance evaluator: least-squares gradient-boosted regression
//! trees over `[HP encoding ‖ meta-features ‖ IPMs]`.
//!
//! Splits are exact (every midpoint between consecutive distinct values) and
//! found level by level from per-feature presorted row orders. Ties resolve
//! to the lowest feature index, then the lowest threshold.

use alloc::vec;
use alloc::vec::Vec;

use num_traits::Float;
use rand::seq::index;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hpspace::HpEncoding;
use crate::ipm::{IpmVector, IPM_LEN};
use crate::metafeatures::MetaFeatureVector;
use crate::rng;

pub const PPE_FORMAT: u32 = 1;
const MIN_ROWS: usize = 20;
const MIN_GAIN: f64 = 1e-12;

/// Rows `[encode(λ_j) ‖ m_i ‖ I_ij] → P_ij`, ordered by `(i, j)`.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainTable {
    pub features: Vec<Vec<f64>>,
    pub targets: Vec<f64>,
    pub provenance: Vec<(usize, usize)>,
}

impl TrainTable {
    pub fn len(&self) -> usize {
        self.targets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.targets.is_empty()
    }

    pub fn feature_len(&self) -> usize {
        self.features.first().map_or(0, Vec::len)
    }
}

/// Concatenates one PPE input row.
pub fn feature_row(enc: &HpEncoding, mf: &MetaFeatureVector, ipm: &IpmVector) -> Vec<f64> {
    let mut row = Vec::with_capacity(enc.0.len() + mf.values.len() + IPM_LEN);
    row.extend_from_slice(&enc.0);
    row.extend_from_slice(&mf.values);
    row.extend_from_slice(&ipm.0);
    row
}

/// `perf[i][j]`, `encodings[j]`, `meta_features[i]`, `ipms[i][j]`.
pub fn build_training_table(
    perf: &[Vec<f64>],
    encodings: &[HpEncoding],
    meta_features: &[MetaFeatureVector],
    ipms: &[Vec<IpmVector>],
) -> Result<TrainTable> {
    let (n, m) = (perf.len(), encodings.len());
    Error::check_len(n, meta_features.len())?;
    Error::check_len(n, ipms.len())?;
    let mut table = TrainTable {
        features: Vec::with_capacity(n * m),
        targets: Vec::with_capacity(n * m),
        provenance: Vec::with_capacity(n * m),
    };
    for i in 0..n {
        Error::check_len(m, perf[i].len())?;
        Error::check_len(m, ipms[i].len())?;
        for j in 0..m {
            let t = perf[i][j];
            if !(0.0..=1.0).contains(&t) {
                return Err(Error::invalid("PPE targets must lie in [0, 1]"));
            }
            table.features.push(feature_row(&encodings[j], &meta_features[i], &ipms[i][j]));
            table.targets.push(t);
            table.provenance.push((i, j));
        }
    }
    let len = table.feature_len();
    if table.features.iter().any(|r| r.len() != len) {
        return Err(Error::invalid("ragged PPE feature rows"));
    }
    Ok(table)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PpeParams {
    pub trees: usize,
    pub max_depth: usize,
    pub learning_rate: f64,
    pub row_subsample: f64,
    pub min_leaf: usize,
    pub seed: u64,
}

impl Default for PpeParams {
    fn default() -> Self {
        Self { trees: 200, max_depth: 6, learning_rate: 0.05, row_subsample: 0.8, min_leaf: 5, seed: 0 }
    }
}

/// Tree node; `feature < 0` marks a leaf. Rows with `x[feature] < threshold` go left.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TreeNode {
    pub feature: i32,
    pub threshold: f64,
    pub left: u32,
    pub right: u32,
    pub value: f64,
}

impl TreeNode {
    fn leaf(value: f64) -> Self {
        Self { feature: -1, threshold: 0.0, left: 0, right: 0, value }
    }

    pub fn is_leaf(&self) -> bool {
        self.feature < 0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegressionTree {
    pub nodes: Vec<TreeNode>,
}

impl RegressionTree {
    pub fn predict(&self, x: &[f64]) -> f64 {
        let mut id = 0usize;
        loop {
            let node = &self.nodes[id];
            if node.is_leaf() {
                return node.value;
            }
            id = if x[node.feature as usize] < node.threshold { node.left } else { node.right } as usize;
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PpeModel {
    pub format: u32,
    pub feature_len: usize,
    pub base_score: f64,
    pub learning_rate: f64,
    pub trees: Vec<RegressionTree>,
    pub params: PpeParams,
    /// Training-set MSE after the base score and after each stage.
    pub train_mse: Vec<f64>,
}

impl PpeModel {
    /// Unclamped ensemble output.
    pub fn predict_raw(&self, x: &[f64]) -> Result<f64> {
        Error::check_len(self.feature_len, x.len())?;
        Ok(self.base_score + self.trees.iter().map(|t| self.learning_rate * t.predict(x)).sum::<f64>())
    }

    /// Ensemble output clamped to `[0, 1]`.
    pub fn predict(&self, x: &[f64]) -> Result<f64> {
        Ok(self.predict_raw(x)?.clamp(0.0, 1.0))
    }
}

/// Predicted performance of one HP setting on a dataset.
pub fn ppe_predict(model: &PpeModel, enc: &HpEncoding, mf: &MetaFeatureVector, ipm: &IpmVector) -> Result<f64> {
    model.predict(&feature_row(enc, mf, ipm))
}

struct Split {
    feature: usize,
    threshold: f64,
    gain: f64,
}

/// Per-node running state while scanning one feature.
#[derive(Clone, Copy)]
struct Scan {
    count: usize,
    sum: f64,
    last: f64,
}

fn mse(targets: &[f64], pred: &[f64]) -> f64 {
    targets.iter().zip(pred).map(|(t, p)| (t - p) * (t - p)).sum::<f64>() / targets.len() as f64
}

pub fn train_ppe(table: &TrainTable, params: &PpeParams) -> Result<PpeModel> {
    let n = table.len();
    if n < MIN_ROWS {
        return Err(Error::invalid(alloc::format!("PPE needs at least {MIN_ROWS} rows, got {n}")));
    }
    if !(params.row_subsample > 0.0 && params.row_subsample <= 1.0) || params.learning_rate <= 0.0 {
        return Err(Error::invalid("invalid PPE parameters"));
    }
    let f = table.feature_len();
    let x = &table.features;
    let y = &table.targets;
    let base = y.iter().sum::<f64>() / n as f64;
    let mut pred = vec![base; n];
    let mut train_mse = vec![mse(y, &pred)];

    let order: Vec<Vec<u32>> = (0..f)
        .map(|k| {
            let mut o: Vec<u32> = (0..n as u32).collect();
            o.sort_by(|&a, &b| x[a as usize][k].total_cmp(&x[b as usize][k]).then(a.cmp(&b)));
            o
        })
        .collect();

    let sample_size = ((params.row_subsample * n as f64).round() as usize).clamp(1, n);
    let mut trees = Vec::with_capacity(params.trees);
    let mut node_of = vec![u32::MAX; n];
    let mut resid = vec![0.0; n];
    for t in 0..params.trees {
        let mut rng = rng::rng(rng::derive(params.seed, t as u64));
        node_of.iter_mut().for_each(|v| *v = u32::MAX);
        if sample_size == n {
            node_of.iter_mut().for_each(|v| *v = 0);
        } else {
            for i in index::sample(&mut rng, n, sample_size).into_iter() {
                node_of[i] = 0;
            }
        }
        for i in 0..n {
            resid[i] = y[i] - pred[i];
        }
        let tree = grow_tree(x, &resid, &order, &mut node_of, params);
        for i in 0..n {
            pred[i] += params.learning_rate * tree.predict(&x[i]);
        }
        train_mse.push(mse(y, &pred));
        trees.push(tree);
    }
    Ok(PpeModel {
        format: PPE_FORMAT,
        feature_len: f,
        base_score: base,
        learning_rate: params.learning_rate,
        trees,
        params: *params,
        train_mse,
    })
}

fn grow_tree(
    x: &[Vec<f64>],
    resid: &[f64],
    order: &[Vec<u32>],
    node_of: &mut [u32],
    params: &PpeParams,
) -> RegressionTree {
    let mut totals: Vec<(usize, f64)> = vec![(0, 0.0)];
    for (i, &nd) in node_of.iter().enumerate() {
        if nd == 0 {
            totals[0].0 += 1;
            totals[0].1 += resid[i];
        }
    }
    let mut nodes = vec![TreeNode::leaf(if totals[0].0 > 0 { totals[0].1 / totals[0].0 as f64 } else { 0.0 })];
    let mut frontier: Vec<usize> = vec![0];
    for _depth in 0..params.max_depth {
        if frontier.is_empty() {
            break;
        }
        let mut slot = vec![usize::MAX; nodes.len()];
        for (s, &nd) in frontier.iter().enumerate() {
            slot[nd] = s;
        }
        let mut best: Vec<Option<Split>> = frontier.iter().map(|_| None).collect();
        let mut scan = vec![Scan { count: 0, sum: 0.0, last: f64::NAN }; frontier.len()];
        for (k, ord) in order.iter().enumerate() {
            scan.iter_mut().for_each(|s| *s = Scan { count: 0, sum: 0.0, last: f64::NAN });
            for &r in ord {
                let r = r as usize;
                let nd = node_of[r];
                if nd == u32::MAX {
                    continue;
                }
                let s = slot.get(nd as usize).copied().unwrap_or(usize::MAX);
                if s == usize::MAX {
                    continue;
                }
                let v = x[r][k];
                let st = &mut scan[s];
                if st.count > 0 && v > st.last {
                    let (tc, ts) = totals[frontier[s]];
                    let (lc, ls) = (st.count, st.sum);
                    let (rc, rs) = (tc - lc, ts - ls);
                    if lc >= params.min_leaf && rc >= params.min_leaf {
                        let gain = ls * ls / lc as f64 + rs * rs / rc as f64 - ts * ts / tc as f64;
                        let better = best[s].as_ref().map_or(gain > MIN_GAIN, |b| gain > b.gain);
                        if better {
                            best[s] = Some(Split { feature: k, threshold: st.last + (v - st.last) * 0.5, gain });
                        }
                    }
                }
                st.count += 1;
                st.sum += resid[r];
                st.last = v;
            }
        }
        let mut next_frontier = Vec::new();
        let mut child_of: Vec<Option<(usize, usize, usize, f64)>> = vec![None; nodes.len()];
        for (s, split) in best.into_iter().enumerate() {
            let nd = frontier[s];
            let Some(split) = split else { continue };
            let l = nodes.len();
            nodes.push(TreeNode::leaf(0.0));
            nodes.push(TreeNode::leaf(0.0));
            totals.push((0, 0.0));
            totals.push((0, 0.0));
            nodes[nd].feature = split.feature as i32;
            nodes[nd].threshold = split.threshold;
            nodes[nd].left = l as u32;
            nodes[nd].right = (l + 1) as u32;
            child_of[nd] = Some((l, l + 1, split.feature, split.threshold));
            next_frontier.push(l);
            next_frontier.push(l + 1);
        }
        for (i, nd) in node_of.iter_mut().enumerate() {
            if *nd == u32::MAX {
                continue;
            }
            if let Some(Some((l, r, k, thr))) = child_of.get(*nd as usize) {
                let c = if x[i][*k] < *thr { *l } else { *r };
                *nd = c as u32;
                totals[c].0 += 1;
                totals[c].1 += resid[i];
            }
        }
        for &c in &next_frontier {
            let (cnt, sum) = totals[c];
            nodes[c].value = if cnt > 0 { sum / cnt as f64 } else { 0.0 };
        }
        frontier = next_frontier;
    }
    RegressionTree { nodes }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn table(features: Vec<Vec<f64>>, targets: Vec<f64>) -> TrainTable {
        let provenance = (0..targets.len()).map(|i| (0, i)).collect();
        TrainTable { features, targets, provenance }
    }

    #[test]
    fn constant_targets() {
        let t = table((0..30).map(|i| vec![i as f64, (i % 3) as f64]).collect(), vec![0.7; 30]);
        let m = train_ppe(&t, &PpeParams::default()).unwrap();
        for x in [[0.0, 0.0], [100.0, -3.0], [15.5, 1.0]] {
            assert!((m.predict(&x).unwrap() - 0.7).abs() < 1e-12);
        }
    }

    #[test]
    fn too_few_rows() {
        let t = table(vec![vec![0.0]; 19], vec![0.5; 19]);
        assert!(train_ppe(&t, &PpeParams::default()).is_err());
    }

    #[test]
    fn identical_features_train_to_mean() {
        let targets: Vec<f64> = (0..40).map(|i| (i % 2) as f64).collect();
        let t = table(vec![vec![1.0, 2.0]; 40], targets);
        let params = PpeParams { row_subsample: 1.0, ..PpeParams::default() };
        let m = train_ppe(&t, &params).unwrap();
        assert!(m.trees.iter().all(|t| t.nodes.len() == 1));
        assert!((m.predict(&[1.0, 2.0]).unwrap() - 0.5).abs() < 1e-12);
    }

    #[test]
    fn stump_matches_exhaustive_split_search() {
        let xs: Vec<f64> = (0..24).map(|i| if i < 10 { i as f64 * 0.1 } else { 5.0 + i as f64 * 0.1 }).collect();
        let ys: Vec<f64> = (0..24).map(|i| if i < 10 { 0.0 } else { 1.0 }).collect();
        let t = table(xs.iter().map(|&v| vec![v]).collect(), ys.clone());
        let params = PpeParams { trees: 1, max_depth: 1, learning_rate: 1.0, row_subsample: 1.0, min_leaf: 1, seed: 0 };
        let m = train_ppe(&t, &params).unwrap();
        // brute force: best SSE over all midpoints
        let mut sorted = xs.clone();
        sorted.sort_by(f64::total_cmp);
        let mut best = (f64::INFINITY, 0.0);
        for w in sorted.windows(2) {
            let thr = (w[0] + w[1]) / 2.0;
            let (l, r): (Vec<_>, Vec<_>) = xs.iter().zip(&ys).partition(|(x, _)| **x < thr);
            let sse = |v: &[(&f64, &f64)]| {
                let m = v.iter().map(|p| *p.1).sum::<f64>() / v.len() as f64;
                v.iter().map(|p| (p.1 - m).powi(2)).sum::<f64>()
            };
            let total = sse(&l) + sse(&r);
            if total < best.0 {
                best = (total, thr);
            }
        }
        let root = m.trees[0].nodes[0];
        assert_eq!(root.feature, 0);
        assert!((root.threshold - best.1).abs() < 1e-12);
        assert!(m.predict(&[0.2]).unwrap() < 1e-12);
        assert!((m.predict(&[6.0]).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn full_sample_training_mse_never_increases() {
        let mut r = rng::rng(4);
        use rand::Rng as _;
        let feats: Vec<Vec<f64>> = (0..200).map(|_| (0..4).map(|_| r.gen_range(0.0..1.0)).collect()).collect();
        let ys: Vec<f64> = feats.iter().map(|v| (v[0] * v[1] + 0.3 * v[2]).clamp(0.0, 1.0)).collect();
        let params = PpeParams { row_subsample: 1.0, trees: 50, ..PpeParams::default() };
        let m = train_ppe(&table(feats, ys), &params).unwrap();
        assert!(m.train_mse.windows(2).all(|w| w[1] <= w[0] + 1e-15));
    }

    #[test]
    fn contract_mismatch() {
        let t = table((0..25).map(|i| vec![i as f64]).collect(), (0..25).map(|i| i as f64 / 25.0).collect());
        let m = train_ppe(&t, &PpeParams::default()).unwrap();
        assert!(m.predict(&[1.0, 2.0]).is_err());
    }
}
