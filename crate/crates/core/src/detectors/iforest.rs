//! Isolation forest.
//!
//! Each tree sees `⌈max_samples·n⌉` rows and `⌈max_features·d⌉` columns drawn
//! without replacement. Tree seeds derive from the root seed and the tree
//! index, so the forest is reproducible regardless of build order.

use alloc::vec::Vec;

use num_traits::Float;
use rand::seq::index;
use rand::Rng as _;

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::rng;

const EULER_GAMMA: f64 = 0.577_215_664_9;

/// `2H(k−1) − 2(k−1)/k` with `H(i) = ln(i) + γ`, without the small-k special cases.
pub fn path_length_formula(k: f64) -> f64 {
    2.0 * ((k - 1.0).ln() + EULER_GAMMA) - 2.0 * (k - 1.0) / k
}

/// Average unsuccessful-search path length `c(k)`; `c(1) = 0`, `c(2) = 1`.
pub fn average_path_length(k: usize) -> f64 {
    match k {
        0 | 1 => 0.0,
        2 => 1.0,
        _ => path_length_formula(k as f64),
    }
}

#[derive(Debug, Clone)]
enum Node {
    Split { feature: usize, value: f64, left: usize, right: usize },
    Leaf { size: usize },
}

#[derive(Debug, Clone)]
struct IsolationTree {
    nodes: Vec<Node>,
}

impl IsolationTree {
    fn build(x: &Matrix, rows: &mut [usize], features: &[usize], height_limit: usize, rng: &mut rng::Rng) -> Self {
        let mut tree = Self { nodes: Vec::new() };
        tree.grow(x, rows, features, 0, height_limit, rng);
        tree
    }

    fn grow(
        &mut self,
        x: &Matrix,
        rows: &mut [usize],
        features: &[usize],
        depth: usize,
        limit: usize,
        rng: &mut rng::Rng,
    ) -> usize {
        let id = self.nodes.len();
        self.nodes.push(Node::Leaf { size: rows.len() });
        if depth >= limit || rows.len() <= 1 {
            return id;
        }
        // candidate features that still vary inside this node
        let varying: Vec<(usize, f64, f64)> = features
            .iter()
            .filter_map(|&f| {
                let (lo, hi) = rows.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &r| {
                    let v = x.get(r, f);
                    (lo.min(v), hi.max(v))
                });
                (hi > lo).then_some((f, lo, hi))
            })
            .collect();
        if varying.is_empty() {
            return id;
        }
        let (feature, lo, hi) = varying[rng.gen_range(0..varying.len())];
        let mut value = rng.gen_range(lo..hi);
        if value <= lo {
            value = lo + (hi - lo) * 0.5;
        }
        let mut split = 0;
        for i in 0..rows.len() {
            if x.get(rows[i], feature) < value {
                rows.swap(i, split);
                split += 1;
            }
        }
        let (l, r) = rows.split_at_mut(split);
        let left = self.grow(x, l, features, depth + 1, limit, rng);
        let right = self.grow(x, r, features, depth + 1, limit, rng);
        self.nodes[id] = Node::Split { feature, value, left, right };
        id
    }

    fn path_length(&self, point: &[f64]) -> f64 {
        let mut id = 0;
        let mut depth = 0.0;
        loop {
            match self.nodes[id] {
                Node::Split { feature, value, left, right } => {
                    id = if point[feature] < value { left } else { right };
                    depth += 1.0;
                }
                Node::Leaf { size } => return depth + average_path_length(size),
            }
        }
    }
}

/// Resolved forest dimensions for an `n × d` input.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ForestShape {
    pub trees: usize,
    pub sample_size: usize,
    pub features: usize,
}

impl ForestShape {
    pub fn resolve(n: usize, d: usize, n_estimators: usize, max_samples: f64, max_features: f64) -> Result<Self> {
        if !(max_samples > 0.0 && max_samples <= 1.0) || !(max_features > 0.0 && max_features <= 1.0) {
            return Err(Error::invalid("isolation-forest fractions must lie in (0, 1]"));
        }
        let sample_size = (max_samples * n as f64).ceil() as usize;
        let features = (max_features * d as f64).ceil() as usize;
        if sample_size == 0 || features == 0 || n_estimators == 0 {
            return Err(Error::invalid("isolation forest would be empty"));
        }
        // a one-row sample has c(1) = 0 and cannot normalize path lengths
        Ok(Self { trees: n_estimators, sample_size: sample_size.clamp(2.min(n), n), features: features.min(d) })
    }
}

/// Anomaly scores `2^(−E[h(x)] / c(ψ))` for every row of `x`.
pub fn iforest_scores(
    x: &Matrix,
    n_estimators: usize,
    max_samples: f64,
    max_features: f64,
    seed: u64,
) -> Result<Vec<f64>> {
    let (n, d) = (x.rows(), x.cols());
    if n < 2 || d == 0 {
        return Err(Error::invalid("isolation forest needs at least 2 rows and 1 column"));
    }
    let shape = ForestShape::resolve(n, d, n_estimators, max_samples, max_features)?;
    let limit = (shape.sample_size as f64).log2().ceil() as usize;
    let norm = average_path_length(shape.sample_size);
    let mut total = alloc::vec![0.0; n];
    for t in 0..shape.trees {
        let mut rng = rng::rng(rng::derive(seed, t as u64));
        let mut rows = index::sample(&mut rng, n, shape.sample_size).into_vec();
        let mut features = index::sample(&mut rng, d, shape.features).into_vec();
        features.sort_unstable();
        let tree = IsolationTree::build(x, &mut rows, &features, limit, &mut rng);
        for (i, acc) in total.iter_mut().enumerate() {
            *acc += tree.path_length(x.row(i));
        }
    }
    Ok(total
        .into_iter()
        .map(|h| libm::exp2(-(h / shape.trees as f64) / norm))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn path_length_constants() {
        assert!((path_length_formula(2.0) - 0.154_431_329_8).abs() < 1e-9);
        assert_eq!(average_path_length(1), 0.0);
        assert_eq!(average_path_length(2), 1.0);
        assert!(average_path_length(256) > average_path_length(16));
    }

    fn cluster_with_outlier(seed: u64) -> Matrix {
        let mut rng = rng::rng(seed);
        let mut rows: Vec<[f64; 2]> = (0..19).map(|_| [rng.gen_range(-0.5..0.5), rng.gen_range(-0.5..0.5)]).collect();
        rows.push([8.0, -7.0]);
        Matrix::from_rows(&rows).unwrap()
    }

    #[test]
    fn extreme_point_scores_highest() {
        let x = cluster_with_outlier(3);
        for seed in 0..10 {
            let s = iforest_scores(&x, 100, 1.0, 1.0, seed).unwrap();
            let top = (0..20).max_by(|&a, &b| s[a].total_cmp(&s[b])).unwrap();
            assert_eq!(top, 19);
            assert!(s.iter().all(|&v| v > 0.0 && v < 1.0));
        }
    }

    #[test]
    fn deterministic_per_seed() {
        let x = cluster_with_outlier(5);
        assert_eq!(iforest_scores(&x, 20, 0.5, 0.5, 9).unwrap(), iforest_scores(&x, 20, 0.5, 0.5, 9).unwrap());
        assert_ne!(iforest_scores(&x, 20, 0.5, 0.5, 9).unwrap(), iforest_scores(&x, 20, 0.5, 0.5, 10).unwrap());
    }

    #[test]
    fn rejects_bad_fractions() {
        let x = cluster_with_outlier(1);
        assert!(iforest_scores(&x, 10, 0.0, 0.5, 0).is_err());
        assert!(iforest_scores(&x, 10, 0.5, 1.5, 0).is_err());
    }

    #[test]
    fn constant_data_scores_are_equal() {
        let x = Matrix::from_rows(&[[1.0, 2.0]; 6]).unwrap();
        let s = iforest_scores(&x, 10, 1.0, 1.0, 0).unwrap();
        assert!(s.iter().all(|&v| v == s[0] && v < 1.0));
    }
}
