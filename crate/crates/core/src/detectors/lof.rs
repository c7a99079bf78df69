//! Exact local outlier factor.
//!
//! Neighborhoods include every point tied with the k-th nearest distance.
//! Coincident points would give an infinite local reachability density; mean
//! reach distances are floored at `MIN_REACH` times the largest k-distance, so
//! duplicate clusters compare as equal (ratio 1), scores stay finite, and the
//! floor scales with the data.

use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use num_traits::Float;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::Matrix;

const MIN_REACH: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Metric {
    Euclidean,
    Manhattan,
    Chebyshev,
    /// Minkowski with p = 2.
    Minkowski,
    Cosine,
}

impl Metric {
    pub const ALL: [Metric; 5] =
        [Metric::Chebyshev, Metric::Minkowski, Metric::Cosine, Metric::Euclidean, Metric::Manhattan];

    pub fn name(self) -> &'static str {
        match self {
            Metric::Euclidean => "euclidean",
            Metric::Manhattan => "manhattan",
            Metric::Chebyshev => "chebyshev",
            Metric::Minkowski => "minkowski",
            Metric::Cosine => "cosine",
        }
    }

    pub fn distance(self, a: &[f64], b: &[f64]) -> f64 {
        match self {
            Metric::Euclidean => a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt(),
            Metric::Minkowski => {
                let p = 2.0;
                a.iter().zip(b).map(|(x, y)| (x - y).abs().powf(p)).sum::<f64>().powf(1.0 / p)
            }
            Metric::Manhattan => a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum(),
            Metric::Chebyshev => a.iter().zip(b).fold(0.0, |m, (x, y)| m.max((x - y).abs())),
            Metric::Cosine => {
                let (mut ab, mut aa, mut bb) = (0.0, 0.0, 0.0);
                for (x, y) in a.iter().zip(b) {
                    ab += x * y;
                    aa += x * x;
                    bb += y * y;
                }
                if aa == 0.0 || bb == 0.0 {
                    1.0
                } else {
                    (1.0 - ab / (aa.sqrt() * bb.sqrt())).max(0.0)
                }
            }
        }
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Metric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Metric::ALL
            .iter()
            .copied()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::invalid(alloc::format!("unknown metric `{s}`")))
    }
}

/// Sorted neighbor lists for every point, truncated after `depth` neighbors
/// plus any ties with the `depth`-th distance.
#[derive(Debug, Clone)]
pub struct NeighborTable {
    metric: Metric,
    depth: usize,
    rows: Vec<Vec<(f64, u32)>>,
}

impl NeighborTable {
    pub fn build(x: &Matrix, metric: Metric, depth: usize) -> Self {
        let n = x.rows();
        let depth = depth.clamp(1, n.saturating_sub(1).max(1));
        let mut rows = Vec::with_capacity(n);
        let mut buf: Vec<(f64, u32)> = Vec::with_capacity(n);
        for i in 0..n {
            buf.clear();
            let xi = x.row(i);
            for j in 0..n {
                if j != i {
                    buf.push((metric.distance(xi, x.row(j)), j as u32));
                }
            }
            buf.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
            let mut keep = depth.min(buf.len());
            if keep > 0 {
                let kd = buf[keep - 1].0;
                while keep < buf.len() && buf[keep].0 == kd {
                    keep += 1;
                }
            }
            rows.push(buf[..keep].to_vec());
        }
        Self { metric, depth, rows }
    }

    pub fn metric(&self) -> Metric {
        self.metric
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    /// k-distance and neighborhood size of point `i`.
    fn k_neighborhood(&self, i: usize, k: usize) -> (f64, usize) {
        let row = &self.rows[i];
        let kd = row[k - 1].0;
        let mut size = k;
        while size < row.len() && row[size].0 == kd {
            size += 1;
        }
        (kd, size)
    }

    /// LOF scores for neighborhood size `k` (`1 <= k <= depth`).
    pub fn lof(&self, k: usize) -> Vec<f64> {
        let n = self.rows.len();
        debug_assert!(k >= 1 && k <= self.depth);
        let hood: Vec<(f64, usize)> = (0..n).map(|i| self.k_neighborhood(i, k)).collect();
        let span = hood.iter().fold(0.0f64, |m, h| m.max(h.0));
        let floor = if span > 0.0 { MIN_REACH * span } else { 1.0 };
        let lrd: Vec<f64> = (0..n)
            .map(|i| {
                let size = hood[i].1;
                let reach: f64 = self.rows[i][..size]
                    .iter()
                    .map(|&(d, j)| d.max(hood[j as usize].0))
                    .sum();
                1.0 / (reach / size as f64).max(floor)
            })
            .collect();
        (0..n)
            .map(|i| {
                let size = hood[i].1;
                let s: f64 = self.rows[i][..size].iter().map(|&(_, j)| lrd[j as usize] / lrd[i]).sum();
                s / size as f64
            })
            .collect()
    }
}

/// Neighborhood size actually used for `n` points.
pub fn effective_k(n_neighbors: usize, n: usize) -> usize {
    let k = n_neighbors.max(1);
    if k >= n {
        log::warn!("n_neighbors={k} >= n={n}; clamping to {}", n - 1);
        n - 1
    } else {
        k
    }
}

/// LOF scores of every row of `x` (higher is more outlying).
pub fn lof_scores(x: &Matrix, n_neighbors: usize, metric: Metric) -> Result<Vec<f64>> {
    if x.rows() < 2 || x.cols() == 0 {
        return Err(Error::invalid("LOF needs at least 2 rows and 1 column"));
    }
    let k = effective_k(n_neighbors, x.rows());
    Ok(NeighborTable::build(x, metric, k).lof(k))
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn m(rows: &[&[f64]]) -> Matrix {
        Matrix::from_rows(rows).unwrap()
    }

    #[test]
    fn identical_points_score_one() {
        let x = m(&[&[2.0, 1.0], &[2.0, 1.0], &[2.0, 1.0], &[2.0, 1.0]]);
        for metric in Metric::ALL {
            assert_eq!(lof_scores(&x, 2, metric).unwrap(), vec![1.0; 4]);
        }
    }

    #[test]
    fn duplicates_keep_scale_invariance() {
        let x = m(&[&[0.0], &[0.0], &[1.0], &[3.0], &[7.0]]);
        let y = m(&[&[0.0], &[0.0], &[10.0], &[30.0], &[70.0]]);
        let (a, b) = (lof_scores(&x, 1, Metric::Chebyshev).unwrap(), lof_scores(&y, 1, Metric::Chebyshev).unwrap());
        assert!(a.iter().all(|v| v.is_finite()));
        assert!(a.iter().zip(&b).all(|(p, q)| (p - q).abs() <= 1e-9 * p.abs().max(1.0)));
    }

    #[test]
    fn planted_point_in_1d() {
        let x = m(&[&[0.0], &[1.0], &[2.0], &[3.0], &[100.0]]);
        let s = lof_scores(&x, 2, Metric::Euclidean).unwrap();
        // hand evaluation: kdist = [2,1,1,2,98]; lrd = [2/3, 2/3, 2/3, 2/3, 1/97.5];
        // LOF(100) = (lrd(3)+lrd(2))/2 / lrd(100) = (2/3)·97.5 = 65, inliers exactly 1
        assert!((s[4] - 65.0).abs() < 1e-9);
        assert!(s[..4].iter().all(|v| (v - 1.0).abs() < 1e-12));
        assert!(s[..4].iter().all(|&v| v < s[4]));
    }

    #[test]
    fn square_is_symmetric() {
        let x = m(&[&[0.0, 0.0], &[1.0, 0.0], &[0.0, 1.0], &[1.0, 1.0]]);
        let s = lof_scores(&x, 2, Metric::Euclidean).unwrap();
        assert!(s.iter().all(|v| (v - s[0]).abs() < 1e-12));
    }

    #[test]
    fn ties_at_k_distance_are_included() {
        // point 0 has two neighbors at distance 1; k = 1 must include both
        let x = m(&[&[0.0], &[1.0], &[-1.0], &[5.0]]);
        let t = NeighborTable::build(&x, Metric::Euclidean, 1);
        assert_eq!(t.k_neighborhood(0, 1), (1.0, 2));
    }

    #[test]
    fn k_is_clamped() {
        let x = m(&[&[0.0], &[1.0], &[3.0]]);
        assert_eq!(lof_scores(&x, 50, Metric::Manhattan).unwrap(), lof_scores(&x, 2, Metric::Manhattan).unwrap());
    }

    #[test]
    fn cosine_zero_vector() {
        assert_eq!(Metric::Cosine.distance(&[0.0, 0.0], &[1.0, 2.0]), 1.0);
        assert_eq!(Metric::Cosine.distance(&[0.0, 0.0], &[0.0, 0.0]), 1.0);
        assert!(Metric::Cosine.distance(&[1.0, 1.0], &[2.0, 2.0]).abs() < 1e-12);
    }

    #[test]
    fn empty_matrix_errors() {
        assert!(lof_scores(&Matrix::zeros(0, 2), 3, Metric::Euclidean).is_err());
    }
}
