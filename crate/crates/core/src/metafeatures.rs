//! Fixed-length dataset descriptors and the distance used to compare them.
//!
//! Layout (31 values):
//!
//! | index  | feature                                                            |
//! |--------|--------------------------------------------------------------------|
//! | 0–2    | `log10(n)`, `log10(d)`, `d/n`                                      |
//! | 3–18   | per-column {mean, std, skewness, excess kurtosis}, each aggregated |
//! |        | over columns as {mean, std, min, max}                              |
//! | 19–20  | {mean, max} of \|Pearson\| over up to 50 sampled column pairs     |
//! | 21–22  | {mean, max} over columns of the fraction of cells outside 1.5·IQR  |
//! | 23–25  | top-3 PCA explained-variance ratios of the standardized data       |
//! | 26–30  | isolation-forest landmarker: {mean, std, skewness, p90/median,     |
//! |        | max/median} of scores (50 trees, 50% rows, all features)           |
//!
//! Rows are put into a canonical order before anything is computed, which
//! makes the vector exactly invariant to row permutations.

use alloc::string::String;
use alloc::vec::Vec;

use num_traits::Float;
use rand::seq::index;
use serde::{Deserialize, Serialize};

use crate::data::standardize_matrix;
use crate::detectors::iforest_scores;
use crate::error::{Error, Result};
use crate::matrix::{symmetric_eigenvalues, Matrix};
use crate::rng;
use crate::stats::{self, finite_or_zero};

pub const SCHEMA_VERSION: &str = "mf-v1";
pub const MF_LEN: usize = 31;

const MAX_PAIRS: usize = 50;
const LANDMARK_STREAM: u64 = 0x4c41_4e44;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetaFeatureVector {
    pub values: Vec<f64>,
    pub schema: String,
}

impl MetaFeatureVector {
    pub fn as_slice(&self) -> &[f64] {
        &self.values
    }
}

fn aggregate4(v: &[f64]) -> [f64; 4] {
    let min = v.iter().copied().fold(f64::INFINITY, f64::min);
    let max = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    [stats::mean(v), stats::std_dev(v), min, max]
}

fn canonical_rows(x: &Matrix) -> Matrix {
    let mut idx: Vec<usize> = (0..x.rows()).collect();
    idx.sort_by(|&a, &b| {
        x.row(a)
            .iter()
            .zip(x.row(b))
            .map(|(p, q)| p.total_cmp(q))
            .find(|o| o.is_ne())
            .unwrap_or(core::cmp::Ordering::Equal)
    });
    x.select_rows(&idx)
}

fn column_pairs(d: usize, seed: u64) -> Vec<(usize, usize)> {
    let all: Vec<(usize, usize)> = (0..d).flat_map(|i| (i + 1..d).map(move |j| (i, j))).collect();
    if all.len() <= MAX_PAIRS {
        return all;
    }
    let mut rng = rng::rng(seed);
    let mut picked = index::sample(&mut rng, all.len(), MAX_PAIRS).into_vec();
    picked.sort_unstable();
    picked.into_iter().map(|i| all[i]).collect()
}

fn iqr_outlier_fraction(col: &[f64]) -> f64 {
    let s = stats::sorted(col);
    let q1 = stats::quantile_sorted(&s, 0.25);
    let q3 = stats::quantile_sorted(&s, 0.75);
    let r = q3 - q1;
    let (lo, hi) = (q1 - 1.5 * r, q3 + 1.5 * r);
    col.iter().filter(|&&v| v < lo || v > hi).count() as f64 / col.len() as f64
}

fn pca_ratios(z: &Matrix) -> [f64; 3] {
    let (n, d) = (z.rows(), z.cols());
    let mut cov = alloc::vec![0.0; d * d];
    for r in z.iter_rows() {
        for i in 0..d {
            if r[i] == 0.0 {
                continue;
            }
            for j in i..d {
                cov[i * d + j] += r[i] * r[j];
            }
        }
    }
    for i in 0..d {
        for j in i..d {
            let v = cov[i * d + j] / n as f64;
            cov[i * d + j] = v;
            cov[j * d + i] = v;
        }
    }
    let mut out = [0.0; 3];
    if let Ok(ev) = symmetric_eigenvalues(&cov, d) {
        let total: f64 = ev.iter().map(|v| v.max(0.0)).sum();
        for (o, v) in out.iter_mut().zip(&ev) {
            *o = finite_or_zero(v.max(0.0) / total);
        }
    }
    out
}

fn landmarker(x: &Matrix, seed: u64) -> [f64; 5] {
    let Ok(scores) = iforest_scores(x, 50, 0.5, 1.0, rng::derive(seed, LANDMARK_STREAM)) else {
        return [0.0; 5];
    };
    let s = stats::sorted(&scores);
    let med = stats::quantile_sorted(&s, 0.5);
    let p90 = stats::quantile_sorted(&s, 0.9);
    let max = *s.last().unwrap_or(&0.0);
    [stats::mean(&s), stats::std_dev(&s), stats::skewness(&s), p90 / med, max / med].map(finite_or_zero)
}

/// Computes the 31-value descriptor of a raw (unstandardized) matrix.
pub fn extract(x: &Matrix, seed: u64) -> Result<MetaFeatureVector> {
    let (n, d) = (x.rows(), x.cols());
    if n < 2 || d < 1 {
        return Err(Error::invalid("meta-features need n >= 2 and d >= 1"));
    }
    let x = canonical_rows(x);
    let mut v = Vec::with_capacity(MF_LEN);
    v.extend([(n as f64).log10(), (d as f64).log10(), d as f64 / n as f64]);

    let cols: Vec<Vec<f64>> = (0..d).map(|c| x.column(c)).collect();
    let per_col: [Vec<f64>; 4] = [
        cols.iter().map(|c| stats::mean(c)).collect(),
        cols.iter().map(|c| stats::std_dev(c)).collect(),
        cols.iter().map(|c| stats::skewness(c)).collect(),
        cols.iter().map(|c| stats::excess_kurtosis(c)).collect(),
    ];
    for stat in &per_col {
        v.extend(aggregate4(stat));
    }

    let corr: Vec<f64> = column_pairs(d, seed)
        .into_iter()
        .map(|(i, j)| stats::pearson(&cols[i], &cols[j]).abs())
        .collect();
    let corr_max = corr.iter().copied().fold(0.0, f64::max);
    v.extend([stats::mean(&corr), corr_max]);

    let frac: Vec<f64> = cols.iter().map(|c| iqr_outlier_fraction(c)).collect();
    v.extend([stats::mean(&frac), frac.iter().copied().fold(0.0, f64::max)]);

    v.extend(pca_ratios(&standardize_matrix(&x)));
    v.extend(landmarker(&x, seed));

    debug_assert_eq!(v.len(), MF_LEN);
    Ok(MetaFeatureVector { values: v.into_iter().map(finite_or_zero).collect(), schema: SCHEMA_VERSION.into() })
}

/// Per-dimension spread of the meta-train meta-features.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MfScaler {
    pub std: Vec<f64>,
    pub schema: String,
}

impl MfScaler {
    pub fn fit(rows: &[MetaFeatureVector]) -> Result<Self> {
        let first = rows.first().ok_or_else(|| Error::invalid("no meta-feature rows"))?;
        let len = first.values.len();
        for r in rows {
            check_schema(&first.schema, &r.schema)?;
            Error::check_len(len, r.values.len())?;
        }
        let std = (0..len)
            .map(|k| {
                let col: Vec<f64> = rows.iter().map(|r| r.values[k]).collect();
                stats::std_dev(&col)
            })
            .collect();
        Ok(Self { std, schema: first.schema.clone() })
    }
}

fn check_schema(expected: &str, actual: &str) -> Result<()> {
    if expected == actual {
        Ok(())
    } else {
        Err(Error::SchemaMismatch { expected: expected.into(), actual: actual.into() })
    }
}

/// Euclidean distance after dimension-wise scaling; zero-spread dimensions are skipped.
pub fn mf_distance(a: &MetaFeatureVector, b: &MetaFeatureVector, scaler: &MfScaler) -> Result<f64> {
    check_schema(&scaler.schema, &a.schema)?;
    check_schema(&scaler.schema, &b.schema)?;
    Error::check_len(scaler.std.len(), a.values.len())?;
    Error::check_len(scaler.std.len(), b.values.len())?;
    let s: f64 = a
        .values
        .iter()
        .zip(&b.values)
        .zip(&scaler.std)
        .filter(|(_, &sd)| sd > 0.0)
        .map(|((x, y), sd)| ((x - y) / sd).powi(2))
        .sum();
    Ok(s.sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn mfv(v: &[f64]) -> MetaFeatureVector {
        MetaFeatureVector { values: v.to_vec(), schema: SCHEMA_VERSION.into() }
    }

    #[test]
    fn constant_matrix() {
        let x = Matrix::from_rows(&vec![[3.0, 3.0, 3.0]; 10]).unwrap();
        let v = extract(&x, 1).unwrap().values;
        assert_eq!(v.len(), MF_LEN);
        assert!((v[0] - 1.0).abs() < 1e-12);
        assert!((v[1] - 3f64.log10()).abs() < 1e-12);
        assert!((v[2] - 0.3).abs() < 1e-12);
        // std / skew / kurt aggregates, correlations, PCA are all zero
        assert!(v[7..21].iter().all(|&t| t == 0.0));
        assert!(v[23..26].iter().all(|&t| t == 0.0));
        assert!(v.iter().all(|t| t.is_finite()));
    }

    #[test]
    fn size_features_for_wine_shape() {
        let rows: Vec<Vec<f64>> = (0..129).map(|i| (0..13).map(|j| ((i * 7 + j * 3) % 11) as f64).collect()).collect();
        let v = extract(&Matrix::from_rows(&rows).unwrap(), 0).unwrap().values;
        assert!((v[0] - 2.1106).abs() < 1e-4);
        assert!((v[1] - 1.1139).abs() < 1e-4);
        assert!((v[2] - 0.1008).abs() < 1e-4);
    }

    #[test]
    fn pca_ratios_sum_to_at_most_one() {
        let rows: Vec<[f64; 4]> = (0..40).map(|i| {
            let t = i as f64;
            [t, 2.0 * t + (t * 0.7).sin(), (t * 1.3).cos(), (t * 0.2).sin()]
        }).collect();
        let v = extract(&Matrix::from_rows(&rows).unwrap(), 3).unwrap().values;
        assert!(v[23] >= v[24] && v[24] >= v[25]);
        assert!(v[23] + v[24] + v[25] <= 1.0 + 1e-12);
        assert!(v[23] > 0.4);
    }

    #[test]
    fn distance_by_hand() {
        let a = mfv(&[0.0, 0.0, 5.0]);
        let b = mfv(&[3.0, 4.0, 5.0]);
        let c = mfv(&[0.0, 8.0, 5.0]);
        let scaler = MfScaler { std: vec![1.0, 2.0, 0.0], schema: SCHEMA_VERSION.into() };
        // (3/1)^2 + (4/2)^2 = 13; third dimension ignored
        assert!((mf_distance(&a, &b, &scaler).unwrap() - 13f64.sqrt()).abs() < 1e-12);
        assert!((mf_distance(&a, &c, &scaler).unwrap() - 4.0).abs() < 1e-12);
        assert!((mf_distance(&b, &c, &scaler).unwrap() - 13f64.sqrt()).abs() < 1e-12);
        assert_eq!(mf_distance(&a, &a, &scaler).unwrap(), 0.0);
    }

    #[test]
    fn distance_rejects_schema_mismatch() {
        let a = mfv(&[1.0]);
        let mut b = mfv(&[2.0]);
        b.schema = "other".into();
        let scaler = MfScaler::fit(&[a.clone(), mfv(&[3.0])]).unwrap();
        assert!(matches!(mf_distance(&a, &b, &scaler), Err(Error::SchemaMismatch { .. })));
    }

    #[test]
    fn scaled_dimension_leaves_distance_unchanged() {
        let rows = [mfv(&[1.0, 10.0]), mfv(&[2.0, 30.0]), mfv(&[4.0, 20.0])];
        let scaled: Vec<_> = rows.iter().map(|r| mfv(&[r.values[0], r.values[1] * 10.0])).collect();
        let s1 = MfScaler::fit(&rows).unwrap();
        let s2 = MfScaler::fit(&scaled).unwrap();
        let d1 = mf_distance(&rows[0], &rows[2], &s1).unwrap();
        let d2 = mf_distance(&scaled[0], &scaled[2], &s2).unwrap();
        assert!((d1 - d2).abs() < 1e-12);
    }
}
