//! Datasets, the labeled meta-train corpus, and feature standardization.
//!
//! CSV ingestion lives in the `hpod` crate; this module only holds the
//! in-memory types and their invariants.

use alloc::collections::BTreeSet;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::Matrix;

/// A tabular outlier-detection dataset. Labels use 1 for outliers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    pub name: String,
    pub x: Matrix,
    pub y: Option<Vec<u8>>,
    pub source: String,
}

impl Dataset {
    pub fn new(name: impl Into<String>, x: Matrix, y: Option<Vec<u8>>) -> Result<Self> {
        let ds = Self { name: name.into(), x, y, source: String::new() };
        ds.validate()?;
        Ok(ds)
    }

    pub fn with_source(mut self, source: impl Into<String>) -> Self {
        self.source = source.into();
        self
    }

    pub fn n(&self) -> usize {
        self.x.rows()
    }

    pub fn d(&self) -> usize {
        self.x.cols()
    }

    pub fn validate(&self) -> Result<()> {
        if self.x.rows() < 2 || self.x.cols() < 1 {
            return Err(Error::invalid(format!(
                "dataset `{}` needs n >= 2 and d >= 1 (got {}x{})",
                self.name,
                self.x.rows(),
                self.x.cols()
            )));
        }
        if !self.x.is_finite() {
            return Err(Error::invalid(format!("dataset `{}` has non-finite features", self.name)));
        }
        if let Some(y) = &self.y {
            Error::check_len(self.x.rows(), y.len())?;
            if y.iter().any(|&v| v > 1) {
                return Err(Error::invalid("labels must be 0 or 1"));
            }
        }
        Ok(())
    }

    /// True when labels exist and both classes are present.
    pub fn has_both_classes(&self) -> bool {
        self.y
            .as_ref()
            .is_some_and(|y| y.iter().any(|&v| v == 1) && y.iter().any(|&v| v == 0))
    }

    pub fn outlier_rate(&self) -> Option<f64> {
        self.y
            .as_ref()
            .map(|y| y.iter().filter(|&&v| v == 1).count() as f64 / y.len() as f64)
    }
}

/// Ordered collection of labeled datasets with unique names.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Corpus {
    datasets: Vec<Dataset>,
}

impl Corpus {
    pub fn new(datasets: Vec<Dataset>) -> Result<Self> {
        let mut names = BTreeSet::new();
        for ds in &datasets {
            if !names.insert(ds.name.as_str()) {
                return Err(Error::invalid(format!("duplicate dataset name `{}`", ds.name)));
            }
            if ds.y.is_none() {
                return Err(Error::invalid(format!("corpus dataset `{}` is unlabeled", ds.name)));
            }
        }
        Ok(Self { datasets })
    }

    pub fn datasets(&self) -> &[Dataset] {
        &self.datasets
    }

    pub fn len(&self) -> usize {
        self.datasets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.datasets.is_empty()
    }

    /// Corpus without the dataset at `held_out`.
    pub fn without(&self, held_out: usize) -> Corpus {
        let datasets = self
            .datasets
            .iter()
            .enumerate()
            .filter(|(i, _)| *i != held_out)
            .map(|(_, d)| d.clone())
            .collect();
        Corpus { datasets }
    }
}

/// Column-wise z-scoring with population std; zero-variance columns become 0.
pub fn standardize_matrix(x: &Matrix) -> Matrix {
    let (n, d) = (x.rows(), x.cols());
    let mut out = Matrix::zeros(n, d);
    for c in 0..d {
        let col = x.column(c);
        let m = crate::stats::mean(&col);
        let sd = crate::stats::std_dev(&col);
        // relative threshold so float noise on a constant column still counts as constant
        let constant = sd <= 1e-12 * m.abs().max(1.0);
        for (r, v) in col.iter().enumerate() {
            out.set(r, c, if constant { 0.0 } else { (v - m) / sd });
        }
    }
    out
}

pub fn standardize(ds: &Dataset) -> Dataset {
    Dataset { x: standardize_matrix(&ds.x), ..ds.clone() }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn ds(rows: &[&[f64]]) -> Dataset {
        Dataset::new("t", Matrix::from_rows(rows).unwrap(), None).unwrap()
    }

    #[test]
    fn standardize_column() {
        let s = standardize(&ds(&[&[1.0, 5.0], &[2.0, 5.0], &[3.0, 5.0]]));
        let expect = [-1.224_744_871_391_589, 0.0, 1.224_744_871_391_589];
        for r in 0..3 {
            assert!((s.x.get(r, 0) - expect[r]).abs() < 1e-9);
            assert_eq!(s.x.get(r, 1), 0.0);
        }
    }

    #[test]
    fn standardize_is_idempotent() {
        let s1 = standardize(&ds(&[&[1.0, 0.3], &[7.0, -2.0], &[2.5, 9.0], &[4.0, 1.0]]));
        let s2 = standardize(&s1);
        for (a, b) in s1.x.as_slice().iter().zip(s2.x.as_slice()) {
            assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn rejects_tiny_or_bad_labels() {
        assert!(Dataset::new("a", Matrix::from_rows(&[[1.0]]).unwrap(), None).is_err());
        let x = Matrix::from_rows(&[[1.0], [2.0]]).unwrap();
        assert!(Dataset::new("a", x.clone(), Some(vec![0, 2])).is_err());
        assert!(Dataset::new("a", x, Some(vec![0, 1])).unwrap().has_both_classes());
    }

    #[test]
    fn corpus_requires_unique_labeled() {
        let x = Matrix::from_rows(&[[1.0], [2.0]]).unwrap();
        let a = Dataset::new("a", x.clone(), Some(vec![0, 1])).unwrap();
        assert!(Corpus::new(vec![a.clone(), a.clone()]).is_err());
        let u = Dataset::new("u", x, None).unwrap();
        assert!(Corpus::new(vec![a, u]).is_err());
    }
}
