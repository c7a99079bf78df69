//! Outlier detectors and the pluggable scoring interface.

pub mod iforest;
pub mod lof;

use alloc::format;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use serde::{Deserialize, Serialize};

pub use iforest::iforest_scores;
pub use lof::{lof_scores, Metric, NeighborTable};

use crate::error::{Error, Result};
use crate::hpspace::{DomainHull, HpSetting, HpSpace, HpValue};
use crate::matrix::Matrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Algorithm {
    Lof,
    #[serde(rename = "iforest")]
    IForest,
}

impl Algorithm {
    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Lof => "lof",
            Algorithm::IForest => "iforest",
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "lof" => Ok(Algorithm::Lof),
            "iforest" | "isolation_forest" => Ok(Algorithm::IForest),
            _ => Err(Error::UnknownAlgorithm(s.into())),
        }
    }
}

/// Score vector of one detector run; higher means more outlying.
#[derive(Debug, Clone, PartialEq)]
pub struct OutlierScores {
    pub values: Vec<f64>,
    pub algorithm: Algorithm,
    pub setting: HpSetting,
}

/// A detector family together with its hyperparameter space.
#[derive(Debug, Clone, PartialEq)]
pub struct DetectorSpec {
    pub algorithm: Algorithm,
    pub space: HpSpace,
}

impl DetectorSpec {
    pub fn new(space: HpSpace) -> Self {
        Self { algorithm: space.algorithm, space }
    }

    pub fn for_algorithm(algorithm: Algorithm) -> Self {
        Self::new(HpSpace::for_algorithm(algorithm))
    }

    /// Default setting for a dataset with `n_rows` rows.
    ///
    /// Values come from the manifest `default` entries and are clamped into
    /// the grid hull. An isolation-forest `max_samples` without a manifest
    /// default resolves to `min(256/n, 1)`.
    pub fn default_setting(&self, n_rows: usize) -> Result<HpSetting> {
        let hull = self.space.hull();
        let mut values = Vec::with_capacity(self.space.domains.len());
        for (d, h) in self.space.domains.iter().zip(&hull.0) {
            let raw = match (&d.default, self.algorithm, d.name.as_str()) {
                (Some(v), _, _) => v.clone(),
                (None, Algorithm::IForest, "max_samples") => {
                    HpValue::Real((256.0 / n_rows.max(1) as f64).min(1.0))
                }
                _ => d.grid[0].clone(),
            };
            values.push(match (raw, h) {
                (HpValue::Int(v), DomainHull::Numeric { min, max }) => {
                    HpValue::Int(v.clamp(*min as i64, *max as i64))
                }
                (HpValue::Real(v), DomainHull::Numeric { min, max }) => HpValue::Real(v.clamp(*min, *max)),
                (other, _) => other,
            });
        }
        let s = HpSetting::new(values);
        self.space.check(&s)?;
        Ok(s)
    }
}

/// Default setting for a named algorithm using the shipped spaces.
pub fn default_setting(algorithm: &str, n_rows: usize) -> Result<HpSetting> {
    DetectorSpec::for_algorithm(algorithm.parse()?).default_setting(n_rows)
}

/// Runs detectors on one (standardized) matrix, caching LOF neighbor tables
/// per metric so that sweeping many settings costs one distance pass each.
#[derive(Debug, Clone)]
pub struct ScoringSession {
    x: Matrix,
    space: HpSpace,
    tables: Vec<NeighborTable>,
}

impl ScoringSession {
    pub fn new(x: Matrix, space: HpSpace) -> Result<Self> {
        if x.rows() < 2 || x.cols() == 0 {
            return Err(Error::invalid("detector input needs at least 2 rows and 1 column"));
        }
        Ok(Self { x, space, tables: Vec::new() })
    }

    pub fn matrix(&self) -> &Matrix {
        &self.x
    }

    pub fn space(&self) -> &HpSpace {
        &self.space
    }

    fn value<'a>(&self, s: &'a HpSetting, name: &str) -> Result<&'a HpValue> {
        let i = self
            .space
            .index_of(name)
            .ok_or_else(|| Error::invalid(format!("space has no `{name}` domain")))?;
        Ok(s.get(i))
    }

    fn int(&self, s: &HpSetting, name: &str) -> Result<i64> {
        match self.value(s, name)? {
            HpValue::Int(v) => Ok(*v),
            HpValue::Real(v) => Ok(libm::round(*v) as i64),
            HpValue::Cat(_) => Err(Error::invalid(format!("`{name}` must be numeric"))),
        }
    }

    fn real(&self, s: &HpSetting, name: &str) -> Result<f64> {
        self.value(s, name)?
            .as_f64()
            .ok_or_else(|| Error::invalid(format!("`{name}` must be numeric")))
    }

    fn lof_table(&mut self, metric: Metric, k: usize) -> &NeighborTable {
        let pos = self.tables.iter().position(|t| t.metric() == metric);
        match pos {
            Some(i) if self.tables[i].depth() >= k => &self.tables[i],
            Some(i) => {
                // grow to at least the largest grid neighborhood to avoid rebuilds
                let depth = k.max(self.tables[i].depth() * 2);
                self.tables[i] = NeighborTable::build(&self.x, metric, depth);
                &self.tables[i]
            }
            None => {
                let depth = k.max(self.max_grid_k());
                self.tables.push(NeighborTable::build(&self.x, metric, depth));
                self.tables.last().unwrap()
            }
        }
    }

    fn max_grid_k(&self) -> usize {
        let hull = self.space.hull();
        match self.space.index_of("n_neighbors").map(|i| &hull.0[i]) {
            Some(DomainHull::Numeric { max, .. }) => *max as usize,
            _ => 1,
        }
    }

    pub fn algorithm(&self) -> Algorithm {
        self.space.algorithm
    }

    /// Scores `setting`; `seed` only affects randomized detectors.
    pub fn score(&mut self, setting: &HpSetting, seed: u64) -> Result<OutlierScores> {
        Error::check_len(self.space.domains.len(), setting.values.len())?;
        let values = match self.space.algorithm {
            Algorithm::Lof => {
                let k = self.int(setting, "n_neighbors")?;
                if k < 1 {
                    return Err(Error::Detector("n_neighbors must be >= 1".into()));
                }
                let metric: Metric = match self.value(setting, "metric")? {
                    HpValue::Cat(m) => m.parse()?,
                    _ => return Err(Error::invalid("`metric` must be categorical")),
                };
                let k = lof::effective_k(k as usize, self.x.rows());
                self.lof_table(metric, k).lof(k)
            }
            Algorithm::IForest => {
                let trees = self.int(setting, "n_estimators")?;
                if trees < 1 {
                    return Err(Error::Detector("n_estimators must be >= 1".into()));
                }
                let ms = self.real(setting, "max_samples")?;
                let mf = self.real(setting, "max_features")?;
                iforest_scores(&self.x, trees as usize, ms, mf, seed)?
            }
        };
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Detector(format!("non-finite scores for {setting}")));
        }
        Ok(OutlierScores { values, algorithm: self.space.algorithm, setting: setting.clone() })
    }
}

/// Name → value pairs of a setting, for display and serialization.
pub fn named_values<'a>(space: &'a HpSpace, s: &'a HpSetting) -> Vec<(&'a str, &'a HpValue)> {
    space.domains.iter().map(|d| d.name.as_str()).zip(&s.values).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn defaults() {
        let lof = default_setting("lof", 500).unwrap();
        assert_eq!(lof.values, vec![HpValue::Int(20), HpValue::Cat("minkowski".into())]);
        let ifo = default_setting("iforest", 1000).unwrap();
        assert_eq!(ifo.values[0], HpValue::Int(100));
        assert_eq!(ifo.values[1], HpValue::Real(0.256));
        assert_eq!(ifo.values[2], HpValue::Real(0.8));
        // small n: 256/n > 1 clamps to 1 then to the hull max 0.9
        assert_eq!(default_setting("iforest", 100).unwrap().values[1], HpValue::Real(0.9));
        assert!(matches!(default_setting("rae", 10), Err(Error::UnknownAlgorithm(_))));
    }

    #[test]
    fn session_matches_direct_lof() {
        let x = Matrix::from_rows(&[[0.0, 1.0], [1.0, 0.5], [2.0, 2.0], [0.3, 0.1], [5.0, 5.0], [1.5, 0.2]]).unwrap();
        let mut sess = ScoringSession::new(x.clone(), HpSpace::lof()).unwrap();
        for k in [1, 3, 5] {
            for m in Metric::ALL {
                let s = HpSetting::new(vec![HpValue::Int(k), HpValue::Cat(m.name().into())]);
                assert_eq!(sess.score(&s, 0).unwrap().values, lof_scores(&x, k as usize, m).unwrap());
            }
        }
    }
}
