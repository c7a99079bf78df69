//! Mixed categorical/integer/real hyperparameter spaces.
//!
//! A space carries, per domain, its abstract range and the discretized values
//! used for the meta grid. Numeric encodings are min-max scaled over the grid
//! hull rather than the abstract domain, so every encoded component of a
//! sampled setting lands in `[0, 1]`.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use num_traits::Float;
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::detectors::Algorithm;
use crate::error::{Error, Result};
use crate::rng;

/// A single hyperparameter value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum HpValue {
    Int(i64),
    Real(f64),
    Cat(String),
}

impl HpValue {
    pub fn as_f64(&self) -> Option<f64> {
        match self {
            HpValue::Int(v) => Some(*v as f64),
            HpValue::Real(v) => Some(*v),
            HpValue::Cat(_) => None,
        }
    }

    pub fn as_str(&self) -> Option<&str> {
        match self {
            HpValue::Cat(s) => Some(s),
            _ => None,
        }
    }
}

impl fmt::Display for HpValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            HpValue::Int(v) => write!(f, "{v}"),
            HpValue::Real(v) => write!(f, "{v}"),
            HpValue::Cat(s) => f.write_str(s),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum DomainKind {
    Categorical { choices: Vec<String> },
    Integer { lo: i64, hi: i64 },
    Real { lo: f64, hi: f64 },
}

/// One named hyperparameter with its domain and meta-grid values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HpDomain {
    pub name: String,
    #[serde(flatten)]
    pub kind: DomainKind,
    pub grid: Vec<HpValue>,
    /// Library-default value used by the Default baseline.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub default: Option<HpValue>,
}

impl HpDomain {
    pub fn categorical(name: &str, choices: &[&str]) -> Self {
        let choices: Vec<String> = choices.iter().map(|s| s.to_string()).collect();
        let grid = choices.iter().cloned().map(HpValue::Cat).collect();
        Self { name: name.into(), kind: DomainKind::Categorical { choices }, grid, default: None }
    }

    pub fn integer(name: &str, lo: i64, hi: i64, grid: &[i64]) -> Self {
        Self {
            name: name.into(),
            kind: DomainKind::Integer { lo, hi },
            grid: grid.iter().map(|&v| HpValue::Int(v)).collect(),
            default: None,
        }
    }

    pub fn real(name: &str, lo: f64, hi: f64, grid: &[f64]) -> Self {
        Self {
            name: name.into(),
            kind: DomainKind::Real { lo, hi },
            grid: grid.iter().map(|&v| HpValue::Real(v)).collect(),
            default: None,
        }
    }

    pub fn with_default(mut self, v: HpValue) -> Self {
        self.default = Some(v);
        self
    }

    pub fn validate(&self) -> Result<()> {
        match &self.kind {
            DomainKind::Categorical { choices } => {
                if choices.len() < 2 {
                    return Err(Error::invalid(format!("`{}` needs at least 2 choices", self.name)));
                }
            }
            DomainKind::Integer { lo, hi } if lo >= hi => {
                return Err(Error::invalid(format!("`{}` needs lo < hi", self.name)));
            }
            DomainKind::Real { lo, hi } if !(lo < hi) => {
                return Err(Error::invalid(format!("`{}` needs lo < hi", self.name)));
            }
            _ => {}
        }
        if self.grid.is_empty() {
            return Err(Error::invalid(format!("`{}` has an empty grid", self.name)));
        }
        self.grid.iter().try_for_each(|v| self.check(v))
    }

    /// Checks that `v` lies inside this domain.
    pub fn check(&self, v: &HpValue) -> Result<()> {
        let ok = match (&self.kind, v) {
            (DomainKind::Categorical { choices }, HpValue::Cat(s)) => choices.contains(s),
            (DomainKind::Integer { lo, hi }, HpValue::Int(x)) => lo <= x && x <= hi,
            (DomainKind::Real { lo, hi }, HpValue::Real(x)) => *lo <= *x && *x <= *hi,
            _ => false,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::OutOfDomain { domain: self.name.clone() })
        }
    }

    fn encoded_width(&self) -> usize {
        match &self.kind {
            DomainKind::Categorical { choices } => choices.len(),
            _ => 1,
        }
    }
}

/// Per-domain extent of the meta grid, used for sampling and encoding.
#[derive(Debug, Clone, PartialEq)]
pub enum DomainHull {
    Numeric { min: f64, max: f64 },
    Choices(Vec<String>),
}

/// Hull of the meta grid over all domains, in domain order.
#[derive(Debug, Clone, PartialEq)]
pub struct GridHull(pub Vec<DomainHull>);

/// Ordered list of domains for one detector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HpSpace {
    pub algorithm: Algorithm,
    pub domains: Vec<HpDomain>,
}

/// One concrete assignment, one value per domain in domain order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct HpSetting {
    pub values: Vec<HpValue>,
}

impl HpSetting {
    pub fn new(values: Vec<HpValue>) -> Self {
        Self { values }
    }

    pub fn get(&self, i: usize) -> &HpValue {
        &self.values[i]
    }
}

impl fmt::Display for HpSetting {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("(")?;
        for (i, v) in self.values.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{v}")?;
        }
        f.write_str(")")
    }
}

/// Fixed-length real vector representation of a setting.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct HpEncoding(pub Vec<f64>);

impl HpEncoding {
    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    /// Bit-exact key for set semantics over encodings.
    pub fn key(&self) -> Vec<u64> {
        self.0.iter().map(|v| v.to_bits()).collect()
    }
}

impl HpSpace {
    pub fn new(algorithm: Algorithm, domains: Vec<HpDomain>) -> Result<Self> {
        let space = Self { algorithm, domains };
        space.validate()?;
        Ok(space)
    }

    pub fn validate(&self) -> Result<()> {
        for (i, d) in self.domains.iter().enumerate() {
            d.validate()?;
            if self.domains[..i].iter().any(|o| o.name == d.name) {
                return Err(Error::invalid(format!("duplicate domain `{}`", d.name)));
            }
        }
        if self.domains.is_empty() {
            return Err(Error::invalid("space has no domains"));
        }
        Ok(())
    }

    /// LOF space: odd `n_neighbors` in 1..=79 crossed with five metrics (200 settings).
    pub fn lof() -> Self {
        let ks: Vec<i64> = (0..40).map(|i| 1 + 2 * i).collect();
        Self {
            algorithm: Algorithm::Lof,
            domains: vec![
                HpDomain::integer("n_neighbors", 1, 80, &ks).with_default(HpValue::Int(20)),
                HpDomain::categorical(
                    "metric",
                    &["chebyshev", "minkowski", "cosine", "euclidean", "manhattan"],
                )
                .with_default(HpValue::Cat("minkowski".into())),
            ],
        }
    }

    /// Isolation-forest space: 8 × 9 × 4 = 288 settings.
    pub fn iforest() -> Self {
        let samples: Vec<f64> = (1..=9).map(|i| i as f64 / 10.0).collect();
        Self {
            algorithm: Algorithm::IForest,
            domains: vec![
                HpDomain::integer("n_estimators", 1, 1000, &[10, 20, 30, 40, 50, 75, 100, 150])
                    .with_default(HpValue::Int(100)),
                HpDomain::real("max_samples", 0.01, 1.0, &samples),
                HpDomain::real("max_features", 0.01, 1.0, &[0.2, 0.4, 0.6, 0.8])
                    .with_default(HpValue::Real(1.0)),
            ],
        }
    }

    pub fn for_algorithm(algorithm: Algorithm) -> Self {
        match algorithm {
            Algorithm::Lof => Self::lof(),
            Algorithm::IForest => Self::iforest(),
        }
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.domains.iter().position(|d| d.name == name)
    }

    pub fn check(&self, s: &HpSetting) -> Result<()> {
        Error::check_len(self.domains.len(), s.values.len())?;
        self.domains.iter().zip(&s.values).try_for_each(|(d, v)| d.check(v))
    }

    /// Length of every encoding produced by [`encode`].
    pub fn encoding_len(&self) -> usize {
        self.domains.iter().map(HpDomain::encoded_width).sum()
    }

    /// Full meta grid built from the grids stored in the space.
    pub fn grid(&self) -> Result<Vec<HpSetting>> {
        let grids: Vec<Vec<HpValue>> = self.domains.iter().map(|d| d.grid.clone()).collect();
        meta_grid(self, &grids)
    }

    pub fn hull(&self) -> GridHull {
        GridHull(
            self.domains
                .iter()
                .map(|d| match &d.kind {
                    DomainKind::Categorical { .. } => DomainHull::Choices(
                        d.grid.iter().filter_map(|v| v.as_str().map(String::from)).collect(),
                    ),
                    _ => {
                        let vals = d.grid.iter().filter_map(HpValue::as_f64);
                        let (min, max) = vals.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| {
                            (a.min(v), b.max(v))
                        });
                        DomainHull::Numeric { min, max }
                    }
                })
                .collect(),
        )
    }

    /// Stable short identifier of the space contents (FNV-1a over the domain
    /// descriptions).
    pub fn fingerprint(&self) -> u64 {
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        let mut feed = |s: &str| {
            for b in s.bytes().chain(core::iter::once(0xff)) {
                h ^= b as u64;
                h = h.wrapping_mul(0x0000_0100_0000_01b3);
            }
        };
        feed(self.algorithm.name());
        for d in &self.domains {
            feed(&d.name);
            feed(&format!("{:?}", d.kind));
            for v in &d.grid {
                feed(&format!("{v:?}"));
            }
        }
        h
    }
}

/// Cross product of per-domain grids; the first domain varies slowest.
pub fn meta_grid(space: &HpSpace, per_domain_grids: &[Vec<HpValue>]) -> Result<Vec<HpSetting>> {
    Error::check_len(space.domains.len(), per_domain_grids.len())?;
    for (d, g) in space.domains.iter().zip(per_domain_grids) {
        if g.is_empty() {
            return Err(Error::invalid(format!("empty grid for `{}`", d.name)));
        }
        g.iter().try_for_each(|v| d.check(v))?;
    }
    let mut out: Vec<Vec<HpValue>> = vec![Vec::new()];
    for g in per_domain_grids {
        let mut next = Vec::with_capacity(out.len() * g.len());
        for prefix in &out {
            for v in g {
                let mut p = prefix.clone();
                p.push(v.clone());
                next.push(p);
            }
        }
        out = next;
    }
    Ok(out.into_iter().map(HpSetting::new).collect())
}

/// Draws `count` settings inside the grid hull.
///
/// Integers are drawn on the continuous hull interval and rounded to the
/// nearest integer; categorical values are drawn from the grid's choices.
pub fn sample(space: &HpSpace, hull: &GridHull, count: usize, seed: u64) -> Result<Vec<HpSetting>> {
    if count == 0 {
        return Err(Error::invalid("sample count must be >= 1"));
    }
    Error::check_len(space.domains.len(), hull.0.len())?;
    let mut rng = rng::rng(seed);
    let mut out = Vec::with_capacity(count);
    for _ in 0..count {
        let values = space
            .domains
            .iter()
            .zip(&hull.0)
            .map(|(d, h)| match (h, &d.kind) {
                (DomainHull::Choices(c), _) => HpValue::Cat(c[rng.gen_range(0..c.len())].clone()),
                (DomainHull::Numeric { min, max }, DomainKind::Integer { .. }) => {
                    let v = if max > min { rng.gen_range(*min..=*max) } else { *min };
                    HpValue::Int((v.round() as i64).clamp(min.ceil() as i64, max.floor() as i64))
                }
                (DomainHull::Numeric { min, max }, _) => {
                    HpValue::Real(if max > min { rng.gen_range(*min..=*max) } else { *min })
                }
            })
            .collect();
        out.push(HpSetting::new(values));
    }
    Ok(out)
}

/// One-hot for categoricals, hull min-max scaling (clamped to `[0,1]`) for numerics.
pub fn encode(s: &HpSetting, space: &HpSpace) -> HpEncoding {
    encode_with_hull(s, space, &space.hull())
}

pub fn encode_with_hull(s: &HpSetting, space: &HpSpace, hull: &GridHull) -> HpEncoding {
    let mut out = Vec::with_capacity(space.encoding_len());
    for ((d, v), h) in space.domains.iter().zip(&s.values).zip(&hull.0) {
        match (&d.kind, h) {
            (DomainKind::Categorical { choices }, _) => {
                let pos = v.as_str().and_then(|s| choices.iter().position(|c| c == s));
                out.extend((0..choices.len()).map(|i| if Some(i) == pos { 1.0 } else { 0.0 }));
            }
            (_, DomainHull::Numeric { min, max }) => {
                let x = v.as_f64().unwrap_or(*min);
                let z = if max > min { (x - min) / (max - min) } else { 0.0 };
                out.push(z.clamp(0.0, 1.0));
            }
            (_, DomainHull::Choices(_)) => out.push(0.0),
        }
    }
    HpEncoding(out)
}

/// Inverse of [`encode`] for settings whose numeric values lie in the hull.
pub fn decode(e: &HpEncoding, space: &HpSpace) -> Result<HpSetting> {
    Error::check_len(space.encoding_len(), e.0.len())?;
    let hull = space.hull();
    let mut pos = 0;
    let mut values = Vec::with_capacity(space.domains.len());
    for (d, h) in space.domains.iter().zip(&hull.0) {
        match (&d.kind, h) {
            (DomainKind::Categorical { choices }, _) => {
                let w = &e.0[pos..pos + choices.len()];
                let i = w
                    .iter()
                    .position(|&v| v == 1.0)
                    .ok_or_else(|| Error::invalid("one-hot block has no hot entry"))?;
                values.push(HpValue::Cat(choices[i].clone()));
                pos += choices.len();
            }
            (kind, DomainHull::Numeric { min, max }) => {
                let x = min + e.0[pos] * (max - min);
                values.push(match kind {
                    DomainKind::Integer { .. } => HpValue::Int(x.round() as i64),
                    _ => HpValue::Real(x),
                });
                pos += 1;
            }
            _ => return Err(Error::invalid("hull does not match space")),
        }
    }
    Ok(HpSetting::new(values))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_sizes_match_tables() {
        assert_eq!(HpSpace::lof().grid().unwrap().len(), 200);
        assert_eq!(HpSpace::iforest().grid().unwrap().len(), 288);
    }

    #[test]
    fn degenerate_cross_product() {
        let space = HpSpace::new(Algorithm::Lof, vec![HpDomain::categorical("c", &["a", "b"])]).unwrap();
        let g = space.grid().unwrap();
        assert_eq!(g, vec![HpSetting::new(vec![HpValue::Cat("a".into())]), HpSetting::new(vec![HpValue::Cat("b".into())])]);
    }

    #[test]
    fn grid_is_lexicographic() {
        let g = HpSpace::lof().grid().unwrap();
        assert_eq!(g[0].values, vec![HpValue::Int(1), HpValue::Cat("chebyshev".into())]);
        assert_eq!(g[1].values, vec![HpValue::Int(1), HpValue::Cat("minkowski".into())]);
        assert_eq!(g[5].values, vec![HpValue::Int(3), HpValue::Cat("chebyshev".into())]);
    }

    #[test]
    fn grid_value_outside_domain_is_rejected() {
        let space = HpSpace::lof();
        let grids = vec![vec![HpValue::Int(0)], vec![HpValue::Cat("cosine".into())]];
        assert!(matches!(meta_grid(&space, &grids), Err(Error::OutOfDomain { .. })));
    }

    #[test]
    fn lof_encoding_bounds() {
        let space = HpSpace::lof();
        let lo = HpSetting::new(vec![HpValue::Int(1), HpValue::Cat("chebyshev".into())]);
        assert_eq!(encode(&lo, &space).0, vec![0.0, 1.0, 0.0, 0.0, 0.0, 0.0]);
        let hi = HpSetting::new(vec![HpValue::Int(80), HpValue::Cat("cosine".into())]);
        let e = encode(&hi, &space);
        assert!((e.0[0] - 1.0).abs() < 1e-12);
        assert_eq!(&e.0[1..], &[0.0, 0.0, 1.0, 0.0, 0.0]);
    }

    #[test]
    fn encoding_is_injective_on_lof_grid() {
        let space = HpSpace::lof();
        let keys: Vec<_> = space.grid().unwrap().iter().map(|s| encode(s, &space).key()).collect();
        for i in 0..keys.len() {
            for j in i + 1..keys.len() {
                assert_ne!(keys[i], keys[j]);
            }
        }
    }

    #[test]
    fn decode_round_trips_grid() {
        for space in [HpSpace::lof(), HpSpace::iforest()] {
            for s in space.grid().unwrap() {
                let back = decode(&encode(&s, &space), &space).unwrap();
                for (x, y) in s.values.iter().zip(&back.values) {
                    match (x, y) {
                        (HpValue::Real(p), HpValue::Real(q)) => assert!((p - q).abs() < 1e-12),
                        _ => assert_eq!(x, y),
                    }
                }
            }
        }
    }

    #[test]
    fn iforest_hull_matches_sampling_ranges() {
        let h = HpSpace::iforest().hull();
        assert_eq!(h.0[0], DomainHull::Numeric { min: 10.0, max: 150.0 });
        assert_eq!(h.0[1], DomainHull::Numeric { min: 0.1, max: 0.9 });
        assert_eq!(h.0[2], DomainHull::Numeric { min: 0.2, max: 0.8 });
    }

    #[test]
    fn sample_is_reproducible_and_rejects_zero() {
        let space = HpSpace::iforest();
        let h = space.hull();
        assert!(sample(&space, &h, 0, 1).is_err());
        assert_eq!(sample(&space, &h, 1, 42).unwrap(), sample(&space, &h, 1, 42).unwrap());
    }
}
