//! Gaussian-process surrogates, expected improvement and surrogate transfer.

use alloc::vec;
use alloc::vec::Vec;

use num_traits::Float;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hpspace::HpEncoding;
use crate::matrix::Cholesky;
use crate::stats::{self, average_ranks, normal_cdf, normal_pdf};

const MIN_SIGNAL_VAR: f64 = 1e-6;
const NOISE_RATIO: f64 = 1e-4;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelParams {
    pub signal_var: f64,
    pub length_scale: f64,
    pub noise_var: f64,
    pub prior_mean: f64,
}

impl KernelParams {
    fn k(&self, a: &[f64], b: &[f64]) -> f64 {
        self.signal_var * (-sq_dist(a, b) / (2.0 * self.length_scale * self.length_scale)).exp()
    }
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Serialized form: the factor is recomputed on load.
#[derive(Serialize, Deserialize)]
struct GpData {
    inputs: Vec<Vec<f64>>,
    targets: Vec<f64>,
    params: KernelParams,
}

/// Exact GP regressor with an RBF kernel and a constant prior mean.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "GpData", into = "GpData")]
pub struct GpModel {
    inputs: Vec<Vec<f64>>,
    targets: Vec<f64>,
    params: KernelParams,
    factor: Cholesky,
    alpha: Vec<f64>,
}

impl From<GpModel> for GpData {
    fn from(m: GpModel) -> Self {
        GpData { inputs: m.inputs, targets: m.targets, params: m.params }
    }
}

impl TryFrom<GpData> for GpModel {
    type Error = Error;

    fn try_from(d: GpData) -> Result<Self> {
        GpModel::with_params(d.inputs, d.targets, d.params)
    }
}

/// Median over inputs of the distance to the nearest distinct input, so that
/// adjacent grid values stay distinguishable.
pub fn nn_median_distance(xs: &[Vec<f64>]) -> f64 {
    let d: Vec<f64> = xs
        .iter()
        .filter_map(|a| {
            xs.iter()
                .map(|b| sq_dist(a, b).sqrt())
                .filter(|&v| v > 0.0)
                .min_by(f64::total_cmp)
        })
        .collect();
    if d.is_empty() {
        1.0
    } else {
        stats::median(&d)
    }
}

impl GpModel {
    fn with_params(inputs: Vec<Vec<f64>>, targets: Vec<f64>, params: KernelParams) -> Result<Self> {
        let factor = Self::factorize(&inputs, &params)?;
        Self::assemble(inputs, targets, params, factor)
    }

    fn factorize(inputs: &[Vec<f64>], params: &KernelParams) -> Result<Cholesky> {
        let n = inputs.len();
        let mut k = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..=i {
                let v = params.k(&inputs[i], &inputs[j]);
                k[i * n + j] = v;
                k[j * n + i] = v;
            }
            k[i * n + i] += params.noise_var;
        }
        Cholesky::factor(&k, n)
    }

    fn assemble(inputs: Vec<Vec<f64>>, targets: Vec<f64>, params: KernelParams, factor: Cholesky) -> Result<Self> {
        Error::check_len(inputs.len(), targets.len())?;
        let centered: Vec<f64> = targets.iter().map(|y| y - params.prior_mean).collect();
        let alpha = factor.solve(&centered);
        Ok(Self { inputs, targets, params, factor, alpha })
    }

    pub fn params(&self) -> &KernelParams {
        &self.params
    }

    pub fn inputs(&self) -> &[Vec<f64>] {
        &self.inputs
    }

    pub fn targets(&self) -> &[f64] {
        &self.targets
    }

    pub fn len(&self) -> usize {
        self.targets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.targets.is_empty()
    }

    pub fn input_len(&self) -> usize {
        self.inputs[0].len()
    }

    /// Posterior mean and standard deviation at `x`.
    pub fn predict(&self, x: &[f64]) -> Result<(f64, f64)> {
        Error::check_len(self.input_len(), x.len())?;
        let ks: Vec<f64> = self.inputs.iter().map(|xi| self.params.k(xi, x)).collect();
        let mean = self.params.prior_mean + ks.iter().zip(&self.alpha).map(|(a, b)| a * b).sum::<f64>();
        let v = self.factor.solve_lower(&ks);
        let var = self.params.signal_var - v.iter().map(|t| t * t).sum::<f64>();
        Ok((mean, var.max(0.0).sqrt()))
    }

    pub fn predict_mean(&self, x: &[f64]) -> Result<f64> {
        Error::check_len(self.input_len(), x.len())?;
        Ok(self.params.prior_mean
            + self.inputs.iter().zip(&self.alpha).map(|(xi, a)| self.params.k(xi, x) * a).sum::<f64>())
    }
}

/// Fits a GP with a nearest-neighbour length scale and variance-scaled noise.
/// A failed factorization is retried once with ten times the noise.
pub fn gp_fit(xs: &[Vec<f64>], ys: &[f64]) -> Result<GpModel> {
    if xs.is_empty() {
        return Err(Error::invalid("GP fit needs at least one point"));
    }
    Error::check_len(xs.len(), ys.len())?;
    let dim = xs[0].len();
    if xs.iter().any(|x| x.len() != dim) {
        return Err(Error::invalid("GP inputs have unequal lengths"));
    }
    if ys.iter().any(|y| !y.is_finite()) || xs.iter().flatten().any(|v| !v.is_finite()) {
        return Err(Error::Numerical("GP training data must be finite".into()));
    }
    let signal_var = stats::variance(ys).max(MIN_SIGNAL_VAR);
    let mut params = KernelParams {
        signal_var,
        length_scale: nn_median_distance(xs),
        noise_var: NOISE_RATIO * signal_var,
        prior_mean: stats::mean(ys),
    };
    let factor = match GpModel::factorize(xs, &params) {
        Ok(f) => f,
        Err(_) => {
            params.noise_var *= 10.0;
            GpModel::factorize(xs, &params)?
        }
    };
    GpModel::assemble(xs.to_vec(), ys.to_vec(), params, factor)
}

pub fn gp_predict(model: &GpModel, x: &HpEncoding) -> Result<(f64, f64)> {
    model.predict(&x.0)
}

/// `σ·(zΦ(z) + φ(z))` with `z = (u − best)/σ`; zero when `σ = 0`.
pub fn expected_improvement(u: f64, sigma: f64, best: f64) -> f64 {
    if !(sigma > 0.0) {
        return 0.0;
    }
    let z = (u - best) / sigma;
    (sigma * (z * normal_cdf(z) + normal_pdf(z))).max(0.0)
}

/// One GP per meta-train dataset over the grid encodings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetaSurrogates {
    pub models: Vec<GpModel>,
}

impl MetaSurrogates {
    pub fn len(&self) -> usize {
        self.models.len()
    }

    pub fn is_empty(&self) -> bool {
        self.models.is_empty()
    }
}

pub fn fit_meta_surrogates(perf: &[Vec<f64>], encodings: &[HpEncoding]) -> Result<MetaSurrogates> {
    let xs: Vec<Vec<f64>> = encodings.iter().map(|e| e.0.clone()).collect();
    let models = perf
        .iter()
        .map(|row| {
            Error::check_len(xs.len(), row.len())?;
            gp_fit(&xs, row)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(MetaSurrogates { models })
}

/// Weighted Kendall tau with hyperbolic additive weights on the ranks of `a`.
///
/// Pair `(i, j)` weighs `1/(r_i+1) + 1/(r_j+1)`, `r` being the 0-based
/// descending average rank in `a`. Pairs tied in `a` are left out of the
/// normalization; pairs tied only in `b` count there but contribute nothing.
pub fn weighted_kendall(a: &[f64], b: &[f64]) -> Result<f64> {
    Error::check_len(a.len(), b.len())?;
    let n = a.len();
    if n < 2 {
        return Err(Error::invalid("weighted Kendall tau needs at least two points"));
    }
    let asc = average_ranks(a);
    let w: Vec<f64> = asc.iter().map(|r| 1.0 / (n as f64 - r + 1.0)).collect();
    let (mut num, mut den) = (0.0, 0.0);
    for i in 0..n {
        for j in i + 1..n {
            let da = a[i] - a[j];
            if da == 0.0 {
                continue;
            }
            let wij = w[i] + w[j];
            den += wij;
            let s = da * (b[i] - b[j]);
            if s > 0.0 {
                num += wij;
            } else if s < 0.0 {
                num -= wij;
            }
        }
    }
    Ok(if den > 0.0 { (num / den).clamp(-1.0, 1.0) } else { 0.0 })
}

/// Transferred prediction `s(λ) + w·t(λ)` with `w` clamped to `[0, 1]`; the
/// spread comes from `s` alone.
pub fn transfer_predict(s: &GpModel, t: &GpModel, w: f64, x: &[f64]) -> Result<(f64, f64)> {
    let (u, sigma) = s.predict(x)?;
    let w = if w.is_finite() { w.clamp(0.0, 1.0) } else { 0.0 };
    if w == 0.0 {
        return Ok((u, sigma));
    }
    Ok((u + w * t.predict_mean(x)?, sigma))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_point_interpolates() {
        let m = gp_fit(&[vec![0.3, 0.4]], &[0.5]).unwrap();
        let (u, s) = m.predict(&[0.3, 0.4]).unwrap();
        assert!((u - 0.5).abs() < 1e-3);
        assert!(s >= 0.0);
    }

    #[test]
    fn far_points_revert_to_prior_mean() {
        let m = gp_fit(&[vec![0.0], vec![1.0]], &[0.2, 0.8]).unwrap();
        let (u, _) = m.predict(&[50.0]).unwrap();
        assert!((u - 0.5).abs() < 1e-9);
    }

    #[test]
    fn spread_shrinks_near_data() {
        let xs = vec![vec![0.0, 0.0], vec![0.5, 0.1], vec![0.2, 0.9]];
        let m = gp_fit(&xs, &[0.1, 0.4, 0.3]).unwrap();
        let l = m.params().length_scale;
        let (_, near) = m.predict(&xs[0]).unwrap();
        let (_, far) = m.predict(&[10.0 * l, 10.0 * l]).unwrap();
        assert!(near <= far);
    }

    #[test]
    fn duplicate_inputs_absorbed_by_noise() {
        let m = gp_fit(&[vec![0.1], vec![0.1], vec![0.9]], &[0.2, 0.4, 0.6]).unwrap();
        let (u, _) = m.predict(&[0.1]).unwrap();
        assert!((u - 0.3).abs() < 1e-2);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(gp_fit(&[], &[]).is_err());
        assert!(matches!(gp_fit(&[vec![0.0]], &[f64::NAN]), Err(Error::Numerical(_))));
        let m = gp_fit(&[vec![0.0, 1.0]], &[0.5]).unwrap();
        assert!(m.predict(&[0.0]).is_err());
    }

    #[test]
    fn ei_closed_form_points() {
        assert_eq!(expected_improvement(0.7, 0.0, 0.1), 0.0);
        assert!((expected_improvement(0.5, 1.0, 0.5) - 0.398_942_280_401_432_7).abs() < 1e-12);
        assert!((expected_improvement(0.9, 1e-8, 0.4) - 0.5).abs() < 1e-9);
        assert!(expected_improvement(0.1, 1e-8, 0.4) < 1e-12);
    }

    #[test]
    fn kendall_extremes() {
        let a = [0.3, 0.9, 0.1, 0.5];
        let rev: Vec<f64> = a.iter().map(|v| -v).collect();
        assert_eq!(weighted_kendall(&a, &a).unwrap(), 1.0);
        assert_eq!(weighted_kendall(&a, &rev).unwrap(), -1.0);
        assert_eq!(weighted_kendall(&[1.0; 4], &a).unwrap(), 0.0);
        assert!(weighted_kendall(&[1.0], &[1.0]).is_err());
        assert!(weighted_kendall(&[1.0, 2.0], &[1.0]).is_err());
    }

    #[test]
    fn kendall_hand_weights() {
        // a ranks: 0.9 → r0, 0.5 → r1, 0.3 → r2; b swaps the bottom two
        let a = [0.9, 0.5, 0.3];
        let b = [3.0, 1.0, 2.0];
        let w01 = 1.0 + 0.5;
        let w02 = 1.0 + 1.0 / 3.0;
        let w12 = 0.5 + 1.0 / 3.0;
        let expected = (w01 + w02 - w12) / (w01 + w02 + w12);
        assert!((weighted_kendall(&a, &b).unwrap() - expected).abs() < 1e-15);
    }

    #[test]
    fn transfer_adds_means_only() {
        let s = gp_fit(&[vec![0.0], vec![1.0]], &[0.2, 0.6]).unwrap();
        let t = gp_fit(&[vec![0.0], vec![0.5], vec![1.0]], &[0.3, 0.3, 0.3]).unwrap();
        let x = [0.25];
        let base = s.predict(&x).unwrap();
        assert_eq!(transfer_predict(&s, &t, 0.0, &x).unwrap(), base);
        assert_eq!(transfer_predict(&s, &t, -0.5, &x).unwrap(), base);
        let (u, sd) = transfer_predict(&s, &t, 1.0, &x).unwrap();
        assert!((u - base.0 - 0.3).abs() < 1e-12);
        assert_eq!(sd, base.1);
    }
}
