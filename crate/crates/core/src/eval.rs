//! Metrics, the Wilcoxon signed-rank test, baseline selectors and the
//! leave-one-out benchmark.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use num_traits::Float;
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::data::{standardize_matrix, Corpus};
use crate::detectors::{DetectorSpec, ScoringSession};
use crate::error::{Error, Result};
use crate::hpspace::HpSetting;
use crate::ipm::rank_normalize;
use crate::matrix::Matrix;
use crate::metafeatures;
use crate::pipeline::{
    evaluate_grid, hpod0_optimize, hpod_optimize, meta_train_from_evaluations, Acquisition, GridEvaluation,
    HpodOptions, InitStrategy, MetaModel,
};
use crate::rng;
use crate::stats::{self, average_ranks, normal_cdf};

/// Average precision; ties in score are ranked by original index.
pub fn average_precision(scores: &[f64], labels: &[u8]) -> Result<f64> {
    Error::check_len(scores.len(), labels.len())?;
    let pos = labels.iter().filter(|&&l| l == 1).count();
    if pos == 0 || pos == labels.len() {
        return Err(Error::SingleClass);
    }
    let mut idx: Vec<usize> = (0..scores.len()).collect();
    idx.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
    let mut hits = 0usize;
    let mut total = 0.0;
    for (k, &i) in idx.iter().enumerate() {
        if labels[i] == 1 {
            hits += 1;
            total += hits as f64 / (k + 1) as f64;
        }
    }
    Ok(total / pos as f64)
}

/// `(#{grid < ap} + ½·#{grid = ap}) / m`.
pub fn normalized_ap_rank(ap: f64, grid_aps: &[f64]) -> f64 {
    if grid_aps.is_empty() {
        return 0.0;
    }
    let less = grid_aps.iter().filter(|&&g| g < ap).count() as f64;
    let equal = grid_aps.iter().filter(|&&g| g == ap).count() as f64;
    (less + 0.5 * equal) / grid_aps.len() as f64
}

/// Smallest `q ∈ {0.01, …, 1.00}` with `ap` at least the `⌈q·m⌉`-th largest grid AP.
pub fn top_q(ap: f64, grid_aps: &[f64]) -> f64 {
    let m = grid_aps.len();
    if m == 0 {
        return 1.0;
    }
    let mut desc = grid_aps.to_vec();
    desc.sort_by(|a, b| b.total_cmp(a));
    for step in 1..=100u32 {
        let q = step as f64 / 100.0;
        let k = ((step as usize * m).div_ceil(100)).clamp(1, m);
        if ap >= desc[k - 1] {
            return q;
        }
    }
    1.0
}

/// Result of a paired signed-rank test of `x` against `y`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Wilcoxon {
    /// Sum of ranks of positive differences `x − y`.
    pub w_plus: f64,
    /// Number of non-zero differences.
    pub n: usize,
    pub exact: bool,
    pub p_two_sided: f64,
    /// P-value for the alternative `x > y`.
    pub p_greater: f64,
    /// P-value for the alternative `x < y`.
    pub p_less: f64,
}

pub const WILCOXON_EXACT_MAX: usize = 25;
pub const WILCOXON_MIN_N: usize = 5;

pub fn wilcoxon(x: &[f64], y: &[f64]) -> Result<Wilcoxon> {
    Error::check_len(x.len(), y.len())?;
    let d: Vec<f64> = x.iter().zip(y).map(|(a, b)| a - b).filter(|v| *v != 0.0).collect();
    let n = d.len();
    if n == 0 {
        return Err(Error::invalid("all paired differences are zero"));
    }
    if n < WILCOXON_MIN_N {
        return Err(Error::invalid(format!("signed-rank test needs {WILCOXON_MIN_N} non-zero differences, got {n}")));
    }
    let abs: Vec<f64> = d.iter().map(|v| v.abs()).collect();
    let ranks = average_ranks(&abs);
    let w_plus: f64 = d.iter().zip(&ranks).filter(|(v, _)| **v > 0.0).map(|(_, r)| r).sum();
    let (p_greater, p_less, exact) = if n <= WILCOXON_EXACT_MAX {
        // doubled ranks are integers even with ties
        let doubled: Vec<usize> = ranks.iter().map(|r| (2.0 * r).round() as usize).collect();
        let total: usize = doubled.iter().sum();
        let mut counts = vec![0.0f64; total + 1];
        counts[0] = 1.0;
        for &r in &doubled {
            for s in (r..=total).rev() {
                counts[s] += counts[s - r];
            }
        }
        let obs = (2.0 * w_plus).round() as usize;
        let all = counts.iter().sum::<f64>();
        let ge: f64 = counts[obs..].iter().sum();
        let le: f64 = counts[..=obs].iter().sum();
        (ge / all, le / all, true)
    } else {
        let nf = n as f64;
        let mean = nf * (nf + 1.0) / 4.0;
        let mut ties = 0.0;
        let mut sorted = abs.clone();
        sorted.sort_by(f64::total_cmp);
        let mut i = 0;
        while i < n {
            let mut j = i;
            while j + 1 < n && sorted[j + 1] == sorted[i] {
                j += 1;
            }
            let t = (j - i + 1) as f64;
            ties += t * t * t - t;
            i = j + 1;
        }
        let var = nf * (nf + 1.0) * (2.0 * nf + 1.0) / 24.0 - ties / 48.0;
        let sd = var.max(0.0).sqrt();
        if sd == 0.0 {
            (1.0, 1.0, false)
        } else {
            let zg = (w_plus - mean - 0.5) / sd;
            let zl = (w_plus - mean + 0.5) / sd;
            (1.0 - normal_cdf(zg), normal_cdf(zl), false)
        }
    };
    let p_two_sided = (2.0 * p_greater.min(p_less)).min(1.0);
    Ok(Wilcoxon { w_plus, n, exact, p_two_sided, p_greater, p_less })
}

/// Two-sided p-value of the paired signed-rank test.
pub fn wilcoxon_signed_rank(x: &[f64], y: &[f64]) -> Result<f64> {
    Ok(wilcoxon(x, y)?.p_two_sided)
}

/// Selection strategies compared by the benchmark.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Method {
    Default,
    Random,
    Gb,
    As,
    HyperEnsemble,
    Hpod0,
    Hpod,
    /// HPOD with the greedy (mean) acquisition.
    HpodGreedy,
    /// HPOD with uniformly drawn acquisition.
    HpodRandomAcq,
    /// HPOD initialized from random grid settings.
    HpodRandomInit,
    /// HPOD without surrogate transfer.
    HpodNoTransfer,
}

impl Method {
    pub const ALL: [Method; 11] = [
        Method::Default,
        Method::Random,
        Method::Gb,
        Method::As,
        Method::HyperEnsemble,
        Method::Hpod0,
        Method::Hpod,
        Method::HpodGreedy,
        Method::HpodRandomAcq,
        Method::HpodRandomInit,
        Method::HpodNoTransfer,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Method::Default => "default",
            Method::Random => "random",
            Method::Gb => "gb",
            Method::As => "as",
            Method::HyperEnsemble => "he",
            Method::Hpod0 => "hpod0",
            Method::Hpod => "hpod",
            Method::HpodGreedy => "hpod-greedy",
            Method::HpodRandomAcq => "hpod-randacq",
            Method::HpodRandomInit => "hpod-randinit",
            Method::HpodNoTransfer => "hpod-notransfer",
        }
    }

    pub fn is_stochastic(self) -> bool {
        !matches!(self, Method::Default | Method::Gb | Method::As)
    }

    /// Options for the HPOD family; `None` for other methods.
    pub fn hpod_options(self, base: &HpodOptions) -> Option<HpodOptions> {
        let mut o = *base;
        match self {
            Method::Hpod => {}
            Method::HpodGreedy => o.acquisition = Acquisition::Greedy,
            Method::HpodRandomAcq => o.acquisition = Acquisition::Random,
            Method::HpodRandomInit => o.init = InitStrategy::Random,
            Method::HpodNoTransfer => o.transfer = false,
            _ => return None,
        }
        Some(o)
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim().to_ascii_lowercase();
        let alias = match s.as_str() {
            "hyperensemble" | "hyperens" => "he",
            "argosmart" => "as",
            "globalbest" => "gb",
            other => other,
        };
        Method::ALL
            .into_iter()
            .find(|m| m.name() == alias)
            .ok_or_else(|| Error::invalid(format!("unknown method `{s}`")))
    }
}

/// Knobs shared by the benchmark methods.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MethodParams {
    pub hpod: HpodOptions,
    pub hpod0_samples: usize,
    pub ensemble_size: usize,
}

impl Default for MethodParams {
    fn default() -> Self {
        Self { hpod: HpodOptions::default(), hpod0_samples: 50, ensemble_size: 10 }
    }
}

/// Picks a setting with one of the single-setting baselines.
pub fn baseline_select(method: Method, meta: &MetaModel, x: &Matrix, seed: u64, params: &MethodParams) -> Result<HpSetting> {
    let grid = &meta.perf.grid;
    match method {
        Method::Default => DetectorSpec::new(meta.space.clone()).default_setting(x.rows()),
        Method::Random => Ok(grid[rng::rng(seed).gen_range(0..grid.len())].clone()),
        Method::Gb => Ok(grid[first_max(&meta.perf.column_means())].clone()),
        Method::As => {
            let mf = metafeatures::extract(&standardize_matrix(x), meta.seed)?;
            let i = meta.nearest_dataset(&mf)?;
            Ok(grid[first_max(&meta.perf.values[i])].clone())
        }
        Method::Hpod0 => Ok(hpod0_optimize(meta, x, None, params.hpod0_samples, seed)?.selected),
        m => match m.hpod_options(&params.hpod) {
            Some(o) => Ok(hpod_optimize(meta, x, None, &HpodOptions { seed, ..o })?.selected),
            None => Err(Error::invalid(format!("`{m}` does not select a single setting"))),
        },
    }
}

fn first_max(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, x) in v.iter().enumerate() {
        if *x > v[best] {
            best = i;
        }
    }
    best
}

/// Mean of the rank-normalized scores of `k` grid settings drawn uniformly
/// with replacement.
pub fn hyper_ensemble_scores(meta: &MetaModel, x: &Matrix, k: usize, seed: u64) -> Result<Vec<f64>> {
    if k == 0 {
        return Err(Error::invalid("ensemble size must be >= 1"));
    }
    let mut r = rng::rng(seed);
    let mut session = ScoringSession::new(standardize_matrix(x), meta.space.clone())?;
    let mut acc = vec![0.0; x.rows()];
    for t in 0..k {
        let s = &meta.perf.grid[r.gen_range(0..meta.perf.grid.len())];
        let ranked = rank_normalize(&session.score(s, rng::derive(seed, t as u64))?.values);
        acc.iter_mut().zip(&ranked).for_each(|(a, v)| *a += v);
    }
    acc.iter_mut().for_each(|a| *a /= k as f64);
    Ok(acc)
}

/// One (dataset, method) cell, averaged over trials.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub dataset: String,
    pub method: Method,
    /// Selected setting per trial; empty for the ensemble.
    pub selected: Vec<HpSetting>,
    pub true_ap: f64,
    pub normalized_rank: f64,
    pub top_q: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodSummary {
    pub method: Method,
    pub mean_normalized_rank: f64,
    pub std_normalized_rank: f64,
    pub mean_ap: f64,
    pub mean_top_q: f64,
    /// Average position among methods per dataset (1 = best).
    pub mean_position: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairwiseTest {
    pub method: Method,
    pub baseline: Method,
    /// `None` when the test is undefined (too few non-zero differences).
    pub test: Option<Wilcoxon>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkReport {
    pub rows: Vec<ReportRow>,
    pub summaries: Vec<MethodSummary>,
    pub pairwise: Vec<PairwiseTest>,
    pub trials: usize,
    pub seed: u64,
}

impl BenchmarkReport {
    pub fn summary(&self, m: Method) -> Option<&MethodSummary> {
        self.summaries.iter().find(|s| s.method == m)
    }

    /// Normalized ranks of `m`, in dataset order.
    pub fn ranks_of(&self, m: Method) -> Vec<f64> {
        self.rows.iter().filter(|r| r.method == m).map(|r| r.normalized_rank).collect()
    }

    pub fn pair(&self, method: Method, baseline: Method) -> Option<&PairwiseTest> {
        self.pairwise.iter().find(|p| p.method == method && p.baseline == baseline)
    }
}

/// True AP of `s` on a held-out dataset: the cached grid AP when `s` is a
/// grid setting, otherwise a fresh detector run.
fn true_ap(held: &GridEvaluation, meta_grid: &[HpSetting], session: &mut ScoringSession, y: &[u8], s: &HpSetting, seed: u64) -> Result<f64> {
    match meta_grid.iter().position(|g| g == s) {
        Some(j) => Ok(held.aps[j]),
        None => average_precision(&session.score(s, seed)?.values, y),
    }
}

/// Runs every method on held-out dataset `held` with a meta-model trained on
/// the remaining evaluations.
#[allow(clippy::too_many_arguments)]
pub fn run_fold(
    corpus: &Corpus,
    spec: &DetectorSpec,
    evals: &[GridEvaluation],
    held: usize,
    grid: &[HpSetting],
    methods: &[Method],
    trials: usize,
    seed: u64,
    params: &MethodParams,
) -> Result<Vec<ReportRow>> {
    let ds = &corpus.datasets()[held];
    let y = ds.y.as_deref().ok_or(Error::SingleClass)?;
    let train: Vec<&GridEvaluation> = evals.iter().enumerate().filter(|(i, _)| *i != held).map(|(_, e)| e).collect();
    let meta = meta_train_from_evaluations(&train, &spec.space, grid, seed)?;
    let held_eval = &evals[held];
    let mut session = ScoringSession::new(standardize_matrix(&ds.x), meta.space.clone())?;
    let ap_seed = rng::derive(seed, 0x7A0E);
    let mut rows = Vec::with_capacity(methods.len());
    for &m in methods {
        let runs = if m.is_stochastic() { trials.max(1) } else { 1 };
        let (mut aps, mut nr, mut tq, mut selected) = (Vec::new(), Vec::new(), Vec::new(), Vec::new());
        for t in 0..runs {
            let tseed = rng::derive(rng::derive(seed, held as u64), t as u64);
            let ap = if m == Method::HyperEnsemble {
                average_precision(&hyper_ensemble_scores(&meta, &ds.x, params.ensemble_size, tseed)?, y)?
            } else {
                let s = baseline_select(m, &meta, &ds.x, tseed, params)?;
                let ap = true_ap(held_eval, grid, &mut session, y, &s, ap_seed)?;
                selected.push(s);
                ap
            };
            aps.push(ap);
            nr.push(normalized_ap_rank(ap, &held_eval.aps));
            tq.push(top_q(ap, &held_eval.aps));
        }
        rows.push(ReportRow {
            dataset: ds.name.clone(),
            method: m,
            selected,
            true_ap: stats::mean(&aps),
            normalized_rank: stats::mean(&nr),
            top_q: stats::mean(&tq),
        });
    }
    Ok(rows)
}

/// Aggregates fold rows (dataset-major, methods in `methods` order) into a report.
pub fn assemble_report(rows: Vec<ReportRow>, methods: &[Method], trials: usize, seed: u64) -> Result<BenchmarkReport> {
    let mut by_method: BTreeMap<Method, Vec<&ReportRow>> = BTreeMap::new();
    for r in &rows {
        by_method.entry(r.method).or_default().push(r);
    }
    let datasets: Vec<String> = {
        let mut seen: Vec<String> = Vec::new();
        for r in &rows {
            if !seen.contains(&r.dataset) {
                seen.push(r.dataset.clone());
            }
        }
        seen
    };
    // average position of each method per dataset (higher rank → position 1)
    let mut positions: BTreeMap<Method, Vec<f64>> = BTreeMap::new();
    for d in &datasets {
        let cells: Vec<&ReportRow> = methods.iter().filter_map(|m| rows.iter().find(|r| &r.dataset == d && r.method == *m)).collect();
        let neg: Vec<f64> = cells.iter().map(|r| -r.normalized_rank).collect();
        for (r, p) in cells.iter().zip(average_ranks(&neg)) {
            positions.entry(r.method).or_default().push(p);
        }
    }
    let summaries = methods
        .iter()
        .map(|&m| {
            let cells = by_method.get(&m).cloned().unwrap_or_default();
            let nr: Vec<f64> = cells.iter().map(|r| r.normalized_rank).collect();
            MethodSummary {
                method: m,
                mean_normalized_rank: stats::mean(&nr),
                std_normalized_rank: stats::std_dev(&nr),
                mean_ap: stats::mean(&cells.iter().map(|r| r.true_ap).collect::<Vec<_>>()),
                mean_top_q: stats::mean(&cells.iter().map(|r| r.top_q).collect::<Vec<_>>()),
                mean_position: stats::mean(positions.get(&m).map_or(&[][..], |v| v.as_slice())),
            }
        })
        .collect();
    let lead = if methods.contains(&Method::Hpod) { Method::Hpod } else { methods[0] };
    let ranks = |m: Method| -> Vec<f64> { rows.iter().filter(|r| r.method == m).map(|r| r.normalized_rank).collect() };
    let pairwise = methods
        .iter()
        .filter(|&&m| m != lead)
        .map(|&b| PairwiseTest { method: lead, baseline: b, test: wilcoxon(&ranks(lead), &ranks(b)).ok() })
        .collect();
    Ok(BenchmarkReport { rows, summaries, pairwise, trials, seed })
}

/// Leave-one-out benchmark: each dataset in turn is the unlabeled input and
/// the rest form the meta-train corpus. Grids are scored once up front.
#[allow(clippy::too_many_arguments)]
pub fn loocv_benchmark(
    corpus: &Corpus,
    spec: &DetectorSpec,
    grid: &[HpSetting],
    methods: &[Method],
    trials: usize,
    seed: u64,
    params: &MethodParams,
) -> Result<BenchmarkReport> {
    if corpus.len() < 3 {
        return Err(Error::invalid("leave-one-out benchmark needs at least 3 datasets"));
    }
    if methods.is_empty() {
        return Err(Error::invalid("no methods to benchmark"));
    }
    let evals = corpus
        .datasets()
        .iter()
        .map(|ds| evaluate_grid(ds, &spec.space, grid, seed))
        .collect::<Result<Vec<_>>>()?;
    let mut rows = Vec::new();
    for held in 0..corpus.len() {
        rows.extend(run_fold(corpus, spec, &evals, held, grid, methods, trials, seed, params)?);
    }
    assemble_report(rows, methods, trials, seed)
}
