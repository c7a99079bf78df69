//! Offline meta-training and online hyperparameter search.
//!
//! Offline, every grid setting is scored on every labeled meta-train dataset;
//! the resulting performance matrix, meta-features, anchor-based IPMs, the
//! proxy performance evaluator and one GP per dataset form a [`MetaModel`].
//! Online, a new unlabeled dataset is searched with GP-based SMBO whose
//! observations are PPE predictions, warm-started from the nearest
//! meta-train dataset and boosted by transferring the meta-surrogate whose
//! ranking agrees best with the observations so far.

use alloc::collections::BTreeSet;
use alloc::string::String;
use alloc::vec::Vec;

use rand::seq::index;
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::data::{standardize_matrix, Corpus, Dataset};
use crate::detectors::{DetectorSpec, ScoringSession};
use crate::error::{Error, Result};
use crate::eval::average_precision;
use crate::hpspace::{self, GridHull, HpSetting, HpSpace};
use crate::ipm::{build_anchor_set, extract_ipms, rank_normalize, AnchorSet, IpmVector};
use crate::matrix::Matrix;
use crate::metafeatures::{self, mf_distance, MetaFeatureVector, MfScaler};
use crate::ppe::{build_training_table, feature_row, train_ppe, PpeModel, PpeParams};
use crate::rng;
use crate::surrogate::{expected_improvement, fit_meta_surrogates, gp_fit, transfer_predict, weighted_kendall, GpModel, MetaSurrogates};

pub const MODEL_FORMAT: u32 = 1;
pub const ANCHOR_MAX: usize = 10;

const STREAM_PPE: u64 = 0x5050_4500;
const STREAM_DETECTOR: u64 = 0xDE7E_C700;
const STREAM_CANDIDATES: u64 = 0xCA4D_0000;
const STREAM_INIT: u64 = 0x1417_0000;
const STREAM_ACQ: u64 = 0xACC0_0000;

/// True performance (AP) of grid setting `j` on meta-train dataset `i`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerfMatrix {
    pub datasets: Vec<String>,
    pub grid: Vec<HpSetting>,
    pub values: Vec<Vec<f64>>,
}

impl PerfMatrix {
    pub fn rows(&self) -> usize {
        self.values.len()
    }

    pub fn cols(&self) -> usize {
        self.grid.len()
    }

    pub fn column_means(&self) -> Vec<f64> {
        let n = self.rows().max(1) as f64;
        (0..self.cols()).map(|j| self.values.iter().map(|r| r[j]).sum::<f64>() / n).collect()
    }

    fn validate(&self) -> Result<()> {
        Error::check_len(self.datasets.len(), self.values.len())?;
        for row in &self.values {
            Error::check_len(self.grid.len(), row.len())?;
            if row.iter().any(|v| !(0.0..=1.0).contains(v)) {
                return Err(Error::invalid("performance values must lie in [0, 1]"));
            }
        }
        Ok(())
    }
}

/// Shape of one meta-train dataset, kept for provenance.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetInfo {
    pub name: String,
    pub rows: usize,
    pub cols: usize,
}

/// Every grid setting scored on one labeled dataset.
#[derive(Debug, Clone, PartialEq)]
pub struct GridEvaluation {
    pub info: DatasetInfo,
    /// Rank-normalized score vector per grid setting.
    pub scores: Vec<Vec<f64>>,
    pub aps: Vec<f64>,
    pub meta_features: MetaFeatureVector,
}

/// Runs the whole grid on a labeled dataset (after standardization).
pub fn evaluate_grid(ds: &Dataset, space: &HpSpace, grid: &[HpSetting], seed: u64) -> Result<GridEvaluation> {
    let y = ds.y.as_deref().ok_or_else(|| Error::invalid(alloc::format!("dataset `{}` is unlabeled", ds.name)))?;
    if !ds.has_both_classes() {
        return Err(Error::SingleClass);
    }
    let x = standardize_matrix(&ds.x);
    let meta_features = metafeatures::extract(&x, seed)?;
    let mut session = ScoringSession::new(x, space.clone())?;
    let mut scores = Vec::with_capacity(grid.len());
    let mut aps = Vec::with_capacity(grid.len());
    for (j, s) in grid.iter().enumerate() {
        let out = session.score(s, detector_seed(seed, j))?;
        aps.push(average_precision(&out.values, y)?);
        scores.push(rank_normalize(&out.values));
    }
    Ok(GridEvaluation { info: DatasetInfo { name: ds.name.clone(), rows: ds.n(), cols: ds.d() }, scores, aps, meta_features })
}

fn detector_seed(root: u64, j: usize) -> u64 {
    rng::derive(rng::derive(root, STREAM_DETECTOR), j as u64)
}

/// Persisted offline artifacts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetaModel {
    pub format: u32,
    pub seed: u64,
    pub space: HpSpace,
    pub datasets: Vec<DatasetInfo>,
    pub perf: PerfMatrix,
    pub meta_features: Vec<MetaFeatureVector>,
    pub mf_scaler: MfScaler,
    pub anchors: AnchorSet,
    pub ppe: PpeModel,
    pub surrogates: MetaSurrogates,
}

impl MetaModel {
    /// Checks that the stored parts agree on dimensions.
    pub fn validate(&self) -> Result<()> {
        if self.format != MODEL_FORMAT {
            return Err(Error::SchemaMismatch {
                expected: alloc::format!("model format {MODEL_FORMAT}"),
                actual: alloc::format!("model format {}", self.format),
            });
        }
        self.space.validate()?;
        self.perf.validate()?;
        let n = self.perf.rows();
        Error::check_len(n, self.datasets.len())?;
        Error::check_len(n, self.meta_features.len())?;
        Error::check_len(n, self.surrogates.len())?;
        for schema in self.meta_features.iter().map(|m| &m.schema).chain([&self.mf_scaler.schema]) {
            if schema != metafeatures::SCHEMA_VERSION {
                return Err(Error::SchemaMismatch { expected: metafeatures::SCHEMA_VERSION.into(), actual: schema.clone() });
            }
        }
        if self.anchors.settings.is_empty() || self.anchors.grid_indices.iter().any(|&j| j >= self.perf.cols()) {
            return Err(Error::invalid("anchor set is inconsistent with the grid"));
        }
        let enc = self.space.encoding_len();
        Error::check_len(enc + metafeatures::MF_LEN + crate::ipm::IPM_LEN, self.ppe.feature_len)?;
        if self.surrogates.models.iter().any(|m| m.len() != self.perf.cols() || m.input_len() != enc) {
            return Err(Error::invalid("meta-surrogate does not match the grid"));
        }
        self.perf.grid.iter().try_for_each(|s| self.space.check(s))
    }

    pub fn grid_hull(&self) -> GridHull {
        self.space.hull()
    }

    /// Index of the meta-train dataset closest in meta-feature space.
    pub fn nearest_dataset(&self, mf: &MetaFeatureVector) -> Result<usize> {
        let mut best = (0, f64::INFINITY);
        for (i, m) in self.meta_features.iter().enumerate() {
            let d = mf_distance(mf, m, &self.mf_scaler)?;
            if d < best.1 {
                best = (i, d);
            }
        }
        Ok(best.0)
    }
}

/// Scores the grid on every corpus dataset and trains the meta-model.
pub fn offline_meta_train(corpus: &Corpus, spec: &DetectorSpec, grid: &[HpSetting], seed: u64) -> Result<MetaModel> {
    let evals = corpus
        .datasets()
        .iter()
        .map(|ds| evaluate_grid(ds, &spec.space, grid, seed))
        .collect::<Result<Vec<_>>>()?;
    let refs: Vec<&GridEvaluation> = evals.iter().collect();
    meta_train_from_evaluations(&refs, &spec.space, grid, seed)
}

/// Trains the meta-model from already scored grids; used directly by the
/// leave-one-out benchmark so each dataset is scored once.
pub fn meta_train_from_evaluations(
    evals: &[&GridEvaluation],
    space: &HpSpace,
    grid: &[HpSetting],
    seed: u64,
) -> Result<MetaModel> {
    if evals.is_empty() || grid.is_empty() {
        return Err(Error::invalid("meta-training needs at least one dataset and a non-empty grid"));
    }
    grid.iter().try_for_each(|s| space.check(s))?;
    for e in evals {
        Error::check_len(grid.len(), e.aps.len())?;
    }
    let perf = PerfMatrix {
        datasets: evals.iter().map(|e| e.info.name.clone()).collect(),
        grid: grid.to_vec(),
        values: evals.iter().map(|e| e.aps.clone()).collect(),
    };
    perf.validate()?;
    let grid_scores: Vec<Vec<Vec<f64>>> = evals.iter().map(|e| e.scores.clone()).collect();
    let (anchor_idx, trace) = build_anchor_set(&perf.values, &grid_scores, ANCHOR_MAX)?;
    let anchors = AnchorSet {
        settings: anchor_idx.iter().map(|&j| grid[j].clone()).collect(),
        grid_indices: anchor_idx,
        objective_trace: trace,
    };
    let ipms: Vec<Vec<IpmVector>> = evals
        .iter()
        .map(|e| {
            let cached: Vec<Vec<f64>> = anchors.grid_indices.iter().map(|&j| e.scores[j].clone()).collect();
            e.scores.iter().map(|s| extract_ipms(s, &cached)).collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    let hull = space.hull();
    let encodings: Vec<_> = grid.iter().map(|s| hpspace::encode_with_hull(s, space, &hull)).collect();
    let meta_features: Vec<MetaFeatureVector> = evals.iter().map(|e| e.meta_features.clone()).collect();
    let table = build_training_table(&perf.values, &encodings, &meta_features, &ipms)?;
    let params = PpeParams { seed: rng::derive(seed, STREAM_PPE), ..PpeParams::default() };
    let ppe = train_ppe(&table, &params)?;
    let surrogates = fit_meta_surrogates(&perf.values, &encodings)?;
    let model = MetaModel {
        format: MODEL_FORMAT,
        seed,
        space: space.clone(),
        datasets: evals.iter().map(|e| e.info.clone()).collect(),
        mf_scaler: MfScaler::fit(&meta_features)?,
        meta_features,
        perf,
        anchors,
        ppe,
        surrogates,
    };
    model.validate()?;
    Ok(model)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Acquisition {
    /// Expected improvement over the best predicted performance so far.
    Ei,
    /// Highest (transferred) surrogate mean.
    Greedy,
    /// Uniform draw from the candidate pool.
    Random,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InitStrategy {
    /// Top settings of the nearest meta-train dataset.
    Meta,
    /// Uniformly drawn grid settings.
    Random,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HpodOptions {
    pub iters: usize,
    pub k_init: usize,
    pub n_candidates: usize,
    pub budget_secs: Option<f64>,
    pub seed: u64,
    pub acquisition: Acquisition,
    pub init: InitStrategy,
    pub transfer: bool,
}

impl Default for HpodOptions {
    fn default() -> Self {
        Self {
            iters: 40,
            k_init: 10,
            n_candidates: 2000,
            budget_secs: None,
            seed: 0,
            acquisition: Acquisition::Ei,
            init: InitStrategy::Meta,
            transfer: true,
        }
    }
}

/// Wall-clock source for the time budget.
pub trait Clock {
    fn elapsed_ms(&self) -> f64;
}

/// Clock that never advances; budgets never trigger.
#[derive(Debug, Clone, Copy, Default)]
pub struct NoClock;

impl Clock for NoClock {
    fn elapsed_ms(&self) -> f64 {
        0.0
    }
}

/// One evaluated setting. Initialization rows carry `iter = 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub iter: usize,
    pub setting: HpSetting,
    pub pred_perf: f64,
    pub incumbent: HpSetting,
    pub incumbent_pred: f64,
    pub meta_task: Option<usize>,
    pub transfer_w: f64,
    pub ms: f64,
    /// AP of this setting when labels were supplied.
    pub true_ap: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptTrace {
    pub records: Vec<TraceRecord>,
    pub selected: HpSetting,
    pub selected_pred: f64,
    /// Meta-train dataset nearest to the input.
    pub nearest_task: usize,
}

impl OptTrace {
    pub fn iterations(&self) -> usize {
        self.records.iter().filter(|r| r.iter > 0).count()
    }
}

struct Evaluated {
    setting: HpSetting,
    enc: Vec<f64>,
    grid_index: Option<usize>,
    pred: f64,
}

/// Online state for one test dataset: detector session, meta-features and
/// cached anchor scores.
pub struct OnlineContext<'a> {
    meta: &'a MetaModel,
    session: ScoringSession,
    hull: GridHull,
    mf: MetaFeatureVector,
    anchor_scores: Vec<Vec<f64>>,
    labels: Option<&'a [u8]>,
    seed: u64,
    grid_keys: Vec<(Vec<u64>, usize)>,
    evaluated: Vec<Evaluated>,
    keys: BTreeSet<Vec<u64>>,
    runs: u64,
}

impl<'a> OnlineContext<'a> {
    /// Standardizes `x`, extracts its meta-features and runs the anchors once.
    pub fn new(meta: &'a MetaModel, x: &Matrix, labels: Option<&'a [u8]>, seed: u64) -> Result<Self> {
        if let Some(y) = labels {
            Error::check_len(x.rows(), y.len())?;
        }
        let xs = standardize_matrix(x);
        let mf = metafeatures::extract(&xs, meta.seed)?;
        let mut session = ScoringSession::new(xs, meta.space.clone())?;
        let anchor_scores = meta
            .anchors
            .settings
            .iter()
            .enumerate()
            .map(|(k, s)| Ok(rank_normalize(&session.score(s, detector_seed(rng::derive(seed, 0xA4C4), k))?.values)))
            .collect::<Result<Vec<_>>>()?;
        let hull = meta.grid_hull();
        let mut grid_keys: Vec<(Vec<u64>, usize)> = meta
            .perf
            .grid
            .iter()
            .enumerate()
            .map(|(j, s)| (hpspace::encode_with_hull(s, &meta.space, &hull).key(), j))
            .collect();
        grid_keys.sort();
        Ok(Self {
            meta,
            session,
            hull,
            mf,
            anchor_scores,
            labels,
            seed,
            grid_keys,
            evaluated: Vec::new(),
            keys: BTreeSet::new(),
            runs: 0,
        })
    }

    pub fn meta_features(&self) -> &MetaFeatureVector {
        &self.mf
    }

    pub fn encode(&self, s: &HpSetting) -> Vec<f64> {
        hpspace::encode_with_hull(s, &self.meta.space, &self.hull).0
    }

    fn grid_index(&self, key: &[u64]) -> Option<usize> {
        self.grid_keys.binary_search_by(|(k, _)| k.as_slice().cmp(key)).ok().map(|p| self.grid_keys[p].1)
    }

    /// Detector → IPMs → PPE for one setting, without bookkeeping.
    /// Also returns the AP against the supplied labels, if any.
    pub fn predict(&mut self, s: &HpSetting) -> Result<(f64, Option<f64>)> {
        let seed = detector_seed(self.seed, self.runs as usize);
        self.runs += 1;
        let out = self.session.score(s, seed)?;
        let ranked = rank_normalize(&out.values);
        let ipm = extract_ipms(&ranked, &self.anchor_scores)?;
        let enc = hpspace::encode_with_hull(s, &self.meta.space, &self.hull);
        let pred = self.meta.ppe.predict(&feature_row(&enc, &self.mf, &ipm))?;
        let ap = match self.labels {
            Some(y) => Some(average_precision(&out.values, y)?),
            None => None,
        };
        Ok((pred, ap))
    }

    fn is_evaluated(&self, enc: &[f64]) -> bool {
        self.keys.contains(&key_of(enc))
    }

    /// Evaluates and records `s`; detector or model failures record `-∞`.
    fn evaluate(&mut self, s: &HpSetting) -> Result<(f64, Option<f64>)> {
        let enc = self.encode(s);
        let key = key_of(&enc);
        if !self.keys.insert(key.clone()) {
            return Err(Error::invalid("setting evaluated twice"));
        }
        let (pred, ap) = match self.predict(s) {
            Ok(v) => v,
            Err(e @ (Error::Detector(_) | Error::Numerical(_))) => {
                log::warn!("evaluation of {s} failed: {e}");
                (f64::NEG_INFINITY, None)
            }
            Err(e) => return Err(e),
        };
        let grid_index = self.grid_index(&key);
        self.evaluated.push(Evaluated { setting: s.clone(), enc, grid_index, pred });
        Ok((pred, ap))
    }

    fn incumbent(&self) -> Option<&Evaluated> {
        let mut best: Option<&Evaluated> = None;
        for e in &self.evaluated {
            if best.map_or(true, |b| e.pred > b.pred) {
                best = Some(e);
            }
        }
        best
    }

    fn fit_surrogate(&self) -> Result<GpModel> {
        let (xs, ys): (Vec<Vec<f64>>, Vec<f64>) =
            self.evaluated.iter().filter(|e| e.pred.is_finite()).map(|e| (e.enc.clone(), e.pred)).unzip();
        if ys.is_empty() {
            return Err(Error::Numerical("no successful evaluation to fit the surrogate".into()));
        }
        gp_fit(&xs, &ys)
    }

    /// Most similar meta-train dataset by weighted Kendall tau between its
    /// performance on the evaluated settings and their predicted performance.
    fn transfer_task(&self) -> Result<Option<(usize, f64)>> {
        let done: Vec<&Evaluated> = self.evaluated.iter().filter(|e| e.pred.is_finite()).collect();
        if done.len() < 2 {
            return Ok(None);
        }
        let preds: Vec<f64> = done.iter().map(|e| e.pred).collect();
        let mut best: Option<(usize, f64)> = None;
        for (i, t) in self.meta.surrogates.models.iter().enumerate() {
            let side = done
                .iter()
                .map(|e| match e.grid_index {
                    Some(j) => Ok(self.meta.perf.values[i][j]),
                    None => t.predict_mean(&e.enc),
                })
                .collect::<Result<Vec<f64>>>()?;
            let tau = weighted_kendall(&preds, &side)?;
            if best.map_or(true, |(_, b)| tau > b) {
                best = Some((i, tau));
            }
        }
        Ok(best)
    }

    fn record(&self, iter: usize, ap: Option<f64>, meta_task: Option<usize>, w: f64, ms: f64) -> TraceRecord {
        let last = self.evaluated.last().expect("record after an evaluation");
        let inc = self.incumbent().expect("non-empty evaluation set");
        TraceRecord {
            iter,
            setting: last.setting.clone(),
            pred_perf: last.pred,
            incumbent: inc.setting.clone(),
            incumbent_pred: inc.pred,
            meta_task,
            transfer_w: w,
            ms,
            true_ap: ap,
        }
    }
}

fn key_of(enc: &[f64]) -> Vec<u64> {
    enc.iter().map(|v| v.to_bits()).collect()
}

/// Grid indices of the `k` best settings of row `i` (ties → lower index).
pub fn top_grid_indices(row: &[f64], k: usize) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..row.len()).collect();
    idx.sort_by(|&a, &b| row[b].total_cmp(&row[a]).then(a.cmp(&b)));
    idx.truncate(k);
    idx
}

/// Initial settings, nearest meta-train dataset, and the init records.
pub fn online_init(
    ctx: &mut OnlineContext<'_>,
    opts: &HpodOptions,
    clock: &dyn Clock,
) -> Result<(GpModel, usize, Vec<TraceRecord>)> {
    let meta = ctx.meta;
    let m = meta.perf.cols();
    if opts.k_init == 0 || opts.k_init > m {
        return Err(Error::invalid(alloc::format!("k_init must lie in 1..={m}")));
    }
    let nearest = meta.nearest_dataset(&ctx.mf)?;
    let init: Vec<usize> = match opts.init {
        InitStrategy::Meta => top_grid_indices(&meta.perf.values[nearest], opts.k_init),
        InitStrategy::Random => {
            let mut r = rng::rng(rng::derive(opts.seed, STREAM_INIT));
            index::sample(&mut r, m, opts.k_init).into_vec()
        }
    };
    let mut records = Vec::with_capacity(init.len());
    for j in init {
        let s = meta.perf.grid[j].clone();
        if ctx.is_evaluated(&ctx.encode(&s)) {
            continue;
        }
        let (_, ap) = ctx.evaluate(&s)?;
        records.push(ctx.record(0, ap, Some(nearest), 0.0, clock.elapsed_ms()));
    }
    Ok((ctx.fit_surrogate()?, nearest, records))
}

/// Full HPOD search on an unlabeled matrix. `labels`, when given, only fill
/// the `true_ap` column of the trace.
pub fn hpod_optimize(meta: &MetaModel, x: &Matrix, labels: Option<&[u8]>, opts: &HpodOptions) -> Result<OptTrace> {
    hpod_optimize_with_clock(meta, x, labels, opts, &NoClock)
}

pub fn hpod_optimize_with_clock(
    meta: &MetaModel,
    x: &Matrix,
    labels: Option<&[u8]>,
    opts: &HpodOptions,
    clock: &dyn Clock,
) -> Result<OptTrace> {
    let mut ctx = OnlineContext::new(meta, x, labels, opts.seed)?;
    let (mut s, nearest, mut records) = online_init(&mut ctx, opts, clock)?;
    let mut acq_rng = rng::rng(rng::derive(opts.seed, STREAM_ACQ));
    let budget_ms = opts.budget_secs.map(|b| b * 1000.0);
    for e in 1..=opts.iters {
        if budget_ms.is_some_and(|b| clock.elapsed_ms() >= b) {
            break;
        }
        let (task, w) = match (opts.transfer, ctx.transfer_task()?) {
            (true, Some((i, tau))) => (Some(i), tau.clamp(0.0, 1.0)),
            _ => (None, 0.0),
        };
        let pool = candidate_pool(&ctx, opts, e)?;
        if pool.is_empty() {
            break;
        }
        let best = ctx.incumbent().map_or(f64::NEG_INFINITY, |b| b.pred);
        let pick = match opts.acquisition {
            Acquisition::Random => acq_rng.gen_range(0..pool.len()),
            acq => {
                let t = task.map(|i| &meta.surrogates.models[i]);
                let mut scored = Vec::with_capacity(pool.len());
                for (_, enc) in &pool {
                    let (u, sd) = match t {
                        Some(t) => transfer_predict(&s, t, w, enc)?,
                        None => s.predict(enc)?,
                    };
                    scored.push((u, sd));
                }
                let ei: Vec<f64> = scored.iter().map(|&(u, sd)| expected_improvement(u, sd, best)).collect();
                if acq == Acquisition::Ei && ei.iter().any(|&v| v > 0.0) {
                    argmax(&ei)
                } else {
                    // no candidate promises improvement: fall back to the mean
                    argmax(&scored.iter().map(|p| p.0).collect::<Vec<_>>())
                }
            }
        };
        let setting = pool[pick].0.clone();
        let (_, ap) = ctx.evaluate(&setting)?;
        records.push(ctx.record(e, ap, task, w, clock.elapsed_ms()));
        if ctx.evaluated.last().is_some_and(|l| l.pred.is_finite()) {
            s = ctx.fit_surrogate()?;
        }
    }
    finish(ctx, records, nearest)
}

fn finish(ctx: OnlineContext<'_>, records: Vec<TraceRecord>, nearest: usize) -> Result<OptTrace> {
    let inc = ctx.incumbent().ok_or_else(|| Error::invalid("nothing was evaluated"))?;
    if !inc.pred.is_finite() {
        return Err(Error::Numerical("every evaluation failed".into()));
    }
    Ok(OptTrace { selected: inc.setting.clone(), selected_pred: inc.pred, records, nearest_task: nearest })
}

/// Index of the first maximum.
fn argmax(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, x) in v.iter().enumerate() {
        if *x > v[best] {
            best = i;
        }
    }
    best
}

/// Grid plus fresh samples, deduplicated, sorted by encoding, minus
/// settings already evaluated.
fn candidate_pool(ctx: &OnlineContext<'_>, opts: &HpodOptions, e: usize) -> Result<Vec<(HpSetting, Vec<f64>)>> {
    let meta = ctx.meta;
    let mut pool: Vec<(HpSetting, Vec<f64>)> = meta.perf.grid.iter().map(|s| (s.clone(), ctx.encode(s))).collect();
    if opts.n_candidates > 0 {
        let seed = rng::derive(rng::derive(opts.seed, STREAM_CANDIDATES), e as u64);
        for s in hpspace::sample(&meta.space, &ctx.hull, opts.n_candidates, seed)? {
            let enc = ctx.encode(&s);
            pool.push((s, enc));
        }
    }
    pool.sort_by(|a, b| {
        a.1.iter()
            .zip(&b.1)
            .map(|(x, y)| x.total_cmp(y))
            .find(|o| o.is_ne())
            .unwrap_or(core::cmp::Ordering::Equal)
    });
    pool.dedup_by(|a, b| a.1 == b.1);
    pool.retain(|(_, enc)| !ctx.is_evaluated(enc));
    Ok(pool)
}

/// Evaluates `n_random` sampled settings and returns the best predicted one.
pub fn hpod0_optimize(meta: &MetaModel, x: &Matrix, labels: Option<&[u8]>, n_random: usize, seed: u64) -> Result<OptTrace> {
    if n_random == 0 {
        return Err(Error::invalid("n_random must be >= 1"));
    }
    let mut ctx = OnlineContext::new(meta, x, labels, seed)?;
    let nearest = meta.nearest_dataset(&ctx.mf)?;
    let hull = ctx.hull.clone();
    let mut records = Vec::new();
    for s in hpspace::sample(&meta.space, &hull, n_random, rng::derive(seed, STREAM_CANDIDATES))? {
        if ctx.is_evaluated(&ctx.encode(&s)) {
            continue;
        }
        let (_, ap) = ctx.evaluate(&s)?;
        records.push(ctx.record(0, ap, None, 0.0, 0.0));
    }
    finish(ctx, records, nearest)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn top_indices_break_ties_low() {
        assert_eq!(top_grid_indices(&[0.2, 0.9, 0.9, 0.1, 0.5], 3), vec![1, 2, 4]);
        assert_eq!(top_grid_indices(&[0.2, 0.9], 5), vec![1, 0]);
    }

    #[test]
    fn argmax_first() {
        assert_eq!(argmax(&[0.1, 0.4, 0.4, 0.2]), 1);
    }
}
