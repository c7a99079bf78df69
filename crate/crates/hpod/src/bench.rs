//! Parallel drivers: grid scoring per dataset and leave-one-out folds run
//! on the rayon pool. Results are collected in corpus order, so output is
//! identical to the sequential core functions.

use hpod_core::eval::{assemble_report, run_fold, BenchmarkReport, Method, MethodParams};
use hpod_core::pipeline::{evaluate_grid, meta_train_from_evaluations, GridEvaluation};
use hpod_core::{Corpus, DetectorSpec, HpSetting, HpSpace, MetaModel, Result};
use rayon::prelude::*;

pub fn evaluate_corpus(corpus: &Corpus, space: &HpSpace, grid: &[HpSetting], seed: u64) -> Result<Vec<GridEvaluation>> {
    corpus.datasets().par_iter().map(|ds| evaluate_grid(ds, space, grid, seed)).collect()
}

/// Same result as `offline_meta_train`, with datasets scored in parallel.
pub fn meta_train(corpus: &Corpus, spec: &DetectorSpec, grid: &[HpSetting], seed: u64) -> Result<MetaModel> {
    let evals = evaluate_corpus(corpus, &spec.space, grid, seed)?;
    let refs: Vec<&GridEvaluation> = evals.iter().collect();
    meta_train_from_evaluations(&refs, &spec.space, grid, seed)
}

/// Same result as `loocv_benchmark`, with datasets and folds in parallel.
pub fn loocv(
    corpus: &Corpus,
    spec: &DetectorSpec,
    grid: &[HpSetting],
    methods: &[Method],
    trials: usize,
    seed: u64,
    params: &MethodParams,
) -> Result<BenchmarkReport> {
    if corpus.len() < 3 {
        return Err(hpod_core::Error::InvalidInput("leave-one-out benchmark needs at least 3 datasets".into()));
    }
    if methods.is_empty() {
        return Err(hpod_core::Error::InvalidInput("no methods to benchmark".into()));
    }
    let evals = evaluate_corpus(corpus, &spec.space, grid, seed)?;
    let folds: Vec<_> = (0..corpus.len())
        .into_par_iter()
        .map(|held| {
            let rows = run_fold(corpus, spec, &evals, held, grid, methods, trials, seed, params);
            if rows.is_ok() {
                log::info!("fold {} ({}) done", held, corpus.datasets()[held].name);
            }
            rows
        })
        .collect::<Result<Vec<_>>>()?;
    assemble_report(folds.into_iter().flatten().collect(), methods, trials, seed)
}
