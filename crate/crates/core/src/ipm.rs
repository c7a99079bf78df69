//! Consensus-based internal performance measures.
//!
//! All measures consume rank-normalized score vectors, so they are invariant
//! to strictly monotone transforms of a detector's raw scores:
//!
//! * **MC**: mean Spearman correlation between the candidate and each anchor.
//! * **SELECT**: correlation with a pruned consensus (anchors whose
//!   correlation with the plain consensus is at least the median).
//! * **HITS**: hub weight of the candidate in the bipartite models × points
//!   graph, found by power iteration and rescaled so the top model is 1.

use alloc::vec;
use alloc::vec::Vec;

use num_traits::Float;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hpspace::HpSetting;
use crate::stats::{self, average_ranks, pearson};

pub const IPM_LEN: usize = 3;

const HITS_TOL: f64 = 1e-9;
const HITS_MAX_ITER: usize = 100;
const ANCHOR_MIN_GAIN: f64 = 1e-4;

/// `[mc, select, hits]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IpmVector(pub [f64; IPM_LEN]);

impl IpmVector {
    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }
}

/// `(average rank − 1) / (n − 1)`, ascending; a single value maps to 0.
pub fn rank_normalize(scores: &[f64]) -> Vec<f64> {
    let n = scores.len();
    if n <= 1 {
        return vec![0.0; n];
    }
    average_ranks(scores).into_iter().map(|r| (r - 1.0) / (n - 1) as f64).collect()
}

fn check_anchors(candidate: &[f64], anchors: &[Vec<f64>]) -> Result<()> {
    if anchors.is_empty() {
        return Err(Error::invalid("at least one anchor is required"));
    }
    anchors.iter().try_for_each(|a| Error::check_len(candidate.len(), a.len()))
}

pub fn mc(candidate: &[f64], anchors: &[Vec<f64>]) -> Result<f64> {
    check_anchors(candidate, anchors)?;
    Ok(anchors.iter().map(|a| pearson(candidate, a)).sum::<f64>() / anchors.len() as f64)
}

fn elementwise_mean<'a>(rows: impl Iterator<Item = &'a Vec<f64>>, len: usize) -> Vec<f64> {
    let mut acc = vec![0.0; len];
    let mut count = 0usize;
    for r in rows {
        for (a, v) in acc.iter_mut().zip(r) {
            *a += v;
        }
        count += 1;
    }
    if count > 0 {
        acc.iter_mut().for_each(|a| *a /= count as f64);
    }
    acc
}

/// Anchors kept by the median filter of the two-phase consensus.
pub fn select_kept(anchors: &[Vec<f64>]) -> Vec<usize> {
    let len = anchors.first().map_or(0, Vec::len);
    let consensus = elementwise_mean(anchors.iter(), len);
    let corr: Vec<f64> = anchors.iter().map(|a| pearson(a, &consensus)).collect();
    let med = stats::median(&corr);
    (0..anchors.len()).filter(|&i| corr[i] >= med).collect()
}

pub fn select(candidate: &[f64], anchors: &[Vec<f64>]) -> Result<f64> {
    check_anchors(candidate, anchors)?;
    let kept = select_kept(anchors);
    let refined = elementwise_mean(kept.iter().map(|&i| &anchors[i]), candidate.len());
    Ok(pearson(candidate, &refined))
}

/// Outcome of the HITS power iteration.
#[derive(Debug, Clone, PartialEq)]
pub struct HitsResult {
    /// Hub weights of `[candidate, anchors...]`, rescaled so the maximum is 1.
    pub hubs: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
}

fn normalize(v: &mut [f64]) -> f64 {
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm > 0.0 {
        v.iter_mut().for_each(|x| *x /= norm);
    }
    norm
}

pub fn hits_detailed(candidate: &[f64], anchors: &[Vec<f64>]) -> Result<HitsResult> {
    check_anchors(candidate, anchors)?;
    let models: Vec<&[f64]> = core::iter::once(candidate).chain(anchors.iter().map(Vec::as_slice)).collect();
    let (r, p) = (models.len(), candidate.len());
    let mut hub = vec![1.0 / (r as f64).sqrt(); r];
    let mut auth = vec![0.0; p];
    let mut iterations = 0;
    let mut converged = false;
    while iterations < HITS_MAX_ITER {
        iterations += 1;
        auth.iter_mut().for_each(|a| *a = 0.0);
        for (h, row) in hub.iter().zip(&models) {
            for (a, s) in auth.iter_mut().zip(row.iter()) {
                *a += s * h;
            }
        }
        if normalize(&mut auth) == 0.0 {
            // all-zero matrix: every model is equally (un)supported
            return Ok(HitsResult { hubs: vec![1.0; r], iterations, converged: true });
        }
        let mut next: Vec<f64> = models.iter().map(|row| row.iter().zip(&auth).map(|(s, a)| s * a).sum()).collect();
        normalize(&mut next);
        let delta = next.iter().zip(&hub).fold(0.0, |m: f64, (a, b)| m.max((a - b).abs()));
        hub = next;
        if delta < HITS_TOL {
            converged = true;
            break;
        }
    }
    let max = hub.iter().copied().fold(0.0, f64::max);
    let hubs = hub.into_iter().map(|h| if max > 0.0 { (h / max).clamp(0.0, 1.0) } else { 1.0 }).collect();
    Ok(HitsResult { hubs, iterations, converged })
}

pub fn hits(candidate: &[f64], anchors: &[Vec<f64>]) -> Result<f64> {
    Ok(hits_detailed(candidate, anchors)?.hubs[0])
}

/// `[mc, select, hits]` of a rank-normalized candidate against cached anchor vectors.
pub fn extract_ipms(candidate: &[f64], anchors: &[Vec<f64>]) -> Result<IpmVector> {
    Ok(IpmVector([mc(candidate, anchors)?, select(candidate, anchors)?, hits(candidate, anchors)?]))
}

/// Small representative subset of the meta grid used as the IPM consensus.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnchorSet {
    pub grid_indices: Vec<usize>,
    pub settings: Vec<HpSetting>,
    /// Selection objective after each accepted step.
    pub objective_trace: Vec<f64>,
}

/// Centered, unit-norm copies so that a dot product is a Pearson correlation.
fn unit_centered(v: &[f64]) -> Vec<f64> {
    let m = stats::mean(v);
    let mut z: Vec<f64> = v.iter().map(|x| x - m).collect();
    normalize(&mut z);
    z
}

/// Greedy forward selection of anchor grid indices.
///
/// `perf[i][j]` is the true performance of grid model `j` on dataset `i`;
/// `grid_scores[i][j]` its rank-normalized score vector. The objective of a
/// tentative set is the mean over datasets of the Spearman correlation
/// between every grid model's MC value and its true performance.
pub fn build_anchor_set(perf: &[Vec<f64>], grid_scores: &[Vec<Vec<f64>>], max_size: usize) -> Result<(Vec<usize>, Vec<f64>)> {
    Error::check_len(perf.len(), grid_scores.len())?;
    let m = perf.first().map_or(0, Vec::len);
    if m == 0 || perf.is_empty() {
        return Err(Error::invalid("anchor selection needs a non-empty grid"));
    }
    for (p, g) in perf.iter().zip(grid_scores) {
        Error::check_len(m, p.len())?;
        Error::check_len(m, g.len())?;
    }
    // per-dataset grid correlation matrices
    let corr: Vec<Vec<f64>> = grid_scores
        .iter()
        .map(|models| {
            let z: Vec<Vec<f64>> = models.iter().map(|v| unit_centered(v)).collect();
            let mut c = vec![0.0; m * m];
            for j in 0..m {
                for k in j..m {
                    let v: f64 = z[j].iter().zip(&z[k]).map(|(a, b)| a * b).sum();
                    c[j * m + k] = v;
                    c[k * m + j] = v;
                }
            }
            c
        })
        .collect();
    let perf_ranks: Vec<Vec<f64>> = perf.iter().map(|p| average_ranks(p)).collect();
    let n = perf.len();
    let mut sums: Vec<Vec<f64>> = vec![vec![0.0; m]; n];
    let mut chosen: Vec<usize> = Vec::new();
    let mut trace: Vec<f64> = Vec::new();
    let mut current = f64::NEG_INFINITY;
    let mut buf = vec![0.0; m];
    while chosen.len() < max_size.max(1) && chosen.len() < m {
        let mut best: Option<(usize, f64)> = None;
        for cand in (0..m).filter(|c| !chosen.contains(c)) {
            let mut total = 0.0;
            for i in 0..n {
                for j in 0..m {
                    // the MC mean's 1/|A| factor does not change ranks
                    buf[j] = sums[i][j] + corr[i][j * m + cand];
                }
                total += pearson(&average_ranks(&buf), &perf_ranks[i]);
            }
            let obj = total / n as f64;
            if best.map_or(true, |(_, b)| obj > b) {
                best = Some((cand, obj));
            }
        }
        let Some((cand, obj)) = best else { break };
        if obj - current < ANCHOR_MIN_GAIN {
            break;
        }
        for i in 0..n {
            for j in 0..m {
                sums[i][j] += corr[i][j * m + cand];
            }
        }
        chosen.push(cand);
        trace.push(obj);
        current = obj;
    }
    Ok((chosen, trace))
}
