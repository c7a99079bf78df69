#![allow(dead_code)]

use hpod_core::rng;
use hpod_core::{Corpus, Dataset, Matrix};
use rand::Rng;
use rand_distr::StandardNormal;

/// Gaussian blob of `n - n_out` inliers plus `n_out` shifted outliers placed
/// last. Outliers sit on a sphere of radius `radius` around the origin.
pub fn planted(n: usize, d: usize, n_out: usize, radius: f64, seed: u64) -> (Matrix, Vec<u8>) {
    let mut r = rng::rng(seed);
    let mut data = Vec::with_capacity(n * d);
    for i in 0..n {
        let mut row: Vec<f64> = (0..d).map(|_| r.sample::<f64, _>(StandardNormal)).collect();
        if i >= n - n_out {
            let norm = row.iter().map(|v| v * v).sum::<f64>().sqrt().max(1e-9);
            row.iter_mut().for_each(|v| *v *= radius / norm);
        }
        data.extend(row);
    }
    let labels = (0..n).map(|i| u8::from(i >= n - n_out)).collect();
    (Matrix::from_vec(n, d, data).unwrap(), labels)
}

/// Two-cluster dataset with a few scattered outliers; shape and spread vary
/// with `seed` so the meta-features differ across a corpus.
pub fn toy_dataset(name: &str, seed: u64) -> Dataset {
    let mut r = rng::rng(seed);
    let n = r.gen_range(60..110);
    let d = r.gen_range(2..6);
    let n_out = r.gen_range(4..9);
    let gap = r.gen_range(2.0..6.0);
    let spread: f64 = r.gen_range(0.3..1.5);
    let mut data = Vec::with_capacity(n * d);
    let mut y = Vec::with_capacity(n);
    for i in 0..n {
        let outlier = i % (n / n_out) == 0 && y.iter().filter(|&&v| v == 1).count() < n_out;
        let center = if i % 2 == 0 { 0.0 } else { gap };
        for _ in 0..d {
            let z: f64 = r.sample(StandardNormal);
            data.push(if outlier { r.gen_range(-3.0..3.0) * (gap + 4.0) } else { center + spread * z });
        }
        y.push(u8::from(outlier));
    }
    Dataset::new(name, Matrix::from_vec(n, d, data).unwrap(), Some(y)).unwrap()
}

pub fn toy_corpus(k: usize, seed: u64) -> Corpus {
    Corpus::new((0..k).map(|i| toy_dataset(&format!("toy{i}"), rng::derive(seed, i as u64))).collect()).unwrap()
}
