//! Meta-learned hyperparameter optimization for unsupervised outlier detection.
//!
//! This crate holds the algorithmic core and builds with `no_std` + `alloc`:
//! detectors (LOF, isolation forest), dataset meta-features, consensus-based
//! internal performance measures, the gradient-boosted proxy performance
//! evaluator, Gaussian-process surrogates with expected improvement and
//! surrogate transfer, the offline/online optimization pipeline, and the
//! evaluation protocol (metrics, Wilcoxon test, baselines, leave-one-out
//! benchmark).
//!
//! File formats, CSV ingestion and the command-line interface live in the
//! `hpod` companion crate.

#![no_std]
// The `Float` imports are required without std but reported unused once
// num-traits' `std` feature is unified in through dev-dependencies.
#![allow(unused_imports)]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod data;
pub mod detectors;
pub mod error;
pub mod eval;
pub mod hpspace;
pub mod ipm;
pub mod matrix;
pub mod metafeatures;
pub mod pipeline;
pub mod ppe;
pub mod rng;
pub mod stats;
pub mod surrogate;

pub use data::{standardize, Corpus, Dataset};
pub use detectors::{Algorithm, DetectorSpec, OutlierScores, ScoringSession};
pub use error::{Error, Result};
pub use hpspace::{HpDomain, HpEncoding, HpSetting, HpSpace, HpValue, DomainKind};
pub use matrix::Matrix;
pub use pipeline::{
    HpodOptions, MetaModel, OptTrace, PerfMatrix, TraceRecord, Acquisition, InitStrategy,
};
