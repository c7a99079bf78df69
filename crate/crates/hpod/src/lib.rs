//! Filesystem and process side of `hpod-core`: CSV datasets, corpus
//! directories, the versioned meta-model document, benchmark and trace
//! writers, and the fold-parallel leave-one-out runner used by the `hpod`
//! binary.

pub mod bench;
pub mod error;
pub mod io;
pub mod model;
pub mod report;

pub use error::{CliError, ExitCode};

use std::time::Instant;

use hpod_core::pipeline::Clock;

/// Wall clock started at construction.
#[derive(Debug, Clone, Copy)]
pub struct StdClock(Instant);

impl StdClock {
    pub fn start() -> Self {
        Self(Instant::now())
    }
}

impl Clock for StdClock {
    fn elapsed_ms(&self) -> f64 {
        self.0.elapsed().as_secs_f64() * 1000.0
    }
}
