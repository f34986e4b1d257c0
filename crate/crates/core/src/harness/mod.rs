//! Configuration, orchestration and output of simulation runs, sweeps and
//! theory comparisons.

pub mod compare;
pub mod config;
mod io;
pub mod run;
pub mod stats;

pub use compare::{compare_theory, ComparisonRow, Profile};
pub use config::{Engine, RunConfig};
pub use io::{sha256_hex, write_atomic, FileEntry};
pub use run::{
    replay_manifest, run_ensemble, simulate, sweep, EnsembleResult, RunManifest, RunSummary,
    SweepReport,
};
