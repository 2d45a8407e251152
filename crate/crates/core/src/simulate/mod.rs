//! Trajectory execution: single, coupled and batched runs.

mod batch;
mod config;
mod record;
mod runner;

pub use batch::{config_hash, map_replications, run_batch, Batch, BatchFailure, BatchManifest, VERSION};
pub use config::{CrossingBand, GridRule, RunConfig, DEFAULT_GUARD_EPSILONS};
pub use record::{
    detect_crossings, CrossingDetector, CrossingRecord, Extension, GridPoint, Passage, TrajectoryRecord,
};
pub use runner::{run_coupled, run_trajectory, CoupledRun, Draw};
