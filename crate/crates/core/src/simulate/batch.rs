use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::config::RunConfig;
use super::record::TrajectoryRecord;
use super::runner::run_trajectory;
use crate::error::{Error, Result};
use crate::Real;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BatchManifest {
    /// SHA-256 of the template's canonical JSON, replication index zeroed.
    pub config_hash: String,
    pub seed: u64,
    pub replications: u64,
    pub replication_indices: Vec<u64>,
    pub version: String,
    /// False when any replication failed and the batch is partial.
    pub authoritative: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Batch<R> {
    pub records: Vec<R>,
    pub manifest: BatchManifest,
}

/// A batch in which at least one replication failed.
#[derive(Debug, thiserror::Error)]
#[error("{} of {} replications failed; first: {}", .failures.len(), .partial.manifest.replications, .failures[0].1)]
pub struct BatchFailure<R: std::fmt::Debug> {
    pub failures: Vec<(u64, Error)>,
    /// Completed replications, flagged non-authoritative.
    pub partial: Batch<R>,
}

impl<R: std::fmt::Debug> BatchFailure<R> {
    pub fn into_error(mut self) -> Error {
        let (replication, source) = self.failures.swap_remove(0);
        Error::Replication { replication, source: Box::new(source) }
    }
}

pub fn config_hash<T: Real + Serialize>(template: &RunConfig<T>) -> String {
    let mut canonical = template.clone();
    canonical.replication_index = 0;
    let json = serde_json::to_vec(&canonical).expect("run configs always serialize");
    hex::encode(Sha256::digest(json))
}

/// Runs `f` on replications `0..replications` of `template`.
///
/// Results are ordered by replication index, independent of `parallelism`.
pub fn map_replications<T, R, F>(
    template: &RunConfig<T>,
    replications: u64,
    parallelism: usize,
    f: F,
) -> std::result::Result<Batch<R>, BatchFailure<R>>
where
    T: Real + Serialize,
    R: Send + std::fmt::Debug,
    F: Fn(&RunConfig<T>) -> Result<R> + Sync,
{
    let mut manifest = BatchManifest {
        config_hash: config_hash(template),
        seed: template.seed,
        replications,
        replication_indices: Vec::new(),
        version: VERSION.to_string(),
        authoritative: true,
    };
    let fail = |manifest: BatchManifest, e: Error| BatchFailure {
        failures: vec![(0, e)],
        partial: Batch { records: Vec::new(), manifest: BatchManifest { authoritative: false, ..manifest } },
    };
    if replications == 0 {
        return Err(fail(manifest, Error::param("replications", "must be at least 1")));
    }
    if let Err(e) = template.validate() {
        return Err(fail(manifest, e));
    }

    let run_one = |r: u64| {
        let mut cfg = template.clone();
        cfg.replication_index = r;
        (r, f(&cfg))
    };
    let outcomes: Vec<(u64, Result<R>)> = if parallelism <= 1 {
        (0..replications).map(run_one).collect()
    } else {
        match rayon::ThreadPoolBuilder::new().num_threads(parallelism).build() {
            Ok(pool) => pool.install(|| (0..replications).into_par_iter().map(run_one).collect()),
            Err(e) => return Err(fail(manifest, Error::Config(format!("thread pool: {e}")))),
        }
    };

    let mut records = Vec::with_capacity(outcomes.len());
    let mut failures = Vec::new();
    for (r, outcome) in outcomes {
        match outcome {
            Ok(rec) => {
                manifest.replication_indices.push(r);
                records.push(rec);
            }
            Err(e) => failures.push((r, e)),
        }
    }
    if failures.is_empty() {
        Ok(Batch { records, manifest })
    } else {
        manifest.authoritative = false;
        Err(BatchFailure { failures, partial: Batch { records, manifest } })
    }
}

/// Independent replications of `template`, keyed by `(seed, r)`.
pub fn run_batch<T: Real + Serialize>(
    template: &RunConfig<T>,
    replications: u64,
    parallelism: usize,
) -> std::result::Result<Batch<TrajectoryRecord<T>>, BatchFailure<TrajectoryRecord<T>>> {
    map_replications(template, replications, parallelism, run_trajectory)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::urn::{ModelKind, ReinforcementSpec};

    fn template() -> RunConfig<f64> {
        let r = ReinforcementSpec::uniform(1.0, 3.0).unwrap();
        RunConfig::new(ModelKind::Rru, r, r, 200).with_seed(42)
    }

    #[test]
    fn manifest_lists_replications() {
        let b = run_batch(&template(), 3, 1).unwrap();
        assert_eq!(b.manifest.replication_indices, vec![0, 1, 2]);
        assert_eq!(b.records.iter().map(|r| r.replication).collect::<Vec<_>>(), vec![0, 1, 2]);
        assert!(b.manifest.authoritative);
        assert_eq!(b.manifest.config_hash.len(), 64);
    }

    #[test]
    fn parallelism_does_not_change_output() {
        let a = serde_json::to_string(&run_batch(&template(), 6, 1).unwrap()).unwrap();
        let b = serde_json::to_string(&run_batch(&template(), 6, 4).unwrap()).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn failures_are_flagged() {
        let err = map_replications(&template(), 4, 1, |c| {
            if c.replication_index == 2 {
                Err(Error::FrozenUrn)
            } else {
                Ok(c.replication_index)
            }
        })
        .unwrap_err();
        assert!(!err.partial.manifest.authoritative);
        assert_eq!(err.partial.records, vec![0, 1, 3]);
        assert_eq!(err.failures[0].0, 2);
        assert!(matches!(err.into_error(), Error::Replication { replication: 2, .. }));
    }

    #[test]
    fn zero_replications_rejected() {
        assert!(run_batch(&template(), 0, 1).is_err());
    }
}
