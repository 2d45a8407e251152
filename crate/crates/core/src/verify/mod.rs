//! Named verification suites with pre-registered pass thresholds.
//!
//! An acceptance file (TOML) binds each suite id to its experiment configs
//! and thresholds; this module only evaluates, never tunes.

mod plan;
mod report;
mod suites;

pub use plan::{plan_indicator_replications, plan_replications, IndicatorPlan, REPLICATION_CAP};
pub use report::{CriterionRow, Relation, SuiteReport, Verdict, VerifyReport};

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::config::ExperimentConfig;
use crate::error::{Error, Result};

/// The acceptance file shipped with the crate.
pub const DEFAULT_ACCEPTANCE: &str = include_str!("../../acceptance.toml");

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum SuiteId {
    T1,
    T2,
    T3,
    T4,
    T5,
    T6,
    T7,
    T8,
    T9,
    T10,
}

impl SuiteId {
    pub const ALL: [SuiteId; 10] = [
        SuiteId::T1,
        SuiteId::T2,
        SuiteId::T3,
        SuiteId::T4,
        SuiteId::T5,
        SuiteId::T6,
        SuiteId::T7,
        SuiteId::T8,
        SuiteId::T9,
        SuiteId::T10,
    ];

    pub fn index(self) -> u64 {
        self as u64 + 1
    }
}

impl fmt::Display for SuiteId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "T{}", self.index())
    }
}

impl FromStr for SuiteId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        SuiteId::ALL
            .into_iter()
            .find(|id| id.to_string().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::Config(format!("unknown suite `{s}` (expected T1..T10)")))
    }
}

impl TryFrom<String> for SuiteId {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<SuiteId> for String {
    fn from(id: SuiteId) -> String {
        id.to_string()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SuiteSpec {
    /// Result under test, as a short citation.
    pub theorem: String,
    pub configs: BTreeMap<String, ExperimentConfig>,
    /// Variants outside the result's hypotheses; reported, never graded.
    #[serde(default)]
    pub informational: BTreeMap<String, ExperimentConfig>,
    pub thresholds: BTreeMap<String, f64>,
}

impl SuiteSpec {
    pub fn threshold(&self, key: &str) -> Result<f64> {
        self.thresholds
            .get(key)
            .copied()
            .ok_or_else(|| Error::Config(format!("missing threshold `{key}`")))
    }

    pub fn config(&self, key: &str) -> Result<&ExperimentConfig> {
        self.configs.get(key).ok_or_else(|| Error::Config(format!("missing config `{key}`")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Meta {
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AcceptanceFile {
    pub meta: Meta,
    pub suites: BTreeMap<SuiteId, SuiteSpec>,
}

impl AcceptanceFile {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let file: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        for (id, suite) in &file.suites {
            if suite.configs.is_empty() {
                return Err(Error::Config(format!("suite {id} declares no configs")));
            }
            if suite.thresholds.is_empty() {
                return Err(Error::Config(format!("suite {id} declares no thresholds")));
            }
        }
        Ok(file)
    }

    /// SHA-256 of the canonical JSON rendering.
    pub fn config_hash(&self) -> String {
        use sha2::{Digest, Sha256};
        let json = serde_json::to_vec(self).expect("acceptance files always serialize");
        hex::encode(Sha256::digest(json))
    }

    pub fn builtin() -> Self {
        Self::from_toml_str(DEFAULT_ACCEPTANCE).expect("bundled acceptance file parses")
    }

    pub fn suite(&self, id: SuiteId) -> Result<&SuiteSpec> {
        self.suites
            .get(&id)
            .ok_or_else(|| Error::Config(format!("acceptance file has no suite {id}")))
    }
}

/// Seed for the `k`-th config (in name order) of suite `id`.
pub fn suite_seed(base: u64, id: SuiteId, k: usize) -> u64 {
    base.wrapping_add(100 * id.index()).wrapping_add(k as u64)
}

/// Runs one suite. `Err` means the suite could not be evaluated, which is
/// distinct from a failed criterion.
pub fn run_suite(id: SuiteId, spec: &SuiteSpec, seed: u64, parallelism: usize) -> Result<SuiteReport> {
    let ctx = suites::Context::new(id, spec, seed, parallelism);
    let rows = suites::run(&ctx)?;
    Ok(SuiteReport::new(id, spec.theorem.clone(), ctx.hashes(), rows))
}

/// Runs the selected suites in id order; `seed` overrides the file's seed.
pub fn run_selected(
    file: &AcceptanceFile,
    selection: &[SuiteId],
    seed: Option<u64>,
    parallelism: usize,
) -> Result<VerifyReport> {
    let base = seed.unwrap_or(file.meta.seed);
    let mut ids = selection.to_vec();
    ids.sort();
    ids.dedup();
    let mut reports = Vec::with_capacity(ids.len());
    for id in ids {
        let spec = file.suite(id)?;
        let report = run_suite(id, spec, base, parallelism).map_err(|e| Error::Suite {
            suite: id.to_string(),
            source: Box::new(e),
        })?;
        reports.push(report);
    }
    Ok(VerifyReport::new(base, reports))
}
