//! TOML experiment files shared by the command line and the verifier.
//!
//! ```toml
//! seed = 7
//! replications = 100
//! horizon = 10000
//! grid = "pow2"            # or "linear:500"
//! grid_extra = [2001]
//! proxy_multiplier = 16
//!
//! [model]
//! kind = "arru"            # rru | mrru (with rho1, rho2) | arru
//! [model.policy]
//! kind = "adaptive-mean-map"
//! offset = 0.5
//! slope = 0.3
//! gap = 0.4
//!
//! [red]
//! kind = "uniform"
//! low = 1.0
//! high = 3.0
//! [white]
//! kind = "point-mass"
//! value = 1.0
//! ```

use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::simulate::{CrossingBand, GridRule, RunConfig};
use crate::thresholds::{ThresholdPolicy, DEFAULT_MAP, DEFAULT_RHO_RANGE};
use crate::urn::{ModelKind, ReinforcementKind, ReinforcementSpec};

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelName {
    Rru,
    Mrru,
    Arru,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PolicyName {
    Fixed,
    AdaptiveMeanMap,
    NoisyConvergent,
    AdversarialExcursion,
}

/// Policy section; which keys are required depends on `kind`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PolicyConfig {
    pub kind: PolicyName,
    pub rho1: Option<f64>,
    pub rho2: Option<f64>,
    pub offset: Option<f64>,
    pub slope: Option<f64>,
    pub gap: Option<f64>,
    pub scale: Option<f64>,
    pub c_rho: Option<f64>,
    pub rho_min: Option<f64>,
    pub rho_max: Option<f64>,
}

impl PolicyConfig {
    fn need(v: Option<f64>, key: &str, kind: &str) -> Result<f64> {
        v.ok_or_else(|| Error::Config(format!("policy `{kind}` needs `{key}`")))
    }

    pub fn build(&self, m1: f64, m2: f64) -> Result<ThresholdPolicy<f64>> {
        let rho_min = self.rho_min.unwrap_or(DEFAULT_RHO_RANGE.0);
        let rho_max = self.rho_max.unwrap_or(DEFAULT_RHO_RANGE.1);
        match self.kind {
            PolicyName::Fixed => ThresholdPolicy::fixed(
                Self::need(self.rho1, "rho1", "fixed")?,
                Self::need(self.rho2, "rho2", "fixed")?,
            ),
            PolicyName::AdaptiveMeanMap => ThresholdPolicy::adaptive_mean_map(
                self.offset.unwrap_or(DEFAULT_MAP.0),
                self.slope.unwrap_or(DEFAULT_MAP.1),
                self.gap.unwrap_or(DEFAULT_MAP.2),
                rho_min,
                rho_max,
                m1,
                m2,
            ),
            PolicyName::NoisyConvergent => ThresholdPolicy::noisy_convergent(
                Self::need(self.rho1, "rho1", "noisy-convergent")?,
                Self::need(self.rho2, "rho2", "noisy-convergent")?,
                Self::need(self.scale, "scale", "noisy-convergent")?,
                rho_min,
                rho_max,
            ),
            PolicyName::AdversarialExcursion => ThresholdPolicy::adversarial_excursion(
                Self::need(self.rho1, "rho1", "adversarial-excursion")?,
                Self::need(self.rho2, "rho2", "adversarial-excursion")?,
                rho_min,
                rho_max,
                self.c_rho.unwrap_or(1.0),
            ),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    pub kind: ModelName,
    pub rho1: Option<f64>,
    pub rho2: Option<f64>,
    /// ARRU only; defaults to the adaptive mean map.
    pub policy: Option<PolicyConfig>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnConfig {
    pub alpha: f64,
    pub c: f64,
}

impl Default for AnConfig {
    fn default() -> Self {
        Self { alpha: 0.25, c: 1.0 }
    }
}

fn default_cap() -> usize {
    256
}

/// Axes of a Cartesian-product sweep; an empty axis keeps the base value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    #[serde(default)]
    pub horizon: Vec<u64>,
    /// Red law is the white law shifted up by this amount.
    #[serde(default)]
    pub mean_gap: Vec<f64>,
    #[serde(default)]
    pub alpha: Vec<f64>,
    #[serde(default)]
    pub c: Vec<f64>,
    /// Largest number of axis points accepted.
    #[serde(default = "default_cap")]
    pub cap: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub horizon: u64,
    pub mean_gap: Option<f64>,
    pub alpha: f64,
    pub c: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_reps")]
    pub replications: u64,
    pub horizon: u64,
    #[serde(default)]
    pub grid: Option<GridRule>,
    #[serde(default)]
    pub grid_extra: Vec<u64>,
    #[serde(default = "one")]
    pub y1_0: f64,
    #[serde(default = "one")]
    pub y2_0: f64,
    #[serde(default)]
    pub proxy_multiplier: Option<u64>,
    pub model: ModelConfig,
    pub red: ReinforcementKind<f64>,
    pub white: ReinforcementKind<f64>,
    #[serde(default)]
    pub a_n: AnConfig,
    #[serde(default)]
    pub crossings: Option<CrossingBand<f64>>,
    #[serde(default)]
    pub sweep: Option<SweepConfig>,
}

fn default_reps() -> u64 {
    1
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.run_config()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::from_toml_str(&text)
    }

    pub fn reinforcements(&self) -> Result<(ReinforcementSpec<f64>, ReinforcementSpec<f64>)> {
        Ok((ReinforcementSpec::new(self.red)?, ReinforcementSpec::new(self.white)?))
    }

    pub fn model_kind(&self) -> Result<ModelKind<f64>> {
        let (r1, r2) = self.reinforcements()?;
        match self.model.kind {
            ModelName::Rru => Ok(ModelKind::Rru),
            ModelName::Mrru => {
                let get = |v: Option<f64>, k: &str| {
                    v.ok_or_else(|| Error::Config(format!("model `mrru` needs `{k}`")))
                };
                ModelKind::mrru(get(self.model.rho1, "rho1")?, get(self.model.rho2, "rho2")?)
            }
            ModelName::Arru => {
                let policy = match &self.model.policy {
                    Some(p) => p.build(r1.mean(), r2.mean())?,
                    None => ThresholdPolicy::adaptive_mean_map(
                        DEFAULT_MAP.0,
                        DEFAULT_MAP.1,
                        DEFAULT_MAP.2,
                        DEFAULT_RHO_RANGE.0,
                        DEFAULT_RHO_RANGE.1,
                        r1.mean(),
                        r2.mean(),
                    )?,
                };
                Ok(ModelKind::Arru { policy })
            }
        }
    }

    pub fn grid_rule(&self) -> GridRule {
        self.grid.clone().unwrap_or(GridRule::Pow2)
    }

    /// Template for replication 0.
    pub fn run_config(&self) -> Result<RunConfig<f64>> {
        let (r1, r2) = self.reinforcements()?;
        let grid = self
            .grid_rule()
            .resolve(self.horizon)
            .into_iter()
            .chain(self.grid_extra.iter().copied());
        let mut cfg = RunConfig::new(self.model_kind()?, r1, r2, self.horizon)
            .with_initial(self.y1_0, self.y2_0)
            .with_grid(grid)
            .with_a_n(self.a_n.alpha, self.a_n.c)
            .with_seed(self.seed);
        cfg.proxy_multiplier = self.proxy_multiplier;
        if let Some(b) = self.crossings {
            cfg = cfg.with_crossings(b.d, b.u);
        }
        cfg.validate()?;
        Ok(cfg)
    }

    /// Canonical JSON rendering; insensitive to key order and formatting.
    pub fn canonical_json(&self) -> String {
        serde_json::to_string(self).expect("experiment configs always serialize")
    }

    pub fn config_hash(&self) -> String {
        hex::encode(Sha256::digest(self.canonical_json().as_bytes()))
    }

    pub fn sweep_points(&self) -> Result<Vec<SweepPoint>> {
        let empty = SweepConfig {
            horizon: Vec::new(),
            mean_gap: Vec::new(),
            alpha: Vec::new(),
            c: Vec::new(),
            cap: default_cap(),
        };
        let sweep = self.sweep.as_ref().unwrap_or(&empty);
        let or = |v: &Vec<f64>, base: f64| if v.is_empty() { vec![base] } else { v.clone() };
        let horizons = if sweep.horizon.is_empty() { vec![self.horizon] } else { sweep.horizon.clone() };
        let gaps: Vec<Option<f64>> =
            if sweep.mean_gap.is_empty() { vec![None] } else { sweep.mean_gap.iter().map(|&g| Some(g)).collect() };
        let alphas = or(&sweep.alpha, self.a_n.alpha);
        let cs = or(&sweep.c, self.a_n.c);
        let total = horizons.len() * gaps.len() * alphas.len() * cs.len();
        if total > sweep.cap {
            return Err(Error::Config(format!("sweep has {total} points, above the cap of {}", sweep.cap)));
        }
        let mut points = Vec::with_capacity(total);
        for &horizon in &horizons {
            for &mean_gap in &gaps {
                for &alpha in &alphas {
                    for &c in &cs {
                        points.push(SweepPoint { horizon, mean_gap, alpha, c });
                    }
                }
            }
        }
        Ok(points)
    }

    /// The base experiment moved to one sweep point.
    pub fn at_point(&self, p: &SweepPoint) -> Result<Self> {
        let mut cfg = self.clone();
        cfg.horizon = p.horizon;
        cfg.a_n = AnConfig { alpha: p.alpha, c: p.c };
        cfg.grid_extra.retain(|&n| n <= p.horizon);
        if let Some(gap) = p.mean_gap {
            let white = ReinforcementSpec::new(self.white)?;
            cfg.red = *white.shifted(gap)?.kind();
        }
        cfg.sweep = None;
        cfg.run_config()?;
        Ok(cfg)
    }
}
