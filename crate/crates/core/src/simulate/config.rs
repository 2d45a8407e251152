use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{ensure_finite, Error, Result};
use crate::urn::{ModelKind, ReinforcementSpec};
use crate::{Real, Scalar};

/// Rule for the steps at which diagnostics are recorded.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(into = "String", try_from = "String")]
pub enum GridRule {
    /// `0, 1, 2, 4, 8, ...` plus the horizon.
    Pow2,
    /// Every `k` steps from 0, plus the horizon.
    Linear(u64),
}

impl GridRule {
    pub fn resolve(&self, horizon: u64) -> Vec<u64> {
        let mut grid = vec![0];
        match *self {
            GridRule::Pow2 => {
                let mut p = 1u64;
                while p <= horizon {
                    grid.push(p);
                    p = match p.checked_mul(2) {
                        Some(q) => q,
                        None => break,
                    };
                }
            }
            GridRule::Linear(k) => {
                let mut p = k;
                while p <= horizon {
                    grid.push(p);
                    p += k;
                }
            }
        }
        grid.push(horizon);
        grid.sort_unstable();
        grid.dedup();
        grid
    }
}

impl fmt::Display for GridRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GridRule::Pow2 => f.write_str("pow2"),
            GridRule::Linear(k) => write!(f, "linear:{k}"),
        }
    }
}

impl FromStr for GridRule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s == "pow2" {
            return Ok(GridRule::Pow2);
        }
        if let Some(k) = s.strip_prefix("linear:") {
            let k: u64 = k
                .parse()
                .map_err(|_| Error::Config(format!("bad grid spacing in `{s}`")))?;
            if k == 0 {
                return Err(Error::Config("grid spacing must be positive".into()));
            }
            return Ok(GridRule::Linear(k));
        }
        Err(Error::Config(format!("unknown grid rule `{s}` (expected pow2 or linear:K)")))
    }
}

impl From<GridRule> for String {
    fn from(g: GridRule) -> String {
        g.to_string()
    }
}

impl TryFrom<String> for GridRule {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

/// Levels `d < u` whose alternating passages are tracked online.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CrossingBand<T> {
    pub d: T,
    pub u: T,
}

pub const DEFAULT_GUARD_EPSILONS: [f64; 4] = [0.5, 0.1, 0.01, 0.001];

/// Everything that determines one replication.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(
    serialize = "T: Scalar + Serialize",
    deserialize = "T: Scalar + Deserialize<'de>"
))]
pub struct RunConfig<T> {
    pub model: ModelKind<T>,
    pub r1: ReinforcementSpec<T>,
    pub r2: ReinforcementSpec<T>,
    pub y1_0: T,
    pub y2_0: T,
    pub horizon: u64,
    /// Sorted, deduplicated steps in `[0, horizon]`.
    pub record_grid: Vec<u64>,
    pub a_n_alpha: T,
    pub a_n_c: T,
    pub seed: u64,
    pub replication_index: u64,
    /// Continue to `multiplier * horizon` to read off a limit proxy.
    pub proxy_multiplier: Option<u64>,
    pub crossing_band: Option<CrossingBand<T>>,
    pub guard_epsilons: Vec<T>,
}

impl<T: Real> RunConfig<T> {
    /// Defaults: `(y1_0, y2_0) = (1, 1)`, pow2 grid, `alpha = 1/4`, `C = 1`.
    pub fn new(model: ModelKind<T>, r1: ReinforcementSpec<T>, r2: ReinforcementSpec<T>, horizon: u64) -> Self {
        Self {
            model,
            r1,
            r2,
            y1_0: T::one(),
            y2_0: T::one(),
            horizon,
            record_grid: GridRule::Pow2.resolve(horizon),
            a_n_alpha: T::lit(0.25),
            a_n_c: T::one(),
            seed: 0,
            replication_index: 0,
            proxy_multiplier: None,
            crossing_band: None,
            guard_epsilons: DEFAULT_GUARD_EPSILONS.iter().map(|&e| T::lit(e)).collect(),
        }
    }

    pub fn with_initial(mut self, y1_0: T, y2_0: T) -> Self {
        self.y1_0 = y1_0;
        self.y2_0 = y2_0;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_replication(mut self, replication_index: u64) -> Self {
        self.replication_index = replication_index;
        self
    }

    pub fn with_grid(mut self, grid: impl IntoIterator<Item = u64>) -> Self {
        let mut g: Vec<u64> = grid.into_iter().collect();
        g.sort_unstable();
        g.dedup();
        self.record_grid = g;
        self
    }

    pub fn with_a_n(mut self, alpha: T, c: T) -> Self {
        self.a_n_alpha = alpha;
        self.a_n_c = c;
        self
    }

    pub fn with_proxy_multiplier(mut self, multiplier: u64) -> Self {
        self.proxy_multiplier = Some(multiplier);
        self
    }

    pub fn with_crossings(mut self, d: T, u: T) -> Self {
        self.crossing_band = Some(CrossingBand { d, u });
        self
    }

    /// Steps actually executed, including any proxy extension.
    pub fn total_steps(&self) -> u64 {
        self.horizon.saturating_mul(self.proxy_multiplier.unwrap_or(1))
    }

    /// Largest reinforcement any step can add.
    pub fn max_reinforcement(&self) -> T {
        self.r1.high().max(self.r2.high())
    }

    pub fn validate(&self) -> Result<()> {
        self.model.validate()?;
        ensure_finite("a_n_alpha", self.a_n_alpha)?;
        ensure_finite("a_n_c", self.a_n_c)?;
        if !(self.a_n_alpha > T::zero() && self.a_n_alpha < T::lit(0.5)) {
            return Err(Error::param("a_n_alpha", "must lie in (0, 1/2)"));
        }
        if !(self.a_n_c > T::zero()) {
            return Err(Error::param("a_n_c", "must be positive"));
        }
        crate::urn::UrnState::new(self.y1_0, self.y2_0)?;
        if self.record_grid.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::param("record_grid", "must be strictly increasing"));
        }
        if self.record_grid.last().is_some_and(|&n| n > self.horizon) {
            return Err(Error::param("record_grid", "points must not exceed the horizon"));
        }
        if let Some(k) = self.proxy_multiplier {
            if k < 2 {
                return Err(Error::param("proxy_multiplier", "must be at least 2"));
            }
            if self.horizon.checked_mul(k).is_none() {
                return Err(Error::param("proxy_multiplier", "horizon overflow"));
            }
        }
        if let Some(b) = self.crossing_band {
            if !(T::zero() < b.d && b.d < b.u && b.u < T::one()) {
                return Err(Error::param("crossing_band", "need 0 < d < u < 1"));
            }
        }
        if self.guard_epsilons.iter().any(|&e| !(e > T::zero() && e < T::one())) {
            return Err(Error::param("guard_epsilons", "each epsilon must lie in (0, 1)"));
        }
        Ok(())
    }
}
