use std::fmt;

use serde::de::{self, Deserializer, Visitor};
use serde::ser::Serializer;
use serde::{Deserialize, Serialize};

use crate::urn::UrnState;

/// A passage time, or `+inf` when the passage never happened.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Passage {
    At(u64),
    Never,
}

impl Passage {
    pub fn step(self) -> Option<u64> {
        match self {
            Passage::At(n) => Some(n),
            Passage::Never => None,
        }
    }

    pub fn is_finite(self) -> bool {
        matches!(self, Passage::At(_))
    }
}

impl fmt::Display for Passage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Passage::At(n) => write!(f, "{n}"),
            Passage::Never => f.write_str("inf"),
        }
    }
}

impl Serialize for Passage {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            Passage::At(n) => s.serialize_u64(*n),
            Passage::Never => s.serialize_str("inf"),
        }
    }
}

impl<'de> Deserialize<'de> for Passage {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        struct V;
        impl Visitor<'_> for V {
            type Value = Passage;

            fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str("a step index or \"inf\"")
            }

            fn visit_u64<E: de::Error>(self, v: u64) -> Result<Passage, E> {
                Ok(Passage::At(v))
            }

            fn visit_i64<E: de::Error>(self, v: i64) -> Result<Passage, E> {
                u64::try_from(v).map(Passage::At).map_err(E::custom)
            }

            fn visit_str<E: de::Error>(self, v: &str) -> Result<Passage, E> {
                if v == "inf" {
                    Ok(Passage::Never)
                } else {
                    Err(E::invalid_value(de::Unexpected::Str(v), &self))
                }
            }
        }
        d.deserialize_any(V)
    }
}

/// The `j`-th up-crossing of `u` and the following down-crossing of `d`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CrossingRecord<T> {
    pub j: u64,
    pub t: Passage,
    pub tau: Passage,
    pub d: T,
    pub u: T,
    /// Total mass at the up-crossing, when it was observed online.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub y_at_t: Option<T>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridPoint<T> {
    pub n: u64,
    pub z: T,
    pub y: T,
    pub n1: u64,
    pub in_a_n: bool,
    pub w1: bool,
    pub w2: bool,
    pub rho1_hat: T,
    pub rho2_hat: T,
}

/// State reached by continuing a run past its horizon.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Extension<T> {
    pub multiplier: u64,
    pub n: u64,
    pub z: T,
    pub y: T,
    pub n1: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryRecord<T> {
    pub replication: u64,
    pub seed: u64,
    pub points: Vec<GridPoint<T>>,
    pub crossings: Vec<CrossingRecord<T>>,
    pub guard_checks: u64,
    pub guard_violations: u64,
    pub growth_violations: u64,
    pub order_violations: u64,
    /// Steps in which the drawn color actually received mass.
    pub reinforced_steps: u64,
    /// State at the horizon; later steps only feed `extension`.
    pub final_state: UrnState<T>,
    pub extension: Option<Extension<T>>,
}

impl<T: Copy> TrajectoryRecord<T> {
    pub fn point_at(&self, n: u64) -> Option<&GridPoint<T>> {
        self.points
            .binary_search_by_key(&n, |p| p.n)
            .ok()
            .map(|i| &self.points[i])
    }
}

/// Alternating first-passage scan of `z_path` with strict inequalities.
///
/// Only crossings whose up-passage happened are listed; a missing
/// down-passage is reported as [`Passage::Never`].
pub fn detect_crossings<T: PartialOrd + Copy>(z_path: &[T], d: T, u: T) -> Vec<CrossingRecord<T>> {
    let mut detector = CrossingDetector::new(d, u);
    for (n, &z) in z_path.iter().enumerate() {
        detector.observe(n as u64, z, None);
    }
    detector.finish()
}

/// Online form of [`detect_crossings`].
#[derive(Debug, Clone)]
pub struct CrossingDetector<T> {
    d: T,
    u: T,
    awaiting_down: bool,
    records: Vec<CrossingRecord<T>>,
}

impl<T: PartialOrd + Copy> CrossingDetector<T> {
    pub fn new(d: T, u: T) -> Self {
        Self { d, u, awaiting_down: false, records: Vec::new() }
    }

    /// Feeds `Z_n`; returns the index of a newly started crossing.
    pub fn observe(&mut self, n: u64, z: T, y: Option<T>) -> Option<usize> {
        if self.awaiting_down {
            if z < self.d {
                if let Some(last) = self.records.last_mut() {
                    last.tau = Passage::At(n);
                }
                self.awaiting_down = false;
            }
            None
        } else if z > self.u {
            self.records.push(CrossingRecord {
                j: self.records.len() as u64,
                t: Passage::At(n),
                tau: Passage::Never,
                d: self.d,
                u: self.u,
                y_at_t: y,
            });
            self.awaiting_down = true;
            Some(self.records.len() - 1)
        } else {
            None
        }
    }

    pub fn records(&self) -> &[CrossingRecord<T>] {
        &self.records
    }

    pub fn finish(self) -> Vec<CrossingRecord<T>> {
        self.records
    }
}
