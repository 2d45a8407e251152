use rand::Rng;
use serde::{Deserialize, Serialize};

use super::config::RunConfig;
use super::record::{CrossingDetector, Extension, GridPoint, TrajectoryRecord};
use crate::error::{Error, Result};
use crate::rng::ReplicationStreams;
use crate::thresholds::ThresholdTracker;
use crate::urn::{self, drawn_color, step, step_bound_guard, Color, ModelKind, Sampler, UrnState};
use crate::Real;

/// Relative slack for the up-crossing growth check; the bound itself is exact.
const GROWTH_RTOL: f64 = 1e-12;

/// Shared per-step randomness: the color uniform and both reinforcements.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Draw<T> {
    pub u: T,
    pub d1: T,
    pub d2: T,
}

struct Source<T> {
    streams: ReplicationStreams,
    s1: Sampler<T>,
    s2: Sampler<T>,
}

impl<T: Real> Source<T> {
    fn new(config: &RunConfig<T>) -> Self {
        Self {
            streams: ReplicationStreams::new(config.seed, config.replication_index),
            s1: config.r1.sampler(),
            s2: config.r2.sampler(),
        }
    }

    fn auxiliary(&mut self) -> T {
        T::lit(self.streams.auxiliary.random::<f64>())
    }

    fn draw(&mut self) -> Draw<T> {
        let u = T::lit(self.streams.color.random::<f64>());
        let d1 = self.s1.sample(&mut self.streams.reinforcement);
        let d2 = self.s2.sample(&mut self.streams.reinforcement);
        Draw { u, d1, d2 }
    }
}

/// One urn evolving under its own thresholds and recording its diagnostics.
struct Process<'a, T> {
    config: &'a RunConfig<T>,
    limits: (T, T),
    bmax: T,
    state: UrnState<T>,
    tracker: ThresholdTracker<T>,
    grid_cursor: usize,
    points: Vec<GridPoint<T>>,
    crossings: Option<CrossingDetector<T>>,
    growth_factor: T,
    guard_checks: u64,
    growth_violations: u64,
    reinforced_steps: u64,
    at_horizon: Option<UrnState<T>>,
}

impl<'a, T: Real> Process<'a, T> {
    fn start(config: &'a RunConfig<T>, model: &ModelKind<T>, state: UrnState<T>) -> Self {
        let grid_cursor = config.record_grid.partition_point(|&g| g < state.n);
        let (crossings, growth_factor) = match config.crossing_band {
            Some(b) => (
                Some(CrossingDetector::new(b.d, b.u)),
                b.u * (T::one() - b.d) / (b.d * (T::one() - b.u)),
            ),
            None => (None, T::one()),
        };
        Self {
            config,
            limits: model.limits(),
            bmax: config.max_reinforcement(),
            state,
            tracker: ThresholdTracker::new(model, &config.r1, &config.r2),
            grid_cursor,
            points: Vec::with_capacity(config.record_grid.len()),
            crossings,
            growth_factor,
            guard_checks: 0,
            growth_violations: 0,
            reinforced_steps: 0,
            at_horizon: None,
        }
    }

    fn in_a_n(&self) -> bool {
        let c = self.config.a_n_c * self.state.y.powf(-self.config.a_n_alpha);
        let (rho1, rho2) = self.limits;
        self.state.z > rho2 + c && self.state.z < rho1 - c
    }

    /// Emits thresholds for the coming draw and records step-`n` diagnostics.
    fn prepare(&mut self, aux: T) -> Result<(bool, bool)> {
        let n = self.state.n;
        let (rho1, rho2) = self.tracker.emit(n, aux);
        let (w1, w2) = urn::indicators(self.state.z, rho1, rho2)?;

        if self.config.record_grid.get(self.grid_cursor) == Some(&n) {
            self.grid_cursor += 1;
            self.points.push(GridPoint {
                n,
                z: self.state.z,
                y: self.state.y,
                n1: self.state.n1,
                in_a_n: self.in_a_n(),
                w1,
                w2,
                rho1_hat: rho1,
                rho2_hat: rho2,
            });
        }
        if n <= self.config.horizon {
            if let Some(det) = self.crossings.as_mut() {
                if let Some(i) = det.observe(n, self.state.z, Some(self.state.y)) {
                    if i > 0 {
                        let r = det.records();
                        let (prev, cur) = (r[i - 1].y_at_t, r[i].y_at_t);
                        if let (Some(prev), Some(cur)) = (prev, cur) {
                            let floor = self.growth_factor * prev * (T::one() - T::lit(GROWTH_RTOL));
                            if cur < floor {
                                self.growth_violations += 1;
                            }
                        }
                    }
                }
            }
        }
        if n == self.config.horizon {
            self.at_horizon = Some(self.state);
        }
        Ok((w1, w2))
    }

    fn advance(&mut self, (w1, w2): (bool, bool), draw: &Draw<T>) -> Result<()> {
        let before = self.state;
        let next = step(&before, w1, w2, draw.u, draw.d1, draw.d2)?;
        if !next.z.is_finite() || !next.y.is_finite() {
            return Err(Error::NumericAbort { step: next.n });
        }

        let jump = (next.z - before.z).abs();
        for &eps in &self.config.guard_epsilons {
            if step_bound_guard(before.y, self.bmax, eps)? {
                self.guard_checks += 1;
                if !(jump < eps) {
                    return Err(Error::GuardViolation {
                        step: before.n,
                        jump: jump.as_f64(),
                        epsilon: eps.as_f64(),
                    });
                }
            }
        }

        let color = drawn_color(before.z, draw.u);
        let (reinforced, d, spec) = match color {
            Color::Red => (w1, draw.d1, &self.config.r1),
            Color::White => (w2, draw.d2, &self.config.r2),
        };
        if reinforced {
            self.reinforced_steps += 1;
        }
        self.tracker.observe(color, reinforced.then_some(d), spec)?;
        self.state = next;
        Ok(())
    }

    fn finish(self) -> TrajectoryRecord<T> {
        let final_state = self.at_horizon.unwrap_or(self.state);
        let extension = self.config.proxy_multiplier.map(|multiplier| Extension {
            multiplier,
            n: self.state.n,
            z: self.state.z,
            y: self.state.y,
            n1: self.state.n1,
        });
        TrajectoryRecord {
            replication: self.config.replication_index,
            seed: self.config.seed,
            points: self.points,
            crossings: self.crossings.map(CrossingDetector::finish).unwrap_or_default(),
            guard_checks: self.guard_checks,
            guard_violations: 0,
            growth_violations: self.growth_violations,
            order_violations: self.tracker.order_violations(),
            reinforced_steps: self.reinforced_steps,
            final_state,
            extension,
        }
    }
}

fn with_step(step: u64) -> impl Fn(Error) -> Error {
    move |e| match e {
        Error::NonFinite(_) => Error::NumericAbort { step },
        e => e,
    }
}

/// Runs one replication to its horizon (and through any proxy extension).
pub fn run_trajectory<T: Real>(config: &RunConfig<T>) -> Result<TrajectoryRecord<T>> {
    config.validate()?;
    let initial = UrnState::new(config.y1_0, config.y2_0)?;
    let mut source = Source::new(config);
    let mut process = Process::start(config, &config.model, initial);
    let total = config.total_steps();
    loop {
        let n = process.state.n;
        let aux = source.auxiliary();
        let w = process.prepare(aux).map_err(with_step(n))?;
        if n == total {
            break;
        }
        let draw = source.draw();
        process.advance(w, &draw).map_err(with_step(n))?;
    }
    Ok(process.finish())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoupledRun<T> {
    pub n0: u64,
    pub arru: TrajectoryRecord<T>,
    /// RRU forked from the ARRU composition at `n0`; grid points from `n0` on.
    pub rru: TrajectoryRecord<T>,
    /// First step at which the two compositions differ.
    pub divergence_step: Option<u64>,
    /// First step `n >= n0` at which an ARRU indicator was 0.
    pub first_suppression_step: Option<u64>,
}

/// Runs the configured urn and, from step `n0`, an RRU sharing its color
/// uniforms and reinforcements. Proxy extensions are ignored.
pub fn run_coupled<T: Real>(config: &RunConfig<T>, n0: u64) -> Result<CoupledRun<T>> {
    config.validate()?;
    if n0 >= config.horizon {
        return Err(Error::param("n0", "must be below the horizon"));
    }
    let mut config = config.clone();
    config.proxy_multiplier = None;
    let config = &config;

    let initial = UrnState::new(config.y1_0, config.y2_0)?;
    let mut source = Source::new(config);
    let mut arru = Process::start(config, &config.model, initial);
    let mut rru: Option<Process<'_, T>> = None;
    let mut divergence_step = None;
    let mut first_suppression_step = None;

    loop {
        let n = arru.state.n;
        if n == n0 {
            rru = Some(Process::start(config, &ModelKind::Rru, arru.state));
        }
        let aux = source.auxiliary();
        let w = arru.prepare(aux).map_err(with_step(n))?;
        let wr = match rru.as_mut() {
            Some(p) => Some(p.prepare(T::zero()).map_err(with_step(n))?),
            None => None,
        };
        if n >= n0 && first_suppression_step.is_none() && !(w.0 && w.1) {
            first_suppression_step = Some(n);
        }
        if n == config.horizon {
            break;
        }
        let draw = source.draw();
        arru.advance(w, &draw).map_err(with_step(n))?;
        if let (Some(p), Some(wr)) = (rru.as_mut(), wr) {
            p.advance(wr, &draw).map_err(with_step(n))?;
            if divergence_step.is_none()
                && (p.state.y1 != arru.state.y1 || p.state.y2 != arru.state.y2)
            {
                divergence_step = Some(n + 1);
            }
        }
    }
    let rru = rru.expect("fork happens before the horizon");
    Ok(CoupledRun {
        n0,
        arru: arru.finish(),
        rru: rru.finish(),
        divergence_step,
        first_suppression_step,
    })
}
