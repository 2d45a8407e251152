use std::path::Path;
use std::time::Instant;

use serde::Serialize;

use urnlab::config::{ExperimentConfig, SweepPoint};
use urnlab::simulate::{run_batch, Batch, Extension, TrajectoryRecord, VERSION};
use urnlab::stats::MomentEstimate;
use urnlab::urn::UrnState;
use urnlab::verify::{AcceptanceFile, SuiteId};
use urnlab::Error;

use crate::output::{bit, num, write_atomic, write_json, Csv};
use crate::{SimulateArgs, VerifyArgs};

pub const CSV_COLUMNS: [&str; 10] = ["n", "rep", "z", "y", "n1", "w1", "w2", "rho1_hat", "rho2_hat", "in_A_n"];

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Runtime(String),
    #[error("{0}")]
    Suite(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Runtime(_) => 3,
            CliError::Suite(_) => 4,
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::Suite { .. } => CliError::Suite(e.to_string()),
            Error::Replication { .. }
            | Error::NumericAbort { .. }
            | Error::GuardViolation { .. }
            | Error::FrozenUrn => CliError::Runtime(e.to_string()),
            _ => CliError::Usage(e.to_string()),
        }
    }
}

#[derive(Serialize)]
struct Manifest<'a> {
    command: &'a str,
    config_hash: String,
    seed: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    replications: Option<u64>,
    version: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    thresholds: Option<serde_json::Value>,
    /// Wall time is kept out of the manifest so reruns are byte-identical.
    timing_file: &'static str,
}

#[derive(Serialize)]
struct Timing {
    wall_seconds: f64,
}

fn write_timing(out: &Path, start: Instant) -> Result<(), CliError> {
    write_json(out, "timing.json", &Timing { wall_seconds: start.elapsed().as_secs_f64() })
}

/// The experiment file with command-line overrides applied.
fn load_experiment(a: &SimulateArgs) -> Result<ExperimentConfig, CliError> {
    let mut cfg = ExperimentConfig::load(&a.config)?;
    if let Some(seed) = a.common.seed {
        cfg.seed = seed;
    }
    if let Some(reps) = a.reps {
        cfg.replications = reps;
    }
    if let Some(h) = a.horizon {
        cfg.horizon = h;
        cfg.grid_extra.retain(|&n| n <= h);
    }
    if let Some(g) = &a.grid {
        cfg.grid = Some(g.clone());
    }
    if let Some(k) = a.multiplier {
        cfg.proxy_multiplier = Some(k);
    }
    if cfg.replications == 0 {
        return Err(CliError::Usage("--reps must be at least 1".into()));
    }
    cfg.run_config()?;
    Ok(cfg)
}

fn run(cfg: &ExperimentConfig, threads: usize) -> Result<Batch<TrajectoryRecord<f64>>, CliError> {
    let template = cfg.run_config()?;
    run_batch(&template, cfg.replications, threads).map_err(|f| CliError::from(f.into_error()))
}

fn trajectories_csv(records: &[TrajectoryRecord<f64>]) -> Vec<u8> {
    let mut csv = Csv::with_header(&CSV_COLUMNS);
    for r in records {
        for p in &r.points {
            csv.row([
                p.n.to_string(),
                r.replication.to_string(),
                num(p.z),
                num(p.y),
                p.n1.to_string(),
                bit(p.w1).into(),
                bit(p.w2).into(),
                num(p.rho1_hat),
                num(p.rho2_hat),
                bit(p.in_a_n).into(),
            ]);
        }
    }
    csv.into_bytes()
}

#[derive(Serialize)]
struct RunSummary {
    rep: u64,
    final_state: UrnState<f64>,
    extension: Option<Extension<f64>>,
    crossings: usize,
    guard_checks: u64,
    guard_violations: u64,
    growth_violations: u64,
    order_violations: u64,
    reinforced_steps: u64,
}

#[derive(Serialize)]
struct Aggregate {
    final_z: MomentEstimate,
    final_y_over_n: Option<MomentEstimate>,
    in_a_n_at_horizon: MomentEstimate,
    proxy_z: Option<MomentEstimate>,
}

#[derive(Serialize)]
struct Summary {
    horizon: u64,
    replications: usize,
    aggregate: Aggregate,
    runs: Vec<RunSummary>,
}

fn summarize(horizon: u64, records: &[TrajectoryRecord<f64>]) -> Result<Summary, CliError> {
    let est = |v: Vec<f64>| MomentEstimate::from_samples(v).map_err(CliError::from);
    let proxy: Option<Vec<f64>> = records.iter().map(|r| r.extension.map(|e| e.z)).collect();
    let aggregate = Aggregate {
        final_z: est(records.iter().map(|r| r.final_state.z).collect())?,
        final_y_over_n: if horizon > 0 {
            Some(est(records.iter().map(|r| r.final_state.y / horizon as f64).collect())?)
        } else {
            None
        },
        in_a_n_at_horizon: est(records
            .iter()
            .map(|r| f64::from(u8::from(r.points.last().is_some_and(|p| p.n == horizon && p.in_a_n))))
            .collect())?,
        proxy_z: proxy.map(est).transpose()?,
    };
    let runs = records
        .iter()
        .map(|r| RunSummary {
            rep: r.replication,
            final_state: r.final_state,
            extension: r.extension,
            crossings: r.crossings.len(),
            guard_checks: r.guard_checks,
            guard_violations: r.guard_violations,
            growth_violations: r.growth_violations,
            order_violations: r.order_violations,
            reinforced_steps: r.reinforced_steps,
        })
        .collect();
    Ok(Summary { horizon, replications: records.len(), aggregate, runs })
}

pub fn simulate(a: &SimulateArgs) -> Result<u8, CliError> {
    let start = Instant::now();
    let cfg = load_experiment(a)?;
    let batch = run(&cfg, a.common.threads as usize)?;
    let out = &a.common.out;
    write_atomic(out, "trajectories.csv", &trajectories_csv(&batch.records))?;
    write_json(out, "summary.json", &summarize(cfg.horizon, &batch.records)?)?;
    write_json(
        out,
        "manifest.json",
        &Manifest {
            command: "simulate",
            config_hash: cfg.config_hash(),
            seed: cfg.seed,
            replications: Some(cfg.replications),
            version: VERSION,
            thresholds: None,
            timing_file: "timing.json",
        },
    )?;
    write_timing(out, start)?;
    Ok(0)
}

fn point_row(i: usize, p: &SweepPoint) -> [String; 5] {
    [
        i.to_string(),
        p.horizon.to_string(),
        p.mean_gap.map(num).unwrap_or_else(|| "base".into()),
        num(p.alpha),
        num(p.c),
    ]
}

pub fn sweep(a: &SimulateArgs) -> Result<u8, CliError> {
    let start = Instant::now();
    let base = load_experiment(a)?;
    let points = base.sweep_points()?;
    let mut long = Csv::with_header(&["point", "horizon", "mean_gap", "alpha", "c", "statistic", "value"]);
    let mut runs =
        Csv::with_header(&["point", "horizon", "mean_gap", "alpha", "c", "rep", "n", "z", "y", "n1", "in_A_n"]);
    for (i, p) in points.iter().enumerate() {
        let cfg = base.at_point(p)?;
        let (rho1, _) = cfg.model_kind()?.limits();
        let batch = run(&cfg, a.common.threads as usize)?;
        let recs = &batch.records;
        let keys = point_row(i, p);
        for r in recs {
            let f = &r.final_state;
            let in_a_n = r.points.last().is_some_and(|q| q.n == f.n && q.in_a_n);
            runs.row(keys.iter().cloned().chain([
                r.replication.to_string(),
                f.n.to_string(),
                num(f.z),
                num(f.y),
                f.n1.to_string(),
                bit(in_a_n).into(),
            ]));
        }
        let s = summarize(cfg.horizon, recs)?;
        let abs_gap = MomentEstimate::from_samples(recs.iter().map(|r| (r.final_state.z - rho1).abs()))?;
        let mut stats = vec![
            ("mean_z", s.aggregate.final_z.mean),
            ("se_z", s.aggregate.final_z.standard_error),
            ("mean_abs_z_minus_rho1", abs_gap.mean),
            ("se_abs_z_minus_rho1", abs_gap.standard_error),
            ("fraction_in_a_n", s.aggregate.in_a_n_at_horizon.mean),
        ];
        if let Some(y) = s.aggregate.final_y_over_n {
            stats.push(("mean_y_over_n", y.mean));
        }
        for (name, v) in stats {
            long.row(keys.iter().cloned().chain([name.to_string(), num(v)]));
        }
    }
    let out = &a.common.out;
    write_atomic(out, "sweep.csv", &long.into_bytes())?;
    write_atomic(out, "sweep_runs.csv", &runs.into_bytes())?;
    write_json(
        out,
        "manifest.json",
        &Manifest {
            command: "sweep",
            config_hash: base.config_hash(),
            seed: base.seed,
            replications: Some(base.replications),
            version: VERSION,
            thresholds: None,
            timing_file: "timing.json",
        },
    )?;
    write_timing(out, start)?;
    Ok(0)
}

fn selection(s: &str) -> Result<Vec<SuiteId>, CliError> {
    if s.eq_ignore_ascii_case("all") {
        return Ok(SuiteId::ALL.to_vec());
    }
    s.split(',').map(|id| id.trim().parse::<SuiteId>().map_err(CliError::from)).collect()
}

pub fn verify(a: &VerifyArgs) -> Result<u8, CliError> {
    let start = Instant::now();
    let ids = selection(&a.suite)?;
    let file = match &a.config {
        Some(p) => {
            let text = std::fs::read_to_string(p)
                .map_err(|e| CliError::Usage(format!("{}: {e}", p.display())))?;
            AcceptanceFile::from_toml_str(&text)?
        }
        None => AcceptanceFile::builtin(),
    };
    for &id in &ids {
        file.suite(id)?;
    }
    let report = urnlab::verify::run_selected(&file, &ids, a.common.seed, a.common.threads as usize)?;
    for line in report.lines() {
        println!("{line}");
    }
    let out = &a.common.out;
    write_atomic(out, "report.json", report.to_json().as_bytes())?;
    let thresholds: serde_json::Map<String, serde_json::Value> = ids
        .iter()
        .filter_map(|id| file.suites.get(id).map(|s| (id.to_string(), serde_json::json!(s.thresholds))))
        .collect();
    write_json(
        out,
        "manifest.json",
        &Manifest {
            command: "verify",
            config_hash: file.config_hash(),
            seed: report.seed,
            replications: None,
            version: VERSION,
            thresholds: Some(serde_json::Value::Object(thresholds)),
            timing_file: "timing.json",
        },
    )?;
    write_timing(out, start)?;
    println!("{}", if report.passed { "verify: all graded criteria pass" } else { "verify: FAILED" });
    Ok(if report.passed { 0 } else { 1 })
}
