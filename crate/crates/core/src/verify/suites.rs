use std::cell::RefCell;

use super::report::{CriterionRow, Relation};
use super::{suite_seed, SuiteId, SuiteSpec};
use crate::config::ExperimentConfig;
use crate::error::{Error, Result};
use crate::simulate::{map_replications, run_batch, run_coupled, CoupledRun, TrajectoryRecord};
use crate::stats::{
    a_n_frequency, atom_scan, drift_diagnostic, harmonic_moment_curve, ks_distance, median, studentize,
    z_infinity_proxy, CltInputs, CltStatistic, MomentEstimate,
};
use crate::urn::s_delta_window;

type Record = TrajectoryRecord<f64>;

pub(super) struct Context<'a> {
    id: SuiteId,
    spec: &'a SuiteSpec,
    seed: u64,
    parallelism: usize,
    hashes: RefCell<Vec<(String, String)>>,
}

impl<'a> Context<'a> {
    pub(super) fn new(id: SuiteId, spec: &'a SuiteSpec, seed: u64, parallelism: usize) -> Self {
        Self { id, spec, seed, parallelism, hashes: RefCell::new(Vec::new()) }
    }

    pub(super) fn hashes(&self) -> Vec<(String, String)> {
        self.hashes.take()
    }

    fn th(&self, key: &str) -> Result<f64> {
        self.spec.threshold(key)
    }

    /// Graded config `name` (or informational, if `informational`), seeded for this suite.
    fn experiment(&self, name: &str, informational: bool) -> Result<ExperimentConfig> {
        let (pos, cfg) = if informational {
            let pos = self.spec.informational.keys().position(|k| k == name);
            (pos.map(|p| p + self.spec.configs.len()), self.spec.informational.get(name))
        } else {
            (self.spec.configs.keys().position(|k| k == name), self.spec.configs.get(name))
        };
        let (pos, cfg) = match (pos, cfg) {
            (Some(p), Some(c)) => (p, c),
            _ => return Err(Error::Config(format!("suite {} has no config `{name}`", self.id))),
        };
        let mut cfg = cfg.clone();
        cfg.seed = suite_seed(self.seed, self.id, pos);
        Ok(cfg)
    }

    fn note(&self, name: &str, cfg: &ExperimentConfig) {
        self.hashes.borrow_mut().push((name.to_string(), cfg.config_hash()));
    }

    fn batch_of(&self, name: &str, cfg: &ExperimentConfig) -> Result<Vec<Record>> {
        self.note(name, cfg);
        let template = cfg.run_config()?;
        run_batch(&template, cfg.replications, self.parallelism)
            .map(|b| b.records)
            .map_err(|f| f.into_error())
    }

    fn batch(&self, name: &str) -> Result<(ExperimentConfig, Vec<Record>)> {
        let cfg = self.experiment(name, false)?;
        let recs = self.batch_of(name, &cfg)?;
        Ok((cfg, recs))
    }

    fn informational(&self) -> impl Iterator<Item = &str> {
        self.spec.informational.keys().map(String::as_str)
    }
}

pub(super) fn run(ctx: &Context<'_>) -> Result<Vec<CriterionRow>> {
    match ctx.id {
        SuiteId::T1 => t1(ctx),
        SuiteId::T2 => t2(ctx),
        SuiteId::T3 => t3(ctx),
        SuiteId::T4 => t4(ctx),
        SuiteId::T5 => clt(ctx, CltStatistic::N1, false),
        SuiteId::T6 => t6(ctx),
        SuiteId::T7 => clt(ctx, CltStatistic::Z, false),
        SuiteId::T8 => t8(ctx),
        SuiteId::T9 => t9(ctx),
        SuiteId::T10 => t10(ctx),
    }
}

fn at_horizon(recs: &[Record], f: impl Fn(&Record) -> f64) -> Vec<f64> {
    recs.iter().map(f).collect()
}

fn fraction(values: impl IntoIterator<Item = bool>) -> Result<f64> {
    Ok(MomentEstimate::from_samples(values.into_iter().map(|b| f64::from(u8::from(b))))?.mean)
}

fn limits(cfg: &ExperimentConfig) -> Result<(f64, f64)> {
    Ok(cfg.model_kind()?.limits())
}

/// Consistency under thresholds converging only in probability.
fn t1(ctx: &Context<'_>) -> Result<Vec<CriterionRow>> {
    let (cfg, recs) = ctx.batch("main")?;
    let (rho1, _) = limits(&cfg)?;
    let tol = ctx.th("tolerance")?;
    let exceed = fraction(recs.iter().map(|r| (r.final_state.z - rho1).abs() > tol))?;
    let dev = median(&at_horizon(&recs, |r| (r.final_state.z - rho1).abs()))?;
    Ok(vec![CriterionRow::graded(
        format!("P(|Z_n - rho1| > {tol}) at n = {}", cfg.horizon),
        exceed,
        Relation::Le,
        ctx.th("max_exceed_fraction")?,
    )
    .with_detail(format!("median |Z_n - rho1| = {dev:.3e}"))])
}

/// Strong consistency: medians of `|Z_n - rho1|` shrink along n = H/100, H/10, H.
fn t2(ctx: &Context<'_>) -> Result<Vec<CriterionRow>> {
    let (cfg, recs) = ctx.batch("main")?;
    let (rho1, _) = limits(&cfg)?;
    let steps = [cfg.horizon / 100, cfg.horizon / 10, cfg.horizon];
    let medians = steps
        .iter()
        .map(|&n| {
            let d = recs
                .iter()
                .map(|r| r.point_at(n).map(|p| (p.z - rho1).abs()).ok_or(Error::MissingGridPoint(n)))
                .collect::<Result<Vec<_>>>()?;
            median(&d)
        })
        .collect::<Result<Vec<_>>>()?;
    let worst_ratio = medians.windows(2).map(|w| w[1] / w[0]).fold(f64::NEG_INFINITY, f64::max);
    let detail = steps
        .iter()
        .zip(&medians)
        .map(|(n, m)| format!("n={n}: {m:.3e}"))
        .collect::<Vec<_>>()
        .join(", ");
    Ok(vec![
        CriterionRow::graded(
            "max ratio of successive medians",
            worst_ratio,
            Relation::Lt,
            ctx.th("median_ratio_max")?,
        )
        .with_detail(detail),
        CriterionRow::graded(
            format!("median |Z_n - rho1| at n = {}", cfg.horizon),
            medians[2],
            Relation::Lt,
            ctx.th("final_median_max")?,
        ),
    ])
}

fn common_mean(cfg: &ExperimentConfig) -> Result<f64> {
    let (r1, r2) = cfg.reinforcements()?;
    if r1.mean() != r2.mean() {
        return Err(Error::UnequalMeans { m1: r1.mean(), m2: r2.mean() });
    }
    Ok(r1.mean())
}

/// `Y_n / n` approaches the common reinforcement mean.
fn t3(ctx: &Context<'_>) -> Result<Vec<CriterionRow>> {
    let (cfg, recs) = ctx.batch("main")?;
    let m = common_mean(&cfg)?;
    let tol = ctx.th("tolerance")?;
    let n = cfg.horizon as f64;
    let ok = fraction(recs.iter().map(|r| (r.final_state.y / n - m).abs() < tol))?;
    Ok(vec![CriterionRow::graded(
        format!("P(|Y_n/n - m| < {tol}) at n = {}", cfg.horizon),
        ok,
        Relation::Ge,
        ctx.th("min_fraction")?,
    )])
}

/// Harmonic moments `E[(n/Y_n)^j]` stay bounded over the recorded grid.
fn t8(ctx: &Context<'_>) -> Result<Vec<CriterionRow>> {
    let (cfg, recs) = ctx.batch("main")?;
    let grid = cfg.run_config()?.record_grid;
    let cap = ctx.th("plateau_ratio_max")?;
    [1, 2, 4]
        .into_iter()
        .map(|j| {
            let curve = harmonic_moment_curve(&recs, j, &grid)?;
            let last = curve.last().map(|(_, m)| m.mean).unwrap_or(f64::NAN);
            let max = curve.iter().map(|(_, m)| m.mean).fold(f64::NEG_INFINITY, f64::max);
            Ok(CriterionRow::graded(format!("max/final of E[(n/Y_n)^{j}]"), max / last, Relation::Le, cap)
                .with_detail(format!("final {last:.6e}")))
        })
        .collect()
}

fn proxies(recs: &[Record], cfg: &ExperimentConfig) -> Result<Vec<f64>> {
    let k = cfg.proxy_multiplier.ok_or(Error::NotExtended { multiplier: 0 })?;
    recs.iter().map(|r| z_infinity_proxy(r, k)).collect()
}

/// No atoms of the limit inside the threshold interval.
fn t4(ctx: &Context<'_>) -> Result<Vec<CriterionRow>> {
    let (lo, hi, w) = (ctx.th("scan_lo")?, ctx.th("scan_hi")?, ctx.th("bin_width")?);
    let cap = ctx.th("max_bin_mass")?;
    let (cfg, recs) = ctx.batch("main")?;
    let mass = atom_scan(&proxies(&recs, &cfg)?, lo, hi, w)?;
    let mut rows = vec![CriterionRow::graded(
        format!("max mass of a {w} bin of the limit proxy on ({lo}, {hi})"),
        mass,
        Relation::Lt,
        cap,
    )];
    for name in ctx.informational() {
        let cfg = ctx.experiment(name, true)?;
        let recs = ctx.batch_of(name, &cfg)?;
        let mass = atom_scan(&proxies(&recs, &cfg)?, lo, hi, w)?;
        rows.push(CriterionRow::informational(format!("[{name}] max bin mass"), mass, Relation::Lt, cap));
    }
    Ok(rows)
}

fn clt_rows(
    ctx: &Context<'_>,
    name: &str,
    cfg: &ExperimentConfig,
    recs: &[Record],
    which: CltStatistic,
    only_a_n: bool,
    informational: bool,
) -> Result<Vec<CriterionRow>> {
    let (r1, r2) = cfg.reinforcements()?;
    let summary = studentize(recs, &CltInputs::from_specs(&r1, &r2), which)?;
    let label = match which {
        CltStatistic::N1 => "sqrt(n)(N1_n/n - Z_inf)",
        CltStatistic::Z => "sqrt(n)(Z_n - Z_inf)",
    };
    let make = |c: String, o: f64, rel: Relation, t: f64| {
        if informational {
            CriterionRow::informational(c, o, rel, t)
        } else {
            CriterionRow::graded(c, o, rel, t)
        }
    };
    let samples = summary.studentized(only_a_n);
    let mut rows = Vec::new();
    let ks_key = if only_a_n { "ks_max_a_n" } else { "ks_max" };
    let ks = if samples.is_empty() { f64::NAN } else { ks_distance(&samples)?.d };
    rows.push(
        make(format!("[{name}] KS of studentized {label}"), ks, Relation::Lt, ctx.th(ks_key)?).with_detail(
            format!("included {} excluded {} used {}", summary.included, summary.excluded, samples.len()),
        ),
    );
    if !only_a_n {
        let raw = MomentEstimate::from_samples(summary.raw(false))?;
        let sigma = MomentEstimate::from_samples(summary.limiting_variances(false))?;
        let ratio = raw.variance / sigma.mean;
        rows.push(make(
            format!("[{name}] |Var(statistic) / mean limiting variance - 1|"),
            (ratio - 1.0).abs(),
            Relation::Lt,
            ctx.th("variance_rtol")?,
        ));
        if let Some(k) = cfg.proxy_multiplier {
            // The proxy shares the fluctuation after the horizon, a fraction 1/k of the total.
            let corrected = ratio / (1.0 - 1.0 / k as f64);
            rows.push(CriterionRow::informational(
                format!("[{name}] same, proxy-adjusted by 1 - 1/{k}"),
                (corrected - 1.0).abs(),
                Relation::Lt,
                ctx.th("variance_rtol")?,
            ));
        }
    }
    Ok(rows)
}

/// Studentized CLTs with the limit replaced by a late-time proxy.
fn clt(ctx: &Context<'_>, which: CltStatistic, only_a_n: bool) -> Result<Vec<CriterionRow>> {
    let mut rows = Vec::new();
    for name in ctx.spec.configs.keys() {
        let cfg = ctx.experiment(name, false)?;
        let recs = ctx.batch_of(name, &cfg)?;
        rows.extend(clt_rows(ctx, name, &cfg, &recs, which, only_a_n, false)?);
    }
    for name in ctx.informational() {
        let cfg = ctx.experiment(name, true)?;
        let recs = ctx.batch_of(name, &cfg)?;
        rows.extend(clt_rows(ctx, name, &cfg, &recs, which, only_a_n, true)?);
    }
    Ok(rows)
}

/// ARRU CLT on the events `Z_n in A_n`, and stabilization of their frequency.
fn t6(ctx: &Context<'_>) -> Result<Vec<CriterionRow>> {
    let (cfg, recs) = ctx.batch("main")?;
    let mut rows = Vec::new();
    for which in [CltStatistic::N1, CltStatistic::Z] {
        rows.extend(clt_rows(ctx, "main", &cfg, &recs, which, true, false)?);
    }

    let h = cfg.horizon;
    let steps = [h / 8, h / 4, h / 2, h];
    let freq = steps.iter().map(|&n| Ok(a_n_frequency(&recs, n)?.mean)).collect::<Result<Vec<_>>>()?;
    let (rho1, rho2) = limits(&cfg)?;
    let limit = fraction(proxies(&recs, &cfg)?.into_iter().map(|z| rho2 < z && z < rho1))?;
    let incs: Vec<f64> = freq.windows(2).map(|w| (w[1] - w[0]).abs()).collect();
    let gaps: Vec<f64> = freq.iter().map(|f| (limit - f).abs()).collect();
    let worst = |v: &[f64]| v.windows(2).map(|w| w[1] / w[0]).fold(f64::NEG_INFINITY, f64::max);
    let detail = steps
        .iter()
        .zip(&freq)
        .map(|(n, f)| format!("n={n}: {f:.4}"))
        .collect::<Vec<_>>()
        .join(", ");
    rows.push(
        CriterionRow::graded(
            "max ratio of successive changes in P(Z_n in A_n)",
            worst(&incs),
            Relation::Lt,
            ctx.th("increment_ratio_max")?,
        )
        .with_detail(detail),
    );
    rows.push(
        CriterionRow::graded(
            "max ratio of successive gaps to P(Z_inf in (rho2, rho1))",
            worst(&gaps),
            Relation::Lt,
            ctx.th("gap_ratio_max")?,
        )
        .with_detail(format!("limit frequency {limit:.4}")),
    );

    for name in ctx.informational() {
        let cfg = ctx.experiment(name, true)?;
        let recs = ctx.batch_of(name, &cfg)?;
        let f = a_n_frequency(&recs, cfg.horizon)?.mean;
        rows.push(CriterionRow::informational(
            format!("[{name}] P(Z_n in A_n) at the horizon"),
            f,
            Relation::Gt,
            0.0,
        ));
        if f > 0.0 {
            rows.extend(clt_rows(ctx, name, &cfg, &recs, CltStatistic::N1, true, true)?);
        }
    }
    Ok(rows)
}

/// Sign of the expected change in `|rho1 - Z|` over `ceil(n s_delta)` steps.
fn t9(ctx: &Context<'_>) -> Result<Vec<CriterionRow>> {
    let n = ctx.th("n")? as u64;
    let delta = ctx.th("delta")?;
    let mut cfg = ctx.experiment("main", false)?;
    let b = cfg.run_config()?.max_reinforcement();
    let window = s_delta_window(ctx.th("c1")?, b, delta)?;
    let lag = (n as f64 * window.chosen).ceil() as u64;
    cfg.horizon = n + lag;
    cfg.grid_extra.push(n);
    let recs = ctx.batch_of("main", &cfg)?;
    let (rho1, _) = limits(&cfg)?;
    let d = drift_diagnostic(&recs, n, window.chosen, delta, rho1)?;

    let q_min = ctx.th("q_min")?;
    let k = ctx.th("se_multiplier")?;
    let lhs_max = ctx.th("lhs_max")?;
    let gated = d.q_mass.mean > q_min;
    let lhs = format!("E[G(n,s) 1_Q] + {k} SE at n = {n}, lag {lag}");
    let lhs_row = if gated {
        CriterionRow::graded(lhs, d.lhs.upper(k), Relation::Lt, lhs_max)
    } else {
        CriterionRow::informational(lhs, d.lhs.upper(k), Relation::Lt, lhs_max)
            .with_detail("P(Q) below the gate; the bound is not tested")
    };
    Ok(vec![
        CriterionRow::informational("P(Q(delta, n))", d.q_mass.mean, Relation::Gt, q_min)
            .with_detail(format!("s = {:.6e} in (0, {:.6e})", window.chosen, window.high)),
        lhs_row,
        CriterionRow::graded(
            format!("E[G(n,s) 1_{{Q^c}}] - {k} SE"),
            d.complement.lower(k),
            Relation::Lt,
            ctx.th("complement_max")?,
        ),
    ])
}

fn coupled(ctx: &Context<'_>, name: &str, n0: u64) -> Result<Vec<CoupledRun<f64>>> {
    let cfg = ctx.experiment(name, false)?;
    ctx.note(name, &cfg);
    let template = cfg.run_config()?;
    map_replications(&template, cfg.replications, ctx.parallelism, |c| run_coupled(c, n0))
        .map(|b| b.records)
        .map_err(|f| f.into_error())
}

/// Bytes of everything the forked RRU records, taken from both processes.
fn tail_bytes(rec: &Record, n0: u64) -> Vec<u8> {
    let tail: Vec<_> = rec.points.iter().filter(|p| p.n >= n0).collect();
    serde_json::to_vec(&(tail, &rec.final_state)).expect("records serialize")
}

/// Coupling between an ARRU and the RRU forked from it.
fn t10(ctx: &Context<'_>) -> Result<Vec<CriterionRow>> {
    let n0 = ctx.th("n0")? as u64;
    let free = coupled(ctx, "never_binding", n0)?;
    let mismatched = free
        .iter()
        .filter(|c| c.divergence_step.is_some() || tail_bytes(&c.arru, n0) != tail_bytes(&c.rru, n0))
        .count();
    let bound = coupled(ctx, "interior", n0)?;
    let early = bound
        .iter()
        .filter(|c| match (c.divergence_step, c.first_suppression_step) {
            (Some(d), Some(s)) => d <= s,
            (Some(_), None) => true,
            (None, _) => false,
        })
        .count();
    let diverged = fraction(bound.iter().map(|c| c.divergence_step.is_some()))?;
    Ok(vec![
        CriterionRow::graded(
            format!("never-binding runs differing from the coupled RRU (of {})", free.len()),
            mismatched as f64,
            Relation::Le,
            ctx.th("max_mismatched")?,
        ),
        CriterionRow::graded(
            format!("interior runs diverging before the first suppression (of {})", bound.len()),
            early as f64,
            Relation::Le,
            ctx.th("max_early_divergence")?,
        ),
        CriterionRow::informational("fraction of interior runs that diverge", diverged, Relation::Gt, 0.0),
    ])
}
