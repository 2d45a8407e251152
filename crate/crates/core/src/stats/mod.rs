//! Estimators and test statistics over completed batches.

mod normal;

pub use normal::{ks_distance, normal_cdf, KsResult};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::simulate::{GridPoint, TrajectoryRecord};
use crate::urn::{clt_variances, CltVariances, ReinforcementSpec};
use crate::Real;

/// Replications whose limiting variance falls below this are not studentized.
pub const SIGMA_FLOOR: f64 = 1e-6;

/// Sample mean with unbiased variance and standard error of the mean.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MomentEstimate {
    pub mean: f64,
    pub variance: f64,
    pub count: usize,
    pub standard_error: f64,
}

impl MomentEstimate {
    pub fn from_samples<I: IntoIterator<Item = f64>>(samples: I) -> Result<Self> {
        // Welford, so long batches of near-constant values stay exact.
        let (mut count, mut mean, mut m2) = (0usize, 0.0f64, 0.0f64);
        for x in samples {
            count += 1;
            let delta = x - mean;
            mean += delta / count as f64;
            m2 += delta * (x - mean);
        }
        if count == 0 {
            return Err(Error::EmptySample);
        }
        let variance = if count > 1 { (m2 / (count - 1) as f64).max(0.0) } else { 0.0 };
        Ok(Self { mean, variance, count, standard_error: (variance / count as f64).sqrt() })
    }

    pub fn upper(&self, k: f64) -> f64 {
        self.mean + k * self.standard_error
    }

    pub fn lower(&self, k: f64) -> f64 {
        self.mean - k * self.standard_error
    }
}

/// Median by sorting; `NaN` sorts last.
pub fn median(values: &[f64]) -> Result<f64> {
    if values.is_empty() {
        return Err(Error::EmptySample);
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let k = v.len() / 2;
    Ok(if v.len() % 2 == 1 { v[k] } else { 0.5 * (v[k - 1] + v[k]) })
}

fn point<T: Copy>(record: &TrajectoryRecord<T>, n: u64) -> Result<&GridPoint<T>> {
    record.point_at(n).ok_or(Error::MissingGridPoint(n))
}

/// The run's `Z` at `multiplier * horizon`.
pub fn z_infinity_proxy<T: Real>(record: &TrajectoryRecord<T>, multiplier: u64) -> Result<T> {
    match record.extension {
        Some(ext) if ext.multiplier == multiplier => Ok(ext.z),
        _ => Err(Error::NotExtended { multiplier }),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CltStatistic {
    /// `sqrt(n) (N1_n / n - Z_inf)`, scaled by `Sigma`.
    N1,
    /// `sqrt(n) (Z_n - Z_inf)`, scaled by `Sigma_Z`.
    Z,
}

/// Reinforcement moments entering the limiting variances.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CltInputs {
    pub m1: f64,
    pub m2: f64,
    pub sigma1_sq: f64,
    pub sigma2_sq: f64,
}

impl CltInputs {
    pub fn from_specs<T: Real>(r1: &ReinforcementSpec<T>, r2: &ReinforcementSpec<T>) -> Self {
        Self {
            m1: r1.mean().as_f64(),
            m2: r2.mean().as_f64(),
            sigma1_sq: r1.variance().as_f64(),
            sigma2_sq: r2.variance().as_f64(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CltRow {
    pub replication: u64,
    pub z_inf_proxy: f64,
    pub statistic_n1: f64,
    pub statistic_z: f64,
    pub sigma_at_proxy: CltVariances<f64>,
    /// `None` when the relevant variance is below [`SIGMA_FLOOR`].
    pub studentized_n1: Option<f64>,
    pub studentized_z: Option<f64>,
    pub in_a_n_at_horizon: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CltSummary {
    pub which: CltStatistic,
    pub rows: Vec<CltRow>,
    pub included: usize,
    pub excluded: usize,
}

impl CltSummary {
    /// Studentized values of the selected statistic, optionally only on `A_n`.
    pub fn studentized(&self, only_a_n: bool) -> Vec<f64> {
        self.rows
            .iter()
            .filter(|r| !only_a_n || r.in_a_n_at_horizon)
            .filter_map(|r| match self.which {
                CltStatistic::N1 => r.studentized_n1,
                CltStatistic::Z => r.studentized_z,
            })
            .collect()
    }

    pub fn raw(&self, only_a_n: bool) -> Vec<f64> {
        self.rows
            .iter()
            .filter(|r| !only_a_n || r.in_a_n_at_horizon)
            .map(|r| match self.which {
                CltStatistic::N1 => r.statistic_n1,
                CltStatistic::Z => r.statistic_z,
            })
            .collect()
    }

    /// `Sigma` (or `Sigma_Z`) at each proxy.
    pub fn limiting_variances(&self, only_a_n: bool) -> Vec<f64> {
        self.rows
            .iter()
            .filter(|r| !only_a_n || r.in_a_n_at_horizon)
            .map(|r| match self.which {
                CltStatistic::N1 => r.sigma_at_proxy.sigma_big,
                CltStatistic::Z => r.sigma_at_proxy.sigma_z,
            })
            .collect()
    }
}

/// CLT statistics at the horizon, studentized by the limiting variance at
/// each run's limit proxy. Requires equal reinforcement means.
pub fn studentize<T: Real>(
    records: &[TrajectoryRecord<T>],
    inputs: &CltInputs,
    which: CltStatistic,
) -> Result<CltSummary> {
    let scale = inputs.m1.abs().max(inputs.m2.abs()).max(1.0);
    if (inputs.m1 - inputs.m2).abs() > 1e-12 * scale {
        return Err(Error::UnequalMeans { m1: inputs.m1, m2: inputs.m2 });
    }
    let mut rows = Vec::with_capacity(records.len());
    let (mut included, mut excluded) = (0, 0);
    for rec in records {
        let ext = rec.extension.ok_or(Error::NotExtended { multiplier: 0 })?;
        let proxy = ext.z.as_f64();
        let fin = &rec.final_state;
        let n = fin.n as f64;
        if fin.n == 0 {
            return Err(Error::param("horizon", "CLT statistics need at least one step"));
        }
        let sn = n.sqrt();
        let statistic_n1 = sn * (fin.n1 as f64 / n - proxy);
        let statistic_z = sn * (fin.z.as_f64() - proxy);
        let sigma = clt_variances(proxy, inputs.m1, inputs.sigma1_sq, inputs.sigma2_sq)?;
        let s = |v: f64, stat: f64| (v >= SIGMA_FLOOR).then(|| stat / v.sqrt());
        let studentized_n1 = s(sigma.sigma_big, statistic_n1);
        let studentized_z = s(sigma.sigma_z, statistic_z);
        let kept = match which {
            CltStatistic::N1 => studentized_n1.is_some(),
            CltStatistic::Z => studentized_z.is_some(),
        };
        if kept {
            included += 1;
        } else {
            excluded += 1;
        }
        let in_a_n_at_horizon =
            rec.points.last().is_some_and(|p| p.n == fin.n && p.in_a_n);
        rows.push(CltRow {
            replication: rec.replication,
            z_inf_proxy: proxy,
            statistic_n1,
            statistic_z,
            sigma_at_proxy: sigma,
            studentized_n1,
            studentized_z,
            in_a_n_at_horizon,
        });
    }
    Ok(CltSummary { which, rows, included, excluded })
}

/// Mean of `(n / Y_n)^j` across replications at each grid step.
pub fn harmonic_moment_curve<T: Real>(
    records: &[TrajectoryRecord<T>],
    j: i32,
    grid: &[u64],
) -> Result<Vec<(u64, MomentEstimate)>> {
    grid.iter()
        .map(|&n| {
            let values = records
                .iter()
                .map(|r| point(r, n).map(|p| (n as f64 / p.y.as_f64()).powi(j)))
                .collect::<Result<Vec<_>>>()?;
            Ok((n, MomentEstimate::from_samples(values)?))
        })
        .collect()
}

/// Frequency of `z_lo <= Z_n <= z_hi`.
pub fn band_probability<T: Real>(
    records: &[TrajectoryRecord<T>],
    n: u64,
    z_lo: f64,
    z_hi: f64,
) -> Result<MomentEstimate> {
    let hits = records
        .iter()
        .map(|r| point(r, n).map(|p| p.z.as_f64()).map(|z| f64::from(u8::from(z_lo <= z && z <= z_hi))))
        .collect::<Result<Vec<_>>>()?;
    MomentEstimate::from_samples(hits)
}

/// Frequency of `Z_n` lying in `A_n`.
pub fn a_n_frequency<T: Real>(records: &[TrajectoryRecord<T>], n: u64) -> Result<MomentEstimate> {
    let hits = records
        .iter()
        .map(|r| point(r, n).map(|p| f64::from(u8::from(p.in_a_n))))
        .collect::<Result<Vec<_>>>()?;
    MomentEstimate::from_samples(hits)
}

/// `Z_{n+1} - Z_n` across replications.
pub fn increment_moment<T: Real>(records: &[TrajectoryRecord<T>], n: u64) -> Result<MomentEstimate> {
    let inc = records
        .iter()
        .map(|r| Ok(point(r, n + 1)?.z.as_f64() - point(r, n)?.z.as_f64()))
        .collect::<Result<Vec<_>>>()?;
    MomentEstimate::from_samples(inc)
}

/// Largest fraction of `samples` landing in one `bin_width` bin of `(lo, hi)`.
pub fn atom_scan(samples: &[f64], lo: f64, hi: f64, bin_width: f64) -> Result<f64> {
    if !(bin_width > 0.0) {
        return Err(Error::param("bin_width", "must be positive"));
    }
    if !(lo < hi) {
        return Err(Error::param("lo", "must be below hi"));
    }
    if samples.is_empty() {
        return Ok(0.0);
    }
    let bins = ((hi - lo) / bin_width).ceil() as usize;
    let mut counts = vec![0usize; bins.max(1)];
    for &x in samples {
        if x > lo && x < hi {
            let k = (((x - lo) / bin_width) as usize).min(counts.len() - 1);
            counts[k] += 1;
        }
    }
    Ok(counts.into_iter().max().unwrap_or(0) as f64 / samples.len() as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DriftDiagnostic {
    /// Look-ahead `ceil(n s)`.
    pub lag: u64,
    /// `G(n, s) 1{Delta_n > delta}`.
    pub lhs: MomentEstimate,
    /// `1{Delta_n > delta}`.
    pub q_mass: MomentEstimate,
    /// `G(n, s) 1{Delta_n <= delta}`.
    pub complement: MomentEstimate,
}

/// Sign diagnostics for the distance `Delta_n = |rho1 - Z_n|` over a
/// look-ahead of `ceil(n s)` steps: `G(n, s) = Delta_{n + ceil(n s)} - Delta_n`.
pub fn drift_diagnostic<T: Real>(
    records: &[TrajectoryRecord<T>],
    n: u64,
    s: f64,
    delta: f64,
    rho1: f64,
) -> Result<DriftDiagnostic> {
    if !(s > 0.0 && s.is_finite()) {
        return Err(Error::param("s", "must be positive"));
    }
    let lag = (n as f64 * s).ceil() as u64;
    let mut lhs = Vec::with_capacity(records.len());
    let mut q = Vec::with_capacity(records.len());
    let mut comp = Vec::with_capacity(records.len());
    for r in records {
        let d0 = (rho1 - point(r, n)?.z.as_f64()).abs();
        let d1 = (rho1 - point(r, n + lag)?.z.as_f64()).abs();
        let g = d1 - d0;
        let in_q = d0 > delta;
        lhs.push(if in_q { g } else { 0.0 });
        comp.push(if in_q { 0.0 } else { g });
        q.push(f64::from(u8::from(in_q)));
    }
    Ok(DriftDiagnostic {
        lag,
        lhs: MomentEstimate::from_samples(lhs)?,
        q_mass: MomentEstimate::from_samples(q)?,
        complement: MomentEstimate::from_samples(comp)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::simulate::{run_batch, RunConfig};
    use crate::thresholds::ThresholdPolicy;
    use crate::urn::ModelKind;

    #[test]
    fn moment_estimate() {
        let m = MomentEstimate::from_samples([1.0, 2.0, 3.0, 4.0]).unwrap();
        assert_eq!(m.mean, 2.5);
        assert!((m.variance - 5.0 / 3.0).abs() < 1e-15);
        assert!((m.standard_error - (m.variance / 4.0).sqrt()).abs() < 1e-15);
        assert_eq!(MomentEstimate::from_samples([7.0]).unwrap().variance, 0.0);
        assert!(MomentEstimate::from_samples(std::iter::empty()).is_err());
    }

    #[test]
    fn medians() {
        assert_eq!(median(&[3.0, 1.0, 2.0]).unwrap(), 2.0);
        assert_eq!(median(&[4.0, 1.0, 2.0, 3.0]).unwrap(), 2.5);
        assert!(median(&[]).is_err());
    }

    #[test]
    fn atoms() {
        assert_eq!(atom_scan(&[0.5; 10], 0.3, 0.7, 0.01).unwrap(), 1.0);
        let grid: Vec<f64> = (0..1000).map(|i| 0.3 + 0.0004 * i as f64 + 0.0002).collect();
        // 0.01 bins hold 25 grid points each.
        assert!((atom_scan(&grid, 0.3, 0.7, 0.01).unwrap() - 25.0 / 1000.0).abs() < 1e-12);
        assert!(atom_scan(&grid, 0.7, 0.3, 0.01).is_err());
        assert!(atom_scan(&grid, 0.3, 0.7, 0.0).is_err());
    }

    fn point_mass_batch(c: f64, reps: u64) -> Vec<TrajectoryRecord<f64>> {
        let r = ReinforcementSpec::point_mass(c).unwrap();
        let cfg = RunConfig::new(ModelKind::Rru, r, r, 256).with_seed(3).with_proxy_multiplier(2);
        run_batch(&cfg, reps, 1).unwrap().records
    }

    #[test]
    fn harmonic_curve_deterministic_y() {
        let recs = point_mass_batch(2.0, 5);
        let grid = [0, 1, 2, 4, 64, 256];
        for j in [0, 1, 2] {
            for (n, m) in harmonic_moment_curve(&recs, j, &grid).unwrap() {
                let exact = (n as f64 / (2.0 + 2.0 * n as f64)).powi(j);
                assert!((m.mean - exact).abs() <= 4.0 * f64::EPSILON * exact.max(1.0), "n={n} j={j}");
                assert_eq!(m.variance, 0.0);
            }
        }
        assert!(harmonic_moment_curve(&recs, 1, &[3]).is_err());
    }

    #[test]
    fn band_limits() {
        let recs = point_mass_batch(1.0, 20);
        assert_eq!(band_probability(&recs, 256, 0.0, 1.0).unwrap().mean, 1.0);
        assert_eq!(band_probability(&recs, 256, 2.0, 3.0).unwrap().mean, 0.0);
        let wide = band_probability(&recs, 256, 0.2, 0.8).unwrap().mean;
        let narrow = band_probability(&recs, 256, 0.4, 0.6).unwrap().mean;
        assert!(wide >= narrow);
    }

    #[test]
    fn studentize_point_masses() {
        let recs = point_mass_batch(1.0, 20);
        let inputs = CltInputs { m1: 1.0, m2: 1.0, sigma1_sq: 0.0, sigma2_sq: 0.0 };
        let s = studentize(&recs, &inputs, CltStatistic::N1).unwrap();
        assert_eq!(s.included + s.excluded, 20);
        for row in &s.rows {
            let z = row.z_inf_proxy;
            assert!((row.sigma_at_proxy.sigma_big - z * (1.0 - z)).abs() < 1e-15);
            let expected = row.statistic_n1 / (z * (1.0 - z)).sqrt();
            assert_eq!(row.studentized_n1, Some(expected));
        }
        let unequal = CltInputs { m2: 2.0, ..inputs };
        assert!(matches!(studentize(&recs, &unequal, CltStatistic::Z), Err(Error::UnequalMeans { .. })));
    }

    #[test]
    fn studentize_excludes_degenerate_proxies() {
        let mut recs = point_mass_batch(1.0, 4);
        recs[1].extension.as_mut().unwrap().z = 1.0;
        recs[2].extension.as_mut().unwrap().z = 0.0;
        let inputs = CltInputs { m1: 1.0, m2: 1.0, sigma1_sq: 0.0, sigma2_sq: 0.0 };
        let s = studentize(&recs, &inputs, CltStatistic::Z).unwrap();
        assert_eq!((s.included, s.excluded), (2, 2));
        assert_eq!(s.studentized(false).len(), 2);
    }

    #[test]
    fn proxy_requires_extension() {
        let recs = point_mass_batch(1.0, 1);
        assert!(z_infinity_proxy(&recs[0], 2).is_ok());
        assert!(matches!(z_infinity_proxy(&recs[0], 16), Err(Error::NotExtended { .. })));
    }

    #[test]
    fn drift_trivial_cases() {
        // Thresholds pinned at the initial proportion with equal point masses keep Z near 1/2.
        let r = ReinforcementSpec::point_mass(1.0).unwrap();
        let policy = ThresholdPolicy::fixed(0.5, 0.5).unwrap();
        let cfg = RunConfig::new(ModelKind::Arru { policy }, r, r, 64)
            .with_grid([0, 16, 32, 64])
            .with_seed(1);
        let recs = run_batch(&cfg, 10, 1).unwrap().records;
        let d = drift_diagnostic(&recs, 32, 1.0, 0.1, 0.5).unwrap();
        assert_eq!(d.lag, 32);
        assert!(d.lhs.mean.abs() < 1e-12 && d.complement.mean.abs() < 0.05);
        let far = drift_diagnostic(&recs, 32, 1.0, 1.0, 0.5).unwrap();
        assert_eq!((far.q_mass.mean, far.lhs.mean), (0.0, 0.0));
        assert!(drift_diagnostic(&recs, 16, 2.0, 0.1, 0.5).is_err());
    }
}
