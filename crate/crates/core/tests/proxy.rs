//! Behaviour of the limit proxy taken from extended runs.

use urnlab::simulate::{run_batch, RunConfig};
use urnlab::stats::{z_infinity_proxy, MomentEstimate};
use urnlab::thresholds::ThresholdPolicy;
use urnlab::urn::{ModelKind, ReinforcementSpec};

#[test]
fn symmetric_rru_proxy_centred_at_half() {
    let u = ReinforcementSpec::uniform(1.0, 3.0).unwrap();
    let cfg = RunConfig::new(ModelKind::Rru, u, u, 500).with_proxy_multiplier(4).with_seed(17);
    let recs = run_batch(&cfg, 2000, 1).unwrap().records;
    let m = MomentEstimate::from_samples(recs.iter().map(|r| z_infinity_proxy(r, 4).unwrap())).unwrap();
    assert!((m.mean - 0.5).abs() <= 4.0 * m.standard_error, "{m:?}");
}

#[test]
fn longer_extension_moves_the_proxy_less() {
    // Same seeds, so the M = 2 and M = 16 proxies sit on one path; both are
    // compared with M = 64 on that path.
    let u = ReinforcementSpec::uniform(1.0, 3.0).unwrap();
    let base = RunConfig::new(ModelKind::Rru, u, u, 1000).with_seed(23);
    let proxies = |m: u64| -> Vec<f64> {
        let recs = run_batch(&base.clone().with_proxy_multiplier(m), 200, 1).unwrap().records;
        recs.iter().map(|r| z_infinity_proxy(r, m).unwrap()).collect()
    };
    let (p2, p16, p64) = (proxies(2), proxies(16), proxies(64));
    let gap = |a: &[f64]| a.iter().zip(&p64).map(|(x, y)| (x - y).abs()).sum::<f64>() / a.len() as f64;
    assert!(gap(&p16) < gap(&p2), "{} vs {}", gap(&p16), gap(&p2));
}

#[test]
fn deterministic_limit_proxy_near_rho1() {
    let red = ReinforcementSpec::uniform(1.0, 3.0).unwrap();
    let white = ReinforcementSpec::uniform(0.5, 1.5).unwrap();
    let policy = ThresholdPolicy::<f64>::adaptive_mean_map(0.5, 0.3, 0.4, 0.05, 0.95, 2.0, 1.0).unwrap();
    assert!((policy.rho1_limit - 0.7).abs() < 1e-12);
    let cfg = RunConfig::new(ModelKind::Arru { policy }, red, white, 100_000)
        .with_proxy_multiplier(16)
        .with_seed(29);
    let recs = run_batch(&cfg, 20, 1).unwrap().records;
    let near = recs.iter().filter(|r| (z_infinity_proxy(r, 16).unwrap() - 0.7f64).abs() <= 0.05).count();
    assert!(near * 100 >= 95 * recs.len(), "{near} of {}", recs.len());
}

#[test]
fn proxy_requires_matching_extension() {
    let u = ReinforcementSpec::point_mass(1.0).unwrap();
    let cfg = RunConfig::new(ModelKind::Rru, u, u, 10);
    let rec = run_batch(&cfg, 1, 1).unwrap().records.remove(0);
    assert!(z_infinity_proxy(&rec, 16).is_err());
    let rec = run_batch(&cfg.with_proxy_multiplier(4), 1, 1).unwrap().records.remove(0);
    assert!(z_infinity_proxy(&rec, 16).is_err());
    assert_eq!(z_infinity_proxy(&rec, 4).unwrap(), rec.extension.unwrap().z);
}
