use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use urnlab::simulate::{detect_crossings, run_batch, run_trajectory, GridRule, Passage, RunConfig};
use urnlab::stats::{band_probability, ks_distance, studentize, CltInputs, CltStatistic};
use urnlab::thresholds::ThresholdPolicy;
use urnlab::urn::{ModelKind, ReinforcementSpec};

/// First passage above `u`, then below `d`, then above `u` again, by direct scan.
fn brute_crossings(path: &[f64], d: f64, u: f64) -> Vec<(u64, Option<u64>)> {
    let mut out = Vec::new();
    let mut from = 0;
    while let Some(t) = (from..path.len()).find(|&n| path[n] > u) {
        let tau = (t + 1..path.len()).find(|&n| path[n] < d);
        out.push((t as u64, tau.map(|x| x as u64)));
        match tau {
            Some(x) => from = x + 1,
            None => break,
        }
    }
    out
}

#[test]
fn crossings_match_brute_force_scan() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..50 {
        let mut z = rng.random::<f64>();
        let path: Vec<f64> = (0..10_000)
            .map(|_| {
                z = (z + 0.05 * (rng.random::<f64>() - 0.5)).clamp(0.0, 1.0);
                z
            })
            .collect();
        let got: Vec<(u64, Option<u64>)> = detect_crossings(&path, 0.4, 0.6)
            .iter()
            .map(|c| (c.t.step().unwrap(), c.tau.step()))
            .collect();
        assert_eq!(got, brute_crossings(&path, 0.4, 0.6));
    }
}

#[test]
fn crossing_records_on_simulated_paths() {
    let u = ReinforcementSpec::uniform(1.0, 3.0).unwrap();
    let cfg = RunConfig::new(ModelKind::Rru, u, u, 300).with_crossings(0.45, 0.55).with_grid(0..=300);
    for rep in 0..30 {
        let rec = run_trajectory(&cfg.clone().with_replication(rep)).unwrap();
        let path: Vec<f64> = rec.points.iter().map(|p| p.z).collect();
        let expect = brute_crossings(&path, 0.45, 0.55);
        assert_eq!(rec.crossings.len(), expect.len());
        for (c, (t, tau)) in rec.crossings.iter().zip(expect) {
            assert_eq!(c.t, Passage::At(t));
            assert_eq!(c.tau, tau.map_or(Passage::Never, Passage::At));
            assert_eq!(c.y_at_t, Some(rec.points[t as usize].y));
        }
    }
}

#[test]
fn batches_identical_across_thread_counts() {
    let u = ReinforcementSpec::uniform(1.0, 3.0).unwrap();
    let w = ReinforcementSpec::uniform(0.5, 1.5).unwrap();
    let policy = ThresholdPolicy::noisy_convergent(0.7, 0.3, 0.1, 0.05, 0.95).unwrap();
    let cfg = RunConfig::new(ModelKind::Arru { policy }, u, w, 2000)
        .with_proxy_multiplier(4)
        .with_crossings(0.4, 0.6)
        .with_seed(3);
    let one = serde_json::to_string(&run_batch(&cfg, 24, 1).unwrap()).unwrap();
    let four = serde_json::to_string(&run_batch(&cfg, 24, 4).unwrap()).unwrap();
    assert_eq!(one, four);
}

#[test]
fn ks_detects_shifted_sample() {
    let k = ks_distance(&(0..200).map(|i| 10.0 + i as f64 * 1e-3).collect::<Vec<_>>()).unwrap();
    assert!(k.d >= 0.9);
}

fn model_strategy() -> impl Strategy<Value = ModelKind<f64>> {
    prop_oneof![
        Just(ModelKind::Rru),
        (0.5f64..0.9, 0.1f64..0.5).prop_map(|(a, b)| ModelKind::mrru(a, b).unwrap()),
        (0.55f64..0.85, 0.15f64..0.45).prop_map(|(a, b)| ModelKind::Arru {
            policy: ThresholdPolicy::noisy_convergent(a, b, 0.05, 0.05, 0.95).unwrap()
        }),
        (0.0f64..0.3).prop_map(|gap| ModelKind::Arru {
            policy: ThresholdPolicy::adaptive_mean_map(0.5, 0.3, gap, 0.05, 0.95, 2.0, 1.0).unwrap()
        }),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn trajectory_invariants(
        model in model_strategy(),
        lo1 in 0.2f64..2.0, span1 in 0.0f64..2.0,
        lo2 in 0.2f64..2.0, span2 in 0.0f64..2.0,
        y1 in 0.1f64..20.0, y2 in 0.1f64..20.0,
        horizon in 0u64..600,
        seed in any::<u64>(),
    ) {
        let r = |lo: f64, span: f64| if span == 0.0 {
            ReinforcementSpec::point_mass(lo).unwrap()
        } else {
            ReinforcementSpec::uniform(lo, lo + span).unwrap()
        };
        let cfg = RunConfig::new(model, r(lo1, span1), r(lo2, span2), horizon)
            .with_initial(y1, y2)
            .with_seed(seed)
            .with_grid(GridRule::Linear(7).resolve(horizon));
        let rec = run_trajectory(&cfg).unwrap();
        let fin = rec.final_state;
        let (a, b) = (lo1.min(lo2), (lo1 + span1).max(lo2 + span2));
        let y0 = y1 + y2;
        let k = rec.reinforced_steps as f64;
        prop_assert!(fin.y >= y0 + a * k - 1e-9 * fin.y);
        prop_assert!(fin.y <= y0 + b * k + 1e-9 * fin.y);
        prop_assert!(rec.reinforced_steps <= fin.n);
        prop_assert_eq!(fin.n, horizon);
        prop_assert_eq!(fin.n1 + fin.n2, fin.n);
        prop_assert!(rec.points.windows(2).all(|w| w[0].n < w[1].n));
        let (l1, l2) = cfg.model.limits();
        for p in &rec.points {
            prop_assert!(p.rho2_hat <= p.rho1_hat);
            prop_assert_eq!((p.w1, p.w2), (p.z <= p.rho1_hat, p.z >= p.rho2_hat));
            let c = p.y.powf(-0.25);
            prop_assert_eq!(p.in_a_n, p.z > l2 + c && p.z < l1 - c);
            prop_assert!(p.z > 0.0 && p.z < 1.0);
        }
    }

    #[test]
    fn ks_is_permutation_invariant(mut xs in prop::collection::vec(-4.0f64..4.0, 1..200), seed in any::<u64>()) {
        let d = ks_distance(&xs).unwrap().d;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for i in (1..xs.len()).rev() {
            xs.swap(i, rng.random_range(0..=i));
        }
        prop_assert_eq!(ks_distance(&xs).unwrap().d, d);
        prop_assert!((0.0..=1.0).contains(&d));
    }

    #[test]
    fn band_probability_monotone_in_width(seed in any::<u64>(), w in 0.0f64..0.4) {
        let u = ReinforcementSpec::uniform(1.0, 3.0).unwrap();
        let cfg = RunConfig::new(ModelKind::Rru, u, u, 64).with_seed(seed);
        let recs = run_batch(&cfg, 16, 1).unwrap().records;
        let narrow = band_probability(&recs, 64, 0.5 - w, 0.5 + w).unwrap().mean;
        let wide = band_probability(&recs, 64, 0.45 - w, 0.55 + w).unwrap().mean;
        prop_assert!(narrow <= wide);
    }

    #[test]
    fn studentize_accounts_for_every_replication(seed in any::<u64>(), reps in 1u64..30) {
        let u = ReinforcementSpec::uniform(1.0, 3.0).unwrap();
        let cfg = RunConfig::new(ModelKind::Rru, u, u, 50).with_seed(seed).with_proxy_multiplier(2);
        let recs = run_batch(&cfg, reps, 1).unwrap().records;
        let inputs = CltInputs::from_specs(&u, &u);
        for which in [CltStatistic::N1, CltStatistic::Z] {
            let s = studentize(&recs, &inputs, which).unwrap();
            prop_assert_eq!(s.included + s.excluded, reps as usize);
            prop_assert_eq!(s.studentized(false).len(), s.included);
        }
    }
}
