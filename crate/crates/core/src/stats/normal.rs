/// Standard normal CDF, `0.5 * erfc(-x / sqrt 2)`; accurate to a few ulps.
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x * std::f64::consts::FRAC_1_SQRT_2)
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct KsResult {
    pub d: f64,
    pub n: usize,
}

/// Kolmogorov–Smirnov distance between the sample and `N(0, 1)`.
pub fn ks_distance(samples: &[f64]) -> crate::Result<KsResult> {
    if samples.is_empty() {
        return Err(crate::Error::EmptySample);
    }
    if samples.iter().any(|x| x.is_nan()) {
        return Err(crate::Error::NonFinite("ks sample"));
    }
    let mut xs = samples.to_vec();
    xs.sort_by(f64::total_cmp);
    let n = xs.len() as f64;
    let d = xs.iter().enumerate().fold(0.0f64, |d, (i, &x)| {
        let phi = normal_cdf(x);
        let above = (i + 1) as f64 / n - phi;
        let below = phi - i as f64 / n;
        d.max(above).max(below)
    });
    Ok(KsResult { d, n: xs.len() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use statrs::distribution::{ContinuousCDF, Normal};

    #[test]
    fn cdf_matches_reference() {
        let oracle = Normal::standard();
        for i in -400..=400 {
            let x = i as f64 * 0.025;
            assert!((normal_cdf(x) - oracle.cdf(x)).abs() < 1e-7, "x={x}");
        }
        assert_eq!(normal_cdf(0.0), 0.5);
    }

    #[test]
    fn ks_trivial_cases() {
        assert_eq!(ks_distance(&[0.0]).unwrap().d, 0.5);
        assert!(ks_distance(&[10.0; 7]).unwrap().d > 0.999_999);
        assert!(ks_distance(&[]).is_err());
    }

    #[test]
    fn ks_at_plotting_positions() {
        let oracle = Normal::standard();
        let n = 100;
        let xs: Vec<f64> = (1..=n).map(|i| oracle.inverse_cdf((i as f64 - 0.5) / n as f64)).collect();
        let d = ks_distance(&xs).unwrap().d;
        assert!((d - 0.005).abs() < 1e-9, "{d}");
    }
}
