use serde::{Deserialize, Serialize};

use super::{ReinforcementSpec, UrnState};
use crate::error::{ensure_finite, Error, Result};
use crate::Real;

/// Mixture-CLT variance components at a limiting proportion.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CltVariances<T> {
    /// `(1 - z) sigma1^2 + z sigma2^2`
    pub sigma_bar: T,
    /// Variance of `sqrt(n) (N1n / n - z)`.
    pub sigma_big: T,
    /// Variance of `sqrt(n) (Zn - z)`.
    pub sigma_z: T,
}

pub fn clt_variances<T: Real>(z_inf: T, m: T, sigma1_sq: T, sigma2_sq: T) -> Result<CltVariances<T>> {
    ensure_finite("m", m)?;
    if !(m > T::zero()) {
        return Err(Error::param("m", "mean reinforcement must be positive"));
    }
    if !(z_inf >= T::zero() && z_inf <= T::one()) {
        return Err(Error::param("z_inf", "must lie in [0, 1]"));
    }
    if !(sigma1_sq >= T::zero()) || !(sigma2_sq >= T::zero()) {
        return Err(Error::param("sigma_sq", "variances must be non-negative"));
    }
    let one = T::one();
    let sigma_bar = (one - z_inf) * sigma1_sq + z_inf * sigma2_sq;
    let spread = z_inf * (one - z_inf);
    let ratio = sigma_bar / (m * m);
    Ok(CltVariances {
        sigma_bar,
        sigma_big: (one + T::lit(2.0) * ratio) * spread,
        sigma_z: (one + ratio) * spread,
    })
}

/// `E[Z_{n+1} - Z_n | F_n] = Z_n (1 - Z_n) B_n` for the given indicators.
pub fn conditional_drift<T: Real>(
    state: &UrnState<T>,
    w1: bool,
    w2: bool,
    r1: &ReinforcementSpec<T>,
    r2: &ReinforcementSpec<T>,
) -> T {
    let red = if w1 { r1.expected_share(state.y) } else { T::zero() };
    let white = if w2 { r2.expected_share(state.y) } else { T::zero() };
    state.z * (T::one() - state.z) * (red - white)
}

/// Admissible interval `(0, exp(c1 delta / 2b) - 1)` for the window length `s`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SDeltaWindow<T> {
    pub low: T,
    pub high: T,
    /// Midpoint of the open interval.
    pub chosen: T,
}

pub fn s_delta_window<T: Real>(c1: T, b: T, delta: T) -> Result<SDeltaWindow<T>> {
    if !(c1 > T::zero()) || !c1.is_finite() {
        return Err(Error::param("c1", "must be positive"));
    }
    if !(b > T::zero()) || !b.is_finite() {
        return Err(Error::param("b", "must be positive"));
    }
    if !(delta > T::zero()) {
        return Err(Error::EmptyWindow(delta.as_f64()));
    }
    let high = (c1 * delta / (T::lit(2.0) * b)).exp_m1();
    Ok(SDeltaWindow { low: T::zero(), high, chosen: high / T::lit(2.0) })
}

/// `true` iff `y > b (1 - eps) / eps`, in which case the next step moves the
/// proportion by strictly less than `eps`.
pub fn step_bound_guard<T: Real>(y: T, b: T, epsilon: T) -> Result<bool> {
    if !(epsilon > T::zero() && epsilon < T::one()) {
        return Err(Error::param("epsilon", "must lie in (0, 1)"));
    }
    Ok(y > b * (T::one() - epsilon) / epsilon)
}

/// Lower-tail Chernoff bound `P(S <= c0 E[S]) <= exp(-(1 - c0)^2 E[S] / 2)`
/// for sums of independent [0, 1] variables.
pub fn chernoff_lower_tail<T: Real>(c0: T, expected_sum: T) -> Result<T> {
    if !(c0 >= T::zero() && c0 < T::one()) {
        return Err(Error::param("c0", "must lie in [0, 1)"));
    }
    if !(expected_sum > T::zero()) {
        return Err(Error::param("expected_sum", "must be positive"));
    }
    let gap = T::one() - c0;
    Ok((-gap * gap * expected_sum / T::lit(2.0)).exp())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn clt_variance_examples() {
        let v = clt_variances(0.5, 1.0, 0.0, 0.0).unwrap();
        assert_eq!((v.sigma_bar, v.sigma_big, v.sigma_z), (0.0, 0.25, 0.25));

        let v = clt_variances(0.5, 2.0, 1.0, 1.0).unwrap();
        assert_eq!(v.sigma_bar, 1.0);
        assert_relative_eq!(v.sigma_big, 0.375);
        assert_relative_eq!(v.sigma_z, 0.3125);

        for z in [0.0, 1.0] {
            let v = clt_variances(z, 1.5, 0.7, 0.2).unwrap();
            assert_eq!((v.sigma_big, v.sigma_z), (0.0, 0.0));
        }
        assert!(clt_variances(0.5, 0.0, 1.0, 1.0).is_err());
        assert!(clt_variances(1.5, 1.0, 1.0, 1.0).is_err());
        assert!(clt_variances(0.5, 1.0, -1.0, 1.0).is_err());
    }

    #[test]
    fn clt_variances_are_ordered() {
        for z in [0.1, 0.4, 0.9] {
            let v = clt_variances(z, 2.0, 0.3, 0.1).unwrap();
            assert!(v.sigma_big >= v.sigma_z && v.sigma_z >= 0.0);
            let d = clt_variances(z, 2.0, 0.0, 0.0).unwrap();
            assert_eq!(d.sigma_big, d.sigma_z);
        }
    }

    #[test]
    fn drift_examples() {
        let point = |c| ReinforcementSpec::point_mass(c).unwrap();
        let s = UrnState::new(3.0, 7.0).unwrap();
        assert_eq!(conditional_drift(&s, true, true, &point(2.0), &point(2.0)), 0.0);

        let s = UrnState::new(5.0, 5.0).unwrap();
        let d = conditional_drift(&s, true, true, &point(2.0), &point(1.0));
        assert_relative_eq!(d, 0.25 * 5.0 / 66.0, max_relative = 1e-15);

        let d = conditional_drift(&s, true, false, &point(3.0), &point(1.0));
        assert_relative_eq!(d, 0.25 * 3.0 / 13.0, max_relative = 1e-15);
        assert!(conditional_drift(&s, false, true, &point(3.0), &point(1.0)) < 0.0);
    }

    #[test]
    fn uniform_drift_matches_closed_form() {
        let u = ReinforcementSpec::uniform(1.0, 3.0).unwrap();
        let p = ReinforcementSpec::point_mass(1.0).unwrap();
        let s = UrnState::new(4.0, 16.0).unwrap();
        let y: f64 = 20.0;
        let share = 1.0 - y * ((y + 3.0) / (y + 1.0)).ln() / 2.0;
        let exact = 0.2 * 0.8 * (share - 1.0 / 21.0);
        assert_relative_eq!(conditional_drift(&s, true, true, &u, &p), exact, max_relative = 1e-10);
    }

    #[test]
    fn s_delta_examples() {
        let w = s_delta_window(2.0, 1.0, 4f64.ln()).unwrap();
        assert_relative_eq!(w.high, 3.0, max_relative = 1e-14);
        assert_relative_eq!(w.chosen, 1.5, max_relative = 1e-14);

        let w = s_delta_window(1.0, 1.0, 2.0).unwrap();
        assert_relative_eq!(w.high, std::f64::consts::E - 1.0, max_relative = 1e-14);
        assert_relative_eq!(w.chosen, 0.859_140_914_229_522_6, max_relative = 1e-14);

        let tiny = s_delta_window(1.0, 1.0, 1e-12).unwrap();
        assert!(tiny.high > 0.0 && tiny.high < 1e-11);
        assert_eq!(s_delta_window(1.0, 1.0, 0.0), Err(Error::EmptyWindow(0.0)));
        assert!(s_delta_window(0.0, 1.0, 0.1).is_err());
    }

    #[test]
    fn guard_examples() {
        assert!(step_bound_guard(2.0, 1.0, 0.5).unwrap());
        assert!(!step_bound_guard(0.5, 1.0, 0.5).unwrap());
        assert!(!step_bound_guard(16.0, 4.0, 0.2).unwrap());
        assert!(step_bound_guard(16.000001, 4.0, 0.2).unwrap());
        assert!(step_bound_guard(1.0, 1.0, 0.0).is_err());
        assert!(step_bound_guard(1.0, 1.0, 1.0).is_err());
    }

    #[test]
    fn chernoff_examples() {
        assert_relative_eq!(chernoff_lower_tail(0.5, 8.0).unwrap(), (-1.0f64).exp());
        assert_relative_eq!(chernoff_lower_tail(0.0, 2.0).unwrap(), (-1.0f64).exp());
        assert!(chernoff_lower_tail(1.0 - 1e-9, 10.0).unwrap() > 0.999_999);
        assert!(chernoff_lower_tail(1.0, 10.0).is_err());
        assert!(chernoff_lower_tail(-0.1, 10.0).is_err());
    }
}
