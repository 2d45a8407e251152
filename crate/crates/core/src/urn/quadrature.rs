//! Adaptive Simpson quadrature and Beta-weighted expectations.

use crate::Real;

const MAX_DEPTH: u32 = 48;

/// Integral of `f` over `[a, b]` to relative tolerance `rtol`.
pub fn adaptive_simpson<T: Real, F: Fn(T) -> T>(f: F, a: T, b: T, rtol: T) -> T {
    if a == b {
        return T::zero();
    }
    let (fa, fm, fb) = (f(a), f(mid(a, b)), f(b));
    let whole = simpson(a, b, fa, fm, fb);
    // A coarse first pass gives the scale the relative tolerance refers to.
    let scale = whole.abs().max(T::min_positive_value());
    recurse(&f, a, b, fa, fm, fb, whole, rtol * scale, MAX_DEPTH)
}

fn mid<T: Real>(a: T, b: T) -> T {
    a + (b - a) / T::lit(2.0)
}

fn simpson<T: Real>(a: T, b: T, fa: T, fm: T, fb: T) -> T {
    (b - a) / T::lit(6.0) * (fa + T::lit(4.0) * fm + fb)
}

#[allow(clippy::too_many_arguments)]
fn recurse<T: Real, F: Fn(T) -> T>(
    f: &F,
    a: T,
    b: T,
    fa: T,
    fm: T,
    fb: T,
    whole: T,
    tol: T,
    depth: u32,
) -> T {
    let m = mid(a, b);
    let (lm, rm) = (mid(a, m), mid(m, b));
    let (flm, frm) = (f(lm), f(rm));
    let left = simpson(a, m, fa, flm, fm);
    let right = simpson(m, b, fm, frm, fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= T::lit(15.0) * tol {
        return left + right + delta / T::lit(15.0);
    }
    let half = tol / T::lit(2.0);
    recurse(f, a, m, fa, flm, fm, left, half, depth - 1)
        + recurse(f, m, b, fm, frm, fb, right, half, depth - 1)
}

/// `E[g(X)]` for `X ~ Beta(alpha, beta)`.
///
/// Each half of `[0, 1]` is integrated in the variable `x^alpha` (resp.
/// `(1-x)^beta`), which absorbs the endpoint singularity of the density for
/// shapes below one. The same transform integrates the normaliser, so no
/// Beta function evaluation is needed.
pub fn beta_expectation<T: Real, G: Fn(T) -> T>(g: G, alpha: T, beta: T, rtol: T) -> T {
    let one = T::one();
    let half = T::lit(0.5);
    let weighted = |h: &dyn Fn(T) -> T| {
        // x in [0, 1/2]: t = x^alpha, x^(alpha-1) dx = dt / alpha.
        let lower = adaptive_simpson(
            |t: T| {
                let x = t.powf(one / alpha);
                h(x) * (one - x).powf(beta - one)
            },
            T::zero(),
            half.powf(alpha),
            rtol,
        ) / alpha;
        // x in [1/2, 1]: s = (1-x)^beta, (1-x)^(beta-1) dx = -ds / beta.
        let upper = adaptive_simpson(
            |s: T| {
                let x = one - s.powf(one / beta);
                h(x) * x.powf(alpha - one)
            },
            T::zero(),
            half.powf(beta),
            rtol,
        ) / beta;
        lower + upper
    };
    weighted(&g) / weighted(&|_| one)
}
