//! The dimension threshold `N_α`.

use crate::error::{Error, Result};

/// `f(s) = s²(s−4) − 32(4+α)(s−2)`.
pub fn threshold_poly(s: f64, alpha: f64) -> f64 {
    s * s * (s - 4.0) - 32.0 * (4.0 + alpha) * (s - 2.0)
}

fn threshold_poly_deriv(s: f64, alpha: f64) -> f64 {
    3.0 * s * s - 8.0 * s - 32.0 * (4.0 + alpha)
}

/// The unique zero of `f` in `(5, ∞)`, by Newton safeguarded with a bracket.
pub fn n_alpha(alpha: f64) -> Result<f64> {
    if !(alpha > -2.0) || !alpha.is_finite() {
        return Err(Error::pre(format!("alpha = {alpha} must satisfy alpha > -2")));
    }
    let f = |s| threshold_poly(s, alpha);
    let mut lo = 5.0;
    let mut hi = 10.0;
    while f(hi) <= 0.0 {
        lo = hi;
        hi *= 2.0;
    }
    let mut x = 0.5 * (lo + hi);
    for _ in 0..200 {
        let fx = f(x);
        if fx == 0.0 {
            return Ok(x);
        }
        if fx < 0.0 {
            lo = x;
        } else {
            hi = x;
        }
        let newton = x - fx / threshold_poly_deriv(x, alpha);
        let next = if newton > lo && newton < hi { newton } else { 0.5 * (lo + hi) };
        if (next - x).abs() <= 1e-15 * x {
            return Ok(next);
        }
        x = next;
    }
    Ok(x)
}

/// Real-valued form of `N²(N−4)²/16 − 2(4+α)(N−2)(N−4)`; zero at `N_α`, positive above.
pub fn hardy_gap(n: f64, alpha: f64) -> f64 {
    n * n * (n - 4.0) * (n - 4.0) / 16.0 - 2.0 * (4.0 + alpha) * (n - 2.0) * (n - 4.0)
}
