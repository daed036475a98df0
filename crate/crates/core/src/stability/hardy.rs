//! Hardy–Rellich weights and pointwise stability certificates.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::radial::{forcing, RadialProfile};

/// `N²(N−4)²/16`.
pub fn hardy_constant(dim: u32) -> f64 {
    let n = dim as f64;
    n * n * (n - 4.0) * (n - 4.0) / 16.0
}

/// Weight `w_N(r)` with `∫|Δφ|² ≥ ∫ w_N φ²` for radial test functions.
pub fn hardy_weight(dim: u32, r: f64) -> Result<f64> {
    if !(r > 0.0) {
        return Err(Error::pre(format!("r = {r} must be positive")));
    }
    if dim == 4 {
        if !(r > 1.0) {
            return Err(Error::pre("the N = 4 weight is defined for r > 1 only"));
        }
        let l = r.ln();
        return Ok(1.0 / (4.0 * r.powi(4) * l * l));
    }
    Ok(hardy_constant(dim) / r.powi(4))
}

/// Weights for N ≤ 4 only hold for test functions supported outside the unit ball.
fn weight_domain_start(dim: u32) -> f64 {
    if dim <= 4 {
        1.0
    } else {
        0.0
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HardyMargin {
    /// `inf (w_N − r^α e^u)` over samples with `r ≥ r_from`; `-inf` if the weight is unavailable there.
    pub margin: f64,
    /// Radius of the worst sample.
    pub at: f64,
}

/// Worst pointwise margin `w_N(r) − r^α e^{u(r)}` over samples `r ≥ r_from`.
pub fn hardy_check(profile: &RadialProfile, r_from: f64) -> HardyMargin {
    let dim = profile.params.dim;
    let alpha = profile.params.alpha;
    if r_from <= weight_domain_start(dim) {
        return HardyMargin {
            margin: f64::NEG_INFINITY,
            at: r_from,
        };
    }
    let mut worst = HardyMargin {
        margin: f64::INFINITY,
        at: r_from,
    };
    for s in profile.samples.iter().filter(|s| s.r >= r_from) {
        let w = hardy_weight(dim, s.r).unwrap_or(f64::NEG_INFINITY);
        let m = w - forcing(s.r, alpha, s.u);
        if m < worst.margin {
            worst = HardyMargin { margin: m, at: s.r };
        }
    }
    worst
}

/// Smallest sample radius beyond which the pointwise Hardy margin stays nonnegative.
pub fn tail_certificate(profile: &RadialProfile) -> Option<f64> {
    let dim = profile.params.dim;
    let alpha = profile.params.alpha;
    let floor = weight_domain_start(dim);
    let mut start = None;
    for s in profile.samples.iter().rev() {
        if s.r <= floor {
            break;
        }
        let ok = hardy_weight(dim, s.r).map_or(false, |w| w >= forcing(s.r, alpha, s.u));
        if !ok {
            break;
        }
        start = Some(s.r);
    }
    start
}

/// The explicit stable-side value `β′ = β₀ − N(4+α)e^{−1}H^{−2/(4+α)}`, N ≥ 5.
///
/// It is the minimum over r of `(2N/r²) ln(H/r^{4+α}) + β₀`, `H = N²(N−4)²/16`.
pub fn beta_prime(dim: u32, alpha: f64, beta0: f64) -> Result<f64> {
    if dim < 5 {
        return Err(Error::pre("beta_prime needs N >= 5"));
    }
    let n = dim as f64;
    let k = 4.0 + alpha;
    Ok(beta0 - n * k * (-1.0f64).exp() * hardy_constant(dim).powf(-2.0 / k))
}
