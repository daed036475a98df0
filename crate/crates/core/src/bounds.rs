//! A-priori bounds along global trajectories `β ≤ β₀`:
//!
//! * `u ≥ β r²/(2N)` and `u ≤ −(β₀−β) r²/(2N)`;
//! * `u ≤ −(4+α) ln r + ln λ*`, with `λ*` the first eigenvalue of
//!   `Δ²φ = λ|x|^α φ` in the unit ball under Navier conditions `φ = Δφ = 0`;
//! * `r^{2+α} e^u ≤ −β₀(2+α)(N+α)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ode::{dopri5, Control, StepperOptions};
use crate::radial::{check_dim_alpha, forcing, RadialProfile};

/// Values at r = 1 of the regular solutions with `(φ, Δφ)(0) = (1, 0)` and `(0, 1)`.
fn navier_determinant(dim: u32, alpha: f64, lambda: f64) -> f64 {
    let n = dim as f64;
    let a = alpha;
    let r0: f64 = 1e-4;
    let ra = r0.powf(a);
    let k = (4.0 + a) * (2.0 + a) * (n + 2.0 + a) * (n + a);
    // (φ, φ', Δφ, (Δφ)') for both basis solutions.
    let ya = [
        1.0 + lambda * ra * r0.powi(4) / k,
        lambda * (4.0 + a) * ra * r0.powi(3) / k,
        lambda * ra * r0 * r0 / ((2.0 + a) * (n + a)),
        lambda * ra * r0 / (n + a),
    ];
    let yb = [
        r0 * r0 / (2.0 * n),
        r0 / n,
        1.0 + lambda * ra * r0.powi(4) / (2.0 * n * (4.0 + a) * (n + 2.0 + a)),
        lambda * ra * r0.powi(3) / (2.0 * n * (n + 2.0 + a)),
    ];
    let y0 = [ya[0], ya[1], ya[2], ya[3], yb[0], yb[1], yb[2], yb[3]];
    let n1 = n - 1.0;
    let mut end = y0;
    let opts = StepperOptions {
        rtol: 1e-12,
        atol: 1e-14,
        h_init: 1e-3 * r0,
        max_rel_step: 0.05,
        ..StepperOptions::default()
    };
    let _ = dopri5(
        |r, y: &[f64; 8]| {
            let w = lambda * r.powf(a);
            Ok([
                y[1],
                y[2] - n1 * y[1] / r,
                y[3],
                w * y[0] - n1 * y[3] / r,
                y[5],
                y[6] - n1 * y[5] / r,
                y[7],
                w * y[4] - n1 * y[7] / r,
            ])
        },
        r0,
        y0,
        1.0,
        &opts,
        |s| {
            end = *s.y1;
            Control::Continue
        },
    );
    end[0] * end[6] - end[4] * end[2]
}

/// First Navier eigenvalue `λ*` of `Δ²φ = λ|x|^α φ` in the unit ball of R^N.
pub fn navier_first_eigenvalue(dim: u32, alpha: f64) -> Result<f64> {
    check_dim_alpha(dim, alpha)?;
    let d = |l| navier_determinant(dim, alpha, l);
    let mut lo = 1.0;
    let d_lo = d(lo);
    if !(d_lo > 0.0) {
        return Err(Error::Inconclusive("Navier determinant not positive at lambda = 1".into()));
    }
    let mut hi = lo;
    loop {
        hi *= 1.1;
        if d(hi) <= 0.0 {
            break;
        }
        lo = hi;
        if hi > 1e12 {
            return Err(Error::Inconclusive("no Navier eigenvalue below 1e12".into()));
        }
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if d(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Worst normalized margin of each bound; a bound holds when its margin is ≥ 0.
///
/// Margins are `(rhs − lhs)/(1 + |lhs| + |rhs|)` minimized over samples.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundsReport {
    pub beta: f64,
    pub beta0: f64,
    /// `u − β r²/(2N) ≥ 0`.
    pub lower_quadratic: f64,
    /// `−(β₀−β) r²/(2N) − u ≥ 0`.
    pub upper_quadratic: f64,
    /// `ln λ* − u − (4+α) ln r ≥ 0`.
    pub log_decay: f64,
    /// `ln λ*`.
    pub log_decay_constant: f64,
    /// `sup (u + (4+α) ln r)` over the samples.
    pub log_decay_sup: f64,
    /// `−β₀(2+α)(N+α) − r^{2+α}e^u ≥ 0`.
    pub forcing_bound: f64,
}

impl BoundsReport {
    pub fn worst(&self) -> f64 {
        self.lower_quadratic
            .min(self.upper_quadratic)
            .min(self.log_decay)
            .min(self.forcing_bound)
    }

    pub fn holds(&self, tol: f64) -> bool {
        self.worst() >= -tol
    }
}

fn margin(lhs: f64, rhs: f64) -> f64 {
    (rhs - lhs) / (1.0 + lhs.abs() + rhs.abs())
}

/// Checks the a-priori bounds on a global profile with `β ≤ β₀`.
///
/// `log_constant` overrides `ln λ*` (computed when `None`).
pub fn verify_bounds(profile: &RadialProfile, beta0: f64, log_constant: Option<f64>) -> Result<BoundsReport> {
    if !profile.is_global() {
        return Err(Error::pre("bounds apply to global profiles only"));
    }
    let p = profile.params;
    if p.beta > beta0 {
        return Err(Error::pre(format!("beta = {} exceeds beta0 = {beta0}", p.beta)));
    }
    let c = match log_constant {
        Some(c) => c,
        None => navier_first_eigenvalue(p.dim, p.alpha)?.ln(),
    };
    let n2 = 2.0 * p.n();
    let k = 4.0 + p.alpha;
    let cap = -beta0 * (2.0 + p.alpha) * (p.n() + p.alpha);
    let mut rep = BoundsReport {
        beta: p.beta,
        beta0,
        lower_quadratic: f64::INFINITY,
        upper_quadratic: f64::INFINITY,
        log_decay: f64::INFINITY,
        log_decay_constant: c,
        log_decay_sup: f64::NEG_INFINITY,
        forcing_bound: f64::INFINITY,
    };
    for s in &profile.samples {
        let r2 = s.r * s.r / n2;
        rep.lower_quadratic = rep.lower_quadratic.min(margin(p.beta * r2, s.u));
        rep.upper_quadratic = rep.upper_quadratic.min(margin(s.u, -(beta0 - p.beta) * r2));
        let ld = s.u + k * s.r.ln();
        rep.log_decay_sup = rep.log_decay_sup.max(ld);
        rep.log_decay = rep.log_decay.min(margin(ld, c));
        rep.forcing_bound = rep.forcing_bound.min(margin(forcing(s.r, p.alpha + 2.0, s.u), cap));
    }
    Ok(rep)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn navier_eigenvalue_is_bessel_zero_to_fourth_power() {
        // α = 0: λ* = j⁴ with j the first zero of J_{N/2−1}.
        let cases = [(3u32, std::f64::consts::PI), (4, 3.831705970207512), (5, 4.493409457909064)];
        for (dim, j) in cases {
            let l = navier_first_eigenvalue(dim, 0.0).unwrap();
            assert!((l / j.powi(4) - 1.0).abs() < 1e-8, "{dim}: {l} vs {}", j.powi(4));
        }
    }
}
