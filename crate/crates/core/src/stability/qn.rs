//! Roots of `Q_N(ν) = ν(ν−2)(ν+N−2)(ν+N−4) − e^{λ₀}`.
//!
//! With `ν* = −(N−4)/2` and `t = (ν−ν*)²` the quartic becomes
//! `(t − a)(t − b) − e^{λ₀}` where `a = (N−4)²/4`, `b = N²/4`.

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::logcoord::lambda0;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum QnRoots {
    /// ν1 > 0 > ν2 ≥ ν3 > ν4.
    Real { nu1: f64, nu2: f64, nu3: f64, nu4: f64, nu_star: f64 },
    /// N < N_α: ν1, ν4 real and ν2,3 = re ± i·im.
    ComplexPair { nu1: f64, nu4: f64, re: f64, im: f64, nu_star: f64 },
}

/// `P_N(ν) − e^{λ₀}`.
pub fn q_n(dim: u32, alpha: f64, nu: f64) -> Result<f64> {
    let n = dim as f64;
    Ok(nu * (nu - 2.0) * (nu + n - 2.0) * (nu + n - 4.0) - lambda0(dim, alpha)?.exp())
}

pub fn qn_roots(dim: u32, alpha: f64) -> Result<QnRoots> {
    let e = lambda0(dim, alpha)?.exp();
    let n = dim as f64;
    let nu_star = -(n - 4.0) / 2.0;
    let a = (n - 4.0) * (n - 4.0) / 4.0;
    let b = n * n / 4.0;
    let disc = ((a - b) * (a - b) + 4.0 * e).sqrt();
    let t_plus = 0.5 * (a + b + disc);
    let t_minus = (a * b - e) / t_plus;
    let s = t_plus.sqrt();
    if t_minus >= 0.0 {
        let m = t_minus.sqrt();
        Ok(QnRoots::Real {
            nu1: nu_star + s,
            nu2: nu_star + m,
            nu3: nu_star - m,
            nu4: nu_star - s,
            nu_star,
        })
    } else {
        Ok(QnRoots::ComplexPair {
            nu1: nu_star + s,
            nu4: nu_star - s,
            re: nu_star,
            im: (-t_minus).sqrt(),
            nu_star,
        })
    }
}

impl QnRoots {
    pub fn largest(&self) -> f64 {
        match *self {
            QnRoots::Real { nu1, .. } | QnRoots::ComplexPair { nu1, .. } => nu1,
        }
    }

    pub fn is_real(&self) -> bool {
        matches!(self, QnRoots::Real { .. })
    }
}
