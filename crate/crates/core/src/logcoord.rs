//! Logarithmic coordinates `s = ln r` for N ≥ 4.
//!
//! For N = 4, `w(s) = u(e^s) + (4+α)s`; for N ≥ 5 the limit constant
//! `λ₀ = ln[2(4+α)(N−2)(N−4)]` is subtracted as well. All derivatives in `s`
//! come from the stored state `(u', Δu, (Δu)')` by the chain rule.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::radial::{check_dim_alpha, ProblemParams, RadialProfile, RadialState};

/// `ln[2(4+α)(N−2)(N−4)]`, the limit of `u + (4+α) ln r` along the separatrix for N ≥ 5.
pub fn lambda0(dim: u32, alpha: f64) -> Result<f64> {
    check_dim_alpha(dim, alpha)?;
    if dim <= 4 {
        return Err(Error::pre(format!("lambda0 requires N >= 5, got N = {dim}")));
    }
    let n = dim as f64;
    Ok((2.0 * (4.0 + alpha) * (n - 2.0) * (n - 4.0)).ln())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LogSample {
    pub s: f64,
    pub w: f64,
    pub w1: f64,
    pub w2: f64,
    pub w3: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LogProfile {
    pub params: ProblemParams,
    pub lambda0: f64,
    pub samples: Vec<LogSample>,
}

/// Log-coordinate data of a single state.
pub fn log_sample(dim: u32, alpha: f64, lambda0: f64, st: &RadialState) -> LogSample {
    let n1 = dim as f64 - 1.0;
    let r = st.r;
    let upp = st.v - n1 * st.p / r;
    let uppp = st.q - n1 * (upp / r - st.p / (r * r));
    let rp = r * st.p;
    let r2upp = r * r * upp;
    LogSample {
        s: r.ln(),
        w: st.u + (4.0 + alpha) * r.ln() - lambda0,
        w1: rp + 4.0 + alpha,
        w2: rp + r2upp,
        w3: rp + 3.0 * r2upp + r * r * r * uppp,
    }
}

/// Transforms a global profile to log coordinates.
pub fn to_log(profile: &RadialProfile) -> Result<LogProfile> {
    let params = profile.params;
    if params.dim == 3 {
        return Err(Error::Unsupported(
            "N = 3 asymptotics are handled in r-coordinates".into(),
        ));
    }
    if params.dim < 4 {
        return Err(Error::pre(format!("log coordinates need N >= 4, got N = {}", params.dim)));
    }
    if !profile.is_global() {
        return Err(Error::pre("log coordinates need a global profile"));
    }
    let l0 = if params.dim == 4 { 0.0 } else { lambda0(params.dim, params.alpha)? };
    let samples = profile
        .samples
        .iter()
        .map(|st| log_sample(params.dim, params.alpha, l0, st))
        .collect();
    Ok(LogProfile {
        params,
        lambda0: l0,
        samples,
    })
}
