//! Asymptotic data of the separatrix.
//!
//! * N = 3: `u = a₁r + a₂ + a₃/r + O(e^{−cr})` with `a₁ = −½∫r^{2+α}e^u`,
//!   `a₂ = ½∫r^{3+α}e^u`, `a₃ = −⅙∫r^{4+α}e^u`, cross-checked by a tail fit.
//! * N = 4: `u = −c₀ ln r + C_T + o(1)`, `c₀ = ¼∫r^{3+α}e^u = 8+2α`,
//!   `C_T = ¼∫r^{3+α} ln r e^u`.
//! * N ≥ 5: `u + (4+α) ln r → λ₀`.
//!
//! Energies in log coordinates: conserved for N = 4, nondecreasing for N ≥ 5.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::logcoord::{lambda0, LogProfile};
use crate::quadrature::{profile_moment, Moment};
use crate::radial::RadialProfile;
use crate::stability::{n_alpha, qn_roots, QnRoots};

fn relative_change(a: f64, b: f64) -> f64 {
    if a == b {
        0.0
    } else {
        (a - b).abs() / a.abs().max(b.abs())
    }
}

/// Moment plus its change when every other sample is dropped.
fn moment_with_refinement(profile: &RadialProfile, power: f64, log_weight: bool) -> Result<(Moment, f64)> {
    let fine = profile_moment(profile, power, log_weight, 1)?;
    let coarse = profile_moment(profile, power, log_weight, 2)?;
    Ok((fine, relative_change(fine.total(), coarse.total())))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AsymptoticsN3 {
    pub a1: f64,
    pub a2: f64,
    pub a3: f64,
    pub a1_fit: f64,
    pub a2_fit: f64,
    pub a3_fit: f64,
    pub fit_window: (f64, f64),
    /// Max |u − fit| over the window.
    pub residual: f64,
    /// Largest relative change of an integral under step doubling.
    pub refinement: f64,
    /// Largest tail estimate among the three integrals.
    pub tail: f64,
}

impl AsymptoticsN3 {
    /// `max_i |a_i − a_i_fit| / |a_i|`.
    pub fn agreement(&self) -> f64 {
        [(self.a1, self.a1_fit), (self.a2, self.a2_fit), (self.a3, self.a3_fit)]
            .iter()
            .map(|&(a, f)| if a == f { 0.0 } else { (a - f).abs() / a.abs() })
            .fold(0.0, f64::max)
    }
}

/// Least-squares fit of `u` against `(r, 1, 1/r)` on `[lo, hi]`, with column scaling.
fn fit_n3(profile: &RadialProfile, lo: f64, hi: f64) -> Result<([f64; 3], f64)> {
    let pts: Vec<(f64, f64)> = profile
        .samples
        .iter()
        .filter(|s| s.r >= lo && s.r <= hi)
        .map(|s| (s.r, s.u))
        .collect();
    if pts.len() < 6 {
        return Err(Error::pre("fit window holds too few samples"));
    }
    let scale = [hi, 1.0, 1.0 / lo];
    let a = DMatrix::from_fn(pts.len(), 3, |i, j| {
        let r = pts[i].0;
        [r, 1.0, 1.0 / r][j] / scale[j]
    });
    let b = DVector::from_iterator(pts.len(), pts.iter().map(|p| p.1));
    let svd = a.clone().svd(true, true);
    let x = svd
        .solve(&b, 1e-14)
        .map_err(|e| Error::Inconclusive(format!("least squares failed: {e}")))?;
    let coef = [x[0] / scale[0], x[1] / scale[1], x[2] / scale[2]];
    let residual = pts
        .iter()
        .map(|&(r, u)| (u - coef[0] * r - coef[1] - coef[2] / r).abs())
        .fold(0.0, f64::max);
    Ok((coef, residual))
}

pub fn coeffs_n3(separatrix: &RadialProfile) -> Result<AsymptoticsN3> {
    let p = separatrix.params;
    if p.dim != 3 {
        return Err(Error::pre(format!("coeffs_n3 needs N = 3, got N = {}", p.dim)));
    }
    if !separatrix.is_global() {
        return Err(Error::pre("coeffs_n3 needs a global profile"));
    }
    let r_max = separatrix.r_end();
    if r_max < 1e3 * (1.0 - 1e-12) {
        return Err(Error::pre(format!("coeffs_n3 needs r_max >= 1e3, got {r_max:e}")));
    }
    let a = p.alpha;
    let (m2, c2) = moment_with_refinement(separatrix, 2.0 + a, false)?;
    let (m3, c3) = moment_with_refinement(separatrix, 3.0 + a, false)?;
    let (m4, c4) = moment_with_refinement(separatrix, 4.0 + a, false)?;
    let a1 = -0.5 * m2.total();
    let tail = m2.tail.abs().max(m3.tail.abs()).max(m4.tail.abs());
    if 0.5 * m2.tail.abs() > 1e-8 * a1.abs() {
        return Err(Error::InsufficientDecay(format!(
            "tail {:e} exceeds 1e-8 |a1| = {:e}",
            0.5 * m2.tail,
            1e-8 * a1.abs()
        )));
    }
    let window = (0.6 * r_max, 0.95 * r_max);
    let (fit, residual) = fit_n3(separatrix, window.0, window.1)?;
    Ok(AsymptoticsN3 {
        a1,
        a2: 0.5 * m3.total(),
        a3: -m4.total() / 6.0,
        a1_fit: fit[0],
        a2_fit: fit[1],
        a3_fit: fit[2],
        fit_window: window,
        residual,
        refinement: c2.max(c3).max(c4),
        tail,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AsymptoticsN4 {
    pub c0: f64,
    pub ct: f64,
    pub c0_expected: f64,
    /// `|(4+α)² − (4+α−c₀)²| / (4+α)²`.
    pub energy_identity: f64,
    /// Radius at which the tail residual is evaluated.
    pub r_eval: f64,
    /// `u + c₀ ln r − C_T` at `r_eval`.
    pub tail_residual: f64,
    pub refinement: f64,
}

impl AsymptoticsN4 {
    pub fn mass_error(&self) -> f64 {
        (self.c0 - self.c0_expected).abs() / self.c0_expected
    }
}

/// Mass and constant term for N = 4; the tail residual is taken at `min(r_eval, r_max)`.
pub fn mass_n4(separatrix: &RadialProfile, r_eval: f64) -> Result<AsymptoticsN4> {
    let p = separatrix.params;
    if p.dim != 4 {
        return Err(Error::pre(format!("mass_n4 needs N = 4, got N = {}", p.dim)));
    }
    if !separatrix.is_global() {
        return Err(Error::pre("mass_n4 needs a global profile"));
    }
    let a = p.alpha;
    let (m, c1) = moment_with_refinement(separatrix, 3.0 + a, false)?;
    let (ml, c2) = moment_with_refinement(separatrix, 3.0 + a, true)?;
    let c0 = 0.25 * m.total();
    let ct = 0.25 * ml.total();
    let k = 4.0 + a;
    let r_eval = r_eval.min(separatrix.r_end());
    let u = separatrix
        .state_at(r_eval)
        .ok_or_else(|| Error::pre("r_eval outside the profile"))?
        .u;
    Ok(AsymptoticsN4 {
        c0,
        ct,
        c0_expected: 8.0 + 2.0 * a,
        energy_identity: (k * k - (k - c0) * (k - c0)).abs() / (k * k),
        r_eval,
        tail_residual: u + c0 * r_eval.ln() - ct,
        refinement: c1.max(c2),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Approach {
    Monotone,
    Oscillatory,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LimitReport {
    pub lambda0: f64,
    /// `sup |w|` over `[r_end/10, r_end]`.
    pub sup_last_decade: f64,
    pub last_decade: (f64, f64),
    pub final_w: f64,
    pub approach: Approach,
    /// Sign changes of `w'` over samples with `r ≥ 10`.
    pub sign_changes: usize,
    /// `max w` over all samples.
    pub max_w: f64,
    /// `N ≥ N_α`, where `w ≤ 0` must hold everywhere.
    pub upper_bound_applies: bool,
}

impl LimitReport {
    pub fn upper_bound_holds(&self) -> Option<bool> {
        self.upper_bound_applies.then_some(self.max_w <= 0.0)
    }
}

pub fn check_limit_n5(log: &LogProfile) -> Result<LimitReport> {
    let p = log.params;
    let l0 = lambda0(p.dim, p.alpha)?;
    let last = log.samples.last().ok_or_else(|| Error::pre("empty profile"))?;
    let s_end = last.s;
    let s_lo = s_end - std::f64::consts::LN_10;
    let sup_last_decade = log
        .samples
        .iter()
        .filter(|x| x.s >= s_lo)
        .map(|x| x.w.abs())
        .fold(0.0, f64::max);
    let mut sign_changes = 0;
    let mut prev = 0.0f64;
    for x in log.samples.iter().filter(|x| x.s >= std::f64::consts::LN_10) {
        if x.w1 != 0.0 {
            if prev != 0.0 && (x.w1 > 0.0) != (prev > 0.0) {
                sign_changes += 1;
            }
            prev = x.w1;
        }
    }
    let max_w = log.samples.iter().map(|x| x.w).fold(f64::NEG_INFINITY, f64::max);
    Ok(LimitReport {
        lambda0: l0,
        sup_last_decade,
        last_decade: (s_lo.exp(), s_end.exp()),
        final_w: last.w,
        approach: if sign_changes == 0 { Approach::Monotone } else { Approach::Oscillatory },
        sign_changes,
        max_w,
        upper_bound_applies: p.n() >= n_alpha(p.alpha)?,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EnergyRegime {
    /// N = 4: `E = w‴w′ − w″²/2 − 2w′² − e^w`, constant.
    Conservative,
    /// N ≥ 5: `E = w‴w′ − w″²/2 + 2(N−4)w″w′ + ½(N²−10N+20)w′² − e^{λ₀}(e^w−w−1)`,
    /// with `E′ = 2(N−4)w″² + 2(N−2)(N−4)w′²`.
    Monotone,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnergyTrace {
    pub regime: EnergyRegime,
    /// `(s, E(s))`.
    pub samples: Vec<(f64, f64)>,
}

impl EnergyTrace {
    fn in_range(&self, s_range: (f64, f64)) -> impl Iterator<Item = &(f64, f64)> {
        self.samples.iter().filter(move |x| x.0 >= s_range.0 && x.0 <= s_range.1)
    }

    /// `max |E(s) − E(s₀)| / (1 + |E(s₀)|)` over the samples in `s_range`.
    pub fn relative_drift(&self, s_range: (f64, f64)) -> f64 {
        let mut it = self.in_range(s_range);
        let Some(&(_, e0)) = it.next() else { return 0.0 };
        it.map(|x| (x.1 - e0).abs() / (1.0 + e0.abs())).fold(0.0, f64::max)
    }

    /// Largest drop `E(s₁) − E(s₂)` with `s₁ < s₂`, each normalized by `1 + |E(s₁)|`.
    pub fn max_decrease(&self, s_range: (f64, f64)) -> f64 {
        let mut running_max = f64::NEG_INFINITY;
        let mut worst = 0.0f64;
        for &(_, e) in self.in_range(s_range) {
            if running_max > e {
                worst = worst.max((running_max - e) / (1.0 + running_max.abs()));
            }
            running_max = running_max.max(e);
        }
        worst
    }

    pub fn final_value(&self) -> f64 {
        self.samples.last().map_or(f64::NAN, |x| x.1)
    }
}

pub fn energy_trace(log: &LogProfile) -> Result<EnergyTrace> {
    let p = log.params;
    let n = p.n();
    match p.dim {
        3 => Err(Error::Unsupported("no log-coordinate energy for N = 3".into())),
        4 => Ok(EnergyTrace {
            regime: EnergyRegime::Conservative,
            samples: log
                .samples
                .iter()
                .map(|x| (x.s, x.w3 * x.w1 - 0.5 * x.w2 * x.w2 - 2.0 * x.w1 * x.w1 - x.w.exp()))
                .collect(),
        }),
        d if d >= 5 => {
            let el = log.lambda0.exp();
            let c2 = 2.0 * (n - 4.0);
            let c1 = 0.5 * (n * n - 10.0 * n + 20.0);
            Ok(EnergyTrace {
                regime: EnergyRegime::Monotone,
                samples: log
                    .samples
                    .iter()
                    .map(|x| {
                        let pot = x.w.exp_m1() - x.w;
                        (
                            x.s,
                            x.w3 * x.w1 - 0.5 * x.w2 * x.w2 + c2 * x.w2 * x.w1 + c1 * x.w1 * x.w1 - el * pot,
                        )
                    })
                    .collect(),
            })
        }
        _ => Err(Error::pre("energy needs N >= 4")),
    }
}

/// `lim E(s)` for N ≥ 5, extrapolated from the last decade of a trace.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnergyLimit {
    pub limit: f64,
    /// Energy at the last sample.
    pub last: f64,
    pub window: (f64, f64),
    /// Max |E − fit| over the window.
    pub residual: f64,
}

/// Near `w = 0` the energy is a quadratic form in the slowest linear modes `e^{νs}`,
/// `Q_N(ν) = 0`, so `E(s) − E(∞)` is a combination of `e^{(ν_i+ν_j)s}`. Those rates
/// are fixed and the constant is found by least squares over the last decade.
pub fn energy_limit(log: &LogProfile) -> Result<EnergyLimit> {
    let p = log.params;
    let trace = energy_trace(log)?;
    if trace.regime != EnergyRegime::Monotone {
        return Err(Error::pre("energy_limit needs N >= 5"));
    }
    let s_end = trace.samples.last().map_or(0.0, |x| x.0);
    let s_lo = s_end - std::f64::consts::LN_10;
    let pts: Vec<(f64, f64)> = trace.samples.iter().copied().filter(|x| x.0 >= s_lo).collect();
    if pts.len() < 12 {
        return Err(Error::pre("too few samples in the last decade"));
    }
    let basis: Box<dyn Fn(f64) -> [f64; 4]> = match qn_roots(p.dim, p.alpha)? {
        QnRoots::ComplexPair { re, im, .. } => Box::new(move |s: f64| {
            let d = (2.0 * re * (s - s_end)).exp();
            [1.0, d, d * (2.0 * im * s).cos(), d * (2.0 * im * s).sin()]
        }),
        QnRoots::Real { nu2, nu3, .. } if nu2 - nu3 > 1e-3 => Box::new(move |s: f64| {
            let t = s - s_end;
            [1.0, (2.0 * nu2 * t).exp(), ((nu2 + nu3) * t).exp(), (2.0 * nu3 * t).exp()]
        }),
        QnRoots::Real { nu2, .. } => Box::new(move |s: f64| {
            let t = s - s_end;
            let d = (2.0 * nu2 * t).exp();
            [1.0, d, d * t, d * t * t]
        }),
    };
    let rows: Vec<[f64; 4]> = pts.iter().map(|x| basis(x.0)).collect();
    let mut scale = [0.0f64; 4];
    for r in &rows {
        for j in 0..4 {
            scale[j] = scale[j].max(r[j].abs());
        }
    }
    let a = DMatrix::from_fn(rows.len(), 4, |i, j| rows[i][j] / scale[j]);
    let b = DVector::from_iterator(pts.len(), pts.iter().map(|x| x.1));
    let x = a
        .clone()
        .svd(true, true)
        .solve(&b, 1e-14)
        .map_err(|e| Error::Inconclusive(format!("least squares failed: {e}")))?;
    let residual = (a * &x - b).amax();
    Ok(EnergyLimit {
        limit: x[0] / scale[0],
        last: trace.final_value(),
        window: (s_lo.exp(), s_end.exp()),
        residual,
    })
}
