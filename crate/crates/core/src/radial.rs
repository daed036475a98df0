//! The radial fourth-order problem `Δ²u = r^α e^u`, `u(0) = δ`, `Δu(0) = β`,
//! `u'(0) = (Δu)'(0) = 0`, reduced to the first-order system
//!
//! ```text
//! u' = p,   p' = v − (N−1) p / r,   v' = q,   q' = r^α e^u − (N−1) q / r
//! ```
//!
//! where `v = Δu`. The origin is a regular-singular point, so trajectories are
//! started at a small radius from a truncated series.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ode::{self, Accepted, Control, Outcome, StepStats, StepperOptions};

/// Default blow-up threshold for `u`.
pub const U_MAX: f64 = 50.0;

/// Full input of the radial initial value problem.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProblemParams {
    /// Space dimension N.
    pub dim: u32,
    pub alpha: f64,
    /// u(0)
    pub delta: f64,
    /// Δu(0)
    pub beta: f64,
}

impl ProblemParams {
    pub fn new(dim: u32, alpha: f64, delta: f64, beta: f64) -> Result<Self> {
        let p = Self {
            dim,
            alpha,
            delta,
            beta,
        };
        p.validate()?;
        Ok(p)
    }

    /// Shorthand for `δ = 0`.
    pub fn with_beta(dim: u32, alpha: f64, beta: f64) -> Result<Self> {
        Self::new(dim, alpha, 0.0, beta)
    }

    pub fn validate(&self) -> Result<()> {
        check_dim_alpha(self.dim, self.alpha)?;
        if !self.delta.is_finite() || !self.beta.is_finite() {
            return Err(Error::pre("initial data must be finite"));
        }
        Ok(())
    }

    pub fn n(&self) -> f64 {
        self.dim as f64
    }

    /// Same (N, α, δ) with another β.
    pub fn at_beta(&self, beta: f64) -> Self {
        Self { beta, ..*self }
    }
}

pub(crate) fn check_dim_alpha(dim: u32, alpha: f64) -> Result<()> {
    if dim < 2 {
        return Err(Error::pre(format!("N = {dim}: the dimension must satisfy N >= 2")));
    }
    if !alpha.is_finite() || alpha <= -2.0 {
        return Err(Error::pre(format!(
            "alpha = {alpha}: no solutions for alpha <= -2 (the weight |x|^alpha must be locally integrable against e^u)"
        )));
    }
    Ok(())
}

/// One point of a trajectory: `(r, u, u', Δu, (Δu)')`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RadialState {
    pub r: f64,
    pub u: f64,
    pub p: f64,
    pub v: f64,
    pub q: f64,
}

impl RadialState {
    pub fn vector(&self) -> [f64; 4] {
        [self.u, self.p, self.v, self.q]
    }

    pub fn from_vector(r: f64, y: &[f64; 4]) -> Self {
        Self {
            r,
            u: y[0],
            p: y[1],
            v: y[2],
            q: y[3],
        }
    }
}

/// Raised by [`rhs`] when `u` exceeds the overflow guard.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BlowUpSignal {
    pub r: f64,
    pub u: f64,
}

/// `r^α e^u`, evaluated as a single exponential.
#[inline]
pub fn forcing(r: f64, alpha: f64, u: f64) -> f64 {
    (alpha * r.ln() + u).exp()
}

#[inline]
fn rhs_raw(n1: f64, alpha: f64, r: f64, y: &[f64; 4]) -> [f64; 4] {
    [
        y[1],
        y[2] - n1 * y[1] / r,
        y[3],
        forcing(r, alpha, y[0]) - n1 * y[3] / r,
    ]
}

/// Derivative of `(u, p, v, q)` with respect to `r`, guarded by `u_max`.
pub fn rhs_guarded(
    state: &RadialState,
    params: &ProblemParams,
    u_max: f64,
) -> std::result::Result<[f64; 4], BlowUpSignal> {
    if !(state.u <= u_max) {
        return Err(BlowUpSignal {
            r: state.r,
            u: state.u,
        });
    }
    Ok(rhs_raw(params.n() - 1.0, params.alpha, state.r, &state.vector()))
}

/// [`rhs_guarded`] with the default threshold [`U_MAX`].
pub fn rhs(state: &RadialState, params: &ProblemParams) -> std::result::Result<[f64; 4], BlowUpSignal> {
    rhs_guarded(state, params, U_MAX)
}

/// `(4+α)(2+α)(N+2+α)(N+α)`, so that `Δ²(r^{4+α}/K) = r^α`.
pub fn series_denominator(dim: u32, alpha: f64) -> f64 {
    let n = dim as f64;
    (4.0 + alpha) * (2.0 + alpha) * (n + 2.0 + alpha) * (n + alpha)
}

/// Three-term expansion `u = δ + β r²/(2N) + e^δ r^{4+α}/K` and its derivatives.
pub fn series_start(params: &ProblemParams, r_start: f64) -> Result<RadialState> {
    params.validate()?;
    if !(r_start > 0.0) || !r_start.is_finite() {
        return Err(Error::pre(format!("r_start = {r_start} must be positive")));
    }
    let n = params.n();
    let a = params.alpha;
    let k = series_denominator(params.dim, a);
    let ed = params.delta.exp();
    let r = r_start;
    let ra = r.powf(a);
    Ok(RadialState {
        r,
        u: params.delta + params.beta * r * r / (2.0 * n) + ed * ra * r.powi(4) / k,
        p: params.beta * r / n + ed * (4.0 + a) * ra * r.powi(3) / k,
        v: params.beta + ed * ra * r * r / ((2.0 + a) * (n + a)),
        q: ed * ra * r / (n + a),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct IntegrateOptions {
    pub rtol: f64,
    pub atol: f64,
    pub r_start: f64,
    pub u_max: f64,
    /// Maximal ratio between consecutive stored radii; also caps the step.
    pub sample_ratio: f64,
    /// Stop as soon as Δu turns nonnegative instead of following the blow-up.
    pub stop_at_crossing: bool,
}

impl Default for IntegrateOptions {
    fn default() -> Self {
        Self {
            rtol: 1e-10,
            atol: 1e-12,
            r_start: 1e-6,
            u_max: U_MAX,
            sample_ratio: 1.01,
            stop_at_crossing: false,
        }
    }
}

impl IntegrateOptions {
    pub fn with_tol(tol: f64) -> Self {
        Self {
            rtol: tol,
            ..Self::default()
        }
    }

    pub(crate) fn validate(&self) -> Result<()> {
        if !(self.rtol > 0.0 && self.atol > 0.0) {
            return Err(Error::pre("tolerances must be positive"));
        }
        if !(self.sample_ratio > 1.0) {
            return Err(Error::pre("sample_ratio must exceed 1"));
        }
        if !(self.r_start > 0.0) {
            return Err(Error::pre("r_start must be positive"));
        }
        Ok(())
    }

    fn stepper(&self) -> StepperOptions {
        StepperOptions {
            rtol: self.rtol,
            atol: self.atol,
            h_init: 1e-3 * self.r_start,
            max_rel_step: self.sample_ratio - 1.0,
            ..StepperOptions::default()
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BlowUpCause {
    /// Δu became nonnegative, after which `u` grows without bound.
    LaplacianCrossing,
    /// `u` exceeded the overflow guard.
    Overflow,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Termination {
    Global { r_max: f64 },
    BlowUp { radius: f64, cause: BlowUpCause },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProfileStats {
    pub steps: StepStats,
    pub rtol: f64,
    pub atol: f64,
    pub r_start: f64,
}

/// A sampled trajectory of the radial problem.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RadialProfile {
    pub params: ProblemParams,
    pub samples: Vec<RadialState>,
    pub termination: Termination,
    /// First radius at which Δu ≥ 0, if any.
    pub crossing: Option<f64>,
    pub stats: ProfileStats,
}

/// Integrates the radial problem from the series start up to `r_max`.
pub fn integrate(params: &ProblemParams, r_max: f64, opts: &IntegrateOptions) -> Result<RadialProfile> {
    params.validate()?;
    opts.validate()?;
    if !(r_max > opts.r_start) || !r_max.is_finite() {
        return Err(Error::pre(format!(
            "r_max = {r_max} must exceed r_start = {}",
            opts.r_start
        )));
    }
    let start = series_start(params, opts.r_start)?;
    integrate_from(params, start, r_max, opts)
}

/// Integrates from an arbitrary state (used by the comparison oracle).
pub fn integrate_from(
    params: &ProblemParams,
    start: RadialState,
    r_max: f64,
    opts: &IntegrateOptions,
) -> Result<RadialProfile> {
    params.validate()?;
    opts.validate()?;
    if !(r_max > start.r) {
        return Err(Error::pre("r_max must exceed the starting radius"));
    }
    let n1 = params.n() - 1.0;
    let alpha = params.alpha;
    let u_max = opts.u_max;
    let mut samples = vec![start];
    let mut crossing = if start.v >= 0.0 { Some(start.r) } else { None };
    let stop_at_crossing = opts.stop_at_crossing;
    if crossing.is_some() && stop_at_crossing {
        return Ok(RadialProfile {
            params: *params,
            samples,
            termination: Termination::BlowUp {
                radius: start.r,
                cause: BlowUpCause::LaplacianCrossing,
            },
            crossing,
            stats: ProfileStats {
                steps: StepStats::default(),
                rtol: opts.rtol,
                atol: opts.atol,
                r_start: start.r,
            },
        });
    }

    let f = |r: f64, y: &[f64; 4]| {
        if !(y[0] <= u_max) {
            Err(ode::Overflow)
        } else {
            Ok(rhs_raw(n1, alpha, r, y))
        }
    };
    let observer = |s: &Accepted<'_, 4>| {
        samples.push(RadialState::from_vector(s.t1, s.y1));
        if crossing.is_none() && s.y1[2] >= 0.0 {
            crossing = Some(locate_zero(s, 2));
            if stop_at_crossing {
                return Control::Stop;
            }
        }
        Control::Continue
    };
    let (outcome, steps) = ode::dopri5(f, start.r, start.vector(), r_max, &opts.stepper(), observer)?;

    let last_r = samples.last().map(|s| s.r).unwrap_or(start.r);
    let termination = match outcome {
        Outcome::Reached => match crossing {
            // Δu ≥ 0 is irreversible; the trajectory cannot be entire.
            Some(_) => Termination::BlowUp {
                radius: last_r,
                cause: BlowUpCause::LaplacianCrossing,
            },
            None => Termination::Global { r_max },
        },
        Outcome::Stopped => Termination::BlowUp {
            radius: crossing.unwrap_or(last_r),
            cause: BlowUpCause::LaplacianCrossing,
        },
        Outcome::Overflow { t } => Termination::BlowUp {
            radius: t,
            cause: BlowUpCause::Overflow,
        },
    };
    Ok(RadialProfile {
        params: *params,
        samples,
        termination,
        crossing,
        stats: ProfileStats {
            steps,
            rtol: opts.rtol,
            atol: opts.atol,
            r_start: start.r,
        },
    })
}

/// Root of component `k` inside an accepted step, by bisection on the Hermite interpolant.
fn locate_zero(s: &Accepted<'_, 4>, k: usize) -> f64 {
    let (a, b) = (s.t0, s.t1);
    let g = |t: f64| ode::hermite(a, s.y0[k], s.f0[k], b, s.y1[k], s.f1[k], t);
    if g(a) >= 0.0 {
        return a;
    }
    let (mut lo, mut hi) = (a, b);
    for _ in 0..80 {
        let mid = 0.5 * (lo + hi);
        if g(mid) >= 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    hi
}

impl RadialProfile {
    /// Global profile from externally supplied samples (synthetic data, file input).
    pub fn from_samples(params: ProblemParams, samples: Vec<RadialState>) -> Result<Self> {
        params.validate()?;
        if samples.is_empty() {
            return Err(Error::pre("a profile needs at least one sample"));
        }
        if samples.windows(2).any(|w| !(w[1].r > w[0].r)) || !(samples[0].r > 0.0) {
            return Err(Error::pre("sample radii must be positive and strictly increasing"));
        }
        let r_max = samples.last().unwrap().r;
        let crossing = samples.iter().find(|s| s.v >= 0.0).map(|s| s.r);
        let d = IntegrateOptions::default();
        Ok(RadialProfile {
            params,
            termination: Termination::Global { r_max },
            crossing,
            stats: ProfileStats {
                steps: StepStats::default(),
                rtol: d.rtol,
                atol: d.atol,
                r_start: samples[0].r,
            },
            samples,
        })
    }

    pub fn is_global(&self) -> bool {
        matches!(self.termination, Termination::Global { .. })
    }

    pub fn first(&self) -> &RadialState {
        &self.samples[0]
    }

    pub fn last(&self) -> &RadialState {
        self.samples.last().expect("profile has at least one sample")
    }

    pub fn r_end(&self) -> f64 {
        self.last().r
    }

    /// Unguarded derivative at a stored state.
    pub fn derivative(&self, s: &RadialState) -> [f64; 4] {
        rhs_raw(self.params.n() - 1.0, self.params.alpha, s.r, &s.vector())
    }

    /// Dense output by cubic Hermite interpolation between samples.
    pub fn state_at(&self, r: f64) -> Option<RadialState> {
        let first = self.first().r;
        let last = self.r_end();
        if !(r >= first && r <= last) {
            return None;
        }
        let i = match self.samples.binary_search_by(|s| s.r.total_cmp(&r)) {
            Ok(i) => return Some(self.samples[i]),
            Err(i) => i,
        };
        let (a, b) = (&self.samples[i - 1], &self.samples[i]);
        let (da, db) = (self.derivative(a), self.derivative(b));
        let (ya, yb) = (a.vector(), b.vector());
        let mut y = [0.0; 4];
        for k in 0..4 {
            y[k] = ode::hermite(a.r, ya[k], da[k], b.r, yb[k], db[k], r);
        }
        Some(RadialState::from_vector(r, &y))
    }

    /// Restriction to samples with `r <= r_cut`.
    pub fn truncated(&self, r_cut: f64) -> RadialProfile {
        let samples: Vec<_> = self.samples.iter().copied().filter(|s| s.r <= r_cut).collect();
        let r_max = samples.last().map(|s| s.r).unwrap_or(self.first().r);
        let global_part = self.crossing.map_or(true, |c| c > r_max);
        RadialProfile {
            samples,
            termination: if global_part {
                Termination::Global { r_max }
            } else {
                self.termination
            },
            crossing: self.crossing.filter(|c| *c <= r_max),
            ..self.clone()
        }
    }

    /// Lower bound `v(R) + R q(R)/(N−2)` for `lim Δu`, nondecreasing in R (N ≥ 3).
    pub fn limit_laplacian_lower_bound(&self) -> f64 {
        let s = self.last();
        s.v + s.r * s.q / (self.params.n() - 2.0)
    }
}

/// The rescaled trajectory `u_λ(r) = u(λ r) + (4+α) ln λ`.
pub fn scale_solution(profile: &RadialProfile, lambda: f64) -> Result<RadialProfile> {
    if !(lambda > 0.0) || !lambda.is_finite() {
        return Err(Error::pre(format!("lambda = {lambda} must be positive")));
    }
    let shift = (4.0 + profile.params.alpha) * lambda.ln();
    let (l2, l3) = (lambda * lambda, lambda * lambda * lambda);
    let samples = profile
        .samples
        .iter()
        .map(|s| RadialState {
            r: s.r / lambda,
            u: s.u + shift,
            p: s.p * lambda,
            v: s.v * l2,
            q: s.q * l3,
        })
        .collect();
    let termination = match profile.termination {
        Termination::Global { r_max } => Termination::Global { r_max: r_max / lambda },
        Termination::BlowUp { radius, cause } => Termination::BlowUp {
            radius: radius / lambda,
            cause,
        },
    };
    Ok(RadialProfile {
        params: ProblemParams {
            delta: profile.params.delta + shift,
            beta: profile.params.beta * l2,
            ..profile.params
        },
        samples,
        termination,
        crossing: profile.crossing.map(|c| c / lambda),
        stats: ProfileStats {
            r_start: profile.stats.r_start / lambda,
            ..profile.stats
        },
    })
}
