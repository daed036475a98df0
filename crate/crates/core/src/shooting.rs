//! Global/blow-up classification and bisection for the separatrix `β₀`.
//!
//! A trajectory is declared
//!
//! * `BlowUp` when Δu turns nonnegative, `u` overflows, or the lower bound
//!   `v(R) + R q(R)/(N−2)` of `lim Δu` is already positive;
//! * `Global` when that lower bound is negative and the forcing
//!   `R^{2+α} e^{u(R)}` has become negligible against `|Δu(R)|`, so the
//!   trajectory follows its biharmonic (quadratic) tail;
//! * `Undecided` otherwise, which triggers doubling of `r_max`.
//!
//! Trajectories still undecided at the `r_max` cap are resolved by the sign of
//! their projection on the growing mode of the far-field linearization
//! (flagged in the result).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::logcoord::{lambda0, log_sample};
use crate::par::{self, Execution};
use crate::radial::{forcing, integrate, IntegrateOptions, ProblemParams, RadialProfile, Termination};
use crate::stability::qn_roots;

/// A trajectory counts as settled when `R^{2+α}e^{u(R)} ≤ FORCING_RATIO·|Δu(R)|`.
pub const FORCING_RATIO: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Global,
    BlowUp,
    Undecided,
}

/// What decided a verdict.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Certificate {
    LaplacianCrossing,
    Overflow,
    /// `v + Rq/(N−2) > 0`.
    LimitBound,
    /// Negligible forcing with a negative limit bound.
    ForcingDecay,
    /// Heuristic sign of the departing mode at the `r_max` cap.
    DepartureSign,
    None,
}

impl Certificate {
    pub fn is_heuristic(self) -> bool {
        matches!(self, Certificate::DepartureSign | Certificate::None)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Classification {
    pub verdict: Verdict,
    pub certificate: Certificate,
    pub r_max: f64,
}

pub fn classify(profile: &RadialProfile) -> Classification {
    let r_max = profile.r_end();
    let mk = |verdict, certificate| Classification {
        verdict,
        certificate,
        r_max,
    };
    if let Termination::BlowUp { cause, .. } = profile.termination {
        return match cause {
            crate::radial::BlowUpCause::LaplacianCrossing => mk(Verdict::BlowUp, Certificate::LaplacianCrossing),
            crate::radial::BlowUpCause::Overflow => mk(Verdict::BlowUp, Certificate::Overflow),
        };
    }
    if profile.crossing.is_some() {
        return mk(Verdict::BlowUp, Certificate::LaplacianCrossing);
    }
    let s = profile.last();
    if profile.params.dim >= 3 && profile.limit_laplacian_lower_bound() > 0.0 {
        return mk(Verdict::BlowUp, Certificate::LimitBound);
    }
    let bound_negative = profile.params.dim < 3 || profile.limit_laplacian_lower_bound() < 0.0;
    if bound_negative && forcing(s.r, profile.params.alpha + 2.0, s.u) <= FORCING_RATIO * s.v.abs() {
        return mk(Verdict::Global, Certificate::ForcingDecay);
    }
    mk(Verdict::Undecided, Certificate::None)
}

/// Signed departure of the last state from the separatrix tail; negative means
/// the trajectory is leaving on the global side.
///
/// For N ≥ 5 this is `L = w‴ + b₂w″ + b₁w′ + b₀w` in log coordinates, where
/// `ν³ + b₂ν² + b₁ν + b₀` is the characteristic polynomial of the linearization
/// with its growing root `ν₁` removed, so `L` isolates the `e^{ν₁ s}` mode.
/// For N ≤ 4 the limit bound of Δu is used.
pub fn departure_indicator(profile: &RadialProfile) -> f64 {
    let p = profile.params;
    if p.dim <= 4 {
        return profile.limit_laplacian_lower_bound();
    }
    let (Ok(l0), Ok(roots)) = (lambda0(p.dim, p.alpha), qn_roots(p.dim, p.alpha)) else {
        return f64::NAN;
    };
    let n = p.n();
    let nu = roots.largest();
    let (a3, a2, a1) = (2.0 * (n - 4.0), n * n - 10.0 * n + 20.0, -2.0 * (n - 2.0) * (n - 4.0));
    let b2 = a3 + nu;
    let b1 = a2 + nu * b2;
    let b0 = a1 + nu * b1;
    let w = log_sample(p.dim, p.alpha, l0, profile.last());
    w.w3 + b2 * w.w2 + b1 * w.w1 + b0 * w.w
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ShootOptions {
    pub r_max: f64,
    pub r_max_cap: f64,
    pub integrate: IntegrateOptions,
    /// Resolve trajectories still undecided at the cap by [`departure_indicator`]
    /// instead of failing with `InconclusiveBracket`.
    pub resolve_at_cap: bool,
    pub max_iterations: usize,
}

impl Default for ShootOptions {
    fn default() -> Self {
        Self {
            r_max: 1e3,
            r_max_cap: 1e5,
            integrate: IntegrateOptions {
                stop_at_crossing: true,
                ..IntegrateOptions::default()
            },
            resolve_at_cap: true,
            max_iterations: 200,
        }
    }
}

impl ShootOptions {
    fn validate(&self) -> Result<()> {
        if !(self.r_max > self.integrate.r_start) || !(self.r_max_cap >= self.r_max) || !self.r_max_cap.is_finite() {
            return Err(Error::pre("need r_start < r_max <= r_max_cap < inf"));
        }
        Ok(())
    }
}

/// One classified trajectory.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Evaluation {
    pub beta: f64,
    pub verdict: Verdict,
    pub certificate: Certificate,
    pub r_max: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct ShootResult {
    pub params: ProblemParams,
    pub beta0: f64,
    /// `(β_low, β_high)`: global and blow-up endpoints.
    pub bracket: (f64, f64),
    pub tol_beta: f64,
    pub iterations: usize,
    pub r_max_used: f64,
    /// Bisection stopped because no float lies strictly inside the bracket.
    pub float_exhausted: bool,
    /// Largest β certified global and smallest certified blow-up, without heuristics.
    pub certified_bracket: (Option<f64>, Option<f64>),
    /// Number of verdicts taken from the departure indicator at the cap.
    pub heuristic_decisions: usize,
    pub low_certificate: Certificate,
    pub high_certificate: Certificate,
    /// `|Δu(β_low)|` at the end of the global witness.
    pub separatrix_laplacian: f64,
    pub history: Vec<Evaluation>,
    #[serde(skip)]
    pub witness_global: RadialProfile,
    #[serde(skip)]
    pub witness_blowup: RadialProfile,
}

/// Default bisection tolerance `10⁻¹⁰·max(1, |β_low|)`.
pub fn default_tol_beta(beta_low: f64) -> f64 {
    1e-10 * beta_low.abs().max(1.0)
}

/// Classifies one β, doubling `r_max` from `r_start` while undecided.
fn evaluate(template: &ProblemParams, beta: f64, r_start: f64, opts: &ShootOptions) -> Result<(Classification, RadialProfile)> {
    let params = template.at_beta(beta);
    let mut r_max = r_start;
    loop {
        let prof = integrate(&params, r_max, &opts.integrate)?;
        let c = classify(&prof);
        if c.verdict != Verdict::Undecided {
            return Ok((c, prof));
        }
        if r_max >= opts.r_max_cap {
            if !opts.resolve_at_cap {
                return Err(Error::InconclusiveBracket {
                    low: beta,
                    high: beta,
                    iterations: 0,
                    r_max,
                });
            }
            let ind = departure_indicator(&prof);
            let verdict = if ind < 0.0 { Verdict::Global } else { Verdict::BlowUp };
            return Ok((
                Classification {
                    verdict,
                    certificate: Certificate::DepartureSign,
                    r_max,
                },
                prof,
            ));
        }
        r_max = (2.0 * r_max).min(opts.r_max_cap);
    }
}

/// Classifies one β with the same escalation policy as the bisection.
pub fn classify_beta(template: &ProblemParams, beta: f64, opts: &ShootOptions) -> Result<(Classification, RadialProfile)> {
    template.at_beta(beta).validate()?;
    opts.validate()?;
    evaluate(template, beta, opts.r_max, opts)
}

/// Classifies a batch of β values independently.
pub fn classify_batch(template: &ProblemParams, betas: &[f64], opts: &ShootOptions, exec: Execution) -> Vec<Result<Classification>> {
    par::map(exec, betas, |&b| classify_beta(template, b, opts).map(|(c, _)| c))
}

/// Locates `β₀ = sup{β : the solution is entire}` for the (N, α, δ) of `template`.
///
/// `tol_beta = None` selects [`default_tol_beta`]. Bisection also stops when the
/// bracket holds no float strictly between its ends.
pub fn find_beta0(template: &ProblemParams, tol_beta: Option<f64>, opts: &ShootOptions) -> Result<ShootResult> {
    template.validate()?;
    if template.dim <= 2 {
        return Err(Error::NoEntireSolution(template.dim));
    }
    if let Some(t) = tol_beta {
        if !(t > 0.0) {
            return Err(Error::pre("tol_beta must be positive"));
        }
    }
    opts.validate()?;

    let mut history = Vec::new();
    let mut r_max = opts.r_max;
    let mut heuristic = 0usize;
    let mut certified_low: Option<f64> = None;
    let mut certified_high: Option<f64> = None;
    let mut run = |beta: f64, r_max: &mut f64, history: &mut Vec<Evaluation>| -> Result<(Classification, RadialProfile)> {
        let (c, prof) = evaluate(template, beta, *r_max, opts)?;
        *r_max = r_max.max(c.r_max);
        history.push(Evaluation {
            beta,
            verdict: c.verdict,
            certificate: c.certificate,
            r_max: c.r_max,
        });
        if c.certificate.is_heuristic() {
            heuristic += 1;
        } else if c.verdict == Verdict::Global {
            certified_low = Some(certified_low.map_or(beta, |b: f64| b.max(beta)));
        } else {
            certified_high = Some(certified_high.map_or(beta, |b: f64| b.min(beta)));
        }
        Ok((c, prof))
    };

    let (c_hi, mut hi_prof) = run(0.0, &mut r_max, &mut history)?;
    if c_hi.verdict != Verdict::BlowUp {
        return Err(Error::InconclusiveBracket {
            low: f64::NEG_INFINITY,
            high: 0.0,
            iterations: 0,
            r_max,
        });
    }
    let mut hi = 0.0f64;
    let mut hi_cert = c_hi.certificate;
    let mut lo = -1.0f64;
    let (mut lo_prof, mut lo_cert);
    let mut doublings = 0;
    loop {
        let (c, prof) = run(lo, &mut r_max, &mut history)?;
        if c.verdict == Verdict::Global {
            lo_prof = prof;
            lo_cert = c.certificate;
            break;
        }
        hi = lo;
        hi_prof = prof;
        hi_cert = c.certificate;
        lo *= 2.0;
        doublings += 1;
        if doublings > 60 {
            return Err(Error::InconclusiveBracket {
                low: lo,
                high: hi,
                iterations: doublings,
                r_max,
            });
        }
    }

    let tol = tol_beta.unwrap_or_else(|| default_tol_beta(lo));
    let mut iterations = 0;
    let mut exhausted = false;
    while hi - lo > tol {
        if iterations >= opts.max_iterations {
            return Err(Error::InconclusiveBracket {
                low: lo,
                high: hi,
                iterations,
                r_max,
            });
        }
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            exhausted = true;
            break;
        }
        iterations += 1;
        let (c, prof) = run(mid, &mut r_max, &mut history)?;
        if c.verdict == Verdict::Global {
            lo = mid;
            lo_prof = prof;
            lo_cert = c.certificate;
        } else {
            hi = mid;
            hi_prof = prof;
            hi_cert = c.certificate;
        }
    }

    let separatrix_laplacian = lo_prof.last().v.abs();
    Ok(ShootResult {
        params: *template,
        beta0: 0.5 * (lo + hi),
        bracket: (lo, hi),
        tol_beta: tol,
        iterations,
        r_max_used: r_max,
        float_exhausted: exhausted,
        certified_bracket: (certified_low, certified_high),
        heuristic_decisions: heuristic,
        low_certificate: lo_cert,
        high_certificate: hi_cert,
        separatrix_laplacian,
        history,
        witness_global: lo_prof,
        witness_blowup: hi_prof,
    })
}

/// The two bracketing trajectories rerun to a common radius.
#[derive(Clone, Debug)]
pub struct Separatrix {
    pub beta0: f64,
    pub bracket: (f64, f64),
    /// Global side, integrated to `r_max`.
    pub low: RadialProfile,
    /// Blow-up side, followed until overflow or `r_max`.
    pub high: RadialProfile,
}

impl Separatrix {
    pub fn from_bracket(template: &ProblemParams, bracket: (f64, f64), r_max: f64, opts: &IntegrateOptions, exec: Execution) -> Result<Self> {
        let opts = IntegrateOptions {
            stop_at_crossing: false,
            ..*opts
        };
        let (low, high) = par::join(
            exec,
            || integrate(&template.at_beta(bracket.0), r_max, &opts),
            || integrate(&template.at_beta(bracket.1), r_max, &opts),
        );
        let (low, high) = (low?, high?);
        if !low.is_global() {
            return Err(Error::Inconclusive(format!(
                "the global side beta = {} blows up before r = {r_max:e}",
                bracket.0
            )));
        }
        Ok(Self {
            beta0: 0.5 * (bracket.0 + bracket.1),
            bracket,
            low,
            high,
        })
    }

    pub fn from_shoot(res: &ShootResult, r_max: f64, exec: Execution) -> Result<Self> {
        let opts = IntegrateOptions {
            rtol: res.witness_global.stats.rtol,
            atol: res.witness_global.stats.atol,
            r_start: res.witness_global.stats.r_start,
            ..IntegrateOptions::default()
        };
        Self::from_bracket(&res.params, res.bracket, r_max, &opts, exec)
    }

    /// `u_high(r) − u_low(r)`, if both are defined at r.
    pub fn enclosure_gap(&self, r: f64) -> Option<f64> {
        Some(self.high.state_at(r)?.u - self.low.state_at(r)?.u)
    }

    /// Largest sample radius of the global side up to which the two sides agree within `eps`.
    pub fn trusted_radius(&self, eps: f64) -> f64 {
        let mut last = self.low.first().r;
        for s in &self.low.samples {
            match self.high.state_at(s.r) {
                Some(h) if (h.u - s.u).abs() <= eps => last = s.r,
                _ => break,
            }
        }
        last
    }

    /// Global side restricted to its trusted range.
    pub fn trusted(&self, eps: f64) -> RadialProfile {
        self.low.truncated(self.trusted_radius(eps))
    }
}
