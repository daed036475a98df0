//! The stability threshold `β₁ < β₀` for `5 ≤ N < N_α`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::par::{self, Execution};
use crate::radial::{integrate, IntegrateOptions, ProblemParams};
use crate::stability::form::min_eig;
use crate::stability::hardy::{beta_prime, hardy_check, tail_certificate};
use crate::stability::nalpha::n_alpha;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum StabilityCertificate {
    /// Pointwise Hardy bound on the whole profile.
    HardyGlobal { margin: f64 },
    /// Nonnegative eigenvalue on `(0, r_big)` and pointwise Hardy bound beyond `r_tail ≤ r_big`.
    EigenWithTail { r_big: f64, r_tail: f64, lambda: f64 },
    /// Negative eigenvalue on `(0, r_big)`.
    NegativeEigen { r_big: f64, lambda: f64 },
    /// The separatrix itself, unstable at infinity.
    Separatrix,
}

impl StabilityCertificate {
    pub fn is_stable(&self) -> bool {
        matches!(self, Self::HardyGlobal { .. } | Self::EigenWithTail { .. })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Beta1Options {
    pub tol: f64,
    pub grid: usize,
    pub r_max: f64,
    pub integrate: IntegrateOptions,
    pub exec: Execution,
}

impl Default for Beta1Options {
    fn default() -> Self {
        Self {
            tol: 1e-6,
            grid: 800,
            r_max: 1e3,
            integrate: IntegrateOptions::default(),
            exec: Execution::default(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Decision {
    pub certificate: StabilityCertificate,
    /// Sign of the deciding eigenvalue agrees on both grids.
    pub refinement_consistent: bool,
}

/// Certifies stability or instability of `u_β`, β < β₀.
pub fn decide_stability(template: &ProblemParams, beta: f64, opts: &Beta1Options) -> Result<Decision> {
    let prof = integrate(&template.at_beta(beta), opts.r_max, &opts.integrate)?;
    if !prof.is_global() {
        return Err(Error::pre(format!("beta = {beta} is not below beta0")));
    }
    let global = hardy_check(&prof, prof.first().r);
    if global.margin >= 0.0 {
        return Ok(Decision {
            certificate: StabilityCertificate::HardyGlobal { margin: global.margin },
            refinement_consistent: true,
        });
    }
    let r_end = prof.r_end();
    let r_tail = tail_certificate(&prof);
    let r_big = r_tail.map_or(r_end, |r| (4.0 * r).max(10.0)).min(r_end);
    let e = min_eig(&prof, (0.0, r_big), opts.grid, opts.exec)?;
    let consistent = (e.lambda < 0.0) == (e.lambda_coarse < 0.0);
    let certificate = match r_tail {
        _ if e.certifies_instability() => StabilityCertificate::NegativeEigen { r_big, lambda: e.lambda },
        Some(rt) if rt <= r_big && e.lambda >= 0.0 => StabilityCertificate::EigenWithTail {
            r_big,
            r_tail: rt,
            lambda: e.lambda,
        },
        _ => {
            return Err(Error::Inconclusive(format!(
                "beta = {beta}: no certificate (lambda = {:e}, tail start {r_tail:?}, r_big = {r_big:e})",
                e.lambda
            )))
        }
    };
    Ok(Decision {
        certificate,
        refinement_consistent: consistent,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Beta1Result {
    pub beta1: f64,
    /// `(stable, unstable)` ends.
    pub bracket: (f64, f64),
    pub beta0: f64,
    pub beta_prime: f64,
    pub stable_certificate: StabilityCertificate,
    pub unstable_certificate: StabilityCertificate,
    pub iterations: usize,
    /// Largest β whose global Hardy margin is still nonnegative (up to `tol`).
    pub hardy_boundary: f64,
    /// The deciding eigenvalues at both final ends have the same sign on both grids.
    pub refinement_consistent: bool,
}

/// Bisects for `β₁` between the explicit stable value `β′` and `β₀`.
pub fn find_beta1(template: &ProblemParams, beta0: f64, opts: &Beta1Options) -> Result<Beta1Result> {
    template.validate()?;
    let na = n_alpha(template.alpha)?;
    let n = template.n();
    if !(template.dim >= 5 && n < na) {
        return Err(Error::NotApplicable(format!(
            "beta1 exists for 5 <= N < N_alpha = {na:.6}, got N = {}",
            template.dim
        )));
    }
    if !(opts.tol > 0.0) || !(beta0 < 0.0) {
        return Err(Error::pre("need tol > 0 and beta0 < 0"));
    }
    let bp = beta_prime(template.dim, template.alpha, beta0)?;
    let start = decide_stability(template, bp, opts)?;
    if !start.certificate.is_stable() {
        return Err(Error::Inconclusive(format!("beta' = {bp} is not certified stable")));
    }
    let (mut lo, mut hi) = (bp, beta0);
    let mut lo_cert = start.certificate;
    let mut hi_cert = StabilityCertificate::Separatrix;
    let mut lo_consistent = start.refinement_consistent;
    let mut hi_consistent = true;
    let mut iterations = 0;
    while hi - lo > opts.tol {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        iterations += 1;
        let d = decide_stability(template, mid, opts)?;
        if d.certificate.is_stable() {
            lo = mid;
            lo_cert = d.certificate;
            lo_consistent = d.refinement_consistent;
        } else {
            hi = mid;
            hi_cert = d.certificate;
            hi_consistent = d.refinement_consistent;
        }
    }

    // Hardy-only boundary in [β′, lo].
    let hardy_ok = |b: f64| -> Result<bool> {
        let p = integrate(&template.at_beta(b), opts.r_max, &opts.integrate)?;
        Ok(hardy_check(&p, p.first().r).margin >= 0.0)
    };
    let (mut hl, mut hh) = (bp, lo);
    if hardy_ok(hh)? {
        hl = hh;
    }
    while hh - hl > opts.tol {
        let probes = [hl + (hh - hl) / 3.0, hl + 2.0 * (hh - hl) / 3.0];
        let ok = par::map(opts.exec, &probes, |&b| hardy_ok(b));
        let (a, b) = (ok[0].as_ref().map_err(clone_err)?, ok[1].as_ref().map_err(clone_err)?);
        match (a, b) {
            (true, true) => hl = probes[1],
            (true, false) => {
                hl = probes[0];
                hh = probes[1];
            }
            _ => hh = probes[0],
        }
    }

    Ok(Beta1Result {
        beta1: 0.5 * (lo + hi),
        bracket: (lo, hi),
        beta0,
        beta_prime: bp,
        stable_certificate: lo_cert,
        unstable_certificate: hi_cert,
        iterations,
        hardy_boundary: hl,
        refinement_consistent: lo_consistent && hi_consistent,
    })
}

fn clone_err(e: &Error) -> Error {
    Error::Inconclusive(e.to_string())
}
