//! Stability classification of a single global profile.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::par::Execution;
use crate::radial::RadialProfile;
use crate::stability::form::{min_eig, EigenWitness, MinEig};
use crate::stability::hardy::{hardy_check, tail_certificate, HardyMargin};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum StabilityClass {
    /// Pointwise Hardy bound on the whole profile.
    Stable,
    /// Pointwise Hardy bound beyond `r_compact`.
    StableAtInfinity { r_compact: f64 },
    /// Negative form value on a far annulus.
    UnstableAtInfinity,
    /// Neither certificate fired on the computed range.
    Undetermined,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StabilityOptions {
    /// Intervals of the coarse grid; the refined grid has twice as many.
    pub grid: usize,
    /// Test domain for the eigenvalue; default `(0, min(50, r_end))`.
    pub domain: Option<(f64, f64)>,
    pub exec: Execution,
}

impl Default for StabilityOptions {
    fn default() -> Self {
        Self {
            grid: 800,
            domain: None,
            exec: Execution::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StabilityReport {
    pub classification: StabilityClass,
    /// Worst Hardy margin over the whole profile (`-inf` where no weight is available).
    pub hardy_margin_global: HardyMargin,
    /// Worst margin beyond `tail_start`.
    pub hardy_margin_tail: Option<HardyMargin>,
    pub tail_start: Option<f64>,
    /// Smallest eigenvalue on the test domain.
    pub min_eig: MinEig,
    /// Smallest eigenvalue on the far annulus `(r_end/100, r_end)`, when the tail certificate fails.
    pub far_eig: Option<MinEig>,
    /// Eigenfunction with negative form value, if any.
    pub witness: Option<EigenWitness>,
}

impl StabilityReport {
    /// The form is negative somewhere on the tested domains.
    pub fn unstable(&self) -> bool {
        self.min_eig.certifies_instability() || self.far_eig.as_ref().is_some_and(|e| e.certifies_instability())
    }
}

/// Tail certificates must cover at least the last decade of the profile.
const TAIL_SPAN: f64 = 10.0;

pub fn classify_stability(profile: &RadialProfile, opts: &StabilityOptions) -> Result<StabilityReport> {
    if !profile.is_global() {
        return Err(Error::pre("stability needs a global profile"));
    }
    let r_end = profile.r_end();
    let global = hardy_check(profile, profile.first().r);
    let tail_start = tail_certificate(profile).filter(|r| *r * TAIL_SPAN <= r_end);
    let tail_margin = tail_start.map(|r| hardy_check(profile, r));
    let domain = opts.domain.unwrap_or((0.0, r_end.min(50.0)));
    let eig = min_eig(profile, domain, opts.grid, opts.exec)?;

    let (classification, far) = if global.margin >= 0.0 {
        (StabilityClass::Stable, None)
    } else if let Some(r) = tail_start {
        (StabilityClass::StableAtInfinity { r_compact: r }, None)
    } else {
        let far = min_eig(profile, (r_end / 100.0, r_end), opts.grid, opts.exec)?;
        let class = if far.certifies_instability() {
            StabilityClass::UnstableAtInfinity
        } else {
            StabilityClass::Undetermined
        };
        (class, Some(far))
    };
    let witness = if eig.certifies_instability() {
        Some(eig.eigenfunction.clone())
    } else {
        far.as_ref().filter(|e| e.certifies_instability()).map(|e| e.eigenfunction.clone())
    };
    Ok(StabilityReport {
        classification,
        hardy_margin_global: global,
        hardy_margin_tail: tail_margin,
        tail_start,
        min_eig: eig,
        far_eig: far,
        witness,
    })
}
