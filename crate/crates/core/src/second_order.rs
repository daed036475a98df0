//! The second-order equation `Δu + r^α e^u = 0`: radial solutions, the
//! singular solution `U = −(2+α) ln r + ln[(2+α)(N−2)]`, the sphere solution
//! in the plane, and the stability threshold `N ≥ 10+4α` of `U`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ode::{dopri5, Control, Outcome, Overflow, StepStats};
use crate::radial::{check_dim_alpha, IntegrateOptions};
use crate::stability::banded::{min_generalized, SymBand};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SecondOrderParams {
    pub dim: u32,
    pub alpha: f64,
    /// u(0)
    pub u0: f64,
}

impl SecondOrderParams {
    pub fn new(dim: u32, alpha: f64, u0: f64) -> Result<Self> {
        check_dim_alpha(dim, alpha)?;
        if !u0.is_finite() {
            return Err(Error::pre("u0 must be finite"));
        }
        Ok(Self { dim, alpha, u0 })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SecondState {
    pub r: f64,
    pub u: f64,
    pub p: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SecondOrderProfile {
    pub params: SecondOrderParams,
    pub samples: Vec<SecondState>,
    pub r_max: f64,
    pub stats: StepStats,
}

impl SecondOrderProfile {
    /// Cubic Hermite value of `u` at r.
    pub fn u_at(&self, r: f64) -> Option<f64> {
        let s = &self.samples;
        if !(r >= s[0].r && r <= s[s.len() - 1].r) {
            return None;
        }
        let i = s.partition_point(|x| x.r < r);
        if s[i].r == r {
            return Some(s[i].u);
        }
        let (a, b) = (&s[i - 1], &s[i]);
        Some(crate::ode::hermite(a.r, a.u, a.p, b.r, b.u, b.p, r))
    }
}

/// Integrates `u'' + (N−1)u'/r = −r^α e^u`, `u(0) = u0`, `u'(0) = 0`, to `r_max`.
pub fn integrate2(params: &SecondOrderParams, r_max: f64, opts: &IntegrateOptions) -> Result<SecondOrderProfile> {
    check_dim_alpha(params.dim, params.alpha)?;
    let r0 = opts.r_start;
    if !(r_max > r0) || !r_max.is_finite() {
        return Err(Error::pre("r_max must exceed r_start"));
    }
    let (n, a) = (params.dim as f64, params.alpha);
    let e0 = params.u0.exp();
    let start = [
        params.u0 - e0 * r0.powf(2.0 + a) / ((2.0 + a) * (n + a)),
        -e0 * r0.powf(1.0 + a) / (n + a),
    ];
    let n1 = n - 1.0;
    let u_max = opts.u_max;
    let mut samples = vec![SecondState {
        r: r0,
        u: start[0],
        p: start[1],
    }];
    let stepper = crate::ode::StepperOptions {
        rtol: opts.rtol,
        atol: opts.atol,
        h_init: 1e-3 * r0,
        max_rel_step: opts.sample_ratio - 1.0,
        ..Default::default()
    };
    let (outcome, stats) = dopri5(
        |r, y: &[f64; 2]| {
            if y[0] > u_max {
                return Err(Overflow);
            }
            Ok([y[1], -n1 * y[1] / r - (a * r.ln() + y[0]).exp()])
        },
        r0,
        start,
        r_max,
        &stepper,
        |st| {
            samples.push(SecondState {
                r: st.t1,
                u: st.y1[0],
                p: st.y1[1],
            });
            Control::Continue
        },
    )?;
    if let Outcome::Overflow { t } = outcome {
        return Err(Error::Inconclusive(format!("second-order solution overflowed at r = {t:e}")));
    }
    Ok(SecondOrderProfile {
        params: *params,
        samples,
        r_max,
        stats,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SingularSolution {
    pub dim: u32,
    pub alpha: f64,
    /// `2+α`
    pub slope: f64,
    /// `ln[(2+α)(N−2)]`
    pub constant: f64,
}

impl SingularSolution {
    pub fn u(&self, r: f64) -> f64 {
        -self.slope * r.ln() + self.constant
    }

    /// `|ΔU + r^α e^U| / |ΔU|`, with ΔU from its closed form.
    pub fn residual(&self, r: f64) -> f64 {
        let n = self.dim as f64;
        let lap = -self.slope * (n - 2.0) / (r * r);
        let f = (self.alpha * r.ln() + self.u(r)).exp();
        (lap + f).abs() / lap.abs()
    }
}

pub fn singular_solution(dim: u32, alpha: f64) -> Result<SingularSolution> {
    check_dim_alpha(dim, alpha)?;
    if dim < 3 {
        return Err(Error::pre("the singular solution needs N >= 3"));
    }
    Ok(SingularSolution {
        dim,
        alpha,
        slope: 2.0 + alpha,
        constant: ((2.0 + alpha) * (dim as f64 - 2.0)).ln(),
    })
}

/// `u = ln[32λ²/(4+λ²r²)²]`, solving `Δu + e^u = 0` in the plane.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SphereSolution {
    pub lambda: f64,
}

impl SphereSolution {
    /// The member with `u(0) = u0`, i.e. `2λ² = e^{u0}`.
    pub fn from_u0(u0: f64) -> Self {
        Self {
            lambda: (0.5 * u0.exp()).sqrt(),
        }
    }

    pub fn u(&self, r: f64) -> f64 {
        let l2 = self.lambda * self.lambda;
        (32.0 * l2).ln() - 2.0 * (4.0 + l2 * r * r).ln()
    }

    pub fn du(&self, r: f64) -> f64 {
        let l2 = self.lambda * self.lambda;
        -4.0 * l2 * r / (4.0 + l2 * r * r)
    }

    pub fn d2u(&self, r: f64) -> f64 {
        let l2 = self.lambda * self.lambda;
        let d = 4.0 + l2 * r * r;
        -4.0 * l2 * (4.0 - l2 * r * r) / (d * d)
    }

    /// `|u'' + u'/r + e^u|` relative to the largest of the three terms.
    /// For large r, u'' and u'/r both approach ±4/r² and cancel down to the
    /// much smaller e^u, so dividing by e^u alone would only measure rounding.
    pub fn residual(&self, r: f64) -> f64 {
        let (d2, d1, e) = (self.d2u(r), self.du(r) / r, self.u(r).exp());
        (d2 + d1 + e).abs() / d2.abs().max(d1.abs()).max(e)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Threshold2 {
    StableSingular,
    UnstableAtInfinitySingular,
}

/// Compares `(2+α)(N−2)` with the Hardy constant `(N−2)²/4`.
pub fn threshold2(dim: u32, alpha: f64) -> Result<Threshold2> {
    check_dim_alpha(dim, alpha)?;
    if dim < 3 {
        return Err(Error::pre("threshold2 needs N >= 3"));
    }
    let n = dim as f64;
    // (2+α)(N−2) ≤ (N−2)²/4  ⟺  N − 2 − 4(2+α) ≥ 0, compared without rounding in the products.
    Ok(if n - 2.0 - 4.0 * (2.0 + alpha) >= 0.0 {
        Threshold2::StableSingular
    } else {
        Threshold2::UnstableAtInfinitySingular
    })
}

/// `∫_a^b r^p dr`, p > −1.
fn power_integral(p: f64, a: f64, b: f64) -> f64 {
    if a == 0.0 {
        return b.powf(p + 1.0) / (p + 1.0);
    }
    a.powf(p + 1.0) * ((p + 1.0) * (b / a).ln()).exp_m1() / (p + 1.0)
}

/// Discrete `∫φ'² r^{N−1} − c∫φ² r^{N−3}` on a clamped annulus, with mass `∫φ² r^{N−3}`.
struct HardyForm2 {
    q: SymBand,
    b: Vec<f64>,
    c: f64,
}

impl HardyForm2 {
    fn new(dim: u32, c: f64, r: Vec<f64>) -> Self {
        let n = r.len() - 1;
        let nn = dim as f64;
        let m = n - 1;
        let mut q = SymBand::zeros(m, 1);
        // stiffness per cell: (φ_{i+1} − φ_i)² ∫_cell r^{N−1} / h²
        for i in 0..n {
            let h = r[i + 1] - r[i];
            let k = power_integral(nn - 1.0, r[i], r[i + 1]) / (h * h);
            let (a, b) = (i as isize - 1, i as isize);
            if a >= 0 {
                q.add(a as usize, a as usize, k);
            }
            if (b as usize) < m {
                q.add(b as usize, b as usize, k);
            }
            if a >= 0 && (b as usize) < m {
                q.add(b as usize, a as usize, -k);
            }
        }
        let b: Vec<f64> = (1..n)
            .map(|j| power_integral(nn - 3.0, 0.5 * (r[j - 1] + r[j]), 0.5 * (r[j] + r[j + 1])))
            .collect();
        for (j, bj) in b.iter().enumerate() {
            q.add(j, j, -c * bj);
        }
        Self { q, b, c }
    }

    fn value(&self, x: &[f64]) -> f64 {
        x.iter().zip(self.q.mul(x)).map(|(a, c)| a * c).sum()
    }

    fn mass(&self, x: &[f64]) -> f64 {
        x.iter().zip(&self.b).map(|(a, w)| w * a * a).sum()
    }

    fn min(&self, seed: Option<&[f64]>) -> (f64, Vec<f64>) {
        min_generalized(&self.q, &self.b, -self.c, seed)
    }
}

fn log_grid(ra: f64, rb: f64, n: usize) -> Vec<f64> {
    let l = (rb / ra).ln();
    let mut r: Vec<f64> = (0..=n).map(|i| ra * (l * i as f64 / n as f64).exp()).collect();
    r[n] = rb;
    r
}

/// Minimum of `[∫φ'² r^{N−1} − c∫φ² r^{N−3}] / ∫φ² r^{N−3}` over clamped φ on `(ra, rb)`.
pub fn hardy_form2_min(dim: u32, c: f64, annulus: (f64, f64), n: usize) -> Result<f64> {
    if dim < 3 || !(annulus.0 > 0.0 && annulus.1 > annulus.0) || n < 16 {
        return Err(Error::pre("need N >= 3, 0 < ra < rb and at least 16 cells"));
    }
    Ok(HardyForm2::new(dim, c, log_grid(annulus.0, annulus.1, n)).min(None).0)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScaledQuotient {
    pub lambda: f64,
    pub quotient: f64,
    /// Relative difference from the unscaled quotient.
    pub deviation: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Witness2 {
    pub dim: u32,
    pub alpha: f64,
    pub annulus: (f64, f64),
    pub r: Vec<f64>,
    /// Nodal values including the clamped ends.
    pub phi: Vec<f64>,
    /// Discrete `Q(φ)`.
    pub form: f64,
    /// `Q(φ) / ∫φ² r^{N−3}`.
    pub quotient: f64,
    /// Quotient of the log-oscillation seed.
    pub seed_quotient: f64,
    pub scaled: Vec<ScaledQuotient>,
}

/// Negative-form test function for the singular solution on `(R, 16R)`, `10 ≤ N < 10+4α`.
pub fn witness2(dim: u32, alpha: f64, radius: f64, n: usize) -> Result<Witness2> {
    check_dim_alpha(dim, alpha)?;
    let nn = dim as f64;
    if !(dim >= 10 && nn < 10.0 + 4.0 * alpha) {
        return Err(Error::NotApplicable(format!(
            "witness2 needs 10 <= N < 10 + 4 alpha, got N = {dim}, alpha = {alpha}"
        )));
    }
    if !(radius > 0.0) || n < 16 {
        return Err(Error::pre("need R > 0 and at least 16 cells"));
    }
    let c = (2.0 + alpha) * (nn - 2.0);
    let annulus = (radius, 16.0 * radius);
    let r = log_grid(annulus.0, annulus.1, n);
    let form = HardyForm2::new(dim, c, r.clone());
    let l = 16f64.ln();
    let seed: Vec<f64> = r[1..n]
        .iter()
        .map(|&x| x.powf(-(nn - 2.0) / 2.0) * (std::f64::consts::PI * (x / radius).ln() / l).sin())
        .collect();
    let seed_quotient = form.value(&seed) / form.mass(&seed);
    let (quotient, x) = form.min(Some(&seed));
    if !(quotient < 0.0) {
        return Err(Error::Inconclusive(format!(
            "no negative quotient on (R, 16R): minimum {quotient:e}"
        )));
    }
    let value = form.value(&x);
    let scaled = [10.0, 100.0]
        .iter()
        .map(|&lam| {
            let rs: Vec<f64> = r.iter().map(|v| v * lam).collect();
            let f = HardyForm2::new(dim, c, rs);
            let qv = f.value(&x) / f.mass(&x);
            ScaledQuotient {
                lambda: lam,
                quotient: qv,
                deviation: (qv - quotient).abs() / quotient.abs(),
            }
        })
        .collect();
    let mut phi = vec![0.0; n + 1];
    phi[1..n].copy_from_slice(&x);
    Ok(Witness2 {
        dim,
        alpha,
        annulus,
        r,
        phi,
        form: value,
        quotient: value / form.mass(&x),
        seed_quotient,
        scaled,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn singular_solution_examples() {
        let s = singular_solution(10, 0.0).unwrap();
        assert_eq!(s.slope, 2.0);
        assert!((s.constant - 16f64.ln()).abs() < 1e-15);
        let s = singular_solution(3, 1.0).unwrap();
        assert!((s.constant - 3f64.ln()).abs() < 1e-15);
        assert!(singular_solution(2, 0.0).is_err());
    }

    #[test]
    fn threshold_examples() {
        assert_eq!(threshold2(10, 0.0).unwrap(), Threshold2::StableSingular);
        assert_eq!(threshold2(12, 0.0).unwrap(), Threshold2::StableSingular);
        assert_eq!(threshold2(10, 1.0).unwrap(), Threshold2::UnstableAtInfinitySingular);
    }

    #[test]
    fn tiny_u0_stays_flat() {
        let p = SecondOrderParams::new(5, 0.0, -50.0).unwrap();
        let prof = integrate2(&p, 10.0, &IntegrateOptions::default()).unwrap();
        for s in prof.samples.iter().filter(|s| s.r <= 1.0) {
            assert!((s.u + 50.0).abs() < 1e-8);
        }
    }

    #[test]
    fn borderline_hardy_form_is_nonnegative() {
        let q = hardy_form2_min(10, 16.0, (1.0, 16.0), 400).unwrap();
        assert!(q > 0.0, "{q}");
        assert!(matches!(witness2(10, 0.0, 1.0, 400), Err(Error::NotApplicable(_))));
    }
}
