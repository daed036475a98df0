//! Quadrature on nonuniform radial grids and moments `∫₀^∞ r^m (ln r)^j e^u dr`
//! of a computed profile.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ode::hermite;
use crate::radial::RadialProfile;

/// Composite Simpson rule on an arbitrary increasing grid.
///
/// Pairs of intervals use the three-point rule for uneven spacing; an odd
/// trailing interval is closed with the quadratic through its last three nodes.
pub fn simpson(x: &[f64], f: &[f64]) -> f64 {
    assert_eq!(x.len(), f.len());
    let n = x.len();
    if n < 2 {
        return 0.0;
    }
    if n == 2 {
        return 0.5 * (x[1] - x[0]) * (f[0] + f[1]);
    }
    let mut total = 0.0;
    let mut i = 0;
    while i + 2 < n {
        let h0 = x[i + 1] - x[i];
        let h1 = x[i + 2] - x[i + 1];
        let hs = h0 + h1;
        total += hs / 6.0
            * ((2.0 - h1 / h0) * f[i] + hs * hs / (h0 * h1) * f[i + 1] + (2.0 - h0 / h1) * f[i + 2]);
        i += 2;
    }
    if i + 1 < n {
        total += last_interval(x[i - 1], x[i], x[i + 1], f[i - 1], f[i], f[i + 1]);
    }
    total
}

/// `∫_{x1}^{x2}` of the quadratic through three nodes.
fn last_interval(x0: f64, x1: f64, x2: f64, f0: f64, f1: f64, f2: f64) -> f64 {
    let h0 = x1 - x0;
    let h1 = x2 - x1;
    h1 * (f2 * (2.0 * h1 + 3.0 * h0) / (6.0 * (h0 + h1)) + f1 * (h1 + 3.0 * h0) / (6.0 * h0)
        - f0 * h1 * h1 / (6.0 * h0 * (h0 + h1)))
}

/// Value at `t` of the cubic through four nodes.
fn cubic_at(x: &[f64], f: &[f64], t: f64) -> f64 {
    let mut acc = 0.0;
    for i in 0..4 {
        let mut w = 1.0;
        for j in 0..4 {
            if j != i {
                w *= (t - x[j]) / (x[i] - x[j]);
            }
        }
        acc += w * f[i];
    }
    acc
}

/// Running integral at every node, starting from zero at `x[0]`.
///
/// Each interval integrates the cubic through the four nearest nodes (two-point
/// Gauss–Legendre is exact for it), so the error is fourth order like [`simpson`].
pub fn cumulative(x: &[f64], f: &[f64]) -> Vec<f64> {
    assert_eq!(x.len(), f.len());
    let n = x.len();
    let mut out = vec![0.0; n];
    let g = 0.5 / 3f64.sqrt();
    for i in 1..n {
        let (a, b) = (x[i - 1], x[i]);
        let piece = if n < 3 {
            0.5 * (b - a) * (f[i] + f[i - 1])
        } else if n == 3 {
            let j = if i + 1 < n { i - 1 } else { i - 2 };
            let (y0, y1, y2) = (x[j], x[j + 1], x[j + 2]);
            if i + 1 < n {
                last_interval(-y2, -y1, -y0, f[j + 2], f[j + 1], f[j])
            } else {
                last_interval(y0, y1, y2, f[j], f[j + 1], f[j + 2])
            }
        } else {
            let j = i.saturating_sub(2).min(n - 4);
            let (xs, fs) = (&x[j..j + 4], &f[j..j + 4]);
            let (m, h) = (0.5 * (a + b), b - a);
            0.5 * h * (cubic_at(xs, fs, m - g * h) + cubic_at(xs, fs, m + g * h))
        };
        out[i] = out[i - 1] + piece;
    }
    out
}

/// Tail `∫_R^∞ f` for an integrand decaying like `r^{-k}` beyond `R`.
///
/// Returns `None` when `k <= 1` (the model tail diverges).
pub fn power_tail(r: f64, f: f64, k: f64) -> Option<f64> {
    if f == 0.0 {
        return Some(0.0);
    }
    if !(k > 1.0) {
        return None;
    }
    Some(f * r / (k - 1.0))
}

/// `∫₀^∞ r^power (ln r)^log_weight e^u dr` split into its pieces.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Moment {
    /// Series part on `[0, r_start]`.
    pub head: f64,
    /// Simpson part on the sampled grid.
    pub body: f64,
    /// Model tail beyond the last sample.
    pub tail: f64,
}

impl Moment {
    pub fn total(&self) -> f64 {
        self.head + self.body + self.tail
    }
}

fn integrand(power: f64, log_weight: bool, r: f64, u: f64) -> f64 {
    let base = (power * r.ln() + u).exp();
    if log_weight {
        base * r.ln()
    } else {
        base
    }
}

/// Moment of a global profile, using every `stride`-th sample (the last sample always kept).
pub fn profile_moment(profile: &RadialProfile, power: f64, log_weight: bool, stride: usize) -> Result<Moment> {
    if !(power > -1.0) {
        return Err(Error::pre(format!("moment power {power} must exceed -1")));
    }
    let stride = stride.max(1);
    let n = profile.samples.len();
    let mut idx: Vec<usize> = (0..n).step_by(stride).collect();
    if *idx.last().unwrap() != n - 1 {
        idx.push(n - 1);
    }
    let x: Vec<f64> = idx.iter().map(|&i| profile.samples[i].r).collect();
    let f: Vec<f64> = idx
        .iter()
        .map(|&i| {
            let s = &profile.samples[i];
            integrand(power, log_weight, s.r, s.u)
        })
        .collect();
    let body = simpson(&x, &f);

    // On [0, r0] e^u ≈ e^δ.
    let r0 = profile.first().r;
    let m1 = power + 1.0;
    let ed = profile.params.delta.exp();
    let head = if log_weight {
        ed * r0.powf(m1) * (r0.ln() / m1 - 1.0 / (m1 * m1))
    } else {
        ed * r0.powf(m1) / m1
    };

    let last = profile.last();
    let f_last = integrand(power, log_weight, last.r, last.u);
    let mut k = -(power + last.r * last.p);
    if log_weight {
        k -= 1.0 / last.r.ln();
    }
    let tail = power_tail(last.r, f_last, k).ok_or_else(|| {
        Error::InsufficientDecay(format!(
            "integrand r^{power} e^u decays like r^-{k:.3} at r = {:.3e}",
            last.r
        ))
    })?;
    Ok(Moment { head, body, tail })
}

/// `∫₀^r s^{N−1+α} e^u ds` at every sample, including the series head.
///
/// The integrand is close to a power of r, so each interval is integrated in
/// `t = ln r`: the exponent `(m+1)t + u` is interpolated by cubic Hermite
/// (its slope `m + 1 + r u'` is known at the samples) and `exp` of it is
/// integrated by four-point Gauss–Legendre. Pure powers are integrated exactly.
pub fn running_mass(profile: &RadialProfile) -> Vec<f64> {
    const NODES: [f64; 4] = [-0.861_136_311_594_052_6, -0.339_981_043_584_856_3, 0.339_981_043_584_856_3, 0.861_136_311_594_052_6];
    const WEIGHTS: [f64; 4] = [0.347_854_845_137_453_9, 0.652_145_154_862_546_1, 0.652_145_154_862_546_1, 0.347_854_845_137_453_9];
    let m1 = profile.params.n() + profile.params.alpha;
    let expo = |s: &crate::radial::RadialState| (m1 * s.r.ln() + s.u, m1 + s.r * s.p);
    let r0 = profile.first().r;
    let mut acc = profile.params.delta.exp() * r0.powf(m1) / m1;
    let mut out = Vec::with_capacity(profile.samples.len());
    out.push(acc);
    for w in profile.samples.windows(2) {
        let (t0, t1) = (w[0].r.ln(), w[1].r.ln());
        let ((y0, d0), (y1, d1)) = (expo(&w[0]), expo(&w[1]));
        let (mid, half) = (0.5 * (t0 + t1), 0.5 * (t1 - t0));
        let piece: f64 = NODES
            .iter()
            .zip(WEIGHTS)
            .map(|(x, wt)| wt * hermite(t0, y0, d0, t1, y1, d1, mid + half * x).exp())
            .sum();
        acc += half * piece;
        out.push(acc);
    }
    out
}
