//! Dormand–Prince 5(4) stepping with local error control.
//!
//! The stepper is generic over a fixed state dimension and reports every
//! accepted step to an observer, which owns sampling and event logic. A
//! right-hand side may refuse to evaluate (overflow guard); the stepper then
//! shrinks the step and, if that does not help, stops with [`Outcome::Overflow`].

use crate::error::{Error, Result};

/// Signal raised by a right-hand side whose guard trips (e.g. `e^u` would overflow).
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Overflow;

#[derive(Clone, Copy, Debug)]
pub struct StepperOptions {
    pub rtol: f64,
    pub atol: f64,
    /// Initial step, absolute.
    pub h_init: f64,
    /// Upper bound on the step as a fraction of |t|.
    pub max_rel_step: f64,
    /// A step below `min_rel_step * |t|` is a stall.
    pub min_rel_step: f64,
    pub max_steps: usize,
}

impl Default for StepperOptions {
    fn default() -> Self {
        Self {
            rtol: 1e-10,
            atol: 1e-12,
            h_init: 1e-8,
            max_rel_step: 0.01,
            min_rel_step: 1e-14,
            max_steps: 5_000_000,
        }
    }
}

/// An accepted step, handed to the observer.
pub struct Accepted<'a, const D: usize> {
    pub t0: f64,
    pub y0: &'a [f64; D],
    pub f0: &'a [f64; D],
    pub t1: f64,
    pub y1: &'a [f64; D],
    pub f1: &'a [f64; D],
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Control {
    Continue,
    Stop,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Outcome {
    /// `t_end` was reached.
    Reached,
    /// The observer asked to stop.
    Stopped,
    /// The right-hand side guard tripped and could not be avoided by shrinking the step.
    Overflow { t: f64 },
}

#[derive(Clone, Copy, Debug, Default, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct StepStats {
    pub accepted: usize,
    pub rejected: usize,
    pub min_step: f64,
    pub max_step: f64,
}

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;

const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;

const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

#[inline]
fn combine<const D: usize>(y: &[f64; D], h: f64, terms: &[(f64, &[f64; D])]) -> [f64; D] {
    let mut out = *y;
    for (c, k) in terms {
        if *c != 0.0 {
            for i in 0..D {
                out[i] += h * c * k[i];
            }
        }
    }
    out
}

struct Trial<const D: usize> {
    y1: [f64; D],
    f1: [f64; D],
    err: f64,
}

fn trial_step<const D: usize, F>(
    f: &mut F,
    t: f64,
    y: &[f64; D],
    k1: &[f64; D],
    h: f64,
    opts: &StepperOptions,
) -> std::result::Result<Trial<D>, Overflow>
where
    F: FnMut(f64, &[f64; D]) -> std::result::Result<[f64; D], Overflow>,
{
    let k2 = f(t + C2 * h, &combine(y, h, &[(A21, k1)]))?;
    let k3 = f(t + C3 * h, &combine(y, h, &[(A31, k1), (A32, &k2)]))?;
    let k4 = f(t + C4 * h, &combine(y, h, &[(A41, k1), (A42, &k2), (A43, &k3)]))?;
    let k5 = f(
        t + C5 * h,
        &combine(y, h, &[(A51, k1), (A52, &k2), (A53, &k3), (A54, &k4)]),
    )?;
    let k6 = f(
        t + h,
        &combine(y, h, &[(A61, k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)]),
    )?;
    let y1 = combine(y, h, &[(A71, k1), (A73, &k3), (A74, &k4), (A75, &k5), (A76, &k6)]);
    let k7 = f(t + h, &y1)?;

    let mut err: f64 = 0.0;
    for i in 0..D {
        let e = h * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
        let sc = opts.atol + opts.rtol * y[i].abs().max(y1[i].abs());
        err = err.max((e / sc).abs());
    }
    if !err.is_finite() || y1.iter().any(|x| !x.is_finite()) {
        return Err(Overflow);
    }
    Ok(Trial { y1, f1: k7, err })
}

/// Integrates `y' = f(t, y)` from `t0` to `t_end > t0`.
pub fn dopri5<const D: usize, F, O>(
    mut f: F,
    t0: f64,
    y0: [f64; D],
    t_end: f64,
    opts: &StepperOptions,
    mut observer: O,
) -> Result<(Outcome, StepStats)>
where
    F: FnMut(f64, &[f64; D]) -> std::result::Result<[f64; D], Overflow>,
    O: FnMut(&Accepted<'_, D>) -> Control,
{
    let mut stats = StepStats {
        min_step: f64::INFINITY,
        ..StepStats::default()
    };
    let mut t = t0;
    let mut y = y0;
    let mut k1 = match f(t, &y) {
        Ok(k) => k,
        Err(Overflow) => return Ok((Outcome::Overflow { t }, stats)),
    };
    let mut h = opts.h_init.min(t_end - t0);

    while t < t_end {
        if stats.accepted + stats.rejected >= opts.max_steps {
            return Err(Error::IntegrationStall {
                r: t,
                step: h,
                steps: stats.accepted,
            });
        }
        let h_cap = opts.max_rel_step * t.abs().max(f64::MIN_POSITIVE);
        h = h.min(h_cap);
        let last = t + h >= t_end;
        if last {
            h = t_end - t;
        }
        let h_min = opts.min_rel_step * t.abs();
        if h <= h_min {
            return Err(Error::IntegrationStall {
                r: t,
                step: h,
                steps: stats.accepted,
            });
        }

        match trial_step(&mut f, t, &y, &k1, h, opts) {
            Err(Overflow) => {
                stats.rejected += 1;
                h *= 0.25;
                if h <= 1e3 * h_min {
                    return Ok((Outcome::Overflow { t }, stats));
                }
            }
            Ok(trial) if trial.err > 1.0 => {
                stats.rejected += 1;
                h *= (0.9 * trial.err.powf(-0.2)).max(0.2);
            }
            Ok(trial) => {
                let t1 = if last { t_end } else { t + h };
                stats.accepted += 1;
                stats.min_step = stats.min_step.min(h);
                stats.max_step = stats.max_step.max(h);
                let ctl = observer(&Accepted {
                    t0: t,
                    y0: &y,
                    f0: &k1,
                    t1,
                    y1: &trial.y1,
                    f1: &trial.f1,
                });
                t = t1;
                y = trial.y1;
                k1 = trial.f1;
                if ctl == Control::Stop {
                    return Ok((Outcome::Stopped, stats));
                }
                let fac = if trial.err == 0.0 {
                    5.0
                } else {
                    (0.9 * trial.err.powf(-0.2)).clamp(0.2, 5.0)
                };
                h *= fac;
            }
        }
    }
    Ok((Outcome::Reached, stats))
}

/// Cubic Hermite interpolation of one component on `[t0, t1]`.
#[inline]
pub fn hermite(t0: f64, y0: f64, d0: f64, t1: f64, y1: f64, d1: f64, t: f64) -> f64 {
    let h = t1 - t0;
    let s = (t - t0) / h;
    let s2 = s * s;
    let s3 = s2 * s;
    let h00 = 2.0 * s3 - 3.0 * s2 + 1.0;
    let h10 = s3 - 2.0 * s2 + s;
    let h01 = -2.0 * s3 + 3.0 * s2;
    let h11 = s3 - s2;
    h00 * y0 + h10 * h * d0 + h01 * y1 + h11 * h * d1
}
