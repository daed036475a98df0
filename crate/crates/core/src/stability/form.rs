//! Discretized quadratic form `Q(φ) = ∫(Δφ)² r^{N−1} dr − ∫ V φ² r^{N−1} dr`
//! over radial φ, clamped at the outer end (and at the inner end of an annulus).
//!
//! `Δφ` is taken at every node as a divergence of midpoint fluxes over the dual
//! cell, so `A = DᵀWD` is symmetric pentadiagonal. `W` holds the exact dual-cell
//! volumes `∫ r^{N−1} dr`, which makes `Δ(r²) = 2N` exact. At the origin this
//! reduces to `Δφ(0) = 2N(φ₁ − φ₀)/r₁²`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::par::{self, Execution};
use crate::quadrature::simpson;
use crate::radial::RadialProfile;
use crate::stability::banded::{min_generalized, SymBand};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub r: Vec<f64>,
    /// Left end is the origin (symmetry condition) rather than a clamped radius.
    pub origin: bool,
}

impl Grid {
    /// `[0, radius]` with `r = ρ sinh(xX)`, uniform near 0 with spacing about `ρX/n`, geometric far out.
    pub fn ball(radius: f64, n: usize, core: f64) -> Grid {
        let x_end = (radius / core).asinh();
        let mut r: Vec<f64> = (0..=n).map(|i| core * (x_end * i as f64 / n as f64).sinh()).collect();
        r[0] = 0.0;
        r[n] = radius;
        Grid { r, origin: true }
    }

    /// `[ra, rb]`, `ra > 0`, geometric spacing.
    pub fn annulus(ra: f64, rb: f64, n: usize) -> Grid {
        let l = (rb / ra).ln();
        let mut r: Vec<f64> = (0..=n).map(|i| ra * (l * i as f64 / n as f64).exp()).collect();
        r[0] = ra;
        r[n] = rb;
        Grid { r, origin: false }
    }

    pub fn for_domain(ra: f64, rb: f64, n: usize) -> Grid {
        if ra == 0.0 {
            Grid::ball(rb, n, (rb / 4.0).min(1.0))
        } else {
            Grid::annulus(ra, rb, n)
        }
    }

    pub fn intervals(&self) -> usize {
        self.r.len() - 1
    }

    /// Node indices carrying unknowns.
    pub fn unknowns(&self) -> std::ops::Range<usize> {
        let n = self.intervals();
        if self.origin {
            0..n
        } else {
            1..n
        }
    }
}

/// Potential `V(r)` multiplying `φ²` in the form.
#[derive(Clone, Copy)]
pub enum Potential<'a> {
    Zero,
    /// `r^α e^{u(r)}` along a profile.
    Profile(&'a RadialProfile),
    /// A closed-form potential; not usable at the origin if singular there.
    Function(&'a (dyn Fn(f64) -> f64 + Sync)),
}

impl Potential<'_> {
    fn value(&self, r: f64) -> f64 {
        match self {
            Potential::Zero => 0.0,
            Potential::Profile(p) => {
                let a = p.params.alpha;
                let u = if r <= p.first().r {
                    p.params.delta
                } else {
                    p.state_at(r).map(|s| s.u).unwrap_or(f64::NEG_INFINITY)
                };
                (a * r.ln() + u).exp()
            }
            Potential::Function(f) => f(r),
        }
    }

    /// `∫₀^m V r^{N−1} dr` for the origin cell.
    fn origin_weight(&self, dim: u32, m: f64) -> f64 {
        let n = dim as f64;
        match self {
            Potential::Zero => 0.0,
            Potential::Profile(p) => {
                let na = n + p.params.alpha;
                p.params.delta.exp() * m.powf(na) / na
            }
            Potential::Function(f) => f(0.5 * m) * m.powf(n) / n,
        }
    }

    fn check_range(&self, rb: f64) -> Result<()> {
        if let Potential::Profile(p) = self {
            if !p.is_global() {
                return Err(Error::pre("the form needs a global profile"));
            }
            if rb > p.r_end() * (1.0 + 1e-12) {
                return Err(Error::pre(format!(
                    "domain end {rb:e} exceeds the profile range {:e}",
                    p.r_end()
                )));
            }
        }
        Ok(())
    }
}

/// `∫_a^b r^{N−1} dr` without cancellation.
fn shell_volume(dim: u32, a: f64, b: f64) -> f64 {
    let n = dim as f64;
    if a == 0.0 {
        return b.powf(n) / n;
    }
    a.powf(n) * (n * (b / a).ln()).exp_m1() / n
}

/// Dual-cell volumes at every node.
fn dual_volumes(dim: u32, r: &[f64]) -> Vec<f64> {
    let n = r.len() - 1;
    (0..=n)
        .map(|i| {
            let a = if i == 0 { r[0] } else { 0.5 * (r[i - 1] + r[i]) };
            let b = if i == n { r[n] } else { 0.5 * (r[i] + r[i + 1]) };
            shell_volume(dim, a, b)
        })
        .collect()
}

/// Row of `Δ` at node `i` in flux form: `(F_{i+½} − F_{i−½})/w_i` with
/// `F = m^{N−1}(φ_{i+1} − φ_i)/h` at the cell midpoint `m`. The end fluxes
/// vanish (symmetry at the origin, `φ′ = 0` at a clamped end).
/// Off-diagonal coefficients stay positive for every N, which the pointwise
/// centered stencil loses near the origin once `N − 1 > 2i`.
fn laplacian_row(dim: u32, g: &Grid, w: &[f64], i: usize) -> [(usize, f64); 3] {
    let r = &g.r;
    let n = r.len() - 1;
    let nn = dim as f64;
    let face = |k: usize| (0.5 * (r[k] + r[k + 1])).powf(nn - 1.0) / (r[k + 1] - r[k]);
    let left = if i > 0 { face(i - 1) / w[i] } else { 0.0 };
    let right = if i < n { face(i) / w[i] } else { 0.0 };
    match i {
        0 => [(0, -right), (1, right), (1, 0.0)],
        _ if i == n => [(n - 1, left), (n, -left), (n, 0.0)],
        _ => [(i - 1, left), (i, -left - right), (i + 1, right)],
    }
}

/// Matrices of the discrete generalized problem `(A − V) x = λ B x` on the unknowns.
pub struct FormMatrices {
    pub dim: u32,
    pub grid: Grid,
    /// Biharmonic part `DᵀWD`.
    pub a: SymBand,
    /// Potential weights `∫_cell V r^{N−1}`.
    pub v: Vec<f64>,
    /// Mass weights `∫_cell r^{N−1}`.
    pub b: Vec<f64>,
}

impl FormMatrices {
    pub fn build(dim: u32, grid: Grid, potential: Potential<'_>) -> Result<Self> {
        let n = grid.intervals();
        if n < 4 {
            return Err(Error::pre("grid too small"));
        }
        let first = grid.unknowns().start;
        let m = grid.unknowns().len();
        let w = dual_volumes(dim, &grid.r);
        let mut a = SymBand::zeros(m, 2);
        for i in 0..=n {
            let row = laplacian_row(dim, &grid, &w, i);
            for &(j, cj) in &row {
                for &(k, ck) in &row {
                    if cj == 0.0 || ck == 0.0 || k > j || !grid.unknowns().contains(&j) || !grid.unknowns().contains(&k) {
                        continue;
                    }
                    a.add(j - first, k - first, w[i] * cj * ck);
                }
            }
        }
        let v = grid
            .unknowns()
            .map(|j| {
                if grid.r[j] == 0.0 {
                    potential.origin_weight(dim, 0.5 * grid.r[1])
                } else {
                    w[j] * potential.value(grid.r[j])
                }
            })
            .collect();
        let b = grid.unknowns().map(|j| w[j]).collect();
        Ok(Self { dim, grid, a, v, b })
    }

    pub fn q_matrix(&self) -> SymBand {
        let mut out = self.a.clone();
        for (i, vi) in self.v.iter().enumerate() {
            out.add(i, i, -vi);
        }
        out
    }

    /// Discrete `Q(φ)` for nodal values on the unknowns.
    pub fn form(&self, x: &[f64]) -> f64 {
        let ax = self.a.mul(x);
        x.iter().zip(&ax).map(|(a, b)| a * b).sum::<f64>()
            - x.iter().zip(&self.v).map(|(a, v)| v * a * a).sum::<f64>()
    }

    pub fn mass(&self, x: &[f64]) -> f64 {
        x.iter().zip(&self.b).map(|(a, b)| b * a * a).sum()
    }

    /// Smallest generalized eigenvalue and its eigenvector on the unknowns.
    pub fn min_eigen(&self) -> (f64, Vec<f64>) {
        let vmax = self.v.iter().zip(&self.b).map(|(v, b)| v / b).fold(0.0, f64::max);
        min_generalized(&self.q_matrix(), &self.b, -vmax, None)
    }

    /// Nodal values on the full grid (boundary zeros included).
    pub fn full_vector(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.grid.r.len()];
        for (k, j) in self.grid.unknowns().enumerate() {
            out[j] = x[k];
        }
        out
    }
}

/// Independent value of `Q` for nodal values `phi` on the full grid:
/// pointwise centered `φ″ + (N−1)φ′/r` and Simpson quadrature.
pub fn form_value_check(dim: u32, grid: &Grid, potential: Potential<'_>, phi: &[f64]) -> f64 {
    let r = &grid.r;
    let n = r.len() - 1;
    let nn = dim as f64;
    let lap: Vec<f64> = (0..=n)
        .map(|i| {
            if i == 0 || i == n {
                // reflected ghost node: φ′ = 0 at both ends
                let (h, nb) = if i == 0 { (r[1] - r[0], phi[1]) } else { (r[n] - r[n - 1], phi[n - 1]) };
                let k = if i == 0 && grid.origin { 2.0 * nn } else { 2.0 };
                return k * (nb - phi[i]) / (h * h);
            }
            let (hm, hp) = (r[i] - r[i - 1], r[i + 1] - r[i]);
            let d2 = 2.0 * (hm * phi[i + 1] - (hm + hp) * phi[i] + hp * phi[i - 1]) / (hm * hp * (hm + hp));
            let d1 = (hm * hm * phi[i + 1] + (hp * hp - hm * hm) * phi[i] - hp * hp * phi[i - 1]) / (hm * hp * (hm + hp));
            d2 + (nn - 1.0) * d1 / r[i]
        })
        .collect();
    let bi: Vec<f64> = (0..=n).map(|i| lap[i] * lap[i] * r[i].powf(nn - 1.0)).collect();
    let pot: Vec<f64> = (0..=n)
        .map(|i| {
            if r[i] == 0.0 {
                0.0
            } else {
                potential.value(r[i]) * phi[i] * phi[i] * r[i].powf(nn - 1.0)
            }
        })
        .collect();
    simpson(r, &bi) - simpson(r, &pot)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EigenWitness {
    pub r: Vec<f64>,
    pub phi: Vec<f64>,
    /// Form value in the discretization that produced it.
    pub form: f64,
    /// Form value recomputed by [`form_value_check`].
    pub form_check: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MinEig {
    pub domain: (f64, f64),
    pub grid: usize,
    /// Value on the refined grid (`2·grid` intervals).
    pub lambda: f64,
    /// Value on `grid` intervals.
    pub lambda_coarse: f64,
    /// Refinement changed the value by at most 10%.
    pub converged: bool,
    pub eigenfunction: EigenWitness,
}

impl MinEig {
    /// Negative on the refined grid, confirmed by the independent re-evaluation.
    pub fn certifies_instability(&self) -> bool {
        self.lambda < 0.0 && self.eigenfunction.form_check < 0.0
    }
}

/// Smallest eigenvalue of the discrete form with an explicit potential.
pub fn min_eig_potential(dim: u32, domain: (f64, f64), grid: usize, potential: Potential<'_>, exec: Execution) -> Result<MinEig> {
    let (ra, rb) = domain;
    if !(ra >= 0.0 && rb > ra) || !rb.is_finite() {
        return Err(Error::pre(format!("invalid domain ({ra}, {rb})")));
    }
    if grid < 64 {
        return Err(Error::pre(format!("grid = {grid} must be at least 64")));
    }
    if dim < 2 {
        return Err(Error::pre("N >= 2 required"));
    }
    potential.check_range(rb)?;
    let sizes = [grid, 2 * grid];
    let solved = par::map(exec, &sizes, |&n| -> Result<_> {
        let fm = FormMatrices::build(dim, Grid::for_domain(ra, rb, n), potential)?;
        let (lambda, x) = fm.min_eigen();
        Ok((fm, lambda, x))
    });
    let mut solved = solved.into_iter().collect::<Result<Vec<_>>>()?;
    let (fm, lambda, x) = solved.pop().unwrap();
    let lambda_coarse = solved[0].1;
    let phi = fm.full_vector(&x);
    let form_check = form_value_check(dim, &fm.grid, potential, &phi) / fm.mass(&x);
    let converged = (lambda - lambda_coarse).abs() <= 0.1 * lambda.abs();
    Ok(MinEig {
        domain,
        grid,
        lambda,
        lambda_coarse,
        converged,
        eigenfunction: EigenWitness {
            r: fm.grid.r.clone(),
            phi,
            form: lambda,
            form_check,
        },
    })
}

/// Smallest eigenvalue of the linearized form along a profile on `(r_a, r_b)`.
pub fn min_eig(profile: &RadialProfile, domain: (f64, f64), grid: usize, exec: Execution) -> Result<MinEig> {
    min_eig_potential(profile.params.dim, domain, grid, Potential::Profile(profile), exec)
}
