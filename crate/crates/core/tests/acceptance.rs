//! Acceptance run: one PASS/FAIL line per criterion, nonzero exit on any failure.

use std::f64::consts::LN_10;
use std::process::ExitCode;
use std::time::Instant;

use henon_core::asymptotics::{check_limit_n5, coeffs_n3, energy_limit, energy_trace, mass_n4};
use henon_core::bounds::{navier_first_eigenvalue, verify_bounds};
use henon_core::logcoord::{lambda0, to_log};
use henon_core::par::{self, Execution};
use henon_core::quadrature::running_mass;
use henon_core::radial::{integrate, integrate_from, scale_solution, IntegrateOptions, ProblemParams, RadialState};
use henon_core::second_order::{singular_solution, threshold2, witness2, SphereSolution, Threshold2};
use henon_core::shooting::{classify_beta, find_beta0, Separatrix, ShootOptions, ShootResult, Verdict};
use henon_core::stability::beta1::{decide_stability, StabilityCertificate};
use henon_core::stability::{
    classify_stability, find_beta1, hardy_check, min_eig, n_alpha, threshold_poly, Beta1Options, StabilityClass,
    StabilityOptions,
};
use henon_core::Result;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const DIMS: [u32; 6] = [3, 4, 5, 6, 10, 13];
const ALPHAS: [f64; 4] = [-1.0, 0.0, 1.0, 2.0];
/// Bracket sides may differ by this much in u on the trusted range.
const TRUST_EPS: f64 = 1e-3;

struct Outcome {
    pass: bool,
    detail: String,
}

fn check(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn matrix() -> Vec<(u32, f64)> {
    DIMS.iter().flat_map(|&d| ALPHAS.iter().map(move |&a| (d, a))).collect()
}

fn tpl(dim: u32, alpha: f64) -> ProblemParams {
    ProblemParams::with_beta(dim, alpha, 0.0).unwrap()
}

/// β₀ bisected until no float lies inside the bracket.
fn exhausted(dim: u32, alpha: f64) -> Result<ShootResult> {
    find_beta0(&tpl(dim, alpha), Some(f64::MIN_POSITIVE), &ShootOptions::default())
}

fn separatrix(dim: u32, alpha: f64, r_max: f64) -> Result<Separatrix> {
    let shot = exhausted(dim, alpha)?;
    Separatrix::from_bracket(&shot.params, shot.bracket, r_max, &IntegrateOptions::default(), Execution::Sequential)
}

fn crit1() -> Result<Outcome> {
    let opts = ShootOptions::default();
    let rows = par::map(Execution::Parallel, &matrix(), |&(dim, alpha)| -> Result<(bool, String)> {
        let t = tpl(dim, alpha);
        let res = find_beta0(&t, Some(1e-9), &opts)?;
        let width = res.bracket.1 - res.bracket.0;
        let up = classify_beta(&t, res.beta0 + 1e-3, &opts)?.0;
        let (down, prof) = classify_beta(&t, res.beta0 - 1e-3, &opts)?;
        let ok = res.beta0 < 0.0
            && width <= 1e-8
            && up.verdict == Verdict::BlowUp
            && down.verdict == Verdict::Global
            && prof.last().v < 0.0;
        Ok((ok, format!("N={dim} a={alpha}: b0={:.10} width={width:.1e}", res.beta0)))
    });
    let mut bad = Vec::new();
    let mut worst_width = String::new();
    for r in rows {
        let (ok, line) = r?;
        if !ok {
            bad.push(line.clone());
        }
        worst_width = line;
    }
    Ok(check(
        bad.is_empty(),
        format!("24 cells; failures {bad:?}; last {worst_width}"),
    ))
}

fn crit2() -> Result<Outcome> {
    let mut worst = 0.0f64;
    let mut signs = true;
    for alpha in [0.0, 1.0] {
        let sep = separatrix(3, alpha, 1e4)?;
        let a = coeffs_n3(&sep.low)?;
        worst = worst.max(a.agreement());
        signs &= a.a1 < 0.0 && a.a2 > 0.0;
    }
    Ok(check(worst <= 0.01 && signs, format!("max relative disagreement {worst:.2e} (<= 1e-2)")))
}

fn crit3() -> Result<Outcome> {
    let mut line = Vec::new();
    let mut ok = true;
    for alpha in [0.0, 2.0] {
        let sep = separatrix(4, alpha, 1e4)?;
        let m = mass_n4(&sep.low, 1e3)?;
        ok &= m.mass_error() <= 0.01 && m.tail_residual.abs() <= 5e-2 && m.energy_identity <= 0.01;
        line.push(format!(
            "a={alpha}: c0={:.6} (expect {}) tail residual {:.1e}",
            m.c0, m.c0_expected, m.tail_residual
        ));
    }
    Ok(check(ok, line.join("; ")))
}

const LIMIT_CELLS: [(u32, f64); 4] = [(5, 0.0), (6, 0.0), (13, 0.0), (6, 1.0)];

fn crit4() -> Result<Outcome> {
    let mut ok = (lambda0(5, 0.0)? - 24f64.ln()).abs() < 1e-15 && (lambda0(6, 0.0)? - 64f64.ln()).abs() < 1e-15;
    let mut line = Vec::new();
    for (dim, alpha) in LIMIT_CELLS {
        let sep = separatrix(dim, alpha, 1e4)?;
        let trusted = sep.trusted(TRUST_EPS);
        let lim = check_limit_n5(&to_log(&trusted)?)?;
        let reach = trusted.r_end() >= 1e4 * (1.0 - 1e-12);
        ok &= reach && lim.sup_last_decade <= 5e-2;
        line.push(format!("({dim},{alpha}) sup={:.1e} to r={:.0e}", lim.sup_last_decade, trusted.r_end()));
    }
    Ok(check(ok, line.join("; ")))
}

fn crit5() -> Result<Outcome> {
    let mut ok = true;
    let mut line = Vec::new();
    for alpha in [0.0, 2.0] {
        let sep = separatrix(4, alpha, 1e4)?;
        let e = energy_trace(&to_log(&sep.trusted(TRUST_EPS))?)?;
        let drift = e.relative_drift((0.0, 3.0 * LN_10));
        ok &= drift <= 1e-6;
        line.push(format!("N=4 a={alpha} drift {drift:.1e}"));
    }
    for (dim, alpha) in LIMIT_CELLS {
        let sep = separatrix(dim, alpha, 1e5)?;
        let log = to_log(&sep.trusted(TRUST_EPS))?;
        let dec = energy_trace(&log)?.max_decrease((f64::NEG_INFINITY, f64::INFINITY));
        let lim = energy_limit(&log)?;
        ok &= dec <= 1e-8 && lim.limit.abs() <= 1e-4;
        line.push(format!("({dim},{alpha}) decrease {dec:.0e} lim E {:.1e}", lim.limit));
    }
    Ok(check(ok, line.join("; ")))
}

fn crit6() -> Result<Outcome> {
    let (n0, n2) = (n_alpha(0.0)?, n_alpha(2.0)?);
    let grid: Vec<f64> = (1..=60).map(|i| -2.0 + 0.1 * i as f64).collect();
    let mut ok = (12.56..=12.57).contains(&n0) && (15.0..=15.1).contains(&n2);
    ok &= grid.iter().all(|&a| threshold_poly(5.0, a) < 0.0);
    let values = grid.iter().map(|&a| n_alpha(a)).collect::<Result<Vec<_>>>()?;
    ok &= values.windows(2).all(|w| w[1] > w[0]);
    Ok(check(ok, format!("N_0={n0:.6} N_2={n2:.6}; f(5)<0 and monotone on 60 alphas in (-2, 4]")))
}

fn crit7() -> Result<Outcome> {
    let mut ok = true;
    let mut line = Vec::new();
    for dim in [3u32, 4] {
        let t = tpl(dim, 0.0);
        let b0 = find_beta0(&t, None, &ShootOptions::default())?.bracket.0;
        for off in [0.0, 0.5, 2.0] {
            let prof = integrate(&t.at_beta(b0 - off), 1e3, &IntegrateOptions::default())?;
            let rep = classify_stability(&prof, &StabilityOptions::default())?;
            ok &= rep.min_eig.certifies_instability() && matches!(rep.classification, StabilityClass::StableAtInfinity { .. });
        }
        line.push(format!("N={dim}: unstable and stable at infinity for 3 betas"));
    }

    let t5 = tpl(5, 0.0);
    let b0 = find_beta0(&t5, None, &ShootOptions::default())?.beta0;
    let opts = Beta1Options {
        tol: 1e-4,
        ..Beta1Options::default()
    };
    let b1 = find_beta1(&t5, b0, &opts)?;
    let below = decide_stability(&t5, b1.beta1 - 1e-2, &opts)?.certificate;
    let between = decide_stability(&t5, 0.5 * (b1.beta1 + b0), &opts)?.certificate;
    ok &= b1.beta1 < b0 && below.is_stable() && matches!(between, StabilityCertificate::NegativeEigen { .. });
    line.push(format!("N=5: b1={:.5} < b0={b0:.5}", b1.beta1));

    let sep = separatrix(13, 0.0, 1e4)?;
    let trusted = sep.trusted(TRUST_EPS);
    let lim = check_limit_n5(&to_log(&trusted)?)?;
    let hardy = hardy_check(&trusted, trusted.first().r);
    ok &= lim.upper_bound_holds() == Some(true) && hardy.margin >= 0.0;
    line.push(format!("N=13: max w={:.1e}, Hardy margin {:.2e}", lim.max_w, hardy.margin));
    Ok(check(ok, line.join("; ")))
}

fn crit8() -> Result<Outcome> {
    let rows = par::map(Execution::Parallel, &matrix(), |&(dim, alpha)| -> Result<f64> {
        let t = tpl(dim, alpha);
        let b0 = find_beta0(&t, None, &ShootOptions::default())?.bracket.0;
        let c = navier_first_eigenvalue(dim, alpha)?.ln();
        let mut worst = f64::INFINITY;
        for off in [0.0, 1e-3, 0.5, 2.0, 10.0] {
            let prof = integrate(&t.at_beta(b0 - off), 1e3, &IntegrateOptions::default())?;
            worst = worst.min(verify_bounds(&prof, b0, Some(c))?.worst());
        }
        Ok(worst)
    });
    let worst = rows.into_iter().collect::<Result<Vec<_>>>()?.into_iter().fold(f64::INFINITY, f64::min);
    Ok(check(worst >= -1e-8, format!("worst normalized margin {worst:.1e} over 120 trajectories")))
}

fn crit9() -> Result<Outcome> {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut sing = 0.0f64;
    for _ in 0..200 {
        let dim = rng.random_range(3..30);
        let alpha = rng.random_range(-1.9..6.0);
        let r = 10f64.powf(rng.random_range(-3.0..3.0));
        sing = sing.max(singular_solution(dim, alpha)?.residual(r));
    }
    let mut sphere = 0.0f64;
    for _ in 0..200 {
        let s = SphereSolution::from_u0(rng.random_range(-3.0..3.0));
        sphere = sphere.max(s.residual(10f64.powf(rng.random_range(-3.0..2.0))));
    }
    let mut flips = true;
    for alpha in [0.0, 0.25, 0.5, 1.0, 1.5, 2.0, 3.0] {
        let edge = 10.0 + 4.0 * alpha;
        for dim in 3u32..=30 {
            let want = if (dim as f64) >= edge {
                Threshold2::StableSingular
            } else {
                Threshold2::UnstableAtInfinitySingular
            };
            flips &= threshold2(dim, alpha)? == want;
        }
    }
    let w = witness2(10, 1.0, 1.0, 400)?;
    let dev = w.scaled.iter().map(|s| s.deviation).fold(0.0, f64::max);
    let ok = sing <= 1e-12 && sphere <= 1e-12 && flips && w.form < 0.0 && dev <= 1e-10;
    Ok(check(
        ok,
        format!(
            "singular residual {sing:.1e}, sphere residual {sphere:.1e}, threshold flips at 10+4a: {flips}, Q={:.3} scale deviation {dev:.1e}",
            w.form
        ),
    ))
}

fn crit10() -> Result<Outcome> {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let tol = 1e-10;
    let o = IntegrateOptions::with_tol(tol);

    let mut ordered = 0;
    for _ in 0..100 {
        let dim = rng.random_range(3..14);
        let p = ProblemParams::with_beta(dim, rng.random_range(-1.5..3.0), 0.0)?;
        let rho = rng.random_range(0.05..2.0);
        let base: [f64; 4] = std::array::from_fn(|_| rng.random_range(-3.0..3.0));
        let gap: [f64; 4] = std::array::from_fn(|_| rng.random_range(1e-3..0.5));
        let lo = RadialState::from_vector(rho, &base);
        let hi = RadialState::from_vector(rho, &std::array::from_fn(|k| base[k] + gap[k]));
        let oo = IntegrateOptions { u_max: 30.0, ..o };
        let (a, b) = (integrate_from(&p, lo, 20.0 * rho, &oo)?, integrate_from(&p, hi, 20.0 * rho, &oo)?);
        let holds = a.samples.iter().all(|s| {
            b.state_at(s.r).is_none_or(|t| s.vector().iter().zip(t.vector()).all(|(x, y)| y >= x - 1e-7 * (1.0 + x.abs())))
        });
        ordered += holds as usize;
    }

    let mut scaling = 0.0f64;
    let mut flux = 0.0f64;
    let mut unconverged = 0;
    for _ in 0..20 {
        let dim = rng.random_range(3..14);
        let alpha = rng.random_range(-1.5..3.0);
        let p = ProblemParams::with_beta(dim, alpha, rng.random_range(-40.0..-5.0))?;
        let prof = integrate(&p, 40.0, &o)?;
        let lambda = rng.random_range(0.5..3.0);
        let scaled = scale_solution(&prof, lambda)?;
        let direct = integrate(&scaled.params, 40.0 / lambda, &o)?;
        for s in direct.samples.iter().filter(|s| s.r >= 1e-3) {
            if let Some(t) = scaled.state_at(s.r) {
                scaling = scaling.max((s.u - t.u).abs() / (1.0 + s.u.abs()));
            }
        }
        let n1 = p.n() - 1.0;
        for (s, m) in prof.samples.iter().zip(running_mass(&prof)).filter(|(s, _)| s.q >= 1e7 * o.atol) {
            flux = flux.max((s.q * s.r.powf(n1) - m).abs() / m);
        }
        let e = min_eig(&prof, (0.0, 20.0), 400, Execution::Parallel)?;
        unconverged += !e.converged as usize;
    }
    let ok = ordered == 100 && scaling <= 10.0 * tol && flux <= 1e-6 && unconverged == 0;
    Ok(check(
        ok,
        format!(
            "order kept in {ordered}/100 pairs, scaling {scaling:.1e} (<= {:.0e}), flux identity {flux:.1e}, unconverged min_eig {unconverged}/20",
            10.0 * tol
        ),
    ))
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Result<Outcome>); 10] = [
        ("separatrix existence and dichotomy", crit1),
        ("N=3 coefficients", crit2),
        ("N=4 mass and constant term", crit3),
        ("N>=5 limit", crit4),
        ("energy identities", crit5),
        ("N_alpha", crit6),
        ("stability phase diagram", crit7),
        ("a-priori bounds", crit8),
        ("second-order module", crit9),
        ("oracle and property suites", crit10),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let t = Instant::now();
        let out = f().unwrap_or_else(|e| check(false, format!("error: {e}")));
        let tag = if out.pass { "PASS" } else { "FAIL" };
        failed += !out.pass as usize;
        println!("{tag} criterion {} ({name}): {} [{:.1}s]", i + 1, out.detail, t.elapsed().as_secs_f64());
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failed} criteria failed");
        ExitCode::FAILURE
    }
}
