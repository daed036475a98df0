use henon_core::io::{parse_profile_csv, profile_csv, read_profile, write_profile};
use henon_core::quadrature::running_mass;
use henon_core::radial::{integrate, integrate_from, scale_solution, IntegrateOptions, ProblemParams, RadialProfile, RadialState};
use henon_core::second_order::hardy_form2_min;
use henon_core::shooting::{classify, find_beta0, ShootOptions, Verdict};
use henon_core::stability::form::{FormMatrices, Grid, Potential};
use henon_core::stability::qn::q_n;
use henon_core::stability::{hardy_check, min_eig, n_alpha, qn_roots, threshold_poly, QnRoots};
use henon_core::Execution;
use proptest::prelude::*;

const TOL: f64 = 1e-10;

fn opts() -> IntegrateOptions {
    IntegrateOptions::with_tol(TOL)
}

fn profile(dim: u32, alpha: f64, beta: f64, r_max: f64) -> RadialProfile {
    integrate(&ProblemParams::with_beta(dim, alpha, beta).unwrap(), r_max, &opts()).unwrap()
}

fn cfg(cases: u32) -> ProptestConfig {
    ProptestConfig {
        cases,
        failure_persistence: None,
        ..ProptestConfig::default()
    }
}

/// Weights of the `m`-th derivative at `x0` for nodes `x` (Fornberg).
fn fd_weights(x0: f64, x: &[f64], m: usize) -> Vec<f64> {
    let n = x.len();
    let mut c = vec![vec![0.0; m + 1]; n];
    let (mut c1, mut c4) = (1.0, x[0] - x0);
    c[0][0] = 1.0;
    for i in 1..n {
        let mn = i.min(m);
        let (mut c2, c5) = (1.0, c4);
        c4 = x[i] - x0;
        for j in 0..i {
            let c3 = x[i] - x[j];
            c2 *= c3;
            if j == i - 1 {
                for k in (1..=mn).rev() {
                    c[i][k] = c1 * (k as f64 * c[i - 1][k - 1] - c5 * c[i - 1][k]) / c2;
                }
                c[i][0] = -c1 * c5 * c[i - 1][0] / c2;
            }
            for k in (1..=mn).rev() {
                c[j][k] = (c4 * c[j][k] - k as f64 * c[j][k - 1]) / c3;
            }
            c[j][0] *= c4 / c3;
        }
        c1 = c2;
    }
    c.into_iter().map(|row| row[m]).collect()
}

proptest! {
    #![proptest_config(cfg(100))]

    #[test]
    fn comparison_principle_preserves_order(
        dim in 3u32..14,
        alpha in -1.5f64..3.0,
        rho in 0.05f64..2.0,
        base in prop::array::uniform4(-3.0f64..3.0),
        gap in prop::array::uniform4(0.0f64..0.5),
        bump in 0usize..4,
    ) {
        let params = ProblemParams::with_beta(dim, alpha, 0.0).unwrap();
        let mut gap = gap;
        gap[bump] += 1e-3;
        let lo = RadialState { r: rho, u: base[0], p: base[1], v: base[2], q: base[3] };
        let hi = RadialState { r: rho, u: base[0] + gap[0], p: base[1] + gap[1], v: base[2] + gap[2], q: base[3] + gap[3] };
        let o = IntegrateOptions { u_max: 30.0, ..opts() };
        let a = integrate_from(&params, lo, 20.0 * rho, &o).unwrap();
        let b = integrate_from(&params, hi, 20.0 * rho, &o).unwrap();
        for s in &a.samples {
            let Some(t) = b.state_at(s.r) else { break };
            for (x, y) in s.vector().iter().zip(t.vector()) {
                prop_assert!(y >= x - 1e-7 * (1.0 + x.abs()), "r={} lower {:?} upper {:?}", s.r, s, t);
            }
        }
    }
}

proptest! {
    #![proptest_config(cfg(32))]

    #[test]
    fn laplacian_is_nondecreasing(dim in 3u32..15, alpha in -1.5f64..3.0, beta in -60.0f64..2.0) {
        let p = profile(dim, alpha, beta, 200.0);
        for w in p.samples.windows(2) {
            prop_assert!(w[1].v >= w[0].v - 1e-12 * w[0].v.abs(), "{:?} -> {:?}", w[0], w[1]);
        }
        prop_assert!(p.samples.iter().all(|s| s.q >= 0.0));
    }

    #[test]
    fn scaling_commutes_with_integration(
        dim in 3u32..14,
        alpha in -1.5f64..3.0,
        beta in -40.0f64..-5.0,
        lambda in 0.5f64..3.0,
    ) {
        let base = ProblemParams::with_beta(dim, alpha, beta).unwrap();
        let scaled = scale_solution(&integrate(&base, 40.0, &opts()).unwrap(), lambda).unwrap();
        let direct = integrate(&scaled.params, 40.0 / lambda, &opts()).unwrap();
        let mut worst = 0.0f64;
        for s in direct.samples.iter().filter(|s| s.r >= 1e-3) {
            if let Some(t) = scaled.state_at(s.r) {
                worst = worst.max((s.u - t.u).abs() / (1.0 + s.u.abs()));
            }
        }
        prop_assert!(worst <= 10.0 * TOL, "worst {worst:e}");
    }

    #[test]
    fn flux_equals_running_mass(dim in 3u32..14, alpha in -1.5f64..3.0, beta in -40.0f64..-1.0) {
        let p = profile(dim, alpha, beta, 50.0);
        let mass = running_mass(&p);
        let n1 = p.params.n() - 1.0;
        // relative accuracy of q is only meaningful well above the absolute tolerance
        let floor = 1e7 * p.stats.atol;
        for (s, m) in p.samples.iter().zip(&mass).filter(|(s, _)| s.q >= floor) {
            let flux = s.q * s.r.powf(n1);
            prop_assert!((flux - m).abs() <= 1e-6 * m.abs(), "r={}: {flux:e} vs {m:e}", s.r);
        }
    }

    #[test]
    fn interior_finite_differences_recover_laplacian(dim in 3u32..14, alpha in -1.0f64..3.0, beta in -30.0f64..-3.0) {
        let o = IntegrateOptions { sample_ratio: 1.002, ..opts() };
        let p = integrate(&ProblemParams::with_beta(dim, alpha, beta).unwrap(), 20.0, &o).unwrap();
        prop_assume!(p.is_global());
        let n1 = p.params.n() - 1.0;
        let mut worst = 0.0f64;
        for win in p.samples.windows(5).filter(|w| w[0].r >= 0.1) {
            let r: Vec<f64> = win.iter().map(|s| s.r).collect();
            let u: Vec<f64> = win.iter().map(|s| s.u).collect();
            let x0 = r[2];
            let d1: f64 = fd_weights(x0, &r, 1).iter().zip(&u).map(|(w, u)| w * u).sum();
            let d2: f64 = fd_weights(x0, &r, 2).iter().zip(&u).map(|(w, u)| w * u).sum();
            let v = d2 + n1 * d1 / x0;
            worst = worst.max((v - win[2].v).abs() / win[2].v.abs());
        }
        prop_assert!(worst <= 100.0 * TOL, "worst {worst:e}");
    }

    #[test]
    fn n_alpha_increases_with_alpha(a in -1.99f64..6.0, da in 1e-3f64..2.0) {
        let (lo, hi) = (n_alpha(a).unwrap(), n_alpha(a + da).unwrap());
        prop_assert!(hi > lo && lo > 5.0);
        prop_assert!(threshold_poly(lo, a).abs() < 1e-9 * lo.powi(3));
    }

    #[test]
    fn qn_roots_are_symmetric_about_center(dim in 5u32..40, alpha in -1.9f64..6.0) {
        let roots = qn_roots(dim, alpha).unwrap();
        let n = dim as f64;
        let center = -(n - 4.0) / 2.0;
        let scale = n.powi(4);
        let res = |nu: f64| q_n(dim, alpha, nu).unwrap().abs() / scale;
        match roots {
            QnRoots::Real { nu1, nu2, nu3, nu4, nu_star } => {
                prop_assert_eq!(nu_star, center);
                prop_assert!((nu1 + nu4 - 2.0 * center).abs() < 1e-10);
                prop_assert!((nu2 + nu3 - 2.0 * center).abs() < 1e-10);
                for nu in [nu1, nu2, nu3, nu4] {
                    prop_assert!(res(nu) < 1e-12, "{nu}: {}", res(nu));
                }
                prop_assert!(nu1 > 0.0 && 0.0 > nu2 && nu2 >= nu3 && nu3 > nu4);
            }
            QnRoots::ComplexPair { nu1, nu4, re, im, .. } => {
                prop_assert!((nu1 + nu4 - 2.0 * center).abs() < 1e-10);
                prop_assert_eq!(re, center);
                prop_assert!(im > 0.0);
                prop_assert!(res(nu1) < 1e-12 && res(nu4) < 1e-12);
                prop_assert!(n < n_alpha(alpha).unwrap() + 1e-9);
            }
        }
    }

    #[test]
    fn profile_json_and_csv_round_trip_bit_exactly(dim in 3u32..14, alpha in -1.5f64..3.0, beta in -40.0f64..0.0) {
        let p = profile(dim, alpha, beta, 30.0);
        let json = serde_json::to_string(&p).unwrap();
        let back: RadialProfile = serde_json::from_str(&json).unwrap();
        prop_assert_eq!(&back, &p);
        let rows = parse_profile_csv(&profile_csv(&p)).unwrap();
        prop_assert_eq!(&rows, &p.samples);
    }
}

proptest! {
    #![proptest_config(cfg(12))]

    #[test]
    fn bisection_history_is_ordered(dim in 3u32..14, alpha in -1.0f64..2.5) {
        let tpl = ProblemParams::with_beta(dim, alpha, 0.0).unwrap();
        let res = find_beta0(&tpl, None, &ShootOptions::default()).unwrap();
        let max_global = res.history.iter().filter(|e| e.verdict == Verdict::Global).map(|e| e.beta).fold(f64::NEG_INFINITY, f64::max);
        let min_blowup = res.history.iter().filter(|e| e.verdict == Verdict::BlowUp).map(|e| e.beta).fold(f64::INFINITY, f64::min);
        prop_assert!(max_global < min_blowup);
        prop_assert_eq!(max_global, res.bracket.0);
        prop_assert_eq!(min_blowup, res.bracket.1);
        prop_assert!(res.witness_global.is_global());
        if !res.high_certificate.is_heuristic() {
            prop_assert_eq!(classify(&res.witness_blowup).verdict, Verdict::BlowUp);
        }
        if !res.low_certificate.is_heuristic() {
            prop_assert_eq!(classify(&res.witness_global).verdict, Verdict::Global);
        }
    }

    #[test]
    fn beta0_is_covariant_under_scaling(dim in 3u32..14, alpha in -1.0f64..2.5) {
        let lambda: f64 = 2.0;
        let o = ShootOptions::default();
        let b = find_beta0(&ProblemParams::with_beta(dim, alpha, 0.0).unwrap(), None, &o).unwrap().beta0;
        let shifted = ProblemParams::new(dim, alpha, (4.0 + alpha) * lambda.ln(), 0.0).unwrap();
        let bs = find_beta0(&shifted, None, &o).unwrap().beta0;
        prop_assert!((bs - lambda * lambda * b).abs() <= 1e-4 * bs.abs(), "{bs} vs {}", lambda * lambda * b);
    }

    #[test]
    fn min_eig_is_stable_under_grid_refinement(dim in 3u32..14, alpha in -1.0f64..2.5, depth in 0.5f64..20.0, radius in 5.0f64..50.0) {
        let tpl = ProblemParams::with_beta(dim, alpha, 0.0).unwrap();
        let b0 = find_beta0(&tpl, None, &ShootOptions::default()).unwrap().bracket.0;
        let p = profile(dim, alpha, b0 - depth, 100.0);
        let e = min_eig(&p, (0.0, radius), 400, Execution::Sequential).unwrap();
        prop_assert_eq!(e.converged, (e.lambda - e.lambda_coarse).abs() <= 0.1 * e.lambda.abs());
        prop_assert!(e.converged, "lambda {} coarse {}", e.lambda, e.lambda_coarse);
        if hardy_check(&p, p.first().r).margin >= 0.0 {
            prop_assert!(e.lambda >= -1e-8);
        }
    }
}

#[test]
fn discrete_form_converges_at_second_order() {
    // φ = (1 − r²)³ on the unit ball, V = 0: Q = ∫(Δφ)² r^{N−1} dr in closed form.
    for dim in [3u32, 5, 8] {
        let n = dim as f64;
        let value = |cells: usize| {
            let grid = Grid::ball(1.0, cells, 0.25);
            let x: Vec<f64> = grid.r[..cells].iter().map(|r| (1.0 - r * r).powi(3)).collect();
            FormMatrices::build(dim, grid, Potential::Zero).unwrap().form(&x)
        };
        // Δφ = −6N + 12(N+2)r² − 6(N+4)r⁴
        let (a, b, c) = (-6.0 * n, 12.0 * (n + 2.0), -6.0 * (n + 4.0));
        let exact = a * a / n + 2.0 * a * b / (n + 2.0) + (b * b + 2.0 * a * c) / (n + 4.0) + 2.0 * b * c / (n + 6.0) + c * c / (n + 8.0);
        let errs: Vec<f64> = [200, 400, 800].iter().map(|&m| (value(m) - exact).abs()).collect();
        assert!(errs[0] / errs[1] > 3.5 && errs[1] / errs[2] > 3.5, "N={dim}: {errs:?}");
    }
}

#[test]
fn second_order_hardy_constant_is_sharp() {
    for dim in [3u32, 6, 10, 14] {
        let h = (dim as f64 - 2.0).powi(2) / 4.0;
        let above = hardy_form2_min(dim, h + 0.2, (1.0, 1e6), 2000).unwrap();
        let below = hardy_form2_min(dim, h - 0.2, (1.0, 1e6), 2000).unwrap();
        assert!(above < 0.0 && below > 0.0, "N={dim}: {above} {below}");
    }
}

#[test]
fn profile_files_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let stem = dir.path().join("prof");
    let p = profile(6, 0.5, -12.0, 100.0);
    write_profile(&p, &stem).unwrap();
    let back = read_profile(&stem).unwrap();
    assert_eq!(back.samples, p.samples);
    assert_eq!(back.params, p.params);
    assert_eq!(back.termination, p.termination);
}
