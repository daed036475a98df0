use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use serde_json::json;

use henon_core::asymptotics::{check_limit_n5, coeffs_n3, energy_limit, energy_trace, mass_n4};
use henon_core::error::{Error, Result};
use henon_core::io::{table_csv, write_json, write_profile};
use henon_core::logcoord::to_log;
use henon_core::radial::{integrate, IntegrateOptions, ProblemParams, RadialProfile};
use henon_core::second_order::{integrate2, singular_solution, threshold2, witness2, SecondOrderParams};
use henon_core::shooting::{find_beta0, Separatrix, ShootOptions};
use henon_core::stability::{classify_stability, StabilityOptions};
use henon_core::sweep::{run_sweep, RunConfig};
use henon_core::Execution;

/// Radial solutions of Δ²u = |x|^α e^u: shooting, asymptotics and stability.
#[derive(Parser)]
#[command(name = "henon", version)]
struct Cli {
    /// Run everything on the calling thread.
    #[arg(long, global = true)]
    sequential: bool,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Integrate one radial trajectory.
    Solve(SolveArgs),
    /// Locate the separatrix value β₀.
    Shoot(ShootArgs),
    /// Asymptotic diagnostics of the separatrix.
    Asym(AsymArgs),
    /// Stability classification of one global solution.
    Stab(StabArgs),
    /// The second-order equation Δu + |x|^α e^u = 0.
    Second(SecondArgs),
    /// Tabulate a grid of (N, α) cells into a resumable store.
    Sweep(SweepArgs),
}

#[derive(Args)]
struct Problem {
    #[arg(long)]
    dim: u32,
    #[arg(long, allow_hyphen_values = true)]
    alpha: f64,
}

#[derive(Args)]
struct SolveArgs {
    #[command(flatten)]
    problem: Problem,
    /// Δu(0)
    #[arg(long, allow_hyphen_values = true)]
    beta: f64,
    /// u(0)
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    delta: f64,
    #[arg(long, default_value_t = 1e3)]
    r_max: f64,
    /// Relative integration tolerance.
    #[arg(long, default_value_t = 1e-10)]
    tol: f64,
    /// Output stem: writes <stem>.csv and <stem>.json.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ShootArgs {
    #[command(flatten)]
    problem: Problem,
    /// Bisection tolerance; default 1e-10·max(1, |β|).
    #[arg(long)]
    tol_beta: Option<f64>,
    #[arg(long, default_value_t = 1e3)]
    r_max: f64,
    /// Output directory for shoot.json and the two witness profiles.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct AsymArgs {
    #[command(flatten)]
    problem: Problem,
    /// A value, or "auto" to bisect to adjacent floats first.
    #[arg(long, default_value = "auto", allow_hyphen_values = true)]
    beta0: String,
    #[arg(long, default_value_t = 1e4)]
    r_max: f64,
    /// Output directory for asym.json and energy.csv.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct StabArgs {
    #[command(flatten)]
    problem: Problem,
    /// A value below β₀, or "separatrix".
    #[arg(long, allow_hyphen_values = true)]
    beta: String,
    /// Eigenvalue test domain as ra:rb.
    #[arg(long)]
    domain: Option<String>,
    #[arg(long, default_value_t = 800)]
    grid: usize,
    #[arg(long, default_value_t = 1e3)]
    r_max: f64,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Writes the discrete eigenfunction as CSV.
    #[arg(long)]
    witness_out: Option<PathBuf>,
}

#[derive(Args)]
#[command(args_conflicts_with_subcommands = true)]
struct SecondArgs {
    #[command(subcommand)]
    witness: Option<SecondCmd>,
    #[arg(long)]
    dim: Option<u32>,
    #[arg(long, allow_hyphen_values = true)]
    alpha: Option<f64>,
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    u0: f64,
    #[arg(long, default_value_t = 1e4)]
    r_max: f64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum SecondCmd {
    /// Negative-form test function for the singular solution on (R, 16R).
    Witness {
        #[command(flatten)]
        problem: Problem,
        /// Inner radius R.
        #[arg(long, default_value_t = 1.0)]
        annulus: f64,
        #[arg(long, default_value_t = 400)]
        grid: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct SweepArgs {
    /// Dimensions: a list "3,4,5" or a range "5..14".
    #[arg(long)]
    dim: String,
    /// Comma-separated α values.
    #[arg(long, default_value = "0", allow_hyphen_values = true)]
    alpha: String,
    /// key = value settings file.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    r_max: Option<f64>,
    #[arg(long)]
    grid: Option<usize>,
    /// Store directory; overrides `out` from the config.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Continue an existing store, skipping finished cells.
    #[arg(long)]
    resume: bool,
    /// Omit timestamps for byte-reproducible output.
    #[arg(long)]
    fixture: bool,
}

fn emit<T: Serialize>(value: &T, out: Option<&Path>) -> Result<()> {
    if let Some(path) = out {
        write_json(value, path)?;
    }
    print_json(value)
}

/// Prints to stdout; a closed pipe (e.g. `| head`) is not an error.
fn print_json<T: Serialize>(value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    match writeln!(std::io::stdout().lock(), "{text}") {
        Err(e) if e.kind() == std::io::ErrorKind::BrokenPipe => Ok(()),
        r => Ok(r?),
    }
}

fn parse_list<T: std::str::FromStr>(s: &str, what: &str) -> Result<Vec<T>> {
    s.split(',')
        .map(|x| x.trim().parse::<T>().map_err(|_| Error::Parse(format!("bad {what} value {x:?}"))))
        .collect()
}

fn parse_dims(s: &str) -> Result<Vec<u32>> {
    if let Some((a, b)) = s.split_once("..") {
        let (a, b) = (parse_list::<u32>(a, "dim")?[0], parse_list::<u32>(b, "dim")?[0]);
        if a > b {
            return Err(Error::Parse(format!("empty dimension range {s}")));
        }
        return Ok((a..=b).collect());
    }
    parse_list(s, "dim")
}

fn parse_domain(s: &str) -> Result<(f64, f64)> {
    let (a, b) = s
        .split_once(':')
        .ok_or_else(|| Error::Parse(format!("domain {s:?} is not ra:rb")))?;
    let p = |x: &str| x.trim().parse::<f64>().map_err(|_| Error::Parse(format!("bad domain bound {x:?}")));
    Ok((p(a)?, p(b)?))
}

fn exhausted_separatrix(template: &ProblemParams, r_max: f64, exec: Execution) -> Result<Separatrix> {
    if template.dim <= 2 {
        return Err(Error::NoEntireSolution(template.dim));
    }
    let shot = find_beta0(template, Some(f64::MIN_POSITIVE), &ShootOptions::default())?;
    Separatrix::from_shoot(&shot, r_max, exec)
}

/// Trusted-range tolerance on `u` for separatrix diagnostics.
const TRUST_EPS: f64 = 1e-3;

fn solve(a: SolveArgs) -> Result<()> {
    let p = ProblemParams::new(a.problem.dim, a.problem.alpha, a.delta, a.beta)?;
    if p.dim <= 2 {
        return Err(Error::NoEntireSolution(p.dim));
    }
    let opts = IntegrateOptions::with_tol(a.tol);
    let prof = integrate(&p, a.r_max, &opts)?;
    if let Some(stem) = &a.out {
        write_profile(&prof, stem)?;
    }
    emit(&henon_core::io::ProfileMeta::of(&prof), None)
}

fn shoot(a: ShootArgs) -> Result<()> {
    let template = ProblemParams::with_beta(a.problem.dim, a.problem.alpha, 0.0)?;
    let opts = ShootOptions {
        r_max: a.r_max,
        r_max_cap: a.r_max.max(ShootOptions::default().r_max_cap),
        ..ShootOptions::default()
    };
    let res = find_beta0(&template, a.tol_beta, &opts)?;
    if let Some(dir) = &a.out {
        write_profile(&res.witness_global, &dir.join("witness_global"))?;
        write_profile(&res.witness_blowup, &dir.join("witness_blowup"))?;
    }
    emit(&res, a.out.as_ref().map(|d| d.join("shoot.json")).as_deref())
}

fn energy_csv(prof: &RadialProfile, dir: &Path) -> Result<()> {
    let lp = to_log(prof)?;
    let e = energy_trace(&lp)?;
    let rows = lp.samples.iter().zip(&e.samples).map(|(x, en)| vec![x.s, x.w, en.1]);
    fs::create_dir_all(dir)?;
    fs::write(dir.join("energy.csv"), table_csv(&["s", "w", "E"], rows))?;
    Ok(())
}

fn asym(a: AsymArgs, exec: Execution) -> Result<()> {
    let template = ProblemParams::with_beta(a.problem.dim, a.problem.alpha, 0.0)?;
    let (prof, beta0, trusted) = if a.beta0 == "auto" {
        let sep = exhausted_separatrix(&template, a.r_max, exec)?;
        let tr = sep.trusted_radius(TRUST_EPS);
        (sep.trusted(TRUST_EPS), sep.bracket.0, Some(tr))
    } else {
        let b: f64 = a
            .beta0
            .parse()
            .map_err(|_| Error::Parse(format!("--beta0 {:?} is neither a number nor auto", a.beta0)))?;
        let prof = integrate(&template.at_beta(b), a.r_max, &IntegrateOptions::default())?;
        if !prof.is_global() {
            return Err(Error::Precondition(format!("beta0 = {b} blows up before r = {:e}", a.r_max)));
        }
        (prof, b, None)
    };
    let dim = template.dim;
    let report = match dim {
        3 => json!({ "beta0": beta0, "trusted_radius": trusted, "n3": coeffs_n3(&prof)? }),
        4 => {
            let e = energy_trace(&to_log(&prof)?)?;
            json!({
                "beta0": beta0,
                "trusted_radius": trusted,
                "n4": mass_n4(&prof, 1e3)?,
                "energy_drift": e.relative_drift((0.0, 1e3f64.ln())),
            })
        }
        _ => {
            let lp = to_log(&prof)?;
            let e = energy_trace(&lp)?;
            json!({
                "beta0": beta0,
                "trusted_radius": trusted,
                "limit": check_limit_n5(&lp)?,
                "energy_max_decrease": e.max_decrease((f64::NEG_INFINITY, f64::INFINITY)),
                "energy_limit": energy_limit(&lp)?,
            })
        }
    };
    if let Some(dir) = &a.out {
        if dim >= 4 {
            energy_csv(&prof, dir)?;
        }
    }
    emit(&report, a.out.as_ref().map(|d| d.join("asym.json")).as_deref())
}

fn stab(a: StabArgs, exec: Execution) -> Result<()> {
    let template = ProblemParams::with_beta(a.problem.dim, a.problem.alpha, 0.0)?;
    let prof = if a.beta == "separatrix" {
        exhausted_separatrix(&template, a.r_max, exec)?.trusted(TRUST_EPS)
    } else {
        let b: f64 = a
            .beta
            .parse()
            .map_err(|_| Error::Parse(format!("--beta {:?} is neither a number nor separatrix", a.beta)))?;
        if template.dim <= 2 {
            return Err(Error::NoEntireSolution(template.dim));
        }
        integrate(&template.at_beta(b), a.r_max, &IntegrateOptions::default())?
    };
    if !prof.is_global() {
        return Err(Error::Precondition(format!(
            "beta = {} blows up: stability needs an entire solution (beta <= beta0)",
            prof.params.beta
        )));
    }
    let opts = StabilityOptions {
        grid: a.grid,
        domain: a.domain.as_deref().map(parse_domain).transpose()?,
        exec,
    };
    let rep = classify_stability(&prof, &opts)?;
    if let Some(path) = &a.witness_out {
        let w = &rep.min_eig.eigenfunction;
        if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            fs::create_dir_all(dir)?;
        }
        let rows = w.r.iter().zip(&w.phi).map(|(r, p)| vec![*r, *p]);
        fs::write(path, table_csv(&["r", "phi"], rows))?;
    }
    emit(&rep, a.out.as_deref())
}

fn second(a: SecondArgs) -> Result<()> {
    if let Some(SecondCmd::Witness {
        problem,
        annulus,
        grid,
        out,
    }) = a.witness
    {
        let w = witness2(problem.dim, problem.alpha, annulus, grid)?;
        return emit(&w, out.as_deref());
    }
    let (Some(dim), Some(alpha)) = (a.dim, a.alpha) else {
        return Err(Error::Parse("second needs --dim and --alpha".into()));
    };
    let p = SecondOrderParams::new(dim, alpha, a.u0)?;
    let prof = integrate2(&p, a.r_max, &IntegrateOptions::default())?;
    let end = prof.samples[prof.samples.len() - 1];
    let mut report = json!({
        "params": p,
        "r_end": end.r,
        "u_end": end.u,
        "steps": prof.stats,
    });
    if dim >= 3 {
        let s = singular_solution(dim, alpha)?;
        report["threshold"] = json!(threshold2(dim, alpha)?);
        report["singular"] = json!(s);
        report["distance_to_singular"] = json!(end.u - s.u(end.r));
    }
    emit(&report, a.out.as_deref())
}

fn sweep(a: SweepArgs, exec: Execution) -> Result<()> {
    let mut cfg = match &a.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if let Some(t) = a.tol {
        cfg.rtol = t;
    }
    if let Some(r) = a.r_max {
        cfg.r_max = r;
        cfg.r_max_cap = cfg.r_max_cap.max(r);
    }
    if let Some(g) = a.grid {
        cfg.grid = g;
    }
    if a.out.is_some() {
        cfg.out = a.out.clone();
    }
    cfg.fixture |= a.fixture;
    cfg.validate()?;
    let dims = parse_dims(&a.dim)?;
    let alphas: Vec<f64> = parse_list(&a.alpha, "alpha")?;
    let cells: Vec<(u32, f64)> = dims.iter().flat_map(|&d| alphas.iter().map(move |&al| (d, al))).collect();
    if let Some(dir) = &cfg.out {
        if dir.join("records.jsonl").exists() && !a.resume {
            return Err(Error::Precondition(format!(
                "store {} already holds records; pass --resume to continue it",
                dir.display()
            )));
        }
    }
    let table = run_sweep(&cells, &cfg, cfg.out.as_deref(), exec)?;
    print_json(&table)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let exec = if cli.sequential {
        Execution::Sequential
    } else {
        Execution::Parallel
    };
    let res = match cli.cmd {
        Cmd::Solve(a) => solve(a),
        Cmd::Shoot(a) => shoot(a),
        Cmd::Asym(a) => asym(a, exec),
        Cmd::Stab(a) => stab(a, exec),
        Cmd::Second(a) => second(a),
        Cmd::Sweep(a) => sweep(a, exec),
    };
    match res {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
