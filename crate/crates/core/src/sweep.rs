//! Parameter sweeps over (N, α) with a resumable on-disk store.
//!
//! A store directory holds `manifest.json` (settings and their hash),
//! `records.jsonl` (one record per finished cell, appended as cells complete)
//! and `table.json` (all requested cells, sorted by (N, α)).

use std::collections::BTreeMap;
use std::fs::{self, OpenOptions};
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::sync::Mutex;
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::asymptotics::{check_limit_n5, coeffs_n3, mass_n4};
use crate::error::{Error, Result};
use crate::logcoord::to_log;
use crate::par::{self, Execution};
use crate::radial::{integrate, IntegrateOptions, ProblemParams};
use crate::shooting::{find_beta0, Separatrix, ShootOptions};
use crate::stability::{classify_stability, find_beta1, n_alpha, Beta1Options, StabilityClass, StabilityOptions};

/// Solver settings of a run, read from `key = value` lines.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub rtol: f64,
    pub atol: f64,
    /// Bisection tolerance for β₀; `None` bisects until adjacent floats.
    pub tol_beta: Option<f64>,
    pub r_max: f64,
    pub r_max_cap: f64,
    /// Radius of the separatrix rerun used for asymptotic diagnostics.
    pub asym_r_max: f64,
    /// Coarse grid of the eigenvalue computations.
    pub grid: usize,
    pub beta1_tol: f64,
    pub out: Option<PathBuf>,
    /// Omit wall-clock timestamps so output is byte-reproducible.
    pub fixture: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            rtol: 1e-10,
            atol: 1e-12,
            tol_beta: None,
            r_max: 1e3,
            r_max_cap: 1e5,
            asym_r_max: 1e4,
            grid: 400,
            beta1_tol: 1e-4,
            out: None,
            fixture: false,
        }
    }
}

fn parse_num<T: std::str::FromStr>(key: &str, v: &str) -> Result<T>
where
    T::Err: std::fmt::Display,
{
    v.parse::<T>().map_err(|e| Error::Parse(format!("{key} = {v}: {e}")))
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let mut c = RunConfig::default();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Parse(format!("line {}: expected key = value", i + 1)))?;
            let (k, v) = (k.trim(), v.trim());
            match k {
                "rtol" | "tol" => c.rtol = parse_num(k, v)?,
                "atol" => c.atol = parse_num(k, v)?,
                "tol_beta" => c.tol_beta = if v == "exhaust" { None } else { Some(parse_num(k, v)?) },
                "r_max" => c.r_max = parse_num(k, v)?,
                "r_max_cap" => c.r_max_cap = parse_num(k, v)?,
                "asym_r_max" => c.asym_r_max = parse_num(k, v)?,
                "grid" => c.grid = parse_num(k, v)?,
                "beta1_tol" => c.beta1_tol = parse_num(k, v)?,
                "out" => c.out = Some(PathBuf::from(v)),
                "fixture" => c.fixture = parse_num(k, v)?,
                _ => return Err(Error::Parse(format!("line {}: unknown key {k}", i + 1))),
            }
        }
        c.validate()?;
        Ok(c)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::parse(&fs::read_to_string(path)?)
    }

    pub fn validate(&self) -> Result<()> {
        let tols = [self.rtol, self.atol, self.beta1_tol, self.tol_beta.unwrap_or(1.0)];
        if tols.iter().any(|t| !(*t > 0.0)) {
            return Err(Error::pre("all tolerances must be positive"));
        }
        if !(self.r_max > 0.0 && self.r_max_cap >= self.r_max && self.asym_r_max > 0.0) {
            return Err(Error::pre("need 0 < r_max <= r_max_cap and asym_r_max > 0"));
        }
        if self.grid < 64 {
            return Err(Error::pre("grid must be at least 64"));
        }
        Ok(())
    }

    /// Canonical text of every setting that affects numbers.
    pub fn canonical(&self) -> String {
        let tb = self.tol_beta.map_or("exhaust".to_string(), |t| format!("{t:e}"));
        format!(
            "rtol={:e}\natol={:e}\ntol_beta={tb}\nr_max={:e}\nr_max_cap={:e}\nasym_r_max={:e}\ngrid={}\nbeta1_tol={:e}\n",
            self.rtol, self.atol, self.r_max, self.r_max_cap, self.asym_r_max, self.grid, self.beta1_tol
        )
    }

    /// SHA-256 of [`Self::canonical`], hex encoded.
    pub fn settings_hash(&self) -> String {
        Sha256::digest(self.canonical().as_bytes())
            .iter()
            .map(|b| format!("{b:02x}"))
            .collect()
    }

    pub fn integrate_options(&self) -> IntegrateOptions {
        IntegrateOptions {
            rtol: self.rtol,
            atol: self.atol,
            ..IntegrateOptions::default()
        }
    }

    pub fn shoot_options(&self) -> ShootOptions {
        let d = ShootOptions::default();
        ShootOptions {
            r_max: self.r_max,
            r_max_cap: self.r_max_cap,
            integrate: IntegrateOptions {
                stop_at_crossing: true,
                ..self.integrate_options()
            },
            ..d
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    /// N ≤ 2.
    NoEntireSolution,
    /// N = 3, 4: every entire solution is unstable but stable at infinity.
    UnstableStableAtInfinity,
    /// 5 ≤ N < N_α: stable exactly for β ≤ β₁.
    Beta1,
    /// N ≥ N_α: every entire solution is stable.
    AllStable,
}

pub fn regime(dim: u32, alpha: f64) -> Result<Regime> {
    Ok(match dim {
        0..=2 => Regime::NoEntireSolution,
        3 | 4 => Regime::UnstableStableAtInfinity,
        _ if (dim as f64) < n_alpha(alpha)? => Regime::Beta1,
        _ => Regime::AllStable,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BetaSample {
    /// Offset below β₀; 0 stands for the global side of the final bracket.
    pub offset: f64,
    pub beta: f64,
    pub classification: StabilityClass,
    /// Negative form value found on a tested domain.
    pub unstable: bool,
    pub min_eig: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum AsymDiagnostics {
    N3 { a1: f64, a2: f64, a3: f64, agreement: f64 },
    N4 { c0: f64, c0_expected: f64, ct: f64 },
    Limit { sup_last_decade: f64, trusted_radius: f64, max_w: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Timestamps {
    pub started_unix_ms: u64,
    pub finished_unix_ms: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRecord {
    pub dim: u32,
    pub alpha: f64,
    pub regime: Option<Regime>,
    pub n_alpha: Option<f64>,
    pub beta0: Option<f64>,
    pub beta0_bracket: Option<(f64, f64)>,
    pub beta1: Option<f64>,
    pub beta1_bracket: Option<(f64, f64)>,
    pub samples: Vec<BetaSample>,
    pub asymptotics: Option<AsymDiagnostics>,
    pub timestamps: Option<Timestamps>,
    pub settings_hash: String,
    pub error: Option<String>,
}

impl SweepRecord {
    fn key(&self) -> (u32, u64) {
        (self.dim, self.alpha.to_bits())
    }
}

/// Offsets below β₀ at which stability is sampled.
pub const SAMPLE_OFFSETS: [f64; 3] = [0.0, 0.5, 2.0];

fn now_ms() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_millis() as u64)
}

/// Trusted-range tolerance for the separatrix in diagnostics.
const TRUST_EPS: f64 = 1e-3;

fn compute_cell(dim: u32, alpha: f64, cfg: &RunConfig) -> Result<SweepRecord> {
    let template = ProblemParams::with_beta(dim, alpha, 0.0)?;
    let regime = regime(dim, alpha)?;
    let na = n_alpha(alpha)?;
    let mut rec = SweepRecord {
        dim,
        alpha,
        regime: Some(regime),
        n_alpha: Some(na),
        beta0: None,
        beta0_bracket: None,
        beta1: None,
        beta1_bracket: None,
        samples: Vec::new(),
        asymptotics: None,
        timestamps: None,
        settings_hash: cfg.settings_hash(),
        error: None,
    };
    let shot = find_beta0(&template, Some(cfg.tol_beta.unwrap_or(f64::MIN_POSITIVE)), &cfg.shoot_options())?;
    rec.beta0 = Some(shot.beta0);
    rec.beta0_bracket = Some(shot.bracket);

    let stab = StabilityOptions {
        grid: cfg.grid,
        domain: None,
        exec: Execution::Sequential,
    };
    for off in SAMPLE_OFFSETS {
        let beta = shot.bracket.0 - off;
        let prof = integrate(&template.at_beta(beta), cfg.r_max, &cfg.integrate_options())?;
        let rep = classify_stability(&prof, &stab)?;
        rec.samples.push(BetaSample {
            offset: off,
            beta,
            classification: rep.classification,
            unstable: rep.unstable(),
            min_eig: rep.min_eig.lambda,
        });
    }

    if regime == Regime::Beta1 {
        let opts = Beta1Options {
            tol: cfg.beta1_tol,
            grid: cfg.grid,
            r_max: cfg.r_max,
            integrate: cfg.integrate_options(),
            exec: Execution::Sequential,
        };
        let b1 = find_beta1(&template, shot.bracket.0, &opts)?;
        rec.beta1 = Some(b1.beta1);
        rec.beta1_bracket = Some(b1.bracket);
    }

    let sep = Separatrix::from_bracket(&template, shot.bracket, cfg.asym_r_max, &cfg.integrate_options(), Execution::Sequential)?;
    rec.asymptotics = Some(match dim {
        3 => {
            let a = coeffs_n3(&sep.low)?;
            AsymDiagnostics::N3 {
                a1: a.a1,
                a2: a.a2,
                a3: a.a3,
                agreement: a.agreement(),
            }
        }
        4 => {
            let m = mass_n4(&sep.low, 1e3)?;
            AsymDiagnostics::N4 {
                c0: m.c0,
                c0_expected: m.c0_expected,
                ct: m.ct,
            }
        }
        _ => {
            let trusted = sep.trusted(TRUST_EPS);
            let lim = check_limit_n5(&to_log(&trusted)?)?;
            AsymDiagnostics::Limit {
                sup_last_decade: lim.sup_last_decade,
                trusted_radius: trusted.r_end(),
                max_w: lim.max_w,
            }
        }
    });
    Ok(rec)
}

/// One record for `(dim, alpha)`; failures are recorded in `error`.
pub fn run_cell(dim: u32, alpha: f64, cfg: &RunConfig) -> SweepRecord {
    let started = now_ms();
    let mut rec = match compute_cell(dim, alpha, cfg) {
        Ok(r) => r,
        Err(e) => SweepRecord {
            dim,
            alpha,
            regime: regime(dim, alpha).ok(),
            n_alpha: n_alpha(alpha).ok(),
            beta0: None,
            beta0_bracket: None,
            beta1: None,
            beta1_bracket: None,
            samples: Vec::new(),
            asymptotics: None,
            timestamps: None,
            settings_hash: cfg.settings_hash(),
            error: Some(e.to_string()),
        },
    };
    if !cfg.fixture {
        rec.timestamps = Some(Timestamps {
            started_unix_ms: started,
            finished_unix_ms: now_ms(),
        });
    }
    rec
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub settings_hash: String,
    pub settings: String,
}

fn load_records(path: &Path) -> Result<Vec<SweepRecord>> {
    if !path.exists() {
        return Ok(Vec::new());
    }
    let text = fs::read_to_string(path)?;
    // A torn final line from an interrupted run is ignored and recomputed.
    Ok(text
        .lines()
        .filter_map(|l| serde_json::from_str::<SweepRecord>(l).ok())
        .collect())
}

/// Runs every cell not yet present in `store` and returns the full table sorted by (N, α).
pub fn run_sweep(cells: &[(u32, f64)], cfg: &RunConfig, store: Option<&Path>, exec: Execution) -> Result<Vec<SweepRecord>> {
    cfg.validate()?;
    let hash = cfg.settings_hash();
    let mut done: BTreeMap<(u32, u64), SweepRecord> = BTreeMap::new();
    let mut writer = None;
    if let Some(dir) = store {
        fs::create_dir_all(dir)?;
        let manifest_path = dir.join("manifest.json");
        if manifest_path.exists() {
            let m: Manifest = serde_json::from_str(&fs::read_to_string(&manifest_path)?)?;
            if m.settings_hash != hash {
                return Err(Error::pre(format!(
                    "store {} was written with different settings ({})",
                    dir.display(),
                    m.settings_hash
                )));
            }
        } else {
            crate::io::write_json(
                &Manifest {
                    settings_hash: hash.clone(),
                    settings: cfg.canonical(),
                },
                &manifest_path,
            )?;
        }
        let records = dir.join("records.jsonl");
        for r in load_records(&records)? {
            done.insert(r.key(), r);
        }
        // Drop a torn last line so appends start on a fresh line.
        let kept: String = done.values().map(|r| serde_json::to_string(r).map(|s| s + "\n")).collect::<std::result::Result<_, _>>()?;
        fs::write(&records, kept)?;
        writer = Some(Mutex::new(OpenOptions::new().append(true).open(&records)?));
    }

    let mut todo: Vec<(u32, f64)> = Vec::new();
    for &(d, a) in cells {
        if !done.contains_key(&(d, a.to_bits())) && !todo.iter().any(|&(d2, a2)| d2 == d && a2.to_bits() == a.to_bits()) {
            todo.push((d, a));
        }
    }
    let fresh = par::map(exec, &todo, |&(d, a)| -> Result<SweepRecord> {
        let rec = run_cell(d, a, cfg);
        if let Some(w) = &writer {
            let line = serde_json::to_string(&rec)? + "\n";
            let mut f = w.lock().expect("record writer poisoned");
            f.write_all(line.as_bytes())?;
            f.flush()?;
        }
        Ok(rec)
    });
    for r in fresh {
        let r = r?;
        done.insert(r.key(), r);
    }

    let mut table: Vec<SweepRecord> = cells
        .iter()
        .filter_map(|&(d, a)| done.get(&(d, a.to_bits())).cloned())
        .collect();
    table.sort_by(|x, y| x.dim.cmp(&y.dim).then(x.alpha.total_cmp(&y.alpha)));
    table.dedup_by(|x, y| x.key() == y.key());
    if let Some(dir) = store {
        crate::io::write_json(&table, &dir.join("table.json"))?;
    }
    Ok(table)
}
