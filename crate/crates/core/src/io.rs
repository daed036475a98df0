//! Profile persistence: CSV samples plus a JSON sidecar, and small CSV exports.
//!
//! CSV values use 17 significant digits; JSON numbers use the shortest
//! representation that round-trips to the same `f64`.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::radial::{ProblemParams, ProfileStats, RadialProfile, RadialState, Termination};

/// `{:.16e}`: 17 significant digits, enough to round-trip any `f64`.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

/// Metadata written next to the CSV samples.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProfileMeta {
    pub params: ProblemParams,
    pub termination: Termination,
    pub crossing: Option<f64>,
    pub stats: ProfileStats,
    pub samples: usize,
}

impl ProfileMeta {
    pub fn of(profile: &RadialProfile) -> Self {
        Self {
            params: profile.params,
            termination: profile.termination,
            crossing: profile.crossing,
            stats: profile.stats,
            samples: profile.samples.len(),
        }
    }
}

pub fn profile_csv(profile: &RadialProfile) -> String {
    let mut out = String::from("r,u,du,lap,dlap\n");
    for s in &profile.samples {
        let _ = writeln!(
            out,
            "{},{},{},{},{}",
            fmt_f64(s.r),
            fmt_f64(s.u),
            fmt_f64(s.p),
            fmt_f64(s.v),
            fmt_f64(s.q)
        );
    }
    out
}

pub fn parse_profile_csv(text: &str) -> Result<Vec<RadialState>> {
    let mut lines = text.lines();
    match lines.next() {
        Some(h) if h.trim() == "r,u,du,lap,dlap" => {}
        other => return Err(Error::Parse(format!("unexpected CSV header {other:?}"))),
    }
    lines
        .filter(|l| !l.trim().is_empty())
        .enumerate()
        .map(|(i, l)| {
            let v: Vec<f64> = l
                .split(',')
                .map(|x| x.trim().parse::<f64>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| Error::Parse(format!("line {}: {e}", i + 2)))?;
            if v.len() != 5 {
                return Err(Error::Parse(format!("line {}: expected 5 columns", i + 2)));
            }
            Ok(RadialState {
                r: v[0],
                u: v[1],
                p: v[2],
                v: v[3],
                q: v[4],
            })
        })
        .collect()
}

/// `<stem>.csv` and `<stem>.json`.
pub fn profile_paths(stem: &Path) -> (PathBuf, PathBuf) {
    (stem.with_extension("csv"), stem.with_extension("json"))
}

pub fn write_profile(profile: &RadialProfile, stem: &Path) -> Result<()> {
    let (csv, json) = profile_paths(stem);
    if let Some(dir) = csv.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    fs::write(csv, profile_csv(profile))?;
    fs::write(json, serde_json::to_string_pretty(&ProfileMeta::of(profile))?)?;
    Ok(())
}

pub fn read_profile(stem: &Path) -> Result<RadialProfile> {
    let (csv, json) = profile_paths(stem);
    let meta: ProfileMeta = serde_json::from_str(&fs::read_to_string(json)?)?;
    let samples = parse_profile_csv(&fs::read_to_string(csv)?)?;
    if samples.len() != meta.samples {
        return Err(Error::Parse(format!(
            "sidecar announces {} samples, CSV has {}",
            meta.samples,
            samples.len()
        )));
    }
    Ok(RadialProfile {
        params: meta.params,
        samples,
        termination: meta.termination,
        crossing: meta.crossing,
        stats: meta.stats,
    })
}

/// CSV with a header and rows of floats.
pub fn table_csv(header: &[&str], rows: impl IntoIterator<Item = Vec<f64>>) -> String {
    let mut out = header.join(",");
    out.push('\n');
    for row in rows {
        let cells: Vec<String> = row.into_iter().map(fmt_f64).collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}

pub fn write_json<T: Serialize>(value: &T, path: &Path) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    fs::write(path, serde_json::to_string_pretty(value)? + "\n")?;
    Ok(())
}
