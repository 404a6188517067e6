//! CSV emission. Every file opens with `#` lines carrying the effective
//! configuration, then a header row.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use hyperlock_core::config::{emit_config, fmt_f64, SystemConfig};
use hyperlock_core::dynamics::Orbit;
use sha2::{Digest, Sha256};

use crate::error::{HarnessError, Result};

/// Ordered `key = value` pairs written as `#` metadata.
pub type Metadata = Vec<(String, String)>;

/// Number formatting used in every output: 17 significant digits.
pub fn num(v: f64) -> String {
    fmt_f64(v)
}

/// SHA-256 of the canonical configuration text, hex encoded.
pub fn config_hash(c: &SystemConfig) -> String {
    let digest = Sha256::digest(emit_config(c).as_bytes());
    digest.iter().fold(String::with_capacity(64), |mut s, b| {
        let _ = write!(s, "{b:02x}");
        s
    })
}

/// Metadata lines describing a session, one per configuration key.
pub fn config_metadata(prefix: &str, c: &SystemConfig) -> Metadata {
    let mut m: Metadata = emit_config(c)
        .lines()
        .filter(|l| !l.starts_with('#') && !l.trim().is_empty())
        .filter_map(|l| l.split_once('='))
        .map(|(k, v)| (format!("{prefix}{}", k.trim()), v.trim().to_string()))
        .collect();
    m.push((format!("{prefix}config_hash"), config_hash(c)));
    m
}

pub fn render_csv(meta: &[(String, String)], header: &[&str], rows: &[Vec<String>]) -> String {
    let mut out = String::new();
    for (k, v) in meta {
        let _ = writeln!(out, "# {k} = {v}");
    }
    out.push_str(&header.join(","));
    out.push('\n');
    for r in rows {
        out.push_str(&r.join(","));
        out.push('\n');
    }
    out
}

pub fn emit_csv(
    path: &Path,
    meta: &[(String, String)],
    header: &[&str],
    rows: &[Vec<String>],
) -> Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(|e| HarnessError::io(dir, e))?;
    }
    fs::write(path, render_csv(meta, header, rows)).map_err(|e| HarnessError::io(path, e))
}

/// Recorded channels of an orbit with a leading `step` column.
pub fn orbit_rows(orbit: &Orbit) -> (Vec<&'static str>, Vec<Vec<String>>) {
    let mut header = vec!["step"];
    header.extend(orbit.vars().map(|v| v.name()));
    let cols: Vec<&[f64]> = orbit.vars().filter_map(|v| orbit.get(v)).collect();
    let rows = (0..orbit.len())
        .map(|i| {
            let mut r = vec![i.to_string()];
            r.extend(cols.iter().map(|c| num(c[i])));
            r
        })
        .collect();
    (header, rows)
}

/// Decade histogram: bin `k` holds errors with `round(log10 e) = k`, clamped to
/// `[lo, hi]`. Exact zeros land in `lo`.
pub fn decade_histogram(errors: &[f64], lo: i32, hi: i32) -> Vec<(i32, usize)> {
    let mut counts: Vec<(i32, usize)> = (lo..=hi).map(|k| (k, 0)).collect();
    for &e in errors.iter().filter(|e| e.is_finite()) {
        let k = if e > 0.0 {
            (e.log10().round() as i32).clamp(lo, hi)
        } else {
            lo
        };
        counts[(k - lo) as usize].1 += 1;
    }
    counts
}
