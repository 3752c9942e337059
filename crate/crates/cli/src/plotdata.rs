//! The `plotdata` subcommand: profile CSVs to whitespace-separated columns.
//!
//! Writes `energy.dat`, `abs_error.dat` (log10 of the absolute error) and
//! `rel_error.dat`. Column 1 is the meta value, then one column per input
//! file. An `exact.csv` passed with `--exact` adds an exact column to
//! `energy.dat` right after the meta value. Files holding several seeds are
//! reduced to the lowest energy per point.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use metavqe::EnergyProfile;

use crate::Failure;

/// Absolute errors are floored here before taking the logarithm.
const LOG_FLOOR: f64 = 1e-16;

struct Series {
    label: String,
    grid: Vec<f64>,
    energy: Vec<f64>,
    abs_err: Vec<f64>,
    rel_err: Vec<f64>,
}

fn load_profile(path: &Path) -> Result<Series, Failure> {
    let text = fs::read_to_string(path).map_err(|e| Failure::Usage(format!("cannot read {}: {e}", path.display())))?;
    let profile =
        EnergyProfile::from_csv(&text).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?;
    if profile.rows.is_empty() {
        return Err(Failure::Usage(format!("{}: no rows", path.display())));
    }
    let mut best: BTreeMap<u64, usize> = BTreeMap::new();
    let mut order = Vec::new();
    for (i, r) in profile.rows.iter().enumerate() {
        let key = r.meta_value.to_bits();
        match best.get(&key) {
            None => {
                best.insert(key, i);
                order.push(key);
            }
            Some(&j) if r.energy < profile.rows[j].energy => {
                best.insert(key, i);
            }
            Some(_) => {}
        }
    }
    let rows: Vec<_> = order.iter().map(|k| &profile.rows[best[k]]).collect();
    let mut labels: Vec<&str> = profile.rows.iter().map(|r| r.algorithm.as_str()).collect();
    labels.dedup();
    Ok(Series {
        label: labels.join("+"),
        grid: rows.iter().map(|r| r.meta_value).collect(),
        energy: rows.iter().map(|r| r.energy).collect(),
        abs_err: rows.iter().map(|r| r.abs_err).collect(),
        rel_err: rows.iter().map(|r| r.rel_err).collect(),
    })
}

fn load_exact(path: &Path) -> Result<(Vec<f64>, Vec<f64>), Failure> {
    let bad = |m: String| Failure::Usage(format!("{}: {m}", path.display()));
    let text = fs::read_to_string(path).map_err(|e| bad(e.to_string()))?;
    let mut lines = text.lines();
    if lines.next().map(str::trim) != Some("meta_value,exact") {
        return Err(bad("expected header `meta_value,exact`".into()));
    }
    let (mut grid, mut exact) = (Vec::new(), Vec::new());
    for (k, line) in lines.enumerate().filter(|(_, l)| !l.trim().is_empty()) {
        let (a, b) = line
            .split_once(',')
            .ok_or_else(|| bad(format!("line {}: expected two fields", k + 2)))?;
        let parse = |s: &str| s.trim().parse::<f64>().map_err(|_| bad(format!("line {}: bad number `{s}`", k + 2)));
        grid.push(parse(a)?);
        exact.push(parse(b)?);
    }
    Ok((grid, exact))
}

fn table(header: &[String], grid: &[f64], columns: &[&[f64]], map: impl Fn(f64) -> f64) -> String {
    let mut out = format!("# {}\n", header.join(" "));
    for (i, x) in grid.iter().enumerate() {
        out.push_str(&format!("{x:.11e}"));
        for c in columns {
            out.push_str(&format!(" {:.11e}", map(c[i])));
        }
        out.push('\n');
    }
    out
}

pub fn cmd_plotdata(profiles: &[PathBuf], exact: Option<&Path>, dir: &Path) -> Result<Vec<PathBuf>, Failure> {
    if profiles.is_empty() {
        return Err(Failure::Usage("plotdata needs at least one profile CSV".into()));
    }
    let series = profiles.iter().map(|p| load_profile(p)).collect::<Result<Vec<_>, _>>()?;
    let grid = series[0].grid.clone();
    for (s, path) in series.iter().zip(profiles).skip(1) {
        if s.grid != grid {
            return Err(Failure::Usage(format!(
                "{}: meta-value grid differs from {}",
                path.display(),
                profiles[0].display()
            )));
        }
    }
    let exact = match exact {
        Some(path) => {
            let (g, e) = load_exact(path)?;
            if g != grid {
                return Err(Failure::Usage(format!(
                    "{}: meta-value grid differs from {}",
                    path.display(),
                    profiles[0].display()
                )));
            }
            Some(e)
        }
        None => None,
    };

    let labels: Vec<String> = series.iter().map(|s| s.label.clone()).collect();
    let head = |extra: &[&str]| -> Vec<String> {
        let mut h = vec!["meta_value".to_string()];
        h.extend(extra.iter().map(|s| s.to_string()));
        h.extend(labels.iter().cloned());
        h
    };
    let mut energy_cols: Vec<&[f64]> = Vec::new();
    if let Some(e) = &exact {
        energy_cols.push(e);
    }
    energy_cols.extend(series.iter().map(|s| s.energy.as_slice()));
    let energy_head = head(if exact.is_some() { &["exact"] } else { &[] });
    let abs: Vec<&[f64]> = series.iter().map(|s| s.abs_err.as_slice()).collect();
    let rel: Vec<&[f64]> = series.iter().map(|s| s.rel_err.as_slice()).collect();

    fs::create_dir_all(dir).map_err(|e| Failure::Usage(format!("cannot create {}: {e}", dir.display())))?;
    let files = [
        ("energy.dat", table(&energy_head, &grid, &energy_cols, |v| v)),
        ("abs_error.dat", table(&head(&[]), &grid, &abs, |v| v.max(LOG_FLOOR).log10())),
        ("rel_error.dat", table(&head(&[]), &grid, &rel, |v| v)),
    ];
    let mut written = Vec::new();
    for (name, body) in files {
        let path = dir.join(name);
        fs::write(&path, body).map_err(|e| Failure::Runtime(format!("cannot write {}: {e}", path.display())))?;
        written.push(path);
    }
    Ok(written)
}
