//! Flat-file outputs: one CSV per curve, an optional rate table and a JSON
//! metadata sidecar.
//!
//! Files for scenario `<id>`:
//! - `<id>.csv`: primary curve
//! - `<id>.<label>.csv`: every other curve
//! - `<id>.rates.csv`: sweep table, when the scenario sweeps
//! - `<id>.meta.json`: parameters, settings, fits, metrics, wall time

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use super::config::ScenarioConfig;
use super::fit::FitResult;
use super::scenarios::{Curve, ScenarioOutput, SweepRow};
use crate::error::{Error, Result};
use crate::models::{SystemParams, ValidityReport};
use crate::observables::ObservableSet;

pub const CSV_HEADER: &str =
    "t,fidelity_raw,fidelity_compensated,phase,P_E0,P_E1,P_E2,P_E3,n_1,n_2,n_3,purity";

/// 17 significant digits; parses back to the identical `f64`.
pub fn format_float(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn csv_row(row: &ObservableSet) -> String {
    let mut cols = vec![
        row.t,
        row.fidelity_raw,
        row.fidelity_compensated,
        row.phase,
    ];
    cols.extend(row.populations);
    let mut line: Vec<String> = cols.into_iter().map(format_float).collect();
    for j in 0..3 {
        line.push(row.photon_numbers.get(j).map(|n| format_float(*n)).unwrap_or_default());
    }
    line.push(format_float(row.purity));
    line.join(",")
}

pub fn curve_csv(rows: &[ObservableSet]) -> String {
    let mut s = String::with_capacity(256 * (rows.len() + 1));
    s.push_str(CSV_HEADER);
    s.push('\n');
    for r in rows {
        s.push_str(&csv_row(r));
        s.push('\n');
    }
    s
}

fn opt(x: Option<f64>) -> String {
    x.map(format_float).unwrap_or_default()
}

pub fn rates_csv(rows: &[SweepRow]) -> String {
    let key = rows
        .first()
        .map(|r| r.key.rsplit('.').next().unwrap_or(&r.key).to_string())
        .unwrap_or_else(|| "value".into());
    let mut s = format!(
        "{key},gamma_c_predicted,gamma_c_fitted,fit_rms,fidelity_at_mark,fidelity_final,error\n"
    );
    for r in rows {
        let error = r.error.as_deref().unwrap_or("").replace([',', '\n'], ";");
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{}",
            format_float(r.value),
            opt(r.gamma_c_predicted),
            opt(r.fitted_rate()),
            opt(r.fit.as_ref().map(|f| f.rms)),
            opt(r.fidelity_at_mark),
            opt(r.fidelity_final),
            error
        );
    }
    s
}

#[derive(Serialize)]
struct Metadata<'a> {
    scenario: &'a str,
    anchor: &'static str,
    code_version: &'static str,
    config: &'a ScenarioConfig,
    params: &'a SystemParams,
    validity: &'a ValidityReport,
    warnings: &'a [String],
    curves: BTreeMap<&'a str, CurveMeta<'a>>,
    fits: &'a BTreeMap<String, FitResult>,
    metrics: &'a BTreeMap<String, f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    rates: Option<&'a [SweepRow]>,
    wall_time_s: f64,
}

#[derive(Serialize)]
struct CurveMeta<'a> {
    file: String,
    #[serde(flatten)]
    curve: &'a Curve,
}

/// File name of a curve: the first curve is the scenario's primary output.
pub fn curve_file_name(id: &str, index: usize, curve: &Curve) -> String {
    if index == 0 {
        format!("{id}.csv")
    } else {
        format!("{id}.{}.csv", curve.label)
    }
}

fn write(path: PathBuf, contents: &str) -> Result<PathBuf> {
    fs::write(&path, contents).map_err(|source| Error::Io {
        path: path.clone(),
        source,
    })?;
    Ok(path)
}

/// Writes all files of `out` into `dir` (created if missing) and returns
/// their paths, metadata last.
pub fn write_output(out: &ScenarioOutput, dir: &Path) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir).map_err(|source| Error::Io {
        path: dir.to_path_buf(),
        source,
    })?;
    let id = out.scenario().name();
    let mut written = Vec::new();
    let mut curves = BTreeMap::new();
    for (i, c) in out.curves.iter().enumerate() {
        let file = curve_file_name(id, i, c);
        written.push(write(dir.join(&file), &curve_csv(&c.rows))?);
        curves.insert(c.label.as_str(), CurveMeta { file, curve: c });
    }
    if let Some(rows) = &out.rates {
        written.push(write(dir.join(format!("{id}.rates.csv")), &rates_csv(rows))?);
    }
    let meta = Metadata {
        scenario: id,
        anchor: out.scenario().anchor(),
        code_version: env!("CARGO_PKG_VERSION"),
        config: &out.config,
        params: &out.params,
        validity: &out.validity,
        warnings: &out.warnings,
        curves,
        fits: &out.fits,
        metrics: &out.metrics,
        rates: out.rates.as_deref(),
        wall_time_s: out.wall_time_s,
    };
    let json = serde_json::to_string_pretty(&meta)
        .map_err(|e| Error::Config(format!("metadata serialization: {e}")))?;
    written.push(write(dir.join(format!("{id}.meta.json")), &json)?);
    Ok(written)
}

/// Reads one named column of a curve CSV, skipping empty cells.
pub fn read_column(text: &str, column: &str) -> Result<Vec<f64>> {
    let mut lines = text.lines();
    let header = lines.next().ok_or_else(|| Error::Config("empty CSV".into()))?;
    let idx = header
        .split(',')
        .position(|h| h.trim() == column)
        .ok_or_else(|| Error::Config(format!("CSV has no column '{column}'")))?;
    let mut out = Vec::new();
    for (n, line) in lines.enumerate().filter(|(_, l)| !l.trim().is_empty()) {
        let cell = line.split(',').nth(idx).unwrap_or("").trim();
        if cell.is_empty() {
            continue;
        }
        out.push(cell.parse().map_err(|e| {
            Error::Config(format!("row {}: cannot parse '{cell}' in '{column}': {e}", n + 2))
        })?);
    }
    Ok(out)
}
