//! Report bundle and the files written for it.

use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use constraint_morse::bench::{AppendixReport, BenchRow, BenchTable, OrthoReport};
use constraint_morse::spectral::{ClassificationReport, ProbeRecord};
use constraint_morse::IdentityResiduals;
use serde::{Deserialize, Serialize};

use crate::config::{Format, RunConfig};

pub const SCHEMA: u32 = 1;
pub const VERSION: &str = concat!("constraint-morse ", env!("CARGO_PKG_VERSION"));

/// Column order of every row table; the last numeric column keeps its
/// historical name.
pub const ROW_COLUMNS: [&str; 10] = [
    "k",
    "E_k",
    "index_complex",
    "index_real",
    "zero_modes_gauge",
    "zero_modes_degenerate",
    "lambda_min",
    "lambda_max",
    "eq25_residual",
    "verdict",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateReport {
    pub k: usize,
    pub energy: f64,
    pub row: BenchRow,
    pub classification: Option<ClassificationReport>,
    pub identities: Option<IdentityResiduals>,
    pub probe: Option<ProbeRecord>,
    pub phase_increment: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DerivativeRecord {
    pub trial: usize,
    pub gradient_deviation: Option<f64>,
    pub hessian_deviation: Option<f64>,
    pub gradient_contraction: Option<f64>,
    pub hessian_contraction: Option<f64>,
    pub passed: bool,
    pub failure: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SliceRecord {
    pub k: usize,
    /// `negative`, `zero` or `positive`.
    pub label: String,
    pub lambda: f64,
    pub file: String,
    pub h: Vec<f64>,
    pub actual: Vec<f64>,
    pub predicted: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportBundle {
    pub schema: u32,
    pub version: String,
    pub command: String,
    pub config: RunConfig,
    pub passed: bool,
    pub diagnostics: Vec<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub states: Vec<StateReport>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub tables: Vec<BenchTable>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub ortho: Vec<OrthoReport>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub derivative_checks: Vec<DerivativeRecord>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub appendix: Vec<AppendixReport>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub slices: Vec<SliceRecord>,
}

impl ReportBundle {
    pub fn new(command: &str, config: &RunConfig) -> Self {
        Self {
            schema: SCHEMA,
            version: VERSION.into(),
            command: command.into(),
            config: config.clone(),
            passed: true,
            diagnostics: Vec::new(),
            states: Vec::new(),
            tables: Vec::new(),
            ortho: Vec::new(),
            derivative_checks: Vec::new(),
            appendix: Vec::new(),
            slices: Vec::new(),
        }
    }

    pub fn fail(&mut self, msg: impl Into<String>) {
        self.passed = false;
        self.diagnostics.push(msg.into());
    }
}

/// Shortest representation that parses back to the same `f64`; `-0` prints as `0`.
pub fn fmt_num(v: f64) -> String {
    if v == 0.0 {
        "0".into()
    } else {
        format!("{v}")
    }
}

fn opt<T: ToString>(v: Option<T>) -> String {
    v.map(|v| v.to_string()).unwrap_or_default()
}

fn opt_num(v: Option<f64>) -> String {
    v.map(fmt_num).unwrap_or_default()
}

pub fn row_fields(row: &BenchRow) -> [String; 10] {
    [
        row.k.to_string(),
        fmt_num(row.energy),
        opt(row.index_complex),
        opt(row.index_real),
        opt(row.zero_modes_gauge),
        opt(row.zero_modes_degenerate),
        opt_num(row.lambda_min),
        opt_num(row.lambda_max),
        opt_num(row.residual),
        row.verdict.map(|v| v.label().to_string()).unwrap_or_default(),
    ]
}

pub fn rows_csv(rows: &[BenchRow]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(ROW_COLUMNS).expect("in-memory write");
    for row in rows {
        w.write_record(row_fields(row)).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8")
}

pub fn rows_json(rows: &[BenchRow]) -> String {
    let objects: Vec<serde_json::Value> = rows
        .iter()
        .map(|r| {
            serde_json::json!({
                "k": r.k,
                "E_k": r.energy,
                "index_complex": r.index_complex,
                "index_real": r.index_real,
                "zero_modes_gauge": r.zero_modes_gauge,
                "zero_modes_degenerate": r.zero_modes_degenerate,
                "lambda_min": r.lambda_min,
                "lambda_max": r.lambda_max,
                "eq25_residual": r.residual,
                "verdict": r.verdict.map(|v| v.label()),
            })
        })
        .collect();
    serde_json::to_string_pretty(&objects).expect("rows serialize") + "\n"
}

pub fn derivative_csv(records: &[DerivativeRecord]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["trial", "gradient_deviation", "hessian_deviation", "gradient_contraction", "hessian_contraction", "passed"])
        .expect("in-memory write");
    for r in records {
        w.write_record([
            r.trial.to_string(),
            opt_num(r.gradient_deviation),
            opt_num(r.hessian_deviation),
            opt_num(r.gradient_contraction),
            opt_num(r.hessian_contraction),
            r.passed.to_string(),
        ])
        .expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8")
}

pub fn appendix_csv(reports: &[AppendixReport]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record([
        "rho_bar",
        "u_choice",
        "verdict",
        "index",
        "zero_modes",
        "expected_lambda",
        "tangent_deviation",
        "slope_min",
        "slope_max",
        "sign_agreement",
        "flip_estimate",
    ])
    .expect("in-memory write");
    for r in reports {
        let slopes: Vec<f64> = r.probe.slopes().into_iter().flatten().collect();
        let lo = slopes.iter().copied().reduce(f64::min);
        let hi = slopes.iter().copied().reduce(f64::max);
        for u in &r.results {
            w.write_record([
                fmt_num(r.mean_density),
                u.u_choice.clone(),
                u.verdict.label().into(),
                u.index.to_string(),
                u.zero_modes.to_string(),
                fmt_num(r.expected_tangent_eigenvalue),
                fmt_num(u.tangent_deviation),
                opt_num(lo),
                opt_num(hi),
                fmt_num(r.brute_force.sign_agreement),
                fmt_num(r.flip_estimate),
            ])
            .expect("in-memory write");
        }
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8")
}

/// Whitespace-delimited `h  ΔA  prediction` columns, 17 significant digits.
pub fn slice_columns(s: &SliceRecord) -> String {
    let mut out = String::from("# h actual predicted\n");
    for ((h, a), p) in s.h.iter().zip(&s.actual).zip(&s.predicted) {
        out.push_str(&format!("{h:.16e} {a:.16e} {p:.16e}\n"));
    }
    out
}

fn safe_name(name: &str) -> String {
    name.chars().map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '.' { c } else { '_' }).collect()
}

/// Writes the bundle, its config echo and the row files; returns the paths written.
pub fn emit_report(bundle: &ReportBundle, format: Format, dir: &Path) -> io::Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let cmd = &bundle.command;
    let mut written = Vec::new();
    let mut put = |name: String, body: String| -> io::Result<()> {
        let path = dir.join(name);
        fs::write(&path, body)?;
        written.push(path);
        Ok(())
    };
    let json = serde_json::to_string_pretty(bundle).map_err(io::Error::other)?;
    put(format!("{cmd}.report.json"), json + "\n")?;
    put(format!("{cmd}.config.toml"), bundle.config.to_toml())?;
    // The flat CSV is always written; json adds the same rows as an object array.
    let mut put_rows = |stem: String, rows: &[BenchRow]| -> io::Result<()> {
        put(format!("{stem}.csv"), rows_csv(rows))?;
        if format == Format::Json {
            put(format!("{stem}.json"), rows_json(rows))?;
        }
        Ok(())
    };
    if !bundle.tables.is_empty() {
        for t in &bundle.tables {
            put_rows(format!("{cmd}-{}", safe_name(&t.case)), &t.rows)?;
        }
    } else if !bundle.states.is_empty() || cmd == "classify" {
        let r: Vec<BenchRow> = bundle.states.iter().map(|s| s.row.clone()).collect();
        put_rows(cmd.clone(), &r)?;
    }
    if !bundle.derivative_checks.is_empty() {
        put(format!("{cmd}.csv"), derivative_csv(&bundle.derivative_checks))?;
    }
    if !bundle.appendix.is_empty() {
        put(format!("{cmd}.csv"), appendix_csv(&bundle.appendix))?;
    }
    for s in &bundle.slices {
        put(s.file.clone(), slice_columns(s))?;
    }
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn numbers_round_trip() {
        for v in [0.1, 1.0 / 3.0, -2.5e-300, 123.30665067487412, f64::MIN_POSITIVE] {
            assert_eq!(fmt_num(v).parse::<f64>().unwrap(), v);
        }
        assert_eq!(fmt_num(-0.0), "0");
        assert_eq!(fmt_num(2.0), "2");
    }

    #[test]
    fn empty_rows_give_header_only() {
        assert_eq!(rows_csv(&[]), format!("{}\n", ROW_COLUMNS.join(",")));
        assert_eq!(rows_json(&[]).trim(), "[]");
    }
}
