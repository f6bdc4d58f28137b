//! Tabulation of several fits.

use std::path::Path;

use serde::Serialize;

use crate::error::Result;

use super::fit::FitResult;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReportRow {
    pub case: String,
    pub layout: String,
    pub algorithm: String,
    pub iterations: usize,
    pub objective: f64,
    pub final_rel_err: Option<f64>,
    pub max_rel_err: Option<f64>,
    /// (name, value) in layout order.
    pub parameters: Vec<(String, f64)>,
}

/// Columns every row fills; parameter columns follow.
pub const COLUMNS: [&str; 7] = [
    "case",
    "layout",
    "algorithm",
    "iterations",
    "objective",
    "final_rel_err",
    "max_rel_err",
];

pub fn report_row(case: &str, fit: &FitResult) -> ReportRow {
    let layout = serde_json::to_value(fit.layout)
        .ok()
        .and_then(|v| v.get("layout").and_then(|s| s.as_str()).map(str::to_string))
        .unwrap_or_default();
    ReportRow {
        case: case.to_string(),
        layout,
        algorithm: fit.algorithm.name().to_string(),
        iterations: fit.iterations,
        objective: fit.objective,
        final_rel_err: fit.final_rel_err(),
        max_rel_err: fit.rel_err.iter().flatten().copied().reduce(f64::max),
        parameters: fit
            .parameter_names
            .iter()
            .cloned()
            .zip(fit.parameters.iter().copied())
            .collect(),
    }
}

/// Union of parameter names in order of first appearance.
pub fn parameter_columns(rows: &[ReportRow]) -> Vec<String> {
    let mut names: Vec<String> = Vec::new();
    for r in rows {
        for (n, _) in &r.parameters {
            if !names.contains(n) {
                names.push(n.clone());
            }
        }
    }
    names
}

/// One line per fit; parameters a layout lacks are left blank.
pub fn write_report_csv(path: &Path, rows: &[ReportRow]) -> Result<()> {
    let params = parameter_columns(rows);
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(
        COLUMNS
            .iter()
            .map(|s| s.to_string())
            .chain(params.iter().cloned()),
    )?;
    for r in rows {
        let mut rec = vec![
            r.case.clone(),
            r.layout.clone(),
            r.algorithm.clone(),
            r.iterations.to_string(),
            format!("{:e}", r.objective),
            r.final_rel_err.map(|v| v.to_string()).unwrap_or_default(),
            r.max_rel_err.map(|v| v.to_string()).unwrap_or_default(),
        ];
        for name in &params {
            let v = r.parameters.iter().find(|(n, _)| n == name);
            rec.push(v.map(|(_, v)| v.to_string()).unwrap_or_default());
        }
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

/// Fixed-width text rendering of the rows.
pub fn format_table(rows: &[ReportRow]) -> String {
    let pct = |v: Option<f64>| {
        v.map(|x| format!("{:.3}%", 100.0 * x))
            .unwrap_or_else(|| "-".into())
    };
    let params = parameter_columns(rows);
    let mut out = format!(
        "{:<16} {:<12} {:<12} {:>6} {:>12} {:>10} {:>10}",
        "case", "layout", "algorithm", "iters", "objective", "final", "max"
    );
    for p in &params {
        out.push_str(&format!(" {p:>10}"));
    }
    out.push('\n');
    for r in rows {
        out.push_str(&format!(
            "{:<16} {:<12} {:<12} {:>6} {:>12.4e} {:>10} {:>10}",
            r.case,
            r.layout,
            r.algorithm,
            r.iterations,
            r.objective,
            pct(r.final_rel_err),
            pct(r.max_rel_err),
        ));
        for name in &params {
            match r.parameters.iter().find(|(n, _)| n == name) {
                Some((_, v)) => out.push_str(&format!(" {v:>10.5}")),
                None => out.push_str(&format!(" {:>10}", "")),
            }
        }
        out.push('\n');
    }
    out
}
