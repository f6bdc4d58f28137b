//! Directory export of a solve: one CSV per output time plus a JSON manifest.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::Result;

use super::{SolveResult, SolveStatus};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub times: Vec<f64>,
    pub files: Vec<String>,
    pub shape: (usize, usize),
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub status: SolveStatus,
    /// Free-form run parameters supplied by the caller.
    pub parameters: serde_json::Value,
}

/// Writes `state_NNNN.csv` files and `manifest.json` into `dir`.
pub fn write_solve(
    dir: &Path,
    result: &SolveResult,
    parameters: serde_json::Value,
) -> Result<Manifest> {
    fs::create_dir_all(dir)?;
    let mut files = Vec::with_capacity(result.states.len());
    for (k, st) in result.states.iter().enumerate() {
        let name = format!("state_{k:04}.csv");
        let mut w = csv::Writer::from_path(dir.join(&name))?;
        w.write_record(["i", "j", "x", "y", "h", "c", "f", "p", "u_bar", "v_bar"])?;
        let (rows, cols) = st.shape;
        for i in 0..rows {
            for j in 0..cols {
                let idx = i * cols + j;
                let y = result.y.get(i).copied().unwrap_or(0.0);
                w.write_record(&[
                    i.to_string(),
                    j.to_string(),
                    result.x[j].to_string(),
                    y.to_string(),
                    st.h[idx].to_string(),
                    st.c[idx].to_string(),
                    st.f[idx].to_string(),
                    st.p[idx].to_string(),
                    st.u_bar[idx].to_string(),
                    st.v_bar[idx].to_string(),
                ])?;
            }
        }
        w.flush()?;
        files.push(name);
    }
    let manifest = Manifest {
        times: result.times.clone(),
        files,
        shape: result.states.first().map(|s| s.shape).unwrap_or((0, 0)),
        x: result.x.clone(),
        y: result.y.clone(),
        status: result.status,
        parameters,
    };
    fs::write(
        dir.join("manifest.json"),
        serde_json::to_string_pretty(&manifest)?,
    )?;
    Ok(manifest)
}
