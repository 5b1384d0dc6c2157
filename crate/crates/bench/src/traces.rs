//! Per-run convergence traces as CSV, one file per (solver, trial).

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::experiment::RunOutcome;
use crate::BenchError;

/// One trace row. Optional columns are written empty when unavailable:
/// `sin_theta` and `f_minus_fstar` without ground truth, and
/// `neg_zeta_over_omega` for other methods and degenerate steps.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub k: usize,
    pub sin_theta: Option<f64>,
    pub f_minus_fstar: Option<f64>,
    pub rayleigh: f64,
    pub residual: f64,
    pub matvecs: u64,
    pub seconds: f64,
    pub neg_zeta_over_omega: Option<f64>,
}

pub fn trace_file_name(solver: &str, trial: usize) -> String {
    format!("{solver}_trial{trial:04}.csv")
}

/// Writes a trace for every run that produced one; returns the paths.
pub fn emit_traces(runs: &[RunOutcome], dir: &Path) -> Result<Vec<PathBuf>, BenchError> {
    std::fs::create_dir_all(dir).map_err(|e| BenchError::io(dir, e))?;
    let mut paths = Vec::new();
    for run in runs {
        let Some(trace) = &run.trace else { continue };
        let path = dir.join(trace_file_name(&run.record.solver, run.record.trial));
        let mut w = csv::Writer::from_path(&path)?;
        for rec in trace.records() {
            w.serialize(TraceRow {
                k: rec.k,
                sin_theta: rec.sin_theta,
                f_minus_fstar: run.f_star.map(|fs| rec.f_value - fs),
                rayleigh: rec.rayleigh,
                residual: rec.residual,
                matvecs: rec.matvecs,
                seconds: rec.seconds,
                neg_zeta_over_omega: rec.coefficients.and_then(|c| c.neg_zeta_over_omega()),
            })?;
        }
        w.flush().map_err(|e| BenchError::io(&path, e))?;
        paths.push(path);
    }
    Ok(paths)
}

pub fn read_trace(path: &Path) -> Result<Vec<TraceRow>, BenchError> {
    let mut r = csv::Reader::from_path(path)?;
    Ok(r.deserialize().collect::<Result<_, _>>()?)
}
