//! Aggregated statistics per solver.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::config::{ExperimentConfig, MatrixSource};
use crate::experiment::RunRecord;
use crate::BenchError;

/// Mean, median and sample standard deviation (0 for a single value).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub mean: f64,
    pub median: f64,
    pub std: f64,
}

impl Summary {
    /// `None` for an empty sample.
    pub fn of(values: &[f64]) -> Option<Self> {
        if values.is_empty() {
            return None;
        }
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let mut sorted = values.to_vec();
        sorted.sort_by(f64::total_cmp);
        let m = sorted.len() / 2;
        let median = if sorted.len() % 2 == 0 {
            0.5 * (sorted[m - 1] + sorted[m])
        } else {
            sorted[m]
        };
        let std = if values.len() > 1 {
            (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
        } else {
            0.0
        };
        Some(Self { mean, median, std })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverSummary {
    pub label: String,
    pub runs: usize,
    pub converged: usize,
    /// Runs that hit `max_iter` without meeting the stop rule.
    pub not_converged: usize,
    /// Runs aborted by a solver error.
    pub breakdowns: usize,
    /// Statistics over all runs that did not break down.
    pub time: Option<Summary>,
    pub iterations: Option<Summary>,
    pub matvecs: Option<Summary>,
    /// Baseline mean time / this solver's mean time.
    pub speedup_time: Option<f64>,
    /// Baseline mean matvecs / this solver's mean matvecs.
    pub speedup_matvecs: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub source: MatrixSource,
    pub trials: usize,
    pub stop_mode: String,
    pub baseline: String,
    pub solvers: Vec<SolverSummary>,
    pub runs: Vec<RunRecord>,
}

fn ratio(base: Option<Summary>, own: Option<Summary>) -> Option<f64> {
    match (base, own) {
        (Some(b), Some(o)) if o.mean > 0.0 => Some(b.mean / o.mean),
        _ => None,
    }
}

impl RunReport {
    pub fn from_runs(cfg: &ExperimentConfig, runs: Vec<RunRecord>) -> Self {
        let mut solvers: Vec<SolverSummary> = cfg
            .solvers
            .iter()
            .map(|spec| {
                let label = spec.label();
                let mine: Vec<&RunRecord> = runs.iter().filter(|r| r.solver == label).collect();
                let ok: Vec<&RunRecord> =
                    mine.iter().copied().filter(|r| r.error.is_none()).collect();
                let pick =
                    |f: fn(&RunRecord) -> f64| -> Vec<f64> { ok.iter().map(|r| f(r)).collect() };
                SolverSummary {
                    runs: mine.len(),
                    converged: ok.iter().filter(|r| r.converged).count(),
                    not_converged: ok.iter().filter(|r| !r.converged).count(),
                    breakdowns: mine.len() - ok.len(),
                    time: Summary::of(&pick(|r| r.seconds)),
                    iterations: Summary::of(&pick(|r| r.iterations as f64)),
                    matvecs: Summary::of(&pick(|r| r.matvecs as f64)),
                    speedup_time: None,
                    speedup_matvecs: None,
                    label,
                }
            })
            .collect();

        let baseline = cfg.baseline_label();
        if let Some(base) = solvers.iter().find(|s| s.label == baseline).cloned() {
            for s in &mut solvers {
                s.speedup_time = ratio(base.time, s.time);
                s.speedup_matvecs = ratio(base.matvecs, s.matvecs);
            }
        }
        let stop_mode = match cfg.effective_stop_mode() {
            splitmerge::StopMode::OracleAngle => "oracle",
            splitmerge::StopMode::Residual => "residual",
            splitmerge::StopMode::ObjectiveGap => "objective_gap",
        };
        Self {
            source: cfg.source.clone(),
            trials: cfg.trials,
            stop_mode: stop_mode.into(),
            baseline,
            solvers,
            runs,
        }
    }

    pub fn solver(&self, label: &str) -> Option<&SolverSummary> {
        self.solvers.iter().find(|s| s.label == label)
    }

    pub fn write_json(&self, path: &Path) -> Result<(), BenchError> {
        let file = std::fs::File::create(path).map_err(|e| BenchError::io(path, e))?;
        serde_json::to_writer_pretty(std::io::BufWriter::new(file), self)?;
        Ok(())
    }

    pub fn read_json(path: &Path) -> Result<Self, BenchError> {
        let file = std::fs::File::open(path).map_err(|e| BenchError::io(path, e))?;
        Ok(serde_json::from_reader(std::io::BufReader::new(file))?)
    }

    /// One row per solver with flattened statistics.
    pub fn write_csv(&self, path: &Path) -> Result<(), BenchError> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record([
            "solver",
            "runs",
            "converged",
            "not_converged",
            "breakdowns",
            "time_mean",
            "time_median",
            "time_std",
            "iterations_mean",
            "iterations_median",
            "iterations_std",
            "matvecs_mean",
            "matvecs_median",
            "matvecs_std",
            "speedup_time",
            "speedup_matvecs",
        ])?;
        let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
        for s in &self.solvers {
            let mut row = vec![
                s.label.clone(),
                s.runs.to_string(),
                s.converged.to_string(),
                s.not_converged.to_string(),
                s.breakdowns.to_string(),
            ];
            for stat in [s.time, s.iterations, s.matvecs] {
                row.push(opt(stat.map(|x| x.mean)));
                row.push(opt(stat.map(|x| x.median)));
                row.push(opt(stat.map(|x| x.std)));
            }
            row.push(opt(s.speedup_time));
            row.push(opt(s.speedup_matvecs));
            w.write_record(&row)?;
        }
        w.flush().map_err(|e| BenchError::io(path, e))?;
        Ok(())
    }

    /// Plain-text table for the terminal.
    pub fn render(&self) -> String {
        let mut out = format!(
            "{} trials, stop rule {}, baseline {}\n{:<16} {:>5} {:>6} {:>12} {:>12} {:>12} {:>9} {:>9}\n",
            self.trials,
            self.stop_mode,
            self.baseline,
            "solver",
            "conv",
            "fail",
            "iters",
            "matvecs",
            "time (s)",
            "x time",
            "x matvec"
        );
        let f = |v: Option<f64>, p: usize| v.map_or("-".to_string(), |x| format!("{x:.p$}"));
        for s in &self.solvers {
            out.push_str(&format!(
                "{:<16} {:>5} {:>6} {:>12} {:>12} {:>12} {:>9} {:>9}\n",
                s.label,
                s.converged,
                s.not_converged + s.breakdowns,
                f(s.iterations.map(|x| x.mean), 1),
                f(s.matvecs.map(|x| x.mean), 1),
                f(s.time.map(|x| x.mean), 4),
                f(s.speedup_time, 2),
                f(s.speedup_matvecs, 2),
            ));
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn summary_values() {
        assert!(Summary::of(&[]).is_none());
        let s = Summary::of(&[3.0]).unwrap();
        assert_eq!((s.mean, s.median, s.std), (3.0, 3.0, 0.0));
        let s = Summary::of(&[4.0, 1.0, 3.0, 2.0]).unwrap();
        assert_eq!(s.mean, 2.5);
        assert_eq!(s.median, 2.5);
        assert!((s.std - (5.0f64 / 3.0).sqrt()).abs() < 1e-15);
    }

    fn record(solver: &str, trial: usize, matvecs: u64, seconds: f64, error: bool) -> RunRecord {
        RunRecord {
            solver: solver.into(),
            trial,
            seed: trial as u64,
            iterations: matvecs as usize,
            matvecs,
            counter_delta: matvecs,
            seconds,
            converged: !error,
            error: error.then(|| "boom".into()),
            final_sin_theta: None,
            final_rayleigh: None,
        }
    }

    #[test]
    fn speedups_and_breakdowns() {
        let cfg = ExperimentConfig::synthetic(8, 0.1);
        let runs = vec![
            record("power", 0, 100, 2.0, false),
            record("power", 1, 300, 4.0, false),
            record("split_merge", 0, 50, 1.0, false),
            record("split_merge", 1, 0, 0.0, true),
        ];
        let r = RunReport::from_runs(&cfg, runs);
        let p = r.solver("power").unwrap();
        assert_eq!(p.speedup_time, Some(1.0));
        let s = r.solver("split_merge").unwrap();
        assert_eq!(s.breakdowns, 1);
        assert_eq!(s.converged, 1);
        assert_eq!(s.speedup_matvecs, Some(4.0));
        assert_eq!(s.speedup_time, Some(3.0));
    }
}
