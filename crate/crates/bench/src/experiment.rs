//! Runs every (solver, trial) pair and collects per-run outcomes.

use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use splitmerge::linop::{
    gershgorin_shift, load_matrix_market, LinearOperator, LinopError, Operator, ShiftedOperator,
};
use splitmerge::matgen::{generate, SyntheticSpec};
use splitmerge::solvers::{init_vector, solve_from, IterationTrace, SolverConfig};
use splitmerge::theory::{dense_eigendecomposition, reference_dominant_pair, Spectrum};

use crate::config::{ExperimentConfig, MatrixSource};
use crate::report::RunReport;
use crate::traces::emit_traces;
use crate::BenchError;

/// Iteration budget of the reference power run for large Matrix Market inputs.
const REFERENCE_MAX_ITER: usize = 200_000;

/// The matrix a trial runs on. Cloning resets the matvec counter, so each
/// trial owns an independent tally.
#[derive(Debug, Clone)]
enum Problem {
    Plain(LinearOperator),
    Shifted(ShiftedOperator),
}

impl Operator for Problem {
    fn dim(&self) -> usize {
        match self {
            Problem::Plain(a) => a.dim(),
            Problem::Shifted(a) => a.dim(),
        }
    }

    fn apply_into(&self, x: &[f64], y: &mut [f64]) -> Result<(), LinopError> {
        match self {
            Problem::Plain(a) => a.apply_into(x, y),
            Problem::Shifted(a) => a.apply_into(x, y),
        }
    }

    fn matvec_count(&self) -> u64 {
        match self {
            Problem::Plain(a) => a.matvec_count(),
            Problem::Shifted(a) => a.matvec_count(),
        }
    }

    fn frobenius_norm(&self) -> f64 {
        match self {
            Problem::Plain(a) => a.frobenius_norm(),
            Problem::Shifted(a) => a.frobenius_norm(),
        }
    }

    fn to_dense(&self) -> Vec<f64> {
        match self {
            Problem::Plain(a) => a.to_dense(),
            Problem::Shifted(a) => a.to_dense(),
        }
    }

    fn gershgorin_rows(&self) -> Vec<(f64, f64)> {
        match self {
            Problem::Plain(a) => a.gershgorin_rows(),
            Problem::Shifted(a) => a.gershgorin_rows(),
        }
    }
}

/// Summary of one solver run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub solver: String,
    pub trial: usize,
    pub seed: u64,
    /// Steps taken; the trace has `iterations + 1` rows.
    pub iterations: usize,
    /// Matvecs reported by the solver.
    pub matvecs: u64,
    /// Change of the operator's own counter across the run.
    pub counter_delta: u64,
    /// Solver-loop time up to the final recorded iterate.
    pub seconds: f64,
    pub converged: bool,
    /// Breakdown message; such runs are excluded from the statistics.
    pub error: Option<String>,
    pub final_sin_theta: Option<f64>,
    pub final_rayleigh: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub record: RunRecord,
    pub trace: Option<IterationTrace>,
    /// `-λ₁/4` when ground truth is available.
    pub f_star: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct ExperimentOutput {
    pub report: RunReport,
    /// Ordered by solver (config order), then trial.
    pub runs: Vec<RunOutcome>,
}

impl ExperimentOutput {
    /// Writes `report.json`, `report.csv` and, if enabled, `traces/*.csv`.
    pub fn write(&self, dir: &Path, traces: bool) -> Result<(), BenchError> {
        std::fs::create_dir_all(dir).map_err(|e| BenchError::io(dir, e))?;
        self.report.write_json(&dir.join("report.json"))?;
        self.report.write_csv(&dir.join("report.csv"))?;
        if traces {
            emit_traces(&self.runs, &dir.join("traces"))?;
        }
        Ok(())
    }
}

fn ground_truth(cfg: &ExperimentConfig, op: &Problem) -> Result<Option<Spectrum>, BenchError> {
    if !cfg.oracle {
        return Ok(None);
    }
    let truth = if op.dim() <= cfg.dense_limit {
        dense_eigendecomposition(op, cfg.dense_limit)?
    } else {
        reference_dominant_pair(op, cfg.seed, REFERENCE_MAX_ITER)?
    };
    Ok(Some(truth))
}

fn load_source(cfg: &ExperimentConfig) -> Result<Option<(Problem, Option<Spectrum>)>, BenchError> {
    match &cfg.source {
        MatrixSource::Synthetic { .. } => Ok(None),
        MatrixSource::MatrixMarket { path, shift } => {
            let a = load_matrix_market(path)?;
            let op = if *shift {
                Problem::Shifted(gershgorin_shift(a))
            } else {
                Problem::Plain(a)
            };
            let truth = ground_truth(cfg, &op)?;
            Ok(Some((op, truth)))
        }
    }
}

fn solver_configs(
    cfg: &ExperimentConfig,
    truth: Option<&Spectrum>,
) -> Result<Vec<(String, SolverConfig)>, BenchError> {
    cfg.solvers
        .iter()
        .map(|s| {
            let lambda2 = match (s.ideal_beta_fraction(), truth.and_then(Spectrum::lambda2)) {
                (None, _) => 0.0,
                (Some(_), Some(l2)) => l2,
                (Some(_), None) => {
                    return Err(BenchError::Config(format!(
                        "{}: the ideal momentum needs λ₂, which requires the full spectrum",
                        s.label()
                    )))
                }
            };
            Ok((s.label(), cfg.solver_config(s, lambda2)?))
        })
        .collect()
}

fn run_trial(
    cfg: &ExperimentConfig,
    shared: Option<&(Problem, Option<Spectrum>)>,
    trial: usize,
) -> Result<Vec<RunOutcome>, BenchError> {
    let seed = cfg.seed.wrapping_add(trial as u64);
    let (op, truth) = match (&cfg.source, shared) {
        (MatrixSource::Synthetic { n, gap }, _) => {
            let (a, spectrum) = generate(&SyntheticSpec::new(*n, *gap, seed))?;
            (Problem::Plain(a), cfg.oracle.then_some(spectrum))
        }
        (_, Some((op, truth))) => (op.clone(), truth.clone()),
        (_, None) => unreachable!("matrix market source is loaded before the trials"),
    };
    let solvers = solver_configs(cfg, truth.as_ref())?;
    let f_star = truth.as_ref().map(Spectrum::f_star);

    let x0 = match init_vector(op.dim(), seed, &op) {
        Ok(x) => x,
        Err(e) => {
            let msg = e.to_string();
            return Ok(solvers
                .into_iter()
                .map(|(label, _)| failed(label, trial, seed, 0, msg.clone(), f_star))
                .collect());
        }
    };

    let mut out = Vec::with_capacity(solvers.len());
    for (label, scfg) in solvers {
        let before = op.matvec_count();
        let result = solve_from(&op, &scfg, x0.clone(), truth.as_ref());
        let delta = op.matvec_count() - before;
        out.push(match result {
            Ok(r) => {
                let last = r.trace.last().expect("trace has the initial record");
                RunOutcome {
                    record: RunRecord {
                        solver: label,
                        trial,
                        seed,
                        iterations: r.iterations,
                        matvecs: r.matvecs,
                        counter_delta: delta,
                        seconds: last.seconds,
                        converged: r.converged,
                        error: None,
                        final_sin_theta: last.sin_theta,
                        final_rayleigh: Some(last.rayleigh),
                    },
                    trace: Some(r.trace),
                    f_star,
                }
            }
            Err(e) => failed(label, trial, seed, delta, e.to_string(), f_star),
        });
    }
    Ok(out)
}

fn failed(
    solver: String,
    trial: usize,
    seed: u64,
    delta: u64,
    msg: String,
    f_star: Option<f64>,
) -> RunOutcome {
    RunOutcome {
        record: RunRecord {
            solver,
            trial,
            seed,
            iterations: 0,
            matvecs: delta,
            counter_delta: delta,
            seconds: 0.0,
            converged: false,
            error: Some(msg),
            final_sin_theta: None,
            final_rayleigh: None,
        },
        trace: None,
        f_star,
    }
}

/// Runs all trials (in parallel) and aggregates them. Solver breakdowns are
/// recorded per run; only configuration, input and ground-truth failures
/// abort the experiment.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentOutput, BenchError> {
    cfg.validate()?;
    let shared = load_source(cfg)?;
    let per_trial: Vec<Vec<RunOutcome>> = (0..cfg.trials)
        .into_par_iter()
        .map(|t| run_trial(cfg, shared.as_ref(), t))
        .collect::<Result<_, _>>()?;

    let mut runs = Vec::with_capacity(cfg.trials * cfg.solvers.len());
    for s in 0..cfg.solvers.len() {
        runs.extend(per_trial.iter().map(|trial| trial[s].clone()));
    }
    let records: Vec<RunRecord> = runs.iter().map(|r| r.record.clone()).collect();
    let report = RunReport::from_runs(cfg, records);
    Ok(ExperimentOutput { report, runs })
}
