//! Iterative dominant-eigenvector methods sharing one driver.
//!
//! Every method evaluates `w = Ax` once per iteration; the statistics of the
//! current iterate and the next step are both derived from it. Split-Merge
//! additionally computes `z = A²x`, for two matvecs per iteration in total.

mod split_merge;
mod steps;

use std::time::Instant;

use thiserror::Error;

use crate::linop::{LinopError, Operator};
use crate::objective::{ObjectiveError, ObjectiveEval, NONDIFF_TOL};
use crate::theory::Spectrum;
use crate::vecops::{dot, norm, normalized};

pub use split_merge::{
    coefficients_from_products, split_merge_coeffs, split_merge_step, KrylovPair, RhoPolicy,
    SplitMergeCoefficients, DEGENERACY_TOL, SAFEGUARD_FACTOR,
};
pub use steps::{gd_step, init_vector, power_momentum_step, power_step, INIT_ATTEMPTS};

/// Iterate norms outside `[MIN_NORM, MAX_NORM]` abort unnormalized methods.
pub const MIN_NORM: f64 = 1e-150;
pub const MAX_NORM: f64 = 1e150;

#[derive(Debug, Error)]
pub enum SolverError {
    #[error("invalid solver configuration: {0}")]
    Config(String),
    #[error("stop mode {0:?} needs a ground-truth spectrum")]
    MissingGroundTruth(StopMode),
    #[error("could not draw x0 with x0'Ax0 > 0 after {attempts} attempts")]
    Initialization { attempts: usize },
    #[error("{method:?} broke down: step vector norm {norm:.3e}")]
    Breakdown { method: Method, norm: f64 },
    #[error("surrogate Hessian not positive definite: sigma = {sigma:.6e} at rho = {rho:.6e}")]
    NotPositiveDefinite { sigma: f64, rho: f64 },
    #[error("iterate norm {norm:.3e} left [1e-150, 1e150]")]
    Overflow { norm: f64 },
    #[error(transparent)]
    Objective(#[from] ObjectiveError),
    #[error(transparent)]
    Linop(#[from] LinopError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Method {
    Power,
    /// Gradient descent on the difference objective with step `alpha`.
    GdDifference,
    /// Power iteration with heavy-ball momentum `beta`.
    PowerMomentum,
    SplitMerge,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Power => "power",
            Method::GdDifference => "gd_difference",
            Method::PowerMomentum => "power_momentum",
            Method::SplitMerge => "split_merge",
        }
    }

    /// Matvecs spent per iteration.
    pub fn matvecs_per_iteration(self) -> u64 {
        match self {
            Method::SplitMerge => 2,
            _ => 1,
        }
    }
}

impl std::str::FromStr for Method {
    type Err = SolverError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().replace('-', "_").as_str() {
            "power" => Ok(Method::Power),
            "gd_difference" | "gd" => Ok(Method::GdDifference),
            "power_momentum" | "power_m" | "momentum" => Ok(Method::PowerMomentum),
            "split_merge" | "sm" => Ok(Method::SplitMerge),
            other => Err(SolverError::Config(format!("unknown method '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopMode {
    /// `sin θ <= eps` against the ground-truth `u₁`.
    OracleAngle,
    /// `‖Ax - r x‖ / (r ‖x‖) <= residual_tol`.
    Residual,
    /// `f(x) + λ₁/4 <= objective_tol`, for methods that work at minimizer scale.
    ObjectiveGap,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    pub method: Method,
    pub alpha: f64,
    pub beta: f64,
    pub eps: f64,
    pub max_iter: usize,
    pub rho_policy: RhoPolicy,
    /// Switch Split-Merge to [`RhoPolicy::ConvergenceGuaranteed`] after this
    /// many iterations.
    pub stage_two_after: Option<usize>,
    pub stop_mode: StopMode,
    pub residual_tol: f64,
    pub objective_tol: f64,
    pub seed: u64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            method: Method::SplitMerge,
            alpha: 0.5,
            beta: 0.0,
            eps: 1e-5,
            max_iter: 20_000,
            rho_policy: RhoPolicy::FixedOneWithSafeguard,
            stage_two_after: None,
            stop_mode: StopMode::OracleAngle,
            residual_tol: 1e-10,
            objective_tol: 1e-8,
            seed: 0,
        }
    }
}

impl SolverConfig {
    pub fn with_method(method: Method) -> Self {
        Self {
            method,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<(), SolverError> {
        let bad = |m: String| Err(SolverError::Config(m));
        if self.method == Method::GdDifference && !(self.alpha > 0.0 && self.alpha < 1.0) {
            return bad(format!("alpha must lie in (0, 1), got {}", self.alpha));
        }
        if !(self.eps > 0.0) {
            return bad(format!("eps must be positive, got {}", self.eps));
        }
        if self.max_iter < 1 {
            return bad("max_iter must be at least 1".into());
        }
        if !(self.beta >= 0.0) || !self.beta.is_finite() {
            return bad(format!("beta must be nonnegative, got {}", self.beta));
        }
        if !(self.residual_tol > 0.0) || !(self.objective_tol > 0.0) {
            return bad("stopping tolerances must be positive".into());
        }
        if let RhoPolicy::Constant(v) = self.rho_policy {
            if !(v > 0.0) || !v.is_finite() {
                return bad(format!("constant rho must be positive, got {v}"));
            }
        }
        Ok(())
    }
}

/// Per-iteration statistics of the iterate `x_k`.
#[derive(Debug, Clone, PartialEq)]
pub struct IterationRecord {
    pub k: usize,
    pub sin_theta: Option<f64>,
    pub f_value: f64,
    pub rayleigh: f64,
    pub lambda_of_x: f64,
    /// `‖Ax - r(x)x‖ / (r(x)‖x‖)`
    pub residual: f64,
    /// Cumulative matvecs since the run started, including this record's `Ax`.
    pub matvecs: u64,
    pub seconds: f64,
    /// Split-Merge coefficients of the step taken from `x_k`.
    pub coefficients: Option<SplitMergeCoefficients>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct IterationTrace {
    records: Vec<IterationRecord>,
}

impl IterationTrace {
    pub fn records(&self) -> &[IterationRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn last(&self) -> Option<&IterationRecord> {
        self.records.last()
    }

    /// `-ζ_k/ω_k` for every non-degenerate Split-Merge step.
    pub fn neg_zeta_over_omega(&self) -> Vec<f64> {
        self.records
            .iter()
            .filter_map(|r| r.coefficients.and_then(|c| c.neg_zeta_over_omega()))
            .collect()
    }
}

#[derive(Debug, Clone)]
pub struct SolveResult {
    /// Final iterate, unnormalized for Split-Merge and gradient descent.
    pub x: Vec<f64>,
    pub x_unit: Vec<f64>,
    /// `λ(x_K) = 2 (x_K'Ax_K)^{1/2}`; meaningful at minimizer scale only.
    pub lambda_estimate: f64,
    pub rayleigh_estimate: f64,
    pub iterations: usize,
    pub converged: bool,
    pub trace: IterationTrace,
    pub matvecs: u64,
    pub seconds: f64,
}

/// Draws `x₀` from `config.seed` and runs [`solve_from`].
pub fn solve<O: Operator + ?Sized>(
    op: &O,
    config: &SolverConfig,
    truth: Option<&Spectrum>,
) -> Result<SolveResult, SolverError> {
    config.validate()?;
    let x0 = init_vector(op.dim(), config.seed, op)?;
    solve_from(op, config, x0, truth)
}

/// Runs the configured method from `x0` until the stop rule holds or
/// `max_iter` steps have been taken. Hitting the cap is not an error.
pub fn solve_from<O: Operator + ?Sized>(
    op: &O,
    config: &SolverConfig,
    x0: Vec<f64>,
    truth: Option<&Spectrum>,
) -> Result<SolveResult, SolverError> {
    config.validate()?;
    let n = op.dim();
    if x0.len() != n {
        return Err(LinopError::DimensionMismatch {
            expected: n,
            found: x0.len(),
        }
        .into());
    }
    if matches!(
        config.stop_mode,
        StopMode::OracleAngle | StopMode::ObjectiveGap
    ) && truth.is_none()
    {
        return Err(SolverError::MissingGroundTruth(config.stop_mode));
    }
    if let Some(t) = truth {
        if t.dim() != n {
            return Err(SolverError::Config(format!(
                "ground truth has dimension {}, operator {n}",
                t.dim()
            )));
        }
    }

    let frob = op.frobenius_norm();
    let start_count = op.matvec_count();
    let clock = Instant::now();
    let mut trace = IterationTrace::default();
    let mut x = x0;
    let mut x_prev = vec![0.0; n];
    let mut w = vec![0.0; n];
    let mut converged = false;
    let mut k = 0;

    loop {
        op.apply_into(&x, &mut w)?;
        let eval = ObjectiveEval::from_product(&x, &w, frob, false)?;
        let xx = dot(&x, &x);
        let r = eval.rayleigh;
        let residual = if r > 0.0 {
            let res: f64 = x
                .iter()
                .zip(&w)
                .map(|(xi, wi)| (wi - r * xi).powi(2))
                .sum::<f64>()
                .sqrt();
            res / (r * xx.sqrt())
        } else {
            f64::INFINITY
        };
        let sin_theta = truth.map(|t| {
            let c = (dot(t.u1(), &x).abs() / xx.sqrt()).min(1.0);
            (1.0 - c * c).max(0.0).sqrt()
        });
        trace.records.push(IterationRecord {
            k,
            sin_theta,
            f_value: eval.f_value,
            rayleigh: r,
            lambda_of_x: eval.lambda_of_x,
            residual,
            matvecs: op.matvec_count() - start_count,
            seconds: clock.elapsed().as_secs_f64(),
            coefficients: None,
        });

        let done = match config.stop_mode {
            StopMode::OracleAngle => sin_theta.is_some_and(|s| s <= config.eps),
            StopMode::Residual => residual <= config.residual_tol,
            StopMode::ObjectiveGap => {
                truth.is_some_and(|t| eval.f_value - t.f_star() <= config.objective_tol)
            }
        };
        if done {
            converged = true;
            break;
        }
        if k == config.max_iter {
            break;
        }

        x = match config.method {
            Method::Power => steps::power_from_product(&w, frob, &x)?,
            Method::GdDifference => steps::gd_from_product(&x, &w, frob, config.alpha)?,
            Method::PowerMomentum => {
                let (next, prev) = steps::momentum_from_product(&w, &x, &x_prev, config.beta)?;
                x_prev = prev;
                next
            }
            Method::SplitMerge => {
                let policy = match config.stage_two_after {
                    Some(s) if k >= s => RhoPolicy::ConvergenceGuaranteed,
                    _ => config.rho_policy,
                };
                let z = op.apply(&w)?;
                let coeffs = coefficients_from_products(&x, &w, &z, frob, policy)?;
                trace
                    .records
                    .last_mut()
                    .expect("record pushed")
                    .coefficients = Some(coeffs);
                let pair = KrylovPair {
                    ax: w.clone(),
                    a2x: z,
                };
                split_merge_step(&pair, &coeffs)?
            }
        };
        k += 1;
    }

    let seconds = clock.elapsed().as_secs_f64();
    let last = trace.last().expect("at least one record");
    let (x_unit, _) = normalized(&x);
    Ok(SolveResult {
        lambda_estimate: last.lambda_of_x,
        rayleigh_estimate: last.rayleigh,
        iterations: k,
        converged,
        matvecs: op.matvec_count() - start_count,
        seconds,
        x_unit,
        x,
        trace,
    })
}

/// Returns `Err(Overflow)` unless `MIN_NORM <= ‖x‖ <= MAX_NORM`.
pub(crate) fn guard_norm(x: &[f64]) -> Result<(), SolverError> {
    let nx = norm(x);
    if (MIN_NORM..=MAX_NORM).contains(&nx) {
        Ok(())
    } else {
        Err(SolverError::Overflow { norm: nx })
    }
}

/// `‖Ax‖` below this is treated as `Ax = 0`.
pub(crate) fn breakdown_floor(frobenius: f64, x_norm: f64) -> f64 {
    NONDIFF_TOL * frobenius * x_norm
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linop::LinearOperator;

    fn diag21() -> (LinearOperator, Spectrum) {
        let a = LinearOperator::diagonal(&[2.0, 1.0]).unwrap();
        let s = Spectrum::new(vec![2.0, 1.0], vec![vec![1.0, 0.0], vec![0.0, 1.0]]);
        (a, s)
    }

    #[test]
    fn config_validation() {
        assert!(SolverConfig::default().validate().is_ok());
        let mut c = SolverConfig::with_method(Method::GdDifference);
        c.alpha = 1.0;
        assert!(c.validate().is_err());
        c.alpha = 0.99;
        assert!(c.validate().is_ok());
        c.eps = 0.0;
        assert!(c.validate().is_err());
        let c = SolverConfig {
            max_iter: 0,
            ..SolverConfig::default()
        };
        assert!(c.validate().is_err());
        let c = SolverConfig {
            beta: -0.1,
            ..SolverConfig::default()
        };
        assert!(c.validate().is_err());
    }

    #[test]
    fn methods_parse() {
        assert_eq!("split-merge".parse::<Method>().unwrap(), Method::SplitMerge);
        assert_eq!("power".parse::<Method>().unwrap(), Method::Power);
        assert!("lanczos".parse::<Method>().is_err());
    }

    #[test]
    fn power_converges_on_gap_one() {
        let (a, s) = diag21();
        let cfg = SolverConfig {
            seed: 3,
            ..SolverConfig::with_method(Method::Power)
        };
        let res = solve(&a, &cfg, Some(&s)).unwrap();
        assert!(res.converged);
        assert!((res.rayleigh_estimate - 2.0).abs() <= 1e-9);
        assert!(res.trace.last().unwrap().sin_theta.unwrap() <= 1e-5);
    }

    #[test]
    fn split_merge_beats_power_from_same_start() {
        let (a, s) = diag21();
        let x0 = init_vector(2, 3, &a).unwrap();
        let p = solve_from(
            &a,
            &SolverConfig::with_method(Method::Power),
            x0.clone(),
            Some(&s),
        )
        .unwrap();
        let sm = solve_from(&a, &SolverConfig::default(), x0, Some(&s)).unwrap();
        assert!(p.converged && sm.converged);
        assert!(
            sm.iterations < p.iterations,
            "{} vs {}",
            sm.iterations,
            p.iterations
        );
    }

    #[test]
    fn matvec_deltas_per_method() {
        let a = LinearOperator::diagonal(&[3.0, 2.0, 1.0, 0.5]).unwrap();
        let s = Spectrum::new(
            vec![3.0, 2.0, 1.0, 0.5],
            (0..4)
                .map(|i| (0..4).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
                .collect(),
        );
        for m in [
            Method::Power,
            Method::GdDifference,
            Method::PowerMomentum,
            Method::SplitMerge,
        ] {
            let cfg = SolverConfig {
                max_iter: 8,
                eps: 1e-300,
                ..SolverConfig::with_method(m)
            };
            let before = a.matvec_count();
            let res = solve_from(&a, &cfg, vec![0.5; 4], Some(&s)).unwrap();
            let recs = res.trace.records();
            assert_eq!(recs.len(), 9);
            for pair in recs.windows(2) {
                assert_eq!(pair[1].matvecs - pair[0].matvecs, m.matvecs_per_iteration());
            }
            assert_eq!(res.matvecs, a.matvec_count() - before);
            assert_eq!(res.iterations, 8);
            assert!(!res.converged);
        }
    }

    #[test]
    fn cap_is_not_an_error() {
        let (a, s) = diag21();
        let cfg = SolverConfig {
            max_iter: 1,
            ..SolverConfig::with_method(Method::Power)
        };
        let res = solve(&a, &cfg, Some(&s)).unwrap();
        assert!(!res.converged);
        assert_eq!(res.iterations, 1);
    }

    #[test]
    fn oracle_mode_requires_truth() {
        let (a, _) = diag21();
        let err = solve(&a, &SolverConfig::default(), None).unwrap_err();
        assert!(matches!(
            err,
            SolverError::MissingGroundTruth(StopMode::OracleAngle)
        ));
        let cfg = SolverConfig {
            stop_mode: StopMode::Residual,
            ..SolverConfig::default()
        };
        let res = solve(&a, &cfg, None).unwrap();
        assert!(res.converged);
        assert!(res.trace.last().unwrap().sin_theta.is_none());
    }

    #[test]
    fn orthogonal_start_stalls() {
        let (a, s) = diag21();
        let cfg = SolverConfig {
            max_iter: 50,
            ..SolverConfig::with_method(Method::Power)
        };
        let res = solve_from(&a, &cfg, vec![0.0, 1.0], Some(&s)).unwrap();
        assert!(!res.converged);
        assert!(res.trace.records().iter().all(|r| r.sin_theta == Some(1.0)));
    }

    #[test]
    fn gd_alpha_near_one_is_faster() {
        let (a, s) =
            crate::matgen::generate(&crate::matgen::SyntheticSpec::new(64, 1e-2, 0)).unwrap();
        let run = |alpha: f64| {
            let cfg = SolverConfig {
                alpha,
                stop_mode: StopMode::ObjectiveGap,
                objective_tol: 1e-8,
                ..SolverConfig::with_method(Method::GdDifference)
            };
            let res = solve(&a, &cfg, Some(&s)).unwrap();
            assert!(res.converged);
            res.iterations
        };
        let (fast, slow) = (run(0.99), run(0.5));
        assert!(fast < slow, "{fast} vs {slow}");
    }

    #[test]
    fn zero_operator_fails_initialization() {
        let a = LinearOperator::diagonal(&[0.0, 0.0]).unwrap();
        let err = solve(&a, &SolverConfig::with_method(Method::Power), None).unwrap_err();
        assert!(matches!(err, SolverError::Initialization { attempts: 100 }));
    }
}
