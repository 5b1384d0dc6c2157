//! Ground truth and executable checks of the convergence theory.
//!
//! The dense Jacobi oracle supplies spectra for small problems. The rest of
//! the module turns the analytical claims about Split-Merge into numbers that
//! tests can compare: angle errors, the per-step contraction ratio `δ`, the
//! rate bounds built from it, surrogate dominance, and the agreement between
//! the factor-based update and its merged closed form.

mod jacobi;
mod verify;

use thiserror::Error;

use crate::linop::{LinopError, Operator};
use crate::objective::ObjectiveError;
use crate::solvers::{IterationTrace, Method, SolverConfig, SolverError, StopMode};
use crate::vecops::{dot, norm};

pub use jacobi::{jacobi_eigen, SymmetricEigen, MAX_SWEEPS, OFF_DIAGONAL_TOL};
pub use verify::{
    dense_hessian, dense_surrogate_hessian, surrogate_gap_min_eigenvalue,
    verify_surrogate_dominance, verify_vhat_formula, DominanceCheck, SquareRootFactor, VhatCheck,
};

/// Largest dimension the dense oracle accepts by default.
pub const DEFAULT_DENSE_LIMIT: usize = 4096;

#[derive(Debug, Error)]
pub enum TheoryError {
    #[error("Jacobi oracle did not converge after {sweeps} sweeps (off-diagonal mass {off_diagonal:.3e})")]
    OracleFailure { sweeps: usize, off_diagonal: f64 },
    #[error("dimension {n} exceeds the dense oracle limit {limit}")]
    DenseLimit { n: usize, limit: usize },
    #[error("eigenvalue {value:.3e} is negative beyond roundoff; operator is not PSD")]
    NotPsd { value: f64 },
    #[error("ratio undefined: zeta + omega * lambda1 = 0")]
    UndefinedRatio,
    #[error("spectrum holds only the dominant pair; a full spectrum is required")]
    IncompleteSpectrum,
    #[error("vector is zero")]
    ZeroVector,
    #[error("reference eigenpair not certified: residual {residual:.3e} > {bound:.3e}")]
    Uncertified { residual: f64, bound: f64 },
    #[error(transparent)]
    Linop(#[from] LinopError),
    #[error(transparent)]
    Objective(#[from] ObjectiveError),
    #[error(transparent)]
    Solver(#[from] SolverError),
}

/// Eigenvalues in descending order with orthonormal eigenvectors.
///
/// A spectrum can also hold just the dominant pair (see
/// [`Spectrum::dominant_only`]), which is enough for angle-based stopping.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    eigenvalues: Vec<f64>,
    eigenvectors: Vec<Vec<f64>>,
    complete: bool,
}

impl Spectrum {
    /// Sorts the pairs by descending eigenvalue. Every vector must have
    /// length `eigenvalues.len()`.
    pub fn new(eigenvalues: Vec<f64>, eigenvectors: Vec<Vec<f64>>) -> Self {
        assert_eq!(eigenvalues.len(), eigenvectors.len());
        assert!(!eigenvalues.is_empty());
        let n = eigenvalues.len();
        assert!(eigenvectors.iter().all(|v| v.len() == n));
        let mut pairs: Vec<_> = eigenvalues.into_iter().zip(eigenvectors).collect();
        pairs.sort_by(|a, b| b.0.total_cmp(&a.0));
        let (eigenvalues, eigenvectors) = pairs.into_iter().unzip();
        Self {
            eigenvalues,
            eigenvectors,
            complete: true,
        }
    }

    pub fn dominant_only(lambda1: f64, u1: Vec<f64>) -> Self {
        let (u1, _) = crate::vecops::normalized(&u1);
        Self {
            eigenvalues: vec![lambda1],
            eigenvectors: vec![u1],
            complete: false,
        }
    }

    pub fn is_complete(&self) -> bool {
        self.complete
    }

    pub fn dim(&self) -> usize {
        self.eigenvectors[0].len()
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn eigenvectors(&self) -> &[Vec<f64>] {
        &self.eigenvectors
    }

    pub fn lambda1(&self) -> f64 {
        self.eigenvalues[0]
    }

    pub fn u1(&self) -> &[f64] {
        &self.eigenvectors[0]
    }

    pub fn lambda2(&self) -> Option<f64> {
        if self.complete {
            self.eigenvalues.get(1).copied()
        } else {
            None
        }
    }

    /// Smallest eigenvalue `λ_n`.
    pub fn lambda_min(&self) -> Option<f64> {
        if self.complete {
            self.eigenvalues.last().copied()
        } else {
            None
        }
    }

    /// Eigengap `λ₁ - λ₂`.
    pub fn gap(&self) -> Option<f64> {
        self.lambda2().map(|l2| self.lambda1() - l2)
    }

    /// Minimum of the difference objective, `-λ₁/4`.
    pub fn f_star(&self) -> f64 {
        -self.lambda1() / 4.0
    }
}

/// Computes the full spectrum of a PSD operator with the Jacobi oracle.
///
/// Eigenvalues in `[-1e-10 λ₁, 0)` are clamped to zero; anything more negative
/// is reported as a PSD violation.
pub fn dense_eigendecomposition<O: Operator + ?Sized>(
    op: &O,
    dense_limit: usize,
) -> Result<Spectrum, TheoryError> {
    let n = op.dim();
    if n > dense_limit {
        return Err(TheoryError::DenseLimit {
            n,
            limit: dense_limit,
        });
    }
    let eig = jacobi_eigen(n, &op.to_dense())?;
    let top = eig.eigenvalues[0].max(0.0);
    let mut values = eig.eigenvalues;
    for v in values.iter_mut() {
        if *v < 0.0 {
            if *v >= -1e-10 * top {
                *v = 0.0;
            } else {
                return Err(TheoryError::NotPsd { value: *v });
            }
        }
    }
    Ok(Spectrum::new(values, eig.eigenvectors))
}

/// Reference dominant pair for operators too large for the dense oracle:
/// the power method run to a relative residual of `1e-12`, accepted only if
/// `‖Au - r u‖ <= 1e-10 r`.
pub fn reference_dominant_pair<O: Operator + ?Sized>(
    op: &O,
    seed: u64,
    max_iter: usize,
) -> Result<Spectrum, TheoryError> {
    let config = SolverConfig {
        method: Method::Power,
        stop_mode: StopMode::Residual,
        residual_tol: 1e-12,
        max_iter,
        seed,
        ..SolverConfig::default()
    };
    let result = crate::solvers::solve(op, &config, None)?;
    let u = result.x_unit;
    let au = op.apply(&u)?;
    let r = dot(&u, &au);
    let residual = norm(
        &au.iter()
            .zip(&u)
            .map(|(a, b)| a - r * b)
            .collect::<Vec<_>>(),
    );
    let bound = 1e-10 * r.abs();
    if residual > bound {
        return Err(TheoryError::Uncertified { residual, bound });
    }
    Ok(Spectrum::dominant_only(r, u))
}

/// Angle between an iterate and the dominant eigenvector.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AngleError {
    pub sin_theta: f64,
    pub cos_theta: f64,
    /// `tan θ`, infinite when `x ⊥ u₁`.
    pub tan_theta: f64,
}

/// `cos θ = |u₁'x| / ‖x‖`, `sin θ = sqrt(max(0, 1 - cos²θ))`.
pub fn sin_theta(x: &[f64], u1: &[f64]) -> Result<AngleError, TheoryError> {
    let nx = norm(x);
    if nx == 0.0 {
        return Err(TheoryError::ZeroVector);
    }
    let cos_theta = (dot(u1, x).abs() / nx).min(1.0);
    let sin_theta = (1.0 - cos_theta * cos_theta).max(0.0).sqrt();
    let tan_theta = if cos_theta == 0.0 {
        f64::INFINITY
    } else {
        sin_theta / cos_theta
    };
    Ok(AngleError {
        sin_theta,
        cos_theta,
        tan_theta,
    })
}

/// Contraction ratio of one merged step relative to the dominant direction:
/// `max_{j>=2} |(ζ + ω λ_j) / (ζ + ω λ₁)|`.
pub fn compute_delta(spectrum: &Spectrum, zeta: f64, omega: f64) -> Result<f64, TheoryError> {
    if !spectrum.is_complete() {
        return Err(TheoryError::IncompleteSpectrum);
    }
    let lead = zeta + omega * spectrum.lambda1();
    if lead == 0.0 || !lead.is_finite() {
        return Err(TheoryError::UndefinedRatio);
    }
    Ok(spectrum.eigenvalues()[1..]
        .iter()
        .map(|l| ((zeta + omega * l) / lead).abs())
        .fold(0.0, f64::max))
}

/// Per-iteration rate bounds for a recorded run.
#[derive(Debug, Clone)]
pub struct RateBounds {
    /// `δ_k` for every step that has recorded coefficients.
    pub step_deltas: Vec<f64>,
    /// Maximum of `step_deltas` (1 when there are none).
    pub delta: f64,
    /// False when some `δ_k > 1`; the bounds are then not guaranteed.
    pub applicable: bool,
    /// `tan θ₀ (λ₂/λ₁)^k δ^k` for each record `k`.
    pub sin_bounds: Vec<f64>,
    /// `(λ₁ - λ_n) tan²θ₀ (λ₂/λ₁)^{2k} δ^{2k}` for each record `k`.
    pub rayleigh_bounds: Vec<f64>,
}

/// Evaluates the angle and Rayleigh-quotient rate bounds along `trace`.
///
/// Records that carry no merged-step coefficients (the final record, or
/// power-method steps) contribute `δ = 1`.
pub fn rate_bounds(
    spectrum: &Spectrum,
    trace: &IterationTrace,
    tan_theta0: f64,
) -> Result<RateBounds, TheoryError> {
    let l1 = spectrum.lambda1();
    let l2 = spectrum.lambda2().ok_or(TheoryError::IncompleteSpectrum)?;
    let ln = spectrum
        .lambda_min()
        .ok_or(TheoryError::IncompleteSpectrum)?;
    let records = trace.records();
    let mut step_deltas = Vec::new();
    let steps = records.len().saturating_sub(1);
    for rec in &records[..steps] {
        let d = match rec.coefficients {
            Some(c) => compute_delta(spectrum, c.zeta, c.omega)?,
            None => 1.0,
        };
        step_deltas.push(d);
    }
    let delta = step_deltas.iter().copied().fold(0.0, f64::max);
    let delta = if step_deltas.is_empty() { 1.0 } else { delta };
    let ratio = (l2 / l1).abs() * delta;
    let sin_bounds: Vec<f64> = records
        .iter()
        .map(|r| tan_theta0 * ratio.powi(r.k as i32))
        .collect();
    let rayleigh_bounds = sin_bounds.iter().map(|s| (l1 - ln) * s * s).collect();
    Ok(RateBounds {
        applicable: delta <= 1.0,
        step_deltas,
        delta,
        sin_bounds,
        rayleigh_bounds,
    })
}
