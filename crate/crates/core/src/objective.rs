//! The difference objective `f(x) = ‖x‖² - (x'Ax)^{1/2}` and its derivatives.
//!
//! Global minimizers of `f` are the dominant eigenvectors scaled to norm
//! `λ₁^{1/2} / 2`, with minimum value `-λ₁/4`. At any stationary point `x`,
//! `λ(x) = 2 (x'Ax)^{1/2}` is the associated eigenvalue. `f` is differentiable
//! exactly where `Ax ≠ 0`.

use thiserror::Error;

use crate::linop::{LinopError, Operator, PSD_PROBE_TOL};
use crate::vecops::{dot, norm, norm_sq};

/// `‖Ax‖ <= NONDIFF_TOL ‖A‖_F ‖x‖` is treated as `Ax = 0`.
pub const NONDIFF_TOL: f64 = 1e-14;

#[derive(Debug, Error)]
pub enum ObjectiveError {
    #[error(transparent)]
    Linop(#[from] LinopError),
    #[error("x'Ax = {quad:.3e} is negative beyond roundoff; operator is not PSD")]
    NotPsd { quad: f64 },
    #[error("objective is not differentiable here: ‖Ax‖ = {ax_norm:.3e}")]
    NonDifferentiable { ax_norm: f64 },
    #[error("vector is zero")]
    ZeroVector,
    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),
}

/// Objective quantities at one point, all derived from a single product `Ax`.
#[derive(Debug, Clone, PartialEq)]
pub struct ObjectiveEval {
    pub f_value: f64,
    pub grad: Option<Vec<f64>>,
    /// `x'Ax / x'x`
    pub rayleigh: f64,
    /// `2 (x'Ax)^{1/2}`
    pub lambda_of_x: f64,
    pub quad_form: f64,
}

impl ObjectiveEval {
    /// Evaluates everything from `x` and a precomputed `ax = A x`.
    ///
    /// `frobenius` is `‖A‖_F`, used to scale the roundoff tolerances.
    pub fn from_product(
        x: &[f64],
        ax: &[f64],
        frobenius: f64,
        with_grad: bool,
    ) -> Result<Self, ObjectiveError> {
        if x.len() != ax.len() {
            return Err(ObjectiveError::LengthMismatch(x.len(), ax.len()));
        }
        let xx = norm_sq(x);
        if xx == 0.0 {
            return Err(ObjectiveError::ZeroVector);
        }
        let quad = clamped_quad_form(dot(x, ax), frobenius, xx)?;
        let root = quad.sqrt();
        let grad = if with_grad {
            Some(gradient_from_product(x, ax, root, frobenius)?)
        } else {
            None
        };
        Ok(Self {
            f_value: xx - root,
            grad,
            rayleigh: quad / xx,
            lambda_of_x: 2.0 * root,
            quad_form: quad,
        })
    }
}

/// Clamps roundoff-negative quadratic forms to zero and rejects genuine
/// negatives.
pub fn clamped_quad_form(quad: f64, frobenius: f64, xx: f64) -> Result<f64, ObjectiveError> {
    if quad >= 0.0 {
        Ok(quad)
    } else if quad > -PSD_PROBE_TOL * frobenius * xx {
        Ok(0.0)
    } else {
        Err(ObjectiveError::NotPsd { quad })
    }
}

fn gradient_from_product(
    x: &[f64],
    ax: &[f64],
    root: f64,
    frobenius: f64,
) -> Result<Vec<f64>, ObjectiveError> {
    let ax_norm = norm(ax);
    if ax_norm <= NONDIFF_TOL * frobenius * norm(x) || root == 0.0 {
        return Err(ObjectiveError::NonDifferentiable { ax_norm });
    }
    Ok(x.iter()
        .zip(ax)
        .map(|(xi, ai)| 2.0 * xi - ai / root)
        .collect())
}

pub fn evaluate<O: Operator + ?Sized>(
    op: &O,
    x: &[f64],
    with_grad: bool,
) -> Result<ObjectiveEval, ObjectiveError> {
    let ax = op.apply(x)?;
    ObjectiveEval::from_product(x, &ax, op.frobenius_norm(), with_grad)
}

/// `‖x‖² - (x'Ax)^{1/2}`, one matvec.
pub fn eval_f<O: Operator + ?Sized>(op: &O, x: &[f64]) -> Result<f64, ObjectiveError> {
    let ax = op.apply(x)?;
    let xx = norm_sq(x);
    let quad = clamped_quad_form(dot(x, &ax), op.frobenius_norm(), xx)?;
    Ok(xx - quad.sqrt())
}

/// `2x - Ax / (x'Ax)^{1/2}`, one matvec.
pub fn eval_grad<O: Operator + ?Sized>(op: &O, x: &[f64]) -> Result<Vec<f64>, ObjectiveError> {
    let ax = op.apply(x)?;
    let xx = norm_sq(x);
    let quad = clamped_quad_form(dot(x, &ax), op.frobenius_norm(), xx)?;
    gradient_from_product(x, &ax, quad.sqrt(), op.frobenius_norm())
}

/// Hessian-vector product
/// `2d - Ad / (x'Ax)^{1/2} + Ax (Ax)'d / (x'Ax)^{3/2}`, two matvecs.
pub fn hessian_vec<O: Operator + ?Sized>(
    op: &O,
    x: &[f64],
    d: &[f64],
) -> Result<Vec<f64>, ObjectiveError> {
    if d.len() != x.len() {
        return Err(ObjectiveError::LengthMismatch(x.len(), d.len()));
    }
    let ax = op.apply(x)?;
    let ad = op.apply(d)?;
    let frob = op.frobenius_norm();
    let xx = norm_sq(x);
    let quad = clamped_quad_form(dot(x, &ax), frob, xx)?;
    let ax_norm = norm(&ax);
    if ax_norm <= NONDIFF_TOL * frob * xx.sqrt() || quad == 0.0 {
        return Err(ObjectiveError::NonDifferentiable { ax_norm });
    }
    let root = quad.sqrt();
    let coupling = dot(&ax, d) / (quad * root);
    Ok(d.iter()
        .zip(&ad)
        .zip(&ax)
        .map(|((di, adi), axi)| 2.0 * di - adi / root + axi * coupling)
        .collect())
}

/// Rayleigh quotient `x'Ax / x'x`.
pub fn rayleigh<O: Operator + ?Sized>(op: &O, x: &[f64]) -> Result<f64, ObjectiveError> {
    let xx = norm_sq(x);
    if xx == 0.0 {
        return Err(ObjectiveError::ZeroVector);
    }
    let ax = op.apply(x)?;
    Ok(dot(x, &ax) / xx)
}
