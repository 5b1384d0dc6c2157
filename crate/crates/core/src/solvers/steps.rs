use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{breakdown_floor, guard_norm, Method, SolverError};
use crate::linop::{gaussian, LinopError, Operator};
use crate::objective::{clamped_quad_form, ObjectiveError};
use crate::vecops::{dot, norm, norm_sq};

/// Fresh draws tried by [`init_vector`] before giving up.
pub const INIT_ATTEMPTS: usize = 100;

/// Unit-norm standard-normal start with `x'Ax > 1e-12 ‖A‖_F`.
///
/// Deterministic in `(n, seed)`: the same ChaCha8 stream is consumed for every
/// retry, so a failed draw is followed by the next draw of the same stream.
pub fn init_vector<O: Operator + ?Sized>(
    n: usize,
    seed: u64,
    op: &O,
) -> Result<Vec<f64>, SolverError> {
    if n == 0 {
        return Err(LinopError::EmptyOperator.into());
    }
    if n != op.dim() {
        return Err(LinopError::DimensionMismatch {
            expected: op.dim(),
            found: n,
        }
        .into());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let floor = 1e-12 * op.frobenius_norm();
    for _ in 0..INIT_ATTEMPTS {
        let g = gaussian(&mut rng, n);
        let len = norm(&g);
        if len == 0.0 {
            continue;
        }
        let x: Vec<f64> = g.iter().map(|v| v / len).collect();
        let ax = op.apply(&x)?;
        if dot(&x, &ax) > floor {
            return Ok(x);
        }
    }
    Err(SolverError::Initialization {
        attempts: INIT_ATTEMPTS,
    })
}

/// `Ax / ‖Ax‖`, one matvec.
pub fn power_step<O: Operator + ?Sized>(op: &O, x: &[f64]) -> Result<Vec<f64>, SolverError> {
    let w = op.apply(x)?;
    power_from_product(&w, op.frobenius_norm(), x)
}

pub(super) fn power_from_product(
    w: &[f64],
    frobenius: f64,
    x: &[f64],
) -> Result<Vec<f64>, SolverError> {
    let nw = norm(w);
    if nw <= breakdown_floor(frobenius, norm(x)) || nw == 0.0 {
        return Err(SolverError::Breakdown {
            method: Method::Power,
            norm: nw,
        });
    }
    Ok(w.iter().map(|v| v / nw).collect())
}

/// `(1 - 2α)x + α Ax / (x'Ax)^{1/2}`, the gradient step `x - α∇f(x)`.
/// Not normalized.
pub fn gd_step<O: Operator + ?Sized>(
    op: &O,
    x: &[f64],
    alpha: f64,
) -> Result<Vec<f64>, SolverError> {
    let w = op.apply(x)?;
    gd_from_product(x, &w, op.frobenius_norm(), alpha)
}

pub(super) fn gd_from_product(
    x: &[f64],
    w: &[f64],
    frobenius: f64,
    alpha: f64,
) -> Result<Vec<f64>, SolverError> {
    let xx = norm_sq(x);
    let quad = clamped_quad_form(dot(x, w), frobenius, xx)?;
    let nw = norm(w);
    if nw <= breakdown_floor(frobenius, xx.sqrt()) || quad == 0.0 {
        return Err(ObjectiveError::NonDifferentiable { ax_norm: nw }.into());
    }
    let scale = alpha / quad.sqrt();
    let keep = 1.0 - 2.0 * alpha;
    let next: Vec<f64> = x
        .iter()
        .zip(w)
        .map(|(xi, wi)| keep * xi + scale * wi)
        .collect();
    guard_norm(&next)?;
    Ok(next)
}

/// Momentum power step: `y = A x_curr - β x_prev`, returning
/// `(y/‖y‖, x_curr/‖y‖)` as the next `(x_curr, x_prev)`.
pub fn power_momentum_step<O: Operator + ?Sized>(
    op: &O,
    x_curr: &[f64],
    x_prev: &[f64],
    beta: f64,
) -> Result<(Vec<f64>, Vec<f64>), SolverError> {
    if x_prev.len() != x_curr.len() {
        return Err(LinopError::DimensionMismatch {
            expected: x_curr.len(),
            found: x_prev.len(),
        }
        .into());
    }
    let w = op.apply(x_curr)?;
    momentum_from_product(&w, x_curr, x_prev, beta)
}

pub(super) fn momentum_from_product(
    w: &[f64],
    x_curr: &[f64],
    x_prev: &[f64],
    beta: f64,
) -> Result<(Vec<f64>, Vec<f64>), SolverError> {
    let y: Vec<f64> = w
        .iter()
        .zip(x_prev)
        .map(|(wi, pi)| wi - beta * pi)
        .collect();
    let ny = norm(&y);
    // relative to the two terms that cancelled
    let floor = 1e-14 * (norm(w) + beta * norm(x_prev));
    if ny <= floor || ny == 0.0 {
        return Err(SolverError::Breakdown {
            method: Method::PowerMomentum,
            norm: ny,
        });
    }
    Ok((
        y.iter().map(|v| v / ny).collect(),
        x_curr.iter().map(|v| v / ny).collect(),
    ))
}
