//! Dense checks of the surrogate built from a square-root factor `A = F'F`.
//!
//! With `s = (x'Ax)^{1/2}`, `u = Fx/‖Fx‖` and `v ⊥ u`, `‖v‖ <= 1`, the surrogate
//! curvature is
//!
//! ```text
//! H = 2I - F'(uu' + vv')F / s + (Ax)(Ax)' / s³
//! ```
//!
//! which must sit between `∇²f(x)` and `2I`. The factor is only ever used
//! here; solvers never see it.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{dense_eigendecomposition, jacobi_eigen, TheoryError, DEFAULT_DENSE_LIMIT};
use crate::linop::{gaussian, Operator};
use crate::objective::{hessian_vec, ObjectiveError};
use crate::solvers::{split_merge_coeffs, split_merge_step, RhoPolicy};
use crate::vecops::{dot, norm, norm_sq};

/// Order claims may fail by at most this much per unit direction.
pub const DOMINANCE_TOL: f64 = 1e-9;

/// `F = Λ₊^{1/2} U'`, an `r x n` factor with `F'F = A`. Eigenvalues at or
/// below `1e-12 λ₁` are dropped.
#[derive(Debug, Clone)]
pub struct SquareRootFactor {
    n: usize,
    rows: Vec<Vec<f64>>,
}

impl SquareRootFactor {
    pub fn new<O: Operator + ?Sized>(op: &O) -> Result<Self, TheoryError> {
        let spectrum = dense_eigendecomposition(op, DEFAULT_DENSE_LIMIT)?;
        let cut = 1e-12 * spectrum.lambda1();
        let rows = spectrum
            .eigenvalues()
            .iter()
            .zip(spectrum.eigenvectors())
            .filter(|(l, _)| **l > cut)
            .map(|(l, u)| {
                let s = l.sqrt();
                u.iter().map(|v| s * v).collect()
            })
            .collect();
        Ok(Self { n: op.dim(), rows })
    }

    pub fn rank(&self) -> usize {
        self.rows.len()
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// `F x`, length `rank`.
    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        self.rows.iter().map(|r| dot(r, x)).collect()
    }

    /// `F' y`, length `n`.
    pub fn apply_transpose(&self, y: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.n];
        for (row, yi) in self.rows.iter().zip(y) {
            for (o, r) in out.iter_mut().zip(row) {
                *o += yi * r;
            }
        }
        out
    }

    /// `F'F` as a row-major dense matrix.
    pub fn gram(&self) -> Vec<f64> {
        let n = self.n;
        let mut g = vec![0.0; n * n];
        for row in &self.rows {
            for i in 0..n {
                for j in 0..n {
                    g[i * n + j] += row[i] * row[j];
                }
            }
        }
        g
    }
}

/// Outcome of sampling the two order claims along random directions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DominanceCheck {
    pub holds: bool,
    /// Smallest `d'Hd - d'∇²f d` over the sampled unit `d`.
    pub lower_margin: f64,
    /// Smallest `2 - d'Hd` over the sampled unit `d`.
    pub upper_margin: f64,
    pub samples: usize,
}

/// Projects `v` onto `u⊥` and shrinks it into the unit ball.
fn feasible_v(v: &[f64], u: &[f64]) -> Vec<f64> {
    let p = dot(v, u);
    let mut out: Vec<f64> = v.iter().zip(u).map(|(vi, ui)| vi - p * ui).collect();
    let len = norm(&out);
    if len > 1.0 {
        out.iter_mut().for_each(|o| *o /= len);
    }
    out
}

struct Surrogate {
    u: Vec<f64>,
    v: Vec<f64>,
    ax: Vec<f64>,
    s: f64,
}

impl Surrogate {
    fn new<O: Operator + ?Sized>(
        op: &O,
        factor: &SquareRootFactor,
        x: &[f64],
        v: &[f64],
    ) -> Result<Self, TheoryError> {
        if v.len() != factor.rank() {
            return Err(ObjectiveError::LengthMismatch(factor.rank(), v.len()).into());
        }
        let ax = op.apply(x)?;
        let quad = dot(x, &ax);
        let ax_norm = norm(&ax);
        if quad <= 0.0 || ax_norm <= crate::objective::NONDIFF_TOL * op.frobenius_norm() * norm(x) {
            return Err(ObjectiveError::NonDifferentiable { ax_norm }.into());
        }
        let fx = factor.apply(x);
        let nfx = norm(&fx);
        let u: Vec<f64> = fx.iter().map(|f| f / nfx).collect();
        let v = feasible_v(v, &u);
        Ok(Self {
            u,
            v,
            ax,
            s: quad.sqrt(),
        })
    }

    fn apply(&self, factor: &SquareRootFactor, d: &[f64]) -> Vec<f64> {
        let fd = factor.apply(d);
        let cu = dot(&self.u, &fd);
        let cv = dot(&self.v, &fd);
        let mix: Vec<f64> = self
            .u
            .iter()
            .zip(&self.v)
            .map(|(u, v)| cu * u + cv * v)
            .collect();
        let back = factor.apply_transpose(&mix);
        let ca = dot(&self.ax, d) / self.s.powi(3);
        d.iter()
            .zip(&back)
            .zip(&self.ax)
            .map(|((di, bi), ai)| 2.0 * di - bi / self.s + ca * ai)
            .collect()
    }
}

/// Monte-Carlo check of `2I ⪰ H ⪰ ∇²f(x)` along `samples` random unit
/// directions. `v` lives in the factor's row space (length `rank`) and is
/// made feasible before use.
pub fn verify_surrogate_dominance<O: Operator + ?Sized>(
    op: &O,
    x: &[f64],
    v: &[f64],
    samples: usize,
    seed: u64,
) -> Result<DominanceCheck, TheoryError> {
    let factor = SquareRootFactor::new(op)?;
    let sur = Surrogate::new(op, &factor, x, v)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut lower_margin = f64::INFINITY;
    let mut upper_margin = f64::INFINITY;
    for _ in 0..samples {
        let mut d = gaussian(&mut rng, op.dim());
        let len = norm(&d);
        d.iter_mut().for_each(|v| *v /= len);
        let hd = sur.apply(&factor, &d);
        let hess = hessian_vec(op, x, &d)?;
        let dhd = dot(&d, &hd);
        lower_margin = lower_margin.min(dhd - dot(&d, &hess));
        upper_margin = upper_margin.min(2.0 - dhd);
    }
    Ok(DominanceCheck {
        holds: lower_margin >= -DOMINANCE_TOL && upper_margin >= -DOMINANCE_TOL,
        lower_margin,
        upper_margin,
        samples,
    })
}

/// `∇²f(x)` as a dense row-major matrix.
pub fn dense_hessian<O: Operator + ?Sized>(op: &O, x: &[f64]) -> Result<Vec<f64>, TheoryError> {
    let n = op.dim();
    let mut h = vec![0.0; n * n];
    let mut e = vec![0.0; n];
    for j in 0..n {
        e[j] = 1.0;
        let col = hessian_vec(op, x, &e)?;
        e[j] = 0.0;
        for i in 0..n {
            h[i * n + j] = col[i];
        }
    }
    Ok(h)
}

/// `H_x(u, v)` as a dense row-major matrix, `v` made feasible first.
pub fn dense_surrogate_hessian<O: Operator + ?Sized>(
    op: &O,
    factor: &SquareRootFactor,
    x: &[f64],
    v: &[f64],
) -> Result<Vec<f64>, TheoryError> {
    let n = op.dim();
    let sur = Surrogate::new(op, factor, x, v)?;
    let mut h = vec![0.0; n * n];
    let mut e = vec![0.0; n];
    for j in 0..n {
        e[j] = 1.0;
        let col = sur.apply(factor, &e);
        e[j] = 0.0;
        for i in 0..n {
            h[i * n + j] = col[i];
        }
    }
    Ok(h)
}

/// Smallest eigenvalue of `H_x(u, v) - ∇²f(x)`, by the Jacobi oracle.
pub fn surrogate_gap_min_eigenvalue<O: Operator + ?Sized>(
    op: &O,
    x: &[f64],
    v: &[f64],
) -> Result<f64, TheoryError> {
    let factor = SquareRootFactor::new(op)?;
    let h = dense_surrogate_hessian(op, &factor, x, v)?;
    let hess = dense_hessian(op, x)?;
    let diff: Vec<f64> = h.iter().zip(&hess).map(|(a, b)| a - b).collect();
    let eig = jacobi_eigen(op.dim(), &diff)?;
    Ok(*eig.eigenvalues.last().expect("nonempty"))
}

/// Split form against merged form of one Split-Merge step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VhatCheck {
    /// `x` is numerically an eigenvector; nothing was compared.
    pub skipped: bool,
    /// `|v̂'u|` with `u = Fx/‖Fx‖`.
    pub orthogonality: f64,
    /// `|‖v̂‖² - 1/ρ|`
    pub norm_sq_error: f64,
    /// Relative distance between `x - H⁻¹∇f(x)` and `ζAx + ωA²x`.
    pub update_rel_error: f64,
    /// Relative mismatch of `(A²x - cAx)'Ax = ‖F(Ax) - cFx‖²`.
    pub identity_rel_error: f64,
    pub holds: bool,
}

/// Builds `v̂ = (F(Ax) - cFx) / (√ρ ‖F(Ax) - cFx‖)` with `c = x'A²x / x'Ax`,
/// takes the explicit step `x - H⁻¹∇f(x)` using
/// `H⁻¹ = ½(I + gg' / (2s - g'g))`, `g = F'v̂`, and compares it with the
/// merged update at constant `ρ`.
pub fn verify_vhat_formula<O: Operator + ?Sized>(
    op: &O,
    x: &[f64],
    rho: f64,
) -> Result<VhatCheck, TheoryError> {
    let (coeffs, pair) = split_merge_coeffs(op, x, RhoPolicy::Constant(rho))?;
    if coeffs.degenerate {
        return Ok(VhatCheck {
            skipped: true,
            orthogonality: 0.0,
            norm_sq_error: 0.0,
            update_rel_error: 0.0,
            identity_rel_error: 0.0,
            holds: true,
        });
    }
    let merged = split_merge_step(&pair, &coeffs)?;

    let factor = SquareRootFactor::new(op)?;
    let w = &pair.ax;
    let z = &pair.a2x;
    let xw = dot(x, w);
    let c = dot(w, w) / xw;
    let fx = factor.apply(x);
    let fw = factor.apply(w);
    let r: Vec<f64> = fw.iter().zip(&fx).map(|(a, b)| a - c * b).collect();
    let rn = norm(&r);
    let vhat: Vec<f64> = r.iter().map(|ri| ri / (rho.sqrt() * rn)).collect();

    let orthogonality = dot(&vhat, &fx).abs() / norm(&fx);
    let norm_sq_error = (norm_sq(&vhat) - 1.0 / rho).abs();

    let lhs: f64 = z.iter().zip(w).map(|(zi, wi)| (zi - c * wi) * wi).sum();
    let rhs = rn * rn;
    let identity_rel_error = (lhs - rhs).abs() / rhs.abs().max(f64::MIN_POSITIVE);

    let s = xw.sqrt();
    let grad: Vec<f64> = x.iter().zip(w).map(|(xi, wi)| 2.0 * xi - wi / s).collect();
    let g = factor.apply_transpose(&vhat);
    let coupling = dot(&g, &grad) / (2.0 * s - norm_sq(&g));
    let explicit: Vec<f64> = x
        .iter()
        .zip(&grad)
        .zip(&g)
        .map(|((xi, di), gi)| xi - 0.5 * (di + coupling * gi))
        .collect();
    let diff: Vec<f64> = explicit.iter().zip(&merged).map(|(a, b)| a - b).collect();
    let update_rel_error = norm(&diff) / norm(&merged);

    Ok(VhatCheck {
        skipped: false,
        orthogonality,
        norm_sq_error,
        update_rel_error,
        identity_rel_error,
        holds: orthogonality <= 1e-10 && norm_sq_error <= 1e-10 && update_rel_error <= 1e-8,
    })
}
