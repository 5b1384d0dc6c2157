//! Split-Merge coefficients and the merged update `x⁺ = ζ Ax + ω A²x`.

use super::{breakdown_floor, guard_norm, SolverError};
use crate::linop::{LinopError, Operator};
use crate::objective::{clamped_quad_form, ObjectiveError};
use crate::vecops::{dot, norm, norm_sq};

/// `D <= DEGENERACY_TOL ‖A²x‖²` means `x` is numerically an eigenvector.
pub const DEGENERACY_TOL: f64 = 1e-14;
/// `ρ = SAFEGUARD_FACTOR γ/μ` once `γ/μ >= 1` under the default policy.
pub const SAFEGUARD_FACTOR: f64 = 1.2;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RhoPolicy {
    /// `ρ = 1`, raised to `1.2 γ/μ` when `γ/μ >= 1`.
    FixedOneWithSafeguard,
    /// `ρ = max(1, γ/μ + x'A²x / (2 (x'Ax)^{3/2})) + 1e-12`, which keeps `ζ >= 0`
    /// and so the contraction ratio `δ <= 1`.
    ConvergenceGuaranteed,
    /// Fixed `ρ`; a step with `σ <= 0` is an error.
    Constant(f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitMergeCoefficients {
    pub mu: f64,
    pub gamma: f64,
    pub sigma: f64,
    pub zeta: f64,
    pub omega: f64,
    pub rho: f64,
    /// The orthogonal component of `A²x` vanished; `(ζ, ω) = (1/μ, 0)`.
    pub degenerate: bool,
}

impl SplitMergeCoefficients {
    /// `-ζ/ω`, the root of the step polynomial `ζ + ωλ`. `None` when `ω = 0`.
    pub fn neg_zeta_over_omega(&self) -> Option<f64> {
        (self.omega != 0.0).then(|| -self.zeta / self.omega)
    }
}

/// Cached `Ax` and `A²x` for one step.
#[derive(Debug, Clone, PartialEq)]
pub struct KrylovPair {
    pub ax: Vec<f64>,
    pub a2x: Vec<f64>,
}

/// Computes `w = Ax`, `z = A²x` (two matvecs) and the coefficients at `x`.
pub fn split_merge_coeffs<O: Operator + ?Sized>(
    op: &O,
    x: &[f64],
    policy: RhoPolicy,
) -> Result<(SplitMergeCoefficients, KrylovPair), SolverError> {
    let w = op.apply(x)?;
    let z = op.apply(&w)?;
    let coeffs = coefficients_from_products(x, &w, &z, op.frobenius_norm(), policy)?;
    Ok((coeffs, KrylovPair { ax: w, a2x: z }))
}

/// Coefficients from precomputed `w = Ax` and `z = A²x`, using
/// `x'A²x = w'w` and `x'A³x = w'z`.
pub fn coefficients_from_products(
    x: &[f64],
    w: &[f64],
    z: &[f64],
    frobenius: f64,
    policy: RhoPolicy,
) -> Result<SplitMergeCoefficients, SolverError> {
    if w.len() != x.len() || z.len() != x.len() {
        return Err(LinopError::DimensionMismatch {
            expected: x.len(),
            found: if w.len() != x.len() { w.len() } else { z.len() },
        }
        .into());
    }
    let xx = norm_sq(x);
    if xx == 0.0 {
        return Err(ObjectiveError::ZeroVector.into());
    }
    let xw = clamped_quad_form(dot(x, w), frobenius, xx)?;
    let nw = norm(w);
    if nw <= breakdown_floor(frobenius, xx.sqrt()) || xw == 0.0 {
        return Err(ObjectiveError::NonDifferentiable { ax_norm: nw }.into());
    }
    let ww = dot(w, w);
    let wz = dot(w, z);
    let mu = 2.0 * xw.sqrt();
    let c = ww / xw;
    let denom = wz - ww * ww / xw;

    if denom <= DEGENERACY_TOL * norm_sq(z) {
        return Ok(SplitMergeCoefficients {
            mu,
            gamma: 0.0,
            sigma: 1.0,
            zeta: 1.0 / mu,
            omega: 0.0,
            rho: 1.0,
            degenerate: true,
        });
    }

    let numer: f64 = z.iter().zip(w).map(|(zi, wi)| (zi - c * wi).powi(2)).sum();
    let gamma = numer / denom;
    let ratio = gamma / mu;
    let rho = match policy {
        RhoPolicy::FixedOneWithSafeguard => {
            if ratio >= 1.0 {
                SAFEGUARD_FACTOR * ratio
            } else {
                1.0
            }
        }
        RhoPolicy::ConvergenceGuaranteed => (ratio + ww / (2.0 * xw.powf(1.5))).max(1.0) + 1e-12,
        RhoPolicy::Constant(v) => v,
    };
    let sigma = 1.0 - ratio / rho;
    if !(sigma > 0.0) {
        return Err(SolverError::NotPositiveDefinite { sigma, rho });
    }
    let zeta = 1.0 / mu - 4.0 * ww / (mu.powi(4) * sigma * rho);
    let omega = 1.0 / (mu * mu * sigma * rho);
    Ok(SplitMergeCoefficients {
        mu,
        gamma,
        sigma,
        zeta,
        omega,
        rho,
        degenerate: false,
    })
}

/// `ζ Ax + ω A²x`, unnormalized. No matvecs.
pub fn split_merge_step(
    pair: &KrylovPair,
    coeffs: &SplitMergeCoefficients,
) -> Result<Vec<f64>, SolverError> {
    let next: Vec<f64> = if coeffs.omega == 0.0 {
        pair.ax.iter().map(|w| coeffs.zeta * w).collect()
    } else {
        pair.ax
            .iter()
            .zip(&pair.a2x)
            .map(|(w, z)| coeffs.zeta * w + coeffs.omega * z)
            .collect()
    };
    guard_norm(&next)?;
    Ok(next)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linop::LinearOperator;
    use crate::solvers::power_step;
    use crate::vecops::cosine;

    fn diag(d: &[f64]) -> LinearOperator {
        LinearOperator::diagonal(d).unwrap()
    }

    const H: f64 = std::f64::consts::FRAC_1_SQRT_2;

    #[test]
    fn two_by_two_coefficients() {
        let a = diag(&[2.0, 1.0]);
        let (c, pair) = split_merge_coeffs(&a, &[H, H], RhoPolicy::FixedOneWithSafeguard).unwrap();
        assert_eq!(a.matvec_count(), 2);
        assert!(!c.degenerate);
        assert!((c.mu - 2.449_489_742_783_178).abs() < 1e-14);
        assert!((c.gamma - 4.0 / 3.0).abs() < 1e-14);
        assert_eq!(c.rho, 1.0);
        assert!((c.sigma - 0.455_668_946_048_182_6).abs() < 1e-14);
        assert!((c.zeta + 0.201_356_072_938_170_15).abs() < 1e-14);
        assert!((c.omega - 0.365_762_618_041_219_9).abs() < 1e-14);

        let x1 = split_merge_step(&pair, &c).unwrap();
        assert_eq!(a.matvec_count(), 2);
        assert!((x1[0] - 0.749_772_420_870_620_2).abs() < 1e-14);
        assert!((x1[1] - 0.116_252_982_913_818_46).abs() < 1e-14);
        let sin1 = x1[1].abs() / norm(&x1);
        assert!((sin1 - 0.153_220_194_440_473_09).abs() < 1e-13);
        // one power step from the same point only reaches 1/√5
        let p = power_step(&a, &[H, H]).unwrap();
        assert!(sin1 < p[1]);
    }

    #[test]
    fn convergence_policy_rho() {
        let a = diag(&[2.0, 1.0]);
        let (c, _) = split_merge_coeffs(&a, &[H, H], RhoPolicy::ConvergenceGuaranteed).unwrap();
        assert!((c.rho - 1.224_744_871_391_589).abs() < 1e-12);
        assert!(c.zeta >= 0.0);
    }

    #[test]
    fn eigenvector_is_degenerate() {
        let a = diag(&[2.0, 1.0]);
        let (c, pair) =
            split_merge_coeffs(&a, &[1.0, 0.0], RhoPolicy::FixedOneWithSafeguard).unwrap();
        assert!(c.degenerate);
        assert_eq!(c.omega, 0.0);
        assert!((c.mu - 2.0 * 2f64.sqrt()).abs() < 1e-15);
        assert!((c.zeta - 1.0 / (2.0 * 2f64.sqrt())).abs() < 1e-15);
        assert!(c.neg_zeta_over_omega().is_none());
        // DCA iterate Ax / (2 (x'Ax)^{1/2})
        let x1 = split_merge_step(&pair, &c).unwrap();
        assert!((x1[0] - 2.0 / (2.0 * 2f64.sqrt())).abs() < 1e-15);
    }

    #[test]
    fn zero_omega_step_is_collinear_with_power() {
        let a = diag(&[3.0, 1.5, 0.2]);
        let x = [0.4, -0.9, 1.3];
        let (c, pair) = split_merge_coeffs(&a, &x, RhoPolicy::FixedOneWithSafeguard).unwrap();
        let reduced = SplitMergeCoefficients {
            omega: 0.0,
            zeta: 1.0 / c.mu,
            ..c
        };
        let y = split_merge_step(&pair, &reduced).unwrap();
        assert!(1.0 - cosine(&y, &power_step(&a, &x).unwrap()) <= 1e-12);
    }

    #[test]
    fn constant_rho_rejects_indefinite_surrogate() {
        let a = diag(&[2.0, 1.0]);
        // γ/μ ≈ 0.544, so ρ = 0.5 gives σ < 0
        let err = split_merge_coeffs(&a, &[H, H], RhoPolicy::Constant(0.5)).unwrap_err();
        assert!(matches!(err, SolverError::NotPositiveDefinite { .. }));
        let (c, _) = split_merge_coeffs(&a, &[H, H], RhoPolicy::Constant(2.0)).unwrap();
        assert_eq!(c.rho, 2.0);
        assert!(c.sigma > 0.0);
    }

    #[test]
    fn safeguard_kicks_in() {
        // an iterate far below minimizer scale has a large γ/μ
        let a = diag(&[1.0, 0.5, 0.1]);
        let x = [1e-3, 1e-3, 1e-3];
        let (c, _) = split_merge_coeffs(&a, &x, RhoPolicy::FixedOneWithSafeguard).unwrap();
        assert!(c.gamma / c.mu >= 1.0);
        assert!((c.rho - SAFEGUARD_FACTOR * c.gamma / c.mu).abs() < 1e-12 * c.rho);
        assert!((c.sigma - (1.0 - 1.0 / SAFEGUARD_FACTOR)).abs() < 1e-12);
    }

    #[test]
    fn nullspace_point_is_rejected() {
        let a = diag(&[1.0, 0.0]);
        let err =
            split_merge_coeffs(&a, &[0.0, 1.0], RhoPolicy::FixedOneWithSafeguard).unwrap_err();
        assert!(matches!(
            err,
            SolverError::Objective(ObjectiveError::NonDifferentiable { .. })
        ));
    }

    #[test]
    fn overflow_guard() {
        let pair = KrylovPair {
            ax: vec![1e200, 0.0],
            a2x: vec![0.0, 0.0],
        };
        let c = SplitMergeCoefficients {
            mu: 1.0,
            gamma: 0.0,
            sigma: 1.0,
            zeta: 1.0,
            omega: 0.0,
            rho: 1.0,
            degenerate: true,
        };
        assert!(matches!(
            split_merge_step(&pair, &c),
            Err(SolverError::Overflow { .. })
        ));
    }
}
