use super::{LinearOperator, LinopError, Operator};

/// Which way the base operator is shifted.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ShiftDirection {
    /// `A + ηI`, for the largest eigenvalue of an indefinite `A`.
    Up,
    /// `ηI - A`, turning the smallest eigenvalue of `A` into the dominant one.
    Flip,
}

/// `A + ηI` or `-(A - ηI)` applied without materializing the shift.
#[derive(Debug, Clone)]
pub struct ShiftedOperator {
    base: LinearOperator,
    eta: f64,
    direction: ShiftDirection,
}

impl ShiftedOperator {
    pub fn new(base: LinearOperator, eta: f64, direction: ShiftDirection) -> Self {
        Self {
            base,
            eta,
            direction,
        }
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    pub fn direction(&self) -> ShiftDirection {
        self.direction
    }

    pub fn base(&self) -> &LinearOperator {
        &self.base
    }

    pub fn into_base(self) -> LinearOperator {
        self.base
    }

    /// Maps an eigenvalue of the shifted operator back to one of the base.
    pub fn unshift(&self, value: f64) -> f64 {
        match self.direction {
            ShiftDirection::Up => value - self.eta,
            ShiftDirection::Flip => self.eta - value,
        }
    }

    fn sign(&self) -> f64 {
        match self.direction {
            ShiftDirection::Up => 1.0,
            ShiftDirection::Flip => -1.0,
        }
    }
}

impl Operator for ShiftedOperator {
    fn dim(&self) -> usize {
        self.base.dim()
    }

    fn apply_into(&self, x: &[f64], y: &mut [f64]) -> Result<(), LinopError> {
        self.base.apply_into(x, y)?;
        let s = self.sign();
        for (yi, xi) in y.iter_mut().zip(x) {
            *yi = s * *yi + self.eta * xi;
        }
        Ok(())
    }

    fn matvec_count(&self) -> u64 {
        self.base.matvec_count()
    }

    fn frobenius_norm(&self) -> f64 {
        // ‖sA + ηI‖² = ‖A‖² + 2sη tr(A) + nη²
        let fa = self.base.frobenius_norm();
        let n = self.base.dim() as f64;
        let sq =
            fa * fa + 2.0 * self.sign() * self.eta * self.base.trace() + n * self.eta * self.eta;
        sq.max(0.0).sqrt()
    }

    fn to_dense(&self) -> Vec<f64> {
        let n = self.dim();
        let s = self.sign();
        let mut a = self.base.to_dense();
        for v in a.iter_mut() {
            *v *= s;
        }
        for i in 0..n {
            a[i * n + i] += self.eta;
        }
        a
    }

    fn gershgorin_rows(&self) -> Vec<(f64, f64)> {
        let s = self.sign();
        self.base
            .gershgorin_rows()
            .into_iter()
            .map(|(d, off)| (s * d + self.eta, off))
            .collect()
    }
}

/// Shifts `A` by `η = max(0, -min_i(a_ii - Σ_{j≠i}|a_ij|))` so every
/// Gershgorin disc, hence every eigenvalue, lies in `[0, ∞)`.
pub fn gershgorin_shift(op: LinearOperator) -> ShiftedOperator {
    let lowest = op
        .gershgorin_rows()
        .iter()
        .map(|(d, off)| d - off)
        .fold(f64::INFINITY, f64::min);
    let eta = (-lowest).max(0.0);
    ShiftedOperator::new(op, eta, ShiftDirection::Up)
}

/// `ηI - A` with `η = max(0, max_i(a_ii + Σ_{j≠i}|a_ij|))`; the dominant
/// eigenvector of the result belongs to the smallest eigenvalue of `A`.
pub fn negated_gershgorin_shift(op: LinearOperator) -> ShiftedOperator {
    let highest = op
        .gershgorin_rows()
        .iter()
        .map(|(d, off)| d + off)
        .fold(f64::NEG_INFINITY, f64::max);
    ShiftedOperator::new(op, highest.max(0.0), ShiftDirection::Flip)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linop::{check_psd, gaussian};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn shift_of_antidiagonal() {
        let a = LinearOperator::from_rows(&[vec![0.0, 2.0], vec![2.0, 0.0]]).unwrap();
        let s = gershgorin_shift(a);
        assert_eq!(s.eta(), 2.0);
        // eigenvectors (1,1) and (1,-1) scale by 4 and 0
        assert_eq!(s.apply(&[1.0, 1.0]).unwrap(), vec![4.0, 4.0]);
        assert_eq!(s.apply(&[1.0, -1.0]).unwrap(), vec![0.0, 0.0]);
    }

    #[test]
    fn psd_input_is_unchanged() {
        let s = gershgorin_shift(LinearOperator::diagonal(&[1.0, 3.0]).unwrap());
        assert_eq!(s.eta(), 0.0);
        assert_eq!(s.apply(&[1.0, 1.0]).unwrap(), vec![1.0, 3.0]);
    }

    #[test]
    fn negative_diagonal_shift() {
        let s = gershgorin_shift(LinearOperator::diagonal(&[-1.0, -2.0]).unwrap());
        assert_eq!(s.eta(), 2.0);
        assert_eq!(s.to_dense(), vec![1.0, 0.0, 0.0, 0.0]);
    }

    #[test]
    fn flip_targets_smallest_eigenvalue() {
        let s = negated_gershgorin_shift(LinearOperator::diagonal(&[1.0, 3.0]).unwrap());
        assert_eq!(s.eta(), 3.0);
        assert_eq!(s.to_dense(), vec![2.0, 0.0, 0.0, 0.0]);
        assert_eq!(s.unshift(2.0), 1.0);
    }

    #[test]
    fn frobenius_matches_materialized() {
        let a = LinearOperator::from_rows(&[vec![1.0, -2.0], vec![-2.0, 0.5]]).unwrap();
        for s in [gershgorin_shift(a.clone()), negated_gershgorin_shift(a)] {
            let dense = s.to_dense();
            let direct = dense.iter().map(|v| v * v).sum::<f64>().sqrt();
            assert!((s.frobenius_norm() - direct).abs() < 1e-12);
        }
    }

    #[test]
    fn shifted_random_matrices_pass_psd_probe() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for t in 0..100u64 {
            let n = 1 + (t as usize * 7) % 32;
            let g = gaussian(&mut rng, n * n);
            let mut a = vec![0.0; n * n];
            for i in 0..n {
                for j in 0..n {
                    a[i * n + j] = 0.5 * (g[i * n + j] + g[j * n + i]);
                }
            }
            let s = gershgorin_shift(LinearOperator::dense(n, a).unwrap());
            check_psd(&s, 16, t).unwrap();
        }
    }
}
