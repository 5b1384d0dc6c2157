//! Cyclic Jacobi eigensolver for dense symmetric matrices.

use super::TheoryError;

/// Sweep limit before the oracle gives up.
pub const MAX_SWEEPS: usize = 50;
/// Stop when the off-diagonal Frobenius mass falls below this fraction of `‖A‖_F`.
pub const OFF_DIAGONAL_TOL: f64 = 1e-13;

/// Raw eigen-decomposition: eigenvalues sorted descending, eigenvectors as
/// columns in matching order. No clamping is applied.
#[derive(Debug, Clone)]
pub struct SymmetricEigen {
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: Vec<Vec<f64>>,
    pub sweeps: usize,
}

/// Diagonalizes the row-major symmetric matrix `a` (`n*n` values) by cyclic
/// Jacobi rotations.
pub fn jacobi_eigen(n: usize, a: &[f64]) -> Result<SymmetricEigen, TheoryError> {
    assert_eq!(a.len(), n * n, "matrix must hold n*n values");
    let mut m = a.to_vec();
    // symmetrize exactly; the rotations assume it
    for i in 0..n {
        for j in 0..i {
            let avg = 0.5 * (m[i * n + j] + m[j * n + i]);
            m[i * n + j] = avg;
            m[j * n + i] = avg;
        }
    }
    let mut v = vec![0.0; n * n];
    for i in 0..n {
        v[i * n + i] = 1.0;
    }
    let scale = m.iter().map(|x| x * x).sum::<f64>().sqrt();

    let mut sweeps = 0;
    loop {
        let off = off_diagonal_norm(n, &m);
        if off <= OFF_DIAGONAL_TOL * scale {
            break;
        }
        if sweeps == MAX_SWEEPS {
            return Err(TheoryError::OracleFailure {
                sweeps,
                off_diagonal: off,
            });
        }
        sweeps += 1;
        for p in 0..n {
            for q in (p + 1)..n {
                rotate(n, &mut m, &mut v, p, q);
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| m[j * n + j].total_cmp(&m[i * n + i]));
    let eigenvalues = order.iter().map(|&i| m[i * n + i]).collect();
    let eigenvectors = order
        .iter()
        .map(|&c| (0..n).map(|r| v[r * n + c]).collect())
        .collect();
    Ok(SymmetricEigen {
        eigenvalues,
        eigenvectors,
        sweeps,
    })
}

fn off_diagonal_norm(n: usize, m: &[f64]) -> f64 {
    let mut s = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                s += m[i * n + j] * m[i * n + j];
            }
        }
    }
    s.sqrt()
}

/// Annihilates `m[p][q]` with `m <- J' m J` and accumulates `v <- v J`.
fn rotate(n: usize, m: &mut [f64], v: &mut [f64], p: usize, q: usize) {
    let apq = m[p * n + q];
    if apq == 0.0 {
        return;
    }
    let app = m[p * n + p];
    let aqq = m[q * n + q];
    let theta = (aqq - app) / (2.0 * apq);
    let t = if theta.abs() > 1e150 {
        0.5 / theta
    } else {
        theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt())
    };
    let c = 1.0 / (t * t + 1.0).sqrt();
    let s = t * c;

    for k in 0..n {
        let mkp = m[k * n + p];
        let mkq = m[k * n + q];
        m[k * n + p] = c * mkp - s * mkq;
        m[k * n + q] = s * mkp + c * mkq;
    }
    for k in 0..n {
        let mpk = m[p * n + k];
        let mqk = m[q * n + k];
        m[p * n + k] = c * mpk - s * mqk;
        m[q * n + k] = s * mpk + c * mqk;
    }
    m[p * n + q] = 0.0;
    m[q * n + p] = 0.0;
    for k in 0..n {
        let vkp = v[k * n + p];
        let vkq = v[k * n + q];
        v[k * n + p] = c * vkp - s * vkq;
        v[k * n + q] = s * vkp + c * vkq;
    }
}
