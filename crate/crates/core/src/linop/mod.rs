//! Matrix-free symmetric operators.
//!
//! Every solver in this crate touches the matrix only through [`Operator`],
//! which exposes `y = A x` and a matvec tally. Two storage backends are
//! provided: full row-major dense storage and CSR holding both triangles of
//! the symmetric pattern, so a product is always a single pass.

mod market;
mod shift;

use std::sync::atomic::{AtomicU64, Ordering};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use thiserror::Error;

use crate::vecops::{dot, norm, norm_sq};

pub use market::{load_matrix_market, parse_matrix_market, write_matrix_market};
pub use shift::{gershgorin_shift, negated_gershgorin_shift, ShiftDirection, ShiftedOperator};

/// Relative tolerance of the symmetry probe.
pub const SYMMETRY_PROBE_TOL: f64 = 1e-10;
/// Relative tolerance of the PSD probe.
pub const PSD_PROBE_TOL: f64 = 1e-10;

#[derive(Debug, Error)]
pub enum LinopError {
    #[error("dimension mismatch: operator is {expected}x{expected}, vector has length {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("operator dimension must be positive")]
    EmptyOperator,
    #[error("dense storage needs {expected} values, got {found}")]
    BadDenseLength { expected: usize, found: usize },
    #[error("entry ({row}, {col}) is outside a {n}x{n} operator")]
    IndexOutOfRange { row: usize, col: usize, n: usize },
    #[error("matrix is not symmetric: a({row},{col}) = {upper} but a({col},{row}) = {lower}")]
    Asymmetric {
        row: usize,
        col: usize,
        upper: f64,
        lower: f64,
    },
    #[error("symmetry probe failed: |u'Aw - w'Au| = {defect:.3e} exceeds {bound:.3e}")]
    SymmetryProbe { defect: f64, bound: f64 },
    #[error("PSD probe failed: x'Ax = {quad:.3e} below {bound:.3e}")]
    PsdProbe { quad: f64, bound: f64 },
    #[error("matrix market: malformed header: {0}")]
    MalformedHeader(String),
    #[error("matrix market: unsupported variant: {0}")]
    Unsupported(String),
    #[error("matrix market: matrix is {rows}x{cols}, expected square")]
    NonSquare { rows: usize, cols: usize },
    #[error("matrix market: line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

/// A symmetric linear map `x -> A x` on `R^n`.
///
/// Implementations must count every successful call to [`Operator::apply_into`]
/// exactly once; benchmark speed-ups in matvec units depend on it.
pub trait Operator: Send + Sync {
    fn dim(&self) -> usize;

    /// Writes `A x` into `y`.
    fn apply_into(&self, x: &[f64], y: &mut [f64]) -> Result<(), LinopError>;

    /// Total number of products computed so far.
    fn matvec_count(&self) -> u64;

    fn frobenius_norm(&self) -> f64;

    /// Row-major dense copy of the operator. Does not touch the matvec tally.
    fn to_dense(&self) -> Vec<f64>;

    /// `(a_ii, sum_{j != i} |a_ij|)` for every row.
    fn gershgorin_rows(&self) -> Vec<(f64, f64)>;

    fn apply(&self, x: &[f64]) -> Result<Vec<f64>, LinopError> {
        let mut y = vec![0.0; self.dim()];
        self.apply_into(x, &mut y)?;
        Ok(y)
    }
}

#[derive(Debug, Clone)]
enum Backend {
    /// Full `n*n` row-major values.
    Dense(Vec<f64>),
    /// CSR with both triangles stored.
    Csr {
        row_ptr: Vec<usize>,
        col_idx: Vec<usize>,
        values: Vec<f64>,
    },
}

/// Symmetric operator with dense or sparse storage.
#[derive(Debug)]
pub struct LinearOperator {
    n: usize,
    backend: Backend,
    frobenius: f64,
    symmetry_checked: bool,
    matvecs: AtomicU64,
}

impl Clone for LinearOperator {
    fn clone(&self) -> Self {
        Self {
            n: self.n,
            backend: self.backend.clone(),
            frobenius: self.frobenius,
            symmetry_checked: self.symmetry_checked,
            matvecs: AtomicU64::new(0),
        }
    }
}

impl LinearOperator {
    /// Builds a dense operator from `n*n` row-major values.
    ///
    /// Entries must already be symmetric to within `1e-12` relative; the
    /// stored matrix is the exact average `(A + A^T) / 2`.
    pub fn dense(n: usize, values: Vec<f64>) -> Result<Self, LinopError> {
        if n == 0 {
            return Err(LinopError::EmptyOperator);
        }
        if values.len() != n * n {
            return Err(LinopError::BadDenseLength {
                expected: n * n,
                found: values.len(),
            });
        }
        let mut values = values;
        for i in 0..n {
            for j in (i + 1)..n {
                let (a, b) = (values[i * n + j], values[j * n + i]);
                if !symmetric_pair(a, b) {
                    return Err(LinopError::Asymmetric {
                        row: i + 1,
                        col: j + 1,
                        upper: a,
                        lower: b,
                    });
                }
                let avg = 0.5 * (a + b);
                values[i * n + j] = avg;
                values[j * n + i] = avg;
            }
        }
        let frobenius = norm(&values);
        Ok(Self {
            n,
            backend: Backend::Dense(values),
            frobenius,
            symmetry_checked: true,
            matvecs: AtomicU64::new(0),
        })
    }

    /// Dense operator from nested rows.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self, LinopError> {
        let n = rows.len();
        let mut values = Vec::with_capacity(n * n);
        for row in rows {
            if row.len() != n {
                return Err(LinopError::NonSquare {
                    rows: n,
                    cols: row.len(),
                });
            }
            values.extend_from_slice(row);
        }
        Self::dense(n, values)
    }

    pub fn diagonal(diag: &[f64]) -> Result<Self, LinopError> {
        let n = diag.len();
        let mut values = vec![0.0; n * n];
        for (i, d) in diag.iter().enumerate() {
            values[i * n + i] = *d;
        }
        Self::dense(n, values)
    }

    /// Builds a CSR operator from 0-based `(row, col, value)` triplets.
    ///
    /// With `mirror = true` each off-diagonal triplet is also stored at its
    /// transposed position (the input lists one triangle). Otherwise the
    /// triplets must describe a symmetric matrix; duplicates are summed.
    pub fn csr_from_triplets(
        n: usize,
        triplets: &[(usize, usize, f64)],
        mirror: bool,
    ) -> Result<Self, LinopError> {
        if n == 0 {
            return Err(LinopError::EmptyOperator);
        }
        let mut entries: Vec<(usize, usize, f64)> = Vec::with_capacity(triplets.len() * 2);
        for &(i, j, v) in triplets {
            if i >= n || j >= n {
                return Err(LinopError::IndexOutOfRange {
                    row: i + 1,
                    col: j + 1,
                    n,
                });
            }
            entries.push((i, j, v));
            if mirror && i != j {
                entries.push((j, i, v));
            }
        }
        entries.sort_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
        let mut merged: Vec<(usize, usize, f64)> = Vec::with_capacity(entries.len());
        for (i, j, v) in entries {
            match merged.last_mut() {
                Some(last) if last.0 == i && last.1 == j => last.2 += v,
                _ => merged.push((i, j, v)),
            }
        }

        if !mirror {
            for &(i, j, v) in &merged {
                if i >= j {
                    continue;
                }
                let other = merged
                    .binary_search_by(|e| (e.0, e.1).cmp(&(j, i)))
                    .map(|p| merged[p].2)
                    .unwrap_or(0.0);
                if !symmetric_pair(v, other) {
                    return Err(LinopError::Asymmetric {
                        row: i + 1,
                        col: j + 1,
                        upper: v,
                        lower: other,
                    });
                }
            }
            // lower-triangle entries with no upper partner
            for &(i, j, v) in &merged {
                if i > j
                    && merged
                        .binary_search_by(|e| (e.0, e.1).cmp(&(j, i)))
                        .is_err()
                    && v != 0.0
                {
                    return Err(LinopError::Asymmetric {
                        row: j + 1,
                        col: i + 1,
                        upper: 0.0,
                        lower: v,
                    });
                }
            }
            // store the exact symmetric average
            let snapshot = merged.clone();
            for e in merged.iter_mut() {
                if e.0 != e.1 {
                    if let Ok(p) = snapshot.binary_search_by(|s| (s.0, s.1).cmp(&(e.1, e.0))) {
                        e.2 = 0.5 * (e.2 + snapshot[p].2);
                    }
                }
            }
        }

        let mut row_ptr = vec![0usize; n + 1];
        let mut col_idx = Vec::with_capacity(merged.len());
        let mut values = Vec::with_capacity(merged.len());
        for &(i, j, v) in &merged {
            row_ptr[i + 1] += 1;
            col_idx.push(j);
            values.push(v);
        }
        for i in 0..n {
            row_ptr[i + 1] += row_ptr[i];
        }
        let frobenius = norm(&values);
        Ok(Self {
            n,
            backend: Backend::Csr {
                row_ptr,
                col_idx,
                values,
            },
            frobenius,
            symmetry_checked: true,
            matvecs: AtomicU64::new(0),
        })
    }

    pub fn identity_csr(n: usize) -> Result<Self, LinopError> {
        let t: Vec<_> = (0..n).map(|i| (i, i, 1.0)).collect();
        Self::csr_from_triplets(n, &t, true)
    }

    pub fn is_sparse(&self) -> bool {
        matches!(self.backend, Backend::Csr { .. })
    }

    pub fn nnz(&self) -> usize {
        match &self.backend {
            Backend::Dense(v) => v.iter().filter(|x| **x != 0.0).count(),
            Backend::Csr { values, .. } => values.len(),
        }
    }

    pub fn symmetry_checked(&self) -> bool {
        self.symmetry_checked
    }

    pub fn trace(&self) -> f64 {
        self.gershgorin_rows().iter().map(|r| r.0).sum()
    }

    /// Lower-triangle `(row, col, value)` entries, 0-based, zeros skipped.
    pub fn lower_triplets(&self) -> Vec<(usize, usize, f64)> {
        let n = self.n;
        let mut out = Vec::new();
        match &self.backend {
            Backend::Dense(v) => {
                for j in 0..n {
                    for i in j..n {
                        let a = v[i * n + j];
                        if a != 0.0 {
                            out.push((i, j, a));
                        }
                    }
                }
            }
            Backend::Csr {
                row_ptr,
                col_idx,
                values,
            } => {
                for i in 0..n {
                    for p in row_ptr[i]..row_ptr[i + 1] {
                        if col_idx[p] <= i && values[p] != 0.0 {
                            out.push((i, col_idx[p], values[p]));
                        }
                    }
                }
                out.sort_by(|a, b| (a.1, a.0).cmp(&(b.1, b.0)));
            }
        }
        out
    }
}

impl Operator for LinearOperator {
    fn dim(&self) -> usize {
        self.n
    }

    fn apply_into(&self, x: &[f64], y: &mut [f64]) -> Result<(), LinopError> {
        check_len(self.n, x.len())?;
        check_len(self.n, y.len())?;
        let n = self.n;
        match &self.backend {
            Backend::Dense(a) => {
                for (row, yi) in a.chunks_exact(n).zip(y.iter_mut()) {
                    *yi = dot(row, x);
                }
            }
            Backend::Csr {
                row_ptr,
                col_idx,
                values,
            } => {
                for (i, yi) in y.iter_mut().enumerate() {
                    let (lo, hi) = (row_ptr[i], row_ptr[i + 1]);
                    *yi = col_idx[lo..hi]
                        .iter()
                        .zip(&values[lo..hi])
                        .map(|(&j, &v)| v * x[j])
                        .sum();
                }
            }
        }
        self.matvecs.fetch_add(1, Ordering::Relaxed);
        Ok(())
    }

    fn matvec_count(&self) -> u64 {
        self.matvecs.load(Ordering::Relaxed)
    }

    fn frobenius_norm(&self) -> f64 {
        self.frobenius
    }

    fn to_dense(&self) -> Vec<f64> {
        match &self.backend {
            Backend::Dense(a) => a.clone(),
            Backend::Csr {
                row_ptr,
                col_idx,
                values,
            } => {
                let n = self.n;
                let mut out = vec![0.0; n * n];
                for i in 0..n {
                    for p in row_ptr[i]..row_ptr[i + 1] {
                        out[i * n + col_idx[p]] += values[p];
                    }
                }
                out
            }
        }
    }

    fn gershgorin_rows(&self) -> Vec<(f64, f64)> {
        let n = self.n;
        match &self.backend {
            Backend::Dense(a) => a
                .chunks_exact(n)
                .enumerate()
                .map(|(i, row)| {
                    let off: f64 = row
                        .iter()
                        .enumerate()
                        .filter(|(j, _)| *j != i)
                        .map(|(_, v)| v.abs())
                        .sum();
                    (row[i], off)
                })
                .collect(),
            Backend::Csr {
                row_ptr,
                col_idx,
                values,
            } => (0..n)
                .map(|i| {
                    let mut diag = 0.0;
                    let mut off = 0.0;
                    for p in row_ptr[i]..row_ptr[i + 1] {
                        if col_idx[p] == i {
                            diag += values[p];
                        } else {
                            off += values[p].abs();
                        }
                    }
                    (diag, off)
                })
                .collect(),
        }
    }
}

fn check_len(expected: usize, found: usize) -> Result<(), LinopError> {
    if expected == found {
        Ok(())
    } else {
        Err(LinopError::DimensionMismatch { expected, found })
    }
}

/// `1e-12` relative agreement of a mirrored pair.
fn symmetric_pair(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-12 * a.abs().max(b.abs())
}

/// Probes `|u'(Aw) - w'(Au)| <= 1e-10 ‖A‖_F ‖u‖ ‖w‖` on random Gaussian pairs.
///
/// Consumes `2 * probes` matvecs.
pub fn check_symmetry<O: Operator + ?Sized>(
    op: &O,
    probes: usize,
    seed: u64,
) -> Result<(), LinopError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = op.dim();
    for _ in 0..probes {
        let u = gaussian(&mut rng, n);
        let w = gaussian(&mut rng, n);
        let aw = op.apply(&w)?;
        let au = op.apply(&u)?;
        let defect = (dot(&u, &aw) - dot(&w, &au)).abs();
        let bound = SYMMETRY_PROBE_TOL * op.frobenius_norm() * norm(&u) * norm(&w);
        if defect > bound {
            return Err(LinopError::SymmetryProbe { defect, bound });
        }
    }
    Ok(())
}

/// Probes `x'Ax >= -1e-10 ‖A‖_F ‖x‖²` on random Gaussian vectors.
pub fn check_psd<O: Operator + ?Sized>(op: &O, probes: usize, seed: u64) -> Result<(), LinopError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = op.dim();
    for _ in 0..probes {
        let x = gaussian(&mut rng, n);
        let ax = op.apply(&x)?;
        let quad = dot(&x, &ax);
        let bound = -PSD_PROBE_TOL * op.frobenius_norm() * norm_sq(&x);
        if quad < bound {
            return Err(LinopError::PsdProbe { quad, bound });
        }
    }
    Ok(())
}

pub(crate) fn gaussian(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| StandardNormal.sample(rng)).collect()
}
