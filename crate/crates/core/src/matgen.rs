//! Synthetic PSD matrices `A = U diag(λ) U'` with a prescribed eigengap.
//!
//! `U` is the sign-fixed Q factor of a standard-normal matrix (Haar
//! distributed). The spectrum is `λ₁ = 1`, `λ₂ = 1 - Δ`, and a tail drawn
//! uniformly from `(0, 1 - Δ)` and sorted in decreasing order.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::linop::{gaussian, LinearOperator, LinopError};
use crate::theory::Spectrum;

/// Minimum distance between any two generated eigenvalues.
pub const MIN_SEPARATION: f64 = 1e-12;
/// ChaCha8 stream used for generation. Start vectors draw from stream 0 with
/// the same seed; sharing it would make `x₀` the first column of `U`.
pub const MATGEN_STREAM: u64 = 1;

#[derive(Debug, Error)]
pub enum MatgenError {
    #[error("gap must lie in (0, 1), got {0}")]
    Gap(f64),
    #[error("dimension must be at least 2, got {0}")]
    Dimension(usize),
    #[error(transparent)]
    Linop(#[from] LinopError),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SyntheticSpec {
    pub n: usize,
    pub gap: f64,
    pub seed: u64,
}

impl SyntheticSpec {
    pub fn new(n: usize, gap: f64, seed: u64) -> Self {
        Self { n, gap, seed }
    }

    /// Always 1.
    pub fn lambda1(&self) -> f64 {
        1.0
    }

    pub fn validate(&self) -> Result<(), MatgenError> {
        if self.n < 2 {
            return Err(MatgenError::Dimension(self.n));
        }
        if !(self.gap > 0.0 && self.gap < 1.0) {
            return Err(MatgenError::Gap(self.gap));
        }
        Ok(())
    }
}

/// Haar-random orthogonal matrix: QR of a Gaussian matrix with each column
/// of Q flipped so the matching diagonal entry of R is positive.
pub fn haar_orthogonal(n: usize, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
    let g = DMatrix::from_column_slice(n, n, &gaussian(rng, n * n));
    let qr = g.qr();
    let r = qr.r();
    let mut q = qr.q();
    for j in 0..n {
        if r[(j, j)] < 0.0 {
            q.column_mut(j).neg_mut();
        }
    }
    q
}

/// `(1, 1 - Δ, tail...)` in decreasing order.
fn draw_spectrum(n: usize, gap: f64, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let top = 1.0 - gap;
    let mut tail = Vec::with_capacity(n - 2);
    while tail.len() < n - 2 {
        let v: f64 = rng.random::<f64>() * top;
        if v > 0.0 && top - v >= MIN_SEPARATION {
            tail.push(v);
        }
    }
    tail.sort_by(|a, b| b.total_cmp(a));
    // nudge near-collisions apart; uniform draws make this vanishingly rare
    for i in 1..tail.len() {
        if tail[i - 1] - tail[i] < MIN_SEPARATION {
            tail[i] = tail[i - 1] - MIN_SEPARATION;
        }
    }
    let mut values = vec![1.0, top];
    values.extend(tail);
    values
}

/// Returns the dense operator and the exact spectrum used to build it.
pub fn generate(spec: &SyntheticSpec) -> Result<(LinearOperator, Spectrum), MatgenError> {
    spec.validate()?;
    let n = spec.n;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    rng.set_stream(MATGEN_STREAM);
    let u = haar_orthogonal(n, &mut rng);
    let values = draw_spectrum(n, spec.gap, &mut rng);

    let scaled = &u * DMatrix::from_diagonal(&DVector::from_column_slice(&values));
    let m = scaled * u.transpose();
    let mut dense = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            dense[i * n + j] = 0.5 * (m[(i, j)] + m[(j, i)]);
        }
    }
    let op = LinearOperator::dense(n, dense)?;
    let vectors = (0..n)
        .map(|j| u.column(j).iter().copied().collect())
        .collect();
    Ok((op, Spectrum::new(values, vectors)))
}
