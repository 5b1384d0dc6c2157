#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use splitmerge::LinearOperator;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn normal_vec(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n)
        .map(|_| rng.sample::<f64, _>(StandardNormal))
        .collect()
}

/// `G'G / m` for an `m x n` Gaussian `G`; rank `min(m, n)`.
pub fn random_psd_rows(rng: &mut ChaCha8Rng, n: usize, m: usize) -> LinearOperator {
    let g = normal_vec(rng, m * n);
    let mut a = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..=i {
            let v: f64 = (0..m).map(|k| g[k * n + i] * g[k * n + j]).sum::<f64>() / m as f64;
            a[i * n + j] = v;
            a[j * n + i] = v;
        }
    }
    LinearOperator::dense(n, a).unwrap()
}

pub fn random_psd(rng: &mut ChaCha8Rng, n: usize) -> LinearOperator {
    random_psd_rows(rng, n, n)
}

pub fn median(values: &mut [f64]) -> f64 {
    values.sort_by(|a, b| a.total_cmp(b));
    let m = values.len() / 2;
    if values.len() % 2 == 0 {
        0.5 * (values[m - 1] + values[m])
    } else {
        values[m]
    }
}

pub fn dense_matvec(n: usize, a: &[f64], x: &[f64]) -> Vec<f64> {
    (0..n)
        .map(|i| (0..n).map(|j| a[i * n + j] * x[j]).sum())
        .collect()
}
