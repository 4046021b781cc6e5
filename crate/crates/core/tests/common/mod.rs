//! Independent reference implementations used by the integration tests.
//! Nothing here calls into the library's search, binarization or PCA code.

#![allow(dead_code, clippy::needless_range_loop)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_row(rng: &mut ChaCha8Rng, dim: usize) -> Vec<f32> {
    (0..dim).map(|_| rng.random_range(-4.0f32..4.0)).collect()
}

/// Row with deliberate repeats and exact zeros, so equality branches are hit.
pub fn coarse_row(rng: &mut ChaCha8Rng, dim: usize) -> Vec<f32> {
    (0..dim)
        .map(|_| rng.random_range(-3i32..=3) as f32 * 0.5)
        .collect()
}

pub fn minmax_reference(x: &[f32]) -> Vec<bool> {
    let mut out = Vec::new();
    for n in 0..x.len() - 1 {
        let bit = x[n] < x[n + 1];
        out.push(bit);
    }
    out
}

pub fn zero_threshold_reference(x: &[f32]) -> Vec<bool> {
    x.iter().map(|&v| 0.0 < v).collect()
}

pub fn random_bits(rng: &mut ChaCha8Rng, bits: usize) -> Vec<bool> {
    (0..bits).map(|_| rng.random_bool(0.5)).collect()
}

pub fn hamming_reference(a: &[bool], b: &[bool]) -> u32 {
    a.iter().zip(b).filter(|(x, y)| x != y).count() as u32
}

/// All distances, stable sort by distance (ties keep index order), truncate.
pub fn top_n_reference(corpus: &[Vec<bool>], query: &[bool], n: usize) -> (Vec<usize>, Vec<u32>) {
    let mut all: Vec<(u32, usize)> = corpus
        .iter()
        .enumerate()
        .map(|(i, row)| (hamming_reference(row, query), i))
        .collect();
    all.sort_by_key(|&(d, _)| d);
    all.truncate(n);
    (
        all.iter().map(|p| p.1).collect(),
        all.iter().map(|p| p.0).collect(),
    )
}

pub fn l1_reference(a: &[f32], b: &[f32]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (*x as f64 - *y as f64).abs())
        .sum()
}

pub fn l2_reference(a: &[f32], b: &[f32]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (*x as f64 - *y as f64).powi(2))
        .sum::<f64>()
        .sqrt()
}

/// Symmetric eigendecomposition by cyclic Jacobi rotations.
/// Returns eigenvalues descending with matching unit eigenvectors.
pub fn jacobi_eigen(mut a: Vec<Vec<f64>>) -> (Vec<f64>, Vec<Vec<f64>>) {
    let n = a.len();
    let mut v: Vec<Vec<f64>> = (0..n)
        .map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
        .collect();
    for _sweep in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[i][j] * a[i][j])
            .sum();
        if off < 1e-30 {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                if a[p][q].abs() < 1e-300 {
                    continue;
                }
                let theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let (akp, akq) = (a[k][p], a[k][q]);
                    a[k][p] = c * akp - s * akq;
                    a[k][q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let (apk, aqk) = (a[p][k], a[q][k]);
                    a[p][k] = c * apk - s * aqk;
                    a[q][k] = s * apk + c * aqk;
                }
                for row in v.iter_mut() {
                    let (vp, vq) = (row[p], row[q]);
                    row[p] = c * vp - s * vq;
                    row[q] = s * vp + c * vq;
                }
            }
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&x, &y| a[y][y].total_cmp(&a[x][x]));
    let values = order.iter().map(|&i| a[i][i]).collect();
    let vectors = order
        .iter()
        .map(|&i| (0..n).map(|r| v[r][i]).collect())
        .collect();
    (values, vectors)
}

pub struct PcaOracle {
    pub mean: Vec<f64>,
    pub eigenvalues: Vec<f64>,
    /// Unit eigenvectors, largest-magnitude entry positive.
    pub vectors: Vec<Vec<f64>>,
}

/// Explicit covariance (divisor n-1) followed by a full symmetric eigensolve.
pub fn pca_oracle(rows: &[Vec<f32>]) -> PcaOracle {
    let n = rows.len();
    let d = rows[0].len();
    let mut mean = vec![0.0; d];
    for r in rows {
        for j in 0..d {
            mean[j] += r[j] as f64 / n as f64;
        }
    }
    let mut cov = vec![vec![0.0; d]; d];
    for r in rows {
        for i in 0..d {
            for j in 0..d {
                cov[i][j] += (r[i] as f64 - mean[i]) * (r[j] as f64 - mean[j]);
            }
        }
    }
    let dof = (n.max(2) - 1) as f64;
    cov.iter_mut().flatten().for_each(|c| *c /= dof);
    let (eigenvalues, mut vectors) = jacobi_eigen(cov);
    for v in vectors.iter_mut() {
        let pivot = (0..d).fold(
            0,
            |best, i| if v[i].abs() > v[best].abs() { i } else { best },
        );
        if v[pivot] < 0.0 {
            v.iter_mut().for_each(|x| *x = -*x);
        }
    }
    PcaOracle {
        mean,
        eigenvalues,
        vectors,
    }
}

impl PcaOracle {
    pub fn project(&self, row: &[f32], k: usize) -> Vec<f64> {
        self.vectors[..k]
            .iter()
            .map(|v| {
                v.iter()
                    .zip(row)
                    .zip(&self.mean)
                    .map(|((e, &x), m)| e * (x as f64 - m))
                    .sum()
            })
            .collect()
    }
}
