//! Principal component analysis fit on training rows.
//!
//! The basis comes from a thin SVD of the mean-centered training matrix. Each
//! component is sign-normalised so that its largest-magnitude entry is
//! positive, which makes fits reproducible. No whitening is applied.
//!
//! Models persist as `"DPC1"`, d (u32), k (u32), mean (d f32), basis
//! (d*k f32, column-major), eigenvalues (k f32), all little-endian.

use std::fs;
use std::path::Path;

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::store::{read_header, write_atomic, FeatureMatrix, HEADER_LEN};

pub const PCA_MAGIC: &[u8; 4] = b"DPC1";

#[derive(Debug, Clone, PartialEq)]
pub struct PcaModel {
    mean: Vec<f64>,
    /// d x k, orthonormal columns.
    basis: DMatrix<f64>,
    eigenvalues: Vec<f64>,
    /// Trace of the training covariance; denominator of the explained-variance ratios.
    total_variance: f64,
}

impl PcaModel {
    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn components(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn mean(&self) -> &[f64] {
        &self.mean
    }

    pub fn basis(&self) -> &DMatrix<f64> {
        &self.basis
    }

    /// Column `j` of the basis.
    pub fn component(&self, j: usize) -> Vec<f64> {
        self.basis.column(j).iter().copied().collect()
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn total_variance(&self) -> f64 {
        self.total_variance
    }

    /// Projects one row in `f64`: `basis^T (row - mean)`.
    pub fn project(&self, row: &[f32]) -> Result<Vec<f64>> {
        if row.len() != self.dim() {
            return Err(Error::dimension("pca input", self.dim(), row.len()));
        }
        let centered: Vec<f64> = row
            .iter()
            .zip(&self.mean)
            .map(|(&x, m)| x as f64 - m)
            .collect();
        Ok((0..self.components())
            .map(|j| {
                self.basis
                    .column(j)
                    .iter()
                    .zip(&centered)
                    .map(|(b, c)| b * c)
                    .sum()
            })
            .collect())
    }

    /// Maps reduced coordinates back to the input space.
    pub fn reconstruct(&self, coords: &[f64]) -> Result<Vec<f64>> {
        if coords.len() != self.components() {
            return Err(Error::dimension(
                "pca coordinates",
                self.components(),
                coords.len(),
            ));
        }
        let mut out = self.mean.clone();
        for (j, &c) in coords.iter().enumerate() {
            for (o, b) in out.iter_mut().zip(self.basis.column(j).iter()) {
                *o += c * b;
            }
        }
        Ok(out)
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let (d, k) = (self.dim(), self.components());
        let mut out = Vec::with_capacity(HEADER_LEN + 4 * (d + d * k + k));
        out.extend_from_slice(PCA_MAGIC);
        out.extend_from_slice(&(d as u32).to_le_bytes());
        out.extend_from_slice(&(k as u32).to_le_bytes());
        let column_major = self.basis.as_slice();
        for v in self
            .mean
            .iter()
            .chain(column_major)
            .chain(&self.eigenvalues)
        {
            out.extend_from_slice(&(*v as f32).to_le_bytes());
        }
        out
    }

    /// Reads a persisted model. The file does not carry the total variance, so
    /// ratios from a loaded model are relative to the retained eigenvalues.
    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let (d, k) = read_header(bytes, PCA_MAGIC)?;
        if d == 0 || k == 0 || k > d {
            return Err(Error::Format(format!("invalid model shape d={d}, k={k}")));
        }
        let payload = &bytes[HEADER_LEN..];
        let expected = 4 * (d as u64 + d as u64 * k as u64 + k as u64);
        if payload.len() as u64 != expected {
            return Err(Error::Truncated {
                expected,
                found: payload.len() as u64,
            });
        }
        let values: Vec<f64> = payload
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]) as f64)
            .collect();
        if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::Format(format!(
                "non-finite value at payload offset {pos}"
            )));
        }
        let mean = values[..d].to_vec();
        let basis = DMatrix::from_column_slice(d, k, &values[d..d + d * k]);
        let eigenvalues = values[d + d * k..].to_vec();
        if eigenvalues.windows(2).any(|w| w[0] < w[1]) {
            return Err(Error::Format(
                "eigenvalues are not sorted non-increasing".into(),
            ));
        }
        let total_variance = eigenvalues.iter().sum();
        Ok(Self {
            mean,
            basis,
            eigenvalues,
            total_variance,
        })
    }
}

/// Fits the top `k` principal components of `train`.
pub fn pca_fit(train: &FeatureMatrix, k: usize) -> Result<PcaModel> {
    let (n, d) = (train.rows(), train.cols());
    let limit = n.min(d);
    if k == 0 || k > limit {
        return Err(Error::Parameter(format!(
            "component count {k} outside 1..={limit} (rows={n}, cols={d})"
        )));
    }

    let mut mean = vec![0f64; d];
    for row in train.iter_rows() {
        for (m, &x) in mean.iter_mut().zip(row) {
            *m += x as f64;
        }
    }
    mean.iter_mut().for_each(|m| *m /= n as f64);

    let centered = DMatrix::from_fn(n, d, |i, j| train.row(i)[j] as f64 - mean[j]);
    let svd = centered.svd(false, true);
    let v_t = svd.v_t.expect("right singular vectors requested");

    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    // Stable sort keeps equal singular values in solver order.
    order.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]));

    let dof = (n.max(2) - 1) as f64;
    let total_variance = svd.singular_values.iter().map(|s| s * s).sum::<f64>() / dof;

    let mut basis = DMatrix::zeros(d, k);
    let mut eigenvalues = Vec::with_capacity(k);
    for (j, &src) in order.iter().take(k).enumerate() {
        let mut column: Vec<f64> = v_t.row(src).iter().copied().collect();
        normalize_sign(&mut column);
        basis.set_column(j, &nalgebra::DVector::from_vec(column));
        let s = svd.singular_values[src];
        eigenvalues.push((s * s / dof).max(0.0));
    }

    Ok(PcaModel {
        mean,
        basis,
        eigenvalues,
        total_variance,
    })
}

/// Flips `v` so that its largest-magnitude entry (first one on ties) is positive.
pub fn normalize_sign(v: &mut [f64]) {
    let mut pivot = 0;
    for (i, x) in v.iter().enumerate() {
        if x.abs() > v[pivot].abs() {
            pivot = i;
        }
    }
    if v.get(pivot).is_some_and(|&x| x < 0.0) {
        v.iter_mut().for_each(|x| *x = -*x);
    }
}

/// Projects every row of `m` onto the model's components.
pub fn pca_transform(model: &PcaModel, m: &FeatureMatrix) -> Result<FeatureMatrix> {
    if m.cols() != model.dim() {
        return Err(Error::dimension(
            "pca transform input columns",
            model.dim(),
            m.cols(),
        ));
    }
    let k = model.components();
    if k < 2 {
        return Err(Error::Parameter(
            "a feature matrix needs at least 2 columns; fit with k >= 2 to transform".into(),
        ));
    }
    let rows: Vec<Vec<f64>> = (0..m.rows())
        .into_par_iter()
        .map(|i| model.project(m.row(i)))
        .collect::<Result<_>>()?;
    let values = rows.into_iter().flatten().map(|v| v as f32).collect();
    FeatureMatrix::new(m.rows(), k, values)
}

/// Share of the total training variance captured by each component.
pub fn explained_variance_ratio(model: &PcaModel) -> Vec<f64> {
    if model.total_variance <= 0.0 {
        return vec![0.0; model.components()];
    }
    model
        .eigenvalues
        .iter()
        .map(|e| e / model.total_variance)
        .collect()
}

pub fn load_pca(path: impl AsRef<Path>) -> Result<PcaModel> {
    PcaModel::from_bytes(&fs::read(path)?)
}

pub fn save_pca(model: &PcaModel, path: impl AsRef<Path>) -> Result<()> {
    write_atomic(path.as_ref(), &model.to_bytes())
}
