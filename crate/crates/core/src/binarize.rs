//! Real-valued rows to binary barcodes.
//!
//! Two rules are provided:
//!
//! * min-max: bit `n` is set when the row increases from component `n` to `n + 1`.
//!   A row of length `d` produces `d - 1` bits; equal neighbours give 0.
//! * zero-threshold: bit `n` is set when component `n` is strictly positive.
//!   A row of length `d` produces `d` bits; exact zeros give 0.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::store::{packed_len, Barcode, BarcodeMatrix, FeatureMatrix};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BinarizationMethod {
    MinMax,
    ZeroThreshold,
}

impl BinarizationMethod {
    /// Bit-length produced from a row of `dim` components.
    pub fn output_bits(self, dim: usize) -> usize {
        match self {
            BinarizationMethod::MinMax => dim.saturating_sub(1),
            BinarizationMethod::ZeroThreshold => dim,
        }
    }

    fn min_dim(self) -> usize {
        match self {
            BinarizationMethod::MinMax => 2,
            BinarizationMethod::ZeroThreshold => 1,
        }
    }

    pub fn binarize(self, row: &[f32]) -> Result<Barcode> {
        match self {
            BinarizationMethod::MinMax => binarize_minmax(row),
            BinarizationMethod::ZeroThreshold => binarize_zero_threshold(row),
        }
    }
}

impl fmt::Display for BinarizationMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BinarizationMethod::MinMax => "minmax",
            BinarizationMethod::ZeroThreshold => "zerothresh",
        })
    }
}

impl FromStr for BinarizationMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "minmax" | "min-max" => Ok(BinarizationMethod::MinMax),
            "zerothresh" | "zero-threshold" | "zerothreshold" => {
                Ok(BinarizationMethod::ZeroThreshold)
            }
            other => Err(Error::Config(format!(
                "unknown binarization method {other:?}"
            ))),
        }
    }
}

fn check_finite(row: &[f32]) -> Result<()> {
    match row.iter().position(|v| !v.is_finite()) {
        Some(col) => Err(Error::NonFinite { row: 0, col }),
        None => Ok(()),
    }
}

/// Writes the packed bits of `row` into `out`, which must be zeroed and
/// `packed_len(method.output_bits(row.len()))` long.
fn pack_into(method: BinarizationMethod, row: &[f32], out: &mut [u8]) {
    match method {
        BinarizationMethod::MinMax => {
            for (i, w) in row.windows(2).enumerate() {
                if w[0] < w[1] {
                    out[i / 8] |= 1 << (i % 8);
                }
            }
        }
        BinarizationMethod::ZeroThreshold => {
            for (i, &v) in row.iter().enumerate() {
                if v > 0.0 {
                    out[i / 8] |= 1 << (i % 8);
                }
            }
        }
    }
}

fn binarize_row(method: BinarizationMethod, row: &[f32]) -> Result<Barcode> {
    if row.len() < method.min_dim() {
        return Err(Error::dimension(
            "binarization input",
            method.min_dim(),
            row.len(),
        ));
    }
    check_finite(row)?;
    let bits = method.output_bits(row.len());
    let mut bytes = vec![0u8; packed_len(bits)];
    pack_into(method, row, &mut bytes);
    Barcode::from_packed(bits, bytes)
}

/// Min-max barcode of `row`: `d - 1` bits, bit `n` set iff `row[n] < row[n + 1]`.
pub fn binarize_minmax(row: &[f32]) -> Result<Barcode> {
    binarize_row(BinarizationMethod::MinMax, row)
}

/// Zero-threshold barcode of `row`: `d` bits, bit `n` set iff `row[n] > 0`.
pub fn binarize_zero_threshold(row: &[f32]) -> Result<Barcode> {
    binarize_row(BinarizationMethod::ZeroThreshold, row)
}

/// Binarizes every row of `m`. Rows are processed in parallel into disjoint
/// output slices, so the result does not depend on scheduling.
pub fn binarize_matrix(m: &FeatureMatrix, method: BinarizationMethod) -> Result<BarcodeMatrix> {
    let bits = method.output_bits(m.cols());
    if m.cols() < method.min_dim() {
        return Err(Error::dimension(
            "binarization input",
            method.min_dim(),
            m.cols(),
        ));
    }
    let stride = packed_len(bits);
    let mut packed = vec![0u8; m.rows() * stride];
    packed
        .par_chunks_mut(stride)
        .zip(m.values().par_chunks(m.cols()))
        .for_each(|(out, row)| pack_into(method, row, out));
    BarcodeMatrix::new(m.rows(), bits, packed)
}
