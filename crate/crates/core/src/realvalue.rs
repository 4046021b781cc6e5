//! Brute-force nearest neighbour over real-valued rows under L1 or L2.
//!
//! Sums are accumulated in `f64` although storage is `f32`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::store::FeatureMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DistanceMetric {
    /// City-block distance.
    L1,
    /// Euclidean distance.
    L2,
}

impl fmt::Display for DistanceMetric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DistanceMetric::L1 => "l1",
            DistanceMetric::L2 => "l2",
        })
    }
}

impl FromStr for DistanceMetric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "l1" | "cityblock" => Ok(DistanceMetric::L1),
            "l2" | "euclidean" => Ok(DistanceMetric::L2),
            other => Err(Error::Config(format!("unknown distance metric {other:?}"))),
        }
    }
}

impl DistanceMetric {
    /// Sum of |a-b| for L1, sum of (a-b)^2 for L2. Monotone in the true distance.
    #[inline]
    fn raw(self, a: &[f32], b: &[f32]) -> f64 {
        match self {
            DistanceMetric::L1 => a
                .iter()
                .zip(b)
                .map(|(&x, &y)| (x as f64 - y as f64).abs())
                .sum(),
            DistanceMetric::L2 => a
                .iter()
                .zip(b)
                .map(|(&x, &y)| {
                    let d = x as f64 - y as f64;
                    d * d
                })
                .sum(),
        }
    }

    #[inline]
    fn finish(self, raw: f64) -> f64 {
        match self {
            DistanceMetric::L1 => raw,
            DistanceMetric::L2 => raw.sqrt(),
        }
    }
}

pub fn vector_distance(a: &[f32], b: &[f32], metric: DistanceMetric) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::dimension("vector distance", a.len(), b.len()));
    }
    Ok(metric.finish(metric.raw(a, b)))
}

/// Returns the row of `corpus` closest to `query`, restricted to `candidates`
/// when given. Ties go to the smallest index, whatever order `candidates` is in.
pub fn nearest(
    corpus: &FeatureMatrix,
    candidates: Option<&[usize]>,
    query: &[f32],
    metric: DistanceMetric,
) -> Result<(usize, f64)> {
    if query.len() != corpus.cols() {
        return Err(Error::dimension(
            "nearest query",
            corpus.cols(),
            query.len(),
        ));
    }
    let mut best: Option<(f64, usize)> = None;
    let mut consider = |index: usize| {
        let raw = metric.raw(corpus.row(index), query);
        let better = match best {
            None => true,
            Some((d, i)) => raw < d || (raw == d && index < i),
        };
        if better {
            best = Some((raw, index));
        }
    };
    match candidates {
        Some(subset) => {
            if subset.is_empty() {
                return Err(Error::Parameter("empty candidate set".into()));
            }
            if let Some(&bad) = subset.iter().find(|&&i| i >= corpus.rows()) {
                return Err(Error::Bounds {
                    index: bad,
                    len: corpus.rows(),
                });
            }
            subset.iter().for_each(|&i| consider(i));
        }
        None => (0..corpus.rows()).for_each(consider),
    }
    let (raw, index) = best.expect("corpus has at least one row");
    Ok((index, metric.finish(raw)))
}
