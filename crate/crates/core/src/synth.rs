//! Labeled Gaussian clusters for exercising the search pipeline without a
//! real image dataset.
//!
//! Class means are `separation / sqrt(2)` times a set of orthonormal
//! directions, so every pair of means is exactly `separation` apart in units
//! of the unit intra-class standard deviation. Each direction is a seeded
//! Gaussian combination of the upper half of the DCT-II spectrum, then
//! Gram-Schmidt orthonormalised. High-frequency directions make neighbouring
//! coordinates of a class mean differ strongly, so consecutive-difference
//! barcodes see the class structure; dense isotropic directions spread the
//! same separation too thinly across coordinate pairs.
//!
//! Randomness is ChaCha8 (`rand_chacha`) seeded with `seed_from_u64`, with
//! normals from `rand_distr::StandardNormal`. Both are portable, so a seed
//! yields the same bytes on every platform.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::store::{FeatureMatrix, LabelVector};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SyntheticSpec {
    pub classes: usize,
    /// Training rows per class.
    pub per_class: usize,
    /// Test rows per class.
    pub test_per_class: usize,
    pub dim: usize,
    /// Distance between any two class means, in intra-class standard deviations.
    pub separation: f64,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticData {
    pub train: FeatureMatrix,
    pub train_labels: LabelVector,
    pub test: FeatureMatrix,
    pub test_labels: LabelVector,
}

impl SyntheticSpec {
    pub fn validate(&self) -> Result<()> {
        if self.classes < 2 {
            return Err(Error::Parameter(format!(
                "need at least 2 classes, got {}",
                self.classes
            )));
        }
        if self.per_class == 0 || self.test_per_class == 0 {
            return Err(Error::Parameter(
                "per-class row counts must be at least 1".into(),
            ));
        }
        if self.dim < 2 {
            return Err(Error::Parameter(format!(
                "dim must be at least 2, got {}",
                self.dim
            )));
        }
        if self.classes > self.dim {
            return Err(Error::Parameter(format!(
                "{} equidistant class means need dim >= classes, got dim {}",
                self.classes, self.dim
            )));
        }
        if !(self.separation.is_finite() && self.separation >= 0.0) {
            return Err(Error::Parameter(format!(
                "separation must be finite and non-negative, got {}",
                self.separation
            )));
        }
        Ok(())
    }
}

/// Orthonormal DCT-II basis vector of frequency `k` in `dim` dimensions.
fn cosine(k: usize, dim: usize) -> Vec<f64> {
    let scale = if k == 0 {
        (1.0 / dim as f64).sqrt()
    } else {
        (2.0 / dim as f64).sqrt()
    };
    (0..dim)
        .map(|j| scale * (std::f64::consts::PI * k as f64 * (j as f64 + 0.5) / dim as f64).cos())
        .collect()
}

fn orthonormal_directions(rng: &mut ChaCha8Rng, count: usize, dim: usize) -> Vec<Vec<f64>> {
    let span = count.max(dim.div_ceil(2)).min(dim);
    let waves: Vec<Vec<f64>> = (dim - span..dim).map(|k| cosine(k, dim)).collect();
    let mut out: Vec<Vec<f64>> = Vec::with_capacity(count);
    while out.len() < count {
        let mut v = vec![0f64; dim];
        for wave in &waves {
            let c: f64 = StandardNormal.sample(rng);
            v.iter_mut().zip(wave).for_each(|(a, w)| *a += c * w);
        }
        // Two passes of modified Gram-Schmidt.
        for _ in 0..2 {
            for u in &out {
                let dot: f64 = v.iter().zip(u).map(|(a, b)| a * b).sum();
                v.iter_mut().zip(u).for_each(|(a, b)| *a -= dot * b);
            }
        }
        let norm = v.iter().map(|a| a * a).sum::<f64>().sqrt();
        if norm > 1e-6 {
            v.iter_mut().for_each(|a| *a /= norm);
            out.push(v);
        }
    }
    out
}

fn draw(
    rng: &mut ChaCha8Rng,
    means: &[Vec<f64>],
    per_class: usize,
) -> Result<(FeatureMatrix, LabelVector)> {
    let dim = means[0].len();
    let mut values = Vec::with_capacity(means.len() * per_class * dim);
    let mut labels = Vec::with_capacity(means.len() * per_class);
    for (class, mean) in means.iter().enumerate() {
        for _ in 0..per_class {
            for m in mean {
                let noise: f64 = StandardNormal.sample(rng);
                values.push((m + noise) as f32);
            }
            labels.push(class as u32);
        }
    }
    Ok((
        FeatureMatrix::new(labels.len(), dim, values)?,
        LabelVector::new(labels),
    ))
}

/// Generates train and test sets, rows grouped by class in ascending class order.
pub fn generate(spec: &SyntheticSpec) -> Result<SyntheticData> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let scale = spec.separation / std::f64::consts::SQRT_2;
    let means: Vec<Vec<f64>> = orthonormal_directions(&mut rng, spec.classes, spec.dim)
        .into_iter()
        .map(|d| d.into_iter().map(|x| x * scale).collect())
        .collect();
    let (train, train_labels) = draw(&mut rng, &means, spec.per_class)?;
    let (test, test_labels) = draw(&mut rng, &means, spec.test_per_class)?;
    Ok(SyntheticData {
        train,
        train_labels,
        test,
        test_labels,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(separation: f64) -> SyntheticSpec {
        SyntheticSpec {
            classes: 4,
            per_class: 6,
            test_per_class: 2,
            dim: 8,
            separation,
            seed: 7,
        }
    }

    #[test]
    fn shapes_and_labels() {
        let d = generate(&spec(3.0)).unwrap();
        assert_eq!((d.train.rows(), d.train.cols()), (24, 8));
        assert_eq!((d.test.rows(), d.test.cols()), (8, 8));
        assert_eq!(&d.train_labels.as_slice()[..7], &[0, 0, 0, 0, 0, 0, 1]);
        assert_eq!(d.test_labels.as_slice(), &[0, 0, 1, 1, 2, 2, 3, 3]);
    }

    #[test]
    fn seed_fixes_output() {
        assert_eq!(generate(&spec(3.0)).unwrap(), generate(&spec(3.0)).unwrap());
        let other = SyntheticSpec {
            seed: 8,
            ..spec(3.0)
        };
        assert_ne!(
            generate(&spec(3.0)).unwrap().train,
            generate(&other).unwrap().train
        );
    }

    #[test]
    fn means_are_equidistant() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let dirs = orthonormal_directions(&mut rng, 5, 9);
        for i in 0..5 {
            for j in 0..5 {
                let dot: f64 = dirs[i].iter().zip(&dirs[j]).map(|(a, b)| a * b).sum();
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((dot - want).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn cosine_basis_is_orthonormal() {
        for dim in [2, 7, 16] {
            for a in 0..dim {
                for b in 0..dim {
                    let dot: f64 = cosine(a, dim)
                        .iter()
                        .zip(cosine(b, dim))
                        .map(|(x, y)| x * y)
                        .sum();
                    assert!((dot - if a == b { 1.0 } else { 0.0 }).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn invalid_specs() {
        for bad in [
            SyntheticSpec {
                classes: 1,
                ..spec(1.0)
            },
            SyntheticSpec {
                per_class: 0,
                ..spec(1.0)
            },
            SyntheticSpec {
                dim: 1,
                ..spec(1.0)
            },
            SyntheticSpec {
                classes: 9,
                ..spec(1.0)
            },
            SyntheticSpec {
                separation: -1.0,
                ..spec(1.0)
            },
            SyntheticSpec {
                separation: f64::NAN,
                ..spec(1.0)
            },
        ] {
            assert!(generate(&bad).is_err(), "{bad:?}");
        }
    }
}
