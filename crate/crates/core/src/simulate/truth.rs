use ndarray::Array2;
use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TruthKind {
    RandomSparse,
    GaussianPlume,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TruthParameters {
    RandomSparse {
        fraction: f64,
        max_enhancement: f64,
        seed: u64,
    },
    GaussianPlume {
        source_line: usize,
        source_sample: usize,
        peak: f64,
        sigma_along: f64,
        sigma_cross: f64,
        /// Downwind direction in degrees; 0 points to increasing sample, 90 to
        /// increasing line.
        azimuth_deg: f64,
    },
}

/// Known enhancement map, ppm m, indexed `[line, sample]`.
#[derive(Debug, Clone, PartialEq)]
pub struct TruthField {
    pub alpha_true: Array2<f64>,
    pub parameters: TruthParameters,
}

impl TruthField {
    pub fn kind(&self) -> TruthKind {
        match self.parameters {
            TruthParameters::RandomSparse { .. } => TruthKind::RandomSparse,
            TruthParameters::GaussianPlume { .. } => TruthKind::GaussianPlume,
        }
    }

    pub fn lines(&self) -> usize {
        self.alpha_true.nrows()
    }

    pub fn samples(&self) -> usize {
        self.alpha_true.ncols()
    }

    pub fn nonzero_count(&self) -> usize {
        self.alpha_true.iter().filter(|a| **a != 0.0).count()
    }
}

/// `ceil(fraction * n)`, ignoring round-off just above an integer.
fn enhanced_count(fraction: f64, n: usize) -> usize {
    let x = fraction * n as f64;
    let nearest = x.round();
    if (x - nearest).abs() <= 1e-9 * nearest.max(1.0) {
        nearest as usize
    } else {
        x.ceil() as usize
    }
    .min(n)
}

/// `ceil(fraction * pixels)` distinct pixels with enhancements drawn
/// uniformly from `(0, max_enhancement)`; all other pixels are zero.
pub fn random_sparse_truth(
    lines: usize,
    samples: usize,
    fraction: f64,
    max_enhancement: f64,
    seed: u64,
) -> Result<TruthField> {
    if !(0.0..=1.0).contains(&fraction) {
        return Err(Error::DomainError(format!("fraction {fraction} outside [0, 1]")));
    }
    if !(max_enhancement > 0.0 && max_enhancement.is_finite()) {
        return Err(Error::DomainError(format!(
            "maximum enhancement {max_enhancement} must be positive"
        )));
    }
    let n = lines * samples;
    let k = enhanced_count(fraction, n);
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let picked = index::sample(&mut rng, n, k);
    let mut alpha = Array2::zeros((lines, samples));
    for idx in picked.iter() {
        // a draw of exactly zero would leave the pixel unenhanced
        let v = loop {
            let v: f64 = rng.random_range(0.0..max_enhancement);
            if v > 0.0 {
                break v;
            }
        };
        alpha[(idx / samples, idx % samples)] = v;
    }
    Ok(TruthField {
        alpha_true: alpha,
        parameters: TruthParameters::RandomSparse {
            fraction,
            max_enhancement,
            seed,
        },
    })
}

/// Anisotropic Gaussian plume with its maximum `peak` at the source pixel.
///
/// Downwind the along-wind profile decays with `sigma_along`. Upwind it uses
/// the tighter `sigma_cross` and is cut to zero beyond three of those.
pub fn gaussian_plume_truth(
    lines: usize,
    samples: usize,
    source: (usize, usize),
    peak: f64,
    sigma_along: f64,
    sigma_cross: f64,
    azimuth_deg: f64,
) -> Result<TruthField> {
    let (sl, ss) = source;
    if sl >= lines || ss >= samples {
        return Err(Error::InvalidSource { line: sl, sample: ss });
    }
    if !(peak > 0.0) || !(sigma_along > 0.0) || !(sigma_cross > 0.0) || !azimuth_deg.is_finite() {
        return Err(Error::DomainError(
            "plume peak and decay lengths must be positive".into(),
        ));
    }
    let (sin, cos) = azimuth_deg.to_radians().sin_cos();
    let alpha = Array2::from_shape_fn((lines, samples), |(l, s)| {
        let dx = s as f64 - ss as f64;
        let dy = l as f64 - sl as f64;
        let along = dx * cos + dy * sin;
        let cross = -dx * sin + dy * cos;
        let lateral = (-0.5 * (cross / sigma_cross).powi(2)).exp();
        let axial = if along >= 0.0 {
            (-0.5 * (along / sigma_along).powi(2)).exp()
        } else if -along <= 3.0 * sigma_cross {
            (-0.5 * (along / sigma_cross).powi(2)).exp()
        } else {
            0.0
        };
        peak * lateral * axial
    });
    Ok(TruthField {
        alpha_true: alpha,
        parameters: TruthParameters::GaussianPlume {
            source_line: sl,
            source_sample: ss,
            peak,
            sigma_along,
            sigma_cross,
            azimuth_deg,
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sparse_counts_and_range() {
        let t = random_sparse_truth(100, 100, 0.01, 10000.0, 3).unwrap();
        assert_eq!(t.nonzero_count(), 100);
        assert!(t.alpha_true.iter().all(|a| (0.0..10000.0).contains(a)));
        let full = random_sparse_truth(7, 9, 1.0, 5.0, 1).unwrap();
        assert_eq!(full.nonzero_count(), 63);
        let none = random_sparse_truth(7, 9, 0.0, 5.0, 1).unwrap();
        assert_eq!(none.nonzero_count(), 0);
        assert_eq!(random_sparse_truth(3, 3, 0.5, 1.0, 0).unwrap().nonzero_count(), 5);
        assert!(random_sparse_truth(3, 3, 1.5, 1.0, 0).is_err());
        assert!(random_sparse_truth(3, 3, 0.5, 0.0, 0).is_err());
    }

    #[test]
    fn sparse_is_seeded() {
        let a = random_sparse_truth(50, 40, 0.05, 100.0, 11).unwrap();
        assert_eq!(a, random_sparse_truth(50, 40, 0.05, 100.0, 11).unwrap());
        assert_ne!(a, random_sparse_truth(50, 40, 0.05, 100.0, 12).unwrap());
        assert_eq!(a.kind(), TruthKind::RandomSparse);
    }

    #[test]
    fn plume_shape() {
        let t = gaussian_plume_truth(60, 80, (30, 20), 500.0, 12.0, 3.0, 0.0).unwrap();
        assert_eq!(t.alpha_true[(30, 20)], 500.0);
        assert_eq!(t.alpha_true.iter().cloned().fold(0.0, f64::max), 500.0);
        // three cross-wind sigmas off axis
        assert!(t.alpha_true[(39, 20)] <= 500.0 * (-4.5f64).exp() * (1.0 + 1e-12));
        // upwind beyond three sigma_cross is exactly zero
        assert_eq!(t.alpha_true[(30, 10)], 0.0);
        assert!(t.alpha_true[(30, 40)] > t.alpha_true[(30, 0)]);
        assert!(t.alpha_true.iter().all(|a| *a >= 0.0));

        let doubled = gaussian_plume_truth(60, 80, (30, 20), 1000.0, 12.0, 3.0, 0.0).unwrap();
        let (m1, m2) = (t.alpha_true.sum(), doubled.alpha_true.sum());
        assert!((m2 - 2.0 * m1).abs() < 1e-9 * m2);

        let south = gaussian_plume_truth(60, 80, (10, 40), 1.0, 12.0, 3.0, 90.0).unwrap();
        assert!(south.alpha_true[(30, 40)] > south.alpha_true[(10, 60)]);
        assert!(matches!(
            gaussian_plume_truth(10, 10, (10, 0), 1.0, 1.0, 1.0, 0.0),
            Err(Error::InvalidSource { line: 10, sample: 0 })
        ));
    }
}
