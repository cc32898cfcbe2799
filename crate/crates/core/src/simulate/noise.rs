use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::io::RadianceCube;
use crate::{Error, Result, Scalar};

/// Name of the generator behind every seeded draw in this module.
pub const RNG_NAME: &str = "ChaCha20 (rand_chacha), seed_from_u64, one stream per line";

/// Per-band noise `std(L) = a_b sqrt(max(L, 0)) + c_b`: a photon term and a
/// read-noise floor, in radiance units.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoiseModel {
    pub a: Vec<f64>,
    pub c: Vec<f64>,
}

impl NoiseModel {
    pub fn new(a: Vec<f64>, c: Vec<f64>) -> Result<Self> {
        if a.len() != c.len() {
            return Err(Error::ShapeError(format!(
                "{} photon and {} read-noise coefficients",
                a.len(),
                c.len()
            )));
        }
        if a.iter().chain(&c).any(|v| !(*v >= 0.0) || !v.is_finite()) {
            return Err(Error::DomainError(
                "noise coefficients must be finite and non-negative".into(),
            ));
        }
        Ok(Self { a, c })
    }

    /// Same coefficients in every band.
    pub fn uniform(bands: usize, a: f64, c: f64) -> Result<Self> {
        Self::new(vec![a; bands], vec![c; bands])
    }

    pub fn bands(&self) -> usize {
        self.a.len()
    }

    pub fn std_dev(&self, band: usize, radiance: f64) -> f64 {
        self.a[band] * radiance.max(0.0).sqrt() + self.c[band]
    }

    pub fn is_zero(&self) -> bool {
        self.a.iter().chain(&self.c).all(|v| *v == 0.0)
    }
}

/// Add independent Gaussian noise to every valid sample. Line `l` draws from
/// its own stream of a generator seeded with `seed`, so the result does not
/// depend on how lines are scheduled.
pub fn add_noise<T: Scalar>(cube: &RadianceCube<T>, model: &NoiseModel, seed: u64) -> Result<RadianceCube<T>> {
    let b = cube.bands();
    if model.bands() != b {
        return Err(Error::ShapeError(format!(
            "noise model has {} bands, cube {}",
            model.bands(),
            b
        )));
    }
    let samples = cube.samples();
    let valid = cube.valid_mask();
    let mut values = cube.values().to_vec();
    if model.is_zero() {
        return Ok(cube.with_values(values));
    }
    values.par_chunks_mut(samples * b).enumerate().for_each(|(line, row)| {
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        rng.set_stream(line as u64);
        for (s, px) in row.chunks_mut(b).enumerate() {
            if !valid[line * samples + s] {
                continue;
            }
            for (k, v) in px.iter_mut().enumerate() {
                let z: f64 = StandardNormal.sample(&mut rng);
                let x = v.as_f64();
                *v = T::c(x + z * model.std_dev(k, x));
            }
        }
    });
    Ok(cube.with_values(values))
}
