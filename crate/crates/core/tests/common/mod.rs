#![allow(dead_code)]

use gasmf::io::{EnviHeader, RadianceCube};
use gasmf::pixels::PixelMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

/// Correlated Gaussian background around a smooth mean, `n x b`.
pub fn background(n: usize, b: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal = Normal::new(0.0, 1.0).unwrap();
    let loadings: Vec<Vec<f64>> = (0..3)
        .map(|f| {
            (0..b)
                .map(|k| 0.3 * (1.0 + f as f64) * ((k as f64 + 1.0) * (f as f64 + 1.0) * 0.7).sin())
                .collect()
        })
        .collect();
    (0..n)
        .map(|_| {
            let z: Vec<f64> = (0..3).map(|_| normal.sample(&mut rng)).collect();
            (0..b)
                .map(|k| {
                    let mean = 20.0 + 5.0 * (k as f64 * 0.4).cos();
                    mean + (0..3).map(|f| z[f] * loadings[f][k]).sum::<f64>() + 0.1 * normal.sample(&mut rng)
                })
                .collect()
        })
        .collect()
}

pub fn absorption(b: usize) -> Vec<f64> {
    (0..b).map(|k| -2e-4 * (1.0 + ((k as f64) * 1.3).sin().abs())).collect()
}

/// Background with Beer-Lambert enhancements on every `every`-th pixel.
pub fn enhanced(n: usize, b: usize, every: usize, seed: u64) -> (Vec<Vec<f64>>, Vec<f64>, Vec<f64>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
    let s = absorption(b);
    let mut rows = background(n, b, seed);
    let mut truth = vec![0.0; n];
    for (i, row) in rows.iter_mut().enumerate() {
        if i % every == 0 {
            truth[i] = rng.random_range(0.0..2000.0);
            for (x, sk) in row.iter_mut().zip(&s) {
                *x *= (truth[i] * sk).exp();
            }
        }
    }
    (rows, s, truth)
}

pub fn matrix(rows: &[Vec<f64>]) -> PixelMatrix<f64> {
    PixelMatrix::from_rows(rows).unwrap()
}

pub fn cube(lines: usize, samples: usize, rows: &[Vec<f64>]) -> RadianceCube<f64> {
    let b = rows[0].len();
    let wl: Vec<f64> = (0..b).map(|k| 2100.0 + 10.0 * k as f64).collect();
    let header = EnviHeader::new(lines, samples, wl).unwrap();
    RadianceCube::from_values(header, rows.concat()).unwrap()
}
