//! Synthetic flat-plus-textured radiance scenes and complete validation
//! scenes with known truth.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::inject::inject_enhancement;
use super::noise::{add_noise, NoiseModel, RNG_NAME};
use super::savgol::smooth_cube;
use super::truth::{TruthField, TruthParameters};
use crate::io::{EnviHeader, RadianceCube};
use crate::target::UnitAbsorptionSpectrum;
use crate::{Error, Result, Scalar};

/// Parameters of the synthetic base radiance generator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaseSceneConfig {
    pub lines: usize,
    pub samples: usize,
    pub bands: usize,
    pub wavelength_lo: f64,
    pub wavelength_hi: f64,
    /// Standard deviation of the log albedo field.
    pub albedo_spread: f64,
    /// Number of dark patches with albedo scaled to 0.2-0.3.
    pub dark_patches: usize,
    /// Standard deviation of pixel-scale noise on the log mixing weights.
    pub texture: f64,
    /// Radiance at unit albedo and reflectance.
    pub radiance_scale: f64,
    pub seed: u64,
}

impl Default for BaseSceneConfig {
    fn default() -> Self {
        Self {
            lines: 200,
            samples: 200,
            bands: 50,
            wavelength_lo: 2080.0,
            wavelength_hi: 2450.0,
            albedo_spread: 0.3,
            dark_patches: 4,
            texture: 0.2,
            radiance_scale: 10.0,
            seed: 1,
        }
    }
}

pub fn synthetic_wavelengths(bands: usize, lo: f64, hi: f64) -> Vec<f64> {
    if bands == 1 {
        return vec![lo];
    }
    (0..bands)
        .map(|k| lo + (hi - lo) * k as f64 / (bands - 1) as f64)
        .collect()
}

fn gauss(x: f64, center: f64, width: f64) -> f64 {
    (-0.5 * ((x - center) / width).powi(2)).exp()
}

/// Methane-like unit absorption: a few broad bands with fine rotational
/// structure, strongest near 2320-2360 nm, in `1/(ppm m)` (negative).
pub fn synthetic_methane_absorption(wavelengths: &[f64]) -> Result<UnitAbsorptionSpectrum<f64>> {
    let envelope = |l: f64| {
        0.15 * gauss(l, 2205.0, 25.0)
            + 0.5 * gauss(l, 2280.0, 25.0)
            + 1.0 * gauss(l, 2318.0, 12.0)
            + 0.8 * gauss(l, 2360.0, 30.0)
            + 0.6 * gauss(l, 2420.0, 25.0)
    };
    let raw: Vec<f64> = wavelengths
        .iter()
        .map(|&l| envelope(l) * (0.65 + 0.35 * (2.0 * PI * (l - 2300.0) / 11.0).cos()))
        .collect();
    let peak = raw.iter().cloned().fold(0.0, f64::max);
    if !(peak > 0.0) {
        return Err(Error::DomainError(
            "wavelengths do not overlap the methane bands".into(),
        ));
    }
    let values = raw.iter().map(|v| -1.8e-5 * v / peak).collect();
    UnitAbsorptionSpectrum::new(wavelengths.to_vec(), values)
}

/// Sum of random plane waves, scaled to zero mean and unit variance.
fn smooth_field(rng: &mut ChaCha20Rng, lines: usize, samples: usize, waves: usize) -> Vec<f64> {
    let params: Vec<(f64, f64, f64, f64)> = (0..waves)
        .map(|_| {
            let wavelength = rng.random_range(15.0..100.0);
            let angle = rng.random_range(0.0..2.0 * PI);
            let k = 2.0 * PI / wavelength;
            (
                k * angle.cos(),
                k * angle.sin(),
                rng.random_range(0.0..2.0 * PI),
                rng.random_range(0.5..1.0),
            )
        })
        .collect();
    let mut f: Vec<f64> = (0..lines * samples)
        .map(|i| {
            let (y, x) = ((i / samples) as f64, (i % samples) as f64);
            params
                .iter()
                .map(|(kx, ky, ph, amp)| amp * (kx * x + ky * y + ph).cos())
                .sum()
        })
        .collect();
    let n = f.len() as f64;
    let mean = f.iter().sum::<f64>() / n;
    let std = (f.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n)
        .sqrt()
        .max(1e-12);
    for v in &mut f {
        *v = (*v - mean) / std;
    }
    f
}

/// Flat-plus-textured radiance: a smooth illumination curve times a
/// three-component surface mixture that varies in space, times an albedo
/// field with a few dark patches.
pub fn synthetic_base_scene(config: &BaseSceneConfig) -> Result<RadianceCube<f64>> {
    let (lines, samples, bands) = (config.lines, config.samples, config.bands);
    if lines == 0 || samples == 0 || bands == 0 {
        return Err(Error::ShapeError("scene dimensions must be positive".into()));
    }
    if !(config.wavelength_hi > config.wavelength_lo) {
        return Err(Error::DomainError("wavelength range is empty".into()));
    }
    let wl = synthetic_wavelengths(bands, config.wavelength_lo, config.wavelength_hi);
    let span = config.wavelength_hi - config.wavelength_lo;
    let illumination: Vec<f64> = wl
        .iter()
        .map(|&l| {
            let x = (l - config.wavelength_lo) / span;
            1.2 - 0.6 * x + 0.15 * x * x - 0.2 * gauss(l, 2440.0, 40.0) - 0.05 * gauss(l, 2130.0, 50.0)
        })
        .collect();
    let endmembers: [Vec<f64>; 3] = [
        wl.iter()
            .map(|&l| 0.30 + 0.05 * (l - 2080.0) / 370.0 - 0.04 * gauss(l, 2200.0, 40.0))
            .collect(),
        wl.iter()
            .map(|&l| 0.15 - 0.06 * (l - 2080.0) / 370.0 + 0.03 * gauss(l, 2230.0, 80.0))
            .collect(),
        wl.iter()
            .map(|&l| 0.35 - 0.04 * (l - 2080.0) / 370.0 - 0.06 * gauss(l, 2330.0, 35.0))
            .collect(),
    ];

    let mut rng = ChaCha20Rng::seed_from_u64(config.seed);
    let fields: Vec<Vec<f64>> = (0..3).map(|_| smooth_field(&mut rng, lines, samples, 12)).collect();
    let log_albedo = smooth_field(&mut rng, lines, samples, 12);
    let patches: Vec<(f64, f64, f64, f64)> = (0..config.dark_patches)
        .map(|_| {
            (
                rng.random_range(0.0..lines as f64),
                rng.random_range(0.0..samples as f64),
                rng.random_range(6.0..15.0),
                rng.random_range(0.2..0.3),
            )
        })
        .collect();

    let n = lines * samples;
    let mut values = Vec::with_capacity(n * bands);
    for i in 0..n {
        let (y, x) = ((i / samples) as f64, (i % samples) as f64);
        let mut w = [0.0; 3];
        for (j, wj) in w.iter_mut().enumerate() {
            let jitter: f64 = StandardNormal.sample(&mut rng);
            *wj = (fields[j][i] + config.texture * jitter).exp();
        }
        let total: f64 = w.iter().sum();
        let mut albedo = (config.albedo_spread * log_albedo[i]).exp();
        for (py, px, radius, level) in &patches {
            let d2 = ((y - py).powi(2) + (x - px).powi(2)) / radius.powi(2);
            // soft-edged disc
            let inside = 1.0 / (1.0 + (4.0 * (d2 - 1.0)).exp());
            albedo *= 1.0 - (1.0 - level) * inside;
        }
        for k in 0..bands {
            let rho: f64 = (0..3).map(|j| w[j] / total * endmembers[j][k]).sum();
            values.push(config.radiance_scale * albedo * illumination[k] * rho);
        }
    }
    let mut header = EnviHeader::new(lines, samples, wl)?;
    header.description = Some("synthetic flat-plus-textured base radiance".into());
    RadianceCube::from_values(header, values)
}

/// Where a simulated scene came from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneProvenance {
    pub base: String,
    pub absorption: String,
    pub noise: NoiseModel,
    /// Savitzky-Golay `(width, degree)` applied to the base, if any.
    pub smoothing: Option<(usize, usize)>,
    pub truth: TruthParameters,
    pub rng: String,
}

#[derive(Debug, Clone)]
pub struct SyntheticScene<T> {
    pub cube: RadianceCube<T>,
    pub truth: TruthField,
    pub seed: u64,
    pub provenance: SceneProvenance,
}

/// Seed of the noise generator derived from the scene seed, so that noise
/// and truth draws never share a stream.
pub fn noise_seed(seed: u64) -> u64 {
    seed ^ 0x9e37_79b9_7f4a_7c15
}

/// Smooth (optionally) the base, inject the truth with Beer-Lambert
/// absorption, then add instrument noise.
#[allow(clippy::too_many_arguments)]
pub fn simulate_scene<T: Scalar>(
    base: &RadianceCube<T>,
    base_id: &str,
    truth: TruthField,
    s: &UnitAbsorptionSpectrum<T>,
    absorption_id: &str,
    noise: &NoiseModel,
    smoothing: Option<(usize, usize)>,
    seed: u64,
) -> Result<SyntheticScene<T>> {
    let smoothed = match smoothing {
        Some((w, d)) => smooth_cube(base, w, d)?,
        None => base.clone(),
    };
    let enhanced = inject_enhancement(&smoothed, &truth, s)?;
    let cube = add_noise(&enhanced, noise, noise_seed(seed))?;
    Ok(SyntheticScene {
        cube,
        provenance: SceneProvenance {
            base: base_id.to_string(),
            absorption: absorption_id.to_string(),
            noise: noise.clone(),
            smoothing,
            truth: truth.parameters.clone(),
            rng: RNG_NAME.to_string(),
        },
        truth,
        seed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> BaseSceneConfig {
        BaseSceneConfig {
            lines: 30,
            samples: 20,
            bands: 25,
            ..Default::default()
        }
    }

    #[test]
    fn base_scene_is_positive_and_seeded() {
        let a = synthetic_base_scene(&small()).unwrap();
        assert_eq!((a.lines(), a.samples(), a.bands()), (30, 20, 25));
        assert!(a.values().iter().all(|v| *v > 0.0 && v.is_finite()));
        let b = synthetic_base_scene(&small()).unwrap();
        assert_eq!(a.values(), b.values());
        let c = synthetic_base_scene(&BaseSceneConfig { seed: 2, ..small() }).unwrap();
        assert_ne!(a.values(), c.values());
    }

    #[test]
    fn absorption_shape() {
        let wl = synthetic_wavelengths(50, 2080.0, 2450.0);
        assert_eq!(wl.len(), 50);
        assert_eq!(wl[49], 2450.0);
        let s = synthetic_methane_absorption(&wl).unwrap();
        let min = s.values.iter().cloned().fold(0.0, f64::min);
        assert!((min + 1.8e-5).abs() < 1e-20);
        assert!(s.values.iter().all(|v| *v <= 0.0));
        assert!(synthetic_methane_absorption(&[1000.0, 1001.0]).is_err());
    }
}
