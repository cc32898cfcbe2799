//! Validation scenes with known enhancement: smoothed base radiance,
//! Beer-Lambert injection, instrument noise and truth-field generators.

mod inject;
mod noise;
mod savgol;
mod scene;
mod truth;

pub use inject::inject_enhancement;
pub use noise::{add_noise, NoiseModel, RNG_NAME};
pub use savgol::{savitzky_golay, smooth_cube, SavitzkyGolay};
pub use scene::{
    noise_seed, simulate_scene, synthetic_base_scene, synthetic_methane_absorption, synthetic_wavelengths,
    BaseSceneConfig, SceneProvenance, SyntheticScene,
};
pub use truth::{gaussian_plume_truth, random_sparse_truth, TruthField, TruthKind, TruthParameters};
