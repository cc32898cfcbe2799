use approx::assert_relative_eq;
use gasmf::eval::{regression_enhanced, relative_improvement, rmse_split};
use gasmf::io::{EnviHeader, RadianceCube};
use gasmf::simulate::{
    add_noise, gaussian_plume_truth, random_sparse_truth, simulate_scene, synthetic_base_scene,
    synthetic_methane_absorption, BaseSceneConfig, NoiseModel,
};
use ndarray::{array, Array2};

fn flat(lines: usize, samples: usize, bands: usize, value: f64) -> RadianceCube<f64> {
    let h = EnviHeader::new(lines, samples, (0..bands).map(|k| 2100.0 + k as f64).collect()).unwrap();
    RadianceCube::from_values(h, vec![value; lines * samples * bands]).unwrap()
}

#[test]
fn noise_has_the_modelled_spread() {
    let cube = flat(100, 100, 2, 4.0);
    let model = NoiseModel::new(vec![0.01, 0.05], vec![0.002, 0.0]).unwrap();
    let noisy = add_noise(&cube, &model, 9).unwrap();
    for band in 0..2 {
        let v: Vec<f64> = noisy.values().chunks(2).map(|p| p[band] - 4.0).collect();
        let n = v.len() as f64;
        let mean = v.iter().sum::<f64>() / n;
        let sd = (v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n).sqrt();
        let want = model.std_dev(band, 4.0);
        // 10^4 draws: the sample std is within 3% with overwhelming probability
        assert_relative_eq!(sd, want, max_relative = 0.03);
        assert!(mean.abs() < 4.0 * want / n.sqrt());
    }
}

#[test]
fn scene_is_reproducible_from_its_seed() {
    let config = BaseSceneConfig {
        lines: 20,
        samples: 15,
        bands: 12,
        ..Default::default()
    };
    let base = synthetic_base_scene(&config).unwrap();
    let s = synthetic_methane_absorption(base.wavelengths()).unwrap();
    let noise = NoiseModel::uniform(12, 0.0025, 0.0025).unwrap();
    let make = |seed| {
        let truth = random_sparse_truth(20, 15, 0.1, 5000.0, seed).unwrap();
        simulate_scene(&base, "base", truth, &s, "ch4", &noise, Some((5, 2)), seed).unwrap()
    };
    let (a, b, c) = (make(4), make(4), make(5));
    assert_eq!(a.cube.values(), b.cube.values());
    assert_eq!(a.truth, b.truth);
    assert_ne!(a.cube.values(), c.cube.values());
    assert_eq!(a.truth.nonzero_count(), 30);
    assert_eq!(a.provenance.smoothing, Some((5, 2)));
}

#[test]
fn plume_peaks_at_source_and_decays_downwind() {
    let truth = gaussian_plume_truth(40, 60, (20, 10), 1000.0, 15.0, 3.0, 0.0).unwrap();
    let a = &truth.alpha_true;
    assert_eq!(a[[20, 10]], 1000.0);
    assert!(a[[20, 25]] < a[[20, 15]] && a[[20, 15]] < a[[20, 10]]);
    assert!(a[[23, 20]] < a[[20, 20]]);
    assert_relative_eq!(a[[23, 20]], a[[17, 20]], max_relative = 1e-12);
}

#[test]
fn metrics_on_a_hand_example() {
    let truth = array![[0.0, 0.0], [200.0, 400.0]];
    let retrieved = array![[10.0, -10.0], [180.0, 430.0]];
    let split = rmse_split(&retrieved, &truth, 0.0, None).unwrap();
    assert_relative_eq!(split.nonenhanced.unwrap(), 10.0);
    assert_relative_eq!(split.enhanced.unwrap(), (650.0f64).sqrt());
    assert_relative_eq!(split.all.unwrap(), (375.0f64).sqrt());
    let reg = regression_enhanced(&retrieved, &truth, 100.0, None).unwrap();
    assert_relative_eq!(reg.slope, 1.25);
    assert_relative_eq!(reg.intercept, -70.0, max_relative = 1e-12);
    assert_relative_eq!(relative_improvement(5.0, 20.0).unwrap(), 0.75);
    let empty: Array2<f64> = Array2::zeros((2, 2));
    assert!(regression_enhanced(&empty, &empty, 100.0, None).is_err());
}
