use gasmf::background::{default_shrinkage_grid, loo_score, select_shrinkage, shrink_toward_diagonal};
use nalgebra::{DMatrix, DVector, SymmetricEigen};
use ndarray::Array2;
use proptest::prelude::*;

fn to_na(m: &Array2<f64>) -> DMatrix<f64> {
    DMatrix::from_fn(m.nrows(), m.ncols(), |i, j| m[[i, j]])
}

/// Mean held-out Gaussian NLL, refitting the scaled estimate without each
/// sample in turn. Mean and diagonal target stay fixed.
fn brute_force_loo(samples: &[Vec<f64>], lambda: f64) -> f64 {
    let n = samples.len();
    let b = samples[0].len();
    let nf = n as f64;
    let cov = DMatrix::from_fn(b, b, |i, j| samples.iter().map(|x| x[i] * x[j]).sum::<f64>() / nf);
    let diag = DMatrix::from_diagonal(&cov.diagonal());
    let mut total = 0.0;
    for k in 0..n {
        let mut held = DMatrix::<f64>::zeros(b, b);
        for (i, x) in samples.iter().enumerate() {
            if i != k {
                let v = DVector::from_column_slice(x);
                held += &v * v.transpose();
            }
        }
        let a = held * ((1.0 - lambda) / (nf - 1.0)) + &diag * lambda;
        let ch = a.clone().cholesky().expect("positive definite");
        let x = DVector::from_column_slice(&samples[k]);
        let maha = x.dot(&ch.solve(&x));
        let logdet = 2.0 * ch.l().diagonal().iter().map(|v| v.ln()).sum::<f64>();
        total += 0.5 * (logdet + maha + b as f64 * (2.0 * std::f64::consts::PI).ln());
    }
    total / nf
}

fn population_cov(samples: &[Vec<f64>]) -> Array2<f64> {
    let b = samples[0].len();
    let n = samples.len() as f64;
    Array2::from_shape_fn((b, b), |(i, j)| samples.iter().map(|x| x[i] * x[j]).sum::<f64>() / n)
}

#[test]
fn loo_score_is_exact_when_leverages_are_equal() {
    // +-sigma_j e_j: every sample has the same Mahalanobis leverage, so the
    // averaged downdate is the exact leave-one-out refit
    let sigma = [1.0, 2.5, 0.4, 3.0];
    let mut samples = Vec::new();
    for (j, s) in sigma.iter().enumerate() {
        for sign in [1.0, -1.0] {
            let mut x = vec![0.0; sigma.len()];
            x[j] = sign * s;
            samples.push(x);
        }
    }
    let cov = population_cov(&samples);
    for lambda in [1e-3, 0.1, 0.5, 0.9, 1.0] {
        let proxy = loo_score(&cov, samples.len(), lambda);
        let exact = brute_force_loo(&samples, lambda);
        assert!(
            (proxy - exact).abs() <= 1e-10 * exact.abs().max(1.0),
            "lambda {lambda}: {proxy} vs {exact}"
        );
    }
}

#[test]
fn shrinkage_helps_when_samples_are_scarce() {
    // 12 samples of an 8-band diagonal population: shrinking toward the
    // diagonal should beat the raw estimate under both scores
    let mut state = 12345u64;
    let mut unif = move || {
        state = state
            .wrapping_mul(6364136223846793005)
            .wrapping_add(1442695040888963407);
        (state >> 11) as f64 / (1u64 << 53) as f64 - 0.5
    };
    let samples: Vec<Vec<f64>> = (0..12)
        .map(|_| (0..8).map(|k| (1.0 + k as f64) * unif()).collect())
        .collect();
    let cov = population_cov(&samples);
    let (_, est) = select_shrinkage(&cov, samples.len(), &default_shrinkage_grid()).unwrap();
    assert!(est.shrinkage > 1e-4, "picked {}", est.shrinkage);
    assert!(brute_force_loo(&samples, est.shrinkage) < brute_force_loo(&samples, 1e-4));
}

fn spd_strategy() -> impl Strategy<Value = Array2<f64>> {
    (2usize..6).prop_flat_map(|b| {
        prop::collection::vec(-2.0f64..2.0, b * (b + 2)).prop_map(move |v| {
            // b+2 samples make a full-rank but possibly ill-conditioned scatter
            let n = b + 2;
            Array2::from_shape_fn((b, b), |(i, j)| {
                (0..n).map(|k| v[k * b + i] * v[k * b + j]).sum::<f64>() / n as f64
            })
        })
    })
}

proptest! {
    #[test]
    fn shrinkage_keeps_psd_and_improves_conditioning(cov in spd_strategy()) {
        let mut prev_cond = f64::INFINITY;
        for lambda in [0.0, 1e-3, 0.01, 0.1, 0.5, 1.0] {
            let shrunk = shrink_toward_diagonal(&cov, lambda);
            let eig = SymmetricEigen::new(to_na(&shrunk)).eigenvalues;
            let max = eig.max();
            let min = eig.min();
            prop_assert!(min >= -1e-12 * max, "lambda {lambda}: eigenvalue {min}");
            let cond = if min > 0.0 { max / min } else { f64::INFINITY };
            prop_assert!(cond <= prev_cond * (1.0 + 1e-9), "lambda {lambda}: {cond} after {prev_cond}");
            prev_cond = cond;
        }
    }
}
