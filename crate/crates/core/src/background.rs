//! Gaussian background model (mean and covariance) for one partition.
//!
//! All normalisations are population (1/N). Reductions run over fixed pixel
//! chunks so results do not depend on the worker count.

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::linalg::{self, Cholesky};
use crate::parallel;
use crate::pixels::PixelSet;
use crate::{Error, Result, Scalar};

/// Relative diagonal jitter tried first when a covariance fails to factor.
pub const JITTER_START: f64 = 1e-8;
/// Largest relative jitter before giving up.
pub const JITTER_MAX: f64 = 1e-2;

/// Mean, covariance and cached Cholesky factor of one partition's background.
#[derive(Debug, Clone)]
pub struct BackgroundModel<T> {
    mean: Vec<T>,
    covariance: Array2<T>,
    factor: Cholesky<T>,
    jitter: T,
    pixel_count: usize,
}

impl<T: Scalar> BackgroundModel<T> {
    /// Factor `covariance`, adding diagonal jitter only if the plain factorization
    /// fails. Jitter starts at `1e-8 * trace / bands` and grows tenfold up to
    /// `1e-2 * trace / bands`.
    pub fn new(mean: Vec<T>, covariance: Array2<T>, pixel_count: usize) -> Result<Self> {
        let b = mean.len();
        if covariance.dim() != (b, b) {
            return Err(Error::ShapeError(format!(
                "covariance {:?} does not match {} bands",
                covariance.dim(),
                b
            )));
        }
        if mean.iter().any(|m| !m.is_finite()) || covariance.iter().any(|c| !c.is_finite()) {
            return Err(Error::DomainError("background statistics are not finite".into()));
        }
        if let Some(factor) = Cholesky::factor(&covariance) {
            return Ok(Self {
                mean,
                covariance,
                factor,
                jitter: T::zero(),
                pixel_count,
            });
        }
        let scale = linalg::trace(&covariance) / T::from_usize_lossy(b.max(1));
        let mut rel = JITTER_START;
        let mut last = T::zero();
        while rel <= JITTER_MAX * (1.0 + 1e-9) {
            let jitter = scale * T::c(rel);
            last = jitter;
            if jitter > T::zero() {
                if let Some(factor) = Cholesky::factor_shifted(&covariance, jitter) {
                    return Ok(Self {
                        mean,
                        covariance,
                        factor,
                        jitter,
                        pixel_count,
                    });
                }
            }
            rel *= 10.0;
        }
        Err(Error::SingularCovariance { jitter: last.as_f64() })
    }

    pub fn mean(&self) -> &[T] {
        &self.mean
    }

    /// Covariance as estimated, without any conditioning jitter.
    pub fn covariance(&self) -> &Array2<T> {
        &self.covariance
    }

    /// Diagonal jitter that was added before factorization (0 if none).
    pub fn jitter(&self) -> T {
        self.jitter
    }

    pub fn pixel_count(&self) -> usize {
        self.pixel_count
    }

    pub fn bands(&self) -> usize {
        self.mean.len()
    }

    pub fn factor(&self) -> &Cholesky<T> {
        &self.factor
    }

    /// `(C + jitter I)^-1 v` without forming the inverse.
    pub fn solve(&self, v: &[T]) -> Vec<T> {
        self.factor.solve(v)
    }
}

/// Solve `C x = v` against a model's factorization.
pub fn solve_spd<T: Scalar>(model: &BackgroundModel<T>, v: &[T]) -> Result<Vec<T>> {
    if v.len() != model.bands() {
        return Err(Error::ShapeError(format!(
            "vector has {} entries, model {} bands",
            v.len(),
            model.bands()
        )));
    }
    Ok(model.solve(v))
}

fn check_bands<T: Scalar, P: PixelSet<T> + ?Sized>(pixels: &P, len: usize, what: &str) -> Result<()> {
    if pixels.bands() != len {
        return Err(Error::ShapeError(format!(
            "{what} has {len} entries, pixels have {} bands",
            pixels.bands()
        )));
    }
    Ok(())
}

fn add_into<T: Scalar>(mut a: Vec<T>, b: Vec<T>) -> Vec<T> {
    for (x, y) in a.iter_mut().zip(b) {
        *x += y;
    }
    a
}

/// Arithmetic mean spectrum.
pub fn compute_mean<T: Scalar, P: PixelSet<T> + ?Sized>(pixels: &P) -> Result<Vec<T>> {
    let n = pixels.pixel_count();
    if n == 0 {
        return Err(Error::EmptyPartition);
    }
    let b = pixels.bands();
    let sum = parallel::map_reduce(
        n,
        |r| {
            let mut acc = vec![T::zero(); b];
            for i in r {
                for (a, x) in acc.iter_mut().zip(pixels.pixel(i)) {
                    *a += *x;
                }
            }
            acc
        },
        add_into,
    )
    .expect("n > 0");
    let nt = T::from_usize_lossy(n);
    Ok(sum.into_iter().map(|s| s / nt).collect())
}

/// Population covariance about `mean`.
pub fn compute_covariance<T: Scalar, P: PixelSet<T> + ?Sized>(pixels: &P, mean: &[T]) -> Result<Array2<T>> {
    let n = pixels.pixel_count();
    if n < 2 {
        return Err(Error::InsufficientSamples { needed: 2, found: n });
    }
    check_bands(pixels, mean.len(), "mean")?;
    let b = mean.len();
    let packed = parallel::map_reduce(
        n,
        |r| {
            let mut acc = vec![T::zero(); linalg::packed_len(b)];
            let mut d = vec![T::zero(); b];
            for i in r {
                for ((dk, x), m) in d.iter_mut().zip(pixels.pixel(i)).zip(mean) {
                    *dk = *x - *m;
                }
                linalg::syr_upper(&d, &mut acc);
            }
            acc
        },
        add_into,
    )
    .expect("n > 0");
    Ok(linalg::unpack_symmetric(b, &packed, T::one() / T::from_usize_lossy(n)))
}

/// Background statistics after removing the current signal estimate.
///
/// With `beta_i = r_i * alpha_i`, the mean removes `beta_i * (prev_mean * s)`
/// and the covariance is taken over residuals
/// `d_i = L_i - beta_i * (mean * s) - mean` using the freshly updated mean.
/// Pass `r_i = 1` for filters without albedo correction.
pub fn update_background<T: Scalar, P: PixelSet<T> + ?Sized>(
    pixels: &P,
    alpha: &[T],
    albedo: &[T],
    s: &[T],
    prev_mean: &[T],
) -> Result<BackgroundModel<T>> {
    let n = pixels.pixel_count();
    if alpha.len() != n || albedo.len() != n {
        return Err(Error::ShapeError(format!(
            "{} pixels but {} enhancements and {} albedo factors",
            n,
            alpha.len(),
            albedo.len()
        )));
    }
    check_bands(pixels, s.len(), "absorption spectrum")?;
    check_bands(pixels, prev_mean.len(), "previous mean")?;
    if let Some(i) = alpha.iter().position(|a| !(*a >= T::zero())) {
        return Err(Error::ContractViolation(format!(
            "enhancement {} at pixel {i} is negative",
            alpha[i]
        )));
    }
    if n < 2 {
        return Err(Error::InsufficientSamples { needed: 2, found: n });
    }
    let b = s.len();
    let nt = T::from_usize_lossy(n);
    let prev_target: Vec<T> = prev_mean.iter().zip(s).map(|(m, s)| *m * *s).collect();
    let sum = parallel::map_reduce(
        n,
        |r| {
            let mut acc = vec![T::zero(); b];
            for i in r {
                let beta = albedo[i] * alpha[i];
                for ((a, x), t) in acc.iter_mut().zip(pixels.pixel(i)).zip(&prev_target) {
                    *a += *x - beta * *t;
                }
            }
            acc
        },
        add_into,
    )
    .expect("n > 0");
    let mean: Vec<T> = sum.into_iter().map(|v| v / nt).collect();
    let target: Vec<T> = mean.iter().zip(s).map(|(m, s)| *m * *s).collect();
    let packed = parallel::map_reduce(
        n,
        |r| {
            let mut acc = vec![T::zero(); linalg::packed_len(b)];
            let mut d = vec![T::zero(); b];
            for i in r {
                let beta = albedo[i] * alpha[i];
                for (k, dk) in d.iter_mut().enumerate() {
                    *dk = pixels.pixel(i)[k] - beta * target[k] - mean[k];
                }
                linalg::syr_upper(&d, &mut acc);
            }
            acc
        },
        add_into,
    )
    .expect("n > 0");
    let covariance = linalg::unpack_symmetric(b, &packed, T::one() / nt);
    BackgroundModel::new(mean, covariance, n)
}

/// Centered second moments of a pixel set, kept so that covariances of
/// signal-removed residuals can be updated in `O(N b)` rather than
/// `O(N b^2)` per iteration.
#[derive(Debug, Clone)]
pub struct ScatterMoments<T> {
    n: usize,
    mean: Vec<T>,
    /// packed upper triangle of `sum (L_i - mean)(L_i - mean)^T`
    scatter: Vec<T>,
}

impl<T: Scalar> ScatterMoments<T> {
    pub fn from_pixels<P: PixelSet<T> + ?Sized>(pixels: &P) -> Result<Self> {
        let mean = compute_mean(pixels)?;
        let b = mean.len();
        // blocked X^T X per chunk keeps this at matrix-multiply speed
        let full = parallel::map_reduce(
            pixels.pixel_count(),
            |r| {
                let mut x = Array2::<T>::zeros((r.len(), b));
                for (row, i) in x.rows_mut().into_iter().zip(r) {
                    for ((dst, v), m) in row.into_iter().zip(pixels.pixel(i)).zip(&mean) {
                        *dst = *v - *m;
                    }
                }
                x.t().dot(&x)
            },
            |a, b| a + b,
        )
        .expect("non-empty");
        let mut scatter = Vec::with_capacity(linalg::packed_len(b));
        for i in 0..b {
            for j in i..b {
                scatter.push(full[[i, j]]);
            }
        }
        Ok(Self {
            n: pixels.pixel_count(),
            mean,
            scatter,
        })
    }

    pub fn pixel_count(&self) -> usize {
        self.n
    }

    /// `sum (L_i - mean)(L_i - mean)^T`
    pub fn scatter(&self) -> Array2<T> {
        linalg::unpack_symmetric(self.mean.len(), &self.scatter, T::one())
    }

    /// Population covariance of the raw pixels.
    pub fn covariance(&self) -> Array2<T> {
        linalg::unpack_symmetric(self.mean.len(), &self.scatter, T::one() / T::from_usize_lossy(self.n))
    }

    /// Sample mean of the raw pixels.
    pub fn mean(&self) -> &[T] {
        &self.mean
    }

    /// `sum_i d_i d_i^T` for `d_i = L_i - center - beta_i * m`, given
    /// `g = sum_i beta_i (L_i - mean)`, `b1 = sum_i beta_i`, `b2 = sum_i beta_i^2`.
    pub fn residual_scatter(&self, center: &[T], m: &[T], g: &[T], b1: T, b2: T) -> Array2<T> {
        let b = self.mean.len();
        let nt = T::from_usize_lossy(self.n);
        let delta: Vec<T> = self.mean.iter().zip(center).map(|(a, c)| *a - *c).collect();
        let h: Vec<T> = g.iter().zip(&delta).map(|(g, d)| *g + b1 * *d).collect();
        let mut out = linalg::unpack_symmetric(b, &self.scatter, T::one());
        for i in 0..b {
            for j in i..b {
                let v = out[[i, j]] + nt * delta[i] * delta[j] - h[i] * m[j] - m[i] * h[j] + b2 * m[i] * m[j];
                out[[i, j]] = v;
                out[[j, i]] = v;
            }
        }
        out
    }
}

/// Outcome of the shrinkage search.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShrinkageEstimate {
    /// Selected shrinkage toward the diagonal, in `[0, 1]`.
    pub shrinkage: f64,
    /// Approximate mean leave-one-out negative log-likelihood at the selection.
    pub score: f64,
    /// `(shrinkage, score)` for every candidate; infinite where the
    /// candidate covariance is singular.
    pub scores: Vec<(f64, f64)>,
}

/// Nine log-spaced shrinkage values `10^-4, 10^-3.5, ..., 10^0`.
pub fn default_shrinkage_grid() -> Vec<f64> {
    (0..9).map(|k| 10f64.powf(-4.0 + 0.5 * k as f64)).collect()
}

/// `(1 - lambda) C + lambda diag(C)`
pub fn shrink_toward_diagonal<T: Scalar>(cov: &Array2<T>, lambda: f64) -> Array2<T> {
    let l = T::c(lambda);
    let mut out = cov.mapv(|v| v * (T::one() - l));
    for i in 0..cov.nrows() {
        out[[i, i]] = cov[[i, i]];
    }
    out
}

/// Approximate mean leave-one-out NLL of shrinking sample covariance `cov`
/// (population-normalised over `n` samples) by `lambda`.
///
/// Removing sample `k` is a rank-one downdate of the scaled estimate
/// `A = (1-l) n/(n-1) C + l D`, so by Sherman-Morrison the held-out
/// Mahalanobis term is `r_k / (1 - beta r_k)` and the log-determinant gains
/// `ln(1 - beta r_k)`, with `beta = (1-l)/(n-1)` and `r_k = x_k' A^-1 x_k`.
/// Every `r_k` is replaced by its mean `trace(A^-1 C)`, which keeps the
/// search at `O(b^3)` per candidate.
pub fn loo_score<T: Scalar>(cov: &Array2<T>, n: usize, lambda: f64) -> f64 {
    let b = cov.nrows();
    let nf = n as f64;
    let scaled = (1.0 - lambda) * nf / (nf - 1.0);
    let mut a = cov.mapv(|v| v * T::c(scaled));
    for i in 0..b {
        a[[i, i]] = cov[[i, i]] * T::c(scaled + lambda);
    }
    let Some(ch) = Cholesky::factor(&a) else {
        return f64::INFINITY;
    };
    let r_mean = ch.trace_solve(cov).as_f64();
    let beta = (1.0 - lambda) / (nf - 1.0);
    let q = 1.0 - beta * r_mean;
    if !(q > 0.0) {
        return f64::INFINITY;
    }
    0.5 * (ch.log_det().as_f64() + q.ln() + r_mean / q + b as f64 * (2.0 * std::f64::consts::PI).ln())
}

/// Pick the shrinkage on `grid` with the smallest approximate leave-one-out
/// NLL and return the shrunk covariance. Ties go to the smaller value.
pub fn select_shrinkage<T: Scalar>(cov: &Array2<T>, n: usize, grid: &[f64]) -> Result<(Array2<T>, ShrinkageEstimate)> {
    if grid.is_empty() {
        return Err(Error::ContractViolation("empty shrinkage grid".into()));
    }
    if let Some(bad) = grid.iter().find(|l| !(0.0..=1.0).contains(*l)) {
        return Err(Error::ContractViolation(format!("shrinkage {bad} outside [0, 1]")));
    }
    if n < 2 {
        return Err(Error::InsufficientSamples { needed: 2, found: n });
    }
    let scores: Vec<(f64, f64)> = grid.iter().map(|&l| (l, loo_score(cov, n, l))).collect();
    let (shrinkage, score) = scores
        .iter()
        .copied()
        .filter(|(_, s)| s.is_finite())
        .fold(None, |best: Option<(f64, f64)>, cand| match best {
            Some(b) if b.1 < cand.1 || (b.1 == cand.1 && b.0 <= cand.0) => Some(b),
            _ => Some(cand),
        })
        .ok_or(Error::SingularCovariance { jitter: 0.0 })?;
    Ok((
        shrink_toward_diagonal(cov, shrinkage),
        ShrinkageEstimate {
            shrinkage,
            score,
            scores,
        },
    ))
}

/// Sample covariance shrunk toward its diagonal by the grid value that
/// minimises the approximate leave-one-out NLL.
pub fn robust_shrinkage_covariance<T: Scalar, P: PixelSet<T> + ?Sized>(
    pixels: &P,
    mean: &[T],
    grid: &[f64],
) -> Result<(BackgroundModel<T>, ShrinkageEstimate)> {
    let sample = compute_covariance(pixels, mean)?;
    let (cov, est) = select_shrinkage(&sample, pixels.pixel_count(), grid)?;
    Ok((BackgroundModel::new(mean.to_vec(), cov, pixels.pixel_count())?, est))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pixels::PixelMatrix;
    use ndarray::array;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_pixels(n: usize, b: usize, seed: u64) -> PixelMatrix<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        // correlated spectra: shared factor plus band noise
        let data = (0..n)
            .flat_map(|_| {
                let f: f64 = rng.random_range(-1.0..1.0);
                (0..b)
                    .map(|k| 10.0 + k as f64 + f * (1.0 + 0.1 * k as f64) + rng.random_range(-0.5..0.5))
                    .collect::<Vec<_>>()
            })
            .collect();
        PixelMatrix::new(b, data).unwrap()
    }

    fn frob(m: &Array2<f64>) -> f64 {
        m.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    #[test]
    fn mean_examples() {
        let p = PixelMatrix::from_rows(&[[0.0, 0.0], [2.0, 2.0]]).unwrap();
        assert_eq!(compute_mean(&p).unwrap(), vec![1.0, 1.0]);
        let one = PixelMatrix::from_rows(&[[3.5, -1.0]]).unwrap();
        assert_eq!(compute_mean(&one).unwrap(), vec![3.5, -1.0]);
        let empty = PixelMatrix::<f64>::new(2, vec![]).unwrap();
        assert!(matches!(compute_mean(&empty), Err(Error::EmptyPartition)));
    }

    #[test]
    fn mean_matches_naive_summation() {
        let p = random_pixels(100, 5, 3);
        let got = compute_mean(&p).unwrap();
        for k in 0..5 {
            let naive: f64 = (0..100).map(|i| p.pixel(i)[k]).sum::<f64>() / 100.0;
            assert!((got[k] - naive).abs() <= 1e-12 * naive.abs());
        }
    }

    #[test]
    fn covariance_examples() {
        let p = PixelMatrix::from_rows(&[[0.0, 0.0], [2.0, 2.0]]).unwrap();
        assert_eq!(
            compute_covariance(&p, &[1.0, 1.0]).unwrap(),
            array![[1.0, 1.0], [1.0, 1.0]]
        );
        let same = PixelMatrix::from_rows(&[[4.0, 5.0]; 3]).unwrap();
        assert_eq!(compute_covariance(&same, &[4.0, 5.0]).unwrap(), Array2::zeros((2, 2)));
        let one = PixelMatrix::from_rows(&[[1.0, 2.0]]).unwrap();
        assert!(matches!(
            compute_covariance(&one, &[1.0, 2.0]),
            Err(Error::InsufficientSamples { .. })
        ));
    }

    #[test]
    fn covariance_matches_naive_accumulation() {
        let p = random_pixels(50, 6, 11);
        let mu = compute_mean(&p).unwrap();
        let got = compute_covariance(&p, &mu).unwrap();
        let mut naive = Array2::<f64>::zeros((6, 6));
        for i in 0..50 {
            for a in 0..6 {
                for b in 0..6 {
                    naive[[a, b]] += (p.pixel(i)[a] - mu[a]) * (p.pixel(i)[b] - mu[b]) / 50.0;
                }
            }
        }
        assert!(frob(&(&got - &naive)) <= 1e-10 * frob(&naive));
    }

    #[test]
    fn update_without_signal_is_plain_statistics() {
        let p = random_pixels(40, 4, 5);
        let mu = compute_mean(&p).unwrap();
        let c = compute_covariance(&p, &mu).unwrap();
        let s = [-1e-3, -2e-3, 0.0, -5e-4];
        let m = update_background(&p, &[0.0; 40], &[1.0; 40], &s, &mu).unwrap();
        assert_eq!(m.mean(), &mu[..]);
        assert!(frob(&(m.covariance() - &c)) <= 1e-14 * frob(&c));
    }

    #[test]
    fn removing_exact_signal_from_constant_background() {
        let mu0 = [10.0, 20.0, 15.0];
        let s = [-1e-3, -4e-3, -2e-3];
        let alphas: Vec<f64> = (0..12).map(|i| 10.0 * i as f64).collect();
        let rows: Vec<Vec<f64>> = alphas
            .iter()
            .map(|a| (0..3).map(|k| mu0[k] + a * mu0[k] * s[k]).collect())
            .collect();
        let p = PixelMatrix::from_rows(&rows).unwrap();
        let err = update_background(&p, &alphas, &[1.0; 12], &s, &mu0);
        // residuals collapse, so the covariance is numerically zero and only
        // the conditioning path can factor it
        assert!(compute_mean(&p).unwrap().iter().zip(&mu0).any(|(a, b)| a != b));
        match err {
            Ok(model) => {
                let scale = mu0.iter().map(|m| m * m).sum::<f64>();
                assert!(frob(model.covariance()) <= 1e-9 * scale);
                for k in 0..3 {
                    assert!((model.mean()[k] - mu0[k]).abs() <= 1e-12 * mu0[k]);
                }
            }
            Err(e) => assert!(matches!(e, Error::SingularCovariance { .. })),
        }
    }

    #[test]
    fn signal_removal_fixed_point() {
        let bg = random_pixels(60, 5, 21);
        let mu_b = compute_mean(&bg).unwrap();
        let c_b = compute_covariance(&bg, &mu_b).unwrap();
        let s = [-2e-3, -1e-3, -3e-3, 0.0, -5e-4];
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let alphas: Vec<f64> = (0..60)
            .map(|i| if i % 7 == 0 { rng.random_range(0.0..50.0) } else { 0.0 })
            .collect();
        let r: Vec<f64> = (0..60).map(|_| rng.random_range(0.5..1.5)).collect();
        let data: Vec<f64> = (0..60)
            .flat_map(|i| {
                (0..5)
                    .map(|k| bg.pixel(i)[k] + r[i] * alphas[i] * mu_b[k] * s[k])
                    .collect::<Vec<_>>()
            })
            .collect();
        let p = PixelMatrix::new(5, data).unwrap();
        let m = update_background(&p, &alphas, &r, &s, &mu_b).unwrap();
        for k in 0..5 {
            assert!((m.mean()[k] - mu_b[k]).abs() <= 1e-9 * mu_b[k].abs());
        }
        assert!(frob(&(m.covariance() - &c_b)) <= 1e-9 * frob(&c_b));
    }

    #[test]
    fn single_enhanced_pixel_shifts_mean_linearly() {
        let n = 20;
        let base = [5.0, 6.0, 7.0];
        let s = [-1e-2, -2e-2, -5e-3];
        let bg = random_pixels(n, 3, 6);
        let mut rows: Vec<Vec<f64>> = (0..n).map(|i| bg.pixel(i).to_vec()).collect();
        let a = 3.0;
        for k in 0..3 {
            rows[4][k] += a * base[k] * s[k];
        }
        let p = PixelMatrix::from_rows(&rows).unwrap();
        let mut alpha = vec![0.0; n];
        alpha[4] = a;
        let plain_mean = compute_mean(&p).unwrap();
        let removed_mean = match update_background(&p, &alpha, &vec![1.0; n], &s, &base) {
            Ok(m) => m.mean().to_vec(),
            Err(e) => panic!("{e}"),
        };
        for k in 0..3 {
            let expect = plain_mean[k] - a * base[k] * s[k] / n as f64;
            assert!((removed_mean[k] - expect).abs() < 1e-12);
        }
    }

    #[test]
    fn negative_alpha_is_a_contract_violation() {
        let p = random_pixels(5, 2, 1);
        let mu = compute_mean(&p).unwrap();
        let r = update_background(&p, &[0.0, -1.0, 0.0, 0.0, 0.0], &[1.0; 5], &[0.0, 0.0], &mu);
        assert!(matches!(r, Err(Error::ContractViolation(_))));
    }

    #[test]
    fn scatter_moments_match_direct_residual_covariance() {
        let p = random_pixels(80, 5, 8);
        let mom = ScatterMoments::from_pixels(&p).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let beta: Vec<f64> = (0..80)
            .map(|i| if i % 3 == 0 { rng.random_range(0.0..20.0) } else { 0.0 })
            .collect();
        let center: Vec<f64> = mom.mean().iter().map(|m| m * 0.99).collect();
        let m = [-0.02, -0.01, -0.03, 0.0, -0.005];
        let mut g = vec![0.0; 5];
        for i in 0..80 {
            for k in 0..5 {
                g[k] += beta[i] * (p.pixel(i)[k] - mom.mean()[k]);
            }
        }
        let b1: f64 = beta.iter().sum();
        let b2: f64 = beta.iter().map(|x| x * x).sum();
        let fast = mom.residual_scatter(&center, &m, &g, b1, b2);
        let mut direct = Array2::<f64>::zeros((5, 5));
        for i in 0..80 {
            let d: Vec<f64> = (0..5).map(|k| p.pixel(i)[k] - center[k] - beta[i] * m[k]).collect();
            for a in 0..5 {
                for b in 0..5 {
                    direct[[a, b]] += d[a] * d[b];
                }
            }
        }
        assert!(frob(&(&fast - &direct)) <= 1e-10 * frob(&direct));
    }

    #[test]
    fn solve_examples() {
        let eye = BackgroundModel::new(vec![0.0; 3], Array2::eye(3), 10).unwrap();
        assert_eq!(solve_spd(&eye, &[1.0, -2.0, 3.0]).unwrap(), vec![1.0, -2.0, 3.0]);
        let diag = BackgroundModel::new(vec![0.0; 2], array![[4.0, 0.0], [0.0, 1.0]], 10).unwrap();
        assert_eq!(solve_spd(&diag, &[4.0, 1.0]).unwrap(), vec![1.0, 1.0]);
        assert!(matches!(solve_spd(&diag, &[1.0]), Err(Error::ShapeError(_))));
    }

    #[test]
    fn random_spd_solve_residual() {
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        for _ in 0..20 {
            let a = Array2::from_shape_fn((6, 6), |_| rng.random_range(-1.0..1.0));
            let c = a.dot(&a.t()) + Array2::<f64>::eye(6) * 0.1;
            let v: Vec<f64> = (0..6).map(|_| rng.random_range(-5.0..5.0)).collect();
            let model = BackgroundModel::new(vec![0.0; 6], c.clone(), 10).unwrap();
            let x = solve_spd(&model, &v).unwrap();
            let cx = c.dot(&ndarray::Array1::from(x));
            let res: f64 = cx.iter().zip(&v).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
            let nv: f64 = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            assert!(res <= 1e-10 * nv);
        }
    }

    #[test]
    fn conditioning_escalates_then_fails() {
        let rank_one = array![[1.0, 1.0], [1.0, 1.0]];
        let m = BackgroundModel::new(vec![0.0, 0.0], rank_one, 5).unwrap();
        assert!(m.jitter() > 0.0 && m.jitter() <= 1e-2);
        let zero = Array2::<f64>::zeros((2, 2));
        assert!(matches!(
            BackgroundModel::new(vec![0.0, 0.0], zero, 5),
            Err(Error::SingularCovariance { .. })
        ));
        let well = array![[2.0, 0.1], [0.1, 1.0]];
        assert_eq!(BackgroundModel::new(vec![0.0, 0.0], well, 5).unwrap().jitter(), 0.0);
    }

    #[test]
    fn shrinkage_singleton_grid_and_rank_deficiency() {
        let p = random_pixels(30, 4, 2);
        let mu = compute_mean(&p).unwrap();
        let (_, est) = robust_shrinkage_covariance(&p, &mu, &[0.1]).unwrap();
        assert_eq!(est.shrinkage, 0.1);

        // as many pixels as bands: centered sample covariance is singular
        let q = random_pixels(4, 4, 3);
        let mu = compute_mean(&q).unwrap();
        let mut grid = vec![0.0];
        grid.extend(default_shrinkage_grid());
        let (_, est) = robust_shrinkage_covariance(&q, &mu, &grid).unwrap();
        assert!(est.shrinkage > 0.0);
        assert!(est.scores[0].1.is_infinite());
    }

    #[test]
    fn default_grid_is_log_spaced() {
        let g = default_shrinkage_grid();
        assert_eq!(g.len(), 9);
        assert!((g[0] - 1e-4).abs() < 1e-18);
        assert!((g[8] - 1.0).abs() < 1e-15);
        assert!((g[1] / g[0] - 10f64.sqrt()).abs() < 1e-12);
    }
}
