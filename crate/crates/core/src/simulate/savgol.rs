use ndarray::Array2;
use rayon::prelude::*;

use crate::io::RadianceCube;
use crate::linalg::Cholesky;
use crate::{Error, Result, Scalar};

/// Least-squares polynomial smoothing weights for one window size.
///
/// Row `j` holds the weights that evaluate the window's fitted polynomial at
/// window position `j`; the middle row is the usual smoothing kernel and the
/// others serve the first and last `width / 2` samples.
#[derive(Debug, Clone)]
pub struct SavitzkyGolay {
    width: usize,
    degree: usize,
    weights: Array2<f64>,
}

impl SavitzkyGolay {
    pub fn new(width: usize, degree: usize) -> Result<Self> {
        if width.is_multiple_of(2) {
            return Err(Error::InvalidFilterSpec(format!("window width {width} must be odd")));
        }
        if degree >= width {
            return Err(Error::InvalidFilterSpec(format!(
                "degree {degree} must be below window width {width}"
            )));
        }
        let half = width / 2;
        let p = degree + 1;
        // positions scaled to [-1, 1] keep the normal equations well conditioned
        let scale = half.max(1) as f64;
        let x: Vec<f64> = (0..width).map(|j| (j as f64 - half as f64) / scale).collect();
        let vander = Array2::from_shape_fn((width, p), |(j, k)| x[j].powi(k as i32));
        let gram = vander.t().dot(&vander);
        let chol = Cholesky::factor(&gram)
            .ok_or_else(|| Error::InvalidFilterSpec(format!("singular fit for width {width}, degree {degree}")))?;
        // weights = V (V^T V)^-1 V^T, built one column of V^T at a time
        let mut weights = Array2::zeros((width, width));
        for i in 0..width {
            let coef = chol.solve(&vander.row(i).to_vec());
            for j in 0..width {
                weights[[j, i]] = vander.row(j).iter().zip(&coef).map(|(v, c)| v * c).sum();
            }
        }
        Ok(Self { width, degree, weights })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    /// Weights producing the smoothed value at window position `pos`.
    pub fn weights_at(&self, pos: usize) -> &[f64] {
        self.weights.row(pos).to_slice().expect("standard layout")
    }

    pub fn apply<T: Scalar>(&self, spectrum: &[T]) -> Result<Vec<T>> {
        let n = spectrum.len();
        if n < self.width {
            return Err(Error::InvalidFilterSpec(format!(
                "spectrum of {n} bands is shorter than the {}-band window",
                self.width
            )));
        }
        let half = self.width / 2;
        let mut out = vec![T::zero(); n];
        self.apply_into(spectrum, &mut out, half);
        Ok(out)
    }

    fn apply_into<T: Scalar>(&self, x: &[T], out: &mut [T], half: usize) {
        let n = x.len();
        let w = self.width;
        let eval = |start: usize, pos: usize| -> T {
            let coeffs = self.weights_at(pos);
            let acc: f64 = coeffs
                .iter()
                .zip(&x[start..start + w])
                .map(|(c, v)| c * v.as_f64())
                .sum();
            T::c(acc)
        };
        for (i, o) in out.iter_mut().enumerate() {
            *o = if i < half {
                eval(0, i)
            } else if i + half >= n {
                eval(n - w, i + w - n)
            } else {
                eval(i - half, half)
            };
        }
    }
}

/// Smooth one spectrum with a `width`-sample window and a `degree` polynomial.
pub fn savitzky_golay<T: Scalar>(spectrum: &[T], width: usize, degree: usize) -> Result<Vec<T>> {
    SavitzkyGolay::new(width, degree)?.apply(spectrum)
}

/// Smooth every valid pixel's spectrum.
pub fn smooth_cube<T: Scalar>(cube: &RadianceCube<T>, width: usize, degree: usize) -> Result<RadianceCube<T>> {
    let filter = SavitzkyGolay::new(width, degree)?;
    let b = cube.bands();
    if b < width {
        return Err(Error::InvalidFilterSpec(format!(
            "cube has {b} bands, fewer than the {width}-band window"
        )));
    }
    let mut values = cube.values().to_vec();
    let valid = cube.valid_mask();
    values.par_chunks_mut(b).enumerate().for_each(|(i, px)| {
        if valid[i] {
            let src = px.to_vec();
            filter.apply_into(&src, px, width / 2);
        }
    });
    Ok(cube.with_values(values))
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Convolution weights for the central point from the textbook closed
    /// form for quadratic fits: `(3m^2 + 3m - 1 - 5j^2) * 3 / ((2m+3)(2m+1)(2m-1))`
    /// with `m = width / 2`.
    fn quadratic_kernel(m: i64) -> Vec<f64> {
        let den = ((2 * m + 3) * (2 * m + 1) * (2 * m - 1)) as f64;
        (-m..=m)
            .map(|j| 3.0 * (3 * m * m + 3 * m - 1 - 5 * j * j) as f64 / den)
            .collect()
    }

    #[test]
    fn quadratic_kernels_match_closed_form() {
        for m in [2, 3, 5, 10] {
            let f = SavitzkyGolay::new((2 * m + 1) as usize, 2).unwrap();
            let got = f.weights_at(m as usize);
            for (a, b) in got.iter().zip(quadratic_kernel(m)) {
                assert!((a - b).abs() < 1e-13, "m={m}: {a} vs {b}");
            }
        }
        let f = SavitzkyGolay::new(5, 2).unwrap();
        assert!((f.weights_at(2)[2] - 17.0 / 35.0).abs() < 1e-14);
    }

    #[test]
    fn reproduces_polynomials_up_to_its_degree() {
        let xs: Vec<f64> = (0..60).map(|i| i as f64 * 0.37 - 4.0).collect();
        let poly: Vec<f64> = xs
            .iter()
            .map(|x| 2.0 - x + 0.5 * x * x - 0.03 * x.powi(3) + 0.002 * x.powi(4))
            .collect();
        let out = savitzky_golay(&poly, 21, 4).unwrap();
        for (a, b) in out.iter().zip(&poly) {
            assert!((a - b).abs() <= 1e-9 * (1.0 + b.abs()));
        }
        let flat = vec![3.25f64; 30];
        assert!(savitzky_golay(&flat, 7, 0)
            .unwrap()
            .iter()
            .all(|v| (v - 3.25).abs() < 1e-14));
    }

    #[test]
    fn is_linear() {
        let x: Vec<f64> = (0..40).map(|i| (i as f64 * 0.9).sin()).collect();
        let y: Vec<f64> = (0..40).map(|i| (i as f64 * 0.31).cos() * 4.0).collect();
        let combo: Vec<f64> = x.iter().zip(&y).map(|(a, b)| 2.5 * a - 0.75 * b).collect();
        let fx = savitzky_golay(&x, 9, 3).unwrap();
        let fy = savitzky_golay(&y, 9, 3).unwrap();
        let fc = savitzky_golay(&combo, 9, 3).unwrap();
        for i in 0..40 {
            assert!((fc[i] - (2.5 * fx[i] - 0.75 * fy[i])).abs() < 1e-12);
        }
    }

    #[test]
    fn rejects_bad_windows() {
        assert!(matches!(SavitzkyGolay::new(4, 2), Err(Error::InvalidFilterSpec(_))));
        assert!(matches!(SavitzkyGolay::new(5, 5), Err(Error::InvalidFilterSpec(_))));
        assert!(savitzky_golay(&[1.0f64; 4], 5, 2).is_err());
        assert_eq!(savitzky_golay(&[1.0f64, 2.0, 3.0], 1, 0).unwrap(), vec![1.0, 2.0, 3.0]);
    }
}
