//! Per-pixel building blocks of the matched filters.

use crate::background::BackgroundModel;
use crate::linalg;
use crate::parallel;
use crate::pixels::PixelSet;
use crate::{Error, Result, Scalar};

/// Scalar projection of a pixel onto the mean spectrum, `L.mu / mu.mu`.
pub fn albedo_factor<T: Scalar>(pixel: &[T], mu: &[T]) -> Result<T> {
    if pixel.len() != mu.len() {
        return Err(Error::ShapeError(format!(
            "pixel has {} bands, mean {}",
            pixel.len(),
            mu.len()
        )));
    }
    let mm = linalg::dot(mu, mu);
    if !(mm > T::zero()) || !mm.is_finite() {
        return Err(Error::DegenerateMean);
    }
    Ok(linalg::dot(pixel, mu) / mm)
}

/// Target whitened against a background model: `v = C^-1 t` and `t' C^-1 t`.
#[derive(Debug, Clone)]
pub struct WhitenedTarget<T> {
    mean: Vec<T>,
    v: Vec<T>,
    denominator: T,
}

impl<T: Scalar> WhitenedTarget<T> {
    pub fn new(model: &BackgroundModel<T>, t: &[T]) -> Result<Self> {
        if t.len() != model.bands() {
            return Err(Error::ShapeError(format!(
                "target has {} bands, model {}",
                t.len(),
                model.bands()
            )));
        }
        let v = model.solve(t);
        let denominator = linalg::dot(t, &v);
        if !(denominator > T::zero()) || !denominator.is_finite() {
            return Err(Error::DegenerateTarget(denominator.as_f64()));
        }
        Ok(Self {
            mean: model.mean().to_vec(),
            v,
            denominator,
        })
    }

    /// `(L - mu)' C^-1 t`
    #[inline]
    pub fn numerator(&self, pixel: &[T]) -> T {
        linalg::dot_diff(pixel, &self.mean, &self.v)
    }

    /// `t' C^-1 t`
    pub fn denominator(&self) -> T {
        self.denominator
    }

    /// `C^-1 t`
    pub fn whitened(&self) -> &[T] {
        &self.v
    }
}

/// `max((numerator - w) / (r * denominator), 0)`
#[inline]
pub fn soft_threshold<T: Scalar>(numerator: T, denominator: T, w: T, r: T) -> T {
    let a = (numerator - w) / (r * denominator);
    if a > T::zero() {
        a
    } else {
        T::zero()
    }
}

/// Unconstrained closed-form estimate `(L - mu)' C^-1 t / (t' C^-1 t)` for
/// every pixel. May be negative.
pub fn matched_filter_closed_form<T: Scalar, P: PixelSet<T> + ?Sized>(
    pixels: &P,
    model: &BackgroundModel<T>,
    t: &[T],
) -> Result<Vec<T>> {
    if pixels.bands() != model.bands() {
        return Err(Error::ShapeError(format!(
            "pixels have {} bands, model {}",
            pixels.bands(),
            model.bands()
        )));
    }
    let wt = WhitenedTarget::new(model, t)?;
    let mut out = vec![T::zero(); pixels.pixel_count()];
    parallel::map_mut_reduce(
        &mut out,
        |r, slice| {
            for (o, i) in slice.iter_mut().zip(r) {
                *o = wt.numerator(pixels.pixel(i)) / wt.denominator;
            }
        },
        |_, _| (),
    );
    Ok(out)
}

/// Reweighted l1 weights `1 / (alpha + epsilon)`.
pub fn reweight<T: Scalar>(alpha_prev: &[T], epsilon: T) -> Result<Vec<T>> {
    if !(epsilon > T::zero()) || !epsilon.is_finite() {
        return Err(Error::ContractViolation(format!("epsilon {epsilon} must be positive")));
    }
    alpha_prev
        .iter()
        .map(|a| {
            if *a >= T::zero() && a.is_finite() {
                Ok(T::one() / (*a + epsilon))
            } else {
                Err(Error::ContractViolation(format!("cannot reweight enhancement {a}")))
            }
        })
        .collect()
}

/// One thresholded update `max(((L - mu)' C^-1 t - w) / (r t' C^-1 t), 0)`.
pub fn ista_update<T: Scalar>(pixel: &[T], model: &BackgroundModel<T>, t: &[T], w: T, r: T) -> Result<T> {
    if !(w >= T::zero()) {
        return Err(Error::ContractViolation(format!("weight {w} is negative")));
    }
    if !(r > T::zero()) {
        return Err(Error::ContractViolation(format!("albedo factor {r} is not positive")));
    }
    if pixel.len() != model.bands() {
        return Err(Error::ShapeError(format!(
            "pixel has {} bands, model {}",
            pixel.len(),
            model.bands()
        )));
    }
    let wt = WhitenedTarget::new(model, t)?;
    Ok(soft_threshold(wt.numerator(pixel), wt.denominator, w, r))
}

/// `sum_i d_i' C^-1 d_i + r_i w_i |alpha_i|` with `d_i = L_i - r_i alpha_i t - mu`.
pub fn energy<T: Scalar, P: PixelSet<T> + ?Sized>(
    pixels: &P,
    model: &BackgroundModel<T>,
    alpha: &[T],
    r: &[T],
    t: &[T],
    w: &[T],
) -> Result<T> {
    let n = pixels.pixel_count();
    let b = model.bands();
    if alpha.len() != n || r.len() != n || w.len() != n {
        return Err(Error::ShapeError(format!(
            "{n} pixels with {} enhancements, {} albedo factors, {} weights",
            alpha.len(),
            r.len(),
            w.len()
        )));
    }
    if t.len() != b || pixels.bands() != b {
        return Err(Error::ShapeError("target, pixels and model disagree on bands".into()));
    }
    let mu = model.mean();
    let total = parallel::map_reduce(
        n,
        |range| {
            let mut acc = T::zero();
            let mut d = vec![T::zero(); b];
            for i in range {
                let l = pixels.pixel(i);
                let beta = r[i] * alpha[i];
                for k in 0..b {
                    d[k] = l[k] - beta * t[k] - mu[k];
                }
                let x = model.solve(&d);
                acc += linalg::dot(&d, &x) + r[i] * w[i] * alpha[i].abs();
            }
            acc
        },
        |a, b| a + b,
    );
    Ok(total.unwrap_or_else(T::zero))
}
