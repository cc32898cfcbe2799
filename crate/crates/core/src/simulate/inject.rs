use rayon::prelude::*;

use super::truth::TruthField;
use crate::io::RadianceCube;
use crate::target::UnitAbsorptionSpectrum;
use crate::{Error, Result, Scalar};

/// Apply Beer-Lambert absorption `L = L_base exp(alpha s)` per pixel. Pixels
/// with zero enhancement, and masked pixels, are copied unchanged.
pub fn inject_enhancement<T: Scalar>(
    base: &RadianceCube<T>,
    truth: &TruthField,
    s: &UnitAbsorptionSpectrum<T>,
) -> Result<RadianceCube<T>> {
    if truth.lines() != base.lines() || truth.samples() != base.samples() {
        return Err(Error::ShapeError(format!(
            "truth is {}x{}, cube {}x{}",
            truth.lines(),
            truth.samples(),
            base.lines(),
            base.samples()
        )));
    }
    let b = base.bands();
    if s.len() != b {
        return Err(Error::ShapeError(format!(
            "absorption spectrum has {} bands, cube {}",
            s.len(),
            b
        )));
    }
    if let Some(a) = truth.alpha_true.iter().find(|a| !(**a >= 0.0) || !a.is_finite()) {
        return Err(Error::DomainError(format!(
            "truth enhancement {a} is not a finite non-negative value"
        )));
    }
    let alpha = truth.alpha_true.as_slice().expect("standard layout");
    let valid = base.valid_mask();
    let mut values = base.values().to_vec();
    values.par_chunks_mut(b).enumerate().for_each(|(i, px)| {
        let a = alpha[i];
        if a != 0.0 && valid[i] {
            for (v, sk) in px.iter_mut().zip(&s.values) {
                *v = T::c(v.as_f64() * (a * sk.as_f64()).exp());
            }
        }
    });
    Ok(base.with_values(values))
}
