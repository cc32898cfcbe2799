//! Collections of spectra consumed by the statistics and filter code.

use crate::{Error, Result, Scalar};

/// A read-only set of equal-length spectra, indexed `0..pixel_count()`.
pub trait PixelSet<T>: Sync {
    fn pixel_count(&self) -> usize;
    fn bands(&self) -> usize;
    fn pixel(&self, i: usize) -> &[T];
}

/// Owned pixel-major matrix of spectra (`pixels x bands`).
#[derive(Debug, Clone, PartialEq)]
pub struct PixelMatrix<T> {
    bands: usize,
    data: Vec<T>,
}

impl<T: Scalar> PixelMatrix<T> {
    pub fn new(bands: usize, data: Vec<T>) -> Result<Self> {
        if bands == 0 || !data.len().is_multiple_of(bands) {
            return Err(Error::ShapeError(format!(
                "{} values do not split into spectra of {} bands",
                data.len(),
                bands
            )));
        }
        Ok(Self { bands, data })
    }

    pub fn from_rows<R: AsRef<[T]>>(rows: &[R]) -> Result<Self> {
        let bands = rows.first().map(|r| r.as_ref().len()).unwrap_or(0);
        let mut data = Vec::with_capacity(rows.len() * bands);
        for r in rows {
            let r = r.as_ref();
            if r.len() != bands {
                return Err(Error::ShapeError("ragged spectra".into()));
            }
            data.extend_from_slice(r);
        }
        Self::new(bands.max(1), data)
    }

    pub fn as_slice(&self) -> &[T] {
        &self.data
    }
}

impl<T: Scalar> PixelSet<T> for PixelMatrix<T> {
    fn pixel_count(&self) -> usize {
        self.data.len() / self.bands
    }

    fn bands(&self) -> usize {
        self.bands
    }

    #[inline]
    fn pixel(&self, i: usize) -> &[T] {
        &self.data[i * self.bands..(i + 1) * self.bands]
    }
}
