//! Unit absorption spectra and radiance-scaled target signatures.
//!
//! The unit absorption spectrum `s` is stored as the raw slope of
//! `ln(radiance)` against concentration-pathlength, so it is negative in
//! absorption bands. Enhancements are modelled as `L = L0 * exp(alpha * s)`
//! and a positive `alpha` always means extra absorber.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::{Error, Result, Scalar};

/// `sigma = fwhm / FWHM_PER_SIGMA` for a Gaussian response.
pub const FWHM_PER_SIGMA: f64 = 2.354_820_045_030_949_3;

/// Per-band `d ln(L) / d(ppm m)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UnitAbsorptionSpectrum<T> {
    pub wavelengths: Vec<f64>,
    pub values: Vec<T>,
}

impl<T: Scalar> UnitAbsorptionSpectrum<T> {
    pub fn new(wavelengths: Vec<f64>, values: Vec<T>) -> Result<Self> {
        if wavelengths.len() != values.len() {
            return Err(Error::ShapeError(format!(
                "{} wavelengths for {} absorption values",
                wavelengths.len(),
                values.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::DomainError("unit absorption spectrum is not finite".into()));
        }
        if wavelengths.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::DomainError("absorption wavelengths must increase".into()));
        }
        Ok(Self { wavelengths, values })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Linearly interpolate onto `centers`. Returns a clone when the grids
    /// already agree to 1e-6 nm.
    pub fn resample_to(&self, centers: &[f64]) -> Result<Self> {
        let same = centers.len() == self.wavelengths.len()
            && centers
                .iter()
                .zip(&self.wavelengths)
                .all(|(a, b)| (a - b).abs() <= 1e-6);
        if same {
            return Ok(self.clone());
        }
        let (lo, hi) = match (self.wavelengths.first(), self.wavelengths.last()) {
            (Some(lo), Some(hi)) => (*lo, *hi),
            _ => return Err(Error::ShapeError("empty absorption spectrum".into())),
        };
        let mut values = Vec::with_capacity(centers.len());
        for &c in centers {
            if c < lo - 1e-6 || c > hi + 1e-6 {
                return Err(Error::ShapeError(format!(
                    "band center {c} nm lies outside absorption spectrum range [{lo}, {hi}]"
                )));
            }
            let j = self
                .wavelengths
                .partition_point(|w| *w < c)
                .clamp(1, self.wavelengths.len() - 1);
            let (w0, w1) = (self.wavelengths[j - 1], self.wavelengths[j]);
            let f = ((c - w0) / (w1 - w0)).clamp(0.0, 1.0);
            values.push(self.values[j - 1] + (self.values[j] - self.values[j - 1]) * T::c(f));
        }
        Self::new(centers.to_vec(), values)
    }
}

/// Radiative-transfer radiance at a ladder of enhancements.
#[derive(Debug, Clone, PartialEq)]
pub struct RtLookup<T> {
    enhancements: Vec<T>,
    wavelengths: Vec<f64>,
    /// `[enhancement][band]`
    radiance: Vec<Vec<T>>,
}

impl<T: Scalar> RtLookup<T> {
    pub fn new(enhancements: Vec<T>, wavelengths: Vec<f64>, radiance: Vec<Vec<T>>) -> Result<Self> {
        if enhancements.len() != radiance.len() {
            return Err(Error::ShapeError(
                "one radiance row per enhancement level required".into(),
            ));
        }
        if radiance.iter().any(|r| r.len() != wavelengths.len()) {
            return Err(Error::ShapeError("radiance rows must match the band count".into()));
        }
        if enhancements.first().is_some_and(|e| *e != T::zero()) {
            return Err(Error::DomainError("first enhancement level must be 0".into()));
        }
        if enhancements.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::DomainError("enhancement levels must strictly increase".into()));
        }
        Ok(Self {
            enhancements,
            wavelengths,
            radiance,
        })
    }

    pub fn enhancements(&self) -> &[T] {
        &self.enhancements
    }

    pub fn wavelengths(&self) -> &[f64] {
        &self.wavelengths
    }

    pub fn radiance(&self) -> &[Vec<T>] {
        &self.radiance
    }
}

/// Instrument band centers and Gaussian widths.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralResponse {
    pub centers: Vec<f64>,
    pub fwhm: Vec<f64>,
}

impl SpectralResponse {
    pub fn new(centers: Vec<f64>, fwhm: Vec<f64>) -> Result<Self> {
        if centers.len() != fwhm.len() || centers.is_empty() {
            return Err(Error::ShapeError(
                "centers and fwhm must be equal-length and non-empty".into(),
            ));
        }
        if fwhm.iter().any(|f| !(*f > 0.0)) {
            return Err(Error::DomainError("fwhm must be positive".into()));
        }
        if centers.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::DomainError("band centers must strictly increase".into()));
        }
        Ok(Self { centers, fwhm })
    }
}

/// Convolve a finely sampled spectrum to instrument bands with Gaussian
/// responses. Weights use trapezoid quadrature on the fine grid and are
/// normalised to sum to one per band.
pub fn convolve_to_bands<T: Scalar>(grid: &[f64], hires: &[T], srf: &SpectralResponse) -> Result<Vec<T>> {
    if grid.len() != hires.len() || grid.len() < 2 {
        return Err(Error::ShapeError(
            "fine grid and spectrum must match and hold >= 2 samples".into(),
        ));
    }
    if grid.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::DomainError("fine grid must strictly increase".into()));
    }
    let need_lo = srf
        .centers
        .iter()
        .zip(&srf.fwhm)
        .map(|(c, f)| c - 3.0 * f)
        .fold(f64::INFINITY, f64::min);
    let need_hi = srf
        .centers
        .iter()
        .zip(&srf.fwhm)
        .map(|(c, f)| c + 3.0 * f)
        .fold(f64::NEG_INFINITY, f64::max);
    let (grid_lo, grid_hi) = (grid[0], grid[grid.len() - 1]);
    if grid_lo > need_lo || grid_hi < need_hi {
        return Err(Error::GridCoverageError {
            grid_lo,
            grid_hi,
            need_lo,
            need_hi,
        });
    }
    let n = grid.len();
    let quad: Vec<f64> = (0..n)
        .map(|i| {
            let left = if i > 0 { grid[i] - grid[i - 1] } else { 0.0 };
            let right = if i + 1 < n { grid[i + 1] - grid[i] } else { 0.0 };
            0.5 * (left + right)
        })
        .collect();
    Ok(srf
        .centers
        .iter()
        .zip(&srf.fwhm)
        .map(|(&c, &f)| {
            let sigma = f / FWHM_PER_SIGMA;
            let mut wsum = 0.0;
            let mut acc = T::zero();
            for i in 0..n {
                let z = (grid[i] - c) / sigma;
                let w = (-0.5 * z * z).exp() * quad[i];
                wsum += w;
                acc += hires[i] * T::c(w);
            }
            acc / T::c(wsum)
        })
        .collect())
}

/// Result of the per-band log-linear regression.
#[derive(Debug, Clone, PartialEq)]
pub struct AbsorptionFit<T> {
    pub spectrum: UnitAbsorptionSpectrum<T>,
    pub intercepts: Vec<T>,
    /// Coefficient of determination per band; 1 for an exact fit, including
    /// bands where radiance does not change at all.
    pub r_squared: Vec<T>,
}

/// Per band, the ordinary least-squares slope of `ln(radiance)` against
/// enhancement.
pub fn fit_unit_absorption<T: Scalar>(lookup: &RtLookup<T>) -> Result<UnitAbsorptionSpectrum<T>> {
    fit_unit_absorption_with_diagnostics(lookup).map(|f| f.spectrum)
}

pub fn fit_unit_absorption_with_diagnostics<T: Scalar>(lookup: &RtLookup<T>) -> Result<AbsorptionFit<T>> {
    let levels = lookup.enhancements.len();
    if levels < 2 {
        return Err(Error::InsufficientData(format!(
            "{levels} enhancement level(s); at least 2 are needed"
        )));
    }
    if lookup.radiance.iter().flatten().any(|v| !(*v > T::zero())) {
        return Err(Error::DomainError(
            "radiance must be strictly positive to take logarithms".into(),
        ));
    }
    let n = T::from_usize_lossy(levels);
    let x = &lookup.enhancements;
    let x_mean = x.iter().copied().sum::<T>() / n;
    let sxx: T = x.iter().map(|&xi| (xi - x_mean) * (xi - x_mean)).sum();
    let bands = lookup.wavelengths.len();
    let mut slopes = Vec::with_capacity(bands);
    let mut intercepts = Vec::with_capacity(bands);
    let mut r2 = Vec::with_capacity(bands);
    for b in 0..bands {
        let y: Vec<T> = lookup.radiance.iter().map(|row| row[b].ln()).collect();
        let y_mean = y.iter().copied().sum::<T>() / n;
        let sxy: T = x.iter().zip(&y).map(|(&xi, &yi)| (xi - x_mean) * (yi - y_mean)).sum();
        let slope = sxy / sxx;
        let intercept = y_mean - slope * x_mean;
        let ss_tot: T = y.iter().map(|&yi| (yi - y_mean) * (yi - y_mean)).sum();
        let ss_res: T = x
            .iter()
            .zip(&y)
            .map(|(&xi, &yi)| {
                let e = yi - (intercept + slope * xi);
                e * e
            })
            .sum();
        let r = if ss_tot > T::zero() {
            T::one() - ss_res / ss_tot
        } else {
            T::one()
        };
        slopes.push(slope);
        intercepts.push(intercept);
        r2.push(r);
    }
    Ok(AbsorptionFit {
        spectrum: UnitAbsorptionSpectrum::new(lookup.wavelengths.clone(), slopes)?,
        intercepts,
        r_squared: r2,
    })
}

/// Radiance-scaled target `t = mu * s` (elementwise).
pub fn target_spectrum<T: Scalar>(mu: &[T], s: &[T]) -> Result<Vec<T>> {
    if mu.len() != s.len() {
        return Err(Error::ShapeError(format!(
            "mean has {} bands, absorption spectrum {}",
            mu.len(),
            s.len()
        )));
    }
    Ok(mu.iter().zip(s).map(|(m, s)| *m * *s).collect())
}

// ---------------------------------------------------------------------------
// CSV formats

fn csv_reader(path: &Path) -> Result<csv::Reader<std::fs::File>> {
    csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .flexible(false)
        .from_path(path)
        .map_err(|e| csv_err(path, e))
}

fn csv_err(path: &Path, e: impl std::fmt::Display) -> Error {
    Error::Csv {
        path: path.to_path_buf(),
        reason: e.to_string(),
    }
}

fn parse_cell(path: &Path, cell: &str) -> Result<f64> {
    cell.parse::<f64>()
        .map_err(|_| csv_err(path, format!("'{cell}' is not a number")))
}

/// Two-column CSV: `wavelength_nm, unit_absorption_per_ppm_m`.
pub const ABSORPTION_CSV_HEADER: [&str; 2] = ["wavelength_nm", "unit_absorption_per_ppm_m"];

pub fn read_unit_absorption_csv<T: Scalar>(path: &Path) -> Result<UnitAbsorptionSpectrum<T>> {
    let mut rdr = csv_reader(path)?;
    let mut wl = Vec::new();
    let mut vals = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| csv_err(path, e))?;
        if rec.len() < 2 {
            return Err(csv_err(path, "expected at least two columns"));
        }
        wl.push(parse_cell(path, &rec[0])?);
        vals.push(T::c(parse_cell(path, &rec[1])?));
    }
    if wl.is_empty() {
        return Err(csv_err(path, "no rows"));
    }
    UnitAbsorptionSpectrum::new(wl, vals)
}

pub fn write_unit_absorption_csv<T: Scalar>(spectrum: &UnitAbsorptionSpectrum<T>, path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_err(path, e))?;
    w.write_record(ABSORPTION_CSV_HEADER).map_err(|e| csv_err(path, e))?;
    for (wl, v) in spectrum.wavelengths.iter().zip(&spectrum.values) {
        w.write_record([format!("{wl}"), format!("{:e}", v.as_f64())])
            .map_err(|e| csv_err(path, e))?;
    }
    w.flush().map_err(|e| csv_err(path, e))
}

/// Fit diagnostics: `wavelength_nm, slope, intercept, r_squared`.
pub fn write_fit_diagnostics_csv<T: Scalar>(fit: &AbsorptionFit<T>, path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_err(path, e))?;
    w.write_record(["wavelength_nm", "slope_per_ppm_m", "intercept_ln_radiance", "r_squared"])
        .map_err(|e| csv_err(path, e))?;
    for b in 0..fit.spectrum.len() {
        w.write_record([
            format!("{}", fit.spectrum.wavelengths[b]),
            format!("{:e}", fit.spectrum.values[b].as_f64()),
            format!("{:e}", fit.intercepts[b].as_f64()),
            format!("{}", fit.r_squared[b].as_f64()),
        ])
        .map_err(|e| csv_err(path, e))?;
    }
    w.flush().map_err(|e| csv_err(path, e))
}

fn numeric_headers(path: &Path, headers: &csv::StringRecord) -> Result<Vec<f64>> {
    headers.iter().skip(1).map(|h| parse_cell(path, h)).collect()
}

/// Band-resolved lookup: header `enhancement_ppm_m, <wl_1>, <wl_2>, ...`,
/// then one row per enhancement level.
pub fn read_lookup_csv<T: Scalar>(path: &Path) -> Result<RtLookup<T>> {
    let mut rdr = csv_reader(path)?;
    let headers = rdr.headers().map_err(|e| csv_err(path, e))?.clone();
    let wavelengths = numeric_headers(path, &headers)?;
    let mut enh = Vec::new();
    let mut rad = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| csv_err(path, e))?;
        enh.push(T::c(parse_cell(path, &rec[0])?));
        rad.push(
            rec.iter()
                .skip(1)
                .map(|c| parse_cell(path, c).map(T::c))
                .collect::<Result<Vec<T>>>()?,
        );
    }
    RtLookup::new(enh, wavelengths, rad)
}

/// High-resolution lookup: header `wavelength_nm, <enh_1>, <enh_2>, ...`,
/// then one row per fine-grid wavelength. Each column is convolved to the
/// instrument bands of `srf`.
pub fn read_hires_lookup_csv<T: Scalar>(path: &Path, srf: &SpectralResponse) -> Result<RtLookup<T>> {
    let mut rdr = csv_reader(path)?;
    let headers = rdr.headers().map_err(|e| csv_err(path, e))?.clone();
    let enh = numeric_headers(path, &headers)?;
    let mut grid = Vec::new();
    let mut cols: Vec<Vec<T>> = vec![Vec::new(); enh.len()];
    for rec in rdr.records() {
        let rec = rec.map_err(|e| csv_err(path, e))?;
        grid.push(parse_cell(path, &rec[0])?);
        for (k, c) in rec.iter().skip(1).enumerate() {
            cols[k].push(T::c(parse_cell(path, c)?));
        }
    }
    let radiance = cols
        .iter()
        .map(|col| convolve_to_bands(&grid, col, srf))
        .collect::<Result<Vec<_>>>()?;
    RtLookup::new(enh.into_iter().map(T::c).collect(), srf.centers.clone(), radiance)
}

/// Spectral response CSV: `center_nm, fwhm_nm`.
pub fn read_srf_csv(path: &Path) -> Result<SpectralResponse> {
    let mut rdr = csv_reader(path)?;
    let mut centers = Vec::new();
    let mut fwhm = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| csv_err(path, e))?;
        if rec.len() < 2 {
            return Err(csv_err(path, "expected center and fwhm columns"));
        }
        centers.push(parse_cell(path, &rec[0])?);
        fwhm.push(parse_cell(path, &rec[1])?);
    }
    SpectralResponse::new(centers, fwhm)
}
