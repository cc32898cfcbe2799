//! Accuracy metrics for retrieved enhancement maps.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use ndarray::Array2;
use serde::Serialize;

use crate::{Error, Result, Scalar};

/// Truth above this many ppm m enters the enhanced-pixel regression.
pub const DEFAULT_REGRESSION_THRESHOLD: f64 = 100.0;

/// Root mean squared error per pixel class. A class with no pixels is `None`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RmseSplit {
    pub enhanced: Option<f64>,
    pub nonenhanced: Option<f64>,
    pub all: Option<f64>,
    pub n_enhanced: usize,
    pub n_nonenhanced: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Regression {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub pixels: usize,
}

/// Counts of retrievals over truth-zero pixels. Exact zeros get their own
/// bin; every other value `v` falls in `[k w, (k + 1) w)` with
/// `k = floor(v / w)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Histogram {
    pub bin_width: f64,
    pub zero_count: usize,
    /// `(lower edge, count)` in increasing order of edge, empty bins omitted.
    pub bins: Vec<(f64, usize)>,
}

impl Histogram {
    pub fn total(&self) -> usize {
        self.zero_count + self.bins.iter().map(|(_, c)| c).sum::<usize>()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("bin_lower,bin_upper,count\n");
        let _ = writeln!(out, "0,0,{}", self.zero_count);
        for (lo, c) in &self.bins {
            let _ = writeln!(out, "{},{},{}", lo, lo + self.bin_width, c);
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Region {
    /// Samples `x0..x1` of lines `y0..y1`.
    Rect {
        x0: usize,
        y0: usize,
        x1: usize,
        y1: usize,
    },
    Mask(Array2<bool>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct RegionOfInterest {
    pub name: String,
    pub region: Region,
}

impl RegionOfInterest {
    pub fn rect(name: &str, x0: usize, y0: usize, x1: usize, y1: usize) -> Result<Self> {
        if x1 <= x0 || y1 <= y0 {
            return Err(Error::InvalidRoi(format!(
                "{name}: rectangle {x0},{y0},{x1},{y1} is empty"
            )));
        }
        Ok(Self {
            name: name.to_string(),
            region: Region::Rect { x0, y0, x1, y1 },
        })
    }

    pub fn mask(name: &str, mask: Array2<bool>) -> Result<Self> {
        if !mask.iter().any(|m| *m) {
            return Err(Error::InvalidRoi(format!("{name}: mask selects no pixels")));
        }
        Ok(Self {
            name: name.to_string(),
            region: Region::Mask(mask),
        })
    }

    /// Parse `name:x0,y0,x1,y1` with exclusive upper corners.
    pub fn parse(spec: &str) -> Result<Self> {
        let bad = || Error::InvalidRoi(format!("'{spec}' is not name:x0,y0,x1,y1"));
        let (name, coords) = spec.split_once(':').ok_or_else(bad)?;
        let c: Vec<usize> = coords
            .split(',')
            .map(|v| v.trim().parse().map_err(|_| bad()))
            .collect::<Result<_>>()?;
        if name.is_empty() || c.len() != 4 {
            return Err(bad());
        }
        Self::rect(name, c[0], c[1], c[2], c[3])
    }

    /// `(line, sample)` positions inside a `lines x samples` scene.
    pub fn pixels(&self, lines: usize, samples: usize) -> Result<Vec<(usize, usize)>> {
        match &self.region {
            Region::Rect { x0, y0, x1, y1 } => {
                if *x1 > samples || *y1 > lines {
                    return Err(Error::InvalidRoi(format!(
                        "{}: rectangle reaches ({x1}, {y1}) beyond the {samples}x{lines} scene",
                        self.name
                    )));
                }
                Ok((*y0..*y1).flat_map(|l| (*x0..*x1).map(move |s| (l, s))).collect())
            }
            Region::Mask(m) => {
                if m.dim() != (lines, samples) {
                    return Err(Error::InvalidRoi(format!(
                        "{}: mask is {:?}, scene ({lines}, {samples})",
                        self.name,
                        m.dim()
                    )));
                }
                Ok(m.indexed_iter().filter(|(_, v)| **v).map(|(p, _)| p).collect())
            }
        }
    }
}

fn is_valid(v: f64, nodata: Option<f64>) -> bool {
    v.is_finite() && nodata != Some(v)
}

/// Valid `(retrieved, truth)` pairs.
fn pairs<T: Scalar>(retrieved: &Array2<T>, truth: &Array2<f64>, nodata: Option<f64>) -> Result<Vec<(f64, f64)>> {
    if retrieved.dim() != truth.dim() {
        return Err(Error::ShapeError(format!(
            "retrieved map is {:?}, truth {:?}",
            retrieved.dim(),
            truth.dim()
        )));
    }
    let mut out = Vec::with_capacity(truth.len());
    for (r, t) in retrieved.iter().zip(truth) {
        let r = r.as_f64();
        if !is_valid(r, nodata) || !t.is_finite() {
            continue;
        }
        if *t < 0.0 {
            return Err(Error::DomainError(format!("truth enhancement {t} is negative")));
        }
        out.push((r, *t));
    }
    Ok(out)
}

/// RMSE over enhanced (`truth > threshold`), non-enhanced and all valid pixels.
pub fn rmse_split<T: Scalar>(
    retrieved: &Array2<T>,
    truth: &Array2<f64>,
    threshold: f64,
    nodata: Option<f64>,
) -> Result<RmseSplit> {
    let mut se = [0.0f64; 2];
    let mut n = [0usize; 2];
    for (r, t) in pairs(retrieved, truth, nodata)? {
        let class = usize::from(t > threshold);
        se[class] += (r - t).powi(2);
        n[class] += 1;
    }
    let rmse = |s: f64, n: usize| (n > 0).then(|| (s / n as f64).sqrt());
    Ok(RmseSplit {
        enhanced: rmse(se[1], n[1]),
        nonenhanced: rmse(se[0], n[0]),
        all: rmse(se[0] + se[1], n[0] + n[1]),
        n_enhanced: n[1],
        n_nonenhanced: n[0],
    })
}

/// Population standard deviation of the retrieval inside a region.
pub fn background_std<T: Scalar>(retrieved: &Array2<T>, roi: &RegionOfInterest, nodata: Option<f64>) -> Result<f64> {
    let (lines, samples) = retrieved.dim();
    let values: Vec<f64> = roi
        .pixels(lines, samples)?
        .into_iter()
        .map(|p| retrieved[p].as_f64())
        .filter(|v| is_valid(*v, nodata))
        .collect();
    if values.is_empty() {
        return Err(Error::InvalidRoi(format!("{}: no valid pixels", roi.name)));
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    Ok((values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n).sqrt())
}

/// Ordinary least squares of retrieved on truth over pixels with truth above
/// `threshold`.
pub fn regression_enhanced<T: Scalar>(
    retrieved: &Array2<T>,
    truth: &Array2<f64>,
    threshold: f64,
    nodata: Option<f64>,
) -> Result<Regression> {
    let pts: Vec<(f64, f64)> = pairs(retrieved, truth, nodata)?
        .into_iter()
        .filter(|(_, t)| *t > threshold)
        .collect();
    if pts.len() < 2 {
        return Err(Error::DegenerateRegression(format!(
            "{} pixels above {threshold} ppm m",
            pts.len()
        )));
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|(_, t)| t).sum::<f64>() / n;
    let my = pts.iter().map(|(r, _)| r).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|(_, t)| (t - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|(r, t)| (t - mx) * (r - my)).sum();
    let syy: f64 = pts.iter().map(|(r, _)| (r - my).powi(2)).sum();
    if !(sxx > 0.0) {
        return Err(Error::DegenerateRegression("all truth values are equal".into()));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_res: f64 = pts.iter().map(|(r, t)| (r - intercept - slope * t).powi(2)).sum();
    let r_squared = if syy > 0.0 { 1.0 - ss_res / syy } else { 1.0 };
    Ok(Regression {
        slope,
        intercept,
        r_squared,
        pixels: pts.len(),
    })
}

/// Fraction of truth-zero pixels whose retrieval is exactly 0.0.
pub fn zero_fraction<T: Scalar>(
    retrieved: &Array2<T>,
    truth: &Array2<f64>,
    nodata: Option<f64>,
) -> Result<Option<f64>> {
    let bg: Vec<f64> = pairs(retrieved, truth, nodata)?
        .into_iter()
        .filter(|(_, t)| *t == 0.0)
        .map(|(r, _)| r)
        .collect();
    if bg.is_empty() {
        return Ok(None);
    }
    Ok(Some(bg.iter().filter(|r| **r == 0.0).count() as f64 / bg.len() as f64))
}

pub fn histogram_nonenhanced<T: Scalar>(
    retrieved: &Array2<T>,
    truth: &Array2<f64>,
    bin_width: f64,
    nodata: Option<f64>,
) -> Result<Histogram> {
    if !(bin_width > 0.0 && bin_width.is_finite()) {
        return Err(Error::DomainError(format!("bin width {bin_width} must be positive")));
    }
    let mut zero_count = 0;
    let mut bins: BTreeMap<i64, usize> = BTreeMap::new();
    for (r, t) in pairs(retrieved, truth, nodata)? {
        if t != 0.0 {
            continue;
        }
        if r == 0.0 {
            zero_count += 1;
        } else {
            *bins.entry((r / bin_width).floor() as i64).or_default() += 1;
        }
    }
    Ok(Histogram {
        bin_width,
        zero_count,
        bins: bins.into_iter().map(|(k, c)| (k as f64 * bin_width, c)).collect(),
    })
}

/// `1 - rmse / reference_rmse`
pub fn relative_improvement(rmse: f64, reference_rmse: f64) -> Result<f64> {
    if !(reference_rmse > 0.0) {
        return Err(Error::DomainError(format!(
            "reference RMSE {reference_rmse} must be positive"
        )));
    }
    Ok(1.0 - rmse / reference_rmse)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvaluationReport {
    pub name: String,
    pub rmse: Option<RmseSplit>,
    pub relative_improvement: Option<f64>,
    pub background_std: Vec<(String, f64)>,
    pub regression: Option<Regression>,
    pub zero_fraction: Option<f64>,
    pub histogram: Option<Histogram>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvaluationOptions {
    pub regression_threshold: f64,
    pub bin_width: f64,
    pub nodata: Option<f64>,
}

impl Default for EvaluationOptions {
    fn default() -> Self {
        Self {
            regression_threshold: DEFAULT_REGRESSION_THRESHOLD,
            bin_width: 50.0,
            nodata: Some(crate::io::DEFAULT_NODATA),
        }
    }
}

/// All metrics for one retrieved map. Truth-based metrics are skipped when
/// `truth` is `None`; a regression that cannot be fitted is left out.
pub fn evaluate<T: Scalar>(
    name: &str,
    retrieved: &Array2<T>,
    truth: Option<&Array2<f64>>,
    rois: &[RegionOfInterest],
    options: &EvaluationOptions,
) -> Result<EvaluationReport> {
    let background_std = rois
        .iter()
        .map(|roi| Ok((roi.name.clone(), background_std(retrieved, roi, options.nodata)?)))
        .collect::<Result<_>>()?;
    let mut report = EvaluationReport {
        name: name.to_string(),
        rmse: None,
        relative_improvement: None,
        background_std,
        regression: None,
        zero_fraction: None,
        histogram: None,
    };
    if let Some(truth) = truth {
        report.rmse = Some(rmse_split(retrieved, truth, 0.0, options.nodata)?);
        report.regression = match regression_enhanced(retrieved, truth, options.regression_threshold, options.nodata) {
            Ok(r) => Some(r),
            Err(Error::DegenerateRegression(_)) => None,
            Err(e) => return Err(e),
        };
        report.zero_fraction = zero_fraction(retrieved, truth, options.nodata)?;
        report.histogram = Some(histogram_nonenhanced(
            retrieved,
            truth,
            options.bin_width,
            options.nodata,
        )?);
    }
    Ok(report)
}

/// Fill in relative improvement of every report against `reference`'s all-pixel RMSE.
pub fn compare_to_reference(reports: &mut [EvaluationReport], reference: &EvaluationReport) -> Result<()> {
    let Some(base) = reference.rmse.and_then(|r| r.all) else {
        return Err(Error::DomainError("reference has no all-pixel RMSE".into()));
    };
    for r in reports {
        if let Some(all) = r.rmse.and_then(|x| x.all) {
            r.relative_improvement = Some(relative_improvement(all, base)?);
        }
    }
    Ok(())
}

fn opt(v: Option<f64>, digits: usize) -> String {
    v.map(|x| format!("{x:.digits$}")).unwrap_or_default()
}

fn roi_names(reports: &[EvaluationReport]) -> Vec<String> {
    let mut names: Vec<String> = Vec::new();
    for r in reports {
        for (n, _) in &r.background_std {
            if !names.contains(n) {
                names.push(n.clone());
            }
        }
    }
    names
}

fn row(r: &EvaluationReport, rois: &[String]) -> Vec<String> {
    let mut cells = vec![
        r.name.clone(),
        opt(r.rmse.and_then(|x| x.enhanced), 3),
        opt(r.rmse.and_then(|x| x.nonenhanced), 3),
        opt(r.rmse.and_then(|x| x.all), 3),
        opt(r.relative_improvement.map(|x| 100.0 * x), 1),
        opt(r.zero_fraction, 4),
        opt(r.regression.map(|x| x.slope), 4),
        opt(r.regression.map(|x| x.intercept), 2),
        opt(r.regression.map(|x| x.r_squared), 4),
    ];
    for n in rois {
        cells.push(opt(r.background_std.iter().find(|(k, _)| k == n).map(|(_, v)| *v), 3));
    }
    cells
}

fn columns(rois: &[String]) -> Vec<String> {
    let mut c: Vec<String> = [
        "name",
        "rmse_enhanced",
        "rmse_nonenhanced",
        "rmse_all",
        "improvement_pct",
        "zero_fraction",
        "slope",
        "intercept",
        "r_squared",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect();
    c.extend(rois.iter().map(|n| format!("std_{n}")));
    c
}

/// Fixed-width text table, one row per report. Absent values are blank.
pub fn render_table(reports: &[EvaluationReport]) -> String {
    let rois = roi_names(reports);
    let header = columns(&rois);
    let rows: Vec<Vec<String>> = reports.iter().map(|r| row(r, &rois)).collect();
    let widths: Vec<usize> = (0..header.len())
        .map(|i| {
            rows.iter()
                .map(|r| r[i].len())
                .chain([header[i].len()])
                .max()
                .unwrap_or(0)
        })
        .collect();
    let mut out = String::new();
    for cells in std::iter::once(&header).chain(&rows) {
        let line: Vec<String> = cells
            .iter()
            .zip(&widths)
            .enumerate()
            .map(|(i, (c, w))| if i == 0 { format!("{c:<w$}") } else { format!("{c:>w$}") })
            .collect();
        out.push_str(line.join("  ").trim_end());
        out.push('\n');
    }
    out
}

pub fn reports_to_csv(reports: &[EvaluationReport]) -> String {
    let rois = roi_names(reports);
    let mut out = columns(&rois).join(",");
    out.push('\n');
    for r in reports {
        out.push_str(&row(r, &rois).join(","));
        out.push('\n');
    }
    out
}

/// `key = value` lines, one block per report.
pub fn reports_to_key_value(reports: &[EvaluationReport]) -> String {
    let mut out = String::new();
    for r in reports {
        let p = &r.name;
        let mut put = |k: &str, v: Option<f64>| {
            if let Some(v) = v {
                let _ = writeln!(out, "{p}.{k} = {v}");
            }
        };
        put("rmse_enhanced", r.rmse.and_then(|x| x.enhanced));
        put("rmse_nonenhanced", r.rmse.and_then(|x| x.nonenhanced));
        put("rmse_all", r.rmse.and_then(|x| x.all));
        put("relative_improvement", r.relative_improvement);
        put("zero_fraction", r.zero_fraction);
        put("regression.slope", r.regression.map(|x| x.slope));
        put("regression.intercept", r.regression.map(|x| x.intercept));
        put("regression.r_squared", r.regression.map(|x| x.r_squared));
        for (n, v) in &r.background_std {
            put(&format!("background_std.{n}"), Some(*v));
        }
    }
    out
}
