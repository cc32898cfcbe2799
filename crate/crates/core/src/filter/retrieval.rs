//! Partition-level retrieval loop and full-scene assembly.

use std::ops::Range;
use std::time::Instant;

use ndarray::Array2;
use rayon::prelude::*;
use serde::Serialize;

use super::config::{CovarianceMode, FilterConfig};
use super::ops::{soft_threshold, WhitenedTarget};
use crate::background::{select_shrinkage, BackgroundModel, ScatterMoments};
use crate::io::{partition_columns, PartitionPixels, RadianceCube};
use crate::linalg;
use crate::parallel;
use crate::pixels::PixelSet;
use crate::{Error, Result, Scalar};

/// Estimates for the pixels of one partition, in the set's pixel order.
#[derive(Debug, Clone)]
pub struct PartitionRetrieval<T> {
    pub alpha: Vec<T>,
    /// Raw albedo factors (all 1 without albedo correction).
    pub albedo: Vec<T>,
    /// Objective after each iteration; empty for closed-form filters.
    pub energy_trace: Vec<f64>,
    /// Shrinkage chosen in the last covariance estimate, if shrinkage was used.
    pub shrinkage: Option<f64>,
    /// Largest conditioning jitter added to any covariance.
    pub max_jitter: f64,
    /// `t' C^-1 t` of the final model.
    pub denominator: f64,
    /// Pixels whose albedo factor was raised to the floor.
    pub clamped_albedo: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct PartitionDiagnostics {
    pub index: usize,
    pub columns: Range<usize>,
    pub pixel_count: usize,
    pub shrinkage: Option<f64>,
    pub max_jitter: f64,
    pub denominator: f64,
    pub clamped_albedo: usize,
    pub zero_fraction: f64,
    pub elapsed_seconds: f64,
}

#[derive(Debug)]
pub struct PartitionFailure {
    pub index: usize,
    pub columns: Range<usize>,
    pub error: Error,
}

/// Scene-level output. Masked pixels and pixels of failed partitions hold
/// `nodata` in both maps.
#[derive(Debug)]
pub struct RetrievalResult<T> {
    /// Enhancement, ppm m, indexed `[line, sample]`.
    pub alpha: Array2<T>,
    pub albedo: Array2<T>,
    /// Objective per iteration, summed over successful partitions.
    pub energy_trace: Vec<f64>,
    pub config: FilterConfig,
    pub diagnostics: Vec<PartitionDiagnostics>,
    pub failures: Vec<PartitionFailure>,
    pub nodata: f64,
}

impl<T: Scalar> RetrievalResult<T> {
    pub fn is_partial(&self) -> bool {
        !self.failures.is_empty()
    }
}

struct BetaSums<T> {
    g: Vec<T>,
    b1: T,
    b2: T,
    reg: T,
}

impl<T: Scalar> BetaSums<T> {
    fn zero(b: usize) -> Self {
        Self {
            g: vec![T::zero(); b],
            b1: T::zero(),
            b2: T::zero(),
            reg: T::zero(),
        }
    }

    fn add(&mut self, beta: T, pixel: &[T], center: &[T]) {
        if beta != T::zero() {
            self.b1 += beta;
            self.b2 += beta * beta;
            for ((g, l), c) in self.g.iter_mut().zip(pixel).zip(center) {
                *g += beta * (*l - *c);
            }
        }
    }

    fn merge(mut self, other: Self) -> Self {
        for (a, b) in self.g.iter_mut().zip(other.g) {
            *a += b;
        }
        self.b1 += other.b1;
        self.b2 += other.b2;
        self.reg += other.reg;
        self
    }
}

fn elementwise<T: Scalar>(a: &[T], b: &[T]) -> Vec<T> {
    a.iter().zip(b).map(|(x, y)| *x * *y).collect()
}

fn estimate_model<T: Scalar>(
    mean: Vec<T>,
    scatter: Array2<T>,
    n: usize,
    config: &FilterConfig,
    shrinkage: &mut Option<f64>,
    max_jitter: &mut f64,
) -> Result<BackgroundModel<T>> {
    let inv_n = T::one() / T::from_usize_lossy(n);
    let cov = scatter.mapv(|v| v * inv_n);
    let cov = match config.covariance_mode {
        CovarianceMode::IterativeRemoval => cov,
        CovarianceMode::RobustShrinkage => {
            let (c, est) = select_shrinkage(&cov, n, &config.shrinkage_grid)?;
            *shrinkage = Some(est.shrinkage);
            c
        }
    };
    let model = BackgroundModel::new(mean, cov, n)?;
    *max_jitter = max_jitter.max(model.jitter().as_f64());
    Ok(model)
}

/// Run one filter configuration over a single set of pixels that share
/// background statistics.
///
/// Iterative filters start from the closed-form estimate divided by the albedo
/// factor. That estimate is reported unclamped, but it enters the first
/// reweighting and statistics update as `max(alpha, 0)`, as every later
/// iterate does.
pub fn retrieve_partition<T: Scalar, P: PixelSet<T> + ?Sized>(
    pixels: &P,
    s: &[T],
    config: &FilterConfig,
) -> Result<PartitionRetrieval<T>> {
    config.validate()?;
    let n = pixels.pixel_count();
    let b = pixels.bands();
    if s.len() != b {
        return Err(Error::ShapeError(format!(
            "absorption spectrum has {} bands, pixels {}",
            s.len(),
            b
        )));
    }
    if n < b + 1 {
        return Err(Error::InsufficientSamples {
            needed: b + 1,
            found: n,
        });
    }
    let nt = T::from_usize_lossy(n);
    let moments = ScatterMoments::from_pixels(pixels)?;
    let mu0 = moments.mean().to_vec();

    let floor = T::c(config.albedo_floor);
    let mut albedo = vec![T::one(); n];
    let mut clamped_albedo = 0;
    if config.use_albedo {
        let mm = linalg::dot(&mu0, &mu0);
        if !(mm > T::zero()) || !mm.is_finite() {
            return Err(Error::DegenerateMean);
        }
        clamped_albedo = parallel::map_mut_reduce(
            &mut albedo,
            |range, out| {
                let mut clamped = 0usize;
                for (o, i) in out.iter_mut().zip(range) {
                    *o = linalg::dot(pixels.pixel(i), &mu0) / mm;
                    if *o < floor {
                        clamped += 1;
                    }
                }
                clamped
            },
            |a, b| a + b,
        )
        .unwrap_or(0);
    }
    let r_eff: Vec<T> = albedo.iter().map(|r| if *r < floor { floor } else { *r }).collect();

    let mut shrinkage = None;
    let mut max_jitter = 0.0;
    let model0 = estimate_model(
        mu0.clone(),
        moments.scatter(),
        n,
        config,
        &mut shrinkage,
        &mut max_jitter,
    )?;
    let t0 = elementwise(&mu0, s);
    let wt0 = WhitenedTarget::new(&model0, &t0)?;
    let mut alpha = vec![T::zero(); n];
    parallel::map_mut_reduce(
        &mut alpha,
        |range, out| {
            for (o, i) in out.iter_mut().zip(range) {
                *o = wt0.numerator(pixels.pixel(i)) / (r_eff[i] * wt0.denominator());
            }
        },
        |_, _| (),
    );
    if !config.iterative {
        return Ok(PartitionRetrieval {
            alpha,
            albedo,
            energy_trace: Vec::new(),
            shrinkage,
            max_jitter,
            denominator: wt0.denominator().as_f64(),
            clamped_albedo,
        });
    }

    let eps = T::c(config.epsilon);
    let mut prev: Vec<T> = alpha.iter().map(|a| a.max(T::zero())).collect();
    let mut sums = parallel::map_reduce(
        n,
        |range| {
            let mut acc = BetaSums::zero(b);
            for i in range {
                acc.add(albedo[i] * prev[i], pixels.pixel(i), &mu0);
            }
            acc
        },
        BetaSums::merge,
    )
    .expect("n > 0");
    let mut prev_mean = mu0.clone();
    let mut energy_trace = Vec::with_capacity(config.iterations);
    let mut denominator = wt0.denominator();
    let mut next = vec![T::zero(); n];

    for _ in 0..config.iterations {
        let shift = sums.b1 / nt;
        let mean: Vec<T> = mu0
            .iter()
            .zip(&prev_mean)
            .zip(s)
            .map(|((m0, pm), s)| *m0 - shift * *pm * *s)
            .collect();
        let m = elementwise(&mean, s);
        let scatter = moments.residual_scatter(&mean, &m, &sums.g, sums.b1, sums.b2);
        let model = estimate_model(
            mean.clone(),
            scatter.clone(),
            n,
            config,
            &mut shrinkage,
            &mut max_jitter,
        )?;
        let wt = WhitenedTarget::new(&model, &m)?;
        let den = wt.denominator();
        denominator = den;

        let new_sums = parallel::map_mut_reduce(
            &mut next,
            |range, out| {
                let mut acc = BetaSums::zero(b);
                for (o, i) in out.iter_mut().zip(range) {
                    let w = if config.use_sparsity {
                        T::one() / (prev[i] + eps)
                    } else {
                        T::zero()
                    };
                    let l = pixels.pixel(i);
                    let a = soft_threshold(wt.numerator(l), den, w, r_eff[i]);
                    *o = a;
                    acc.reg += r_eff[i] * w * a;
                    acc.add(albedo[i] * a, l, &mu0);
                }
                acc
            },
            BetaSums::merge,
        )
        .expect("n > 0");

        // sum_i d_i' C^-1 d_i for the new estimates, written as the scatter
        // the covariance was built from plus a rank-two correction
        let v = wt.whitened();
        let delta: Vec<T> = mu0.iter().zip(&mean).map(|(a, c)| *a - *c).collect();
        let db1 = new_sums.b1 - sums.b1;
        let dh: Vec<T> = new_sums
            .g
            .iter()
            .zip(&sums.g)
            .zip(&delta)
            .map(|((gn, go), d)| (*gn - *go) + db1 * *d)
            .collect();
        let base = if shrinkage.is_none() && model.jitter() == T::zero() {
            nt * T::from_usize_lossy(b)
        } else {
            model.factor().trace_solve(&scatter)
        };
        let quad = base - T::c(2.0) * linalg::dot(&dh, v) + (new_sums.b2 - sums.b2) * linalg::dot(&m, v);
        energy_trace.push((quad + new_sums.reg).as_f64());

        std::mem::swap(&mut prev, &mut next);
        sums = new_sums;
        prev_mean = mean;
    }

    Ok(PartitionRetrieval {
        alpha: prev,
        albedo,
        energy_trace,
        shrinkage,
        max_jitter,
        denominator: denominator.as_f64(),
        clamped_albedo,
    })
}

/// Run a filter over the scene, treating each group of `group` adjacent
/// columns as one partition with its own background statistics.
///
/// A failing partition leaves its pixels at nodata and is listed in
/// `failures`; the call only errors if the inputs are invalid or every
/// partition fails.
pub fn run_scene<T: Scalar>(
    cube: &RadianceCube<T>,
    s: &[T],
    config: &FilterConfig,
    group: usize,
) -> Result<RetrievalResult<T>> {
    config.validate()?;
    if s.len() != cube.bands() {
        return Err(Error::ShapeError(format!(
            "absorption spectrum has {} bands, cube {}",
            s.len(),
            cube.bands()
        )));
    }
    let partitions = partition_columns(cube.samples(), group)?;
    let outcomes: Vec<_> = partitions
        .into_par_iter()
        .map(|part| {
            let start = Instant::now();
            let pixels = PartitionPixels::new(cube, part.clone());
            let out = if pixels.pixel_count() == 0 {
                Err(Error::EmptyPartition)
            } else {
                retrieve_partition(&pixels, s, config)
            };
            (part, pixels.flat_indices().to_vec(), out, start.elapsed().as_secs_f64())
        })
        .collect();

    let nodata = cube.nodata_value();
    let fill = T::c(nodata);
    let shape = (cube.lines(), cube.samples());
    let mut alpha = Array2::from_elem(shape, fill);
    let mut albedo = Array2::from_elem(shape, fill);
    let mut energy_trace: Vec<f64> = Vec::new();
    let mut diagnostics = Vec::new();
    let mut failures = Vec::new();
    let samples = cube.samples();
    for (part, flat, out, elapsed) in outcomes {
        match out {
            Ok(res) => {
                for (k, idx) in flat.iter().enumerate() {
                    let pos = (idx / samples, idx % samples);
                    alpha[pos] = res.alpha[k];
                    albedo[pos] = res.albedo[k];
                }
                if energy_trace.is_empty() {
                    energy_trace = vec![0.0; res.energy_trace.len()];
                }
                for (e, v) in energy_trace.iter_mut().zip(&res.energy_trace) {
                    *e += v;
                }
                let zeros = res.alpha.iter().filter(|a| **a == T::zero()).count();
                diagnostics.push(PartitionDiagnostics {
                    index: part.index,
                    columns: part.columns.clone(),
                    pixel_count: flat.len(),
                    shrinkage: res.shrinkage,
                    max_jitter: res.max_jitter,
                    denominator: res.denominator,
                    clamped_albedo: res.clamped_albedo,
                    zero_fraction: zeros as f64 / flat.len() as f64,
                    elapsed_seconds: elapsed,
                });
            }
            Err(error) => failures.push(PartitionFailure {
                index: part.index,
                columns: part.columns,
                error,
            }),
        }
    }
    if diagnostics.is_empty() {
        let first = failures.into_iter().next().expect("at least one partition");
        return Err(Error::Partition {
            index: first.index,
            source: Box::new(first.error),
        });
    }
    Ok(RetrievalResult {
        alpha,
        albedo,
        energy_trace,
        config: config.clone(),
        diagnostics,
        failures,
        nodata,
    })
}

/// Single-partition retrieval over all columns.
pub fn run_retrieval<T: Scalar>(cube: &RadianceCube<T>, s: &[T], config: &FilterConfig) -> Result<RetrievalResult<T>> {
    run_scene(cube, s, config, cube.samples())
}
