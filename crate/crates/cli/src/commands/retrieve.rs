use std::path::{Path, PathBuf};
use std::time::Instant;

use gasmf::filter::{run_scene, FilterConfig, RetrievalResult};
use gasmf::io::{data_path_for, open_cube, select_spectral_window, write_band, write_band_as, RadianceCube};
use gasmf::target::{read_unit_absorption_csv, UnitAbsorptionSpectrum};
use gasmf::{Error, Scalar};
use serde_json::json;

use super::{ensure_dir, file_stem, require_file, resolve_header, write_text, Context};
use crate::args::{Group, Precision, RetrieveArgs};
use crate::error::{CliError, CliResult};
use crate::manifest::{PartitionTiming, RunManifest};

pub fn run(args: &RetrieveArgs, ctx: &Context) -> CliResult<()> {
    let start = Instant::now();
    let header = resolve_header(&args.radiance)?;
    require_file(&args.target, "target spectrum")?;
    let spectrum = read_unit_absorption_csv::<f64>(&args.target)?;
    let config = FilterConfig::for_variant(args.variant)
        .with_iterations(args.iters)
        .with_epsilon(args.epsilon);
    config.validate()?;
    ensure_dir(&args.out)?;
    let prefix = args
        .name
        .clone()
        .unwrap_or_else(|| format!("{}_{}", file_stem(&header), args.variant.name()));
    match args.precision {
        Precision::F32 => run_typed::<f32>(args, ctx, &header, &spectrum, &config, &prefix, start),
        Precision::F64 => run_typed::<f64>(args, ctx, &header, &spectrum, &config, &prefix, start),
    }
}

/// Band-matched absorption values for the cube.
fn matched_absorption<T: Scalar>(cube: &RadianceCube<T>, spectrum: &UnitAbsorptionSpectrum<f64>) -> CliResult<Vec<T>> {
    let values = if cube.wavelengths().is_empty() {
        if spectrum.len() != cube.bands() {
            return Err(Error::ShapeError(format!(
                "cube has no wavelengths and {} bands; target has {} values",
                cube.bands(),
                spectrum.len()
            ))
            .into());
        }
        spectrum.values.clone()
    } else {
        spectrum.resample_to(cube.wavelengths())?.values
    };
    Ok(values.into_iter().map(T::c).collect())
}

#[allow(clippy::too_many_arguments)]
fn run_typed<T: Scalar>(
    args: &RetrieveArgs,
    ctx: &Context,
    header: &Path,
    spectrum: &UnitAbsorptionSpectrum<f64>,
    config: &FilterConfig,
    prefix: &str,
    start: Instant,
) -> CliResult<()> {
    let mut cube = open_cube::<T>(header)?;
    if let Some(w) = args.window {
        cube = select_spectral_window(&cube, w.0, w.1)?;
    }
    let s = matched_absorption(&cube, spectrum)?;
    let group = match args.group {
        Group::All => cube.samples(),
        Group::Columns(n) => n,
    };
    let result = run_scene(&cube, &s, config, group)?;

    let mut template = cube.header().clone();
    template.nodata = Some(result.nodata);
    let alpha_path = args.out.join(format!("{prefix}_alpha.img"));
    let albedo_path = args.out.join(format!("{prefix}_albedo.img"));
    write_band(&result.alpha, &template, &alpha_path)?;
    write_band_as(
        &result.albedo,
        &template,
        &albedo_path,
        "albedo factor",
        "dimensionless",
    )?;
    let mut outputs = vec![
        alpha_path.with_extension("hdr"),
        alpha_path,
        albedo_path.with_extension("hdr"),
        albedo_path,
    ];

    if !result.energy_trace.is_empty() {
        let path = args.out.join(format!("{prefix}_energy.csv"));
        let mut text = String::from("iteration,energy\n");
        for (k, e) in result.energy_trace.iter().enumerate() {
            text.push_str(&format!("{},{e:e}\n", k + 1));
        }
        write_text(&path, &text)?;
        outputs.push(path);
    }
    if args.diagnostics {
        let path = args.out.join(format!("{prefix}_partitions.csv"));
        write_text(&path, &diagnostics_csv(&result))?;
        outputs.push(path);
    }

    let mut manifest = RunManifest::new("retrieve", &ctx.argv, ctx.threads);
    manifest.add_input(header)?;
    manifest.add_input(&data_path_for(header)?)?;
    manifest.add_input(&args.target)?;
    for p in &outputs {
        manifest.add_output(p)?;
    }
    manifest.partitions = partition_timings(&result);
    manifest.parameters = json!({
        "config": config,
        "group": group,
        "window": args.window.map(|w| [w.0, w.1]),
        "precision": match args.precision { Precision::F32 => "f32", Precision::F64 => "f64" },
        "bands": cube.bands(),
        "valid_pixels": cube.valid_count(),
        "nodata": result.nodata,
    });
    manifest.duration_seconds = start.elapsed().as_secs_f64();
    let manifest_path: PathBuf = args.out.join(format!("{prefix}_manifest.json"));
    manifest.write(&manifest_path)?;

    let partitions = result.diagnostics.len() + result.failures.len();
    eprintln!(
        "{}: {} partitions, {} iterations, {:.2} s -> {}",
        args.variant,
        partitions,
        result.energy_trace.len(),
        manifest.duration_seconds,
        args.out.display()
    );
    if result.is_partial() {
        for f in &result.failures {
            eprintln!("partition {} (columns {:?}) failed: {}", f.index, f.columns, f.error);
        }
        return Err(CliError::Partial {
            failed: result.failures.len(),
            total: partitions,
        });
    }
    Ok(())
}

fn partition_timings<T: Scalar>(result: &RetrievalResult<T>) -> Vec<PartitionTiming> {
    let mut rows: Vec<PartitionTiming> = result
        .diagnostics
        .iter()
        .map(|d| PartitionTiming {
            index: d.index,
            first_column: d.columns.start,
            last_column: d.columns.end - 1,
            pixels: d.pixel_count,
            seconds: d.elapsed_seconds,
            error: None,
        })
        .chain(result.failures.iter().map(|f| PartitionTiming {
            index: f.index,
            first_column: f.columns.start,
            last_column: f.columns.end - 1,
            pixels: 0,
            seconds: 0.0,
            error: Some(f.error.to_string()),
        }))
        .collect();
    rows.sort_by_key(|r| r.index);
    rows
}

fn diagnostics_csv<T: Scalar>(result: &RetrievalResult<T>) -> String {
    let mut text = String::from(
        "partition,first_column,last_column,pixels,shrinkage,max_jitter,denominator,clamped_albedo,zero_fraction,error\n",
    );
    let mut rows: Vec<(usize, String)> = result
        .diagnostics
        .iter()
        .map(|d| {
            let shrink = d.shrinkage.map(|v| format!("{v:e}")).unwrap_or_default();
            (
                d.index,
                format!(
                    "{},{},{},{},{},{:e},{:e},{},{},\n",
                    d.index,
                    d.columns.start,
                    d.columns.end - 1,
                    d.pixel_count,
                    shrink,
                    d.max_jitter,
                    d.denominator,
                    d.clamped_albedo,
                    d.zero_fraction
                ),
            )
        })
        .chain(result.failures.iter().map(|f| {
            let msg = f.error.to_string().replace(['"', ','], " ");
            (
                f.index,
                format!(
                    "{},{},{},0,,,,,,\"{msg}\"\n",
                    f.index,
                    f.columns.start,
                    f.columns.end - 1
                ),
            )
        }))
        .collect();
    rows.sort_by_key(|r| r.0);
    for (_, row) in rows {
        text.push_str(&row);
    }
    text
}
