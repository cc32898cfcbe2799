use std::time::Instant;

use gasmf::target::{
    fit_unit_absorption_with_diagnostics, read_hires_lookup_csv, read_lookup_csv, read_srf_csv,
    write_fit_diagnostics_csv, write_unit_absorption_csv,
};
use serde_json::json;

use super::{require_file, Context};
use crate::args::TargetGenArgs;
use crate::error::{usage, CliResult};
use crate::manifest::RunManifest;

pub fn run(args: &TargetGenArgs, ctx: &Context) -> CliResult<()> {
    let start = Instant::now();
    let mut manifest = RunManifest::new("target-gen", &ctx.argv, ctx.threads);
    let lookup = match (&args.lookup, &args.hires, &args.srf) {
        (Some(path), None, None) => {
            require_file(path, "lookup table")?;
            manifest.add_input(path)?;
            read_lookup_csv::<f64>(path)?
        }
        (None, Some(hires), Some(srf)) => {
            require_file(hires, "high-resolution lookup table")?;
            require_file(srf, "instrument response")?;
            manifest.add_input(hires)?;
            manifest.add_input(srf)?;
            let response = read_srf_csv(srf)?;
            read_hires_lookup_csv::<f64>(hires, &response)?
        }
        _ => return Err(usage("pass --lookup, or --hires together with --srf")),
    };
    let fit = fit_unit_absorption_with_diagnostics(&lookup)?;
    if let Some(dir) = args.out.parent().filter(|d| !d.as_os_str().is_empty()) {
        super::ensure_dir(dir)?;
    }
    write_unit_absorption_csv(&fit.spectrum, &args.out)?;
    let stem = args.out.with_extension("");
    let fit_path = stem.with_file_name(format!("{}_fit.csv", super::file_stem(&args.out)));
    write_fit_diagnostics_csv(&fit, &fit_path)?;
    manifest.add_output(&args.out)?;
    manifest.add_output(&fit_path)?;

    let min_r2 = fit.r_squared.iter().copied().fold(f64::INFINITY, f64::min);
    manifest.parameters = json!({
        "bands": fit.spectrum.len(),
        "enhancement_levels": lookup.enhancements().len(),
        "min_r_squared": min_r2,
    });
    manifest.duration_seconds = start.elapsed().as_secs_f64();
    manifest.write(&stem.with_file_name(format!("{}_manifest.json", super::file_stem(&args.out))))?;
    eprintln!(
        "{} bands from {} enhancement levels, min R^2 {min_r2:.6} -> {}",
        fit.spectrum.len(),
        lookup.enhancements().len(),
        args.out.display()
    );
    Ok(())
}
