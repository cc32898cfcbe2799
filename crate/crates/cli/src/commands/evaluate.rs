use std::path::{Path, PathBuf};
use std::time::Instant;

use gasmf::eval::{
    compare_to_reference, evaluate, render_table, reports_to_csv, reports_to_key_value, EvaluationOptions,
    RegionOfInterest,
};
use gasmf::io::{data_path_for, read_band, DEFAULT_NODATA};
use ndarray::Array2;
use serde_json::json;

use super::{ensure_dir, file_stem, resolve_header, write_text, Context};
use crate::args::EvaluateArgs;
use crate::error::{usage, CliResult};
use crate::manifest::RunManifest;

struct Map {
    name: String,
    values: Array2<f64>,
    nodata: f64,
}

/// `name=path` or a bare path named after its file stem.
fn split_named(spec: &str) -> (Option<&str>, &str) {
    match spec.split_once('=') {
        Some((name, path)) if !name.is_empty() => (Some(name), path),
        _ => (None, spec),
    }
}

fn load_map(name: Option<&str>, path: &Path, manifest: &mut RunManifest) -> CliResult<Map> {
    let header = resolve_header(path)?;
    manifest.add_input(&header)?;
    manifest.add_input(&data_path_for(&header)?)?;
    let (values, h) = read_band::<f64>(&header)?;
    Ok(Map {
        name: name.map(str::to_string).unwrap_or_else(|| file_stem(&header)),
        values,
        nodata: h.nodata.unwrap_or(DEFAULT_NODATA),
    })
}

pub fn run(args: &EvaluateArgs, ctx: &Context) -> CliResult<()> {
    let start = Instant::now();
    let mut manifest = RunManifest::new("evaluate", &ctx.argv, ctx.threads);
    if args.truth.is_none() && args.roi.is_empty() && args.roi_mask.is_empty() {
        return Err(usage("nothing to evaluate: pass --truth, --roi or --roi-mask"));
    }

    let mut maps = Vec::new();
    for spec in &args.retrieved {
        let (name, path) = split_named(spec);
        let map = load_map(name, Path::new(path), &mut manifest)?;
        if maps.iter().any(|m: &Map| m.name == map.name) {
            return Err(usage(format!("retrieved map name '{}' is used twice", map.name)));
        }
        maps.push(map);
    }
    let reference_index = match &args.reference {
        None => None,
        Some(r) => match maps.iter().position(|m| &m.name == r) {
            Some(i) => Some(i),
            None => {
                let (name, path) = split_named(r);
                maps.push(load_map(name, Path::new(path), &mut manifest)?);
                Some(maps.len() - 1)
            }
        },
    };
    let truth = match &args.truth {
        Some(p) => Some(load_map(Some("truth"), p, &mut manifest)?.values),
        None => None,
    };

    let mut rois = Vec::new();
    for spec in &args.roi {
        rois.push(RegionOfInterest::parse(spec)?);
    }
    for spec in &args.roi_mask {
        let (name, path) = split_named(spec);
        let Some(name) = name else {
            return Err(usage(format!("--roi-mask '{spec}' is not name=path")));
        };
        let m = load_map(Some(name), Path::new(path), &mut manifest)?;
        let mask = m.values.mapv(|v| v.is_finite() && v != 0.0 && v != m.nodata);
        rois.push(RegionOfInterest::mask(name, mask)?);
    }

    let mut reports = Vec::with_capacity(maps.len());
    for m in &maps {
        let options = EvaluationOptions {
            regression_threshold: args.threshold,
            bin_width: args.bin_width,
            nodata: Some(m.nodata),
        };
        reports.push(evaluate(&m.name, &m.values, truth.as_ref(), &rois, &options)?);
    }
    if let Some(i) = reference_index {
        let reference = reports[i].clone();
        compare_to_reference(&mut reports, &reference)?;
    }

    ensure_dir(&args.out)?;
    let table = render_table(&reports);
    print!("{table}");
    let mut outputs: Vec<PathBuf> = Vec::new();
    for (file, text) in [
        ("evaluation.txt", table.clone()),
        ("evaluation.csv", reports_to_csv(&reports)),
        ("evaluation_metrics.txt", reports_to_key_value(&reports)),
    ] {
        let path = args.out.join(file);
        write_text(&path, &text)?;
        outputs.push(path);
    }
    for r in &reports {
        if let Some(h) = &r.histogram {
            let path = args.out.join(format!("{}_histogram.csv", r.name));
            write_text(&path, &h.to_csv())?;
            outputs.push(path);
        }
    }
    for p in &outputs {
        manifest.add_output(p)?;
    }
    manifest.parameters = json!({
        "maps": maps.iter().map(|m| m.name.clone()).collect::<Vec<_>>(),
        "reference": reference_index.map(|i| maps[i].name.clone()),
        "rois": rois.iter().map(|r| r.name.clone()).collect::<Vec<_>>(),
        "threshold": args.threshold,
        "bin_width": args.bin_width,
        "reports": reports,
    });
    manifest.duration_seconds = start.elapsed().as_secs_f64();
    manifest.write(&args.out.join("evaluation_manifest.json"))?;
    Ok(())
}
