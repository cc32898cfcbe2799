use std::time::Instant;

use gasmf::io::{data_path_for, open_cube, write_band_as, write_cube, DataType, RadianceCube, ENHANCEMENT_UNITS};
use gasmf::simulate::{
    gaussian_plume_truth, random_sparse_truth, simulate_scene, synthetic_base_scene, synthetic_methane_absorption,
    BaseSceneConfig, NoiseModel, TruthField,
};
use gasmf::target::{read_unit_absorption_csv, write_unit_absorption_csv};
use serde_json::json;

use super::{ensure_dir, require_file, resolve_header, Context};
use crate::args::{Precision, SceneArgs, SimulateCommand};
use crate::error::{usage, CliResult};
use crate::manifest::RunManifest;

pub fn run(cmd: &SimulateCommand, ctx: &Context) -> CliResult<()> {
    let start = Instant::now();
    let scene = match cmd {
        SimulateCommand::Random(a) => &a.scene,
        SimulateCommand::Plume(a) => &a.scene,
    };
    let mut manifest = RunManifest::new("simulate", &ctx.argv, ctx.threads);
    manifest.seed = Some(scene.seed);

    let (base, base_id) = load_base(scene, &mut manifest)?;
    let (lines, samples) = (base.lines(), base.samples());
    let truth: TruthField = match cmd {
        SimulateCommand::Random(a) => random_sparse_truth(lines, samples, a.fraction, a.max, scene.seed)?,
        SimulateCommand::Plume(a) => {
            let (l, s) = (a.source.0, a.source.1);
            if l < 0.0 || s < 0.0 || l.fract() != 0.0 || s.fract() != 0.0 {
                return Err(usage(format!("plume source {l},{s} must be whole pixel indices")));
            }
            gaussian_plume_truth(
                lines,
                samples,
                (l as usize, s as usize),
                a.peak,
                a.sigma_along,
                a.sigma_cross,
                a.azimuth,
            )?
        }
    };

    let (absorption, absorption_id) = match &scene.target {
        Some(path) => {
            require_file(path, "target spectrum")?;
            manifest.add_input(path)?;
            let s = read_unit_absorption_csv::<f64>(path)?;
            (s.resample_to(base.wavelengths())?, path.display().to_string())
        }
        None => {
            if base.wavelengths().is_empty() {
                return Err(usage("base cube has no wavelengths; pass --target"));
            }
            (
                synthetic_methane_absorption(base.wavelengths())?,
                "synthetic methane".to_string(),
            )
        }
    };
    let noise = NoiseModel::uniform(base.bands(), scene.noise.0, scene.noise.1)?;
    let smoothing = scene.smooth.0;
    let sim = simulate_scene(
        &base,
        &base_id,
        truth,
        &absorption,
        &absorption_id,
        &noise,
        smoothing,
        scene.seed,
    )?;

    ensure_dir(&scene.out)?;
    let name = &scene.name;
    let mut header = sim.cube.header().clone();
    header.data_type = match scene.data_type {
        Precision::F32 => DataType::Float32,
        Precision::F64 => DataType::Float64,
    };
    let valid = sim.cube.valid_mask().to_vec();
    let cube = RadianceCube::with_mask(header, sim.cube.into_values(), valid)?;
    let cube_path = scene.out.join(format!("{name}.img"));
    write_cube(&cube, &cube_path)?;
    let truth_path = scene.out.join(format!("{name}_truth.img"));
    write_band_as(
        &sim.truth.alpha_true,
        cube.header(),
        &truth_path,
        "true enhancement",
        ENHANCEMENT_UNITS,
    )?;
    let absorption_path = scene.out.join(format!("{name}_absorption.csv"));
    write_unit_absorption_csv(&absorption, &absorption_path)?;

    for p in [
        cube_path.with_extension("hdr"),
        cube_path,
        truth_path.with_extension("hdr"),
        truth_path,
        absorption_path,
    ] {
        manifest.add_output(&p)?;
    }
    manifest.parameters = json!({
        "provenance": sim.provenance,
        "enhanced_pixels": sim.truth.nonzero_count(),
        "lines": lines,
        "samples": samples,
        "bands": cube.bands(),
    });
    manifest.duration_seconds = start.elapsed().as_secs_f64();
    manifest.write(&scene.out.join(format!("{name}_manifest.json")))?;
    eprintln!(
        "{name}: {lines}x{samples}x{} cube, {} enhanced pixels -> {}",
        cube.bands(),
        sim.truth.nonzero_count(),
        scene.out.display()
    );
    Ok(())
}

fn load_base(scene: &SceneArgs, manifest: &mut RunManifest) -> CliResult<(RadianceCube<f64>, String)> {
    match (&scene.base, scene.flat) {
        (Some(path), false) => {
            let header = resolve_header(path)?;
            manifest.add_input(&header)?;
            manifest.add_input(&data_path_for(&header)?)?;
            Ok((open_cube::<f64>(&header)?, header.display().to_string()))
        }
        (None, true) => {
            let config = BaseSceneConfig {
                lines: scene.lines,
                samples: scene.samples,
                bands: scene.bands,
                wavelength_lo: scene.wavelengths.0,
                wavelength_hi: scene.wavelengths.1,
                ..Default::default()
            };
            let id = format!(
                "synthetic base {}x{}x{} over {}-{} nm (seed {})",
                config.lines, config.samples, config.bands, config.wavelength_lo, config.wavelength_hi, config.seed
            );
            Ok((synthetic_base_scene(&config)?, id))
        }
        _ => Err(usage("pass exactly one of --base or --flat")),
    }
}
