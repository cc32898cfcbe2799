use clap::Parser;

use crate::args::{Cli, ReplayArgs};
use crate::error::{usage, CliError, CliResult};
use crate::manifest::{hash_file, RunManifest};

pub fn run(args: &ReplayArgs) -> CliResult<()> {
    let manifest = RunManifest::read(&args.manifest)?;
    if manifest.argv.first().map(String::as_str) == Some("replay") {
        return Err(usage("a replay manifest cannot itself be replayed"));
    }
    std::env::set_current_dir(&manifest.working_directory).map_err(|e| {
        usage(format!(
            "cannot enter recorded directory {}: {e}",
            manifest.working_directory.display()
        ))
    })?;
    for input in &manifest.inputs {
        let now = hash_file(&input.path)?;
        if now.sha256 != input.sha256 {
            return Err(CliError::Mismatch(format!(
                "input {} has changed",
                input.path.display()
            )));
        }
    }

    let argv: Vec<String> = std::iter::once(manifest.tool.clone())
        .chain(manifest.argv.iter().cloned())
        .collect();
    let cli = Cli::try_parse_from(&argv).map_err(|e| usage(format!("recorded arguments no longer parse: {e}")))?;
    match crate::execute(cli, manifest.argv.clone()) {
        Ok(()) | Err(CliError::Partial { .. }) => {}
        Err(e) => return Err(e),
    }

    let mut differing = Vec::new();
    for output in &manifest.outputs {
        let now = hash_file(&output.path)?;
        if now.sha256 != output.sha256 {
            differing.push(output.path.display().to_string());
        }
    }
    if !differing.is_empty() {
        return Err(CliError::Mismatch(format!("outputs differ: {}", differing.join(", "))));
    }
    eprintln!(
        "replayed '{}': {} outputs identical",
        manifest.command,
        manifest.outputs.len()
    );
    Ok(())
}
