use std::path::{Path, PathBuf};

use gasmf::io::header_path_for;

use crate::error::{usage, CliError, CliResult};

pub mod evaluate;
pub mod replay;
pub mod retrieve;
pub mod simulate;
pub mod target_gen;

/// What every command needs besides its own arguments.
#[derive(Debug, Clone)]
pub struct Context {
    /// Arguments after the program name, as typed.
    pub argv: Vec<String>,
    pub threads: usize,
}

/// Accept either an ENVI header or its binary file and return the header path.
pub fn resolve_header(path: &Path) -> CliResult<PathBuf> {
    let header = if path.extension().is_some_and(|e| e.eq_ignore_ascii_case("hdr")) {
        path.to_path_buf()
    } else {
        header_path_for(path)
    };
    if !header.is_file() {
        return Err(usage(format!("no ENVI header found for {}", path.display())));
    }
    Ok(header)
}

pub fn require_file(path: &Path, what: &str) -> CliResult<()> {
    if path.is_file() {
        Ok(())
    } else {
        Err(usage(format!("{what} {} does not exist", path.display())))
    }
}

pub fn ensure_dir(dir: &Path) -> CliResult<()> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::Output {
        path: dir.display().to_string(),
        reason: e.to_string(),
    })
}

pub fn write_text(path: &Path, text: &str) -> CliResult<()> {
    std::fs::write(path, text).map_err(|e| CliError::Output {
        path: path.display().to_string(),
        reason: e.to_string(),
    })
}

pub fn file_stem(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "map".to_string())
}
