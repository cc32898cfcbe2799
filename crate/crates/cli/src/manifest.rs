//! Run manifests: enough to re-run a command and check it reproduced.

use std::fs::File;
use std::io::Read;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FileHash {
    pub path: PathBuf,
    pub sha256: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PartitionTiming {
    pub index: usize,
    pub first_column: usize,
    pub last_column: usize,
    pub pixels: usize,
    pub seconds: f64,
    pub error: Option<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub command: String,
    /// Full argument vector, program name excluded.
    pub argv: Vec<String>,
    pub working_directory: PathBuf,
    pub threads: usize,
    pub seed: Option<u64>,
    pub inputs: Vec<FileHash>,
    pub outputs: Vec<FileHash>,
    pub duration_seconds: f64,
    pub partitions: Vec<PartitionTiming>,
    /// Free-form parameters echoed by the command.
    pub parameters: serde_json::Value,
}

impl RunManifest {
    pub fn new(command: &str, argv: &[String], threads: usize) -> Self {
        Self {
            tool: env!("CARGO_PKG_NAME").to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            command: command.to_string(),
            argv: argv.to_vec(),
            working_directory: std::env::current_dir().unwrap_or_default(),
            threads,
            seed: None,
            inputs: Vec::new(),
            outputs: Vec::new(),
            duration_seconds: 0.0,
            partitions: Vec::new(),
            parameters: serde_json::Value::Null,
        }
    }

    pub fn add_input(&mut self, path: &Path) -> CliResult<()> {
        self.inputs.push(hash_file(path)?);
        Ok(())
    }

    pub fn add_output(&mut self, path: &Path) -> CliResult<()> {
        self.outputs.push(hash_file(path)?);
        Ok(())
    }

    pub fn write(&self, path: &Path) -> CliResult<()> {
        let text = serde_json::to_string_pretty(self).expect("manifest serializes");
        std::fs::write(path, text + "\n").map_err(|e| CliError::Output {
            path: path.display().to_string(),
            reason: e.to_string(),
        })
    }

    pub fn read(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Usage(format!("cannot read manifest {}: {e}", path.display())))?;
        serde_json::from_str(&text)
            .map_err(|e| CliError::Usage(format!("{} is not a run manifest: {e}", path.display())))
    }
}

pub fn hash_file(path: &Path) -> CliResult<FileHash> {
    let read_err = |e: std::io::Error| {
        CliError::Core(gasmf::Error::Io {
            path: path.to_path_buf(),
            source: e,
        })
    };
    let mut f = File::open(path).map_err(read_err)?;
    let mut hasher = Sha256::new();
    let mut buf = vec![0u8; 1 << 20];
    loop {
        let n = f.read(&mut buf).map_err(read_err)?;
        if n == 0 {
            break;
        }
        hasher.update(&buf[..n]);
    }
    Ok(FileHash {
        path: path.to_path_buf(),
        sha256: hex::encode(hasher.finalize()),
    })
}
