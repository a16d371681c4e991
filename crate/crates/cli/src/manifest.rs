use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;
use serde_json::Value;

use crate::commands::CliError;

#[derive(Serialize)]
pub struct Manifest {
    pub command: String,
    pub config: Value,
    pub seeds: Value,
    pub inputs: Vec<PathBuf>,
    pub outputs: Vec<PathBuf>,
    pub wall_seconds: f64,
    pub version: String,
}

pub struct Run {
    command: &'static str,
    started: Instant,
    inputs: Vec<PathBuf>,
    outputs: Vec<PathBuf>,
    out_dir: Option<PathBuf>,
}

impl Run {
    pub fn start(command: &'static str, out_dir: Option<&Path>) -> Result<Self, CliError> {
        if let Some(dir) = out_dir {
            std::fs::create_dir_all(dir).map_err(|e| CliError::usage(format!("cannot create {}: {e}", dir.display())))?;
        }
        Ok(Run {
            command,
            started: Instant::now(),
            inputs: Vec::new(),
            outputs: Vec::new(),
            out_dir: out_dir.map(Path::to_path_buf),
        })
    }

    pub fn input(&mut self, path: &Path) {
        self.inputs.push(path.to_path_buf());
    }

    /// Writes `contents` to `name` inside the output directory.
    pub fn write(&mut self, name: &str, contents: &str) -> Result<PathBuf, CliError> {
        let dir = self.out_dir.as_ref().ok_or_else(|| CliError::usage("no output directory"))?;
        let path = dir.join(name);
        std::fs::write(&path, contents).map_err(|e| CliError::usage(format!("cannot write {}: {e}", path.display())))?;
        self.outputs.push(path.clone());
        Ok(path)
    }

    pub fn finish(self, config: Value, seeds: Value) -> Result<(), CliError> {
        let Some(dir) = self.out_dir.clone() else {
            return Ok(());
        };
        let manifest = Manifest {
            command: self.command.to_owned(),
            config,
            seeds,
            inputs: self.inputs,
            outputs: self.outputs,
            wall_seconds: self.started.elapsed().as_secs_f64(),
            version: env!("CARGO_PKG_VERSION").to_owned(),
        };
        let mut s = serde_json::to_string_pretty(&manifest).map_err(|e| CliError::usage(e.to_string()))?;
        s.push('\n');
        let path = dir.join("manifest.json");
        std::fs::write(&path, s).map_err(|e| CliError::usage(format!("cannot write {}: {e}", path.display())))
    }
}
