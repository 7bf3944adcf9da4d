//! Output directory handling: CSV tables, config snapshot and run manifest.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use hfsync::SystemConfig;
use serde_json::json;

use crate::CliError;

/// Collects the files of one run and writes the manifest last.
pub struct Run {
    dir: PathBuf,
    command: &'static str,
    started: Instant,
    files: Vec<String>,
}

impl Run {
    pub fn start(dir: &Path, command: &'static str) -> Result<Self, CliError> {
        fs::create_dir_all(dir).map_err(|source| CliError::Io {
            path: dir.to_path_buf(),
            source,
        })?;
        Ok(Run {
            dir: dir.to_path_buf(),
            command,
            started: Instant::now(),
            files: Vec::new(),
        })
    }

    pub fn write(&mut self, name: &str, contents: &str) -> Result<(), CliError> {
        let path = self.dir.join(name);
        fs::write(&path, contents).map_err(|source| CliError::Io { path, source })?;
        self.files.push(name.to_string());
        Ok(())
    }

    pub fn write_csv(&mut self, name: &str, table: &Csv) -> Result<(), CliError> {
        self.write(name, &table.text)
    }

    /// Write `config.toml` and `manifest.json`. `extra` lands under `"args"`.
    pub fn finish(mut self, cfg: &SystemConfig, extra: serde_json::Value) -> Result<PathBuf, CliError> {
        self.write("config.toml", &cfg.to_toml())?;
        let manifest = json!({
            "tool": "hfsync",
            "version": env!("CARGO_PKG_VERSION"),
            "command": self.command,
            "master_seed": cfg.master_seed,
            "duration_s": self.started.elapsed().as_secs_f64(),
            "config": cfg,
            "args": extra,
            "outputs": self.files,
        });
        let text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
        let path = self.dir.join("manifest.json");
        fs::write(&path, text + "\n").map_err(|source| CliError::Io { path: path.clone(), source })?;
        Ok(path)
    }
}

/// Minimal CSV builder; every field here is numeric or a plain identifier.
pub struct Csv {
    text: String,
}

impl Csv {
    pub fn new(header: &[&str]) -> Self {
        Csv {
            text: header.join(",") + "\n",
        }
    }

    pub fn row(&mut self, fields: &[&dyn std::fmt::Display]) {
        for (i, f) in fields.iter().enumerate() {
            if i > 0 {
                self.text.push(',');
            }
            write!(self.text, "{f}").expect("writing to a String");
        }
        self.text.push('\n');
    }
}
