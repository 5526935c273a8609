//! Atomic artifact writing and the run manifest.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::error::CliError;

/// Serialize through `Value`, whose maps are ordered, so keys come out sorted.
pub fn sorted_json<T: Serialize>(v: &T) -> Result<String, CliError> {
    let value = serde_json::to_value(v).map_err(|e| CliError::Config(e.to_string()))?;
    let mut s = serde_json::to_string_pretty(&value).map_err(|e| CliError::Config(e.to_string()))?;
    s.push('\n');
    Ok(s)
}

/// Write to a sibling temp file, then rename over the target.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    let name = path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
    let tmp = dir.join(format!(".{name}.tmp{}", std::process::id()));
    let mut f = fs::File::create(&tmp).map_err(|e| CliError::io(&tmp, e))?;
    f.write_all(bytes).map_err(|e| CliError::io(&tmp, e))?;
    f.sync_all().map_err(|e| CliError::io(&tmp, e))?;
    drop(f);
    fs::rename(&tmp, path).map_err(|e| CliError::io(path, e))
}

/// Collects artifacts of one run and writes the manifest last.
pub struct Run {
    command: String,
    dir: PathBuf,
    config: Value,
    outputs: Vec<String>,
    started: Instant,
}

impl Run {
    pub fn new<C: Serialize>(command: &str, dir: &Path, config: &C) -> Result<Self, CliError> {
        let config = serde_json::to_value(config).map_err(|e| CliError::Config(e.to_string()))?;
        Ok(Self {
            command: command.to_string(),
            dir: dir.to_path_buf(),
            config,
            outputs: Vec::new(),
            started: Instant::now(),
        })
    }

    fn record(&mut self, name: &str, bytes: &[u8]) -> Result<PathBuf, CliError> {
        let path = self.dir.join(name);
        write_atomic(&path, bytes)?;
        self.outputs.push(name.to_string());
        Ok(path)
    }

    pub fn json<T: Serialize>(&mut self, name: &str, v: &T) -> Result<PathBuf, CliError> {
        let s = sorted_json(v)?;
        self.record(name, s.as_bytes())
    }

    pub fn csv(&mut self, name: &str, header: &[&str], rows: &[Vec<String>]) -> Result<PathBuf, CliError> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let err = |e: csv::Error| CliError::Config(e.to_string());
        w.write_record(header).map_err(err)?;
        for r in rows {
            w.write_record(r).map_err(err)?;
        }
        let bytes = w.into_inner().map_err(|e| CliError::Config(e.to_string()))?;
        self.record(name, &bytes)
    }

    pub fn text(&mut self, name: &str, s: &str) -> Result<PathBuf, CliError> {
        self.record(name, s.as_bytes())
    }

    pub fn finish(self) -> Result<Value, CliError> {
        let canonical = serde_json::to_string(&self.config).map_err(|e| CliError::Config(e.to_string()))?;
        let hash = Sha256::digest(canonical.as_bytes());
        let manifest = json!({
            "command": self.command,
            "config": self.config,
            "config_sha256": hex(&hash),
            "outputs": self.outputs,
            "versions": {
                "latdisp": latdisp::VERSION,
                "latdisp-cli": env!("CARGO_PKG_VERSION"),
            },
            "wall_time_s": self.started.elapsed().as_secs_f64(),
            "workers": rayon::current_num_threads(),
        });
        let s = sorted_json(&manifest)?;
        write_atomic(&self.dir.join("manifest.json"), s.as_bytes())?;
        Ok(manifest)
    }
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

/// Shortest decimal that round-trips.
pub fn num(x: f64) -> String {
    if x.is_infinite() {
        if x > 0.0 {
            "inf".into()
        } else {
            "-inf".into()
        }
    } else {
        format!("{x:?}")
    }
}
