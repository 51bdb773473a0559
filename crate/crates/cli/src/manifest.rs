//! One `manifest.json` per output directory, describing how it was made.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Serialize;
use serde_json::{Map, Value};
use time::format_description::well_known::Rfc3339;
use time::OffsetDateTime;

pub const MANIFEST_FILE: &str = "manifest.json";
/// Present in an output directory whose command failed.
pub const INVALID_MARKER: &str = "INVALID";

#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub args: Vec<String>,
    pub config_path: Option<PathBuf>,
    pub seed: Option<u64>,
    pub inputs: Vec<PathBuf>,
    /// Paths relative to the output directory.
    pub outputs: Vec<PathBuf>,
    pub tool_version: String,
    pub started: String,
    pub finished: String,
    pub status: String,
    pub error: Option<String>,
    pub details: Map<String, Value>,
}

fn now() -> String {
    OffsetDateTime::now_utc()
        .format(&Rfc3339)
        .unwrap_or_else(|_| "unknown".into())
}

/// Bookkeeping for one command invocation writing into `out`.
pub struct Run {
    pub out: PathBuf,
    manifest: RunManifest,
}

impl Run {
    pub fn start(command: &str, out: &Path, config_path: Option<&Path>, seed: Option<u64>) -> Self {
        Self {
            out: out.to_path_buf(),
            manifest: RunManifest {
                command: command.into(),
                args: std::env::args().collect(),
                config_path: config_path.map(Path::to_path_buf),
                seed,
                inputs: Vec::new(),
                outputs: Vec::new(),
                tool_version: env!("CARGO_PKG_VERSION").into(),
                started: now(),
                finished: String::new(),
                status: "running".into(),
                error: None,
                details: Map::new(),
            },
        }
    }

    pub fn input(&mut self, path: &Path) {
        self.manifest.inputs.push(path.to_path_buf());
    }

    /// Joins `rel` onto the output directory and records it.
    pub fn output(&mut self, rel: impl AsRef<Path>) -> PathBuf {
        self.manifest.outputs.push(rel.as_ref().to_path_buf());
        self.out.join(rel)
    }

    pub fn detail(&mut self, key: &str, value: impl Serialize) {
        let v = serde_json::to_value(value).unwrap_or(Value::Null);
        self.manifest.details.insert(key.into(), v);
    }

    /// Writes the manifest. A failed run also leaves the `INVALID` marker
    /// holding the error; a successful one clears any stale marker.
    pub fn finish(mut self, outcome: &Result<()>) -> Result<()> {
        fs::create_dir_all(&self.out)
            .with_context(|| format!("creating {}", self.out.display()))?;
        self.manifest.finished = now();
        let marker = self.out.join(INVALID_MARKER);
        match outcome {
            Ok(()) => {
                self.manifest.status = "ok".into();
                if marker.exists() {
                    fs::remove_file(&marker)
                        .with_context(|| format!("removing {}", marker.display()))?;
                }
            }
            Err(e) => {
                let msg = format!("{e:#}");
                self.manifest.status = "failed".into();
                self.manifest.error = Some(msg.clone());
                fs::write(&marker, msg + "\n")
                    .with_context(|| format!("writing {}", marker.display()))?;
            }
        }
        let path = self.out.join(MANIFEST_FILE);
        let text = serde_json::to_string_pretty(&self.manifest)?;
        fs::write(&path, text + "\n").with_context(|| format!("writing {}", path.display()))
    }
}
