//! The `--config` file: `key = value` lines grouped under `[simulator]` and
//! `[training]` headers.

use std::path::Path;

use anyhow::{bail, Context, Result};
use coverhead::simulator::SimConfig;
use coverhead::trainer::TrainConfig;

#[derive(Debug, Default, Clone, PartialEq)]
pub struct ConfigFile {
    pub simulator: String,
    pub training: String,
}

impl ConfigFile {
    pub fn parse(text: &str) -> Result<Self> {
        let mut out = ConfigFile::default();
        let mut section: Option<&mut String> = None;
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            if let Some(name) = line.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
                section = match name.trim() {
                    "simulator" => Some(&mut out.simulator),
                    "training" => Some(&mut out.training),
                    other => bail!("line {}: unknown section [{other}]", n + 1),
                };
                continue;
            }
            let Some(body) = section.as_deref_mut() else {
                bail!(
                    "line {}: setting outside a [simulator] or [training] section",
                    n + 1
                );
            };
            body.push_str(line);
            body.push('\n');
        }
        Ok(out)
    }

    pub fn load(path: Option<&Path>) -> Result<Self> {
        match path {
            None => Ok(Self::default()),
            Some(p) => {
                let text = std::fs::read_to_string(p)
                    .with_context(|| format!("reading config {}", p.display()))?;
                Self::parse(&text).with_context(|| format!("in config {}", p.display()))
            }
        }
    }

    pub fn simulator(&self) -> Result<SimConfig> {
        let mut c = SimConfig::default();
        c.apply_kv(&self.simulator).context("[simulator] section")?;
        Ok(c)
    }

    pub fn training(&self) -> Result<TrainConfig> {
        let mut c = TrainConfig::default();
        c.apply_kv(&self.training).context("[training] section")?;
        Ok(c)
    }
}

/// Parses `WxH`.
pub fn parse_image_size(s: &str) -> Result<(usize, usize), String> {
    let (w, h) = s
        .split_once(['x', 'X'])
        .ok_or_else(|| format!("expected WIDTHxHEIGHT, got `{s}`"))?;
    let w = w.trim().parse().map_err(|e| format!("width: {e}"))?;
    let h = h.trim().parse().map_err(|e| format!("height: {e}"))?;
    Ok((w, h))
}
