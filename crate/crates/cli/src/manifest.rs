//! Run manifests.
//!
//! Every output file carries the manifest (command, digest of the resolved
//! configuration, seed and tool version) so that identical manifests imply
//! identical outputs. Wall-clock timestamps, which would break that, live
//! only in the `manifest.json` sidecar together with the full configuration
//! needed to replay the run.

use std::fs::{self, File};
use std::io::{BufReader, Read, Write};
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use anyhow::Context;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use rivw_core::Error;

pub const SIDECAR: &str = "manifest.json";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CommandName {
    Analyze,
    Simulate,
    Profile,
    RbCheck,
    Oracle,
}

impl CommandName {
    pub fn as_str(self) -> &'static str {
        match self {
            CommandName::Analyze => "analyze",
            CommandName::Simulate => "simulate",
            CommandName::Profile => "profile",
            CommandName::RbCheck => "rb-check",
            CommandName::Oracle => "oracle",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: CommandName,
    pub config_digest: String,
    pub seed: Option<u64>,
    pub version: String,
}

impl RunManifest {
    pub fn new<C: Serialize>(command: CommandName, config: &C, seed: Option<u64>) -> anyhow::Result<Self> {
        let bytes = serde_json::to_vec(config)?;
        Ok(Self {
            command,
            config_digest: format!("sha256:{}", hex::encode(Sha256::digest(&bytes))),
            seed,
            version: format!("rivw {}", env!("CARGO_PKG_VERSION")),
        })
    }

    /// Header lines for tabular outputs, without the comment marker.
    pub fn preamble(&self) -> Vec<String> {
        vec![
            format!("command: {}", self.command.as_str()),
            format!("config_digest: {}", self.config_digest),
            format!(
                "seed: {}",
                self.seed.map_or_else(|| "none".to_string(), |s| s.to_string())
            ),
            format!("version: {}", self.version),
        ]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InputDigest {
    pub path: PathBuf,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestRecord {
    pub manifest: RunManifest,
    /// Resolved configuration, sufficient to replay the run.
    pub config: serde_json::Value,
    pub inputs: Vec<InputDigest>,
    pub outputs: Vec<String>,
    pub started_unix_secs: u64,
    pub finished_unix_secs: u64,
}

fn unix_now() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0)
}

pub fn file_digest(path: &Path) -> anyhow::Result<String> {
    let mut file = BufReader::new(File::open(path).map_err(|e| Error::io(path, e))?);
    let mut hasher = Sha256::new();
    let mut buf = [0u8; 1 << 16];
    loop {
        let n = file
            .read(&mut buf)
            .with_context(|| format!("reading {}", path.display()))?;
        if n == 0 {
            break;
        }
        hasher.update(&buf[..n]);
    }
    Ok(hex::encode(hasher.finalize()))
}

/// An in-progress run writing into one output directory.
pub struct Run {
    pub manifest: RunManifest,
    config: serde_json::Value,
    inputs: Vec<InputDigest>,
    out_dir: PathBuf,
    outputs: Vec<String>,
    started: u64,
}

impl Run {
    pub fn start<C: Serialize>(
        command: CommandName,
        config: &C,
        seed: Option<u64>,
        inputs: &[&Path],
        out_dir: &Path,
    ) -> anyhow::Result<Self> {
        let inputs = inputs
            .iter()
            .map(|p| {
                Ok(InputDigest {
                    path: p.to_path_buf(),
                    sha256: file_digest(p)?,
                })
            })
            .collect::<anyhow::Result<_>>()?;
        fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
        Ok(Self {
            manifest: RunManifest::new(command, config, seed)?,
            config: serde_json::to_value(config)?,
            inputs,
            out_dir: out_dir.to_path_buf(),
            outputs: Vec::new(),
            started: unix_now(),
        })
    }

    pub fn preamble(&self) -> Vec<String> {
        self.manifest.preamble()
    }

    /// Path of a new output file, recorded in the sidecar.
    pub fn output(&mut self, name: &str) -> PathBuf {
        self.outputs.push(name.to_string());
        self.out_dir.join(name)
    }

    /// Writes `value` as pretty JSON with the manifest under `"manifest"`.
    pub fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> anyhow::Result<()> {
        let mut v = serde_json::to_value(value)?;
        if let serde_json::Value::Object(map) = &mut v {
            map.insert("manifest".into(), serde_json::to_value(&self.manifest)?);
        }
        let path = self.output(name);
        write_pretty(&path, &v)
    }

    pub fn finish(self) -> anyhow::Result<()> {
        let record = ManifestRecord {
            manifest: self.manifest,
            config: self.config,
            inputs: self.inputs,
            outputs: self.outputs,
            started_unix_secs: self.started,
            finished_unix_secs: unix_now(),
        };
        write_pretty(&self.out_dir.join(SIDECAR), &record)
    }
}

pub fn write_pretty<T: Serialize>(path: &Path, value: &T) -> anyhow::Result<()> {
    let io = |e| Error::io(path, e);
    let mut f = File::create(path).map_err(io)?;
    serde_json::to_writer_pretty(&mut f, value)?;
    f.write_all(b"\n").map_err(io)?;
    Ok(())
}

pub fn read_record(path: &Path) -> anyhow::Result<ManifestRecord> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_reader(BufReader::new(file))
        .map_err(|e| Error::Format {
            path: path.to_path_buf(),
            message: e.to_string(),
        })
        .map_err(Into::into)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[derive(Serialize)]
    struct Cfg {
        a: f64,
        b: u64,
    }

    #[test]
    fn digest_tracks_configuration() {
        let m1 = RunManifest::new(CommandName::Simulate, &Cfg { a: 0.1, b: 2 }, Some(2)).unwrap();
        let m2 = RunManifest::new(CommandName::Simulate, &Cfg { a: 0.1, b: 2 }, Some(2)).unwrap();
        let m3 = RunManifest::new(CommandName::Simulate, &Cfg { a: 0.1, b: 3 }, Some(2)).unwrap();
        assert_eq!(m1, m2);
        assert_ne!(m1.config_digest, m3.config_digest);
        assert!(m1.config_digest.starts_with("sha256:") && m1.config_digest.len() == 7 + 64);
        let lines = m1.preamble();
        assert_eq!(lines[0], "command: simulate");
        assert_eq!(lines[2], "seed: 2");
    }
}
