//! Run manifests: everything needed to repeat a run, plus artifact digests.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::Instant;

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::commands::RunOptions;
use crate::config::ConfigDoc;
use crate::error::CliResult;
use crate::scenario::Scenario;

#[derive(Debug, Serialize)]
pub struct Seeds {
    pub master: u64,
    /// Per-content simulation seed, derived from the master seed and the
    /// content's position in the config.
    pub contents: BTreeMap<String, u64>,
    pub replication_rule: &'static str,
}

#[derive(Debug, Serialize)]
pub struct Manifest {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: String,
    pub preset: Option<String>,
    pub config_sha256: String,
    /// The resolved configuration, also written next to the manifest.
    pub config: String,
    pub seeds: Seeds,
    pub git_describe: String,
    pub jobs: Option<usize>,
    pub wall_time_s: f64,
    /// Relative path to hex SHA-256 of each artifact.
    pub artifacts: BTreeMap<String, String>,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

fn git_describe() -> String {
    Command::new("git")
        .args(["describe", "--always", "--dirty", "--tags"])
        .current_dir(env!("CARGO_MANIFEST_DIR"))
        .output()
        .ok()
        .filter(|o| o.status.success())
        .and_then(|o| String::from_utf8(o.stdout).ok())
        .map(|s| s.trim().to_owned())
        .unwrap_or_else(|| "unknown".to_owned())
}

impl Manifest {
    pub fn new(command: &str, doc: &ConfigDoc, scn: &Scenario, opts: &RunOptions, started: Instant) -> Self {
        let config = doc.to_toml_string();
        let preset = doc.resolve().ok().and_then(|c| c.preset);
        Self {
            tool: env!("CARGO_PKG_NAME"),
            version: env!("CARGO_PKG_VERSION"),
            command: command.to_owned(),
            preset,
            config_sha256: sha256_hex(config.as_bytes()),
            config,
            seeds: Seeds {
                master: scn.seed,
                contents: scn
                    .contents
                    .iter()
                    .map(|c| (c.name.clone(), c.sim.master_seed))
                    .collect(),
                replication_rule: "replication r of a content uses derive_seed(content_seed, [r])",
            },
            git_describe: git_describe(),
            jobs: opts.jobs,
            wall_time_s: started.elapsed().as_secs_f64(),
            artifacts: BTreeMap::new(),
        }
    }

    /// Writes `config.toml` and `manifest.json` into `dir`, hashing the
    /// listed artifacts.
    pub fn write(mut self, dir: &Path, artifacts: &[PathBuf]) -> CliResult<()> {
        std::fs::write(dir.join("config.toml"), &self.config)?;
        for path in artifacts {
            let rel = path.strip_prefix(dir).unwrap_or(path);
            self.artifacts
                .insert(rel.to_string_lossy().into_owned(), sha256_hex(&std::fs::read(path)?));
        }
        let json = serde_json::to_string_pretty(&self).expect("manifest serializes");
        std::fs::write(dir.join("manifest.json"), json + "\n")?;
        Ok(())
    }
}
