use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use anyhow::Context;
use serde::Serialize;
use sha2::{Digest, Sha256};

use spanex_core::dataset::{load_json, Corpus};
use spanex_core::oracle::{connect, ModelMeta, Oracle, DEFAULT_MAX_IN_FLIGHT, ORACLE_URL_ENV};

pub const TOOLKIT_VERSION: &str = env!("CARGO_PKG_VERSION");

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

pub fn digest_file(path: &Path) -> anyhow::Result<String> {
    let bytes = std::fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    Ok(hex(&Sha256::digest(&bytes)))
}

/// Effective settings of one run, hashed into `config_hash`.
#[derive(Debug, Default)]
pub struct Settings {
    entries: BTreeMap<String, String>,
}

impl Settings {
    pub fn new(command: &str) -> Self {
        let mut s = Settings::default();
        s.set("command", command);
        s
    }

    pub fn set(&mut self, key: &str, value: impl ToString) -> &mut Self {
        self.entries.insert(key.to_string(), value.to_string());
        self
    }

    pub fn input(&mut self, key: &str, path: &Path) -> anyhow::Result<&mut Self> {
        let d = digest_file(path)?;
        Ok(self.set(key, format!("sha256:{d}")))
    }

    /// The model is identified by its metadata, not its address.
    pub fn model(&mut self, meta: &ModelMeta) -> &mut Self {
        let text = serde_json::to_string(meta).expect("meta serializes");
        self.set("model", format!("sha256:{}", hex(&Sha256::digest(text.as_bytes()))))
    }

    pub fn hash(&self) -> String {
        let mut h = Sha256::new();
        for (k, v) in &self.entries {
            h.update(k.as_bytes());
            h.update(b"=");
            h.update(v.as_bytes());
            h.update(b"\n");
        }
        hex(&h.finalize())
    }
}

#[derive(Serialize)]
struct Artifact<'a, T: Serialize> {
    toolkit_version: &'static str,
    config_hash: &'a str,
    #[serde(skip_serializing_if = "Option::is_none")]
    seed: Option<u64>,
    #[serde(flatten)]
    body: &'a T,
}

/// Pretty JSON with provenance fields first and a trailing newline.
pub fn artifact_json<T: Serialize>(body: &T, settings: &Settings, seed: Option<u64>) -> anyhow::Result<String> {
    let hash = settings.hash();
    let a = Artifact { toolkit_version: TOOLKIT_VERSION, config_hash: &hash, seed, body };
    let mut s = serde_json::to_string_pretty(&a).context("serializing output")?;
    s.push('\n');
    Ok(s)
}

pub fn write_file(path: &Path, contents: &str) -> anyhow::Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    std::fs::write(path, contents).with_context(|| format!("writing {}", path.display()))
}

/// `dir/report.json` with suffix `.plot.csv` gives `dir/report.plot.csv`.
pub fn sibling(path: &Path, suffix: &str) -> PathBuf {
    let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    path.with_file_name(format!("{stem}{suffix}"))
}

/// Writes `json` to `out`, or to stdout when there is no path.
pub fn emit(out: Option<&Path>, json: &str) -> anyhow::Result<()> {
    match out {
        Some(p) => write_file(p, json),
        None => {
            print!("{json}");
            Ok(())
        }
    }
}

pub fn load_corpus(path: &Path) -> anyhow::Result<Corpus> {
    Ok(load_json(path)?)
}

/// Resolves `--oracle`, then the environment variable.
pub fn open_oracle(flag: Option<&str>, max_in_flight: usize) -> anyhow::Result<(Arc<dyn Oracle>, ModelMeta)> {
    let endpoint = match flag {
        Some(e) => e.to_string(),
        None => match std::env::var(ORACLE_URL_ENV) {
            Ok(e) if !e.trim().is_empty() => e,
            _ => return crate::usage(format!("no oracle: pass --oracle or set {ORACLE_URL_ENV}")),
        },
    };
    let in_flight = if max_in_flight == 0 { DEFAULT_MAX_IN_FLIGHT } else { max_in_flight };
    let oracle = connect(&endpoint, in_flight).with_context(|| format!("connecting to {endpoint}"))?;
    let meta = oracle.meta().with_context(|| format!("reading model metadata from {endpoint}"))?;
    Ok((oracle, meta))
}
