//! Output files: plot-ready CSVs and the provenance manifest that makes
//! every run re-derivable byte for byte.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;

use aifsim::rng::RNG_ALGORITHM;
use aifsim::{Error, Network, Result};

use crate::config::ExperimentConfig;

/// FNV-1a 64-bit hash, used to fingerprint models in manifests.
pub fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut hash = 0xcbf2_9ce4_8422_2325u64;
    for &b in bytes {
        hash ^= b as u64;
        hash = hash.wrapping_mul(0x0000_0100_0000_01b3);
    }
    hash
}

pub fn model_hash(network: &Network) -> Result<String> {
    let canonical = serde_json::to_string(network)
        .map_err(|e| Error::Config(format!("cannot serialize model: {e}")))?;
    Ok(format!("fnv1a64:{:016x}", fnv1a64(canonical.as_bytes())))
}

/// Provenance record written next to every output file.
#[derive(Debug, Serialize)]
pub struct Manifest<'a> {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: String,
    pub rng: &'static str,
    pub model_hash: String,
    pub threads_note: &'static str,
    pub outputs: Vec<String>,
    pub config: &'a ExperimentConfig,
}

impl<'a> Manifest<'a> {
    pub fn new(command: impl Into<String>, config: &'a ExperimentConfig) -> Result<Self> {
        let network = config.network()?;
        Ok(Self {
            tool: "aifsim-cli",
            version: env!("CARGO_PKG_VERSION"),
            command: command.into(),
            rng: RNG_ALGORITHM,
            model_hash: model_hash(&network)?,
            threads_note: "results are bit-identical for any worker count",
            outputs: vec![],
            config,
        })
    }
}

pub fn ensure_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::Config(format!("cannot create {}: {e}", dir.display())))
}

pub fn write_manifest(dir: &Path, manifest: &Manifest) -> Result<PathBuf> {
    let path = dir.join("manifest.json");
    let text = serde_json::to_string_pretty(manifest)
        .map_err(|e| Error::Config(format!("cannot serialize manifest: {e}")))?;
    fs::write(&path, text + "\n")
        .map_err(|e| Error::Config(format!("cannot write {}: {e}", path.display())))?;
    Ok(path)
}

/// Write CSV rows with a header; floats use the shortest round-trip form so
/// reruns are byte-identical.
pub struct CsvWriter {
    file: std::io::BufWriter<fs::File>,
    pub path: PathBuf,
}

impl CsvWriter {
    pub fn create(dir: &Path, name: &str, header: &[String]) -> Result<Self> {
        let path = dir.join(name);
        let file = fs::File::create(&path)
            .map_err(|e| Error::Config(format!("cannot create {}: {e}", path.display())))?;
        let mut w = Self {
            file: std::io::BufWriter::new(file),
            path,
        };
        w.write_raw_row(header)?;
        Ok(w)
    }

    pub fn write_row(&mut self, values: &[CsvValue]) -> Result<()> {
        let cells: Vec<String> = values.iter().map(CsvValue::render).collect();
        self.write_raw_row(&cells)
    }

    fn write_raw_row(&mut self, cells: &[String]) -> Result<()> {
        let line = cells.join(",");
        writeln!(self.file, "{line}").map_err(|e| Error::Config(format!("write failed: {e}")))
    }

    pub fn finish(mut self) -> Result<PathBuf> {
        self.file
            .flush()
            .map_err(|e| Error::Config(format!("flush failed: {e}")))?;
        Ok(self.path)
    }
}

/// A CSV cell; `Empty` renders as nothing (for columns that do not apply).
#[derive(Debug, Clone)]
pub enum CsvValue {
    Float(f64),
    Int(u64),
    Text(String),
    Bool(bool),
    Empty,
}

impl CsvValue {
    fn render(&self) -> String {
        match self {
            CsvValue::Float(v) => format!("{v}"),
            CsvValue::Int(v) => format!("{v}"),
            CsvValue::Text(s) => s.clone(),
            CsvValue::Bool(b) => format!("{b}"),
            CsvValue::Empty => String::new(),
        }
    }
}
