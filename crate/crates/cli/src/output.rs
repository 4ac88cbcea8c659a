//! Run directories, manifests, CSV/JSON writers and the binary probability dump.

use std::fs;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::error::{CliError, CliResult};

/// Environment variable naming the default output root.
pub const OUT_ENV: &str = "FOCKDU_OUT";
pub const DEFAULT_OUT: &str = "runs";

/// 17 significant digits; empty for missing values.
pub fn f17(x: f64) -> String {
    let x = x + 0.0;
    format!("{x:.16e}")
}

pub fn f17_opt(x: Option<f64>) -> String {
    x.map(f17).unwrap_or_default()
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes)
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

/// Hash of a canonical (key-sorted) JSON rendering.
pub fn value_hash(v: &Value) -> String {
    sha256_hex(
        serde_json::to_string(v)
            .expect("json values serialize")
            .as_bytes(),
    )
}

pub fn code_version() -> String {
    format!(
        "{}+{}",
        env!("CARGO_PKG_VERSION"),
        option_env!("FOCKDU_GIT_HASH").unwrap_or("unknown")
    )
}

pub fn output_root(flag: Option<&Path>) -> PathBuf {
    match flag {
        Some(p) => p.to_path_buf(),
        None => std::env::var_os(OUT_ENV).map_or_else(|| PathBuf::from(DEFAULT_OUT), PathBuf::from),
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct RunManifest {
    pub subcommand: String,
    pub parameters: Value,
    pub seed: u64,
    pub code_version: String,
    pub timestamp: String,
    pub outputs: Vec<String>,
    pub threads: usize,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
    /// Derived quantities worth keeping next to the data (KS distances, `t*`, ...).
    #[serde(default, skip_serializing_if = "Value::is_null")]
    pub summary: Value,
}

/// `<root>/<subcommand>-<seed>-<hash>/` and everything written into it.
#[derive(Debug)]
pub struct RunDir {
    path: PathBuf,
    subcommand: String,
    parameters: Value,
    seed: u64,
    outputs: Vec<String>,
}

impl RunDir {
    pub fn create(root: &Path, subcommand: &str, parameters: Value, seed: u64) -> CliResult<Self> {
        let hash =
            value_hash(&serde_json::json!({ "subcommand": subcommand, "parameters": parameters }));
        let path = root.join(format!("{subcommand}-{seed}-{}", &hash[..12]));
        fs::create_dir_all(&path)?;
        Ok(Self {
            path,
            subcommand: subcommand.to_string(),
            parameters,
            seed,
            outputs: Vec::new(),
        })
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    pub fn file(&self, name: &str) -> PathBuf {
        self.path.join(name)
    }

    pub fn write_bytes(&mut self, name: &str, bytes: &[u8]) -> CliResult<PathBuf> {
        let p = self.file(name);
        fs::write(&p, bytes)?;
        self.outputs.push(name.to_string());
        Ok(p)
    }

    pub fn write_csv(
        &mut self,
        name: &str,
        header: &[&str],
        rows: &[Vec<String>],
    ) -> CliResult<PathBuf> {
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(Vec::new());
        w.write_record(header).map_err(anyhow::Error::from)?;
        for r in rows {
            w.write_record(r).map_err(anyhow::Error::from)?;
        }
        let bytes = w.into_inner().map_err(|e| anyhow::anyhow!("csv: {e}"))?;
        self.write_bytes(name, &bytes)
    }

    pub fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> CliResult<PathBuf> {
        let mut bytes = serde_json::to_vec_pretty(value).map_err(anyhow::Error::from)?;
        bytes.push(b'\n');
        self.write_bytes(name, &bytes)
    }

    /// Writes `manifest.json` last so it lists every other output.
    pub fn finish(
        self,
        threads: usize,
        warnings: Vec<String>,
        summary: Value,
    ) -> CliResult<(PathBuf, RunManifest)> {
        let manifest = RunManifest {
            subcommand: self.subcommand,
            parameters: self.parameters,
            seed: self.seed,
            code_version: code_version(),
            timestamp: chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true),
            outputs: self.outputs,
            threads,
            warnings,
            summary,
        };
        let p = self.path.join("manifest.json");
        let mut bytes = serde_json::to_vec_pretty(&manifest).map_err(anyhow::Error::from)?;
        bytes.push(b'\n');
        fs::write(&p, bytes)?;
        Ok((self.path, manifest))
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct DumpHeader {
    #[serde(rename = "L")]
    pub sites: usize,
    pub t: u32,
    pub spec_hash: String,
    pub count: usize,
    pub dtype: String,
}

/// `u64` LE header length, JSON header, then `count` LE `f64` values.
pub fn encode_dump(header: &DumpHeader, probs: &[f64]) -> Vec<u8> {
    let json = serde_json::to_vec(header).expect("header serializes");
    let mut out = Vec::with_capacity(8 + json.len() + 8 * probs.len());
    out.extend_from_slice(&(json.len() as u64).to_le_bytes());
    out.extend_from_slice(&json);
    for p in probs {
        out.extend_from_slice(&p.to_le_bytes());
    }
    out
}

pub fn read_dump(path: &Path) -> CliResult<(DumpHeader, Vec<f64>)> {
    let mut bytes = Vec::new();
    fs::File::open(path)?.read_to_end(&mut bytes)?;
    let bad = || CliError::validation(format!("{}: malformed dump", path.display()));
    let len = u64::from_le_bytes(bytes.get(..8).ok_or_else(bad)?.try_into().unwrap()) as usize;
    let json = bytes.get(8..8 + len).ok_or_else(bad)?;
    let header: DumpHeader = serde_json::from_slice(json).map_err(|_| bad())?;
    let data = &bytes[8 + len..];
    if data.len() != 8 * header.count {
        return Err(bad());
    }
    let probs = data
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    Ok((header, probs))
}

/// Complex matrix as rows of `[re, im]` pairs.
pub fn complex_rows(m: &nalgebra::DMatrix<fockdu_core::Complex64>) -> Vec<Vec<[f64; 2]>> {
    (0..m.nrows())
        .map(|i| {
            (0..m.ncols())
                .map(|j| [m[(i, j)].re, m[(i, j)].im])
                .collect()
        })
        .collect()
}

pub fn complex_list(v: &[fockdu_core::Complex64]) -> Vec<[f64; 2]> {
    v.iter().map(|c| [c.re, c.im]).collect()
}

/// Prints to stdout, ignoring a closed pipe.
pub fn say(line: &str) {
    let _ = writeln!(std::io::stdout(), "{line}");
}
