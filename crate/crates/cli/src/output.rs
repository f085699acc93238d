//! Result documents, run records and atomic file output.

use std::io::Write;
use std::path::{Path, PathBuf};

use attrib_core::io::to_fixed_json;
use attrib_core::{AttributionResult64, Error, Result};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

/// What `attribute` writes: the result plus the points it was computed at.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultDocument {
    pub method: String,
    pub input: Vec<f64>,
    pub baseline: Vec<f64>,
    pub result: AttributionResult64,
}

/// Provenance written next to every output file as `<out>.run.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub command_line: Vec<String>,
    pub config: serde_json::Value,
    pub model_sha256: Option<String>,
    /// SHA-256 of the output file's bytes.
    pub result_sha256: String,
    /// Wall-clock milliseconds; only recorded with `--timing` so that
    /// records stay byte-identical across runs by default.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub timing_ms: Option<f64>,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Writes via a temporary file in the target directory, then renames.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let io_err = |e: std::io::Error| Error::InvalidParameter(format!("cannot write {}: {e}", path.display()));
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(io_err)?;
    tmp.write_all(bytes).map_err(io_err)?;
    tmp.persist(path).map_err(|e| io_err(e.error))?;
    Ok(())
}

pub fn run_record_path(out: &Path) -> PathBuf {
    let mut name = out.as_os_str().to_owned();
    name.push(".run.json");
    PathBuf::from(name)
}

/// Writes `bytes` to `out` (or stdout) and, for files, the run record.
pub fn emit(
    out: Option<&Path>,
    bytes: &[u8],
    config: serde_json::Value,
    model_sha256: Option<String>,
    timing_ms: Option<f64>,
) -> Result<()> {
    match out {
        None => {
            std::io::stdout()
                .write_all(bytes)
                .map_err(|e| Error::InvalidParameter(format!("cannot write to stdout: {e}")))?;
        }
        Some(path) => {
            write_atomic(path, bytes)?;
            let record = RunRecord {
                command_line: std::env::args().collect(),
                config,
                model_sha256,
                result_sha256: sha256_hex(bytes),
                timing_ms,
            };
            write_atomic(&run_record_path(path), to_fixed_json(&record).as_bytes())?;
        }
    }
    Ok(())
}

/// Twelve significant digits, in a form `f64::from_str` reads back.
pub fn csv_number(v: f64) -> String {
    format!("{v:.11e}")
}

pub fn result_csv(doc: &ResultDocument) -> String {
    let mut out = String::from("feature,input,baseline,attribution\n");
    for (i, ((x, b), a)) in doc
        .input
        .iter()
        .zip(&doc.baseline)
        .zip(doc.result.values.values())
        .enumerate()
    {
        out.push_str(&format!("{i},{},{},{}\n", csv_number(*x), csv_number(*b), csv_number(*a)));
    }
    out
}

/// Reads attributions back from a JSON result document or a CSV result.
pub fn read_attributions(path: &Path) -> Result<Vec<f64>> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::InvalidParameter(format!("cannot read {}: {e}", path.display())))?;
    if text.trim_start().starts_with('{') {
        let doc: ResultDocument = serde_json::from_str(&text)
            .map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
        return Ok(doc.result.values.into_values());
    }
    let mut lines = text.lines();
    let header = lines.next().unwrap_or_default();
    let col = header
        .split(',')
        .position(|h| h.trim() == "attribution")
        .ok_or_else(|| Error::Parse(format!("{} has no 'attribution' column", path.display())))?;
    lines
        .filter(|l| !l.trim().is_empty())
        .map(|l| {
            let field = l.split(',').nth(col).unwrap_or_default().trim();
            field
                .parse()
                .map_err(|_| Error::Parse(format!("'{field}' is not a number")))
        })
        .collect()
}
