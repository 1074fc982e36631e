//! File writers: CSV tables with a comment metadata header, JSON documents
//! wrapped in a metadata envelope.

use std::io::Write;
use std::path::{Path, PathBuf};

use noisy_lpm::{Error, Result};
use serde::Serialize;

pub const SCHEMA_VERSION: u32 = 1;

/// Provenance stamped on every output file.
#[derive(Clone, Debug, Serialize)]
pub struct Meta {
    pub version: String,
    pub seed: u64,
    pub config_hash: String,
    pub schema_version: u32,
}

impl Meta {
    pub fn new(seed: u64, config_hash: &str) -> Self {
        Self {
            version: env!("CARGO_PKG_VERSION").to_string(),
            seed,
            config_hash: config_hash.to_string(),
            schema_version: SCHEMA_VERSION,
        }
    }
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> Error + '_ {
    move |source| Error::Io {
        path: path.to_owned(),
        source,
    }
}

/// Writes a CSV file with `# key: value` metadata lines before the header.
pub fn write_csv<I>(path: &Path, meta: &Meta, header: &str, rows: I) -> Result<()>
where
    I: IntoIterator,
    I::Item: AsRef<str>,
{
    let file = std::fs::File::create(path).map_err(io_err(path))?;
    let mut out = std::io::BufWriter::new(file);
    (|| -> std::io::Result<()> {
        writeln!(out, "# version: {}", meta.version)?;
        writeln!(out, "# seed: {}", meta.seed)?;
        writeln!(out, "# config_hash: {}", meta.config_hash)?;
        writeln!(out, "{header}")?;
        for row in rows {
            writeln!(out, "{}", row.as_ref())?;
        }
        out.flush()
    })()
    .map_err(io_err(path))
}

/// Writes `{"meta": ..., "data": ...}` as pretty JSON.
pub fn write_json<T: Serialize>(path: &Path, meta: &Meta, data: &T) -> Result<()> {
    #[derive(Serialize)]
    struct Envelope<'a, T> {
        meta: &'a Meta,
        data: &'a T,
    }
    let text = serde_json::to_string_pretty(&Envelope { meta, data })
        .map_err(|e| Error::Internal(format!("serialising {}: {e}", path.display())))?;
    std::fs::write(path, text + "\n").map_err(io_err(path))
}

/// Reads a CSV written by [`write_csv`], skipping comments and the header.
pub fn read_csv_rows(path: &Path) -> Result<Vec<Vec<String>>> {
    let text = std::fs::read_to_string(path).map_err(io_err(path))?;
    let mut rows = Vec::new();
    let mut header_seen = false;
    for line in text.lines() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        if !header_seen {
            header_seen = true;
            continue;
        }
        rows.push(line.split(',').map(|s| s.trim().to_string()).collect());
    }
    Ok(rows)
}

/// Parses one CSV field as f64 with file context in the error.
pub fn parse_f64(field: &str, path: &Path) -> Result<f64> {
    field
        .parse::<f64>()
        .map_err(|_| Error::Data(format!("{}: bad number {field:?}", path.display())))
}

pub fn ensure_dir(dir: &Path) -> Result<PathBuf> {
    std::fs::create_dir_all(dir).map_err(io_err(dir))?;
    Ok(dir.to_owned())
}
