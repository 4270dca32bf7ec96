use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::run::Table;

pub const SCHEMA: u32 = 1;

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

/// Schema-1 CSV bytes: a `# schema=1` comment, a header row, then one row
/// per sample with shortest round-trip float formatting.
pub fn csv_bytes(table: &Table) -> Result<Vec<u8>> {
    let mut out = format!("# schema={SCHEMA}\n").into_bytes();
    {
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(&mut out);
        w.write_record(&table.columns)?;
        for row in &table.rows {
            w.write_record(row.iter().map(|v| format!("{v:e}")))?;
        }
        w.flush()?;
    }
    Ok(out)
}

/// Writes through a temporary file in the same directory and renames it
/// into place.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir).with_context(|| format!("temporary file in {}", dir.display()))?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).with_context(|| format!("renaming into {}", path.display()))?;
    Ok(())
}

#[derive(Clone, Debug, Serialize)]
pub struct FileEntry {
    pub file: String,
    pub sha256: String,
    pub rows: usize,
    pub columns: Vec<String>,
    /// Sweep overrides, or preset parameters, that produced this file.
    pub parameters: serde_json::Value,
    /// Resolved point config in TOML (`run` only); `catgates run` on it
    /// regenerates the file.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub config: Option<String>,
    pub warnings: Vec<String>,
    pub wall_time_s: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct Manifest {
    pub schema: u32,
    pub command: String,
    pub versions: serde_json::Value,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub config_sha256: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub figure: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub scale: Option<String>,
    pub seed: u64,
    pub jobs: usize,
    pub files: Vec<FileEntry>,
    pub wall_time_s: f64,
}

pub fn versions() -> serde_json::Value {
    serde_json::json!({
        "catgates-cli": env!("CARGO_PKG_VERSION"),
        "catgates": catgates::VERSION,
    })
}

/// Writes the table as `<dir>/<name>` and returns its manifest entry stub.
pub fn write_table(dir: &Path, name: &str, table: &Table) -> Result<(PathBuf, String)> {
    let bytes = csv_bytes(table)?;
    let path = dir.join(name);
    write_atomic(&path, &bytes)?;
    Ok((path, sha256_hex(&bytes)))
}

pub fn write_manifest(dir: &Path, manifest: &Manifest) -> Result<PathBuf> {
    let path = dir.join("manifest.json");
    let mut bytes = serde_json::to_vec_pretty(manifest)?;
    bytes.push(b'\n');
    write_atomic(&path, &bytes)?;
    Ok(path)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_layout() {
        let t = Table::from_columns(vec![("time", vec![0.0, 0.5]), ("parity", vec![1.0, -0.25])]);
        let s = String::from_utf8(csv_bytes(&t).unwrap()).unwrap();
        assert_eq!(s, "# schema=1\ntime,parity\n0e0,1e0\n5e-1,-2.5e-1\n");
    }

    #[test]
    fn sha_of_empty() {
        assert_eq!(sha256_hex(b""), "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
    }

    #[test]
    fn atomic_write_replaces() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("x.csv");
        write_atomic(&p, b"a").unwrap();
        write_atomic(&p, b"b").unwrap();
        assert_eq!(std::fs::read(&p).unwrap(), b"b");
        assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 1);
    }
}
