//! Snapshot manifest: a JSON array describing every file a run produced.
//!
//! The manifest is the contract between a simulation and anything that
//! inspects its output later: each entry carries the timestep, the
//! filename relative to the output directory, the field names stored in
//! the file, and a SHA-256 checksum of the file bytes.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::path::Path;

pub const MANIFEST_NAME: &str = "manifest.json";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub timestep: usize,
    pub filename: String,
    pub field_names: Vec<String>,
    pub checksum: String,
}

/// Lowercase hex SHA-256 of a byte slice.
pub fn sha256_hex(bytes: &[u8]) -> String {
    let mut h = Sha256::new();
    h.update(bytes);
    let digest = h.finalize();
    let mut out = String::with_capacity(64);
    for b in digest {
        use std::fmt::Write as _;
        let _ = write!(out, "{b:02x}");
    }
    out
}

/// Checksum a file on disk.
pub fn sha256_file(path: &Path) -> Result<String> {
    Ok(sha256_hex(&std::fs::read(path)?))
}

/// Write `manifest.json` into `dir`. Entries are kept in the given order.
pub fn write_manifest(dir: &Path, entries: &[ManifestEntry]) -> Result<()> {
    let text = serde_json::to_string_pretty(entries)
        .map_err(|e| Error::Manifest(format!("serialize: {e}")))?;
    std::fs::write(dir.join(MANIFEST_NAME), text + "\n")?;
    Ok(())
}

/// Read `manifest.json` from `dir`. The file must hold a bare array.
pub fn read_manifest(dir: &Path) -> Result<Vec<ManifestEntry>> {
    let path = dir.join(MANIFEST_NAME);
    let text = std::fs::read_to_string(&path)
        .map_err(|e| Error::Manifest(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text)
        .map_err(|e| Error::Manifest(format!("{}: {e}", path.display())))
}

/// Re-hash every listed file and compare against the recorded checksums.
/// Returns the entries on success so callers can keep working with them.
pub fn verify_manifest(dir: &Path) -> Result<Vec<ManifestEntry>> {
    let entries = read_manifest(dir)?;
    for entry in &entries {
        let path = dir.join(&entry.filename);
        let actual = sha256_file(&path).map_err(|e| {
            Error::Manifest(format!("listed file {}: {e}", entry.filename))
        })?;
        if actual != entry.checksum {
            return Err(Error::ChecksumMismatch {
                path: entry.filename.clone(),
                expected: entry.checksum.clone(),
                actual,
            });
        }
    }
    Ok(entries)
}
