//! Reproducibility manifest: what went in, which settings, what came out.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::{AnalysisConfig, CliError};

pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileEntry {
    pub path: String,
    pub sha256: String,
    pub bytes: u64,
}

/// Deliberately free of timestamps and absolute paths, so identical inputs
/// give an identical manifest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub versions: BTreeMap<String, String>,
    pub config_hash: String,
    pub config: AnalysisConfig,
    /// Cached API payloads and catalog the records were built from.
    pub inputs: Inputs,
    pub conventions: BTreeMap<String, String>,
    pub outputs: Vec<FileEntry>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Inputs {
    pub catalog_sha256: Option<String>,
    /// Discipline id to the fingerprints of the payloads harvested for it.
    pub pages: BTreeMap<String, Vec<String>>,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub fn versions() -> BTreeMap<String, String> {
    BTreeMap::from([
        ("collab-cli".to_string(), env!("CARGO_PKG_VERSION").to_string()),
        ("collab-core".to_string(), collab_core::VERSION.to_string()),
        ("collab-ingest".to_string(), collab_ingest::VERSION.to_string()),
    ])
}

pub fn conventions() -> BTreeMap<String, String> {
    let entries = [
        (
            "counting",
            "whole counting; a work counts once per distinct country or institution",
        ),
        ("distance", "Jaccard: 1 - n_xy / (n_x + n_y - n_xy)"),
        (
            "clustering",
            "ward.D2 on Jaccard distances; ties within 1e-12 broken by smallest (min, max) leaf labels",
        ),
        (
            "cluster_cut",
            "merges with height >= h_star are cut; N* = |{h_k >= h_star}| + 1",
        ),
        ("icd", "mean of -ln(h0 - h_k); auto h0 = h_max (1 + 1e-6) + 1e-9"),
        (
            "icd_windows",
            "one h0 per discipline shared by all windows, resolved from the largest window height",
        ),
        (
            "chord_solo",
            "works whose only entity is X; co-entities outside the top N go to the other arc",
        ),
        ("numbers", "six significant digits"),
        (
            "masking",
            "points below min_volume are kept with masked = true and an empty value",
        ),
    ];
    entries.iter().map(|(k, v)| (k.to_string(), v.to_string())).collect()
}

/// Every regular file under `root` except the manifest, sorted by relative path.
pub fn scan_outputs(root: &Path) -> Result<Vec<FileEntry>, CliError> {
    let mut out = Vec::new();
    walk(root, root, &mut out)?;
    out.sort_by(|a, b| a.path.cmp(&b.path));
    Ok(out)
}

fn walk(root: &Path, dir: &Path, out: &mut Vec<FileEntry>) -> Result<(), CliError> {
    let io = |e| CliError::io(format!("scanning {}", dir.display()), e);
    for entry in fs::read_dir(dir).map_err(io)? {
        let entry = entry.map_err(io)?;
        let path = entry.path();
        let name = entry.file_name().to_string_lossy().into_owned();
        if name.starts_with('.') {
            continue;
        }
        if entry.file_type().map_err(io)?.is_dir() {
            walk(root, &path, out)?;
        } else {
            let rel: Vec<String> = path
                .strip_prefix(root)
                .expect("walk stays under root")
                .components()
                .map(|c| c.as_os_str().to_string_lossy().into_owned())
                .collect();
            let rel = rel.join("/");
            if rel == MANIFEST_FILE {
                continue;
            }
            let bytes = fs::read(&path).map_err(io)?;
            out.push(FileEntry {
                path: rel,
                sha256: sha256_hex(&bytes),
                bytes: bytes.len() as u64,
            });
        }
    }
    Ok(())
}

impl Manifest {
    pub fn build(config: &AnalysisConfig, inputs: Inputs, out_dir: &Path) -> Result<Self, CliError> {
        Ok(Manifest {
            versions: versions(),
            config_hash: config.hash(),
            config: config.analysis_settings(),
            inputs,
            conventions: conventions(),
            outputs: scan_outputs(out_dir)?,
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("manifest serializes") + "\n"
    }

    pub fn write(&self, out_dir: &Path) -> Result<(), CliError> {
        let path = out_dir.join(MANIFEST_FILE);
        collab_core::report::write_atomic(&path, self.to_json().as_bytes())
            .map_err(|e| CliError::io(format!("writing {}", path.display()), e))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scan_is_sorted_and_skips_manifest() {
        let dir = tempfile::tempdir().unwrap();
        fs::create_dir_all(dir.path().join("b")).unwrap();
        fs::write(dir.path().join("b/x.csv"), "1").unwrap();
        fs::write(dir.path().join("a.csv"), "22").unwrap();
        fs::write(dir.path().join(MANIFEST_FILE), "{}").unwrap();
        fs::write(dir.path().join(".tmp"), "").unwrap();
        let files = scan_outputs(dir.path()).unwrap();
        let paths: Vec<&str> = files.iter().map(|f| f.path.as_str()).collect();
        assert_eq!(paths, ["a.csv", "b/x.csv"]);
        assert_eq!(files[0].bytes, 2);
        assert_eq!(files[0].sha256, sha256_hex(b"22"));
    }
}
