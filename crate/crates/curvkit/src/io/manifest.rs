//! JSON-lines dataset manifest: one header record followed by one record per
//! sample. The curvature scale factor is recorded per entry so unscaling is
//! never ambiguous.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::augment::AugmentSpec;
use crate::error::{Error, Result};
use crate::io::atomic_write;
use crate::synth::SceneSpec;

pub const MANIFEST_VERSION: &str = "curvkit.dataset/1";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestHeader {
    pub version: String,
    pub seed: u64,
    pub noise_sigma: f64,
    pub curvature_scale: f64,
    pub input_width: usize,
    pub input_height: usize,
    pub target_width: usize,
    pub target_height: usize,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub id: usize,
    pub rgb: String,
    pub depth: String,
    pub normals: String,
    pub curvature: String,
    pub curvature_scale: f64,
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub augment: Option<AugmentSpec>,
    /// Generating scene, kept as provenance.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scene: Option<SceneSpec>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Manifest {
    pub header: ManifestHeader,
    pub entries: Vec<ManifestEntry>,
}

impl Manifest {
    pub fn paths_of(&self, entry: &ManifestEntry, base: &Path) -> [std::path::PathBuf; 4] {
        [
            base.join(&entry.rgb),
            base.join(&entry.depth),
            base.join(&entry.normals),
            base.join(&entry.curvature),
        ]
    }
}

pub fn write_manifest(manifest: &Manifest, path: &Path) -> Result<()> {
    let mut out = String::new();
    out.push_str(&serde_json::to_string(&manifest.header).expect("header serializes"));
    out.push('\n');
    for entry in &manifest.entries {
        out.push_str(&serde_json::to_string(entry).expect("entry serializes"));
        out.push('\n');
    }
    atomic_write(path, out.as_bytes())
}

/// Reads and validates a manifest: version tag, entry count, and the
/// existence of every referenced file (relative to the manifest directory).
pub fn read_manifest(path: &Path) -> Result<Manifest> {
    let text =
        std::fs::read_to_string(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    let malformed = |reason: String| Error::MalformedFile {
        format: "manifest",
        path: path.display().to_string(),
        reason,
    };
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let header: ManifestHeader = serde_json::from_str(
        lines.next().ok_or_else(|| malformed("empty manifest".into()))?,
    )
    .map_err(|e| malformed(format!("bad header: {e}")))?;
    if header.version != MANIFEST_VERSION {
        return Err(malformed(format!(
            "version {:?} is not {MANIFEST_VERSION:?}",
            header.version
        )));
    }
    let mut entries = Vec::with_capacity(header.count);
    for line in lines {
        let entry: ManifestEntry =
            serde_json::from_str(line).map_err(|e| malformed(format!("bad entry: {e}")))?;
        entries.push(entry);
    }
    if entries.len() != header.count {
        return Err(malformed(format!(
            "header promises {} entries, found {}",
            header.count,
            entries.len()
        )));
    }
    let base = path.parent().unwrap_or_else(|| Path::new("."));
    let manifest = Manifest { header, entries };
    for entry in &manifest.entries {
        for p in manifest.paths_of(entry, base) {
            if !p.exists() {
                return Err(malformed(format!("referenced file missing: {}", p.display())));
            }
        }
    }
    Ok(manifest)
}
