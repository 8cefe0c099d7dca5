//! File formats: PFM float maps, PNG images, intrinsics config files and
//! JSON-lines dataset manifests. All writes are atomic
//! (write-temp-then-rename) and byte-deterministic for fixed inputs.

mod dataset;
mod intrinsics;
mod manifest;
mod pfm;
mod png_io;

pub use dataset::{load_dataset, save_dataset};
pub use intrinsics::{read_intrinsics, write_intrinsics};
pub use manifest::{
    read_manifest, write_manifest, Manifest, ManifestEntry, ManifestHeader, MANIFEST_VERSION,
};
pub use pfm::{
    curvature_from_pfm, curvature_to_pfm, depth_from_pfm, depth_to_pfm, normals_from_pfm,
    normals_to_pfm, read_pfm, write_pfm, PfmData,
};
pub use png_io::{read_rgb_png, write_mask_png, write_rgb_png};

use std::path::Path;

use crate::error::{Error, Result};

/// Writes bytes to `path` atomically: a temp file in the same directory is
/// renamed over the target.
pub fn atomic_write(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().unwrap_or_else(|| Path::new("."));
    let tmp = dir.join(format!(
        ".{}.tmp",
        path.file_name().map(|n| n.to_string_lossy()).unwrap_or_default()
    ));
    std::fs::write(&tmp, bytes).map_err(|e| Error::io(tmp.display().to_string(), e))?;
    std::fs::rename(&tmp, path).map_err(|e| Error::io(path.display().to_string(), e))?;
    Ok(())
}
