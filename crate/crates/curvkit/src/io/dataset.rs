//! Persisting generated datasets: one PNG + three PFMs per sample plus a
//! JSON-lines manifest.

use std::path::Path;

use crate::error::{Error, Result};
use crate::io::manifest::{
    read_manifest, write_manifest, Manifest, ManifestEntry, ManifestHeader, MANIFEST_VERSION,
};
use crate::io::pfm::{
    curvature_from_pfm, curvature_to_pfm, depth_from_pfm, depth_to_pfm, normals_from_pfm,
    normals_to_pfm, read_pfm, write_pfm,
};
use crate::io::png_io::{read_rgb_png, write_mask_png, write_rgb_png};
use crate::synth::{Dataset, TrainSample};

/// Writes every sample and the manifest into `dir` (created if missing).
/// With `mask_png` set, validity masks are additionally exported as PNGs for
/// viewing.
pub fn save_dataset(dataset: &Dataset, dir: &Path, mask_png: bool) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir.display().to_string(), e))?;
    let mut entries = Vec::with_capacity(dataset.samples.len());
    for sample in &dataset.samples {
        let id = sample.index;
        let rgb = format!("sample{id:04}_rgb.png");
        let depth = format!("sample{id:04}_depth.pfm");
        let normals = format!("sample{id:04}_normals.pfm");
        let curvature = format!("sample{id:04}_curv.pfm");
        write_rgb_png(&sample.rgb, &dir.join(&rgb))?;
        write_pfm(&depth_to_pfm(&sample.depth), &dir.join(&depth))?;
        write_pfm(&normals_to_pfm(&sample.normals), &dir.join(&normals))?;
        write_pfm(&curvature_to_pfm(&sample.curvature), &dir.join(&curvature))?;
        if mask_png {
            write_mask_png(
                sample.depth.mask(),
                sample.depth.width(),
                sample.depth.height(),
                &dir.join(format!("sample{id:04}_mask.png")),
            )?;
        }
        entries.push(ManifestEntry {
            id,
            rgb,
            depth,
            normals,
            curvature,
            curvature_scale: dataset.curvature_scale,
            seed: sample.scene.as_ref().map(|s| s.seed).unwrap_or(dataset.seed),
            augment: sample.augment,
            scene: sample.scene.clone(),
        });
    }
    let manifest = Manifest {
        header: ManifestHeader {
            version: MANIFEST_VERSION.into(),
            seed: dataset.seed,
            noise_sigma: dataset.noise_sigma,
            curvature_scale: dataset.curvature_scale,
            input_width: dataset.input_width,
            input_height: dataset.input_height,
            target_width: dataset.target_width,
            target_height: dataset.target_height,
            count: entries.len(),
        },
        entries,
    };
    write_manifest(&manifest, &dir.join("manifest.jsonl"))
}

/// Loads a dataset directory written by [`save_dataset`].
pub fn load_dataset(dir: &Path) -> Result<Dataset> {
    let manifest_path = dir.join("manifest.jsonl");
    let manifest = read_manifest(&manifest_path)?;
    let h = &manifest.header;
    let mut samples = Vec::with_capacity(manifest.entries.len());
    for entry in &manifest.entries {
        let [rgb_p, depth_p, normals_p, curv_p] = manifest.paths_of(entry, dir);
        let rgb = read_rgb_png(&rgb_p)?;
        let depth = depth_from_pfm(&read_pfm(&depth_p)?, &depth_p)?;
        let normals = normals_from_pfm(&read_pfm(&normals_p)?, &normals_p)?;
        let curvature = curvature_from_pfm(&read_pfm(&curv_p)?, &curv_p)?;
        if rgb.width() != h.input_width || rgb.height() != h.input_height {
            return Err(Error::MalformedFile {
                format: "manifest",
                path: manifest_path.display().to_string(),
                reason: format!("sample {} rgb resolution mismatch", entry.id),
            });
        }
        if depth.width() != h.target_width || depth.height() != h.target_height {
            return Err(Error::MalformedFile {
                format: "manifest",
                path: manifest_path.display().to_string(),
                reason: format!("sample {} target resolution mismatch", entry.id),
            });
        }
        samples.push(TrainSample {
            index: entry.id,
            scene: entry.scene.clone(),
            augment: entry.augment,
            rgb,
            depth,
            normals,
            curvature,
        });
    }
    Ok(Dataset {
        samples,
        input_width: h.input_width,
        input_height: h.input_height,
        target_width: h.target_width,
        target_height: h.target_height,
        curvature_scale: h.curvature_scale,
        noise_sigma: h.noise_sigma,
        seed: h.seed,
    })
}
