//! Generates a small synthetic dataset with augmented copies and writes it
//! to disk (PNG + PFM + JSON-lines manifest), then reads it back.
//!
//! ```text
//! cargo run --release --example synth_dataset -- /tmp/curvkit-data
//! ```

use curvkit::geom::CameraIntrinsics;
use curvkit::io::{load_dataset, save_dataset};
use curvkit::synth::make_dataset_augmented;

fn main() -> anyhow::Result<()> {
    let dir = std::env::args()
        .nth(1)
        .unwrap_or_else(|| "/tmp/curvkit-data".into());
    let dir = std::path::PathBuf::from(dir);

    let intr = CameraIntrinsics::scaled_default(64, 64);
    let dataset = make_dataset_augmented(6, &intr, 0.004, 7, 1)?;
    save_dataset(&dataset, &dir, true)?;
    println!(
        "wrote {} samples ({}x{} rgb, {}x{} targets, curvature scale {}) to {}",
        dataset.samples.len(),
        dataset.input_width,
        dataset.input_height,
        dataset.target_width,
        dataset.target_height,
        dataset.curvature_scale,
        dir.display()
    );

    let back = load_dataset(&dir)?;
    let sample = &back.samples[0];
    println!(
        "reloaded {} samples; sample 0 has {} valid target pixels of {}",
        back.samples.len(),
        sample.depth.valid_count(),
        sample.depth.data().len()
    );
    let (k1, k2) = sample
        .curvature
        .get(back.target_width / 2, back.target_height / 2)
        .unwrap_or((0.0, 0.0));
    println!("stored (scaled) curvature at center: ({k1:.3}, {k2:.3})");
    Ok(())
}
