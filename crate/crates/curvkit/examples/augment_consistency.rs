//! Shows that augmentation commutes with geometry estimation: fitting
//! normals and curvature on a flipped depth map reproduces the flipped (and
//! vector-corrected) geometry of the original scene.
//!
//! ```text
//! cargo run --release --example augment_consistency
//! ```

use curvkit::augment::{apply, random_spec, AugmentSpec};
use curvkit::geom::CameraIntrinsics;
use curvkit::quadric::{dense_geometry, PatchSpec};
use curvkit::synth::{oracle_interior_mask, render, Primitive, SceneSpec};

fn main() -> anyhow::Result<()> {
    let side = 96usize;
    let f = 0.9 * side as f64;
    let c = (side as f64 - 1.0) / 2.0;
    let intr = CameraIntrinsics::new(f, f, c, c, side, side)?;
    let scene = SceneSpec {
        primitives: vec![Primitive::Sphere {
            center: [0.06, -0.03, 2.0],
            radius: 0.5,
            albedo: [0.6, 0.45, 0.4],
        }],
        background_depth: 3.0,
        background_albedo: [0.55; 3],
        noise_sigma: 0.0,
        seed: 0,
    };
    let (rgb, depth, _, _) = render(&scene, &intr)?;
    let patch = PatchSpec::new(9.0, 12)?;
    let (fit_n, fit_c) = dense_geometry(&depth, &intr, &patch)?;

    for spec in [
        AugmentSpec::flip_only(),
        AugmentSpec::new(true, 12.0, (0.0, 0.0), [1.0; 3], 0)?,
    ] {
        // Route A: augment the depth map, then estimate geometry.
        let (_, depth_aug, _, _) = apply(&rgb, &depth, &fit_n, &fit_c, &spec)?;
        let (n_a, c_a) = dense_geometry(&depth_aug, &intr, &patch)?;
        // Route B: estimate geometry, then augment (normals vector-corrected).
        let (_, _, n_b, c_b) = apply(&rgb, &depth, &fit_n, &fit_c, &spec)?;

        let interior = oracle_interior_mask(&depth_aug, &patch, 0.05);
        let mut angle = 0.0;
        let mut dk = 0.0;
        let mut count = 0;
        for y in 0..side {
            for x in 0..side {
                if !interior[y * side + x] {
                    continue;
                }
                let (Some(na), Some(nb)) = (n_a.get(x, y), n_b.get(x, y)) else { continue };
                let (Some(ca), Some(cb)) = (c_a.get(x, y), c_b.get(x, y)) else { continue };
                angle += na.dot(&nb).clamp(-1.0, 1.0).acos().to_degrees();
                dk += 0.5 * ((ca.0 - cb.0).abs() + (ca.1 - cb.1).abs());
                count += 1;
            }
        }
        println!(
            "flip={} rotation={:>5.1} deg: mean normal gap {:.4} deg, mean |curvature gap| {:.4} m^-1 over {count} px",
            spec.flip_h,
            spec.rotation_deg,
            angle / count as f64,
            dk / count as f64
        );
    }

    let s = random_spec(42);
    println!(
        "random spec from seed 42: flip={} rot={:.2} deg shift=({:.2}, {:.2}) px color={:?}",
        s.flip_h, s.rotation_deg, s.translation_px.0, s.translation_px.1, s.color_scale
    );
    Ok(())
}
