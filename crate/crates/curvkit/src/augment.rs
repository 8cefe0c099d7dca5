//! Consistent geometric/photometric augmentation across RGB, depth, normals
//! and curvature.
//!
//! The same image-plane transform (horizontal flip, in-plane rotation about
//! the image center, translation) is applied to every channel: bilinear for
//! RGB, nearest-neighbor for depth/normals/curvature and their masks so no
//! values blend across boundaries. Normal vectors are additionally
//! transformed (flip negates nx, rotation rotates (nx, ny)); principal
//! curvature values are viewpoint-invariant scalars and move without
//! changing. Depth values are not rescaled: in-plane transforms approximate
//! viewpoint changes.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::{CurvatureMap, DepthMap, NormalMap, RgbImage};

pub const MAX_ROTATION_DEG: f64 = 15.0;
pub const MAX_TRANSLATION_PX: f64 = 10.0;
pub const COLOR_SCALE_RANGE: (f64, f64) = (0.8, 1.25);

/// One augmentation draw. Construct via [`AugmentSpec::new`] or
/// [`random_spec`]; the ranges are validated.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AugmentSpec {
    pub flip_h: bool,
    pub rotation_deg: f64,
    pub translation_px: (f64, f64),
    pub color_scale: [f64; 3],
    pub seed: u64,
}

impl AugmentSpec {
    pub fn new(
        flip_h: bool,
        rotation_deg: f64,
        translation_px: (f64, f64),
        color_scale: [f64; 3],
        seed: u64,
    ) -> Result<Self> {
        if rotation_deg.abs() > MAX_ROTATION_DEG {
            return Err(Error::InvalidConfig(format!(
                "rotation {rotation_deg} outside +/-{MAX_ROTATION_DEG} degrees"
            )));
        }
        if translation_px.0.abs() > MAX_TRANSLATION_PX
            || translation_px.1.abs() > MAX_TRANSLATION_PX
        {
            return Err(Error::InvalidConfig(format!(
                "translation {translation_px:?} outside +/-{MAX_TRANSLATION_PX} px"
            )));
        }
        for s in color_scale {
            if !(COLOR_SCALE_RANGE.0..=COLOR_SCALE_RANGE.1).contains(&s) {
                return Err(Error::InvalidConfig(format!(
                    "color scale {s} outside [{}, {}]",
                    COLOR_SCALE_RANGE.0, COLOR_SCALE_RANGE.1
                )));
            }
        }
        Ok(Self { flip_h, rotation_deg, translation_px, color_scale, seed })
    }

    pub fn identity() -> Self {
        Self {
            flip_h: false,
            rotation_deg: 0.0,
            translation_px: (0.0, 0.0),
            color_scale: [1.0; 3],
            seed: 0,
        }
    }

    pub fn flip_only() -> Self {
        Self { flip_h: true, ..Self::identity() }
    }
}

/// Uniform draw over the declared parameter ranges; deterministic per seed.
pub fn random_spec(seed: u64) -> AugmentSpec {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    AugmentSpec {
        flip_h: rng.random_bool(0.5),
        rotation_deg: rng.random_range(-MAX_ROTATION_DEG..MAX_ROTATION_DEG),
        translation_px: (
            rng.random_range(-MAX_TRANSLATION_PX..MAX_TRANSLATION_PX),
            rng.random_range(-MAX_TRANSLATION_PX..MAX_TRANSLATION_PX),
        ),
        color_scale: [
            rng.random_range(COLOR_SCALE_RANGE.0..COLOR_SCALE_RANGE.1),
            rng.random_range(COLOR_SCALE_RANGE.0..COLOR_SCALE_RANGE.1),
            rng.random_range(COLOR_SCALE_RANGE.0..COLOR_SCALE_RANGE.1),
        ],
        seed,
    }
}

/// Inverse transform of an output pixel center to source coordinates: undo
/// translation, undo rotation about the image center, then undo the flip.
fn source_coords(spec: &AugmentSpec, w: usize, h: usize, xo: f64, yo: f64) -> (f64, f64) {
    let (cx, cy) = ((w as f64 - 1.0) / 2.0, (h as f64 - 1.0) / 2.0);
    let theta = -spec.rotation_deg.to_radians();
    let (cos_t, sin_t) = (theta.cos(), theta.sin());
    let dx = xo - cx - spec.translation_px.0;
    let dy = yo - cy - spec.translation_px.1;
    let rx = cos_t * dx - sin_t * dy + cx;
    let ry = sin_t * dx + cos_t * dy + cy;
    if spec.flip_h {
        (w as f64 - 1.0 - rx, ry)
    } else {
        (rx, ry)
    }
}

/// Applies the augmentation to a consistent sample. Out-of-frame pixels are
/// masked invalid (black in RGB).
pub fn apply(
    rgb: &RgbImage,
    depth: &DepthMap,
    normals: &NormalMap,
    curv: &CurvatureMap,
    spec: &AugmentSpec,
) -> Result<(RgbImage, DepthMap, NormalMap, CurvatureMap)> {
    let (w, h) = (rgb.width(), rgb.height());
    for (dw, dh, what) in [
        (depth.width(), depth.height(), "depth"),
        (normals.width(), normals.height(), "normals"),
        (curv.width(), curv.height(), "curvature"),
    ] {
        if dw != w || dh != h {
            return Err(Error::InvalidMap(format!(
                "augment: {what} is {dw}x{dh} but rgb is {w}x{h}"
            )));
        }
    }

    let theta = spec.rotation_deg.to_radians();
    let (cos_f, sin_f) = (theta.cos(), theta.sin());
    let flip_sign = if spec.flip_h { -1.0 } else { 1.0 };

    let n = w * h;
    let mut out_rgb = vec![[0.0; 3]; n];
    let mut out_depth = vec![0.0; n];
    let mut out_depth_mask = vec![false; n];
    let mut out_normals = vec![nalgebra::Vector3::zeros(); n];
    let mut out_normal_mask = vec![false; n];
    let mut out_k1 = vec![0.0; n];
    let mut out_k2 = vec![0.0; n];
    let mut out_curv_mask = vec![false; n];

    for yo in 0..h {
        for xo in 0..w {
            let i = yo * w + xo;
            let (sx, sy) = source_coords(spec, w, h, xo as f64, yo as f64);

            // Bilinear RGB (black outside the frame).
            if sx >= 0.0 && sy >= 0.0 && sx <= (w - 1) as f64 && sy <= (h - 1) as f64 {
                let x0 = sx.floor() as usize;
                let y0 = sy.floor() as usize;
                let x1 = (x0 + 1).min(w - 1);
                let y1 = (y0 + 1).min(h - 1);
                let (fx, fy) = (sx - x0 as f64, sy - y0 as f64);
                let mut px = [0.0; 3];
                for c in 0..3 {
                    let v00 = rgb.get(x0, y0)[c];
                    let v10 = rgb.get(x1, y0)[c];
                    let v01 = rgb.get(x0, y1)[c];
                    let v11 = rgb.get(x1, y1)[c];
                    let v = v00 * (1.0 - fx) * (1.0 - fy)
                        + v10 * fx * (1.0 - fy)
                        + v01 * (1.0 - fx) * fy
                        + v11 * fx * fy;
                    px[c] = (v * spec.color_scale[c]).clamp(0.0, 1.0);
                }
                out_rgb[i] = px;
            }

            // Nearest-neighbor source pixel for the geometric channels.
            let xi = sx.round() as isize;
            let yi = sy.round() as isize;
            if xi < 0 || yi < 0 || xi >= w as isize || yi >= h as isize {
                continue;
            }
            let (xs, ys) = (xi as usize, yi as usize);
            if let Some(d) = depth.get(xs, ys) {
                out_depth[i] = d;
                out_depth_mask[i] = true;
            }
            if let Some(nrm) = normals.get(xs, ys) {
                // Flip first, then rotate, matching the positional order.
                let nx = flip_sign * nrm.x;
                let ny = nrm.y;
                out_normals[i] = nalgebra::Vector3::new(
                    cos_f * nx - sin_f * ny,
                    sin_f * nx + cos_f * ny,
                    nrm.z,
                );
                out_normal_mask[i] = true;
            }
            if let Some((k1, k2)) = curv.get(xs, ys) {
                out_k1[i] = k1;
                out_k2[i] = k2;
                out_curv_mask[i] = true;
            }
        }
    }

    Ok((
        RgbImage::new(w, h, out_rgb)?,
        DepthMap::new(w, h, out_depth, out_depth_mask)?,
        NormalMap::new(w, h, out_normals, out_normal_mask)?,
        CurvatureMap::new(w, h, out_k1, out_k2, out_curv_mask)?,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::CameraIntrinsics;
    use crate::quadric::{dense_geometry, PatchSpec};
    use crate::synth::{oracle_interior_mask, render, Primitive, SceneSpec};

    fn sphere_sample(
        w: usize,
        h: usize,
    ) -> (CameraIntrinsics, RgbImage, DepthMap, NormalMap, CurvatureMap) {
        // Principal point on the pixel-grid center so flip/rotation about the
        // raster center coincide with 3D transforms about the optical axis.
        let f = 0.9 * w as f64;
        let intr = CameraIntrinsics::new(
            f,
            f,
            (w as f64 - 1.0) / 2.0,
            (h as f64 - 1.0) / 2.0,
            w,
            h,
        )
        .unwrap();
        let scene = SceneSpec {
            primitives: vec![Primitive::Sphere {
                center: [0.08, -0.04, 2.0],
                radius: 0.5,
                albedo: [0.6, 0.4, 0.3],
            }],
            background_depth: 3.0,
            background_albedo: [0.55; 3],
            noise_sigma: 0.0,
            seed: 0,
        };
        let (rgb, depth, normals, curv) = render(&scene, &intr).unwrap();
        (intr, rgb, depth, normals, curv)
    }

    #[test]
    fn identity_spec_is_a_no_op() {
        let (_, rgb, depth, normals, curv) = sphere_sample(48, 48);
        let (r2, d2, n2, c2) =
            apply(&rgb, &depth, &normals, &curv, &AugmentSpec::identity()).unwrap();
        assert_eq!(rgb, r2);
        assert_eq!(depth, d2);
        assert_eq!(normals, n2);
        assert_eq!(curv, c2);
    }

    #[test]
    fn double_flip_restores_the_sample_exactly() {
        let (_, rgb, depth, normals, curv) = sphere_sample(48, 48);
        let spec = AugmentSpec::flip_only();
        let (r1, d1, n1, c1) = apply(&rgb, &depth, &normals, &curv, &spec).unwrap();
        let (r2, d2, n2, c2) = apply(&r1, &d1, &n1, &c1, &spec).unwrap();
        assert_eq!(rgb, r2);
        assert_eq!(depth, d2);
        assert_eq!(normals, n2);
        assert_eq!(curv, c2);
    }

    #[test]
    fn curvature_values_bit_identical_under_flip() {
        let (_, rgb, depth, normals, curv) = sphere_sample(48, 48);
        let (_, _, _, c1) = apply(&rgb, &depth, &normals, &curv, &AugmentSpec::flip_only())
            .unwrap();
        for y in 0..48 {
            for x in 0..48 {
                if let Some(v) = c1.get(x, y) {
                    assert_eq!(Some(v), curv.get(47 - x, y));
                }
            }
        }
    }

    #[test]
    fn validity_never_manufactured() {
        let (_, rgb, mut_depth, normals, curv) = sphere_sample(48, 48);
        // Punch holes in the depth map.
        let mut data = mut_depth.data().to_vec();
        for i in (0..data.len()).step_by(17) {
            data[i] = 0.0;
        }
        let depth = DepthMap::from_raw(48, 48, data).unwrap();
        let spec = AugmentSpec::new(false, 8.0, (3.0, -2.0), [1.0; 3], 1).unwrap();
        let (_, d1, _, _) = apply(&rgb, &depth, &normals, &curv, &spec).unwrap();
        // Every valid output pixel maps back to a valid source pixel.
        for yo in 0..48 {
            for xo in 0..48 {
                if d1.get(xo, yo).is_some() {
                    let (sx, sy) = source_coords(&spec, 48, 48, xo as f64, yo as f64);
                    let (xs, ys) = (sx.round() as usize, sy.round() as usize);
                    assert!(depth.get(xs, ys).is_some());
                }
            }
        }
    }

    #[test]
    fn rotation_cuts_corners_out_of_frame() {
        let (_, rgb, depth, normals, curv) = sphere_sample(48, 48);
        let spec = AugmentSpec::new(false, 15.0, (0.0, 0.0), [1.0; 3], 0).unwrap();
        let (_, d1, _, _) = apply(&rgb, &depth, &normals, &curv, &spec).unwrap();
        assert!(d1.get(0, 0).is_none());
        assert!(d1.valid_count() < depth.valid_count());
    }

    /// Geometry consistency: estimating geometry on the augmented depth map
    /// agrees with augmenting the estimated geometry, for flips and in-plane
    /// rotations (image translation is a 3D shear and is excluded here).
    #[test]
    fn flip_and_rotation_commute_with_geometry_estimation() {
        let (intr, rgb, depth, normals_unused, curv_unused) = sphere_sample(96, 96);
        let patch = PatchSpec::new(9.0, 12).unwrap();
        let (fit_n, fit_c) = dense_geometry(&depth, &intr, &patch).unwrap();

        for spec in [
            AugmentSpec::flip_only(),
            AugmentSpec::new(true, 10.0, (0.0, 0.0), [1.0; 3], 0).unwrap(),
            AugmentSpec::new(false, -12.5, (0.0, 0.0), [1.0; 3], 0).unwrap(),
        ] {
            let _ = (&normals_unused, &curv_unused);
            // Route A: augment depth, then fit.
            let (_, depth_aug, _, _) =
                apply(&rgb, &depth, &fit_n, &fit_c, &spec).unwrap();
            let (n_a, c_a) = dense_geometry(&depth_aug, &intr, &patch).unwrap();
            // Route B: fit, then augment (with normal vector correction).
            let (_, _, n_b, c_b) = apply(&rgb, &depth, &fit_n, &fit_c, &spec).unwrap();

            let interior = oracle_interior_mask(&depth_aug, &patch, 0.05);
            let mut angle_sum = 0.0_f64;
            let mut dk_sum = 0.0_f64;
            let mut kref_sum = 0.0_f64;
            let mut checked = 0;
            for y in 0..96 {
                for x in 0..96 {
                    let i = y * 96 + x;
                    if !interior[i] {
                        continue;
                    }
                    let (Some(na), Some(nb)) = (n_a.get(x, y), n_b.get(x, y)) else {
                        continue;
                    };
                    let (Some(ca), Some(cb)) = (c_a.get(x, y), c_b.get(x, y)) else {
                        continue;
                    };
                    checked += 1;
                    angle_sum += na.dot(&nb).clamp(-1.0, 1.0).acos().to_degrees();
                    dk_sum += (ca.0 - cb.0).abs() + (ca.1 - cb.1).abs();
                    kref_sum += cb.0.abs() + cb.1.abs();
                }
            }
            assert!(checked > 500, "too few interior pixels ({checked})");
            let mean_angle = angle_sum / checked as f64;
            let mean_dk = dk_sum / (2.0 * checked as f64);
            let k_tol = (0.02 * kref_sum / (2.0 * checked as f64)).max(0.05);
            assert!(mean_angle < 0.5, "normals diverge: {mean_angle} deg ({spec:?})");
            assert!(mean_dk <= k_tol, "curvature diverges: {mean_dk} > {k_tol} ({spec:?})");
        }
    }

    #[test]
    fn random_spec_is_deterministic_and_in_range() {
        assert_eq!(random_spec(42), random_spec(42));
        for seed in 0..10_000 {
            let s = random_spec(seed);
            assert!(s.rotation_deg.abs() <= MAX_ROTATION_DEG);
            assert!(s.translation_px.0.abs() <= MAX_TRANSLATION_PX);
            assert!(s.translation_px.1.abs() <= MAX_TRANSLATION_PX);
            for c in s.color_scale {
                assert!((COLOR_SCALE_RANGE.0..=COLOR_SCALE_RANGE.1).contains(&c));
            }
        }
    }

    #[test]
    fn distinct_seeds_give_distinct_specs() {
        let specs: Vec<AugmentSpec> = (0..100).map(random_spec).collect();
        let mut distinct = 0;
        let mut total = 0;
        for i in 0..specs.len() {
            for j in (i + 1)..specs.len() {
                total += 1;
                if specs[i] != specs[j] {
                    distinct += 1;
                }
            }
        }
        assert!(distinct as f64 >= 0.99 * total as f64);
    }

    #[test]
    fn spec_validation_rejects_out_of_range() {
        assert!(AugmentSpec::new(false, 20.0, (0.0, 0.0), [1.0; 3], 0).is_err());
        assert!(AugmentSpec::new(false, 0.0, (11.0, 0.0), [1.0; 3], 0).is_err());
        assert!(AugmentSpec::new(false, 0.0, (0.0, 0.0), [0.5, 1.0, 1.0], 0).is_err());
    }
}
