//! Analytic scene generator producing RGB + depth + exact normals + exact
//! principal curvatures, used as the oracle for the geometry pipeline and as
//! training data for the toy network.
//!
//! Scenes are ray-cast through the pinhole camera; every primitive carries
//! closed-form normals and principal curvatures with the crate-wide sign
//! convention (positive = convex toward the camera). Shading is flat albedo
//! with a fixed directional light, plus an exponential depth fog toward a
//! fixed color; the fog is what makes absolute depth observable from RGB at
//! all (Lambertian shading under a directional light carries no distance
//! information), so the toy network has a depth signal to learn from.
//! Additive depth noise perturbs the depth channel only, never the
//! ground-truth normal or curvature channels.

use nalgebra::{Matrix3, Rotation3, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::{CameraIntrinsics, CurvatureMap, DepthMap, NormalMap, RgbImage};
use crate::quadric::PatchSpec;

/// Fixed directional light (direction toward the light source).
pub const LIGHT_DIR: [f64; 3] = [1.0, 1.0, -1.0];
/// Ambient fraction of the Lambertian shading.
pub const AMBIENT: f64 = 0.25;
/// Exponential fog density (m^-1); the depth cue in the RGB channel.
pub const FOG_BETA: f64 = 0.35;
/// Fog color the shading decays toward with distance; strongly chromatic so
/// the fog mix (and with it depth) stays identifiable under albedo changes.
pub const FOG_COLOR: [f64; 3] = [0.55, 0.7, 1.0];
/// Curvature channels in generated datasets are stored times this factor.
pub const CURVATURE_TRAIN_SCALE: f64 = 0.1;

/// Analytic scene primitive. Positions and sizes in meters, camera frame.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "snake_case")]
pub enum Primitive {
    /// Infinite plane through `point` with the given (not necessarily unit)
    /// normal.
    Plane {
        point: [f64; 3],
        normal: [f64; 3],
        albedo: [f64; 3],
    },
    Sphere {
        center: [f64; 3],
        radius: f64,
        albedo: [f64; 3],
    },
    /// Finite cylinder with end caps; `axis` need not be unit length.
    Cylinder {
        center: [f64; 3],
        axis: [f64; 3],
        radius: f64,
        half_length: f64,
        albedo: [f64; 3],
    },
    /// Saddle patch `z = (x^2 - y^2) / (2 a)` in a camera-facing local frame,
    /// clipped to |x|, |y| <= extent, optionally rotated in the image plane.
    Saddle {
        center: [f64; 3],
        param_a: f64,
        extent: f64,
        #[serde(default)]
        yaw_deg: f64,
        albedo: [f64; 3],
    },
    /// Axis-aligned box, optionally rotated by an axis-angle vector.
    #[serde(rename = "box")]
    Cuboid {
        center: [f64; 3],
        half_extents: [f64; 3],
        #[serde(default)]
        rotation_axis_angle: [f64; 3],
        albedo: [f64; 3],
    },
}

impl Primitive {
    fn validate(&self) -> Result<()> {
        let ok = match self {
            Primitive::Plane { normal, .. } => {
                Vector3::from(*normal).norm() > 1e-12
            }
            Primitive::Sphere { radius, .. } => *radius > 0.0,
            Primitive::Cylinder { radius, half_length, axis, .. } => {
                *radius > 0.0 && *half_length > 0.0 && Vector3::from(*axis).norm() > 1e-12
            }
            Primitive::Saddle { param_a, extent, .. } => *param_a > 0.0 && *extent > 0.0,
            Primitive::Cuboid { half_extents, .. } => half_extents.iter().all(|&e| e > 0.0),
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidScene(format!("bad size parameters in {self:?}")))
        }
    }
}

/// Scene description: primitives plus an optional constant-depth backdrop.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneSpec {
    pub primitives: Vec<Primitive>,
    /// Fronto-parallel backdrop depth for rays that miss everything;
    /// 0 leaves missed pixels invalid.
    pub background_depth: f64,
    #[serde(default = "default_background_albedo")]
    pub background_albedo: [f64; 3],
    /// Std-dev of additive Gaussian depth noise (meters).
    pub noise_sigma: f64,
    pub seed: u64,
}

fn default_background_albedo() -> [f64; 3] {
    [0.6, 0.6, 0.6]
}

impl SceneSpec {
    pub fn validate(&self) -> Result<()> {
        if self.primitives.is_empty() && self.background_depth <= 0.0 {
            return Err(Error::InvalidScene(
                "scene needs at least one primitive or a backdrop".into(),
            ));
        }
        if self.noise_sigma < 0.0 {
            return Err(Error::InvalidScene("noise_sigma must be >= 0".into()));
        }
        for p in &self.primitives {
            p.validate()?;
        }
        Ok(())
    }
}

/// One ray-primitive hit with analytic geometry. Curvatures are relative to
/// `normal`: positive means the surface is convex toward the side the normal
/// points to.
struct Hit {
    t: f64,
    normal: Vector3<f64>,
    k1: f64,
    k2: f64,
    albedo: [f64; 3],
}

fn intersect(prim: &Primitive, dir: &Vector3<f64>) -> Option<Hit> {
    const T_MIN: f64 = 1e-6;
    match prim {
        Primitive::Plane { point, normal, albedo } => {
            let n = Vector3::from(*normal).normalize();
            let denom = dir.dot(&n);
            if denom.abs() < 1e-12 {
                return None;
            }
            let t = Vector3::from(*point).dot(&n) / denom;
            (t > T_MIN).then_some(Hit { t, normal: n, k1: 0.0, k2: 0.0, albedo: *albedo })
        }
        Primitive::Sphere { center, radius, albedo } => {
            let c = Vector3::from(*center);
            let a = dir.dot(dir);
            let b = -2.0 * dir.dot(&c);
            let cc = c.dot(&c) - radius * radius;
            let disc = b * b - 4.0 * a * cc;
            if disc < 0.0 {
                return None;
            }
            let sq = disc.sqrt();
            let t = [(-b - sq) / (2.0 * a), (-b + sq) / (2.0 * a)]
                .into_iter()
                .find(|&t| t > T_MIN)?;
            let p = dir * t;
            let n_out = (p - c) / *radius;
            Some(Hit {
                t,
                normal: n_out,
                k1: 1.0 / radius,
                k2: 1.0 / radius,
                albedo: *albedo,
            })
        }
        Primitive::Cylinder { center, axis, radius, half_length, albedo } => {
            let c = Vector3::from(*center);
            let axis = Vector3::from(*axis).normalize();
            let q = -c;
            let d_perp = dir - axis * dir.dot(&axis);
            let q_perp = q - axis * q.dot(&axis);
            let a = d_perp.dot(&d_perp);
            let mut best: Option<Hit> = None;
            if a > 1e-15 {
                let b = 2.0 * d_perp.dot(&q_perp);
                let cc = q_perp.dot(&q_perp) - radius * radius;
                let disc = b * b - 4.0 * a * cc;
                if disc >= 0.0 {
                    let sq = disc.sqrt();
                    for t in [(-b - sq) / (2.0 * a), (-b + sq) / (2.0 * a)] {
                        if t <= T_MIN {
                            continue;
                        }
                        let p = dir * t;
                        let along = (p - c).dot(&axis);
                        if along.abs() > *half_length {
                            continue;
                        }
                        let radial = (p - c) - axis * along;
                        let hit = Hit {
                            t,
                            normal: radial / *radius,
                            k1: 1.0 / radius,
                            k2: 0.0,
                            albedo: *albedo,
                        };
                        if best.as_ref().is_none_or(|b| hit.t < b.t) {
                            best = Some(hit);
                        }
                        break;
                    }
                }
            }
            // End caps.
            let d_along = dir.dot(&axis);
            if d_along.abs() > 1e-12 {
                for side in [-1.0, 1.0] {
                    let p0 = c + axis * (side * half_length);
                    // t solves (t*dir - p0) . axis = 0
                    let t = p0.dot(&axis) / d_along;
                    if t <= T_MIN {
                        continue;
                    }
                    let p = dir * t;
                    let radial = (p - c) - axis * (p - c).dot(&axis);
                    if radial.norm() > *radius {
                        continue;
                    }
                    let hit = Hit {
                        t,
                        normal: axis * side,
                        k1: 0.0,
                        k2: 0.0,
                        albedo: *albedo,
                    };
                    if best.as_ref().is_none_or(|b| hit.t < b.t) {
                        best = Some(hit);
                    }
                }
            }
            best
        }
        Primitive::Saddle { center, param_a, extent, yaw_deg, albedo } => {
            let c = Vector3::from(*center);
            // Camera-facing local frame (x right, y flipped, z toward camera)
            // with an extra in-plane yaw.
            let facing = Matrix3::new(1.0, 0.0, 0.0, 0.0, -1.0, 0.0, 0.0, 0.0, -1.0);
            let yaw = Rotation3::from_axis_angle(&Vector3::z_axis(), -yaw_deg.to_radians());
            let rot = yaw.matrix() * facing;
            // rot maps local -> camera directions; transpose maps back.
            let o_l = rot.transpose() * (-c);
            let d_l = rot.transpose() * dir;
            let a2 = d_l.x * d_l.x - d_l.y * d_l.y;
            let b2 = 2.0 * (o_l.x * d_l.x - o_l.y * d_l.y) - 2.0 * param_a * d_l.z;
            let c2 = o_l.x * o_l.x - o_l.y * o_l.y - 2.0 * param_a * o_l.z;
            let mut roots: Vec<f64> = Vec::new();
            if a2.abs() < 1e-14 {
                if b2.abs() > 1e-14 {
                    roots.push(-c2 / b2);
                }
            } else {
                let disc = b2 * b2 - 4.0 * a2 * c2;
                if disc >= 0.0 {
                    let sq = disc.sqrt();
                    roots.push((-b2 - sq) / (2.0 * a2));
                    roots.push((-b2 + sq) / (2.0 * a2));
                }
            }
            roots.sort_by(|x, y| x.partial_cmp(y).unwrap());
            for t in roots {
                if t <= T_MIN {
                    continue;
                }
                let p_l = o_l + d_l * t;
                if p_l.x.abs() > *extent || p_l.y.abs() > *extent {
                    continue;
                }
                // Height function f = (x^2 - y^2) / (2a); observer on +z side.
                let fx = p_l.x / param_a;
                let fy = -p_l.y / param_a;
                let det_g = 1.0 + fx * fx + fy * fy;
                let inv_len = 1.0 / det_g.sqrt();
                let (h11, h12, h22) = (
                    -(1.0 / param_a) * inv_len,
                    0.0,
                    (1.0 / param_a) * inv_len,
                );
                let (g11, g12, g22) = (1.0 + fx * fx, fx * fy, 1.0 + fy * fy);
                let sum = (h11 * g22 - 2.0 * h12 * g12 + h22 * g11) / det_g;
                let prod = (h11 * h22 - h12 * h12) / det_g;
                let disc = (sum * sum - 4.0 * prod).max(0.0).sqrt();
                let n_l = Vector3::new(-fx, -fy, 1.0).normalize();
                return Some(Hit {
                    t,
                    normal: rot * n_l,
                    k1: 0.5 * (sum + disc),
                    k2: 0.5 * (sum - disc),
                    albedo: *albedo,
                });
            }
            None
        }
        Primitive::Cuboid { center, half_extents, rotation_axis_angle, albedo } => {
            let c = Vector3::from(*center);
            let rot = Rotation3::from_scaled_axis(Vector3::from(*rotation_axis_angle));
            let o_l = rot.inverse() * (-c);
            let d_l = rot.inverse() * dir;
            let mut t_near = f64::NEG_INFINITY;
            let mut t_far = f64::INFINITY;
            let mut near_axis = 0usize;
            for ax in 0..3 {
                let h = half_extents[ax];
                if d_l[ax].abs() < 1e-14 {
                    if o_l[ax].abs() > h {
                        return None;
                    }
                    continue;
                }
                let mut t0 = (-h - o_l[ax]) / d_l[ax];
                let mut t1 = (h - o_l[ax]) / d_l[ax];
                if t0 > t1 {
                    std::mem::swap(&mut t0, &mut t1);
                }
                if t0 > t_near {
                    t_near = t0;
                    near_axis = ax;
                }
                t_far = t_far.min(t1);
            }
            if t_near > t_far || t_near <= T_MIN {
                return None;
            }
            let p_l = o_l + d_l * t_near;
            let mut n_l = Vector3::zeros();
            n_l[near_axis] = p_l[near_axis].signum();
            Some(Hit {
                t: t_near,
                normal: rot * n_l,
                k1: 0.0,
                k2: 0.0,
                albedo: *albedo,
            })
        }
    }
}

/// Renders the scene: per-pixel nearest hit, analytic normals/curvatures,
/// Lambertian shading with depth fog, then (optionally) additive depth noise.
pub fn render(
    spec: &SceneSpec,
    intr: &CameraIntrinsics,
) -> Result<(RgbImage, DepthMap, NormalMap, CurvatureMap)> {
    spec.validate()?;
    intr.validate()?;
    let (w, h) = (intr.width, intr.height);
    let light = Vector3::from(LIGHT_DIR).normalize();

    struct Px {
        rgb: [f64; 3],
        depth: f64,
        normal: Vector3<f64>,
        k1: f64,
        k2: f64,
        valid: bool,
    }

    let rows: Vec<Vec<Px>> = (0..h)
        .into_par_iter()
        .map(|y| {
            (0..w)
                .map(|x| {
                    let dir = intr.ray(x as f64, y as f64);
                    let mut best: Option<Hit> = None;
                    for prim in &spec.primitives {
                        if let Some(hit) = intersect(prim, &dir) {
                            if best.as_ref().is_none_or(|b| hit.t < b.t) {
                                best = Some(hit);
                            }
                        }
                    }
                    let hit = match best {
                        Some(h) => h,
                        None if spec.background_depth > 0.0 => Hit {
                            t: spec.background_depth,
                            normal: Vector3::new(0.0, 0.0, -1.0),
                            k1: 0.0,
                            k2: 0.0,
                            albedo: spec.background_albedo,
                        },
                        None => {
                            return Px {
                                rgb: [0.0; 3],
                                depth: 0.0,
                                normal: Vector3::zeros(),
                                k1: 0.0,
                                k2: 0.0,
                                valid: false,
                            }
                        }
                    };
                    // Orient toward the camera; flipping the viewing side
                    // negates and swaps the principal curvatures.
                    let (normal, k1, k2) = if hit.normal.dot(&dir) > 0.0 {
                        (-hit.normal, -hit.k2, -hit.k1)
                    } else {
                        (hit.normal, hit.k1, hit.k2)
                    };
                    // Ray z-component is 1, so t equals depth along the axis.
                    let depth = hit.t;
                    let lambert = normal.dot(&light).max(0.0);
                    let shade = AMBIENT + (1.0 - AMBIENT) * lambert;
                    let fog = (-FOG_BETA * depth).exp();
                    let mut rgb = [0.0; 3];
                    for c in 0..3 {
                        rgb[c] = (hit.albedo[c] * shade * fog + FOG_COLOR[c] * (1.0 - fog))
                            .clamp(0.0, 1.0);
                    }
                    Px { rgb, depth, normal, k1, k2, valid: true }
                })
                .collect()
        })
        .collect();

    let n = w * h;
    let mut rgb = vec![[0.0; 3]; n];
    let mut depth = vec![0.0; n];
    let mut normals = vec![Vector3::zeros(); n];
    let mut k1 = vec![0.0; n];
    let mut k2 = vec![0.0; n];
    let mut mask = vec![false; n];
    for (y, row) in rows.into_iter().enumerate() {
        for (x, px) in row.into_iter().enumerate() {
            let i = y * w + x;
            rgb[i] = px.rgb;
            depth[i] = px.depth;
            normals[i] = px.normal;
            k1[i] = px.k1;
            k2[i] = px.k2;
            mask[i] = px.valid;
        }
    }

    // Depth noise: a single sequential pass so the stream is independent of
    // thread count; ground-truth normals/curvatures stay exact.
    if spec.noise_sigma > 0.0 {
        let mut rng = ChaCha12Rng::seed_from_u64(spec.seed);
        let gauss = Normal::new(0.0, spec.noise_sigma).expect("valid sigma");
        for i in 0..n {
            let eps: f64 = gauss.sample(&mut rng);
            if mask[i] {
                depth[i] += eps;
                if depth[i] <= 0.0 {
                    depth[i] = 0.0;
                    mask[i] = false;
                }
            }
        }
    }

    let rgb = RgbImage::new(w, h, rgb)?;
    let depth = DepthMap::new(w, h, depth, mask.clone())?;
    let normals = NormalMap::new(w, h, normals, mask.clone())?;
    let curv = CurvatureMap::from_unsorted(w, h, k1, k2, mask)?;
    Ok((rgb, depth, normals, curv))
}

/// One training sample: RGB at the input resolution, ground truth at the
/// (half) target resolution. Curvature channels are stored pre-scaled by
/// [`CURVATURE_TRAIN_SCALE`].
#[derive(Debug, Clone)]
pub struct TrainSample {
    pub index: usize,
    /// Generating scene, when known (datasets loaded from disk may omit it).
    pub scene: Option<SceneSpec>,
    /// Augmentation applied on top of the rendered scene, if any.
    pub augment: Option<crate::augment::AugmentSpec>,
    pub rgb: RgbImage,
    pub depth: DepthMap,
    pub normals: NormalMap,
    pub curvature: CurvatureMap,
}

/// A generated dataset plus the metadata needed to interpret it.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub samples: Vec<TrainSample>,
    pub input_width: usize,
    pub input_height: usize,
    pub target_width: usize,
    pub target_height: usize,
    pub curvature_scale: f64,
    pub noise_sigma: f64,
    pub seed: u64,
}

fn mix_seed(seed: u64, index: u64) -> u64 {
    // splitmix64 step keyed by the dataset seed.
    let mut z = seed ^ index.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Draws a random scene: a tilted backdrop plane plus 1-3 foreground
/// primitives placed inside the view frustum.
pub fn random_scene(rng: &mut ChaCha12Rng, intr: &CameraIntrinsics, noise_sigma: f64, seed: u64) -> SceneSpec {
    let mut primitives = Vec::new();
    // Grayish albedo with mild chroma keeps the chromatic fog mix (the
    // depth cue) identifiable per pixel.
    let albedo = |rng: &mut ChaCha12Rng| {
        let base: f64 = rng.random_range(0.3..0.85);
        let mut channel = |rng: &mut ChaCha12Rng| -> f64 {
            (base * rng.random_range(0.98..1.02)).clamp(0.05, 1.0)
        };
        [channel(rng), channel(rng), channel(rng)]
    };

    // Backdrop: tilted infinite plane that always covers the frame.
    let nx = rng.random_range(-0.5..0.5);
    let ny = rng.random_range(-0.5..0.5);
    let zb = rng.random_range(2.4..3.6);
    primitives.push(Primitive::Plane {
        point: [0.0, 0.0, zb],
        normal: [nx, ny, -1.0],
        albedo: albedo(rng),
    });

    // Position helper: pick a pixel in the central region and back-project.
    let place = |rng: &mut ChaCha12Rng, z: f64| -> [f64; 3] {
        let u = rng.random_range(0.25 * intr.width as f64..0.75 * intr.width as f64);
        let v = rng.random_range(0.25 * intr.height as f64..0.75 * intr.height as f64);
        let r = intr.ray(u, v) * z;
        [r.x, r.y, r.z]
    };

    let count = rng.random_range(1..=3usize);
    for _ in 0..count {
        let z = rng.random_range(1.4..2.4);
        match rng.random_range(0..4u32) {
            0 => {
                let radius = rng.random_range(0.15..0.4);
                let mut c = place(rng, z + radius);
                c[2] = z + radius;
                primitives.push(Primitive::Sphere { center: c, radius, albedo: albedo(rng) });
            }
            1 => {
                let radius = rng.random_range(0.12..0.3);
                let half_length = rng.random_range(0.3..0.7);
                let tilt = rng.random_range(-0.4..0.4);
                let swing = rng.random_range(0.0..std::f64::consts::TAU);
                let axis = [swing.cos(), swing.sin(), tilt];
                let mut c = place(rng, z + radius);
                c[2] = z + radius;
                primitives.push(Primitive::Cylinder {
                    center: c,
                    axis,
                    radius,
                    half_length,
                    albedo: albedo(rng),
                });
            }
            2 => {
                let he = [
                    rng.random_range(0.12..0.35),
                    rng.random_range(0.12..0.35),
                    rng.random_range(0.1..0.3),
                ];
                let mut c = place(rng, z + he[2]);
                c[2] = z + he[2];
                primitives.push(Primitive::Cuboid {
                    center: c,
                    half_extents: he,
                    rotation_axis_angle: [0.0, 0.0, rng.random_range(-0.5..0.5)],
                    albedo: albedo(rng),
                });
            }
            _ => {
                let param_a = rng.random_range(0.6..1.8);
                let extent = rng.random_range(0.25..0.45);
                let mut c = place(rng, z);
                c[2] = z;
                primitives.push(Primitive::Saddle {
                    center: c,
                    param_a,
                    extent,
                    yaw_deg: rng.random_range(0.0..360.0),
                    albedo: albedo(rng),
                });
            }
        }
    }

    SceneSpec {
        primitives,
        background_depth: 0.0,
        background_albedo: default_background_albedo(),
        noise_sigma,
        seed,
    }
}

/// Structured-light sensors lose depth at occlusion boundaries; mirror that
/// by invalidating pixels whose 8-neighborhood jumps more than `jump`
/// meters. Ground truth across such boundaries is meaningless anyway (the
/// downsampler would blend both sides).
pub fn discontinuity_holes(depth: &DepthMap, jump: f64) -> Vec<bool> {
    let (w, h) = (depth.width() as i32, depth.height() as i32);
    let mut keep = vec![false; depth.data().len()];
    for y in 0..h {
        for x in 0..w {
            let i = (y * w + x) as usize;
            let Some(center) = depth.get(x as usize, y as usize) else {
                continue;
            };
            let mut ok = true;
            'scan: for dy in -1..=1i32 {
                for dx in -1..=1i32 {
                    let (nx, ny) = (x + dx, y + dy);
                    if nx < 0 || ny < 0 || nx >= w || ny >= h {
                        continue;
                    }
                    match depth.get(nx as usize, ny as usize) {
                        Some(d) if (d - center).abs() <= jump => {}
                        _ => {
                            ok = false;
                            break 'scan;
                        }
                    }
                }
            }
            keep[i] = ok;
        }
    }
    keep
}

fn masked<TM: Clone>(mask: &[bool], keep: &[bool]) -> Vec<bool> {
    mask.iter().zip(keep).map(|(m, k)| *m && *k).collect()
}

/// Renders a scene and packages it: optional augmentation at full
/// resolution, occlusion-boundary holes punched into the ground truth, then
/// everything downsampled to the target resolution with the curvature
/// channels scaled by 0.1.
fn build_sample(
    index: usize,
    scene: SceneSpec,
    intr: &CameraIntrinsics,
    tw: usize,
    th: usize,
    aug: Option<crate::augment::AugmentSpec>,
) -> Result<TrainSample> {
    let (mut rgb, mut depth, mut normals, mut curvature) = render(&scene, intr)?;
    if let Some(spec) = &aug {
        (rgb, depth, normals, curvature) =
            crate::augment::apply(&rgb, &depth, &normals, &curvature, spec)?;
    }
    let keep = discontinuity_holes(&depth, 0.05);
    let (w, h) = (depth.width(), depth.height());
    let depth = DepthMap::new(w, h, depth.data().to_vec(), masked::<f64>(depth.mask(), &keep))?;
    let normals = NormalMap::new(
        w,
        h,
        normals.data().to_vec(),
        masked::<f64>(normals.mask(), &keep),
    )?;
    let curvature = CurvatureMap::new(
        w,
        h,
        curvature.k1().to_vec(),
        curvature.k2().to_vec(),
        masked::<f64>(curvature.mask(), &keep),
    )?;
    let depth_t = depth.resample_bicubic(tw, th)?;
    let normals_t = normals.resample_bicubic(tw, th)?;
    let curv_t = curvature
        .resample_bicubic(tw, th)?
        .scaled(CURVATURE_TRAIN_SCALE)?;
    Ok(TrainSample {
        index,
        scene: Some(scene),
        augment: aug,
        rgb,
        depth: depth_t,
        normals: normals_t,
        curvature: curv_t,
    })
}

/// Generates `n_scenes` random scenes and packages them as training samples:
/// ground truth is bicubic-downsampled to half the input resolution and the
/// curvature channels are scaled by 0.1 (recorded in the dataset metadata so
/// evaluation can unscale by 10).
pub fn make_dataset(
    n_scenes: usize,
    intr: &CameraIntrinsics,
    noise_sigma: f64,
    seed: u64,
) -> Result<Dataset> {
    make_dataset_augmented(n_scenes, intr, noise_sigma, seed, 0)
}

/// Which augmentation draws dataset expansion uses. Geometric-only keeps
/// the color channels untouched (the photometric scale disturbs shading-
/// and fog-based cues, which some experiments need intact).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AugmentPolicy {
    Full,
    GeometricOnly,
}

/// As [`make_dataset`] plus `copies` augmented variants of every scene; the
/// augmentation specs are recorded on the samples for the manifest.
pub fn make_dataset_augmented(
    n_scenes: usize,
    intr: &CameraIntrinsics,
    noise_sigma: f64,
    seed: u64,
    copies: usize,
) -> Result<Dataset> {
    make_dataset_policy(n_scenes, intr, noise_sigma, seed, copies, AugmentPolicy::Full)
}

pub fn make_dataset_policy(
    n_scenes: usize,
    intr: &CameraIntrinsics,
    noise_sigma: f64,
    seed: u64,
    copies: usize,
    policy: AugmentPolicy,
) -> Result<Dataset> {
    if n_scenes == 0 {
        return Err(Error::InvalidConfig("make_dataset needs n_scenes >= 1".into()));
    }
    let (tw, th) = (intr.width / 2, intr.height / 2);
    if tw < 4 || th < 4 {
        return Err(Error::InvalidConfig(format!(
            "input resolution {}x{} too small for half-resolution targets",
            intr.width, intr.height
        )));
    }

    let mut samples = Vec::new();
    for scene_i in 0..n_scenes {
        let scene_seed = mix_seed(seed, scene_i as u64);
        let mut rng = ChaCha12Rng::seed_from_u64(scene_seed);
        let scene = random_scene(&mut rng, intr, noise_sigma, scene_seed);
        samples.push(build_sample(samples.len(), scene.clone(), intr, tw, th, None)?);
        for copy in 0..copies {
            let aug_seed = mix_seed(scene_seed, 0x5EED_0000 + copy as u64);
            let mut spec = crate::augment::random_spec(aug_seed);
            if policy == AugmentPolicy::GeometricOnly {
                spec.color_scale = [1.0; 3];
            }
            samples.push(build_sample(samples.len(), scene.clone(), intr, tw, th, Some(spec))?);
        }
    }
    Ok(Dataset {
        samples,
        input_width: intr.width,
        input_height: intr.height,
        target_width: tw,
        target_height: th,
        curvature_scale: CURVATURE_TRAIN_SCALE,
        noise_sigma,
        seed,
    })
}

/// Pixels safe for oracle comparisons: valid, full in-image patch support,
/// and no patch sample jumping more than `jump` meters from the center depth
/// (quadric fitting is undefined across occlusion boundaries).
pub fn oracle_interior_mask(depth: &DepthMap, patch: &PatchSpec, jump: f64) -> Vec<bool> {
    let (w, h) = (depth.width() as i32, depth.height() as i32);
    let mut out = vec![false; depth.width() * depth.height()];
    for y in 0..h {
        'pixel: for x in 0..w {
            let i = (y * w + x) as usize;
            let center = match depth.get(x as usize, y as usize) {
                Some(d) => d,
                None => continue,
            };
            for &(du, dv) in patch.sample_offsets() {
                let (sx, sy) = (x + du, y + dv);
                if sx < 0 || sy < 0 || sx >= w || sy >= h {
                    continue 'pixel;
                }
                match depth.get(sx as usize, sy as usize) {
                    Some(d) if (d - center).abs() <= jump => {}
                    _ => continue 'pixel,
                }
            }
            out[i] = true;
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn intr_64() -> CameraIntrinsics {
        CameraIntrinsics::scaled_default(64, 64)
    }

    fn plain_scene(primitives: Vec<Primitive>) -> SceneSpec {
        SceneSpec {
            primitives,
            background_depth: 3.0,
            background_albedo: default_background_albedo(),
            noise_sigma: 0.0,
            seed: 0,
        }
    }

    #[test]
    fn fronto_plane_is_constant_flat() {
        let scene = plain_scene(vec![Primitive::Plane {
            point: [0.0, 0.0, 2.0],
            normal: [0.0, 0.0, -1.0],
            albedo: [0.5, 0.5, 0.5],
        }]);
        let (_, depth, normals, curv) = render(&scene, &intr_64()).unwrap();
        for y in 0..64 {
            for x in 0..64 {
                assert_relative_eq!(depth.get(x, y).unwrap(), 2.0, epsilon = 1e-12);
                let n = normals.get(x, y).unwrap();
                assert_relative_eq!(n.z, -1.0, epsilon = 1e-12);
                let (k1, k2) = curv.get(x, y).unwrap();
                assert_eq!((k1, k2), (0.0, 0.0));
            }
        }
    }

    #[test]
    fn sphere_curvature_is_inverse_radius() {
        let scene = plain_scene(vec![Primitive::Sphere {
            center: [0.0, 0.0, 2.0],
            radius: 0.25,
            albedo: [0.7, 0.3, 0.3],
        }]);
        let (_, depth, _, curv) = render(&scene, &intr_64()).unwrap();
        let mut sphere_px = 0;
        for y in 0..64 {
            for x in 0..64 {
                if depth.get(x, y).unwrap() < 2.0 {
                    let (k1, k2) = curv.get(x, y).unwrap();
                    assert_relative_eq!(k1, 4.0, epsilon = 1e-9);
                    assert_relative_eq!(k2, 4.0, epsilon = 1e-9);
                    sphere_px += 1;
                }
            }
        }
        assert!(sphere_px > 50, "sphere should cover pixels, got {sphere_px}");
    }

    #[test]
    fn saddle_apex_has_unit_curvatures() {
        let scene = plain_scene(vec![Primitive::Saddle {
            center: [0.0, 0.0, 2.0],
            param_a: 1.0,
            extent: 0.4,
            yaw_deg: 0.0,
            albedo: [0.4, 0.6, 0.4],
        }]);
        let intr = intr_64();
        let (_, depth, normals, curv) = render(&scene, &intr).unwrap();
        // The apex projects to the principal point.
        let (x, y) = (32, 32);
        assert_relative_eq!(depth.get(x, y).unwrap(), 2.0, epsilon = 1e-6);
        let (k1, k2) = curv.get(x, y).unwrap();
        assert_relative_eq!(k1, 1.0, epsilon = 1e-6);
        assert_relative_eq!(k2, -1.0, epsilon = 1e-6);
        let n = normals.get(x, y).unwrap();
        assert_relative_eq!(n.z, -1.0, epsilon = 1e-6);
    }

    #[test]
    fn cylinder_lateral_curvature() {
        let scene = plain_scene(vec![Primitive::Cylinder {
            center: [0.0, 0.0, 2.0],
            axis: [1.0, 0.0, 0.0],
            radius: 0.3,
            half_length: 0.8,
            albedo: [0.5, 0.5, 0.7],
        }]);
        let (_, depth, _, curv) = render(&scene, &intr_64()).unwrap();
        let (x, y) = (32, 32);
        assert_relative_eq!(depth.get(x, y).unwrap(), 1.7, epsilon = 1e-9);
        let (k1, k2) = curv.get(x, y).unwrap();
        assert_relative_eq!(k1, 1.0 / 0.3, epsilon = 1e-9);
        assert_relative_eq!(k2, 0.0, epsilon = 1e-12);
    }

    #[test]
    fn raycast_points_lie_on_analytic_surface() {
        let scene = plain_scene(vec![Primitive::Sphere {
            center: [0.1, -0.05, 2.0],
            radius: 0.5,
            albedo: [0.5; 3],
        }]);
        let intr = intr_64();
        let (_, depth, _, _) = render(&scene, &intr).unwrap();
        let cloud = crate::geom::backproject(&depth, &intr).unwrap();
        let c = Vector3::new(0.1, -0.05, 2.0);
        for y in 0..64 {
            for x in 0..64 {
                let p = cloud.get(x, y).unwrap();
                if depth.get(x, y).unwrap() < 2.9 {
                    let f = (p - c).norm() - 0.5;
                    assert!(f.abs() < 1e-9, "implicit residual {f}");
                } else {
                    assert!((p.z - 3.0).abs() < 1e-9);
                }
            }
        }
    }

    #[test]
    fn noise_perturbs_depth_only_and_is_deterministic() {
        let mut scene = plain_scene(vec![Primitive::Sphere {
            center: [0.0, 0.0, 2.0],
            radius: 0.4,
            albedo: [0.5; 3],
        }]);
        scene.noise_sigma = 0.005;
        scene.seed = 9;
        let intr = intr_64();
        let (rgb_a, depth_a, normals_a, curv_a) = render(&scene, &intr).unwrap();
        let (rgb_b, depth_b, normals_b, curv_b) = render(&scene, &intr).unwrap();
        assert_eq!(depth_a, depth_b);
        assert_eq!(rgb_a, rgb_b);
        assert_eq!(normals_a, normals_b);
        assert_eq!(curv_a, curv_b);

        scene.noise_sigma = 0.0;
        let (_, depth_clean, normals_clean, curv_clean) = render(&scene, &intr).unwrap();
        assert_ne!(depth_a, depth_clean);
        assert_eq!(normals_a, normals_clean);
        assert_eq!(curv_a, curv_clean);
    }

    #[test]
    fn dataset_is_deterministic_and_scaled() {
        let intr = CameraIntrinsics::scaled_default(32, 32);
        let a = make_dataset(3, &intr, 0.0, 7).unwrap();
        let b = make_dataset(3, &intr, 0.0, 7).unwrap();
        assert_eq!(a.samples.len(), 3);
        for (sa, sb) in a.samples.iter().zip(&b.samples) {
            assert_eq!(sa.rgb, sb.rgb);
            assert_eq!(sa.depth, sb.depth);
            assert_eq!(sa.normals, sb.normals);
            assert_eq!(sa.curvature, sb.curvature);
        }
        assert_eq!(a.curvature_scale, 0.1);
        assert_eq!(a.target_width, 16);
    }

    #[test]
    fn stored_sphere_curvature_is_scaled_by_a_tenth() {
        // A dedicated scene: R = 0.25 sphere filling the center; the stored
        // channel must read 0.4 = 4.0 * 0.1 on interior sphere pixels.
        let intr = CameraIntrinsics::scaled_default(64, 64);
        let scene = plain_scene(vec![Primitive::Sphere {
            center: [0.0, 0.0, 1.2],
            radius: 0.25,
            albedo: [0.5; 3],
        }]);
        let (_, _, _, curv) = render(&scene, &intr).unwrap();
        let down = curv.resample_bicubic(32, 32).unwrap().scaled(0.1).unwrap();
        let (k1, k2) = down.get(16, 16).unwrap();
        assert_relative_eq!(k1, 0.4, epsilon = 1e-9);
        assert_relative_eq!(k2, 0.4, epsilon = 1e-9);
    }

    #[test]
    fn empty_dataset_rejected() {
        let intr = CameraIntrinsics::scaled_default(32, 32);
        assert!(make_dataset(0, &intr, 0.0, 1).is_err());
    }

    #[test]
    fn scene_without_content_rejected() {
        let scene = SceneSpec {
            primitives: vec![],
            background_depth: 0.0,
            background_albedo: [0.5; 3],
            noise_sigma: 0.0,
            seed: 0,
        };
        assert!(render(&scene, &intr_64()).is_err());
    }
}
