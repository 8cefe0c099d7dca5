//! Dense surface-normal and principal-curvature estimation by fitting a
//! parabolic quadric over a sparse circular pixel patch.
//!
//! At every valid pixel a local orthonormal frame is built from the
//! covariance plane of the patch samples (two-pass: plane first, quadric
//! second, which keeps the height-function parameterization well conditioned
//! on steep surfaces). The full six-coefficient height function
//! `w = a u^2 + b u v + c v^2 + d u + e v + f` is then solved by linear
//! least squares in that frame, and normals and principal curvatures are
//! read off the fitted patch in closed form.
//!
//! Curvature sign convention: positive means convex toward the camera, so a
//! sphere seen from outside carries +1/R on both channels. Both values are
//! clamped to +/-100 m^-1, bounding the detectable radius of curvature at
//! 1 cm.

use nalgebra::{Matrix2, Matrix3, Matrix6, SymmetricEigen, Vector3, Vector6};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geom::{
    backproject, CameraIntrinsics, CurvatureMap, DepthMap, NormalMap, PointCloudGrid,
    CURVATURE_CLAMP,
};

/// Relative spectral tolerance below which the least-squares normal system
/// counts as rank deficient and the pixel is dropped.
const RANK_TOLERANCE: f64 = 1e-12;

/// Sparse circular sampling pattern for the local fit.
///
/// The default places four concentric rings at 1/4, 1/2, 3/4 and the full
/// patch radius carrying 8, 12, 16 and 20 samples, plus the center pixel:
/// 57 offsets fixed at construction time so every fit is deterministic.
#[derive(Debug, Clone, PartialEq)]
pub struct PatchSpec {
    radius_px: f64,
    sample_offsets: Vec<(i32, i32)>,
    min_samples: usize,
}

impl PatchSpec {
    pub const DEFAULT_RADIUS_PX: f64 = 18.0;
    pub const DEFAULT_MIN_SAMPLES: usize = 12;

    pub fn new(radius_px: f64, min_samples: usize) -> Result<Self> {
        if !(radius_px >= 1.0 && radius_px.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "patch radius {radius_px} must be a finite value >= 1"
            )));
        }
        // A full quadric has 6 coefficients.
        if min_samples < 6 {
            return Err(Error::InvalidConfig(format!(
                "min_samples {min_samples} below the 6 quadric coefficients"
            )));
        }
        let sample_offsets = ring_offsets(radius_px);
        Ok(Self { radius_px, sample_offsets, min_samples })
    }

    pub fn radius_px(&self) -> f64 {
        self.radius_px
    }

    pub fn min_samples(&self) -> usize {
        self.min_samples
    }

    pub fn sample_offsets(&self) -> &[(i32, i32)] {
        &self.sample_offsets
    }
}

impl Default for PatchSpec {
    fn default() -> Self {
        Self::new(Self::DEFAULT_RADIUS_PX, Self::DEFAULT_MIN_SAMPLES).expect("default patch spec")
    }
}

/// Concentric-ring integer offsets, all within `radius`. Ring points that
/// round outside the radius are pulled in along their ray in half-pixel
/// steps, and duplicates are dropped in insertion order.
fn ring_offsets(radius: f64) -> Vec<(i32, i32)> {
    let rings = [(0.25, 8usize), (0.5, 12), (0.75, 16), (1.0, 20)];
    let r2_limit = radius * radius;
    let mut offsets: Vec<(i32, i32)> = vec![(0, 0)];
    for &(frac, count) in &rings {
        for k in 0..count {
            let angle = 2.0 * std::f64::consts::PI * k as f64 / count as f64;
            let mut r = frac * radius;
            let mut candidate;
            loop {
                candidate = (
                    (r * angle.cos()).round() as i32,
                    (r * angle.sin()).round() as i32,
                );
                let norm2 = (candidate.0 * candidate.0 + candidate.1 * candidate.1) as f64;
                if norm2 <= r2_limit || r <= 0.5 {
                    break;
                }
                r -= 0.5;
            }
            if !offsets.contains(&candidate) {
                offsets.push(candidate);
            }
        }
    }
    offsets
}

/// Quadric patch fitted in a local tangent frame at one grid point.
///
/// `frame` columns are (t1, t2, n0) with n0 oriented toward the camera;
/// `coeffs` are (a, b, c, d, e, f) of the height function over (t1, t2).
#[derive(Debug, Clone, PartialEq)]
pub struct LocalQuadric {
    pub frame: Matrix3<f64>,
    pub origin: Vector3<f64>,
    pub coeffs: [f64; 6],
}

impl LocalQuadric {
    pub fn tangent_u(&self) -> Vector3<f64> {
        self.frame.column(0).into()
    }

    pub fn tangent_v(&self) -> Vector3<f64> {
        self.frame.column(1).into()
    }

    pub fn plane_normal(&self) -> Vector3<f64> {
        self.frame.column(2).into()
    }
}

/// Fits the local quadric at `center`. Returns `None` when the pixel is
/// invalid, too few patch samples are valid, or the normal system is rank
/// deficient.
pub fn fit_patch(
    points: &PointCloudGrid,
    center: (usize, usize),
    spec: &PatchSpec,
) -> Option<LocalQuadric> {
    let (cx, cy) = center;
    let origin = points.get(cx, cy)?;
    let (w, h) = (points.width() as i32, points.height() as i32);

    let mut samples: Vec<Vector3<f64>> = Vec::with_capacity(spec.sample_offsets.len());
    for &(du, dv) in &spec.sample_offsets {
        let (sx, sy) = (cx as i32 + du, cy as i32 + dv);
        if sx < 0 || sy < 0 || sx >= w || sy >= h {
            continue;
        }
        if let Some(p) = points.get(sx as usize, sy as usize) {
            samples.push(p);
        }
    }
    if samples.len() < spec.min_samples {
        return None;
    }

    let frame = covariance_frame(&samples, &origin)?;
    let (t1, t2, n0) = (
        Vector3::from(frame.column(0)),
        Vector3::from(frame.column(1)),
        Vector3::from(frame.column(2)),
    );

    // Accumulate the 6x6 normal system of w ~ a u^2 + b uv + c v^2 + d u + e v + f.
    let mut ata = Matrix6::<f64>::zeros();
    let mut atb = Vector6::<f64>::zeros();
    for p in &samples {
        let q = p - origin;
        let (u, v, z) = (q.dot(&t1), q.dot(&t2), q.dot(&n0));
        let row = [u * u, u * v, v * v, u, v, 1.0];
        for i in 0..6 {
            for j in i..6 {
                ata[(i, j)] += row[i] * row[j];
            }
            atb[i] += row[i] * z;
        }
    }
    for i in 0..6 {
        for j in 0..i {
            ata[(i, j)] = ata[(j, i)];
        }
    }

    let eig = SymmetricEigen::new(ata);
    let max_ev = eig.eigenvalues.iter().cloned().fold(0.0_f64, f64::max);
    let min_ev = eig.eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min);
    if !(max_ev > 0.0) || min_ev < RANK_TOLERANCE * max_ev {
        return None;
    }
    let projected = eig.eigenvectors.transpose() * atb;
    let scaled = Vector6::from_iterator(
        projected.iter().zip(eig.eigenvalues.iter()).map(|(p, ev)| p / ev),
    );
    let x = eig.eigenvectors * scaled;

    Some(LocalQuadric {
        frame,
        origin,
        coeffs: [x[0], x[1], x[2], x[3], x[4], x[5]],
    })
}

/// Orthonormal frame from the covariance plane of the samples: n0 is the
/// smallest-eigenvector normal oriented toward the camera, t1/t2 span the
/// plane deterministically.
fn covariance_frame(samples: &[Vector3<f64>], origin: &Vector3<f64>) -> Option<Matrix3<f64>> {
    let inv_n = 1.0 / samples.len() as f64;
    let centroid: Vector3<f64> = samples.iter().sum::<Vector3<f64>>() * inv_n;
    let mut cov = Matrix3::<f64>::zeros();
    for p in samples {
        let q = p - centroid;
        cov += q * q.transpose();
    }
    let eig = SymmetricEigen::new(cov);
    let mut min_idx = 0;
    for i in 1..3 {
        if eig.eigenvalues[i] < eig.eigenvalues[min_idx] {
            min_idx = i;
        }
    }
    let mut n0 = Vector3::from(eig.eigenvectors.column(min_idx));
    let norm = n0.norm();
    if !(norm > 1e-12) {
        return None;
    }
    n0 /= norm;
    // Face the camera at the origin: the viewing ray is the center point.
    if n0.dot(origin) > 0.0 {
        n0 = -n0;
    }

    // Deterministic tangent: cross with the axis least aligned with n0.
    let abs = n0.abs();
    let seed = if abs.x <= abs.y && abs.x <= abs.z {
        Vector3::x()
    } else if abs.y <= abs.z {
        Vector3::y()
    } else {
        Vector3::z()
    };
    let t1 = seed.cross(&n0).normalize();
    let t2 = n0.cross(&t1);
    Some(Matrix3::from_columns(&[t1, t2, n0]))
}

/// Surface normal of the fitted patch at its center: direction (-d, -e, 1)
/// in the local frame, normalized and oriented toward the camera.
pub fn normal_from_quadric(q: &LocalQuadric) -> Vector3<f64> {
    let local = Vector3::new(-q.coeffs[3], -q.coeffs[4], 1.0);
    let mut n = (q.frame * local).normalize();
    if n.dot(&q.origin) > 0.0 {
        n = -n;
    }
    n
}

/// Principal curvatures of the fitted patch at its center, sorted k1 >= k2
/// and clamped to +/-100 m^-1.
///
/// The shape operator is I^-1 * II with the fundamental forms of the height
/// function; II is taken with respect to the away-from-camera side of the
/// patch so that surfaces bulging toward the camera come out positive.
pub fn curvature_from_quadric(q: &LocalQuadric) -> (f64, f64) {
    let [a, b, c, d, e, _f] = q.coeffs;
    let g11 = 1.0 + d * d;
    let g22 = 1.0 + e * e;
    let g12 = d * e;
    let det_g = 1.0 + d * d + e * e;
    let inv_len = 1.0 / det_g.sqrt();
    // Away-from-camera normal flips the sign of the Hessian-based form.
    let h11 = -2.0 * a * inv_len;
    let h12 = -b * inv_len;
    let h22 = -2.0 * c * inv_len;

    let sum = (h11 * g22 - 2.0 * h12 * g12 + h22 * g11) / det_g;
    let prod = (h11 * h22 - h12 * h12) / det_g;
    let disc = (sum * sum - 4.0 * prod).max(0.0).sqrt();
    let k1 = 0.5 * (sum + disc);
    let k2 = 0.5 * (sum - disc);
    (
        k1.clamp(-CURVATURE_CLAMP, CURVATURE_CLAMP),
        k2.clamp(-CURVATURE_CLAMP, CURVATURE_CLAMP),
    )
}

/// Shape operator of the fitted patch as a 2x2 matrix in the (t1, t2) basis;
/// exposed for the frame-invariance tests.
pub fn shape_operator(q: &LocalQuadric) -> Matrix2<f64> {
    let [a, b, c, d, e, _f] = q.coeffs;
    let det_g = 1.0 + d * d + e * e;
    let inv_len = 1.0 / det_g.sqrt();
    let g = Matrix2::new(1.0 + d * d, d * e, d * e, 1.0 + e * e);
    let ii = Matrix2::new(-2.0 * a, -b, -b, -2.0 * c) * inv_len;
    g.try_inverse().expect("first fundamental form is positive definite") * ii
}

/// Dense normals and curvatures for every valid pixel of a depth map.
///
/// Per-pixel work is pure and row-parallel; the output does not depend on
/// the parallel schedule.
pub fn dense_geometry(
    depth: &DepthMap,
    intr: &CameraIntrinsics,
    spec: &PatchSpec,
) -> Result<(NormalMap, CurvatureMap)> {
    let points = backproject(depth, intr)?;
    dense_geometry_from_points(&points, spec)
}

/// As [`dense_geometry`] but starting from an already back-projected grid.
pub fn dense_geometry_from_points(
    points: &PointCloudGrid,
    spec: &PatchSpec,
) -> Result<(NormalMap, CurvatureMap)> {
    let (w, h) = (points.width(), points.height());

    struct PixelOut {
        normal: Vector3<f64>,
        k1: f64,
        k2: f64,
        valid: bool,
    }

    let rows: Vec<Vec<PixelOut>> = (0..h)
        .into_par_iter()
        .map(|y| {
            (0..w)
                .map(|x| match fit_patch(points, (x, y), spec) {
                    Some(q) => {
                        let mut normal = normal_from_quadric(&q);
                        // Safety flip for grazing fits so the camera-facing
                        // invariant of NormalMap always holds.
                        if normal.dot(&q.origin) > 0.0 {
                            normal = -normal;
                        }
                        let (k1, k2) = curvature_from_quadric(&q);
                        PixelOut { normal, k1, k2, valid: true }
                    }
                    None => PixelOut {
                        normal: Vector3::zeros(),
                        k1: 0.0,
                        k2: 0.0,
                        valid: false,
                    },
                })
                .collect()
        })
        .collect();

    let mut normals = vec![Vector3::zeros(); w * h];
    let mut k1 = vec![0.0; w * h];
    let mut k2 = vec![0.0; w * h];
    let mut mask = vec![false; w * h];
    for (y, row) in rows.into_iter().enumerate() {
        for (x, px) in row.into_iter().enumerate() {
            let i = y * w + x;
            normals[i] = px.normal;
            k1[i] = px.k1;
            k2[i] = px.k2;
            mask[i] = px.valid;
        }
    }
    let normal_map = NormalMap::new(w, h, normals, mask.clone())?;
    let curv_map = CurvatureMap::new(w, h, k1, k2, mask)?;
    Ok((normal_map, curv_map))
}
