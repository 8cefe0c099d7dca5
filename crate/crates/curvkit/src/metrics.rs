//! Evaluation suites: depth error/accuracy, normal angular error, and
//! curvature RMS/median/threshold metrics.
//!
//! Threshold comparisons are strict (<) throughout. All metrics accumulate
//! in fixed row-major order and every implementation is checked against a
//! naive single-loop reference in the tests.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::{CameraIntrinsics, CurvatureMap, DepthMap, NormalMap};
use crate::quadric::{dense_geometry, PatchSpec};

/// Accuracy ratio base for the depth delta metrics.
pub const DELTA_BASE: f64 = 1.25;
/// Angular thresholds (degrees) for the normal metrics.
pub const ANGLE_THRESHOLDS_DEG: [f64; 3] = [11.25, 22.5, 30.0];
/// Curvature error thresholds sigma_1..3 (m^-1).
pub const CURVATURE_SIGMAS: [f64; 3] = [0.25, 0.5, 1.0];
/// Ground-truth mean-curvature magnitude below which a pixel counts as
/// planar (radius of curvature greater than one meter).
pub const PLANAR_MEAN_CURVATURE: f64 = 1.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DepthMetrics {
    pub rel_abs: f64,
    pub rms_lin: f64,
    pub rms_log: f64,
    pub delta1: f64,
    pub delta2: f64,
    pub delta3: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormalMetrics {
    pub mean_deg: f64,
    pub median_deg: f64,
    pub within_11_25: f64,
    pub within_22_5: f64,
    pub within_30: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurvatureMetrics {
    pub rms_k1: f64,
    pub rms_k2: f64,
    /// Median mean-curvature error over planar ground-truth pixels; absent
    /// when the planar set is empty.
    pub median_planar: Option<f64>,
    pub median_nonplanar: Option<f64>,
    pub within_s1: f64,
    pub within_s2: f64,
    pub within_s3: f64,
}

/// Which per-pixel error feeds the within-sigma fractions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum CurvatureErrorMode {
    /// |mean-curvature difference| (the default; the medians use it too).
    #[default]
    MeanCurvature,
    /// max(|k1 error|, |k2 error|) per pixel.
    PerChannelMax,
}

fn median_of(mut values: Vec<f64>) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    values.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = values.len();
    Some(if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    })
}

fn joint_mask(a: &[bool], b: &[bool], extra: Option<&[bool]>) -> Vec<bool> {
    let mut out: Vec<bool> = a.iter().zip(b).map(|(x, y)| *x && *y).collect();
    if let Some(e) = extra {
        for (o, &m) in out.iter_mut().zip(e) {
            *o &= m;
        }
    }
    out
}

/// Depth metrics over pixels valid in prediction, ground truth and the
/// optional extra mask. Both maps are linear depth in meters.
pub fn eval_depth(
    pred: &DepthMap,
    gt: &DepthMap,
    mask: Option<&[bool]>,
) -> Result<DepthMetrics> {
    if pred.width() != gt.width() || pred.height() != gt.height() {
        return Err(Error::DimensionMismatch {
            context: "eval_depth",
            left_w: pred.width(),
            left_h: pred.height(),
            right_w: gt.width(),
            right_h: gt.height(),
        });
    }
    let m = joint_mask(pred.mask(), gt.mask(), mask);
    let n = m.iter().filter(|&&v| v).count();
    if n == 0 {
        return Err(Error::TooFewValidPixels { op: "eval_depth", needed: 1, found: 0 });
    }
    let n_f = n as f64;

    let (mut rel, mut sq, mut sq_log) = (0.0, 0.0, 0.0);
    let mut within = [0usize; 3];
    for i in 0..m.len() {
        if !m[i] {
            continue;
        }
        let (p, g) = (pred.data()[i], gt.data()[i]);
        rel += (p - g).abs() / g;
        sq += (p - g) * (p - g);
        let dl = p.ln() - g.ln();
        sq_log += dl * dl;
        let ratio = (p / g).max(g / p);
        for (k, w) in within.iter_mut().enumerate() {
            if ratio < DELTA_BASE.powi(k as i32 + 1) {
                *w += 1;
            }
        }
    }
    Ok(DepthMetrics {
        rel_abs: rel / n_f,
        rms_lin: (sq / n_f).sqrt(),
        rms_log: (sq_log / n_f).sqrt(),
        delta1: within[0] as f64 / n_f,
        delta2: within[1] as f64 / n_f,
        delta3: within[2] as f64 / n_f,
    })
}

/// Normal angular-error metrics; predictions are normalized internally and
/// the angle is acos of the clamped dot product, in degrees.
pub fn eval_normals(
    pred: &NormalMap,
    gt: &NormalMap,
    mask: Option<&[bool]>,
) -> Result<NormalMetrics> {
    if pred.width() != gt.width() || pred.height() != gt.height() {
        return Err(Error::DimensionMismatch {
            context: "eval_normals",
            left_w: pred.width(),
            left_h: pred.height(),
            right_w: gt.width(),
            right_h: gt.height(),
        });
    }
    let m = joint_mask(pred.mask(), gt.mask(), mask);
    let mut angles = Vec::new();
    for i in 0..m.len() {
        if !m[i] {
            continue;
        }
        let p = pred.data()[i].normalize();
        let g = gt.data()[i];
        let dot = p.dot(&g).clamp(-1.0, 1.0);
        angles.push(dot.acos().to_degrees());
    }
    if angles.is_empty() {
        return Err(Error::TooFewValidPixels { op: "eval_normals", needed: 1, found: 0 });
    }
    let n_f = angles.len() as f64;
    let mean = angles.iter().sum::<f64>() / n_f;
    let frac = |t: f64| angles.iter().filter(|&&a| a < t).count() as f64 / n_f;
    Ok(NormalMetrics {
        mean_deg: mean,
        median_deg: median_of(angles.clone()).unwrap(),
        within_11_25: frac(ANGLE_THRESHOLDS_DEG[0]),
        within_22_5: frac(ANGLE_THRESHOLDS_DEG[1]),
        within_30: frac(ANGLE_THRESHOLDS_DEG[2]),
    })
}

/// Curvature metrics. Both maps must already be unscaled (m^-1). The planar
/// split classifies on ground-truth mean-curvature magnitude < 1 m^-1, and
/// the medians are of the mean-curvature error per region.
pub fn eval_curvature(
    pred: &CurvatureMap,
    gt: &CurvatureMap,
    gt_depth_mask: Option<&[bool]>,
    mode: CurvatureErrorMode,
) -> Result<CurvatureMetrics> {
    if pred.width() != gt.width() || pred.height() != gt.height() {
        return Err(Error::DimensionMismatch {
            context: "eval_curvature",
            left_w: pred.width(),
            left_h: pred.height(),
            right_w: gt.width(),
            right_h: gt.height(),
        });
    }
    let m = joint_mask(pred.mask(), gt.mask(), gt_depth_mask);
    let n = m.iter().filter(|&&v| v).count();
    if n == 0 {
        return Err(Error::TooFewValidPixels { op: "eval_curvature", needed: 1, found: 0 });
    }
    let n_f = n as f64;

    let (mut sq1, mut sq2) = (0.0, 0.0);
    let mut planar_err = Vec::new();
    let mut nonplanar_err = Vec::new();
    let mut within = [0usize; 3];
    for i in 0..m.len() {
        if !m[i] {
            continue;
        }
        let (p1, p2) = (pred.k1()[i], pred.k2()[i]);
        let (g1, g2) = (gt.k1()[i], gt.k2()[i]);
        sq1 += (p1 - g1) * (p1 - g1);
        sq2 += (p2 - g2) * (p2 - g2);
        let mean_err = (0.5 * (p1 + p2) - 0.5 * (g1 + g2)).abs();
        let gt_mean = 0.5 * (g1 + g2);
        if gt_mean.abs() < PLANAR_MEAN_CURVATURE {
            planar_err.push(mean_err);
        } else {
            nonplanar_err.push(mean_err);
        }
        let gate = match mode {
            CurvatureErrorMode::MeanCurvature => mean_err,
            CurvatureErrorMode::PerChannelMax => (p1 - g1).abs().max((p2 - g2).abs()),
        };
        for (k, w) in within.iter_mut().enumerate() {
            if gate < CURVATURE_SIGMAS[k] {
                *w += 1;
            }
        }
    }
    Ok(CurvatureMetrics {
        rms_k1: (sq1 / n_f).sqrt(),
        rms_k2: (sq2 / n_f).sqrt(),
        median_planar: median_of(planar_err),
        median_nonplanar: median_of(nonplanar_err),
        within_s1: within[0] as f64 / n_f,
        within_s2: within[1] as f64 / n_f,
        within_s3: within[2] as f64 / n_f,
    })
}

/// Curvature derived from a predicted depth map via quadric fitting; the
/// baseline rows of the curvature comparison.
pub fn curvature_from_predicted_depth(
    pred_depth: &DepthMap,
    intr: &CameraIntrinsics,
    spec: &PatchSpec,
) -> Result<CurvatureMap> {
    let (_, curv) = dense_geometry(pred_depth, intr, spec)?;
    Ok(curv)
}
