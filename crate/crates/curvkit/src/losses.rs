//! The three training losses as pure functions returning the scalar value
//! and the analytic gradient with respect to every prediction channel.
//!
//! All three operate on channel-plane layouts (`channel * npix + y * w + x`)
//! so the network heads can feed them directly; predictions are raw head
//! outputs, not validated map types. Accumulation is fixed row-major in f64,
//! so values are bit-stable across runs.
//!
//! Depth loss works in log depth: the value is unchanged when the same
//! constant is added to both prediction and ground truth, which is the
//! scale-invariance the formulation is after.

use crate::error::{Error, Result};

/// Scalar loss plus dense gradient, one plane per prediction channel.
/// Gradients at masked pixels are exactly zero.
#[derive(Debug, Clone, PartialEq)]
pub struct LossResult {
    pub value: f64,
    pub grad: Vec<f64>,
}

/// How the curvature loss weights pixels by depth. The prose reading
/// down-weights distant (uncertain) pixels with (1+D)^-2; the printed form
/// of the equation reads as the +2 exponent instead, so it stays available.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurvatureLossOptions {
    pub depth_weight_exponent: f64,
}

impl Default for CurvatureLossOptions {
    fn default() -> Self {
        Self { depth_weight_exponent: -2.0 }
    }
}

fn check_shape(op: &'static str, len: usize, expect: usize) -> Result<()> {
    if len != expect {
        return Err(Error::InvalidMap(format!(
            "{op}: plane length {len} does not match {expect}"
        )));
    }
    Ok(())
}

/// Scale-invariant log-depth loss with a forward-difference gradient term:
///
/// `sum d^2 - (1/2n^2) (sum d)^2 + (1/n) sum((dx d)^2 + (dy d)^2)`
///
/// with `d = pred - gt` over the n valid pixels. Difference pairs with an
/// invalid member contribute nothing.
pub fn depth_loss(
    pred_log: &[f64],
    gt_log: &[f64],
    mask: &[bool],
    width: usize,
    height: usize,
) -> Result<LossResult> {
    let npix = width * height;
    check_shape("depth_loss pred", pred_log.len(), npix)?;
    check_shape("depth_loss gt", gt_log.len(), npix)?;
    check_shape("depth_loss mask", mask.len(), npix)?;

    let n = mask.iter().filter(|&&m| m).count();
    if n < 2 {
        return Err(Error::TooFewValidPixels { op: "depth_loss", needed: 2, found: n });
    }
    let n_f = n as f64;

    let mut d = vec![0.0; npix];
    let mut sum_d = 0.0;
    let mut sum_d2 = 0.0;
    for i in 0..npix {
        if mask[i] {
            d[i] = pred_log[i] - gt_log[i];
            sum_d += d[i];
            sum_d2 += d[i] * d[i];
        }
    }

    let mut grad = vec![0.0; npix];
    let mut grad_term = 0.0;
    for y in 0..height {
        for x in 0..width {
            let i = y * width + x;
            if !mask[i] {
                continue;
            }
            if x + 1 < width && mask[i + 1] {
                let g = d[i + 1] - d[i];
                grad_term += g * g;
                grad[i + 1] += 2.0 * g / n_f;
                grad[i] -= 2.0 * g / n_f;
            }
            if y + 1 < height && mask[i + width] {
                let g = d[i + width] - d[i];
                grad_term += g * g;
                grad[i + width] += 2.0 * g / n_f;
                grad[i] -= 2.0 * g / n_f;
            }
        }
    }

    let value = sum_d2 - sum_d * sum_d / (2.0 * n_f * n_f) + grad_term / n_f;
    for i in 0..npix {
        if mask[i] {
            grad[i] += 2.0 * d[i] - sum_d / (n_f * n_f);
        }
    }
    Ok(LossResult { value, grad })
}

/// Normal loss, per valid pixel: `-N . N* + sum_i (n_i - n*_i)^2`.
///
/// The dot-product term normalizes the prediction first (angle semantics);
/// the Euclidean term uses the raw channels so it also regularizes
/// magnitude. Predicted normals below 1e-12 in length contribute a zero dot
/// term with zero gradient (subgradient choice) but keep their Euclidean
/// term.
///
/// Layout: three planes of `width * height` (x, y, z components).
pub fn normal_loss(
    pred: &[f64],
    gt_unit: &[f64],
    mask: &[bool],
    width: usize,
    height: usize,
) -> Result<LossResult> {
    let npix = width * height;
    check_shape("normal_loss pred", pred.len(), 3 * npix)?;
    check_shape("normal_loss gt", gt_unit.len(), 3 * npix)?;
    check_shape("normal_loss mask", mask.len(), npix)?;

    let mut value = 0.0;
    let mut grad = vec![0.0; 3 * npix];
    for i in 0..npix {
        if !mask[i] {
            continue;
        }
        let p = [pred[i], pred[npix + i], pred[2 * npix + i]];
        let g = [gt_unit[i], gt_unit[npix + i], gt_unit[2 * npix + i]];
        if p.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidMap(format!(
                "normal_loss: non-finite prediction at pixel {i}"
            )));
        }
        let gnorm = (g[0] * g[0] + g[1] * g[1] + g[2] * g[2]).sqrt();
        if (gnorm - 1.0).abs() > 1e-6 {
            return Err(Error::InvalidMap(format!(
                "normal_loss: ground-truth normal at pixel {i} has length {gnorm}"
            )));
        }

        let norm = (p[0] * p[0] + p[1] * p[1] + p[2] * p[2]).sqrt();
        if norm >= 1e-12 {
            let inv = 1.0 / norm;
            let unit = [p[0] * inv, p[1] * inv, p[2] * inv];
            let dot = unit[0] * g[0] + unit[1] * g[1] + unit[2] * g[2];
            value -= dot;
            // d(-u.g)/dp = -(g - (u.g) u) / |p|
            for c in 0..3 {
                grad[c * npix + i] -= (g[c] - dot * unit[c]) * inv;
            }
        }
        for c in 0..3 {
            let diff = p[c] - g[c];
            value += diff * diff;
            grad[c * npix + i] += 2.0 * diff;
        }
    }
    Ok(LossResult { value, grad })
}

/// Depth-weighted Euclidean curvature loss:
///
/// `sum_i w_i ((k1_i - k1*_i)^2 + (k2_i - k2*_i)^2)`, `w_i = (1 + D_i)^e`
///
/// with `e = -2` by default (down-weighting distant pixels) and `D` the
/// linear depth in meters. Layout: two planes (k1, k2) per map. The loss is
/// agnostic to the 0.1 channel scaling; the trainer feeds scaled channels.
pub fn curvature_loss(
    pred_k: &[f64],
    gt_k: &[f64],
    depth_m: &[f64],
    mask: &[bool],
    width: usize,
    height: usize,
    opts: CurvatureLossOptions,
) -> Result<LossResult> {
    let npix = width * height;
    check_shape("curvature_loss pred", pred_k.len(), 2 * npix)?;
    check_shape("curvature_loss gt", gt_k.len(), 2 * npix)?;
    check_shape("curvature_loss depth", depth_m.len(), npix)?;
    check_shape("curvature_loss mask", mask.len(), npix)?;

    let mut value = 0.0;
    let mut grad = vec![0.0; 2 * npix];
    for i in 0..npix {
        if !mask[i] {
            continue;
        }
        let d = depth_m[i];
        if !(d.is_finite() && d > 0.0) {
            return Err(Error::InvalidMap(format!(
                "curvature_loss: masked-in pixel {i} has invalid depth {d}"
            )));
        }
        let w = (1.0 + d).powf(opts.depth_weight_exponent);
        for c in 0..2 {
            let diff = pred_k[c * npix + i] - gt_k[c * npix + i];
            value += w * diff * diff;
            grad[c * npix + i] = 2.0 * w * diff;
        }
    }
    Ok(LossResult { value, grad })
}
