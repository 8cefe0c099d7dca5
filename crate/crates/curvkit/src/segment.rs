//! Border-function segmentation: a weighted sum of color-gradient magnitude,
//! depth-gradient magnitude and curvature, thresholded into a binary border
//! map.
//!
//! Gradients are central differences with replicate boundaries. Pixels with
//! invalid depth or curvature fall back to the color term alone for the
//! missing contribution.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::{CurvatureMap, DepthMap, RgbImage};

/// Non-negative term weights and the border threshold.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BorderWeights {
    pub w_color: f64,
    pub w_depth: f64,
    pub w_curvature: f64,
    pub delta_thresh: f64,
}

impl BorderWeights {
    pub fn new(w_color: f64, w_depth: f64, w_curvature: f64, delta_thresh: f64) -> Result<Self> {
        if w_color < 0.0 || w_depth < 0.0 || w_curvature < 0.0 {
            return Err(Error::InvalidConfig("border weights must be >= 0".into()));
        }
        if w_color == 0.0 && w_depth == 0.0 && w_curvature == 0.0 {
            return Err(Error::InvalidConfig("at least one border weight must be > 0".into()));
        }
        Ok(Self { w_color, w_depth, w_curvature, delta_thresh })
    }
}

impl Default for BorderWeights {
    /// Defaults chosen so each term has comparable magnitude on the
    /// synthetic suite; all CLI-overridable.
    fn default() -> Self {
        Self { w_color: 1.0, w_depth: 5.0, w_curvature: 0.1, delta_thresh: 0.3 }
    }
}

/// Scalar reduction of the principal-curvature pair used as C(u, v).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum CurvatureReduction {
    /// 0.5 (|k1| + |k2|), the default.
    #[default]
    MeanAbs,
    /// max(|k1|, |k2|).
    MaxAbs,
    /// |0.5 (k1 + k2)|.
    AbsMean,
}

impl CurvatureReduction {
    fn apply(self, k1: f64, k2: f64) -> f64 {
        match self {
            CurvatureReduction::MeanAbs => 0.5 * (k1.abs() + k2.abs()),
            CurvatureReduction::MaxAbs => k1.abs().max(k2.abs()),
            CurvatureReduction::AbsMean => (0.5 * (k1 + k2)).abs(),
        }
    }
}

/// Binary per-pixel border map.
#[derive(Debug, Clone, PartialEq)]
pub struct BorderMap {
    width: usize,
    height: usize,
    data: Vec<bool>,
}

impl BorderMap {
    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn data(&self) -> &[bool] {
        &self.data
    }

    pub fn get(&self, x: usize, y: usize) -> bool {
        self.data[y * self.width + x]
    }

    pub fn border_count(&self) -> usize {
        self.data.iter().filter(|&&b| b).count()
    }
}

/// Central difference with replicate boundary on a scalar plane; returns
/// `None` when the pixel or a needed neighbor is masked out.
fn central_gradient_mag(
    data: &[f64],
    mask: &[bool],
    width: usize,
    height: usize,
    x: usize,
    y: usize,
) -> Option<f64> {
    let at = |x: usize, y: usize| (data[y * width + x], mask[y * width + x]);
    if !mask[y * width + x] {
        return None;
    }
    let xm = x.saturating_sub(1);
    let xp = (x + 1).min(width - 1);
    let ym = y.saturating_sub(1);
    let yp = (y + 1).min(height - 1);
    let (vxm, mxm) = at(xm, y);
    let (vxp, mxp) = at(xp, y);
    let (vym, mym) = at(x, ym);
    let (vyp, myp) = at(x, yp);
    if !(mxm && mxp && mym && myp) {
        return None;
    }
    let gx = (vxp - vxm) / 2.0;
    let gy = (vyp - vym) / 2.0;
    Some((gx * gx + gy * gy).sqrt())
}

/// The border function b(u, v) = w_I |grad I| + w_d |grad D| + w_c C.
pub fn border_function(
    rgb: &RgbImage,
    depth: &DepthMap,
    curv: &CurvatureMap,
    w: &BorderWeights,
    reduction: CurvatureReduction,
) -> Result<Vec<f64>> {
    let (width, height) = (rgb.width(), rgb.height());
    if depth.width() != width || depth.height() != height {
        return Err(Error::DimensionMismatch {
            context: "border_function rgb vs depth",
            left_w: width,
            left_h: height,
            right_w: depth.width(),
            right_h: depth.height(),
        });
    }
    if curv.width() != width || curv.height() != height {
        return Err(Error::DimensionMismatch {
            context: "border_function rgb vs curvature",
            left_w: width,
            left_h: height,
            right_w: curv.width(),
            right_h: curv.height(),
        });
    }

    let lum = rgb.luminance();
    let all_valid = vec![true; width * height];
    let mut out = vec![0.0; width * height];
    for y in 0..height {
        for x in 0..width {
            let i = y * width + x;
            let mut b = w.w_color
                * central_gradient_mag(&lum, &all_valid, width, height, x, y)
                    .expect("rgb has no mask");
            if let Some(gd) =
                central_gradient_mag(depth.data(), depth.mask(), width, height, x, y)
            {
                b += w.w_depth * gd;
            }
            if curv.mask()[i] {
                b += w.w_curvature * reduction.apply(curv.k1()[i], curv.k2()[i]);
            }
            out[i] = b;
        }
    }
    Ok(out)
}

/// B(u, v) = 1 iff b(u, v) >= delta_thresh (inclusive).
pub fn threshold(b: &[f64], width: usize, height: usize, delta_thresh: f64) -> Result<BorderMap> {
    if b.len() != width * height {
        return Err(Error::InvalidMap("threshold: field size mismatch".into()));
    }
    Ok(BorderMap {
        width,
        height,
        data: b.iter().map(|&v| v >= delta_thresh).collect(),
    })
}

/// Composes the border function and the threshold; callers choose whether
/// the depth/curvature inputs come from ground truth or predictions.
pub fn segment_scene(
    rgb: &RgbImage,
    depth: &DepthMap,
    curv: &CurvatureMap,
    w: &BorderWeights,
    reduction: CurvatureReduction,
) -> Result<BorderMap> {
    let b = border_function(rgb, depth, curv, w, reduction)?;
    threshold(&b, rgb.width(), rgb.height(), w.delta_thresh)
}
