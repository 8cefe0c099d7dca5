use nalgebra::Vector3;

use crate::error::{Error, Result};
use crate::geom::DepthMap;

/// Pinhole camera parameters mapping pixels to 3D rays.
///
/// Camera frame: X right, Y down, Z forward along the optical axis; a pixel
/// (u, v) at depth Z back-projects to ((u-cx)Z/fx, (v-cy)Z/fy, Z).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CameraIntrinsics {
    pub fx: f64,
    pub fy: f64,
    pub cx: f64,
    pub cy: f64,
    pub width: usize,
    pub height: usize,
}

impl CameraIntrinsics {
    pub fn new(fx: f64, fy: f64, cx: f64, cy: f64, width: usize, height: usize) -> Result<Self> {
        let intr = Self { fx, fy, cx, cy, width, height };
        intr.validate()?;
        Ok(intr)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.fx > 0.0 && self.fy > 0.0) {
            return Err(Error::InvalidIntrinsics(format!(
                "focal lengths must be positive (fx={}, fy={})",
                self.fx, self.fy
            )));
        }
        if !(self.cx > 0.0 && self.cx < self.width as f64) {
            return Err(Error::InvalidIntrinsics(format!(
                "cx={} outside (0, {})",
                self.cx, self.width
            )));
        }
        if !(self.cy > 0.0 && self.cy < self.height as f64) {
            return Err(Error::InvalidIntrinsics(format!(
                "cy={} outside (0, {})",
                self.cy, self.height
            )));
        }
        Ok(())
    }

    /// Generic 640x480 structured-light pinhole used when no calibration is
    /// supplied.
    pub fn default_vga() -> Self {
        Self { fx: 580.0, fy: 580.0, cx: 320.0, cy: 240.0, width: 640, height: 480 }
    }

    /// Default intrinsics rescaled to another resolution, preserving the
    /// field of view and centering the principal point.
    pub fn scaled_default(width: usize, height: usize) -> Self {
        let s = width as f64 / 640.0;
        Self {
            fx: 580.0 * s,
            fy: 580.0 * s,
            cx: width as f64 / 2.0,
            cy: height as f64 / 2.0,
            width,
            height,
        }
    }

    /// Unnormalized ray direction through pixel center (u, v); z = 1 so the
    /// ray parameter equals depth.
    pub fn ray(&self, u: f64, v: f64) -> Vector3<f64> {
        Vector3::new((u - self.cx) / self.fx, (v - self.cy) / self.fy, 1.0)
    }

    /// Perspective projection of a camera-frame point; `None` behind the
    /// camera.
    pub fn project(&self, p: &Vector3<f64>) -> Option<(f64, f64)> {
        if p.z <= 1e-12 {
            return None;
        }
        Some((self.fx * p.x / p.z + self.cx, self.fy * p.y / p.z + self.cy))
    }
}

impl Default for CameraIntrinsics {
    fn default() -> Self {
        Self::default_vga()
    }
}

/// Per-pixel camera-frame points produced by back-projecting a depth map.
#[derive(Debug, Clone, PartialEq)]
pub struct PointCloudGrid {
    width: usize,
    height: usize,
    points: Vec<Vector3<f64>>,
    mask: Vec<bool>,
}

impl PointCloudGrid {
    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn points(&self) -> &[Vector3<f64>] {
        &self.points
    }

    pub fn mask(&self) -> &[bool] {
        &self.mask
    }

    pub fn get(&self, x: usize, y: usize) -> Option<Vector3<f64>> {
        let i = y * self.width + x;
        self.mask[i].then(|| self.points[i])
    }

    /// Test/bench constructor for grids not derived from a depth map.
    pub fn from_points(
        width: usize,
        height: usize,
        points: Vec<Vector3<f64>>,
        mask: Vec<bool>,
    ) -> Result<Self> {
        if points.len() != width * height || mask.len() != width * height {
            return Err(Error::InvalidMap("point grid size mismatch".into()));
        }
        Ok(Self { width, height, points, mask })
    }
}

/// Back-projects every valid depth pixel to a camera-frame 3D point.
pub fn backproject(depth: &DepthMap, intr: &CameraIntrinsics) -> Result<PointCloudGrid> {
    if depth.width() != intr.width || depth.height() != intr.height {
        return Err(Error::DimensionMismatch {
            context: "backproject depth vs intrinsics",
            left_w: depth.width(),
            left_h: depth.height(),
            right_w: intr.width,
            right_h: intr.height,
        });
    }
    let (w, h) = (depth.width(), depth.height());
    let mut points = vec![Vector3::zeros(); w * h];
    let mut mask = vec![false; w * h];
    for y in 0..h {
        for x in 0..w {
            let i = y * w + x;
            if let Some(z) = depth.get(x, y) {
                points[i] = intr.ray(x as f64, y as f64) * z;
                mask[i] = true;
            }
        }
    }
    Ok(PointCloudGrid { width: w, height: h, points, mask })
}
