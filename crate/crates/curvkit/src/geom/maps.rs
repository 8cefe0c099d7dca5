use nalgebra::Vector3;

use crate::error::{Error, Result};
use crate::geom::resample::resample_bicubic_plane;

/// Principal curvatures are clamped to this magnitude (m^-1), limiting the
/// minimum representable radius of curvature to 1 cm.
pub const CURVATURE_CLAMP: f64 = 100.0;

fn check_len(context: &'static str, expect: usize, got: usize) -> Result<()> {
    if expect != got {
        return Err(Error::InvalidMap(format!(
            "{context}: expected {expect} elements, got {got}"
        )));
    }
    Ok(())
}

/// Single-channel dense grid of metric depths with a validity mask.
///
/// Invariant: every valid pixel holds a finite depth > 0.
#[derive(Debug, Clone, PartialEq)]
pub struct DepthMap {
    width: usize,
    height: usize,
    data: Vec<f64>,
    mask: Vec<bool>,
}

impl DepthMap {
    pub fn new(width: usize, height: usize, data: Vec<f64>, mask: Vec<bool>) -> Result<Self> {
        check_len("depth data", width * height, data.len())?;
        check_len("depth mask", width * height, mask.len())?;
        for (i, (&d, &m)) in data.iter().zip(&mask).enumerate() {
            if m && !(d.is_finite() && d > 0.0) {
                return Err(Error::InvalidMap(format!(
                    "valid depth pixel {i} holds non-positive or non-finite value {d}"
                )));
            }
        }
        Ok(Self { width, height, data, mask })
    }

    /// Builds a map from raw values using the sensor convention: zero and
    /// non-finite entries are invalid.
    pub fn from_raw(width: usize, height: usize, data: Vec<f64>) -> Result<Self> {
        check_len("depth data", width * height, data.len())?;
        let mask = data.iter().map(|&d| d.is_finite() && d > 0.0).collect();
        Self::new(width, height, data, mask)
    }

    pub fn constant(width: usize, height: usize, depth: f64) -> Result<Self> {
        Self::from_raw(width, height, vec![depth; width * height])
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn mask(&self) -> &[bool] {
        &self.mask
    }

    pub fn is_valid(&self, x: usize, y: usize) -> bool {
        self.mask[y * self.width + x]
    }

    /// Depth at a pixel; `None` when invalid.
    pub fn get(&self, x: usize, y: usize) -> Option<f64> {
        let i = y * self.width + x;
        self.mask[i].then(|| self.data[i])
    }

    pub fn valid_count(&self) -> usize {
        self.mask.iter().filter(|&&m| m).count()
    }

    /// Catmull-Rom bicubic resample. Output pixels whose 4x4 support touches
    /// an invalid source pixel are invalid, as are pixels whose interpolated
    /// depth undershoots to <= 0.
    pub fn resample_bicubic(&self, new_width: usize, new_height: usize) -> Result<Self> {
        let (data, mut mask) = resample_bicubic_plane(
            &self.data,
            &self.mask,
            self.width,
            self.height,
            new_width,
            new_height,
        )?;
        for (m, &d) in mask.iter_mut().zip(&data) {
            if *m && !(d.is_finite() && d > 0.0) {
                *m = false;
            }
        }
        Self::new(new_width, new_height, data, mask)
    }
}

/// Per-pixel unit normals in the camera frame, with a validity mask.
///
/// Invariants: valid normals have unit length within 1e-6 and face the
/// camera (negative dot product with the viewing ray through their pixel);
/// the orientation is established by the producers and re-checked in tests.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalMap {
    width: usize,
    height: usize,
    data: Vec<Vector3<f64>>,
    mask: Vec<bool>,
}

impl NormalMap {
    pub fn new(
        width: usize,
        height: usize,
        data: Vec<Vector3<f64>>,
        mask: Vec<bool>,
    ) -> Result<Self> {
        check_len("normal data", width * height, data.len())?;
        check_len("normal mask", width * height, mask.len())?;
        for (i, (n, &m)) in data.iter().zip(&mask).enumerate() {
            if m && (n.norm() - 1.0).abs() > 1e-6 {
                return Err(Error::InvalidMap(format!(
                    "valid normal pixel {i} has length {}",
                    n.norm()
                )));
            }
        }
        Ok(Self { width, height, data, mask })
    }

    pub fn invalid(width: usize, height: usize) -> Self {
        Self {
            width,
            height,
            data: vec![Vector3::zeros(); width * height],
            mask: vec![false; width * height],
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn data(&self) -> &[Vector3<f64>] {
        &self.data
    }

    pub fn mask(&self) -> &[bool] {
        &self.mask
    }

    pub fn get(&self, x: usize, y: usize) -> Option<Vector3<f64>> {
        let i = y * self.width + x;
        self.mask[i].then(|| self.data[i])
    }

    pub fn valid_count(&self) -> usize {
        self.mask.iter().filter(|&&m| m).count()
    }

    /// Bicubic resample of the three components followed by renormalization.
    pub fn resample_bicubic(&self, new_width: usize, new_height: usize) -> Result<Self> {
        let n = self.width * self.height;
        let mut planes = Vec::with_capacity(3);
        for c in 0..3 {
            let plane: Vec<f64> = (0..n).map(|i| self.data[i][c]).collect();
            planes.push(resample_bicubic_plane(
                &plane,
                &self.mask,
                self.width,
                self.height,
                new_width,
                new_height,
            )?);
        }
        let m = new_width * new_height;
        let mut data = vec![Vector3::zeros(); m];
        let mut mask = vec![false; m];
        for i in 0..m {
            let valid = planes.iter().all(|(_, pm)| pm[i]);
            if !valid {
                continue;
            }
            let v = Vector3::new(planes[0].0[i], planes[1].0[i], planes[2].0[i]);
            let norm = v.norm();
            if norm > 1e-12 {
                data[i] = v / norm;
                mask[i] = true;
            }
        }
        Self::new(new_width, new_height, data, mask)
    }
}

/// Per-pixel principal-curvature pair (k1 >= k2, m^-1) with validity mask.
#[derive(Debug, Clone, PartialEq)]
pub struct CurvatureMap {
    width: usize,
    height: usize,
    k1: Vec<f64>,
    k2: Vec<f64>,
    mask: Vec<bool>,
}

impl CurvatureMap {
    pub fn new(
        width: usize,
        height: usize,
        k1: Vec<f64>,
        k2: Vec<f64>,
        mask: Vec<bool>,
    ) -> Result<Self> {
        check_len("k1 data", width * height, k1.len())?;
        check_len("k2 data", width * height, k2.len())?;
        check_len("curvature mask", width * height, mask.len())?;
        for i in 0..mask.len() {
            if !mask[i] {
                continue;
            }
            if !k1[i].is_finite() || !k2[i].is_finite() {
                return Err(Error::InvalidMap(format!(
                    "valid curvature pixel {i} holds non-finite values"
                )));
            }
            if k1[i] < k2[i] {
                return Err(Error::InvalidMap(format!(
                    "curvature pixel {i} violates k1 >= k2 ({} < {})",
                    k1[i], k2[i]
                )));
            }
            if k1[i].abs() > CURVATURE_CLAMP || k2[i].abs() > CURVATURE_CLAMP {
                return Err(Error::InvalidMap(format!(
                    "curvature pixel {i} exceeds the +/-{CURVATURE_CLAMP} clamp"
                )));
            }
        }
        Ok(Self { width, height, k1, k2, mask })
    }

    /// Sorts each pair to k1 >= k2 and clamps to the +/-100 range before
    /// constructing; the entry point for raw predictions and resampled maps.
    pub fn from_unsorted(
        width: usize,
        height: usize,
        a: Vec<f64>,
        b: Vec<f64>,
        mask: Vec<bool>,
    ) -> Result<Self> {
        let mut k1 = a;
        let mut k2 = b;
        for i in 0..k1.len() {
            if k1[i] < k2[i] {
                std::mem::swap(&mut k1[i], &mut k2[i]);
            }
            k1[i] = k1[i].clamp(-CURVATURE_CLAMP, CURVATURE_CLAMP);
            k2[i] = k2[i].clamp(-CURVATURE_CLAMP, CURVATURE_CLAMP);
        }
        Self::new(width, height, k1, k2, mask)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn k1(&self) -> &[f64] {
        &self.k1
    }

    pub fn k2(&self) -> &[f64] {
        &self.k2
    }

    pub fn mask(&self) -> &[bool] {
        &self.mask
    }

    pub fn get(&self, x: usize, y: usize) -> Option<(f64, f64)> {
        let i = y * self.width + x;
        self.mask[i].then(|| (self.k1[i], self.k2[i]))
    }

    pub fn valid_count(&self) -> usize {
        self.mask.iter().filter(|&&m| m).count()
    }

    /// Multiplies both channels by `s` (the 0.1 training scale and its
    /// inverse), re-clamping to keep the type invariant.
    pub fn scaled(&self, s: f64) -> Result<Self> {
        let k1 = self.k1.iter().map(|v| v * s).collect();
        let k2 = self.k2.iter().map(|v| v * s).collect();
        Self::from_unsorted(self.width, self.height, k1, k2, self.mask.clone())
    }

    /// Bicubic resample of both channels; pairs are re-sorted and re-clamped
    /// because interpolation can locally cross them.
    pub fn resample_bicubic(&self, new_width: usize, new_height: usize) -> Result<Self> {
        let (k1, m1) = resample_bicubic_plane(
            &self.k1,
            &self.mask,
            self.width,
            self.height,
            new_width,
            new_height,
        )?;
        let (k2, m2) = resample_bicubic_plane(
            &self.k2,
            &self.mask,
            self.width,
            self.height,
            new_width,
            new_height,
        )?;
        let mask = m1.iter().zip(&m2).map(|(a, b)| *a && *b).collect();
        Self::from_unsorted(new_width, new_height, k1, k2, mask)
    }
}

/// Dense RGB image with channel values in [0, 1].
#[derive(Debug, Clone, PartialEq)]
pub struct RgbImage {
    width: usize,
    height: usize,
    data: Vec<[f64; 3]>,
}

impl RgbImage {
    pub fn new(width: usize, height: usize, data: Vec<[f64; 3]>) -> Result<Self> {
        check_len("rgb data", width * height, data.len())?;
        for (i, px) in data.iter().enumerate() {
            if px.iter().any(|c| !(0.0..=1.0).contains(c)) {
                return Err(Error::InvalidMap(format!(
                    "rgb pixel {i} outside [0,1]: {px:?}"
                )));
            }
        }
        Ok(Self { width, height, data })
    }

    pub fn black(width: usize, height: usize) -> Self {
        Self {
            width,
            height,
            data: vec![[0.0; 3]; width * height],
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn data(&self) -> &[[f64; 3]] {
        &self.data
    }

    pub fn get(&self, x: usize, y: usize) -> [f64; 3] {
        self.data[y * self.width + x]
    }

    /// Rec. 709 luminance.
    pub fn luminance(&self) -> Vec<f64> {
        self.data
            .iter()
            .map(|[r, g, b]| 0.2126 * r + 0.7152 * g + 0.0722 * b)
            .collect()
    }
}
