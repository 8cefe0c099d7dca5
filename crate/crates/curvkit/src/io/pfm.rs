//! Portable Float Map reader/writer.
//!
//! Grayscale maps use the `Pf` header, 3-channel maps `PF`. The scale line
//! is written as `-1.0` (little-endian payload); readers honor the sign for
//! byte order. Rows are stored bottom-to-top per the format. NaN encodes
//! invalid pixels, so masks travel inside the file.

use std::path::Path;

use nalgebra::Vector3;

use crate::error::{Error, Result};
use crate::geom::{CurvatureMap, DepthMap, NormalMap};
use crate::io::atomic_write;

/// Raw PFM payload: `channels` is 1 or 3, rows already in top-down order.
#[derive(Debug, Clone, PartialEq)]
pub struct PfmData {
    pub width: usize,
    pub height: usize,
    pub channels: usize,
    pub data: Vec<f32>,
}

impl PfmData {
    pub fn new(width: usize, height: usize, channels: usize, data: Vec<f32>) -> Result<Self> {
        if channels != 1 && channels != 3 {
            return Err(Error::InvalidMap(format!("PFM supports 1 or 3 channels, not {channels}")));
        }
        if data.len() != width * height * channels {
            return Err(Error::InvalidMap("PFM payload length mismatch".into()));
        }
        Ok(Self { width, height, channels, data })
    }
}

fn malformed(path: &Path, reason: impl Into<String>) -> Error {
    Error::MalformedFile { format: "PFM", path: path.display().to_string(), reason: reason.into() }
}

/// Reads one whitespace-terminated token, skipping leading whitespace.
fn read_token<'a>(bytes: &'a [u8], pos: &mut usize, path: &Path) -> Result<&'a [u8]> {
    while *pos < bytes.len() && bytes[*pos].is_ascii_whitespace() {
        *pos += 1;
    }
    let start = *pos;
    while *pos < bytes.len() && !bytes[*pos].is_ascii_whitespace() {
        *pos += 1;
    }
    if start == *pos {
        return Err(malformed(path, "unexpected end of header"));
    }
    Ok(&bytes[start..*pos])
}

pub fn read_pfm(path: &Path) -> Result<PfmData> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    let mut pos = 0;
    let magic = read_token(&bytes, &mut pos, path)?;
    let channels = match magic {
        b"Pf" => 1,
        b"PF" => 3,
        other => {
            return Err(malformed(
                path,
                format!("bad magic {:?}", String::from_utf8_lossy(other)),
            ))
        }
    };
    let parse = |tok: &[u8], what: &str| -> Result<f64> {
        std::str::from_utf8(tok)
            .ok()
            .and_then(|s| s.parse::<f64>().ok())
            .ok_or_else(|| malformed(path, format!("bad {what}")))
    };
    let width = parse(read_token(&bytes, &mut pos, path)?, "width")? as usize;
    let height = parse(read_token(&bytes, &mut pos, path)?, "height")? as usize;
    let scale = parse(read_token(&bytes, &mut pos, path)?, "scale")?;
    if width == 0 || height == 0 {
        return Err(malformed(path, "zero dimension"));
    }
    if scale == 0.0 || !scale.is_finite() {
        return Err(malformed(path, format!("bad scale {scale}")));
    }
    // Exactly one whitespace byte separates the header from the payload.
    pos += 1;
    let little_endian = scale < 0.0;
    let expected = width * height * channels * 4;
    if bytes.len() < pos || bytes.len() - pos < expected {
        return Err(malformed(
            path,
            format!("truncated payload: need {expected} bytes, have {}", bytes.len().saturating_sub(pos)),
        ));
    }

    // Rows are stored bottom-to-top; flip while decoding.
    let mut data = vec![0.0f32; width * height * channels];
    let row_len = width * channels;
    for file_row in 0..height {
        let mem_row = height - 1 - file_row;
        for k in 0..row_len {
            let off = pos + (file_row * row_len + k) * 4;
            let raw: [u8; 4] = bytes[off..off + 4].try_into().unwrap();
            let v = if little_endian {
                f32::from_le_bytes(raw)
            } else {
                f32::from_be_bytes(raw)
            };
            data[mem_row * row_len + k] = v;
        }
    }
    PfmData::new(width, height, channels, data)
}

pub fn write_pfm(pfm: &PfmData, path: &Path) -> Result<()> {
    let header = format!(
        "{}\n{} {}\n-1.0\n",
        if pfm.channels == 1 { "Pf" } else { "PF" },
        pfm.width,
        pfm.height
    );
    let row_len = pfm.width * pfm.channels;
    let mut out = Vec::with_capacity(header.len() + pfm.data.len() * 4);
    out.extend_from_slice(header.as_bytes());
    for mem_row in (0..pfm.height).rev() {
        for k in 0..row_len {
            out.extend_from_slice(&pfm.data[mem_row * row_len + k].to_le_bytes());
        }
    }
    atomic_write(path, &out)
}

pub fn depth_to_pfm(depth: &DepthMap) -> PfmData {
    let data = depth
        .data()
        .iter()
        .zip(depth.mask())
        .map(|(&d, &m)| if m { d as f32 } else { f32::NAN })
        .collect();
    PfmData::new(depth.width(), depth.height(), 1, data).expect("sizes match")
}

pub fn depth_from_pfm(pfm: &PfmData, path: &Path) -> Result<DepthMap> {
    if pfm.channels != 1 {
        return Err(malformed(path, "depth map must be grayscale (Pf)"));
    }
    DepthMap::from_raw(pfm.width, pfm.height, pfm.data.iter().map(|&v| v as f64).collect())
}

pub fn normals_to_pfm(normals: &NormalMap) -> PfmData {
    let mut data = Vec::with_capacity(normals.data().len() * 3);
    for (n, &m) in normals.data().iter().zip(normals.mask()) {
        if m {
            data.extend_from_slice(&[n.x as f32, n.y as f32, n.z as f32]);
        } else {
            data.extend_from_slice(&[f32::NAN; 3]);
        }
    }
    PfmData::new(normals.width(), normals.height(), 3, data).expect("sizes match")
}

/// Reads normals, renormalizing to absorb f32 rounding; vectors shorter than
/// 1e-6 or non-finite are invalid.
pub fn normals_from_pfm(pfm: &PfmData, path: &Path) -> Result<NormalMap> {
    if pfm.channels != 3 {
        return Err(malformed(path, "normal map must be 3-channel (PF)"));
    }
    let n = pfm.width * pfm.height;
    let mut data = vec![Vector3::zeros(); n];
    let mut mask = vec![false; n];
    for i in 0..n {
        let v = Vector3::new(
            pfm.data[3 * i] as f64,
            pfm.data[3 * i + 1] as f64,
            pfm.data[3 * i + 2] as f64,
        );
        if v.iter().all(|c| c.is_finite()) {
            let norm = v.norm();
            if norm > 1e-6 {
                data[i] = v / norm;
                mask[i] = true;
            }
        }
    }
    NormalMap::new(pfm.width, pfm.height, data, mask)
}

/// Curvature is stored as a 3-channel PF with (k1, k2, 0) and NaN for
/// invalid pixels.
pub fn curvature_to_pfm(curv: &CurvatureMap) -> PfmData {
    let n = curv.width() * curv.height();
    let mut data = Vec::with_capacity(n * 3);
    for i in 0..n {
        if curv.mask()[i] {
            data.extend_from_slice(&[curv.k1()[i] as f32, curv.k2()[i] as f32, 0.0]);
        } else {
            data.extend_from_slice(&[f32::NAN; 3]);
        }
    }
    PfmData::new(curv.width(), curv.height(), 3, data).expect("sizes match")
}

pub fn curvature_from_pfm(pfm: &PfmData, path: &Path) -> Result<CurvatureMap> {
    if pfm.channels != 3 {
        return Err(malformed(path, "curvature map must be 3-channel (PF)"));
    }
    let n = pfm.width * pfm.height;
    let mut k1 = vec![0.0; n];
    let mut k2 = vec![0.0; n];
    let mut mask = vec![false; n];
    for i in 0..n {
        let (a, b) = (pfm.data[3 * i] as f64, pfm.data[3 * i + 1] as f64);
        if a.is_finite() && b.is_finite() {
            k1[i] = a;
            k2[i] = b;
            mask[i] = true;
        }
    }
    CurvatureMap::from_unsorted(pfm.width, pfm.height, k1, k2, mask)
}
