use crate::error::{Error, Result};

/// Catmull-Rom cubic kernel weights (a = -0.5) for fractional offset `t` of
/// the sample inside its cell; taps are at offsets -1, 0, 1, 2.
fn catmull_rom_weights(t: f64) -> [f64; 4] {
    let t2 = t * t;
    let t3 = t2 * t;
    [
        -0.5 * t3 + t2 - 0.5 * t,
        1.5 * t3 - 2.5 * t2 + 1.0,
        -1.5 * t3 + 2.0 * t2 + 0.5 * t,
        0.5 * t3 - 0.5 * t2,
    ]
}

/// Fetches a source sample with linear extrapolation outside [0, n).
///
/// Extrapolation keeps the interpolant exact on affine maps right up to the
/// border (edge replication would flatten ramps). The returned flag is the
/// AND of the validity of every real pixel involved.
fn fetch_extended(line: &[(f64, bool)], idx: isize) -> (f64, bool) {
    let n = line.len() as isize;
    if idx >= 0 && idx < n {
        line[idx as usize]
    } else if idx < 0 {
        let k = (-idx) as f64;
        let (v0, m0) = line[0];
        let (v1, m1) = line[1];
        ((k + 1.0) * v0 - k * v1, m0 && m1)
    } else {
        let k = (idx - n + 1) as f64;
        let (v0, m0) = line[(n - 1) as usize];
        let (v1, m1) = line[(n - 2) as usize];
        ((k + 1.0) * v0 - k * v1, m0 && m1)
    }
}

/// Separable Catmull-Rom bicubic resampling of a masked scalar plane.
///
/// Output pixels whose 4x4 support contains any invalid source pixel are
/// marked invalid. Pixel centers are aligned so that source coordinate
/// `(x_dst + 0.5) * w_src / w_dst - 0.5` maps destination to source.
pub fn resample_bicubic_plane(
    data: &[f64],
    mask: &[bool],
    width: usize,
    height: usize,
    new_width: usize,
    new_height: usize,
) -> Result<(Vec<f64>, Vec<bool>)> {
    if new_width == 0 || new_height == 0 {
        return Err(Error::DegenerateTarget { width: new_width, height: new_height });
    }
    if width < 4 || height < 4 {
        return Err(Error::SourceTooSmall { width, height });
    }
    if data.len() != width * height || mask.len() != width * height {
        return Err(Error::InvalidMap("resample input size mismatch".into()));
    }

    let sx = width as f64 / new_width as f64;
    let sy = height as f64 / new_height as f64;

    // Pass 1: horizontal, producing a width=new_width intermediate.
    let mut mid = vec![(0.0, false); new_width * height];
    let mut row_buf: Vec<(f64, bool)> = Vec::with_capacity(width);
    for y in 0..height {
        row_buf.clear();
        row_buf.extend((0..width).map(|x| (data[y * width + x], mask[y * width + x])));
        for xd in 0..new_width {
            let src = (xd as f64 + 0.5) * sx - 0.5;
            let base = src.floor();
            let w = catmull_rom_weights(src - base);
            let mut acc = 0.0;
            let mut ok = true;
            for (k, wk) in w.iter().enumerate() {
                let (v, m) = fetch_extended(&row_buf, base as isize - 1 + k as isize);
                acc += wk * v;
                ok &= m;
            }
            mid[y * new_width + xd] = (acc, ok);
        }
    }

    // Pass 2: vertical.
    let mut out = vec![0.0; new_width * new_height];
    let mut out_mask = vec![false; new_width * new_height];
    let mut col_buf: Vec<(f64, bool)> = Vec::with_capacity(height);
    for xd in 0..new_width {
        col_buf.clear();
        col_buf.extend((0..height).map(|y| mid[y * new_width + xd]));
        for yd in 0..new_height {
            let src = (yd as f64 + 0.5) * sy - 0.5;
            let base = src.floor();
            let w = catmull_rom_weights(src - base);
            let mut acc = 0.0;
            let mut ok = true;
            for (k, wk) in w.iter().enumerate() {
                let (v, m) = fetch_extended(&col_buf, base as isize - 1 + k as isize);
                acc += wk * v;
                ok &= m;
            }
            out[yd * new_width + xd] = acc;
            out_mask[yd * new_width + xd] = ok;
        }
    }
    Ok((out, out_mask))
}
