//! 8-bit PNG for RGB images and binary masks (viewing formats; PFM carries
//! the float data).

use std::path::Path;

use crate::error::{Error, Result};
use crate::geom::RgbImage;

fn io_err(path: &Path) -> impl Fn(image::ImageError) -> Error + '_ {
    move |e| Error::MalformedFile {
        format: "PNG",
        path: path.display().to_string(),
        reason: e.to_string(),
    }
}

pub fn write_rgb_png(rgb: &RgbImage, path: &Path) -> Result<()> {
    let mut buf = image::RgbImage::new(rgb.width() as u32, rgb.height() as u32);
    for y in 0..rgb.height() {
        for x in 0..rgb.width() {
            let px = rgb.get(x, y);
            buf.put_pixel(
                x as u32,
                y as u32,
                image::Rgb([
                    (px[0] * 255.0).round() as u8,
                    (px[1] * 255.0).round() as u8,
                    (px[2] * 255.0).round() as u8,
                ]),
            );
        }
    }
    // image's PNG encoder is deterministic for fixed pixel input.
    buf.save_with_format(path, image::ImageFormat::Png).map_err(io_err(path))
}

pub fn read_rgb_png(path: &Path) -> Result<RgbImage> {
    let img = image::open(path).map_err(io_err(path))?.to_rgb8();
    let (w, h) = (img.width() as usize, img.height() as usize);
    let mut data = vec![[0.0; 3]; w * h];
    for y in 0..h {
        for x in 0..w {
            let px = img.get_pixel(x as u32, y as u32);
            data[y * w + x] = [
                px[0] as f64 / 255.0,
                px[1] as f64 / 255.0,
                px[2] as f64 / 255.0,
            ];
        }
    }
    RgbImage::new(w, h, data)
}

/// White = true.
pub fn write_mask_png(mask: &[bool], width: usize, height: usize, path: &Path) -> Result<()> {
    if mask.len() != width * height {
        return Err(Error::InvalidMap("mask PNG size mismatch".into()));
    }
    let mut buf = image::GrayImage::new(width as u32, height as u32);
    for y in 0..height {
        for x in 0..width {
            let v = if mask[y * width + x] { 255 } else { 0 };
            buf.put_pixel(x as u32, y as u32, image::Luma([v]));
        }
    }
    buf.save_with_format(path, image::ImageFormat::Png).map_err(io_err(path))
}
