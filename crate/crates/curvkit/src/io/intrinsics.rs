//! Key-value text config for camera intrinsics:
//!
//! ```text
//! fx=580.0
//! fy=580.0
//! cx=320.0
//! cy=240.0
//! width=640
//! height=480
//! ```
//!
//! Blank lines and `#` comments are ignored.

use std::path::Path;

use crate::error::{Error, Result};
use crate::geom::CameraIntrinsics;
use crate::io::atomic_write;

pub fn read_intrinsics(path: &Path) -> Result<CameraIntrinsics> {
    let text =
        std::fs::read_to_string(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    let mut fx = None;
    let mut fy = None;
    let mut cx = None;
    let mut cy = None;
    let mut width = None;
    let mut height = None;
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| Error::MalformedFile {
            format: "intrinsics",
            path: path.display().to_string(),
            reason: format!("line {} is not key=value: {line:?}", lineno + 1),
        })?;
        let value: f64 = value.trim().parse().map_err(|_| Error::MalformedFile {
            format: "intrinsics",
            path: path.display().to_string(),
            reason: format!("bad number for {key}: {value:?}"),
        })?;
        match key.trim() {
            "fx" => fx = Some(value),
            "fy" => fy = Some(value),
            "cx" => cx = Some(value),
            "cy" => cy = Some(value),
            "width" => width = Some(value as usize),
            "height" => height = Some(value as usize),
            other => {
                return Err(Error::MalformedFile {
                    format: "intrinsics",
                    path: path.display().to_string(),
                    reason: format!("unknown key {other:?}"),
                })
            }
        }
    }
    let missing = |what: &str| Error::MalformedFile {
        format: "intrinsics",
        path: path.display().to_string(),
        reason: format!("missing key {what}"),
    };
    CameraIntrinsics::new(
        fx.ok_or_else(|| missing("fx"))?,
        fy.ok_or_else(|| missing("fy"))?,
        cx.ok_or_else(|| missing("cx"))?,
        cy.ok_or_else(|| missing("cy"))?,
        width.ok_or_else(|| missing("width"))?,
        height.ok_or_else(|| missing("height"))?,
    )
}

pub fn write_intrinsics(intr: &CameraIntrinsics, path: &Path) -> Result<()> {
    let text = format!(
        "fx={}\nfy={}\ncx={}\ncy={}\nwidth={}\nheight={}\n",
        intr.fx, intr.fy, intr.cx, intr.cy, intr.width, intr.height
    );
    atomic_write(path, text.as_bytes())
}

#[cfg(test)]
mod tests {
    use super::*;
    use tempfile::tempdir;

    #[test]
    fn roundtrip_and_comments() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("cam.cfg");
        let intr = CameraIntrinsics::new(580.0, 575.5, 320.0, 240.0, 640, 480).unwrap();
        write_intrinsics(&intr, &path).unwrap();
        assert_eq!(read_intrinsics(&path).unwrap(), intr);

        std::fs::write(&path, "# comment\nfx=58\nfy=58\n\ncx=32\ncy=32\nwidth=64\nheight=64\n")
            .unwrap();
        let read = read_intrinsics(&path).unwrap();
        assert_eq!(read.width, 64);
    }

    #[test]
    fn missing_key_errors() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("cam.cfg");
        std::fs::write(&path, "fx=58\nfy=58\ncx=32\ncy=32\nwidth=64\n").unwrap();
        assert!(read_intrinsics(&path).is_err());
    }
}
