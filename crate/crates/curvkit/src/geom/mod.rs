//! Shared dense-map types, the pinhole camera model, back-projection and
//! bicubic resampling.
//!
//! All maps are row-major with pixel (0, 0) in the top-left corner. Depth is
//! metric (meters) along the optical axis; a depth of zero marks an invalid
//! (sensor hole) pixel. Every operation is a pure function over immutable
//! inputs; internal row parallelism never changes the output.

mod camera;
mod maps;
mod resample;

pub use camera::{backproject, CameraIntrinsics, PointCloudGrid};
pub use maps::{CurvatureMap, DepthMap, NormalMap, RgbImage, CURVATURE_CLAMP};
pub use resample::resample_bicubic_plane;
