//! Dense surface geometry from depth maps, and a desk-scale multi-task
//! training stack built around it.
//!
//! The pipeline: back-project a depth map through a pinhole camera, fit a
//! parabolic quadric over a sparse circular pixel patch at every valid pixel,
//! and read surface normals and principal curvatures off the fitted patch.
//! Around that core the crate provides
//!
//! - [`synth`]: an analytic scene generator (planes, spheres, cylinders,
//!   saddles, boxes) with exact ground-truth normals and curvatures, used as
//!   the oracle for everything else;
//! - [`losses`]: scale-invariant log-depth, normal, and depth-weighted
//!   curvature losses with analytic gradients;
//! - [`toynet`]: a small two-stage convolutional network that predicts depth,
//!   normals and curvature jointly, with a fixed-capacity single-vs-joint
//!   training harness;
//! - [`metrics`]: the standard depth / normal-angle / curvature evaluation
//!   suites;
//! - [`segment`]: a border-function segmenter combining color gradient, depth
//!   gradient and curvature;
//! - [`augment`]: geometry-consistent sample augmentation;
//! - [`io`]: PFM / PNG / manifest / model-file formats and the `curvkit` CLI.
//!
//! Each major capability has a runnable demo under `examples/`.

pub mod augment;
pub mod cli;
pub mod error;
pub mod geom;
pub mod io;
pub mod losses;
pub mod metrics;
pub mod quadric;
pub mod segment;
pub mod synth;
pub mod toynet;

pub use error::{Error, Result};
pub use geom::{CameraIntrinsics, CurvatureMap, DepthMap, NormalMap, PointCloudGrid, RgbImage};
