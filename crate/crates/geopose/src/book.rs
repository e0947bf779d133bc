//! Compiles the guide's code snippets as doc tests.
//!
//! Each chapter of `book/` is attached as the documentation of a hidden
//! module, so `cargo test --doc` runs every fenced Rust block in the book
//! and the prose can never drift from the API. Only active under
//! `cfg(doctest)`.

#[doc = include_str!("../../../book/src/introduction.md")]
mod introduction {}
#[doc = include_str!("../../../book/src/camera-model.md")]
mod camera_model {}
#[doc = include_str!("../../../book/src/structured-pose.md")]
mod structured_pose {}
#[doc = include_str!("../../../book/src/geometric-depth.md")]
mod geometric_depth {}
#[doc = include_str!("../../../book/src/gradients.md")]
mod gradients {}
#[doc = include_str!("../../../book/src/uncertainty-fusion.md")]
mod uncertainty_fusion {}
#[doc = include_str!("../../../book/src/metrics.md")]
mod metrics_chapter {}
#[doc = include_str!("../../../book/src/synthetic-scenes.md")]
mod synthetic_scenes {}
#[doc = include_str!("../../../book/src/file-formats.md")]
mod file_formats {}
#[doc = include_str!("../../../book/src/defaults.md")]
mod defaults_chapter {}
