//! Geometric and probabilistic core for camera-centric monocular
//! multi-person 3D pose estimation.
//!
//! The library covers the post-network half of a bottom-up pose pipeline:
//!
//! 1. [`posedecode`] — structured 2.5D decoding from dense maps: heatmap
//!    peaks, part-affinity grouping, root-anchored offsets, and the
//!    confidence-gated selection between the two branches.
//! 2. [`geodepth`] — closed-form root depth from a 2.5D pose and a torso
//!    prior, with an analytic gradient via implicit differentiation.
//! 3. [`uncertainty`] — Laplace depth beliefs, uncertainty-weighted losses,
//!    and precision-weighted fusion of regressed and geometric depths.
//! 4. [`metrics`] — the standard multi-person 3D evaluation suite (PCK
//!    variants, ordinal depth, per-axis root error).
//! 5. [`synth`] — a synthetic scene oracle that closes the loop: every stage
//!    is checked end-to-end against generated ground truth.
//!
//! The `geopose` binary drives batch evaluation, gradient and oracle
//! verification, benchmarks, and figure emission on top of this crate. The
//! mdbook under `book/` walks through the derivations; its code snippets are
//! compiled as doctests of this crate.

pub mod camera;
pub mod defaults;
pub mod geodepth;
pub mod io;
pub mod metrics;
pub mod oracle;
pub mod posedecode;
pub mod skeleton;
pub mod synth;
pub mod uncertainty;

pub use camera::{CameraError, CameraIntrinsics, Point3D, Point25D};
pub use geodepth::{DepthBranch, GeoDepthError, GeoDepthResult, PoseGradient, QuadCoeffs};
pub use skeleton::{JointSource, Pose3D, Pose25D, SkeletonDef, SkeletonError, TorsoPrior};
pub use uncertainty::{DepthEstimate, LossWeights, UncertaintyError};

#[cfg(doctest)]
mod book;
