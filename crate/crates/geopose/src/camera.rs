//! Pinhole camera model: projection and back-projection.
//!
//! The camera is the 4-parameter pinhole with focal lengths `(f_x, f_y)` and
//! principal point `(c_x, c_y)`, all in pixels. A 2.5D joint carries image
//! pixel coordinates plus a depth relative to the person's root joint; given
//! the absolute root depth the joint lifts into camera-centric meters:
//!
//! ```text
//! Z = z_root + z_rel
//! X = Z · (u − c_x) / f_x
//! Y = Z · (v − c_y) / f_y
//! ```
//!
//! Skew and lens distortion are not modeled. Units are meters and pixels
//! throughout; file loaders convert any millimeter inputs at the boundary.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CameraError {
    #[error("focal lengths must be positive (got f_x = {f_x}, f_y = {f_y})")]
    NonPositiveFocal { f_x: f64, f_y: f64 },
    #[error("principal point must be finite (got c_x = {c_x}, c_y = {c_y})")]
    NonFinitePrincipal { c_x: f64, c_y: f64 },
    #[error("absolute depth {depth} m is not positive; point lies behind the camera")]
    DegenerateDepth { depth: f64 },
}

/// Pinhole intrinsics, pixels.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CameraIntrinsics {
    pub f_x: f64,
    pub f_y: f64,
    pub c_x: f64,
    pub c_y: f64,
}

/// Camera-centric 3D point, meters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point3D {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

/// 2.5D observation: image pixels plus depth relative to the root joint.
/// The root joint itself always has `z_rel == 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point25D {
    pub u: f64,
    pub v: f64,
    pub z_rel: f64,
}

impl Point3D {
    pub const ZERO: Point3D = Point3D {
        x: 0.0,
        y: 0.0,
        z: 0.0,
    };

    pub fn new(x: f64, y: f64, z: f64) -> Self {
        Point3D { x, y, z }
    }

    pub fn distance(&self, other: &Point3D) -> f64 {
        let dx = self.x - other.x;
        let dy = self.y - other.y;
        let dz = self.z - other.z;
        (dx * dx + dy * dy + dz * dz).sqrt()
    }
}

impl Point25D {
    pub fn new(u: f64, v: f64, z_rel: f64) -> Self {
        Point25D { u, v, z_rel }
    }
}

impl CameraIntrinsics {
    pub fn new(f_x: f64, f_y: f64, c_x: f64, c_y: f64) -> Result<Self, CameraError> {
        let cam = CameraIntrinsics { f_x, f_y, c_x, c_y };
        cam.validate()?;
        Ok(cam)
    }

    pub fn validate(&self) -> Result<(), CameraError> {
        if !(self.f_x > 0.0) || !(self.f_y > 0.0) {
            return Err(CameraError::NonPositiveFocal {
                f_x: self.f_x,
                f_y: self.f_y,
            });
        }
        if !self.c_x.is_finite() || !self.c_y.is_finite() {
            return Err(CameraError::NonFinitePrincipal {
                c_x: self.c_x,
                c_y: self.c_y,
            });
        }
        Ok(())
    }

    /// Lifts a 2.5D point to camera-centric 3D given the absolute root depth.
    ///
    /// Fails with [`CameraError::DegenerateDepth`] when `z_root + z_rel ≤ 0`.
    pub fn back_project(&self, p: Point25D, z_root: f64) -> Result<Point3D, CameraError> {
        let z = z_root + p.z_rel;
        if !(z > 0.0) {
            return Err(CameraError::DegenerateDepth { depth: z });
        }
        Ok(Point3D {
            x: z * (p.u - self.c_x) / self.f_x,
            y: z * (p.v - self.c_y) / self.f_y,
            z,
        })
    }

    /// Projects a camera-centric 3D point to image pixels.
    ///
    /// Fails with [`CameraError::DegenerateDepth`] when `Z ≤ 0`.
    pub fn project(&self, p: Point3D) -> Result<(f64, f64), CameraError> {
        if !(p.z > 0.0) {
            return Err(CameraError::DegenerateDepth { depth: p.z });
        }
        Ok((
            self.f_x * p.x / p.z + self.c_x,
            self.f_y * p.y / p.z + self.c_y,
        ))
    }
}
