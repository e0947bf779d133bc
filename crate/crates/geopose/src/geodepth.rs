//! Geometry-aware root depth: closed-form solve and analytic gradient.
//!
//! A person's absolute depth is recoverable from their 2.5D pose alone once a
//! torso prior Ω (root-to-neck distance in meters) is assumed. Writing both
//! joints as back-projections at root depth `Z` and requiring their distance
//! to equal Ω yields a quadratic `a·Z² + b·Z + c = 0` whose positive branch
//! is the geometric depth:
//!
//! ```text
//! a = (Δu/f_x)² + (Δv/f_y)²
//! b = 2·z_m · [Δu·(u_m − c_x)/f_x² + Δv·(v_m − c_y)/f_y²]
//! c = z_m² · [(u_m − c_x)²/f_x² + (v_m − c_y)²/f_y² + 1] − Ω²
//! ```
//!
//! with `(u_m, v_m, z_m)` the neck observation and `(Δu, Δv)` the neck-minus-
//! root pixel offset. The bracket in `c` enters linearly; see the guide's
//! geometric-depth chapter for the full expansion and the oracle tests that
//! pin it down. Because the depth is an explicit root, its derivative with
//! respect to every 2.5D input follows from implicit differentiation:
//!
//! ```text
//! ∂Z/∂θ = −(Z²·∂a/∂θ + Z·∂b/∂θ + ∂c/∂θ) / (2aZ + b)
//! ```
//!
//! The denominator `2aZ + b` equals `√(b² − 4ac)` on the positive branch and
//! vanishes exactly at the tangent point, where the gradient is reported as
//! singular rather than evaluated.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::camera::CameraIntrinsics;
use crate::defaults;
use crate::skeleton::{Pose25D, SkeletonDef, TorsoPrior};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeoDepthError {
    #[error("joint {index} is required for geometric depth but is not valid")]
    MissingJoint { index: usize },
    #[error("degenerate geometry: root and neck coincide in pixels (a = 0)")]
    DegenerateGeometry,
    #[error("tangent singularity: |2aZ + b| = {denominator:e} below {eps:e}")]
    TangentSingularity { denominator: f64, eps: f64 },
    #[error("uncertainty must be positive (got {sigma})")]
    NonPositiveSigma { sigma: f64 },
}

/// Coefficients of the depth quadratic `a·Z² + b·Z + c = 0`.
///
/// `a ≥ 0` always, with `a = 0` only when the root and neck project to the
/// same pixel.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadCoeffs {
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

impl QuadCoeffs {
    /// Evaluates `a·Z² + b·Z + c`.
    pub fn residual(&self, z: f64) -> f64 {
        (self.a * z + self.b) * z + self.c
    }

    pub fn discriminant(&self) -> f64 {
        self.b * self.b - 4.0 * self.a * self.c
    }
}

/// How the quadratic was resolved into a depth.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum DepthBranch {
    /// Two distinct real roots; the larger one is returned.
    TwoRoots,
    /// Discriminant exactly zero.
    Tangent,
    /// No real root: the assumed torso length is unattainable and the
    /// returned depth is the minimizer `−b / 2a` of the torso-distance
    /// objective instead of an exact root.
    NoRealRoot,
}

/// Result of the closed-form depth solve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeoDepthResult {
    pub z_geo: f64,
    pub coeffs: QuadCoeffs,
    pub branch: DepthBranch,
}

impl GeoDepthResult {
    /// A non-positive depth is geometrically meaningless; such results are
    /// excluded from fusion rather than clamped.
    pub fn is_physical(&self) -> bool {
        self.z_geo > 0.0 && self.z_geo.is_finite()
    }
}

/// Gradient of the geometric depth with respect to the five 2.5D inputs it
/// depends on. All other joints have exactly zero influence.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PoseGradient {
    pub d_u_root: f64,
    pub d_v_root: f64,
    pub d_u_neck: f64,
    pub d_v_neck: f64,
    pub d_z_rel_neck: f64,
}

impl PoseGradient {
    pub fn as_array(&self) -> [f64; 5] {
        [
            self.d_u_root,
            self.d_v_root,
            self.d_u_neck,
            self.d_v_neck,
            self.d_z_rel_neck,
        ]
    }
}

/// Builds the depth quadratic from a pose's root and neck observations.
pub fn quad_coeffs(
    pose: &Pose25D,
    cam: &CameraIntrinsics,
    omega: &TorsoPrior,
    skel: &SkeletonDef,
) -> Result<QuadCoeffs, GeoDepthError> {
    let root_i = skel.root_index();
    let neck_i = skel.neck_index();
    if !pose.is_valid(root_i) {
        return Err(GeoDepthError::MissingJoint { index: root_i });
    }
    if !pose.is_valid(neck_i) {
        return Err(GeoDepthError::MissingJoint { index: neck_i });
    }
    let root = pose.joint(root_i);
    let neck = pose.joint(neck_i);

    let du = neck.u - root.u;
    let dv = neck.v - root.v;
    let zm = neck.z_rel;
    let nx = (neck.u - cam.c_x) / cam.f_x;
    let ny = (neck.v - cam.c_y) / cam.f_y;

    let a = (du / cam.f_x).powi(2) + (dv / cam.f_y).powi(2);
    let b = 2.0 * zm * (du * nx / cam.f_x + dv * ny / cam.f_y);
    let c = zm * zm * (nx * nx + ny * ny + 1.0) - omega.meters() * omega.meters();
    Ok(QuadCoeffs { a, b, c })
}

/// Solves the depth quadratic, taking the `+√` branch when real roots exist
/// and falling back to the objective minimizer `−b / 2a` otherwise.
pub fn solve_geo_depth(coeffs: &QuadCoeffs) -> Result<GeoDepthResult, GeoDepthError> {
    if coeffs.a <= 0.0 {
        return Err(GeoDepthError::DegenerateGeometry);
    }
    let disc = coeffs.discriminant();
    let (z_geo, branch) = if disc < 0.0 {
        (-coeffs.b / (2.0 * coeffs.a), DepthBranch::NoRealRoot)
    } else {
        let z = (-coeffs.b + disc.sqrt()) / (2.0 * coeffs.a);
        let branch = if disc == 0.0 {
            DepthBranch::Tangent
        } else {
            DepthBranch::TwoRoots
        };
        (z, branch)
    };
    Ok(GeoDepthResult {
        z_geo,
        coeffs: *coeffs,
        branch,
    })
}

/// Convenience composition of [`quad_coeffs`] and [`solve_geo_depth`].
pub fn geo_depth(
    pose: &Pose25D,
    cam: &CameraIntrinsics,
    omega: &TorsoPrior,
    skel: &SkeletonDef,
) -> Result<GeoDepthResult, GeoDepthError> {
    solve_geo_depth(&quad_coeffs(pose, cam, omega, skel)?)
}

/// Analytic gradient of the geometric depth via implicit differentiation,
/// guarded by [`defaults::TANGENT_EPS`] on the denominator `2aZ + b`.
pub fn geo_depth_grad(
    pose: &Pose25D,
    cam: &CameraIntrinsics,
    omega: &TorsoPrior,
    skel: &SkeletonDef,
) -> Result<PoseGradient, GeoDepthError> {
    geo_depth_grad_eps(pose, cam, omega, skel, defaults::TANGENT_EPS)
}

/// [`geo_depth_grad`] with an explicit tangent guard.
pub fn geo_depth_grad_eps(
    pose: &Pose25D,
    cam: &CameraIntrinsics,
    omega: &TorsoPrior,
    skel: &SkeletonDef,
    tangent_eps: f64,
) -> Result<PoseGradient, GeoDepthError> {
    let coeffs = quad_coeffs(pose, cam, omega, skel)?;
    let solved = solve_geo_depth(&coeffs)?;
    let z = solved.z_geo;
    let denom = 2.0 * coeffs.a * z + coeffs.b;
    if denom.abs() < tangent_eps {
        return Err(GeoDepthError::TangentSingularity {
            denominator: denom,
            eps: tangent_eps,
        });
    }

    let root = pose.joint(skel.root_index());
    let neck = pose.joint(skel.neck_index());
    let du = neck.u - root.u;
    let dv = neck.v - root.v;
    let zm = neck.z_rel;
    let fx2 = cam.f_x * cam.f_x;
    let fy2 = cam.f_y * cam.f_y;
    let mx = neck.u - cam.c_x;
    let my = neck.v - cam.c_y;

    // Coefficient partials per input, in the order
    // (u_root, v_root, u_neck, v_neck, z_rel_neck).
    let da = [
        -2.0 * du / fx2,
        -2.0 * dv / fy2,
        2.0 * du / fx2,
        2.0 * dv / fy2,
        0.0,
    ];
    let db = [
        -2.0 * zm * mx / fx2,
        -2.0 * zm * my / fy2,
        2.0 * zm * (mx + du) / fx2,
        2.0 * zm * (my + dv) / fy2,
        2.0 * (du * mx / fx2 + dv * my / fy2),
    ];
    let dc = [
        0.0,
        0.0,
        2.0 * zm * zm * mx / fx2,
        2.0 * zm * zm * my / fy2,
        2.0 * zm * (mx * mx / fx2 + my * my / fy2 + 1.0),
    ];

    let mut grad = [0.0; 5];
    for i in 0..5 {
        grad[i] = -(z * z * da[i] + z * db[i] + dc[i]) / denom;
    }
    Ok(PoseGradient {
        d_u_root: grad[0],
        d_v_root: grad[1],
        d_u_neck: grad[2],
        d_v_neck: grad[3],
        d_z_rel_neck: grad[4],
    })
}

/// Sensitivity of the geometric depth to the torso prior, `∂Z/∂Ω = 2Ω / (2aZ + b)`.
pub fn omega_sensitivity(
    result: &GeoDepthResult,
    omega: &TorsoPrior,
    tangent_eps: f64,
) -> Result<f64, GeoDepthError> {
    let denom = 2.0 * result.coeffs.a * result.z_geo + result.coeffs.b;
    if denom.abs() < tangent_eps {
        return Err(GeoDepthError::TangentSingularity {
            denominator: denom,
            eps: tangent_eps,
        });
    }
    Ok(2.0 * omega.meters() / denom)
}

/// Uncertainty-weighted depth loss `|z_geo − z_gt| / σ + ln σ`.
pub fn geo_loss(z_geo: f64, z_gt: f64, sigma: f64) -> Result<f64, GeoDepthError> {
    if !(sigma > 0.0) {
        return Err(GeoDepthError::NonPositiveSigma { sigma });
    }
    Ok((z_geo - z_gt).abs() / sigma + sigma.ln())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::camera::Point25D;
    use crate::skeleton::JointSource;

    fn cam_centered() -> CameraIntrinsics {
        CameraIntrinsics::new(1000.0, 1000.0, 500.0, 500.0).unwrap()
    }

    fn two_joint_skel() -> SkeletonDef {
        SkeletonDef::new(vec!["root".into(), "neck".into()], 0, 1, vec![(0, 1)]).unwrap()
    }

    fn pose(root: (f64, f64), neck: (f64, f64, f64)) -> Pose25D {
        Pose25D::from_joints(
            vec![
                Point25D::new(root.0, root.1, 0.0),
                Point25D::new(neck.0, neck.1, neck.2),
            ],
            JointSource::Heatmap,
            0,
        )
        .unwrap()
    }

    #[test]
    fn hand_expanded_coefficients() {
        // Root at the principal point, neck 125 px above, zero relative depth,
        // torso prior 0.5 m. Expanding the distance constraint by hand gives
        // a = (125/1000)^2 = 0.015625, b = 0, c = -0.25.
        let skel = two_joint_skel();
        let omega = TorsoPrior::new(0.5).unwrap();
        let p = pose((500.0, 500.0), (500.0, 375.0, 0.0));
        let q = quad_coeffs(&p, &cam_centered(), &omega, &skel).unwrap();
        assert!((q.a - 0.015625).abs() < 1e-15);
        assert_eq!(q.b, 0.0);
        assert!((q.c + 0.25).abs() < 1e-15);

        let solved = solve_geo_depth(&q).unwrap();
        assert!((solved.z_geo - 4.0).abs() < 1e-12);
        assert_eq!(solved.branch, DepthBranch::TwoRoots);
    }

    #[test]
    fn coincident_neck_is_degenerate() {
        let skel = two_joint_skel();
        let omega = TorsoPrior::new(0.5).unwrap();
        let p = pose((500.0, 500.0), (500.0, 500.0, 0.0));
        let q = quad_coeffs(&p, &cam_centered(), &omega, &skel).unwrap();
        assert_eq!(q.a, 0.0);
        assert_eq!(q.b, 0.0);
        assert!((q.c + 0.25).abs() < 1e-15);
        assert!(matches!(
            solve_geo_depth(&q).unwrap_err(),
            GeoDepthError::DegenerateGeometry
        ));
    }

    #[test]
    fn perfect_square_takes_tangent_branch() {
        let q = QuadCoeffs {
            a: 1.0,
            b: -4.0,
            c: 4.0,
        };
        let solved = solve_geo_depth(&q).unwrap();
        assert_eq!(solved.z_geo, 2.0);
        assert_eq!(solved.branch, DepthBranch::Tangent);
    }

    #[test]
    fn negative_discriminant_falls_back_to_vertex() {
        let q = QuadCoeffs {
            a: 1.0,
            b: -4.0,
            c: 5.0,
        };
        let solved = solve_geo_depth(&q).unwrap();
        assert_eq!(solved.z_geo, 2.0);
        assert_eq!(solved.branch, DepthBranch::NoRealRoot);
        assert!(solved.is_physical());
    }

    #[test]
    fn negative_depth_is_flagged_unphysical() {
        // Roots -1 and -2: the larger root is still negative.
        let q = QuadCoeffs {
            a: 1.0,
            b: 3.0,
            c: 2.0,
        };
        let solved = solve_geo_depth(&q).unwrap();
        assert_eq!(solved.z_geo, -1.0);
        assert!(!solved.is_physical());
    }

    #[test]
    fn missing_neck_is_reported() {
        let skel = two_joint_skel();
        let omega = TorsoPrior::new(0.5).unwrap();
        let p = Pose25D::new(
            vec![
                Point25D::new(500.0, 500.0, 0.0),
                Point25D::new(500.0, 400.0, 0.0),
            ],
            vec![true, false],
            vec![JointSource::Heatmap; 2],
            0,
        )
        .unwrap();
        assert!(matches!(
            quad_coeffs(&p, &cam_centered(), &omega, &skel).unwrap_err(),
            GeoDepthError::MissingJoint { index: 1 }
        ));
    }

    #[test]
    fn symmetric_case_has_zero_u_gradient() {
        // With the neck pixel on the vertical through the principal point and
        // zero horizontal pixel offset, the depth is even in u_neck, so the
        // u_neck component of the gradient vanishes.
        let skel = two_joint_skel();
        let omega = TorsoPrior::new(0.5).unwrap();
        let p = pose((500.0, 500.0), (500.0, 375.0, 0.0));
        let g = geo_depth_grad(&p, &cam_centered(), &omega, &skel).unwrap();
        assert_eq!(g.d_u_neck, 0.0);
        assert_eq!(g.d_u_root, 0.0);
    }

    #[test]
    fn gradient_near_tangent_is_singular() {
        let skel = two_joint_skel();
        // Construct a pose whose discriminant is (numerically) zero: shrink
        // omega to the minimum attainable distance.
        let cam = cam_centered();
        let p = pose((500.0, 500.0), (560.0, 375.0, -0.3));
        let trial = TorsoPrior::new(1.0).unwrap();
        let q = quad_coeffs(&p, &cam, &trial, &skel).unwrap();
        // Distance at the vertex: sqrt(c + omega^2 - b^2 / 4a).
        let min_dist = (q.c + 1.0 - q.b * q.b / (4.0 * q.a)).sqrt();
        let omega = TorsoPrior::new(min_dist).unwrap();
        let err = geo_depth_grad(&p, &cam, &omega, &skel).unwrap_err();
        assert!(matches!(err, GeoDepthError::TangentSingularity { .. }));
    }

    #[test]
    fn geo_loss_values() {
        assert_eq!(geo_loss(4.0, 4.0, 1.0).unwrap(), 0.0);
        let l = geo_loss(4.5, 4.0, 0.5).unwrap();
        assert!((l - (1.0 + 0.5f64.ln())).abs() < 1e-12);
        assert!((l - 0.30685).abs() < 1e-5);
        assert!(matches!(
            geo_loss(4.0, 4.0, 0.0).unwrap_err(),
            GeoDepthError::NonPositiveSigma { .. }
        ));
    }

    #[test]
    fn loss_is_minimized_at_sigma_equal_residual() {
        // d/dσ (r/σ + ln σ) = 0 at σ = r.
        let r = 0.37;
        let at = geo_loss(r, 0.0, r).unwrap();
        for s in [0.9 * r, 1.1 * r, 0.5 * r, 2.0 * r] {
            assert!(geo_loss(r, 0.0, s).unwrap() > at);
        }
    }

    #[test]
    fn coefficient_c_matches_distance_expansion() {
        // The quadratic must reproduce |root(Z) - neck(Z)|^2 - omega^2 for
        // every Z, which pins the bracket in c to enter linearly. A variant
        // with the bracket squared fails the same identity.
        let cam = cam_centered();
        let skel = two_joint_skel();
        let omega = TorsoPrior::new(0.47).unwrap();
        let p = pose((620.0, 410.0), (563.0, 330.0, -0.11));
        let q = quad_coeffs(&p, &cam, &omega, &skel).unwrap();
        let root = p.joint(0);
        let neck = p.joint(1);
        for z in [0.7, 1.3, 2.9, 6.1, 17.0] {
            let a = cam.back_project(root, z).unwrap();
            let b = cam.back_project(neck, z).unwrap();
            let want = a.distance(&b).powi(2) - omega.meters().powi(2);
            assert!(
                (q.residual(z) - want).abs() < 1e-9 * want.abs().max(1.0),
                "residual mismatch at z = {z}"
            );

            let bracket = ((neck.u - cam.c_x) / cam.f_x).powi(2)
                + ((neck.v - cam.c_y) / cam.f_y).powi(2)
                + 1.0;
            let c_squared_variant = neck.z_rel.powi(2) * bracket * bracket - omega.meters().powi(2);
            let wrong = (q.a * z + q.b) * z + c_squared_variant;
            assert!(
                (wrong - want).abs() > 1e-6,
                "squared-bracket variant must not satisfy the identity"
            );
        }
    }

    #[test]
    fn scale_covariance() {
        // Scaling omega, the neck's relative depth, and the true depth by s
        // scales the solved depth by s while pixels stay fixed.
        let cam = cam_centered();
        let skel = two_joint_skel();
        let s = 2.7;
        let omega1 = TorsoPrior::new(0.5).unwrap();
        let omega2 = TorsoPrior::new(0.5 * s).unwrap();
        let p1 = pose((540.0, 520.0), (585.0, 401.0, -0.12));
        let p2 = pose((540.0, 520.0), (585.0, 401.0, -0.12 * s));
        let z1 = geo_depth(&p1, &cam, &omega1, &skel).unwrap().z_geo;
        let z2 = geo_depth(&p2, &cam, &omega2, &skel).unwrap().z_geo;
        assert!((z2 - s * z1).abs() < 1e-9 * z2.abs());
    }

    #[test]
    fn unused_joints_do_not_move_the_depth() {
        let skel = SkeletonDef::mupots15();
        let omega = TorsoPrior::new(0.5).unwrap();
        let cam = cam_centered();
        let mut joints = vec![Point25D::new(400.0, 300.0, 0.05); 15];
        joints[14] = Point25D::new(500.0, 500.0, 0.0);
        joints[1] = Point25D::new(520.0, 390.0, -0.04);
        let base = Pose25D::from_joints(joints.clone(), JointSource::Heatmap, 14).unwrap();
        let z0 = geo_depth(&base, &cam, &omega, &skel).unwrap().z_geo;
        // Perturb an ankle; the solved depth must be bit-identical.
        joints[10] = Point25D::new(111.0, 222.0, 0.33);
        let moved = Pose25D::from_joints(joints, JointSource::Heatmap, 14).unwrap();
        let z1 = geo_depth(&moved, &cam, &omega, &skel).unwrap().z_geo;
        assert_eq!(z0, z1);
    }
}
