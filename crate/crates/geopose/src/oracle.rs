//! Numerical reference implementations used to verify the closed-form paths.
//!
//! Nothing here touches the quadratic coefficients: the torso-distance
//! objective is evaluated straight through back-projection, so agreement
//! between [`geo_depth_argmin`] and the closed-form solver is evidence, not
//! circularity. The CLI's `oracle` and `gradcheck` subcommands run these at
//! verification time; the acceptance suite pins their tolerances.

use crate::camera::CameraIntrinsics;
use crate::geodepth::{self, GeoDepthError};
use crate::skeleton::{Pose25D, SkeletonDef, TorsoPrior};

const GOLDEN_RATIO_COMPLEMENT: f64 = 0.381_966_011_250_105_1; // 2 - phi

/// Golden-section search for the minimizer of a unimodal function on [lo, hi].
pub fn golden_section_min(f: impl Fn(f64) -> f64, lo: f64, hi: f64, tol: f64) -> f64 {
    let mut a = lo;
    let mut b = hi;
    let mut x1 = a + GOLDEN_RATIO_COMPLEMENT * (b - a);
    let mut x2 = b - GOLDEN_RATIO_COMPLEMENT * (b - a);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    while b - a > tol {
        if f1 < f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = a + GOLDEN_RATIO_COMPLEMENT * (b - a);
            f1 = f(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = b - GOLDEN_RATIO_COMPLEMENT * (b - a);
            f2 = f(x2);
        }
    }
    0.5 * (a + b)
}

/// The torso-distance objective `(‖root(Z) − neck(Z)‖ − Ω)²`, evaluated by
/// back-projecting both joints at trial depth `Z`. Infeasible depths (either
/// joint behind the camera) evaluate to infinity.
pub fn torso_objective(
    pose: &Pose25D,
    cam: &CameraIntrinsics,
    omega: &TorsoPrior,
    skel: &SkeletonDef,
    z: f64,
) -> f64 {
    let root = pose.joint(skel.root_index());
    let neck = pose.joint(skel.neck_index());
    let (Ok(p_root), Ok(p_neck)) = (cam.back_project(root, z), cam.back_project(neck, z)) else {
        return f64::INFINITY;
    };
    let d = p_root.distance(&p_neck);
    (d - omega.meters()).powi(2)
}

/// Dense-scan plus golden-section argmin of the torso-distance objective over
/// `(lo, hi]`. The scan locates the global basin; golden-section refines it.
pub fn geo_depth_argmin(
    pose: &Pose25D,
    cam: &CameraIntrinsics,
    omega: &TorsoPrior,
    skel: &SkeletonDef,
    lo: f64,
    hi: f64,
    scan_points: usize,
) -> f64 {
    let n = scan_points.max(3);
    let step = (hi - lo) / n as f64;
    let mut best_i = 1;
    let mut best = f64::INFINITY;
    for i in 1..=n {
        let z = lo + step * i as f64;
        let v = torso_objective(pose, cam, omega, skel, z);
        if v < best {
            best = v;
            best_i = i;
        }
    }
    let a = lo + step * (best_i.saturating_sub(1)) as f64;
    let b = (lo + step * (best_i + 1) as f64).min(hi);
    golden_section_min(
        |z| torso_objective(pose, cam, omega, skel, z),
        a.max(lo + step * 0.5),
        b,
        1e-10,
    )
}

/// Central finite differences of the closed-form depth with respect to the
/// five inputs `(u_root, v_root, u_neck, v_neck, z_rel_neck)`.
pub fn fd_pose_gradient(
    pose: &Pose25D,
    cam: &CameraIntrinsics,
    omega: &TorsoPrior,
    skel: &SkeletonDef,
    h: f64,
) -> Result<[f64; 5], GeoDepthError> {
    let root_i = skel.root_index();
    let neck_i = skel.neck_index();
    let solve = |p: &Pose25D| -> Result<f64, GeoDepthError> {
        Ok(geodepth::geo_depth(p, cam, omega, skel)?.z_geo)
    };

    let mut grad = [0.0; 5];
    for (slot, g) in grad.iter_mut().enumerate() {
        let bump = |p: &Pose25D, delta: f64| -> Pose25D {
            let mut out = p.clone();
            let (idx, du, dv, dz) = match slot {
                0 => (root_i, delta, 0.0, 0.0),
                1 => (root_i, 0.0, delta, 0.0),
                2 => (neck_i, delta, 0.0, 0.0),
                3 => (neck_i, 0.0, delta, 0.0),
                _ => (neck_i, 0.0, 0.0, delta),
            };
            let mut j = out.joint(idx);
            j.u += du;
            j.v += dv;
            j.z_rel += dz;
            out.set_joint(idx, j, true, out.source(idx), root_i)
                .expect("perturbation never touches the root depth");
            out
        };
        let plus = solve(&bump(pose, h))?;
        let minus = solve(&bump(pose, -h))?;
        *g = (plus - minus) / (2.0 * h);
    }
    Ok(grad)
}
