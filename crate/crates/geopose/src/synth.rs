//! Synthetic multi-person scene oracle.
//!
//! Every pipeline stage is verified against scenes whose ground truth is
//! known exactly: persons are sampled from a parametric skeleton (limb
//! lengths from an anthropometric table, jittered ±10%), rotated, and placed
//! so that every root projects inside the canvas. The root-to-neck distance
//! of each generated person equals its stored torso length exactly, which is
//! what makes the geometric-depth recovery properties testable at machine
//! precision.
//!
//! Generated torsos lean at most [`SceneConfig::max_lean_deg`] away from
//! vertical. Together with the default camera this keeps the depth
//! quadratic's constant coefficient negative, so exactly one root is
//! positive and the closed-form branch choice is unambiguous; the guide's
//! synthetic-scenes chapter works out the bound.
//!
//! The network's depth-regression head is replaced by [`simulate_reg_head`]:
//! ground-truth depth plus Laplace noise, reporting either its honest σ or a
//! deliberately mis-scaled one. Fusion quality claims are only meaningful
//! against the honest mode; the dishonest mode exists to demonstrate how
//! fusion degrades when uncertainties lie.

use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, UnitSphere};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::camera::{CameraError, CameraIntrinsics, Point3D, Point25D};
use crate::defaults;
use crate::geodepth::{self, GeoDepthError};
use crate::metrics::{EvalConfig, EvalReport, FrameStats, PersonObs, evaluate_frame};
use crate::posedecode::{
    DecodeConfig, DecodeError, DenseMaps, RenderConfig, RenderPerson, decode_frame, render_maps,
};
use crate::skeleton::{
    JointSource, Pose3D, Pose25D, SkeletonDef, SkeletonError, TorsoPrior, lift_pose,
};
use crate::uncertainty::{DepthEstimate, UncertaintyError, fuse_optional};

#[derive(Debug, Error)]
pub enum SynthError {
    #[error("failed to place person {person} after {attempts} attempts")]
    PlacementFailure { person: usize, attempts: usize },
    #[error("invalid scene config: {0}")]
    InvalidConfig(String),
    #[error("pipeline toggles disable every depth source")]
    NoDepthSource,
    #[error(transparent)]
    Camera(#[from] CameraError),
    #[error(transparent)]
    Skeleton(#[from] SkeletonError),
    #[error(transparent)]
    Decode(#[from] DecodeError),
    #[error(transparent)]
    Geo(#[from] GeoDepthError),
    #[error(transparent)]
    Uncertainty(#[from] UncertaintyError),
}

/// Scene generation parameters.
#[derive(Debug, Clone)]
pub struct SceneConfig {
    pub skeleton: SkeletonDef,
    pub cam: CameraIntrinsics,
    pub canvas_width_px: usize,
    pub canvas_height_px: usize,
    /// Root depth range, meters.
    pub depth_range: (f64, f64),
    /// Torso length range, meters. A degenerate range pins every person to
    /// the same torso length.
    pub torso_range: (f64, f64),
    /// Maximum torso lean from vertical, degrees.
    pub max_lean_deg: f64,
    /// Root placement margin as a fraction of the canvas.
    pub margin_frac: f64,
    /// Minimum pixel distance between root projections (0 = off).
    pub min_root_gap_px: f64,
    /// Minimum pixel distance between same-channel joints of different
    /// persons (0 = off).
    pub min_same_joint_gap_px: f64,
    /// Minimum pixel distance between any joint of one person and any limb
    /// segment of another (0 = off). This is what "non-overlapping persons"
    /// means for the decoder: affinity corridors stay clear of foreign
    /// joints, so grouping cannot trade peaks between persons. Every joint
    /// is a segment endpoint, so this bound subsumes the same-channel gap.
    pub min_person_gap_px: f64,
    /// Minimum separation between root depths (0 = off).
    pub min_root_depth_gap_m: f64,
    pub max_attempts: usize,
}

impl Default for SceneConfig {
    fn default() -> Self {
        let (w, h) = defaults::CANVAS_PX;
        SceneConfig {
            skeleton: SkeletonDef::mupots15(),
            cam: CameraIntrinsics {
                f_x: defaults::FOCAL_PX,
                f_y: defaults::FOCAL_PX,
                c_x: w as f64 / 2.0,
                c_y: h as f64 / 2.0,
            },
            canvas_width_px: w,
            canvas_height_px: h,
            depth_range: defaults::DEPTH_RANGE_M,
            torso_range: defaults::TORSO_RANGE_M,
            max_lean_deg: defaults::MAX_LEAN_DEG,
            margin_frac: 0.12,
            min_root_gap_px: 0.0,
            min_same_joint_gap_px: 0.0,
            min_person_gap_px: 0.0,
            min_root_depth_gap_m: 0.0,
            max_attempts: 1000,
        }
    }
}

/// One ground-truth person.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenePerson {
    pub pose3d: Pose3D,
    pub omega_true: f64,
    /// Heatmap-suppression flags, one per joint; the root is never occluded.
    pub occluded: Vec<bool>,
}

/// A generated frame: camera, skeleton, and persons with exact ground truth.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneSample {
    pub cam: CameraIntrinsics,
    pub skeleton: SkeletonDef,
    pub persons: Vec<ScenePerson>,
    pub frame_id: u64,
    pub rng_seed: u64,
}

/// Observation noise.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseModel {
    /// Gaussian pixel noise on observed (u, v).
    pub pixel_sigma: f64,
    /// Gaussian noise on observed relative depths, meters.
    pub zrel_sigma: f64,
    /// Relative error scale on the assumed torso length.
    pub omega_error: f64,
    /// Probability that a non-root joint's heatmap evidence is suppressed.
    pub occlusion_rate: f64,
}

impl NoiseModel {
    pub const NONE: NoiseModel = NoiseModel {
        pixel_sigma: 0.0,
        zrel_sigma: 0.0,
        omega_error: 0.0,
        occlusion_rate: 0.0,
    };

    pub fn validate(&self) -> Result<(), SynthError> {
        if self.pixel_sigma < 0.0 || self.zrel_sigma < 0.0 || self.omega_error < 0.0 {
            return Err(SynthError::InvalidConfig(
                "noise sigmas must be non-negative".into(),
            ));
        }
        if !(0.0..=1.0).contains(&self.occlusion_rate) {
            return Err(SynthError::InvalidConfig(format!(
                "occlusion rate {} outside [0, 1]",
                self.occlusion_rate
            )));
        }
        Ok(())
    }
}

impl Default for NoiseModel {
    fn default() -> Self {
        NoiseModel::NONE
    }
}

fn mix_seed(base: u64, salt: u64) -> u64 {
    let mut z = base ^ salt.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn unit(v: [f64; 3]) -> [f64; 3] {
    let n = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
    [v[0] / n, v[1] / n, v[2] / n]
}

fn add(a: [f64; 3], b: [f64; 3], s: f64) -> [f64; 3] {
    [a[0] + s * b[0], a[1] + s * b[1], a[2] + s * b[2]]
}

/// Anthropometric limb length (meters) by child joint name; generic fallback
/// for custom skeletons.
fn limb_length_for(child: &str) -> f64 {
    let c = child.to_ascii_lowercase();
    if c.contains("head") {
        0.22
    } else if c.contains("shoulder") {
        0.18
    } else if c.contains("elbow") {
        0.28
    } else if c.contains("wrist") || c.contains("hand") {
        0.25
    } else if c.contains("hip") {
        0.13
    } else if c.contains("knee") {
        0.42
    } else if c.contains("ankle") || c.contains("foot") {
        0.42
    } else {
        0.30
    }
}

/// Direction prior for a child joint in the person frame `(up, lat, fwd)`.
fn limb_direction_for(child: &str, rng: &mut ChaCha8Rng) -> ([f64; 3], f64) {
    let c = child.to_ascii_lowercase();
    let side = if c.contains("left") { -1.0 } else { 1.0 };
    // (up, lat, fwd) weights and jitter scale.
    if c.contains("head") {
        ([1.0, 0.0, 0.0], 0.1)
    } else if c.contains("shoulder") {
        ([0.05, side, 0.0], 0.15)
    } else if c.contains("elbow") {
        ([-0.9, 0.35 * side, 0.0], 0.3)
    } else if c.contains("wrist") || c.contains("hand") {
        ([-0.9, 0.2 * side, 0.0], 0.35)
    } else if c.contains("hip") {
        ([-0.25, side, 0.0], 0.1)
    } else if c.contains("knee") {
        ([-1.0, 0.0, 0.0], 0.3)
    } else if c.contains("ankle") || c.contains("foot") {
        ([-1.0, 0.0, 0.1], 0.25)
    } else {
        let v: [f64; 3] = UnitSphere.sample(rng);
        (v, 0.0)
    }
}

/// Builds one person's 3D joints around a root position.
///
/// The torso (root to neck) has length exactly `omega` along a direction at
/// most `max_lean_deg` from vertical; remaining limbs follow the direction
/// priors with jitter. Camera frame: X right, Y down, Z forward, so vertical
/// "up" is −Y.
fn build_person(
    skel: &SkeletonDef,
    root: Point3D,
    omega: f64,
    max_lean_deg: f64,
    rng: &mut ChaCha8Rng,
) -> Pose3D {
    let lean = (max_lean_deg.to_radians()) * rng.random::<f64>();
    let azimuth = rng.random::<f64>() * std::f64::consts::TAU;
    let up = unit([
        lean.sin() * azimuth.cos(),
        -lean.cos(),
        lean.sin() * azimuth.sin(),
    ]);
    let yaw = rng.random::<f64>() * std::f64::consts::TAU;
    let horiz = [yaw.cos(), 0.0, yaw.sin()];
    // Lateral axis orthogonal to the torso.
    let dot = horiz[0] * up[0] + horiz[1] * up[1] + horiz[2] * up[2];
    let lat = unit(add(horiz, up, -dot));
    let fwd = unit([
        up[1] * lat[2] - up[2] * lat[1],
        up[2] * lat[0] - up[0] * lat[2],
        up[0] * lat[1] - up[1] * lat[0],
    ]);

    let frame = |w: [f64; 3]| -> [f64; 3] {
        [
            w[0] * up[0] + w[1] * lat[0] + w[2] * fwd[0],
            w[0] * up[1] + w[1] * lat[1] + w[2] * fwd[1],
            w[0] * up[2] + w[1] * lat[2] + w[2] * fwd[2],
        ]
    };

    let joint_count = skel.joint_count();
    let mut joints = vec![Point3D::ZERO; joint_count];
    let mut placed = vec![false; joint_count];
    joints[skel.root_index()] = root;
    placed[skel.root_index()] = true;

    // Orient the limb tree away from the root.
    let mut adjacency = vec![Vec::new(); joint_count];
    for &(a, b) in skel.limb_pairs() {
        adjacency[a].push(b);
        adjacency[b].push(a);
    }
    let mut queue = std::collections::VecDeque::from([skel.root_index()]);
    while let Some(parent) = queue.pop_front() {
        // Children in index order for deterministic RNG consumption.
        let mut children: Vec<usize> = adjacency[parent]
            .iter()
            .copied()
            .filter(|&c| !placed[c])
            .collect();
        children.sort_unstable();
        for child in children {
            placed[child] = true;
            let p = joints[parent];
            if child == skel.neck_index() && parent == skel.root_index() {
                joints[child] = Point3D::new(
                    p.x + omega * up[0],
                    p.y + omega * up[1],
                    p.z + omega * up[2],
                );
            } else {
                let name = &skel.joint_names()[child];
                let (prior, jitter) = limb_direction_for(name, rng);
                let mut d = frame(prior);
                if jitter > 0.0 {
                    let j: [f64; 3] = UnitSphere.sample(rng);
                    d = add(d, j, jitter);
                }
                let d = unit(d);
                let len = limb_length_for(name) * (1.0 + 0.1 * (2.0 * rng.random::<f64>() - 1.0));
                joints[child] = Point3D::new(p.x + len * d[0], p.y + len * d[1], p.z + len * d[2]);
            }
            queue.push_back(child);
        }
    }
    Pose3D::all_valid(joints)
}

fn point_segment_distance_px(p: (f64, f64), a: (f64, f64), b: (f64, f64)) -> f64 {
    let (dx, dy) = (b.0 - a.0, b.1 - a.1);
    let len2 = dx * dx + dy * dy;
    let t = if len2 > 0.0 {
        (((p.0 - a.0) * dx + (p.1 - a.1) * dy) / len2).clamp(0.0, 1.0)
    } else {
        0.0
    };
    let (cx, cy) = (a.0 + t * dx, a.1 + t * dy);
    ((p.0 - cx).powi(2) + (p.1 - cy).powi(2)).sqrt()
}

/// True when some joint of either pose comes within `gap` pixels of a limb
/// segment of the other.
fn persons_overlap(a: &Pose25D, b: &Pose25D, skel: &SkeletonDef, gap: f64) -> bool {
    let joint_near_limbs = |pose: &Pose25D, other: &Pose25D| {
        (0..skel.joint_count()).any(|k| {
            let p = pose.joint(k);
            skel.limb_pairs().iter().any(|&(x, y)| {
                let s = other.joint(x);
                let e = other.joint(y);
                point_segment_distance_px((p.u, p.v), (s.u, s.v), (e.u, e.v)) < gap
            })
        })
    };
    joint_near_limbs(a, b) || joint_near_limbs(b, a)
}

/// Projects a ground-truth person into a noise-free 2.5D pose.
pub fn project_person(
    person: &Pose3D,
    cam: &CameraIntrinsics,
    root_index: usize,
) -> Result<(Pose25D, f64), CameraError> {
    let z_root = person.joint(root_index).z;
    let mut joints = Vec::with_capacity(person.joint_count());
    for k in 0..person.joint_count() {
        let p = person.joint(k);
        let (u, v) = cam.project(p)?;
        let z_rel = if k == root_index { 0.0 } else { p.z - z_root };
        joints.push(Point25D::new(u, v, z_rel));
    }
    let pose = Pose25D::from_joints(joints, JointSource::Heatmap, root_index)
        .expect("projection keeps the root at zero relative depth");
    Ok((pose, z_root))
}

/// Generates a deterministic scene with `n_persons` persons.
pub fn generate_scene(
    n_persons: usize,
    seed: u64,
    cfg: &SceneConfig,
) -> Result<SceneSample, SynthError> {
    if cfg.depth_range.0 <= 0.0 || cfg.depth_range.1 < cfg.depth_range.0 {
        return Err(SynthError::InvalidConfig(
            "depth range must be positive and ordered".into(),
        ));
    }
    if cfg.torso_range.0 <= 0.0 || cfg.torso_range.1 < cfg.torso_range.0 {
        return Err(SynthError::InvalidConfig(
            "torso range must be positive and ordered".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (w, h) = (cfg.canvas_width_px as f64, cfg.canvas_height_px as f64);
    let mu = w * cfg.margin_frac;
    let mv = h * cfg.margin_frac;
    let skel = &cfg.skeleton;
    let root_i = skel.root_index();

    let mut persons: Vec<ScenePerson> = Vec::with_capacity(n_persons);
    let mut projections: Vec<Pose25D> = Vec::new();
    for idx in 0..n_persons {
        let mut attempts = 0usize;
        loop {
            attempts += 1;
            if attempts > cfg.max_attempts {
                return Err(SynthError::PlacementFailure {
                    person: idx,
                    attempts: attempts - 1,
                });
            }
            let u = mu + rng.random::<f64>() * (w - 2.0 * mu);
            let v = mv + rng.random::<f64>() * (h - 2.0 * mv);
            let z =
                cfg.depth_range.0 + rng.random::<f64>() * (cfg.depth_range.1 - cfg.depth_range.0);
            if cfg.min_root_depth_gap_m > 0.0
                && persons
                    .iter()
                    .any(|p| (p.pose3d.joint(root_i).z - z).abs() < cfg.min_root_depth_gap_m)
            {
                continue;
            }
            if cfg.min_root_gap_px > 0.0
                && projections.iter().any(|proj| {
                    let r = proj.joint(root_i);
                    ((r.u - u).powi(2) + (r.v - v).powi(2)).sqrt() < cfg.min_root_gap_px
                })
            {
                continue;
            }
            let root = cfg.cam.back_project(Point25D::new(u, v, 0.0), z)?;
            let omega =
                cfg.torso_range.0 + rng.random::<f64>() * (cfg.torso_range.1 - cfg.torso_range.0);
            let pose3d = build_person(skel, root, omega, cfg.max_lean_deg, &mut rng);
            let (proj, _) = project_person(&pose3d, &cfg.cam, root_i)?;
            if cfg.min_same_joint_gap_px > 0.0 {
                let clash = projections.iter().any(|other| {
                    (0..skel.joint_count()).any(|k| {
                        let a = proj.joint(k);
                        let b = other.joint(k);
                        ((a.u - b.u).powi(2) + (a.v - b.v).powi(2)).sqrt()
                            < cfg.min_same_joint_gap_px
                    })
                });
                if clash {
                    continue;
                }
            }
            if cfg.min_person_gap_px > 0.0
                && projections
                    .iter()
                    .any(|other| persons_overlap(&proj, other, skel, cfg.min_person_gap_px))
            {
                continue;
            }
            projections.push(proj);
            persons.push(ScenePerson {
                pose3d,
                omega_true: omega,
                occluded: vec![false; skel.joint_count()],
            });
            break;
        }
    }

    Ok(SceneSample {
        cam: cfg.cam,
        skeleton: skel.clone(),
        persons,
        frame_id: 0,
        rng_seed: seed,
    })
}

/// Samples fresh heatmap-suppression flags; the root is never occluded.
pub fn apply_occlusion(scene: &SceneSample, rate: f64, seed: u64) -> SceneSample {
    let mut out = scene.clone();
    if rate <= 0.0 {
        return out;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let root = scene.skeleton.root_index();
    for person in &mut out.persons {
        for (k, flag) in person.occluded.iter_mut().enumerate() {
            *flag = k != root && rng.random::<f64>() < rate;
        }
    }
    out
}

/// One observed person: noisy 2.5D pose plus the ground truth needed to
/// score depth estimators against it.
#[derive(Debug, Clone)]
pub struct ObservedPerson {
    pub pose: Pose25D,
    pub occluded: Vec<bool>,
    pub z_root_true: f64,
    pub omega_true: f64,
    /// Torso prior perturbed by the relative omega error.
    pub omega_assumed: f64,
}

/// Projects and perturbs every person per the noise model. The root's
/// relative depth stays exactly zero.
pub fn observe(
    scene: &SceneSample,
    noise: &NoiseModel,
    seed: u64,
) -> Result<Vec<ObservedPerson>, SynthError> {
    noise.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let px = Normal::new(0.0, noise.pixel_sigma.max(1e-300)).unwrap();
    let zr = Normal::new(0.0, noise.zrel_sigma.max(1e-300)).unwrap();
    let om = Normal::new(0.0, noise.omega_error.max(1e-300)).unwrap();
    let root_i = scene.skeleton.root_index();

    let mut out = Vec::with_capacity(scene.persons.len());
    for person in &scene.persons {
        let (clean, z_root) = project_person(&person.pose3d, &scene.cam, root_i)?;
        let mut joints = Vec::with_capacity(clean.joint_count());
        let mut occluded = Vec::with_capacity(clean.joint_count());
        for k in 0..clean.joint_count() {
            let mut j = clean.joint(k);
            if noise.pixel_sigma > 0.0 {
                j.u += px.sample(&mut rng);
                j.v += px.sample(&mut rng);
            }
            if k != root_i && noise.zrel_sigma > 0.0 {
                j.z_rel += zr.sample(&mut rng);
            }
            joints.push(j);
            occluded.push(k != root_i && rng.random::<f64>() < noise.occlusion_rate);
        }
        let omega_assumed = if noise.omega_error > 0.0 {
            person.omega_true * (1.0 + om.sample(&mut rng))
        } else {
            person.omega_true
        };
        out.push(ObservedPerson {
            pose: Pose25D::from_joints(joints, JointSource::Heatmap, root_i)?,
            occluded,
            z_root_true: z_root,
            omega_true: person.omega_true,
            omega_assumed: omega_assumed.max(1e-3),
        });
    }
    Ok(out)
}

/// Renders the dense maps for a scene; the spec-level entry point for
/// synthetic map generation.
pub fn render_scene(scene: &SceneSample, cfg: &RenderConfig) -> Result<DenseMaps, SynthError> {
    let root_i = scene.skeleton.root_index();
    let mut projected = Vec::with_capacity(scene.persons.len());
    for person in &scene.persons {
        projected.push(project_person(&person.pose3d, &scene.cam, root_i)?);
    }
    let persons: Vec<RenderPerson<'_>> = scene
        .persons
        .iter()
        .zip(&projected)
        .map(|(p, (pose, z_root))| RenderPerson {
            pose,
            z_root: *z_root,
            occluded: &p.occluded,
        })
        .collect();
    Ok(render_maps(&scene.skeleton, &persons, cfg)?)
}

/// Stand-in for the network's depth-regression head: ground truth plus
/// Laplace noise of scale `lambda`. The reported uncertainty is the honest
/// standard deviation `√2·λ` times `sigma_scale` (1 = honest).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegHeadSim {
    pub lambda: f64,
    pub sigma_scale: f64,
}

impl RegHeadSim {
    pub fn honest(lambda: f64) -> Self {
        RegHeadSim {
            lambda,
            sigma_scale: 1.0,
        }
    }

    pub fn exact() -> Self {
        RegHeadSim {
            lambda: 0.0,
            sigma_scale: 1.0,
        }
    }
}

/// Draws one simulated regression estimate for a person at `z_true`.
pub fn simulate_reg_head(z_true: f64, sim: &RegHeadSim, rng: &mut ChaCha8Rng) -> DepthEstimate {
    let (z, sigma) = if sim.lambda > 0.0 {
        // Inverse-CDF Laplace sample.
        let u: f64 = rng.random::<f64>() - 0.5;
        let noise = -sim.lambda * u.signum() * (1.0 - 2.0 * u.abs()).ln();
        (
            z_true + noise,
            std::f64::consts::SQRT_2 * sim.lambda * sim.sigma_scale,
        )
    } else {
        (z_true, defaults::SIGMA_FLOOR)
    };
    DepthEstimate {
        z,
        sigma: sigma.max(defaults::SIGMA_FLOOR),
    }
}

/// First-order error propagation through the closed-form depth: combines the
/// analytic pose gradient with the noise scales (and an absolute uncertainty
/// on the torso prior) into a standard deviation for the geometric estimate.
pub fn propagated_geo_sigma(
    pose: &Pose25D,
    cam: &CameraIntrinsics,
    omega: &TorsoPrior,
    skel: &SkeletonDef,
    pixel_sigma: f64,
    zrel_sigma: f64,
    omega_sigma_m: f64,
    tangent_eps: f64,
) -> Result<f64, GeoDepthError> {
    let grad = geodepth::geo_depth_grad_eps(pose, cam, omega, skel, tangent_eps)?;
    let solved = geodepth::geo_depth(pose, cam, omega, skel)?;
    let d_omega = geodepth::omega_sensitivity(&solved, omega, tangent_eps)?;
    let pixel_var = (grad.d_u_root.powi(2)
        + grad.d_v_root.powi(2)
        + grad.d_u_neck.powi(2)
        + grad.d_v_neck.powi(2))
        * pixel_sigma
        * pixel_sigma;
    let var = pixel_var
        + grad.d_z_rel_neck.powi(2) * zrel_sigma * zrel_sigma
        + d_omega * d_omega * omega_sigma_m * omega_sigma_m;
    Ok(var.sqrt().max(defaults::SIGMA_FLOOR))
}

/// Which depth sources run and whether they are fused.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PipelineToggles {
    pub use_heatmap: bool,
    pub use_offset: bool,
    pub use_geo: bool,
    pub use_reg: bool,
    pub use_fusion: bool,
}

impl Default for PipelineToggles {
    fn default() -> Self {
        PipelineToggles {
            use_heatmap: true,
            use_offset: true,
            use_geo: true,
            use_reg: true,
            use_fusion: true,
        }
    }
}

impl PipelineToggles {
    pub fn validate(&self) -> Result<(), SynthError> {
        if !self.use_geo && !self.use_reg {
            return Err(SynthError::NoDepthSource);
        }
        Ok(())
    }
}

/// Full-pipeline configuration for synthetic end-to-end runs.
#[derive(Debug, Clone)]
pub struct PipelineConfig {
    pub decode: DecodeConfig,
    pub render: RenderConfig,
    pub eval: EvalConfig,
    pub toggles: PipelineToggles,
    /// Assumed torso prior for geometric depth, meters.
    pub omega_prior: f64,
    /// Absolute uncertainty on the torso prior used for error propagation.
    pub omega_prior_sigma: f64,
    pub reg: RegHeadSim,
    pub tangent_eps: f64,
    /// Base seed for occlusion sampling, offset jitter, and the simulated
    /// regression head. Mixed with the frame id, so batches stay
    /// reproducible frame by frame.
    pub seed: u64,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            decode: DecodeConfig::default(),
            render: RenderConfig::default(),
            eval: EvalConfig::default(),
            toggles: PipelineToggles::default(),
            omega_prior: defaults::TORSO_PRIOR_M,
            omega_prior_sigma: 0.0,
            reg: RegHeadSim::exact(),
            tangent_eps: defaults::TANGENT_EPS,
            seed: defaults::DEFAULT_SEED,
        }
    }
}

/// Everything produced by one end-to-end frame.
#[derive(Debug, Clone)]
pub struct FrameOutcome {
    pub stats: FrameStats,
    pub report: EvalReport,
    pub predictions: Vec<PersonObs>,
    pub gt: Vec<PersonObs>,
}

/// Runs the whole pipeline on one scene: occlusion → rendering → structured
/// decode → depth estimation → fusion → lifting → metrics.
pub fn end_to_end_case(
    scene: &SceneSample,
    noise: &NoiseModel,
    cfg: &PipelineConfig,
) -> Result<FrameOutcome, SynthError> {
    let base = mix_seed(cfg.seed, scene.frame_id);
    let occluded = apply_occlusion(scene, noise.occlusion_rate, mix_seed(base, 1));
    let mut render_cfg = cfg.render;
    render_cfg.offset_jitter_px = noise.pixel_sigma;
    render_cfg.zrel_jitter_m = noise.zrel_sigma;
    render_cfg.jitter_seed = mix_seed(base, 2);
    let maps = render_scene(&occluded, &render_cfg)?;
    evaluate_with_maps(scene, &maps, noise, cfg)
}

/// Runs the pipeline from already-rendered (or externally produced) dense
/// maps: decode → depth estimation → fusion → lifting → metrics.
pub fn evaluate_with_maps(
    scene: &SceneSample,
    maps: &DenseMaps,
    noise: &NoiseModel,
    cfg: &PipelineConfig,
) -> Result<FrameOutcome, SynthError> {
    noise.validate()?;
    cfg.toggles.validate()?;
    let skel = &scene.skeleton;
    let root_i = skel.root_index();
    let base = mix_seed(cfg.seed, scene.frame_id);

    // Ground truth observations for the evaluator.
    let mut gt = Vec::with_capacity(scene.persons.len());
    for person in &scene.persons {
        let (pose2d, _) = project_person(&person.pose3d, &scene.cam, root_i)?;
        gt.push(PersonObs {
            pose2d,
            pose3d: person.pose3d.clone(),
        });
    }

    let mut decode_cfg = cfg.decode;
    decode_cfg.use_heatmap = cfg.toggles.use_heatmap;
    decode_cfg.use_offset = cfg.toggles.use_offset;
    let decoded = decode_frame(maps, skel, &decode_cfg)?;

    let mut reg_rng = ChaCha8Rng::seed_from_u64(mix_seed(base, 3));
    let omega = TorsoPrior::new(cfg.omega_prior)?;
    let mut predictions = Vec::with_capacity(decoded.len());
    for pose in &decoded {
        // The simulated regression head "sees" whichever ground-truth person
        // stands at the decoded root; associate by root pixel distance.
        let root = pose.joint(root_i);
        let nearest = gt
            .iter()
            .map(|g| {
                let gr = g.pose2d.joint(root_i);
                ((gr.u - root.u).powi(2) + (gr.v - root.v).powi(2)).sqrt()
            })
            .enumerate()
            .min_by(|a, b| a.1.partial_cmp(&b.1).unwrap());

        let reg_est = match (cfg.toggles.use_reg, nearest) {
            (true, Some((gi, dist))) if dist < cfg.eval.match_threshold_px => {
                Some(simulate_reg_head(
                    scene.persons[gi].pose3d.joint(root_i).z,
                    &cfg.reg,
                    &mut reg_rng,
                ))
            }
            _ => None,
        };

        let geo_est = if cfg.toggles.use_geo {
            match geodepth::geo_depth(pose, &scene.cam, &omega, skel) {
                Ok(result) if result.is_physical() => {
                    let sigma = propagated_geo_sigma(
                        pose,
                        &scene.cam,
                        &omega,
                        skel,
                        noise.pixel_sigma,
                        noise.zrel_sigma,
                        cfg.omega_prior_sigma,
                        cfg.tangent_eps,
                    )
                    .unwrap_or(defaults::SIGMA_FLOOR);
                    Some(DepthEstimate {
                        z: result.z_geo,
                        sigma,
                    })
                }
                _ => None,
            }
        } else {
            None
        };

        let depth = if cfg.toggles.use_fusion {
            fuse_optional(reg_est, geo_est)?
        } else {
            // Without adaptive fusion the direct regression wins when
            // available, mirroring a pipeline that never built the fusion.
            reg_est.or(geo_est)
        };
        let Some(depth) = depth else { continue };
        if depth.z <= 0.0 {
            continue;
        }
        let pose3d = lift_pose(pose, depth.z, &scene.cam)?;
        predictions.push(PersonObs {
            pose2d: pose.clone(),
            pose3d,
        });
    }

    let stats = evaluate_frame(&predictions, &gt, root_i, &cfg.eval);
    Ok(FrameOutcome {
        stats,
        report: EvalReport::from_stats(&stats),
        predictions,
        gt,
    })
}

/// Depth-only fusion benchmark: per sample, a fresh single-person scene is
/// observed under the noise model, the geometric and simulated regression
/// estimates are formed with honestly propagated uncertainties, and the
/// three absolute errors are accumulated.
#[derive(Debug, Clone)]
pub struct BenchConfig {
    pub samples: usize,
    pub noise: NoiseModel,
    pub reg: RegHeadSim,
    pub scene: SceneConfig,
    pub tangent_eps: f64,
    pub seed: u64,
}

impl Default for BenchConfig {
    fn default() -> Self {
        BenchConfig {
            samples: 10_000,
            noise: NoiseModel {
                pixel_sigma: 2.0,
                zrel_sigma: 0.02,
                omega_error: 0.02,
                occlusion_rate: 0.0,
            },
            reg: RegHeadSim::honest(0.15),
            scene: SceneConfig::default(),
            tangent_eps: defaults::TANGENT_EPS,
            seed: defaults::DEFAULT_SEED,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BenchResult {
    pub samples: usize,
    pub reg_mae_m: f64,
    pub geo_mae_m: f64,
    pub fused_mae_m: f64,
    /// Samples whose geometric solve was rejected (no real root with a
    /// positive depth); these fall back to the regression estimate alone.
    pub geo_rejected: usize,
    /// Mean uncertainty-weighted losses over the batch, evaluated at the
    /// reported sigmas.
    pub reg_loss_mean: f64,
    pub geo_loss_mean: f64,
    /// Mean |dZ/dOmega| over accepted geometric solves: how hard the solved
    /// depth leans on the assumed torso length.
    pub omega_sensitivity_mean: f64,
}

pub fn depth_fusion_bench(cfg: &BenchConfig) -> Result<BenchResult, SynthError> {
    let mut reg_err = 0.0;
    let mut geo_err = 0.0;
    let mut fused_err = 0.0;
    let mut geo_rejected = 0usize;
    let mut reg_loss_sum = 0.0;
    let mut geo_loss_sum = 0.0;
    let mut omega_sens_sum = 0.0;
    let mut reg_rng = ChaCha8Rng::seed_from_u64(mix_seed(cfg.seed, 0xBEEF));
    let skel = &cfg.scene.skeleton;

    for i in 0..cfg.samples {
        let scene = generate_scene(1, mix_seed(cfg.seed, i as u64), &cfg.scene)?;
        let obs = observe(&scene, &cfg.noise, mix_seed(cfg.seed, 0x0B5E ^ i as u64))?;
        let person = &obs[0];
        let z_true = person.z_root_true;

        let reg = simulate_reg_head(z_true, &cfg.reg, &mut reg_rng);
        reg_err += (reg.z - z_true).abs();
        reg_loss_sum += crate::uncertainty::reg_loss(&reg, z_true)?;

        let omega = TorsoPrior::new(person.omega_assumed)?;
        let geo = match geodepth::geo_depth(&person.pose, &scene.cam, &omega, skel) {
            Ok(r) if r.is_physical() => {
                if let Ok(sens) = geodepth::omega_sensitivity(&r, &omega, cfg.tangent_eps) {
                    omega_sens_sum += sens.abs();
                }
                let sigma = propagated_geo_sigma(
                    &person.pose,
                    &scene.cam,
                    &omega,
                    skel,
                    cfg.noise.pixel_sigma,
                    cfg.noise.zrel_sigma,
                    person.omega_assumed * cfg.noise.omega_error,
                    cfg.tangent_eps,
                )
                .unwrap_or(defaults::SIGMA_FLOOR);
                Some(DepthEstimate { z: r.z_geo, sigma })
            }
            _ => None,
        };
        match geo {
            Some(g) => {
                geo_err += (g.z - z_true).abs();
                geo_loss_sum += geodepth::geo_loss(g.z, z_true, g.sigma)?;
            }
            None => geo_rejected += 1,
        }

        let fused = fuse_optional(Some(reg), geo)?.expect("reg estimate always present");
        fused_err += (fused.z - z_true).abs();
    }

    let n = cfg.samples.max(1) as f64;
    let geo_n = (cfg.samples - geo_rejected).max(1) as f64;
    Ok(BenchResult {
        samples: cfg.samples,
        reg_mae_m: reg_err / n,
        geo_mae_m: geo_err / geo_n,
        fused_mae_m: fused_err / n,
        geo_rejected,
        reg_loss_mean: reg_loss_sum / n,
        geo_loss_mean: geo_loss_sum / geo_n,
        omega_sensitivity_mean: omega_sens_sum / geo_n,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::skeleton::torso_length;

    #[test]
    fn empty_scene() {
        let scene = generate_scene(0, 7, &SceneConfig::default()).unwrap();
        assert!(scene.persons.is_empty());
    }

    #[test]
    fn same_seed_same_scene() {
        let cfg = SceneConfig::default();
        let a = generate_scene(4, 123, &cfg).unwrap();
        let b = generate_scene(4, 123, &cfg).unwrap();
        assert_eq!(a, b);
        let c = generate_scene(4, 124, &cfg).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn torso_lengths_are_exact() {
        let cfg = SceneConfig::default();
        for seed in 0..500 {
            let scene = generate_scene(2, seed, &cfg).unwrap();
            for person in &scene.persons {
                let d = torso_length(&person.pose3d, &scene.skeleton).unwrap();
                assert!(
                    (d - person.omega_true).abs() < 1e-12,
                    "torso {} vs omega {}",
                    d,
                    person.omega_true
                );
                let (lo, hi) = cfg.torso_range;
                assert!(person.omega_true >= lo && person.omega_true <= hi);
            }
        }
    }

    #[test]
    fn roots_project_inside_canvas() {
        let cfg = SceneConfig::default();
        for seed in 0..50 {
            let scene = generate_scene(3, seed, &cfg).unwrap();
            for person in &scene.persons {
                let (u, v) = scene.cam.project(person.pose3d.joint(14)).unwrap();
                assert!(u >= 0.0 && u < cfg.canvas_width_px as f64);
                assert!(v >= 0.0 && v < cfg.canvas_height_px as f64);
                let z = person.pose3d.joint(14).z;
                assert!(z >= cfg.depth_range.0 && z <= cfg.depth_range.1);
            }
        }
    }

    #[test]
    fn impossible_constraints_fail_placement() {
        let cfg = SceneConfig {
            min_root_gap_px: 1e9,
            max_attempts: 30,
            ..SceneConfig::default()
        };
        let err = generate_scene(2, 5, &cfg).unwrap_err();
        assert!(matches!(
            err,
            SynthError::PlacementFailure { person: 1, .. }
        ));
    }

    #[test]
    fn zero_noise_observation_is_exact() {
        let cfg = SceneConfig::default();
        let scene = generate_scene(2, 42, &cfg).unwrap();
        let obs = observe(&scene, &NoiseModel::NONE, 9).unwrap();
        for (person, o) in scene.persons.iter().zip(&obs) {
            let (clean, z_root) = project_person(&person.pose3d, &scene.cam, 14).unwrap();
            assert_eq!(o.pose, clean);
            assert_eq!(o.z_root_true, z_root);
            assert_eq!(o.omega_assumed, person.omega_true);
            assert!(o.occluded.iter().all(|&f| !f));
        }
    }

    #[test]
    fn pixel_noise_has_requested_scale() {
        let cfg = SceneConfig::default();
        let scene = generate_scene(1, 42, &cfg).unwrap();
        let noise = NoiseModel {
            pixel_sigma: 2.0,
            ..NoiseModel::NONE
        };
        let (clean, _) = project_person(&scene.persons[0].pose3d, &scene.cam, 14).unwrap();
        let mut residuals = Vec::new();
        for trial in 0..4000 {
            let obs = observe(&scene, &noise, trial).unwrap();
            for k in 0..15 {
                residuals.push(obs[0].pose.joint(k).u - clean.joint(k).u);
                residuals.push(obs[0].pose.joint(k).v - clean.joint(k).v);
            }
        }
        let n = residuals.len() as f64;
        let mean = residuals.iter().sum::<f64>() / n;
        let var = residuals.iter().map(|r| (r - mean).powi(2)).sum::<f64>() / n;
        let std = var.sqrt();
        assert!(
            (std - 2.0).abs() / 2.0 < 0.02,
            "empirical std {std} strays from 2.0 by more than 2%"
        );
    }

    #[test]
    fn full_occlusion_flags_every_non_root_joint() {
        let cfg = SceneConfig::default();
        let scene = generate_scene(2, 8, &cfg).unwrap();
        let occluded = apply_occlusion(&scene, 1.0, 3);
        for person in &occluded.persons {
            for (k, &f) in person.occluded.iter().enumerate() {
                assert_eq!(f, k != 14);
            }
        }
        let obs = observe(
            &scene,
            &NoiseModel {
                occlusion_rate: 1.0,
                ..NoiseModel::NONE
            },
            3,
        )
        .unwrap();
        for o in &obs {
            for (k, &f) in o.occluded.iter().enumerate() {
                assert_eq!(f, k != 14);
            }
        }
    }

    #[test]
    fn reg_head_loss_minimizer_matches_empirical_mae() {
        // Draw 1e5 simulated regression estimates around a fixed depth; the
        // uncertainty loss over the batch is minimized at the empirical mean
        // absolute residual, which itself sits within 2% of lambda.
        let sim = RegHeadSim::honest(0.25);
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let z_true = 5.0;
        let residuals: Vec<f64> = (0..100_000)
            .map(|_| (simulate_reg_head(z_true, &sim, &mut rng).z - z_true).abs())
            .collect();
        let mae = residuals.iter().sum::<f64>() / residuals.len() as f64;
        assert!((mae - sim.lambda).abs() / sim.lambda < 0.02, "mae {mae}");

        let loss = |sigma: f64| {
            residuals
                .iter()
                .map(|r| r / sigma + sigma.ln())
                .sum::<f64>()
                / residuals.len() as f64
        };
        let best = crate::oracle::golden_section_min(loss, 1e-3, 10.0, 1e-10);
        assert!((best - mae).abs() < 1e-6, "argmin {best} vs mae {mae}");
    }

    #[test]
    fn exact_reg_head_returns_truth_with_floor_sigma() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let est = simulate_reg_head(4.2, &RegHeadSim::exact(), &mut rng);
        assert_eq!(est.z, 4.2);
        assert_eq!(est.sigma, defaults::SIGMA_FLOOR);
    }

    #[test]
    fn end_to_end_zero_noise_is_perfect() {
        let scene_cfg = SceneConfig {
            min_person_gap_px: 30.0,
            min_root_depth_gap_m: 0.05,
            depth_range: (2.5, 8.0),
            torso_range: (0.5, 0.5),
            max_attempts: 20_000,
            ..SceneConfig::default()
        };
        let scene = generate_scene(3, 77, &scene_cfg).unwrap();
        let outcome =
            end_to_end_case(&scene, &NoiseModel::NONE, &PipelineConfig::default()).unwrap();
        assert_eq!(outcome.report.pck_rel, 100.0);
        assert_eq!(outcome.report.pck_abs, 100.0);
        assert_eq!(outcome.report.pck_root, 100.0);
        assert_eq!(outcome.report.pcod, 100.0);
        assert!(
            outcome.report.mrpe_z_mm < 1.0,
            "mrpe_z {}",
            outcome.report.mrpe_z_mm
        );
        assert_eq!(outcome.report.matched_count, 3);
    }

    #[test]
    fn geo_only_zero_noise_recovers_depth() {
        let scene_cfg = SceneConfig {
            min_person_gap_px: 30.0,
            depth_range: (2.5, 8.0),
            torso_range: (0.5, 0.5),
            max_attempts: 20_000,
            ..SceneConfig::default()
        };
        let scene = generate_scene(2, 13, &scene_cfg).unwrap();
        let cfg = PipelineConfig {
            toggles: PipelineToggles {
                use_reg: false,
                ..PipelineToggles::default()
            },
            ..PipelineConfig::default()
        };
        let outcome = end_to_end_case(&scene, &NoiseModel::NONE, &cfg).unwrap();
        assert!(
            outcome.report.mrpe_z_mm < 1.0,
            "mrpe_z {}",
            outcome.report.mrpe_z_mm
        );
    }

    #[test]
    fn dishonest_sigma_destroys_fusion_dominance() {
        // A noisy regression head that reports a twentieth of its true
        // uncertainty drags the fused depth toward itself; the calibrated
        // geometry estimate alone would have been better. Fusion is only as
        // good as the uncertainties it is fed.
        let noisy_overconfident = BenchConfig {
            samples: 2000,
            reg: RegHeadSim { lambda: 0.6, sigma_scale: 0.05 },
            ..BenchConfig::default()
        };
        let r = depth_fusion_bench(&noisy_overconfident).unwrap();
        let floor = r.reg_mae_m.min(r.geo_mae_m);
        assert!(
            r.fused_mae_m > floor * 1.05,
            "fused {:.4} should degrade past min({:.4}, {:.4}) under dishonest sigma",
            r.fused_mae_m,
            r.reg_mae_m,
            r.geo_mae_m
        );

        // The same configuration with honest uncertainties dominates.
        let honest = BenchConfig {
            samples: 2000,
            reg: RegHeadSim::honest(0.6),
            ..BenchConfig::default()
        };
        let h = depth_fusion_bench(&honest).unwrap();
        assert!(h.fused_mae_m <= h.reg_mae_m.min(h.geo_mae_m) * 1.01);
    }

    #[test]
    fn toggles_must_keep_one_depth_source() {
        let toggles = PipelineToggles {
            use_geo: false,
            use_reg: false,
            ..PipelineToggles::default()
        };
        assert!(matches!(toggles.validate(), Err(SynthError::NoDepthSource)));
    }
}
