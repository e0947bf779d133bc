//! Joint-set definition, per-person pose containers, and the torso prior.
//!
//! A [`SkeletonDef`] names the joints, fixes the root and neck indices, and
//! lists the limb pairs used for part-affinity grouping. The limb pairs must
//! form a tree spanning every joint so that grouped detections can never
//! assemble two peaks of the same channel into one person.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::camera::{CameraError, CameraIntrinsics, Point3D, Point25D};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SkeletonError {
    #[error("joint {index} is not valid in this pose")]
    MissingJoint { index: usize },
    #[error("root index {root} and neck index {neck} must differ and be < {joint_count}")]
    BadRootNeck {
        root: usize,
        neck: usize,
        joint_count: usize,
    },
    #[error("limb pairs must form a tree spanning all {joint_count} joints: {reason}")]
    NotSpanningTree { joint_count: usize, reason: String },
    #[error("pose has {got} joints where {expected} were expected")]
    JointCountMismatch { got: usize, expected: usize },
    #[error("root joint relative depth must be zero (got {z_rel})")]
    NonzeroRootDepth { z_rel: f64 },
    #[error("root joint must be valid in every pose")]
    InvalidRoot,
    #[error("torso prior must be positive and finite (got {omega})")]
    NonPositiveTorso { omega: f64 },
}

/// Which branch of the structured decoder produced a joint estimate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum JointSource {
    Heatmap,
    Offset,
}

/// Joint-set definition shared by every pose in a scene.
///
/// Deserialization funnels through [`SkeletonDef::new`], so an invalid
/// skeleton cannot enter through a file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawSkeletonDef")]
pub struct SkeletonDef {
    joint_names: Vec<String>,
    root_index: usize,
    neck_index: usize,
    limb_pairs: Vec<(usize, usize)>,
}

#[derive(Deserialize)]
struct RawSkeletonDef {
    joint_names: Vec<String>,
    root_index: usize,
    neck_index: usize,
    limb_pairs: Vec<(usize, usize)>,
}

impl TryFrom<RawSkeletonDef> for SkeletonDef {
    type Error = SkeletonError;

    fn try_from(raw: RawSkeletonDef) -> Result<Self, SkeletonError> {
        SkeletonDef::new(
            raw.joint_names,
            raw.root_index,
            raw.neck_index,
            raw.limb_pairs,
        )
    }
}

impl SkeletonDef {
    pub fn new(
        joint_names: Vec<String>,
        root_index: usize,
        neck_index: usize,
        limb_pairs: Vec<(usize, usize)>,
    ) -> Result<Self, SkeletonError> {
        let joint_count = joint_names.len();
        if root_index == neck_index || root_index >= joint_count || neck_index >= joint_count {
            return Err(SkeletonError::BadRootNeck {
                root: root_index,
                neck: neck_index,
                joint_count,
            });
        }
        let tree_err = |reason: &str| SkeletonError::NotSpanningTree {
            joint_count,
            reason: reason.to_string(),
        };
        if limb_pairs.len() + 1 != joint_count {
            return Err(tree_err(&format!(
                "{} limbs cannot span {} joints",
                limb_pairs.len(),
                joint_count
            )));
        }
        let mut adjacency = vec![Vec::new(); joint_count];
        for &(a, b) in &limb_pairs {
            if a >= joint_count || b >= joint_count {
                return Err(tree_err(&format!("limb ({a}, {b}) is out of range")));
            }
            if a == b {
                return Err(tree_err(&format!("limb ({a}, {b}) is a self-loop")));
            }
            adjacency[a].push(b);
            adjacency[b].push(a);
        }
        // Edge count matches a tree, so connectivity alone rules out cycles.
        let mut seen = vec![false; joint_count];
        let mut stack = vec![root_index];
        seen[root_index] = true;
        while let Some(j) = stack.pop() {
            for &n in &adjacency[j] {
                if !seen[n] {
                    seen[n] = true;
                    stack.push(n);
                }
            }
        }
        if seen.iter().any(|s| !s) {
            return Err(tree_err("limb graph is disconnected"));
        }
        Ok(SkeletonDef {
            joint_names,
            root_index,
            neck_index,
            limb_pairs,
        })
    }

    /// The 15-joint set used by the standard multi-person evaluation protocol,
    /// rooted at the pelvis.
    pub fn mupots15() -> SkeletonDef {
        let names = [
            "head_top",
            "neck",
            "right_shoulder",
            "right_elbow",
            "right_wrist",
            "left_shoulder",
            "left_elbow",
            "left_wrist",
            "right_hip",
            "right_knee",
            "right_ankle",
            "left_hip",
            "left_knee",
            "left_ankle",
            "pelvis",
        ];
        let limbs = vec![
            (14, 1),  // pelvis - neck
            (1, 0),   // neck - head_top
            (1, 2),   // neck - right_shoulder
            (2, 3),   // right_shoulder - right_elbow
            (3, 4),   // right_elbow - right_wrist
            (1, 5),   // neck - left_shoulder
            (5, 6),   // left_shoulder - left_elbow
            (6, 7),   // left_elbow - left_wrist
            (14, 8),  // pelvis - right_hip
            (8, 9),   // right_hip - right_knee
            (9, 10),  // right_knee - right_ankle
            (14, 11), // pelvis - left_hip
            (11, 12), // left_hip - left_knee
            (12, 13), // left_knee - left_ankle
        ];
        SkeletonDef::new(names.iter().map(|s| s.to_string()).collect(), 14, 1, limbs)
            .expect("built-in skeleton is valid")
    }

    pub fn joint_count(&self) -> usize {
        self.joint_names.len()
    }

    pub fn joint_names(&self) -> &[String] {
        &self.joint_names
    }

    pub fn root_index(&self) -> usize {
        self.root_index
    }

    pub fn neck_index(&self) -> usize {
        self.neck_index
    }

    pub fn limb_pairs(&self) -> &[(usize, usize)] {
        &self.limb_pairs
    }

    /// Offset-map slot for a non-root joint: joints are stored in index order
    /// with the root skipped, giving `J - 1` slots.
    pub fn offset_slot(&self, joint: usize) -> Option<usize> {
        if joint == self.root_index || joint >= self.joint_count() {
            None
        } else if joint < self.root_index {
            Some(joint)
        } else {
            Some(joint - 1)
        }
    }
}

/// Torso prior: assumed root-to-neck distance in meters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TorsoPrior {
    omega: f64,
}

impl TorsoPrior {
    pub fn new(omega: f64) -> Result<Self, SkeletonError> {
        if !(omega > 0.0) || !omega.is_finite() {
            return Err(SkeletonError::NonPositiveTorso { omega });
        }
        Ok(TorsoPrior { omega })
    }

    pub fn meters(&self) -> f64 {
        self.omega
    }
}

/// Per-person 2.5D pose: image pixels plus root-relative depth per joint.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Pose25D {
    joints: Vec<Point25D>,
    valid: Vec<bool>,
    source: Vec<JointSource>,
}

impl Pose25D {
    /// Builds a pose, enforcing that the root joint is valid and has exactly
    /// zero relative depth.
    pub fn new(
        joints: Vec<Point25D>,
        valid: Vec<bool>,
        source: Vec<JointSource>,
        root_index: usize,
    ) -> Result<Self, SkeletonError> {
        if valid.len() != joints.len() || source.len() != joints.len() {
            return Err(SkeletonError::JointCountMismatch {
                got: valid.len(),
                expected: joints.len(),
            });
        }
        if root_index >= joints.len() {
            return Err(SkeletonError::MissingJoint { index: root_index });
        }
        if !valid[root_index] {
            return Err(SkeletonError::InvalidRoot);
        }
        if joints[root_index].z_rel != 0.0 {
            return Err(SkeletonError::NonzeroRootDepth {
                z_rel: joints[root_index].z_rel,
            });
        }
        Ok(Pose25D {
            joints,
            valid,
            source,
        })
    }

    /// All joints valid with a single source tag.
    pub fn from_joints(
        joints: Vec<Point25D>,
        source: JointSource,
        root_index: usize,
    ) -> Result<Self, SkeletonError> {
        let n = joints.len();
        Pose25D::new(joints, vec![true; n], vec![source; n], root_index)
    }

    pub fn joint_count(&self) -> usize {
        self.joints.len()
    }

    pub fn joint(&self, index: usize) -> Point25D {
        self.joints[index]
    }

    pub fn joints(&self) -> &[Point25D] {
        &self.joints
    }

    pub fn is_valid(&self, index: usize) -> bool {
        self.valid[index]
    }

    pub fn valid_mask(&self) -> &[bool] {
        &self.valid
    }

    pub fn source(&self, index: usize) -> JointSource {
        self.source[index]
    }

    pub fn source_mask(&self) -> &[JointSource] {
        &self.source
    }

    /// Replaces one joint estimate. The root's relative depth stays pinned at
    /// zero, so attempts to move it off zero are rejected.
    pub fn set_joint(
        &mut self,
        index: usize,
        point: Point25D,
        valid: bool,
        source: JointSource,
        root_index: usize,
    ) -> Result<(), SkeletonError> {
        if index >= self.joints.len() {
            return Err(SkeletonError::MissingJoint { index });
        }
        if index == root_index && point.z_rel != 0.0 {
            return Err(SkeletonError::NonzeroRootDepth { z_rel: point.z_rel });
        }
        self.joints[index] = point;
        self.valid[index] = valid;
        self.source[index] = source;
        Ok(())
    }
}

/// Per-person camera-centric 3D pose.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Pose3D {
    joints: Vec<Point3D>,
    valid: Vec<bool>,
}

impl Pose3D {
    pub fn new(joints: Vec<Point3D>, valid: Vec<bool>) -> Result<Self, SkeletonError> {
        if valid.len() != joints.len() {
            return Err(SkeletonError::JointCountMismatch {
                got: valid.len(),
                expected: joints.len(),
            });
        }
        Ok(Pose3D { joints, valid })
    }

    pub fn all_valid(joints: Vec<Point3D>) -> Self {
        let n = joints.len();
        Pose3D {
            joints,
            valid: vec![true; n],
        }
    }

    pub fn joint_count(&self) -> usize {
        self.joints.len()
    }

    pub fn joint(&self, index: usize) -> Point3D {
        self.joints[index]
    }

    pub fn joints(&self) -> &[Point3D] {
        &self.joints
    }

    pub fn is_valid(&self, index: usize) -> bool {
        self.valid[index]
    }

    pub fn valid_mask(&self) -> &[bool] {
        &self.valid
    }

    /// Translates every valid joint by the same vector.
    pub fn translated(&self, dx: f64, dy: f64, dz: f64) -> Pose3D {
        Pose3D {
            joints: self
                .joints
                .iter()
                .map(|p| Point3D::new(p.x + dx, p.y + dy, p.z + dz))
                .collect(),
            valid: self.valid.clone(),
        }
    }
}

/// Lifts every valid joint of a 2.5D pose into camera-centric 3D.
/// Invalid joints are copied through as invalid placeholders.
pub fn lift_pose(
    pose: &Pose25D,
    z_root: f64,
    cam: &CameraIntrinsics,
) -> Result<Pose3D, CameraError> {
    let mut joints = Vec::with_capacity(pose.joint_count());
    let mut valid = Vec::with_capacity(pose.joint_count());
    for k in 0..pose.joint_count() {
        if pose.is_valid(k) {
            joints.push(cam.back_project(pose.joint(k), z_root)?);
            valid.push(true);
        } else {
            joints.push(Point3D::ZERO);
            valid.push(false);
        }
    }
    Ok(Pose3D { joints, valid })
}

/// Euclidean root-to-neck distance in camera space.
pub fn torso_length(pose: &Pose3D, skel: &SkeletonDef) -> Result<f64, SkeletonError> {
    let root = skel.root_index();
    let neck = skel.neck_index();
    if pose.joint_count() != skel.joint_count() {
        return Err(SkeletonError::JointCountMismatch {
            got: pose.joint_count(),
            expected: skel.joint_count(),
        });
    }
    if !pose.is_valid(root) {
        return Err(SkeletonError::MissingJoint { index: root });
    }
    if !pose.is_valid(neck) {
        return Err(SkeletonError::MissingJoint { index: neck });
    }
    Ok(pose.joint(root).distance(&pose.joint(neck)))
}
