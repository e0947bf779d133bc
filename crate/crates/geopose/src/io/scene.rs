//! Canonical JSON scene format.
//!
//! Scenes and prediction sets share one schema (`geopose-scene/1`): camera,
//! skeleton, and a persons array whose joints may be given camera-centric
//! (`joints_3d`) or as 2.5D observations with an absolute root depth
//! (`joints_25d` plus `root_depth`). The mandatory units block declares
//! meters or millimeters for lengths; millimeter files are converted at this
//! boundary and never silently. Unknown units are hard errors.
//!
//! Schema validation collects every violation before failing, so a bad file
//! reports all of its problems at once.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::camera::{CameraIntrinsics, Point3D, Point25D};
use crate::skeleton::{JointSource, Pose3D, Pose25D, SkeletonDef, lift_pose};
use crate::synth::{ScenePerson, SceneSample};

pub const SCENE_VERSION: &str = "geopose-scene/1";

#[derive(Debug, Error)]
pub enum SceneIoError {
    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("parse error in {path}: {message}")]
    Parse { path: PathBuf, message: String },
    #[error("schema violations in {path}:\n  - {}", violations.join("\n  - "))]
    Schema {
        path: PathBuf,
        violations: Vec<String>,
    },
}

#[derive(Debug, Serialize, Deserialize)]
struct UnitsJson {
    length: String,
    pixels: String,
}

#[derive(Debug, Serialize, Deserialize)]
struct SkeletonJson {
    joint_names: Vec<String>,
    root_index: usize,
    neck_index: usize,
    limb_pairs: Vec<(usize, usize)>,
}

#[derive(Debug, Serialize, Deserialize)]
struct RootDepthJson {
    z: f64,
    sigma: f64,
}

#[derive(Debug, Serialize, Deserialize)]
struct PersonJson {
    omega: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    joints_3d: Option<Vec<[f64; 3]>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    joints_25d: Option<Vec<[f64; 3]>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    occluded: Option<Vec<bool>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    root_depth: Option<RootDepthJson>,
}

#[derive(Debug, Serialize, Deserialize)]
struct SceneJson {
    version: String,
    units: UnitsJson,
    camera: CameraIntrinsics,
    skeleton: SkeletonJson,
    frame_id: u64,
    rng_seed: u64,
    persons: Vec<PersonJson>,
}

/// Reads and fully validates a scene (or prediction) file.
pub fn read_scene(path: impl AsRef<Path>) -> Result<SceneSample, SceneIoError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| SceneIoError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_scene(&text, path)
}

/// Parses scene JSON from a string; `path` is used only for error context.
pub fn parse_scene(text: &str, path: impl AsRef<Path>) -> Result<SceneSample, SceneIoError> {
    let path = path.as_ref();
    let json: SceneJson = serde_json::from_str(text).map_err(|e| SceneIoError::Parse {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;

    let mut violations: Vec<String> = Vec::new();
    if json.version != SCENE_VERSION {
        violations.push(format!(
            "unrecognized version {:?} (expected {SCENE_VERSION:?})",
            json.version
        ));
    }
    let length_scale = match json.units.length.as_str() {
        "m" => 1.0,
        "mm" => 1e-3,
        other => {
            violations.push(format!(
                "unsupported length unit {other:?} (use \"m\" or \"mm\")"
            ));
            1.0
        }
    };
    if json.units.pixels != "px" {
        violations.push(format!(
            "unsupported pixel unit {:?} (only \"px\" is defined)",
            json.units.pixels
        ));
    }
    if let Err(e) = json.camera.validate() {
        violations.push(format!("camera: {e}"));
    }
    let skeleton = SkeletonDef::new(
        json.skeleton.joint_names.clone(),
        json.skeleton.root_index,
        json.skeleton.neck_index,
        json.skeleton.limb_pairs.clone(),
    );
    let skeleton = match skeleton {
        Ok(s) => Some(s),
        Err(e) => {
            violations.push(format!("skeleton: {e}"));
            None
        }
    };

    let joint_count = json.skeleton.joint_names.len();
    let mut persons = Vec::with_capacity(json.persons.len());
    for (i, person) in json.persons.iter().enumerate() {
        let mut person_ok = true;
        if !(person.omega > 0.0) {
            violations.push(format!(
                "person {i}: omega {} must be positive",
                person.omega
            ));
            person_ok = false;
        }
        for (name, arr) in [
            ("joints_3d", &person.joints_3d),
            ("joints_25d", &person.joints_25d),
        ] {
            if let Some(a) = arr
                && a.len() != joint_count
            {
                violations.push(format!(
                    "person {i}: {name} holds {} joints, skeleton defines {joint_count}",
                    a.len()
                ));
                person_ok = false;
            }
        }
        if let Some(occ) = &person.occluded
            && occ.len() != joint_count
        {
            violations.push(format!(
                "person {i}: occluded holds {} flags, skeleton defines {joint_count}",
                occ.len()
            ));
            person_ok = false;
        }
        if person.joints_3d.is_none() && person.joints_25d.is_none() {
            violations.push(format!("person {i}: needs joints_3d or joints_25d"));
            person_ok = false;
        }
        if person.joints_3d.is_none() && person.joints_25d.is_some() && person.root_depth.is_none()
        {
            violations.push(format!(
                "person {i}: joints_25d without joints_3d requires root_depth"
            ));
            person_ok = false;
        }
        if !person_ok {
            continue;
        }

        let pose3d = if let Some(j3) = &person.joints_3d {
            Pose3D::all_valid(
                j3.iter()
                    .map(|&[x, y, z]| {
                        Point3D::new(x * length_scale, y * length_scale, z * length_scale)
                    })
                    .collect(),
            )
        } else {
            let j25 = person.joints_25d.as_ref().unwrap();
            let depth = person.root_depth.as_ref().unwrap();
            let root_index = json.skeleton.root_index.min(joint_count.saturating_sub(1));
            let pose = Pose25D::from_joints(
                j25.iter()
                    .enumerate()
                    .map(|(k, &[u, v, zr])| {
                        let zr = if k == root_index {
                            0.0
                        } else {
                            zr * length_scale
                        };
                        Point25D::new(u, v, zr)
                    })
                    .collect(),
                JointSource::Offset,
                root_index,
            );
            let lifted = pose.map_err(|e| e.to_string()).and_then(|p| {
                lift_pose(&p, depth.z * length_scale, &json.camera).map_err(|e| e.to_string())
            });
            match lifted {
                Ok(p) => p,
                Err(e) => {
                    violations.push(format!("person {i}: cannot lift 2.5D joints: {e}"));
                    continue;
                }
            }
        };
        persons.push(ScenePerson {
            pose3d,
            omega_true: person.omega * length_scale,
            occluded: person
                .occluded
                .clone()
                .unwrap_or_else(|| vec![false; joint_count]),
        });
    }

    if !violations.is_empty() {
        return Err(SceneIoError::Schema {
            path: path.to_path_buf(),
            violations,
        });
    }
    Ok(SceneSample {
        cam: json.camera,
        skeleton: skeleton.expect("validated above"),
        persons,
        frame_id: json.frame_id,
        rng_seed: json.rng_seed,
    })
}

/// Renders a scene to canonical JSON: meters, pretty-printed, stable key
/// order, trailing newline.
pub fn render_scene_json(scene: &SceneSample) -> String {
    let json = SceneJson {
        version: SCENE_VERSION.to_string(),
        units: UnitsJson {
            length: "m".into(),
            pixels: "px".into(),
        },
        camera: scene.cam,
        skeleton: SkeletonJson {
            joint_names: scene.skeleton.joint_names().to_vec(),
            root_index: scene.skeleton.root_index(),
            neck_index: scene.skeleton.neck_index(),
            limb_pairs: scene.skeleton.limb_pairs().to_vec(),
        },
        frame_id: scene.frame_id,
        rng_seed: scene.rng_seed,
        persons: scene
            .persons
            .iter()
            .map(|p| PersonJson {
                omega: p.omega_true,
                joints_3d: Some(p.pose3d.joints().iter().map(|j| [j.x, j.y, j.z]).collect()),
                joints_25d: None,
                occluded: Some(p.occluded.clone()),
                root_depth: None,
            })
            .collect(),
    };
    let mut text = serde_json::to_string_pretty(&json).expect("scene serialization is infallible");
    text.push('\n');
    text
}

/// Writes a scene as canonical JSON.
pub fn write_scene(scene: &SceneSample, path: impl AsRef<Path>) -> Result<(), SceneIoError> {
    let path = path.as_ref();
    std::fs::write(path, render_scene_json(scene)).map_err(|source| SceneIoError::Io {
        path: path.to_path_buf(),
        source,
    })
}
