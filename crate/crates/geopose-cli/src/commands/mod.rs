pub mod bench;
pub mod eval;
pub mod synthgen;
pub mod verify;

use anyhow::Result;
use geopose::synth::{NoiseModel, SceneConfig};

use crate::config::{ConfigFile, resolve};

/// Shared noise flags resolved against the config file.
#[derive(Debug, Clone, Copy, clap::Args)]
pub struct NoiseArgs {
    /// Gaussian pixel noise on observations / rendered offsets.
    #[arg(long)]
    pub pixel_sigma: Option<f64>,
    /// Gaussian noise on relative depths, meters.
    #[arg(long)]
    pub zrel_sigma: Option<f64>,
    /// Relative error scale on the assumed torso length.
    #[arg(long)]
    pub omega_error: Option<f64>,
    /// Probability that a non-root joint's heatmap evidence is suppressed.
    #[arg(long)]
    pub occlusion_rate: Option<f64>,
}

impl NoiseArgs {
    pub fn resolve(&self, cfg: &ConfigFile, base: NoiseModel) -> Result<NoiseModel> {
        Ok(NoiseModel {
            pixel_sigma: resolve(
                self.pixel_sigma,
                cfg.get_f64("pixel_sigma")?,
                base.pixel_sigma,
            ),
            zrel_sigma: resolve(self.zrel_sigma, cfg.get_f64("zrel_sigma")?, base.zrel_sigma),
            omega_error: resolve(
                self.omega_error,
                cfg.get_f64("omega_error")?,
                base.omega_error,
            ),
            occlusion_rate: resolve(
                self.occlusion_rate,
                cfg.get_f64("occlusion_rate")?,
                base.occlusion_rate,
            ),
        })
    }
}

/// Scene-shape flags shared by `synth-gen` and the benchmark commands.
#[derive(Debug, Clone, Copy, clap::Args)]
pub struct SceneArgs {
    /// Minimum root depth, meters.
    #[arg(long)]
    pub depth_min: Option<f64>,
    /// Maximum root depth, meters.
    #[arg(long)]
    pub depth_max: Option<f64>,
    /// Pin every torso to this exact length, meters.
    #[arg(long)]
    pub fixed_torso: Option<f64>,
    /// Minimum pixel gap between same-channel joints of different persons.
    #[arg(long)]
    pub min_joint_gap: Option<f64>,
    /// Minimum pixel gap between any joint of one person and any limb of
    /// another (the non-overlap guarantee for decoding).
    #[arg(long)]
    pub min_person_gap: Option<f64>,
    /// Minimum pixel gap between root projections.
    #[arg(long)]
    pub min_root_gap: Option<f64>,
    /// Minimum root depth separation, meters.
    #[arg(long)]
    pub min_depth_gap: Option<f64>,
}

impl SceneArgs {
    pub fn resolve(&self, cfg: &ConfigFile) -> Result<SceneConfig> {
        let mut scene = SceneConfig::default();
        scene.depth_range.0 = resolve(
            self.depth_min,
            cfg.get_f64("depth_min")?,
            scene.depth_range.0,
        );
        scene.depth_range.1 = resolve(
            self.depth_max,
            cfg.get_f64("depth_max")?,
            scene.depth_range.1,
        );
        if let Some(omega) = self.fixed_torso.or(cfg.get_f64("fixed_torso")?) {
            scene.torso_range = (omega, omega);
        }
        scene.min_same_joint_gap_px =
            resolve(self.min_joint_gap, cfg.get_f64("min_joint_gap")?, 0.0);
        scene.min_person_gap_px = resolve(self.min_person_gap, cfg.get_f64("min_person_gap")?, 0.0);
        scene.max_attempts = 20_000;
        scene.min_root_gap_px = resolve(self.min_root_gap, cfg.get_f64("min_root_gap")?, 0.0);
        scene.min_root_depth_gap_m =
            resolve(self.min_depth_gap, cfg.get_f64("min_depth_gap")?, 0.0);
        Ok(scene)
    }
}
