//! `synth-gen`: deterministic scene fixtures and optional dense-map tensors.

use std::path::PathBuf;

use anyhow::{Context, Result};
use geopose::defaults;
use geopose::io::{write_dense_maps, write_scene};
use geopose::posedecode::RenderConfig;
use geopose::synth::{apply_occlusion, generate_scene, render_scene};

use super::SceneArgs;
use crate::config::{ConfigFile, resolve, resolve_seed};

#[derive(Debug, clap::Args)]
pub struct SynthGenArgs {
    /// Output directory for scene_NNNNN.json files.
    #[arg(long)]
    pub out: PathBuf,
    /// Number of frames to generate.
    #[arg(long)]
    pub frames: Option<usize>,
    /// Persons per frame.
    #[arg(long)]
    pub persons: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Bake heatmap-suppression flags into the scenes at this rate.
    #[arg(long)]
    pub occlusion_rate: Option<f64>,
    /// Also render dense maps into this directory as maps_NNNNN.gpdm.
    #[arg(long)]
    pub maps_out: Option<PathBuf>,
    #[arg(long)]
    pub stride: Option<usize>,
    /// JSON skeleton definition (joint_names, root_index, neck_index,
    /// limb_pairs); defaults to the built-in 15-joint set.
    #[arg(long)]
    pub skeleton: Option<PathBuf>,
    #[command(flatten)]
    pub scene: SceneArgs,
}

fn mix(base: u64, salt: u64) -> u64 {
    let mut z = base ^ salt.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn run(args: SynthGenArgs, cfg: &ConfigFile) -> Result<u8> {
    let frames = resolve(args.frames, cfg.get_usize("frames")?, 3);
    let persons = resolve(args.persons, cfg.get_usize("persons")?, 3);
    let seed = resolve_seed(args.seed, cfg.get_u64("seed")?, defaults::DEFAULT_SEED)?;
    let occlusion = resolve(args.occlusion_rate, cfg.get_f64("occlusion_rate")?, 0.0);
    let stride = resolve(
        args.stride,
        cfg.get_usize("stride")?,
        defaults::DEFAULT_STRIDE,
    );
    let mut scene_cfg = args.scene.resolve(cfg)?;
    let skeleton_path = args
        .skeleton
        .clone()
        .or_else(|| cfg.get_str("skeleton_path").map(PathBuf::from));
    if let Some(path) = skeleton_path {
        let text = std::fs::read_to_string(&path)
            .with_context(|| format!("cannot read skeleton file {}", path.display()))?;
        scene_cfg.skeleton = serde_json::from_str(&text)
            .with_context(|| format!("invalid skeleton in {}", path.display()))?;
    }

    std::fs::create_dir_all(&args.out)
        .with_context(|| format!("cannot create output directory {}", args.out.display()))?;
    if let Some(maps_dir) = &args.maps_out {
        std::fs::create_dir_all(maps_dir)
            .with_context(|| format!("cannot create maps directory {}", maps_dir.display()))?;
    }
    let render_cfg = RenderConfig::for_canvas(
        scene_cfg.canvas_width_px,
        scene_cfg.canvas_height_px,
        stride,
    );

    for f in 0..frames {
        let mut scene = generate_scene(persons, mix(seed, f as u64), &scene_cfg)?;
        scene.frame_id = f as u64;
        if occlusion > 0.0 {
            scene = apply_occlusion(&scene, occlusion, mix(seed, 0x0CC ^ f as u64));
        }
        let path = args.out.join(format!("scene_{f:05}.json"));
        write_scene(&scene, &path)?;
        if let Some(maps_dir) = &args.maps_out {
            let maps = render_scene(&scene, &render_cfg)?;
            write_dense_maps(&maps, maps_dir.join(format!("maps_{f:05}.gpdm")))?;
        }
    }
    println!(
        "wrote {frames} scene(s) with {persons} person(s) each to {} (seed {seed})",
        args.out.display()
    );
    Ok(0)
}
