//! `eval`: the batch pipeline driver.
//!
//! Scenes come from JSON fixtures; dense maps are either rendered on the fly
//! or read from externally produced tensors (`--maps`). Frames are processed
//! in a worker pool and aggregated in frame order, so the written reports
//! are byte-identical across runs and worker counts.

use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use geopose::defaults;
use geopose::io::{
    EvalDocument, RegimeReport, ReportFormat, read_dense_maps, read_scene, render_report_csv,
    render_report_text, write_report,
};
use geopose::metrics::{EvalConfig, EvalReport, FrameStats, evaluate_frame};
use geopose::posedecode::{DenseMaps, RenderConfig};
use geopose::synth::{
    NoiseModel, PipelineConfig, PipelineToggles, RegHeadSim, SceneSample, end_to_end_case,
    evaluate_with_maps,
};
use rayon::prelude::*;

use super::NoiseArgs;
use crate::config::{ConfigFile, resolve, resolve_seed};

#[derive(Debug, clap::Args)]
pub struct EvalArgs {
    /// Scene JSON file or a directory of scene_*.json fixtures.
    #[arg(long)]
    pub scenes: PathBuf,
    /// Directory of dense-map tensors paired with the sorted scenes.
    #[arg(long)]
    pub maps: Option<PathBuf>,
    /// Output directory for report files.
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Worker threads for frame-level parallelism.
    #[arg(long)]
    pub workers: Option<usize>,
    /// Assumed torso prior, meters.
    #[arg(long)]
    pub omega: Option<f64>,
    /// Absolute torso-prior uncertainty used for error propagation.
    #[arg(long)]
    pub omega_sigma: Option<f64>,
    /// Laplace scale of the simulated regression head.
    #[arg(long)]
    pub reg_lambda: Option<f64>,
    /// Scale on the regression head's reported sigma (1 = honest).
    #[arg(long)]
    pub reg_sigma_scale: Option<f64>,
    /// Heatmap confidence gate of the structured decoder.
    #[arg(long)]
    pub score_threshold: Option<f64>,
    #[arg(long)]
    pub pck_threshold: Option<f64>,
    #[arg(long)]
    pub match_threshold: Option<f64>,
    #[arg(long)]
    pub tangent_eps: Option<f64>,
    #[arg(long)]
    pub stride: Option<usize>,
    #[arg(long)]
    pub canvas_width: Option<usize>,
    #[arg(long)]
    pub canvas_height: Option<usize>,
    #[arg(long)]
    pub no_heatmap: bool,
    #[arg(long)]
    pub no_offset: bool,
    #[arg(long)]
    pub no_geo: bool,
    #[arg(long)]
    pub no_reg: bool,
    #[arg(long)]
    pub no_fusion: bool,
    /// Run every ablation row and write one report set per row.
    #[arg(long)]
    pub ablation_sweep: bool,
    #[command(flatten)]
    pub noise: NoiseArgs,
}

/// One ablation row: a label plus its toggle combination.
fn ablation_rows(base: PipelineToggles) -> Vec<(&'static str, PipelineToggles)> {
    vec![
        ("full", base),
        (
            "wo_offset",
            PipelineToggles {
                use_offset: false,
                ..base
            },
        ),
        (
            "wo_heatmap",
            PipelineToggles {
                use_heatmap: false,
                ..base
            },
        ),
        (
            "wo_fusion",
            PipelineToggles {
                use_fusion: false,
                ..base
            },
        ),
    ]
}

fn collect_sorted(dir_or_file: &Path, extension: &str) -> Result<Vec<PathBuf>> {
    if dir_or_file.is_file() {
        return Ok(vec![dir_or_file.to_path_buf()]);
    }
    let mut files: Vec<PathBuf> = std::fs::read_dir(dir_or_file)
        .with_context(|| format!("cannot list {}", dir_or_file.display()))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|e| e == extension))
        .collect();
    files.sort();
    Ok(files)
}

struct FrameResult {
    frame_id: u64,
    all_people: FrameStats,
    matched: FrameStats,
}

fn run_frames(
    scenes: &[SceneSample],
    maps: Option<&[DenseMaps]>,
    noise: &NoiseModel,
    pipeline: &PipelineConfig,
    workers: usize,
) -> Result<Vec<FrameResult>> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .context("cannot build worker pool")?;
    let matched_cfg = EvalConfig {
        include_unmatched: false,
        ..pipeline.eval
    };
    let mut results: Vec<FrameResult> = pool.install(|| {
        scenes
            .par_iter()
            .enumerate()
            .map(|(i, scene)| -> Result<FrameResult> {
                let outcome = match maps {
                    Some(m) => evaluate_with_maps(scene, &m[i], noise, pipeline)?,
                    None => end_to_end_case(scene, noise, pipeline)?,
                };
                let root = scene.skeleton.root_index();
                let matched = evaluate_frame(&outcome.predictions, &outcome.gt, root, &matched_cfg);
                Ok(FrameResult {
                    frame_id: scene.frame_id,
                    all_people: outcome.stats,
                    matched,
                })
            })
            .collect::<Result<Vec<_>>>()
    })?;
    results.sort_by_key(|r| r.frame_id);
    Ok(results)
}

fn document(results: &[FrameResult]) -> EvalDocument {
    let mut doc = EvalDocument::default();
    for (label, pick) in [
        (
            "all_people",
            (|r: &FrameResult| r.all_people) as fn(&FrameResult) -> FrameStats,
        ),
        ("matched", |r: &FrameResult| r.matched),
    ] {
        let mut total = FrameStats::default();
        let mut frames = Vec::with_capacity(results.len());
        for r in results {
            let stats = pick(r);
            total.merge(&stats);
            frames.push((r.frame_id, EvalReport::from_stats(&stats)));
        }
        doc.regimes.push(RegimeReport {
            label: label.to_string(),
            frames,
            summary: EvalReport::from_stats(&total),
        });
    }
    doc
}

pub fn run(args: EvalArgs, cfg: &ConfigFile) -> Result<u8> {
    if !args.scenes.exists() {
        eprintln!(
            "error: scenes path {} does not exist",
            args.scenes.display()
        );
        return Ok(2);
    }
    let seed = resolve_seed(args.seed, cfg.get_u64("seed")?, defaults::DEFAULT_SEED)?;
    let workers = resolve(args.workers, cfg.get_usize("workers")?, 1);
    let stride = resolve(
        args.stride,
        cfg.get_usize("stride")?,
        defaults::DEFAULT_STRIDE,
    );
    let canvas_w = resolve(
        args.canvas_width,
        cfg.get_usize("canvas_width")?,
        defaults::CANVAS_PX.0,
    );
    let canvas_h = resolve(
        args.canvas_height,
        cfg.get_usize("canvas_height")?,
        defaults::CANVAS_PX.1,
    );
    let noise = args.noise.resolve(cfg, NoiseModel::NONE)?;

    let mut pipeline = PipelineConfig {
        render: RenderConfig::for_canvas(canvas_w, canvas_h, stride),
        seed,
        ..PipelineConfig::default()
    };
    pipeline.omega_prior = resolve(args.omega, cfg.get_f64("omega")?, defaults::TORSO_PRIOR_M);
    pipeline.omega_prior_sigma = resolve(args.omega_sigma, cfg.get_f64("omega_sigma")?, 0.0);
    pipeline.reg = RegHeadSim {
        lambda: resolve(args.reg_lambda, cfg.get_f64("reg_lambda")?, 0.0),
        sigma_scale: resolve(args.reg_sigma_scale, cfg.get_f64("reg_sigma_scale")?, 1.0),
    };
    pipeline.tangent_eps = resolve(
        args.tangent_eps,
        cfg.get_f64("tangent_eps")?,
        defaults::TANGENT_EPS,
    );
    pipeline.decode.score_threshold = resolve(
        args.score_threshold,
        cfg.get_f64("score_threshold")?,
        defaults::PEAK_SCORE_THRESHOLD,
    );
    pipeline.eval.pck_threshold_m = resolve(
        args.pck_threshold,
        cfg.get_f64("pck_threshold")?,
        defaults::PCK_THRESHOLD_M,
    );
    pipeline.eval.match_threshold_px = resolve(
        args.match_threshold,
        cfg.get_f64("match_threshold")?,
        defaults::MATCH_THRESHOLD_PX,
    );
    pipeline.toggles = PipelineToggles {
        use_heatmap: !args.no_heatmap && cfg.get_bool("use_heatmap")?.unwrap_or(true),
        use_offset: !args.no_offset && cfg.get_bool("use_offset")?.unwrap_or(true),
        use_geo: !args.no_geo && cfg.get_bool("use_geo")?.unwrap_or(true),
        use_reg: !args.no_reg && cfg.get_bool("use_reg")?.unwrap_or(true),
        use_fusion: !args.no_fusion && cfg.get_bool("use_fusion")?.unwrap_or(true),
    };
    if pipeline.toggles.validate().is_err() {
        eprintln!(
            "error: at least one of the geometric and regression depth sources must stay enabled"
        );
        return Ok(2);
    }

    let scene_paths = collect_sorted(&args.scenes, "json")?;
    let mut scenes = Vec::with_capacity(scene_paths.len());
    for path in &scene_paths {
        scenes.push(read_scene(path).map_err(|e| anyhow::anyhow!("{e}"))?);
    }

    let maps = match &args.maps {
        Some(dir) => {
            if !dir.exists() {
                eprintln!("error: maps path {} does not exist", dir.display());
                return Ok(2);
            }
            let map_paths = collect_sorted(dir, "gpdm")?;
            if map_paths.len() != scenes.len() {
                eprintln!(
                    "error: {} map tensor(s) in {} but {} scene(s) in {}",
                    map_paths.len(),
                    dir.display(),
                    scenes.len(),
                    args.scenes.display()
                );
                return Ok(2);
            }
            let mut all = Vec::with_capacity(map_paths.len());
            for (path, scene) in map_paths.iter().zip(&scenes) {
                let maps = read_dense_maps(path).map_err(|e| anyhow::anyhow!("{e}"))?;
                if maps.joint_count() != scene.skeleton.joint_count()
                    || maps.limb_count() != scene.skeleton.limb_pairs().len()
                {
                    eprintln!(
                        "error: {} holds {} joints / {} limbs but the skeleton defines {} / {}",
                        path.display(),
                        maps.joint_count(),
                        maps.limb_count(),
                        scene.skeleton.joint_count(),
                        scene.skeleton.limb_pairs().len()
                    );
                    return Ok(2);
                }
                all.push(maps);
            }
            Some(all)
        }
        None => None,
    };

    std::fs::create_dir_all(&args.out)
        .with_context(|| format!("cannot create output directory {}", args.out.display()))?;

    let rows: Vec<(&str, PipelineToggles)> = if args.ablation_sweep {
        ablation_rows(pipeline.toggles)
    } else {
        vec![("report", pipeline.toggles)]
    };
    for (label, toggles) in rows {
        let mut row_pipeline = pipeline.clone();
        row_pipeline.toggles = toggles;
        let results = run_frames(&scenes, maps.as_deref(), &noise, &row_pipeline, workers)?;
        let doc = document(&results);
        write_report(
            &doc,
            args.out.join(format!("{label}.csv")),
            ReportFormat::Csv,
        )
        .map_err(|e| anyhow::anyhow!("{e}"))?;
        write_report(
            &doc,
            args.out.join(format!("{label}.txt")),
            ReportFormat::Text,
        )
        .map_err(|e| anyhow::anyhow!("{e}"))?;
        println!("== {label} ==");
        print!("{}", render_report_text(&doc));
        let _ = render_report_csv(&doc);
    }
    Ok(0)
}
