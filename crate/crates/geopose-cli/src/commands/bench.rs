//! `bench` and `plot`: the depth-fusion benchmark and its figures.

use std::fmt::Write as _;
use std::path::PathBuf;

use anyhow::{Context, Result};
use geopose::defaults;
use geopose::metrics::{EvalConfig, PersonObs, evaluate_frame};
use geopose::skeleton::TorsoPrior;
use geopose::synth::{
    BenchConfig, NoiseModel, RegHeadSim, SceneConfig, depth_fusion_bench, generate_scene, observe,
    propagated_geo_sigma, simulate_reg_head,
};
use geopose::uncertainty::{LossWeights, fuse_optional, total_loss};
use geopose::{Point3D, Pose3D, geodepth};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{NoiseArgs, SceneArgs};
use crate::chart::{Series, line_chart};
use crate::config::{ConfigFile, resolve, resolve_seed};

fn default_bench_noise() -> NoiseModel {
    NoiseModel {
        pixel_sigma: 2.0,
        zrel_sigma: 0.02,
        omega_error: 0.02,
        occlusion_rate: 0.0,
    }
}

#[derive(Debug, clap::Args)]
pub struct BenchArgs {
    #[arg(long)]
    pub samples: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Laplace scale of the simulated regression head.
    #[arg(long)]
    pub reg_lambda: Option<f64>,
    /// Scale on the regression head's reported sigma (1 = honest).
    #[arg(long)]
    pub reg_sigma_scale: Option<f64>,
    /// Weight on the regression loss in the combined loss readout.
    #[arg(long)]
    pub loss_weight: Option<f64>,
    /// Optional output directory for bench.csv.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[command(flatten)]
    pub noise: NoiseArgs,
    #[command(flatten)]
    pub scene: SceneArgs,
}

fn bench_config(
    samples: usize,
    seed: u64,
    noise: NoiseModel,
    reg: RegHeadSim,
    scene: SceneConfig,
) -> BenchConfig {
    BenchConfig {
        samples,
        noise,
        reg,
        scene,
        tangent_eps: defaults::TANGENT_EPS,
        seed,
    }
}

pub fn run_bench(args: BenchArgs, cfg: &ConfigFile) -> Result<u8> {
    let samples = resolve(args.samples, cfg.get_usize("samples")?, 10_000);
    let seed = resolve_seed(args.seed, cfg.get_u64("seed")?, defaults::DEFAULT_SEED)?;
    let noise = args.noise.resolve(cfg, default_bench_noise())?;
    let reg = RegHeadSim {
        lambda: resolve(args.reg_lambda, cfg.get_f64("reg_lambda")?, 0.15),
        sigma_scale: resolve(args.reg_sigma_scale, cfg.get_f64("reg_sigma_scale")?, 1.0),
    };
    let weights = LossWeights::new(resolve(
        args.loss_weight,
        cfg.get_f64("loss_weight")?,
        defaults::LOSS_WEIGHT,
    ))?;
    let scene = args.scene.resolve(cfg)?;

    let result = depth_fusion_bench(&bench_config(samples, seed, noise, reg, scene))?;
    println!(
        "depth-fusion benchmark: {} samples (seed {seed})",
        result.samples
    );
    println!("{:<12} {:>12}", "estimator", "MAE [m]");
    println!("{:<12} {:>12.6}", "regression", result.reg_mae_m);
    println!("{:<12} {:>12.6}", "geometry", result.geo_mae_m);
    println!("{:<12} {:>12.6}", "fused", result.fused_mae_m);
    println!("geo rejections: {}", result.geo_rejected);
    println!(
        "torso-prior sensitivity: mean |dZ/dOmega| = {:.3} m per m of prior",
        result.omega_sensitivity_mean
    );
    println!(
        "mean losses: reg {:.4}, geo {:.4}, combined (weight {}) {:.4}",
        result.reg_loss_mean,
        result.geo_loss_mean,
        weights.omega_w,
        total_loss(result.geo_loss_mean, result.reg_loss_mean, &weights)
    );
    let floor = result.reg_mae_m.min(result.geo_mae_m);
    if result.fused_mae_m <= floor {
        println!("fusion dominates both single estimators");
    } else {
        println!(
            "fusion does NOT dominate (fused {:.6} vs best single {:.6})",
            result.fused_mae_m, floor
        );
    }

    if let Some(out) = &args.out {
        std::fs::create_dir_all(out)
            .with_context(|| format!("cannot create output directory {}", out.display()))?;
        let mut csv = String::from("estimator,mae_m\n");
        writeln!(csv, "regression,{:.9}", result.reg_mae_m).unwrap();
        writeln!(csv, "geometry,{:.9}", result.geo_mae_m).unwrap();
        writeln!(csv, "fused,{:.9}", result.fused_mae_m).unwrap();
        std::fs::write(out.join("bench.csv"), csv)?;
    }
    Ok(0)
}

#[derive(Debug, clap::Args)]
pub struct PlotArgs {
    /// Output directory for SVG figures and their CSV twins.
    #[arg(long)]
    pub out: PathBuf,
    /// Samples per benchmark point.
    #[arg(long)]
    pub samples: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
}

/// PCOD of fused depths on two-person frames whose roots are exactly `gap`
/// meters apart.
fn pcod_at_gap(gap: f64, frames: usize, seed: u64, noise: &NoiseModel) -> Result<f64> {
    let scene_cfg = SceneConfig {
        min_root_gap_px: 60.0,
        ..SceneConfig::default()
    };
    let eval_cfg = EvalConfig::default();
    let reg = RegHeadSim::honest(0.15);
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9C0D);
    let mut correct = 0u64;
    let mut total = 0u64;
    for f in 0..frames {
        let mut scene = generate_scene(2, seed.wrapping_add(f as u64), &scene_cfg)?;
        // Pin the depth gap exactly by sliding the second person along z.
        let root_i = scene.skeleton.root_index();
        let z0 = scene.persons[0].pose3d.joint(root_i).z;
        let z1 = scene.persons[1].pose3d.joint(root_i).z;
        scene.persons[1].pose3d = scene.persons[1].pose3d.translated(0.0, 0.0, z0 + gap - z1);

        let obs = observe(&scene, noise, seed.wrapping_add(0x0B5 ^ f as u64))?;
        let mut pred = Vec::new();
        let mut gt = Vec::new();
        for (person, o) in scene.persons.iter().zip(&obs) {
            let omega = TorsoPrior::new(o.omega_assumed)?;
            let geo = match geodepth::geo_depth(&o.pose, &scene.cam, &omega, &scene.skeleton) {
                Ok(r) if r.is_physical() => {
                    let sigma = propagated_geo_sigma(
                        &o.pose,
                        &scene.cam,
                        &omega,
                        &scene.skeleton,
                        noise.pixel_sigma,
                        noise.zrel_sigma,
                        o.omega_assumed * noise.omega_error,
                        defaults::TANGENT_EPS,
                    )
                    .unwrap_or(defaults::SIGMA_FLOOR);
                    Some(geopose::DepthEstimate { z: r.z_geo, sigma })
                }
                _ => None,
            };
            let reg_est = simulate_reg_head(o.z_root_true, &reg, &mut rng);
            let fused = fuse_optional(Some(reg_est), geo)?.expect("reg always present");
            // Only root depths matter for the ordinal metric; place a
            // one-joint surrogate at the root.
            let root3d = person.pose3d.joint(root_i);
            pred.push(PersonObs {
                pose2d: o.pose.clone(),
                pose3d: pose_with_root_depth(&person.pose3d, root_i, fused.z),
            });
            gt.push(PersonObs {
                pose2d: o.pose.clone(),
                pose3d: person.pose3d.clone(),
            });
            let _ = root3d;
        }
        let stats = evaluate_frame(&pred, &gt, root_i, &eval_cfg);
        correct += stats.pcod_correct;
        total += stats.pcod_total;
    }
    Ok(if total == 0 {
        100.0
    } else {
        100.0 * correct as f64 / total as f64
    })
}

fn pose_with_root_depth(pose: &Pose3D, root_i: usize, z: f64) -> Pose3D {
    let dz = z - pose.joint(root_i).z;
    let joints: Vec<Point3D> = pose
        .joints()
        .iter()
        .map(|p| Point3D::new(p.x, p.y, p.z + dz))
        .collect();
    Pose3D::all_valid(joints)
}

pub fn run_plot(args: PlotArgs, cfg: &ConfigFile) -> Result<u8> {
    let samples = resolve(args.samples, cfg.get_usize("samples")?, 2000);
    let seed = resolve_seed(args.seed, cfg.get_u64("seed")?, defaults::DEFAULT_SEED)?;
    if samples == 0 {
        println!("plot: WARNING empty benchmark (0 samples), no figures produced");
        return Ok(0);
    }
    std::fs::create_dir_all(&args.out)
        .with_context(|| format!("cannot create output directory {}", args.out.display()))?;
    let scene = SceneConfig::default();

    // Figure 1: estimator error versus observation noise scale.
    let noise_scales = [0.0, 0.5, 1.0, 2.0, 4.0];
    let mut rows = Vec::new();
    for &s in &noise_scales {
        let base = default_bench_noise();
        let noise = NoiseModel {
            pixel_sigma: base.pixel_sigma * s,
            zrel_sigma: base.zrel_sigma * s,
            omega_error: base.omega_error * s,
            occlusion_rate: 0.0,
        };
        let r = depth_fusion_bench(&bench_config(
            samples,
            seed,
            noise,
            RegHeadSim::honest(0.15),
            scene.clone(),
        ))?;
        rows.push((s, r));
    }
    let mut csv = String::from("noise_scale,reg_mae_m,geo_mae_m,fused_mae_m\n");
    for (s, r) in &rows {
        writeln!(
            csv,
            "{s},{:.9},{:.9},{:.9}",
            r.reg_mae_m, r.geo_mae_m, r.fused_mae_m
        )
        .unwrap();
    }
    std::fs::write(args.out.join("error_vs_noise.csv"), &csv)?;
    let svg = line_chart(
        "Depth error vs observation noise",
        "noise scale",
        "MAE [m]",
        &[
            Series {
                label: "regression".into(),
                points: rows.iter().map(|(s, r)| (*s, r.reg_mae_m)).collect(),
            },
            Series {
                label: "geometry".into(),
                points: rows.iter().map(|(s, r)| (*s, r.geo_mae_m)).collect(),
            },
            Series {
                label: "fused".into(),
                points: rows.iter().map(|(s, r)| (*s, r.fused_mae_m)).collect(),
            },
        ],
    );
    std::fs::write(args.out.join("error_vs_noise.svg"), svg)?;

    // Figure 2: fused versus single estimators as the regression head degrades.
    let lambdas = [0.05, 0.1, 0.2, 0.4, 0.8];
    let mut rows = Vec::new();
    for &l in &lambdas {
        let r = depth_fusion_bench(&bench_config(
            samples,
            seed,
            default_bench_noise(),
            RegHeadSim::honest(l),
            scene.clone(),
        ))?;
        rows.push((l, r));
    }
    let mut csv = String::from("reg_lambda,reg_mae_m,geo_mae_m,fused_mae_m\n");
    for (l, r) in &rows {
        writeln!(
            csv,
            "{l},{:.9},{:.9},{:.9}",
            r.reg_mae_m, r.geo_mae_m, r.fused_mae_m
        )
        .unwrap();
    }
    std::fs::write(args.out.join("fusion_vs_single.csv"), &csv)?;
    let svg = line_chart(
        "Fusion vs single estimators",
        "regression noise scale [m]",
        "MAE [m]",
        &[
            Series {
                label: "regression".into(),
                points: rows.iter().map(|(l, r)| (*l, r.reg_mae_m)).collect(),
            },
            Series {
                label: "geometry".into(),
                points: rows.iter().map(|(l, r)| (*l, r.geo_mae_m)).collect(),
            },
            Series {
                label: "fused".into(),
                points: rows.iter().map(|(l, r)| (*l, r.fused_mae_m)).collect(),
            },
        ],
    );
    std::fs::write(args.out.join("fusion_vs_single.svg"), svg)?;

    // Figure 3: ordinal-depth accuracy versus true root depth gap.
    let gaps = [0.02, 0.05, 0.1, 0.2, 0.5, 1.0];
    let frames = (samples / 10).max(50);
    let mut rows = Vec::new();
    for &g in &gaps {
        let pcod = pcod_at_gap(g, frames, seed, &default_bench_noise())?;
        rows.push((g, pcod));
    }
    let mut csv = String::from("depth_gap_m,pcod_percent\n");
    for (g, p) in &rows {
        writeln!(csv, "{g},{p:.6}").unwrap();
    }
    std::fs::write(args.out.join("pcod_vs_depth_gap.csv"), &csv)?;
    let svg = line_chart(
        "Ordinal depth accuracy vs root depth gap",
        "true depth gap [m]",
        "PCOD [%]",
        &[Series {
            label: "fused".into(),
            points: rows.clone(),
        }],
    );
    std::fs::write(args.out.join("pcod_vs_depth_gap.svg"), svg)?;

    println!(
        "plot: wrote 3 figure(s) with CSV twins to {}",
        args.out.display()
    );
    Ok(0)
}
