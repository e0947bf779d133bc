//! Dense-map rendering for the synthetic verification loop.
//!
//! Heatmaps hold an isotropic Gaussian per visible joint, max-combined across
//! persons. Affinity fields hold the limb's unit direction inside a corridor
//! around the segment, averaged where limbs overlap. Offset triples are
//! written into a disk of cells around each person's root; where two disks
//! contest a cell the person with the nearer root wins.
//!
//! Offsets can be jittered per person and joint to model the precision gap
//! between appearance-based peaks and regressed offsets: heatmaps stay exact
//! while the offset branch carries configurable pixel and depth noise.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::{DecodeError, DenseMaps};
use crate::defaults;
use crate::skeleton::{Pose25D, SkeletonDef};

/// Rendering parameters for one map grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RenderConfig {
    pub width_cells: usize,
    pub height_cells: usize,
    pub stride: usize,
    /// Gaussian standard deviation, cells.
    pub sigma_cells: f64,
    /// Gaussians are written out to this many standard deviations.
    pub cutoff_sigmas: f64,
    /// Half width of the affinity corridor, cells.
    pub paf_half_width_cells: f64,
    /// Radius of the root-anchored offset disk, cells.
    pub offset_radius_cells: f64,
    /// Gaussian pixel noise on rendered offset targets (0 = exact).
    pub offset_jitter_px: f64,
    /// Gaussian depth noise on rendered offset depths (0 = exact).
    pub zrel_jitter_m: f64,
    pub jitter_seed: u64,
}

impl RenderConfig {
    /// Grid that covers a `width_px` by `height_px` canvas at the default stride.
    pub fn for_canvas(width_px: usize, height_px: usize, stride: usize) -> Self {
        RenderConfig {
            width_cells: width_px.div_ceil(stride),
            height_cells: height_px.div_ceil(stride),
            stride,
            sigma_cells: defaults::HEATMAP_SIGMA_CELLS,
            cutoff_sigmas: 4.0,
            paf_half_width_cells: defaults::PAF_HALF_WIDTH_CELLS,
            offset_radius_cells: defaults::OFFSET_DISK_RADIUS_CELLS,
            offset_jitter_px: 0.0,
            zrel_jitter_m: 0.0,
            jitter_seed: 0,
        }
    }
}

impl Default for RenderConfig {
    fn default() -> Self {
        let (w, h) = defaults::CANVAS_PX;
        RenderConfig::for_canvas(w, h, defaults::DEFAULT_STRIDE)
    }
}

/// One person to render: projected 2.5D pose, absolute root depth for
/// occlusion ordering, and per-joint heatmap suppression flags.
#[derive(Debug, Clone)]
pub struct RenderPerson<'a> {
    pub pose: &'a Pose25D,
    pub z_root: f64,
    pub occluded: &'a [bool],
}

/// Renders heatmaps, affinity fields, and offset maps for a set of persons.
pub fn render_maps(
    skel: &SkeletonDef,
    persons: &[RenderPerson<'_>],
    cfg: &RenderConfig,
) -> Result<DenseMaps, DecodeError> {
    let mut maps = DenseMaps::zeroed(
        cfg.width_cells,
        cfg.height_cells,
        cfg.stride,
        skel.joint_count(),
        skel.limb_pairs().len(),
    )?;
    let stride = cfg.stride as f64;
    let (w, h) = (cfg.width_cells as i64, cfg.height_cells as i64);

    // Heatmaps: max-combined Gaussians at each visible joint.
    let reach = (cfg.sigma_cells * cfg.cutoff_sigmas).ceil() as i64;
    let inv_two_sigma2 = 1.0 / (2.0 * cfg.sigma_cells * cfg.sigma_cells);
    for person in persons {
        for k in 0..skel.joint_count() {
            if !person.pose.is_valid(k) || person.occluded.get(k).copied().unwrap_or(false) {
                continue;
            }
            let joint = person.pose.joint(k);
            let gx = joint.u / stride;
            let gy = joint.v / stride;
            // A joint whose center falls outside the cell lattice is not
            // visible: a clipped Gaussian would put its maximum at the
            // border cell, several pixels from the truth. Such joints are
            // carried by the offset maps alone.
            if gx < 0.0 || gy < 0.0 || gx > (w - 1) as f64 || gy > (h - 1) as f64 {
                continue;
            }
            let x0 = ((gx - reach as f64).floor() as i64).max(0);
            let x1 = ((gx + reach as f64).ceil() as i64).min(w - 1);
            let y0 = ((gy - reach as f64).floor() as i64).max(0);
            let y1 = ((gy + reach as f64).ceil() as i64).min(h - 1);
            for y in y0..=y1 {
                for x in x0..=x1 {
                    let d2 = (x as f64 - gx).powi(2) + (y as f64 - gy).powi(2);
                    if d2 > (reach as f64).powi(2) {
                        continue;
                    }
                    let val = (-d2 * inv_two_sigma2).exp() as f32;
                    maps.heatmap_set_max(k, x as usize, y as usize, val);
                }
            }
        }
    }

    // Affinity fields: unit direction inside the corridor, averaged on overlap.
    let mut paf_counts = vec![0u32; skel.limb_pairs().len() * cfg.width_cells * cfg.height_cells];
    for person in persons {
        for (limb, &(ja, jb)) in skel.limb_pairs().iter().enumerate() {
            if !person.pose.is_valid(ja) || !person.pose.is_valid(jb) {
                continue;
            }
            let a = person.pose.joint(ja);
            let b = person.pose.joint(jb);
            let (ax, ay) = (a.u / stride, a.v / stride);
            let (bx, by) = (b.u / stride, b.v / stride);
            let (dx, dy) = (bx - ax, by - ay);
            let len = (dx * dx + dy * dy).sqrt();
            if len < 1e-9 {
                continue;
            }
            let (ux, uy) = (dx / len, dy / len);
            let pad = cfg.paf_half_width_cells + 1.0;
            let x0 = ((ax.min(bx) - pad).floor() as i64).max(0);
            let x1 = ((ax.max(bx) + pad).ceil() as i64).min(w - 1);
            let y0 = ((ay.min(by) - pad).floor() as i64).max(0);
            let y1 = ((ay.max(by) + pad).ceil() as i64).min(h - 1);
            for y in y0..=y1 {
                for x in x0..=x1 {
                    let px = x as f64 - ax;
                    let py = y as f64 - ay;
                    let along = px * ux + py * uy;
                    let across = (px * uy - py * ux).abs();
                    if along < 0.0 || along > len || across > cfg.paf_half_width_cells {
                        continue;
                    }
                    maps.paf_add(limb, x as usize, y as usize, ux as f32, uy as f32);
                    paf_counts[limb * cfg.width_cells * cfg.height_cells
                        + y as usize * cfg.width_cells
                        + x as usize] += 1;
                }
            }
        }
    }
    for limb in 0..skel.limb_pairs().len() {
        for y in 0..cfg.height_cells {
            for x in 0..cfg.width_cells {
                let count =
                    paf_counts[limb * cfg.width_cells * cfg.height_cells + y * cfg.width_cells + x];
                if count > 1 {
                    maps.paf_scale(limb, x, y, 1.0 / count as f32);
                }
            }
        }
    }

    // Offsets: disks around each root, written far-to-near so the nearer
    // root owns contested cells. Jitter is drawn per person and joint in a
    // fixed order regardless of depth sorting, so the same scene renders the
    // same bytes no matter how persons are ordered by depth.
    let mut jitter: Vec<Vec<(f64, f64, f64)>> = Vec::with_capacity(persons.len());
    if cfg.offset_jitter_px > 0.0 || cfg.zrel_jitter_m > 0.0 {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.jitter_seed);
        let px = Normal::new(0.0, cfg.offset_jitter_px.max(1e-300)).unwrap();
        let zm = Normal::new(0.0, cfg.zrel_jitter_m.max(1e-300)).unwrap();
        for _ in persons {
            let mut per_joint = Vec::with_capacity(skel.joint_count());
            for _ in 0..skel.joint_count() {
                let ju = if cfg.offset_jitter_px > 0.0 {
                    px.sample(&mut rng)
                } else {
                    0.0
                };
                let jv = if cfg.offset_jitter_px > 0.0 {
                    px.sample(&mut rng)
                } else {
                    0.0
                };
                let jz = if cfg.zrel_jitter_m > 0.0 {
                    zm.sample(&mut rng)
                } else {
                    0.0
                };
                per_joint.push((ju, jv, jz));
            }
            jitter.push(per_joint);
        }
    } else {
        jitter.resize(persons.len(), Vec::new());
    }

    let mut order: Vec<usize> = (0..persons.len()).collect();
    order.sort_by(|&i, &j| {
        persons[j]
            .z_root
            .partial_cmp(&persons[i].z_root)
            .unwrap()
            .then(i.cmp(&j))
    });
    let radius2 = cfg.offset_radius_cells * cfg.offset_radius_cells;
    for &pi in &order {
        let person = &persons[pi];
        let root = person.pose.joint(skel.root_index());
        let rx = root.u / stride;
        let ry = root.v / stride;
        let cx = rx.round() as i64;
        let cy = ry.round() as i64;
        let r = cfg.offset_radius_cells.ceil() as i64;
        for y in (cy - r).max(0)..=(cy + r).min(h - 1) {
            for x in (cx - r).max(0)..=(cx + r).min(w - 1) {
                let d2 = (x as f64 - cx as f64).powi(2) + (y as f64 - cy as f64).powi(2);
                if d2 > radius2 {
                    continue;
                }
                for k in 0..skel.joint_count() {
                    let Some(slot) = skel.offset_slot(k) else {
                        continue;
                    };
                    if !person.pose.is_valid(k) {
                        continue;
                    }
                    let joint = person.pose.joint(k);
                    let (ju, jv, jz) = jitter
                        .get(pi)
                        .and_then(|j| j.get(k))
                        .copied()
                        .unwrap_or((0.0, 0.0, 0.0));
                    maps.offset_set(
                        slot,
                        x as usize,
                        y as usize,
                        (
                            (joint.u + ju - root.u) as f32,
                            (joint.v + jv - root.v) as f32,
                            (joint.z_rel + jz) as f32,
                        ),
                    );
                }
            }
        }
    }

    Ok(maps)
}
