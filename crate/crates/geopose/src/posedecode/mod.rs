//! Structured 2.5D pose decoding from dense maps.
//!
//! The decoder consumes three map families sharing one grid and stride:
//! per-joint heatmaps, one 2D part-affinity field per limb, and root-anchored
//! offset triples `(Δu, Δv, Δz_rel)` for every non-root joint. Grid
//! coordinates are image pixels divided by the stride; a joint at pixel
//! `(u, v)` sits at grid position `(u / stride, v / stride)` with no
//! half-cell shift.
//!
//! Decoding runs in four stages:
//!
//! 1. [`extract_peaks`] — strict local maxima above a score floor, suppressed
//!    within a radius, refined to sub-cell precision by a quadratic fit on
//!    log activations.
//! 2. [`group_by_paf`] — line-integral scoring of candidate limbs against the
//!    affinity field, greedy per-limb assignment, union into persons. Every
//!    grouped person keeps at most one peak per channel because the limb
//!    pairs form a tree.
//! 3. [`decode_offsets`] — the fallback pose read from the offset triples at
//!    the root cell; pure unclamped arithmetic, so joints may land outside
//!    the image.
//! 4. [`fuse_structured`] — per joint, the heatmap position wins when its
//!    peak score reaches the confidence threshold, otherwise the offset
//!    position; relative depth always comes from the offset branch, which is
//!    the only branch that carries depth.

mod render;

pub use render::{RenderConfig, RenderPerson, render_maps};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::camera::Point25D;
use crate::defaults;
use crate::skeleton::{JointSource, Pose25D, SkeletonDef};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DecodeError {
    #[error("root ({u:.1}, {v:.1}) px lies outside the {width}x{height} px image")]
    OutOfBounds {
        u: f64,
        v: f64,
        width: usize,
        height: usize,
    },
    #[error("inconsistent map shape: {0}")]
    ShapeMismatch(String),
    #[error("heatmap channel {channel} holds {value} outside [0, 1]")]
    HeatmapRange { channel: usize, value: f32 },
    #[error("stride must be positive")]
    ZeroStride,
    #[error("at least one of the heatmap and offset branches must be enabled")]
    NoBranchesEnabled,
}

/// Dense network outputs (or their synthetic stand-ins) on one grid.
///
/// Planes are stored row-major as `f32`, matching the on-disk tensor format
/// bit for bit: `joint_count` heatmap planes, `2·limb_count` affinity planes
/// (per limb: x then y), and `3·(joint_count − 1)` offset planes (per
/// non-root slot: Δu, Δv, Δz_rel in px, px, meters).
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMaps {
    width: usize,
    height: usize,
    stride: usize,
    joint_count: usize,
    limb_count: usize,
    heatmaps: Vec<f32>,
    pafs: Vec<f32>,
    offsets: Vec<f32>,
}

impl DenseMaps {
    pub fn zeroed(
        width: usize,
        height: usize,
        stride: usize,
        joint_count: usize,
        limb_count: usize,
    ) -> Result<Self, DecodeError> {
        if stride == 0 {
            return Err(DecodeError::ZeroStride);
        }
        let cells = width * height;
        Ok(DenseMaps {
            width,
            height,
            stride,
            joint_count,
            limb_count,
            heatmaps: vec![0.0; joint_count * cells],
            pafs: vec![0.0; 2 * limb_count * cells],
            offsets: vec![0.0; 3 * joint_count.saturating_sub(1) * cells],
        })
    }

    /// Assembles maps from raw planes, validating every dimension.
    pub fn from_planes(
        width: usize,
        height: usize,
        stride: usize,
        joint_count: usize,
        limb_count: usize,
        heatmaps: Vec<f32>,
        pafs: Vec<f32>,
        offsets: Vec<f32>,
    ) -> Result<Self, DecodeError> {
        if stride == 0 {
            return Err(DecodeError::ZeroStride);
        }
        let cells = width * height;
        let checks = [
            ("heatmaps", heatmaps.len(), joint_count * cells),
            ("pafs", pafs.len(), 2 * limb_count * cells),
            (
                "offsets",
                offsets.len(),
                3 * joint_count.saturating_sub(1) * cells,
            ),
        ];
        for (name, got, want) in checks {
            if got != want {
                return Err(DecodeError::ShapeMismatch(format!(
                    "{name} plane holds {got} values, expected {want}"
                )));
            }
        }
        let maps = DenseMaps {
            width,
            height,
            stride,
            joint_count,
            limb_count,
            heatmaps,
            pafs,
            offsets,
        };
        maps.validate()?;
        Ok(maps)
    }

    /// Checks the heatmap range invariant.
    pub fn validate(&self) -> Result<(), DecodeError> {
        let cells = self.width * self.height;
        for (i, &v) in self.heatmaps.iter().enumerate() {
            if !(0.0..=1.0).contains(&v) || !v.is_finite() {
                return Err(DecodeError::HeatmapRange {
                    channel: i / cells,
                    value: v,
                });
            }
        }
        Ok(())
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn stride(&self) -> usize {
        self.stride
    }

    pub fn joint_count(&self) -> usize {
        self.joint_count
    }

    pub fn limb_count(&self) -> usize {
        self.limb_count
    }

    pub fn image_width_px(&self) -> usize {
        self.width * self.stride
    }

    pub fn image_height_px(&self) -> usize {
        self.height * self.stride
    }

    #[inline]
    fn cell(&self, x: usize, y: usize) -> usize {
        y * self.width + x
    }

    pub fn heatmap_at(&self, joint: usize, x: usize, y: usize) -> f32 {
        self.heatmaps[joint * self.width * self.height + self.cell(x, y)]
    }

    pub(crate) fn heatmap_set_max(&mut self, joint: usize, x: usize, y: usize, value: f32) {
        let idx = joint * self.width * self.height + self.cell(x, y);
        if value > self.heatmaps[idx] {
            self.heatmaps[idx] = value;
        }
    }

    pub fn paf_at(&self, limb: usize, x: usize, y: usize) -> (f32, f32) {
        let cells = self.width * self.height;
        let base = 2 * limb * cells + self.cell(x, y);
        (self.pafs[base], self.pafs[base + cells])
    }

    pub(crate) fn paf_add(&mut self, limb: usize, x: usize, y: usize, dx: f32, dy: f32) {
        let cells = self.width * self.height;
        let base = 2 * limb * cells + self.cell(x, y);
        self.pafs[base] += dx;
        self.pafs[base + cells] += dy;
    }

    pub(crate) fn paf_scale(&mut self, limb: usize, x: usize, y: usize, s: f32) {
        let cells = self.width * self.height;
        let base = 2 * limb * cells + self.cell(x, y);
        self.pafs[base] *= s;
        self.pafs[base + cells] *= s;
    }

    pub fn offset_at(&self, slot: usize, x: usize, y: usize) -> (f32, f32, f32) {
        let cells = self.width * self.height;
        let base = 3 * slot * cells + self.cell(x, y);
        (
            self.offsets[base],
            self.offsets[base + cells],
            self.offsets[base + 2 * cells],
        )
    }

    pub(crate) fn offset_set(&mut self, slot: usize, x: usize, y: usize, t: (f32, f32, f32)) {
        let cells = self.width * self.height;
        let base = 3 * slot * cells + self.cell(x, y);
        self.offsets[base] = t.0;
        self.offsets[base + cells] = t.1;
        self.offsets[base + 2 * cells] = t.2;
    }

    pub fn heatmap_planes(&self) -> &[f32] {
        &self.heatmaps
    }

    pub fn paf_planes(&self) -> &[f32] {
        &self.pafs
    }

    pub fn offset_planes(&self) -> &[f32] {
        &self.offsets
    }
}

/// One detected heatmap peak in image pixel coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Peak {
    pub u: f64,
    pub v: f64,
    pub score: f64,
}

/// Peaks per joint channel.
#[derive(Debug, Clone, Default)]
pub struct PeakSet {
    pub channels: Vec<Vec<Peak>>,
}

impl PeakSet {
    pub fn total(&self) -> usize {
        self.channels.iter().map(Vec::len).sum()
    }
}

/// A grouped person before depth fusion: at most one peak per channel.
#[derive(Debug, Clone)]
pub struct HeatmapPose {
    pub joints: Vec<Option<Peak>>,
}

impl HeatmapPose {
    pub fn root_peak(&self, root_index: usize) -> Option<Peak> {
        self.joints[root_index]
    }
}

/// Decoder parameters; defaults mirror [`crate::defaults`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecodeConfig {
    pub nms_radius_px: f64,
    pub min_peak_score: f64,
    /// Confidence gate of the heatmap-vs-offset selection rule.
    pub score_threshold: f64,
    pub paf_samples: usize,
    pub paf_min_dot: f64,
    pub paf_accept_fraction: f64,
    pub use_heatmap: bool,
    pub use_offset: bool,
}

impl Default for DecodeConfig {
    fn default() -> Self {
        DecodeConfig {
            nms_radius_px: defaults::NMS_RADIUS_PX,
            min_peak_score: defaults::MIN_PEAK_SCORE,
            score_threshold: defaults::PEAK_SCORE_THRESHOLD,
            paf_samples: defaults::PAF_SAMPLES,
            paf_min_dot: defaults::PAF_MIN_DOT,
            paf_accept_fraction: defaults::PAF_ACCEPT_FRACTION,
            use_heatmap: true,
            use_offset: true,
        }
    }
}

/// Sub-cell refinement along one axis: quadratic vertex of the three samples,
/// fitted on log activations when all three are usable.
fn refine_axis(prev: f32, center: f32, next: f32) -> f64 {
    const FLOOR: f32 = 1e-12;
    let (l, c, r) = if prev > FLOOR && center > FLOOR && next > FLOOR {
        ((prev as f64).ln(), (center as f64).ln(), (next as f64).ln())
    } else {
        (prev as f64, center as f64, next as f64)
    };
    let denom = l + r - 2.0 * c;
    if denom >= -1e-18 {
        return 0.0;
    }
    ((l - r) / (2.0 * denom)).clamp(-0.5, 0.5)
}

/// Finds every strict local heatmap maximum at or above `min_score`, applies
/// greedy non-maximum suppression within `nms_radius_px`, and refines the
/// survivors to sub-cell precision. Peak coordinates are clamped into the
/// image so downstream offset lookups stay in bounds.
pub fn extract_peaks(maps: &DenseMaps, nms_radius_px: f64, min_score: f64) -> PeakSet {
    let (w, h) = (maps.width(), maps.height());
    let stride = maps.stride() as f64;
    let mut channels = Vec::with_capacity(maps.joint_count());
    for j in 0..maps.joint_count() {
        let mut cells: Vec<(usize, usize, f32)> = Vec::new();
        for y in 0..h {
            for x in 0..w {
                let v = maps.heatmap_at(j, x, y);
                if (v as f64) < min_score {
                    continue;
                }
                // Local maximum with raster-order tie-breaking: ties must be
                // strictly beaten by earlier cells, so a plateau of equal
                // values (a Gaussian centered on a cell boundary) keeps
                // exactly one peak instead of none.
                let mut is_max = true;
                'nbr: for dy in -1i64..=1 {
                    for dx in -1i64..=1 {
                        if dx == 0 && dy == 0 {
                            continue;
                        }
                        let nx = x as i64 + dx;
                        let ny = y as i64 + dy;
                        if nx < 0 || ny < 0 || nx >= w as i64 || ny >= h as i64 {
                            continue;
                        }
                        let nv = maps.heatmap_at(j, nx as usize, ny as usize);
                        let before = dy < 0 || (dy == 0 && dx < 0);
                        if (before && nv >= v) || (!before && nv > v) {
                            is_max = false;
                            break 'nbr;
                        }
                    }
                }
                if is_max {
                    cells.push((x, y, v));
                }
            }
        }
        cells.sort_by(|a, b| {
            b.2.partial_cmp(&a.2)
                .unwrap()
                .then(a.1.cmp(&b.1))
                .then(a.0.cmp(&b.0))
        });

        let r2 = (nms_radius_px / stride).powi(2);
        let mut kept: Vec<(usize, usize, f32)> = Vec::new();
        'cand: for (x, y, v) in cells {
            for &(kx, ky, _) in &kept {
                let dx = x as f64 - kx as f64;
                let dy = y as f64 - ky as f64;
                if dx * dx + dy * dy < r2 {
                    continue 'cand;
                }
            }
            kept.push((x, y, v));
        }

        let max_u = (maps.image_width_px() as f64) - 1e-6;
        let max_v = (maps.image_height_px() as f64) - 1e-6;
        let peaks = kept
            .into_iter()
            .map(|(x, y, v)| {
                let du = if x > 0 && x + 1 < w {
                    refine_axis(
                        maps.heatmap_at(j, x - 1, y),
                        v,
                        maps.heatmap_at(j, x + 1, y),
                    )
                } else {
                    0.0
                };
                let dv = if y > 0 && y + 1 < h {
                    refine_axis(
                        maps.heatmap_at(j, x, y - 1),
                        v,
                        maps.heatmap_at(j, x, y + 1),
                    )
                } else {
                    0.0
                };
                Peak {
                    u: ((x as f64 + du) * stride).clamp(0.0, max_u),
                    v: ((y as f64 + dv) * stride).clamp(0.0, max_v),
                    score: v as f64,
                }
            })
            .collect();
        channels.push(peaks);
    }
    PeakSet { channels }
}

/// Scores one candidate limb by sampling the affinity field along the
/// segment. Returns the mean directional dot product when enough samples
/// support the link.
fn score_link(
    maps: &DenseMaps,
    limb: usize,
    from: Peak,
    to: Peak,
    cfg: &DecodeConfig,
) -> Option<f64> {
    let stride = maps.stride() as f64;
    let (ax, ay) = (from.u / stride, from.v / stride);
    let (bx, by) = (to.u / stride, to.v / stride);
    let (dx, dy) = (bx - ax, by - ay);
    let len = (dx * dx + dy * dy).sqrt();
    if len < 1e-9 {
        return None;
    }
    let (ux, uy) = (dx / len, dy / len);

    let n = cfg.paf_samples.max(2);
    let mut supporting = 0usize;
    let mut total = 0.0;
    for i in 0..n {
        let t = i as f64 / (n - 1) as f64;
        let sx = (ax + t * dx).round();
        let sy = (ay + t * dy).round();
        if sx < 0.0 || sy < 0.0 || sx >= maps.width() as f64 || sy >= maps.height() as f64 {
            continue;
        }
        let (px, py) = maps.paf_at(limb, sx as usize, sy as usize);
        let dot = px as f64 * ux + py as f64 * uy;
        if dot > cfg.paf_min_dot {
            supporting += 1;
        }
        total += dot;
    }
    let needed = (cfg.paf_accept_fraction * n as f64).ceil() as usize;
    if supporting >= needed.max(1) {
        Some(total / n as f64)
    } else {
        None
    }
}

/// Groups peaks into persons along the skeleton's limb tree.
///
/// Per limb, candidate links are scored by the affinity line integral,
/// sorted by descending score, and accepted greedily so that each endpoint
/// is used at most once. Accepted links merge with union-find; unlinked
/// peaks are discarded unless they sit on the root channel (a fully occluded
/// person still decodes from its root alone). Persons without a root peak
/// cannot anchor offsets or depth and are dropped.
pub fn group_by_paf(
    peaks: &PeakSet,
    maps: &DenseMaps,
    skel: &SkeletonDef,
    cfg: &DecodeConfig,
) -> Vec<HeatmapPose> {
    let joint_count = skel.joint_count();
    debug_assert_eq!(peaks.channels.len(), joint_count);

    // Global node ids, channel-major.
    let mut node_base = vec![0usize; joint_count + 1];
    for j in 0..joint_count {
        node_base[j + 1] = node_base[j] + peaks.channels[j].len();
    }
    let total = node_base[joint_count];
    let mut parent: Vec<usize> = (0..total).collect();
    fn find(parent: &mut [usize], mut i: usize) -> usize {
        while parent[i] != i {
            parent[i] = parent[parent[i]];
            i = parent[i];
        }
        i
    }

    let mut linked = vec![false; total];
    for (limb, &(ja, jb)) in skel.limb_pairs().iter().enumerate() {
        let mut candidates: Vec<(f64, usize, usize)> = Vec::new();
        for (ia, &pa) in peaks.channels[ja].iter().enumerate() {
            for (ib, &pb) in peaks.channels[jb].iter().enumerate() {
                if let Some(score) = score_link(maps, limb, pa, pb, cfg) {
                    candidates.push((score, ia, ib));
                }
            }
        }
        candidates.sort_by(|x, y| {
            y.0.partial_cmp(&x.0)
                .unwrap()
                .then(x.1.cmp(&y.1))
                .then(x.2.cmp(&y.2))
        });
        let mut used_a = vec![false; peaks.channels[ja].len()];
        let mut used_b = vec![false; peaks.channels[jb].len()];
        for (_, ia, ib) in candidates {
            if used_a[ia] || used_b[ib] {
                continue;
            }
            used_a[ia] = true;
            used_b[ib] = true;
            let na = node_base[ja] + ia;
            let nb = node_base[jb] + ib;
            linked[na] = true;
            linked[nb] = true;
            let ra = find(&mut parent, na);
            let rb = find(&mut parent, nb);
            if ra != rb {
                parent[ra] = rb;
            }
        }
    }

    // Assemble components into poses, channel-major so output is deterministic.
    let mut pose_of_comp: Vec<Option<usize>> = vec![None; total];
    let mut poses: Vec<HeatmapPose> = Vec::new();
    for j in 0..joint_count {
        for (i, &peak) in peaks.channels[j].iter().enumerate() {
            let node = node_base[j] + i;
            if !linked[node] && j != skel.root_index() {
                continue; // ungrouped non-root peak
            }
            let comp = find(&mut parent, node);
            let pose_idx = match pose_of_comp[comp] {
                Some(idx) => idx,
                None => {
                    poses.push(HeatmapPose {
                        joints: vec![None; joint_count],
                    });
                    pose_of_comp[comp] = Some(poses.len() - 1);
                    poses.len() - 1
                }
            };
            poses[pose_idx].joints[j] = Some(peak);
        }
    }
    poses.retain(|p| p.joints[skel.root_index()].is_some());
    poses.sort_by(|a, b| {
        let ra = a.joints[skel.root_index()].unwrap();
        let rb = b.joints[skel.root_index()].unwrap();
        ra.u.partial_cmp(&rb.u)
            .unwrap()
            .then(ra.v.partial_cmp(&rb.v).unwrap())
    });
    poses
}

/// Reads the offset-based fallback pose anchored at a root position.
///
/// The triple for each non-root joint is taken from the grid cell containing
/// the root; the joint lands at `root + (Δu, Δv)` with relative depth `Δz`,
/// unclamped, so out-of-image joints decode to out-of-image coordinates.
pub fn decode_offsets(
    root_u: f64,
    root_v: f64,
    maps: &DenseMaps,
    skel: &SkeletonDef,
) -> Result<Pose25D, DecodeError> {
    let (iw, ih) = (maps.image_width_px(), maps.image_height_px());
    if root_u < 0.0 || root_v < 0.0 || root_u >= iw as f64 || root_v >= ih as f64 {
        return Err(DecodeError::OutOfBounds {
            u: root_u,
            v: root_v,
            width: iw,
            height: ih,
        });
    }
    let stride = maps.stride() as f64;
    let cx = ((root_u / stride).round() as usize).min(maps.width - 1);
    let cy = ((root_v / stride).round() as usize).min(maps.height - 1);

    let mut joints = Vec::with_capacity(skel.joint_count());
    for k in 0..skel.joint_count() {
        match skel.offset_slot(k) {
            None => joints.push(Point25D::new(root_u, root_v, 0.0)),
            Some(slot) => {
                let (du, dv, dz) = maps.offset_at(slot, cx, cy);
                joints.push(Point25D::new(
                    root_u + du as f64,
                    root_v + dv as f64,
                    dz as f64,
                ));
            }
        }
    }
    Pose25D::from_joints(joints, JointSource::Offset, skel.root_index())
        .map_err(|e| DecodeError::ShapeMismatch(e.to_string()))
}

/// Per-joint selection between the heatmap and offset branches.
///
/// A joint takes its pixel position from the heatmap branch when its peak
/// score reaches `threshold`; otherwise the offset branch supplies it.
/// Relative depth always comes from the offset branch.
pub fn fuse_structured(
    heatmap_pose: &HeatmapPose,
    offset_pose: &Pose25D,
    threshold: f64,
    skel: &SkeletonDef,
) -> Pose25D {
    let root = skel.root_index();
    let joint_count = offset_pose.joint_count();
    let mut joints = Vec::with_capacity(joint_count);
    let mut sources = Vec::with_capacity(joint_count);
    for k in 0..joint_count {
        match heatmap_pose.joints.get(k).copied().flatten() {
            Some(peak) if peak.score >= threshold => {
                let z_rel = if k == root {
                    0.0
                } else {
                    offset_pose.joint(k).z_rel
                };
                joints.push(Point25D::new(peak.u, peak.v, z_rel));
                sources.push(JointSource::Heatmap);
            }
            _ => {
                joints.push(offset_pose.joint(k));
                sources.push(JointSource::Offset);
            }
        }
    }
    Pose25D::new(joints, vec![true; joint_count], sources, root)
        .expect("offset branch always yields a valid root")
}

/// Full frame decode honoring the branch toggles.
///
/// * both branches — grouped heatmap persons fused with their offset
///   fallbacks, each anchored at its own root peak;
/// * heatmap only — grouped persons, joints without an accepted peak left
///   invalid, relative depths still read from the offset maps (the only
///   depth source);
/// * offset only — every confident root-channel peak seeds a pure offset
///   pose. The root channel is always decoded from its heatmap: the offset
///   encoding is root-anchored and cannot bootstrap itself.
pub fn decode_frame(
    maps: &DenseMaps,
    skel: &SkeletonDef,
    cfg: &DecodeConfig,
) -> Result<Vec<Pose25D>, DecodeError> {
    if !cfg.use_heatmap && !cfg.use_offset {
        return Err(DecodeError::NoBranchesEnabled);
    }
    let peaks = extract_peaks(maps, cfg.nms_radius_px, cfg.min_peak_score);

    if !cfg.use_heatmap {
        let mut out = Vec::new();
        for peak in &peaks.channels[skel.root_index()] {
            if peak.score >= cfg.score_threshold {
                out.push(decode_offsets(peak.u, peak.v, maps, skel)?);
            }
        }
        return Ok(out);
    }

    let grouped = group_by_paf(&peaks, maps, skel, cfg);
    let mut out = Vec::new();
    for person in grouped {
        let root_peak = person
            .root_peak(skel.root_index())
            .expect("grouping only keeps root-anchored persons");
        let offset_pose = decode_offsets(root_peak.u, root_peak.v, maps, skel)?;
        if cfg.use_offset {
            out.push(fuse_structured(
                &person,
                &offset_pose,
                cfg.score_threshold,
                skel,
            ));
        } else {
            let joint_count = skel.joint_count();
            let mut joints = Vec::with_capacity(joint_count);
            let mut valid = Vec::with_capacity(joint_count);
            for k in 0..joint_count {
                match person.joints[k] {
                    Some(peak) if peak.score >= cfg.score_threshold => {
                        let z_rel = if k == skel.root_index() {
                            0.0
                        } else {
                            offset_pose.joint(k).z_rel
                        };
                        joints.push(Point25D::new(peak.u, peak.v, z_rel));
                        valid.push(true);
                    }
                    _ => {
                        joints.push(Point25D::new(0.0, 0.0, 0.0));
                        valid.push(false);
                    }
                }
            }
            // The root anchor is kept even when its score sits below the gate.
            joints[skel.root_index()] = Point25D::new(root_peak.u, root_peak.v, 0.0);
            valid[skel.root_index()] = true;
            let pose = Pose25D::new(
                joints,
                valid,
                vec![JointSource::Heatmap; joint_count],
                skel.root_index(),
            )
            .expect("root is valid by construction");
            out.push(pose);
        }
    }
    Ok(out)
}
