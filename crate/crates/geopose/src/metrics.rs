//! Multi-person 3D evaluation: PCK variants, ordinal depth, root error.
//!
//! Predictions and ground truth are matched per frame by greedy one-to-one
//! assignment on mean 2D pixel distance; pairs above the match threshold are
//! rejected. Metrics then follow the standard protocol:
//!
//! * `PCK_rel` — joints within the threshold after translating each predicted
//!   pose so its root coincides with the ground-truth root;
//! * `PCK_abs` — the same count without alignment;
//! * `PCK_root` — root joints only, no alignment;
//! * `PCOD` — fraction of matched person pairs per frame whose predicted
//!   root-depth ordering (with a small tie band) agrees with ground truth;
//! * `MRPE` — mean absolute root position error per axis, reported in mm.
//!
//! Unmatched predictions never add credit. Unmatched ground-truth persons
//! count every joint as incorrect in the "all people" regime and are ignored
//! in the "matched" regime; both regimes are controlled by
//! [`EvalConfig::include_unmatched`].

use serde::{Deserialize, Serialize};

use crate::defaults;
use crate::skeleton::{Pose3D, Pose25D};

/// Evaluation parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvalConfig {
    /// Correct-joint distance threshold, meters.
    pub pck_threshold_m: f64,
    /// Greedy matching rejection threshold on mean 2D distance, pixels.
    pub match_threshold_px: f64,
    /// `true` evaluates the "all people" regime, `false` only matched persons.
    pub include_unmatched: bool,
    /// Root depths closer than this count as ordinally equal, meters.
    pub pcod_tie_band_m: f64,
}

impl Default for EvalConfig {
    fn default() -> Self {
        EvalConfig {
            pck_threshold_m: defaults::PCK_THRESHOLD_M,
            match_threshold_px: defaults::MATCH_THRESHOLD_PX,
            include_unmatched: true,
            pcod_tie_band_m: defaults::PCOD_TIE_BAND_M,
        }
    }
}

/// One person as seen by the evaluator: 2D joints for matching, 3D for metrics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PersonObs {
    pub pose2d: Pose25D,
    pub pose3d: Pose3D,
}

/// One-to-one pairing between predictions and ground truth.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Matching {
    /// `(pred_index, gt_index)` pairs.
    pub pairs: Vec<(usize, usize)>,
    pub unmatched_gt: Vec<usize>,
    pub unmatched_pred: Vec<usize>,
}

/// Mean 2D distance over joints valid in both poses; `None` when no joint is
/// shared.
fn mean_2d_distance(pred: &Pose25D, gt: &Pose25D) -> Option<f64> {
    let mut total = 0.0;
    let mut count = 0usize;
    for k in 0..pred.joint_count().min(gt.joint_count()) {
        if !pred.is_valid(k) || !gt.is_valid(k) {
            continue;
        }
        let a = pred.joint(k);
        let b = gt.joint(k);
        total += ((a.u - b.u).powi(2) + (a.v - b.v).powi(2)).sqrt();
        count += 1;
    }
    (count > 0).then(|| total / count as f64)
}

/// Greedy one-to-one assignment by ascending mean 2D pixel distance.
pub fn match_persons(pred: &[PersonObs], gt: &[PersonObs], cfg: &EvalConfig) -> Matching {
    let mut candidates: Vec<(f64, usize, usize)> = Vec::new();
    for (pi, p) in pred.iter().enumerate() {
        for (gi, g) in gt.iter().enumerate() {
            if let Some(d) = mean_2d_distance(&p.pose2d, &g.pose2d)
                && d <= cfg.match_threshold_px
            {
                candidates.push((d, pi, gi));
            }
        }
    }
    candidates.sort_by(|a, b| {
        a.0.partial_cmp(&b.0)
            .unwrap()
            .then(a.2.cmp(&b.2))
            .then(a.1.cmp(&b.1))
    });

    let mut pred_used = vec![false; pred.len()];
    let mut gt_used = vec![false; gt.len()];
    let mut pairs = Vec::new();
    for (_, pi, gi) in candidates {
        if pred_used[pi] || gt_used[gi] {
            continue;
        }
        pred_used[pi] = true;
        gt_used[gi] = true;
        pairs.push((pi, gi));
    }
    pairs.sort_by_key(|&(_, gi)| gi);
    Matching {
        pairs,
        unmatched_gt: (0..gt.len()).filter(|&i| !gt_used[i]).collect(),
        unmatched_pred: (0..pred.len()).filter(|&i| !pred_used[i]).collect(),
    }
}

/// Raw per-frame counts; percentages are taken only after aggregation so
/// frame folding stays exact.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct FrameStats {
    pub pck_rel_correct: u64,
    pub pck_rel_total: u64,
    pub pck_abs_correct: u64,
    pub pck_abs_total: u64,
    pub pck_root_correct: u64,
    pub pck_root_total: u64,
    pub pcod_correct: u64,
    pub pcod_total: u64,
    pub mrpe_sum_m: [f64; 3],
    pub matched: u64,
    pub gt_count: u64,
}

impl FrameStats {
    pub fn merge(&mut self, other: &FrameStats) {
        self.pck_rel_correct += other.pck_rel_correct;
        self.pck_rel_total += other.pck_rel_total;
        self.pck_abs_correct += other.pck_abs_correct;
        self.pck_abs_total += other.pck_abs_total;
        self.pck_root_correct += other.pck_root_correct;
        self.pck_root_total += other.pck_root_total;
        self.pcod_correct += other.pcod_correct;
        self.pcod_total += other.pcod_total;
        for i in 0..3 {
            self.mrpe_sum_m[i] += other.mrpe_sum_m[i];
        }
        self.matched += other.matched;
        self.gt_count += other.gt_count;
    }
}

fn percent(correct: u64, total: u64) -> f64 {
    if total == 0 {
        100.0
    } else {
        100.0 * correct as f64 / total as f64
    }
}

/// Aggregated report; percentages in `[0, 100]`, root errors in millimeters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub pck_rel: f64,
    pub pck_abs: f64,
    pub pck_root: f64,
    pub pcod: f64,
    pub mrpe_x_mm: f64,
    pub mrpe_y_mm: f64,
    pub mrpe_z_mm: f64,
    pub matched_count: u64,
    pub gt_count: u64,
}

impl EvalReport {
    pub fn from_stats(stats: &FrameStats) -> EvalReport {
        let n = stats.matched.max(1) as f64;
        EvalReport {
            pck_rel: percent(stats.pck_rel_correct, stats.pck_rel_total),
            pck_abs: percent(stats.pck_abs_correct, stats.pck_abs_total),
            pck_root: percent(stats.pck_root_correct, stats.pck_root_total),
            pcod: percent(stats.pcod_correct, stats.pcod_total),
            mrpe_x_mm: 1000.0 * stats.mrpe_sum_m[0] / n,
            mrpe_y_mm: 1000.0 * stats.mrpe_sum_m[1] / n,
            mrpe_z_mm: 1000.0 * stats.mrpe_sum_m[2] / n,
            matched_count: stats.matched,
            gt_count: stats.gt_count,
        }
    }
}

/// Counts correct joints for one matched pair under an optional root alignment.
fn count_joints(
    pred: &Pose3D,
    gt: &Pose3D,
    root_index: usize,
    align_root: bool,
    threshold: f64,
) -> (u64, u64) {
    let (dx, dy, dz) = if align_root && pred.is_valid(root_index) && gt.is_valid(root_index) {
        let p = pred.joint(root_index);
        let g = gt.joint(root_index);
        (g.x - p.x, g.y - p.y, g.z - p.z)
    } else {
        (0.0, 0.0, 0.0)
    };
    let mut correct = 0u64;
    let mut total = 0u64;
    for k in 0..gt.joint_count() {
        if !gt.is_valid(k) {
            continue;
        }
        total += 1;
        if !pred.is_valid(k) {
            continue;
        }
        let p = pred.joint(k);
        let g = gt.joint(k);
        let d =
            ((p.x + dx - g.x).powi(2) + (p.y + dy - g.y).powi(2) + (p.z + dz - g.z).powi(2)).sqrt();
        if d <= threshold {
            correct += 1;
        }
    }
    (correct, total)
}

fn ordinal_class(delta: f64, band: f64) -> i8 {
    if delta.abs() < band {
        0
    } else if delta > 0.0 {
        1
    } else {
        -1
    }
}

/// Evaluates one frame: matching plus every metric, returned as raw counts.
///
/// `root_index` names the root joint shared by every pose in the frame.
pub fn evaluate_frame(
    pred: &[PersonObs],
    gt: &[PersonObs],
    root_index: usize,
    cfg: &EvalConfig,
) -> FrameStats {
    let matching = match_persons(pred, gt, cfg);
    let mut stats = FrameStats {
        gt_count: gt.len() as u64,
        ..FrameStats::default()
    };
    stats.matched = matching.pairs.len() as u64;

    for &(pi, gi) in &matching.pairs {
        let p3 = &pred[pi].pose3d;
        let g3 = &gt[gi].pose3d;
        let (c, t) = count_joints(p3, g3, root_index, true, cfg.pck_threshold_m);
        stats.pck_rel_correct += c;
        stats.pck_rel_total += t;
        let (c, t) = count_joints(p3, g3, root_index, false, cfg.pck_threshold_m);
        stats.pck_abs_correct += c;
        stats.pck_abs_total += t;
        if g3.is_valid(root_index) {
            stats.pck_root_total += 1;
            if p3.is_valid(root_index) {
                let p = p3.joint(root_index);
                let g = g3.joint(root_index);
                let d = ((p.x - g.x).powi(2) + (p.y - g.y).powi(2) + (p.z - g.z).powi(2)).sqrt();
                if d <= cfg.pck_threshold_m {
                    stats.pck_root_correct += 1;
                }
                stats.mrpe_sum_m[0] += (p.x - g.x).abs();
                stats.mrpe_sum_m[1] += (p.y - g.y).abs();
                stats.mrpe_sum_m[2] += (p.z - g.z).abs();
            }
        }
    }

    if cfg.include_unmatched {
        for &gi in &matching.unmatched_gt {
            let g3 = &gt[gi].pose3d;
            let joints = g3.valid_mask().iter().filter(|&&v| v).count() as u64;
            stats.pck_rel_total += joints;
            stats.pck_abs_total += joints;
            if g3.is_valid(root_index) {
                stats.pck_root_total += 1;
            }
        }
    }

    // Ordinal depth over matched pairs of persons within the frame.
    for (a, &(pa, ga)) in matching.pairs.iter().enumerate() {
        for &(pb, gb) in matching.pairs.iter().skip(a + 1) {
            let (ra, rb) = (&pred[pa].pose3d, &pred[pb].pose3d);
            let (sa, sb) = (&gt[ga].pose3d, &gt[gb].pose3d);
            if !(ra.is_valid(root_index)
                && rb.is_valid(root_index)
                && sa.is_valid(root_index)
                && sb.is_valid(root_index))
            {
                continue;
            }
            stats.pcod_total += 1;
            let pred_class = ordinal_class(
                ra.joint(root_index).z - rb.joint(root_index).z,
                cfg.pcod_tie_band_m,
            );
            let gt_class = ordinal_class(
                sa.joint(root_index).z - sb.joint(root_index).z,
                cfg.pcod_tie_band_m,
            );
            if pred_class == gt_class {
                stats.pcod_correct += 1;
            }
        }
    }

    stats
}

/// Percentage wrappers over [`evaluate_frame`] for single-frame use.
pub fn pck_rel(pred: &[PersonObs], gt: &[PersonObs], root_index: usize, cfg: &EvalConfig) -> f64 {
    let s = evaluate_frame(pred, gt, root_index, cfg);
    percent(s.pck_rel_correct, s.pck_rel_total)
}

pub fn pck_abs(pred: &[PersonObs], gt: &[PersonObs], root_index: usize, cfg: &EvalConfig) -> f64 {
    let s = evaluate_frame(pred, gt, root_index, cfg);
    percent(s.pck_abs_correct, s.pck_abs_total)
}

pub fn pck_root(pred: &[PersonObs], gt: &[PersonObs], root_index: usize, cfg: &EvalConfig) -> f64 {
    let s = evaluate_frame(pred, gt, root_index, cfg);
    percent(s.pck_root_correct, s.pck_root_total)
}

pub fn pcod(pred: &[PersonObs], gt: &[PersonObs], root_index: usize, cfg: &EvalConfig) -> f64 {
    let s = evaluate_frame(pred, gt, root_index, cfg);
    percent(s.pcod_correct, s.pcod_total)
}

/// Mean absolute root error per axis over matched persons, in millimeters.
pub fn mrpe(
    pred: &[PersonObs],
    gt: &[PersonObs],
    root_index: usize,
    cfg: &EvalConfig,
) -> (f64, f64, f64) {
    let s = evaluate_frame(pred, gt, root_index, cfg);
    let n = s.matched.max(1) as f64;
    (
        1000.0 * s.mrpe_sum_m[0] / n,
        1000.0 * s.mrpe_sum_m[1] / n,
        1000.0 * s.mrpe_sum_m[2] / n,
    )
}
