//! Default values for every tunable constant in the library.
//!
//! All defaults are collected here so that the guide's reference table,
//! the CLI flag defaults, and the library behavior cannot drift apart.
//! [`table`] returns the machine-readable view that the documentation
//! sync test checks against `book/src/defaults.md`.

/// Heatmap confidence threshold for the structured-pose selection rule:
/// joints whose peak score reaches this value take their pixel position
/// from the heatmap branch, all others fall back to the offset branch.
pub const PEAK_SCORE_THRESHOLD: f64 = 0.3;

/// Minimum heatmap value for a local maximum to count as a peak at all.
pub const MIN_PEAK_SCORE: f64 = 0.1;

/// Non-maximum-suppression radius between peaks of one channel, in image pixels.
pub const NMS_RADIUS_PX: f64 = 8.0;

/// Standard deviation of the rendered heatmap Gaussian, in map cells.
pub const HEATMAP_SIGMA_CELLS: f64 = 2.0;

/// Half width of the rendered part-affinity corridor, in map cells.
pub const PAF_HALF_WIDTH_CELLS: f64 = 1.0;

/// Radius of the offset-encoding disk around each root cell, in map cells.
pub const OFFSET_DISK_RADIUS_CELLS: f64 = 3.0;

/// Number of line-integral samples scored along a candidate limb.
pub const PAF_SAMPLES: usize = 10;

/// Minimum directional dot product for a limb sample to count as support.
pub const PAF_MIN_DOT: f64 = 0.05;

/// Fraction of limb samples that must support a candidate link.
pub const PAF_ACCEPT_FRACTION: f64 = 0.8;

/// Output stride: image pixels per dense-map cell.
pub const DEFAULT_STRIDE: usize = 4;

/// Correct-keypoint distance threshold for the PCK metrics, in meters.
pub const PCK_THRESHOLD_M: f64 = 0.15;

/// Greedy person-matching rejection threshold, in mean 2D pixels.
pub const MATCH_THRESHOLD_PX: f64 = 100.0;

/// Depth band inside which two root depths count as ordinally equal, in meters.
pub const PCOD_TIE_BAND_M: f64 = 0.01;

/// Weight on the direct-regression loss in the combined training loss.
pub const LOSS_WEIGHT: f64 = 1.0;

/// Guard on the implicit-differentiation denominator `2aZ + b`; below this
/// the geometric depth sits at the tangent point and the gradient is reported
/// as singular instead of being evaluated.
pub const TANGENT_EPS: f64 = 1e-8;

/// Assumed torso prior (root-to-neck distance) when no other source is given, meters.
pub const TORSO_PRIOR_M: f64 = 0.5;

/// Smallest admissible depth uncertainty; exact simulated estimates are
/// floored here so precision weights stay finite.
pub const SIGMA_FLOOR: f64 = 1e-9;

/// Synthetic-scene root depth range, meters.
pub const DEPTH_RANGE_M: (f64, f64) = (1.5, 12.0);

/// Synthetic-scene torso length range, meters.
pub const TORSO_RANGE_M: (f64, f64) = (0.45, 0.55);

/// Maximum torso lean away from vertical in generated scenes, degrees.
/// Keeps every scene inside the regime where the quadratic's constant
/// coefficient is negative, so exactly one root is positive.
pub const MAX_LEAN_DEG: f64 = 30.0;

/// Synthetic camera canvas, in image pixels.
pub const CANVAS_PX: (usize, usize) = (832, 512);

/// Synthetic camera focal length, pixels (both axes).
pub const FOCAL_PX: f64 = 1000.0;

/// Default RNG seed when neither flag, config file, nor `GEODEPTH_SEED` is set.
pub const DEFAULT_SEED: u64 = 42;

/// Machine-readable defaults table: `(name, value)` pairs rendered in the
/// guide. Checked by the documentation sync test.
pub fn table() -> Vec<(&'static str, f64)> {
    vec![
        ("peak_score_threshold", PEAK_SCORE_THRESHOLD),
        ("min_peak_score", MIN_PEAK_SCORE),
        ("nms_radius_px", NMS_RADIUS_PX),
        ("heatmap_sigma_cells", HEATMAP_SIGMA_CELLS),
        ("paf_half_width_cells", PAF_HALF_WIDTH_CELLS),
        ("offset_disk_radius_cells", OFFSET_DISK_RADIUS_CELLS),
        ("paf_samples", PAF_SAMPLES as f64),
        ("paf_min_dot", PAF_MIN_DOT),
        ("paf_accept_fraction", PAF_ACCEPT_FRACTION),
        ("stride", DEFAULT_STRIDE as f64),
        ("pck_threshold_m", PCK_THRESHOLD_M),
        ("match_threshold_px", MATCH_THRESHOLD_PX),
        ("pcod_tie_band_m", PCOD_TIE_BAND_M),
        ("loss_weight", LOSS_WEIGHT),
        ("tangent_eps", TANGENT_EPS),
        ("torso_prior_m", TORSO_PRIOR_M),
        ("sigma_floor", SIGMA_FLOOR),
        ("depth_min_m", DEPTH_RANGE_M.0),
        ("depth_max_m", DEPTH_RANGE_M.1),
        ("torso_min_m", TORSO_RANGE_M.0),
        ("torso_max_m", TORSO_RANGE_M.1),
        ("max_lean_deg", MAX_LEAN_DEG),
        ("canvas_width_px", CANVAS_PX.0 as f64),
        ("canvas_height_px", CANVAS_PX.1 as f64),
        ("focal_px", FOCAL_PX),
        ("seed", DEFAULT_SEED as f64),
    ]
}
