//! Laplace-distributed depth beliefs, their losses, and adaptive fusion.
//!
//! A depth estimate is a `(z, σ)` pair where σ is the standard deviation of a
//! Laplace belief centered at `z` (scale λ = σ/√2). Both depth heads are
//! trained with the same uncertainty-weighted absolute-error loss
//! `|z − ẑ|/σ + ln σ`, whose minimizer over σ at fixed residual `r` is
//! exactly `σ = r` — confident heads are rewarded only when they are right.
//!
//! Two beliefs about the same person's depth are combined by precision
//! weighting:
//!
//! ```text
//! z_fused = (z₁/σ₁ + z₂/σ₂) / (1/σ₁ + 1/σ₂)
//! ```
//!
//! The fused σ reported alongside is the harmonic combination
//! `2/(1/σ₁ + 1/σ₂)`; it is a diagnostic extension, not part of the fusion
//! rule itself.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum UncertaintyError {
    #[error("uncertainty must be positive and finite (got {sigma})")]
    NonPositiveSigma { sigma: f64 },
    #[error("depth must be finite (got {z})")]
    NonFiniteDepth { z: f64 },
    #[error("loss weight must be non-negative (got {weight})")]
    NegativeWeight { weight: f64 },
}

/// A Laplace depth belief: mean depth in meters and standard deviation σ.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DepthEstimate {
    pub z: f64,
    pub sigma: f64,
}

impl DepthEstimate {
    pub fn new(z: f64, sigma: f64) -> Result<Self, UncertaintyError> {
        if !z.is_finite() {
            return Err(UncertaintyError::NonFiniteDepth { z });
        }
        if !(sigma > 0.0) || !sigma.is_finite() {
            return Err(UncertaintyError::NonPositiveSigma { sigma });
        }
        Ok(DepthEstimate { z, sigma })
    }

    /// Laplace scale λ = σ/√2.
    pub fn lambda(&self) -> f64 {
        self.sigma / std::f64::consts::SQRT_2
    }
}

/// Weight ω on the regression loss in `L = L_geo + ω·L_reg`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossWeights {
    pub omega_w: f64,
}

impl LossWeights {
    pub fn new(omega_w: f64) -> Result<Self, UncertaintyError> {
        if !(omega_w >= 0.0) {
            return Err(UncertaintyError::NegativeWeight { weight: omega_w });
        }
        Ok(LossWeights { omega_w })
    }
}

impl Default for LossWeights {
    fn default() -> Self {
        LossWeights {
            omega_w: crate::defaults::LOSS_WEIGHT,
        }
    }
}

/// Laplace density of the belief evaluated at depth `z`.
pub fn laplace_pdf(z: f64, est: &DepthEstimate) -> f64 {
    let lambda = est.lambda();
    (-(z - est.z).abs() / lambda).exp() / (2.0 * lambda)
}

/// Uncertainty-weighted regression loss `|z − z_gt|/σ + ln σ`.
pub fn reg_loss(est: &DepthEstimate, z_gt: f64) -> Result<f64, UncertaintyError> {
    if !(est.sigma > 0.0) {
        return Err(UncertaintyError::NonPositiveSigma { sigma: est.sigma });
    }
    Ok((est.z - z_gt).abs() / est.sigma + est.sigma.ln())
}

/// Combined loss `l_geo + ω·l_reg`.
pub fn total_loss(l_geo: f64, l_reg: f64, weights: &LossWeights) -> f64 {
    l_geo + weights.omega_w * l_reg
}

/// Precision-weighted fusion of two depth beliefs.
pub fn fuse(a: &DepthEstimate, b: &DepthEstimate) -> Result<DepthEstimate, UncertaintyError> {
    for est in [a, b] {
        if !(est.sigma > 0.0) || !est.sigma.is_finite() {
            return Err(UncertaintyError::NonPositiveSigma { sigma: est.sigma });
        }
    }
    let wa = 1.0 / a.sigma;
    let wb = 1.0 / b.sigma;
    let z = (a.z / a.sigma + b.z / b.sigma) / (wa + wb);
    let sigma = 2.0 / (wa + wb);
    Ok(DepthEstimate { z, sigma })
}

/// Fusion tolerant of missing estimates: when one side was rejected (for
/// example a geometrically invalid depth), the other passes through unchanged.
pub fn fuse_optional(
    a: Option<DepthEstimate>,
    b: Option<DepthEstimate>,
) -> Result<Option<DepthEstimate>, UncertaintyError> {
    match (a, b) {
        (Some(a), Some(b)) => Ok(Some(fuse(&a, &b)?)),
        (Some(a), None) => Ok(Some(a)),
        (None, Some(b)) => Ok(Some(b)),
        (None, None) => Ok(None),
    }
}
