//! Weighted pose regression loss and its analytic gradient.
//!
//! The training objective is a weighted sum of two Euclidean norms,
//!
//! ```text
//! loss = w1 * |t_pred - t_label|_2  +  w2 * |e_pred - e_label|_2
//! ```
//!
//! with the orientation residual taken componentwise on wrapped yaw/pitch/
//! roll values and expressed in a configurable angle unit (degrees by
//! default, so unit weights read as "one meter balances one degree"). The
//! plain componentwise difference is deliberately the default even though it
//! is discontinuous when two angles straddle the +/-pi boundary; setting
//! [`LossConfig::wrap_residuals`] rewraps each residual component into
//! `(-pi, pi]` for callers that want the continuous variant.
//!
//! A quaternion-distance baseline with a free balance parameter `beta` is
//! included for comparison experiments only.

use thiserror::Error;

use crate::rotation::{euler_to_quat, wrap_finite, EulerAngles, Quaternion};

#[derive(Debug, Error)]
pub enum LossError {
    #[error("translation component is not finite: {0}")]
    NonFiniteTranslation(f64),
    #[error("loss weights must be positive and finite (w1 = {w1}, w2 = {w2})")]
    InvalidWeight { w1: f64, w2: f64 },
}

/// Unit used for the orientation residual inside the loss and its gradient.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum AngleUnit {
    #[default]
    Degrees,
    Radians,
}

impl AngleUnit {
    /// Multiplier converting a radian value into this unit.
    pub fn per_radian(self) -> f64 {
        match self {
            AngleUnit::Degrees => 180.0 / std::f64::consts::PI,
            AngleUnit::Radians => 1.0,
        }
    }
}

/// A 6-DoF pose: translation in meters plus a wrapped Euler orientation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pose {
    translation: [f64; 3],
    orientation: EulerAngles,
}

impl Pose {
    pub fn new(translation: [f64; 3], orientation: EulerAngles) -> Result<Self, LossError> {
        for v in translation {
            if !v.is_finite() {
                return Err(LossError::NonFiniteTranslation(v));
            }
        }
        Ok(Self {
            translation,
            orientation,
        })
    }

    /// Origin with zero rotation.
    pub fn identity() -> Self {
        Self {
            translation: [0.0; 3],
            orientation: EulerAngles::zero(),
        }
    }

    pub fn translation(&self) -> [f64; 3] {
        self.translation
    }

    pub fn orientation(&self) -> EulerAngles {
        self.orientation
    }

    /// Quaternion view of the orientation (canonical sign).
    pub fn orientation_quat(&self) -> Quaternion {
        euler_to_quat(&self.orientation)
    }
}

/// Weights and conventions for [`euler_loss`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossConfig {
    /// Weight of the translation term, per meter.
    pub w1: f64,
    /// Weight of the orientation term, per `angle_unit`.
    pub w2: f64,
    pub angle_unit: AngleUnit,
    /// Rewrap each orientation residual component into `(-pi, pi]` before
    /// taking the norm. Off by default; see the module docs.
    pub wrap_residuals: bool,
}

impl Default for LossConfig {
    fn default() -> Self {
        Self {
            w1: 1.0,
            w2: 1.0,
            angle_unit: AngleUnit::Degrees,
            wrap_residuals: false,
        }
    }
}

impl LossConfig {
    pub fn new(w1: f64, w2: f64, angle_unit: AngleUnit) -> Result<Self, LossError> {
        let cfg = Self {
            w1,
            w2,
            angle_unit,
            wrap_residuals: false,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), LossError> {
        if !(self.w1.is_finite() && self.w2.is_finite() && self.w1 > 0.0 && self.w2 > 0.0) {
            return Err(LossError::InvalidWeight {
                w1: self.w1,
                w2: self.w2,
            });
        }
        Ok(())
    }
}

/// Gradient of [`euler_loss`] with respect to the predicted pose.
///
/// `d_orientation` is the derivative with respect to the orientation
/// expressed in the configured angle unit; callers updating radian-valued
/// parameters multiply by `angle_unit.per_radian()`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossGrad {
    pub d_translation: [f64; 3],
    pub d_orientation: [f64; 3],
}

fn norm3(v: [f64; 3]) -> f64 {
    (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt()
}

fn residuals(pred: &Pose, label: &Pose, cfg: &LossConfig) -> ([f64; 3], [f64; 3]) {
    let t = [
        pred.translation[0] - label.translation[0],
        pred.translation[1] - label.translation[1],
        pred.translation[2] - label.translation[2],
    ];
    let pa = pred.orientation.to_array();
    let la = label.orientation.to_array();
    let scale = cfg.angle_unit.per_radian();
    let mut o = [0.0; 3];
    for i in 0..3 {
        let mut d = pa[i] - la[i];
        if cfg.wrap_residuals {
            d = wrap_finite(d);
        }
        o[i] = d * scale;
    }
    (t, o)
}

/// Weighted pose loss: `w1 * |t residual| + w2 * |orientation residual|`.
pub fn euler_loss(pred: &Pose, label: &Pose, cfg: &LossConfig) -> f64 {
    debug_assert!(cfg.validate().is_ok());
    let (t, o) = residuals(pred, label, cfg);
    cfg.w1 * norm3(t) + cfg.w2 * norm3(o)
}

/// Analytic gradient of [`euler_loss`] with respect to `pred`.
///
/// Each term is `w * r / |r|`; at the kink (`|r| < 1e-12`) the subgradient
/// is taken as zero.
pub fn euler_loss_grad(pred: &Pose, label: &Pose, cfg: &LossConfig) -> LossGrad {
    debug_assert!(cfg.validate().is_ok());
    let (t, o) = residuals(pred, label, cfg);
    LossGrad {
        d_translation: scaled_direction(t, cfg.w1),
        d_orientation: scaled_direction(o, cfg.w2),
    }
}

fn scaled_direction(r: [f64; 3], weight: f64) -> [f64; 3] {
    let n = norm3(r);
    if n < 1e-12 {
        [0.0; 3]
    } else {
        [weight * r[0] / n, weight * r[1] / n, weight * r[2] / n]
    }
}

/// Quaternion-distance baseline: `|t residual| + beta * |q_label - q_pred|`.
///
/// This is the comparison loss whose `beta` must be tuned per scene; it is
/// kept around so experiments can contrast it with unit-weight behavior.
/// The quaternion distance is the naive 4-vector norm, so antipodal
/// quaternions (the same rotation) score 2*beta rather than 0.
///
/// `beta` must be positive and finite.
pub fn quat_baseline_loss(
    pred_translation: [f64; 3],
    pred_orientation: &Quaternion,
    label: &Pose,
    beta: f64,
) -> f64 {
    debug_assert!(beta.is_finite() && beta > 0.0, "beta must be positive");
    let lt = label.translation();
    let t = [
        pred_translation[0] - lt[0],
        pred_translation[1] - lt[1],
        pred_translation[2] - lt[2],
    ];
    let lq = label.orientation_quat().to_array();
    let pq = pred_orientation.to_array();
    let dq: f64 = lq
        .iter()
        .zip(&pq)
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        .sqrt();
    norm3(t) + beta * dq
}
