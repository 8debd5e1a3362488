//! Pose error metrics and their median/mean aggregation.
//!
//! The orientation metric is the geodesic angle between two orientations:
//! the relative rotation `dq = conj(q) * q_hat` is formed with the Hamilton
//! product and the error is `2 * acos(|dq_w|)` in degrees. The absolute
//! value collapses the quaternion double cover, so `q` and `-q` are zero
//! degrees apart and the metric lands in `[0, 180]`.
//!
//! Summaries report both the median and the mean of the per-frame errors:
//! the median hides heavy tails that the mean exposes, so evaluation tables
//! carry both.

use thiserror::Error;

use crate::rotation::{quat_conjugate, quat_multiply, Quaternion};

#[derive(Debug, Error)]
pub enum MetricsError {
    #[error("cannot aggregate an empty list")]
    EmptyInput,
}

/// Per-frame evaluation result.
#[derive(Debug, Clone, PartialEq)]
pub struct ErrorRecord {
    pub frame_id: String,
    /// Euclidean translation error in meters.
    pub translation_error_m: f64,
    /// Geodesic orientation error in degrees, in `[0, 180]`.
    pub angle_error_deg: f64,
}

/// Median and mean errors over one scene (one table row).
#[derive(Debug, Clone, PartialEq)]
pub struct EvalSummary {
    pub scene: String,
    pub n_frames: usize,
    pub median_translation_m: f64,
    pub median_angle_deg: f64,
    pub mean_translation_m: f64,
    pub mean_angle_deg: f64,
}

/// Geodesic angle between two orientations, in degrees.
pub fn angle_error(q: &Quaternion, q_hat: &Quaternion) -> f64 {
    let dq = quat_multiply(&quat_conjugate(q), q_hat);
    2.0 * dq.w().abs().clamp(0.0, 1.0).acos().to_degrees()
}

/// Euclidean distance between two translations, in meters.
pub fn translation_error(x: [f64; 3], x_hat: [f64; 3]) -> f64 {
    let d = [x_hat[0] - x[0], x_hat[1] - x[1], x_hat[2] - x[2]];
    (d[0] * d[0] + d[1] * d[1] + d[2] * d[2]).sqrt()
}

/// Median of a nonempty list of finite values.
///
/// Odd length: the middle element of the sorted order. Even length: the
/// midpoint of the two middle elements. Implemented with quickselect rather
/// than a full sort; tests pit it against a sort-based oracle.
pub fn median(values: &[f64]) -> Result<f64, MetricsError> {
    if values.is_empty() {
        return Err(MetricsError::EmptyInput);
    }
    let mut scratch = values.to_vec();
    let n = scratch.len();
    let (lower, upper, _) = scratch.select_nth_unstable_by(n / 2, f64::total_cmp);
    let upper = *upper;
    if n % 2 == 1 {
        Ok(upper)
    } else {
        let lower_mid = lower
            .iter()
            .copied()
            .max_by(f64::total_cmp)
            .expect("even length implies a nonempty lower half");
        Ok((lower_mid + upper) / 2.0)
    }
}

/// Arithmetic mean of a nonempty list of finite values.
pub fn mean(values: &[f64]) -> Result<f64, MetricsError> {
    if values.is_empty() {
        return Err(MetricsError::EmptyInput);
    }
    Ok(values.iter().sum::<f64>() / values.len() as f64)
}

/// Aggregate per-frame records into one summary row.
pub fn summarize(records: &[ErrorRecord], scene: &str) -> Result<EvalSummary, MetricsError> {
    let t: Vec<f64> = records.iter().map(|r| r.translation_error_m).collect();
    let a: Vec<f64> = records.iter().map(|r| r.angle_error_deg).collect();
    Ok(EvalSummary {
        scene: scene.to_string(),
        n_frames: records.len(),
        median_translation_m: median(&t)?,
        median_angle_deg: median(&a)?,
        mean_translation_m: mean(&t)?,
        mean_angle_deg: mean(&a)?,
    })
}
