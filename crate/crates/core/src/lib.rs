//! Pose regression toolkit.
//!
//! The crate bundles the pieces needed to run and evaluate desk-scale
//! camera-pose regression experiments with an Euler-angle parameterization:
//!
//! - [`rotation`]: convention-pinned conversions among Euler angles, unit
//!   quaternions, and rotation matrices (intrinsic Z-Y-X, angles wrapped to
//!   `(-pi, pi]`).
//! - [`loss`]: the weighted translation + orientation training loss, its
//!   analytic gradient, and a quaternion-distance baseline.
//! - [`metrics`]: geodesic angle error, translation error, and median/mean
//!   scene summaries.
//! - [`dataset`]: parsers for the two supported ground-truth pose formats,
//!   a seeded synthetic generator, and the interchange TSV format.
//! - [`regressor`]: a deterministic from-scratch SGD regressor with
//!   translation and orientation heads.
//! - [`rng`]: the pinned SplitMix64 generator behind every seeded
//!   operation.

pub mod dataset;
pub mod loss;
pub mod metrics;
pub mod regressor;
pub mod rng;
pub mod rotation;

pub use dataset::{DatasetFormat, FrameRecord, PoseDataset, Split};
pub use loss::{AngleUnit, LossConfig, LossGrad, Pose};
pub use metrics::{ErrorRecord, EvalSummary};
pub use regressor::{RegressorModel, TrainConfig, TrainTrace};
pub use rotation::{EulerAngles, Quaternion, RotationMatrix};
