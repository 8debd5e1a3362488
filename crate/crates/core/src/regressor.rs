//! Desk-scale pose regressor trained with plain stochastic gradient descent.
//!
//! The model maps a feature vector to a translation head and an orientation
//! head, each affine. A single hidden tanh layer of configurable width can
//! be inserted when a nonlinear map is wanted; the default is linear, the
//! smallest model that can drive the pose loss to convergence on the
//! synthetic datasets.
//!
//! Training is deterministic given `(dataset, config)`: initialization,
//! epoch shuffling, and batch order all come from one [`SplitMix64`] stream
//! seeded by the config. Within an epoch the shuffled index list is split
//! into consecutive full batches (a trailing partial batch is skipped) and
//! each batch's indices are processed in ascending order, so the recorded
//! batch loss is bit-for-bit reproducible and equals the mean pose loss of
//! that batch under the pre-update parameters.
//!
//! Stopping: after iteration `k >= 2 * convergence_window` the mean batch
//! loss of the last window is compared against the window before it;
//! training stops once the relative change drops to `convergence_tol`, or
//! at `max_iterations`.

// Indexed loops mirror the matrix math; iterator rewrites obscure it.
#![allow(clippy::needless_range_loop)]

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use thiserror::Error;

use crate::dataset::PoseDataset;
use crate::loss::{euler_loss, euler_loss_grad, LossConfig, LossError, Pose};
use crate::metrics::{angle_error, translation_error, ErrorRecord};
use crate::rng::SplitMix64;
use crate::rotation::EulerAngles;

#[derive(Debug, Error)]
pub enum TrainError {
    #[error("dataset carries no feature vectors")]
    MissingFeatures,
    #[error("batch size {batch} exceeds dataset size {n}")]
    BatchTooLarge { batch: usize, n: usize },
    #[error("invalid training configuration: {0}")]
    Config(String),
    #[error("feature vector has dimension {got}, model expects {want}")]
    DimensionMismatch { got: usize, want: usize },
    #[error("{path}: {source}")]
    Io {
        path: std::path::PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("checkpoint line {line}: {msg}")]
    Checkpoint { line: usize, msg: String },
    #[error(transparent)]
    Loss(#[from] LossError),
}

/// Hidden tanh layer: `h = tanh(w * f + b)`.
#[derive(Debug, Clone, PartialEq)]
pub struct HiddenLayer {
    width: usize,
    /// `width x feature_dim`, row-major.
    w: Vec<f64>,
    b: Vec<f64>,
}

/// Two affine heads over the feature vector (or the hidden activation):
/// translation in meters and orientation in radians, wrapped at the output.
#[derive(Debug, Clone, PartialEq)]
pub struct RegressorModel {
    feature_dim: usize,
    hidden: Option<HiddenLayer>,
    /// `3 x head_input_dim`, row-major.
    w_t: Vec<f64>,
    b_t: [f64; 3],
    w_o: Vec<f64>,
    b_o: [f64; 3],
}

impl RegressorModel {
    /// Seeded initialization: each layer's weights are uniform in
    /// `(-1/sqrt(fan_in), 1/sqrt(fan_in))`, biases zero. Draw order: hidden
    /// weights (row-major, when present), then translation head, then
    /// orientation head.
    pub fn init(feature_dim: usize, hidden_width: Option<usize>, rng: &mut SplitMix64) -> Self {
        let hidden = hidden_width.map(|width| {
            let bound = 1.0 / (feature_dim as f64).sqrt();
            HiddenLayer {
                width,
                w: (0..width * feature_dim)
                    .map(|_| rng.uniform(-bound, bound))
                    .collect(),
                b: vec![0.0; width],
            }
        });
        let k = hidden_width.unwrap_or(feature_dim);
        let bound = 1.0 / (k as f64).sqrt();
        let w_t = (0..3 * k).map(|_| rng.uniform(-bound, bound)).collect();
        let w_o = (0..3 * k).map(|_| rng.uniform(-bound, bound)).collect();
        Self {
            feature_dim,
            hidden,
            w_t,
            b_t: [0.0; 3],
            w_o,
            b_o: [0.0; 3],
        }
    }

    /// All-zero parameters; the forward pass returns the identity pose for
    /// every input.
    pub fn zeros(feature_dim: usize, hidden_width: Option<usize>) -> Self {
        let hidden = hidden_width.map(|width| HiddenLayer {
            width,
            w: vec![0.0; width * feature_dim],
            b: vec![0.0; width],
        });
        let k = hidden_width.unwrap_or(feature_dim);
        Self {
            feature_dim,
            hidden,
            w_t: vec![0.0; 3 * k],
            b_t: [0.0; 3],
            w_o: vec![0.0; 3 * k],
            b_o: [0.0; 3],
        }
    }

    pub fn feature_dim(&self) -> usize {
        self.feature_dim
    }

    pub fn hidden_width(&self) -> Option<usize> {
        self.hidden.as_ref().map(|h| h.width)
    }

    fn head_input_dim(&self) -> usize {
        self.hidden.as_ref().map_or(self.feature_dim, |h| h.width)
    }

    /// Hidden activation (when configured) feeding the heads.
    fn activation<'a>(&self, features: &'a [f64], scratch: &'a mut Vec<f64>) -> &'a [f64] {
        match &self.hidden {
            None => features,
            Some(h) => {
                scratch.clear();
                for j in 0..h.width {
                    let row = &h.w[j * self.feature_dim..(j + 1) * self.feature_dim];
                    let pre: f64 =
                        row.iter().zip(features).map(|(w, f)| w * f).sum::<f64>() + h.b[j];
                    scratch.push(pre.tanh());
                }
                scratch
            }
        }
    }

    fn head_outputs(&self, phi: &[f64]) -> ([f64; 3], [f64; 3]) {
        let k = self.head_input_dim();
        let mut t = self.b_t;
        let mut o = self.b_o;
        for i in 0..3 {
            let wt = &self.w_t[i * k..(i + 1) * k];
            let wo = &self.w_o[i * k..(i + 1) * k];
            t[i] += wt.iter().zip(phi).map(|(w, p)| w * p).sum::<f64>();
            o[i] += wo.iter().zip(phi).map(|(w, p)| w * p).sum::<f64>();
        }
        (t, o)
    }

    /// Predict a pose: affine heads, orientation wrapped componentwise.
    pub fn forward(&self, features: &[f64]) -> Result<Pose, TrainError> {
        if features.len() != self.feature_dim {
            return Err(TrainError::DimensionMismatch {
                got: features.len(),
                want: self.feature_dim,
            });
        }
        let mut scratch = Vec::new();
        let phi = self.activation(features, &mut scratch);
        let (t, o) = self.head_outputs(phi);
        let orientation = EulerAngles::wrapped(o[0], o[1], o[2]);
        Ok(Pose::new(t, orientation)?)
    }

    /// Flat parameter vector in checkpoint order: w_t, b_t, w_o, b_o,
    /// then hidden w, b.
    #[cfg(test)]
    fn flatten(&self) -> Vec<f64> {
        let mut out = Vec::new();
        out.extend_from_slice(&self.w_t);
        out.extend_from_slice(&self.b_t);
        out.extend_from_slice(&self.w_o);
        out.extend_from_slice(&self.b_o);
        if let Some(h) = &self.hidden {
            out.extend_from_slice(&h.w);
            out.extend_from_slice(&h.b);
        }
        out
    }

    fn assign(&mut self, flat: &[f64]) {
        let mut it = flat.iter().copied();
        for v in self.w_t.iter_mut().chain(self.b_t.iter_mut()) {
            *v = it.next().expect("flat parameter vector too short");
        }
        for v in self.w_o.iter_mut().chain(self.b_o.iter_mut()) {
            *v = it.next().expect("flat parameter vector too short");
        }
        if let Some(h) = &mut self.hidden {
            for v in h.w.iter_mut().chain(h.b.iter_mut()) {
                *v = it.next().expect("flat parameter vector too short");
            }
        }
        assert!(it.next().is_none(), "flat parameter vector too long");
    }
}

/// Hyperparameters for [`train`].
#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub batch_size: usize,
    pub max_iterations: usize,
    pub seed: u64,
    pub loss: LossConfig,
    /// Window length (in iterations) for the convergence test.
    pub convergence_window: usize,
    /// Relative change of the windowed mean loss below which training stops.
    pub convergence_tol: f64,
    /// Width of the optional hidden tanh layer; `None` keeps the model linear.
    pub hidden_width: Option<usize>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            learning_rate: 1e-3,
            batch_size: 64,
            max_iterations: 50_000,
            seed: 0,
            loss: LossConfig::default(),
            convergence_window: 1000,
            convergence_tol: 1e-3,
            hidden_width: None,
        }
    }
}

impl TrainConfig {
    fn validate(&self) -> Result<(), TrainError> {
        if !(self.learning_rate.is_finite() && self.learning_rate > 0.0) {
            return Err(TrainError::Config(format!(
                "learning rate must be positive, got {}",
                self.learning_rate
            )));
        }
        if self.batch_size < 1 {
            return Err(TrainError::Config("batch size must be at least 1".into()));
        }
        if self.max_iterations < 1 {
            return Err(TrainError::Config(
                "max_iterations must be at least 1".into(),
            ));
        }
        if self.convergence_window < 1 {
            return Err(TrainError::Config(
                "convergence window must be at least 1".into(),
            ));
        }
        if !(self.convergence_tol.is_finite() && self.convergence_tol >= 0.0) {
            return Err(TrainError::Config(format!(
                "convergence tolerance must be nonnegative, got {}",
                self.convergence_tol
            )));
        }
        if self.hidden_width == Some(0) {
            return Err(TrainError::Config("hidden width must be at least 1".into()));
        }
        self.loss.validate()?;
        Ok(())
    }
}

/// Everything a training run produced.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainTrace {
    /// Mean batch loss per iteration, evaluated before that iteration's
    /// parameter update. `batch_losses[k]` belongs to iteration `k + 1`.
    pub batch_losses: Vec<f64>,
    pub model: RegressorModel,
    pub converged: bool,
    pub iterations_run: usize,
}

/// Parameter gradients, laid out like the model.
struct GradBuffers {
    w_t: Vec<f64>,
    b_t: [f64; 3],
    w_o: Vec<f64>,
    b_o: [f64; 3],
    w_h: Vec<f64>,
    b_h: Vec<f64>,
}

impl GradBuffers {
    fn zeros(model: &RegressorModel) -> Self {
        let k = model.head_input_dim();
        let (hw, hb) = match &model.hidden {
            Some(h) => (h.w.len(), h.b.len()),
            None => (0, 0),
        };
        Self {
            w_t: vec![0.0; 3 * k],
            b_t: [0.0; 3],
            w_o: vec![0.0; 3 * k],
            b_o: [0.0; 3],
            w_h: vec![0.0; hw],
            b_h: vec![0.0; hb],
        }
    }

    fn reset(&mut self) {
        self.w_t.iter_mut().for_each(|v| *v = 0.0);
        self.w_o.iter_mut().for_each(|v| *v = 0.0);
        self.w_h.iter_mut().for_each(|v| *v = 0.0);
        self.b_h.iter_mut().for_each(|v| *v = 0.0);
        self.b_t = [0.0; 3];
        self.b_o = [0.0; 3];
    }
}

/// Mean loss over `samples` and the gradient of that mean with respect to
/// every model parameter. Shared by the trainer and its gradient tests.
fn batch_loss_and_grad(
    model: &RegressorModel,
    samples: &[(&[f64], &Pose)],
    loss_cfg: &LossConfig,
    grads: &mut GradBuffers,
) -> f64 {
    grads.reset();
    let k = model.head_input_dim();
    let d = model.feature_dim;
    let unit_per_rad = loss_cfg.angle_unit.per_radian();
    let mut scratch = Vec::new();
    let mut total_loss = 0.0;
    let inv_b = 1.0 / samples.len() as f64;

    for (features, label) in samples {
        let phi = model.activation(features, &mut scratch);
        let (t_out, o_raw) = model.head_outputs(phi);
        let orientation = EulerAngles::wrapped(o_raw[0], o_raw[1], o_raw[2]);
        let pred = Pose::new(t_out, orientation).expect("finite model outputs");
        total_loss += euler_loss(&pred, label, loss_cfg);

        let g = euler_loss_grad(&pred, label, loss_cfg);
        let g_t = g.d_translation;
        // The loss differentiates orientation in the configured unit; the
        // parameters are radian-valued, so convert. Wrapping is a shift and
        // passes the gradient through unchanged.
        let g_o = [
            g.d_orientation[0] * unit_per_rad,
            g.d_orientation[1] * unit_per_rad,
            g.d_orientation[2] * unit_per_rad,
        ];
        for i in 0..3 {
            let wt = &mut grads.w_t[i * k..(i + 1) * k];
            let wo = &mut grads.w_o[i * k..(i + 1) * k];
            for j in 0..k {
                wt[j] += inv_b * g_t[i] * phi[j];
                wo[j] += inv_b * g_o[i] * phi[j];
            }
            grads.b_t[i] += inv_b * g_t[i];
            grads.b_o[i] += inv_b * g_o[i];
        }
        if let Some(_h) = &model.hidden {
            for j in 0..k {
                let upstream: f64 = (0..3)
                    .map(|i| g_t[i] * model.w_t[i * k + j] + g_o[i] * model.w_o[i * k + j])
                    .sum();
                let delta = upstream * (1.0 - phi[j] * phi[j]);
                let row = &mut grads.w_h[j * d..(j + 1) * d];
                for (slot, f) in row.iter_mut().zip(*features) {
                    *slot += inv_b * delta * f;
                }
                grads.b_h[j] += inv_b * delta;
            }
        }
    }
    total_loss * inv_b
}

fn apply_update(model: &mut RegressorModel, grads: &GradBuffers, lr: f64) {
    for (w, g) in model.w_t.iter_mut().zip(&grads.w_t) {
        *w -= lr * g;
    }
    for (w, g) in model.w_o.iter_mut().zip(&grads.w_o) {
        *w -= lr * g;
    }
    for i in 0..3 {
        model.b_t[i] -= lr * grads.b_t[i];
        model.b_o[i] -= lr * grads.b_o[i];
    }
    if let Some(h) = &mut model.hidden {
        for (w, g) in h.w.iter_mut().zip(&grads.w_h) {
            *w -= lr * g;
        }
        for (b, g) in h.b.iter_mut().zip(&grads.b_h) {
            *b -= lr * g;
        }
    }
}

/// Minibatch SGD on the mean pose loss. Deterministic given
/// `(dataset, config)`; see the module docs for the exact protocol.
pub fn train(ds: &PoseDataset, cfg: &TrainConfig) -> Result<TrainTrace, TrainError> {
    cfg.validate()?;
    let d = ds.feature_dim().ok_or(TrainError::MissingFeatures)?;
    let n = ds.len();
    if cfg.batch_size > n {
        return Err(TrainError::BatchTooLarge {
            batch: cfg.batch_size,
            n,
        });
    }

    let samples: Vec<(&[f64], &Pose)> = ds
        .frames()
        .iter()
        .map(|f| {
            (
                f.features.as_deref().expect("feature_dim implies features"),
                &f.pose,
            )
        })
        .collect();

    let mut rng = SplitMix64::new(cfg.seed);
    let mut model = RegressorModel::init(d, cfg.hidden_width, &mut rng);
    let mut grads = GradBuffers::zeros(&model);

    let mut perm: Vec<usize> = (0..n).collect();
    let batches_per_epoch = n / cfg.batch_size;
    let window = cfg.convergence_window;

    let mut losses = Vec::new();
    // cumulative[k] = sum of the first k batch losses
    let mut cumulative = vec![0.0f64];
    let mut batch: Vec<usize> = Vec::with_capacity(cfg.batch_size);
    let mut batch_samples: Vec<(&[f64], &Pose)> = Vec::with_capacity(cfg.batch_size);
    let mut converged = false;

    'epochs: loop {
        rng.shuffle(&mut perm);
        for bi in 0..batches_per_epoch {
            batch.clear();
            batch.extend_from_slice(&perm[bi * cfg.batch_size..(bi + 1) * cfg.batch_size]);
            batch.sort_unstable();
            batch_samples.clear();
            batch_samples.extend(batch.iter().map(|&i| samples[i]));

            let loss = batch_loss_and_grad(&model, &batch_samples, &cfg.loss, &mut grads);
            losses.push(loss);
            cumulative.push(cumulative.last().unwrap() + loss);
            apply_update(&mut model, &grads, cfg.learning_rate);

            let k = losses.len();
            if k >= 2 * window {
                let curr = (cumulative[k] - cumulative[k - window]) / window as f64;
                let prev = (cumulative[k - window] - cumulative[k - 2 * window]) / window as f64;
                if (curr - prev).abs() <= cfg.convergence_tol * prev {
                    converged = true;
                    break 'epochs;
                }
            }
            if k >= cfg.max_iterations {
                break 'epochs;
            }
        }
    }

    let iterations_run = losses.len();
    Ok(TrainTrace {
        batch_losses: losses,
        model,
        converged,
        iterations_run,
    })
}

/// Per-frame translation and orientation errors of `model` on `ds`, in
/// dataset order. Orientations are compared through their quaternion views.
pub fn evaluate(model: &RegressorModel, ds: &PoseDataset) -> Result<Vec<ErrorRecord>, TrainError> {
    if ds.feature_dim().is_none() {
        return Err(TrainError::MissingFeatures);
    }
    let mut records = Vec::with_capacity(ds.len());
    for frame in ds.frames() {
        let features = frame
            .features
            .as_deref()
            .expect("feature_dim implies features");
        let pred = model.forward(features)?;
        records.push(ErrorRecord {
            frame_id: frame.frame_id.clone(),
            translation_error_m: translation_error(frame.pose.translation(), pred.translation()),
            angle_error_deg: angle_error(&frame.pose.orientation_quat(), &pred.orientation_quat()),
        });
    }
    Ok(records)
}

/// Write a checkpoint: comment headers recording the dimensions and seed,
/// then one `tensor index value` row per parameter. Values use shortest
/// round-trip formatting, so [`load_checkpoint`] restores them exactly.
pub fn save_checkpoint(model: &RegressorModel, seed: u64, path: &Path) -> Result<(), TrainError> {
    let mut out = String::new();
    let _ = writeln!(out, "# feature_dim\t{}", model.feature_dim);
    let _ = writeln!(out, "# hidden_width\t{}", model.hidden_width().unwrap_or(0));
    let _ = writeln!(out, "# seed\t{seed}");
    out.push_str("tensor\tindex\tvalue\n");
    let mut dump = |name: &str, values: &[f64]| {
        for (i, v) in values.iter().enumerate() {
            let _ = writeln!(out, "{name}\t{i}\t{v}");
        }
    };
    dump("w_t", &model.w_t);
    dump("b_t", &model.b_t);
    dump("w_o", &model.w_o);
    dump("b_o", &model.b_o);
    if let Some(h) = &model.hidden {
        dump("w_h", &h.w);
        dump("b_h", &h.b);
    }
    fs::write(path, out).map_err(|e| TrainError::Io {
        path: path.to_path_buf(),
        source: e,
    })
}

/// Read a checkpoint written by [`save_checkpoint`]; returns the model and
/// the training seed it recorded.
pub fn load_checkpoint(path: &Path) -> Result<(RegressorModel, u64), TrainError> {
    let text = fs::read_to_string(path).map_err(|e| TrainError::Io {
        path: path.to_path_buf(),
        source: e,
    })?;
    let bad = |line: usize, msg: String| TrainError::Checkpoint { line, msg };

    let mut feature_dim: Option<usize> = None;
    let mut hidden_width: Option<usize> = None;
    let mut seed: Option<u64> = None;
    let mut tensors: Vec<(String, Vec<f64>)> = Vec::new();
    let mut saw_header = false;

    for (idx, line) in text.lines().enumerate() {
        let line_no = idx + 1;
        if line.trim().is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix('#') {
            let mut parts = rest.split_whitespace();
            match (parts.next(), parts.next()) {
                (Some("feature_dim"), Some(v)) => {
                    feature_dim = Some(
                        v.parse()
                            .map_err(|_| bad(line_no, format!("bad feature_dim '{v}'")))?,
                    )
                }
                (Some("hidden_width"), Some(v)) => {
                    hidden_width = Some(
                        v.parse()
                            .map_err(|_| bad(line_no, format!("bad hidden_width '{v}'")))?,
                    )
                }
                (Some("seed"), Some(v)) => {
                    seed = Some(
                        v.parse()
                            .map_err(|_| bad(line_no, format!("bad seed '{v}'")))?,
                    )
                }
                _ => {}
            }
            continue;
        }
        if !saw_header {
            if line != "tensor\tindex\tvalue" {
                return Err(bad(
                    line_no,
                    "expected header 'tensor\\tindex\\tvalue'".into(),
                ));
            }
            saw_header = true;
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != 3 {
            return Err(bad(
                line_no,
                format!("expected 3 columns, found {}", fields.len()),
            ));
        }
        let index: usize = fields[1]
            .parse()
            .map_err(|_| bad(line_no, format!("bad index '{}'", fields[1])))?;
        let value: f64 = fields[2]
            .parse()
            .map_err(|_| bad(line_no, format!("bad value '{}'", fields[2])))?;
        if !value.is_finite() {
            return Err(bad(line_no, format!("non-finite value '{}'", fields[2])));
        }
        if tensors.last().map(|(n, _)| n.as_str()) != Some(fields[0]) {
            tensors.push((fields[0].to_string(), Vec::new()));
        }
        let current = &mut tensors.last_mut().unwrap().1;
        if index != current.len() {
            return Err(bad(
                line_no,
                format!("index {index} out of order (expected {})", current.len()),
            ));
        }
        current.push(value);
    }

    let feature_dim = feature_dim.ok_or_else(|| bad(0, "missing '# feature_dim' header".into()))?;
    let hidden_width =
        hidden_width.ok_or_else(|| bad(0, "missing '# hidden_width' header".into()))?;
    let seed = seed.ok_or_else(|| bad(0, "missing '# seed' header".into()))?;
    let hidden = if hidden_width == 0 {
        None
    } else {
        Some(hidden_width)
    };

    let expected: Vec<(&str, usize)> = {
        let k = hidden.unwrap_or(feature_dim);
        let mut v = vec![("w_t", 3 * k), ("b_t", 3), ("w_o", 3 * k), ("b_o", 3)];
        if let Some(width) = hidden {
            v.push(("w_h", width * feature_dim));
            v.push(("b_h", width));
        }
        v
    };
    if tensors.len() != expected.len() {
        return Err(bad(
            0,
            format!(
                "expected {} tensors, found {}",
                expected.len(),
                tensors.len()
            ),
        ));
    }
    let mut flat = Vec::new();
    for ((name, values), (want_name, want_len)) in tensors.iter().zip(&expected) {
        if name != want_name || values.len() != *want_len {
            return Err(bad(
                0,
                format!(
                    "tensor '{name}' with {} values, expected '{want_name}' with {want_len}",
                    values.len()
                ),
            ));
        }
        flat.extend_from_slice(values);
    }
    let mut model = RegressorModel::zeros(feature_dim, hidden);
    model.assign(&flat);
    Ok((model, seed))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{generate_synthetic, FrameRecord, Split};
    use crate::loss::AngleUnit;
    use crate::rotation::wrap_finite;
    use std::f64::consts::{FRAC_PI_2, PI};

    fn identity_dataset(n: usize, dim: usize) -> PoseDataset {
        let frames = (0..n)
            .map(|i| FrameRecord {
                frame_id: format!("frame-{i:06}"),
                pose: Pose::identity(),
                features: Some(vec![0.0; dim]),
            })
            .collect();
        PoseDataset::new("identity", Split::Train, frames).unwrap()
    }

    #[test]
    fn forward_zero_model_is_identity_pose() {
        let model = RegressorModel::zeros(4, None);
        let pose = model.forward(&[1.0, -2.0, 3.0, 0.5]).unwrap();
        assert_eq!(pose, Pose::identity());
    }

    #[test]
    fn forward_wraps_orientation_output() {
        let mut model = RegressorModel::zeros(2, None);
        model.b_o = [3.0 * PI / 2.0, 0.0, 0.0];
        let pose = model.forward(&[0.0, 0.0]).unwrap();
        assert!((pose.orientation().yaw() + FRAC_PI_2).abs() < 1e-12);
    }

    #[test]
    fn forward_matches_hand_computed_product() {
        let mut rng = SplitMix64::new(50);
        let model = RegressorModel::init(5, None, &mut rng);
        let f: Vec<f64> = (0..5).map(|_| rng.uniform(-2.0, 2.0)).collect();
        let pose = model.forward(&f).unwrap();
        for i in 0..3 {
            let mut t = model.b_t[i];
            let mut o = model.b_o[i];
            for j in 0..5 {
                t += model.w_t[i * 5 + j] * f[j];
                o += model.w_o[i * 5 + j] * f[j];
            }
            assert!((pose.translation()[i] - t).abs() < 1e-15);
            assert!((pose.orientation().to_array()[i] - wrap_finite(o)).abs() < 1e-15);
        }
        assert!(model.forward(&[0.0; 4]).is_err());
    }

    #[test]
    fn train_on_already_solved_dataset_converges_immediately() {
        // Zero features make the freshly initialized model (zero biases)
        // output the identity pose already.
        let ds = identity_dataset(1, 6);
        let cfg = TrainConfig {
            batch_size: 1,
            convergence_window: 50,
            convergence_tol: 0.0,
            max_iterations: 10_000,
            ..TrainConfig::default()
        };
        let trace = train(&ds, &cfg).unwrap();
        assert!(trace.converged);
        assert_eq!(trace.iterations_run, 100); // two windows
        assert!(trace.batch_losses.iter().all(|&l| l == 0.0));
    }

    #[test]
    fn train_is_deterministic() {
        let ds = generate_synthetic(5, 64, 8, 0.05).unwrap();
        let cfg = TrainConfig {
            batch_size: 16,
            max_iterations: 237,
            convergence_tol: 0.0,
            seed: 9,
            ..TrainConfig::default()
        };
        let a = train(&ds, &cfg).unwrap();
        let b = train(&ds, &cfg).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.iterations_run, 237);
        assert!(!a.converged);
    }

    #[test]
    fn reported_batch_loss_uses_pre_update_parameters() {
        // With batch_size == n every batch is the whole dataset in index
        // order, so the trace can be replayed exactly.
        let ds = generate_synthetic(8, 16, 8, 0.0).unwrap();
        let cfg = TrainConfig {
            batch_size: 16,
            max_iterations: 40,
            convergence_tol: 0.0,
            seed: 3,
            loss: LossConfig {
                angle_unit: AngleUnit::Radians,
                ..LossConfig::default()
            },
            ..TrainConfig::default()
        };
        let trace = train(&ds, &cfg).unwrap();

        let samples: Vec<(&[f64], &Pose)> = ds
            .frames()
            .iter()
            .map(|f| (f.features.as_deref().unwrap(), &f.pose))
            .collect();
        let mut rng = SplitMix64::new(cfg.seed);
        let mut model = RegressorModel::init(8, None, &mut rng);
        let mut grads = GradBuffers::zeros(&model);
        for (k, want) in trace.batch_losses.iter().enumerate() {
            let manual: f64 = samples
                .iter()
                .map(|(f, p)| euler_loss(&model.forward(f).unwrap(), p, &cfg.loss))
                .sum::<f64>()
                / samples.len() as f64;
            assert_eq!(manual, *want, "iteration {}", k + 1);
            let recorded = batch_loss_and_grad(&model, &samples, &cfg.loss, &mut grads);
            assert_eq!(recorded, *want);
            apply_update(&mut model, &grads, cfg.learning_rate);
        }
        assert_eq!(model, trace.model);
    }

    #[test]
    fn full_model_gradient_matches_finite_differences() {
        let mut rng = SplitMix64::new(123);
        for hidden in [None, Some(7)] {
            for unit in [AngleUnit::Radians, AngleUnit::Degrees] {
                let loss_cfg = LossConfig {
                    angle_unit: unit,
                    ..LossConfig::default()
                };
                let d = 5;
                let mut model = RegressorModel::init(d, hidden, &mut rng);
                let features: Vec<Vec<f64>> = (0..6)
                    .map(|_| (0..d).map(|_| rng.uniform(-1.5, 1.5)).collect())
                    .collect();
                let labels: Vec<Pose> = (0..6)
                    .map(|_| {
                        Pose::new(
                            [
                                rng.uniform(-2.0, 2.0),
                                rng.uniform(-2.0, 2.0),
                                rng.uniform(-2.0, 2.0),
                            ],
                            EulerAngles::new(
                                rng.uniform(-1.5, 1.5),
                                rng.uniform(-1.2, 1.2),
                                rng.uniform(-1.5, 1.5),
                            )
                            .unwrap(),
                        )
                        .unwrap()
                    })
                    .collect();
                let samples: Vec<(&[f64], &Pose)> = features
                    .iter()
                    .map(|f| f.as_slice())
                    .zip(labels.iter())
                    .collect();

                let mut grads = GradBuffers::zeros(&model);
                batch_loss_and_grad(&model, &samples, &loss_cfg, &mut grads);
                let mut analytic = Vec::new();
                analytic.extend_from_slice(&grads.w_t);
                analytic.extend_from_slice(&grads.b_t);
                analytic.extend_from_slice(&grads.w_o);
                analytic.extend_from_slice(&grads.b_o);
                analytic.extend_from_slice(&grads.w_h);
                analytic.extend_from_slice(&grads.b_h);

                let theta = model.flatten();
                let mut numeric = Vec::with_capacity(theta.len());
                let eps = 1e-6;
                for p in 0..theta.len() {
                    let mut plus = theta.clone();
                    plus[p] += eps;
                    model.assign(&plus);
                    let lp = batch_loss_and_grad(&model, &samples, &loss_cfg, &mut grads);
                    let mut minus = theta.clone();
                    minus[p] -= eps;
                    model.assign(&minus);
                    let lm = batch_loss_and_grad(&model, &samples, &loss_cfg, &mut grads);
                    numeric.push((lp - lm) / (2.0 * eps));
                }
                model.assign(&theta);

                for (i, (a, n)) in analytic.iter().zip(&numeric).enumerate() {
                    let rel = (a - n).abs() / n.abs().max(1e-6);
                    assert!(
                        rel < 1e-4,
                        "param {i} ({hidden:?}, {unit:?}): analytic {a} vs numeric {n}"
                    );
                }
            }
        }
    }

    #[test]
    fn training_decreases_windowed_loss_on_noiseless_data() {
        let ds = generate_synthetic(2, 128, 8, 0.0).unwrap();
        let cfg = TrainConfig {
            batch_size: 32,
            max_iterations: 1500,
            convergence_tol: 0.0,
            seed: 2,
            loss: LossConfig {
                angle_unit: AngleUnit::Radians,
                ..LossConfig::default()
            },
            convergence_window: 100,
            ..TrainConfig::default()
        };
        let trace = train(&ds, &cfg).unwrap();
        let losses = &trace.batch_losses;
        let first: f64 = losses[..100].iter().sum::<f64>() / 100.0;
        let last: f64 = losses[losses.len() - 100..].iter().sum::<f64>() / 100.0;
        assert!(last < first, "first window {first}, last window {last}");
    }

    #[test]
    fn train_rejects_bad_inputs() {
        let ds = identity_dataset(4, 3);
        let cfg = TrainConfig {
            batch_size: 8,
            ..TrainConfig::default()
        };
        assert!(matches!(
            train(&ds, &cfg),
            Err(TrainError::BatchTooLarge { .. })
        ));

        let frames = vec![FrameRecord {
            frame_id: "a".into(),
            pose: Pose::identity(),
            features: None,
        }];
        let no_features = PoseDataset::new("x", Split::Train, frames).unwrap();
        let cfg = TrainConfig {
            batch_size: 1,
            ..TrainConfig::default()
        };
        assert!(matches!(
            train(&no_features, &cfg),
            Err(TrainError::MissingFeatures)
        ));

        let ds = identity_dataset(4, 3);
        let cfg = TrainConfig {
            learning_rate: 0.0,
            batch_size: 2,
            ..TrainConfig::default()
        };
        assert!(matches!(train(&ds, &cfg), Err(TrainError::Config(_))));
    }

    #[test]
    fn evaluate_zero_model_on_identity_poses_is_exact() {
        let ds = identity_dataset(5, 4);
        let model = RegressorModel::zeros(4, None);
        let records = evaluate(&model, &ds).unwrap();
        assert_eq!(records.len(), 5);
        for r in &records {
            assert_eq!(r.translation_error_m, 0.0);
            assert_eq!(r.angle_error_deg, 0.0);
        }
    }

    #[test]
    fn evaluate_matches_metric_primitives() {
        let ds = generate_synthetic(14, 12, 7, 0.0).unwrap();
        let mut rng = SplitMix64::new(4);
        let model = RegressorModel::init(7, Some(5), &mut rng);
        let records = evaluate(&model, &ds).unwrap();
        for (frame, record) in ds.frames().iter().zip(&records) {
            let pred = model.forward(frame.features.as_deref().unwrap()).unwrap();
            assert_eq!(record.frame_id, frame.frame_id);
            assert_eq!(
                record.translation_error_m,
                translation_error(frame.pose.translation(), pred.translation())
            );
            assert_eq!(
                record.angle_error_deg,
                angle_error(&frame.pose.orientation_quat(), &pred.orientation_quat())
            );
        }
    }

    #[test]
    fn checkpoint_round_trip_is_exact() {
        let dir = tempfile::tempdir().unwrap();
        for hidden in [None, Some(6)] {
            let mut rng = SplitMix64::new(77);
            let mut model = RegressorModel::init(9, hidden, &mut rng);
            // Perturb so values are not fresh-init artifacts.
            let mut flat = model.flatten();
            for v in flat.iter_mut() {
                *v = v.sin() * 1e3 + 1.0 / 3.0;
            }
            model.assign(&flat);
            let path = dir
                .path()
                .join(format!("model-{:?}.tsv", hidden.unwrap_or(0)));
            save_checkpoint(&model, 345, &path).unwrap();
            let (loaded, seed) = load_checkpoint(&path).unwrap();
            assert_eq!(loaded, model);
            assert_eq!(seed, 345);
        }
    }

    #[test]
    fn checkpoint_rejects_corrupt_files() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.tsv");

        std::fs::write(&path, "# feature_dim\t3\n# seed\t0\ntensor\tindex\tvalue\n").unwrap();
        assert!(matches!(
            load_checkpoint(&path),
            Err(TrainError::Checkpoint { .. })
        ));

        let model = RegressorModel::zeros(2, None);
        save_checkpoint(&model, 0, &path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        let truncated: String = text.lines().take(8).collect::<Vec<_>>().join("\n");
        std::fs::write(&path, truncated).unwrap();
        assert!(matches!(
            load_checkpoint(&path),
            Err(TrainError::Checkpoint { .. })
        ));
    }
}
