//! Pose dataset parsing, generation, and the interchange file format.
//!
//! Three on-disk formats are understood:
//!
//! - **Seven-scenes style pose files**: one `frame-XXXXXX.pose.txt` per
//!   frame under `seq-XX/` directories, each holding a 4x4 homogeneous
//!   camera-to-world matrix as 16 whitespace-separated ASCII floats in 4
//!   rows. [`read_dataset`] expects the sequences under a `train/` or
//!   `test/` subdirectory of the dataset root.
//! - **Cambridge-style landmark files**: `dataset_train.txt` /
//!   `dataset_test.txt` with a 3-line header followed by
//!   `path x y z q_w q_x q_y q_z` lines.
//! - **Interchange TSV**: this crate's canonical format. Two comment lines
//!   (`# scene`, `# split`) are followed by a header row
//!   `frame_id x y z yaw pitch roll [f0 .. f{d-1}]` and one row per frame,
//!   tab-separated, angles in radians. Numbers are written with Rust's
//!   shortest-round-trip formatting, so write-then-read reproduces every
//!   value bit for bit.
//!
//! Synthetic datasets for desk-scale training come from
//! [`generate_synthetic`], which is a pure function of its arguments built
//! on the pinned [`SplitMix64`] generator.

// Indexed loops mirror the matrix math; iterator rewrites obscure it.
#![allow(clippy::needless_range_loop)]

use std::collections::HashSet;
use std::fmt;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use thiserror::Error;

use crate::loss::Pose;
use crate::rng::SplitMix64;
use crate::rotation::{matrix_to_quat, quat_to_euler, Quaternion, RotationMatrix};

/// Scale applied to the orthonormalized synthetic feature map.
///
/// Chosen so that plain SGD at the documented desk-scale settings descends
/// smoothly: orthonormal columns give every pose direction the same
/// convergence rate, and 0.25 keeps the per-step output jitter well below
/// the loss scale.
const FEATURE_SCALE: f64 = 0.25;

/// Tolerance on the quaternion norm in Cambridge-style files; published
/// pose files carry few digits, so mild denormalization is repaired and
/// anything worse is rejected.
const CAMBRIDGE_QUAT_TOL: f64 = 1e-3;

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("{path}: {source}")]
    InFile {
        path: PathBuf,
        #[source]
        source: Box<DatasetError>,
    },
    #[error("invalid dataset: {0}")]
    Invalid(String),
    #[error("invalid configuration: {0}")]
    Config(String),
}

impl DatasetError {
    fn parse(line: usize, msg: impl Into<String>) -> Self {
        DatasetError::Parse {
            line,
            msg: msg.into(),
        }
    }

    fn in_file(path: &Path, source: DatasetError) -> Self {
        DatasetError::InFile {
            path: path.to_path_buf(),
            source: Box::new(source),
        }
    }

    fn io(path: &Path, source: io::Error) -> Self {
        DatasetError::Io {
            path: path.to_path_buf(),
            source,
        }
    }
}

/// Train/test split selector.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Split {
    Train,
    Test,
}

impl Split {
    pub fn as_str(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Test => "test",
        }
    }
}

impl fmt::Display for Split {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Split {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "train" => Ok(Split::Train),
            "test" => Ok(Split::Test),
            other => Err(format!("unknown split '{other}' (expected train or test)")),
        }
    }
}

/// Supported dataset layouts for [`read_dataset`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DatasetFormat {
    SevenScenes,
    Cambridge,
    Interchange,
}

/// One frame: identifier (relative image path), ground-truth pose, and an
/// optional feature vector for regression experiments.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameRecord {
    pub frame_id: String,
    pub pose: Pose,
    pub features: Option<Vec<f64>>,
}

/// An ordered, validated collection of frames.
#[derive(Debug, Clone, PartialEq)]
pub struct PoseDataset {
    scene_name: String,
    split: Split,
    frames: Vec<FrameRecord>,
    feature_dim: Option<usize>,
}

impl PoseDataset {
    /// Validate frames: nonempty, unique ids, uniform feature dimension.
    pub fn new(
        scene_name: impl Into<String>,
        split: Split,
        frames: Vec<FrameRecord>,
    ) -> Result<Self, DatasetError> {
        if frames.is_empty() {
            return Err(DatasetError::Invalid("dataset has no frames".into()));
        }
        let mut ids = HashSet::with_capacity(frames.len());
        for f in &frames {
            if !ids.insert(f.frame_id.as_str()) {
                return Err(DatasetError::Invalid(format!(
                    "duplicate frame id '{}'",
                    f.frame_id
                )));
            }
        }
        let feature_dim = frames[0].features.as_ref().map(Vec::len);
        for f in &frames {
            if f.features.as_ref().map(Vec::len) != feature_dim {
                return Err(DatasetError::Invalid(format!(
                    "frame '{}' has a mismatched feature dimension",
                    f.frame_id
                )));
            }
        }
        Ok(Self {
            scene_name: scene_name.into(),
            split,
            frames,
            feature_dim,
        })
    }

    pub fn scene_name(&self) -> &str {
        &self.scene_name
    }

    pub fn split(&self) -> Split {
        self.split
    }

    pub fn frames(&self) -> &[FrameRecord] {
        &self.frames
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    pub fn feature_dim(&self) -> Option<usize> {
        self.feature_dim
    }
}

fn parse_float(token: &str, line: usize, what: &str) -> Result<f64, DatasetError> {
    let v: f64 = token.parse().map_err(|_| {
        DatasetError::parse(line, format!("{what}: cannot parse '{token}' as a number"))
    })?;
    if !v.is_finite() {
        return Err(DatasetError::parse(
            line,
            format!("{what}: non-finite value '{token}'"),
        ));
    }
    Ok(v)
}

/// Parse one seven-scenes pose file: a 4x4 homogeneous matrix, row-major,
/// 4 ASCII floats per line.
///
/// The rotation block must be orthonormal within 1e-6 and the bottom row
/// `(0 0 0 1)` within 1e-6; violations are parse errors naming the line.
pub fn parse_sevenscenes_pose(text: &str) -> Result<Pose, DatasetError> {
    let rows: Vec<(usize, Vec<&str>)> = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.split_whitespace().collect::<Vec<_>>()))
        .filter(|(_, toks)| !toks.is_empty())
        .collect();
    if rows.len() != 4 {
        return Err(DatasetError::parse(
            rows.len().clamp(1, 4),
            format!("expected 4 matrix rows, found {}", rows.len()),
        ));
    }
    let mut m = [[0.0f64; 4]; 4];
    for (r, (line, toks)) in rows.iter().enumerate() {
        if toks.len() != 4 {
            return Err(DatasetError::parse(
                *line,
                format!("expected 4 values per row, found {}", toks.len()),
            ));
        }
        for (c, tok) in toks.iter().enumerate() {
            m[r][c] = parse_float(tok, *line, "matrix entry")?;
        }
    }
    let bottom_line = rows[3].0;
    for (c, want) in [0.0, 0.0, 0.0, 1.0].iter().enumerate() {
        if (m[3][c] - want).abs() > 1e-6 {
            return Err(DatasetError::parse(
                bottom_line,
                format!("bottom row must be (0 0 0 1), entry {c} is {}", m[3][c]),
            ));
        }
    }
    let block = [
        [m[0][0], m[0][1], m[0][2]],
        [m[1][0], m[1][1], m[1][2]],
        [m[2][0], m[2][1], m[2][2]],
    ];
    let rot = RotationMatrix::new(block)
        .map_err(|e| DatasetError::parse(rows[0].0, format!("rotation block (rows 1-3): {e}")))?;
    let orientation = quat_to_euler(&matrix_to_quat(&rot));
    let translation = [m[0][3], m[1][3], m[2][3]];
    Pose::new(translation, orientation).map_err(|e| DatasetError::parse(rows[0].0, e.to_string()))
}

/// Parse one Cambridge-style frame line: `path x y z q_w q_x q_y q_z`.
///
/// The quaternion is renormalized when its norm is within 1e-3 of 1 and
/// rejected otherwise. `line_number` is carried into any error.
pub fn parse_cambridge_line(line: &str, line_number: usize) -> Result<FrameRecord, DatasetError> {
    let fields: Vec<&str> = line.split_whitespace().collect();
    if fields.len() != 8 {
        return Err(DatasetError::parse(
            line_number,
            format!(
                "expected 8 fields (path + 7 numbers), found {}",
                fields.len()
            ),
        ));
    }
    let mut nums = [0.0f64; 7];
    for (i, tok) in fields[1..].iter().enumerate() {
        nums[i] = parse_float(tok, line_number, "pose field")?;
    }
    let [x, y, z, qw, qx, qy, qz] = nums;
    let norm = (qw * qw + qx * qx + qy * qy + qz * qz).sqrt();
    if (norm - 1.0).abs() > CAMBRIDGE_QUAT_TOL {
        return Err(DatasetError::parse(
            line_number,
            format!("quaternion norm {norm} deviates from 1 by more than {CAMBRIDGE_QUAT_TOL}"),
        ));
    }
    let q = Quaternion::new(qw, qx, qy, qz)
        .map_err(|e| DatasetError::parse(line_number, e.to_string()))?;
    let pose = Pose::new([x, y, z], quat_to_euler(&q))
        .map_err(|e| DatasetError::parse(line_number, e.to_string()))?;
    Ok(FrameRecord {
        frame_id: fields[0].to_string(),
        pose,
        features: None,
    })
}

/// Generate a deterministic synthetic dataset whose feature vectors are an
/// affine function of the pose, so a linear regressor can invert the map
/// exactly when `noise_sigma` is zero.
///
/// Construction, in draw order from `SplitMix64::new(seed)`:
///
/// 1. A raw `feature_dim x 6` matrix of uniform(-1, 1) entries, row-major.
/// 2. Its columns are Gram-Schmidt orthonormalized (in column order) and
///    scaled by 0.25 to form `A`.
/// 3. An offset `b` of `feature_dim` uniform(-1, 1) entries.
/// 4. Per frame: translation as three uniform(-10, 10) draws; orientation
///    as a normalized 4-vector of Gaussians (redrawn in the measure-zero
///    degenerate case), stored as wrapped Euler angles; features as
///    `A * [x, y, z, yaw, pitch, roll] + b`, plus `noise_sigma` times one
///    Gaussian per component when `noise_sigma > 0`.
///
/// Frame ids are `frame-000000`, `frame-000001`, ...
pub fn generate_synthetic(
    seed: u64,
    n: usize,
    feature_dim: usize,
    noise_sigma: f64,
) -> Result<PoseDataset, DatasetError> {
    if n < 1 {
        return Err(DatasetError::Config("n must be at least 1".into()));
    }
    if feature_dim < 6 {
        return Err(DatasetError::Config(format!(
            "feature_dim must be at least 6, got {feature_dim}"
        )));
    }
    if !noise_sigma.is_finite() || noise_sigma < 0.0 {
        return Err(DatasetError::Config(format!(
            "noise_sigma must be finite and nonnegative, got {noise_sigma}"
        )));
    }
    let mut rng = SplitMix64::new(seed);

    let mut raw = vec![[0.0f64; 6]; feature_dim];
    for row in raw.iter_mut() {
        for v in row.iter_mut() {
            *v = rng.uniform(-1.0, 1.0);
        }
    }
    let map = orthonormal_columns(&raw)?;
    let offset: Vec<f64> = (0..feature_dim).map(|_| rng.uniform(-1.0, 1.0)).collect();

    let mut frames = Vec::with_capacity(n);
    for i in 0..n {
        let translation = [
            rng.uniform(-10.0, 10.0),
            rng.uniform(-10.0, 10.0),
            rng.uniform(-10.0, 10.0),
        ];
        let q = loop {
            let draw = Quaternion::from_unnormalized(
                rng.gaussian(),
                rng.gaussian(),
                rng.gaussian(),
                rng.gaussian(),
            );
            if let Ok(q) = draw {
                break q;
            }
        };
        let orientation = quat_to_euler(&q);
        let pose = Pose::new(translation, orientation)
            .expect("generated translation components are finite");
        let e = orientation.to_array();
        let p6 = [
            translation[0],
            translation[1],
            translation[2],
            e[0],
            e[1],
            e[2],
        ];
        let mut features = Vec::with_capacity(feature_dim);
        for (row, b) in map.iter().zip(&offset) {
            let mut f = *b;
            for (a, p) in row.iter().zip(&p6) {
                f += FEATURE_SCALE * a * p;
            }
            if noise_sigma > 0.0 {
                f += noise_sigma * rng.gaussian();
            }
            features.push(f);
        }
        frames.push(FrameRecord {
            frame_id: format!("frame-{i:06}"),
            pose,
            features: Some(features),
        });
    }
    PoseDataset::new("synthetic", Split::Train, frames)
}

/// Gram-Schmidt over the 6 columns of `raw`, in column order.
fn orthonormal_columns(raw: &[[f64; 6]]) -> Result<Vec<[f64; 6]>, DatasetError> {
    let d = raw.len();
    let mut cols = vec![vec![0.0f64; d]; 6];
    for (r, row) in raw.iter().enumerate() {
        for c in 0..6 {
            cols[c][r] = row[c];
        }
    }
    for j in 0..6 {
        for k in 0..j {
            let dot: f64 = cols[j].iter().zip(&cols[k]).map(|(a, b)| a * b).sum();
            for r in 0..d {
                cols[j][r] -= dot * cols[k][r];
            }
        }
        let norm: f64 = cols[j].iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm < 1e-9 {
            return Err(DatasetError::Invalid(
                "degenerate feature map: columns are linearly dependent".into(),
            ));
        }
        for v in cols[j].iter_mut() {
            *v /= norm;
        }
    }
    let mut rows = vec![[0.0f64; 6]; d];
    for (c, col) in cols.iter().enumerate() {
        for (r, v) in col.iter().enumerate() {
            rows[r][c] = *v;
        }
    }
    Ok(rows)
}

/// Read a dataset from disk.
///
/// - `SevenScenes`: `root/<split>/seq-XX/frame-XXXXXX.pose.txt`, sequences
///   and frames in lexicographic order; the scene name is the root
///   directory name.
/// - `Cambridge`: `root/dataset_<split>.txt`.
/// - `Interchange`: `root` itself when it is a file (its recorded split
///   must match `split`), otherwise `root/<split>.tsv`.
pub fn read_dataset(
    root: &Path,
    format: DatasetFormat,
    split: Split,
) -> Result<PoseDataset, DatasetError> {
    match format {
        DatasetFormat::SevenScenes => read_sevenscenes(root, split),
        DatasetFormat::Cambridge => read_cambridge(root, split),
        DatasetFormat::Interchange => {
            let path = if root.is_file() {
                root.to_path_buf()
            } else {
                root.join(format!("{split}.tsv"))
            };
            let ds = read_interchange(&path)?;
            if ds.split() != split {
                return Err(DatasetError::Invalid(format!(
                    "{} records split '{}', but split '{}' was requested",
                    path.display(),
                    ds.split(),
                    split
                )));
            }
            Ok(ds)
        }
    }
}

fn scene_from_root(root: &Path) -> String {
    root.file_name()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "scene".to_string())
}

fn read_sevenscenes(root: &Path, split: Split) -> Result<PoseDataset, DatasetError> {
    let split_dir = root.join(split.as_str());
    let mut seqs: Vec<PathBuf> = Vec::new();
    let entries = fs::read_dir(&split_dir).map_err(|e| DatasetError::io(&split_dir, e))?;
    for entry in entries {
        let entry = entry.map_err(|e| DatasetError::io(&split_dir, e))?;
        let path = entry.path();
        let name = entry.file_name().to_string_lossy().into_owned();
        if path.is_dir() && is_seq_dir(&name) {
            seqs.push(path);
        }
    }
    seqs.sort();
    let mut frames = Vec::new();
    for seq in &seqs {
        let seq_name = seq
            .file_name()
            .unwrap_or_default()
            .to_string_lossy()
            .into_owned();
        let mut files: Vec<PathBuf> = Vec::new();
        let entries = fs::read_dir(seq).map_err(|e| DatasetError::io(seq, e))?;
        for entry in entries {
            let entry = entry.map_err(|e| DatasetError::io(seq, e))?;
            let name = entry.file_name().to_string_lossy().into_owned();
            if is_pose_file(&name) {
                files.push(entry.path());
            }
        }
        files.sort();
        for file in &files {
            let text = fs::read_to_string(file).map_err(|e| DatasetError::io(file, e))?;
            let pose = parse_sevenscenes_pose(&text).map_err(|e| DatasetError::in_file(file, e))?;
            let stem = file
                .file_name()
                .unwrap_or_default()
                .to_string_lossy()
                .trim_end_matches(".pose.txt")
                .to_string();
            frames.push(FrameRecord {
                frame_id: format!("{seq_name}/{stem}"),
                pose,
                features: None,
            });
        }
    }
    if frames.is_empty() {
        return Err(DatasetError::Invalid(format!(
            "no pose files found under {}",
            split_dir.display()
        )));
    }
    PoseDataset::new(scene_from_root(root), split, frames)
}

fn is_seq_dir(name: &str) -> bool {
    name.strip_prefix("seq-")
        .is_some_and(|rest| rest.len() >= 2 && rest.bytes().all(|b| b.is_ascii_digit()))
}

fn is_pose_file(name: &str) -> bool {
    name.strip_prefix("frame-")
        .and_then(|rest| rest.strip_suffix(".pose.txt"))
        .is_some_and(|digits| digits.len() == 6 && digits.bytes().all(|b| b.is_ascii_digit()))
}

fn read_cambridge(root: &Path, split: Split) -> Result<PoseDataset, DatasetError> {
    let file = root.join(match split {
        Split::Train => "dataset_train.txt",
        Split::Test => "dataset_test.txt",
    });
    let text = fs::read_to_string(&file).map_err(|e| DatasetError::io(&file, e))?;
    let mut frames = Vec::new();
    let mut lines = text.lines().enumerate();
    for _ in 0..3 {
        if lines.next().is_none() {
            return Err(DatasetError::in_file(
                &file,
                DatasetError::Invalid("file is shorter than its 3-line header".into()),
            ));
        }
    }
    for (idx, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let record =
            parse_cambridge_line(line, idx + 1).map_err(|e| DatasetError::in_file(&file, e))?;
        frames.push(record);
    }
    if frames.is_empty() {
        return Err(DatasetError::in_file(
            &file,
            DatasetError::Invalid("no frame lines after the header".into()),
        ));
    }
    PoseDataset::new(scene_from_root(root), split, frames)
}

/// Write a dataset in the interchange TSV format described in the module
/// docs. Every number round-trips exactly through [`read_dataset`].
pub fn write_interchange(ds: &PoseDataset, path: &Path) -> Result<(), DatasetError> {
    let mut out = String::new();
    out.push_str(&format!("# scene\t{}\n", ds.scene_name()));
    out.push_str(&format!("# split\t{}\n", ds.split()));
    out.push_str("frame_id\tx\ty\tz\tyaw\tpitch\troll");
    if let Some(d) = ds.feature_dim() {
        for i in 0..d {
            out.push_str(&format!("\tf{i}"));
        }
    }
    out.push('\n');
    for frame in ds.frames() {
        let t = frame.pose.translation();
        let e = frame.pose.orientation().to_array();
        out.push_str(&format!(
            "{}\t{}\t{}\t{}\t{}\t{}\t{}",
            frame.frame_id, t[0], t[1], t[2], e[0], e[1], e[2]
        ));
        if let Some(features) = &frame.features {
            for f in features {
                out.push_str(&format!("\t{f}"));
            }
        }
        out.push('\n');
    }
    fs::write(path, out).map_err(|e| DatasetError::io(path, e))
}

/// Read an interchange TSV written by [`write_interchange`].
///
/// Files without the metadata comment lines are accepted: the scene falls
/// back to the file stem and the split to `train`.
pub fn read_interchange(path: &Path) -> Result<PoseDataset, DatasetError> {
    let text = fs::read_to_string(path).map_err(|e| DatasetError::io(path, e))?;
    parse_interchange(&text, path).map_err(|e| DatasetError::in_file(path, e))
}

fn parse_interchange(text: &str, path: &Path) -> Result<PoseDataset, DatasetError> {
    let mut scene = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "scene".to_string());
    let mut split = Split::Train;
    let mut header: Option<(usize, Vec<String>)> = None;
    let mut frames = Vec::new();
    let mut feature_dim = 0usize;

    for (idx, line) in text.lines().enumerate() {
        let line_no = idx + 1;
        if line.trim().is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix('#') {
            let mut parts = rest.split_whitespace();
            match (parts.next(), parts.next()) {
                (Some("scene"), Some(v)) => scene = v.to_string(),
                (Some("split"), Some(v)) => {
                    split = v
                        .parse()
                        .map_err(|e: String| DatasetError::parse(line_no, e))?;
                }
                _ => {} // unknown comments are ignored
            }
            continue;
        }
        if header.is_none() {
            let cols: Vec<String> = line.split('\t').map(str::to_string).collect();
            let base = ["frame_id", "x", "y", "z", "yaw", "pitch", "roll"];
            if cols.len() < base.len() || cols[..base.len()] != base {
                return Err(DatasetError::parse(
                    line_no,
                    format!("header must start with '{}'", base.join("\\t")),
                ));
            }
            for (i, c) in cols[base.len()..].iter().enumerate() {
                if *c != format!("f{i}") {
                    return Err(DatasetError::parse(
                        line_no,
                        format!("feature column {i} must be named 'f{i}', found '{c}'"),
                    ));
                }
            }
            feature_dim = cols.len() - base.len();
            header = Some((line_no, cols));
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        let expect = 7 + feature_dim;
        if fields.len() != expect {
            return Err(DatasetError::parse(
                line_no,
                format!("expected {expect} columns, found {}", fields.len()),
            ));
        }
        let mut nums = Vec::with_capacity(6 + feature_dim);
        for tok in &fields[1..] {
            nums.push(parse_float(tok, line_no, "field")?);
        }
        let orientation = crate::rotation::EulerAngles::new(nums[3], nums[4], nums[5])
            .map_err(|e| DatasetError::parse(line_no, e.to_string()))?;
        let pose = Pose::new([nums[0], nums[1], nums[2]], orientation)
            .map_err(|e| DatasetError::parse(line_no, e.to_string()))?;
        let features = if feature_dim > 0 {
            Some(nums[6..].to_vec())
        } else {
            None
        };
        frames.push(FrameRecord {
            frame_id: fields[0].to_string(),
            pose,
            features,
        });
    }
    if header.is_none() {
        return Err(DatasetError::Invalid("missing header row".into()));
    }
    PoseDataset::new(scene, split, frames)
}
