//! Implementations behind the CLI subcommands.

use std::fmt::Write as _;
use std::fs;
use std::io::{BufRead, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};

use eulerpose::dataset::{generate_synthetic, read_interchange, write_interchange};
use eulerpose::metrics::summarize;
use eulerpose::regressor::{evaluate, load_checkpoint, save_checkpoint, train};
use eulerpose::rotation::{
    euler_to_quat, matrix_to_quat, quat_to_euler, quat_to_matrix, EulerAngles, Quaternion,
    RotationMatrix,
};
use eulerpose::{AngleUnit, TrainConfig};

use crate::report::{render_report, ReportRow};

/// Orientation representations understood by `convert`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Repr {
    /// Yaw/pitch/roll, three numbers per line.
    Euler,
    /// Unit quaternion `w x y z`, four numbers per line.
    Quat,
    /// Rotation matrix, nine numbers per line, row-major.
    Matrix,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum UnitArg {
    Deg,
    Rad,
}

impl From<UnitArg> for AngleUnit {
    fn from(u: UnitArg) -> Self {
        match u {
            UnitArg::Deg => AngleUnit::Degrees,
            UnitArg::Rad => AngleUnit::Radians,
        }
    }
}

fn parse_numbers(line: &str, expected: usize, line_no: usize) -> Result<Vec<f64>> {
    let fields: Vec<&str> = line.split_whitespace().collect();
    if fields.len() != expected {
        bail!(
            "line {line_no}: expected {expected} numbers, found {}",
            fields.len()
        );
    }
    fields
        .iter()
        .map(|tok| {
            tok.parse::<f64>()
                .with_context(|| format!("line {line_no}: cannot parse '{tok}' as a number"))
        })
        .collect()
}

/// Stream orientation conversions line by line from `input` (or stdin) to
/// `out`. Euler angles are read and written in `unit`; quaternions and
/// matrices are unitless.
pub fn cmd_convert(
    from: Repr,
    to: Repr,
    unit: AngleUnit,
    input: Option<&Path>,
    out: &mut dyn Write,
) -> Result<()> {
    let text = match input {
        Some(path) => {
            fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?
        }
        None => {
            let mut buf = String::new();
            for line in std::io::stdin().lock().lines() {
                buf.push_str(&line.context("reading stdin")?);
                buf.push('\n');
            }
            buf
        }
    };
    let to_unit = unit.per_radian();
    for (idx, line) in text.lines().enumerate() {
        let line_no = idx + 1;
        if line.trim().is_empty() {
            continue;
        }
        let q = match from {
            Repr::Euler => {
                let v = parse_numbers(line, 3, line_no)?;
                let e = EulerAngles::new(v[0] / to_unit, v[1] / to_unit, v[2] / to_unit)
                    .with_context(|| format!("line {line_no}"))?;
                euler_to_quat(&e)
            }
            Repr::Quat => {
                let v = parse_numbers(line, 4, line_no)?;
                Quaternion::new(v[0], v[1], v[2], v[3])
                    .with_context(|| format!("line {line_no}"))?
            }
            Repr::Matrix => {
                let v = parse_numbers(line, 9, line_no)?;
                let m = RotationMatrix::new([
                    [v[0], v[1], v[2]],
                    [v[3], v[4], v[5]],
                    [v[6], v[7], v[8]],
                ])
                .with_context(|| format!("line {line_no}"))?;
                matrix_to_quat(&m)
            }
        };
        let rendered = match to {
            Repr::Euler => {
                let e = quat_to_euler(&q).to_array();
                format!("{} {} {}", e[0] * to_unit, e[1] * to_unit, e[2] * to_unit)
            }
            Repr::Quat => {
                let a = q.to_array();
                format!("{} {} {} {}", a[0], a[1], a[2], a[3])
            }
            Repr::Matrix => {
                let rows = *quat_to_matrix(&q).rows();
                let mut s = String::new();
                for (i, row) in rows.iter().enumerate() {
                    if i > 0 {
                        s.push(' ');
                    }
                    let _ = write!(s, "{} {} {}", row[0], row[1], row[2]);
                }
                s
            }
        };
        writeln!(out, "{rendered}")?;
    }
    Ok(())
}

/// Generate a synthetic dataset and write it as interchange TSV.
pub fn cmd_gen(seed: u64, n: usize, dim: usize, sigma: f64, out_path: &Path) -> Result<()> {
    let ds = generate_synthetic(seed, n, dim, sigma)?;
    write_interchange(&ds, out_path)?;
    println!("wrote {} frames to {}", ds.len(), out_path.display());
    Ok(())
}

pub struct TrainArgs {
    pub data: PathBuf,
    pub out: PathBuf,
    /// Loss-curve CSV path; defaults to `<out>` with extension `loss.csv`.
    pub curve: Option<PathBuf>,
    pub config: TrainConfig,
}

/// Train a regressor on an interchange dataset; writes the checkpoint and
/// the `iteration,loss` curve.
pub fn cmd_train(args: &TrainArgs) -> Result<()> {
    let ds = read_interchange(&args.data)?;
    let trace = train(&ds, &args.config)?;
    save_checkpoint(&trace.model, args.config.seed, &args.out)?;

    let curve = args
        .curve
        .clone()
        .unwrap_or_else(|| args.out.with_extension("loss.csv"));
    let mut csv = String::from("iteration,loss\n");
    for (i, loss) in trace.batch_losses.iter().enumerate() {
        let _ = writeln!(csv, "{},{}", i + 1, loss);
    }
    fs::write(&curve, csv).with_context(|| format!("writing {}", curve.display()))?;

    let final_loss = trace.batch_losses.last().copied().unwrap_or(0.0);
    println!(
        "trained {} iterations on {} frames (converged: {}), final batch loss {}",
        trace.iterations_run,
        ds.len(),
        trace.converged,
        final_loss
    );
    println!("checkpoint: {}", args.out.display());
    println!("loss curve: {}", curve.display());
    Ok(())
}

pub struct EvalArgs {
    pub model: PathBuf,
    pub data: PathBuf,
    pub scene: String,
    pub out_csv: PathBuf,
    pub train_frames: Option<u64>,
    /// Optional comparison row, echoed verbatim into the report.
    pub ref_name: Option<String>,
    pub ref_median: Option<String>,
    pub ref_mean: Option<String>,
}

/// Evaluate a checkpoint: per-frame error CSV plus a summary report row.
pub fn cmd_eval(args: &EvalArgs, out: &mut dyn Write) -> Result<()> {
    let (model, _seed) = load_checkpoint(&args.model)?;
    let ds = read_interchange(&args.data)?;
    let records = evaluate(&model, &ds)?;

    let mut csv = String::from("frame_id,translation_error_m,angle_error_deg\n");
    for r in &records {
        let _ = writeln!(
            csv,
            "{},{},{}",
            r.frame_id, r.translation_error_m, r.angle_error_deg
        );
    }
    fs::write(&args.out_csv, csv).with_context(|| format!("writing {}", args.out_csv.display()))?;

    let summary = summarize(&records, &args.scene)?;
    let mut rows = vec![ReportRow::from_summary(&summary, args.train_frames)];
    if let Some(name) = &args.ref_name {
        rows.push(ReportRow {
            scene: name.clone(),
            train_frames: None,
            test_frames: None,
            median: args.ref_median.clone().unwrap_or_else(|| "-".into()),
            mean: args.ref_mean.clone().unwrap_or_else(|| "-".into()),
        });
    }
    write!(out, "{}", render_report(&rows))?;
    Ok(())
}
