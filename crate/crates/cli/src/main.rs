use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use clap::{Parser, Subcommand};

use eulerpose::loss::LossConfig;
use eulerpose::TrainConfig;
use eulerpose_cli::check::run_checks;
use eulerpose_cli::commands::{
    cmd_convert, cmd_eval, cmd_gen, cmd_train, EvalArgs, Repr, TrainArgs, UnitArg,
};

#[derive(Parser)]
#[command(
    name = "eulerpose",
    version,
    about = "Pose regression toolkit: conversions, datasets, training, evaluation"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Convert orientations between Euler angles, quaternions, and matrices.
    Convert {
        #[arg(long, value_enum)]
        from: Repr,
        #[arg(long, value_enum)]
        to: Repr,
        /// Unit for Euler angles on both sides of the conversion.
        #[arg(long, value_enum, default_value = "rad")]
        unit: UnitArg,
        /// Input file with one orientation per line; stdin when omitted.
        #[arg(long)]
        input: Option<PathBuf>,
    },
    /// Generate a seeded synthetic dataset as interchange TSV.
    Gen {
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        dim: usize,
        #[arg(long, default_value_t = 0.0)]
        sigma: f64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Train the regressor on an interchange dataset.
    Train {
        #[arg(long)]
        data: PathBuf,
        #[arg(long, default_value_t = 1e-3)]
        lr: f64,
        #[arg(long, default_value_t = 64)]
        batch: usize,
        #[arg(long, default_value_t = 50_000)]
        max_iter: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Unit of the orientation residual inside the loss.
        #[arg(long, value_enum, default_value = "deg")]
        angle_unit: UnitArg,
        #[arg(long, default_value_t = 1.0)]
        w1: f64,
        #[arg(long, default_value_t = 1.0)]
        w2: f64,
        /// Rewrap orientation residuals into (-pi, pi] inside the loss.
        #[arg(long)]
        wrap_residuals: bool,
        /// Convergence window length in iterations.
        #[arg(long, default_value_t = 1000)]
        window: usize,
        /// Relative windowed-loss change below which training stops.
        #[arg(long, default_value_t = 1e-3)]
        tol: f64,
        /// Width of an optional hidden tanh layer (0 = linear model).
        #[arg(long, default_value_t = 0)]
        hidden: usize,
        /// Checkpoint output path.
        #[arg(long)]
        out: PathBuf,
        /// Loss-curve CSV path (default: checkpoint path with .loss.csv).
        #[arg(long)]
        curve: Option<PathBuf>,
    },
    /// Evaluate a checkpoint: per-frame CSV plus a summary report row.
    Eval {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        scene: String,
        #[arg(long)]
        out_csv: PathBuf,
        /// Training-set frame count for the report (display only).
        #[arg(long)]
        train_frames: Option<u64>,
        /// Name of a comparison method to add as a second report row.
        #[arg(long)]
        ref_name: Option<String>,
        /// Preformatted median cell for the comparison row, e.g. "0.32m, 8.12°".
        #[arg(long)]
        ref_median: Option<String>,
        /// Preformatted mean cell for the comparison row.
        #[arg(long)]
        ref_mean: Option<String>,
    },
    /// Run the built-in self checks and report pass/fail per suite.
    Check,
}

fn run(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::Convert {
            from,
            to,
            unit,
            input,
        } => {
            let mut stdout = std::io::stdout().lock();
            cmd_convert(from, to, unit.into(), input.as_deref(), &mut stdout)?;
            Ok(true)
        }
        Command::Gen {
            seed,
            n,
            dim,
            sigma,
            out,
        } => {
            cmd_gen(seed, n, dim, sigma, &out)?;
            Ok(true)
        }
        Command::Train {
            data,
            lr,
            batch,
            max_iter,
            seed,
            angle_unit,
            w1,
            w2,
            wrap_residuals,
            window,
            tol,
            hidden,
            out,
            curve,
        } => {
            let config = TrainConfig {
                learning_rate: lr,
                batch_size: batch,
                max_iterations: max_iter,
                seed,
                loss: LossConfig {
                    w1,
                    w2,
                    angle_unit: angle_unit.into(),
                    wrap_residuals,
                },
                convergence_window: window,
                convergence_tol: tol,
                hidden_width: (hidden > 0).then_some(hidden),
            };
            cmd_train(&TrainArgs {
                data,
                out,
                curve,
                config,
            })?;
            Ok(true)
        }
        Command::Eval {
            model,
            data,
            scene,
            out_csv,
            train_frames,
            ref_name,
            ref_median,
            ref_mean,
        } => {
            let mut stdout = std::io::stdout().lock();
            cmd_eval(
                &EvalArgs {
                    model,
                    data,
                    scene,
                    out_csv,
                    train_frames,
                    ref_name,
                    ref_median,
                    ref_mean,
                },
                &mut stdout,
            )?;
            Ok(true)
        }
        Command::Check => {
            let results = run_checks();
            let mut all_passed = true;
            for r in &results {
                let status = if r.passed { "PASS" } else { "FAIL" };
                println!("{status} {} — {}", r.name, r.detail);
                all_passed &= r.passed;
            }
            println!(
                "{} of {} checks passed",
                results.iter().filter(|r| r.passed).count(),
                results.len()
            );
            Ok(all_passed)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
