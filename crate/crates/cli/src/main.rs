use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use panoptrack::commands::{
    cmd_compare, cmd_eval, cmd_simulate, cmd_track, cmd_train_motion, CompareArgs, EvalArgs,
    SimulateArgs, TrackArgs, TrainMotionArgs,
};
use panoptrack::formats::InputError;
use panoptrack::SEED_ENV;
use panoptrack_core::tracker::{MotionModel, Pipeline};

/// Panoramic multi-camera 3D multi-object tracking.
#[derive(Parser)]
#[command(name = "panoptrack", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum PipelineArg {
    /// Independent tracker per camera.
    Single,
    /// Per-camera trackers merged by 3D NMS.
    TrackMerge,
    /// Fuse detections across cameras, then track globally.
    MergeTrack,
}

impl From<PipelineArg> for Pipeline {
    fn from(p: PipelineArg) -> Self {
        match p {
            PipelineArg::Single => Pipeline::SingleCamera,
            PipelineArg::TrackMerge => Pipeline::TrackThenMerge,
            PipelineArg::MergeTrack => Pipeline::MergeThenTrack,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum MotionArg {
    None,
    Kf3d,
    Lstm,
}

impl From<MotionArg> for MotionModel {
    fn from(m: MotionArg) -> Self {
        match m {
            MotionArg::None => MotionModel::None,
            MotionArg::Kf3d => MotionModel::Kf3d,
            MotionArg::Lstm => MotionModel::Lstm,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Generate ground truth and noisy detections from a scenario.
    Simulate {
        /// Scenario TOML path or builtin:<name>.
        #[arg(long)]
        scenario: String,
        /// Rig TOML (defaults to the builtin scenario's paired rig).
        #[arg(long)]
        rig: Option<PathBuf>,
        /// Output directory for detections.jsonl, poses.jsonl, gt.jsonl.
        #[arg(long)]
        out: PathBuf,
        /// Seed override (falls back to PANOPTRACK_SEED, then the
        /// scenario's own seed).
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Run the tracker over a detection sequence.
    Track {
        #[arg(long)]
        detections: PathBuf,
        #[arg(long)]
        poses: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, value_enum)]
        pipeline: Option<PipelineArg>,
        #[arg(long, value_enum)]
        motion: Option<MotionArg>,
        /// Trained LSTM weights (required for --motion lstm).
        #[arg(long)]
        weights: Option<PathBuf>,
        /// Output result.jsonl.
        #[arg(long)]
        out: PathBuf,
    },
    /// Train the dual-LSTM motion model on matched trajectories.
    TrainMotion {
        #[arg(long)]
        gt: PathBuf,
        #[arg(long)]
        detections: PathBuf,
        #[arg(long)]
        poses: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
        /// Output weight container; a .manifest file is written beside it.
        #[arg(long)]
        out: PathBuf,
        /// Per-epoch CSV log.
        #[arg(long)]
        log: Option<PathBuf>,
        /// Dump the matched trajectory windows as JSON Lines.
        #[arg(long)]
        dataset_out: Option<PathBuf>,
    },
    /// Evaluate a tracking result against ground truth.
    Eval {
        #[arg(long)]
        result: PathBuf,
        #[arg(long)]
        gt: PathBuf,
        /// bev:<gate meters> or iou3d:<min IoU>.
        #[arg(long, default_value = "bev:2.0")]
        matcher: String,
        #[arg(long, default_value_t = 40)]
        n_points: usize,
        /// Report JSON.
        #[arg(long)]
        out: PathBuf,
        /// Per-recall-point CSV.
        #[arg(long)]
        curves: Option<PathBuf>,
    },
    /// Run all pipelines × motion models and print the ablation table.
    Compare {
        #[arg(long)]
        detections: PathBuf,
        #[arg(long)]
        poses: PathBuf,
        #[arg(long)]
        gt: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
        /// Trained LSTM weights for the lstm rows.
        #[arg(long)]
        weights: Option<PathBuf>,
        /// Output table (also printed to stdout).
        #[arg(long)]
        out: PathBuf,
        /// Worker threads across the nine configurations.
        #[arg(long, default_value_t = 1)]
        jobs: usize,
    },
}

fn env_seed() -> Option<u64> {
    std::env::var(SEED_ENV).ok().and_then(|s| s.parse().ok())
}

fn run(cli: Cli) -> anyhow::Result<()> {
    match cli.command {
        Command::Simulate {
            scenario,
            rig,
            out,
            seed,
        } => cmd_simulate(&SimulateArgs {
            scenario,
            rig,
            out_dir: out,
            seed: seed.or_else(env_seed),
        }),
        Command::Track {
            detections,
            poses,
            config,
            pipeline,
            motion,
            weights,
            out,
        } => cmd_track(&TrackArgs {
            detections,
            poses,
            config,
            pipeline: pipeline.map(Into::into),
            motion: motion.map(Into::into),
            weights,
            out,
        }),
        Command::TrainMotion {
            gt,
            detections,
            poses,
            config,
            out,
            log,
            dataset_out,
        } => cmd_train_motion(&TrainMotionArgs {
            gt,
            detections,
            poses,
            config,
            out,
            log,
            dataset_out,
        }),
        Command::Eval {
            result,
            gt,
            matcher,
            n_points,
            out,
            curves,
        } => cmd_eval(&EvalArgs {
            result,
            gt,
            matcher,
            n_points,
            out,
            curves,
        }),
        Command::Compare {
            detections,
            poses,
            gt,
            config,
            weights,
            out,
            jobs,
        } => {
            cmd_compare(&CompareArgs {
                detections,
                poses,
                gt,
                config,
                weights,
                out: out.clone(),
                jobs,
            })?;
            print!("{}", std::fs::read_to_string(&out)?);
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            if err.downcast_ref::<InputError>().is_some() {
                ExitCode::from(2)
            } else {
                ExitCode::FAILURE
            }
        }
    }
}
