//! Subcommand implementations. These are plain functions over paths so
//! the test suites can drive them without spawning processes.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use anyhow::{bail, Context};
use panoptrack_core::fusion::{lift_frame, nms_3d, DetectionRecord, FrameBundle};
use panoptrack_core::learn::{build_trajectory_dataset, train_motion_model};
use panoptrack_core::metrics::{evaluate, MetricReport};
use panoptrack_core::motion::LstmWeights;
use panoptrack_core::sim::{builtin, generate, RigSpec, ScenarioSpec};
use panoptrack_core::tracker::{run_pipeline, MotionModel, Pipeline};
use serde::Serialize;

use crate::config::{parse_matcher, RunConfig};
use crate::formats::{
    read_frame_bundles, read_ground_truth, read_tracking_result, write_frame_bundles,
    write_ground_truth, write_tracking_result, InputError,
};
use crate::weights_io::{load_weights, save_weights};

pub struct SimulateArgs {
    /// Path to a scenario TOML or `builtin:<name>`.
    pub scenario: String,
    /// Rig TOML; defaults to the builtin scenario's paired rig.
    pub rig: Option<PathBuf>,
    pub out_dir: PathBuf,
    /// Overrides the scenario seed (flag, else PANOPTRACK_SEED).
    pub seed: Option<u64>,
}

fn toml_input<T: for<'de> serde::Deserialize<'de>>(path: &Path) -> anyhow::Result<T> {
    let text =
        std::fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
    toml::from_str(&text).map_err(|e| {
        anyhow::Error::from(InputError {
            path: path.display().to_string(),
            line: 0,
            reason: e.to_string(),
        })
    })
}

pub fn cmd_simulate(args: &SimulateArgs) -> anyhow::Result<()> {
    let (mut scenario, default_rig): (ScenarioSpec, Option<RigSpec>) =
        match args.scenario.strip_prefix("builtin:") {
            Some(name) => {
                let (scenario, rig) = builtin(name).ok_or_else(|| {
                    anyhow::Error::from(InputError {
                        path: args.scenario.clone(),
                        line: 0,
                        reason: format!(
                            "unknown builtin scenario; available: {}",
                            panoptrack_core::sim::BUILTIN_NAMES.join(", ")
                        ),
                    })
                })?;
                (scenario, Some(rig))
            }
            None => (toml_input(Path::new(&args.scenario))?, None),
        };
    let rig: RigSpec = match (&args.rig, default_rig) {
        (Some(path), _) => toml_input(path)?,
        (None, Some(rig)) => rig,
        (None, None) => bail!("--rig is required for scenario files"),
    };
    if let Some(seed) = args.seed {
        scenario.seed = seed;
    }

    let (gt, frames) = generate(&scenario, &rig);
    std::fs::create_dir_all(&args.out_dir)?;
    write_frame_bundles(
        &args.out_dir.join("detections.jsonl"),
        &args.out_dir.join("poses.jsonl"),
        &frames,
    )?;
    write_ground_truth(&args.out_dir.join("gt.jsonl"), &gt)?;
    Ok(())
}

pub struct TrackArgs {
    pub detections: PathBuf,
    pub poses: PathBuf,
    pub config: Option<PathBuf>,
    pub pipeline: Option<Pipeline>,
    pub motion: Option<MotionModel>,
    pub weights: Option<PathBuf>,
    pub out: PathBuf,
}

fn resolve_weights(
    motion: MotionModel,
    flag: Option<&Path>,
    config: &RunConfig,
) -> anyhow::Result<Option<Arc<LstmWeights>>> {
    if motion != MotionModel::Lstm {
        return Ok(None);
    }
    let path = flag
        .map(Path::to_path_buf)
        .or_else(|| config.motion.weights_path.clone())
        .ok_or_else(|| {
            anyhow::anyhow!("motion model lstm needs --weights or motion.weights_path")
        })?;
    Ok(Some(Arc::new(load_weights(&path)?)))
}

pub fn cmd_track(args: &TrackArgs) -> anyhow::Result<()> {
    let mut config = RunConfig::load_or_default(args.config.as_deref())?;
    if let Some(p) = args.pipeline {
        config.tracker.pipeline = p;
    }
    if let Some(m) = args.motion {
        config.tracker.motion_model = m;
    }
    let weights = resolve_weights(
        config.tracker.motion_model,
        args.weights.as_deref(),
        &config,
    )?;
    let frames = read_frame_bundles(&args.detections, &args.poses)?;
    let result = run_pipeline(&frames, &config.tracker, &config.affinity, weights)?;
    write_tracking_result(&args.out, &result)?;
    Ok(())
}

pub struct TrainMotionArgs {
    pub gt: PathBuf,
    pub detections: PathBuf,
    pub poses: PathBuf,
    pub config: Option<PathBuf>,
    pub out: PathBuf,
    pub log: Option<PathBuf>,
    /// Optional dump of the matched trajectory windows (JSON Lines).
    pub dataset_out: Option<PathBuf>,
}

/// Fuses a sequence the way the merge-then-track pipeline would.
fn fuse_sequence(frames: &[FrameBundle], nms_iou: f64) -> anyhow::Result<Vec<DetectionRecord>> {
    let mut fused = Vec::new();
    for bundle in frames {
        let lifted = lift_frame(bundle)?;
        fused.extend(nms_3d(&lifted, nms_iou)?);
    }
    Ok(fused)
}

pub fn cmd_train_motion(args: &TrainMotionArgs) -> anyhow::Result<()> {
    let config = RunConfig::load_or_default(args.config.as_deref())?;
    let gt = read_ground_truth(&args.gt)?;
    let frames = read_frame_bundles(&args.detections, &args.poses)?;
    let mut fused = fuse_sequence(&frames, config.tracker.nms_iou3d)?;
    // mirror inference: the tracker never sees detections below the
    // continue score, so the motion model must not train on them
    fused.retain(|d| d.confidence >= config.tracker.continue_score);
    let dataset = build_trajectory_dataset(
        &gt,
        &fused,
        config.train.bev_match_threshold,
        config.train.window,
    );
    if dataset.is_empty() {
        bail!("trajectory dataset is empty; nothing to train on");
    }
    if let Some(dataset_path) = &args.dataset_out {
        crate::formats::write_trajectory_dataset(dataset_path, &dataset)?;
    }

    let mut weights = LstmWeights::init(config.motion.hidden, config.train.seed);
    let log = train_motion_model(&dataset, None, &mut weights, &config.train)?;
    save_weights(&args.out, &weights)?;

    if let Some(log_path) = &args.log {
        let mut out = std::io::BufWriter::new(std::fs::File::create(log_path)?);
        writeln!(out, "epoch,mean_loss,traj_term,linear_term")?;
        for e in &log.epochs {
            writeln!(
                out,
                "{},{},{},{}",
                e.epoch, e.mean_loss, e.traj_term, e.linear_term
            )?;
        }
        out.flush()?;
    }
    Ok(())
}

pub struct EvalArgs {
    pub result: PathBuf,
    pub gt: PathBuf,
    pub matcher: String,
    pub n_points: usize,
    pub out: PathBuf,
    pub curves: Option<PathBuf>,
}

#[derive(Serialize)]
struct SummaryJson {
    amota: f64,
    amotp: f64,
    recall: f64,
    mota: f64,
    id_switches: u64,
    false_positives: u64,
    false_negatives: u64,
}

#[derive(Serialize)]
struct CategoryJson {
    category: String,
    amota: f64,
    amotp: f64,
    recall: f64,
    mota: f64,
    id_switches: u64,
    false_positives: u64,
    false_negatives: u64,
    gt_count: u64,
    /// Recall points the tracker never reaches contribute MOTA 0 and
    /// the gate distance; they are counted here.
    unreachable_recall_points: usize,
}

#[derive(Serialize)]
struct ReportJson {
    matcher: String,
    n_points: usize,
    mean: SummaryJson,
    categories: Vec<CategoryJson>,
}

fn report_json(report: &MetricReport, matcher: &str, n_points: usize) -> ReportJson {
    ReportJson {
        matcher: matcher.to_string(),
        n_points,
        mean: SummaryJson {
            amota: report.mean_amota,
            amotp: report.mean_amotp,
            recall: report.mean_recall,
            mota: report.mean_mota,
            id_switches: report.total_id_switches,
            false_positives: report.total_fp,
            false_negatives: report.total_fn,
        },
        categories: report
            .per_category
            .iter()
            .map(|c| CategoryJson {
                category: c.category.clone(),
                amota: c.amota,
                amotp: c.amotp,
                recall: c.recall,
                mota: c.mota,
                id_switches: c.id_switches,
                false_positives: c.fp,
                false_negatives: c.fn_count,
                gt_count: c.gt_count,
                unreachable_recall_points: c.curve.iter().filter(|p| !p.reachable).count(),
            })
            .collect(),
    }
}

/// Aligned-column rendering of a report, one row per category plus the
/// macro mean.
pub fn report_table(report: &MetricReport) -> String {
    let mut out = String::new();
    out.push_str(&format!(
        "{:<12} {:>8} {:>8} {:>8} {:>8} {:>6} {:>6} {:>6} {:>6}\n",
        "category", "AMOTA", "AMOTP", "RECALL", "MOTA", "IDS", "FP", "FN", "GT"
    ));
    for c in &report.per_category {
        out.push_str(&format!(
            "{:<12} {:>8.4} {:>8.4} {:>8.4} {:>8.4} {:>6} {:>6} {:>6} {:>6}\n",
            c.category,
            c.amota,
            c.amotp,
            c.recall,
            c.mota,
            c.id_switches,
            c.fp,
            c.fn_count,
            c.gt_count
        ));
    }
    out.push_str(&format!(
        "{:<12} {:>8.4} {:>8.4} {:>8.4} {:>8.4} {:>6} {:>6} {:>6}\n",
        "mean",
        report.mean_amota,
        report.mean_amotp,
        report.mean_recall,
        report.mean_mota,
        report.total_id_switches,
        report.total_fp,
        report.total_fn
    ));
    out
}

pub fn cmd_eval(args: &EvalArgs) -> anyhow::Result<()> {
    let matcher = parse_matcher(&args.matcher)?;
    let result = read_tracking_result(&args.result)?;
    let gt = read_ground_truth(&args.gt)?;
    let report = evaluate(&result, &gt, args.n_points, matcher)?;

    let json = serde_json::to_string_pretty(&report_json(&report, &args.matcher, args.n_points))?;
    std::fs::write(&args.out, json + "\n")?;
    print!("{}", report_table(&report));

    if let Some(curves_path) = &args.curves {
        let mut out = std::io::BufWriter::new(std::fs::File::create(curves_path)?);
        writeln!(
            out,
            "category,target_recall,threshold,mota,tp,fp,fn,id_switches,mean_distance,reachable"
        )?;
        for c in &report.per_category {
            for p in &c.curve {
                let threshold = p.threshold.map(|t| t.to_string()).unwrap_or_default();
                writeln!(
                    out,
                    "{},{},{},{},{},{},{},{},{},{}",
                    c.category,
                    p.target_recall,
                    threshold,
                    p.mota,
                    p.tp,
                    p.fp,
                    p.fn_count,
                    p.id_switches,
                    p.mean_distance,
                    p.reachable
                )?;
            }
        }
        out.flush()?;
    }
    Ok(())
}

pub struct CompareArgs {
    pub detections: PathBuf,
    pub poses: PathBuf,
    pub gt: PathBuf,
    pub config: Option<PathBuf>,
    pub weights: Option<PathBuf>,
    pub out: PathBuf,
    pub jobs: usize,
}

const PIPELINES: [(Pipeline, &str); 3] = [
    (Pipeline::SingleCamera, "single_camera"),
    (Pipeline::TrackThenMerge, "track_then_merge"),
    (Pipeline::MergeThenTrack, "merge_then_track"),
];
const MOTIONS: [(MotionModel, &str); 3] = [
    (MotionModel::None, "none"),
    (MotionModel::Kf3d, "kf3d"),
    (MotionModel::Lstm, "lstm"),
];

/// Runs the 3 pipelines × 3 motion models and renders the ablation
/// table (AMOTA, AMOTP, RECALL, MOTA, IDS per row).
pub fn cmd_compare(args: &CompareArgs) -> anyhow::Result<()> {
    let config = RunConfig::load_or_default(args.config.as_deref())?;
    let weights = resolve_weights(MotionModel::Lstm, args.weights.as_deref(), &config)?;
    let frames = read_frame_bundles(&args.detections, &args.poses)?;
    let gt = read_ground_truth(&args.gt)?;
    let matcher = parse_matcher(&config.metrics.matcher)?;
    let n_points = config.metrics.n_points;

    let combos: Vec<(Pipeline, &str, MotionModel, &str)> = PIPELINES
        .iter()
        .flat_map(|&(p, pn)| MOTIONS.iter().map(move |&(m, mn)| (p, pn, m, mn)))
        .collect();

    let run_combo = |&(pipeline, pname, motion, mname): &(Pipeline, &str, MotionModel, &str)|
        -> anyhow::Result<(String, String, MetricReport)> {
        let mut tracker = config.tracker.clone();
        tracker.pipeline = pipeline;
        tracker.motion_model = motion;
        let w = if motion == MotionModel::Lstm {
            weights.clone()
        } else {
            None
        };
        let result = run_pipeline(&frames, &tracker, &config.affinity, w)?;
        let report = evaluate(&result, &gt, n_points, matcher)?;
        Ok((pname.to_string(), mname.to_string(), report))
    };

    let rows: Vec<(String, String, MetricReport)> = if args.jobs > 1 {
        let mut slots: Vec<Option<anyhow::Result<_>>> = Vec::new();
        slots.resize_with(combos.len(), || None);
        let next = std::sync::atomic::AtomicUsize::new(0);
        let slots = std::sync::Mutex::new(&mut slots);
        std::thread::scope(|scope| {
            for _ in 0..args.jobs.min(combos.len()) {
                scope.spawn(|| loop {
                    let i = next.fetch_add(1, std::sync::atomic::Ordering::SeqCst);
                    if i >= combos.len() {
                        break;
                    }
                    let out = run_combo(&combos[i]);
                    slots.lock().unwrap()[i] = Some(out);
                });
            }
        });
        let collected = slots.into_inner().unwrap();
        collected
            .iter_mut()
            .map(|s| s.take().expect("combo computed"))
            .collect::<anyhow::Result<Vec<_>>>()?
    } else {
        combos
            .iter()
            .map(run_combo)
            .collect::<anyhow::Result<Vec<_>>>()?
    };

    let mut table = String::new();
    table.push_str(&format!(
        "{:<18} {:<6} {:>8} {:>8} {:>8} {:>8} {:>6}\n",
        "pipeline", "motion", "AMOTA", "AMOTP", "RECALL", "MOTA", "IDS"
    ));
    for (pname, mname, report) in &rows {
        table.push_str(&format!(
            "{:<18} {:<6} {:>8.4} {:>8.4} {:>8.4} {:>8.4} {:>6}\n",
            pname,
            mname,
            report.mean_amota,
            report.mean_amotp,
            report.mean_recall,
            report.mean_mota,
            report.total_id_switches
        ));
    }
    std::fs::write(&args.out, &table)?;
    Ok(())
}

/// Reads a compare table back into (pipeline, motion, amota, amotp,
/// recall, mota, ids) rows; used by tests and downstream tooling.
pub fn parse_compare_table(text: &str) -> Vec<(String, String, f64, f64, f64, f64, u64)> {
    text.lines()
        .skip(1)
        .filter(|l| !l.trim().is_empty())
        .map(|l| {
            let f: Vec<&str> = l.split_whitespace().collect();
            (
                f[0].to_string(),
                f[1].to_string(),
                f[2].parse().unwrap(),
                f[3].parse().unwrap(),
                f[4].parse().unwrap(),
                f[5].parse().unwrap(),
                f[6].parse().unwrap(),
            )
        })
        .collect()
}
