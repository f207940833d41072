//! Tracking evaluation: recall-normalized MOTA, its integrals AMOTA and
//! AMOTP over a sweep of recall points, and single-threshold
//! IoU-gated MOTA with the mismatch ratio.
//!
//! Recall is computed sequence-wide: the confidence threshold for a
//! recall point `r` is the highest threshold whose sequence recall is
//! still `>= r`. Identity switches count a ground-truth object whose
//! matched track id differs from the id of its last matched frame.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;

use crate::geom::{bev_distance, iou_3d, Box3D};

/// One emitted track state.
#[derive(Debug, Clone, PartialEq)]
pub struct TrackOutput {
    pub track_id: u64,
    pub box3d: Box3D,
    pub confidence: f64,
    pub category: String,
}

/// Tracker output for one frame. Track ids must be unique per frame.
#[derive(Debug, Clone, PartialEq)]
pub struct ResultFrame {
    pub frame: u64,
    pub entries: Vec<TrackOutput>,
}

/// Full per-frame tracker output.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct TrackingResult {
    pub frames: Vec<ResultFrame>,
}

/// One annotated object.
#[derive(Debug, Clone, PartialEq)]
pub struct GtEntry {
    pub object_id: u64,
    pub box3d: Box3D,
    pub category: String,
}

/// Ground truth for one frame. Object ids must be unique per frame.
#[derive(Debug, Clone, PartialEq)]
pub struct GtFrame {
    pub frame: u64,
    pub entries: Vec<GtEntry>,
}

/// Full per-frame ground truth.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct GroundTruth {
    pub frames: Vec<GtFrame>,
}

impl GroundTruth {
    pub fn total_boxes(&self) -> u64 {
        self.frames.iter().map(|f| f.entries.len() as u64).sum()
    }
}

/// Gate used to decide whether a prediction may match a ground-truth
/// box. `Bev` matches by center distance on the ground plane, `Iou3d`
/// by volumetric overlap.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Matcher {
    Bev { gate: f64 },
    Iou3d { min_iou: f64 },
}

impl Matcher {
    /// Lower-is-better matching cost, or `None` when outside the gate.
    fn cost(&self, pred: &Box3D, gt: &Box3D) -> Option<f64> {
        match *self {
            Matcher::Bev { gate } => {
                let d = bev_distance(pred, gt);
                (d <= gate).then_some(d)
            }
            Matcher::Iou3d { min_iou } => {
                let iou = iou_3d(pred, gt);
                (iou >= min_iou).then_some(-iou)
            }
        }
    }

    /// Distance used by zero-TP recall points in AMOTP. The BEV gate is
    /// its own fallback; IoU matching has no distance gate, so the
    /// conventional 2 m BEV gate stands in.
    fn fallback_distance(&self) -> f64 {
        match *self {
            Matcher::Bev { gate } => gate,
            Matcher::Iou3d { .. } => 2.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum MetricsError {
    #[error("n_points must be at least 2, got {0}")]
    TooFewRecallPoints(usize),
    #[error("recall level {0} outside (0, 1]")]
    InvalidRecall(f64),
}

/// Result of matching one frame.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct FrameMatch {
    /// (prediction index, ground-truth index) pairs.
    pub pairs: Vec<(usize, usize)>,
    pub unmatched_preds: Vec<usize>,
    pub unmatched_gts: Vec<usize>,
}

/// Greedy one-to-one matching of one frame: best score first, subject
/// to the matcher gate and same category. On ties the pair continuing
/// `prev_assignment` (ground-truth id → track id from the last matched
/// frame) wins, then lower indices.
pub fn match_frame(
    preds: &[TrackOutput],
    gts: &[GtEntry],
    matcher: Matcher,
    prev_assignment: &BTreeMap<u64, u64>,
) -> FrameMatch {
    let mut candidates: Vec<(f64, bool, usize, usize)> = Vec::new();
    for (gi, gt) in gts.iter().enumerate() {
        for (pi, pred) in preds.iter().enumerate() {
            if pred.category != gt.category {
                continue;
            }
            if let Some(cost) = matcher.cost(&pred.box3d, &gt.box3d) {
                let continues = prev_assignment.get(&gt.object_id) == Some(&pred.track_id);
                candidates.push((cost, !continues, gi, pi));
            }
        }
    }
    candidates.sort_by(|a, b| {
        a.0.partial_cmp(&b.0)
            .unwrap_or(core::cmp::Ordering::Equal)
            .then(a.1.cmp(&b.1))
            .then(a.2.cmp(&b.2))
            .then(a.3.cmp(&b.3))
    });

    let mut pred_used = alloc::vec![false; preds.len()];
    let mut gt_used = alloc::vec![false; gts.len()];
    let mut pairs = Vec::new();
    for (_, _, gi, pi) in candidates {
        if !pred_used[pi] && !gt_used[gi] {
            pred_used[pi] = true;
            gt_used[gi] = true;
            pairs.push((pi, gi));
        }
    }
    FrameMatch {
        pairs,
        unmatched_preds: (0..preds.len()).filter(|&i| !pred_used[i]).collect(),
        unmatched_gts: (0..gts.len()).filter(|&i| !gt_used[i]).collect(),
    }
}

/// Error counts of one full-sequence pass at a fixed threshold.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SequenceCounts {
    pub tp: u64,
    pub fp: u64,
    pub fn_count: u64,
    pub id_switches: u64,
    /// Sum of BEV distances over matched pairs.
    pub distance_sum: f64,
}

/// Frames aligned between result and ground truth (outer join on the
/// frame index, ascending).
fn aligned_frames<'a>(
    result: &'a TrackingResult,
    gt: &'a GroundTruth,
) -> Vec<(&'a [TrackOutput], &'a [GtEntry])> {
    let mut by_frame: BTreeMap<u64, (&[TrackOutput], &[GtEntry])> = BTreeMap::new();
    for f in &result.frames {
        by_frame.entry(f.frame).or_insert((&[], &[])).0 = &f.entries;
    }
    for f in &gt.frames {
        by_frame.entry(f.frame).or_insert((&[], &[])).1 = &f.entries;
    }
    by_frame.into_values().collect()
}

/// Runs the full sequence at one confidence threshold.
fn run_sequence(
    frames: &[(&[TrackOutput], &[GtEntry])],
    matcher: Matcher,
    threshold: f64,
) -> SequenceCounts {
    let mut counts = SequenceCounts::default();
    // gt id -> track id of its most recent matched frame
    let mut last_assignment: BTreeMap<u64, u64> = BTreeMap::new();
    let mut kept: Vec<TrackOutput> = Vec::new();
    for (preds, gts) in frames {
        kept.clear();
        kept.extend(preds.iter().filter(|p| p.confidence >= threshold).cloned());
        let matched = match_frame(&kept, gts, matcher, &last_assignment);
        counts.tp += matched.pairs.len() as u64;
        counts.fp += matched.unmatched_preds.len() as u64;
        counts.fn_count += matched.unmatched_gts.len() as u64;
        for &(pi, gi) in &matched.pairs {
            let gt_entry = &gts[gi];
            let pred = &kept[pi];
            counts.distance_sum += bev_distance(&pred.box3d, &gt_entry.box3d);
            if let Some(&prev_track) = last_assignment.get(&gt_entry.object_id) {
                if prev_track != pred.track_id {
                    counts.id_switches += 1;
                }
            }
            last_assignment.insert(gt_entry.object_id, pred.track_id);
        }
    }
    counts
}

/// Metrics at one target recall level.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RecallPoint {
    pub target_recall: f64,
    /// Confidence threshold used; `None` when the recall is unreachable.
    pub threshold: Option<f64>,
    pub mota: f64,
    pub tp: u64,
    pub fp: u64,
    pub fn_count: u64,
    pub id_switches: u64,
    /// Mean BEV distance of matches; gate distance when TP = 0.
    pub mean_distance: f64,
    pub reachable: bool,
}

/// Per-category evaluation summary.
#[derive(Debug, Clone, PartialEq)]
pub struct CategoryMetrics {
    pub category: String,
    pub amota: f64,
    pub amotp: f64,
    /// Best sequence recall over the sweep (all predictions kept).
    pub recall: f64,
    /// Best MOTA over the recall points.
    pub mota: f64,
    /// Totals with every prediction kept.
    pub id_switches: u64,
    pub fp: u64,
    pub fn_count: u64,
    pub gt_count: u64,
    pub curve: Vec<RecallPoint>,
}

/// Evaluation report: per-category metrics plus their macro average.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricReport {
    pub per_category: Vec<CategoryMetrics>,
    pub mean_amota: f64,
    pub mean_amotp: f64,
    pub mean_recall: f64,
    pub mean_mota: f64,
    pub total_id_switches: u64,
    pub total_fp: u64,
    pub total_fn: u64,
}

fn filter_category(
    result: &TrackingResult,
    gt: &GroundTruth,
    category: &str,
) -> (TrackingResult, GroundTruth) {
    let res = TrackingResult {
        frames: result
            .frames
            .iter()
            .map(|f| ResultFrame {
                frame: f.frame,
                entries: f
                    .entries
                    .iter()
                    .filter(|e| e.category == category)
                    .cloned()
                    .collect(),
            })
            .collect(),
    };
    let gt = GroundTruth {
        frames: gt
            .frames
            .iter()
            .map(|f| GtFrame {
                frame: f.frame,
                entries: f
                    .entries
                    .iter()
                    .filter(|e| e.category == category)
                    .cloned()
                    .collect(),
            })
            .collect(),
    };
    (res, gt)
}

/// Distinct confidence values, descending: the only thresholds at which
/// the kept prediction set changes.
fn candidate_thresholds(result: &TrackingResult) -> Vec<f64> {
    let mut confs: Vec<f64> = result
        .frames
        .iter()
        .flat_map(|f| f.entries.iter().map(|e| e.confidence))
        .collect();
    confs.sort_by(|a, b| b.partial_cmp(a).unwrap_or(core::cmp::Ordering::Equal));
    confs.dedup();
    confs
}

/// Full sweep: one [`SequenceCounts`] per candidate threshold,
/// descending threshold order (ascending recall).
fn sweep(
    result: &TrackingResult,
    gt: &GroundTruth,
    matcher: Matcher,
) -> (Vec<(f64, SequenceCounts)>, u64) {
    let frames = aligned_frames(result, gt);
    let p = gt.total_boxes();
    let stats = candidate_thresholds(result)
        .into_iter()
        .map(|t| (t, run_sequence(&frames, matcher, t)))
        .collect();
    (stats, p)
}

fn mota_formula(counts: &SequenceCounts, r: f64, p: u64) -> f64 {
    let p = p as f64;
    let numer =
        counts.id_switches as f64 + counts.fp as f64 + counts.fn_count as f64 - (1.0 - r) * p;
    // max(0, ·) per the definition; capped at 1 so discrete recall
    // overshoot (recall above the target at the chosen threshold)
    // cannot push the score outside [0, 1].
    (1.0 - numer / (r * p)).clamp(0.0, 1.0)
}

fn recall_point(
    sweep_stats: &[(f64, SequenceCounts)],
    p: u64,
    r: f64,
    matcher: Matcher,
) -> RecallPoint {
    // Highest threshold whose sequence recall reaches r. Thresholds are
    // descending, recall ascending: take the first hit.
    let hit = sweep_stats
        .iter()
        .find(|(_, c)| p > 0 && c.tp as f64 / p as f64 >= r);
    match hit {
        Some(&(threshold, counts)) => RecallPoint {
            target_recall: r,
            threshold: Some(threshold),
            mota: mota_formula(&counts, r, p),
            tp: counts.tp,
            fp: counts.fp,
            fn_count: counts.fn_count,
            id_switches: counts.id_switches,
            mean_distance: if counts.tp > 0 {
                counts.distance_sum / counts.tp as f64
            } else {
                matcher.fallback_distance()
            },
            reachable: true,
        },
        None => RecallPoint {
            target_recall: r,
            threshold: None,
            mota: 0.0,
            tp: 0,
            fp: 0,
            fn_count: p,
            id_switches: 0,
            mean_distance: matcher.fallback_distance(),
            reachable: false,
        },
    }
}

/// Recall levels `{1/(n−1), …, 1}`.
fn recall_levels(n_points: usize) -> Vec<f64> {
    let n = n_points as f64;
    (1..n_points).map(|k| k as f64 / (n - 1.0)).collect()
}

/// MOTA at one recall level, pooled over all categories.
pub fn mota_at_recall(
    result: &TrackingResult,
    gt: &GroundTruth,
    r: f64,
    matcher: Matcher,
) -> Result<RecallPoint, MetricsError> {
    if !(r > 0.0 && r <= 1.0) {
        return Err(MetricsError::InvalidRecall(r));
    }
    let (stats, p) = sweep(result, gt, matcher);
    Ok(recall_point(&stats, p, r, matcher))
}

/// AMOTA pooled over all categories: the mean of `MOTA_r` over the
/// `n_points − 1` recall levels.
pub fn amota(
    result: &TrackingResult,
    gt: &GroundTruth,
    n_points: usize,
    matcher: Matcher,
) -> Result<f64, MetricsError> {
    if n_points < 2 {
        return Err(MetricsError::TooFewRecallPoints(n_points));
    }
    let (stats, p) = sweep(result, gt, matcher);
    let levels = recall_levels(n_points);
    let sum: f64 = levels
        .iter()
        .map(|&r| recall_point(&stats, p, r, matcher).mota)
        .sum();
    Ok(sum / levels.len() as f64)
}

/// AMOTP pooled over all categories: mean over recall points of the
/// mean matched BEV distance (gate distance at zero-TP points).
pub fn amotp(
    result: &TrackingResult,
    gt: &GroundTruth,
    n_points: usize,
    matcher: Matcher,
) -> Result<f64, MetricsError> {
    if n_points < 2 {
        return Err(MetricsError::TooFewRecallPoints(n_points));
    }
    let (stats, p) = sweep(result, gt, matcher);
    let levels = recall_levels(n_points);
    let sum: f64 = levels
        .iter()
        .map(|&r| recall_point(&stats, p, r, matcher).mean_distance)
        .sum();
    Ok(sum / levels.len() as f64)
}

/// Single-threshold CLEAR-MOT with 3D IoU gating: `(MOTA, IDS / P)`.
/// MOTA here is unclamped and may be negative for weak trackers.
pub fn mota_iou(result: &TrackingResult, gt: &GroundTruth, iou_threshold: f64) -> (f64, f64) {
    let frames = aligned_frames(result, gt);
    let counts = run_sequence(
        &frames,
        Matcher::Iou3d {
            min_iou: iou_threshold,
        },
        f64::NEG_INFINITY,
    );
    let p = gt.total_boxes();
    if p == 0 {
        return (0.0, 0.0);
    }
    let mota =
        1.0 - (counts.id_switches as f64 + counts.fp as f64 + counts.fn_count as f64) / p as f64;
    (mota, counts.id_switches as f64 / p as f64)
}

/// Full per-category evaluation with macro averages.
pub fn evaluate(
    result: &TrackingResult,
    gt: &GroundTruth,
    n_points: usize,
    matcher: Matcher,
) -> Result<MetricReport, MetricsError> {
    if n_points < 2 {
        return Err(MetricsError::TooFewRecallPoints(n_points));
    }
    let mut categories: Vec<String> = gt
        .frames
        .iter()
        .flat_map(|f| f.entries.iter().map(|e| e.category.clone()))
        .chain(
            result
                .frames
                .iter()
                .flat_map(|f| f.entries.iter().map(|e| e.category.clone())),
        )
        .collect();
    categories.sort();
    categories.dedup();

    let levels = recall_levels(n_points);
    let mut per_category = Vec::new();
    for category in &categories {
        let (res_c, gt_c) = filter_category(result, gt, category);
        let (stats, p) = sweep(&res_c, &gt_c, matcher);
        let curve: Vec<RecallPoint> = levels
            .iter()
            .map(|&r| recall_point(&stats, p, r, matcher))
            .collect();
        let amota = curve.iter().map(|pt| pt.mota).sum::<f64>() / curve.len() as f64;
        let amotp = curve.iter().map(|pt| pt.mean_distance).sum::<f64>() / curve.len() as f64;
        // stats at the lowest threshold = every prediction kept
        let full = stats.last().map(|&(_, c)| c).unwrap_or_default();
        let recall = if p > 0 {
            full.tp as f64 / p as f64
        } else {
            0.0
        };
        let mota = curve.iter().map(|pt| pt.mota).fold(0.0, f64::max);
        per_category.push(CategoryMetrics {
            category: category.clone(),
            amota,
            amotp,
            recall,
            mota,
            id_switches: full.id_switches,
            fp: full.fp,
            fn_count: if stats.is_empty() { p } else { full.fn_count },
            gt_count: p,
            curve,
        });
    }

    let n = per_category.len().max(1) as f64;
    Ok(MetricReport {
        mean_amota: per_category.iter().map(|c| c.amota).sum::<f64>() / n,
        mean_amotp: per_category.iter().map(|c| c.amotp).sum::<f64>() / n,
        mean_recall: per_category.iter().map(|c| c.recall).sum::<f64>() / n,
        mean_mota: per_category.iter().map(|c| c.mota).sum::<f64>() / n,
        total_id_switches: per_category.iter().map(|c| c.id_switches).sum(),
        total_fp: per_category.iter().map(|c| c.fp).sum(),
        total_fn: per_category.iter().map(|c| c.fn_count).sum(),
        per_category,
    })
}
