//! Online tracker: greedy assignment on the combined affinity matrix,
//! track lifecycle (active / inactive / dead), appearance momentum,
//! backdrop-based duplicate suppression, and the three multi-camera
//! pipeline paradigms (single-camera, track-then-merge,
//! merge-then-track).

use alloc::string::String;
use alloc::sync::Arc;
use alloc::vec::Vec;

use crate::affinity::{
    combined_affinity, AffinityConfig, AffinityError, AffinityMatrix, TrackFeatures,
};
use crate::fusion::{lift_frame, nms_3d, DetectionRecord, Embedding, FrameBundle, FusionError};
use crate::geom::iou_3d;
use crate::metrics::{ResultFrame, TrackOutput, TrackingResult};
use crate::motion::{
    advance_state, box_from_state, kf_predict, kf_update, lstm_predict, lstm_update, KfConfig,
    KfState, LstmState, LstmWeights, MotionError, Velocity7,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum TrackStatus {
    Active,
    Inactive,
    Dead,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum MotionModel {
    None,
    Kf3d,
    Lstm,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum Pipeline {
    /// Independent tracker per camera; outputs concatenated with
    /// namespaced ids.
    SingleCamera,
    /// Per-camera trackers whose per-frame outputs are merged by 3D
    /// NMS, keeping the higher-confidence identity on conflict.
    TrackThenMerge,
    /// Detections fused across cameras first, one global tracker.
    MergeThenTrack,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default, deny_unknown_fields))]
pub struct TrackerConfig {
    /// Minimum affinity for a greedy match.
    pub match_threshold: f64,
    /// Minimum confidence to spawn a new track.
    pub start_score: f64,
    /// Minimum confidence for a detection to take part in association.
    pub continue_score: f64,
    /// Frames a track may stay unmatched before it is declared dead.
    pub max_inactive_frames: u32,
    /// Frames a backdrop is retained as a duplicate-suppression anchor.
    pub backdrop_frames: u32,
    /// Momentum of the appearance-embedding update.
    pub embed_momentum: f64,
    /// 2D IoU thresholds for duplicate removal against matched outputs
    /// and backdrops. They apply when per-camera 2D boxes accompany the
    /// detections; this artifact's detections are 3D-only, so duplicate
    /// removal uses `dup_iou3d` instead.
    pub dup_iou2d_new: f64,
    pub dup_iou2d_backdrop: f64,
    /// 3D IoU above which an unmatched detection counts as a duplicate.
    pub dup_iou3d: f64,
    /// 3D NMS threshold used by the fusing pipelines.
    pub nms_iou3d: f64,
    pub pipeline: Pipeline,
    pub motion_model: MotionModel,
}

impl Default for TrackerConfig {
    fn default() -> Self {
        Self {
            match_threshold: 0.5,
            start_score: 0.8,
            continue_score: 0.5,
            max_inactive_frames: 10,
            backdrop_frames: 1,
            embed_momentum: 0.8,
            dup_iou2d_new: 0.7,
            dup_iou2d_backdrop: 0.3,
            dup_iou3d: 0.1,
            nms_iou3d: 0.1,
            pipeline: Pipeline::MergeThenTrack,
            motion_model: MotionModel::None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum TrackerError {
    #[error("detection carries frame {got} while stepping frame {expected}")]
    FrameMismatch { expected: u64, got: u64 },
    #[error("frames not in ascending order: {prev} then {got}")]
    UnorderedFrames { prev: u64, got: u64 },
    #[error("motion model is lstm but no weights were provided")]
    MissingWeights,
    #[error(transparent)]
    Affinity(#[from] AffinityError),
    #[error(transparent)]
    Fusion(#[from] FusionError),
    #[error(transparent)]
    Motion(#[from] MotionError),
}

/// Greedy assignment result. Matches carry track ids, not row indices.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Assignment {
    pub matches: Vec<(u64, usize)>,
    pub unmatched_tracks: Vec<u64>,
    pub unmatched_detections: Vec<usize>,
}

/// Repeatedly commits the globally maximal affinity entry at or above
/// `threshold`, deleting its row and column. Ties break toward the
/// lower track id, then the lower detection index.
pub fn greedy_assign(affinity: &AffinityMatrix, threshold: f64) -> Assignment {
    let rows = affinity.values.rows();
    let cols = affinity.values.cols();
    let mut entries: Vec<(f64, u64, usize, usize)> = Vec::new();
    for r in 0..rows {
        let id = affinity.track_ids[r];
        for c in 0..cols {
            let v = affinity.values.get(r, c);
            if v.is_finite() && v >= threshold {
                entries.push((v, id, c, r));
            }
        }
    }
    entries.sort_by(|a, b| {
        b.0.partial_cmp(&a.0)
            .unwrap_or(core::cmp::Ordering::Equal)
            .then(a.1.cmp(&b.1))
            .then(a.2.cmp(&b.2))
    });

    let mut row_used = alloc::vec![false; rows];
    let mut col_used = alloc::vec![false; cols];
    let mut matches = Vec::new();
    for (_, id, c, r) in entries {
        if !row_used[r] && !col_used[c] {
            row_used[r] = true;
            col_used[c] = true;
            matches.push((id, c));
        }
    }
    Assignment {
        matches,
        unmatched_tracks: (0..rows)
            .filter(|&r| !row_used[r])
            .map(|r| affinity.track_ids[r])
            .collect(),
        unmatched_detections: (0..cols).filter(|&c| !col_used[c]).collect(),
    }
}

#[derive(Debug, Clone)]
enum MotionState {
    None,
    Kf(KfState),
    Lstm(LstmState),
}

/// One recorded track state.
#[derive(Debug, Clone)]
pub struct HistoryEntry {
    pub frame: u64,
    pub embedding: Option<Embedding>,
    pub box7: [f64; 7],
    pub confidence: f64,
}

/// A live (or dead) track in the online memory.
#[derive(Debug, Clone)]
pub struct Track {
    pub id: u64,
    pub category: String,
    pub status: TrackStatus,
    pub frames_since_update: u32,
    pub history: Vec<HistoryEntry>,
    pub embedding: Option<Embedding>,
    pub confidence: f64,
    motion: MotionState,
    /// Current refined (or propagated) box state.
    state: [f64; 7],
    /// Center before the last prediction step.
    prev_center: [f64; 3],
    /// This frame's motion extrapolation.
    predicted: [f64; 7],
    predicted_velocity: Velocity7,
}

impl Track {
    pub fn current_box(&self) -> crate::geom::Box3D {
        box_from_state(&self.state)
    }
}

#[derive(Debug, Clone)]
struct Backdrop {
    box7: [f64; 7],
    category: String,
    added_frame: u64,
}

/// Online multi-object tracker over world-frame detections.
pub struct Tracker {
    pub config: TrackerConfig,
    pub affinity_config: AffinityConfig,
    pub kf_config: KfConfig,
    weights: Option<Arc<LstmWeights>>,
    tracks: Vec<Track>,
    backdrops: Vec<Backdrop>,
    next_local_id: u64,
    id_offset: u64,
    last_frame: Option<u64>,
}

impl Tracker {
    pub fn new(
        config: TrackerConfig,
        affinity_config: AffinityConfig,
        weights: Option<Arc<LstmWeights>>,
    ) -> Result<Self, TrackerError> {
        if config.motion_model == MotionModel::Lstm && weights.is_none() {
            return Err(TrackerError::MissingWeights);
        }
        Ok(Self {
            config,
            affinity_config,
            kf_config: KfConfig::default(),
            weights,
            tracks: Vec::new(),
            backdrops: Vec::new(),
            next_local_id: 0,
            id_offset: 0,
            last_frame: None,
        })
    }

    /// Namespaces this instance's track ids (used by the per-camera
    /// pipelines).
    pub fn with_id_offset(mut self, offset: u64) -> Self {
        self.id_offset = offset;
        self
    }

    pub fn tracks(&self) -> &[Track] {
        &self.tracks
    }

    fn fresh_id(&mut self) -> u64 {
        self.next_local_id += 1;
        self.id_offset + self.next_local_id
    }

    /// Advances the tracker by one frame of world-frame detections and
    /// emits the refined states of all active tracks.
    pub fn step(
        &mut self,
        frame: u64,
        detections: &[DetectionRecord],
    ) -> Result<Vec<TrackOutput>, TrackerError> {
        if let Some(prev) = self.last_frame {
            if frame <= prev {
                return Err(TrackerError::UnorderedFrames { prev, got: frame });
            }
        }
        for d in detections {
            if d.frame != frame {
                return Err(TrackerError::FrameMismatch {
                    expected: frame,
                    got: d.frame,
                });
            }
        }
        self.last_frame = Some(frame);
        self.backdrops
            .retain(|b| frame - b.added_frame <= self.config.backdrop_frames as u64);

        // (1) motion-predict every non-dead track
        for track in self
            .tracks
            .iter_mut()
            .filter(|t| t.status != TrackStatus::Dead)
        {
            track.prev_center = [track.state[0], track.state[1], track.state[2]];
            match &mut track.motion {
                MotionState::None => {
                    track.predicted = track.state;
                    track.predicted_velocity = Velocity7::zero();
                }
                MotionState::Kf(kf) => {
                    *kf = kf_predict(kf);
                    let mut p = [0.0; 7];
                    p.copy_from_slice(&kf.mean[..7]);
                    track.predicted_velocity = Velocity7::between(&p, &track.state);
                    track.predicted = p;
                }
                MotionState::Lstm(state) => {
                    let weights = self.weights.as_ref().expect("checked in new");
                    let v = lstm_predict(state, weights);
                    track.predicted_velocity = v;
                    track.predicted = advance_state(&track.state, &v);
                }
            }
        }

        // (2) gate detections at the continue score
        let candidates: Vec<usize> = (0..detections.len())
            .filter(|&i| detections[i].confidence >= self.config.continue_score)
            .collect();
        let gated: Vec<DetectionRecord> =
            candidates.iter().map(|&i| detections[i].clone()).collect();

        // (3) affinity + greedy assignment
        let features: Vec<TrackFeatures> = self
            .tracks
            .iter()
            .filter(|t| t.status != TrackStatus::Dead)
            .map(|t| TrackFeatures {
                id: t.id,
                category: t.category.clone(),
                embedding: t.embedding.clone(),
                prev_center: t.prev_center,
                predicted_box: box_from_state(&t.predicted),
            })
            .collect();
        let affinity = combined_affinity(&features, &gated, &self.affinity_config)?;
        let assignment = greedy_assign(&affinity, self.config.match_threshold);

        // (4) matched tracks: refine, re-activate, blend appearance
        for &(track_id, det_idx) in &assignment.matches {
            let det = &gated[det_idx];
            let track = self
                .tracks
                .iter_mut()
                .find(|t| t.id == track_id)
                .expect("assignment refers to live track");
            let observed = Velocity7::between(&det.box3d.to_array(), &track.state);
            let new_state = match &mut track.motion {
                MotionState::None => det.box3d.to_array(),
                MotionState::Kf(kf) => {
                    *kf = kf_update(kf, &det.box3d, det.confidence)?;
                    let mut s = [0.0; 7];
                    s.copy_from_slice(&kf.mean[..7]);
                    s
                }
                MotionState::Lstm(state) => {
                    let weights = self.weights.as_ref().expect("checked in new");
                    let refined = lstm_update(
                        state,
                        track.predicted_velocity,
                        observed,
                        det.confidence,
                        weights,
                    );
                    advance_state(&track.state, &refined)
                }
            };
            track.state = new_state;
            track.status = TrackStatus::Active;
            track.frames_since_update = 0;
            track.confidence = det.confidence;
            track.embedding = match (&track.embedding, &det.embedding) {
                (Some(f_track), Some(f_det)) => {
                    Some(f_track.momentum_blend(f_det, self.config.embed_momentum))
                }
                (None, Some(f_det)) => Some(f_det.clone()),
                (existing, None) => existing.clone(),
            };
            track.history.push(HistoryEntry {
                frame,
                embedding: det.embedding.clone(),
                box7: track.state,
                confidence: det.confidence,
            });
        }

        // (5) unmatched tracks: propagate on the prediction, age, kill
        for &track_id in &assignment.unmatched_tracks {
            let track = self
                .tracks
                .iter_mut()
                .find(|t| t.id == track_id)
                .expect("assignment refers to live track");
            track.frames_since_update += 1;
            track.status = if track.frames_since_update > self.config.max_inactive_frames {
                TrackStatus::Dead
            } else {
                TrackStatus::Inactive
            };
            if track.status != TrackStatus::Dead {
                track.state = track.predicted;
                if let MotionState::Lstm(state) = &mut track.motion {
                    state.push_velocity(track.predicted_velocity);
                }
            }
        }

        // (6) unmatched detections: spawn or become backdrops
        let mut spawn_order = assignment.unmatched_detections.clone();
        spawn_order.sort_by(|&a, &b| {
            gated[b]
                .confidence
                .partial_cmp(&gated[a].confidence)
                .unwrap_or(core::cmp::Ordering::Equal)
                .then(gated[a].camera_id.cmp(&gated[b].camera_id))
                .then(a.cmp(&b))
        });
        // anchors: this frame's matched outputs plus freshly spawned tracks
        let mut anchors: Vec<([f64; 7], String)> = assignment
            .matches
            .iter()
            .map(|&(track_id, _)| {
                let t = self.tracks.iter().find(|t| t.id == track_id).unwrap();
                (t.state, t.category.clone())
            })
            .collect();
        let mut new_backdrops: Vec<Backdrop> = Vec::new();
        for det_idx in spawn_order {
            let det = &gated[det_idx];
            let det_state = det.box3d.to_array();
            if det.confidence >= self.config.start_score
                && self.is_duplicate(&det_state, &det.category, &anchors)
            {
                // A confident duplicate of something already represented
                // is dropped outright. Turning it into a backdrop would
                // let backdrops suppress the same object's spawn forever.
                continue;
            }
            if det.confidence >= self.config.start_score {
                let id = self.fresh_id();
                let motion = match self.config.motion_model {
                    MotionModel::None => MotionState::None,
                    MotionModel::Kf3d => {
                        MotionState::Kf(KfState::from_box(&det.box3d, self.kf_config))
                    }
                    MotionModel::Lstm => MotionState::Lstm(LstmState::new(
                        self.weights.as_ref().expect("checked in new").hidden,
                    )),
                };
                self.tracks.push(Track {
                    id,
                    category: det.category.clone(),
                    status: TrackStatus::Active,
                    frames_since_update: 0,
                    history: alloc::vec![HistoryEntry {
                        frame,
                        embedding: det.embedding.clone(),
                        box7: det_state,
                        confidence: det.confidence,
                    }],
                    embedding: det.embedding.clone(),
                    confidence: det.confidence,
                    motion,
                    state: det_state,
                    prev_center: [det_state[0], det_state[1], det_state[2]],
                    predicted: det_state,
                    predicted_velocity: Velocity7::zero(),
                });
                anchors.push((det_state, det.category.clone()));
            } else {
                new_backdrops.push(Backdrop {
                    box7: det_state,
                    category: det.category.clone(),
                    added_frame: frame,
                });
            }
        }
        self.backdrops.extend(new_backdrops);

        // (7) emit active tracks, ordered by id
        let mut outputs: Vec<TrackOutput> = self
            .tracks
            .iter()
            .filter(|t| t.status == TrackStatus::Active)
            .map(|t| TrackOutput {
                track_id: t.id,
                box3d: t.current_box(),
                confidence: t.confidence,
                category: t.category.clone(),
            })
            .collect();
        outputs.sort_by_key(|o| o.track_id);
        Ok(outputs)
    }

    fn is_duplicate(
        &self,
        det_state: &[f64; 7],
        category: &str,
        anchors: &[([f64; 7], String)],
    ) -> bool {
        let det_box = box_from_state(det_state);
        let over =
            |other: &[f64; 7]| iou_3d(&det_box, &box_from_state(other)) >= self.config.dup_iou3d;
        anchors
            .iter()
            .any(|(state, cat)| cat == category && over(state))
            || self
                .backdrops
                .iter()
                .any(|b| b.category == category && over(&b.box7))
    }
}

/// Per-camera id namespace stride: camera index goes in the high bits.
const CAMERA_ID_STRIDE: u64 = 1 << 32;

fn check_ordered(frames: &[FrameBundle]) -> Result<(), TrackerError> {
    for pair in frames.windows(2) {
        if pair[1].frame <= pair[0].frame {
            return Err(TrackerError::UnorderedFrames {
                prev: pair[0].frame,
                got: pair[1].frame,
            });
        }
    }
    Ok(())
}

/// Runs a full sequence through the configured pipeline.
pub fn run_pipeline(
    frames: &[FrameBundle],
    config: &TrackerConfig,
    affinity_config: &AffinityConfig,
    weights: Option<Arc<LstmWeights>>,
) -> Result<TrackingResult, TrackerError> {
    check_ordered(frames)?;
    match config.pipeline {
        Pipeline::MergeThenTrack => {
            let mut tracker = Tracker::new(config.clone(), affinity_config.clone(), weights)?;
            let mut result = TrackingResult::default();
            for bundle in frames {
                let lifted = lift_frame(bundle)?;
                let fused = nms_3d(&lifted, config.nms_iou3d)?;
                let entries = tracker.step(bundle.frame, &fused)?;
                result.frames.push(ResultFrame {
                    frame: bundle.frame,
                    entries,
                });
            }
            Ok(result)
        }
        Pipeline::SingleCamera => {
            let merged = run_per_camera(frames, config, affinity_config, weights)?;
            Ok(merged)
        }
        Pipeline::TrackThenMerge => {
            let merged = run_per_camera(frames, config, affinity_config, weights)?;
            let mut result = TrackingResult::default();
            for frame in merged.frames {
                let entries = nms_outputs(&frame.entries, config.nms_iou3d);
                result.frames.push(ResultFrame {
                    frame: frame.frame,
                    entries,
                });
            }
            Ok(result)
        }
    }
}

/// Independent tracker per camera; outputs concatenated per frame with
/// ids namespaced by camera index.
fn run_per_camera(
    frames: &[FrameBundle],
    config: &TrackerConfig,
    affinity_config: &AffinityConfig,
    weights: Option<Arc<LstmWeights>>,
) -> Result<TrackingResult, TrackerError> {
    let mut camera_ids: Vec<u32> = frames
        .iter()
        .flat_map(|b| b.poses.iter().map(|p| p.camera_id))
        .collect();
    camera_ids.sort_unstable();
    camera_ids.dedup();

    let mut trackers: Vec<(u32, Tracker)> = Vec::with_capacity(camera_ids.len());
    for (index, &camera_id) in camera_ids.iter().enumerate() {
        let tracker = Tracker::new(config.clone(), affinity_config.clone(), weights.clone())?
            .with_id_offset(index as u64 * CAMERA_ID_STRIDE);
        trackers.push((camera_id, tracker));
    }

    let mut result = TrackingResult::default();
    for bundle in frames {
        let mut entries = Vec::new();
        for (camera_id, tracker) in trackers.iter_mut() {
            let camera_bundle = FrameBundle {
                frame: bundle.frame,
                poses: bundle.poses.clone(),
                detections: bundle
                    .detections
                    .iter()
                    .filter(|d| d.camera_id == *camera_id)
                    .cloned()
                    .collect(),
            };
            let lifted = lift_frame(&camera_bundle)?;
            entries.extend(tracker.step(bundle.frame, &lifted)?);
        }
        entries.sort_by_key(|o| o.track_id);
        result.frames.push(ResultFrame {
            frame: bundle.frame,
            entries,
        });
    }
    Ok(result)
}

/// Greedy same-category 3D NMS over emitted track states; the
/// higher-confidence identity survives a conflict (ties: lower id).
fn nms_outputs(entries: &[TrackOutput], iou_threshold: f64) -> Vec<TrackOutput> {
    let mut order: Vec<usize> = (0..entries.len()).collect();
    order.sort_by(|&a, &b| {
        entries[b]
            .confidence
            .partial_cmp(&entries[a].confidence)
            .unwrap_or(core::cmp::Ordering::Equal)
            .then(entries[a].track_id.cmp(&entries[b].track_id))
    });
    let mut suppressed = alloc::vec![false; entries.len()];
    let mut kept = Vec::new();
    for (pos, &i) in order.iter().enumerate() {
        if suppressed[i] {
            continue;
        }
        for &j in &order[pos + 1..] {
            if !suppressed[j]
                && entries[i].category == entries[j].category
                && iou_3d(&entries[i].box3d, &entries[j].box3d) >= iou_threshold
            {
                suppressed[j] = true;
            }
        }
        kept.push(entries[i].clone());
    }
    kept.sort_by_key(|o| o.track_id);
    kept
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::Box3D;
    use crate::matrix::Matrix;

    fn assert_close(a: f64, b: f64, tol: f64) {
        assert!((a - b).abs() < tol, "{a} vs {b} (tol {tol})");
    }

    fn matrix_from(rows: &[&[f64]]) -> AffinityMatrix {
        let data: Vec<Vec<f64>> = rows.iter().map(|r| r.to_vec()).collect();
        AffinityMatrix {
            values: Matrix::from_rows(&data),
            track_ids: (0..rows.len() as u64).collect(),
        }
    }

    #[test]
    fn greedy_assign_empty() {
        let m = AffinityMatrix {
            values: Matrix::zeros(0, 0),
            track_ids: alloc::vec![],
        };
        let a = greedy_assign(&m, 0.5);
        assert!(a.matches.is_empty());
        assert!(a.unmatched_tracks.is_empty());
        assert!(a.unmatched_detections.is_empty());
    }

    #[test]
    fn greedy_assign_below_threshold() {
        let m = matrix_from(&[&[0.4]]);
        let a = greedy_assign(&m, 0.5);
        assert!(a.matches.is_empty());
        assert_eq!(a.unmatched_tracks, alloc::vec![0]);
        assert_eq!(a.unmatched_detections, alloc::vec![0]);
    }

    #[test]
    fn greedy_assign_hand_trace() {
        // max 0.9 at (0,0); row 0 and col 0 removed; remaining col 1
        // best is 0.2 < 0.5: stop.
        let m = matrix_from(&[&[0.9, 0.8], &[0.85, 0.2]]);
        let a = greedy_assign(&m, 0.5);
        assert_eq!(a.matches, alloc::vec![(0, 0)]);
        assert_eq!(a.unmatched_tracks, alloc::vec![1]);
        assert_eq!(a.unmatched_detections, alloc::vec![1]);
    }

    /// Reference that re-scans the whole matrix each round.
    fn greedy_rescan(m: &AffinityMatrix, threshold: f64) -> Assignment {
        let rows = m.values.rows();
        let cols = m.values.cols();
        let mut row_used = alloc::vec![false; rows];
        let mut col_used = alloc::vec![false; cols];
        let mut matches = Vec::new();
        loop {
            let mut best: Option<(f64, usize, usize)> = None;
            for r in 0..rows {
                if row_used[r] {
                    continue;
                }
                for c in 0..cols {
                    if col_used[c] {
                        continue;
                    }
                    let v = m.values.get(r, c);
                    if !v.is_finite() {
                        continue;
                    }
                    let better = match best {
                        None => true,
                        Some((bv, br, bc)) => {
                            v > bv || (v == bv && (m.track_ids[r], c) < (m.track_ids[br], bc))
                        }
                    };
                    if better {
                        best = Some((v, r, c));
                    }
                }
            }
            match best {
                Some((v, r, c)) if v >= threshold => {
                    row_used[r] = true;
                    col_used[c] = true;
                    matches.push((m.track_ids[r], c));
                }
                _ => break,
            }
        }
        Assignment {
            matches,
            unmatched_tracks: (0..rows)
                .filter(|&r| !row_used[r])
                .map(|r| m.track_ids[r])
                .collect(),
            unmatched_detections: (0..cols).filter(|&c| !col_used[c]).collect(),
        }
    }

    #[test]
    fn greedy_assign_matches_rescan_oracle() {
        let mut rng = crate::rng::Rng::new(404);
        for case in 0..300 {
            let rows = rng.index(7);
            let cols = rng.index(7);
            let mut data = Vec::new();
            for _ in 0..rows {
                // quantized values to provoke ties
                let row: Vec<f64> = (0..cols)
                    .map(|_| (rng.next_f64() * 8.0).floor() / 8.0)
                    .collect();
                data.push(row);
            }
            let m = AffinityMatrix {
                values: Matrix::from_rows(&data),
                track_ids: (0..rows as u64).map(|i| i * 3 + 1).collect(),
            };
            let fast = greedy_assign(&m, 0.5);
            let slow = greedy_rescan(&m, 0.5);
            assert_eq!(fast, slow, "case {case}");
        }
    }

    fn emb(axis: usize) -> Embedding {
        Embedding::basis(axis)
    }

    fn det(x: f64, y: f64, conf: f64, frame: u64, axis: usize) -> DetectionRecord {
        DetectionRecord::new(
            Box3D::new(x, y, 0.0, 0.0, 4.0, 2.0, 1.6),
            conf,
            Some(emb(axis)),
            0,
            frame,
            "car",
        )
    }

    fn tracker() -> Tracker {
        Tracker::new(TrackerConfig::default(), AffinityConfig::default(), None).unwrap()
    }

    #[test]
    fn new_detection_spawns_track() {
        let mut t = tracker();
        let out = t.step(0, &[det(0.0, 0.0, 0.9, 0, 0)]).unwrap();
        assert_eq!(out.len(), 1);
        assert_eq!(out[0].track_id, 1);
        assert_close(out[0].box3d.x, 0.0, 1e-12);
    }

    #[test]
    fn low_confidence_detection_spawns_nothing() {
        let mut t = tracker();
        // below start_score but above continue_score: backdrop only
        let out = t.step(0, &[det(0.0, 0.0, 0.6, 0, 0)]).unwrap();
        assert!(out.is_empty());
        assert!(t.tracks().is_empty());
    }

    #[test]
    fn track_goes_inactive_then_dead() {
        let mut t = tracker();
        t.step(0, &[det(0.0, 0.0, 0.9, 0, 0)]).unwrap();
        for frame in 1..=10 {
            let out = t.step(frame, &[]).unwrap();
            assert!(out.is_empty(), "frame {frame}");
            assert_eq!(t.tracks()[0].status, TrackStatus::Inactive);
        }
        t.step(11, &[]).unwrap();
        assert_eq!(t.tracks()[0].status, TrackStatus::Dead);
    }

    #[test]
    fn dead_track_id_is_never_reused() {
        let mut t = tracker();
        t.step(0, &[det(0.0, 0.0, 0.9, 0, 0)]).unwrap();
        for frame in 1..=11 {
            t.step(frame, &[]).unwrap();
        }
        assert_eq!(t.tracks()[0].status, TrackStatus::Dead);
        let out = t.step(12, &[det(0.0, 0.0, 0.9, 12, 0)]).unwrap();
        assert_eq!(out[0].track_id, 2);
    }

    #[test]
    fn rejects_frame_mismatch_and_disorder() {
        let mut t = tracker();
        assert!(matches!(
            t.step(0, &[det(0.0, 0.0, 0.9, 5, 0)]),
            Err(TrackerError::FrameMismatch {
                expected: 0,
                got: 5
            })
        ));
        t.step(3, &[]).unwrap();
        assert!(matches!(
            t.step(3, &[]),
            Err(TrackerError::UnorderedFrames { .. })
        ));
    }

    #[test]
    fn duplicate_detection_becomes_backdrop_not_track() {
        let mut t = tracker();
        t.step(0, &[det(0.0, 0.0, 0.95, 0, 0)]).unwrap();
        // same spot, unmatched would-be spawn is suppressed as duplicate
        // (first the real detection matches the track; an extra copy at
        // high confidence overlaps the matched output)
        let out = t
            .step(1, &[det(0.1, 0.0, 0.96, 1, 0), det(0.05, 0.0, 0.9, 1, 0)])
            .unwrap();
        assert_eq!(out.len(), 1);
        assert_eq!(t.tracks().len(), 1);
    }

    /// Two objects crossing in x on separate lanes, three frames,
    /// distinct embeddings. Identity must follow appearance+motion, and
    /// the emitted boxes equal the detections (no motion model).
    #[test]
    fn golden_crossing_pair_keeps_identities() {
        let mut t = tracker();
        let frames: [Vec<DetectionRecord>; 3] = [
            alloc::vec![det(0.0, 0.0, 0.9, 0, 0), det(4.0, 1.0, 0.9, 0, 1)],
            alloc::vec![det(1.0, 0.0, 0.9, 1, 0), det(3.0, 1.0, 0.9, 1, 1)],
            alloc::vec![det(2.0, 0.0, 0.9, 2, 0), det(2.0, 1.0, 0.9, 2, 1)],
        ];
        let mut log: Vec<(u64, u64, f64, f64)> = Vec::new();
        for (frame, dets) in frames.iter().enumerate() {
            for out in t.step(frame as u64, dets).unwrap() {
                log.push((frame as u64, out.track_id, out.box3d.x, out.box3d.y));
            }
        }
        let expected: Vec<(u64, u64, f64, f64)> = alloc::vec![
            (0, 1, 0.0, 0.0),
            (0, 2, 4.0, 1.0),
            (1, 1, 1.0, 0.0),
            (1, 2, 3.0, 1.0),
            (2, 1, 2.0, 0.0),
            (2, 2, 2.0, 1.0),
        ];
        assert_eq!(log.len(), expected.len());
        for (got, want) in log.iter().zip(expected.iter()) {
            assert_eq!(got.0, want.0);
            assert_eq!(got.1, want.1);
            assert_close(got.2, want.2, 1e-12);
            assert_close(got.3, want.3, 1e-12);
        }
    }

    #[test]
    fn embedding_stays_unit_norm_through_momentum_updates() {
        let mut t = tracker();
        let mut raw_a = [0.0; crate::fusion::EMBED_DIM];
        raw_a[0] = 1.0;
        raw_a[1] = 0.5;
        t.step(
            0,
            &[DetectionRecord::new(
                Box3D::new(0.0, 0.0, 0.0, 0.0, 4.0, 2.0, 1.6),
                0.9,
                Some(Embedding::normalized(raw_a)),
                0,
                0,
                "car",
            )],
        )
        .unwrap();
        for frame in 1..20 {
            let mut raw = [0.0; crate::fusion::EMBED_DIM];
            raw[0] = 1.0;
            raw[frame % 8 + 1] = 0.3;
            t.step(
                frame as u64,
                &[DetectionRecord::new(
                    Box3D::new(0.1 * frame as f64, 0.0, 0.0, 0.0, 4.0, 2.0, 1.6),
                    0.9,
                    Some(Embedding::normalized(raw)),
                    0,
                    frame as u64,
                    "car",
                )],
            )
            .unwrap();
            let norm: f64 = t.tracks()[0]
                .embedding
                .as_ref()
                .unwrap()
                .as_slice()
                .iter()
                .map(|x| x * x)
                .sum::<f64>()
                .sqrt();
            assert!((norm - 1.0).abs() < 1e-6);
        }
    }

    #[test]
    fn step_is_deterministic() {
        let run = || {
            let mut t = tracker();
            let mut out = Vec::new();
            for frame in 0..5u64 {
                let dets = alloc::vec![
                    det(0.5 * frame as f64, 0.0, 0.9, frame, 0),
                    det(10.0 - 0.5 * frame as f64, 2.0, 0.85, frame, 1),
                ];
                out.push(t.step(frame, &dets).unwrap());
            }
            out
        };
        assert_eq!(run(), run());
    }

    #[test]
    fn matching_is_injective() {
        let m = matrix_from(&[&[0.9, 0.9, 0.9], &[0.9, 0.9, 0.9], &[0.9, 0.9, 0.9]]);
        let a = greedy_assign(&m, 0.5);
        assert_eq!(a.matches.len(), 3);
        let mut rows: Vec<u64> = a.matches.iter().map(|m| m.0).collect();
        let mut cols: Vec<usize> = a.matches.iter().map(|m| m.1).collect();
        rows.sort_unstable();
        rows.dedup();
        cols.sort_unstable();
        cols.dedup();
        assert_eq!(rows.len(), 3);
        assert_eq!(cols.len(), 3);
    }
}
