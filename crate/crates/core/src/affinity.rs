//! Track-detection affinities: appearance (bi-directional softmax of
//! embedding dot products), location (exponential of the L1 box
//! difference) and motion (cosine-weighted mix of centroid and
//! pseudo-motion terms), combined into a single affinity matrix.

use alloc::string::String;
use alloc::vec::Vec;

use crate::fusion::{DetectionRecord, Embedding};
use crate::geom::{angle_diff, Box3D};
use crate::math;
use crate::matrix::Matrix;

/// Affinity entry for pairs whose categories differ; such pairs can
/// never be matched.
pub const CATEGORY_MISMATCH: f64 = f64::NEG_INFINITY;

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default, deny_unknown_fields))]
pub struct AffinityConfig {
    /// Weight of the appearance term in the combined affinity.
    pub w_deep: f64,
    /// Scale of the exponential decays in the location and motion terms
    /// (meters / box units).
    pub r: f64,
    /// Clamp the motion-term cosine weight to [0, 1] instead of using
    /// the raw cosine in [−1, 1].
    pub clamp_cosine: bool,
}

impl Default for AffinityConfig {
    fn default() -> Self {
        Self {
            w_deep: 0.5,
            r: 10.0,
            clamp_cosine: false,
        }
    }
}

/// Dense track × detection affinity table. Rows carry the track ids
/// they were built from; columns are detection indices.
#[derive(Debug, Clone, PartialEq)]
pub struct AffinityMatrix {
    pub values: Matrix,
    pub track_ids: Vec<u64>,
}

/// What the affinity computation needs to know about a live track.
#[derive(Debug, Clone)]
pub struct TrackFeatures {
    pub id: u64,
    pub category: String,
    pub embedding: Option<Embedding>,
    /// Track center at the previous time step, world frame.
    pub prev_center: [f64; 3],
    /// Motion-model extrapolation of the track box to the current step.
    pub predicted_box: Box3D,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum AffinityError {
    #[error("scale r must be positive, got {r}")]
    NonPositiveScale { r: f64 },
    #[error("embedding list length mismatch: {tracks} tracks vs {rows} rows")]
    LengthMismatch { tracks: usize, rows: usize },
}

/// Bi-directional softmax appearance affinity.
///
/// Entry (τ, d) averages the softmax of the dot products over all
/// detections (for the fixed track) and over all tracks (for the fixed
/// detection). Every entry lies in (0, 1]; an empty side yields an
/// empty matrix.
pub fn appearance_affinity(track_embeddings: &[Embedding], det_embeddings: &[Embedding]) -> Matrix {
    let n_t = track_embeddings.len();
    let n_d = det_embeddings.len();
    let mut scores = Matrix::zeros(n_t, n_d);
    if n_t == 0 || n_d == 0 {
        return scores;
    }
    for (t, f_t) in track_embeddings.iter().enumerate() {
        for (d, f_d) in det_embeddings.iter().enumerate() {
            scores.set(t, d, f_d.dot(f_t));
        }
    }

    // Row softmax: over detections for each track.
    let mut row_soft = Matrix::zeros(n_t, n_d);
    for t in 0..n_t {
        let row = scores.row(t);
        let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mut denom = 0.0;
        for &s in row {
            denom += math::exp(s - max);
        }
        for d in 0..n_d {
            row_soft.set(t, d, math::exp(scores.get(t, d) - max) / denom);
        }
    }
    // Column softmax: over tracks for each detection.
    let mut col_soft = Matrix::zeros(n_t, n_d);
    for d in 0..n_d {
        let max = (0..n_t)
            .map(|t| scores.get(t, d))
            .fold(f64::NEG_INFINITY, f64::max);
        let mut denom = 0.0;
        for t in 0..n_t {
            denom += math::exp(scores.get(t, d) - max);
        }
        for t in 0..n_t {
            col_soft.set(t, d, math::exp(scores.get(t, d) - max) / denom);
        }
    }

    let mut out = Matrix::zeros(n_t, n_d);
    for t in 0..n_t {
        for d in 0..n_d {
            out.set(t, d, 0.5 * (row_soft.get(t, d) + col_soft.get(t, d)));
        }
    }
    out
}

/// L1 difference of two boxes as 7-vectors, with the yaw component
/// wrapped. Mixes meters and radians by design.
fn box_l1(a: &Box3D, b: &Box3D) -> f64 {
    math::abs(a.x - b.x)
        + math::abs(a.y - b.y)
        + math::abs(a.z - b.z)
        + math::abs(angle_diff(a.theta, b.theta))
        + math::abs(a.l - b.l)
        + math::abs(a.w - b.w)
        + math::abs(a.h - b.h)
}

/// Location affinity `exp(−|b_τ − b_d|₁ / r)`.
pub fn location_affinity(
    predicted_boxes: &[Box3D],
    det_boxes: &[Box3D],
    r: f64,
) -> Result<Matrix, AffinityError> {
    if r <= 0.0 {
        return Err(AffinityError::NonPositiveScale { r });
    }
    let mut out = Matrix::zeros(predicted_boxes.len(), det_boxes.len());
    for (t, pb) in predicted_boxes.iter().enumerate() {
        for (d, db) in det_boxes.iter().enumerate() {
            out.set(t, d, math::exp(-box_l1(pb, db) / r));
        }
    }
    Ok(out)
}

fn sub3(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

fn norm3(v: [f64; 3]) -> f64 {
    math::sqrt(v[0] * v[0] + v[1] * v[1] + v[2] * v[2])
}

/// Motion affinity mixing centroid distance and pseudo-motion
/// difference with the cosine similarity of predicted vs observed
/// motion. A zero-length motion vector on either side makes the cosine
/// weight 0 (pure pseudo-motion term): a stationary or newborn track
/// has no trustworthy heading.
pub fn motion_affinity(
    track_prev_centers: &[[f64; 3]],
    track_pred_centers: &[[f64; 3]],
    det_centers: &[[f64; 3]],
    r: f64,
    clamp_cosine: bool,
) -> Result<Matrix, AffinityError> {
    if r <= 0.0 {
        return Err(AffinityError::NonPositiveScale { r });
    }
    if track_prev_centers.len() != track_pred_centers.len() {
        return Err(AffinityError::LengthMismatch {
            tracks: track_prev_centers.len(),
            rows: track_pred_centers.len(),
        });
    }
    let mut out = Matrix::zeros(track_prev_centers.len(), det_centers.len());
    for t in 0..track_prev_centers.len() {
        let v_track = sub3(track_pred_centers[t], track_prev_centers[t]);
        let n_track = norm3(v_track);
        for (d, &p_det) in det_centers.iter().enumerate() {
            let v_det = sub3(p_det, track_prev_centers[t]);
            let n_det = norm3(v_det);
            let mut w_cos = if n_track == 0.0 || n_det == 0.0 {
                0.0
            } else {
                (v_track[0] * v_det[0] + v_track[1] * v_det[1] + v_track[2] * v_det[2])
                    / (n_track * n_det)
            };
            if clamp_cosine {
                w_cos = w_cos.clamp(0.0, 1.0);
            }
            let a_centroid = math::exp(-norm3(sub3(track_pred_centers[t], p_det)) / r);
            let a_pseudo = math::exp(-norm3(sub3(v_track, v_det)) / r);
            out.set(t, d, w_cos * a_centroid + (1.0 - w_cos) * a_pseudo);
        }
    }
    Ok(out)
}

/// Combined affinity
/// `A = w_deep · A_deep + (1 − w_deep) · A_motion ⊙ A_loc`,
/// with cross-category pairs forced to [`CATEGORY_MISMATCH`].
///
/// If any involved embedding is missing the appearance term is dropped
/// for the whole matrix (the bi-directional softmax is only meaningful
/// over complete sets) and the hybrid motion-location term gets full
/// weight.
pub fn combined_affinity(
    tracks: &[TrackFeatures],
    detections: &[DetectionRecord],
    config: &AffinityConfig,
) -> Result<AffinityMatrix, AffinityError> {
    let track_ids: Vec<u64> = tracks.iter().map(|t| t.id).collect();
    if tracks.is_empty() || detections.is_empty() {
        return Ok(AffinityMatrix {
            values: Matrix::zeros(tracks.len(), detections.len()),
            track_ids,
        });
    }

    let have_all_embeddings = tracks.iter().all(|t| t.embedding.is_some())
        && detections.iter().all(|d| d.embedding.is_some());
    let w_deep = if have_all_embeddings {
        config.w_deep
    } else {
        0.0
    };

    let a_deep = if w_deep > 0.0 {
        let track_embs: Vec<Embedding> = tracks
            .iter()
            .map(|t| t.embedding.clone().expect("checked above"))
            .collect();
        let det_embs: Vec<Embedding> = detections
            .iter()
            .map(|d| d.embedding.clone().expect("checked above"))
            .collect();
        Some(appearance_affinity(&track_embs, &det_embs))
    } else {
        None
    };

    let pred_boxes: Vec<Box3D> = tracks.iter().map(|t| t.predicted_box).collect();
    let det_boxes: Vec<Box3D> = detections.iter().map(|d| d.box3d).collect();
    let a_loc = location_affinity(&pred_boxes, &det_boxes, config.r)?;

    let prev_centers: Vec<[f64; 3]> = tracks.iter().map(|t| t.prev_center).collect();
    let pred_centers: Vec<[f64; 3]> = pred_boxes.iter().map(Box3D::center).collect();
    let det_centers: Vec<[f64; 3]> = det_boxes.iter().map(Box3D::center).collect();
    let a_motion = motion_affinity(
        &prev_centers,
        &pred_centers,
        &det_centers,
        config.r,
        config.clamp_cosine,
    )?;

    let mut values = Matrix::zeros(tracks.len(), detections.len());
    for t in 0..tracks.len() {
        for d in 0..detections.len() {
            let v = if tracks[t].category != detections[d].category {
                CATEGORY_MISMATCH
            } else {
                let hybrid = a_motion.get(t, d) * a_loc.get(t, d);
                match &a_deep {
                    Some(deep) => w_deep * deep.get(t, d) + (1.0 - w_deep) * hybrid,
                    None => hybrid,
                }
            };
            values.set(t, d, v);
        }
    }
    Ok(AffinityMatrix { values, track_ids })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fusion::EMBED_DIM;
    use proptest::prelude::*;

    fn assert_close(a: f64, b: f64, tol: f64) {
        assert!((a - b).abs() < tol, "{a} vs {b} (tol {tol})");
    }

    fn emb(values: &[(usize, f64)]) -> Embedding {
        let mut raw = [0.0; EMBED_DIM];
        for &(i, v) in values {
            raw[i] = v;
        }
        Embedding::normalized(raw)
    }

    #[test]
    fn appearance_single_pair_is_one() {
        let t = [emb(&[(0, 1.0)])];
        let d = [emb(&[(3, 1.0)])];
        let m = appearance_affinity(&t, &d);
        assert_close(m.get(0, 0), 1.0, 1e-12);
    }

    #[test]
    fn appearance_equal_scores_split_row_softmax() {
        // One track, two detections with identical dot products:
        // row softmax gives 1/2 each, column softmax (single track) 1.
        let t = [emb(&[(0, 1.0)])];
        let d = [emb(&[(0, 1.0), (1, 1.0)]), emb(&[(0, 1.0), (2, 1.0)])];
        let m = appearance_affinity(&t, &d);
        assert_close(m.get(0, 0), 0.75, 1e-12);
        assert_close(m.get(0, 1), 0.75, 1e-12);
    }

    #[test]
    fn appearance_matches_two_loop_reference() {
        // Straightforward re-evaluation with no softmax shift tricks.
        let mut rng = crate::rng::Rng::new(99);
        let tracks: alloc::vec::Vec<Embedding> = (0..4)
            .map(|_| {
                let mut raw = [0.0; EMBED_DIM];
                for x in raw.iter_mut().take(8) {
                    *x = rng.uniform(-1.0, 1.0);
                }
                Embedding::normalized(raw)
            })
            .collect();
        let dets: alloc::vec::Vec<Embedding> = (0..5)
            .map(|_| {
                let mut raw = [0.0; EMBED_DIM];
                for x in raw.iter_mut().take(8) {
                    *x = rng.uniform(-1.0, 1.0);
                }
                Embedding::normalized(raw)
            })
            .collect();
        let got = appearance_affinity(&tracks, &dets);
        for (t, f_t) in tracks.iter().enumerate() {
            for (d, f_d) in dets.iter().enumerate() {
                let row_den: f64 = dets.iter().map(|fd| (fd.dot(f_t)).exp()).sum();
                let col_den: f64 = tracks.iter().map(|ft| (f_d.dot(ft)).exp()).sum();
                let s = f_d.dot(f_t).exp();
                let expect = 0.5 * (s / row_den + s / col_den);
                assert_close(got.get(t, d), expect, 1e-12);
            }
        }
    }

    #[test]
    fn appearance_empty_side_gives_empty_matrix() {
        let t = [emb(&[(0, 1.0)])];
        let m = appearance_affinity(&t, &[]);
        assert_eq!(m.rows(), 1);
        assert_eq!(m.cols(), 0);
        let m = appearance_affinity(&[], &t);
        assert_eq!(m.rows(), 0);
        assert_eq!(m.cols(), 1);
    }

    fn cube(x: f64) -> Box3D {
        Box3D::new(x, 0.0, 0.0, 0.0, 1.0, 1.0, 1.0)
    }

    #[test]
    fn location_identical_box_is_one() {
        let m = location_affinity(&[cube(0.0)], &[cube(0.0)], 10.0).unwrap();
        assert_close(m.get(0, 0), 1.0, 1e-12);
    }

    #[test]
    fn location_unit_scale_offset() {
        // Δx = r ⇒ exp(−1)
        let m = location_affinity(&[cube(0.0)], &[cube(10.0)], 10.0).unwrap();
        assert_close(m.get(0, 0), (-1.0f64).exp(), 1e-12);
    }

    #[test]
    fn location_wraps_theta() {
        let a = Box3D::new(0.0, 0.0, 0.0, 3.1, 1.0, 1.0, 1.0);
        let b = Box3D::new(0.0, 0.0, 0.0, -3.1, 1.0, 1.0, 1.0);
        let m = location_affinity(&[a], &[b], 10.0).unwrap();
        let wrapped = 2.0 * core::f64::consts::PI - 6.2;
        assert_close(m.get(0, 0), (-wrapped / 10.0f64).exp(), 1e-12);
    }

    #[test]
    fn location_rejects_bad_scale() {
        assert!(location_affinity(&[], &[], 0.0).is_err());
        assert!(location_affinity(&[], &[], -1.0).is_err());
    }

    #[test]
    fn motion_detection_at_predicted_center() {
        let prev = [[0.0, 0.0, 0.0]];
        let pred = [[1.0, 0.0, 0.0]];
        let det = [[1.0, 0.0, 0.0]];
        let m = motion_affinity(&prev, &pred, &det, 10.0, false).unwrap();
        assert_close(m.get(0, 0), 1.0, 1e-12);
    }

    #[test]
    fn motion_opposed_vectors() {
        // V_τ = (1,0,0), V_d = (−1,0,0), |P_pred − P_det| = 2, r = 10:
        // w_cos = −1, both exponentials are exp(−0.2) ⇒ entry exp(−0.2).
        let prev = [[0.0, 0.0, 0.0]];
        let pred = [[1.0, 0.0, 0.0]];
        let det = [[-1.0, 0.0, 0.0]];
        let m = motion_affinity(&prev, &pred, &det, 10.0, false).unwrap();
        assert_close(m.get(0, 0), (-0.2f64).exp(), 1e-12);
    }

    #[test]
    fn motion_stationary_track_uses_pseudo_term() {
        let prev = [[0.0, 0.0, 0.0]];
        let pred = [[0.0, 0.0, 0.0]]; // zero-length V_τ
        let det = [[3.0, 4.0, 0.0]];
        let m = motion_affinity(&prev, &pred, &det, 10.0, false).unwrap();
        // w_cos = 0 ⇒ entry = a_pseudo = exp(−|V_d|/r) = exp(−0.5)
        assert_close(m.get(0, 0), (-0.5f64).exp(), 1e-12);
    }

    fn track(id: u64, cat: &str, x: f64, e: Embedding) -> TrackFeatures {
        TrackFeatures {
            id,
            category: cat.into(),
            embedding: Some(e),
            prev_center: [x - 1.0, 0.0, 0.0],
            predicted_box: cube(x),
        }
    }

    fn detection(cat: &str, x: f64, e: Embedding) -> DetectionRecord {
        DetectionRecord::new(cube(x), 0.9, Some(e), 0, 0, cat)
    }

    #[test]
    fn combined_extremes_select_terms() {
        let tracks = [
            track(1, "car", 0.0, emb(&[(0, 1.0)])),
            track(2, "car", 5.0, emb(&[(1, 1.0)])),
        ];
        let dets = [
            detection("car", 0.2, emb(&[(0, 1.0)])),
            detection("car", 5.2, emb(&[(1, 1.0)])),
        ];
        let deep_only = combined_affinity(
            &tracks,
            &dets,
            &AffinityConfig {
                w_deep: 1.0,
                ..Default::default()
            },
        )
        .unwrap();
        let track_embs: alloc::vec::Vec<Embedding> = tracks
            .iter()
            .map(|t| t.embedding.clone().unwrap())
            .collect();
        let det_embs: alloc::vec::Vec<Embedding> =
            dets.iter().map(|d| d.embedding.clone().unwrap()).collect();
        let a_deep = appearance_affinity(&track_embs, &det_embs);
        for t in 0..2 {
            for d in 0..2 {
                assert_close(deep_only.values.get(t, d), a_deep.get(t, d), 1e-12);
            }
        }

        let hybrid_only = combined_affinity(
            &tracks,
            &dets,
            &AffinityConfig {
                w_deep: 0.0,
                ..Default::default()
            },
        )
        .unwrap();
        let a_loc = location_affinity(
            &tracks
                .iter()
                .map(|t| t.predicted_box)
                .collect::<alloc::vec::Vec<_>>(),
            &dets.iter().map(|d| d.box3d).collect::<alloc::vec::Vec<_>>(),
            10.0,
        )
        .unwrap();
        let a_motion = motion_affinity(
            &tracks
                .iter()
                .map(|t| t.prev_center)
                .collect::<alloc::vec::Vec<_>>(),
            &tracks
                .iter()
                .map(|t| t.predicted_box.center())
                .collect::<alloc::vec::Vec<_>>(),
            &dets
                .iter()
                .map(|d| d.box3d.center())
                .collect::<alloc::vec::Vec<_>>(),
            10.0,
            false,
        )
        .unwrap();
        for t in 0..2 {
            for d in 0..2 {
                assert_close(
                    hybrid_only.values.get(t, d),
                    a_motion.get(t, d) * a_loc.get(t, d),
                    1e-12,
                );
            }
        }
    }

    #[test]
    fn combined_half_weight_matches_hand_composition() {
        let tracks = [
            track(1, "car", 0.0, emb(&[(0, 1.0)])),
            track(2, "car", 4.0, emb(&[(1, 1.0)])),
        ];
        let dets = [
            detection("car", 0.5, emb(&[(0, 1.0), (1, 0.3)])),
            detection("car", 4.5, emb(&[(1, 1.0), (0, 0.3)])),
        ];
        let config = AffinityConfig::default();
        let got = combined_affinity(&tracks, &dets, &config).unwrap();

        let deep = combined_affinity(
            &tracks,
            &dets,
            &AffinityConfig {
                w_deep: 1.0,
                ..config
            },
        )
        .unwrap();
        let hybrid = combined_affinity(
            &tracks,
            &dets,
            &AffinityConfig {
                w_deep: 0.0,
                ..config
            },
        )
        .unwrap();
        for t in 0..2 {
            for d in 0..2 {
                assert_close(
                    got.values.get(t, d),
                    0.5 * deep.values.get(t, d) + 0.5 * hybrid.values.get(t, d),
                    1e-12,
                );
            }
        }
    }

    #[test]
    fn combined_gates_cross_category_pairs() {
        let tracks = [track(1, "car", 0.0, emb(&[(0, 1.0)]))];
        let dets = [detection("bus", 0.0, emb(&[(0, 1.0)]))];
        let m = combined_affinity(&tracks, &dets, &AffinityConfig::default()).unwrap();
        assert_eq!(m.values.get(0, 0), CATEGORY_MISMATCH);
    }

    /// Translation invariance of the combined affinity. Rotation is
    /// deliberately excluded: the location term's L1 distance over
    /// (x, y) — adopted literally — is not rotation-invariant, so only
    /// the translation part of a common rigid motion preserves every
    /// entry.
    #[test]
    fn combined_invariant_under_common_translation() {
        use crate::geom::{transform_box, RigidTransform};
        let mut rng = crate::rng::Rng::new(2718);
        let mk_emb = |rng: &mut crate::rng::Rng| {
            let mut raw = [0.0; EMBED_DIM];
            for x in raw.iter_mut().take(10) {
                *x = rng.uniform(-1.0, 1.0);
            }
            Embedding::normalized(raw)
        };
        let mk_box = |rng: &mut crate::rng::Rng| {
            Box3D::new(
                rng.uniform(-10.0, 10.0),
                rng.uniform(-10.0, 10.0),
                rng.uniform(-1.0, 1.0),
                rng.uniform(-3.0, 3.0),
                rng.uniform(1.0, 5.0),
                rng.uniform(1.0, 3.0),
                rng.uniform(1.0, 2.0),
            )
        };
        let tracks: alloc::vec::Vec<TrackFeatures> = (0..4)
            .map(|id| {
                let b = mk_box(&mut rng);
                TrackFeatures {
                    id,
                    category: "car".into(),
                    embedding: Some(mk_emb(&mut rng)),
                    prev_center: [b.x - rng.uniform(-1.0, 1.0), b.y - 0.5, b.z],
                    predicted_box: b,
                }
            })
            .collect();
        let dets: alloc::vec::Vec<DetectionRecord> = (0..5)
            .map(|_| {
                DetectionRecord::new(mk_box(&mut rng), 0.9, Some(mk_emb(&mut rng)), 0, 0, "car")
            })
            .collect();
        let config = AffinityConfig::default();
        let base = combined_affinity(&tracks, &dets, &config).unwrap();

        let pose = RigidTransform::from_yaw_translation(0.0, [40.0, -25.0, 3.0]);
        let moved_tracks: alloc::vec::Vec<TrackFeatures> = tracks
            .iter()
            .map(|t| TrackFeatures {
                id: t.id,
                category: t.category.clone(),
                embedding: t.embedding.clone(),
                prev_center: pose.apply(t.prev_center),
                predicted_box: transform_box(&t.predicted_box, &pose),
            })
            .collect();
        let moved_dets: alloc::vec::Vec<DetectionRecord> = dets
            .iter()
            .map(|d| {
                let mut m = d.clone();
                m.box3d = transform_box(&d.box3d, &pose);
                m
            })
            .collect();
        let moved = combined_affinity(&moved_tracks, &moved_dets, &config).unwrap();
        for t in 0..base.values.rows() {
            for d in 0..base.values.cols() {
                assert!(
                    (base.values.get(t, d) - moved.values.get(t, d)).abs() < 1e-9,
                    "entry ({t},{d}) moved: {} vs {}",
                    base.values.get(t, d),
                    moved.values.get(t, d)
                );
            }
        }
    }

    proptest! {
        /// Row softmax sums to 1 across detections, column softmax
        /// across tracks: combined, the matrix entries sum to
        /// (n_d + n_t) / 2 when averaged the bi-directional way.
        #[test]
        fn softmax_halves_sum_correctly(
            seeds in proptest::collection::vec(0u64..1000, 2..6),
            det_seeds in proptest::collection::vec(0u64..1000, 2..6),
        ) {
            let mk = |s: u64| {
                let mut rng = crate::rng::Rng::new(s * 7 + 13);
                let mut raw = [0.0; EMBED_DIM];
                for x in raw.iter_mut().take(6) {
                    *x = rng.uniform(-1.0, 1.0);
                }
                Embedding::normalized(raw)
            };
            let tracks: alloc::vec::Vec<Embedding> = seeds.iter().map(|&s| mk(s)).collect();
            let dets: alloc::vec::Vec<Embedding> = det_seeds.iter().map(|&s| mk(s + 5000)).collect();
            let m = appearance_affinity(&tracks, &dets);
            let total: f64 = (0..m.rows())
                .flat_map(|t| (0..m.cols()).map(move |d| (t, d)))
                .map(|(t, d)| m.get(t, d))
                .sum();
            let expect = 0.5 * (tracks.len() + dets.len()) as f64;
            prop_assert!((total - expect).abs() < 1e-9);
            for t in 0..m.rows() {
                for d in 0..m.cols() {
                    let v = m.get(t, d);
                    prop_assert!(v > 0.0 && v <= 1.0 + 1e-12);
                }
            }
        }

        /// Adding a constant to every dot product leaves the softmax
        /// unchanged; equivalent to scaling all exponentials.
        #[test]
        fn softmax_shift_invariance(shift in -3.0..3.0f64) {
            // Direct check on the softmax math with raw score matrices.
            let scores = [[0.3, -0.2, 0.9], [0.0, 0.5, -0.7]];
            let softmax = |row: &[f64]| {
                let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                let den: f64 = row.iter().map(|s| (s - max).exp()).sum();
                row.iter().map(|s| (s - max).exp() / den).collect::<alloc::vec::Vec<_>>()
            };
            for row in scores {
                let base = softmax(&row);
                let shifted_row: alloc::vec::Vec<f64> = row.iter().map(|s| s + shift).collect();
                let shifted = softmax(&shifted_row);
                for (a, b) in base.iter().zip(shifted.iter()) {
                    prop_assert!((a - b).abs() < 1e-12);
                }
            }
        }
    }
}
