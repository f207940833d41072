//! Multi-camera detection fusion: lift per-camera detections to the
//! world frame and merge them with 3D non-maximum suppression.

use alloc::string::String;
use alloc::vec::Vec;

use crate::geom::{iou_3d, transform_box, Box3D, RigidTransform};
use crate::math;

/// Appearance embedding dimensionality.
pub const EMBED_DIM: usize = 256;

/// Unit-norm appearance embedding.
#[derive(Debug, Clone, PartialEq)]
pub struct Embedding(alloc::boxed::Box<[f64; EMBED_DIM]>);

impl Embedding {
    /// Normalizes `raw` to unit L2 norm. Panics on a zero vector.
    pub fn normalized(raw: [f64; EMBED_DIM]) -> Self {
        let n = math::norm(&raw);
        assert!(n > 0.0, "cannot normalize a zero embedding");
        let mut v = raw;
        for x in v.iter_mut() {
            *x /= n;
        }
        Self(alloc::boxed::Box::new(v))
    }

    /// Wraps a vector that is already unit norm within 1e-6.
    pub fn new(raw: [f64; EMBED_DIM]) -> Result<Self, FusionError> {
        let n = math::norm(&raw);
        if math::abs(n - 1.0) > 1e-6 {
            return Err(FusionError::NotUnitNorm { norm: n });
        }
        Ok(Self(alloc::boxed::Box::new(raw)))
    }

    /// Embedding with a single active axis, handy in tests.
    pub fn basis(axis: usize) -> Self {
        let mut v = [0.0; EMBED_DIM];
        v[axis % EMBED_DIM] = 1.0;
        Self(alloc::boxed::Box::new(v))
    }

    pub fn dot(&self, other: &Self) -> f64 {
        self.0.iter().zip(other.0.iter()).map(|(a, b)| a * b).sum()
    }

    /// Momentum blend `m·self + (1−m)·other`, renormalized.
    pub fn momentum_blend(&self, other: &Self, momentum: f64) -> Self {
        let mut v = [0.0; EMBED_DIM];
        for (out, (a, b)) in v.iter_mut().zip(self.0.iter().zip(other.0.iter())) {
            *out = momentum * a + (1.0 - momentum) * b;
        }
        Self::normalized(v)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0[..]
    }
}

/// One 3D detection: box, confidence, optional appearance embedding,
/// source camera and frame index.
#[derive(Debug, Clone, PartialEq)]
pub struct DetectionRecord {
    pub box3d: Box3D,
    pub confidence: f64,
    pub embedding: Option<Embedding>,
    pub camera_id: u32,
    pub frame: u64,
    pub category: String,
}

impl DetectionRecord {
    pub fn new(
        box3d: Box3D,
        confidence: f64,
        embedding: Option<Embedding>,
        camera_id: u32,
        frame: u64,
        category: impl Into<String>,
    ) -> Self {
        assert!(
            (0.0..=1.0).contains(&confidence),
            "confidence {confidence} outside [0, 1]"
        );
        Self {
            box3d,
            confidence,
            embedding,
            camera_id,
            frame,
            category: category.into(),
        }
    }
}

/// World pose of one camera at one frame (camera-to-world transform).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CameraPose {
    pub camera_id: u32,
    pub pose: RigidTransform,
}

/// All detections of one time step together with the camera poses.
/// Detection boxes are camera-frame; poses map camera to world.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameBundle {
    pub frame: u64,
    pub poses: Vec<CameraPose>,
    pub detections: Vec<DetectionRecord>,
}

impl FrameBundle {
    pub fn pose_of(&self, camera_id: u32) -> Option<&RigidTransform> {
        self.poses
            .iter()
            .find(|p| p.camera_id == camera_id)
            .map(|p| &p.pose)
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum FusionError {
    #[error("no pose for camera {camera_id} at frame {frame}")]
    MissingPose { camera_id: u32, frame: u64 },
    #[error("IoU threshold {value} outside [0, 1]")]
    InvalidThreshold { value: f64 },
    #[error("embedding norm {norm} is not 1 within 1e-6")]
    NotUnitNorm { norm: f64 },
}

/// Lifts every detection of a bundle to the world frame using the pose
/// of its camera. Output is ordered by ascending camera id, detections
/// in input order within a camera; counts and confidences are
/// preserved exactly.
pub fn lift_frame(bundle: &FrameBundle) -> Result<Vec<DetectionRecord>, FusionError> {
    let mut camera_ids: Vec<u32> = bundle.detections.iter().map(|d| d.camera_id).collect();
    camera_ids.sort_unstable();
    camera_ids.dedup();

    let mut out = Vec::with_capacity(bundle.detections.len());
    for camera_id in camera_ids {
        let pose = bundle.pose_of(camera_id).ok_or(FusionError::MissingPose {
            camera_id,
            frame: bundle.frame,
        })?;
        for det in bundle
            .detections
            .iter()
            .filter(|d| d.camera_id == camera_id)
        {
            let mut lifted = det.clone();
            lifted.box3d = transform_box(&det.box3d, pose);
            out.push(lifted);
        }
    }
    Ok(out)
}

/// Greedy 3D non-maximum suppression, category-aware by default.
///
/// Candidates are visited by descending confidence (ties: lower camera
/// id, then input order); each kept detection suppresses same-category
/// detections with `iou_3d >= iou_threshold` against it. The output is
/// in visit order, i.e. sorted by descending confidence.
pub fn nms_3d(
    detections: &[DetectionRecord],
    iou_threshold: f64,
) -> Result<Vec<DetectionRecord>, FusionError> {
    nms_3d_impl(detections, iou_threshold, true)
}

/// [`nms_3d`] with cross-category suppression enabled. A bus can then
/// suppress an overlapping car, which loses identities under category
/// confusion; kept for experimentation.
pub fn nms_3d_cross_category(
    detections: &[DetectionRecord],
    iou_threshold: f64,
) -> Result<Vec<DetectionRecord>, FusionError> {
    nms_3d_impl(detections, iou_threshold, false)
}

fn nms_3d_impl(
    detections: &[DetectionRecord],
    iou_threshold: f64,
    category_aware: bool,
) -> Result<Vec<DetectionRecord>, FusionError> {
    if !(0.0..=1.0).contains(&iou_threshold) {
        return Err(FusionError::InvalidThreshold {
            value: iou_threshold,
        });
    }

    let mut order: Vec<usize> = (0..detections.len()).collect();
    order.sort_by(|&a, &b| {
        let da = &detections[a];
        let db = &detections[b];
        db.confidence
            .partial_cmp(&da.confidence)
            .unwrap_or(core::cmp::Ordering::Equal)
            .then(da.camera_id.cmp(&db.camera_id))
            .then(a.cmp(&b))
    });

    let mut suppressed = alloc::vec![false; detections.len()];
    let mut kept: Vec<DetectionRecord> = Vec::new();
    for (pos, &i) in order.iter().enumerate() {
        if suppressed[i] {
            continue;
        }
        let keep = &detections[i];
        for &j in &order[pos + 1..] {
            if suppressed[j] {
                continue;
            }
            let other = &detections[j];
            if category_aware && other.category != keep.category {
                continue;
            }
            if iou_3d(&keep.box3d, &other.box3d) >= iou_threshold {
                suppressed[j] = true;
            }
        }
        kept.push(keep.clone());
    }
    Ok(kept)
}
