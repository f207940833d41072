//! JSON Lines file formats: detections, camera poses, ground truth and
//! tracking results. One frame-scoped record per line; floats are
//! serialized with the shortest round-trip decimal representation, so
//! write→read→write is byte-stable.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use panoptrack_core::fusion::{CameraPose, DetectionRecord, Embedding, FrameBundle, EMBED_DIM};
use panoptrack_core::geom::{Box3D, RigidTransform};
use panoptrack_core::metrics::{
    GroundTruth, GtEntry, GtFrame, ResultFrame, TrackOutput, TrackingResult,
};
use serde::{Deserialize, Serialize};

/// Malformed input: carries the file, the 1-based line and the reason.
/// Commands surface this as exit code 2.
#[derive(Debug, thiserror::Error)]
#[error("{path}:{line}: {reason}")]
pub struct InputError {
    pub path: String,
    pub line: usize,
    pub reason: String,
}

impl InputError {
    fn new(path: &Path, line: usize, reason: impl Into<String>) -> Self {
        Self {
            path: path.display().to_string(),
            line,
            reason: reason.into(),
        }
    }
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DetectionLine {
    pub frame: u64,
    pub camera_id: u32,
    pub category: String,
    /// [x, y, z, theta, l, w, h]
    #[serde(rename = "box")]
    pub box3d: [f64; 7],
    pub score: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub embedding: Option<Vec<f64>>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PoseLine {
    pub frame: u64,
    pub camera_id: u32,
    /// Unit quaternion [w, x, y, z].
    pub rotation: [f64; 4],
    pub translation: [f64; 3],
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GtLine {
    pub frame: u64,
    pub object_id: u64,
    pub category: String,
    #[serde(rename = "box")]
    pub box3d: [f64; 7],
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ResultLine {
    pub frame: u64,
    pub track_id: u64,
    pub category: String,
    #[serde(rename = "box")]
    pub box3d: [f64; 7],
    pub score: f64,
}

fn read_lines<T, F>(path: &Path, mut consume: F) -> anyhow::Result<()>
where
    T: for<'de> Deserialize<'de>,
    F: FnMut(usize, T) -> Result<(), String>,
{
    let file =
        File::open(path).map_err(|e| InputError::new(path, 0, format!("cannot open: {e}")))?;
    for (idx, line) in BufReader::new(file).lines().enumerate() {
        let line_no = idx + 1;
        let line = line.map_err(|e| InputError::new(path, line_no, e.to_string()))?;
        if line.trim().is_empty() {
            continue;
        }
        let record: T = serde_json::from_str(&line)
            .map_err(|e| InputError::new(path, line_no, e.to_string()))?;
        consume(line_no, record).map_err(|reason| InputError::new(path, line_no, reason))?;
    }
    Ok(())
}

fn box_from_line(raw: [f64; 7]) -> Result<Box3D, String> {
    if raw[4] <= 0.0 || raw[5] <= 0.0 || raw[6] <= 0.0 {
        return Err(format!(
            "box extents must be positive, got [{}, {}, {}]",
            raw[4], raw[5], raw[6]
        ));
    }
    if raw.iter().any(|v| !v.is_finite()) {
        return Err("box contains a non-finite value".into());
    }
    Ok(Box3D::from_array(raw))
}

/// Reads detections plus poses into per-frame bundles (frames sorted
/// ascending). Every detection must be covered by a pose line for its
/// (frame, camera).
pub fn read_frame_bundles(
    detections_path: &Path,
    poses_path: &Path,
) -> anyhow::Result<Vec<FrameBundle>> {
    let mut poses: BTreeMap<u64, Vec<CameraPose>> = BTreeMap::new();
    read_lines::<PoseLine, _>(poses_path, |_, p| {
        let norm = p.rotation.iter().map(|v| v * v).sum::<f64>().sqrt();
        if (norm - 1.0).abs() > 1e-6 {
            return Err(format!("quaternion norm {norm} is not 1"));
        }
        poses.entry(p.frame).or_default().push(CameraPose {
            camera_id: p.camera_id,
            pose: RigidTransform::new(p.rotation, p.translation),
        });
        Ok(())
    })?;

    let mut detections: BTreeMap<u64, Vec<DetectionRecord>> = BTreeMap::new();
    read_lines::<DetectionLine, _>(detections_path, |_, d| {
        if !(0.0..=1.0).contains(&d.score) {
            return Err(format!("score {} outside [0, 1]", d.score));
        }
        let embedding = match d.embedding {
            None => None,
            Some(raw) => {
                if raw.len() != EMBED_DIM {
                    return Err(format!(
                        "embedding has {} components, expected {EMBED_DIM}",
                        raw.len()
                    ));
                }
                let mut arr = [0.0; EMBED_DIM];
                arr.copy_from_slice(&raw);
                Some(Embedding::new(arr).map_err(|e| e.to_string())?)
            }
        };
        let record = DetectionRecord::new(
            box_from_line(d.box3d)?,
            d.score,
            embedding,
            d.camera_id,
            d.frame,
            d.category,
        );
        detections.entry(d.frame).or_default().push(record);
        Ok(())
    })?;

    let mut frames: Vec<u64> = poses.keys().chain(detections.keys()).copied().collect();
    frames.sort_unstable();
    frames.dedup();
    Ok(frames
        .into_iter()
        .map(|frame| FrameBundle {
            frame,
            poses: poses.remove(&frame).unwrap_or_default(),
            detections: detections.remove(&frame).unwrap_or_default(),
        })
        .collect())
}

pub fn read_ground_truth(path: &Path) -> anyhow::Result<GroundTruth> {
    let mut frames: BTreeMap<u64, Vec<GtEntry>> = BTreeMap::new();
    read_lines::<GtLine, _>(path, |_, g| {
        frames.entry(g.frame).or_default().push(GtEntry {
            object_id: g.object_id,
            box3d: box_from_line(g.box3d)?,
            category: g.category,
        });
        Ok(())
    })?;
    Ok(GroundTruth {
        frames: frames
            .into_iter()
            .map(|(frame, entries)| GtFrame { frame, entries })
            .collect(),
    })
}

pub fn read_tracking_result(path: &Path) -> anyhow::Result<TrackingResult> {
    let mut frames: BTreeMap<u64, Vec<TrackOutput>> = BTreeMap::new();
    read_lines::<ResultLine, _>(path, |_, r| {
        if !(0.0..=1.0).contains(&r.score) {
            return Err(format!("score {} outside [0, 1]", r.score));
        }
        frames.entry(r.frame).or_default().push(TrackOutput {
            track_id: r.track_id,
            box3d: box_from_line(r.box3d)?,
            confidence: r.score,
            category: r.category,
        });
        Ok(())
    })?;
    Ok(TrackingResult {
        frames: frames
            .into_iter()
            .map(|(frame, entries)| ResultFrame { frame, entries })
            .collect(),
    })
}

/// One trajectory window per line: the motion-model training unit.
#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrajectorySampleLine {
    pub object_id: u64,
    pub category: String,
    pub steps: Vec<TrajStepLine>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrajStepLine {
    pub frame: u64,
    pub gt: [f64; 7],
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub det: Option<DetMatchLine>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DetMatchLine {
    #[serde(rename = "box")]
    pub box7: [f64; 7],
    pub score: f64,
    pub camera_id: u32,
}

pub fn write_trajectory_dataset(
    path: &Path,
    samples: &[panoptrack_core::learn::TrajectorySample],
) -> anyhow::Result<()> {
    write_jsonl(
        path,
        samples.iter().map(|s| TrajectorySampleLine {
            object_id: s.object_id,
            category: s.category.clone(),
            steps: s
                .steps
                .iter()
                .map(|st| TrajStepLine {
                    frame: st.frame,
                    gt: st.gt,
                    det: st.det.as_ref().map(|d| DetMatchLine {
                        box7: d.box7,
                        score: d.confidence,
                        camera_id: d.camera_id,
                    }),
                })
                .collect(),
        }),
    )
}

pub fn read_trajectory_dataset(
    path: &Path,
) -> anyhow::Result<Vec<panoptrack_core::learn::TrajectorySample>> {
    use panoptrack_core::learn::{DetMatch, TrajStep, TrajectorySample};
    let mut samples = Vec::new();
    read_lines::<TrajectorySampleLine, _>(path, |_, s| {
        samples.push(TrajectorySample {
            object_id: s.object_id,
            category: s.category,
            steps: s
                .steps
                .into_iter()
                .map(|st| TrajStep {
                    frame: st.frame,
                    gt: st.gt,
                    det: st.det.map(|d| DetMatch {
                        box7: d.box7,
                        confidence: d.score,
                        camera_id: d.camera_id,
                    }),
                })
                .collect(),
        });
        Ok(())
    })?;
    Ok(samples)
}

fn write_jsonl<T: Serialize>(path: &Path, records: impl Iterator<Item = T>) -> anyhow::Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    for record in records {
        serde_json::to_writer(&mut out, &record)?;
        out.write_all(b"\n")?;
    }
    out.flush()?;
    Ok(())
}

pub fn write_frame_bundles(
    detections_path: &Path,
    poses_path: &Path,
    bundles: &[FrameBundle],
) -> anyhow::Result<()> {
    write_jsonl(
        poses_path,
        bundles.iter().flat_map(|b| {
            b.poses.iter().map(move |p| PoseLine {
                frame: b.frame,
                camera_id: p.camera_id,
                rotation: p.pose.rotation,
                translation: p.pose.translation,
            })
        }),
    )?;
    write_jsonl(
        detections_path,
        bundles.iter().flat_map(|b| {
            b.detections.iter().map(move |d| DetectionLine {
                frame: b.frame,
                camera_id: d.camera_id,
                category: d.category.clone(),
                box3d: d.box3d.to_array(),
                score: d.confidence,
                embedding: d.embedding.as_ref().map(|e| e.as_slice().to_vec()),
            })
        }),
    )
}

pub fn write_ground_truth(path: &Path, gt: &GroundTruth) -> anyhow::Result<()> {
    write_jsonl(
        path,
        gt.frames.iter().flat_map(|f| {
            f.entries.iter().map(move |e| GtLine {
                frame: f.frame,
                object_id: e.object_id,
                category: e.category.clone(),
                box3d: e.box3d.to_array(),
            })
        }),
    )
}

pub fn write_tracking_result(path: &Path, result: &TrackingResult) -> anyhow::Result<()> {
    write_jsonl(
        path,
        result.frames.iter().flat_map(|f| {
            f.entries.iter().map(move |e| ResultLine {
                frame: f.frame,
                track_id: e.track_id,
                category: e.category.clone(),
                box3d: e.box3d.to_array(),
                score: e.confidence,
            })
        }),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use panoptrack_core::geom::Box3D;
    use panoptrack_core::metrics::ResultFrame;

    #[test]
    fn result_round_trip_is_value_exact() {
        // awkward floats: shortest-repr decimals must parse back to the
        // identical bit patterns
        let values = [
            0.1f64,
            1.0 / 3.0,
            0.123_456_789_012_345_68,
            core::f64::consts::PI / 10.0,
            1.582_905_066_504_592_3,
        ];
        let result = TrackingResult {
            frames: vec![ResultFrame {
                frame: 7,
                entries: values
                    .iter()
                    .enumerate()
                    .map(|(i, &v)| TrackOutput {
                        track_id: i as u64,
                        box3d: Box3D::new(v, -v, v * 1e-3, v, 1.0 + v, 2.0 - v, 1.0),
                        confidence: v.fract().abs().clamp(0.05, 1.0),
                        category: "car".into(),
                    })
                    .collect(),
            }],
        };
        let dir = std::env::temp_dir().join(format!("ptfmt-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("result.jsonl");
        write_tracking_result(&path, &result).unwrap();
        let first = std::fs::read(&path).unwrap();
        let reread = read_tracking_result(&path).unwrap();
        assert_eq!(reread, result);
        write_tracking_result(&path, &reread).unwrap();
        assert_eq!(std::fs::read(&path).unwrap(), first);
        std::fs::remove_dir_all(&dir).unwrap();
    }
}
