//! Run configuration: one TOML file covering tracker, affinity, Kalman,
//! training and metric settings, with unknown keys rejected. Defaults
//! follow the reference tracker settings (association weight 0.5, 3D
//! NMS IoU 0.1, match threshold 0.5, 10 inactive frames, appearance
//! momentum 0.8, `w_linear` 0.001, 2 m BEV matching).

use std::path::{Path, PathBuf};

use anyhow::Context;
use panoptrack_core::affinity::AffinityConfig;
use panoptrack_core::learn::TrainConfig;
use panoptrack_core::metrics::Matcher;
use panoptrack_core::motion::KfConfig;
use panoptrack_core::tracker::TrackerConfig;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub tracker: TrackerConfig,
    pub affinity: AffinityConfig,
    pub kf: KfConfig,
    pub train: TrainConfig,
    pub metrics: MetricsConfig,
    pub motion: MotionConfig,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MetricsConfig {
    pub n_points: usize,
    /// `bev:<gate>` or `iou3d:<min>`.
    pub matcher: String,
}

impl Default for MetricsConfig {
    fn default() -> Self {
        Self {
            n_points: 40,
            matcher: "bev:2.0".into(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MotionConfig {
    /// Path to trained LSTM weights; required when the tracker runs
    /// with the LSTM motion model.
    pub weights_path: Option<PathBuf>,
    /// Hidden size used when training fresh weights.
    pub hidden: usize,
}

impl RunConfig {
    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("cannot read config {}", path.display()))?;
        let config: RunConfig = toml::from_str(&text).map_err(|e| crate::formats::InputError {
            path: path.display().to_string(),
            line: 0,
            reason: e.to_string(),
        })?;
        Ok(config)
    }

    pub fn load_or_default(path: Option<&Path>) -> anyhow::Result<Self> {
        match path {
            Some(p) => Self::load(p),
            None => Ok(Self::default()),
        }
    }
}

impl Default for MotionConfig {
    fn default() -> Self {
        Self {
            weights_path: None,
            hidden: panoptrack_core::motion::DEFAULT_HIDDEN,
        }
    }
}

/// Parses `bev:<gate>` / `iou3d:<min>` matcher descriptions.
pub fn parse_matcher(text: &str) -> anyhow::Result<Matcher> {
    let err = || {
        anyhow::Error::from(crate::formats::InputError {
            path: "matcher".into(),
            line: 0,
            reason: format!("expected bev:<gate> or iou3d:<min>, got {text:?}"),
        })
    };
    let (kind, value) = text.split_once(':').ok_or_else(err)?;
    let value: f64 = value.parse().map_err(|_| err())?;
    match kind {
        "bev" if value > 0.0 => Ok(Matcher::Bev { gate: value }),
        "iou3d" if (0.0..=1.0).contains(&value) => Ok(Matcher::Iou3d { min_iou: value }),
        _ => Err(err()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_match_reference_settings() {
        let c = RunConfig::default();
        assert_eq!(c.affinity.w_deep, 0.5);
        assert_eq!(c.tracker.nms_iou3d, 0.1);
        assert_eq!(c.tracker.match_threshold, 0.5);
        assert_eq!(c.tracker.max_inactive_frames, 10);
        assert_eq!(c.tracker.embed_momentum, 0.8);
        assert_eq!(c.train.w_linear, 0.001);
        assert_eq!(c.train.bev_match_threshold, 2.0);
        assert_eq!(c.train.batch_size, 128);
        assert_eq!(c.train.epochs, 100);
        assert_eq!(c.tracker.start_score, 0.8);
        assert_eq!(c.tracker.continue_score, 0.5);
        assert_eq!(c.tracker.dup_iou2d_new, 0.7);
        assert_eq!(c.tracker.dup_iou2d_backdrop, 0.3);
        assert_eq!(c.metrics.n_points, 40);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let err = toml::from_str::<RunConfig>("[tracker]\nnot_a_key = 1\n");
        assert!(err.is_err());
        let err = toml::from_str::<RunConfig>("[nonsense]\nx = 1\n");
        assert!(err.is_err());
    }

    #[test]
    fn matcher_parsing() {
        assert_eq!(
            parse_matcher("bev:2.0").unwrap(),
            Matcher::Bev { gate: 2.0 }
        );
        assert_eq!(
            parse_matcher("iou3d:0.3").unwrap(),
            Matcher::Iou3d { min_iou: 0.3 }
        );
        assert!(parse_matcher("bev").is_err());
        assert!(parse_matcher("iou3d:7.0").is_err());
        assert!(parse_matcher("foo:1").is_err());
    }
}
