//! Panoramic multi-camera 3D multi-object tracking.
//!
//! The crate fuses per-camera 3D detections into a single world-frame
//! tracker and evaluates the result with nuScenes-style integrated
//! metrics. It is organized around the tracking-by-detection loop:
//!
//! * [`geom`] — 7-DoF boxes, rigid transforms, BEV distance, 2D/3D IoU.
//! * [`fusion`] — lifting camera-frame detections to world space and
//!   merging them across cameras with 3D non-maximum suppression.
//! * [`affinity`] — appearance / location / motion affinities and the
//!   combined track-detection affinity matrix.
//! * [`motion`] — the KF3D Kalman baseline and the dual-LSTM velocity
//!   model (predict + update) with hand-derived backward passes.
//! * [`tracker`] — greedy assignment, track lifecycle and the three
//!   cross-camera pipeline paradigms.
//! * [`learn`] — trajectory dataset construction, motion-model losses
//!   and the Adam/AMSGrad trainer, plus similarity-learning losses on
//!   embedding vectors.
//! * [`metrics`] — MOTA at fixed recall, AMOTA, AMOTP and
//!   IoU-threshold MOTA/mismatch.
//! * [`sim`] — a deterministic multi-camera rig simulator producing
//!   ground truth and noisy detections with synthetic embeddings.
//!
//! The crate is `no_std`-compatible (requires `alloc`); the default
//! `std` feature only toggles `std::error::Error` integration. All
//! floating-point math goes through [`libm`] so results are
//! bit-identical across platforms and feature sets.

#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

pub mod affinity;
pub mod fusion;
pub mod geom;
pub mod learn;
mod math;
pub mod matrix;
pub mod metrics;
pub mod motion;
pub mod rng;
pub mod sim;
pub mod tracker;

pub use fusion::{CameraPose, DetectionRecord, Embedding, FrameBundle, EMBED_DIM};
pub use geom::{Box2D, Box3D, RigidTransform};
pub use metrics::{GroundTruth, TrackingResult};
