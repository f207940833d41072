//! Motion-model training: cross-camera trajectory dataset construction,
//! the trajectory / linearity / combined losses, an Adam(AMSGrad)
//! optimizer, and the trainer that replays windows through the motion
//! model exactly as the tracker would. Also hosts the similarity-head
//! losses on precomputed embedding vectors.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::fusion::DetectionRecord;
use crate::geom::bev_distance;
use crate::math;
use crate::metrics::GroundTruth;
use crate::motion::{
    advance_state, lstm_predict_backward, lstm_predict_cached, lstm_update_backward,
    lstm_update_cached, LstmWeights, PredictCache, UpdateCache, Velocity7, HISTORY_LEN, VEL_DIM,
};
use crate::rng::Rng;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum LearnError {
    #[error("velocity list lengths differ: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("linearity loss needs at least 3 predicted velocities, got {len}")]
    WindowTooShort { len: usize },
    #[error("at least one positive embedding is required")]
    EmptyPositives,
    #[error("zero-norm embedding")]
    ZeroNormEmbedding,
    #[error("empty training dataset")]
    EmptyDataset,
    #[error("non-finite loss at epoch {epoch}, sample {sample}")]
    NonFiniteLoss { epoch: usize, sample: usize },
}

// ---------------------------------------------------------------------------
// Trajectory dataset
// ---------------------------------------------------------------------------

/// Detection matched to one trajectory step.
#[derive(Debug, Clone, PartialEq)]
pub struct DetMatch {
    pub box7: [f64; 7],
    pub confidence: f64,
    pub camera_id: u32,
}

/// One step of a trajectory window: ground truth always present,
/// detection optional (a gap).
#[derive(Debug, Clone, PartialEq)]
pub struct TrajStep {
    pub frame: u64,
    pub gt: [f64; 7],
    pub det: Option<DetMatch>,
}

/// Fixed-length window of one ground-truth trajectory with its matched
/// detections. Contains at least one match.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectorySample {
    pub object_id: u64,
    pub category: String,
    pub steps: Vec<TrajStep>,
}

/// Matches fused world-frame detections to ground-truth trajectories by
/// BEV distance and cuts every window of `window` consecutive frames
/// that contains at least one match.
///
/// Per frame the matching is one-to-one and greedy by ascending
/// distance among same-category pairs within `threshold` meters.
pub fn build_trajectory_dataset(
    gt: &GroundTruth,
    detections: &[DetectionRecord],
    threshold: f64,
    window: usize,
) -> Vec<TrajectorySample> {
    let mut dets_by_frame: BTreeMap<u64, Vec<&DetectionRecord>> = BTreeMap::new();
    for d in detections {
        dets_by_frame.entry(d.frame).or_default().push(d);
    }

    // object id -> (category, per-frame step) in frame order
    let mut tracks: BTreeMap<u64, (String, Vec<TrajStep>)> = BTreeMap::new();
    for frame in &gt.frames {
        let empty = Vec::new();
        let frame_dets = dets_by_frame.get(&frame.frame).unwrap_or(&empty);
        // candidate pairs (distance, gt index, det index)
        let mut pairs: Vec<(f64, usize, usize)> = Vec::new();
        for (gi, g) in frame.entries.iter().enumerate() {
            for (di, d) in frame_dets.iter().enumerate() {
                if d.category != g.category {
                    continue;
                }
                let dist = bev_distance(&g.box3d, &d.box3d);
                if dist <= threshold {
                    pairs.push((dist, gi, di));
                }
            }
        }
        pairs.sort_by(|a, b| {
            a.0.partial_cmp(&b.0)
                .unwrap_or(core::cmp::Ordering::Equal)
                .then(a.1.cmp(&b.1))
                .then(a.2.cmp(&b.2))
        });
        let mut gt_used = vec![false; frame.entries.len()];
        let mut det_used = vec![false; frame_dets.len()];
        let mut matched: BTreeMap<usize, usize> = BTreeMap::new();
        for (_, gi, di) in pairs {
            if !gt_used[gi] && !det_used[di] {
                gt_used[gi] = true;
                det_used[di] = true;
                matched.insert(gi, di);
            }
        }
        for (gi, g) in frame.entries.iter().enumerate() {
            let det = matched.get(&gi).map(|&di| {
                let d = frame_dets[di];
                DetMatch {
                    box7: d.box3d.to_array(),
                    confidence: d.confidence,
                    camera_id: d.camera_id,
                }
            });
            let entry = tracks
                .entry(g.object_id)
                .or_insert_with(|| (g.category.clone(), Vec::new()));
            entry.1.push(TrajStep {
                frame: frame.frame,
                gt: g.box3d.to_array(),
                det,
            });
        }
    }

    let mut samples = Vec::new();
    for (object_id, (category, steps)) in tracks {
        // split into runs of consecutive frames
        let mut runs: Vec<&[TrajStep]> = Vec::new();
        let mut start = 0;
        for i in 1..=steps.len() {
            if i == steps.len() || steps[i].frame != steps[i - 1].frame + 1 {
                runs.push(&steps[start..i]);
                start = i;
            }
        }
        for run in runs {
            if run.len() < window {
                continue;
            }
            for begin in 0..=run.len() - window {
                let slice = &run[begin..begin + window];
                if slice.iter().any(|s| s.det.is_some()) {
                    samples.push(TrajectorySample {
                        object_id,
                        category: category.clone(),
                        steps: slice.to_vec(),
                    });
                }
            }
        }
    }
    samples
}

// ---------------------------------------------------------------------------
// Losses
// ---------------------------------------------------------------------------

/// Per-component Huber penalty summed over the 7 components.
fn huber7(a: &[f64; 7], b: &[f64; 7], delta: f64) -> f64 {
    let mut acc = 0.0;
    for i in 0..7 {
        let e = math::abs(a[i] - b[i]);
        acc += if e <= delta {
            0.5 * e * e
        } else {
            delta * (e - 0.5 * delta)
        };
    }
    acc
}

/// d/da of [`huber7`], per component.
fn huber7_grad(a: &[f64; 7], b: &[f64; 7], delta: f64) -> [f64; 7] {
    let mut g = [0.0; 7];
    for i in 0..7 {
        let e = a[i] - b[i];
        g[i] = if math::abs(e) <= delta {
            e
        } else if e > 0.0 {
            delta
        } else {
            -delta
        };
    }
    g
}

/// Mean over the window of `huber(v̂, ṽ) + huber(v, ṽ)`.
pub fn trajectory_loss(
    refined: &[Velocity7],
    predicted: &[Velocity7],
    ground_truth: &[Velocity7],
    huber_delta: f64,
) -> Result<f64, LearnError> {
    if refined.len() != predicted.len() || refined.len() != ground_truth.len() {
        return Err(LearnError::LengthMismatch {
            left: refined.len(),
            right: predicted.len().max(ground_truth.len()),
        });
    }
    if refined.is_empty() {
        return Ok(0.0);
    }
    let mut acc = 0.0;
    for ((v, vh), vt) in refined
        .iter()
        .zip(predicted.iter())
        .zip(ground_truth.iter())
    {
        acc += huber7(&vh.0, &vt.0, huber_delta) + huber7(&v.0, &vt.0, huber_delta);
    }
    Ok(acc / refined.len() as f64)
}

/// Mean L1 norm of the second difference of the predicted velocities:
/// zero exactly when the sequence ramps linearly.
pub fn linearity_loss(predicted: &[Velocity7]) -> Result<f64, LearnError> {
    if predicted.len() < 3 {
        return Err(LearnError::WindowTooShort {
            len: predicted.len(),
        });
    }
    let interior = predicted.len() - 2;
    let mut acc = 0.0;
    for t in 1..predicted.len() - 1 {
        for i in 0..7 {
            acc +=
                math::abs(predicted[t + 1].0[i] - 2.0 * predicted[t].0[i] + predicted[t - 1].0[i]);
        }
    }
    Ok(acc / interior as f64)
}

/// `trajectory_loss + w_linear · linearity_loss`.
pub fn motion_loss(
    refined: &[Velocity7],
    predicted: &[Velocity7],
    ground_truth: &[Velocity7],
    w_linear: f64,
    huber_delta: f64,
) -> Result<f64, LearnError> {
    let traj = trajectory_loss(refined, predicted, ground_truth, huber_delta)?;
    let lin = if w_linear == 0.0 {
        0.0
    } else {
        linearity_loss(predicted)?
    };
    Ok(traj + w_linear * lin)
}

/// Multi-positive contrastive loss
/// `log(1 + Σ_p Σ_n exp(f·n − f·p))` on embedding vectors.
pub fn embed_loss(
    key: &[f64],
    positives: &[Vec<f64>],
    negatives: &[Vec<f64>],
) -> Result<f64, LearnError> {
    Ok(embed_loss_with_grad(key, positives, negatives)?.0)
}

/// [`embed_loss`] plus its analytic gradient with respect to the key.
pub fn embed_loss_with_grad(
    key: &[f64],
    positives: &[Vec<f64>],
    negatives: &[Vec<f64>],
) -> Result<(f64, Vec<f64>), LearnError> {
    if positives.is_empty() {
        return Err(LearnError::EmptyPositives);
    }
    let dot = |a: &[f64], b: &[f64]| a.iter().zip(b.iter()).map(|(x, y)| x * y).sum::<f64>();
    let mut s = 0.0;
    let mut grad = vec![0.0; key.len()];
    for p in positives {
        let fp = dot(key, p);
        for n in negatives {
            let fn_ = dot(key, n);
            let e = math::exp(fn_ - fp);
            s += e;
            for ((g, nv), pv) in grad.iter_mut().zip(n.iter()).zip(p.iter()) {
                *g += e * (nv - pv);
            }
        }
    }
    let scale = 1.0 / (1.0 + s);
    for g in &mut grad {
        *g *= scale;
    }
    Ok((math::ln(1.0 + s), grad))
}

/// Squared error between the cosine similarity of two embeddings and
/// the same-object indicator.
pub fn aux_loss(f_key: &[f64], f_ref: &[f64], same_object: bool) -> Result<f64, LearnError> {
    let nk = math::norm(f_key);
    let nr = math::norm(f_ref);
    if nk == 0.0 || nr == 0.0 {
        return Err(LearnError::ZeroNormEmbedding);
    }
    let dot: f64 = f_key.iter().zip(f_ref.iter()).map(|(a, b)| a * b).sum();
    let cosine = dot / (nk * nr);
    let target = if same_object { 1.0 } else { 0.0 };
    Ok((cosine - target) * (cosine - target))
}

/// `λ_embed · L_embed + L_aux`.
pub fn similarity_loss(embed_term: f64, aux_term: f64, lambda_embed: f64) -> f64 {
    lambda_embed * embed_term + aux_term
}

// ---------------------------------------------------------------------------
// Window simulation (forward + backward through the motion model)
// ---------------------------------------------------------------------------

/// Trainer configuration. Defaults follow the tracker-side training
/// recipe: window 10, batch 128, 100 epochs, `w_linear` 1e-3, 2 m BEV
/// matching, Adam(AMSGrad) at 1e-3 with 1e-4 weight decay.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default, deny_unknown_fields))]
pub struct TrainConfig {
    pub window: usize,
    pub batch_size: usize,
    pub epochs: usize,
    pub w_linear: f64,
    pub bev_match_threshold: f64,
    pub learning_rate: f64,
    pub weight_decay: f64,
    pub huber_delta: f64,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            window: 10,
            batch_size: 128,
            epochs: 100,
            w_linear: 0.001,
            bev_match_threshold: 2.0,
            learning_rate: 1e-3,
            weight_decay: 1e-4,
            huber_delta: 1.0,
            seed: 0,
        }
    }
}

struct SimStep {
    v_hat: Velocity7,
    v_refined: Velocity7,
    gt_velocity: Velocity7,
    predict_cache: PredictCache,
    update_cache: Option<UpdateCache>,
    /// Which simulated step produced each buffer slot consumed by this
    /// step's rollout (`None` = zero padding).
    slot_sources: [Option<usize>; HISTORY_LEN],
}

/// Forward replay of one window, mirroring tracker inference: the track
/// is born at the first matched step with the detection box as state;
/// matched steps run predict + update, gaps reuse the prediction.
struct WindowForward {
    steps: Vec<SimStep>,
    loss: f64,
    traj_term: f64,
    linear_term: f64,
}

fn simulate_window(
    sample: &TrajectorySample,
    weights: &LstmWeights,
    config: &TrainConfig,
) -> Option<WindowForward> {
    let birth = sample.steps.iter().position(|s| s.det.is_some())?;
    if birth + 1 >= sample.steps.len() {
        return None; // nothing to simulate after birth
    }
    let hidden = weights.hidden;
    let mut h_pred = vec![0.0; hidden];
    let mut c_pred = vec![0.0; hidden];
    let mut h_upd = vec![0.0; hidden];
    let mut c_upd = vec![0.0; hidden];
    let mut buffer = [Velocity7::zero(); HISTORY_LEN];
    let mut sources: [Option<usize>; HISTORY_LEN] = [None; HISTORY_LEN];
    let mut state = sample.steps[birth]
        .det
        .as_ref()
        .expect("birth is matched")
        .box7;

    let mut steps = Vec::with_capacity(sample.steps.len() - birth - 1);
    for (sim_idx, i) in (birth + 1..sample.steps.len()).enumerate() {
        let (v_hat, predict_cache) =
            lstm_predict_cached(&buffer, &mut h_pred, &mut c_pred, weights);
        let slot_sources = sources;
        let step = &sample.steps[i];
        let (v_refined, update_cache) = match &step.det {
            Some(det) => {
                let observed = Velocity7::between(&det.box7, &state);
                let (v, cache) = lstm_update_cached(
                    v_hat,
                    observed,
                    det.confidence,
                    &mut h_upd,
                    &mut c_upd,
                    weights,
                );
                (v, Some(cache))
            }
            None => (v_hat, None),
        };
        buffer.rotate_left(1);
        buffer[HISTORY_LEN - 1] = v_refined;
        sources.rotate_left(1);
        sources[HISTORY_LEN - 1] = Some(sim_idx);
        state = advance_state(&state, &v_refined);
        let gt_velocity = Velocity7::between(&step.gt, &sample.steps[i - 1].gt);
        steps.push(SimStep {
            v_hat,
            v_refined,
            gt_velocity,
            predict_cache,
            update_cache,
            slot_sources,
        });
    }

    let refined: Vec<Velocity7> = steps.iter().map(|s| s.v_refined).collect();
    let predicted: Vec<Velocity7> = steps.iter().map(|s| s.v_hat).collect();
    let gt_vel: Vec<Velocity7> = steps.iter().map(|s| s.gt_velocity).collect();
    let traj_term =
        trajectory_loss(&refined, &predicted, &gt_vel, config.huber_delta).expect("equal lengths");
    let linear_term = if predicted.len() >= 3 {
        linearity_loss(&predicted).expect("length checked")
    } else {
        0.0
    };
    Some(WindowForward {
        loss: traj_term + config.w_linear * linear_term,
        traj_term,
        linear_term,
        steps,
    })
}

/// Backward pass over a simulated window; accumulates into `grads`.
fn backward_window(
    forward: &WindowForward,
    weights: &LstmWeights,
    config: &TrainConfig,
    grads: &mut LstmWeights,
) {
    let n = forward.steps.len();
    let inv_n = 1.0 / n as f64;
    let hidden = weights.hidden;

    // Loss gradients on the velocity sequences.
    let mut d_vhat = vec![[0.0; VEL_DIM]; n];
    let mut d_vref = vec![[0.0; VEL_DIM]; n];
    for (t, step) in forward.steps.iter().enumerate() {
        let gh = huber7_grad(&step.v_hat.0, &step.gt_velocity.0, config.huber_delta);
        let gr = huber7_grad(&step.v_refined.0, &step.gt_velocity.0, config.huber_delta);
        for i in 0..VEL_DIM {
            d_vhat[t][i] += inv_n * gh[i];
            d_vref[t][i] += inv_n * gr[i];
        }
    }
    if n >= 3 && config.w_linear != 0.0 {
        let scale = config.w_linear / (n - 2) as f64;
        for t in 1..n - 1 {
            for i in 0..VEL_DIM {
                let second = forward.steps[t + 1].v_hat.0[i] - 2.0 * forward.steps[t].v_hat.0[i]
                    + forward.steps[t - 1].v_hat.0[i];
                let s = if second > 0.0 {
                    1.0
                } else if second < 0.0 {
                    -1.0
                } else {
                    0.0
                };
                d_vhat[t + 1][i] += scale * s;
                d_vhat[t][i] -= 2.0 * scale * s;
                d_vhat[t - 1][i] += scale * s;
            }
        }
    }

    // Reverse sweep with carried state gradients.
    let mut g_h_pred = vec![0.0; hidden];
    let mut g_c_pred = vec![0.0; hidden];
    let mut g_h_upd = vec![0.0; hidden];
    let mut g_c_upd = vec![0.0; hidden];
    let mut g_state = [0.0; VEL_DIM]; // dL/db_t for the step being processed
    let mut pending_buffer: Vec<[f64; VEL_DIM]> = vec![[0.0; VEL_DIM]; n];

    for t in (0..n).rev() {
        let step = &forward.steps[t];
        // Total gradient on the refined velocity: loss term, later
        // rollouts that consumed it from the buffer, and the box chain
        // b_t = b_{t−1} + v_t.
        let mut dv = d_vref[t];
        for i in 0..VEL_DIM {
            dv[i] += pending_buffer[t][i] + g_state[i];
        }

        let mut dv_hat = d_vhat[t];
        match &step.update_cache {
            Some(cache) => {
                let (d_pred, d_obs, dh_in, dc_in) =
                    lstm_update_backward(cache, weights, &dv, &g_h_upd, &g_c_upd, grads);
                for i in 0..VEL_DIM {
                    dv_hat[i] += d_pred[i];
                }
                g_h_upd = dh_in;
                g_c_upd = dc_in;
                // v′_t = det − b_{t−1}: the observation is data, the
                // box carries −d_obs into the previous state.
                for i in 0..VEL_DIM {
                    g_state[i] -= d_obs[i];
                }
            }
            None => {
                // v_t ≡ v̂_t on gaps
                for i in 0..VEL_DIM {
                    dv_hat[i] += dv[i];
                }
            }
        }

        let (d_slots, dh_in, dc_in) = lstm_predict_backward(
            &step.predict_cache,
            weights,
            &dv_hat,
            &g_h_pred,
            &g_c_pred,
            grads,
        );
        g_h_pred = dh_in;
        g_c_pred = dc_in;
        for (s, source) in step.slot_sources.iter().enumerate() {
            if let Some(k) = source {
                for i in 0..VEL_DIM {
                    pending_buffer[*k][i] += d_slots[s][i];
                }
            }
        }
    }
}

/// Loss of one sample without touching gradients (validation and
/// finite-difference oracles).
pub fn window_loss(
    sample: &TrajectorySample,
    weights: &LstmWeights,
    config: &TrainConfig,
) -> Option<f64> {
    simulate_window(sample, weights, config).map(|f| f.loss)
}

/// Loss and analytic weight gradients of one sample.
pub fn window_loss_and_grads(
    sample: &TrajectorySample,
    weights: &LstmWeights,
    config: &TrainConfig,
) -> Option<(f64, LstmWeights)> {
    let forward = simulate_window(sample, weights, config)?;
    let mut grads = weights.zeros_like();
    backward_window(&forward, weights, config, &mut grads);
    Some((forward.loss, grads))
}

// ---------------------------------------------------------------------------
// Optimizer and trainer
// ---------------------------------------------------------------------------

/// Adam with the AMSGrad variant and L2 weight decay folded into the
/// gradient.
pub struct AmsGradAdam {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub weight_decay: f64,
    m: Vec<f64>,
    v: Vec<f64>,
    v_hat_max: Vec<f64>,
    t: u64,
}

impl AmsGradAdam {
    pub fn new(param_count: usize, learning_rate: f64, weight_decay: f64) -> Self {
        Self {
            learning_rate,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            weight_decay,
            m: vec![0.0; param_count],
            v: vec![0.0; param_count],
            v_hat_max: vec![0.0; param_count],
            t: 0,
        }
    }

    pub fn step(&mut self, weights: &mut LstmWeights, grads: &LstmWeights) {
        self.t += 1;
        let bc1 = 1.0 - libm::pow(self.beta1, self.t as f64);
        let bc2 = 1.0 - libm::pow(self.beta2, self.t as f64);
        let mut offset = 0;
        let grad_tensors = grads.tensors();
        for ((_, w), (_, g)) in weights.tensors_mut().into_iter().zip(grad_tensors) {
            for (wi, gi) in w.iter_mut().zip(g.iter()) {
                let grad = gi + self.weight_decay * *wi;
                let m = &mut self.m[offset];
                let v = &mut self.v[offset];
                *m = self.beta1 * *m + (1.0 - self.beta1) * grad;
                *v = self.beta2 * *v + (1.0 - self.beta2) * grad * grad;
                let m_hat = *m / bc1;
                let v_hat = *v / bc2;
                let vm = &mut self.v_hat_max[offset];
                if v_hat > *vm {
                    *vm = v_hat;
                }
                *wi -= self.learning_rate * m_hat / (math::sqrt(*vm) + self.epsilon);
                offset += 1;
            }
        }
    }
}

/// Per-epoch training statistics.
#[derive(Debug, Clone, PartialEq)]
pub struct EpochStats {
    pub epoch: usize,
    pub mean_loss: f64,
    pub traj_term: f64,
    pub linear_term: f64,
    pub val_loss: Option<f64>,
}

/// Training log: one row per epoch.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct TrainLog {
    pub epochs: Vec<EpochStats>,
}

/// Trains the dual-LSTM motion model by simulating inference over every
/// window: mini-batches of `batch_size`, gradients averaged per batch,
/// Adam(AMSGrad) with weight decay. `validation`, when given, is
/// evaluated (forward only) after every epoch.
pub fn train_motion_model(
    dataset: &[TrajectorySample],
    validation: Option<&[TrajectorySample]>,
    weights: &mut LstmWeights,
    config: &TrainConfig,
) -> Result<TrainLog, LearnError> {
    if dataset.is_empty() {
        return Err(LearnError::EmptyDataset);
    }
    let mut optimizer = AmsGradAdam::new(
        weights.param_count(),
        config.learning_rate,
        config.weight_decay,
    );
    let mut log = TrainLog::default();
    let mut order: Vec<usize> = (0..dataset.len()).collect();

    for epoch in 1..=config.epochs {
        let mut rng = Rng::keyed(config.seed, &[0x5448_5546, epoch as u64]);
        rng.shuffle(&mut order);

        let mut epoch_loss = 0.0;
        let mut epoch_traj = 0.0;
        let mut epoch_lin = 0.0;
        let mut n_samples = 0usize;

        for batch in order.chunks(config.batch_size) {
            let mut batch_grads = weights.zeros_like();
            let mut batch_count = 0usize;
            for &idx in batch {
                let Some(forward) = simulate_window(&dataset[idx], weights, config) else {
                    continue;
                };
                if !forward.loss.is_finite() {
                    return Err(LearnError::NonFiniteLoss { epoch, sample: idx });
                }
                epoch_loss += forward.loss;
                epoch_traj += forward.traj_term;
                epoch_lin += forward.linear_term;
                n_samples += 1;
                batch_count += 1;
                backward_window(&forward, weights, config, &mut batch_grads);
            }
            if batch_count == 0 {
                continue;
            }
            let inv = 1.0 / batch_count as f64;
            for (_, g) in batch_grads.tensors_mut() {
                for v in g {
                    *v *= inv;
                }
            }
            optimizer.step(weights, &batch_grads);
        }

        let denom = n_samples.max(1) as f64;
        let val_loss = validation.map(|val| {
            let mut acc = 0.0;
            let mut count = 0usize;
            for sample in val {
                if let Some(loss) = window_loss(sample, weights, config) {
                    acc += loss;
                    count += 1;
                }
            }
            acc / count.max(1) as f64
        });
        log.epochs.push(EpochStats {
            epoch,
            mean_loss: epoch_loss / denom,
            traj_term: epoch_traj / denom,
            linear_term: epoch_lin / denom,
            val_loss,
        });
    }
    Ok(log)
}
