//! Motion models over 7-DoF box states.
//!
//! Two families live here:
//!
//! * `KF3D` — a constant-velocity Kalman filter over
//!   `[x, y, z, θ, l, w, h, ẋ, ẏ, ż, θ̇]` with dimension random walk.
//! * The dual-LSTM velocity model: a prediction network extrapolates
//!   the next velocity from the last five velocities, an update network
//!   refines it from the prediction, the observed velocity and the
//!   detection confidence. Both consume 64-dimensional linear
//!   projections of their inputs.
//!
//! The cached forward / backward pairs at the bottom implement exact
//! backpropagation through time for the trainer; the plain forwards the
//! tracker uses route through the same step primitives, so training
//! simulation and inference compute identical numbers.

use alloc::vec;
use alloc::vec::Vec;

use crate::geom::{wrap_angle, Box3D};
use crate::math;
use crate::matrix::Matrix;
use crate::rng::Rng;

/// Per-frame change of a 7-DoF box state. The θ component of an
/// observed velocity is a wrapped angle difference, so |θ̇| ≤ π;
/// network predictions are unconstrained.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Velocity7(pub [f64; 7]);

impl Velocity7 {
    pub fn zero() -> Self {
        Self([0.0; 7])
    }

    /// Observed velocity `curr − prev` with wrapped yaw difference.
    pub fn between(curr: &[f64; 7], prev: &[f64; 7]) -> Self {
        let mut v = [0.0; 7];
        for i in 0..7 {
            v[i] = curr[i] - prev[i];
        }
        v[3] = wrap_angle(v[3]);
        Self(v)
    }
}

/// `state + velocity` on raw 7-vectors, wrapping θ.
pub fn advance_state(state: &[f64; 7], v: &Velocity7) -> [f64; 7] {
    let mut out = [0.0; 7];
    for i in 0..7 {
        out[i] = state[i] + v.0[i];
    }
    out[3] = wrap_angle(out[3]);
    out
}

/// Smallest extent a box emitted from a motion model may have.
pub const MIN_EXTENT: f64 = 1e-3;

/// Converts a raw 7-vector state into a box, clamping extents.
pub fn box_from_state(state: &[f64; 7]) -> Box3D {
    Box3D::new(
        state[0],
        state[1],
        state[2],
        state[3],
        state[4].max(MIN_EXTENT),
        state[5].max(MIN_EXTENT),
        state[6].max(MIN_EXTENT),
    )
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum MotionError {
    #[error("covariance lost positive definiteness (diagonal entry {value} at index {index})")]
    CovarianceNotPd { index: usize, value: f64 },
}

// ---------------------------------------------------------------------------
// LSTM velocity model
// ---------------------------------------------------------------------------

/// Dimensionality of box states and velocities.
pub const VEL_DIM: usize = 7;
/// Every network input is first projected to this many dimensions.
pub const PROJ_DIM: usize = 64;
/// The update network consumes predicted velocity, observed velocity
/// and confidence projections, concatenated.
pub const UPDATE_IN_DIM: usize = 3 * PROJ_DIM;
/// Number of buffered past velocities consumed by the predictor.
pub const HISTORY_LEN: usize = 5;
/// Default hidden size.
pub const DEFAULT_HIDDEN: usize = 128;

/// Dense affine map `y = W x + b`.
#[derive(Debug, Clone, PartialEq)]
pub struct Linear {
    pub w: Matrix,
    pub b: Vec<f64>,
}

impl Linear {
    fn zeros(out_dim: usize, in_dim: usize) -> Self {
        Self {
            w: Matrix::zeros(out_dim, in_dim),
            b: vec![0.0; out_dim],
        }
    }

    fn init(out_dim: usize, in_dim: usize, k: f64, rng: &mut Rng) -> Self {
        let mut l = Self::zeros(out_dim, in_dim);
        for v in l.w.data_mut() {
            *v = rng.uniform(-k, k);
        }
        for v in &mut l.b {
            *v = rng.uniform(-k, k);
        }
        l
    }

    pub fn forward(&self, x: &[f64]) -> Vec<f64> {
        let mut y = self.w.matvec(x);
        for (o, b) in y.iter_mut().zip(self.b.iter()) {
            *o += b;
        }
        y
    }

    /// Accumulates gradients for `dy`; returns dx.
    fn backward(&self, x: &[f64], dy: &[f64], grad: &mut Linear) -> Vec<f64> {
        grad.w.add_outer(dy, x);
        for (g, d) in grad.b.iter_mut().zip(dy.iter()) {
            *g += d;
        }
        self.w.matvec_t(dy)
    }
}

/// One LSTM cell: gate order `[input, forget, cell, output]`, single
/// bias vector.
#[derive(Debug, Clone, PartialEq)]
pub struct LstmCell {
    pub w_ih: Matrix,
    pub w_hh: Matrix,
    pub b: Vec<f64>,
    pub hidden: usize,
}

/// Intermediates of one cell step, kept for the backward pass.
#[derive(Debug, Clone)]
pub struct StepCache {
    x: Vec<f64>,
    h_prev: Vec<f64>,
    c_prev: Vec<f64>,
    gate_i: Vec<f64>,
    gate_f: Vec<f64>,
    gate_g: Vec<f64>,
    gate_o: Vec<f64>,
    tanh_c_new: Vec<f64>,
}

impl LstmCell {
    fn zeros(hidden: usize, input: usize) -> Self {
        Self {
            w_ih: Matrix::zeros(4 * hidden, input),
            w_hh: Matrix::zeros(4 * hidden, hidden),
            b: vec![0.0; 4 * hidden],
            hidden,
        }
    }

    /// Uniform `[−k, k]` weights with the forget-gate bias set to 1.
    fn init(hidden: usize, input: usize, k: f64, rng: &mut Rng) -> Self {
        let mut cell = Self::zeros(hidden, input);
        for v in cell.w_ih.data_mut() {
            *v = rng.uniform(-k, k);
        }
        for v in cell.w_hh.data_mut() {
            *v = rng.uniform(-k, k);
        }
        for v in &mut cell.b {
            *v = rng.uniform(-k, k);
        }
        for v in &mut cell.b[hidden..2 * hidden] {
            *v = 1.0;
        }
        cell
    }

    /// One step; returns (h_new, c_new, cache).
    fn step(&self, x: &[f64], h: &[f64], c: &[f64]) -> (Vec<f64>, Vec<f64>, StepCache) {
        let hidden = self.hidden;
        let mut gates = self.w_ih.matvec(x);
        let rec = self.w_hh.matvec(h);
        for ((g, r), b) in gates.iter_mut().zip(rec.iter()).zip(self.b.iter()) {
            *g += r + b;
        }
        let mut gate_i = vec![0.0; hidden];
        let mut gate_f = vec![0.0; hidden];
        let mut gate_g = vec![0.0; hidden];
        let mut gate_o = vec![0.0; hidden];
        for j in 0..hidden {
            gate_i[j] = math::sigmoid(gates[j]);
            gate_f[j] = math::sigmoid(gates[hidden + j]);
            gate_g[j] = math::tanh(gates[2 * hidden + j]);
            gate_o[j] = math::sigmoid(gates[3 * hidden + j]);
        }
        let mut c_new = vec![0.0; hidden];
        let mut tanh_c_new = vec![0.0; hidden];
        let mut h_new = vec![0.0; hidden];
        for j in 0..hidden {
            c_new[j] = gate_f[j] * c[j] + gate_i[j] * gate_g[j];
            tanh_c_new[j] = math::tanh(c_new[j]);
            h_new[j] = gate_o[j] * tanh_c_new[j];
        }
        let cache = StepCache {
            x: x.to_vec(),
            h_prev: h.to_vec(),
            c_prev: c.to_vec(),
            gate_i,
            gate_f,
            gate_g,
            gate_o,
            tanh_c_new,
        };
        (h_new, c_new, cache)
    }

    /// Backward through one step. `dh` / `dc` are gradients on the step
    /// outputs; returns (dx, dh_prev, dc_prev) and accumulates weight
    /// gradients into `grad`.
    fn backward(
        &self,
        cache: &StepCache,
        dh: &[f64],
        dc_in: &[f64],
        grad: &mut LstmCell,
    ) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
        let hidden = self.hidden;
        let mut d_gates = vec![0.0; 4 * hidden];
        let mut dc_prev = vec![0.0; hidden];
        for j in 0..hidden {
            let tanh_c = cache.tanh_c_new[j];
            let do_ = dh[j] * tanh_c;
            let dc = dh[j] * cache.gate_o[j] * (1.0 - tanh_c * tanh_c) + dc_in[j];
            let i = cache.gate_i[j];
            let f = cache.gate_f[j];
            let g = cache.gate_g[j];
            let o = cache.gate_o[j];
            d_gates[j] = dc * g * i * (1.0 - i);
            d_gates[hidden + j] = dc * cache.c_prev[j] * f * (1.0 - f);
            d_gates[2 * hidden + j] = dc * i * (1.0 - g * g);
            d_gates[3 * hidden + j] = do_ * o * (1.0 - o);
            dc_prev[j] = dc * f;
        }
        grad.w_ih.add_outer(&d_gates, &cache.x);
        grad.w_hh.add_outer(&d_gates, &cache.h_prev);
        for (g, d) in grad.b.iter_mut().zip(d_gates.iter()) {
            *g += d;
        }
        let dx = self.w_ih.matvec_t(&d_gates);
        let dh_prev = self.w_hh.matvec_t(&d_gates);
        (dx, dh_prev, dc_prev)
    }
}

/// All parameters of the dual-LSTM motion model.
#[derive(Debug, Clone, PartialEq)]
pub struct LstmWeights {
    pub hidden: usize,
    /// Projection of each buffered velocity (prediction network input).
    pub proj_hist: Linear,
    pub pred_cell: LstmCell,
    pub pred_out: Linear,
    /// Projections of the update network inputs.
    pub proj_pred: Linear,
    pub proj_obs: Linear,
    pub proj_conf: Linear,
    pub update_cell: LstmCell,
    pub update_out: Linear,
}

impl LstmWeights {
    /// All-zero parameters (also the gradient accumulator shape).
    pub fn zeros(hidden: usize) -> Self {
        Self {
            hidden,
            proj_hist: Linear::zeros(PROJ_DIM, VEL_DIM),
            pred_cell: LstmCell::zeros(hidden, PROJ_DIM),
            pred_out: Linear::zeros(VEL_DIM, hidden),
            proj_pred: Linear::zeros(PROJ_DIM, VEL_DIM),
            proj_obs: Linear::zeros(PROJ_DIM, VEL_DIM),
            proj_conf: Linear::zeros(PROJ_DIM, 1),
            update_cell: LstmCell::zeros(hidden, UPDATE_IN_DIM),
            update_out: Linear::zeros(VEL_DIM, hidden),
        }
    }

    /// Seeded initialization: uniform `[−k, k]` with `k = 1/√hidden`,
    /// forget-gate biases 1.
    pub fn init(hidden: usize, seed: u64) -> Self {
        let k = 1.0 / math::sqrt(hidden as f64);
        let mut rng = Rng::keyed(seed, &[0x4c53_544d]);
        Self {
            hidden,
            proj_hist: Linear::init(PROJ_DIM, VEL_DIM, k, &mut rng),
            pred_cell: LstmCell::init(hidden, PROJ_DIM, k, &mut rng),
            pred_out: Linear::init(VEL_DIM, hidden, k, &mut rng),
            proj_pred: Linear::init(PROJ_DIM, VEL_DIM, k, &mut rng),
            proj_obs: Linear::init(PROJ_DIM, VEL_DIM, k, &mut rng),
            proj_conf: Linear::init(PROJ_DIM, 1, k, &mut rng),
            update_cell: LstmCell::init(hidden, UPDATE_IN_DIM, k, &mut rng),
            update_out: Linear::init(VEL_DIM, hidden, k, &mut rng),
        }
    }

    pub fn zeros_like(&self) -> Self {
        Self::zeros(self.hidden)
    }

    /// Named tensors in canonical order, as `(name, rows, cols)`;
    /// biases are column vectors.
    pub fn tensor_specs(hidden: usize) -> Vec<(&'static str, usize, usize)> {
        vec![
            ("pred.proj_hist.w", PROJ_DIM, VEL_DIM),
            ("pred.proj_hist.b", PROJ_DIM, 1),
            ("pred.cell.w_ih", 4 * hidden, PROJ_DIM),
            ("pred.cell.w_hh", 4 * hidden, hidden),
            ("pred.cell.b", 4 * hidden, 1),
            ("pred.out.w", VEL_DIM, hidden),
            ("pred.out.b", VEL_DIM, 1),
            ("update.proj_pred.w", PROJ_DIM, VEL_DIM),
            ("update.proj_pred.b", PROJ_DIM, 1),
            ("update.proj_obs.w", PROJ_DIM, VEL_DIM),
            ("update.proj_obs.b", PROJ_DIM, 1),
            ("update.proj_conf.w", PROJ_DIM, 1),
            ("update.proj_conf.b", PROJ_DIM, 1),
            ("update.cell.w_ih", 4 * hidden, UPDATE_IN_DIM),
            ("update.cell.w_hh", 4 * hidden, hidden),
            ("update.cell.b", 4 * hidden, 1),
            ("update.out.w", VEL_DIM, hidden),
            ("update.out.b", VEL_DIM, 1),
        ]
    }

    /// Flat tensor views in canonical order.
    pub fn tensors(&self) -> Vec<(&'static str, &[f64])> {
        vec![
            ("pred.proj_hist.w", self.proj_hist.w.data()),
            ("pred.proj_hist.b", &self.proj_hist.b),
            ("pred.cell.w_ih", self.pred_cell.w_ih.data()),
            ("pred.cell.w_hh", self.pred_cell.w_hh.data()),
            ("pred.cell.b", &self.pred_cell.b),
            ("pred.out.w", self.pred_out.w.data()),
            ("pred.out.b", &self.pred_out.b),
            ("update.proj_pred.w", self.proj_pred.w.data()),
            ("update.proj_pred.b", &self.proj_pred.b),
            ("update.proj_obs.w", self.proj_obs.w.data()),
            ("update.proj_obs.b", &self.proj_obs.b),
            ("update.proj_conf.w", self.proj_conf.w.data()),
            ("update.proj_conf.b", &self.proj_conf.b),
            ("update.cell.w_ih", self.update_cell.w_ih.data()),
            ("update.cell.w_hh", self.update_cell.w_hh.data()),
            ("update.cell.b", &self.update_cell.b),
            ("update.out.w", self.update_out.w.data()),
            ("update.out.b", &self.update_out.b),
        ]
    }

    pub fn tensors_mut(&mut self) -> Vec<(&'static str, &mut [f64])> {
        vec![
            ("pred.proj_hist.w", self.proj_hist.w.data_mut()),
            ("pred.proj_hist.b", &mut self.proj_hist.b),
            ("pred.cell.w_ih", self.pred_cell.w_ih.data_mut()),
            ("pred.cell.w_hh", self.pred_cell.w_hh.data_mut()),
            ("pred.cell.b", &mut self.pred_cell.b),
            ("pred.out.w", self.pred_out.w.data_mut()),
            ("pred.out.b", &mut self.pred_out.b),
            ("update.proj_pred.w", self.proj_pred.w.data_mut()),
            ("update.proj_pred.b", &mut self.proj_pred.b),
            ("update.proj_obs.w", self.proj_obs.w.data_mut()),
            ("update.proj_obs.b", &mut self.proj_obs.b),
            ("update.proj_conf.w", self.proj_conf.w.data_mut()),
            ("update.proj_conf.b", &mut self.proj_conf.b),
            ("update.cell.w_ih", self.update_cell.w_ih.data_mut()),
            ("update.cell.w_hh", self.update_cell.w_hh.data_mut()),
            ("update.cell.b", &mut self.update_cell.b),
            ("update.out.w", self.update_out.w.data_mut()),
            ("update.out.b", &mut self.update_out.b),
        ]
    }

    pub fn param_count(&self) -> usize {
        self.tensors().iter().map(|(_, d)| d.len()).sum()
    }
}

/// Per-track recurrent state: hidden/cell vectors of both networks and
/// the ring buffer of the last five refined velocities (zero-filled
/// while the track is young).
#[derive(Debug, Clone, PartialEq)]
pub struct LstmState {
    pub h_pred: Vec<f64>,
    pub c_pred: Vec<f64>,
    pub h_update: Vec<f64>,
    pub c_update: Vec<f64>,
    buffer: [Velocity7; HISTORY_LEN],
}

impl LstmState {
    pub fn new(hidden: usize) -> Self {
        Self {
            h_pred: vec![0.0; hidden],
            c_pred: vec![0.0; hidden],
            h_update: vec![0.0; hidden],
            c_update: vec![0.0; hidden],
            buffer: [Velocity7::zero(); HISTORY_LEN],
        }
    }

    /// Buffered velocities, oldest first.
    pub fn velocity_buffer(&self) -> &[Velocity7; HISTORY_LEN] {
        &self.buffer
    }

    /// Pushes the newest velocity, evicting the oldest slot.
    pub fn push_velocity(&mut self, v: Velocity7) {
        self.buffer.rotate_left(1);
        self.buffer[HISTORY_LEN - 1] = v;
    }
}

/// Extrapolates the next velocity: the five buffered velocities are
/// projected and consumed as a rollout continuing from the stored
/// hidden state, which is advanced as a side effect.
pub fn lstm_predict(state: &mut LstmState, weights: &LstmWeights) -> Velocity7 {
    let mut h = state.h_pred.clone();
    let mut c = state.c_pred.clone();
    for v in state.buffer.iter() {
        let u = weights.proj_hist.forward(&v.0);
        let (h_new, c_new, _) = weights.pred_cell.step(&u, &h, &c);
        h = h_new;
        c = c_new;
    }
    let out = weights.pred_out.forward(&h);
    state.h_pred = h;
    state.c_pred = c;
    let mut v = [0.0; VEL_DIM];
    v.copy_from_slice(&out);
    Velocity7(v)
}

/// Refines the predicted velocity from the observation: one update-LSTM
/// step over the concatenated projections of `(v̂, v′, confidence)`.
/// The refined velocity is pushed into the velocity buffer.
pub fn lstm_update(
    state: &mut LstmState,
    predicted: Velocity7,
    observed: Velocity7,
    confidence: f64,
    weights: &LstmWeights,
) -> Velocity7 {
    let mut u = Vec::with_capacity(UPDATE_IN_DIM);
    u.extend(weights.proj_pred.forward(&predicted.0));
    u.extend(weights.proj_obs.forward(&observed.0));
    u.extend(weights.proj_conf.forward(&[confidence]));
    let (h, c, _) = weights
        .update_cell
        .step(&u, &state.h_update, &state.c_update);
    let out = weights.update_out.forward(&h);
    state.h_update = h;
    state.c_update = c;
    let mut v = [0.0; VEL_DIM];
    v.copy_from_slice(&out);
    let refined = Velocity7(v);
    state.push_velocity(refined);
    refined
}

// ---------------------------------------------------------------------------
// Cached forward / backward (training)
// ---------------------------------------------------------------------------

/// Forward record of one prediction rollout.
pub struct PredictCache {
    inputs: [[f64; VEL_DIM]; HISTORY_LEN],
    steps: Vec<StepCache>,
    h_final: Vec<f64>,
}

/// Forward record of one update step.
pub struct UpdateCache {
    predicted: [f64; VEL_DIM],
    observed: [f64; VEL_DIM],
    confidence: f64,
    u: Vec<f64>,
    step: StepCache,
    h_out: Vec<f64>,
}

/// [`lstm_predict`] with explicit state vectors and a cache. `h`/`c`
/// are advanced in place.
pub fn lstm_predict_cached(
    buffer: &[Velocity7; HISTORY_LEN],
    h: &mut Vec<f64>,
    c: &mut Vec<f64>,
    weights: &LstmWeights,
) -> (Velocity7, PredictCache) {
    let mut steps = Vec::with_capacity(HISTORY_LEN);
    let mut inputs = [[0.0; VEL_DIM]; HISTORY_LEN];
    for (s, v) in buffer.iter().enumerate() {
        inputs[s] = v.0;
        let u = weights.proj_hist.forward(&v.0);
        let (h_new, c_new, cache) = weights.pred_cell.step(&u, h, c);
        *h = h_new;
        *c = c_new;
        steps.push(cache);
    }
    let out = weights.pred_out.forward(h);
    let mut v = [0.0; VEL_DIM];
    v.copy_from_slice(&out);
    let cache = PredictCache {
        inputs,
        steps,
        h_final: h.clone(),
    };
    (Velocity7(v), cache)
}

/// Backward through one prediction rollout. Takes gradients on the
/// predicted velocity and on the outgoing hidden state; returns the
/// gradients on the five buffered velocities and on the incoming
/// hidden state. Weight gradients accumulate into `grads`.
pub fn lstm_predict_backward(
    cache: &PredictCache,
    weights: &LstmWeights,
    d_velocity: &[f64; VEL_DIM],
    d_h_out: &[f64],
    d_c_out: &[f64],
    grads: &mut LstmWeights,
) -> ([[f64; VEL_DIM]; HISTORY_LEN], Vec<f64>, Vec<f64>) {
    let mut dh = weights
        .pred_out
        .backward(&cache.h_final, d_velocity, &mut grads.pred_out);
    for (a, b) in dh.iter_mut().zip(d_h_out.iter()) {
        *a += b;
    }
    let mut dc = d_c_out.to_vec();
    let mut d_inputs = [[0.0; VEL_DIM]; HISTORY_LEN];
    for s in (0..HISTORY_LEN).rev() {
        let (du, dh_prev, dc_prev) =
            weights
                .pred_cell
                .backward(&cache.steps[s], &dh, &dc, &mut grads.pred_cell);
        let d_in = weights
            .proj_hist
            .backward(&cache.inputs[s], &du, &mut grads.proj_hist);
        d_inputs[s].copy_from_slice(&d_in);
        dh = dh_prev;
        dc = dc_prev;
    }
    (d_inputs, dh, dc)
}

/// [`lstm_update`] with explicit state vectors and a cache. Does not
/// touch any velocity buffer; the trainer owns that bookkeeping.
pub fn lstm_update_cached(
    predicted: Velocity7,
    observed: Velocity7,
    confidence: f64,
    h: &mut Vec<f64>,
    c: &mut Vec<f64>,
    weights: &LstmWeights,
) -> (Velocity7, UpdateCache) {
    let mut u = Vec::with_capacity(UPDATE_IN_DIM);
    u.extend(weights.proj_pred.forward(&predicted.0));
    u.extend(weights.proj_obs.forward(&observed.0));
    u.extend(weights.proj_conf.forward(&[confidence]));
    let (h_new, c_new, step) = weights.update_cell.step(&u, h, c);
    *h = h_new.clone();
    *c = c_new;
    let out = weights.update_out.forward(h);
    let mut v = [0.0; VEL_DIM];
    v.copy_from_slice(&out);
    let cache = UpdateCache {
        predicted: predicted.0,
        observed: observed.0,
        confidence,
        u,
        step,
        h_out: h_new,
    };
    (Velocity7(v), cache)
}

/// Backward through one update step. Returns gradients on the predicted
/// velocity, the observed velocity and the incoming hidden state.
#[allow(clippy::too_many_arguments)]
pub fn lstm_update_backward(
    cache: &UpdateCache,
    weights: &LstmWeights,
    d_velocity: &[f64; VEL_DIM],
    d_h_out: &[f64],
    d_c_out: &[f64],
    grads: &mut LstmWeights,
) -> ([f64; VEL_DIM], [f64; VEL_DIM], Vec<f64>, Vec<f64>) {
    let mut dh = weights
        .update_out
        .backward(&cache.h_out, d_velocity, &mut grads.update_out);
    for (a, b) in dh.iter_mut().zip(d_h_out.iter()) {
        *a += b;
    }
    let (du, dh_prev, dc_prev) =
        weights
            .update_cell
            .backward(&cache.step, &dh, d_c_out, &mut grads.update_cell);
    debug_assert_eq!(cache.u.len(), UPDATE_IN_DIM);
    let d_pred_u = &du[..PROJ_DIM];
    let d_obs_u = &du[PROJ_DIM..2 * PROJ_DIM];
    let d_conf_u = &du[2 * PROJ_DIM..];
    let d_pred = weights
        .proj_pred
        .backward(&cache.predicted, d_pred_u, &mut grads.proj_pred);
    let d_obs = weights
        .proj_obs
        .backward(&cache.observed, d_obs_u, &mut grads.proj_obs);
    // Confidence is data; its gradient is discarded, but the projection
    // weights still learn.
    let _ = weights
        .proj_conf
        .backward(&[cache.confidence], d_conf_u, &mut grads.proj_conf);
    let mut dp = [0.0; VEL_DIM];
    dp.copy_from_slice(&d_pred);
    let mut dob = [0.0; VEL_DIM];
    dob.copy_from_slice(&d_obs);
    (dp, dob, dh_prev, dc_prev)
}

// ---------------------------------------------------------------------------
// KF3D
// ---------------------------------------------------------------------------

const KF_DIM: usize = 11;
const OBS_DIM: usize = 7;

/// Process/measurement noise configuration. Engineering defaults, not
/// tuned to any dataset.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default, deny_unknown_fields))]
pub struct KfConfig {
    /// Process noise on the 7 pose/extent components.
    pub q_pose: f64,
    /// Process noise on the 4 velocity components.
    pub q_vel: f64,
    /// Base measurement noise on positions and extents.
    pub r_pos: f64,
    /// Base measurement noise on yaw.
    pub r_theta: f64,
    /// Initial variance on pose/extent components.
    pub p0_pose: f64,
    /// Initial variance on velocity components.
    pub p0_vel: f64,
    /// Floor added to `1 − confidence` when scaling measurement noise.
    pub confidence_floor: f64,
}

impl Default for KfConfig {
    fn default() -> Self {
        Self {
            q_pose: 0.01,
            q_vel: 0.1,
            r_pos: 0.5,
            r_theta: 0.1,
            p0_pose: 1.0,
            p0_vel: 10.0,
            confidence_floor: 0.01,
        }
    }
}

/// Kalman state: mean `[x, y, z, θ, l, w, h, ẋ, ẏ, ż, θ̇]` and its
/// covariance.
#[derive(Debug, Clone, PartialEq)]
pub struct KfState {
    pub mean: [f64; KF_DIM],
    pub cov: [[f64; KF_DIM]; KF_DIM],
    pub config: KfConfig,
}

impl KfState {
    /// Initializes from a detection box with zero velocity.
    pub fn from_box(b: &Box3D, config: KfConfig) -> Self {
        let arr = b.to_array();
        let mut mean = [0.0; KF_DIM];
        mean[..OBS_DIM].copy_from_slice(&arr);
        let mut cov = [[0.0; KF_DIM]; KF_DIM];
        for (i, row) in cov.iter_mut().enumerate() {
            row[i] = if i < OBS_DIM {
                config.p0_pose
            } else {
                config.p0_vel
            };
        }
        Self { mean, cov, config }
    }

    pub fn state_box(&self) -> Box3D {
        let mut s = [0.0; 7];
        s.copy_from_slice(&self.mean[..OBS_DIM]);
        box_from_state(&s)
    }
}

/// Constant-velocity prediction: `(x, y, z, θ)` advance by their
/// velocities, extents random-walk, covariance picks up `Q`.
pub fn kf_predict(state: &KfState) -> KfState {
    let mut mean = state.mean;
    mean[0] += mean[7];
    mean[1] += mean[8];
    mean[2] += mean[9];
    mean[3] = wrap_angle(mean[3] + mean[10]);

    // F is identity plus the four position-velocity couplings; compute
    // F P Fᵀ directly from those.
    let couple = [(0usize, 7usize), (1, 8), (2, 9), (3, 10)];
    let mut cov = state.cov;
    // P ← F P: row[pos] += row[vel]
    for &(pos, vel) in &couple {
        for j in 0..KF_DIM {
            cov[pos][j] += cov[vel][j];
        }
    }
    // P ← P Fᵀ: col[pos] += col[vel]
    for &(pos, vel) in &couple {
        for row in cov.iter_mut() {
            row[pos] += row[vel];
        }
    }
    for i in 0..KF_DIM {
        cov[i][i] += if i < OBS_DIM {
            state.config.q_pose
        } else {
            state.config.q_vel
        };
    }
    KfState {
        mean,
        cov,
        config: state.config,
    }
}

/// Solves `S x = b` for symmetric positive-definite `S` via Gaussian
/// elimination with partial pivoting.
fn solve7(
    s: &[[f64; OBS_DIM]; OBS_DIM],
    b: &[[f64; OBS_DIM]; KF_DIM],
) -> Option<[[f64; OBS_DIM]; KF_DIM]> {
    // Augment S with the transposed right-hand sides: we solve
    // S X = Bᵀ where B is (11×7); X is (7×11).
    let mut a = [[0.0; OBS_DIM + KF_DIM]; OBS_DIM];
    for i in 0..OBS_DIM {
        a[i][..OBS_DIM].copy_from_slice(&s[i]);
        for j in 0..KF_DIM {
            a[i][OBS_DIM + j] = b[j][i];
        }
    }
    for col in 0..OBS_DIM {
        let mut pivot = col;
        for row in col + 1..OBS_DIM {
            if math::abs(a[row][col]) > math::abs(a[pivot][col]) {
                pivot = row;
            }
        }
        if math::abs(a[pivot][col]) < 1e-12 {
            return None;
        }
        a.swap(col, pivot);
        let inv = 1.0 / a[col][col];
        for j in col..OBS_DIM + KF_DIM {
            a[col][j] *= inv;
        }
        for row in 0..OBS_DIM {
            if row != col {
                let factor = a[row][col];
                if factor != 0.0 {
                    for j in col..OBS_DIM + KF_DIM {
                        a[row][j] -= factor * a[col][j];
                    }
                }
            }
        }
    }
    let mut x = [[0.0; OBS_DIM]; KF_DIM];
    for i in 0..OBS_DIM {
        for j in 0..KF_DIM {
            x[j][i] = a[i][OBS_DIM + j];
        }
    }
    Some(x)
}

/// Measurement update with the 7 box components observed. The yaw
/// innovation is wrapped; measurement noise scales with
/// `1 − confidence + floor` so confident detections correct harder.
/// Covariance is propagated in Joseph form and re-symmetrized; if it
/// still loses positive definiteness a structured error is returned.
pub fn kf_update(
    state: &KfState,
    observation: &Box3D,
    confidence: f64,
) -> Result<KfState, MotionError> {
    let cfg = state.config;
    let scale = (1.0 - confidence).max(0.0) + cfg.confidence_floor;
    let mut r = [0.0; OBS_DIM];
    for (i, v) in r.iter_mut().enumerate() {
        *v = if i == 3 { cfg.r_theta } else { cfg.r_pos } * scale;
    }

    // S = H P Hᵀ + R is the top-left 7×7 block of P plus R.
    let mut s = [[0.0; OBS_DIM]; OBS_DIM];
    for i in 0..OBS_DIM {
        for j in 0..OBS_DIM {
            s[i][j] = state.cov[i][j];
        }
        s[i][i] += r[i];
    }
    // P Hᵀ is the left 11×7 block of P.
    let mut pht = [[0.0; OBS_DIM]; KF_DIM];
    for i in 0..KF_DIM {
        pht[i][..OBS_DIM].copy_from_slice(&state.cov[i][..OBS_DIM]);
    }
    // K = P Hᵀ S⁻¹, computed by solving S Kᵀ = (P Hᵀ)ᵀ.
    let k = solve7(&s, &pht).ok_or(MotionError::CovarianceNotPd {
        index: 0,
        value: 0.0,
    })?;

    let z = observation.to_array();
    let mut innovation = [0.0; OBS_DIM];
    for i in 0..OBS_DIM {
        innovation[i] = z[i] - state.mean[i];
    }
    innovation[3] = wrap_angle(innovation[3]);

    let mut mean = state.mean;
    for i in 0..KF_DIM {
        for j in 0..OBS_DIM {
            mean[i] += k[i][j] * innovation[j];
        }
    }
    mean[3] = wrap_angle(mean[3]);

    // Joseph form: (I − K H) P (I − K H)ᵀ + K R Kᵀ.
    let mut ikh = [[0.0; KF_DIM]; KF_DIM];
    for (i, row) in ikh.iter_mut().enumerate() {
        row[i] = 1.0;
        for j in 0..OBS_DIM {
            row[j] -= k[i][j];
        }
    }
    let mut tmp = [[0.0; KF_DIM]; KF_DIM];
    for i in 0..KF_DIM {
        for j in 0..KF_DIM {
            let mut acc = 0.0;
            for (m, row) in state.cov.iter().enumerate() {
                acc += ikh[i][m] * row[j];
            }
            tmp[i][j] = acc;
        }
    }
    let mut cov = [[0.0; KF_DIM]; KF_DIM];
    for i in 0..KF_DIM {
        for j in 0..KF_DIM {
            let mut acc = 0.0;
            for m in 0..KF_DIM {
                acc += tmp[i][m] * ikh[j][m];
            }
            for (o, rv) in r.iter().enumerate() {
                acc += k[i][o] * rv * k[j][o];
            }
            cov[i][j] = acc;
        }
    }
    // Re-symmetrize against numerical drift.
    for i in 0..KF_DIM {
        for j in i + 1..KF_DIM {
            let v = 0.5 * (cov[i][j] + cov[j][i]);
            cov[i][j] = v;
            cov[j][i] = v;
        }
    }
    for (i, row) in cov.iter().enumerate() {
        if !(row[i] > 0.0) {
            return Err(MotionError::CovarianceNotPd {
                index: i,
                value: row[i],
            });
        }
    }
    Ok(KfState {
        mean,
        cov,
        config: cfg,
    })
}
