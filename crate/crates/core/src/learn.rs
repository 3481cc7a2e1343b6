//! Truncated dynamic back-propagation through time.
//!
//! The learner works on a [`Snapshot`] of the last `W` propagation records.
//! With records `τ = 0..W` (oldest first) the back-propagated costs are
//!
//! ```text
//! Z_j(τ) = Σ_k Z_k(τ+1) S_k f'(x_k(τ)) w_jk  +  ε_j(τ) dt  +  Z_j(τ+1) (1 - S_j)
//! ```
//!
//! with `Z(W) = 0`, the middle term only on output neurons and the last term
//! only on neurons with dynamics (inputs are clamped). Gradients follow from
//! the dependence of `y(τ)` on the parameters through the step `τ-1 -> τ`:
//!
//! ```text
//! dE/dw_jk = S_k   Σ_τ Z_k(τ) f'(x_k(τ-1)) y_j(τ-1)
//! dE/db_j  = S_j   Σ_τ Z_j(τ) f'(x_j(τ-1))
//! dE/dT_j  = -S_j²/dt Σ_τ Z_j(τ) (f(x_j(τ-1)) - y_j(τ-1))
//! ```
//!
//! summed over `τ = 1..W`; the oldest record only contributes as a
//! predecessor. The `dt` of the cost integral is carried by the `ε dt` term,
//! so these are the exact derivatives of `E = Σ_τ Σ_j e_j(τ) dt` over the
//! window when the window starts at a parameter-independent state.

use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::ctrnn::{Network, ParamId, Record, StateHistory};
use crate::tally::Tally;
use crate::{Error, Result, Scalar};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct LearningConfig<T> {
    /// Gradient step.
    pub eta: T,
    /// Number of records back-propagated through.
    pub window: usize,
    /// Upper clamp for time constants (seconds).
    pub t_max: T,
}

impl<T: Scalar> Default for LearningConfig<T> {
    fn default() -> Self {
        LearningConfig {
            eta: T::from_f64_lossy(0.001),
            window: 10,
            t_max: T::from_f64_lossy(10.0),
        }
    }
}

impl<T: Scalar> LearningConfig<T> {
    pub fn validate(&self) -> Result<()> {
        if self.window == 0 {
            return Err(Error::Config("learning window must be at least 1".into()));
        }
        if !(self.eta >= T::zero()) || !self.eta.is_finite() {
            return Err(Error::Config("eta must be finite and non-negative".into()));
        }
        if !(self.t_max > T::zero()) {
            return Err(Error::Config("t_max must be positive".into()));
        }
        Ok(())
    }
}

/// Frozen copy of the recent history together with the parameters that were
/// live when it was taken.
#[derive(Clone, Debug, PartialEq)]
pub struct Snapshot<T> {
    records: Vec<Record<T>>,
    network: Network<T>,
    taken_at_step: u64,
}

impl<T: Scalar> Snapshot<T> {
    pub fn records(&self) -> &[Record<T>] {
        &self.records
    }

    pub fn network(&self) -> &Network<T> {
        &self.network
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Step index of the newest record.
    pub fn taken_at_step(&self) -> u64 {
        self.taken_at_step
    }

    /// Outputs of the output neurons in every record, oldest first.
    pub fn outputs(&self) -> Vec<Vec<T>> {
        let range = self.network.topology().output_range();
        self.records.iter().map(|r| r.y[range.clone()].to_vec()).collect()
    }

    /// Error signals stored in the records.
    pub fn recorded_errors(&self) -> Vec<Vec<T>> {
        self.records.iter().map(|r| r.errors.clone()).collect()
    }
}

/// Deep copy of the whole history (`take_snapshot`).
pub fn take_snapshot<T: Scalar>(history: &StateHistory<T>, net: &Network<T>) -> Result<Snapshot<T>> {
    take_window(history, net, history.capacity())
}

/// Deep copy of at most the `window` newest records.
pub fn take_window<T: Scalar>(history: &StateHistory<T>, net: &Network<T>, window: usize) -> Result<Snapshot<T>> {
    let latest = history.latest().ok_or(Error::NotReady("history is empty"))?;
    let taken_at_step = latest.step;
    let mut records = history.to_vec();
    if records.len() > window {
        records.drain(..records.len() - window);
    }
    Ok(Snapshot {
        records,
        network: net.clone(),
        taken_at_step,
    })
}

/// `Z[τ][j] = ∂E/∂y_j(τ)` over a snapshot window.
#[derive(Clone, Debug, PartialEq)]
pub struct BackpropCosts<T> {
    n: usize,
    z: Vec<T>,
}

impl<T: Scalar> BackpropCosts<T> {
    pub fn len(&self) -> usize {
        if self.n == 0 {
            0
        } else {
            self.z.len() / self.n
        }
    }

    pub fn is_empty(&self) -> bool {
        self.z.is_empty()
    }

    pub fn get(&self, tau: usize, j: usize) -> T {
        self.z[tau * self.n + j]
    }

    pub fn row(&self, tau: usize) -> &[T] {
        &self.z[tau * self.n..(tau + 1) * self.n]
    }

    pub fn as_slice(&self) -> &[T] {
        &self.z
    }
}

/// Back-propagated costs for per-step, per-output error signals `errors[τ][k]`.
/// Rows are indexed like `snap.records()`; each row has one entry per output
/// neuron, so hidden neurons cannot receive a direct error.
pub fn compute_backprop_costs<T: Scalar>(snap: &Snapshot<T>, errors: &[Vec<T>]) -> Result<BackpropCosts<T>> {
    compute_backprop_costs_tallied(snap, errors, &mut ())
}

pub fn compute_backprop_costs_tallied<T: Scalar>(
    snap: &Snapshot<T>,
    errors: &[Vec<T>],
    tally: &mut impl Tally,
) -> Result<BackpropCosts<T>> {
    let net = &snap.network;
    let topo = *net.topology();
    let n = topo.n();
    let n_in = topo.n_in;
    let w_len = snap.records.len();
    if errors.len() != w_len {
        return Err(Error::shape("error window", w_len, errors.len()));
    }
    if let Some(row) = errors.iter().find(|r| r.len() != topo.n_out) {
        return Err(Error::shape("error row", topo.n_out, row.len()));
    }
    let dt = net.dt();
    let act = net.activation();
    let scales: Vec<T> = (0..n).map(|j| net.scale(j)).collect();
    let weights = net.weights();

    let mut z = vec![T::zero(); w_len * n];
    // S_k f'(x_k(τ)) for the step leaving record τ
    let mut gain = vec![T::zero(); n];
    let out_start = topo.output_neuron(0);
    for tau in (0..w_len).rev() {
        let (head, tail) = z.split_at_mut((tau + 1) * n);
        let row = &mut head[tau * n..];
        let next = if tau + 1 < w_len { Some(&tail[..n]) } else { None };
        if let Some(next) = next {
            let x = &snap.records[tau].x;
            for k in n_in..n {
                gain[k] = scales[k] * act.derivative(x[k]);
            }
            tally.add((n - n_in) as u64);
            for j in 0..n {
                let mut acc = T::zero();
                let mut macs = 0;
                for k in n_in..n {
                    if topo.allows(j, k) {
                        acc += next[k] * gain[k] * weights[j * n + k];
                        macs += 1;
                    }
                }
                if j >= n_in {
                    acc += next[j] * (T::one() - scales[j]);
                    macs += 1;
                }
                row[j] = acc;
                tally.add(macs);
            }
        }
        for (k, &e) in errors[tau].iter().enumerate() {
            row[out_start + k] += e * dt;
        }
        tally.add(topo.n_out as u64);
    }
    Ok(BackpropCosts { n, z })
}

/// Accumulated gradients of the window cost with respect to every parameter.
#[derive(Clone, Debug, PartialEq)]
pub struct Gradients<T> {
    n: usize,
    pub d_weights: Vec<T>,
    pub d_biases: Vec<T>,
    pub d_time_constants: Vec<T>,
}

impl<T: Scalar> Gradients<T> {
    pub fn zeros(n: usize) -> Self {
        Gradients {
            n,
            d_weights: vec![T::zero(); n * n],
            d_biases: vec![T::zero(); n],
            d_time_constants: vec![T::zero(); n],
        }
    }

    pub fn get(&self, id: ParamId) -> T {
        match id {
            ParamId::Weight { from, to } => self.d_weights[from * self.n + to],
            ParamId::Bias(j) => self.d_biases[j],
            ParamId::TimeConstant(j) => self.d_time_constants[j],
        }
    }

    pub fn weight(&self, from: usize, to: usize) -> T {
        self.d_weights[from * self.n + to]
    }

    pub fn is_finite(&self) -> bool {
        self.first_non_finite().is_none()
    }

    fn first_non_finite(&self) -> Option<&'static str> {
        if self.d_weights.iter().any(|v| !v.is_finite()) {
            Some("weights")
        } else if self.d_biases.iter().any(|v| !v.is_finite()) {
            Some("biases")
        } else if self.d_time_constants.iter().any(|v| !v.is_finite()) {
            Some("time constants")
        } else {
            None
        }
    }

    pub fn norm(&self) -> T {
        self.d_weights
            .iter()
            .chain(&self.d_biases)
            .chain(&self.d_time_constants)
            .fold(T::zero(), |acc, &v| acc + v * v)
            .sqrt()
    }
}

pub fn compute_gradients<T: Scalar>(snap: &Snapshot<T>, costs: &BackpropCosts<T>) -> Result<Gradients<T>> {
    compute_gradients_tallied(snap, costs, &mut ())
}

pub fn compute_gradients_tallied<T: Scalar>(
    snap: &Snapshot<T>,
    costs: &BackpropCosts<T>,
    tally: &mut impl Tally,
) -> Result<Gradients<T>> {
    let net = &snap.network;
    let topo = *net.topology();
    let n = topo.n();
    if costs.n != n || costs.len() != snap.records.len() {
        return Err(Error::shape("backprop costs rows", snap.records.len(), costs.len()));
    }
    let act = net.activation();
    let dt = net.dt();
    let mut g = Gradients::zeros(n);
    let mut dt_acc = vec![T::zero(); n];
    for tau in 1..snap.records.len() {
        let prev = &snap.records[tau - 1];
        let z = costs.row(tau);
        for k in topo.n_in..n {
            let fx = act.apply(prev.x[k]);
            let common = z[k] * net.scale(k) * act.derivative_from_output(fx);
            g.d_biases[k] += common;
            let mut macs = 3;
            for j in 0..n {
                if topo.allows(j, k) {
                    g.d_weights[j * n + k] += common * prev.y[j];
                    macs += 1;
                }
            }
            dt_acc[k] += z[k] * (fx - prev.y[k]);
            tally.add(macs);
        }
    }
    for k in topo.n_in..n {
        let s = net.scale(k);
        g.d_time_constants[k] = -(s * s) / dt * dt_acc[k];
    }
    Ok(g)
}

/// Gradient step on a copy of `net`. Rejects non-finite gradients without
/// touching the network.
pub fn apply_update<T: Scalar>(net: &Network<T>, g: &Gradients<T>, cfg: &LearningConfig<T>) -> Result<Network<T>> {
    if let Some(what) = g.first_non_finite() {
        return Err(Error::NonFiniteGradient(what));
    }
    let topo = *net.topology();
    let n = topo.n();
    if g.n != n {
        return Err(Error::shape("gradient size", n, g.n));
    }
    let dt = net.dt();
    let eta = cfg.eta;
    let mut out = net.clone();
    let (w, b, tc) = out.raw_parts_mut();
    for i in 0..n {
        for j in topo.n_in..n {
            if topo.allows(i, j) {
                w[i * n + j] -= eta * g.d_weights[i * n + j];
            }
        }
    }
    for j in topo.n_in..n {
        b[j] -= eta * g.d_biases[j];
        tc[j] = crate::ctrnn::clamp_time_constant(tc[j] - eta * g.d_time_constants[j], dt, cfg.t_max);
    }
    Ok(out)
}

/// Supplies per-step output error signals for a snapshot.
pub trait ErrorProvider<T> {
    fn output_errors(&mut self, snap: &Snapshot<T>) -> Result<Vec<Vec<T>>>;
}

/// Uses the error signals stored in the records at propagation time.
#[derive(Clone, Copy, Debug, Default)]
pub struct RecordedErrors;

impl<T: Scalar> ErrorProvider<T> for RecordedErrors {
    fn output_errors(&mut self, snap: &Snapshot<T>) -> Result<Vec<Vec<T>>> {
        Ok(snap.recorded_errors())
    }
}

/// Supervised quadratic error against targets indexed by step.
pub struct Supervised<F>(pub F);

impl<T, F> ErrorProvider<T> for Supervised<F>
where
    T: Scalar,
    F: FnMut(u64) -> Vec<T>,
{
    fn output_errors(&mut self, snap: &Snapshot<T>) -> Result<Vec<Vec<T>>> {
        let outputs = snap.outputs();
        snap.records
            .iter()
            .zip(outputs)
            .map(|(r, y)| {
                let d = (self.0)(r.step);
                crate::balance::supervised_error_signals(&y, &d).map(|(_, eps)| eps)
            })
            .collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum LearnStage {
    /// Snapshot ("temporal photograph").
    A,
    /// Back-propagated costs.
    B,
    /// Gradients.
    C,
    /// Parameter write.
    D,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StageTiming {
    pub stage: LearnStage,
    pub elapsed: Duration,
}

#[derive(Clone, Debug)]
pub struct LearnOutcome<T> {
    pub network: Network<T>,
    pub gradients: Gradients<T>,
    pub stages: Vec<StageTiming>,
}

/// Snapshot, costs, gradients, update, in that order.
pub fn learn_iteration<T: Scalar>(
    history: &StateHistory<T>,
    net: &Network<T>,
    provider: &mut impl ErrorProvider<T>,
    cfg: &LearningConfig<T>,
) -> Result<LearnOutcome<T>> {
    cfg.validate()?;
    let mut stages = Vec::with_capacity(4);
    let mut timed = |stage, start: Instant| stages.push(StageTiming { stage, elapsed: start.elapsed() });

    let t = Instant::now();
    let snap = take_window(history, net, cfg.window)?;
    timed(LearnStage::A, t);

    let t = Instant::now();
    let errors = provider.output_errors(&snap)?;
    let costs = compute_backprop_costs(&snap, &errors)?;
    timed(LearnStage::B, t);

    let t = Instant::now();
    let gradients = compute_gradients(&snap, &costs)?;
    timed(LearnStage::C, t);

    let t = Instant::now();
    let network = apply_update(net, &gradients, cfg)?;
    timed(LearnStage::D, t);

    Ok(LearnOutcome {
        network,
        gradients,
        stages,
    })
}
