use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{Activation, NetState, Record, Topology};
use crate::tally::Tally;
use crate::{Error, Result, Scalar};

/// Ranges used to draw a fresh network.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct NetworkInit {
    pub weight_range: [f64; 2],
    /// Time constants are drawn from this range intersected with `[dt, ..]`.
    pub time_constant_range: [f64; 2],
    pub seed: u64,
}

impl Default for NetworkInit {
    fn default() -> Self {
        NetworkInit {
            weight_range: [-5.0, 5.0],
            time_constant_range: [0.0, 1.0],
            seed: 0,
        }
    }
}

/// Addresses a single trainable parameter.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ParamId {
    Weight { from: usize, to: usize },
    Bias(usize),
    TimeConstant(usize),
}

impl ParamId {
    pub fn kind(&self) -> &'static str {
        match self {
            ParamId::Weight { .. } => "weight",
            ParamId::Bias(_) => "bias",
            ParamId::TimeConstant(_) => "time_constant",
        }
    }

    /// `(i, j)` coordinates used in reports; vectors report `j = 0`.
    pub fn coords(&self) -> (usize, usize) {
        match *self {
            ParamId::Weight { from, to } => (from, to),
            ParamId::Bias(j) | ParamId::TimeConstant(j) => (j, 0),
        }
    }
}

/// A CTRNN advanced by explicit Euler steps of length `dt`.
///
/// `weights[i * n + j]` is the connection from neuron `i` to neuron `j`.
#[derive(Clone, Debug, PartialEq)]
pub struct Network<T> {
    topology: Topology,
    dt: T,
    activation: Activation,
    weights: Vec<T>,
    biases: Vec<T>,
    time_constants: Vec<T>,
}

impl<T: Scalar> Network<T> {
    /// Zero weights and biases, every time constant equal to `dt` (S = 1).
    pub fn zeros(topology: Topology, dt: T, activation: Activation) -> Result<Self> {
        topology.validate()?;
        if !(dt > T::zero()) || !dt.is_finite() {
            return Err(Error::Config("dt must be positive and finite".into()));
        }
        let n = topology.n();
        Ok(Network {
            topology,
            dt,
            activation,
            weights: vec![T::zero(); n * n],
            biases: vec![T::zero(); n],
            time_constants: vec![dt; n],
        })
    }

    /// Draw weights uniformly from `init.weight_range` on every allowed
    /// connection, time constants uniformly from `init.time_constant_range`
    /// raised to at least `dt`, biases zero.
    pub fn random(topology: Topology, dt: T, activation: Activation, init: &NetworkInit) -> Result<Self> {
        let [w_lo, w_hi] = init.weight_range;
        let [t_lo, t_hi] = init.time_constant_range;
        if !(w_lo <= w_hi) || !(t_lo <= t_hi) {
            return Err(Error::Config("init range with lower bound above upper bound".into()));
        }
        let mut net = Self::zeros(topology, dt, activation)?;
        let dt64 = dt.to_f64_lossy();
        if t_hi < dt64 {
            return Err(Error::Config(format!(
                "time constant range [{t_lo}, {t_hi}] lies below dt = {dt64}"
            )));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(init.seed);
        let n = topology.n();
        for i in 0..n {
            for j in 0..n {
                if topology.allows(i, j) {
                    net.weights[i * n + j] = T::from_f64_lossy(uniform(&mut rng, w_lo, w_hi));
                }
            }
        }
        let t_lo = t_lo.max(dt64);
        for j in topology.n_in..n {
            let tc = T::from_f64_lossy(uniform(&mut rng, t_lo, t_hi));
            net.time_constants[j] = tc.max(dt);
        }
        Ok(net)
    }

    pub fn topology(&self) -> &Topology {
        &self.topology
    }

    pub fn n(&self) -> usize {
        self.topology.n()
    }

    pub fn dt(&self) -> T {
        self.dt
    }

    pub fn activation(&self) -> Activation {
        self.activation
    }

    pub fn weights(&self) -> &[T] {
        &self.weights
    }

    pub fn biases(&self) -> &[T] {
        &self.biases
    }

    pub fn time_constants(&self) -> &[T] {
        &self.time_constants
    }

    pub fn weight(&self, from: usize, to: usize) -> T {
        self.weights[from * self.n() + to]
    }

    pub fn set_weight(&mut self, from: usize, to: usize, w: T) -> Result<()> {
        if !self.topology.allows(from, to) {
            return Err(Error::Config(format!("connection {from} -> {to} is not in the topology")));
        }
        let n = self.n();
        self.weights[from * n + to] = w;
        Ok(())
    }

    pub fn bias(&self, j: usize) -> T {
        self.biases[j]
    }

    pub fn set_bias(&mut self, j: usize, b: T) {
        self.biases[j] = b;
    }

    pub fn time_constant(&self, j: usize) -> T {
        self.time_constants[j]
    }

    /// Sets `T_j`, clamped to `[dt, t_max]`.
    pub fn set_time_constant(&mut self, j: usize, tc: T, t_max: T) {
        self.time_constants[j] = clamp_time_constant(tc, self.dt, t_max);
    }

    /// Scale parameter `S_j = dt / T_j`.
    pub fn scale(&self, j: usize) -> T {
        self.dt / self.time_constants[j]
    }

    /// Every trainable parameter in a fixed order: allowed weights row-major,
    /// then biases and time constants of the non-input neurons.
    pub fn param_ids(&self) -> Vec<ParamId> {
        let n = self.n();
        let mut ids = Vec::new();
        for from in 0..n {
            for to in 0..n {
                if self.topology.allows(from, to) {
                    ids.push(ParamId::Weight { from, to });
                }
            }
        }
        let receiving = self.topology.n_in..n;
        ids.extend(receiving.clone().map(ParamId::Bias));
        ids.extend(receiving.map(ParamId::TimeConstant));
        ids
    }

    pub fn param(&self, id: ParamId) -> T {
        match id {
            ParamId::Weight { from, to } => self.weight(from, to),
            ParamId::Bias(j) => self.biases[j],
            ParamId::TimeConstant(j) => self.time_constants[j],
        }
    }

    /// Writes a parameter without topology checks or clamping. Used to
    /// perturb parameters in finite-difference checks.
    pub fn set_param_raw(&mut self, id: ParamId, v: T) {
        let n = self.n();
        match id {
            ParamId::Weight { from, to } => self.weights[from * n + to] = v,
            ParamId::Bias(j) => self.biases[j] = v,
            ParamId::TimeConstant(j) => self.time_constants[j] = v,
        }
    }

    /// Euclidean distance between the parameter sets of two networks with the
    /// same topology.
    pub fn param_distance(&self, other: &Network<T>) -> T {
        let sq = |a: &[T], b: &[T]| {
            a.iter()
                .zip(b)
                .fold(T::zero(), |acc, (&x, &y)| acc + (x - y) * (x - y))
        };
        (sq(&self.weights, &other.weights)
            + sq(&self.biases, &other.biases)
            + sq(&self.time_constants, &other.time_constants))
        .sqrt()
    }

    /// `x_j = sum_i w[i][j] * y_prev[i] + b_j`.
    pub fn weighted_sum(&self, y_prev: &[T], j: usize) -> T {
        self.weighted_sum_tallied(y_prev, j, &mut ())
    }

    fn weighted_sum_tallied(&self, y_prev: &[T], j: usize, tally: &mut impl Tally) -> T {
        let n = self.n();
        let mut acc = self.biases[j];
        let mut macs = 0;
        for (i, &y) in y_prev.iter().enumerate().take(n) {
            if self.topology.allows(i, j) {
                acc += self.weights[i * n + j] * y;
                macs += 1;
            }
        }
        tally.add(macs);
        acc
    }

    /// One Euler step. Input neurons are clamped to `inputs`, then every other
    /// neuron moves by `y_j <- S_j f(x_j) + (1 - S_j) y_j` with `x_j` built from
    /// the clamped outputs. The returned record holds the pre-update outputs and
    /// the weighted sums that drove the update.
    pub fn propagate_step(&self, state: &NetState<T>, inputs: &[T]) -> Result<Step<T>> {
        self.propagate_step_tallied(state, inputs, &mut ())
    }

    pub fn propagate_step_tallied(
        &self,
        state: &NetState<T>,
        inputs: &[T],
        tally: &mut impl Tally,
    ) -> Result<Step<T>> {
        let n = self.n();
        let n_in = self.topology.n_in;
        if inputs.len() != n_in {
            return Err(Error::shape("network inputs", n_in, inputs.len()));
        }
        if state.y.len() != n {
            return Err(Error::shape("state outputs", n, state.y.len()));
        }
        if inputs.iter().any(|v| !v.is_finite()) {
            return Err(Error::NumericInput("network inputs"));
        }

        let mut y_now = state.y.clone();
        y_now[..n_in].copy_from_slice(inputs);

        let mut x = vec![T::zero(); n];
        let mut y_next = y_now.clone();
        for j in n_in..n {
            let xj = self.weighted_sum_tallied(&y_now, j, tally);
            let s = self.scale(j);
            x[j] = xj;
            y_next[j] = s * self.activation.apply(xj) + (T::one() - s) * y_now[j];
            tally.add(2);
        }

        let record = Record {
            step: state.step,
            x: x.clone(),
            y: y_now,
            inputs: inputs.to_vec(),
            errors: vec![T::zero(); self.topology.n_out],
        };
        Ok(Step {
            state: NetState {
                x,
                y: y_next,
                step: state.step + 1,
            },
            record,
        })
    }

    /// Outputs of the output neurons in `state`.
    pub fn outputs<'a>(&self, state: &'a NetState<T>) -> &'a [T] {
        &state.y[self.topology.output_range()]
    }

    pub fn to_doc(&self) -> NetworkDoc<T> {
        NetworkDoc {
            topology: self.topology,
            dt: self.dt,
            activation: self.activation,
            weights: self.weights.clone(),
            biases: self.biases.clone(),
            time_constants: self.time_constants.clone(),
        }
    }

    pub fn from_doc(doc: NetworkDoc<T>) -> Result<Self> {
        let mut net = Self::zeros(doc.topology, doc.dt, doc.activation)?;
        let n = net.n();
        if doc.weights.len() != n * n {
            return Err(Error::shape("weights", n * n, doc.weights.len()));
        }
        if doc.biases.len() != n {
            return Err(Error::shape("biases", n, doc.biases.len()));
        }
        if doc.time_constants.len() != n {
            return Err(Error::shape("time_constants", n, doc.time_constants.len()));
        }
        let all = doc.weights.iter().chain(&doc.biases).chain(&doc.time_constants);
        if all.into_iter().any(|v| !v.is_finite()) {
            return Err(Error::NumericInput("network document"));
        }
        for i in 0..n {
            for j in 0..n {
                if !doc.topology.allows(i, j) && doc.weights[i * n + j] != T::zero() {
                    return Err(Error::Config(format!(
                        "weight {i} -> {j} is outside the topology but non-zero"
                    )));
                }
            }
        }
        for j in doc.topology.n_in..n {
            if doc.time_constants[j] < doc.dt {
                return Err(Error::Config(format!("time constant of neuron {j} is below dt")));
            }
        }
        net.weights = doc.weights;
        net.biases = doc.biases;
        net.time_constants = doc.time_constants;
        Ok(net)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&self.to_doc())?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Self::from_doc(serde_json::from_str(s)?)
    }

    /// Mutable views of the weights, biases and time constants.
    pub(crate) fn raw_parts_mut(&mut self) -> (&mut [T], &mut [T], &mut [T]) {
        (&mut self.weights, &mut self.biases, &mut self.time_constants)
    }
}

/// Result of [`Network::propagate_step`].
#[derive(Clone, Debug, PartialEq)]
pub struct Step<T> {
    pub state: NetState<T>,
    pub record: Record<T>,
}

/// On-disk form of a network.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct NetworkDoc<T> {
    pub topology: Topology,
    pub dt: T,
    pub activation: Activation,
    /// Row-major `n x n`, entry `i * n + j` is the connection `i -> j`.
    pub weights: Vec<T>,
    pub biases: Vec<T>,
    pub time_constants: Vec<T>,
}

/// Clamps a time constant to `[dt, t_max]` so that `S = dt/T` stays in `(0, 1]`.
pub(crate) fn clamp_time_constant<T: Scalar>(v: T, dt: T, t_max: T) -> T {
    v.max(dt).min(t_max.max(dt))
}

fn uniform(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    if lo == hi {
        lo
    } else {
        rng.gen_range(lo..=hi)
    }
}
