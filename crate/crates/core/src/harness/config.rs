use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::ctrnn::{Activation, NetworkInit, Topology};
use crate::plant::{PerturbationScript, TorsoConfig};
use crate::sched::SchedConfig;
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Fidelity {
    /// The net acts instantly at its period.
    #[default]
    Logical,
    /// Actuation and parameter writes are delayed per the simulated schedule.
    Timed,
}

impl std::str::FromStr for Fidelity {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "logical" => Ok(Fidelity::Logical),
            "timed" => Ok(Fidelity::Timed),
            other => Err(Error::Config(format!("unknown mode {other:?}, expected logical or timed"))),
        }
    }
}

/// Full description of a balance run. Every field has a default, so `{}` is a
/// valid config file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub topology: Topology,
    pub init: NetworkInit,
    pub activation: Activation,
    /// Stage durations, task periods and the first learning request, ms. The
    /// network step `dt` is the propagation period.
    pub sched: SchedConfig,
    pub torso: TorsoConfig,
    pub learning_script: PerturbationScript,
    pub eval_script: PerturbationScript,
    /// Length of the learning phase, s. The evaluation script starts here.
    pub learning_duration_s: f64,
    /// Parameters are frozen from this time on. Defaults to the end of the
    /// learning phase.
    pub freeze_at_s: Option<f64>,
    /// Length of the evaluation phase, s.
    pub eval_duration_s: f64,
    pub eta: f64,
    pub window: usize,
    pub t_max: f64,
    /// Sign and gain of the force error signals.
    pub error_gain: f64,
    /// Force normalisation of the network inputs, N.
    pub force_scale: f64,
    pub seed: u64,
    pub mode: Fidelity,
    /// Also run the neutral-output baseline and report reductions.
    pub baseline: bool,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            topology: Topology::new(6, 5, 3, Default::default()).expect("valid default topology"),
            init: NetworkInit::default(),
            activation: Activation::Tanh,
            sched: SchedConfig::default(),
            torso: TorsoConfig::default(),
            learning_script: PerturbationScript::default_learning(),
            eval_script: PerturbationScript::default_eval(),
            learning_duration_s: 120.0,
            freeze_at_s: None,
            eval_duration_s: 30.0,
            eta: 0.001,
            window: 10,
            t_max: 10.0,
            error_gain: 1.0,
            force_scale: 100.0,
            seed: 1,
            mode: Fidelity::Logical,
            baseline: true,
        }
    }
}

impl ExperimentConfig {
    pub fn from_json(s: &str) -> Result<Self> {
        serde_json::from_str(s).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn freeze_s(&self) -> f64 {
        self.freeze_at_s.unwrap_or(self.learning_duration_s)
    }

    /// Network step in seconds.
    pub fn dt(&self) -> f64 {
        self.sched.propagation_period / 1000.0
    }

    pub fn validate(&self) -> Result<()> {
        self.topology.validate()?;
        if self.topology.n_in != 6 || self.topology.n_out != 3 {
            return Err(Error::Config(format!(
                "the balance loop needs 6 inputs and 3 outputs, got {} and {}",
                self.topology.n_in, self.topology.n_out
            )));
        }
        self.torso.validate()?;
        self.learning_script.validate(self.torso.toppling_limit)?;
        self.eval_script.validate(self.torso.toppling_limit)?;
        let whole_ms = |v: f64| v > 0.0 && v.fract() == 0.0 && v.is_finite();
        if self.sched.measurement_period != 1.0 {
            return Err(Error::Config("the measurement period must be 1 ms".into()));
        }
        if !whole_ms(self.sched.propagation_period) || !whole_ms(self.sched.learning_period) {
            return Err(Error::Config("propagation and learning periods must be whole milliseconds".into()));
        }
        if self.sched.learning_period % self.sched.propagation_period != 0.0 {
            return Err(Error::Config("the learning period must be a multiple of the propagation period".into()));
        }
        for (name, v) in [
            ("learning_duration_s", self.learning_duration_s),
            ("eval_duration_s", self.eval_duration_s),
            ("freeze_at_s", self.freeze_s()),
        ] {
            if !(v >= 0.0) || !v.is_finite() {
                return Err(Error::Config(format!("{name} must be finite and non-negative")));
            }
        }
        if self.freeze_s() > self.learning_duration_s {
            return Err(Error::Config("freeze_at_s is after the end of the learning phase".into()));
        }
        if !(self.force_scale > 0.0) || !self.error_gain.is_finite() {
            return Err(Error::Config("force_scale must be positive and error_gain finite".into()));
        }
        crate::learn::LearningConfig {
            eta: self.eta,
            window: self.window,
            t_max: self.t_max,
        }
        .validate()
    }
}
