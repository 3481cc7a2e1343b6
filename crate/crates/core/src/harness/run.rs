use std::collections::{BTreeMap, VecDeque};

use super::config::{ExperimentConfig, Fidelity};
use super::metrics::{metrics_from_trace, RunMetrics};
use super::trace::{ParamChange, Phase, TraceRow};
use crate::balance::{balance_error_signals, cost, BalanceConfig, Wrench};
use crate::ctrnn::{NetState, Network, NetworkInit, StateHistory};
use crate::learn::{learn_iteration, LearningConfig, RecordedErrors};
use crate::plant::{sensor_wrench, step_plant, PlantState};
use crate::sched::{run_schedule, Mode, ScheduleTrace, Stage};
use crate::{Error, Result};

/// Plant and measurement tick, ms.
pub const TICK_MS: u64 = 1;

/// When the network acts and when the learner reads and writes, in ticks.
#[derive(Clone, Debug, Default)]
struct Plan {
    /// Propagation release tick -> tick its outputs reach the servos.
    propagations: BTreeMap<u64, u64>,
    /// Snapshot tick -> parameter write tick.
    learning: BTreeMap<u64, u64>,
}

fn ceil_ms(t: f64) -> u64 {
    t.max(0.0).ceil() as u64
}

impl Plan {
    fn logical(cfg: &ExperimentConfig, total: u64) -> Plan {
        let prop = cfg.sched.propagation_period as u64;
        let learn = cfg.sched.learning_period as u64;
        let propagations = (0..total).step_by(prop as usize).map(|t| (t, t)).collect();
        let learning = (learn..total).step_by(learn as usize).map(|t| (t, t)).collect();
        Plan {
            propagations,
            learning,
        }
    }

    fn timed(trace: &ScheduleTrace) -> Plan {
        let propagations = trace
            .of_stage(Stage::P)
            .map(|e| (ceil_ms(e.t_start_ms), ceil_ms(e.t_end_ms)))
            .collect();
        let starts = trace.of_stage(Stage::A).map(|e| ceil_ms(e.t_start_ms));
        let writes = trace.of_stage(Stage::D).map(|e| ceil_ms(e.t_end_ms));
        Plan {
            propagations,
            learning: starts.zip(writes).collect(),
        }
    }
}

/// Everything a run produces.
#[derive(Clone, Debug)]
pub struct RunOutput {
    pub metrics: RunMetrics,
    pub trace: Vec<TraceRow>,
    pub baseline_trace: Option<Vec<TraceRow>>,
    pub params: Vec<ParamChange>,
    pub initial_network: Network<f64>,
    pub final_network: Network<f64>,
    /// Simulated schedule driving a timed run.
    pub schedule: Option<ScheduleTrace>,
}

/// A run that stopped early, with the rows logged up to the failure.
#[derive(Debug)]
pub struct Aborted {
    pub error: Error,
    pub trace: Vec<TraceRow>,
    pub params: Vec<ParamChange>,
}

struct Sim {
    trace: Vec<TraceRow>,
    params: Vec<ParamChange>,
    network: Network<f64>,
}

pub fn balance_config(cfg: &ExperimentConfig) -> BalanceConfig {
    BalanceConfig {
        fy_rest: cfg.torso.rest_force_y(),
        error_gain: cfg.error_gain,
    }
}

pub fn initial_network(cfg: &ExperimentConfig) -> Result<Network<f64>> {
    let init = NetworkInit {
        seed: cfg.seed,
        ..cfg.init.clone()
    };
    Network::random(cfg.topology, cfg.dt(), cfg.activation, &init)
}

fn total_ms(cfg: &ExperimentConfig) -> u64 {
    ((cfg.learning_duration_s + cfg.eval_duration_s) * 1000.0).round() as u64
}

/// Network inputs `[F̂x, F̂y, F̂z, p̂x, p̂y, p̂z]`.
fn inputs(cfg: &ExperimentConfig, bal: &BalanceConfig, w: &Wrench, plant: &PlantState) -> Vec<f64> {
    let f = w.offset_force(bal);
    let strokes = cfg.torso.strokes();
    let mut u: Vec<f64> = f.iter().map(|v| v / cfg.force_scale).collect();
    u.extend((0..3).map(|i| plant.p[i] / strokes[i]));
    u
}

fn diverged(t_ms: u64, reason: impl Into<String>) -> Error {
    Error::Diverged {
        t_ms,
        reason: reason.into(),
    }
}

/// Closed loop over the whole run. `adaptive = false` keeps the outputs at
/// neutral and never touches the network.
fn simulate(cfg: &ExperimentConfig, plan: &Plan, network: Network<f64>, adaptive: bool) -> std::result::Result<Sim, Aborted> {
    let bal = balance_config(cfg);
    let learn_cfg = LearningConfig {
        eta: cfg.eta,
        window: cfg.window,
        t_max: cfg.t_max,
    };
    let total = total_ms(cfg);
    let freeze = (cfg.freeze_s() * 1000.0).round() as u64;
    let learn_end = (cfg.learning_duration_s * 1000.0).round() as u64;
    let strokes = cfg.torso.strokes();
    let dt = TICK_MS as f64 / 1000.0;

    let mut net = network;
    let mut state = NetState::rest(net.n());
    let mut history = StateHistory::new(cfg.window).expect("validated window");
    let mut plant = PlantState::default();
    let mut outputs = [0.0; 3];
    let mut pending_out: VecDeque<(u64, [f64; 3])> = VecDeque::new();
    let mut pending_net: Option<(u64, Network<f64>, f64)> = None;
    let mut trace = Vec::with_capacity(total as usize);
    let mut params = Vec::new();

    macro_rules! bail {
        ($err:expr) => {
            return Err(Aborted {
                error: $err,
                trace,
                params,
            })
        };
    }

    for t in 0..total {
        let (ext, phase) = if t < learn_end {
            let phase = if t < freeze { Phase::Learn } else { Phase::Frozen };
            (cfg.learning_script.eval(t as f64 / 1000.0), phase)
        } else {
            (cfg.eval_script.eval((t - learn_end) as f64 / 1000.0), Phase::Eval)
        };

        while pending_out.front().is_some_and(|(at, _)| *at <= t) {
            outputs = pending_out.pop_front().expect("checked").1;
        }
        let write = |net: &mut Network<f64>, new: Network<f64>, grad_norm: f64, params: &mut Vec<ParamChange>| {
            params.push(ParamChange {
                iteration: params.len() as u64,
                t_ms: t,
                delta_norm: new.param_distance(net),
                gradient_norm: grad_norm,
            });
            *net = new;
        };
        if pending_net.as_ref().is_some_and(|(at, _, _)| *at <= t) {
            let (_, new, g) = pending_net.take().expect("checked");
            write(&mut net, new, g, &mut params);
        }

        let wrench = sensor_wrench(&cfg.torso, &plant, ext);
        let cost_now = cost(&wrench, &bal);
        if !wrench.is_finite() || !cost_now.is_finite() {
            bail!(diverged(t, "non-finite sensor wrench or cost"));
        }

        if adaptive {
            if let Some(&apply_at) = plan.propagations.get(&t) {
                let u = inputs(cfg, &bal, &wrench, &plant);
                let step = match net.propagate_step(&state, &u) {
                    Ok(s) => s,
                    Err(e) => bail!(diverged(t, format!("propagation failed: {e}"))),
                };
                let eps = balance_error_signals(&wrench, &bal).as_array();
                let record = step.record.with_errors(&eps).expect("three outputs");
                history.push(record).expect("consecutive steps");
                state = step.state;
                let y = net.outputs(&state);
                if y.iter().any(|v| !v.is_finite()) {
                    bail!(diverged(t, "non-finite network output"));
                }
                let new_out = [y[0], y[1], y[2]];
                if apply_at <= t {
                    outputs = new_out;
                } else {
                    pending_out.push_back((apply_at, new_out));
                }
            }

            if let Some(&write_at) = plan.learning.get(&t) {
                if write_at < freeze && pending_net.is_none() && !history.is_empty() {
                    match learn_iteration(&history, &net, &mut RecordedErrors, &learn_cfg) {
                        Ok(outcome) => {
                            let g = outcome.gradients.norm();
                            if write_at <= t {
                                write(&mut net, outcome.network, g, &mut params);
                            } else {
                                pending_net = Some((write_at, outcome.network, g));
                            }
                        }
                        Err(e) => bail!(diverged(t, format!("learning failed: {e}"))),
                    }
                }
            }
        }

        trace.push(TraceRow {
            t_ms: t,
            wrench,
            p: plant.p,
            out: outputs,
            cost: cost_now,
            phase,
        });

        let setpoints = std::array::from_fn(|i| outputs[i] * strokes[i]);
        plant = match step_plant(&cfg.torso, &plant, setpoints, ext, dt) {
            Ok(p) => p,
            Err(e) => bail!(diverged(t, format!("plant step failed: {e}"))),
        };
        if plant.p.iter().chain(&plant.v).any(|v| !v.is_finite()) {
            bail!(diverged(t, "non-finite plant state"));
        }
    }
    Ok(Sim {
        trace,
        params,
        network: net,
    })
}

/// Learning run followed by the frozen evaluation, plus the neutral-output
/// baseline when `cfg.baseline` is set.
pub fn run_experiment(cfg: &ExperimentConfig) -> std::result::Result<RunOutput, Aborted> {
    let early = |error| Aborted {
        error,
        trace: Vec::new(),
        params: Vec::new(),
    };
    cfg.validate().map_err(early)?;
    let total = total_ms(cfg);
    let (plan, schedule) = match cfg.mode {
        Fidelity::Logical => (Plan::logical(cfg, total), None),
        Fidelity::Timed => {
            let trace = run_schedule(&cfg.sched.specs(), total as f64, Mode::Simulated).map_err(early)?;
            (Plan::timed(&trace), Some(trace))
        }
    };
    let initial = initial_network(cfg).map_err(early)?;
    let sim = simulate(cfg, &plan, initial.clone(), true)?;
    let baseline = if cfg.baseline {
        Some(simulate(cfg, &plan, initial.clone(), false)?.trace)
    } else {
        None
    };
    let metrics = metrics_from_trace(&sim.trace, &sim.params, baseline.as_deref(), &balance_config(cfg), TICK_MS);
    Ok(RunOutput {
        metrics,
        trace: sim.trace,
        baseline_trace: baseline,
        params: sim.params,
        initial_network: initial,
        final_network: sim.network,
        schedule,
    })
}
