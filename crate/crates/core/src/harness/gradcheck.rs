use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::ctrnn::{Activation, NetState, Network, NetworkInit, StateHistory, Topology};
use crate::learn::{compute_backprop_costs, compute_gradients, take_snapshot, ErrorProvider, Supervised};
use crate::{Error, Result};

/// Supervised gradient check on small random networks over a full-history
/// window.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GradcheckConfig {
    pub topology: Topology,
    pub dt: f64,
    pub init: NetworkInit,
    pub steps: usize,
    /// Number of networks, seeded `seed, seed + 1, ...`.
    pub nets: usize,
    pub seed: u64,
    pub epsilon: f64,
    pub tolerance: f64,
}

impl Default for GradcheckConfig {
    fn default() -> Self {
        GradcheckConfig {
            topology: Topology::new(1, 2, 1, Default::default()).expect("valid"),
            dt: 0.05,
            init: NetworkInit::default(),
            steps: 10,
            nets: 1,
            seed: 0,
            epsilon: 1e-5,
            tolerance: 1e-4,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GradRow {
    pub net: usize,
    pub param_kind: String,
    pub i: usize,
    pub j: usize,
    pub analytic: f64,
    pub finite_diff: f64,
    pub rel_err: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GradcheckReport {
    pub rows: Vec<GradRow>,
    pub max_rel_err: f64,
    pub failures: usize,
    pub nets: usize,
    pub tolerance: f64,
}

impl GradcheckReport {
    pub fn passed(&self) -> bool {
        self.failures == 0
    }
}

/// Errors below this magnitude on both sides are compared absolutely.
const REL_FLOOR: f64 = 1e-10;

pub fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(REL_FLOOR)
}

fn input(step: u64, k: usize) -> f64 {
    (0.7 * step as f64 + 1.3 * k as f64).sin()
}

fn target(step: u64, k: usize) -> f64 {
    0.5 * (0.7 * step as f64 - 0.3 - 0.5 * k as f64).sin()
}

fn rollout(net: &Network<f64>, steps: usize) -> Result<StateHistory<f64>> {
    let n_in = net.topology().n_in;
    let mut hist = StateHistory::new(steps)?;
    let mut st = NetState::rest(net.n());
    for s in 0..steps as u64 {
        let u: Vec<f64> = (0..n_in).map(|k| input(s, k)).collect();
        let step = net.propagate_step(&st, &u)?;
        hist.push(step.record)?;
        st = step.state;
    }
    Ok(hist)
}

fn window_cost(net: &Network<f64>, steps: usize) -> Result<f64> {
    let hist = rollout(net, steps)?;
    let topo = net.topology();
    let mut e = 0.0;
    for r in hist.iter() {
        for (k, j) in topo.output_range().enumerate() {
            let d = r.y[j] - target(r.step, k);
            e += 0.5 * d * d * net.dt();
        }
    }
    Ok(e)
}

pub fn gradcheck(cfg: &GradcheckConfig) -> Result<GradcheckReport> {
    cfg.topology.validate()?;
    if cfg.topology.n() > 8 {
        return Err(Error::Config(format!("gradcheck needs n <= 8, got {}", cfg.topology.n())));
    }
    if cfg.steps == 0 {
        return Err(Error::Config("gradcheck needs a trajectory of at least one step".into()));
    }
    if !(cfg.epsilon > 0.0) || !(cfg.tolerance > 0.0) {
        return Err(Error::Config("epsilon and tolerance must be positive".into()));
    }
    let n_out = cfg.topology.n_out;
    let mut rows = Vec::new();
    for k in 0..cfg.nets {
        let init = NetworkInit {
            seed: cfg.seed.wrapping_add(k as u64),
            ..cfg.init.clone()
        };
        let net = Network::random(cfg.topology, cfg.dt, Activation::Tanh, &init)?;
        let hist = rollout(&net, cfg.steps)?;
        let snap = take_snapshot(&hist, &net)?;
        let errors = Supervised(|s| (0..n_out).map(|o| target(s, o)).collect()).output_errors(&snap)?;
        let grads = compute_gradients(&snap, &compute_backprop_costs(&snap, &errors)?)?;
        for id in net.param_ids() {
            let mut plus = net.clone();
            plus.set_param_raw(id, net.param(id) + cfg.epsilon);
            let mut minus = net.clone();
            minus.set_param_raw(id, net.param(id) - cfg.epsilon);
            let fd = (window_cost(&plus, cfg.steps)? - window_cost(&minus, cfg.steps)?) / (2.0 * cfg.epsilon);
            let a = grads.get(id);
            let (i, j) = id.coords();
            rows.push(GradRow {
                net: k,
                param_kind: id.kind().to_string(),
                i,
                j,
                analytic: a,
                finite_diff: fd,
                rel_err: rel_err(a, fd),
            });
        }
    }
    let max_rel_err = rows.iter().map(|r| r.rel_err).fold(0.0, f64::max);
    let failures = rows.iter().filter(|r| !(r.rel_err <= cfg.tolerance)).count();
    Ok(GradcheckReport {
        rows,
        max_rel_err,
        failures,
        nets: cfg.nets,
        tolerance: cfg.tolerance,
    })
}

/// CSV with columns `param_kind,i,j,analytic,finite_diff,rel_err`; networks
/// follow one another in seed order.
pub fn write_gradcheck<W: Write>(w: W, report: &GradcheckReport) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["param_kind", "i", "j", "analytic", "finite_diff", "rel_err"])?;
    for r in &report.rows {
        out.write_record([
            r.param_kind.clone(),
            r.i.to_string(),
            r.j.to_string(),
            r.analytic.to_string(),
            r.finite_diff.to_string(),
            r.rel_err.to_string(),
        ])?;
    }
    out.flush().map_err(|e| Error::io("gradient report", e))?;
    Ok(())
}
