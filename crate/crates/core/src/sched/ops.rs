use serde::{Deserialize, Serialize};

use crate::ctrnn::{Activation, Connectivity, NetState, Network, NetworkInit, StateHistory, Topology};
use crate::learn::{compute_backprop_costs_tallied, compute_gradients_tallied, take_snapshot};
use crate::tally::MacCount;
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct OpCounts {
    /// One propagation step.
    pub prop_macs: u64,
    /// Backprop costs plus gradients over a `W_T`-record window.
    pub learn_macs: u64,
}

/// Multiply-accumulate counts measured by running the kernels on an
/// `n`-neuron fully recurrent net with one output and no inputs.
pub fn op_count_model(n: usize, window: usize) -> Result<OpCounts> {
    if n == 0 || window == 0 {
        return Err(Error::Config("op count model needs n >= 1 and W_T >= 1".into()));
    }
    let topo = Topology::new(0, n - 1, 1, Connectivity::FullRecurrent)?;
    let net = Network::<f64>::random(topo, 0.01, Activation::Tanh, &NetworkInit::default())?;
    let mut hist = StateHistory::new(window)?;
    let mut st = NetState::rest(n);
    let mut prop = MacCount::default();
    for k in 0..window {
        let mut count = MacCount::default();
        let step = net.propagate_step_tallied(&st, &[], &mut count)?;
        if k == 0 {
            prop = count;
        }
        hist.push(step.record)?;
        st = step.state;
    }
    let snap = take_snapshot(&hist, &net)?;
    let mut learn = MacCount::default();
    let costs = compute_backprop_costs_tallied(&snap, &vec![vec![1.0]; window], &mut learn)?;
    compute_gradients_tallied(&snap, &costs, &mut learn)?;
    Ok(OpCounts {
        prop_macs: prop.0,
        learn_macs: learn.0,
    })
}

/// Least squares fit of `y = coef * x` with the usual coefficient of
/// determination about the mean of `y`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Fit {
    pub coef: f64,
    pub r2: f64,
}

pub fn fit_proportional(xs: &[f64], ys: &[f64]) -> Fit {
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| x * y).sum();
    let sxx: f64 = xs.iter().map(|x| x * x).sum();
    let coef = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let mean = ys.iter().sum::<f64>() / ys.len().max(1) as f64;
    let ss_res: f64 = xs.iter().zip(ys).map(|(x, y)| (y - coef * x).powi(2)).sum();
    let ss_tot: f64 = ys.iter().map(|y| (y - mean).powi(2)).sum();
    let r2 = if ss_tot > 0.0 { 1.0 - ss_res / ss_tot } else if ss_res == 0.0 { 1.0 } else { 0.0 };
    Fit { coef, r2 }
}
