use std::io::Write;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::ctrnn::{Activation, Connectivity, NetState, Network, NetworkInit, StateHistory, Topology};
use crate::learn::{compute_backprop_costs, compute_gradients, take_snapshot};
use crate::sched::{fit_proportional, op_count_model, Fit};
use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BenchConfig {
    pub sizes: Vec<usize>,
    pub windows: Vec<usize>,
    /// Timed repetitions per grid point.
    pub reps: usize,
}

impl Default for BenchConfig {
    fn default() -> Self {
        BenchConfig {
            sizes: vec![5, 10, 20, 40],
            windows: vec![1, 10, 20],
            reps: 20,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenchRow {
    pub n: usize,
    pub window: usize,
    pub prop_macs: u64,
    pub learn_macs: u64,
    /// Mean wall time of one propagation step, ns.
    pub prop_ns: f64,
    /// Mean wall time of costs plus gradients over the window, ns.
    pub learn_ns: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenchReport {
    pub rows: Vec<BenchRow>,
    /// `prop_macs ≈ c₁ n²`.
    pub prop_fit: Fit,
    /// `learn_macs ≈ c₂ W_T n²`.
    pub learn_fit: Fit,
    /// Learning cost of `n = 10, W_T = 20` over `n = 14, W_T = 10`.
    pub learn_ratio_10x20_over_14x10: f64,
}

fn time_point(n: usize, window: usize, reps: usize) -> Result<(f64, f64)> {
    let topo = Topology::new(0, n - 1, 1, Connectivity::FullRecurrent)?;
    let net = Network::<f64>::random(topo, 0.01, Activation::Tanh, &NetworkInit::default())?;
    let mut hist = StateHistory::new(window)?;
    let mut st = NetState::rest(n);
    let start = Instant::now();
    for _ in 0..reps.max(window) {
        let step = net.propagate_step(&st, &[])?;
        hist.push(step.record)?;
        st = step.state;
    }
    let prop_ns = start.elapsed().as_nanos() as f64 / reps.max(window) as f64;
    let snap = take_snapshot(&hist, &net)?;
    let errors = vec![vec![1.0]; window];
    let start = Instant::now();
    let mut sink = 0.0;
    for _ in 0..reps {
        let z = compute_backprop_costs(&snap, &errors)?;
        sink += compute_gradients(&snap, &z)?.norm();
    }
    let learn_ns = start.elapsed().as_nanos() as f64 / reps as f64;
    std::hint::black_box(sink);
    Ok((prop_ns, learn_ns))
}

pub fn bench(cfg: &BenchConfig) -> Result<BenchReport> {
    if cfg.sizes.is_empty() || cfg.windows.is_empty() || cfg.reps == 0 {
        return Err(Error::Config("bench needs sizes, windows and reps".into()));
    }
    let mut rows = Vec::new();
    for &n in &cfg.sizes {
        for &w in &cfg.windows {
            let ops = op_count_model(n, w)?;
            let (prop_ns, learn_ns) = time_point(n, w, cfg.reps)?;
            rows.push(BenchRow {
                n,
                window: w,
                prop_macs: ops.prop_macs,
                learn_macs: ops.learn_macs,
                prop_ns,
                learn_ns,
            });
        }
    }
    let sq = |n: usize| (n * n) as f64;
    let prop_fit = fit_proportional(
        &rows.iter().map(|r| sq(r.n)).collect::<Vec<_>>(),
        &rows.iter().map(|r| r.prop_macs as f64).collect::<Vec<_>>(),
    );
    let learn_fit = fit_proportional(
        &rows.iter().map(|r| r.window as f64 * sq(r.n)).collect::<Vec<_>>(),
        &rows.iter().map(|r| r.learn_macs as f64).collect::<Vec<_>>(),
    );
    let ratio = op_count_model(10, 20)?.learn_macs as f64 / op_count_model(14, 10)?.learn_macs as f64;
    Ok(BenchReport {
        rows,
        prop_fit,
        learn_fit,
        learn_ratio_10x20_over_14x10: ratio,
    })
}

pub fn write_bench<W: Write>(w: W, report: &BenchReport) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    for r in &report.rows {
        out.serialize(r)?;
    }
    out.flush().map_err(|e| Error::io("bench report", e))?;
    Ok(())
}
