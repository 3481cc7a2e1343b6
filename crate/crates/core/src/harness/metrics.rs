use serde::{Deserialize, Serialize};

use super::trace::{ParamChange, Phase, TraceRow};
use crate::balance::BalanceConfig;

/// Summary of one run. Everything is a function of the emitted trace and
/// parameter log, see [`metrics_from_trace`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunMetrics {
    /// RMS of `(Fx, Fy - Fy_rest, Fz)` while learning, N.
    pub rms_learning: [f64; 3],
    /// RMS over the evaluation phase, N.
    pub rms_eval: [f64; 3],
    /// `Σ cost · dt` over consecutive one-second windows, N²·s.
    pub cost_integral_per_s: Vec<f64>,
    pub cost_integral_total: f64,
    /// Parameter distance of every learning write.
    pub param_change_norms: Vec<f64>,
    /// Time of the last parameter write, if any.
    pub last_param_change_ms: Option<u64>,
    pub baseline: Option<Baseline>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Baseline {
    pub rms_eval: [f64; 3],
    /// `1 - rms / rms_baseline` per axis on the evaluation phase.
    pub reduction: [f64; 3],
}

fn rms(rows: &[TraceRow], phases: &[Phase], cfg: &BalanceConfig) -> [f64; 3] {
    let mut sum = [0.0; 3];
    let mut n = 0usize;
    for r in rows.iter().filter(|r| phases.contains(&r.phase)) {
        let f = r.wrench.offset_force(cfg);
        for k in 0..3 {
            sum[k] += f[k] * f[k];
        }
        n += 1;
    }
    sum.map(|s| if n == 0 { 0.0 } else { (s / n as f64).sqrt() })
}

/// Metrics of a trace sampled every `dt_ms`, with an optional
/// neutral-output baseline trace of the same run.
pub fn metrics_from_trace(
    rows: &[TraceRow],
    params: &[ParamChange],
    baseline: Option<&[TraceRow]>,
    cfg: &BalanceConfig,
    dt_ms: u64,
) -> RunMetrics {
    let dt = dt_ms as f64 / 1000.0;
    let per_window = (1000 / dt_ms.max(1)).max(1) as usize;
    let cost_integral_per_s: Vec<f64> = rows
        .chunks(per_window)
        .map(|c| c.iter().map(|r| r.cost * dt).sum())
        .collect();
    let rms_eval = rms(rows, &[Phase::Eval], cfg);
    let baseline = baseline.map(|b| {
        let base = rms(b, &[Phase::Eval], cfg);
        let reduction = std::array::from_fn(|k| if base[k] > 0.0 { 1.0 - rms_eval[k] / base[k] } else { 0.0 });
        Baseline {
            rms_eval: base,
            reduction,
        }
    });
    RunMetrics {
        rms_learning: rms(rows, &[Phase::Learn, Phase::Frozen], cfg),
        rms_eval,
        cost_integral_total: cost_integral_per_s.iter().sum(),
        cost_integral_per_s,
        param_change_norms: params.iter().map(|p| p.delta_norm).collect(),
        last_param_change_ms: params.iter().map(|p| p.t_ms).max(),
        baseline,
    }
}
