//! Experiment runner: closed-loop balance runs, gradient checks and scaling
//! benchmarks, with their file formats.

mod bench;
mod config;
mod gradcheck;
mod metrics;
mod output;
mod run;
mod trace;

pub use bench::{bench, write_bench, BenchConfig, BenchReport, BenchRow};
pub use config::{ExperimentConfig, Fidelity};
pub use gradcheck::{gradcheck, write_gradcheck, GradcheckConfig, GradcheckReport, GradRow};
pub use metrics::{metrics_from_trace, Baseline, RunMetrics};
pub use output::{write_aborted, write_outputs, OutputPaths};
pub use run::{balance_config, initial_network, run_experiment, Aborted, RunOutput, TICK_MS};
pub use trace::{read_param_log, read_trace, write_param_log, write_trace, ParamChange, Phase, TraceRow, TRACE_HEADER};
