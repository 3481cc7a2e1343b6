//! On-disk round trips through the public API.

use std::fs;

use ctrnn_balance::harness::{
    balance_config, metrics_from_trace, read_param_log, read_trace, run_experiment, write_outputs, ExperimentConfig,
    Fidelity, RunMetrics, TICK_MS,
};
use ctrnn_balance::sched::{check_exclusion, ScheduleTrace};

fn short(mode: Fidelity) -> ExperimentConfig {
    ExperimentConfig {
        learning_duration_s: 4.0,
        eval_duration_s: 2.0,
        mode,
        ..ExperimentConfig::default()
    }
}

#[test]
fn rerun_from_saved_config_reproduces_the_trace_file() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let cfg = short(Fidelity::Logical);
    let first = write_outputs(a.path(), &cfg, &run_experiment(&cfg).unwrap()).unwrap();
    let saved = ExperimentConfig::load(&first.config).unwrap();
    let second = write_outputs(b.path(), &saved, &run_experiment(&saved).unwrap()).unwrap();
    assert_eq!(fs::read(&first.trace).unwrap(), fs::read(&second.trace).unwrap());
    assert_eq!(fs::read(&first.params).unwrap(), fs::read(&second.params).unwrap());
    assert_eq!(fs::read(&first.summary).unwrap(), fs::read(&second.summary).unwrap());
}

#[test]
fn summary_recomputes_from_the_written_files() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = short(Fidelity::Logical);
    let paths = write_outputs(dir.path(), &cfg, &run_experiment(&cfg).unwrap()).unwrap();
    let trace = read_trace(fs::File::open(&paths.trace).unwrap()).unwrap();
    let base = read_trace(fs::File::open(&paths.baseline_trace).unwrap()).unwrap();
    let params = read_param_log(fs::File::open(&paths.params).unwrap()).unwrap();
    let summary: RunMetrics = serde_json::from_str(&fs::read_to_string(&paths.summary).unwrap()).unwrap();
    let again = metrics_from_trace(&trace, &params, Some(&base), &balance_config(&cfg), TICK_MS);
    assert_eq!(again, summary);
}

#[test]
fn timed_schedule_file_respects_exclusion() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = short(Fidelity::Timed);
    let paths = write_outputs(dir.path(), &cfg, &run_experiment(&cfg).unwrap()).unwrap();
    let sched = ScheduleTrace::read_csv(fs::File::open(&paths.schedule).unwrap()).unwrap();
    assert!(!sched.events.is_empty());
    assert!(check_exclusion(&sched).is_empty());
}
