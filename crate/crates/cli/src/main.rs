use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use ctrnn_balance::harness::{
    bench, gradcheck, run_experiment, write_aborted, write_bench, write_gradcheck, write_outputs, BenchConfig,
    ExperimentConfig, Fidelity, GradcheckConfig,
};
use ctrnn_balance::sched::{check_exclusion, run_schedule, Mode, SchedConfig};
use ctrnn_balance::Error;
use serde::de::DeserializeOwned;
use serde_json::json;

const EXIT_CONFIG: u8 = 2;
const EXIT_NUMERIC: u8 = 3;
const EXIT_GRADCHECK: u8 = 4;

#[derive(Parser)]
#[command(version, about = "CTRNN balance-learning simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Config file (JSON; key = value text for `sched`).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Logical,
    Timed,
}

#[derive(Subcommand)]
enum Command {
    /// Closed-loop learning run, frozen evaluation and neutral baseline.
    Run {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, value_enum)]
        mode: Option<ModeArg>,
        /// Length of the learning phase, s.
        #[arg(long)]
        duration_s: Option<f64>,
        /// Freeze the parameters at this time, s.
        #[arg(long)]
        freeze_at_s: Option<f64>,
    },
    /// Analytic against finite-difference gradients on small networks.
    Gradcheck {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Simulate the propagation/learning schedule and check exclusion.
    Sched {
        #[command(flatten)]
        common: Common,
        /// Run the tasks on wall-clock threads instead of simulating.
        #[arg(long)]
        threaded: bool,
        /// Real milliseconds per schedule millisecond in threaded mode.
        #[arg(long, default_value_t = 1.0)]
        time_scale: f64,
        /// Overrides the horizon of the config, ms.
        #[arg(long)]
        horizon_ms: Option<f64>,
    },
    /// MAC counts and wall time over a size by window grid.
    Bench {
        #[command(flatten)]
        common: Common,
    },
}

enum Failure {
    Config(String),
    Numeric(String),
    Gradcheck(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Diverged { .. } | Error::NumericInput(_) | Error::NonFiniteGradient(_) => {
                Failure::Numeric(e.to_string())
            }
            other => Failure::Config(other.to_string()),
        }
    }
}

type CliResult = Result<(), Failure>;

fn load_json<T: DeserializeOwned + Default>(path: Option<&Path>) -> Result<T, Failure> {
    match path {
        None => Ok(T::default()),
        Some(p) => {
            let text = fs::read_to_string(p).map_err(|e| Failure::Config(format!("{}: {e}", p.display())))?;
            serde_json::from_str(&text).map_err(|e| Failure::Config(format!("{}: {e}", p.display())))
        }
    }
}

fn create_out(dir: &Path) -> Result<(), Failure> {
    fs::create_dir_all(dir).map_err(|e| Failure::Config(format!("{}: {e}", dir.display())))
}

fn create_file(path: &Path) -> Result<BufWriter<File>, Failure> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| Failure::Config(format!("{}: {e}", path.display())))
}

fn print_json(v: &serde_json::Value) {
    let text = serde_json::to_string_pretty(v).expect("serializable");
    // a closed stdout (e.g. piped into `head`) is not an error
    let _ = writeln!(std::io::stdout(), "{text}");
}

fn cmd_run(
    common: &Common,
    seed: Option<u64>,
    mode: Option<ModeArg>,
    duration_s: Option<f64>,
    freeze_at_s: Option<f64>,
) -> CliResult {
    let mut cfg: ExperimentConfig = load_json(common.config.as_deref())?;
    if let Some(s) = seed {
        cfg.seed = s;
    }
    if let Some(m) = mode {
        cfg.mode = match m {
            ModeArg::Logical => Fidelity::Logical,
            ModeArg::Timed => Fidelity::Timed,
        };
    }
    if let Some(d) = duration_s {
        cfg.learning_duration_s = d;
    }
    if let Some(f) = freeze_at_s {
        cfg.freeze_at_s = Some(f);
    }
    cfg.validate()?;
    match run_experiment(&cfg) {
        Ok(out) => {
            let paths = write_outputs(&common.out, &cfg, &out)?;
            let m = &out.metrics;
            print_json(&json!({
                "rms_learning": m.rms_learning,
                "rms_eval": m.rms_eval,
                "baseline": m.baseline,
                "cost_integral_total": m.cost_integral_total,
                "learning_iterations": m.param_change_norms.len(),
                "last_param_change_ms": m.last_param_change_ms,
                "summary": paths.summary,
            }));
            Ok(())
        }
        Err(aborted) => {
            if !aborted.trace.is_empty() {
                write_aborted(&common.out, &cfg, &aborted)?;
            }
            Err(aborted.error.into())
        }
    }
}

fn cmd_gradcheck(common: &Common, seed: Option<u64>) -> CliResult {
    let mut cfg: GradcheckConfig = load_json(common.config.as_deref())?;
    if let Some(s) = seed {
        cfg.seed = s;
    }
    let report = gradcheck(&cfg)?;
    create_out(&common.out)?;
    write_gradcheck(create_file(&common.out.join("gradcheck.csv"))?, &report)?;
    print_json(&json!({
        "nets": report.nets,
        "parameters": report.rows.len(),
        "max_rel_err": report.max_rel_err,
        "failures": report.failures,
        "tolerance": report.tolerance,
    }));
    if report.passed() {
        Ok(())
    } else {
        Err(Failure::Gradcheck(format!(
            "{} of {} gradients exceed rel. err {}",
            report.failures,
            report.rows.len(),
            report.tolerance
        )))
    }
}

fn cmd_sched(common: &Common, threaded: bool, time_scale: f64, horizon_ms: Option<f64>) -> CliResult {
    let cfg = match &common.config {
        None => SchedConfig::default(),
        Some(p) => {
            let text = fs::read_to_string(p).map_err(|e| Failure::Config(format!("{}: {e}", p.display())))?;
            SchedConfig::parse(&text)?
        }
    };
    let horizon = horizon_ms.unwrap_or(cfg.horizon);
    let mode = if threaded {
        Mode::Threaded { time_scale }
    } else {
        Mode::Simulated
    };
    let trace = run_schedule(&cfg.specs(), horizon, mode)?;
    create_out(&common.out)?;
    trace.write_csv(create_file(&common.out.join("schedule.csv"))?)?;
    let violations = check_exclusion(&trace);
    let spans = trace.learning_spans("learning");
    let totals: Vec<f64> = spans.iter().map(|s| s.total()).collect();
    let mean = if totals.is_empty() { 0.0 } else { totals.iter().sum::<f64>() / totals.len() as f64 };
    print_json(&json!({
        "horizon_ms": horizon,
        "events": trace.events.len(),
        "learning_cycles": spans.len(),
        "first_cycle": spans.first(),
        "span_ms": { "min": totals.iter().copied().fold(f64::INFINITY, f64::min), "mean": mean,
                     "max": totals.iter().copied().fold(0.0, f64::max) },
        "utilization": {
            "measurement": trace.utilization("measurement"),
            "propagation": trace.utilization("propagation"),
            "learning": trace.utilization("learning"),
        },
        "violations": violations.len(),
        "unschedulable": trace.unschedulable,
        "jitter": trace.jitter,
    }));
    Ok(())
}

fn cmd_bench(common: &Common) -> CliResult {
    let cfg: BenchConfig = load_json(common.config.as_deref())?;
    let report = bench(&cfg)?;
    create_out(&common.out)?;
    write_bench(create_file(&common.out.join("bench.csv"))?, &report)?;
    print_json(&json!({
        "prop_fit": report.prop_fit,
        "learn_fit": report.learn_fit,
        "learn_ratio_10x20_over_14x10": report.learn_ratio_10x20_over_14x10,
        "rows": report.rows,
    }));
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Run {
            common,
            seed,
            mode,
            duration_s,
            freeze_at_s,
        } => cmd_run(common, *seed, *mode, *duration_s, *freeze_at_s),
        Command::Gradcheck { common, seed } => cmd_gradcheck(common, *seed),
        Command::Sched {
            common,
            threaded,
            time_scale,
            horizon_ms,
        } => cmd_sched(common, *threaded, *time_scale, *horizon_ms),
        Command::Bench { common } => cmd_bench(common),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(EXIT_CONFIG)
        }
        Err(Failure::Numeric(msg)) => {
            eprintln!("numeric failure: {msg}");
            ExitCode::from(EXIT_NUMERIC)
        }
        Err(Failure::Gradcheck(msg)) => {
            eprintln!("gradcheck failed: {msg}");
            ExitCode::from(EXIT_GRADCHECK)
        }
    }
}
