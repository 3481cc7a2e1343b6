//! Dual-rate propagation/learning schedule.
//!
//! Three periodic tasks share one network: measurement, propagation (`P`) and
//! learning (`A B C D`). A binary semaphore is 1 while `P` runs. `A` copies the
//! state and may only start once `P` has finished; `D` writes the parameters
//! and waits until a `P` that started after its request has completed. `B` and
//! `C` run concurrently with `P`. The waits are traced as `A'` and `D'`.
//!
//! [`run_schedule`] replays the protocol either as a deterministic
//! discrete-event simulation or with one thread per task on the wall clock.

mod config;
mod exclusion;
mod ops;
mod sim;
mod threaded;

use std::fmt;
use std::io::{Read, Write};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

pub use config::SchedConfig;
pub use exclusion::{check_exclusion, Violation, ViolationKind};
pub use ops::{fit_proportional, op_count_model, Fit, OpCounts};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Stage {
    Measure,
    P,
    AWait,
    A,
    B,
    C,
    DWait,
    D,
}

impl Stage {
    pub fn label(self) -> &'static str {
        match self {
            Stage::Measure => "Measure",
            Stage::P => "P",
            Stage::AWait => "A'",
            Stage::A => "A",
            Stage::B => "B",
            Stage::C => "C",
            Stage::DWait => "D'",
            Stage::D => "D",
        }
    }

    /// Whether the stage touches the shared network and must exclude `P`.
    pub fn is_critical(self) -> bool {
        matches!(self, Stage::A | Stage::D)
    }
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for Stage {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "Measure" => Stage::Measure,
            "P" => Stage::P,
            "A'" => Stage::AWait,
            "A" => Stage::A,
            "B" => Stage::B,
            "C" => Stage::C,
            "D'" => Stage::DWait,
            "D" => Stage::D,
            other => return Err(Error::Config(format!("unknown stage {other:?}"))),
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TaskKind {
    Measurement,
    Propagation,
    Learning,
}

impl TaskKind {
    /// Stages with a fixed duration, in execution order.
    pub fn stages(self) -> &'static [Stage] {
        match self {
            TaskKind::Measurement => &[Stage::Measure],
            TaskKind::Propagation => &[Stage::P],
            TaskKind::Learning => &[Stage::A, Stage::B, Stage::C, Stage::D],
        }
    }
}

/// One periodic task. Smaller `priority` wins.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TaskSpec {
    pub name: String,
    pub kind: TaskKind,
    pub period_ms: f64,
    /// Release time of the first instance.
    pub offset_ms: f64,
    /// Fixed stage durations, in the order of [`TaskKind::stages`].
    pub stages: Vec<(Stage, f64)>,
    pub priority: u8,
}

impl TaskSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.period_ms > 0.0) || !self.period_ms.is_finite() {
            return Err(Error::Config(format!("{}: period must be positive", self.name)));
        }
        if !(self.offset_ms >= 0.0) || !self.offset_ms.is_finite() {
            return Err(Error::Config(format!("{}: offset must be non-negative", self.name)));
        }
        let expected = self.kind.stages();
        let got: Vec<Stage> = self.stages.iter().map(|s| s.0).collect();
        if got != expected {
            return Err(Error::Config(format!("{}: stages must be {expected:?}, got {got:?}", self.name)));
        }
        if let Some((s, d)) = self.stages.iter().find(|(_, d)| !(*d >= 0.0) || !d.is_finite()) {
            return Err(Error::Config(format!("{}: duration of {s} must be >= 0, got {d}", self.name)));
        }
        Ok(())
    }

    pub fn duration(&self, stage: Stage) -> f64 {
        self.stages.iter().find(|s| s.0 == stage).map_or(0.0, |s| s.1)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Mode {
    Simulated,
    /// Wall-clock threads; `time_scale` real milliseconds per schedule
    /// millisecond.
    Threaded { time_scale: f64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Event {
    pub task: String,
    pub stage: Stage,
    pub t_start_ms: f64,
    pub t_end_ms: f64,
}

impl Event {
    pub fn duration(&self) -> f64 {
        self.t_end_ms - self.t_start_ms
    }
}

/// Lateness of `P` starts against their nominal release, threaded mode only.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Jitter {
    pub samples: usize,
    pub mean_ms: f64,
    pub max_ms: f64,
}

/// One learning cycle read back from a trace.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LearningSpan {
    pub request_ms: f64,
    pub a_wait: f64,
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d_wait: f64,
    pub d: f64,
}

impl LearningSpan {
    pub fn total(&self) -> f64 {
        self.a_wait + self.a + self.b + self.c + self.d_wait + self.d
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ScheduleTrace {
    pub events: Vec<Event>,
    pub horizon_ms: f64,
    /// Reasons the specs cannot be honoured; the trace is produced anyway.
    pub unschedulable: Vec<String>,
    pub jitter: Option<Jitter>,
}

impl ScheduleTrace {
    pub fn of_stage(&self, stage: Stage) -> impl Iterator<Item = &Event> {
        self.events.iter().filter(move |e| e.stage == stage)
    }

    /// Learning cycles of `task`, assembled from its `A' A B C D' D` events.
    pub fn learning_spans(&self, task: &str) -> Vec<LearningSpan> {
        let mut spans = Vec::new();
        let mut cur: Option<LearningSpan> = None;
        for e in self.events.iter().filter(|e| e.task == task) {
            let d = e.duration();
            match e.stage {
                Stage::AWait => {
                    cur = Some(LearningSpan {
                        request_ms: e.t_start_ms,
                        a_wait: d,
                        a: 0.0,
                        b: 0.0,
                        c: 0.0,
                        d_wait: 0.0,
                        d: 0.0,
                    })
                }
                Stage::A => cur.iter_mut().for_each(|s| s.a = d),
                Stage::B => cur.iter_mut().for_each(|s| s.b = d),
                Stage::C => cur.iter_mut().for_each(|s| s.c = d),
                Stage::DWait => cur.iter_mut().for_each(|s| s.d_wait = d),
                Stage::D => spans.extend(cur.take().map(|mut s| {
                    s.d = d;
                    s
                })),
                _ => {}
            }
        }
        spans
    }

    /// Busy time of `task` over the horizon, waits excluded.
    pub fn utilization(&self, task: &str) -> f64 {
        let busy: f64 = self
            .events
            .iter()
            .filter(|e| e.task == task && !matches!(e.stage, Stage::AWait | Stage::DWait))
            .map(Event::duration)
            .sum();
        if self.horizon_ms > 0.0 {
            busy / self.horizon_ms
        } else {
            0.0
        }
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["task", "stage", "t_start_ms", "t_end_ms"])?;
        for e in &self.events {
            out.write_record([
                e.task.as_str(),
                e.stage.label(),
                &e.t_start_ms.to_string(),
                &e.t_end_ms.to_string(),
            ])?;
        }
        out.flush().map_err(|e| Error::io("schedule trace", e))?;
        Ok(())
    }

    /// Reads events back from [`Self::write_csv`] output. Horizon and
    /// diagnostics are not part of the CSV.
    pub fn read_csv<R: Read>(r: R) -> Result<Self> {
        let mut rdr = csv::Reader::from_reader(r);
        let mut events = Vec::new();
        for row in rdr.records() {
            let row = row?;
            if row.len() != 4 {
                return Err(Error::Config(format!("schedule trace row has {} fields", row.len())));
            }
            let num = |i: usize| {
                row[i]
                    .parse::<f64>()
                    .map_err(|_| Error::Config(format!("bad time {:?}", &row[i])))
            };
            events.push(Event {
                task: row[0].to_string(),
                stage: row[1].parse()?,
                t_start_ms: num(2)?,
                t_end_ms: num(3)?,
            });
        }
        let horizon_ms = events.iter().map(|e| e.t_end_ms).fold(0.0, f64::max);
        Ok(ScheduleTrace {
            events,
            horizon_ms,
            unschedulable: Vec::new(),
            jitter: None,
        })
    }
}

/// Runs the tasks up to `horizon_ms`. Exactly one propagation and at most one
/// learning and one measurement task are supported. A learning cycle released
/// before the horizon is always completed.
pub fn run_schedule(specs: &[TaskSpec], horizon_ms: f64, mode: Mode) -> Result<ScheduleTrace> {
    for s in specs {
        s.validate()?;
    }
    if !(horizon_ms >= 0.0) || !horizon_ms.is_finite() {
        return Err(Error::Config("horizon must be finite and non-negative".into()));
    }
    let count = |k| specs.iter().filter(|s| s.kind == k).count();
    if count(TaskKind::Propagation) != 1 || count(TaskKind::Learning) > 1 || count(TaskKind::Measurement) > 1 {
        return Err(Error::Config(
            "expected one propagation task and at most one learning and one measurement task".into(),
        ));
    }
    let mut names: Vec<&str> = specs.iter().map(|s| s.name.as_str()).collect();
    names.sort_unstable();
    if names.windows(2).any(|w| w[0] == w[1]) {
        return Err(Error::Config("task names must be unique".into()));
    }
    let unschedulable = feasibility(specs);
    let mut trace = match mode {
        Mode::Simulated => sim::run(specs, horizon_ms),
        Mode::Threaded { time_scale } => {
            if !(time_scale > 0.0) || !time_scale.is_finite() {
                return Err(Error::Config("time scale must be positive".into()));
            }
            threaded::run(specs, horizon_ms, time_scale)
        }
    };
    trace.unschedulable = unschedulable;
    Ok(trace)
}

fn feasibility(specs: &[TaskSpec]) -> Vec<String> {
    let mut out = Vec::new();
    for s in specs.iter().filter(|s| s.kind == TaskKind::Measurement) {
        if s.duration(Stage::Measure) > s.period_ms {
            out.push(format!("{}: measurement longer than its period", s.name));
        }
    }
    let prop = specs.iter().find(|s| s.kind == TaskKind::Propagation);
    let learn = specs.iter().find(|s| s.kind == TaskKind::Learning);
    if let Some(p) = prop {
        let gap = p.period_ms - p.duration(Stage::P);
        if gap < 0.0 {
            out.push(format!("{}: P longer than its period", p.name));
        }
        if let Some(l) = learn {
            for st in [Stage::A, Stage::D] {
                if l.duration(st) > gap {
                    out.push(format!(
                        "{}: {st} ({} ms) does not fit between propagations ({gap} ms)",
                        l.name,
                        l.duration(st)
                    ));
                }
            }
            // longest cycle: a full period waiting for A and for D
            let worst = p.period_ms * 2.0
                + l.duration(Stage::A)
                + l.duration(Stage::B)
                + l.duration(Stage::C)
                + l.duration(Stage::D);
            if worst > l.period_ms {
                out.push(format!(
                    "{}: a learning cycle may take up to {worst} ms, more than its {} ms period",
                    l.name, l.period_ms
                ));
            }
        }
    }
    out
}

/// Sorting key shared by both modes so traces are ordered deterministically.
pub(crate) fn sort_events(events: &mut [Event], specs: &[TaskSpec]) {
    let prio = |name: &str| specs.iter().find(|s| s.name == name).map_or(u8::MAX, |s| s.priority);
    events.sort_by(|a, b| {
        a.t_start_ms
            .total_cmp(&b.t_start_ms)
            .then_with(|| prio(&a.task).cmp(&prio(&b.task)))
            .then_with(|| a.task.cmp(&b.task))
            .then_with(|| a.stage.cmp(&b.stage))
            .then_with(|| a.t_end_ms.total_cmp(&b.t_end_ms))
    });
}

#[cfg(test)]
mod tests;
