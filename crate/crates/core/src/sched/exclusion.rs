use serde::{Deserialize, Serialize};

use super::{Event, ScheduleTrace, Stage};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum ViolationKind {
    /// An `A` or `D` interval intersects a `P` interval.
    Overlap,
    /// A `D` not preceded by a `P` that started at or after its request and
    /// finished before it.
    DOrdering,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub kind: ViolationKind,
    pub task: String,
    pub stage: Stage,
    pub t_start_ms: f64,
    pub t_end_ms: f64,
    /// The offending `P` for overlaps.
    pub p_start_ms: Option<f64>,
}

/// All exclusion and ordering violations in `trace`. Intervals are half open,
/// so touching endpoints do not overlap. The request of a `D` is the start of
/// the latest `D'` of the same task ending where the `D` starts; a `D` with no
/// such wait counts as requested at its own start.
pub fn check_exclusion(trace: &ScheduleTrace) -> Vec<Violation> {
    let mut p: Vec<&Event> = trace.of_stage(Stage::P).collect();
    p.sort_by(|a, b| a.t_start_ms.total_cmp(&b.t_start_ms));
    // P intervals never overlap each other, so their ends are sorted too
    let mut out = Vec::new();

    for e in trace.events.iter().filter(|e| e.stage.is_critical()) {
        let first = p.partition_point(|q| q.t_end_ms <= e.t_start_ms);
        for q in p[first..].iter().take_while(|q| q.t_start_ms < e.t_end_ms) {
            if e.t_start_ms < e.t_end_ms {
                out.push(violation(ViolationKind::Overlap, e, Some(q.t_start_ms)));
            }
        }
    }

    let mut pending: Vec<(&str, f64, f64)> = Vec::new();
    for e in &trace.events {
        match e.stage {
            Stage::DWait => {
                pending.retain(|(t, _, _)| *t != e.task);
                pending.push((&e.task, e.t_start_ms, e.t_end_ms));
            }
            Stage::D => {
                let request = pending
                    .iter()
                    .find(|(t, _, end)| *t == e.task && *end == e.t_start_ms)
                    .map(|w| w.1)
                    .unwrap_or(e.t_start_ms);
                let i = p.partition_point(|q| q.t_start_ms < request);
                if !p.get(i).is_some_and(|q| q.t_end_ms <= e.t_start_ms) {
                    out.push(violation(ViolationKind::DOrdering, e, None));
                }
            }
            _ => {}
        }
    }
    out
}

fn violation(kind: ViolationKind, e: &Event, p_start_ms: Option<f64>) -> Violation {
    Violation {
        kind,
        task: e.task.clone(),
        stage: e.stage,
        t_start_ms: e.t_start_ms,
        t_end_ms: e.t_end_ms,
        p_start_ms,
    }
}
