//! Discrete-event replay on integer microseconds. Every task owns its
//! executor, so tasks only interact through the semaphore rules.

use super::{sort_events, Event, ScheduleTrace, Stage, TaskKind, TaskSpec};

fn us(ms: f64) -> i64 {
    (ms * 1000.0).round() as i64
}

fn ms(us: i64) -> f64 {
    us as f64 / 1000.0
}

/// Strictly periodic propagation: instance `i` holds the semaphore over
/// `[offset + i period, offset + i period + duration)`.
struct Propagation {
    offset: i64,
    period: i64,
    duration: i64,
}

impl Propagation {
    fn start(&self, i: i64) -> i64 {
        self.offset + i * self.period
    }

    fn end(&self, i: i64) -> i64 {
        self.start(i) + self.duration
    }

    /// Index of the first instance starting at or after `t`.
    fn first_starting_from(&self, t: i64) -> i64 {
        if t <= self.offset {
            0
        } else {
            (t - self.offset + self.period - 1) / self.period
        }
    }

    /// Index of the instance that holds the semaphore at `t`, if any.
    fn running_at(&self, t: i64) -> Option<i64> {
        if t < self.offset {
            return None;
        }
        let i = (t - self.offset) / self.period;
        (t < self.end(i)).then_some(i)
    }

    /// `A` starts at once if the semaphore is free and `A` ends before the
    /// next release; otherwise at the end of the running or next `P`.
    fn a_start(&self, t: i64, a: i64) -> i64 {
        if let Some(i) = self.running_at(t) {
            return self.end(i);
        }
        let next = self.first_starting_from(t);
        if t + a <= self.start(next) {
            t
        } else {
            self.end(next)
        }
    }

    /// `D` starts when the first `P` released at or after `t` completes.
    fn d_start(&self, t: i64) -> i64 {
        self.end(self.first_starting_from(t))
    }
}

fn push(events: &mut Vec<Event>, task: &str, stage: Stage, start: i64, end: i64) {
    events.push(Event {
        task: task.to_string(),
        stage,
        t_start_ms: ms(start),
        t_end_ms: ms(end),
    });
}

pub(super) fn run(specs: &[TaskSpec], horizon_ms: f64) -> ScheduleTrace {
    let horizon = us(horizon_ms);
    let prop_spec = specs.iter().find(|s| s.kind == TaskKind::Propagation).expect("validated");
    let prop = Propagation {
        offset: us(prop_spec.offset_ms),
        period: us(prop_spec.period_ms).max(1),
        duration: us(prop_spec.duration(Stage::P)),
    };
    let mut events = Vec::new();

    let mut end = horizon;
    if let Some(l) = specs.iter().find(|s| s.kind == TaskKind::Learning) {
        let period = us(l.period_ms).max(1);
        let dur = |s| us(l.duration(s));
        let mut free = 0;
        let mut k = 0;
        loop {
            let request = (us(l.offset_ms) + k * period).max(free);
            if request >= horizon {
                break;
            }
            let a0 = prop.a_start(request, dur(Stage::A));
            let b0 = a0 + dur(Stage::A);
            let c0 = b0 + dur(Stage::B);
            let d_req = c0 + dur(Stage::C);
            let d0 = prop.d_start(d_req);
            let d1 = d0 + dur(Stage::D);
            push(&mut events, &l.name, Stage::AWait, request, a0);
            push(&mut events, &l.name, Stage::A, a0, b0);
            push(&mut events, &l.name, Stage::B, b0, c0);
            push(&mut events, &l.name, Stage::C, c0, d_req);
            push(&mut events, &l.name, Stage::DWait, d_req, d0);
            push(&mut events, &l.name, Stage::D, d0, d1);
            free = d1;
            end = end.max(d1);
            // a release that falls inside an overrunning cycle waits for it
            k += 1;
        }
    }

    let mut i = 0;
    while prop.start(i) < end {
        push(&mut events, &prop_spec.name, Stage::P, prop.start(i), prop.end(i));
        i += 1;
    }

    if let Some(m) = specs.iter().find(|s| s.kind == TaskKind::Measurement) {
        let (offset, period, d) = (us(m.offset_ms), us(m.period_ms).max(1), us(m.duration(Stage::Measure)));
        let mut t = offset;
        while t < horizon {
            push(&mut events, &m.name, Stage::Measure, t, t + d);
            t += period;
        }
    }

    sort_events(&mut events, specs);
    ScheduleTrace {
        events,
        horizon_ms,
        unschedulable: Vec::new(),
        jitter: None,
    }
}
