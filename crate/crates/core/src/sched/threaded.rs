//! One thread per task on the wall clock. The shared network is guarded only
//! by the semaphore protocol: `P` raises `sem` and defers while a learning
//! stage holds `critical`; `A` and `D` take `critical` only while `sem` is 0.

use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::{Condvar, Mutex, MutexGuard};
use std::thread;
use std::time::{Duration, Instant};

use super::{sort_events, Event, Jitter, ScheduleTrace, Stage, TaskKind, TaskSpec};

#[derive(Default)]
struct Flags {
    sem: bool,
    critical: bool,
    p_started: u64,
    p_completed: u64,
}

struct Clock {
    t0: Instant,
    scale: f64,
}

impl Clock {
    fn now(&self) -> f64 {
        self.t0.elapsed().as_secs_f64() * 1000.0 / self.scale
    }

    fn sleep_until(&self, t_ms: f64) {
        let target = self.t0 + Duration::from_secs_f64((t_ms * self.scale / 1000.0).max(0.0));
        let now = Instant::now();
        if target > now {
            thread::sleep(target - now);
        }
    }

    fn work(&self, d_ms: f64) {
        if d_ms > 0.0 {
            thread::sleep(Duration::from_secs_f64(d_ms * self.scale / 1000.0));
        }
    }
}

struct Shared {
    flags: Mutex<Flags>,
    changed: Condvar,
    learning_done: AtomicBool,
}

impl Shared {
    fn lock(&self) -> MutexGuard<'_, Flags> {
        self.flags.lock().unwrap_or_else(|e| e.into_inner())
    }

    fn wait<'a>(&self, g: MutexGuard<'a, Flags>) -> MutexGuard<'a, Flags> {
        self.changed.wait(g).unwrap_or_else(|e| e.into_inner())
    }
}

fn event(task: &str, stage: Stage, t_start_ms: f64, t_end_ms: f64) -> Event {
    Event {
        task: task.to_string(),
        stage,
        t_start_ms,
        t_end_ms,
    }
}

fn propagation(spec: &TaskSpec, horizon: f64, clock: &Clock, sh: &Shared) -> (Vec<Event>, Vec<f64>) {
    let mut events = Vec::new();
    let mut late = Vec::new();
    let d = spec.duration(Stage::P);
    for i in 0u64.. {
        let release = spec.offset_ms + i as f64 * spec.period_ms;
        if release >= horizon && sh.learning_done.load(Ordering::Acquire) {
            break;
        }
        clock.sleep_until(release);
        let mut g = sh.lock();
        while g.critical {
            g = sh.wait(g);
        }
        g.sem = true;
        g.p_started += 1;
        let start = clock.now();
        drop(g);
        late.push((start - release).max(0.0));
        clock.work(d);
        let mut g = sh.lock();
        let end = clock.now();
        g.sem = false;
        g.p_completed += 1;
        drop(g);
        sh.changed.notify_all();
        events.push(event(&spec.name, Stage::P, start, end));
    }
    (events, late)
}

fn learning(spec: &TaskSpec, prop: &TaskSpec, horizon: f64, clock: &Clock, sh: &Shared) -> Vec<Event> {
    let mut events = Vec::new();
    let next_release = |t: f64| {
        let i = ((t - prop.offset_ms) / prop.period_ms).ceil().max(0.0);
        prop.offset_ms + i * prop.period_ms
    };
    let dur = |s| spec.duration(s);
    for k in 0u64.. {
        let release = spec.offset_ms + k as f64 * spec.period_ms;
        if release >= horizon {
            break;
        }
        clock.sleep_until(release);
        let request = clock.now();

        let mut g = sh.lock();
        loop {
            if !g.sem {
                let now = clock.now();
                if now + dur(Stage::A) <= next_release(now) {
                    break;
                }
                let seen = g.p_completed;
                while g.p_completed == seen {
                    g = sh.wait(g);
                }
            } else {
                g = sh.wait(g);
            }
        }
        g.critical = true;
        let a0 = clock.now();
        drop(g);
        clock.work(dur(Stage::A));
        let mut g = sh.lock();
        let a1 = clock.now();
        g.critical = false;
        drop(g);
        sh.changed.notify_all();

        clock.work(dur(Stage::B));
        let c0 = clock.now();
        clock.work(dur(Stage::C));

        let mut g = sh.lock();
        let d_req = clock.now();
        let started = g.p_started;
        while g.p_completed <= started || g.sem {
            g = sh.wait(g);
        }
        g.critical = true;
        let d0 = clock.now();
        drop(g);
        clock.work(dur(Stage::D));
        let mut g = sh.lock();
        let d1 = clock.now();
        g.critical = false;
        drop(g);
        sh.changed.notify_all();

        events.push(event(&spec.name, Stage::AWait, request, a0));
        events.push(event(&spec.name, Stage::A, a0, a1));
        events.push(event(&spec.name, Stage::B, a1, c0));
        events.push(event(&spec.name, Stage::C, c0, d_req));
        events.push(event(&spec.name, Stage::DWait, d_req, d0));
        events.push(event(&spec.name, Stage::D, d0, d1));
    }
    sh.learning_done.store(true, Ordering::Release);
    events
}

fn measurement(spec: &TaskSpec, horizon: f64, clock: &Clock) -> Vec<Event> {
    let mut events = Vec::new();
    for i in 0u64.. {
        let release = spec.offset_ms + i as f64 * spec.period_ms;
        if release >= horizon {
            break;
        }
        clock.sleep_until(release);
        let start = clock.now();
        clock.work(spec.duration(Stage::Measure));
        events.push(event(&spec.name, Stage::Measure, start, clock.now()));
    }
    events
}

pub(super) fn run(specs: &[TaskSpec], horizon_ms: f64, scale: f64) -> ScheduleTrace {
    let find = |k| specs.iter().find(|s| s.kind == k);
    let prop = find(TaskKind::Propagation).expect("validated");
    let learn = find(TaskKind::Learning);
    let meas = find(TaskKind::Measurement);
    let sh = Shared {
        flags: Mutex::new(Flags::default()),
        changed: Condvar::new(),
        learning_done: AtomicBool::new(learn.is_none()),
    };
    let clock = Clock {
        t0: Instant::now(),
        scale,
    };

    let (mut events, late) = thread::scope(|s| {
        let l = learn.map(|spec| s.spawn(|| learning(spec, prop, horizon_ms, &clock, &sh)));
        let m = meas.map(|spec| s.spawn(|| measurement(spec, horizon_ms, &clock)));
        let (mut events, late) = propagation(prop, horizon_ms, &clock, &sh);
        for h in [l, m].into_iter().flatten() {
            events.extend(h.join().expect("schedule worker panicked"));
        }
        (events, late)
    });

    sort_events(&mut events, specs);
    let jitter = Jitter {
        samples: late.len(),
        mean_ms: if late.is_empty() { 0.0 } else { late.iter().sum::<f64>() / late.len() as f64 },
        max_ms: late.iter().copied().fold(0.0, f64::max),
    };
    ScheduleTrace {
        events,
        horizon_ms,
        unschedulable: Vec::new(),
        jitter: Some(jitter),
    }
}
