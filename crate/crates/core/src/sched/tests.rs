use proptest::prelude::*;

use super::*;

fn default_trace(horizon: f64) -> ScheduleTrace {
    run_schedule(&SchedConfig::default().specs(), horizon, Mode::Simulated).unwrap()
}

fn ev(task: &str, stage: Stage, s: f64, e: f64) -> Event {
    Event {
        task: task.into(),
        stage,
        t_start_ms: s,
        t_end_ms: e,
    }
}

fn trace_of(events: Vec<Event>) -> ScheduleTrace {
    ScheduleTrace {
        events,
        horizon_ms: 100.0,
        ..ScheduleTrace::default()
    }
}

/// Quadratic reference for [`check_exclusion`].
fn brute_force(trace: &ScheduleTrace) -> (usize, usize) {
    let ps: Vec<&Event> = trace.events.iter().filter(|e| e.stage == Stage::P).collect();
    let mut overlaps = 0;
    for e in trace.events.iter().filter(|e| matches!(e.stage, Stage::A | Stage::D)) {
        for p in &ps {
            let lo = e.t_start_ms.max(p.t_start_ms);
            let hi = e.t_end_ms.min(p.t_end_ms);
            if hi > lo {
                overlaps += 1;
            }
        }
    }
    let mut ordering = 0;
    for (i, d) in trace.events.iter().enumerate().filter(|(_, e)| e.stage == Stage::D) {
        let request = trace.events[..i]
            .iter()
            .rev()
            .find(|w| w.task == d.task && w.stage == Stage::DWait)
            .filter(|w| w.t_end_ms == d.t_start_ms)
            .map_or(d.t_start_ms, |w| w.t_start_ms);
        let first_after = ps
            .iter()
            .filter(|p| p.t_start_ms >= request)
            .min_by(|a, b| a.t_start_ms.total_cmp(&b.t_start_ms));
        if !first_after.is_some_and(|p| p.t_end_ms <= d.t_start_ms) {
            ordering += 1;
        }
    }
    (overlaps, ordering)
}

fn count(v: &[Violation], kind: ViolationKind) -> usize {
    v.iter().filter(|x| x.kind == kind).count()
}

#[test]
fn default_phase_waits() {
    let trace = default_trace(200.0);
    let spans = trace.learning_spans("learning");
    assert_eq!(spans.len(), 2);
    let s = spans[0];
    assert_eq!(s.request_ms, 9.0);
    assert_eq!((s.a_wait, s.a, s.b, s.c, s.d), (3.0, 4.0, 19.0, 21.0, 1.0));
    // C ends at 56; the next P runs 60..62
    assert_eq!(s.d_wait, 6.0);
    assert_eq!(s.total(), 54.0);
    assert_eq!(spans[1], LearningSpan { request_ms: 109.0, ..s });
}

#[test]
fn a_starts_at_once_when_it_fits_before_the_next_release() {
    let cfg = SchedConfig {
        learning_offset: 3.0,
        ..SchedConfig::default()
    };
    let trace = run_schedule(&cfg.specs(), 100.0, Mode::Simulated).unwrap();
    let s = trace.learning_spans("learning")[0];
    assert_eq!(s.a_wait, 0.0);
    // A 3..7, B 7..26, C 26..47, next P released 50
    assert_eq!(s.d_wait, 5.0);
    assert_eq!(s.total(), 50.0);
}

#[test]
fn zero_durations_leave_only_waits() {
    let cfg = SchedConfig {
        a: 0.0,
        b: 0.0,
        c: 0.0,
        d: 0.0,
        learning_offset: 11.0,
        ..SchedConfig::default()
    };
    let trace = run_schedule(&cfg.specs(), 100.0, Mode::Simulated).unwrap();
    let s = trace.learning_spans("learning")[0];
    // request inside P (10..12): A waits for its end, D for the next P (20..22)
    assert_eq!((s.a_wait, s.d_wait), (1.0, 10.0));
    assert_eq!(s.total(), s.a_wait + s.d_wait);
    assert!(check_exclusion(&trace).is_empty());
}

#[test]
fn default_schedule_has_no_violations() {
    let trace = default_trace(100_000.0);
    assert!(trace.unschedulable.is_empty(), "{:?}", trace.unschedulable);
    assert!(check_exclusion(&trace).is_empty());
    assert_eq!(brute_force(&trace), (0, 0));
    assert_eq!(trace.learning_spans("learning").len(), 1000);
}

#[test]
fn every_wait_event_is_emitted() {
    let trace = default_trace(1000.0);
    let aw = trace.of_stage(Stage::AWait).count();
    let dw = trace.of_stage(Stage::DWait).count();
    let d = trace.of_stage(Stage::D).count();
    assert_eq!((aw, dw), (d, d));
    assert_eq!(trace.of_stage(Stage::P).count(), 100);
    assert_eq!(trace.of_stage(Stage::Measure).count(), 1000);
}

#[test]
fn per_task_events_do_not_overlap_and_starts_are_sorted() {
    let trace = default_trace(5000.0);
    assert!(trace.events.windows(2).all(|w| w[0].t_start_ms <= w[1].t_start_ms));
    for task in ["measurement", "propagation", "learning"] {
        let ev: Vec<_> = trace.events.iter().filter(|e| e.task == task).collect();
        assert!(ev.windows(2).all(|w| w[0].t_end_ms <= w[1].t_start_ms), "{task}");
    }
}

#[test]
fn simulated_mode_is_deterministic() {
    let (a, b) = (default_trace(20_000.0), default_trace(20_000.0));
    assert_eq!(a, b);
    let (mut x, mut y) = (Vec::new(), Vec::new());
    a.write_csv(&mut x).unwrap();
    b.write_csv(&mut y).unwrap();
    assert_eq!(x, y);
}

#[test]
fn csv_round_trip() {
    let trace = default_trace(300.0);
    let mut buf = Vec::new();
    trace.write_csv(&mut buf).unwrap();
    let text = String::from_utf8(buf.clone()).unwrap();
    assert!(text.starts_with("task,stage,t_start_ms,t_end_ms\n"));
    assert!(text.contains("learning,A',9,12\n"));
    let back = ScheduleTrace::read_csv(&buf[..]).unwrap();
    assert_eq!(back.events, trace.events);
}

#[test]
fn compliant_hand_trace_passes() {
    let t = trace_of(vec![
        ev("prop", Stage::P, 0.0, 2.0),
        ev("learn", Stage::AWait, 1.0, 2.0),
        ev("learn", Stage::A, 2.0, 6.0),
        ev("prop", Stage::P, 10.0, 12.0),
        ev("learn", Stage::DWait, 8.0, 12.0),
        ev("learn", Stage::D, 12.0, 13.0),
    ]);
    assert!(check_exclusion(&t).is_empty());
}

#[test]
fn one_millisecond_overlap_is_one_violation() {
    let t = trace_of(vec![
        ev("prop", Stage::P, 0.0, 2.0),
        ev("learn", Stage::A, 1.0, 5.0),
        ev("prop", Stage::P, 10.0, 12.0),
    ]);
    let v = check_exclusion(&t);
    assert_eq!(v.len(), 1);
    assert_eq!(v[0].kind, ViolationKind::Overlap);
    assert_eq!(v[0].p_start_ms, Some(0.0));
}

#[test]
fn d_without_post_request_propagation_is_flagged() {
    // the only P started before the request
    let t = trace_of(vec![
        ev("prop", Stage::P, 0.0, 2.0),
        ev("learn", Stage::DWait, 1.0, 2.0),
        ev("learn", Stage::D, 2.0, 3.0),
    ]);
    let v = check_exclusion(&t);
    assert_eq!(count(&v, ViolationKind::DOrdering), 1);
    assert_eq!(count(&v, ViolationKind::Overlap), 0);
}

#[test]
fn unschedulable_specs_are_reported_and_traced() {
    let cfg = SchedConfig {
        a: 9.0,
        ..SchedConfig::default()
    };
    let trace = run_schedule(&cfg.specs(), 1000.0, Mode::Simulated).unwrap();
    assert!(trace.unschedulable.iter().any(|r| r.contains("A (9 ms)")), "{:?}", trace.unschedulable);
    assert!(!trace.events.is_empty());
    let v = check_exclusion(&trace);
    assert!(count(&v, ViolationKind::Overlap) > 0);
    assert_eq!(brute_force(&trace), (count(&v, ViolationKind::Overlap), count(&v, ViolationKind::DOrdering)));
}

#[test]
fn overrunning_learning_is_reported() {
    let cfg = SchedConfig {
        learning_period: 40.0,
        ..SchedConfig::default()
    };
    let trace = run_schedule(&cfg.specs(), 1000.0, Mode::Simulated).unwrap();
    assert!(trace.unschedulable.iter().any(|r| r.contains("learning cycle")));
    assert!(check_exclusion(&trace).is_empty());
}

#[test]
fn invalid_specs_are_rejected() {
    let mut specs = SchedConfig::default().specs();
    specs[1].period_ms = 0.0;
    assert!(run_schedule(&specs, 10.0, Mode::Simulated).is_err());
    let mut specs = SchedConfig::default().specs();
    specs[2].stages[1].1 = -1.0;
    assert!(run_schedule(&specs, 10.0, Mode::Simulated).is_err());
    let mut specs = SchedConfig::default().specs();
    specs.remove(1);
    assert!(run_schedule(&specs, 10.0, Mode::Simulated).is_err());
    let mut specs = SchedConfig::default().specs();
    specs[2].stages.swap(0, 1);
    assert!(run_schedule(&specs, 10.0, Mode::Simulated).is_err());
}

#[test]
fn config_text_round_trip_and_errors() {
    let text = "# Fig durations\nP = 2\nA=4\n  B = 19 # comment\nperiod.learning = 200\n";
    let cfg = SchedConfig::parse(text).unwrap();
    assert_eq!(cfg.learning_period, 200.0);
    assert_eq!(cfg.c, 21.0);
    assert_eq!(SchedConfig::parse(&cfg.to_text()).unwrap(), cfg);
    assert!(SchedConfig::parse("Q = 1").is_err());
    assert!(SchedConfig::parse("A = x").is_err());
    assert!(SchedConfig::parse("A 4").is_err());
    assert!(SchedConfig::parse("A = 1\nA = 2").is_err());
}

#[test]
fn utilization_of_propagation() {
    let trace = default_trace(1000.0);
    assert!((trace.utilization("propagation") - 0.2).abs() < 1e-12);
}

#[test]
fn threaded_mode_keeps_exclusion() {
    let trace = run_schedule(&SchedConfig::default().specs(), 300.0, Mode::Threaded { time_scale: 0.5 }).unwrap();
    let v = check_exclusion(&trace);
    assert!(v.is_empty(), "{v:?}");
    assert_eq!(trace.learning_spans("learning").len(), 3);
    let j = trace.jitter.unwrap();
    assert!(j.samples >= 30);
    assert!(j.max_ms >= j.mean_ms && j.mean_ms >= 0.0);
}

#[test]
fn op_counts_small_and_scaling() {
    let one = op_count_model(1, 1).unwrap();
    assert!(one.prop_macs > 0 && one.learn_macs > 0);
    for n in [10, 20, 40] {
        let a = op_count_model(n, 10).unwrap();
        let b = op_count_model(2 * n, 10).unwrap();
        let r = b.prop_macs as f64 / a.prop_macs as f64;
        assert!((r - 4.0).abs() <= 0.4, "n={n} ratio {r}");
        let w = op_count_model(n, 20).unwrap();
        let r = w.learn_macs as f64 / a.learn_macs as f64;
        assert!((r - 2.0).abs() <= 0.2, "n={n} ratio {r}");
    }
    assert!(op_count_model(0, 1).is_err());
    assert!(op_count_model(3, 0).is_err());
}

#[test]
fn prop_count_matches_connection_count() {
    // n weights plus bias-free bookkeeping of two per neuron
    let c = op_count_model(7, 1).unwrap();
    assert_eq!(c.prop_macs, 7 * 7 + 2 * 7);
}

#[test]
fn proportional_fit_is_exact_on_exact_data() {
    let xs = [1.0, 2.0, 5.0];
    let ys = [3.0, 6.0, 15.0];
    let f = fit_proportional(&xs, &ys);
    assert!((f.coef - 3.0).abs() < 1e-12);
    assert!((f.r2 - 1.0).abs() < 1e-12);
    let f = fit_proportional(&xs, &[1.0, -1.0, 1.0]);
    assert!(f.r2 < 0.5);
}

fn fuzz_trace() -> impl Strategy<Value = ScheduleTrace> {
    let stage = prop::sample::select(vec![Stage::P, Stage::A, Stage::D, Stage::DWait, Stage::B]);
    prop::collection::vec((stage, 0u32..200, 0u32..12), 1..60).prop_map(|raw| {
        // P intervals on their own executor must not overlap one another
        let mut p_free = 0.0;
        let mut events = Vec::new();
        let mut raw = raw;
        raw.sort_by_key(|r| r.1);
        for (stage, s, d) in raw {
            let (s, d) = (s as f64 * 0.5, d as f64 * 0.5);
            if stage == Stage::P {
                let s = s.max(p_free);
                p_free = s + d.max(0.5);
                events.push(ev("prop", stage, s, s + d.max(0.5)));
            } else {
                events.push(ev("learn", stage, s, s + d));
            }
        }
        events.sort_by(|a, b| a.t_start_ms.total_cmp(&b.t_start_ms));
        trace_of(events)
    })
}

proptest! {
    #[test]
    fn check_exclusion_agrees_with_brute_force(trace in fuzz_trace()) {
        let v = check_exclusion(&trace);
        prop_assert_eq!(brute_force(&trace), (count(&v, ViolationKind::Overlap), count(&v, ViolationKind::DOrdering)));
    }

    #[test]
    fn simulated_schedules_are_compliant(
        offset in 0u32..200,
        a in 0u32..9, b in 0u32..40, c in 0u32..40, d in 0u32..9,
        p in 1u32..3,
    ) {
        let cfg = SchedConfig {
            a: a as f64, b: b as f64, c: c as f64, d: d as f64, p: p as f64,
            learning_offset: offset as f64 * 0.5,
            ..SchedConfig::default()
        };
        let trace = run_schedule(&cfg.specs(), 2000.0, Mode::Simulated).unwrap();
        if trace.unschedulable.iter().all(|r| r.contains("learning cycle")) {
            prop_assert!(check_exclusion(&trace).is_empty());
        }
    }
}
