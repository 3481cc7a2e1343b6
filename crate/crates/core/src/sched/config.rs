use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::{Stage, TaskKind, TaskSpec};
use crate::{Error, Result};

/// Stage durations and task periods in milliseconds.
///
/// The text form is one `key = value` per line; `#` starts a comment.
/// Keys: `P`, `A`, `B`, `C`, `D`, `measure`, `period.measurement`,
/// `period.propagation`, `period.learning`, `offset.propagation`,
/// `offset.learning`, `horizon`. Missing keys keep their defaults.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SchedConfig {
    pub p: f64,
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
    pub measure: f64,
    pub measurement_period: f64,
    pub propagation_period: f64,
    pub learning_period: f64,
    pub propagation_offset: f64,
    /// First learning request. The default falls 3 ms before the end of the
    /// second propagation.
    pub learning_offset: f64,
    pub horizon: f64,
}

impl Default for SchedConfig {
    fn default() -> Self {
        SchedConfig {
            p: 2.0,
            a: 4.0,
            b: 19.0,
            c: 21.0,
            d: 1.0,
            measure: 0.0,
            measurement_period: 1.0,
            propagation_period: 10.0,
            learning_period: 100.0,
            propagation_offset: 0.0,
            learning_offset: 9.0,
            horizon: 1000.0,
        }
    }
}

const KEYS: [&str; 12] = [
    "P",
    "A",
    "B",
    "C",
    "D",
    "measure",
    "period.measurement",
    "period.propagation",
    "period.learning",
    "offset.propagation",
    "offset.learning",
    "horizon",
];

impl SchedConfig {
    fn slot(&mut self, key: &str) -> Option<&mut f64> {
        Some(match key {
            "P" => &mut self.p,
            "A" => &mut self.a,
            "B" => &mut self.b,
            "C" => &mut self.c,
            "D" => &mut self.d,
            "measure" => &mut self.measure,
            "period.measurement" => &mut self.measurement_period,
            "period.propagation" => &mut self.propagation_period,
            "period.learning" => &mut self.learning_period,
            "offset.propagation" => &mut self.propagation_offset,
            "offset.learning" => &mut self.learning_offset,
            "horizon" => &mut self.horizon,
            _ => return None,
        })
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = SchedConfig::default();
        let mut seen = BTreeMap::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected key = value", lineno + 1)))?;
            let key = key.trim();
            let value: f64 = value
                .trim()
                .parse()
                .map_err(|_| Error::Config(format!("line {}: bad number {:?}", lineno + 1, value.trim())))?;
            if seen.insert(key.to_string(), lineno).is_some() {
                return Err(Error::Config(format!("line {}: duplicate key {key}", lineno + 1)));
            }
            *cfg
                .slot(key)
                .ok_or_else(|| Error::Config(format!("line {}: unknown key {key}", lineno + 1)))? = value;
        }
        Ok(cfg)
    }

    pub fn to_text(&self) -> String {
        let mut copy = self.clone();
        let mut out = String::new();
        for key in KEYS {
            let v = *copy.slot(key).expect("known key");
            let _ = writeln!(out, "{key} = {v}");
        }
        out
    }

    pub fn specs(&self) -> Vec<TaskSpec> {
        vec![
            TaskSpec {
                name: "measurement".into(),
                kind: TaskKind::Measurement,
                period_ms: self.measurement_period,
                offset_ms: 0.0,
                stages: vec![(Stage::Measure, self.measure)],
                priority: 0,
            },
            TaskSpec {
                name: "propagation".into(),
                kind: TaskKind::Propagation,
                period_ms: self.propagation_period,
                offset_ms: self.propagation_offset,
                stages: vec![(Stage::P, self.p)],
                priority: 1,
            },
            TaskSpec {
                name: "learning".into(),
                kind: TaskKind::Learning,
                period_ms: self.learning_period,
                offset_ms: self.learning_offset,
                stages: vec![(Stage::A, self.a), (Stage::B, self.b), (Stage::C, self.c), (Stage::D, self.d)],
                priority: 2,
            },
        ]
    }
}
