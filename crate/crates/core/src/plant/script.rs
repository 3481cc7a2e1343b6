use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::Axis;
use crate::{Error, Result};

/// Version of the built-in scripts returned by
/// [`PerturbationScript::default_learning`] and [`PerturbationScript::default_eval`].
pub const DEFAULT_SCRIPT_VERSION: u32 = 1;

/// Rise and fall time of every pulse, s.
pub const RAMP_S: f64 = 0.05;

/// A push (positive amplitude) or pull along one axis. `duration_s` includes
/// both ramps.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Pulse {
    pub axis: Axis,
    pub start_s: f64,
    pub duration_s: f64,
    pub amplitude_n: f64,
}

impl Pulse {
    pub fn end_s(&self) -> f64 {
        self.start_s + self.duration_s
    }

    /// Force at `t`: cosine ramps of [`RAMP_S`] (shortened for very short
    /// pulses) around a flat plateau.
    pub fn force_at(&self, t: f64) -> f64 {
        let end = self.end_s();
        if t < self.start_s || t > end {
            return 0.0;
        }
        let ramp = RAMP_S.min(self.duration_s / 2.0);
        let shape = |u: f64| 0.5 * (1.0 - (PI * u).cos());
        let rise = t - self.start_s;
        let fall = end - t;
        let w = if rise < ramp {
            shape(rise / ramp)
        } else if fall < ramp {
            shape(fall / ramp)
        } else {
            1.0
        };
        self.amplitude_n * w
    }
}

/// External force schedule. Serialized as a bare JSON array of pulses.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PerturbationScript {
    pub pulses: Vec<Pulse>,
}

impl PerturbationScript {
    pub fn new(pulses: Vec<Pulse>) -> Self {
        PerturbationScript { pulses }
    }

    /// Checks pulse sanity, same-axis overlaps and the toppling bound.
    pub fn validate(&self, toppling_limit: f64) -> Result<()> {
        for p in &self.pulses {
            if !(p.start_s >= 0.0) || !(p.duration_s > 0.0) || !p.amplitude_n.is_finite() || !p.end_s().is_finite() {
                return Err(Error::Config(format!("malformed pulse {p:?}")));
            }
            if p.amplitude_n.abs() > toppling_limit {
                return Err(Error::Config(format!(
                    "pulse amplitude {} N exceeds toppling limit {toppling_limit} N",
                    p.amplitude_n
                )));
            }
        }
        for axis in Axis::ALL {
            let mut on_axis: Vec<_> = self.pulses.iter().filter(|p| p.axis == axis).collect();
            on_axis.sort_by(|a, b| a.start_s.total_cmp(&b.start_s));
            for pair in on_axis.windows(2) {
                if pair[1].start_s < pair[0].end_s() {
                    return Err(Error::Config(format!(
                        "overlapping {axis:?} pulses at {} s and {} s",
                        pair[0].start_s, pair[1].start_s
                    )));
                }
            }
        }
        Ok(())
    }

    /// Sum of the active pulses per axis at time `t` (s).
    pub fn eval(&self, t: f64) -> [f64; 3] {
        let mut f = [0.0; 3];
        for p in &self.pulses {
            f[p.axis.index()] += p.force_at(t);
        }
        f
    }

    /// End of the last pulse, s.
    pub fn end_s(&self) -> f64 {
        self.pulses.iter().map(Pulse::end_s).fold(0.0, f64::max)
    }

    /// Built-in learning campaign: alternating X/Z pulses of 20 to 40 N and
    /// 1 to 2 s, one every 3 s, covering 120 s.
    pub fn default_learning() -> Self {
        Self::campaign(40, 1.0, &[20.0, 35.0, -25.0, 40.0, -30.0, 25.0, -40.0], &[1.0, 1.5, 2.0, 1.25, 1.75])
    }

    /// Built-in held-out evaluation campaign, 30 s, with amplitudes and
    /// durations not used by [`Self::default_learning`].
    pub fn default_eval() -> Self {
        Self::campaign(10, 1.0, &[-22.0, 30.0, 38.0, -33.0, 27.0], &[1.1, 1.9, 1.4, 1.6])
    }

    fn campaign(count: usize, offset_s: f64, amplitudes: &[f64], durations: &[f64]) -> Self {
        let pulses = (0..count)
            .map(|k| Pulse {
                axis: if k % 2 == 0 { Axis::X } else { Axis::Z },
                start_s: offset_s + 3.0 * k as f64,
                duration_s: durations[k % durations.len()],
                amplitude_n: amplitudes[k % amplitudes.len()],
            })
            .collect();
        PerturbationScript { pulses }
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}
