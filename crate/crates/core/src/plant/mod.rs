//! Three-axis prismatic torso on a six-axis force sensor.
//!
//! The sensor sits at `O0` on the fixed base `C0`. The torso body `C1` is
//! locked to it (rotation disabled) and carries three point masses, one per
//! axis, each moved along its prismatic joint by a position servo. `Y` points
//! up, so gravity is `(0, -g, 0)`.

mod script;

pub use script::{PerturbationScript, Pulse, DEFAULT_SCRIPT_VERSION, RAMP_S};

use serde::{Deserialize, Serialize};

use crate::balance::Wrench;
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Axis {
    X,
    Y,
    Z,
}

impl Axis {
    pub const ALL: [Axis; 3] = [Axis::X, Axis::Y, Axis::Z];

    pub fn index(self) -> usize {
        match self {
            Axis::X => 0,
            Axis::Y => 1,
            Axis::Z => 2,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AxisConfig {
    /// Moving mass, kg.
    pub mass: f64,
    /// Half stroke: the mass travels in `[-stroke, stroke]`, m.
    pub stroke: f64,
    /// Servo time constant `1/ω` of the critically damped position loop, s.
    /// `f64::INFINITY` disables the servo.
    pub servo_time_constant: f64,
    /// Damping ratio of the position loop; 1 is critical.
    #[serde(default = "unit_damping")]
    pub damping: f64,
}

fn unit_damping() -> f64 {
    1.0
}

/// Which body the reported wrench acts on.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SensorConvention {
    /// Effort of the support on the trunk.
    #[default]
    SupportOnTrunk,
    /// Effort of the trunk on the support (all components negated).
    TrunkOnSupport,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TorsoConfig {
    /// `m0`, the sensor-side base element, centred on `O0`.
    pub base_mass: f64,
    /// `m1`, the torso body.
    pub body_mass: f64,
    /// `m2`, `m3`, `m4`: the X, Y and Z compensation masses.
    pub axes: [AxisConfig; 3],
    /// Height of the torso body centre above `O0`, m.
    pub l1: f64,
    /// Height of the compensation masses above `O0`, m.
    pub l2: f64,
    /// Pitch inertia of the torso. Unused while rotation is locked.
    pub pitch_inertia: f64,
    pub gravity: f64,
    #[serde(default)]
    pub sensor: SensorConvention,
    /// Largest pulse amplitude a perturbation script may use, N.
    pub toppling_limit: f64,
}

impl Default for TorsoConfig {
    fn default() -> Self {
        let axis = |mass| AxisConfig {
            mass,
            stroke: 0.1,
            servo_time_constant: 0.3,
            damping: 1.0,
        };
        TorsoConfig {
            base_mass: 0.5,
            body_mass: 5.0,
            axes: [axis(2.0), axis(3.0), axis(2.5)],
            l1: 0.1,
            l2: 0.2,
            pitch_inertia: 0.28,
            gravity: 9.81,
            sensor: SensorConvention::SupportOnTrunk,
            toppling_limit: 60.0,
        }
    }
}

impl TorsoConfig {
    pub fn validate(&self) -> Result<()> {
        let masses = [self.base_mass, self.body_mass]
            .into_iter()
            .chain(self.axes.iter().map(|a| a.mass));
        for m in masses {
            if !(m > 0.0) || !m.is_finite() {
                return Err(Error::Config(format!("mass must be positive, got {m}")));
            }
        }
        for a in &self.axes {
            if !(a.stroke > 0.0) || !a.stroke.is_finite() {
                return Err(Error::Config(format!("stroke must be positive, got {}", a.stroke)));
            }
            if !(a.servo_time_constant > 0.0) {
                return Err(Error::Config("servo time constant must be positive".into()));
            }
            if !(a.damping >= 0.0) || !a.damping.is_finite() {
                return Err(Error::Config("servo damping must be finite and non-negative".into()));
            }
        }
        if !self.gravity.is_finite() || !self.toppling_limit.is_finite() || !(self.toppling_limit > 0.0) {
            return Err(Error::Config("gravity and toppling limit must be finite".into()));
        }
        Ok(())
    }

    pub fn total_mass(&self) -> f64 {
        self.base_mass + self.body_mass + self.axes.iter().map(|a| a.mass).sum::<f64>()
    }

    pub fn strokes(&self) -> [f64; 3] {
        self.axes.map(|a| a.stroke)
    }

    /// Y force read at rest: the same expression as [`sensor_wrench`] with no
    /// motion, so the rest reading cancels exactly.
    pub fn rest_force_y(&self) -> f64 {
        sensor_wrench(self, &PlantState::default(), [0.0; 3]).fy
    }

    /// Position of each compensation mass relative to `O0`.
    fn mass_positions(&self, p: &[f64; 3]) -> [[f64; 3]; 3] {
        [
            [p[0], self.l2, 0.0],
            [0.0, self.l2 + p[1], 0.0],
            [0.0, self.l2, p[2]],
        ]
    }
}

/// Per-axis position, velocity and acceleration of the compensation masses.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct PlantState {
    pub p: [f64; 3],
    pub v: [f64; 3],
    pub a: [f64; 3],
    pub t: f64,
}

/// Servo force on each mass for the given state and setpoints: the loop
/// `m (ω² (sp - p) - 2 ζ ω v)`, gravity compensated on Y.
pub fn servo_forces(cfg: &TorsoConfig, state: &PlantState, setpoints: [f64; 3]) -> [f64; 3] {
    std::array::from_fn(|i| {
        let ax = &cfg.axes[i];
        let omega = 1.0 / ax.servo_time_constant;
        let sp = setpoints[i].clamp(-ax.stroke, ax.stroke);
        ax.mass * (omega * omega * (sp - state.p[i]) - 2.0 * ax.damping * omega * state.v[i])
    })
}

/// Advances the masses by `dt` with semi-implicit Euler. External forces act
/// on the mass of their axis. A mass reaching its end stop is held there and
/// loses its outward velocity; the stored acceleration is the actual velocity
/// change over the step, stop reaction included.
pub fn step_plant(
    cfg: &TorsoConfig,
    state: &PlantState,
    setpoints: [f64; 3],
    ext: [f64; 3],
    dt: f64,
) -> Result<PlantState> {
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(Error::Config("plant dt must be positive".into()));
    }
    if setpoints.iter().chain(ext.iter()).any(|v| !v.is_finite()) {
        return Err(Error::NumericInput("plant setpoints or external force"));
    }
    let servo = servo_forces(cfg, state, setpoints);
    let mut next = *state;
    for i in 0..3 {
        let ax = &cfg.axes[i];
        let acc = (servo[i] + ext[i]) / ax.mass;
        let mut v = state.v[i] + acc * dt;
        let mut p = state.p[i] + v * dt;
        if p > ax.stroke {
            p = ax.stroke;
            v = v.min(0.0);
        } else if p < -ax.stroke {
            p = -ax.stroke;
            v = v.max(0.0);
        }
        next.p[i] = p;
        next.a[i] = (v - state.v[i]) / dt;
        next.v[i] = v;
    }
    next.t = state.t + dt;
    Ok(next)
}

fn cross(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

/// Wrench at `O0`:
/// `F = Σ m_i (γ_i - g) - F_ext`, `M = Σ (r_i × m_i γ_i - r_i × m_i g) - Σ r × F_ext`.
/// The base is fixed and centred on `O0`; the locked torso body has no
/// acceleration, so only the compensation masses contribute dynamics.
pub fn sensor_wrench(cfg: &TorsoConfig, state: &PlantState, ext: [f64; 3]) -> Wrench {
    let g = [0.0, -cfg.gravity, 0.0];
    let mut f = [0.0; 3];
    let mut m = [0.0; 3];

    let mut add_body = |mass: f64, r: [f64; 3], acc: [f64; 3]| {
        let inertial: [f64; 3] = std::array::from_fn(|k| mass * (acc[k] - g[k]));
        let moment = cross(r, inertial);
        for k in 0..3 {
            f[k] += inertial[k];
            m[k] += moment[k];
        }
    };
    add_body(cfg.base_mass, [0.0; 3], [0.0; 3]);
    add_body(cfg.body_mass, [0.0, cfg.l1, 0.0], [0.0; 3]);
    let positions = cfg.mass_positions(&state.p);
    for i in 0..3 {
        let mut acc = [0.0; 3];
        acc[i] = state.a[i];
        add_body(cfg.axes[i].mass, positions[i], acc);
    }
    for i in 0..3 {
        let mut force = [0.0; 3];
        force[i] = ext[i];
        let moment = cross(positions[i], force);
        for k in 0..3 {
            f[k] -= force[k];
            m[k] -= moment[k];
        }
    }
    let w = Wrench::from_parts(f, m);
    match cfg.sensor {
        SensorConvention::SupportOnTrunk => w,
        SensorConvention::TrunkOnSupport => Wrench::from_parts(f.map(|v| -v), m.map(|v| -v)),
    }
}

/// Total momentum of the compensation masses.
pub fn momentum(cfg: &TorsoConfig, state: &PlantState) -> [f64; 3] {
    std::array::from_fn(|i| cfg.axes[i].mass * state.v[i])
}
