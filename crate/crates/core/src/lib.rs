//! Continuous-time recurrent neural networks (CTRNN) trained online by truncated
//! dynamic back-propagation through time, together with the pieces needed to run
//! the torso-balance experiment: a force/moment cost, a simulated three-axis
//! prismatic torso, a propagation/learning scheduler and an experiment harness.
//!
//! The network and learner are generic over the scalar type (`f32` or `f64`);
//! the aliases at the crate root fix the precision used by the harness.

pub mod balance;
pub mod ctrnn;
pub mod error;
pub mod harness;
pub mod learn;
pub mod plant;
pub mod scalar;
pub mod sched;
pub mod tally;

pub use error::{Error, Result};
pub use scalar::Scalar;

pub use balance::{BalanceConfig, ErrorSignal, Wrench};
pub use ctrnn::{Activation, Connectivity, NetState, Network, Record, StateHistory, Topology};
pub use learn::{BackpropCosts, Gradients, LearningConfig, Snapshot};
pub use plant::{Axis, PerturbationScript, PlantState, Pulse, TorsoConfig};

pub type Network64 = Network<f64>;
pub type Network32 = Network<f32>;
pub type NetState64 = NetState<f64>;
pub type StateHistory64 = StateHistory<f64>;
pub type Snapshot64 = Snapshot<f64>;
pub type Gradients64 = Gradients<f64>;
pub type BackpropCosts64 = BackpropCosts<f64>;
pub type LearningConfig64 = LearningConfig<f64>;
