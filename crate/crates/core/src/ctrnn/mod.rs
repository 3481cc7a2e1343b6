//! Network representation and discrete propagation.

mod activation;
mod history;
mod network;
mod topology;

pub use activation::Activation;
pub use history::{NetState, Record, StateHistory};
pub(crate) use network::clamp_time_constant;
pub use network::{Network, NetworkDoc, NetworkInit, ParamId, Step};
pub use topology::{Connectivity, Topology};

#[cfg(test)]
mod tests;
