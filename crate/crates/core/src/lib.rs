//! Discrete-event MANET simulator: DSR source routing, selfish forwarders,
//! and a neighbourhood reputation layer that grades nodes from overheard
//! forwarding behaviour and punishes them in proportion.

pub mod config;
pub mod dsr;
pub mod engine;
pub mod metrics;
pub mod mirror;
pub mod mobility;
pub mod radio;
pub mod scenario;
pub mod sim;
pub mod sweep;

use std::fmt;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct NodeId(pub u32);

impl NodeId {
    /// Destination of link-local broadcasts.
    pub const BROADCAST: NodeId = NodeId(u32::MAX);

    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

pub use config::{ConfigError, Protocol, RunConfig};
pub use engine::SimTime;
pub use metrics::{Counters, DropCause, RunResult};
pub use sim::Simulation;
