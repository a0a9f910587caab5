//! Deterministic discrete-event simulation of an SDN fabric.
//!
//! Time is integer nanoseconds and simultaneous events run in scheduling
//! order, so a scenario and seed fully determine the report. Each switch
//! serves one FIFO queue with a fixed service time, plus a per-pass cost for
//! packets that go through conntrack; links serialise at their bandwidth and
//! then add their latency.

mod engine;
mod metrics;
mod scenario;
mod traffic;

pub use engine::{run, SimError, Simulation};
pub use metrics::{
    Conservation, FloodMetrics, MetricsReport, PacketInCounts, PairMetrics, RuleSnapshot,
    SwitchMetrics,
};
pub use scenario::{
    CtTimeoutSpec, DetectionSpec, FlowPair, Scenario, SimConfig, TopologySpec, TrafficKind,
    TrafficSpec,
};
pub use traffic::{gen_syn_flood, gen_table_miss_flood};

pub use crate::topology::{LinkParams, Topology};

/// One switch, `n_hosts` hosts addressed 10.0.3.1 ..= 10.0.3.n.
pub fn build_flat(n_hosts: usize) -> Result<Topology, crate::topology::TopologyError> {
    Topology::build_flat(n_hosts, LinkParams::default())
}

/// Complete `fanout`-ary switch tree of the given depth with `fanout` hosts
/// on each leaf.
pub fn build_tree(depth: u32, fanout: u32) -> Result<Topology, crate::topology::TopologyError> {
    Topology::build_tree(depth, fanout, LinkParams::default())
}
