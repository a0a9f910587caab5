//! Stateful distributed firewall for simulated SDN fabrics.
//!
//! Every switch in the fabric carries its own flow table, connection tracker
//! and a local detection agent. The agent watches the ct-discriminated
//! permit rules of its switch, flags SYN floods when the ratio of `+new` to
//! `+est` traffic for a host pair crosses a threshold, and installs a
//! higher-priority drop rule for that pair. A small control plane (a
//! versioned key/value store with prefix watches and a policy compiler)
//! turns allow/deny intents into per-switch rules, and a deterministic
//! discrete-event simulator drives flat and tree fabrics end to end.
//!
//! The crate is `no_std` and only needs `alloc`. File formats, the CLI and
//! anything touching the OS live in the `sdfw` companion crate.

#![no_std]
#![forbid(unsafe_code)]

extern crate alloc;

pub mod agent;
pub mod conntrack;
pub mod control;
pub mod flow_table;
pub mod model;
pub mod simnet;
pub mod time;
pub mod topology;

pub use agent::{Decision, DetectionConfig, DfwAgent, Mitigation, Verdict};
pub use conntrack::{ConnKey, CtTable, CtTimeouts, Direction, TcpState};
pub use flow_table::{FlowMod, FlowTable, LookupResult};
pub use model::{Action, CtState, CtZone, FlowRule, MatchSpec, Packet, PacketHeader, Protocol};
pub use time::SimTime;
