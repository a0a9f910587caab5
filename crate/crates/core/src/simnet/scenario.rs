use alloc::string::String;
use alloc::vec::Vec;
use core::net::Ipv4Addr;
use core::time::Duration;

use serde::{Deserialize, Serialize};

use crate::agent::DetectionConfig;
use crate::conntrack::CtTimeouts;
use crate::control::Policy;
use crate::topology::{LinkParams, Topology, TopologyError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "params", rename_all = "lowercase")]
pub enum TopologySpec {
    Flat { hosts: usize },
    Tree { depth: u32, fanout: u32 },
}

impl TopologySpec {
    pub fn build(&self, params: LinkParams) -> Result<Topology, TopologyError> {
        match *self {
            TopologySpec::Flat { hosts } => Topology::build_flat(hosts, params),
            TopologySpec::Tree { depth, fanout } => Topology::build_tree(depth, fanout, params),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FlowPair {
    pub src: Ipv4Addr,
    pub dst: Ipv4Addr,
    #[serde(default = "default_benign_port")]
    pub dport: u16,
}

fn default_benign_port() -> u16 {
    5001
}

fn default_flood_sport() -> u16 {
    1024
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TrafficKind {
    /// Handshake, `bytes_per_flow` of payload paced at link rate, then FIN.
    BenignTcp {
        flows: Vec<FlowPair>,
        bytes_per_flow: u64,
    },
    /// `count` SYNs on one 4-tuple, `seq = 100 + i`, never completing.
    SynFlood {
        src: Ipv4Addr,
        dst: Ipv4Addr,
        #[serde(default = "default_flood_sport")]
        sport: u16,
        dport: u16,
        count: u64,
        /// Packets per second.
        rate: f64,
    },
    /// Forged UDP packets to random unknown destinations.
    TableMissFlood {
        src: Ipv4Addr,
        rate: f64,
        duration_s: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrafficSpec {
    #[serde(flatten)]
    pub kind: TrafficKind,
    #[serde(default)]
    pub start_s: f64,
    #[serde(default)]
    pub stop_s: Option<f64>,
}

/// Detector settings in scenario files, with durations in seconds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DetectionSpec {
    pub delta_threshold: f64,
    pub min_new_packets: u64,
    pub eval_interval_s: f64,
    pub window_s: f64,
    pub packet_in_rate_limit: u32,
    pub packet_in_burst: u32,
    pub cooldown_s: f64,
}

impl Default for DetectionSpec {
    fn default() -> Self {
        let d = DetectionConfig::default();
        DetectionSpec {
            delta_threshold: d.delta_threshold,
            min_new_packets: d.min_new_packets,
            eval_interval_s: d.eval_interval.as_secs_f64(),
            window_s: d.window.as_secs_f64(),
            packet_in_rate_limit: d.packet_in_rate_limit,
            packet_in_burst: d.packet_in_burst,
            cooldown_s: d.cooldown.as_secs_f64(),
        }
    }
}

fn secs(s: f64) -> Duration {
    if s.is_finite() && s > 0.0 {
        Duration::from_nanos((s * 1e9) as u64)
    } else {
        Duration::ZERO
    }
}

impl DetectionSpec {
    pub fn to_config(&self) -> DetectionConfig {
        DetectionConfig {
            delta_threshold: self.delta_threshold,
            min_new_packets: self.min_new_packets,
            eval_interval: secs(self.eval_interval_s),
            window: secs(self.window_s),
            packet_in_rate_limit: self.packet_in_rate_limit,
            packet_in_burst: self.packet_in_burst,
            cooldown: secs(self.cooldown_s),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CtTimeoutSpec {
    pub syn_s: f64,
    pub established_s: f64,
    pub closing_s: f64,
    pub udp_s: f64,
}

impl Default for CtTimeoutSpec {
    fn default() -> Self {
        let t = CtTimeouts::default();
        CtTimeoutSpec {
            syn_s: t.syn.as_secs_f64(),
            established_s: t.established.as_secs_f64(),
            closing_s: t.closing.as_secs_f64(),
            udp_s: t.udp.as_secs_f64(),
        }
    }
}

impl CtTimeoutSpec {
    pub fn to_timeouts(&self) -> CtTimeouts {
        CtTimeouts {
            syn: secs(self.syn_s),
            established: secs(self.established_s),
            closing: secs(self.closing_s),
            udp: secs(self.udp_s),
        }
    }
}

/// Simulator calibration. Absolute values only set the scale; results are
/// meant to be compared between runs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SimConfig {
    pub link_bandwidth_bps: u64,
    pub link_latency_ns: u64,
    /// Base switch service rate, packets per second.
    pub proc_rate_pps: u64,
    /// Extra service time per conntrack pass.
    pub ct_cost_ns: u64,
    /// Packets waiting per switch, excluding the one in service.
    pub queue_capacity: usize,
    /// Payload bytes per benign data segment.
    pub mss: u32,
    pub detection: DetectionSpec,
    pub ct_timeouts: CtTimeoutSpec,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            link_bandwidth_bps: 1_000_000_000,
            link_latency_ns: 100_000,
            proc_rate_pps: 1_000_000,
            ct_cost_ns: 200,
            queue_capacity: 10_000,
            mss: 1460,
            detection: DetectionSpec::default(),
            ct_timeouts: CtTimeoutSpec::default(),
        }
    }
}

impl SimConfig {
    pub fn link_params(&self) -> LinkParams {
        LinkParams {
            bandwidth_bps: self.link_bandwidth_bps,
            latency: Duration::from_nanos(self.link_latency_ns),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    #[serde(default)]
    pub name: String,
    pub topology: TopologySpec,
    pub policies: Vec<Policy>,
    pub traffic: Vec<TrafficSpec>,
    pub sdfw_enabled: bool,
    pub seed: u64,
    pub duration_s: f64,
    #[serde(default)]
    pub config: SimConfig,
}
