use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;
use core::net::Ipv4Addr;

use serde::{Deserialize, Serialize};

use crate::agent::{Decision, Mitigation};
use crate::topology::SwitchId;

/// Where every injected packet ended up. The categories partition the
/// injected packets.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Conservation {
    pub injected: u64,
    pub delivered: u64,
    pub dropped_by_rule: u64,
    pub dropped_by_mitigation: u64,
    pub throttled_miss: u64,
    /// Table misses handed to the controller.
    pub to_controller: u64,
    pub lost_to_queue_overflow: u64,
    /// Sent towards a down link or a host it was not addressed to.
    pub unroutable: u64,
    pub in_flight_at_end: u64,
}

impl Conservation {
    pub fn accounted(&self) -> u64 {
        self.delivered
            + self.dropped_by_rule
            + self.dropped_by_mitigation
            + self.throttled_miss
            + self.to_controller
            + self.lost_to_queue_overflow
            + self.unroutable
            + self.in_flight_at_end
    }

    pub fn holds(&self) -> bool {
        self.accounted() == self.injected
    }
}

/// One benign TCP transfer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairMetrics {
    pub src: Ipv4Addr,
    pub dst: Ipv4Addr,
    pub data_packets_sent: u64,
    pub data_packets_delivered: u64,
    pub delivered_payload_bytes: u64,
    pub established: bool,
    /// Delivered payload bits over the time from the SYN to the last
    /// delivered data segment.
    pub goodput_bps: f64,
    /// Mean one-way delay of delivered data segments.
    pub mean_latency_s: f64,
}

/// Fate of the packets of one flood traffic source.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FloodMetrics {
    pub kind: String,
    pub src: Ipv4Addr,
    pub dst: Option<Ipv4Addr>,
    pub sent: u64,
    pub delivered: u64,
    pub dropped_by_rule: u64,
    pub dropped_by_mitigation: u64,
    pub throttled: u64,
    pub to_controller: u64,
    pub lost_to_queue_overflow: u64,
    /// Packets injected after the first mitigation against this source.
    pub sent_after_mitigation: u64,
    pub delivered_after_mitigation: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RuleSnapshot {
    pub priority: u16,
    pub fields: String,
    pub actions: String,
    pub n_packets: u64,
    pub n_bytes: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SwitchMetrics {
    pub processed: u64,
    pub max_queue: usize,
    pub ct_entries: usize,
    pub table_misses: u64,
    pub rules: Vec<RuleSnapshot>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PacketInCounts {
    pub to_controller: u64,
    pub throttled: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub scenario: String,
    pub seed: u64,
    pub sdfw_enabled: bool,
    pub duration_s: f64,
    pub events_processed: u64,
    pub pairs: Vec<PairMetrics>,
    pub mean_goodput_bps: f64,
    pub mean_latency_s: f64,
    /// From the first SYN flood's start to the first mitigation install.
    pub detection_time_s: Option<f64>,
    pub decisions: Vec<Decision>,
    pub mitigations: Vec<Mitigation>,
    pub packet_in_count: u64,
    pub packet_ins_by_src: BTreeMap<Ipv4Addr, PacketInCounts>,
    pub dropped_by_mitigation: u64,
    pub floods: Vec<FloodMetrics>,
    pub conservation: Conservation,
    pub switches: BTreeMap<SwitchId, SwitchMetrics>,
    /// Decisions and mitigations per switch as seen by the fabric-wide
    /// aggregation.
    pub fabric_decisions: u64,
    pub fabric_mitigations: u64,
}

impl MetricsReport {
    pub fn pair(&self, src: Ipv4Addr, dst: Ipv4Addr) -> Option<&PairMetrics> {
        self.pairs.iter().find(|p| p.src == src && p.dst == dst)
    }
}
