use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::agent::{AgentReport, Decision, Mitigation};
use crate::model::RuleStats;
use crate::topology::SwitchId;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SwitchSnapshot {
    pub rules: Vec<(String, RuleStats)>,
    pub decisions: Vec<Decision>,
    pub mitigations: Vec<Mitigation>,
    pub n_packets: u64,
    pub n_bytes: u64,
    pub allowed_packet_ins: u64,
    pub throttled_packet_ins: u64,
}

/// Fabric-wide view keyed by switch.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct FabricStats {
    pub switches: BTreeMap<SwitchId, SwitchSnapshot>,
    pub total_packets: u64,
    pub total_bytes: u64,
    pub total_decisions: u64,
    pub total_mitigations: u64,
    pub total_throttled_packet_ins: u64,
}

/// Merges agent reports; several reports from one switch are concatenated.
pub fn aggregate_stats(reports: &[AgentReport]) -> FabricStats {
    let mut out = FabricStats::default();
    for r in reports {
        let snap = out.switches.entry(r.switch).or_default();
        let (pkts, bytes) = r
            .rules
            .iter()
            .fold((0, 0), |(p, b), (_, s)| (p + s.n_packets, b + s.n_bytes));
        snap.rules.extend(r.rules.iter().cloned());
        snap.decisions.extend(r.decisions.iter().cloned());
        snap.mitigations.extend(r.mitigations.iter().cloned());
        snap.n_packets += pkts;
        snap.n_bytes += bytes;
        snap.allowed_packet_ins += r.allowed_packet_ins;
        snap.throttled_packet_ins += r.throttled_packet_ins;
        out.total_packets += pkts;
        out.total_bytes += bytes;
        out.total_decisions += r.decisions.len() as u64;
        out.total_mitigations += r.mitigations.len() as u64;
        out.total_throttled_packet_ins += r.throttled_packet_ins;
    }
    out
}
