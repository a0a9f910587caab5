use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::graph::{PairPath, PolicyEdge, PolicyGraph};
use super::policy::PolicyAction;
use crate::flow_table::{FlowEntry, FlowMod, MissPolicy};
use crate::model::{Action, CtMatch, CtZone, MatchSpec, PortId};
use crate::topology::{SwitchId, Topology};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CompileMode {
    /// Stateful Allow policies get the conntrack pipeline.
    #[default]
    Stateful,
    /// Every Allow compiles to a single Output rule.
    Stateless,
}

/// Everything one switch needs: its table-miss behaviour and its rules.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct SwitchProgram {
    pub miss_policy: MissPolicy,
    pub entries: Vec<FlowEntry>,
}

impl SwitchProgram {
    pub fn flow_mods(&self) -> Vec<FlowMod> {
        self.entries.iter().cloned().map(FlowMod::Add).collect()
    }

    /// Adds `entry`, replacing an entry with the same priority and match the
    /// way a flow table would.
    fn push(&mut self, entry: FlowEntry) {
        match self
            .entries
            .iter_mut()
            .find(|e| e.priority == entry.priority && e.match_spec == entry.match_spec)
        {
            Some(e) => *e = entry,
            None => self.entries.push(entry),
        }
    }
}

fn hop_ports(topology: &Topology, path: &PairPath, i: usize) -> Option<(PortId, PortId)> {
    let sw = path.switches[i];
    let in_port = match i {
        0 => topology.host_by_ip(path.src)?.port,
        _ => topology.port_towards(sw, path.switches[i - 1])?,
    };
    let out_port = if i + 1 == path.switches.len() {
        topology.host_by_ip(path.dst)?.port
    } else {
        topology.port_towards(sw, path.switches[i + 1])?
    };
    Some((in_port, out_port))
}

fn base_spec(edge: &PolicyEdge, path: &PairPath) -> MatchSpec {
    let mut m = MatchSpec::any().ip_src(path.src).ip_dst(path.dst);
    if let Some(p) = edge.proto.exact() {
        m = m.protocol(p);
    }
    if let Some(p) = edge.dst_port.exact() {
        m = m.tp_dst(p);
    }
    m
}

/// Rules one switch hop needs to forward an Allow edge's pair.
pub fn allow_hop_entries(
    priority: u16,
    spec: MatchSpec,
    out: PortId,
    stateful: bool,
) -> Vec<FlowEntry> {
    if !stateful {
        return vec![FlowEntry::new(priority, spec, vec![Action::Output(out)])];
    }
    let ct = Action::SendToConntrack {
        zone: CtZone(0),
        recirculate_table: 0,
    };
    vec![
        FlowEntry::new(priority, spec.ct(CtMatch::untracked()), vec![ct]),
        FlowEntry::new(
            priority,
            spec.ct(CtMatch::new_conn()),
            vec![Action::CommitAndOutput(out)],
        ),
        FlowEntry::new(
            priority,
            spec.ct(CtMatch::established()),
            vec![Action::Output(out)],
        ),
    ]
}

/// Lowers a policy graph to per-switch programs. Every switch of the
/// topology gets a program, even an empty one, with a PacketIn table miss.
///
/// Allow pairs get rules on every switch of their path, matching the ingress
/// port of that hop; Deny pairs get one Drop rule on the source's ingress
/// switch, without an ingress port so it also catches spoofed arrivals.
pub fn compile_to_flow_rules(
    graph: &PolicyGraph,
    topology: &Topology,
    mode: CompileMode,
) -> BTreeMap<SwitchId, SwitchProgram> {
    let mut out: BTreeMap<SwitchId, SwitchProgram> = topology
        .switches()
        .map(|s| (s, SwitchProgram::default()))
        .collect();
    for edge in &graph.edges {
        for path in &edge.paths {
            let spec = base_spec(edge, path);
            match edge.action {
                PolicyAction::Deny => {
                    let entry = FlowEntry::new(edge.priority, spec, vec![Action::Drop]);
                    out.entry(path.switches[0]).or_default().push(entry);
                }
                PolicyAction::Allow => {
                    let stateful = edge.stateful && mode == CompileMode::Stateful;
                    for (i, sw) in path.switches.iter().enumerate() {
                        // Paths come from the same topology, so every hop
                        // has its ports.
                        let Some((in_port, out_port)) = hop_ports(topology, path, i) else {
                            continue;
                        };
                        let prog = out.entry(*sw).or_default();
                        for e in allow_hop_entries(
                            edge.priority,
                            spec.in_port(in_port),
                            out_port,
                            stateful,
                        ) {
                            prog.push(e);
                        }
                    }
                }
            }
        }
    }
    out
}
