use alloc::collections::BTreeSet;
use alloc::string::String;
use alloc::vec::Vec;
use core::net::Ipv4Addr;

use serde::{Deserialize, Serialize};

use super::policy::{validate_policies, Policy, PolicyAction, PolicyError, PolicyProto, PortSpec};
use crate::topology::{SwitchId, Topology};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum CompileError {
    #[error(transparent)]
    Policy(#[from] PolicyError),
    #[error("policy {policy}: no path from {src} to {dst}")]
    Unreachable {
        policy: String,
        src: Ipv4Addr,
        dst: Ipv4Addr,
    },
    #[error("policies {allow} and {deny} share priority {priority} and overlap partially on {src} -> {dst}")]
    AmbiguousOverlap {
        allow: String,
        deny: String,
        priority: u16,
        src: Ipv4Addr,
        dst: Ipv4Addr,
    },
}

/// Switch sequence realising one host pair of an edge.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PairPath {
    pub src: Ipv4Addr,
    pub dst: Ipv4Addr,
    pub switches: Vec<SwitchId>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PolicyEdge {
    pub policy_id: String,
    /// Indexes into [`PolicyGraph::nodes`].
    pub src_node: usize,
    pub dst_node: usize,
    pub proto: PolicyProto,
    pub dst_port: PortSpec,
    pub action: PolicyAction,
    pub priority: u16,
    pub stateful: bool,
    /// Allow: the full switch path per pair. Deny: the source's ingress
    /// switch only.
    pub paths: Vec<PairPath>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PolicyGraph {
    /// Endpoint groups, each sorted and deduplicated.
    pub nodes: Vec<Vec<Ipv4Addr>>,
    pub edges: Vec<PolicyEdge>,
}

impl PolicyGraph {
    pub fn edge(&self, policy_id: &str) -> Option<&PolicyEdge> {
        self.edges.iter().find(|e| e.policy_id == policy_id)
    }

    fn node(&mut self, group: &[Ipv4Addr]) -> usize {
        let set: BTreeSet<Ipv4Addr> = group.iter().copied().collect();
        let group: Vec<Ipv4Addr> = set.into_iter().collect();
        if let Some(i) = self.nodes.iter().position(|n| *n == group) {
            return i;
        }
        self.nodes.push(group);
        self.nodes.len() - 1
    }
}

fn sorted(ips: &[Ipv4Addr]) -> Vec<Ipv4Addr> {
    ips.iter()
        .copied()
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect()
}

/// Outcome of the equal-priority Deny check for one Allow pair.
enum Resolution {
    Keep,
    Suppressed,
}

fn resolve_pair(
    allow: &Policy,
    policies: &[Policy],
    src: Ipv4Addr,
    dst: Ipv4Addr,
) -> Result<Resolution, CompileError> {
    let mut res = Resolution::Keep;
    let rivals = policies.iter().filter(|d| {
        d.action == PolicyAction::Deny
            && d.priority == allow.priority
            && d.src.contains(&src)
            && d.dst.contains(&dst)
    });
    for deny in rivals {
        if deny.class_covers(allow) {
            res = Resolution::Suppressed;
        } else if deny.class_overlaps(allow) {
            return Err(CompileError::AmbiguousOverlap {
                allow: allow.id.clone(),
                deny: deny.id.clone(),
                priority: allow.priority,
                src,
                dst,
            });
        }
    }
    Ok(res)
}

/// Builds the conflict-resolved policy graph.
///
/// At equal priority a Deny whose class covers an Allow's class removes the
/// shared host pairs from the Allow edge; a partial equal-priority overlap
/// is rejected. Across priorities both edges stay and rule priority decides.
/// Hosts that are not attached to the topology are skipped, so a later
/// attach brings their rules in.
pub fn build_policy_graph(
    policies: &[Policy],
    topology: &Topology,
) -> Result<PolicyGraph, CompileError> {
    validate_policies(policies)?;
    let mut graph = PolicyGraph::default();
    for p in policies {
        let mut paths = Vec::new();
        for src in sorted(&p.src) {
            let Some(src_host) = topology.host_by_ip(src) else {
                continue;
            };
            for dst in sorted(&p.dst) {
                if src == dst {
                    continue;
                }
                match p.action {
                    PolicyAction::Deny => {
                        paths.push(PairPath {
                            src,
                            dst,
                            switches: alloc::vec![src_host.switch],
                        });
                    }
                    PolicyAction::Allow => {
                        let Some(dst_host) = topology.host_by_ip(dst) else {
                            continue;
                        };
                        if let Resolution::Suppressed = resolve_pair(p, policies, src, dst)? {
                            continue;
                        }
                        let switches = topology
                            .shortest_path(src_host.switch, dst_host.switch)
                            .ok_or_else(|| CompileError::Unreachable {
                                policy: p.id.clone(),
                                src,
                                dst,
                            })?;
                        paths.push(PairPath { src, dst, switches });
                    }
                }
            }
        }
        if paths.is_empty() {
            continue;
        }
        let src_node = graph.node(&p.src);
        let dst_node = graph.node(&p.dst);
        graph.edges.push(PolicyEdge {
            policy_id: p.id.clone(),
            src_node,
            dst_node,
            proto: p.proto,
            dst_port: p.dst_port,
            action: p.action,
            priority: p.priority,
            stateful: p.stateful && p.action == PolicyAction::Allow,
            paths,
        });
    }
    Ok(graph)
}
