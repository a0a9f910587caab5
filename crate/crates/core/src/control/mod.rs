//! Controller-side services: the NIB, policy compilation, conflict analysis
//! and topology event handling.

mod compile;
pub mod conflict;
mod graph;
pub mod nib;
pub mod policy;
mod stats;

use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::net::Ipv4Addr;

use serde::{Deserialize, Serialize};

pub use compile::{allow_hop_entries, compile_to_flow_rules, CompileMode, SwitchProgram};
pub use conflict::{detect_conflicts, Conflict, ConflictKind, ConflictParty};
pub use graph::{build_policy_graph, CompileError, PairPath, PolicyEdge, PolicyGraph};
pub use nib::{Nib, NibError, NibRecord, NibUpdate, WatchId};
pub use policy::{validate_policies, Policy, PolicyAction, PolicyError, PolicyProto, PortSpec};
pub use stats::{aggregate_stats, FabricStats, SwitchSnapshot};

use crate::agent::{Decision, Mitigation};
use crate::flow_table::{FlowEntry, FlowMod, Selector};
use crate::model::PortId;
use crate::topology::{LinkParams, SwitchId, Topology, TopologyError};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct JoinLink {
    pub port: PortId,
    pub peer: SwitchId,
    pub peer_port: PortId,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "event", rename_all = "snake_case")]
pub enum TopologyEvent {
    PortUp {
        switch: SwitchId,
        port: PortId,
    },
    PortDown {
        switch: SwitchId,
        port: PortId,
    },
    SwitchJoin {
        switch: SwitchId,
        links: Vec<JoinLink>,
    },
    SwitchLeave {
        switch: SwitchId,
    },
    HostAttach {
        ip: Ipv4Addr,
        switch: SwitchId,
        port: PortId,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ControlError {
    #[error(transparent)]
    Topology(#[from] TopologyError),
    #[error(transparent)]
    Compile(#[from] CompileError),
    #[error(transparent)]
    Nib(#[from] NibError),
    #[error("switch {0} is already part of the topology")]
    SwitchExists(SwitchId),
}

/// What a topology event changed.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct TopologyUpdate {
    /// NIB keys written, with their new versions.
    pub nib_writes: Vec<(String, u64)>,
    /// Rule changes for switches whose program differs, also published
    /// under `/rules/<switch>`.
    pub flow_mods: BTreeMap<SwitchId, Vec<FlowMod>>,
}

impl TopologyUpdate {
    pub fn flow_mod_count(&self) -> usize {
        self.flow_mods.values().map(Vec::len).sum()
    }
}

/// Delete/Add pairs turning `old` into `new`.
pub fn diff_programs(old: &[FlowEntry], new: &[FlowEntry]) -> Vec<FlowMod> {
    let mut mods = Vec::new();
    for e in old.iter().filter(|e| !new.contains(e)) {
        mods.push(FlowMod::Delete(Selector::strict(e.priority, e.match_spec)));
    }
    for e in new.iter().filter(|e| !old.contains(e)) {
        mods.push(FlowMod::Add(e.clone()));
    }
    mods
}

fn render_mods(mods: &[FlowMod]) -> String {
    let lines: Vec<String> = mods.iter().map(|m| m.to_string()).collect();
    lines.join("\n")
}

/// The controller: owns the NIB, the topology view, the policy set and the
/// programs last pushed to each switch.
#[derive(Debug, Clone)]
pub struct ControlPlane {
    nib: Nib,
    topology: Topology,
    policies: Vec<Policy>,
    mode: CompileMode,
    programs: BTreeMap<SwitchId, SwitchProgram>,
}

impl ControlPlane {
    /// Compiles the initial policy set and publishes topology, policies and
    /// rules.
    pub fn new(
        topology: Topology,
        policies: Vec<Policy>,
        mode: CompileMode,
    ) -> Result<Self, ControlError> {
        let graph = build_policy_graph(&policies, &topology)?;
        let programs = compile_to_flow_rules(&graph, &topology, mode);
        let mut cp = ControlPlane {
            nib: Nib::new(),
            topology,
            policies,
            mode,
            programs,
        };
        let switches: Vec<SwitchId> = cp.topology.switches().collect();
        for s in switches {
            cp.nib
                .put(&alloc::format!("/topology/switches/{}", s.0), "up")?;
        }
        let hosts: Vec<(Ipv4Addr, SwitchId, PortId)> = cp
            .topology
            .hosts()
            .map(|h| (h.ip, h.switch, h.port))
            .collect();
        for (ip, s, p) in hosts {
            cp.nib.put(
                &alloc::format!("/topology/hosts/{ip}"),
                alloc::format!("{s}:{p}"),
            )?;
        }
        for p in &cp.policies {
            cp.nib
                .put(&alloc::format!("/policies/{}", p.id), p.to_string())?;
        }
        for (s, prog) in &cp.programs {
            cp.nib.put(
                &alloc::format!("/rules/{}", s.0),
                render_mods(&prog.flow_mods()),
            )?;
        }
        Ok(cp)
    }

    pub fn nib(&self) -> &Nib {
        &self.nib
    }

    pub fn nib_mut(&mut self) -> &mut Nib {
        &mut self.nib
    }

    pub fn topology(&self) -> &Topology {
        &self.topology
    }

    pub fn policies(&self) -> &[Policy] {
        &self.policies
    }

    pub fn programs(&self) -> &BTreeMap<SwitchId, SwitchProgram> {
        &self.programs
    }

    pub fn program(&self, switch: SwitchId) -> Option<&SwitchProgram> {
        self.programs.get(&switch)
    }

    /// Applies the event to the topology view, records it in the NIB and
    /// recompiles. Only switches whose program changed get FlowMods.
    ///
    /// When the new topology leaves an Allow pair unreachable the event is
    /// still recorded but the previous programs stay in force and the
    /// compile error is returned.
    pub fn handle_topology_event(
        &mut self,
        ev: &TopologyEvent,
    ) -> Result<TopologyUpdate, ControlError> {
        let mut update = TopologyUpdate::default();
        let params = LinkParams::default();
        match ev {
            TopologyEvent::PortUp { switch, port } | TopologyEvent::PortDown { switch, port } => {
                let up = matches!(ev, TopologyEvent::PortUp { .. });
                self.topology.set_port_state(*switch, *port, up)?;
                let key = alloc::format!("/topology/ports/{}/{}", switch.0, port.0);
                let v = self.nib.put(&key, if up { "up" } else { "down" })?;
                update.nib_writes.push((key, v));
            }
            TopologyEvent::SwitchJoin { switch, links } => {
                if self.topology.contains_switch(*switch) {
                    return Err(ControlError::SwitchExists(*switch));
                }
                for l in links {
                    if !self.topology.contains_switch(l.peer) {
                        return Err(TopologyError::UnknownSwitch(l.peer).into());
                    }
                }
                self.topology.add_switch(*switch);
                for l in links {
                    self.topology
                        .add_link(*switch, l.port, l.peer, l.peer_port, params)?;
                }
                let key = alloc::format!("/topology/switches/{}", switch.0);
                let v = self.nib.put(&key, "up")?;
                update.nib_writes.push((key, v));
            }
            TopologyEvent::SwitchLeave { switch } => {
                self.topology.remove_switch(*switch)?;
                let key = alloc::format!("/topology/switches/{}", switch.0);
                let v = self.nib.put(&key, "down")?;
                update.nib_writes.push((key, v));
            }
            TopologyEvent::HostAttach { ip, switch, port } => {
                self.topology.add_host(*ip, *switch, *port, params)?;
                let key = alloc::format!("/topology/hosts/{ip}");
                let v = self.nib.put(&key, alloc::format!("{switch}:{port}"))?;
                update.nib_writes.push((key, v));
            }
        }
        let graph = build_policy_graph(&self.policies, &self.topology)?;
        let fresh = compile_to_flow_rules(&graph, &self.topology, self.mode);
        let empty = SwitchProgram::default();
        for (s, prog) in &fresh {
            let old = self.programs.get(s).unwrap_or(&empty);
            let mods = diff_programs(&old.entries, &prog.entries);
            if mods.is_empty() {
                continue;
            }
            let key = alloc::format!("/rules/{}", s.0);
            let v = self.nib.put(&key, render_mods(&mods))?;
            update.nib_writes.push((key, v));
            update.flow_mods.insert(*s, mods);
        }
        self.programs = fresh;
        Ok(update)
    }

    pub fn publish_decision(&mut self, d: &Decision) -> Result<u64, NibError> {
        let key = alloc::format!("/decisions/{}", d.switch.0);
        self.nib.put(&key, d.to_string())
    }

    pub fn publish_mitigation(&mut self, m: &Mitigation) -> Result<u64, NibError> {
        let key = alloc::format!("/mitigations/{}", m.switch.0);
        self.nib.put(&key, m.flow_mod.to_string())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tree_plane() -> ControlPlane {
        let t = Topology::build_tree(2, 2, LinkParams::default()).unwrap();
        let a = Ipv4Addr::new(10, 0, 0, 1);
        let b = Ipv4Addr::new(10, 0, 0, 4);
        let ps = alloc::vec![Policy::allow("p", &[a], &[b], PolicyProto::Tcp, 50)];
        ControlPlane::new(t, ps, CompileMode::Stateful).unwrap()
    }

    #[test]
    fn initial_publish() {
        let cp = tree_plane();
        assert_eq!(cp.nib().version("/policies/p"), Some(1));
        assert_eq!(cp.nib().keys("/rules/").count(), 3);
        assert_eq!(cp.program(SwitchId(1)).unwrap().entries.len(), 3);
    }

    #[test]
    fn port_down_on_path_is_unreachable() {
        let mut cp = tree_plane();
        let port = cp
            .topology()
            .port_towards(SwitchId(1), SwitchId(3))
            .unwrap();
        let err = cp
            .handle_topology_event(&TopologyEvent::PortDown {
                switch: SwitchId(1),
                port,
            })
            .unwrap_err();
        assert!(matches!(
            err,
            ControlError::Compile(CompileError::Unreachable { .. })
        ));
        assert_eq!(
            cp.nib()
                .version(&alloc::format!("/topology/ports/1/{}", port.0)),
            Some(1)
        );
        let up = cp
            .handle_topology_event(&TopologyEvent::PortUp {
                switch: SwitchId(1),
                port,
            })
            .unwrap();
        assert_eq!(up.flow_mod_count(), 0);
    }

    #[test]
    fn join_without_policies_touches_only_nib() {
        let mut cp = tree_plane();
        let join = TopologyEvent::SwitchJoin {
            switch: SwitchId(10),
            links: alloc::vec![JoinLink {
                port: PortId(1),
                peer: SwitchId(1),
                peer_port: PortId(10)
            }],
        };
        let up = cp.handle_topology_event(&join).unwrap();
        assert_eq!(up.flow_mod_count(), 0);
        assert_eq!(up.nib_writes, [(String::from("/topology/switches/10"), 1)]);
        assert_eq!(
            cp.handle_topology_event(&join),
            Err(ControlError::SwitchExists(SwitchId(10)))
        );
    }

    #[test]
    fn unknown_element_rejected() {
        let mut cp = tree_plane();
        let ev = TopologyEvent::PortDown {
            switch: SwitchId(99),
            port: PortId(1),
        };
        assert!(matches!(
            cp.handle_topology_event(&ev),
            Err(ControlError::Topology(_))
        ));
        let ev = TopologyEvent::SwitchLeave {
            switch: SwitchId(99),
        };
        assert!(matches!(
            cp.handle_topology_event(&ev),
            Err(ControlError::Topology(_))
        ));
    }

    #[test]
    fn host_attach_adds_rules_at_ingress() {
        let t = Topology::build_flat(3, LinkParams::default()).unwrap();
        let newcomer = Ipv4Addr::new(10, 0, 3, 9);
        let ps = alloc::vec![Policy::allow(
            "p",
            &[newcomer],
            &[Ipv4Addr::new(10, 0, 3, 1)],
            PolicyProto::Tcp,
            50
        )];
        let mut cp = ControlPlane::new(t, ps, CompileMode::Stateful).unwrap();
        assert!(cp.program(SwitchId(1)).unwrap().entries.is_empty());
        let w = cp.nib_mut().watch("/rules/").unwrap();
        let ev = TopologyEvent::HostAttach {
            ip: newcomer,
            switch: SwitchId(1),
            port: PortId(9),
        };
        let up = cp.handle_topology_event(&ev).unwrap();
        assert_eq!(up.flow_mods[&SwitchId(1)].len(), 3);
        assert!(up.flow_mods[&SwitchId(1)]
            .iter()
            .all(|m| matches!(m, FlowMod::Add(_))));
        assert_eq!(cp.nib_mut().poll(w).unwrap().len(), 1);
    }
}
