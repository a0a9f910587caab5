//! Switches, hosts and the links between them.

use alloc::collections::{BTreeMap, BTreeSet, VecDeque};
use alloc::vec::Vec;
use core::fmt;
use core::net::Ipv4Addr;
use core::time::Duration;

use serde::{Deserialize, Serialize};

use crate::model::{MacAddr, PortId};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SwitchId(pub u32);

impl fmt::Display for SwitchId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "s{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct HostId(pub u32);

impl fmt::Display for HostId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "h{}", self.0)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum TopologyError {
    #[error("a flat topology needs at least 2 hosts, got {0}")]
    TooFewHosts(usize),
    #[error("a flat topology supports at most 254 hosts, got {0}")]
    TooManyHosts(usize),
    #[error("invalid tree parameters depth={depth} fanout={fanout}")]
    InvalidTree { depth: u32, fanout: u32 },
    #[error("unknown switch {0}")]
    UnknownSwitch(SwitchId),
    #[error("no link on {0} port {1}")]
    UnknownPort(SwitchId, PortId),
    #[error("{0} port {1} is already in use")]
    PortInUse(SwitchId, PortId),
    #[error("address {0} is already assigned")]
    DuplicateAddress(Ipv4Addr),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LinkParams {
    pub bandwidth_bps: u64,
    pub latency: Duration,
}

impl Default for LinkParams {
    fn default() -> Self {
        LinkParams {
            bandwidth_bps: 1_000_000_000,
            latency: Duration::from_micros(100),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Endpoint {
    Switch { switch: SwitchId, port: PortId },
    Host(HostId),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Link {
    pub a: Endpoint,
    pub b: Endpoint,
    pub params: LinkParams,
    pub up: bool,
}

impl Link {
    pub fn other_end(&self, end: Endpoint) -> Option<Endpoint> {
        if self.a == end {
            Some(self.b)
        } else if self.b == end {
            Some(self.a)
        } else {
            None
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Host {
    pub id: HostId,
    pub ip: Ipv4Addr,
    pub mac: MacAddr,
    pub switch: SwitchId,
    pub port: PortId,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Topology {
    switches: BTreeSet<SwitchId>,
    hosts: BTreeMap<HostId, Host>,
    links: Vec<Link>,
}

impl Topology {
    pub fn new() -> Self {
        Topology::default()
    }

    /// One switch with `n_hosts` hosts on ports 1..=n, addressed
    /// 10.0.3.1 ..= 10.0.3.n.
    pub fn build_flat(n_hosts: usize, params: LinkParams) -> Result<Self, TopologyError> {
        if n_hosts < 2 {
            return Err(TopologyError::TooFewHosts(n_hosts));
        }
        if n_hosts > 254 {
            return Err(TopologyError::TooManyHosts(n_hosts));
        }
        let mut t = Topology::new();
        let s = SwitchId(1);
        t.add_switch(s);
        for i in 1..=n_hosts as u16 {
            t.add_host(Ipv4Addr::new(10, 0, 3, i as u8), s, PortId(i), params)?;
        }
        Ok(t)
    }

    /// Complete `fanout`-ary tree of switches `depth` levels deep, with
    /// `fanout` hosts under each leaf. Switches are numbered breadth-first
    /// from 1 (the root); hosts are numbered left to right from 10.0.0.1.
    /// Child links use ports 1..=fanout and the uplink uses `fanout + 1`.
    pub fn build_tree(depth: u32, fanout: u32, params: LinkParams) -> Result<Self, TopologyError> {
        let invalid = TopologyError::InvalidTree { depth, fanout };
        if depth < 1 || fanout < 2 {
            return Err(invalid);
        }
        let n_hosts = fanout
            .checked_pow(depth)
            .filter(|n| *n <= 1 << 16)
            .ok_or(invalid.clone())?;
        if fanout + 1 > u32::from(u16::MAX) {
            return Err(invalid);
        }
        let mut t = Topology::new();
        let mut next_id = 1u32;
        let mut level = alloc::vec![SwitchId(next_id)];
        t.add_switch(SwitchId(next_id));
        next_id += 1;
        for _ in 1..depth {
            let mut children = Vec::with_capacity(level.len() * fanout as usize);
            for parent in &level {
                for port in 1..=fanout {
                    let child = SwitchId(next_id);
                    next_id += 1;
                    t.add_switch(child);
                    t.add_link(
                        *parent,
                        PortId(port as u16),
                        child,
                        PortId(fanout as u16 + 1),
                        params,
                    )?;
                    children.push(child);
                }
            }
            level = children;
        }
        let base = u32::from(Ipv4Addr::new(10, 0, 0, 0));
        let mut k = 1u32;
        for leaf in &level {
            for port in 1..=fanout {
                t.add_host(Ipv4Addr::from(base + k), *leaf, PortId(port as u16), params)?;
                k += 1;
            }
        }
        debug_assert_eq!(k - 1, n_hosts);
        Ok(t)
    }

    pub fn add_switch(&mut self, id: SwitchId) -> bool {
        self.switches.insert(id)
    }

    fn check_port_free(&self, switch: SwitchId, port: PortId) -> Result<(), TopologyError> {
        if !self.switches.contains(&switch) {
            return Err(TopologyError::UnknownSwitch(switch));
        }
        let end = Endpoint::Switch { switch, port };
        if self.links.iter().any(|l| l.a == end || l.b == end) {
            return Err(TopologyError::PortInUse(switch, port));
        }
        Ok(())
    }

    pub fn add_link(
        &mut self,
        a: SwitchId,
        port_a: PortId,
        b: SwitchId,
        port_b: PortId,
        params: LinkParams,
    ) -> Result<(), TopologyError> {
        self.check_port_free(a, port_a)?;
        self.check_port_free(b, port_b)?;
        self.links.push(Link {
            a: Endpoint::Switch {
                switch: a,
                port: port_a,
            },
            b: Endpoint::Switch {
                switch: b,
                port: port_b,
            },
            params,
            up: true,
        });
        Ok(())
    }

    pub fn add_host(
        &mut self,
        ip: Ipv4Addr,
        switch: SwitchId,
        port: PortId,
        params: LinkParams,
    ) -> Result<HostId, TopologyError> {
        self.check_port_free(switch, port)?;
        if self.host_by_ip(ip).is_some() {
            return Err(TopologyError::DuplicateAddress(ip));
        }
        let id = HostId(self.hosts.keys().next_back().map_or(1, |h| h.0 + 1));
        self.hosts.insert(
            id,
            Host {
                id,
                ip,
                mac: MacAddr::from_ipv4(ip),
                switch,
                port,
            },
        );
        self.links.push(Link {
            a: Endpoint::Host(id),
            b: Endpoint::Switch { switch, port },
            params,
            up: true,
        });
        Ok(id)
    }

    pub fn switches(&self) -> impl Iterator<Item = SwitchId> + '_ {
        self.switches.iter().copied()
    }

    pub fn contains_switch(&self, id: SwitchId) -> bool {
        self.switches.contains(&id)
    }

    pub fn hosts(&self) -> impl Iterator<Item = &Host> {
        self.hosts.values()
    }

    pub fn host(&self, id: HostId) -> Option<&Host> {
        self.hosts.get(&id)
    }

    pub fn host_by_ip(&self, ip: Ipv4Addr) -> Option<&Host> {
        self.hosts.values().find(|h| h.ip == ip)
    }

    pub fn links(&self) -> &[Link] {
        &self.links
    }

    /// The link plugged into `end`, if any.
    pub fn link_at(&self, end: Endpoint) -> Option<&Link> {
        self.links.iter().find(|l| l.a == end || l.b == end)
    }

    pub fn set_port_state(
        &mut self,
        switch: SwitchId,
        port: PortId,
        up: bool,
    ) -> Result<(), TopologyError> {
        let end = Endpoint::Switch { switch, port };
        let link = self
            .links
            .iter_mut()
            .find(|l| l.a == end || l.b == end)
            .ok_or(TopologyError::UnknownPort(switch, port))?;
        link.up = up;
        Ok(())
    }

    /// Removes a switch together with its links and attached hosts.
    pub fn remove_switch(&mut self, id: SwitchId) -> Result<(), TopologyError> {
        if !self.switches.remove(&id) {
            return Err(TopologyError::UnknownSwitch(id));
        }
        let on_switch =
            |e: &Endpoint| matches!(e, Endpoint::Switch { switch, .. } if *switch == id);
        self.links.retain(|l| !on_switch(&l.a) && !on_switch(&l.b));
        self.hosts.retain(|_, h| h.switch != id);
        let hosts = &self.hosts;
        self.links.retain(|l| match (l.a, l.b) {
            (Endpoint::Host(h), _) | (_, Endpoint::Host(h)) => hosts.contains_key(&h),
            _ => true,
        });
        Ok(())
    }

    /// `(local port, neighbour, neighbour port)` for every up switch-to-switch
    /// link on `id`, ordered by neighbour id then local port.
    pub fn neighbors(&self, id: SwitchId) -> Vec<(PortId, SwitchId, PortId)> {
        let mut out: Vec<_> = self
            .links
            .iter()
            .filter(|l| l.up)
            .filter_map(|l| match (l.a, l.b) {
                (
                    Endpoint::Switch {
                        switch: a,
                        port: pa,
                    },
                    Endpoint::Switch {
                        switch: b,
                        port: pb,
                    },
                ) => {
                    if a == id {
                        Some((pa, b, pb))
                    } else if b == id {
                        Some((pb, a, pa))
                    } else {
                        None
                    }
                }
                _ => None,
            })
            .collect();
        out.sort_by_key(|(p, n, _)| (*n, *p));
        out
    }

    /// Shortest switch path from `from` to `to` over up links; among equal
    /// length paths the lexicographically smallest id sequence wins.
    pub fn shortest_path(&self, from: SwitchId, to: SwitchId) -> Option<Vec<SwitchId>> {
        if !self.switches.contains(&from) || !self.switches.contains(&to) {
            return None;
        }
        let mut dist: BTreeMap<SwitchId, usize> = BTreeMap::new();
        dist.insert(to, 0);
        let mut queue = VecDeque::from([to]);
        while let Some(s) = queue.pop_front() {
            let d = dist[&s];
            for (_, n, _) in self.neighbors(s) {
                if let alloc::collections::btree_map::Entry::Vacant(e) = dist.entry(n) {
                    e.insert(d + 1);
                    queue.push_back(n);
                }
            }
        }
        let mut d = *dist.get(&from)?;
        let mut path = alloc::vec![from];
        let mut cur = from;
        while d > 0 {
            cur = self
                .neighbors(cur)
                .into_iter()
                .map(|(_, n, _)| n)
                .find(|n| dist.get(n) == Some(&(d - 1)))
                .expect("distance labels are consistent");
            path.push(cur);
            d -= 1;
        }
        Some(path)
    }

    /// Lowest-numbered up port on `from` that links directly to `to`.
    pub fn port_towards(&self, from: SwitchId, to: SwitchId) -> Option<PortId> {
        self.neighbors(from)
            .into_iter()
            .filter(|(_, n, _)| *n == to)
            .map(|(p, _, _)| p)
            .min()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flat_hundred() {
        let t = Topology::build_flat(100, LinkParams::default()).unwrap();
        assert_eq!(t.switches().count(), 1);
        assert_eq!(t.hosts().count(), 100);
        assert_eq!(
            t.host_by_ip(Ipv4Addr::new(10, 0, 3, 100)).unwrap().port,
            PortId(100)
        );
        assert_eq!(
            Topology::build_flat(1, LinkParams::default()),
            Err(TopologyError::TooFewHosts(1))
        );
    }

    #[test]
    fn tree_two_by_eight() {
        let t = Topology::build_tree(2, 8, LinkParams::default()).unwrap();
        assert_eq!(t.switches().count(), 9);
        assert_eq!(t.hosts().count(), 64);
        let h1 = t.host_by_ip(Ipv4Addr::new(10, 0, 0, 1)).unwrap();
        let h64 = t.host_by_ip(Ipv4Addr::new(10, 0, 0, 64)).unwrap();
        assert_eq!((h1.switch, h64.switch), (SwitchId(2), SwitchId(9)));
        assert_eq!(
            t.shortest_path(h1.switch, h64.switch).unwrap(),
            [SwitchId(2), SwitchId(1), SwitchId(9)]
        );
        assert_eq!(t.port_towards(SwitchId(1), SwitchId(9)), Some(PortId(8)));
        assert_eq!(t.port_towards(SwitchId(9), SwitchId(1)), Some(PortId(9)));
    }

    #[test]
    fn tree_minimal_and_invalid() {
        let t = Topology::build_tree(1, 2, LinkParams::default()).unwrap();
        assert_eq!((t.switches().count(), t.hosts().count()), (1, 2));
        assert!(Topology::build_tree(0, 2, LinkParams::default()).is_err());
        assert!(Topology::build_tree(2, 1, LinkParams::default()).is_err());
        assert!(Topology::build_tree(40, 8, LinkParams::default()).is_err());
    }

    #[test]
    fn port_down_breaks_path() {
        let mut t = Topology::build_tree(2, 2, LinkParams::default()).unwrap();
        assert!(t.shortest_path(SwitchId(2), SwitchId(3)).is_some());
        t.set_port_state(SwitchId(1), PortId(2), false).unwrap();
        assert_eq!(t.shortest_path(SwitchId(2), SwitchId(3)), None);
        assert!(t.set_port_state(SwitchId(1), PortId(7), false).is_err());
    }

    #[test]
    fn lexicographic_tie_break() {
        // Square s1-s2-s4 and s1-s3-s4: both length 2, s2 wins.
        let mut t = Topology::new();
        for i in 1..=4 {
            t.add_switch(SwitchId(i));
        }
        let p = LinkParams::default();
        t.add_link(SwitchId(1), PortId(1), SwitchId(3), PortId(1), p)
            .unwrap();
        t.add_link(SwitchId(1), PortId(2), SwitchId(2), PortId(1), p)
            .unwrap();
        t.add_link(SwitchId(2), PortId(2), SwitchId(4), PortId(1), p)
            .unwrap();
        t.add_link(SwitchId(3), PortId(2), SwitchId(4), PortId(2), p)
            .unwrap();
        assert_eq!(
            t.shortest_path(SwitchId(1), SwitchId(4)).unwrap(),
            [SwitchId(1), SwitchId(2), SwitchId(4)]
        );
    }
}
