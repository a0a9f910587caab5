//! Brute-force reference models shared by the integration suites. Nothing
//! here calls the matching, lookup or state-machine code under test.

#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};
use std::net::Ipv4Addr;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sdfw_core::control::{
    build_policy_graph, compile_to_flow_rules, CompileError, CompileMode, Policy, PolicyAction,
    PolicyProto, PortSpec,
};
use sdfw_core::flow_table::{FlowEntry, FlowMod, FlowTable, LookupResult, Selector};
use sdfw_core::model::{
    action_head, Action, CtMatch, CtState, Field, MacAddr, MatchSpec, Packet, PacketHeader, PortId,
    Protocol, TcpFlags,
};
use sdfw_core::simnet::{FlowPair, Scenario, SimConfig, TopologySpec, TrafficKind, TrafficSpec};
use sdfw_core::topology::{Endpoint, SwitchId, Topology};
use sdfw_core::{SimTime, TcpState};

// ---------------------------------------------------------------------------
// Mini header space: four values per field.

pub const PORTS: [u16; 4] = [1, 2, 3, 4];
pub const TP: [u16; 4] = [80, 443, 1024, 5001];
pub const PROTOS: [Protocol; 2] = [Protocol::Tcp, Protocol::Udp];

pub fn ips() -> [Ipv4Addr; 4] {
    [
        Ipv4Addr::new(10, 0, 0, 1),
        Ipv4Addr::new(10, 0, 0, 2),
        Ipv4Addr::new(10, 0, 0, 3),
        Ipv4Addr::new(10, 0, 0, 4),
    ]
}

pub fn macs() -> [MacAddr; 4] {
    let i = ips();
    [
        MacAddr::from_ipv4(i[0]),
        MacAddr::from_ipv4(i[1]),
        MacAddr::from_ipv4(i[2]),
        MacAddr::from_ipv4(i[3]),
    ]
}

const TRK: u8 = 1;
const NEW: u8 = 2;
const EST: u8 = 4;
const REL: u8 = 8;

/// Every ct state a packet can carry: untracked, or tracked with at most one
/// of new/est, with or without rel.
pub fn ct_states() -> Vec<CtState> {
    [
        0,
        TRK,
        TRK | NEW,
        TRK | EST,
        TRK | REL,
        TRK | NEW | REL,
        TRK | EST | REL,
    ]
    .into_iter()
    .map(CtState::from_bits_truncate)
    .collect()
}

fn pick<T: Copy, R: Rng>(rng: &mut R, vals: &[T]) -> Field<T> {
    if rng.gen_bool(0.5) {
        Field::Any
    } else {
        Field::Exact(*vals.choose(rng).unwrap())
    }
}

pub fn random_ct<R: Rng>(rng: &mut R) -> Option<CtMatch> {
    match rng.gen_range(0..6) {
        0 | 1 => None,
        2 => Some(CtMatch::untracked()),
        3 => Some(CtMatch::new_conn()),
        4 => Some(CtMatch::established()),
        _ => Some(CtMatch::new(
            CtState::from_bits_truncate(rng.gen_range(0..16)),
            CtState::from_bits_truncate(rng.gen_range(0..16)),
        )),
    }
}

pub fn random_spec<R: Rng>(rng: &mut R) -> MatchSpec {
    MatchSpec {
        in_port: match pick(rng, &PORTS) {
            Field::Any => Field::Any,
            Field::Exact(p) => Field::Exact(PortId(p)),
        },
        eth_src: pick(rng, &macs()),
        eth_dst: pick(rng, &macs()),
        ip_src: pick(rng, &ips()),
        ip_dst: pick(rng, &ips()),
        protocol: pick(rng, &PROTOS),
        tp_src: pick(rng, &TP),
        tp_dst: pick(rng, &TP),
        ct: random_ct(rng),
    }
}

pub fn random_packet<R: Rng>(rng: &mut R) -> (Packet, CtState) {
    let proto = *PROTOS.choose(rng).unwrap();
    let src = *ips().choose(rng).unwrap();
    let dst = *ips().choose(rng).unwrap();
    let sport = *TP.choose(rng).unwrap();
    let dport = *TP.choose(rng).unwrap();
    let mut p = match proto {
        Protocol::Tcp => Packet::tcp(src, sport, dst, dport, TcpFlags::SYN),
        Protocol::Udp => Packet::udp(src, sport, dst, dport),
    };
    p.header.in_port = PortId(*PORTS.choose(rng).unwrap());
    p.header.eth_src = *macs().choose(rng).unwrap();
    p.header.eth_dst = *macs().choose(rng).unwrap();
    p.payload_len = rng.gen_range(0..1500);
    let ct = *ct_states().choose(rng).unwrap();
    (p, ct)
}

/// A random packet forced onto the exact fields of `spec`, with a ct state
/// it accepts when there is one.
pub fn packet_for<R: Rng>(rng: &mut R, spec: &MatchSpec) -> (Packet, CtState) {
    let (mut p, mut ct) = random_packet(rng);
    let h = &mut p.header;
    if let Field::Exact(v) = spec.in_port {
        h.in_port = v;
    }
    if let Field::Exact(v) = spec.eth_src {
        h.eth_src = v;
    }
    if let Field::Exact(v) = spec.eth_dst {
        h.eth_dst = v;
    }
    if let Field::Exact(v) = spec.ip_src {
        h.ip_src = v;
    }
    if let Field::Exact(v) = spec.ip_dst {
        h.ip_dst = v;
    }
    if let Field::Exact(v) = spec.tp_src {
        h.tp_src = v;
    }
    if let Field::Exact(v) = spec.tp_dst {
        h.tp_dst = v;
    }
    if let Field::Exact(v) = spec.protocol {
        p.protocol = v;
    }
    let ok: Vec<CtState> = ct_states()
        .into_iter()
        .filter(|s| ct_ok(&spec.ct, *s))
        .collect();
    if let Some(s) = ok.choose(rng) {
        ct = *s;
    }
    (p, ct)
}

/// Every packet of the mini space (payload 0) with every ct state.
pub fn for_each_packet(mut f: impl FnMut(&Packet, CtState) -> bool) -> bool {
    let cts = ct_states();
    for in_port in PORTS {
        for eth_src in macs() {
            for eth_dst in macs() {
                for ip_src in ips() {
                    for ip_dst in ips() {
                        for proto in PROTOS {
                            for tp_src in TP {
                                for tp_dst in TP {
                                    let mut p = Packet::udp(ip_src, tp_src, ip_dst, tp_dst);
                                    p.protocol = proto;
                                    p.header = PacketHeader {
                                        in_port: PortId(in_port),
                                        eth_src,
                                        eth_dst,
                                        ..p.header
                                    };
                                    for &ct in &cts {
                                        if !f(&p, ct) {
                                            return false;
                                        }
                                    }
                                }
                            }
                        }
                    }
                }
            }
        }
    }
    true
}

fn field_ok<T: PartialEq>(f: &Field<T>, v: &T) -> bool {
    match f {
        Field::Any => true,
        Field::Exact(x) => x == v,
    }
}

fn ct_ok(req: &Option<CtMatch>, st: CtState) -> bool {
    let Some(m) = req else { return true };
    let (set, unset, st) = (m.set.bits(), m.unset.bits(), st.bits());
    if st & TRK == 0 {
        // An untracked packet has no flags; only "-trk" (with nothing
        // required set) describes it.
        return set == 0 && unset & TRK != 0;
    }
    st & set == set && st & unset == 0
}

/// Reference packet match.
pub fn oracle_matches(spec: &MatchSpec, p: &Packet, ct: CtState) -> bool {
    let h = &p.header;
    field_ok(&spec.in_port, &h.in_port)
        && field_ok(&spec.eth_src, &h.eth_src)
        && field_ok(&spec.eth_dst, &h.eth_dst)
        && field_ok(&spec.ip_src, &h.ip_src)
        && field_ok(&spec.ip_dst, &h.ip_dst)
        && field_ok(&spec.protocol, &p.protocol)
        && field_ok(&spec.tp_src, &h.tp_src)
        && field_ok(&spec.tp_dst, &h.tp_dst)
        && ct_ok(&spec.ct, ct)
}

/// Overlap by enumeration of the mini space.
pub fn oracle_overlap(a: &MatchSpec, b: &MatchSpec) -> bool {
    !for_each_packet(|p, ct| !(oracle_matches(a, p, ct) && oracle_matches(b, p, ct)))
}

/// Containment by enumeration of the mini space.
pub fn oracle_covers(a: &MatchSpec, b: &MatchSpec) -> bool {
    for_each_packet(|p, ct| !oracle_matches(b, p, ct) || oracle_matches(a, p, ct))
}

// ---------------------------------------------------------------------------
// Linear-scan flow table.

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RefRule {
    pub id: u64,
    pub priority: u16,
    pub spec: MatchSpec,
    pub actions: Vec<Action>,
    pub n_packets: u64,
    pub n_bytes: u64,
}

/// Rules kept in install order; lookup scans all of them.
#[derive(Debug, Default)]
pub struct RefTable {
    pub rules: Vec<RefRule>,
    next: u64,
}

impl RefTable {
    pub fn new() -> Self {
        RefTable {
            rules: Vec::new(),
            next: 1,
        }
    }

    fn selected(sel: &Selector, r: &RefRule) -> bool {
        r.spec == sel.match_spec && sel.priority.is_none_or(|p| p == r.priority)
    }

    pub fn apply(&mut self, m: &FlowMod) {
        match m {
            FlowMod::Add(e) => {
                self.rules
                    .retain(|r| !(r.priority == e.priority && r.spec == e.match_spec));
                self.rules.push(RefRule {
                    id: self.next,
                    priority: e.priority,
                    spec: e.match_spec,
                    actions: e.actions.clone(),
                    n_packets: 0,
                    n_bytes: 0,
                });
                self.next += 1;
            }
            FlowMod::Modify { selector, actions } => {
                for r in self.rules.iter_mut() {
                    if Self::selected(selector, r) {
                        r.actions = actions.clone();
                    }
                }
            }
            FlowMod::Delete(selector) => self.rules.retain(|r| !Self::selected(selector, r)),
        }
    }

    /// `(rule id, actions)` of the winner, or `None` on a miss.
    pub fn lookup(&mut self, p: &Packet, ct: CtState) -> Option<(u64, Vec<Action>)> {
        let mut best: Option<usize> = None;
        for (i, r) in self.rules.iter().enumerate() {
            if !oracle_matches(&r.spec, p, ct) {
                continue;
            }
            best = match best {
                Some(b)
                    if (self.rules[b].priority, std::cmp::Reverse(self.rules[b].id))
                        >= (r.priority, std::cmp::Reverse(r.id)) =>
                {
                    Some(b)
                }
                _ => Some(i),
            };
        }
        let r = &mut self.rules[best?];
        r.n_packets += 1;
        r.n_bytes += 54 + u64::from(p.payload_len);
        Some((r.id, r.actions.clone()))
    }

    /// `(id, priority, spec, actions, packets, bytes)` sorted by id.
    pub fn snapshot(&self) -> Vec<(u64, u16, MatchSpec, Vec<Action>, u64, u64)> {
        let mut v: Vec<_> = self
            .rules
            .iter()
            .map(|r| {
                (
                    r.id,
                    r.priority,
                    r.spec,
                    r.actions.clone(),
                    r.n_packets,
                    r.n_bytes,
                )
            })
            .collect();
        v.sort_by_key(|r| r.0);
        v
    }
}

pub fn table_snapshot(t: &FlowTable) -> Vec<(u64, u16, MatchSpec, Vec<Action>, u64, u64)> {
    let mut v: Vec<_> = t
        .rules()
        .iter()
        .map(|r| {
            (
                r.rule_id.0,
                r.priority,
                r.match_spec,
                r.actions.clone(),
                r.n_packets,
                r.n_bytes,
            )
        })
        .collect();
    v.sort_by_key(|r| r.0);
    v
}

pub fn random_actions<R: Rng>(rng: &mut R) -> Vec<Action> {
    match rng.gen_range(0..4) {
        0 => vec![Action::Drop],
        1 => vec![Action::PacketIn],
        _ => vec![Action::Output(PortId(rng.gen_range(1..5)))],
    }
}

/// A random add/modify/delete, biased to hit existing rules.
pub fn random_flow_mod<R: Rng>(rng: &mut R, existing: &[(u16, MatchSpec)]) -> FlowMod {
    let reuse = !existing.is_empty() && rng.gen_bool(0.4);
    let (prio, spec) = if reuse {
        *existing.choose(rng).unwrap()
    } else {
        (rng.gen_range(0..4), random_spec(rng))
    };
    match rng.gen_range(0..10) {
        0..=6 => FlowMod::Add(FlowEntry::new(prio, spec, random_actions(rng))),
        7 => FlowMod::Modify {
            selector: if rng.gen_bool(0.5) {
                Selector::strict(prio, spec)
            } else {
                Selector::loose(spec)
            },
            actions: random_actions(rng),
        },
        _ => FlowMod::Delete(if rng.gen_bool(0.5) {
            Selector::strict(prio, spec)
        } else {
            Selector::loose(spec)
        }),
    }
}

pub fn lookup_pair(r: LookupResult) -> Option<(u64, Vec<Action>)> {
    match r {
        LookupResult::Matched { rule_id, actions } => Some((rule_id.0, actions)),
        LookupResult::TableMiss => None,
    }
}

// ---------------------------------------------------------------------------
// TCP transition table.

pub const STATES: [TcpState; 5] = [
    TcpState::SynSent,
    TcpState::SynRecv,
    TcpState::Established,
    TcpState::Closing,
    TcpState::Closed,
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sym {
    Syn,
    SynAck,
    Ack,
    Fin,
    Rst,
}

pub const SYMS: [Sym; 5] = [Sym::Syn, Sym::SynAck, Sym::Ack, Sym::Fin, Sym::Rst];

impl Sym {
    pub fn flags(self) -> TcpFlags {
        match self {
            Sym::Syn => TcpFlags::SYN,
            Sym::SynAck => TcpFlags::SYN | TcpFlags::ACK,
            Sym::Ack => TcpFlags::ACK,
            Sym::Fin => TcpFlags::FIN | TcpFlags::ACK,
            Sym::Rst => TcpFlags::RST,
        }
    }
}

/// Row per current state (SYN_SENT, SYN_RECV, ESTABLISHED, CLOSING,
/// CLOSED); column per segment (SYN, SYN+ACK, ACK, FIN, RST); one table per
/// direction. Entries are indexes into [`STATES`].
const ORIG: [[usize; 5]; 5] = [
    // SYN SYNACK ACK FIN RST
    [0, 0, 0, 0, 4], // SYN_SENT
    [0, 1, 2, 1, 4], // SYN_RECV
    [0, 2, 2, 3, 4], // ESTABLISHED
    [0, 3, 3, 3, 4], // CLOSING
    [0, 4, 4, 4, 4], // CLOSED
];
const REPLY: [[usize; 5]; 5] = [
    [0, 1, 0, 0, 4],
    [1, 1, 1, 1, 4],
    [2, 2, 2, 3, 4],
    [3, 3, 3, 3, 4],
    [4, 4, 4, 4, 4],
];

pub fn oracle_tcp(state: TcpState, sym: Sym, reply: bool) -> TcpState {
    let si = STATES.iter().position(|s| *s == state).unwrap();
    let ci = SYMS.iter().position(|s| *s == sym).unwrap();
    STATES[if reply { REPLY[si][ci] } else { ORIG[si][ci] }]
}

// ---------------------------------------------------------------------------
// Policies on a 4-host fabric.

pub fn random_policy<R: Rng>(rng: &mut R, id: usize, hosts: &[Ipv4Addr]) -> Policy {
    let subset = |rng: &mut R| -> Vec<Ipv4Addr> {
        loop {
            let s: Vec<Ipv4Addr> = hosts
                .iter()
                .copied()
                .filter(|_| rng.gen_bool(0.4))
                .collect();
            if !s.is_empty() {
                return s;
            }
        }
    };
    let src = subset(rng);
    let dst = subset(rng);
    let proto = *[PolicyProto::Tcp, PolicyProto::Udp, PolicyProto::Any]
        .choose(rng)
        .unwrap();
    let mut p = if rng.gen_bool(0.6) {
        Policy::allow(
            &format!("p{id}"),
            &src,
            &dst,
            proto,
            *[10, 20, 30].choose(rng).unwrap(),
        )
    } else {
        Policy::deny(
            &format!("p{id}"),
            &src,
            &dst,
            proto,
            *[10, 20, 30].choose(rng).unwrap(),
        )
    };
    if rng.gen_bool(0.4) {
        p.dst_port = PortSpec::Exact(*[80, 443].choose(rng).unwrap());
    }
    if p.action == PolicyAction::Allow && rng.gen_bool(0.3) {
        p.stateful = false;
    }
    p
}

/// Intended fate: the highest-priority policy covering the packet decides,
/// a Deny beating an Allow of equal priority; no policy means not delivered.
pub fn intended_delivery(
    policies: &[Policy],
    src: Ipv4Addr,
    dst: Ipv4Addr,
    proto: Protocol,
    dport: u16,
) -> bool {
    let admits = |p: &Policy| {
        p.src.contains(&src)
            && p.dst.contains(&dst)
            && match p.proto {
                PolicyProto::Any => true,
                PolicyProto::Tcp => proto == Protocol::Tcp,
                PolicyProto::Udp => proto == Protocol::Udp,
            }
            && match p.dst_port {
                PortSpec::Any => true,
                PortSpec::Exact(x) => x == dport,
            }
    };
    let mut best: Option<(u16, bool)> = None;
    for p in policies.iter().filter(|p| admits(p)) {
        let deny = p.action == PolicyAction::Deny;
        best = match best {
            Some((prio, d)) if prio > p.priority || (prio == p.priority && d) => Some((prio, d)),
            _ => Some((p.priority, deny)),
        };
    }
    matches!(best, Some((_, false)))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Walk {
    Delivered(Vec<SwitchId>),
    /// Dropped, missed or misdelivered; the switches visited.
    Stopped(Vec<SwitchId>),
}

/// Walks the first packet of a connection hop by hop through per-switch
/// tables. Conntrack is modelled as "first packet": a ct action makes the
/// packet `+trk+new` and resubmits it.
pub fn walk(topology: &Topology, tables: &mut BTreeMap<SwitchId, FlowTable>, pkt: &Packet) -> Walk {
    let src = topology
        .host_by_ip(pkt.header.ip_src)
        .expect("source attached");
    let mut at = src.switch;
    let mut in_port = src.port;
    let mut visited = vec![];
    for _ in 0..64 {
        visited.push(at);
        let table = tables.get_mut(&at).expect("every switch has a table");
        let mut p = *pkt;
        p.header.in_port = in_port;
        let mut ct = CtState::UNTRACKED;
        let mut out = None;
        for _ in 0..4 {
            match table.lookup(&p, ct) {
                LookupResult::TableMiss => break,
                LookupResult::Matched { actions, .. } => match actions.first() {
                    Some(Action::SendToConntrack { .. }) => ct = CtState::TRK | CtState::NEW,
                    Some(Action::Output(port)) | Some(Action::CommitAndOutput(port)) => {
                        out = Some(*port);
                        break;
                    }
                    _ => break,
                },
            }
        }
        let Some(port) = out else {
            return Walk::Stopped(visited);
        };
        let here = Endpoint::Switch { switch: at, port };
        let Some(far) = topology.link_at(here).and_then(|l| l.other_end(here)) else {
            return Walk::Stopped(visited);
        };
        match far {
            Endpoint::Host(h) => {
                let host = topology.host(h).unwrap();
                return if host.ip == pkt.header.ip_dst {
                    Walk::Delivered(visited)
                } else {
                    Walk::Stopped(visited)
                };
            }
            Endpoint::Switch { switch, port } => {
                at = switch;
                in_port = port;
            }
        }
    }
    Walk::Stopped(visited)
}

pub fn distinct<T: Ord + Clone>(xs: &[T]) -> usize {
    xs.iter().cloned().collect::<BTreeSet<_>>().len()
}

pub fn now() -> SimTime {
    SimTime::ZERO
}

/// Random policy sets on `topology`: compiled tables deliver exactly what
/// the policies intend, along the shortest path, and stop everything else at
/// the ingress switch. Returns (compiled sets, ambiguous sets, delivered
/// probes, blocked probes).
pub fn check_policy_soundness(
    topology: &Topology,
    seed: u64,
    sets: usize,
) -> (usize, usize, usize, usize) {
    let hosts: Vec<Ipv4Addr> = topology.hosts().map(|h| h.ip).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut compiled, mut ambiguous, mut delivered, mut blocked) = (0, 0, 0, 0);
    for _ in 0..sets {
        let n = rng.gen_range(1..6);
        let policies: Vec<_> = (0..n).map(|i| random_policy(&mut rng, i, &hosts)).collect();
        let graph = match build_policy_graph(&policies, topology) {
            Ok(g) => g,
            Err(CompileError::AmbiguousOverlap { .. }) => {
                ambiguous += 1;
                continue;
            }
            Err(e) => panic!("{e}"),
        };
        compiled += 1;
        let programs = compile_to_flow_rules(&graph, topology, CompileMode::Stateful);

        for (sw, prog) in &programs {
            for (i, a) in prog.entries.iter().enumerate() {
                for b in &prog.entries[i + 1..] {
                    if a.priority == b.priority && a.match_spec.overlaps(&b.match_spec) {
                        assert_eq!(
                            action_head(&a.actions),
                            action_head(&b.actions),
                            "{sw}: equal-priority overlap with different fates\n{policies:#?}"
                        );
                    }
                }
            }
        }

        let mut tables: BTreeMap<_, _> = programs
            .iter()
            .map(|(sw, prog)| {
                let mut t = FlowTable::new(0, prog.miss_policy);
                for m in prog.flow_mods() {
                    t.apply(&m, SimTime::ZERO);
                }
                (*sw, t)
            })
            .collect();

        for &src in &hosts {
            for &dst in &hosts {
                if src == dst {
                    continue;
                }
                for proto in [Protocol::Tcp, Protocol::Udp] {
                    for dport in [80, 443, 5001] {
                        let mut p = match proto {
                            Protocol::Tcp => Packet::tcp(src, 40000, dst, dport, TcpFlags::SYN),
                            Protocol::Udp => Packet::udp(src, 40000, dst, dport),
                        };
                        p.header.eth_src = topology.host_by_ip(src).unwrap().mac;
                        p.header.eth_dst = topology.host_by_ip(dst).unwrap().mac;
                        let want = intended_delivery(&policies, src, dst, proto, dport);
                        let got = walk(topology, &mut tables, &p);
                        match &got {
                            Walk::Delivered(path) => {
                                let s = topology.host_by_ip(src).unwrap().switch;
                                let d = topology.host_by_ip(dst).unwrap().switch;
                                assert_eq!(path, &topology.shortest_path(s, d).unwrap());
                                assert_eq!(distinct(path), path.len(), "loop-free");
                                delivered += 1;
                            }
                            Walk::Stopped(path) => {
                                assert_eq!(path.len(), 1, "{src}->{dst} left its ingress switch");
                                blocked += 1;
                            }
                        }
                        assert_eq!(
                            matches!(got, Walk::Delivered(_)),
                            want,
                            "{src}->{dst} {proto:?}:{dport}\n{policies:#?}"
                        );
                    }
                }
            }
        }
    }
    (compiled, ambiguous, delivered, blocked)
}

// ---------------------------------------------------------------------------
// Scenarios.

pub fn host_ips(topology: &TopologySpec) -> Vec<Ipv4Addr> {
    let t = topology.build(Default::default()).expect("valid topology");
    t.hosts().map(|h| h.ip).collect()
}

/// Allow TCP both ways between each listed pair.
pub fn pair_policies(pairs: &[(Ipv4Addr, Ipv4Addr)]) -> Vec<Policy> {
    let mut out = Vec::new();
    for (i, (a, b)) in pairs.iter().enumerate() {
        out.push(Policy::allow(
            &format!("fwd{i}"),
            &[*a],
            &[*b],
            PolicyProto::Tcp,
            50,
        ));
        out.push(Policy::allow(
            &format!("rev{i}"),
            &[*b],
            &[*a],
            PolicyProto::Tcp,
            50,
        ));
    }
    out
}

/// The first host floods the last one with SYNs; the hosts in between are
/// paired off for bulk transfers. Both the attack pair and the benign pairs
/// are permitted by policy.
pub fn flood_scenario(
    topology: TopologySpec,
    sdfw: bool,
    flood: bool,
    duration_s: f64,
) -> Scenario {
    let hosts = host_ips(&topology);
    let attacker = hosts[0];
    let victim = *hosts.last().unwrap();
    let benign: Vec<(Ipv4Addr, Ipv4Addr)> = hosts[1..hosts.len() - 1]
        .chunks_exact(2)
        .map(|c| (c[0], c[1]))
        .collect();
    let mut pairs = benign.clone();
    pairs.push((attacker, victim));
    let mut traffic = vec![TrafficSpec {
        kind: TrafficKind::BenignTcp {
            flows: benign
                .iter()
                .map(|&(src, dst)| FlowPair {
                    src,
                    dst,
                    dport: 5001,
                })
                .collect(),
            bytes_per_flow: 4_000_000,
        },
        start_s: 0.0,
        stop_s: None,
    }];
    if flood {
        traffic.push(TrafficSpec {
            kind: TrafficKind::SynFlood {
                src: attacker,
                dst: victim,
                sport: 1024,
                dport: 80,
                count: 1400,
                rate: 1000.0,
            },
            start_s: 0.0,
            stop_s: None,
        });
    }
    Scenario {
        name: String::from("flood"),
        topology,
        policies: pair_policies(&pairs),
        traffic,
        sdfw_enabled: sdfw,
        seed: 1,
        duration_s,
        config: SimConfig::default(),
    }
}
