//! Packet, match and flow-rule vocabulary shared by the data plane, the
//! agents and the control plane.
//!
//! A [`MatchSpec`] is a conjunction of per-field constraints, each either an
//! exact value or a wildcard, plus an optional `ct_state` requirement using
//! the set/unset (`+flag` / `-flag`) convention. There are no masks or
//! prefixes: every field is all-or-nothing.

use alloc::string::String;
use alloc::vec::Vec;
use core::fmt::{self, Write as _};
use core::net::Ipv4Addr;
use core::ops::BitOr;
use core::time::Duration;

use serde::{Deserialize, Serialize};

use crate::time::SimTime;

/// Bytes of L2-L4 headers charged for every packet on top of its payload.
/// 1400 bare SYNs therefore account for 75600 bytes.
pub const HEADER_BYTES: u64 = 54;

/// A switch port number.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PortId(pub u16);

impl fmt::Display for PortId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// A 48-bit Ethernet address.
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default, Serialize, Deserialize,
)]
pub struct MacAddr(pub [u8; 6]);

impl MacAddr {
    /// Locally administered address derived from an IPv4 address, the way
    /// the simulator numbers its hosts.
    pub fn from_ipv4(ip: Ipv4Addr) -> Self {
        let o = ip.octets();
        MacAddr([0x02, 0x00, o[0], o[1], o[2], o[3]])
    }
}

impl fmt::Display for MacAddr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let b = self.0;
        write!(
            f,
            "{:02x}:{:02x}:{:02x}:{:02x}:{:02x}:{:02x}",
            b[0], b[1], b[2], b[3], b[4], b[5]
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Protocol {
    Tcp,
    Udp,
}

impl Protocol {
    pub fn name(self) -> &'static str {
        match self {
            Protocol::Tcp => "tcp",
            Protocol::Udp => "udp",
        }
    }
}

impl fmt::Display for Protocol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// TCP control flags. Only the four that drive connection tracking are
/// modeled.
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default, Serialize, Deserialize,
)]
#[serde(transparent)]
pub struct TcpFlags(u8);

impl TcpFlags {
    pub const NONE: TcpFlags = TcpFlags(0);
    pub const FIN: TcpFlags = TcpFlags(0x01);
    pub const SYN: TcpFlags = TcpFlags(0x02);
    pub const RST: TcpFlags = TcpFlags(0x04);
    pub const ACK: TcpFlags = TcpFlags(0x10);

    pub const fn bits(self) -> u8 {
        self.0
    }

    pub const fn from_bits_truncate(bits: u8) -> Self {
        TcpFlags(bits & 0x17)
    }

    pub const fn contains(self, other: TcpFlags) -> bool {
        self.0 & other.0 == other.0
    }

    pub const fn is_empty(self) -> bool {
        self.0 == 0
    }
}

impl BitOr for TcpFlags {
    type Output = TcpFlags;

    fn bitor(self, rhs: TcpFlags) -> TcpFlags {
        TcpFlags(self.0 | rhs.0)
    }
}

impl fmt::Display for TcpFlags {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let names = [
            (Self::SYN, "SYN"),
            (Self::ACK, "ACK"),
            (Self::FIN, "FIN"),
            (Self::RST, "RST"),
        ];
        let mut first = true;
        for (flag, name) in names {
            if self.contains(flag) {
                if !first {
                    f.write_char('+')?;
                }
                f.write_str(name)?;
                first = false;
            }
        }
        if first {
            f.write_str("none")?;
        }
        Ok(())
    }
}

/// Connection-tracking state flags attached to a packet after it passes
/// through the tracker. The empty set means "untracked".
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default, Serialize, Deserialize,
)]
#[serde(transparent)]
pub struct CtState(u8);

impl CtState {
    pub const UNTRACKED: CtState = CtState(0);
    pub const TRK: CtState = CtState(0x01);
    pub const NEW: CtState = CtState(0x02);
    pub const EST: CtState = CtState(0x04);
    /// Reserved: related-connection tracking is not modeled.
    pub const REL: CtState = CtState(0x08);

    const NAMES: [(CtState, &'static str); 4] = [
        (Self::TRK, "trk"),
        (Self::NEW, "new"),
        (Self::EST, "est"),
        (Self::REL, "rel"),
    ];

    pub const fn bits(self) -> u8 {
        self.0
    }

    pub const fn from_bits_truncate(bits: u8) -> Self {
        CtState(bits & 0x0f)
    }

    pub const fn contains(self, other: CtState) -> bool {
        self.0 & other.0 == other.0
    }

    pub const fn intersects(self, other: CtState) -> bool {
        self.0 & other.0 != 0
    }

    pub const fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub const fn is_tracked(self) -> bool {
        self.contains(Self::TRK)
    }

    /// Every state a classified or untracked packet can carry: untracked, or
    /// `+trk` with at most one of `new`/`est`, with or without `rel`.
    pub fn domain() -> [CtState; 7] {
        let t = Self::TRK;
        [
            Self::UNTRACKED,
            t,
            t | Self::NEW,
            t | Self::EST,
            t | Self::REL,
            t | Self::NEW | Self::REL,
            t | Self::EST | Self::REL,
        ]
    }
}

impl BitOr for CtState {
    type Output = CtState;

    fn bitor(self, rhs: CtState) -> CtState {
        CtState(self.0 | rhs.0)
    }
}

impl fmt::Display for CtState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_empty() {
            return f.write_str("untracked");
        }
        for (flag, name) in Self::NAMES {
            if self.contains(flag) {
                write!(f, "+{name}")?;
            }
        }
        Ok(())
    }
}

/// A connection-tracking zone. Identical 5-tuples in different zones are
/// distinct connections.
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default, Serialize, Deserialize,
)]
#[serde(transparent)]
pub struct CtZone(pub u16);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PacketHeader {
    pub in_port: PortId,
    pub eth_src: MacAddr,
    pub eth_dst: MacAddr,
    pub ip_src: Ipv4Addr,
    pub ip_dst: Ipv4Addr,
    pub tp_src: u16,
    pub tp_dst: u16,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Packet {
    pub header: PacketHeader,
    pub protocol: Protocol,
    /// Always empty for UDP.
    pub tcp_flags: TcpFlags,
    pub seq: u32,
    pub ack: u32,
    pub payload_len: u32,
    pub ts: SimTime,
}

impl Packet {
    pub fn tcp(src: Ipv4Addr, sport: u16, dst: Ipv4Addr, dport: u16, flags: TcpFlags) -> Self {
        Packet {
            header: PacketHeader {
                in_port: PortId(0),
                eth_src: MacAddr::from_ipv4(src),
                eth_dst: MacAddr::from_ipv4(dst),
                ip_src: src,
                ip_dst: dst,
                tp_src: sport,
                tp_dst: dport,
            },
            protocol: Protocol::Tcp,
            tcp_flags: flags,
            seq: 0,
            ack: 0,
            payload_len: 0,
            ts: SimTime::ZERO,
        }
    }

    pub fn udp(src: Ipv4Addr, sport: u16, dst: Ipv4Addr, dport: u16) -> Self {
        Packet {
            protocol: Protocol::Udp,
            ..Packet::tcp(src, sport, dst, dport, TcpFlags::NONE)
        }
    }

    pub fn with_seq(mut self, seq: u32, ack: u32) -> Self {
        self.seq = seq;
        self.ack = ack;
        self
    }

    pub fn with_payload(mut self, len: u32) -> Self {
        self.payload_len = len;
        self
    }

    pub fn with_in_port(mut self, port: PortId) -> Self {
        self.header.in_port = port;
        self
    }

    pub fn at(mut self, ts: SimTime) -> Self {
        self.ts = ts;
        self
    }

    /// Bytes the packet occupies on the wire and in rule byte counters.
    pub fn wire_size(&self) -> u64 {
        HEADER_BYTES + u64::from(self.payload_len)
    }

    /// The same packet travelling in the opposite direction, with no flags,
    /// sequence numbers or payload.
    pub fn reversed(&self) -> Packet {
        let h = &self.header;
        Packet {
            header: PacketHeader {
                in_port: h.in_port,
                eth_src: h.eth_dst,
                eth_dst: h.eth_src,
                ip_src: h.ip_dst,
                ip_dst: h.ip_src,
                tp_src: h.tp_dst,
                tp_dst: h.tp_src,
            },
            protocol: self.protocol,
            tcp_flags: TcpFlags::NONE,
            seq: 0,
            ack: 0,
            payload_len: 0,
            ts: self.ts,
        }
    }
}

/// One dimension of a [`MatchSpec`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Field<T> {
    #[default]
    Any,
    Exact(T),
}

impl<T: PartialEq + Copy> Field<T> {
    pub fn matches(&self, value: T) -> bool {
        match self {
            Field::Any => true,
            Field::Exact(v) => *v == value,
        }
    }

    pub fn overlaps(&self, other: &Field<T>) -> bool {
        match (self, other) {
            (Field::Exact(a), Field::Exact(b)) => a == b,
            _ => true,
        }
    }

    /// Every value accepted by `other` is accepted by `self`.
    pub fn covers(&self, other: &Field<T>) -> bool {
        match (self, other) {
            (Field::Any, _) => true,
            (Field::Exact(a), Field::Exact(b)) => a == b,
            (Field::Exact(_), Field::Any) => false,
        }
    }

    /// The narrower of two overlapping fields.
    pub fn meet(&self, other: &Field<T>) -> Field<T> {
        match (self, other) {
            (Field::Exact(a), _) => Field::Exact(*a),
            (Field::Any, b) => *b,
        }
    }

    pub fn exact(&self) -> Option<T> {
        match self {
            Field::Any => None,
            Field::Exact(v) => Some(*v),
        }
    }
}

impl<T> From<Option<T>> for Field<T> {
    fn from(v: Option<T>) -> Self {
        match v {
            None => Field::Any,
            Some(v) => Field::Exact(v),
        }
    }
}

/// A `ct_state` requirement: flags that must be set and flags that must be
/// unset.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub struct CtMatch {
    pub set: CtState,
    pub unset: CtState,
}

impl CtMatch {
    pub const fn new(set: CtState, unset: CtState) -> Self {
        CtMatch { set, unset }
    }

    /// `ct_state=-trk`
    pub const fn untracked() -> Self {
        CtMatch {
            set: CtState::UNTRACKED,
            unset: CtState::TRK,
        }
    }

    /// `ct_state=+new`
    pub const fn new_conn() -> Self {
        CtMatch {
            set: CtState::NEW,
            unset: CtState::UNTRACKED,
        }
    }

    /// `ct_state=+est`
    pub const fn established() -> Self {
        CtMatch {
            set: CtState::EST,
            unset: CtState::UNTRACKED,
        }
    }

    /// Untracked packets satisfy only a `-trk` requirement; tracked packets
    /// are checked flag by flag.
    pub fn accepts(&self, ct: CtState) -> bool {
        if ct.is_tracked() {
            ct.contains(self.set) && !ct.intersects(self.unset)
        } else {
            self.set.is_empty() && self.unset.contains(CtState::TRK)
        }
    }
}

impl fmt::Display for CtMatch {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (flag, name) in CtState::NAMES {
            if self.set.contains(flag) {
                write!(f, "+{name}")?;
            }
        }
        for (flag, name) in CtState::NAMES {
            if self.unset.contains(flag) {
                write!(f, "-{name}")?;
            }
        }
        Ok(())
    }
}

fn ct_accepts(req: &Option<CtMatch>, ct: CtState) -> bool {
    req.as_ref().is_none_or(|m| m.accepts(ct))
}

/// Per-field exact-or-wildcard packet match.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct MatchSpec {
    pub in_port: Field<PortId>,
    pub eth_src: Field<MacAddr>,
    pub eth_dst: Field<MacAddr>,
    pub ip_src: Field<Ipv4Addr>,
    pub ip_dst: Field<Ipv4Addr>,
    pub protocol: Field<Protocol>,
    pub tp_src: Field<u16>,
    pub tp_dst: Field<u16>,
    pub ct: Option<CtMatch>,
}

impl MatchSpec {
    /// Matches every packet.
    pub fn any() -> Self {
        MatchSpec::default()
    }

    pub fn in_port(mut self, p: PortId) -> Self {
        self.in_port = Field::Exact(p);
        self
    }

    pub fn eth_src(mut self, m: MacAddr) -> Self {
        self.eth_src = Field::Exact(m);
        self
    }

    pub fn eth_dst(mut self, m: MacAddr) -> Self {
        self.eth_dst = Field::Exact(m);
        self
    }

    pub fn ip_src(mut self, ip: Ipv4Addr) -> Self {
        self.ip_src = Field::Exact(ip);
        self
    }

    pub fn ip_dst(mut self, ip: Ipv4Addr) -> Self {
        self.ip_dst = Field::Exact(ip);
        self
    }

    pub fn protocol(mut self, p: Protocol) -> Self {
        self.protocol = Field::Exact(p);
        self
    }

    pub fn tp_src(mut self, port: u16) -> Self {
        self.tp_src = Field::Exact(port);
        self
    }

    pub fn tp_dst(mut self, port: u16) -> Self {
        self.tp_dst = Field::Exact(port);
        self
    }

    pub fn ct(mut self, m: CtMatch) -> Self {
        self.ct = Some(m);
        self
    }

    pub fn is_catch_all(&self) -> bool {
        *self == MatchSpec::any()
    }

    /// See [`header_matches`].
    pub fn matches(&self, pkt: &Packet, ct: CtState) -> bool {
        header_matches(self, pkt, ct)
    }

    /// See [`specs_overlap`].
    pub fn overlaps(&self, other: &MatchSpec) -> bool {
        specs_overlap(self, other)
    }

    /// No packet can match: the ct requirement excludes every reachable
    /// state.
    pub fn is_empty(&self) -> bool {
        !CtState::domain()
            .into_iter()
            .any(|s| ct_accepts(&self.ct, s))
    }

    /// Every packet (with any reachable ct state) matched by `other` is also
    /// matched by `self`.
    pub fn covers(&self, other: &MatchSpec) -> bool {
        if other.is_empty() {
            return true;
        }
        self.in_port.covers(&other.in_port)
            && self.eth_src.covers(&other.eth_src)
            && self.eth_dst.covers(&other.eth_dst)
            && self.ip_src.covers(&other.ip_src)
            && self.ip_dst.covers(&other.ip_dst)
            && self.protocol.covers(&other.protocol)
            && self.tp_src.covers(&other.tp_src)
            && self.tp_dst.covers(&other.tp_dst)
            && CtState::domain()
                .into_iter()
                .filter(|s| ct_accepts(&other.ct, *s))
                .all(|s| ct_accepts(&self.ct, s))
    }

    /// A spec matching exactly the packets matched by both `self` and
    /// `other`, when they overlap. The ct requirement of the result is the
    /// union of both requirements.
    pub fn intersection(&self, other: &MatchSpec) -> Option<MatchSpec> {
        if !self.overlaps(other) {
            return None;
        }
        let ct = match (self.ct, other.ct) {
            (None, c) | (c, None) => c,
            (Some(a), Some(b)) => Some(CtMatch {
                set: a.set | b.set,
                unset: a.unset | b.unset,
            }),
        };
        Some(MatchSpec {
            in_port: self.in_port.meet(&other.in_port),
            eth_src: self.eth_src.meet(&other.eth_src),
            eth_dst: self.eth_dst.meet(&other.eth_dst),
            ip_src: self.ip_src.meet(&other.ip_src),
            ip_dst: self.ip_dst.meet(&other.ip_dst),
            protocol: self.protocol.meet(&other.protocol),
            tp_src: self.tp_src.meet(&other.tp_src),
            tp_dst: self.tp_dst.meet(&other.tp_dst),
            ct,
        })
    }

    /// Comma-separated field list in `ovs-ofctl dump-flows` order, without
    /// priority. Empty for a catch-all spec.
    pub fn dump_fields(&self) -> String {
        let mut parts: Vec<String> = Vec::new();
        if let Some(ct) = &self.ct {
            parts.push(alloc::format!("ct_state={ct}"));
        }
        if let Some(p) = self.protocol.exact() {
            parts.push(String::from(p.name()));
        }
        self.push_l2_l4(&mut parts);
        parts.join(",")
    }

    /// Field list in the order used by `ovs-ofctl add-flow` listings, where
    /// the protocol keyword follows the addresses.
    pub fn add_flow_fields(&self) -> String {
        let mut parts: Vec<String> = Vec::new();
        if let Some(ct) = &self.ct {
            parts.push(alloc::format!("ct_state={ct}"));
        }
        if let Some(ip) = self.ip_src.exact() {
            parts.push(alloc::format!("nw_src={ip}"));
        }
        if let Some(ip) = self.ip_dst.exact() {
            parts.push(alloc::format!("nw_dst={ip}"));
        }
        if let Some(p) = self.protocol.exact() {
            parts.push(String::from(p.name()));
        }
        let mut rest = *self;
        rest.ip_src = Field::Any;
        rest.ip_dst = Field::Any;
        rest.push_l2_l4(&mut parts);
        parts.join(",")
    }

    fn push_l2_l4(&self, parts: &mut Vec<String>) {
        if let Some(ip) = self.ip_src.exact() {
            parts.push(alloc::format!("nw_src={ip}"));
        }
        if let Some(ip) = self.ip_dst.exact() {
            parts.push(alloc::format!("nw_dst={ip}"));
        }
        if let Some(p) = self.tp_src.exact() {
            parts.push(alloc::format!("tp_src={p}"));
        }
        if let Some(p) = self.tp_dst.exact() {
            parts.push(alloc::format!("tp_dst={p}"));
        }
        if let Some(m) = self.eth_src.exact() {
            parts.push(alloc::format!("dl_src={m}"));
        }
        if let Some(m) = self.eth_dst.exact() {
            parts.push(alloc::format!("dl_dst={m}"));
        }
        if let Some(p) = self.in_port.exact() {
            parts.push(alloc::format!("in_port={p}"));
        }
    }
}

/// True iff every non-wildcard field of `spec` equals the packet's field and
/// the packet's ct state meets the spec's ct requirement.
///
/// Untracked packets (empty `ct`) satisfy only specs without a ct
/// requirement or whose requirement is `-trk`.
pub fn header_matches(spec: &MatchSpec, pkt: &Packet, ct: CtState) -> bool {
    let h = &pkt.header;
    spec.in_port.matches(h.in_port)
        && spec.eth_src.matches(h.eth_src)
        && spec.eth_dst.matches(h.eth_dst)
        && spec.ip_src.matches(h.ip_src)
        && spec.ip_dst.matches(h.ip_dst)
        && spec.protocol.matches(pkt.protocol)
        && spec.tp_src.matches(h.tp_src)
        && spec.tp_dst.matches(h.tp_dst)
        && ct_accepts(&spec.ct, ct)
}

/// True iff some packet, in some reachable ct state, satisfies both specs.
pub fn specs_overlap(a: &MatchSpec, b: &MatchSpec) -> bool {
    a.in_port.overlaps(&b.in_port)
        && a.eth_src.overlaps(&b.eth_src)
        && a.eth_dst.overlaps(&b.eth_dst)
        && a.ip_src.overlaps(&b.ip_src)
        && a.ip_dst.overlaps(&b.ip_dst)
        && a.protocol.overlaps(&b.protocol)
        && a.tp_src.overlaps(&b.tp_src)
        && a.tp_dst.overlaps(&b.tp_dst)
        && CtState::domain()
            .into_iter()
            .any(|s| ct_accepts(&a.ct, s) && ct_accepts(&b.ct, s))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Action {
    Output(PortId),
    Drop,
    /// Classify the packet in `zone`, then resubmit it to `recirculate_table`.
    SendToConntrack {
        zone: CtZone,
        recirculate_table: u8,
    },
    /// Commit the connection in the zone the packet was classified in, then
    /// output it.
    CommitAndOutput(PortId),
    PacketIn,
    /// Reserved countermeasure; constructible but not executable.
    RateLimit {
        pps: u32,
    },
    /// Reserved countermeasure; constructible but not executable.
    RedirectHoneypot,
}

impl Action {
    pub fn is_reserved(&self) -> bool {
        matches!(self, Action::RateLimit { .. } | Action::RedirectHoneypot)
    }

    /// Coarse classification used when comparing rules for conflicts.
    pub fn head(&self) -> ActionHead {
        match self {
            Action::Drop => ActionHead::Drop,
            Action::PacketIn => ActionHead::Controller,
            Action::RateLimit { .. } | Action::RedirectHoneypot => ActionHead::Countermeasure,
            Action::Output(_) | Action::SendToConntrack { .. } | Action::CommitAndOutput(_) => {
                ActionHead::Forward
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ActionHead {
    Forward,
    Drop,
    Controller,
    Countermeasure,
}

/// Action-list head; an empty list drops.
pub fn action_head(actions: &[Action]) -> ActionHead {
    actions.first().map_or(ActionHead::Drop, Action::head)
}

impl fmt::Display for Action {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Action::Output(p) => write!(f, "output:{p}"),
            Action::Drop => f.write_str("drop"),
            Action::SendToConntrack {
                zone,
                recirculate_table,
            } => {
                if zone.0 == 0 {
                    write!(f, "ct(table={recirculate_table})")
                } else {
                    write!(f, "ct(zone={},table={recirculate_table})", zone.0)
                }
            }
            Action::CommitAndOutput(p) => write!(f, "ct(commit),output:{p}"),
            Action::PacketIn => f.write_str("CONTROLLER"),
            Action::RateLimit { pps } => write!(f, "rate_limit({pps})"),
            Action::RedirectHoneypot => f.write_str("honeypot"),
        }
    }
}

pub(crate) fn render_actions(actions: &[Action]) -> String {
    if actions.is_empty() {
        return String::from("drop");
    }
    let parts: Vec<String> = actions.iter().map(|a| alloc::format!("{a}")).collect();
    parts.join(",")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct RuleId(pub u64);

impl fmt::Display for RuleId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Snapshot of a rule's counters.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct RuleStats {
    pub duration: Duration,
    pub n_packets: u64,
    pub n_bytes: u64,
}

impl fmt::Display for RuleStats {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let d = self.duration;
        write!(
            f,
            "duration={}.{:03}s, n_packets={}, n_bytes={}",
            d.as_secs(),
            d.subsec_millis(),
            self.n_packets,
            self.n_bytes
        )
    }
}

/// An installed flow rule. Built by a flow table from a
/// [`FlowEntry`](crate::flow_table::FlowEntry); the id and counters are owned
/// by the table.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FlowRule {
    pub rule_id: RuleId,
    pub priority: u16,
    pub match_spec: MatchSpec,
    pub actions: Vec<Action>,
    pub installed_at: SimTime,
    pub n_packets: u64,
    pub n_bytes: u64,
}

impl FlowRule {
    pub fn stats(&self, now: SimTime) -> RuleStats {
        RuleStats {
            duration: now - self.installed_at,
            n_packets: self.n_packets,
            n_bytes: self.n_bytes,
        }
    }
}

impl fmt::Display for FlowRule {
    /// `priority=50,ct_state=+new,tcp,nw_src=..,nw_dst=..,in_port=.. actions=..`
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "priority={}", self.priority)?;
        let fields = self.match_spec.dump_fields();
        if !fields.is_empty() {
            write!(f, ",{fields}")?;
        }
        write!(f, " actions={}", render_actions(&self.actions))
    }
}
