//! Per-switch connection tracking.
//!
//! A packet sent to the tracker is resolved to a direction-normalized
//! [`ConnKey`], advanced through the TCP (or trivial UDP) state machine, and
//! labelled with `ct_state` flags. Connections seen for the first time get a
//! tentative entry that lives only until the end of the current pipeline
//! pass unless it is committed.
//!
//! Classification rules:
//! - no committed entry (or a committed entry already `CLOSED`): `+trk+new`;
//! - `ESTABLISHED`/`CLOSING`, or `SYN_RECV` in the reply direction: `+trk+est`;
//! - a committed but still half-open entry in the original direction
//!   (retransmitted or repeated SYNs): `+trk+new`, so such packets keep
//!   hitting the `+new` permit rule and never the `+est` one.

mod tcp;

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;
use core::net::Ipv4Addr;
use core::time::Duration;

use serde::{Deserialize, Serialize};

use crate::model::{CtState, CtZone, Packet, Protocol};
use crate::time::SimTime;

pub use tcp::{next_tcp_state, Direction, TcpState};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum CtError {
    #[error("no tentative or committed connection for {0}")]
    UnknownKey(ConnKey),
}

/// Connection identity in originator orientation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct ConnKey {
    pub zone: CtZone,
    pub proto: Protocol,
    pub src: Ipv4Addr,
    pub dst: Ipv4Addr,
    pub sport: u16,
    pub dport: u16,
}

impl ConnKey {
    /// Key in the packet's own orientation.
    pub fn of(pkt: &Packet, zone: CtZone) -> Self {
        let h = &pkt.header;
        ConnKey {
            zone,
            proto: pkt.protocol,
            src: h.ip_src,
            dst: h.ip_dst,
            sport: h.tp_src,
            dport: h.tp_dst,
        }
    }

    pub fn reversed(&self) -> Self {
        ConnKey {
            src: self.dst,
            dst: self.src,
            sport: self.dport,
            dport: self.sport,
            ..*self
        }
    }
}

impl fmt::Display for ConnKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "zone={} proto={} src={}:{} dst={}:{}",
            self.zone.0, self.proto, self.src, self.sport, self.dst, self.dport
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum UdpState {
    New,
    Established,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConnState {
    Tcp(TcpState),
    Udp(UdpState),
}

impl ConnState {
    fn initial(proto: Protocol) -> Self {
        match proto {
            Protocol::Tcp => ConnState::Tcp(TcpState::SynSent),
            Protocol::Udp => ConnState::Udp(UdpState::New),
        }
    }

    /// Whether a packet in `dir` on a connection in this state counts as
    /// part of an established connection.
    fn is_established_for(self, dir: Direction) -> bool {
        match self {
            ConnState::Tcp(TcpState::Established | TcpState::Closing) => true,
            ConnState::Tcp(TcpState::SynRecv) => dir == Direction::Reply,
            ConnState::Udp(UdpState::Established) => true,
            _ => false,
        }
    }

    pub fn tcp(self) -> Option<TcpState> {
        match self {
            ConnState::Tcp(s) => Some(s),
            ConnState::Udp(_) => None,
        }
    }
}

impl fmt::Display for ConnState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ConnState::Tcp(s) => write!(f, "{s}"),
            ConnState::Udp(UdpState::New) => f.write_str("NEW"),
            ConnState::Udp(UdpState::Established) => f.write_str("ESTABLISHED"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConnEntry {
    pub key: ConnKey,
    pub state: ConnState,
    pub committed: bool,
    pub created_at: SimTime,
    pub last_seen: SimTime,
    pub orig_packets: u64,
    pub reply_packets: u64,
    pub last_seq_seen: u32,
}

impl ConnEntry {
    fn new(key: ConnKey, now: SimTime) -> Self {
        ConnEntry {
            key,
            state: ConnState::initial(key.proto),
            committed: false,
            created_at: now,
            last_seen: now,
            orig_packets: 0,
            reply_packets: 0,
            last_seq_seen: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CtEventKind {
    NewConn,
    StateChange,
    Expired,
    Committed,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CtEvent {
    pub kind: CtEventKind,
    pub key: ConnKey,
    pub old_state: Option<ConnState>,
    pub new_state: Option<ConnState>,
    pub ts: SimTime,
}

/// Applies one packet to an entry: bumps counters and runs the state
/// machine. Returns the resulting state and a `StateChange` event when the
/// state moved.
pub fn advance_state(
    entry: &mut ConnEntry,
    pkt: &Packet,
    dir: Direction,
    now: SimTime,
) -> (ConnState, Option<CtEvent>) {
    match dir {
        Direction::Original => entry.orig_packets += 1,
        Direction::Reply => entry.reply_packets += 1,
    }
    entry.last_seen = now;
    entry.last_seq_seen = pkt.seq;
    let old = entry.state;
    let new = match old {
        ConnState::Tcp(s) => ConnState::Tcp(next_tcp_state(s, pkt.tcp_flags, dir)),
        ConnState::Udp(UdpState::New) if dir == Direction::Reply => {
            ConnState::Udp(UdpState::Established)
        }
        ConnState::Udp(s) => ConnState::Udp(s),
    };
    entry.state = new;
    let event = (new != old).then_some(CtEvent {
        kind: CtEventKind::StateChange,
        key: entry.key,
        old_state: Some(old),
        new_state: Some(new),
        ts: now,
    });
    (new, event)
}

/// Idle timeouts per connection state.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct CtTimeouts {
    pub syn: Duration,
    pub established: Duration,
    pub closing: Duration,
    pub udp: Duration,
}

impl Default for CtTimeouts {
    fn default() -> Self {
        CtTimeouts {
            syn: Duration::from_secs(30),
            established: Duration::from_secs(600),
            closing: Duration::from_secs(10),
            udp: Duration::from_secs(60),
        }
    }
}

impl CtTimeouts {
    fn for_state(&self, state: ConnState) -> Duration {
        match state {
            ConnState::Tcp(TcpState::SynSent | TcpState::SynRecv) => self.syn,
            ConnState::Tcp(TcpState::Established) => self.established,
            ConnState::Tcp(TcpState::Closing | TcpState::Closed) => self.closing,
            ConnState::Udp(_) => self.udp,
        }
    }
}

/// Result of sending one packet through the tracker.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Classification {
    pub state: CtState,
    pub key: ConnKey,
    pub direction: Direction,
}

/// One switch's connection table.
///
/// Every event produced by an operation is also appended to an internal
/// queue, which the co-located agent drains with [`CtTable::drain_events`].
#[derive(Debug, Clone, Default)]
pub struct CtTable {
    entries: BTreeMap<ConnKey, ConnEntry>,
    tentative: Option<ConnEntry>,
    timeouts: CtTimeouts,
    events: Vec<CtEvent>,
    last_event_ts: SimTime,
}

impl CtTable {
    pub fn new(timeouts: CtTimeouts) -> Self {
        CtTable {
            timeouts,
            ..CtTable::default()
        }
    }

    pub fn timeouts(&self) -> &CtTimeouts {
        &self.timeouts
    }

    /// Committed entries.
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, key: &ConnKey) -> Option<&ConnEntry> {
        self.entries.get(key)
    }

    pub fn entries(&self) -> impl Iterator<Item = &ConnEntry> {
        self.entries.values()
    }

    pub fn tentative(&self) -> Option<&ConnEntry> {
        self.tentative.as_ref()
    }

    fn emit(&mut self, mut ev: CtEvent) -> CtEvent {
        if ev.ts < self.last_event_ts {
            ev.ts = self.last_event_ts;
        }
        self.last_event_ts = ev.ts;
        self.events.push(ev.clone());
        ev
    }

    pub fn drain_events(&mut self) -> Vec<CtEvent> {
        core::mem::take(&mut self.events)
    }

    /// Resolves a packet's connection, advances its state and returns its
    /// `ct_state`. Unknown connections get a tentative entry.
    pub fn classify(&mut self, pkt: &Packet, zone: CtZone, now: SimTime) -> Classification {
        let fwd = ConnKey::of(pkt, zone);
        let rev = fwd.reversed();
        let found = if self.entries.contains_key(&fwd) {
            Some((fwd, Direction::Original))
        } else if self.entries.contains_key(&rev) {
            Some((rev, Direction::Reply))
        } else {
            None
        };

        if let Some((key, dir)) = found {
            let entry = self.entries.get_mut(&key).expect("key just found");
            if entry.state != ConnState::Tcp(TcpState::Closed) {
                let prev = entry.state;
                let (new, ev) = advance_state(entry, pkt, dir, now);
                if let Some(ev) = ev {
                    self.emit(ev);
                }
                let est = new.is_established_for(dir)
                    || (new == ConnState::Tcp(TcpState::Closed) && prev.is_established_for(dir));
                let flag = if est { CtState::EST } else { CtState::NEW };
                return Classification {
                    state: CtState::TRK | flag,
                    key,
                    direction: dir,
                };
            }
            // A packet on a torn-down connection starts a new one.
            self.entries.remove(&key);
        }

        let mut entry = ConnEntry::new(fwd, now);
        entry.orig_packets = 1;
        entry.last_seq_seen = pkt.seq;
        self.tentative = Some(entry);
        self.emit(CtEvent {
            kind: CtEventKind::NewConn,
            key: fwd,
            old_state: None,
            new_state: Some(ConnState::initial(fwd.proto)),
            ts: now,
        });
        Classification {
            state: CtState::TRK | CtState::NEW,
            key: fwd,
            direction: Direction::Original,
        }
    }

    /// Persists the tentative entry for `key`. Committing an already
    /// committed connection is a no-op and returns `None`.
    pub fn commit(&mut self, key: &ConnKey, now: SimTime) -> Result<Option<CtEvent>, CtError> {
        if self.entries.contains_key(key) {
            return Ok(None);
        }
        match self.tentative.take() {
            Some(mut entry) if entry.key == *key => {
                entry.committed = true;
                let state = entry.state;
                self.entries.insert(*key, entry);
                Ok(Some(self.emit(CtEvent {
                    kind: CtEventKind::Committed,
                    key: *key,
                    old_state: None,
                    new_state: Some(state),
                    ts: now,
                })))
            }
            other => {
                self.tentative = other;
                Err(CtError::UnknownKey(*key))
            }
        }
    }

    /// Drops the uncommitted entry left by the current pipeline pass.
    pub fn end_pass(&mut self) {
        self.tentative = None;
    }

    /// Removes entries idle for longer than their state's timeout.
    pub fn expire(&mut self, now: SimTime) -> Vec<CtEvent> {
        let timeouts = self.timeouts;
        let stale: Vec<ConnKey> = self
            .entries
            .values()
            .filter(|e| now.since(e.last_seen) > timeouts.for_state(e.state))
            .map(|e| e.key)
            .collect();
        let mut out = Vec::with_capacity(stale.len());
        for key in stale {
            let entry = self.entries.remove(&key).expect("stale key present");
            out.push(self.emit(CtEvent {
                kind: CtEventKind::Expired,
                key,
                old_state: Some(entry.state),
                new_state: None,
                ts: now,
            }));
        }
        out
    }

    /// `(half_open, established)` counts over committed TCP connections to
    /// `dst` created within `window` before `now`.
    pub fn half_open_stats(&self, dst: Ipv4Addr, window: Duration, now: SimTime) -> (usize, usize) {
        self.entries
            .values()
            .filter(|e| e.committed && e.key.dst == dst && now.since(e.created_at) <= window)
            .filter_map(|e| e.state.tcp())
            .fold((0, 0), |(half, est), s| match s {
                s if s.is_half_open() => (half + 1, est),
                TcpState::Established => (half, est + 1),
                _ => (half, est),
            })
    }

    /// One line per committed entry:
    /// `zone=0 proto=tcp src=10.0.0.1:1024 dst=10.0.0.2:80 state=SYN_SENT committed=1 age=1.500s`
    pub fn dump(&self, now: SimTime) -> String {
        let mut out = String::new();
        for e in self.entries.values() {
            let age = now.since(e.created_at);
            out.push_str(&alloc::format!(
                "{} state={} committed={} age={}.{:03}s\n",
                e.key,
                e.state,
                u8::from(e.committed),
                age.as_secs(),
                age.subsec_millis()
            ));
        }
        out
    }
}
