use alloc::collections::BTreeSet;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;
use core::net::Ipv4Addr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::model::{MatchSpec, Packet, Protocol};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PolicyProto {
    Tcp,
    Udp,
    Any,
}

impl PolicyProto {
    pub fn exact(self) -> Option<Protocol> {
        match self {
            PolicyProto::Tcp => Some(Protocol::Tcp),
            PolicyProto::Udp => Some(Protocol::Udp),
            PolicyProto::Any => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PolicyAction {
    Allow,
    Deny,
}

/// Destination port selector: a number, or `"any"` / `null` / absent.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub enum PortSpec {
    #[default]
    Any,
    Exact(u16),
}

impl PortSpec {
    pub fn exact(self) -> Option<u16> {
        match self {
            PortSpec::Any => None,
            PortSpec::Exact(p) => Some(p),
        }
    }
}

impl Serialize for PortSpec {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            PortSpec::Any => s.serialize_str("any"),
            PortSpec::Exact(p) => s.serialize_u16(*p),
        }
    }
}

impl<'de> Deserialize<'de> for PortSpec {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(u16),
            Str(String),
            Null(()),
        }
        match Raw::deserialize(d)? {
            Raw::Num(p) => Ok(PortSpec::Exact(p)),
            Raw::Str(s) if s == "any" || s == "*" => Ok(PortSpec::Any),
            Raw::Str(s) => s
                .parse()
                .map(PortSpec::Exact)
                .map_err(|_| serde::de::Error::custom(alloc::format!("invalid dst_port {s:?}"))),
            Raw::Null(()) => Ok(PortSpec::Any),
        }
    }
}

impl fmt::Display for PortSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PortSpec::Any => f.write_str("any"),
            PortSpec::Exact(p) => write!(f, "{p}"),
        }
    }
}

fn default_stateful() -> bool {
    true
}

/// A high-level allow/deny intent between two host groups.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Policy {
    pub id: String,
    pub src: Vec<Ipv4Addr>,
    pub dst: Vec<Ipv4Addr>,
    pub proto: PolicyProto,
    #[serde(default)]
    pub dst_port: PortSpec,
    pub action: PolicyAction,
    pub priority: u16,
    #[serde(default = "default_stateful")]
    pub stateful: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum PolicyError {
    #[error("policy {0}: empty src group")]
    EmptySrc(String),
    #[error("policy {0}: empty dst group")]
    EmptyDst(String),
    #[error("policy id {0} is used more than once")]
    DuplicateId(String),
}

impl Policy {
    pub fn allow(
        id: &str,
        src: &[Ipv4Addr],
        dst: &[Ipv4Addr],
        proto: PolicyProto,
        priority: u16,
    ) -> Self {
        Policy {
            id: String::from(id),
            src: src.to_vec(),
            dst: dst.to_vec(),
            proto,
            dst_port: PortSpec::Any,
            action: PolicyAction::Allow,
            priority,
            stateful: true,
        }
    }

    pub fn deny(
        id: &str,
        src: &[Ipv4Addr],
        dst: &[Ipv4Addr],
        proto: PolicyProto,
        priority: u16,
    ) -> Self {
        Policy {
            action: PolicyAction::Deny,
            stateful: false,
            ..Policy::allow(id, src, dst, proto, priority)
        }
    }

    pub fn with_port(mut self, port: u16) -> Self {
        self.dst_port = PortSpec::Exact(port);
        self
    }

    pub fn stateless(mut self) -> Self {
        self.stateful = false;
        self
    }

    pub fn validate(&self) -> Result<(), PolicyError> {
        if self.src.is_empty() {
            return Err(PolicyError::EmptySrc(self.id.clone()));
        }
        if self.dst.is_empty() {
            return Err(PolicyError::EmptyDst(self.id.clone()));
        }
        Ok(())
    }

    pub fn src_set(&self) -> BTreeSet<Ipv4Addr> {
        self.src.iter().copied().collect()
    }

    pub fn dst_set(&self) -> BTreeSet<Ipv4Addr> {
        self.dst.iter().copied().collect()
    }

    /// Whether the policy's traffic class (protocol and destination port)
    /// admits the packet's, ignoring addresses.
    pub fn class_admits(&self, proto: Protocol, dst_port: u16) -> bool {
        self.proto.exact().is_none_or(|p| p == proto)
            && self.dst_port.exact().is_none_or(|p| p == dst_port)
    }

    pub fn covers_packet(&self, pkt: &Packet) -> bool {
        self.src.contains(&pkt.header.ip_src)
            && self.dst.contains(&pkt.header.ip_dst)
            && self.class_admits(pkt.protocol, pkt.header.tp_dst)
    }

    /// Class containment: every (protocol, port) admitted by `other` is
    /// admitted by `self`.
    pub fn class_covers(&self, other: &Policy) -> bool {
        let proto = self.proto == PolicyProto::Any || self.proto == other.proto;
        let port = self.dst_port == PortSpec::Any || self.dst_port == other.dst_port;
        proto && port
    }

    pub fn class_overlaps(&self, other: &Policy) -> bool {
        let proto = self.proto == PolicyProto::Any
            || other.proto == PolicyProto::Any
            || self.proto == other.proto;
        let port = match (self.dst_port, other.dst_port) {
            (PortSpec::Exact(a), PortSpec::Exact(b)) => a == b,
            _ => true,
        };
        proto && port
    }

    /// Match spec for one host pair of this policy.
    pub fn pair_spec(&self, src: Ipv4Addr, dst: Ipv4Addr) -> MatchSpec {
        let mut m = MatchSpec::any().ip_src(src).ip_dst(dst);
        if let Some(p) = self.proto.exact() {
            m = m.protocol(p);
        }
        if let Some(p) = self.dst_port.exact() {
            m = m.tp_dst(p);
        }
        m
    }
}

impl fmt::Display for Policy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let act = match self.action {
            PolicyAction::Allow => "allow",
            PolicyAction::Deny => "deny",
        };
        let proto = match self.proto {
            PolicyProto::Tcp => "tcp",
            PolicyProto::Udp => "udp",
            PolicyProto::Any => "any",
        };
        write!(
            f,
            "{} {act} prio={} {proto}:{} src=[",
            self.id, self.priority, self.dst_port
        )?;
        for (i, ip) in self.src.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{ip}")?;
        }
        f.write_str("] dst=[")?;
        for (i, ip) in self.dst.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{ip}")?;
        }
        write!(f, "]{}", if self.stateful { " stateful" } else { "" })
    }
}

/// Checks every policy and id uniqueness.
pub fn validate_policies(policies: &[Policy]) -> Result<(), PolicyError> {
    let mut ids = BTreeSet::new();
    for p in policies {
        p.validate()?;
        if !ids.insert(p.id.as_str()) {
            return Err(PolicyError::DuplicateId(p.id.clone()));
        }
    }
    Ok(())
}
