//! Pairwise conflict classification for policies and flow rules.
//!
//! Parties are ordered by priority (higher first), then by input position.
//! For each overlapping pair:
//!
//! | actions | containment             | kind           |
//! |---------|-------------------------|----------------|
//! | differ  | first contains second   | Shadowing      |
//! | differ  | second contains first   | Generalization |
//! | differ  | neither                 | Correlation    |
//! | equal   | either way              | Redundancy     |
//!
//! Overlapping pairs with equal actions and no containment are not
//! reported.

use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use serde::{Deserialize, Serialize};

use super::policy::Policy;
use crate::flow_table::FlowEntry;
use crate::model::{Field, FlowRule, MatchSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConflictKind {
    Shadowing,
    Correlation,
    Generalization,
    Redundancy,
}

impl fmt::Display for ConflictKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ConflictKind::Shadowing => "shadowing",
            ConflictKind::Correlation => "correlation",
            ConflictKind::Generalization => "generalization",
            ConflictKind::Redundancy => "redundancy",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Conflict {
    pub kind: ConflictKind,
    /// The higher-priority party.
    pub first: String,
    pub second: String,
    /// A match lying in both parties' match space.
    pub witness: MatchSpec,
}

impl fmt::Display for Conflict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let w = self.witness.add_flow_fields();
        write!(
            f,
            "{}: {} vs {} witness=[{}]",
            self.kind, self.first, self.second, w
        )
    }
}

/// Something that can be checked for conflicts: a match space, a priority and
/// an action.
pub trait ConflictParty {
    fn party_id(&self, index: usize) -> String;
    fn party_priority(&self) -> u16;
    fn same_action(&self, other: &Self) -> bool;
    fn overlaps_party(&self, other: &Self) -> bool;
    /// Every packet matched by `other` is matched by `self`.
    fn contains_party(&self, other: &Self) -> bool;
    /// A match inside both; only called on overlapping pairs.
    fn witness(&self, other: &Self) -> MatchSpec;
}

impl ConflictParty for Policy {
    fn party_id(&self, _: usize) -> String {
        self.id.clone()
    }

    fn party_priority(&self) -> u16 {
        self.priority
    }

    fn same_action(&self, other: &Self) -> bool {
        self.action == other.action
    }

    fn overlaps_party(&self, other: &Self) -> bool {
        self.src.iter().any(|ip| other.src.contains(ip))
            && self.dst.iter().any(|ip| other.dst.contains(ip))
            && self.class_overlaps(other)
    }

    fn contains_party(&self, other: &Self) -> bool {
        other.src.iter().all(|ip| self.src.contains(ip))
            && other.dst.iter().all(|ip| self.dst.contains(ip))
            && self.class_covers(other)
    }

    fn witness(&self, other: &Self) -> MatchSpec {
        let src = self
            .src
            .iter()
            .filter(|ip| other.src.contains(ip))
            .min()
            .copied();
        let dst = self
            .dst
            .iter()
            .filter(|ip| other.dst.contains(ip))
            .min()
            .copied();
        let proto = Field::from(self.proto.exact()).meet(&Field::from(other.proto.exact()));
        let port = Field::from(self.dst_port.exact()).meet(&Field::from(other.dst_port.exact()));
        MatchSpec {
            ip_src: src.into(),
            ip_dst: dst.into(),
            protocol: proto,
            tp_dst: port,
            ..MatchSpec::any()
        }
    }
}

impl ConflictParty for FlowRule {
    fn party_id(&self, _: usize) -> String {
        alloc::format!("rule#{}", self.rule_id.0)
    }

    fn party_priority(&self) -> u16 {
        self.priority
    }

    fn same_action(&self, other: &Self) -> bool {
        self.actions == other.actions
    }

    fn overlaps_party(&self, other: &Self) -> bool {
        self.match_spec.overlaps(&other.match_spec)
    }

    fn contains_party(&self, other: &Self) -> bool {
        self.match_spec.covers(&other.match_spec)
    }

    fn witness(&self, other: &Self) -> MatchSpec {
        self.match_spec
            .intersection(&other.match_spec)
            .unwrap_or(self.match_spec)
    }
}

impl ConflictParty for FlowEntry {
    fn party_id(&self, index: usize) -> String {
        alloc::format!("entry#{index}")
    }

    fn party_priority(&self) -> u16 {
        self.priority
    }

    fn same_action(&self, other: &Self) -> bool {
        self.actions == other.actions
    }

    fn overlaps_party(&self, other: &Self) -> bool {
        self.match_spec.overlaps(&other.match_spec)
    }

    fn contains_party(&self, other: &Self) -> bool {
        self.match_spec.covers(&other.match_spec)
    }

    fn witness(&self, other: &Self) -> MatchSpec {
        self.match_spec
            .intersection(&other.match_spec)
            .unwrap_or(self.match_spec)
    }
}

/// Classifies every overlapping pair; see the module docs.
pub fn detect_conflicts<T: ConflictParty>(parties: &[T]) -> Vec<Conflict> {
    let mut order: Vec<usize> = (0..parties.len()).collect();
    order.sort_by_key(|&i| (core::cmp::Reverse(parties[i].party_priority()), i));
    let mut out = Vec::new();
    for (a, &i) in order.iter().enumerate() {
        for &j in &order[a + 1..] {
            let (hi, lo) = (&parties[i], &parties[j]);
            if !hi.overlaps_party(lo) {
                continue;
            }
            let hi_lo = hi.contains_party(lo);
            let lo_hi = lo.contains_party(hi);
            let kind = if hi.same_action(lo) {
                if !(hi_lo || lo_hi) {
                    continue;
                }
                ConflictKind::Redundancy
            } else if hi_lo {
                ConflictKind::Shadowing
            } else if lo_hi {
                ConflictKind::Generalization
            } else {
                ConflictKind::Correlation
            };
            out.push(Conflict {
                kind,
                first: hi.party_id(i),
                second: lo.party_id(j),
                witness: hi.witness(lo),
            });
        }
    }
    out
}
