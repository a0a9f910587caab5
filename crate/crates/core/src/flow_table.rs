//! Priority-ordered flow table with OpenFlow-style `flow_mod` semantics.

use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use serde::{Deserialize, Serialize};

use crate::model::{
    render_actions, Action, CtState, FlowRule, MatchSpec, Packet, RuleId, RuleStats,
};
use crate::time::SimTime;

/// What a switch does with a packet no rule matches.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MissPolicy {
    #[default]
    PacketIn,
    Drop,
}

/// Rule template carried by an `Add`: everything but the id and counters.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct FlowEntry {
    pub priority: u16,
    pub match_spec: MatchSpec,
    pub actions: Vec<Action>,
}

impl FlowEntry {
    pub fn new(priority: u16, match_spec: MatchSpec, actions: Vec<Action>) -> Self {
        FlowEntry {
            priority,
            match_spec,
            actions,
        }
    }
}

/// Selects rules by exact match equality and, optionally, exact priority.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Selector {
    pub match_spec: MatchSpec,
    pub priority: Option<u16>,
}

impl Selector {
    pub fn strict(priority: u16, match_spec: MatchSpec) -> Self {
        Selector {
            match_spec,
            priority: Some(priority),
        }
    }

    pub fn loose(match_spec: MatchSpec) -> Self {
        Selector {
            match_spec,
            priority: None,
        }
    }

    fn selects(&self, rule: &FlowRule) -> bool {
        rule.match_spec == self.match_spec && self.priority.is_none_or(|p| p == rule.priority)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FlowMod {
    Add(FlowEntry),
    Modify {
        selector: Selector,
        actions: Vec<Action>,
    },
    Delete(Selector),
}

impl fmt::Display for FlowMod {
    /// `add-flow` style: `table=0, priority=51, nw_src=..,nw_dst=..,tcp actions=drop`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let (verb, prio, spec, actions) = match self {
            FlowMod::Add(e) => ("", Some(e.priority), &e.match_spec, Some(&e.actions)),
            FlowMod::Modify { selector, actions } => (
                "mod-flows ",
                selector.priority,
                &selector.match_spec,
                Some(actions),
            ),
            FlowMod::Delete(s) => ("del-flows ", s.priority, &s.match_spec, None),
        };
        write!(f, "{verb}table=0")?;
        if let Some(p) = prio {
            write!(f, ", priority={p}")?;
        }
        let fields = spec.add_flow_fields();
        if !fields.is_empty() {
            write!(f, ", {fields}")?;
        }
        if let Some(a) = actions {
            write!(f, " actions={}", render_actions(a))?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ChangeKind {
    Added,
    Modified,
    Deleted,
}

/// Rule ids touched by one `flow_mod`. For an `Add`, `affected[0]` is the new
/// rule and any further ids are the rules it replaced.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FlowModSummary {
    pub kind: ChangeKind,
    pub affected: Vec<RuleId>,
}

impl FlowModSummary {
    pub fn is_noop(&self) -> bool {
        self.affected.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LookupResult {
    Matched {
        rule_id: RuleId,
        actions: Vec<Action>,
    },
    TableMiss,
}

/// A single flow table. Rules are kept sorted by priority (descending) and
/// then by install order, which is also rule-id order.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FlowTable {
    table_id: u8,
    rules: Vec<FlowRule>,
    next_id: u64,
    miss_policy: MissPolicy,
    misses: u64,
}

impl FlowTable {
    pub fn new(table_id: u8, miss_policy: MissPolicy) -> Self {
        FlowTable {
            table_id,
            rules: Vec::new(),
            next_id: 1,
            miss_policy,
            misses: 0,
        }
    }

    pub fn table_id(&self) -> u8 {
        self.table_id
    }

    pub fn miss_policy(&self) -> MissPolicy {
        self.miss_policy
    }

    pub fn set_miss_policy(&mut self, policy: MissPolicy) {
        self.miss_policy = policy;
    }

    pub fn len(&self) -> usize {
        self.rules.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rules.is_empty()
    }

    /// Number of lookups that ended in a table-miss.
    pub fn misses(&self) -> u64 {
        self.misses
    }

    /// Rules in lookup order.
    pub fn rules(&self) -> &[FlowRule] {
        &self.rules
    }

    pub fn get(&self, id: RuleId) -> Option<&FlowRule> {
        self.rules.iter().find(|r| r.rule_id == id)
    }

    /// Highest-priority matching rule, earliest-installed on ties. Charges
    /// the packet to that rule's counters.
    pub fn lookup(&mut self, pkt: &Packet, ct: CtState) -> LookupResult {
        match self
            .rules
            .iter_mut()
            .find(|r| r.match_spec.matches(pkt, ct))
        {
            Some(rule) => {
                rule.n_packets += 1;
                rule.n_bytes += pkt.wire_size();
                LookupResult::Matched {
                    rule_id: rule.rule_id,
                    actions: rule.actions.clone(),
                }
            }
            None => {
                self.misses += 1;
                LookupResult::TableMiss
            }
        }
    }

    pub fn apply(&mut self, m: &FlowMod, now: SimTime) -> FlowModSummary {
        match m {
            FlowMod::Add(entry) => {
                let mut affected = Vec::new();
                let id = RuleId(self.next_id);
                self.next_id += 1;
                affected.push(id);
                self.rules.retain(|r| {
                    let dup = r.priority == entry.priority && r.match_spec == entry.match_spec;
                    if dup {
                        affected.push(r.rule_id);
                    }
                    !dup
                });
                let rule = FlowRule {
                    rule_id: id,
                    priority: entry.priority,
                    match_spec: entry.match_spec,
                    actions: entry.actions.clone(),
                    installed_at: now,
                    n_packets: 0,
                    n_bytes: 0,
                };
                // Fresh ids are the largest, so the new rule goes after every
                // rule of equal or higher priority.
                let pos = self.rules.partition_point(|r| r.priority >= entry.priority);
                self.rules.insert(pos, rule);
                FlowModSummary {
                    kind: ChangeKind::Added,
                    affected,
                }
            }
            FlowMod::Modify { selector, actions } => {
                let mut affected = Vec::new();
                for r in self.rules.iter_mut().filter(|r| selector.selects(r)) {
                    r.actions = actions.clone();
                    affected.push(r.rule_id);
                }
                FlowModSummary {
                    kind: ChangeKind::Modified,
                    affected,
                }
            }
            FlowMod::Delete(selector) => {
                let mut affected = Vec::new();
                self.rules.retain(|r| {
                    let hit = selector.selects(r);
                    if hit {
                        affected.push(r.rule_id);
                    }
                    !hit
                });
                FlowModSummary {
                    kind: ChangeKind::Deleted,
                    affected,
                }
            }
        }
    }

    /// Stats of every rule whose match is covered by `selector` (all rules
    /// when `None`), rendered in dump format.
    pub fn read_stats(
        &self,
        selector: Option<&MatchSpec>,
        now: SimTime,
    ) -> Vec<(String, RuleStats)> {
        self.rules
            .iter()
            .filter(|r| selector.is_none_or(|s| s.covers(&r.match_spec)))
            .map(|r| (alloc::format!("{r}"), r.stats(now)))
            .collect()
    }

    /// One line per rule, lookup order:
    /// `duration=1.500s, table=0, n_packets=3, n_bytes=162, priority=50,... actions=...`
    pub fn dump(&self, now: SimTime) -> String {
        let mut out = String::new();
        for r in &self.rules {
            let s = r.stats(now);
            out.push_str(&alloc::format!(
                "duration={}.{:03}s, table={}, n_packets={}, n_bytes={}, {}\n",
                s.duration.as_secs(),
                s.duration.subsec_millis(),
                self.table_id,
                s.n_packets,
                s.n_bytes,
                r
            ));
        }
        out
    }
}
