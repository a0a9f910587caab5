//! Switch-local detection and mitigation agent.
//!
//! Each tick the agent reads the counters of the ct-discriminated permit
//! rules on its switch, groups them by `(ip_src, ip_dst)`, and compares the
//! window-scoped `+new` and `+est` packet counts:
//!
//! ```text
//! new_packets / est_packets >= delta_threshold
//! ```
//!
//! A zero denominator counts as an infinite ratio, gated by
//! `min_new_packets`. A flagged pair gets a drop rule one priority above its
//! permit rules. Table-miss traffic is policed separately by a per-source
//! token bucket in front of the controller channel.

mod guard;

use alloc::collections::{BTreeMap, VecDeque};
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;
use core::net::Ipv4Addr;
use core::time::Duration;

use serde::{Deserialize, Serialize};

use crate::conntrack::{CtEvent, CtEventKind};
use crate::flow_table::{FlowEntry, FlowMod, FlowTable, Selector};
use crate::model::{
    action_head, Action, ActionHead, CtState, Field, MatchSpec, Protocol, RuleStats,
};
use crate::time::SimTime;
use crate::topology::SwitchId;

use guard::TokenBucket;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DetectionConfig {
    pub delta_threshold: f64,
    pub min_new_packets: u64,
    pub eval_interval: Duration,
    pub window: Duration,
    /// packet_in messages per second per source.
    pub packet_in_rate_limit: u32,
    /// Token-bucket depth for the packet_in guard.
    pub packet_in_burst: u32,
    /// Quiet time before a drop rule is withdrawn.
    pub cooldown: Duration,
}

impl Default for DetectionConfig {
    fn default() -> Self {
        DetectionConfig {
            delta_threshold: 10.0,
            min_new_packets: 100,
            eval_interval: Duration::from_secs(1),
            window: Duration::from_secs(5),
            packet_in_rate_limit: 50,
            packet_in_burst: 50,
            cooldown: Duration::from_secs(30),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ConfigError {
    #[error("delta_threshold must be positive and finite")]
    Threshold,
    #[error("min_new_packets must be at least 1")]
    MinNewPackets,
    #[error("eval_interval must be positive")]
    EvalInterval,
    #[error("packet_in_rate_limit must be positive")]
    RateLimit,
}

impl DetectionConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        if !(self.delta_threshold > 0.0 && self.delta_threshold.is_finite()) {
            return Err(ConfigError::Threshold);
        }
        if self.min_new_packets < 1 {
            return Err(ConfigError::MinNewPackets);
        }
        if self.eval_interval.is_zero() {
            return Err(ConfigError::EvalInterval);
        }
        if self.packet_in_rate_limit == 0 {
            return Err(ConfigError::RateLimit);
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Verdict {
    Benign,
    SynFlood,
    SaturationFlood,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Benign => "BENIGN",
            Verdict::SynFlood => "SYN_FLOOD",
            Verdict::SaturationFlood => "SATURATION_FLOOD",
        })
    }
}

/// The flood predicate on one pair's window-scoped counters.
pub fn evaluate_ratio(new_packets: u64, est_packets: u64, cfg: &DetectionConfig) -> Verdict {
    if new_packets < cfg.min_new_packets {
        return Verdict::Benign;
    }
    if est_packets == 0 || new_packets as f64 >= cfg.delta_threshold * est_packets as f64 {
        Verdict::SynFlood
    } else {
        Verdict::Benign
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Evidence {
    pub new_packets: u64,
    pub est_packets: u64,
    /// `None` when `est_packets` is zero.
    pub ratio: Option<f64>,
}

impl Evidence {
    fn new(new_packets: u64, est_packets: u64) -> Self {
        let ratio = (est_packets > 0).then(|| new_packets as f64 / est_packets as f64);
        Evidence {
            new_packets,
            est_packets,
            ratio,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Decision {
    pub ts: SimTime,
    pub switch: SwitchId,
    pub verdict: Verdict,
    pub src: Ipv4Addr,
    /// Absent for saturation floods, whose destinations are forged.
    pub dst: Option<Ipv4Addr>,
    pub evidence: Evidence,
}

impl fmt::Display for Decision {
    /// `ts=1.000000 switch=1 verdict=SYN_FLOOD src=.. dst=.. new=.. est=.. ratio=inf`
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "ts={} switch={} verdict={} src={} dst=",
            self.ts, self.switch.0, self.verdict, self.src
        )?;
        match self.dst {
            Some(d) => write!(f, "{d}")?,
            None => f.write_str("*")?,
        }
        write!(
            f,
            " new={} est={} ratio=",
            self.evidence.new_packets, self.evidence.est_packets
        )?;
        match self.evidence.ratio {
            Some(r) => write!(f, "{r:.3}"),
            None => f.write_str("inf"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MitigationKind {
    Drop,
    /// Reserved.
    RateLimit,
    /// Reserved.
    HoneypotRedirect,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Mitigation {
    pub kind: MitigationKind,
    pub switch: SwitchId,
    pub src: Ipv4Addr,
    pub dst: Ipv4Addr,
    pub flow_mod: FlowMod,
    pub installed_at: SimTime,
}

impl Mitigation {
    pub fn priority(&self) -> u16 {
        match &self.flow_mod {
            FlowMod::Add(e) => e.priority,
            FlowMod::Modify { selector, .. } | FlowMod::Delete(selector) => {
                selector.priority.unwrap_or(0)
            }
        }
    }

    fn selector(&self) -> Selector {
        match &self.flow_mod {
            FlowMod::Add(e) => Selector::strict(e.priority, e.match_spec),
            FlowMod::Modify { selector, .. } | FlowMod::Delete(selector) => selector.clone(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GuardVerdict {
    Allow,
    Throttle,
}

type Pair = (Ipv4Addr, Ipv4Addr);

#[derive(Debug, Clone, Copy, Default)]
struct Counters {
    new: u64,
    est: u64,
}

#[derive(Debug, Clone, Default)]
struct PairHistory {
    samples: VecDeque<(SimTime, Counters)>,
    /// Counter values treated as zero when no sample predates the window.
    floor: Counters,
}

impl PairHistory {
    fn windowed(&self, now: SimTime, window: Duration, current: Counters) -> Counters {
        let horizon = now.saturating_sub(window);
        let base = self
            .samples
            .iter()
            .rev()
            .find(|(ts, _)| *ts <= horizon)
            .map_or(self.floor, |(_, c)| *c);
        Counters {
            new: current.new.saturating_sub(base.new),
            est: current.est.saturating_sub(base.est),
        }
    }

    fn record(&mut self, now: SimTime, window: Duration, current: Counters) {
        self.samples.push_back((now, current));
        let horizon = now.saturating_sub(window);
        // Keep the newest sample at or before the horizon as the baseline.
        while self.samples.len() > 1 && self.samples[1].0 <= horizon {
            self.samples.pop_front();
        }
    }
}

#[derive(Debug, Clone)]
struct Active {
    mitigation: Mitigation,
    last_activity: SimTime,
    drop_hits: u64,
}

#[derive(Debug, Clone)]
struct SourceGuard {
    bucket: TokenBucket,
    last_throttle: Option<SimTime>,
    allowed: u64,
    throttled: u64,
}

/// Ct-discriminated permit rules of one pair, summed.
#[derive(Debug, Clone, Copy)]
struct PairRules {
    counters: Counters,
    permit_priority: u16,
}

/// Per-switch event listener.
#[derive(Debug, Clone)]
pub struct DfwAgent {
    switch: SwitchId,
    cfg: DetectionConfig,
    history: BTreeMap<Pair, PairHistory>,
    active: BTreeMap<Pair, Active>,
    guards: BTreeMap<Ipv4Addr, SourceGuard>,
    decisions: Vec<Decision>,
    mitigations: Vec<Mitigation>,
    ct_events: BTreeMap<&'static str, u64>,
}

impl DfwAgent {
    pub fn new(switch: SwitchId, cfg: DetectionConfig) -> Self {
        DfwAgent {
            switch,
            cfg,
            history: BTreeMap::new(),
            active: BTreeMap::new(),
            guards: BTreeMap::new(),
            decisions: Vec::new(),
            mitigations: Vec::new(),
            ct_events: BTreeMap::new(),
        }
    }

    pub fn switch(&self) -> SwitchId {
        self.switch
    }

    pub fn config(&self) -> &DetectionConfig {
        &self.cfg
    }

    /// Every decision recorded so far, in time order.
    pub fn decisions(&self) -> &[Decision] {
        &self.decisions
    }

    /// Every mitigation ever issued, including withdrawn ones.
    pub fn mitigations(&self) -> &[Mitigation] {
        &self.mitigations
    }

    pub fn active_mitigations(&self) -> impl Iterator<Item = &Mitigation> {
        self.active.values().map(|a| &a.mitigation)
    }

    pub fn is_mitigated(&self, src: Ipv4Addr, dst: Ipv4Addr) -> bool {
        self.active.contains_key(&(src, dst))
    }

    pub fn throttled_packet_ins(&self) -> u64 {
        self.guards.values().map(|g| g.throttled).sum()
    }

    pub fn allowed_packet_ins(&self) -> u64 {
        self.guards.values().map(|g| g.allowed).sum()
    }

    /// Counts of connection events seen, keyed by event kind.
    pub fn ct_event_counts(&self) -> &BTreeMap<&'static str, u64> {
        &self.ct_events
    }

    pub fn observe_ct_events(&mut self, events: &[CtEvent]) {
        for ev in events {
            let k = match ev.kind {
                CtEventKind::NewConn => "new_conn",
                CtEventKind::StateChange => "state_change",
                CtEventKind::Expired => "expired",
                CtEventKind::Committed => "committed",
            };
            *self.ct_events.entry(k).or_default() += 1;
        }
    }

    fn pair_rules(table: &FlowTable) -> BTreeMap<Pair, PairRules> {
        let mut out: BTreeMap<Pair, PairRules> = BTreeMap::new();
        for r in table.rules() {
            let m = &r.match_spec;
            let (Field::Exact(src), Field::Exact(dst), Some(ct)) = (m.ip_src, m.ip_dst, m.ct)
            else {
                continue;
            };
            if matches!(m.protocol, Field::Exact(Protocol::Udp))
                || action_head(&r.actions) != ActionHead::Forward
            {
                continue;
            }
            let is_new = ct.set.contains(CtState::NEW);
            let is_est = ct.set.contains(CtState::EST);
            if !is_new && !is_est {
                continue;
            }
            let e = out.entry((src, dst)).or_insert(PairRules {
                counters: Counters::default(),
                permit_priority: 0,
            });
            if is_new {
                e.counters.new += r.n_packets;
            } else {
                e.counters.est += r.n_packets;
            }
            e.permit_priority = e.permit_priority.max(r.priority);
        }
        out
    }

    /// Evaluates every pair with ct-discriminated permit rules and returns a
    /// drop mitigation for each newly detected SYN flood. Pairs already under
    /// mitigation are not re-evaluated.
    pub fn on_tick(&mut self, table: &FlowTable, now: SimTime) -> Vec<Mitigation> {
        self.refresh_activity(table, now);
        let mut out = Vec::new();
        for (pair, rules) in Self::pair_rules(table) {
            let window = self.cfg.window;
            let hist = self.history.entry(pair).or_default();
            let counts = hist.windowed(now, window, rules.counters);
            hist.record(now, window, rules.counters);
            if self.active.contains_key(&pair) {
                continue;
            }
            if evaluate_ratio(counts.new, counts.est, &self.cfg) != Verdict::SynFlood {
                continue;
            }
            let Some(priority) = rules.permit_priority.checked_add(1) else {
                continue;
            };
            self.decisions.push(Decision {
                ts: now,
                switch: self.switch,
                verdict: Verdict::SynFlood,
                src: pair.0,
                dst: Some(pair.1),
                evidence: Evidence::new(counts.new, counts.est),
            });
            let spec = MatchSpec::any()
                .ip_src(pair.0)
                .ip_dst(pair.1)
                .protocol(Protocol::Tcp);
            let m = Mitigation {
                kind: MitigationKind::Drop,
                switch: self.switch,
                src: pair.0,
                dst: pair.1,
                flow_mod: FlowMod::Add(FlowEntry::new(priority, spec, vec![Action::Drop])),
                installed_at: now,
            };
            self.active.insert(
                pair,
                Active {
                    mitigation: m.clone(),
                    last_activity: now,
                    drop_hits: 0,
                },
            );
            self.mitigations.push(m.clone());
            out.push(m);
        }
        out
    }

    fn refresh_activity(&mut self, table: &FlowTable, now: SimTime) {
        for a in self.active.values_mut() {
            let sel = a.mitigation.selector();
            let hits = table
                .rules()
                .iter()
                .filter(|r| Some(r.priority) == sel.priority && r.match_spec == sel.match_spec)
                .map(|r| r.n_packets)
                .sum::<u64>();
            if hits > a.drop_hits {
                a.drop_hits = hits;
                a.last_activity = now;
            }
        }
    }

    /// Pairs whose drop rule has seen no traffic for the cool-down period.
    pub fn withdrawable(&self, now: SimTime) -> Vec<(Ipv4Addr, Ipv4Addr)> {
        self.active
            .iter()
            .filter(|(_, a)| now.since(a.last_activity) >= self.cfg.cooldown)
            .map(|(p, _)| *p)
            .collect()
    }

    /// Lifts the drop rule of a pair once it has been quiet for the
    /// cool-down. Returns `None` if the pair is not mitigated or the attack
    /// is still visible.
    pub fn withdraw_mitigation(
        &mut self,
        src: Ipv4Addr,
        dst: Ipv4Addr,
        now: SimTime,
    ) -> Option<FlowMod> {
        let pair = (src, dst);
        let a = self.active.get(&pair)?;
        if now.since(a.last_activity) < self.cfg.cooldown {
            return None;
        }
        let a = self.active.remove(&pair).expect("checked above");
        if let Some(h) = self.history.get_mut(&pair) {
            let last = h.samples.back().map(|(_, c)| *c).unwrap_or(h.floor);
            h.samples.clear();
            h.floor = last;
        }
        Some(FlowMod::Delete(a.mitigation.selector()))
    }

    /// Polices table-miss traffic from `src` before it is sent to the
    /// controller.
    pub fn packet_in_guard(&mut self, src: Ipv4Addr, now: SimTime) -> GuardVerdict {
        let cfg = self.cfg;
        let g = self.guards.entry(src).or_insert_with(|| SourceGuard {
            bucket: TokenBucket::new(cfg.packet_in_rate_limit, cfg.packet_in_burst, now),
            last_throttle: None,
            allowed: 0,
            throttled: 0,
        });
        if g.bucket.try_take(now) {
            g.allowed += 1;
            return GuardVerdict::Allow;
        }
        g.throttled += 1;
        // One decision per episode; an episode ends after a cool-down
        // without throttling.
        let fresh = g.last_throttle.is_none_or(|t| now.since(t) >= cfg.cooldown);
        g.last_throttle = Some(now);
        if fresh {
            self.decisions.push(Decision {
                ts: now,
                switch: self.switch,
                verdict: Verdict::SaturationFlood,
                src,
                dst: None,
                evidence: Evidence {
                    new_packets: g.allowed + g.throttled,
                    est_packets: 0,
                    ratio: None,
                },
            });
        }
        GuardVerdict::Throttle
    }

    /// Snapshot for fabric-wide aggregation.
    pub fn report(&self, table: &FlowTable, now: SimTime) -> AgentReport {
        AgentReport {
            switch: self.switch,
            rules: table.read_stats(None, now),
            decisions: self.decisions.clone(),
            mitigations: self.mitigations.clone(),
            allowed_packet_ins: self.allowed_packet_ins(),
            throttled_packet_ins: self.throttled_packet_ins(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgentReport {
    pub switch: SwitchId,
    pub rules: Vec<(alloc::string::String, RuleStats)>,
    pub decisions: Vec<Decision>,
    pub mitigations: Vec<Mitigation>,
    pub allowed_packet_ins: u64,
    pub throttled_packet_ins: u64,
}
