use alloc::collections::{BTreeMap, BTreeSet, BinaryHeap, VecDeque};
use alloc::string::String;
use alloc::vec::Vec;
use core::cmp::Ordering;
use core::net::Ipv4Addr;

use super::metrics::{
    Conservation, FloodMetrics, MetricsReport, PacketInCounts, PairMetrics, RuleSnapshot,
    SwitchMetrics,
};
use super::scenario::{Scenario, SimConfig, TrafficKind};
use super::traffic::{gen_syn_flood, gen_table_miss_flood};
use crate::agent::{ConfigError, DfwAgent, GuardVerdict};
use crate::conntrack::{ConnKey, CtTable};
use crate::control::{aggregate_stats, CompileMode, ControlError, ControlPlane};
use crate::flow_table::{FlowTable, LookupResult, MissPolicy};
use crate::model::{render_actions, Action, CtState, Packet, PortId, Protocol, RuleId, TcpFlags};
use crate::time::SimTime;
use crate::topology::{Endpoint, HostId, SwitchId, TopologyError};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SimError {
    #[error(transparent)]
    Topology(#[from] TopologyError),
    #[error(transparent)]
    Control(#[from] ControlError),
    #[error("detection config: {0}")]
    Detection(#[from] ConfigError),
    #[error("traffic[{index}]: {reason}")]
    Traffic { index: usize, reason: String },
    #[error("duration_s must be positive and finite")]
    Duration,
    #[error("config.{0} must be positive")]
    Config(&'static str),
}

/// Upper bound on conntrack recirculations per packet.
const MAX_CT_PASSES: u32 = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Origin {
    Flow(u32),
    Flood(u32),
    Reply,
}

#[derive(Debug, Clone)]
struct PacketRec {
    pkt: Packet,
    injected_at: SimTime,
    origin: Origin,
}

#[derive(Debug, Clone, Copy)]
enum Ev {
    Inject { host: HostId, pkt: u32 },
    SwitchArrive { sw: usize, port: PortId, pkt: u32 },
    ServiceDone { sw: usize },
    HostArrive { host: HostId, pkt: u32 },
    FlowNext { flow: u32 },
    Tick,
}

#[derive(Debug)]
struct Sched {
    t: u64,
    seq: u64,
    ev: Ev,
}

impl PartialEq for Sched {
    fn eq(&self, other: &Self) -> bool {
        (self.t, self.seq) == (other.t, other.seq)
    }
}

impl Eq for Sched {}

impl PartialOrd for Sched {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Sched {
    // Min-heap on (time, sequence).
    fn cmp(&self, other: &Self) -> Ordering {
        (other.t, other.seq).cmp(&(self.t, self.seq))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Fate {
    Delivered,
    DroppedByRule,
    DroppedByMitigation,
    Throttled,
    ToController,
    QueueOverflow,
    Unroutable,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Outcome {
    Forward(PortId),
    Settle(Fate),
}

#[derive(Debug)]
struct SwitchState {
    id: SwitchId,
    table: FlowTable,
    ct: CtTable,
    agent: Option<DfwAgent>,
    queue: VecDeque<u32>,
    in_service: Option<(u32, Outcome)>,
    mitigation_rules: BTreeSet<RuleId>,
    ports: BTreeMap<PortId, usize>,
    processed: u64,
    max_queue: usize,
    published_decisions: usize,
}

#[derive(Debug)]
struct LinkState {
    a: Endpoint,
    b: Endpoint,
    up: bool,
    bandwidth_bps: u64,
    latency_ns: u64,
    /// Transmitter free-at time, per direction (a→b, b→a).
    busy: [u64; 2],
}

#[derive(Debug)]
struct HostState {
    ip: Ipv4Addr,
    link: usize,
}

#[derive(Debug)]
struct FlowState {
    src: Ipv4Addr,
    dst: Ipv4Addr,
    sport: u16,
    dport: u16,
    host: HostId,
    bytes: u64,
    bytes_sent: u64,
    stop: Option<SimTime>,
    syn_at: Option<SimTime>,
    established: bool,
    fin_sent: bool,
    data_sent: u64,
    data_delivered: u64,
    payload_delivered: u64,
    last_delivery: SimTime,
    latency_sum_ns: u128,
}

#[derive(Debug)]
struct FloodState {
    m: FloodMetrics,
    start: SimTime,
}

/// A discrete-event run of one scenario.
#[derive(Debug)]
pub struct Simulation {
    name: String,
    seed: u64,
    sdfw: bool,
    cfg: SimConfig,
    duration_s: f64,
    end: u64,
    now: SimTime,
    control: ControlPlane,
    switches: Vec<SwitchState>,
    sw_index: BTreeMap<SwitchId, usize>,
    links: Vec<LinkState>,
    hosts: BTreeMap<HostId, HostState>,
    host_by_ip: BTreeMap<Ipv4Addr, HostId>,
    packets: Vec<PacketRec>,
    flows: Vec<FlowState>,
    flow_by_client: BTreeMap<(Ipv4Addr, u16), u32>,
    floods: Vec<FloodState>,
    first_mitigation: BTreeMap<Ipv4Addr, SimTime>,
    heap: BinaryHeap<Sched>,
    seq: u64,
    events: u64,
    cons: Conservation,
    packet_ins: BTreeMap<Ipv4Addr, PacketInCounts>,
    base_service_ns: u64,
}

fn traffic_err(index: usize, reason: &str) -> SimError {
    SimError::Traffic {
        index,
        reason: String::from(reason),
    }
}

impl Simulation {
    /// Validates the scenario, compiles its policies and schedules all
    /// traffic. Nothing runs until [`Simulation::run`].
    pub fn new(scenario: &Scenario) -> Result<Self, SimError> {
        let cfg = scenario.config;
        if !(scenario.duration_s.is_finite() && scenario.duration_s > 0.0) {
            return Err(SimError::Duration);
        }
        if cfg.proc_rate_pps == 0 {
            return Err(SimError::Config("proc_rate_pps"));
        }
        if cfg.link_bandwidth_bps == 0 {
            return Err(SimError::Config("link_bandwidth_bps"));
        }
        if cfg.mss == 0 {
            return Err(SimError::Config("mss"));
        }
        let det = cfg.detection.to_config();
        if scenario.sdfw_enabled {
            det.validate()?;
        }
        let topology = scenario.topology.build(cfg.link_params())?;
        let mode = if scenario.sdfw_enabled {
            CompileMode::Stateful
        } else {
            CompileMode::Stateless
        };
        let control = ControlPlane::new(topology.clone(), scenario.policies.clone(), mode)?;

        let mut links = Vec::new();
        let mut ports: BTreeMap<SwitchId, BTreeMap<PortId, usize>> = BTreeMap::new();
        let mut hosts = BTreeMap::new();
        for (i, l) in topology.links().iter().enumerate() {
            links.push(LinkState {
                a: l.a,
                b: l.b,
                up: l.up,
                bandwidth_bps: l.params.bandwidth_bps,
                latency_ns: l.params.latency.as_nanos() as u64,
                busy: [0; 2],
            });
            for end in [l.a, l.b] {
                if let Endpoint::Switch { switch, port } = end {
                    ports.entry(switch).or_default().insert(port, i);
                }
            }
        }
        let mut host_by_ip = BTreeMap::new();
        for h in topology.hosts() {
            let link = links
                .iter()
                .position(|l| l.a == Endpoint::Host(h.id) || l.b == Endpoint::Host(h.id))
                .expect("every host has an access link");
            hosts.insert(h.id, HostState { ip: h.ip, link });
            host_by_ip.insert(h.ip, h.id);
        }

        let timeouts = cfg.ct_timeouts.to_timeouts();
        let mut switches = Vec::new();
        let mut sw_index = BTreeMap::new();
        for s in topology.switches() {
            let prog = control.program(s).cloned().unwrap_or_default();
            let mut table = FlowTable::new(0, prog.miss_policy);
            for m in prog.flow_mods() {
                table.apply(&m, SimTime::ZERO);
            }
            sw_index.insert(s, switches.len());
            switches.push(SwitchState {
                id: s,
                table,
                ct: CtTable::new(timeouts),
                agent: scenario.sdfw_enabled.then(|| DfwAgent::new(s, det)),
                queue: VecDeque::new(),
                in_service: None,
                mitigation_rules: BTreeSet::new(),
                ports: ports.remove(&s).unwrap_or_default(),
                processed: 0,
                max_queue: 0,
                published_decisions: 0,
            });
        }

        let base_service_ns = 1_000_000_000u64.div_ceil(cfg.proc_rate_pps);
        let mut sim = Simulation {
            name: scenario.name.clone(),
            seed: scenario.seed,
            sdfw: scenario.sdfw_enabled,
            cfg,
            duration_s: scenario.duration_s,
            end: SimTime::from_secs_f64(scenario.duration_s).as_nanos(),
            now: SimTime::ZERO,
            control,
            switches,
            sw_index,
            links,
            hosts,
            host_by_ip,
            packets: Vec::new(),
            flows: Vec::new(),
            flow_by_client: BTreeMap::new(),
            floods: Vec::new(),
            first_mitigation: BTreeMap::new(),
            heap: BinaryHeap::new(),
            seq: 0,
            events: 0,
            cons: Conservation::default(),
            packet_ins: BTreeMap::new(),
            base_service_ns,
        };
        sim.schedule_traffic(scenario)?;
        if sim.sdfw {
            let first = SimTime::ZERO + det.eval_interval;
            sim.schedule(first.as_nanos(), Ev::Tick);
        }
        Ok(sim)
    }

    fn schedule_traffic(&mut self, scenario: &Scenario) -> Result<(), SimError> {
        let known: Vec<Ipv4Addr> = self.host_by_ip.keys().copied().collect();
        for (index, spec) in scenario.traffic.iter().enumerate() {
            if !(spec.start_s.is_finite() && spec.start_s >= 0.0) {
                return Err(traffic_err(index, "start_s must be a non-negative number"));
            }
            let start = SimTime::from_secs_f64(spec.start_s);
            let stop = match spec.stop_s {
                Some(s) if !(s.is_finite() && s >= spec.start_s) => {
                    return Err(traffic_err(index, "stop_s must not precede start_s"));
                }
                Some(s) => Some(SimTime::from_secs_f64(s)),
                None => None,
            };
            match &spec.kind {
                TrafficKind::BenignTcp {
                    flows,
                    bytes_per_flow,
                } => {
                    if *bytes_per_flow == 0 {
                        return Err(traffic_err(index, "bytes_per_flow must be at least 1"));
                    }
                    for f in flows {
                        let host =
                            *self
                                .host_by_ip
                                .get(&f.src)
                                .ok_or_else(|| SimError::Traffic {
                                    index,
                                    reason: alloc::format!("unknown source host {}", f.src),
                                })?;
                        let id = self.flows.len() as u32;
                        let sport = 10_000u16.wrapping_add(id as u16);
                        self.flow_by_client.insert((f.src, sport), id);
                        self.flows.push(FlowState {
                            src: f.src,
                            dst: f.dst,
                            sport,
                            dport: f.dport,
                            host,
                            bytes: *bytes_per_flow,
                            bytes_sent: 0,
                            stop,
                            syn_at: None,
                            established: false,
                            fin_sent: false,
                            data_sent: 0,
                            data_delivered: 0,
                            payload_delivered: 0,
                            last_delivery: SimTime::ZERO,
                            latency_sum_ns: 0,
                        });
                        self.schedule(start.as_nanos(), Ev::FlowNext { flow: id });
                    }
                }
                TrafficKind::SynFlood {
                    src,
                    dst,
                    sport,
                    dport,
                    count,
                    rate,
                } => {
                    if *count == 0 {
                        return Err(traffic_err(index, "count must be at least 1"));
                    }
                    if !(rate.is_finite() && *rate > 0.0) {
                        return Err(traffic_err(index, "rate must be positive"));
                    }
                    let pkts = gen_syn_flood(*src, *sport, *dst, *dport, *count, *rate, start);
                    self.add_flood(index, "syn_flood", *src, Some(*dst), start, stop, pkts)?;
                }
                TrafficKind::TableMissFlood {
                    src,
                    rate,
                    duration_s,
                } => {
                    if !(rate.is_finite() && *rate > 0.0) {
                        return Err(traffic_err(index, "rate must be positive"));
                    }
                    if !(duration_s.is_finite() && *duration_s > 0.0) {
                        return Err(traffic_err(index, "duration_s must be positive"));
                    }
                    let seed = self.seed ^ (index as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
                    let pkts = gen_table_miss_flood(*src, *rate, *duration_s, start, &known, seed);
                    self.add_flood(index, "table_miss_flood", *src, None, start, stop, pkts)?;
                }
            }
        }
        Ok(())
    }

    #[allow(clippy::too_many_arguments)]
    fn add_flood(
        &mut self,
        index: usize,
        kind: &str,
        src: Ipv4Addr,
        dst: Option<Ipv4Addr>,
        start: SimTime,
        stop: Option<SimTime>,
        pkts: Vec<Packet>,
    ) -> Result<(), SimError> {
        let host = *self.host_by_ip.get(&src).ok_or_else(|| SimError::Traffic {
            index,
            reason: alloc::format!("unknown source host {src}"),
        })?;
        let fi = self.floods.len() as u32;
        self.floods.push(FloodState {
            m: FloodMetrics {
                kind: String::from(kind),
                src,
                dst,
                sent: 0,
                delivered: 0,
                dropped_by_rule: 0,
                dropped_by_mitigation: 0,
                throttled: 0,
                to_controller: 0,
                lost_to_queue_overflow: 0,
                sent_after_mitigation: 0,
                delivered_after_mitigation: 0,
            },
            start,
        });
        for p in pkts {
            if stop.is_some_and(|s| p.ts > s) {
                break;
            }
            let pid = self.packets.len() as u32;
            let t = p.ts.as_nanos();
            self.packets.push(PacketRec {
                pkt: p,
                injected_at: SimTime::ZERO,
                origin: Origin::Flood(fi),
            });
            self.schedule(t, Ev::Inject { host, pkt: pid });
        }
        Ok(())
    }

    fn schedule(&mut self, t: u64, ev: Ev) {
        self.heap.push(Sched {
            t,
            seq: self.seq,
            ev,
        });
        self.seq += 1;
    }

    pub fn control_plane(&self) -> &ControlPlane {
        &self.control
    }

    pub fn now(&self) -> SimTime {
        self.now
    }

    fn switch(&self, id: SwitchId) -> Option<&SwitchState> {
        self.sw_index.get(&id).map(|&i| &self.switches[i])
    }

    pub fn flow_table(&self, id: SwitchId) -> Option<&FlowTable> {
        self.switch(id).map(|s| &s.table)
    }

    pub fn ct_table(&self, id: SwitchId) -> Option<&CtTable> {
        self.switch(id).map(|s| &s.ct)
    }

    pub fn agent(&self, id: SwitchId) -> Option<&DfwAgent> {
        self.switch(id).and_then(|s| s.agent.as_ref())
    }

    /// Processes every event up to the scenario duration and returns the
    /// report.
    pub fn run(&mut self) -> MetricsReport {
        self.run_until(SimTime::from_nanos(self.end));
        self.report()
    }

    /// Processes events with timestamps up to `t` (capped at the scenario
    /// end).
    pub fn run_until(&mut self, t: SimTime) {
        let limit = t.as_nanos().min(self.end);
        while self.heap.peek().is_some_and(|s| s.t <= limit) {
            let s = self.heap.pop().expect("peeked");
            self.now = SimTime::from_nanos(s.t);
            self.events += 1;
            self.handle(s.ev);
        }
        if self.now.as_nanos() < limit {
            self.now = SimTime::from_nanos(limit);
        }
    }

    fn handle(&mut self, ev: Ev) {
        match ev {
            Ev::Inject { host, pkt } => self.inject(host, pkt),
            Ev::SwitchArrive { sw, port, pkt } => self.switch_arrive(sw, port, pkt),
            Ev::ServiceDone { sw } => self.service_done(sw),
            Ev::HostArrive { host, pkt } => self.host_arrive(host, pkt),
            Ev::FlowNext { flow } => self.flow_next(flow),
            Ev::Tick => self.tick(),
        }
    }

    fn new_packet(&mut self, pkt: Packet, origin: Origin) -> u32 {
        let pid = self.packets.len() as u32;
        self.packets.push(PacketRec {
            pkt,
            injected_at: self.now,
            origin,
        });
        pid
    }

    fn inject(&mut self, host: HostId, pid: u32) {
        self.cons.injected += 1;
        let now = self.now;
        let rec = &mut self.packets[pid as usize];
        rec.injected_at = now;
        rec.pkt.ts = now;
        if let Origin::Flood(f) = rec.origin {
            let src = rec.pkt.header.ip_src;
            let fm = &mut self.floods[f as usize].m;
            fm.sent += 1;
            if self.first_mitigation.get(&src).is_some_and(|t| *t <= now) {
                fm.sent_after_mitigation += 1;
            }
        }
        let link = self.hosts[&host].link;
        self.transmit(link, Endpoint::Host(host), pid);
    }

    /// Serialises the packet onto the link away from `from` and schedules
    /// its arrival at the far end.
    fn transmit(&mut self, link: usize, from: Endpoint, pid: u32) {
        let l = &mut self.links[link];
        if !l.up {
            self.settle(pid, Fate::Unroutable);
            return;
        }
        let (dir, to) = if l.a == from { (0, l.b) } else { (1, l.a) };
        let bits = u128::from(self.packets[pid as usize].pkt.wire_size()) * 8;
        let ser = (bits * 1_000_000_000).div_ceil(u128::from(l.bandwidth_bps)) as u64;
        let start = l.busy[dir].max(self.now.as_nanos());
        l.busy[dir] = start + ser;
        let arrive = start + ser + l.latency_ns;
        let ev = match to {
            Endpoint::Switch { switch, port } => Ev::SwitchArrive {
                sw: self.sw_index[&switch],
                port,
                pkt: pid,
            },
            Endpoint::Host(host) => Ev::HostArrive { host, pkt: pid },
        };
        self.schedule(arrive, ev);
    }

    fn switch_arrive(&mut self, sw: usize, port: PortId, pid: u32) {
        self.packets[pid as usize].pkt.header.in_port = port;
        let cap = self.cfg.queue_capacity;
        let s = &mut self.switches[sw];
        if s.in_service.is_none() {
            self.start_service(sw, pid);
        } else if s.queue.len() >= cap {
            self.settle(pid, Fate::QueueOverflow);
        } else {
            s.queue.push_back(pid);
            s.max_queue = s.max_queue.max(s.queue.len());
        }
    }

    fn start_service(&mut self, sw: usize, pid: u32) {
        let (outcome, passes) = self.pipeline(sw, pid);
        let svc = self.base_service_ns + u64::from(passes) * self.cfg.ct_cost_ns;
        let s = &mut self.switches[sw];
        s.processed += 1;
        s.in_service = Some((pid, outcome));
        let t = self.now.as_nanos() + svc;
        self.schedule(t, Ev::ServiceDone { sw });
    }

    /// Runs the packet through the flow table (and conntrack, on
    /// recirculation) and returns its fate and the number of ct passes.
    fn pipeline(&mut self, sw: usize, pid: u32) -> (Outcome, u32) {
        let now = self.now;
        let pkt = self.packets[pid as usize].pkt;
        let s = &mut self.switches[sw];
        let mut ct_state = CtState::UNTRACKED;
        let mut ct_key: Option<ConnKey> = None;
        let mut passes = 0u32;
        let outcome = loop {
            let (rule_id, actions) = match s.table.lookup(&pkt, ct_state) {
                LookupResult::TableMiss => {
                    break match s.table.miss_policy() {
                        MissPolicy::Drop => Outcome::Settle(Fate::DroppedByRule),
                        MissPolicy::PacketIn => Outcome::Settle(Self::packet_in(s, &pkt, now)),
                    };
                }
                LookupResult::Matched { rule_id, actions } => (rule_id, actions),
            };
            // Every action ends the pass, so only the head of the list matters;
            // an empty list drops.
            match actions.first().copied() {
                None => break Outcome::Settle(Fate::DroppedByRule),
                Some(Action::Output(p)) => break Outcome::Forward(p),
                Some(Action::Drop) => {
                    let fate = if s.mitigation_rules.contains(&rule_id) {
                        Fate::DroppedByMitigation
                    } else {
                        Fate::DroppedByRule
                    };
                    break Outcome::Settle(fate);
                }
                Some(Action::SendToConntrack { zone, .. }) => {
                    if passes >= MAX_CT_PASSES {
                        break Outcome::Settle(Fate::DroppedByRule);
                    }
                    let c = s.ct.classify(&pkt, zone, now);
                    ct_state = c.state;
                    ct_key = Some(c.key);
                    passes += 1;
                    continue;
                }
                Some(Action::CommitAndOutput(p)) => {
                    if let Some(k) = ct_key {
                        // Already-committed connections make this a no-op.
                        let _ = s.ct.commit(&k, now);
                    }
                    break Outcome::Forward(p);
                }
                Some(Action::PacketIn) => break Outcome::Settle(Self::packet_in(s, &pkt, now)),
                Some(Action::RateLimit { .. } | Action::RedirectHoneypot) => {
                    break Outcome::Settle(Fate::DroppedByRule);
                }
            }
        };
        s.ct.end_pass();
        (outcome, passes)
    }

    fn packet_in(s: &mut SwitchState, pkt: &Packet, now: SimTime) -> Fate {
        match s
            .agent
            .as_mut()
            .map(|a| a.packet_in_guard(pkt.header.ip_src, now))
        {
            Some(GuardVerdict::Throttle) => Fate::Throttled,
            Some(GuardVerdict::Allow) | None => Fate::ToController,
        }
    }

    fn service_done(&mut self, sw: usize) {
        let Some((pid, outcome)) = self.switches[sw].in_service.take() else {
            return;
        };
        match outcome {
            Outcome::Settle(f) => self.settle(pid, f),
            Outcome::Forward(port) => match self.switches[sw].ports.get(&port).copied() {
                Some(link) => {
                    let from = Endpoint::Switch {
                        switch: self.switches[sw].id,
                        port,
                    };
                    self.transmit(link, from, pid);
                }
                None => self.settle(pid, Fate::Unroutable),
            },
        }
        if let Some(next) = self.switches[sw].queue.pop_front() {
            self.start_service(sw, next);
        }
    }

    fn settle(&mut self, pid: u32, fate: Fate) {
        let rec = &self.packets[pid as usize];
        let src = rec.pkt.header.ip_src;
        match fate {
            Fate::Delivered => self.cons.delivered += 1,
            Fate::DroppedByRule => self.cons.dropped_by_rule += 1,
            Fate::DroppedByMitigation => self.cons.dropped_by_mitigation += 1,
            Fate::Throttled => {
                self.cons.throttled_miss += 1;
                self.packet_ins.entry(src).or_default().throttled += 1;
            }
            Fate::ToController => {
                self.cons.to_controller += 1;
                self.packet_ins.entry(src).or_default().to_controller += 1;
            }
            Fate::QueueOverflow => self.cons.lost_to_queue_overflow += 1,
            Fate::Unroutable => self.cons.unroutable += 1,
        }
        if let Origin::Flood(f) = rec.origin {
            let after = self
                .first_mitigation
                .get(&src)
                .is_some_and(|t| *t <= rec.injected_at);
            let fm = &mut self.floods[f as usize].m;
            match fate {
                Fate::Delivered => {
                    fm.delivered += 1;
                    if after {
                        fm.delivered_after_mitigation += 1;
                    }
                }
                Fate::DroppedByRule => fm.dropped_by_rule += 1,
                Fate::DroppedByMitigation => fm.dropped_by_mitigation += 1,
                Fate::Throttled => fm.throttled += 1,
                Fate::ToController => fm.to_controller += 1,
                Fate::QueueOverflow => fm.lost_to_queue_overflow += 1,
                Fate::Unroutable => {}
            }
        }
    }

    fn host_arrive(&mut self, host: HostId, pid: u32) {
        let ip = self.hosts[&host].ip;
        let rec = self.packets[pid as usize].clone();
        let pkt = rec.pkt;
        if pkt.header.ip_dst != ip {
            self.settle(pid, Fate::Unroutable);
            return;
        }
        self.settle(pid, Fate::Delivered);
        if let Origin::Flow(f) = rec.origin {
            if pkt.payload_len > 0 {
                let fl = &mut self.flows[f as usize];
                fl.data_delivered += 1;
                fl.payload_delivered += u64::from(pkt.payload_len);
                fl.last_delivery = self.now;
                fl.latency_sum_ns += u128::from(self.now.as_nanos() - rec.injected_at.as_nanos());
            }
        }
        if pkt.protocol != Protocol::Tcp {
            return;
        }
        let syn = pkt.tcp_flags.contains(TcpFlags::SYN);
        let ack = pkt.tcp_flags.contains(TcpFlags::ACK);
        if syn && !ack {
            // Every host listens: answer with a SYN-ACK.
            let h = &pkt.header;
            let reply = Packet::tcp(
                h.ip_dst,
                h.tp_dst,
                h.ip_src,
                h.tp_src,
                TcpFlags::SYN | TcpFlags::ACK,
            )
            .with_seq(0, pkt.seq.wrapping_add(1));
            let rid = self.new_packet(reply, Origin::Reply);
            self.inject_now(host, rid);
        } else if syn && ack {
            let Some(&f) = self.flow_by_client.get(&(ip, pkt.header.tp_dst)) else {
                return;
            };
            let fl = &mut self.flows[f as usize];
            if fl.established || fl.dst != pkt.header.ip_src {
                return;
            }
            fl.established = true;
            let ack = Packet::tcp(fl.src, fl.sport, fl.dst, fl.dport, TcpFlags::ACK).with_seq(1, 1);
            let aid = self.new_packet(ack, Origin::Flow(f));
            self.inject_now(host, aid);
            let t = self.now.as_nanos();
            self.schedule(t, Ev::FlowNext { flow: f });
        }
    }

    fn inject_now(&mut self, host: HostId, pid: u32) {
        self.inject(host, pid);
    }

    fn flow_next(&mut self, f: u32) {
        let now = self.now;
        let mss = u64::from(self.cfg.mss);
        let fl = &mut self.flows[f as usize];
        let host = fl.host;
        if fl.syn_at.is_none() {
            fl.syn_at = Some(now);
            let syn = Packet::tcp(fl.src, fl.sport, fl.dst, fl.dport, TcpFlags::SYN);
            let pid = self.new_packet(syn, Origin::Flow(f));
            self.inject(host, pid);
            return;
        }
        if fl.fin_sent || !fl.established {
            return;
        }
        let stopped = fl.stop.is_some_and(|s| now > s);
        let pkt = if fl.bytes_sent >= fl.bytes || stopped {
            fl.fin_sent = true;
            Packet::tcp(
                fl.src,
                fl.sport,
                fl.dst,
                fl.dport,
                TcpFlags::FIN | TcpFlags::ACK,
            )
        } else {
            let len = (fl.bytes - fl.bytes_sent).min(mss);
            let seq = 1u32.wrapping_add(fl.bytes_sent as u32);
            fl.bytes_sent += len;
            fl.data_sent += 1;
            Packet::tcp(fl.src, fl.sport, fl.dst, fl.dport, TcpFlags::ACK)
                .with_seq(seq, 1)
                .with_payload(len as u32)
        };
        let fin = fl.fin_sent;
        let pid = self.new_packet(pkt, Origin::Flow(f));
        self.inject(host, pid);
        if !fin {
            // Next segment as soon as the access link is free.
            let link = &self.links[self.hosts[&host].link];
            let dir = if link.a == Endpoint::Host(host) { 0 } else { 1 };
            let t = link.busy[dir];
            self.schedule(t, Ev::FlowNext { flow: f });
        }
    }

    fn tick(&mut self) {
        let now = self.now;
        for i in 0..self.switches.len() {
            let s = &mut self.switches[i];
            let Some(agent) = s.agent.as_mut() else {
                continue;
            };
            let events = s.ct.drain_events();
            agent.observe_ct_events(&events);
            s.ct.expire(now);
            for m in agent.on_tick(&s.table, now) {
                let summary = s.table.apply(&m.flow_mod, now);
                if let Some(id) = summary.affected.first() {
                    s.mitigation_rules.insert(*id);
                }
                self.first_mitigation.entry(m.src).or_insert(now);
                let _ = self.control.publish_mitigation(&m);
            }
            for (src, dst) in agent.withdrawable(now) {
                if let Some(fm) = agent.withdraw_mitigation(src, dst, now) {
                    s.table.apply(&fm, now);
                }
            }
            let fresh: Vec<_> = agent.decisions()[s.published_decisions..].to_vec();
            s.published_decisions = agent.decisions().len();
            for d in &fresh {
                let _ = self.control.publish_decision(d);
            }
        }
        let next = now + self.cfg.detection.to_config().eval_interval;
        if next.as_nanos() <= self.end {
            self.schedule(next.as_nanos(), Ev::Tick);
        }
    }

    /// Snapshot of the run so far.
    pub fn report(&self) -> MetricsReport {
        let pairs: Vec<PairMetrics> = self
            .flows
            .iter()
            .map(|f| {
                let span = f.syn_at.map_or(0, |s| {
                    f.last_delivery.as_nanos().saturating_sub(s.as_nanos())
                });
                let goodput = if span > 0 {
                    (f.payload_delivered * 8) as f64 / (span as f64 / 1e9)
                } else {
                    0.0
                };
                let latency = if f.data_delivered > 0 {
                    f.latency_sum_ns as f64 / f.data_delivered as f64 / 1e9
                } else {
                    0.0
                };
                PairMetrics {
                    src: f.src,
                    dst: f.dst,
                    data_packets_sent: f.data_sent,
                    data_packets_delivered: f.data_delivered,
                    delivered_payload_bytes: f.payload_delivered,
                    established: f.established,
                    goodput_bps: goodput,
                    mean_latency_s: latency,
                }
            })
            .collect();
        let mean = |xs: &mut dyn Iterator<Item = f64>| {
            let (sum, n) = xs.fold((0.0, 0u64), |(s, n), x| (s + x, n + 1));
            if n == 0 {
                0.0
            } else {
                sum / n as f64
            }
        };
        let mean_goodput_bps = mean(&mut pairs.iter().map(|p| p.goodput_bps));
        let mean_latency_s = mean(
            &mut pairs
                .iter()
                .filter(|p| p.data_packets_delivered > 0)
                .map(|p| p.mean_latency_s),
        );

        let mut decisions = Vec::new();
        let mut mitigations = Vec::new();
        let mut reports = Vec::new();
        let mut switches = BTreeMap::new();
        for s in &self.switches {
            if let Some(a) = &s.agent {
                decisions.extend(a.decisions().iter().cloned());
                mitigations.extend(a.mitigations().iter().cloned());
                reports.push(a.report(&s.table, self.now));
            }
            let rules = s
                .table
                .rules()
                .iter()
                .map(|r| RuleSnapshot {
                    priority: r.priority,
                    fields: r.match_spec.dump_fields(),
                    actions: render_actions(&r.actions),
                    n_packets: r.n_packets,
                    n_bytes: r.n_bytes,
                })
                .collect();
            switches.insert(
                s.id,
                SwitchMetrics {
                    processed: s.processed,
                    max_queue: s.max_queue,
                    ct_entries: s.ct.len(),
                    table_misses: s.table.misses(),
                    rules,
                },
            );
        }
        decisions.sort_by_key(|d| (d.ts, d.switch));
        mitigations.sort_by_key(|m| (m.installed_at, m.switch));
        let fabric = aggregate_stats(&reports);

        let syn_start = self
            .floods
            .iter()
            .filter(|f| f.m.kind == "syn_flood")
            .map(|f| f.start)
            .min();
        let detection_time_s = syn_start.and_then(|start| {
            mitigations
                .iter()
                .filter(|m| m.installed_at >= start)
                .map(|m| m.installed_at)
                .min()
                .map(|t| t.since(start).as_secs_f64())
        });

        let mut cons = self.cons;
        cons.in_flight_at_end = cons.injected - (cons.accounted() - cons.in_flight_at_end);
        MetricsReport {
            scenario: self.name.clone(),
            seed: self.seed,
            sdfw_enabled: self.sdfw,
            duration_s: self.duration_s,
            events_processed: self.events,
            pairs,
            mean_goodput_bps,
            mean_latency_s,
            detection_time_s,
            decisions,
            mitigations,
            packet_in_count: cons.to_controller,
            packet_ins_by_src: self.packet_ins.clone(),
            dropped_by_mitigation: cons.dropped_by_mitigation,
            floods: self.floods.iter().map(|f| f.m.clone()).collect(),
            conservation: cons,
            switches,
            fabric_decisions: fabric.total_decisions,
            fabric_mitigations: fabric.total_mitigations,
        }
    }
}

/// Builds and runs a scenario.
pub fn run(scenario: &Scenario) -> Result<MetricsReport, SimError> {
    Ok(Simulation::new(scenario)?.run())
}
