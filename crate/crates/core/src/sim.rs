//! One simulation run: wires the event queue, medium, mobility, DSR and the
//! reputation layer together and keeps the counters.

use std::collections::BTreeSet;
use std::fmt;
use std::io;
use std::time::Instant;

use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::config::{MobilityModel, Protocol, RunConfig};
use crate::dsr::{
    Action, DsrConfig, DsrNode, Frame, Packet, PacketId, PacketKind, Payload, PlainDsr,
    RoutingHooks,
};
use crate::engine::{rng_stream, EventQueue, SimTime, StreamId};
use crate::metrics::{Counters, DropCause, EventLog, LogKind, RunResult};
use crate::mirror::{MirrorHooks, MirrorNode, WatchEffect, WatchKey};
use crate::mobility::{grid_place, next_leg, position_at, PlacementError, WaypointState};
use crate::radio::{Medium, Position, Reception};
use crate::scenario::{assign_selfish, random_flows, should_forward, BehaviorPolicy, TrafficFlow};
use crate::NodeId;

#[derive(Debug, Error)]
pub enum SimError {
    #[error(transparent)]
    Placement(#[from] PlacementError),
    #[error("invalid setup: {0}")]
    Setup(String),
    #[error("event log: {0}")]
    Log(#[from] io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RoundPhase {
    Pfr,
    Lbp,
    Commit,
}

impl RoundPhase {
    fn as_str(self) -> &'static str {
        match self {
            RoundPhase::Pfr => "pfr",
            RoundPhase::Lbp => "lbp",
            RoundPhase::Commit => "commit",
        }
    }
}

#[derive(Debug)]
pub enum Ev {
    /// The `k`-th packet of a traffic flow.
    Emit { flow: usize, k: u64 },
    /// A transmission delayed by jitter.
    Send { node: NodeId, frame: Frame },
    /// A frame arrives at everyone who heard it.
    Deliver {
        frame: Frame,
        receivers: Vec<(NodeId, Reception)>,
    },
    Waypoint { node: NodeId },
    Discovery {
        node: NodeId,
        dst: NodeId,
        generation: u32,
    },
    Watchdog { observer: NodeId, key: WatchKey },
    Round { index: u32, phase: RoundPhase },
}

/// Overrides for scripted scenarios. Anything left `None` comes from the
/// configuration and seed.
#[derive(Debug, Clone, Default)]
pub struct Setup {
    /// Fixed positions; nodes then never move.
    pub positions: Option<Vec<Position>>,
    pub policies: Option<Vec<BehaviorPolicy>>,
    pub flows: Option<Vec<TrafficFlow>>,
}

#[derive(Debug)]
struct Node {
    dsr: DsrNode,
    mirror: Option<MirrorNode>,
    policy: BehaviorPolicy,
    behavior: ChaCha8Rng,
    motion: WaypointState,
    mobility_rng: ChaCha8Rng,
    broadcast_seq: u32,
}

/// Mirror broadcasts take ids from the upper half of the sequence space so
/// data and route packets are numbered identically with or without them.
const BROADCAST_SEQ_BASE: u32 = 1 << 31;

pub struct Simulation {
    cfg: RunConfig,
    queue: EventQueue<Ev>,
    nodes: Vec<Node>,
    medium: Medium,
    flows: Vec<TrafficFlow>,
    counters: Counters,
    delivered: Vec<PacketId>,
    log: Option<EventLog>,
    positions: Vec<Position>,
    positions_at: Option<SimTime>,
    dsr_cfg: DsrConfig,
    started: Instant,
}

impl fmt::Debug for Simulation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Simulation")
            .field("now", &self.queue.now())
            .field("nodes", &self.nodes.len())
            .finish_non_exhaustive()
    }
}

impl Simulation {
    pub fn new(cfg: RunConfig) -> Result<Self, SimError> {
        Simulation::with_setup(cfg, Setup::default())
    }

    pub fn with_setup(cfg: RunConfig, setup: Setup) -> Result<Self, SimError> {
        let n = cfg.nodes;
        let fixed = setup.positions.is_some();
        let start = match setup.positions {
            Some(p) if p.len() == n => p,
            Some(p) => {
                return Err(SimError::Setup(format!(
                    "{} positions for {n} nodes",
                    p.len()
                )))
            }
            None => grid_place(n, cfg.terrain)?,
        };
        let policies = match setup.policies {
            Some(p) if p.len() == n => p,
            Some(p) => {
                return Err(SimError::Setup(format!("{} policies for {n} nodes", p.len())))
            }
            None => assign_selfish(
                n,
                cfg.selfish_fraction,
                cfg.selfish_drop_prob,
                &mut rng_stream(cfg.seed, StreamId::Selfishness),
            ),
        };
        let horizon = cfg.sim_time;
        let flows = setup.flows.unwrap_or_else(|| {
            random_flows(
                n,
                cfg.flows,
                cfg.flow_rate,
                cfg.flow_payload,
                cfg.flow_start,
                cfg.flow_stop.min(horizon),
                &mut rng_stream(cfg.seed, StreamId::Traffic),
            )
        });
        if let Some(f) = flows.iter().find(|f| f.src.index() >= n || f.dst.index() >= n) {
            return Err(SimError::Setup(format!("flow {}->{} names an unknown node", f.src, f.dst)));
        }
        let moving = !fixed
            && cfg.mobility_model == MobilityModel::RandomWaypoint
            && !cfg.mobility.is_static();
        let dsr_cfg = DsrConfig::default();
        let mdsr = cfg.protocol == Protocol::Mdsr;
        let nodes: Vec<Node> = (0..n)
            .map(|i| {
                let id = NodeId(i as u32);
                Node {
                    dsr: DsrNode::new(id, dsr_cfg.clone(), rng_stream(cfg.seed, StreamId::Jitter(id.0))),
                    mirror: mdsr.then(|| MirrorNode::new(id, cfg.mirror.clone())),
                    policy: policies[i],
                    behavior: rng_stream(cfg.seed, StreamId::Behavior(id.0)),
                    motion: if moving {
                        WaypointState::initial(start[i])
                    } else {
                        WaypointState::stationary(start[i])
                    },
                    mobility_rng: rng_stream(cfg.seed, StreamId::Mobility(id.0)),
                    broadcast_seq: BROADCAST_SEQ_BASE,
                }
            })
            .collect();

        let mut queue = EventQueue::new();
        for (i, node) in nodes.iter().enumerate() {
            if let Some(t) = node.motion.arrival() {
                queue
                    .schedule(t, Ev::Waypoint { node: NodeId(i as u32) })
                    .expect("queue starts at zero");
            }
        }
        for (i, f) in flows.iter().enumerate() {
            if f.start < f.stop {
                queue
                    .schedule(f.start, Ev::Emit { flow: i, k: 0 })
                    .expect("queue starts at zero");
            }
        }
        if mdsr {
            let r = cfg.mirror.round;
            let w = cfg.mirror.collect_window;
            let mut k = 1u32;
            loop {
                let t = SimTime::from_micros(r.as_micros() * k as u64);
                if t + w + w > horizon {
                    break;
                }
                for (phase, at) in [
                    (RoundPhase::Pfr, t),
                    (RoundPhase::Lbp, t + w),
                    (RoundPhase::Commit, t + w + w),
                ] {
                    queue
                        .schedule(at, Ev::Round { index: k, phase })
                        .expect("queue starts at zero");
                }
                k += 1;
            }
        }
        Ok(Simulation {
            medium: Medium::new(cfg.radio.clone(), cfg.promiscuous),
            positions: start,
            positions_at: None,
            cfg,
            queue,
            nodes,
            flows,
            counters: Counters::default(),
            delivered: Vec::new(),
            log: None,
            dsr_cfg,
            started: Instant::now(),
        })
    }

    pub fn set_log(&mut self, log: EventLog) {
        self.log = Some(log);
    }

    pub fn config(&self) -> &RunConfig {
        &self.cfg
    }

    pub fn now(&self) -> SimTime {
        self.queue.now()
    }

    pub fn counters(&self) -> &Counters {
        &self.counters
    }

    pub fn flows(&self) -> &[TrafficFlow] {
        &self.flows
    }

    pub fn policies(&self) -> Vec<BehaviorPolicy> {
        self.nodes.iter().map(|n| n.policy).collect()
    }

    pub fn delivered_ids(&self) -> BTreeSet<PacketId> {
        self.delivered.iter().copied().collect()
    }

    pub fn mirror(&self, node: NodeId) -> Option<&MirrorNode> {
        self.nodes[node.index()].mirror.as_ref()
    }

    pub fn dsr(&self, node: NodeId) -> &DsrNode {
        &self.nodes[node.index()].dsr
    }

    /// Seeds `route[0]`'s cache with `route`, as if a reply had arrived.
    pub fn install_route(&mut self, route: Vec<NodeId>) -> bool {
        let now = self.now();
        let src = route[0];
        self.nodes[src.index()].dsr.cache_mut().insert(route, now)
    }

    pub fn set_policy(&mut self, node: NodeId, policy: BehaviorPolicy) {
        self.nodes[node.index()].policy = policy;
    }

    /// Adds a flow mid-run; emissions before the current time are skipped.
    pub fn add_flow(&mut self, mut flow: TrafficFlow) {
        let now = self.now();
        let step = flow.interval.as_micros().max(1);
        let mut k = 0;
        while flow.start + SimTime::from_micros(k * step) < now {
            k += 1;
        }
        flow.stop = flow.stop.min(self.cfg.sim_time);
        let first = flow.start + SimTime::from_micros(k * step);
        let idx = self.flows.len();
        if first < flow.stop {
            self.queue
                .schedule(first, Ev::Emit { flow: idx, k })
                .expect("not in the past");
        }
        self.flows.push(flow);
    }

    /// Dispatches every event up to `t` (capped at the horizon).
    pub fn run_until(&mut self, t: SimTime) {
        let t = t.min(self.cfg.sim_time);
        while let Some((now, ev)) = self.queue.pop_until(t) {
            self.dispatch(now, ev);
        }
        self.queue.advance_to(t);
    }

    /// Data packets buffered at sources or still on the air.
    pub fn in_flight(&self) -> u64 {
        let buffered: usize = self.nodes.iter().map(|n| n.dsr.buffer().len()).sum();
        let on_air = self
            .queue
            .pending()
            .filter(|(_, ev)| match ev {
                Ev::Send { frame, .. } => frame.packet.kind() == PacketKind::Data,
                // An attempt whose addressee is out of range is only
                // overheard; the packet itself was already dropped or requeued.
                Ev::Deliver { frame, receivers } => {
                    frame.packet.kind() == PacketKind::Data
                        && receivers.iter().any(|&(r, c)| Some(r) == frame.next_hop && c == Reception::Addressed)
                }
                _ => false,
            })
            .count();
        (buffered + on_air) as u64
    }

    pub fn result(&self) -> RunResult {
        RunResult::new(
            self.cfg.protocol,
            self.cfg.nodes,
            self.cfg.selfish_fraction,
            self.cfg.seed,
            self.counters.clone(),
            self.in_flight(),
            self.started.elapsed(),
        )
    }

    /// Runs to the horizon and closes the event log.
    pub fn finish(mut self) -> Result<RunResult, SimError> {
        self.run_until(self.cfg.sim_time);
        let result = self.result();
        if let Some(log) = self.log.take() {
            log.finish()?;
        }
        Ok(result)
    }

    fn log(&mut self, kind: LogKind, node: Option<NodeId>, detail: fmt::Arguments<'_>) {
        let now = self.queue.now();
        if let Some(log) = self.log.as_mut() {
            log.record(now, kind, node, detail);
        }
    }

    fn refresh_positions(&mut self, now: SimTime) {
        if self.positions_at == Some(now) {
            return;
        }
        let terrain = self.cfg.terrain;
        let g = self.cfg.mobility.granularity;
        for (p, node) in self.positions.iter_mut().zip(&self.nodes) {
            *p = position_at(&node.motion, now, terrain, g);
        }
        self.positions_at = Some(now);
    }

    fn protected(&self, now: SimTime) -> bool {
        let d = self.cfg.mirror.duty_cycle;
        if d >= 1.0 {
            return true;
        }
        let r = self.cfg.mirror.round.as_micros();
        ((now.as_micros() % r) as f64) < d * r as f64
    }

    fn dispatch(&mut self, now: SimTime, ev: Ev) {
        match ev {
            Ev::Emit { flow, k } => self.emit(now, flow, k),
            Ev::Send { node, frame } => self.transmit(now, node, frame),
            Ev::Deliver { frame, receivers } => self.deliver(now, frame, receivers),
            Ev::Waypoint { node } => {
                let n = &mut self.nodes[node.index()];
                n.motion = next_leg(&n.motion, &mut n.mobility_rng, self.cfg.terrain, &self.cfg.mobility);
                let m = n.motion.clone();
                if let Some(t) = m.arrival() {
                    self.queue
                        .schedule(t.max(now), Ev::Waypoint { node })
                        .expect("not in the past");
                }
                self.positions_at = None;
                self.log(
                    LogKind::Move,
                    Some(node),
                    format_args!("{} {} {} {} {}", m.origin.x, m.origin.y, m.target.x, m.target.y, m.speed),
                );
            }
            Ev::Discovery {
                node,
                dst,
                generation,
            } => {
                let mut out = Vec::new();
                {
                    let n = &mut self.nodes[node.index()];
                    let mut plain = PlainDsr;
                    let mut mh;
                    let hooks: &mut dyn RoutingHooks = match n.mirror.as_mut() {
                        Some(m) => {
                            mh = MirrorHooks(m);
                            &mut mh
                        }
                        None => &mut plain,
                    };
                    n.dsr.on_discovery_timeout(dst, generation, hooks, &mut out);
                }
                self.apply(now, node, out);
            }
            Ev::Watchdog { observer, key } => {
                self.refresh_positions(now);
                let audible = self.medium.in_range(
                    &self.positions[observer.index()],
                    &self.positions[key.target.index()],
                );
                if let Some(m) = self.nodes[observer.index()].mirror.as_mut() {
                    if m.on_timeout(key, audible) {
                        log::debug!("watchdog expired at {observer}: {} -> {}", key.packet, key.target);
                    }
                }
            }
            Ev::Round { index, phase } => self.round(now, index, phase),
        }
    }

    fn emit(&mut self, now: SimTime, flow: usize, k: u64) {
        let f = self.flows[flow].clone();
        let next = f.start + SimTime::from_micros((k + 1) * f.interval.as_micros().max(1));
        if next < f.stop {
            self.queue
                .schedule(next, Ev::Emit { flow, k: k + 1 })
                .expect("not in the past");
        }
        self.counters.data_sent += 1;
        let mut out = Vec::new();
        let id = {
            let n = &mut self.nodes[f.src.index()];
            let mut plain = PlainDsr;
            let mut mh;
            let hooks: &mut dyn RoutingHooks = match n.mirror.as_mut() {
                Some(m) => {
                    mh = MirrorHooks(m);
                    &mut mh
                }
                None => &mut plain,
            };
            n.dsr.originate(f.dst, f.payload, now, hooks, &mut out)
        };
        self.log(LogKind::Orig, Some(f.src), format_args!("{id} {} {flow}", f.dst));
        self.apply(now, f.src, out);
    }

    /// Puts `frame` on the air now, or reports a broken link to the sender.
    /// Puts `frame` on the air. A unicast whose next hop has moved out of
    /// range is still radiated — neighbours overhear the attempt — and then
    /// handled as a link break.
    fn transmit(&mut self, now: SimTime, node: NodeId, frame: Frame) {
        self.refresh_positions(now);
        let broken = frame.next_hop.is_some_and(|h| {
            !self
                .medium
                .in_range(&self.positions[node.index()], &self.positions[h.index()])
        });
        let kind = frame.packet.kind();
        let size = frame.packet.size_bytes(&self.dsr_cfg.sizes);
        self.counters.tx_by_kind[kind.index()] += 1;
        self.counters.bytes_by_kind[kind.index()] += size as u64;
        let receivers = self.medium.deliver(node, frame.next_hop, &self.positions);
        if self.cfg.protocol == Protocol::Mdsr && matches!(kind, PacketKind::Data | PacketKind::Rreq) {
            self.withdraw_unheard(node, &frame, &receivers);
        }
        match frame.next_hop {
            Some(h) => self.log(
                LogKind::Tx,
                Some(node),
                format_args!("{} {} {h}", kind.as_str(), frame.packet.id),
            ),
            None => self.log(
                LogKind::Tx,
                Some(node),
                format_args!("{} {} *", kind.as_str(), frame.packet.id),
            ),
        }
        let at = now + self.cfg.radio.frame_delay(size);
        if !broken {
            self.queue
                .schedule(at, Ev::Deliver { frame, receivers })
                .expect("not in the past");
        } else {
            if !receivers.is_empty() {
                let overheard = Ev::Deliver {
                    frame: frame.clone(),
                    receivers,
                };
                self.queue.schedule(at, overheard).expect("not in the past");
            }
            let mut out = Vec::new();
            {
                let n = &mut self.nodes[node.index()];
                let mut plain = PlainDsr;
                let mut mh;
                let hooks: &mut dyn RoutingHooks = match n.mirror.as_mut() {
                    Some(m) => {
                        mh = MirrorHooks(m);
                        &mut mh
                    }
                    None => &mut plain,
                };
                n.dsr.on_link_break(frame, now, hooks, &mut out);
            }
            self.apply(now, node, out);
        }
    }

    fn deliver(&mut self, now: SimTime, frame: Frame, receivers: Vec<(NodeId, Reception)>) {
        if self.cfg.protocol == Protocol::Mdsr {
            self.watch(now, &frame, &receivers);
        }
        for &(r, class) in &receivers {
            if class != Reception::Addressed {
                continue;
            }
            let mut out = Vec::new();
            {
                let n = &mut self.nodes[r.index()];
                match &frame.packet.payload {
                    Payload::Pfr(reports) => {
                        if let Some(m) = n.mirror.as_mut() {
                            m.collect_pfr(frame.sender, reports);
                        }
                        continue;
                    }
                    Payload::Lbp(reports) => {
                        if let Some(m) = n.mirror.as_mut() {
                            m.collect_lbp(frame.sender, reports);
                        }
                        continue;
                    }
                    _ => {}
                }
                let mut plain = PlainDsr;
                let mut mh;
                let hooks: &mut dyn RoutingHooks = match n.mirror.as_mut() {
                    Some(m) => {
                        mh = MirrorHooks(m);
                        &mut mh
                    }
                    None => &mut plain,
                };
                let policy = n.policy;
                let rng = &mut n.behavior;
                let mut forward = || should_forward(&policy, rng);
                n.dsr.receive(&frame, now, hooks, &mut forward, &mut out);
            }
            self.apply(now, r, out);
        }
    }

    /// Observers outside `node`'s range cannot have heard this retransmission.
    fn withdraw_unheard(&mut self, node: NodeId, frame: &Frame, receivers: &[(NodeId, Reception)]) {
        let key = WatchKey {
            packet: frame.packet.id,
            target: node,
        };
        for (i, n) in self.nodes.iter_mut().enumerate() {
            let o = NodeId(i as u32);
            if o == node || receivers.iter().any(|&(r, _)| r == o) {
                continue;
            }
            if let Some(h) = n.mirror.as_mut().and_then(|m| m.withdraw(key)) {
                self.queue.cancel(h);
            }
        }
    }

    /// Lets the sender and every receiver account for what they saw.
    fn watch(&mut self, now: SimTime, frame: &Frame, receivers: &[(NodeId, Reception)]) {
        self.refresh_positions(now);
        let protected = self.protected(now);
        let ids: Vec<NodeId> = receivers.iter().map(|(r, _)| *r).collect();
        let obliged: Vec<NodeId> = if frame.packet.kind() == PacketKind::Rreq {
            ids.iter()
                .copied()
                .filter(|r| !self.nodes[r.index()].dsr.has_seen(frame.packet.id))
                .collect()
        } else {
            ids.clone()
        };
        let observers = std::iter::once(frame.sender).chain(ids.iter().copied());
        let mut effects = Vec::new();
        for o in observers.collect::<Vec<_>>() {
            let Some(m) = self.nodes[o.index()].mirror.as_mut() else {
                continue;
            };
            let here = self.positions[o.index()];
            let positions = &self.positions;
            let medium = &self.medium;
            let hears = |t: NodeId| medium.in_range(&here, &positions[t.index()]);
            effects.clear();
            m.observe(frame, &obliged, protected, &hears, &mut effects);
            for fx in effects.drain(..) {
                match fx {
                    WatchEffect::StartTimer(key) => {
                        let h = self.queue.schedule_in(
                            self.cfg.mirror.watchdog_timeout,
                            Ev::Watchdog { observer: o, key },
                        );
                        self.nodes[o.index()]
                            .mirror
                            .as_mut()
                            .expect("observer has a mirror")
                            .set_timer(key, h);
                    }
                    WatchEffect::CancelTimer(h) => {
                        self.queue.cancel(h);
                    }
                }
            }
        }
    }

    fn apply(&mut self, now: SimTime, node: NodeId, actions: Vec<Action>) {
        for a in actions {
            match a {
                Action::Transmit { frame, delay } => {
                    if delay == SimTime::ZERO {
                        self.transmit(now, node, frame);
                    } else {
                        self.queue
                            .schedule(now + delay, Ev::Send { node, frame })
                            .expect("not in the past");
                    }
                }
                Action::Delivered { id } => {
                    self.counters.data_received += 1;
                    self.delivered.push(id);
                    self.log(LogKind::Recv, Some(node), format_args!("{id}"));
                }
                Action::DataDropped { id, cause } => {
                    self.counters.drops_by_cause[cause.index()] += 1;
                    self.log(LogKind::Drop, Some(node), format_args!("{} {id}", cause.as_str()));
                }
                Action::ControlDropped { kind, cause } => {
                    self.counters.control_drops[cause.index()] += 1;
                    self.log(
                        LogKind::CtrlDrop,
                        Some(node),
                        format_args!("{} {}", kind.as_str(), cause.as_str()),
                    );
                }
                Action::DiscoveryTimer {
                    dst,
                    generation,
                    after,
                } => {
                    self.queue
                        .schedule(
                            now + after,
                            Ev::Discovery {
                                node,
                                dst,
                                generation,
                            },
                        )
                        .expect("not in the past");
                }
            }
        }
    }

    fn round(&mut self, now: SimTime, index: u32, phase: RoundPhase) {
        self.log(LogKind::Round, None, format_args!("{} {index}", phase.as_str()));
        for i in 0..self.nodes.len() {
            let node = NodeId(i as u32);
            let n = &mut self.nodes[i];
            let mute = self.cfg.selfish_mute && n.policy.is_selfish();
            let Some(m) = n.mirror.as_mut() else { continue };
            let payload = match phase {
                RoundPhase::Pfr => Payload::Pfr(m.start_round()),
                RoundPhase::Lbp => Payload::Lbp(m.lbp_phase()),
                RoundPhase::Commit => {
                    m.commit();
                    continue;
                }
            };
            if mute {
                continue;
            }
            let seq = n.broadcast_seq;
            n.broadcast_seq += 1;
            let packet = Packet {
                id: PacketId { origin: node, seq },
                originator: node,
                final_dest: NodeId::BROADCAST,
                route: Vec::new(),
                hop_index: 0,
                payload_size: 0,
                payload,
            };
            self.transmit(now, node, Frame::new(node, packet));
        }
    }
}

/// Convenience: one complete run from a configuration.
pub fn run(cfg: RunConfig, log: Option<EventLog>) -> Result<RunResult, SimError> {
    let mut sim = Simulation::new(cfg)?;
    if let Some(l) = log {
        sim.set_log(l);
    }
    sim.finish()
}

/// Count of data drops by cause, for reporting.
pub fn drop_summary(c: &Counters) -> String {
    DropCause::ALL
        .iter()
        .map(|d| format!("{}={}", d.as_str(), c.drops(*d)))
        .collect::<Vec<_>>()
        .join(" ")
}
