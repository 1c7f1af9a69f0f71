//! Reputation layer: each node watches its neighbours forward, exchanges
//! per-round forwarding ratios, grades every neighbour, and converts poor
//! grades into bonus points — a count of that neighbour's packets it will
//! refuse to handle.
//!
//! All reputation arithmetic is exact ([`Score`] is a rational), so grades
//! such as (0.6 + 0.8 + 0.7) / 3 come out as exactly 7/10 and the ceiling in
//! the bonus-point step never sees rounding noise.

pub mod wire;

use std::collections::{BTreeMap, HashSet};

use num_rational::Ratio;
use num_traits::{One, ToPrimitive, Zero};
use thiserror::Error;

use crate::dsr::{Frame, Packet, PacketId, PacketKind, Payload, RoutingHooks, Verdict};
use crate::engine::{EventHandle, SimTime};
use crate::NodeId;

pub use wire::Report;

pub type Score = Ratio<i128>;

pub const MAX_BP: u32 = 10;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum MirrorError {
    #[error("forwarded count {npf} exceeds received-for-forwarding count {nprf}")]
    Accounting { npf: u32, nprf: u32 },
}

/// One row of a node's neighbourhood table.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NiEntry {
    pub nprf: u32,
    pub npf: u32,
    pub g: Score,
    pub bp: u32,
}

impl Default for NiEntry {
    /// Unknown nodes are presumed honest.
    fn default() -> Self {
        NiEntry {
            nprf: 0,
            npf: 0,
            g: Score::one(),
            bp: 0,
        }
    }
}

pub fn compute_pfr(npf: u32, nprf: u32) -> Result<Score, MirrorError> {
    if npf > nprf {
        return Err(MirrorError::Accounting { npf, nprf });
    }
    if nprf == 0 {
        return Ok(Score::one());
    }
    Ok(Score::new(npf as i128, nprf as i128))
}

/// Mean of the collected forwarding ratios, clamped to [0, 1]. `None` for an
/// empty list: the caller keeps the previous grade.
pub fn compute_grade(pfrs: &[Score]) -> Option<Score> {
    if pfrs.is_empty() {
        return None;
    }
    let sum: Score = pfrs.iter().sum();
    let mean = sum / Score::from_integer(pfrs.len() as i128);
    Some(mean.clamp(Score::zero(), Score::one()))
}

/// Local bonus points `(1 - g) * 10`.
pub fn compute_lbp(grade: Score) -> Score {
    (Score::one() - grade) * Score::from_integer(MAX_BP as i128)
}

/// Ceiling of the mean of the collected local bonus points.
pub fn compute_bp(lbps: &[Score]) -> Option<u32> {
    if lbps.is_empty() {
        return None;
    }
    let sum: Score = lbps.iter().sum();
    let mean = sum / Score::from_integer(lbps.len() as i128);
    let bp = mean.ceil().to_integer().clamp(0, MAX_BP as i128);
    Some(bp as u32)
}

/// True iff no intermediate hop of `route` is known with a grade below
/// `threshold`. Endpoints are not judged; unknown nodes pass.
pub fn grade_filter(ni: &BTreeMap<NodeId, NiEntry>, route: &[NodeId], threshold: Score) -> bool {
    if route.len() <= 2 {
        return true;
    }
    route[1..route.len() - 1]
        .iter()
        .all(|n| ni.get(n).map_or(true, |e| e.g >= threshold))
}

pub fn score_from_f64(v: f64) -> Score {
    Score::approximate_float(v).unwrap_or_else(Score::zero)
}

pub fn score_to_f64(s: Score) -> f64 {
    s.to_f64().unwrap_or(f64::NAN)
}

#[derive(Debug, Clone, PartialEq)]
pub struct MirrorConfig {
    pub round: SimTime,
    /// How long each broadcast phase collects neighbours' values.
    pub collect_window: SimTime,
    pub watchdog_timeout: SimTime,
    pub grade_threshold: Score,
    /// Fraction of every round spent overhearing.
    pub duty_cycle: f64,
    /// Also gate route replies and route errors.
    pub punish_replies: bool,
    /// Count route-request rebroadcast duty alongside data forwarding.
    pub count_rreq: bool,
    /// Forwarders refuse to extend route requests through low-grade nodes.
    pub filter_rreq: bool,
    /// Report and grade only neighbours actually observed this round.
    pub evidence_only: bool,
}

impl Default for MirrorConfig {
    fn default() -> Self {
        MirrorConfig {
            round: SimTime::from_secs(60),
            collect_window: SimTime::from_secs(2),
            watchdog_timeout: SimTime::from_millis(100),
            grade_threshold: Score::new(1, 2),
            duty_cycle: 1.0,
            punish_replies: false,
            count_rreq: true,
            filter_rreq: false,
            evidence_only: false,
        }
    }
}

/// A forwarding obligation under watch: `target` must retransmit `packet`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct WatchKey {
    pub packet: PacketId,
    pub target: NodeId,
}

#[derive(Debug, Clone)]
struct Pending {
    /// Data only: the hop after `target`, so a route error for that link
    /// excuses the miss.
    onward: Option<NodeId>,
    timer: Option<EventHandle>,
}

#[derive(Debug, Clone, Default)]
pub struct TempEntry {
    pub pfr: Vec<Score>,
    pub g: Option<Score>,
    pub lbp: Vec<Score>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Phase {
    Idle,
    CollectPfr,
    CollectLbp,
}

/// What the simulator must do for the watchdog.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum WatchEffect {
    StartTimer(WatchKey),
    CancelTimer(EventHandle),
}

/// Per-node reputation state.
#[derive(Debug, Clone)]
pub struct MirrorNode {
    pub id: NodeId,
    cfg: MirrorConfig,
    ni: BTreeMap<NodeId, NiEntry>,
    temp: BTreeMap<NodeId, TempEntry>,
    phase: Phase,
    pending: BTreeMap<WatchKey, Pending>,
    heard_forward: HashSet<WatchKey>,
    /// (packet, culprit) pairs that already cost the culprit a point.
    charged: HashSet<(PacketId, NodeId)>,
}

impl MirrorNode {
    pub fn new(id: NodeId, cfg: MirrorConfig) -> Self {
        MirrorNode {
            id,
            cfg,
            ni: BTreeMap::new(),
            temp: BTreeMap::new(),
            phase: Phase::Idle,
            pending: BTreeMap::new(),
            heard_forward: HashSet::new(),
            charged: HashSet::new(),
        }
    }

    pub fn config(&self) -> &MirrorConfig {
        &self.cfg
    }

    pub fn ni(&self) -> &BTreeMap<NodeId, NiEntry> {
        &self.ni
    }

    pub fn ni_mut(&mut self) -> &mut BTreeMap<NodeId, NiEntry> {
        &mut self.ni
    }

    pub fn temp(&self) -> &BTreeMap<NodeId, TempEntry> {
        &self.temp
    }

    pub fn pending_count(&self) -> usize {
        self.pending.len()
    }

    pub fn set_timer(&mut self, key: WatchKey, handle: EventHandle) {
        if let Some(p) = self.pending.get_mut(&key) {
            p.timer = Some(handle);
        }
    }

    fn bp_of(&self, n: NodeId) -> u32 {
        if n == self.id || n == NodeId::BROADCAST {
            return 0;
        }
        self.ni.get(&n).map_or(0, |e| e.bp)
    }

    /// First of originator, final destination and previous hop that this
    /// node is still punishing.
    fn culprit(&self, packet: &Packet, prev_hop: NodeId) -> Option<NodeId> {
        [packet.originator, packet.final_dest, prev_hop]
            .into_iter()
            .find(|&n| self.bp_of(n) > 0)
    }

    fn charge(&mut self, packet: PacketId, culprit: NodeId) {
        if self.charged.insert((packet, culprit)) {
            if let Some(e) = self.ni.get_mut(&culprit) {
                e.bp = e.bp.saturating_sub(1);
            }
        }
    }

    fn gated(&self, kind: PacketKind) -> bool {
        match kind {
            PacketKind::Data | PacketKind::Rreq => true,
            PacketKind::Rrep | PacketKind::Rerr => self.cfg.punish_replies,
            PacketKind::PfrBroadcast | PacketKind::LbpBroadcast => false,
        }
    }

    /// Punishment gate for a packet handed to this node by `prev_hop`.
    pub fn punish_gate(&mut self, packet: &Packet, prev_hop: NodeId) -> Verdict {
        if !self.gated(packet.kind()) {
            return Verdict::Admit;
        }
        match self.culprit(packet, prev_hop) {
            Some(culprit) => {
                self.charge(packet.id, culprit);
                Verdict::Drop { culprit }
            }
            None => Verdict::Admit,
        }
    }

    pub fn accept_route(&self, route: &[NodeId]) -> bool {
        grade_filter(&self.ni, route, self.cfg.grade_threshold)
    }

    pub fn accept_rreq(&self, route: &[NodeId]) -> bool {
        !self.cfg.filter_rreq || self.rreq_route_ok(route)
    }

    fn rreq_route_ok(&self, route: &[NodeId]) -> bool {
        route[1..]
            .iter()
            .all(|n| self.ni.get(n).map_or(true, |e| e.g >= self.cfg.grade_threshold))
    }

    /// Would this node, in the target's place, legitimately refuse `packet`?
    fn excused(&self, packet: &Packet, prev_hop: NodeId) -> bool {
        if self.gated(packet.kind()) && self.culprit(packet, prev_hop).is_some() {
            return true;
        }
        packet.kind() == PacketKind::Rreq && !self.accept_rreq(&packet.route)
    }

    /// Processes one frame this node sent or heard. `receivers` is everyone
    /// that got the frame, except that for a route request only first-time
    /// receivers belong there: a duplicate carries no rebroadcast duty.
    /// `hears(t)` says whether `t` is within this node's range. New watches
    /// are reported through `effects`.
    pub fn observe(
        &mut self,
        frame: &Frame,
        receivers: &[NodeId],
        protected: bool,
        hears: &dyn Fn(NodeId) -> bool,
        effects: &mut Vec<WatchEffect>,
    ) {
        let sender = frame.sender;
        let packet = &frame.packet;
        if sender != self.id {
            self.ni.entry(sender).or_default();
            self.resolve(frame, effects);
        }
        if !protected {
            return;
        }
        match packet.kind() {
            PacketKind::Data => {
                let Some(target) = frame.next_hop else { return };
                if target == packet.final_dest
                    || target == self.id
                    || !receivers.contains(&target)
                    || (sender != self.id && !hears(target))
                {
                    return;
                }
                let onward = packet.route.get(packet.hop_index + 1).copied();
                self.consider(packet, sender, target, onward, effects);
            }
            PacketKind::Rreq if self.cfg.count_rreq => {
                for &target in receivers {
                    if target == self.id
                        || target == packet.final_dest
                        || packet.route.contains(&target)
                        || (sender != self.id && !hears(target))
                    {
                        continue;
                    }
                    let key = WatchKey {
                        packet: packet.id,
                        target,
                    };
                    if self.heard_forward.contains(&key) || self.pending.contains_key(&key) {
                        continue;
                    }
                    self.consider(packet, sender, target, None, effects);
                }
            }
            _ => {}
        }
    }

    fn resolve(&mut self, frame: &Frame, effects: &mut Vec<WatchEffect>) {
        let sender = frame.sender;
        let packet = &frame.packet;
        match &packet.payload {
            Payload::Data | Payload::Rreq => {
                let key = WatchKey {
                    packet: packet.id,
                    target: sender,
                };
                if packet.kind() == PacketKind::Rreq {
                    self.heard_forward.insert(key);
                }
                if let Some(p) = self.pending.remove(&key) {
                    if let Some(e) = self.ni.get_mut(&sender) {
                        e.npf += 1;
                    }
                    if let Some(h) = p.timer {
                        effects.push(WatchEffect::CancelTimer(h));
                    }
                }
            }
            Payload::Rerr { from, to } if *from == sender => {
                let excused: Vec<WatchKey> = self
                    .pending
                    .iter()
                    .filter(|(k, p)| k.target == sender && p.onward == Some(*to))
                    .map(|(k, _)| *k)
                    .collect();
                for key in excused {
                    let p = self.pending.remove(&key).expect("listed above");
                    if let Some(e) = self.ni.get_mut(&sender) {
                        e.nprf -= 1;
                    }
                    if let Some(h) = p.timer {
                        effects.push(WatchEffect::CancelTimer(h));
                    }
                }
            }
            _ => {}
        }
    }

    fn consider(
        &mut self,
        packet: &Packet,
        prev_hop: NodeId,
        target: NodeId,
        onward: Option<NodeId>,
        effects: &mut Vec<WatchEffect>,
    ) {
        if self.excused(packet, prev_hop) {
            return;
        }
        let key = WatchKey {
            packet: packet.id,
            target,
        };
        if self.pending.contains_key(&key) {
            return;
        }
        let entry = self.ni.entry(target).or_default();
        if entry.bp > 0 {
            // Still serving its punishment: it is allowed to drop this one.
            self.charge(packet.id, target);
            return;
        }
        entry.nprf += 1;
        self.pending.insert(
            key,
            Pending {
                onward,
                timer: None,
            },
        );
        effects.push(WatchEffect::StartTimer(key));
    }

    /// `key.target` retransmitted while this node could not receive it: the
    /// watch is inconclusive and withdrawn. Returns the timer to cancel.
    pub fn withdraw(&mut self, key: WatchKey) -> Option<EventHandle> {
        let p = self.pending.remove(&key)?;
        if let Some(e) = self.ni.get_mut(&key.target) {
            e.nprf -= 1;
        }
        p.timer
    }

    /// The watch on `key` expired without a retransmission. A target that
    /// is out of earshot by now may have forwarded unheard, so the watch is
    /// withdrawn instead of counted as a failure. Returns true for a miss.
    pub fn on_timeout(&mut self, key: WatchKey, audible: bool) -> bool {
        if self.pending.remove(&key).is_none() {
            return false;
        }
        if !audible {
            if let Some(e) = self.ni.get_mut(&key.target) {
                e.nprf -= 1;
            }
        }
        audible
    }

    /// Closes the observation window: returns this node's forwarding-ratio
    /// reports and seeds the temp table with them. Watches still open carry
    /// over into the next round.
    pub fn start_round(&mut self) -> Vec<Report> {
        let mut open: BTreeMap<NodeId, u32> = BTreeMap::new();
        for k in self.pending.keys() {
            *open.entry(k.target).or_default() += 1;
        }
        self.temp.clear();
        self.charged.clear();
        self.heard_forward.clear();
        let mut reports = Vec::new();
        for (&n, e) in self.ni.iter_mut() {
            let carried = open.get(&n).copied().unwrap_or(0);
            let resolved = e.nprf - carried;
            let row = self.temp.entry(n).or_default();
            if resolved > 0 || !self.cfg.evidence_only {
                let pfr = compute_pfr(e.npf, resolved).expect("npf never exceeds resolved nprf");
                row.pfr.push(pfr);
                reports.push(Report::new(n, pfr));
            }
            e.nprf = carried;
            e.npf = 0;
        }
        self.phase = Phase::CollectPfr;
        reports
    }

    pub fn collect_pfr(&mut self, from: NodeId, reports: &[Report]) {
        if self.phase == Phase::CollectPfr {
            self.collect(from, reports, |row, v| row.pfr.push(v));
        }
    }

    pub fn collect_lbp(&mut self, from: NodeId, reports: &[Report]) {
        if self.phase == Phase::CollectLbp {
            self.collect(from, reports, |row, v| row.lbp.push(v));
        }
    }

    fn collect(&mut self, from: NodeId, reports: &[Report], add: impl Fn(&mut TempEntry, Score)) {
        if from == self.id {
            return;
        }
        for r in reports {
            // Reports about ourselves are not ours to judge.
            if r.node == self.id || !self.ni.contains_key(&r.node) {
                continue;
            }
            add(self.temp.entry(r.node).or_default(), r.value());
        }
    }

    /// Grades every row with forwarding evidence and returns this node's
    /// local bonus points for them.
    pub fn lbp_phase(&mut self) -> Vec<Report> {
        let mut reports = Vec::new();
        for (&n, row) in self.temp.iter_mut() {
            if let Some(g) = compute_grade(&row.pfr) {
                row.g = Some(g);
                let lbp = compute_lbp(g);
                row.lbp.insert(0, lbp);
                reports.push(Report::new(n, lbp));
            }
        }
        self.phase = Phase::CollectLbp;
        reports
    }

    /// Writes grades and bonus points back into the neighbourhood table.
    pub fn commit(&mut self) {
        for (n, row) in std::mem::take(&mut self.temp) {
            let e = self.ni.entry(n).or_default();
            if let Some(g) = row.g {
                e.g = g;
            }
            if let Some(bp) = compute_bp(&row.lbp) {
                e.bp = bp;
            }
        }
        self.phase = Phase::Idle;
    }
}

/// DSR hooks backed by a node's reputation state.
pub struct MirrorHooks<'a>(pub &'a mut MirrorNode);

impl RoutingHooks for MirrorHooks<'_> {
    fn accept_route(&self, route: &[NodeId]) -> bool {
        self.0.accept_route(route)
    }

    fn accept_rreq(&self, route: &[NodeId]) -> bool {
        self.0.accept_rreq(route)
    }

    fn admit(&mut self, packet: &Packet, prev_hop: NodeId) -> Verdict {
        self.0.punish_gate(packet, prev_hop)
    }
}
