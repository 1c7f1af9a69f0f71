//! Dynamic Source Routing: on-demand route discovery, destination replies,
//! route errors and source-routed forwarding.
//!
//! A [`DsrNode`] is sans-IO: handlers take an incoming packet and push
//! [`Action`]s that the simulator turns into transmissions, timers and
//! counter updates. Reputation layers plug in through [`RoutingHooks`].

pub mod buffer;
pub mod cache;
pub mod packet;

use std::collections::{BTreeMap, HashSet};

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::engine::SimTime;
use crate::metrics::DropCause;
use crate::NodeId;

pub use buffer::{Buffered, SendBuffer};
pub use cache::{CachedRoute, RouteCache};
pub use packet::{Frame, HeaderSizes, Packet, PacketId, PacketKind, Payload};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Admit,
    Drop { culprit: NodeId },
}

/// Extension points consulted by DSR. The defaults give plain DSR.
pub trait RoutingHooks {
    /// May this node use `route` (source first) for its own data?
    fn accept_route(&self, _route: &[NodeId]) -> bool {
        true
    }

    /// May this node extend or answer an RREQ that accumulated `route`?
    fn accept_rreq(&self, _route: &[NodeId]) -> bool {
        true
    }

    /// Gate run on every packet handed to this node before DSR handling.
    fn admit(&mut self, _packet: &Packet, _prev_hop: NodeId) -> Verdict {
        Verdict::Admit
    }
}

/// Hooks for plain DSR.
#[derive(Debug, Default, Clone, Copy)]
pub struct PlainDsr;

impl RoutingHooks for PlainDsr {}

#[derive(Debug, Clone, PartialEq)]
pub struct DsrConfig {
    pub buffer_capacity: usize,
    pub max_discovery_attempts: u8,
    /// Wait after the n-th route request before the next one.
    pub backoff: Vec<SimTime>,
    pub rreq_jitter: SimTime,
    pub sizes: HeaderSizes,
    pub routes_per_dest: usize,
}

impl Default for DsrConfig {
    fn default() -> Self {
        DsrConfig {
            buffer_capacity: 64,
            max_discovery_attempts: 3,
            backoff: vec![
                SimTime::from_millis(500),
                SimTime::from_secs(1),
                SimTime::from_secs(2),
            ],
            rreq_jitter: SimTime::from_millis(10),
            sizes: HeaderSizes::default(),
            routes_per_dest: 8,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Action {
    /// Put `frame` on the air after `delay`.
    Transmit { frame: Frame, delay: SimTime },
    Delivered { id: PacketId },
    DataDropped { id: PacketId, cause: DropCause },
    ControlDropped { kind: PacketKind, cause: DropCause },
    DiscoveryTimer {
        dst: NodeId,
        generation: u32,
        after: SimTime,
    },
}

#[derive(Debug, Clone, Copy)]
struct Discovery {
    attempt: u8,
    generation: u32,
}

/// Per-node DSR state.
#[derive(Debug, Clone)]
pub struct DsrNode {
    pub id: NodeId,
    cfg: DsrConfig,
    cache: RouteCache,
    seen: HashSet<PacketId>,
    buffer: SendBuffer,
    discovery: BTreeMap<NodeId, Discovery>,
    next_generation: u32,
    next_seq: u32,
    jitter: ChaCha8Rng,
}

impl DsrNode {
    pub fn new(id: NodeId, cfg: DsrConfig, jitter: ChaCha8Rng) -> Self {
        DsrNode {
            id,
            cache: RouteCache::new(cfg.routes_per_dest),
            buffer: SendBuffer::new(cfg.buffer_capacity),
            cfg,
            seen: HashSet::new(),
            discovery: BTreeMap::new(),
            next_generation: 0,
            next_seq: 0,
            jitter,
        }
    }

    pub fn config(&self) -> &DsrConfig {
        &self.cfg
    }

    pub fn cache(&self) -> &RouteCache {
        &self.cache
    }

    pub fn cache_mut(&mut self) -> &mut RouteCache {
        &mut self.cache
    }

    pub fn buffer(&self) -> &SendBuffer {
        &self.buffer
    }

    pub fn has_seen(&self, id: PacketId) -> bool {
        self.seen.contains(&id)
    }

    pub fn is_discovering(&self, dst: NodeId) -> bool {
        self.discovery.contains_key(&dst)
    }

    /// Allocates the next packet id for anything this node originates.
    pub fn next_packet_id(&mut self) -> PacketId {
        let id = PacketId {
            origin: self.id,
            seq: self.next_seq,
        };
        self.next_seq += 1;
        id
    }

    /// New application data for `dst`. Returns the packet id.
    pub fn originate(
        &mut self,
        dst: NodeId,
        payload_size: u32,
        now: SimTime,
        hooks: &mut dyn RoutingHooks,
        out: &mut Vec<Action>,
    ) -> PacketId {
        let id = self.next_packet_id();
        let packet = Packet {
            id,
            originator: self.id,
            final_dest: dst,
            route: Vec::new(),
            hop_index: 0,
            payload_size,
            payload: Payload::Data,
        };
        self.send_data(packet, now, hooks, out);
        id
    }

    /// Sends own data along the best acceptable cached route, or buffers it
    /// and starts discovery.
    fn send_data(
        &mut self,
        mut packet: Packet,
        now: SimTime,
        hooks: &mut dyn RoutingHooks,
        out: &mut Vec<Action>,
    ) {
        let dst = packet.final_dest;
        if let Some(route) = self.cache.select(dst, |r| hooks.accept_route(r)) {
            packet.route = route.to_vec();
            packet.hop_index = 1;
            out.push(Action::Transmit {
                frame: Frame::new(self.id, packet),
                delay: SimTime::ZERO,
            });
            return;
        }
        if let Err(packet) = self.buffer.push(packet, now) {
            out.push(Action::DataDropped {
                id: packet.id,
                cause: DropCause::BufferExpiry,
            });
            return;
        }
        if !self.discovery.contains_key(&dst) {
            self.start_discovery(dst, 1, out);
        }
    }

    fn start_discovery(&mut self, dst: NodeId, attempt: u8, out: &mut Vec<Action>) {
        let id = self.next_packet_id();
        self.seen.insert(id);
        let generation = self.next_generation;
        self.next_generation += 1;
        self.discovery.insert(dst, Discovery { attempt, generation });
        let rreq = Packet {
            id,
            originator: self.id,
            final_dest: dst,
            route: vec![self.id],
            hop_index: 0,
            payload_size: 0,
            payload: Payload::Rreq,
        };
        out.push(Action::Transmit {
            frame: Frame::new(self.id, rreq),
            delay: SimTime::ZERO,
        });
        let idx = (attempt as usize - 1).min(self.cfg.backoff.len() - 1);
        out.push(Action::DiscoveryTimer {
            dst,
            generation,
            after: self.cfg.backoff[idx],
        });
    }

    /// Sends buffered data for `dst` that now has an acceptable route.
    fn flush(&mut self, dst: NodeId, hooks: &mut dyn RoutingHooks, out: &mut Vec<Action>) {
        let Some(route) = self
            .cache
            .select(dst, |r| hooks.accept_route(r))
            .map(<[NodeId]>::to_vec)
        else {
            return;
        };
        for b in self.buffer.take_for(dst) {
            let mut packet = b.packet;
            packet.route = route.clone();
            packet.hop_index = 1;
            out.push(Action::Transmit {
                frame: Frame::new(self.id, packet),
                delay: SimTime::ZERO,
            });
        }
        self.discovery.remove(&dst);
    }

    pub fn on_discovery_timeout(
        &mut self,
        dst: NodeId,
        generation: u32,
        hooks: &mut dyn RoutingHooks,
        out: &mut Vec<Action>,
    ) {
        let Some(state) = self.discovery.get(&dst).copied() else {
            return;
        };
        if state.generation != generation {
            return;
        }
        self.flush(dst, hooks, out);
        if !self.discovery.contains_key(&dst) {
            return;
        }
        let mut waiting = self.buffer.take_for(dst);
        let max = self.cfg.max_discovery_attempts;
        waiting.retain_mut(|b| {
            b.tries += 1;
            if b.tries >= max {
                out.push(Action::DataDropped {
                    id: b.packet.id,
                    cause: DropCause::NoRoute,
                });
                false
            } else {
                true
            }
        });
        if waiting.is_empty() {
            self.discovery.remove(&dst);
            return;
        }
        self.buffer.restore(waiting);
        let next = if state.attempt >= max { 1 } else { state.attempt + 1 };
        self.start_discovery(dst, next, out);
    }

    /// Entry point for every packet addressed to this node (unicast to it,
    /// or a broadcast it heard). `forward_data` is asked once per transit
    /// data packet.
    pub fn receive(
        &mut self,
        frame: &Frame,
        now: SimTime,
        hooks: &mut dyn RoutingHooks,
        forward_data: &mut dyn FnMut() -> bool,
        out: &mut Vec<Action>,
    ) {
        let packet = &frame.packet;
        let kind = packet.kind();
        if matches!(kind, PacketKind::PfrBroadcast | PacketKind::LbpBroadcast) {
            return;
        }
        if let Verdict::Drop { .. } = hooks.admit(packet, frame.sender) {
            out.push(match kind {
                PacketKind::Data => Action::DataDropped {
                    id: packet.id,
                    cause: DropCause::Punishment,
                },
                _ => Action::ControlDropped {
                    kind,
                    cause: DropCause::Punishment,
                },
            });
            return;
        }
        match kind {
            PacketKind::Rreq => self.handle_rreq(packet, hooks, out),
            PacketKind::Rrep => self.handle_rrep(packet, now, hooks, out),
            PacketKind::Rerr => self.handle_rerr(packet, out),
            PacketKind::Data => self.forward_data(packet, forward_data, out),
            PacketKind::PfrBroadcast | PacketKind::LbpBroadcast => {}
        }
    }

    pub fn handle_rreq(
        &mut self,
        packet: &Packet,
        hooks: &mut dyn RoutingHooks,
        out: &mut Vec<Action>,
    ) {
        if packet.originator == self.id || packet.route.contains(&self.id) {
            return;
        }
        if !hooks.accept_rreq(&packet.route) {
            return;
        }
        if packet.final_dest == self.id {
            // The target answers every copy; each arrives over a different path.
            let mut discovered = packet.route.clone();
            discovered.push(self.id);
            let mut back = discovered.clone();
            back.reverse();
            let rrep = Packet {
                id: self.next_packet_id(),
                originator: self.id,
                final_dest: packet.originator,
                route: back,
                hop_index: 1,
                payload_size: 0,
                payload: Payload::Rrep { discovered },
            };
            out.push(Action::Transmit {
                frame: Frame::new(self.id, rrep),
                delay: SimTime::ZERO,
            });
            return;
        }
        if !self.seen.insert(packet.id) {
            return;
        }
        let mut fwd = packet.clone();
        fwd.route.push(self.id);
        fwd.hop_index = fwd.route.len() - 1;
        let delay = self.draw_jitter();
        out.push(Action::Transmit {
            frame: Frame::new(self.id, fwd),
            delay,
        });
    }

    fn draw_jitter(&mut self) -> SimTime {
        let max = self.cfg.rreq_jitter.as_micros();
        if max == 0 {
            SimTime::ZERO
        } else {
            SimTime::from_micros(self.jitter.gen_range(0..=max))
        }
    }

    pub fn handle_rrep(
        &mut self,
        packet: &Packet,
        now: SimTime,
        hooks: &mut dyn RoutingHooks,
        out: &mut Vec<Action>,
    ) {
        let Payload::Rrep { discovered } = &packet.payload else {
            return;
        };
        if packet.final_dest == self.id {
            let dst = *discovered.last().expect("discovered route is non-empty");
            self.cache.insert(discovered.clone(), now);
            if self.discovery.contains_key(&dst) || self.buffer.count_for(dst) > 0 {
                self.flush(dst, hooks, out);
            }
            return;
        }
        self.relay(packet, out);
    }

    pub fn handle_rerr(&mut self, packet: &Packet, out: &mut Vec<Action>) {
        let Payload::Rerr { from, to } = packet.payload else {
            return;
        };
        self.cache.purge_link(from, to);
        if packet.final_dest != self.id {
            self.relay(packet, out);
        }
    }

    pub fn forward_data(
        &mut self,
        packet: &Packet,
        forward: &mut dyn FnMut() -> bool,
        out: &mut Vec<Action>,
    ) {
        if packet.final_dest == self.id {
            out.push(Action::Delivered { id: packet.id });
            return;
        }
        if !forward() {
            out.push(Action::DataDropped {
                id: packet.id,
                cause: DropCause::Selfish,
            });
            return;
        }
        self.relay(packet, out);
    }

    /// Passes a source-routed unicast packet to the next node on its route.
    fn relay(&mut self, packet: &Packet, out: &mut Vec<Action>) {
        if packet.hop_index + 1 >= packet.route.len() {
            return;
        }
        let mut fwd = packet.clone();
        fwd.hop_index += 1;
        out.push(Action::Transmit {
            frame: Frame::new(self.id, fwd),
            delay: SimTime::ZERO,
        });
    }

    /// Called when this node could not reach `frame.next_hop` at transmit time.
    pub fn on_link_break(
        &mut self,
        frame: Frame,
        now: SimTime,
        hooks: &mut dyn RoutingHooks,
        out: &mut Vec<Action>,
    ) {
        let Some(next) = frame.next_hop else {
            return;
        };
        self.cache.purge_link(self.id, next);
        let packet = frame.packet;
        // Index of this node on the packet's route.
        let here = packet.hop_index.saturating_sub(1);
        match packet.kind() {
            PacketKind::Data => {
                if packet.originator == self.id {
                    // Nothing left the node yet: pick another route.
                    let mut retry = packet;
                    retry.route.clear();
                    retry.hop_index = 0;
                    self.send_data(retry, now, hooks, out);
                    return;
                }
                out.push(Action::DataDropped {
                    id: packet.id,
                    cause: DropCause::LinkBreak,
                });
                self.send_rerr(&packet.route[..=here], next, packet.originator, out);
            }
            PacketKind::Rrep => {
                out.push(Action::ControlDropped {
                    kind: PacketKind::Rrep,
                    cause: DropCause::LinkBreak,
                });
                self.send_rerr(&packet.route[..=here], next, packet.originator, out);
            }
            kind => out.push(Action::ControlDropped {
                kind,
                cause: DropCause::LinkBreak,
            }),
        }
    }

    /// Reports the broken link `self -> to` back along `traversed`
    /// (which ends at this node) towards `report_to`.
    fn send_rerr(
        &mut self,
        traversed: &[NodeId],
        to: NodeId,
        report_to: NodeId,
        out: &mut Vec<Action>,
    ) {
        if traversed.len() < 2 {
            return;
        }
        let mut back = traversed.to_vec();
        back.reverse();
        let rerr = Packet {
            id: self.next_packet_id(),
            originator: self.id,
            final_dest: report_to,
            route: back,
            hop_index: 1,
            payload_size: 0,
            payload: Payload::Rerr { from: self.id, to },
        };
        out.push(Action::Transmit {
            frame: Frame::new(self.id, rerr),
            delay: SimTime::ZERO,
        });
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::{rng_stream, StreamId};

    fn node(i: u32) -> DsrNode {
        let cfg = DsrConfig {
            rreq_jitter: SimTime::ZERO,
            ..DsrConfig::default()
        };
        DsrNode::new(NodeId(i), cfg, rng_stream(0, StreamId::Jitter(i)))
    }

    fn ids(v: &[u32]) -> Vec<NodeId> {
        v.iter().map(|&i| NodeId(i)).collect()
    }

    fn transmitted(out: &[Action]) -> Vec<&Frame> {
        out.iter()
            .filter_map(|a| match a {
                Action::Transmit { frame, .. } => Some(frame),
                _ => None,
            })
            .collect()
    }

    struct Exclude(NodeId);

    impl RoutingHooks for Exclude {
        fn accept_route(&self, route: &[NodeId]) -> bool {
            !route[1..route.len() - 1].contains(&self.0)
        }
    }

    #[test]
    fn cache_hit_sends_data() {
        let mut s = node(0);
        s.cache_mut().insert(ids(&[0, 1, 2]), SimTime::ZERO);
        let mut out = vec![];
        s.originate(NodeId(2), 512, SimTime::ZERO, &mut PlainDsr, &mut out);
        let f = transmitted(&out);
        assert_eq!(f.len(), 1);
        assert_eq!(f[0].packet.route, ids(&[0, 1, 2]));
        assert_eq!(f[0].packet.hop_index, 1);
        assert_eq!(f[0].next_hop, Some(NodeId(1)));
    }

    #[test]
    fn cache_miss_buffers_and_floods() {
        let mut s = node(0);
        let mut out = vec![];
        s.originate(NodeId(5), 512, SimTime::ZERO, &mut PlainDsr, &mut out);
        let f = transmitted(&out);
        assert_eq!(f.len(), 1);
        assert_eq!(f[0].packet.kind(), PacketKind::Rreq);
        assert_eq!(f[0].packet.route, ids(&[0]));
        assert_eq!(f[0].next_hop, None);
        assert_eq!(s.buffer().len(), 1);
        assert!(out.iter().any(|a| matches!(a, Action::DiscoveryTimer { after, .. } if *after == SimTime::from_millis(500))));
    }

    #[test]
    fn rejected_route_triggers_request() {
        let mut s = node(0);
        s.cache_mut().insert(ids(&[0, 7, 2]), SimTime::ZERO);
        let mut out = vec![];
        s.originate(NodeId(2), 512, SimTime::ZERO, &mut Exclude(NodeId(7)), &mut out);
        let f = transmitted(&out);
        assert_eq!(f.len(), 1);
        assert_eq!(f[0].packet.kind(), PacketKind::Rreq);
    }

    fn rreq(route: &[u32], target: u32, seq: u32) -> Packet {
        Packet {
            id: PacketId {
                origin: NodeId(route[0]),
                seq,
            },
            originator: NodeId(route[0]),
            final_dest: NodeId(target),
            route: ids(route),
            hop_index: route.len() - 1,
            payload_size: 0,
            payload: Payload::Rreq,
        }
    }

    #[test]
    fn destination_replies_on_reverse_path() {
        let mut d = node(3);
        let mut out = vec![];
        d.handle_rreq(&rreq(&[0, 1, 2], 3, 0), &mut PlainDsr, &mut out);
        let f = transmitted(&out);
        assert_eq!(f.len(), 1);
        let p = &f[0].packet;
        assert_eq!(p.payload, Payload::Rrep { discovered: ids(&[0, 1, 2, 3]) });
        assert_eq!(p.route, ids(&[3, 2, 1, 0]));
        assert_eq!(f[0].next_hop, Some(NodeId(2)));
    }

    #[test]
    fn intermediate_appends_once() {
        let mut a = node(1);
        let mut out = vec![];
        a.handle_rreq(&rreq(&[0], 9, 4), &mut PlainDsr, &mut out);
        a.handle_rreq(&rreq(&[0, 2], 9, 4), &mut PlainDsr, &mut out);
        let f = transmitted(&out);
        assert_eq!(f.len(), 1);
        assert_eq!(f[0].packet.route, ids(&[0, 1]));
    }

    #[test]
    fn rrep_relay_and_install() {
        let mut s = node(0);
        let mut out = vec![];
        s.originate(NodeId(3), 100, SimTime::ZERO, &mut PlainDsr, &mut out);
        out.clear();
        let rrep = Packet {
            id: PacketId { origin: NodeId(3), seq: 0 },
            originator: NodeId(3),
            final_dest: NodeId(0),
            route: ids(&[3, 2, 1, 0]),
            hop_index: 2,
            payload_size: 0,
            payload: Payload::Rrep { discovered: ids(&[0, 1, 2, 3]) },
        };
        // Intermediate node 1 advances the reverse route.
        let mut a = node(1);
        a.handle_rrep(&rrep, SimTime::ZERO, &mut PlainDsr, &mut out);
        let f = transmitted(&out);
        assert_eq!(f[0].packet.hop_index, 3);
        assert_eq!(f[0].next_hop, Some(NodeId(0)));
        let arrived = f[0].packet.clone();
        out.clear();
        // Originator installs the route and releases its buffered data.
        s.handle_rrep(&arrived, SimTime::from_millis(5), &mut PlainDsr, &mut out);
        let f = transmitted(&out);
        assert_eq!(f.len(), 1);
        assert_eq!(f[0].packet.kind(), PacketKind::Data);
        assert_eq!(f[0].packet.route, ids(&[0, 1, 2, 3]));
        assert!(s.buffer().is_empty());
        assert!(!s.is_discovering(NodeId(3)));
    }

    #[test]
    fn late_reply_only_caches() {
        let mut s = node(0);
        let rrep = Packet {
            id: PacketId { origin: NodeId(3), seq: 0 },
            originator: NodeId(3),
            final_dest: NodeId(0),
            route: ids(&[3, 0]),
            hop_index: 1,
            payload_size: 0,
            payload: Payload::Rrep { discovered: ids(&[0, 3]) },
        };
        let mut out = vec![];
        s.handle_rrep(&rrep, SimTime::ZERO, &mut PlainDsr, &mut out);
        assert!(out.is_empty());
        assert_eq!(s.cache().routes_to(NodeId(3)).len(), 1);
    }

    #[test]
    fn discovery_gives_up_after_three_attempts() {
        let mut s = node(0);
        let mut out = vec![];
        let id = s.originate(NodeId(5), 1, SimTime::ZERO, &mut PlainDsr, &mut out);
        let mut rreqs = 1;
        for _ in 0..3 {
            let (dst, generation) = out
                .iter()
                .rev()
                .find_map(|a| match a {
                    Action::DiscoveryTimer { dst, generation, .. } => Some((*dst, *generation)),
                    _ => None,
                })
                .unwrap();
            out.clear();
            s.on_discovery_timeout(dst, generation, &mut PlainDsr, &mut out);
            rreqs += transmitted(&out).len();
        }
        assert_eq!(rreqs, 3);
        assert!(out.contains(&Action::DataDropped { id, cause: DropCause::NoRoute }));
        assert!(s.buffer().is_empty());
    }

    #[test]
    fn selfish_intermediate_drops() {
        let mut a = node(1);
        let data = Packet {
            id: PacketId { origin: NodeId(0), seq: 9 },
            originator: NodeId(0),
            final_dest: NodeId(2),
            route: ids(&[0, 1, 2]),
            hop_index: 1,
            payload_size: 512,
            payload: Payload::Data,
        };
        let mut out = vec![];
        a.forward_data(&data, &mut || false, &mut out);
        assert_eq!(out, vec![Action::DataDropped { id: data.id, cause: DropCause::Selfish }]);
        out.clear();
        a.forward_data(&data, &mut || true, &mut out);
        assert_eq!(transmitted(&out)[0].next_hop, Some(NodeId(2)));
    }

    #[test]
    fn link_break_reports_to_source() {
        let mut b = node(2);
        let data = Packet {
            id: PacketId { origin: NodeId(0), seq: 1 },
            originator: NodeId(0),
            final_dest: NodeId(4),
            route: ids(&[0, 1, 2, 3, 4]),
            hop_index: 3,
            payload_size: 512,
            payload: Payload::Data,
        };
        let mut out = vec![];
        b.on_link_break(Frame::new(NodeId(2), data.clone()), SimTime::ZERO, &mut PlainDsr, &mut out);
        assert!(out.contains(&Action::DataDropped { id: data.id, cause: DropCause::LinkBreak }));
        let f = transmitted(&out);
        assert_eq!(f[0].packet.payload, Payload::Rerr { from: NodeId(2), to: NodeId(3) });
        assert_eq!(f[0].packet.route, ids(&[2, 1, 0]));
        assert_eq!(f[0].next_hop, Some(NodeId(1)));
    }

    #[test]
    fn rerr_purges_cache() {
        let mut s = node(0);
        s.cache_mut().insert(ids(&[0, 1, 2, 3, 4]), SimTime::ZERO);
        s.cache_mut().insert(ids(&[0, 5, 4]), SimTime::ZERO);
        let rerr = Packet {
            id: PacketId { origin: NodeId(2), seq: 0 },
            originator: NodeId(2),
            final_dest: NodeId(0),
            route: ids(&[2, 1, 0]),
            hop_index: 2,
            payload_size: 0,
            payload: Payload::Rerr { from: NodeId(2), to: NodeId(3) },
        };
        let mut out = vec![];
        s.handle_rerr(&rerr, &mut out);
        assert!(out.is_empty());
        let left: Vec<_> = s.cache().routes_to(NodeId(4)).iter().map(|c| c.route.clone()).collect();
        assert_eq!(left, vec![ids(&[0, 5, 4])]);
    }

    #[test]
    fn source_link_break_rediscovers() {
        let mut s = node(0);
        s.cache_mut().insert(ids(&[0, 1, 2]), SimTime::ZERO);
        let mut out = vec![];
        s.originate(NodeId(2), 64, SimTime::ZERO, &mut PlainDsr, &mut out);
        let frame = transmitted(&out)[0].clone();
        out.clear();
        s.on_link_break(frame, SimTime::ZERO, &mut PlainDsr, &mut out);
        let f = transmitted(&out);
        assert_eq!(f.len(), 1);
        assert_eq!(f[0].packet.kind(), PacketKind::Rreq);
        assert_eq!(s.buffer().len(), 1);
    }
}
