use std::fmt;

use crate::mirror::wire::Report;
use crate::NodeId;

/// Unique per originator: every packet a node creates takes the next value
/// of that node's sequence counter.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PacketId {
    pub origin: NodeId,
    pub seq: u32,
}

impl fmt::Display for PacketId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.origin.0, self.seq)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum PacketKind {
    Data,
    Rreq,
    Rrep,
    Rerr,
    PfrBroadcast,
    LbpBroadcast,
}

impl PacketKind {
    pub const ALL: [PacketKind; 6] = [
        PacketKind::Data,
        PacketKind::Rreq,
        PacketKind::Rrep,
        PacketKind::Rerr,
        PacketKind::PfrBroadcast,
        PacketKind::LbpBroadcast,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn as_str(self) -> &'static str {
        match self {
            PacketKind::Data => "data",
            PacketKind::Rreq => "rreq",
            PacketKind::Rrep => "rrep",
            PacketKind::Rerr => "rerr",
            PacketKind::PfrBroadcast => "pfr",
            PacketKind::LbpBroadcast => "lbp",
        }
    }

    pub fn parse(s: &str) -> Option<PacketKind> {
        PacketKind::ALL.into_iter().find(|k| k.as_str() == s)
    }

    pub fn is_broadcast(self) -> bool {
        matches!(
            self,
            PacketKind::Rreq | PacketKind::PfrBroadcast | PacketKind::LbpBroadcast
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Payload {
    Data,
    Rreq,
    /// The complete discovered route, requester first.
    Rrep { discovered: Vec<NodeId> },
    /// The directed link `from -> to` that failed.
    Rerr { from: NodeId, to: NodeId },
    Pfr(Vec<Report>),
    Lbp(Vec<Report>),
}

/// A network-layer packet carrying a DSR source route.
///
/// `route` holds the full source route for Data, the reversed path for RREP
/// and RERR, and the accumulated path for RREQ. For unicast kinds
/// `route[hop_index]` is the node the packet is currently addressed to.
#[derive(Debug, Clone, PartialEq)]
pub struct Packet {
    pub id: PacketId,
    pub originator: NodeId,
    /// RREQ target for route requests; [`NodeId::BROADCAST`] for mirror
    /// broadcasts.
    pub final_dest: NodeId,
    pub route: Vec<NodeId>,
    pub hop_index: usize,
    pub payload_size: u32,
    pub payload: Payload,
}

impl Packet {
    pub fn kind(&self) -> PacketKind {
        match self.payload {
            Payload::Data => PacketKind::Data,
            Payload::Rreq => PacketKind::Rreq,
            Payload::Rrep { .. } => PacketKind::Rrep,
            Payload::Rerr { .. } => PacketKind::Rerr,
            Payload::Pfr(_) => PacketKind::PfrBroadcast,
            Payload::Lbp(_) => PacketKind::LbpBroadcast,
        }
    }

    /// Addressee of a unicast packet; `None` for broadcasts.
    pub fn next_hop(&self) -> Option<NodeId> {
        if self.kind().is_broadcast() {
            None
        } else {
            self.route.get(self.hop_index).copied()
        }
    }

    pub fn size_bytes(&self, sizes: &HeaderSizes) -> u32 {
        match &self.payload {
            Payload::Data => sizes.data_header + self.payload_size,
            Payload::Rreq | Payload::Rerr { .. } => {
                sizes.control_base + sizes.per_hop * self.route.len() as u32
            }
            Payload::Rrep { discovered } => {
                sizes.control_base + sizes.per_hop * discovered.len() as u32
            }
            Payload::Pfr(r) | Payload::Lbp(r) => {
                sizes.mirror_base + sizes.mirror_per_pair * r.len() as u32
            }
        }
    }
}

/// Byte sizes used for air time and byte counters.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct HeaderSizes {
    pub control_base: u32,
    pub per_hop: u32,
    pub data_header: u32,
    pub mirror_base: u32,
    pub mirror_per_pair: u32,
}

impl Default for HeaderSizes {
    fn default() -> Self {
        HeaderSizes {
            control_base: 32,
            per_hop: 4,
            data_header: 24,
            mirror_base: 8,
            mirror_per_pair: 6,
        }
    }
}

/// One transmission on the medium.
#[derive(Debug, Clone, PartialEq)]
pub struct Frame {
    pub sender: NodeId,
    pub next_hop: Option<NodeId>,
    pub packet: Packet,
}

impl Frame {
    pub fn new(sender: NodeId, packet: Packet) -> Self {
        Frame {
            sender,
            next_hop: packet.next_hop(),
            packet,
        }
    }
}
