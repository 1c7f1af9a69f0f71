use std::collections::VecDeque;

use crate::dsr::packet::Packet;
use crate::engine::SimTime;
use crate::NodeId;

#[derive(Debug, Clone)]
pub struct Buffered {
    pub packet: Packet,
    pub enqueued: SimTime,
    /// Discovery attempts this packet has waited through.
    pub tries: u8,
}

/// Data packets waiting for a route, oldest first.
#[derive(Debug, Clone)]
pub struct SendBuffer {
    entries: VecDeque<Buffered>,
    capacity: usize,
}

impl SendBuffer {
    pub fn new(capacity: usize) -> Self {
        SendBuffer {
            entries: VecDeque::new(),
            capacity,
        }
    }

    /// Hands the packet back when the buffer is full.
    pub fn push(&mut self, packet: Packet, now: SimTime) -> Result<(), Packet> {
        if self.entries.len() >= self.capacity {
            return Err(packet);
        }
        self.entries.push_back(Buffered {
            packet,
            enqueued: now,
            tries: 0,
        });
        Ok(())
    }

    pub fn count_for(&self, dst: NodeId) -> usize {
        self.entries
            .iter()
            .filter(|b| b.packet.final_dest == dst)
            .count()
    }

    /// Removes and returns every packet for `dst`, in arrival order.
    pub fn take_for(&mut self, dst: NodeId) -> Vec<Buffered> {
        let (taken, kept): (Vec<_>, Vec<_>) = self
            .entries
            .drain(..)
            .partition(|b| b.packet.final_dest == dst);
        self.entries = kept.into();
        taken
    }

    /// Puts back entries previously taken, preserving their order.
    pub fn restore(&mut self, entries: Vec<Buffered>) {
        for e in entries.into_iter().rev() {
            self.entries.push_front(e);
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = &Buffered> {
        self.entries.iter()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}
