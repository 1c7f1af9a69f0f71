//! Run counters, delivery ratio and overhead, the result CSV, and the raw
//! event log (`time kind node detail` lines) that lets a run be recounted.

use std::fmt;
use std::io::{self, Read, Write};
use std::str::FromStr;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::config::Protocol;
use crate::dsr::PacketKind;
use crate::engine::SimTime;
use crate::NodeId;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum DropCause {
    Selfish,
    Punishment,
    NoRoute,
    BufferExpiry,
    LinkBreak,
}

impl DropCause {
    pub const ALL: [DropCause; 5] = [
        DropCause::Selfish,
        DropCause::Punishment,
        DropCause::NoRoute,
        DropCause::BufferExpiry,
        DropCause::LinkBreak,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn as_str(self) -> &'static str {
        match self {
            DropCause::Selfish => "selfish",
            DropCause::Punishment => "punishment",
            DropCause::NoRoute => "no_route",
            DropCause::BufferExpiry => "buffer_expiry",
            DropCause::LinkBreak => "link_break",
        }
    }

    pub fn parse(s: &str) -> Option<DropCause> {
        DropCause::ALL.into_iter().find(|c| c.as_str() == s)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Counters {
    pub data_sent: u64,
    pub data_received: u64,
    pub tx_by_kind: [u64; 6],
    pub bytes_by_kind: [u64; 6],
    /// Data packets lost, by cause.
    pub drops_by_cause: [u64; 5],
    /// Control packets refused or lost, by cause (not part of conservation).
    pub control_drops: [u64; 5],
}

impl Counters {
    pub fn tx(&self, kind: PacketKind) -> u64 {
        self.tx_by_kind[kind.index()]
    }

    pub fn drops(&self, cause: DropCause) -> u64 {
        self.drops_by_cause[cause.index()]
    }

    pub fn total_drops(&self) -> u64 {
        self.drops_by_cause.iter().sum()
    }

    pub fn mirror_broadcasts(&self) -> u64 {
        self.tx(PacketKind::PfrBroadcast) + self.tx(PacketKind::LbpBroadcast)
    }
}

/// Delivered over originated data packets; 1.0 when nothing was sent.
pub fn pdr(c: &Counters) -> f64 {
    if c.data_sent == 0 {
        1.0
    } else {
        c.data_received as f64 / c.data_sent as f64
    }
}

/// Every transmission of every kind; a packet crossing four hops counts four.
pub fn overhead(c: &Counters) -> u64 {
    c.tx_by_kind.iter().sum()
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunResult {
    pub protocol: Protocol,
    pub nodes: usize,
    pub selfish_fraction: f64,
    pub seed: u64,
    pub counters: Counters,
    pub pdr: f64,
    pub total_packets: u64,
    /// Data packets still buffered or on the air at the horizon.
    pub in_flight: u64,
    pub wall_time: Duration,
}

impl RunResult {
    pub fn new(
        protocol: Protocol,
        nodes: usize,
        selfish_fraction: f64,
        seed: u64,
        counters: Counters,
        in_flight: u64,
        wall_time: Duration,
    ) -> Self {
        RunResult {
            protocol,
            nodes,
            selfish_fraction,
            seed,
            pdr: pdr(&counters),
            total_packets: overhead(&counters),
            counters,
            in_flight,
            wall_time,
        }
    }

    pub fn to_row(&self) -> CsvRow {
        let c = &self.counters;
        CsvRow {
            protocol: self.protocol.as_str().to_string(),
            nodes: self.nodes,
            selfish_fraction: self.selfish_fraction,
            seed: self.seed,
            data_sent: c.data_sent,
            data_received: c.data_received,
            pdr: format!("{:.4}", self.pdr),
            total_packets: self.total_packets,
            rreq: c.tx(PacketKind::Rreq),
            rrep: c.tx(PacketKind::Rrep),
            rerr: c.tx(PacketKind::Rerr),
            data_tx: c.tx(PacketKind::Data),
            pfr_bcast: c.tx(PacketKind::PfrBroadcast),
            lbp_bcast: c.tx(PacketKind::LbpBroadcast),
            drops_selfish: c.drops(DropCause::Selfish),
            drops_punishment: c.drops(DropCause::Punishment),
        }
    }
}

/// One CSV line. Field order is the column order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CsvRow {
    pub protocol: String,
    pub nodes: usize,
    pub selfish_fraction: f64,
    pub seed: u64,
    pub data_sent: u64,
    pub data_received: u64,
    pub pdr: String,
    pub total_packets: u64,
    pub rreq: u64,
    pub rrep: u64,
    pub rerr: u64,
    pub data_tx: u64,
    pub pfr_bcast: u64,
    pub lbp_bcast: u64,
    pub drops_selfish: u64,
    pub drops_punishment: u64,
}

impl CsvRow {
    pub fn pdr_value(&self) -> f64 {
        self.pdr.parse().unwrap_or(f64::NAN)
    }
}

pub const CSV_HEADER: &str = "protocol,nodes,selfish_fraction,seed,data_sent,data_received,pdr,total_packets,rreq,rrep,rerr,data_tx,pfr_bcast,lbp_bcast,drops_selfish,drops_punishment";

pub fn write_csv<W: Write>(out: W, rows: &[CsvRow]) -> Result<(), csv::Error> {
    let mut w = csv::Writer::from_writer(out);
    if rows.is_empty() {
        w.write_record(CSV_HEADER.split(','))?;
    }
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_csv<R: Read>(input: R) -> Result<Vec<CsvRow>, csv::Error> {
    csv::Reader::from_reader(input).deserialize().collect()
}

/// Optional line-oriented trace of a run.
pub struct EventLog {
    out: Box<dyn Write + Send>,
    error: Option<io::Error>,
}

impl fmt::Debug for EventLog {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("EventLog").finish_non_exhaustive()
    }
}

impl EventLog {
    pub fn new(out: Box<dyn Write + Send>) -> Self {
        EventLog { out, error: None }
    }

    /// `node` is `None` for network-wide events.
    pub fn record(&mut self, t: SimTime, kind: LogKind, node: Option<NodeId>, detail: fmt::Arguments<'_>) {
        if self.error.is_some() {
            return;
        }
        let res = match node {
            Some(n) => writeln!(self.out, "{t} {kind} {n} {detail}"),
            None => writeln!(self.out, "{t} {kind} * {detail}"),
        };
        if let Err(e) = res {
            self.error = Some(e);
        }
    }

    pub fn finish(mut self) -> io::Result<()> {
        if let Some(e) = self.error.take() {
            return Err(e);
        }
        self.out.flush()
    }
}

/// Record kinds of the event log.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LogKind {
    /// Data origination: `id dst`.
    Orig,
    /// Transmission: `kind id next-hop-or-*`.
    Tx,
    /// Data delivered to its final destination: `id`.
    Recv,
    /// Data lost: `cause id`.
    Drop,
    /// Control packet lost: `kind cause`.
    CtrlDrop,
    /// Waypoint reached, next leg drawn: `x y target-x target-y speed`.
    Move,
    /// Round phase: `pfr|lbp|commit index`.
    Round,
}

impl LogKind {
    pub fn as_str(self) -> &'static str {
        match self {
            LogKind::Orig => "orig",
            LogKind::Tx => "tx",
            LogKind::Recv => "recv",
            LogKind::Drop => "drop",
            LogKind::CtrlDrop => "cdrop",
            LogKind::Move => "move",
            LogKind::Round => "round",
        }
    }
}

impl fmt::Display for LogKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Error)]
#[error("unknown drop cause `{0}`")]
pub struct ParseCauseError(String);

impl FromStr for DropCause {
    type Err = ParseCauseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        DropCause::parse(s).ok_or_else(|| ParseCauseError(s.to_string()))
    }
}
