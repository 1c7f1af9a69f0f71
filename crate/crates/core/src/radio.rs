//! Wireless medium: two-ray ground path loss with a free-space near field,
//! threshold reception, and broadcast delivery to every in-range node.
//!
//! The medium is idealized: no collisions, capture or fading. A frame reaches
//! every node whose received power is at or above `rx_threshold`, after a
//! fixed delay derived from the frame size and the channel bitrate.

use std::f64::consts::PI;

use crate::engine::SimTime;
use crate::NodeId;

/// Speed of light as used by GloMoSim's propagation code. With the exact
/// constant the printed 125.227 m range would come out as 125.14 m.
pub const SPEED_OF_LIGHT: f64 = 3.0e8;

const PROPAGATION_DELAY: SimTime = SimTime::from_micros(1);

#[derive(Debug, Clone, PartialEq)]
pub struct RadioParams {
    pub tx_power_dbm: f64,
    pub antenna_gain_dbi: f64,
    pub frequency_hz: f64,
    pub rx_sensitivity_dbm: f64,
    pub rx_threshold_dbm: f64,
    pub propagation_limit_dbm: f64,
    pub antenna_height_m: f64,
    pub bandwidth_bps: f64,
}

impl Default for RadioParams {
    fn default() -> Self {
        RadioParams {
            tx_power_dbm: 1.0,
            antenna_gain_dbi: 0.0,
            frequency_hz: 2.4e9,
            rx_sensitivity_dbm: -91.0,
            rx_threshold_dbm: -81.0,
            propagation_limit_dbm: -111.0,
            antenna_height_m: 1.5,
            bandwidth_bps: 2_000_000.0,
        }
    }
}

impl RadioParams {
    pub fn validate(&self) -> Result<(), String> {
        if !(self.frequency_hz > 0.0) {
            return Err("RADIO-FREQUENCY must be positive".into());
        }
        if !(self.antenna_height_m > 0.0) {
            return Err("RADIO-ANTENNA-HEIGHT must be positive".into());
        }
        if !(self.bandwidth_bps > 0.0) {
            return Err("RADIO-BANDWIDTH must be positive".into());
        }
        if !(self.propagation_limit_dbm <= self.rx_sensitivity_dbm
            && self.rx_sensitivity_dbm <= self.rx_threshold_dbm)
        {
            return Err(
                "expected PROPAGATION-LIMIT <= RADIO-RX-SENSITIVITY <= RADIO-RX-THRESHOLD".into(),
            );
        }
        Ok(())
    }

    pub fn wavelength(&self) -> f64 {
        SPEED_OF_LIGHT / self.frequency_hz
    }

    /// Transmit power plus both antenna gains: the received power ceiling.
    fn eirp_plus_rx_gain(&self) -> f64 {
        self.tx_power_dbm + 2.0 * self.antenna_gain_dbi
    }

    /// Distance where the two-ray ground model takes over from free space.
    pub fn crossover_distance(&self) -> f64 {
        4.0 * PI * self.antenna_height_m * self.antenna_height_m / self.wavelength()
    }

    /// Air time of a frame of `bytes` plus propagation, rounded up to 1 µs.
    pub fn frame_delay(&self, bytes: u32) -> SimTime {
        let us = (bytes as f64 * 8.0 / self.bandwidth_bps * 1e6).ceil() as u64;
        SimTime::from_micros(us) + PROPAGATION_DELAY
    }
}

pub fn free_space_dbm(params: &RadioParams, distance: f64) -> f64 {
    params.eirp_plus_rx_gain() + 20.0 * (params.wavelength() / (4.0 * PI * distance)).log10()
}

pub fn two_ray_dbm(params: &RadioParams, distance: f64) -> f64 {
    let h = params.antenna_height_m;
    params.eirp_plus_rx_gain() + 20.0 * (h * h / (distance * distance)).log10()
}

/// Received power in dBm at `distance` meters. Co-located nodes (and the
/// free-space near field) are capped at transmit power plus gains.
pub fn rx_power(params: &RadioParams, distance: f64) -> f64 {
    let cap = params.eirp_plus_rx_gain();
    if distance <= 0.0 {
        return cap;
    }
    let p = if distance < params.crossover_distance() {
        free_space_dbm(params, distance)
    } else {
        two_ray_dbm(params, distance)
    };
    p.min(cap)
}

/// Largest distance at which `rx_power >= rx_threshold`.
pub fn max_range(params: &RadioParams) -> f64 {
    let margin_db = params.eirp_plus_rx_gain() - params.rx_threshold_dbm;
    if margin_db < 0.0 {
        return 0.0;
    }
    let factor = 10f64.powf(margin_db / 20.0);
    let fs = params.wavelength() / (4.0 * PI) * factor;
    if fs < params.crossover_distance() {
        fs
    } else {
        params.antenna_height_m * factor.sqrt()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Position {
    pub x: f64,
    pub y: f64,
}

impl Position {
    pub const fn new(x: f64, y: f64) -> Self {
        Position { x, y }
    }

    pub fn distance(&self, other: &Position) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Reception {
    /// The frame was broadcast, or unicast to this receiver.
    Addressed,
    /// Overheard unicast addressed to someone else.
    Promiscuous,
}

/// Precomputed view of the medium for one run.
#[derive(Debug, Clone)]
pub struct Medium {
    params: RadioParams,
    range: f64,
    promiscuous: bool,
}

impl Medium {
    pub fn new(params: RadioParams, promiscuous: bool) -> Self {
        let range = max_range(&params);
        Medium {
            params,
            range,
            promiscuous,
        }
    }

    pub fn params(&self) -> &RadioParams {
        &self.params
    }

    pub fn range(&self) -> f64 {
        self.range
    }

    pub fn in_range(&self, a: &Position, b: &Position) -> bool {
        // Cheap reject well outside the range, then the exact power test.
        let d = a.distance(b);
        if d > self.range + 1.0 {
            return false;
        }
        rx_power(&self.params, d) >= self.params.rx_threshold_dbm
    }

    /// Every node other than `sender` that hears the frame, ascending by id.
    /// `next_hop` is the unicast addressee, or `None` for a broadcast.
    pub fn deliver(
        &self,
        sender: NodeId,
        next_hop: Option<NodeId>,
        positions: &[Position],
    ) -> Vec<(NodeId, Reception)> {
        let origin = positions[sender.index()];
        positions
            .iter()
            .enumerate()
            .filter(|&(i, _)| i != sender.index())
            .filter(|(_, p)| self.in_range(&origin, p))
            .filter_map(|(i, _)| {
                let id = NodeId(i as u32);
                let class = match next_hop {
                    None => Reception::Addressed,
                    Some(h) if h == id => Reception::Addressed,
                    Some(_) => Reception::Promiscuous,
                };
                if class == Reception::Promiscuous && !self.promiscuous {
                    None
                } else {
                    Some((id, class))
                }
            })
            .collect()
    }
}
