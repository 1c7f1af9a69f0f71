//! Grid placement and random-waypoint motion.

use rand::Rng;
use thiserror::Error;

use crate::engine::SimTime;
use crate::radio::Position;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Terrain {
    pub width: f64,
    pub height: f64,
}

impl Terrain {
    pub fn contains(&self, p: &Position) -> bool {
        (0.0..=self.width).contains(&p.x) && (0.0..=self.height).contains(&p.y)
    }

    fn clamp(&self, p: Position) -> Position {
        Position::new(p.x.clamp(0.0, self.width), p.y.clamp(0.0, self.height))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MobilityParams {
    pub pause: SimTime,
    pub v_min: f64,
    pub v_max: f64,
    pub granularity: f64,
}

impl Default for MobilityParams {
    fn default() -> Self {
        MobilityParams {
            pause: SimTime::from_secs(30),
            v_min: 0.0,
            v_max: 10.0,
            granularity: 0.5,
        }
    }
}

impl MobilityParams {
    pub fn validate(&self) -> Result<(), String> {
        if !(0.0 <= self.v_min && self.v_min <= self.v_max) {
            return Err("expected 0 <= MOBILITY-WP-MIN-SPEED <= MOBILITY-WP-MAX-SPEED".into());
        }
        if !(self.granularity > 0.0) {
            return Err("MOBILITY-POSITION-GRANULARITY must be positive".into());
        }
        Ok(())
    }

    pub fn is_static(&self) -> bool {
        self.v_max == 0.0
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum PlacementError {
    #[error("grid placement needs a perfect-square node count, got {n} (nearest valid: {below} or {above})")]
    NotSquare { n: usize, below: usize, above: usize },
    #[error("grid placement needs at least one node")]
    Empty,
}

/// Integer square root when `n` is a perfect square.
pub fn grid_side(n: usize) -> Option<usize> {
    let r = (n as f64).sqrt().round() as usize;
    (r * r == n).then_some(r)
}

/// Lays `n` nodes on a `sqrt(n) x sqrt(n)` lattice spanning the terrain,
/// row-major from the origin corner.
pub fn grid_place(n: usize, terrain: Terrain) -> Result<Vec<Position>, PlacementError> {
    if n == 0 {
        return Err(PlacementError::Empty);
    }
    let side = grid_side(n).ok_or_else(|| {
        let r = (n as f64).sqrt().floor() as usize;
        PlacementError::NotSquare {
            n,
            below: r * r,
            above: (r + 1) * (r + 1),
        }
    })?;
    if side == 1 {
        return Ok(vec![Position::new(0.0, 0.0)]);
    }
    let dx = terrain.width / (side - 1) as f64;
    let dy = terrain.height / (side - 1) as f64;
    Ok((0..n)
        .map(|i| Position::new((i % side) as f64 * dx, (i / side) as f64 * dy))
        .collect())
}

/// One pause-then-move leg. The node rests at `origin` until `pause_until`,
/// then travels in a straight line to `target` at `speed`.
#[derive(Debug, Clone, PartialEq)]
pub struct WaypointState {
    pub origin: Position,
    pub target: Position,
    pub speed: f64,
    /// When the node reached `origin`.
    pub leg_start: SimTime,
    pub pause_until: SimTime,
    /// Set when the pause is followed by another pause (zero-speed draw).
    extra_pause: Option<SimTime>,
}

impl WaypointState {
    /// A node resting at `pos` whose first leg is drawn at time zero.
    pub fn initial(pos: Position) -> Self {
        WaypointState {
            origin: pos,
            target: pos,
            speed: 0.0,
            leg_start: SimTime::ZERO,
            pause_until: SimTime::ZERO,
            extra_pause: Some(SimTime::ZERO),
        }
    }

    /// A stationary leg that never ends.
    pub fn stationary(pos: Position) -> Self {
        WaypointState {
            origin: pos,
            target: pos,
            speed: 0.0,
            leg_start: SimTime::ZERO,
            pause_until: SimTime::MAX,
            extra_pause: None,
        }
    }

    /// Builds a moving leg directly (mainly for scripted scenarios).
    pub fn moving(origin: Position, target: Position, speed: f64, depart: SimTime) -> Self {
        WaypointState {
            origin,
            target,
            speed,
            leg_start: depart,
            pause_until: depart,
            extra_pause: None,
        }
    }

    /// Time the leg completes, or `None` if the node never moves again.
    pub fn arrival(&self) -> Option<SimTime> {
        if let Some(extra) = self.extra_pause {
            return Some(self.pause_until + extra);
        }
        if self.speed <= 0.0 {
            return None;
        }
        let dist = self.origin.distance(&self.target);
        let us = (dist / self.speed * 1e6).ceil() as u64;
        Some(self.pause_until + SimTime::from_micros(us))
    }
}

/// Draws the leg that follows `state` once it completes.
pub fn next_leg<R: Rng>(
    state: &WaypointState,
    rng: &mut R,
    terrain: Terrain,
    params: &MobilityParams,
) -> WaypointState {
    let now = state.arrival().unwrap_or(state.pause_until);
    let origin = state.target;
    let target = Position::new(
        rng.gen_range(0.0..=terrain.width),
        rng.gen_range(0.0..=terrain.height),
    );
    let mut speed = rng.gen_range(params.v_min..=params.v_max);
    if speed == 0.0 {
        speed = rng.gen_range(params.v_min..=params.v_max);
    }
    let pause_until = now + params.pause;
    if speed == 0.0 {
        // Still zero: rest for one more pause interval, or forever if pauses
        // are zero-length.
        return WaypointState {
            origin,
            target: origin,
            speed: 0.0,
            leg_start: now,
            pause_until,
            extra_pause: (params.pause > SimTime::ZERO).then_some(params.pause),
        };
    }
    WaypointState {
        origin,
        target,
        speed,
        leg_start: now,
        pause_until,
        extra_pause: None,
    }
}

fn quantize(v: f64, granularity: f64) -> f64 {
    (v / granularity).round() * granularity
}

/// Position on the current leg at `t`, snapped to the granularity lattice.
pub fn position_at(
    state: &WaypointState,
    t: SimTime,
    terrain: Terrain,
    granularity: f64,
) -> Position {
    let raw = if t <= state.pause_until || state.speed <= 0.0 || state.extra_pause.is_some() {
        state.origin
    } else {
        let dist = state.origin.distance(&state.target);
        let travelled = state.speed * (t - state.pause_until).as_secs_f64();
        if travelled >= dist {
            state.target
        } else {
            let f = travelled / dist;
            Position::new(
                state.origin.x + f * (state.target.x - state.origin.x),
                state.origin.y + f * (state.target.y - state.origin.y),
            )
        }
    };
    terrain.clamp(Position::new(
        quantize(raw.x, granularity),
        quantize(raw.y, granularity),
    ))
}
