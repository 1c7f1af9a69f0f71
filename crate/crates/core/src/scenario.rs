//! Node behavior policies and constant-rate traffic.

use rand::seq::index::sample;
use rand::Rng;

use crate::engine::SimTime;
use crate::NodeId;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BehaviorPolicy {
    Honest,
    /// Drops transit data with probability `drop_prob`. Own traffic and
    /// control packets are handled normally.
    Selfish { drop_prob: f64 },
}

impl BehaviorPolicy {
    pub fn is_selfish(&self) -> bool {
        matches!(self, BehaviorPolicy::Selfish { .. })
    }
}

/// Marks exactly `round(fraction * n)` nodes selfish, sampled without
/// replacement.
pub fn assign_selfish<R: Rng>(
    n: usize,
    fraction: f64,
    drop_prob: f64,
    rng: &mut R,
) -> Vec<BehaviorPolicy> {
    let count = ((fraction.clamp(0.0, 1.0) * n as f64).round() as usize).min(n);
    let mut policies = vec![BehaviorPolicy::Honest; n];
    for i in sample(rng, n, count).iter() {
        policies[i] = BehaviorPolicy::Selfish { drop_prob };
    }
    policies
}

/// Whether a node forwards one transit packet. Honest nodes never draw from
/// the stream.
pub fn should_forward<R: Rng>(policy: &BehaviorPolicy, rng: &mut R) -> bool {
    match *policy {
        BehaviorPolicy::Honest => true,
        BehaviorPolicy::Selfish { drop_prob } if drop_prob >= 1.0 => false,
        BehaviorPolicy::Selfish { drop_prob } if drop_prob <= 0.0 => true,
        BehaviorPolicy::Selfish { drop_prob } => !rng.gen_bool(drop_prob),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrafficFlow {
    pub src: NodeId,
    pub dst: NodeId,
    pub interval: SimTime,
    pub payload: u32,
    pub start: SimTime,
    pub stop: SimTime,
}

impl TrafficFlow {
    /// Emission instants `start, start + interval, ...` strictly before `stop`.
    pub fn emissions(&self) -> impl Iterator<Item = SimTime> + '_ {
        let step = self.interval.as_micros().max(1);
        (0u64..)
            .map(move |k| self.start + SimTime::from_micros(k * step))
            .take_while(move |t| *t < self.stop)
    }
}

/// Draws `count` constant-rate flows between distinct random node pairs.
/// Pairs are distinct as ordered pairs when enough exist.
pub fn random_flows<R: Rng>(
    n: usize,
    count: usize,
    rate_pps: f64,
    payload: u32,
    start: SimTime,
    stop: SimTime,
    rng: &mut R,
) -> Vec<TrafficFlow> {
    if n < 2 || rate_pps <= 0.0 {
        return Vec::new();
    }
    let interval = SimTime::from_secs_f64(1.0 / rate_pps);
    let max_pairs = n * (n - 1);
    let mut flows: Vec<TrafficFlow> = Vec::with_capacity(count);
    while flows.len() < count {
        let src = rng.gen_range(0..n);
        let mut dst = rng.gen_range(0..n - 1);
        if dst >= src {
            dst += 1;
        }
        let (src, dst) = (NodeId(src as u32), NodeId(dst as u32));
        if flows.len() < max_pairs && flows.iter().any(|f| f.src == src && f.dst == dst) {
            continue;
        }
        flows.push(TrafficFlow {
            src,
            dst,
            interval,
            payload,
            start,
            stop,
        });
    }
    flows
}

/// Every `(time, flow index)` origination across `flows`, time-ordered with
/// flow order breaking ties.
pub fn generate_traffic(flows: &[TrafficFlow]) -> Vec<(SimTime, usize)> {
    let mut out: Vec<(SimTime, usize)> = flows
        .iter()
        .enumerate()
        .flat_map(|(i, f)| f.emissions().map(move |t| (t, i)))
        .collect();
    out.sort();
    out
}
