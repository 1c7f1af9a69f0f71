//! Parameter sweeps over selfish fraction or network size, run in parallel,
//! plus mean / standard deviation tables for plotting.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;

use crate::config::{Protocol, RunConfig};
use crate::metrics::{CsvRow, RunResult};
use crate::mobility::{grid_side, Terrain};
use crate::sim;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    SelfishFraction,
    Nodes,
}

impl Axis {
    pub fn as_str(self) -> &'static str {
        match self {
            Axis::SelfishFraction => "selfish_fraction",
            Axis::Nodes => "nodes",
        }
    }

    fn of(self, row: &CsvRow) -> f64 {
        match self {
            Axis::SelfishFraction => row.selfish_fraction,
            Axis::Nodes => row.nodes as f64,
        }
    }
}

impl fmt::Display for Axis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Axis {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "selfish_fraction" => Ok(Axis::SelfishFraction),
            "nodes" => Ok(Axis::Nodes),
            _ => Err(format!("unknown axis `{s}` (expected selfish_fraction or nodes)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub axis: Axis,
    pub values: Vec<f64>,
    pub seeds: Vec<u64>,
    pub protocols: Vec<Protocol>,
}

/// One point of the cross product.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Point {
    pub value: f64,
    pub seed: u64,
    pub protocol: Protocol,
}

impl SweepSpec {
    /// Canonical order: value, then seed, then protocol.
    pub fn points(&self) -> Vec<Point> {
        let mut out = Vec::new();
        for &value in &self.values {
            for &seed in &self.seeds {
                for &protocol in &self.protocols {
                    out.push(Point {
                        value,
                        seed,
                        protocol,
                    });
                }
            }
        }
        out
    }
}

/// The configuration for one point. Node-count points keep the base grid
/// spacing by scaling the terrain with the lattice side.
pub fn point_config(base: &RunConfig, axis: Axis, p: Point) -> Result<RunConfig, String> {
    let mut cfg = base.clone();
    cfg.seed = p.seed;
    cfg.protocol = p.protocol;
    match axis {
        Axis::SelfishFraction => {
            if !(0.0..=1.0).contains(&p.value) {
                return Err(format!("selfish fraction {} outside [0, 1]", p.value));
            }
            cfg.selfish_fraction = p.value;
        }
        Axis::Nodes => {
            if p.value < 1.0 || p.value.fract() != 0.0 {
                return Err(format!("node count {} is not a positive integer", p.value));
            }
            let n = p.value as usize;
            let side = grid_side(n).ok_or_else(|| format!("{n} nodes is not a perfect square"))?;
            let base_side = grid_side(base.nodes)
                .ok_or_else(|| format!("base node count {} is not a perfect square", base.nodes))?;
            if base_side > 1 {
                let sx = base.terrain.width / (base_side - 1) as f64;
                let sy = base.terrain.height / (base_side - 1) as f64;
                cfg.terrain = Terrain {
                    width: sx * (side - 1) as f64,
                    height: sy * (side - 1) as f64,
                };
            }
            cfg.nodes = n;
        }
    }
    Ok(cfg)
}

/// Runs every point; failures are reported per point. Parallelism follows
/// `MIRROR_SIM_THREADS` when set.
pub fn run_sweep(base: &RunConfig, spec: &SweepSpec) -> Vec<(Point, Result<RunResult, String>)> {
    let points = spec.points();
    let work = || {
        points
            .par_iter()
            .map(|&p| {
                let res = point_config(base, spec.axis, p)
                    .and_then(|cfg| sim::run(cfg, None).map_err(|e| e.to_string()));
                (p, res)
            })
            .collect::<Vec<_>>()
    };
    match thread_cap() {
        Some(n) => match rayon::ThreadPoolBuilder::new().num_threads(n).build() {
            Ok(pool) => pool.install(work),
            Err(e) => {
                log::warn!("cannot build a {n}-thread pool ({e}); using the default");
                work()
            }
        },
        None => work(),
    }
}

fn thread_cap() -> Option<usize> {
    let v = std::env::var("MIRROR_SIM_THREADS").ok()?;
    match v.trim().parse::<usize>() {
        Ok(n) if n > 0 => Some(n),
        _ => {
            log::warn!("ignoring MIRROR_SIM_THREADS={v}");
            None
        }
    }
}

/// Mean and sample standard deviation of one group of runs.
#[derive(Debug, Clone, PartialEq)]
pub struct Summary {
    pub protocol: String,
    pub value: f64,
    pub runs: usize,
    pub pdr_mean: f64,
    pub pdr_sd: f64,
    pub packets_mean: f64,
    pub packets_sd: f64,
}

fn mean_sd(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// Groups rows by protocol and axis value.
pub fn aggregate(rows: &[CsvRow], axis: Axis) -> Vec<Summary> {
    let mut groups: BTreeMap<(String, u64), (f64, Vec<&CsvRow>)> = BTreeMap::new();
    for r in rows {
        let v = axis.of(r);
        groups
            .entry((r.protocol.clone(), v.to_bits()))
            .or_insert_with(|| (v, Vec::new()))
            .1
            .push(r);
    }
    let mut out: Vec<Summary> = groups
        .into_iter()
        .map(|((protocol, _), (value, rs))| {
            let pdrs: Vec<f64> = rs.iter().map(|r| r.pdr_value()).collect();
            let pk: Vec<f64> = rs.iter().map(|r| r.total_packets as f64).collect();
            let (pdr_mean, pdr_sd) = mean_sd(&pdrs);
            let (packets_mean, packets_sd) = mean_sd(&pk);
            Summary {
                protocol,
                value,
                runs: rs.len(),
                pdr_mean,
                pdr_sd,
                packets_mean,
                packets_sd,
            }
        })
        .collect();
    out.sort_by(|a, b| a.value.total_cmp(&b.value).then_with(|| a.protocol.cmp(&b.protocol)));
    out
}

pub fn summary_csv(axis: Axis, rows: &[Summary]) -> String {
    let mut s = format!("protocol,{axis},runs,pdr_mean,pdr_sd,packets_mean,packets_sd\n");
    for r in rows {
        s.push_str(&format!(
            "{},{},{},{:.4},{:.4},{:.1},{:.1}\n",
            r.protocol, r.value, r.runs, r.pdr_mean, r.pdr_sd, r.packets_mean, r.packets_sd
        ));
    }
    s
}
