//! GloMoSim-style configuration: one `KEY VALUE` per line, `#` comments,
//! case-sensitive keys, durations with `NS`/`US`/`MS`/`S`/`M`/`H` suffixes,
//! and `(x, y)` tuples. A parenthesised unit annotation after the key, as in
//! `RADIO-TX-POWER (dBm) 1`, is accepted and ignored.

use std::fmt::{self, Write as _};
use std::str::FromStr;

use num_traits::{One, Zero};
use thiserror::Error;

use crate::engine::SimTime;
use crate::mirror::{MirrorConfig, Score};
use crate::mobility::{MobilityParams, Terrain};
use crate::radio::RadioParams;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Protocol {
    /// Plain DSR.
    Pdsr,
    /// DSR with the reputation layer.
    Mdsr,
}

impl Protocol {
    pub fn as_str(self) -> &'static str {
        match self {
            Protocol::Pdsr => "PDSR",
            Protocol::Mdsr => "MDSR",
        }
    }
}

impl fmt::Display for Protocol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Protocol {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_uppercase().as_str() {
            "DSR" | "PDSR" => Ok(Protocol::Pdsr),
            "MDSR" => Ok(Protocol::Mdsr),
            _ => Err(format!("unknown protocol `{s}` (expected DSR, PDSR or MDSR)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MobilityModel {
    None,
    RandomWaypoint,
}

#[derive(Debug, Error, PartialEq)]
pub enum ConfigError {
    #[error("missing mandatory key {0}")]
    Missing(&'static str),
    #[error("line {line}: {key}: invalid value `{value}`: {reason}")]
    Invalid {
        line: usize,
        key: String,
        value: String,
        reason: String,
    },
    #[error("line {line}: key {key} has no value")]
    NoValue { line: usize, key: String },
    #[error("{0}")]
    Inconsistent(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub sim_time: SimTime,
    pub terrain: Terrain,
    pub nodes: usize,
    pub mobility_model: MobilityModel,
    pub mobility: MobilityParams,
    pub promiscuous: bool,
    pub protocol: Protocol,
    pub radio: RadioParams,
    pub mirror: MirrorConfig,
    pub selfish_fraction: f64,
    pub selfish_drop_prob: f64,
    /// Selfish nodes stay silent in the reputation exchange.
    pub selfish_mute: bool,
    pub flows: usize,
    pub flow_rate: f64,
    pub flow_payload: u32,
    pub flow_start: SimTime,
    pub flow_stop: SimTime,
    pub seed: u64,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            sim_time: SimTime::from_secs(900),
            terrain: Terrain {
                width: 1250.0,
                height: 1250.0,
            },
            nodes: 121,
            mobility_model: MobilityModel::RandomWaypoint,
            mobility: MobilityParams::default(),
            promiscuous: true,
            protocol: Protocol::Pdsr,
            radio: RadioParams::default(),
            mirror: MirrorConfig::default(),
            selfish_fraction: 0.0,
            selfish_drop_prob: 1.0,
            selfish_mute: false,
            flows: 20,
            flow_rate: 4.0,
            flow_payload: 512,
            flow_start: SimTime::from_secs(30),
            flow_stop: SimTime::from_secs(870),
            seed: 1,
        }
    }
}

/// One `KEY VALUE` line.
#[derive(Debug, Clone, PartialEq)]
pub struct Entry {
    pub line: usize,
    pub key: String,
    pub value: String,
}

fn is_unit_annotation(tok: &str) -> bool {
    tok.starts_with('(') && tok.ends_with(')') && !tok.chars().any(|c| c.is_ascii_digit())
}

/// Splits text into entries. Blank and comment-only lines are skipped.
pub fn parse_entries(text: &str) -> Result<Vec<Entry>, ConfigError> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let body = raw.split('#').next().unwrap_or("").trim();
        if body.is_empty() {
            continue;
        }
        let mut toks: Vec<&str> = body.split_whitespace().collect();
        let mut key = toks.remove(0).to_string();
        // "RADIO RANGE (M) 125.227" is a derived value printed with the
        // radio table; keep it addressable under one token.
        if key == "RADIO" && toks.first() == Some(&"RANGE") {
            toks.remove(0);
            key = "RADIO-RANGE".to_string();
        }
        if toks.first().is_some_and(|t| is_unit_annotation(t)) {
            toks.remove(0);
        }
        if toks.is_empty() {
            return Err(ConfigError::NoValue { line, key });
        }
        out.push(Entry {
            line,
            key,
            value: toks.join(" "),
        });
    }
    Ok(out)
}

/// `15M`, `30S`, `100MS`, `2.5`, ... into simulated time. Bare numbers are
/// seconds.
pub fn parse_duration(s: &str) -> Result<SimTime, String> {
    let s = s.trim();
    let upper = s.to_ascii_uppercase();
    let (num, scale) = [
        ("NS", 1e-3),
        ("US", 1.0),
        ("MS", 1e3),
        ("S", 1e6),
        ("M", 60e6),
        ("H", 3600e6),
    ]
    .iter()
    .find_map(|(suffix, scale)| upper.strip_suffix(suffix).map(|n| (n, *scale)))
    .unwrap_or((upper.as_str(), 1e6));
    let v: f64 = num
        .trim()
        .parse()
        .map_err(|_| format!("not a duration: `{s}`"))?;
    if !v.is_finite() || v < 0.0 {
        return Err(format!("duration must be non-negative: `{s}`"));
    }
    Ok(SimTime::from_micros((v * scale).round() as u64))
}

pub fn format_duration(t: SimTime) -> String {
    let us = t.as_micros();
    if us % 1_000_000 == 0 {
        format!("{}S", us / 1_000_000)
    } else if us % 1000 == 0 {
        format!("{}MS", us / 1000)
    } else {
        format!("{us}US")
    }
}

pub fn parse_pair(s: &str) -> Result<(f64, f64), String> {
    let inner = s
        .trim()
        .strip_prefix('(')
        .and_then(|r| r.strip_suffix(')'))
        .ok_or_else(|| format!("expected `(x, y)`, got `{s}`"))?;
    let parts: Vec<&str> = inner.split(',').map(str::trim).collect();
    if parts.len() != 2 {
        return Err(format!("expected two components, got `{s}`"));
    }
    let x = parts[0].parse().map_err(|_| format!("bad number `{}`", parts[0]))?;
    let y = parts[1].parse().map_err(|_| format!("bad number `{}`", parts[1]))?;
    Ok((x, y))
}

pub fn parse_bool(s: &str) -> Result<bool, String> {
    match s.to_ascii_uppercase().as_str() {
        "YES" | "TRUE" | "ON" | "1" => Ok(true),
        "NO" | "FALSE" | "OFF" | "0" => Ok(false),
        _ => Err(format!("expected YES or NO, got `{s}`")),
    }
}

/// Exact rational from a decimal literal such as `0.35` or `1e-1`.
pub fn parse_score(s: &str) -> Result<Score, String> {
    let bad = || format!("not a decimal number: `{s}`");
    let t = s.trim().to_ascii_lowercase();
    let (mantissa, exp) = match t.split_once('e') {
        Some((m, e)) => (m.to_string(), e.parse::<i32>().map_err(|_| bad())?),
        None => (t.clone(), 0),
    };
    let (neg, mantissa) = match mantissa.strip_prefix('-') {
        Some(m) => (true, m.to_string()),
        None => (false, mantissa.trim_start_matches('+').to_string()),
    };
    let (int, frac) = mantissa.split_once('.').unwrap_or((&mantissa, ""));
    if int.is_empty() && frac.is_empty()
        || !int.chars().chain(frac.chars()).all(|c| c.is_ascii_digit())
        || int.len() + frac.len() > 30
        || exp.abs() > 30
    {
        return Err(bad());
    }
    let digits: i128 = format!("{int}{frac}").parse().map_err(|_| bad())?;
    let shift = exp - frac.len() as i32;
    let ten = Score::from_integer(10);
    let mut v = Score::from_integer(digits);
    v = if shift >= 0 {
        v * num_traits::pow(ten, shift as usize)
    } else {
        v / num_traits::pow(ten, (-shift) as usize)
    };
    Ok(if neg { -v } else { v })
}

/// Decimal text for a score; exact whenever the value has a finite decimal
/// expansion.
pub fn format_score(s: Score) -> String {
    let mut scaled = s;
    for places in 0..=30usize {
        if scaled.is_integer() {
            let digits = scaled.to_integer().abs().to_string();
            let sign = if s < Score::zero() { "-" } else { "" };
            if places == 0 {
                return format!("{sign}{digits}");
            }
            let padded = format!("{digits:0>width$}", width = places + 1);
            let (i, f) = padded.split_at(padded.len() - places);
            return format!("{sign}{i}.{f}");
        }
        scaled = scaled * Score::from_integer(10);
    }
    format!("{}", crate::mirror::score_to_f64(s))
}

struct Reader<'a> {
    entry: &'a Entry,
}

impl Reader<'_> {
    fn invalid(&self, reason: impl Into<String>) -> ConfigError {
        ConfigError::Invalid {
            line: self.entry.line,
            key: self.entry.key.clone(),
            value: self.entry.value.clone(),
            reason: reason.into(),
        }
    }

    fn num<T: FromStr>(&self) -> Result<T, ConfigError> {
        self.entry
            .value
            .parse()
            .map_err(|_| self.invalid("not a number"))
    }

    fn f64(&self) -> Result<f64, ConfigError> {
        let v: f64 = self.num()?;
        if v.is_finite() {
            Ok(v)
        } else {
            Err(self.invalid("must be finite"))
        }
    }

    fn duration(&self) -> Result<SimTime, ConfigError> {
        parse_duration(&self.entry.value).map_err(|e| self.invalid(e))
    }

    fn boolean(&self) -> Result<bool, ConfigError> {
        parse_bool(&self.entry.value).map_err(|e| self.invalid(e))
    }

    fn fraction(&self) -> Result<f64, ConfigError> {
        let v = self.f64()?;
        if (0.0..=1.0).contains(&v) {
            Ok(v)
        } else {
            Err(self.invalid("must lie in [0, 1]"))
        }
    }
}

/// Keys that `run` and `sweep` cannot do without.
pub const MANDATORY: [&str; 3] = ["SIMULATION-TIME", "TERRAIN-DIMENSIONS", "NUMBER-OF-NODES"];

impl RunConfig {
    /// Parses a full run configuration; the scenario keys in [`MANDATORY`]
    /// must be present.
    pub fn parse(text: &str) -> Result<RunConfig, ConfigError> {
        let entries = parse_entries(text)?;
        for key in MANDATORY {
            if !entries.iter().any(|e| e.key == key) {
                return Err(ConfigError::Missing(key));
            }
        }
        RunConfig::from_entries(&entries)
    }

    /// Parses whatever keys are present; everything else keeps its default.
    pub fn parse_partial(text: &str) -> Result<RunConfig, ConfigError> {
        RunConfig::from_entries(&parse_entries(text)?)
    }

    pub fn from_entries(entries: &[Entry]) -> Result<RunConfig, ConfigError> {
        let mut c = RunConfig::default();
        let mut seen = std::collections::BTreeSet::new();
        for entry in entries {
            if !seen.insert(entry.key.as_str()) {
                log::warn!("line {}: {} set again; the later value wins", entry.line, entry.key);
            }
            c.apply(entry)?;
        }
        c.check()?;
        Ok(c)
    }

    fn apply(&mut self, entry: &Entry) -> Result<(), ConfigError> {
        let r = Reader { entry };
        let v = entry.value.as_str();
        match entry.key.as_str() {
            "SIMULATION-TIME" => self.sim_time = r.duration()?,
            "TERRAIN-DIMENSIONS" => {
                let (w, h) = parse_pair(v).map_err(|e| r.invalid(e))?;
                if !(w >= 0.0 && h >= 0.0 && w.is_finite() && h.is_finite()) {
                    return Err(r.invalid("dimensions must be non-negative"));
                }
                self.terrain = Terrain { width: w, height: h };
            }
            "NUMBER-OF-NODES" => self.nodes = r.num()?,
            "NODE-PLACEMENT" => {
                if !v.eq_ignore_ascii_case("GRID") {
                    return Err(r.invalid("only GRID placement is supported"));
                }
            }
            "MOBILITY" => {
                self.mobility_model = match v.to_ascii_uppercase().as_str() {
                    "RANDOM-WAYPOINT" => MobilityModel::RandomWaypoint,
                    "NONE" => MobilityModel::None,
                    _ => return Err(r.invalid("expected RANDOM-WAYPOINT or NONE")),
                }
            }
            "MOBILITY-WP-PAUSE" => self.mobility.pause = r.duration()?,
            "MOBILITY-WP-MIN-SPEED" => self.mobility.v_min = r.f64()?,
            "MOBILITY-WP-MAX-SPEED" => self.mobility.v_max = r.f64()?,
            "MOBILITY-POSITION-GRANULARITY" => self.mobility.granularity = r.f64()?,
            "PROMISCUOUS-MODE" => self.promiscuous = r.boolean()?,
            "ROUTING-PROTOCOL" => self.protocol = v.parse().map_err(|e: String| r.invalid(e))?,
            "PROPAGATION-LIMIT" => self.radio.propagation_limit_dbm = r.f64()?,
            "PROPAGATION-PATHLOSS" => {
                let norm = v.to_ascii_uppercase().replace('_', "-");
                if norm != "TWO-RAY" {
                    return Err(r.invalid("only Two-Ray path loss is supported"));
                }
            }
            "RADIO-FREQUENCY" => self.radio.frequency_hz = r.f64()?,
            "RADIO-TX-POWER" => self.radio.tx_power_dbm = r.f64()?,
            "RADIO-ANTENNA-GAIN" => self.radio.antenna_gain_dbi = r.f64()?,
            "RADIO-RX-SENSITIVITY" => self.radio.rx_sensitivity_dbm = r.f64()?,
            "RADIO-RX-THRESHOLD" => self.radio.rx_threshold_dbm = r.f64()?,
            "RADIO-ANTENNA-HEIGHT" => self.radio.antenna_height_m = r.f64()?,
            "RADIO-BANDWIDTH" => self.radio.bandwidth_bps = r.f64()?,
            "RADIO-RANGE" => {
                // Derived from the other radio keys; only checked for syntax.
                r.f64()?;
            }
            "MIRROR-ROUND" => self.mirror.round = r.duration()?,
            "MIRROR-COLLECT-WINDOW" => self.mirror.collect_window = r.duration()?,
            "MIRROR-WATCHDOG-TIMEOUT" => self.mirror.watchdog_timeout = r.duration()?,
            "MIRROR-GRADE-THRESHOLD" => {
                let s = parse_score(v).map_err(|e| r.invalid(e))?;
                if s < Score::zero() || s > Score::one() {
                    return Err(r.invalid("must lie in [0, 1]"));
                }
                self.mirror.grade_threshold = s;
            }
            "MIRROR-DUTY-CYCLE" => self.mirror.duty_cycle = r.fraction()?,
            "MIRROR-PUNISH-REPLIES" => self.mirror.punish_replies = r.boolean()?,
            "MIRROR-COUNT-RREQ" => self.mirror.count_rreq = r.boolean()?,
            "MIRROR-FILTER-RREQ" => self.mirror.filter_rreq = r.boolean()?,
            "MIRROR-EVIDENCE-ONLY" => self.mirror.evidence_only = r.boolean()?,
            "SELFISH-FRACTION" => self.selfish_fraction = r.fraction()?,
            "SELFISH-DROP-PROB" => self.selfish_drop_prob = r.fraction()?,
            "SELFISH-MUTE" => self.selfish_mute = r.boolean()?,
            "FLOWS" => self.flows = r.num()?,
            "FLOW-RATE" => {
                self.flow_rate = r.f64()?;
                if self.flow_rate <= 0.0 {
                    return Err(r.invalid("rate must be positive"));
                }
            }
            "FLOW-PAYLOAD" => self.flow_payload = r.num()?,
            "FLOW-START" => self.flow_start = r.duration()?,
            "FLOW-STOP" => self.flow_stop = r.duration()?,
            "SEED" => self.seed = r.num()?,
            other => log::warn!("line {}: unknown key {other} ignored", entry.line),
        }
        Ok(())
    }

    fn check(&self) -> Result<(), ConfigError> {
        self.radio.validate().map_err(ConfigError::Inconsistent)?;
        self.mobility.validate().map_err(ConfigError::Inconsistent)?;
        if self.mirror.round == SimTime::ZERO {
            return Err(ConfigError::Inconsistent("MIRROR-ROUND must be positive".into()));
        }
        Ok(())
    }

    /// Canonical text form; parsing it yields an identical configuration.
    pub fn to_text(&self) -> String {
        let yn = |b: bool| if b { "YES" } else { "NO" };
        let mut s = String::new();
        let mut put = |k: &str, v: String| {
            let _ = writeln!(s, "{k} {v}");
        };
        put("SIMULATION-TIME", format_duration(self.sim_time));
        put(
            "TERRAIN-DIMENSIONS",
            format!("({}, {})", self.terrain.width, self.terrain.height),
        );
        put("NUMBER-OF-NODES", self.nodes.to_string());
        put("NODE-PLACEMENT", "GRID".into());
        put(
            "MOBILITY",
            match self.mobility_model {
                MobilityModel::None => "NONE",
                MobilityModel::RandomWaypoint => "RANDOM-WAYPOINT",
            }
            .into(),
        );
        put("MOBILITY-WP-PAUSE", format_duration(self.mobility.pause));
        put("MOBILITY-WP-MIN-SPEED", self.mobility.v_min.to_string());
        put("MOBILITY-WP-MAX-SPEED", self.mobility.v_max.to_string());
        put(
            "MOBILITY-POSITION-GRANULARITY",
            self.mobility.granularity.to_string(),
        );
        put("PROMISCUOUS-MODE", yn(self.promiscuous).into());
        put("ROUTING-PROTOCOL", self.protocol.to_string());
        put("PROPAGATION-LIMIT", self.radio.propagation_limit_dbm.to_string());
        put("PROPAGATION-PATHLOSS", "TWO-RAY".into());
        put("RADIO-FREQUENCY", self.radio.frequency_hz.to_string());
        put("RADIO-TX-POWER", self.radio.tx_power_dbm.to_string());
        put("RADIO-ANTENNA-GAIN", self.radio.antenna_gain_dbi.to_string());
        put("RADIO-RX-SENSITIVITY", self.radio.rx_sensitivity_dbm.to_string());
        put("RADIO-RX-THRESHOLD", self.radio.rx_threshold_dbm.to_string());
        put("RADIO-ANTENNA-HEIGHT", self.radio.antenna_height_m.to_string());
        put("RADIO-BANDWIDTH", self.radio.bandwidth_bps.to_string());
        put("MIRROR-ROUND", format_duration(self.mirror.round));
        put("MIRROR-COLLECT-WINDOW", format_duration(self.mirror.collect_window));
        put(
            "MIRROR-WATCHDOG-TIMEOUT",
            format_duration(self.mirror.watchdog_timeout),
        );
        put(
            "MIRROR-GRADE-THRESHOLD",
            format_score(self.mirror.grade_threshold),
        );
        put("MIRROR-DUTY-CYCLE", self.mirror.duty_cycle.to_string());
        put("MIRROR-PUNISH-REPLIES", yn(self.mirror.punish_replies).into());
        put("MIRROR-COUNT-RREQ", yn(self.mirror.count_rreq).into());
        put("MIRROR-FILTER-RREQ", yn(self.mirror.filter_rreq).into());
        put("MIRROR-EVIDENCE-ONLY", yn(self.mirror.evidence_only).into());
        put("SELFISH-FRACTION", self.selfish_fraction.to_string());
        put("SELFISH-DROP-PROB", self.selfish_drop_prob.to_string());
        put("SELFISH-MUTE", yn(self.selfish_mute).into());
        put("FLOWS", self.flows.to_string());
        put("FLOW-RATE", self.flow_rate.to_string());
        put("FLOW-PAYLOAD", self.flow_payload.to_string());
        put("FLOW-START", format_duration(self.flow_start));
        put("FLOW-STOP", format_duration(self.flow_stop));
        put("SEED", self.seed.to_string());
        s
    }
}
