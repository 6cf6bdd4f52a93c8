//! Flat `key = value` experiment configuration.
//!
//! Lists are comma separated and may be wrapped in brackets. `#` starts a
//! comment. Unknown or repeated keys are rejected.

use std::fmt::Write as _;

use orsim_core::delaymodel::DEFAULT_SLOT;
use orsim_core::graphmodel::{Area, LinkProbModel, UtilityMetric};
use orsim_core::rnr::EnumerationCaps;
use orsim_core::selector::{Prefilter, SelectorConfig};
use orsim_core::simcore::{
    AckModel, Policy, ScenarioConfig, DEFAULT_CBR_RATE, DEFAULT_MAX_RETRIES, DEFAULT_PACKET_SIZE,
    DEFAULT_QUEUE_LEN, DEFAULT_SIM_TIME, DEFAULT_TTL,
};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ConfigError {
    #[error("line {line}: expected `key = value`")]
    Syntax { line: usize },
    #[error("line {line}: unknown key `{key}`")]
    UnknownKey { line: usize, key: String },
    #[error("line {line}: key `{key}` given twice")]
    DuplicateKey { line: usize, key: String },
    #[error("`{key}`: {message}")]
    Invalid { key: String, message: String },
    #[error("unknown profile `{0}` (expected paper or desk)")]
    UnknownProfile(String),
}

impl ConfigError {
    pub fn key(&self) -> Option<&str> {
        match self {
            ConfigError::UnknownKey { key, .. }
            | ConfigError::DuplicateKey { key, .. }
            | ConfigError::Invalid { key, .. } => Some(key),
            _ => None,
        }
    }
}

fn invalid(key: &str, message: impl Into<String>) -> ConfigError {
    ConfigError::Invalid {
        key: key.to_string(),
        message: message.into(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Profile {
    Paper,
    Desk,
}

impl std::str::FromStr for Profile {
    type Err = ConfigError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "paper" => Ok(Profile::Paper),
            "desk" => Ok(Profile::Desk),
            _ => Err(ConfigError::UnknownProfile(s.to_string())),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub area: Area,
    pub node_counts: Vec<usize>,
    pub range: f64,
    pub cbr_connections: Vec<usize>,
    /// CBR connections used by the density sweep.
    pub density_cbr: usize,
    /// Node count used by the load sweep.
    pub load_nodes: usize,
    pub cbr_rate: f64,
    pub packet_size: u32,
    pub ttl: u32,
    pub queue_len: usize,
    pub slot_t: f64,
    pub max_retries: u32,
    pub sim_time: f64,
    pub link_model: LinkProbModel,
    pub ack: AckModel,
    pub utility: UtilityMetric,
    pub policies: Vec<Policy>,
    pub seeds: Vec<u64>,
    pub caps: EnumerationCaps,
    pub prefilter: Prefilter,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self::profile(Profile::Paper)
    }
}

const KEYS: &[&str] = &[
    "area",
    "node_counts",
    "range",
    "cbr_connections",
    "density_cbr",
    "load_nodes",
    "cbr_rate",
    "packet_size",
    "ttl",
    "queue_len",
    "slot_t",
    "max_retries",
    "sim_time",
    "link_model",
    "link_prob",
    "link_beta",
    "ack_model",
    "ack_prob",
    "utility",
    "policies",
    "seeds",
    "max_degree",
    "max_count",
    "prefilter",
];

fn parse_num<T: std::str::FromStr>(key: &str, v: &str) -> Result<T, ConfigError> {
    v.trim()
        .parse()
        .map_err(|_| invalid(key, format!("cannot parse `{}`", v.trim())))
}

fn parse_list<T: std::str::FromStr>(key: &str, v: &str) -> Result<Vec<T>, ConfigError> {
    let v = v.trim();
    let inner = v
        .strip_prefix('[')
        .and_then(|s| s.strip_suffix(']'))
        .unwrap_or(v);
    if inner.trim().is_empty() {
        return Err(invalid(key, "empty list"));
    }
    inner.split(',').map(|x| parse_num(key, x)).collect()
}

fn join<T: ToString>(xs: &[T]) -> String {
    xs.iter().map(T::to_string).collect::<Vec<_>>().join(",")
}

impl ExperimentConfig {
    pub fn profile(profile: Profile) -> Self {
        let paper = Self {
            area: Area::square(2000.0),
            node_counts: vec![100, 150, 200, 250, 300],
            range: 250.0,
            cbr_connections: vec![20, 40, 60, 80, 100],
            density_cbr: 60,
            load_nodes: 200,
            cbr_rate: DEFAULT_CBR_RATE,
            packet_size: DEFAULT_PACKET_SIZE,
            ttl: DEFAULT_TTL,
            queue_len: DEFAULT_QUEUE_LEN,
            slot_t: DEFAULT_SLOT,
            max_retries: DEFAULT_MAX_RETRIES,
            sim_time: DEFAULT_SIM_TIME,
            link_model: LinkProbModel::DistanceDecay { beta: 2.0 },
            ack: AckModel::Link,
            utility: UtilityMetric::Progress,
            policies: Policy::ALL.to_vec(),
            seeds: (0..10).collect(),
            caps: EnumerationCaps::default(),
            prefilter: Prefilter::None,
        };
        match profile {
            Profile::Paper => paper,
            Profile::Desk => Self {
                area: Area::square(1000.0),
                node_counts: vec![50, 75, 100],
                cbr_connections: vec![5, 10, 15, 20],
                density_cbr: 10,
                load_nodes: 100,
                seeds: (0..5).collect(),
                ..paper
            },
        }
    }

    /// Applies `text` on top of `self`.
    pub fn apply(mut self, text: &str) -> Result<Self, ConfigError> {
        let mut seen: Vec<&str> = Vec::new();
        let mut link_model: Option<String> = None;
        let mut link_prob: Option<f64> = None;
        let mut link_beta: Option<f64> = None;
        let mut ack_model: Option<String> = None;
        let mut ack_prob: Option<f64> = None;
        for (i, raw) in text.lines().enumerate() {
            let line_no = i + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or(ConfigError::Syntax { line: line_no })?;
            let key = key.trim();
            let Some(&known) = KEYS.iter().find(|&&k| k == key) else {
                return Err(ConfigError::UnknownKey {
                    line: line_no,
                    key: key.to_string(),
                });
            };
            if seen.contains(&known) {
                return Err(ConfigError::DuplicateKey {
                    line: line_no,
                    key: key.to_string(),
                });
            }
            seen.push(known);
            let value = value.trim();
            match known {
                "area" => {
                    let (w, h) = match value.split_once('x') {
                        Some((w, h)) => (parse_num(key, w)?, parse_num(key, h)?),
                        None => {
                            let s = parse_num(key, value)?;
                            (s, s)
                        }
                    };
                    self.area = Area::new(w, h);
                }
                "node_counts" => self.node_counts = parse_list(key, value)?,
                "range" => self.range = parse_num(key, value)?,
                "cbr_connections" => self.cbr_connections = parse_list(key, value)?,
                "density_cbr" => self.density_cbr = parse_num(key, value)?,
                "load_nodes" => self.load_nodes = parse_num(key, value)?,
                "cbr_rate" => self.cbr_rate = parse_num(key, value)?,
                "packet_size" => self.packet_size = parse_num(key, value)?,
                "ttl" => self.ttl = parse_num(key, value)?,
                "queue_len" => self.queue_len = parse_num(key, value)?,
                "slot_t" => self.slot_t = parse_num(key, value)?,
                "max_retries" => self.max_retries = parse_num(key, value)?,
                "sim_time" => self.sim_time = parse_num(key, value)?,
                "link_model" => link_model = Some(value.to_string()),
                "link_prob" => link_prob = Some(parse_num(key, value)?),
                "link_beta" => link_beta = Some(parse_num(key, value)?),
                "ack_model" => ack_model = Some(value.to_string()),
                "ack_prob" => ack_prob = Some(parse_num(key, value)?),
                "utility" => {
                    self.utility = match value {
                        "progress" => UtilityMetric::Progress,
                        "energy" => UtilityMetric::Energy,
                        _ => {
                            return Err(invalid(
                                key,
                                format!("expected progress or energy, got `{value}`"),
                            ))
                        }
                    }
                }
                "policies" => {
                    let inner = value
                        .strip_prefix('[')
                        .and_then(|s| s.strip_suffix(']'))
                        .unwrap_or(value);
                    self.policies = inner
                        .split(',')
                        .map(|p| p.parse::<Policy>().map_err(|e| invalid(key, e.to_string())))
                        .collect::<Result<_, _>>()?;
                }
                "seeds" => self.seeds = parse_list(key, value)?,
                "max_degree" => self.caps.max_degree = parse_num(key, value)?,
                "max_count" => self.caps.max_count = parse_num(key, value)?,
                "prefilter" => {
                    self.prefilter = match value {
                        "none" => Prefilter::None,
                        _ => match value.strip_prefix("head:") {
                            Some(k) => Prefilter::DescendingHead(parse_num(key, k)?),
                            None => {
                                return Err(invalid(
                                    key,
                                    format!("expected none or head:K, got `{value}`"),
                                ))
                            }
                        },
                    }
                }
                _ => unreachable!("key list and match arms agree"),
            }
        }
        self.link_model = resolve_link(&self.link_model, link_model, link_prob, link_beta)?;
        self.ack = resolve_ack(self.ack, ack_model, ack_prob)?;
        self.validate()?;
        Ok(self)
    }

    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        Self::default().apply(text)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let positive = |key: &str, v: f64| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(invalid(key, format!("must be positive, got {v}")))
            }
        };
        positive("area", self.area.width)?;
        positive("area", self.area.height)?;
        positive("range", self.range)?;
        positive("cbr_rate", self.cbr_rate)?;
        positive("slot_t", self.slot_t)?;
        positive("sim_time", self.sim_time)?;
        if let Some(n) = self.node_counts.iter().find(|&&n| n < 2) {
            return Err(invalid(
                "node_counts",
                format!("every count must be at least 2, got {n}"),
            ));
        }
        if self.load_nodes < 2 {
            return Err(invalid("load_nodes", "must be at least 2"));
        }
        if let Some(c) = self.cbr_connections.iter().find(|&&c| c == 0) {
            return Err(invalid(
                "cbr_connections",
                format!("every count must be positive, got {c}"),
            ));
        }
        if self.density_cbr == 0 {
            return Err(invalid("density_cbr", "must be positive"));
        }
        for (key, v) in [
            ("ttl", self.ttl as usize),
            ("queue_len", self.queue_len),
            ("packet_size", self.packet_size as usize),
        ] {
            if v == 0 {
                return Err(invalid(key, "must be positive"));
            }
        }
        if self.policies.is_empty() {
            return Err(invalid("policies", "empty list"));
        }
        if self.seeds.is_empty() {
            return Err(invalid("seeds", "empty list"));
        }
        if self.caps.max_degree < 2 {
            return Err(invalid("max_degree", "must be at least 2"));
        }
        if self.caps.max_count == 0 {
            return Err(invalid("max_count", "must be positive"));
        }
        if let Prefilter::DescendingHead(k) = self.prefilter {
            if k < 2 {
                return Err(invalid("prefilter", "head length must be at least 2"));
            }
        }
        Ok(())
    }

    /// Canonical text form; parsing it yields `self` again.
    pub fn serialize(&self) -> String {
        let mut out = String::new();
        let mut line = |k: &str, v: String| {
            let _ = writeln!(out, "{k} = {v}");
        };
        line("area", format!("{}x{}", self.area.width, self.area.height));
        line("node_counts", join(&self.node_counts));
        line("range", self.range.to_string());
        line("cbr_connections", join(&self.cbr_connections));
        line("density_cbr", self.density_cbr.to_string());
        line("load_nodes", self.load_nodes.to_string());
        line("cbr_rate", self.cbr_rate.to_string());
        line("packet_size", self.packet_size.to_string());
        line("ttl", self.ttl.to_string());
        line("queue_len", self.queue_len.to_string());
        line("slot_t", self.slot_t.to_string());
        line("max_retries", self.max_retries.to_string());
        line("sim_time", self.sim_time.to_string());
        match &self.link_model {
            LinkProbModel::Constant(p) => {
                line("link_model", "constant".into());
                line("link_prob", p.to_string());
            }
            LinkProbModel::DistanceDecay { beta } => {
                line("link_model", "decay".into());
                line("link_beta", beta.to_string());
            }
            LinkProbModel::Table(_) => unreachable!("table models are not configurable"),
        }
        match self.ack {
            AckModel::Link => line("ack_model", "link".into()),
            AckModel::Fixed(p) => {
                line("ack_model", "fixed".into());
                line("ack_prob", p.to_string());
            }
        }
        line(
            "utility",
            match self.utility {
                UtilityMetric::Progress => "progress",
                UtilityMetric::Energy => "energy",
            }
            .into(),
        );
        line("policies", join(&self.policies));
        line("seeds", join(&self.seeds));
        line("max_degree", self.caps.max_degree.to_string());
        line("max_count", self.caps.max_count.to_string());
        line(
            "prefilter",
            match self.prefilter {
                Prefilter::None => "none".into(),
                Prefilter::DescendingHead(k) => format!("head:{k}"),
            },
        );
        out
    }

    /// Shifts every seed by `base`.
    pub fn with_seed_base(mut self, base: u64) -> Self {
        for s in &mut self.seeds {
            *s = s.wrapping_add(base);
        }
        self
    }

    pub fn selector(&self) -> SelectorConfig {
        SelectorConfig {
            slot: self.slot_t,
            caps: self.caps,
            prefilter: self.prefilter,
        }
    }

    pub fn scenario(&self, policy: Policy, nodes: usize, cbr: usize) -> ScenarioConfig {
        ScenarioConfig {
            area: self.area,
            nodes,
            range: self.range,
            cbr,
            cbr_rate: self.cbr_rate,
            packet_size: self.packet_size,
            ttl: self.ttl,
            queue_len: self.queue_len,
            slot: self.slot_t,
            max_retries: self.max_retries,
            sim_time: self.sim_time,
            link_model: self.link_model.clone(),
            ack: self.ack,
            policy,
            utility: self.utility,
            selector: self.selector(),
        }
    }
}

fn resolve_link(
    current: &LinkProbModel,
    kind: Option<String>,
    prob: Option<f64>,
    beta: Option<f64>,
) -> Result<LinkProbModel, ConfigError> {
    let kind = kind.unwrap_or_else(|| match current {
        LinkProbModel::Constant(_) => "constant".into(),
        _ => "decay".into(),
    });
    match kind.as_str() {
        "constant" => {
            if beta.is_some() {
                return Err(invalid("link_beta", "only valid with link_model = decay"));
            }
            let p = prob.or(match current {
                LinkProbModel::Constant(p) => Some(*p),
                _ => None,
            });
            let p = p.ok_or_else(|| invalid("link_prob", "required with link_model = constant"))?;
            if !(p > 0.0 && p <= 1.0) {
                return Err(invalid("link_prob", format!("must lie in (0, 1], got {p}")));
            }
            Ok(LinkProbModel::Constant(p))
        }
        "decay" => {
            if prob.is_some() {
                return Err(invalid(
                    "link_prob",
                    "only valid with link_model = constant",
                ));
            }
            let beta = beta
                .or(match current {
                    LinkProbModel::DistanceDecay { beta } => Some(*beta),
                    _ => None,
                })
                .unwrap_or(2.0);
            if !(beta.is_finite() && beta > 0.0) {
                return Err(invalid(
                    "link_beta",
                    format!("must be positive, got {beta}"),
                ));
            }
            Ok(LinkProbModel::DistanceDecay { beta })
        }
        other => Err(invalid(
            "link_model",
            format!("expected constant or decay, got `{other}`"),
        )),
    }
}

fn resolve_ack(
    current: AckModel,
    kind: Option<String>,
    prob: Option<f64>,
) -> Result<AckModel, ConfigError> {
    let kind = kind.unwrap_or_else(|| match current {
        AckModel::Link => "link".into(),
        AckModel::Fixed(_) => "fixed".into(),
    });
    match kind.as_str() {
        "link" => {
            if prob.is_some() {
                return Err(invalid("ack_prob", "only valid with ack_model = fixed"));
            }
            Ok(AckModel::Link)
        }
        "fixed" => {
            let p = prob
                .or(match current {
                    AckModel::Fixed(p) => Some(p),
                    AckModel::Link => None,
                })
                .ok_or_else(|| invalid("ack_prob", "required with ack_model = fixed"))?;
            if !(0.0..=1.0).contains(&p) {
                return Err(invalid("ack_prob", format!("must lie in [0, 1], got {p}")));
            }
            Ok(AckModel::Fixed(p))
        }
        other => Err(invalid(
            "ack_model",
            format!("expected link or fixed, got `{other}`"),
        )),
    }
}
