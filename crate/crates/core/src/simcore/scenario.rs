use std::collections::VecDeque;
use std::fmt;

use rand::Rng;
use thiserror::Error;

use super::coordination::{
    coordination_round, AckModel, CoordinationOutcome, CoordinationParams, TopologyChannel,
};
use super::events::EventQueue;
use super::policy::{Policy, PolicyError, Router};
use super::rng::{RngStreams, Substream};
use crate::delaymodel::DEFAULT_SLOT;
use crate::graphmodel::{
    Area, CfsError, CfsPolicy, LinkProbModel, NodeId, Topology, TopologyError, UtilityMetric,
};
use crate::selector::SelectorConfig;

pub const DEFAULT_TTL: u32 = 32;
pub const DEFAULT_PACKET_SIZE: u32 = 512;
pub const DEFAULT_QUEUE_LEN: usize = 50;
pub const DEFAULT_MAX_RETRIES: u32 = 7;
pub const DEFAULT_CBR_RATE: f64 = 4.0;
pub const DEFAULT_SIM_TIME: f64 = 50.0;

#[derive(Debug, Clone, PartialEq)]
pub struct Packet {
    pub id: u64,
    pub source: NodeId,
    pub destination: NodeId,
    pub created_at: f64,
    pub size: u32,
    pub ttl_remaining: u32,
}

impl Packet {
    pub fn new(id: u64, source: NodeId, destination: NodeId, created_at: f64, ttl: u32) -> Self {
        Self {
            id,
            source,
            destination,
            created_at,
            size: DEFAULT_PACKET_SIZE,
            ttl_remaining: ttl,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FailureReason {
    NoProgressNeighbors,
    RetriesExhausted,
    TtlExpired,
    QueueOverflow,
    Selection,
}

impl FailureReason {
    pub fn label(self) -> &'static str {
        match self {
            FailureReason::NoProgressNeighbors => "no progress neighbors",
            FailureReason::RetriesExhausted => "retries exhausted",
            FailureReason::TtlExpired => "ttl expired",
            FailureReason::QueueOverflow => "queue overflow",
            FailureReason::Selection => "selection failed",
        }
    }
}

impl fmt::Display for FailureReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl From<&PolicyError> for FailureReason {
    fn from(e: &PolicyError) -> Self {
        match e {
            PolicyError::Cfs(CfsError::NoProgressNeighbors) => FailureReason::NoProgressNeighbors,
            _ => FailureReason::Selection,
        }
    }
}

/// Fate of a single packet routed hop by hop without queueing.
#[derive(Debug, Clone, PartialEq)]
pub struct DeliveryRecord {
    pub failure: Option<FailureReason>,
    pub hops: u32,
    /// Accumulated waiting time in seconds.
    pub delay: f64,
    pub transmissions: u64,
    pub duplicates: u64,
    pub path: Vec<NodeId>,
}

impl DeliveryRecord {
    pub fn delivered(&self) -> bool {
        self.failure.is_none()
    }
}

enum Hop {
    Failed(FailureReason),
    Done(CoordinationOutcome),
}

struct Forwarding<'r, 'a> {
    router: &'r mut Router<'a>,
    channel: TopologyChannel<'a>,
    params: CoordinationParams,
}

impl Forwarding<'_, '_> {
    fn hop<R: Rng, A: Rng>(
        &mut self,
        at: NodeId,
        packet: &Packet,
        links: &mut R,
        acks: &mut A,
    ) -> Hop {
        match self.router.relay_set(at, packet.destination) {
            Err(e) => Hop::Failed(FailureReason::from(&e)),
            Ok(set) => Hop::Done(coordination_round(
                at,
                &set,
                &self.channel,
                links,
                acks,
                self.params,
            )),
        }
    }
}

/// Routes `packet` from its source until delivery or failure, charging
/// only coordination delay.
pub fn route_packet<R: Rng, A: Rng>(
    packet: &mut Packet,
    router: &mut Router<'_>,
    ack: AckModel,
    params: CoordinationParams,
    links: &mut R,
    acks: &mut A,
) -> DeliveryRecord {
    let (topology, model) = (router.topology(), router.model());
    let mut fw = Forwarding {
        router,
        channel: TopologyChannel {
            topology,
            model,
            ack,
        },
        params,
    };
    let mut record = DeliveryRecord {
        failure: None,
        hops: 0,
        delay: 0.0,
        transmissions: 0,
        duplicates: 0,
        path: vec![packet.source],
    };
    let mut at = packet.source;
    while at != packet.destination {
        match fw.hop(at, packet, links, acks) {
            Hop::Failed(reason) => {
                record.failure = Some(reason);
                break;
            }
            Hop::Done(out) => {
                record.delay += out.delay;
                record.transmissions += u64::from(out.tries) + out.duplicates.len() as u64;
                record.duplicates += out.duplicates.len() as u64;
                let Some(next) = out.forwarder else {
                    record.failure = Some(FailureReason::RetriesExhausted);
                    break;
                };
                packet.ttl_remaining -= 1;
                record.hops += 1;
                record.path.push(next);
                at = next;
                if at != packet.destination && packet.ttl_remaining == 0 {
                    record.failure = Some(FailureReason::TtlExpired);
                    break;
                }
            }
        }
    }
    record
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub area: Area,
    pub nodes: usize,
    pub range: f64,
    /// Number of CBR connections.
    pub cbr: usize,
    /// Packets per second per connection.
    pub cbr_rate: f64,
    pub packet_size: u32,
    pub ttl: u32,
    pub queue_len: usize,
    pub slot: f64,
    pub max_retries: u32,
    /// Traffic generation stops at this time (seconds); in-flight packets
    /// are still resolved.
    pub sim_time: f64,
    pub link_model: LinkProbModel,
    pub ack: AckModel,
    pub policy: Policy,
    pub utility: UtilityMetric,
    pub selector: SelectorConfig,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            area: Area::square(2000.0),
            nodes: 100,
            range: 250.0,
            cbr: 60,
            cbr_rate: DEFAULT_CBR_RATE,
            packet_size: DEFAULT_PACKET_SIZE,
            ttl: DEFAULT_TTL,
            queue_len: DEFAULT_QUEUE_LEN,
            slot: DEFAULT_SLOT,
            max_retries: DEFAULT_MAX_RETRIES,
            sim_time: DEFAULT_SIM_TIME,
            link_model: LinkProbModel::DistanceDecay { beta: 2.0 },
            ack: AckModel::Link,
            policy: Policy::Dda,
            utility: UtilityMetric::Progress,
            selector: SelectorConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ScenarioError {
    #[error("invalid `{key}`: {message}")]
    Invalid { key: &'static str, message: String },
    #[error("no packets generated; delivery ratio undefined")]
    NoPackets,
    #[error(transparent)]
    Topology(#[from] TopologyError),
}

fn invalid(key: &'static str, message: impl Into<String>) -> ScenarioError {
    ScenarioError::Invalid {
        key,
        message: message.into(),
    }
}

impl ScenarioConfig {
    pub fn validate(&self) -> Result<(), ScenarioError> {
        let positive = |key, v: f64| {
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
        positive("slot_t", self.slot)?;
        positive("sim_time", self.sim_time)?;
        if self.nodes < 2 {
            return Err(invalid(
                "node_counts",
                format!("need at least 2 nodes, got {}", self.nodes),
            ));
        }
        let pairs = self.nodes * (self.nodes - 1);
        if self.cbr > pairs {
            return Err(invalid(
                "cbr_connections",
                format!("{} flows exceed {pairs} node pairs", self.cbr),
            ));
        }
        if self.ttl == 0 {
            return Err(invalid("ttl", "must be at least 1"));
        }
        if self.queue_len == 0 {
            return Err(invalid("queue_len", "must be at least 1"));
        }
        if self.packet_size == 0 {
            return Err(invalid("packet_size", "must be at least 1"));
        }
        match &self.link_model {
            LinkProbModel::Constant(p) if !(*p > 0.0 && *p <= 1.0) => {
                return Err(invalid("link_prob", format!("must lie in (0, 1], got {p}")));
            }
            LinkProbModel::DistanceDecay { beta } if !(beta.is_finite() && *beta > 0.0) => {
                return Err(invalid(
                    "link_beta",
                    format!("must be positive, got {beta}"),
                ));
            }
            _ => {}
        }
        if let AckModel::Fixed(p) = self.ack {
            if !(0.0..=1.0).contains(&p) {
                return Err(invalid("ack_prob", format!("must lie in [0, 1], got {p}")));
            }
        }
        if self.selector.caps.max_degree < 2 || self.selector.caps.max_count == 0 {
            return Err(invalid(
                "caps",
                "max degree must be at least 2 and max count positive",
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct FailureCounts {
    pub no_progress: u64,
    pub retries: u64,
    pub ttl: u64,
    pub queue: u64,
    pub selection: u64,
}

impl FailureCounts {
    pub fn record(&mut self, reason: FailureReason) {
        match reason {
            FailureReason::NoProgressNeighbors => self.no_progress += 1,
            FailureReason::RetriesExhausted => self.retries += 1,
            FailureReason::TtlExpired => self.ttl += 1,
            FailureReason::QueueOverflow => self.queue += 1,
            FailureReason::Selection => self.selection += 1,
        }
    }

    pub fn total(&self) -> u64 {
        self.no_progress + self.retries + self.ttl + self.queue + self.selection
    }
}

/// Outcome of one replication.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricsRow {
    pub policy: Policy,
    pub nodes: usize,
    pub cbr: usize,
    pub seed: u64,
    pub generated: u64,
    pub delivered: u64,
    pub transmissions: u64,
    pub duplicates: u64,
    pub failures: FailureCounts,
    /// Mean end-to-end delay over delivered packets; NaN when none arrived.
    pub mean_delay_ms: f64,
    pub pdr: f64,
    /// Delivered packets per data transmission; NaN when nothing was sent.
    pub throughput: f64,
    /// NaN when nothing was delivered.
    pub dup_per_delivery: f64,
}

enum Event {
    Generate {
        flow: usize,
    },
    ServiceDone {
        node: NodeId,
        packet: Packet,
        outcome: CoordinationOutcome,
    },
}

#[derive(Default)]
struct Node {
    queue: VecDeque<Packet>,
    busy: bool,
}

struct Tally {
    generated: u64,
    delivered: u64,
    transmissions: u64,
    duplicates: u64,
    delay_sum: f64,
    failures: FailureCounts,
}

/// Generates the topology and flows for `seed` and simulates the scenario.
pub fn run_scenario(config: &ScenarioConfig, seed: u64) -> Result<MetricsRow, ScenarioError> {
    config.validate()?;
    let streams = RngStreams::new(seed);
    let topology = Topology::random_uniform(
        config.nodes,
        config.area,
        config.range,
        &mut streams.stream(Substream::Topology),
    )?;
    run_on_topology(config, &topology, seed)
}

/// Simulates the scenario on a given topology; flows and channel draws
/// still come from `seed`.
pub fn run_on_topology(
    config: &ScenarioConfig,
    topology: &Topology,
    seed: u64,
) -> Result<MetricsRow, ScenarioError> {
    config.validate()?;
    let n = topology.node_count();
    if n < 2 {
        return Err(invalid("node_counts", "need at least 2 nodes"));
    }
    if config.cbr > n * (n - 1) {
        return Err(invalid("cbr_connections", "more flows than node pairs"));
    }
    let streams = RngStreams::new(seed);
    let mut traffic = streams.stream(Substream::Traffic);
    let mut links = streams.stream(Substream::Links);
    let mut acks = streams.stream(Substream::Acks);

    let interval = 1.0 / config.cbr_rate;
    let mut flows: Vec<(NodeId, NodeId)> = Vec::with_capacity(config.cbr);
    while flows.len() < config.cbr {
        let s = NodeId(traffic.gen_range(0..n));
        let d = NodeId(traffic.gen_range(0..n));
        if s != d && !flows.contains(&(s, d)) {
            flows.push((s, d));
        }
    }

    let mut router = Router::new(
        topology,
        &config.link_model,
        config.policy,
        CfsPolicy {
            utility: config.utility,
        },
        config.selector,
    );
    let mut fw = Forwarding {
        router: &mut router,
        channel: TopologyChannel {
            topology,
            model: &config.link_model,
            ack: config.ack,
        },
        params: CoordinationParams {
            slot: config.slot,
            max_retries: config.max_retries,
        },
    };
    let mut events = EventQueue::new();
    for flow in 0..flows.len() {
        let offset = traffic.gen::<f64>() * interval;
        if offset < config.sim_time {
            events.schedule(offset, Event::Generate { flow });
        }
    }

    let mut nodes: Vec<Node> = (0..n).map(|_| Node::default()).collect();
    let mut tally = Tally {
        generated: 0,
        delivered: 0,
        transmissions: 0,
        duplicates: 0,
        delay_sum: 0.0,
        failures: FailureCounts::default(),
    };
    let mut next_id = 0u64;

    while let Some(ev) = events.pop() {
        let now = ev.time;
        match ev.event {
            Event::Generate { flow } => {
                let (src, dst) = flows[flow];
                let packet = Packet {
                    size: config.packet_size,
                    ..Packet::new(next_id, src, dst, now, config.ttl)
                };
                next_id += 1;
                tally.generated += 1;
                let next = now + interval;
                if next < config.sim_time {
                    events.schedule(next, Event::Generate { flow });
                }
                arrive(&mut nodes, &mut tally, config.queue_len, src, packet, now);
                serve(
                    &mut nodes,
                    &mut tally,
                    &mut fw,
                    &mut events,
                    src,
                    &mut links,
                    &mut acks,
                );
            }
            Event::ServiceDone {
                node,
                mut packet,
                outcome,
            } => {
                nodes[node.index()].busy = false;
                let dups = outcome.duplicates.len() as u64;
                tally.transmissions += u64::from(outcome.tries) + dups;
                tally.duplicates += dups;
                match outcome.forwarder {
                    None => tally.failures.record(FailureReason::RetriesExhausted),
                    Some(next) => {
                        packet.ttl_remaining -= 1;
                        if next != packet.destination && packet.ttl_remaining == 0 {
                            tally.failures.record(FailureReason::TtlExpired);
                        } else {
                            arrive(&mut nodes, &mut tally, config.queue_len, next, packet, now);
                            serve(
                                &mut nodes,
                                &mut tally,
                                &mut fw,
                                &mut events,
                                next,
                                &mut links,
                                &mut acks,
                            );
                        }
                    }
                }
                serve(
                    &mut nodes,
                    &mut tally,
                    &mut fw,
                    &mut events,
                    node,
                    &mut links,
                    &mut acks,
                );
            }
        }
    }

    if tally.generated == 0 {
        return Err(ScenarioError::NoPackets);
    }
    let ratio = |a: u64, b: u64| {
        if b == 0 {
            f64::NAN
        } else {
            a as f64 / b as f64
        }
    };
    Ok(MetricsRow {
        policy: config.policy,
        nodes: n,
        cbr: config.cbr,
        seed,
        generated: tally.generated,
        delivered: tally.delivered,
        transmissions: tally.transmissions,
        duplicates: tally.duplicates,
        failures: tally.failures,
        mean_delay_ms: if tally.delivered == 0 {
            f64::NAN
        } else {
            tally.delay_sum / tally.delivered as f64 * 1e3
        },
        pdr: ratio(tally.delivered, tally.generated),
        throughput: ratio(tally.delivered, tally.transmissions),
        dup_per_delivery: ratio(tally.duplicates, tally.delivered),
    })
}

fn arrive(
    nodes: &mut [Node],
    tally: &mut Tally,
    queue_len: usize,
    at: NodeId,
    packet: Packet,
    now: f64,
) {
    if at == packet.destination {
        tally.delivered += 1;
        tally.delay_sum += now - packet.created_at;
        return;
    }
    let node = &mut nodes[at.index()];
    if node.queue.len() >= queue_len {
        tally.failures.record(FailureReason::QueueOverflow);
    } else {
        node.queue.push_back(packet);
    }
}

fn serve<R: Rng, A: Rng>(
    nodes: &mut [Node],
    tally: &mut Tally,
    fw: &mut Forwarding<'_, '_>,
    events: &mut EventQueue<Event>,
    at: NodeId,
    links: &mut R,
    acks: &mut A,
) {
    let node = &mut nodes[at.index()];
    if node.busy {
        return;
    }
    while let Some(packet) = node.queue.pop_front() {
        match fw.hop(at, &packet, links, acks) {
            Hop::Failed(reason) => tally.failures.record(reason),
            Hop::Done(outcome) => {
                node.busy = true;
                events.schedule_in(
                    outcome.delay,
                    Event::ServiceDone {
                        node: at,
                        packet,
                        outcome,
                    },
                );
                return;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::delaymodel::PriorityProfile;
    use crate::graphmodel::{build_topology, Point};
    use crate::selector::effective_delay;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    const T: f64 = 0.045;

    fn grid(side: usize, spacing: f64, range: f64) -> Topology {
        let pts = (0..side * side)
            .map(|i| {
                Point::new(
                    (i % side) as f64 * spacing + 10.0,
                    (i / side) as f64 * spacing + 10.0,
                )
            })
            .collect();
        let extent = side as f64 * spacing + 20.0;
        build_topology(pts, vec![range; side * side], Area::square(extent)).unwrap()
    }

    fn router<'a>(topo: &'a Topology, model: &'a LinkProbModel, policy: Policy) -> Router<'a> {
        Router::new(
            topo,
            model,
            policy,
            CfsPolicy::default(),
            SelectorConfig::default(),
        )
    }

    fn params(max_retries: u32) -> CoordinationParams {
        CoordinationParams {
            slot: T,
            max_retries,
        }
    }

    fn rngs(seed: u64) -> (ChaCha8Rng, ChaCha8Rng) {
        (
            ChaCha8Rng::seed_from_u64(seed),
            ChaCha8Rng::seed_from_u64(!seed),
        )
    }

    #[test]
    fn adjacent_destination_is_one_free_hop() {
        let pts = vec![Point::new(0.0, 0.0), Point::new(100.0, 0.0)];
        let topo = build_topology(pts, vec![250.0; 2], Area::square(200.0)).unwrap();
        let model = LinkProbModel::Constant(1.0);
        let (mut l, mut a) = rngs(1);
        let mut pkt = Packet::new(0, NodeId(0), NodeId(1), 0.0, DEFAULT_TTL);
        let rec = route_packet(
            &mut pkt,
            &mut router(&topo, &model, Policy::Dda),
            AckModel::Link,
            params(7),
            &mut l,
            &mut a,
        );
        assert!(rec.delivered());
        assert_eq!(rec.hops, 1);
        assert_eq!(rec.delay, 0.0);
        assert_eq!(pkt.ttl_remaining, DEFAULT_TTL - 1);
    }

    #[test]
    fn disconnected_destination_fails_without_progress() {
        let pts = vec![
            Point::new(0.0, 0.0),
            Point::new(100.0, 0.0),
            Point::new(900.0, 0.0),
        ];
        let topo = build_topology(pts, vec![250.0; 3], Area::square(1000.0)).unwrap();
        let model = LinkProbModel::Constant(1.0);
        for policy in Policy::ALL {
            let (mut l, mut a) = rngs(2);
            let mut pkt = Packet::new(0, NodeId(0), NodeId(2), 0.0, DEFAULT_TTL);
            let rec = route_packet(
                &mut pkt,
                &mut router(&topo, &model, policy),
                AckModel::Link,
                params(7),
                &mut l,
                &mut a,
            );
            assert_eq!(rec.failure, Some(FailureReason::NoProgressNeighbors));
            assert_eq!(rec.failure.unwrap().label(), "no progress neighbors");
        }
    }

    #[test]
    fn ttl_bounds_the_hop_count() {
        let pts = (0..6).map(|i| Point::new(i as f64 * 200.0, 0.0)).collect();
        let topo = build_topology(pts, vec![250.0; 6], Area::new(1100.0, 10.0)).unwrap();
        let model = LinkProbModel::Constant(1.0);
        let (mut l, mut a) = rngs(3);
        let mut pkt = Packet::new(0, NodeId(0), NodeId(5), 0.0, 3);
        let rec = route_packet(
            &mut pkt,
            &mut router(&topo, &model, Policy::Dda),
            AckModel::Link,
            params(7),
            &mut l,
            &mut a,
        );
        assert_eq!(rec.failure, Some(FailureReason::TtlExpired));
        assert_eq!(rec.hops, 3);
        let mut pkt = Packet::new(0, NodeId(0), NodeId(5), 0.0, 5);
        let rec = route_packet(
            &mut pkt,
            &mut router(&topo, &model, Policy::Dda),
            AckModel::Link,
            params(7),
            &mut l,
            &mut a,
        );
        assert!(rec.delivered());
        assert_eq!(pkt.ttl_remaining, 0);
    }

    #[test]
    fn line_delay_composes_per_hop_effective_delays() {
        // each node only reaches its successor
        let probs = [0.9, 0.6, 0.75, 0.5];
        let pts = (0..5).map(|i| Point::new(i as f64 * 200.0, 0.0)).collect();
        let topo = build_topology(pts, vec![250.0; 5], Area::new(900.0, 10.0)).unwrap();
        let model = LinkProbModel::table((0..4).map(|i| ((NodeId(i), NodeId(i + 1)), probs[i])));
        let want: f64 = probs
            .iter()
            .map(|&p| effective_delay(&PriorityProfile::new(vec![p], T).unwrap()))
            .sum();
        let (mut l, mut a) = rngs(4);
        let runs = 40_000;
        let mut xs = Vec::with_capacity(runs);
        let mut r = router(&topo, &model, Policy::Dda);
        for id in 0..runs {
            let mut pkt = Packet::new(id as u64, NodeId(0), NodeId(4), 0.0, DEFAULT_TTL);
            let rec = route_packet(
                &mut pkt,
                &mut r,
                AckModel::Link,
                params(10_000),
                &mut l,
                &mut a,
            );
            assert!(rec.delivered());
            xs.push(rec.delay);
        }
        let n = xs.len() as f64;
        let mean = xs.iter().sum::<f64>() / n;
        let se = (xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0) / n).sqrt();
        assert!(
            (mean - want).abs() <= 3.0 * se,
            "{mean} vs {want} (se {se})"
        );
    }

    fn light(policy: Policy, model: LinkProbModel) -> ScenarioConfig {
        ScenarioConfig {
            area: Area::square(520.0),
            nodes: 25,
            cbr: 3,
            cbr_rate: 1.0,
            sim_time: 10.0,
            link_model: model,
            policy,
            ..ScenarioConfig::default()
        }
    }

    #[test]
    fn perfect_links_deliver_everything_without_duplicates() {
        let topo = grid(5, 100.0, 250.0);
        for seed in 0..5 {
            let row = run_on_topology(
                &light(Policy::Dda, LinkProbModel::Constant(1.0)),
                &topo,
                seed,
            )
            .unwrap();
            assert_eq!(row.pdr, 1.0);
            assert_eq!(row.duplicates, 0);
            assert_eq!(row.dup_per_delivery, 0.0);
            assert!(row.throughput > 0.0 && row.throughput <= 1.0);
            assert_eq!(row.failures.total(), 0);
        }
    }

    #[test]
    fn scenario_is_deterministic() {
        let cfg = ScenarioConfig {
            area: Area::square(800.0),
            nodes: 40,
            cbr: 5,
            sim_time: 5.0,
            ..ScenarioConfig::default()
        };
        for policy in Policy::ALL {
            let cfg = ScenarioConfig {
                policy,
                ..cfg.clone()
            };
            let a = run_scenario(&cfg, 11).unwrap();
            let b = run_scenario(&cfg, 11).unwrap();
            assert_eq!(format!("{a:?}"), format!("{b:?}"));
            assert!((0.0..=1.0).contains(&a.pdr));
            assert_eq!(a.delivered + a.failures.total(), a.generated);
        }
    }

    #[test]
    fn no_packets_is_an_error() {
        let cfg = ScenarioConfig {
            cbr: 0,
            ..light(Policy::Dda, LinkProbModel::Constant(1.0))
        };
        assert_eq!(run_scenario(&cfg, 1), Err(ScenarioError::NoPackets));
    }

    #[test]
    fn validation_names_the_key() {
        let bad = ScenarioConfig {
            nodes: 0,
            ..ScenarioConfig::default()
        };
        assert!(matches!(
            bad.validate(),
            Err(ScenarioError::Invalid {
                key: "node_counts",
                ..
            })
        ));
        let bad = ScenarioConfig {
            link_model: LinkProbModel::Constant(0.0),
            ..ScenarioConfig::default()
        };
        assert!(matches!(
            bad.validate(),
            Err(ScenarioError::Invalid {
                key: "link_prob",
                ..
            })
        ));
        let bad = ScenarioConfig {
            cbr: 7,
            nodes: 2,
            ..ScenarioConfig::default()
        };
        assert!(matches!(
            bad.validate(),
            Err(ScenarioError::Invalid {
                key: "cbr_connections",
                ..
            })
        ));
        assert!(ScenarioConfig::default().validate().is_ok());
    }

    #[test]
    fn queue_overflow_is_recorded() {
        // one slow bottleneck, a burst larger than the queue
        let pts = vec![Point::new(0.0, 0.0), Point::new(200.0, 0.0)];
        let topo = build_topology(pts, vec![250.0; 2], Area::square(300.0)).unwrap();
        let cfg = ScenarioConfig {
            area: Area::square(300.0),
            nodes: 2,
            cbr: 1,
            cbr_rate: 1000.0,
            sim_time: 0.2,
            queue_len: 5,
            link_model: LinkProbModel::Constant(0.05),
            ..ScenarioConfig::default()
        };
        let row = run_on_topology(&cfg, &topo, 3).unwrap();
        assert!(row.failures.queue > 0);
        assert_eq!(row.delivered + row.failures.total(), row.generated);
    }

    #[test]
    fn better_links_never_lower_mean_delivery() {
        let mut last = 0.0;
        for p in [0.2, 0.5, 0.9] {
            let mut sum = 0.0;
            for seed in 0..10 {
                let cfg = ScenarioConfig {
                    area: Area::square(800.0),
                    nodes: 50,
                    cbr: 5,
                    sim_time: 10.0,
                    link_model: LinkProbModel::Constant(p),
                    ..ScenarioConfig::default()
                };
                sum += run_scenario(&cfg, seed).unwrap().pdr;
            }
            let mean = sum / 10.0;
            assert!(mean >= last, "p={p}: {mean} < {last}");
            last = mean;
        }
    }

    #[test]
    fn delayed_deliveries_have_positive_delay() {
        let pts = vec![Point::new(0.0, 0.0), Point::new(100.0, 0.0)];
        let topo = build_topology(pts, vec![250.0; 2], Area::square(200.0)).unwrap();
        let model = LinkProbModel::Constant(0.3);
        let (mut l, mut a) = rngs(5);
        for id in 0..200 {
            let mut pkt = Packet::new(id, NodeId(0), NodeId(1), 0.0, DEFAULT_TTL);
            let rec = route_packet(
                &mut pkt,
                &mut router(&topo, &model, Policy::Dda),
                AckModel::Link,
                params(50),
                &mut l,
                &mut a,
            );
            assert!(rec.delivered());
            assert_eq!(rec.delay > 0.0, rec.transmissions > 1);
        }
    }
}
