use std::collections::{HashMap, HashSet};

use rand::Rng;

use crate::graphmodel::{link_probability, LinkProbModel, NodeId, Topology};

/// Forwarding candidates in priority order (highest first).
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct RelaySet {
    pub members: Vec<NodeId>,
}

impl RelaySet {
    pub fn new(members: Vec<NodeId>) -> Self {
        Self { members }
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }
}

/// Delivery probabilities seen by one coordination round.
pub trait Channel {
    /// Probability that a data frame from `from` reaches `to`.
    fn data_prob(&self, from: NodeId, to: NodeId) -> f64;
    /// Probability that `listener` overhears an ACK sent by `forwarder`,
    /// or `None` when the two are not linked.
    fn ack_prob(&self, listener: NodeId, forwarder: NodeId) -> Option<f64>;
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum AckModel {
    /// ACKs succeed with the link's delivery probability.
    #[default]
    Link,
    /// ACKs between linked nodes succeed with a fixed probability.
    Fixed(f64),
}

/// Channel backed by a topology and link model.
#[derive(Debug, Clone)]
pub struct TopologyChannel<'a> {
    pub topology: &'a Topology,
    pub model: &'a LinkProbModel,
    pub ack: AckModel,
}

impl Channel for TopologyChannel<'_> {
    fn data_prob(&self, from: NodeId, to: NodeId) -> f64 {
        link_probability(self.model, self.topology, from, to).unwrap_or(0.0)
    }

    fn ack_prob(&self, listener: NodeId, forwarder: NodeId) -> Option<f64> {
        if !self.topology.is_linked(listener, forwarder) {
            return None;
        }
        match self.ack {
            AckModel::Link => link_probability(self.model, self.topology, forwarder, listener).ok(),
            AckModel::Fixed(p) => Some(p),
        }
    }
}

/// Channel with explicit per-receiver data probabilities, used for
/// controlled experiments. Every pair of receivers is linked unless
/// removed.
#[derive(Debug, Clone, Default)]
pub struct StaticChannel {
    data: HashMap<NodeId, f64>,
    ack: f64,
    cut: HashSet<(NodeId, NodeId)>,
}

impl StaticChannel {
    pub fn new<I: IntoIterator<Item = (NodeId, f64)>>(data: I, ack: f64) -> Self {
        Self {
            data: data.into_iter().collect(),
            ack,
            cut: HashSet::new(),
        }
    }

    pub fn without_link(mut self, a: NodeId, b: NodeId) -> Self {
        self.cut.insert((a.min(b), a.max(b)));
        self
    }
}

impl Channel for StaticChannel {
    fn data_prob(&self, _from: NodeId, to: NodeId) -> f64 {
        self.data.get(&to).copied().unwrap_or(0.0)
    }

    fn ack_prob(&self, listener: NodeId, forwarder: NodeId) -> Option<f64> {
        if self
            .cut
            .contains(&(listener.min(forwarder), listener.max(forwarder)))
        {
            None
        } else {
            Some(self.ack)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoordinationParams {
    pub slot: f64,
    pub max_retries: u32,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct CoordinationOutcome {
    pub forwarder: Option<NodeId>,
    /// 1-based priority of the forwarder.
    pub priority: Option<usize>,
    /// Slots waited in the final try.
    pub slots_waited: usize,
    /// Data transmissions by the sender (1 + retransmissions).
    pub tries: u32,
    /// Members holding the data after the final try, in priority order.
    pub receivers: Vec<NodeId>,
    /// Lower-priority holders that forwarded because they heard no ACK.
    pub duplicates: Vec<NodeId>,
    /// Total waiting time in seconds, including `n·T` per failed try.
    pub delay: f64,
}

impl CoordinationOutcome {
    pub fn retransmissions_used(&self) -> u32 {
        self.tries.saturating_sub(1)
    }

    /// Slots of the first try, counting a failed try as `n` slots.
    pub fn first_try_slots(&self, n: usize) -> usize {
        if self.tries == 1 && self.forwarder.is_some() {
            self.slots_waited
        } else {
            n
        }
    }
}

/// One priority-slotted forwarding exchange from `sender` to `relays`.
///
/// Data reception draws come from `link_rng` (one per member per try) and
/// ACK overhearing draws from `ack_rng`.
pub fn coordination_round<C: Channel + ?Sized, R: Rng + ?Sized, A: Rng + ?Sized>(
    sender: NodeId,
    relays: &RelaySet,
    channel: &C,
    link_rng: &mut R,
    ack_rng: &mut A,
    params: CoordinationParams,
) -> CoordinationOutcome {
    assert!(params.slot > 0.0, "slot must be positive");
    let n = relays.len();
    if n == 0 {
        return CoordinationOutcome::default();
    }
    let probs: Vec<f64> = relays
        .members
        .iter()
        .map(|&m| channel.data_prob(sender, m))
        .collect();
    let mut delay = 0.0;
    for try_no in 1..=params.max_retries + 1 {
        let received: Vec<bool> = probs.iter().map(|&p| link_rng.gen::<f64>() < p).collect();
        let Some(first) = received.iter().position(|&r| r) else {
            delay += n as f64 * params.slot;
            continue;
        };
        let receivers: Vec<NodeId> = (0..n)
            .filter(|&k| received[k])
            .map(|k| relays.members[k])
            .collect();
        let mut acking = vec![relays.members[first]];
        let mut duplicates = Vec::new();
        for &holder in &receivers[1..] {
            let heard = acking.iter().any(|&f| match channel.ack_prob(holder, f) {
                Some(p) => ack_rng.gen::<f64>() < p,
                None => false,
            });
            if !heard {
                acking.push(holder);
                duplicates.push(holder);
            }
        }
        delay += first as f64 * params.slot;
        return CoordinationOutcome {
            forwarder: Some(relays.members[first]),
            priority: Some(first + 1),
            slots_waited: first,
            tries: try_no,
            receivers,
            duplicates,
            delay,
        };
    }
    CoordinationOutcome {
        forwarder: None,
        priority: None,
        slots_waited: n,
        tries: params.max_retries + 1,
        receivers: Vec::new(),
        duplicates: Vec::new(),
        delay,
    }
}
