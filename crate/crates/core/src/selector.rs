//! Relay-network selection.
//!
//! Every relay network in the candidate set is scored on two metrics: its
//! slotted relaying delay inflated by the network's one-hop ETX, and its
//! expected forwarding utility deflated by the same ETX. Raw values are
//! replaced by order numbers so the metric with the larger magnitude cannot
//! swamp the other, and each metric's order number is weighted by the
//! metric's relative variance across the candidate networks. The network
//! with the largest weighted sum wins.
//!
//! Order numbers rank by desirability: the lowest delay and the highest
//! utility receive the largest order number `k`.

use thiserror::Error;

use crate::delaymodel::{
    adjusted_priority_order, adjusted_utility, network_pdp, relaying_delay_slots, PriorityProfile,
    DEFAULT_SLOT,
};
use crate::graphmodel::{CandidateSet, NeighborMatrix};
use crate::rnr::{enumerate_relay_networks, EnumerationCaps, RelayNetwork};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SelectorError {
    #[error("no candidates")]
    NoCandidates,
    #[error("relative variance needs at least two values, got {0}")]
    TooFewValues(usize),
    #[error("relative variance is undefined for a zero mean")]
    ZeroMean,
    #[error("metric lists have different lengths ({0} vs {1})")]
    LengthMismatch(usize, usize),
}

/// One-hop ETX of a relay network: `1 / P_G`.
pub fn one_hop_etx(probs: &[f64]) -> f64 {
    1.0 / network_pdp(probs)
}

/// Relaying delay inflated by the one-hop network ETX (seconds).
pub fn effective_delay(profile: &PriorityProfile) -> f64 {
    relaying_delay_slots(profile.probs()) * profile.slot() * one_hop_etx(profile.probs())
}

/// Expected utility of one try: the utility of whichever member ends up
/// forwarding, weighted by the chance it is the highest-priority receiver.
pub fn expected_network_utility(utils: &[f64], probs: &[f64]) -> f64 {
    debug_assert_eq!(utils.len(), probs.len());
    let mut all_missed = 1.0;
    let mut acc = 0.0;
    for (u, p) in utils.iter().zip(probs) {
        acc += u * p * all_missed;
        all_missed *= 1.0 - p;
    }
    acc
}

/// Expected utility deflated by the one-hop network ETX.
pub fn effective_utility(utils: &[f64], probs: &[f64]) -> f64 {
    expected_network_utility(utils, probs) * network_pdp(probs)
}

/// `(1/k) Σ ((x_i - mean) / mean)^2`.
pub fn relative_variance(values: &[f64]) -> Result<f64, SelectorError> {
    if values.len() < 2 {
        return Err(SelectorError::TooFewValues(values.len()));
    }
    let k = values.len() as f64;
    let mean = values.iter().sum::<f64>() / k;
    if mean == 0.0 {
        return Err(SelectorError::ZeroMean);
    }
    Ok(values
        .iter()
        .map(|x| ((x - mean) / mean).powi(2))
        .sum::<f64>()
        / k)
}

/// Ratio of the larger relative variance to the smaller one, and whether
/// the degenerate all-zero case was hit (then the ratio is 1).
pub fn resolution_ratio(v_delay: f64, v_utility: f64) -> (f64, bool) {
    if v_delay == v_utility {
        return (1.0, v_delay == 0.0);
    }
    let (hi, lo) = if v_delay > v_utility {
        (v_delay, v_utility)
    } else {
        (v_utility, v_delay)
    };
    (hi / lo, false)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    HigherBetter,
    LowerBetter,
}

/// Order numbers `1..=k`; the most desirable value gets the largest number.
/// Equal values share the lower number.
pub fn order_numbers(values: &[f64], direction: Direction) -> Vec<usize> {
    values
        .iter()
        .map(|&v| {
            1 + values
                .iter()
                .filter(|&&w| match direction {
                    Direction::HigherBetter => w < v,
                    Direction::LowerBetter => w > v,
                })
                .count()
        })
        .collect()
}

/// Weighted sum of the raw metric values.
pub fn legacy_weighted_utility(delay: f64, utility: f64, w_delay: f64, w_utility: f64) -> f64 {
    w_delay * delay + w_utility * utility
}

/// Relative-variance weights of the two metrics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SelectionWeights {
    pub v_delay: f64,
    pub v_utility: f64,
    pub xi: f64,
    /// Both variances were zero (or only one network was scored).
    pub degenerate: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FinalScores {
    pub weights: SelectionWeights,
    pub delay_ranks: Vec<usize>,
    pub utility_ranks: Vec<usize>,
    pub scores: Vec<f64>,
}

/// Rank-weighted final utility of every network from its effective delay
/// and effective utility.
pub fn final_utilities(delays: &[f64], utilities: &[f64]) -> Result<FinalScores, SelectorError> {
    if delays.len() != utilities.len() {
        return Err(SelectorError::LengthMismatch(delays.len(), utilities.len()));
    }
    match delays.len() {
        0 => Err(SelectorError::NoCandidates),
        1 => Ok(FinalScores {
            weights: SelectionWeights {
                v_delay: 1.0,
                v_utility: 1.0,
                xi: 1.0,
                degenerate: true,
            },
            delay_ranks: vec![1],
            utility_ranks: vec![1],
            scores: vec![2.0],
        }),
        _ => {
            let v_delay = relative_variance(delays)?;
            let v_utility = relative_variance(utilities)?;
            let (xi, degenerate) = resolution_ratio(v_delay, v_utility);
            let delay_ranks = order_numbers(delays, Direction::LowerBetter);
            let utility_ranks = order_numbers(utilities, Direction::HigherBetter);
            let scores = delay_ranks
                .iter()
                .zip(&utility_ranks)
                .map(|(&d, &u)| v_delay * d as f64 + v_utility * u as f64)
                .collect();
            Ok(FinalScores {
                weights: SelectionWeights {
                    v_delay,
                    v_utility,
                    xi,
                    degenerate,
                },
                delay_ranks,
                utility_ranks,
                scores,
            })
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NetworkMetrics {
    pub pdp: f64,
    pub one_hop_etx: f64,
    pub relaying_delay: f64,
    pub effective_delay: f64,
    pub expected_utility: f64,
    pub effective_utility: f64,
}

/// Metrics of a network whose members are already in priority order.
pub fn network_metrics(utils: &[f64], probs: &[f64], slot: f64) -> NetworkMetrics {
    let pdp = network_pdp(probs);
    let dt = relaying_delay_slots(probs) * slot;
    let expected = expected_network_utility(utils, probs);
    NetworkMetrics {
        pdp,
        one_hop_etx: 1.0 / pdp,
        relaying_delay: dt,
        effective_delay: dt / pdp,
        expected_utility: expected,
        effective_utility: expected * pdp,
    }
}

/// Optional pruning applied before scoring.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Prefilter {
    #[default]
    None,
    /// Keep networks whose first `k` priorities have non-increasing
    /// delivery probabilities.
    DescendingHead(usize),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SelectorConfig {
    pub slot: f64,
    pub caps: EnumerationCaps,
    pub prefilter: Prefilter,
}

impl Default for SelectorConfig {
    fn default() -> Self {
        Self {
            slot: DEFAULT_SLOT,
            caps: EnumerationCaps::default(),
            prefilter: Prefilter::None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScoredNetwork {
    pub network: RelayNetwork,
    /// Candidate-set positions in forwarding-priority order.
    pub priorities: Vec<usize>,
    pub metrics: NetworkMetrics,
    pub delay_rank: usize,
    pub utility_rank: usize,
    pub final_utility: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Choice {
    /// Index into [`SelectionResult::scored`].
    Network(usize),
    /// No relay network exists; the single best candidate position.
    SingleNode(usize),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SelectionResult {
    pub scored: Vec<ScoredNetwork>,
    /// Networks dropped by the prefilter.
    pub filtered_out: Vec<RelayNetwork>,
    pub weights: Option<SelectionWeights>,
    pub choice: Choice,
    /// Chosen candidate positions in forwarding-priority order.
    pub node_priorities: Vec<usize>,
    pub truncated: bool,
}

impl SelectionResult {
    pub fn chosen(&self) -> Option<&ScoredNetwork> {
        match self.choice {
            Choice::Network(i) => Some(&self.scored[i]),
            Choice::SingleNode(_) => None,
        }
    }

    /// Chosen candidate positions, sorted.
    pub fn chosen_members(&self) -> Vec<usize> {
        let mut m = self.node_priorities.clone();
        m.sort_unstable();
        m
    }
}

fn passes(prefilter: Prefilter, priorities: &[usize], probs: &[f64]) -> bool {
    match prefilter {
        Prefilter::None => true,
        Prefilter::DescendingHead(k) => priorities
            .iter()
            .take(k)
            .map(|&i| probs[i])
            .collect::<Vec<_>>()
            .windows(2)
            .all(|w| w[0] >= w[1]),
    }
}

/// Chooses the relay network with the highest rank-weighted final utility.
///
/// Ties are broken by lower effective delay, then lexicographic members.
/// Without any relay network of degree two or more the single candidate
/// with the highest adjusted utility is returned.
pub fn select_relay_network(
    cfs: &CandidateSet,
    matrices: &[NeighborMatrix],
    config: &SelectorConfig,
) -> Result<SelectionResult, SelectorError> {
    if cfs.is_empty() {
        return Err(SelectorError::NoCandidates);
    }
    let enumeration = enumerate_relay_networks(matrices, config.caps);
    let mut kept = Vec::new();
    let mut filtered_out = Vec::new();
    for network in enumeration.networks {
        let utils: Vec<f64> = network.members.iter().map(|&i| cfs.utils[i]).collect();
        let probs: Vec<f64> = network.members.iter().map(|&i| cfs.probs[i]).collect();
        let priorities: Vec<usize> = adjusted_priority_order(&utils, &probs)
            .into_iter()
            .map(|k| network.members[k])
            .collect();
        if passes(config.prefilter, &priorities, &cfs.probs) {
            kept.push((network, priorities));
        } else {
            filtered_out.push((network, priorities));
        }
    }
    if kept.is_empty() {
        // never let the optional filter leave nothing to choose from
        kept = std::mem::take(&mut filtered_out);
    }
    let filtered_out: Vec<RelayNetwork> = filtered_out.into_iter().map(|(n, _)| n).collect();

    if kept.is_empty() {
        let best = adjusted_priority_order(&cfs.utils, &cfs.probs)[0];
        return Ok(SelectionResult {
            scored: Vec::new(),
            filtered_out,
            weights: None,
            choice: Choice::SingleNode(best),
            node_priorities: vec![best],
            truncated: enumeration.truncated,
        });
    }

    let metrics: Vec<NetworkMetrics> = kept
        .iter()
        .map(|(_, pr)| {
            let utils: Vec<f64> = pr.iter().map(|&i| cfs.utils[i]).collect();
            let probs: Vec<f64> = pr.iter().map(|&i| cfs.probs[i]).collect();
            network_metrics(&utils, &probs, config.slot)
        })
        .collect();
    let delays: Vec<f64> = metrics.iter().map(|m| m.effective_delay).collect();
    let utilities: Vec<f64> = metrics.iter().map(|m| m.effective_utility).collect();
    let scores = final_utilities(&delays, &utilities)?;

    let scored: Vec<ScoredNetwork> = kept
        .into_iter()
        .zip(metrics)
        .enumerate()
        .map(|(i, ((network, priorities), metrics))| ScoredNetwork {
            network,
            priorities,
            metrics,
            delay_rank: scores.delay_ranks[i],
            utility_rank: scores.utility_ranks[i],
            final_utility: scores.scores[i],
        })
        .collect();
    let best = (0..scored.len())
        .max_by(|&a, &b| {
            let (x, y) = (&scored[a], &scored[b]);
            x.final_utility
                .total_cmp(&y.final_utility)
                .then(
                    y.metrics
                        .effective_delay
                        .total_cmp(&x.metrics.effective_delay),
                )
                .then(y.network.members.cmp(&x.network.members))
        })
        .expect("at least one scored network");
    let node_priorities = scored[best].priorities.clone();
    Ok(SelectionResult {
        scored,
        filtered_out,
        weights: Some(scores.weights),
        choice: Choice::Network(best),
        node_priorities,
        truncated: enumeration.truncated,
    })
}

/// Adjusted utility of each chosen member, in priority order.
pub fn chosen_adjusted_utilities(cfs: &CandidateSet, result: &SelectionResult) -> Vec<f64> {
    result
        .node_priorities
        .iter()
        .map(|&i| adjusted_utility(cfs.utils[i], cfs.probs[i]))
        .collect()
}
