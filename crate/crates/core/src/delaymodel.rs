//! Closed-form delivery probability and slotted relaying delay of a
//! prioritized relay set.
//!
//! Members are listed in forwarding-priority order. Under time-based
//! coordination the `k`-th member (0-based) forwards after waiting `k` slots
//! of length `T` if it is the highest-priority receiver; when nobody
//! receives, the whole try costs `n` slots.
//!
//! Sensitivities are evaluated by perturbing one probability and evaluating
//! the delay twice. `delta_i = DT(before) - DT(after)`, so a positive value
//! is the delay saved by raising `P_i`.

use thiserror::Error;

pub const DEFAULT_SLOT: f64 = 0.045;
pub const DEFAULT_DELTA_P: f64 = 0.01;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DelayModelError {
    #[error("a priority profile needs at least one member")]
    Empty,
    #[error("probability {value} at priority {index} is outside (0, 1)")]
    ProbabilityOutOfRange { index: usize, value: f64 },
    #[error("slot duration must be positive, got {0}")]
    NonPositiveSlot(f64),
    #[error("priority index {index} out of range for {len} members")]
    IndexOutOfRange { index: usize, len: usize },
    #[error("sensitivity gap needs i < j, got ({0}, {1})")]
    UnorderedPair(usize, usize),
}

/// Delivery probabilities in forwarding-priority order plus the slot length.
#[derive(Debug, Clone, PartialEq)]
pub struct PriorityProfile {
    probs: Vec<f64>,
    slot: f64,
}

impl PriorityProfile {
    pub fn new(probs: Vec<f64>, slot: f64) -> Result<Self, DelayModelError> {
        if probs.is_empty() {
            return Err(DelayModelError::Empty);
        }
        if let Some((index, &value)) = probs
            .iter()
            .enumerate()
            .find(|(_, &p)| !(p > 0.0 && p < 1.0))
        {
            return Err(DelayModelError::ProbabilityOutOfRange { index, value });
        }
        if slot.is_nan() || slot <= 0.0 {
            return Err(DelayModelError::NonPositiveSlot(slot));
        }
        Ok(Self { probs, slot })
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn slot(&self) -> f64 {
        self.slot
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    fn with_prob(&self, index: usize, value: f64) -> Result<Self, DelayModelError> {
        let mut probs = self.probs.clone();
        probs[index] = value;
        Self::new(probs, self.slot)
    }
}

/// Probability that at least one member receives: `1 - Π(1 - P_i)`.
pub fn network_pdp(probs: &[f64]) -> f64 {
    1.0 - probs.iter().map(|p| 1.0 - p).product::<f64>()
}

/// Expected slots waited in one transmission try, as a multiple of `T`.
pub fn relaying_delay_slots(probs: &[f64]) -> f64 {
    let n = probs.len();
    let mut all_failed = 1.0;
    let mut acc = 0.0;
    for i in 0..n.saturating_sub(1) {
        all_failed *= 1.0 - probs[i];
        acc += (i + 1) as f64 * probs[i + 1] * all_failed;
    }
    if let Some(last) = probs.last() {
        all_failed *= 1.0 - last;
    }
    acc + n as f64 * all_failed
}

/// Average one-hop relaying delay of one try, in seconds.
pub fn relaying_delay(profile: &PriorityProfile) -> f64 {
    relaying_delay_slots(&profile.probs) * profile.slot
}

/// Permutation listing member indices by descending probability, ties by
/// original index.
pub fn optimal_priority_order(probs: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..probs.len()).collect();
    order.sort_by(|&a, &b| probs[b].total_cmp(&probs[a]).then(a.cmp(&b)));
    order
}

/// Delay saved when the probability at priority `index` (0-based) rises by
/// `delta_p`, all others fixed.
pub fn delay_sensitivity(
    profile: &PriorityProfile,
    index: usize,
    delta_p: f64,
) -> Result<f64, DelayModelError> {
    if index >= profile.len() {
        return Err(DelayModelError::IndexOutOfRange {
            index,
            len: profile.len(),
        });
    }
    let raised = profile.with_prob(index, profile.probs[index] + delta_p)?;
    Ok(relaying_delay(profile) - relaying_delay(&raised))
}

/// `delta_i - delta_j` for priorities `i < j` (0-based).
pub fn sensitivity_gap(
    profile: &PriorityProfile,
    i: usize,
    j: usize,
    delta_p: f64,
) -> Result<f64, DelayModelError> {
    if i >= j {
        return Err(DelayModelError::UnorderedPair(i, j));
    }
    Ok(delay_sensitivity(profile, i, delta_p)? - delay_sensitivity(profile, j, delta_p)?)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SensitivityReport {
    pub delta_p: f64,
    /// Per-priority delay reduction (seconds).
    pub deltas: Vec<f64>,
    /// `gaps[i][j] = deltas[i] - deltas[j]`; the diagonal is zero.
    pub gaps: Vec<Vec<f64>>,
}

pub fn sensitivity_report(
    profile: &PriorityProfile,
    delta_p: f64,
) -> Result<SensitivityReport, DelayModelError> {
    let deltas = (0..profile.len())
        .map(|i| delay_sensitivity(profile, i, delta_p))
        .collect::<Result<Vec<_>, _>>()?;
    let gaps = deltas
        .iter()
        .map(|a| deltas.iter().map(|b| a - b).collect())
        .collect();
    Ok(SensitivityReport {
        delta_p,
        deltas,
        gaps,
    })
}

/// Node utility discounted by its one-hop ETX (`1 / P`).
pub fn adjusted_utility(utility: f64, prob: f64) -> f64 {
    utility * prob
}

/// Member indices ordered by descending adjusted utility, ties by index.
pub fn adjusted_priority_order(utils: &[f64], probs: &[f64]) -> Vec<usize> {
    let scores: Vec<f64> = utils
        .iter()
        .zip(probs)
        .map(|(&u, &p)| adjusted_utility(u, p))
        .collect();
    optimal_priority_order(&scores)
}

/// 1-based forwarding priority of each member under adjusted utility.
pub fn adjusted_priority_ranks(utils: &[f64], probs: &[f64]) -> Vec<usize> {
    let order = adjusted_priority_order(utils, probs);
    let mut ranks = vec![0; order.len()];
    for (rank, &member) in order.iter().enumerate() {
        ranks[member] = rank + 1;
    }
    ranks
}
