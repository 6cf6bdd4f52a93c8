//! Human-readable dump of one relay-network selection.

use std::fmt::Write as _;

use orsim_core::graphmodel::{
    build_cfs, neighbor_matrices, CandidateSet, CfsError, CfsPolicy, NodeId, Topology,
};
use orsim_core::rnr::classify;
use orsim_core::selector::{select_relay_network, Choice, SelectionResult, SelectorError};
use thiserror::Error;

use crate::config::ExperimentConfig;

/// Candidate sets up to this size also get every subset's matrix sum.
pub const SUBSET_LISTING_LIMIT: usize = 8;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ExplainError {
    #[error("node {0} is not in the topology")]
    UnknownNode(NodeId),
    #[error(transparent)]
    Cfs(#[from] CfsError),
    #[error(transparent)]
    Selector(#[from] SelectorError),
}

#[derive(Debug, Clone)]
pub struct Explanation {
    pub cfs: CandidateSet,
    /// `None` for a single-candidate set.
    pub selection: Option<SelectionResult>,
    pub text: String,
}

impl Explanation {
    /// Chosen node ids in forwarding-priority order.
    pub fn chosen_nodes(&self) -> Vec<NodeId> {
        match &self.selection {
            Some(s) => s
                .node_priorities
                .iter()
                .map(|&i| self.cfs.members[i])
                .collect(),
            None => self.cfs.members.clone(),
        }
    }
}

fn ids(cfs: &CandidateSet, positions: &[usize]) -> String {
    let mut nodes: Vec<usize> = positions.iter().map(|&i| cfs.members[i].0).collect();
    nodes.sort_unstable();
    let inner: Vec<String> = nodes.iter().map(usize::to_string).collect();
    format!("({})", inner.join(","))
}

fn ordered(cfs: &CandidateSet, positions: &[usize]) -> String {
    positions
        .iter()
        .map(|&i| cfs.members[i].to_string())
        .collect::<Vec<_>>()
        .join(" > ")
}

pub fn explain_selection(
    topology: &Topology,
    sender: NodeId,
    destination: NodeId,
    config: &ExperimentConfig,
) -> Result<Explanation, ExplainError> {
    for node in [sender, destination] {
        if node.0 >= topology.node_count() {
            return Err(ExplainError::UnknownNode(node));
        }
    }
    let policy = CfsPolicy {
        utility: config.utility,
    };
    let cfs = build_cfs(topology, &config.link_model, sender, destination, &policy)?;
    let mut t = String::new();
    if cfs.len() == 1 {
        let _ = writeln!(
            t,
            "single candidate {} (P = {:.4}, U = {:.4}): no relay network, forward directly",
            cfs.members[0], cfs.probs[0], cfs.utils[0]
        );
        return Ok(Explanation {
            cfs,
            selection: None,
            text: t,
        });
    }

    let matrices = neighbor_matrices(topology, &cfs);
    let selection = select_relay_network(&cfs, &matrices, &config.selector())?;

    let _ = writeln!(
        t,
        "candidate set of {sender} toward {destination}: {} members",
        cfs.len()
    );
    let _ = writeln!(t, "  node        P        U   neighbor row");
    for (i, m) in matrices.iter().enumerate() {
        let row: String = m
            .to_bools()
            .iter()
            .map(|&b| if b { '1' } else { '0' })
            .collect();
        let _ = writeln!(
            t,
            "  {:>4} {:>8.4} {:>8.4}   {row}",
            cfs.members[i], cfs.probs[i], cfs.utils[i]
        );
    }

    let _ = writeln!(t);
    let _ = writeln!(
        t,
        "relay networks: {}{}",
        selection.scored.len() + selection.filtered_out.len(),
        if selection.truncated {
            " (enumeration truncated)"
        } else {
            ""
        }
    );
    for s in &selection.scored {
        let _ = writeln!(
            t,
            "  {:<20} {:<10} degree {} D = {}",
            ids(&cfs, &s.network.members),
            s.network.kind.label(),
            s.network.degree(),
            s.network.sum.0
        );
    }
    for n in &selection.filtered_out {
        let _ = writeln!(
            t,
            "  {:<20} {:<10} degree {} (pre-filtered)",
            ids(&cfs, &n.members),
            n.kind.label(),
            n.degree()
        );
    }

    if cfs.len() <= SUBSET_LISTING_LIMIT {
        let _ = writeln!(t);
        let _ = writeln!(t, "matrix sums of every subset:");
        let m = cfs.len();
        let mut subsets: Vec<Vec<usize>> = (1u32..(1 << m))
            .map(|mask| (0..m).filter(|i| mask >> i & 1 == 1).collect::<Vec<_>>())
            .filter(|s| s.len() >= 2 && s.len() <= config.caps.max_degree)
            .collect();
        subsets.sort_by(|a, b| a.len().cmp(&b.len()).then(a.cmp(b)));
        for s in subsets {
            let c = classify(&s, &matrices);
            let _ = writeln!(
                t,
                "  {:<20} D = {} {}",
                ids(&cfs, &s),
                c.sum.0,
                c.kind.label()
            );
        }
    }

    let _ = writeln!(t);
    if selection.scored.is_empty() {
        let _ = writeln!(t, "no relay network of degree 2 or more");
    } else {
        let _ = writeln!(
            t,
            "  {:<20} {:<20} {:>8} {:>8} {:>10} {:>8} {:>6} {:>6} {:>8}",
            "network", "priorities", "P_G", "t_G", "DT*(ms)", "U*", "n_DT", "n_U", "U^F"
        );
        for s in &selection.scored {
            let _ = writeln!(
                t,
                "  {:<20} {:<20} {:>8.4} {:>8.4} {:>10.4} {:>8.4} {:>6} {:>6} {:>8.4}",
                ids(&cfs, &s.network.members),
                ordered(&cfs, &s.priorities),
                s.metrics.pdp,
                s.metrics.one_hop_etx,
                s.metrics.effective_delay * 1e3,
                s.metrics.effective_utility,
                s.delay_rank,
                s.utility_rank,
                s.final_utility
            );
        }
        if let Some(w) = selection.weights {
            let _ = writeln!(
                t,
                "weights: rv(DT*) = {:.6}, rv(U*) = {:.6}, xi = {:.4}{}",
                w.v_delay,
                w.v_utility,
                w.xi,
                if w.degenerate { " (degenerate)" } else { "" }
            );
        }
    }

    let _ = writeln!(t);
    match selection.choice {
        Choice::Network(i) => {
            let s = &selection.scored[i];
            let _ = writeln!(
                t,
                "chosen: {} {} with priorities {}",
                ids(&cfs, &s.network.members),
                s.network.kind.label(),
                ordered(&cfs, &selection.node_priorities)
            );
        }
        Choice::SingleNode(i) => {
            let _ = writeln!(
                t,
                "chosen: single node {} (highest adjusted utility)",
                cfs.members[i]
            );
        }
    }
    Ok(Explanation {
        cfs,
        selection: Some(selection),
        text: t,
    })
}
