use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use super::coordination::RelaySet;
use crate::graphmodel::{
    build_cfs, neighbor_matrices, CandidateSet, CfsError, CfsPolicy, LinkProbModel, NodeId,
    Topology,
};
use crate::selector::{select_relay_network, SelectorConfig, SelectorError};

/// Relay-set choice applied at every hop.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Policy {
    /// Best-scoring fully connected relay network, priorities by adjusted utility.
    Dda,
    /// Every progress neighbor, closest to the destination first.
    ExorLite,
    /// Best-progress neighbor plus the candidates linked to it.
    SoarLite,
}

impl Policy {
    pub const ALL: [Policy; 3] = [Policy::Dda, Policy::ExorLite, Policy::SoarLite];

    pub fn label(self) -> &'static str {
        match self {
            Policy::Dda => "dda",
            Policy::ExorLite => "exor",
            Policy::SoarLite => "soar",
        }
    }
}

impl fmt::Display for Policy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("unknown policy `{0}` (expected dda, exor or soar)")]
pub struct UnknownPolicy(pub String);

impl FromStr for Policy {
    type Err = UnknownPolicy;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "dda" => Ok(Policy::Dda),
            "exor" | "exor-lite" => Ok(Policy::ExorLite),
            "soar" | "soar-lite" => Ok(Policy::SoarLite),
            _ => Err(UnknownPolicy(s.to_string())),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PolicyError {
    #[error(transparent)]
    Cfs(#[from] CfsError),
    #[error(transparent)]
    Selector(#[from] SelectorError),
}

/// Per-hop relay-set oracle over a static topology. Choices are cached per
/// `(sender, destination)` since they depend on nothing else.
#[derive(Debug)]
pub struct Router<'a> {
    topology: &'a Topology,
    model: &'a LinkProbModel,
    policy: Policy,
    cfs_policy: CfsPolicy,
    selector: SelectorConfig,
    cache: HashMap<(NodeId, NodeId), Result<RelaySet, PolicyError>>,
}

impl<'a> Router<'a> {
    pub fn new(
        topology: &'a Topology,
        model: &'a LinkProbModel,
        policy: Policy,
        cfs_policy: CfsPolicy,
        selector: SelectorConfig,
    ) -> Self {
        Self {
            topology,
            model,
            policy,
            cfs_policy,
            selector,
            cache: HashMap::new(),
        }
    }

    pub fn topology(&self) -> &'a Topology {
        self.topology
    }

    pub fn model(&self) -> &'a LinkProbModel {
        self.model
    }

    pub fn policy(&self) -> Policy {
        self.policy
    }

    pub fn relay_set(
        &mut self,
        sender: NodeId,
        destination: NodeId,
    ) -> Result<RelaySet, PolicyError> {
        if let Some(hit) = self.cache.get(&(sender, destination)) {
            return hit.clone();
        }
        let computed = self.compute(sender, destination);
        self.cache.insert((sender, destination), computed.clone());
        computed
    }

    fn compute(&self, sender: NodeId, destination: NodeId) -> Result<RelaySet, PolicyError> {
        let cfs = build_cfs(
            self.topology,
            self.model,
            sender,
            destination,
            &self.cfs_policy,
        )?;
        let members = match self.policy {
            Policy::Dda => {
                let matrices = neighbor_matrices(self.topology, &cfs);
                let result = select_relay_network(&cfs, &matrices, &self.selector)?;
                result
                    .node_priorities
                    .iter()
                    .map(|&i| cfs.members[i])
                    .collect()
            }
            Policy::ExorLite => self.by_remaining_distance(cfs.members.clone(), destination),
            Policy::SoarLite => {
                let best = self.best_progress(&cfs, destination);
                let linked = cfs
                    .members
                    .iter()
                    .copied()
                    .filter(|&m| m == best || self.topology.is_linked(m, best))
                    .collect();
                self.by_remaining_distance(linked, destination)
            }
        };
        Ok(RelaySet::new(members))
    }

    fn by_remaining_distance(&self, mut members: Vec<NodeId>, destination: NodeId) -> Vec<NodeId> {
        members.sort_by(|&a, &b| {
            self.topology
                .distance(a, destination)
                .total_cmp(&self.topology.distance(b, destination))
                .then(a.cmp(&b))
        });
        members
    }

    fn best_progress(&self, cfs: &CandidateSet, destination: NodeId) -> NodeId {
        self.by_remaining_distance(cfs.members.clone(), destination)[0]
    }
}
