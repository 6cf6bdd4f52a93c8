//! Relay-network based candidate forwarding set optimization for
//! opportunistic routing in wireless sensor networks.
//!
//! The crate is organised bottom-up:
//!
//! - [`graphmodel`]: static topologies, link delivery probabilities,
//!   candidate forwarding sets and per-node neighbor matrices.
//! - [`rnr`]: relay-network recognition over neighbor matrices and clique
//!   enumeration/counting inside a candidate set.
//! - [`delaymodel`]: closed-form delivery probability and slotted relaying
//!   delay of a prioritized relay set, delay sensitivity, and utility
//!   re-prioritization.
//! - [`selector`]: per-network ETX-weighted metrics, relative-variance
//!   weighting, order-number scoring and the final relay-network choice.
//! - [`simcore`]: a deterministic discrete-event simulator of time-based
//!   coordination with the relay-network policy and two baselines.

#![forbid(unsafe_code)]

pub mod delaymodel;
pub mod graphmodel;
pub mod rnr;
pub mod selector;
pub mod simcore;

pub use graphmodel::{
    build_cfs, build_topology, link_probability, neighbor_matrices, Area, CandidateSet, CfsError,
    CfsPolicy, LinkProbModel, NeighborMatrix, NodeId, Point, Topology, TopologyError,
    UtilityMetric,
};
pub use rnr::{
    classify, count_relay_networks, enumerate_relay_networks, matrix_sum, EnumerationCaps,
    MatrixSum, RelayKind, RelayNetwork,
};
pub use selector::{select_relay_network, SelectionResult, SelectorConfig};
