//! Discrete-event simulation of multi-hop opportunistic forwarding under
//! priority-slotted coordination.
//!
//! A scenario is single-threaded and fully determined by its configuration
//! and seed. Each replication draws from four independent substreams so
//! that, for a given seed, every policy sees the same topology and traffic.

mod coordination;
mod events;
mod policy;
mod rng;
mod scenario;

pub use coordination::{
    coordination_round, AckModel, Channel, CoordinationOutcome, CoordinationParams, RelaySet,
    StaticChannel, TopologyChannel,
};
pub use events::{EventQueue, Scheduled};
pub use policy::{Policy, PolicyError, Router};
pub use rng::{RngStreams, Substream};
pub use scenario::{
    route_packet, run_on_topology, run_scenario, DeliveryRecord, FailureCounts, FailureReason,
    MetricsRow, Packet, ScenarioConfig, ScenarioError, DEFAULT_CBR_RATE, DEFAULT_MAX_RETRIES,
    DEFAULT_PACKET_SIZE, DEFAULT_QUEUE_LEN, DEFAULT_SIM_TIME, DEFAULT_TTL,
};
