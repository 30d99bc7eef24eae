//! Simulation and theory for the linear preferential attachment graph, with
//! a focus on the number of common friends of a fixed pair of nodes.
//!
//! * [`graph`]: the evolving multigraph and its O(log n) attachment sampler;
//! * [`tracker`]: incremental common-friend counts for fixed pairs and the
//!   subsample estimator;
//! * [`theory`]: Γ-ratio expectations, growth constants and one-step laws;
//! * [`montecarlo`]: seeded, order-independent replication;
//! * [`verify`]: checks of simulation output against the closed forms.

pub mod cli;
pub mod error;
pub mod export;
pub mod graph;
pub mod montecarlo;
pub mod params;
pub mod snapshot;
pub mod stats;
pub mod theory;
pub mod tracker;
pub mod verify;
pub mod weights;

pub use error::{Error, Result};
pub use graph::{GraphState, NodeId, StepObserver, StepOutcome};
pub use montecarlo::{ExperimentConfig, ReplicationSummary};
pub use params::{ModelParams, Regime};
pub use snapshot::Snapshot;
pub use theory::{ExpectationConstants, RegimeConstants};
pub use tracker::{common_friends_bruteforce, PairTracker, TrackerSet};
