//! Radio resource management for equatorial MEO constellations: user
//! clustering into beams, per-user bandwidth/power allocation and
//! satellite-to-cluster matching, plus a time-slotted simulator.
//!
//! The numerical modules are generic over [`Scalar`] (`f32` or `f64`); the
//! aliases below fix them to `f64`, which is what the simulator uses.

pub mod allocation;
pub mod clustering;
pub mod error;
pub mod geometry;
pub mod matching;
pub mod optimize;
pub mod power_model;
pub mod rf_model;
pub mod scalar;
pub mod scenario;
pub mod sim;

pub use error::{Error, Result};
pub use scalar::Scalar;
pub use scenario::{load_scenario, ScenarioConfig};
pub use sim::{run_greedy, run_proposed, write_results, RunResult, TimeslotMetrics};

pub type EcefVector = geometry::EcefVector<f64>;
pub type SurfacePoint = geometry::SurfacePoint<f64>;
pub type SatelliteOrbit = geometry::SatelliteOrbit<f64>;
pub type AntennaConfig = rf_model::AntennaConfig<f64>;
pub type LinkBudget = rf_model::LinkBudget<f64>;
pub type PowerParams = power_model::PowerParams<f64>;
pub type UserTerminal = scenario::UserTerminal<f64>;
pub type RequiredBwProfile = clustering::RequiredBwProfile<f64>;
pub type Cluster = clustering::Cluster<f64>;
pub type UserLinkProblem = allocation::UserLinkProblem<f64>;
pub type ClusterAllocation = allocation::ClusterAllocation<f64>;
pub type MatchingInstance = matching::MatchingInstance<f64>;
pub type MatchingPlan = matching::MatchingPlan<f64>;
