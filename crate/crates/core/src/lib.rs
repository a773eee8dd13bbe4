//! Simulation library for distributed detection in a clustered wireless
//! sensor network whose sensor-to-head and head-to-fusion links are noisy.
//!
//! Sensor nodes are deployed as a Poisson point process over a rectangular
//! region divided into grid clusters. Each node makes a one-bit local
//! decision; cluster heads receive the on-off-keyed superposition over a
//! shared Gaussian channel and amplify-and-forward it to the fusion center
//! over a second Gaussian channel. The fusion center combines the receptions
//! with one of several rules (counting, weighted counting, exact
//! log-likelihood ratio, linear, estimator-based linear), for which the
//! library also evaluates Gaussian tail bounds and an optimal relay-power
//! allocation under a mean-difference floor.
//!
//! All model math is generic over the scalar type (see [`Float`]); `f64`
//! aliases for the common types are exported at the crate root. Everything
//! that samples randomness takes an explicit RNG stream, and the Monte Carlo
//! harness derives one substream per trial so results are independent of
//! worker count.

pub mod bounds;
pub mod channel;
pub mod deployment;
pub mod error;
pub mod float;
pub mod fusion;
pub mod harness;
pub mod power;
pub mod quad;
pub mod sensing;
pub mod stats;
pub mod validation;

pub use error::{Error, Result};
pub use float::Float;

/// Which hypothesis a trial or bound refers to: no target present, or one
/// target present.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Hypothesis {
    H0,
    H1,
}

impl std::fmt::Display for Hypothesis {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Hypothesis::H0 => write!(f, "H0"),
            Hypothesis::H1 => write!(f, "H1"),
        }
    }
}

// Concrete `f64` aliases for the common domain types.
pub type Point = deployment::Point<f64>;
pub type RegionLayout = deployment::RegionLayout<f64>;
pub type SensorField = deployment::SensorField<f64>;
pub type TargetParams = sensing::TargetParams<f64>;
pub type SensingConfig = sensing::SensingConfig<f64>;
pub type ClusterIntensities = sensing::ClusterIntensities<f64>;
pub type ChannelConfig = channel::ChannelConfig<f64>;
pub type ChannelDerived = channel::ChannelDerived<f64>;
pub type FusionContext = fusion::FusionContext<f64>;
pub type MultiSampleObservation = fusion::MultiSampleObservation<f64>;
pub type EstimationResult = fusion::EstimationResult<f64>;
pub type TailBoundParams = bounds::TailBoundParams<f64>;
pub type AllocationProblem = power::AllocationProblem<f64>;
pub type PowerAllocation = power::PowerAllocation<f64>;
pub type ExperimentConfig = harness::ExperimentConfig<f64>;
pub type RocCurve = harness::RocCurve<f64>;
