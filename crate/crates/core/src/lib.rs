//! Grant-based random access for extra-large MIMO cells with visibility regions.
//!
//! The crate is organised bottom-up:
//!
//! - [`scenario`]: cell geometry, user drops, visibility regions and
//!   subarray-averaged large-scale gains.
//! - [`analytics`]: closed-form SINR, exclusivity probability and rate
//!   expressions used to decide every decode outcome.
//! - [`scheduler`]: first-fit sharing of payload data pilots between users
//!   whose visibility regions do not overlap.
//! - [`protocols`]: the NOVR-XL, SUCRe-XL and mSUCRe-XL access rounds.
//! - [`simulator`]: block-sequential Monte Carlo campaigns and metrics.
//!
//! Decode decisions never touch sampled fading: every outcome is the
//! comparison of an analytic SINR against the configured threshold.

pub mod analytics;
pub mod protocols;
pub mod scenario;
pub mod scheduler;
pub mod simulator;
mod streams;

use thiserror::Error;

pub use protocols::Protocol;
pub use scenario::{ScenarioConfig, UeId, UeState, UserEquipment, VisibilityVector};
pub use scheduler::{PdpId, PdpPool};
pub use simulator::{run_campaign, CampaignMetrics, CampaignOptions};

/// Errors raised by the simulator library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// A configuration value violates its documented bound.
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    /// A function was called outside its mathematical domain.
    #[error("domain error: {0}")]
    Domain(String),

    /// The UE does not hold a payload data pilot.
    #[error("UE {0} holds no payload data pilot")]
    NotAssigned(UeId),

    /// The UE already holds a payload data pilot.
    #[error("UE {0} already holds a payload data pilot")]
    AlreadyAssigned(UeId),

    /// The pilot pool no longer satisfies its invariants.
    #[error("pilot pool corrupted: {0}")]
    PoolCorrupted(String),
}

pub type Result<T> = std::result::Result<T, Error>;
