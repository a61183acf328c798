//! Optimum Bayesian decision fusion for multi-sensor networks containing
//! Byzantine nodes.
//!
//! A fusion center collects binary reports from n nodes over a window of T
//! time slots. Honest nodes relay their local decisions (wrong with
//! probability epsilon); Byzantine nodes additionally flip each report with
//! probability P_mal. Given prior knowledge of how Byzantines are
//! distributed, the MAP-optimal estimate of the whole state sequence
//! maximizes the report likelihood over all 2^T candidates.
//!
//! The crate provides:
//!
//! - [`fusion`]: the fusion rules (general explicit prior, independent node
//!   states, fixed number of Byzantines, majority baseline) with exact
//!   argmax over the sequence space;
//! - [`sim`]: a deterministic, seeded, parallel Monte Carlo simulator for
//!   error-probability estimation, parameter sweeps, and the attacker's
//!   best response over the flipping probability;
//! - [`exact`]: a full-enumeration oracle computing exact error
//!   probabilities on tiny instances;
//! - [`presets`]: named configurations reproducing each published
//!   experiment.

pub mod bits;
pub mod error;
pub mod exact;
pub mod fusion;
pub mod numeric;
pub mod presets;
pub mod sim;
pub mod types;

pub use bits::BitVec;
pub use error::{Error, Result};
pub use exact::{exact_error, ExactResult};
pub use fusion::{
    count_matches, derive_delta, fuse, majority_fuse, node_log_likelihood, score_fixed_k,
    score_general, score_independent, MAX_FUSE_T, TIE_TOLERANCE,
};
pub use sim::{
    best_response, estimate_error, generate_trial, sweep, BestResponse, ErrorEstimate,
    PairedComparison, RuleSpec, ScenarioConfig, SweepAxis, SweepRow,
};
pub use types::{
    ChannelParams, ExplicitPrior, FusionDecision, FusionRule, NodeStateVector, PriorModel,
    ReportMatrix, StateSequence,
};
