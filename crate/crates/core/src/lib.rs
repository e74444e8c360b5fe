// Negated comparisons like `!(x > 0.0)` are used deliberately so that NaN
// fails validation the same way out-of-range values do.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

//! Deterministic, seedable simulator of a vehicular physical-virtual
//! synchronization market.
//!
//! The market has two sides cleared by one roadside unit (RSU): a physical
//! submarket where autonomous vehicles (AVs) bid to have their digital-twin
//! task bundles executed, and a virtual submarket where AR recommenders
//! (MARs) bid for the display window that opens while those tasks run. The
//! crate provides the delay and match-quality models, the MTEPViSA mechanism
//! with its EPViSA / PViSA baselines, a Monte Carlo experiment runner with
//! common random numbers, and a property lab that verifies
//! strategy-proofness, individual rationality, feasibility, and
//! adverse-selection freedom by brute-force search.

pub mod dist;
pub mod error;
pub mod link;
pub mod market;
pub mod mechanism;
pub mod property_lab;
pub mod seed;
pub mod simulator;
pub mod synchronization;

pub use dist::{Dist, IntDist};
pub use error::{Error, Result};
pub use link::{downlink_rate, dt_compute_delay, dt_upload_delay, link_budget, uplink_rate, LinkBudget};
pub use market::{
    sample_scenario, validate_scenario, AvProfile, ChannelState, DtTask, GenScoreModel, MarKind,
    MarProfile, MatchModel, RsuProfile, Scenario, ScenarioConfig, Violation,
};
pub use mechanism::{
    run_epvisa, run_first_price_control, run_mechanism, run_mtepvisa, run_pvisa, social_surplus,
    AuctionOutcome, Bid, MechanismKind, PreparedMarket, ScoreBoard,
};
pub use simulator::{
    run_experiment, truthful_av_bids, CellResult, ExperimentPlan, ExperimentResult, MetricStat,
    Sweep, SweepVar,
};
pub use synchronization::SyncEvaluation;
