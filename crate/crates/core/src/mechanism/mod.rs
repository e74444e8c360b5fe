//! Two-sided synchronization-market mechanisms.
//!
//! The physical submarket allocates one AV's DT task bundle to the RSU via a
//! score-based second-score auction; the virtual submarket then allocates one
//! AR recommender to the synchronizing AV under a price scaling factor that
//! shields the less-informed functional recommender from adverse selection.
//!
//! Mechanisms:
//! - `mtepvisa`: multi-task enhanced auction with the efficient scoring rule
//!   (bid plus estimated virtual surplus) and scaled virtual pricing;
//! - `epvisa`: the single-task variant, run on each AV's task list collapsed
//!   to one aggregate task (summed sizes and cycles, minimum deadline);
//! - `pvisa`: highest-bid physical allocation with plain second-price rules
//!   in both submarkets;
//! - `first-price-control`: a deliberately manipulable pay-your-bid variant
//!   used as a control by the property lab.

mod clearing;
mod scoring;
mod tables;

pub use clearing::{
    allocate_physical, allocate_virtual, collapse_scenario, price_physical, price_virtual,
    run_epvisa, run_first_price_control, run_mechanism, run_mtepvisa, run_pvisa, social_surplus,
    PreparedMarket,
};
pub use scoring::{
    efficient_score, estimate_virtual_surplus, functional_expected_value,
    price_scaling_factor, price_scaling_from_expectations, sync_score, VirtualEstimates,
};
pub use tables::{MarketTables, PairEval};

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::Error;

/// The mechanisms the simulator can clear a market with.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MechanismKind {
    Mtepvisa,
    Epvisa,
    Pvisa,
    FirstPriceControl,
}

impl MechanismKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            MechanismKind::Mtepvisa => "mtepvisa",
            MechanismKind::Epvisa => "epvisa",
            MechanismKind::Pvisa => "pvisa",
            MechanismKind::FirstPriceControl => "first-price-control",
        }
    }

    /// Whether physical scores include the estimated virtual surplus.
    pub(crate) fn uses_efficient_score(&self) -> bool {
        matches!(self, MechanismKind::Mtepvisa | MechanismKind::Epvisa)
    }
}

impl fmt::Display for MechanismKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for MechanismKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "mtepvisa" => Ok(MechanismKind::Mtepvisa),
            "epvisa" => Ok(MechanismKind::Epvisa),
            "pvisa" => Ok(MechanismKind::Pvisa),
            "first-price-control" | "first_price_control" => Ok(MechanismKind::FirstPriceControl),
            other => Err(Error::config(format!(
                "unknown mechanism '{other}' (expected mtepvisa, epvisa, pvisa, or first-price-control)"
            ))),
        }
    }
}

/// A physical-submarket bid: an offered price plus the reported per-task
/// deadlines.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Bid {
    pub bidder: usize,
    pub price: f64,
    pub deadlines: Vec<f64>,
}

impl Bid {
    pub fn new(bidder: usize, price: f64, deadlines: Vec<f64>) -> Self {
        Bid { bidder, price, deadlines }
    }
}

/// Scores and comparison values computed while clearing a market.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreBoard {
    /// Physical score per AV; `None` for AVs filtered out as deadline-infeasible.
    pub physical_scores: Vec<Option<f64>>,
    /// The scaled competing bid each feasible MAR had to beat
    /// (alpha * max of the other feasible bids); `None` for filtered MARs.
    pub virtual_scaled_bids: Vec<Option<f64>>,
    /// Price scaling factor used in the virtual submarket.
    pub alpha: f64,
}

/// The cleared market: winners, payments, realized delays, and surpluses.
///
/// `surplus_ar_functional` / `surplus_ar_infotainment` are the winning
/// recommender's per-display-second value (zero for the side that did not
/// win); the total surplus weights them by the realized display duration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuctionOutcome {
    pub mechanism: String,
    pub winner_av: Option<usize>,
    pub pay_av: f64,
    pub winner_mar: Option<usize>,
    pub pay_mar: f64,
    pub alpha: f64,
    /// Total synchronization delay per task of the winning allocation.
    pub per_task_delays: Vec<f64>,
    /// Sum of the per-task delays: the AR display duration.
    pub display_duration: f64,
    pub surplus_dt: f64,
    pub surplus_ar_functional: f64,
    pub surplus_ar_infotainment: f64,
    pub surplus_total: f64,
    /// Payments collected by the RSU (pay_av + pay_mar).
    pub revenue: f64,
}

impl AuctionOutcome {
    /// An outcome with no winners and zero surplus.
    pub(crate) fn empty(kind: MechanismKind) -> Self {
        AuctionOutcome {
            mechanism: kind.as_str().to_string(),
            winner_av: None,
            pay_av: 0.0,
            winner_mar: None,
            pay_mar: 0.0,
            alpha: 1.0,
            per_task_delays: Vec::new(),
            display_duration: 0.0,
            surplus_dt: 0.0,
            surplus_ar_functional: 0.0,
            surplus_ar_infotainment: 0.0,
            surplus_total: 0.0,
            revenue: 0.0,
        }
    }
}
