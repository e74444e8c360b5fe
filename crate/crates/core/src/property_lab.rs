//! Empirical verification of the mechanism-design claims: strategy-proofness
//! by brute-force deviation search, individual rationality over scenario
//! batches, and adverse-selection freedom via a paired winner's-curse
//! experiment.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::market::{ExoMatchParams, MatchModel, Scenario, ScenarioConfig};
use crate::mechanism::{AuctionOutcome, MechanismKind, PreparedMarket};
use crate::seed::{self, domain};

/// Deviating entity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Entity {
    Av(usize),
    Mar(usize),
}

impl Entity {
    /// Entities the strategy-proofness claim covers: AVs and infotainment
    /// recommenders. The functional recommender pays its own bid, so its
    /// deviation gains are measured and reported rather than gated.
    pub fn claim_covered(&self) -> bool {
        !matches!(self, Entity::Mar(0))
    }
}

/// Outcome of one entity's deviation sweep in one scenario.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeviationReport {
    pub scenario_seed: u64,
    pub entity: Entity,
    pub truthful_bid: f64,
    pub truthful_utility: f64,
    pub best_bid: f64,
    pub best_utility: f64,
    /// best_utility - truthful_utility.
    pub gain: f64,
}

impl DeviationReport {
    pub fn flagged(&self, tolerance: f64) -> bool {
        self.gain > tolerance
    }
}

fn av_utility(scenario: &Scenario, outcome: &AuctionOutcome, av: usize) -> f64 {
    if outcome.winner_av == Some(av) {
        scenario.avs[av].value - outcome.pay_av
    } else {
        0.0
    }
}

fn mar_utility(prepared: &PreparedMarket<'_>, outcome: &AuctionOutcome, mar: usize) -> f64 {
    match (outcome.winner_av, outcome.winner_mar) {
        (Some(av), Some(k)) if k == mar => {
            outcome.display_duration * prepared.value_rate(av, k) - outcome.pay_mar
        }
        _ => 0.0,
    }
}

/// Evenly spaced sweep over [0, hi] with `n` points (n >= 2).
fn grid(hi: f64, n: usize) -> impl Iterator<Item = f64> {
    let n = n.max(2);
    (0..n).map(move |i| hi * i as f64 / (n - 1) as f64)
}

/// Sweep one AV's offered price over a grid, holding everyone else truthful.
fn sweep_av(
    prepared: &PreparedMarket<'_>,
    truthful_prices: &[f64],
    av: usize,
    grid_size: usize,
) -> DeviationReport {
    let scenario = prepared.scenario;
    let truthful_bid = truthful_prices[av];
    let (base, _) = prepared.clear(truthful_prices, None, None);
    let truthful_utility = av_utility(scenario, &base, av);

    let mut prices = truthful_prices.to_vec();
    let mut best = (truthful_bid, truthful_utility);
    let mut probe = |bid: f64, best: &mut (f64, f64)| {
        prices[av] = bid;
        let (out, _) = prepared.clear(&prices, None, None);
        let u = av_utility(scenario, &out, av);
        if u > best.1 {
            *best = (bid, u);
        }
    };
    let hi = 2.0 * truthful_bid;
    for bid in grid(hi, grid_size) {
        probe(bid, &mut best);
    }
    // Local refinement around the grid maximum: a finer sweep one step wide,
    // so near-miss deviations between grid points are not overlooked.
    let step = hi / (grid_size.max(2) - 1) as f64;
    let lo = (best.0 - step).max(0.0);
    let hi_ref = (best.0 + step).min(hi.max(step));
    for i in 0..=10 {
        probe(lo + (hi_ref - lo) * i as f64 / 10.0, &mut best);
    }

    DeviationReport {
        scenario_seed: scenario.seed,
        entity: Entity::Av(av),
        truthful_bid,
        truthful_utility,
        best_bid: best.0,
        best_utility: best.1,
        gain: best.1 - truthful_utility,
    }
}

/// Sweep one recommender's bid over a grid, holding everyone else truthful.
fn sweep_mar(
    prepared: &PreparedMarket<'_>,
    truthful_prices: &[f64],
    mar: usize,
    grid_size: usize,
) -> DeviationReport {
    let scenario = prepared.scenario;
    let (base, _) = prepared.clear(truthful_prices, None, None);
    let truthful_utility = mar_utility(prepared, &base, mar);
    let truthful_bid = match base.winner_av {
        Some(av) => prepared.truthful_mar_bids(av)[mar],
        None => 0.0,
    };

    let mut best = (truthful_bid, truthful_utility);
    let probe = |bid: f64, best: &mut (f64, f64)| {
        let (out, _) = prepared.clear(truthful_prices, Some((mar, bid)), None);
        let u = mar_utility(prepared, &out, mar);
        if u > best.1 {
            *best = (bid, u);
        }
    };
    let hi = 2.0 * truthful_bid;
    if hi > 0.0 {
        for bid in grid(hi, grid_size) {
            probe(bid, &mut best);
        }
        let step = hi / (grid_size.max(2) - 1) as f64;
        let lo = (best.0 - step).max(0.0);
        let hi_ref = best.0 + step;
        for i in 0..=10 {
            probe(lo + (hi_ref - lo) * i as f64 / 10.0, &mut best);
        }
    }

    DeviationReport {
        scenario_seed: scenario.seed,
        entity: Entity::Mar(mar),
        truthful_bid,
        truthful_utility,
        best_bid: best.0,
        best_utility: best.1,
        gain: best.1 - truthful_utility,
    }
}

/// For every AV and every recommender in every scenario of the batch: hold
/// all others truthful, sweep the deviator's bid over `grid_size` points
/// spanning [0, 2x truthful bid] (plus a local refinement pass around each
/// grid maximum), and record the best quasilinear utility gain found.
pub fn check_strategy_proofness(
    kind: MechanismKind,
    config: &ScenarioConfig,
    n_scenarios: u64,
    master_seed: u64,
    grid_size: usize,
) -> Result<Vec<DeviationReport>> {
    let reports: Vec<Result<Vec<DeviationReport>>> = (0..n_scenarios)
        .into_par_iter()
        .map(|idx| {
            let scenario_seed = seed::sub_seed(master_seed, domain::LAB, 0, idx);
            let scenario = crate::market::sample_scenario(config, scenario_seed)?;
            let prepared = PreparedMarket::new(kind, &scenario, None)?;
            let truthful_prices = prepared.truthful_prices();
            let mut out = Vec::with_capacity(scenario.avs.len() + scenario.mars.len());
            for av in 0..scenario.avs.len() {
                out.push(sweep_av(&prepared, &truthful_prices, av, grid_size));
            }
            for mar in 0..scenario.mars.len() {
                out.push(sweep_mar(&prepared, &truthful_prices, mar, grid_size));
            }
            Ok(out)
        })
        .collect();

    let mut all = Vec::new();
    for r in reports {
        all.extend(r?);
    }
    Ok(all)
}

/// Count scenarios with at least one flagged claim-covered deviation.
pub fn flagged_scenarios(reports: &[DeviationReport], tolerance: f64) -> u64 {
    let mut seeds: Vec<u64> = reports
        .iter()
        .filter(|r| r.entity.claim_covered() && r.flagged(tolerance))
        .map(|r| r.scenario_seed)
        .collect();
    seeds.sort_unstable();
    seeds.dedup();
    seeds.len() as u64
}

// ---------------------------------------------------------------------------
// Individual rationality
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IrViolation {
    pub scenario_seed: u64,
    pub side: String,
    pub entity: usize,
    pub payment: f64,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IrSummary {
    pub checked: u64,
    pub violations: u64,
    /// First few violations, for diagnostics.
    pub examples: Vec<IrViolation>,
}

const IR_REL_TOL: f64 = 1e-9;

/// Payment-exceeds-value violations in one cleared outcome. The winning AV
/// must not pay more than its value; the winning recommender must not pay
/// more than its realized display-weighted value.
pub fn ir_violations(
    prepared: &PreparedMarket<'_>,
    outcome: &AuctionOutcome,
) -> Vec<IrViolation> {
    let scenario = prepared.scenario;
    let mut out = Vec::new();
    if let Some(av) = outcome.winner_av {
        let value = scenario.avs[av].value;
        if outcome.pay_av > value * (1.0 + IR_REL_TOL) + IR_REL_TOL {
            out.push(IrViolation {
                scenario_seed: scenario.seed,
                side: "av".to_string(),
                entity: av,
                payment: outcome.pay_av,
                value,
            });
        }
        if outcome.pay_av < 0.0 {
            out.push(IrViolation {
                scenario_seed: scenario.seed,
                side: "av".to_string(),
                entity: av,
                payment: outcome.pay_av,
                value: 0.0,
            });
        }
        if let Some(k) = outcome.winner_mar {
            let realized = outcome.display_duration * prepared.value_rate(av, k);
            if outcome.pay_mar > realized * (1.0 + IR_REL_TOL) + IR_REL_TOL || outcome.pay_mar < 0.0
            {
                out.push(IrViolation {
                    scenario_seed: scenario.seed,
                    side: "mar".to_string(),
                    entity: k,
                    payment: outcome.pay_mar,
                    value: realized,
                });
            }
        }
    }
    out
}

/// Run the mechanism truthfully over a scenario batch and count
/// payment-exceeds-value violations.
pub fn check_individual_rationality(
    kind: MechanismKind,
    config: &ScenarioConfig,
    n_scenarios: u64,
    master_seed: u64,
) -> Result<IrSummary> {
    let per: Vec<Result<Vec<IrViolation>>> = (0..n_scenarios)
        .into_par_iter()
        .map(|idx| {
            let scenario_seed = seed::sub_seed(master_seed, domain::LAB, 1, idx);
            let scenario = crate::market::sample_scenario(config, scenario_seed)?;
            let prepared = PreparedMarket::new(kind, &scenario, None)?;
            let (outcome, _) = prepared.clear(&prepared.truthful_prices(), None, None);
            Ok(ir_violations(&prepared, &outcome))
        })
        .collect();

    let mut violations = 0;
    let mut examples = Vec::new();
    for r in per {
        for v in r? {
            violations += 1;
            if examples.len() < 10 {
                examples.push(v);
            }
        }
    }
    Ok(IrSummary { checked: n_scenarios, violations, examples })
}

// ---------------------------------------------------------------------------
// Adverse selection
// ---------------------------------------------------------------------------

/// Winner's-curse stress parameters: a strong common log-normal factor ties
/// every recommender's realized match quality together, infotainment match
/// qualities are heavy-tailed and observable, and the functional
/// recommender's mean value is high enough that the estimated price scaling
/// factor genuinely engages (alpha > 1).
pub fn winners_curse_params() -> ExoMatchParams {
    ExoMatchParams {
        common_sigma: 0.5,
        functional_scale: 80.0,
        functional_sigma: 0.1,
        infotainment_scale: 1.0,
        infotainment_sigma: 1.4,
    }
}

/// The base configuration with the exogenous heavy-tailed match-quality model
/// switched on.
pub fn winners_curse_config(base: &ScenarioConfig) -> ScenarioConfig {
    let mut cfg = base.clone();
    cfg.match_model = MatchModel::Exogenous(winners_curse_params());
    cfg.estimator_samples = cfg.estimator_samples.max(128);
    cfg
}

/// Conditional-surplus statistics for one pricing arm.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArmStats {
    pub runs: u64,
    pub functional_wins: u64,
    pub win_rate: f64,
    /// Mean realized surplus of the functional recommender per win.
    pub mean_conditional_surplus: f64,
    /// Standard error of that mean.
    pub se_conditional_surplus: f64,
    /// Deficit = -mean conditional surplus (positive = systematic loss).
    pub deficit: f64,
}

fn arm_stats(runs: u64, surpluses: &[f64]) -> ArmStats {
    let wins = surpluses.len() as u64;
    let mean = if wins > 0 { surpluses.iter().sum::<f64>() / wins as f64 } else { 0.0 };
    let se = if wins > 1 {
        let var = surpluses.iter().map(|s| (s - mean) * (s - mean)).sum::<f64>()
            / (wins - 1) as f64;
        (var / wins as f64).sqrt()
    } else {
        0.0
    };
    ArmStats {
        runs,
        functional_wins: wins,
        win_rate: wins as f64 / runs as f64,
        mean_conditional_surplus: mean,
        se_conditional_surplus: se,
        deficit: -mean,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdverseSelectionSummary {
    /// Scaled pricing: alpha from the estimator.
    pub scaled: ArmStats,
    /// Forced alpha = 1 (plain second price).
    pub unit: ArmStats,
    /// Rate at which the functional recommender's expected value strictly
    /// exceeds every rostered infotainment value (the efficient win rate).
    pub efficient_win_rate: f64,
    /// |scaled win rate - efficient win rate| in units of its standard error.
    pub win_rate_gap_se: f64,
    /// Criterion: no significant conditional-surplus deficit under scaled
    /// pricing, and a strictly positive deficit under forced alpha = 1.
    pub adverse_selection_free: bool,
}

/// Paired comparison of the functional recommender's realized per-win surplus
/// under estimator-scaled pricing vs forced alpha = 1, over a heavy-tailed
/// match-quality batch sharing scenarios between arms.
pub fn check_adverse_selection(
    config: &ScenarioConfig,
    n_scenarios: u64,
    master_seed: u64,
) -> Result<AdverseSelectionSummary> {
    let per: Vec<Result<(Option<f64>, Option<f64>, bool)>> = (0..n_scenarios)
        .into_par_iter()
        .map(|idx| {
            let scenario_seed = seed::sub_seed(master_seed, domain::LAB, 2, idx);
            let scenario = crate::market::sample_scenario(config, scenario_seed)?;
            let prepared = PreparedMarket::new(MechanismKind::Mtepvisa, &scenario, None)?;
            let prices = prepared.truthful_prices();

            let (scaled_out, _) = prepared.clear(&prices, None, None);
            let (unit_out, _) = prepared.clear(&prices, None, Some(1.0));

            let surplus = |out: &AuctionOutcome| match (out.winner_av, out.winner_mar) {
                (Some(av), Some(0)) => {
                    Some(out.display_duration * prepared.value_rate(av, 0) - out.pay_mar)
                }
                _ => None,
            };

            // Efficient-win indicator: the functional recommender's expected
            // value rate beats every rostered infotainment value rate.
            let efficient = match scaled_out.winner_av {
                Some(av) => {
                    let bids = prepared.truthful_mar_bids(av);
                    let best_info = (1..scenario.mars.len())
                        .filter(|&k| prepared.tables.pairs[av][k].feasible)
                        .map(|k| prepared.value_rate(av, k))
                        .fold(0.0f64, f64::max);
                    bids[0] > best_info
                }
                None => false,
            };

            Ok((surplus(&scaled_out), surplus(&unit_out), efficient))
        })
        .collect();

    let mut scaled_surpluses = Vec::new();
    let mut unit_surpluses = Vec::new();
    let mut efficient_wins = 0u64;
    for r in per {
        let (s, u, e) = r?;
        if let Some(s) = s {
            scaled_surpluses.push(s);
        }
        if let Some(u) = u {
            unit_surpluses.push(u);
        }
        if e {
            efficient_wins += 1;
        }
    }

    let scaled = arm_stats(n_scenarios, &scaled_surpluses);
    let unit = arm_stats(n_scenarios, &unit_surpluses);
    let efficient_win_rate = efficient_wins as f64 / n_scenarios as f64;

    let p = scaled.win_rate;
    let q = efficient_win_rate;
    let se_rates =
        ((p * (1.0 - p) + q * (1.0 - q)) / n_scenarios as f64).sqrt().max(f64::MIN_POSITIVE);
    let win_rate_gap_se = (p - q).abs() / se_rates;

    let adverse_selection_free =
        scaled.deficit <= 2.0 * scaled.se_conditional_surplus && unit.deficit > 0.0;

    Ok(AdverseSelectionSummary {
        scaled,
        unit,
        efficient_win_rate,
        win_rate_gap_se,
        adverse_selection_free,
    })
}
