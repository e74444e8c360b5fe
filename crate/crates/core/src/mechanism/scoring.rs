//! Scoring rules and the Monte Carlo estimators behind them.

use rand::Rng;

use crate::error::{Error, Result};
use crate::market::{MarKind, Scenario};
use crate::mechanism::tables::{eval_pair, MarketTables};
use crate::mechanism::Bid;
use crate::seed::{self, domain};

/// Guard against a vanishing denominator in the price-scaling ratio.
const VALUE_FLOOR: f64 = 1e-12;

/// Synchronization scoring rule: offered price minus a deadline penalty
/// phi(d), where phi must be non-decreasing with phi(0) = 0. The penalty is
/// validated by probing it on a grid along the scaled-deadline ray.
pub fn sync_score<F>(bid: &Bid, phi: F) -> Result<f64>
where
    F: Fn(&[f64]) -> f64,
{
    let zeros = vec![0.0; bid.deadlines.len()];
    let at_zero = phi(&zeros);
    if at_zero.abs() > 1e-9 {
        return Err(Error::config(format!(
            "deadline penalty must satisfy phi(0) = 0, got {at_zero}"
        )));
    }
    let mut prev = at_zero;
    for step in 1..=8 {
        let t = step as f64 / 8.0;
        let scaled: Vec<f64> = bid.deadlines.iter().map(|d| d * t).collect();
        let v = phi(&scaled);
        if v < prev - 1e-9 {
            return Err(Error::config(
                "deadline penalty must be non-decreasing along the deadline ray".to_string(),
            ));
        }
        prev = v;
    }
    Ok(bid.price - phi(&bid.deadlines))
}

/// Efficient scoring rule: the offered price plus the estimated
/// display-weighted virtual-submarket surplus conditional on this bidder
/// winning.
pub fn efficient_score(price: f64, virtual_surplus_estimate: f64) -> f64 {
    debug_assert!(virtual_surplus_estimate >= 0.0);
    price + virtual_surplus_estimate
}

/// Everything the virtual-side Monte Carlo estimator produces for one
/// candidate synchronizing AV.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VirtualEstimates {
    /// Expected value rate of the functional recommender, E[U_0].
    pub e_u0: f64,
    /// Expected second-highest value rate across the roster, E[U_(2)].
    pub e_u2: f64,
    /// Price scaling factor max(1, gamma * E[U_0] / E[U_(2)]).
    pub alpha: f64,
    /// Display-window-weighted expected winning-recommender surplus
    /// d* x E[gamma * S_F + S_I]; the virtual term of the efficient score.
    pub virtual_surplus: f64,
}

/// Run the resampling estimator for candidate AV `av`: redraw the
/// match-quality inputs from their sampling distributions, clear the virtual
/// submarket per draw under truthful bids, and average.
///
/// Deterministic given `(scenario.seed, av, n_samples)`.
pub fn estimate_virtual(
    scenario: &Scenario,
    tables: &MarketTables,
    av: usize,
    n_samples: usize,
) -> VirtualEstimates {
    let n_mar = scenario.mars.len();
    let gamma = scenario.gamma;
    let mut rng = seed::rng(seed::sub_seed(scenario.seed, domain::ESTIMATOR, av as u64, 0));

    // Pass 1: draw value-rate vectors (and pair feasibility where the draw
    // affects delays).
    let mut samples: Vec<Vec<(f64, bool)>> = Vec::with_capacity(n_samples);
    let mut sum_u0 = 0.0;
    let mut sum_u2 = 0.0;
    for _ in 0..n_samples {
        let mut row = Vec::with_capacity(n_mar);
        match &scenario.exo_match {
            None => {
                for k in 0..n_mar {
                    let hits = draw_hits(scenario, av, &mut rng);
                    let g = scenario.resample.gen_score.sample(&mut rng);
                    let eval = eval_pair(
                        scenario,
                        av,
                        k,
                        tables.downlink[av],
                        &tables.t_dt[av],
                        &tables.l_dt[av],
                        &tables.deadlines[av],
                        hits,
                        g,
                        None,
                    );
                    row.push((scenario.avs[av].value * eval.mean_match, eval.feasible));
                }
            }
            Some(exo) => {
                // Exogenous model: match quality decouples from delays, so
                // feasibility comes from the static tables.
                let p = &exo.params;
                let common =
                    crate::dist::Dist::LogNormal { mu: 0.0, sigma: p.common_sigma }.sample(&mut rng);
                for k in 0..n_mar {
                    let (scale, sigma) = if k == 0 {
                        (p.functional_scale, p.functional_sigma)
                    } else {
                        (p.infotainment_scale, p.infotainment_sigma)
                    };
                    let z = crate::dist::Dist::LogNormal { mu: 0.0, sigma }.sample(&mut rng);
                    let m = scale * common * z;
                    row.push((scenario.avs[av].value * m, tables.pairs[av][k].feasible));
                }
            }
        }
        sum_u0 += row[0].0;
        sum_u2 += second_highest(row.iter().map(|(u, _)| *u));
        samples.push(row);
    }

    let e_u0 = sum_u0 / n_samples as f64;
    let e_u2 = sum_u2 / n_samples as f64;
    let alpha = alpha_from_expectations(gamma, e_u0, e_u2);

    // Pass 2: clear the virtual submarket per draw. The functional
    // recommender cannot observe its realized match quality, so it bids its
    // expectation; infotainment recommenders bid their realized value rates.
    let mut sum_surplus = 0.0;
    for row in &samples {
        let roster: Vec<usize> = (0..n_mar).filter(|&k| row[k].1).collect();
        let mut bids = vec![0.0; n_mar];
        for &k in &roster {
            bids[k] = if k == 0 { e_u0 } else { row[k].0 };
        }
        if let Some(winner) = virtual_winner(&roster, &bids, alpha) {
            sum_surplus += if winner == 0 { gamma * row[0].0 } else { row[winner].0 };
        }
    }
    let mean_surplus = sum_surplus / n_samples as f64;

    VirtualEstimates { e_u0, e_u2, alpha, virtual_surplus: tables.d_star[av] * mean_surplus }
}

fn draw_hits<R: Rng + ?Sized>(scenario: &Scenario, av: usize, rng: &mut R) -> u64 {
    scenario.resample.hits.sample(rng).min(scenario.avs[av].cache_size)
}

/// max(1, gamma * E[U_0] / E[U_(2)]), guarding a vanishing denominator.
pub fn price_scaling_from_expectations(gamma: f64, e_u0: f64, e_u2: f64) -> f64 {
    (gamma * e_u0 / e_u2.max(VALUE_FLOOR)).max(1.0)
}

pub(crate) use price_scaling_from_expectations as alpha_from_expectations;

fn second_highest(values: impl Iterator<Item = f64>) -> f64 {
    let mut top = f64::NEG_INFINITY;
    let mut second = f64::NEG_INFINITY;
    for v in values {
        if v > top {
            second = top;
            top = v;
        } else if v > second {
            second = v;
        }
    }
    if second.is_finite() {
        second
    } else {
        0.0
    }
}

/// The winner of a virtual roster under the scaled comparison rule: the
/// lowest-indexed infotainment bidder whose bid strictly exceeds alpha times
/// every other rostered bid, else the functional recommender if rostered.
pub(crate) fn virtual_winner(roster: &[usize], bids: &[f64], alpha: f64) -> Option<usize> {
    for &k in roster {
        if k == 0 {
            continue;
        }
        let max_other = roster
            .iter()
            .filter(|&&j| j != k)
            .map(|&j| bids[j])
            .fold(0.0f64, f64::max);
        if bids[k] > alpha * max_other {
            return Some(k);
        }
    }
    roster.contains(&0).then_some(0)
}

/// Monte Carlo estimate of the display-weighted virtual surplus conditional
/// on `av` winning the physical submarket.
pub fn estimate_virtual_surplus(scenario: &Scenario, av: usize, n_samples: usize) -> Result<f64> {
    let tables = MarketTables::build(scenario, None)?;
    Ok(estimate_virtual(scenario, &tables, av, n_samples).virtual_surplus)
}

/// Price scaling factor alpha for the given synchronizing AV:
/// max(1, gamma * E[U_0] / E[U_(2)]), with both expectations estimated by the
/// resampling estimator. Requires at least one infotainment recommender.
pub fn price_scaling_factor(scenario: &Scenario, av: usize, n_samples: usize) -> Result<f64> {
    if scenario.mars.iter().filter(|m| m.kind == MarKind::Infotainment).count() == 0 {
        return Err(Error::DegenerateMarket(
            "price scaling requires at least one infotainment recommender".to_string(),
        ));
    }
    if scenario.mars.len() < 2 {
        return Err(Error::DegenerateMarket(
            "price scaling requires a functional and at least one infotainment recommender"
                .to_string(),
        ));
    }
    let tables = MarketTables::build(scenario, None)?;
    Ok(estimate_virtual(scenario, &tables, av, n_samples).alpha)
}

/// The functional recommender's truthful bid basis: its expected value rate
/// for the synchronizing AV (it cannot measure its realized match quality).
pub fn functional_expected_value(scenario: &Scenario, av: usize, n_samples: usize) -> Result<f64> {
    let tables = MarketTables::build(scenario, None)?;
    Ok(estimate_virtual(scenario, &tables, av, n_samples).e_u0)
}
