//! Market clearing: allocation, pricing, and surplus accounting.

use crate::error::{Error, Result};
use crate::market::{DtTask, Scenario};
use crate::mechanism::scoring::{estimate_virtual, virtual_winner, VirtualEstimates};
use crate::mechanism::tables::MarketTables;
use crate::mechanism::{AuctionOutcome, Bid, MechanismKind, ScoreBoard};

/// Winner of the physical submarket: the highest-scoring candidate, lowest
/// index on ties. `None` entries are deadline-infeasible candidates.
pub fn allocate_physical(scores: &[Option<f64>]) -> Option<usize> {
    let mut winner: Option<(usize, f64)> = None;
    for (i, s) in scores.iter().enumerate() {
        if let Some(s) = s {
            match winner {
                Some((_, best)) if *s <= best => {}
                _ => winner = Some((i, *s)),
            }
        }
    }
    winner.map(|(i, _)| i)
}

/// Second-score payment for the physical winner: the lowest price the winner
/// could have offered and still matched the runner-up's score, clamped at the
/// zero reserve. `value_term` is the non-price component of the winner's
/// score (zero for plain highest-bid mechanisms, where this reduces to the
/// classic second-highest bid).
pub fn price_physical(scores: &[Option<f64>], winner: usize, value_term: f64) -> f64 {
    let runner_up = scores
        .iter()
        .enumerate()
        .filter(|(i, s)| *i != winner && s.is_some())
        .map(|(_, s)| s.unwrap())
        .fold(f64::NEG_INFINITY, f64::max);
    if runner_up.is_finite() {
        (runner_up - value_term).max(0.0)
    } else {
        0.0
    }
}

/// Winner of the virtual submarket under the scaled comparison rule.
pub fn allocate_virtual(roster: &[usize], bids: &[f64], alpha: f64) -> Option<usize> {
    virtual_winner(roster, bids, alpha)
}

/// Payment of the winning recommender under the cost-per-time model: the
/// functional recommender pays its own per-second bid, an infotainment winner
/// pays the scaled best competing bid, both over the display duration.
pub fn price_virtual(
    roster: &[usize],
    bids: &[f64],
    alpha: f64,
    winner: usize,
    display_duration: f64,
) -> f64 {
    let rate = if winner == 0 {
        bids[0]
    } else {
        let max_other = roster
            .iter()
            .filter(|&&j| j != winner)
            .map(|&j| bids[j])
            .fold(0.0f64, f64::max);
        alpha * max_other
    };
    display_duration * rate
}

/// A scenario prepared for repeated clearing: delay tables and per-candidate
/// virtual estimates are computed once, so re-clearing under different prices
/// (deviation sweeps) is pure arithmetic.
pub struct PreparedMarket<'a> {
    pub kind: MechanismKind,
    pub scenario: &'a Scenario,
    pub tables: MarketTables,
    /// Virtual-side estimates per AV; present for deadline-feasible candidates.
    pub estimates: Vec<Option<VirtualEstimates>>,
}

impl<'a> PreparedMarket<'a> {
    pub fn new(
        kind: MechanismKind,
        scenario: &'a Scenario,
        reported_deadlines: Option<&[Vec<f64>]>,
    ) -> Result<Self> {
        let tables = MarketTables::build(scenario, reported_deadlines)?;
        let estimates = (0..scenario.avs.len())
            .map(|i| {
                tables.dt_feasible[i].then(|| {
                    estimate_virtual(scenario, &tables, i, scenario.estimator_samples)
                })
            })
            .collect();
        Ok(PreparedMarket { kind, scenario, tables, estimates })
    }

    /// Truthful physical prices: each AV offers its private value.
    pub fn truthful_prices(&self) -> Vec<f64> {
        self.scenario.avs.iter().map(|a| a.value).collect()
    }

    /// Truthful recommender bids for the given synchronizing AV: the
    /// functional recommender bids its expected value rate, infotainment
    /// recommenders their realized value rates.
    pub fn truthful_mar_bids(&self, winner: usize) -> Vec<f64> {
        let e_u0 = match &self.estimates[winner] {
            Some(e) => e.e_u0,
            None => {
                estimate_virtual(self.scenario, &self.tables, winner, self.scenario.estimator_samples)
                    .e_u0
            }
        };
        (0..self.scenario.mars.len())
            .map(|k| if k == 0 { e_u0 } else { self.tables.value_rate[winner][k] })
            .collect()
    }

    /// Realized value rate of recommender `mar` when paired with AV `av`.
    pub fn value_rate(&self, av: usize, mar: usize) -> f64 {
        self.tables.value_rate[av][mar]
    }

    /// Display duration of the fully allocated pair (AV, MAR).
    pub fn display(&self, av: usize, mar: usize) -> f64 {
        self.tables.pairs[av][mar].display
    }

    /// Clear the market for the given physical prices. Recommender bids are
    /// formed truthfully for the realized winner unless overridden; the
    /// price scaling factor can be pinned for paired comparisons.
    pub fn clear(
        &self,
        prices: &[f64],
        mar_bid_override: Option<(usize, f64)>,
        alpha_override: Option<f64>,
    ) -> (AuctionOutcome, ScoreBoard) {
        let n_av = self.scenario.avs.len();
        let n_mar = self.scenario.mars.len();
        assert_eq!(prices.len(), n_av);

        let scores: Vec<Option<f64>> = (0..n_av)
            .map(|i| {
                if !self.tables.dt_feasible[i] {
                    return None;
                }
                let value_term = if self.kind.uses_efficient_score() {
                    self.estimates[i].as_ref().map_or(0.0, |e| e.virtual_surplus)
                } else {
                    0.0
                };
                Some(prices[i] + value_term)
            })
            .collect();

        let Some(winner_av) = allocate_physical(&scores) else {
            let board = ScoreBoard {
                physical_scores: scores,
                virtual_scaled_bids: vec![None; n_mar],
                alpha: 1.0,
            };
            return (AuctionOutcome::empty(self.kind), board);
        };

        let pay_av = match self.kind {
            MechanismKind::FirstPriceControl => prices[winner_av],
            _ => {
                let value_term = if self.kind.uses_efficient_score() {
                    self.estimates[winner_av].as_ref().map_or(0.0, |e| e.virtual_surplus)
                } else {
                    0.0
                };
                price_physical(&scores, winner_av, value_term)
            }
        };

        let alpha = alpha_override.unwrap_or_else(|| {
            if self.kind.uses_efficient_score() {
                self.estimates[winner_av].as_ref().map_or(1.0, |e| e.alpha)
            } else {
                1.0
            }
        });

        let mut mar_bids = self.truthful_mar_bids(winner_av);
        if let Some((k, b)) = mar_bid_override {
            mar_bids[k] = b;
        }
        let roster: Vec<usize> =
            (0..n_mar).filter(|&k| self.tables.pairs[winner_av][k].feasible).collect();

        let winner_mar = match self.kind {
            MechanismKind::FirstPriceControl => {
                // Pay-your-bid control: the highest rostered bid wins outright.
                let mut best: Option<(usize, f64)> = None;
                for &k in &roster {
                    match best {
                        Some((_, b)) if mar_bids[k] <= b => {}
                        _ => best = Some((k, mar_bids[k])),
                    }
                }
                best.map(|(k, _)| k)
            }
            _ => allocate_virtual(&roster, &mar_bids, alpha),
        };

        let per_task_delays = self.tables.winning_delays(self.scenario, winner_av, winner_mar);
        let display_duration: f64 = per_task_delays.iter().sum();

        let pay_mar = match winner_mar {
            None => 0.0,
            Some(k) => match self.kind {
                MechanismKind::FirstPriceControl => display_duration * mar_bids[k],
                _ => price_virtual(&roster, &mar_bids, alpha, k, display_duration),
            },
        };

        let surplus_dt = self.scenario.avs[winner_av].value;
        let (surplus_f, surplus_i) = match winner_mar {
            Some(0) => (self.tables.value_rate[winner_av][0], 0.0),
            Some(k) => (0.0, self.tables.value_rate[winner_av][k]),
            None => (0.0, 0.0),
        };
        let surplus_total =
            surplus_dt + display_duration * (self.scenario.gamma * surplus_f + surplus_i);

        let virtual_scaled_bids = (0..n_mar)
            .map(|k| {
                roster.contains(&k).then(|| {
                    let max_other = roster
                        .iter()
                        .filter(|&&j| j != k)
                        .map(|&j| mar_bids[j])
                        .fold(0.0f64, f64::max);
                    alpha * max_other
                })
            })
            .collect();

        let outcome = AuctionOutcome {
            mechanism: self.kind.as_str().to_string(),
            winner_av: Some(winner_av),
            pay_av,
            winner_mar,
            pay_mar,
            alpha,
            per_task_delays,
            display_duration,
            surplus_dt,
            surplus_ar_functional: surplus_f,
            surplus_ar_infotainment: surplus_i,
            surplus_total,
            revenue: pay_av + pay_mar,
        };
        let board = ScoreBoard { physical_scores: scores, virtual_scaled_bids, alpha };
        (outcome, board)
    }
}

fn validate_bids(scenario: &Scenario, bids: &[Bid]) -> Result<()> {
    if bids.len() != scenario.avs.len() {
        return Err(Error::config(format!(
            "expected {} bids, got {}",
            scenario.avs.len(),
            bids.len()
        )));
    }
    for (i, bid) in bids.iter().enumerate() {
        if bid.bidder != i {
            return Err(Error::config(format!("bid {i} names bidder {}", bid.bidder)));
        }
        if !(bid.price >= 0.0) || !bid.price.is_finite() {
            return Err(Error::config(format!("bid {i} has invalid price {}", bid.price)));
        }
        if bid.deadlines.len() != scenario.avs[i].tasks.len() {
            return Err(Error::config(format!(
                "bid {i} reports {} deadlines for {} tasks",
                bid.deadlines.len(),
                scenario.avs[i].tasks.len()
            )));
        }
        if bid.deadlines.iter().any(|d| !(*d > 0.0)) {
            return Err(Error::config(format!("bid {i} has a non-positive deadline")));
        }
    }
    Ok(())
}

/// Collapse each AV's task list to one aggregate task: summed sizes, summed
/// total cycles (so the cycle density is the size-weighted mean), and the
/// minimum deadline.
pub fn collapse_scenario(scenario: &Scenario) -> Scenario {
    let mut out = scenario.clone();
    for av in &mut out.avs {
        let total_size: f64 = av.tasks.iter().map(|t| t.size_bits).sum();
        let total_cycles: f64 = av.tasks.iter().map(|t| t.size_bits * t.cycles_per_bit).sum();
        let min_deadline =
            av.tasks.iter().map(|t| t.deadline_s).fold(f64::INFINITY, f64::min);
        av.tasks = vec![DtTask {
            size_bits: total_size,
            cycles_per_bit: if total_size > 0.0 { total_cycles / total_size } else { 0.0 },
            deadline_s: min_deadline,
        }];
    }
    out
}

fn collapse_bids(bids: &[Bid]) -> Vec<Bid> {
    bids.iter()
        .map(|b| {
            let min = b.deadlines.iter().copied().fold(f64::INFINITY, f64::min);
            Bid::new(b.bidder, b.price, vec![min])
        })
        .collect()
}

/// Run a mechanism end to end over submitted physical bids; recommender bids
/// are formed truthfully for the realized synchronizing AV.
pub fn run_mechanism(
    kind: MechanismKind,
    scenario: &Scenario,
    bids: &[Bid],
) -> Result<(AuctionOutcome, ScoreBoard)> {
    validate_bids(scenario, bids)?;
    match kind {
        MechanismKind::Epvisa => {
            let collapsed = collapse_scenario(scenario);
            let cbids = collapse_bids(bids);
            let deadlines: Vec<Vec<f64>> = cbids.iter().map(|b| b.deadlines.clone()).collect();
            let prepared = PreparedMarket::new(kind, &collapsed, Some(&deadlines))?;
            let prices: Vec<f64> = cbids.iter().map(|b| b.price).collect();
            Ok(prepared.clear(&prices, None, None))
        }
        _ => {
            let deadlines: Vec<Vec<f64>> = bids.iter().map(|b| b.deadlines.clone()).collect();
            let prepared = PreparedMarket::new(kind, scenario, Some(&deadlines))?;
            let prices: Vec<f64> = bids.iter().map(|b| b.price).collect();
            Ok(prepared.clear(&prices, None, None))
        }
    }
}

pub fn run_mtepvisa(scenario: &Scenario, bids: &[Bid]) -> Result<AuctionOutcome> {
    run_mechanism(MechanismKind::Mtepvisa, scenario, bids).map(|(o, _)| o)
}

pub fn run_epvisa(scenario: &Scenario, bids: &[Bid]) -> Result<AuctionOutcome> {
    run_mechanism(MechanismKind::Epvisa, scenario, bids).map(|(o, _)| o)
}

pub fn run_pvisa(scenario: &Scenario, bids: &[Bid]) -> Result<AuctionOutcome> {
    run_mechanism(MechanismKind::Pvisa, scenario, bids).map(|(o, _)| o)
}

pub fn run_first_price_control(scenario: &Scenario, bids: &[Bid]) -> Result<AuctionOutcome> {
    run_mechanism(MechanismKind::FirstPriceControl, scenario, bids).map(|(o, _)| o)
}

/// Realized market objective: the winning AV's value plus the
/// display-duration-weighted winning-recommender value, with the functional
/// side weighted by the bargaining power gamma.
pub fn social_surplus(outcome: &AuctionOutcome, scenario: &Scenario) -> f64 {
    outcome.surplus_dt
        + outcome.display_duration
            * (scenario.gamma * outcome.surplus_ar_functional + outcome.surplus_ar_infotainment)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::market::{sample_scenario, Counts, ScenarioConfig};
    use crate::simulator::truthful_av_bids;

    #[test]
    fn allocate_physical_examples() {
        let s = |v: &[f64]| v.iter().map(|&x| Some(x)).collect::<Vec<_>>();
        assert_eq!(allocate_physical(&s(&[0.9, 0.7, 0.3])), Some(0));
        assert_eq!(allocate_physical(&s(&[0.4])), Some(0));
        // Ties break to the lowest index.
        assert_eq!(allocate_physical(&s(&[0.5, 0.5, 0.1])), Some(0));
        assert_eq!(allocate_physical(&[None, Some(0.2), Some(0.9)]), Some(2));
        assert_eq!(allocate_physical(&[None, None]), None);
        assert_eq!(allocate_physical(&[]), None);
    }

    #[test]
    fn price_physical_is_score_equalizing() {
        // Plain second price when scores are the bids.
        let scores = vec![Some(0.9), Some(0.7)];
        assert!((price_physical(&scores, 0, 0.0) - 0.7).abs() < 1e-15);
        // Single bidder pays the zero reserve.
        assert_eq!(price_physical(&[Some(0.9)], 0, 0.0), 0.0);
        // Scores (0.9, 0.7, 0.8) from bids (0.8, 0.5, 0.6): winner 0 pays the
        // price that equalizes its score with the runner-up's (0.8 - 0.1).
        let scores = vec![Some(0.9), Some(0.7), Some(0.8)];
        assert!((price_physical(&scores, 0, 0.1) - 0.7).abs() < 1e-12);
        // Value term larger than the runner-up score clamps to zero.
        assert_eq!(price_physical(&scores, 0, 1.0), 0.0);
    }

    #[test]
    fn price_virtual_cases() {
        let roster = vec![0, 1, 2];
        let bids = vec![0.5, 0.9, 0.3];
        // Infotainment winner pays alpha * best competing bid over the display.
        let p = price_virtual(&roster, &bids, 1.5, 1, 0.688);
        assert!((p - 0.688 * 1.5 * 0.5).abs() < 1e-12);
        assert!((p - 0.516).abs() < 1e-12);
        // Functional winner pays its own bid rate.
        let pf = price_virtual(&roster, &bids, 1.5, 0, 0.688);
        assert!((pf - 0.344).abs() < 1e-12);
        // Zero display duration means zero payment.
        assert_eq!(price_virtual(&roster, &bids, 1.5, 1, 0.0), 0.0);
    }

    #[test]
    fn social_surplus_hand_value() {
        let mut outcome = AuctionOutcome::empty(MechanismKind::Mtepvisa);
        assert_eq!(
            social_surplus(&outcome, &sample_scenario(&ScenarioConfig::default(), 1).unwrap()),
            0.0
        );
        outcome.surplus_dt = 0.8;
        outcome.display_duration = 0.688;
        outcome.surplus_ar_infotainment = 4.0;
        let s = sample_scenario(&ScenarioConfig::default(), 1).unwrap();
        assert!((social_surplus(&outcome, &s) - 3.552).abs() < 1e-12);
    }

    #[test]
    fn pvisa_is_second_price_on_bids() {
        let mut cfg = ScenarioConfig::default();
        cfg.counts = Counts { avs: 2, mars: 3, rsus: 1, tasks_per_av: 2 };
        // Generous deadlines so both AVs are feasible.
        cfg.task.deadline_s = crate::dist::Dist::uniform(5.0, 5.0);
        cfg.channel.gain = crate::dist::Dist::uniform(0.8, 0.8);
        cfg.av.tx_power_mw = crate::dist::Dist::uniform(0.9, 0.9);
        cfg.channel.noise_mw = crate::dist::Dist::constant(0.5);
        let s = sample_scenario(&cfg, 21).unwrap();

        let mut bids = truthful_av_bids(&s);
        bids[0].price = 0.9;
        bids[1].price = 0.2;
        let out = run_pvisa(&s, &bids).unwrap();
        assert_eq!(out.winner_av, Some(0));
        assert!((out.pay_av - 0.2).abs() < 1e-12);

        // Single bidder pays the reserve.
        let mut cfg1 = cfg.clone();
        cfg1.counts.avs = 1;
        let s1 = sample_scenario(&cfg1, 22).unwrap();
        let bids1 = truthful_av_bids(&s1);
        let out1 = run_pvisa(&s1, &bids1).unwrap();
        assert_eq!(out1.winner_av, Some(0));
        assert_eq!(out1.pay_av, 0.0);
    }

    #[test]
    fn epvisa_equals_mtepvisa_for_single_task() {
        let mut cfg = ScenarioConfig::default();
        cfg.counts.tasks_per_av = 1;
        let s = sample_scenario(&cfg, 33).unwrap();
        let bids = truthful_av_bids(&s);
        let a = run_mtepvisa(&s, &bids).unwrap();
        let mut b = run_epvisa(&s, &bids).unwrap();
        b.mechanism = a.mechanism.clone();
        assert_eq!(a, b);
    }

    #[test]
    fn collapse_aggregates_sizes_cycles_and_min_deadline() {
        let s = sample_scenario(&ScenarioConfig::default(), 4).unwrap();
        let c = collapse_scenario(&s);
        for (orig, coll) in s.avs.iter().zip(&c.avs) {
            assert_eq!(coll.tasks.len(), 1);
            let total_size: f64 = orig.tasks.iter().map(|t| t.size_bits).sum();
            let total_cycles: f64 =
                orig.tasks.iter().map(|t| t.size_bits * t.cycles_per_bit).sum();
            let agg = &coll.tasks[0];
            assert!((agg.size_bits - total_size).abs() < 1e-9);
            assert!((agg.size_bits * agg.cycles_per_bit - total_cycles).abs() < 1e-6);
            let min_d = orig.tasks.iter().map(|t| t.deadline_s).fold(f64::INFINITY, f64::min);
            assert_eq!(agg.deadline_s, min_d);
            assert!(orig.tasks.iter().all(|t| min_d <= t.deadline_s));
        }
    }

    #[test]
    fn the_only_feasible_pair_wins() {
        // One AV can meet its deadlines and one recommender fits inside them;
        // the feasibility filter forces exactly that pairing.
        let mut cfg = ScenarioConfig::default();
        cfg.counts = Counts { avs: 3, mars: 3, rsus: 1, tasks_per_av: 2 };
        cfg.channel.gain = crate::dist::Dist::uniform(0.7, 0.7);
        cfg.av.tx_power_mw = crate::dist::Dist::uniform(0.8, 0.8);
        cfg.channel.noise_mw = crate::dist::Dist::constant(0.5);
        cfg.task.size_mb = crate::dist::Dist::uniform(0.2, 0.2);
        let mut s = sample_scenario(&cfg, 55).unwrap();
        // Only AV 1 gets workable deadlines.
        for (i, av) in s.avs.iter_mut().enumerate() {
            for t in &mut av.tasks {
                t.deadline_s = if i == 1 { 2.0 } else { 1e-4 };
            }
        }
        // Make recommenders 0 and 2 unstreamably heavy so only MAR 1 fits.
        s.mars[0].ar_size_bits = 1e9;
        s.mars[2].ar_size_bits = 1e9;
        let bids = truthful_av_bids(&s);
        let out = run_mtepvisa(&s, &bids).unwrap();
        assert_eq!(out.winner_av, Some(1));
        assert_eq!(out.winner_mar, Some(1));
    }

    #[test]
    fn functional_truthful_bid_is_its_expected_value() {
        let s = sample_scenario(&ScenarioConfig::default(), 23).unwrap();
        let prepared = PreparedMarket::new(MechanismKind::Mtepvisa, &s, None).unwrap();
        let bids = prepared.truthful_mar_bids(4);
        let expected =
            crate::mechanism::functional_expected_value(&s, 4, s.estimator_samples).unwrap();
        assert_eq!(bids[0], expected);
        // Infotainment recommenders bid their realized value rates.
        for k in 1..s.mars.len() {
            assert_eq!(bids[k], prepared.value_rate(4, k));
        }
    }

    #[test]
    fn infeasible_market_clears_empty() {
        let mut cfg = ScenarioConfig::default();
        cfg.task.deadline_s = crate::dist::Dist::uniform(1e-6, 1e-6);
        let s = sample_scenario(&cfg, 8).unwrap();
        let bids = truthful_av_bids(&s);
        let out = run_mtepvisa(&s, &bids).unwrap();
        assert_eq!(out.winner_av, None);
        assert_eq!(out.winner_mar, None);
        assert_eq!(out.surplus_total, 0.0);
        assert_eq!(out.revenue, 0.0);
    }

    #[test]
    fn winner_payment_never_exceeds_bid() {
        let cfg = ScenarioConfig::default();
        for seed in 0..32 {
            let s = sample_scenario(&cfg, seed).unwrap();
            let bids = truthful_av_bids(&s);
            for kind in [MechanismKind::Mtepvisa, MechanismKind::Epvisa, MechanismKind::Pvisa] {
                let (out, _) = run_mechanism(kind, &s, &bids).unwrap();
                if let Some(w) = out.winner_av {
                    assert!(
                        out.pay_av <= bids[w].price + 1e-9,
                        "{kind} seed {seed}: pay {} > bid {}",
                        out.pay_av,
                        bids[w].price
                    );
                }
            }
        }
    }

    #[test]
    fn bid_validation_rejects_malformed_bids() {
        let s = sample_scenario(&ScenarioConfig::default(), 2).unwrap();
        let mut bids = truthful_av_bids(&s);
        bids.pop();
        assert!(run_mtepvisa(&s, &bids).is_err());

        let mut bids2 = truthful_av_bids(&s);
        bids2[3].price = -0.1;
        assert!(run_mtepvisa(&s, &bids2).is_err());

        let mut bids3 = truthful_av_bids(&s);
        bids3[3].deadlines.pop();
        assert!(run_mtepvisa(&s, &bids3).is_err());
    }
}
