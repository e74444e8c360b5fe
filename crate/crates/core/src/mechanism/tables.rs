//! Per-scenario delay and value tables shared by scoring and clearing.
//!
//! Deadlines come from the submitted bids (the auctioneer only sees reports);
//! sizes, channel state, and hit caches come from the scenario, which the RSU
//! observes when tasks are submitted for execution. Under truthful bidding the
//! reported deadlines equal the true ones.

use crate::error::Result;
use crate::link;
use crate::market::Scenario;
use crate::synchronization::{
    ar_compute_delay, ar_transmission_delay, deadline_slack, match_quality,
};

/// Evaluation of one (AV, MAR) pairing under full allocation of both sides.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairEval {
    /// Every per-task total delay meets its deadline.
    pub feasible: bool,
    /// Sum over tasks of the total synchronization delay (the display duration).
    pub display: f64,
    /// Mean over tasks of the generative match quality (or the exogenous
    /// per-pair match quality when that model is active).
    pub mean_match: f64,
}

/// Precomputed per-scenario tables. All mechanism decisions are pure
/// arithmetic over these plus the submitted prices.
#[derive(Debug, Clone)]
pub struct MarketTables {
    /// Index of the clearing RSU (the first one; single-auctioneer market).
    pub rsu: usize,
    /// Downlink rate per AV (bits/s).
    pub downlink: Vec<f64>,
    /// DT upload delay per (AV, task); infinite when the uplink carries nothing.
    pub t_dt: Vec<Vec<f64>>,
    /// DT compute delay per (AV, task).
    pub l_dt: Vec<Vec<f64>>,
    /// Reported deadline per (AV, task).
    pub deadlines: Vec<Vec<f64>>,
    /// Whether every task of the AV meets its deadline on DT delays alone.
    pub dt_feasible: Vec<bool>,
    /// Sum of clamped per-task deadline slack (the expected display window).
    pub d_star: Vec<f64>,
    /// Pair evaluations [av][mar].
    pub pairs: Vec<Vec<PairEval>>,
    /// Realized per-display-second value U = v * mean_match, [av][mar].
    pub value_rate: Vec<Vec<f64>>,
}

impl MarketTables {
    /// Build tables using the given reported deadlines (`None` = the task
    /// deadlines recorded in the scenario).
    pub fn build(scenario: &Scenario, reported_deadlines: Option<&[Vec<f64>]>) -> Result<Self> {
        let rsu_idx = 0;
        let rsu = &scenario.rsus[rsu_idx];
        let n_av = scenario.avs.len();
        let n_mar = scenario.mars.len();

        let deadlines: Vec<Vec<f64>> = match reported_deadlines {
            Some(d) => d.to_vec(),
            None => scenario
                .avs
                .iter()
                .map(|av| av.tasks.iter().map(|t| t.deadline_s).collect())
                .collect(),
        };

        let mut downlink = Vec::with_capacity(n_av);
        let mut t_dt = Vec::with_capacity(n_av);
        let mut l_dt = Vec::with_capacity(n_av);
        let mut dt_feasible = Vec::with_capacity(n_av);
        let mut d_star = Vec::with_capacity(n_av);

        for av in &scenario.avs {
            let up = link::uplink_rate(av, rsu, &scenario.channel)?;
            let down = link::downlink_rate(av, rsu, &scenario.channel)?;
            downlink.push(down);

            let mut t_row = Vec::with_capacity(av.tasks.len());
            let mut l_row = Vec::with_capacity(av.tasks.len());
            let mut feasible = true;
            let mut slack_sum = 0.0;
            for (n, task) in av.tasks.iter().enumerate() {
                let t = if up > 0.0 { task.size_bits / up } else { f64::INFINITY };
                let l = link::dt_compute_delay(task, rsu)?;
                let d = deadlines[av.id][n];
                if t + l > d {
                    feasible = false;
                }
                slack_sum += deadline_slack(d, t, l);
                t_row.push(t);
                l_row.push(l);
            }
            t_dt.push(t_row);
            l_dt.push(l_row);
            dt_feasible.push(feasible);
            d_star.push(slack_sum);
        }

        let mut pairs = Vec::with_capacity(n_av);
        let mut value_rate = Vec::with_capacity(n_av);
        for i in 0..n_av {
            let mut pair_row = Vec::with_capacity(n_mar);
            let mut rate_row = Vec::with_capacity(n_mar);
            for k in 0..n_mar {
                let hits = scenario.mars[k].hits[i];
                let g = scenario.gen.score(i, rsu_idx, k);
                let exo_m = scenario.exo_match.as_ref().map(|e| e.m[i][k]);
                let eval = eval_pair(
                    scenario,
                    i,
                    k,
                    downlink[i],
                    &t_dt[i],
                    &l_dt[i],
                    &deadlines[i],
                    hits,
                    g,
                    exo_m,
                );
                rate_row.push(scenario.avs[i].value * eval.mean_match);
                pair_row.push(eval);
            }
            pairs.push(pair_row);
            value_rate.push(rate_row);
        }

        Ok(MarketTables {
            rsu: rsu_idx,
            downlink,
            t_dt,
            l_dt,
            deadlines,
            dt_feasible,
            d_star,
            pairs,
            value_rate,
        })
    }

    /// Per-task total delays for a winning allocation; `mar = None` is a
    /// DT-only allocation.
    pub fn winning_delays(&self, scenario: &Scenario, av: usize, mar: Option<usize>) -> Vec<f64> {
        let tasks = &scenario.avs[av].tasks;
        match mar {
            None => (0..tasks.len()).map(|n| self.t_dt[av][n] + self.l_dt[av][n]).collect(),
            Some(k) => {
                let rsu = &scenario.rsus[self.rsu];
                let hits = scenario.mars[k].hits[av];
                let g = scenario.gen.score(av, self.rsu, k);
                (0..tasks.len())
                    .map(|n| {
                        let (t, l) = (self.t_dt[av][n], self.l_dt[av][n]);
                        let task = reported_task(scenario, av, n, self.deadlines[av][n]);
                        let t_ar = ar_transmission_delay(
                            &task,
                            self.downlink[av],
                            &scenario.mars[k],
                            hits,
                            g,
                            t,
                            l,
                        )
                        .unwrap_or(f64::INFINITY);
                        let l_ar = ar_compute_delay(
                            &task,
                            self.downlink[av],
                            &scenario.mars[k],
                            rsu,
                            hits,
                            g,
                            t,
                            l,
                        )
                        .unwrap_or(f64::INFINITY);
                        t + l + t_ar + l_ar
                    })
                    .collect()
            }
        }
    }
}

/// A task with its reported deadline substituted in.
fn reported_task(
    scenario: &Scenario,
    av: usize,
    n: usize,
    deadline: f64,
) -> crate::market::DtTask {
    let mut t = scenario.avs[av].tasks[n].clone();
    t.deadline_s = deadline;
    t
}

/// Evaluate one (AV, MAR) pairing: feasibility, display duration, and match
/// quality, for arbitrary hit/score draws (the estimators resample these).
#[allow(clippy::too_many_arguments)]
pub(crate) fn eval_pair(
    scenario: &Scenario,
    av: usize,
    mar: usize,
    downlink: f64,
    t_dt: &[f64],
    l_dt: &[f64],
    deadlines: &[f64],
    hits: u64,
    g_score: f64,
    exo_match: Option<f64>,
) -> PairEval {
    let rsu = &scenario.rsus[0];
    let mar_profile = &scenario.mars[mar];
    let n_tasks = scenario.avs[av].tasks.len();

    if !(downlink > 0.0) {
        return PairEval { feasible: false, display: f64::INFINITY, mean_match: 0.0 };
    }

    let mut feasible = true;
    let mut display = 0.0;
    let mut match_sum = 0.0;
    for n in 0..n_tasks {
        let (t, l) = (t_dt[n], l_dt[n]);
        if !t.is_finite() {
            return PairEval { feasible: false, display: f64::INFINITY, mean_match: 0.0 };
        }
        let task = reported_task(scenario, av, n, deadlines[n]);
        let t_ar =
            ar_transmission_delay(&task, downlink, mar_profile, hits, g_score, t, l).unwrap_or(f64::INFINITY);
        let l_ar = ar_compute_delay(&task, downlink, mar_profile, rsu, hits, g_score, t, l)
            .unwrap_or(f64::INFINITY);
        let total = t + l + t_ar + l_ar;
        if total > deadlines[n] {
            feasible = false;
        }
        display += total;
        match_sum += match_quality(
            &task,
            downlink,
            mar_profile,
            hits,
            g_score,
            scenario.gen.theta_exponent,
            t,
            l,
        );
    }

    let mean_match = match exo_match {
        Some(m) => m,
        None => match_sum / n_tasks as f64,
    };
    PairEval { feasible, display, mean_match }
}
