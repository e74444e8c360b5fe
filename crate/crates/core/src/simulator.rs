//! Monte Carlo experiment runner.
//!
//! Sweeps a market parameter (task count or generative score) over a grid,
//! running every requested mechanism on the same sampled scenarios (common
//! random numbers) and aggregating mean/standard-error statistics per cell.
//! All cell seeds derive from the master seed by counter-based splitting, so
//! results are independent of execution order and parallelism.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::market::{sample_scenario, Scenario, ScenarioConfig};
use crate::mechanism::{run_mechanism, AuctionOutcome, Bid, MechanismKind};
use crate::seed::{self, domain};

/// Truthful physical bids: each AV offers its private value and reports its
/// true task deadlines.
pub fn truthful_av_bids(scenario: &Scenario) -> Vec<Bid> {
    scenario
        .avs
        .iter()
        .map(|av| Bid::new(av.id, av.value, av.tasks.iter().map(|t| t.deadline_s).collect()))
        .collect()
}

/// The swept market parameter.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepVar {
    /// Number of DT tasks per AV.
    Tasks,
    /// Constant generative score.
    GenScore,
}

impl SweepVar {
    pub fn as_str(&self) -> &'static str {
        match self {
            SweepVar::Tasks => "tasks",
            SweepVar::GenScore => "gen_score",
        }
    }
}

impl std::str::FromStr for SweepVar {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "tasks" => Ok(SweepVar::Tasks),
            "gen_score" | "gscore" | "g" => Ok(SweepVar::GenScore),
            other => Err(Error::config(format!(
                "unknown sweep variable '{other}' (expected tasks or gscore)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sweep {
    pub variable: SweepVar,
    pub values: Vec<f64>,
}

impl Sweep {
    /// A single-point sweep that leaves the base configuration untouched.
    pub fn none() -> Self {
        Sweep { variable: SweepVar::Tasks, values: vec![] }
    }
}

/// A full experiment: mechanisms x sweep points x seeds over one base
/// configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentPlan {
    pub config: ScenarioConfig,
    pub mechanisms: Vec<MechanismKind>,
    pub sweep: Sweep,
    pub seeds: u64,
    /// First seed index; batches over disjoint offset ranges merge cleanly.
    #[serde(default)]
    pub seed_offset: u64,
    pub master_seed: u64,
}

impl ExperimentPlan {
    pub fn validate(&self) -> Result<()> {
        self.config.validate()?;
        if self.mechanisms.is_empty() {
            return Err(Error::config("at least one mechanism is required"));
        }
        if self.seeds == 0 {
            return Err(Error::config("seeds must be >= 1"));
        }
        if let SweepVar::Tasks = self.sweep.variable {
            if self.sweep.values.iter().any(|v| *v < 1.0 || v.fract() != 0.0) {
                return Err(Error::config("task-count sweep values must be positive integers"));
            }
        }
        if let SweepVar::GenScore = self.sweep.variable {
            if self.sweep.values.iter().any(|v| !(0.0..=1.0).contains(v)) {
                return Err(Error::config("generative-score sweep values must lie in [0, 1]"));
            }
        }
        Ok(())
    }

    /// Sweep points; an empty sweep is one point at the base configuration.
    fn points(&self) -> Vec<Option<f64>> {
        if self.sweep.values.is_empty() {
            vec![None]
        } else {
            self.sweep.values.iter().map(|v| Some(*v)).collect()
        }
    }

    fn config_at(&self, point: Option<f64>) -> ScenarioConfig {
        let mut cfg = self.config.clone();
        if let Some(v) = point {
            match self.sweep.variable {
                SweepVar::Tasks => cfg.counts.tasks_per_av = v as usize,
                SweepVar::GenScore => cfg.gen_score = crate::dist::Dist::constant(v),
            }
        }
        cfg
    }
}

/// Per-run metrics recorded for every (mechanism, sweep point, seed).
pub const METRICS: [&str; 5] =
    ["total_surplus", "dt_surplus", "ar_surplus", "revenue", "feasibility_rate"];

fn metrics_of(outcome: &AuctionOutcome, gamma: f64) -> [f64; 5] {
    let ar = outcome.display_duration
        * (gamma * outcome.surplus_ar_functional + outcome.surplus_ar_infotainment);
    [
        outcome.surplus_total,
        outcome.surplus_dt,
        ar,
        outcome.revenue,
        if outcome.winner_av.is_some() { 1.0 } else { 0.0 },
    ]
}

/// Mean and standard error of one metric in one cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricStat {
    pub metric: String,
    pub mean: f64,
    pub stderr: f64,
}

/// Aggregated results for one (mechanism, sweep point) cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellResult {
    pub mechanism: MechanismKind,
    pub sweep_var: String,
    pub sweep_value: f64,
    pub n_seeds: u64,
    pub stats: Vec<MetricStat>,
}

impl CellResult {
    pub fn stat(&self, metric: &str) -> Option<&MetricStat> {
        self.stats.iter().find(|s| s.metric == metric)
    }

    pub fn mean(&self, metric: &str) -> f64 {
        self.stat(metric).map(|s| s.mean).unwrap_or(f64::NAN)
    }
}

/// Full experiment output: one cell per (mechanism, sweep point), in plan
/// order (mechanisms outer, sweep points inner).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentResult {
    pub sweep_var: String,
    pub cells: Vec<CellResult>,
}

impl ExperimentResult {
    pub fn cell(&self, mechanism: MechanismKind, sweep_value: f64) -> Option<&CellResult> {
        self.cells
            .iter()
            .find(|c| c.mechanism == mechanism && c.sweep_value == sweep_value)
    }
}

fn mean_and_stderr(values: &[f64]) -> (f64, f64) {
    let n = values.len();
    let mean = values.iter().sum::<f64>() / n as f64;
    if n < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1) as f64;
    (mean, (var / n as f64).sqrt())
}

/// Run the plan. Deterministic given the plan (including the master seed and
/// the seed offset); parallelism does not change results. A failure in any
/// cell aborts with the offending seed identified.
pub fn run_experiment(plan: &ExperimentPlan) -> Result<ExperimentResult> {
    plan.validate()?;
    let points = plan.points();

    // One job per (point, seed): sample the scenario once and run every
    // mechanism on it (common random numbers across mechanisms).
    let jobs: Vec<(usize, u64)> = (0..points.len())
        .flat_map(|p| (0..plan.seeds).map(move |s| (p, plan.seed_offset + s)))
        .collect();

    let per_run: Vec<Result<Vec<[f64; 5]>>> = jobs
        .par_iter()
        .map(|&(p, seed_idx)| {
            let cfg = plan.config_at(points[p]);
            // The scenario seed depends on the seed index only, not the sweep
            // point: sweep points share draws (common random numbers) so
            // responses along the sweep are paired wherever the swept
            // parameter leaves the sampling stream unchanged.
            let scenario_seed = seed::sub_seed(plan.master_seed, domain::CELL, 0, seed_idx);
            let scenario = sample_scenario(&cfg, scenario_seed)
                .map_err(|e| Error::Domain(format!("seed {scenario_seed}: {e}")))?;
            let bids = truthful_av_bids(&scenario);
            plan.mechanisms
                .iter()
                .map(|&kind| {
                    let (outcome, _) = run_mechanism(kind, &scenario, &bids)
                        .map_err(|e| Error::Domain(format!("seed {scenario_seed}: {e}")))?;
                    Ok(metrics_of(&outcome, scenario.gamma))
                })
                .collect()
        })
        .collect();

    // Regroup into per-cell series, in job order (seed-ascending per point).
    let n_points = points.len();
    let n_mech = plan.mechanisms.len();
    let mut series: Vec<Vec<Vec<f64>>> = vec![vec![Vec::new(); 5]; n_points * n_mech];
    for (job_idx, run) in per_run.into_iter().enumerate() {
        let (p, _) = jobs[job_idx];
        let run = run?;
        for (m, metrics) in run.into_iter().enumerate() {
            let cell = m * n_points + p;
            for (j, v) in metrics.into_iter().enumerate() {
                series[cell][j].push(v);
            }
        }
    }

    let mut cells = Vec::with_capacity(n_points * n_mech);
    for (m, &mechanism) in plan.mechanisms.iter().enumerate() {
        for (p, point) in points.iter().enumerate() {
            let sweep_value = point.unwrap_or(match plan.sweep.variable {
                SweepVar::Tasks => plan.config.counts.tasks_per_av as f64,
                SweepVar::GenScore => f64::NAN,
            });
            let stats = METRICS
                .iter()
                .zip(&series[m * n_points + p])
                .map(|(name, vals)| {
                    let (mean, stderr) = mean_and_stderr(vals);
                    MetricStat { metric: name.to_string(), mean, stderr }
                })
                .collect();
            cells.push(CellResult {
                mechanism,
                sweep_var: plan.sweep.variable.as_str().to_string(),
                sweep_value,
                n_seeds: plan.seeds,
                stats,
            });
        }
    }

    Ok(ExperimentResult { sweep_var: plan.sweep.variable.as_str().to_string(), cells })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_plan() -> ExperimentPlan {
        let mut config = ScenarioConfig::default();
        config.counts.avs = 8;
        config.counts.mars = 8;
        config.estimator_samples = 4;
        ExperimentPlan {
            config,
            mechanisms: vec![MechanismKind::Pvisa],
            sweep: Sweep { variable: SweepVar::Tasks, values: vec![2.0] },
            seeds: 4,
            seed_offset: 0,
            master_seed: 7,
        }
    }

    #[test]
    fn single_run_equals_direct_mechanism_output() {
        let mut plan = small_plan();
        plan.seeds = 1;
        let result = run_experiment(&plan).unwrap();
        let cell = &result.cells[0];

        let mut cfg = plan.config.clone();
        cfg.counts.tasks_per_av = 2;
        let seed = seed::sub_seed(plan.master_seed, domain::CELL, 0, 0);
        let scenario = sample_scenario(&cfg, seed).unwrap();
        let bids = truthful_av_bids(&scenario);
        let out = crate::mechanism::run_pvisa(&scenario, &bids).unwrap();

        assert_eq!(cell.mean("total_surplus"), out.surplus_total);
        assert_eq!(cell.mean("revenue"), out.revenue);
        assert_eq!(cell.stat("total_surplus").unwrap().stderr, 0.0);
    }

    #[test]
    fn experiments_are_deterministic() {
        let plan = small_plan();
        let a = run_experiment(&plan).unwrap();
        let b = run_experiment(&plan).unwrap();
        assert_eq!(a, b);
        assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
    }

    #[test]
    fn seed_partition_merges_cleanly() {
        let mut plan = small_plan();
        plan.seeds = 16;
        let full = run_experiment(&plan).unwrap();

        let mut first = plan.clone();
        first.seeds = 8;
        let mut second = plan.clone();
        second.seeds = 8;
        second.seed_offset = 8;
        let a = run_experiment(&first).unwrap();
        let b = run_experiment(&second).unwrap();

        for (cell, (ca, cb)) in full.cells.iter().zip(a.cells.iter().zip(&b.cells)) {
            for ((s, sa), sb) in cell.stats.iter().zip(&ca.stats).zip(&cb.stats) {
                let merged_mean = (sa.mean + sb.mean) / 2.0;
                assert!(
                    (s.mean - merged_mean).abs() <= 1e-12 * s.mean.abs().max(1.0),
                    "{}: {} vs merged {}",
                    s.metric,
                    s.mean,
                    merged_mean
                );
            }
        }
    }

    #[test]
    fn feasibility_rate_is_a_probability() {
        let plan = small_plan();
        let result = run_experiment(&plan).unwrap();
        for cell in &result.cells {
            let f = cell.mean("feasibility_rate");
            assert!((0.0..=1.0).contains(&f));
        }
    }

    #[test]
    fn truthful_bids_mirror_values_and_deadlines() {
        let s = sample_scenario(&ScenarioConfig::default(), 3).unwrap();
        let bids = truthful_av_bids(&s);
        for (av, bid) in s.avs.iter().zip(&bids) {
            assert_eq!(bid.price, av.value);
            assert_eq!(bid.deadlines.len(), av.tasks.len());
            for (d, t) in bid.deadlines.iter().zip(&av.tasks) {
                assert_eq!(*d, t.deadline_s);
            }
        }
    }
}
