//! Market entities, scenario configuration, and scenario sampling.
//!
//! A `Scenario` is one fully sampled market instance: the AV fleet with its
//! digital-twin (DT) task lists, the RSU resource pool, the AR recommender
//! (MAR) roster, channel state, and generative-score state. All quantities are
//! stored in SI units (bits, Hz, cycles/s, mW, seconds) so the delay formulas
//! evaluate without hidden conversion factors; the configuration file speaks
//! the field units (MB, MHz, GHz, mW, seconds) and conversion happens here.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::dist::{Dist, IntDist};
use crate::error::{Error, Result};
use crate::seed::{self, domain};

/// Bits per megabyte as configured (8 * 10^6).
pub const BITS_PER_MB: f64 = 8e6;
/// Hz per MHz.
pub const HZ_PER_MHZ: f64 = 1e6;
/// Cycles per GHz-second / Gcycle.
pub const CYCLES_PER_GCYCLE: f64 = 1e9;
/// Gcycles/MB expressed as cycles/bit: 10^9 / (8 * 10^6) = 125.
pub const CYCLES_PER_BIT_PER_GCYCLE_PER_MB: f64 = CYCLES_PER_GCYCLE / BITS_PER_MB;

/// One digital-twin task: an upload-plus-compute job with a hard deadline.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DtTask {
    /// Data size in bits.
    pub size_bits: f64,
    /// CPU cycles required per bit.
    pub cycles_per_bit: f64,
    /// Completion deadline in seconds.
    pub deadline_s: f64,
}

/// An autonomous vehicle: physical-submarket bidder.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AvProfile {
    pub id: usize,
    /// Private value for getting its DT tasks executed (dimensionless).
    pub value: f64,
    /// Uplink transmit power in mW.
    pub tx_power_mw: f64,
    /// Preference-cache capacity (count).
    pub cache_size: u64,
    /// DT task list, length N.
    pub tasks: Vec<DtTask>,
}

/// The roadside unit: auctioneer and resource owner.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RsuProfile {
    pub id: usize,
    pub uplink_bw_hz: f64,
    pub downlink_bw_hz: f64,
    pub cpu_freq_hz: f64,
    pub gpu_freq_hz: f64,
    /// Downlink transmit power in mW.
    pub tx_power_mw: f64,
    /// Receiver noise power at the RSU in mW.
    pub noise_mw: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MarKind {
    Functional,
    Infotainment,
}

/// A Metaverse AR recommender: virtual-submarket bidder. Index 0 is the one
/// functional recommender; all others are infotainment recommenders.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarProfile {
    pub id: usize,
    pub kind: MarKind,
    /// AR layer size in bits.
    pub ar_size_bits: f64,
    /// GPU cycles per bit for rendering.
    pub ar_cycles_per_bit: f64,
    /// Hit-preference-cache count per AV (indexed by AV id).
    pub hits: Vec<u64>,
    /// Offered price (set by a bidding policy; 0 until bids are formed).
    pub bid: f64,
}

/// Channel gains and receiver noise at the AVs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelState {
    /// gain[i][j]: dimensionless gain between AV i and RSU j.
    pub gain: Vec<Vec<f64>>,
    /// Receiver noise power at each AV in mW.
    pub noise_mw: Vec<f64>,
}

impl ChannelState {
    pub fn gain(&self, av: usize, rsu: usize) -> f64 {
        self.gain[av][rsu]
    }
}

/// Generative-score state: validation quality of generated AR content per
/// (AV, RSU, MAR) triple, plus the marginal-reward exponent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenScoreModel {
    /// score[i][j][k] in [0, 1].
    pub score: Vec<Vec<Vec<f64>>>,
    /// theta(x) = x^beta with beta >= 1 (convex, non-decreasing).
    pub theta_exponent: f64,
}

impl GenScoreModel {
    pub fn score(&self, av: usize, rsu: usize, mar: usize) -> f64 {
        self.score[av][rsu][mar]
    }
}

/// Exogenous match-quality overlay used by the winner's-curse experiments:
/// per-pair match qualities m[i][k] drawn as kind_scale * X_i * z_{i,k}
/// with X and z log-normal, replacing the generative-score-driven values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExoMatch {
    pub params: ExoMatchParams,
    /// Realized match quality per (AV, MAR).
    pub m: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExoMatchParams {
    /// Sigma of the common log-normal factor X shared by all MARs of one AV.
    pub common_sigma: f64,
    /// Scale and idiosyncratic sigma for the functional recommender.
    pub functional_scale: f64,
    pub functional_sigma: f64,
    /// Scale and idiosyncratic sigma for infotainment recommenders.
    pub infotainment_scale: f64,
    pub infotainment_sigma: f64,
}

/// The distributions the match-quality inputs were drawn from. The score and
/// price estimators resample from these, so a scenario carries them along.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResampleSpec {
    pub hits: IntDist,
    pub gen_score: Dist,
}

/// A fully sampled market instance. Immutable after construction; safe to
/// share read-only across workers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub avs: Vec<AvProfile>,
    pub rsus: Vec<RsuProfile>,
    pub mars: Vec<MarProfile>,
    pub channel: ChannelState,
    pub gen: GenScoreModel,
    /// Relative bargaining power of the functional recommender.
    pub gamma: f64,
    /// Seed this scenario was sampled from.
    pub seed: u64,
    /// Monte Carlo sample count used by score/price estimators on this market.
    pub estimator_samples: usize,
    /// Distributions behind the match-quality inputs (for resampling).
    pub resample: ResampleSpec,
    /// Present only when the scenario uses the exogenous match-quality model.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub exo_match: Option<ExoMatch>,
}

impl Scenario {
    pub fn n_avs(&self) -> usize {
        self.avs.len()
    }

    pub fn n_mars(&self) -> usize {
        self.mars.len()
    }

    pub fn tasks_of(&self, av: usize) -> &[DtTask] {
        &self.avs[av].tasks
    }
}

// ---------------------------------------------------------------------------
// Configuration
// ---------------------------------------------------------------------------

/// Match-quality model selector.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MatchModel {
    /// Match quality derived from the generative score, deadline slack, and
    /// hit caches (the default).
    #[default]
    Generative,
    /// Match quality drawn from the exogenous common-factor model.
    Exogenous(ExoMatchParams),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Counts {
    pub avs: usize,
    pub mars: usize,
    pub rsus: usize,
    pub tasks_per_av: usize,
}

/// RSU resources in configuration units (MHz, GHz, mW).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RsuConfig {
    pub uplink_bandwidth_mhz: f64,
    pub downlink_bandwidth_mhz: f64,
    pub cpu_freq_ghz: f64,
    pub gpu_freq_ghz: f64,
    pub tx_power_mw: Dist,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AvConfig {
    /// Private DT value (dimensionless).
    pub value: Dist,
    pub tx_power_mw: Dist,
    /// Preference-cache capacity; draws below 1 are raised to 1.
    pub cache_size: IntDist,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskConfig {
    pub size_mb: Dist,
    pub cpu_gcycles_per_mb: Dist,
    pub deadline_s: Dist,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArConfig {
    pub size_mb: Dist,
    pub gpu_gcycles_per_mb: Dist,
    /// Hit-cache counts; draws are truncated to the AV's cache size.
    pub hits: IntDist,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelConfig {
    pub gain: Dist,
    /// Receiver noise power in mW, drawn independently per AV and per RSU.
    pub noise_mw: Dist,
}

/// Full scenario configuration. Serialized as the JSON configuration schema;
/// all units are as named in the fields.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ScenarioConfig {
    pub counts: Counts,
    pub rsu: RsuConfig,
    pub av: AvConfig,
    pub task: TaskConfig,
    pub ar: ArConfig,
    pub channel: ChannelConfig,
    /// Generative score per (AV, RSU, MAR) triple, in [0, 1].
    pub gen_score: Dist,
    /// Exponent of theta(x) = x^beta; must be >= 1.
    pub theta_exponent: f64,
    /// Relative bargaining power of the functional recommender.
    pub gamma: f64,
    pub match_model: MatchModel,
    /// Monte Carlo samples used by the virtual-surplus and price-scaling
    /// estimators.
    pub estimator_samples: usize,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        ScenarioConfig {
            counts: Counts { avs: 30, mars: 30, rsus: 1, tasks_per_av: 5 },
            rsu: RsuConfig {
                uplink_bandwidth_mhz: 20.0,
                downlink_bandwidth_mhz: 20.0,
                cpu_freq_ghz: 3.6,
                gpu_freq_ghz: 19.0,
                tx_power_mw: Dist::uniform(0.0, 5.0),
            },
            av: AvConfig {
                value: Dist::uniform(0.1, 1.0),
                tx_power_mw: Dist::uniform(0.0, 1.0),
                cache_size: IntDist::Zipf { exponent: 2.0, max_value: 1_000_000 },
            },
            task: TaskConfig {
                size_mb: Dist::uniform(0.0, 1.0),
                cpu_gcycles_per_mb: Dist::uniform(0.0, 1.0),
                deadline_s: Dist::uniform(0.9, 1.1),
            },
            ar: ArConfig {
                size_mb: Dist::uniform(0.0, 0.25),
                gpu_gcycles_per_mb: Dist::uniform(0.0, 1.0),
                hits: IntDist::Zipf { exponent: 2.0, max_value: 1_000_000 },
            },
            channel: ChannelConfig {
                gain: Dist::uniform(0.0, 1.0),
                noise_mw: Dist::AbsNormal { mean: 0.0, std_dev: 1.0, floor: crate::dist::ABS_NORMAL_FLOOR },
            },
            gen_score: Dist::constant(0.5),
            theta_exponent: 1.0,
            gamma: 1.0,
            match_model: MatchModel::Generative,
            estimator_samples: 16,
        }
    }
}

impl ScenarioConfig {
    pub fn validate(&self) -> Result<()> {
        if self.counts.avs == 0 {
            return Err(Error::config("counts.avs must be >= 1"));
        }
        if self.counts.mars == 0 {
            return Err(Error::config("counts.mars must be >= 1"));
        }
        if self.counts.rsus == 0 {
            return Err(Error::config("counts.rsus must be >= 1"));
        }
        if self.counts.tasks_per_av == 0 {
            return Err(Error::config("counts.tasks_per_av must be >= 1"));
        }
        if !(self.rsu.uplink_bandwidth_mhz > 0.0)
            || !(self.rsu.downlink_bandwidth_mhz > 0.0)
            || !(self.rsu.cpu_freq_ghz > 0.0)
            || !(self.rsu.gpu_freq_ghz > 0.0)
        {
            return Err(Error::config("rsu bandwidths and frequencies must be > 0"));
        }
        if !(self.theta_exponent >= 1.0) {
            return Err(Error::config("theta_exponent must be >= 1"));
        }
        if !(self.gamma >= 0.0) {
            return Err(Error::config("gamma must be >= 0"));
        }
        if self.estimator_samples == 0 {
            return Err(Error::config("estimator_samples must be >= 1"));
        }
        self.rsu.tx_power_mw.validate("rsu.tx_power_mw")?;
        self.av.value.validate("av.value")?;
        self.av.tx_power_mw.validate("av.tx_power_mw")?;
        self.av.cache_size.validate("av.cache_size")?;
        self.task.size_mb.validate("task.size_mb")?;
        self.task.cpu_gcycles_per_mb.validate("task.cpu_gcycles_per_mb")?;
        self.task.deadline_s.validate("task.deadline_s")?;
        self.ar.size_mb.validate("ar.size_mb")?;
        self.ar.gpu_gcycles_per_mb.validate("ar.gpu_gcycles_per_mb")?;
        self.ar.hits.validate("ar.hits")?;
        self.channel.gain.validate("channel.gain")?;
        self.channel.noise_mw.validate("channel.noise_mw")?;
        self.gen_score.validate("gen_score")?;
        let (lo, hi) = self.gen_score.support();
        if lo < 0.0 || hi > 1.0 {
            return Err(Error::config("gen_score support must lie within [0, 1]"));
        }
        let (dlo, _) = self.task.deadline_s.support();
        if dlo <= 0.0 {
            return Err(Error::config("task.deadline_s support must be > 0"));
        }
        let (vlo, _) = self.av.value.support();
        if vlo <= 0.0 {
            return Err(Error::config("av.value support must be > 0"));
        }
        if let MatchModel::Exogenous(p) = &self.match_model {
            for (name, v) in [
                ("common_sigma", p.common_sigma),
                ("functional_sigma", p.functional_sigma),
                ("infotainment_sigma", p.infotainment_sigma),
            ] {
                if !(v >= 0.0) || !v.is_finite() {
                    return Err(Error::config(format!("match_model.{name} must be >= 0")));
                }
            }
            if !(p.functional_scale > 0.0) || !(p.infotainment_scale > 0.0) {
                return Err(Error::config("match_model scales must be > 0"));
            }
        }
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// Sampling
// ---------------------------------------------------------------------------

/// Sample a full market instance. Identical `(config, seed)` pairs produce
/// bit-identical scenarios; sampling order is fixed (RSUs, AVs with tasks,
/// channel gains, MARs with hit caches, generative scores, exogenous match
/// qualities).
pub fn sample_scenario(config: &ScenarioConfig, seed: u64) -> Result<Scenario> {
    config.validate()?;
    let mut rng = seed::rng(seed::sub_seed(seed, domain::SCENARIO, 0, 0));

    let n_av = config.counts.avs;
    let n_mar = config.counts.mars;
    let n_rsu = config.counts.rsus;
    let n_tasks = config.counts.tasks_per_av;

    let rsus: Vec<RsuProfile> = (0..n_rsu)
        .map(|id| RsuProfile {
            id,
            uplink_bw_hz: config.rsu.uplink_bandwidth_mhz * HZ_PER_MHZ,
            downlink_bw_hz: config.rsu.downlink_bandwidth_mhz * HZ_PER_MHZ,
            cpu_freq_hz: config.rsu.cpu_freq_ghz * CYCLES_PER_GCYCLE,
            gpu_freq_hz: config.rsu.gpu_freq_ghz * CYCLES_PER_GCYCLE,
            tx_power_mw: config.rsu.tx_power_mw.sample(&mut rng),
            noise_mw: config.channel.noise_mw.sample(&mut rng),
        })
        .collect();

    let avs: Vec<AvProfile> = (0..n_av)
        .map(|id| {
            let value = config.av.value.sample(&mut rng);
            let tx_power_mw = config.av.tx_power_mw.sample(&mut rng);
            let cache_size = config.av.cache_size.sample(&mut rng).max(1);
            let tasks = (0..n_tasks)
                .map(|_| DtTask {
                    size_bits: config.task.size_mb.sample(&mut rng) * BITS_PER_MB,
                    cycles_per_bit: config.task.cpu_gcycles_per_mb.sample(&mut rng)
                        * CYCLES_PER_BIT_PER_GCYCLE_PER_MB,
                    deadline_s: config.task.deadline_s.sample(&mut rng),
                })
                .collect();
            AvProfile { id, value, tx_power_mw, cache_size, tasks }
        })
        .collect();

    let noise_av: Vec<f64> = (0..n_av).map(|_| config.channel.noise_mw.sample(&mut rng)).collect();
    let gain: Vec<Vec<f64>> = (0..n_av)
        .map(|_| (0..n_rsu).map(|_| config.channel.gain.sample(&mut rng)).collect())
        .collect();
    let channel = ChannelState { gain, noise_mw: noise_av };

    let mars: Vec<MarProfile> = (0..n_mar)
        .map(|id| {
            let kind = if id == 0 { MarKind::Functional } else { MarKind::Infotainment };
            let ar_size_bits = config.ar.size_mb.sample(&mut rng) * BITS_PER_MB;
            let ar_cycles_per_bit =
                config.ar.gpu_gcycles_per_mb.sample(&mut rng) * CYCLES_PER_BIT_PER_GCYCLE_PER_MB;
            let hits = (0..n_av)
                .map(|i| config.ar.hits.sample(&mut rng).min(avs[i].cache_size))
                .collect();
            MarProfile { id, kind, ar_size_bits, ar_cycles_per_bit, hits, bid: 0.0 }
        })
        .collect();

    let score: Vec<Vec<Vec<f64>>> = (0..n_av)
        .map(|_| {
            (0..n_rsu)
                .map(|_| (0..n_mar).map(|_| config.gen_score.sample(&mut rng)).collect())
                .collect()
        })
        .collect();
    let gen = GenScoreModel { score, theta_exponent: config.theta_exponent };

    let exo_match = match &config.match_model {
        MatchModel::Generative => None,
        MatchModel::Exogenous(params) => {
            Some(sample_exo_match(params, n_av, n_mar, &mut rng))
        }
    };

    Ok(Scenario {
        avs,
        rsus,
        mars,
        channel,
        gen,
        gamma: config.gamma,
        seed,
        estimator_samples: config.estimator_samples,
        resample: ResampleSpec { hits: config.ar.hits.clone(), gen_score: config.gen_score.clone() },
        exo_match,
    })
}

/// Draw an exogenous match-quality table: m[i][k] = scale_k * X_i * z_{i,k}.
pub fn sample_exo_match<R: Rng + ?Sized>(
    params: &ExoMatchParams,
    n_av: usize,
    n_mar: usize,
    rng: &mut R,
) -> ExoMatch {
    let m = (0..n_av)
        .map(|_| {
            let common = Dist::LogNormal { mu: 0.0, sigma: params.common_sigma }.sample(rng);
            (0..n_mar)
                .map(|k| {
                    let (scale, sigma) = if k == 0 {
                        (params.functional_scale, params.functional_sigma)
                    } else {
                        (params.infotainment_scale, params.infotainment_sigma)
                    };
                    scale * common * Dist::LogNormal { mu: 0.0, sigma }.sample(rng)
                })
                .collect()
        })
        .collect();
    ExoMatch { params: params.clone(), m }
}

// ---------------------------------------------------------------------------
// Validation
// ---------------------------------------------------------------------------

/// A single invariant violation found in a scenario.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub entity: String,
    pub field: String,
    pub rule: String,
}

impl std::fmt::Display for Violation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}.{}: {}", self.entity, self.field, self.rule)
    }
}

fn violation(entity: impl Into<String>, field: &str, rule: &str) -> Violation {
    Violation { entity: entity.into(), field: field.to_string(), rule: rule.to_string() }
}

/// Check every type invariant; returns an empty list iff the scenario is
/// well formed. Total function: never errors.
pub fn validate_scenario(s: &Scenario) -> Vec<Violation> {
    let mut out = Vec::new();

    if s.avs.is_empty() {
        out.push(violation("scenario", "avs", "entity list must be non-empty"));
    }
    if s.rsus.is_empty() {
        out.push(violation("scenario", "rsus", "entity list must be non-empty"));
    }
    if s.mars.is_empty() {
        out.push(violation("scenario", "mars", "entity list must be non-empty"));
    }
    if !(s.gamma >= 0.0) {
        out.push(violation("scenario", "gamma", "must be >= 0"));
    }
    if !(s.gen.theta_exponent >= 1.0) {
        out.push(violation("gen", "theta_exponent", "must be >= 1 (theta convex, non-decreasing)"));
    }

    for av in &s.avs {
        let ent = format!("av[{}]", av.id);
        if !(av.value > 0.0) {
            out.push(violation(&ent, "value", "must be > 0"));
        }
        if !(av.tx_power_mw >= 0.0) {
            out.push(violation(&ent, "tx_power_mw", "must be >= 0"));
        }
        if av.cache_size < 1 {
            out.push(violation(&ent, "cache_size", "must be >= 1"));
        }
        if av.tasks.is_empty() {
            out.push(violation(&ent, "tasks", "must be non-empty"));
        }
        for (n, t) in av.tasks.iter().enumerate() {
            let tent = format!("{ent}.task[{n}]");
            if !(t.size_bits >= 0.0) || !(t.size_bits > 0.0) {
                out.push(violation(&tent, "size_bits", "must be > 0"));
            }
            if !(t.cycles_per_bit >= 0.0) {
                out.push(violation(&tent, "cycles_per_bit", "must be >= 0"));
            }
            if !(t.deadline_s > 0.0) {
                out.push(violation(&tent, "deadline_s", "must be > 0"));
            }
        }
    }

    for rsu in &s.rsus {
        let ent = format!("rsu[{}]", rsu.id);
        for (field, v) in [
            ("uplink_bw_hz", rsu.uplink_bw_hz),
            ("downlink_bw_hz", rsu.downlink_bw_hz),
            ("cpu_freq_hz", rsu.cpu_freq_hz),
            ("gpu_freq_hz", rsu.gpu_freq_hz),
            ("tx_power_mw", rsu.tx_power_mw),
            ("noise_mw", rsu.noise_mw),
        ] {
            if !(v > 0.0) {
                out.push(violation(&ent, field, "must be > 0"));
            }
        }
    }

    let n_functional = s.mars.iter().filter(|m| m.kind == MarKind::Functional).count();
    if n_functional != 1 {
        out.push(violation("mars", "kind", "exactly one functional recommender required"));
    }
    if !s.mars.is_empty() && s.mars[0].kind != MarKind::Functional {
        out.push(violation("mars", "kind", "the functional recommender must be index 0"));
    }
    for mar in &s.mars {
        let ent = format!("mar[{}]", mar.id);
        if !(mar.ar_size_bits > 0.0) {
            out.push(violation(&ent, "ar_size_bits", "must be > 0"));
        }
        if !(mar.ar_cycles_per_bit >= 0.0) {
            out.push(violation(&ent, "ar_cycles_per_bit", "must be >= 0"));
        }
        if !(mar.bid >= 0.0) {
            out.push(violation(&ent, "bid", "must be >= 0"));
        }
        if mar.hits.len() != s.avs.len() {
            out.push(violation(&ent, "hits", "must have one entry per AV"));
        }
        for (i, &h) in mar.hits.iter().enumerate() {
            if i < s.avs.len() && h > s.avs[i].cache_size {
                out.push(violation(
                    &ent,
                    "hits",
                    "hit count exceeds the paired AV's cache capacity",
                ));
            }
        }
    }

    if s.channel.gain.len() != s.avs.len() {
        out.push(violation("channel", "gain", "must have one row per AV"));
    }
    for (i, row) in s.channel.gain.iter().enumerate() {
        if row.len() != s.rsus.len() {
            out.push(violation("channel", "gain", "each row must have one entry per RSU"));
        }
        for &g in row {
            if !(g >= 0.0) {
                out.push(violation(format!("channel.gain[{i}]"), "gain", "must be >= 0"));
            }
        }
    }
    if s.channel.noise_mw.len() != s.avs.len() {
        out.push(violation("channel", "noise_mw", "must have one entry per AV"));
    }
    for (i, &n) in s.channel.noise_mw.iter().enumerate() {
        if !(n > 0.0) {
            out.push(violation(format!("channel.noise_mw[{i}]"), "noise_mw", "must be > 0"));
        }
    }

    if s.gen.score.len() != s.avs.len() {
        out.push(violation("gen", "score", "must have one row per AV"));
    } else {
        for (i, per_rsu) in s.gen.score.iter().enumerate() {
            if per_rsu.len() != s.rsus.len() {
                out.push(violation("gen", "score", "each AV row must have one entry per RSU"));
                continue;
            }
            for per_mar in per_rsu {
                if per_mar.len() != s.mars.len() {
                    out.push(violation("gen", "score", "each RSU row must have one entry per MAR"));
                    continue;
                }
                for &g in per_mar {
                    if !(0.0..=1.0).contains(&g) {
                        out.push(violation(
                            format!("gen.score[{i}]"),
                            "score",
                            "must lie in [0, 1]",
                        ));
                    }
                }
            }
        }
    }

    if let Some(exo) = &s.exo_match {
        if exo.m.len() != s.avs.len() || exo.m.iter().any(|row| row.len() != s.mars.len()) {
            out.push(violation("exo_match", "m", "must be an (AV x MAR) table"));
        }
        for row in &exo.m {
            for &m in row {
                if !(m >= 0.0) || !m.is_finite() {
                    out.push(violation("exo_match", "m", "must be finite and >= 0"));
                }
            }
        }
    }

    out
}
