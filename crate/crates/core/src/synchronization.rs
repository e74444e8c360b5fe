//! Match quality and AR rendering/streaming delays.
//!
//! The generative pipeline streams AI-personalized AR layers into the deadline
//! slack left after a DT task's upload and compute phases. The number of
//! generated layers per hit cache drives both the match quality and the AR
//! transmission/computation delays; a "+1" floor guarantees at least one base
//! layer is always streamed. AR content flows on the downlink, so the AR
//! streaming rate is the pair's downlink rate.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::market::{DtTask, MarProfile, RsuProfile};

/// Which branch the zero-hit-cache handling took for a match-quality value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum HitBranch {
    /// h > 0: the standard form theta(G * count / h) * h.
    Standard,
    /// h = 0 with theta linear (beta = 1): the h-free simplified form.
    ZeroHitsLinear,
    /// h = 0 with beta > 1: no finite limit exists; quality is 0.
    ZeroHitsDegenerate,
}

/// Per-task delay breakdown for one (AV, RSU, MAR) allocation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SyncEvaluation {
    /// DT upload delay (s).
    pub t_dt: f64,
    /// DT compute delay (s).
    pub l_dt: f64,
    /// AR transmission delay (s).
    pub t_ar: f64,
    /// AR rendering delay (s).
    pub l_ar: f64,
    /// Generative match quality for this task.
    pub match_quality: f64,
    /// Allocation-weighted total synchronization delay (s).
    pub total_delay: f64,
    /// total_delay <= task deadline.
    pub feasible: bool,
}

/// Deadline slack after the DT phases, clamped at zero.
#[inline]
pub fn deadline_slack(deadline_s: f64, t_dt: f64, l_dt: f64) -> f64 {
    (deadline_s - t_dt - l_dt).max(0.0)
}

/// Total number of AR recommendations the downlink can carry in the slack
/// window: (d - t_dt - l_dt) * R / s_ar. Returns 0 when no slack remains (the
/// window is exhausted, not an error).
pub fn recommendation_count(
    task: &DtTask,
    downlink_bps: f64,
    mar: &MarProfile,
    t_dt: f64,
    l_dt: f64,
) -> f64 {
    deadline_slack(task.deadline_s, t_dt, l_dt) * downlink_bps / mar.ar_size_bits
}

/// Generated layers per hit cache: G * count / h. With no hit caches the
/// pipeline personalizes against the whole preference stream, so the count
/// falls back to the h-free total (the h = 1 form, matching the linear-theta
/// algebra where h cancels).
#[inline]
fn layers_per_hit(g_score: f64, count: f64, hits: u64) -> f64 {
    if hits == 0 {
        g_score * count
    } else {
        g_score * count / hits as f64
    }
}

/// theta(x) = x^beta, convex and non-decreasing for beta >= 1.
#[inline]
pub fn theta(x: f64, exponent: f64) -> f64 {
    if exponent == 1.0 {
        x
    } else {
        x.powf(exponent)
    }
}

/// Generative match quality: theta(G * count / h) * h with theta(x) = x^beta.
#[allow(clippy::too_many_arguments)]
pub fn match_quality(
    task: &DtTask,
    downlink_bps: f64,
    mar: &MarProfile,
    hits: u64,
    g_score: f64,
    theta_exponent: f64,
    t_dt: f64,
    l_dt: f64,
) -> f64 {
    match_quality_with_branch(task, downlink_bps, mar, hits, g_score, theta_exponent, t_dt, l_dt).0
}

/// As `match_quality`, also reporting which zero-hit branch fired.
#[allow(clippy::too_many_arguments)]
pub fn match_quality_with_branch(
    task: &DtTask,
    downlink_bps: f64,
    mar: &MarProfile,
    hits: u64,
    g_score: f64,
    theta_exponent: f64,
    t_dt: f64,
    l_dt: f64,
) -> (f64, HitBranch) {
    let count = recommendation_count(task, downlink_bps, mar, t_dt, l_dt);
    if hits == 0 {
        if theta_exponent == 1.0 {
            // h cancels algebraically when theta is linear.
            (g_score * count, HitBranch::ZeroHitsLinear)
        } else {
            (0.0, HitBranch::ZeroHitsDegenerate)
        }
    } else {
        let h = hits as f64;
        (theta(g_score * count / h, theta_exponent) * h, HitBranch::Standard)
    }
}

/// AR transmission delay: (G * count / h + 1) * s_ar / R_d.
#[allow(clippy::too_many_arguments)]
pub fn ar_transmission_delay(
    task: &DtTask,
    downlink_bps: f64,
    mar: &MarProfile,
    hits: u64,
    g_score: f64,
    t_dt: f64,
    l_dt: f64,
) -> Result<f64> {
    if !(downlink_bps > 0.0) {
        return Err(Error::InfeasibleLink(format!(
            "downlink rate {downlink_bps} bits/s cannot stream AR layers"
        )));
    }
    let count = recommendation_count(task, downlink_bps, mar, t_dt, l_dt);
    let layers = layers_per_hit(g_score, count, hits) + 1.0;
    Ok(layers * mar.ar_size_bits / downlink_bps)
}

/// AR rendering delay: (G * count / h + 1) * s_ar * e_ar / f_gpu.
#[allow(clippy::too_many_arguments)]
pub fn ar_compute_delay(
    task: &DtTask,
    downlink_bps: f64,
    mar: &MarProfile,
    rsu: &RsuProfile,
    hits: u64,
    g_score: f64,
    t_dt: f64,
    l_dt: f64,
) -> Result<f64> {
    if !(rsu.gpu_freq_hz > 0.0) {
        return Err(Error::domain(format!("GPU frequency must be > 0, got {}", rsu.gpu_freq_hz)));
    }
    let count = recommendation_count(task, downlink_bps, mar, t_dt, l_dt);
    let layers = layers_per_hit(g_score, count, hits) + 1.0;
    Ok(layers * mar.ar_size_bits * mar.ar_cycles_per_bit / rsu.gpu_freq_hz)
}

/// Allocation-weighted total synchronization delay for one task:
/// g_dt * (t_dt + l_dt) + g_ar * (t_ar + l_ar), with feasibility against the
/// task deadline.
#[allow(clippy::too_many_arguments)]
pub fn total_delay(
    task: &DtTask,
    t_dt: f64,
    l_dt: f64,
    t_ar: f64,
    l_ar: f64,
    match_quality: f64,
    dt_allocated: bool,
    ar_allocated: bool,
) -> SyncEvaluation {
    let dt = if dt_allocated { t_dt + l_dt } else { 0.0 };
    let ar = if ar_allocated { t_ar + l_ar } else { 0.0 };
    let total = dt + ar;
    SyncEvaluation {
        t_dt,
        l_dt,
        t_ar,
        l_ar,
        match_quality,
        total_delay: total,
        feasible: total <= task.deadline_s,
    }
}
