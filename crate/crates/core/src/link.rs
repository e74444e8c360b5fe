//! Shannon-rate link budgets and digital-twin delay components.
//!
//! Rates use base-2 logarithms (bits/s) over linear-power SNR: no dB anywhere.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::market::{AvProfile, ChannelState, DtTask, RsuProfile};

/// Uplink/downlink capacities for one (AV, RSU) pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinkBudget {
    pub uplink_bps: f64,
    pub downlink_bps: f64,
}

/// B * log2(1 + g*p/noise).
#[inline]
pub fn shannon_rate(bandwidth_hz: f64, gain: f64, power_mw: f64, noise_mw: f64) -> Result<f64> {
    if !(noise_mw > 0.0) {
        return Err(Error::domain(format!("noise power must be > 0 mW, got {noise_mw}")));
    }
    let snr = gain * power_mw / noise_mw;
    Ok(bandwidth_hz * (1.0 + snr).log2())
}

/// Uplink rate for AV `av` transmitting to RSU `rsu` (bits/s).
pub fn uplink_rate(av: &AvProfile, rsu: &RsuProfile, channel: &ChannelState) -> Result<f64> {
    shannon_rate(rsu.uplink_bw_hz, channel.gain(av.id, rsu.id), av.tx_power_mw, rsu.noise_mw)
}

/// Downlink rate from RSU `rsu` to AV `av` (bits/s).
pub fn downlink_rate(av: &AvProfile, rsu: &RsuProfile, channel: &ChannelState) -> Result<f64> {
    shannon_rate(
        rsu.downlink_bw_hz,
        channel.gain(av.id, rsu.id),
        rsu.tx_power_mw,
        channel.noise_mw[av.id],
    )
}

pub fn link_budget(av: &AvProfile, rsu: &RsuProfile, channel: &ChannelState) -> Result<LinkBudget> {
    Ok(LinkBudget {
        uplink_bps: uplink_rate(av, rsu, channel)?,
        downlink_bps: downlink_rate(av, rsu, channel)?,
    })
}

/// Upload delay s / R for one task; a zero-capacity link cannot carry the task.
pub fn dt_upload_delay(task: &DtTask, uplink_bps: f64) -> Result<f64> {
    if !(uplink_bps > 0.0) {
        return Err(Error::InfeasibleLink(format!(
            "uplink rate {uplink_bps} bits/s cannot carry a task upload"
        )));
    }
    Ok(task.size_bits / uplink_bps)
}

/// Compute delay s * e / f_cpu for one task.
pub fn dt_compute_delay(task: &DtTask, rsu: &RsuProfile) -> Result<f64> {
    if !(rsu.cpu_freq_hz > 0.0) {
        return Err(Error::domain(format!("CPU frequency must be > 0, got {}", rsu.cpu_freq_hz)));
    }
    Ok(task.size_bits * task.cycles_per_bit / rsu.cpu_freq_hz)
}
