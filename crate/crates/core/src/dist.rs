//! Configurable sampling distributions.
//!
//! These are the building blocks of the scenario configuration schema. Values
//! are expressed in the units the configuration documents (MB, MHz, GHz, mW,
//! seconds); unit conversion to SI happens at scenario-construction time.

use rand::Rng;
use rand_distr::{Distribution, Normal, Zipf};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Lower clamp applied to |N(mean, std)| draws so noise powers stay positive.
pub const ABS_NORMAL_FLOOR: f64 = 1e-6;

fn default_floor() -> f64 {
    ABS_NORMAL_FLOOR
}

/// A real-valued sampling distribution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Dist {
    /// Degenerate distribution: always `value`.
    Constant { value: f64 },
    /// Uniform on the closed interval [low, high].
    Uniform { low: f64, high: f64 },
    /// |N(mean, std_dev)| clamped below at `floor`.
    AbsNormal {
        mean: f64,
        std_dev: f64,
        #[serde(default = "default_floor")]
        floor: f64,
    },
    /// Log-normal: exp(N(mu, sigma)).
    LogNormal { mu: f64, sigma: f64 },
}

impl Dist {
    pub fn constant(value: f64) -> Self {
        Dist::Constant { value }
    }

    pub fn uniform(low: f64, high: f64) -> Self {
        Dist::Uniform { low, high }
    }

    pub fn validate(&self, name: &str) -> Result<()> {
        match self {
            Dist::Constant { value } => {
                if !value.is_finite() {
                    return Err(Error::config(format!("{name}: constant must be finite")));
                }
            }
            Dist::Uniform { low, high } => {
                if !(low.is_finite() && high.is_finite()) {
                    return Err(Error::config(format!("{name}: uniform bounds must be finite")));
                }
                if low > high {
                    return Err(Error::config(format!(
                        "{name}: uniform bounds out of order ({low} > {high})"
                    )));
                }
            }
            Dist::AbsNormal { mean, std_dev, floor } => {
                if !(mean.is_finite() && std_dev.is_finite() && floor.is_finite()) {
                    return Err(Error::config(format!("{name}: abs_normal parameters must be finite")));
                }
                if *std_dev < 0.0 {
                    return Err(Error::config(format!("{name}: abs_normal std_dev must be >= 0")));
                }
                if *floor < 0.0 {
                    return Err(Error::config(format!("{name}: abs_normal floor must be >= 0")));
                }
            }
            Dist::LogNormal { mu, sigma } => {
                if !(mu.is_finite() && sigma.is_finite()) {
                    return Err(Error::config(format!("{name}: log_normal parameters must be finite")));
                }
                if *sigma < 0.0 {
                    return Err(Error::config(format!("{name}: log_normal sigma must be >= 0")));
                }
            }
        }
        Ok(())
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self {
            Dist::Constant { value } => *value,
            Dist::Uniform { low, high } => {
                if low == high {
                    *low
                } else {
                    rng.random_range(*low..=*high)
                }
            }
            Dist::AbsNormal { mean, std_dev, floor } => {
                let normal = Normal::new(*mean, *std_dev).expect("validated parameters");
                normal.sample(rng).abs().max(*floor)
            }
            Dist::LogNormal { mu, sigma } => {
                let normal = Normal::new(*mu, *sigma).expect("validated parameters");
                normal.sample(rng).exp()
            }
        }
    }

    /// Closed support bounds, used by sampling-validity checks.
    pub fn support(&self) -> (f64, f64) {
        match self {
            Dist::Constant { value } => (*value, *value),
            Dist::Uniform { low, high } => (*low, *high),
            Dist::AbsNormal { floor, .. } => (*floor, f64::INFINITY),
            Dist::LogNormal { .. } => (0.0, f64::INFINITY),
        }
    }
}

/// An integer-valued sampling distribution (counts).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IntDist {
    Constant { value: u64 },
    /// Uniform on the inclusive integer range [low, high].
    Uniform { low: u64, high: u64 },
    /// Zipf with the given exponent over {1, 2, ...}. Draws above `max_value`
    /// are clamped to it; callers may clamp further (e.g. to a cache size).
    Zipf {
        exponent: f64,
        #[serde(default = "default_zipf_max")]
        max_value: u64,
    },
}

fn default_zipf_max() -> u64 {
    1_000_000
}

impl IntDist {
    pub fn validate(&self, name: &str) -> Result<()> {
        match self {
            IntDist::Constant { .. } => Ok(()),
            IntDist::Uniform { low, high } => {
                if low > high {
                    Err(Error::config(format!(
                        "{name}: uniform bounds out of order ({low} > {high})"
                    )))
                } else {
                    Ok(())
                }
            }
            IntDist::Zipf { exponent, max_value } => {
                if !exponent.is_finite() || *exponent <= 0.0 {
                    Err(Error::config(format!("{name}: zipf exponent must be > 0")))
                } else if *max_value < 1 {
                    Err(Error::config(format!("{name}: zipf max_value must be >= 1")))
                } else {
                    Ok(())
                }
            }
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> u64 {
        match self {
            IntDist::Constant { value } => *value,
            IntDist::Uniform { low, high } => {
                if low == high {
                    *low
                } else {
                    rng.random_range(*low..=*high)
                }
            }
            IntDist::Zipf { exponent, max_value } => {
                let zipf = Zipf::new(*max_value as f64, *exponent).expect("validated parameters");
                (zipf.sample(rng) as u64).min(*max_value)
            }
        }
    }
}
