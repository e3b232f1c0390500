//! Shared-medium environment: random packet loss, external channel
//! occupancy, and background traffic sources.
//!
//! The vehicular channel is abstracted into two knobs that reproduce its
//! queue-level effects: an on/off occupancy process that steals airtime
//! from the station, and a per-transmission loss model (Bernoulli or
//! two-state Gilbert-Elliott).

use rand::Rng;
use rand_distr::{Distribution, Exp};
use serde::Deserialize;
use thiserror::Error;

use crate::units::{Nanos, NANOS_PER_SEC};

/// Per-transmission loss model.
#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LossModel {
    Bernoulli {
        p: f64,
    },
    GilbertElliott {
        p_good_to_bad: f64,
        p_bad_to_good: f64,
        loss_good: f64,
        loss_bad: f64,
    },
}

impl Default for LossModel {
    fn default() -> Self {
        LossModel::Bernoulli { p: 0.0 }
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum ChannelConfigError {
    #[error("{name} must be a probability in [0, 1], got {value}")]
    ProbabilityOutOfRange { name: &'static str, value: f64 },
    #[error("{name} must be positive and finite, got {value}")]
    NonPositiveDuration { name: &'static str, value: f64 },
    #[error("background source {index}: {reason}")]
    BadBackgroundSource { index: usize, reason: String },
}

impl LossModel {
    pub fn validate(&self) -> Result<(), ChannelConfigError> {
        let check = |name: &'static str, value: f64| {
            if !(0.0..=1.0).contains(&value) || !value.is_finite() {
                Err(ChannelConfigError::ProbabilityOutOfRange { name, value })
            } else {
                Ok(())
            }
        };
        match *self {
            LossModel::Bernoulli { p } => check("loss.p", p),
            LossModel::GilbertElliott {
                p_good_to_bad,
                p_bad_to_good,
                loss_good,
                loss_bad,
            } => {
                check("loss.p_good_to_bad", p_good_to_bad)?;
                check("loss.p_bad_to_good", p_bad_to_good)?;
                check("loss.loss_good", loss_good)?;
                check("loss.loss_bad", loss_bad)
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum GeState {
    Good,
    Bad,
}

/// A seeded loss process; one per simulation.
#[derive(Debug)]
pub struct LossProcess<R: Rng> {
    model: LossModel,
    state: GeState,
    rng: R,
}

impl<R: Rng> LossProcess<R> {
    pub fn new(model: LossModel, rng: R) -> Self {
        Self {
            model,
            state: GeState::Good,
            rng,
        }
    }

    /// Was this transmission lost? For Gilbert-Elliott the loss is drawn
    /// from the current state, then the state transitions for the next one.
    pub fn sample_loss(&mut self) -> bool {
        match self.model {
            LossModel::Bernoulli { p } => {
                if p <= 0.0 {
                    false
                } else if p >= 1.0 {
                    true
                } else {
                    self.rng.random::<f64>() < p
                }
            }
            LossModel::GilbertElliott {
                p_good_to_bad,
                p_bad_to_good,
                loss_good,
                loss_bad,
            } => {
                let (loss_p, transition_p) = match self.state {
                    GeState::Good => (loss_good, p_good_to_bad),
                    GeState::Bad => (loss_bad, p_bad_to_good),
                };
                let lost = loss_p > 0.0 && self.rng.random::<f64>() < loss_p;
                if transition_p > 0.0 && self.rng.random::<f64>() < transition_p {
                    self.state = match self.state {
                        GeState::Good => GeState::Bad,
                        GeState::Bad => GeState::Good,
                    };
                }
                lost
            }
        }
    }
}

/// External channel occupancy: alternating exponential idle/busy periods
/// from contending stations the simulator does not model individually.
#[derive(Debug)]
pub struct BusyProcess<R: Rng> {
    mean_busy_ns: f64,
    mean_idle_ns: f64,
    cursor: Nanos,
    rng: R,
}

impl<R: Rng> BusyProcess<R> {
    /// `mean_busy_us == 0` disables the process entirely.
    pub fn new(mean_busy_us: f64, mean_idle_us: f64, rng: R) -> Self {
        Self {
            mean_busy_ns: mean_busy_us * 1e3,
            mean_idle_ns: mean_idle_us * 1e3,
            cursor: 0,
            rng,
        }
    }

    pub fn enabled(&self) -> bool {
        self.mean_busy_ns > 0.0
    }

    /// Next busy interval `(start, end)`, strictly after the previous one.
    pub fn next_interval(&mut self) -> Option<(Nanos, Nanos)> {
        if !self.enabled() {
            return None;
        }
        let idle = sample_exp(&mut self.rng, self.mean_idle_ns).max(1);
        let busy = sample_exp(&mut self.rng, self.mean_busy_ns).max(1);
        let start = self.cursor + idle;
        let end = start + busy;
        self.cursor = end;
        Some((start, end))
    }
}

fn sample_exp<R: Rng>(rng: &mut R, mean_ns: f64) -> Nanos {
    debug_assert!(mean_ns > 0.0);
    let exp = Exp::new(1.0 / mean_ns).expect("positive rate");
    exp.sample(rng).round() as Nanos
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ArrivalPattern {
    Cbr,
    Poisson,
}

/// A constant-rate or Poisson traffic source feeding one AC.
#[derive(Debug, Clone, PartialEq, Deserialize)]
pub struct BackgroundSource {
    pub target_ac: usize,
    pub packet_size: u32,
    /// Mean arrival rate in packets per second.
    pub rate_pps: f64,
    pub pattern: ArrivalPattern,
}

impl BackgroundSource {
    pub fn validate(&self, index: usize) -> Result<(), ChannelConfigError> {
        let bad = |reason: String| ChannelConfigError::BadBackgroundSource { index, reason };
        if self.target_ac >= crate::edca::AC_COUNT {
            return Err(bad(format!("target_ac {} out of range", self.target_ac)));
        }
        if self.packet_size == 0 {
            return Err(bad("packet_size must be at least 1".into()));
        }
        if !self.rate_pps.is_finite() || self.rate_pps < 0.0 {
            return Err(bad(format!("rate_pps must be >= 0, got {}", self.rate_pps)));
        }
        if self.rate_pps > 1e6 {
            return Err(bad(format!(
                "rate_pps {} is unreasonably high (max 1e6)",
                self.rate_pps
            )));
        }
        Ok(())
    }
}

/// Arrival times in `[0, horizon)` for one background source.
///
/// CBR places arrivals at exact multiples of the period starting at 0;
/// Poisson draws exponential inter-arrival gaps.
pub fn generate_background<R: Rng>(
    source: &BackgroundSource,
    horizon_ns: Nanos,
    rng: &mut R,
) -> Vec<Nanos> {
    if source.rate_pps <= 0.0 {
        return Vec::new();
    }
    let period_ns = NANOS_PER_SEC as f64 / source.rate_pps;
    match source.pattern {
        ArrivalPattern::Cbr => {
            let mut arrivals = Vec::new();
            let mut k = 0u64;
            loop {
                let t = (k as f64 * period_ns).round() as Nanos;
                if t >= horizon_ns {
                    break;
                }
                arrivals.push(t);
                k += 1;
            }
            arrivals
        }
        ArrivalPattern::Poisson => {
            let mut arrivals = Vec::new();
            let mut t: Nanos = 0;
            loop {
                t += sample_exp(rng, period_ns).max(1);
                if t >= horizon_ns {
                    break;
                }
                arrivals.push(t);
            }
            arrivals
        }
    }
}
