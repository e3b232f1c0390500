//! Video packet to access category mapping policies.
//!
//! Three policies are compared: `baseline` keeps every video packet in
//! AC[2]; `static` routes the odd description to AC[2] and the even one to
//! AC[1]; `adaptive` demotes packets to AC[1]/AC[0] with a probability that
//! grows linearly with the AC[2] queue fill between two RED-style
//! thresholds, scaled per description so the protected description (D1)
//! never leaves the video queue while the fill stays in the band.

use rand::Rng;
use serde::Deserialize;
use thiserror::Error;

use crate::trace::{Description, Packet};

/// Default per-description demotion probabilities: D1 protected, D2 sacrificed.
pub const DEFAULT_P_D1: f64 = 0.0;
pub const DEFAULT_P_D2: f64 = 0.6;
/// Default queue-length thresholds in packets.
pub const DEFAULT_QTH_LOW: u32 = 20;
pub const DEFAULT_QTH_HIGH: u32 = 45;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MapperPolicy {
    Baseline,
    Static,
    Adaptive,
}

impl MapperPolicy {
    pub fn label(self) -> &'static str {
        match self {
            MapperPolicy::Baseline => "baseline",
            MapperPolicy::Static => "static",
            MapperPolicy::Adaptive => "adaptive",
        }
    }

    pub const ALL: [MapperPolicy; 3] = [
        MapperPolicy::Baseline,
        MapperPolicy::Static,
        MapperPolicy::Adaptive,
    ];
}

impl std::str::FromStr for MapperPolicy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "baseline" | "edca" => Ok(MapperPolicy::Baseline),
            "static" => Ok(MapperPolicy::Static),
            "adaptive" => Ok(MapperPolicy::Adaptive),
            other => Err(format!(
                "unknown mapper policy {other:?} (expected baseline, static or adaptive)"
            )),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MapperConfig {
    /// Base demotion probability for the odd description D1.
    pub p_d1: f64,
    /// Base demotion probability for the even description D2.
    pub p_d2: f64,
    pub qth_low: u32,
    pub qth_high: u32,
}

impl Default for MapperConfig {
    fn default() -> Self {
        Self {
            p_d1: DEFAULT_P_D1,
            p_d2: DEFAULT_P_D2,
            qth_low: DEFAULT_QTH_LOW,
            qth_high: DEFAULT_QTH_HIGH,
        }
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum MapperConfigError {
    #[error("p_descrip for {description} must lie in [0, 1], got {value}")]
    ProbabilityOutOfRange {
        description: &'static str,
        value: f64,
    },
    #[error("p_d2 ({p_d2}) must be >= p_d1 ({p_d1}): the even description is the sacrificed one")]
    DescriptionOrder { p_d1: f64, p_d2: f64 },
    #[error("thresholds must satisfy qth_low < qth_high, got {qth_low} / {qth_high}")]
    ThresholdOrder { qth_low: u32, qth_high: u32 },
    #[error("qth_high ({qth_high}) must not exceed the queue capacity ({capacity})")]
    ThresholdAboveCapacity { qth_high: u32, capacity: u32 },
}

impl MapperConfig {
    pub fn p_for(&self, description: Description) -> f64 {
        match description {
            Description::D1 => self.p_d1,
            Description::D2 => self.p_d2,
        }
    }

    pub fn validate(&self, queue_capacity: u32) -> Result<(), MapperConfigError> {
        for (label, value) in [("D1", self.p_d1), ("D2", self.p_d2)] {
            if !(0.0..=1.0).contains(&value) || !value.is_finite() {
                return Err(MapperConfigError::ProbabilityOutOfRange {
                    description: label,
                    value,
                });
            }
        }
        if self.p_d2 < self.p_d1 {
            return Err(MapperConfigError::DescriptionOrder {
                p_d1: self.p_d1,
                p_d2: self.p_d2,
            });
        }
        if self.qth_low >= self.qth_high {
            return Err(MapperConfigError::ThresholdOrder {
                qth_low: self.qth_low,
                qth_high: self.qth_high,
            });
        }
        if self.qth_high > queue_capacity {
            return Err(MapperConfigError::ThresholdAboveCapacity {
                qth_high: self.qth_high,
                capacity: queue_capacity,
            });
        }
        Ok(())
    }
}

/// One mapping decision, with the probability and draw kept for audit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MappingDecision {
    /// Target access category; always 0, 1 or 2 for video packets.
    pub target_ac: usize,
    /// The demotion probability in force for this decision.
    pub p_new: f64,
    /// Uniform draw in `[0, 1)` when one was needed.
    pub rng_draw: Option<f64>,
}

impl MappingDecision {
    fn fixed(target_ac: usize) -> Self {
        Self {
            target_ac,
            p_new: 0.0,
            rng_draw: None,
        }
    }
}

/// Baseline EDCA behaviour: every video packet goes to AC[2].
pub fn map_baseline(_packet: &Packet) -> MappingDecision {
    MappingDecision::fixed(2)
}

/// Static split: odd description on AC[2], even description on AC[1].
pub fn map_static(packet: &Packet) -> MappingDecision {
    match packet.description {
        Description::D1 => MappingDecision::fixed(2),
        Description::D2 => MappingDecision::fixed(1),
    }
}

/// Queue-scaled demotion probability, clamped to `[0, p_descrip]`.
pub fn compute_p_new(p_descrip: f64, qlen_ac2: u32, qth_low: u32, qth_high: u32) -> f64 {
    debug_assert!(qth_low < qth_high);
    let span = f64::from(qth_high - qth_low);
    let raw = p_descrip * (f64::from(qlen_ac2) - f64::from(qth_low)) / span;
    raw.clamp(0.0, p_descrip)
}

/// Adaptive decision for a given uniform draw; pure and fully testable.
///
/// Below `qth_low` everything stays in AC[2]. Inside the closed band the
/// packet moves to AC[1] with probability `p_new`. Strictly above
/// `qth_high` the packet leaves AC[2]: AC[0] with probability `p_descrip`,
/// AC[1] otherwise.
pub fn map_adaptive_with_draw(
    packet: &Packet,
    qlen_ac2: u32,
    config: &MapperConfig,
    draw: f64,
) -> MappingDecision {
    let p_descrip = config.p_for(packet.description);
    if qlen_ac2 < config.qth_low {
        return MappingDecision::fixed(2);
    }
    if qlen_ac2 <= config.qth_high {
        let p_new = compute_p_new(p_descrip, qlen_ac2, config.qth_low, config.qth_high);
        let target_ac = if draw < p_new { 1 } else { 2 };
        return MappingDecision {
            target_ac,
            p_new,
            rng_draw: Some(draw),
        };
    }
    let target_ac = if draw < p_descrip { 0 } else { 1 };
    MappingDecision {
        target_ac,
        p_new: p_descrip,
        rng_draw: Some(draw),
    }
}

/// Adaptive decision using the mapper's own random stream.
pub fn map_adaptive<R: Rng + ?Sized>(
    packet: &Packet,
    qlen_ac2: u32,
    config: &MapperConfig,
    rng: &mut R,
) -> MappingDecision {
    if qlen_ac2 < config.qth_low {
        // No draw consumed: below the band the policy is deterministic,
        // which keeps low-load adaptive runs identical to baseline runs.
        return MappingDecision::fixed(2);
    }
    let draw: f64 = rng.random();
    map_adaptive_with_draw(packet, qlen_ac2, config, draw)
}

/// A policy plus the state it needs; owned by exactly one simulation.
#[derive(Debug)]
pub struct Mapper<R: Rng> {
    policy: MapperPolicy,
    config: MapperConfig,
    rng: R,
}

impl<R: Rng> Mapper<R> {
    pub fn new(policy: MapperPolicy, config: MapperConfig, rng: R) -> Self {
        Self {
            policy,
            config,
            rng,
        }
    }

    pub fn policy(&self) -> MapperPolicy {
        self.policy
    }

    /// Decide the access category for `packet` given the current AC[2]
    /// queue length (sampled after purging, before this enqueue).
    pub fn map(&mut self, packet: &Packet, qlen_ac2: u32) -> MappingDecision {
        match self.policy {
            MapperPolicy::Baseline => map_baseline(packet),
            MapperPolicy::Static => map_static(packet),
            MapperPolicy::Adaptive => map_adaptive(packet, qlen_ac2, &self.config, &mut self.rng),
        }
    }
}
