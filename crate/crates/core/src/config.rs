//! Scenario configuration: a TOML file with `[run]`, `[trace]`, `[mac]`,
//! `[mapper]`, `[channel]` and repeated `[[background]]` sections.
//!
//! Two presets ship with the library: `scenario1` (saturating, video-only)
//! and `scenario2` (multi-stream coexistence over a milder channel). The
//! trace key accepts either a file path or `builtin:bqmall` for the
//! bundled synthetic 10 s / 60 fps trace.

use std::path::{Path, PathBuf};

use serde::Deserialize;
use thiserror::Error;

use crate::channel::{BackgroundSource, ChannelConfigError, LossModel};
use crate::edca::{
    standard_ac_set, AcConfigError, MacParams, ParameterSet, DEFAULT_QUEUE_CAPACITY,
    DEFAULT_RETRY_LIMIT, DEFAULT_SIFS_US, DEFAULT_SLOT_US,
};
use crate::mapper::{MapperConfig, MapperConfigError, MapperPolicy};
use crate::trace::{self, TraceError, VideoTraceFrame, DEFAULT_LATENCY_BUDGET_MS, DEFAULT_MTU};

pub const PRESET_SCENARIO1: &str = include_str!("../presets/scenario1.toml");
pub const PRESET_SCENARIO2: &str = include_str!("../presets/scenario2.toml");

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Read {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("cannot parse config: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("run.{field}: {reason}")]
    BadRunField { field: &'static str, reason: String },
    #[error("trace.{field}: {reason}")]
    BadTraceField { field: &'static str, reason: String },
    #[error("mac: {0}")]
    BadAc(#[from] AcConfigError),
    #[error("mac.{field}: {reason}")]
    BadMacField { field: &'static str, reason: String },
    #[error("mapper: {0}")]
    BadMapper(#[from] MapperConfigError),
    #[error("channel: {0}")]
    BadChannel(#[from] ChannelConfigError),
    #[error("trace file {path}: {source}")]
    Trace { path: String, source: TraceError },
    #[error("unknown builtin trace {name:?} (available: bqmall)")]
    UnknownBuiltin { name: String },
    #[error("unknown preset {name:?} (available: scenario1, scenario2)")]
    UnknownPreset { name: String },
}

fn default_seed() -> u64 {
    1
}
fn default_play_time_ms() -> f64 {
    10_000.0
}
fn default_latency_budget_ms() -> f64 {
    DEFAULT_LATENCY_BUDGET_MS
}
fn default_phy_rate_bps() -> f64 {
    6e6
}
fn default_tx_overhead_us() -> f64 {
    150.0
}
fn default_sample_period_ms() -> f64 {
    10.0
}
fn default_psnr_cap_db() -> f64 {
    crate::metrics::DEFAULT_PSNR_CAP_DB
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSection {
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default = "default_play_time_ms")]
    pub play_time_ms: f64,
    #[serde(default = "default_latency_budget_ms")]
    pub latency_budget_ms: f64,
    #[serde(default = "default_phy_rate_bps")]
    pub phy_rate_bps: f64,
    #[serde(default = "default_tx_overhead_us")]
    pub tx_overhead_us: f64,
    #[serde(default = "default_sample_period_ms")]
    pub sample_period_ms: f64,
    #[serde(default = "default_psnr_cap_db")]
    pub psnr_cap_db: f64,
    /// Default output directory; the CLI flag and env var override it.
    #[serde(default)]
    pub out_dir: Option<String>,
}

impl Default for RunSection {
    fn default() -> Self {
        toml::from_str("").expect("empty run section has defaults")
    }
}

fn default_trace_source() -> String {
    "builtin:bqmall".to_string()
}
fn default_mtu() -> u32 {
    DEFAULT_MTU
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TraceSection {
    /// Path to a trace file, or `builtin:<name>`.
    #[serde(default = "default_trace_source")]
    pub path: String,
    #[serde(default = "default_mtu")]
    pub mtu: u32,
}

impl Default for TraceSection {
    fn default() -> Self {
        toml::from_str("").expect("empty trace section has defaults")
    }
}

fn default_parameter_set() -> ParameterSet {
    ParameterSet::Sch
}
fn default_queue_capacity() -> usize {
    DEFAULT_QUEUE_CAPACITY
}
fn default_retry_limit() -> u32 {
    DEFAULT_RETRY_LIMIT
}
fn default_sifs_us() -> u64 {
    DEFAULT_SIFS_US
}
fn default_slot_us() -> u64 {
    DEFAULT_SLOT_US
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MacSection {
    #[serde(default = "default_parameter_set")]
    pub parameter_set: ParameterSet,
    #[serde(default = "default_queue_capacity")]
    pub queue_capacity: usize,
    #[serde(default = "default_retry_limit")]
    pub retry_limit: u32,
    #[serde(default = "default_sifs_us")]
    pub sifs_us: u64,
    #[serde(default = "default_slot_us")]
    pub slot_us: u64,
}

impl Default for MacSection {
    fn default() -> Self {
        toml::from_str("").expect("empty mac section has defaults")
    }
}

fn default_policy() -> MapperPolicy {
    MapperPolicy::Baseline
}
fn default_p_d1() -> f64 {
    crate::mapper::DEFAULT_P_D1
}
fn default_p_d2() -> f64 {
    crate::mapper::DEFAULT_P_D2
}
fn default_qth_low() -> u32 {
    crate::mapper::DEFAULT_QTH_LOW
}
fn default_qth_high() -> u32 {
    crate::mapper::DEFAULT_QTH_HIGH
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MapperSection {
    #[serde(default = "default_policy")]
    pub policy: MapperPolicy,
    #[serde(default = "default_p_d1")]
    pub p_d1: f64,
    #[serde(default = "default_p_d2")]
    pub p_d2: f64,
    #[serde(default = "default_qth_low")]
    pub qth_low: u32,
    #[serde(default = "default_qth_high")]
    pub qth_high: u32,
}

impl Default for MapperSection {
    fn default() -> Self {
        toml::from_str("").expect("empty mapper section has defaults")
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelSection {
    #[serde(default)]
    pub loss: LossModel,
    /// Mean external busy period, microseconds. 0 disables the process.
    #[serde(default)]
    pub mean_busy_us: f64,
    /// Mean idle gap between external busy periods, microseconds.
    #[serde(default = "default_mean_idle_us")]
    pub mean_idle_us: f64,
}

fn default_mean_idle_us() -> f64 {
    1_000.0
}

impl Default for ChannelSection {
    fn default() -> Self {
        toml::from_str("").expect("empty channel section has defaults")
    }
}

/// A parsed, not yet validated scenario description.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    #[serde(default)]
    pub run: RunSection,
    #[serde(default)]
    pub trace: TraceSection,
    #[serde(default)]
    pub mac: MacSection,
    #[serde(default)]
    pub mapper: MapperSection,
    #[serde(default)]
    pub channel: ChannelSection,
    #[serde(default)]
    pub background: Vec<BackgroundSource>,
}

impl ScenarioConfig {
    pub fn from_toml_str(text: &str) -> Result<Self, ConfigError> {
        let config: ScenarioConfig = toml::from_str(text)?;
        config.validate()?;
        Ok(config)
    }

    pub fn load_path(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Read {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_toml_str(&text)
    }

    /// One of the bundled presets by name.
    pub fn preset(name: &str) -> Result<Self, ConfigError> {
        match name {
            "scenario1" => Self::from_toml_str(PRESET_SCENARIO1),
            "scenario2" => Self::from_toml_str(PRESET_SCENARIO2),
            other => Err(ConfigError::UnknownPreset {
                name: other.to_string(),
            }),
        }
    }

    /// Resolve `spec` as a preset name, else as a config file path.
    pub fn resolve(spec: &str) -> Result<Self, ConfigError> {
        match spec {
            "scenario1" | "scenario2" => Self::preset(spec),
            path => Self::load_path(Path::new(path)),
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let positive = |field: &'static str, v: f64| -> Result<(), ConfigError> {
            if !v.is_finite() || v <= 0.0 {
                Err(ConfigError::BadRunField {
                    field,
                    reason: format!("must be positive and finite, got {v}"),
                })
            } else {
                Ok(())
            }
        };
        positive("play_time_ms", self.run.play_time_ms)?;
        positive("latency_budget_ms", self.run.latency_budget_ms)?;
        positive("phy_rate_bps", self.run.phy_rate_bps)?;
        positive("sample_period_ms", self.run.sample_period_ms)?;
        positive("psnr_cap_db", self.run.psnr_cap_db)?;
        if !self.run.tx_overhead_us.is_finite() || self.run.tx_overhead_us < 0.0 {
            return Err(ConfigError::BadRunField {
                field: "tx_overhead_us",
                reason: format!("must be >= 0, got {}", self.run.tx_overhead_us),
            });
        }
        if self.trace.mtu == 0 {
            return Err(ConfigError::BadTraceField {
                field: "mtu",
                reason: "must be at least 1".into(),
            });
        }
        if self.mac.queue_capacity == 0 {
            return Err(ConfigError::BadMacField {
                field: "queue_capacity",
                reason: "must be at least 1".into(),
            });
        }
        if self.mac.slot_us == 0 || self.mac.sifs_us == 0 {
            return Err(ConfigError::BadMacField {
                field: "sifs_us/slot_us",
                reason: "timing values must be positive".into(),
            });
        }
        for ac in self.mac_params().acs {
            ac.validate()?;
        }
        self.mapper_config()
            .validate(self.mac.queue_capacity as u32)?;
        self.channel.loss.validate()?;
        if self.channel.mean_busy_us > 0.0 && self.channel.mean_idle_us <= 0.0 {
            return Err(ConfigError::BadChannel(
                ChannelConfigError::NonPositiveDuration {
                    name: "mean_idle_us",
                    value: self.channel.mean_idle_us,
                },
            ));
        }
        if self.channel.mean_busy_us < 0.0 {
            return Err(ConfigError::BadChannel(
                ChannelConfigError::NonPositiveDuration {
                    name: "mean_busy_us",
                    value: self.channel.mean_busy_us,
                },
            ));
        }
        for (index, source) in self.background.iter().enumerate() {
            source.validate(index)?;
        }
        Ok(())
    }

    pub fn mac_params(&self) -> MacParams {
        let mut params = MacParams::new(standard_ac_set(
            self.mac.parameter_set,
            self.mac.queue_capacity,
        ));
        params.sifs_us = self.mac.sifs_us;
        params.slot_us = self.mac.slot_us;
        params.retry_limit = self.mac.retry_limit;
        params
    }

    pub fn mapper_config(&self) -> MapperConfig {
        MapperConfig {
            p_d1: self.mapper.p_d1,
            p_d2: self.mapper.p_d2,
            qth_low: self.mapper.qth_low,
            qth_high: self.mapper.qth_high,
        }
    }

    /// Load the referenced trace (file or builtin).
    pub fn load_trace(&self) -> Result<Vec<VideoTraceFrame>, ConfigError> {
        if let Some(name) = self.trace.path.strip_prefix("builtin:") {
            return match name {
                "bqmall" => Ok(crate::synth::bqmall_like()),
                other => Err(ConfigError::UnknownBuiltin {
                    name: other.to_string(),
                }),
            };
        }
        let path = Path::new(&self.trace.path);
        let file = std::fs::File::open(path).map_err(|source| ConfigError::Read {
            path: path.to_path_buf(),
            source,
        })?;
        trace::parse_trace(std::io::BufReader::new(file)).map_err(|source| ConfigError::Trace {
            path: self.trace.path.clone(),
            source,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_config_uses_defaults() {
        let config = ScenarioConfig::from_toml_str("").unwrap();
        assert_eq!(config.run.seed, 1);
        assert_eq!(config.run.latency_budget_ms, 100.0);
        assert_eq!(config.trace.mtu, 1024);
        assert_eq!(config.mac.queue_capacity, 50);
        assert_eq!(config.mapper.qth_low, 20);
        assert_eq!(config.mapper.qth_high, 45);
        assert!(config.background.is_empty());
    }

    #[test]
    fn presets_parse_and_validate() {
        let s1 = ScenarioConfig::preset("scenario1").unwrap();
        assert!(s1.background.is_empty(), "scenario1 is video-only");
        let s2 = ScenarioConfig::preset("scenario2").unwrap();
        assert_eq!(s2.background.len(), 3, "voice + best-effort + background");
        assert!(ScenarioConfig::preset("scenario3").is_err());
    }

    #[test]
    fn builtin_trace_loads() {
        let config = ScenarioConfig::from_toml_str("[trace]\npath = \"builtin:bqmall\"").unwrap();
        let frames = config.load_trace().unwrap();
        assert_eq!(frames.len(), 600);
        let bad = ScenarioConfig {
            trace: TraceSection {
                path: "builtin:nothing".into(),
                mtu: 1024,
            },
            ..ScenarioConfig::default()
        };
        assert!(matches!(
            bad.load_trace(),
            Err(ConfigError::UnknownBuiltin { .. })
        ));
    }

    #[test]
    fn rejects_bad_values_with_field_context() {
        let err = ScenarioConfig::from_toml_str("[run]\nplay_time_ms = -5.0").unwrap_err();
        assert!(err.to_string().contains("play_time_ms"), "{err}");
        let err =
            ScenarioConfig::from_toml_str("[mapper]\nqth_low = 45\nqth_high = 45").unwrap_err();
        assert!(err.to_string().contains("qth_low"), "{err}");
        let err =
            ScenarioConfig::from_toml_str("[channel]\nloss = { kind = \"bernoulli\", p = 1.5 }")
                .unwrap_err();
        assert!(err.to_string().contains("loss.p"), "{err}");
        let err = ScenarioConfig::from_toml_str(
            "[[background]]\ntarget_ac = 9\npacket_size = 10\nrate_pps = 1.0\npattern = \"cbr\"",
        )
        .unwrap_err();
        assert!(err.to_string().contains("target_ac"), "{err}");
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(ScenarioConfig::from_toml_str("[run]\nbogus = 1").is_err());
    }

    #[test]
    fn mac_params_follow_parameter_set() {
        let config = ScenarioConfig::from_toml_str("[mac]\nparameter_set = \"cch\"").unwrap();
        let params = config.mac_params();
        assert_eq!(params.acs[2].cw_min, 3, "CCH video row");
        let config = ScenarioConfig::from_toml_str("").unwrap();
        assert_eq!(config.mac_params().acs[2].cw_min, 15, "SCH video row");
    }
}
