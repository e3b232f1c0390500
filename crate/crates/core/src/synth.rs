//! Deterministic synthetic video traces.
//!
//! Stands in for real encoder output in the bundled presets and in tests:
//! frame sizes follow a lognormal around a configurable mean, and the
//! concealment-distortion column mixes a slow motion swell with occasional
//! bursts so quality-variability metrics have structure to react to.

use std::io::Write;

use rand::Rng;
use rand_distr::{Distribution, Exp, Normal};

use crate::rng::stream_rng;
use crate::trace::VideoTraceFrame;

#[derive(Debug, Clone, PartialEq)]
pub struct SynthSpec {
    pub frames: u32,
    pub fps: f64,
    /// Mean encoded frame size in bytes.
    pub mean_size: f64,
    /// Coefficient of variation of the frame size.
    pub size_cv: f64,
    /// Scene-change burst every this many frames (0 disables bursts).
    /// Each burst spikes two consecutive frames, so both descriptions
    /// carry one half of it.
    pub spike_period: u32,
    /// Size multiplier on spike frames.
    pub spike_factor: f64,
    pub seed: u64,
    /// Emit the `mse_if_lost` column.
    pub distortion: bool,
    /// Baseline concealment MSE level.
    pub mse_base: f64,
    /// Mean of the additive distortion bursts.
    pub mse_burst: f64,
    /// Per-frame probability of a distortion burst.
    pub burst_prob: f64,
}

impl Default for SynthSpec {
    fn default() -> Self {
        Self {
            frames: 600,
            fps: 60.0,
            mean_size: 7_600.0,
            size_cv: 0.25,
            spike_period: 25,
            spike_factor: 4.2,
            seed: 7,
            distortion: true,
            mse_base: 60.0,
            mse_burst: 350.0,
            burst_prob: 0.08,
        }
    }
}

/// The built-in trace behind `builtin:bqmall`: 600 frames at 60 fps
/// (10 s of video) with the distortion column populated.
pub fn bqmall_like() -> Vec<VideoTraceFrame> {
    generate(&SynthSpec::default())
}

pub fn generate(spec: &SynthSpec) -> Vec<VideoTraceFrame> {
    let mut rng = stream_rng(spec.seed, "synth-trace");
    let sigma = (1.0 + spec.size_cv * spec.size_cv).ln().sqrt();
    let size_noise = Normal::new(-sigma * sigma / 2.0, sigma).expect("valid lognormal");
    let burst = Exp::new(1.0 / spec.mse_burst.max(1e-9)).expect("positive burst mean");
    let period_ms = 1_000.0 / spec.fps;
    (0..spec.frames)
        .map(|k| {
            let factor: f64 = size_noise.sample(&mut rng);
            // scene changes spike two adjacent frames (an intra burst hits
            // both descriptions) and concealment across the cut is far
            // more damaging than usual
            let spike = spec.spike_period > 0
                && k > 1
                && (k % spec.spike_period == 0 || k % spec.spike_period == 1);
            let size = if spike {
                // tightly bounded around factor x mean: one spike must fit
                // a typical interface queue so it stresses queue fill
                // instead of being an unconditional loss
                let base = spec.mean_size * spec.spike_factor;
                (base * factor.exp()).round().clamp(0.9 * base, 1.1 * base) as u32
            } else {
                (spec.mean_size * factor.exp())
                    .round()
                    .clamp(256.0, 2.0 * spec.mean_size) as u32
            };
            let mse_if_lost = if spec.distortion {
                let swell = 1.0 + 0.7 * (2.0 * std::f64::consts::PI * f64::from(k) / 75.0).sin();
                let extra = if rng.random::<f64>() < spec.burst_prob {
                    burst.sample(&mut rng)
                } else {
                    0.0
                };
                let cut_penalty = if spike { 6.0 } else { 1.0 };
                Some((cut_penalty * (spec.mse_base * swell) + extra).max(1.0))
            } else {
                None
            };
            VideoTraceFrame {
                frame_index: k,
                capture_time_ms: f64::from(k) * period_ms,
                size,
                mse_if_lost,
                mse_if_received: None,
            }
        })
        .collect()
}

/// Write frames in the plain-text trace format.
pub fn write_trace<W: Write>(frames: &[VideoTraceFrame], out: &mut W) -> std::io::Result<()> {
    writeln!(
        out,
        "# frame_index capture_time_ms size_bytes [mse_if_lost] [mse_if_received]"
    )?;
    for f in frames {
        match (f.mse_if_lost, f.mse_if_received) {
            (Some(lost), Some(recv)) => writeln!(
                out,
                "{} {:.4} {} {:.4} {:.4}",
                f.frame_index, f.capture_time_ms, f.size, lost, recv
            )?,
            (Some(lost), None) => writeln!(
                out,
                "{} {:.4} {} {:.4}",
                f.frame_index, f.capture_time_ms, f.size, lost
            )?,
            _ => writeln!(out, "{} {:.4} {}", f.frame_index, f.capture_time_ms, f.size)?,
        }
    }
    Ok(())
}
