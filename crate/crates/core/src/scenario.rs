//! Scenario orchestration: run the full pipeline (trace, split, packetize,
//! map, MAC, channel, receiver, metrics) and aggregate multi-seed,
//! multi-policy comparisons.

use thiserror::Error;

use crate::config::{ConfigError, ScenarioConfig};
use crate::edca::{AcStats, AC_COUNT};
use crate::mapper::MapperPolicy;
use crate::metrics::{self, LossCounts, PEAK_8BIT};
use crate::receiver::{
    self, DeliveryRecord, DeliveryStatus, FrameStatus, ReceiverError, ReconSource,
};
use crate::sim::{self, QlenSample, SimError, SimInputs, DEFAULT_MAX_EVENTS};
use crate::trace::packetize_all;

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Receiver(#[from] ReceiverError),
    #[error(transparent)]
    Metrics(#[from] metrics::MetricsError),
}

/// Everything known about one frame after a run.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameReport {
    pub frame_index: u32,
    pub capture_time_ms: f64,
    pub status: FrameStatus,
    pub source: ReconSource,
    pub reference_index: i64,
    pub mse: Option<f64>,
    pub psnr_db: Option<f64>,
}

/// The in-memory result of one scenario run.
#[derive(Debug, Clone)]
pub struct RunReport {
    pub policy: MapperPolicy,
    pub seed: u64,
    pub frame_count: usize,
    pub video_packet_count: u64,
    /// Video packets the MAC put on the air successfully.
    pub transmitted_video: u64,
    pub frames: Vec<FrameReport>,
    pub losses: LossCounts,
    /// Average PSNR from the mean MSE; `None` in loss-count-only mode.
    pub psnr_avg_db: Option<f64>,
    pub sigma_mse: Option<f64>,
    /// Raw-frame SSIM is not computable in trace-driven runs.
    pub ssim_mean: Option<f64>,
    pub mac_stats: [AcStats; AC_COUNT],
    pub qlen_log: Vec<QlenSample>,
    pub delivery: Vec<DeliveryRecord>,
    /// Target AC per video packet id.
    pub assignments: Vec<u8>,
    pub play_time_ms: f64,
    pub sample_period_ms: f64,
}

/// Run one scenario to completion and compute its metrics.
pub fn run_scenario(config: &ScenarioConfig) -> Result<RunReport, ScenarioError> {
    config.validate()?;
    let frames = config.load_trace()?;
    let packets = packetize_all(&frames, config.trace.mtu, config.run.latency_budget_ms);
    let inputs = SimInputs {
        mac_params: config.mac_params(),
        phy_rate_bps: config.run.phy_rate_bps,
        tx_overhead_us: config.run.tx_overhead_us,
        video_packets: packets,
        background: config.background.clone(),
        background_horizon_ms: config.run.play_time_ms,
        mapper_policy: config.mapper.policy,
        mapper_config: config.mapper_config(),
        loss_model: config.channel.loss,
        mean_busy_us: config.channel.mean_busy_us,
        mean_idle_us: config.channel.mean_idle_us,
        seed: config.run.seed,
        max_events: DEFAULT_MAX_EVENTS,
    };
    let output = sim::run(&inputs)?;
    let packets = inputs.video_packets;

    let statuses = receiver::assemble_frames(&output.records, &packets, frames.len())?;
    let reconstruction = receiver::conceal(&statuses);
    let losses = metrics::loss_accounting(&output.records, &packets);
    let transmitted_video = output
        .records
        .iter()
        .filter(|r| {
            matches!(
                r.status,
                DeliveryStatus::Delivered | DeliveryStatus::LateDiscard
            )
        })
        .count() as u64;

    let has_distortion = frames.iter().all(|f| f.mse_if_lost.is_some());
    let (mse_series, psnr_avg_db, sigma) = if has_distortion {
        let series = receiver::distortion_of_reconstruction(&reconstruction, &frames, PEAK_8BIT)?;
        let avg = metrics::average_psnr_capped(&series, PEAK_8BIT, config.run.psnr_cap_db)?;
        let sigma = if series.len() >= 2 {
            Some(metrics::sigma_mse(&series)?)
        } else {
            None
        };
        (Some(series), Some(avg), sigma)
    } else {
        (None, None, None)
    };

    let frame_reports: Vec<FrameReport> = reconstruction
        .iter()
        .map(|r| {
            let k = r.frame_index as usize;
            let mse = mse_series.as_ref().map(|s| s[k]);
            FrameReport {
                frame_index: r.frame_index,
                capture_time_ms: frames[k].capture_time_ms,
                status: statuses[k],
                source: r.source,
                reference_index: r.reference_index,
                mse,
                psnr_db: mse
                    .map(|m| metrics::frame_psnr_capped(m, PEAK_8BIT, config.run.psnr_cap_db)),
            }
        })
        .collect();

    Ok(RunReport {
        policy: config.mapper.policy,
        seed: config.run.seed,
        frame_count: frames.len(),
        video_packet_count: packets.len() as u64,
        transmitted_video,
        frames: frame_reports,
        losses,
        psnr_avg_db,
        sigma_mse: sigma,
        ssim_mean: None,
        mac_stats: output.stats,
        qlen_log: output.qlen_log,
        delivery: output.records,
        assignments: output.assignments,
        play_time_ms: config.run.play_time_ms,
        sample_period_ms: config.run.sample_period_ms,
    })
}

fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len();
    if n == 0 {
        return (f64::NAN, 0.0);
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    if n == 1 {
        return (mean, 0.0);
    }
    let ss: f64 = values.iter().map(|v| (v - mean) * (v - mean)).sum();
    (mean, (ss / (n as f64 - 1.0)).sqrt())
}

/// Aggregated metrics for one policy over a set of seeds.
#[derive(Debug, Clone)]
pub struct PolicySummary {
    pub policy: MapperPolicy,
    pub seeds: usize,
    pub psnr_avg_mean: Option<f64>,
    pub psnr_avg_std: Option<f64>,
    pub sigma_mse_mean: Option<f64>,
    pub sigma_mse_std: Option<f64>,
    pub lost_d1_mean: f64,
    pub lost_d2_mean: f64,
    pub lost_total_mean: f64,
    pub lost_total_std: f64,
    pub transmitted_mean: f64,
}

#[derive(Debug, Clone)]
pub struct Comparison {
    pub rows: Vec<PolicySummary>,
    /// Per (policy, seed) reports in `(policy index, seed index)` order.
    pub runs: Vec<RunReport>,
}

/// Run every (policy, seed) pair and aggregate. Policies run in parallel;
/// each run is internally single-threaded and runs are aggregated in a
/// fixed order, so the result does not depend on scheduling.
pub fn compare_mappers(
    base: &ScenarioConfig,
    policies: &[MapperPolicy],
    seeds: &[u64],
) -> Result<Comparison, ScenarioError> {
    base.validate()?;
    if policies.is_empty() || seeds.is_empty() {
        return Ok(Comparison {
            rows: Vec::new(),
            runs: Vec::new(),
        });
    }
    let mut per_policy: Vec<Vec<Result<RunReport, ScenarioError>>> = Vec::new();
    std::thread::scope(|scope| {
        let handles: Vec<_> = policies
            .iter()
            .map(|&policy| {
                let config = base.clone();
                scope.spawn(move || {
                    seeds
                        .iter()
                        .map(|&seed| {
                            let mut c = config.clone();
                            c.mapper.policy = policy;
                            c.run.seed = seed;
                            run_scenario(&c)
                        })
                        .collect::<Vec<_>>()
                })
            })
            .collect();
        for handle in handles {
            per_policy.push(handle.join().expect("scenario thread panicked"));
        }
    });

    let mut rows = Vec::new();
    let mut runs = Vec::new();
    for (policy, results) in policies.iter().zip(per_policy) {
        let mut reports = Vec::with_capacity(results.len());
        for result in results {
            reports.push(result?);
        }
        let psnr: Vec<f64> = reports.iter().filter_map(|r| r.psnr_avg_db).collect();
        let sigma: Vec<f64> = reports.iter().filter_map(|r| r.sigma_mse).collect();
        let d1: Vec<f64> = reports.iter().map(|r| r.losses.d1 as f64).collect();
        let d2: Vec<f64> = reports.iter().map(|r| r.losses.d2 as f64).collect();
        let total: Vec<f64> = reports.iter().map(|r| r.losses.total() as f64).collect();
        let transmitted: Vec<f64> = reports.iter().map(|r| r.transmitted_video as f64).collect();
        let (psnr_mean, psnr_std) = mean_std(&psnr);
        let (sigma_mean, sigma_std) = mean_std(&sigma);
        let (total_mean, total_std) = mean_std(&total);
        rows.push(PolicySummary {
            policy: *policy,
            seeds: seeds.len(),
            psnr_avg_mean: (!psnr.is_empty()).then_some(psnr_mean),
            psnr_avg_std: (!psnr.is_empty()).then_some(psnr_std),
            sigma_mse_mean: (!sigma.is_empty()).then_some(sigma_mean),
            sigma_mse_std: (!sigma.is_empty()).then_some(sigma_std),
            lost_d1_mean: mean_std(&d1).0,
            lost_d2_mean: mean_std(&d2).0,
            lost_total_mean: total_mean,
            lost_total_std: total_std,
            transmitted_mean: mean_std(&transmitted).0,
        });
        runs.extend(reports);
    }
    Ok(Comparison { rows, runs })
}

fn fmt_opt(value: Option<f64>) -> String {
    match value {
        Some(v) => format!("{v:.4}"),
        None => "n/a".to_string(),
    }
}

impl Comparison {
    pub fn to_csv(&self) -> String {
        let mut out = String::from(
            "mapper,seeds,psnr_avg_mean,psnr_avg_std,sigma_mse_mean,sigma_mse_std,\
             lost_d1_mean,lost_d2_mean,lost_total_mean,lost_total_std,transmitted_mean\n",
        );
        for row in &self.rows {
            out.push_str(&format!(
                "{},{},{},{},{},{},{:.2},{:.2},{:.2},{:.2},{:.2}\n",
                row.policy.label(),
                row.seeds,
                fmt_opt(row.psnr_avg_mean),
                fmt_opt(row.psnr_avg_std),
                fmt_opt(row.sigma_mse_mean),
                fmt_opt(row.sigma_mse_std),
                row.lost_d1_mean,
                row.lost_d2_mean,
                row.lost_total_mean,
                row.lost_total_std,
                row.transmitted_mean,
            ));
        }
        out
    }
}

impl std::fmt::Display for Comparison {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        writeln!(
            f,
            "{:<10} {:>6} {:>14} {:>14} {:>10} {:>10} {:>12} {:>12}",
            "mapper",
            "seeds",
            "sigma_mse",
            "psnr_avg_db",
            "lost_d1",
            "lost_d2",
            "lost_total",
            "transmitted"
        )?;
        for row in &self.rows {
            writeln!(
                f,
                "{:<10} {:>6} {:>14} {:>14} {:>10.1} {:>10.1} {:>12.1} {:>12.1}",
                row.policy.label(),
                row.seeds,
                fmt_opt(row.sigma_mse_mean),
                fmt_opt(row.psnr_avg_mean),
                row.lost_d1_mean,
                row.lost_d2_mean,
                row.lost_total_mean,
                row.transmitted_mean,
            )?;
        }
        Ok(())
    }
}
