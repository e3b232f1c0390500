//! Plot-data and summary emission for a completed run.
//!
//! `queues.csv` holds the queue fill sampled on a fixed grid, `psnr.csv`
//! the per-frame quality series (when distortion data exists),
//! `reconstruction.csv` the concealment log, and `summary.txt` a compact
//! text table. All outputs are deterministic for a given report.

use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use crate::edca::AC_COUNT;
use crate::receiver::{FrameStatus, ReconSource};
use crate::scenario::RunReport;
use crate::units::ms_to_ns;

/// Sample the queue-length change log on the fixed reporting grid:
/// `floor(play_time / period) + 1` rows covering t = 0 .. play_time.
pub fn sample_queue_fill(report: &RunReport) -> Vec<(f64, [u32; AC_COUNT])> {
    let period_ns = ms_to_ns(report.sample_period_ms);
    let horizon_ns = ms_to_ns(report.play_time_ms);
    let steps = (horizon_ns / period_ns) as usize;
    let mut rows = Vec::with_capacity(steps + 1);
    let mut current = [0u32; AC_COUNT];
    let mut log_pos = 0;
    for step in 0..=steps {
        let t = step as u64 * period_ns;
        while log_pos < report.qlen_log.len() && report.qlen_log[log_pos].t <= t {
            let sample = report.qlen_log[log_pos];
            current[sample.ac as usize] = sample.qlen;
            log_pos += 1;
        }
        rows.push((t as f64 / 1e9, current));
    }
    rows
}

pub fn queues_csv(report: &RunReport) -> String {
    let mut out = String::from("time_s,ac0,ac1,ac2,ac3\n");
    for (t, fill) in sample_queue_fill(report) {
        let _ = writeln!(
            out,
            "{t:.3},{},{},{},{}",
            fill[0], fill[1], fill[2], fill[3]
        );
    }
    out
}

/// Per-frame PSNR rows, or `None` in loss-count-only mode.
pub fn psnr_csv(report: &RunReport) -> Option<String> {
    if report.frames.iter().any(|f| f.psnr_db.is_none()) {
        return None;
    }
    let mut out = String::from("time_s,frame_index,psnr_db\n");
    for frame in &report.frames {
        let _ = writeln!(
            out,
            "{:.6},{},{:.4}",
            frame.capture_time_ms / 1e3,
            frame.frame_index,
            frame.psnr_db.unwrap()
        );
    }
    Some(out)
}

fn source_label(source: ReconSource) -> &'static str {
    match source {
        ReconSource::Own => "own",
        ReconSource::CopiedFromOther => "copied_from_other",
        ReconSource::CopiedPrevious => "copied_previous",
    }
}

pub fn reconstruction_csv(report: &RunReport) -> String {
    let mut out = String::from("frame_index,status,source,reference_index,mse\n");
    for frame in &report.frames {
        let status = match frame.status {
            FrameStatus::Received => "received",
            FrameStatus::Lost => "lost",
        };
        let mse = frame.mse.map(|m| format!("{m:.4}")).unwrap_or_default();
        let _ = writeln!(
            out,
            "{},{},{},{},{}",
            frame.frame_index,
            status,
            source_label(frame.source),
            frame.reference_index,
            mse
        );
    }
    out
}

fn fmt_opt(value: Option<f64>) -> String {
    match value {
        Some(v) => format!("{v:.4}"),
        None => "n/a".to_string(),
    }
}

pub fn summary_text(report: &RunReport) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "mapper: {}", report.policy.label());
    let _ = writeln!(out, "seed: {}", report.seed);
    let _ = writeln!(out, "frames: {}", report.frame_count);
    let _ = writeln!(out, "video_packets: {}", report.video_packet_count);
    let _ = writeln!(out, "transmitted_video: {}", report.transmitted_video);
    let _ = writeln!(
        out,
        "lost_packets: D1={} D2={} total={}",
        report.losses.d1,
        report.losses.d2,
        report.losses.total()
    );
    let _ = writeln!(out, "sigma_mse: {}", fmt_opt(report.sigma_mse));
    let _ = writeln!(out, "psnr_avg_db: {}", fmt_opt(report.psnr_avg_db));
    let _ = writeln!(out, "ssim_mean: {}", fmt_opt(report.ssim_mean));
    let received = report
        .frames
        .iter()
        .filter(|f| f.status == FrameStatus::Received)
        .count();
    let _ = writeln!(out, "frames_received: {received}/{}", report.frame_count);
    let _ = writeln!(out);
    let _ = writeln!(
        out,
        "{:<4} {:>9} {:>9} {:>12} {:>14} {:>14} {:>11} {:>9}",
        "ac",
        "arrivals",
        "enqueued",
        "transmitted",
        "drop_overflow",
        "drop_deadline",
        "drop_retry",
        "residual"
    );
    for ac in 0..AC_COUNT {
        let s = report.mac_stats[ac];
        let residual = s
            .arrivals
            .saturating_sub(s.transmitted)
            .saturating_sub(s.dropped_overflow)
            .saturating_sub(s.dropped_deadline)
            .saturating_sub(s.dropped_retry);
        let _ = writeln!(
            out,
            "{:<4} {:>9} {:>9} {:>12} {:>14} {:>14} {:>11} {:>9}",
            ac,
            s.arrivals,
            s.enqueued,
            s.transmitted,
            s.dropped_overflow,
            s.dropped_deadline,
            s.dropped_retry,
            residual
        );
    }
    out
}

/// Names of the files a run emits.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EmittedFiles {
    pub queues: PathBuf,
    pub psnr: Option<PathBuf>,
    pub reconstruction: PathBuf,
    pub summary: PathBuf,
}

/// Write the plot data and summary for one run into `out_dir`.
pub fn emit_plot_data(report: &RunReport, out_dir: &Path) -> io::Result<EmittedFiles> {
    fs::create_dir_all(out_dir)?;
    let queues = out_dir.join("queues.csv");
    fs::write(&queues, queues_csv(report))?;
    let psnr = match psnr_csv(report) {
        Some(text) => {
            let path = out_dir.join("psnr.csv");
            fs::write(&path, text)?;
            Some(path)
        }
        None => None,
    };
    let reconstruction = out_dir.join("reconstruction.csv");
    fs::write(&reconstruction, reconstruction_csv(report))?;
    let summary = out_dir.join("summary.txt");
    fs::write(&summary, summary_text(report))?;
    Ok(EmittedFiles {
        queues,
        psnr,
        reconstruction,
        summary,
    })
}
