//! mdcsim: run EDCA/MDC video scenarios, compare mapping policies, and
//! score raw frame pairs.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use mdcsim_core::config::{ConfigError, ScenarioConfig};
use mdcsim_core::mapper::MapperPolicy;
use mdcsim_core::metrics::{
    average_psnr, frame_mse, frame_psnr, frame_ssim, sigma_mse, RawFrame, DEFAULT_SSIM_WINDOW,
    PEAK_8BIT,
};
use mdcsim_core::report::emit_plot_data;
use mdcsim_core::scenario::{compare_mappers, run_scenario, ScenarioError};
use mdcsim_core::synth::{generate, write_trace, SynthSpec};

/// Environment variable overriding the output directory.
const OUT_DIR_ENV: &str = "MDCSIM_OUT_DIR";

#[derive(Parser)]
#[command(
    name = "mdcsim",
    about = "EDCA medium-access simulator for two-description video",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one scenario and write queues.csv, psnr.csv, reconstruction.csv
    /// and summary.txt.
    Run {
        /// Preset name (scenario1, scenario2) or a config file path.
        config: String,
        /// Output directory (overrides the config; MDCSIM_OUT_DIR overrides both).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Override the config seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Override the mapper policy (baseline | static | adaptive).
        #[arg(long)]
        mapper: Option<MapperPolicyArg>,
    },
    /// Run several mapping policies over several seeds and tabulate.
    Compare {
        /// Preset name (scenario1, scenario2) or a config file path.
        config: String,
        /// Comma-separated policies.
        #[arg(
            long,
            value_delimiter = ',',
            default_value = "baseline,static,adaptive"
        )]
        mappers: Vec<MapperPolicyArg>,
        /// Comma-separated seeds.
        #[arg(long, value_delimiter = ',', default_value = "1,2,3,4,5")]
        seeds: Vec<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Raw-frame quality utilities.
    Metrics {
        #[command(subcommand)]
        command: MetricsCommand,
    },
    /// Write a deterministic synthetic trace file.
    GenTrace(GenTraceArgs),
}

#[derive(Clone, Copy)]
struct MapperPolicyArg(MapperPolicy);

impl std::str::FromStr for MapperPolicyArg {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        s.parse().map(MapperPolicyArg)
    }
}

#[derive(Subcommand)]
enum MetricsCommand {
    /// Score a test file against a reference of planar 8-bit luma frames.
    Score {
        #[arg(long = "ref")]
        reference: PathBuf,
        #[arg(long = "test")]
        test: PathBuf,
        #[arg(long)]
        width: usize,
        #[arg(long)]
        height: usize,
        /// SSIM window edge in pixels.
        #[arg(long, default_value_t = DEFAULT_SSIM_WINDOW)]
        window: usize,
    },
}

#[derive(Args)]
struct GenTraceArgs {
    #[arg(short, long)]
    out: PathBuf,
    #[arg(long, default_value_t = 600)]
    frames: u32,
    #[arg(long, default_value_t = 60.0)]
    fps: f64,
    #[arg(long, default_value_t = 7600.0)]
    mean_size: f64,
    #[arg(long, default_value_t = 0.25)]
    size_cv: f64,
    /// Scene-change spike every N frames (0 disables spikes).
    #[arg(long, default_value_t = 25)]
    spike_period: u32,
    #[arg(long, default_value_t = 4.2)]
    spike_factor: f64,
    #[arg(long, default_value_t = 7)]
    seed: u64,
    /// Omit the mse_if_lost column (loss-count-only traces).
    #[arg(long)]
    no_distortion: bool,
}

/// Machine-readable error categories and their exit codes.
fn error_category(err: &anyhow::Error) -> (&'static str, u8) {
    if let Some(scenario) = err.downcast_ref::<ScenarioError>() {
        return match scenario {
            ScenarioError::Config(_) => ("config", 2),
            ScenarioError::Sim(_) => ("simulation", 4),
            ScenarioError::Receiver(_) | ScenarioError::Metrics(_) => ("metrics", 5),
        };
    }
    if err.downcast_ref::<ConfigError>().is_some() {
        return ("config", 2);
    }
    if err.downcast_ref::<std::io::Error>().is_some() {
        return ("io", 3);
    }
    ("error", 1)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            let (category, code) = error_category(&err);
            eprintln!("error[{category}]: {err:#}");
            ExitCode::from(code)
        }
    }
}

fn dispatch(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Run {
            config,
            out,
            seed,
            mapper,
        } => run_command(&config, out, seed, mapper),
        Command::Compare {
            config,
            mappers,
            seeds,
            out,
        } => compare_command(&config, &mappers, &seeds, out),
        Command::Metrics {
            command:
                MetricsCommand::Score {
                    reference,
                    test,
                    width,
                    height,
                    window,
                },
        } => score_command(&reference, &test, width, height, window),
        Command::GenTrace(args) => gen_trace_command(&args),
    }
}

fn resolve_out_dir(cli_out: Option<PathBuf>, config: &ScenarioConfig) -> PathBuf {
    if let Ok(dir) = std::env::var(OUT_DIR_ENV) {
        return PathBuf::from(dir);
    }
    if let Some(dir) = cli_out {
        return dir;
    }
    config
        .run
        .out_dir
        .as_ref()
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from("mdcsim-out"))
}

fn run_command(
    spec: &str,
    out: Option<PathBuf>,
    seed: Option<u64>,
    mapper: Option<MapperPolicyArg>,
) -> Result<()> {
    let mut config = ScenarioConfig::resolve(spec)?;
    if let Some(seed) = seed {
        config.run.seed = seed;
    }
    if let Some(MapperPolicyArg(policy)) = mapper {
        config.mapper.policy = policy;
    }
    let out_dir = resolve_out_dir(out, &config);
    let report = run_scenario(&config)?;
    let files = emit_plot_data(&report, &out_dir)
        .with_context(|| format!("writing outputs to {}", out_dir.display()))?;
    println!(
        "run complete: mapper={} seed={} lost D1={} D2={} total={} (of {} video packets)",
        report.policy.label(),
        report.seed,
        report.losses.d1,
        report.losses.d2,
        report.losses.total(),
        report.video_packet_count
    );
    if let Some(psnr) = report.psnr_avg_db {
        println!(
            "psnr_avg_db={psnr:.4} sigma_mse={}",
            report
                .sigma_mse
                .map(|s| format!("{s:.4}"))
                .unwrap_or_else(|| "n/a".into())
        );
    }
    println!("wrote {}", files.queues.display());
    if let Some(psnr) = files.psnr {
        println!("wrote {}", psnr.display());
    }
    println!("wrote {}", files.reconstruction.display());
    println!("wrote {}", files.summary.display());
    Ok(())
}

fn compare_command(
    spec: &str,
    mappers: &[MapperPolicyArg],
    seeds: &[u64],
    out: Option<PathBuf>,
) -> Result<()> {
    if mappers.is_empty() || seeds.is_empty() {
        bail!("compare needs at least one mapper and one seed");
    }
    let config = ScenarioConfig::resolve(spec)?;
    let policies: Vec<MapperPolicy> = mappers.iter().map(|m| m.0).collect();
    let comparison = compare_mappers(&config, &policies, seeds)?;
    print!("{comparison}");
    let out_dir = resolve_out_dir(out, &config);
    std::fs::create_dir_all(&out_dir).with_context(|| format!("creating {}", out_dir.display()))?;
    let csv_path = out_dir.join("compare.csv");
    std::fs::write(&csv_path, comparison.to_csv())
        .with_context(|| format!("writing {}", csv_path.display()))?;
    println!("wrote {}", csv_path.display());
    Ok(())
}

fn load_raw_frames(path: &Path, width: usize, height: usize) -> Result<Vec<RawFrame>> {
    let bytes = std::fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    let frame_size = width * height;
    if frame_size == 0 {
        bail!("frame dimensions must be positive");
    }
    if bytes.is_empty() || bytes.len() % frame_size != 0 {
        bail!(
            "{} holds {} bytes, not a positive multiple of {}x{}",
            path.display(),
            bytes.len(),
            width,
            height
        );
    }
    bytes
        .chunks(frame_size)
        .map(|chunk| RawFrame::new(width, height, chunk.to_vec()).map_err(Into::into))
        .collect()
}

fn score_command(
    reference: &Path,
    test: &Path,
    width: usize,
    height: usize,
    window: usize,
) -> Result<()> {
    let ref_frames = load_raw_frames(reference, width, height)?;
    let test_frames = load_raw_frames(test, width, height)?;
    let count = ref_frames.len().min(test_frames.len());
    let mut mse_series = Vec::with_capacity(count);
    let mut ssim_sum = 0.0;
    println!("frame,mse,psnr_db,ssim");
    for k in 0..count {
        let mse = frame_mse(&ref_frames[k], &test_frames[k])?;
        let ssim = frame_ssim(&ref_frames[k], &test_frames[k], window)?;
        println!("{k},{mse:.6},{:.4},{ssim:.6}", frame_psnr(mse, PEAK_8BIT));
        mse_series.push(mse);
        ssim_sum += ssim;
    }
    println!("psnr_avg_db={:.4}", average_psnr(&mse_series, PEAK_8BIT)?);
    if count >= 2 {
        println!("sigma_mse={:.4}", sigma_mse(&mse_series)?);
    }
    println!("ssim_mean={:.6}", ssim_sum / count as f64);
    Ok(())
}

fn gen_trace_command(args: &GenTraceArgs) -> Result<()> {
    let spec = SynthSpec {
        frames: args.frames,
        fps: args.fps,
        mean_size: args.mean_size,
        size_cv: args.size_cv,
        spike_period: args.spike_period,
        spike_factor: args.spike_factor,
        seed: args.seed,
        distortion: !args.no_distortion,
        ..SynthSpec::default()
    };
    let frames = generate(&spec);
    let mut file = std::fs::File::create(&args.out)
        .with_context(|| format!("creating {}", args.out.display()))?;
    write_trace(&frames, &mut file)?;
    println!("wrote {} frames to {}", frames.len(), args.out.display());
    Ok(())
}
