//! Command line front end: simulate benchmark data, restore it with the
//! joint or two-stage solvers, generate kernels, restore under per-tile
//! kernel grids, and time the solver.
//!
//! Human-readable summaries go to stdout; `--verbose` adds one JSON
//! object per event on stderr.  Errors print as a single
//! `error: <code>: <message>` line and exit nonzero.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use rawrestore::config::{ExperimentConfig, Method};
use rawrestore::harness::{self, Logger};
use rawrestore::isp::NoiseParams;

#[derive(Parser)]
#[command(
    name = "rawrestore",
    version,
    about = "Joint deblurring, demosaicking and denoising of raw images"
)]
struct Cli {
    /// TOML configuration file; built-in defaults apply when absent.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,
    /// Emit JSON-line diagnostics on stderr.
    #[arg(long, short, global = true)]
    verbose: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Synthesize a benchmark set from the configured ground-truth images.
    Simulate {
        /// Master seed; every observation derives its own stream from it.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Output directory, overriding the configured one.
        #[arg(long, value_name = "DIR")]
        out: Option<PathBuf>,
    },
    /// Restore a simulated set and score it against its ground truth.
    Restore {
        /// joint, twostage-bilinear, twostage-classical, or all.
        #[arg(long, default_value = "all")]
        method: MethodArg,
        /// Manifest file or the directory holding it; defaults to the
        /// configured output directory.
        #[arg(long, value_name = "PATH")]
        manifest: Option<PathBuf>,
        /// Border (pixels) excluded from scoring, overriding the config.
        #[arg(long)]
        crop: Option<usize>,
    },
    /// Draw one blur kernel and write it as a float map.
    GenKernel {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Kernel side (odd), overriding the config.
        #[arg(long)]
        size: Option<usize>,
        #[arg(long, default_value = "kernel.pfm", value_name = "PATH")]
        out: PathBuf,
    },
    /// Restore a raw frame under a per-tile kernel grid.
    PsfRestore {
        /// Raw mosaicked frame (single-channel PFM).
        #[arg(long, value_name = "PATH")]
        input: PathBuf,
        /// Kernel grid directory (index.txt plus one map per tile).
        #[arg(long, value_name = "DIR")]
        grid: PathBuf,
        /// Linear reference for scoring, if available.
        #[arg(long, value_name = "PATH")]
        truth: Option<PathBuf>,
        /// Shot noise coefficient of the input frame.
        #[arg(long, default_value_t = 1e-3)]
        shot: f64,
        /// Read noise coefficient; derived from the shot level when absent.
        #[arg(long)]
        read: Option<f64>,
        #[arg(long, default_value = "restored.pfm", value_name = "PATH")]
        out: PathBuf,
    },
    /// Time the joint solver on a synthetic problem.
    Bench {
        /// Problem side length (even).
        #[arg(long, default_value_t = 256)]
        size: usize,
        #[arg(long, default_value_t = 3)]
        reps: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

#[derive(Clone)]
enum MethodArg {
    All,
    One(Method),
}

impl std::str::FromStr for MethodArg {
    type Err = rawrestore::Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s == "all" {
            Ok(MethodArg::All)
        } else {
            Ok(MethodArg::One(s.parse()?))
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}: {}", e.code(), e);
            ExitCode::FAILURE
        }
    }
}

fn reports_dir(manifest_location: &Path) -> PathBuf {
    let base = if manifest_location.is_dir() {
        manifest_location
    } else {
        manifest_location.parent().unwrap_or_else(|| Path::new("."))
    };
    base.join("reports")
}

fn run(cli: Cli) -> rawrestore::Result<()> {
    let mut config = match &cli.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::default(),
    };
    let log = Logger::new(cli.verbose);

    match cli.command {
        Command::Simulate { seed, out } => {
            if let Some(out) = out {
                config.data.output_dir = out;
            }
            let outcome = harness::simulate(&config, seed, &log)?;
            println!(
                "simulated {} observations from {} images (seed {})",
                outcome.manifest.entries.len(),
                config.data.fixtures.len(),
                seed
            );
            println!("manifest: {}", outcome.manifest_path.display());
        }
        Command::Restore { method, manifest, crop } => {
            let location = manifest.unwrap_or_else(|| config.data.output_dir.clone());
            let methods = match method {
                MethodArg::All => Method::ALL.to_vec(),
                MethodArg::One(m) => vec![m],
            };
            println!(
                "{:<20} {:>8} {:>8} {:>10} {:>9}",
                "method", "psnr_db", "ssim", "init_psnr", "seconds"
            );
            for m in methods {
                let report = harness::restore_batch(&config, &location, m, crop, &log)?;
                println!(
                    "{:<20} {:>8.3} {:>8.4} {:>10.3} {:>9.2}",
                    m.label(),
                    report.mean_psnr_db,
                    report.mean_ssim,
                    report.mean_initial_psnr_db,
                    report.wall_seconds
                );
            }
            println!("reports: {}", reports_dir(&location).display());
        }
        Command::GenKernel { seed, size, out } => {
            let summary = harness::generate_kernel(&config, seed, size, &out)?;
            println!(
                "{}",
                serde_json::to_string_pretty(&summary).expect("summary serializes")
            );
        }
        Command::PsfRestore { input, grid, truth, shot, read, out } => {
            let read = read.unwrap_or_else(|| config.noise.read_for_shot(shot));
            let noise = NoiseParams { shot, read };
            let outcome =
                harness::psf_restore(&config, &input, &grid, truth.as_deref(), noise, &out, &log)?;
            for warning in &outcome.warnings {
                eprintln!("warning: {warning}");
            }
            println!("restored: {} ({:.2} s)", outcome.output.display(), outcome.wall_seconds);
            if let Some(m) = outcome.metrics {
                println!("psnr_db: {:.3}", m.psnr_db);
                println!("ssim: {:.4}", m.ssim);
            }
        }
        Command::Bench { size, reps, seed } => {
            let report = harness::bench_restore(&config, size, reps, seed)?;
            println!(
                "{}",
                serde_json::to_string_pretty(&report).expect("report serializes")
            );
        }
    }
    Ok(())
}
