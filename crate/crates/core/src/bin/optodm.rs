use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use optodm::app::{self, RunOptions, ScanOutput};
use optodm::config::RunConfig;
use optodm::materials::CouplingChannel;
use optodm::Result;

/// Sensitivity forecasts and Monte Carlo runs for membrane dark-photon searches.
#[derive(Parser)]
#[command(name = "optodm", version)]
struct Cli {
    /// TOML run configuration; built-in defaults when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory (overrides `output.dir`).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Monte Carlo seed override.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Coupling channel: b-minus-l or b.
    #[arg(long, global = true)]
    channel: Option<CouplingChannel>,
    /// Add multimode sensitivity curves.
    #[arg(long, global = true)]
    multimode: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Noise budget of each membrane's fundamental.
    Budget,
    /// Sensitivity curves.
    Gmin,
    /// Compare a sensitivity CSV with published bound curves.
    Bounds {
        #[arg(long)]
        sensitivity: PathBuf,
        #[arg(long = "bound", required = true)]
        bounds: Vec<PathBuf>,
    },
    /// Injection/recovery run.
    Montecarlo,
    /// Scan plan.
    Scan,
    /// Mode tables.
    Modes,
}

fn run(cli: Cli) -> Result<()> {
    let cfg = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    let opts = RunOptions {
        out: cli.out.clone(),
        seed: cli.seed,
        channel: cli.channel,
        multimode: cli.multimode,
    };
    match cli.command {
        Command::Budget => {
            for s in app::run_budget(&cfg, &opts)? {
                println!(
                    "{:>5} cm  f11 = {:.3} Hz  sqrt(Sxx_imp) = {:.3e} m/rtHz  sqrt(Saa_th) = {:.3e} m/s^2/rtHz  dw_det = {:.4} rad/s  -> {}",
                    s.side_cm, s.f11_hz, s.sqrt_sxx_imp, s.sqrt_saa_th, s.detection_bandwidth_rad_s, s.file
                );
            }
        }
        Command::Gmin => {
            for c in app::run_gmin(&cfg, &opts)? {
                println!(
                    "{:>5} cm  tau = {:<8} g_min(f11) = {:.3e}  thermal floor {:.3e}  best {:.3e} at {:.3} Hz  -> {}",
                    c.side_cm, c.tau_label, c.g_min_resonance, c.g_thermal_floor, c.g_best, c.f_best_hz, c.file
                );
            }
        }
        Command::Bounds { sensitivity, bounds } => {
            let out = opts.out.clone().unwrap_or_else(|| cfg.output.dir.clone());
            for c in app::run_bounds(&sensitivity, &bounds, &out, cli.channel)? {
                match (c.overlap, c.max_ratio, c.max_ratio_f_hz) {
                    (Some((lo, hi)), Some(r), Some(f)) => println!(
                        "{}: overlap {:.3}-{:.3} Hz, max ratio {:.3e} at {:.3} Hz, {} band(s) above 1",
                        c.label,
                        lo,
                        hi,
                        r,
                        f,
                        c.exceed_bands.len()
                    ),
                    _ => println!("{}: empty overlap with the sensitivity curve", c.label),
                }
            }
        }
        Command::Montecarlo => {
            let m = app::run_montecarlo(&cfg, &opts)?;
            let r = &m.result;
            println!(
                "seed {}  g_hat = {:.3e} +- {:.3e}  snr = {:.2}  detected = {}  expected bound = {:.3e}",
                m.seed, r.g_hat, r.g_err, r.snr, r.detected, m.expected_bound
            );
            if let Some(ul) = r.upper_limit {
                println!("upper limit = {ul:.3e}");
            }
        }
        Command::Scan => match app::run_scanplan(&cfg, &opts)? {
            ScanOutput::Single(p) => {
                println!(
                    "{} steps, {:.3} Hz covered, {:.1} s total",
                    p.steps.len(),
                    p.covered_width() / std::f64::consts::TAU,
                    p.total_time
                );
                if let Some(w) = &p.warning {
                    eprintln!("warning: {w}");
                }
            }
            ScanOutput::Campaign(c) => {
                println!(
                    "{} membranes, wall clock {:.1} s, coverage {:.4} (fundamentals) {:.4} (with harmonics)",
                    c.plans.len(),
                    c.wall_clock,
                    c.coverage.fundamental_fraction,
                    c.coverage.with_harmonics_fraction
                );
            }
        },
        Command::Modes => {
            for (file, n) in app::run_modes(&cfg, &opts)? {
                println!("{n} modes -> {file}");
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
