use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use log::warn;

use atr_turret::config::{parse_ranges, RunConfig};
use atr_turret::detgeom::Origin;
use atr_turret::detmetrics::MetricsDataset;
use atr_turret::hitprob::BudgetTable;
use atr_turret::synthetic::{synthetic_dataset, SyntheticSpec};
use atr_turret::{io, pipeline, report, Error, ErrorKind, Result};

/// Detector error through a two-axis turret: metrics, loop design,
/// targeting runs, hit-probability sweeps and error analysis.
#[derive(Parser)]
#[command(name = "atr-turret", version)]
struct Cli {
    #[command(subcommand)]
    verb: Verb,
    #[command(flatten)]
    common: Common,
}

#[derive(Subcommand)]
enum Verb {
    /// AP/AR for the whole dataset and each IoU stratum.
    Metrics,
    /// Controller coefficients, crossover, phase margin and noise spread.
    Design,
    /// One targeting run per detection and start origin.
    Simulate,
    /// Mean probability of hit per stratum, range and origin.
    Sweep,
    /// Correlations, error histograms and the variance decomposition.
    Analyze,
    /// Every stage above.
    All,
}

#[derive(Args)]
struct Common {
    /// TOML run configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    detections: Option<PathBuf>,
    #[arg(long, global = true)]
    ground_truth: Option<PathBuf>,
    /// Per-range bias and dispersion table.
    #[arg(long, global = true)]
    budget: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Run a single start origin instead of the configured list.
    #[arg(long, global = true)]
    origin: Option<Origin>,
    /// `start:stop:step` in meters, or a comma list.
    #[arg(long, global = true)]
    ranges: Option<String>,
    /// Use a seeded synthetic dataset with this many images.
    #[arg(long, global = true, conflicts_with_all = ["detections", "ground_truth"])]
    synthetic: Option<usize>,
}

fn config(c: &Common) -> Result<RunConfig> {
    let mut cfg = match &c.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if let Some(p) = &c.detections {
        cfg.paths.detections = Some(p.clone());
    }
    if let Some(p) = &c.ground_truth {
        cfg.paths.ground_truth = Some(p.clone());
    }
    if let Some(p) = &c.budget {
        cfg.paths.budget = Some(p.clone());
    }
    if let Some(p) = &c.out {
        cfg.paths.out_dir = Some(p.clone());
    }
    if let Some(s) = c.seed {
        cfg.seed = s;
    }
    if let Some(o) = c.origin {
        cfg.origins = vec![o];
    }
    if let Some(r) = &c.ranges {
        cfg.ranges_m = parse_ranges(r)?;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn dataset(c: &Common, cfg: &RunConfig) -> Result<MetricsDataset> {
    if let Some(n) = c.synthetic {
        let spec = SyntheticSpec {
            seed: cfg.seed,
            ..SyntheticSpec::with_images(n)
        };
        return synthetic_dataset(&spec, &cfg.simulation.calibration);
    }
    match (&cfg.paths.detections, &cfg.paths.ground_truth) {
        (Some(d), Some(g)) => io::read_dataset(d, g),
        _ => Err(Error::Config(
            "need --detections and --ground-truth (or --synthetic N)".into(),
        )),
    }
}

fn budget(cfg: &RunConfig) -> Result<BudgetTable> {
    match &cfg.paths.budget {
        Some(p) => io::read_budget_table(p),
        None => {
            warn!("no budget table given; using the built-in synthetic table");
            Ok(BudgetTable::synthetic())
        }
    }
}

fn run(cli: &Cli) -> Result<()> {
    let c = &cli.common;
    let cfg = config(c)?;
    let out = cfg
        .paths
        .out_dir
        .clone()
        .unwrap_or_else(|| PathBuf::from("out"));
    let files = match cli.verb {
        Verb::Design => {
            let d = pipeline::run_design(&cfg)?;
            for a in &d.axes {
                println!(
                    "{:<9} J = {:.4e} kg m^2  Kp = {:.4e}  TI = {:.4} s  TD = {:.4} s  gamma = {:.4}  fc = {:.3} Hz  PM = {:.2} deg  sigma_e = {:.3e} mils",
                    a.axis.name(),
                    a.inertia,
                    a.controller.kp,
                    a.controller.ti,
                    a.controller.td,
                    a.controller.gamma,
                    a.analysis.crossover_hz(),
                    a.analysis.phase_margin_deg,
                    a.noise_std_mils
                );
            }
            report::write_design(&out, &d)?
        }
        Verb::Metrics => {
            let m = pipeline::run_metrics(&dataset(c, &cfg)?, &cfg)?;
            for row in &m.rows {
                let ap = row
                    .report
                    .metrics
                    .map_or("-".to_string(), |x| format!("{:.4}", x.ap50));
                println!(
                    "{:<4} detections {:>6}  AP50 {ap}",
                    row.label, row.report.n_detections
                );
            }
            report::write_metrics(&out, &m)?
        }
        Verb::Simulate => {
            let sims = pipeline::run_simulations(&dataset(c, &cfg)?, &cfg)?;
            for (origin, r) in &sims {
                println!("{origin}: {} engagements", r.len());
            }
            report::write_simulations(&out, &sims)?
        }
        Verb::Sweep => {
            let m = pipeline::run_sweep(&dataset(c, &cfg)?, &budget(&cfg)?, &cfg)?;
            println!(
                "{} strata x {} ranges x {} origins",
                m.labels.len(),
                m.ranges_m.len(),
                m.origins.len()
            );
            report::write_sweep(&out, &m)?
        }
        Verb::Analyze => {
            let ds = dataset(c, &cfg)?;
            let sims = pipeline::run_simulations(&ds, &cfg)?;
            let a = pipeline::run_analysis(&ds, &sims, &cfg)?;
            for s in &a.distribution.scenarios {
                if let Some(d) = &s.decomposition {
                    println!(
                        "{}: var total {:.4e}, two-term approximation {:.4e}",
                        s.origin, d.var_rg, d.approximation
                    );
                }
            }
            report::write_analysis(&out, &a)?
        }
        Verb::All => {
            let ds = dataset(c, &cfg)?;
            let run = pipeline::run_all(&ds, &budget(&cfg)?, &cfg)?;
            report::emit_reports(&run, &out)?
        }
    };
    println!("wrote {} files to {}", files.len(), out.display());
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            match e.kind() {
                ErrorKind::Validation => ExitCode::from(2),
                ErrorKind::Numeric => ExitCode::from(3),
            }
        }
    }
}
