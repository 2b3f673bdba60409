use clap::{Parser, Subcommand};
use dampwave::config::{parse_config, ExperimentConfig};
use dampwave::decay::predict_decay;
use dampwave::harness;
use std::path::PathBuf;
use std::process::ExitCode;

/// Radial damped-wave simulator and decay-rate classifier.
#[derive(Parser)]
#[command(name = "dampwave", version, about)]
struct Cli {
    /// Experiment config file (key=value sections); defaults apply if omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory, overriding the config's [output] dir.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker thread count for sweep cells (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Seed override for the randomized invariant batteries.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one experiment; writes energies.csv, prediction.txt, fit_report.txt.
    Simulate,
    /// Print the decay-rate classification of the configured model.
    Classify,
    /// Write a classification-only (p, lambda) grid to atlas.csv.
    Atlas,
    /// Run every (p, lambda) sweep cell and write summary.csv.
    Sweep,
    /// Check the damping-potential and weight inequalities node by node.
    VerifyWeights,
    /// Quick special-function and energy-invariant checks.
    Selftest,
}

fn load_config(cli: &Cli) -> dampwave::Result<ExperimentConfig> {
    let mut cfg = match &cli.config {
        Some(path) => parse_config(&std::fs::read_to_string(path)?)?,
        None => ExperimentConfig::default(),
    };
    if let Some(out) = &cli.out {
        cfg.output_dir = out.display().to_string();
    }
    if let Some(seed) = cli.seed {
        cfg.run.seed = seed;
    }
    Ok(cfg)
}

fn execute(cli: &Cli) -> dampwave::Result<u8> {
    if let Some(threads) = cli.threads {
        // A later global-pool init loses to an earlier implicit one; that
        // only happens in-process during tests, so ignore the error.
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global();
    }
    let cfg = load_config(cli)?;
    let out_dir = PathBuf::from(&cfg.output_dir);
    match cli.command {
        Command::Simulate => {
            let artifacts = harness::run_experiment(&cfg, &out_dir)?;
            print!(
                "{}",
                harness::render_prediction(&artifacts.prediction, cfg.run.case)
            );
            print!("{}", harness::render_fit_report(&artifacts.fits));
            println!("wrote {}", out_dir.display());
            Ok(0)
        }
        Command::Classify => {
            cfg.validate()?;
            let pred = predict_decay(&cfg.model, cfg.run.case)?;
            print!("{}", harness::render_prediction(&pred, cfg.run.case));
            Ok(0)
        }
        Command::Atlas => {
            cfg.validate()?;
            let path = harness::atlas(&cfg, &out_dir)?;
            println!("wrote {}", path.display());
            Ok(0)
        }
        Command::Sweep => {
            let path = harness::sweep(&cfg, &out_dir)?;
            println!("wrote {}", path.display());
            Ok(0)
        }
        Command::VerifyWeights => {
            let battery = harness::verify_weights(&cfg, 25)?;
            print!("{}", battery.report());
            Ok(if battery.ok() { 0 } else { 3 })
        }
        Command::Selftest => {
            let battery = harness::selftest();
            print!("{}", battery.report());
            Ok(if battery.ok() { 0 } else { 3 })
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(code) => ExitCode::from(code),
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(harness::exit_code_for(&err) as u8)
        }
    }
}
