//! `qharper` command-line driver: one subcommand per analysis pipeline.

mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};

use config::{RawConfig, RunConfig};
use output::Outputs;

#[derive(Parser, Debug)]
#[command(name = "qharper", version, about = "Periodically perturbed Harper model, classical and quantum")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct Common {
    /// Run configuration file ([model], [quantum], [classical], [stats], [run] sections)
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    a: Option<f64>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    epsilon: Option<f64>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    mu: Option<f64>,
    #[arg(long = "mu-prime", global = true, allow_hyphen_values = true)]
    mu_prime: Option<f64>,
    #[arg(long = "n-dim", global = true)]
    n_dim: Option<usize>,
    #[arg(long = "trotter-steps", global = true)]
    trotter_steps: Option<usize>,
    #[arg(long = "tau-s", global = true, allow_hyphen_values = true)]
    tau_s: Option<f64>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Comma-separated subset of csv,bin,png
    #[arg(long, global = true)]
    emit: Option<String>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Poincare section of a random orbit ensemble
    ClassicalSos,
    /// Floquet eigenstates with their h0 mean and dispersion
    QuantumFloquet {
        /// Also compare the Weyl transform of the sampled H0 with h0 (odd N only)
        #[arg(long)]
        weyl_check: bool,
        /// Also integrate the classical statistics ensemble
        #[arg(long)]
        classical_stats: bool,
    },
    /// One Husimi image per Floquet eigenstate
    HusimiGallery,
    /// V_jk matrix, sigma/mu profile and off-diagonal propagator weight
    VjkAnalysis,
    /// Quasi-energy spacing statistics of the full, regular and ergodic subspaces
    SpectrumStats {
        #[arg(long)]
        threshold: Option<f64>,
        #[arg(long = "brody-beta")]
        brody_beta: Option<f64>,
    },
    /// Classical and quantum chaotic-layer widths, estimated and measured
    WidthCompare,
    /// Separatrix-state Husimi distribution over a list of dimensions
    SweepN {
        #[arg(long = "n-list")]
        n_list: Option<String>,
    },
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::ClassicalSos => "classical-sos",
            Command::QuantumFloquet { .. } => "quantum-floquet",
            Command::HusimiGallery => "husimi-gallery",
            Command::VjkAnalysis => "vjk-analysis",
            Command::SpectrumStats { .. } => "spectrum-stats",
            Command::WidthCompare => "width-compare",
            Command::SweepN { .. } => "sweep-n",
        }
    }
}

fn resolve(cli: &Cli) -> Result<RunConfig> {
    let mut raw = match &cli.common.config {
        Some(p) => {
            let text = std::fs::read_to_string(p).with_context(|| format!("reading config {}", p.display()))?;
            config::parse_text(&text).with_context(|| format!("in {}", p.display()))?
        }
        None => RawConfig::default(),
    };
    let c = &cli.common;
    let flags: [(&str, Option<String>); 10] = [
        ("model.a", c.a.map(|v| v.to_string())),
        ("model.epsilon", c.epsilon.map(|v| v.to_string())),
        ("model.mu", c.mu.map(|v| v.to_string())),
        ("model.mu_prime", c.mu_prime.map(|v| v.to_string())),
        ("quantum.n_dim", c.n_dim.map(|v| v.to_string())),
        ("quantum.trotter_steps", c.trotter_steps.map(|v| v.to_string())),
        ("quantum.tau_s", c.tau_s.map(|v| v.to_string())),
        ("run.seed", c.seed.map(|v| v.to_string())),
        ("run.out", c.out.as_ref().map(|v| v.display().to_string())),
        ("run.emit", c.emit.clone()),
    ];
    for (k, v) in flags {
        if let Some(v) = v {
            raw.set(k, v);
        }
    }
    match &cli.command {
        Command::SpectrumStats { threshold, brody_beta } => {
            if let Some(t) = threshold {
                raw.set("stats.threshold", t.to_string());
            }
            if let Some(b) = brody_beta {
                raw.set("stats.brody_beta", b.to_string());
            }
        }
        Command::SweepN { n_list: Some(l) } => raw.set("run.n_list", l.clone()),
        _ => {}
    }
    let needs_dim = !matches!(cli.command, Command::ClassicalSos | Command::SweepN { .. });
    Ok(config::build(&raw, needs_dim)?)
}

fn init_threads() -> Result<()> {
    if let Ok(v) = std::env::var("QHARPER_THREADS") {
        let n: usize = v
            .trim()
            .parse()
            .ok()
            .filter(|&n| n > 0)
            .with_context(|| format!("QHARPER_THREADS must be a positive integer, got '{v}'"))?;
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    }
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    init_threads()?;
    let cfg = resolve(&cli)?;
    let mut out = Outputs::create(&cfg.output_dir)?;
    let results = match &cli.command {
        Command::ClassicalSos => commands::classical_sos(&cfg, &mut out)?,
        Command::QuantumFloquet { weyl_check, classical_stats } => {
            commands::quantum_floquet(&cfg, &mut out, *weyl_check, *classical_stats)?
        }
        Command::HusimiGallery => commands::husimi_gallery(&cfg, &mut out)?,
        Command::VjkAnalysis => commands::vjk_analysis(&cfg, &mut out)?,
        Command::SpectrumStats { .. } => commands::spectrum_stats(&cfg, &mut out)?,
        Command::WidthCompare => commands::width_compare(&cfg, &mut out)?,
        Command::SweepN { .. } => commands::sweep_n(&cfg, &mut out)?,
    };
    let manifest = out.finish(cli.command.name(), &cfg, results)?;
    eprintln!("wrote {}", manifest.display());
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
