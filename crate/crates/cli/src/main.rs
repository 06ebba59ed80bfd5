use clap::{Parser, Subcommand};
use dicke_cli::{CliResult, Outcome, Pipeline, RunConfig, Stage};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "dicke", version, about = "Mixed-eigenstate analysis of the one- and two-photon Dicke models")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// TOML file overriding the preset.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// one-photon-paper (default) or two-photon-paper.
    #[arg(long, global = true)]
    preset: Option<String>,
    /// Worker threads; 0 uses every core.
    #[arg(long, global = true)]
    workers: Option<usize>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Reuse per-item caches left by an earlier or interrupted run.
    #[arg(long, global = true)]
    resume: bool,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Window eigenpairs and spectrum tables.
    Spectrum,
    /// Lyapunov classicality grids, chaos fractions and Poincaré sections.
    Classical,
    /// Ratio histograms, Anderson–Darling table and the r_c profile.
    Stats,
    /// Overlap indices and localization measures per eigenstate.
    Husimi,
    /// Mixed-state fractions, power-law fits and the boundary scan.
    Mixed,
    /// Every stage in order.
    All,
    /// Print the resolved configuration as TOML.
    ShowConfig,
}

fn run(cli: &Cli) -> CliResult<()> {
    let mut cfg = RunConfig::load(cli.config.as_deref(), cli.preset.as_deref())?;
    if let Some(w) = cli.workers {
        cfg.run.workers = w;
    }
    if let Some(s) = cli.seed {
        cfg.run.seed = s;
    }
    if let Some(o) = &cli.out {
        cfg.run.out = o.clone();
    }
    let stages: Vec<Stage> = match cli.command {
        Command::Spectrum => vec![Stage::Spectrum],
        Command::Classical => vec![Stage::Classical],
        Command::Stats => vec![Stage::Stats],
        Command::Husimi => vec![Stage::Husimi],
        Command::Mixed => vec![Stage::Mixed],
        Command::All => Stage::ALL.to_vec(),
        Command::ShowConfig => {
            print!("{}", cfg.to_toml());
            return Ok(());
        }
    };
    let pipeline = Pipeline::new(cfg, cli.resume)?;
    for (stage, outcome) in pipeline.run(&stages)? {
        match outcome {
            Outcome::Ran { files, seconds } => eprintln!("{}: {files} file(s) in {seconds:.1} s", stage.name()),
            Outcome::UpToDate => eprintln!("{}: up to date", stage.name()),
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
