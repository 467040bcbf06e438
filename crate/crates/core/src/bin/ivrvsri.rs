//! Command-line front end: one verb per pipeline stage.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use ivrvsri::io::{run_pipeline, EngineConfig, OverlapMode, RunOptions, Stage};

#[derive(Parser)]
#[command(name = "ivrvsri", version, about = "IVRVSRI systemic-risk analytics")]
struct Cli {
    #[command(subcommand)]
    verb: Verb,
    /// Engine configuration (TOML).
    #[arg(long, global = true, default_value = "ivrvsri.toml")]
    config: PathBuf,
    /// Output directory; overrides `out_dir` from the config.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Emit risk-map SVG heat strips from the `riskmap` stage.
    #[arg(long, global = true)]
    svg: bool,
    /// Lag depth p of the regression battery.
    #[arg(long, global = true)]
    lags: Option<usize>,
    /// Weekly-return sampling used by the regression battery.
    #[arg(long, global = true, value_enum)]
    overlap: Option<Overlap>,
}

#[derive(Subcommand, Clone, Copy)]
enum Verb {
    /// Check the configuration and every input file.
    Validate,
    /// Realized volatility, composites and the IVRVSRI family.
    Indicator,
    /// Dynamic quantile risk maps.
    Riskmap,
    /// Descriptive statistics, correlations and drawdowns.
    Stats,
    /// SRISK, Cleveland spread and CATFIN from their inputs.
    Benchmarks,
    /// Regression battery.
    Evaluate,
    /// SVG charts.
    Report,
    /// Every stage.
    All,
}

#[derive(Clone, Copy, ValueEnum)]
enum Overlap {
    On,
    Off,
    Both,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    let stage = match cli.verb {
        Verb::Validate => Stage::Validate,
        Verb::Indicator => Stage::Indicator,
        Verb::Riskmap => Stage::Riskmap,
        Verb::Stats => Stage::Stats,
        Verb::Benchmarks => Stage::Benchmarks,
        Verb::Evaluate => Stage::Evaluate,
        Verb::Report => Stage::Report,
        Verb::All => Stage::All,
    };
    let opts = RunOptions {
        svg: cli.svg,
        lags: cli.lags,
        overlap: cli.overlap.map(|o| match o {
            Overlap::On => OverlapMode::On,
            Overlap::Off => OverlapMode::Off,
            Overlap::Both => OverlapMode::Both,
        }),
        out_dir: cli.out,
    };
    let result = EngineConfig::load(&cli.config).and_then(|cfg| run_pipeline(&cfg, stage, &opts));
    match result {
        Ok(summary) => {
            if stage != Stage::Validate {
                log::info!("wrote {} files to {}", summary.files.len() + 1, summary.out_dir.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
