use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use resonator_cli::{
    execute, figure_config, parse_config, CliError, CliResult, Command, ExperimentConfig,
    FigurePreset, OutputFormat,
};

#[derive(Parser)]
#[command(
    name = "resonator",
    version,
    about = "Nonreciprocal resonator-array simulator"
)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,

    /// JSON experiment config
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Output directory (overrides the config)
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Artifact formats
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,

    /// Zero-mode tolerance on |Re E|
    #[arg(long, global = true)]
    tol: Option<f64>,
}

#[derive(Subcommand)]
enum Cmd {
    /// Eigenvalues, eigenvectors and mode classification
    Spectrum,
    /// Spectrum and IPR across a t2 grid
    Sweep,
    /// Time evolution of the configured excitation
    Evolve,
    /// Driven steady-state frequency scan
    Scan,
    /// Regenerate the data behind a figure (fig2 ... fig10)
    Reproduce { figure: String },
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    #[value(name = "csv+svg")]
    CsvSvg,
}

fn load(path: &PathBuf) -> CliResult<ExperimentConfig> {
    let text = fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.clone(),
        source,
    })?;
    Ok(parse_config(&text)?)
}

fn apply_flags(mut config: ExperimentConfig, cli: &Cli) -> CliResult<ExperimentConfig> {
    if let Some(dir) = &cli.out {
        config.output.directory = dir.clone();
    }
    if let Some(f) = cli.format {
        config.output.format = match f {
            Format::Csv => OutputFormat::Csv,
            Format::CsvSvg => OutputFormat::CsvSvg,
        };
    }
    if let Some(tol) = cli.tol {
        if !(tol > 0.0 && tol.is_finite()) {
            return Err(CliError::Usage(format!(
                "--tol must be a positive number, got {tol}"
            )));
        }
        config.run.zero_mode_tol = tol;
    }
    Ok(config)
}

fn run(cli: &Cli) -> CliResult<Vec<PathBuf>> {
    let (command, config) = match &cli.command {
        Cmd::Reproduce { figure } => {
            let fig = FigurePreset::from_name(figure).ok_or_else(|| {
                CliError::Usage(format!(
                    "unknown figure `{figure}` (expected fig2 ... fig10)"
                ))
            })?;
            let base = cli.config.as_ref().map(load).transpose()?;
            (Command::Reproduce(fig), figure_config(fig, base.as_ref()))
        }
        other => {
            let path = cli
                .config
                .as_ref()
                .ok_or_else(|| CliError::Usage("this command needs --config <path>".into()))?;
            let command = match other {
                Cmd::Spectrum => Command::Spectrum,
                Cmd::Sweep => Command::Sweep,
                Cmd::Evolve => Command::Evolve,
                Cmd::Scan => Command::Scan,
                Cmd::Reproduce { .. } => unreachable!(),
            };
            (command, load(path)?)
        }
    };
    execute(command, &apply_flags(config, cli)?)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(paths) => {
            for p in paths {
                println!("{}", p.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
