mod args;
mod commands;
mod svg;

use std::fs;
use std::io::Write;
use std::path::Path;
use std::process::ExitCode;

use clap::Parser;
use selfpower::scenario::ScenarioFile;

use args::{Cli, Command};
use commands::Report;

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Io(String),
    Model(selfpower::Error),
}

impl From<selfpower::Error> for CliError {
    fn from(e: selfpower::Error) -> Self {
        CliError::Model(e)
    }
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) | CliError::Io(_) => 1,
            CliError::Model(e) => commands::exit_code(e),
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) | CliError::Io(m) => f.write_str(m),
            CliError::Model(e) => write!(f, "{e}"),
        }
    }
}

fn load_scenario(cli: &Cli) -> Result<ScenarioFile, CliError> {
    let overlay = match &cli.scenario {
        Some(path) => Some(
            fs::read_to_string(path)
                .map_err(|e| CliError::Io(format!("reading {}: {e}", path.display())))?,
        ),
        None => None,
    };
    Ok(ScenarioFile::layered(&cli.preset, overlay.as_deref())?)
}

fn write_artifacts(dir: &Path, report: &Report, svg: bool) -> Result<(), CliError> {
    let io = |e: std::io::Error| CliError::Io(format!("writing to {}: {e}", dir.display()));
    fs::create_dir_all(dir).map_err(io)?;
    for (name, body) in &report.files {
        fs::write(dir.join(name), body).map_err(io)?;
    }
    if svg {
        if let Some((name, body)) = &report.svg {
            fs::write(dir.join(name), body).map_err(io)?;
        }
    }
    Ok(())
}

fn run(cli: &Cli) -> Result<Report, CliError> {
    let file = load_scenario(cli)?;
    if let Command::ShowPreset = cli.command {
        return Ok(commands::show_preset(&file));
    }
    let scenario = file.resolve()?;
    let report = match &cli.command {
        Command::StepResponse(a) => commands::step_response(&scenario, a, cli.format)?,
        Command::Tune(a) => commands::tune(&scenario, a)?,
        Command::Stability(a) => commands::stability(&scenario, a, cli.format)?,
        Command::Energy(a) => commands::energy(&scenario, a, cli.format)?,
        Command::Simulate(a) => commands::simulate(&scenario, a, cli.format)?,
        Command::ShowPreset => unreachable!(),
    };
    if let Some(dir) = &cli.out {
        write_artifacts(dir, &report, cli.svg)?;
    } else if cli.svg && report.svg.is_some() {
        return Err(CliError::Usage("--svg needs --out <dir>".into()));
    }
    Ok(report)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match run(&cli) {
        Ok(report) => {
            let mut out = std::io::stdout().lock();
            let _ = out.write_all(report.stdout.as_bytes());
            ExitCode::from(report.exit)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
