//! Command-line driver: argument and config-file handling, subcommand
//! dispatch, CSV and SVG output.

pub mod args;
pub mod commands;
pub mod config;
pub mod error;
pub mod render;

use std::ffi::OsString;

use clap::error::ErrorKind;
use clap::Parser;

use crate::args::{Cli, Command, RunArgs, Settings};
use crate::config::ConfigFile;
use crate::error::Result;

/// Parses `args`, runs the subcommand and returns the process exit code.
pub fn run<I, T>(args: I, env_seed: Option<&str>) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
        }
    };
    match dispatch(cli, env_seed) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn dispatch(cli: Cli, env_seed: Option<&str>) -> Result<()> {
    let file = match &cli.config {
        Some(path) => ConfigFile::read(path)?,
        None => ConfigFile::default(),
    };
    let settings =
        |args: &RunArgs| Settings::resolve(cli.seed, cli.output_dir.clone(), args, &file, env_seed);
    let files = match &cli.command {
        Command::Estimate(args) => {
            print!("{}", commands::estimate(args)?);
            return Ok(());
        }
        Command::Asymptotics(a) => commands::asymptotics(&settings(a)?)?,
        Command::ReproduceTables(a) => commands::reproduce_tables(&settings(a)?)?,
        Command::ReproduceCurves(a) => commands::reproduce_curves(&settings(a)?)?,
        Command::CovariateEffects(a) => commands::covariate_effects(&settings(a)?)?,
        Command::Replications(a) => commands::replications(&settings(a)?)?,
    };
    let names: Vec<String> = files.iter().map(|p| p.display().to_string()).collect();
    println!("wrote {}", names.join(", "));
    Ok(())
}
