use std::path::PathBuf;

use clap::Args;
use spikesim_core::calibration::calibrate;
use spikesim_core::formats::config as config_io;
use spikesim_core::report::render_calibration_report;

use super::emit;
use crate::{manifest, CliError};

#[derive(Args, Debug)]
pub struct CalibrateArgs {
    /// Network configuration providing anchors, clocks and frame length.
    #[arg(long)]
    pub config: PathBuf,
    /// Where to write the configuration with the fitted constants
    /// (defaults to rewriting the input file).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Optional calibration report file (stdout when omitted).
    #[arg(long)]
    pub report: Option<PathBuf>,
}

pub fn run(args: CalibrateArgs) -> Result<(), CliError> {
    let mut man = manifest::new_manifest("calibrate");
    let mut config = config_io::read_config(&args.config).map_err(CliError::validation)?;
    manifest::add_input(&mut man, "config", &args.config)?;

    let before = config.power;
    let outcome = calibrate(&config).map_err(CliError::validation)?;
    config.power = outcome.params;

    let target = args.out.as_deref().unwrap_or(&args.config);
    config_io::write_config(target, &config).map_err(CliError::internal)?;
    man.param("written_config", target.display().to_string());

    let body = render_calibration_report(&man, &outcome, &before);
    emit(args.report.as_deref(), &body)
}
