use std::path::PathBuf;

use clap::Args;
use spikesim_core::formats::config as config_io;
use spikesim_core::formats::trace::write_trace;
use spikesim_core::oracle::{encode_frames, EncodeMode};

use super::windows_for_config;
use crate::CliError;

#[derive(Args, Debug)]
pub struct EncodeArgs {
    /// Network configuration (input width, frame length, activation bits).
    #[arg(long)]
    pub config: PathBuf,
    /// Feature stream to window and rate-encode.
    #[arg(long)]
    pub features: PathBuf,
    /// Pack spikes at frame start instead of uniform spacing.
    #[arg(long)]
    pub burst: bool,
    /// Trace file to write.
    #[arg(long)]
    pub out: PathBuf,
}

pub fn run(args: EncodeArgs) -> Result<(), CliError> {
    let config = config_io::read_config(&args.config).map_err(CliError::validation)?;
    let (_, windows) = windows_for_config(&args.features, &config)?;
    let mode = if args.burst {
        EncodeMode::Burst
    } else {
        EncodeMode::Uniform
    };
    let trace = encode_frames(&windows, config.frame_ticks, mode);
    write_trace(&args.out, &trace).map_err(CliError::internal)?;
    eprintln!(
        "encoded {} windows into {} spikes -> {}",
        windows.len(),
        trace.len(),
        args.out.display()
    );
    Ok(())
}
