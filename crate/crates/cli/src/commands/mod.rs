//! Subcommand implementations.

pub mod analyze;
pub mod calibrate;
pub mod compare;
pub mod encode;
pub mod simulate;

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use spikesim_core::formats::{config as config_io, weights as weights_io};
use spikesim_core::model::{validate_config, NetworkConfig, ValidatedModel};
use spikesim_core::oracle::{build_windows, FeatureFrame, InputWindow};
use spikesim_core::report::RunManifest;

use crate::{manifest, CliError};

#[derive(Parser, Debug)]
#[command(
    name = "spikesim",
    version,
    about = "Event-driven SNN classifier fabric simulator"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Run the event simulator on a trace or feature stream and write a
    /// run report with activity, conformance, output counts and power.
    Simulate(simulate::SimulateArgs),
    /// Rate-encode a feature stream into a spike trace file.
    Encode(encode::EncodeArgs),
    /// Sweep thresholds and arbiter clock for starvation feasibility.
    Analyze(analyze::AnalyzeArgs),
    /// Compare simulated spike counts against the reference network.
    Compare(compare::CompareArgs),
    /// Fit the free power-model constants to the idle/max-rate anchors.
    Calibrate(calibrate::CalibrateArgs),
}

pub fn dispatch(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Simulate(args) => simulate::run(args),
        Command::Encode(args) => encode::run(args),
        Command::Analyze(args) => analyze::run(args),
        Command::Compare(args) => compare::run(args),
        Command::Calibrate(args) => calibrate::run(args),
    }
}

/// Options shared by every command that loads a model.
#[derive(Args, Debug)]
pub struct ModelArgs {
    /// Network configuration file (TOML).
    #[arg(long)]
    pub config: PathBuf,
    /// Packed binary weight file, or a bundled model file whose thresholds
    /// and activation width override the configuration.
    #[arg(long)]
    pub weights: Option<PathBuf>,
}

pub struct LoadedModel {
    pub config: NetworkConfig,
    pub model: ValidatedModel,
    /// Set when the weight file was a bundled model overriding the config.
    pub bundle_override: bool,
}

impl ModelArgs {
    pub fn load(&self, man: &mut RunManifest) -> Result<LoadedModel, CliError> {
        let mut config = config_io::read_config(&self.config).map_err(CliError::validation)?;
        manifest::add_input(man, "config", &self.config)?;

        let mut bundle_override = false;
        let weights = match &self.weights {
            None => Vec::new(),
            Some(path) => {
                manifest::add_input(man, "weights", path)?;
                let bytes = std::fs::read(path)
                    .map_err(|e| CliError::validation(format!("{}: {e}", path.display())))?;
                if weights_io::is_model_file(&bytes) {
                    let bundle = weights_io::decode_model(&bytes, &path.display().to_string())
                        .map_err(CliError::validation)?;
                    if bundle.thresholds.len() != config.layers.len() {
                        return Err(CliError::validation(format!(
                            "bundled model has {} layers, config {}",
                            bundle.thresholds.len(),
                            config.layers.len()
                        )));
                    }
                    for (layer, th) in config.layers.iter_mut().zip(&bundle.thresholds) {
                        layer.threshold = *th;
                    }
                    config.activation_bits = bundle.activation_bits;
                    bundle_override = true;
                    bundle.weights
                } else {
                    weights_io::decode_weights(&bytes, &path.display().to_string())
                        .map_err(CliError::validation)?
                }
            }
        };

        let model = validate_config(config.clone(), weights).map_err(CliError::validation)?;
        if bundle_override {
            man.param("thresholds_from_bundle", "true");
        }
        let thresholds: Vec<String> = config
            .layers
            .iter()
            .map(|l| l.threshold.to_string())
            .collect();
        let widths: Vec<String> = config
            .layers
            .iter()
            .map(|l| l.neuron_count.to_string())
            .collect();
        man.param("layers", widths.join("-"));
        man.param("thresholds", thresholds.join(","));
        man.param("activation_bits", config.activation_bits);
        Ok(LoadedModel {
            config,
            model,
            bundle_override,
        })
    }
}

/// Read a feature file and slide it into input windows sized for the
/// network's input layer.
pub fn windows_for_config(
    path: &Path,
    config: &NetworkConfig,
) -> Result<(Vec<FeatureFrame>, Vec<InputWindow>), CliError> {
    let frames =
        spikesim_core::formats::features::read_features(path).map_err(CliError::validation)?;
    if frames.is_empty() {
        return Ok((frames, Vec::new()));
    }
    let channels = frames[0].values.len();
    let width = config.layers[0].neuron_count as usize;
    if !width.is_multiple_of(channels) {
        return Err(CliError::validation(format!(
            "input layer width {width} is not a multiple of the {channels}-channel feature size"
        )));
    }
    let depth = width / channels;
    let windows =
        build_windows(&frames, depth, config.activation_bits).map_err(CliError::validation)?;
    Ok((frames, windows))
}

/// Write a report with the timestamp header, to a file or stdout.
pub fn emit(out: Option<&Path>, body: &str) -> Result<(), CliError> {
    let text = format!("{}{}", crate::timestamp_header(), body);
    match out {
        Some(path) => std::fs::write(path, text)
            .map_err(|e| CliError::internal(format!("{}: {e}", path.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}
