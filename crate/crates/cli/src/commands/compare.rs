use std::path::PathBuf;

use clap::Args;
use spikesim_core::kernel;
use spikesim_core::oracle::{
    bnn_forward, compare_snn_to_oracle, encode_frames, BnnModel, EncodeMode, ToleranceRule,
};
use spikesim_core::report::render_compare_report;
use spikesim_core::time::SimTime;

use super::{emit, windows_for_config, ModelArgs};
use crate::{manifest, CliError};

#[derive(Args, Debug)]
pub struct CompareArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    /// Feature stream; the last window is held steady for the comparison.
    #[arg(long)]
    pub features: PathBuf,
    /// Fixed per-neuron tolerance (default: one count per layer of depth).
    #[arg(long)]
    pub tolerance: Option<u32>,
    /// Frames to run before the measured one.
    #[arg(long, default_value_t = 3)]
    pub warmup_frames: usize,
    /// Report file (stdout when omitted).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

pub fn run(args: CompareArgs) -> Result<(), CliError> {
    let mut man = manifest::new_manifest("compare");
    let loaded = args.model.load(&mut man)?;
    let model = &loaded.model;
    manifest::add_input(&mut man, "features", &args.features)?;
    let (_, windows) = windows_for_config(&args.features, model.config())?;
    let Some(window) = windows.last() else {
        return Err(CliError::validation("feature file holds no frames"));
    };

    let frame_ticks = model.config().frame_ticks;
    let frames = args.warmup_frames + 1;
    man.param("warmup_frames", args.warmup_frames);

    let steady: Vec<_> = (0..frames).map(|_| window.clone()).collect();
    let trace = encode_frames(&steady, frame_ticks, EncodeMode::Uniform);
    let result = kernel::run(model, &trace, SimTime(frame_ticks * frames as u64))
        .map_err(CliError::validation)?;

    let bnn = BnnModel::from_model(model);
    let activations = bnn_forward(&bnn, window).map_err(CliError::validation)?;
    let tolerance = match args.tolerance {
        Some(t) => ToleranceRule::Fixed(t),
        None => ToleranceRule::DepthScaled,
    };
    man.param(
        "tolerance",
        match tolerance {
            ToleranceRule::Fixed(t) => format!("fixed {t}"),
            ToleranceRule::DepthScaled => "depth-scaled".to_string(),
        },
    );
    let comparison = compare_snn_to_oracle(&result, &activations, &bnn, frames - 1, tolerance)
        .map_err(CliError::validation)?;

    let body = render_compare_report(&man, model, &result, &comparison);
    emit(args.out.as_deref(), &body)
}
