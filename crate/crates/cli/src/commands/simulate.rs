use std::path::PathBuf;

use clap::Args;
use spikesim_core::kernel;
use spikesim_core::model::SpikeEvent;
use spikesim_core::oracle::{decode, encode_frames, EncodeMode};
use spikesim_core::power::{inference_energy, run_power};
use spikesim_core::report::render_simulate_report;
use spikesim_core::time::SimTime;

use super::{emit, windows_for_config, ModelArgs};
use crate::{manifest, CliError};

#[derive(Args, Debug)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    /// Spike trace file to replay.
    #[arg(long, conflicts_with = "features")]
    pub trace: Option<PathBuf>,
    /// Feature stream to window, rate-encode and replay.
    #[arg(long)]
    pub features: Option<PathBuf>,
    /// Run length in whole frames (default: derived from the input, plus one
    /// drain frame for traces).
    #[arg(long, conflicts_with = "duration_us")]
    pub frames: Option<u64>,
    /// Exact run length in microseconds.
    #[arg(long)]
    pub duration_us: Option<u64>,
    /// Pack encoded spikes at frame start instead of uniform spacing.
    #[arg(long)]
    pub burst: bool,
    /// Frames per inference for the energy figures.
    #[arg(long, default_value_t = 1)]
    pub frames_per_inference: u64,
    /// Report file (stdout when omitted).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

pub fn run(args: SimulateArgs) -> Result<(), CliError> {
    let mut man = manifest::new_manifest("simulate");
    let loaded = args.model.load(&mut man)?;
    let model = &loaded.model;
    let frame_ticks = model.config().frame_ticks;

    let mode = if args.burst {
        EncodeMode::Burst
    } else {
        EncodeMode::Uniform
    };
    let (trace, trace_lines, natural_frames): (Vec<SpikeEvent>, Option<Vec<usize>>, u64) =
        match (&args.trace, &args.features) {
            (Some(path), None) => {
                manifest::add_input(&mut man, "trace", path)?;
                let (spikes, lines) = spikesim_core::formats::trace::read_trace_with_lines(path)
                    .map_err(CliError::validation)?;
                // cover the last spike and leave one frame to drain
                let last = spikes.last().map(|s| s.time.ticks()).unwrap_or(0);
                let frames = last / frame_ticks + 2;
                (spikes, Some(lines), frames)
            }
            (None, Some(path)) => {
                manifest::add_input(&mut man, "features", path)?;
                let (_, windows) = windows_for_config(path, model.config())?;
                let frames = windows.len() as u64;
                man.param("encode_mode", format!("{mode:?}"));
                (
                    encode_frames(&windows, frame_ticks, mode),
                    None,
                    frames.max(1),
                )
            }
            _ => {
                return Err(CliError::validation(
                    "exactly one of --trace or --features is required",
                ))
            }
        };

    let duration = match (args.duration_us, args.frames) {
        (Some(us), _) => SimTime(us),
        (None, Some(frames)) => SimTime(frames * frame_ticks),
        (None, None) => SimTime(natural_frames * frame_ticks),
    };
    man.param("duration_ticks", duration.ticks());
    man.param("frame_ticks", frame_ticks);

    let result = kernel::run(model, &trace, duration).map_err(|e| {
        // point at the offending trace line when there is one
        let line = match (&e, &trace_lines, &args.trace) {
            (
                kernel::SimError::TargetOutOfRange { index, .. }
                | kernel::SimError::UnsortedTrace { index },
                Some(lines),
                Some(path),
            ) => lines.get(*index).map(|l| (path.display(), *l)),
            _ => None,
        };
        match line {
            Some((path, line)) => CliError::validation(format!("{path}:{line}: {e}")),
            None => CliError::validation(e),
        }
    })?;
    let totals = result.ledger.totals();
    let params = model.config().power;
    let power = run_power(&totals, &params, duration).map_err(CliError::validation)?;
    let energy = inference_energy(
        &totals,
        &params,
        duration,
        frame_ticks,
        args.frames_per_inference,
    )
    .ok();
    let decision = decode(result.output_spike_counts());

    let body = render_simulate_report(&man, model, &result, &power, energy.as_ref(), &decision);
    emit(args.out.as_deref(), &body)
}
