use std::path::PathBuf;

use clap::Args;
use spikesim_core::kernel;
use spikesim_core::oracle::{self, BnnModel};
use spikesim_core::report::render_sweep_csv;
use spikesim_core::starvation::{
    evaluate_point, sweep_vectors, verify_against_sim, LayerLoad, VerifyReport,
};
use spikesim_core::time::SimTime;

use super::{emit, windows_for_config, ModelArgs};
use crate::{manifest, CliError};

#[derive(Args, Debug)]
pub struct AnalyzeArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    /// Per-layer incoming spikes per frame per neuron, comma-separated
    /// (one value per layer).
    #[arg(long, conflicts_with_all = ["features", "trace"])]
    pub loads: Option<String>,
    /// Estimate loads from reference-network activations over this feature
    /// stream (requires --weights).
    #[arg(long)]
    pub features: Option<PathBuf>,
    /// Estimate loads from a simulation of this trace (requires --weights).
    #[arg(long, conflicts_with = "features")]
    pub trace: Option<PathBuf>,
    /// Common threshold range swept for every layer.
    #[arg(long, default_value_t = 1)]
    pub th_min: u32,
    #[arg(long, default_value_t = 64)]
    pub th_max: u32,
    /// Arbiter clock range in kHz.
    #[arg(long, default_value_t = 1)]
    pub clock_min_khz: u64,
    #[arg(long, default_value_t = 70)]
    pub clock_max_khz: u64,
    #[arg(long, default_value_t = 1)]
    pub clock_step_khz: u64,
    /// Cross-check the recommended points (and the configured operating
    /// point) against the event simulator.
    #[arg(long)]
    pub verify: bool,
    /// CSV file to write (stdout when omitted).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

pub fn run(args: AnalyzeArgs) -> Result<(), CliError> {
    let mut man = manifest::new_manifest("analyze");
    // explicit loads need only the configuration; the two estimate modes
    // need the validated model (and therefore --weights)
    let loaded = if args.loads.is_some() && args.model.weights.is_none() {
        None
    } else {
        Some(args.model.load(&mut man)?)
    };
    let config = match &loaded {
        Some(l) => l.config.clone(),
        None => {
            manifest::add_input(&mut man, "config", &args.model.config)?;
            spikesim_core::formats::config::read_config(&args.model.config)
                .map_err(CliError::validation)?
        }
    };
    let frame_ticks = config.frame_ticks;
    let cycles = config.arbiter_cycles_per_request;
    let need_model = || {
        loaded
            .as_ref()
            .ok_or_else(|| CliError::validation("this load source requires --weights"))
    };

    // resolve per-layer loads from the chosen source
    let (loads_source, spikes_per_neuron): (&str, Vec<f64>) =
        match (&args.loads, &args.features, &args.trace) {
            (Some(text), None, None) => {
                let mut values = Vec::new();
                for part in text.split(',') {
                    values.push(
                        part.trim().parse::<f64>().map_err(|_| {
                            CliError::validation(format!("bad load value '{part}'"))
                        })?,
                    );
                }
                if values.len() != config.layers.len() {
                    return Err(CliError::validation(format!(
                        "--loads has {} values for {} layers",
                        values.len(),
                        config.layers.len()
                    )));
                }
                ("explicit", values)
            }
            (None, Some(path), None) => {
                let loaded = need_model()?;
                manifest::add_input(&mut man, "features", path)?;
                let (_, windows) = windows_for_config(path, &loaded.config)?;
                if windows.is_empty() {
                    return Err(CliError::validation("feature file holds no frames"));
                }
                let bnn = BnnModel::from_model(&loaded.model);
                let loads =
                    oracle::estimate_layer_loads(&bnn, &windows).map_err(CliError::validation)?;
                ("reference-network estimate", loads)
            }
            (None, None, Some(path)) => {
                let loaded = need_model()?;
                manifest::add_input(&mut man, "trace", path)?;
                let spikes = spikesim_core::formats::trace::read_trace(path)
                    .map_err(CliError::validation)?;
                let last = spikes.last().map(|s| s.time.ticks()).unwrap_or(0);
                let frames = (last / frame_ticks + 1).max(1);
                let result = kernel::run(&loaded.model, &spikes, SimTime(frames * frame_ticks))
                    .map_err(CliError::validation)?;
                let loads = result
                    .ledger
                    .per_layer
                    .iter()
                    .zip(&config.layers)
                    .map(|(l, layer)| {
                        l.spikes_delivered as f64 / f64::from(layer.neuron_count) / frames as f64
                    })
                    .collect();
                ("simulation ledger", loads)
            }
            _ => {
                return Err(CliError::validation(
                    "exactly one of --loads, --features or --trace is required",
                ))
            }
        };
    man.param("loads_source", loads_source);
    man.param(
        "loads",
        spikes_per_neuron
            .iter()
            .map(|v| format!("{v:.3}"))
            .collect::<Vec<_>>()
            .join(","),
    );

    let loads: Vec<LayerLoad<f64>> = spikes_per_neuron
        .iter()
        .zip(&config.layers)
        .map(|(s, layer)| LayerLoad {
            spikes_per_neuron: *s,
            neuron_count: layer.neuron_count,
            threshold: layer.threshold,
        })
        .collect();

    if args.th_min < 1 || args.th_min > args.th_max || args.clock_min_khz > args.clock_max_khz {
        return Err(CliError::validation("empty sweep range"));
    }
    let th_candidates: Vec<u32> = (args.th_min..=args.th_max).collect();
    let clock_candidates: Vec<u64> = (args.clock_min_khz..=args.clock_max_khz)
        .step_by(args.clock_step_khz.max(1) as usize)
        .map(|k| k * 1000)
        .collect();
    man.param("th_range", format!("{}..={}", args.th_min, args.th_max));
    man.param(
        "clock_range_khz",
        format!(
            "{}..={} step {}",
            args.clock_min_khz, args.clock_max_khz, args.clock_step_khz
        ),
    );

    // one threshold coupled across every layer, as in a 2D threshold/clock
    // map; the configured operating point is evaluated alongside the grid
    let grid: Vec<Vec<u32>> = th_candidates
        .iter()
        .map(|t| vec![*t; config.layers.len()])
        .collect();
    let result = sweep_vectors(&loads, &grid, &clock_candidates, frame_ticks, cycles)
        .map_err(CliError::validation)?;

    let operating_thresholds: Vec<u32> = config.layers.iter().map(|l| l.threshold).collect();
    let operating = evaluate_point(
        &loads,
        &operating_thresholds,
        config.arbiter_clock_hz,
        frame_ticks,
        cycles,
    );
    man.param(
        "operating_point",
        format!(
            "clock={}Hz thresholds={} feasible={} margin={:.3}",
            operating.clock_hz,
            operating_thresholds
                .iter()
                .map(u32::to_string)
                .collect::<Vec<_>>()
                .join(","),
            operating.feasible,
            operating.margin
        ),
    );

    let mut verification: Vec<(String, VerifyReport)> = Vec::new();
    if args.verify {
        let mut targets: Vec<(String, &spikesim_core::starvation::SweepPoint<f64>)> = result
            .recommended
            .iter()
            .take(3)
            .map(|i| (format!("recommended point {i}"), &result.points[*i]))
            .collect();
        targets.push(("operating point".to_string(), &operating));
        for (label, p) in targets {
            let binding = &loads[p.binding_layer];
            let report = verify_against_sim(
                binding.spikes_per_neuron.round().max(0.0) as u32,
                binding.neuron_count,
                p.thresholds[p.binding_layer],
                p.clock_hz,
                cycles,
                frame_ticks,
                config.neuron_clock_hz,
                2,
            )
            .map_err(CliError::validation)?;
            verification.push((label, report));
        }
    }

    let mut body = render_sweep_csv(&man, &result, &verification);
    body.push_str(&format!(
        "# operating point: clock={}Hz thresholds={} services={:.3} max_requests={:.3} margin={:.3} feasible={}\n",
        operating.clock_hz,
        operating_thresholds
            .iter()
            .map(u32::to_string)
            .collect::<Vec<_>>()
            .join(","),
        operating.services,
        operating.max_requests,
        operating.margin,
        operating.feasible,
    ));
    emit(args.out.as_deref(), &body)
}
