//! Two-anchor power calibration.
//!
//! The model's floor is pinned by the idle anchor directly (zero activity is
//! exactly `p_floor_nw`). The max-rate anchor pins the free energy
//! constants: a built-in reference workload drives all 16 input channels at
//! the full k-bit feature value, the run's activity counters are taken, and
//! the three free constants (wakeup, SRAM read, neuron cycle) are scaled by
//! a common factor so the modeled power lands exactly on `p_max_ref_nw`.
//! Their relative proportions are fixed (an SRAM row read costs the most, a
//! clock cycle the least); the per-SOP energy is a measured constant and is
//! never refitted.
//!
//! The rig is a two-layer 16-by-16 network whose input threshold is sized
//! from the request/service analysis to keep the arbiter comfortably below
//! saturation at the anchor drive, so the anchor is a conforming run.

use thiserror::Error;

use crate::kernel;
use crate::ledger::LayerActivity;
use crate::model::{validate_config, NetworkConfig, ValidatedModel, WeightMatrix};
use crate::oracle::{encode_frames, EncodeMode, InputWindow};
use crate::power::{run_power, PowerBreakdown, PowerParams};
use crate::starvation::services_per_frame;
use crate::time::SimTime;

/// Fixed proportions of the fitted constants, in pJ before scaling.
pub const BASE_WAKEUP_PJ: f64 = 0.2;
pub const BASE_SRAM_READ_PJ: f64 = 2.0;
pub const BASE_NEURON_CYCLE_PJ: f64 = 0.05;

/// Channels the reference rig drives (the feature front end width).
pub const RIG_CHANNELS: u32 = 16;
/// Downstream width of the rig.
pub const RIG_OUTPUTS: u32 = 16;
/// Frames the anchor workload runs.
pub const RIG_FRAMES: u64 = 10;
/// Target arbiter utilization at the anchor drive.
pub const RIG_TARGET_UTILIZATION: f64 = 0.4;

#[derive(Debug, Error)]
pub enum CalibrationError {
    #[error(
        "anchors are degenerate: p_max_ref ({p_max} nW) does not exceed p_floor ({p_floor} nW)"
    )]
    DegenerateAnchors { p_floor: f64, p_max: f64 },
    #[error(
        "anchor infeasible: synaptic-operation energy alone is {sop_nw:.1} nW against a \
         {budget_nw:.1} nW dynamic budget; free constants would need to be negative"
    )]
    AnchorInfeasible { sop_nw: f64, budget_nw: f64 },
    #[error("anchor workload produced no free-constant activity to fit")]
    NoActivity,
    #[error("rig model invalid: {0}")]
    BadRig(crate::model::ModelErrors),
}

/// Description of the anchor rig a calibration used.
#[derive(Clone, Debug, PartialEq)]
pub struct RigDescription {
    pub channels: u32,
    pub outputs: u32,
    pub input_threshold: u32,
    pub max_feature: u32,
    pub frames: u64,
}

/// A completed fit.
#[derive(Clone, Debug)]
pub struct CalibrationOutcome {
    pub params: PowerParams<f64>,
    /// Common factor applied to the base proportions.
    pub scale: f64,
    pub anchor_totals: LayerActivity,
    pub anchor_duration: SimTime,
    pub anchor_power: PowerBreakdown<f64>,
    pub rig: RigDescription,
}

/// The rig network and its drive for a configuration's clocks, frame length
/// and activation width.
pub fn anchor_workload(
    config: &NetworkConfig,
    feature_value: u32,
    frames: u64,
) -> Result<(ValidatedModel, Vec<crate::model::SpikeEvent>, SimTime), CalibrationError> {
    let vmax = config.max_activation();
    let capacity: f64 = services_per_frame(
        config.arbiter_clock_hz,
        config.frame_ticks,
        config.arbiter_cycles_per_request,
    );
    let peak_demand = f64::from(RIG_CHANNELS * vmax);
    let threshold = (peak_demand / (RIG_TARGET_UTILIZATION * capacity))
        .ceil()
        .max(1.0) as u32;

    let mut rig = NetworkConfig::from_widths(
        &[RIG_CHANNELS, RIG_OUTPUTS],
        &[threshold, 1],
        config.neuron_clock_hz,
        config.arbiter_clock_hz,
        config.arbiter_cycles_per_request,
        config.frame_ticks,
        config.activation_bits,
    );
    rig.power = config.power;
    let model = validate_config(
        rig,
        vec![WeightMatrix::checkerboard(RIG_CHANNELS, RIG_OUTPUTS)],
    )
    .map_err(CalibrationError::BadRig)?;

    let window = InputWindow {
        values: vec![feature_value; RIG_CHANNELS as usize],
    };
    let windows: Vec<InputWindow> = (0..frames).map(|_| window.clone()).collect();
    let trace = encode_frames(&windows, config.frame_ticks, EncodeMode::Uniform);
    let duration = SimTime(config.frame_ticks * frames);
    Ok((model, trace, duration))
}

/// Fit the free energy constants so the idle and max-rate anchors reproduce
/// `p_floor_nw` and `p_max_ref_nw` exactly.
pub fn calibrate(config: &NetworkConfig) -> Result<CalibrationOutcome, CalibrationError> {
    let power = &config.power;
    if power.p_max_ref_nw <= power.p_floor_nw {
        return Err(CalibrationError::DegenerateAnchors {
            p_floor: power.p_floor_nw,
            p_max: power.p_max_ref_nw,
        });
    }
    let vmax = config.max_activation();
    let (model, trace, duration) = anchor_workload(config, vmax, RIG_FRAMES)?;
    let threshold = model.config().layers[0].threshold;
    let result = kernel::run(&model, &trace, duration).expect("anchor trace is valid");
    let totals = result.ledger.totals();

    let duration_us = duration.ticks() as f64;
    let budget_nw = power.p_max_ref_nw - power.p_floor_nw;
    let budget_pj = budget_nw * duration_us / 1000.0;
    let sop_pj = power.e_sop_pj * totals.sops as f64;
    let remainder_pj = budget_pj - sop_pj;
    if remainder_pj < 0.0 {
        return Err(CalibrationError::AnchorInfeasible {
            sop_nw: sop_pj * 1000.0 / duration_us,
            budget_nw,
        });
    }
    let denom = BASE_WAKEUP_PJ * totals.wakeups as f64
        + BASE_SRAM_READ_PJ * totals.sram_reads as f64
        + BASE_NEURON_CYCLE_PJ * totals.neuron_cycles_ungated as f64;
    if denom == 0.0 {
        return Err(CalibrationError::NoActivity);
    }
    let scale = remainder_pj / denom;

    let mut params = *power;
    params.e_wakeup_pj = scale * BASE_WAKEUP_PJ;
    params.e_sram_read_pj = scale * BASE_SRAM_READ_PJ;
    params.e_neuron_cycle_pj = scale * BASE_NEURON_CYCLE_PJ;

    let anchor_power = run_power(&totals, &params, duration).expect("positive duration");
    debug_assert!((anchor_power.total_nw() - power.p_max_ref_nw).abs() < 1e-6);
    Ok(CalibrationOutcome {
        params,
        scale,
        anchor_totals: totals,
        anchor_duration: duration,
        anchor_power,
        rig: RigDescription {
            channels: RIG_CHANNELS,
            outputs: RIG_OUTPUTS,
            input_threshold: threshold,
            max_feature: vmax,
            frames: RIG_FRAMES,
        },
    })
}

/// One step of an input-rate sweep on the calibration rig.
#[derive(Clone, Debug)]
pub struct RatePoint {
    pub feature_value: u32,
    /// Spikes delivered per second (external plus synaptic).
    pub delivered_rate_hz: f64,
    pub power: PowerBreakdown<f64>,
    pub conforming: bool,
}

/// Sweep the rig's input rate from silence to the full k-bit drive in
/// `steps` evenly spaced points, evaluating power with the given params.
pub fn rate_sweep(
    config: &NetworkConfig,
    params: &PowerParams<f64>,
    steps: u32,
) -> Result<Vec<RatePoint>, CalibrationError> {
    assert!(steps >= 2);
    let vmax = config.max_activation();
    let mut points = Vec::new();
    for k in 0..steps {
        let value = (u64::from(vmax) * u64::from(k) / u64::from(steps - 1)) as u32;
        let (model, trace, duration) = anchor_workload(config, value, RIG_FRAMES)?;
        let result = kernel::run(&model, &trace, duration).expect("sweep trace is valid");
        let totals = result.ledger.totals();
        let power = run_power(&totals, params, duration).expect("positive duration");
        points.push(RatePoint {
            feature_value: value,
            delivered_rate_hz: totals.spikes_delivered as f64 / duration.as_secs_f64(),
            power,
            conforming: result.conforming,
        });
    }
    Ok(points)
}
