//! Activity-based power model.
//!
//! Power is post-processing only: the simulator produces activity counters
//! and this module converts them into average power and per-inference energy.
//! The model is a floor plus a term linear in each counter:
//!
//! `P = p_floor + (e_sop*sops + e_wakeup*wakeups + e_sram_read*sram_reads
//!      + e_neuron_cycle*neuron_cycles_ungated) / duration`
//!
//! with energies in pJ, duration in µs and power in nW. The gating ledger
//! (baseline, clock-gating saving, power-gating saving) is kept separately:
//! the two savings compose multiplicatively, the second applying to the
//! remainder left by the first.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ledger::LayerActivity;
use crate::scalar::Real;
use crate::time::SimTime;

/// Calibration constants for the power model.
///
/// `e_wakeup_pj`, `e_sram_read_pj` and `e_neuron_cycle_pj` are fitted by the
/// calibration command so that an idle run lands on `p_floor_nw` and the
/// reference max-rate workload lands on `p_max_ref_nw`; the shipped defaults
/// are the output of that fit at the default clocks.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PowerParams<F> {
    /// Average power with no spike-driven power management, nW.
    pub p_baseline_nw: F,
    /// Fraction of the baseline removed by spike-driven clock generation and gating.
    pub clk_saving_frac: F,
    /// Additional fraction removed by power gating, applied to the post-clock-gating remainder.
    pub pg_extra_frac: F,
    /// Measured all-idle floor, nW.
    pub p_floor_nw: F,
    /// Reference power at the max-input-rate anchor workload, nW.
    pub p_max_ref_nw: F,
    /// Energy per synaptic operation, pJ.
    pub e_sop_pj: F,
    /// Energy per neuron wake-up (power un-gate), pJ.
    pub e_wakeup_pj: F,
    /// Energy per weight SRAM row read, pJ.
    pub e_sram_read_pj: F,
    /// Energy per un-gated neuron clock cycle, pJ.
    pub e_neuron_cycle_pj: F,
}

impl Default for PowerParams<f64> {
    /// Defaults at the reference operating point. The three fitted constants
    /// are the output of `calibration::calibrate` on the default clocks
    /// (70 kHz neuron, 17 kHz arbiter, 4 cycles/service, 80 ms frames, 6-bit
    /// activations).
    fn default() -> Self {
        PowerParams {
            p_baseline_nw: 750.0,
            clk_saving_frac: 0.63,
            pg_extra_frac: 0.20,
            p_floor_nw: 75.0,
            p_max_ref_nw: 220.0,
            e_sop_pj: 1.5,
            e_wakeup_pj: 0.8053384746413095,
            e_sram_read_pj: 8.053384746413094,
            e_neuron_cycle_pj: 0.20133461866032737,
        }
    }
}

impl<F: Real> PowerParams<F> {
    pub fn cast<G: Real>(&self) -> PowerParams<G> {
        let c = |v: F| G::from_f64_lossy(v.to_f64().unwrap());
        PowerParams {
            p_baseline_nw: c(self.p_baseline_nw),
            clk_saving_frac: c(self.clk_saving_frac),
            pg_extra_frac: c(self.pg_extra_frac),
            p_floor_nw: c(self.p_floor_nw),
            p_max_ref_nw: c(self.p_max_ref_nw),
            e_sop_pj: c(self.e_sop_pj),
            e_wakeup_pj: c(self.e_wakeup_pj),
            e_sram_read_pj: c(self.e_sram_read_pj),
            e_neuron_cycle_pj: c(self.e_neuron_cycle_pj),
        }
    }

    /// Sanity warnings; none of these abort a run.
    pub fn lint(&self) -> Vec<String> {
        let mut warnings = Vec::new();
        let fields = [
            ("p_baseline_nw", self.p_baseline_nw),
            ("clk_saving_frac", self.clk_saving_frac),
            ("pg_extra_frac", self.pg_extra_frac),
            ("p_floor_nw", self.p_floor_nw),
            ("p_max_ref_nw", self.p_max_ref_nw),
            ("e_sop_pj", self.e_sop_pj),
            ("e_wakeup_pj", self.e_wakeup_pj),
            ("e_sram_read_pj", self.e_sram_read_pj),
            ("e_neuron_cycle_pj", self.e_neuron_cycle_pj),
        ];
        for (name, v) in fields {
            if v < F::zero() {
                warnings.push(format!("power parameter {name} is negative ({v})"));
            }
        }
        let remainder = (F::one() - self.clk_saving_frac) * (F::one() - self.pg_extra_frac);
        let lo = F::from_f64_lossy(0.28);
        let hi = F::from_f64_lossy(0.31);
        if remainder < lo || remainder > hi {
            warnings.push(format!(
                "gating ledger remainder {remainder:.4} is outside the reference 0.296 (+-1%) window"
            ));
        }
        warnings
    }
}

/// Baseline power after clock-gating and power-gating savings.
///
/// The power-gating fraction applies to what clock gating left over, so the
/// defaults give 750 * 0.37 * 0.80 = 222 nW, a 70.4% reduction.
pub fn gated_baseline_power<F: Real>(params: &PowerParams<F>) -> F {
    params.p_baseline_nw * (F::one() - params.clk_saving_frac) * (F::one() - params.pg_extra_frac)
}

/// Per-component average power for one run, nW.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PowerBreakdown<F> {
    pub floor_nw: F,
    pub sop_nw: F,
    pub wakeup_nw: F,
    pub sram_read_nw: F,
    pub neuron_cycle_nw: F,
}

impl<F: Real> PowerBreakdown<F> {
    pub fn dynamic_nw(&self) -> F {
        self.sop_nw + self.wakeup_nw + self.sram_read_nw + self.neuron_cycle_nw
    }

    pub fn total_nw(&self) -> F {
        self.floor_nw + self.dynamic_nw()
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum PowerError {
    #[error("run duration must be positive")]
    ZeroDuration,
    #[error("result holds no complete frame")]
    NoFullFrame,
}

/// Average power for a run summarized by its total activity counters.
///
/// 1 pJ per µs is 1000 nW, hence the scale factor.
pub fn run_power<F: Real>(
    totals: &LayerActivity,
    params: &PowerParams<F>,
    duration: SimTime,
) -> Result<PowerBreakdown<F>, PowerError> {
    if duration.ticks() == 0 {
        return Err(PowerError::ZeroDuration);
    }
    let us = F::from_u64_exactish(duration.ticks());
    let k = F::from_f64_lossy(1000.0);
    let term = |count: u64, e_pj: F| e_pj * F::from_u64_exactish(count) * k / us;
    Ok(PowerBreakdown {
        floor_nw: params.p_floor_nw,
        sop_nw: term(totals.sops, params.e_sop_pj),
        wakeup_nw: term(totals.wakeups, params.e_wakeup_pj),
        sram_read_nw: term(totals.sram_reads, params.e_sram_read_pj),
        neuron_cycle_nw: term(totals.neuron_cycles_ungated, params.e_neuron_cycle_pj),
    })
}

/// Energy per inference, reported two ways that the source data does not
/// reconcile: average power times the inference window, and synaptic-
/// operation energy alone. Reports carry both.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct InferenceEnergy<F> {
    /// Average power integrated over one inference window, nJ.
    pub from_power_nj: F,
    /// sops-per-inference * e_sop alone, nJ.
    pub sop_only_nj: F,
    /// Frames per inference window used for both figures.
    pub frames_per_inference: u64,
}

/// Energy per inference from a completed run.
///
/// `frames` is the number of complete frames the run contains; an inference
/// consumes `frames_per_inference` of them (1 unless the classifier votes
/// over a longer window).
pub fn inference_energy<F: Real>(
    totals: &LayerActivity,
    params: &PowerParams<F>,
    duration: SimTime,
    frame_ticks: u64,
    frames_per_inference: u64,
) -> Result<InferenceEnergy<F>, PowerError> {
    let frames = duration.ticks() / frame_ticks;
    if frames == 0 {
        return Err(PowerError::NoFullFrame);
    }
    let power = run_power(totals, params, duration)?;
    let window_s =
        F::from_u64_exactish(frame_ticks * frames_per_inference) / F::from_f64_lossy(1e6);
    // nW * s = nJ
    let from_power_nj = power.total_nw() * window_s;
    let inferences = F::from_u64_exactish(frames) / F::from_u64_exactish(frames_per_inference);
    let sop_only_nj =
        params.e_sop_pj * F::from_u64_exactish(totals.sops) / inferences / F::from_f64_lossy(1e3);
    Ok(InferenceEnergy {
        from_power_nj,
        sop_only_nj,
        frames_per_inference,
    })
}

/// nW average at a given throughput, expressed as energy per inference (nJ).
/// Kept as a free function because reports quote it for reference points.
pub fn energy_from_power_and_throughput<F: Real>(power_nw: F, inferences_per_s: F) -> F {
    power_nw / inferences_per_s
}
