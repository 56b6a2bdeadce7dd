//! Closed-form request/service analysis for the fixed-priority arbiter,
//! with an event-simulation cross-check.
//!
//! A layer generates `spikes_per_neuron * neuron_count / threshold` fire
//! requests per frame; its arbiter can serve
//! `clock_hz * frame_seconds / cycles_per_service` of them. A point is
//! feasible when the service capacity covers the worst layer's demand, and
//! infeasible points starve the lowest-priority (highest-index) requesters.
//! Raising thresholds or the arbiter clock restores feasibility, at the cost
//! of spike resolution or synapse-block power respectively, so the sweep
//! reports the cheapest feasible corners.

use thiserror::Error;

use crate::kernel;
use crate::ledger::SimResult;
use crate::model::{validate_config, NetworkConfig, Polarity, SpikeEvent, WeightMatrix};
use crate::scalar::Real;
use crate::time::{self, SimTime, TICKS_PER_SECOND};

/// Per-layer load for the closed forms.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LayerLoad<F> {
    /// Incoming spikes per frame per neuron.
    pub spikes_per_neuron: F,
    pub neuron_count: u32,
    pub threshold: u32,
}

/// Fire requests one layer raises per frame (real-valued; used for
/// comparisons, not counting).
pub fn requests_per_frame<F: Real>(load: &LayerLoad<F>) -> F {
    assert!(load.threshold >= 1);
    load.spikes_per_neuron * F::from_u64_exactish(u64::from(load.neuron_count))
        / F::from_u64_exactish(u64::from(load.threshold))
}

/// Requests an arbiter can serve per frame. Computed from the frame length
/// in ticks so the reference point (17 kHz, 80 ms, 4 cycles) is exactly 340.
pub fn services_per_frame<F: Real>(clock_hz: u64, frame_ticks: u64, cycles_per_service: u32) -> F {
    assert!(cycles_per_service >= 1);
    F::from_u64_exactish(clock_hz) * F::from_u64_exactish(frame_ticks)
        / (F::from_u64_exactish(TICKS_PER_SECOND)
            * F::from_u64_exactish(u64::from(cycles_per_service)))
}

/// One evaluated (threshold vector, arbiter clock) combination.
#[derive(Clone, Debug, PartialEq)]
pub struct SweepPoint<F> {
    pub thresholds: Vec<u32>,
    pub clock_hz: u64,
    pub cycles_per_service: u32,
    pub services: F,
    pub max_requests: F,
    /// Which layer carries the worst demand.
    pub binding_layer: usize,
    /// services - max_requests; feasible iff >= 0.
    pub margin: F,
    pub feasible: bool,
}

/// Evaluate one point: loads carry the traffic, `thresholds` overrides the
/// per-layer thresholds.
pub fn evaluate_point<F: Real>(
    loads: &[LayerLoad<F>],
    thresholds: &[u32],
    clock_hz: u64,
    frame_ticks: u64,
    cycles_per_service: u32,
) -> SweepPoint<F> {
    assert_eq!(loads.len(), thresholds.len());
    let services = services_per_frame(clock_hz, frame_ticks, cycles_per_service);
    let mut max_requests = F::zero();
    let mut binding_layer = 0;
    for (i, (load, th)) in loads.iter().zip(thresholds).enumerate() {
        let load = LayerLoad {
            threshold: *th,
            ..*load
        };
        let r = requests_per_frame(&load);
        if r > max_requests {
            max_requests = r;
            binding_layer = i;
        }
    }
    let margin = services - max_requests;
    SweepPoint {
        thresholds: thresholds.to_vec(),
        clock_hz,
        cycles_per_service,
        services,
        max_requests,
        binding_layer,
        margin,
        feasible: margin >= F::zero(),
    }
}

/// Full design-space sweep output.
#[derive(Clone, Debug, PartialEq)]
pub struct SweepResult<F> {
    /// Clock-major, then threshold vectors in lexicographic candidate order.
    pub points: Vec<SweepPoint<F>>,
    /// Indices of the recommended points: feasible, minimal clock, then
    /// smallest worst-layer threshold (a proxy for spike resolution).
    pub recommended: Vec<usize>,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum SweepError {
    #[error("sweep needs at least one clock and one threshold candidate per layer")]
    EmptyRange,
    #[error("threshold candidate lists: expected {expected} (one per layer), found {found}")]
    CandidateCount { expected: usize, found: usize },
}

/// Classify explicit (threshold vector, clock) combinations, clock-major in
/// the order given. Recommended points are the feasible ones with the lowest
/// clock, tie-broken by the smallest worst-layer threshold.
pub fn sweep_vectors<F: Real>(
    loads: &[LayerLoad<F>],
    threshold_vectors: &[Vec<u32>],
    clock_candidates: &[u64],
    frame_ticks: u64,
    cycles_per_service: u32,
) -> Result<SweepResult<F>, SweepError> {
    if loads.is_empty() || clock_candidates.is_empty() || threshold_vectors.is_empty() {
        return Err(SweepError::EmptyRange);
    }
    if let Some(bad) = threshold_vectors.iter().find(|v| v.len() != loads.len()) {
        return Err(SweepError::CandidateCount {
            expected: loads.len(),
            found: bad.len(),
        });
    }

    let mut points = Vec::new();
    for &clock in clock_candidates {
        for thresholds in threshold_vectors {
            points.push(evaluate_point(
                loads,
                thresholds,
                clock,
                frame_ticks,
                cycles_per_service,
            ));
        }
    }

    let mut recommended: Vec<usize> = Vec::new();
    let mut best: Option<(u64, u32)> = None;
    for (i, p) in points.iter().enumerate() {
        if !p.feasible {
            continue;
        }
        let key = (p.clock_hz, p.thresholds.iter().copied().max().unwrap_or(1));
        match best {
            None => {
                best = Some(key);
                recommended.push(i);
            }
            Some(b) if key < b => {
                best = Some(key);
                recommended.clear();
                recommended.push(i);
            }
            Some(b) if key == b => recommended.push(i),
            Some(_) => {}
        }
    }
    Ok(SweepResult {
        points,
        recommended,
    })
}

/// Classify every combination of per-layer threshold candidates (full cross
/// product) and clock candidates.
pub fn sweep<F: Real>(
    loads: &[LayerLoad<F>],
    threshold_candidates: &[Vec<u32>],
    clock_candidates: &[u64],
    frame_ticks: u64,
    cycles_per_service: u32,
) -> Result<SweepResult<F>, SweepError> {
    if threshold_candidates.len() != loads.len() {
        return Err(SweepError::CandidateCount {
            expected: loads.len(),
            found: threshold_candidates.len(),
        });
    }
    if threshold_candidates.iter().any(Vec::is_empty) {
        return Err(SweepError::EmptyRange);
    }
    let mut vectors = Vec::new();
    let mut indices = vec![0usize; threshold_candidates.len()];
    loop {
        vectors.push(
            indices
                .iter()
                .zip(threshold_candidates)
                .map(|(i, c)| c[*i])
                .collect::<Vec<u32>>(),
        );
        // odometer increment over the candidate lists
        let mut pos = indices.len();
        loop {
            if pos == 0 {
                break;
            }
            pos -= 1;
            indices[pos] += 1;
            if indices[pos] < threshold_candidates[pos].len() {
                break;
            }
            indices[pos] = 0;
        }
        if indices.iter().all(|i| *i == 0) {
            break;
        }
    }
    sweep_vectors(
        loads,
        &vectors,
        clock_candidates,
        frame_ticks,
        cycles_per_service,
    )
}

/// Outcome of checking one analyzed point against the event simulator.
#[derive(Clone, Debug)]
pub struct VerifyReport {
    pub predicted_starved: bool,
    pub observed_starved: bool,
    pub agrees: bool,
    /// Margin relative to capacity, recomputed with the clock frequency the
    /// rounded period actually realizes.
    pub margin_fraction_effective: f64,
    /// Within +-5% of the feasibility boundary; excluded from agreement
    /// statistics.
    pub in_boundary_band: bool,
    pub worst_latency_ticks: u64,
    pub result: SimResult,
}

/// Starvation criterion on a finished run, judged on the lowest-priority
/// (highest-index) layer-0 neuron that raised requests: starved when its
/// request-to-acknowledge latency ever exceeded one frame or a request was
/// still pending at the end.
pub fn observed_starvation(result: &SimResult, frame_ticks: u64) -> (bool, u64) {
    let stats = &result.request_stats[0];
    let Some(neuron) = (0..stats.len()).rev().find(|i| stats[*i].raised > 0) else {
        return (false, 0);
    };
    let s = &stats[neuron];
    let mut worst = s.max_latency_ticks;
    if let Some(open) = s.open_since {
        worst = worst.max(result.duration - open);
    }
    let starved = s.open_since.is_some() || s.max_latency_ticks > frame_ticks;
    (starved, worst)
}

/// Cross-check one single-layer load against the simulator.
///
/// The load is realized directly: a two-layer network whose input layer has
/// `neuron_count` neurons at the given threshold, each driven with
/// `spikes_per_neuron` +1 spikes per frame (uniformly spaced, staggered one
/// tick per channel), feeding a small terminal layer. The drive lasts
/// `frames` frames and the run continues for one silent tail frame, so a
/// request still pending at the end really did wait longer than a frame.
#[allow(clippy::too_many_arguments)]
pub fn verify_against_sim(
    spikes_per_neuron: u32,
    neuron_count: u32,
    threshold: u32,
    clock_hz: u64,
    cycles_per_service: u32,
    frame_ticks: u64,
    neuron_clock_hz: u64,
    frames: u32,
) -> Result<VerifyReport, crate::model::ModelErrors> {
    let config = NetworkConfig::from_widths(
        &[neuron_count, 8],
        &[threshold, 1],
        neuron_clock_hz,
        clock_hz,
        cycles_per_service,
        frame_ticks,
        6,
    );
    let model = validate_config(config, vec![WeightMatrix::checkerboard(neuron_count, 8)])?;

    let mut trace = Vec::new();
    for frame in 0..u64::from(frames) {
        let base = frame * frame_ticks;
        for j in 0..u64::from(spikes_per_neuron) {
            let slot = (j + 1) * frame_ticks / (u64::from(spikes_per_neuron) + 1);
            for ch in 0..neuron_count {
                trace.push(SpikeEvent {
                    time: SimTime(base + slot + u64::from(ch)),
                    target_core: 0,
                    target_neuron: ch as u16,
                    polarity: Polarity::Plus,
                });
            }
        }
    }
    trace.sort_by(kernel::spike_tie_order);
    let duration = SimTime(frame_ticks * (u64::from(frames) + 1));
    let result = kernel::run(&model, &trace, duration).expect("constructed trace is valid");

    let load = LayerLoad {
        spikes_per_neuron: f64::from(spikes_per_neuron),
        neuron_count,
        threshold,
    };
    let requests = requests_per_frame(&load);
    let services: f64 = services_per_frame(clock_hz, frame_ticks, cycles_per_service);
    let predicted_starved = requests > services;

    let effective_hz = time::effective_hz(time::period_ticks(clock_hz));
    let effective_services = effective_hz * frame_ticks as f64
        / (TICKS_PER_SECOND as f64 * f64::from(cycles_per_service));
    let margin_fraction_effective = (effective_services - requests) / effective_services;
    let in_boundary_band = margin_fraction_effective.abs() <= 0.05;

    let (observed_starved, worst_latency_ticks) = observed_starvation(&result, frame_ticks);
    Ok(VerifyReport {
        predicted_starved,
        observed_starved,
        agrees: predicted_starved == observed_starved,
        margin_fraction_effective,
        in_boundary_band,
        worst_latency_ticks,
        result,
    })
}
