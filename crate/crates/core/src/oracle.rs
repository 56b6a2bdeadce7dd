//! Rate coding and the binary-weight reference network.
//!
//! A k-bit feature value becomes that many +1 spikes inside one frame,
//! uniformly spaced. Passing through a layer of threshold `TH` divides the
//! count by `TH` (floor, with the remainder carried in the neuron
//! potential), which is exactly what an integer reference network computes
//! with a floor-scaled clamped ReLU. That reference network is the
//! functional oracle: steady-state per-frame spike counts of the simulated
//! fabric must match its activations to within the residue each layer can
//! carry.

use thiserror::Error;

use crate::ledger::SimResult;
use crate::model::{ModelErrors, Polarity, SpikeEvent, ValidatedModel, WeightMatrix};
use crate::time::SimTime;

/// One frame of front-end feature values, one entry per input channel.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FeatureFrame {
    pub values: Vec<u32>,
}

/// Flattened network input: the current frame joined with enough history to
/// fill the input layer (oldest slot first).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct InputWindow {
    pub values: Vec<u32>,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum OracleError {
    #[error("feature frame {frame} has {found} channels, expected {expected}")]
    ChannelCount {
        frame: usize,
        expected: usize,
        found: usize,
    },
    #[error("feature value {value} exceeds the {bits}-bit activation range")]
    FeatureRange { value: u32, bits: u32 },
    #[error("input layer width {width} is not a multiple of the {channels}-channel feature size")]
    WindowShape { width: usize, channels: usize },
    #[error("window has {found} values, the input layer {expected}")]
    WindowWidth { expected: usize, found: usize },
    #[error("network model is structurally invalid: {0}")]
    BadModel(ModelErrors),
    #[error("result and model disagree on layer shapes")]
    ResultShape,
}

/// Slide feature frames into input windows of `depth` frames (zero-padded
/// history at the start), flattened oldest-first.
pub fn build_windows(
    frames: &[FeatureFrame],
    depth: usize,
    bits: u32,
) -> Result<Vec<InputWindow>, OracleError> {
    let channels = frames.first().map(|f| f.values.len()).unwrap_or(0);
    let cap = (1u32 << bits) - 1;
    for (i, f) in frames.iter().enumerate() {
        if f.values.len() != channels {
            return Err(OracleError::ChannelCount {
                frame: i,
                expected: channels,
                found: f.values.len(),
            });
        }
        if let Some(v) = f.values.iter().find(|v| **v > cap) {
            return Err(OracleError::FeatureRange { value: *v, bits });
        }
    }
    Ok((0..frames.len())
        .map(|t| {
            let mut values = Vec::with_capacity(depth * channels);
            for d in 0..depth {
                let slot = t as i64 - (depth as i64 - 1) + d as i64;
                if slot < 0 {
                    values.extend(std::iter::repeat_n(0, channels));
                } else {
                    values.extend_from_slice(&frames[slot as usize].values);
                }
            }
            InputWindow { values }
        })
        .collect())
}

/// Spike placement within a frame.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum EncodeMode {
    /// Value v becomes v spikes at multiples of frame/(v+1), the first one
    /// spacing in. Minimizes arbiter burstiness and is deterministic.
    #[default]
    Uniform,
    /// All spikes packed at the start of the frame, one per tick; a stress
    /// mode for starvation experiments.
    Burst,
}

/// Encode one window as the spike trace of a single frame starting at
/// `frame_start`. Input neuron j receives exactly `window[j]` +1 spikes.
pub fn encode(
    window: &InputWindow,
    frame_ticks: u64,
    frame_start: SimTime,
    mode: EncodeMode,
) -> Vec<SpikeEvent> {
    let mut spikes = Vec::new();
    for (channel, &value) in window.values.iter().enumerate() {
        for j in 0..u64::from(value) {
            let offset = match mode {
                EncodeMode::Uniform => (j + 1) * frame_ticks / (u64::from(value) + 1),
                EncodeMode::Burst => j,
            };
            spikes.push(SpikeEvent {
                time: frame_start + offset,
                target_core: 0,
                target_neuron: channel as u16,
                polarity: Polarity::Plus,
            });
        }
    }
    spikes.sort_by(crate::kernel::spike_tie_order);
    spikes
}

/// Encode a sequence of windows, one frame each, into a single sorted trace.
pub fn encode_frames(
    windows: &[InputWindow],
    frame_ticks: u64,
    mode: EncodeMode,
) -> Vec<SpikeEvent> {
    let mut trace = Vec::new();
    for (f, w) in windows.iter().enumerate() {
        trace.extend(encode(
            w,
            frame_ticks,
            SimTime(f as u64 * frame_ticks),
            mode,
        ));
    }
    trace
}

/// Binary-weight reference network with k-bit floor-scaled ReLU activations.
#[derive(Clone, Debug, PartialEq)]
pub struct BnnModel {
    pub weights: Vec<WeightMatrix>,
    /// One threshold per layer; index 0 (the input relay) is unused by the
    /// forward pass.
    pub thresholds: Vec<u32>,
    pub activation_bits: u32,
}

/// Per-layer integer activations of one forward pass. `layers[0]` is the
/// input window; the last entry holds raw output scores (no ReLU, no clamp).
#[derive(Clone, Debug, PartialEq)]
pub struct BnnActivations {
    pub layers: Vec<Vec<i64>>,
    pub argmax: usize,
}

impl BnnModel {
    pub fn new(weights: Vec<WeightMatrix>, thresholds: Vec<u32>, activation_bits: u32) -> Self {
        assert_eq!(weights.len() + 1, thresholds.len());
        BnnModel {
            weights,
            thresholds,
            activation_bits,
        }
    }

    pub fn from_model(model: &ValidatedModel) -> Self {
        BnnModel {
            weights: model.weights().to_vec(),
            thresholds: model.config().layers.iter().map(|l| l.threshold).collect(),
            activation_bits: model.config().activation_bits,
        }
    }

    pub fn cap(&self) -> i64 {
        (1i64 << self.activation_bits) - 1
    }

    pub fn layer_count(&self) -> usize {
        self.weights.len() + 1
    }

    /// Expected steady-state spike count for an output-layer score.
    pub fn output_rate(&self, score: i64) -> i64 {
        score.max(0) / i64::from(*self.thresholds.last().unwrap())
    }
}

/// Forward pass: each layer sums +-1 weighted inputs; hidden layers apply
/// ReLU, divide by their threshold (floor) and clamp to the k-bit cap; the
/// output layer returns raw scores. Ties in the argmax resolve to the lowest
/// class index.
pub fn bnn_forward(model: &BnnModel, window: &InputWindow) -> Result<BnnActivations, OracleError> {
    let Some(first) = model.weights.first() else {
        // degenerate passthrough network
        let scores: Vec<i64> = window.values.iter().map(|v| i64::from(*v)).collect();
        let argmax = argmax_lowest(&scores);
        return Ok(BnnActivations {
            layers: vec![scores],
            argmax,
        });
    };
    if window.values.len() != first.rows() as usize {
        return Err(OracleError::WindowWidth {
            expected: first.rows() as usize,
            found: window.values.len(),
        });
    }

    let mut layers: Vec<Vec<i64>> = Vec::with_capacity(model.layer_count());
    layers.push(window.values.iter().map(|v| i64::from(*v)).collect());
    for (l, w) in model.weights.iter().enumerate() {
        let prev = &layers[l];
        if prev.len() != w.rows() as usize {
            return Err(OracleError::ResultShape);
        }
        let is_output = l == model.weights.len() - 1;
        let mut next = Vec::with_capacity(w.cols() as usize);
        for c in 0..w.cols() {
            let mut pre = 0i64;
            for (r, a) in prev.iter().enumerate() {
                pre += w.weight(r as u32, c) * a;
            }
            if is_output {
                next.push(pre);
            } else {
                let th = i64::from(model.thresholds[l + 1]);
                next.push((pre.max(0) / th).min(model.cap()));
            }
        }
        layers.push(next);
    }
    let argmax = argmax_lowest(layers.last().unwrap());
    Ok(BnnActivations { layers, argmax })
}

fn argmax_lowest(scores: &[i64]) -> usize {
    let mut best = 0;
    for (i, s) in scores.iter().enumerate() {
        if *s > scores[best] {
            best = i;
        }
    }
    best
}

/// Smallest per-layer thresholds keeping every per-frame spike count within
/// the k-bit cap, estimated from reference-network activations over a
/// calibration window set. The input layer keeps threshold 1 (a pure relay
/// for non-negative inputs).
pub fn threshold_map(
    weights: &[WeightMatrix],
    windows: &[InputWindow],
    activation_bits: u32,
) -> Result<Vec<u32>, OracleError> {
    let cap = (1i64 << activation_bits) - 1;
    let mut thresholds = vec![1u32; weights.len() + 1];
    for l in 0..weights.len() {
        // max pre-activation at layer l+1 given the thresholds fixed so far;
        // the probe's last layer carries raw scores
        let probe = BnnModel::new(
            weights[..=l].to_vec(),
            thresholds[..=l + 1].to_vec(),
            activation_bits,
        );
        let mut max_pre = 0i64;
        for w in windows {
            let acts = bnn_forward(&probe, w)?;
            for s in acts.layers.last().unwrap() {
                max_pre = max_pre.max(*s);
            }
        }
        thresholds[l + 1] = u32::try_from(max_pre / (cap + 1) + 1).unwrap();
    }
    Ok(thresholds)
}

/// Tolerance for the count/activation comparison.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ToleranceRule {
    /// Allow a deviation equal to the layer depth (1 at the first hidden
    /// layer): each layer can carry one count of residue.
    DepthScaled,
    Fixed(u32),
}

impl ToleranceRule {
    pub fn at_depth(&self, depth: usize) -> u32 {
        match self {
            ToleranceRule::DepthScaled => depth as u32,
            ToleranceRule::Fixed(t) => *t,
        }
    }
}

/// One neuron's comparison row.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ComparisonRow {
    pub layer: usize,
    pub neuron: usize,
    pub snn_count: u64,
    pub expected: i64,
    pub deviation: i64,
    pub tolerance: u32,
    pub pass: bool,
}

/// Comparison of one simulated frame against the reference activations.
#[derive(Clone, Debug, PartialEq)]
pub struct ComparisonReport {
    pub rows: Vec<ComparisonRow>,
    pub frame: usize,
    pub total: usize,
    pub passed: usize,
    pub max_abs_deviation: u64,
    pub pass: bool,
}

/// Compare per-frame spike counts of hidden and output neurons against the
/// reference activations (output scores pass through the rate transform).
pub fn compare_snn_to_oracle(
    result: &SimResult,
    activations: &BnnActivations,
    model: &BnnModel,
    frame: usize,
    tolerance: ToleranceRule,
) -> Result<ComparisonReport, OracleError> {
    if activations.layers.len() != result.fire_counts.len() {
        return Err(OracleError::ResultShape);
    }
    let mut rows = Vec::new();
    for layer in 1..activations.layers.len() {
        let acts = &activations.layers[layer];
        let counts = result
            .fire_counts
            .get(layer)
            .and_then(|frames| frames.get(frame))
            .ok_or(OracleError::ResultShape)?;
        if counts.len() != acts.len() {
            return Err(OracleError::ResultShape);
        }
        let is_output = layer == activations.layers.len() - 1;
        let tol = tolerance.at_depth(layer);
        for (neuron, (count, act)) in counts.iter().zip(acts).enumerate() {
            let expected = if is_output {
                model.output_rate(*act)
            } else {
                *act
            };
            let deviation = *count as i64 - expected;
            rows.push(ComparisonRow {
                layer,
                neuron,
                snn_count: *count,
                expected,
                deviation,
                tolerance: tol,
                pass: deviation.unsigned_abs() <= u64::from(tol),
            });
        }
    }
    let total = rows.len();
    let passed = rows.iter().filter(|r| r.pass).count();
    let max_abs_deviation = rows
        .iter()
        .map(|r| r.deviation.unsigned_abs())
        .max()
        .unwrap_or(0);
    Ok(ComparisonReport {
        rows,
        frame,
        total,
        passed,
        max_abs_deviation,
        pass: passed == total,
    })
}

/// Class decision from summed output counts over a decision window.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Decision {
    pub class: usize,
    pub totals: Vec<u64>,
    /// No output neuron spiked; the class fell to the tie-break.
    pub no_spike_decision: bool,
}

/// Argmax of summed per-frame output counts; ties resolve to the lowest
/// class index.
pub fn decode(output_counts_per_frame: &[Vec<u64>]) -> Decision {
    let width = output_counts_per_frame.first().map(Vec::len).unwrap_or(0);
    let mut totals = vec![0u64; width];
    for frame in output_counts_per_frame {
        for (t, c) in totals.iter_mut().zip(frame) {
            *t += c;
        }
    }
    let mut class = 0;
    for (i, t) in totals.iter().enumerate() {
        if *t > totals[class] {
            class = i;
        }
    }
    let no_spike_decision = totals.iter().all(|t| *t == 0);
    Decision {
        class,
        totals,
        no_spike_decision,
    }
}

/// Mean incoming spikes per frame per neuron, per layer, estimated from
/// reference activations over a window set: layer 0 sees the mean feature
/// value (its neurons relay at threshold 1), and every neuron of a deeper
/// layer sees one spike per upstream fire.
pub fn estimate_layer_loads(
    model: &BnnModel,
    windows: &[InputWindow],
) -> Result<Vec<f64>, OracleError> {
    let layer_count = model.layer_count();
    let mut sums = vec![0.0f64; layer_count];
    for w in windows {
        let acts = bnn_forward(model, w)?;
        let inputs = &acts.layers[0];
        sums[0] += inputs.iter().sum::<i64>() as f64 / inputs.len().max(1) as f64;
        for (s, upstream) in sums.iter_mut().skip(1).zip(&acts.layers) {
            // every fire upstream (feature counts relayed at the input,
            // clamped activations above) lands on each downstream neuron
            let fires: i64 = upstream.iter().map(|a| a.max(&0)).sum();
            *s += fires as f64;
        }
    }
    let n = windows.len().max(1) as f64;
    Ok(sums.into_iter().map(|s| s / n).collect())
}
