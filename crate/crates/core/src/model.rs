//! Shared domain types: topology, spikes and validated models.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::power::PowerParams;
use crate::time::{self, SimTime};

/// Widest supported input layer (weight SRAM rows).
pub const MAX_LAYER_WIDTH: usize = 256;
/// Widest supported downstream layer (weight SRAM columns / spike generator width).
pub const MAX_FANOUT_WIDTH: usize = 128;
/// Core count of the reference architecture.
pub const MAX_REFERENCE_LAYERS: usize = 5;
/// Fastest clock expressible on the 1 µs time base (period >= 2 ticks).
pub const MAX_CLOCK_HZ: u64 = 500_000;

/// Spike polarity: increment or decrement the target potential.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Polarity {
    Plus,
    Minus,
}

impl Polarity {
    pub fn value(self) -> i64 {
        match self {
            Polarity::Plus => 1,
            Polarity::Minus => -1,
        }
    }
}

impl fmt::Display for Polarity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Polarity::Plus => "+",
            Polarity::Minus => "-",
        })
    }
}

/// A timestamped unit spike addressed to one neuron; the sole inter-core
/// message.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SpikeEvent {
    pub time: SimTime,
    pub target_core: u8,
    pub target_neuron: u16,
    pub polarity: Polarity,
}

/// One layer of the network.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LayerConfig {
    pub neuron_count: u32,
    /// Firing threshold in potential counts, >= 1.
    pub threshold: u32,
    /// False for the last layer, whose requests terminate in the output counter.
    pub has_synapse_block: bool,
}

/// Full network configuration, including clocks and power calibration.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NetworkConfig {
    pub layers: Vec<LayerConfig>,
    pub neuron_clock_hz: u64,
    pub arbiter_clock_hz: u64,
    /// Arbiter cycles consumed per service.
    pub arbiter_cycles_per_request: u32,
    pub frame_ticks: u64,
    /// Activation bit width k; per-frame spike counts top out at 2^k - 1.
    pub activation_bits: u32,
    /// Neurons per shared clock generator; None shares one per core.
    pub cluster_size: Option<u32>,
    /// Accept more layers than the reference five-core design (flagged in reports).
    pub allow_extended_depth: bool,
    pub power: PowerParams<f64>,
}

impl NetworkConfig {
    /// Convenience constructor from parallel width/threshold lists.
    pub fn from_widths(
        widths: &[u32],
        thresholds: &[u32],
        neuron_clock_hz: u64,
        arbiter_clock_hz: u64,
        arbiter_cycles_per_request: u32,
        frame_ticks: u64,
        activation_bits: u32,
    ) -> Self {
        let n = widths.len();
        let layers = widths
            .iter()
            .enumerate()
            .map(|(i, w)| LayerConfig {
                neuron_count: *w,
                // Last layer may omit its threshold; it defaults to 1.
                threshold: thresholds.get(i).copied().unwrap_or(1),
                has_synapse_block: i + 1 < n,
            })
            .collect();
        NetworkConfig {
            layers,
            neuron_clock_hz,
            arbiter_clock_hz,
            arbiter_cycles_per_request,
            frame_ticks,
            activation_bits,
            cluster_size: None,
            allow_extended_depth: false,
            power: PowerParams::default(),
        }
    }

    pub fn max_activation(&self) -> u32 {
        (1u32 << self.activation_bits) - 1
    }
}

/// Packed binary weights: bit 1 is +1, bit 0 is -1. Rows are pre-synaptic
/// neurons, columns post-synaptic; each row is packed LSB-first into
/// `ceil(cols/8)` bytes (16 bytes for a full 128-wide row).
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct WeightMatrix {
    rows: u32,
    cols: u32,
    bits: Vec<u8>,
}

impl WeightMatrix {
    pub fn row_stride_bytes(cols: u32) -> usize {
        (cols as usize).div_ceil(8)
    }

    pub fn from_fn(rows: u32, cols: u32, mut f: impl FnMut(u32, u32) -> bool) -> Self {
        let stride = Self::row_stride_bytes(cols);
        let mut bits = vec![0u8; rows as usize * stride];
        for r in 0..rows {
            for c in 0..cols {
                if f(r, c) {
                    bits[r as usize * stride + c as usize / 8] |= 1 << (c % 8);
                }
            }
        }
        WeightMatrix { rows, cols, bits }
    }

    /// Alternating +1/-1 pattern; handy for deterministic fixtures.
    pub fn checkerboard(rows: u32, cols: u32) -> Self {
        Self::from_fn(rows, cols, |r, c| (r + c) % 2 == 0)
    }

    pub fn all_plus(rows: u32, cols: u32) -> Self {
        Self::from_fn(rows, cols, |_, _| true)
    }

    pub fn from_packed(rows: u32, cols: u32, bits: Vec<u8>) -> Result<Self, ModelError> {
        let expect = rows as usize * Self::row_stride_bytes(cols);
        if bits.len() != expect {
            return Err(ModelError::PackedSize {
                expected: expect,
                found: bits.len(),
            });
        }
        Ok(WeightMatrix { rows, cols, bits })
    }

    pub fn rows(&self) -> u32 {
        self.rows
    }

    pub fn cols(&self) -> u32 {
        self.cols
    }

    pub fn packed(&self) -> &[u8] {
        &self.bits
    }

    pub fn bit(&self, row: u32, col: u32) -> bool {
        debug_assert!(row < self.rows && col < self.cols);
        let stride = Self::row_stride_bytes(self.cols);
        self.bits[row as usize * stride + col as usize / 8] & (1 << (col % 8)) != 0
    }

    /// Weight value: +1 where the bit is set, -1 where it is clear.
    pub fn weight(&self, row: u32, col: u32) -> i64 {
        if self.bit(row, col) {
            1
        } else {
            -1
        }
    }

    pub fn row(&self, row: u32) -> impl Iterator<Item = bool> + '_ {
        (0..self.cols).map(move |c| self.bit(row, c))
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ModelError {
    #[error(
        "layer {layer}: weight matrix is {rows}x{cols}, expected {expected_rows}x{expected_cols}"
    )]
    DimensionMismatch {
        layer: usize,
        expected_rows: u32,
        expected_cols: u32,
        rows: u32,
        cols: u32,
    },
    #[error("expected {expected} weight matrices for {layers} layers, found {found}")]
    WeightCount {
        layers: usize,
        expected: usize,
        found: usize,
    },
    #[error("layer {layer}: threshold must be >= 1")]
    ThresholdTooSmall { layer: usize },
    #[error("{count} layers exceeds the {max}-core reference design (set allow_extended_depth to accept)")]
    TooManyLayers { count: usize, max: usize },
    #[error("network must have at least one layer")]
    EmptyNetwork,
    #[error("layer {layer}: {count} neurons outside [1, {max}]")]
    NeuronCount { layer: usize, count: u32, max: u32 },
    #[error("layer {layer}: fan-out width {count} exceeds the {max}-wide spike generator")]
    FanOutWidth { layer: usize, count: u32, max: u32 },
    #[error("activation_bits {bits} outside [1, 8]")]
    ActivationBits { bits: u32 },
    #[error("{which} clock of {hz} Hz outside [1, {max}] (period must be >= 2 ticks)")]
    ClockRange {
        which: &'static str,
        hz: u64,
        max: u64,
    },
    #[error("frame_ticks must be positive")]
    ZeroFrame,
    #[error("arbiter_cycles_per_request must be >= 1")]
    ZeroServiceCycles,
    #[error("cluster_size must be >= 1")]
    ZeroClusterSize,
    #[error("packed weight buffer holds {found} bytes, expected {expected}")]
    PackedSize { expected: usize, found: usize },
    #[error(
        "thresholds list has {found} entries for {layers} layers (expected {layers} or one fewer)"
    )]
    ThresholdCount { layers: usize, found: usize },
}

/// Aggregate of every validation failure found in one pass.
#[derive(Debug, Error, PartialEq, Eq)]
pub struct ModelErrors(pub Vec<ModelError>);

impl fmt::Display for ModelErrors {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, e) in self.0.iter().enumerate() {
            if i > 0 {
                writeln!(f)?;
            }
            write!(f, "{e}")?;
        }
        Ok(())
    }
}

/// A configuration plus weights that passed every structural check.
/// Immutable after validation and safe to share read-only across threads.
#[derive(Clone, Debug, PartialEq)]
pub struct ValidatedModel {
    config: NetworkConfig,
    weights: Vec<WeightMatrix>,
    neuron_period_ticks: u64,
    arbiter_period_ticks: u64,
    warnings: Vec<String>,
}

impl ValidatedModel {
    pub fn config(&self) -> &NetworkConfig {
        &self.config
    }

    pub fn weights(&self) -> &[WeightMatrix] {
        &self.weights
    }

    pub fn weight_for_core(&self, core: usize) -> &WeightMatrix {
        &self.weights[core]
    }

    pub fn layer_count(&self) -> usize {
        self.config.layers.len()
    }

    pub fn neuron_period_ticks(&self) -> u64 {
        self.neuron_period_ticks
    }

    pub fn arbiter_period_ticks(&self) -> u64 {
        self.arbiter_period_ticks
    }

    /// Non-fatal findings (extended depth, power parameter lint, clock rounding).
    pub fn warnings(&self) -> &[String] {
        &self.warnings
    }

    pub fn frame_ticks(&self) -> u64 {
        self.config.frame_ticks
    }

    pub fn frame_time(&self) -> SimTime {
        SimTime(self.config.frame_ticks)
    }
}

/// Check a configuration and its weight matrices against every structural
/// invariant, collecting all failures rather than stopping at the first.
pub fn validate_config(
    config: NetworkConfig,
    weights: Vec<WeightMatrix>,
) -> Result<ValidatedModel, ModelErrors> {
    let mut errors = Vec::new();
    let mut warnings = Vec::new();
    let layers = &config.layers;

    if layers.is_empty() {
        errors.push(ModelError::EmptyNetwork);
    }
    if layers.len() > MAX_REFERENCE_LAYERS {
        if config.allow_extended_depth {
            warnings.push(format!(
                "extended topology: {} layers exceeds the {}-core reference design",
                layers.len(),
                MAX_REFERENCE_LAYERS
            ));
        } else {
            errors.push(ModelError::TooManyLayers {
                count: layers.len(),
                max: MAX_REFERENCE_LAYERS,
            });
        }
    }
    for (i, layer) in layers.iter().enumerate() {
        let max = if i == 0 {
            MAX_LAYER_WIDTH as u32
        } else {
            MAX_FANOUT_WIDTH as u32
        };
        if layer.neuron_count == 0 || layer.neuron_count > MAX_LAYER_WIDTH as u32 {
            errors.push(ModelError::NeuronCount {
                layer: i,
                count: layer.neuron_count,
                max: MAX_LAYER_WIDTH as u32,
            });
        } else if layer.neuron_count > max {
            errors.push(ModelError::FanOutWidth {
                layer: i,
                count: layer.neuron_count,
                max: MAX_FANOUT_WIDTH as u32,
            });
        }
        if layer.threshold == 0 {
            errors.push(ModelError::ThresholdTooSmall { layer: i });
        }
    }

    let expected_weights = layers.len().saturating_sub(1);
    if weights.len() != expected_weights {
        errors.push(ModelError::WeightCount {
            layers: layers.len(),
            expected: expected_weights,
            found: weights.len(),
        });
    }
    for (i, w) in weights.iter().enumerate() {
        let (Some(pre), Some(post)) = (layers.get(i), layers.get(i + 1)) else {
            continue;
        };
        if w.rows() != pre.neuron_count || w.cols() != post.neuron_count {
            errors.push(ModelError::DimensionMismatch {
                layer: i,
                expected_rows: pre.neuron_count,
                expected_cols: post.neuron_count,
                rows: w.rows(),
                cols: w.cols(),
            });
        }
    }

    if config.activation_bits == 0 || config.activation_bits > 8 {
        errors.push(ModelError::ActivationBits {
            bits: config.activation_bits,
        });
    }
    for (which, hz) in [
        ("neuron", config.neuron_clock_hz),
        ("arbiter", config.arbiter_clock_hz),
    ] {
        if hz == 0 || hz > MAX_CLOCK_HZ {
            errors.push(ModelError::ClockRange {
                which,
                hz,
                max: MAX_CLOCK_HZ,
            });
        }
    }
    if config.frame_ticks == 0 {
        errors.push(ModelError::ZeroFrame);
    }
    if config.arbiter_cycles_per_request == 0 {
        errors.push(ModelError::ZeroServiceCycles);
    }
    if config.cluster_size == Some(0) {
        errors.push(ModelError::ZeroClusterSize);
    }

    if !errors.is_empty() {
        return Err(ModelErrors(errors));
    }

    let neuron_period_ticks = time::period_ticks(config.neuron_clock_hz);
    let arbiter_period_ticks = time::period_ticks(config.arbiter_clock_hz);
    for (which, hz, period) in [
        ("neuron", config.neuron_clock_hz, neuron_period_ticks),
        ("arbiter", config.arbiter_clock_hz, arbiter_period_ticks),
    ] {
        let eff = time::effective_hz(period);
        let drift = (eff - hz as f64).abs() / hz as f64;
        if drift > 0.01 {
            warnings.push(format!(
                "{which} clock {hz} Hz rounds to a {period}-tick period ({eff:.1} Hz effective, {:.2}% off)",
                drift * 100.0
            ));
        }
    }
    warnings.extend(config.power.lint());

    Ok(ValidatedModel {
        config,
        weights,
        neuron_period_ticks,
        arbiter_period_ticks,
        warnings,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn reference_config() -> NetworkConfig {
        NetworkConfig::from_widths(
            &[256, 128, 128, 128, 5],
            &[1, 28, 18, 10],
            70_000,
            17_000,
            4,
            80_000,
            6,
        )
    }

    fn reference_weights() -> Vec<WeightMatrix> {
        vec![
            WeightMatrix::checkerboard(256, 128),
            WeightMatrix::checkerboard(128, 128),
            WeightMatrix::checkerboard(128, 128),
            WeightMatrix::checkerboard(128, 5),
        ]
    }

    #[test]
    fn reference_shape_validates() {
        let model = validate_config(reference_config(), reference_weights()).unwrap();
        assert_eq!(model.layer_count(), 5);
        // omitted terminal threshold defaults to 1
        assert_eq!(model.config().layers[4].threshold, 1);
        assert!(!model.config().layers[4].has_synapse_block);
        assert!(model.config().layers[3].has_synapse_block);
        assert_eq!(model.neuron_period_ticks(), 14);
        assert_eq!(model.arbiter_period_ticks(), 59);
    }

    #[test]
    fn single_layer_passthrough_is_valid() {
        let config = NetworkConfig::from_widths(&[16], &[], 70_000, 17_000, 4, 80_000, 6);
        let model = validate_config(config, vec![]).unwrap();
        assert_eq!(model.layer_count(), 1);
        assert!(!model.config().layers[0].has_synapse_block);
        assert_eq!(model.config().layers[0].threshold, 1);
    }

    #[test]
    fn dimension_mismatch_names_the_layer() {
        let config = NetworkConfig::from_widths(&[256, 128], &[1, 1], 70_000, 17_000, 4, 80_000, 6);
        let err = validate_config(config, vec![WeightMatrix::checkerboard(128, 128)]).unwrap_err();
        assert!(err.0.iter().any(|e| matches!(
            e,
            ModelError::DimensionMismatch {
                layer: 0,
                expected_rows: 256,
                expected_cols: 128,
                rows: 128,
                cols: 128,
            }
        )));
    }

    #[test]
    fn bad_threshold_and_depth_rejected() {
        let mut config = NetworkConfig::from_widths(
            &[8, 8, 8, 8, 8, 8],
            &[1, 0, 1, 1, 1, 1],
            70_000,
            17_000,
            4,
            80_000,
            6,
        );
        let weights = (0..5).map(|_| WeightMatrix::checkerboard(8, 8)).collect();
        let err = validate_config(config.clone(), weights).unwrap_err();
        assert!(err
            .0
            .iter()
            .any(|e| matches!(e, ModelError::ThresholdTooSmall { layer: 1 })));
        assert!(err
            .0
            .iter()
            .any(|e| matches!(e, ModelError::TooManyLayers { count: 6, max: 5 })));

        config.allow_extended_depth = true;
        config.layers[1].threshold = 1;
        let weights = (0..5).map(|_| WeightMatrix::checkerboard(8, 8)).collect();
        let model = validate_config(config, weights).unwrap();
        assert!(model.warnings().iter().any(|w| w.contains("extended")));
    }

    #[test]
    fn fan_out_width_capped_at_generator_width() {
        let config = NetworkConfig::from_widths(&[256, 256], &[1, 1], 70_000, 17_000, 4, 80_000, 6);
        let err = validate_config(config, vec![WeightMatrix::checkerboard(256, 256)]).unwrap_err();
        assert!(err.0.iter().any(|e| matches!(
            e,
            ModelError::FanOutWidth {
                layer: 1,
                count: 256,
                ..
            }
        )));
    }

    #[test]
    fn weight_decode_matches_unpacked_reference() {
        // reference decode straight from the packed bytes, kept independent
        // of WeightMatrix::bit
        let rows = 37;
        let cols = 99;
        let m = WeightMatrix::from_fn(rows, cols, |r, c| (r * 31 + c * 7) % 3 == 0);
        let stride = WeightMatrix::row_stride_bytes(cols);
        let packed = m.packed().to_vec();
        for r in 0..rows {
            for c in 0..cols {
                let byte = packed[r as usize * stride + (c / 8) as usize];
                let expected_bit = (byte >> (c % 8)) & 1 == 1;
                assert_eq!(m.bit(r, c), expected_bit);
                assert_eq!(m.weight(r, c), if expected_bit { 1 } else { -1 });
            }
        }
    }

    #[test]
    fn packed_size_enforced() {
        assert!(matches!(
            WeightMatrix::from_packed(4, 9, vec![0; 7]),
            Err(ModelError::PackedSize {
                expected: 8,
                found: 7
            })
        ));
        assert!(WeightMatrix::from_packed(4, 9, vec![0; 8]).is_ok());
    }

    #[test]
    fn clock_rounding_warning_present_for_default_clocks() {
        let model = validate_config(reference_config(), reference_weights()).unwrap();
        // 70 kHz rounds 2% off; the warning documents it
        assert!(model.warnings().iter().any(|w| w.contains("neuron clock")));
    }
}
