//! Network configuration file: versioned TOML with explicit keys.
//!
//! ```toml
//! version = 1
//! layers = [256, 128, 128, 128, 5]
//! thresholds = [1, 28, 18, 10, 1]   # may omit the last layer (defaults to 1)
//! neuron_clock_hz = 70000
//! arbiter_clock_hz = 17000
//! arbiter_cycles_per_request = 4
//! frame_ticks = 80000
//! activation_bits = 6
//!
//! [power]
//! p_baseline_nw = 750.0
//! ...
//! ```

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::model::{LayerConfig, ModelError, NetworkConfig};
use crate::power::PowerParams;

use super::FormatError;

pub const CONFIG_VERSION: u32 = 1;

#[derive(Debug, Serialize, Deserialize)]
struct ConfigFile {
    version: u32,
    layers: Vec<u32>,
    thresholds: Vec<u32>,
    neuron_clock_hz: u64,
    arbiter_clock_hz: u64,
    arbiter_cycles_per_request: u32,
    frame_ticks: u64,
    activation_bits: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    cluster_size: Option<u32>,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    allow_extended_depth: bool,
    power: PowerParams<f64>,
}

/// Parse a configuration from TOML text.
pub fn parse_config(text: &str, path: &str) -> Result<NetworkConfig, FormatError> {
    let file: ConfigFile =
        toml::from_str(text).map_err(|e| FormatError::malformed(path, e.to_string()))?;
    if file.version != CONFIG_VERSION {
        return Err(FormatError::malformed(
            path,
            format!(
                "config version {} not supported (expected {CONFIG_VERSION})",
                file.version
            ),
        ));
    }
    let n = file.layers.len();
    if file.thresholds.len() != n && file.thresholds.len() + 1 != n {
        return Err(FormatError::malformed(
            path,
            ModelError::ThresholdCount {
                layers: n,
                found: file.thresholds.len(),
            }
            .to_string(),
        ));
    }
    let layers = file
        .layers
        .iter()
        .enumerate()
        .map(|(i, w)| LayerConfig {
            neuron_count: *w,
            threshold: file.thresholds.get(i).copied().unwrap_or(1),
            has_synapse_block: i + 1 < n,
        })
        .collect();
    Ok(NetworkConfig {
        layers,
        neuron_clock_hz: file.neuron_clock_hz,
        arbiter_clock_hz: file.arbiter_clock_hz,
        arbiter_cycles_per_request: file.arbiter_cycles_per_request,
        frame_ticks: file.frame_ticks,
        activation_bits: file.activation_bits,
        cluster_size: file.cluster_size,
        allow_extended_depth: file.allow_extended_depth,
        power: file.power,
    })
}

/// Render a configuration as TOML (resolved form: one threshold per layer).
pub fn render_config(config: &NetworkConfig) -> String {
    let file = ConfigFile {
        version: CONFIG_VERSION,
        layers: config.layers.iter().map(|l| l.neuron_count).collect(),
        thresholds: config.layers.iter().map(|l| l.threshold).collect(),
        neuron_clock_hz: config.neuron_clock_hz,
        arbiter_clock_hz: config.arbiter_clock_hz,
        arbiter_cycles_per_request: config.arbiter_cycles_per_request,
        frame_ticks: config.frame_ticks,
        activation_bits: config.activation_bits,
        cluster_size: config.cluster_size,
        allow_extended_depth: config.allow_extended_depth,
        power: config.power,
    };
    toml::to_string(&file).expect("config serializes")
}

pub fn read_config(path: &Path) -> Result<NetworkConfig, FormatError> {
    let shown = path.display().to_string();
    let text = std::fs::read_to_string(path).map_err(|e| FormatError::io(&shown, e))?;
    parse_config(&text, &shown)
}

pub fn write_config(path: &Path, config: &NetworkConfig) -> Result<(), FormatError> {
    let shown = path.display().to_string();
    std::fs::write(path, render_config(config)).map_err(|e| FormatError::io(&shown, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn reference() -> NetworkConfig {
        NetworkConfig::from_widths(
            &[256, 128, 128, 128, 5],
            &[1, 28, 18, 10, 1],
            70_000,
            17_000,
            4,
            80_000,
            6,
        )
    }

    #[test]
    fn round_trip_is_bit_exact() {
        let config = reference();
        let text = render_config(&config);
        let back = parse_config(&text, "mem").unwrap();
        assert_eq!(back, config);
        assert_eq!(render_config(&back), text);
    }

    #[test]
    fn short_threshold_list_defaults_the_terminal_layer() {
        let mut text = render_config(&reference());
        text = text.replace(
            "thresholds = [1, 28, 18, 10, 1]",
            "thresholds = [1, 28, 18, 10]",
        );
        let config = parse_config(&text, "mem").unwrap();
        assert_eq!(config.layers[4].threshold, 1);
    }

    #[test]
    fn version_and_threshold_count_are_enforced() {
        let text = render_config(&reference()).replace("version = 1", "version = 9");
        assert!(parse_config(&text, "mem").is_err());

        let text = render_config(&reference())
            .replace("thresholds = [1, 28, 18, 10, 1]", "thresholds = [1, 28]");
        let err = parse_config(&text, "mem").unwrap_err();
        assert!(err.to_string().contains("thresholds"));
    }
}
