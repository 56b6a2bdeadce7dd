//! Cross-module pipeline checks: encode -> simulate -> compare against the
//! reference network, at both activation widths, plus the constructed
//! failure case for mis-set thresholds.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use spikesim_core::kernel::run;
use spikesim_core::model::{validate_config, NetworkConfig, ValidatedModel, WeightMatrix};
use spikesim_core::oracle::{
    bnn_forward, compare_snn_to_oracle, encode_frames, threshold_map, BnnModel, EncodeMode,
    InputWindow, ToleranceRule,
};
use spikesim_core::time::SimTime;

/// Fast clocks that keep every layer's request demand far below the arbiter
/// service capacity for nets up to 32 neurons a layer.
const FAST_NEURON_HZ: u64 = 500_000;
const FAST_ARBITER_HZ: u64 = 250_000;

fn steady_state_comparison(
    widths: &[u32],
    thresholds: &[u32],
    window: &InputWindow,
    frame_ticks: u64,
    bits: u32,
    weights: Vec<WeightMatrix>,
) -> (ValidatedModel, spikesim_core::oracle::ComparisonReport) {
    let mut config = NetworkConfig::from_widths(
        widths,
        thresholds,
        FAST_NEURON_HZ,
        FAST_ARBITER_HZ,
        4,
        frame_ticks,
        bits,
    );
    config.activation_bits = bits;
    let model = validate_config(config, weights.clone()).unwrap();
    let bnn = BnnModel::new(weights, thresholds.to_vec(), bits);
    let activations = bnn_forward(&bnn, window).unwrap();

    let frames = 5usize;
    let steady: Vec<InputWindow> = (0..frames).map(|_| window.clone()).collect();
    let trace = encode_frames(&steady, frame_ticks, EncodeMode::Uniform);
    let result = run(&model, &trace, SimTime(frame_ticks * frames as u64)).unwrap();
    assert_eq!(result.ledger.totals().collisions, 0);
    let report = compare_snn_to_oracle(
        &result,
        &activations,
        &bnn,
        frames - 1,
        ToleranceRule::DepthScaled,
    )
    .unwrap();
    (model, report)
}

#[test]
fn zero_input_compares_clean() {
    let weights = vec![WeightMatrix::checkerboard(8, 8)];
    let window = InputWindow { values: vec![0; 8] };
    let (_, report) = steady_state_comparison(&[8, 8], &[1, 1], &window, 80_000, 6, weights);
    assert!(report.pass);
    assert_eq!(report.max_abs_deviation, 0);
    assert!(report
        .rows
        .iter()
        .all(|r| r.snn_count == 0 && r.expected == 0));
}

#[test]
fn small_deep_network_stays_within_one_count() {
    // 16-8-8-4 with mapped thresholds: residue keeps counts within one of
    // the reference activations in steady state
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let widths = [16u32, 8, 8, 4];
    let weights: Vec<WeightMatrix> = (0..3)
        .map(|i| WeightMatrix::from_fn(widths[i], widths[i + 1], |_, _| rng.gen_bool(0.5)))
        .collect();
    let window = InputWindow {
        values: (0..16).map(|_| rng.gen_range(0..=63)).collect(),
    };
    let thresholds = threshold_map(&weights, std::slice::from_ref(&window), 6).unwrap();
    let (_, report) = steady_state_comparison(&widths, &thresholds, &window, 80_000, 6, weights);
    assert!(report.pass, "max deviation {}", report.max_abs_deviation);
    assert!(report.max_abs_deviation <= 1);
}

#[test]
fn unit_thresholds_under_dense_input_fail_the_comparison() {
    // thresholds forced to 1 everywhere with dense input: hidden counts blow
    // far past the reference activations (which clamp at the k-bit cap)
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let widths = [16u32, 8, 4];
    let weights: Vec<WeightMatrix> = (0..2)
        .map(|i| WeightMatrix::from_fn(widths[i], widths[i + 1], |_, _| rng.gen_bool(0.7)))
        .collect();
    let window = InputWindow {
        values: vec![60; 16],
    };
    let (_, report) = steady_state_comparison(&widths, &[1, 1, 1], &window, 80_000, 6, weights);
    assert!(!report.pass, "mis-set thresholds must be flagged");
    // the failure is on the high side: counts beyond the clamped reference
    assert!(report
        .rows
        .iter()
        .any(|r| !r.pass && r.snn_count as i64 > r.expected));
}

#[test]
fn all_plus_weights_with_uniform_input_match_hand_arithmetic() {
    // 4 channels of value 8 through all-plus 4x2 weights at threshold 4:
    // each downstream neuron integrates 32 spikes and fires 32/4 = 8 times
    let weights = vec![WeightMatrix::all_plus(4, 2)];
    let window = InputWindow { values: vec![8; 4] };
    let (_, report) = steady_state_comparison(&[4, 2], &[1, 4], &window, 80_000, 6, weights);
    assert!(report.pass);
    for row in &report.rows {
        assert_eq!(row.expected, 8);
        assert_eq!(row.deviation, 0, "row {row:?}");
    }
}

#[test]
fn eight_bit_activations_at_half_second_frames_reproduce_the_invariants() {
    // reconfigured coding: k = 8 (counts up to 255) at a 500 ms frame
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let widths = [12u32, 8, 4];
    let weights: Vec<WeightMatrix> = (0..2)
        .map(|i| WeightMatrix::from_fn(widths[i], widths[i + 1], |_, _| rng.gen_bool(0.5)))
        .collect();
    let window = InputWindow {
        values: (0..12).map(|_| rng.gen_range(0..=255)).collect(),
    };
    let thresholds = threshold_map(&weights, std::slice::from_ref(&window), 8).unwrap();

    // encoding exactness at the wider range
    let spikes = spikesim_core::oracle::encode(&window, 500_000, SimTime(0), EncodeMode::Uniform);
    let expected: u32 = window.values.iter().sum();
    assert_eq!(spikes.len() as u32, expected);

    let (model, report) =
        steady_state_comparison(&widths, &thresholds, &window, 500_000, 8, weights);
    assert_eq!(model.config().max_activation(), 255);
    assert!(report.pass, "max deviation {}", report.max_abs_deviation);
    // mapped thresholds keep the reference activations within the cap
    assert!(report.rows.iter().all(|r| r.expected <= 255));
}
