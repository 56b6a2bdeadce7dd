//! Discrete-event simulator for an always-on spiking neural network
//! classifier fabric built from neurosynaptic cores.
//!
//! Each core models a block of integrate-and-fire neurons with asynchronous
//! spike wake-up circuits, spike-driven clock generation, clock gating and
//! power gating, plus (for all but the last layer) a synapse block with a
//! fixed-priority arbiter, a single-port binary-weight SRAM and a spike
//! generator. The crate also provides:
//!
//! - an activity-based power model calibrated against idle/max power anchors,
//! - a closed-form request/service analyzer for arbiter starvation with an
//!   event-simulation cross-check,
//! - a rate-coding encoder and a binary-weight reference network that serves
//!   as the functional oracle for the simulated fabric,
//! - file formats (network config, packed binary weights, spike traces,
//!   feature streams) and deterministic report rendering.
//!
//! The event kernel is exact integer arithmetic end to end; all real-valued
//! analysis (power, request/service margins) is generic over [`Real`], with
//! `f64` concrete aliases exported at the crate root.

pub mod bits;
pub mod calibration;
pub mod formats;
pub mod kernel;
pub mod ledger;
pub mod model;
pub mod neuron;
pub mod oracle;
pub mod power;
pub mod report;
pub mod scalar;
pub mod starvation;
pub mod synapse;
pub mod time;

pub use kernel::{run, SimError, Simulation};
pub use ledger::{ActivityLedger, LayerActivity, SimResult};
pub use model::{
    validate_config, LayerConfig, ModelError, NetworkConfig, Polarity, SpikeEvent, ValidatedModel,
    WeightMatrix,
};
pub use scalar::Real;
pub use time::SimTime;

/// Default scalar type used by the command-line tool and shipped configs.
pub type Scalar = f64;
/// Power parameters at the default precision.
pub type PowerParams64 = power::PowerParams<f64>;
/// Power breakdown at the default precision.
pub type PowerBreakdown64 = power::PowerBreakdown<f64>;
/// Sweep point at the default precision.
pub type SweepPoint64 = starvation::SweepPoint<f64>;
/// Layer load at the default precision.
pub type LayerLoad64 = starvation::LayerLoad<f64>;
