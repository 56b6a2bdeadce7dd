//! Activity accounting and run results.
//!
//! Every counter the power model consumes is accumulated here, broken down
//! per layer (core). One SOP is one synaptic weight applied to one
//! post-synaptic neuron, i.e. one spike delivered from a synapse block.

use serde::{Deserialize, Serialize};

use crate::time::SimTime;

/// Counters for one layer (one neurosynaptic core).
///
/// Synapse-side counters (`sops`, `sram_reads`, `arbiter_cycles_running`,
/// `acks_issued`) are attributed to the core whose synapse block did the
/// work; spike deliveries and neuron-side counters to the core receiving or
/// running them.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct LayerActivity {
    /// Spike events presented to wake-up circuits (external and synaptic,
    /// including spikes that found their edge flop still busy).
    pub spikes_delivered: u64,
    /// Synaptic operations: spikes emitted by a synapse block.
    pub sops: u64,
    /// Rising edges delivered to un-gated neuron FSMs.
    pub neuron_cycles_ungated: u64,
    /// Rising edges processed by a running arbiter clock.
    pub arbiter_cycles_running: u64,
    /// Weight SRAM row reads.
    pub sram_reads: u64,
    /// Neuron transitions out of the power-gated state.
    pub wakeups: u64,
    /// Spikes whose edge flop was still set and could not latch.
    pub lost_spikes: u64,
    /// Fire requests asserted by neurons.
    pub requests_raised: u64,
    /// Acknowledgements issued (arbiter or output counter).
    pub acks_issued: u64,
    /// Same-timestamp same-target deliveries from one synapse block.
    pub collisions: u64,
    /// Requests re-raised while still pending (protocol violation guard).
    pub duplicate_requests: u64,
}

impl LayerActivity {
    pub fn add_assign(&mut self, other: &LayerActivity) {
        self.spikes_delivered += other.spikes_delivered;
        self.sops += other.sops;
        self.neuron_cycles_ungated += other.neuron_cycles_ungated;
        self.arbiter_cycles_running += other.arbiter_cycles_running;
        self.sram_reads += other.sram_reads;
        self.wakeups += other.wakeups;
        self.lost_spikes += other.lost_spikes;
        self.requests_raised += other.requests_raised;
        self.acks_issued += other.acks_issued;
        self.collisions += other.collisions;
        self.duplicate_requests += other.duplicate_requests;
    }

    pub fn is_zero(&self) -> bool {
        *self == LayerActivity::default()
    }
}

/// Per-run activity, one entry per layer.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ActivityLedger {
    pub per_layer: Vec<LayerActivity>,
}

impl ActivityLedger {
    pub fn new(layers: usize) -> Self {
        ActivityLedger {
            per_layer: vec![LayerActivity::default(); layers],
        }
    }

    pub fn totals(&self) -> LayerActivity {
        let mut t = LayerActivity::default();
        for l in &self.per_layer {
            t.add_assign(l);
        }
        t
    }

    pub fn is_zero(&self) -> bool {
        self.per_layer.iter().all(LayerActivity::is_zero)
    }
}

/// One arbiter service, in completion (acknowledge) order.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ServiceRecord {
    pub time: SimTime,
    pub core: u8,
    pub neuron: u16,
}

/// Request/acknowledge bookkeeping for one neuron.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RequestStats {
    pub raised: u64,
    pub acked: u64,
    pub max_latency_ticks: u64,
    /// When this neuron raised its first request.
    pub first_raised: Option<SimTime>,
    /// Raise time of the request still outstanding at end of run, if any.
    pub open_since: Option<SimTime>,
}

/// A request that waited longer than one frame for its acknowledge.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct StarvedRequest {
    pub core: u8,
    pub neuron: u16,
    /// Request-to-acknowledge latency, or age at end of run if never acked.
    pub latency_ticks: u64,
    pub acked: bool,
}

/// Starvation summary per run. A run counts as starved when any request
/// waited longer than one frame, whether it was eventually acknowledged or
/// was still pending when the run ended.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct StarvationSummary {
    pub starved: bool,
    pub worst_latency_ticks: u64,
    pub worst: Option<(u8, u16)>,
    pub offenders: Vec<StarvedRequest>,
}

/// Time a neuron spent in each gating state, in ticks.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct GatingBuckets {
    /// Supply gated, clock gated (idle).
    pub power_gated: u64,
    /// Powered after a wake-up but clock still gated.
    pub waking: u64,
    /// Clock un-gated, FSM receiving edges.
    pub clocked: u64,
}

impl GatingBuckets {
    pub fn total(&self) -> u64 {
        self.power_gated + self.waking + self.clocked
    }
}

/// Per-cluster gating report; `buckets` sums over member neurons.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClusterPowerReport {
    pub core: u8,
    pub cluster: u16,
    pub members: u32,
    pub buckets: GatingBuckets,
    /// Neuron clock period used to express buckets in cycles.
    pub period_ticks: u64,
}

impl ClusterPowerReport {
    pub fn cycles(&self, ticks: u64) -> f64 {
        ticks as f64 / self.period_ticks as f64
    }
}

/// Everything a completed run reports.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SimResult {
    pub ledger: ActivityLedger,
    /// Fire (request) counts per layer, frame and neuron.
    pub fire_counts: Vec<Vec<Vec<u64>>>,
    pub duration: SimTime,
    pub frames: u64,
    pub frame_ticks: u64,
    /// No lost spikes and no starvation.
    pub conforming: bool,
    pub starvation: StarvationSummary,
    pub service_log: Vec<ServiceRecord>,
    pub request_stats: Vec<Vec<RequestStats>>,
    pub cluster_reports: Vec<ClusterPowerReport>,
    /// Requests still awaiting an acknowledge when the run ended.
    pub open_requests_at_end: u64,
    /// Trace entries at or beyond the run length, ignored.
    pub trace_spikes_beyond_duration: u64,
}

impl SimResult {
    /// Per-frame spike counts of the output layer.
    pub fn output_spike_counts(&self) -> &[Vec<u64>] {
        self.fire_counts.last().map(Vec::as_slice).unwrap_or(&[])
    }

    /// Ordered (time, neuron) service trace for one core's arbiter.
    pub fn service_order_trace(&self, core: u8) -> Vec<(SimTime, u16)> {
        self.service_log
            .iter()
            .filter(|r| r.core == core)
            .map(|r| (r.time, r.neuron))
            .collect()
    }
}
