//! Neuron block: integrate-and-fire neurons with asynchronous wake-up
//! circuits, a shared per-cluster clock generator and spike-driven clock and
//! power gating.
//!
//! A spike edge latches into one of two polarity flops and raises the
//! clock-enable flop, which starts the cluster clock generator if it was
//! stopped and begins powering the neuron's FSM. The first falling edge of
//! the generator then un-gates the clock to the FSM so that the FSM always
//! sees a full low phase before its first rising edge. Neurons that receive
//! no spike stay clock- and power-gated.
//!
//! The FSM has three states. Start/Standby re-gates clock and power when
//! there is no pending work; a pending flop (or a potential still at or
//! above threshold, see below) moves it to Potential update. Potential
//! update consumes exactly one pending flop per pass (+1 before -1 when both
//! are set), compares against the threshold, and on a fire resets the
//! potential to zero, asserts the fire request and moves to Potential
//! update 2 where new spikes keep updating the potential while the neuron
//! waits for its acknowledge. The request line cannot encode overlapping
//! requests, so potential that crosses the threshold during the wait is
//! handled after the acknowledge: Start/Standby re-enters Potential update
//! when the potential is still at or above threshold even with no pending
//! flop.

use crate::ledger::GatingBuckets;
use crate::model::Polarity;
use crate::time::SimTime;

/// Wake-up circuit flops for one neuron.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct WakeupFlops {
    /// Pending +1 spike latched.
    pub ff_p1: bool,
    /// Pending -1 spike latched.
    pub ff_m1: bool,
    /// Clock-enable ("Active") flop.
    pub ff_clk_en: bool,
    /// Clock un-gated to the FSM.
    pub ff_clk_ug: bool,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum FsmState {
    #[default]
    StartStandby,
    PotentialUpdate,
    PotentialUpdate2,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum GatingState {
    PowerGated,
    Waking,
    Clocked,
}

/// Full state of one integrate-and-fire neuron.
#[derive(Clone, Debug)]
pub struct NeuronState {
    pub potential: i64,
    pub threshold: u32,
    pub fsm: FsmState,
    pub power_gated: bool,
    pub req_asserted: bool,
    pub wake: WakeupFlops,
    /// Acknowledge line from the arbiter (or output counter), sampled at the
    /// next FSM step.
    pub ack_pending: bool,
    /// Last synaptic delivery timestamp, for collision detection.
    pub last_synaptic_spike_at: Option<SimTime>,
    bucket: GatingState,
    bucket_since: u64,
    buckets: GatingBuckets,
}

/// What a delivered spike edge did.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SpikeOutcome {
    /// Edge latched; `woke` is set when this edge raised clock-enable.
    Latched { woke: bool },
    /// The matching flop was still set; the edge could not latch.
    Lost,
}

/// Effects of one FSM step.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct StepEffect {
    /// Fire request asserted on this edge.
    pub raised_request: bool,
    /// Neuron re-gated clock and power on this edge.
    pub slept: bool,
}

impl NeuronState {
    pub fn new(threshold: u32) -> Self {
        NeuronState {
            potential: 0,
            threshold,
            fsm: FsmState::StartStandby,
            power_gated: true,
            req_asserted: false,
            wake: WakeupFlops::default(),
            ack_pending: false,
            last_synaptic_spike_at: None,
            bucket: GatingState::PowerGated,
            bucket_since: 0,
            buckets: GatingBuckets::default(),
        }
    }

    fn move_bucket(&mut self, to: GatingState, now: SimTime) {
        let elapsed = now.ticks() - self.bucket_since;
        match self.bucket {
            GatingState::PowerGated => self.buckets.power_gated += elapsed,
            GatingState::Waking => self.buckets.waking += elapsed,
            GatingState::Clocked => self.buckets.clocked += elapsed,
        }
        self.bucket = to;
        self.bucket_since = now.ticks();
    }

    /// Close the gating accounting at end of run.
    pub fn flush_buckets(&mut self, end: SimTime) {
        let keep = self.bucket;
        self.move_bucket(keep, end);
    }

    pub fn buckets(&self) -> GatingBuckets {
        self.buckets
    }

    /// Rising edge of an incoming spike. Sets the matching polarity flop and
    /// clock-enable; the caller starts the cluster clock when `woke` comes
    /// back true on a stopped cluster.
    pub fn on_spike_edge(&mut self, polarity: Polarity, now: SimTime) -> SpikeOutcome {
        let flop = match polarity {
            Polarity::Plus => &mut self.wake.ff_p1,
            Polarity::Minus => &mut self.wake.ff_m1,
        };
        if *flop {
            // The edge-detect flop cannot latch a second edge.
            return SpikeOutcome::Lost;
        }
        *flop = true;
        if self.wake.ff_clk_en {
            return SpikeOutcome::Latched { woke: false };
        }
        self.wake.ff_clk_en = true;
        debug_assert!(
            self.power_gated,
            "clock-enable was clear on a powered neuron"
        );
        self.move_bucket(GatingState::Waking, now);
        SpikeOutcome::Latched { woke: true }
    }

    /// Falling edge of the cluster clock while waiting to un-gate: the FSM
    /// starts receiving rising edges from the next one onward. Power
    /// un-gating completes here as well, within one cycle of the wake.
    pub fn ungate(&mut self, now: SimTime) {
        debug_assert!(self.wake.ff_clk_en && !self.wake.ff_clk_ug);
        self.wake.ff_clk_ug = true;
        self.power_gated = false;
        self.move_bucket(GatingState::Clocked, now);
    }

    pub fn awaiting_ungate(&self) -> bool {
        self.wake.ff_clk_en && !self.wake.ff_clk_ug
    }

    pub fn clocked(&self) -> bool {
        self.wake.ff_clk_ug
    }

    /// One rising clock edge delivered to the FSM.
    pub fn fsm_step(&mut self, now: SimTime) -> StepEffect {
        assert!(
            !self.power_gated,
            "FSM stepped while power-gated (kernel scheduling bug)"
        );
        let mut effect = StepEffect::default();
        match self.fsm {
            FsmState::StartStandby => {
                if self.wake.ff_p1 || self.wake.ff_m1 {
                    self.fsm = FsmState::PotentialUpdate;
                } else if self.potential >= self.threshold as i64 {
                    // Potential carried past threshold while a previous
                    // request was outstanding; run a fresh update pass.
                    self.fsm = FsmState::PotentialUpdate;
                } else {
                    self.wake.ff_clk_en = false;
                    self.wake.ff_clk_ug = false;
                    self.power_gated = true;
                    self.move_bucket(GatingState::PowerGated, now);
                    effect.slept = true;
                }
            }
            FsmState::PotentialUpdate => {
                self.consume_one_flop();
                if self.potential >= self.threshold as i64 {
                    self.potential = 0;
                    self.req_asserted = true;
                    self.fsm = FsmState::PotentialUpdate2;
                    effect.raised_request = true;
                } else {
                    self.fsm = FsmState::StartStandby;
                }
            }
            FsmState::PotentialUpdate2 => {
                self.consume_one_flop();
                if self.ack_pending {
                    self.ack_pending = false;
                    self.req_asserted = false;
                    self.fsm = FsmState::StartStandby;
                }
            }
        }
        effect
    }

    /// At most one pending flop is consumed per pass, +1 before -1.
    fn consume_one_flop(&mut self) {
        if self.wake.ff_p1 {
            self.wake.ff_p1 = false;
            self.potential += 1;
        } else if self.wake.ff_m1 {
            self.wake.ff_m1 = false;
            self.potential -= 1;
        }
    }
}

/// Shared clock generator state. `gen` invalidates in-flight edge events
/// when the clock stops or restarts; a restarted generator begins with a
/// fresh full low phase.
#[derive(Clone, Copy, Debug, Default)]
pub struct ClockGen {
    pub running: bool,
    pub gen: u64,
}

impl ClockGen {
    pub fn start(&mut self) {
        debug_assert!(!self.running);
        self.running = true;
        self.gen += 1;
    }

    pub fn stop(&mut self) {
        debug_assert!(self.running);
        self.running = false;
        self.gen += 1;
    }

    pub fn matches(&self, gen: u64) -> bool {
        self.running && self.gen == gen
    }
}

/// A group of neurons sharing one clock generator.
#[derive(Clone, Debug)]
pub struct Cluster {
    pub clock: ClockGen,
    pub first: u32,
    pub len: u32,
    /// Members with clock-enable set.
    pub active_members: u32,
}

impl Cluster {
    pub fn members(&self) -> std::ops::Range<usize> {
        self.first as usize..(self.first + self.len) as usize
    }
}

/// All neurons of one core plus their cluster clock generators.
#[derive(Clone, Debug)]
pub struct NeuronBlock {
    pub neurons: Vec<NeuronState>,
    pub clusters: Vec<Cluster>,
    cluster_size: u32,
    pub period_ticks: u64,
}

impl NeuronBlock {
    pub fn new(count: u32, threshold: u32, cluster_size: Option<u32>, period_ticks: u64) -> Self {
        let cluster_size = cluster_size.unwrap_or(count).max(1);
        let neurons = (0..count).map(|_| NeuronState::new(threshold)).collect();
        let clusters = (0..count.div_ceil(cluster_size))
            .map(|k| Cluster {
                clock: ClockGen::default(),
                first: k * cluster_size,
                len: cluster_size.min(count - k * cluster_size),
                active_members: 0,
            })
            .collect();
        NeuronBlock {
            neurons,
            clusters,
            cluster_size,
            period_ticks,
        }
    }

    pub fn cluster_of(&self, neuron: usize) -> usize {
        neuron / self.cluster_size as usize
    }

    pub fn flush_buckets(&mut self, end: SimTime) {
        for n in &mut self.neurons {
            n.flush_buckets(end);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn woken(threshold: u32) -> NeuronState {
        let mut n = NeuronState::new(threshold);
        assert_eq!(
            n.on_spike_edge(Polarity::Plus, SimTime(0)),
            SpikeOutcome::Latched { woke: true }
        );
        n.ungate(SimTime(0));
        n.wake.ff_p1 = false; // start tests from a clean pending state
        n
    }

    /// Step with immediate acknowledge; returns fire count added.
    fn step_immediate_ack(n: &mut NeuronState, at: SimTime) -> u64 {
        let e = n.fsm_step(at);
        if e.raised_request {
            n.ack_pending = true;
            1
        } else {
            0
        }
    }

    /// Reference accumulator: one fire each time the running sum reaches the
    /// threshold, which then resets to zero.
    fn accumulator_fires(threshold: u32, spikes: &[i64]) -> u64 {
        let mut acc: i64 = 0;
        let mut fires = 0;
        for s in spikes {
            acc += s;
            if acc >= threshold as i64 {
                fires += 1;
                acc = 0;
            }
        }
        fires
    }

    #[test]
    fn spike_edge_sets_flop_and_clock_enable() {
        let mut n = NeuronState::new(2);
        assert!(n.power_gated);
        let out = n.on_spike_edge(Polarity::Plus, SimTime(5));
        assert_eq!(out, SpikeOutcome::Latched { woke: true });
        assert!(n.wake.ff_p1 && n.wake.ff_clk_en && !n.wake.ff_clk_ug);
        assert!(n.awaiting_ungate());

        // second spike of the other polarity while awake: no wake effect
        let out = n.on_spike_edge(Polarity::Minus, SimTime(6));
        assert_eq!(out, SpikeOutcome::Latched { woke: false });
    }

    #[test]
    fn second_edge_on_a_set_flop_is_lost() {
        let mut n = NeuronState::new(2);
        n.on_spike_edge(Polarity::Plus, SimTime(0));
        let before = n.clone();
        assert_eq!(
            n.on_spike_edge(Polarity::Plus, SimTime(1)),
            SpikeOutcome::Lost
        );
        assert_eq!(n.wake, before.wake);
        assert_eq!(n.potential, before.potential);
    }

    #[test]
    fn lost_count_equals_difference_from_a_lossless_queue() {
        // three same-polarity edges inside one consume window: a queue model
        // would deliver all three; the flop latches exactly one
        let mut n = NeuronState::new(10);
        let mut lost = 0;
        for t in 0..3 {
            if n.on_spike_edge(Polarity::Plus, SimTime(t)) == SpikeOutcome::Lost {
                lost += 1;
            }
        }
        n.ungate(SimTime(3));
        n.fsm_step(SimTime(4)); // StartStandby -> PotentialUpdate
        n.fsm_step(SimTime(5)); // consume
        assert_eq!(n.potential, 1);
        assert_eq!(lost, 3 - 1);
    }

    #[test]
    fn fire_resets_potential_and_raises_request() {
        let mut n = woken(2);
        n.potential = 1;
        n.wake.ff_p1 = true;
        n.fsm = FsmState::PotentialUpdate;
        let e = n.fsm_step(SimTime(10));
        assert!(e.raised_request);
        assert_eq!(n.potential, 0);
        assert!(n.req_asserted);
        assert_eq!(n.fsm, FsmState::PotentialUpdate2);
    }

    #[test]
    fn below_threshold_update_returns_to_standby_without_clamp() {
        let mut n = woken(2);
        n.wake.ff_m1 = true;
        n.fsm = FsmState::PotentialUpdate;
        let e = n.fsm_step(SimTime(10));
        assert!(!e.raised_request);
        assert_eq!(n.potential, -1);
        assert_eq!(n.fsm, FsmState::StartStandby);
    }

    #[test]
    fn potential_update_2_carries_new_spikes_through_the_ack() {
        let mut n = woken(2);
        n.potential = 1;
        n.wake.ff_p1 = true;
        n.fsm = FsmState::PotentialUpdate;
        assert!(n.fsm_step(SimTime(0)).raised_request);
        // new spike while waiting for the acknowledge
        n.on_spike_edge(Polarity::Plus, SimTime(1));
        n.fsm_step(SimTime(2));
        assert_eq!(n.potential, 1);
        assert_eq!(n.fsm, FsmState::PotentialUpdate2);
        n.ack_pending = true;
        n.fsm_step(SimTime(3));
        assert_eq!(n.fsm, FsmState::StartStandby);
        assert_eq!(n.potential, 1); // carried into the next interval
        assert!(!n.req_asserted);
    }

    #[test]
    fn sixty_three_unit_spikes_through_threshold_one_fire_sixty_three_times() {
        let mut n = woken(1);
        let mut fires = 0;
        let mut t = 0;
        for _ in 0..63 {
            n.on_spike_edge(Polarity::Plus, SimTime(t));
            // step until the flop is consumed and the request acked
            while n.wake.ff_p1 || n.fsm != FsmState::StartStandby {
                t += 1;
                fires += step_immediate_ack(&mut n, SimTime(t));
            }
            t += 1;
        }
        assert_eq!(fires, 63); // floor(63 / 1)
    }

    #[test]
    fn tie_break_consumes_plus_before_minus() {
        let mut n = woken(1);
        n.wake.ff_p1 = true;
        n.wake.ff_m1 = true;
        n.fsm = FsmState::PotentialUpdate;
        let e = n.fsm_step(SimTime(0));
        // +1 consumed first: fires at threshold 1 even though the net is zero
        assert!(e.raised_request);
        assert!(!n.wake.ff_p1);
        assert!(n.wake.ff_m1);
    }

    #[test]
    fn standby_refires_when_potential_stayed_at_threshold() {
        let mut n = woken(2);
        n.potential = 3; // accumulated during a previous wait
        let e = n.fsm_step(SimTime(0));
        assert!(!e.raised_request);
        assert_eq!(n.fsm, FsmState::PotentialUpdate);
        let e = n.fsm_step(SimTime(1));
        assert!(e.raised_request);
        assert_eq!(n.potential, 0);
    }

    #[test]
    #[should_panic(expected = "power-gated")]
    fn stepping_a_gated_neuron_is_a_kernel_bug() {
        let mut n = NeuronState::new(1);
        n.fsm_step(SimTime(0));
    }

    #[test]
    fn firing_count_matches_accumulator_replay_when_spikes_are_separated() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(42);
        for case in 0..200 {
            let threshold = rng.gen_range(1..=8);
            let len = rng.gen_range(1..=120);
            let spikes: Vec<i64> = (0..len)
                .map(|_| if rng.gen_bool(0.7) { 1 } else { -1 })
                .collect();

            let mut n = NeuronState::new(threshold);
            let mut fires = 0;
            let mut t = 0u64;
            for &s in &spikes {
                let pol = if s > 0 {
                    Polarity::Plus
                } else {
                    Polarity::Minus
                };
                // wide separation: the previous spike is fully processed and
                // the neuron asleep again before the next edge arrives
                while !n.power_gated {
                    t += 1;
                    fires += step_immediate_ack(&mut n, SimTime(t));
                }
                if n.on_spike_edge(pol, SimTime(t)) == (SpikeOutcome::Latched { woke: true }) {
                    n.ungate(SimTime(t));
                }
                t += 1;
                fires += step_immediate_ack(&mut n, SimTime(t));
            }
            while !n.power_gated {
                t += 1;
                fires += step_immediate_ack(&mut n, SimTime(t));
            }
            assert_eq!(
                fires,
                accumulator_fires(threshold, &spikes),
                "case {case}: threshold {threshold}, spikes {spikes:?}"
            );
        }
    }

    #[test]
    fn gating_buckets_partition_the_timeline() {
        let mut n = NeuronState::new(1);
        n.on_spike_edge(Polarity::Plus, SimTime(100)); // gated 0..100, waking from 100
        n.ungate(SimTime(114)); // waking 100..114, clocked from 114
        n.fsm_step(SimTime(121)); // -> PotentialUpdate
        step_immediate_ack(&mut n, SimTime(135)); // fire
        n.fsm_step(SimTime(149)); // ack seen -> StartStandby
        n.fsm_step(SimTime(163)); // sleep
        n.flush_buckets(SimTime(200));
        let b = n.buckets();
        assert_eq!(b.waking, 14);
        assert_eq!(b.clocked, 163 - 114);
        assert_eq!(b.power_gated, 100 + (200 - 163));
        assert_eq!(b.total(), 200);
    }

    #[test]
    fn cluster_partitioning_covers_all_neurons() {
        let block = NeuronBlock::new(10, 1, Some(4), 14);
        assert_eq!(block.clusters.len(), 3);
        assert_eq!(block.clusters[2].members(), 8..10);
        assert_eq!(block.cluster_of(9), 2);
        let whole = NeuronBlock::new(256, 1, None, 14);
        assert_eq!(whole.clusters.len(), 1);
        assert_eq!(whole.clusters[0].members(), 0..256);
    }
}
