//! Synapse block: fixed-priority arbiter, single-port weight SRAM and the
//! spike generator feeding the next core.
//!
//! A fire request starts the block's local clock generator; the arbiter FSM
//! then serializes accesses to the single-port SRAM. One service consumes
//! exactly `cycles_per_service` rising edges: the first edge selects the
//! highest-priority pending request (lowest neuron index), the row read and
//! the spike emission happen on the second-to-last edge (wait states sit in
//! between when the budget is larger), and the last edge acknowledges the
//! neuron. With a two-cycle budget the read, emission and acknowledge share
//! the final edge; with one cycle everything collapses onto a single edge.
//! All spikes of one service share the emission timestamp and target
//! distinct downstream neurons, which keeps deliveries to any one neuron
//! separated by at least one full service. When the last acknowledge leaves
//! no request pending, the clock is disabled.

use crate::bits::BitSet256;
use crate::model::{Polarity, WeightMatrix};
use crate::neuron::ClockGen;

/// Named arbiter FSM phases, derived from the service edge counter.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ArbiterPhase {
    Idle,
    Select,
    ReadRow,
    EmitSpikes,
    AckNeuron,
}

/// Outcome of raising a request line.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RaiseOutcome {
    /// Request queued; `started_clock` is set when the local generator was idle.
    Queued { started_clock: bool },
    /// The request line was already pending: a neuron-side protocol violation.
    Duplicate,
}

/// Effects of one arbiter clock edge.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct TickOutcome {
    /// Service started: the selected neuron index.
    pub selected: Option<u16>,
    /// Row to read and emit on this edge.
    pub emit_row: Option<u16>,
    /// Acknowledge issued to this neuron on this edge.
    pub acked: Option<u16>,
    /// No request left pending; the local clock shut down.
    pub clock_stopped: bool,
}

/// Arbiter state plus the block's weight SRAM.
#[derive(Clone, Debug)]
pub struct SynapseBlock {
    pub pending: BitSet256,
    pub clock: ClockGen,
    pub period_ticks: u64,
    pub cycles_per_service: u32,
    serving: Option<u16>,
    edge_in_service: u32,
    weights: WeightMatrix,
}

impl SynapseBlock {
    pub fn new(weights: WeightMatrix, period_ticks: u64, cycles_per_service: u32) -> Self {
        assert!(cycles_per_service >= 1);
        SynapseBlock {
            pending: BitSet256::new(),
            clock: ClockGen::default(),
            period_ticks,
            cycles_per_service,
            serving: None,
            edge_in_service: 0,
            weights,
        }
    }

    pub fn weights(&self) -> &WeightMatrix {
        &self.weights
    }

    pub fn serving(&self) -> Option<u16> {
        self.serving
    }

    pub fn cycles_in_service(&self) -> u32 {
        self.edge_in_service
    }

    pub fn phase(&self) -> ArbiterPhase {
        match (self.serving, self.edge_in_service) {
            (None, _) => ArbiterPhase::Idle,
            (Some(_), e) if e <= 1 => ArbiterPhase::Select,
            (Some(_), e) if e < self.emit_edge() => ArbiterPhase::ReadRow,
            (Some(_), e) if e == self.emit_edge() && e != self.cycles_per_service => {
                ArbiterPhase::EmitSpikes
            }
            _ => ArbiterPhase::AckNeuron,
        }
    }

    fn emit_edge(&self) -> u32 {
        if self.cycles_per_service == 1 {
            1
        } else {
            2.max(self.cycles_per_service - 1)
        }
    }

    /// Assert a neuron's request line.
    pub fn raise_request(&mut self, neuron: usize) -> RaiseOutcome {
        if self.pending.get(neuron) {
            return RaiseOutcome::Duplicate;
        }
        self.pending.set(neuron);
        if self.clock.running {
            RaiseOutcome::Queued {
                started_clock: false,
            }
        } else {
            self.clock.start();
            RaiseOutcome::Queued {
                started_clock: true,
            }
        }
    }

    /// One rising edge of the local clock.
    pub fn tick(&mut self) -> TickOutcome {
        debug_assert!(self.clock.running);
        let mut out = TickOutcome::default();
        if self.serving.is_none() {
            match self.pending.min_set_bit() {
                None => {
                    // No work despite a running clock; shut down defensively.
                    self.clock.stop();
                    out.clock_stopped = true;
                    return out;
                }
                Some(bit) => {
                    self.serving = Some(bit as u16);
                    self.edge_in_service = 1;
                    out.selected = self.serving;
                }
            }
        } else {
            self.edge_in_service += 1;
        }
        let row = self.serving.expect("service in progress");
        if self.edge_in_service == self.emit_edge() {
            out.emit_row = Some(row);
        }
        if self.edge_in_service == self.cycles_per_service {
            self.pending.clear(row as usize);
            self.serving = None;
            self.edge_in_service = 0;
            out.acked = Some(row);
            if self.pending.is_empty() {
                self.clock.stop();
                out.clock_stopped = true;
            }
        }
        out
    }

    /// Spikes generated from one SRAM row: +1 where the bit is set, -1 where
    /// it is clear, one per downstream neuron.
    pub fn row_polarities(&self, row: u16) -> impl Iterator<Item = (u16, Polarity)> + '_ {
        self.weights.row(row as u32).enumerate().map(|(col, bit)| {
            (
                col as u16,
                if bit { Polarity::Plus } else { Polarity::Minus },
            )
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn block(cycles: u32) -> SynapseBlock {
        SynapseBlock::new(WeightMatrix::checkerboard(16, 8), 59, cycles)
    }

    #[test]
    fn request_on_idle_block_starts_the_clock_and_selects_next_edge() {
        let mut b = block(4);
        assert_eq!(
            b.raise_request(5),
            RaiseOutcome::Queued {
                started_clock: true
            }
        );
        assert_eq!(b.phase(), ArbiterPhase::Idle);
        let out = b.tick();
        assert_eq!(out.selected, Some(5));
        assert_ne!(b.phase(), ArbiterPhase::Idle);
    }

    #[test]
    fn requests_queue_without_preempting_the_current_service() {
        let mut b = block(4);
        b.raise_request(9);
        b.tick(); // select 9
        assert_eq!(
            b.raise_request(0),
            RaiseOutcome::Queued {
                started_clock: false
            }
        );
        assert_eq!(b.serving(), Some(9));
        b.tick(); // read
        b.tick(); // emit
        let out = b.tick(); // ack
        assert_eq!(out.acked, Some(9));
        let out = b.tick();
        assert_eq!(out.selected, Some(0)); // queued request served next
    }

    #[test]
    fn duplicate_request_detected() {
        let mut b = block(4);
        b.raise_request(0);
        assert_eq!(b.raise_request(0), RaiseOutcome::Duplicate);
        b.tick(); // select: bit stays set until the ack
        assert_eq!(b.raise_request(0), RaiseOutcome::Duplicate);
    }

    #[test]
    fn lowest_index_has_priority() {
        let mut b = block(4);
        b.raise_request(7);
        b.raise_request(3);
        assert_eq!(b.tick().selected, Some(3));
    }

    #[test]
    fn selection_matches_a_reference_min_scan() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for _ in 0..200 {
            let mut b = SynapseBlock::new(WeightMatrix::checkerboard(256, 8), 59, 1);
            let mut flags = [false; 256];
            for _ in 0..rng.gen_range(1..40) {
                let n = rng.gen_range(0..256);
                if !flags[n] {
                    flags[n] = true;
                    b.raise_request(n);
                }
            }
            let reference = flags.iter().position(|f| *f).unwrap() as u16;
            assert_eq!(b.tick().selected, Some(reference));
        }
    }

    #[test]
    fn full_service_uses_exactly_the_cycle_budget() {
        for cycles in 1..=6u32 {
            let mut b = block(cycles);
            b.raise_request(2);
            let mut edges = 0;
            let mut emitted = 0;
            loop {
                edges += 1;
                let out = b.tick();
                if out.emit_row.is_some() {
                    emitted += 1;
                    assert_eq!(out.emit_row, Some(2));
                }
                if let Some(acked) = out.acked {
                    assert_eq!(acked, 2);
                    break;
                }
            }
            assert_eq!(edges, cycles, "cycle budget for {cycles}");
            assert_eq!(emitted, 1);
            assert!(!b.clock.running);
        }
    }

    #[test]
    fn saturated_acks_are_spaced_one_service_apart() {
        let mut b = block(4);
        for n in 0..8 {
            b.raise_request(n);
        }
        let mut edges_since_ack = 0;
        let mut acks = 0;
        while b.clock.running {
            edges_since_ack += 1;
            if b.tick().acked.is_some() {
                assert_eq!(edges_since_ack, 4);
                edges_since_ack = 0;
                acks += 1;
            }
        }
        assert_eq!(acks, 8);
    }

    #[test]
    fn all_plus_row_emits_all_positive_spikes() {
        let b = SynapseBlock::new(WeightMatrix::all_plus(4, 128), 59, 4);
        let spikes: Vec<_> = b.row_polarities(1).collect();
        assert_eq!(spikes.len(), 128);
        assert!(spikes.iter().all(|(_, p)| *p == Polarity::Plus));
        let mixed = SynapseBlock::new(WeightMatrix::checkerboard(4, 4), 59, 4);
        let spikes: Vec<_> = mixed.row_polarities(1).collect();
        assert_eq!(
            spikes,
            vec![
                (0, Polarity::Minus),
                (1, Polarity::Plus),
                (2, Polarity::Minus),
                (3, Polarity::Plus),
            ]
        );
    }
}
