//! Simulation time base.
//!
//! All timing is expressed in integer ticks of a 1 microsecond global time
//! base. Clock periods are derived from nominal frequencies by rounding to
//! the nearest tick (ties round up); the rounded period is what the simulator
//! uses, and reports show both the nominal and the effective frequency.

use std::fmt;
use std::ops::{Add, AddAssign, Sub};

use serde::{Deserialize, Serialize};

/// Ticks per simulated second (1 tick = 1 µs).
pub const TICKS_PER_SECOND: u64 = 1_000_000;

/// A point in simulated time, counted in ticks of the global base.
#[derive(
    Clone, Copy, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
)]
pub struct SimTime(pub u64);

impl SimTime {
    pub const ZERO: SimTime = SimTime(0);

    pub fn from_ticks(ticks: u64) -> Self {
        SimTime(ticks)
    }

    pub fn ticks(self) -> u64 {
        self.0
    }

    pub fn as_secs_f64(self) -> f64 {
        self.0 as f64 / TICKS_PER_SECOND as f64
    }
}

impl Add<u64> for SimTime {
    type Output = SimTime;
    fn add(self, rhs: u64) -> SimTime {
        SimTime(self.0 + rhs)
    }
}

impl AddAssign<u64> for SimTime {
    fn add_assign(&mut self, rhs: u64) {
        self.0 += rhs;
    }
}

impl Sub<SimTime> for SimTime {
    type Output = u64;
    fn sub(self, rhs: SimTime) -> u64 {
        self.0 - rhs.0
    }
}

impl fmt::Display for SimTime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}us", self.0)
    }
}

/// Clock period in ticks for a nominal frequency, nearest tick, ties up.
pub fn period_ticks(clock_hz: u64) -> u64 {
    (2 * TICKS_PER_SECOND + clock_hz) / (2 * clock_hz)
}

/// The frequency actually realized by a rounded period.
pub fn effective_hz(period_ticks: u64) -> f64 {
    TICKS_PER_SECOND as f64 / period_ticks as f64
}

/// Length of the initial low phase of a freshly started clock generator.
///
/// A started generator runs a full low phase, rises, runs the high phase and
/// falls, so the first rising edge is `low_phase_ticks` after the start event
/// and the first falling edge is one full period after it.
pub fn low_phase_ticks(period: u64) -> u64 {
    period.div_ceil(2)
}
