//! Integer picosecond simulation time.

use std::fmt;
use std::ops::{Add, AddAssign, Sub};

use serde::{Deserialize, Serialize};

/// Picoseconds per CPU cycle at 1.2GHz (1/1.2GHz rounded down).
pub const CYCLE_PS: u64 = 833;

/// A point in (or span of) simulated time, in picoseconds.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Ps(pub u64);

impl Ps {
    pub const ZERO: Ps = Ps(0);

    pub const fn from_ns(ns: u64) -> Ps {
        Ps(ns * 1_000)
    }

    pub const fn from_cycles(cycles: u64) -> Ps {
        Ps(cycles * CYCLE_PS)
    }

    /// Converts a nanosecond quantity given as a decimal value; rounds to the nearest picosecond.
    pub fn from_ns_f64(ns: f64) -> Ps {
        Ps((ns * 1_000.0).round() as u64)
    }

    pub fn as_ns_f64(self) -> f64 {
        self.0 as f64 / 1_000.0
    }

    pub fn saturating_sub(self, rhs: Ps) -> Ps {
        Ps(self.0.saturating_sub(rhs.0))
    }
}

impl Add for Ps {
    type Output = Ps;
    fn add(self, rhs: Ps) -> Ps {
        Ps(self.0 + rhs.0)
    }
}

impl AddAssign for Ps {
    fn add_assign(&mut self, rhs: Ps) {
        self.0 += rhs.0;
    }
}

impl Sub for Ps {
    type Output = Ps;
    fn sub(self, rhs: Ps) -> Ps {
        Ps(self.0.checked_sub(rhs.0).expect("negative simulated duration"))
    }
}

impl fmt::Display for Ps {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}.{:03}ns", self.0 / 1_000, self.0 % 1_000)
    }
}
