use std::cmp::Ordering;
use std::fmt;
use std::ops::Add;

use serde::{Deserialize, Serialize};

use super::EngineError;

/// Minutes since the start of the run.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SimTime(f64);

impl SimTime {
    pub const ZERO: SimTime = SimTime(0.0);

    pub fn new(minutes: f64) -> Result<Self, EngineError> {
        if minutes.is_finite() && minutes >= 0.0 {
            Ok(SimTime(minutes))
        } else {
            Err(EngineError::BadTime(minutes))
        }
    }

    pub fn minutes(self) -> f64 {
        self.0
    }

    /// Minutes elapsed since `earlier`.
    pub fn since(self, earlier: SimTime) -> f64 {
        self.0 - earlier.0
    }
}

impl Eq for SimTime {}

impl PartialOrd for SimTime {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for SimTime {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0.total_cmp(&other.0)
    }
}

impl Add<f64> for SimTime {
    type Output = SimTime;

    /// Panics in debug builds if the delay is negative or not finite.
    fn add(self, delay: f64) -> SimTime {
        debug_assert!(delay >= 0.0 && delay.is_finite(), "bad delay {delay}");
        SimTime(self.0 + delay)
    }
}

impl fmt::Display for SimTime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:.3}min", self.0)
    }
}
