//! Deterministic discrete-event kernel.
//!
//! The kernel owns the simulation clock and the future-event list. Events
//! are ordered by `(time, seq)`, where `seq` is the scheduling order, so two
//! events at the same instant always fire in the order they were scheduled.
//! Random numbers come from named [`RngStream`]s whose state is a pure
//! function of the master seed and the stream name.

mod kernel;
mod rng;
mod time;

pub use kernel::{Event, EventHandle, EventKind, FelStats, Kernel};
pub use rng::{derive_seed, Dist, RngStream};
pub use time::SimTime;

use thiserror::Error;

/// Identifier of an agent targeted by an event.
pub type AgentId = u32;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EngineError {
    #[error("cannot schedule an event at t={event} before the current clock t={now}")]
    PastEvent { now: f64, event: f64 },
    #[error("horizon t={horizon} is before the current clock t={now}")]
    PastHorizon { now: f64, horizon: f64 },
    #[error("invalid simulation time {0}")]
    BadTime(f64),
    #[error("bad distribution parameters: {0}")]
    BadDistributionParams(String),
}
