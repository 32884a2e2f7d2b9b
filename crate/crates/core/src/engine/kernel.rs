use std::cmp::Ordering;
use std::collections::{BinaryHeap, HashSet};

use super::{AgentId, EngineError, SimTime};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EventKind {
    Arrival,
    BrowseDone,
    PatienceExpired,
    ServiceDone,
    ShiftTick,
    HorizonReached,
}

/// Handle returned by [`Kernel::schedule`], used to cancel the event later.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct EventHandle(u64);

impl EventHandle {
    pub fn seq(self) -> u64 {
        self.0
    }
}

#[derive(Debug, Clone)]
pub struct Event<P> {
    pub time: SimTime,
    pub seq: u64,
    pub target: AgentId,
    pub kind: EventKind,
    pub payload: P,
}

struct Queued<P>(Event<P>);

impl<P> PartialEq for Queued<P> {
    fn eq(&self, other: &Self) -> bool {
        self.0.seq == other.0.seq
    }
}

impl<P> Eq for Queued<P> {}

impl<P> PartialOrd for Queued<P> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl<P> Ord for Queued<P> {
    // Reversed: BinaryHeap is a max-heap and we want the earliest (time, seq).
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .0
            .time
            .cmp(&self.0.time)
            .then_with(|| other.0.seq.cmp(&self.0.seq))
    }
}

/// Bookkeeping for the future-event list.
///
/// At any point `scheduled == fired + cancelled + pending`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct FelStats {
    pub scheduled: u64,
    pub fired: u64,
    pub cancelled: u64,
    pub pending: u64,
}

/// Simulation clock plus future-event list.
///
/// Single-threaded: handlers receive `&mut Kernel` and may schedule or
/// cancel while an event is being processed.
pub struct Kernel<P> {
    now: SimTime,
    next_seq: u64,
    heap: BinaryHeap<Queued<P>>,
    live: HashSet<u64>,
    fired: u64,
    cancelled: u64,
}

impl<P> Default for Kernel<P> {
    fn default() -> Self {
        Self::new()
    }
}

impl<P> Kernel<P> {
    pub fn new() -> Self {
        Kernel {
            now: SimTime::ZERO,
            next_seq: 0,
            heap: BinaryHeap::new(),
            live: HashSet::new(),
            fired: 0,
            cancelled: 0,
        }
    }

    pub fn now(&self) -> SimTime {
        self.now
    }

    pub fn schedule(
        &mut self,
        time: SimTime,
        target: AgentId,
        kind: EventKind,
        payload: P,
    ) -> Result<EventHandle, EngineError> {
        if time < self.now {
            return Err(EngineError::PastEvent {
                now: self.now.minutes(),
                event: time.minutes(),
            });
        }
        let seq = self.next_seq;
        self.next_seq += 1;
        self.live.insert(seq);
        self.heap.push(Queued(Event {
            time,
            seq,
            target,
            kind,
            payload,
        }));
        Ok(EventHandle(seq))
    }

    /// Schedules `delay` minutes from now.
    pub fn schedule_in(
        &mut self,
        delay: f64,
        target: AgentId,
        kind: EventKind,
        payload: P,
    ) -> Result<EventHandle, EngineError> {
        if !(delay >= 0.0 && delay.is_finite()) {
            return Err(EngineError::BadTime(delay));
        }
        self.schedule(self.now + delay, target, kind, payload)
    }

    /// Returns true iff the event had neither fired nor been cancelled.
    pub fn cancel(&mut self, handle: EventHandle) -> bool {
        let removed = self.live.remove(&handle.0);
        if removed {
            self.cancelled += 1;
        }
        removed
    }

    pub fn is_pending(&self, handle: EventHandle) -> bool {
        self.live.contains(&handle.0)
    }

    /// Pops the next live event at or before `horizon`, advancing the clock.
    /// When none remains, the clock moves to `horizon` and `None` is returned.
    pub fn next_before(&mut self, horizon: SimTime) -> Option<Event<P>> {
        while let Some(top) = self.heap.peek() {
            if top.0.time > horizon {
                break;
            }
            let Queued(event) = self.heap.pop().expect("peeked");
            if !self.live.remove(&event.seq) {
                continue;
            }
            self.now = event.time;
            self.fired += 1;
            return Some(event);
        }
        if horizon > self.now {
            self.now = horizon;
        }
        None
    }

    /// Processes every event with `time <= horizon` in `(time, seq)` order and
    /// leaves the clock at `horizon`. Returns the number of events fired.
    pub fn run_until<F, E>(&mut self, horizon: SimTime, mut handler: F) -> Result<u64, E>
    where
        F: FnMut(&mut Self, Event<P>) -> Result<(), E>,
        E: From<EngineError>,
    {
        if horizon < self.now {
            return Err(EngineError::PastHorizon {
                now: self.now.minutes(),
                horizon: horizon.minutes(),
            }
            .into());
        }
        let mut count = 0;
        while let Some(event) = self.next_before(horizon) {
            count += 1;
            handler(self, event)?;
        }
        Ok(count)
    }

    pub fn stats(&self) -> FelStats {
        FelStats {
            scheduled: self.next_seq,
            fired: self.fired,
            cancelled: self.cancelled,
            pending: self.live.len() as u64,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn t(v: f64) -> SimTime {
        SimTime::new(v).unwrap()
    }

    fn drain(k: &mut Kernel<&'static str>, horizon: f64) -> Vec<(f64, &'static str)> {
        let mut out = Vec::new();
        k.run_until::<_, EngineError>(t(horizon), |k, e| {
            out.push((k.now().minutes(), e.payload));
            Ok(())
        })
        .unwrap();
        out
    }

    #[test]
    fn schedule_at_now_is_accepted() {
        let mut k = Kernel::new();
        assert!(k.schedule(t(0.0), 0, EventKind::Arrival, "a").is_ok());
    }

    #[test]
    fn past_event_rejected() {
        let mut k: Kernel<()> = Kernel::new();
        k.schedule(t(5.0), 0, EventKind::Arrival, ()).unwrap();
        k.run_until::<_, EngineError>(t(5.0), |_, _| Ok(())).unwrap();
        let err = k.schedule(t(4.0), 0, EventKind::Arrival, ()).unwrap_err();
        assert!(matches!(err, EngineError::PastEvent { .. }));
    }

    #[test]
    fn fires_at_scheduled_time() {
        let mut k = Kernel::new();
        k.schedule(t(5.0), 0, EventKind::ShiftTick, "x").unwrap();
        assert_eq!(drain(&mut k, 10.0), vec![(5.0, "x")]);
        assert_eq!(k.now(), t(10.0));
    }

    #[test]
    fn equal_times_fire_in_schedule_order() {
        let mut k = Kernel::new();
        k.schedule(t(2.0), 0, EventKind::ShiftTick, "first").unwrap();
        k.schedule(t(1.0), 0, EventKind::ShiftTick, "early").unwrap();
        k.schedule(t(2.0), 0, EventKind::ShiftTick, "second").unwrap();
        let order: Vec<_> = drain(&mut k, 3.0).into_iter().map(|(_, p)| p).collect();
        assert_eq!(order, ["early", "first", "second"]);
    }

    #[test]
    fn cancel_semantics() {
        let mut k = Kernel::new();
        let a = k.schedule(t(1.0), 0, EventKind::PatienceExpired, "a").unwrap();
        let b = k.schedule(t(2.0), 0, EventKind::PatienceExpired, "b").unwrap();
        assert!(k.cancel(a));
        assert!(!k.cancel(a), "double cancel");
        assert_eq!(drain(&mut k, 5.0), vec![(2.0, "b")]);
        assert!(!k.cancel(b), "cancel after fire");
    }

    #[test]
    fn empty_run_moves_clock() {
        let mut k: Kernel<()> = Kernel::new();
        let n = k.run_until::<_, EngineError>(t(100.0), |_, _| Ok(())).unwrap();
        assert_eq!(n, 0);
        assert_eq!(k.now(), t(100.0));
    }

    #[test]
    fn horizon_is_inclusive() {
        let mut k = Kernel::new();
        for (v, p) in [(1.0, "1"), (2.0, "2"), (3.0, "3")] {
            k.schedule(t(v), 0, EventKind::ShiftTick, p).unwrap();
        }
        assert_eq!(drain(&mut k, 2.0).len(), 2);
        let s = k.stats();
        assert_eq!(s.scheduled, s.fired + s.cancelled + s.pending);
        assert_eq!(s.pending, 1);
    }

    #[test]
    fn handler_can_schedule_during_run() {
        let mut k = Kernel::new();
        k.schedule(t(0.0), 0, EventKind::Arrival, 0u32).unwrap();
        let fired = k
            .run_until::<_, EngineError>(t(10.0), |k, e| {
                if e.payload < 4 {
                    k.schedule_in(2.0, 0, EventKind::Arrival, e.payload + 1)?;
                }
                Ok(())
            })
            .unwrap();
        assert_eq!(fired, 5);
    }

    #[test]
    fn past_horizon_rejected() {
        let mut k: Kernel<()> = Kernel::new();
        k.run_until::<_, EngineError>(t(5.0), |_, _| Ok(())).unwrap();
        assert!(k.run_until::<_, EngineError>(t(1.0), |_, _| Ok(())).is_err());
    }
}
