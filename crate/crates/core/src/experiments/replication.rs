use std::collections::{HashMap, HashSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::ScenarioConfig;
use crate::agents::{
    customer_transition, promotion_check, refund_decision, refund_routing, Action, Activity,
    AgentError, Customer, CustomerId, CustomerState, Intent, Outcome, RefundHandler, Staff,
    StaffId, StaffRole, TransitionEnv, Trigger,
};
use crate::engine::{derive_seed, Dist, EngineError, Event, EventKind, FelStats, Kernel, RngStream, SimTime};
use crate::metrics::{finalize, MetricKind, MetricsLedger, Outcomes};
use crate::queuing::{qualifies, Assignment, Attempt, Department, Expertise, Pickup, QueueEntry, ServiceNeed};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error(transparent)]
    Agent(#[from] AgentError),
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error("invalid configuration: {0}")]
    Config(#[from] super::ConfigError),
    #[error("model invariant violated: {0}")]
    Invariant(String),
}

/// Seed of replication `rep` at sweep level `level`.
pub fn replication_seed(master_seed: u64, level: f64, rep: u32) -> u64 {
    let mut label = Vec::with_capacity(24);
    label.extend_from_slice(b"replication");
    label.extend_from_slice(&level.to_bits().to_le_bytes());
    label.extend_from_slice(&rep.to_le_bytes());
    let bytes = derive_seed(master_seed, &label);
    u64::from_le_bytes(bytes[..8].try_into().expect("8 bytes"))
}

/// One row of a sweep: which condition, which replication, what came out.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicationResult {
    pub level: f64,
    pub replication: u32,
    pub seed: u64,
    pub outcomes: Outcomes,
}

/// Runs replication `rep` of `cfg` at sweep `level` (0 outside a sweep).
pub fn run_replication(cfg: &ScenarioConfig, level: f64, rep: u32) -> Result<ReplicationResult, ModelError> {
    let seed = replication_seed(cfg.master_seed, level, rep);
    let run = simulate(cfg, seed, false)?;
    Ok(ReplicationResult {
        level,
        replication: rep,
        seed,
        outcomes: run.outcomes,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Payload {
    None,
    Help { server: StaffId, learner: Option<StaffId> },
    Payment { cashier: StaffId },
    Refund { cashier: StaffId, expert: Option<StaffId>, handler: RefundHandler },
}

struct Streams {
    arrivals: RngStream,
    customers: RngStream,
    browsing: RngStream,
    branching: RngStream,
    service: RngStream,
    till: RngStream,
    refund_routing: RngStream,
    refund_decisions: RngStream,
    learning: RngStream,
}

impl Streams {
    fn new(seed: u64) -> Self {
        Streams {
            arrivals: RngStream::new(seed, "arrivals"),
            customers: RngStream::new(seed, "customers"),
            browsing: RngStream::new(seed, "browsing"),
            branching: RngStream::new(seed, "branching"),
            service: RngStream::new(seed, "service"),
            till: RngStream::new(seed, "till"),
            refund_routing: RngStream::new(seed, "refund-routing"),
            refund_decisions: RngStream::new(seed, "refund-decisions"),
            learning: RngStream::new(seed, "learning"),
        }
    }
}

/// Extra checks collected when a run is audited.
#[derive(Debug, Clone, Default)]
pub struct AuditReport {
    /// Assignments that broke the qualification table.
    pub phantom_services: u64,
    /// Event boundaries at which some staff state was inconsistent.
    pub occupancy_violations: u64,
    /// Times the clock went backwards between processed events.
    pub clock_regressions: u64,
    /// Queued service starts that overtook an older entry of the same class.
    pub fifo_violations: u64,
    /// Customers who reneged from a request that was later served.
    pub renege_then_served: u64,
    /// Payments completed according to cashier task logs.
    pub cashier_payments: u64,
    /// Knowledge points per staff member at the end of each day and at horizon.
    pub knowledge_snapshots: Vec<Vec<u32>>,
    /// Staff roles at the horizon snapshot.
    pub final_roles: Vec<StaffRole>,
    /// Customers served, per need, in order of service start after queueing.
    served_from_queue: HashMap<(ServiceNeed, u8), Vec<(SimTime, CustomerId)>>,
}

/// Everything a single simulated run produces.
#[derive(Debug, Clone)]
pub struct RunReport {
    pub outcomes: Outcomes,
    pub fel: FelStats,
    pub events_fired: u64,
    pub in_system: u64,
    pub ledger: MetricsLedger,
    pub staff: Vec<Staff>,
    pub promotion_point: u32,
    pub audit: Option<AuditReport>,
}

/// Runs one replication with an explicit stream seed.
pub fn simulate(cfg: &ScenarioConfig, seed: u64, audit: bool) -> Result<RunReport, ModelError> {
    cfg.validate()?;
    let mut world = World::new(cfg, seed, audit);
    let horizon = SimTime::new(cfg.horizon_minutes())?;
    world.start(horizon)?;
    let mut kernel = std::mem::take(&mut world.kernel);
    let fired = kernel.run_until(horizon, |k, ev| world.handle(k, ev))?;
    let now = kernel.now();
    let outcomes = finalize(&world.ledger, world.dept.staff(), cfg.horizon_minutes(), now);
    let in_system = world.in_system;
    if let Some(a) = world.audit.as_mut() {
        let queued = std::mem::take(&mut a.served_from_queue);
        for (_, starts) in queued {
            a.fifo_violations += starts.windows(2).filter(|w| w[1].0 < w[0].0).count() as u64;
        }
    }
    Ok(RunReport {
        outcomes,
        fel: kernel.stats(),
        events_fired: fired,
        in_system,
        promotion_point: cfg.levers.promotion_point(),
        staff: world.dept.staff().to_vec(),
        ledger: world.ledger,
        audit: world.audit,
    })
}

struct World<'a> {
    cfg: &'a ScenarioConfig,
    kernel: Kernel<Payload>,
    dept: Department,
    customers: Vec<Customer>,
    ledger: MetricsLedger,
    streams: Streams,
    interarrival: Dist,
    in_system: u64,
    last_time: SimTime,
    /// Per customer, how many service requests have been made so far.
    requests: Vec<u32>,
    reneged: HashSet<(CustomerId, u32)>,
    audit: Option<AuditReport>,
}

impl<'a> World<'a> {
    fn new(cfg: &'a ScenarioConfig, seed: u64, audit: bool) -> Self {
        let s = &cfg.staffing;
        let roles = std::iter::repeat_n(StaffRole::Cashier, s.cashiers as usize)
            .chain(std::iter::repeat_n(StaffRole::NormalSeller, s.normal_sellers as usize))
            .chain(std::iter::repeat_n(StaffRole::ExpertSeller, s.expert_sellers as usize))
            .chain(std::iter::repeat_n(StaffRole::SectionManager, s.section_managers as usize));
        let staff = roles
            .enumerate()
            .map(|(i, r)| Staff::new(i as StaffId, r))
            .collect();
        World {
            cfg,
            kernel: Kernel::new(),
            dept: Department::new(staff, cfg.discipline, cfg.seller_choice),
            customers: Vec::new(),
            ledger: MetricsLedger::new(cfg.weights),
            streams: Streams::new(seed),
            interarrival: Dist::Exponential {
                mean: 60.0 / cfg.arrival_rate_per_hour,
            },
            in_system: 0,
            last_time: SimTime::ZERO,
            requests: Vec::new(),
            reneged: HashSet::new(),
            audit: audit.then(AuditReport::default),
        }
    }

    fn start(&mut self, horizon: SimTime) -> Result<(), ModelError> {
        // Threshold 0 promotes everybody before the doors open.
        let ids: Vec<StaffId> = self.dept.staff().iter().map(|s| s.id).collect();
        for id in ids {
            promotion_check(self.dept.staff_mut(id), &self.cfg.levers, SimTime::ZERO);
        }
        let first = self.streams.arrivals.sample(&self.interarrival)?;
        self.kernel
            .schedule_in(first, 0, EventKind::Arrival, Payload::None)?;
        let day = self.cfg.calendar.day_minutes();
        let mut t = day;
        while t < horizon.minutes() {
            self.kernel
                .schedule(SimTime::new(t)?, 0, EventKind::ShiftTick, Payload::None)?;
            t += day;
        }
        self.kernel
            .schedule(horizon, 0, EventKind::HorizonReached, Payload::None)?;
        Ok(())
    }

    fn handle(&mut self, k: &mut Kernel<Payload>, ev: Event<Payload>) -> Result<(), ModelError> {
        if let Some(a) = self.audit.as_mut() {
            if ev.time < self.last_time {
                a.clock_regressions += 1;
            }
        }
        self.last_time = ev.time;
        match ev.kind {
            EventKind::Arrival => self.on_arrival(k, ev.target)?,
            EventKind::BrowseDone => self.fire(k, ev.target, Trigger::BrowseDone)?,
            EventKind::PatienceExpired => self.on_patience(k, ev.target)?,
            EventKind::ServiceDone => self.on_service_done(k, ev.target, ev.payload)?,
            EventKind::ShiftTick | EventKind::HorizonReached => self.snapshot(),
        }
        if self.audit.is_some() {
            self.check_occupancy();
        }
        Ok(())
    }

    fn snapshot(&mut self) {
        if let Some(a) = self.audit.as_mut() {
            a.knowledge_snapshots
                .push(self.dept.staff().iter().map(|s| s.knowledge_points).collect());
            a.final_roles = self.dept.staff().iter().map(|s| s.role).collect();
        }
    }

    fn on_arrival(&mut self, k: &mut Kernel<Payload>, id: CustomerId) -> Result<(), ModelError> {
        debug_assert_eq!(id as usize, self.customers.len());
        let params = &self.cfg.customers;
        let rng = &mut self.streams.customers;
        let intent = if rng.chance(params.p_refund_visit) {
            Intent::Refund
        } else {
            Intent::Shop
        };
        let required_expertise = if rng.chance(params.p_expert_need) {
            Expertise::Expert
        } else {
            Expertise::Normal
        };
        let customer = Customer {
            id,
            state: CustomerState::Contemplating,
            intent,
            entered_at: k.now(),
            help_patience: rng.sample(&params.patience)?,
            till_patience: rng.sample(&params.patience)?,
            refund_patience: rng.sample(&params.patience)?,
            need_profile: self.cfg.need_profile(),
            required_expertise,
            item_value: rng.sample(&self.cfg.department.item_value)?,
            waiting_at_till: false,
        };
        self.customers.push(customer);
        self.requests.push(0);
        self.ledger.record_entry();
        self.in_system += 1;

        let gap = self.streams.arrivals.sample(&self.interarrival)?;
        k.schedule_in(gap, id + 1, EventKind::Arrival, Payload::None)?;

        self.fire(k, id, Trigger::Entered)
    }

    /// Applies a trigger and executes the resulting actions.
    fn fire(&mut self, k: &mut Kernel<Payload>, id: CustomerId, trigger: Trigger) -> Result<(), ModelError> {
        let mut env = TransitionEnv {
            branching: &mut self.streams.branching,
            browsing: &mut self.streams.browsing,
            browse_time: &self.cfg.customers.browse_time,
        };
        let actions = customer_transition(&mut self.customers[id as usize], trigger, &mut env)?;
        for action in actions {
            match action {
                Action::ScheduleBrowseDone { delay } => {
                    k.schedule_in(delay, id, EventKind::BrowseDone, Payload::None)?;
                }
                Action::Request(need) => self.request_service(k, id, need)?,
                Action::Record(kind) => self.ledger.record(kind),
                Action::Depart(outcome) => {
                    self.ledger.record_exit(outcome);
                    self.in_system -= 1;
                    if outcome == Outcome::Purchased {
                        self.ledger.transactions += 1;
                        self.ledger.sales_value += self.customers[id as usize].item_value;
                    }
                }
            }
        }
        Ok(())
    }

    /// Serves the request at once if a qualified member of staff is idle,
    /// otherwise queues it with a patience timer.
    fn request_service(&mut self, k: &mut Kernel<Payload>, id: CustomerId, need: ServiceNeed) -> Result<(), ModelError> {
        self.requests[id as usize] += 1;
        let attempt = self.dept.try_assign(
            id,
            need,
            k.now(),
            &self.cfg.levers,
            &mut self.streams.learning,
        )?;
        match attempt {
            Attempt::Assigned(a) => self.start_service(k, a),
            Attempt::NoneIdle => {
                let patience = self.customers[id as usize].patience_for(need);
                let patience_handle = if patience.is_finite() {
                    Some(k.schedule_in(patience, id, EventKind::PatienceExpired, Payload::None)?)
                } else {
                    None
                };
                self.dept.enqueue(QueueEntry {
                    customer: id,
                    need,
                    enqueued_at: k.now(),
                    patience_handle,
                });
                self.fire(k, id, Trigger::Queued)
            }
        }
    }

    fn start_service(&mut self, k: &mut Kernel<Payload>, a: Assignment) -> Result<(), ModelError> {
        if let Some(audit) = self.audit.as_mut() {
            let role = self.dept.staff()[a.server as usize].role;
            if !qualifies(role, a.need) {
                audit.phantom_services += 1;
            }
            if self.reneged.contains(&(a.customer, self.requests[a.customer as usize])) {
                audit.renege_then_served += 1;
            }
        }
        match a.need {
            ServiceNeed::Help(_) => {
                let d = self.streams.service.sample(&self.cfg.department.help_service)?;
                k.schedule_in(
                    d,
                    a.customer,
                    EventKind::ServiceDone,
                    Payload::Help {
                        server: a.server,
                        learner: a.learner,
                    },
                )?;
                self.fire(k, a.customer, Trigger::HelpAssigned)
            }
            ServiceNeed::Payment => {
                let d = self.streams.till.sample(&self.cfg.till.payment_time)?;
                k.schedule_in(d, a.customer, EventKind::ServiceDone, Payload::Payment { cashier: a.server })?;
                self.fire(k, a.customer, Trigger::TillAssigned)
            }
            ServiceNeed::Refund => {
                self.fire(k, a.customer, Trigger::RefundAssigned)?;
                let cashier = a.server;
                match refund_routing(&self.cfg.levers, &mut self.streams.refund_routing) {
                    RefundHandler::CashierAutonomous => {
                        let d = self.streams.till.sample(&self.cfg.till.cashier_refund_time)?;
                        k.schedule_in(
                            d,
                            a.customer,
                            EventKind::ServiceDone,
                            Payload::Refund {
                                cashier,
                                expert: None,
                                handler: RefundHandler::CashierAutonomous,
                            },
                        )?;
                    }
                    RefundHandler::ReferToExpert => {
                        self.ledger.record(MetricKind::RefundReferredWait);
                        if let Some(expert) = self.dept.request_referral(cashier, a.customer, k.now())? {
                            self.start_referral(k, cashier, expert, a.customer)?;
                        }
                    }
                }
                Ok(())
            }
        }
    }

    fn start_referral(
        &mut self,
        k: &mut Kernel<Payload>,
        cashier: StaffId,
        expert: StaffId,
        customer: CustomerId,
    ) -> Result<(), ModelError> {
        let d = self.streams.till.sample(&self.cfg.till.expert_refund_time)?;
        k.schedule_in(
            d,
            customer,
            EventKind::ServiceDone,
            Payload::Refund {
                cashier,
                expert: Some(expert),
                handler: RefundHandler::ReferToExpert,
            },
        )?;
        Ok(())
    }

    fn on_patience(&mut self, k: &mut Kernel<Payload>, id: CustomerId) -> Result<(), ModelError> {
        self.dept.renege(id).ok_or_else(|| {
            ModelError::Invariant(format!("customer {id} reneged without a queue entry"))
        })?;
        if self.audit.is_some() {
            self.reneged.insert((id, self.requests[id as usize]));
        }
        self.fire(k, id, Trigger::PatienceExpired)
    }

    fn on_service_done(&mut self, k: &mut Kernel<Payload>, id: CustomerId, payload: Payload) -> Result<(), ModelError> {
        let now = k.now();
        match payload {
            Payload::Help { server, learner } => {
                self.dept.staff_mut(server).end(now)?;
                if let Some(l) = learner {
                    let staff = self.dept.staff_mut(l);
                    staff.end(now)?;
                    staff.knowledge_points += self.cfg.levers.points_per_episode;
                    promotion_check(staff, &self.cfg.levers, now);
                }
                self.fire(k, id, Trigger::ServiceDone)?;
                self.dispatch(k, server)?;
                if let Some(l) = learner {
                    self.dispatch(k, l)?;
                }
            }
            Payload::Payment { cashier } => {
                self.dept.staff_mut(cashier).end(now)?;
                if let Some(a) = self.audit.as_mut() {
                    a.cashier_payments += 1;
                }
                self.fire(k, id, Trigger::PaymentDone)?;
                self.dispatch(k, cashier)?;
            }
            Payload::Refund { cashier, expert, handler } => {
                self.dept.staff_mut(cashier).end(now)?;
                if let Some(e) = expert {
                    self.dept.staff_mut(e).end(now)?;
                }
                let approved = refund_decision(
                    handler,
                    &self.cfg.till.refund_policy,
                    &mut self.streams.refund_decisions,
                );
                self.fire(k, id, Trigger::RefundResolved { approved })?;
                self.dispatch(k, cashier)?;
                if let Some(e) = expert {
                    self.dispatch(k, e)?;
                }
            }
            Payload::None => {
                return Err(ModelError::Invariant(format!(
                    "service completion for customer {id} without a payload"
                )))
            }
        }
        Ok(())
    }

    /// Gives a freed member of staff the next piece of waiting work.
    fn dispatch(&mut self, k: &mut Kernel<Payload>, staff: StaffId) -> Result<(), ModelError> {
        match self.dept.on_staff_freed(staff, k.now())? {
            None => Ok(()),
            Some(Pickup::Referral { cashier, customer }) => {
                self.start_referral(k, cashier, staff, customer)
            }
            Some(Pickup::Customer(entry, assignment)) => {
                if let Some(h) = entry.patience_handle {
                    if !k.cancel(h) {
                        return Err(ModelError::Invariant(format!(
                            "patience timer of customer {} already gone",
                            entry.customer
                        )));
                    }
                }
                if let Some(a) = self.audit.as_mut() {
                    a.served_from_queue
                        .entry((entry.need, 0))
                        .or_default()
                        .push((entry.enqueued_at, entry.customer));
                }
                self.start_service(k, assignment)
            }
        }
    }

    fn check_occupancy(&mut self) {
        let mut bad = 0;
        let mut seen: HashMap<(CustomerId, bool), u32> = HashMap::new();
        for s in self.dept.staff() {
            let Some(task) = s.current_task else { continue };
            let c = &self.customers[task.customer as usize];
            let state_ok = match task.activity {
                Activity::Help | Activity::Shadow { .. } => c.state == CustomerState::BeingHelped,
                Activity::Payment => c.state == CustomerState::Paying,
                Activity::Refund | Activity::RefundReferral => {
                    c.state == CustomerState::RefundProcessing
                }
            };
            if !state_ok || s.role == StaffRole::SectionManager {
                bad += 1;
            }
            if let Activity::Shadow { expert } = task.activity {
                let host = &self.dept.staff()[expert as usize];
                if host.current_task.map(|t| t.customer) != Some(task.customer) {
                    bad += 1;
                }
                *seen.entry((task.customer, true)).or_default() += 1;
            } else if task.activity != Activity::Refund && task.activity != Activity::RefundReferral {
                *seen.entry((task.customer, false)).or_default() += 1;
            }
        }
        bad += seen.values().filter(|&&n| n > 1).count() as u64;
        if let Some(a) = self.audit.as_mut() {
            a.occupancy_violations += bad;
        }
    }
}
