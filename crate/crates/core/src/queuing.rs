//! Service matchmaking between customers and staff.
//!
//! Customers with the same need share one department-wide FIFO pool. A
//! request is served at once when a qualified member of staff is idle;
//! otherwise it waits until a compatible server is freed or the customer's
//! patience runs out.
//!
//! Help requests always go to a normal seller first when one is idle. If the
//! customer turns out to need an expert, the normal seller calls an idle
//! expert over (and may stay to learn); with no expert idle, the customer is
//! queued for the expert pool and the normal seller goes back to the floor.

use std::collections::{BTreeMap, HashMap, VecDeque};

use serde::{Deserialize, Serialize};

use crate::agents::{
    learning_episode, Activity, AgentError, CustomerId, PracticeLevers, Staff, StaffId, StaffRole,
    Task,
};
use crate::engine::{EventHandle, RngStream, SimTime};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Expertise {
    Normal,
    Expert,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ServiceNeed {
    Help(Expertise),
    Payment,
    Refund,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QueueDiscipline {
    /// Oldest entry among all classes the freed server can handle.
    #[default]
    LongestWaitFirst,
    /// Payment before Refund before Help; FIFO within a class.
    NeedPriority,
}

/// Which idle normal seller picks up a help request.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SellerChoice {
    /// Fewest knowledge points first, then longest idle.
    #[default]
    LeastKnowledge,
    LongestIdle,
}

/// Whether a member of staff in `role` may serve `need` directly.
pub fn qualifies(role: StaffRole, need: ServiceNeed) -> bool {
    matches!(
        (role, need),
        (StaffRole::Cashier, ServiceNeed::Payment | ServiceNeed::Refund)
            | (StaffRole::NormalSeller, ServiceNeed::Help(Expertise::Normal))
            | (StaffRole::ExpertSeller, ServiceNeed::Help(_))
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
enum Class {
    HelpNormal = 0,
    HelpExpert = 1,
    Payment = 2,
    Refund = 3,
}

impl Class {
    fn priority(self) -> u8 {
        match self {
            Class::Payment => 0,
            Class::Refund => 1,
            Class::HelpNormal | Class::HelpExpert => 2,
        }
    }

    fn of(need: ServiceNeed) -> Class {
        match need {
            ServiceNeed::Help(Expertise::Normal) => Class::HelpNormal,
            ServiceNeed::Help(Expertise::Expert) => Class::HelpExpert,
            ServiceNeed::Payment => Class::Payment,
            ServiceNeed::Refund => Class::Refund,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QueueEntry {
    pub customer: CustomerId,
    pub need: ServiceNeed,
    pub enqueued_at: SimTime,
    pub patience_handle: Option<EventHandle>,
}

/// A customer matched with staff.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Assignment {
    pub customer: CustomerId,
    pub need: ServiceNeed,
    pub server: StaffId,
    /// Normal seller shadowing the expert for the whole service.
    pub learner: Option<StaffId>,
}

/// Result of an immediate service attempt.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Attempt {
    Assigned(Assignment),
    /// No qualified server is idle; the customer must queue.
    NoneIdle,
}

/// What a freed member of staff picked up.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Pickup {
    Customer(QueueEntry, Assignment),
    /// An expert answering a cashier's refund referral.
    Referral { cashier: StaffId, customer: CustomerId },
}

#[derive(Debug, Clone, Copy)]
struct Referral {
    cashier: StaffId,
    customer: CustomerId,
}

pub struct Department {
    staff: Vec<Staff>,
    queues: [BTreeMap<u64, QueueEntry>; 4],
    location: HashMap<CustomerId, (Class, u64)>,
    referrals: VecDeque<Referral>,
    next_ticket: u64,
    discipline: QueueDiscipline,
    seller_choice: SellerChoice,
}

impl Department {
    pub fn new(staff: Vec<Staff>, discipline: QueueDiscipline, seller_choice: SellerChoice) -> Self {
        debug_assert!(staff.iter().enumerate().all(|(i, s)| s.id as usize == i));
        Department {
            staff,
            queues: Default::default(),
            location: HashMap::new(),
            referrals: VecDeque::new(),
            next_ticket: 0,
            discipline,
            seller_choice,
        }
    }

    pub fn staff(&self) -> &[Staff] {
        &self.staff
    }

    pub fn staff_mut(&mut self, id: StaffId) -> &mut Staff {
        &mut self.staff[id as usize]
    }

    pub fn queue_len(&self, need: ServiceNeed) -> usize {
        self.queues[Class::of(need) as usize].len()
    }

    pub fn pending_referrals(&self) -> usize {
        self.referrals.len()
    }

    pub fn is_queued(&self, customer: CustomerId) -> bool {
        self.location.contains_key(&customer)
    }

    fn idle_longest(&self, role: StaffRole) -> Option<StaffId> {
        self.staff
            .iter()
            .filter(|s| s.role == role && !s.is_busy())
            .min_by(|a, b| a.idle_since.cmp(&b.idle_since).then(a.id.cmp(&b.id)))
            .map(|s| s.id)
    }

    fn idle_normal(&self) -> Option<StaffId> {
        let idle = self
            .staff
            .iter()
            .filter(|s| s.role == StaffRole::NormalSeller && !s.is_busy());
        match self.seller_choice {
            SellerChoice::LongestIdle => idle
                .min_by(|a, b| a.idle_since.cmp(&b.idle_since).then(a.id.cmp(&b.id)))
                .map(|s| s.id),
            SellerChoice::LeastKnowledge => idle
                .min_by(|a, b| {
                    a.knowledge_points
                        .cmp(&b.knowledge_points)
                        .then(a.idle_since.cmp(&b.idle_since))
                        .then(a.id.cmp(&b.id))
                })
                .map(|s| s.id),
        }
    }

    fn begin(
        &mut self,
        id: StaffId,
        customer: CustomerId,
        activity: Activity,
        now: SimTime,
    ) -> Result<(), AgentError> {
        self.staff[id as usize].begin(Task { customer, activity }, now)
    }

    fn activity_for(need: ServiceNeed) -> Activity {
        match need {
            ServiceNeed::Help(_) => Activity::Help,
            ServiceNeed::Payment => Activity::Payment,
            ServiceNeed::Refund => Activity::Refund,
        }
    }

    /// Tries to serve `need` right away, marking the chosen staff busy.
    pub fn try_assign(
        &mut self,
        customer: CustomerId,
        need: ServiceNeed,
        now: SimTime,
        levers: &PracticeLevers,
        learning: &mut RngStream,
    ) -> Result<Attempt, AgentError> {
        let chosen = match need {
            ServiceNeed::Payment | ServiceNeed::Refund => self
                .idle_longest(StaffRole::Cashier)
                .map(|c| (c, None)),
            ServiceNeed::Help(required) => match self.idle_normal() {
                Some(normal) if required == Expertise::Normal => Some((normal, None)),
                Some(normal) => match self.idle_longest(StaffRole::ExpertSeller) {
                    Some(expert) => {
                        let stays = learning_episode(
                            &self.staff[normal as usize],
                            &self.staff[expert as usize],
                            levers,
                            learning,
                        );
                        Some((expert, stays.then_some(normal)))
                    }
                    None => None,
                },
                None => self.idle_longest(StaffRole::ExpertSeller).map(|e| (e, None)),
            },
        };
        let Some((server, learner)) = chosen else {
            return Ok(Attempt::NoneIdle);
        };
        self.begin(server, customer, Self::activity_for(need), now)?;
        if let Some(l) = learner {
            self.begin(l, customer, Activity::Shadow { expert: server }, now)?;
        }
        Ok(Attempt::Assigned(Assignment {
            customer,
            need,
            server,
            learner,
        }))
    }

    pub fn enqueue(&mut self, entry: QueueEntry) {
        debug_assert!(!self.location.contains_key(&entry.customer), "one live entry");
        let class = Class::of(entry.need);
        let ticket = self.next_ticket;
        self.next_ticket += 1;
        self.queues[class as usize].insert(ticket, entry);
        self.location.insert(entry.customer, (class, ticket));
    }

    /// Removes a waiting customer whose patience ran out.
    pub fn renege(&mut self, customer: CustomerId) -> Option<QueueEntry> {
        let (class, ticket) = self.location.remove(&customer)?;
        self.queues[class as usize].remove(&ticket)
    }

    /// Calls an expert to a cashier's refund. Returns the expert when one is
    /// idle; otherwise the referral waits ahead of all customer queues.
    pub fn request_referral(
        &mut self,
        cashier: StaffId,
        customer: CustomerId,
        now: SimTime,
    ) -> Result<Option<StaffId>, AgentError> {
        match self.idle_longest(StaffRole::ExpertSeller) {
            Some(expert) => {
                self.begin(expert, customer, Activity::RefundReferral, now)?;
                Ok(Some(expert))
            }
            None => {
                self.referrals.push_back(Referral { cashier, customer });
                Ok(None)
            }
        }
    }

    fn head(&self, class: Class) -> Option<(u64, Class)> {
        self.queues[class as usize]
            .keys()
            .next()
            .map(|&ticket| (ticket, class))
    }

    fn pick_class(&self, classes: &[Class]) -> Option<(u64, Class)> {
        match self.discipline {
            QueueDiscipline::LongestWaitFirst => {
                classes.iter().filter_map(|&c| self.head(c)).min()
            }
            QueueDiscipline::NeedPriority => classes
                .iter()
                .filter_map(|&c| self.head(c).map(|h| (c.priority(), h)))
                .min()
                .map(|(_, h)| h),
        }
    }

    /// Hands the next compatible piece of work to an idle member of staff.
    pub fn on_staff_freed(&mut self, id: StaffId, now: SimTime) -> Result<Option<Pickup>, AgentError> {
        let role = self.staff[id as usize].role;
        if self.staff[id as usize].is_busy() {
            return Ok(None);
        }
        let classes: &[Class] = match role {
            StaffRole::Cashier => &[Class::Payment, Class::Refund],
            StaffRole::NormalSeller => &[Class::HelpNormal],
            StaffRole::ExpertSeller => {
                if let Some(r) = self.referrals.pop_front() {
                    self.begin(id, r.customer, Activity::RefundReferral, now)?;
                    return Ok(Some(Pickup::Referral {
                        cashier: r.cashier,
                        customer: r.customer,
                    }));
                }
                &[Class::HelpNormal, Class::HelpExpert]
            }
            StaffRole::SectionManager => return Ok(None),
        };
        let Some((ticket, class)) = self.pick_class(classes) else {
            return Ok(None);
        };
        let entry = self.queues[class as usize]
            .remove(&ticket)
            .expect("head exists");
        self.location.remove(&entry.customer);
        self.begin(id, entry.customer, Self::activity_for(entry.need), now)?;
        Ok(Some(Pickup::Customer(
            entry,
            Assignment {
                customer: entry.customer,
                need: entry.need,
                server: id,
                learner: None,
            },
        )))
    }
}
