use serde::{Deserialize, Serialize};

use super::AgentError;
use crate::engine::{Dist, RngStream, SimTime};
use crate::metrics::MetricKind;
use crate::queuing::{Expertise, ServiceNeed};

pub type CustomerId = u32;

/// How a customer left the department.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Outcome {
    Purchased,
    NoPurchase,
    RenegedHelp,
    RenegedTill,
    RenegedRefund,
    RefundDone,
}

impl Outcome {
    pub const ALL: [Outcome; 6] = [
        Outcome::Purchased,
        Outcome::NoPurchase,
        Outcome::RenegedHelp,
        Outcome::RenegedTill,
        Outcome::RenegedRefund,
        Outcome::RefundDone,
    ];

    pub fn index(self) -> usize {
        self as usize
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CustomerState {
    Contemplating,
    Browsing,
    SeekingHelp,
    WaitingForHelp,
    BeingHelped,
    QueueingAtTill,
    Paying,
    SeekingRefund,
    WaitingForRefund,
    RefundProcessing,
    Left(Outcome),
}

impl CustomerState {
    pub const ACTIVE: [CustomerState; 10] = [
        CustomerState::Contemplating,
        CustomerState::Browsing,
        CustomerState::SeekingHelp,
        CustomerState::WaitingForHelp,
        CustomerState::BeingHelped,
        CustomerState::QueueingAtTill,
        CustomerState::Paying,
        CustomerState::SeekingRefund,
        CustomerState::WaitingForRefund,
        CustomerState::RefundProcessing,
    ];
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Trigger {
    Entered,
    BrowseDone,
    /// No qualified staff was free; the customer now waits in a queue.
    Queued,
    HelpAssigned,
    ServiceDone,
    PatienceExpired,
    TillAssigned,
    PaymentDone,
    RefundAssigned,
    RefundResolved { approved: bool },
}

impl Trigger {
    pub const ALL: [Trigger; 11] = [
        Trigger::Entered,
        Trigger::BrowseDone,
        Trigger::Queued,
        Trigger::HelpAssigned,
        Trigger::ServiceDone,
        Trigger::PatienceExpired,
        Trigger::TillAssigned,
        Trigger::PaymentDone,
        Trigger::RefundAssigned,
        Trigger::RefundResolved { approved: true },
        Trigger::RefundResolved { approved: false },
    ];
}

/// Why the customer came in.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Intent {
    Shop,
    Refund,
}

/// Behavioural probabilities of a customer.
///
/// `p_help + p_direct_till + p_leave_after_browse` must be 1.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NeedProfile {
    pub p_help: f64,
    pub p_direct_till: f64,
    pub p_leave_after_browse: f64,
    pub p_rebrowse_while_waiting: f64,
    pub p_refund_visit: f64,
    pub p_purchase_after_help: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PostBrowse {
    SeekHelp,
    GoToTill,
    Leave,
}

#[derive(Debug, Clone)]
pub struct Customer {
    pub id: CustomerId,
    pub state: CustomerState,
    pub intent: Intent,
    pub entered_at: SimTime,
    pub help_patience: f64,
    pub till_patience: f64,
    pub refund_patience: f64,
    pub need_profile: NeedProfile,
    pub required_expertise: Expertise,
    pub item_value: f64,
    /// Set while the customer holds a live queue entry at the till.
    pub waiting_at_till: bool,
}

impl Customer {
    pub fn patience_for(&self, need: ServiceNeed) -> f64 {
        match need {
            ServiceNeed::Help(_) => self.help_patience,
            ServiceNeed::Payment => self.till_patience,
            ServiceNeed::Refund => self.refund_patience,
        }
    }

    pub fn has_left(&self) -> bool {
        matches!(self.state, CustomerState::Left(_))
    }
}

/// Commands emitted by a transition, executed by the replication driver.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Action {
    ScheduleBrowseDone { delay: f64 },
    Request(ServiceNeed),
    Record(MetricKind),
    Depart(Outcome),
}

/// Random sources and parameters a transition may consult.
pub struct TransitionEnv<'a> {
    pub branching: &'a mut RngStream,
    pub browsing: &'a mut RngStream,
    pub browse_time: &'a Dist,
}

pub fn post_browse_branch(profile: &NeedProfile, rng: &mut RngStream) -> PostBrowse {
    let u = rng.unit();
    if u < profile.p_help {
        PostBrowse::SeekHelp
    } else if u < profile.p_help + profile.p_direct_till {
        PostBrowse::GoToTill
    } else {
        PostBrowse::Leave
    }
}

/// Applies `trigger` to the customer statechart.
///
/// Edge set (anything else is [`AgentError::IllegalTransition`]):
///
/// | state            | trigger          | next                                   |
/// |------------------|------------------|----------------------------------------|
/// | Contemplating    | Entered          | Browsing, or SeekingRefund for refunds |
/// | Browsing         | BrowseDone       | SeekingHelp / QueueingAtTill / Left    |
/// | SeekingHelp      | HelpAssigned     | BeingHelped                            |
/// | SeekingHelp      | Queued           | WaitingForHelp                         |
/// | WaitingForHelp   | HelpAssigned     | BeingHelped                            |
/// | WaitingForHelp   | PatienceExpired  | Browsing or Left(RenegedHelp)          |
/// | BeingHelped      | ServiceDone      | QueueingAtTill or Left(NoPurchase)     |
/// | QueueingAtTill   | TillAssigned     | Paying                                 |
/// | QueueingAtTill   | Queued           | QueueingAtTill (not yet waiting only)  |
/// | QueueingAtTill   | PatienceExpired  | Browsing or Left(RenegedTill) (waiting)|
/// | Paying           | PaymentDone      | Left(Purchased)                        |
/// | SeekingRefund    | RefundAssigned   | RefundProcessing                       |
/// | SeekingRefund    | Queued           | WaitingForRefund                       |
/// | WaitingForRefund | RefundAssigned   | RefundProcessing                       |
/// | WaitingForRefund | PatienceExpired  | Left(RenegedRefund)                    |
/// | RefundProcessing | RefundResolved   | Left(RefundDone)                       |
pub fn customer_transition(
    c: &mut Customer,
    trigger: Trigger,
    env: &mut TransitionEnv<'_>,
) -> Result<Vec<Action>, AgentError> {
    use CustomerState as S;
    use Trigger as T;

    let illegal = |c: &Customer| AgentError::IllegalTransition {
        customer: c.id,
        state: c.state,
        trigger,
    };

    let mut actions = Vec::with_capacity(3);
    let next = match (c.state, trigger) {
        (S::Contemplating, T::Entered) => match c.intent {
            Intent::Refund => {
                actions.push(Action::Request(ServiceNeed::Refund));
                S::SeekingRefund
            }
            Intent::Shop => {
                let delay = env.browsing.sample(env.browse_time)?;
                actions.push(Action::ScheduleBrowseDone { delay });
                S::Browsing
            }
        },
        (S::Browsing, T::BrowseDone) => match post_browse_branch(&c.need_profile, env.branching) {
            PostBrowse::SeekHelp => {
                actions.push(Action::Request(ServiceNeed::Help(c.required_expertise)));
                S::SeekingHelp
            }
            PostBrowse::GoToTill => {
                actions.push(Action::Request(ServiceNeed::Payment));
                S::QueueingAtTill
            }
            PostBrowse::Leave => {
                actions.push(Action::Depart(Outcome::NoPurchase));
                S::Left(Outcome::NoPurchase)
            }
        },
        (S::SeekingHelp, T::HelpAssigned) => {
            actions.push(Action::Record(MetricKind::ServedImmediately));
            S::BeingHelped
        }
        (S::SeekingHelp, T::Queued) => S::WaitingForHelp,
        (S::WaitingForHelp, T::HelpAssigned) => {
            actions.push(Action::Record(MetricKind::ServedAfterWait));
            S::BeingHelped
        }
        (S::WaitingForHelp, T::PatienceExpired) => {
            actions.push(Action::Record(MetricKind::LeftQueue));
            rebrowse_or_leave(c, env, Outcome::RenegedHelp, &mut actions)?
        }
        (S::BeingHelped, T::ServiceDone) => {
            if env.branching.chance(c.need_profile.p_purchase_after_help) {
                actions.push(Action::Request(ServiceNeed::Payment));
                S::QueueingAtTill
            } else {
                actions.push(Action::Depart(Outcome::NoPurchase));
                S::Left(Outcome::NoPurchase)
            }
        }
        (S::QueueingAtTill, T::TillAssigned) => {
            let kind = if c.waiting_at_till {
                MetricKind::ServedAfterWait
            } else {
                MetricKind::ServedImmediately
            };
            c.waiting_at_till = false;
            actions.push(Action::Record(kind));
            S::Paying
        }
        (S::QueueingAtTill, T::Queued) if !c.waiting_at_till => {
            c.waiting_at_till = true;
            S::QueueingAtTill
        }
        (S::QueueingAtTill, T::PatienceExpired) if c.waiting_at_till => {
            c.waiting_at_till = false;
            actions.push(Action::Record(MetricKind::LeftQueue));
            rebrowse_or_leave(c, env, Outcome::RenegedTill, &mut actions)?
        }
        (S::Paying, T::PaymentDone) => {
            actions.push(Action::Record(MetricKind::PurchaseCompleted));
            actions.push(Action::Depart(Outcome::Purchased));
            S::Left(Outcome::Purchased)
        }
        (S::SeekingRefund, T::RefundAssigned) => {
            actions.push(Action::Record(MetricKind::ServedImmediately));
            S::RefundProcessing
        }
        (S::SeekingRefund, T::Queued) => S::WaitingForRefund,
        (S::WaitingForRefund, T::RefundAssigned) => {
            actions.push(Action::Record(MetricKind::ServedAfterWait));
            S::RefundProcessing
        }
        (S::WaitingForRefund, T::PatienceExpired) => {
            actions.push(Action::Record(MetricKind::LeftQueue));
            actions.push(Action::Depart(Outcome::RenegedRefund));
            S::Left(Outcome::RenegedRefund)
        }
        (S::RefundProcessing, T::RefundResolved { approved }) => {
            actions.push(Action::Record(if approved {
                MetricKind::RefundGranted
            } else {
                MetricKind::RefundDenied
            }));
            actions.push(Action::Depart(Outcome::RefundDone));
            S::Left(Outcome::RefundDone)
        }
        _ => return Err(illegal(c)),
    };
    c.state = next;
    Ok(actions)
}

fn rebrowse_or_leave(
    c: &Customer,
    env: &mut TransitionEnv<'_>,
    outcome: Outcome,
    actions: &mut Vec<Action>,
) -> Result<CustomerState, AgentError> {
    if env.branching.chance(c.need_profile.p_rebrowse_while_waiting) {
        let delay = env.browsing.sample(env.browse_time)?;
        actions.push(Action::ScheduleBrowseDone { delay });
        Ok(CustomerState::Browsing)
    } else {
        actions.push(Action::Depart(outcome));
        Ok(CustomerState::Left(outcome))
    }
}
