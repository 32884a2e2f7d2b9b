//! Customer and staff agents.
//!
//! Customers follow a fixed statechart (see [`customer_transition`]); staff
//! are simple busy/idle servers with a role and a knowledge counter that
//! drives promotion from normal seller to expert.

mod customer;
mod levers;
mod staff;

pub use customer::{
    customer_transition, post_browse_branch, Action, Customer, CustomerId, CustomerState, Intent,
    NeedProfile, Outcome, PostBrowse, TransitionEnv, Trigger,
};
pub use levers::{
    learning_episode, promotion_check, refund_decision, refund_routing, PracticeLevers,
    RefundHandler, RefundPolicy,
};
pub use staff::{Activity, Staff, StaffId, StaffRole, Task};

use thiserror::Error;

/// Model bugs. Any of these aborts the replication.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum AgentError {
    #[error("illegal transition: customer {customer} in {state:?} received {trigger:?}")]
    IllegalTransition {
        customer: CustomerId,
        state: CustomerState,
        trigger: Trigger,
    },
    #[error("staff {0} assigned a task while busy")]
    DoubleAssign(StaffId),
    #[error("staff {0} ended a task while idle")]
    EndWhileIdle(StaffId),
    #[error(transparent)]
    Engine(#[from] crate::engine::EngineError),
}
