use serde::{Deserialize, Serialize};

use super::{AgentError, CustomerId};
use crate::engine::SimTime;

pub type StaffId = u32;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum StaffRole {
    Cashier,
    NormalSeller,
    ExpertSeller,
    /// Roster entry only; never matched to a customer.
    SectionManager,
}

impl StaffRole {
    pub fn is_seller(self) -> bool {
        matches!(self, StaffRole::NormalSeller | StaffRole::ExpertSeller)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Activity {
    Help,
    Payment,
    Refund,
    /// Expert called over by a cashier to decide a refund.
    RefundReferral,
    /// Normal seller staying with an expert to learn.
    Shadow { expert: StaffId },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Task {
    pub customer: CustomerId,
    pub activity: Activity,
}

#[derive(Debug, Clone)]
pub struct Staff {
    pub id: StaffId,
    pub role: StaffRole,
    pub knowledge_points: u32,
    pub busy_minutes: f64,
    pub current_task: Option<Task>,
    busy_since: SimTime,
    /// When the staff member last became idle; used for longest-idle choice.
    pub idle_since: SimTime,
    pub promoted_at: Option<SimTime>,
    /// Busy minutes accrued before promotion, in the previous role.
    pub busy_before_promotion: f64,
    pub tasks_completed: u64,
}

impl Staff {
    pub fn new(id: StaffId, role: StaffRole) -> Self {
        Staff {
            id,
            role,
            knowledge_points: 0,
            busy_minutes: 0.0,
            current_task: None,
            busy_since: SimTime::ZERO,
            idle_since: SimTime::ZERO,
            promoted_at: None,
            busy_before_promotion: 0.0,
            tasks_completed: 0,
        }
    }

    pub fn is_busy(&self) -> bool {
        self.current_task.is_some()
    }

    pub fn begin(&mut self, task: Task, now: SimTime) -> Result<(), AgentError> {
        if self.current_task.is_some() {
            return Err(AgentError::DoubleAssign(self.id));
        }
        self.current_task = Some(task);
        self.busy_since = now;
        Ok(())
    }

    pub fn end(&mut self, now: SimTime) -> Result<Task, AgentError> {
        let task = self
            .current_task
            .take()
            .ok_or(AgentError::EndWhileIdle(self.id))?;
        self.busy_minutes += now.since(self.busy_since);
        self.idle_since = now;
        self.tasks_completed += 1;
        Ok(task)
    }

    /// Moves the staff member into `role`, closing the busy-time account of
    /// the old role.
    pub fn promote(&mut self, role: StaffRole, now: SimTime) {
        self.busy_before_promotion = self.busy_minutes_at(now);
        self.role = role;
        self.promoted_at = Some(now);
    }

    /// Busy minutes and minutes in the current role up to `until`.
    pub fn role_account(&self, now: SimTime, until: f64) -> (f64, f64) {
        let busy = self.busy_minutes_at(now) - self.busy_before_promotion;
        let held = until - self.promoted_at.map_or(0.0, SimTime::minutes);
        (busy, held.max(0.0))
    }

    /// Busy minutes including any task still open at `now`.
    pub fn busy_minutes_at(&self, now: SimTime) -> f64 {
        match self.current_task {
            Some(_) => self.busy_minutes + now.since(self.busy_since),
            None => self.busy_minutes,
        }
    }
}
