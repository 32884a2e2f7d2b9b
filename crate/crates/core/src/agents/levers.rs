use serde::{Deserialize, Serialize};

use super::{Staff, StaffRole};
use crate::engine::{RngStream, SimTime};

/// The management practices varied by the experiments.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PracticeLevers {
    /// Probability a cashier decides a refund without calling an expert.
    pub empowerment: f64,
    /// Probability a normal seller stays to watch an expert serve.
    pub empower_to_learn: f64,
    /// Fraction of `knowledge_scale` at which a normal seller becomes an expert.
    pub competence_threshold: f64,
    pub knowledge_scale: u32,
    pub points_per_episode: u32,
}

impl Default for PracticeLevers {
    fn default() -> Self {
        PracticeLevers {
            empowerment: 0.0,
            empower_to_learn: 0.0,
            competence_threshold: 1.0,
            knowledge_scale: 100,
            points_per_episode: 1,
        }
    }
}

impl PracticeLevers {
    pub fn promotion_point(&self) -> u32 {
        (self.competence_threshold * f64::from(self.knowledge_scale)).round() as u32
    }
}

/// Refund acceptance rates by decision maker.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RefundPolicy {
    pub cashier_approval: f64,
    pub expert_approval: f64,
}

impl Default for RefundPolicy {
    fn default() -> Self {
        RefundPolicy {
            cashier_approval: 0.8,
            expert_approval: 0.7,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RefundHandler {
    CashierAutonomous,
    ReferToExpert,
}

pub fn refund_routing(levers: &PracticeLevers, rng: &mut RngStream) -> RefundHandler {
    if rng.chance(levers.empowerment) {
        RefundHandler::CashierAutonomous
    } else {
        RefundHandler::ReferToExpert
    }
}

pub fn refund_decision(handler: RefundHandler, policy: &RefundPolicy, rng: &mut RngStream) -> bool {
    let p = match handler {
        RefundHandler::CashierAutonomous => policy.cashier_approval,
        RefundHandler::ReferToExpert => policy.expert_approval,
    };
    rng.chance(p)
}

/// Whether `normal` stays with `expert` for the whole referral.
pub fn learning_episode(
    normal: &Staff,
    expert: &Staff,
    levers: &PracticeLevers,
    rng: &mut RngStream,
) -> bool {
    debug_assert_eq!(normal.role, StaffRole::NormalSeller);
    debug_assert_eq!(expert.role, StaffRole::ExpertSeller);
    rng.chance(levers.empower_to_learn)
}

/// Promotes a normal seller whose points reached the threshold. Irreversible.
pub fn promotion_check(s: &mut Staff, levers: &PracticeLevers, now: SimTime) -> bool {
    if s.role == StaffRole::NormalSeller && s.knowledge_points >= levers.promotion_point() {
        s.promote(StaffRole::ExpertSeller, now);
        true
    } else {
        false
    }
}
