//! Outcome measures: transactions, the weighted satisfaction index, refund
//! satisfaction, utilisation and end-of-run expertise.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::agents::{Outcome, Staff, StaffRole};
use crate::engine::SimTime;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MetricsError {
    #[error("unknown metric kind `{0}`")]
    UnknownKind(String),
    #[error("no staff in class {0:?}")]
    EmptyClass(StaffRole),
    #[error("scheduled minutes must be positive, got {0}")]
    NoScheduledTime(f64),
}

/// Customer-experience events that carry a satisfaction weight.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MetricKind {
    ServedImmediately,
    ServedAfterWait,
    LeftQueue,
    PurchaseCompleted,
    RefundGranted,
    RefundDenied,
    RefundReferredWait,
}

impl MetricKind {
    pub const ALL: [MetricKind; 7] = [
        MetricKind::ServedImmediately,
        MetricKind::ServedAfterWait,
        MetricKind::LeftQueue,
        MetricKind::PurchaseCompleted,
        MetricKind::RefundGranted,
        MetricKind::RefundDenied,
        MetricKind::RefundReferredWait,
    ];

    pub fn is_refund(self) -> bool {
        matches!(
            self,
            MetricKind::RefundGranted | MetricKind::RefundDenied | MetricKind::RefundReferredWait
        )
    }

    pub fn name(self) -> &'static str {
        match self {
            MetricKind::ServedImmediately => "served_immediately",
            MetricKind::ServedAfterWait => "served_after_wait",
            MetricKind::LeftQueue => "left_queue",
            MetricKind::PurchaseCompleted => "purchase_completed",
            MetricKind::RefundGranted => "refund_granted",
            MetricKind::RefundDenied => "refund_denied",
            MetricKind::RefundReferredWait => "refund_referred_wait",
        }
    }

    fn index(self) -> usize {
        self as usize
    }
}

impl fmt::Display for MetricKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for MetricKind {
    type Err = MetricsError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        MetricKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| MetricsError::UnknownKind(s.to_owned()))
    }
}

/// Signed weight per event kind; the satisfaction index is their sum.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SatisfactionWeights {
    pub served_immediately: f64,
    pub served_after_wait: f64,
    pub left_queue: f64,
    pub purchase_completed: f64,
    pub refund_granted: f64,
    pub refund_denied: f64,
    pub refund_referred_wait: f64,
}

impl Default for SatisfactionWeights {
    fn default() -> Self {
        SatisfactionWeights {
            served_immediately: 2.0,
            served_after_wait: 1.0,
            left_queue: -3.0,
            purchase_completed: 1.0,
            refund_granted: 3.0,
            refund_denied: -4.0,
            refund_referred_wait: -1.0,
        }
    }
}

impl SatisfactionWeights {
    pub fn zero() -> Self {
        SatisfactionWeights {
            served_immediately: 0.0,
            served_after_wait: 0.0,
            left_queue: 0.0,
            purchase_completed: 0.0,
            refund_granted: 0.0,
            refund_denied: 0.0,
            refund_referred_wait: 0.0,
        }
    }

    pub fn weight(&self, kind: MetricKind) -> f64 {
        match kind {
            MetricKind::ServedImmediately => self.served_immediately,
            MetricKind::ServedAfterWait => self.served_after_wait,
            MetricKind::LeftQueue => self.left_queue,
            MetricKind::PurchaseCompleted => self.purchase_completed,
            MetricKind::RefundGranted => self.refund_granted,
            MetricKind::RefundDenied => self.refund_denied,
            MetricKind::RefundReferredWait => self.refund_referred_wait,
        }
    }

    pub fn validate(&self) -> Result<(), String> {
        for k in MetricKind::ALL {
            if !self.weight(k).is_finite() {
                return Err(format!("weights.{k} must be finite"));
            }
        }
        if MetricKind::ALL.iter().all(|&k| self.weight(k) >= 0.0)
            && MetricKind::ALL.iter().any(|&k| self.weight(k) != 0.0)
        {
            return Err("weights need at least one negative kind".into());
        }
        Ok(())
    }
}

/// Running totals for one replication.
#[derive(Debug, Clone)]
pub struct MetricsLedger {
    weights: SatisfactionWeights,
    counts: [u64; 7],
    pub overall_satisfaction: f64,
    pub refund_satisfaction: f64,
    pub transactions: u64,
    pub entered: u64,
    left: [u64; 6],
    pub sales_value: f64,
}

impl MetricsLedger {
    pub fn new(weights: SatisfactionWeights) -> Self {
        MetricsLedger {
            weights,
            counts: [0; 7],
            overall_satisfaction: 0.0,
            refund_satisfaction: 0.0,
            transactions: 0,
            entered: 0,
            left: [0; 6],
            sales_value: 0.0,
        }
    }

    pub fn record(&mut self, kind: MetricKind) {
        let w = self.weights.weight(kind);
        self.counts[kind.index()] += 1;
        self.overall_satisfaction += w;
        if kind.is_refund() {
            self.refund_satisfaction += w;
        }
    }

    /// Records an event by name, e.g. from a log replay.
    pub fn record_named(&mut self, kind: &str) -> Result<(), MetricsError> {
        self.record(kind.parse()?);
        Ok(())
    }

    pub fn count(&self, kind: MetricKind) -> u64 {
        self.counts[kind.index()]
    }

    pub fn record_entry(&mut self) {
        self.entered += 1;
    }

    pub fn record_exit(&mut self, outcome: Outcome) {
        self.left[outcome.index()] += 1;
    }

    pub fn exits(&self, outcome: Outcome) -> u64 {
        self.left[outcome.index()]
    }

    pub fn total_exits(&self) -> u64 {
        self.left.iter().sum()
    }

    pub fn weights(&self) -> &SatisfactionWeights {
        &self.weights
    }

    /// Satisfaction recomputed from the per-kind counters.
    pub fn recomputed(&self) -> (f64, f64) {
        let mut overall = 0.0;
        let mut refund = 0.0;
        for k in MetricKind::ALL {
            let part = self.count(k) as f64 * self.weights.weight(k);
            overall += part;
            if k.is_refund() {
                refund += part;
            }
        }
        (overall, refund)
    }
}

/// Busy fraction of the staff currently in `role`.
///
/// Staff who were promoted into `role` count only from their promotion on,
/// so the figure is busy minutes in the role over minutes held in the role,
/// pooled across the class. Without promotions this is the plain mean of
/// `busy / scheduled`.
pub fn utilization(
    staff: &[Staff],
    role: StaffRole,
    scheduled_minutes: f64,
    now: SimTime,
) -> Result<f64, MetricsError> {
    // Also rejects NaN.
    if scheduled_minutes.partial_cmp(&0.0) != Some(std::cmp::Ordering::Greater) {
        return Err(MetricsError::NoScheduledTime(scheduled_minutes));
    }
    let members: Vec<&Staff> = staff.iter().filter(|s| s.role == role).collect();
    if members.is_empty() {
        return Err(MetricsError::EmptyClass(role));
    }
    let (busy, held) = members.iter().fold((0.0, 0.0), |(b, h), s| {
        let (sb, sh) = s.role_account(now, scheduled_minutes);
        (b + sb, h + sh)
    });
    Ok(if held > 0.0 { busy / held } else { 0.0 })
}

/// End-of-run outcome vector for one replication.
///
/// Fields about normal sellers are `None` once every normal seller has been
/// promoted.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Outcomes {
    pub transactions: u64,
    pub overall_satisfaction: f64,
    pub refund_satisfaction: f64,
    pub mean_normal_expertise: Option<f64>,
    pub normal_utilization: Option<f64>,
    pub expert_utilization: Option<f64>,
    pub cashier_utilization: Option<f64>,
    pub normal_sellers_left: u32,
    pub customers_entered: u64,
    pub reneged_help: u64,
    pub reneged_till: u64,
    pub reneged_refund: u64,
    pub refunds_granted: u64,
    pub refunds_denied: u64,
    pub sales_value: f64,
}

pub fn finalize(ledger: &MetricsLedger, staff: &[Staff], scheduled_minutes: f64, now: SimTime) -> Outcomes {
    let util = |role| utilization(staff, role, scheduled_minutes, now).ok();
    let normals: Vec<&Staff> = staff
        .iter()
        .filter(|s| s.role == StaffRole::NormalSeller)
        .collect();
    let mean_normal_expertise = (!normals.is_empty()).then(|| {
        normals
            .iter()
            .map(|s| f64::from(s.knowledge_points))
            .sum::<f64>()
            / normals.len() as f64
    });
    Outcomes {
        transactions: ledger.transactions,
        overall_satisfaction: ledger.overall_satisfaction,
        refund_satisfaction: ledger.refund_satisfaction,
        mean_normal_expertise,
        normal_utilization: util(StaffRole::NormalSeller),
        expert_utilization: util(StaffRole::ExpertSeller),
        cashier_utilization: util(StaffRole::Cashier),
        normal_sellers_left: normals.len() as u32,
        customers_entered: ledger.entered,
        reneged_help: ledger.exits(Outcome::RenegedHelp),
        reneged_till: ledger.exits(Outcome::RenegedTill),
        reneged_refund: ledger.exits(Outcome::RenegedRefund),
        refunds_granted: ledger.count(MetricKind::RefundGranted),
        refunds_denied: ledger.count(MetricKind::RefundDenied),
        sales_value: ledger.sales_value,
    }
}

/// Named columns of [`Outcomes`], in CSV order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutcomeVar {
    Transactions,
    OverallSatisfaction,
    RefundSatisfaction,
    MeanNormalExpertise,
    NormalUtilization,
    ExpertUtilization,
    CashierUtilization,
    NormalSellersLeft,
    CustomersEntered,
    RenegedHelp,
    RenegedTill,
    RenegedRefund,
    RefundsGranted,
    RefundsDenied,
    SalesValue,
}

impl OutcomeVar {
    pub const ALL: [OutcomeVar; 15] = [
        OutcomeVar::Transactions,
        OutcomeVar::OverallSatisfaction,
        OutcomeVar::RefundSatisfaction,
        OutcomeVar::MeanNormalExpertise,
        OutcomeVar::NormalUtilization,
        OutcomeVar::ExpertUtilization,
        OutcomeVar::CashierUtilization,
        OutcomeVar::NormalSellersLeft,
        OutcomeVar::CustomersEntered,
        OutcomeVar::RenegedHelp,
        OutcomeVar::RenegedTill,
        OutcomeVar::RenegedRefund,
        OutcomeVar::RefundsGranted,
        OutcomeVar::RefundsDenied,
        OutcomeVar::SalesValue,
    ];

    pub fn name(self) -> &'static str {
        match self {
            OutcomeVar::Transactions => "transactions",
            OutcomeVar::OverallSatisfaction => "overall_satisfaction",
            OutcomeVar::RefundSatisfaction => "refund_satisfaction",
            OutcomeVar::MeanNormalExpertise => "mean_normal_expertise",
            OutcomeVar::NormalUtilization => "normal_utilization",
            OutcomeVar::ExpertUtilization => "expert_utilization",
            OutcomeVar::CashierUtilization => "cashier_utilization",
            OutcomeVar::NormalSellersLeft => "normal_sellers_left",
            OutcomeVar::CustomersEntered => "customers_entered",
            OutcomeVar::RenegedHelp => "reneged_help",
            OutcomeVar::RenegedTill => "reneged_till",
            OutcomeVar::RenegedRefund => "reneged_refund",
            OutcomeVar::RefundsGranted => "refunds_granted",
            OutcomeVar::RefundsDenied => "refunds_denied",
            OutcomeVar::SalesValue => "sales_value",
        }
    }

    /// Value of this column; `None` when the staff class is empty.
    pub fn get(self, o: &Outcomes) -> Option<f64> {
        match self {
            OutcomeVar::Transactions => Some(o.transactions as f64),
            OutcomeVar::OverallSatisfaction => Some(o.overall_satisfaction),
            OutcomeVar::RefundSatisfaction => Some(o.refund_satisfaction),
            OutcomeVar::MeanNormalExpertise => o.mean_normal_expertise,
            OutcomeVar::NormalUtilization => o.normal_utilization,
            OutcomeVar::ExpertUtilization => o.expert_utilization,
            OutcomeVar::CashierUtilization => o.cashier_utilization,
            OutcomeVar::NormalSellersLeft => Some(f64::from(o.normal_sellers_left)),
            OutcomeVar::CustomersEntered => Some(o.customers_entered as f64),
            OutcomeVar::RenegedHelp => Some(o.reneged_help as f64),
            OutcomeVar::RenegedTill => Some(o.reneged_till as f64),
            OutcomeVar::RenegedRefund => Some(o.reneged_refund as f64),
            OutcomeVar::RefundsGranted => Some(o.refunds_granted as f64),
            OutcomeVar::RefundsDenied => Some(o.refunds_denied as f64),
            OutcomeVar::SalesValue => Some(o.sales_value),
        }
    }
}

impl fmt::Display for OutcomeVar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for OutcomeVar {
    type Err = MetricsError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        OutcomeVar::ALL
            .into_iter()
            .find(|v| v.name() == s)
            .ok_or_else(|| MetricsError::UnknownKind(s.to_string()))
    }
}
