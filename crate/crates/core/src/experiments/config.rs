use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::agents::{NeedProfile, PracticeLevers, RefundPolicy};
use crate::engine::Dist;
use crate::metrics::SatisfactionWeights;
use crate::queuing::{QueueDiscipline, SellerChoice};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConfigError {
    #[error("invalid `{field}`: {reason}")]
    Invalid { field: String, reason: String },
    #[error("config parse error: {0}")]
    Parse(String),
    #[error("override `{0}` must look like key.path=value")]
    BadOverride(String),
    #[error("unknown config key `{0}`")]
    UnknownKey(String),
}

fn invalid(field: &str, reason: impl Into<String>) -> ConfigError {
    ConfigError::Invalid {
        field: field.to_owned(),
        reason: reason.into(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Staffing {
    pub cashiers: u32,
    pub normal_sellers: u32,
    pub expert_sellers: u32,
    pub section_managers: u32,
}

impl Default for Staffing {
    fn default() -> Self {
        Staffing {
            cashiers: 3,
            normal_sellers: 7,
            expert_sellers: 2,
            section_managers: 1,
        }
    }
}

/// Opening calendar; the run covers only open time, back to back.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Calendar {
    pub weeks: f64,
    pub days_per_week: u32,
    pub hours_per_day: f64,
}

impl Default for Calendar {
    fn default() -> Self {
        Calendar {
            weeks: 10.0,
            days_per_week: 7,
            hours_per_day: 8.0,
        }
    }
}

impl Calendar {
    pub fn horizon_minutes(&self) -> f64 {
        self.weeks * f64::from(self.days_per_week) * self.hours_per_day * 60.0
    }

    pub fn day_minutes(&self) -> f64 {
        self.hours_per_day * 60.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DepartmentKind {
    /// Womenswear: help is asked for when the customer knows what they want.
    Womenswear,
    /// Audio & TV: help is asked for when the customer does not.
    AudioTv,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DepartmentProfile {
    pub kind: DepartmentKind,
    pub p_help: f64,
    pub p_direct_till: f64,
    pub p_leave_after_browse: f64,
    pub p_purchase_after_help: f64,
    pub help_service: Dist,
    pub item_value: Dist,
}

impl DepartmentProfile {
    pub fn womenswear() -> Self {
        DepartmentProfile {
            kind: DepartmentKind::Womenswear,
            p_help: 0.25,
            p_direct_till: 0.55,
            p_leave_after_browse: 0.20,
            p_purchase_after_help: 0.6,
            help_service: Dist::Triangular { low: 1.0, mode: 2.0, high: 5.0 },
            item_value: Dist::Triangular { low: 10.0, mode: 30.0, high: 120.0 },
        }
    }

    pub fn audio_tv() -> Self {
        DepartmentProfile {
            kind: DepartmentKind::AudioTv,
            p_help: 0.55,
            p_direct_till: 0.25,
            p_leave_after_browse: 0.20,
            p_purchase_after_help: 0.6,
            help_service: Dist::Triangular { low: 4.0, mode: 12.5, high: 31.0 },
            item_value: Dist::Triangular { low: 20.0, mode: 150.0, high: 900.0 },
        }
    }

    pub fn preset(kind: DepartmentKind) -> Self {
        match kind {
            DepartmentKind::Womenswear => Self::womenswear(),
            DepartmentKind::AudioTv => Self::audio_tv(),
        }
    }
}

impl Default for DepartmentProfile {
    fn default() -> Self {
        Self::audio_tv()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CustomerParams {
    pub p_refund_visit: f64,
    /// Fraction of help requests that only an expert can satisfy.
    pub p_expert_need: f64,
    pub p_rebrowse_while_waiting: f64,
    pub browse_time: Dist,
    pub patience: Dist,
}

impl Default for CustomerParams {
    fn default() -> Self {
        CustomerParams {
            p_refund_visit: 0.05,
            p_expert_need: 0.45,
            p_rebrowse_while_waiting: 0.2,
            browse_time: Dist::Triangular { low: 1.0, mode: 5.0, high: 15.0 },
            patience: Dist::Exponential { mean: 8.0 },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TillParams {
    pub payment_time: Dist,
    /// Cashier deciding a refund alone.
    pub cashier_refund_time: Dist,
    /// Expert deciding a referred refund; the cashier stays occupied.
    pub expert_refund_time: Dist,
    pub refund_policy: RefundPolicy,
}

impl Default for TillParams {
    fn default() -> Self {
        TillParams {
            payment_time: Dist::Triangular { low: 2.0, mode: 4.0, high: 10.0 },
            cashier_refund_time: Dist::Triangular { low: 4.0, mode: 9.0, high: 18.0 },
            expert_refund_time: Dist::Triangular { low: 2.0, mode: 3.0, high: 6.0 },
            refund_policy: RefundPolicy::default(),
        }
    }
}

/// One experimental condition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioConfig {
    pub staffing: Staffing,
    pub arrival_rate_per_hour: f64,
    pub calendar: Calendar,
    pub department: DepartmentProfile,
    pub customers: CustomerParams,
    pub till: TillParams,
    pub levers: PracticeLevers,
    pub weights: SatisfactionWeights,
    pub discipline: QueueDiscipline,
    pub seller_choice: SellerChoice,
    pub master_seed: u64,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        ScenarioConfig {
            staffing: Staffing::default(),
            arrival_rate_per_hour: 70.0,
            calendar: Calendar::default(),
            department: DepartmentProfile::default(),
            customers: CustomerParams::default(),
            till: TillParams::default(),
            levers: PracticeLevers::default(),
            weights: SatisfactionWeights::default(),
            discipline: QueueDiscipline::default(),
            seller_choice: SellerChoice::default(),
            master_seed: 20_080_101,
        }
    }
}

fn prob(field: &str, p: f64) -> Result<(), ConfigError> {
    if (0.0..=1.0).contains(&p) {
        Ok(())
    } else {
        Err(invalid(field, format!("probability {p} outside [0, 1]")))
    }
}

fn duration(field: &str, d: &Dist, allow_infinite: bool) -> Result<(), ConfigError> {
    d.validate().map_err(|e| invalid(field, e.to_string()))?;
    if !d.is_non_negative() {
        return Err(invalid(field, "durations must be non-negative"));
    }
    if matches!(d, Dist::Bernoulli { .. }) {
        return Err(invalid(field, "a Bernoulli draw is not a duration"));
    }
    if !allow_infinite && !d.mean().is_finite() {
        return Err(invalid(field, "must be finite"));
    }
    Ok(())
}

impl ScenarioConfig {
    pub fn from_json(text: &str) -> Result<Self, ConfigError> {
        let cfg: ScenarioConfig =
            serde_json::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_json_pretty(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    /// Canonical JSON: object keys sorted, no whitespace.
    pub fn canonical_json(&self) -> String {
        let value = serde_json::to_value(self).expect("config serializes");
        serde_json::to_string(&value).expect("value serializes")
    }

    /// SHA-256 of the canonical JSON, hex encoded.
    pub fn digest(&self) -> String {
        let hash = Sha256::digest(self.canonical_json().as_bytes());
        hash.iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn horizon_minutes(&self) -> f64 {
        self.calendar.horizon_minutes()
    }

    pub fn need_profile(&self) -> NeedProfile {
        NeedProfile {
            p_help: self.department.p_help,
            p_direct_till: self.department.p_direct_till,
            p_leave_after_browse: self.department.p_leave_after_browse,
            p_rebrowse_while_waiting: self.customers.p_rebrowse_while_waiting,
            p_refund_visit: self.customers.p_refund_visit,
            p_purchase_after_help: self.department.p_purchase_after_help,
        }
    }

    /// Applies `a.b.c=value` overrides. Values parse as JSON, falling back to
    /// a plain string. Unknown keys are rejected.
    pub fn with_overrides<S: AsRef<str>>(&self, overrides: &[S]) -> Result<Self, ConfigError> {
        let mut value = serde_json::to_value(self).expect("config serializes");
        for raw in overrides {
            let raw = raw.as_ref();
            let (path, val) = raw
                .split_once('=')
                .ok_or_else(|| ConfigError::BadOverride(raw.to_owned()))?;
            let parsed: serde_json::Value = serde_json::from_str(val)
                .unwrap_or_else(|_| serde_json::Value::String(val.to_owned()));
            let mut slot = &mut value;
            for key in path.split('.') {
                slot = slot
                    .as_object_mut()
                    .and_then(|m| m.get_mut(key))
                    .ok_or_else(|| ConfigError::UnknownKey(path.to_owned()))?;
            }
            *slot = parsed;
        }
        let cfg: ScenarioConfig =
            serde_json::from_value(value).map_err(|e| ConfigError::Parse(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if !(self.arrival_rate_per_hour > 0.0 && self.arrival_rate_per_hour.is_finite()) {
            return Err(invalid("arrival_rate_per_hour", "must be a positive number"));
        }
        let cal = &self.calendar;
        if !(cal.weeks > 0.0 && cal.weeks.is_finite()) {
            return Err(invalid("calendar.weeks", "must be positive"));
        }
        if cal.days_per_week == 0 || cal.days_per_week > 7 {
            return Err(invalid("calendar.days_per_week", "must be in 1..=7"));
        }
        if !(cal.hours_per_day > 0.0 && cal.hours_per_day <= 24.0) {
            return Err(invalid("calendar.hours_per_day", "must be in (0, 24]"));
        }

        let d = &self.department;
        prob("department.p_help", d.p_help)?;
        prob("department.p_direct_till", d.p_direct_till)?;
        prob("department.p_leave_after_browse", d.p_leave_after_browse)?;
        prob("department.p_purchase_after_help", d.p_purchase_after_help)?;
        let branch = d.p_help + d.p_direct_till + d.p_leave_after_browse;
        if (branch - 1.0).abs() > 1e-9 {
            return Err(invalid(
                "department.p_help",
                format!("p_help + p_direct_till + p_leave_after_browse = {branch}, expected 1"),
            ));
        }
        duration("department.help_service", &d.help_service, false)?;
        d.item_value
            .validate()
            .map_err(|e| invalid("department.item_value", e.to_string()))?;

        let c = &self.customers;
        prob("customers.p_refund_visit", c.p_refund_visit)?;
        prob("customers.p_expert_need", c.p_expert_need)?;
        prob("customers.p_rebrowse_while_waiting", c.p_rebrowse_while_waiting)?;
        duration("customers.browse_time", &c.browse_time, false)?;
        duration("customers.patience", &c.patience, true)?;
        if c.patience.mean() <= 0.0 {
            return Err(invalid("customers.patience", "patience must be positive"));
        }

        let t = &self.till;
        duration("till.payment_time", &t.payment_time, false)?;
        duration("till.cashier_refund_time", &t.cashier_refund_time, false)?;
        duration("till.expert_refund_time", &t.expert_refund_time, false)?;
        prob("till.refund_policy.cashier_approval", t.refund_policy.cashier_approval)?;
        prob("till.refund_policy.expert_approval", t.refund_policy.expert_approval)?;

        let l = &self.levers;
        prob("levers.empowerment", l.empowerment)?;
        prob("levers.empower_to_learn", l.empower_to_learn)?;
        prob("levers.competence_threshold", l.competence_threshold)?;
        if l.knowledge_scale == 0 {
            return Err(invalid("levers.knowledge_scale", "must be positive"));
        }

        self.weights
            .validate()
            .map_err(|reason| invalid("weights", reason))?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_is_valid_and_ten_weeks() {
        let cfg = ScenarioConfig::default();
        cfg.validate().unwrap();
        assert_eq!(cfg.horizon_minutes(), 33_600.0);
        assert_eq!(cfg.staffing.cashiers + cfg.staffing.normal_sellers + cfg.staffing.expert_sellers, 12);
    }

    #[test]
    fn negative_rate_names_field() {
        let err = ScenarioConfig::from_json(r#"{"arrival_rate_per_hour": -5}"#).unwrap_err();
        assert!(err.to_string().contains("arrival_rate_per_hour"), "{err}");
    }

    #[test]
    fn unknown_keys_rejected() {
        assert!(ScenarioConfig::from_json(r#"{"arival_rate_per_hour": 70}"#).is_err());
        let err = ScenarioConfig::default()
            .with_overrides(&["levers.empowerement=0.5"])
            .unwrap_err();
        assert_eq!(err, ConfigError::UnknownKey("levers.empowerement".into()));
    }

    #[test]
    fn overrides_apply() {
        let cfg = ScenarioConfig::default()
            .with_overrides(&["levers.empowerment=0.25", "department.kind=womenswear"])
            .unwrap();
        assert_eq!(cfg.levers.empowerment, 0.25);
        assert_eq!(cfg.department.kind, DepartmentKind::Womenswear);
        assert!(ScenarioConfig::default().with_overrides(&["levers"]).is_err());
    }

    #[test]
    fn digest_is_canonical_and_sensitive() {
        let a = ScenarioConfig::default();
        let reparsed = ScenarioConfig::from_json(&a.to_json_pretty()).unwrap();
        assert_eq!(a.digest(), reparsed.digest());
        let mut b = a.clone();
        b.levers.empowerment = 0.5;
        assert_ne!(a.digest(), b.digest());
    }

    #[test]
    fn branch_must_sum_to_one() {
        let err = ScenarioConfig::default()
            .with_overrides(&["department.p_help=0.9"])
            .unwrap_err();
        assert!(err.to_string().contains("department.p_help"));
    }

    #[test]
    fn partial_json_fills_defaults() {
        let cfg = ScenarioConfig::from_json(r#"{"master_seed": 9}"#).unwrap();
        assert_eq!(cfg.master_seed, 9);
        assert_eq!(cfg.arrival_rate_per_hour, 70.0);
    }
}
