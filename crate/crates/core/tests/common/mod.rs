//! Shared oracles and generators for the integration tests.
#![allow(dead_code)]

use proptest::prelude::*;
use proptest::test_runner::TestCaseError;

use retail_sim::agents::StaffRole;
use retail_sim::engine::{Dist, SimTime};
use retail_sim::experiments::{simulate, ScenarioConfig};
use retail_sim::metrics::MetricKind;
use retail_sim::queuing::{QueueDiscipline, SellerChoice};

pub const SEEDS_PER_CONFIG: u64 = 3;

fn tri(low: f64, mode: f64, high: f64) -> Dist {
    Dist::Triangular { low, mode, high }
}

prop_compose! {
    fn branch()(a in 0.0..1.0f64, b in 0.0..1.0f64) -> (f64, f64, f64) {
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        (lo, hi - lo, 1.0 - hi)
    }
}

prop_compose! {
    fn weight()(w in -5i32..=5) -> f64 { f64::from(w) }
}

prop_compose! {
    pub fn scenario()(
        cashiers in 0u32..4,
        normals in 0u32..8,
        experts in 0u32..4,
        rate in 5.0..150.0f64,
        days in 1u32..6,
        hours in 2.0..10.0f64,
        (p_help, p_till, p_leave) in branch(),
        p_buy in 0.0..=1.0f64,
        p_expert in 0.0..=1.0f64,
        p_refund in 0.0..0.3f64,
        p_rebrowse in 0.0..0.6f64,
        patience in prop_oneof![
            (0.5..30.0f64).prop_map(|m| Dist::Exponential { mean: m }),
            Just(Dist::Fixed { value: f64::INFINITY }),
            (0.0..5.0f64).prop_map(|v| Dist::Fixed { value: v }),
        ],
        help_mode in 1.0..15.0f64,
        empowerment in 0.0..=1.0f64,
        learn in 0.0..=1.0f64,
        threshold in 0.0..=1.0f64,
        scale in 1u32..40,
        weights in proptest::collection::vec(weight(), 7),
        need_priority in any::<bool>(),
        longest_idle in any::<bool>(),
        master_seed in any::<u64>(),
    ) -> ScenarioConfig {
        let mut c = ScenarioConfig::default();
        c.staffing.cashiers = cashiers;
        c.staffing.normal_sellers = normals;
        c.staffing.expert_sellers = experts;
        c.arrival_rate_per_hour = rate;
        c.calendar.weeks = 1.0;
        c.calendar.days_per_week = days;
        c.calendar.hours_per_day = hours;
        c.department.p_help = p_help;
        c.department.p_direct_till = p_till;
        c.department.p_leave_after_browse = p_leave;
        c.department.p_purchase_after_help = p_buy;
        c.department.help_service = tri(0.5, help_mode, 2.0 * help_mode + 1.0);
        c.customers.p_expert_need = p_expert;
        c.customers.p_refund_visit = p_refund;
        c.customers.p_rebrowse_while_waiting = p_rebrowse;
        c.customers.patience = patience;
        c.levers.empowerment = empowerment;
        c.levers.empower_to_learn = learn;
        c.levers.competence_threshold = threshold;
        c.levers.knowledge_scale = scale;
        c.weights.served_immediately = weights[0];
        c.weights.served_after_wait = weights[1];
        c.weights.left_queue = weights[2];
        c.weights.purchase_completed = weights[3];
        c.weights.refund_granted = weights[4];
        c.weights.refund_denied = weights[5];
        c.weights.refund_referred_wait = weights[6];
        // Validation wants some negative kind once any weight is set.
        if weights.iter().all(|&w| w >= 0.0) && weights.iter().any(|&w| w != 0.0) {
            c.weights.refund_denied = -1.0 - weights[5];
        }
        c.discipline = if need_priority { QueueDiscipline::NeedPriority } else { QueueDiscipline::LongestWaitFirst };
        c.seller_choice = if longest_idle { SellerChoice::LongestIdle } else { SellerChoice::LeastKnowledge };
        c.master_seed = master_seed;
        c
    }
}

pub fn check_run(cfg: &ScenarioConfig, seed: u64) -> Result<(), TestCaseError> {
    let r = simulate(cfg, seed, true).map_err(|e| TestCaseError::fail(e.to_string()))?;
    let audit = r.audit.as_ref().expect("audited run");
    let o = &r.outcomes;
    let horizon = cfg.horizon_minutes();

    // Customer conservation.
    prop_assert_eq!(r.ledger.entered, r.ledger.total_exits() + r.in_system);
    prop_assert_eq!(o.customers_entered, r.ledger.entered);

    // FEL bookkeeping.
    let fel = r.fel;
    prop_assert_eq!(fel.scheduled, fel.fired + fel.cancelled + fel.pending);
    prop_assert_eq!(fel.fired, r.events_fired);

    // Utilization in [0, 1], per class and per staff member.
    for u in [o.normal_utilization, o.expert_utilization, o.cashier_utilization].into_iter().flatten() {
        prop_assert!((0.0..=1.0).contains(&u), "class utilization {}", u);
    }
    for s in &r.staff {
        let u = s.busy_minutes / horizon;
        prop_assert!((0.0..=1.0 + 1e-12).contains(&u), "staff {} utilization {}", s.id, u);
        let (busy, held) = s.role_account(SimTime::new(horizon).unwrap(), horizon);
        prop_assert!(busy >= -1e-9 && busy <= held + 1e-9);
    }

    // Weighted-sum identity. Weights are integers, so float sums are exact.
    let (overall, refund) = r.ledger.recomputed();
    prop_assert_eq!(overall, r.ledger.overall_satisfaction);
    prop_assert_eq!(refund, r.ledger.refund_satisfaction);

    // Transactions against cashier task logs.
    prop_assert_eq!(r.ledger.transactions, audit.cashier_payments);
    prop_assert_eq!(r.ledger.transactions, r.ledger.count(MetricKind::PurchaseCompleted));

    // Engine and queue audits.
    prop_assert_eq!(audit.clock_regressions, 0);
    prop_assert_eq!(audit.occupancy_violations, 0);
    prop_assert_eq!(audit.phantom_services, 0);
    prop_assert_eq!(audit.fifo_violations, 0);
    prop_assert_eq!(audit.renege_then_served, 0);

    // Knowledge never decreases between snapshots.
    for pair in audit.knowledge_snapshots.windows(2) {
        for (before, after) in pair[0].iter().zip(&pair[1]) {
            prop_assert!(after >= before);
        }
    }

    // Promotion happens exactly at the threshold.
    let point = r.promotion_point;
    for s in &r.staff {
        match (s.role, s.promoted_at) {
            (StaffRole::ExpertSeller, Some(_)) => prop_assert!(s.knowledge_points >= point),
            (StaffRole::NormalSeller, None) => prop_assert!(s.knowledge_points < point),
            (StaffRole::NormalSeller, Some(_)) => prop_assert!(false, "demoted seller"),
            _ => {}
        }
    }

    // Bit-identical rerun.
    let again = simulate(cfg, seed, false).map_err(|e| TestCaseError::fail(e.to_string()))?;
    prop_assert_eq!(
        serde_json::to_string(&again.outcomes).unwrap(),
        serde_json::to_string(o).unwrap()
    );
    Ok(())
}

pub mod reference {
    /// Lanczos approximation (g = 7, n = 9).
    pub fn ln_gamma(x: f64) -> f64 {
        const G: f64 = 7.0;
        const C: [f64; 9] = [
            0.999_999_999_999_809_9,
            676.520_368_121_885_1,
            -1_259.139_216_722_402_8,
            771.323_428_777_653_1,
            -176.615_029_162_140_6,
            12.507_343_278_686_905,
            -0.138_571_095_265_720_12,
            9.984_369_578_019_572e-6,
            1.505_632_735_149_311_6e-7,
        ];
        if x < 0.5 {
            let pi = std::f64::consts::PI;
            return (pi / (pi * x).sin()).ln() - ln_gamma(1.0 - x);
        }
        let x = x - 1.0;
        let mut a = C[0];
        let t = x + G + 0.5;
        for (i, c) in C.iter().enumerate().skip(1) {
            a += c / (x + i as f64);
        }
        0.5 * (2.0 * std::f64::consts::PI).ln() + (x + 0.5) * t.ln() - t + a.ln()
    }

    /// Regularized incomplete beta I_x(a, b) by its power series
    /// I_x(a,b) = x^a (1-x)^b / (a B(a,b)) · Σ_n [B(a+1,n+1)/B(a+b,n+1)] x^n,
    /// using the symmetry I_x(a,b) = 1 − I_{1−x}(b,a) to keep x small.
    pub fn beta_inc(a: f64, b: f64, x: f64) -> f64 {
        if x <= 0.0 {
            return 0.0;
        }
        if x >= 1.0 {
            return 1.0;
        }
        if x > (a + 1.0) / (a + b + 2.0) {
            return 1.0 - beta_inc(b, a, 1.0 - x);
        }
        let ln_front = a * x.ln() + b * (1.0 - x).ln() + ln_gamma(a + b) - ln_gamma(a) - ln_gamma(b);
        // term_n = Π_{j<n} (a+b+j)/(a+1+j) · x^n
        let mut term = 1.0;
        let mut sum = 1.0;
        for j in 0..100_000 {
            let j = j as f64;
            term *= (a + b + j) / (a + 1.0 + j) * x;
            sum += term;
            if term.abs() < 1e-17 * sum.abs() {
                break;
            }
        }
        (ln_front.exp() / a * sum).clamp(0.0, 1.0)
    }

    pub struct Anova {
        pub f: f64,
        pub p: f64,
        pub eta2: f64,
        pub df1: f64,
        pub df2: f64,
    }

    /// Computational-formula ANOVA: SS_total = Σx² − T²/N,
    /// SS_between = Σ T_i²/n_i − T²/N.
    pub fn anova(groups: &[Vec<f64>]) -> Anova {
        let n_total: usize = groups.iter().map(Vec::len).sum();
        let grand: f64 = groups.iter().flatten().sum();
        let sum_sq: f64 = groups.iter().flatten().map(|x| x * x).sum();
        let correction = grand * grand / n_total as f64;
        let ss_total = sum_sq - correction;
        let ss_between = groups
            .iter()
            .map(|g| g.iter().sum::<f64>().powi(2) / g.len() as f64)
            .sum::<f64>()
            - correction;
        let ss_within = ss_total - ss_between;
        let df1 = (groups.len() - 1) as f64;
        let df2 = (n_total - groups.len()) as f64;
        let f = (ss_between / df1) / (ss_within / df2);
        let p = beta_inc(df2 / 2.0, df1 / 2.0, df2 / (df2 + df1 * f));
        Anova {
            f,
            p,
            eta2: ss_between / ss_total,
            df1,
            df2,
        }
    }
}


/// Upper quantiles of the studentized range. The printed tables give these
/// to two or three decimals; the digits here come from scipy 1.x
/// `studentized_range.ppf` and agree with the tables at printed precision.
pub const TABLE: [(f64, usize, f64, f64); 10] = [
    (0.95, 2, 5.0, 3.635_351_695_146_79),
    (0.95, 3, 10.0, 3.876_776_750_013_158),
    (0.95, 4, 20.0, 3.958_293_560_945_384_6),
    (0.95, 5, 30.0, 4.102_079_019_506_422),
    (0.95, 6, 60.0, 4.163_160_813_762_026),
    (0.95, 3, 120.0, 3.356_138_396_150_633_7),
    (0.99, 2, 10.0, 4.482_028_396_473_151),
    (0.99, 4, 24.0, 4.906_804_382_684_607),
    (0.99, 5, 40.0, 4.930_777_532_122_144_5),
    (0.95, 10, 15.0, 5.197_907_291_009_268),
];

