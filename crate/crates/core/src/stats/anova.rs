use serde::{Deserialize, Serialize};
use statrs::function::beta::beta_reg;

use super::{check_groups, Group, StatsError};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnovaResult {
    pub f: f64,
    pub df_between: usize,
    pub df_within: usize,
    pub p: f64,
    pub eta_squared: f64,
    pub ss_between: f64,
    pub ss_within: f64,
    pub ss_total: f64,
    /// Group means in input order.
    pub means: Vec<f64>,
}

impl AnovaResult {
    pub fn ms_within(&self) -> f64 {
        self.ss_within / self.df_within as f64
    }
}

/// One-way between-groups ANOVA.
pub fn anova_oneway(groups: &[Group]) -> Result<AnovaResult, StatsError> {
    check_groups(groups)?;
    let n_total: usize = groups.iter().map(|g| g.values.len()).sum();
    let grand = groups.iter().flat_map(|g| &g.values).sum::<f64>() / n_total as f64;
    let means: Vec<f64> = groups.iter().map(Group::mean).collect();

    let mut ss_between = 0.0;
    let mut ss_within = 0.0;
    let mut ss_total = 0.0;
    let mut scale = 0.0;
    for (g, m) in groups.iter().zip(&means) {
        ss_between += g.values.len() as f64 * (m - grand).powi(2);
        for x in &g.values {
            ss_within += (x - m).powi(2);
            ss_total += (x - grand).powi(2);
            scale += x * x;
        }
    }
    // Rounding can leave a few ulps behind when every group is constant.
    if ss_within <= 1e-14 * scale {
        return Err(StatsError::DegenerateVariance);
    }

    let df_between = groups.len() - 1;
    let df_within = n_total - groups.len();
    let f = (ss_between / df_between as f64) / (ss_within / df_within as f64);
    let p = f_upper_tail(f, df_between as f64, df_within as f64)?;
    Ok(AnovaResult {
        f,
        df_between,
        df_within,
        p,
        eta_squared: ss_between / ss_total,
        ss_between,
        ss_within,
        ss_total,
        means,
    })
}

/// P(X > f) for X ~ F(df1, df2), through the regularized incomplete beta
/// function: P = I_x(df2/2, df1/2) with x = df2 / (df2 + df1 f).
pub fn f_upper_tail(f: f64, df1: f64, df2: f64) -> Result<f64, StatsError> {
    if !(df1 > 0.0 && df2 > 0.0 && df1.is_finite() && df2.is_finite()) {
        return Err(StatsError::BadDf(df1, df2));
    }
    if f.is_nan() || f < 0.0 {
        return Err(StatsError::NonFinite(format!("F = {f}")));
    }
    if f == 0.0 {
        return Ok(1.0);
    }
    if f.is_infinite() {
        return Ok(0.0);
    }
    let x = df2 / (df2 + df1 * f);
    Ok(beta_reg(df2 / 2.0, df1 / 2.0, x).clamp(0.0, 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn g(label: &str, v: &[f64]) -> Group {
        Group::new(label, v.to_vec())
    }

    #[test]
    fn hand_computed_example() {
        let r = anova_oneway(&[g("a", &[1.0, 2.0, 3.0]), g("b", &[2.0, 3.0, 4.0])]).unwrap();
        assert!((r.ss_between - 1.5).abs() < 1e-12);
        assert!((r.ss_within - 4.0).abs() < 1e-12);
        assert!((r.f - 1.5).abs() < 1e-12);
        assert_eq!((r.df_between, r.df_within), (1, 4));
        assert!((r.eta_squared - 1.5 / 5.5).abs() < 1e-12);
        // scipy.stats.f.sf(1.5, 1, 4)
        assert!((r.p - 0.287_864_134_726_690_7).abs() < 1e-9);
    }

    #[test]
    fn equal_means_give_zero_f() {
        let r = anova_oneway(&[g("a", &[1.0, 2.0]), g("b", &[1.0, 2.0])]).unwrap();
        assert_eq!(r.f, 0.0);
        assert_eq!(r.eta_squared, 0.0);
        assert_eq!(r.p, 1.0);
    }

    #[test]
    fn constant_groups_are_degenerate() {
        let e = anova_oneway(&[g("a", &[1.0, 1.0]), g("b", &[2.0, 2.0])]).unwrap_err();
        assert_eq!(e, StatsError::DegenerateVariance);
    }

    #[test]
    fn shape_errors() {
        assert_eq!(
            anova_oneway(&[g("a", &[1.0, 2.0])]).unwrap_err(),
            StatsError::TooFewGroups(1)
        );
        assert!(matches!(
            anova_oneway(&[g("a", &[1.0, 2.0]), g("b", &[1.0])]),
            Err(StatsError::TooFewObservations { .. })
        ));
    }

    #[test]
    fn f_tail_edges() {
        assert_eq!(f_upper_tail(0.0, 3.0, 10.0).unwrap(), 1.0);
        assert_eq!(f_upper_tail(f64::INFINITY, 3.0, 10.0).unwrap(), 0.0);
        assert!(f_upper_tail(26.77, 4.0, 95.0).unwrap() < 0.01);
        assert!(matches!(f_upper_tail(1.0, 0.0, 4.0), Err(StatsError::BadDf(..))));
    }
}
