//! One-way ANOVA, eta squared and Tukey HSD post-hoc comparisons.
//!
//! Everything here is a pure function of its inputs.

mod anova;
mod tukey;

pub use anova::{anova_oneway, f_upper_tail, AnovaResult};
pub use tukey::{ptukey, qtukey, tukey_hsd, TukeyPair, TukeyResult};

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum StatsError {
    #[error("need at least 2 groups, got {0}")]
    TooFewGroups(usize),
    #[error("group `{label}` has {n} observations, need at least 2")]
    TooFewObservations { label: String, n: usize },
    #[error("within-group variance is zero")]
    DegenerateVariance,
    #[error("groups are unbalanced (sizes {0:?})")]
    UnbalancedGroups(Vec<usize>),
    #[error("invalid degrees of freedom ({0}, {1})")]
    BadDf(f64, f64),
    #[error("non-finite observation in group `{0}`")]
    NonFinite(String),
}

/// One level of the factor and its observations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Group {
    pub label: String,
    pub values: Vec<f64>,
}

impl Group {
    pub fn new(label: impl Into<String>, values: Vec<f64>) -> Self {
        Group {
            label: label.into(),
            values,
        }
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }
}

/// Checks the shape every analysis needs: at least two groups of at least
/// two finite observations each.
pub(crate) fn check_groups(groups: &[Group]) -> Result<(), StatsError> {
    if groups.len() < 2 {
        return Err(StatsError::TooFewGroups(groups.len()));
    }
    for g in groups {
        if g.values.len() < 2 {
            return Err(StatsError::TooFewObservations {
                label: g.label.clone(),
                n: g.values.len(),
            });
        }
        if g.values.iter().any(|v| !v.is_finite()) {
            return Err(StatsError::NonFinite(g.label.clone()));
        }
    }
    Ok(())
}

/// Splits a family-wise alpha evenly across `n_dependent_vars` tests.
///
/// # Panics
/// If `family_alpha` is outside (0, 1) or `n_dependent_vars` is 0.
pub fn corrected_alpha(family_alpha: f64, n_dependent_vars: usize) -> f64 {
    assert!(
        family_alpha > 0.0 && family_alpha < 1.0,
        "family alpha must be in (0, 1), got {family_alpha}"
    );
    assert!(n_dependent_vars >= 1, "need at least one dependent variable");
    family_alpha / n_dependent_vars as f64
}

/// Formats an alpha the way reports print it: four decimals, no leading zero.
pub fn format_alpha(alpha: f64) -> String {
    let s = format!("{alpha:.4}");
    s.strip_prefix('0').map(str::to_string).unwrap_or(s)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EffectSize {
    Small,
    Medium,
    Large,
}

impl EffectSize {
    pub fn name(self) -> &'static str {
        match self {
            EffectSize::Small => "small",
            EffectSize::Medium => "medium",
            EffectSize::Large => "large",
        }
    }
}

/// Cohen's cut points for eta squared: 0.14 large, 0.06 medium.
pub fn effect_size_label(eta2: f64) -> EffectSize {
    if eta2 >= 0.14 {
        EffectSize::Large
    } else if eta2 >= 0.06 {
        EffectSize::Medium
    } else {
        EffectSize::Small
    }
}

/// Average ranks (1-based), ties sharing the mean of their positions.
pub fn ranks(xs: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..xs.len()).collect();
    idx.sort_by(|&a, &b| xs[a].total_cmp(&xs[b]));
    let mut out = vec![0.0; xs.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && xs[idx[j + 1]] == xs[idx[i]] {
            j += 1;
        }
        let r = (i + j) as f64 / 2.0 + 1.0;
        for &k in &idx[i..=j] {
            out[k] = r;
        }
        i = j + 1;
    }
    out
}

/// Spearman rank correlation; `None` when either side is constant or the
/// lengths differ.
pub fn spearman(xs: &[f64], ys: &[f64]) -> Option<f64> {
    if xs.len() != ys.len() || xs.len() < 2 {
        return None;
    }
    let (rx, ry) = (ranks(xs), ranks(ys));
    let n = xs.len() as f64;
    let (mx, my) = (rx.iter().sum::<f64>() / n, ry.iter().sum::<f64>() / n);
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    for (a, b) in rx.iter().zip(&ry) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx).powi(2);
        syy += (b - my).powi(2);
    }
    (sxx > 0.0 && syy > 0.0).then(|| sxy / (sxx * syy).sqrt())
}
