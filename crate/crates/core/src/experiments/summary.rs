use serde::{Deserialize, Serialize};

use super::ReplicationResult;
use crate::metrics::OutcomeVar;

/// Mean and sample SD of one outcome at one level.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Moments {
    pub n: usize,
    pub mean: f64,
    /// Sample SD (n − 1 denominator). Reported as 0 when `n == 1`.
    pub sd: f64,
    /// Set when `n == 1`, so the SD is a convention, not an estimate.
    pub single: bool,
}

impl Moments {
    /// `None` for an empty slice.
    pub fn of(xs: &[f64]) -> Option<Moments> {
        let n = xs.len();
        if n == 0 {
            return None;
        }
        let mean = xs.iter().sum::<f64>() / n as f64;
        let sd = if n == 1 {
            0.0
        } else {
            (xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
        };
        Some(Moments {
            n,
            mean,
            sd,
            single: n == 1,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelSummary {
    pub level: f64,
    pub replications: usize,
    /// One entry per variable; `None` when no replication reported a value.
    pub stats: Vec<(OutcomeVar, Option<Moments>)>,
}

impl LevelSummary {
    pub fn get(&self, var: OutcomeVar) -> Option<Moments> {
        self.stats.iter().find(|(v, _)| *v == var).and_then(|(_, m)| *m)
    }
}

/// Per-level descriptives, in first-appearance order of the levels.
pub fn summarize(results: &[ReplicationResult], vars: &[OutcomeVar]) -> Vec<LevelSummary> {
    let mut levels: Vec<f64> = Vec::new();
    for r in results {
        if !levels.contains(&r.level) {
            levels.push(r.level);
        }
    }
    levels
        .into_iter()
        .map(|level| {
            let rows: Vec<&ReplicationResult> = results.iter().filter(|r| r.level == level).collect();
            let stats = vars
                .iter()
                .map(|&v| {
                    let xs: Vec<f64> = rows.iter().filter_map(|r| v.get(&r.outcomes)).collect();
                    (v, Moments::of(&xs))
                })
                .collect();
            LevelSummary {
                level,
                replications: rows.len(),
                stats,
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_value_has_zero_sd_and_flag() {
        let m = Moments::of(&[4.0]).unwrap();
        assert_eq!(m.sd, 0.0);
        assert!(m.single);
    }

    #[test]
    fn constant_values_have_zero_sd() {
        let m = Moments::of(&[2.5; 6]).unwrap();
        assert_eq!(m.mean, 2.5);
        assert_eq!(m.sd, 0.0);
        assert!(!m.single);
    }

    #[test]
    fn sample_sd() {
        let m = Moments::of(&[2.0, 4.0, 4.0, 4.0, 5.0, 5.0, 7.0, 9.0]).unwrap();
        assert_eq!(m.mean, 5.0);
        assert!((m.sd - (32.0f64 / 7.0).sqrt()).abs() < 1e-12);
    }

    #[test]
    fn empty_is_absent() {
        assert!(Moments::of(&[]).is_none());
    }
}
