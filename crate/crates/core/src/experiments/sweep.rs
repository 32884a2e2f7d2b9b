use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{run_replication, ConfigError, ModelError, ReplicationResult, ScenarioConfig};
use crate::metrics::OutcomeVar;

/// The lever a sweep varies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Lever {
    Empowerment,
    EmpowerToLearn,
    CompetenceThreshold,
}

impl Lever {
    pub fn name(self) -> &'static str {
        match self {
            Lever::Empowerment => "empowerment",
            Lever::EmpowerToLearn => "empower_to_learn",
            Lever::CompetenceThreshold => "competence_threshold",
        }
    }

    /// Copy of `base` with this lever set to `level`.
    pub fn apply(self, base: &ScenarioConfig, level: f64) -> ScenarioConfig {
        let mut cfg = base.clone();
        match self {
            Lever::Empowerment => cfg.levers.empowerment = level,
            Lever::EmpowerToLearn => cfg.levers.empower_to_learn = level,
            Lever::CompetenceThreshold => cfg.levers.competence_threshold = level,
        }
        cfg
    }
}

/// The three preset experiments.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Experiment {
    Empowerment,
    Learning,
    Development,
}

impl Experiment {
    pub const ALL: [Experiment; 3] = [
        Experiment::Empowerment,
        Experiment::Learning,
        Experiment::Development,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Experiment::Empowerment => "empowerment",
            Experiment::Learning => "learning",
            Experiment::Development => "development",
        }
    }

    pub fn lever(self) -> Lever {
        match self {
            Experiment::Empowerment => Lever::Empowerment,
            Experiment::Learning => Lever::EmpowerToLearn,
            Experiment::Development => Lever::CompetenceThreshold,
        }
    }

    pub fn levels(self) -> Vec<f64> {
        match self {
            Experiment::Empowerment | Experiment::Learning => vec![0.0, 0.25, 0.5, 0.75, 1.0],
            Experiment::Development => vec![0.0, 0.2, 0.4, 0.6, 0.8, 1.0],
        }
    }

    /// Outcome columns the analysis reports for this experiment.
    pub fn dependent_vars(self) -> Vec<OutcomeVar> {
        use OutcomeVar::*;
        match self {
            Experiment::Empowerment => vec![Transactions, OverallSatisfaction, RefundSatisfaction],
            Experiment::Learning => vec![
                MeanNormalExpertise,
                NormalUtilization,
                ExpertUtilization,
                Transactions,
                OverallSatisfaction,
            ],
            Experiment::Development => vec![ExpertUtilization, Transactions, OverallSatisfaction],
        }
    }

    /// Fixes the non-swept levers the experiment prescribes.
    pub fn prepare(self, base: &ScenarioConfig) -> ScenarioConfig {
        let mut cfg = base.clone();
        match self {
            // No promotions in the first two experiments.
            Experiment::Empowerment | Experiment::Learning => {
                cfg.levers.competence_threshold = 1.0;
            }
            Experiment::Development => cfg.levers.empower_to_learn = 1.0,
        }
        cfg
    }

    pub fn sweep(self, base: &ScenarioConfig, replications: u32) -> SweepSpec {
        SweepSpec {
            lever: self.lever(),
            levels: self.levels(),
            replications,
            base: self.prepare(base),
        }
    }
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Experiment {
    type Err = ConfigError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Experiment::ALL
            .into_iter()
            .find(|e| e.name() == s)
            .ok_or_else(|| ConfigError::Invalid {
                field: "experiment".into(),
                reason: format!("unknown experiment `{s}`"),
            })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    pub lever: Lever,
    pub levels: Vec<f64>,
    pub replications: u32,
    pub base: ScenarioConfig,
}

impl SweepSpec {
    pub fn config_for(&self, level: f64) -> ScenarioConfig {
        self.lever.apply(&self.base, level)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let bad = |field: &str, reason: String| ConfigError::Invalid {
            field: field.into(),
            reason,
        };
        if self.levels.is_empty() {
            return Err(bad("levels", "at least one level is required".into()));
        }
        if self.replications < 2 {
            return Err(bad("replications", format!("need at least 2, got {}", self.replications)));
        }
        for (i, l) in self.levels.iter().enumerate() {
            if self.levels[..i].contains(l) {
                return Err(bad("levels", format!("duplicate level {l}")));
            }
            self.config_for(*l).validate()?;
        }
        Ok(())
    }

    /// Number of result rows the sweep produces.
    pub fn len(&self) -> usize {
        self.levels.len() * self.replications as usize
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// How a sweep distributes its replications.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Execution {
    Serial,
    /// Work-stealing pool; `jobs = None` uses every core. Falls back to
    /// serial when the crate is built without the `parallel` feature.
    #[default]
    Parallel,
    ParallelJobs(usize),
}

/// Runs every (level, replication) pair, returning rows sorted by
/// level order then replication index.
pub fn run_sweep(spec: &SweepSpec, exec: Execution) -> Result<Vec<ReplicationResult>, ModelError> {
    spec.validate()?;
    let configs: Vec<(f64, ScenarioConfig)> = spec
        .levels
        .iter()
        .map(|&l| (l, spec.config_for(l)))
        .collect();
    let jobs: Vec<(usize, u32)> = (0..configs.len())
        .flat_map(|i| (0..spec.replications).map(move |r| (i, r)))
        .collect();
    let run = |&(i, r): &(usize, u32)| {
        let (level, cfg) = &configs[i];
        run_replication(cfg, *level, r)
    };
    match exec {
        Execution::Serial => jobs.iter().map(run).collect(),
        Execution::Parallel => par_map(&jobs, run, None),
        Execution::ParallelJobs(n) => par_map(&jobs, run, Some(n)),
    }
}

#[cfg(feature = "parallel")]
fn par_map<F>(jobs: &[(usize, u32)], f: F, threads: Option<usize>) -> Result<Vec<ReplicationResult>, ModelError>
where
    F: Fn(&(usize, u32)) -> Result<ReplicationResult, ModelError> + Sync,
{
    use rayon::prelude::*;
    // collect() on an indexed parallel iterator preserves input order.
    let go = || jobs.par_iter().map(&f).collect();
    match threads {
        None => go(),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build()
            .map_err(|e| ModelError::Invariant(format!("thread pool: {e}")))?
            .install(go),
    }
}

#[cfg(not(feature = "parallel"))]
fn par_map<F>(jobs: &[(usize, u32)], f: F, _threads: Option<usize>) -> Result<Vec<ReplicationResult>, ModelError>
where
    F: Fn(&(usize, u32)) -> Result<ReplicationResult, ModelError>,
{
    jobs.iter().map(f).collect()
}
