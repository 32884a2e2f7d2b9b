//! Scenario configuration, single replications and lever sweeps.

mod config;
mod replication;
mod summary;
mod sweep;

pub use config::{
    Calendar, ConfigError, CustomerParams, DepartmentKind, DepartmentProfile, ScenarioConfig,
    Staffing, TillParams,
};
pub use replication::{
    replication_seed, run_replication, simulate, AuditReport, ModelError, ReplicationResult,
    RunReport,
};
pub use summary::{summarize, LevelSummary, Moments};
pub use sweep::{run_sweep, Execution, Experiment, Lever, SweepSpec};
