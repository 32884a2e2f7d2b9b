//! Agent-based simulation of a retail department.
//!
//! Customers browse, ask for help, queue at the till and ask for refunds;
//! cashiers, normal sellers and experts serve them. Three management levers
//! (refund empowerment, empowerment to learn, promotion threshold) can be
//! swept across replications and analysed with one-way ANOVA and Tukey HSD.
//!
//! ```no_run
//! use retail_sim::experiments::{run_replication, ScenarioConfig};
//!
//! let cfg = ScenarioConfig::default();
//! let result = run_replication(&cfg, 0.0, 0).unwrap();
//! println!("{} transactions", result.outcomes.transactions);
//! ```

pub mod agents;
pub mod engine;
pub mod experiments;
pub mod metrics;
pub mod queuing;
pub mod report;
pub mod stats;
