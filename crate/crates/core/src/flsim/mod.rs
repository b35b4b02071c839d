//! Federated training harness: synthetic tasks, local SGD, the four
//! aggregators, metrics and the gradient-distance monitor.

mod descent;
mod experiment;
mod metrics;
mod model;
mod task;

pub use descent::{descent_slack, descent_tolerance};
pub use experiment::{
    centralized_accuracy, run_experiment, run_seeds, Aggregator, RunOutput, SimError, Simulation,
};
pub use metrics::{sig9, write_csv, IterationMetrics, RunSummary, CSV_HEADER};
pub use model::{accuracy, local_train, score, Loss};
pub use task::{Dataset, Task, TaskConfig, TaskKind};
