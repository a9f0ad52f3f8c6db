//! Job shop scheduling with learned start-time predictors.
//!
//! The crate covers the problem model and its violation calculus, exact and
//! anytime reference solvers, dispatch heuristics, a dense neural network
//! trained with Lagrangian multipliers on the scheduling constraints,
//! recovery of feasible schedules from predictions, and the harness that
//! generates data and measures the results.

pub mod error;
pub mod harness;
pub mod heuristics;
pub mod instance;
pub mod io;
pub mod neural;
pub mod oracle;
pub mod recovery;
pub mod schedule;
pub mod training;
pub mod violation;

pub use error::{Error, Result};
pub use heuristics::{best_dispatch, dispatch, DispatchRule};
pub use instance::{Instance, TaskId};
pub use io::{parse_jsplib, Dataset, DatasetRecord, ModelArtifact, SolverStatus};
pub use neural::{Architecture, ArchitectureKind, Model, Network, Scaler};
pub use oracle::{solve_anytime, solve_exact, time_to_match, SolveResult, TracePoint};
pub use recovery::{extract_ordering, greedy_recover, recover, schedule_under_ordering, MachineOrdering, OrderingKey};
pub use schedule::{check_feasible, makespan, Schedule, ScheduleKind};
pub use training::{train, DualState, LossKind, TrainConfig};
pub use violation::{violation_degrees, violation_subgradient, Multipliers, ViolationReport};
