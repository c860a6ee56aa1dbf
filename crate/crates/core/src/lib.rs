//! Scheduling links under the SINR interference model.
//!
//! An [`Instance`] places links in a metric space. The threshold solvers in
//! [`threshold`] pick large feasible link sets with per-link SINR targets,
//! [`flexible`] maximizes summed utility and builds multi-slot schedules,
//! [`oracle`] certifies feasibility and computes exact optima on small
//! instances, and [`lab`] hosts executable constructions around them.
//! [`verify`] re-checks any solver output from scratch and [`experiment`]
//! runs seeded batches over all of the above.

pub mod error;
pub mod experiment;
pub mod flexible;
pub mod generate;
pub mod lab;
pub mod metric;
pub mod model;
pub mod oracle;
pub mod threshold;
pub mod utility;
pub mod verify;

pub use error::{Error, Result};
pub use metric::MetricSpace;
pub use model::{
    meets, sensitivity_order, sinr, sinr_all, Algorithm, Instance, InstanceBuilder, Link, LinkId,
    PowerAssignment, PowerCap, Solution, TraceStep, POWER_SLACK, SINR_TOLERANCE,
};
pub use flexible::{solve_flexible, solve_latency, FlexibleRun, Schedule};
pub use oracle::{check_admissible, AdmissibilityCertificate};
pub use threshold::{solve, solve_fixed, solve_limited, solve_unlimited};
pub use utility::{Utility, UtilitySpec};
pub use verify::{Verification, Violation};
