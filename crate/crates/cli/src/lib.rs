//! Scenario files, dispatch over the `conefix-core` operations and the
//! bundled reproduction set.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod reproduce;
pub mod run;
pub mod scenario;

pub use reproduce::{reproduce_bundled, ReproduceOptions};
pub use run::{exit_code, run_scenario, Report, RunOptions};
pub use scenario::{load_scenario, Mode, Scenario, ScenarioError};
