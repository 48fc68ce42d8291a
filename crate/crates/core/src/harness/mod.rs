//! Scenario runner, Monte Carlo driver and gas reporting.
//!
//! A [`Scenario`] fully determines a run: the master seed derives every key
//! and RNG, and a single discrete-event [`Scheduler`] moves messages between
//! the actors and owns all contract calls. [`run`] returns a [`Transcript`]
//! with one record per line.

mod montecarlo;
mod report;
mod run;
mod scenario;
mod scheduler;

pub use montecarlo::{monte_carlo_tamper, TamperEstimate, TamperMcError};
pub use report::{gas_report, GasReport, OpTotal};
pub use run::{run, Outcome, RunError, Transcript};
pub use scenario::{
    builtin, builtin_names, builtins, ActorsConfig, EconomicsConfig, Expect, GasConfig, PayloadClass, Phase,
    Scenario, ScenarioError, TimingConfig, TrafficConfig,
};
pub use scheduler::Scheduler;

#[cfg(test)]
mod tests;
