//! Offshore wind delivery planning: HVDC lines, a hybrid of lines and a
//! hydrogen pipeline, or pipelines alone, each sized for the largest lifetime
//! net benefit over a representative day of wind and prices.

// `!(x > 0.0)` is used on purpose so NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod defaults;
pub mod dispatch;
pub mod io;
pub mod lp;
pub mod model;
pub mod physics;
pub mod sizing;
pub mod sweeps;

pub use dispatch::{
    build_dispatch, solve_dispatch, verify_tightness, DispatchError, DispatchProblem, DispatchResult,
    TightnessReport,
};
pub use model::{
    build_topology, validate_inputs, validate_scenario, CaseId, ComponentCatalog, DayProfile,
    GasProperties, Scenario, Topology, ValidationErrors,
};
pub use sizing::{
    net_benefit, optimize_sizing, total_cost, CostBreakdown, Evaluation, SizingDecision, SizingError,
    SizingOptions, SizingOutcome,
};
pub use sweeps::{compare_cases, find_crossover, run_sweep, Axis, SweepResult, SweepSpec};
