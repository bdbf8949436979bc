//! Opponent-process simulation and hormetic analysis of repeatable behaviors.
//!
//! A behavior is modeled as a train of dose infusions driving a
//! six-compartment PK/PD system: a fast positive a-process opposed by a
//! slower negative b-process, combined into a hedonic compartment whose
//! integral is the behavior's total utility. Repeating the behavior too
//! often accumulates b-processes (allostasis) and drives utility negative;
//! the resulting biphasic dose-response curve has an apex (the best
//! repetition intensity) and a zero crossing (the most that is safe).
//!
//! The crate provides:
//!
//! - [`sim`]: the ODE core — dose schedules, adaptive integration with
//!   event-aligned infusions, trajectories, and utility integrals.
//! - [`analysis`]: frequency- and count-response analysis (BFRA/BCRA),
//!   the closed-form steady state, and hormetic summaries.
//! - [`value_space`]: pairwise parameter sweeps mapping where in parameter
//!   space behaviors stay safely hormetic.
//! - [`regulator`]: a behavior-regulation loop over a persistent database
//!   of opponent-process parameters, with similarity-based parameter
//!   proposal, human escalation, and a hard execution ceiling at each
//!   behavior's hormetic limit.
//! - [`cli`]: the command-line front end (see the `posology` binary).
//!
//! See the `examples/` directory for one runnable walkthrough per
//! capability.

pub mod analysis;
pub mod cli;
pub mod error;
pub mod params;
pub mod plot;
pub mod regulator;
pub mod sim;
pub mod value_space;

pub use analysis::{
    bcra, bfra, biophase, mu_initial, steady_state_h, summarize, AnalysisKind, BcraSettings,
    BfraSettings, CurveShape, HormeticSummary, ProcessKind, ResponseCurve,
};
pub use error::{Error, Result};
pub use params::{DoseSchedule, ModelParams, ParamField, SimConfig};
pub use sim::{
    auc, derivatives, simulate, split_processes, total_utility, Compartment, Trajectory,
};
pub use value_space::{flag_unsafe, sweep, AnalysisSettings, AxisSpec, SweepSpec, ValueSpaceMap};
