//! Stochastic reaction-network toolkit for antithetic integral feedback
//! combined with negative-feedback action.
//!
//! The crate composes open-loop networks with the antithetic integral
//! controller, simulates the closed loop exactly (Gillespie direct method,
//! parallel ensembles with streaming statistics), and checks the results
//! against a moment-closure approximation: the Lyapunov covariance
//! equation, closed-form stationary variances for the gene-expression and
//! maturation case studies, and Hurwitz stability regions. A deterministic
//! PI mean model connects the stochastic loop to classical control.

pub use nalgebra;

pub mod analysis;
pub mod closed_form;
pub mod controller;
pub mod error;
pub mod meanode;
pub mod model;
pub mod presets;
pub mod rng;
pub mod ssa;
pub mod stats;

pub use controller::{
    attach_antithetic, attach_feedback, ergodicity_guard, nominal_input, ClosedLoopConfig,
    ClosedLoopNetwork, FeedbackKind, GuardStatus,
};
pub use error::{Error, Result};
pub use model::{LinearPropensityStructure, Network, RateLaw, Reaction, Species, State};
pub use ssa::{
    estimate_beta, invariant_report, run_ensemble, settling_time, simulate, EnsembleStats,
    ObservableLayout, SeedPlan, StationaryStats, TimeGrid, Track, Trajectory,
};
