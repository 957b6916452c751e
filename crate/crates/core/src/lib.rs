//! Terrain-avoiding, fuel-optimal powered descent guidance.
//!
//! The crate is split along the flow of a landing simulation:
//!
//! - [`terrain`]: step-polygon terrain model and the barrier surfaces wrapped around it.
//! - [`guidance`]: ZEM/ZEV, the classical energy-optimal command, the barrier-augmented
//!   command and the design-check formulas (critical distance, thrust bound).
//! - [`dynamics`]: 3-DOF point-mass lander with mass depletion, fixed-step RK4.
//! - [`simulation`]: closed-loop episodes, the Monte-Carlo dispersion harness and the
//!   paired t-test used to compare fuel consumption between two guidance laws.
//!
//! All positions are in a non-rotating ENU frame with its origin at the landing site.

// `!(x > 0.0)` is how validation rejects NaN along with non-positive values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod dynamics;
pub mod error;
pub mod guidance;
pub mod presets;
pub mod simulation;
pub mod terrain;

pub use nalgebra::Vector3;

pub use dynamics::{EnvParams, LanderState, PerturbationSource};
pub use error::{Error, Result};
pub use guidance::{GuidanceCommand, GuidanceGains, GuidanceLaw, TargetSpec};
pub use simulation::{
    IcDistribution, MassModel, MonteCarloConfig, MonteCarloResult, RunStats, Scenario,
    ScenarioConfig, Summary, TTestResult, TrajectoryLog, TrajectorySample,
};
pub use terrain::{
    Axis, BarrierEvaluation, BarrierSet, FloorRule, Lambdas, Side, Step, TerrainModel,
    TerrainProfile,
};

/// Shorthand used throughout the crate for 3-vectors in SI units.
pub type Vec3 = Vector3<f64>;
