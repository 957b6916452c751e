//! Closed-loop simulation, Monte-Carlo dispersions and fuel statistics.

mod episode;
mod montecarlo;
mod stats;

pub use episode::{run_episode, Episode, RunStats, TrajectoryLog, TrajectorySample};
pub use montecarlo::{
    compare_fuel, run_monte_carlo, sample_initial_state, FuelComparison, IcDistribution, MassModel,
    MonteCarloConfig, MonteCarloResult, Normal1, SampledIc, WORKERS_ENV,
};
pub use stats::{
    paired_t_test, quantile, student_t_critical, summarize, Quantiles, Summary, TTestResult,
};

use serde::{Deserialize, Serialize};

use crate::dynamics::EnvParams;
use crate::error::{Error, Result};
use crate::guidance::{GuidanceGains, GuidanceLaw, TargetSpec};
use crate::terrain::TerrainModel;

/// Run parameters for a closed-loop episode.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScenarioConfig {
    pub target: TargetSpec,
    /// The run stops once the lander descends to this altitude, m.
    pub stop_altitude: f64,
    pub law: GuidanceLaw,
    pub env: EnvParams,
    /// Integrator and control step, s.
    pub dt: f64,
    /// The last command is held once `t_go < tgo_guard_steps * dt`.
    pub tgo_guard_steps: f64,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            target: TargetSpec::default(),
            stop_altitude: 0.05,
            law: GuidanceLaw::Otalg,
            env: EnvParams::default(),
            dt: 0.01,
            tgo_guard_steps: 2.0,
        }
    }
}

impl ScenarioConfig {
    pub fn validate(&self) -> Result<()> {
        self.env.validate()?;
        TargetSpec::new(self.target.r_f, self.target.v_f, self.target.t_f)?;
        if !(self.stop_altitude > 0.0) {
            return Err(Error::validation(
                "stop_altitude",
                format!("{} m must be > 0", self.stop_altitude),
            ));
        }
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::validation(
                "dt",
                format!("{} s must be > 0", self.dt),
            ));
        }
        if !(self.tgo_guard_steps >= 0.0) {
            return Err(Error::validation(
                "tgo_guard_steps",
                format!("{} must be >= 0", self.tgo_guard_steps),
            ));
        }
        Ok(())
    }
}

/// Everything an episode needs: run parameters, terrain and gains.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub config: ScenarioConfig,
    pub terrain: TerrainModel,
    pub gains: GuidanceGains,
}

impl Scenario {
    pub fn new(
        config: ScenarioConfig,
        terrain: TerrainModel,
        gains: GuidanceGains,
    ) -> Result<Self> {
        config.validate()?;
        Ok(Self {
            config,
            terrain,
            gains,
        })
    }

    pub fn with_law(&self, law: GuidanceLaw) -> Self {
        let mut s = self.clone();
        s.config.law = law;
        s
    }
}
