//! The reference setup: a two-step trench around the landing site on Mars.

use crate::dynamics::LanderState;
use crate::error::Result;
use crate::guidance::GuidanceGains;
use crate::simulation::{Scenario, ScenarioConfig};
use crate::terrain::{Lambdas, Step, TerrainModel, TerrainProfile};
use crate::Vec3;

pub const STEPS: [(f64, f64); 2] = [(500.0, 600.0), (1000.0, 1000.0)];
pub const PLATEAU_ANGLE_DEG: f64 = 0.05;
/// Barrier exponents, innermost step first.
pub const LAMBDAS: [u32; 2] = [20, 6];
pub const DELTA: f64 = 53.67;
pub const GAINS: (f64, f64, f64) = (1.0, 3000.0, 280.0);

pub fn profile() -> Result<TerrainProfile> {
    let steps = STEPS.iter().map(|&(h, w)| Step::new(h, w)).collect();
    TerrainProfile::symmetric(steps, PLATEAU_ANGLE_DEG.to_radians())
}

pub fn terrain() -> Result<TerrainModel> {
    TerrainModel::new(profile()?, &Lambdas::uniform(&LAMBDAS), DELTA)
}

pub fn gains() -> Result<GuidanceGains> {
    GuidanceGains::uniform(GAINS.0, GAINS.1, GAINS.2)
}

pub fn scenario() -> Result<Scenario> {
    Scenario::new(ScenarioConfig::default(), terrain()?, gains()?)
}

/// The three illustrative initial conditions `(r0, v0, m0)`.
pub const CASES: [([f64; 3], [f64; 3], f64); 3] = [
    (
        [-769.42, -619.63, 2883.33],
        [-16.78, -14.08, -83.36],
        1961.80,
    ),
    ([269.35, -634.30, 2086.65], [-4.98, 0.29, -70.89], 1916.55),
    ([823.91, 467.70, 2240.03], [13.81, 24.28, -79.47], 1959.43),
];

/// Initial state of case `k` (1-based).
pub fn case(k: usize) -> Option<LanderState> {
    let (r, v, m) = CASES.get(k.checked_sub(1)?)?;
    Some(LanderState::new(Vec3::from(*r), Vec3::from(*v), *m, 0.0))
}
