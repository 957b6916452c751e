use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::episode::simulate;
use super::stats::{paired_t_test, TTestResult};
use super::{RunStats, Scenario};
use crate::dynamics::LanderState;
use crate::error::{Error, Result};
use crate::guidance::GuidanceLaw;
use crate::Vec3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Normal1 {
    pub mean: f64,
    pub std_dev: f64,
}

impl Normal1 {
    pub const fn new(mean: f64, std_dev: f64) -> Self {
        Self { mean, std_dev }
    }

    fn distribution(&self, name: &'static str) -> Result<Normal<f64>> {
        if !(self.std_dev > 0.0 && self.std_dev.is_finite() && self.mean.is_finite()) {
            return Err(Error::validation(
                name,
                format!(
                    "N({}, {}) needs a finite mean and std_dev > 0",
                    self.mean, self.std_dev
                ),
            ));
        }
        Normal::new(self.mean, self.std_dev).map_err(|e| Error::validation(name, e.to_string()))
    }
}

/// Initial mass distribution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum MassModel {
    /// Equal-weight mixture of normals sharing one standard deviation.
    Mixture {
        means: Vec<f64>,
        std_dev: f64,
    },
    Single {
        mean: f64,
        std_dev: f64,
    },
}

impl Default for MassModel {
    fn default() -> Self {
        MassModel::Mixture {
            means: vec![1900.0, 2100.0],
            std_dev: 100.0,
        }
    }
}

impl MassModel {
    pub fn mean(&self) -> f64 {
        match self {
            MassModel::Mixture { means, .. } => means.iter().sum::<f64>() / means.len() as f64,
            MassModel::Single { mean, .. } => *mean,
        }
    }

    fn components(&self) -> Result<Vec<Normal<f64>>> {
        match self {
            MassModel::Mixture { means, std_dev } => {
                if means.is_empty() {
                    return Err(Error::validation("mass", "mixture has no components"));
                }
                means
                    .iter()
                    .map(|&m| Normal1::new(m, *std_dev).distribution("mass"))
                    .collect()
            }
            MassModel::Single { mean, std_dev } => {
                Ok(vec![Normal1::new(*mean, *std_dev).distribution("mass")?])
            }
        }
    }
}

/// Independent normal dispersions of the initial state. Spreads are standard deviations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IcDistribution {
    pub x: Normal1,
    pub y: Normal1,
    pub z: Normal1,
    pub vx: Normal1,
    pub vy: Normal1,
    pub vz: Normal1,
    pub mass: MassModel,
}

impl Default for IcDistribution {
    fn default() -> Self {
        Self {
            x: Normal1::new(0.0, 350.0),
            y: Normal1::new(0.0, 350.0),
            z: Normal1::new(2500.0, 500.0),
            vx: Normal1::new(0.0, 10.0),
            vy: Normal1::new(0.0, 10.0),
            vz: Normal1::new(-80.0, 10.0),
            mass: MassModel::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonteCarloConfig {
    pub runs: usize,
    pub seed: u64,
    pub distribution: IcDistribution,
    /// Redraw budget per run for samples that start inside the terrain or below the floor.
    pub max_redraws: u32,
}

impl Default for MonteCarloConfig {
    fn default() -> Self {
        Self {
            runs: 300,
            seed: 2024,
            distribution: IcDistribution::default(),
            max_redraws: 1000,
        }
    }
}

impl MonteCarloConfig {
    pub fn validate(&self) -> Result<()> {
        if self.runs < 2 {
            return Err(Error::validation(
                "runs",
                format!("{} must be >= 2", self.runs),
            ));
        }
        Samplers::new(&self.distribution).map(|_| ())
    }
}

struct Samplers {
    axes: [Normal<f64>; 6],
    mass: Vec<Normal<f64>>,
}

impl Samplers {
    fn new(d: &IcDistribution) -> Result<Self> {
        Ok(Self {
            axes: [
                d.x.distribution("x")?,
                d.y.distribution("y")?,
                d.z.distribution("z")?,
                d.vx.distribution("vx")?,
                d.vy.distribution("vy")?,
                d.vz.distribution("vz")?,
            ],
            mass: d.mass.components()?,
        })
    }

    fn draw(&self, rng: &mut ChaCha8Rng) -> LanderState {
        let [x, y, z, vx, vy, vz] = &self.axes;
        let r = Vec3::new(x.sample(rng), y.sample(rng), z.sample(rng));
        let v = Vec3::new(vx.sample(rng), vy.sample(rng), vz.sample(rng));
        let k = rng.random_range(0..self.mass.len());
        LanderState::new(r, v, self.mass[k].sample(rng), 0.0)
    }
}

/// A sampled initial condition and how many draws were rejected before it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SampledIc {
    pub state: LanderState,
    pub redraws: u32,
}

/// Random stream for run `index`: ChaCha8 keyed by `seed`, stream number `index`.
fn run_rng(seed: u64, index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64);
    rng
}

fn admissible(scenario: &Scenario, s: &LanderState) -> bool {
    s.m > 0.0
        && s.r.z > scenario.config.stop_altitude
        && !scenario.terrain.collides(&s.r)
        && scenario
            .terrain
            .vertical(&s.r)
            .is_ok_and(|floor| s.r.z >= floor)
}

fn sample_with(
    samplers: &Samplers,
    scenario: &Scenario,
    mc: &MonteCarloConfig,
    index: usize,
) -> Result<SampledIc> {
    let mut rng = run_rng(mc.seed, index);
    for redraws in 0..=mc.max_redraws {
        let state = samplers.draw(&mut rng);
        if admissible(scenario, &state) {
            return Ok(SampledIc { state, redraws });
        }
    }
    Err(Error::InitialState(format!(
        "run {index}: no admissible initial state in {} draws",
        mc.max_redraws + 1
    )))
}

/// Initial condition of run `index`. Depends only on `(seed, index)`.
///
/// Draws that start inside the terrain, below the vertical floor or at/below the stop
/// altitude are rejected and redrawn from the same stream.
pub fn sample_initial_state(
    scenario: &Scenario,
    mc: &MonteCarloConfig,
    index: usize,
) -> Result<SampledIc> {
    let samplers = Samplers::new(&mc.distribution)?;
    sample_with(&samplers, scenario, mc, index)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonteCarloResult {
    pub initial: Vec<SampledIc>,
    pub otalg: Vec<RunStats>,
    pub classical: Vec<RunStats>,
}

impl MonteCarloResult {
    pub fn stats(&self, law: GuidanceLaw) -> &[RunStats] {
        match law {
            GuidanceLaw::Otalg => &self.otalg,
            GuidanceLaw::Classical => &self.classical,
        }
    }

    pub fn total_redraws(&self) -> u64 {
        self.initial.iter().map(|ic| u64::from(ic.redraws)).sum()
    }
}

/// Environment variable that overrides the number of Monte-Carlo worker threads.
pub const WORKERS_ENV: &str = "OTALG_WORKERS";

fn workers_override() -> Result<Option<usize>> {
    match std::env::var(WORKERS_ENV) {
        Err(_) => Ok(None),
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(Some(n)),
            _ => Err(Error::validation(
                WORKERS_ENV,
                format!("{v:?} is not a positive integer"),
            )),
        },
    }
}

/// Runs every sampled initial condition under both guidance laws.
///
/// Runs are spread over the global rayon pool, or over a dedicated pool when
/// `OTALG_WORKERS` is set. Results are in run order and identical for a given seed
/// regardless of the number of workers.
pub fn run_monte_carlo(scenario: &Scenario, mc: &MonteCarloConfig) -> Result<MonteCarloResult> {
    mc.validate()?;
    match workers_override()? {
        None => run_batch(scenario, mc),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| Error::Construction(e.to_string()))?
            .install(|| run_batch(scenario, mc)),
    }
}

fn run_batch(scenario: &Scenario, mc: &MonteCarloConfig) -> Result<MonteCarloResult> {
    let samplers = Samplers::new(&mc.distribution)?;
    let otalg = scenario.with_law(GuidanceLaw::Otalg);
    let classical = scenario.with_law(GuidanceLaw::Classical);

    let runs: Vec<(SampledIc, RunStats, RunStats)> = (0..mc.runs)
        .into_par_iter()
        .map(|i| {
            let ic = sample_with(&samplers, scenario, mc, i)?;
            let a = simulate(&otalg, &ic.state, None)?;
            let b = simulate(&classical, &ic.state, None)?;
            Ok((ic, a, b))
        })
        .collect::<Result<_>>()?;

    let mut out = MonteCarloResult {
        initial: Vec::with_capacity(runs.len()),
        otalg: Vec::with_capacity(runs.len()),
        classical: Vec::with_capacity(runs.len()),
    };
    for (ic, a, b) in runs {
        out.initial.push(ic);
        out.otalg.push(a);
        out.classical.push(b);
    }
    Ok(out)
}

/// Paired fuel comparison `d = fuel(a) - fuel(b)` over the usable pairs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FuelComparison {
    pub pairs_used: usize,
    /// Pairs dropped because either run aborted.
    pub excluded_aborted: usize,
    /// Pairs dropped because either run hit the terrain.
    pub excluded_collided: usize,
    pub ttest: Option<TTestResult>,
    /// Set when the test could not be formed (too few pairs, zero variance).
    pub ttest_error: Option<String>,
}

/// Pairs whose runs both completed contribute; a pair is dropped if either run aborted or
/// collided, since the fuel of a crashed run is not comparable.
pub fn compare_fuel(a: &[RunStats], b: &[RunStats], alpha: f64) -> FuelComparison {
    let mut excluded_aborted = 0;
    let mut excluded_collided = 0;
    let (mut fa, mut fb) = (Vec::new(), Vec::new());
    for (x, y) in a.iter().zip(b) {
        if x.failure.is_some() || y.failure.is_some() {
            excluded_aborted += 1;
        } else if x.collided || y.collided {
            excluded_collided += 1;
        } else {
            fa.push(x.fuel_used);
            fb.push(y.fuel_used);
        }
    }
    let (ttest, ttest_error) = match paired_t_test(&fa, &fb, alpha) {
        Ok(t) => (Some(t), None),
        Err(e) => (None, Some(e.to_string())),
    };
    FuelComparison {
        pairs_used: fa.len(),
        excluded_aborted,
        excluded_collided,
        ttest,
        ttest_error,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::guidance::GuidanceGains;
    use crate::simulation::ScenarioConfig;
    use crate::terrain::{Lambdas, Step, TerrainModel, TerrainProfile};

    fn scenario() -> Scenario {
        let p = TerrainProfile::symmetric(
            vec![Step::new(500.0, 600.0), Step::new(1000.0, 1000.0)],
            0.05_f64.to_radians(),
        )
        .unwrap();
        let terrain = TerrainModel::new(p, &Lambdas::uniform(&[20, 6]), 53.67).unwrap();
        Scenario::new(
            ScenarioConfig::default(),
            terrain,
            GuidanceGains::uniform(1.0, 3000.0, 280.0).unwrap(),
        )
        .unwrap()
    }

    #[test]
    fn sampling_depends_only_on_seed_and_index() {
        let s = scenario();
        let mc = MonteCarloConfig::default();
        let a = sample_initial_state(&s, &mc, 17).unwrap();
        let b = sample_initial_state(&s, &mc, 17).unwrap();
        let c = sample_initial_state(&s, &mc, 18).unwrap();
        assert_eq!(a, b);
        assert_ne!(a.state, c.state);
        let other = MonteCarloConfig { seed: 7, ..mc };
        assert_ne!(a.state, sample_initial_state(&s, &other, 17).unwrap().state);
    }

    #[test]
    fn sampled_states_are_admissible() {
        let s = scenario();
        let mc = MonteCarloConfig::default();
        for i in 0..2000 {
            let ic = sample_initial_state(&s, &mc, i).unwrap();
            assert!(admissible(&s, &ic.state));
        }
        // A low mean altitude forces rejections.
        let low = MonteCarloConfig {
            distribution: IcDistribution {
                z: Normal1::new(600.0, 500.0),
                ..IcDistribution::default()
            },
            ..mc
        };
        let redraws: u32 = (0..200)
            .map(|i| sample_initial_state(&s, &low, i).unwrap().redraws)
            .sum();
        assert!(redraws > 0);
    }

    #[test]
    fn sample_means_match_distribution() {
        // Raw draws, no rejection: each mean within 3 sigma / sqrt(N) of its target.
        let d = IcDistribution::default();
        let samplers = Samplers::new(&d).unwrap();
        let n = 4000;
        let mut sum = [0.0; 7];
        for i in 0..n {
            let s = samplers.draw(&mut run_rng(99, i));
            for (k, v) in [s.r.x, s.r.y, s.r.z, s.v.x, s.v.y, s.v.z, s.m]
                .into_iter()
                .enumerate()
            {
                sum[k] += v;
            }
        }
        let nf = n as f64;
        let targets = [
            (d.x.mean, d.x.std_dev),
            (d.y.mean, d.y.std_dev),
            (d.z.mean, d.z.std_dev),
            (d.vx.mean, d.vx.std_dev),
            (d.vy.mean, d.vy.std_dev),
            (d.vz.mean, d.vz.std_dev),
            // Mixture of N(1900, 100) and N(2100, 100): sd = sqrt(100^2 + 100^2).
            (2000.0, (2.0f64).sqrt() * 100.0),
        ];
        for (k, (mean, sd)) in targets.into_iter().enumerate() {
            let got = sum[k] / nf;
            assert!(
                (got - mean).abs() <= 3.0 * sd / nf.sqrt(),
                "component {k}: {got} vs {mean}"
            );
        }
    }

    #[test]
    fn invalid_configs() {
        let mut mc = MonteCarloConfig {
            runs: 1,
            ..MonteCarloConfig::default()
        };
        assert!(mc.validate().is_err());
        mc.runs = 2;
        mc.distribution.vz.std_dev = 0.0;
        assert!(mc.validate().is_err());
        mc.distribution = IcDistribution::default();
        mc.distribution.mass = MassModel::Mixture {
            means: vec![],
            std_dev: 1.0,
        };
        assert!(mc.validate().is_err());
    }

    #[test]
    fn compare_fuel_drops_bad_pairs() {
        let base = RunStats {
            fuel_used: 300.0,
            landing_error: 0.0,
            terminal_speed: 0.0,
            collided: false,
            completed: true,
            max_thrust: 0.0,
            saturation_fraction: 0.0,
            min_clearance: 1.0,
            steps: 1,
            final_time: 100.0,
            failure: None,
        };
        let a: Vec<RunStats> = (0..5)
            .map(|i| RunStats {
                fuel_used: 300.0 + i as f64,
                ..base.clone()
            })
            .collect();
        let mut b: Vec<RunStats> = (0..5)
            .map(|i| RunStats {
                fuel_used: 299.0 + (i * i) as f64 * 0.5,
                ..base.clone()
            })
            .collect();
        b[1].collided = true;
        b[3].failure = Some("x".into());
        let c = compare_fuel(&a, &b, 0.05);
        assert_eq!(
            (c.pairs_used, c.excluded_collided, c.excluded_aborted),
            (3, 1, 1)
        );
        assert_eq!(c.ttest.unwrap().df, 2);
    }
}
