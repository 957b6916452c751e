//! JSON run configuration. Every field is optional; an empty object `{}` gives the
//! reference trench setup.

use std::fmt;
use std::path::Path;

use anyhow::{bail, Context};
use otalg_core::dynamics::{EnvParams, PerturbationSource};
use otalg_core::guidance::{GuidanceGains, GuidanceLaw, TargetSpec};
use otalg_core::{
    presets, FloorRule, IcDistribution, Lambdas, MonteCarloConfig, Scenario, ScenarioConfig, Step,
    TerrainModel, TerrainProfile, Vec3,
};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfigFile {
    pub terrain: TerrainSection,
    pub gains: GainsSection,
    pub env: EnvSection,
    pub scenario: ScenarioSection,
    pub montecarlo: MonteCarloSection,
}

/// Safety margin above each step: metres, or a multiple of the critical distance
/// written as `"1.2*dstar"`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Delta {
    Meters(f64),
    DstarMultiple(f64),
}

impl Delta {
    pub fn resolve(self, gains: &GuidanceGains) -> f64 {
        match self {
            Delta::Meters(m) => m,
            // The floor barrier is shared by both lateral axes, so take the larger d*.
            Delta::DstarMultiple(k) => k * gains.critical_distances().max(),
        }
    }
}

impl fmt::Display for Delta {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Delta::Meters(m) => write!(f, "{m} m"),
            Delta::DstarMultiple(k) => write!(f, "{k}*dstar"),
        }
    }
}

impl Serialize for Delta {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            Delta::Meters(m) => s.serialize_f64(*m),
            Delta::DstarMultiple(k) => s.serialize_str(&format!("{k}*dstar")),
        }
    }
}

impl<'de> Deserialize<'de> for Delta {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Text(String),
        }
        match Raw::deserialize(d)? {
            Raw::Num(m) => Ok(Delta::Meters(m)),
            Raw::Text(t) => parse_dstar_multiple(&t)
                .map(Delta::DstarMultiple)
                .ok_or_else(|| {
                    serde::de::Error::custom(format!(
                        "delta {t:?} must be a number or of the form \"<k>*dstar\""
                    ))
                }),
        }
    }
}

fn parse_dstar_multiple(text: &str) -> Option<f64> {
    let (k, rest) = text.split_once('*')?;
    if rest.trim() != "dstar" {
        return None;
    }
    k.trim().parse().ok()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TerrainSection {
    /// Steps along x, innermost first.
    pub x: Vec<Step>,
    pub y: Vec<Step>,
    pub plateau_angle_deg: f64,
    /// Barrier exponent per step along x.
    pub lambda_x: Vec<u32>,
    pub lambda_y: Vec<u32>,
    pub delta: Delta,
    pub floor_rule: FloorRule,
}

impl Default for TerrainSection {
    fn default() -> Self {
        let steps: Vec<Step> = presets::STEPS
            .iter()
            .map(|&(h, w)| Step::new(h, w))
            .collect();
        Self {
            x: steps.clone(),
            y: steps,
            plateau_angle_deg: presets::PLATEAU_ANGLE_DEG,
            lambda_x: presets::LAMBDAS.to_vec(),
            lambda_y: presets::LAMBDAS.to_vec(),
            delta: Delta::Meters(presets::DELTA),
            floor_rule: FloorRule::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GainsSection {
    pub l1: [f64; 3],
    pub l2: [f64; 3],
    pub l3: [f64; 3],
}

impl Default for GainsSection {
    fn default() -> Self {
        let (l1, l2, l3) = presets::GAINS;
        Self {
            l1: [l1; 3],
            l2: [l2; 3],
            l3: [l3; 3],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EnvSection {
    pub gravity: [f64; 3],
    pub g_e: f64,
    pub isp: f64,
    pub t_max: f64,
    pub perturbation: bool,
    pub perturbation_source: PerturbationSource,
}

impl Default for EnvSection {
    fn default() -> Self {
        let e = EnvParams::default();
        Self {
            gravity: e.gravity.into(),
            g_e: e.g_e,
            isp: e.isp,
            t_max: e.t_max,
            perturbation: e.perturbation,
            perturbation_source: e.perturbation_source,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioSection {
    pub r_f: [f64; 3],
    pub v_f: [f64; 3],
    pub t_f: f64,
    pub dt: f64,
    pub stop_altitude: f64,
    pub law: GuidanceLaw,
    pub tgo_guard_steps: f64,
}

impl Default for ScenarioSection {
    fn default() -> Self {
        let c = ScenarioConfig::default();
        Self {
            r_f: c.target.r_f.into(),
            v_f: c.target.v_f.into(),
            t_f: c.target.t_f,
            dt: c.dt,
            stop_altitude: c.stop_altitude,
            law: c.law,
            tgo_guard_steps: c.tgo_guard_steps,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MonteCarloSection {
    pub runs: usize,
    pub seed: u64,
    pub max_redraws: u32,
    /// Significance level of the paired fuel test.
    pub alpha: f64,
    pub distribution: IcDistribution,
}

impl Default for MonteCarloSection {
    fn default() -> Self {
        let mc = MonteCarloConfig::default();
        Self {
            runs: mc.runs,
            seed: mc.seed,
            max_redraws: mc.max_redraws,
            alpha: 0.05,
            distribution: mc.distribution,
        }
    }
}

impl RunConfigFile {
    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        Self::parse(&text).with_context(|| format!("in config {}", path.display()))
    }

    pub fn parse(text: &str) -> anyhow::Result<Self> {
        // serde_json reports unknown keys and type errors with line and column.
        Ok(serde_json::from_str(text)?)
    }

    pub fn gains(&self) -> anyhow::Result<GuidanceGains> {
        let g = &self.gains;
        GuidanceGains::new(Vec3::from(g.l1), Vec3::from(g.l2), Vec3::from(g.l3))
            .context("in section `gains`")
    }

    pub fn delta(&self) -> anyhow::Result<f64> {
        Ok(self.terrain.delta.resolve(&self.gains()?))
    }

    pub fn terrain(&self) -> anyhow::Result<TerrainModel> {
        let t = &self.terrain;
        let profile =
            TerrainProfile::new(t.x.clone(), t.y.clone(), t.plateau_angle_deg.to_radians())
                .context("in section `terrain`")?;
        let lambdas = Lambdas {
            x: t.lambda_x.clone(),
            y: t.lambda_y.clone(),
        };
        Ok(TerrainModel::new(profile, &lambdas, self.delta()?)
            .context("in section `terrain`")?
            .with_floor_rule(t.floor_rule))
    }

    pub fn env(&self) -> EnvParams {
        let e = &self.env;
        EnvParams {
            gravity: Vec3::from(e.gravity),
            g_e: e.g_e,
            isp: e.isp,
            t_max: e.t_max,
            perturbation: e.perturbation,
            perturbation_source: e.perturbation_source,
        }
    }

    pub fn scenario_config(&self) -> anyhow::Result<ScenarioConfig> {
        let s = &self.scenario;
        let target = TargetSpec::new(Vec3::from(s.r_f), Vec3::from(s.v_f), s.t_f)
            .context("in section `scenario`")?;
        Ok(ScenarioConfig {
            target,
            stop_altitude: s.stop_altitude,
            law: s.law,
            env: self.env(),
            dt: s.dt,
            tgo_guard_steps: s.tgo_guard_steps,
        })
    }

    pub fn scenario(&self) -> anyhow::Result<Scenario> {
        Ok(Scenario::new(
            self.scenario_config()?,
            self.terrain()?,
            self.gains()?,
        )?)
    }

    pub fn montecarlo(&self) -> anyhow::Result<MonteCarloConfig> {
        let m = &self.montecarlo;
        if !(m.alpha > 0.0 && m.alpha < 1.0) {
            bail!("montecarlo.alpha = {} must lie in (0, 1)", m.alpha);
        }
        let mc = MonteCarloConfig {
            runs: m.runs,
            seed: m.seed,
            distribution: m.distribution.clone(),
            max_redraws: m.max_redraws,
        };
        mc.validate().context("in section `montecarlo`")?;
        Ok(mc)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_config_is_the_reference_setup() {
        let c = RunConfigFile::parse("{}").unwrap();
        assert_eq!(c, RunConfigFile::default());
        assert_eq!(c.scenario().unwrap(), presets::scenario().unwrap());
    }

    #[test]
    fn delta_forms() {
        let c = RunConfigFile::parse(r#"{"terrain": {"delta": "1.2*dstar"}}"#).unwrap();
        assert_eq!(c.terrain.delta, Delta::DstarMultiple(1.2));
        let d = c.delta().unwrap();
        assert!((d - 1.2 * otalg_core::guidance::critical_distance(1.0, 3000.0)).abs() < 1e-12);
        let c = RunConfigFile::parse(r#"{"terrain": {"delta": 40}}"#).unwrap();
        assert_eq!(c.delta().unwrap(), 40.0);
        assert!(RunConfigFile::parse(r#"{"terrain": {"delta": "1.2*d"}}"#).is_err());
        assert!(RunConfigFile::parse(r#"{"terrain": {"delta": true}}"#).is_err());
    }

    #[test]
    fn unknown_keys_are_rejected_with_position() {
        let err = RunConfigFile::parse("{\n  \"gains\": {\"l4\": [1, 1, 1]}\n}").unwrap_err();
        let msg = format!("{err:#}");
        assert!(
            msg.contains("unknown field `l4`") && msg.contains("line 2"),
            "{msg}"
        );
    }

    #[test]
    fn round_trip_is_identity() {
        let c = RunConfigFile::parse(
            r#"{"terrain": {"delta": "1.25*dstar", "floor_rule": "plateau_cap"},
                "montecarlo": {"runs": 7, "distribution": {"mass": {"kind": "single", "mean": 2000, "std_dev": 50}}}}"#,
        )
        .unwrap();
        let back = RunConfigFile::parse(&serde_json::to_string_pretty(&c).unwrap()).unwrap();
        assert_eq!(back, c);
    }

    #[test]
    fn semantic_errors_name_the_section() {
        let c = RunConfigFile::parse(r#"{"gains": {"l1": [0, 1, 1]}}"#).unwrap();
        assert!(format!("{:#}", c.scenario().unwrap_err()).contains("gains"));
        let c = RunConfigFile::parse(r#"{"terrain": {"delta": 600}}"#).unwrap();
        assert!(format!("{:#}", c.terrain().unwrap_err()).contains("terrain"));
    }
}
