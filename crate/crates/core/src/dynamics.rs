//! 3-DOF point-mass lander with mass depletion.
//!
//! ```text
//! r' = v
//! v' = a + g + a_p
//! m' = -|T| / (I_sp g_e),   |T| = m |a|
//! ```
//!
//! The commanded acceleration is held constant over a step and integrated with classical
//! fixed-step RK4.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::Vec3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LanderState {
    /// Position, m.
    pub r: Vec3,
    /// Velocity, m/s.
    pub v: Vec3,
    /// Mass, kg.
    pub m: f64,
    /// Time, s.
    pub t: f64,
}

impl LanderState {
    pub const fn new(r: Vec3, v: Vec3, m: f64, t: f64) -> Self {
        Self { r, v, m, t }
    }

    pub fn is_finite(&self) -> bool {
        self.r.iter().chain(self.v.iter()).all(|x| x.is_finite())
            && self.m.is_finite()
            && self.t.is_finite()
    }
}

/// Which acceleration the bounded perturbation is proportional to.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PerturbationSource {
    /// The thrust actually applied, after saturation.
    #[default]
    Applied,
    /// The raw guidance command.
    Commanded,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnvParams {
    /// Local gravity, m/s^2.
    pub gravity: Vec3,
    /// Standard gravity for the rocket equation, m/s^2.
    pub g_e: f64,
    /// Specific impulse, s.
    pub isp: f64,
    /// Maximum total thrust, N.
    pub t_max: f64,
    pub perturbation: bool,
    pub perturbation_source: PerturbationSource,
}

impl Default for EnvParams {
    fn default() -> Self {
        Self {
            gravity: Vec3::new(0.0, 0.0, -3.7114),
            g_e: 9.807,
            isp: 225.0,
            t_max: 31000.0,
            perturbation: false,
            perturbation_source: PerturbationSource::Applied,
        }
    }
}

impl EnvParams {
    pub fn validate(&self) -> Result<()> {
        for (name, value) in [("g_e", self.g_e), ("isp", self.isp), ("t_max", self.t_max)] {
            if !(value > 0.0 && value.is_finite()) {
                return Err(Error::validation(name, format!("{value} must be > 0")));
            }
        }
        if !(self.gravity.z < 0.0) || !self.gravity.iter().all(|g| g.is_finite()) {
            return Err(Error::validation(
                "gravity",
                format!("{:?} must point down (g_z < 0)", self.gravity.as_slice()),
            ));
        }
        Ok(())
    }

    /// Exhaust velocity `I_sp * g_e`, m/s.
    pub fn exhaust_velocity(&self) -> f64 {
        self.isp * self.g_e
    }
}

/// Bounded periodic disturbance `0.5 * a * sin(pi t / 3)`.
pub fn perturbation(a: &Vec3, t: f64) -> Vec3 {
    a * (0.5 * (PI * t / 3.0).sin())
}

#[derive(Clone, Copy)]
struct Deriv {
    dr: Vec3,
    dv: Vec3,
    dm: f64,
}

/// One RK4 step with the perturbation (if enabled) proportional to `a_applied`.
pub fn step(
    state: &LanderState,
    a_applied: &Vec3,
    env: &EnvParams,
    dt: f64,
) -> Result<LanderState> {
    step_with_perturbation_base(state, a_applied, a_applied, env, dt)
}

/// One RK4 step; the perturbation scales `perturbation_base` instead of `a_applied`.
///
/// The perturbation is time-varying within the step and is evaluated at each RK4 stage.
pub fn step_with_perturbation_base(
    state: &LanderState,
    a_applied: &Vec3,
    perturbation_base: &Vec3,
    env: &EnvParams,
    dt: f64,
) -> Result<LanderState> {
    if !(dt > 0.0) {
        return Err(Error::validation("dt", format!("{dt} s must be > 0")));
    }
    if !(state.m > 0.0) {
        return Err(Error::PropellantDepleted {
            t: state.t,
            mass: state.m,
        });
    }
    let a_norm = a_applied.norm();
    let ve = env.exhaust_velocity();
    let f = |v: &Vec3, m: f64, t: f64| {
        let mut dv = a_applied + env.gravity;
        if env.perturbation {
            dv += perturbation(perturbation_base, t);
        }
        Deriv {
            dr: *v,
            dv,
            dm: -m * a_norm / ve,
        }
    };

    let (r0, v0, m0, t0) = (state.r, state.v, state.m, state.t);
    let h2 = 0.5 * dt;
    let k1 = f(&v0, m0, t0);
    let k2 = f(&(v0 + k1.dv * h2), m0 + k1.dm * h2, t0 + h2);
    let k3 = f(&(v0 + k2.dv * h2), m0 + k2.dm * h2, t0 + h2);
    let k4 = f(&(v0 + k3.dv * dt), m0 + k3.dm * dt, t0 + dt);
    let w = dt / 6.0;
    let next = LanderState {
        r: r0 + (k1.dr + (k2.dr + k3.dr) * 2.0 + k4.dr) * w,
        v: v0 + (k1.dv + (k2.dv + k3.dv) * 2.0 + k4.dv) * w,
        m: m0 + (k1.dm + 2.0 * (k2.dm + k3.dm) + k4.dm) * w,
        t: t0 + dt,
    };
    if !next.is_finite() {
        return Err(Error::NonFinite { t: next.t });
    }
    if next.m <= 0.0 {
        return Err(Error::PropellantDepleted {
            t: next.t,
            mass: next.m,
        });
    }
    Ok(next)
}

/// Propellant consumed between the first and last state, kg.
pub fn fuel_used(trajectory: &[LanderState]) -> Result<f64> {
    match (trajectory.first(), trajectory.last()) {
        (Some(first), Some(last)) => Ok(first.m - last.m),
        _ => Err(Error::validation("trajectory", "is empty")),
    }
}
