use serde::{Deserialize, Serialize};

use super::Scenario;
use crate::dynamics::{step_with_perturbation_base, LanderState, PerturbationSource};
use crate::error::{Error, Result};
use crate::guidance::saturate;
use crate::Vec3;

/// One logged control step: the state at the start of the step and the command held over
/// it. The final sample of a log is the terminal state with a zero command.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrajectorySample {
    pub t: f64,
    pub r: Vec3,
    pub v: Vec3,
    pub m: f64,
    pub a_cmd: Vec3,
    pub a_applied: Vec3,
    /// `m * |a_applied|`, N.
    pub thrust_norm: f64,
    /// Signed barrier distances at `r`.
    pub distance: Vec3,
    pub saturated: bool,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryLog {
    pub samples: Vec<TrajectorySample>,
}

impl TrajectoryLog {
    pub fn fuel_used(&self) -> Result<f64> {
        match (self.samples.first(), self.samples.last()) {
            (Some(a), Some(b)) => Ok(a.m - b.m),
            _ => Err(Error::validation("trajectory", "is empty")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunStats {
    /// Propellant consumed, kg.
    pub fuel_used: f64,
    /// Distance from the target position at the end of the run, m.
    pub landing_error: f64,
    /// Speed at the end of the run, m/s.
    pub terminal_speed: f64,
    pub collided: bool,
    /// Ended by the stop rule (altitude or terminal time) without collision or abort.
    pub completed: bool,
    /// Peak applied thrust, N.
    pub max_thrust: f64,
    /// Fraction of control steps that hit the thrust limit.
    pub saturation_fraction: f64,
    /// Lowest altitude above the ground directly below, over all visited states, m.
    pub min_clearance: f64,
    pub steps: usize,
    pub final_time: f64,
    /// Why the run aborted, if it did.
    pub failure: Option<String>,
}

/// Log and statistics of one closed-loop run.
#[derive(Debug, Clone, PartialEq)]
pub struct Episode {
    pub log: TrajectoryLog,
    pub stats: RunStats,
}

/// Runs the closed loop from `initial` and records every step.
///
/// Each step evaluates the guidance law, clamps the thrust, then integrates one RK4 step.
/// The run stops when the lander reaches the stop altitude (the last step is shortened to
/// land on it exactly), when `t_f` is reached, on terrain collision, or on abort
/// (propellant depletion, non-finite state). Aborts are reported through
/// `RunStats::completed == false`, not as an error.
pub fn run_episode(scenario: &Scenario, initial: &LanderState) -> Result<Episode> {
    let mut samples = Vec::new();
    let stats = simulate(scenario, initial, Some(&mut samples))?;
    Ok(Episode {
        log: TrajectoryLog { samples },
        stats,
    })
}

pub(crate) fn check_initial(scenario: &Scenario, initial: &LanderState) -> Result<()> {
    if !initial.is_finite() {
        return Err(Error::InitialState("state is not finite".into()));
    }
    if !(initial.m > 0.0) {
        return Err(Error::InitialState(format!(
            "mass {} kg must be > 0",
            initial.m
        )));
    }
    if initial.r.z < 0.0 {
        return Err(Error::InitialState(format!(
            "altitude {} m is below the landing plane",
            initial.r.z
        )));
    }
    if scenario.terrain.collides(&initial.r) {
        return Err(Error::InitialState(format!(
            "position ({}, {}, {}) is inside the terrain",
            initial.r.x, initial.r.y, initial.r.z
        )));
    }
    Ok(())
}

pub(crate) fn simulate(
    scenario: &Scenario,
    initial: &LanderState,
    mut log: Option<&mut Vec<TrajectorySample>>,
) -> Result<RunStats> {
    check_initial(scenario, initial)?;
    let cfg = &scenario.config;
    let terrain = &scenario.terrain;
    let target = &cfg.target;
    let env = &cfg.env;
    let g = env.gravity;
    let t_eps = 1e-9 * target.t_f.max(1.0);

    let mut state = *initial;
    let mut held: Option<Vec3> = None;
    let mut last_distance = Vec3::zeros();
    let mut steps = 0usize;
    let mut saturated_steps = 0usize;
    let mut max_thrust = 0.0f64;
    let mut min_clearance = terrain.clearance(&state.r);
    let mut collided = false;
    let mut failure: Option<Error> = None;
    let mut touched_down = false;

    loop {
        let t_go = target.t_f - state.t;
        if touched_down || state.r.z <= cfg.stop_altitude || t_go <= t_eps {
            break;
        }

        let barrier = match terrain.evaluate(&state.r) {
            Ok(b) => b,
            Err(e) => {
                failure = Some(e);
                break;
            }
        };
        last_distance = barrier.distance;

        let a_cmd = match held {
            Some(a) if t_go < cfg.tgo_guard_steps * cfg.dt => a,
            _ => match cfg
                .law
                .command(&state, target, &g, &barrier, &scenario.gains)
            {
                Ok(c) => c.accel,
                Err(e) => {
                    failure = Some(e);
                    break;
                }
            },
        };
        held = Some(a_cmd);
        let (a_applied, saturated) = saturate(&a_cmd, state.m, env.t_max);
        let base = match env.perturbation_source {
            PerturbationSource::Applied => a_applied,
            PerturbationSource::Commanded => a_cmd,
        };

        let h = cfg.dt.min(t_go);
        let advance = |tau: f64| step_with_perturbation_base(&state, &a_applied, &base, env, tau);
        let mut next = match advance(h) {
            Ok(s) => s,
            Err(e) => {
                failure = Some(e);
                break;
            }
        };
        if next.r.z <= cfg.stop_altitude {
            match locate_stop(&advance, h, cfg.stop_altitude) {
                Ok(s) => next = s,
                Err(e) => {
                    failure = Some(e);
                    break;
                }
            }
            touched_down = true;
        } else if h == cfg.dt {
            // Keep the clock on the dt grid.
            next.t = initial.t + (steps + 1) as f64 * cfg.dt;
        }

        let thrust = state.m * a_applied.norm();
        max_thrust = max_thrust.max(thrust);
        saturated_steps += usize::from(saturated);
        steps += 1;
        if let Some(log) = log.as_deref_mut() {
            log.push(TrajectorySample {
                t: state.t,
                r: state.r,
                v: state.v,
                m: state.m,
                a_cmd,
                a_applied,
                thrust_norm: thrust,
                distance: barrier.distance,
                saturated,
            });
        }

        state = next;
        min_clearance = min_clearance.min(terrain.clearance(&state.r));
        if terrain.collides(&state.r) {
            collided = true;
            break;
        }
    }

    if let Some(log) = log {
        let distance = terrain
            .evaluate(&state.r)
            .map(|b| b.distance)
            .unwrap_or(last_distance);
        log.push(TrajectorySample {
            t: state.t,
            r: state.r,
            v: state.v,
            m: state.m,
            a_cmd: Vec3::zeros(),
            a_applied: Vec3::zeros(),
            thrust_norm: 0.0,
            distance,
            saturated: false,
        });
    }

    Ok(RunStats {
        fuel_used: initial.m - state.m,
        landing_error: (state.r - target.r_f).norm(),
        terminal_speed: state.v.norm(),
        collided,
        completed: !collided && failure.is_none(),
        max_thrust,
        saturation_fraction: if steps == 0 {
            0.0
        } else {
            saturated_steps as f64 / steps as f64
        },
        min_clearance,
        steps,
        final_time: state.t,
        failure: failure.map(|e| e.to_string()),
    })
}

/// Shortens the final step so the lander ends on the stop altitude (from above).
fn locate_stop(
    advance: &impl Fn(f64) -> Result<LanderState>,
    h: f64,
    stop_altitude: f64,
) -> Result<LanderState> {
    let (mut lo, mut hi) = (0.0, h);
    let mut best: Option<LanderState> = None;
    for _ in 0..80 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let s = advance(mid)?;
        if s.r.z > stop_altitude {
            lo = mid;
            best = Some(s);
        } else {
            hi = mid;
        }
    }
    match best {
        Some(s) => Ok(s),
        // Already at the stop altitude at the start of the step.
        None => advance(hi),
    }
}
