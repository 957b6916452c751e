//! ZEM/ZEV feedback guidance with a barrier-avoidance term.
//!
//! The classical energy-optimal command is
//!
//! ```text
//! a = 6/t_go^2 * ZEM - 2/t_go * ZEV
//! ```
//!
//! The terrain-avoiding command adds `Gamma = p * t_go^2 / 12`, where each component of
//! `p` is the position-costate rate produced by the penalty `l3 * exp(-phi(d))` on the
//! signed distance `d` to the active barrier:
//!
//! ```text
//! phi(d)   = l2 / (d^2 + l1)
//! p_dot(d) = l2 * l3 * d * exp(-phi) / (d^2 + l1)^2
//! ```

use serde::{Deserialize, Serialize};

use crate::dynamics::LanderState;
use crate::error::{Error, Result};
use crate::terrain::{BarrierEvaluation, TerrainModel};
use crate::Vec3;

/// Per-axis weights of the barrier penalty.
///
/// `l1` and `l2` shape the penalty and must be positive. `l3` scales it; `l3 = 0` turns the
/// avoidance term off and is accepted so the augmented law can be compared to the classical
/// one.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GuidanceGains {
    pub l1: Vec3,
    pub l2: Vec3,
    pub l3: Vec3,
}

impl GuidanceGains {
    pub fn new(l1: Vec3, l2: Vec3, l3: Vec3) -> Result<Self> {
        for i in 0..3 {
            if !(l1[i] > 0.0 && l1[i].is_finite()) {
                return Err(Error::validation("l1", format!("{} must be > 0", l1[i])));
            }
            if !(l2[i] > 0.0 && l2[i].is_finite()) {
                return Err(Error::validation("l2", format!("{} must be > 0", l2[i])));
            }
            if !(l3[i] >= 0.0 && l3[i].is_finite()) {
                return Err(Error::validation("l3", format!("{} must be >= 0", l3[i])));
            }
        }
        Ok(Self { l1, l2, l3 })
    }

    pub fn uniform(l1: f64, l2: f64, l3: f64) -> Result<Self> {
        Self::new(Vec3::repeat(l1), Vec3::repeat(l2), Vec3::repeat(l3))
    }

    /// Critical distance per axis.
    pub fn critical_distances(&self) -> Vec3 {
        Vec3::from_fn(|i, _| critical_distance(self.l1[i], self.l2[i]))
    }
}

/// Desired terminal state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TargetSpec {
    pub r_f: Vec3,
    pub v_f: Vec3,
    /// Terminal time, s.
    pub t_f: f64,
}

impl TargetSpec {
    pub fn new(r_f: Vec3, v_f: Vec3, t_f: f64) -> Result<Self> {
        if !(t_f > 0.0 && t_f.is_finite()) {
            return Err(Error::validation("t_f", format!("{t_f} s must be > 0")));
        }
        Ok(Self { r_f, v_f, t_f })
    }

    pub fn time_to_go(&self, t: f64) -> f64 {
        self.t_f - t
    }
}

impl Default for TargetSpec {
    fn default() -> Self {
        Self {
            r_f: Vec3::zeros(),
            v_f: Vec3::zeros(),
            t_f: 100.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GuidanceLaw {
    Classical,
    #[default]
    Otalg,
}

/// Output of one guidance evaluation, before thrust saturation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GuidanceCommand {
    /// Commanded acceleration, m/s^2.
    pub accel: Vec3,
    pub zem: Vec3,
    pub zev: Vec3,
    /// Avoidance term `Gamma`, zero for the classical law, m/s^2.
    pub avoidance: Vec3,
    /// Barrier distances the command was evaluated at.
    pub distance: Vec3,
    pub t_go: f64,
}

fn check_horizon(t_go: f64) -> Result<()> {
    if t_go > 0.0 {
        Ok(())
    } else {
        Err(Error::GuidanceHorizon { t_go })
    }
}

/// Zero-effort miss and zero-effort velocity.
pub fn zem_zev(state: &LanderState, target: &TargetSpec, g: &Vec3) -> Result<(Vec3, Vec3)> {
    let t_go = target.time_to_go(state.t);
    check_horizon(t_go)?;
    let zem = target.r_f - (state.r + state.v * t_go + g * (0.5 * t_go * t_go));
    let zev = target.v_f - (state.v + g * t_go);
    Ok((zem, zev))
}

/// Energy-optimal ZEM/ZEV command.
pub fn classical_command(zem: &Vec3, zev: &Vec3, t_go: f64) -> Result<Vec3> {
    check_horizon(t_go)?;
    Ok(zem * (6.0 / (t_go * t_go)) - zev * (2.0 / t_go))
}

/// Barrier penalty exponent `l2 / (d^2 + l1)`.
pub fn phi(d: f64, l1: f64, l2: f64) -> f64 {
    l2 / (d * d + l1)
}

/// Position-costate rate along one axis; has the sign of `d`.
pub fn p_dot(d: f64, l1: f64, l2: f64, l3: f64) -> f64 {
    let s = d * d + l1;
    l2 * l3 * d * (-phi(d, l1, l2)).exp() / (s * s)
}

pub fn p_dot_vec(d: &Vec3, gains: &GuidanceGains) -> Vec3 {
    Vec3::from_fn(|i, _| p_dot(d[i], gains.l1[i], gains.l2[i], gains.l3[i]))
}

/// Augmented command at known barrier distances.
pub fn otalg_command_at(
    state: &LanderState,
    target: &TargetSpec,
    g: &Vec3,
    barrier: &BarrierEvaluation,
    gains: &GuidanceGains,
) -> Result<GuidanceCommand> {
    let t_go = target.time_to_go(state.t);
    let (zem, zev) = zem_zev(state, target, g)?;
    let base = classical_command(&zem, &zev, t_go)?;
    let avoidance = p_dot_vec(&barrier.distance, gains) * (t_go * t_go / 12.0);
    Ok(GuidanceCommand {
        accel: base + avoidance,
        zem,
        zev,
        avoidance,
        distance: barrier.distance,
        t_go,
    })
}

/// Terrain-avoiding command: classical ZEM/ZEV plus `p * t_go^2 / 12`.
pub fn otalg_command(
    state: &LanderState,
    target: &TargetSpec,
    g: &Vec3,
    terrain: &TerrainModel,
    gains: &GuidanceGains,
) -> Result<GuidanceCommand> {
    let barrier = terrain.evaluate(&state.r)?;
    otalg_command_at(state, target, g, &barrier, gains)
}

impl GuidanceLaw {
    /// Command for this law. Barrier distances are recorded for both laws.
    pub fn command(
        self,
        state: &LanderState,
        target: &TargetSpec,
        g: &Vec3,
        barrier: &BarrierEvaluation,
        gains: &GuidanceGains,
    ) -> Result<GuidanceCommand> {
        match self {
            GuidanceLaw::Otalg => otalg_command_at(state, target, g, barrier, gains),
            GuidanceLaw::Classical => {
                let t_go = target.time_to_go(state.t);
                let (zem, zev) = zem_zev(state, target, g)?;
                Ok(GuidanceCommand {
                    accel: classical_command(&zem, &zev, t_go)?,
                    zem,
                    zev,
                    avoidance: Vec3::zeros(),
                    distance: barrier.distance,
                    t_go,
                })
            }
        }
    }
}

/// Barrier distance at which the divert acceleration magnitude peaks.
pub fn critical_distance(l1: f64, l2: f64) -> f64 {
    ((l2 * l2 - 2.0 * l1 * l2 + 4.0 * l1 * l1).sqrt() + l2 - l1).sqrt() / 3f64.sqrt()
}

/// `dGamma_i / dr_i` along one axis.
pub fn avoidance_gradient(d: f64, l1: f64, l2: f64, l3: f64, t_go: f64) -> f64 {
    let s = d * d + l1;
    let kappa = l2 * l3 * t_go * t_go / 12.0;
    let bracket = 1.0 - 4.0 * d * d / s + 2.0 * l2 * d * d / (s * s);
    kappa / (s * s) * bracket * (-phi(d, l1, l2)).exp()
}

/// Thrust needed along one axis to keep the augmented cost positive, N.
///
/// Worst case is `phi -> 0`, giving `m0 * sqrt(l3)`.
pub fn min_thrust_bound(m0: f64, l3: f64, phi_min: f64) -> f64 {
    m0 * (l3 * (-phi_min).exp()).sqrt()
}

/// Clamps the thrust-vector norm to `t_max`, preserving direction.
///
/// The clamped thrust never exceeds `t_max` in floating point, not just to rounding.
pub fn saturate(a_cmd: &Vec3, mass: f64, t_max: f64) -> (Vec3, bool) {
    let thrust = mass * a_cmd.norm();
    if thrust <= t_max {
        return (*a_cmd, false);
    }
    let mut a = a_cmd * (t_max / thrust);
    while mass * a.norm() > t_max {
        a *= 1.0 - f64::EPSILON;
    }
    (a, true)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::terrain::{Lambdas, Step, TerrainProfile};
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    const MARS: Vec3 = Vec3::new(0.0, 0.0, -3.7114);

    fn at_rest(r: Vec3, t: f64) -> LanderState {
        LanderState::new(r, Vec3::zeros(), 2000.0, t)
    }

    #[test]
    fn zem_zev_gravity_terms() {
        let target = TargetSpec::new(Vec3::zeros(), Vec3::zeros(), 10.0).unwrap();
        let (zem, zev) = zem_zev(&at_rest(Vec3::zeros(), 0.0), &target, &MARS).unwrap();
        assert_relative_eq!(zem, Vec3::new(0.0, 0.0, 185.57), epsilon = 1e-12);
        assert_relative_eq!(zev, Vec3::new(0.0, 0.0, 37.114), epsilon = 1e-12);
    }

    #[test]
    fn zem_zev_vanish_on_ballistic_arc() {
        // Start from the arc that coasts into (r_f, v_f) at t_f.
        let target =
            TargetSpec::new(Vec3::new(10.0, -4.0, 0.0), Vec3::new(1.0, 2.0, -3.0), 40.0).unwrap();
        let t_go = 25.0;
        let v = target.v_f - MARS * t_go;
        let r = target.r_f - v * t_go - MARS * (0.5 * t_go * t_go);
        let state = LanderState::new(r, v, 1500.0, target.t_f - t_go);
        let (zem, zev) = zem_zev(&state, &target, &MARS).unwrap();
        assert!(zem.norm() < 1e-9 && zev.norm() < 1e-12);
    }

    #[test]
    fn zem_zev_case1_initial() {
        let target = TargetSpec::default();
        let state = LanderState::new(
            Vec3::new(-769.42, -619.63, 2883.33),
            Vec3::new(-16.78, -14.08, -83.36),
            1961.80,
            0.0,
        );
        let (zem, _) = zem_zev(&state, &target, &MARS).unwrap();
        // -r0 - 100 v0 - 5000 g, by hand.
        let by_hand = Vec3::new(
            769.42 + 1678.0,
            619.63 + 1408.0,
            -2883.33 + 8336.0 + 18557.0,
        );
        assert_relative_eq!(zem, by_hand, epsilon = 1e-9);
        assert_relative_eq!(zem, Vec3::new(2447.42, 2027.63, 24009.67), epsilon = 1e-9);
    }

    #[test]
    fn horizon_errors() {
        let target = TargetSpec::default();
        assert!(matches!(
            zem_zev(&at_rest(Vec3::zeros(), 100.0), &target, &MARS),
            Err(Error::GuidanceHorizon { .. })
        ));
        assert!(classical_command(&Vec3::zeros(), &Vec3::zeros(), -1.0).is_err());
        assert!(TargetSpec::new(Vec3::zeros(), Vec3::zeros(), 0.0).is_err());
    }

    #[test]
    fn classical_command_examples() {
        assert_eq!(
            classical_command(&Vec3::zeros(), &Vec3::zeros(), 3.0).unwrap(),
            Vec3::zeros()
        );
        assert_eq!(
            classical_command(&Vec3::x(), &Vec3::zeros(), 1.0).unwrap(),
            Vec3::new(6.0, 0.0, 0.0)
        );
        let a = classical_command(
            &Vec3::new(0.0, 0.0, 185.57),
            &Vec3::new(0.0, 0.0, 37.114),
            10.0,
        )
        .unwrap();
        assert_relative_eq!(a + MARS, Vec3::zeros(), epsilon = 1e-12);
    }

    #[test]
    fn phi_and_p_dot_examples() {
        assert_eq!(phi(0.0, 1.0, 3000.0), 3000.0);
        assert!(phi(1e6, 1.0, 3000.0) < 1e-8);
        assert_relative_eq!(
            phi(44.714, 1.0, 3000.0),
            3000.0 / 2000.341796,
            max_relative = 1e-9
        );
        assert_relative_eq!(phi(44.714, 1.0, 3000.0), 1.4998, epsilon = 1e-4);

        assert_eq!(p_dot(0.0, 1.0, 3000.0, 280.0), 0.0);
        // 3000 * 280 * (-50) * exp(-3000/2501) / 2501^2, evaluated independently.
        let expected = -42_000_000.0 * (-3000.0f64 / 2501.0).exp() / 6_255_001.0;
        assert_relative_eq!(
            p_dot(-50.0, 1.0, 3000.0, 280.0),
            expected,
            max_relative = 1e-14
        );
        assert_relative_eq!(p_dot(-50.0, 1.0, 3000.0, 280.0), -2.023377, epsilon = 1e-6);
    }

    #[test]
    fn critical_distance_examples() {
        let d = critical_distance(1.0, 3000.0);
        assert_relative_eq!(d, 44.714, epsilon = 1e-3);
        // Root of 3u^2 - (4 l1 + 2 l2) u + 2 l1 l2 = 0 with u = d^2 + l1, solved directly.
        let u = (6004.0 + (6004.0f64 * 6004.0 - 24.0 * 3000.0).sqrt()) / 6.0;
        assert_relative_eq!(d, (u - 1.0).sqrt(), max_relative = 1e-12);
        assert_relative_eq!(1.2 * d, 53.6567, epsilon = 1e-4);
        let l = 7.5;
        assert_relative_eq!(
            critical_distance(l, l),
            l.sqrt() * 3f64.powf(-0.25),
            max_relative = 1e-14
        );
    }

    #[test]
    fn divert_peaks_at_critical_distance() {
        let t_go = 30.0;
        let gamma = |d: f64| (p_dot(d, 1.0, 3000.0, 280.0) * t_go * t_go / 12.0).abs();
        let (argmax, _) = (0..=20_000)
            .map(|k| k as f64 * 0.01)
            .map(|d| (d, gamma(d)))
            .fold(
                (0.0, f64::NEG_INFINITY),
                |acc, x| if x.1 > acc.1 { x } else { acc },
            );
        assert!((argmax - critical_distance(1.0, 3000.0)).abs() <= 0.01);
    }

    #[test]
    fn gradient_vanishes_at_critical_distance() {
        let (l1, l2, l3, t_go) = (1.0, 3000.0, 280.0, 50.0);
        let ds = critical_distance(l1, l2);
        let g0 = avoidance_gradient(0.0, l1, l2, l3, t_go);
        let kappa = l2 * l3 * t_go * t_go / 12.0;
        assert_relative_eq!(
            g0,
            kappa * (-l2 / l1).exp() / (l1 * l1),
            max_relative = 1e-14
        );
        // Relative to the gradient scale near d*.
        let scale = kappa / ((ds * ds + l1) * (ds * ds + l1));
        assert!(avoidance_gradient(ds, l1, l2, l3, t_go).abs() / scale < 1e-8);
        assert!(avoidance_gradient(-ds, l1, l2, l3, t_go).abs() / scale < 1e-8);
    }

    #[test]
    fn thrust_bound_examples() {
        assert_relative_eq!(min_thrust_bound(2000.0, 280.0, 0.0), 33466.4, epsilon = 0.1);
        assert_eq!(min_thrust_bound(2000.0, 0.0, 0.0), 0.0);
        assert_relative_eq!(
            min_thrust_bound(1900.0, 280.0, 1.5),
            1900.0 * (280.0 * (-1.5f64).exp()).sqrt(),
            max_relative = 1e-15
        );
        assert_relative_eq!(
            min_thrust_bound(1900.0, 280.0, 1.5),
            15017.99,
            epsilon = 0.01
        );
    }

    #[test]
    fn saturation_examples() {
        let (a, sat) = saturate(&Vec3::new(0.0, 0.0, 15.5), 2000.0, 31000.0);
        assert_eq!((a, sat), (Vec3::new(0.0, 0.0, 15.5), false));
        let (a, sat) = saturate(&Vec3::new(0.0, 0.0, 31.0), 2000.0, 31000.0);
        assert!(sat);
        assert_relative_eq!(a, Vec3::new(0.0, 0.0, 15.5), max_relative = 1e-15);
        assert_eq!(
            saturate(&Vec3::zeros(), 2000.0, 31000.0),
            (Vec3::zeros(), false)
        );
    }

    #[test]
    fn gains_validation() {
        assert!(GuidanceGains::uniform(0.0, 3000.0, 280.0).is_err());
        assert!(GuidanceGains::uniform(1.0, -1.0, 280.0).is_err());
        assert!(GuidanceGains::uniform(1.0, 3000.0, -1.0).is_err());
        assert!(GuidanceGains::uniform(1.0, 3000.0, 0.0).is_ok());
    }

    fn canyon() -> TerrainModel {
        let p = TerrainProfile::symmetric(
            vec![Step::new(500.0, 600.0), Step::new(1000.0, 1000.0)],
            0.05_f64.to_radians(),
        )
        .unwrap();
        TerrainModel::new(p, &Lambdas::uniform(&[20, 6]), 53.67).unwrap()
    }

    #[test]
    fn avoidance_pushes_back_toward_canyon_center() {
        let terrain = canyon();
        let gains = GuidanceGains::uniform(1.0, 3000.0, 280.0).unwrap();
        let state = LanderState::new(Vec3::new(520.0, 0.0, 300.0), Vec3::zeros(), 1900.0, 50.0);
        let cmd = otalg_command(&state, &TargetSpec::default(), &MARS, &terrain, &gains).unwrap();
        assert!(cmd.distance.x < 0.0);
        assert!(cmd.avoidance.x < 0.0);
        assert_relative_eq!(
            cmd.avoidance.x,
            p_dot(cmd.distance.x, 1.0, 3000.0, 280.0) * 2500.0 / 12.0,
            max_relative = 1e-14
        );
    }

    #[test]
    fn far_field_avoidance_vanishes() {
        let gains = GuidanceGains::uniform(1.0, 3000.0, 280.0).unwrap();
        let state = at_rest(Vec3::new(1.0, 2.0, 3.0), 0.0);
        let barrier = BarrierEvaluation {
            rho: Vec3::zeros(),
            distance: Vec3::new(-1e4, 1e4, 1e4),
            segment: [0, 0],
        };
        let target = TargetSpec::default();
        let cmd = otalg_command_at(&state, &target, &MARS, &barrier, &gains).unwrap();
        // Oracle bound: |p_dot(1e4)| * t_go^2 / 12 with t_go = 100. Decays like d^-3.
        let bound = p_dot(1e4, 1.0, 3000.0, 280.0).abs() * 1e4 / 12.0;
        let peak = p_dot(critical_distance(1.0, 3000.0), 1.0, 3000.0, 280.0).abs() * 1e4 / 12.0;
        assert!(bound < 1e-3 && bound / peak < 1e-6);
        assert!(cmd.avoidance.norm() <= 3f64.sqrt() * bound * (1.0 + 1e-12));
    }

    proptest! {
        #[test]
        fn p_dot_sign_follows_distance(d in -5000.0..5000.0f64, l1 in 0.1..10.0f64, l2 in 1.0..5000.0f64, l3 in 0.1..500.0f64) {
            prop_assume!(d != 0.0);
            let p = p_dot(d, l1, l2, l3);
            prop_assume!(p != 0.0);
            prop_assert_eq!(p.signum(), d.signum());
        }

        #[test]
        fn zero_l3_reduces_to_classical(
            rx in -2000.0..2000.0f64, ry in -2000.0..2000.0f64, rz in 0.0..3000.0f64,
            vx in -50.0..50.0f64, vy in -50.0..50.0f64, vz in -100.0..20.0f64, t in 0.0..99.0f64,
        ) {
            let terrain = canyon();
            let gains = GuidanceGains::uniform(1.0, 3000.0, 0.0).unwrap();
            let state = LanderState::new(Vec3::new(rx, ry, rz), Vec3::new(vx, vy, vz), 1900.0, t);
            let target = TargetSpec::default();
            let cmd = otalg_command(&state, &target, &MARS, &terrain, &gains).unwrap();
            let (zem, zev) = zem_zev(&state, &target, &MARS).unwrap();
            let classical = classical_command(&zem, &zev, target.time_to_go(t)).unwrap();
            prop_assert_eq!(cmd.accel, classical);
        }

        #[test]
        fn saturation_preserves_direction(ax in -50.0..50.0f64, ay in -50.0..50.0f64, az in -50.0..50.0f64, m in 100.0..3000.0f64) {
            let a = Vec3::new(ax, ay, az);
            let (out, sat) = saturate(&a, m, 31000.0);
            prop_assert!(out.cross(&a).norm() <= 1e-12 * a.norm_squared().max(1.0));
            prop_assert!(out.dot(&a) >= 0.0);
            prop_assert!(m * out.norm() <= 31000.0);
            if sat {
                prop_assert!((m * out.norm() - 31000.0).abs() <= 1e-9 * 31000.0);
            }
        }

        #[test]
        fn hover_at_target(t in 0.0..99.9f64) {
            let target = TargetSpec::default();
            let (zem, zev) = zem_zev(&at_rest(Vec3::zeros(), t), &target, &MARS).unwrap();
            let a = classical_command(&zem, &zev, target.time_to_go(t)).unwrap();
            prop_assert!((a + MARS).norm() <= 1e-12);
        }
    }
}
