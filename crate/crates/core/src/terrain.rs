//! Step-polygon terrain and the barrier surfaces around it.
//!
//! The terrain around the landing site is a canyon whose walls are staircases: along each
//! horizontal axis `i` the `j`-th step has height `h_ij` above the landing plane and starts
//! at lateral distance `w_ij` from the origin. Step 0 is implicit (`h = w = 0`).
//!
//! Horizontal motion is fenced by one barrier polynomial per step plus a linear barrier
//! above the top step:
//!
//! ```text
//! rho_ij(r_z) = ±( beta_ij (r_z + gamma_ij)^(1/lambda_ij) + alpha_ij ),  h_i(j-1) <= r_z <= h_ij
//! rho_i(n+1)  = ±( beta_i(n+1) (r_z + gamma_i(n+1)) + alpha_i(n+1) ),     r_z >= h_in
//! ```
//!
//! Vertical motion is fenced by a floor `rho_z` placed a margin `delta` above a step height
//! chosen from the lander's lateral position.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::Vec3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Step {
    /// Height above the landing plane, m.
    pub height: f64,
    /// Lateral distance from the landing site where the step starts, m.
    pub width: f64,
}

impl Step {
    pub const fn new(height: f64, width: f64) -> Self {
        Self { height, width }
    }
}

/// Horizontal axis selector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Axis {
    X,
    Y,
}

impl Axis {
    pub const ALL: [Axis; 2] = [Axis::X, Axis::Y];

    fn index(self) -> usize {
        match self {
            Axis::X => 0,
            Axis::Y => 1,
        }
    }
}

/// Which side of the canyon a horizontal barrier is taken on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Positive,
    Negative,
}

impl Side {
    /// Side of a coordinate; zero maps to [`Side::Positive`].
    pub fn of(coordinate: f64) -> Self {
        if coordinate < 0.0 {
            Side::Negative
        } else {
            Side::Positive
        }
    }

    fn sign(self) -> f64 {
        match self {
            Side::Positive => 1.0,
            Side::Negative => -1.0,
        }
    }
}

/// Staircase approximation of the terrain, independently along x and y.
#[derive(Debug, Clone, PartialEq)]
pub struct TerrainProfile {
    steps: [Vec<Step>; 2],
    plateau_angle: f64,
}

impl TerrainProfile {
    /// `plateau_angle` is the slope of the barrier above the top step, in radians.
    pub fn new(x: Vec<Step>, y: Vec<Step>, plateau_angle: f64) -> Result<Self> {
        validate_steps("x", &x)?;
        validate_steps("y", &y)?;
        if !(plateau_angle > 0.0 && plateau_angle < std::f64::consts::FRAC_PI_2) {
            return Err(Error::validation(
                "plateau_angle",
                format!("{plateau_angle} rad is outside (0, pi/2)"),
            ));
        }
        Ok(Self {
            steps: [x, y],
            plateau_angle,
        })
    }

    /// Same staircase along both axes.
    pub fn symmetric(steps: Vec<Step>, plateau_angle: f64) -> Result<Self> {
        Self::new(steps.clone(), steps, plateau_angle)
    }

    pub fn steps(&self, axis: Axis) -> &[Step] {
        &self.steps[axis.index()]
    }

    pub fn plateau_angle(&self) -> f64 {
        self.plateau_angle
    }

    /// Ground height under `(x, y)`.
    ///
    /// Per axis this is the height of the outermost step whose width has been reached; the
    /// terrain is flat at the top step height beyond the last width. The result is the
    /// maximum over both axes.
    pub fn height(&self, x: f64, y: f64) -> f64 {
        let along = |steps: &[Step], coordinate: f64| {
            let reach = coordinate.abs();
            steps
                .iter()
                .take_while(|s| reach >= s.width)
                .last()
                .map_or(0.0, |s| s.height)
        };
        along(&self.steps[0], x).max(along(&self.steps[1], y))
    }

    /// True iff `r` is strictly below the ground.
    pub fn collides(&self, r: &Vec3) -> bool {
        r.z < self.height(r.x, r.y)
    }

    /// Smallest rise between consecutive steps over both axes (step 0 at height 0).
    pub fn min_rise(&self) -> f64 {
        self.steps
            .iter()
            .flat_map(|steps| {
                std::iter::once(0.0)
                    .chain(steps.iter().map(|s| s.height))
                    .collect::<Vec<_>>()
                    .windows(2)
                    .map(|w| w[1] - w[0])
                    .collect::<Vec<_>>()
            })
            .fold(f64::INFINITY, f64::min)
    }
}

fn validate_steps(axis: &str, steps: &[Step]) -> Result<()> {
    if steps.is_empty() {
        return Err(Error::Construction(format!(
            "{axis}-axis profile has no steps"
        )));
    }
    let mut prev = Step::new(0.0, 0.0);
    for (j, s) in steps.iter().enumerate() {
        if !(s.height.is_finite() && s.width.is_finite()) {
            return Err(Error::Construction(format!(
                "{axis}-axis step {} is not finite",
                j + 1
            )));
        }
        if s.height <= prev.height || s.width <= prev.width {
            return Err(Error::Construction(format!(
                "{axis}-axis step {} (h = {}, w = {}) does not rise above step {} (h = {}, w = {})",
                j + 1,
                s.height,
                s.width,
                j,
                prev.height,
                prev.width
            )));
        }
        prev = *s;
    }
    Ok(())
}

/// Per-axis, per-step barrier exponents. Each must be even and at least 2.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Lambdas {
    pub x: Vec<u32>,
    pub y: Vec<u32>,
}

impl Lambdas {
    pub fn uniform(per_step: &[u32]) -> Self {
        Self {
            x: per_step.to_vec(),
            y: per_step.to_vec(),
        }
    }
}

/// How the vertical floor is chosen once the lander is above the top step.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FloorRule {
    /// The floor always follows the step under the lander's lateral position, including
    /// above the top step. Over the canyon the lander is never held above the plateau.
    #[default]
    LateralBracket,
    /// Above the top step the floor is the top step plus margin regardless of lateral
    /// position.
    PlateauCap,
}

/// One piece of a horizontal barrier.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BarrierSegment {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    /// Root order; 1 for the linear segment above the top step.
    pub lambda: u32,
    /// Altitude range covered, `[lower, upper]`. `upper` is infinite for the last segment.
    pub lower: f64,
    pub upper: f64,
    // w_j - w_(j-1) and h_j - h_(j-1), kept so that breakpoints evaluate to w_j exactly.
    span: f64,
    rise: f64,
}

impl BarrierSegment {
    /// Unsigned barrier value at altitude `r_z` (caller guarantees `r_z` is in range).
    pub fn value(&self, r_z: f64) -> f64 {
        if self.lambda == 1 {
            self.beta * (r_z + self.gamma) + self.alpha
        } else {
            // alpha + beta (r_z + gamma)^(1/lambda), written so that r_z = upper gives
            // alpha + span with no rounding in the ratio.
            let u = ((r_z + self.gamma) / self.rise).max(0.0);
            self.alpha + self.span * u.powf(1.0 / f64::from(self.lambda))
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AxisBarrier {
    segments: Vec<BarrierSegment>,
}

impl AxisBarrier {
    pub fn segments(&self) -> &[BarrierSegment] {
        &self.segments
    }

    fn locate(&self, r_z: f64) -> usize {
        self.segments
            .iter()
            .position(|s| r_z <= s.upper)
            .unwrap_or(self.segments.len() - 1)
    }
}

/// Precomputed barrier polynomials for both horizontal axes plus the vertical margin.
#[derive(Debug, Clone, PartialEq)]
pub struct BarrierSet {
    axes: [AxisBarrier; 2],
    delta: f64,
    floor_rule: FloorRule,
}

/// Barrier values and signed distances at one position.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BarrierEvaluation {
    /// Active barrier value per axis (rho_x, rho_y, rho_z), m.
    pub rho: Vec3,
    /// Signed distance `r_i - rho_i` per axis, m.
    pub distance: Vec3,
    /// Zero-based horizontal barrier segment used for x and y.
    pub segment: [usize; 2],
}

impl BarrierSet {
    /// Builds the barrier coefficients for `profile`.
    ///
    /// `delta` is the vertical margin; it must be positive and smaller than every step
    /// rise.
    pub fn build(profile: &TerrainProfile, lambdas: &Lambdas, delta: f64) -> Result<Self> {
        let slope = (std::f64::consts::FRAC_PI_2 - profile.plateau_angle()).tan();
        let mut axes = Vec::with_capacity(2);
        for (axis, exps) in Axis::ALL.into_iter().zip([&lambdas.x, &lambdas.y]) {
            let steps = profile.steps(axis);
            if exps.len() != steps.len() {
                return Err(Error::validation(
                    "lambda",
                    format!(
                        "{:?}-axis has {} steps but {} exponents",
                        axis,
                        steps.len(),
                        exps.len()
                    ),
                ));
            }
            let mut segments = Vec::with_capacity(steps.len() + 1);
            let mut prev = Step::new(0.0, 0.0);
            for (s, &lambda) in steps.iter().zip(exps) {
                if lambda < 2 || lambda % 2 != 0 {
                    return Err(Error::validation(
                        "lambda",
                        format!("{lambda} is not an even integer >= 2"),
                    ));
                }
                let span = s.width - prev.width;
                let rise = s.height - prev.height;
                segments.push(BarrierSegment {
                    alpha: prev.width,
                    beta: span / rise.powf(1.0 / f64::from(lambda)),
                    gamma: -prev.height,
                    lambda,
                    lower: prev.height,
                    upper: s.height,
                    span,
                    rise,
                });
                prev = *s;
            }
            segments.push(BarrierSegment {
                alpha: prev.width,
                beta: slope,
                gamma: -prev.height,
                lambda: 1,
                lower: prev.height,
                upper: f64::INFINITY,
                span: f64::INFINITY,
                rise: f64::INFINITY,
            });
            axes.push(AxisBarrier { segments });
        }

        let max_delta = profile.min_rise();
        if !(delta > 0.0 && delta < max_delta) {
            return Err(Error::validation(
                "delta",
                format!("{delta} m is outside (0, {max_delta}) (must be below every step rise)"),
            ));
        }

        let y = axes.pop().expect("two axes");
        let x = axes.pop().expect("two axes");
        Ok(Self {
            axes: [x, y],
            delta,
            floor_rule: FloorRule::default(),
        })
    }

    pub fn with_floor_rule(mut self, rule: FloorRule) -> Self {
        self.floor_rule = rule;
        self
    }

    pub fn axis(&self, axis: Axis) -> &AxisBarrier {
        &self.axes[axis.index()]
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn floor_rule(&self) -> FloorRule {
        self.floor_rule
    }

    /// Signed horizontal barrier at altitude `r_z` and the zero-based segment used.
    pub fn horizontal(&self, axis: Axis, r_z: f64, side: Side) -> Result<(f64, usize)> {
        check_altitude(r_z)?;
        let barrier = self.axis(axis);
        let j = barrier.locate(r_z);
        Ok((side.sign() * barrier.segments[j].value(r_z), j))
    }

    /// Vertical floor `rho_z` at position `r`.
    ///
    /// Along each axis: `k` is the outermost step whose width the lateral infinity-norm has
    /// reached (the step under the lander) and `j` the step whose height bracket contains
    /// `r_z`. Inside the staircase the floor is `min(h_k, h_j) + delta`, which reduces to
    /// `h_(j-1) + delta` when the lander is laterally within step `j-1..j` and to
    /// `h_j + delta` once it is laterally past `w_j`. Above the top step the floor depends
    /// on [`FloorRule`]. The result is the larger floor of the two axes.
    pub fn vertical(&self, profile: &TerrainProfile, r: &Vec3) -> Result<f64> {
        check_altitude(r.z)?;
        let lateral = r.x.abs().max(r.y.abs());
        let floor = Axis::ALL
            .into_iter()
            .map(|axis| {
                let steps = profile.steps(axis);
                let top = steps[steps.len() - 1].height;
                if r.z >= top && self.floor_rule == FloorRule::PlateauCap {
                    return top;
                }
                let under = steps
                    .iter()
                    .take_while(|s| lateral >= s.width)
                    .last()
                    .map_or(0.0, |s| s.height);
                let bracket = steps
                    .iter()
                    .find(|s| r.z <= s.height)
                    .map_or(top, |s| s.height);
                under.min(bracket)
            })
            .fold(f64::NEG_INFINITY, f64::max);
        Ok(floor + self.delta)
    }

    /// Barrier values and signed distances `d_i = r_i - rho_i` for all three axes.
    ///
    /// Horizontal barriers are taken on the lander's side of the canyon, so inside the
    /// envelope `d_x` and `d_y` have the opposite sign of `r_x` and `r_y`.
    pub fn evaluate(&self, profile: &TerrainProfile, r: &Vec3) -> Result<BarrierEvaluation> {
        let (rho_x, seg_x) = self.horizontal(Axis::X, r.z, Side::of(r.x))?;
        let (rho_y, seg_y) = self.horizontal(Axis::Y, r.z, Side::of(r.y))?;
        let rho_z = self.vertical(profile, r)?;
        let rho = Vec3::new(rho_x, rho_y, rho_z);
        Ok(BarrierEvaluation {
            rho,
            distance: r - rho,
            segment: [seg_x, seg_y],
        })
    }
}

fn check_altitude(r_z: f64) -> Result<()> {
    if r_z >= 0.0 {
        Ok(())
    } else {
        Err(Error::Domain(format!(
            "barrier evaluated at r_z = {r_z} m, below the landing plane"
        )))
    }
}

/// Terrain profile and its barriers, bundled for the guidance loop.
#[derive(Debug, Clone, PartialEq)]
pub struct TerrainModel {
    pub profile: TerrainProfile,
    pub barriers: BarrierSet,
}

impl TerrainModel {
    pub fn new(profile: TerrainProfile, lambdas: &Lambdas, delta: f64) -> Result<Self> {
        let barriers = BarrierSet::build(&profile, lambdas, delta)?;
        Ok(Self { profile, barriers })
    }

    pub fn with_floor_rule(mut self, rule: FloorRule) -> Self {
        self.barriers = self.barriers.with_floor_rule(rule);
        self
    }

    pub fn evaluate(&self, r: &Vec3) -> Result<BarrierEvaluation> {
        self.barriers.evaluate(&self.profile, r)
    }

    pub fn vertical(&self, r: &Vec3) -> Result<f64> {
        self.barriers.vertical(&self.profile, r)
    }

    pub fn height(&self, x: f64, y: f64) -> f64 {
        self.profile.height(x, y)
    }

    pub fn collides(&self, r: &Vec3) -> bool {
        self.profile.collides(r)
    }

    /// Altitude above the ground directly below `r`.
    pub fn clearance(&self, r: &Vec3) -> f64 {
        r.z - self.height(r.x, r.y)
    }
}
