//! Gain and margin sanity checks that do not need a simulation.

use std::fmt::{self, Write};

use otalg_core::guidance::{critical_distance, min_thrust_bound, phi};
use serde::Serialize;

use crate::config::RunConfigFile;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AxisDesign {
    pub axis: &'static str,
    pub l1: f64,
    pub l2: f64,
    pub l3: f64,
    pub d_star: f64,
    pub phi_at_d_star: f64,
    /// Thrust needed for the full avoidance push at `phi = 0`, i.e. on the barrier.
    pub bound_on_barrier: f64,
    pub bound_at_d_star: f64,
    pub satisfied_on_barrier: bool,
    pub satisfied_at_d_star: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DesignReport {
    pub delta: f64,
    pub delta_spec: String,
    /// `delta` must exceed every axis critical distance.
    pub delta_exceeds_d_star: bool,
    /// `delta` must stay below the smallest step rise.
    pub min_step_rise: f64,
    pub delta_below_min_rise: bool,
    /// Mass used for the thrust bounds: the mean of the initial mass distribution.
    pub m0: f64,
    pub t_max: f64,
    pub axes: Vec<AxisDesign>,
}

pub fn design_report(cfg: &RunConfigFile) -> anyhow::Result<DesignReport> {
    let gains = cfg.gains()?;
    let terrain = cfg.terrain()?;
    let delta = cfg.delta()?;
    let m0 = cfg.montecarlo.distribution.mass.mean();
    let t_max = cfg.env.t_max;

    let axes: Vec<AxisDesign> = ["x", "y", "z"]
        .into_iter()
        .enumerate()
        .map(|(i, axis)| {
            let (l1, l2, l3) = (gains.l1[i], gains.l2[i], gains.l3[i]);
            let d_star = critical_distance(l1, l2);
            let phi_at_d_star = phi(d_star, l1, l2);
            let bound_on_barrier = min_thrust_bound(m0, l3, 0.0);
            let bound_at_d_star = min_thrust_bound(m0, l3, phi_at_d_star);
            AxisDesign {
                axis,
                l1,
                l2,
                l3,
                d_star,
                phi_at_d_star,
                bound_on_barrier,
                bound_at_d_star,
                satisfied_on_barrier: bound_on_barrier <= t_max,
                satisfied_at_d_star: bound_at_d_star <= t_max,
            }
        })
        .collect();

    let min_step_rise = terrain.profile.min_rise();
    Ok(DesignReport {
        delta,
        delta_spec: cfg.terrain.delta.to_string(),
        delta_exceeds_d_star: axes.iter().all(|a| delta > a.d_star),
        min_step_rise,
        delta_below_min_rise: delta < min_step_rise,
        m0,
        t_max,
        axes,
    })
}

fn verdict(ok: bool) -> &'static str {
    if ok {
        "satisfied"
    } else {
        "not satisfied at worst case"
    }
}

impl fmt::Display for DesignReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut s = String::new();
        for a in &self.axes {
            writeln!(
                s,
                "axis {}: d* = {:.2} m, phi(d*) = {:.4}",
                a.axis, a.d_star, a.phi_at_d_star
            )?;
            writeln!(
                s,
                "  thrust bound at phi = 0:     {:>10.1} N ({})",
                a.bound_on_barrier,
                verdict(a.satisfied_on_barrier)
            )?;
            writeln!(
                s,
                "  thrust bound at phi(d*):     {:>10.1} N ({})",
                a.bound_at_d_star,
                verdict(a.satisfied_at_d_star)
            )?;
        }
        writeln!(s, "delta = {:.2} m ({})", self.delta, self.delta_spec)?;
        writeln!(
            s,
            "  exceeds d* on every axis: {}; below smallest step rise {:.1} m: {}",
            self.delta_exceeds_d_star, self.min_step_rise, self.delta_below_min_rise
        )?;
        write!(s, "m0 = {:.1} kg, T_max = {:.1} N", self.m0, self.t_max)?;
        f.write_str(&s)
    }
}
