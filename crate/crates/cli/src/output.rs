use std::fs;
use std::path::Path;

use anyhow::Context;
use otalg_core::guidance::GuidanceLaw;
use otalg_core::{MonteCarloResult, RunStats, TrajectorySample};
use serde::Serialize;

pub const TRAJECTORY_HEADER: [&str; 19] = [
    "t",
    "rx",
    "ry",
    "rz",
    "vx",
    "vy",
    "vz",
    "m",
    "ax_cmd",
    "ay_cmd",
    "az_cmd",
    "ax_app",
    "ay_app",
    "az_app",
    "thrust_norm",
    "dx",
    "dy",
    "dz",
    "saturated",
];

pub const RUNS_HEADER: [&str; 21] = [
    "run",
    "law",
    "redraws",
    "rx0",
    "ry0",
    "rz0",
    "vx0",
    "vy0",
    "vz0",
    "m0",
    "fuel_used",
    "landing_error",
    "terminal_speed",
    "collided",
    "completed",
    "max_thrust",
    "saturation_fraction",
    "min_clearance",
    "steps",
    "final_time",
    "failure",
];

pub fn law_name(law: GuidanceLaw) -> &'static str {
    match law {
        GuidanceLaw::Otalg => "otalg",
        GuidanceLaw::Classical => "classical",
    }
}

pub fn write_trajectory(path: &Path, samples: &[TrajectorySample]) -> anyhow::Result<()> {
    let mut w =
        csv::Writer::from_path(path).with_context(|| format!("creating {}", path.display()))?;
    w.write_record(TRAJECTORY_HEADER)?;
    for s in samples {
        let mut row: Vec<String> = Vec::with_capacity(TRAJECTORY_HEADER.len());
        row.push(s.t.to_string());
        row.extend(s.r.iter().chain(s.v.iter()).map(f64::to_string));
        row.push(s.m.to_string());
        row.extend(s.a_cmd.iter().chain(s.a_applied.iter()).map(f64::to_string));
        row.push(s.thrust_norm.to_string());
        row.extend(s.distance.iter().map(f64::to_string));
        row.push(u8::from(s.saturated).to_string());
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_runs(path: &Path, result: &MonteCarloResult) -> anyhow::Result<()> {
    let mut w =
        csv::Writer::from_path(path).with_context(|| format!("creating {}", path.display()))?;
    w.write_record(RUNS_HEADER)?;
    for (i, ic) in result.initial.iter().enumerate() {
        for law in [GuidanceLaw::Otalg, GuidanceLaw::Classical] {
            let s: &RunStats = &result.stats(law)[i];
            let st = &ic.state;
            let mut row = vec![
                i.to_string(),
                law_name(law).to_string(),
                ic.redraws.to_string(),
            ];
            row.extend(st.r.iter().chain(st.v.iter()).map(f64::to_string));
            row.push(st.m.to_string());
            row.extend([
                s.fuel_used.to_string(),
                s.landing_error.to_string(),
                s.terminal_speed.to_string(),
                s.collided.to_string(),
                s.completed.to_string(),
                s.max_thrust.to_string(),
                s.saturation_fraction.to_string(),
                s.min_clearance.to_string(),
                s.steps.to_string(),
                s.final_time.to_string(),
                s.failure.clone().unwrap_or_default(),
            ]);
            w.write_record(&row)?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> anyhow::Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    fs::write(path, text + "\n").with_context(|| format!("writing {}", path.display()))
}
