use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};
use otalg_cli::design::design_report;
use otalg_cli::output::{law_name, write_json, write_runs, write_trajectory};
use otalg_cli::RunConfigFile;
use otalg_core::dynamics::LanderState;
use otalg_core::guidance::GuidanceLaw;
use otalg_core::simulation::{compare_fuel, run_episode, run_monte_carlo, summarize};
use otalg_core::{presets, RunStats, Vec3};
use serde_json::json;

/// `println!` that tolerates a closed stdout (e.g. piping into `head`).
macro_rules! say {
    ($($arg:tt)*) => {{
        use std::io::Write;
        let _ = writeln!(std::io::stdout().lock(), $($arg)*);
    }};
}

/// Terrain-avoiding powered-descent guidance simulator.
///
/// Exit codes: 0 success, 1 configuration or input error, 2 collision, 3 aborted run.
#[derive(Parser)]
#[command(version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// JSON run configuration. Missing keys take the reference defaults.
    config: Option<PathBuf>,
    /// Enable the bounded sinusoidal acceleration perturbation.
    #[arg(long)]
    perturb: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Fly one closed-loop descent and log the trajectory.
    Simulate {
        #[command(flatten)]
        common: Common,
        /// `case1`..`case3`, `1`..`3`, or an inline `rx,ry,rz,vx,vy,vz,m`.
        #[arg(long, default_value = "case1")]
        ic: String,
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
    /// Run both guidance laws over the dispersed initial conditions and compare fuel.
    Montecarlo {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
    /// Print critical distances, the safety margin and thrust bounds for the gains.
    DesignReport {
        #[command(flatten)]
        common: Common,
        /// Also write `design_report.json` here.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Print JSON instead of text.
        #[arg(long)]
        json: bool,
    },
    /// Print the effective configuration with all defaults filled in.
    Config {
        #[command(flatten)]
        common: Common,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Outcome {
    Success,
    Collision,
    Abort,
}

impl Outcome {
    fn of(stats: &[&RunStats]) -> Self {
        if stats.iter().any(|s| s.collided) {
            Outcome::Collision
        } else if stats.iter().any(|s| s.failure.is_some()) {
            Outcome::Abort
        } else {
            Outcome::Success
        }
    }

    fn code(self) -> ExitCode {
        match self {
            Outcome::Success => ExitCode::SUCCESS,
            Outcome::Collision => ExitCode::from(2),
            Outcome::Abort => ExitCode::from(3),
        }
    }
}

fn load(common: &Common) -> anyhow::Result<RunConfigFile> {
    let mut cfg = match &common.config {
        Some(path) => RunConfigFile::load(path)?,
        None => RunConfigFile::default(),
    };
    if common.perturb {
        cfg.env.perturbation = true;
    }
    Ok(cfg)
}

fn parse_ic(spec: &str) -> anyhow::Result<LanderState> {
    let named = spec.strip_prefix("case").unwrap_or(spec);
    if let Ok(k) = named.parse::<usize>() {
        return presets::case(k).with_context(|| format!("no preset initial condition {spec:?}"));
    }
    let v: Vec<f64> = spec
        .split(',')
        .map(|x| x.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .with_context(|| format!("--ic {spec:?}: expected case1..case3 or rx,ry,rz,vx,vy,vz,m"))?;
    if v.len() != 7 {
        bail!(
            "--ic {spec:?}: expected 7 comma-separated numbers, got {}",
            v.len()
        );
    }
    Ok(LanderState::new(
        Vec3::new(v[0], v[1], v[2]),
        Vec3::new(v[3], v[4], v[5]),
        v[6],
        0.0,
    ))
}

fn prepare_out(dir: &Path) -> anyhow::Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("creating output directory {}", dir.display()))
}

fn simulate(common: &Common, ic: &str, out: &Path) -> anyhow::Result<Outcome> {
    let cfg = load(common)?;
    let scenario = cfg.scenario()?;
    let initial = parse_ic(ic)?;
    let episode = run_episode(&scenario, &initial)?;
    prepare_out(out)?;
    write_trajectory(&out.join("trajectory.csv"), &episode.log.samples)?;
    write_json(&out.join("stats.json"), &episode.stats)?;

    let s = &episode.stats;
    say!(
        "{}: fuel {:.2} kg, landing error {:.3} m, terminal speed {:.3} m/s, collided {}, t = {:.2} s",
        law_name(scenario.config.law),
        s.fuel_used,
        s.landing_error,
        s.terminal_speed,
        s.collided,
        s.final_time
    );
    if let Some(why) = &s.failure {
        eprintln!("run aborted: {why}");
    }
    Ok(Outcome::of(&[s]))
}

fn montecarlo(common: &Common, out: &Path) -> anyhow::Result<Outcome> {
    let cfg = load(common)?;
    let scenario = cfg.scenario()?;
    let mc = cfg.montecarlo()?;
    let started = Instant::now();
    let result = run_monte_carlo(&scenario, &mc)?;
    let elapsed = started.elapsed();

    let otalg = summarize(&result.otalg)?;
    let classical = summarize(&result.classical)?;
    let comparison = compare_fuel(&result.otalg, &result.classical, cfg.montecarlo.alpha);

    prepare_out(out)?;
    write_runs(&out.join("runs.csv"), &result)?;
    write_json(
        &out.join("summary.json"),
        &json!({
            "runs": mc.runs,
            "seed": mc.seed,
            "perturbation": scenario.config.env.perturbation,
            "initial_state_redraws": result.total_redraws(),
            "otalg": otalg,
            "classical": classical,
        }),
    )?;
    write_json(
        &out.join("ttest.json"),
        &json!({ "difference": "fuel(otalg) - fuel(classical)", "comparison": comparison }),
    )?;

    say!(
        "{} runs in {:.1} s ({} initial states redrawn)",
        mc.runs,
        elapsed.as_secs_f64(),
        result.total_redraws()
    );
    for (law, s) in [
        (GuidanceLaw::Otalg, &otalg),
        (GuidanceLaw::Classical, &classical),
    ] {
        say!(
            "{:>9}: median fuel {:.2} kg, collisions {}, aborted {}",
            law_name(law),
            s.fuel.median,
            s.collisions,
            s.aborted
        );
    }
    match (&comparison.ttest, &comparison.ttest_error) {
        (Some(t), _) => say!(
            "paired t-test over {} pairs: d = {:.4} kg, se = {:.4}, t = {:.4}, t_crit = {:.4}, reject H0: {}",
            t.n, t.d_bar, t.se_d, t.t, t.t_crit, t.reject
        ),
        (None, Some(e)) => say!("paired t-test unavailable: {e}"),
        (None, None) => {}
    }
    Ok(Outcome::of(&result.otalg.iter().collect::<Vec<_>>()))
}

fn report(common: &Common, out: Option<&Path>, as_json: bool) -> anyhow::Result<Outcome> {
    let cfg = load(common)?;
    let r = design_report(&cfg)?;
    if as_json {
        say!("{}", serde_json::to_string_pretty(&r)?);
    } else {
        say!("{r}");
    }
    if let Some(dir) = out {
        prepare_out(dir)?;
        write_json(&dir.join("design_report.json"), &r)?;
    }
    Ok(Outcome::Success)
}

fn print_config(common: &Common) -> anyhow::Result<Outcome> {
    let cfg = load(common)?;
    // Validate before echoing so a bad file still exits 1.
    cfg.scenario()?;
    cfg.montecarlo()?;
    say!("{}", serde_json::to_string_pretty(&cfg)?);
    Ok(Outcome::Success)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Simulate { common, ic, out } => simulate(common, ic, out),
        Command::Montecarlo { common, out } => montecarlo(common, out),
        Command::DesignReport { common, out, json } => report(common, out.as_deref(), *json),
        Command::Config { common } => print_config(common),
    };
    match result {
        Ok(outcome) => outcome.code(),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
