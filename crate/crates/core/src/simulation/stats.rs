use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

use super::RunStats;
use crate::error::{Error, Result};

/// Paired t-test on `d_i = a_i - b_i`, two-sided.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TTestResult {
    pub n: usize,
    /// Mean paired difference.
    pub d_bar: f64,
    /// Standard error of the mean difference.
    pub se_d: f64,
    pub t: f64,
    pub df: usize,
    pub alpha: f64,
    /// Two-sided critical value at `alpha`.
    pub t_crit: f64,
    /// `|t| > t_crit`.
    pub reject: bool,
}

/// Two-sided critical value of Student's t with `df` degrees of freedom.
pub fn student_t_critical(df: f64, alpha: f64) -> Result<f64> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::validation(
            "alpha",
            format!("{alpha} is outside (0, 1)"),
        ));
    }
    let dist = StudentsT::new(0.0, 1.0, df).map_err(|e| Error::validation("df", e.to_string()))?;
    Ok(dist.inverse_cdf(1.0 - alpha / 2.0))
}

pub fn paired_t_test(a: &[f64], b: &[f64], alpha: f64) -> Result<TTestResult> {
    if a.len() != b.len() {
        return Err(Error::validation(
            "samples",
            format!(
                "paired samples differ in length ({} vs {})",
                a.len(),
                b.len()
            ),
        ));
    }
    let n = a.len();
    if n < 2 {
        return Err(Error::DegenerateTest(format!("{n} pairs; need at least 2")));
    }
    let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    let nf = n as f64;
    let d_bar = d.iter().sum::<f64>() / nf;
    let var = d.iter().map(|x| (x - d_bar).powi(2)).sum::<f64>() / (nf - 1.0);
    let se_d = (var / nf).sqrt();
    let df = n - 1;
    let t_crit = student_t_critical(df as f64, alpha)?;

    if se_d == 0.0 {
        return Err(Error::DegenerateTest(format!(
            "paired differences have zero variance (all equal to {d_bar})"
        )));
    }
    let t = d_bar / se_d;
    Ok(TTestResult {
        n,
        d_bar,
        se_d,
        t,
        df,
        alpha,
        t_crit,
        reject: t.abs() > t_crit,
    })
}

/// Linear-interpolation quantile (Hyndman-Fan type 7) of already sorted data.
pub fn quantile(sorted: &[f64], p: f64) -> f64 {
    assert!(!sorted.is_empty(), "quantile of empty data");
    let h = (sorted.len() - 1) as f64 * p.clamp(0.0, 1.0);
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Five-number summary.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Quantiles {
    pub min: f64,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub max: f64,
}

impl Quantiles {
    pub fn of(values: impl IntoIterator<Item = f64>) -> Option<Self> {
        let mut v: Vec<f64> = values.into_iter().collect();
        if v.is_empty() {
            return None;
        }
        v.sort_by(f64::total_cmp);
        Some(Self {
            min: v[0],
            q1: quantile(&v, 0.25),
            median: quantile(&v, 0.5),
            q3: quantile(&v, 0.75),
            max: v[v.len() - 1],
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub runs: usize,
    pub completed: usize,
    pub collisions: usize,
    pub aborted: usize,
    pub fuel: Quantiles,
    pub landing_error: Quantiles,
    pub terminal_speed: Quantiles,
    pub collision_rate: f64,
    /// Fraction of runs that hit the thrust limit at least once.
    pub saturation_rate: f64,
    pub mean_saturation_fraction: f64,
}

pub fn summarize(stats: &[RunStats]) -> Result<Summary> {
    let n = stats.len();
    let pick = |f: fn(&RunStats) -> f64| Quantiles::of(stats.iter().map(f));
    let (Some(fuel), Some(landing_error), Some(terminal_speed)) = (
        pick(|s| s.fuel_used),
        pick(|s| s.landing_error),
        pick(|s| s.terminal_speed),
    ) else {
        return Err(Error::validation("stats", "nothing to summarize"));
    };
    let nf = n as f64;
    let collisions = stats.iter().filter(|s| s.collided).count();
    Ok(Summary {
        runs: n,
        completed: stats.iter().filter(|s| s.completed).count(),
        collisions,
        aborted: stats.iter().filter(|s| s.failure.is_some()).count(),
        fuel,
        landing_error,
        terminal_speed,
        collision_rate: collisions as f64 / nf,
        saturation_rate: stats.iter().filter(|s| s.saturation_fraction > 0.0).count() as f64 / nf,
        mean_saturation_fraction: stats.iter().map(|s| s.saturation_fraction).sum::<f64>() / nf,
    })
}
