use std::fmt::Write as _;
use std::io::Write as _;
use std::path::Path;

use anyhow::{Context, Result};
use isotherm_core::protocol::WorkSummary;
use isotherm_core::Schedule;
use serde::Serialize;

/// Rounds to `digits` significant digits and prints the shortest decimal
/// representation of the rounded value.
pub fn sig(x: f64, digits: usize) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return x.to_string();
    }
    let rounded: f64 = format!("{:.*e}", digits.saturating_sub(1), x).parse().expect("valid float");
    rounded.to_string()
}

pub const CSV_DIGITS: usize = 12;

pub fn run_csv(schedule: &Schedule, summary: &WorkSummary) -> String {
    let mut out = String::from("step,t,omega,p_e,W_step,W_cumulative\n");
    let mut cumulative = 0.0;
    for (i, (&p, &w)) in summary.populations.iter().zip(&summary.step_works).enumerate() {
        let j = i + 1;
        cumulative += w;
        writeln!(
            out,
            "{j},{},{},{},{},{}",
            sig(j as f64 * schedule.delta_tau(), CSV_DIGITS),
            sig(schedule.omegas()[j], CSV_DIGITS),
            sig(p, CSV_DIGITS),
            sig(w, CSV_DIGITS),
            sig(cumulative, CSV_DIGITS),
        )
        .expect("writing to a String");
    }
    out
}

#[derive(Serialize)]
struct RunJson<'a> {
    mean_work: f64,
    #[serde(rename = "delta_F")]
    delta_f: f64,
    extra_work: f64,
    #[serde(rename = "N")]
    num_steps: usize,
    delta_tau: f64,
    mode: &'a str,
    shots: Option<u64>,
    seed: Option<u64>,
    populations: &'a [f64],
    step_works: &'a [f64],
}

pub fn run_json(summary: &WorkSummary) -> String {
    let record = RunJson {
        mean_work: summary.mean_work,
        delta_f: summary.delta_f,
        extra_work: summary.extra_work,
        num_steps: summary.num_steps(),
        delta_tau: summary.delta_tau,
        mode: summary.mode.as_str(),
        shots: summary.shots,
        seed: summary.seed,
        populations: &summary.populations,
        step_works: &summary.step_works,
    };
    let mut text = serde_json::to_string_pretty(&record).expect("plain data serializes");
    text.push('\n');
    text
}

/// Writes to `path`, or to standard output when `path` is `None`.
pub fn emit(path: Option<&Path>, text: &str) -> Result<()> {
    match path {
        Some(p) => std::fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(text.as_bytes())?;
            stdout.flush()?;
            Ok(())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn significant_digits() {
        assert_eq!(sig(0.0, 12), "0");
        assert_eq!(sig(-0.0, 12), "0");
        assert_eq!(sig(0.5, 12), "0.5");
        assert_eq!(sig(1.0 / 3.0, 12), "0.333333333333");
        assert_eq!(sig(2.0f64.sqrt(), 12), "1.41421356237");
        assert_eq!(sig(-1234.5678, 3), "-1230");
        assert_eq!(sig(1.0e-20 / 3.0, 4), "0.000000000000000000003333");
    }
}
