use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, ValueEnum};
use isotherm_core::protocol::{AncillaMode, RunMode, Schedule, ScheduleKind};
use isotherm_core::BathParams;
use serde::Deserialize;

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModeArg {
    Exact,
    HybridEnumerate,
    HybridMc,
    FullyQuantum,
}

impl From<ModeArg> for RunMode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Exact => RunMode::Exact,
            ModeArg::HybridEnumerate => RunMode::HybridEnumerate,
            ModeArg::HybridMc => RunMode::HybridMonteCarlo,
            ModeArg::FullyQuantum => RunMode::FullyQuantum,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AncillaArg {
    Reset,
    Accumulate,
}

impl From<AncillaArg> for AncillaMode {
    fn from(a: AncillaArg) -> Self {
        match a {
            AncillaArg::Reset => AncillaMode::Reset,
            AncillaArg::Accumulate => AncillaMode::Accumulate,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScheduleArg {
    Linear,
    Geometric,
}

impl From<ScheduleArg> for ScheduleKind {
    fn from(s: ScheduleArg) -> Self {
        match s {
            ScheduleArg::Linear => ScheduleKind::Linear,
            ScheduleArg::Geometric => ScheduleKind::Geometric,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Format {
    Csv,
    Json,
}

/// Flags shared by `run`, `scaling` and `export-qasm`. Every flag overrides
/// the same key in the `--config` file.
#[derive(Args, Clone, Debug, Default)]
pub struct ConfigArgs {
    /// JSON file supplying any subset of the options below
    #[arg(long, value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// Inverse bath temperature
    #[arg(long)]
    pub beta: Option<f64>,
    /// Bare bath coupling rate
    #[arg(long)]
    pub gamma0: Option<f64>,
    #[arg(long)]
    pub omega_start: Option<f64>,
    #[arg(long)]
    pub omega_end: Option<f64>,
    /// Number of quench/contact steps N
    #[arg(long)]
    pub steps: Option<usize>,
    /// Contact time per step
    #[arg(long)]
    pub dtau: Option<f64>,
    #[arg(long, value_enum)]
    pub schedule: Option<ScheduleArg>,
    #[arg(long, value_enum)]
    pub mode: Option<ModeArg>,
    /// Shots per measured circuit (fully-quantum only)
    #[arg(long)]
    pub shots: Option<u64>,
    /// Sampled trajectories (hybrid-mc only)
    #[arg(long)]
    pub trajectories: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, value_enum)]
    pub ancilla_mode: Option<AncillaArg>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    /// Output file; standard output when absent
    #[arg(long, value_name = "FILE")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    beta: Option<f64>,
    gamma0: Option<f64>,
    omega_start: Option<f64>,
    omega_end: Option<f64>,
    #[serde(alias = "num_steps")]
    steps: Option<usize>,
    #[serde(alias = "delta_tau")]
    dtau: Option<f64>,
    schedule: Option<ScheduleArg>,
    mode: Option<ModeArg>,
    shots: Option<u64>,
    trajectories: Option<usize>,
    seed: Option<u64>,
    ancilla_mode: Option<AncillaArg>,
    #[serde(alias = "output_format")]
    format: Option<Format>,
    #[serde(alias = "output_path")]
    out: Option<PathBuf>,
}

fn read_file_config(path: &Path) -> Result<FileConfig> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}

pub const DEFAULT_TRAJECTORIES: usize = 100_000;

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub beta: f64,
    pub gamma0: f64,
    pub omega_start: f64,
    pub omega_end: f64,
    pub num_steps: usize,
    pub delta_tau: f64,
    pub schedule: ScheduleKind,
    pub mode: RunMode,
    pub shots: Option<u64>,
    pub trajectories: Option<usize>,
    pub seed: u64,
    pub ancilla_mode: AncillaMode,
    pub format: Format,
    pub out: Option<PathBuf>,
}

impl RunConfig {
    pub fn resolve(args: &ConfigArgs) -> Result<Self> {
        let file = match &args.config {
            Some(path) => read_file_config(path)?,
            None => FileConfig::default(),
        };
        let config = Self {
            beta: args.beta.or(file.beta).unwrap_or(1.0),
            gamma0: args.gamma0.or(file.gamma0).unwrap_or(1.0),
            omega_start: args.omega_start.or(file.omega_start).unwrap_or(1.0),
            omega_end: args.omega_end.or(file.omega_end).unwrap_or(2.0),
            num_steps: args.steps.or(file.steps).unwrap_or(2),
            delta_tau: args.dtau.or(file.dtau).unwrap_or(0.5),
            schedule: args.schedule.or(file.schedule).unwrap_or(ScheduleArg::Geometric).into(),
            mode: args.mode.or(file.mode).unwrap_or(ModeArg::Exact).into(),
            shots: args.shots.or(file.shots),
            trajectories: args.trajectories.or(file.trajectories),
            seed: args.seed.or(file.seed).unwrap_or(0),
            ancilla_mode: args.ancilla_mode.or(file.ancilla_mode).unwrap_or(AncillaArg::Reset).into(),
            format: args.format.or(file.format).unwrap_or(Format::Csv),
            out: args.out.clone().or(file.out),
        };
        config.check()?;
        Ok(config)
    }

    fn check(&self) -> Result<()> {
        if self.shots.is_some() && self.mode != RunMode::FullyQuantum {
            bail!("shots only apply to fully-quantum mode");
        }
        if self.shots == Some(0) {
            bail!("shots must be at least 1");
        }
        if self.trajectories.is_some() && self.mode != RunMode::HybridMonteCarlo {
            bail!("trajectories only apply to hybrid-mc mode");
        }
        if self.trajectories == Some(0) {
            bail!("trajectories must be at least 1");
        }
        self.schedule()?;
        Ok(())
    }

    pub fn bath(&self) -> Result<BathParams> {
        Ok(BathParams::new(self.beta, self.gamma0)?)
    }

    pub fn schedule(&self) -> Result<Schedule> {
        Ok(Schedule::build(
            self.schedule,
            self.bath()?,
            self.omega_start,
            self.omega_end,
            self.num_steps,
            self.delta_tau,
        )?)
    }
}
