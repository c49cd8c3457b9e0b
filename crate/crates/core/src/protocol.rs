//! The discrete isothermal process: quench, then thermal contact, `N` times.
//!
//! At `t_{j−1} = (j − 1)·δτ` the splitting jumps from `ω_{j−1}` to `ω_j` with
//! the state frozen, costing `(ω_j − ω_{j−1})·p_e(t_{j−1})` of work; the
//! system then relaxes for `δτ` at fixed `ω_j`. Three drivers compute the
//! same average work: the exact channel, the hybrid scheme that picks one
//! sub-channel per step at random, and the fully quantum circuit whose
//! selector ancillas make that choice coherently.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::channels::{apply_gadc, make_step_params, BathParams, Branch, StepParams};
use crate::circuit::{
    build_fully_quantum_stage, fully_quantum_circuit, hybrid_circuit, run_stages_with_reset, sample_counts,
    sample_population, simulate, Circuit, Gate, Preparation,
};
use crate::error::{Error, Result};
use crate::qstate::{excited_thermal_population, gates, DensityMatrix, MAX_WIRES};

/// How the intermediate splittings `ω_1 … ω_{N−1}` are placed.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum ScheduleKind {
    /// `ω_j = ω_0 + j (ω_N − ω_0) / N`.
    Linear,
    /// `ω_j = ω_0 (ω_N / ω_0)^{j/N}`.
    #[default]
    Geometric,
}

impl ScheduleKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ScheduleKind::Linear => "linear",
            ScheduleKind::Geometric => "geometric",
        }
    }
}

impl std::str::FromStr for ScheduleKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "linear" => Ok(ScheduleKind::Linear),
            "geometric" => Ok(ScheduleKind::Geometric),
            other => Err(Error::InvalidParameter(format!("unknown schedule {other:?}"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Schedule {
    bath: BathParams,
    omegas: Vec<f64>,
    delta_tau: f64,
}

impl Schedule {
    /// Explicit splittings `[ω_0, …, ω_N]`.
    pub fn new(bath: BathParams, omegas: Vec<f64>, delta_tau: f64) -> Result<Self> {
        if omegas.len() < 2 {
            return Err(Error::InvalidParameter("a schedule needs at least one step".into()));
        }
        if let Some(bad) = omegas.iter().find(|w| !(**w > 0.0 && w.is_finite())) {
            return Err(Error::InvalidParameter(format!("energies must be positive, got {bad}")));
        }
        if !(delta_tau >= 0.0 && delta_tau.is_finite()) {
            return Err(Error::InvalidParameter(format!("delta_tau must be non-negative, got {delta_tau}")));
        }
        Ok(Self { bath, omegas, delta_tau })
    }

    pub fn build(
        kind: ScheduleKind,
        bath: BathParams,
        omega_start: f64,
        omega_end: f64,
        num_steps: usize,
        delta_tau: f64,
    ) -> Result<Self> {
        if num_steps == 0 {
            return Err(Error::InvalidParameter("num_steps must be at least 1".into()));
        }
        for w in [omega_start, omega_end] {
            if !(w > 0.0 && w.is_finite()) {
                return Err(Error::InvalidParameter(format!("energies must be positive, got {w}")));
            }
        }
        let n = num_steps as f64;
        let mut omegas: Vec<f64> = (0..=num_steps)
            .map(|j| {
                let x = j as f64 / n;
                match kind {
                    ScheduleKind::Linear => omega_start + x * (omega_end - omega_start),
                    ScheduleKind::Geometric => omega_start * (omega_end / omega_start).powf(x),
                }
            })
            .collect();
        omegas[num_steps] = omega_end;
        Self::new(bath, omegas, delta_tau)
    }

    pub fn linear(
        bath: BathParams,
        omega_start: f64,
        omega_end: f64,
        num_steps: usize,
        delta_tau: f64,
    ) -> Result<Self> {
        Self::build(ScheduleKind::Linear, bath, omega_start, omega_end, num_steps, delta_tau)
    }

    pub fn geometric(
        bath: BathParams,
        omega_start: f64,
        omega_end: f64,
        num_steps: usize,
        delta_tau: f64,
    ) -> Result<Self> {
        Self::build(ScheduleKind::Geometric, bath, omega_start, omega_end, num_steps, delta_tau)
    }

    pub fn bath(&self) -> BathParams {
        self.bath
    }

    pub fn omegas(&self) -> &[f64] {
        &self.omegas
    }

    pub fn omega_start(&self) -> f64 {
        self.omegas[0]
    }

    pub fn omega_end(&self) -> f64 {
        self.omegas[self.omegas.len() - 1]
    }

    pub fn num_steps(&self) -> usize {
        self.omegas.len() - 1
    }

    pub fn delta_tau(&self) -> f64 {
        self.delta_tau
    }

    /// Quenches are instantaneous.
    pub fn tau_adi(&self) -> f64 {
        0.0
    }

    /// Total contact time `N·δτ`.
    pub fn total_time(&self) -> f64 {
        self.num_steps() as f64 * self.delta_tau
    }

    /// Excited population of the initial Gibbs state at `ω_0`.
    pub fn initial_population(&self) -> f64 {
        excited_thermal_population(self.bath.beta, self.omega_start())
    }

    /// Channel parameters of steps `1..=N`.
    pub fn step_params(&self) -> Result<Vec<StepParams>> {
        self.omegas[1..].iter().map(|&w| make_step_params(self.bath, w, self.delta_tau)).collect()
    }

    /// `Σ_j (ω_j − ω_{j−1}) p_e(t_{j−1})` for populations at `t_0 … t_{N−1}`.
    pub fn work_of(&self, populations: &[f64]) -> f64 {
        self.step_works(populations).iter().sum()
    }

    pub fn step_works(&self, populations: &[f64]) -> Vec<f64> {
        self.omegas.windows(2).zip(populations).map(|(w, &p)| quench_work(w[0], w[1], p)).collect()
    }
}

pub fn linear_schedule(
    bath: BathParams,
    omega_start: f64,
    omega_end: f64,
    num_steps: usize,
    delta_tau: f64,
) -> Result<Schedule> {
    Schedule::linear(bath, omega_start, omega_end, num_steps, delta_tau)
}

/// Work of an instantaneous quench with the state frozen.
pub fn quench_work(omega_prev: f64, omega_next: f64, p_e: f64) -> f64 {
    (omega_next - omega_prev) * p_e
}

/// `ΔF = −T ln(Z_N / Z_0)` with `Z = 1 + e^{−βω}`.
pub fn free_energy_between(beta: f64, omega_start: f64, omega_end: f64) -> f64 {
    let z_end = (-beta * omega_end).exp().ln_1p();
    let z_start = (-beta * omega_start).exp().ln_1p();
    -(z_end - z_start) / beta
}

pub fn free_energy_difference(schedule: &Schedule) -> f64 {
    free_energy_between(schedule.bath.beta, schedule.omega_start(), schedule.omega_end())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RunMode {
    Exact,
    HybridEnumerate,
    HybridMonteCarlo,
    FullyQuantum,
}

impl RunMode {
    pub fn as_str(self) -> &'static str {
        match self {
            RunMode::Exact => "exact",
            RunMode::HybridEnumerate => "hybrid-enumerate",
            RunMode::HybridMonteCarlo => "hybrid-mc",
            RunMode::FullyQuantum => "fully-quantum",
        }
    }
}

impl std::str::FromStr for RunMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "exact" => Ok(RunMode::Exact),
            "hybrid-enumerate" => Ok(RunMode::HybridEnumerate),
            "hybrid-mc" | "hybrid-montecarlo" => Ok(RunMode::HybridMonteCarlo),
            "fully-quantum" => Ok(RunMode::FullyQuantum),
            other => Err(Error::InvalidParameter(format!("unknown mode {other:?}"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct WorkSummary {
    pub mode: RunMode,
    pub omegas: Vec<f64>,
    pub delta_tau: f64,
    /// `p_e(t_0) … p_e(t_{N−1})`, the populations entering the quench work.
    pub populations: Vec<f64>,
    pub step_works: Vec<f64>,
    pub mean_work: f64,
    pub delta_f: f64,
    pub extra_work: f64,
    /// Estimated standard error of `mean_work` for sampled modes.
    pub standard_error: Option<f64>,
    pub shots: Option<u64>,
    pub seed: Option<u64>,
    pub trajectories: Option<usize>,
}

impl WorkSummary {
    fn from_populations(schedule: &Schedule, mode: RunMode, populations: Vec<f64>) -> Self {
        let step_works = schedule.step_works(&populations);
        let mean_work = step_works.iter().sum();
        let delta_f = free_energy_difference(schedule);
        Self {
            mode,
            omegas: schedule.omegas.clone(),
            delta_tau: schedule.delta_tau,
            populations,
            step_works,
            mean_work,
            delta_f,
            extra_work: mean_work - delta_f,
            standard_error: None,
            shots: None,
            seed: None,
            trajectories: None,
        }
    }

    pub fn num_steps(&self) -> usize {
        self.step_works.len()
    }
}

/// Populations `p_e(t_0) … p_e(t_N)` of the exact channel evolution.
pub fn exact_populations(schedule: &Schedule) -> Result<Vec<f64>> {
    let mut rho = DensityMatrix::thermal(schedule.bath.beta, schedule.omega_start())?;
    let mut populations = Vec::with_capacity(schedule.num_steps() + 1);
    populations.push(rho.excited_population(0)?);
    for step in schedule.step_params()? {
        rho = apply_gadc(&rho, &step)?;
        populations.push(rho.excited_population(0)?);
    }
    Ok(populations)
}

pub fn run_exact(schedule: &Schedule) -> Result<WorkSummary> {
    let mut populations = exact_populations(schedule)?;
    populations.pop();
    Ok(WorkSummary::from_populations(schedule, RunMode::Exact, populations))
}

/// One sequence of sub-channel choices and the work it yields.
#[derive(Clone, Debug, PartialEq)]
pub struct TrajectoryRecord {
    pub selections: Vec<Branch>,
    /// `Π_j p_{K_j}^{(j)}`.
    pub probability: f64,
    /// `p_e^{[l]}(t_0) … p_e^{[l]}(t_{N−1})`.
    pub populations: Vec<f64>,
    pub work: f64,
}

impl TrajectoryRecord {
    pub fn selection_string(&self) -> String {
        self.selections.iter().map(|b| b.symbol()).collect()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct HybridEnumeration {
    pub summary: WorkSummary,
    pub trajectories: Vec<TrajectoryRecord>,
}

/// Largest `N` for which all `2^N` selections are enumerated.
pub const ENUMERATION_LIMIT: usize = 20;
/// Largest `N` for which [`run_hybrid`] enumerates instead of sampling.
pub const DEFAULT_ENUMERATION_STEPS: usize = 12;

fn branch_step(rho: &DensityMatrix, step: &StepParams, branch: Branch) -> Result<DensityMatrix> {
    rho.apply_unitary(&gates::free_evolution(step.omega, step.delta_tau), &[0])?
        .apply_kraus(&branch.kraus(step.theta), &[0])
}

/// Evolves one selection string, returning `p_e(t_0) … p_e(t_{N−1})`.
pub fn trajectory_populations(schedule: &Schedule, steps: &[StepParams], selection: &[Branch]) -> Result<Vec<f64>> {
    let mut rho = DensityMatrix::thermal(schedule.bath.beta, schedule.omega_start())?;
    let mut populations = Vec::with_capacity(selection.len());
    for (step, &branch) in steps.iter().zip(selection) {
        populations.push(rho.excited_population(0)?);
        rho = branch_step(&rho, step, branch)?;
    }
    Ok(populations)
}

pub fn run_hybrid_enumerate(schedule: &Schedule) -> Result<HybridEnumeration> {
    let n = schedule.num_steps();
    if n > ENUMERATION_LIMIT {
        return Err(Error::TooManySteps { steps: n, limit: ENUMERATION_LIMIT });
    }
    let steps = schedule.step_params()?;
    let mut trajectories = Vec::with_capacity(1 << n);
    let mut averaged = vec![0.0; n];
    for index in 0..1usize << n {
        // bit j (most significant first) set means pumping at step j + 1
        let selections: Vec<Branch> =
            (0..n).map(|j| if index >> (n - 1 - j) & 1 == 1 { Branch::Up } else { Branch::Down }).collect();
        let probability: f64 = steps.iter().zip(&selections).map(|(s, b)| b.probability(s)).product();
        let populations = trajectory_populations(schedule, &steps, &selections)?;
        for (acc, p) in averaged.iter_mut().zip(&populations) {
            *acc += probability * p;
        }
        let work = schedule.work_of(&populations);
        trajectories.push(TrajectoryRecord { selections, probability, populations, work });
    }
    let mut summary = WorkSummary::from_populations(schedule, RunMode::HybridEnumerate, averaged);
    summary.mean_work = trajectories.iter().map(|t| t.probability * t.work).sum();
    summary.extra_work = summary.mean_work - summary.delta_f;
    summary.trajectories = Some(trajectories.len());
    Ok(HybridEnumeration { summary, trajectories })
}

/// Samples sub-channels with a uniform `r ∈ [0, 1)` per step: damping when `r ≤ p↓`.
pub fn run_hybrid_montecarlo(schedule: &Schedule, num_trajectories: usize, seed: u64) -> Result<WorkSummary> {
    if num_trajectories == 0 {
        return Err(Error::InvalidParameter("num_trajectories must be at least 1".into()));
    }
    let n = schedule.num_steps();
    let steps = schedule.step_params()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut population_sums = vec![0.0; n];
    let mut work_mean = 0.0;
    let mut work_m2 = 0.0;
    let mut selection = Vec::with_capacity(n);
    for t in 0..num_trajectories {
        selection.clear();
        selection.extend(steps.iter().map(|s| {
            let r: f64 = rng.random();
            if r <= s.p_down {
                Branch::Down
            } else {
                Branch::Up
            }
        }));
        let populations = trajectory_populations(schedule, &steps, &selection)?;
        let work = schedule.work_of(&populations);
        let delta = work - work_mean;
        work_mean += delta / (t + 1) as f64;
        work_m2 += delta * (work - work_mean);
        for (acc, p) in population_sums.iter_mut().zip(&populations) {
            *acc += p;
        }
    }
    let count = num_trajectories as f64;
    let populations = population_sums.iter().map(|s| s / count).collect();
    let mut summary = WorkSummary::from_populations(schedule, RunMode::HybridMonteCarlo, populations);
    summary.mean_work = work_mean;
    summary.extra_work = work_mean - summary.delta_f;
    let variance = if num_trajectories > 1 { work_m2 / (count - 1.0) } else { 0.0 };
    summary.standard_error = Some((variance / count).sqrt());
    summary.seed = Some(seed);
    summary.trajectories = Some(num_trajectories);
    Ok(summary)
}

/// Enumerates up to [`DEFAULT_ENUMERATION_STEPS`] steps and samples beyond.
pub fn run_hybrid(schedule: &Schedule, num_trajectories: usize, seed: u64) -> Result<WorkSummary> {
    if schedule.num_steps() <= DEFAULT_ENUMERATION_STEPS {
        Ok(run_hybrid_enumerate(schedule)?.summary)
    } else {
        run_hybrid_montecarlo(schedule, num_trajectories, seed)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum AncillaMode {
    /// Trace out and re-prepare the two ancillas after every step (3 wires).
    #[default]
    Reset,
    /// Fresh ancillas for every step, never traced mid-circuit (`2N + 1` wires).
    Accumulate,
}

impl AncillaMode {
    pub fn as_str(self) -> &'static str {
        match self {
            AncillaMode::Reset => "reset",
            AncillaMode::Accumulate => "accumulate",
        }
    }
}

impl std::str::FromStr for AncillaMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "reset" => Ok(AncillaMode::Reset),
            "accumulate" => Ok(AncillaMode::Accumulate),
            other => Err(Error::InvalidParameter(format!("unknown ancilla mode {other:?}"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Readout {
    /// Populations from the reduced density matrix.
    #[default]
    Exact,
    /// `shots` binomial samples per measured circuit; circuit `k` uses `seed + k`.
    Shots { shots: u64, seed: u64 },
}

/// Circuits measured after steps `1..=N`, each on `2j + 1` wires.
pub fn fully_quantum_step_circuits(schedule: &Schedule, preparation: Preparation) -> Result<Vec<Circuit>> {
    check_accumulate_budget(schedule)?;
    let steps = schedule.step_params()?;
    (1..=steps.len()).map(|j| fully_quantum_circuit(&steps[..j], schedule.initial_population(), preparation)).collect()
}

/// Circuits measured after steps `1..=N` for one selection, each on `j + 1` wires.
pub fn hybrid_step_circuits(
    schedule: &Schedule,
    selection: &[Branch],
    preparation: Preparation,
) -> Result<Vec<Circuit>> {
    if selection.len() != schedule.num_steps() {
        return Err(Error::InvalidParameter(format!(
            "selection has {} entries for {} steps",
            selection.len(),
            schedule.num_steps()
        )));
    }
    let steps = schedule.step_params()?;
    (1..=steps.len())
        .map(|j| hybrid_circuit(&steps[..j], &selection[..j], schedule.initial_population(), preparation))
        .collect()
}

fn check_accumulate_budget(schedule: &Schedule) -> Result<()> {
    let wires = 2 * schedule.num_steps() + 1;
    if wires > MAX_WIRES {
        return Err(Error::RegisterTooLarge { requested: wires, max: MAX_WIRES });
    }
    Ok(())
}

pub fn run_fully_quantum(schedule: &Schedule, readout: Readout, ancilla_mode: AncillaMode) -> Result<WorkSummary> {
    run_fully_quantum_prepared(schedule, readout, ancilla_mode, Preparation::Thermal)
}

pub fn run_fully_quantum_prepared(
    schedule: &Schedule,
    readout: Readout,
    ancilla_mode: AncillaMode,
    preparation: Preparation,
) -> Result<WorkSummary> {
    let n = schedule.num_steps();
    let steps = schedule.step_params()?;
    let p0 = schedule.initial_population();
    // circuit k carries stages 1..=k and is measured at t_k
    let exact: Vec<f64> = match ancilla_mode {
        AncillaMode::Accumulate => {
            check_accumulate_budget(schedule)?;
            let mut out = Vec::with_capacity(n);
            for k in 0..n {
                let circuit = fully_quantum_circuit(&steps[..k], p0, preparation)?;
                out.push(simulate(&circuit)?.excited_population(0)?);
            }
            out
        }
        AncillaMode::Reset => {
            let prep = fully_quantum_circuit(&[], p0, preparation)?;
            let initial = simulate(&prep)?;
            let stages: Vec<Vec<Gate>> = steps[..n.saturating_sub(1)]
                .iter()
                .map(|s| {
                    let mut stage = vec![Gate::free_evolution(s.omega, s.delta_tau, 0)];
                    stage.extend(build_fully_quantum_stage(s, 0, 1, 2));
                    stage
                })
                .collect();
            let history = run_stages_with_reset(&initial, &stages, 2)?;
            std::iter::once(initial.excited_population(0))
                .chain(history.iter().map(|rho| rho.excited_population(0)))
                .collect::<Result<_>>()?
        }
    };
    let populations = match readout {
        Readout::Exact => exact,
        Readout::Shots { shots, seed } => {
            let mut sampled = Vec::with_capacity(n);
            for (k, &p) in exact.iter().enumerate() {
                let circuit_seed = seed.wrapping_add(k as u64);
                let result = match ancilla_mode {
                    AncillaMode::Accumulate => {
                        sample_counts(&fully_quantum_circuit(&steps[..k], p0, preparation)?, shots, circuit_seed)?
                    }
                    AncillaMode::Reset => sample_population(p, shots, circuit_seed)?,
                };
                sampled.push(result.p_e_estimate());
            }
            sampled
        }
    };
    let mut summary = WorkSummary::from_populations(schedule, RunMode::FullyQuantum, populations);
    if let Readout::Shots { shots, seed } = readout {
        let variance: f64 = schedule
            .omegas
            .windows(2)
            .zip(&summary.populations)
            .map(|(w, p)| (w[1] - w[0]).powi(2) * p * (1.0 - p) / shots as f64)
            .sum();
        summary.standard_error = Some(variance.sqrt());
        summary.shots = Some(shots);
        summary.seed = Some(seed);
    }
    Ok(summary)
}

/// `run_exact` for each `N` at fixed `δτ`, so the total time grows as `N·δτ`.
pub fn scaling_sweep(
    kind: ScheduleKind,
    bath: BathParams,
    omega_start: f64,
    omega_end: f64,
    delta_tau: f64,
    n_values: &[usize],
) -> Result<Vec<(usize, WorkSummary)>> {
    if n_values.is_empty() {
        return Err(Error::InvalidParameter("n_values must not be empty".into()));
    }
    if n_values.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidParameter("n_values must be strictly ascending".into()));
    }
    n_values
        .iter()
        .map(|&n| {
            let schedule = Schedule::build(kind, bath, omega_start, omega_end, n, delta_tau)?;
            Ok((n, run_exact(&schedule)?))
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct ScalingFit {
    pub points: Vec<(usize, f64)>,
    /// Points used by the fit (the upper half of the `N` range).
    pub fitted: Vec<(usize, f64)>,
    pub slope: f64,
    pub coefficient: f64,
    pub residual: f64,
}

/// Least-squares line through `(ln N, ln extra_work)` over the upper half of the points.
pub fn fit_power_law(points: &[(usize, f64)]) -> Result<ScalingFit> {
    if points.len() < 4 {
        return Err(Error::Fit(format!("need at least 4 points, got {}", points.len())));
    }
    if let Some((n, e)) = points.iter().find(|(n, e)| *n == 0 || e.is_nan() || *e <= 0.0) {
        return Err(Error::Fit(format!("log undefined at N={n}, extra_work={e}")));
    }
    let mut sorted = points.to_vec();
    sorted.sort_by_key(|p| p.0);
    let fitted = sorted[sorted.len() / 2..].to_vec();
    let xs: Vec<f64> = fitted.iter().map(|p| (p.0 as f64).ln()).collect();
    let ys: Vec<f64> = fitted.iter().map(|p| p.1.ln()).collect();
    let m = xs.len() as f64;
    let mean_x = xs.iter().sum::<f64>() / m;
    let mean_y = ys.iter().sum::<f64>() / m;
    let sxx: f64 = xs.iter().map(|x| (x - mean_x).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::Fit("fit range needs at least two distinct N".into()));
    }
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mean_x) * (y - mean_y)).sum();
    let slope = sxy / sxx;
    let intercept = mean_y - slope * mean_x;
    let residual = xs.iter().zip(&ys).map(|(x, y)| (y - intercept - slope * x).abs()).fold(0.0, f64::max);
    Ok(ScalingFit { points: sorted, fitted, slope, coefficient: intercept.exp(), residual })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bath() -> BathParams {
        BathParams::new(1.0, 1.0).unwrap()
    }

    #[test]
    fn linear_schedules() {
        let s = Schedule::linear(bath(), 1.0, 2.0, 1, 0.5).unwrap();
        assert_eq!(s.omegas(), &[1.0, 2.0]);
        let s = linear_schedule(bath(), 1.0, 2.0, 2, 0.5).unwrap();
        assert_eq!(s.omegas(), &[1.0, 1.5, 2.0]);
        let s = Schedule::linear(bath(), 1.0, 2.0, 4, 0.5).unwrap();
        assert_eq!(s.omegas(), &[1.0, 1.25, 1.5, 1.75, 2.0]);
        assert_eq!(s.tau_adi(), 0.0);
        assert_eq!(s.total_time(), 2.0);
        assert!(Schedule::linear(bath(), 0.0, 2.0, 2, 0.5).is_err());
        assert!(Schedule::linear(bath(), 1.0, -2.0, 2, 0.5).is_err());
        assert!(Schedule::linear(bath(), 1.0, 2.0, 0, 0.5).is_err());
    }

    #[test]
    fn geometric_schedule() {
        let s = Schedule::geometric(bath(), 1.0, 2.0, 2, 0.5).unwrap();
        assert!((s.omegas()[1] - 2f64.sqrt()).abs() < 1e-15);
        assert_eq!(s.omega_end(), 2.0);
    }

    #[test]
    fn quench_work_values() {
        assert_eq!(quench_work(1.3, 1.3, 0.4), 0.0);
        assert_eq!(quench_work(1.0, 2.0, 0.0), 0.0);
        let p = 1.0 / (1f64.exp() + 1.0);
        assert!((quench_work(1.0, 1.5, p) - 0.13447).abs() < 5e-6);
        assert!(quench_work(2.0, 1.0, 0.5) < 0.0);
    }

    #[test]
    fn free_energy_values() {
        let flat = Schedule::new(bath(), vec![1.5, 1.5], 0.5).unwrap();
        assert_eq!(free_energy_difference(&flat), 0.0);
        let s = Schedule::linear(bath(), 1.0, 2.0, 2, 0.5).unwrap();
        let direct = 1.0 - ((1.0 + 2f64.exp()) / (1.0 + 1f64.exp())).ln();
        assert!((free_energy_difference(&s) - direct).abs() < 1e-15);
        assert!((free_energy_difference(&s) - 0.186).abs() < 5e-4);
        assert!(free_energy_between(1e4, 1.0, 2.0).abs() < 1e-12);
    }

    #[test]
    fn exact_quasi_static_intermediates() {
        let s = Schedule::linear(bath(), 1.0, 2.0, 2, 10.0).unwrap();
        let w = run_exact(&s).unwrap();
        assert!((w.populations[0] - 0.26894).abs() < 5e-6);
        assert!((w.populations[1] - 0.18243).abs() < 5e-6);
        assert!((w.mean_work - 0.226).abs() < 5e-4);
        assert!((w.mean_work - w.step_works.iter().sum::<f64>()).abs() < 1e-15);
        assert!((w.extra_work - (w.mean_work - w.delta_f)).abs() < 1e-15);
    }

    #[test]
    fn enumeration_probabilities() {
        let s = Schedule::linear(bath(), 1.0, 2.0, 2, 0.5).unwrap();
        let run = run_hybrid_enumerate(&s).unwrap();
        assert_eq!(run.trajectories.len(), 4);
        let total: f64 = run.trajectories.iter().map(|t| t.probability).sum();
        assert!((total - 1.0).abs() < 1e-15);
        let steps = s.step_params().unwrap();
        let all_down = &run.trajectories[0];
        assert_eq!(all_down.selection_string(), "↓↓");
        assert!((all_down.probability - steps[0].p_down * steps[1].p_down).abs() < 1e-15);
        assert!((run.summary.mean_work - run_exact(&s).unwrap().mean_work).abs() < 1e-12);
        assert!((run.summary.mean_work - 0.245).abs() < 5e-4);
    }

    #[test]
    fn enumeration_with_identity_channels() {
        let s = Schedule::linear(bath(), 1.0, 2.0, 1, 0.0).unwrap();
        let run = run_hybrid_enumerate(&s).unwrap();
        assert_eq!(run.trajectories[0].work, run.trajectories[1].work);
    }

    #[test]
    fn enumeration_limit() {
        let s = Schedule::linear(bath(), 1.0, 2.0, ENUMERATION_LIMIT + 1, 0.5).unwrap();
        assert!(matches!(run_hybrid_enumerate(&s), Err(Error::TooManySteps { .. })));
    }

    #[test]
    fn montecarlo_zero_variance_and_determinism() {
        let s = Schedule::linear(bath(), 1.0, 2.0, 3, 0.0).unwrap();
        let mc = run_hybrid_montecarlo(&s, 50, 9).unwrap();
        let exact = run_exact(&s).unwrap();
        assert!((mc.mean_work - exact.mean_work).abs() < 1e-15);
        assert!(mc.standard_error.unwrap() < 1e-15);

        let s = Schedule::linear(bath(), 1.0, 2.0, 2, 0.5).unwrap();
        assert_eq!(run_hybrid_montecarlo(&s, 200, 5).unwrap(), run_hybrid_montecarlo(&s, 200, 5).unwrap());
        assert!(run_hybrid_montecarlo(&s, 0, 5).is_err());
    }

    #[test]
    fn hybrid_default_switches_to_sampling() {
        let s = Schedule::linear(bath(), 1.0, 2.0, DEFAULT_ENUMERATION_STEPS + 1, 0.5).unwrap();
        assert_eq!(run_hybrid(&s, 100, 1).unwrap().mode, RunMode::HybridMonteCarlo);
        let s = Schedule::linear(bath(), 1.0, 2.0, 3, 0.5).unwrap();
        assert_eq!(run_hybrid(&s, 100, 1).unwrap().mode, RunMode::HybridEnumerate);
    }

    #[test]
    fn fully_quantum_matches_exact() {
        for mode in [AncillaMode::Reset, AncillaMode::Accumulate] {
            let s = Schedule::linear(bath(), 1.0, 2.0, 2, 0.5).unwrap();
            let fq = run_fully_quantum(&s, Readout::Exact, mode).unwrap();
            assert!((fq.mean_work - run_exact(&s).unwrap().mean_work).abs() < 1e-12);
        }
    }

    #[test]
    fn accumulate_budget() {
        let s = Schedule::linear(bath(), 1.0, 2.0, 7, 0.5).unwrap();
        assert!(matches!(
            run_fully_quantum(&s, Readout::Exact, AncillaMode::Accumulate),
            Err(Error::RegisterTooLarge { requested: 15, .. })
        ));
        assert!(run_fully_quantum(&s, Readout::Exact, AncillaMode::Reset).is_ok());
    }

    #[test]
    fn step_circuit_sizes() {
        let s = Schedule::linear(bath(), 1.0, 2.0, 2, 0.5).unwrap();
        let fq = fully_quantum_step_circuits(&s, Preparation::CoherentRotation).unwrap();
        assert_eq!(fq.iter().map(Circuit::num_wires).collect::<Vec<_>>(), vec![3, 5]);
        let hy = hybrid_step_circuits(&s, &[Branch::Down, Branch::Down], Preparation::CoherentRotation).unwrap();
        assert_eq!(hy.iter().map(Circuit::num_wires).collect::<Vec<_>>(), vec![2, 3]);
    }

    #[test]
    fn coherent_preparation_gives_same_work() {
        let s = Schedule::linear(bath(), 1.0, 2.0, 2, 0.5).unwrap();
        let a =
            run_fully_quantum_prepared(&s, Readout::Exact, AncillaMode::Reset, Preparation::CoherentRotation).unwrap();
        assert!((a.mean_work - run_exact(&s).unwrap().mean_work).abs() < 1e-12);
    }

    #[test]
    fn power_law_fits() {
        let exact: Vec<(usize, f64)> = [4, 8, 16, 32, 64].iter().map(|&n| (n, 3.0 / n as f64)).collect();
        let fit = fit_power_law(&exact).unwrap();
        assert!((fit.slope + 1.0).abs() < 1e-12);
        assert!((fit.coefficient - 3.0).abs() < 1e-12);
        assert!(fit.residual < 1e-12);
        assert_eq!(fit.fitted.len(), 3);

        let perturbed: Vec<(usize, f64)> =
            [4, 8, 16, 32, 64].iter().map(|&n| (n, 3.0 / n as f64 + 1.0 / (n * n) as f64)).collect();
        let fit = fit_power_law(&perturbed).unwrap();
        assert!(fit.slope > -1.1 && fit.slope < -1.0, "slope {}", fit.slope);

        assert!(fit_power_law(&exact[..3]).is_err());
        let mut bad = exact.clone();
        bad[1].1 = -0.1;
        assert!(matches!(fit_power_law(&bad), Err(Error::Fit(_))));
    }

    #[test]
    fn sweep_validation() {
        assert!(scaling_sweep(ScheduleKind::Linear, bath(), 1.0, 2.0, 0.5, &[]).is_err());
        assert!(scaling_sweep(ScheduleKind::Linear, bath(), 1.0, 2.0, 0.5, &[4, 2]).is_err());
    }
}
