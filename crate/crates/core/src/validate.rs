//! Randomized invariant suite behind `isotherm validate`.
//!
//! Every check draws from its own seeded generator so a check's outcome does
//! not depend on which other checks ran before it.

use std::f64::consts::{FRAC_PI_2, PI};
use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::channels::{
    apply_gadc, damping_kraus, gadc_kraus, gadc_superoperator, lindblad_superoperator, make_step_params, pumping_kraus,
    BathParams, Branch, StepParams, Superoperator,
};
use crate::circuit::qasm::{export_qasm, parse_qasm};
use crate::circuit::{
    build_damping_stage, build_fully_quantum_stage, build_pumping_stage, fully_quantum_circuit, hybrid_circuit,
    induced_superoperator, run_stages_with_reset, sample_counts, simulate, Circuit, Gate, Preparation,
};
use crate::error::Result;
use crate::protocol::{
    fit_power_law, run_exact, run_fully_quantum, run_hybrid_enumerate, run_hybrid_montecarlo, scaling_sweep,
    AncillaMode, Readout, Schedule, ScheduleKind,
};
use crate::qstate::{excited_thermal_population, gates, hermitian_eigenvalues, max_abs_diff, DensityMatrix, C64};

pub const DEFAULT_SEED: u64 = 20_190_601;

#[derive(Clone, Debug, PartialEq)]
pub struct CheckOutcome {
    pub name: &'static str,
    pub passed: bool,
    pub samples: usize,
    /// Largest violation seen, in the units of `tolerance`.
    pub worst: f64,
    pub tolerance: f64,
    pub detail: String,
}

impl CheckOutcome {
    fn measured(name: &'static str, samples: usize, worst: f64, tolerance: f64) -> Self {
        Self { name, passed: worst <= tolerance, samples, worst, tolerance, detail: String::new() }
    }

    fn with_detail(mut self, detail: String) -> Self {
        self.detail = detail;
        self
    }

    fn errored(name: &'static str, message: String) -> Self {
        Self { name, passed: false, samples: 0, worst: f64::NAN, tolerance: 0.0, detail: message }
    }
}

impl fmt::Display for CheckOutcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} {:<26} samples={:<5} worst={:.3e} tol={:.1e}",
            if self.passed { "PASS" } else { "FAIL" },
            self.name,
            self.samples,
            self.worst,
            self.tolerance
        )?;
        if !self.detail.is_empty() {
            write!(f, " ({})", self.detail)?;
        }
        Ok(())
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct ValidationReport {
    pub outcomes: Vec<CheckOutcome>,
}

impl ValidationReport {
    pub fn all_passed(&self) -> bool {
        self.outcomes.iter().all(|o| o.passed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &CheckOutcome> {
        self.outcomes.iter().filter(|o| !o.passed)
    }
}

type Check = fn(&mut ChaCha8Rng) -> Result<CheckOutcome>;

const CHECKS: &[(&str, Check)] = &[
    ("state_invariants", state_invariants),
    ("kraus_completeness", kraus_completeness),
    ("gadc_cptp", gadc_cptp),
    ("gibbs_fixed_point", gibbs_fixed_point),
    ("lindblad_equivalence", |_| lindblad_equivalence()),
    ("coherence_independence", coherence_independence),
    ("population_recursion", population_recursion),
    ("contraction", contraction),
    ("dilation", dilation),
    ("selector", selector),
    ("ancilla_mode_equivalence", |_| ancilla_mode_equivalence()),
    ("qasm_round_trip", |_| qasm_round_trip()),
    ("sampling_reproducibility", sampling_reproducibility),
    ("mode_agreement", |_| mode_agreement()),
    ("second_law", second_law),
    ("quasi_static_limit", |_| quasi_static_limit()),
    ("montecarlo_consistency", |_| montecarlo_consistency()),
    ("scaling_convergence", |_| scaling_convergence()),
];

pub fn check_names() -> Vec<&'static str> {
    CHECKS.iter().map(|(name, _)| *name).collect()
}

pub fn run_all() -> ValidationReport {
    run_all_seeded(DEFAULT_SEED)
}

pub fn run_all_seeded(seed: u64) -> ValidationReport {
    let outcomes = CHECKS
        .iter()
        .enumerate()
        .map(|(i, (name, check))| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(i as u64));
            check(&mut rng).unwrap_or_else(|e| CheckOutcome::errored(name, e.to_string()))
        })
        .collect();
    ValidationReport { outcomes }
}

/// Runs a single named check, or `None` if the name is unknown.
pub fn run_check(name: &str, seed: u64) -> Option<CheckOutcome> {
    let (i, (name, check)) = CHECKS.iter().enumerate().find(|(_, (n, _))| *n == name)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(i as u64));
    Some(check(&mut rng).unwrap_or_else(|e| CheckOutcome::errored(name, e.to_string())))
}

fn random_qubit_state(rng: &mut ChaCha8Rng) -> Result<DensityMatrix> {
    let p_e: f64 = rng.random();
    let radius = rng.random::<f64>() * (p_e * (1.0 - p_e)).sqrt();
    let coherence = C64::from_polar(radius, rng.random::<f64>() * 2.0 * PI);
    let mut m = DensityMatrix::from_populations(p_e)?.into_matrix();
    m[(0, 1)] = coherence;
    m[(1, 0)] = coherence.conj();
    DensityMatrix::new(m)
}

fn random_bath(rng: &mut ChaCha8Rng) -> Result<BathParams> {
    BathParams::new(rng.random_range(0.1..5.0), rng.random_range(0.1..3.0))
}

fn random_step(rng: &mut ChaCha8Rng) -> Result<StepParams> {
    let bath = random_bath(rng)?;
    make_step_params(bath, rng.random_range(0.1..5.0), rng.random_range(0.0..5.0))
}

fn random_unitary(rng: &mut ChaCha8Rng) -> crate::qstate::ComplexMatrix {
    gates::rot_z(rng.random_range(0.0..2.0 * PI))
        * gates::rot_y(rng.random_range(0.0..2.0 * PI))
        * gates::rot_x(rng.random_range(0.0..2.0 * PI))
}

fn state_invariants(rng: &mut ChaCha8Rng) -> Result<CheckOutcome> {
    let draws = 100;
    let mut worst = 0.0f64;
    for _ in 0..draws {
        let a = random_qubit_state(rng)?;
        let b = random_qubit_state(rng)?;
        let ab = a.tensor(&b)?;
        worst = worst.max(max_abs_diff(ab.partial_trace(&[1])?.matrix(), a.matrix()));
        let u = crate::qstate::kron(&random_unitary(rng), &random_unitary(rng));
        let rotated = ab.apply_unitary(&u, &[0, 1])?;
        rotated.validate()?;
        let before = hermitian_eigenvalues(ab.matrix());
        let after = hermitian_eigenvalues(rotated.matrix());
        for (x, y) in before.iter().zip(&after) {
            worst = worst.max((x - y).abs());
        }
    }
    Ok(CheckOutcome::measured("state_invariants", draws, worst, 1e-10))
}

fn kraus_completeness(rng: &mut ChaCha8Rng) -> Result<CheckOutcome> {
    let draws = 200;
    let mut worst = 0.0f64;
    for _ in 0..draws {
        let theta = rng.random_range(0.0..FRAC_PI_2);
        worst = worst.max(damping_kraus(theta).completeness_error());
        worst = worst.max(pumping_kraus(theta).completeness_error());
    }
    Ok(CheckOutcome::measured("kraus_completeness", draws, worst, 1e-12))
}

fn gadc_cptp(rng: &mut ChaCha8Rng) -> Result<CheckOutcome> {
    let draws = 200;
    let mut worst = 0.0f64;
    for _ in 0..draws {
        let step = random_step(rng)?;
        worst = worst.max(gadc_kraus(&step).completeness_error());
        let out = apply_gadc(&random_qubit_state(rng)?, &step)?;
        out.validate()?;
        worst = worst.max((out.trace().re - 1.0).abs()).max((-out.min_eigenvalue()).max(0.0));
    }
    Ok(CheckOutcome::measured("gadc_cptp", draws, worst, 1e-12))
}

fn gibbs_fixed_point(rng: &mut ChaCha8Rng) -> Result<CheckOutcome> {
    let draws = 200;
    let mut worst = 0.0f64;
    for _ in 0..draws {
        let step = random_step(rng)?;
        let gibbs = DensityMatrix::thermal(step.bath.beta, step.omega)?;
        worst = worst.max(max_abs_diff(apply_gadc(&gibbs, &step)?.matrix(), gibbs.matrix()));
    }
    Ok(CheckOutcome::measured("gibbs_fixed_point", draws, worst, 1e-12))
}

/// The 4×4 grid of `βω` and `γ0δτ` values with `ω = γ0 = 1`.
pub const LINDBLAD_GRID_BETA_OMEGA: [f64; 4] = [0.25, 1.0, 2.0, 4.0];
pub const LINDBLAD_GRID_GAMMA_TAU: [f64; 4] = [0.1, 0.5, 1.0, 10.0];

/// Largest entrywise gap between the GADC and master-equation transfer matrices on the grid.
pub fn lindblad_grid_deviation() -> Result<f64> {
    let mut worst = 0.0f64;
    for beta in LINDBLAD_GRID_BETA_OMEGA {
        let bath = BathParams::new(beta, 1.0)?;
        for duration in LINDBLAD_GRID_GAMMA_TAU {
            let step = make_step_params(bath, 1.0, duration)?;
            let lindblad = lindblad_superoperator(1.0, &bath, duration)?;
            worst = worst.max(gadc_superoperator(&step).max_abs_diff(&lindblad));
        }
    }
    Ok(worst)
}

fn lindblad_equivalence() -> Result<CheckOutcome> {
    let worst = lindblad_grid_deviation()?;
    Ok(CheckOutcome::measured("lindblad_equivalence", 16, worst, 1e-8))
}

fn coherence_independence(rng: &mut ChaCha8Rng) -> Result<CheckOutcome> {
    let draws = 200;
    let mut worst = 0.0f64;
    for _ in 0..draws {
        let step = random_step(rng)?;
        let a = random_qubit_state(rng)?;
        let mut m = a.matrix().clone();
        let swapped =
            C64::from_polar(rng.random::<f64>() * (m[(0, 0)].re * m[(1, 1)].re).sqrt(), rng.random::<f64>() * 2.0 * PI);
        m[(0, 1)] = swapped;
        m[(1, 0)] = swapped.conj();
        let b = DensityMatrix::new(m)?;
        let pa = apply_gadc(&a, &step)?.excited_population(0)?;
        let pb = apply_gadc(&b, &step)?.excited_population(0)?;
        worst = worst.max((pa - pb).abs());
    }
    Ok(CheckOutcome::measured("coherence_independence", draws, worst, 1e-14))
}

fn population_recursion(rng: &mut ChaCha8Rng) -> Result<CheckOutcome> {
    let draws = 200;
    let mut worst = 0.0f64;
    for _ in 0..draws {
        let step = random_step(rng)?;
        let rho = random_qubit_state(rng)?;
        let p = rho.excited_population(0)?;
        let c2 = step.theta.cos().powi(2);
        let expected = p * c2 + step.p_up * (1.0 - c2);
        worst = worst.max((apply_gadc(&rho, &step)?.excited_population(0)? - expected).abs());
    }
    Ok(CheckOutcome::measured("population_recursion", draws, worst, 1e-14))
}

fn contraction(rng: &mut ChaCha8Rng) -> Result<CheckOutcome> {
    let draws = 200;
    let mut worst = 0.0f64;
    for _ in 0..draws {
        let step = random_step(rng)?;
        let a = random_qubit_state(rng)?;
        let b = random_qubit_state(rng)?;
        let before = a.trace_distance(&b)?;
        let after = apply_gadc(&a, &step)?.trace_distance(&apply_gadc(&b, &step)?)?;
        worst = worst.max(after - before);
    }
    Ok(CheckOutcome::measured("contraction", draws, worst, 1e-12))
}

fn dilation(rng: &mut ChaCha8Rng) -> Result<CheckOutcome> {
    let draws = 100;
    let mut worst = 0.0f64;
    for _ in 0..draws {
        let theta = rng.random_range(0.0..FRAC_PI_2);
        let damp = induced_superoperator(&build_damping_stage(theta, 0, 1), 0, 2)?;
        worst = worst.max(damp.max_abs_diff(&Superoperator::from_kraus(&damping_kraus(theta))));
        let pump = induced_superoperator(&build_pumping_stage(theta, 0, 1), 0, 2)?;
        worst = worst.max(pump.max_abs_diff(&Superoperator::from_kraus(&pumping_kraus(theta))));
    }
    Ok(CheckOutcome::measured("dilation", draws, worst, 1e-12))
}

fn selector(rng: &mut ChaCha8Rng) -> Result<CheckOutcome> {
    let draws = 100;
    let mut worst = 0.0f64;
    for _ in 0..draws {
        let step = random_step(rng)?;
        let stage = build_fully_quantum_stage(&step, 0, 1, 2);
        let induced = induced_superoperator(&stage, 0, 3)?;
        worst = worst.max(induced.max_abs_diff(&Superoperator::from_kraus(&gadc_kraus(&step))));
    }
    Ok(CheckOutcome::measured("selector", draws, worst, 1e-12))
}

fn paper_bath() -> BathParams {
    BathParams::new(1.0, 1.0).expect("valid bath")
}

fn ancilla_mode_equivalence() -> Result<CheckOutcome> {
    let mut worst = 0.0f64;
    let mut samples = 0;
    for n in 1..=4 {
        for delta_tau in [0.5, 10.0] {
            let schedule = Schedule::geometric(paper_bath(), 1.0, 2.0, n, delta_tau)?;
            let steps = schedule.step_params()?;
            let p0 = schedule.initial_population();
            let preparation = Preparation::CoherentRotation;
            let full = simulate(&fully_quantum_circuit(&steps, p0, preparation)?)?;
            let others: Vec<usize> = (1..full.num_wires()).collect();
            let accumulated = full.partial_trace(&others)?;
            let initial = simulate(&fully_quantum_circuit(&[], p0, preparation)?)?;
            let stages: Vec<Vec<Gate>> = steps
                .iter()
                .map(|s| {
                    let mut stage = vec![Gate::free_evolution(s.omega, s.delta_tau, 0)];
                    stage.extend(build_fully_quantum_stage(s, 0, 1, 2));
                    stage
                })
                .collect();
            let reset = run_stages_with_reset(&initial, &stages, 2)?;
            let last = reset.last().expect("at least one stage");
            worst = worst.max(max_abs_diff(accumulated.matrix(), last.matrix()));
            samples += 1;
        }
    }
    Ok(CheckOutcome::measured("ancilla_mode_equivalence", samples, worst, 1e-12))
}

fn round_trip_error(circuit: &Circuit) -> Result<f64> {
    let text = export_qasm(circuit)?;
    let reparsed = parse_qasm(&text)?.to_circuit()?;
    Ok(max_abs_diff(simulate(&reparsed)?.matrix(), simulate(circuit)?.matrix()))
}

fn qasm_round_trip() -> Result<CheckOutcome> {
    let schedule = Schedule::geometric(paper_bath(), 1.0, 2.0, 2, 0.5)?;
    let steps = schedule.step_params()?;
    let p0 = schedule.initial_population();
    let prep = Preparation::CoherentRotation;
    let circuits = [
        fully_quantum_circuit(&steps[..1], p0, prep)?,
        fully_quantum_circuit(&steps, p0, prep)?,
        hybrid_circuit(&steps, &[Branch::Down, Branch::Up], p0, prep)?,
        hybrid_circuit(&steps, &[Branch::Up, Branch::Down], p0, prep)?,
    ];
    let mut worst = 0.0f64;
    for c in &circuits {
        worst = worst.max(round_trip_error(c)?);
    }
    Ok(CheckOutcome::measured("qasm_round_trip", circuits.len(), worst, 1e-12))
}

fn sampling_reproducibility(rng: &mut ChaCha8Rng) -> Result<CheckOutcome> {
    let schedule = Schedule::geometric(paper_bath(), 1.0, 2.0, 2, 0.5)?;
    let circuit = fully_quantum_circuit(&schedule.step_params()?, schedule.initial_population(), Preparation::Thermal)?;
    let draws = 20;
    let mut mismatches = 0;
    for _ in 0..draws {
        let seed: u64 = rng.random();
        if sample_counts(&circuit, 8192, seed)? != sample_counts(&circuit, 8192, seed)? {
            mismatches += 1;
        }
    }
    Ok(CheckOutcome::measured("sampling_reproducibility", draws, mismatches as f64, 0.0))
}

/// Largest gap between exact, enumerated hybrid and fully quantum mean work for `N ≤ 4`.
pub fn mode_agreement_deviation(kind: ScheduleKind) -> Result<f64> {
    let mut worst = 0.0f64;
    for n in 1..=4 {
        for delta_tau in [0.5, 10.0] {
            let schedule = Schedule::build(kind, paper_bath(), 1.0, 2.0, n, delta_tau)?;
            let exact = run_exact(&schedule)?.mean_work;
            let hybrid = run_hybrid_enumerate(&schedule)?.summary.mean_work;
            let reset = run_fully_quantum(&schedule, Readout::Exact, AncillaMode::Reset)?.mean_work;
            let accumulate = run_fully_quantum(&schedule, Readout::Exact, AncillaMode::Accumulate)?.mean_work;
            for w in [hybrid, reset, accumulate] {
                worst = worst.max((w - exact).abs());
            }
        }
    }
    Ok(worst)
}

fn mode_agreement() -> Result<CheckOutcome> {
    let worst = mode_agreement_deviation(ScheduleKind::Linear)?.max(mode_agreement_deviation(ScheduleKind::Geometric)?);
    Ok(CheckOutcome::measured("mode_agreement", 32, worst, 1e-12))
}

fn second_law(rng: &mut ChaCha8Rng) -> Result<CheckOutcome> {
    let draws = 300;
    let mut worst = 0.0f64;
    for _ in 0..draws {
        let bath = random_bath(rng)?;
        let n = rng.random_range(1..=8);
        let mut omegas: Vec<f64> = (0..=n).map(|_| rng.random_range(0.1..5.0)).collect();
        omegas.sort_by(f64::total_cmp);
        if rng.random::<bool>() {
            omegas.reverse();
        }
        let schedule = Schedule::new(bath, omegas, rng.random_range(0.0..5.0))?;
        worst = worst.max(-run_exact(&schedule)?.extra_work);
    }
    Ok(CheckOutcome::measured("second_law", draws, worst, 1e-12))
}

fn quasi_static_limit() -> Result<CheckOutcome> {
    let mut worst = 0.0f64;
    let mut samples = 0;
    for gamma_tau in [30.0, 50.0] {
        for beta in [0.5, 1.0, 2.0] {
            for n in 1..=6 {
                let schedule = Schedule::geometric(BathParams::new(beta, 1.0)?, 1.0, 2.0, n, gamma_tau)?;
                let target: f64 =
                    schedule.omegas().windows(2).map(|w| (w[1] - w[0]) * excited_thermal_population(beta, w[0])).sum();
                worst = worst.max((run_exact(&schedule)?.mean_work - target).abs());
                samples += 1;
            }
        }
    }
    Ok(CheckOutcome::measured("quasi_static_limit", samples, worst, 1e-6))
}

fn montecarlo_consistency() -> Result<CheckOutcome> {
    let schedule = Schedule::geometric(paper_bath(), 1.0, 2.0, 2, 0.5)?;
    let exact = run_exact(&schedule)?.mean_work;
    let seeds = 100;
    let mut failures = 0;
    let mut worst_sigma = 0.0f64;
    for seed in 0..seeds {
        let mc = run_hybrid_montecarlo(&schedule, 2000, seed)?;
        let sigma = mc.standard_error.unwrap_or(0.0);
        let z = (mc.mean_work - exact).abs() / sigma;
        worst_sigma = worst_sigma.max(z);
        if z > 5.0 {
            failures += 1;
        }
    }
    Ok(CheckOutcome::measured("montecarlo_consistency", seeds as usize, failures as f64, 1.0)
        .with_detail(format!("max |z| = {worst_sigma:.2}")))
}

/// `N·extra_work` at `δτ = 0.5` for `N ∈ {8, 16, 32, 64}`.
pub fn scaled_extra_work() -> Result<Vec<(usize, f64)>> {
    Ok(scaling_sweep(ScheduleKind::Geometric, paper_bath(), 1.0, 2.0, 0.5, &[8, 16, 32, 64])?
        .into_iter()
        .map(|(n, w)| (n, n as f64 * w.extra_work))
        .collect())
}

fn scaling_convergence() -> Result<CheckOutcome> {
    let scaled = scaled_extra_work()?;
    let gaps: Vec<f64> = scaled.windows(2).map(|w| (w[1].1 - w[0].1).abs()).collect();
    let growth = gaps.windows(2).map(|g| g[1] - g[0]).fold(f64::NEG_INFINITY, f64::max);
    let points: Vec<(usize, f64)> = scaled.iter().map(|&(n, s)| (n, s / n as f64)).collect();
    let fit = fit_power_law(&points)?;
    Ok(CheckOutcome::measured("scaling_convergence", scaled.len(), growth.max(0.0), 0.0)
        .with_detail(format!("slope = {:.4}, C = {:.4}", fit.slope, fit.coefficient)))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn names_are_unique() {
        let names = check_names();
        let mut sorted = names.clone();
        sorted.sort();
        sorted.dedup();
        assert_eq!(sorted.len(), names.len());
    }

    #[test]
    fn single_check_runs() {
        let outcome = run_check("kraus_completeness", DEFAULT_SEED).unwrap();
        assert!(outcome.passed, "{outcome}");
        assert_eq!(outcome.samples, 200);
        assert!(run_check("nope", 0).is_none());
    }

    #[test]
    fn seeded_checks_are_deterministic() {
        assert_eq!(run_check("contraction", 3), run_check("contraction", 3));
    }

    #[test]
    fn failed_outcome_formats() {
        let o = CheckOutcome::errored("x", "boom".into());
        assert!(!o.passed);
        assert!(o.to_string().starts_with("FAIL x"));
        assert!(o.to_string().contains("boom"));
    }
}
