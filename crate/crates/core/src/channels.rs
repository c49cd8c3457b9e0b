//! Thermal-bath channels for a single two-level system.
//!
//! An isochoric step of duration `δτ` at fixed splitting `ω` is the
//! generalized amplitude damping channel `p↓·E↓ + p↑·E↑` preceded by free
//! evolution. The Lindblad integrator here is an independent route to the
//! same map and is used to check it.

use nalgebra::{DMatrix, Matrix2};

use crate::error::{Error, Result};
use crate::qstate::{excited_thermal_population, gates, max_abs_diff, real, ComplexMatrix, DensityMatrix, C64};

pub const COMPLETENESS_TOL: f64 = 1e-12;

/// Inverse temperature (`k_B = 1`) and bare coupling rate of the bath.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BathParams {
    pub beta: f64,
    pub gamma0: f64,
}

impl BathParams {
    pub fn new(beta: f64, gamma0: f64) -> Result<Self> {
        if !(beta > 0.0 && beta.is_finite()) {
            return Err(Error::InvalidParameter(format!("beta must be positive and finite, got {beta}")));
        }
        if !(gamma0 > 0.0 && gamma0.is_finite()) {
            return Err(Error::InvalidParameter(format!("gamma0 must be positive and finite, got {gamma0}")));
        }
        Ok(Self { beta, gamma0 })
    }

    /// Mean photon number `1 / (e^{βω} − 1)`.
    pub fn photon_number(&self, omega: f64) -> f64 {
        1.0 / (self.beta * omega).exp_m1()
    }

    /// Total population relaxation rate `γ0 (e^{βω}+1)/(e^{βω}−1) = γ0 (2N + 1)`.
    pub fn relaxation_rate(&self, omega: f64) -> f64 {
        self.gamma0 * (1.0 + 2.0 * self.photon_number(omega))
    }
}

/// Channel parameters of one isochoric step.
///
/// `theta` is stored next to the values that define it so the relation
/// `cos θ = exp(−γ0 δτ (2N+1) / 2)` can be checked directly.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StepParams {
    pub bath: BathParams,
    pub omega: f64,
    pub delta_tau: f64,
    pub theta: f64,
    pub p_up: f64,
    pub p_down: f64,
    pub n_photon: f64,
}

impl StepParams {
    pub fn cos_theta(&self) -> f64 {
        self.theta.cos()
    }

    /// Deviation of `cos θ` from the value implied by the bath parameters.
    pub fn mixing_angle_residual(&self) -> f64 {
        let expected = (-0.5 * self.delta_tau * self.bath.relaxation_rate(self.omega)).exp();
        (self.cos_theta() - expected).abs()
    }
}

pub fn make_step_params(bath: BathParams, omega: f64, delta_tau: f64) -> Result<StepParams> {
    if !(omega > 0.0 && omega.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "omega must be positive (photon number diverges at omega <= 0), got {omega}"
        )));
    }
    if !(delta_tau >= 0.0 && delta_tau.is_finite()) {
        return Err(Error::InvalidParameter(format!("delta_tau must be non-negative, got {delta_tau}")));
    }
    let cos_theta = (-0.5 * delta_tau * bath.relaxation_rate(omega)).exp();
    let p_up = excited_thermal_population(bath.beta, omega);
    Ok(StepParams {
        bath,
        omega,
        delta_tau,
        theta: cos_theta.clamp(0.0, 1.0).acos(),
        p_up,
        p_down: 1.0 - p_up,
        n_photon: bath.photon_number(omega),
    })
}

/// Kraus operators of a CPTP map, all of the same square dimension.
#[derive(Clone, Debug, PartialEq)]
pub struct KrausSet {
    operators: Vec<ComplexMatrix>,
}

impl KrausSet {
    pub fn new(operators: Vec<ComplexMatrix>) -> Result<Self> {
        let set = Self::from_operators_unchecked(operators)?;
        set.check_complete()?;
        Ok(set)
    }

    fn from_operators_unchecked(operators: Vec<ComplexMatrix>) -> Result<Self> {
        let first = operators.first().ok_or(Error::EmptyKraus)?;
        let dim = first.nrows();
        for op in &operators {
            if op.nrows() != dim || op.ncols() != dim {
                return Err(Error::DimensionMismatch { expected: dim, actual: op.nrows().max(op.ncols()) });
            }
        }
        Ok(Self { operators })
    }

    pub fn operators(&self) -> &[ComplexMatrix] {
        &self.operators
    }

    pub fn dim(&self) -> usize {
        self.operators[0].nrows()
    }

    /// `max |Σ M†M − I|`.
    pub fn completeness_error(&self) -> f64 {
        let dim = self.dim();
        let sum = self.operators.iter().fold(ComplexMatrix::zeros(dim, dim), |acc, m| acc + m.adjoint() * m);
        max_abs_diff(&sum, &ComplexMatrix::identity(dim, dim))
    }

    pub fn check_complete(&self) -> Result<()> {
        let deviation = self.completeness_error();
        if deviation > COMPLETENESS_TOL {
            return Err(Error::IncompleteKraus { deviation });
        }
        Ok(())
    }

    /// `Σ M m M†` on a full-dimension matrix.
    pub fn apply_matrix(&self, m: &ComplexMatrix) -> ComplexMatrix {
        self.operators.iter().fold(ComplexMatrix::zeros(m.nrows(), m.ncols()), |acc, op| acc + op * m * op.adjoint())
    }

    /// Conjugates every operator by `u`: `M → u M u†`.
    pub fn conjugated(&self, u: &ComplexMatrix) -> Self {
        Self { operators: self.operators.iter().map(|m| u * m * u.adjoint()).collect() }
    }
}

/// `{M0, M1}` with `M0 = |g⟩⟨g| + cos θ |e⟩⟨e|`, `M1 = sin θ σ₋`.
pub fn damping_kraus(theta: f64) -> KrausSet {
    let (s, co) = theta.sin_cos();
    let m0 = ComplexMatrix::from_row_slice(2, 2, &[real(1.0), real(0.0), real(0.0), real(co)]);
    let m1 = gates::lowering() * real(s);
    KrausSet { operators: vec![m0, m1] }
}

/// `{M2, M3}` with `M2 = cos θ |g⟩⟨g| + |e⟩⟨e|`, `M3 = sin θ σ₊`.
pub fn pumping_kraus(theta: f64) -> KrausSet {
    let (s, co) = theta.sin_cos();
    let m2 = ComplexMatrix::from_row_slice(2, 2, &[real(co), real(0.0), real(0.0), real(1.0)]);
    let m3 = gates::raising() * real(s);
    KrausSet { operators: vec![m2, m3] }
}

/// Which sub-channel an isochoric step applies in a single trajectory.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Branch {
    /// Amplitude damping, selected with probability `p↓`.
    Down,
    /// Amplitude pumping, selected with probability `p↑`.
    Up,
}

impl Branch {
    pub fn kraus(self, theta: f64) -> KrausSet {
        match self {
            Branch::Down => damping_kraus(theta),
            Branch::Up => pumping_kraus(theta),
        }
    }

    pub fn probability(self, step: &StepParams) -> f64 {
        match self {
            Branch::Down => step.p_down,
            Branch::Up => step.p_up,
        }
    }

    pub fn symbol(self) -> char {
        match self {
            Branch::Down => '↓',
            Branch::Up => '↑',
        }
    }

    /// Accepts `↓`/`d`/`D`/`0` and `↑`/`u`/`U`/`1`.
    pub fn from_symbol(c: char) -> Option<Self> {
        match c {
            '↓' | 'd' | 'D' | '0' => Some(Branch::Down),
            '↑' | 'u' | 'U' | '1' => Some(Branch::Up),
            _ => None,
        }
    }

    pub fn parse_selection(text: &str) -> Result<Vec<Self>> {
        text.chars()
            .filter(|c| !c.is_whitespace())
            .map(|c| {
                Branch::from_symbol(c).ok_or_else(|| {
                    Error::InvalidParameter(format!("unknown branch symbol {c:?} in selection {text:?}"))
                })
            })
            .collect()
    }
}

/// The four weighted Kraus operators of `p↓E↓ + p↑E↑`, without free evolution.
pub fn gadc_kraus(step: &StepParams) -> KrausSet {
    let down = real(step.p_down.sqrt());
    let up = real(step.p_up.sqrt());
    let mut operators: Vec<ComplexMatrix> = damping_kraus(step.theta).operators.into_iter().map(|m| m * down).collect();
    operators.extend(pumping_kraus(step.theta).operators.into_iter().map(|m| m * up));
    KrausSet { operators }
}

/// Full isochoric step `E_GAD[e^{−iHδτ} m e^{iHδτ}]` on a raw 2×2 matrix.
pub fn gadc_map(m: &ComplexMatrix, step: &StepParams) -> ComplexMatrix {
    let u = gates::free_evolution(step.omega, step.delta_tau);
    let rotated = &u * m * u.adjoint();
    gadc_kraus(step).apply_matrix(&rotated)
}

pub fn apply_gadc(rho: &DensityMatrix, step: &StepParams) -> Result<DensityMatrix> {
    if rho.num_wires() != 1 {
        return Err(Error::DimensionMismatch { expected: 2, actual: rho.dim() });
    }
    let rotated = rho.apply_unitary(&gates::free_evolution(step.omega, step.delta_tau), &[0])?;
    rotated.apply_kraus(&gadc_kraus(step), &[0])
}

/// Lindblad dissipator `L m L† − ½{L†L, m}`.
fn dissipator(l: &ComplexMatrix, m: &ComplexMatrix) -> ComplexMatrix {
    let ldl = l.adjoint() * l;
    l * m * l.adjoint() - (&ldl * m + m * &ldl) * real(0.5)
}

/// Right-hand side of the thermal master equation for `H = ω|e⟩⟨e|`, on a raw matrix.
pub fn lindblad_generator(m: &ComplexMatrix, omega: f64, bath: &BathParams) -> ComplexMatrix {
    let n = bath.photon_number(omega);
    let h = ComplexMatrix::from_row_slice(2, 2, &[real(0.0), real(0.0), real(0.0), real(omega)]);
    let commutator = &h * m - m * &h;
    commutator * C64::new(0.0, -1.0)
        + dissipator(&gates::raising(), m) * real(bath.gamma0 * n)
        + dissipator(&gates::lowering(), m) * real(bath.gamma0 * (n + 1.0))
}

pub fn lindblad_rhs(rho: &DensityMatrix, omega: f64, bath: &BathParams) -> Result<ComplexMatrix> {
    if rho.num_wires() != 1 {
        return Err(Error::DimensionMismatch { expected: 2, actual: rho.dim() });
    }
    Ok(lindblad_generator(rho.matrix(), omega, bath))
}

const MAX_TRACE_DRIFT: f64 = 1e-8;

/// Same generator as [`lindblad_generator`] on stack-allocated matrices.
struct QubitGenerator {
    h: Matrix2<C64>,
    up: (Matrix2<C64>, Matrix2<C64>),
    down: (Matrix2<C64>, Matrix2<C64>),
    rate_up: C64,
    rate_down: C64,
}

impl QubitGenerator {
    fn new(omega: f64, rate_up: f64, rate_down: f64) -> Self {
        let zero = real(0.0);
        let one = real(1.0);
        let raising = Matrix2::new(zero, zero, one, zero);
        let lowering = Matrix2::new(zero, one, zero, zero);
        Self {
            h: Matrix2::new(zero, zero, zero, real(omega)),
            up: (raising, raising.adjoint() * raising),
            down: (lowering, lowering.adjoint() * lowering),
            rate_up: real(rate_up),
            rate_down: real(rate_down),
        }
    }

    fn dissipate(l: &(Matrix2<C64>, Matrix2<C64>), m: &Matrix2<C64>) -> Matrix2<C64> {
        l.0 * m * l.0.adjoint() - (l.1 * m + m * l.1) * real(0.5)
    }

    fn apply(&self, m: &Matrix2<C64>) -> Matrix2<C64> {
        (self.h * m - m * self.h) * C64::new(0.0, -1.0)
            + Self::dissipate(&self.up, m) * self.rate_up
            + Self::dissipate(&self.down, m) * self.rate_down
    }
}

/// Classical RK4 integration of the master equation on a raw matrix.
///
/// The trace of the input is conserved by the exact flow; a drift larger than
/// `1e-8` is reported as a step-size error.
pub fn propagate_lindblad(
    m: &ComplexMatrix,
    omega: f64,
    bath: &BathParams,
    duration: f64,
    num_substeps: usize,
) -> Result<ComplexMatrix> {
    if num_substeps == 0 {
        return Err(Error::InvalidParameter("num_substeps must be positive".into()));
    }
    if !(duration >= 0.0 && duration.is_finite()) {
        return Err(Error::InvalidParameter(format!("duration must be non-negative, got {duration}")));
    }
    if m.nrows() != 2 || m.ncols() != 2 {
        return Err(Error::DimensionMismatch { expected: 2, actual: m.nrows() });
    }
    if duration == 0.0 {
        return Ok(m.clone());
    }
    let n = bath.photon_number(omega);
    let gen = QubitGenerator::new(omega, bath.gamma0 * n, bath.gamma0 * (n + 1.0));
    let h = duration / num_substeps as f64;
    let half = real(0.5 * h);
    let full = real(h);
    let sixth = real(h / 6.0);
    let mut state = Matrix2::new(m[(0, 0)], m[(0, 1)], m[(1, 0)], m[(1, 1)]);
    let initial_trace = state.trace();
    for _ in 0..num_substeps {
        let k1 = gen.apply(&state);
        let k2 = gen.apply(&(state + k1 * half));
        let k3 = gen.apply(&(state + k2 * half));
        let k4 = gen.apply(&(state + k3 * full));
        state += (k1 + (k2 + k3) * real(2.0) + k4) * sixth;
    }
    let drift = (state.trace() - initial_trace).norm();
    if drift > MAX_TRACE_DRIFT {
        return Err(Error::StepSize { drift });
    }
    Ok(ComplexMatrix::from_row_slice(2, 2, &[state[(0, 0)], state[(0, 1)], state[(1, 0)], state[(1, 1)]]))
}

/// RK4 substeps per unit of evolution time before any refinement.
pub const DEFAULT_SUBSTEPS_PER_UNIT_TIME: f64 = 1000.0;
const SELF_CONSISTENCY_TOL: f64 = 1e-10;
const MAX_SUBSTEPS: usize = 1 << 24;

/// Integrates with the default substep density, doubling until two successive
/// resolutions agree entrywise within `1e-10`.
pub fn propagate_lindblad_converged(
    m: &ComplexMatrix,
    omega: f64,
    bath: &BathParams,
    duration: f64,
) -> Result<ComplexMatrix> {
    let mut n = ((DEFAULT_SUBSTEPS_PER_UNIT_TIME * duration).ceil() as usize).max(1);
    let mut coarse = propagate_lindblad(m, omega, bath, duration, n)?;
    loop {
        n *= 2;
        if n > MAX_SUBSTEPS {
            return Err(Error::StepSize { drift: f64::NAN });
        }
        let fine = propagate_lindblad(m, omega, bath, duration, n)?;
        if max_abs_diff(&coarse, &fine) < SELF_CONSISTENCY_TOL {
            return Ok(fine);
        }
        coarse = fine;
    }
}

pub fn evolve_master_equation(
    rho: &DensityMatrix,
    omega: f64,
    bath: &BathParams,
    duration: f64,
    num_substeps: usize,
) -> Result<DensityMatrix> {
    if rho.num_wires() != 1 {
        return Err(Error::DimensionMismatch { expected: 2, actual: rho.dim() });
    }
    let out = propagate_lindblad(rho.matrix(), omega, bath, duration, num_substeps)?;
    let hermitian = (&out + out.adjoint()) * real(0.5);
    let trace = hermitian.trace().re;
    DensityMatrix::new(hermitian * real(1.0 / trace))
}

/// Transfer matrix of a linear map on `d × d` matrices, acting on
/// column-stacked vectors: `vec(m)[i + j·d] = m[i, j]`.
#[derive(Clone, Debug, PartialEq)]
pub struct Superoperator {
    dim: usize,
    matrix: ComplexMatrix,
}

impl Superoperator {
    pub fn identity(dim: usize) -> Self {
        Self { dim, matrix: ComplexMatrix::identity(dim * dim, dim * dim) }
    }

    pub fn from_kraus(kraus: &KrausSet) -> Self {
        superoperator_of(kraus.dim(), |m| Ok(kraus.apply_matrix(m))).expect("Kraus maps are infallible")
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    pub fn apply(&self, m: &ComplexMatrix) -> ComplexMatrix {
        let v = nalgebra::DVector::from_column_slice(m.as_slice());
        let out = &self.matrix * v;
        DMatrix::from_column_slice(self.dim, self.dim, out.as_slice())
    }

    pub fn max_abs_diff(&self, other: &Superoperator) -> f64 {
        max_abs_diff(&self.matrix, &other.matrix)
    }

    pub fn rank(&self, eps: f64) -> usize {
        self.matrix.clone().rank(eps)
    }
}

/// Builds the transfer matrix of `channel` by applying it to the matrix units `|i⟩⟨j|`.
pub fn superoperator_of<F>(dim: usize, channel: F) -> Result<Superoperator>
where
    F: Fn(&ComplexMatrix) -> Result<ComplexMatrix>,
{
    let d2 = dim * dim;
    let mut matrix = ComplexMatrix::zeros(d2, d2);
    for j in 0..dim {
        for i in 0..dim {
            let mut unit = ComplexMatrix::zeros(dim, dim);
            unit[(i, j)] = real(1.0);
            let image = channel(&unit)?;
            if image.nrows() != dim || image.ncols() != dim {
                return Err(Error::DimensionMismatch { expected: dim, actual: image.nrows() });
            }
            matrix.column_mut(i + j * dim).copy_from_slice(image.as_slice());
        }
    }
    Ok(Superoperator { dim, matrix })
}

/// Transfer matrix of the isochoric step, free evolution included.
pub fn gadc_superoperator(step: &StepParams) -> Superoperator {
    superoperator_of(2, |m| Ok(gadc_map(m, step))).expect("GADC map is infallible")
}

/// Transfer matrix of the RK4-propagated master equation over `duration`.
pub fn lindblad_superoperator(omega: f64, bath: &BathParams, duration: f64) -> Result<Superoperator> {
    superoperator_of(2, |m| propagate_lindblad_converged(m, omega, bath, duration))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qstate::gates::pauli_x;
    use std::f64::consts::FRAC_PI_2;

    fn bath() -> BathParams {
        BathParams::new(1.0, 1.0).unwrap()
    }

    fn coherent(p_e: f64, coherence: C64) -> DensityMatrix {
        let mut m = ComplexMatrix::zeros(2, 2);
        m[(0, 0)] = real(1.0 - p_e);
        m[(1, 1)] = real(p_e);
        m[(1, 0)] = coherence;
        m[(0, 1)] = coherence.conj();
        DensityMatrix::new(m).unwrap()
    }

    #[test]
    fn bath_validation() {
        assert!(BathParams::new(0.0, 1.0).is_err());
        assert!(BathParams::new(1.0, -1.0).is_err());
        assert!(BathParams::new(f64::INFINITY, 1.0).is_err());
    }

    #[test]
    fn step_params_zero_contact_time_is_identity() {
        let step = make_step_params(bath(), 1.0, 0.0).unwrap();
        assert_eq!(step.theta, 0.0);
        let rho = coherent(0.4, C64::new(0.1, 0.2));
        let out = apply_gadc(&rho, &step).unwrap();
        assert!(max_abs_diff(out.matrix(), rho.matrix()) < 1e-15);
    }

    #[test]
    fn step_params_reference_values() {
        let step = make_step_params(bath(), 1.0, 0.5).unwrap();
        let e = 1f64.exp();
        let expected_cos = (-0.25 * (e + 1.0) / (e - 1.0)).exp();
        assert!((step.cos_theta() - expected_cos).abs() < 1e-15);
        assert!((step.cos_theta() - 0.58218).abs() < 1e-5);
        assert!((step.p_up - 0.26894).abs() < 5e-6);
        assert!((step.p_up + step.p_down - 1.0).abs() < 1e-15);
        assert!((step.n_photon - 1.0 / (e - 1.0)).abs() < 1e-15);
        assert!(step.mixing_angle_residual() < 1e-15);

        let slow = make_step_params(bath(), 1.5, 10.0).unwrap();
        let e15 = 1.5f64.exp();
        let expected = (-5.0 * (e15 + 1.0) / (e15 - 1.0)).exp();
        assert!((slow.cos_theta() - expected).abs() < 1e-15);
        assert!((slow.cos_theta() - 3.8e-4).abs() < 5e-6);
        assert!((slow.theta - FRAC_PI_2).abs() < 1e-3);
    }

    #[test]
    fn step_params_reject_nonpositive_omega() {
        assert!(make_step_params(bath(), 0.0, 1.0).is_err());
        assert!(make_step_params(bath(), -1.0, 1.0).is_err());
        assert!(make_step_params(bath(), 1.0, -0.1).is_err());
    }

    #[test]
    fn damping_kraus_limits() {
        let id = damping_kraus(0.0);
        assert!(max_abs_diff(&id.operators()[0], &ComplexMatrix::identity(2, 2)) < 1e-15);
        assert!(id.operators()[1].iter().all(|z| z.norm() < 1e-15));

        let full = damping_kraus(FRAC_PI_2);
        let out = DensityMatrix::excited().apply_kraus(&full, &[0]).unwrap();
        assert!(max_abs_diff(out.matrix(), DensityMatrix::ground().matrix()) < 1e-15);
    }

    #[test]
    fn damping_kraus_reference_entries() {
        let theta = 0.58218f64.acos();
        let ks = damping_kraus(theta);
        let m0 = &ks.operators()[0];
        let m1 = &ks.operators()[1];
        assert!((m0[(0, 0)].re - 1.0).abs() < 1e-15);
        assert!((m0[(1, 1)].re - 0.58218).abs() < 1e-15);
        assert!((m1[(0, 1)].re - 0.81306).abs() < 5e-6);
        assert_eq!(m1[(1, 0)], real(0.0));
        assert!(ks.completeness_error() < 1e-15);
    }

    #[test]
    fn damping_kraus_population_arithmetic() {
        let step = make_step_params(bath(), 1.0, 0.5).unwrap();
        let rho = DensityMatrix::from_populations(step.p_up).unwrap();
        let out = rho.apply_kraus(&damping_kraus(step.theta), &[0]).unwrap();
        let expected = step.p_up * step.cos_theta().powi(2);
        assert!((out.excited_population(0).unwrap() - expected).abs() < 1e-15);
        assert!((expected - 0.09115).abs() < 5e-6);
    }

    #[test]
    fn pumping_is_bit_flip_conjugate_of_damping() {
        for theta in [0.0, 0.3, 0.9, FRAC_PI_2] {
            let conj = damping_kraus(theta).conjugated(&pauli_x());
            let pump = pumping_kraus(theta);
            for (a, b) in conj.operators().iter().zip(pump.operators()) {
                assert!(max_abs_diff(a, b) < 1e-15);
            }
        }
        let out = DensityMatrix::ground().apply_kraus(&pumping_kraus(FRAC_PI_2), &[0]).unwrap();
        assert!(max_abs_diff(out.matrix(), DensityMatrix::excited().matrix()) < 1e-15);
        let rho = coherent(0.3, C64::new(0.1, -0.2));
        let same = rho.apply_kraus(&pumping_kraus(0.0), &[0]).unwrap();
        assert!(max_abs_diff(same.matrix(), rho.matrix()) < 1e-15);
    }

    #[test]
    fn incomplete_kraus_rejected() {
        let half = vec![ComplexMatrix::identity(2, 2) * real(0.5)];
        assert!(matches!(KrausSet::new(half), Err(Error::IncompleteKraus { .. })));
        assert_eq!(KrausSet::new(vec![]), Err(Error::EmptyKraus));
    }

    #[test]
    fn gadc_gibbs_fixed_point() {
        let step = make_step_params(bath(), 1.3, 0.7).unwrap();
        let thermal = DensityMatrix::thermal(1.0, 1.3).unwrap();
        let out = apply_gadc(&thermal, &step).unwrap();
        assert!(max_abs_diff(out.matrix(), thermal.matrix()) < 1e-12);
    }

    #[test]
    fn gadc_full_thermalization() {
        let mut step = make_step_params(bath(), 1.5, 0.5).unwrap();
        step.theta = FRAC_PI_2;
        let out = apply_gadc(&coherent(0.9, C64::new(0.2, 0.1)), &step).unwrap();
        assert!((out.excited_population(0).unwrap() - step.p_up).abs() < 1e-15);
        assert!(out.matrix()[(1, 0)].norm() < 1e-15);
    }

    #[test]
    fn gadc_population_recursion_reference_run() {
        let step = make_step_params(bath(), 1.5, 0.5).unwrap();
        assert!((step.p_up - 0.18243).abs() < 5e-6);
        assert!((step.cos_theta().powi(2) - 0.45512).abs() < 2e-5);
        let p0 = 1.0 / (1f64.exp() + 1.0);
        let out = apply_gadc(&DensityMatrix::from_populations(p0).unwrap(), &step).unwrap();
        let c2 = step.cos_theta().powi(2);
        let expected = p0 * c2 + step.p_up * (1.0 - c2);
        assert!((out.excited_population(0).unwrap() - expected).abs() < 1e-15);
        assert!((expected - 0.22181).abs() < 2e-5);
    }

    #[test]
    fn lindblad_rhs_values() {
        let b = bath();
        let thermal = DensityMatrix::thermal(1.0, 1.0).unwrap();
        let rhs = lindblad_rhs(&thermal, 1.0, &b).unwrap();
        assert!(rhs.iter().all(|z| z.norm() < 1e-14));

        let rhs = lindblad_rhs(&DensityMatrix::excited(), 1.0, &b).unwrap();
        let n = b.photon_number(1.0);
        assert!((rhs[(1, 1)].re + (n + 1.0)).abs() < 1e-14);
        assert!(rhs.trace().norm() < 1e-14);

        // coherence: d ρ_eg/dt = (−iω − γ0(2N+1)/2) ρ_eg
        let rho = coherent(0.5, real(0.3));
        let rhs = lindblad_rhs(&rho, 1.0, &b).unwrap();
        let expected = C64::new(-(2.0 * n + 1.0) / 2.0, -1.0) * real(0.3);
        assert!((rhs[(1, 0)] - expected).norm() < 1e-14);
        assert!(max_abs_diff(&rhs, &rhs.adjoint()) < 1e-14);
    }

    #[test]
    fn master_equation_relaxation() {
        let b = bath();
        let rho = DensityMatrix::from_populations(0.5).unwrap();
        assert_eq!(evolve_master_equation(&rho, 1.0, &b, 0.0, 10).unwrap(), rho);

        let out = evolve_master_equation(&rho, 1.0, &b, 0.5, 1000).unwrap();
        let p_eq = 1.0 / (1f64.exp() + 1.0);
        let gamma = b.relaxation_rate(1.0);
        let expected = p_eq + (0.5 - p_eq) * (-gamma * 0.5).exp();
        assert!((out.excited_population(0).unwrap() - expected).abs() < 1e-12);
        assert!((expected - 0.34725).abs() < 5e-6);

        let thermal = DensityMatrix::thermal(1.0, 1.0).unwrap();
        let still = evolve_master_equation(&thermal, 1.0, &b, 3.0, 3000).unwrap();
        assert!(max_abs_diff(still.matrix(), thermal.matrix()) < 1e-13);

        assert!(evolve_master_equation(&rho, 1.0, &b, 1.0, 0).is_err());
    }

    #[test]
    fn master_equation_reports_unstable_steps() {
        // one RK4 step far outside the stability region blows the trace up
        let b = BathParams::new(0.01, 1.0).unwrap();
        let rho = DensityMatrix::excited();
        assert!(matches!(
            evolve_master_equation(&rho, 1.0, &b, 1000.0, 1),
            Err(Error::StepSize { .. }) | Err(Error::InvalidState(_))
        ));
    }

    #[test]
    fn superoperator_identity_and_constant_map() {
        let id = superoperator_of(2, |m| Ok(m.clone())).unwrap();
        assert_eq!(id, Superoperator::identity(2));

        let full = Superoperator::from_kraus(&damping_kraus(FRAC_PI_2));
        assert_eq!(full.rank(1e-12), 1);
        let out = full.apply(DensityMatrix::from_populations(0.7).unwrap().matrix());
        assert!(max_abs_diff(&out, DensityMatrix::ground().matrix()) < 1e-15);
    }

    #[test]
    fn superoperator_reproduces_map() {
        let step = make_step_params(bath(), 1.2, 0.4).unwrap();
        let s = gadc_superoperator(&step);
        let rho = coherent(0.35, C64::new(0.05, 0.2));
        let direct = apply_gadc(&rho, &step).unwrap();
        assert!(max_abs_diff(&s.apply(rho.matrix()), direct.matrix()) < 1e-15);
    }

    #[test]
    fn gadc_matches_lindblad_propagator() {
        let b = bath();
        let step = make_step_params(b, 1.0, 0.5).unwrap();
        let lind = lindblad_superoperator(1.0, &b, 0.5).unwrap();
        assert!(gadc_superoperator(&step).max_abs_diff(&lind) < 1e-8);
    }
}
