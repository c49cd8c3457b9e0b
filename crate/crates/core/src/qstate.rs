//! Dense density-matrix algebra for small qubit registers.
//!
//! Wire 0 is the most significant qubit of a basis index, so for an
//! `n`-wire register wire `w` corresponds to bit `n - 1 - w`. This matches
//! the Kronecker product: in `a ⊗ b` the wires of `a` come first. Within a
//! single qubit, `|g⟩` is index 0 and `|e⟩` is index 1.
//!
//! Multi-wire operators follow the same convention: for an operator acting
//! on `wires = [w0, w1, ...]`, `w0` is the most significant bit of the
//! operator's own index.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::channels::KrausSet;
use crate::error::{Error, Result};

pub type C64 = Complex64;
pub type ComplexMatrix = DMatrix<C64>;
pub type WireIndex = usize;

/// Largest register the simulator accepts.
pub const MAX_WIRES: usize = 13;

pub const HERMITICITY_TOL: f64 = 1e-12;
pub const TRACE_TOL: f64 = 1e-12;
pub const POSITIVITY_TOL: f64 = 1e-10;
pub const UNITARITY_TOL: f64 = 1e-12;
pub const POPULATION_TOL: f64 = 1e-10;

pub(crate) fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

pub(crate) fn real(re: f64) -> C64 {
    C64::new(re, 0.0)
}

/// Number of qubits for a matrix of dimension `dim`, if `dim` is a power of two.
pub fn wires_for_dim(dim: usize) -> Option<usize> {
    if dim.is_power_of_two() {
        Some(dim.trailing_zeros() as usize)
    } else {
        None
    }
}

pub fn kron(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    a.kronecker(b)
}

pub fn dagger(m: &ComplexMatrix) -> ComplexMatrix {
    m.adjoint()
}

/// Largest entrywise deviation of `a` from `b`.
pub fn max_abs_diff(a: &ComplexMatrix, b: &ComplexMatrix) -> f64 {
    assert_eq!(a.shape(), b.shape(), "shape mismatch in max_abs_diff");
    a.iter().zip(b.iter()).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

pub fn unitarity_deviation(u: &ComplexMatrix) -> f64 {
    let n = u.nrows();
    max_abs_diff(&(u.adjoint() * u), &ComplexMatrix::identity(n, n))
}

fn check_wires(wires: &[WireIndex], num_wires: usize) -> Result<()> {
    for (i, &w) in wires.iter().enumerate() {
        if w >= num_wires {
            return Err(Error::WireOutOfRange { wire: w, num_wires });
        }
        if wires[..i].contains(&w) {
            return Err(Error::WireCollision(w));
        }
    }
    Ok(())
}

/// Index offsets of an operator's basis states inside the full register,
/// together with the union mask of the addressed bits.
fn layout(wires: &[WireIndex], num_wires: usize) -> (Vec<usize>, usize) {
    let k = wires.len();
    let masks: Vec<usize> = wires.iter().map(|&w| 1usize << (num_wires - 1 - w)).collect();
    let offsets =
        (0..1usize << k).map(|s| (0..k).filter(|&i| s >> (k - 1 - i) & 1 == 1).map(|i| masks[i]).sum()).collect();
    (offsets, masks.iter().sum())
}

fn check_operator(op: &ComplexMatrix, wires: &[WireIndex], num_wires: usize) -> Result<()> {
    check_wires(wires, num_wires)?;
    let expected = 1usize << wires.len();
    if op.nrows() != expected || op.ncols() != expected {
        return Err(Error::DimensionMismatch { expected, actual: op.nrows().max(op.ncols()) });
    }
    Ok(())
}

/// Register indices whose addressed bits are all zero and whose control
/// bits match `controls`.
fn block_bases(
    mask: usize,
    controls: &[(WireIndex, bool)],
    wires: &[WireIndex],
    num_wires: usize,
) -> Result<Vec<usize>> {
    let mut control_mask = 0;
    let mut control_value = 0;
    for (i, &(w, state)) in controls.iter().enumerate() {
        if w >= num_wires {
            return Err(Error::WireOutOfRange { wire: w, num_wires });
        }
        if wires.contains(&w) || controls[..i].iter().any(|c| c.0 == w) {
            return Err(Error::WireCollision(w));
        }
        let bit = 1usize << (num_wires - 1 - w);
        control_mask |= bit;
        if state {
            control_value |= bit;
        }
    }
    Ok((0..1usize << num_wires).filter(|b| b & mask == 0 && b & control_mask == control_value).collect())
}

/// `m ← op · m` on the row blocks starting at `bases`.
fn left_in_place(m: &mut ComplexMatrix, op: &ComplexMatrix, offsets: &[usize], bases: &[usize]) {
    let rows = m.nrows();
    let k = offsets.len();
    let coeffs: Vec<C64> = (0..k * k).map(|i| op[(i / k, i % k)]).collect();
    let mut gathered = vec![C64::default(); k];
    for column in m.as_mut_slice().chunks_exact_mut(rows) {
        for &base in bases {
            for (g, off) in gathered.iter_mut().zip(offsets) {
                *g = column[base + off];
            }
            for (s, off) in offsets.iter().enumerate() {
                column[base + off] = coeffs[s * k..(s + 1) * k].iter().zip(&gathered).map(|(c, g)| c * g).sum();
            }
        }
    }
}

/// `m ← m · op†` on the column blocks starting at `bases`.
fn right_adjoint_in_place(m: &mut ComplexMatrix, op: &ComplexMatrix, offsets: &[usize], bases: &[usize]) {
    let rows = m.nrows();
    let k = offsets.len();
    let data = m.as_mut_slice();
    let mut saved = vec![C64::default(); k * rows];
    for &base in bases {
        for (t, off) in offsets.iter().enumerate() {
            let col = (base + off) * rows;
            saved[t * rows..(t + 1) * rows].copy_from_slice(&data[col..col + rows]);
        }
        for (s, off) in offsets.iter().enumerate() {
            let col = (base + off) * rows;
            let target = &mut data[col..col + rows];
            target.fill(C64::default());
            for t in 0..k {
                let c = op[(s, t)].conj();
                if c == C64::default() {
                    continue;
                }
                for (x, y) in target.iter_mut().zip(&saved[t * rows..(t + 1) * rows]) {
                    *x += c * y;
                }
            }
        }
    }
}

/// `m ← U m U†` where `U` applies `op` to `wires` when every control wire is
/// in its given computational state and acts as the identity otherwise.
pub fn conjugate_in_place(
    m: &mut ComplexMatrix,
    op: &ComplexMatrix,
    wires: &[WireIndex],
    controls: &[(WireIndex, bool)],
    num_wires: usize,
) -> Result<()> {
    check_operator(op, wires, num_wires)?;
    let dim = 1usize << num_wires;
    if m.nrows() != dim || m.ncols() != dim {
        return Err(Error::DimensionMismatch { expected: dim, actual: m.nrows() });
    }
    let (offsets, mask) = layout(wires, num_wires);
    let bases = block_bases(mask, controls, wires, num_wires)?;
    left_in_place(m, op, &offsets, &bases);
    right_adjoint_in_place(m, op, &offsets, &bases);
    Ok(())
}

/// `op · m · op†` for an arbitrary (not necessarily density) matrix `m`.
pub fn conjugate_matrix(
    m: &ComplexMatrix,
    op: &ComplexMatrix,
    wires: &[WireIndex],
    num_wires: usize,
) -> Result<ComplexMatrix> {
    let mut out = m.clone();
    conjugate_in_place(&mut out, op, wires, &[], num_wires)?;
    Ok(out)
}

/// `Σ_k M_k · m · M_k†` on the given wires.
pub fn kraus_matrix(
    m: &ComplexMatrix,
    ops: &[ComplexMatrix],
    wires: &[WireIndex],
    num_wires: usize,
) -> Result<ComplexMatrix> {
    let mut out = ComplexMatrix::zeros(m.nrows(), m.ncols());
    for op in ops {
        out += conjugate_matrix(m, op, wires, num_wires)?;
    }
    Ok(out)
}

/// Traces out `discard` from an `num_wires`-wire matrix, keeping the
/// remaining wires in their original order.
pub fn partial_trace_matrix(m: &ComplexMatrix, num_wires: usize, discard: &[WireIndex]) -> Result<ComplexMatrix> {
    check_wires(discard, num_wires)?;
    if discard.len() == num_wires {
        return Err(Error::TraceAllWires);
    }
    let kept: Vec<WireIndex> = (0..num_wires).filter(|w| !discard.contains(w)).collect();
    let (kept_offsets, _) = layout(&kept, num_wires);
    let (traced_offsets, _) = layout(discard, num_wires);
    let dim = kept_offsets.len();
    let mut out = ComplexMatrix::zeros(dim, dim);
    for (r, roff) in kept_offsets.iter().enumerate() {
        for (col, coff) in kept_offsets.iter().enumerate() {
            out[(r, col)] = traced_offsets.iter().map(|toff| m[(roff + toff, coff + toff)]).sum();
        }
    }
    Ok(out)
}

/// Eigenvalues of the Hermitian part of `m`, ascending.
pub fn hermitian_eigenvalues(m: &ComplexMatrix) -> Vec<f64> {
    let h = (m + m.adjoint()) * real(0.5);
    let mut values: Vec<f64> = h.symmetric_eigenvalues().iter().copied().collect();
    values.sort_by(f64::total_cmp);
    values
}

/// A Hermitian, unit-trace, positive semidefinite operator on `num_wires` qubits.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix {
    num_wires: usize,
    matrix: ComplexMatrix,
}

impl DensityMatrix {
    /// Validates all three density-matrix invariants.
    pub fn new(matrix: ComplexMatrix) -> Result<Self> {
        if matrix.nrows() != matrix.ncols() {
            return Err(Error::InvalidState(format!("matrix is {}x{}, not square", matrix.nrows(), matrix.ncols())));
        }
        let num_wires = wires_for_dim(matrix.nrows())
            .ok_or_else(|| Error::InvalidState(format!("dimension {} is not a power of two", matrix.nrows())))?;
        if num_wires > MAX_WIRES {
            return Err(Error::RegisterTooLarge { requested: num_wires, max: MAX_WIRES });
        }
        let rho = Self { num_wires, matrix };
        rho.validate()?;
        Ok(rho)
    }

    /// Runs the full validation only when the `strict` feature is enabled.
    fn checked(self) -> Result<Self> {
        if cfg!(feature = "strict") {
            self.validate()?;
        }
        Ok(self)
    }

    pub fn ground() -> Self {
        Self::from_populations(0.0).expect("valid population")
    }

    pub fn excited() -> Self {
        Self::from_populations(1.0).expect("valid population")
    }

    /// Diagonal single-qubit state `diag(1 - p_e, p_e)`.
    pub fn from_populations(p_e: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&p_e) {
            return Err(Error::InvalidParameter(format!("population {p_e} outside [0, 1]")));
        }
        let mut m = ComplexMatrix::zeros(2, 2);
        m[(0, 0)] = real(1.0 - p_e);
        m[(1, 1)] = real(p_e);
        Ok(Self { num_wires: 1, matrix: m })
    }

    /// Gibbs state of `H = ω|e⟩⟨e|` at inverse temperature `beta`.
    pub fn thermal(beta: f64, omega: f64) -> Result<Self> {
        if beta.is_nan() || beta <= 0.0 || !omega.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "thermal state needs beta > 0 and finite omega (beta={beta}, omega={omega})"
            )));
        }
        Self::from_populations(excited_thermal_population(beta, omega))
    }

    pub fn maximally_mixed(num_wires: usize) -> Result<Self> {
        if num_wires > MAX_WIRES {
            return Err(Error::RegisterTooLarge { requested: num_wires, max: MAX_WIRES });
        }
        let dim = 1usize << num_wires;
        Ok(Self { num_wires, matrix: ComplexMatrix::identity(dim, dim) * real(1.0 / dim as f64) })
    }

    /// `|ψ⟩⟨ψ|` for a state vector, normalised on the way in.
    pub fn pure(amplitudes: &[C64]) -> Result<Self> {
        let norm: f64 = amplitudes.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        if norm == 0.0 || !norm.is_finite() {
            return Err(Error::InvalidState("state vector has zero or non-finite norm".into()));
        }
        let dim = amplitudes.len();
        let num_wires =
            wires_for_dim(dim).ok_or_else(|| Error::InvalidState(format!("dimension {dim} is not a power of two")))?;
        let psi = nalgebra::DVector::from_iterator(dim, amplitudes.iter().map(|a| a / norm));
        Ok(Self { num_wires, matrix: &psi * psi.adjoint() })
    }

    pub fn num_wires(&self) -> usize {
        self.num_wires
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> ComplexMatrix {
        self.matrix
    }

    pub fn trace(&self) -> C64 {
        self.matrix.trace()
    }

    pub fn hermiticity_error(&self) -> f64 {
        max_abs_diff(&self.matrix, &self.matrix.adjoint())
    }

    pub fn min_eigenvalue(&self) -> f64 {
        hermitian_eigenvalues(&self.matrix)[0]
    }

    pub fn validate(&self) -> Result<()> {
        let herm = self.hermiticity_error();
        if herm > HERMITICITY_TOL {
            return Err(Error::InvalidState(format!("not Hermitian (deviation {herm:e})")));
        }
        let trace_err = (self.trace() - real(1.0)).norm();
        if trace_err > TRACE_TOL {
            return Err(Error::InvalidState(format!("trace differs from 1 by {trace_err:e}")));
        }
        let min_eig = self.min_eigenvalue();
        if min_eig < -POSITIVITY_TOL {
            return Err(Error::InvalidState(format!("negative eigenvalue {min_eig:e}")));
        }
        Ok(())
    }

    /// `self ⊗ other`; the wires of `self` keep the lower indices.
    pub fn tensor(&self, other: &DensityMatrix) -> Result<Self> {
        let num_wires = self.num_wires + other.num_wires;
        if num_wires > MAX_WIRES {
            return Err(Error::RegisterTooLarge { requested: num_wires, max: MAX_WIRES });
        }
        Self { num_wires, matrix: kron(&self.matrix, &other.matrix) }.checked()
    }

    pub fn apply_unitary(&self, u: &ComplexMatrix, wires: &[WireIndex]) -> Result<Self> {
        check_operator(u, wires, self.num_wires)?;
        let deviation = unitarity_deviation(u);
        if deviation > UNITARITY_TOL {
            return Err(Error::NotUnitary { deviation });
        }
        let matrix = conjugate_matrix(&self.matrix, u, wires, self.num_wires)?;
        Self { num_wires: self.num_wires, matrix }.checked()
    }

    /// Applies `u` to `wires` on the subspace where each control wire is in
    /// the given computational state.
    pub fn apply_controlled_unitary(
        mut self,
        u: &ComplexMatrix,
        wires: &[WireIndex],
        controls: &[(WireIndex, bool)],
    ) -> Result<Self> {
        check_operator(u, wires, self.num_wires)?;
        let deviation = unitarity_deviation(u);
        if deviation > UNITARITY_TOL {
            return Err(Error::NotUnitary { deviation });
        }
        conjugate_in_place(&mut self.matrix, u, wires, controls, self.num_wires)?;
        self.checked()
    }

    pub fn apply_kraus(&self, kraus: &KrausSet, wires: &[WireIndex]) -> Result<Self> {
        kraus.check_complete()?;
        let matrix = kraus_matrix(&self.matrix, kraus.operators(), wires, self.num_wires)?;
        Self { num_wires: self.num_wires, matrix }.checked()
    }

    pub fn partial_trace(&self, discard: &[WireIndex]) -> Result<Self> {
        let matrix = partial_trace_matrix(&self.matrix, self.num_wires, discard)?;
        Self { num_wires: self.num_wires - discard.len(), matrix }.checked()
    }

    /// Probability of finding `wire` in `|e⟩`, clamped to `[0, 1]`.
    pub fn excited_population(&self, wire: WireIndex) -> Result<f64> {
        check_wires(&[wire], self.num_wires)?;
        let bit = 1usize << (self.num_wires - 1 - wire);
        let p: f64 = (0..self.dim()).filter(|i| i & bit != 0).map(|i| self.matrix[(i, i)].re).sum();
        if !(-POPULATION_TOL..=1.0 + POPULATION_TOL).contains(&p) {
            return Err(Error::InvalidState(format!("excited population {p} outside [0, 1]")));
        }
        Ok(p.clamp(0.0, 1.0))
    }

    /// `½‖a − b‖₁`.
    pub fn trace_distance(&self, other: &DensityMatrix) -> Result<f64> {
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), actual: other.dim() });
        }
        let diff = &self.matrix - &other.matrix;
        Ok(0.5 * hermitian_eigenvalues(&diff).iter().map(|l| l.abs()).sum::<f64>())
    }
}

/// `1 / (e^{βω} + 1)`.
pub fn excited_thermal_population(beta: f64, omega: f64) -> f64 {
    let x = beta * omega;
    // e^{-x} / (1 + e^{-x}) for large x avoids overflow
    if x > 0.0 {
        let t = (-x).exp();
        t / (1.0 + t)
    } else {
        1.0 / (x.exp() + 1.0)
    }
}

pub mod gates {
    //! Single-qubit matrices in the `|g⟩ = 0`, `|e⟩ = 1` basis.
    use super::{c, real, ComplexMatrix};

    pub fn identity() -> ComplexMatrix {
        ComplexMatrix::identity(2, 2)
    }

    pub fn pauli_x() -> ComplexMatrix {
        ComplexMatrix::from_row_slice(2, 2, &[real(0.0), real(1.0), real(1.0), real(0.0)])
    }

    pub fn pauli_y() -> ComplexMatrix {
        ComplexMatrix::from_row_slice(2, 2, &[real(0.0), c(0.0, -1.0), c(0.0, 1.0), real(0.0)])
    }

    pub fn pauli_z() -> ComplexMatrix {
        ComplexMatrix::from_row_slice(2, 2, &[real(1.0), real(0.0), real(0.0), real(-1.0)])
    }

    /// `σ₋ = |g⟩⟨e|`.
    pub fn lowering() -> ComplexMatrix {
        ComplexMatrix::from_row_slice(2, 2, &[real(0.0), real(1.0), real(0.0), real(0.0)])
    }

    /// `σ₊ = |e⟩⟨g|`.
    pub fn raising() -> ComplexMatrix {
        ComplexMatrix::from_row_slice(2, 2, &[real(0.0), real(0.0), real(1.0), real(0.0)])
    }

    /// `exp(-iφX/2)`.
    pub fn rot_x(phi: f64) -> ComplexMatrix {
        let (s, co) = (phi / 2.0).sin_cos();
        ComplexMatrix::from_row_slice(2, 2, &[real(co), c(0.0, -s), c(0.0, -s), real(co)])
    }

    /// `exp(-iφY/2)`.
    pub fn rot_y(phi: f64) -> ComplexMatrix {
        let (s, co) = (phi / 2.0).sin_cos();
        ComplexMatrix::from_row_slice(2, 2, &[real(co), real(-s), real(s), real(co)])
    }

    /// `exp(-iφZ/2)`.
    pub fn rot_z(phi: f64) -> ComplexMatrix {
        let (s, co) = (phi / 2.0).sin_cos();
        ComplexMatrix::from_row_slice(2, 2, &[c(co, -s), real(0.0), real(0.0), c(co, s)])
    }

    /// `exp(-iHt)` for `H = ω|e⟩⟨e|`.
    pub fn free_evolution(omega: f64, duration: f64) -> ComplexMatrix {
        let (s, co) = (omega * duration).sin_cos();
        ComplexMatrix::from_row_slice(2, 2, &[real(1.0), real(0.0), real(0.0), c(co, -s)])
    }
}
