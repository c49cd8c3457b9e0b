//! Gate-level dilations of the damping and pumping sub-channels, register
//! simulation and shot sampling.

pub mod qasm;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution};

use crate::channels::{Branch, StepParams, Superoperator};
use crate::error::{Error, Result};
use crate::qstate::{
    conjugate_in_place, gates, kron, partial_trace_matrix, real, ComplexMatrix, DensityMatrix, WireIndex, MAX_WIRES,
};

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum GateKind {
    Not,
    RotX(f64),
    RotY(f64),
    /// `exp(−iHt)` with `H = ω|e⟩⟨e|`.
    FreeEvolution {
        omega: f64,
        delta_tau: f64,
    },
}

impl GateKind {
    pub fn matrix(&self) -> ComplexMatrix {
        match *self {
            GateKind::Not => gates::pauli_x(),
            GateKind::RotX(a) => gates::rot_x(a),
            GateKind::RotY(a) => gates::rot_y(a),
            GateKind::FreeEvolution { omega, delta_tau } => gates::free_evolution(omega, delta_tau),
        }
    }

    fn is_finite(&self) -> bool {
        match *self {
            GateKind::Not => true,
            GateKind::RotX(a) | GateKind::RotY(a) => a.is_finite(),
            GateKind::FreeEvolution { omega, delta_tau } => omega.is_finite() && delta_tau.is_finite(),
        }
    }
}

/// Fires when `wire` is in the computational state `state` (`false` = `|0⟩`).
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Control {
    pub wire: WireIndex,
    pub state: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Gate {
    pub kind: GateKind,
    pub target: WireIndex,
    pub controls: Vec<Control>,
}

impl Gate {
    pub fn new(kind: GateKind, target: WireIndex) -> Self {
        Self { kind, target, controls: Vec::new() }
    }

    pub fn not(target: WireIndex) -> Self {
        Self::new(GateKind::Not, target)
    }

    pub fn rot_x(angle: f64, target: WireIndex) -> Self {
        Self::new(GateKind::RotX(angle), target)
    }

    pub fn rot_y(angle: f64, target: WireIndex) -> Self {
        Self::new(GateKind::RotY(angle), target)
    }

    pub fn free_evolution(omega: f64, delta_tau: f64, target: WireIndex) -> Self {
        Self::new(GateKind::FreeEvolution { omega, delta_tau }, target)
    }

    pub fn cnot(control: WireIndex, target: WireIndex) -> Self {
        Self::not(target).controlled(control, true)
    }

    pub fn controlled_rot_y(angle: f64, control: WireIndex, target: WireIndex) -> Self {
        Self::rot_y(angle, target).controlled(control, true)
    }

    /// Adds one more control.
    pub fn controlled(mut self, wire: WireIndex, state: bool) -> Self {
        self.controls.push(Control { wire, state });
        self
    }

    /// Controls first, target last.
    pub fn wires(&self) -> Vec<WireIndex> {
        self.controls.iter().map(|c| c.wire).chain(std::iter::once(self.target)).collect()
    }

    /// `(wire, state)` pairs of the controls.
    pub fn control_pairs(&self) -> Vec<(WireIndex, bool)> {
        self.controls.iter().map(|c| (c.wire, c.state)).collect()
    }

    /// Applies the gate to a register state.
    pub fn apply(&self, rho: DensityMatrix) -> Result<DensityMatrix> {
        rho.apply_controlled_unitary(&self.kind.matrix(), &[self.target], &self.control_pairs())
    }

    /// Unitary on [`Gate::wires`].
    pub fn matrix(&self) -> ComplexMatrix {
        let base = self.kind.matrix();
        let k = self.controls.len();
        let dim = 2usize << k;
        let mut full = ComplexMatrix::identity(dim, dim);
        // control bits are the high bits, in order; the target is bit 0
        let active =
            self.controls.iter().enumerate().fold(0usize, |acc, (i, c)| acc | (usize::from(c.state) << (k - i)));
        for r in 0..2 {
            for col in 0..2 {
                full[(active | r, active | col)] = base[(r, col)];
            }
        }
        full
    }

    pub fn validate(&self, num_wires: usize) -> Result<()> {
        let wires = self.wires();
        for (i, &w) in wires.iter().enumerate() {
            if w >= num_wires {
                return Err(Error::WireOutOfRange { wire: w, num_wires });
            }
            if wires[..i].contains(&w) {
                return Err(Error::WireCollision(w));
            }
        }
        if !self.kind.is_finite() {
            return Err(Error::InvalidParameter(format!("non-finite gate parameter in {:?}", self.kind)));
        }
        Ok(())
    }
}

/// Gates on a register whose qubits start in given single-qubit states.
#[derive(Clone, Debug, PartialEq)]
pub struct Circuit {
    num_wires: usize,
    initial_states: Vec<DensityMatrix>,
    gates: Vec<Gate>,
    measure_wire: WireIndex,
}

impl Circuit {
    /// All wires start in `|g⟩`.
    pub fn new(num_wires: usize, measure_wire: WireIndex) -> Result<Self> {
        if num_wires == 0 {
            return Err(Error::InvalidParameter("a circuit needs at least one wire".into()));
        }
        if measure_wire >= num_wires {
            return Err(Error::WireOutOfRange { wire: measure_wire, num_wires });
        }
        Ok(Self {
            num_wires,
            initial_states: vec![DensityMatrix::ground(); num_wires],
            gates: Vec::new(),
            measure_wire,
        })
    }

    pub fn set_initial_state(&mut self, wire: WireIndex, state: DensityMatrix) -> Result<()> {
        if wire >= self.num_wires {
            return Err(Error::WireOutOfRange { wire, num_wires: self.num_wires });
        }
        if state.num_wires() != 1 {
            return Err(Error::DimensionMismatch { expected: 2, actual: state.dim() });
        }
        self.initial_states[wire] = state;
        Ok(())
    }

    pub fn push(&mut self, gate: Gate) -> Result<()> {
        gate.validate(self.num_wires)?;
        self.gates.push(gate);
        Ok(())
    }

    pub fn extend<I: IntoIterator<Item = Gate>>(&mut self, gates: I) -> Result<()> {
        gates.into_iter().try_for_each(|g| self.push(g))
    }

    pub fn num_wires(&self) -> usize {
        self.num_wires
    }

    pub fn initial_states(&self) -> &[DensityMatrix] {
        &self.initial_states
    }

    pub fn gates(&self) -> &[Gate] {
        &self.gates
    }

    pub fn measure_wire(&self) -> WireIndex {
        self.measure_wire
    }
}

/// Final register state: the tensor product of the initial states with every gate applied.
///
/// Wires join the simulated register when a gate first touches them; until
/// then they are still in their initial product state.
pub fn simulate(circuit: &Circuit) -> Result<DensityMatrix> {
    if circuit.num_wires > MAX_WIRES {
        return Err(Error::RegisterTooLarge { requested: circuit.num_wires, max: MAX_WIRES });
    }
    let states = &circuit.initial_states;
    let mut rho = states[0].clone();
    for gate in &circuit.gates {
        let highest = gate.wires().into_iter().max().unwrap_or(0);
        for state in &states[rho.num_wires()..=highest.max(rho.num_wires() - 1)] {
            rho = rho.tensor(state)?;
        }
        rho = gate.apply(rho)?;
    }
    for state in &states[rho.num_wires()..] {
        rho = rho.tensor(state)?;
    }
    Ok(rho)
}

/// `[C-RY(2θ) system→ancilla, CNOT ancilla→system]`; with the ancilla in
/// `|g⟩` and traced out this is amplitude damping with `cos θ` survival amplitude.
pub fn build_damping_stage(theta: f64, system: WireIndex, ancilla: WireIndex) -> Vec<Gate> {
    vec![Gate::controlled_rot_y(2.0 * theta, system, ancilla), Gate::cnot(ancilla, system)]
}

/// The damping stage conjugated by a bit flip of the system.
pub fn build_pumping_stage(theta: f64, system: WireIndex, ancilla: WireIndex) -> Vec<Gate> {
    let mut stage = vec![Gate::not(system)];
    stage.extend(build_damping_stage(theta, system, ancilla));
    stage.push(Gate::not(system));
    stage
}

pub fn build_branch_stage(branch: Branch, theta: f64, system: WireIndex, ancilla: WireIndex) -> Vec<Gate> {
    match branch {
        Branch::Down => build_damping_stage(theta, system, ancilla),
        Branch::Up => build_pumping_stage(theta, system, ancilla),
    }
}

/// `α` with `cos(α/2) = √p↓`.
pub fn selector_angle(p_down: f64) -> f64 {
    2.0 * p_down.clamp(0.0, 1.0).sqrt().acos()
}

/// Selector in `RX(α)|0⟩`, then damping controlled on selector `|0⟩` and
/// pumping controlled on selector `|1⟩`, sharing one damping ancilla.
pub fn build_fully_quantum_stage(
    step: &StepParams,
    system: WireIndex,
    damp_ancilla: WireIndex,
    selector: WireIndex,
) -> Vec<Gate> {
    let mut stage = vec![Gate::rot_x(selector_angle(step.p_down), selector)];
    stage.extend(
        build_damping_stage(step.theta, system, damp_ancilla).into_iter().map(|g| g.controlled(selector, false)),
    );
    stage.extend(
        build_pumping_stage(step.theta, system, damp_ancilla).into_iter().map(|g| g.controlled(selector, true)),
    );
    stage
}

/// Superoperator on `system` induced by `gates` when every other wire of a
/// `num_wires` register starts in `|g⟩` and is traced out afterwards.
pub fn induced_superoperator(gates: &[Gate], system: WireIndex, num_wires: usize) -> Result<Superoperator> {
    if num_wires > MAX_WIRES {
        return Err(Error::RegisterTooLarge { requested: num_wires, max: MAX_WIRES });
    }
    if system >= num_wires {
        return Err(Error::WireOutOfRange { wire: system, num_wires });
    }
    for g in gates {
        g.validate(num_wires)?;
    }
    let ground = DensityMatrix::ground().into_matrix();
    let others: Vec<WireIndex> = (0..num_wires).filter(|&w| w != system).collect();
    crate::channels::superoperator_of(2, |m| {
        let mut full = ComplexMatrix::from_element(1, 1, real(1.0));
        for w in 0..num_wires {
            full = kron(&full, if w == system { m } else { &ground });
        }
        for g in gates {
            conjugate_in_place(&mut full, &g.kind.matrix(), &[g.target], &g.control_pairs(), num_wires)?;
        }
        partial_trace_matrix(&full, num_wires, &others)
    })
}

/// How the system qubit is put into its initial thermal populations.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Preparation {
    /// The wire starts in the diagonal thermal state.
    #[default]
    Thermal,
    /// The wire starts in `|g⟩` and `RY(2 arccos √p_g)` produces a pure state
    /// with the thermal populations.
    CoherentRotation,
}

fn prepared_register(num_wires: usize, initial_p_e: f64, preparation: Preparation) -> Result<Circuit> {
    let mut circuit = Circuit::new(num_wires, 0)?;
    match preparation {
        Preparation::Thermal => circuit.set_initial_state(0, DensityMatrix::from_populations(initial_p_e)?)?,
        Preparation::CoherentRotation => {
            if !(0.0..=1.0).contains(&initial_p_e) {
                return Err(Error::InvalidParameter(format!("population {initial_p_e} outside [0, 1]")));
            }
            let angle = 2.0 * (1.0 - initial_p_e).sqrt().acos();
            circuit.push(Gate::rot_y(angle, 0))?;
        }
    }
    Ok(circuit)
}

/// Fully quantum circuit for the given steps without ancilla reuse: step `j`
/// (1-based) uses wire `2j − 1` as damping ancilla and `2j` as selector.
/// Each step applies the free evolution on the system, then the selector stage.
pub fn fully_quantum_circuit(steps: &[StepParams], initial_p_e: f64, preparation: Preparation) -> Result<Circuit> {
    let num_wires = 2 * steps.len() + 1;
    if num_wires > MAX_WIRES {
        return Err(Error::RegisterTooLarge { requested: num_wires, max: MAX_WIRES });
    }
    let mut circuit = prepared_register(num_wires, initial_p_e, preparation)?;
    for (i, step) in steps.iter().enumerate() {
        circuit.push(Gate::free_evolution(step.omega, step.delta_tau, 0))?;
        circuit.extend(build_fully_quantum_stage(step, 0, 2 * i + 1, 2 * i + 2))?;
    }
    Ok(circuit)
}

/// Hybrid circuit for one fixed selection of sub-channels: step `j` uses wire `j`.
pub fn hybrid_circuit(
    steps: &[StepParams],
    selection: &[Branch],
    initial_p_e: f64,
    preparation: Preparation,
) -> Result<Circuit> {
    if steps.len() != selection.len() {
        return Err(Error::InvalidParameter(format!(
            "selection has {} entries for {} steps",
            selection.len(),
            steps.len()
        )));
    }
    let num_wires = steps.len() + 1;
    if num_wires > MAX_WIRES {
        return Err(Error::RegisterTooLarge { requested: num_wires, max: MAX_WIRES });
    }
    let mut circuit = prepared_register(num_wires, initial_p_e, preparation)?;
    for (i, (step, &branch)) in steps.iter().zip(selection).enumerate() {
        circuit.push(Gate::free_evolution(step.omega, step.delta_tau, 0))?;
        circuit.extend(build_branch_stage(branch, step.theta, 0, i + 1))?;
    }
    Ok(circuit)
}

/// Runs one stage after another on a small register, resetting the ancillas
/// between stages. Every stage addresses the system as wire 0 and its
/// ancillas as wires `1..=num_ancillas`. Returns the system state after each stage.
pub fn run_stages_with_reset(
    initial_system: &DensityMatrix,
    stages: &[Vec<Gate>],
    num_ancillas: usize,
) -> Result<Vec<DensityMatrix>> {
    if initial_system.num_wires() != 1 {
        return Err(Error::DimensionMismatch { expected: 2, actual: initial_system.dim() });
    }
    let num_wires = num_ancillas + 1;
    let ancillas: Vec<WireIndex> = (1..num_wires).collect();
    let mut system = initial_system.clone();
    let mut history = Vec::with_capacity(stages.len());
    for stage in stages {
        let mut register = system.clone();
        for _ in 0..num_ancillas {
            register = register.tensor(&DensityMatrix::ground())?;
        }
        for gate in stage {
            gate.validate(num_wires)?;
            register = gate.apply(register)?;
        }
        system = register.partial_trace(&ancillas)?;
        history.push(system.clone());
    }
    Ok(history)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ShotResult {
    pub shots: u64,
    pub excited_count: u64,
    pub seed: u64,
}

impl ShotResult {
    pub fn p_e_estimate(&self) -> f64 {
        self.excited_count as f64 / self.shots as f64
    }
}

/// Binomial draw of `shots` measurements with excitation probability `p_e`.
pub fn sample_population(p_e: f64, shots: u64, seed: u64) -> Result<ShotResult> {
    if shots == 0 {
        return Err(Error::InvalidParameter("shots must be at least 1".into()));
    }
    let dist = Binomial::new(shots, p_e.clamp(0.0, 1.0))
        .map_err(|e| Error::InvalidParameter(format!("binomial sampling: {e}")))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok(ShotResult { shots, excited_count: dist.sample(&mut rng), seed })
}

/// Measures the circuit's measure wire `shots` times.
pub fn sample_counts(circuit: &Circuit, shots: u64, seed: u64) -> Result<ShotResult> {
    let p_e = simulate(circuit)?.excited_population(circuit.measure_wire)?;
    sample_population(p_e, shots, seed)
}
