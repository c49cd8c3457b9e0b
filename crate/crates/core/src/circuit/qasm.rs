//! OpenQASM 2.0 export.
//!
//! Every gate is lowered to `x`, `rx`, `ry`, `rz` and `cx`. Controlled
//! rotations use the two-CNOT construction, doubly controlled rotations the
//! `V = U^{1/2}` construction, and the Toffoli the usual seven-T network with
//! `h`/`t` written as `rz`/`ry` up to global phase. Free evolution becomes
//! `rz(−ω·δτ)`, equal to `diag(1, e^{−iωδτ})` up to global phase.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};
use std::fmt::Write;

use super::{Circuit, Gate, GateKind};
use crate::error::{Error, Result};
use crate::qstate::{max_abs_diff, DensityMatrix, WireIndex};

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Primitive {
    X(WireIndex),
    Rx(WireIndex, f64),
    Ry(WireIndex, f64),
    Rz(WireIndex, f64),
    Cx(WireIndex, WireIndex),
}

impl Primitive {
    pub fn to_gate(self) -> Gate {
        match self {
            Primitive::X(q) => Gate::not(q),
            Primitive::Rx(q, a) => Gate::rot_x(a, q),
            Primitive::Ry(q, a) => Gate::rot_y(a, q),
            // RZ(φ) = e^{−iφ/2}·diag(1, e^{iφ}); free evolution with ω·δτ = −φ
            Primitive::Rz(q, a) => Gate::free_evolution(-a, 1.0, q),
            Primitive::Cx(c, t) => Gate::cnot(c, t),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Primitive::X(_) => "x",
            Primitive::Rx(..) => "rx",
            Primitive::Ry(..) => "ry",
            Primitive::Rz(..) => "rz",
            Primitive::Cx(..) => "cx",
        }
    }
}

/// Controlled `RY(θ)`.
fn cry(theta: f64, c: WireIndex, t: WireIndex) -> Vec<Primitive> {
    vec![Primitive::Ry(t, theta / 2.0), Primitive::Cx(c, t), Primitive::Ry(t, -theta / 2.0), Primitive::Cx(c, t)]
}

/// Controlled `RX(θ)`, as a controlled `RY(θ)` in a basis rotated about z.
fn crx(theta: f64, c: WireIndex, t: WireIndex) -> Vec<Primitive> {
    let mut out = vec![Primitive::Rz(t, FRAC_PI_2)];
    out.extend(cry(theta, c, t));
    out.push(Primitive::Rz(t, -FRAC_PI_2));
    out
}

/// Controlled `diag(1, e^{iλ})`.
fn cphase(lambda: f64, c: WireIndex, t: WireIndex) -> Vec<Primitive> {
    vec![
        Primitive::Rz(c, lambda / 2.0),
        Primitive::Cx(c, t),
        Primitive::Rz(t, -lambda / 2.0),
        Primitive::Cx(c, t),
        Primitive::Rz(t, lambda / 2.0),
    ]
}

/// Hadamard up to global phase: `Z` then `RY(π/2)`.
fn hadamard(q: WireIndex) -> [Primitive; 2] {
    [Primitive::Rz(q, PI), Primitive::Ry(q, FRAC_PI_2)]
}

fn toffoli(a: WireIndex, b: WireIndex, t: WireIndex) -> Vec<Primitive> {
    let tg = |q| Primitive::Rz(q, FRAC_PI_4);
    let tdg = |q| Primitive::Rz(q, -FRAC_PI_4);
    let mut out = Vec::with_capacity(20);
    out.extend(hadamard(t));
    out.extend([
        Primitive::Cx(b, t),
        tdg(t),
        Primitive::Cx(a, t),
        tg(t),
        Primitive::Cx(b, t),
        tdg(t),
        Primitive::Cx(a, t),
        tg(b),
        tg(t),
    ]);
    out.extend(hadamard(t));
    out.extend([Primitive::Cx(a, b), tg(a), tdg(b), Primitive::Cx(a, b)]);
    out
}

/// `C²-U` from a controlled square root `V` (`V² = U`, `V` a rotation so `V† = V(−θ)`).
fn doubly_controlled<F>(controlled_root: F, a: WireIndex, b: WireIndex) -> Vec<Primitive>
where
    F: Fn(f64, WireIndex) -> Vec<Primitive>,
{
    let mut out = controlled_root(1.0, b);
    out.push(Primitive::Cx(a, b));
    out.extend(controlled_root(-1.0, b));
    out.push(Primitive::Cx(a, b));
    out.extend(controlled_root(1.0, a));
    out
}

/// Lowers one gate to primitives, exactly up to global phase.
pub fn decompose(gate: &Gate) -> Result<Vec<Primitive>> {
    let all = gate.wires();
    gate.validate(all.iter().max().map_or(1, |w| w + 1))?;
    let t = gate.target;
    let flips: Vec<Primitive> = gate.controls.iter().filter(|c| !c.state).map(|c| Primitive::X(c.wire)).collect();
    let wires: Vec<WireIndex> = gate.controls.iter().map(|c| c.wire).collect();
    let core = match (gate.kind, wires.as_slice()) {
        (GateKind::Not, []) => vec![Primitive::X(t)],
        (GateKind::RotX(a), []) => vec![Primitive::Rx(t, a)],
        (GateKind::RotY(a), []) => vec![Primitive::Ry(t, a)],
        (GateKind::FreeEvolution { omega, delta_tau }, []) => vec![Primitive::Rz(t, -omega * delta_tau)],
        (GateKind::Not, &[c]) => vec![Primitive::Cx(c, t)],
        (GateKind::RotY(a), &[c]) => cry(a, c, t),
        (GateKind::RotX(a), &[c]) => crx(a, c, t),
        (GateKind::FreeEvolution { omega, delta_tau }, &[c]) => cphase(-omega * delta_tau, c, t),
        (GateKind::Not, &[a, b]) => toffoli(a, b, t),
        (GateKind::RotY(theta), &[a, b]) => doubly_controlled(|s, c| cry(s * theta / 2.0, c, t), a, b),
        (GateKind::RotX(theta), &[a, b]) => doubly_controlled(|s, c| crx(s * theta / 2.0, c, t), a, b),
        (kind, controls) => {
            return Err(Error::Export(format!("no decomposition for {kind:?} with {} controls", controls.len())))
        }
    };
    let mut out = flips.clone();
    out.extend(core);
    out.extend(flips);
    Ok(out)
}

pub fn decompose_circuit(circuit: &Circuit) -> Result<Vec<Primitive>> {
    let mut out = Vec::new();
    for gate in circuit.gates() {
        out.extend(decompose(gate)?);
    }
    Ok(out)
}

const GROUND_TOL: f64 = 1e-12;

/// OpenQASM 2.0 program for a circuit whose wires all start in `|g⟩`,
/// measuring the circuit's measure wire into a single classical bit.
pub fn export_qasm(circuit: &Circuit) -> Result<String> {
    let ground = DensityMatrix::ground();
    for (w, state) in circuit.initial_states().iter().enumerate() {
        if max_abs_diff(state.matrix(), ground.matrix()) > GROUND_TOL {
            return Err(Error::Export(format!(
                "wire {w} does not start in the ground state; express its preparation as gates"
            )));
        }
    }
    let primitives = decompose_circuit(circuit)?;
    let mut out = String::new();
    let _ = writeln!(out, "OPENQASM 2.0;");
    let _ = writeln!(out, "include \"qelib1.inc\";");
    let _ = writeln!(out, "qreg q[{}];", circuit.num_wires());
    let _ = writeln!(out, "creg c[1];");
    for p in &primitives {
        let _ = match *p {
            Primitive::X(q) => writeln!(out, "x q[{q}];"),
            Primitive::Rx(q, a) | Primitive::Ry(q, a) | Primitive::Rz(q, a) => {
                writeln!(out, "{}({}) q[{q}];", p.name(), a)
            }
            Primitive::Cx(c, t) => writeln!(out, "cx q[{c}],q[{t}];"),
        };
    }
    let _ = writeln!(out, "measure q[{}] -> c[0];", circuit.measure_wire());
    Ok(out)
}

/// A program in the subset of OpenQASM 2.0 written by [`export_qasm`].
#[derive(Clone, Debug, PartialEq)]
pub struct QasmProgram {
    pub num_wires: usize,
    pub primitives: Vec<Primitive>,
    pub measured: Option<WireIndex>,
}

impl QasmProgram {
    /// Circuit on a ground-state register executing the parsed primitives.
    pub fn to_circuit(&self) -> Result<Circuit> {
        let mut circuit = Circuit::new(self.num_wires, self.measured.unwrap_or(0))?;
        circuit.extend(self.primitives.iter().map(|p| p.to_gate()))?;
        Ok(circuit)
    }
}

fn parse_qubit(arg: &str, line: usize) -> Result<WireIndex> {
    let err = || Error::QasmParse { line, message: format!("expected q[<index>], got {arg:?}") };
    let inner = arg.trim().strip_prefix("q[").and_then(|s| s.strip_suffix(']')).ok_or_else(err)?;
    inner.trim().parse().map_err(|_| err())
}

pub fn parse_qasm(text: &str) -> Result<QasmProgram> {
    let mut num_wires = None;
    let mut primitives = Vec::new();
    let mut measured = None;
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let stmt = raw.split("//").next().unwrap_or("").trim();
        if stmt.is_empty() {
            continue;
        }
        let stmt = stmt.strip_suffix(';').ok_or_else(|| Error::QasmParse { line, message: "missing ';'".into() })?;
        if stmt.starts_with("OPENQASM") || stmt.starts_with("include") || stmt.starts_with("creg") {
            continue;
        }
        if let Some(rest) = stmt.strip_prefix("qreg") {
            let n = parse_qubit(rest, line)?;
            num_wires = Some(n);
            continue;
        }
        if let Some(rest) = stmt.strip_prefix("measure") {
            let qubit = rest.split("->").next().unwrap_or("");
            measured = Some(parse_qubit(qubit, line)?);
            continue;
        }
        let (head, args) = stmt
            .split_once(' ')
            .ok_or_else(|| Error::QasmParse { line, message: format!("cannot parse statement {stmt:?}") })?;
        let (name, param) = match head.split_once('(') {
            Some((name, p)) => {
                let p = p
                    .strip_suffix(')')
                    .ok_or_else(|| Error::QasmParse { line, message: "unbalanced parenthesis".into() })?;
                let value: f64 =
                    p.trim().parse().map_err(|_| Error::QasmParse { line, message: format!("bad angle {p:?}") })?;
                (name, Some(value))
            }
            None => (head, None),
        };
        let qubits = args.split(',').map(|a| parse_qubit(a, line)).collect::<Result<Vec<_>>>()?;
        let primitive = match (name, param, qubits.as_slice()) {
            ("x", None, &[q]) => Primitive::X(q),
            ("rx", Some(a), &[q]) => Primitive::Rx(q, a),
            ("ry", Some(a), &[q]) => Primitive::Ry(q, a),
            ("rz", Some(a), &[q]) => Primitive::Rz(q, a),
            ("cx", None, &[c, t]) => Primitive::Cx(c, t),
            _ => {
                return Err(Error::QasmParse { line, message: format!("unsupported statement {stmt:?}") });
            }
        };
        primitives.push(primitive);
    }
    let num_wires = num_wires.ok_or(Error::QasmParse { line: 0, message: "no qreg declaration".into() })?;
    Ok(QasmProgram { num_wires, primitives, measured })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::simulate;
    use crate::qstate::{real, ComplexMatrix, C64};

    /// Product of primitive matrices on `n` wires (first primitive applied first).
    fn unitary_of(primitives: &[Primitive], n: usize) -> ComplexMatrix {
        let dim = 1 << n;
        primitives.iter().fold(ComplexMatrix::identity(dim, dim), |u, p| embed(&p.to_gate(), n) * u)
    }

    /// Full-register matrix of a gate, built column by column.
    fn embed(g: &Gate, n: usize) -> ComplexMatrix {
        let dim = 1 << n;
        let wires = g.wires();
        let m = g.matrix();
        let k = wires.len();
        let mut out = ComplexMatrix::zeros(dim, dim);
        for col in 0..dim {
            let sub =
                wires.iter().enumerate().fold(0, |acc, (i, &w)| acc | (((col >> (n - 1 - w)) & 1) << (k - 1 - i)));
            for s in 0..(1 << k) {
                let row = wires.iter().enumerate().fold(col, |row, (i, &w)| {
                    let bit = (s >> (k - 1 - i)) & 1;
                    (row & !(1 << (n - 1 - w))) | (bit << (n - 1 - w))
                });
                out[(row, col)] += m[(s, sub)];
            }
        }
        out
    }

    /// `‖a − e^{iφ} b‖` minimised over the global phase.
    fn phase_distance(a: &ComplexMatrix, b: &ComplexMatrix) -> f64 {
        let overlap: C64 = a.iter().zip(b.iter()).map(|(x, y)| y.conj() * x).sum();
        let phase = if overlap.norm() > 0.0 { overlap / overlap.norm() } else { real(1.0) };
        max_abs_diff(a, &(b * phase))
    }

    fn check(gate: Gate, n: usize) {
        let direct = embed(&gate, n);
        let lowered = unitary_of(&decompose(&gate).unwrap(), n);
        assert!(phase_distance(&lowered, &direct) < 1e-12, "{gate:?}");
    }

    #[test]
    fn single_controlled_decompositions() {
        check(Gate::cnot(0, 1), 2);
        check(Gate::not(0).controlled(1, false), 2);
        check(Gate::controlled_rot_y(1.7, 0, 1), 2);
        check(Gate::controlled_rot_y(-0.4, 1, 0), 2);
        check(Gate::rot_x(0.9, 1).controlled(0, true), 2);
        check(Gate::free_evolution(1.5, 0.5, 1).controlled(0, true), 2);
        check(Gate::rot_y(0.3, 0).controlled(1, false), 2);
    }

    #[test]
    fn doubly_controlled_decompositions() {
        check(Gate::not(2).controlled(0, true).controlled(1, true), 3);
        check(Gate::not(0).controlled(2, true).controlled(1, false), 3);
        check(Gate::controlled_rot_y(1.1, 0, 1).controlled(2, false), 3);
        check(Gate::controlled_rot_y(2.3, 2, 0).controlled(1, true), 3);
        check(Gate::rot_x(0.7, 0).controlled(1, true).controlled(2, true), 3);
    }

    #[test]
    fn rz_primitive_matches_free_evolution_up_to_phase() {
        let g = Gate::free_evolution(1.3, 0.7, 0);
        let lowered = unitary_of(&decompose(&g).unwrap(), 1);
        assert!(phase_distance(&lowered, &g.matrix()) < 1e-15);
        let rz = crate::qstate::gates::rot_z(-1.3 * 0.7);
        assert!(phase_distance(&rz, &g.matrix()) < 1e-15);
    }

    #[test]
    fn unsupported_gates_rejected() {
        let g = Gate::not(3).controlled(0, true).controlled(1, true).controlled(2, true);
        assert!(matches!(decompose(&g), Err(Error::Export(_))));
        let g = Gate::free_evolution(1.0, 1.0, 2).controlled(0, true).controlled(1, true);
        assert!(decompose(&g).is_err());
    }

    #[test]
    fn empty_single_wire_program() {
        let text = export_qasm(&Circuit::new(1, 0).unwrap()).unwrap();
        assert_eq!(text, "OPENQASM 2.0;\ninclude \"qelib1.inc\";\nqreg q[1];\ncreg c[1];\nmeasure q[0] -> c[0];\n");
    }

    #[test]
    fn single_not_program() {
        let mut circuit = Circuit::new(1, 0).unwrap();
        circuit.push(Gate::not(0)).unwrap();
        let text = export_qasm(&circuit).unwrap();
        assert_eq!(text.matches("x q[0];").count(), 1);
        assert_eq!(text.lines().filter(|l| l.starts_with("x ")).count(), 1);
    }

    #[test]
    fn rejects_mixed_initial_state() {
        let mut circuit = Circuit::new(1, 0).unwrap();
        circuit.set_initial_state(0, DensityMatrix::from_populations(0.2).unwrap()).unwrap();
        assert!(matches!(export_qasm(&circuit), Err(Error::Export(_))));
    }

    #[test]
    fn parse_round_trip() {
        let mut circuit = Circuit::new(3, 0).unwrap();
        circuit.push(Gate::rot_y(0.123456789, 0)).unwrap();
        circuit.push(Gate::controlled_rot_y(1.0, 0, 1).controlled(2, false)).unwrap();
        circuit.push(Gate::rot_x(-2.5, 2)).unwrap();
        circuit.push(Gate::free_evolution(1.5, 0.5, 0)).unwrap();
        let text = export_qasm(&circuit).unwrap();
        let program = parse_qasm(&text).unwrap();
        assert_eq!(program.num_wires, 3);
        assert_eq!(program.measured, Some(0));
        assert_eq!(program.primitives, decompose_circuit(&circuit).unwrap());
        let direct = simulate(&circuit).unwrap();
        let resim = simulate(&program.to_circuit().unwrap()).unwrap();
        assert!(direct.trace_distance(&resim).unwrap() < 1e-12);
    }

    #[test]
    fn parse_errors() {
        assert!(parse_qasm("qreg q[1];\nh q[0];\n").is_err());
        assert!(parse_qasm("x q[0];\n").is_err());
        assert!(parse_qasm("qreg q[1];\nrx(abc) q[0];\n").is_err());
        assert!(parse_qasm("qreg q[1];\nx q[0]\n").is_err());
    }
}
