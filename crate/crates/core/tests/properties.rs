use std::f64::consts::PI;

use isotherm_core::channels::{apply_gadc, make_step_params, BathParams};
use isotherm_core::circuit::qasm::{export_qasm, parse_qasm};
use isotherm_core::circuit::simulate;
use isotherm_core::protocol::{run_exact, run_fully_quantum, run_hybrid_enumerate, AncillaMode, Readout, Schedule};
use isotherm_core::qstate::{gates, hermitian_eigenvalues, max_abs_diff};
use isotherm_core::{Circuit, ComplexMatrix, DensityMatrix, Gate, C64};
use proptest::prelude::*;

fn qubit() -> impl Strategy<Value = DensityMatrix> {
    (0.0..=1.0f64, 0.0..=1.0f64, 0.0..2.0 * PI).prop_map(|(p, r, phi)| {
        let c = C64::from_polar(r * (p * (1.0 - p)).sqrt(), phi);
        let m = ComplexMatrix::from_row_slice(2, 2, &[C64::new(1.0 - p, 0.0), c, c.conj(), C64::new(p, 0.0)]);
        DensityMatrix::new(m).unwrap()
    })
}

fn bath() -> impl Strategy<Value = BathParams> {
    (0.1..5.0f64, 0.05..3.0f64).prop_map(|(b, g)| BathParams::new(b, g).unwrap())
}

fn gate(num_wires: usize) -> impl Strategy<Value = Gate> {
    (0..5usize, 0..num_wires, 1..num_wires, -PI..PI, any::<bool>()).prop_map(move |(kind, t, shift, angle, state)| {
        let c = (t + shift) % num_wires;
        match kind {
            0 => Gate::not(t),
            1 => Gate::rot_x(angle, t),
            2 => Gate::rot_y(angle, t).controlled(c, state),
            3 => Gate::free_evolution(angle, 0.7, t),
            _ => Gate::cnot(c, t),
        }
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn gadc_output_is_a_state(rho in qubit(), bath in bath(), omega in 0.1..5.0f64, dt in 0.0..10.0f64) {
        let step = make_step_params(bath, omega, dt).unwrap();
        let out = apply_gadc(&rho, &step).unwrap();
        prop_assert!(out.validate().is_ok());
        prop_assert!((out.trace().re - 1.0).abs() < 1e-12);
    }

    #[test]
    fn unitaries_preserve_spectrum(a in qubit(), b in qubit(), x in -PI..PI, y in -PI..PI) {
        let ab = a.tensor(&b).unwrap();
        let u = isotherm_core::qstate::kron(&gates::rot_x(x), &gates::rot_y(y));
        let out = ab.apply_unitary(&u, &[1, 0]).unwrap();
        for (p, q) in hermitian_eigenvalues(ab.matrix()).iter().zip(hermitian_eigenvalues(out.matrix())) {
            prop_assert!((p - q).abs() < 1e-10);
        }
    }

    #[test]
    fn partial_trace_inverts_tensor(a in qubit(), b in qubit(), c in qubit()) {
        let abc = a.tensor(&b).unwrap().tensor(&c).unwrap();
        prop_assert!(max_abs_diff(abc.partial_trace(&[1, 2]).unwrap().matrix(), a.matrix()) < 1e-12);
        prop_assert!(max_abs_diff(abc.partial_trace(&[0, 2]).unwrap().matrix(), b.matrix()) < 1e-12);
    }

    #[test]
    fn modes_agree(bath in bath(), n in 1..=3usize, dt in 0.0..5.0f64, w0 in 0.2..3.0f64, wn in 0.2..3.0f64) {
        let schedule = Schedule::linear(bath, w0, wn, n, dt).unwrap();
        let exact = run_exact(&schedule).unwrap().mean_work;
        let hybrid = run_hybrid_enumerate(&schedule).unwrap().summary.mean_work;
        let fq = run_fully_quantum(&schedule, Readout::Exact, AncillaMode::Reset).unwrap().mean_work;
        prop_assert!((exact - hybrid).abs() < 1e-12);
        prop_assert!((exact - fq).abs() < 1e-12);
    }

    #[test]
    fn extra_work_is_non_negative(bath in bath(), n in 1..=12usize, dt in 0.0..5.0f64, w0 in 0.1..4.0f64, wn in 0.1..4.0f64) {
        let schedule = Schedule::geometric(bath, w0, wn, n, dt).unwrap();
        prop_assert!(run_exact(&schedule).unwrap().extra_work >= -1e-12);
    }

    #[test]
    fn qasm_round_trip(gates in prop::collection::vec(gate(3), 0..12)) {
        let mut circuit = Circuit::new(3, 0).unwrap();
        circuit.extend(gates).unwrap();
        let text = export_qasm(&circuit).unwrap();
        let back = parse_qasm(&text).unwrap().to_circuit().unwrap();
        let d = max_abs_diff(simulate(&back).unwrap().matrix(), simulate(&circuit).unwrap().matrix());
        prop_assert!(d < 1e-12, "deviation {d}\n{text}");
    }
}
