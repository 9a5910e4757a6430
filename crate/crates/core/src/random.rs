//! Seeded random gates and circuits for tests, sampling, and benchmarks.

use rand::Rng;

use crate::circuit::Circuit;
use crate::pauli::{CliffordGate, GateKind};

const ONE_QUBIT_KINDS: [GateKind; 8] = [
    GateKind::H,
    GateKind::S,
    GateKind::SDag,
    GateKind::X,
    GateKind::Y,
    GateKind::Z,
    GateKind::SqrtX,
    GateKind::SqrtXDag,
];

const TWO_QUBIT_KINDS: [GateKind; 3] = [GateKind::Cnot, GateKind::Cz, GateKind::Swap];

/// A uniformly chosen Clifford gate on valid targets.
pub fn random_gate(num_qubits: usize, rng: &mut impl Rng) -> CliffordGate {
    let two = num_qubits > 1 && rng.gen_bool(0.4);
    if two {
        let kind = TWO_QUBIT_KINDS[rng.gen_range(0..TWO_QUBIT_KINDS.len())];
        let a = rng.gen_range(0..num_qubits);
        let mut b = rng.gen_range(0..num_qubits - 1);
        if b >= a {
            b += 1;
        }
        CliffordGate::new(kind, &[a, b]).expect("targets are distinct")
    } else {
        let kind = ONE_QUBIT_KINDS[rng.gen_range(0..ONE_QUBIT_KINDS.len())];
        CliffordGate::new(kind, &[rng.gen_range(0..num_qubits)]).unwrap()
    }
}

/// Random all-Clifford circuit with `depth` gates and measurements
/// interspersed (each measurement writes the next free classical bit).
pub fn random_clifford_circuit(
    num_qubits: usize,
    depth: usize,
    measurements: usize,
    rng: &mut impl Rng,
) -> Circuit {
    let mut c = Circuit::new(num_qubits);
    // Place measurements at random positions in the gate stream, with
    // conditionals allowed afterwards.
    let mut measure_at: Vec<usize> = (0..measurements).map(|_| rng.gen_range(0..=depth)).collect();
    measure_at.sort_unstable();
    let mut next_bit = 0;
    let mut placed = 0;
    for step in 0..=depth {
        while placed < measure_at.len() && measure_at[placed] == step {
            c.push_measure(rng.gen_range(0..num_qubits), next_bit);
            next_bit += 1;
            placed += 1;
            if rng.gen_bool(0.5) {
                let gate = random_gate(num_qubits, rng);
                c.push_conditional(rng.gen_range(0..next_bit), gate);
            }
        }
        if step < depth {
            c.push_gate(random_gate(num_qubits, rng));
        }
    }
    c
}
