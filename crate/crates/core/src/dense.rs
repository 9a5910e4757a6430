//! Brute-force statevector and density-matrix simulator for small systems;
//! the ground-truth oracle behind every equivalence test in the crate.
//!
//! Basis convention: qubit `j` is bit `j` of the amplitude index, so
//! `|q1 q0⟩ = |q1⟩⊗|q0⟩` has index `q0 + 2·q1`.

use std::collections::BTreeMap;

use ndarray::Array2;
use num_complex::Complex64;
use rand::Rng;

use crate::circuit::{Circuit, Instruction};
use crate::error::{Error, Result};
use crate::pauli::{CliffordGate, Pauli, PauliString};
use crate::tableau::FrameLabel;

pub const MAX_PURE_QUBITS: usize = 12;
pub const MAX_DENSITY_QUBITS: usize = 6;
pub const MAX_BRANCH_MEASUREMENTS: usize = 20;

pub type UnitaryTable = BTreeMap<String, Array2<Complex64>>;

const C0: Complex64 = Complex64::new(0.0, 0.0);
const C1: Complex64 = Complex64::new(1.0, 0.0);

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// 2×2 or 4×4 matrix of a Clifford gate (targets ignored).
pub fn gate_matrix(gate: &CliffordGate) -> Array2<Complex64> {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    match gate.kind() {
        crate::pauli::GateKind::H => ndarray::array![[c(h, 0.), c(h, 0.)], [c(h, 0.), c(-h, 0.)]],
        crate::pauli::GateKind::S => ndarray::array![[C1, C0], [C0, c(0., 1.)]],
        crate::pauli::GateKind::SDag => ndarray::array![[C1, C0], [C0, c(0., -1.)]],
        crate::pauli::GateKind::X => ndarray::array![[C0, C1], [C1, C0]],
        crate::pauli::GateKind::Y => ndarray::array![[C0, c(0., -1.)], [c(0., 1.), C0]],
        crate::pauli::GateKind::Z => ndarray::array![[C1, C0], [C0, c(-1., 0.)]],
        crate::pauli::GateKind::SqrtX => ndarray::array![
            [c(0.5, 0.5), c(0.5, -0.5)],
            [c(0.5, -0.5), c(0.5, 0.5)]
        ],
        crate::pauli::GateKind::SqrtXDag => ndarray::array![
            [c(0.5, -0.5), c(0.5, 0.5)],
            [c(0.5, 0.5), c(0.5, -0.5)]
        ],
        // Local index = control + 2·target (targets[0] is the low bit).
        crate::pauli::GateKind::Cnot => ndarray::array![
            [C1, C0, C0, C0],
            [C0, C0, C0, C1],
            [C0, C0, C1, C0],
            [C0, C1, C0, C0]
        ],
        crate::pauli::GateKind::Cz => ndarray::array![
            [C1, C0, C0, C0],
            [C0, C1, C0, C0],
            [C0, C0, C1, C0],
            [C0, C0, C0, c(-1., 0.)]
        ],
        crate::pauli::GateKind::Swap => ndarray::array![
            [C1, C0, C0, C0],
            [C0, C0, C1, C0],
            [C0, C1, C0, C0],
            [C0, C0, C0, C1]
        ],
    }
}

/// Dense matrix of a Hermitian Pauli string (including its i^k prefix).
pub fn pauli_matrix(p: &PauliString) -> Array2<Complex64> {
    let n = p.num_qubits();
    let dim = 1usize << n;
    let mut m = Array2::zeros((dim, dim));
    let phase = match p.phase_exponent() {
        0 => C1,
        1 => c(0., 1.),
        2 => c(-1., 0.),
        _ => c(0., -1.),
    };
    for row in 0..dim {
        let mut col = row;
        let mut val = phase;
        for q in 0..n {
            let bit = row >> q & 1;
            match p.pauli_at(q) {
                Pauli::I => {}
                Pauli::X => col ^= 1 << q,
                Pauli::Z => {
                    if bit == 1 {
                        val = -val;
                    }
                }
                Pauli::Y => {
                    col ^= 1 << q;
                    // Y[0,1] = −i, Y[1,0] = +i; `bit` is the row bit.
                    val *= if bit == 0 { c(0., -1.) } else { c(0., 1.) };
                }
            }
        }
        m[(row, col)] = val;
    }
    m
}

/// Kronecker product `a ⊗ b` (b varies fastest, matching the qubit-0 =
/// low-bit convention when `a` sits on higher qubits).
pub fn kron(a: &Array2<Complex64>, b: &Array2<Complex64>) -> Array2<Complex64> {
    let (ar, ac) = a.dim();
    let (br, bc) = b.dim();
    let mut out = Array2::zeros((ar * br, ac * bc));
    for i in 0..ar {
        for j in 0..ac {
            for k in 0..br {
                for l in 0..bc {
                    out[(i * br + k, j * bc + l)] = a[(i, j)] * b[(k, l)];
                }
            }
        }
    }
    out
}

/// Pure state on `n ≤ 12` qubits.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    num_qubits: usize,
    amplitudes: Vec<Complex64>,
}

impl StateVector {
    pub fn new(num_qubits: usize, amplitudes: Vec<Complex64>) -> Result<Self> {
        if num_qubits > MAX_PURE_QUBITS {
            return Err(Error::TooLarge(format!("{num_qubits} qubits exceeds pure-state cap {MAX_PURE_QUBITS}")));
        }
        if amplitudes.len() != 1 << num_qubits {
            return Err(Error::InvalidState(format!(
                "expected {} amplitudes, got {}",
                1 << num_qubits,
                amplitudes.len()
            )));
        }
        let norm: f64 = amplitudes.iter().map(|a| a.norm_sqr()).sum();
        if (norm - 1.0).abs() > 1e-10 {
            return Err(Error::InvalidState(format!("norm² = {norm}, expected 1")));
        }
        Ok(StateVector { num_qubits, amplitudes })
    }

    pub fn zero_state(num_qubits: usize) -> Self {
        let mut amplitudes = vec![C0; 1 << num_qubits];
        amplitudes[0] = C1;
        StateVector { num_qubits, amplitudes }
    }

    /// Single-qubit state α|0⟩ + β|1⟩ (normalized by the caller).
    pub fn qubit(alpha: Complex64, beta: Complex64) -> Result<Self> {
        StateVector::new(1, vec![alpha, beta])
    }

    pub fn frame_state(label: FrameLabel) -> Self {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let (a, b) = match label {
            FrameLabel::ZPlus => (C1, C0),
            FrameLabel::ZMinus => (C0, C1),
            FrameLabel::XPlus => (c(h, 0.), c(h, 0.)),
            FrameLabel::XMinus => (c(h, 0.), c(-h, 0.)),
            FrameLabel::YPlus => (c(h, 0.), c(0., h)),
            FrameLabel::YMinus => (c(h, 0.), c(0., -h)),
        };
        StateVector { num_qubits: 1, amplitudes: vec![a, b] }
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Joint state with `self` on the low qubits and `other` above.
    pub fn tensor(&self, other: &StateVector) -> Result<StateVector> {
        let n = self.num_qubits + other.num_qubits;
        if n > MAX_PURE_QUBITS {
            return Err(Error::TooLarge(format!("{n} qubits exceeds pure-state cap")));
        }
        let mut amps = vec![C0; 1 << n];
        for (j, &b) in other.amplitudes.iter().enumerate() {
            for (i, &a) in self.amplitudes.iter().enumerate() {
                amps[(j << self.num_qubits) | i] = a * b;
            }
        }
        Ok(StateVector { num_qubits: n, amplitudes: amps })
    }

    /// |⟨self|other⟩| — global-phase-insensitive overlap.
    pub fn overlap(&self, other: &StateVector) -> f64 {
        self.amplitudes
            .iter()
            .zip(&other.amplitudes)
            .map(|(a, b)| a.conj() * b)
            .sum::<Complex64>()
            .norm()
    }

    pub fn density(&self) -> DensityMatrix {
        let dim = self.amplitudes.len();
        let mut m = Array2::zeros((dim, dim));
        for i in 0..dim {
            for j in 0..dim {
                m[(i, j)] = self.amplitudes[i] * self.amplitudes[j].conj();
            }
        }
        DensityMatrix { num_qubits: self.num_qubits, entries: m }
    }

    fn apply_matrix(&mut self, m: &Array2<Complex64>, targets: &[usize]) {
        apply_matrix_vec(&mut self.amplitudes, m, targets);
    }

    pub fn apply_gate(&mut self, gate: &CliffordGate) -> Result<()> {
        for &t in gate.targets().iter() {
            if t >= self.num_qubits {
                return Err(Error::QubitOutOfRange { index: t, num_qubits: self.num_qubits });
            }
        }
        self.apply_matrix(&gate_matrix(gate), &gate.targets());
        Ok(())
    }

    /// Probability of measuring 1 on `qubit`.
    pub fn prob_one(&self, qubit: usize) -> f64 {
        self.amplitudes
            .iter()
            .enumerate()
            .filter(|(i, _)| i >> qubit & 1 == 1)
            .map(|(_, a)| a.norm_sqr())
            .sum()
    }

    /// Project onto `qubit = outcome` without renormalizing; returns the
    /// squared norm of the projected state (the branch probability).
    fn project(&mut self, qubit: usize, outcome: bool) -> f64 {
        let mut kept = 0.0;
        for (i, a) in self.amplitudes.iter_mut().enumerate() {
            if (i >> qubit & 1 == 1) != outcome {
                *a = C0;
            } else {
                kept += a.norm_sqr();
            }
        }
        kept
    }

    fn renormalize(&mut self) {
        let n = self.norm();
        if n > 0.0 {
            for a in &mut self.amplitudes {
                *a /= n;
            }
        }
    }
}

/// Apply a 2^k × 2^k matrix to `targets` of a dense amplitude vector.
/// `targets[0]` is the low bit of the local index.
fn apply_matrix_vec(amps: &mut [Complex64], m: &Array2<Complex64>, targets: &[usize]) {
    let k = targets.len();
    let sub = 1usize << k;
    debug_assert_eq!(m.dim(), (sub, sub));
    let dim = amps.len();
    let mask: usize = targets.iter().map(|&t| 1usize << t).sum();
    let mut local = vec![C0; sub];
    for base in 0..dim {
        if base & mask != 0 {
            continue;
        }
        for (li, slot) in local.iter_mut().enumerate() {
            let mut idx = base;
            for (b, &t) in targets.iter().enumerate() {
                if li >> b & 1 == 1 {
                    idx |= 1 << t;
                }
            }
            *slot = amps[idx];
        }
        for row in 0..sub {
            let mut acc = C0;
            for (col, &amp) in local.iter().enumerate() {
                acc += m[(row, col)] * amp;
            }
            let mut idx = base;
            for (b, &t) in targets.iter().enumerate() {
                if row >> b & 1 == 1 {
                    idx |= 1 << t;
                }
            }
            amps[idx] = acc;
        }
    }
}

/// Density matrix on `q ≤ 6` qubits.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    num_qubits: usize,
    entries: Array2<Complex64>,
}

impl DensityMatrix {
    /// Validates Hermiticity, unit trace, and positivity (within 1e−10).
    pub fn new(num_qubits: usize, entries: Array2<Complex64>) -> Result<Self> {
        if num_qubits > MAX_DENSITY_QUBITS {
            return Err(Error::TooLarge(format!(
                "{num_qubits} qubits exceeds density-matrix cap {MAX_DENSITY_QUBITS}"
            )));
        }
        let dim = 1usize << num_qubits;
        if entries.dim() != (dim, dim) {
            return Err(Error::InvalidDensity(format!("expected {dim}×{dim} matrix, got {:?}", entries.dim())));
        }
        for i in 0..dim {
            for j in 0..dim {
                if (entries[(i, j)] - entries[(j, i)].conj()).norm() > 1e-10 {
                    return Err(Error::InvalidDensity("matrix is not Hermitian".into()));
                }
            }
        }
        let trace: Complex64 = (0..dim).map(|i| entries[(i, i)]).sum();
        if (trace - C1).norm() > 1e-10 {
            return Err(Error::InvalidDensity(format!("trace = {trace}, expected 1")));
        }
        let rho = DensityMatrix { num_qubits, entries };
        let eigs = hermitian_eigenvalues(&rho.entries);
        if eigs.iter().any(|&e| e < -1e-10) {
            return Err(Error::InvalidDensity(format!(
                "negative eigenvalue {:e}",
                eigs.iter().cloned().fold(f64::INFINITY, f64::min)
            )));
        }
        Ok(rho)
    }

    /// Build without validation (internal evolution keeps physicality).
    pub(crate) fn from_parts(num_qubits: usize, entries: Array2<Complex64>) -> Self {
        DensityMatrix { num_qubits, entries }
    }

    pub fn pure(state: &StateVector) -> Self {
        state.density()
    }

    pub fn maximally_mixed(num_qubits: usize) -> Self {
        let dim = 1usize << num_qubits;
        let mut m = Array2::zeros((dim, dim));
        for i in 0..dim {
            m[(i, i)] = c(1.0 / dim as f64, 0.0);
        }
        DensityMatrix { num_qubits, entries: m }
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn entries(&self) -> &Array2<Complex64> {
        &self.entries
    }

    pub fn dim(&self) -> usize {
        1 << self.num_qubits
    }

    pub fn trace(&self) -> Complex64 {
        (0..self.dim()).map(|i| self.entries[(i, i)]).sum()
    }

    pub fn tensor(&self, other: &DensityMatrix) -> Result<DensityMatrix> {
        let n = self.num_qubits + other.num_qubits;
        if n > MAX_DENSITY_QUBITS {
            return Err(Error::TooLarge(format!("{n} qubits exceeds density-matrix cap")));
        }
        // self occupies the low bits, matching StateVector::tensor.
        Ok(DensityMatrix { num_qubits: n, entries: kron(&other.entries, &self.entries) })
    }

    /// ⟨ψ|ρ|ψ⟩ — fidelity against a pure state.
    pub fn fidelity_pure(&self, psi: &StateVector) -> f64 {
        let dim = self.dim();
        let mut acc = C0;
        for i in 0..dim {
            for j in 0..dim {
                acc += psi.amplitudes[i].conj() * self.entries[(i, j)] * psi.amplitudes[j];
            }
        }
        acc.re
    }

    /// Largest eigenvalue; 1 − this is the gadget-leakage measure for a
    /// reduced single-subsystem state of a pure joint state.
    pub fn largest_eigenvalue(&self) -> f64 {
        hermitian_eigenvalues(&self.entries).into_iter().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Spectral decomposition into (weight, pure state) pairs, dropping
    /// weights below 1e−12. Tiny negative weights from rounding are
    /// clamped away.
    pub fn spectral_decomposition(&self) -> Vec<(f64, StateVector)> {
        let (eigs, vecs) = hermitian_eigen(&self.entries);
        let mut out = Vec::new();
        for (k, &lambda) in eigs.iter().enumerate() {
            if lambda > 1e-12 {
                let amps: Vec<Complex64> = (0..self.dim()).map(|i| vecs[(i, k)]).collect();
                out.push((lambda, StateVector { num_qubits: self.num_qubits, amplitudes: amps }));
            }
        }
        out
    }

    pub fn partial_trace(&self, keep: &[usize]) -> DensityMatrix {
        partial_trace(&self.entries, self.num_qubits, keep)
    }
}

/// Trace out every qubit not in `keep`; `keep[i]` becomes bit `i` of the
/// reduced index.
pub fn partial_trace(entries: &Array2<Complex64>, num_qubits: usize, keep: &[usize]) -> DensityMatrix {
    let traced: Vec<usize> = (0..num_qubits).filter(|q| !keep.contains(q)).collect();
    let kd = 1usize << keep.len();
    let td = 1usize << traced.len();
    let mut out = Array2::zeros((kd, kd));
    let build = |kept: usize, tr: usize| -> usize {
        let mut idx = 0;
        for (b, &q) in keep.iter().enumerate() {
            idx |= (kept >> b & 1) << q;
        }
        for (b, &q) in traced.iter().enumerate() {
            idx |= (tr >> b & 1) << q;
        }
        idx
    };
    for i in 0..kd {
        for j in 0..kd {
            let mut acc = C0;
            for t in 0..td {
                acc += entries[(build(i, t), build(j, t))];
            }
            out[(i, j)] = acc;
        }
    }
    DensityMatrix { num_qubits: keep.len(), entries: out }
}

// ---------------------------------------------------------------------------
// Hermitian eigensolver (cyclic Jacobi). The matrices here are tiny test
// fixtures (≤ 128×128), which keeps a dependency-free solver practical.
// ---------------------------------------------------------------------------

/// Eigenvalues of a Hermitian matrix, ascending.
pub fn hermitian_eigenvalues(m: &Array2<Complex64>) -> Vec<f64> {
    hermitian_eigen(m).0
}

/// Eigenvalues (ascending) and matching eigenvector columns.
pub fn hermitian_eigen(m: &Array2<Complex64>) -> (Vec<f64>, Array2<Complex64>) {
    let n = m.dim().0;
    let mut a = m.clone();
    let mut v: Array2<Complex64> = Array2::eye(n);
    for _sweep in 0..100 {
        let mut off = 0.0;
        for p in 0..n {
            for q in (p + 1)..n {
                off += a[(p, q)].norm_sqr();
            }
        }
        if off < 1e-28 {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[(p, q)];
                if apq.norm() < 1e-300 {
                    continue;
                }
                let app = a[(p, p)].re;
                let aqq = a[(q, q)].re;
                // Complex Jacobi rotation zeroing a[(p,q)].
                let phase = apq / apq.norm();
                let theta = 0.5 * (2.0 * apq.norm()).atan2(app - aqq);
                let cs = theta.cos();
                let sn = theta.sin();
                let s = phase * sn;
                // Columns: A ← A·J, rows: A ← J†·A with
                // J = [[c, s],[−s̄ … ]] acting on (p, q).
                for i in 0..n {
                    let aip = a[(i, p)];
                    let aiq = a[(i, q)];
                    a[(i, p)] = aip * cs + aiq * s.conj();
                    a[(i, q)] = -aip * s + aiq * cs;
                }
                for j in 0..n {
                    let apj = a[(p, j)];
                    let aqj = a[(q, j)];
                    a[(p, j)] = apj * cs + aqj * s;
                    a[(q, j)] = -apj * s.conj() + aqj * cs;
                }
                for i in 0..n {
                    let vip = v[(i, p)];
                    let viq = v[(i, q)];
                    v[(i, p)] = vip * cs + viq * s.conj();
                    v[(i, q)] = -vip * s + viq * cs;
                }
            }
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    let eigs: Vec<f64> = (0..n).map(|i| a[(i, i)].re).collect();
    order.sort_by(|&i, &j| eigs[i].partial_cmp(&eigs[j]).unwrap());
    let sorted_eigs: Vec<f64> = order.iter().map(|&i| eigs[i]).collect();
    let mut sorted_vecs = Array2::zeros((n, n));
    for (new_col, &old_col) in order.iter().enumerate() {
        for i in 0..n {
            sorted_vecs[(i, new_col)] = v[(i, old_col)];
        }
    }
    (sorted_eigs, sorted_vecs)
}

// ---------------------------------------------------------------------------
// Circuit simulation.
// ---------------------------------------------------------------------------

/// Outcome record: classical bit index → value.
pub type OutcomeRecord = BTreeMap<usize, bool>;

/// Render a record over `num_bits` as a bitstring "b0b1…".
pub fn record_bitstring(record: &OutcomeRecord, num_bits: usize) -> String {
    (0..num_bits)
        .map(|b| if record.get(&b).copied().unwrap_or(false) { '1' } else { '0' })
        .collect()
}

fn non_clifford_matrix<'a>(
    name: &str,
    targets: &[usize],
    table: Option<&'a UnitaryTable>,
) -> Result<&'a Array2<Complex64>> {
    let m = table
        .and_then(|t| t.get(name))
        .ok_or_else(|| Error::NotExpanded(name.to_string()))?;
    if m.dim().0 != 1 << targets.len() {
        return Err(Error::InvalidGadget(format!(
            "unitary for `{name}` has dimension {} but {} target(s)",
            m.dim().0,
            targets.len()
        )));
    }
    Ok(m)
}

/// Exact pure-state simulation of one trajectory. Measurements are sampled
/// from the Born rule with `rng`; conditionals honored.
pub fn simulate_pure(
    circuit: &Circuit,
    input: &StateVector,
    table: Option<&UnitaryTable>,
    rng: &mut impl Rng,
) -> Result<(StateVector, OutcomeRecord)> {
    simulate_pure_with(circuit, input, table, |p1| Ok(rng.gen_bool(p1.clamp(0.0, 1.0))))
        .map(|(s, r, _)| (s, r))
}

/// Pure-state simulation with forced measurement outcomes (bit index →
/// outcome). Returns the branch probability; a forced zero-probability
/// branch yields probability 0 and an unspecified state.
pub fn simulate_pure_forced(
    circuit: &Circuit,
    input: &StateVector,
    table: Option<&UnitaryTable>,
    forced: &BTreeMap<usize, bool>,
) -> Result<(StateVector, OutcomeRecord, f64)> {
    let next = |bit: usize| -> Result<bool> {
        forced
            .get(&bit)
            .copied()
            .ok_or_else(|| Error::InvalidState(format!("no forced outcome for bit c{bit}")))
    };
    let mut prob = 1.0;
    let mut state = input.clone();
    let mut record = OutcomeRecord::new();
    for instr in &circuit.instructions {
        match instr {
            Instruction::Gate(g) => state.apply_gate(g)?,
            Instruction::NonClifford { name, targets } => {
                let m = non_clifford_matrix(name, targets, table)?;
                state.apply_matrix(m, targets);
            }
            Instruction::MeasureZ { qubit, bit } => {
                let p1 = state.prob_one(*qubit);
                let outcome = next(*bit)?;
                let p = if outcome { p1 } else { 1.0 - p1 };
                prob *= p;
                if p <= 0.0 {
                    return Ok((state, record, 0.0));
                }
                state.project(*qubit, outcome);
                state.renormalize();
                record.insert(*bit, outcome);
            }
            Instruction::Conditional { bit, gate } => {
                if record.get(bit).copied().unwrap_or(false) {
                    state.apply_gate(gate)?;
                }
            }
            Instruction::Reset { qubit } => {
                // Reset along the most-probable branch is not well-defined
                // for forced runs; resets are unrecorded so force is not
                // applicable. Collapse to |0⟩ deterministically by summing
                // is impossible for a pure state, so branch on outcome 0/1
                // is required; forced simulation rejects resets.
                let _ = qubit;
                return Err(Error::InvalidState("forced simulation does not support RESET".into()));
            }
        }
    }
    Ok((state, record, prob))
}

fn simulate_pure_with(
    circuit: &Circuit,
    input: &StateVector,
    table: Option<&UnitaryTable>,
    mut sample: impl FnMut(f64) -> Result<bool>,
) -> Result<(StateVector, OutcomeRecord, f64)> {
    if input.num_qubits != circuit.num_qubits {
        return Err(Error::DimensionMismatch(input.num_qubits, circuit.num_qubits));
    }
    let mut state = input.clone();
    let mut record = OutcomeRecord::new();
    let mut prob = 1.0;
    for instr in &circuit.instructions {
        match instr {
            Instruction::Gate(g) => state.apply_gate(g)?,
            Instruction::NonClifford { name, targets } => {
                let m = non_clifford_matrix(name, targets, table)?;
                state.apply_matrix(m, targets);
            }
            Instruction::MeasureZ { qubit, bit } => {
                let p1 = state.prob_one(*qubit);
                let outcome = sample(p1)?;
                let p = if outcome { p1 } else { 1.0 - p1 };
                prob *= p;
                state.project(*qubit, outcome);
                state.renormalize();
                record.insert(*bit, outcome);
            }
            Instruction::Conditional { bit, gate } => {
                if record.get(bit).copied().unwrap_or(false) {
                    state.apply_gate(gate)?;
                }
            }
            Instruction::Reset { qubit } => {
                let p1 = state.prob_one(*qubit);
                let outcome = sample(p1)?;
                prob *= if outcome { p1 } else { 1.0 - p1 };
                state.project(*qubit, outcome);
                state.renormalize();
                if outcome {
                    state.apply_gate(&CliffordGate::X(*qubit))?;
                }
            }
        }
    }
    Ok((state, record, prob))
}

/// Oracle input: a pure state on the whole register, or a density matrix on
/// `placement` with every other qubit in |0⟩.
#[derive(Debug, Clone)]
pub enum OracleInput {
    Pure(StateVector),
    MixedAncilla {
        rho: DensityMatrix,
        placement: Vec<usize>,
        num_qubits: usize,
    },
}

impl OracleInput {
    fn pure_terms(&self) -> Result<Vec<(f64, StateVector)>> {
        match self {
            OracleInput::Pure(s) => Ok(vec![(1.0, s.clone())]),
            OracleInput::MixedAncilla { rho, placement, num_qubits } => {
                if placement.len() != rho.num_qubits() {
                    return Err(Error::DimensionMismatch(placement.len(), rho.num_qubits()));
                }
                let mut terms = Vec::new();
                for (w, local) in rho.spectral_decomposition() {
                    let mut amps = vec![C0; 1 << num_qubits];
                    for (li, &a) in local.amplitudes.iter().enumerate() {
                        let mut idx = 0usize;
                        for (b, &q) in placement.iter().enumerate() {
                            idx |= (li >> b & 1) << q;
                        }
                        amps[idx] = a;
                    }
                    terms.push((w, StateVector { num_qubits: *num_qubits, amplitudes: amps }));
                }
                Ok(terms)
            }
        }
    }
}

/// Exact Born-rule distribution over classical-bit assignments, by branch
/// enumeration. Keys are bitstrings "b0b1…" over the circuit's classical
/// bits.
pub fn distribution(
    circuit: &Circuit,
    input: &OracleInput,
    table: Option<&UnitaryTable>,
) -> Result<BTreeMap<String, f64>> {
    let branch_points = circuit
        .instructions
        .iter()
        .filter(|i| matches!(i, Instruction::MeasureZ { .. } | Instruction::Reset { .. }))
        .count();
    if branch_points > MAX_BRANCH_MEASUREMENTS {
        return Err(Error::BranchOverflow(branch_points, MAX_BRANCH_MEASUREMENTS));
    }

    let mut dist: BTreeMap<String, f64> = BTreeMap::new();
    for (weight, start) in input.pure_terms()? {
        if start.num_qubits != circuit.num_qubits {
            return Err(Error::DimensionMismatch(start.num_qubits, circuit.num_qubits));
        }
        // Stack of (state unnormalized, record, next instruction index).
        let mut stack: Vec<(StateVector, OutcomeRecord, usize)> = vec![(start, OutcomeRecord::new(), 0)];
        while let Some((mut state, mut record, mut idx)) = stack.pop() {
            let mut alive = true;
            while idx < circuit.instructions.len() {
                match &circuit.instructions[idx] {
                    Instruction::Gate(g) => state.apply_gate(g)?,
                    Instruction::NonClifford { name, targets } => {
                        let m = non_clifford_matrix(name, targets, table)?;
                        state.apply_matrix(m, targets);
                    }
                    Instruction::Conditional { bit, gate } => {
                        if record.get(bit).copied().unwrap_or(false) {
                            state.apply_gate(gate)?;
                        }
                    }
                    Instruction::MeasureZ { qubit, bit } => {
                        let mut one = state.clone();
                        let p1 = one.project(*qubit, true);
                        let p0 = state.project(*qubit, false);
                        if p1 > 1e-18 {
                            let mut r = record.clone();
                            r.insert(*bit, true);
                            stack.push((one, r, idx + 1));
                        }
                        if p0 <= 1e-18 {
                            alive = false;
                            break;
                        }
                        record.insert(*bit, false);
                    }
                    Instruction::Reset { qubit } => {
                        let mut one = state.clone();
                        let p1 = one.project(*qubit, true);
                        let p0 = state.project(*qubit, false);
                        if p1 > 1e-18 {
                            one.apply_gate(&CliffordGate::X(*qubit))?;
                            stack.push((one, record.clone(), idx + 1));
                        }
                        if p0 <= 1e-18 {
                            alive = false;
                            break;
                        }
                    }
                }
                idx += 1;
            }
            if alive {
                let p = state.norm().powi(2);
                let key = record_bitstring(&record, circuit.num_classical_bits);
                *dist.entry(key).or_insert(0.0) += weight * p;
            }
        }
    }
    let total: f64 = dist.values().sum();
    if (total - 1.0).abs() > 1e-10 {
        return Err(Error::NonPhysical(format!("distribution sums to {total}")));
    }
    Ok(dist)
}

/// Dense unitary of a measurement-free circuit (non-Cliffords resolved via
/// `table`).
pub fn unitary_of_circuit(circuit: &Circuit, table: Option<&UnitaryTable>) -> Result<Array2<Complex64>> {
    if circuit.num_qubits > MAX_PURE_QUBITS {
        return Err(Error::TooLarge("circuit too wide for a dense unitary".into()));
    }
    let dim = 1usize << circuit.num_qubits;
    let mut cols: Vec<Vec<Complex64>> = Vec::with_capacity(dim);
    for b in 0..dim {
        let mut amps = vec![C0; dim];
        amps[b] = C1;
        for instr in &circuit.instructions {
            match instr {
                Instruction::Gate(g) => {
                    apply_matrix_vec(&mut amps, &gate_matrix(g), &g.targets());
                }
                Instruction::NonClifford { name, targets } => {
                    let m = non_clifford_matrix(name, targets, table)?;
                    apply_matrix_vec(&mut amps, m, targets);
                }
                _ => {
                    return Err(Error::InvalidState(
                        "unitary_of_circuit requires a measurement-free circuit".into(),
                    ))
                }
            }
        }
        cols.push(amps);
    }
    let mut u = Array2::zeros((dim, dim));
    for (j, col) in cols.iter().enumerate() {
        for (i, &a) in col.iter().enumerate() {
            u[(i, j)] = a;
        }
    }
    Ok(u)
}

// ---------------------------------------------------------------------------
// Channels.
// ---------------------------------------------------------------------------

/// How the non-subsystem qubits of a circuit are initialized.
#[derive(Debug, Clone)]
pub enum EnvInit {
    Pure(StateVector),
    Mixed(DensityMatrix),
}

/// Completely positive map induced on a subsystem, as a Choi matrix
/// J = (E ⊗ id)(|Ω⟩⟨Ω|) with |Ω⟩ the normalized maximally entangled state.
#[derive(Debug, Clone)]
pub struct ProcessMatrix {
    subsystem_qubits: usize,
    choi: Array2<Complex64>,
}

impl ProcessMatrix {
    pub fn subsystem_qubits(&self) -> usize {
        self.subsystem_qubits
    }

    pub fn choi(&self) -> &Array2<Complex64> {
        &self.choi
    }

    pub fn trace(&self) -> f64 {
        let d2 = self.choi.dim().0;
        (0..d2).map(|i| self.choi[(i, i)].re).sum()
    }

    /// Process fidelity against a target unitary, in [0, 1]; equals 1 iff
    /// the channel is exactly ρ ↦ UρU†.
    pub fn process_fidelity(&self, u: &Array2<Complex64>) -> f64 {
        let d = 1usize << self.subsystem_qubits;
        assert_eq!(u.dim(), (d, d));
        // |ψ_U⟩ indexed by (out, in) = out + d·in, amplitudes U[out,in]/√d.
        let mut f = C0;
        let scale = 1.0 / d as f64;
        for o1 in 0..d {
            for i1 in 0..d {
                for o2 in 0..d {
                    for i2 in 0..d {
                        f += u[(o1, i1)].conj() * self.choi[(o1 + d * i1, o2 + d * i2)] * u[(o2, i2)] * scale;
                    }
                }
            }
        }
        f.re.clamp(0.0, 1.0)
    }

    /// Tr(J²) — equals 1 for a unitary channel (with Tr J = 1).
    pub fn purity(&self) -> f64 {
        let d2 = self.choi.dim().0;
        let mut acc = 0.0;
        for i in 0..d2 {
            for j in 0..d2 {
                acc += (self.choi[(i, j)] * self.choi[(j, i)]).re;
            }
        }
        acc
    }

    /// Apply the channel to a density matrix on the subsystem.
    pub fn apply(&self, rho: &DensityMatrix) -> DensityMatrix {
        let d = 1usize << self.subsystem_qubits;
        assert_eq!(rho.dim(), d);
        // E(ρ)[o1,o2] = d · Σ_{i1,i2} J[(o1,i1),(o2,i2)] ρ[i1,i2]
        let mut out = Array2::zeros((d, d));
        for o1 in 0..d {
            for o2 in 0..d {
                let mut acc = C0;
                for i1 in 0..d {
                    for i2 in 0..d {
                        acc += self.choi[(o1 + d * i1, o2 + d * i2)] * rho.entries[(i1, i2)];
                    }
                }
                out[(o1, o2)] = acc * d as f64;
            }
        }
        DensityMatrix { num_qubits: self.subsystem_qubits, entries: out }
    }
}

/// Evolve a (not necessarily physical) matrix through the circuit,
/// branch-summing over measurements and resets with conditionals honored.
/// Returns the sum over branches of the unnormalized final matrices,
/// optionally keeping only branches consistent with `forced` bits.
fn evolve_density_branches(
    circuit: &Circuit,
    initial: Array2<Complex64>,
    table: Option<&UnitaryTable>,
    forced: Option<&BTreeMap<usize, bool>>,
) -> Result<Array2<Complex64>> {
    let n = circuit.num_qubits;
    let dim = 1usize << n;
    assert_eq!(initial.dim(), (dim, dim));

    struct Branch {
        rho: Array2<Complex64>,
        record: OutcomeRecord,
    }
    let apply_u = |rho: &mut Array2<Complex64>, m: &Array2<Complex64>, targets: &[usize]| {
        // ρ ← UρU†: vectorize ρ as a 2n-qubit state; columns use conj(U).
        let flat = rho.as_slice_mut().expect("contiguous");
        apply_matrix_vec_2d(flat, dim, m, targets);
    };

    let mut branches = vec![Branch { rho: initial, record: OutcomeRecord::new() }];
    for instr in &circuit.instructions {
        match instr {
            Instruction::Gate(g) => {
                let m = gate_matrix(g);
                for b in &mut branches {
                    apply_u(&mut b.rho, &m, &g.targets());
                }
            }
            Instruction::NonClifford { name, targets } => {
                let m = non_clifford_matrix(name, targets, table)?.clone();
                for b in &mut branches {
                    apply_u(&mut b.rho, &m, targets);
                }
            }
            Instruction::Conditional { bit, gate } => {
                let m = gate_matrix(gate);
                for b in &mut branches {
                    if b.record.get(bit).copied().unwrap_or(false) {
                        apply_u(&mut b.rho, &m, &gate.targets());
                    }
                }
            }
            Instruction::MeasureZ { qubit, bit } => {
                let mut next = Vec::with_capacity(branches.len() * 2);
                for b in branches {
                    for outcome in [false, true] {
                        if let Some(f) = forced {
                            if let Some(&want) = f.get(bit) {
                                if want != outcome {
                                    continue;
                                }
                            }
                        }
                        let rho = project_density(&b.rho, *qubit, outcome);
                        let mut record = b.record.clone();
                        record.insert(*bit, outcome);
                        next.push(Branch { rho, record });
                    }
                }
                branches = next;
            }
            Instruction::Reset { qubit } => {
                // ρ → P0ρP0 + X·P1ρP1·X, folded without branching.
                let x = gate_matrix(&CliffordGate::X(*qubit));
                for b in &mut branches {
                    let zero = project_density(&b.rho, *qubit, false);
                    let mut one = project_density(&b.rho, *qubit, true);
                    apply_matrix_vec_2d(one.as_slice_mut().unwrap(), dim, &x, &[*qubit]);
                    b.rho = zero + one;
                }
            }
        }
    }
    let mut total: Array2<Complex64> = Array2::zeros((dim, dim));
    for b in branches {
        total += &b.rho;
    }
    Ok(total)
}

/// ρ ← UρU† on a row-major dim×dim buffer: U acts on the ket (row) index,
/// conj(U) on the bra (column) index.
fn apply_matrix_vec_2d(flat: &mut [Complex64], dim: usize, m: &Array2<Complex64>, targets: &[usize]) {
    // Row-major ρ[i,j] sits at flat[i·dim + j], so the ket index i is the
    // high bits of the flat index.
    let nbits = dim.trailing_zeros() as usize;
    let ket: Vec<usize> = targets.iter().map(|&t| nbits + t).collect();
    apply_matrix_vec(flat, m, &ket);
    let mconj = m.mapv(|v| v.conj());
    apply_matrix_vec(flat, &mconj, targets);
}

fn project_density(rho: &Array2<Complex64>, qubit: usize, outcome: bool) -> Array2<Complex64> {
    let dim = rho.dim().0;
    let mut out = rho.clone();
    for i in 0..dim {
        for j in 0..dim {
            if (i >> qubit & 1 == 1) != outcome || (j >> qubit & 1 == 1) != outcome {
                out[(i, j)] = C0;
            }
        }
    }
    out
}

/// The completely positive map the circuit induces on `subsystem`, with
/// the remaining qubits initialized from `env` and traced out.
///
/// `env` pairs disjoint qubit lists with their initial states; together
/// with `subsystem` they must cover every circuit qubit exactly once.
/// Measurement branches are summed (`forced` restricts to one branch; the
/// result is then normalized by the branch probability on the maximally
/// mixed input, which must be input-independent for the forced Choi matrix
/// to describe a channel).
pub fn channel_of_circuit(
    circuit: &Circuit,
    subsystem: &[usize],
    env: &[(Vec<usize>, EnvInit)],
    table: Option<&UnitaryTable>,
    forced: Option<&BTreeMap<usize, bool>>,
) -> Result<ProcessMatrix> {
    let n = circuit.num_qubits;
    if n > MAX_DENSITY_QUBITS {
        return Err(Error::TooLarge(format!("channel computation capped at {MAX_DENSITY_QUBITS} qubits")));
    }
    let mut covered = vec![false; n];
    for &q in subsystem.iter().chain(env.iter().flat_map(|(qs, _)| qs.iter())) {
        if q >= n {
            return Err(Error::QubitOutOfRange { index: q, num_qubits: n });
        }
        if covered[q] {
            return Err(Error::InvalidState(format!("qubit {q} assigned twice in channel spec")));
        }
        covered[q] = true;
    }
    if covered.iter().any(|&b| !b) {
        return Err(Error::InvalidState("channel spec must cover every qubit".into()));
    }

    let d = 1usize << subsystem.len();
    let dim = 1usize << n;

    // Environment density matrix on the full register (subsystem slots
    // filled below per matrix unit).
    let env_rho = {
        let mut rho: Array2<Complex64> = Array2::ones((1, 1));
        let mut qubit_order: Vec<usize> = Vec::new();
        for (qs, init) in env {
            let block = match init {
                EnvInit::Pure(s) => {
                    if s.num_qubits() != qs.len() {
                        return Err(Error::DimensionMismatch(s.num_qubits(), qs.len()));
                    }
                    s.density().entries
                }
                EnvInit::Mixed(m) => {
                    if m.num_qubits() != qs.len() {
                        return Err(Error::DimensionMismatch(m.num_qubits(), qs.len()));
                    }
                    m.entries.clone()
                }
            };
            rho = kron(&block, &rho);
            qubit_order.extend(qs.iter().copied());
        }
        (rho, qubit_order)
    };

    let mut choi: Array2<Complex64> = Array2::zeros((d * d, d * d));
    for ui in 0..d {
        for uj in 0..d {
            // ρ_in = |ui⟩⟨uj| on the subsystem ⊗ env state, embedded.
            let mut rho: Array2<Complex64> = Array2::zeros((dim, dim));
            let (env_block, env_order) = (&env_rho.0, &env_rho.1);
            let ed = env_block.dim().0;
            for ei in 0..ed {
                for ej in 0..ed {
                    let mut gi = 0usize;
                    let mut gj = 0usize;
                    for (b, &q) in env_order.iter().enumerate() {
                        gi |= (ei >> b & 1) << q;
                        gj |= (ej >> b & 1) << q;
                    }
                    for (b, &q) in subsystem.iter().enumerate() {
                        gi |= (ui >> b & 1) << q;
                        gj |= (uj >> b & 1) << q;
                    }
                    rho[(gi, gj)] = env_block[(ei, ej)];
                }
            }
            let out = evolve_density_branches(circuit, rho, table, forced)?;
            let reduced = partial_trace(&out, n, subsystem);
            for o1 in 0..d {
                for o2 in 0..d {
                    choi[(o1 + d * ui, o2 + d * uj)] += reduced.entries[(o1, o2)] / d as f64;
                }
            }
        }
    }
    let mut pm = ProcessMatrix { subsystem_qubits: subsystem.len(), choi };
    if forced.is_some() {
        let t = pm.trace();
        if t > 1e-12 {
            pm.choi.mapv_inplace(|v| v / t);
        }
    }
    Ok(pm)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn hadamard_amplitudes() {
        let c = Circuit::parse("qubits 1\nH 0\n").unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let (s, _) = simulate_pure(&c, &StateVector::zero_state(1), None, &mut rng).unwrap();
        let h = std::f64::consts::FRAC_1_SQRT_2;
        assert!((s.amplitudes()[0] - c64(h, 0.)).norm() < 1e-15);
        assert!((s.amplitudes()[1] - c64(h, 0.)).norm() < 1e-15);
    }

    fn c64(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn plus_state_measurement_distribution() {
        let c = Circuit::parse("qubits 1\nH 0\nM 0 -> c0\n").unwrap();
        let d = distribution(&c, &OracleInput::Pure(StateVector::zero_state(1)), None).unwrap();
        assert!((d["0"] - 0.5).abs() < 1e-12);
        assert!((d["1"] - 0.5).abs() < 1e-12);

        let c = Circuit::parse("qubits 1\nM 0 -> c0\n").unwrap();
        let d = distribution(&c, &OracleInput::Pure(StateVector::zero_state(1)), None).unwrap();
        assert_eq!(d.len(), 1);
        assert!((d["0"] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn conditional_feedback_applies() {
        // Measure |1⟩, conditionally flip: always ends in |0⟩.
        let c = Circuit::parse("qubits 1\nX 0\nM 0 -> c0\nIF c0 X 0\nM 0 -> c1\n").unwrap();
        let d = distribution(&c, &OracleInput::Pure(StateVector::zero_state(1)), None).unwrap();
        assert_eq!(d.len(), 1);
        assert!((d["10"] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn reset_discards_correlations() {
        // Bell pair, reset one half, measure both: qubit 0 stays uniform,
        // qubit 1 reads 0.
        let c = Circuit::parse("qubits 2\nH 0\nCNOT 0 1\nRESET 1\nM 0 -> c0\nM 1 -> c1\n").unwrap();
        let d = distribution(&c, &OracleInput::Pure(StateVector::zero_state(2)), None).unwrap();
        assert!((d["00"] - 0.5).abs() < 1e-12);
        assert!((d["10"] - 0.5).abs() < 1e-12);
        assert!(d.get("01").is_none() && d.get("11").is_none());
    }

    #[test]
    fn unitary_table_resolves_non_clifford() {
        let mut table = UnitaryTable::new();
        let t = ndarray::array![
            [c64(1., 0.), c64(0., 0.)],
            [c64(0., 0.), Complex64::from_polar(1.0, std::f64::consts::FRAC_PI_4)]
        ];
        table.insert("T".into(), t);
        let c = Circuit::parse("qubits 1\nH 0\nT 0\nH 0\nM 0 -> c0\n").unwrap();
        let d = distribution(&c, &OracleInput::Pure(StateVector::zero_state(1)), Some(&table)).unwrap();
        let expect0 = (std::f64::consts::FRAC_PI_8).cos().powi(2);
        assert!((d["0"] - expect0).abs() < 1e-12, "{d:?}");
    }

    #[test]
    fn missing_table_entry_errors() {
        let c = Circuit::parse("qubits 1\nT 0\n").unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let e = simulate_pure(&c, &StateVector::zero_state(1), None, &mut rng).unwrap_err();
        assert!(matches!(e, Error::NotExpanded(_)));
    }

    #[test]
    fn norm_is_preserved() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..20 {
            let n = rng.gen_range(1..=4);
            let circ = crate::random::random_clifford_circuit(n, 30, 0, &mut rng);
            let (out, _) = simulate_pure(&circ, &StateVector::zero_state(n), None, &mut rng).unwrap();
            assert!((out.norm() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn density_matrix_validation() {
        let ok = DensityMatrix::new(1, ndarray::array![[c64(0.5, 0.), c64(0.5, 0.)], [c64(0.5, 0.), c64(0.5, 0.)]]);
        assert!(ok.is_ok());
        let bad_trace =
            DensityMatrix::new(1, ndarray::array![[c64(1., 0.), c64(0., 0.)], [c64(0., 0.), c64(1., 0.)]]);
        assert!(bad_trace.is_err());
        let not_hermitian =
            DensityMatrix::new(1, ndarray::array![[c64(0.5, 0.), c64(0.5, 0.)], [c64(-0.5, 0.), c64(0.5, 0.)]]);
        assert!(not_hermitian.is_err());
        let not_psd =
            DensityMatrix::new(1, ndarray::array![[c64(1.5, 0.), c64(0., 0.)], [c64(0., 0.), c64(-0.5, 0.)]]);
        assert!(not_psd.is_err());
    }

    #[test]
    fn jacobi_eigensolver_matches_known_spectrum() {
        // Pauli Y: eigenvalues ±1.
        let y = ndarray::array![[c64(0., 0.), c64(0., -1.)], [c64(0., 1.), c64(0., 0.)]];
        let eigs = hermitian_eigenvalues(&y);
        assert!((eigs[0] + 1.0).abs() < 1e-12 && (eigs[1] - 1.0).abs() < 1e-12);

        // Random Hermitian: check A v = λ v.
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..10 {
            let n = 6;
            let mut a: Array2<Complex64> = Array2::zeros((n, n));
            for i in 0..n {
                for j in i..n {
                    let v = c64(rng.gen_range(-1.0..1.0), if i == j { 0.0 } else { rng.gen_range(-1.0..1.0) });
                    a[(i, j)] = v;
                    a[(j, i)] = v.conj();
                }
            }
            let (eigs, vecs) = hermitian_eigen(&a);
            for k in 0..n {
                for i in 0..n {
                    let av: Complex64 = (0..n).map(|j| a[(i, j)] * vecs[(j, k)]).sum();
                    assert!((av - vecs[(i, k)] * eigs[k]).norm() < 1e-9);
                }
            }
        }
    }

    #[test]
    fn spectral_decomposition_reconstructs() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let rho = crate::dense::random_density(2, &mut rng);
        let terms = rho.spectral_decomposition();
        let dim = rho.dim();
        let mut rebuilt: Array2<Complex64> = Array2::zeros((dim, dim));
        for (w, v) in &terms {
            for i in 0..dim {
                for j in 0..dim {
                    rebuilt[(i, j)] += *w * v.amplitudes()[i] * v.amplitudes()[j].conj();
                }
            }
        }
        for i in 0..dim {
            for j in 0..dim {
                assert!((rebuilt[(i, j)] - rho.entries()[(i, j)]).norm() < 1e-10);
            }
        }
    }

    #[test]
    fn identity_circuit_channel_is_identity() {
        let c = Circuit::parse("qubits 1\n").unwrap();
        let pm = channel_of_circuit(&c, &[0], &[], None, None).unwrap();
        let eye: Array2<Complex64> = Array2::eye(2);
        assert!(pm.process_fidelity(&eye) > 1.0 - 1e-12);
        assert!((pm.trace() - 1.0).abs() < 1e-12);
        assert!((pm.purity() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn measurement_free_channel_is_pure() {
        let c = Circuit::parse("qubits 2\nH 0\nCNOT 0 1\nS 1\n").unwrap();
        let pm = channel_of_circuit(&c, &[0, 1], &[], None, None).unwrap();
        assert!((pm.purity() - 1.0).abs() < 1e-10);
        let u = unitary_of_circuit(&c, None).unwrap();
        assert!(pm.process_fidelity(&u) > 1.0 - 1e-12);
    }

    #[test]
    fn partial_trace_of_bell_is_mixed() {
        let c = Circuit::parse("qubits 2\nH 0\nCNOT 0 1\n").unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let (s, _) = simulate_pure(&c, &StateVector::zero_state(2), None, &mut rng).unwrap();
        let reduced = s.density().partial_trace(&[0]);
        assert!((reduced.entries()[(0, 0)].re - 0.5).abs() < 1e-12);
        assert!(reduced.entries()[(0, 1)].norm() < 1e-12);
        assert!((reduced.largest_eigenvalue() - 0.5).abs() < 1e-12);
    }

    #[test]
    fn pauli_matrix_matches_algebra() {
        // Matrix of the product equals the product of matrices, phases and
        // all, over random pairs.
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for _ in 0..50 {
            let n = rng.gen_range(1..=3);
            let a = random_pauli(n, &mut rng);
            let b = random_pauli(n, &mut rng);
            let prod = a.mul(&b).unwrap();
            let ma = pauli_matrix(&a).dot(&pauli_matrix(&b));
            let mp = pauli_matrix(&prod);
            for i in 0..1 << n {
                for j in 0..1 << n {
                    assert!((ma[(i, j)] - mp[(i, j)]).norm() < 1e-12);
                }
            }
        }
    }

    fn random_pauli(n: usize, rng: &mut impl Rng) -> PauliString {
        let mut p = PauliString::identity(n);
        for q in 0..n {
            p.set_pauli(
                q,
                match rng.gen_range(0..4) {
                    0 => Pauli::I,
                    1 => Pauli::X,
                    2 => Pauli::Y,
                    _ => Pauli::Z,
                },
            );
        }
        p.set_phase_exponent(rng.gen_range(0..4));
        p
    }
}

/// Random density matrix ρ = GG†/Tr(GG†) with complex Gaussian-ish G.
pub fn random_density(num_qubits: usize, rng: &mut impl Rng) -> DensityMatrix {
    let dim = 1usize << num_qubits;
    let mut g: Array2<Complex64> = Array2::zeros((dim, dim));
    for i in 0..dim {
        for j in 0..dim {
            g[(i, j)] = Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
        }
    }
    let mut rho: Array2<Complex64> = Array2::zeros((dim, dim));
    for i in 0..dim {
        for j in 0..dim {
            let mut acc = Complex64::new(0.0, 0.0);
            for k in 0..dim {
                acc += g[(i, k)] * g[(j, k)].conj();
            }
            rho[(i, j)] = acc;
        }
    }
    let tr: f64 = (0..dim).map(|i| rho[(i, i)].re).sum();
    rho.mapv_inplace(|v| v / tr);
    DensityMatrix::from_parts(num_qubits, rho)
}

/// Random pure state, uniformly-ish via normalized complex Gaussians.
pub fn random_pure_state(num_qubits: usize, rng: &mut impl Rng) -> StateVector {
    let dim = 1usize << num_qubits;
    let mut amps: Vec<Complex64> = (0..dim)
        .map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
        .collect();
    let norm: f64 = amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
    for a in &mut amps {
        *a /= norm;
    }
    StateVector { num_qubits, amplitudes: amps }
}
