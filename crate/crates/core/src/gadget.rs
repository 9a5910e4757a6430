//! Gate-teleportation gadgets as data, plus an oracle-backed verifier.
//!
//! A gadget is an ancilla state |M⟩, a Clifford body over data ⊗ ancilla
//! (plus measurement and classical feedback for consumable gadgets), and
//! the unitary it claims to induce on the data qubits. Reusable gadgets
//! leave |M⟩ exactly as they found it; consumable gadgets spend it.
//!
//! Body qubit layout: data qubits first (0..d), ancilla after (d..d+q).

use std::collections::BTreeMap;

use ndarray::Array2;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::circuit::{Circuit, Instruction};
use crate::dense::{
    channel_of_circuit, gate_matrix, simulate_pure_forced, DensityMatrix, EnvInit, StateVector, UnitaryTable,
    MAX_DENSITY_QUBITS,
};
use crate::error::{Error, Result};
use crate::pauli::{CliffordGate, GateKind};
use crate::tableau::FrameLabel;

/// Leakage above this fails verification outright.
pub const LEAKAGE_PASS: f64 = 1e-10;
/// Fidelities below 1 − this fail verification.
pub const FIDELITY_PASS: f64 = 1e-10;

/// Ancilla state of a gadget: pure or mixed.
#[derive(Debug, Clone)]
pub enum AncillaState {
    Pure(StateVector),
    Mixed(DensityMatrix),
}

impl AncillaState {
    pub fn num_qubits(&self) -> usize {
        match self {
            AncillaState::Pure(s) => s.num_qubits(),
            AncillaState::Mixed(m) => m.num_qubits(),
        }
    }

    pub fn density(&self) -> DensityMatrix {
        match self {
            AncillaState::Pure(s) => s.density(),
            AncillaState::Mixed(m) => m.clone(),
        }
    }

    fn env_init(&self) -> EnvInit {
        match self {
            AncillaState::Pure(s) => EnvInit::Pure(s.clone()),
            AncillaState::Mixed(m) => EnvInit::Mixed(m.clone()),
        }
    }
}

/// A gate-teleportation gadget definition.
#[derive(Debug, Clone)]
pub struct GadgetDef {
    pub name: String,
    pub ancilla_qubits: usize,
    pub ancilla_state: AncillaState,
    /// Clifford + measurement + conditional body over data ⊗ ancilla.
    pub body: Circuit,
    /// Unitary the gadget claims to apply to the data qubits.
    pub claimed_unitary: Array2<Complex64>,
    pub reusable: bool,
}

impl GadgetDef {
    pub fn data_qubits(&self) -> usize {
        self.body.num_qubits - self.ancilla_qubits
    }

    /// Check the structural invariants of the definition.
    pub fn validate(&self) -> Result<()> {
        let fail = |m: String| Err(Error::InvalidGadget(m));
        if self.ancilla_qubits == 0 || self.ancilla_qubits >= self.body.num_qubits {
            return fail(format!(
                "body has {} qubits but {} are ancilla",
                self.body.num_qubits, self.ancilla_qubits
            ));
        }
        if self.ancilla_state.num_qubits() != self.ancilla_qubits {
            return fail("ancilla state size disagrees with ancilla_qubits".into());
        }
        if self.body.has_non_clifford() {
            return fail("gadget body must be Clifford + measurement + feedback only".into());
        }
        let d = self.data_qubits();
        if self.claimed_unitary.dim() != (1 << d, 1 << d) {
            return fail(format!("claimed unitary must be {0}×{0}", 1 << d));
        }
        if self.reusable {
            let measures = self
                .body
                .instructions
                .iter()
                .any(|i| matches!(i, Instruction::MeasureZ { .. } | Instruction::Reset { .. }));
            if measures {
                return fail("a reusable gadget body must be measurement-free".into());
            }
        }
        let diags = self.body.validate();
        if let Some(d) = diags.first() {
            return fail(format!("body: {d}"));
        }
        match &self.ancilla_state {
            AncillaState::Pure(s) => {
                if (s.norm() - 1.0).abs() > 1e-10 {
                    return fail("ancilla state is not normalized".into());
                }
            }
            AncillaState::Mixed(_) => {} // DensityMatrix::new already validated
        }
        Ok(())
    }

    /// True when the body contains the gate kind the gadget claims to
    /// implement (or its inverse) — the concrete form of the restriction
    /// that a reusable gadget must not use the very gate it teleports.
    pub fn body_contains_claimed_kind(&self) -> bool {
        let claimed = claimed_kinds(&self.claimed_unitary);
        self.body.instructions.iter().any(|instr| {
            let kind = match instr {
                Instruction::Gate(g) | Instruction::Conditional { gate: g, .. } => g.kind(),
                _ => return false,
            };
            claimed.contains(&kind)
        })
    }
}

/// Gate kinds whose matrix equals the claimed unitary up to global phase,
/// together with their inverses.
fn claimed_kinds(u: &Array2<Complex64>) -> Vec<GateKind> {
    if u.dim() != (2, 2) {
        return Vec::new();
    }
    let mut out = Vec::new();
    for kind in [
        GateKind::H,
        GateKind::S,
        GateKind::SDag,
        GateKind::X,
        GateKind::Y,
        GateKind::Z,
        GateKind::SqrtX,
        GateKind::SqrtXDag,
    ] {
        let g = CliffordGate::new(kind, &[0]).unwrap();
        if matrices_equal_up_to_phase(u, &gate_matrix(&g)) {
            out.push(kind);
            out.push(g.inverse().kind());
        }
    }
    out.sort();
    out.dedup();
    out
}

/// |Tr(A†B)| / dim == 1 iff A = e^{iφ}B for unitaries.
pub fn matrices_equal_up_to_phase(a: &Array2<Complex64>, b: &Array2<Complex64>) -> bool {
    phase_invariant_overlap(a, b) > 1.0 - 1e-10
}

/// |Tr(A†B)| / dim for equal-shape unitaries.
pub fn phase_invariant_overlap(a: &Array2<Complex64>, b: &Array2<Complex64>) -> f64 {
    let (n, _) = a.dim();
    let mut tr = Complex64::new(0.0, 0.0);
    for i in 0..n {
        for j in 0..n {
            tr += a[(j, i)].conj() * b[(j, i)];
        }
    }
    tr.norm() / n as f64
}

// ---------------------------------------------------------------------------
// Builtin gadgets.
// ---------------------------------------------------------------------------

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// (|0⟩ + i|1⟩)/√2 — the reusable-S ancilla.
pub fn plus_i_state() -> StateVector {
    StateVector::frame_state(FrameLabel::YPlus)
}

/// (|0⟩ − i|1⟩)/√2 — conjugate ancilla, induces S† through the same body.
pub fn minus_i_state() -> StateVector {
    StateVector::frame_state(FrameLabel::YMinus)
}

/// (|0⟩ + e^{iπ/4}|1⟩)/√2 — the T-injection ancilla.
pub fn t_magic_state() -> StateVector {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    StateVector::qubit(c(h, 0.0), Complex64::from_polar(h, std::f64::consts::FRAC_PI_4)).unwrap()
}

fn s_matrix() -> Array2<Complex64> {
    ndarray::array![[c(1., 0.), c(0., 0.)], [c(0., 0.), c(0., 1.)]]
}

fn t_matrix() -> Array2<Complex64> {
    ndarray::array![
        [c(1., 0.), c(0., 0.)],
        [c(0., 0.), Complex64::from_polar(1.0, std::f64::consts::FRAC_PI_4)]
    ]
}

fn sqrt_x_matrix() -> Array2<Complex64> {
    // H·S·H
    ndarray::array![[c(0.5, 0.5), c(0.5, -0.5)], [c(0.5, -0.5), c(0.5, 0.5)]]
}

fn sqrt_y_matrix() -> Array2<Complex64> {
    // S·(HSH)·S† = (1+i)/2 [[1, −1], [1, 1]]; squares to Y exactly.
    ndarray::array![[c(0.5, 0.5), c(-0.5, -0.5)], [c(0.5, 0.5), c(0.5, 0.5)]]
}

/// Append the reusable-S body acting on (data, ancilla): the ancilla is
/// the CNOT target and carries both Hadamards, so only CNOT and H appear.
fn push_s_body(c: &mut Circuit, data: usize, anc: usize) {
    c.push_gate(CliffordGate::Cnot(data, anc));
    c.push_gate(CliffordGate::H(anc));
    c.push_gate(CliffordGate::Cnot(data, anc));
    c.push_gate(CliffordGate::H(anc));
}

fn push_sqrt_x_body(c: &mut Circuit, data: usize, anc: usize) {
    c.push_gate(CliffordGate::H(data));
    push_s_body(c, data, anc);
    c.push_gate(CliffordGate::H(data));
}

/// Builtin gadget names.
pub const BUILTIN_NAMES: [&str; 4] = ["T_inject", "S_reusable", "SqrtX_reusable", "SqrtY_reusable"];

/// Construct a builtin gadget by name.
pub fn builtin(name: &str) -> Result<GadgetDef> {
    match name {
        "S_reusable" => {
            let mut body = Circuit::new(2);
            push_s_body(&mut body, 0, 1);
            Ok(GadgetDef {
                name: name.into(),
                ancilla_qubits: 1,
                ancilla_state: AncillaState::Pure(plus_i_state()),
                body,
                claimed_unitary: s_matrix(),
                reusable: true,
            })
        }
        "SqrtX_reusable" => {
            let mut body = Circuit::new(2);
            push_sqrt_x_body(&mut body, 0, 1);
            Ok(GadgetDef {
                name: name.into(),
                ancilla_qubits: 1,
                ancilla_state: AncillaState::Pure(plus_i_state()),
                body,
                claimed_unitary: sqrt_x_matrix(),
                reusable: true,
            })
        }
        "SqrtY_reusable" => {
            // √Y = S·√X·S†; S† runs as three S-stage passes (S³ = S†), so a
            // single shared (|0⟩+i|1⟩)/√2 ancilla serves all five stages.
            let mut body = Circuit::new(2);
            for _ in 0..3 {
                push_s_body(&mut body, 0, 1);
            }
            push_sqrt_x_body(&mut body, 0, 1);
            push_s_body(&mut body, 0, 1);
            Ok(GadgetDef {
                name: name.into(),
                ancilla_qubits: 1,
                ancilla_state: AncillaState::Pure(plus_i_state()),
                body,
                claimed_unitary: sqrt_y_matrix(),
                reusable: true,
            })
        }
        "T_inject" => {
            let mut body = Circuit::new(2);
            body.push_gate(CliffordGate::Cnot(0, 1));
            body.push_measure(1, 0);
            body.push_conditional(0, CliffordGate::S(0));
            Ok(GadgetDef {
                name: name.into(),
                ancilla_qubits: 1,
                ancilla_state: AncillaState::Pure(t_magic_state()),
                body,
                claimed_unitary: t_matrix(),
                reusable: false,
            })
        }
        _ => Err(Error::UnknownGadget(name.into())),
    }
}

/// Named gadget collection used by the expansion pass. Gate names in
/// circuits resolve here: the standard library maps `T` to the consumable
/// T-injection gadget and registers every builtin under its own name.
#[derive(Debug, Clone, Default)]
pub struct GadgetLibrary {
    gadgets: BTreeMap<String, GadgetDef>,
}

impl GadgetLibrary {
    pub fn empty() -> Self {
        GadgetLibrary::default()
    }

    pub fn standard() -> Self {
        let mut lib = GadgetLibrary::default();
        for name in BUILTIN_NAMES {
            lib.register(name.to_string(), builtin(name).unwrap());
        }
        lib.register("T".into(), builtin("T_inject").unwrap());
        lib
    }

    /// Register `def` under `key` (the gate name circuits use).
    pub fn register(&mut self, key: String, def: GadgetDef) {
        self.gadgets.insert(key, def);
    }

    pub fn get(&self, key: &str) -> Option<&GadgetDef> {
        self.gadgets.get(key)
    }

    pub fn resolve(&self, key: &str) -> Result<&GadgetDef> {
        self.get(key).ok_or_else(|| Error::UnknownGadget(key.to_string()))
    }

    /// Claimed unitaries of every registered gadget, for oracle runs of
    /// unexpanded circuits.
    pub fn unitary_table(&self) -> UnitaryTable {
        self.gadgets
            .iter()
            .map(|(k, def)| (k.clone(), def.claimed_unitary.clone()))
            .collect()
    }
}

// ---------------------------------------------------------------------------
// Gadget expansion (the non-Clifford → Clifford-body rewriting pass).
// ---------------------------------------------------------------------------

/// One ancilla register allocated by the expansion pass.
#[derive(Debug, Clone)]
pub struct AncillaAllocation {
    pub gadget: String,
    /// Expanded-circuit qubits carrying this |M⟩, low local bit first.
    pub qubits: Vec<usize>,
    pub state: AncillaState,
    pub reusable: bool,
}

/// Where the expansion put every ancilla and what state each one needs.
#[derive(Debug, Clone, Default)]
pub struct AncillaMap {
    pub allocations: Vec<AncillaAllocation>,
}

impl AncillaMap {
    pub fn total_ancilla_qubits(&self) -> usize {
        self.allocations.iter().map(|a| a.qubits.len()).sum()
    }

    pub fn ancilla_qubits(&self) -> Vec<usize> {
        let mut qs: Vec<usize> = self.allocations.iter().flat_map(|a| a.qubits.iter().copied()).collect();
        qs.sort_unstable();
        qs
    }

    /// Joint ancilla density matrix, tensor factors ordered to match
    /// [`AncillaMap::ancilla_qubits`].
    pub fn joint_density(&self) -> Result<DensityMatrix> {
        let mut allocs: Vec<&AncillaAllocation> = self.allocations.iter().collect();
        allocs.sort_by_key(|a| a.qubits.first().copied().unwrap_or(0));
        let mut rho: Option<DensityMatrix> = None;
        for a in allocs {
            let block = a.state.density();
            rho = Some(match rho {
                None => block,
                Some(r) => r.tensor(&block)?,
            });
        }
        rho.ok_or_else(|| Error::InvalidState("no ancillas allocated".into()))
    }
}

/// Replace every non-Clifford instruction by its gadget body. Reusable
/// gadgets get one shared ancilla register per distinct gadget name;
/// consumable gadgets get a fresh register per occurrence. Body
/// measurement bits are appended after the host circuit's bits.
pub fn expand_gadgets(circuit: &Circuit, lib: &GadgetLibrary) -> Result<(Circuit, AncillaMap)> {
    if !circuit.has_non_clifford() {
        return Ok((circuit.clone(), AncillaMap::default()));
    }

    // Pre-resolve names so errors surface before any rewriting, and count
    // ancilla demand: one register per distinct reusable name, one per
    // consumable occurrence.
    let mut reusable_registers: Vec<(String, usize)> = Vec::new(); // name → first qubit
    let mut map = AncillaMap::default();
    let mut next_qubit = circuit.num_qubits;
    for instr in &circuit.instructions {
        if let Instruction::NonClifford { name, .. } = instr {
            let def = lib.resolve(name)?;
            def.validate()?;
            if def.reusable {
                if !reusable_registers.iter().any(|(n, _)| n == name) {
                    reusable_registers.push((name.clone(), next_qubit));
                    map.allocations.push(AncillaAllocation {
                        gadget: name.clone(),
                        qubits: (next_qubit..next_qubit + def.ancilla_qubits).collect(),
                        state: def.ancilla_state.clone(),
                        reusable: true,
                    });
                    next_qubit += def.ancilla_qubits;
                }
            } else {
                map.allocations.push(AncillaAllocation {
                    gadget: name.clone(),
                    qubits: (next_qubit..next_qubit + def.ancilla_qubits).collect(),
                    state: def.ancilla_state.clone(),
                    reusable: false,
                });
                next_qubit += def.ancilla_qubits;
            }
        }
    }

    let mut out = Circuit::new(next_qubit);
    out.num_classical_bits = circuit.num_classical_bits;
    let mut next_bit = circuit.num_classical_bits;
    let mut consumable_cursor = 0usize;

    for instr in &circuit.instructions {
        match instr {
            Instruction::NonClifford { name, targets } => {
                let def = lib.resolve(name)?;
                if targets.len() != def.data_qubits() {
                    return Err(Error::InvalidGadget(format!(
                        "`{name}` acts on {} data qubit(s), instruction has {}",
                        def.data_qubits(),
                        targets.len()
                    )));
                }
                let ancilla = if def.reusable {
                    let (_, first) = reusable_registers.iter().find(|(n, _)| n == name).unwrap();
                    (*first..*first + def.ancilla_qubits).collect::<Vec<_>>()
                } else {
                    let alloc = map
                        .allocations
                        .iter()
                        .filter(|a| !a.reusable)
                        .nth(consumable_cursor)
                        .unwrap();
                    consumable_cursor += 1;
                    alloc.qubits.clone()
                };
                // Body qubit i maps to: data targets for i < d, ancilla
                // register afterwards. Body bits get fresh host bits.
                let d = def.data_qubits();
                let qubit_map = |q: usize| if q < d { targets[q] } else { ancilla[q - d] };
                let mut bit_map: BTreeMap<usize, usize> = BTreeMap::new();
                for body_instr in &def.body.instructions {
                    match body_instr {
                        Instruction::Gate(g) => out.push_gate(g.map_targets(qubit_map)),
                        Instruction::MeasureZ { qubit, bit } => {
                            let host_bit = *bit_map.entry(*bit).or_insert_with(|| {
                                let b = next_bit;
                                next_bit += 1;
                                b
                            });
                            out.push_measure(qubit_map(*qubit), host_bit);
                        }
                        Instruction::Conditional { bit, gate } => {
                            let host_bit = *bit_map.get(bit).ok_or_else(|| {
                                Error::InvalidGadget(format!("`{name}` body conditions on unwritten bit c{bit}"))
                            })?;
                            out.push_conditional(host_bit, gate.map_targets(qubit_map));
                        }
                        Instruction::Reset { qubit } => out.push_reset(qubit_map(*qubit)),
                        Instruction::NonClifford { .. } => {
                            return Err(Error::InvalidGadget(format!("`{name}` body is not Clifford-only")))
                        }
                    }
                }
            }
            other => {
                match other {
                    Instruction::MeasureZ { qubit, bit } => out.push_measure(*qubit, *bit),
                    Instruction::Gate(g) => out.push_gate(*g),
                    Instruction::Conditional { bit, gate } => out.push_conditional(*bit, *gate),
                    Instruction::Reset { qubit } => out.push_reset(*qubit),
                    Instruction::NonClifford { .. } => unreachable!(),
                }
            }
        }
    }
    out.num_classical_bits = out.num_classical_bits.max(next_bit);
    debug_assert!(!out.has_non_clifford());
    Ok((out, map))
}

// ---------------------------------------------------------------------------
// Verification.
// ---------------------------------------------------------------------------

/// Verification report for a gadget.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GadgetReport {
    pub name: String,
    pub reusable: bool,
    /// Worst process fidelity of the induced data channel against the
    /// claimed unitary: the branch-summed channel, and each measurement
    /// branch individually for consumable gadgets.
    pub unitary_match: f64,
    /// Worst per-branch process fidelity (consumable), or the channel
    /// fidelity again (reusable).
    pub branch_fidelities: Vec<f64>,
    /// Worst ancilla-restoration fidelity over the input design; absent
    /// for consumable gadgets.
    pub ancilla_restored: Option<f64>,
    /// Worst residual data–ancilla entanglement (1 − largest Schmidt
    /// weight) over the input design; absent for consumable gadgets.
    pub leakage: Option<f64>,
    /// The body uses the very gate kind it claims to implement.
    pub body_contains_claimed_kind: bool,
    pub pass: bool,
}

/// Input design: all 6^d frame-state products plus `extra_random` seeded
/// random pure states on the data qubits.
fn input_design(data_qubits: usize, extra_random: usize) -> Vec<StateVector> {
    use crate::tableau::FRAME_LABELS;
    let mut inputs = Vec::new();
    let mut stack: Vec<Vec<FrameLabel>> = vec![Vec::new()];
    for _ in 0..data_qubits {
        let mut next = Vec::new();
        for prefix in &stack {
            for &l in FRAME_LABELS.iter() {
                let mut p = prefix.clone();
                p.push(l);
                next.push(p);
            }
        }
        stack = next;
    }
    for labels in stack {
        let mut s = StateVector::frame_state(labels[0]);
        for &l in &labels[1..] {
            s = s.tensor(&StateVector::frame_state(l)).unwrap();
        }
        inputs.push(s);
    }
    use rand::SeedableRng;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(0x6ad6e7);
    for _ in 0..extra_random {
        inputs.push(crate::dense::random_pure_state(data_qubits, &mut rng));
    }
    inputs
}

/// Verify a gadget against the dense oracle. For reusable gadgets checks
/// the induced unitary, ancilla restoration, and leakage over the full
/// frame design plus `extra_random` random inputs; for consumable gadgets
/// checks the branch-summed channel and every measurement branch.
pub fn verify_gadget(def: &GadgetDef, extra_random: usize) -> Result<GadgetReport> {
    def.validate()?;
    let d = def.data_qubits();
    let q = def.ancilla_qubits;
    if d + q > MAX_DENSITY_QUBITS {
        return Err(Error::TooLarge(format!("gadget needs {} qubits; oracle cap is {MAX_DENSITY_QUBITS}", d + q)));
    }
    let data: Vec<usize> = (0..d).collect();
    let anc: Vec<usize> = (d..d + q).collect();
    let env = vec![(anc.clone(), def.ancilla_state.env_init())];

    // Branch-summed induced channel.
    let channel = channel_of_circuit(&def.body, &data, &env, None, None)?;
    let channel_fidelity = channel.process_fidelity(&def.claimed_unitary);

    let mut branch_fidelities = Vec::new();
    let mut unitary_match = channel_fidelity;
    let body_bits: Vec<usize> = def
        .body
        .instructions
        .iter()
        .filter_map(|i| match i {
            Instruction::MeasureZ { bit, .. } => Some(*bit),
            _ => None,
        })
        .collect();
    if body_bits.is_empty() {
        branch_fidelities.push(channel_fidelity);
    } else {
        for assignment in 0..(1usize << body_bits.len()) {
            let forced: BTreeMap<usize, bool> =
                body_bits.iter().enumerate().map(|(k, &b)| (b, assignment >> k & 1 == 1)).collect();
            let branch = channel_of_circuit(&def.body, &data, &env, None, Some(&forced))?;
            if branch.trace() < 1e-9 {
                continue; // zero-probability branch
            }
            let f = branch.process_fidelity(&def.claimed_unitary);
            branch_fidelities.push(f);
            unitary_match = unitary_match.min(f);
        }
    }

    // Reusable gadgets: restoration and leakage over the input design.
    let (ancilla_restored, leakage) = if def.reusable {
        let mut worst_restored = f64::INFINITY;
        let mut worst_leak: f64 = 0.0;
        let anc_state = match &def.ancilla_state {
            AncillaState::Pure(s) => s.clone(),
            AncillaState::Mixed(_) => {
                return Err(Error::InvalidGadget(
                    "reusable verification requires a pure ancilla state".into(),
                ))
            }
        };
        for input in input_design(d, extra_random) {
            let joint = input.tensor(&anc_state)?;
            let (out, _, _) = simulate_pure_forced(&def.body, &joint, None, &BTreeMap::new())?;
            let rho_anc = out.density().partial_trace(&anc);
            worst_restored = worst_restored.min(rho_anc.fidelity_pure(&anc_state));
            worst_leak = worst_leak.max(1.0 - rho_anc.largest_eigenvalue());
        }
        (Some(worst_restored), Some(worst_leak))
    } else {
        (None, None)
    };

    let body_contains_claimed_kind = def.body_contains_claimed_kind();
    let pass = unitary_match >= 1.0 - FIDELITY_PASS
        && ancilla_restored.map_or(true, |f| f >= 1.0 - FIDELITY_PASS)
        && leakage.map_or(true, |l| l <= LEAKAGE_PASS);
    Ok(GadgetReport {
        name: def.name.clone(),
        reusable: def.reusable,
        unitary_match,
        branch_fidelities,
        ancilla_restored,
        leakage,
        body_contains_claimed_kind,
        pass,
    })
}

// ---------------------------------------------------------------------------
// JSON gadget files.
// ---------------------------------------------------------------------------

type ComplexPair = (f64, f64);

#[derive(Serialize, Deserialize)]
struct GadgetFile {
    name: String,
    ancilla_qubits: usize,
    /// Vector `[[re,im],…]` for a pure ancilla, or a square matrix of the
    /// same pairs for a mixed one.
    ancilla_state: serde_json::Value,
    /// Body in the circuit text grammar.
    body: String,
    claimed_unitary: Vec<Vec<ComplexPair>>,
    reusable: bool,
}

/// Parse a state file: a JSON array of `[re, im]` pairs is a pure state,
/// a square array of such rows is a density matrix.
pub fn state_from_json(text: &str) -> Result<AncillaState> {
    let value: serde_json::Value = serde_json::from_str(text)?;
    if let Some(vector) = parse_complex_vector(&value) {
        let n = vector.len();
        if !n.is_power_of_two() || n < 2 {
            return Err(Error::InvalidState(format!("state vector length {n} is not a power of two")));
        }
        return Ok(AncillaState::Pure(StateVector::new(n.trailing_zeros() as usize, vector)?));
    }
    if let Some(rows) = value.as_array() {
        let rows: Option<Vec<Vec<Complex64>>> = rows.iter().map(parse_complex_vector).collect();
        if let Some(rows) = rows {
            let n = rows.len();
            if !n.is_power_of_two() || n < 2 {
                return Err(Error::InvalidState(format!("matrix dimension {n} is not a power of two")));
            }
            let m = matrix_from_rows(rows)?;
            return Ok(AncillaState::Mixed(DensityMatrix::new(n.trailing_zeros() as usize, m)?));
        }
    }
    Err(Error::InvalidState("expected a JSON complex vector or square matrix".into()))
}

fn parse_complex_vector(v: &serde_json::Value) -> Option<Vec<Complex64>> {
    let arr = v.as_array()?;
    let mut out = Vec::with_capacity(arr.len());
    for pair in arr {
        let p = pair.as_array()?;
        if p.len() != 2 {
            return None;
        }
        out.push(Complex64::new(p[0].as_f64()?, p[1].as_f64()?));
    }
    Some(out)
}

fn matrix_from_rows(rows: Vec<Vec<Complex64>>) -> Result<Array2<Complex64>> {
    let n = rows.len();
    let mut m = Array2::zeros((n, n));
    for (i, row) in rows.iter().enumerate() {
        if row.len() != n {
            return Err(Error::InvalidGadget("matrix is not square".into()));
        }
        for (j, &v) in row.iter().enumerate() {
            m[(i, j)] = v;
        }
    }
    Ok(m)
}

impl GadgetDef {
    /// Load a user gadget from its JSON description.
    pub fn from_json(text: &str) -> Result<GadgetDef> {
        let file: GadgetFile = serde_json::from_str(text)?;
        let body = Circuit::parse(&file.body)?;
        let ancilla_state = if let Some(vector) = parse_complex_vector(&file.ancilla_state) {
            let q = file.ancilla_qubits;
            AncillaState::Pure(StateVector::new(q, vector)?)
        } else if let Some(rows) = file.ancilla_state.as_array() {
            let rows: Option<Vec<Vec<Complex64>>> = rows.iter().map(parse_complex_vector).collect();
            let rows = rows.ok_or_else(|| Error::InvalidGadget("bad ancilla_state matrix".into()))?;
            AncillaState::Mixed(DensityMatrix::new(file.ancilla_qubits, matrix_from_rows(rows)?)?)
        } else {
            return Err(Error::InvalidGadget("ancilla_state must be a vector or matrix".into()));
        };
        let claimed_rows: Vec<Vec<Complex64>> = file
            .claimed_unitary
            .iter()
            .map(|row| row.iter().map(|&(re, im)| Complex64::new(re, im)).collect())
            .collect();
        let def = GadgetDef {
            name: file.name,
            ancilla_qubits: file.ancilla_qubits,
            ancilla_state,
            body,
            claimed_unitary: matrix_from_rows(claimed_rows)?,
            reusable: file.reusable,
        };
        def.validate()?;
        Ok(def)
    }

    /// Serialize to the JSON gadget file format.
    pub fn to_json(&self) -> Result<String> {
        let ancilla_state = match &self.ancilla_state {
            AncillaState::Pure(s) => serde_json::to_value(
                s.amplitudes().iter().map(|a| (a.re, a.im)).collect::<Vec<_>>(),
            )?,
            AncillaState::Mixed(m) => {
                let dim = m.dim();
                let rows: Vec<Vec<ComplexPair>> = (0..dim)
                    .map(|i| (0..dim).map(|j| (m.entries()[(i, j)].re, m.entries()[(i, j)].im)).collect())
                    .collect();
                serde_json::to_value(rows)?
            }
        };
        let d = 1usize << self.data_qubits();
        let claimed: Vec<Vec<ComplexPair>> = (0..d)
            .map(|i| (0..d).map(|j| (self.claimed_unitary[(i, j)].re, self.claimed_unitary[(i, j)].im)).collect())
            .collect();
        let file = GadgetFile {
            name: self.name.clone(),
            ancilla_qubits: self.ancilla_qubits,
            ancilla_state,
            body: self.body.render(),
            claimed_unitary: claimed,
            reusable: self.reusable,
        };
        Ok(serde_json::to_string_pretty(&file)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtin_claimed_unitaries() {
        let s = builtin("S_reusable").unwrap();
        assert_eq!(s.claimed_unitary[(0, 0)], c(1., 0.));
        assert_eq!(s.claimed_unitary[(1, 1)], c(0., 1.));
        assert!(s.reusable);

        let t = builtin("T_inject").unwrap();
        let e = Complex64::from_polar(1.0, std::f64::consts::FRAC_PI_4);
        assert!((t.claimed_unitary[(1, 1)] - e).norm() < 1e-15);
        assert!(!t.reusable);

        let sx = builtin("SqrtX_reusable").unwrap();
        // H·S·H entrywise.
        let h = gate_matrix(&CliffordGate::H(0));
        let hsh = h.dot(&s_matrix()).dot(&h);
        for i in 0..2 {
            for j in 0..2 {
                assert!((sx.claimed_unitary[(i, j)] - hsh[(i, j)]).norm() < 1e-12);
            }
        }

        assert!(builtin("nope").is_err());
    }

    #[test]
    fn sqrt_y_squares_to_y() {
        let sy = sqrt_y_matrix();
        let y = gate_matrix(&CliffordGate::Y(0));
        let sq = sy.dot(&sy);
        for i in 0..2 {
            for j in 0..2 {
                assert!((sq[(i, j)] - y[(i, j)]).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn builtin_bodies_validate() {
        for name in BUILTIN_NAMES {
            let def = builtin(name).unwrap();
            def.validate().unwrap();
            assert!(!def.body_contains_claimed_kind(), "{name} body reuses its own gate");
        }
    }

    #[test]
    fn self_referential_body_is_flagged() {
        // An "S gadget" whose body just applies S on the data qubit.
        let mut body = Circuit::new(2);
        body.push_gate(CliffordGate::S(0));
        let def = GadgetDef {
            name: "S_cheat".into(),
            ancilla_qubits: 1,
            ancilla_state: AncillaState::Pure(plus_i_state()),
            body,
            claimed_unitary: s_matrix(),
            reusable: true,
        };
        assert!(def.body_contains_claimed_kind());
        // Such a gadget is otherwise perfectly valid and verifies clean.
        let report = verify_gadget(&def, 10).unwrap();
        assert!(report.pass);
        assert!(report.body_contains_claimed_kind);
    }

    #[test]
    fn verify_reusable_s() {
        let report = verify_gadget(&builtin("S_reusable").unwrap(), 100).unwrap();
        assert!(report.unitary_match >= 1.0 - 1e-12, "{report:?}");
        assert!(report.ancilla_restored.unwrap() >= 1.0 - 1e-12);
        assert!(report.leakage.unwrap() <= 1e-12);
        assert!(report.pass);
    }

    #[test]
    fn verify_t_injection_branches() {
        let report = verify_gadget(&builtin("T_inject").unwrap(), 20).unwrap();
        assert_eq!(report.branch_fidelities.len(), 2);
        for f in &report.branch_fidelities {
            assert!(*f >= 1.0 - 1e-12, "{report:?}");
        }
        assert!(report.pass);
        assert!(report.ancilla_restored.is_none());
        assert!(report.leakage.is_none());
    }

    #[test]
    fn corrupted_ancilla_leaks() {
        let mut def = builtin("S_reusable").unwrap();
        def.ancilla_state = AncillaState::Pure(StateVector::frame_state(FrameLabel::XPlus));
        let report = verify_gadget(&def, 10).unwrap();
        assert!(report.leakage.unwrap() > 0.01, "{report:?}");
        assert!(!report.pass);
    }

    #[test]
    fn composed_sqrt_y_verifies() {
        let report = verify_gadget(&builtin("SqrtY_reusable").unwrap(), 50).unwrap();
        assert!(report.unitary_match >= 1.0 - 1e-12, "{report:?}");
        assert!(report.ancilla_restored.unwrap() >= 1.0 - 1e-12);
        assert!(report.leakage.unwrap() <= 1e-12);
        assert!(report.pass);
    }

    #[test]
    fn expansion_shares_reusable_register() {
        let mut c = Circuit::new(2);
        c.push_non_clifford("S_reusable", &[0]);
        c.push_non_clifford("S_reusable", &[1]);
        c.push_non_clifford("S_reusable", &[0]);
        let (expanded, map) = expand_gadgets(&c, &GadgetLibrary::standard()).unwrap();
        assert_eq!(expanded.num_qubits, 3);
        assert_eq!(map.allocations.len(), 1);
        assert_eq!(map.allocations[0].qubits, vec![2]);
        assert!(!expanded.has_non_clifford());
        // Three inlined bodies of four gates each.
        assert_eq!(expanded.instructions.len(), 12);
    }

    #[test]
    fn expansion_gives_each_t_its_own_ancilla() {
        let c = Circuit::parse("qubits 1\nT 0\nT 0\n").unwrap();
        let (expanded, map) = expand_gadgets(&c, &GadgetLibrary::standard()).unwrap();
        assert_eq!(expanded.num_qubits, 3);
        assert_eq!(map.allocations.len(), 2);
        assert_eq!(expanded.num_classical_bits, 2);
        assert!(!expanded.has_non_clifford());
        let measures = expanded.measurement_count();
        assert_eq!(measures, 2);
    }

    #[test]
    fn expansion_of_clifford_circuit_is_identity() {
        let c = Circuit::parse("qubits 2\nH 0\nCNOT 0 1\nM 0 -> c0\n").unwrap();
        let (expanded, map) = expand_gadgets(&c, &GadgetLibrary::standard()).unwrap();
        assert_eq!(expanded, c);
        assert!(map.allocations.is_empty());
    }

    #[test]
    fn expansion_unknown_gadget_errors() {
        let mut c = Circuit::new(1);
        c.push_non_clifford("CCZ", &[0]);
        assert!(matches!(
            expand_gadgets(&c, &GadgetLibrary::standard()),
            Err(Error::UnknownGadget(_))
        ));
    }

    #[test]
    fn gadget_json_roundtrip() {
        let def = builtin("T_inject").unwrap();
        let text = def.to_json().unwrap();
        let back = GadgetDef::from_json(&text).unwrap();
        assert_eq!(back.name, def.name);
        assert_eq!(back.body, def.body);
        assert_eq!(back.reusable, def.reusable);
        let report = verify_gadget(&back, 5).unwrap();
        assert!(report.pass);
    }
}
