//! Exhaustive search for reusable magic-state gadgets: enumerate the
//! Clifford group on 1–2 qubits, and for each element solve for ancilla
//! states |M⟩ making A_M = (⟨M|⊗I)·C·(|M⟩⊗I) unitary, reporting the
//! induced unitary and whether it is Clifford.
//!
//! Group elements are represented by the signed images of the Pauli
//! generators (X_i, Z_i) under conjugation, which determines the unitary
//! up to global phase. Element layout in solver runs: data qubits first,
//! ancilla after.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use ndarray::Array2;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::circuit::Circuit;
use crate::dense::unitary_of_circuit;
use crate::error::{Error, Result};
use crate::gadget::phase_invariant_overlap;
use crate::pauli::{CliffordGate, GateKind, Pauli, PauliString};

/// Residual ‖A†A − I‖_F at or below this is a solution.
pub const SOLUTION_RESIDUAL: f64 = 1e-8;
/// Residuals in (SOLUTION_RESIDUAL, INCONCLUSIVE_RESIDUAL] are reported as
/// inconclusive rather than silently dropped.
pub const INCONCLUSIVE_RESIDUAL: f64 = 1e-6;
/// Solutions closer than this (Euclidean distance between Bloch vectors /
/// state overlaps) are duplicates.
pub const DEDUP_DISTANCE: f64 = 1e-6;
/// More distinct solutions than this means a continuous family.
pub const FAMILY_THRESHOLD: usize = 16;

/// A Clifford group element modulo global phase.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CliffordElement {
    num_qubits: usize,
    /// Images of X_0, Z_0, X_1, Z_1, … with signs (phase ∈ {0,2}).
    images: Vec<PauliString>,
    /// Gate sequence realizing the element (applied in order).
    witness: Vec<CliffordGate>,
    /// Rank of the image tuple in the sorted enumeration; assigned by
    /// `enumerate_group`.
    canonical_id: usize,
}

impl CliffordElement {
    pub fn identity(n: usize) -> Self {
        let mut images = Vec::with_capacity(2 * n);
        for q in 0..n {
            images.push(PauliString::single(n, q, Pauli::X));
            images.push(PauliString::single(n, q, Pauli::Z));
        }
        CliffordElement { num_qubits: n, images, witness: Vec::new(), canonical_id: 0 }
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn canonical_id(&self) -> usize {
        self.canonical_id
    }

    pub fn witness(&self) -> &[CliffordGate] {
        &self.witness
    }

    pub fn image_of_x(&self, qubit: usize) -> &PauliString {
        &self.images[2 * qubit]
    }

    pub fn image_of_z(&self, qubit: usize) -> &PauliString {
        &self.images[2 * qubit + 1]
    }

    /// Deterministic encoding of the image tuple: bit-packed (x, z, sign)
    /// per image, lexicographic over images.
    pub fn key(&self) -> Vec<u64> {
        let n = self.num_qubits;
        self.images
            .iter()
            .map(|img| {
                let mut k: u64 = u64::from(img.phase_exponent() == 2);
                for q in (0..n).rev() {
                    k = k << 2 | u64::from(img.z_bit(q)) << 1 | u64::from(img.x_bit(q));
                }
                k
            })
            .collect()
    }

    /// Left-multiply by a generator: the element realizing "self, then g".
    fn then(&self, g: &CliffordGate) -> Result<CliffordElement> {
        let mut images = self.images.clone();
        for img in &mut images {
            img.conjugate_by_gate(g)?;
        }
        let mut witness = self.witness.clone();
        witness.push(*g);
        Ok(CliffordElement { num_qubits: self.num_qubits, images, witness, canonical_id: 0 })
    }

    /// Image of an arbitrary Pauli string, with exact phase.
    pub fn apply_to_pauli(&self, p: &PauliString) -> Result<PauliString> {
        if p.num_qubits() != self.num_qubits {
            return Err(Error::DimensionMismatch(p.num_qubits(), self.num_qubits));
        }
        // P = i^k · Π_q X_q^{x_q} Z_q^{z_q} with k absorbing the Y factors;
        // the image multiplies the generator images in the same order.
        let mut out = PauliString::identity(self.num_qubits);
        let mut phase = p.phase_exponent();
        for q in 0..self.num_qubits {
            let (x, z) = (p.x_bit(q), p.z_bit(q));
            if x && z {
                phase = (phase + 1) & 3; // Y_q = i·X_q·Z_q
            }
            if x {
                out.mul_assign(&self.images[2 * q]);
            }
            if z {
                out.mul_assign(&self.images[2 * q + 1]);
            }
        }
        out.set_phase_exponent((out.phase_exponent() + phase) & 3);
        Ok(out)
    }

    /// Composite "other first, then self".
    pub fn compose(&self, other: &CliffordElement) -> Result<CliffordElement> {
        if self.num_qubits != other.num_qubits {
            return Err(Error::DimensionMismatch(self.num_qubits, other.num_qubits));
        }
        let images = other
            .images
            .iter()
            .map(|img| self.apply_to_pauli(img))
            .collect::<Result<Vec<_>>>()?;
        let mut witness = other.witness.clone();
        witness.extend_from_slice(&self.witness);
        Ok(CliffordElement { num_qubits: self.num_qubits, images, witness, canonical_id: 0 })
    }

    /// Element built from an explicit gate sequence.
    pub fn from_gates(n: usize, gates: &[CliffordGate]) -> Result<CliffordElement> {
        let mut e = CliffordElement::identity(n);
        for g in gates {
            e = e.then(g)?;
        }
        Ok(e)
    }

    /// Witness circuit as a [`Circuit`] over `num_qubits`.
    pub fn witness_circuit(&self) -> Circuit {
        let mut c = Circuit::new(self.num_qubits);
        for g in &self.witness {
            c.push_gate(*g);
        }
        c
    }

    /// Dense unitary of the witness circuit.
    pub fn unitary(&self) -> Result<Array2<Complex64>> {
        unitary_of_circuit(&self.witness_circuit(), None)
    }

    /// Check that the images form a valid symplectic map with signs.
    pub fn validate(&self) -> Result<()> {
        let n = self.num_qubits;
        for i in 0..2 * n {
            if self.images[i].phase_exponent() % 2 != 0 {
                return Err(Error::InvalidState("image of a Hermitian Pauli must be Hermitian".into()));
            }
            for j in (i + 1)..2 * n {
                // X_q anticommutes only with Z_q: pairs (2q, 2q+1).
                let anticommute = self.images[i].symplectic_product(&self.images[j]) == 1;
                let paired = j == i + 1 && i % 2 == 0;
                if anticommute != paired {
                    return Err(Error::InvalidState(format!("images {i},{j} break commutation relations")));
                }
            }
        }
        Ok(())
    }
}

/// |C_n| modulo global phase: 2^{n²+2n}·Π_{j=1..n}(4^j − 1).
pub fn group_order(n: usize) -> u64 {
    let mut order = 1u64 << (n * n + 2 * n);
    for j in 1..=n {
        order *= (1u64 << (2 * j)) - 1;
    }
    order
}

fn generators(n: usize) -> Vec<CliffordGate> {
    let mut gens = Vec::new();
    for q in 0..n {
        gens.push(CliffordGate::H(q));
        gens.push(CliffordGate::S(q));
    }
    for a in 0..n {
        for b in 0..n {
            if a != b {
                gens.push(CliffordGate::Cnot(a, b));
            }
        }
    }
    gens
}

/// Breadth-first closure of the Clifford group on `n ∈ {1, 2}` qubits over
/// {H_i, S_i, CNOT_ij}, with canonical ids assigned by sorted image tuples.
/// Witness circuits are BFS-shortest in generator count.
pub fn enumerate_group(n: usize) -> Result<Vec<CliffordElement>> {
    if !(1..=2).contains(&n) {
        return Err(Error::TooLarge(format!("group enumeration supports 1 or 2 qubits, got {n}")));
    }
    let gens = generators(n);
    let mut seen: BTreeMap<Vec<u64>, usize> = BTreeMap::new();
    let mut elements: Vec<CliffordElement> = Vec::new();
    let identity = CliffordElement::identity(n);
    seen.insert(identity.key(), 0);
    elements.push(identity);
    let mut frontier = vec![0usize];
    while !frontier.is_empty() {
        let mut next = Vec::new();
        for &idx in &frontier {
            for g in &gens {
                let candidate = elements[idx].then(g)?;
                let key = candidate.key();
                if !seen.contains_key(&key) {
                    seen.insert(key, elements.len());
                    next.push(elements.len());
                    elements.push(candidate);
                }
            }
        }
        frontier = next;
    }
    debug_assert_eq!(elements.len() as u64, group_order(n));
    // Canonical ids: rank in key order, independent of BFS details.
    let mut keys: Vec<(Vec<u64>, usize)> = elements.iter().enumerate().map(|(i, e)| (e.key(), i)).collect();
    keys.sort();
    let mut sorted = Vec::with_capacity(elements.len());
    for (rank, (_, idx)) in keys.into_iter().enumerate() {
        let mut e = elements[idx].clone();
        e.canonical_id = rank;
        sorted.push(e);
    }
    Ok(sorted)
}

// ---------------------------------------------------------------------------
// Enumeration cache file.
// ---------------------------------------------------------------------------

#[derive(Serialize, Deserialize)]
struct CacheFile {
    num_qubits: usize,
    elements: Vec<CacheElement>,
}

#[derive(Serialize, Deserialize)]
struct CacheElement {
    id: usize,
    images: Vec<String>,
    witness: Vec<String>,
}

/// Serialize an enumeration to the JSON cache format (keyed by canonical
/// id).
pub fn cache_to_json(elements: &[CliffordElement]) -> Result<String> {
    let n = elements.first().map(|e| e.num_qubits).unwrap_or(0);
    let file = CacheFile {
        num_qubits: n,
        elements: elements
            .iter()
            .map(|e| CacheElement {
                id: e.canonical_id,
                images: e.images.iter().map(|p| p.to_string()).collect(),
                witness: e.witness.iter().map(|g| g.to_string()).collect(),
            })
            .collect(),
    };
    Ok(serde_json::to_string(&file)?)
}

/// Load an enumeration cache produced by [`cache_to_json`].
pub fn cache_from_json(text: &str) -> Result<Vec<CliffordElement>> {
    let file: CacheFile = serde_json::from_str(text)?;
    let n = file.num_qubits;
    let mut out = Vec::with_capacity(file.elements.len());
    for ce in file.elements {
        let images = ce
            .images
            .iter()
            .map(|s| s.parse::<PauliString>())
            .collect::<Result<Vec<_>>>()?;
        let mut witness = Vec::with_capacity(ce.witness.len());
        for w in &ce.witness {
            let toks: Vec<&str> = w.split_whitespace().collect();
            let kind = GateKind::from_mnemonic(toks[0])
                .ok_or_else(|| Error::Parse { line: 0, msg: format!("bad gate `{w}` in cache") })?;
            let targets: Vec<usize> = toks[1..]
                .iter()
                .map(|t| t.parse::<usize>().map_err(|_| Error::Parse { line: 0, msg: format!("bad target in `{w}`") }))
                .collect::<Result<Vec<_>>>()?;
            witness.push(CliffordGate::new(kind, &targets)?);
        }
        let e = CliffordElement { num_qubits: n, images, witness, canonical_id: ce.id };
        e.validate()?;
        out.push(e);
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// The reusable-gadget solver.
// ---------------------------------------------------------------------------

/// One reported ancilla solution.
#[derive(Debug, Clone, Serialize)]
pub struct Solution {
    /// Ancilla amplitudes (re, im), global phase fixed.
    pub ancilla: Vec<(f64, f64)>,
    /// Induced unitary on the data qubits, row-major (re, im).
    pub unitary: Vec<Vec<(f64, f64)>>,
    pub residual: f64,
    pub classification: Classification,
    /// Sampled representative of a continuous family.
    pub family_member: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Classification {
    Clifford,
    NonClifford,
}

/// Search outcome for one group element.
#[derive(Debug, Clone, Serialize)]
pub struct SearchResult {
    pub clifford_id: usize,
    pub data_qubits: usize,
    pub ancilla_qubits: usize,
    pub solutions: Vec<Solution>,
    pub family: bool,
    /// Residuals that refined into the ambiguous zone; nonempty means the
    /// element needs a closer look.
    pub inconclusive: Vec<f64>,
}

struct Objective {
    /// A_M = Σ_k coeff_k(M)·blocks[k]; see `blocks_for`.
    blocks: Vec<Array2<Complex64>>,
    data_dim: usize,
    anc_dim: usize,
}

/// Extract U_block[a][b][s,t] = U[s + D·a, t + D·b].
fn blocks_for(u: &Array2<Complex64>, data_dim: usize, anc_dim: usize) -> Vec<Array2<Complex64>> {
    let mut blocks = Vec::with_capacity(anc_dim * anc_dim);
    for a in 0..anc_dim {
        for b in 0..anc_dim {
            let mut m = Array2::zeros((data_dim, data_dim));
            for s in 0..data_dim {
                for t in 0..data_dim {
                    m[(s, t)] = u[(s + data_dim * a, t + data_dim * b)];
                }
            }
            blocks.push(m);
        }
    }
    blocks
}

impl Objective {
    fn new(u: &Array2<Complex64>, data_qubits: usize, ancilla_qubits: usize) -> Self {
        let data_dim = 1usize << data_qubits;
        let anc_dim = 1usize << ancilla_qubits;
        Objective { blocks: blocks_for(u, data_dim, anc_dim), data_dim, anc_dim }
    }

    /// A_M for normalized ancilla amplitudes.
    fn contracted(&self, m: &[Complex64]) -> Array2<Complex64> {
        let d = self.data_dim;
        let mut a: Array2<Complex64> = Array2::zeros((d, d));
        for (ai, &ma) in m.iter().enumerate() {
            for (bi, &mb) in m.iter().enumerate() {
                let w = ma.conj() * mb;
                if w.norm_sqr() < 1e-30 {
                    continue;
                }
                let block = &self.blocks[ai * self.anc_dim + bi];
                for s in 0..d {
                    for t in 0..d {
                        a[(s, t)] += w * block[(s, t)];
                    }
                }
            }
        }
        a
    }

    /// f(M) = ‖A†A − I‖_F.
    fn residual(&self, m: &[Complex64]) -> f64 {
        let a = self.contracted(m);
        let d = self.data_dim;
        let mut acc = 0.0;
        for i in 0..d {
            for j in 0..d {
                let mut e = if i == j { -Complex64::new(1.0, 0.0) } else { Complex64::new(0.0, 0.0) };
                for k in 0..d {
                    e += a[(k, i)].conj() * a[(k, j)];
                }
                acc += e.norm_sqr();
            }
        }
        acc.sqrt()
    }
}

fn bloch_to_amplitudes(theta: f64, phi: f64) -> [Complex64; 2] {
    [
        Complex64::new((theta / 2.0).cos(), 0.0),
        Complex64::from_polar((theta / 2.0).sin(), phi),
    ]
}

/// Minimize `f` over R^k with Nelder–Mead. Returns the best point found.
fn nelder_mead(f: &dyn Fn(&[f64]) -> f64, start: &[f64], scale: f64, iterations: usize) -> Vec<f64> {
    let k = start.len();
    let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(k + 1);
    simplex.push((start.to_vec(), f(start)));
    for i in 0..k {
        let mut p = start.to_vec();
        p[i] += scale;
        let v = f(&p);
        simplex.push((p, v));
    }
    for _ in 0..iterations {
        simplex.sort_by(|a, b| a.1.partial_cmp(&b.1).unwrap());
        let best = simplex[0].1;
        let worst = simplex[k].1;
        if (worst - best).abs() < 1e-16 && best < 1e-14 {
            break;
        }
        let centroid: Vec<f64> = (0..k)
            .map(|i| simplex[..k].iter().map(|(p, _)| p[i]).sum::<f64>() / k as f64)
            .collect();
        let reflect: Vec<f64> = (0..k).map(|i| 2.0 * centroid[i] - simplex[k].0[i]).collect();
        let fr = f(&reflect);
        if fr < simplex[0].1 {
            let expand: Vec<f64> = (0..k).map(|i| 3.0 * centroid[i] - 2.0 * simplex[k].0[i]).collect();
            let fe = f(&expand);
            simplex[k] = if fe < fr { (expand, fe) } else { (reflect, fr) };
        } else if fr < simplex[k - 1].1 {
            simplex[k] = (reflect, fr);
        } else {
            let contract: Vec<f64> = (0..k).map(|i| 0.5 * (centroid[i] + simplex[k].0[i])).collect();
            let fc = f(&contract);
            if fc < simplex[k].1 {
                simplex[k] = (contract, fc);
            } else {
                let best_point = simplex[0].0.clone();
                for entry in simplex.iter_mut().skip(1) {
                    let shrunk: Vec<f64> =
                        (0..k).map(|i| 0.5 * (best_point[i] + entry.0[i])).collect();
                    let fv = f(&shrunk);
                    *entry = (shrunk, fv);
                }
            }
        }
    }
    simplex.sort_by(|a, b| a.1.partial_cmp(&b.1).unwrap());
    simplex.remove(0).0
}

/// Fix the global phase: rotate so the largest-magnitude amplitude is
/// real positive.
fn fix_phase(amps: &mut [Complex64]) {
    let mut best = 0usize;
    for (i, a) in amps.iter().enumerate() {
        if a.norm_sqr() > amps[best].norm_sqr() {
            best = i;
        }
    }
    let phase = amps[best] / amps[best].norm();
    for a in amps.iter_mut() {
        *a /= phase;
    }
}

fn state_distance(a: &[Complex64], b: &[Complex64]) -> f64 {
    // 1 − |⟨a|b⟩|² — phase-invariant, ~squared Bloch distance/4 for qubits.
    let ip: Complex64 = a.iter().zip(b).map(|(x, y)| x.conj() * y).sum();
    (1.0 - ip.norm_sqr()).max(0.0)
}

/// Is `u` Clifford? Checks that conjugated X_i, Z_i land on phased Paulis.
pub fn classify_unitary(u: &Array2<Complex64>, data_qubits: usize) -> Classification {
    let d = 1usize << data_qubits;
    let udag = u.t().mapv(|v| v.conj());
    for q in 0..data_qubits {
        for p in [Pauli::X, Pauli::Z] {
            let pm = crate::dense::pauli_matrix(&PauliString::single(data_qubits, q, p));
            let image = u.dot(&pm).dot(&udag);
            // Max overlap with a phase-free Pauli string.
            let mut best = 0.0f64;
            for code in 0..(1usize << (2 * data_qubits)) {
                let mut cand = PauliString::identity(data_qubits);
                for qq in 0..data_qubits {
                    cand.set_pauli(
                        qq,
                        match code >> (2 * qq) & 3 {
                            0 => Pauli::I,
                            1 => Pauli::X,
                            2 => Pauli::Y,
                            _ => Pauli::Z,
                        },
                    );
                }
                let cm = crate::dense::pauli_matrix(&cand);
                let mut tr = Complex64::new(0.0, 0.0);
                for i in 0..d {
                    for j in 0..d {
                        tr += cm[(j, i)].conj() * image[(j, i)];
                    }
                }
                best = best.max(tr.norm() / d as f64);
            }
            if best < 1.0 - 1e-8 {
                return Classification::NonClifford;
            }
        }
    }
    Classification::Clifford
}

/// Find all |M⟩ making A_M unitary for this element, with the layout
/// data qubits = 0..d, ancilla = d..d+q. For q = 1 the Bloch sphere is
/// grid-seeded exhaustively; for q ≥ 2 seeding is random multi-start
/// (sampling, not enumeration). q = 0 degenerates to A = C itself.
pub fn solve_reusable(
    element: &CliffordElement,
    data_qubits: usize,
    ancilla_qubits: usize,
) -> Result<SearchResult> {
    if data_qubits + ancilla_qubits != element.num_qubits {
        return Err(Error::DimensionMismatch(data_qubits + ancilla_qubits, element.num_qubits));
    }
    let u = element.unitary()?;
    let mut result = SearchResult {
        clifford_id: element.canonical_id,
        data_qubits,
        ancilla_qubits,
        solutions: Vec::new(),
        family: false,
        inconclusive: Vec::new(),
    };

    if ancilla_qubits == 0 {
        // The body is the gate: no contraction, residual exactly 0.
        result.solutions.push(Solution {
            ancilla: Vec::new(),
            unitary: matrix_pairs(&u),
            residual: 0.0,
            classification: classify_unitary(&u, data_qubits),
            family_member: false,
        });
        return Ok(result);
    }

    let objective = Objective::new(&u, data_qubits, ancilla_qubits);
    let anc_dim = 1usize << ancilla_qubits;

    // Seed points.
    let mut seeds: Vec<Vec<Complex64>> = Vec::new();
    if ancilla_qubits == 1 {
        let steps_theta = 24;
        let steps_phi = 48;
        for it in 0..=steps_theta {
            let theta = std::f64::consts::PI * it as f64 / steps_theta as f64;
            let phis = if it == 0 || it == steps_theta { 1 } else { steps_phi };
            for ip in 0..phis {
                let phi = 2.0 * std::f64::consts::PI * ip as f64 / steps_phi as f64;
                seeds.push(bloch_to_amplitudes(theta, phi).to_vec());
            }
        }
    } else {
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(0x5eed + element.canonical_id as u64);
        for _ in 0..192 {
            let s = crate::dense::random_pure_state(ancilla_qubits, &mut rng);
            seeds.push(s.amplitudes().to_vec());
        }
    }

    // Refine every seed whose coarse residual is promising.
    let coarse_cut = 0.5;
    let mut found: Vec<(Vec<Complex64>, f64)> = Vec::new();
    let mut inconclusive: Vec<f64> = Vec::new();
    for seed in &seeds {
        if objective.residual(seed) > coarse_cut {
            continue;
        }
        let refined = refine(&objective, seed, anc_dim);
        let res = objective.residual(&refined);
        if res <= SOLUTION_RESIDUAL {
            if !found.iter().any(|(m, _)| state_distance(m, &refined) <= DEDUP_DISTANCE) {
                found.push((refined, res));
            }
        } else if res <= INCONCLUSIVE_RESIDUAL {
            inconclusive.push(res);
        }
    }

    result.family = found.len() > FAMILY_THRESHOLD;
    let keep = if result.family { 8 } else { found.len() };
    for (mut amps, res) in found.into_iter().take(keep) {
        fix_phase(&mut amps);
        let a = objective.contracted(&amps);
        result.solutions.push(Solution {
            ancilla: amps.iter().map(|c| (c.re, c.im)).collect(),
            unitary: matrix_pairs(&a),
            residual: res,
            classification: classify_unitary(&a, data_qubits),
            family_member: result.family,
        });
    }
    result.inconclusive = inconclusive;
    Ok(result)
}

fn matrix_pairs(m: &Array2<Complex64>) -> Vec<Vec<(f64, f64)>> {
    let (r, c) = m.dim();
    (0..r).map(|i| (0..c).map(|j| (m[(i, j)].re, m[(i, j)].im)).collect()).collect()
}

/// Local refinement: Nelder–Mead over a real parametrization of the
/// ancilla state, re-centered a few times.
fn refine(objective: &Objective, seed: &[Complex64], anc_dim: usize) -> Vec<Complex64> {
    let to_amps = |params: &[f64]| -> Vec<Complex64> {
        let mut amps: Vec<Complex64> =
            (0..anc_dim).map(|i| Complex64::new(params[2 * i], params[2 * i + 1])).collect();
        let norm: f64 = amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        if norm < 1e-12 {
            amps[0] = Complex64::new(1.0, 0.0);
        } else {
            for a in &mut amps {
                *a /= norm;
            }
        }
        amps
    };
    let f = |params: &[f64]| objective.residual(&to_amps(params));

    let mut params: Vec<f64> = seed.iter().flat_map(|c| [c.re, c.im]).collect();
    let mut scale = 0.12;
    for _round in 0..4 {
        params = nelder_mead(&f, &params, scale, 220);
        scale *= 0.01;
    }
    to_amps(&params)
}

// ---------------------------------------------------------------------------
// Survey.
// ---------------------------------------------------------------------------

/// Aggregate report over the whole group.
#[derive(Debug, Clone, Serialize)]
pub struct SurveyReport {
    pub body_qubits: usize,
    pub data_qubits: usize,
    pub ancilla_qubits: usize,
    pub group_size: usize,
    pub solved: usize,
    /// Canonical ids with ambiguous residuals (never silently dropped).
    pub inconclusive_elements: Vec<usize>,
    pub elements_with_solutions: usize,
    pub family_count: usize,
    pub total_solutions: usize,
    /// The headline machine-checkable field: number of solutions whose
    /// induced unitary is not Clifford.
    pub non_clifford_count: usize,
    /// Distinct induced unitaries up to global phase, labeled, with the
    /// number of (element, ancilla) pairs inducing each.
    pub families: Vec<UnitaryFamily>,
}

#[derive(Debug, Clone, Serialize)]
pub struct UnitaryFamily {
    pub label: String,
    pub count: usize,
    pub classification: Classification,
}

fn unitary_label(u: &Array2<Complex64>) -> Option<String> {
    if u.dim() != (2, 2) {
        return None;
    }
    let named: Vec<(&str, Array2<Complex64>)> = vec![
        ("I", Array2::eye(2)),
        ("X", crate::dense::gate_matrix(&CliffordGate::X(0))),
        ("Y", crate::dense::gate_matrix(&CliffordGate::Y(0))),
        ("Z", crate::dense::gate_matrix(&CliffordGate::Z(0))),
        ("H", crate::dense::gate_matrix(&CliffordGate::H(0))),
        ("S", crate::dense::gate_matrix(&CliffordGate::S(0))),
        ("SDG", crate::dense::gate_matrix(&CliffordGate::SDag(0))),
        ("SX", crate::dense::gate_matrix(&CliffordGate::SqrtX(0))),
        ("SXDG", crate::dense::gate_matrix(&CliffordGate::SqrtXDag(0))),
    ];
    for (name, m) in &named {
        if phase_invariant_overlap(u, m) > 1.0 - 1e-6 {
            return Some((*name).to_string());
        }
    }
    // Any other single-qubit Clifford: label by a shortest witness circuit.
    if let Ok(elems) = enumerate_group(1) {
        for e in &elems {
            if let Ok(m) = e.unitary() {
                if phase_invariant_overlap(u, &m) > 1.0 - 1e-6 {
                    let gates: Vec<String> = e.witness().iter().map(|g| g.kind().mnemonic().to_string()).collect();
                    return Some(gates.join("·"));
                }
            }
        }
    }
    None
}

fn pairs_to_matrix(rows: &[Vec<(f64, f64)>]) -> Array2<Complex64> {
    let n = rows.len();
    let mut m = Array2::zeros((n, n));
    for (i, row) in rows.iter().enumerate() {
        for (j, &(re, im)) in row.iter().enumerate() {
            m[(i, j)] = Complex64::new(re, im);
        }
    }
    m
}

/// Run [`solve_reusable`] over every enumerated element (1 data + 1
/// ancilla for n = 2; the 0-ancilla degenerate check for n = 1) and
/// aggregate. Elements run in parallel; the reduction is order-fixed by
/// canonical id.
pub fn survey(n: usize) -> Result<SurveyReport> {
    let elements = enumerate_group(n)?;
    survey_elements(&elements, n)
}

/// Survey a pre-enumerated element list (useful with a cache file).
pub fn survey_elements(elements: &[CliffordElement], n: usize) -> Result<SurveyReport> {
    let (data_qubits, ancilla_qubits) = match n {
        1 => (1, 0),
        2 => (1, 1),
        _ => return Err(Error::TooLarge("survey supports 1- or 2-qubit bodies".into())),
    };
    let results: Vec<SearchResult> = elements
        .par_iter()
        .map(|e| solve_reusable(e, data_qubits, ancilla_qubits))
        .collect::<Result<Vec<_>>>()?;

    let mut report = SurveyReport {
        body_qubits: n,
        data_qubits,
        ancilla_qubits,
        group_size: elements.len(),
        solved: 0,
        inconclusive_elements: Vec::new(),
        elements_with_solutions: 0,
        family_count: 0,
        total_solutions: 0,
        non_clifford_count: 0,
        families: Vec::new(),
    };
    let mut distinct: Vec<(Array2<Complex64>, usize, Classification)> = Vec::new();
    for r in &results {
        report.solved += 1;
        if !r.inconclusive.is_empty() {
            report.inconclusive_elements.push(r.clifford_id);
        }
        if !r.solutions.is_empty() {
            report.elements_with_solutions += 1;
        }
        if r.family {
            report.family_count += 1;
        }
        for s in &r.solutions {
            report.total_solutions += 1;
            if s.classification == Classification::NonClifford {
                report.non_clifford_count += 1;
            }
            let u = pairs_to_matrix(&s.unitary);
            match distinct.iter_mut().find(|(m, _, _)| phase_invariant_overlap(m, &u) > 1.0 - 1e-6) {
                Some((_, count, _)) => *count += 1,
                None => distinct.push((u, 1, s.classification)),
            }
        }
    }
    report.inconclusive_elements.sort_unstable();
    report.inconclusive_elements.dedup();
    let mut families: Vec<UnitaryFamily> = distinct
        .into_iter()
        .map(|(u, count, classification)| UnitaryFamily {
            label: unitary_label(&u).unwrap_or_else(|| {
                let mut s = String::from("matrix:");
                for i in 0..u.dim().0 {
                    for j in 0..u.dim().1 {
                        let _ = write!(s, " {:.4}{:+.4}i", u[(i, j)].re, u[(i, j)].im);
                    }
                }
                s
            }),
            count,
            classification,
        })
        .collect();
    families.sort_by(|a, b| b.count.cmp(&a.count).then(a.label.cmp(&b.label)));
    report.families = families;
    Ok(report)
}

/// Wrap a search solution as a reusable gadget definition for
/// cross-checking with the gadget verifier.
pub fn solution_gadget(element: &CliffordElement, sol: &Solution, data_qubits: usize) -> Result<crate::gadget::GadgetDef> {
    let q = element.num_qubits - data_qubits;
    let amps: Vec<Complex64> = sol.ancilla.iter().map(|&(re, im)| Complex64::new(re, im)).collect();
    Ok(crate::gadget::GadgetDef {
        name: format!("search#{}", element.canonical_id),
        ancilla_qubits: q,
        ancilla_state: crate::gadget::AncillaState::Pure(crate::dense::StateVector::new(q, amps)?),
        body: element.witness_circuit(),
        claimed_unitary: pairs_to_matrix(&sol.unitary),
        reusable: true,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn group_orders() {
        assert_eq!(group_order(1), 24);
        assert_eq!(group_order(2), 11520);
    }

    #[test]
    fn enumerate_single_qubit_group() {
        let elems = enumerate_group(1).unwrap();
        assert_eq!(elems.len(), 24);
        // Identity present with an empty witness.
        let id = elems.iter().find(|e| e.witness().is_empty()).unwrap();
        assert_eq!(id.image_of_x(0), &"X".parse().unwrap());
        assert_eq!(id.image_of_z(0), &"Z".parse().unwrap());
        for e in &elems {
            e.validate().unwrap();
        }
        // Canonical ids are a bijection 0..24.
        let mut ids: Vec<usize> = elems.iter().map(|e| e.canonical_id()).collect();
        ids.sort_unstable();
        assert_eq!(ids, (0..24).collect::<Vec<_>>());
    }

    #[test]
    fn witnesses_realize_their_images() {
        // The dense unitary of each witness conjugates Paulis exactly as
        // the images promise.
        let elems = enumerate_group(1).unwrap();
        for e in &elems {
            let u = e.unitary().unwrap();
            let udag = u.t().mapv(|v| v.conj());
            for (gen, img) in [(Pauli::X, e.image_of_x(0)), (Pauli::Z, e.image_of_z(0))] {
                let g = crate::dense::pauli_matrix(&PauliString::single(1, 0, gen));
                let got = u.dot(&g).dot(&udag);
                let want = crate::dense::pauli_matrix(img);
                for i in 0..2 {
                    for j in 0..2 {
                        assert!((got[(i, j)] - want[(i, j)]).norm() < 1e-12);
                    }
                }
            }
        }
    }

    #[test]
    fn composition_stays_in_group() {
        let elems = enumerate_group(1).unwrap();
        let keys: std::collections::BTreeSet<Vec<u64>> = elems.iter().map(|e| e.key()).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..200 {
            let a = &elems[rng.gen_range(0..elems.len())];
            let b = &elems[rng.gen_range(0..elems.len())];
            let c = a.compose(b).unwrap();
            assert!(keys.contains(&c.key()));
        }
    }

    #[test]
    fn apply_to_pauli_respects_products() {
        let elems = enumerate_group(1).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let paulis: Vec<PauliString> =
            ["X", "Y", "Z", "-X", "+iY"].iter().map(|s| s.parse().unwrap()).collect();
        for _ in 0..100 {
            let e = &elems[rng.gen_range(0..elems.len())];
            let p = &paulis[rng.gen_range(0..paulis.len())];
            let q = &paulis[rng.gen_range(0..paulis.len())];
            let lhs = e.apply_to_pauli(&p.mul(q).unwrap()).unwrap();
            let rhs = e.apply_to_pauli(p).unwrap().mul(&e.apply_to_pauli(q).unwrap()).unwrap();
            assert_eq!(lhs, rhs);
        }
    }

    #[test]
    fn cz_has_exactly_the_two_pole_solutions() {
        let e = CliffordElement::from_gates(2, &[CliffordGate::Cz(0, 1)]).unwrap();
        let r = solve_reusable(&e, 1, 1).unwrap();
        assert!(!r.family);
        assert_eq!(r.solutions.len(), 2, "{r:?}");
        for s in &r.solutions {
            assert!(s.residual <= 1e-8);
            assert_eq!(s.classification, Classification::Clifford);
            let u = pairs_to_matrix(&s.unitary);
            let eye: Array2<Complex64> = Array2::eye(2);
            let z = crate::dense::gate_matrix(&CliffordGate::Z(0));
            let is_i = phase_invariant_overlap(&u, &eye) > 1.0 - 1e-6;
            let is_z = phase_invariant_overlap(&u, &z) > 1.0 - 1e-6;
            assert!(is_i || is_z);
        }
    }

    #[test]
    fn identity_element_gives_a_full_family() {
        let e = CliffordElement::identity(2);
        let r = solve_reusable(&e, 1, 1).unwrap();
        assert!(r.family);
        assert!(r.solutions.iter().all(|s| s.family_member));
        for s in &r.solutions {
            let u = pairs_to_matrix(&s.unitary);
            let eye: Array2<Complex64> = Array2::eye(2);
            assert!(phase_invariant_overlap(&u, &eye) > 1.0 - 1e-6);
            assert_eq!(s.classification, Classification::Clifford);
        }
    }

    #[test]
    fn reusable_s_composite_solves_to_s() {
        // The reusable-S body: CNOT(data→anc), H(anc), CNOT, H — data is
        // qubit 0, ancilla qubit 1.
        let gates = [
            CliffordGate::Cnot(0, 1),
            CliffordGate::H(1),
            CliffordGate::Cnot(0, 1),
            CliffordGate::H(1),
        ];
        let e = CliffordElement::from_gates(2, &gates).unwrap();
        let r = solve_reusable(&e, 1, 1).unwrap();
        assert!(!r.family);
        assert_eq!(r.solutions.len(), 2, "expected |±i⟩: {r:?}");
        let s_mat = crate::dense::gate_matrix(&CliffordGate::S(0));
        let sdg_mat = crate::dense::gate_matrix(&CliffordGate::SDag(0));
        let mut seen_s = false;
        for s in &r.solutions {
            assert!(s.residual <= 1e-10, "{}", s.residual);
            assert_eq!(s.classification, Classification::Clifford);
            let u = pairs_to_matrix(&s.unitary);
            if phase_invariant_overlap(&u, &s_mat) > 1.0 - 1e-6 {
                seen_s = true;
                // The ancilla solving to S is (|0⟩ + i|1⟩)/√2.
                let a0 = Complex64::new(s.ancilla[0].0, s.ancilla[0].1);
                let a1 = Complex64::new(s.ancilla[1].0, s.ancilla[1].1);
                let expect = crate::gadget::plus_i_state();
                let got = crate::dense::StateVector::new(1, vec![a0, a1]).unwrap();
                assert!(got.overlap(&expect) > 1.0 - 1e-6);
            } else {
                assert!(phase_invariant_overlap(&u, &sdg_mat) > 1.0 - 1e-6);
            }
        }
        assert!(seen_s);
    }

    #[test]
    fn classify_detects_non_clifford() {
        let t = ndarray::array![
            [Complex64::new(1., 0.), Complex64::new(0., 0.)],
            [Complex64::new(0., 0.), Complex64::from_polar(1.0, std::f64::consts::FRAC_PI_4)]
        ];
        assert_eq!(classify_unitary(&t, 1), Classification::NonClifford);
        let s = crate::dense::gate_matrix(&CliffordGate::S(0));
        assert_eq!(classify_unitary(&s, 1), Classification::Clifford);
        let h = crate::dense::gate_matrix(&CliffordGate::H(0));
        assert_eq!(classify_unitary(&h, 1), Classification::Clifford);
    }

    #[test]
    fn degenerate_survey_of_single_qubit_bodies() {
        let report = survey(1).unwrap();
        assert_eq!(report.group_size, 24);
        assert_eq!(report.solved, 24);
        assert_eq!(report.total_solutions, 24);
        assert_eq!(report.non_clifford_count, 0);
        assert!(report.inconclusive_elements.is_empty());
    }

    #[test]
    fn soundness_far_states_have_large_residual() {
        let gates = [
            CliffordGate::Cnot(0, 1),
            CliffordGate::H(1),
            CliffordGate::Cnot(0, 1),
            CliffordGate::H(1),
        ];
        let e = CliffordElement::from_gates(2, &gates).unwrap();
        let u = e.unitary().unwrap();
        let objective = Objective::new(&u, 1, 1);
        let solutions = [
            bloch_to_amplitudes(std::f64::consts::FRAC_PI_2, std::f64::consts::FRAC_PI_2),
            bloch_to_amplitudes(std::f64::consts::FRAC_PI_2, -std::f64::consts::FRAC_PI_2),
        ];
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let mut tested = 0;
        while tested < 100 {
            let s = crate::dense::random_pure_state(1, &mut rng);
            let far = solutions.iter().all(|sol| state_distance(s.amplitudes(), sol) > 0.01);
            if !far {
                continue;
            }
            tested += 1;
            assert!(objective.residual(s.amplitudes()) > 1e-4);
        }
    }

    #[test]
    fn cache_roundtrip() {
        let elems = enumerate_group(1).unwrap();
        let text = cache_to_json(&elems).unwrap();
        let back = cache_from_json(&text).unwrap();
        assert_eq!(back.len(), elems.len());
        for (a, b) in elems.iter().zip(&back) {
            assert_eq!(a.key(), b.key());
            assert_eq!(a.canonical_id(), b.canonical_id());
        }
    }

    #[test]
    fn solutions_wrap_into_verifiable_gadgets() {
        let gates = [
            CliffordGate::Cnot(0, 1),
            CliffordGate::H(1),
            CliffordGate::Cnot(0, 1),
            CliffordGate::H(1),
        ];
        let e = CliffordElement::from_gates(2, &gates).unwrap();
        let r = solve_reusable(&e, 1, 1).unwrap();
        for s in &r.solutions {
            let def = solution_gadget(&e, s, 1).unwrap();
            let report = crate::gadget::verify_gadget(&def, 10).unwrap();
            assert!(report.unitary_match >= 1.0 - 1e-8, "{report:?}");
            assert!(report.leakage.unwrap() <= 1e-8);
        }
    }
}
