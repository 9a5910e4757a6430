//! Signed stabilizer-mixture simulation: an all-Clifford circuit whose
//! only non-stabilizer input is a fixed-size ancilla runs as one tableau
//! per stabilizer-frame term, with measurements sampled jointly across
//! terms. Total cost is (term count) × poly(n), and the term count never
//! grows during the run.
//!
//! Measurement conditioning across signed terms: the mixture-level
//! probability p(1) = Σ_k w_k·p_k(1) is computed from per-term forced
//! probabilities (each in {0, 1/2, 1}), one bit is sampled from it, every
//! term is forced to that bit, and weights update as
//! w_k ← w_k·p_k(bit)/p(bit). Terms whose branch probability is zero die.

use std::collections::BTreeMap;

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::circuit::{Circuit, Instruction};
use crate::decomp::{pauli_coefficients, stabilizer_frame};
use crate::dense::DensityMatrix;
use crate::error::{Error, Result};
use crate::pauli::CliffordGate;
use crate::tableau::{FrameLabel, Tableau};

/// Mixture probabilities may stray from [0,1] by at most this before the
/// state is declared non-physical.
pub const PROBABILITY_TOL: f64 = 1e-9;

/// Term counts above this switch gate application to parallel iteration.
const PARALLEL_TERM_THRESHOLD: usize = 32;

#[derive(Debug, Clone)]
struct Term {
    weight: f64,
    tableau: Tableau,
}

/// Weighted list of tableaus plus the classical-bit record of a run.
#[derive(Debug, Clone)]
pub struct StabMixture {
    num_data_qubits: usize,
    num_ancilla_qubits: usize,
    num_classical_bits: usize,
    terms: Vec<Term>,
    bits: BTreeMap<usize, bool>,
}

/// Outcome record of one sampled run.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SampleRecord {
    /// Bit name ("c0", "c1", …) → outcome.
    pub bits: BTreeMap<String, u8>,
}

impl SampleRecord {
    pub fn bitstring(&self, num_bits: usize) -> String {
        (0..num_bits)
            .map(|b| match self.bits.get(&format!("c{b}")) {
                Some(1) => '1',
                _ => '0',
            })
            .collect()
    }
}

impl StabMixture {
    /// Initial mixture for `circuit`: data qubits in |0…0⟩ and the ancilla
    /// density matrix decomposed over the stabilizer frame on `placement`.
    ///
    /// The circuit must already be expanded: any non-Clifford instruction
    /// is rejected here with a pointer to `expand_gadgets`.
    pub fn init(circuit: &Circuit, ancilla: &DensityMatrix, placement: &[usize]) -> Result<Self> {
        if let Some(instr) = circuit
            .instructions
            .iter()
            .find_map(|i| match i {
                Instruction::NonClifford { name, .. } => Some(name.clone()),
                _ => None,
            })
        {
            return Err(Error::NotExpanded(instr));
        }
        let q = ancilla.num_qubits();
        if placement.len() != q {
            return Err(Error::DimensionMismatch(placement.len(), q));
        }
        for &p in placement {
            if p >= circuit.num_qubits {
                return Err(Error::QubitOutOfRange { index: p, num_qubits: circuit.num_qubits });
            }
        }
        let n_total = circuit.num_qubits;
        let frame = stabilizer_frame(&pauli_coefficients(ancilla)?);
        let mut terms = Vec::with_capacity(frame.terms.len());
        for ft in &frame.terms {
            let mut labels = vec![FrameLabel::ZPlus; n_total];
            for (local, &qubit) in placement.iter().enumerate() {
                labels[qubit] = ft.labels[local];
            }
            terms.push(Term { weight: ft.weight, tableau: Tableau::from_labels(&labels) });
        }
        if terms.is_empty() {
            return Err(Error::NonPhysical("ancilla decomposed to zero frame terms".into()));
        }
        let total: f64 = terms.iter().map(|t| t.weight).sum();
        if (total - 1.0).abs() > PROBABILITY_TOL {
            return Err(Error::NonPhysical(format!("initial weights sum to {total}")));
        }
        Ok(StabMixture {
            num_data_qubits: n_total - q,
            num_ancilla_qubits: q,
            num_classical_bits: circuit.num_classical_bits,
            terms,
            bits: BTreeMap::new(),
        })
    }

    /// Trivial single-term mixture: every qubit in |0⟩ (stabilizer-ancilla
    /// degenerate case).
    pub fn trivial(circuit: &Circuit) -> Result<Self> {
        if circuit.has_non_clifford() {
            return Err(Error::NotExpanded("non-Clifford instruction".into()));
        }
        Ok(StabMixture {
            num_data_qubits: circuit.num_qubits,
            num_ancilla_qubits: 0,
            num_classical_bits: circuit.num_classical_bits,
            terms: vec![Term { weight: 1.0, tableau: Tableau::zero_state(circuit.num_qubits) }],
            bits: BTreeMap::new(),
        })
    }

    pub fn term_count(&self) -> usize {
        self.terms.len()
    }

    pub fn num_data_qubits(&self) -> usize {
        self.num_data_qubits
    }

    pub fn num_ancilla_qubits(&self) -> usize {
        self.num_ancilla_qubits
    }

    pub fn weight_sum(&self) -> f64 {
        self.terms.iter().map(|t| t.weight).sum()
    }

    fn apply_gate(&mut self, gate: &CliffordGate) -> Result<()> {
        if self.terms.len() >= PARALLEL_TERM_THRESHOLD {
            self.terms
                .par_iter_mut()
                .try_for_each(|t| t.tableau.apply_gate(gate))?;
        } else {
            for t in &mut self.terms {
                t.tableau.apply_gate(gate)?;
            }
        }
        Ok(())
    }

    /// Mixture-level probability that measuring `qubit` yields 1.
    /// Per-term probabilities are exact ({0, 1/2, 1}); the signed sum is
    /// validated against [−tol, 1+tol] and clamped.
    fn prob_one(&self, qubit: usize) -> Result<f64> {
        let mut p = 0.0;
        for t in &self.terms {
            let pk = match t.tableau.peek_z(qubit)? {
                None => 0.5,
                Some(true) => 1.0,
                Some(false) => 0.0,
            };
            p += t.weight * pk;
        }
        if !(-PROBABILITY_TOL..=1.0 + PROBABILITY_TOL).contains(&p) {
            return Err(Error::NonPhysical(format!("measurement probability {p} outside [0,1]")));
        }
        Ok(p.clamp(0.0, 1.0))
    }

    /// Force `outcome` into every term, renormalizing weights by the
    /// mixture-level branch probability. Dead terms are removed.
    fn condition(&mut self, qubit: usize, outcome: bool, branch_prob: f64) -> Result<()> {
        let mut survivors = Vec::with_capacity(self.terms.len());
        for mut t in self.terms.drain(..) {
            let pk = t.tableau.measure_z_forced(qubit, outcome)?;
            if pk == 0.0 {
                continue;
            }
            t.weight *= pk / branch_prob;
            survivors.push(t);
        }
        self.terms = survivors;
        if self.terms.is_empty() {
            return Err(Error::NonPhysical("all mixture terms died on a sampled branch".into()));
        }
        Ok(())
    }

    /// Measure `qubit`, sampling the outcome from the mixture-level
    /// distribution and conditioning every term on it. Probabilities
    /// within tolerance of 0 or 1 are snapped: the residue is signed-sum
    /// rounding noise and sampling it would strand the mixture on a
    /// zero-probability branch.
    fn measure(&mut self, qubit: usize, rng: &mut impl Rng) -> Result<bool> {
        let p1 = self.prob_one(qubit)?;
        let outcome = if p1 <= PROBABILITY_TOL {
            false
        } else if p1 >= 1.0 - PROBABILITY_TOL {
            true
        } else {
            rng.gen_bool(p1)
        };
        let branch = if outcome { p1 } else { 1.0 - p1 };
        self.condition(qubit, outcome, branch)?;
        Ok(outcome)
    }

    fn apply_instruction(&mut self, instr: &Instruction, rng: &mut impl Rng) -> Result<()> {
        match instr {
            Instruction::Gate(g) => self.apply_gate(g)?,
            Instruction::MeasureZ { qubit, bit } => {
                let outcome = self.measure(*qubit, rng)?;
                self.bits.insert(*bit, outcome);
            }
            Instruction::Conditional { bit, gate } => {
                if self.bits.get(bit).copied().unwrap_or(false) {
                    self.apply_gate(gate)?;
                }
            }
            Instruction::Reset { qubit } => {
                // Hidden measurement: sample, condition, flip back to |0⟩.
                let outcome = self.measure(*qubit, rng)?;
                if outcome {
                    self.apply_gate(&CliffordGate::X(*qubit))?;
                }
            }
            Instruction::NonClifford { name, .. } => return Err(Error::NotExpanded(name.clone())),
        }
        Ok(())
    }
}

/// Stream the circuit through a clone of `initial`, sampling measurements
/// with `rng`. Returns the classical-bit record.
pub fn run_sample(circuit: &Circuit, initial: &StabMixture, rng: &mut impl Rng) -> Result<SampleRecord> {
    let mut m = initial.clone();
    let initial_terms = m.term_count();
    for instr in &circuit.instructions {
        m.apply_instruction(instr, rng)?;
        debug_assert!(m.term_count() <= initial_terms);
    }
    let bits = (0..m.num_classical_bits)
        .map(|b| (format!("c{b}"), u8::from(m.bits.get(&b).copied().unwrap_or(false))))
        .collect();
    Ok(SampleRecord { bits })
}

/// Cap on recorded measurements for exact branch enumeration.
pub const MAX_EXACT_MEASUREMENTS: usize = 16;

/// Exact outcome distribution by branch enumeration, carrying the full
/// weight vector down every branch. Keys are bitstrings "b0b1…" over the
/// circuit's classical bits; probabilities sum to 1 within 1e−9.
pub fn exact_distribution(circuit: &Circuit, initial: &StabMixture) -> Result<BTreeMap<String, f64>> {
    let branch_points = circuit
        .instructions
        .iter()
        .filter(|i| matches!(i, Instruction::MeasureZ { .. } | Instruction::Reset { .. }))
        .count();
    if branch_points > MAX_EXACT_MEASUREMENTS {
        return Err(Error::BranchOverflow(branch_points, MAX_EXACT_MEASUREMENTS));
    }

    struct Branch {
        mixture: StabMixture,
        prob: f64,
        next: usize,
    }
    let mut dist: BTreeMap<String, f64> = BTreeMap::new();
    let mut stack = vec![Branch { mixture: initial.clone(), prob: 1.0, next: 0 }];
    while let Some(Branch { mut mixture, mut prob, mut next }) = stack.pop() {
        let mut dead = false;
        while next < circuit.instructions.len() {
            match &circuit.instructions[next] {
                Instruction::Gate(g) => mixture.apply_gate(g)?,
                Instruction::Conditional { bit, gate } => {
                    if mixture.bits.get(bit).copied().unwrap_or(false) {
                        mixture.apply_gate(gate)?;
                    }
                }
                Instruction::MeasureZ { qubit, bit } => {
                    // Probabilities within tolerance of 0/1 are snapped so
                    // rounding slivers of dead branches are not explored.
                    let p1 = mixture.prob_one(*qubit)?;
                    if p1 > PROBABILITY_TOL && p1 < 1.0 - PROBABILITY_TOL {
                        let mut other = mixture.clone();
                        other.condition(*qubit, true, p1)?;
                        other.bits.insert(*bit, true);
                        stack.push(Branch { mixture: other, prob: prob * p1, next: next + 1 });
                        mixture.condition(*qubit, false, 1.0 - p1)?;
                        mixture.bits.insert(*bit, false);
                        prob *= 1.0 - p1;
                    } else if p1 >= 1.0 - PROBABILITY_TOL {
                        mixture.condition(*qubit, true, p1)?;
                        mixture.bits.insert(*bit, true);
                    } else {
                        mixture.condition(*qubit, false, 1.0 - p1)?;
                        mixture.bits.insert(*bit, false);
                    }
                }
                Instruction::Reset { qubit } => {
                    // Hidden branch: no bit is recorded, so both legs feed
                    // the same outcome keys, weighted by branch probability.
                    let p1 = mixture.prob_one(*qubit)?;
                    if p1 > PROBABILITY_TOL && p1 < 1.0 - PROBABILITY_TOL {
                        let mut other = mixture.clone();
                        other.condition(*qubit, true, p1)?;
                        other.apply_gate(&CliffordGate::X(*qubit))?;
                        stack.push(Branch { mixture: other, prob: prob * p1, next: next + 1 });
                        mixture.condition(*qubit, false, 1.0 - p1)?;
                        prob *= 1.0 - p1;
                    } else if p1 >= 1.0 - PROBABILITY_TOL {
                        mixture.condition(*qubit, true, p1)?;
                        mixture.apply_gate(&CliffordGate::X(*qubit))?;
                    } else {
                        mixture.condition(*qubit, false, 1.0 - p1)?;
                    }
                }
                Instruction::NonClifford { name, .. } => return Err(Error::NotExpanded(name.clone())),
            }
            next += 1;
            if prob <= 0.0 {
                dead = true;
                break;
            }
        }
        if !dead {
            let key: String = (0..circuit.num_classical_bits)
                .map(|b| if mixture.bits.get(&b).copied().unwrap_or(false) { '1' } else { '0' })
                .collect();
            *dist.entry(key).or_insert(0.0) += prob;
        }
    }

    let total: f64 = dist.values().sum();
    if (total - 1.0).abs() > PROBABILITY_TOL {
        return Err(Error::NonPhysical(format!("branch probabilities sum to {total}")));
    }
    Ok(dist)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dense::StateVector;
    use crate::gadget::{expand_gadgets, t_magic_state, GadgetLibrary};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn t_state_density() -> DensityMatrix {
        t_magic_state().density()
    }

    #[test]
    fn init_term_counts() {
        let c = Circuit::parse("qubits 2\n").unwrap();
        let one = StabMixture::init(&c, &StateVector::zero_state(1).density(), &[1]).unwrap();
        assert_eq!(one.term_count(), 1);

        let two = StabMixture::init(&c, &DensityMatrix::maximally_mixed(1), &[1]).unwrap();
        assert_eq!(two.term_count(), 2);

        let six = StabMixture::init(&c, &t_state_density(), &[1]).unwrap();
        assert_eq!(six.term_count(), 6);
        assert!((six.weight_sum() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn init_rejects_unexpanded_circuits() {
        let c = Circuit::parse("qubits 2\nT 0\n").unwrap();
        let e = StabMixture::init(&c, &t_state_density(), &[1]).unwrap_err();
        assert!(e.to_string().contains("expansion"), "{e}");
    }

    #[test]
    fn t_gadget_measurement_bit_is_unbiased() {
        // Consumable T gadget on data |0⟩: ancilla bit is exactly 1/2.
        let c = Circuit::parse("qubits 1\nT 0\n").unwrap();
        let (expanded, map) = expand_gadgets(&c, &GadgetLibrary::standard()).unwrap();
        let m = StabMixture::init(&expanded, &map.joint_density().unwrap(), &map.ancilla_qubits()).unwrap();
        let dist = exact_distribution(&expanded, &m).unwrap();
        assert!((dist["0"] - 0.5).abs() < 1e-12, "{dist:?}");
        assert!((dist["1"] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn t_gadget_in_x_basis_matches_analytic_value() {
        // H, T, H on |0⟩ then measure: p(0) = cos²(π/8). The inner H–T–H is
        // the gate-teleportation circuit with its data qubit conjugated
        // into the X basis.
        let c = Circuit::parse("qubits 1\nH 0\nT 0\nH 0\nM 0 -> c0\n").unwrap();
        let (expanded, map) = expand_gadgets(&c, &GadgetLibrary::standard()).unwrap();
        let m = StabMixture::init(&expanded, &map.joint_density().unwrap(), &map.ancilla_qubits()).unwrap();
        let dist = exact_distribution(&expanded, &m).unwrap();
        let cos2 = (std::f64::consts::FRAC_PI_8).cos().powi(2);
        // Marginal over the data bit c0 (gadget bit c1 summed out).
        let p0: f64 = dist.iter().filter(|(k, _)| k.starts_with('0')).map(|(_, p)| p).sum();
        assert!((p0 - cos2).abs() < 1e-12, "{dist:?}");
        assert!((p0 - 0.8535533905932737).abs() < 1e-12);
    }

    #[test]
    fn stabilizer_ancilla_degenerates_to_plain_tableau() {
        let text = "qubits 3\nH 0\nCNOT 0 1\nCZ 1 2\nH 2\nM 0 -> c0\nM 1 -> c1\nM 2 -> c2\n";
        let c = Circuit::parse(text).unwrap();
        let single = StabMixture::init(&c, &StateVector::zero_state(1).density(), &[2]).unwrap();
        assert_eq!(single.term_count(), 1);
        let trivial = StabMixture::trivial(&c).unwrap();
        let a = exact_distribution(&c, &single).unwrap();
        let b = exact_distribution(&c, &trivial).unwrap();
        assert_eq!(a.len(), b.len());
        for (k, v) in &a {
            assert!((v - b[k]).abs() < 1e-12);
        }
    }

    #[test]
    fn empty_measurement_circuit_gives_unit_empty_record() {
        let c = Circuit::parse("qubits 1\nH 0\n").unwrap();
        let m = StabMixture::trivial(&c).unwrap();
        let dist = exact_distribution(&c, &m).unwrap();
        assert_eq!(dist.len(), 1);
        assert!((dist[""] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn plus_state_measurement_splits_evenly() {
        let c = Circuit::parse("qubits 1\nH 0\nM 0 -> c0\n").unwrap();
        let m = StabMixture::trivial(&c).unwrap();
        let dist = exact_distribution(&c, &m).unwrap();
        assert!((dist["0"] - 0.5).abs() < 1e-15);
        assert!((dist["1"] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn sampling_is_seed_deterministic() {
        let c = Circuit::parse("qubits 2\nH 0\nT 0\nCNOT 0 1\nM 0 -> c0\nM 1 -> c1\n").unwrap();
        let (expanded, map) = expand_gadgets(&c, &GadgetLibrary::standard()).unwrap();
        let m = StabMixture::init(&expanded, &map.joint_density().unwrap(), &map.ancilla_qubits()).unwrap();
        let run = |seed: u64| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            (0..20)
                .map(|_| run_sample(&expanded, &m, &mut rng).unwrap())
                .collect::<Vec<_>>()
        };
        assert_eq!(run(7), run(7));
        assert_ne!(run(7), run(8));
    }

    #[test]
    fn sampled_frequencies_track_exact_distribution() {
        let c = Circuit::parse("qubits 1\nH 0\nT 0\nH 0\nM 0 -> c0\n").unwrap();
        let (expanded, map) = expand_gadgets(&c, &GadgetLibrary::standard()).unwrap();
        let m = StabMixture::init(&expanded, &map.joint_density().unwrap(), &map.ancilla_qubits()).unwrap();
        let exact = exact_distribution(&expanded, &m).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(123);
        let shots = 20_000;
        let mut counts: BTreeMap<String, usize> = BTreeMap::new();
        for _ in 0..shots {
            let r = run_sample(&expanded, &m, &mut rng).unwrap();
            *counts.entry(r.bitstring(expanded.num_classical_bits)).or_insert(0) += 1;
        }
        for (k, &p) in &exact {
            let freq = *counts.get(k).unwrap_or(&0) as f64 / shots as f64;
            // 5σ Bernoulli margin.
            let sigma = (p * (1.0 - p) / shots as f64).sqrt();
            assert!((freq - p).abs() < 5.0 * sigma + 1e-3, "{k}: {freq} vs {p}");
        }
    }

    #[test]
    fn marginal_over_last_bit_matches_truncated_circuit() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..10 {
            let c = crate::random::random_clifford_circuit(3, 15, 3, &mut rng);
            if c.measurement_count() < 2 {
                continue;
            }
            let m = StabMixture::init(&c, &crate::dense::random_density(1, &mut rng), &[2]).unwrap();
            let full = exact_distribution(&c, &m).unwrap();
            // Truncate before the final measurement.
            let last_measure = c
                .instructions
                .iter()
                .rposition(|i| matches!(i, Instruction::MeasureZ { .. }))
                .unwrap();
            let last_bit = match &c.instructions[last_measure] {
                Instruction::MeasureZ { bit, .. } => *bit,
                _ => unreachable!(),
            };
            let mut truncated = c.clone();
            truncated.instructions.truncate(last_measure);
            truncated.num_classical_bits = c.num_classical_bits;
            let m2 = StabMixture::init(&truncated, &DensityMatrix::maximally_mixed(1), &[2]);
            // Rebuild with the same ancilla as `m`: reuse full mixture init.
            drop(m2);
            let m2 = StabMixture { bits: BTreeMap::new(), ..m.clone() };
            let partial = exact_distribution(&truncated, &m2).unwrap();
            let mut summed: BTreeMap<String, f64> = BTreeMap::new();
            for (k, p) in &full {
                let mut key: Vec<char> = k.chars().collect();
                key[last_bit] = '0';
                *summed.entry(key.into_iter().collect()).or_insert(0.0) += p;
            }
            for (k, p) in &partial {
                assert!((summed.get(k).unwrap_or(&0.0) - p).abs() < 1e-9, "{k}");
            }
        }
    }

    #[test]
    fn term_count_never_grows() {
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        for _ in 0..20 {
            let c = crate::random::random_clifford_circuit(3, 25, 4, &mut rng);
            let m0 = StabMixture::init(&c, &crate::dense::random_density(2, &mut rng), &[1, 2]).unwrap();
            let start = m0.term_count();
            let mut m = m0.clone();
            let mut ok = true;
            for instr in &c.instructions {
                if m.apply_instruction(instr, &mut rng).is_err() {
                    ok = false;
                    break;
                }
                assert!(m.term_count() <= start);
            }
            assert!(ok);
        }
    }
}
