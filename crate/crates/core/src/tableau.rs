//! Stabilizer tableau with destabilizer rows: Clifford evolution in O(n) per
//! gate and Z-basis measurement with exact outcome probabilities in
//! {0, 1/2, 1}.

use std::fmt;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pauli::{CliffordGate, Pauli, PauliString};

/// One of the six single-qubit stabilizer states.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum FrameLabel {
    #[serde(rename = "Z+")]
    ZPlus,
    #[serde(rename = "Z-")]
    ZMinus,
    #[serde(rename = "X+")]
    XPlus,
    #[serde(rename = "X-")]
    XMinus,
    #[serde(rename = "Y+")]
    YPlus,
    #[serde(rename = "Y-")]
    YMinus,
}

pub const FRAME_LABELS: [FrameLabel; 6] = [
    FrameLabel::ZPlus,
    FrameLabel::ZMinus,
    FrameLabel::XPlus,
    FrameLabel::XMinus,
    FrameLabel::YPlus,
    FrameLabel::YMinus,
];

impl FrameLabel {
    /// Stabilizing Pauli and its sign: `label` is the +1 eigenstate of
    /// `sign · pauli`.
    pub fn stabilizer(self) -> (Pauli, bool) {
        match self {
            FrameLabel::ZPlus => (Pauli::Z, false),
            FrameLabel::ZMinus => (Pauli::Z, true),
            FrameLabel::XPlus => (Pauli::X, false),
            FrameLabel::XMinus => (Pauli::X, true),
            FrameLabel::YPlus => (Pauli::Y, false),
            FrameLabel::YMinus => (Pauli::Y, true),
        }
    }

    /// A Pauli anticommuting with the stabilizer axis.
    pub fn destabilizer(self) -> Pauli {
        match self {
            FrameLabel::ZPlus | FrameLabel::ZMinus => Pauli::X,
            FrameLabel::XPlus | FrameLabel::XMinus => Pauli::Z,
            FrameLabel::YPlus | FrameLabel::YMinus => Pauli::X,
        }
    }

    pub fn text(self) -> &'static str {
        match self {
            FrameLabel::ZPlus => "Z+",
            FrameLabel::ZMinus => "Z-",
            FrameLabel::XPlus => "X+",
            FrameLabel::XMinus => "X-",
            FrameLabel::YPlus => "Y+",
            FrameLabel::YMinus => "Y-",
        }
    }

    pub fn from_text(s: &str) -> Option<Self> {
        FRAME_LABELS.iter().copied().find(|l| l.text() == s)
    }
}

impl fmt::Display for FrameLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.text())
    }
}

/// Result of a Z-basis measurement: the outcome bit and the probability of
/// that outcome, always one of 0, 1/2, 1.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeasureResult {
    pub outcome: bool,
    pub probability: f64,
}

/// Stabilizer state of `n` qubits as 2n generator rows: destabilizers
/// first, then stabilizers. Row signs live in each row's phase exponent,
/// restricted to {0, 2}.
#[derive(Clone, PartialEq)]
pub struct Tableau {
    num_qubits: usize,
    rows: Vec<PauliString>,
}

impl Tableau {
    /// |0…0⟩ on `n` qubits.
    pub fn zero_state(n: usize) -> Self {
        Tableau::from_labels(&vec![FrameLabel::ZPlus; n])
    }

    /// Product state ⊗|label_i⟩.
    pub fn from_labels(labels: &[FrameLabel]) -> Self {
        assert!(!labels.is_empty(), "tableau needs at least one qubit");
        let n = labels.len();
        let mut rows = Vec::with_capacity(2 * n);
        for (q, label) in labels.iter().enumerate() {
            rows.push(PauliString::single(n, q, label.destabilizer()));
        }
        for (q, label) in labels.iter().enumerate() {
            let (p, negated) = label.stabilizer();
            let mut row = PauliString::single(n, q, p);
            if negated {
                row.set_phase_exponent(2);
            }
            rows.push(row);
        }
        Tableau { num_qubits: n, rows }
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn destabilizer(&self, i: usize) -> &PauliString {
        &self.rows[i]
    }

    pub fn stabilizer(&self, i: usize) -> &PauliString {
        &self.rows[self.num_qubits + i]
    }

    /// Apply a Clifford gate by conjugating every generator row.
    pub fn apply_gate(&mut self, gate: &CliffordGate) -> Result<()> {
        for &t in gate.targets().iter() {
            if t >= self.num_qubits {
                return Err(Error::QubitOutOfRange { index: t, num_qubits: self.num_qubits });
            }
        }
        for row in &mut self.rows {
            row.conjugate_by_gate(gate).expect("targets checked");
        }
        Ok(())
    }

    fn check_qubit(&self, qubit: usize) -> Result<()> {
        if qubit >= self.num_qubits {
            return Err(Error::QubitOutOfRange { index: qubit, num_qubits: self.num_qubits });
        }
        Ok(())
    }

    /// Deterministic Z outcome on `qubit`, or `None` when the outcome is
    /// uniformly random. Does not mutate.
    pub fn peek_z(&self, qubit: usize) -> Result<Option<bool>> {
        self.check_qubit(qubit)?;
        let n = self.num_qubits;
        if (n..2 * n).any(|i| self.rows[i].x_bit(qubit)) {
            return Ok(None);
        }
        Ok(Some(self.deterministic_z_sign(qubit)))
    }

    /// Sign of the deterministic Z_qubit outcome, assuming no stabilizer
    /// row anticommutes with it: ±Z_qubit is decomposed over the stabilizer
    /// generators selected by the destabilizer rows.
    fn deterministic_z_sign(&self, qubit: usize) -> bool {
        let n = self.num_qubits;
        let mut scratch = PauliString::identity(n);
        for i in 0..n {
            if self.rows[i].x_bit(qubit) {
                scratch.mul_assign(&self.rows[n + i]);
            }
        }
        debug_assert!(scratch
            .same_operator(&PauliString::single(n, qubit, Pauli::Z)));
        debug_assert!(scratch.phase_exponent() % 2 == 0);
        scratch.phase_exponent() == 2
    }

    /// Measure `qubit` in the Z basis, sampling a random outcome when
    /// needed. Returns the outcome and its probability (1/2 or 1).
    pub fn measure_z(&mut self, qubit: usize, rng: &mut impl Rng) -> Result<MeasureResult> {
        self.check_qubit(qubit)?;
        match self.peek_z(qubit)? {
            Some(outcome) => Ok(MeasureResult { outcome, probability: 1.0 }),
            None => {
                let outcome = rng.gen::<bool>();
                self.collapse_z(qubit, outcome);
                Ok(MeasureResult { outcome, probability: 0.5 })
            }
        }
    }

    /// Force the outcome of a Z measurement on `qubit`. Returns the
    /// probability of that branch: 1/2 (random), 1 (deterministic, agrees)
    /// or 0 (deterministic, contradicts — the caller drops the branch; the
    /// tableau is left unchanged in that case).
    pub fn measure_z_forced(&mut self, qubit: usize, outcome: bool) -> Result<f64> {
        self.check_qubit(qubit)?;
        match self.peek_z(qubit)? {
            Some(det) => Ok(if det == outcome { 1.0 } else { 0.0 }),
            None => {
                self.collapse_z(qubit, outcome);
                Ok(0.5)
            }
        }
    }

    /// Standard row-replacement update for a random Z measurement.
    fn collapse_z(&mut self, qubit: usize, outcome: bool) {
        let n = self.num_qubits;
        let pivot = (n..2 * n)
            .find(|&i| self.rows[i].x_bit(qubit))
            .expect("collapse_z requires a random measurement");
        let pivot_row = self.rows[pivot].clone();
        for i in 0..2 * n {
            if i != pivot && i != pivot - n && self.rows[i].x_bit(qubit) {
                self.rows[i].mul_assign(&pivot_row);
            }
        }
        self.rows[pivot - n] = pivot_row;
        let mut z = PauliString::single(n, qubit, Pauli::Z);
        if outcome {
            z.set_phase_exponent(2);
        }
        self.rows[pivot] = z;
    }

    /// Reset `qubit` to |0⟩ along the sampled measurement trajectory.
    pub fn reset(&mut self, qubit: usize, rng: &mut impl Rng) -> Result<()> {
        let m = self.measure_z(qubit, rng)?;
        if m.outcome {
            self.apply_gate(&CliffordGate::X(qubit))?;
        }
        Ok(())
    }

    /// Tr(P·ρ) for a Hermitian Pauli string: ±1 when ±P stabilizes the
    /// state, 0 otherwise.
    pub fn expectation_pauli(&self, p: &PauliString) -> Result<i8> {
        if p.num_qubits() != self.num_qubits {
            return Err(Error::DimensionMismatch(p.num_qubits(), self.num_qubits));
        }
        if p.is_identity_up_to_phase() {
            return Ok(match p.phase_exponent() {
                0 => 1,
                2 => -1,
                _ => 0,
            });
        }
        let n = self.num_qubits;
        let mut candidate = PauliString::identity(n);
        for i in 0..n {
            if p.symplectic_product(&self.rows[i]) == 1 {
                candidate.mul_assign(&self.rows[n + i]);
            }
        }
        if !candidate.same_operator(p) {
            return Ok(0);
        }
        Ok(match (4 + candidate.phase_exponent() - p.phase_exponent()) % 4 {
            0 => 1,
            2 => -1,
            _ => 0,
        })
    }

    /// Check the tableau invariants: commutation pairing of the generator
    /// rows, row signs in {±1}, and full rank of the stabilizer block.
    pub fn validate(&self) -> Result<()> {
        let n = self.num_qubits;
        let fail = |msg: String| Err(Error::InvalidState(msg));
        if self.rows.len() != 2 * n {
            return fail(format!("expected {} rows, found {}", 2 * n, self.rows.len()));
        }
        for (i, row) in self.rows.iter().enumerate() {
            if row.phase_exponent() % 2 != 0 {
                return fail(format!("row {i} has non-Hermitian phase"));
            }
        }
        for i in 0..2 * n {
            for j in (i + 1)..2 * n {
                let anticommute = self.rows[i].symplectic_product(&self.rows[j]) == 1;
                let paired = j == i + n;
                if anticommute != paired {
                    return fail(format!("rows {i} and {j} break the commutation pairing"));
                }
            }
        }
        if self.stabilizer_rank() != n {
            return fail("stabilizer rows are linearly dependent".into());
        }
        Ok(())
    }

    /// Rank of the stabilizer (x|z) matrix over GF(2).
    fn stabilizer_rank(&self) -> usize {
        let n = self.num_qubits;
        let mut vecs: Vec<Vec<bool>> = (0..n)
            .map(|i| {
                let row = &self.rows[n + i];
                (0..n).flat_map(|q| [row.x_bit(q), row.z_bit(q)]).collect()
            })
            .collect();
        let mut rank = 0;
        for col in 0..2 * n {
            if let Some(pivot) = (rank..n).find(|&r| vecs[r][col]) {
                vecs.swap(rank, pivot);
                for r in 0..n {
                    if r != rank && vecs[r][col] {
                        let (a, b) = if r < rank {
                            let (lo, hi) = vecs.split_at_mut(rank);
                            (&mut lo[r], &hi[0])
                        } else {
                            let (lo, hi) = vecs.split_at_mut(r);
                            (&mut hi[0], &lo[rank])
                        };
                        for (x, y) in a.iter_mut().zip(b.iter()) {
                            *x ^= *y;
                        }
                    }
                }
                rank += 1;
            }
        }
        rank
    }

    /// Debug dump: one generator per line, destabilizers then stabilizers.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        for row in &self.rows {
            out.push_str(&row.to_string());
            out.push('\n');
        }
        out
    }
}

impl fmt::Debug for Tableau {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Tableau(n={})\n{}", self.num_qubits, self.dump())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn ps(s: &str) -> PauliString {
        s.parse().unwrap()
    }

    #[test]
    fn product_state_stabilizers() {
        let t = Tableau::from_labels(&[FrameLabel::XPlus, FrameLabel::ZPlus]);
        assert_eq!(t.stabilizer(0), &ps("XI"));
        assert_eq!(t.stabilizer(1), &ps("IZ"));
        t.validate().unwrap();

        let t = Tableau::from_labels(&[FrameLabel::YMinus]);
        assert_eq!(t.stabilizer(0), &ps("-Y"));
        assert_eq!(t.expectation_pauli(&ps("Y")).unwrap(), -1);
    }

    #[test]
    fn hadamard_and_bell() {
        let mut t = Tableau::zero_state(1);
        t.apply_gate(&CliffordGate::H(0)).unwrap();
        assert_eq!(t.stabilizer(0), &ps("X"));

        let mut bell = Tableau::zero_state(2);
        bell.apply_gate(&CliffordGate::H(0)).unwrap();
        bell.apply_gate(&CliffordGate::Cnot(0, 1)).unwrap();
        assert_eq!(bell.expectation_pauli(&ps("XX")).unwrap(), 1);
        assert_eq!(bell.expectation_pauli(&ps("ZZ")).unwrap(), 1);
        assert_eq!(bell.expectation_pauli(&ps("ZI")).unwrap(), 0);
        bell.validate().unwrap();
    }

    #[test]
    fn s_on_plus_gives_plus_y() {
        let mut t = Tableau::from_labels(&[FrameLabel::XPlus]);
        t.apply_gate(&CliffordGate::S(0)).unwrap();
        assert_eq!(t.stabilizer(0), &ps("Y"));
    }

    #[test]
    fn deterministic_measurement() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut t = Tableau::zero_state(1);
        let m = t.measure_z(0, &mut rng).unwrap();
        assert_eq!((m.outcome, m.probability), (false, 1.0));

        let mut t = Tableau::from_labels(&[FrameLabel::ZMinus]);
        let m = t.measure_z(0, &mut rng).unwrap();
        assert_eq!((m.outcome, m.probability), (true, 1.0));
    }

    #[test]
    fn random_measurement_is_idempotent() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let mut t = Tableau::from_labels(&[FrameLabel::XPlus]);
        let first = t.measure_z(0, &mut rng).unwrap();
        assert_eq!(first.probability, 0.5);
        let second = t.measure_z(0, &mut rng).unwrap();
        assert_eq!(second.probability, 1.0);
        assert_eq!(second.outcome, first.outcome);
        t.validate().unwrap();
    }

    #[test]
    fn bell_measurements_are_correlated() {
        for seed in 0..20 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut t = Tableau::zero_state(2);
            t.apply_gate(&CliffordGate::H(0)).unwrap();
            t.apply_gate(&CliffordGate::Cnot(0, 1)).unwrap();
            let a = t.measure_z(0, &mut rng).unwrap();
            let b = t.measure_z(1, &mut rng).unwrap();
            assert_eq!(a.probability, 0.5);
            assert_eq!(b.probability, 1.0);
            assert_eq!(a.outcome, b.outcome);
        }
    }

    #[test]
    fn forced_measurement_branches() {
        let mut t = Tableau::from_labels(&[FrameLabel::XPlus]);
        assert_eq!(t.measure_z_forced(0, true).unwrap(), 0.5);
        // Now deterministic: forcing the same bit is certain, the opposite
        // branch is dead.
        assert_eq!(t.measure_z_forced(0, true).unwrap(), 1.0);
        assert_eq!(t.measure_z_forced(0, false).unwrap(), 0.0);
        t.validate().unwrap();
    }

    #[test]
    fn reset_returns_to_zero() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..10 {
            let mut t = Tableau::from_labels(&[FrameLabel::YMinus]);
            t.reset(0, &mut rng).unwrap();
            assert_eq!(t.peek_z(0).unwrap(), Some(false));
        }
    }

    #[test]
    fn seeded_outcomes_reproduce() {
        let run = || {
            let mut rng = ChaCha8Rng::seed_from_u64(42);
            let mut t = Tableau::zero_state(4);
            let mut bits = Vec::new();
            for q in 0..4 {
                t.apply_gate(&CliffordGate::H(q)).unwrap();
            }
            t.apply_gate(&CliffordGate::Cz(0, 1)).unwrap();
            t.apply_gate(&CliffordGate::Cnot(1, 2)).unwrap();
            for q in 0..4 {
                bits.push(t.measure_z(q, &mut rng).unwrap().outcome);
            }
            bits
        };
        assert_eq!(run(), run());
    }

    #[test]
    fn expectation_of_identity_and_missing() {
        let t = Tableau::zero_state(2);
        assert_eq!(t.expectation_pauli(&ps("II")).unwrap(), 1);
        assert_eq!(t.expectation_pauli(&ps("-II")).unwrap(), -1);
        assert_eq!(t.expectation_pauli(&ps("XI")).unwrap(), 0);
        assert_eq!(t.expectation_pauli(&ps("ZZ")).unwrap(), 1);
        assert_eq!(t.expectation_pauli(&ps("-ZI")).unwrap(), -1);
        assert!(t.expectation_pauli(&ps("Z")).is_err());
    }

    #[test]
    fn dump_lists_destabilizers_then_stabilizers() {
        let t = Tableau::zero_state(2);
        assert_eq!(t.dump(), "+XI\n+IX\n+ZI\n+IZ\n");
    }

    #[test]
    fn invariants_hold_after_random_circuits() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..50 {
            let n = rng.gen_range(1..=5);
            let mut t = Tableau::zero_state(n);
            for _ in 0..40 {
                let g = crate::random::random_gate(n, &mut rng);
                t.apply_gate(&g).unwrap();
                if rng.gen_bool(0.1) {
                    t.measure_z(rng.gen_range(0..n), &mut rng).unwrap();
                }
            }
            t.validate().unwrap();
        }
    }
}
