//! Decompose a small ancilla density matrix into the Pauli basis and from
//! there into a signed mixture over the six-state stabilizer frame.
//!
//! The frame expansion uses
//! I = |0⟩⟨0| + |1⟩⟨1|,  X = |+⟩⟨+| − |−⟩⟨−|,
//! Y = |i⟩⟨i| − |−i⟩⟨−i|,  Z = |0⟩⟨0| − |1⟩⟨1|,
//! distributed over tensor factors and collected over the 6^q frame.
//! Coefficients come from the Hilbert–Schmidt formula c_P = Tr(P·ρ)/2^q,
//! which is convention-independent and oracle-checkable.

use std::collections::BTreeMap;

use ndarray::Array2;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::dense::{pauli_matrix, DensityMatrix, StateVector};
use crate::error::{Error, Result};
use crate::pauli::{Pauli, PauliString};
use crate::tableau::FrameLabel;

/// Maximum ancilla size accepted by the decomposer (≤ 216 frame terms).
pub const MAX_DECOMP_QUBITS: usize = 3;

/// Frame weights with |w| below this are numerical noise and dropped.
pub const WEIGHT_PRUNE_EPS: f64 = 1e-13;

/// ρ = Σ_P c_P · P over phase-free Pauli strings; coefficients are real
/// for Hermitian ρ.
#[derive(Debug, Clone, PartialEq)]
pub struct PauliDecomposition {
    pub num_qubits: usize,
    /// Keyed by the Pauli text rendering without phase prefix, e.g. "XI".
    pub coefficients: BTreeMap<String, f64>,
}

/// ρ = Σ_k w_k |labels_k⟩⟨labels_k| with signed real weights summing to 1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrameDecomposition {
    pub num_qubits: usize,
    pub terms: Vec<FrameTerm>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrameTerm {
    pub weight: f64,
    pub labels: Vec<FrameLabel>,
}

impl Serialize for PauliDecomposition {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        use serde::ser::SerializeStruct;
        let mut st = s.serialize_struct("PauliDecomposition", 2)?;
        st.serialize_field("num_qubits", &self.num_qubits)?;
        st.serialize_field("coefficients", &self.coefficients)?;
        st.end()
    }
}

impl<'de> Deserialize<'de> for PauliDecomposition {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        struct Raw {
            num_qubits: usize,
            coefficients: BTreeMap<String, f64>,
        }
        let raw = Raw::deserialize(d)?;
        Ok(PauliDecomposition { num_qubits: raw.num_qubits, coefficients: raw.coefficients })
    }
}

fn pauli_key(p: &PauliString) -> String {
    (0..p.num_qubits()).map(|q| p.pauli_at(q).letter()).collect()
}

fn paulis_for_key(key: &str) -> Result<PauliString> {
    key.parse::<PauliString>()
}

/// Enumerate all 4^q phase-free Pauli strings on q qubits.
fn all_pauli_strings(q: usize) -> Vec<PauliString> {
    let mut out = Vec::with_capacity(1 << (2 * q));
    for code in 0..(1usize << (2 * q)) {
        let mut p = PauliString::identity(q);
        for qubit in 0..q {
            let f = match code >> (2 * qubit) & 3 {
                0 => Pauli::I,
                1 => Pauli::X,
                2 => Pauli::Y,
                _ => Pauli::Z,
            };
            p.set_pauli(qubit, f);
        }
        out.push(p);
    }
    out
}

/// Hilbert–Schmidt coefficients c_P = Tr(P·ρ)/2^q for every phase-free P.
pub fn pauli_coefficients(rho: &DensityMatrix) -> Result<PauliDecomposition> {
    let q = rho.num_qubits();
    if q > MAX_DECOMP_QUBITS {
        return Err(Error::TooLarge(format!("decomposition capped at {MAX_DECOMP_QUBITS} ancilla qubits")));
    }
    let dim = rho.dim();
    let scale = 1.0 / dim as f64;
    let mut coefficients = BTreeMap::new();
    for p in all_pauli_strings(q) {
        let m = pauli_matrix(&p);
        let mut tr = Complex64::new(0.0, 0.0);
        for i in 0..dim {
            for k in 0..dim {
                tr += m[(i, k)] * rho.entries()[(k, i)];
            }
        }
        if tr.im.abs() > 1e-10 {
            return Err(Error::InvalidDensity(format!(
                "Tr(P·ρ) has imaginary part {:.3e} for P = {}",
                tr.im,
                pauli_key(&p)
            )));
        }
        coefficients.insert(pauli_key(&p), tr.re * scale);
    }
    Ok(PauliDecomposition { num_qubits: q, coefficients })
}

impl PauliDecomposition {
    /// Coefficient of a Pauli key such as "X" or "ZI", zero if absent.
    pub fn coefficient(&self, key: &str) -> f64 {
        self.coefficients.get(key).copied().unwrap_or(0.0)
    }
}

/// Per-factor frame expansion: which labels appear and with which sign.
fn factor_terms(p: Pauli) -> &'static [(FrameLabel, f64)] {
    match p {
        Pauli::I => &[(FrameLabel::ZPlus, 1.0), (FrameLabel::ZMinus, 1.0)],
        Pauli::X => &[(FrameLabel::XPlus, 1.0), (FrameLabel::XMinus, -1.0)],
        Pauli::Y => &[(FrameLabel::YPlus, 1.0), (FrameLabel::YMinus, -1.0)],
        Pauli::Z => &[(FrameLabel::ZPlus, 1.0), (FrameLabel::ZMinus, -1.0)],
    }
}

/// Expand a Pauli decomposition over the six-state frame, collecting like
/// terms and pruning weights below [`WEIGHT_PRUNE_EPS`].
pub fn stabilizer_frame(decomp: &PauliDecomposition) -> FrameDecomposition {
    let q = decomp.num_qubits;
    let mut collected: BTreeMap<Vec<FrameLabel>, f64> = BTreeMap::new();
    for (key, &coeff) in &decomp.coefficients {
        if coeff == 0.0 {
            continue;
        }
        let p = paulis_for_key(key).expect("keys are rendered Pauli strings");
        // Distribute over tensor factors.
        let mut partial: Vec<(Vec<FrameLabel>, f64)> = vec![(Vec::new(), coeff)];
        for qubit in 0..q {
            let mut next = Vec::with_capacity(partial.len() * 2);
            for (labels, w) in &partial {
                for &(label, sign) in factor_terms(p.pauli_at(qubit)) {
                    let mut l = labels.clone();
                    l.push(label);
                    next.push((l, w * sign));
                }
            }
            partial = next;
        }
        for (labels, w) in partial {
            *collected.entry(labels).or_insert(0.0) += w;
        }
    }
    let terms = collected
        .into_iter()
        .filter(|(_, w)| w.abs() >= WEIGHT_PRUNE_EPS)
        .map(|(labels, weight)| FrameTerm { weight, labels })
        .collect();
    FrameDecomposition { num_qubits: q, terms }
}

impl FrameDecomposition {
    pub fn weight_sum(&self) -> f64 {
        self.terms.iter().map(|t| t.weight).sum()
    }

    pub fn term_count(&self) -> usize {
        self.terms.len()
    }

    pub fn weight_of(&self, labels: &[FrameLabel]) -> f64 {
        self.terms
            .iter()
            .find(|t| t.labels == labels)
            .map(|t| t.weight)
            .unwrap_or(0.0)
    }
}

/// Rebuild the dense matrix from a Pauli decomposition.
pub fn reconstruct_pauli(decomp: &PauliDecomposition) -> DensityMatrix {
    let dim = 1usize << decomp.num_qubits;
    let mut m: Array2<Complex64> = Array2::zeros((dim, dim));
    for (key, &coeff) in &decomp.coefficients {
        if coeff == 0.0 {
            continue;
        }
        let p = paulis_for_key(key).expect("valid key");
        let pm = pauli_matrix(&p);
        for i in 0..dim {
            for j in 0..dim {
                m[(i, j)] += coeff * pm[(i, j)];
            }
        }
    }
    DensityMatrix::from_parts(decomp.num_qubits, m)
}

/// Rebuild the dense matrix from a frame decomposition.
pub fn reconstruct_frame(decomp: &FrameDecomposition) -> DensityMatrix {
    let dim = 1usize << decomp.num_qubits;
    let mut m: Array2<Complex64> = Array2::zeros((dim, dim));
    for term in &decomp.terms {
        let mut state = StateVector::frame_state(term.labels[0]);
        for &label in &term.labels[1..] {
            state = state.tensor(&StateVector::frame_state(label)).expect("small");
        }
        let amps = state.amplitudes();
        for i in 0..dim {
            for j in 0..dim {
                m[(i, j)] += term.weight * amps[i] * amps[j].conj();
            }
        }
    }
    DensityMatrix::from_parts(decomp.num_qubits, m)
}

/// Max entrywise distance between two matrices of equal shape.
pub fn max_entry_distance(a: &DensityMatrix, b: &DensityMatrix) -> f64 {
    let dim = a.dim();
    let mut worst: f64 = 0.0;
    for i in 0..dim {
        for j in 0..dim {
            worst = worst.max((a.entries()[(i, j)] - b.entries()[(i, j)]).norm());
        }
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn pure_density(alpha: Complex64, beta: Complex64) -> DensityMatrix {
        StateVector::qubit(alpha, beta).unwrap().density()
    }

    #[test]
    fn zero_state_coefficients() {
        let rho = pure_density(Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0));
        let d = pauli_coefficients(&rho).unwrap();
        assert!((d.coefficient("I") - 0.5).abs() < 1e-15);
        assert!((d.coefficient("Z") - 0.5).abs() < 1e-15);
        assert!(d.coefficient("X").abs() < 1e-15);
        assert!(d.coefficient("Y").abs() < 1e-15);
    }

    #[test]
    fn maximally_mixed_is_identity_only() {
        let d = pauli_coefficients(&DensityMatrix::maximally_mixed(1)).unwrap();
        assert!((d.coefficient("I") - 0.5).abs() < 1e-15);
        for k in ["X", "Y", "Z"] {
            assert!(d.coefficient(k).abs() < 1e-15);
        }
        let f = stabilizer_frame(&d);
        assert_eq!(f.term_count(), 2);
        assert!((f.weight_of(&[FrameLabel::ZPlus]) - 0.5).abs() < 1e-15);
        assert!((f.weight_of(&[FrameLabel::ZMinus]) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn t_magic_state_coefficients() {
        // (|0⟩ + e^{iπ/4}|1⟩)/√2: I and X,Y carry √2/4; Z vanishes. The X
        // coefficient also equals (αβ* + α*β)/2.
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let alpha = Complex64::new(h, 0.0);
        let beta = Complex64::from_polar(h, std::f64::consts::FRAC_PI_4);
        let rho = pure_density(alpha, beta);
        let d = pauli_coefficients(&rho).unwrap();
        let s = 2f64.sqrt() / 4.0;
        assert!((d.coefficient("I") - 0.5).abs() < 1e-14);
        assert!((d.coefficient("X") - s).abs() < 1e-14);
        assert!((d.coefficient("Y") - s).abs() < 1e-14);
        assert!(d.coefficient("Z").abs() < 1e-14);
        let b_plus = (alpha * beta.conj() + alpha.conj() * beta) / 2.0;
        assert!((d.coefficient("X") - b_plus.re).abs() < 1e-14);

        let f = stabilizer_frame(&d);
        assert_eq!(f.term_count(), 6);
        assert!((f.weight_sum() - 1.0).abs() < 1e-12);
        assert!((f.weight_of(&[FrameLabel::ZPlus]) - 0.5).abs() < 1e-14);
        assert!((f.weight_of(&[FrameLabel::ZMinus]) - 0.5).abs() < 1e-14);
        assert!((f.weight_of(&[FrameLabel::XPlus]) - s).abs() < 1e-14);
        assert!((f.weight_of(&[FrameLabel::XMinus]) + s).abs() < 1e-14);
        assert!((f.weight_of(&[FrameLabel::YPlus]) - s).abs() < 1e-14);
        assert!((f.weight_of(&[FrameLabel::YMinus]) + s).abs() < 1e-14);
        assert!(max_entry_distance(&reconstruct_frame(&f), &rho) < 1e-12);
    }

    #[test]
    fn pure_state_matches_population_formulas() {
        // I and Z coefficients are (|α|²±|β|²)/2 for random pure states.
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for _ in 0..50 {
            let s = crate::dense::random_pure_state(1, &mut rng);
            let (alpha, beta) = (s.amplitudes()[0], s.amplitudes()[1]);
            let d = pauli_coefficients(&s.density()).unwrap();
            let a_plus = (alpha.norm_sqr() + beta.norm_sqr()) / 2.0;
            let a_minus = (alpha.norm_sqr() - beta.norm_sqr()) / 2.0;
            let b_plus = ((alpha * beta.conj() + alpha.conj() * beta) / 2.0).re;
            assert!((d.coefficient("I") - a_plus).abs() < 1e-12);
            assert!((d.coefficient("Z") - a_minus).abs() < 1e-12);
            assert!((d.coefficient("X") - b_plus).abs() < 1e-12);
        }
    }

    #[test]
    fn zero_state_frame_collapses_to_single_term() {
        let rho = pure_density(Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0));
        let f = stabilizer_frame(&pauli_coefficients(&rho).unwrap());
        assert_eq!(f.term_count(), 1);
        assert!((f.weight_of(&[FrameLabel::ZPlus]) - 1.0).abs() < 1e-14);
    }

    #[test]
    fn roundtrips_on_random_states() {
        let mut rng = ChaCha8Rng::seed_from_u64(33);
        for _ in 0..30 {
            for q in 1..=2 {
                let rho = crate::dense::random_density(q, &mut rng);
                let d = pauli_coefficients(&rho).unwrap();
                assert!(max_entry_distance(&reconstruct_pauli(&d), &rho) < 1e-12);
                let f = stabilizer_frame(&d);
                assert!((f.weight_sum() - 1.0).abs() < 1e-12);
                assert!(f.term_count() <= 6usize.pow(q as u32));
                assert!(max_entry_distance(&reconstruct_frame(&f), &rho) < 1e-12);
            }
        }
    }

    #[test]
    fn identity_coefficient_is_trace_normalized() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for q in 1..=3 {
            let rho = crate::dense::random_density(q, &mut rng);
            let d = pauli_coefficients(&rho).unwrap();
            let key = "I".repeat(q);
            assert!((d.coefficient(&key) - 1.0 / (1 << q) as f64).abs() < 1e-12);
        }
    }

    #[test]
    fn too_large_rejected() {
        let rho = DensityMatrix::maximally_mixed(4);
        assert!(pauli_coefficients(&rho).is_err());
    }

    #[test]
    fn json_roundtrip() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let rho = crate::dense::random_density(2, &mut rng);
        let d = pauli_coefficients(&rho).unwrap();
        let f = stabilizer_frame(&d);
        let dj: PauliDecomposition = serde_json::from_str(&serde_json::to_string(&d).unwrap()).unwrap();
        let fj: FrameDecomposition = serde_json::from_str(&serde_json::to_string(&f).unwrap()).unwrap();
        assert_eq!(d, dj);
        assert_eq!(f, fj);
        // Labels serialize as "Z+"-style strings.
        let text = serde_json::to_string(&f).unwrap();
        assert!(text.contains("\"Z+\"") || text.contains("\"Z-\""));
    }
}
