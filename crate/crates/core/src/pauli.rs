//! Phased Pauli-string algebra: multiplication, commutation, and conjugation
//! by Clifford gates.
//!
//! A [`PauliString`] is `i^k · P_0 ⊗ P_1 ⊗ … ⊗ P_{n-1}` with each factor in
//! {I, X, Y, Z} and `k` tracked mod 4. Factors are encoded as (x, z) bit
//! pairs with `Y = i·X·Z`, so the per-factor `i` of every Y is folded into
//! the factor itself, not into `k`. Bits are packed into `u64` words; the
//! public interface is index-based only.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

const WORD_BITS: usize = 64;

fn words_for(n: usize) -> usize {
    n.div_ceil(WORD_BITS)
}

/// Single-qubit Pauli factor.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Pauli {
    I,
    X,
    Y,
    Z,
}

impl Pauli {
    pub fn from_bits(x: bool, z: bool) -> Self {
        match (x, z) {
            (false, false) => Pauli::I,
            (true, false) => Pauli::X,
            (true, true) => Pauli::Y,
            (false, true) => Pauli::Z,
        }
    }

    pub fn bits(self) -> (bool, bool) {
        match self {
            Pauli::I => (false, false),
            Pauli::X => (true, false),
            Pauli::Y => (true, true),
            Pauli::Z => (false, true),
        }
    }

    pub fn letter(self) -> char {
        match self {
            Pauli::I => 'I',
            Pauli::X => 'X',
            Pauli::Y => 'Y',
            Pauli::Z => 'Z',
        }
    }
}

/// An n-qubit Pauli operator with a global `i^k` phase.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct PauliString {
    num_qubits: usize,
    x_words: Vec<u64>,
    z_words: Vec<u64>,
    phase_exponent: u8,
}

impl PauliString {
    /// The identity string on `n` qubits.
    pub fn identity(n: usize) -> Self {
        assert!(n > 0, "PauliString needs at least one qubit");
        PauliString {
            num_qubits: n,
            x_words: vec![0; words_for(n)],
            z_words: vec![0; words_for(n)],
            phase_exponent: 0,
        }
    }

    /// A single-qubit factor embedded at `qubit`, phase +1.
    pub fn single(n: usize, qubit: usize, p: Pauli) -> Self {
        let mut s = PauliString::identity(n);
        s.set_pauli(qubit, p);
        s
    }

    /// Build from factors, phase +1.
    pub fn from_paulis(paulis: &[Pauli]) -> Self {
        let mut s = PauliString::identity(paulis.len());
        for (i, &p) in paulis.iter().enumerate() {
            s.set_pauli(i, p);
        }
        s
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    /// Global phase exponent k of `i^k`, in {0, 1, 2, 3}.
    pub fn phase_exponent(&self) -> u8 {
        self.phase_exponent
    }

    pub fn set_phase_exponent(&mut self, k: u8) {
        self.phase_exponent = k & 3;
    }

    pub fn x_bit(&self, qubit: usize) -> bool {
        self.x_words[qubit / WORD_BITS] >> (qubit % WORD_BITS) & 1 == 1
    }

    pub fn z_bit(&self, qubit: usize) -> bool {
        self.z_words[qubit / WORD_BITS] >> (qubit % WORD_BITS) & 1 == 1
    }

    pub fn pauli_at(&self, qubit: usize) -> Pauli {
        Pauli::from_bits(self.x_bit(qubit), self.z_bit(qubit))
    }

    pub fn set_pauli(&mut self, qubit: usize, p: Pauli) {
        assert!(qubit < self.num_qubits);
        let (x, z) = p.bits();
        let (w, b) = (qubit / WORD_BITS, qubit % WORD_BITS);
        self.x_words[w] = self.x_words[w] & !(1 << b) | (u64::from(x) << b);
        self.z_words[w] = self.z_words[w] & !(1 << b) | (u64::from(z) << b);
    }

    pub fn is_identity(&self) -> bool {
        self.phase_exponent == 0 && self.x_words.iter().all(|&w| w == 0) && self.z_words.iter().all(|&w| w == 0)
    }

    /// True when the operator part (ignoring phase) is trivial.
    pub fn is_identity_up_to_phase(&self) -> bool {
        self.x_words.iter().all(|&w| w == 0) && self.z_words.iter().all(|&w| w == 0)
    }

    pub fn same_operator(&self, other: &PauliString) -> bool {
        self.x_words == other.x_words && self.z_words == other.z_words
    }

    /// Number of non-identity factors.
    pub fn weight(&self) -> usize {
        self.x_words
            .iter()
            .zip(&self.z_words)
            .map(|(&x, &z)| (x | z).count_ones() as usize)
            .sum()
    }

    fn check_dims(&self, other: &PauliString) -> Result<()> {
        if self.num_qubits != other.num_qubits {
            return Err(Error::DimensionMismatch(self.num_qubits, other.num_qubits));
        }
        Ok(())
    }

    /// Group product `self · other` with the accumulated `i^k` phase.
    pub fn mul(&self, other: &PauliString) -> Result<PauliString> {
        self.check_dims(other)?;
        let mut out = self.clone();
        out.mul_assign(other);
        Ok(out)
    }

    /// In-place `self ← self · other`. Panics on dimension mismatch.
    pub fn mul_assign(&mut self, other: &PauliString) {
        assert_eq!(self.num_qubits, other.num_qubits);
        // Per factor, the phase picked up by P1·P2 is +i for (X,Y), (Y,Z),
        // (Z,X) and −i for the reversed pairs; word-parallel popcounts keep
        // the exponent exact mod 4.
        let mut k = u32::from(self.phase_exponent) + u32::from(other.phase_exponent);
        for w in 0..self.x_words.len() {
            let (x1, z1) = (self.x_words[w], self.z_words[w]);
            let (x2, z2) = (other.x_words[w], other.z_words[w]);
            let plus = (x1 & !z1 & x2 & z2) | (x1 & z1 & !x2 & z2) | (!x1 & z1 & x2 & !z2);
            let minus = (x1 & z1 & x2 & !z2) | (!x1 & z1 & x2 & z2) | (x1 & !z1 & !x2 & z2);
            k = k.wrapping_add(plus.count_ones());
            k = k.wrapping_add(3 * minus.count_ones());
            self.x_words[w] = x1 ^ x2;
            self.z_words[w] = z1 ^ z2;
        }
        self.phase_exponent = (k % 4) as u8;
    }

    /// Symplectic inner product mod 2: 0 when the operators commute.
    pub fn symplectic_product(&self, other: &PauliString) -> u8 {
        debug_assert_eq!(self.num_qubits, other.num_qubits);
        let mut acc = 0u32;
        for w in 0..self.x_words.len() {
            acc ^= (self.x_words[w] & other.z_words[w]).count_ones()
                ^ (self.z_words[w] & other.x_words[w]).count_ones();
        }
        (acc & 1) as u8
    }

    /// True iff the two operators commute (phase-independent).
    pub fn commutes(&self, other: &PauliString) -> Result<bool> {
        self.check_dims(other)?;
        Ok(self.symplectic_product(other) == 0)
    }

    /// Conjugate in place by a Clifford gate: `self ← g · self · g†`.
    pub fn conjugate_by_gate(&mut self, gate: &CliffordGate) -> Result<()> {
        for &t in gate.targets().iter() {
            if t >= self.num_qubits {
                return Err(Error::QubitOutOfRange { index: t, num_qubits: self.num_qubits });
            }
        }
        let flip = |k: &mut u8| *k = (*k + 2) & 3;
        match *gate {
            CliffordGate::H(q) => {
                let (x, z) = (self.x_bit(q), self.z_bit(q));
                if x && z {
                    flip(&mut self.phase_exponent);
                }
                self.set_pauli(q, Pauli::from_bits(z, x));
            }
            CliffordGate::S(q) => {
                let (x, z) = (self.x_bit(q), self.z_bit(q));
                if x && z {
                    flip(&mut self.phase_exponent);
                }
                self.set_pauli(q, Pauli::from_bits(x, z ^ x));
            }
            CliffordGate::SDag(q) => {
                let (x, z) = (self.x_bit(q), self.z_bit(q));
                if x && !z {
                    flip(&mut self.phase_exponent);
                }
                self.set_pauli(q, Pauli::from_bits(x, z ^ x));
            }
            CliffordGate::X(q) => {
                if self.z_bit(q) {
                    flip(&mut self.phase_exponent);
                }
            }
            CliffordGate::Y(q) => {
                if self.x_bit(q) ^ self.z_bit(q) {
                    flip(&mut self.phase_exponent);
                }
            }
            CliffordGate::Z(q) => {
                if self.x_bit(q) {
                    flip(&mut self.phase_exponent);
                }
            }
            CliffordGate::SqrtX(q) => {
                let (x, z) = (self.x_bit(q), self.z_bit(q));
                if z && !x {
                    flip(&mut self.phase_exponent);
                }
                self.set_pauli(q, Pauli::from_bits(x ^ z, z));
            }
            CliffordGate::SqrtXDag(q) => {
                let (x, z) = (self.x_bit(q), self.z_bit(q));
                if z && x {
                    flip(&mut self.phase_exponent);
                }
                self.set_pauli(q, Pauli::from_bits(x ^ z, z));
            }
            CliffordGate::Cnot(c, t) => {
                let (xc, zc) = (self.x_bit(c), self.z_bit(c));
                let (xt, zt) = (self.x_bit(t), self.z_bit(t));
                if xc && zt && !(xt ^ zc) {
                    flip(&mut self.phase_exponent);
                }
                self.set_pauli(t, Pauli::from_bits(xt ^ xc, zt));
                self.set_pauli(c, Pauli::from_bits(xc, zc ^ zt));
            }
            CliffordGate::Cz(a, b) => {
                let (xa, za) = (self.x_bit(a), self.z_bit(a));
                let (xb, zb) = (self.x_bit(b), self.z_bit(b));
                if xa && xb && (za ^ zb) {
                    flip(&mut self.phase_exponent);
                }
                self.set_pauli(a, Pauli::from_bits(xa, za ^ xb));
                self.set_pauli(b, Pauli::from_bits(xb, zb ^ xa));
            }
            CliffordGate::Swap(a, b) => {
                let pa = self.pauli_at(a);
                let pb = self.pauli_at(b);
                self.set_pauli(a, pb);
                self.set_pauli(b, pa);
            }
        }
        Ok(())
    }

    /// `g · self · g†` as a new string.
    pub fn conjugated_by_gate(&self, gate: &CliffordGate) -> Result<PauliString> {
        let mut out = self.clone();
        out.conjugate_by_gate(gate)?;
        Ok(out)
    }
}

impl fmt::Display for PauliString {
    /// Renders as e.g. `+iXZIY`: phase prefix from {+, +i, -, -i}, one
    /// letter per qubit.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let prefix = match self.phase_exponent {
            0 => "+",
            1 => "+i",
            2 => "-",
            _ => "-i",
        };
        write!(f, "{prefix}")?;
        for q in 0..self.num_qubits {
            write!(f, "{}", self.pauli_at(q).letter())?;
        }
        Ok(())
    }
}

impl fmt::Debug for PauliString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "PauliString({self})")
    }
}

impl FromStr for PauliString {
    type Err = Error;

    fn from_str(s: &str) -> Result<PauliString> {
        let bad = |msg: &str| Error::Parse { line: 0, msg: msg.to_string() };
        let (phase, rest) = if let Some(r) = s.strip_prefix("+i") {
            (1u8, r)
        } else if let Some(r) = s.strip_prefix("-i") {
            (3u8, r)
        } else if let Some(r) = s.strip_prefix('+') {
            (0u8, r)
        } else if let Some(r) = s.strip_prefix('-') {
            (2u8, r)
        } else {
            (0u8, s)
        };
        if rest.is_empty() {
            return Err(bad("empty Pauli string"));
        }
        let mut paulis = Vec::with_capacity(rest.len());
        for ch in rest.chars() {
            paulis.push(match ch {
                'I' => Pauli::I,
                'X' => Pauli::X,
                'Y' => Pauli::Y,
                'Z' => Pauli::Z,
                _ => return Err(bad(&format!("invalid Pauli letter `{ch}`"))),
            });
        }
        let mut out = PauliString::from_paulis(&paulis);
        out.set_phase_exponent(phase);
        Ok(out)
    }
}

/// Gate kind without targets, used for mnemonics and body-content checks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, serde::Serialize, serde::Deserialize)]
pub enum GateKind {
    H,
    S,
    SDag,
    X,
    Y,
    Z,
    SqrtX,
    SqrtXDag,
    Cnot,
    Cz,
    Swap,
}

impl GateKind {
    pub fn mnemonic(self) -> &'static str {
        match self {
            GateKind::H => "H",
            GateKind::S => "S",
            GateKind::SDag => "SDG",
            GateKind::X => "X",
            GateKind::Y => "Y",
            GateKind::Z => "Z",
            GateKind::SqrtX => "SX",
            GateKind::SqrtXDag => "SXDG",
            GateKind::Cnot => "CNOT",
            GateKind::Cz => "CZ",
            GateKind::Swap => "SWAP",
        }
    }

    pub fn from_mnemonic(m: &str) -> Option<Self> {
        Some(match m {
            "H" => GateKind::H,
            "S" => GateKind::S,
            "SDG" => GateKind::SDag,
            "X" => GateKind::X,
            "Y" => GateKind::Y,
            "Z" => GateKind::Z,
            "SX" => GateKind::SqrtX,
            "SXDG" => GateKind::SqrtXDag,
            "CNOT" => GateKind::Cnot,
            "CZ" => GateKind::Cz,
            "SWAP" => GateKind::Swap,
            _ => return None,
        })
    }

    pub fn arity(self) -> usize {
        match self {
            GateKind::Cnot | GateKind::Cz | GateKind::Swap => 2,
            _ => 1,
        }
    }
}

/// A Clifford gate applied to explicit qubit targets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CliffordGate {
    H(usize),
    S(usize),
    SDag(usize),
    X(usize),
    Y(usize),
    Z(usize),
    SqrtX(usize),
    SqrtXDag(usize),
    Cnot(usize, usize),
    Cz(usize, usize),
    Swap(usize, usize),
}

impl CliffordGate {
    pub fn new(kind: GateKind, targets: &[usize]) -> Result<Self> {
        let arity_err = || Error::Parse {
            line: 0,
            msg: format!("{} takes {} target(s), got {}", kind.mnemonic(), kind.arity(), targets.len()),
        };
        if targets.len() != kind.arity() {
            return Err(arity_err());
        }
        if kind.arity() == 2 && targets[0] == targets[1] {
            return Err(Error::Parse {
                line: 0,
                msg: format!("{} targets must be distinct", kind.mnemonic()),
            });
        }
        Ok(match kind {
            GateKind::H => CliffordGate::H(targets[0]),
            GateKind::S => CliffordGate::S(targets[0]),
            GateKind::SDag => CliffordGate::SDag(targets[0]),
            GateKind::X => CliffordGate::X(targets[0]),
            GateKind::Y => CliffordGate::Y(targets[0]),
            GateKind::Z => CliffordGate::Z(targets[0]),
            GateKind::SqrtX => CliffordGate::SqrtX(targets[0]),
            GateKind::SqrtXDag => CliffordGate::SqrtXDag(targets[0]),
            GateKind::Cnot => CliffordGate::Cnot(targets[0], targets[1]),
            GateKind::Cz => CliffordGate::Cz(targets[0], targets[1]),
            GateKind::Swap => CliffordGate::Swap(targets[0], targets[1]),
        })
    }

    pub fn kind(&self) -> GateKind {
        match self {
            CliffordGate::H(_) => GateKind::H,
            CliffordGate::S(_) => GateKind::S,
            CliffordGate::SDag(_) => GateKind::SDag,
            CliffordGate::X(_) => GateKind::X,
            CliffordGate::Y(_) => GateKind::Y,
            CliffordGate::Z(_) => GateKind::Z,
            CliffordGate::SqrtX(_) => GateKind::SqrtX,
            CliffordGate::SqrtXDag(_) => GateKind::SqrtXDag,
            CliffordGate::Cnot(..) => GateKind::Cnot,
            CliffordGate::Cz(..) => GateKind::Cz,
            CliffordGate::Swap(..) => GateKind::Swap,
        }
    }

    pub fn targets(&self) -> Vec<usize> {
        match *self {
            CliffordGate::H(q)
            | CliffordGate::S(q)
            | CliffordGate::SDag(q)
            | CliffordGate::X(q)
            | CliffordGate::Y(q)
            | CliffordGate::Z(q)
            | CliffordGate::SqrtX(q)
            | CliffordGate::SqrtXDag(q) => vec![q],
            CliffordGate::Cnot(a, b) | CliffordGate::Cz(a, b) | CliffordGate::Swap(a, b) => vec![a, b],
        }
    }

    /// The inverse gate (same targets).
    pub fn inverse(&self) -> CliffordGate {
        match *self {
            CliffordGate::S(q) => CliffordGate::SDag(q),
            CliffordGate::SDag(q) => CliffordGate::S(q),
            CliffordGate::SqrtX(q) => CliffordGate::SqrtXDag(q),
            CliffordGate::SqrtXDag(q) => CliffordGate::SqrtX(q),
            g => g,
        }
    }

    /// Remap targets through `f` (used when inlining gadget bodies).
    pub fn map_targets(&self, f: impl Fn(usize) -> usize) -> CliffordGate {
        match *self {
            CliffordGate::H(q) => CliffordGate::H(f(q)),
            CliffordGate::S(q) => CliffordGate::S(f(q)),
            CliffordGate::SDag(q) => CliffordGate::SDag(f(q)),
            CliffordGate::X(q) => CliffordGate::X(f(q)),
            CliffordGate::Y(q) => CliffordGate::Y(f(q)),
            CliffordGate::Z(q) => CliffordGate::Z(f(q)),
            CliffordGate::SqrtX(q) => CliffordGate::SqrtX(f(q)),
            CliffordGate::SqrtXDag(q) => CliffordGate::SqrtXDag(f(q)),
            CliffordGate::Cnot(a, b) => CliffordGate::Cnot(f(a), f(b)),
            CliffordGate::Cz(a, b) => CliffordGate::Cz(f(a), f(b)),
            CliffordGate::Swap(a, b) => CliffordGate::Swap(f(a), f(b)),
        }
    }
}

impl fmt::Display for CliffordGate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.kind().mnemonic())?;
        for t in self.targets() {
            write!(f, " {t}")?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ps(s: &str) -> PauliString {
        s.parse().unwrap()
    }

    #[test]
    fn single_qubit_products() {
        assert_eq!(ps("X").mul(&ps("Y")).unwrap(), ps("+iZ"));
        assert_eq!(ps("Y").mul(&ps("X")).unwrap(), ps("-iZ"));
        assert_eq!(ps("Z").mul(&ps("X")).unwrap(), ps("+iY"));
        assert_eq!(ps("X").mul(&ps("Z")).unwrap(), ps("-iY"));
        assert_eq!(ps("Y").mul(&ps("Z")).unwrap(), ps("+iX"));
        assert_eq!(ps("X").mul(&ps("X")).unwrap(), ps("I"));
        assert_eq!(ps("Y").mul(&ps("Y")).unwrap(), ps("I"));
    }

    #[test]
    fn identity_is_neutral() {
        for p in ["XZ", "-YY", "+iIX", "ZI"] {
            assert_eq!(ps("II").mul(&ps(p)).unwrap(), ps(p));
            assert_eq!(ps(p).mul(&ps("II")).unwrap(), ps(p));
        }
    }

    #[test]
    fn two_qubit_product() {
        // (X⊗Z)·(X⊗X) = I ⊗ (Z·X) = i(I⊗Y)
        assert_eq!(ps("XZ").mul(&ps("XX")).unwrap(), ps("+iIY"));
    }

    #[test]
    fn commutation() {
        assert!(!ps("X").commutes(&ps("Z")).unwrap());
        assert!(ps("XX").commutes(&ps("ZZ")).unwrap());
        assert!(ps("XYZ").commutes(&ps("III")).unwrap());
        assert!(ps("X").commutes(&ps("X")).unwrap());
        assert!(!ps("XI").commutes(&ps("YI")).unwrap());
    }

    #[test]
    fn dimension_mismatch_is_an_error() {
        assert!(ps("X").mul(&ps("XX")).is_err());
        assert!(ps("X").commutes(&ps("XX")).is_err());
    }

    #[test]
    fn conjugation_basics() {
        let conj = |g: CliffordGate, p: &str| ps(p).conjugated_by_gate(&g).unwrap();
        assert_eq!(conj(CliffordGate::H(0), "X"), ps("Z"));
        assert_eq!(conj(CliffordGate::H(0), "Z"), ps("X"));
        assert_eq!(conj(CliffordGate::H(0), "Y"), ps("-Y"));
        assert_eq!(conj(CliffordGate::S(0), "X"), ps("Y"));
        assert_eq!(conj(CliffordGate::S(0), "Y"), ps("-X"));
        assert_eq!(conj(CliffordGate::SDag(0), "X"), ps("-Y"));
        assert_eq!(conj(CliffordGate::SqrtX(0), "Z"), ps("-Y"));
        assert_eq!(conj(CliffordGate::SqrtX(0), "Y"), ps("Z"));
        assert_eq!(conj(CliffordGate::Cnot(0, 1), "XI"), ps("XX"));
        assert_eq!(conj(CliffordGate::Cnot(0, 1), "IZ"), ps("ZZ"));
        assert_eq!(conj(CliffordGate::Cz(0, 1), "XY"), ps("-YX"));
        assert_eq!(conj(CliffordGate::Swap(0, 1), "XZ"), ps("ZX"));
    }

    #[test]
    fn conjugation_out_of_range() {
        let mut p = ps("X");
        assert!(p.conjugate_by_gate(&CliffordGate::H(1)).is_err());
    }

    #[test]
    fn render_parse_roundtrip() {
        for s in ["+XZIY", "-iZZ", "+iI", "-X"] {
            assert_eq!(ps(s).to_string(), s);
        }
        // Bare strings parse with an implied "+".
        assert_eq!(ps("XZ").to_string(), "+XZ");
        assert!("Q".parse::<PauliString>().is_err());
        assert!("+i".parse::<PauliString>().is_err());
    }

    #[test]
    fn gate_construction_checks_arity() {
        assert!(CliffordGate::new(GateKind::Cnot, &[0]).is_err());
        assert!(CliffordGate::new(GateKind::Cnot, &[1, 1]).is_err());
        assert!(CliffordGate::new(GateKind::H, &[0, 1]).is_err());
        assert!(CliffordGate::new(GateKind::Swap, &[0, 2]).is_ok());
    }

    #[test]
    fn wide_strings_cross_word_boundaries() {
        let n = 130;
        let mut a = PauliString::single(n, 0, Pauli::X);
        a.set_pauli(100, Pauli::Z);
        let mut b = PauliString::single(n, 100, Pauli::X);
        b.set_pauli(129, Pauli::Y);
        // Z at 100 times X at 100 contributes +i.
        let prod = a.mul(&b).unwrap();
        assert_eq!(prod.phase_exponent(), 1);
        assert_eq!(prod.pauli_at(0), Pauli::X);
        assert_eq!(prod.pauli_at(100), Pauli::Y);
        assert_eq!(prod.pauli_at(129), Pauli::Y);
        assert!(!a.commutes(&b).unwrap());
    }
}
