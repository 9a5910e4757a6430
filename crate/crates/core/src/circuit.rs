//! Circuit intermediate representation and its line-oriented text format.
//!
//! Grammar, one instruction per line (blank lines and `#` comment lines
//! ignored):
//!
//! ```text
//! line := "qubits" INT | "bits" INT | GATE idx+ | "T" idx
//!       | "M" idx "->" bit | "IF" bit GATE idx+ | "RESET" idx | "#" comment
//! GATE ∈ {H, S, SDG, X, Y, Z, SX, SXDG, CNOT, CZ, SWAP};  bit := "c" INT
//! ```
//!
//! `T` parses as a non-Clifford instruction whose name is resolved against
//! the gadget library at expansion time. Classical bits are
//! single-assignment.

use std::fmt;

use crate::error::{Error, Result};
use crate::pauli::{CliffordGate, GateKind};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Instruction {
    Gate(CliffordGate),
    /// Named non-Clifford gate, e.g. `T`; replaced by `expand_gadgets`.
    NonClifford { name: String, targets: Vec<usize> },
    MeasureZ { qubit: usize, bit: usize },
    /// Apply `gate` when classical bit `bit` is 1.
    Conditional { bit: usize, gate: CliffordGate },
    Reset { qubit: usize },
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Circuit {
    pub num_qubits: usize,
    pub num_classical_bits: usize,
    pub instructions: Vec<Instruction>,
}

/// A validation finding, tied to the instruction index it refers to.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Diagnostic {
    pub instruction: usize,
    pub message: String,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "instruction {}: {}", self.instruction, self.message)
    }
}

impl Circuit {
    pub fn new(num_qubits: usize) -> Self {
        Circuit { num_qubits, num_classical_bits: 0, instructions: Vec::new() }
    }

    pub fn push_gate(&mut self, gate: CliffordGate) {
        self.instructions.push(Instruction::Gate(gate));
    }

    pub fn push_non_clifford(&mut self, name: &str, targets: &[usize]) {
        self.instructions.push(Instruction::NonClifford { name: name.to_string(), targets: targets.to_vec() });
    }

    pub fn push_measure(&mut self, qubit: usize, bit: usize) {
        self.num_classical_bits = self.num_classical_bits.max(bit + 1);
        self.instructions.push(Instruction::MeasureZ { qubit, bit });
    }

    pub fn push_conditional(&mut self, bit: usize, gate: CliffordGate) {
        self.instructions.push(Instruction::Conditional { bit, gate });
    }

    pub fn push_reset(&mut self, qubit: usize) {
        self.instructions.push(Instruction::Reset { qubit });
    }

    pub fn measurement_count(&self) -> usize {
        self.instructions
            .iter()
            .filter(|i| matches!(i, Instruction::MeasureZ { .. }))
            .count()
    }

    pub fn has_non_clifford(&self) -> bool {
        self.instructions.iter().any(|i| matches!(i, Instruction::NonClifford { .. }))
    }

    /// Qubits touched by an instruction.
    pub fn instruction_qubits(instr: &Instruction) -> Vec<usize> {
        match instr {
            Instruction::Gate(g) | Instruction::Conditional { gate: g, .. } => g.targets(),
            Instruction::NonClifford { targets, .. } => targets.clone(),
            Instruction::MeasureZ { qubit, .. } | Instruction::Reset { qubit } => vec![*qubit],
        }
    }

    /// Re-check every circuit invariant; returns all findings rather than
    /// failing on the first.
    pub fn validate(&self) -> Vec<Diagnostic> {
        let mut diags = Vec::new();
        let mut written = vec![false; self.num_classical_bits];
        if self.num_qubits == 0 {
            diags.push(Diagnostic { instruction: 0, message: "circuit declares zero qubits".into() });
        }
        for (idx, instr) in self.instructions.iter().enumerate() {
            for q in Self::instruction_qubits(instr) {
                if q >= self.num_qubits {
                    diags.push(Diagnostic {
                        instruction: idx,
                        message: format!("qubit index {} out of range ({} qubits)", q, self.num_qubits),
                    });
                }
            }
            match instr {
                Instruction::MeasureZ { bit, .. } => {
                    if *bit >= self.num_classical_bits {
                        diags.push(Diagnostic {
                            instruction: idx,
                            message: format!("bit c{} out of range ({} bits)", bit, self.num_classical_bits),
                        });
                    } else if written[*bit] {
                        diags.push(Diagnostic {
                            instruction: idx,
                            message: format!("bit c{bit} written twice; classical bits are single-assignment"),
                        });
                    } else {
                        written[*bit] = true;
                    }
                }
                Instruction::Conditional { bit, .. } => {
                    if *bit >= self.num_classical_bits || !written[*bit] {
                        diags.push(Diagnostic {
                            instruction: idx,
                            message: format!("conditional reads bit c{bit} before any measurement writes it"),
                        });
                    }
                }
                Instruction::NonClifford { targets, .. } => {
                    let mut sorted = targets.clone();
                    sorted.sort_unstable();
                    sorted.dedup();
                    if sorted.len() != targets.len() {
                        diags.push(Diagnostic { instruction: idx, message: "duplicate targets".into() });
                    }
                }
                _ => {}
            }
        }
        diags
    }

    /// Render in the text grammar; `parse` accepts the output verbatim.
    pub fn render(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!("qubits {}\n", self.num_qubits));
        if self.num_classical_bits > 0 {
            out.push_str(&format!("bits {}\n", self.num_classical_bits));
        }
        for instr in &self.instructions {
            match instr {
                Instruction::Gate(g) => out.push_str(&g.to_string()),
                Instruction::NonClifford { name, targets } => {
                    out.push_str(name);
                    for t in targets {
                        out.push_str(&format!(" {t}"));
                    }
                }
                Instruction::MeasureZ { qubit, bit } => out.push_str(&format!("M {qubit} -> c{bit}")),
                Instruction::Conditional { bit, gate } => out.push_str(&format!("IF c{bit} {gate}")),
                Instruction::Reset { qubit } => out.push_str(&format!("RESET {qubit}")),
            }
            out.push('\n');
        }
        out
    }

    /// Parse the line-oriented text format into a validated circuit.
    pub fn parse(text: &str) -> Result<Circuit> {
        let mut num_qubits: Option<usize> = None;
        let mut declared_bits: usize = 0;
        let mut instructions = Vec::new();
        let mut written_bits: Vec<usize> = Vec::new();

        for (lineno, raw) in text.lines().enumerate() {
            let lineno = lineno + 1;
            let err = |msg: String| Error::Parse { line: lineno, msg };
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let tokens: Vec<&str> = line.split_whitespace().collect();
            let head = tokens[0];

            let parse_idx = |tok: &str| -> Result<usize> {
                tok.parse::<usize>().map_err(|_| err(format!("expected a qubit index, got `{tok}`")))
            };
            let parse_bit = |tok: &str| -> Result<usize> {
                tok.strip_prefix('c')
                    .and_then(|s| s.parse::<usize>().ok())
                    .ok_or_else(|| err(format!("expected a classical bit like `c0`, got `{tok}`")))
            };
            let check_qubit = |q: usize| -> Result<usize> {
                let n = num_qubits.ok_or_else(|| err("`qubits N` must come first".into()))?;
                if q >= n {
                    return Err(err(format!("qubit index {q} out of range ({n} qubits declared)")));
                }
                Ok(q)
            };
            let parse_gate = |toks: &[&str]| -> Result<CliffordGate> {
                let kind = GateKind::from_mnemonic(toks[0])
                    .ok_or_else(|| err(format!("unknown mnemonic `{}`", toks[0])))?;
                if toks.len() - 1 != kind.arity() {
                    return Err(err(format!(
                        "{} takes {} target(s), got {}",
                        kind.mnemonic(),
                        kind.arity(),
                        toks.len() - 1
                    )));
                }
                let mut targets = Vec::new();
                for tok in &toks[1..] {
                    targets.push(check_qubit(parse_idx(tok)?)?);
                }
                CliffordGate::new(kind, &targets).map_err(|e| err(e.to_string()))
            };

            match head {
                "qubits" => {
                    if tokens.len() != 2 {
                        return Err(err("usage: qubits N".into()));
                    }
                    let n = parse_idx(tokens[1])?;
                    if n == 0 {
                        return Err(err("qubit count must be positive".into()));
                    }
                    if num_qubits.replace(n).is_some() {
                        return Err(err("duplicate qubits declaration".into()));
                    }
                }
                "bits" => {
                    if tokens.len() != 2 {
                        return Err(err("usage: bits N".into()));
                    }
                    declared_bits = declared_bits.max(parse_idx(tokens[1])?);
                }
                "M" => {
                    if tokens.len() != 4 || tokens[2] != "->" {
                        return Err(err("usage: M qubit -> cN".into()));
                    }
                    let qubit = check_qubit(parse_idx(tokens[1])?)?;
                    let bit = parse_bit(tokens[3])?;
                    if written_bits.contains(&bit) {
                        return Err(err(format!("bit c{bit} written twice; classical bits are single-assignment")));
                    }
                    written_bits.push(bit);
                    instructions.push(Instruction::MeasureZ { qubit, bit });
                }
                "IF" => {
                    if tokens.len() < 3 {
                        return Err(err("usage: IF cN GATE idx…".into()));
                    }
                    let bit = parse_bit(tokens[1])?;
                    if !written_bits.contains(&bit) {
                        return Err(err(format!("conditional on bit c{bit} before any measurement writes it")));
                    }
                    let gate = parse_gate(&tokens[2..])?;
                    instructions.push(Instruction::Conditional { bit, gate });
                }
                "RESET" => {
                    if tokens.len() != 2 {
                        return Err(err("usage: RESET qubit".into()));
                    }
                    let qubit = check_qubit(parse_idx(tokens[1])?)?;
                    instructions.push(Instruction::Reset { qubit });
                }
                "T" => {
                    if tokens.len() != 2 {
                        return Err(err("usage: T qubit".into()));
                    }
                    let qubit = check_qubit(parse_idx(tokens[1])?)?;
                    instructions.push(Instruction::NonClifford { name: "T".into(), targets: vec![qubit] });
                }
                _ => {
                    instructions.push(Instruction::Gate(parse_gate(&tokens)?));
                }
            }
        }

        let num_qubits = num_qubits.ok_or(Error::Parse {
            line: text.lines().count().max(1),
            msg: "missing `qubits N` declaration".into(),
        })?;
        let used_bits = written_bits.iter().map(|b| b + 1).max().unwrap_or(0);
        Ok(Circuit {
            num_qubits,
            num_classical_bits: declared_bits.max(used_bits),
            instructions,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_minimal_circuit() {
        let c = Circuit::parse("qubits 1\nH 0\nM 0 -> c0\n").unwrap();
        assert_eq!(c.num_qubits, 1);
        assert_eq!(c.num_classical_bits, 1);
        assert_eq!(c.instructions.len(), 2);
        assert!(c.validate().is_empty());
    }

    #[test]
    fn parse_t_as_non_clifford() {
        let c = Circuit::parse("qubits 2\nT 0\n").unwrap();
        assert_eq!(
            c.instructions[0],
            Instruction::NonClifford { name: "T".into(), targets: vec![0] }
        );
        assert!(c.has_non_clifford());
    }

    #[test]
    fn parse_errors_carry_line_numbers() {
        let e = Circuit::parse("qubits 1\nCNOT 0 1\n").unwrap_err();
        assert!(matches!(e, Error::Parse { line: 2, .. }), "{e}");

        let e = Circuit::parse("qubits 1\nFOO 0\n").unwrap_err();
        assert!(e.to_string().contains("unknown mnemonic"));

        let e = Circuit::parse("qubits 1\nH 0 1\n").unwrap_err();
        assert!(e.to_string().contains("takes 1 target"));

        let e = Circuit::parse("qubits 2\nIF c0 X 0\n").unwrap_err();
        assert!(e.to_string().contains("before any measurement"));

        let e = Circuit::parse("qubits 1\nM 0 -> c0\nM 0 -> c0\n").unwrap_err();
        assert!(e.to_string().contains("single-assignment"));

        assert!(Circuit::parse("H 0\n").is_err());
        assert!(Circuit::parse("").is_err());
    }

    #[test]
    fn comments_and_blank_lines_ignored() {
        let c = Circuit::parse("# header\nqubits 2\n\n# a comment\nCNOT 0 1\n").unwrap();
        assert_eq!(c.instructions.len(), 1);
    }

    #[test]
    fn empty_instruction_list_is_valid() {
        let c = Circuit::parse("qubits 3\n").unwrap();
        assert!(c.validate().is_empty());
        assert!(!c.has_non_clifford());
    }

    #[test]
    fn validate_reports_bad_conditionals() {
        let mut c = Circuit::new(1);
        c.num_classical_bits = 1;
        c.push_conditional(0, CliffordGate::X(0));
        c.push_measure(0, 0);
        let diags = c.validate();
        assert_eq!(diags.len(), 1);
        assert!(diags[0].message.contains("c0"));
    }

    #[test]
    fn render_matches_grammar() {
        let text = "qubits 3\nbits 2\nH 0\nCNOT 0 1\nT 2\nM 1 -> c0\nIF c0 S 0\nRESET 1\nM 0 -> c1\n";
        let c = Circuit::parse(text).unwrap();
        assert_eq!(c.render(), text);
        assert_eq!(Circuit::parse(&c.render()).unwrap(), c);
    }

    #[test]
    fn declared_bits_survive_roundtrip() {
        let c = Circuit::parse("qubits 1\nbits 5\nM 0 -> c0\n").unwrap();
        assert_eq!(c.num_classical_bits, 5);
        assert_eq!(Circuit::parse(&c.render()).unwrap(), c);
    }
}
