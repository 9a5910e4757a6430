//! Stabilizer-circuit simulation and magic-state gadget analysis.
//!
//! The crate bundles:
//!
//! - [`pauli`] — phased Pauli-string algebra and the Clifford gate set;
//! - [`tableau`] — stabilizer tableau simulation with exact measurement
//!   probabilities;
//! - [`circuit`] — circuit IR, text parser/renderer, and validation;
//! - [`dense`] — brute-force statevector / density-matrix oracle for small
//!   systems, the ground truth for every equivalence test;
//! - [`decomp`] — Pauli-basis and stabilizer-frame decompositions of small
//!   density matrices;
//! - [`mixture`] — signed stabilizer-mixture simulation of all-Clifford
//!   circuits whose only non-stabilizer input is a fixed-size ancilla;
//! - [`gadget`] — gate-teleportation gadget definitions (reusable S, √X,
//!   √Y, consumable T) plus an oracle-backed verifier, and gadget
//!   expansion of circuits;
//! - [`search`] — Clifford group enumeration and the exhaustive search for
//!   reusable-gadget solutions;
//! - [`bench`] — scaling measurements behind the CLI `bench` command.

pub mod bench;
pub mod circuit;
pub mod decomp;
pub mod dense;
pub mod error;
pub mod gadget;
pub mod mixture;
pub mod pauli;
pub mod random;
pub mod search;
pub mod tableau;

pub use circuit::{Circuit, Diagnostic, Instruction};
pub use error::{Error, Result};
pub use pauli::{CliffordGate, GateKind, Pauli, PauliString};
pub use tableau::{FrameLabel, MeasureResult, Tableau, FRAME_LABELS};
