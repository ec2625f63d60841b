//! Local model checking for the CTL⁻ fragment of computation tree logic.
//!
//! CTL⁻ has Boolean connectives over literals and the six temporal operators
//! `EX`, `AX`, `EF`, `AF`, `EG`, `AG` (no Until, negation on atoms only).
//! A query "does state `s` of structure `M` satisfy `φ`?" is answered by
//! backward proof search over *tagged sequents* `M, s ⊢_U φ`, where the tag
//! `U` records the states already explored for the current temporal formula
//! and guarantees that every derivation is finite.
//!
//! The crate is split along the trust boundary of the tool:
//!
//! * [`kripke`] — finite transition systems, their text format, and the
//!   pre-image transformers `pre∃` / `pre∀`;
//! * [`formula`] — the formula AST, concrete syntax, and negation pushing;
//! * [`oracle`] — tagged denotations by fixed-point iteration, the global
//!   ground-truth semantics used to cross-validate the prover;
//! * [`prover`] — the sequent rules and the proof search itself;
//! * [`certifier`] — an independent validator for emitted proof trees.
//!
//! The core is `no_std` (with `alloc`); everything that touches files,
//! processes, or JSON lives in the companion CLI crate.

#![cfg_attr(not(test), no_std)]
#![forbid(unsafe_code)]

extern crate alloc;

pub mod certifier;
pub mod formula;
pub mod kripke;
pub mod oracle;
pub mod prover;

#[cfg(test)]
pub(crate) mod testutil;

use alloc::string::String;
use core::fmt;

pub use certifier::{check_proof, CertificateReport};
pub use formula::{parse_formula, ExtendedFormula, Modality, PathQuantifier, StateFormula};
pub use kripke::{parse_model, KripkeBuilder, KripkeStructure, StateId, StateSet};
pub use oracle::{denotation, is_valid};
pub use prover::{prove, ProofTree, RuleName, SearchStats, Sequent, Verdict};

/// Error with a 1-based source position, produced by the model and formula
/// parsers.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParseError {
    pub line: usize,
    pub column: usize,
    pub message: String,
}

impl ParseError {
    pub(crate) fn new(line: usize, column: usize, message: String) -> Self {
        ParseError { line, column, message }
    }
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "line {}, column {}: {}", self.line, self.column, self.message)
    }
}

impl core::error::Error for ParseError {}
