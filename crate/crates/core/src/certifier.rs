//! Independent validation of proof trees.
//!
//! The certifier re-checks that every node of a tree is a correct
//! instance of exactly the rule it names: conclusion shape, side
//! condition, premise count, premise order, and premise tags. It derives
//! the expected premises itself from the conclusion and the model — child
//! order and tags in the tree are compared against that, never trusted.
//! It calls neither the prover nor the semantics, which is what makes the
//! differential tests between the three meaningful.

use alloc::collections::BTreeSet;
use alloc::format;
use alloc::string::String;
use alloc::sync::Arc;
use alloc::vec::Vec;

use crate::formula::{Modality, PathQuantifier, StateFormula};
use crate::kripke::{KripkeStructure, StateSet};
use crate::prover::{ProofTree, RuleName, Sequent};

/// One rule-instance violation, located by the child-index path from the
/// root.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CertFailure {
    pub path: Vec<usize>,
    pub message: String,
}

impl CertFailure {
    /// `root`, `root.0`, `root.0.1`, ...
    pub fn path_string(&self) -> String {
        let mut out = String::from("root");
        for index in &self.path {
            out.push('.');
            out.push_str(&format!("{index}"));
        }
        out
    }
}

impl core::fmt::Display for CertFailure {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        write!(f, "{}: {}", self.path_string(), self.message)
    }
}

/// Result of [`check_proof`]; the certificate is valid iff no failures
/// were collected.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CertificateReport {
    pub failures: Vec<CertFailure>,
}

impl CertificateReport {
    pub fn valid(&self) -> bool {
        self.failures.is_empty()
    }
}

/// Checks every node of `tree` against the rules, relative to `m`.
/// Nothing is thrown: all problems come back in the report.
///
/// Shared subtrees are checked once; a sub-derivation is a correct rule
/// instance independently of where it hangs in the tree, so this loses
/// nothing.
pub fn check_proof(m: &KripkeStructure, tree: &ProofTree) -> CertificateReport {
    let mut failures = Vec::new();
    let mut path = Vec::new();
    let mut seen = BTreeSet::new();
    check_node(m, tree, &mut path, &mut seen, &mut failures);
    CertificateReport { failures }
}

fn check_node(
    m: &KripkeStructure,
    node: &ProofTree,
    path: &mut Vec<usize>,
    seen: &mut BTreeSet<usize>,
    failures: &mut Vec<CertFailure>,
) {
    let fail = |message: String, failures: &mut Vec<CertFailure>| {
        failures.push(CertFailure { path: path.clone(), message });
    };

    if node.conclusion.state.index() >= m.state_count() {
        fail(format!("state index {} is not in the model", node.conclusion.state.index()), failures);
        return;
    }
    if node.conclusion.tag.universe() != m.state_count() {
        fail("tag does not range over the model's states".into(), failures);
        return;
    }

    match expected_premises(m, node) {
        Ok(expected) => {
            if node.children.len() != expected.len() {
                fail(
                    format!(
                        "rule {} expects {} premise(s), found {}",
                        node.rule,
                        expected.len(),
                        node.children.len()
                    ),
                    failures,
                );
            } else {
                for (i, (child, want)) in node.children.iter().zip(&expected).enumerate() {
                    if child.conclusion != *want {
                        fail(
                            format!(
                                "premise {} of rule {} must be `{}`, found `{}`",
                                i,
                                node.rule,
                                want.display(m),
                                child.conclusion.display(m)
                            ),
                            failures,
                        );
                    }
                }
            }
        }
        Err(message) => fail(message, failures),
    }

    for (i, child) in node.children.iter().enumerate() {
        if seen.insert(Arc::as_ptr(child) as usize) {
            path.push(i);
            check_node(m, child, path, seen, failures);
            path.pop();
        }
    }
}

/// Derives what the premises of `node` must be for it to be a correct
/// instance of its rule, or explains why no instance matches.
///
/// For the `E`-rules the chosen successor is read off the actual child
/// state (after checking it really is a successor); everything else —
/// premise tags, formulas, and for the `A`-rules the full index-ordered
/// successor list — is reconstructed from the conclusion.
fn expected_premises(m: &KripkeStructure, node: &ProofTree) -> Result<Vec<Sequent>, String> {
    let seq = &node.conclusion;
    let s = seq.state;
    let tag = &seq.tag;
    let empty = m.empty_set();

    let empty_tag = |rule: RuleName| -> Result<(), String> {
        if tag.is_empty() {
            Ok(())
        } else {
            Err(format!("rule {rule} requires an empty tag"))
        }
    };
    let untagged_state = |rule: RuleName| -> Result<(), String> {
        if tag.contains(s) {
            Err(format!("rule {rule} requires {} ∉ tag", m.state_name(s)))
        } else {
            Ok(())
        }
    };
    let chosen_successor = |index: usize| -> Result<Sequent, String> {
        let child = node
            .children
            .get(index)
            .ok_or_else(|| format!("rule {} is missing its successor premise", node.rule))?;
        let target = child.conclusion.state;
        if target.index() >= m.state_count() {
            return Err(format!("premise state index {} is not in the model", target.index()));
        }
        if !m.successors(s).contains(target) {
            return Err(format!(
                "`{}` is not a successor of `{}`",
                m.state_name(target),
                m.state_name(s)
            ));
        }
        Ok(child.conclusion.clone())
    };
    let all_successors = |tag: &StateSet, formula: &StateFormula| -> Vec<Sequent> {
        m.successors(s)
            .iter()
            .map(|succ| Sequent::new(succ, tag.clone(), formula.clone()))
            .collect()
    };

    match (node.rule, &seq.formula) {
        (RuleName::Atom, StateFormula::Atom(p)) => {
            empty_tag(node.rule)?;
            if !m.has_label(s, p) {
                return Err(format!("atom `{p}` does not hold at state `{}`", m.state_name(s)));
            }
            Ok(Vec::new())
        }
        (RuleName::NegAtom, StateFormula::NegAtom(p)) => {
            empty_tag(node.rule)?;
            if m.has_label(s, p) {
                return Err(format!("atom `{p}` holds at state `{}`", m.state_name(s)));
            }
            Ok(Vec::new())
        }
        (RuleName::And, StateFormula::And(l, r)) => {
            empty_tag(node.rule)?;
            Ok(alloc::vec![
                Sequent::new(s, empty.clone(), l.as_ref().clone()),
                Sequent::new(s, empty, r.as_ref().clone()),
            ])
        }
        (RuleName::Or1, StateFormula::Or(l, _)) => {
            empty_tag(node.rule)?;
            Ok(alloc::vec![Sequent::new(s, empty, l.as_ref().clone())])
        }
        (RuleName::Or2, StateFormula::Or(_, r)) => {
            empty_tag(node.rule)?;
            Ok(alloc::vec![Sequent::new(s, empty, r.as_ref().clone())])
        }
        (RuleName::Ex, StateFormula::Temporal(PathQuantifier::Exists, Modality::Next, body)) => {
            empty_tag(node.rule)?;
            let chosen = chosen_successor(0)?;
            Ok(alloc::vec![Sequent::new(chosen.state, empty, body.as_ref().clone())])
        }
        (RuleName::Ax, StateFormula::Temporal(PathQuantifier::All, Modality::Next, body)) => {
            empty_tag(node.rule)?;
            Ok(all_successors(&empty, body))
        }
        (RuleName::Eg1, StateFormula::Temporal(PathQuantifier::Exists, Modality::Globally, _)) => {
            if !tag.contains(s) {
                return Err(format!("rule EG1 requires {} ∈ tag", m.state_name(s)));
            }
            Ok(Vec::new())
        }
        (RuleName::Ag1, StateFormula::Temporal(PathQuantifier::All, Modality::Globally, _)) => {
            if !tag.contains(s) {
                return Err(format!("rule AG1 requires {} ∈ tag", m.state_name(s)));
            }
            Ok(Vec::new())
        }
        (RuleName::Eg2, StateFormula::Temporal(PathQuantifier::Exists, Modality::Globally, body)) => {
            untagged_state(node.rule)?;
            let chosen = chosen_successor(1)?;
            Ok(alloc::vec![
                Sequent::new(s, empty, body.as_ref().clone()),
                Sequent::new(chosen.state, tag.inserted(s), seq.formula.clone()),
            ])
        }
        (RuleName::Ag2, StateFormula::Temporal(PathQuantifier::All, Modality::Globally, body)) => {
            untagged_state(node.rule)?;
            let mut premises = alloc::vec![Sequent::new(s, empty, body.as_ref().clone())];
            premises.extend(all_successors(&tag.inserted(s), &seq.formula));
            Ok(premises)
        }
        (RuleName::Ef1, StateFormula::Temporal(PathQuantifier::Exists, Modality::Finally, body)) => {
            untagged_state(node.rule)?;
            Ok(alloc::vec![Sequent::new(s, empty, body.as_ref().clone())])
        }
        (RuleName::Af1, StateFormula::Temporal(PathQuantifier::All, Modality::Finally, body)) => {
            untagged_state(node.rule)?;
            Ok(alloc::vec![Sequent::new(s, empty, body.as_ref().clone())])
        }
        (RuleName::Ef2, StateFormula::Temporal(PathQuantifier::Exists, Modality::Finally, _)) => {
            untagged_state(node.rule)?;
            let chosen = chosen_successor(0)?;
            Ok(alloc::vec![Sequent::new(chosen.state, tag.inserted(s), seq.formula.clone())])
        }
        (RuleName::Af2, StateFormula::Temporal(PathQuantifier::All, Modality::Finally, _)) => {
            untagged_state(node.rule)?;
            Ok(all_successors(&tag.inserted(s), &seq.formula))
        }
        (rule, formula) => {
            Err(format!("rule {} does not apply to a `{}` formula", rule, formula.op_name()))
        }
    }
}
