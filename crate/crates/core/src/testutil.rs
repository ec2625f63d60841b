//! Shared helpers for the in-crate test suites: the worked example
//! structure, random model/formula generators, and naive reference
//! evaluators that stay independent of the oracle's code paths.

use alloc::string::String;
use alloc::vec::Vec;

use proptest::prelude::*;

use crate::formula::{ExtendedFormula, Modality, PathQuantifier, StateFormula};
use crate::kripke::{parse_model, KripkeBuilder, KripkeStructure, StateSet};

pub const PAPER_MODEL: &str = "\
states: s0 s1 s2
labels: s0: p q; s1: q r; s2: r
trans: s0 -> s1; s0 -> s2; s1 -> s0; s1 -> s2; s2 -> s2
";

pub fn paper_model() -> KripkeStructure {
    parse_model(PAPER_MODEL).expect("the example model parses")
}

/// `c0 -> c1 -> ... -> c(n-1)`, no labels; the last state is a deadlock.
pub fn chain_model(n: usize) -> KripkeStructure {
    let mut b = KripkeBuilder::new();
    let ids: Vec<_> =
        (0..n).map(|i| b.add_state(&alloc::format!("c{i}")).unwrap()).collect();
    for pair in ids.windows(2) {
        b.add_transition(pair[0], pair[1]);
    }
    b.finish()
}

pub fn set_of(m: &KripkeStructure, names: &[&str]) -> StateSet {
    let mut set = m.empty_set();
    for name in names {
        set.insert(m.state_by_name(name).unwrap_or_else(|| panic!("no state `{name}`")));
    }
    set
}

pub fn subset_from_bits(m: &KripkeStructure, bits: &[bool]) -> StateSet {
    let mut set = m.empty_set();
    for (s, &keep) in m.states().zip(bits) {
        if keep {
            set.insert(s);
        }
    }
    set
}

const ATOMS: [&str; 3] = ["p", "q", "r"];

/// Random structure with 1..=max_states states, independently sampled
/// edges, and labels drawn from three atoms.
pub fn arb_model(max_states: usize) -> impl Strategy<Value = KripkeStructure> {
    (1..=max_states)
        .prop_flat_map(|n| {
            (
                Just(n),
                proptest::collection::vec(any::<bool>(), n * n),
                proptest::collection::vec(any::<bool>(), n * ATOMS.len()),
            )
        })
        .prop_map(|(n, edges, labels)| {
            let mut b = KripkeBuilder::new();
            let ids: Vec<_> =
                (0..n).map(|i| b.add_state(&alloc::format!("s{i}")).unwrap()).collect();
            for (k, &on) in edges.iter().enumerate() {
                if on {
                    b.add_transition(ids[k / n], ids[k % n]);
                }
            }
            for (k, &on) in labels.iter().enumerate() {
                if on {
                    b.add_label(ids[k / ATOMS.len()], ATOMS[k % ATOMS.len()]);
                }
            }
            b.finish()
        })
}

/// A model of up to 6 states plus two independent subsets of its states.
pub fn arb_model_and_two_subsets() -> impl Strategy<Value = (KripkeStructure, StateSet, StateSet)>
{
    arb_model(6).prop_flat_map(|m| {
        let n = m.state_count();
        (
            Just(m),
            proptest::collection::vec(any::<bool>(), n),
            proptest::collection::vec(any::<bool>(), n),
        )
            .prop_map(|(m, a, b)| {
                let sa = subset_from_bits(&m, &a);
                let sb = subset_from_bits(&m, &b);
                (m, sa, sb)
            })
    })
}

fn arb_atom() -> impl Strategy<Value = String> {
    proptest::sample::select(ATOMS.as_slice()).prop_map(String::from)
}

pub fn arb_quantifier() -> impl Strategy<Value = PathQuantifier> {
    prop_oneof![Just(PathQuantifier::All), Just(PathQuantifier::Exists)]
}

pub fn arb_modality() -> impl Strategy<Value = Modality> {
    prop_oneof![Just(Modality::Next), Just(Modality::Globally), Just(Modality::Finally)]
}

pub fn arb_state_formula(depth: u32) -> impl Strategy<Value = StateFormula> {
    let leaf = prop_oneof![
        arb_atom().prop_map(StateFormula::Atom),
        arb_atom().prop_map(StateFormula::NegAtom),
    ];
    leaf.prop_recursive(depth, 16, 2, |inner| {
        prop_oneof![
            (inner.clone(), inner.clone())
                .prop_map(|(l, r)| StateFormula::and(l, r)),
            (inner.clone(), inner.clone()).prop_map(|(l, r)| StateFormula::or(l, r)),
            (arb_quantifier(), arb_modality(), inner)
                .prop_map(|(q, m, body)| StateFormula::temporal(q, m, body)),
        ]
    })
}

/// Parser-shaped extended formulas: negation is a `Not` node, never a
/// `NegAtom` literal, exactly as `parse_formula` produces them.
pub fn arb_extended_formula(depth: u32) -> impl Strategy<Value = ExtendedFormula> {
    let leaf = arb_atom().prop_map(ExtendedFormula::Atom);
    leaf.prop_recursive(depth, 16, 2, |inner| {
        prop_oneof![
            inner.clone().prop_map(|f| ExtendedFormula::Not(alloc::boxed::Box::new(f))),
            (inner.clone(), inner.clone()).prop_map(|(l, r)| ExtendedFormula::And(
                alloc::boxed::Box::new(l),
                alloc::boxed::Box::new(r)
            )),
            (inner.clone(), inner.clone()).prop_map(|(l, r)| ExtendedFormula::Or(
                alloc::boxed::Box::new(l),
                alloc::boxed::Box::new(r)
            )),
            (arb_quantifier(), arb_modality(), inner).prop_map(|(q, m, body)| {
                ExtendedFormula::Temporal(q, m, alloc::boxed::Box::new(body))
            }),
        ]
    })
}

/// States from which `base` is reachable in zero or more steps: a plain
/// breadth-first search along reversed edges, written without the oracle's
/// fixed-point machinery.
pub fn backward_reachable(m: &KripkeStructure, base: &StateSet) -> StateSet {
    let mut reached = base.clone();
    let mut frontier: Vec<_> = base.iter().collect();
    while let Some(target) = frontier.pop() {
        for s in m.states() {
            if m.successors(s).contains(target) && reached.insert(s) {
                frontier.push(s);
            }
        }
    }
    reached
}

/// Naive semantics for extended formulas: `Not` is set complement, the
/// temporal operators are evaluated by chaotic iteration loops written
/// directly against their textbook definitions. Deliberately shares no
/// code with `oracle::denotation`.
pub fn eval_extended_naive(m: &KripkeStructure, f: &ExtendedFormula) -> StateSet {
    match f {
        ExtendedFormula::Atom(p) => m.label_set(p),
        ExtendedFormula::NegAtom(p) => m.label_set(p).complement(),
        ExtendedFormula::Not(body) => eval_extended_naive(m, body).complement(),
        ExtendedFormula::And(l, r) => {
            eval_extended_naive(m, l).intersection(&eval_extended_naive(m, r))
        }
        ExtendedFormula::Or(l, r) => eval_extended_naive(m, l).union(&eval_extended_naive(m, r)),
        ExtendedFormula::Temporal(q, Modality::Next, body) => {
            let inner = eval_extended_naive(m, body);
            match q {
                PathQuantifier::Exists => m.pre_exists(&inner),
                PathQuantifier::All => m.pre_forall(&inner),
            }
        }
        ExtendedFormula::Temporal(q, Modality::Finally, body) => {
            // Grow from the base until nothing is added.
            let base = eval_extended_naive(m, body);
            let mut acc = base.clone();
            loop {
                let pre = match q {
                    PathQuantifier::Exists => m.pre_exists(&acc),
                    PathQuantifier::All => m.pre_forall(&acc),
                };
                let next = acc.union(&pre).union(&base);
                if next == acc {
                    return acc;
                }
                acc = next;
            }
        }
        ExtendedFormula::Temporal(q, Modality::Globally, body) => {
            // Shrink from the base until stable.
            let base = eval_extended_naive(m, body);
            let mut acc = base.clone();
            loop {
                let pre = match q {
                    PathQuantifier::Exists => m.pre_exists(&acc),
                    PathQuantifier::All => m.pre_forall(&acc),
                };
                let next = acc.intersection(&pre).intersection(&base);
                if next == acc {
                    return acc;
                }
                acc = next;
            }
        }
    }
}
