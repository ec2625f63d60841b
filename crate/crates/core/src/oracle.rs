//! Tagged denotations `⟦φ⟧_U` computed by fixed-point iteration.
//!
//! This is the global, whole-state-space semantics: the ground truth that
//! the local prover is checked against. A non-empty tag `U` is only
//! defined for the four `F`/`G` operators; it is subtracted from the
//! μ-bodies and added to the ν-bodies, matching the side conditions of the
//! proof rules:
//!
//! ```text
//! ⟦EFφ⟧_U = μY.((⟦φ⟧_∅ ∪ pre∃(Y)) \ U)     ⟦EGφ⟧_U = νY.((⟦φ⟧_∅ ∩ pre∃(Y)) ∪ U)
//! ⟦AFφ⟧_U = μY.((⟦φ⟧_∅ ∪ pre∀(Y)) \ U)     ⟦AGφ⟧_U = νY.((⟦φ⟧_∅ ∩ pre∀(Y)) ∪ U)
//! ```

use core::fmt;

use crate::formula::{Modality, PathQuantifier, StateFormula};
use crate::kripke::{KripkeStructure, StateId, StateSet};

/// Which extremal fixed point of a monotone body to take.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FixedPointKind {
    Least,
    Greatest,
}

/// Least fixed point of a monotone set transformer, by Kleene iteration
/// from the empty set. Equal to the intersection of all prefixed points
/// on a finite carrier.
///
/// Panics if iteration fails to stabilize within `|carrier| + 1` steps,
/// which means the body was not monotone.
pub fn lfp<F: Fn(&StateSet) -> StateSet>(body: F, carrier: &StateSet) -> StateSet {
    let mut current = StateSet::empty(carrier.universe());
    for _ in 0..=carrier.len() + 1 {
        let next = body(&current);
        if next == current {
            return current;
        }
        current = next;
    }
    panic!("least fixed-point iteration did not stabilize: body is not monotone");
}

/// Greatest fixed point, by Kleene iteration downward from the carrier.
/// Equal to the union of all postfixed points on a finite carrier.
pub fn gfp<F: Fn(&StateSet) -> StateSet>(body: F, carrier: &StateSet) -> StateSet {
    let mut current = carrier.clone();
    for _ in 0..=carrier.len() + 1 {
        let next = body(&current);
        if next == current {
            return current;
        }
        current = next;
    }
    panic!("greatest fixed-point iteration did not stabilize: body is not monotone");
}

/// The μ-body of `EFφ`/`AFφ`: `Y ↦ (base ∪ pre(Y)) \ tag`.
pub fn finally_body<'a>(
    m: &'a KripkeStructure,
    quantifier: PathQuantifier,
    base: &'a StateSet,
    tag: &'a StateSet,
) -> impl Fn(&StateSet) -> StateSet + 'a {
    move |y| base.union(&pre_image(m, quantifier, y)).difference(tag)
}

/// The ν-body of `EGφ`/`AGφ`: `Y ↦ (base ∩ pre(Y)) ∪ tag`.
pub fn globally_body<'a>(
    m: &'a KripkeStructure,
    quantifier: PathQuantifier,
    base: &'a StateSet,
    tag: &'a StateSet,
) -> impl Fn(&StateSet) -> StateSet + 'a {
    move |y| base.intersection(&pre_image(m, quantifier, y)).union(tag)
}

fn pre_image(m: &KripkeStructure, quantifier: PathQuantifier, y: &StateSet) -> StateSet {
    match quantifier {
        PathQuantifier::Exists => m.pre_exists(y),
        PathQuantifier::All => m.pre_forall(y),
    }
}

/// A non-empty tag was supplied for an operator that does not take one.
/// Tags are defined only for the `EF`/`AF`/`EG`/`AG` top operators.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TagError {
    pub operator: &'static str,
}

impl fmt::Display for TagError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "a non-empty tag is not defined for `{}` formulas", self.operator)
    }
}

impl core::error::Error for TagError {}

/// `⟦f⟧_tag`: the set of states of `m` satisfying `f` relative to `tag`.
///
/// Subformula denotations always use the empty tag; the tag only affects
/// the outermost operator.
pub fn denotation(
    m: &KripkeStructure,
    f: &StateFormula,
    tag: &StateSet,
) -> Result<StateSet, TagError> {
    if !tag.is_empty()
        && !matches!(f, StateFormula::Temporal(_, Modality::Finally | Modality::Globally, _))
    {
        return Err(TagError { operator: f.op_name() });
    }
    Ok(match f {
        StateFormula::Atom(p) => m.label_set(p),
        StateFormula::NegAtom(p) => m.label_set(p).complement(),
        // `tag` is known empty for the next four cases, so it doubles as
        // the empty tag of the subformula denotations.
        StateFormula::And(l, r) => denotation(m, l, tag)?.intersection(&denotation(m, r, tag)?),
        StateFormula::Or(l, r) => denotation(m, l, tag)?.union(&denotation(m, r, tag)?),
        StateFormula::Temporal(q, Modality::Next, body) => {
            pre_image(m, *q, &denotation(m, body, tag)?)
        }
        StateFormula::Temporal(q, Modality::Finally, body) => {
            let base = denotation(m, body, &m.empty_set())?;
            lfp(finally_body(m, *q, &base, tag), &m.full_set())
        }
        StateFormula::Temporal(q, Modality::Globally, body) => {
            let base = denotation(m, body, &m.empty_set())?;
            gfp(globally_body(m, *q, &base, tag), &m.full_set())
        }
    })
}

/// Sequent validity: `s ∈ ⟦f⟧_tag`.
pub fn is_valid(
    m: &KripkeStructure,
    s: StateId,
    tag: &StateSet,
    f: &StateFormula,
) -> Result<bool, TagError> {
    Ok(denotation(m, f, tag)?.contains(s))
}

/// Evaluates the single-element unfolding equivalence for a monotone body
/// `ψ` and element `p`:
///
/// ```text
/// p ∈ μY.ψ(Y)  ⇔  p ∈ ψ(μY.(ψ(Y) \ {p}))
/// p ∈ νY.ψ(Y)  ⇔  p ∈ ψ(νY.(ψ(Y) ∪ {p}))
/// ```
///
/// For monotone bodies this always returns `true`; it exists so the test
/// suites can exercise exactly that claim.
pub fn reduction_lemma_holds<F: Fn(&StateSet) -> StateSet>(
    body: F,
    p: StateId,
    kind: FixedPointKind,
    carrier: &StateSet,
) -> bool {
    let single = StateSet::singleton(carrier.universe(), p);
    match kind {
        FixedPointKind::Least => {
            let lhs = lfp(&body, carrier).contains(p);
            let inner = lfp(|y| body(y).difference(&single), carrier);
            lhs == body(&inner).contains(p)
        }
        FixedPointKind::Greatest => {
            let lhs = gfp(&body, carrier).contains(p);
            let inner = gfp(|y| body(y).union(&single), carrier);
            lhs == body(&inner).contains(p)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formula::parse_formula;
    use crate::testutil::{self, paper_model, set_of};
    use proptest::prelude::*;

    fn nnf(text: &str) -> StateFormula {
        parse_formula(text).unwrap().push_negations()
    }

    #[test]
    fn lfp_of_identity_is_empty() {
        let carrier = StateSet::full(4);
        assert_eq!(lfp(|y| y.clone(), &carrier), StateSet::empty(4));
    }

    #[test]
    fn gfp_of_identity_is_the_carrier() {
        let carrier = StateSet::full(4);
        assert_eq!(gfp(|y| y.clone(), &carrier), carrier);
    }

    #[test]
    fn constant_bodies() {
        let carrier = StateSet::full(3);
        assert_eq!(lfp(|_| StateSet::full(3), &carrier), StateSet::full(3));
        assert_eq!(gfp(|_| StateSet::empty(3), &carrier), StateSet::empty(3));
    }

    #[test]
    fn lfp_hand_iteration_on_the_example() {
        // ∅ → {s1,s2} → {s0,s1,s2} → stable
        let m = paper_model();
        let base = set_of(&m, &["s1", "s2"]);
        let result = lfp(|y| base.union(&m.pre_exists(y)), &m.full_set());
        assert_eq!(result, m.full_set());
    }

    #[test]
    fn gfp_hand_iteration_on_the_example() {
        // {s0,s1,s2} → {s1,s2} → stable
        let m = paper_model();
        let base = set_of(&m, &["s1", "s2"]);
        let result = gfp(|y| base.intersection(&m.pre_exists(y)), &m.full_set());
        assert_eq!(result, set_of(&m, &["s1", "s2"]));
    }

    #[test]
    #[should_panic(expected = "not monotone")]
    fn non_monotone_bodies_are_detected() {
        let carrier = StateSet::full(2);
        // Alternates between ∅ and the full set forever.
        lfp(|y| y.complement(), &carrier);
    }

    #[test]
    fn denotation_examples_from_the_worked_model() {
        let m = paper_model();
        let empty = m.empty_set();
        assert_eq!(denotation(&m, &nnf("r"), &empty).unwrap(), set_of(&m, &["s1", "s2"]));
        assert_eq!(denotation(&m, &nnf("EG r"), &empty).unwrap(), set_of(&m, &["s1", "s2"]));
        assert_eq!(denotation(&m, &nnf("EF (EG r)"), &empty).unwrap(), m.full_set());

        let tagged = denotation(&m, &nnf("EG r"), &set_of(&m, &["s2"])).unwrap();
        assert!(tagged.contains(m.state_by_name("s2").unwrap()));
    }

    #[test]
    fn validity_examples() {
        let m = paper_model();
        let s0 = m.state_by_name("s0").unwrap();
        let empty = m.empty_set();
        assert!(is_valid(&m, s0, &empty, &nnf("EF (EG r)")).unwrap());
        assert!(!is_valid(&m, s0, &empty, &nnf("r")).unwrap());
        // A state in the tag satisfies any EG formula: the tag is unioned
        // into the ν-body.
        let tag = set_of(&m, &["s0"]);
        assert!(is_valid(&m, s0, &tag, &nnf("EG p")).unwrap());
    }

    #[test]
    fn non_fg_operators_reject_tags() {
        let m = paper_model();
        let tag = set_of(&m, &["s0"]);
        for text in ["p", "!p", "p & q", "p | q", "EX p", "AX p"] {
            let err = denotation(&m, &nnf(text), &tag).unwrap_err();
            assert_eq!(err.operator, nnf(text).op_name(), "{text}");
        }
        for text in ["EF p", "AF p", "EG p", "AG p"] {
            assert!(denotation(&m, &nnf(text), &tag).is_ok(), "{text}");
        }
    }

    #[test]
    fn reduction_lemma_examples() {
        let m = paper_model();
        let carrier = m.full_set();
        let s0 = m.state_by_name("s0").unwrap();
        let s2 = m.state_by_name("s2").unwrap();

        // Identity body: both sides of the μ-equivalence are false.
        assert!(reduction_lemma_holds(|y| y.clone(), s0, FixedPointKind::Least, &carrier));

        let base = set_of(&m, &["s1", "s2"]);
        let empty = m.empty_set();
        let ef_body = finally_body(&m, PathQuantifier::Exists, &base, &empty);
        assert!(reduction_lemma_holds(ef_body, s0, FixedPointKind::Least, &carrier));

        let eg_body = globally_body(&m, PathQuantifier::Exists, &base, &empty);
        assert!(reduction_lemma_holds(eg_body, s2, FixedPointKind::Greatest, &carrier));
    }

    // Brute-force reference: extremal fixed points via the prefixed/postfixed
    // point definitions, enumerating every subset of the carrier.
    fn subsets(carrier: &StateSet) -> impl Iterator<Item = StateSet> + '_ {
        let members: Vec<_> = carrier.iter().collect();
        let n = members.len();
        (0u32..1 << n).map(move |mask| {
            let mut set = StateSet::empty(carrier.universe());
            for (bit, &s) in members.iter().enumerate() {
                if mask >> bit & 1 == 1 {
                    set.insert(s);
                }
            }
            set
        })
    }

    fn lfp_brute<F: Fn(&StateSet) -> StateSet>(body: F, carrier: &StateSet) -> StateSet {
        let mut acc = carrier.clone();
        for x in subsets(carrier) {
            if body(&x).is_subset(&x) {
                acc = acc.intersection(&x);
            }
        }
        acc
    }

    fn gfp_brute<F: Fn(&StateSet) -> StateSet>(body: F, carrier: &StateSet) -> StateSet {
        let mut acc = StateSet::empty(carrier.universe());
        for x in subsets(carrier) {
            if x.is_subset(&body(&x)) {
                acc = acc.union(&x);
            }
        }
        acc
    }

    proptest! {
        #[test]
        fn kleene_iteration_matches_brute_force_on_small_carriers(
            m in testutil::arb_model(5),
            f in testutil::arb_state_formula(2),
            quantifier in testutil::arb_quantifier(),
        ) {
            let carrier = m.full_set();
            let base = denotation(&m, &f, &m.empty_set()).unwrap();
            let tag = m.empty_set();

            let mu = finally_body(&m, quantifier, &base, &tag);
            prop_assert_eq!(lfp(&mu, &carrier), lfp_brute(&mu, &carrier));
            prop_assert!(lfp(&mu, &carrier) == mu(&lfp(&mu, &carrier)), "lfp is a fixed point");

            let nu = globally_body(&m, quantifier, &base, &tag);
            prop_assert_eq!(gfp(&nu, &carrier), gfp_brute(&nu, &carrier));
            prop_assert!(gfp(&nu, &carrier) == nu(&gfp(&nu, &carrier)), "gfp is a fixed point");
        }

        #[test]
        fn reduction_lemma_on_random_bodies(
            m in testutil::arb_model(6),
            f in testutil::arb_state_formula(3),
            quantifier in testutil::arb_quantifier(),
            tag_bits in proptest::collection::vec(any::<bool>(), 6),
        ) {
            let carrier = m.full_set();
            let base = denotation(&m, &f, &m.empty_set()).unwrap();
            let tag = testutil::subset_from_bits(&m, &tag_bits);
            for p in m.states() {
                let mu = finally_body(&m, quantifier, &base, &tag);
                prop_assert!(reduction_lemma_holds(mu, p, FixedPointKind::Least, &carrier));
                let nu = globally_body(&m, quantifier, &base, &tag);
                prop_assert!(reduction_lemma_holds(nu, p, FixedPointKind::Greatest, &carrier));
            }
        }

        // ⟦EFφ⟧_U ∩ U = ∅ and U ⊆ ⟦EGφ⟧_U, plus the A-duals; these mirror
        // the side conditions of the F₁ rules and the G₁ axioms.
        #[test]
        fn tag_laws(
            m in testutil::arb_model(6),
            f in testutil::arb_state_formula(2),
            tag_bits in proptest::collection::vec(any::<bool>(), 6),
        ) {
            let tag = testutil::subset_from_bits(&m, &tag_bits);
            for quantifier in [PathQuantifier::Exists, PathQuantifier::All] {
                let finally = StateFormula::temporal(quantifier, Modality::Finally, f.clone());
                let den = denotation(&m, &finally, &tag).unwrap();
                prop_assert!(!den.intersects(&tag), "F-denotations avoid the tag");

                let globally = StateFormula::temporal(quantifier, Modality::Globally, f.clone());
                let den = denotation(&m, &globally, &tag).unwrap();
                prop_assert!(tag.is_subset(&den), "G-denotations contain the tag");
            }
        }

        #[test]
        fn denotations_are_monotone_in_the_tag(
            m in testutil::arb_model(6),
            f in testutil::arb_state_formula(2),
            bits_a in proptest::collection::vec(any::<bool>(), 6),
            bits_b in proptest::collection::vec(any::<bool>(), 6),
        ) {
            let small = testutil::subset_from_bits(&m, &bits_a)
                .intersection(&testutil::subset_from_bits(&m, &bits_b));
            let large = testutil::subset_from_bits(&m, &bits_a)
                .union(&testutil::subset_from_bits(&m, &bits_b));

            let eg = StateFormula::eg(f.clone());
            prop_assert!(denotation(&m, &eg, &small).unwrap()
                .is_subset(&denotation(&m, &eg, &large).unwrap()));
            let ef = StateFormula::ef(f);
            prop_assert!(denotation(&m, &ef, &large).unwrap()
                .is_subset(&denotation(&m, &ef, &small).unwrap()));
        }

        // Textbook cross-checks at the empty tag: EF is backward
        // reachability, AG is its complement-dual.
        #[test]
        fn empty_tag_semantics_match_reachability(
            m in testutil::arb_model(6),
            f in testutil::arb_state_formula(2),
        ) {
            let base = denotation(&m, &f, &m.empty_set()).unwrap();
            let reach = testutil::backward_reachable(&m, &base);
            let ef = StateFormula::ef(f.clone());
            prop_assert_eq!(denotation(&m, &ef, &m.empty_set()).unwrap(), reach.clone());

            // AG φ = S \ EF ¬φ, evaluated without the rewrite machinery.
            let ag = StateFormula::ag(f.clone());
            let bad = testutil::backward_reachable(&m, &base.complement());
            prop_assert_eq!(denotation(&m, &ag, &m.empty_set()).unwrap(), bad.complement());
        }
    }
}
