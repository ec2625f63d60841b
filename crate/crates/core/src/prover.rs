//! Backward proof search over tagged sequents.
//!
//! A sequent `M, s ⊢_U φ` is proved by applying the fourteen rules of the
//! proof system backward. The tag `U` collects the states already visited
//! for the current `F`/`G` formula: μ-rules (`EF`/`AF`) refuse tagged
//! states and extend the tag toward the premises, ν-rules (`EG`/`AG`)
//! close as axioms on tagged states. Together with the shrinking formula
//! this bounds every branch, so search terminates on every input.
//!
//! [`prove`] works in two phases. A depth-first decision pass with full
//! backtracking settles whether any derivation exists; failure there is
//! definitive, because the pass exhausts the finite derivation space.
//! Only derivable sequents enter the second phase, an iterative-deepening
//! search that extracts a proof of minimal derivation depth. Both phases
//! explore alternatives in the same fixed order (axioms close first,
//! `F₁` before `F₂`, successor choices by state index, `∨₁` before `∨₂`),
//! so results are deterministic byte for byte.
//!
//! Two concessions keep pathological inputs tractable. The decision pass
//! caches the verdicts of empty-tag subgoals, which collapses the repeated
//! body premises that nested `G`/`F` formulas generate at every unfolding
//! step. And because a canonical derivation can be exponentially large as
//! a tree even when it has few *distinct* nodes (the `A`-rules re-derive
//! their body at every successor), proof children are reference-counted:
//! when the deepening search exceeds a fixed node budget, [`prove`] falls
//! back to a memoized construction that shares identical sub-derivations.
//! The logical tree is the same; only its in-memory shape is a DAG.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::formula::{Modality, PathQuantifier, StateFormula};
use crate::kripke::{KripkeStructure, StateId, StateSet};

/// The judgment `M, s ⊢_U φ` (the structure is implicit).
///
/// Invariant maintained by the rules: the tag is non-empty only when the
/// formula's top operator is one of `EF`/`AF`/`EG`/`AG`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Sequent {
    pub state: StateId,
    pub tag: StateSet,
    pub formula: StateFormula,
}

impl Sequent {
    pub fn new(state: StateId, tag: StateSet, formula: StateFormula) -> Self {
        Sequent { state, tag, formula }
    }

    /// Renders `s ⊢{a,b} φ` using the state names of `m`.
    pub fn display<'a>(&'a self, m: &'a KripkeStructure) -> SequentDisplay<'a> {
        SequentDisplay { sequent: self, m }
    }
}

pub struct SequentDisplay<'a> {
    sequent: &'a Sequent,
    m: &'a KripkeStructure,
}

impl fmt::Display for SequentDisplay<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} ⊢{{", self.m.state_name(self.sequent.state))?;
        for (i, s) in self.sequent.tag.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            f.write_str(self.m.state_name(s))?;
        }
        write!(f, "}} {}", self.sequent.formula)
    }
}

/// The fourteen rules of the proof system (counting the two `∨` and two
/// atomic rules separately).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RuleName {
    /// Atomic axiom, named `p` in certificates.
    Atom,
    /// Negated-atom axiom, named `not_p`.
    NegAtom,
    And,
    Or1,
    Or2,
    Ax,
    Ex,
    Ag1,
    Ag2,
    Af1,
    Af2,
    Eg1,
    Eg2,
    Ef1,
    Ef2,
}

impl RuleName {
    pub const ALL: [RuleName; 15] = [
        RuleName::Atom,
        RuleName::NegAtom,
        RuleName::And,
        RuleName::Or1,
        RuleName::Or2,
        RuleName::Ax,
        RuleName::Ex,
        RuleName::Ag1,
        RuleName::Ag2,
        RuleName::Af1,
        RuleName::Af2,
        RuleName::Eg1,
        RuleName::Eg2,
        RuleName::Ef1,
        RuleName::Ef2,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            RuleName::Atom => "p",
            RuleName::NegAtom => "not_p",
            RuleName::And => "and",
            RuleName::Or1 => "or1",
            RuleName::Or2 => "or2",
            RuleName::Ax => "AX",
            RuleName::Ex => "EX",
            RuleName::Ag1 => "AG1",
            RuleName::Ag2 => "AG2",
            RuleName::Af1 => "AF1",
            RuleName::Af2 => "AF2",
            RuleName::Eg1 => "EG1",
            RuleName::Eg2 => "EG2",
            RuleName::Ef1 => "EF1",
            RuleName::Ef2 => "EF2",
        }
    }
}

impl fmt::Display for RuleName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Rule name as it appears in certificates was not recognized.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UnknownRuleName(pub alloc::string::String);

impl fmt::Display for UnknownRuleName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "unknown rule name `{}`", self.0)
    }
}

impl core::error::Error for UnknownRuleName {}

impl core::str::FromStr for RuleName {
    type Err = UnknownRuleName;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        RuleName::ALL
            .into_iter()
            .find(|r| r.as_str() == s)
            .ok_or_else(|| UnknownRuleName(alloc::string::String::from(s)))
    }
}

/// A rule-labelled derivation. Each node claims that `conclusion` follows
/// from the `children`'s conclusions by `rule`; the claim is checked by
/// the certifier, not trusted.
///
/// Children are reference-counted so that repeated sub-derivations can be
/// stored once. Equality and the node iterators treat the value as the
/// logical tree it denotes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProofTree {
    pub conclusion: Sequent,
    pub rule: RuleName,
    pub children: Vec<Arc<ProofTree>>,
}

impl ProofTree {
    /// Number of nodes of the logical tree (counting shared subtrees once
    /// per occurrence), saturating at `u64::MAX`. Computed in time
    /// proportional to the number of *distinct* nodes.
    pub fn node_count(&self) -> u64 {
        fn count(node: &ProofTree, memo: &mut BTreeMap<usize, u64>) -> u64 {
            let mut total = 1u64;
            for child in &node.children {
                let key = Arc::as_ptr(child) as usize;
                let sub = match memo.get(&key) {
                    Some(&n) => n,
                    None => {
                        let n = count(child, memo);
                        memo.insert(key, n);
                        n
                    }
                };
                total = total.saturating_add(sub);
            }
            total
        }
        count(self, &mut BTreeMap::new())
    }

    /// Mutable access to child `i`, copying it first if it is shared.
    pub fn child_mut(&mut self, i: usize) -> &mut ProofTree {
        Arc::make_mut(&mut self.children[i])
    }

    /// The distinct nodes of the derivation in pre-order (shared subtrees
    /// appear once).
    pub fn nodes(&self) -> Vec<&ProofTree> {
        let mut out = Vec::new();
        let mut seen = BTreeSet::new();
        fn walk<'a>(
            node: &'a ProofTree,
            seen: &mut BTreeSet<usize>,
            out: &mut Vec<&'a ProofTree>,
        ) {
            out.push(node);
            for child in &node.children {
                if seen.insert(Arc::as_ptr(child) as usize) {
                    walk(child, seen, out);
                }
            }
        }
        walk(self, &mut seen, &mut out);
        out
    }
}

/// Search effort counters. Purely informational.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct SearchStats {
    /// Sequents expanded, summed over both search phases.
    pub expanded: u64,
    /// Rule alternatives abandoned because a premise failed.
    pub backtracks: u64,
    /// Deepest sequent expanded.
    pub max_depth: usize,
}

/// Outcome of [`prove`]: a proof when the sequent is derivable, plus
/// search statistics. Exhaustive failure is definitive — the proof system
/// is sound and complete, so `holds()` equals semantic validity.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Verdict {
    pub proof: Option<ProofTree>,
    pub stats: SearchStats,
}

impl Verdict {
    pub fn holds(&self) -> bool {
        self.proof.is_some()
    }
}

/// One way to apply a rule backward to a sequent: the rule, its premises
/// in order, and whether it competed with other applications.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RuleApplication {
    pub rule: RuleName,
    pub premises: Vec<Sequent>,
    /// True when the sequent admitted more than one application, i.e. the
    /// search commits to a choice here and may backtrack.
    pub choice_point: bool,
}

/// Enumerates every rule application whose conclusion matches `seq`, in
/// search order: axioms close immediately; `F₁` comes before `F₂`
/// (discharging via the body is preferred); successor choices follow
/// state-index order; `∨₁` before `∨₂`.
///
/// Premise tags follow the rules: empty for all non-`F`/`G` premises and
/// for the body premises, `U ∪ {s}` for the recursive `F`/`G` premises.
/// The `A`-rules take one premise per successor in index order and are
/// vacuously applicable (zero premises) at deadlock states.
pub fn applicable_rules(m: &KripkeStructure, seq: &Sequent) -> Vec<RuleApplication> {
    let s = seq.state;
    let tag = &seq.tag;
    let empty = m.empty_set();
    let mut apps: Vec<RuleApplication> = Vec::new();
    let mut push = |rule, premises| {
        apps.push(RuleApplication { rule, premises, choice_point: false });
    };

    match &seq.formula {
        StateFormula::Atom(p) => {
            if tag.is_empty() && m.has_label(s, p) {
                push(RuleName::Atom, vec![]);
            }
        }
        StateFormula::NegAtom(p) => {
            if tag.is_empty() && !m.has_label(s, p) {
                push(RuleName::NegAtom, vec![]);
            }
        }
        StateFormula::And(l, r) => {
            if tag.is_empty() {
                push(
                    RuleName::And,
                    vec![
                        Sequent::new(s, empty.clone(), l.as_ref().clone()),
                        Sequent::new(s, empty.clone(), r.as_ref().clone()),
                    ],
                );
            }
        }
        StateFormula::Or(l, r) => {
            if tag.is_empty() {
                push(RuleName::Or1, vec![Sequent::new(s, empty.clone(), l.as_ref().clone())]);
                push(RuleName::Or2, vec![Sequent::new(s, empty.clone(), r.as_ref().clone())]);
            }
        }
        StateFormula::Temporal(q, Modality::Next, body) => {
            if tag.is_empty() {
                match q {
                    PathQuantifier::Exists => {
                        for succ in m.successors(s).iter() {
                            push(
                                RuleName::Ex,
                                vec![Sequent::new(succ, empty.clone(), body.as_ref().clone())],
                            );
                        }
                    }
                    PathQuantifier::All => {
                        let premises = m
                            .successors(s)
                            .iter()
                            .map(|succ| Sequent::new(succ, empty.clone(), body.as_ref().clone()))
                            .collect();
                        push(RuleName::Ax, premises);
                    }
                }
            }
        }
        StateFormula::Temporal(q, Modality::Globally, body) => {
            if tag.contains(s) {
                let axiom = match q {
                    PathQuantifier::Exists => RuleName::Eg1,
                    PathQuantifier::All => RuleName::Ag1,
                };
                push(axiom, vec![]);
            } else {
                let extended = tag.inserted(s);
                let body_premise = Sequent::new(s, empty.clone(), body.as_ref().clone());
                match q {
                    PathQuantifier::Exists => {
                        for succ in m.successors(s).iter() {
                            push(
                                RuleName::Eg2,
                                vec![
                                    body_premise.clone(),
                                    Sequent::new(succ, extended.clone(), seq.formula.clone()),
                                ],
                            );
                        }
                    }
                    PathQuantifier::All => {
                        let mut premises = vec![body_premise];
                        premises.extend(
                            m.successors(s)
                                .iter()
                                .map(|succ| Sequent::new(succ, extended.clone(), seq.formula.clone())),
                        );
                        push(RuleName::Ag2, premises);
                    }
                }
            }
        }
        StateFormula::Temporal(q, Modality::Finally, body) => {
            if !tag.contains(s) {
                let extended = tag.inserted(s);
                let body_premise = Sequent::new(s, empty.clone(), body.as_ref().clone());
                match q {
                    PathQuantifier::Exists => {
                        push(RuleName::Ef1, vec![body_premise]);
                        for succ in m.successors(s).iter() {
                            push(
                                RuleName::Ef2,
                                vec![Sequent::new(succ, extended.clone(), seq.formula.clone())],
                            );
                        }
                    }
                    PathQuantifier::All => {
                        push(RuleName::Af1, vec![body_premise]);
                        let premises = m
                            .successors(s)
                            .iter()
                            .map(|succ| Sequent::new(succ, extended.clone(), seq.formula.clone()))
                            .collect();
                        push(RuleName::Af2, premises);
                    }
                }
            }
        }
    }

    if apps.len() > 1 {
        for app in &mut apps {
            app.choice_point = true;
        }
    }
    apps
}

/// The measure that shrinks along every rule edge: lexicographic pair of
/// formula size and number of untagged states. Every premise of every
/// application compares strictly below its conclusion, which bounds the
/// depth of any derivation.
pub fn termination_measure(seq: &Sequent, m: &KripkeStructure) -> (usize, usize) {
    (seq.formula.size(), m.state_count() - seq.tag.len())
}

/// Work (sequent expansions plus constructed nodes, summed over all
/// deepening iterations) the minimal-depth search may spend before
/// [`prove`] switches to the memoized shared-subtree construction.
const DEEPENING_WORK_BUDGET: u64 = 1 << 8;

/// Decides `M, state ⊢_∅ formula` by backward proof search.
///
/// Returns a proof of minimal derivation depth when the sequent is
/// derivable (for derivations beyond [`DEEPENING_WORK_BUDGET`], some valid
/// proof with shared subtrees instead). When the sequent is not derivable,
/// the entire finite space of derivations has been exhausted and the
/// negative verdict is definitive.
pub fn prove(m: &KripkeStructure, state: StateId, formula: &StateFormula) -> Verdict {
    let mut ctx = Search {
        m,
        subformulas: collect_subformulas(formula),
        verdicts: Vec::new(),
        stats: SearchStats::default(),
        deepening_work: 0,
    };
    ctx.verdicts = vec![None; ctx.subformulas.len() * m.state_count()];

    if !ctx.decide(state, &m.empty_set(), formula, 0) {
        return Verdict { proof: None, stats: ctx.stats };
    }

    // No derivation can be deeper than the longest strictly decreasing
    // chain of termination measures.
    let depth_cap = formula.size() * (m.state_count() + 1);
    for limit in 0..=depth_cap {
        match ctx.search_limited(state, &m.empty_set(), formula, 0, limit) {
            Ok(Some(proof)) => return Verdict { proof: Some(proof), stats: ctx.stats },
            Ok(None) => continue,
            Err(BudgetExceeded) => break,
        }
    }

    let proof = ctx
        .build_shared(state, &m.empty_set(), formula)
        .expect("a derivable sequent must yield a proof");
    Verdict { proof: Some(proof.as_ref().clone()), stats: ctx.stats }
}

fn collect_subformulas(f: &StateFormula) -> Vec<*const StateFormula> {
    let mut out = Vec::with_capacity(f.size());
    fn walk(f: &StateFormula, out: &mut Vec<*const StateFormula>) {
        out.push(f as *const _);
        match f {
            StateFormula::Atom(_) | StateFormula::NegAtom(_) => {}
            StateFormula::And(l, r) | StateFormula::Or(l, r) => {
                walk(l, out);
                walk(r, out);
            }
            StateFormula::Temporal(_, _, body) => walk(body, out),
        }
    }
    walk(f, &mut out);
    out
}

struct BudgetExceeded;

/// State shared by the two search phases of one [`prove`] call.
struct Search<'a> {
    m: &'a KripkeStructure,
    /// Pre-order addresses of the root formula's subformulas; decide()
    /// only ever sees formulas from this set.
    subformulas: Vec<*const StateFormula>,
    /// Cached verdicts of empty-tag subgoals, keyed by subformula × state.
    /// Nested `G`/`F` unfoldings re-pose the same body goals at every
    /// step; without this cache they take time exponential in the nesting
    /// depth.
    verdicts: Vec<Option<bool>>,
    stats: SearchStats,
    /// Work spent so far by `search_limited`, across deepening iterations.
    deepening_work: u64,
}

impl Search<'_> {
    fn subformula_id(&self, f: &StateFormula) -> usize {
        let ptr = f as *const _;
        self.subformulas.iter().position(|&p| p == ptr).expect("formula from this query")
    }

    fn verdict_slot(&self, f: &StateFormula, state: StateId) -> usize {
        self.subformula_id(f) * self.m.state_count() + state.index()
    }

    /// The decision pass: plain depth-first backtracking over the same
    /// rule alternatives as [`applicable_rules`], coded directly on
    /// borrowed formulas so that failing branches allocate nothing. The
    /// body premise of the `G₂` rules is checked once rather than per
    /// successor choice — it does not depend on the choice.
    fn decide(&mut self, state: StateId, tag: &StateSet, formula: &StateFormula, depth: usize) -> bool {
        let cache_slot = if tag.is_empty() {
            let slot = self.verdict_slot(formula, state);
            if let Some(known) = self.verdicts[slot] {
                return known;
            }
            Some(slot)
        } else {
            None
        };
        let holds = self.decide_uncached(state, tag, formula, depth);
        if let Some(slot) = cache_slot {
            self.verdicts[slot] = Some(holds);
        }
        holds
    }

    fn decide_uncached(
        &mut self,
        state: StateId,
        tag: &StateSet,
        formula: &StateFormula,
        depth: usize,
    ) -> bool {
        self.stats.expanded += 1;
        if depth > self.stats.max_depth {
            self.stats.max_depth = depth;
        }
        let m = self.m;
        let empty = m.empty_set();
        match formula {
            StateFormula::Atom(p) => tag.is_empty() && m.has_label(state, p),
            StateFormula::NegAtom(p) => tag.is_empty() && !m.has_label(state, p),
            StateFormula::And(l, r) => {
                if !tag.is_empty() {
                    return false;
                }
                if self.decide(state, &empty, l, depth + 1)
                    && self.decide(state, &empty, r, depth + 1)
                {
                    true
                } else {
                    self.stats.backtracks += 1;
                    false
                }
            }
            StateFormula::Or(l, r) => {
                if !tag.is_empty() {
                    return false;
                }
                for disjunct in [l, r] {
                    if self.decide(state, &empty, disjunct, depth + 1) {
                        return true;
                    }
                    self.stats.backtracks += 1;
                }
                false
            }
            StateFormula::Temporal(q, Modality::Next, body) => {
                if !tag.is_empty() {
                    return false;
                }
                match q {
                    PathQuantifier::Exists => {
                        for succ in m.successors(state).iter() {
                            if self.decide(succ, &empty, body, depth + 1) {
                                return true;
                            }
                            self.stats.backtracks += 1;
                        }
                        false
                    }
                    PathQuantifier::All => {
                        for succ in m.successors(state).iter() {
                            if !self.decide(succ, &empty, body, depth + 1) {
                                self.stats.backtracks += 1;
                                return false;
                            }
                        }
                        true
                    }
                }
            }
            StateFormula::Temporal(q, Modality::Globally, body) => {
                if tag.contains(state) {
                    return true; // EG₁ / AG₁
                }
                if !self.decide(state, &empty, body, depth + 1) {
                    self.stats.backtracks += 1;
                    return false;
                }
                let extended = tag.inserted(state);
                match q {
                    PathQuantifier::Exists => {
                        for succ in m.successors(state).iter() {
                            if self.decide(succ, &extended, formula, depth + 1) {
                                return true;
                            }
                            self.stats.backtracks += 1;
                        }
                        false
                    }
                    PathQuantifier::All => {
                        for succ in m.successors(state).iter() {
                            if !self.decide(succ, &extended, formula, depth + 1) {
                                self.stats.backtracks += 1;
                                return false;
                            }
                        }
                        true
                    }
                }
            }
            StateFormula::Temporal(q, Modality::Finally, body) => {
                if tag.contains(state) {
                    return false; // both F rules require s ∉ U
                }
                if self.decide(state, &empty, body, depth + 1) {
                    return true; // EF₁ / AF₁
                }
                self.stats.backtracks += 1;
                let extended = tag.inserted(state);
                match q {
                    PathQuantifier::Exists => {
                        for succ in m.successors(state).iter() {
                            if self.decide(succ, &extended, formula, depth + 1) {
                                return true;
                            }
                            self.stats.backtracks += 1;
                        }
                        false
                    }
                    PathQuantifier::All => {
                        for succ in m.successors(state).iter() {
                            if !self.decide(succ, &extended, formula, depth + 1) {
                                self.stats.backtracks += 1;
                                return false;
                            }
                        }
                        true
                    }
                }
            }
        }
    }

    fn node(
        &mut self,
        state: StateId,
        tag: &StateSet,
        formula: &StateFormula,
        rule: RuleName,
        children: Vec<Arc<ProofTree>>,
    ) -> Result<Option<ProofTree>, BudgetExceeded> {
        self.spend(1)?;
        Ok(Some(ProofTree {
            conclusion: Sequent::new(state, tag.clone(), formula.clone()),
            rule,
            children,
        }))
    }

    fn spend(&mut self, amount: u64) -> Result<(), BudgetExceeded> {
        self.deepening_work += amount;
        if self.deepening_work > DEEPENING_WORK_BUDGET {
            Err(BudgetExceeded)
        } else {
            Ok(())
        }
    }

    /// The certificate pass: depth-limited search in the same alternative
    /// order as [`Search::decide`], materializing sequents and tree nodes
    /// only along success paths. Called with increasing limits, so the
    /// first proof it yields has minimal derivation depth.
    fn search_limited(
        &mut self,
        state: StateId,
        tag: &StateSet,
        formula: &StateFormula,
        depth: usize,
        limit: usize,
    ) -> Result<Option<ProofTree>, BudgetExceeded> {
        self.spend(1)?;
        self.stats.expanded += 1;
        if depth > self.stats.max_depth {
            self.stats.max_depth = depth;
        }
        let m = self.m;
        let empty = m.empty_set();
        let at_limit = depth == limit;

        match formula {
            StateFormula::Atom(p) => {
                if tag.is_empty() && m.has_label(state, p) {
                    self.node(state, tag, formula, RuleName::Atom, Vec::new())
                } else {
                    Ok(None)
                }
            }
            StateFormula::NegAtom(p) => {
                if tag.is_empty() && !m.has_label(state, p) {
                    self.node(state, tag, formula, RuleName::NegAtom, Vec::new())
                } else {
                    Ok(None)
                }
            }
            StateFormula::And(l, r) => {
                if !tag.is_empty() || at_limit {
                    return Ok(None);
                }
                if let Some(left) = self.search_limited(state, &empty, l, depth + 1, limit)? {
                    if let Some(right) = self.search_limited(state, &empty, r, depth + 1, limit)? {
                        return self.node(
                            state,
                            tag,
                            formula,
                            RuleName::And,
                            vec![Arc::new(left), Arc::new(right)],
                        );
                    }
                }
                self.stats.backtracks += 1;
                Ok(None)
            }
            StateFormula::Or(l, r) => {
                if !tag.is_empty() || at_limit {
                    return Ok(None);
                }
                for (rule, disjunct) in [(RuleName::Or1, l), (RuleName::Or2, r)] {
                    if let Some(child) =
                        self.search_limited(state, &empty, disjunct, depth + 1, limit)?
                    {
                        return self.node(state, tag, formula, rule, vec![Arc::new(child)]);
                    }
                    self.stats.backtracks += 1;
                }
                Ok(None)
            }
            StateFormula::Temporal(q, Modality::Next, body) => {
                if !tag.is_empty() {
                    return Ok(None);
                }
                match q {
                    PathQuantifier::Exists => {
                        if at_limit {
                            return Ok(None);
                        }
                        for succ in m.successors(state).iter() {
                            if let Some(child) =
                                self.search_limited(succ, &empty, body, depth + 1, limit)?
                            {
                                return self.node(
                                    state,
                                    tag,
                                    formula,
                                    RuleName::Ex,
                                    vec![Arc::new(child)],
                                );
                            }
                            self.stats.backtracks += 1;
                        }
                        Ok(None)
                    }
                    PathQuantifier::All => {
                        let successors = m.successors(state);
                        if at_limit && !successors.is_empty() {
                            return Ok(None);
                        }
                        let mut children = Vec::with_capacity(successors.len());
                        for succ in successors.iter() {
                            match self.search_limited(succ, &empty, body, depth + 1, limit)? {
                                Some(child) => children.push(Arc::new(child)),
                                None => {
                                    self.stats.backtracks += 1;
                                    return Ok(None);
                                }
                            }
                        }
                        self.node(state, tag, formula, RuleName::Ax, children)
                    }
                }
            }
            StateFormula::Temporal(q, Modality::Globally, body) => {
                if tag.contains(state) {
                    let axiom = match q {
                        PathQuantifier::Exists => RuleName::Eg1,
                        PathQuantifier::All => RuleName::Ag1,
                    };
                    return self.node(state, tag, formula, axiom, Vec::new());
                }
                if at_limit {
                    return Ok(None);
                }
                // The body premise is shared by every successor choice.
                let body_proof = match self.search_limited(state, &empty, body, depth + 1, limit)? {
                    Some(proof) => Arc::new(proof),
                    None => {
                        self.stats.backtracks += 1;
                        return Ok(None);
                    }
                };
                let extended = tag.inserted(state);
                match q {
                    PathQuantifier::Exists => {
                        for succ in m.successors(state).iter() {
                            if let Some(child) =
                                self.search_limited(succ, &extended, formula, depth + 1, limit)?
                            {
                                return self.node(
                                    state,
                                    tag,
                                    formula,
                                    RuleName::Eg2,
                                    vec![body_proof, Arc::new(child)],
                                );
                            }
                            self.stats.backtracks += 1;
                        }
                        Ok(None)
                    }
                    PathQuantifier::All => {
                        let successors = m.successors(state);
                        let mut children = Vec::with_capacity(1 + successors.len());
                        children.push(body_proof);
                        for succ in successors.iter() {
                            match self.search_limited(succ, &extended, formula, depth + 1, limit)? {
                                Some(child) => children.push(Arc::new(child)),
                                None => {
                                    self.stats.backtracks += 1;
                                    return Ok(None);
                                }
                            }
                        }
                        self.node(state, tag, formula, RuleName::Ag2, children)
                    }
                }
            }
            StateFormula::Temporal(q, Modality::Finally, body) => {
                if tag.contains(state) {
                    return Ok(None); // both F rules require s ∉ U
                }
                let successors = m.successors(state);
                // AF₂ closes with zero premises at deadlocks even on the
                // depth frontier; everything else below needs room.
                if at_limit {
                    return match q {
                        PathQuantifier::All if successors.is_empty() => {
                            self.node(state, tag, formula, RuleName::Af2, Vec::new())
                        }
                        _ => Ok(None),
                    };
                }
                if let Some(child) = self.search_limited(state, &empty, body, depth + 1, limit)? {
                    let rule = match q {
                        PathQuantifier::Exists => RuleName::Ef1,
                        PathQuantifier::All => RuleName::Af1,
                    };
                    return self.node(state, tag, formula, rule, vec![Arc::new(child)]);
                }
                self.stats.backtracks += 1;
                let extended = tag.inserted(state);
                match q {
                    PathQuantifier::Exists => {
                        for succ in successors.iter() {
                            if let Some(child) =
                                self.search_limited(succ, &extended, formula, depth + 1, limit)?
                            {
                                return self.node(
                                    state,
                                    tag,
                                    formula,
                                    RuleName::Ef2,
                                    vec![Arc::new(child)],
                                );
                            }
                            self.stats.backtracks += 1;
                        }
                        Ok(None)
                    }
                    PathQuantifier::All => {
                        let mut children = Vec::with_capacity(successors.len());
                        for succ in successors.iter() {
                            match self.search_limited(succ, &extended, formula, depth + 1, limit)? {
                                Some(child) => children.push(Arc::new(child)),
                                None => {
                                    self.stats.backtracks += 1;
                                    return Ok(None);
                                }
                            }
                        }
                        self.node(state, tag, formula, RuleName::Af2, children)
                    }
                }
            }
        }
    }

    /// Fallback certificate construction for derivations too large to
    /// materialize node by node: greedy first-applicable-rule search with
    /// one memoized derivation per distinct sequent. The premise graph is
    /// acyclic (the termination measure shrinks along every edge), so
    /// plain memoized recursion terminates; identical sub-derivations are
    /// shared instead of re-built, keeping the physical size bounded by
    /// the number of distinct sequents.
    fn build_shared(
        &mut self,
        state: StateId,
        tag: &StateSet,
        formula: &StateFormula,
    ) -> Option<Arc<ProofTree>> {
        let mut memo = BTreeMap::new();
        self.build_shared_memo(state, tag, formula, &mut memo)
    }

    fn build_shared_memo(
        &mut self,
        state: StateId,
        tag: &StateSet,
        formula: &StateFormula,
        memo: &mut SharedMemo,
    ) -> Option<Arc<ProofTree>> {
        let key = (self.subformula_id(formula), state.index() as u32, tag.clone());
        if let Some(hit) = memo.get(&key) {
            return hit.clone();
        }
        self.stats.expanded += 1;
        let built = self.build_shared_uncached(state, tag, formula, memo);
        memo.insert(key, built.clone());
        built
    }

    fn build_shared_uncached(
        &mut self,
        state: StateId,
        tag: &StateSet,
        formula: &StateFormula,
        memo: &mut SharedMemo,
    ) -> Option<Arc<ProofTree>> {
        let m = self.m;
        let empty = m.empty_set();
        let node = |rule: RuleName, children: Vec<Arc<ProofTree>>| {
            Some(Arc::new(ProofTree {
                conclusion: Sequent::new(state, tag.clone(), formula.clone()),
                rule,
                children,
            }))
        };
        match formula {
            StateFormula::Atom(p) => {
                (tag.is_empty() && m.has_label(state, p)).then(|| node(RuleName::Atom, Vec::new()))?
            }
            StateFormula::NegAtom(p) => (tag.is_empty() && !m.has_label(state, p))
                .then(|| node(RuleName::NegAtom, Vec::new()))?,
            StateFormula::And(l, r) => {
                if !tag.is_empty() {
                    return None;
                }
                let left = self.build_shared_memo(state, &empty, l, memo)?;
                let right = self.build_shared_memo(state, &empty, r, memo)?;
                node(RuleName::And, vec![left, right])
            }
            StateFormula::Or(l, r) => {
                if !tag.is_empty() {
                    return None;
                }
                for (rule, disjunct) in [(RuleName::Or1, l), (RuleName::Or2, r)] {
                    if let Some(child) = self.build_shared_memo(state, &empty, disjunct, memo) {
                        return node(rule, vec![child]);
                    }
                    self.stats.backtracks += 1;
                }
                None
            }
            StateFormula::Temporal(q, Modality::Next, body) => {
                if !tag.is_empty() {
                    return None;
                }
                match q {
                    PathQuantifier::Exists => {
                        for succ in m.successors(state).iter() {
                            if let Some(child) = self.build_shared_memo(succ, &empty, body, memo) {
                                return node(RuleName::Ex, vec![child]);
                            }
                            self.stats.backtracks += 1;
                        }
                        None
                    }
                    PathQuantifier::All => {
                        let mut children = Vec::new();
                        for succ in m.successors(state).iter() {
                            children.push(self.build_shared_memo(succ, &empty, body, memo)?);
                        }
                        node(RuleName::Ax, children)
                    }
                }
            }
            StateFormula::Temporal(q, Modality::Globally, body) => {
                if tag.contains(state) {
                    let axiom = match q {
                        PathQuantifier::Exists => RuleName::Eg1,
                        PathQuantifier::All => RuleName::Ag1,
                    };
                    return node(axiom, Vec::new());
                }
                let body_proof = self.build_shared_memo(state, &empty, body, memo)?;
                let extended = tag.inserted(state);
                match q {
                    PathQuantifier::Exists => {
                        for succ in m.successors(state).iter() {
                            if let Some(child) =
                                self.build_shared_memo(succ, &extended, formula, memo)
                            {
                                return node(RuleName::Eg2, vec![body_proof, child]);
                            }
                            self.stats.backtracks += 1;
                        }
                        None
                    }
                    PathQuantifier::All => {
                        let mut children = vec![body_proof];
                        for succ in m.successors(state).iter() {
                            children.push(self.build_shared_memo(succ, &extended, formula, memo)?);
                        }
                        node(RuleName::Ag2, children)
                    }
                }
            }
            StateFormula::Temporal(q, Modality::Finally, body) => {
                if tag.contains(state) {
                    return None;
                }
                if let Some(child) = self.build_shared_memo(state, &empty, body, memo) {
                    let rule = match q {
                        PathQuantifier::Exists => RuleName::Ef1,
                        PathQuantifier::All => RuleName::Af1,
                    };
                    return node(rule, vec![child]);
                }
                self.stats.backtracks += 1;
                let extended = tag.inserted(state);
                match q {
                    PathQuantifier::Exists => {
                        for succ in m.successors(state).iter() {
                            if let Some(child) =
                                self.build_shared_memo(succ, &extended, formula, memo)
                            {
                                return node(RuleName::Ef2, vec![child]);
                            }
                            self.stats.backtracks += 1;
                        }
                        None
                    }
                    PathQuantifier::All => {
                        let mut children = Vec::new();
                        for succ in m.successors(state).iter() {
                            children.push(self.build_shared_memo(succ, &extended, formula, memo)?);
                        }
                        node(RuleName::Af2, children)
                    }
                }
            }
        }
    }
}

type SharedMemo = BTreeMap<(usize, u32, StateSet), Option<Arc<ProofTree>>>;
