//! Finite Kripke structures and the `pre∃` / `pre∀` state transformers.
//!
//! A structure is a set of named states, a (not necessarily total) binary
//! transition relation, and a labelling of states with atomic propositions.
//! States are identified by their declaration index; all iteration orders
//! in this crate follow that index so results are reproducible byte for
//! byte.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::ParseError;

/// Index of a state within its owning [`KripkeStructure`].
///
/// Ids are handed out in declaration order. An id is only meaningful
/// together with the structure that created it; the constructor is public
/// for convenience but does not (and cannot) range-check.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct StateId(u32);

impl StateId {
    pub fn new(index: usize) -> Self {
        StateId(index as u32)
    }

    pub fn index(self) -> usize {
        self.0 as usize
    }
}

/// A subset of the states of one structure, stored as a dense bit set.
///
/// The first 64 bits live inline, so sets over structures of at most 64
/// states never touch the heap — proof search clones tags constantly and
/// depends on that. All binary operations require both operands to come
/// from structures of the same size and panic otherwise; mixing sets
/// across structures is a bug in the caller.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct StateSet {
    universe: u32,
    head: u64,
    tail: Vec<u64>,
}

fn tail_len(universe: u32) -> usize {
    (universe as usize).saturating_sub(1) / 64
}

impl StateSet {
    /// The empty subset of a `universe`-state structure.
    pub fn empty(universe: usize) -> Self {
        let universe = universe as u32;
        StateSet { universe, head: 0, tail: vec![0; tail_len(universe)] }
    }

    /// The full state set of a `universe`-state structure.
    pub fn full(universe: usize) -> Self {
        let mut set = StateSet::empty(universe);
        set.head = u64::MAX;
        set.tail.fill(u64::MAX);
        set.mask_tail();
        set
    }

    pub fn singleton(universe: usize, s: StateId) -> Self {
        let mut set = StateSet::empty(universe);
        set.insert(s);
        set
    }

    /// Number of states in the owning structure (not the cardinality).
    pub fn universe(&self) -> usize {
        self.universe as usize
    }

    pub fn len(&self) -> usize {
        self.head.count_ones() as usize
            + self.tail.iter().map(|w| w.count_ones() as usize).sum::<usize>()
    }

    pub fn is_empty(&self) -> bool {
        self.head == 0 && self.tail.iter().all(|&w| w == 0)
    }

    fn word(&self, w: usize) -> u64 {
        if w == 0 {
            self.head
        } else {
            self.tail[w - 1]
        }
    }

    fn word_mut(&mut self, w: usize) -> &mut u64 {
        if w == 0 {
            &mut self.head
        } else {
            &mut self.tail[w - 1]
        }
    }

    pub fn contains(&self, s: StateId) -> bool {
        let i = s.index();
        i < self.universe as usize && self.word(i / 64) >> (i % 64) & 1 == 1
    }

    /// Inserts a state; returns `true` if it was not already a member.
    pub fn insert(&mut self, s: StateId) -> bool {
        let i = s.index();
        assert!(i < self.universe as usize, "state index {i} outside universe");
        let word = self.word_mut(i / 64);
        let fresh = *word >> (i % 64) & 1 == 0;
        *word |= 1 << (i % 64);
        fresh
    }

    pub fn remove(&mut self, s: StateId) -> bool {
        let i = s.index();
        assert!(i < self.universe as usize, "state index {i} outside universe");
        let word = self.word_mut(i / 64);
        let present = *word >> (i % 64) & 1 == 1;
        *word &= !(1 << (i % 64));
        present
    }

    /// Copy of `self` with `s` added; this is the tag extension `U, s`.
    pub fn inserted(&self, s: StateId) -> Self {
        let mut set = self.clone();
        set.insert(s);
        set
    }

    pub fn union(&self, other: &Self) -> Self {
        self.zip_with(other, |a, b| a | b)
    }

    pub fn intersection(&self, other: &Self) -> Self {
        self.zip_with(other, |a, b| a & b)
    }

    pub fn difference(&self, other: &Self) -> Self {
        self.zip_with(other, |a, b| a & !b)
    }

    pub fn complement(&self) -> Self {
        let mut set = StateSet {
            universe: self.universe,
            head: !self.head,
            tail: self.tail.iter().map(|&w| !w).collect(),
        };
        set.mask_tail();
        set
    }

    pub fn is_subset(&self, other: &Self) -> bool {
        self.check_universe(other);
        self.head & !other.head == 0
            && self.tail.iter().zip(&other.tail).all(|(&a, &b)| a & !b == 0)
    }

    pub fn intersects(&self, other: &Self) -> bool {
        self.check_universe(other);
        self.head & other.head != 0
            || self.tail.iter().zip(&other.tail).any(|(&a, &b)| a & b != 0)
    }

    /// Members in increasing index order.
    pub fn iter(&self) -> impl Iterator<Item = StateId> + '_ {
        (0..self.universe as usize).map(StateId::new).filter(move |&s| self.contains(s))
    }

    fn zip_with(&self, other: &Self, op: impl Fn(u64, u64) -> u64) -> Self {
        self.check_universe(other);
        StateSet {
            universe: self.universe,
            head: op(self.head, other.head),
            tail: self.tail.iter().zip(&other.tail).map(|(&a, &b)| op(a, b)).collect(),
        }
    }

    fn check_universe(&self, other: &Self) {
        assert_eq!(
            self.universe, other.universe,
            "state sets belong to structures of different sizes"
        );
    }

    // Unused high bits of the last word must stay zero.
    fn mask_tail(&mut self) {
        let rem = self.universe as usize % 64;
        if rem != 0 {
            let last = tail_len(self.universe);
            *self.word_mut(last) &= (1u64 << rem) - 1;
        }
        if self.universe == 0 {
            self.head = 0;
        }
    }
}

impl fmt::Debug for StateSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.iter().map(|s| s.index())).finish()
    }
}

/// A finite Kripke structure: states, transitions, and state labels.
///
/// Immutable after construction; build one with [`KripkeBuilder`] or
/// [`parse_model`]. The relation need not be total — states without
/// successors (deadlocks) are permitted and behave per the definitions of
/// `pre∃` and `pre∀`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct KripkeStructure {
    names: Vec<String>,
    index: BTreeMap<String, u32>,
    succ: Vec<StateSet>,
    labels: Vec<BTreeSet<String>>,
    atoms: BTreeSet<String>,
}

impl KripkeStructure {
    pub fn state_count(&self) -> usize {
        self.names.len()
    }

    /// All states in declaration (= index) order.
    pub fn states(&self) -> impl Iterator<Item = StateId> + '_ {
        (0..self.names.len()).map(StateId::new)
    }

    pub fn state_name(&self, s: StateId) -> &str {
        &self.names[s.index()]
    }

    pub fn state_by_name(&self, name: &str) -> Option<StateId> {
        self.index.get(name).map(|&i| StateId(i))
    }

    /// Exactly `{ s' | s -> s' }`.
    pub fn successors(&self, s: StateId) -> StateSet {
        self.succ[s.index()].clone()
    }

    pub fn has_label(&self, s: StateId, atom: &str) -> bool {
        self.labels[s.index()].contains(atom)
    }

    pub fn labels(&self, s: StateId) -> impl Iterator<Item = &str> {
        self.labels[s.index()].iter().map(String::as_str)
    }

    /// Every atom that appears in some label.
    pub fn atoms(&self) -> impl Iterator<Item = &str> {
        self.atoms.iter().map(String::as_str)
    }

    /// `{ s | atom ∈ L(s) }` — the denotation of an atomic proposition.
    /// Atoms not named anywhere in the structure yield the empty set.
    pub fn label_set(&self, atom: &str) -> StateSet {
        let mut set = self.empty_set();
        for s in self.states() {
            if self.has_label(s, atom) {
                set.insert(s);
            }
        }
        set
    }

    /// `pre∃(Y) = { s | ∃ s' ∈ Y. s -> s' }`. Deadlock states are never
    /// members.
    pub fn pre_exists(&self, y: &StateSet) -> StateSet {
        let mut set = self.empty_set();
        for s in self.states() {
            if self.succ[s.index()].intersects(y) {
                set.insert(s);
            }
        }
        set
    }

    /// `pre∀(Y) = { s | ∀ s'. (s -> s' ⇒ s' ∈ Y) }`. Deadlock states are
    /// always members (the universal is vacuous).
    pub fn pre_forall(&self, y: &StateSet) -> StateSet {
        let mut set = self.empty_set();
        for s in self.states() {
            if self.succ[s.index()].is_subset(y) {
                set.insert(s);
            }
        }
        set
    }

    pub fn empty_set(&self) -> StateSet {
        StateSet::empty(self.state_count())
    }

    pub fn full_set(&self) -> StateSet {
        StateSet::full(self.state_count())
    }
}

/// Error from [`KripkeBuilder::add_state`]: the name is already declared.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DuplicateState(pub String);

impl fmt::Display for DuplicateState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "duplicate state `{}`", self.0)
    }
}

impl core::error::Error for DuplicateState {}

/// Incremental construction of a [`KripkeStructure`].
///
/// States must be declared before they are used in transitions or labels;
/// both of those are idempotent.
#[derive(Debug, Default)]
pub struct KripkeBuilder {
    names: Vec<String>,
    index: BTreeMap<String, u32>,
    edges: BTreeSet<(u32, u32)>,
    labels: Vec<BTreeSet<String>>,
}

impl KripkeBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_state(&mut self, name: &str) -> Result<StateId, DuplicateState> {
        if self.index.contains_key(name) {
            return Err(DuplicateState(name.to_string()));
        }
        let id = self.names.len() as u32;
        self.names.push(name.to_string());
        self.index.insert(name.to_string(), id);
        self.labels.push(BTreeSet::new());
        Ok(StateId(id))
    }

    pub fn state_id(&self, name: &str) -> Option<StateId> {
        self.index.get(name).map(|&i| StateId(i))
    }

    pub fn add_transition(&mut self, from: StateId, to: StateId) {
        assert!(from.index() < self.names.len(), "transition source not declared");
        assert!(to.index() < self.names.len(), "transition target not declared");
        self.edges.insert((from.0, to.0));
    }

    pub fn add_label(&mut self, state: StateId, atom: &str) {
        assert!(state.index() < self.names.len(), "labelled state not declared");
        self.labels[state.index()].insert(atom.to_string());
    }

    pub fn finish(self) -> KripkeStructure {
        let n = self.names.len();
        let mut succ = vec![StateSet::empty(n); n];
        for &(from, to) in &self.edges {
            succ[from as usize].insert(StateId(to));
        }
        let atoms = self.labels.iter().flatten().cloned().collect();
        KripkeStructure { names: self.names, index: self.index, succ, labels: self.labels, atoms }
    }
}

/// Parses the line-oriented model format.
///
/// ```text
/// # comment to end of line; blank lines ignored
/// states: s0 s1 s2              # exactly once, first content line
/// labels: s0: p q; s1: q r      # optional, entries accumulate
/// trans: s0 -> s1; s2 -> s2     # optional, may repeat, accumulates
/// ```
///
/// Names and atoms match `[A-Za-z_][A-Za-z0-9_]*`. Duplicate transitions
/// and labels are idempotent.
pub fn parse_model(text: &str) -> Result<KripkeStructure, ParseError> {
    let mut builder = KripkeBuilder::new();
    let mut have_states = false;
    let mut lines_seen = 0;

    for (line_idx, raw) in text.lines().enumerate() {
        lines_seen = line_idx + 1;
        let content = match raw.find('#') {
            Some(pos) => &raw[..pos],
            None => raw,
        };
        if content.trim().is_empty() {
            continue;
        }
        let mut scan = Scan::new(content, line_idx + 1);
        let (keyword, kw_col) = scan.ident("section keyword")?;
        scan.expect(':')?;
        match keyword.as_str() {
            "states" => {
                if have_states {
                    return Err(scan.error_at(kw_col, "duplicate `states:` line".to_string()));
                }
                have_states = true;
                parse_states_line(&mut scan, &mut builder)?;
            }
            "labels" => {
                if !have_states {
                    return Err(scan.error_at(kw_col, "`states:` line must come first".to_string()));
                }
                parse_labels_line(&mut scan, &mut builder)?;
            }
            "trans" => {
                if !have_states {
                    return Err(scan.error_at(kw_col, "`states:` line must come first".to_string()));
                }
                parse_trans_line(&mut scan, &mut builder)?;
            }
            other => {
                return Err(scan.error_at(
                    kw_col,
                    alloc::format!("unknown section `{other}` (expected states, labels, or trans)"),
                ));
            }
        }
    }

    if !have_states {
        return Err(ParseError::new(lines_seen.max(1), 1, "model has no `states:` line".to_string()));
    }
    Ok(builder.finish())
}

fn parse_states_line(scan: &mut Scan<'_>, builder: &mut KripkeBuilder) -> Result<(), ParseError> {
    loop {
        let (name, col) = scan.ident("state name")?;
        builder
            .add_state(&name)
            .map_err(|e| scan.error_at(col, alloc::format!("{e}")))?;
        if scan.at_end() {
            return Ok(());
        }
    }
}

fn parse_labels_line(scan: &mut Scan<'_>, builder: &mut KripkeBuilder) -> Result<(), ParseError> {
    loop {
        let state = scan.state_ref(builder)?;
        scan.expect(':')?;
        while !scan.at_end() && !scan.peek_is(';') {
            let (atom, _) = scan.ident("atom")?;
            builder.add_label(state, &atom);
        }
        if scan.at_end() {
            return Ok(());
        }
        scan.expect(';')?;
    }
}

fn parse_trans_line(scan: &mut Scan<'_>, builder: &mut KripkeBuilder) -> Result<(), ParseError> {
    loop {
        let from = scan.state_ref(builder)?;
        scan.expect_arrow()?;
        let to = scan.state_ref(builder)?;
        builder.add_transition(from, to);
        if scan.at_end() {
            return Ok(());
        }
        scan.expect(';')?;
    }
}

/// Cursor over one line of the model file.
struct Scan<'a> {
    chars: Vec<char>,
    pos: usize,
    line: usize,
    _text: &'a str,
}

impl<'a> Scan<'a> {
    fn new(text: &'a str, line: usize) -> Self {
        Scan { chars: text.chars().collect(), pos: 0, line, _text: text }
    }

    fn skip_ws(&mut self) {
        while self.pos < self.chars.len() && self.chars[self.pos].is_whitespace() {
            self.pos += 1;
        }
    }

    fn at_end(&mut self) -> bool {
        self.skip_ws();
        self.pos >= self.chars.len()
    }

    fn peek_is(&mut self, c: char) -> bool {
        self.skip_ws();
        self.chars.get(self.pos) == Some(&c)
    }

    fn column(&self) -> usize {
        self.pos + 1
    }

    fn error(&self, message: String) -> ParseError {
        ParseError::new(self.line, self.column(), message)
    }

    fn error_at(&self, column: usize, message: String) -> ParseError {
        ParseError::new(self.line, column, message)
    }

    fn ident(&mut self, what: &str) -> Result<(String, usize), ParseError> {
        self.skip_ws();
        let start = self.pos;
        match self.chars.get(self.pos) {
            Some(&c) if c.is_ascii_alphabetic() || c == '_' => {
                self.pos += 1;
                while matches!(self.chars.get(self.pos), Some(&c) if c.is_ascii_alphanumeric() || c == '_')
                {
                    self.pos += 1;
                }
                Ok((self.chars[start..self.pos].iter().collect(), start + 1))
            }
            Some(&c) => Err(self.error(alloc::format!("expected {what}, found `{c}`"))),
            None => Err(self.error(alloc::format!("expected {what}, found end of line"))),
        }
    }

    fn state_ref(&mut self, builder: &KripkeBuilder) -> Result<StateId, ParseError> {
        let (name, col) = self.ident("state name")?;
        builder
            .state_id(&name)
            .ok_or_else(|| self.error_at(col, alloc::format!("undeclared state `{name}`")))
    }

    fn expect(&mut self, c: char) -> Result<(), ParseError> {
        self.skip_ws();
        match self.chars.get(self.pos) {
            Some(&found) if found == c => {
                self.pos += 1;
                Ok(())
            }
            Some(&found) => Err(self.error(alloc::format!("expected `{c}`, found `{found}`"))),
            None => Err(self.error(alloc::format!("expected `{c}`, found end of line"))),
        }
    }

    fn expect_arrow(&mut self) -> Result<(), ParseError> {
        self.skip_ws();
        if self.chars.get(self.pos) == Some(&'-') && self.chars.get(self.pos + 1) == Some(&'>') {
            self.pos += 2;
            Ok(())
        } else {
            Err(self.error("expected `->`".to_string()))
        }
    }
}
