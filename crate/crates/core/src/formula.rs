//! CTL⁻ formulas: AST, concrete syntax, and negation normalization.
//!
//! [`StateFormula`] is the checked fragment — negation appears only on
//! atoms, and path quantifiers strictly alternate with modalities, giving
//! the six operators `EX AX EF AF EG AG`. [`ExtendedFormula`] additionally
//! allows `!` anywhere and is what the parser produces; [`ExtendedFormula::push_negations`]
//! rewrites it into the fragment.

use alloc::boxed::Box;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

use crate::ParseError;

/// `A` (all paths) or `E` (some path).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum PathQuantifier {
    All,
    Exists,
}

impl PathQuantifier {
    fn dual(self) -> Self {
        match self {
            PathQuantifier::All => PathQuantifier::Exists,
            PathQuantifier::Exists => PathQuantifier::All,
        }
    }
}

/// The path modality under a quantifier: `X` (next), `G` (globally),
/// `F` (finally).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Modality {
    Next,
    Globally,
    Finally,
}

impl Modality {
    fn dual(self) -> Self {
        match self {
            Modality::Next => Modality::Next,
            Modality::Globally => Modality::Finally,
            Modality::Finally => Modality::Globally,
        }
    }
}

/// A CTL⁻ state formula in negation normal form.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum StateFormula {
    Atom(String),
    NegAtom(String),
    And(Box<StateFormula>, Box<StateFormula>),
    Or(Box<StateFormula>, Box<StateFormula>),
    Temporal(PathQuantifier, Modality, Box<StateFormula>),
}

impl StateFormula {
    pub fn atom(name: &str) -> Self {
        StateFormula::Atom(name.to_string())
    }

    pub fn neg_atom(name: &str) -> Self {
        StateFormula::NegAtom(name.to_string())
    }

    pub fn and(left: StateFormula, right: StateFormula) -> Self {
        StateFormula::And(Box::new(left), Box::new(right))
    }

    pub fn or(left: StateFormula, right: StateFormula) -> Self {
        StateFormula::Or(Box::new(left), Box::new(right))
    }

    pub fn temporal(q: PathQuantifier, m: Modality, body: StateFormula) -> Self {
        StateFormula::Temporal(q, m, Box::new(body))
    }

    pub fn ex(body: StateFormula) -> Self {
        Self::temporal(PathQuantifier::Exists, Modality::Next, body)
    }

    pub fn ax(body: StateFormula) -> Self {
        Self::temporal(PathQuantifier::All, Modality::Next, body)
    }

    pub fn ef(body: StateFormula) -> Self {
        Self::temporal(PathQuantifier::Exists, Modality::Finally, body)
    }

    pub fn af(body: StateFormula) -> Self {
        Self::temporal(PathQuantifier::All, Modality::Finally, body)
    }

    pub fn eg(body: StateFormula) -> Self {
        Self::temporal(PathQuantifier::Exists, Modality::Globally, body)
    }

    pub fn ag(body: StateFormula) -> Self {
        Self::temporal(PathQuantifier::All, Modality::Globally, body)
    }

    /// Node count: 1 for literals, 1 + both sides for `&`/`|`, 1 + body for
    /// temporal operators. Strictly decreases from a formula to any proper
    /// subformula, which is half of the proof-search termination measure.
    pub fn size(&self) -> usize {
        match self {
            StateFormula::Atom(_) | StateFormula::NegAtom(_) => 1,
            StateFormula::And(l, r) | StateFormula::Or(l, r) => 1 + l.size() + r.size(),
            StateFormula::Temporal(_, _, body) => 1 + body.size(),
        }
    }

    /// Display name of the top-level connective, for error messages.
    pub fn op_name(&self) -> &'static str {
        match self {
            StateFormula::Atom(_) => "atom",
            StateFormula::NegAtom(_) => "negated atom",
            StateFormula::And(_, _) => "&",
            StateFormula::Or(_, _) => "|",
            StateFormula::Temporal(q, m, _) => temporal_name(*q, *m),
        }
    }
}

pub(crate) fn temporal_name(q: PathQuantifier, m: Modality) -> &'static str {
    match (q, m) {
        (PathQuantifier::Exists, Modality::Next) => "EX",
        (PathQuantifier::All, Modality::Next) => "AX",
        (PathQuantifier::Exists, Modality::Finally) => "EF",
        (PathQuantifier::All, Modality::Finally) => "AF",
        (PathQuantifier::Exists, Modality::Globally) => "EG",
        (PathQuantifier::All, Modality::Globally) => "AG",
    }
}

/// A formula with unrestricted negation, as written by the user.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum ExtendedFormula {
    Atom(String),
    NegAtom(String),
    And(Box<ExtendedFormula>, Box<ExtendedFormula>),
    Or(Box<ExtendedFormula>, Box<ExtendedFormula>),
    Temporal(PathQuantifier, Modality, Box<ExtendedFormula>),
    Not(Box<ExtendedFormula>),
}

impl ExtendedFormula {
    /// Pushes every negation down to the atoms, using De Morgan and the
    /// temporal dualities `!EXφ = AX!φ`, `!EFφ = AG!φ`, `!EGφ = AF!φ` (and
    /// their mirrors). Total, and the identity on negation-free input.
    pub fn push_negations(&self) -> StateFormula {
        nnf(self, false)
    }
}

fn nnf(f: &ExtendedFormula, negated: bool) -> StateFormula {
    match f {
        ExtendedFormula::Atom(p) => {
            if negated {
                StateFormula::Atom(p.clone()).negate_literal()
            } else {
                StateFormula::Atom(p.clone())
            }
        }
        ExtendedFormula::NegAtom(p) => {
            if negated {
                StateFormula::Atom(p.clone())
            } else {
                StateFormula::NegAtom(p.clone())
            }
        }
        ExtendedFormula::Not(body) => nnf(body, !negated),
        ExtendedFormula::And(l, r) => {
            if negated {
                StateFormula::or(nnf(l, true), nnf(r, true))
            } else {
                StateFormula::and(nnf(l, false), nnf(r, false))
            }
        }
        ExtendedFormula::Or(l, r) => {
            if negated {
                StateFormula::and(nnf(l, true), nnf(r, true))
            } else {
                StateFormula::or(nnf(l, false), nnf(r, false))
            }
        }
        ExtendedFormula::Temporal(q, m, body) => {
            if negated {
                StateFormula::temporal(q.dual(), m.dual(), nnf(body, true))
            } else {
                StateFormula::temporal(*q, *m, nnf(body, false))
            }
        }
    }
}

impl StateFormula {
    fn negate_literal(self) -> StateFormula {
        match self {
            StateFormula::Atom(p) => StateFormula::NegAtom(p),
            StateFormula::NegAtom(p) => StateFormula::Atom(p),
            other => other,
        }
    }
}

impl From<&StateFormula> for ExtendedFormula {
    fn from(f: &StateFormula) -> Self {
        match f {
            StateFormula::Atom(p) => ExtendedFormula::Atom(p.clone()),
            StateFormula::NegAtom(p) => ExtendedFormula::NegAtom(p.clone()),
            StateFormula::And(l, r) => {
                ExtendedFormula::And(Box::new(l.as_ref().into()), Box::new(r.as_ref().into()))
            }
            StateFormula::Or(l, r) => {
                ExtendedFormula::Or(Box::new(l.as_ref().into()), Box::new(r.as_ref().into()))
            }
            StateFormula::Temporal(q, m, body) => {
                ExtendedFormula::Temporal(*q, *m, Box::new(body.as_ref().into()))
            }
        }
    }
}

// Printing follows the concrete grammar with minimal parentheses:
// `|` binds weakest, then `&`, then the unary prefixes.
const PREC_OR: u8 = 0;
const PREC_AND: u8 = 1;
const PREC_UNARY: u8 = 2;

impl fmt::Display for StateFormula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt_state(self, PREC_OR, f)
    }
}

fn fmt_state(node: &StateFormula, min: u8, f: &mut fmt::Formatter<'_>) -> fmt::Result {
    match node {
        StateFormula::Atom(p) => f.write_str(p),
        StateFormula::NegAtom(p) => write!(f, "!{p}"),
        StateFormula::Or(l, r) => parens(min > PREC_OR, f, |f| {
            fmt_state(l, PREC_OR, f)?;
            f.write_str(" | ")?;
            fmt_state(r, PREC_AND, f)
        }),
        StateFormula::And(l, r) => parens(min > PREC_AND, f, |f| {
            fmt_state(l, PREC_AND, f)?;
            f.write_str(" & ")?;
            fmt_state(r, PREC_UNARY, f)
        }),
        StateFormula::Temporal(q, m, body) => parens(min > PREC_UNARY, f, |f| {
            write!(f, "{} ", temporal_name(*q, *m))?;
            fmt_state(body, PREC_UNARY, f)
        }),
    }
}

impl fmt::Display for ExtendedFormula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt_extended(self, PREC_OR, f)
    }
}

fn fmt_extended(node: &ExtendedFormula, min: u8, f: &mut fmt::Formatter<'_>) -> fmt::Result {
    match node {
        ExtendedFormula::Atom(p) => f.write_str(p),
        ExtendedFormula::NegAtom(p) => write!(f, "!{p}"),
        ExtendedFormula::Or(l, r) => parens(min > PREC_OR, f, |f| {
            fmt_extended(l, PREC_OR, f)?;
            f.write_str(" | ")?;
            fmt_extended(r, PREC_AND, f)
        }),
        ExtendedFormula::And(l, r) => parens(min > PREC_AND, f, |f| {
            fmt_extended(l, PREC_AND, f)?;
            f.write_str(" & ")?;
            fmt_extended(r, PREC_UNARY, f)
        }),
        ExtendedFormula::Temporal(q, m, body) => parens(min > PREC_UNARY, f, |f| {
            write!(f, "{} ", temporal_name(*q, *m))?;
            fmt_extended(body, PREC_UNARY, f)
        }),
        ExtendedFormula::Not(body) => parens(min > PREC_UNARY, f, |f| {
            f.write_str("!")?;
            fmt_extended(body, PREC_UNARY, f)
        }),
    }
}

fn parens(
    wrap: bool,
    f: &mut fmt::Formatter<'_>,
    inner: impl FnOnce(&mut fmt::Formatter<'_>) -> fmt::Result,
) -> fmt::Result {
    if wrap {
        f.write_str("(")?;
        inner(f)?;
        f.write_str(")")
    } else {
        inner(f)
    }
}

/// Parses the formula grammar:
///
/// ```text
/// formula := or
/// or      := and ('|' and)*
/// and     := unary ('&' unary)*
/// unary   := '!' unary | ('EX'|'AX'|'EF'|'AF'|'EG'|'AG') unary
///          | atom | '(' formula ')'
/// ```
///
/// The six operator names are reserved; every other identifier is an atom.
pub fn parse_formula(text: &str) -> Result<ExtendedFormula, ParseError> {
    let tokens = lex(text)?;
    let mut parser = Parser { tokens, pos: 0 };
    let formula = parser.or()?;
    match parser.peek() {
        None => Ok(formula),
        Some(t) => Err(ParseError::new(
            t.line,
            t.column,
            alloc::format!("unexpected `{}` after formula", t.kind),
        )),
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum TokenKind {
    Ident(String),
    And,
    Or,
    Not,
    LParen,
    RParen,
}

impl fmt::Display for TokenKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TokenKind::Ident(s) => f.write_str(s),
            TokenKind::And => f.write_str("&"),
            TokenKind::Or => f.write_str("|"),
            TokenKind::Not => f.write_str("!"),
            TokenKind::LParen => f.write_str("("),
            TokenKind::RParen => f.write_str(")"),
        }
    }
}

#[derive(Debug)]
struct Token {
    kind: TokenKind,
    line: usize,
    column: usize,
}

fn lex(text: &str) -> Result<Vec<Token>, ParseError> {
    let mut tokens = Vec::new();
    let mut line = 1;
    let mut column = 1;
    let mut chars = text.chars().peekable();
    while let Some(&c) = chars.peek() {
        let (tok_line, tok_col) = (line, column);
        let kind = match c {
            '\n' => {
                chars.next();
                line += 1;
                column = 1;
                continue;
            }
            _ if c.is_whitespace() => {
                chars.next();
                column += 1;
                continue;
            }
            '&' => TokenKind::And,
            '|' => TokenKind::Or,
            '!' => TokenKind::Not,
            '(' => TokenKind::LParen,
            ')' => TokenKind::RParen,
            _ if c.is_ascii_alphabetic() || c == '_' => {
                let mut ident = String::new();
                while matches!(chars.peek(), Some(&c) if c.is_ascii_alphanumeric() || c == '_') {
                    ident.push(chars.next().unwrap());
                    column += 1;
                }
                tokens.push(Token { kind: TokenKind::Ident(ident), line: tok_line, column: tok_col });
                continue;
            }
            other => {
                return Err(ParseError::new(
                    tok_line,
                    tok_col,
                    alloc::format!("unexpected character `{other}`"),
                ));
            }
        };
        chars.next();
        column += 1;
        tokens.push(Token { kind, line: tok_line, column: tok_col });
    }
    Ok(tokens)
}

struct Parser {
    tokens: Vec<Token>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.pos)
    }

    fn eof_error(&self, expected: &str) -> ParseError {
        let (line, column) = match self.tokens.last() {
            Some(t) => (t.line, t.column + 1),
            None => (1, 1),
        };
        ParseError::new(line, column, alloc::format!("expected {expected}, found end of input"))
    }

    fn or(&mut self) -> Result<ExtendedFormula, ParseError> {
        let mut left = self.and()?;
        while matches!(self.peek(), Some(t) if t.kind == TokenKind::Or) {
            self.pos += 1;
            let right = self.and()?;
            left = ExtendedFormula::Or(Box::new(left), Box::new(right));
        }
        Ok(left)
    }

    fn and(&mut self) -> Result<ExtendedFormula, ParseError> {
        let mut left = self.unary()?;
        while matches!(self.peek(), Some(t) if t.kind == TokenKind::And) {
            self.pos += 1;
            let right = self.unary()?;
            left = ExtendedFormula::And(Box::new(left), Box::new(right));
        }
        Ok(left)
    }

    fn unary(&mut self) -> Result<ExtendedFormula, ParseError> {
        let token = match self.peek() {
            Some(t) => t,
            None => return Err(self.eof_error("a formula")),
        };
        let (line, column) = (token.line, token.column);
        match &token.kind {
            TokenKind::Not => {
                self.pos += 1;
                Ok(ExtendedFormula::Not(Box::new(self.unary()?)))
            }
            TokenKind::LParen => {
                self.pos += 1;
                let inner = self.or()?;
                match self.peek() {
                    Some(t) if t.kind == TokenKind::RParen => {
                        self.pos += 1;
                        Ok(inner)
                    }
                    Some(t) => {
                        Err(ParseError::new(t.line, t.column, alloc::format!("expected `)`, found `{}`", t.kind)))
                    }
                    None => Err(self.eof_error("`)`")),
                }
            }
            TokenKind::Ident(name) => {
                let op = temporal_from_name(name);
                let name = name.clone();
                self.pos += 1;
                match op {
                    Some((q, m)) => Ok(ExtendedFormula::Temporal(q, m, Box::new(self.unary()?))),
                    None => Ok(ExtendedFormula::Atom(name)),
                }
            }
            other => {
                Err(ParseError::new(line, column, alloc::format!("expected a formula, found `{other}`")))
            }
        }
    }
}

fn temporal_from_name(name: &str) -> Option<(PathQuantifier, Modality)> {
    match name {
        "EX" => Some((PathQuantifier::Exists, Modality::Next)),
        "AX" => Some((PathQuantifier::All, Modality::Next)),
        "EF" => Some((PathQuantifier::Exists, Modality::Finally)),
        "AF" => Some((PathQuantifier::All, Modality::Finally)),
        "EG" => Some((PathQuantifier::Exists, Modality::Globally)),
        "AG" => Some((PathQuantifier::All, Modality::Globally)),
        _ => None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testutil;
    use proptest::prelude::*;

    fn ext_atom(name: &str) -> ExtendedFormula {
        ExtendedFormula::Atom(name.to_string())
    }

    #[test]
    fn parses_the_example_formula() {
        let f = parse_formula("EF (EG r)").unwrap();
        assert_eq!(
            f,
            ExtendedFormula::Temporal(
                PathQuantifier::Exists,
                Modality::Finally,
                Box::new(ExtendedFormula::Temporal(
                    PathQuantifier::Exists,
                    Modality::Globally,
                    Box::new(ext_atom("r")),
                )),
            )
        );
        assert_eq!(f.push_negations(), StateFormula::ef(StateFormula::eg(StateFormula::atom("r"))));
    }

    #[test]
    fn and_binds_tighter_than_or() {
        let f = parse_formula("p & q | r").unwrap();
        assert_eq!(
            f,
            ExtendedFormula::Or(
                Box::new(ExtendedFormula::And(Box::new(ext_atom("p")), Box::new(ext_atom("q")))),
                Box::new(ext_atom("r")),
            )
        );
    }

    #[test]
    fn negation_parses_anywhere() {
        let f = parse_formula("!(EF p)").unwrap();
        assert_eq!(
            f,
            ExtendedFormula::Not(Box::new(ExtendedFormula::Temporal(
                PathQuantifier::Exists,
                Modality::Finally,
                Box::new(ext_atom("p")),
            )))
        );
    }

    #[test]
    fn binary_operators_associate_left() {
        let f = parse_formula("p & q & r").unwrap();
        assert_eq!(
            f,
            ExtendedFormula::And(
                Box::new(ExtendedFormula::And(Box::new(ext_atom("p")), Box::new(ext_atom("q")))),
                Box::new(ext_atom("r")),
            )
        );
    }

    #[test]
    fn parse_errors_carry_positions() {
        let err = parse_formula("p & ").unwrap_err();
        assert_eq!((err.line, err.column), (1, 4));

        let err = parse_formula("p q").unwrap_err();
        assert_eq!((err.line, err.column), (1, 3));
        assert!(err.message.contains("after formula"), "{}", err.message);

        let err = parse_formula("(p | q").unwrap_err();
        assert!(err.message.contains("end of input"), "{}", err.message);

        let err = parse_formula("p @ q").unwrap_err();
        assert!(err.message.contains("unexpected character"), "{}", err.message);
    }

    #[test]
    fn de_morgan_on_conjunction() {
        let f = ExtendedFormula::Not(Box::new(ExtendedFormula::And(
            Box::new(ext_atom("p")),
            Box::new(ext_atom("q")),
        )));
        assert_eq!(
            f.push_negations(),
            StateFormula::or(StateFormula::neg_atom("p"), StateFormula::neg_atom("q"))
        );
    }

    #[test]
    fn temporal_dualities() {
        let cases = [
            ("!(EF p)", StateFormula::ag(StateFormula::neg_atom("p"))),
            ("!(AF p)", StateFormula::eg(StateFormula::neg_atom("p"))),
            ("!(EG p)", StateFormula::af(StateFormula::neg_atom("p"))),
            ("!(AG p)", StateFormula::ef(StateFormula::neg_atom("p"))),
            ("!(EX p)", StateFormula::ax(StateFormula::neg_atom("p"))),
            ("!(AX p)", StateFormula::ex(StateFormula::neg_atom("p"))),
            ("!!p", StateFormula::atom("p")),
        ];
        for (text, expected) in cases {
            assert_eq!(parse_formula(text).unwrap().push_negations(), expected, "{text}");
        }
    }

    #[test]
    fn push_negations_is_the_identity_on_the_fragment() {
        let f = parse_formula("EF (EG r) & (!p | AX q)").unwrap().push_negations();
        let round: ExtendedFormula = (&f).into();
        assert_eq!(round.push_negations(), f);
    }

    #[test]
    fn formula_sizes() {
        assert_eq!(StateFormula::atom("p").size(), 1);
        assert_eq!(parse_formula("EF (EG r)").unwrap().push_negations().size(), 3);
        assert_eq!(parse_formula("p & q").unwrap().push_negations().size(), 3);
    }

    #[test]
    fn display_uses_minimal_parentheses() {
        let f = parse_formula("(p | q) & r").unwrap();
        assert_eq!(f.to_string(), "(p | q) & r");
        let f = parse_formula("p & q | r").unwrap();
        assert_eq!(f.to_string(), "p & q | r");
        let f = parse_formula("EF (EG r)").unwrap();
        assert_eq!(f.to_string(), "EF EG r");
        let f = parse_formula("EG (p & q)").unwrap();
        assert_eq!(f.to_string(), "EG (p & q)");
    }

    proptest! {
        // The printer emits exactly the grammar the parser accepts.
        #[test]
        fn parse_is_a_left_inverse_of_display(f in testutil::arb_extended_formula(4)) {
            let printed = f.to_string();
            let reparsed = parse_formula(&printed).unwrap();
            prop_assert_eq!(reparsed, f, "printed as {}", printed);
        }

        #[test]
        fn parse_then_normalize_round_trips_state_formulas(f in testutil::arb_state_formula(4)) {
            let printed = f.to_string();
            let reparsed = parse_formula(&printed).unwrap().push_negations();
            prop_assert_eq!(reparsed, f, "printed as {}", printed);
        }

        #[test]
        fn push_negations_is_idempotent(f in testutil::arb_extended_formula(4)) {
            let once = f.push_negations();
            let twice: ExtendedFormula = (&once).into();
            prop_assert_eq!(twice.push_negations(), once);
        }

        #[test]
        fn proper_subformulas_are_strictly_smaller(f in testutil::arb_state_formula(4)) {
            fn check(f: &StateFormula) {
                let children: Vec<&StateFormula> = match f {
                    StateFormula::Atom(_) | StateFormula::NegAtom(_) => Vec::new(),
                    StateFormula::And(l, r) | StateFormula::Or(l, r) => alloc::vec![l, r],
                    StateFormula::Temporal(_, _, b) => alloc::vec![b],
                };
                for child in children {
                    assert!(child.size() < f.size());
                    check(child);
                }
            }
            check(&f);
        }

        // Soundness of the rewrite: on random models, the normalized
        // formula denotes the same set as a naive evaluator that handles
        // `!` by set complement.
        #[test]
        fn push_negations_preserves_semantics(
            m in testutil::arb_model(6),
            f in testutil::arb_extended_formula(4),
        ) {
            let naive = testutil::eval_extended_naive(&m, &f);
            let normalized = crate::oracle::denotation(&m, &f.push_negations(), &m.empty_set()).unwrap();
            prop_assert_eq!(naive, normalized, "formula {}", f);
        }
    }
}
