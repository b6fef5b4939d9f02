//! Formulas of the probability-logic family: AST, parser, printer and language tags.
//!
//! Concrete grammar (precedence high to low):
//! Boolean `~`, `&`, `|`; terms `*`, `+`; formulas `!`, `&&`, `||`, `=>`.
//! The conditioning bar is written `|:` so it never clashes with disjunction.

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum BoolExpr {
    Top,
    Bot,
    Letter(String),
    Not(Box<BoolExpr>),
    And(Box<BoolExpr>, Box<BoolExpr>),
    Or(Box<BoolExpr>, Box<BoolExpr>),
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Term {
    Basic(BoolExpr),
    Cond(BoolExpr, BoolExpr),
    Sum(Box<Term>, Box<Term>),
    Prod(Box<Term>, Box<Term>),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum ConfirmDir {
    /// P(a|b) >= P(a)
    CondOverUncond,
    /// P(a) >= P(a|b)
    UncondOverCond,
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Atom {
    Geq(Term, Term),
    Gt(Term, Term),
    Eq(Term, Term),
    Indep(BoolExpr, BoolExpr),
    Confirm { alpha: BoolExpr, beta: BoolExpr, dir: ConfirmDir },
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Formula {
    Atom(Atom),
    Not(Box<Formula>),
    And(Box<Formula>, Box<Formula>),
    Or(Box<Formula>, Box<Formula>),
    Implies(Box<Formula>, Box<Formula>),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LanguageTag {
    Comp,
    SameCond,
    Add,
    Ind,
    Confirm,
    Cond,
    Quad,
    Poly,
}

impl LanguageTag {
    pub const ALL: [LanguageTag; 8] = [
        LanguageTag::Comp,
        LanguageTag::SameCond,
        LanguageTag::Add,
        LanguageTag::Ind,
        LanguageTag::Confirm,
        LanguageTag::Cond,
        LanguageTag::Quad,
        LanguageTag::Poly,
    ];

    pub fn name(self) -> &'static str {
        match self {
            LanguageTag::Comp => "comp",
            LanguageTag::SameCond => "same_cond",
            LanguageTag::Add => "add",
            LanguageTag::Ind => "ind",
            LanguageTag::Confirm => "confirm",
            LanguageTag::Cond => "cond",
            LanguageTag::Quad => "quad",
            LanguageTag::Poly => "poly",
        }
    }

    pub fn from_name(s: &str) -> Option<LanguageTag> {
        LanguageTag::ALL.into_iter().find(|t| t.name() == s)
    }

    fn direct_parents(self) -> &'static [LanguageTag] {
        use LanguageTag::*;
        match self {
            Comp => &[Add, SameCond],
            SameCond => &[Cond],
            Add => &[Poly],
            Ind => &[Confirm],
            Confirm => &[Cond],
            Cond => &[Quad],
            Quad => &[Poly],
            Poly => &[],
        }
    }

    /// The expressivity partial order.
    pub fn leq(self, other: LanguageTag) -> bool {
        if self == other {
            return true;
        }
        self.direct_parents().iter().any(|p| p.leq(other))
    }

    pub fn is_additive(self) -> bool {
        matches!(self, LanguageTag::Comp | LanguageTag::Add)
    }
}

impl fmt::Display for LanguageTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

// ---------------------------------------------------------------- constructors

impl BoolExpr {
    pub fn letter(s: &str) -> BoolExpr {
        BoolExpr::Letter(s.to_string())
    }
    #[allow(clippy::should_implement_trait)]
    pub fn not(self) -> BoolExpr {
        BoolExpr::Not(Box::new(self))
    }
    pub fn and(self, o: BoolExpr) -> BoolExpr {
        BoolExpr::And(Box::new(self), Box::new(o))
    }
    pub fn or(self, o: BoolExpr) -> BoolExpr {
        BoolExpr::Or(Box::new(self), Box::new(o))
    }
    pub fn conj(items: impl IntoIterator<Item = BoolExpr>) -> BoolExpr {
        items.into_iter().reduce(|a, b| a.and(b)).unwrap_or(BoolExpr::Top)
    }
    pub fn disj(items: impl IntoIterator<Item = BoolExpr>) -> BoolExpr {
        items.into_iter().reduce(|a, b| a.or(b)).unwrap_or(BoolExpr::Bot)
    }

    pub fn letters_into(&self, out: &mut BTreeSet<String>) {
        match self {
            BoolExpr::Top | BoolExpr::Bot => {}
            BoolExpr::Letter(s) => {
                out.insert(s.clone());
            }
            BoolExpr::Not(a) => a.letters_into(out),
            BoolExpr::And(a, b) | BoolExpr::Or(a, b) => {
                a.letters_into(out);
                b.letters_into(out);
            }
        }
    }

    pub fn eval(&self, val: &dyn Fn(&str) -> bool) -> bool {
        match self {
            BoolExpr::Top => true,
            BoolExpr::Bot => false,
            BoolExpr::Letter(s) => val(s),
            BoolExpr::Not(a) => !a.eval(val),
            BoolExpr::And(a, b) => a.eval(val) && b.eval(val),
            BoolExpr::Or(a, b) => a.eval(val) || b.eval(val),
        }
    }
}

impl Term {
    pub fn p(b: BoolExpr) -> Term {
        Term::Basic(b)
    }
    pub fn zero() -> Term {
        Term::Basic(BoolExpr::Bot)
    }
    pub fn one() -> Term {
        Term::Basic(BoolExpr::Top)
    }
    pub fn plus(self, o: Term) -> Term {
        Term::Sum(Box::new(self), Box::new(o))
    }
    pub fn times(self, o: Term) -> Term {
        Term::Prod(Box::new(self), Box::new(o))
    }
    /// Left-associated n-fold sum of copies of `self`.
    pub fn repeat_sum(&self, n: usize) -> Term {
        assert!(n >= 1);
        let mut t = self.clone();
        for _ in 1..n {
            t = t.plus(self.clone());
        }
        t
    }

    pub fn letters_into(&self, out: &mut BTreeSet<String>) {
        match self {
            Term::Basic(b) => b.letters_into(out),
            Term::Cond(a, b) => {
                a.letters_into(out);
                b.letters_into(out);
            }
            Term::Sum(a, b) | Term::Prod(a, b) => {
                a.letters_into(out);
                b.letters_into(out);
            }
        }
    }

    pub fn contains_cond(&self) -> bool {
        match self {
            Term::Basic(_) => false,
            Term::Cond(..) => true,
            Term::Sum(a, b) | Term::Prod(a, b) => a.contains_cond() || b.contains_cond(),
        }
    }

    pub fn is_basic(&self) -> bool {
        matches!(self, Term::Basic(_))
    }

    fn is_add(&self) -> bool {
        match self {
            Term::Basic(_) => true,
            Term::Sum(a, b) => a.is_add() && b.is_add(),
            _ => false,
        }
    }

    fn is_quad(&self) -> bool {
        match self {
            Term::Basic(_) => true,
            Term::Prod(a, b) => a.is_basic() && b.is_basic(),
            _ => false,
        }
    }

    /// `(event, condition)` for a term usable in a conditional comparison.
    pub fn as_cond(&self) -> Option<(BoolExpr, BoolExpr)> {
        match self {
            Term::Basic(b) => Some((b.clone(), BoolExpr::Top)),
            Term::Cond(a, c) => Some((a.clone(), c.clone())),
            _ => None,
        }
    }
}

impl Atom {
    pub fn terms(&self) -> Option<(&Term, &Term)> {
        match self {
            Atom::Geq(a, b) | Atom::Gt(a, b) | Atom::Eq(a, b) => Some((a, b)),
            _ => None,
        }
    }

    pub fn letters_into(&self, out: &mut BTreeSet<String>) {
        match self {
            Atom::Geq(a, b) | Atom::Gt(a, b) | Atom::Eq(a, b) => {
                a.letters_into(out);
                b.letters_into(out);
            }
            Atom::Indep(a, b) => {
                a.letters_into(out);
                b.letters_into(out);
            }
            Atom::Confirm { alpha, beta, .. } => {
                alpha.letters_into(out);
                beta.letters_into(out);
            }
        }
    }

    /// Confirmation atoms rewritten to their surface conditional form.
    pub fn canonical(&self) -> Atom {
        match self {
            Atom::Confirm { alpha, beta, dir } => {
                let c = Term::Cond(alpha.clone(), beta.clone());
                let u = Term::Basic(alpha.clone());
                match dir {
                    ConfirmDir::CondOverUncond => Atom::Geq(c, u),
                    ConfirmDir::UncondOverCond => Atom::Geq(u, c),
                }
            }
            a => a.clone(),
        }
    }

    /// Recognizes `P(a |: b) >= P(a)` and `P(a) >= P(a |: b)`.
    pub fn as_confirm(&self) -> Option<(BoolExpr, BoolExpr, ConfirmDir)> {
        match self {
            Atom::Confirm { alpha, beta, dir } => Some((alpha.clone(), beta.clone(), *dir)),
            Atom::Geq(Term::Cond(a, b), Term::Basic(a2)) if a == a2 => {
                Some((a.clone(), b.clone(), ConfirmDir::CondOverUncond))
            }
            Atom::Geq(Term::Basic(a2), Term::Cond(a, b)) if a == a2 => {
                Some((a.clone(), b.clone(), ConfirmDir::UncondOverCond))
            }
            _ => None,
        }
    }
}

impl Formula {
    pub fn atom(a: Atom) -> Formula {
        Formula::Atom(a)
    }
    pub fn geq(a: Term, b: Term) -> Formula {
        Formula::Atom(Atom::Geq(a, b))
    }
    pub fn gt(a: Term, b: Term) -> Formula {
        Formula::Atom(Atom::Gt(a, b))
    }
    pub fn eq(a: Term, b: Term) -> Formula {
        Formula::Atom(Atom::Eq(a, b))
    }
    #[allow(clippy::should_implement_trait)]
    pub fn not(self) -> Formula {
        Formula::Not(Box::new(self))
    }
    pub fn and(self, o: Formula) -> Formula {
        Formula::And(Box::new(self), Box::new(o))
    }
    pub fn or(self, o: Formula) -> Formula {
        Formula::Or(Box::new(self), Box::new(o))
    }
    pub fn implies(self, o: Formula) -> Formula {
        Formula::Implies(Box::new(self), Box::new(o))
    }
    pub fn iff(self, o: Formula) -> Formula {
        self.clone().implies(o.clone()).and(o.implies(self))
    }
    pub fn conj(items: impl IntoIterator<Item = Formula>) -> Option<Formula> {
        items.into_iter().reduce(|a, b| a.and(b))
    }
    pub fn disj(items: impl IntoIterator<Item = Formula>) -> Option<Formula> {
        items.into_iter().reduce(|a, b| a.or(b))
    }

    pub fn atoms(&self) -> Vec<&Atom> {
        let mut out = Vec::new();
        self.collect_atoms(&mut out);
        out
    }

    fn collect_atoms<'a>(&'a self, out: &mut Vec<&'a Atom>) {
        match self {
            Formula::Atom(a) => out.push(a),
            Formula::Not(a) => a.collect_atoms(out),
            Formula::And(a, b) | Formula::Or(a, b) | Formula::Implies(a, b) => {
                a.collect_atoms(out);
                b.collect_atoms(out);
            }
        }
    }

    pub fn map_atoms(&self, f: &mut dyn FnMut(&Atom) -> Formula) -> Formula {
        match self {
            Formula::Atom(a) => f(a),
            Formula::Not(a) => Formula::Not(Box::new(a.map_atoms(f))),
            Formula::And(a, b) => {
                let x = a.map_atoms(f);
                Formula::And(Box::new(x), Box::new(b.map_atoms(f)))
            }
            Formula::Or(a, b) => {
                let x = a.map_atoms(f);
                Formula::Or(Box::new(x), Box::new(b.map_atoms(f)))
            }
            Formula::Implies(a, b) => {
                let x = a.map_atoms(f);
                Formula::Implies(Box::new(x), Box::new(b.map_atoms(f)))
            }
        }
    }

    /// Boolean evaluation given a truth value per atom.
    pub fn eval_with(&self, f: &mut dyn FnMut(&Atom) -> bool) -> bool {
        match self {
            Formula::Atom(a) => f(a),
            Formula::Not(a) => !a.eval_with(f),
            Formula::And(a, b) => {
                let x = a.eval_with(f);
                let y = b.eval_with(f);
                x && y
            }
            Formula::Or(a, b) => {
                let x = a.eval_with(f);
                let y = b.eval_with(f);
                x || y
            }
            Formula::Implies(a, b) => {
                let x = a.eval_with(f);
                let y = b.eval_with(f);
                !x || y
            }
        }
    }

    pub fn canonical(&self) -> Formula {
        self.map_atoms(&mut |a| Formula::Atom(a.canonical()))
    }
}

pub fn free_letters(f: &Formula) -> Vec<String> {
    let mut s = BTreeSet::new();
    for a in f.atoms() {
        a.letters_into(&mut s);
    }
    s.into_iter().collect()
}

// ---------------------------------------------------------------- classification

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ClassifyError {
    #[error("not in the language family: {0}")]
    NotInFamily(String),
}

fn atom_in(tag: LanguageTag, a: &Atom) -> bool {
    use LanguageTag::*;
    if let Some((x, y)) = a.terms() {
        let cond_free = !x.contains_cond() && !y.contains_cond();
        let condish = x.as_cond().is_some() && y.as_cond().is_some();
        return match tag {
            Comp => x.is_basic() && y.is_basic(),
            Add => x.is_add() && y.is_add(),
            SameCond => condish && x.as_cond().unwrap().1 == y.as_cond().unwrap().1,
            Ind => matches!(a, Atom::Eq(..)) && x.is_basic() && y.is_basic(),
            Confirm => {
                (matches!(a, Atom::Eq(..)) && x.is_basic() && y.is_basic()) || a.as_confirm().is_some()
            }
            Cond => condish,
            Quad => condish || (x.is_quad() && y.is_quad()),
            Poly => cond_free || condish,
        };
    }
    match a {
        Atom::Indep(..) => matches!(tag, Ind | Confirm | Cond | Quad | Poly),
        Atom::Confirm { .. } => matches!(tag, Confirm | Cond | Quad | Poly),
        _ => unreachable!(),
    }
}

/// Tags that accept every atom of `f`.
pub fn accepting_tags(f: &Formula) -> Vec<LanguageTag> {
    let atoms = f.atoms();
    LanguageTag::ALL
        .into_iter()
        .filter(|t| atoms.iter().all(|a| atom_in(*t, a)))
        .collect()
}

/// Least tag whose grammar generates `f`; ties between incomparable tags are broken
/// by the fixed order comp, same_cond, add, ind, confirm, cond, quad, poly.
pub fn classify(f: &Formula) -> Result<LanguageTag, ClassifyError> {
    let acc = accepting_tags(f);
    acc.first().copied().ok_or_else(|| {
        let bad = f
            .atoms()
            .into_iter()
            .find(|a| !atom_in(LanguageTag::Poly, a))
            .map(render_atom)
            .unwrap_or_default();
        ClassifyError::NotInFamily(bad)
    })
}

/// Rewrites `f` into the grammar of `target` (which must lie above `classify(f)`),
/// preserving meaning.
pub fn embed(f: &Formula, target: LanguageTag) -> Result<Formula, ClassifyError> {
    let tag = classify(f)?;
    if !tag.leq(target) {
        return Err(ClassifyError::NotInFamily(format!("{} does not embed in {}", tag, target)));
    }
    Ok(f.map_atoms(&mut |a| embed_atom(a, target)))
}

fn embed_atom(a: &Atom, target: LanguageTag) -> Formula {
    use LanguageTag::*;
    if atom_in(target, a) {
        return Formula::Atom(a.clone());
    }
    match (a, target) {
        (Atom::Indep(x, y), Confirm) | (Atom::Indep(x, y), Cond) => {
            let c = Term::Cond(x.clone(), y.clone());
            let u = Term::Basic(x.clone());
            Formula::geq(c.clone(), u.clone()).and(Formula::geq(u, c))
        }
        (Atom::Confirm { .. }, _) => Formula::Atom(a.canonical()),
        _ => {
            // basic comparisons into quad: P(a) -> P(a)*P(T)
            if target == Quad {
                if let Some((x, y)) = a.terms() {
                    let lift = |t: &Term| match t {
                        Term::Basic(_) => t.clone().times(Term::one()),
                        _ => t.clone(),
                    };
                    let (x, y) = (lift(x), lift(y));
                    return Formula::Atom(match a {
                        Atom::Geq(..) => Atom::Geq(x, y),
                        Atom::Gt(..) => Atom::Gt(x, y),
                        _ => Atom::Eq(x, y),
                    });
                }
                if let Atom::Indep(x, y) = a {
                    return Formula::eq(
                        Term::p(x.clone().and(y.clone())).times(Term::one()),
                        Term::p(x.clone()).times(Term::p(y.clone())),
                    );
                }
            }
            Formula::Atom(a.clone())
        }
    }
}

// ---------------------------------------------------------------- rendering

fn render_bool_prec(b: &BoolExpr, prec: u8, out: &mut String) {
    // prec: 0 = or level, 1 = and level, 2 = unary/primary
    match b {
        BoolExpr::Top => out.push('T'),
        BoolExpr::Bot => out.push('F'),
        BoolExpr::Letter(s) => out.push_str(s),
        BoolExpr::Not(a) => {
            out.push('~');
            render_bool_prec(a, 2, out);
        }
        BoolExpr::And(a, c) => {
            let paren = prec > 1;
            if paren {
                out.push('(');
            }
            render_bool_prec(a, 1, out);
            out.push_str(" & ");
            render_bool_prec(c, 2, out);
            if paren {
                out.push(')');
            }
        }
        BoolExpr::Or(a, c) => {
            let paren = prec > 0;
            if paren {
                out.push('(');
            }
            render_bool_prec(a, 0, out);
            out.push_str(" | ");
            render_bool_prec(c, 1, out);
            if paren {
                out.push(')');
            }
        }
    }
}

pub fn render_bool(b: &BoolExpr) -> String {
    let mut s = String::new();
    render_bool_prec(b, 0, &mut s);
    s
}

fn render_term_prec(t: &Term, prec: u8, out: &mut String) {
    match t {
        Term::Basic(b) => {
            out.push_str("P(");
            render_bool_prec(b, 0, out);
            out.push(')');
        }
        Term::Cond(a, b) => {
            out.push_str("P(");
            render_bool_prec(a, 0, out);
            out.push_str(" |: ");
            render_bool_prec(b, 0, out);
            out.push(')');
        }
        Term::Sum(a, b) => {
            let paren = prec > 0;
            if paren {
                out.push('(');
            }
            render_term_prec(a, 0, out);
            out.push_str(" + ");
            render_term_prec(b, 1, out);
            if paren {
                out.push(')');
            }
        }
        Term::Prod(a, b) => {
            let paren = prec > 1;
            if paren {
                out.push('(');
            }
            render_term_prec(a, 1, out);
            out.push_str(" * ");
            render_term_prec(b, 2, out);
            if paren {
                out.push(')');
            }
        }
    }
}

pub fn render_term(t: &Term) -> String {
    let mut s = String::new();
    render_term_prec(t, 0, &mut s);
    s
}

pub fn render_atom(a: &Atom) -> String {
    match a {
        Atom::Geq(x, y) => format!("{} >= {}", render_term(x), render_term(y)),
        Atom::Gt(x, y) => format!("{} > {}", render_term(x), render_term(y)),
        Atom::Eq(x, y) => format!("{} = {}", render_term(x), render_term(y)),
        Atom::Indep(x, y) => format!("indep({}, {})", render_bool(x), render_bool(y)),
        Atom::Confirm { .. } => render_atom(&a.canonical()),
    }
}

// prec: 0 implies, 1 or, 2 and, 3 unary
fn render_formula_prec(f: &Formula, prec: u8, out: &mut String) {
    let bin = |out: &mut String, p: u8, a: &Formula, op: &str, b: &Formula, lp: u8, rp: u8| {
        let paren = prec > p;
        if paren {
            out.push('(');
        }
        render_formula_prec(a, lp, out);
        out.push_str(op);
        render_formula_prec(b, rp, out);
        if paren {
            out.push(')');
        }
    };
    match f {
        Formula::Atom(a) => {
            if prec == 3 {
                out.push('(');
                out.push_str(&render_atom(a));
                out.push(')');
            } else {
                out.push_str(&render_atom(a));
            }
        }
        Formula::Not(a) => {
            out.push('!');
            render_formula_prec(a, 3, out);
        }
        Formula::And(a, b) => bin(out, 2, a, " && ", b, 2, 3),
        Formula::Or(a, b) => bin(out, 1, a, " || ", b, 1, 2),
        Formula::Implies(a, b) => bin(out, 0, a, " => ", b, 1, 0),
    }
}

pub fn render(f: &Formula) -> String {
    let mut s = String::new();
    render_formula_prec(f, 0, &mut s);
    s
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&render(self))
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&render_term(self))
    }
}

impl fmt::Display for BoolExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&render_bool(self))
    }
}

impl fmt::Display for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&render_atom(self))
    }
}

// ---------------------------------------------------------------- parsing

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ParseError {
    #[error("unknown token at {pos}: {found:?}")]
    UnknownToken { pos: usize, found: char },
    #[error("syntax error at {pos}: expected {expected}, found {found}")]
    Syntax { pos: usize, expected: String, found: String },
}

#[derive(Clone, Debug, PartialEq, Eq)]
enum Tok {
    Ident(String),
    Num(String),
    Tilde,
    Amp,
    Bar,
    CondBar,
    LParen,
    RParen,
    Comma,
    Plus,
    Star,
    Ge,
    Gt,
    EqSign,
    Bang,
    AndAnd,
    OrOr,
    Arrow,
    End,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Tok::Ident(s) | Tok::Num(s) => return write!(f, "`{}`", s),
            Tok::Tilde => "`~`",
            Tok::Amp => "`&`",
            Tok::Bar => "`|`",
            Tok::CondBar => "`|:`",
            Tok::LParen => "`(`",
            Tok::RParen => "`)`",
            Tok::Comma => "`,`",
            Tok::Plus => "`+`",
            Tok::Star => "`*`",
            Tok::Ge => "`>=`",
            Tok::Gt => "`>`",
            Tok::EqSign => "`=`",
            Tok::Bang => "`!`",
            Tok::AndAnd => "`&&`",
            Tok::OrOr => "`||`",
            Tok::Arrow => "`=>`",
            Tok::End => "end of input",
        };
        f.write_str(s)
    }
}

fn lex(text: &str) -> Result<Vec<(Tok, usize)>, ParseError> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        let next = chars.get(i + 1).copied();
        let start = i;
        let tok = match c {
            c if c.is_whitespace() => {
                i += 1;
                continue;
            }
            '#' => {
                while i < chars.len() && chars[i] != '\n' {
                    i += 1;
                }
                continue;
            }
            c if c.is_ascii_alphabetic() => {
                let mut s = String::new();
                while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                    s.push(chars[i]);
                    i += 1;
                }
                out.push((Tok::Ident(s), start));
                continue;
            }
            c if c.is_ascii_digit() => {
                let mut s = String::new();
                while i < chars.len() && chars[i].is_ascii_digit() {
                    s.push(chars[i]);
                    i += 1;
                }
                out.push((Tok::Num(s), start));
                continue;
            }
            '~' => Tok::Tilde,
            '&' if next == Some('&') => {
                i += 1;
                Tok::AndAnd
            }
            '&' => Tok::Amp,
            '|' if next == Some('|') => {
                i += 1;
                Tok::OrOr
            }
            '|' if next == Some(':') => {
                i += 1;
                Tok::CondBar
            }
            '|' => Tok::Bar,
            '(' => Tok::LParen,
            ')' => Tok::RParen,
            ',' => Tok::Comma,
            '+' => Tok::Plus,
            '*' => Tok::Star,
            '>' if next == Some('=') => {
                i += 1;
                Tok::Ge
            }
            '>' => Tok::Gt,
            '=' if next == Some('>') => {
                i += 1;
                Tok::Arrow
            }
            '=' => Tok::EqSign,
            '!' => Tok::Bang,
            other => return Err(ParseError::UnknownToken { pos: i, found: other }),
        };
        i += 1;
        out.push((tok, start));
    }
    out.push((Tok::End, chars.len()));
    Ok(out)
}

struct Parser {
    toks: Vec<(Tok, usize)>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].0
    }
    fn peek_at(&self, k: usize) -> &Tok {
        &self.toks[(self.pos + k).min(self.toks.len() - 1)].0
    }
    fn bump(&mut self) -> Tok {
        let t = self.toks[self.pos].0.clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }
    fn err<T>(&self, expected: &str) -> Result<T, ParseError> {
        Err(ParseError::Syntax {
            pos: self.toks[self.pos].1,
            expected: expected.to_string(),
            found: self.peek().to_string(),
        })
    }
    fn expect(&mut self, t: Tok, what: &str) -> Result<(), ParseError> {
        if *self.peek() == t {
            self.bump();
            Ok(())
        } else {
            self.err(what)
        }
    }

    // formula := imp
    fn formula(&mut self) -> Result<Formula, ParseError> {
        let lhs = self.or_f()?;
        if *self.peek() == Tok::Arrow {
            self.bump();
            let rhs = self.formula()?;
            return Ok(lhs.implies(rhs));
        }
        Ok(lhs)
    }
    fn or_f(&mut self) -> Result<Formula, ParseError> {
        let mut lhs = self.and_f()?;
        while *self.peek() == Tok::OrOr {
            self.bump();
            let rhs = self.and_f()?;
            lhs = lhs.or(rhs);
        }
        Ok(lhs)
    }
    fn and_f(&mut self) -> Result<Formula, ParseError> {
        let mut lhs = self.unary_f()?;
        while *self.peek() == Tok::AndAnd {
            self.bump();
            let rhs = self.unary_f()?;
            lhs = lhs.and(rhs);
        }
        Ok(lhs)
    }
    fn unary_f(&mut self) -> Result<Formula, ParseError> {
        match self.peek() {
            Tok::Bang => {
                self.bump();
                Ok(self.unary_f()?.not())
            }
            Tok::LParen => {
                let save = self.pos;
                self.bump();
                if let Ok(f) = self.formula() {
                    if *self.peek() == Tok::RParen {
                        self.bump();
                        return Ok(f);
                    }
                }
                self.pos = save;
                Ok(Formula::Atom(self.atom()?))
            }
            _ => Ok(Formula::Atom(self.atom()?)),
        }
    }
    fn atom(&mut self) -> Result<Atom, ParseError> {
        if let Tok::Ident(s) = self.peek() {
            if s == "indep" && *self.peek_at(1) == Tok::LParen {
                self.bump();
                self.bump();
                let a = self.bool_or()?;
                self.expect(Tok::Comma, "`,`")?;
                let b = self.bool_or()?;
                self.expect(Tok::RParen, "`)`")?;
                return Ok(Atom::Indep(a, b));
            }
        }
        let lhs = self.term()?;
        let op = self.peek().clone();
        match op {
            Tok::Ge | Tok::Gt | Tok::EqSign => {
                self.bump();
            }
            _ => return self.err("comparison `>=`, `>` or `=`"),
        }
        let rhs = self.term()?;
        Ok(match op {
            Tok::Ge => Atom::Geq(lhs, rhs),
            Tok::Gt => Atom::Gt(lhs, rhs),
            _ => Atom::Eq(lhs, rhs),
        })
    }
    fn term(&mut self) -> Result<Term, ParseError> {
        let mut lhs = self.term_prod()?;
        while *self.peek() == Tok::Plus {
            self.bump();
            let rhs = self.term_prod()?;
            lhs = lhs.plus(rhs);
        }
        Ok(lhs)
    }
    fn term_prod(&mut self) -> Result<Term, ParseError> {
        let mut lhs = self.term_primary()?;
        while *self.peek() == Tok::Star {
            self.bump();
            let rhs = self.term_primary()?;
            lhs = lhs.times(rhs);
        }
        Ok(lhs)
    }
    fn term_primary(&mut self) -> Result<Term, ParseError> {
        match self.peek().clone() {
            Tok::Num(s) if s == "0" => {
                self.bump();
                Ok(Term::zero())
            }
            Tok::Num(s) if s == "1" => {
                self.bump();
                Ok(Term::one())
            }
            Tok::LParen => {
                self.bump();
                let t = self.term()?;
                self.expect(Tok::RParen, "`)`")?;
                Ok(t)
            }
            Tok::Ident(s) if s == "P" && *self.peek_at(1) == Tok::LParen => {
                self.bump();
                self.bump();
                let a = self.bool_or()?;
                if *self.peek() == Tok::CondBar {
                    self.bump();
                    let b = self.bool_or()?;
                    self.expect(Tok::RParen, "`)`")?;
                    Ok(Term::Cond(a, b))
                } else {
                    self.expect(Tok::RParen, "`)` or `|:`")?;
                    Ok(Term::Basic(a))
                }
            }
            _ => self.err("probability term"),
        }
    }
    fn bool_or(&mut self) -> Result<BoolExpr, ParseError> {
        let mut lhs = self.bool_and()?;
        while *self.peek() == Tok::Bar {
            self.bump();
            let rhs = self.bool_and()?;
            lhs = lhs.or(rhs);
        }
        Ok(lhs)
    }
    fn bool_and(&mut self) -> Result<BoolExpr, ParseError> {
        let mut lhs = self.bool_unary()?;
        while *self.peek() == Tok::Amp {
            self.bump();
            let rhs = self.bool_unary()?;
            lhs = lhs.and(rhs);
        }
        Ok(lhs)
    }
    fn bool_unary(&mut self) -> Result<BoolExpr, ParseError> {
        match self.peek().clone() {
            Tok::Tilde => {
                self.bump();
                Ok(self.bool_unary()?.not())
            }
            Tok::LParen => {
                self.bump();
                let b = self.bool_or()?;
                self.expect(Tok::RParen, "`)`")?;
                Ok(b)
            }
            Tok::Ident(s) => {
                self.bump();
                Ok(match s.as_str() {
                    "T" => BoolExpr::Top,
                    "F" => BoolExpr::Bot,
                    _ => BoolExpr::Letter(s),
                })
            }
            _ => self.err("Boolean expression"),
        }
    }
}

pub fn parse_formula(text: &str) -> Result<Formula, ParseError> {
    let mut p = Parser { toks: lex(text)?, pos: 0 };
    let f = p.formula()?;
    if *p.peek() != Tok::End {
        return p.err("end of input");
    }
    Ok(f)
}

pub fn parse_term(text: &str) -> Result<Term, ParseError> {
    let mut p = Parser { toks: lex(text)?, pos: 0 };
    let t = p.term()?;
    if *p.peek() != Tok::End {
        return p.err("end of input");
    }
    Ok(t)
}

pub fn parse_bool(text: &str) -> Result<BoolExpr, ParseError> {
    let mut p = Parser { toks: lex(text)?, pos: 0 };
    let b = p.bool_or()?;
    if *p.peek() != Tok::End {
        return p.err("end of input");
    }
    Ok(b)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn l(s: &str) -> BoolExpr {
        BoolExpr::letter(s)
    }

    #[test]
    fn smallest_comparison() {
        let f = parse_formula("P(A) >= P(B)").unwrap();
        assert_eq!(f, Formula::geq(Term::p(l("A")), Term::p(l("B"))));
        assert_eq!(classify(&f).unwrap(), LanguageTag::Comp);
        assert_eq!(parse_formula(&render(&f)).unwrap(), f);
    }

    #[test]
    fn intro_formula_shape() {
        let f = parse_formula("P(A & B) = P(~(A & B)) && P(A |: B) = P(B)").unwrap();
        let ab = l("A").and(l("B"));
        let want = Formula::eq(Term::p(ab.clone()), Term::p(ab.not()))
            .and(Formula::eq(Term::Cond(l("A"), l("B")), Term::p(l("B"))));
        assert_eq!(f, want);
        assert_eq!(classify(&f).unwrap(), LanguageTag::Cond);
        assert_eq!(parse_formula(&render(&f)).unwrap(), f);
    }

    #[test]
    fn indep_atom() {
        let f = parse_formula("indep(A, B)").unwrap();
        assert_eq!(f, Formula::Atom(Atom::Indep(l("A"), l("B"))));
        assert_eq!(classify(&f).unwrap(), LanguageTag::Ind);
        assert_eq!(parse_formula(&render(&f)).unwrap(), f);
    }

    #[test]
    fn classify_examples() {
        let c = |s: &str| classify(&parse_formula(s).unwrap()).unwrap();
        assert_eq!(c("P(A |: B) >= P(C |: D)"), LanguageTag::Cond);
        assert_eq!(c("P(A |: G) >= P(B |: G) && !(P(B |: G) > P(C |: G))"), LanguageTag::SameCond);
        assert_eq!(c("P(A) >= P(B) + P(C)"), LanguageTag::Add);
        assert_eq!(c("P(A |: B) >= P(A)"), LanguageTag::Confirm);
        assert_eq!(c("P(A) * P(B) >= P(C)"), LanguageTag::Quad);
        assert_eq!(c("P(A) * P(B) * P(C) >= P(C)"), LanguageTag::Poly);
        assert_eq!(c("P(A) = P(B) && indep(A, B)"), LanguageTag::Ind);
        let bad = parse_formula("P(A |: B) * P(C) >= P(C)").unwrap();
        assert!(classify(&bad).is_err());
    }

    #[test]
    fn constants_and_precedence() {
        let f = parse_formula("1 >= 0").unwrap();
        assert_eq!(f, Formula::geq(Term::one(), Term::zero()));
        let t = parse_term("P(A) + P(B) * P(C)").unwrap();
        assert_eq!(t, Term::p(l("A")).plus(Term::p(l("B")).times(Term::p(l("C")))));
        let b = parse_bool("~A & B | C").unwrap();
        assert_eq!(b, l("A").not().and(l("B")).or(l("C")));
        let f = parse_formula("!P(A) >= P(B) && P(B) >= P(A) || P(A) > P(B) => P(A) = P(A)").unwrap();
        match f {
            Formula::Implies(lhs, _) => match *lhs {
                Formula::Or(x, _) => assert!(matches!(*x, Formula::And(..))),
                _ => panic!("expected ||"),
            },
            _ => panic!("expected =>"),
        }
    }

    #[test]
    fn parenthesized_terms_and_formulas() {
        let f = parse_formula("((P(A) + P(B)) * P(C) >= P(D))").unwrap();
        assert_eq!(classify(&f).unwrap(), LanguageTag::Poly);
        assert_eq!(parse_formula(&render(&f)).unwrap(), f);
    }

    #[test]
    fn errors_carry_positions() {
        assert!(matches!(parse_formula("P(A) >= $"), Err(ParseError::UnknownToken { pos: 8, .. })));
        assert!(matches!(parse_formula("P(A) P(B)"), Err(ParseError::Syntax { pos: 5, .. })));
    }

    #[test]
    fn free_letters_sorted() {
        let f = parse_formula("P(B | A) > P(A)").unwrap();
        assert_eq!(free_letters(&f), vec!["A".to_string(), "B".to_string()]);
        assert!(free_letters(&parse_formula("P(T) >= P(F)").unwrap()).is_empty());
        let g = parse_formula("P(A |: B) >= P(C |: D)").unwrap();
        assert_eq!(free_letters(&g).len(), 4);
    }

    #[test]
    fn hierarchy_order() {
        use LanguageTag::*;
        assert!(Comp.leq(Add) && Add.leq(Poly) && Comp.leq(Cond) && SameCond.leq(Cond));
        assert!(Ind.leq(Confirm) && Confirm.leq(Cond) && Cond.leq(Quad) && Quad.leq(Poly));
        assert!(!Ind.leq(Add) && !Comp.leq(Ind) && !Add.leq(Cond) && !Confirm.leq(Add));
    }
}
