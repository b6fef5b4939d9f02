//! Distinguishing pairs of finite models by formulas of a given language,
//! and the fixture pairs separating the language hierarchy.

use std::fmt;

use num_traits::{One, Zero};
use serde_json::{json, Value};
use thiserror::Error;

use crate::normalize::state_valuations;
use crate::num::{q, simplest_between, Q};
use crate::semantics::{satisfies, Model, SemError};
use crate::syntax::{render, Atom, BoolExpr, ConfirmDir, Formula, LanguageTag, Term};

/// Exhaustive event scans are limited to this many letters (256 events).
pub const MAX_SCAN_LETTERS: usize = 3;

#[derive(Debug, Error)]
pub enum ExprError {
    #[error("models have different letters: {0:?} vs {1:?}")]
    LetterMismatch(Vec<String>, Vec<String>),
    #[error("exhaustive scan supports at most {MAX_SCAN_LETTERS} letters, got {0}")]
    TooManyLetters(usize),
    #[error(transparent)]
    Sem(#[from] SemError),
}

/// Events of a model as bitmasks over canonical states, with readable names.
struct Events {
    n_states: usize,
    names: Vec<BoolExpr>,
}

impl Events {
    fn new(letters: &[String]) -> Events {
        let n = letters.len();
        let n_states = 1usize << n;
        let vals = state_valuations(n);
        let mask_of = |b: &BoolExpr| -> usize {
            let mut m = 0;
            for (i, v) in vals.iter().enumerate() {
                if b.eval(&|l: &str| {
                    let k = letters.iter().position(|x| x == l).unwrap();
                    v >> k & 1 == 1
                }) {
                    m |= 1 << i;
                }
            }
            m
        };
        let n_events = 1usize << n_states;
        let mut names: Vec<Option<BoolExpr>> = vec![None; n_events];
        let put = |b: BoolExpr, names: &mut Vec<Option<BoolExpr>>| {
            let m = mask_of(&b);
            if names[m].is_none() {
                names[m] = Some(b);
            }
        };
        put(BoolExpr::Bot, &mut names);
        put(BoolExpr::Top, &mut names);
        let mut lits = Vec::new();
        for l in letters {
            lits.push(BoolExpr::letter(l));
            lits.push(BoolExpr::letter(l).not());
        }
        for l in &lits {
            put(l.clone(), &mut names);
        }
        for (i, a) in lits.iter().enumerate() {
            for b in &lits[i + 1..] {
                put(a.clone().and(b.clone()), &mut names);
            }
        }
        for (i, a) in lits.iter().enumerate() {
            for b in &lits[i + 1..] {
                put(a.clone().or(b.clone()), &mut names);
            }
        }
        let names = names
            .into_iter()
            .enumerate()
            .map(|(m, nm)| {
                nm.unwrap_or_else(|| {
                    let states = (0..n_states).filter(|i| m >> i & 1 == 1).map(|i| {
                        BoolExpr::conj(letters.iter().enumerate().map(|(k, l)| {
                            if vals[i] >> k & 1 == 1 {
                                BoolExpr::letter(l)
                            } else {
                                BoolExpr::letter(l).not()
                            }
                        }))
                    });
                    BoolExpr::disj(states)
                })
            })
            .collect();
        Events { n_states, names }
    }

    fn count(&self) -> usize {
        1 << self.n_states
    }

    fn probs(&self, m: &Model) -> Vec<Q> {
        let vals = state_valuations(m.letters.len());
        let total = m.total();
        let w: Vec<Q> = vals.iter().map(|v| m.weight(*v) / &total).collect();
        (0..self.count())
            .map(|e| (0..self.n_states).filter(|i| e >> i & 1 == 1).map(|i| w[i].clone()).sum())
            .collect()
    }
}

fn p(ev: &Events, e: usize) -> Term {
    Term::p(ev.names[e].clone())
}

/// A formula true in exactly one of `m1`, `m2` within `lang`, or `None` if
/// the models agree on every formula of the language.
pub fn distinguishable(m1: &Model, m2: &Model, lang: LanguageTag) -> Result<Option<Formula>, ExprError> {
    if m1.letters != m2.letters {
        return Err(ExprError::LetterMismatch(m1.letters.clone(), m2.letters.clone()));
    }
    let found = match lang {
        LanguageTag::Add | LanguageTag::Poly => add_witness(m1, m2)?,
        _ => {
            if m1.letters.len() > MAX_SCAN_LETTERS {
                return Err(ExprError::TooManyLetters(m1.letters.len()));
            }
            let ev = Events::new(&m1.letters);
            let (p1, p2) = (ev.probs(m1), ev.probs(m2));
            match lang {
                LanguageTag::Comp => scan_comp(&ev, &p1, &p2),
                LanguageTag::SameCond => scan_comp(&ev, &p1, &p2).map(|f| {
                    f.map_atoms(&mut |a| match a {
                        Atom::Geq(Term::Basic(x), Term::Basic(y)) => Formula::geq(
                            Term::Cond(x.clone(), BoolExpr::Top),
                            Term::Cond(y.clone(), BoolExpr::Top),
                        ),
                        other => Formula::Atom(other.clone()),
                    })
                }),
                LanguageTag::Ind => scan_eq(&ev, &p1, &p2).or_else(|| scan_indep(&ev, &p1, &p2)),
                LanguageTag::Confirm => scan_eq(&ev, &p1, &p2).or_else(|| scan_confirm(&ev, &p1, &p2)),
                LanguageTag::Cond => scan_cond(&ev, &p1, &p2),
                LanguageTag::Quad => scan_quad(&ev, &p1, &p2).or_else(|| scan_cond(&ev, &p1, &p2)),
                LanguageTag::Add | LanguageTag::Poly => unreachable!(),
            }
        }
    };
    if let Some(f) = &found {
        assert_ne!(satisfies(m1, f)?, satisfies(m2, f)?, "witness {} does not separate", render(f));
    }
    Ok(found)
}

fn scan_comp(ev: &Events, p1: &[Q], p2: &[Q]) -> Option<Formula> {
    for a in 0..ev.count() {
        for b in 0..ev.count() {
            if (p1[a] >= p1[b]) != (p2[a] >= p2[b]) {
                return Some(Formula::geq(p(ev, a), p(ev, b)));
            }
        }
    }
    None
}

fn scan_eq(ev: &Events, p1: &[Q], p2: &[Q]) -> Option<Formula> {
    for a in 0..ev.count() {
        for b in a + 1..ev.count() {
            if (p1[a] == p1[b]) != (p2[a] == p2[b]) {
                return Some(Formula::eq(p(ev, a), p(ev, b)));
            }
        }
    }
    None
}

fn scan_indep(ev: &Events, p1: &[Q], p2: &[Q]) -> Option<Formula> {
    let ind = |p: &[Q], a: usize, b: usize| p[a & b] == &p[a] * &p[b];
    for a in 0..ev.count() {
        for b in a..ev.count() {
            if ind(p1, a, b) != ind(p2, a, b) {
                return Some(Formula::Atom(Atom::Indep(ev.names[a].clone(), ev.names[b].clone())));
            }
        }
    }
    None
}

fn scan_confirm(ev: &Events, p1: &[Q], p2: &[Q]) -> Option<Formula> {
    for a in 0..ev.count() {
        for b in 0..ev.count() {
            let (j1, j2) = (&p1[a & b], &p2[a & b]);
            let (m1, m2) = (&p1[a] * &p1[b], &p2[a] * &p2[b]);
            for dir in [ConfirmDir::CondOverUncond, ConfirmDir::UncondOverCond] {
                let t = |j: &Q, m: &Q| match dir {
                    ConfirmDir::CondOverUncond => j >= m,
                    ConfirmDir::UncondOverCond => j <= m,
                };
                if t(j1, &m1) != t(j2, &m2) {
                    return Some(Formula::Atom(Atom::Confirm { alpha: ev.names[a].clone(), beta: ev.names[b].clone(), dir }));
                }
            }
        }
    }
    None
}

/// `P(a|b) ≿ P(c|d)` for all event quadruples, reduced to pairs `(a∧b, b)`.
fn scan_cond(ev: &Events, p1: &[Q], p2: &[Q]) -> Option<Formula> {
    let mut pairs = Vec::new();
    for b in 0..ev.count() {
        // every sub-event of b
        let mut e = b;
        loop {
            pairs.push((e, b));
            if e == 0 {
                break;
            }
            e = (e - 1) & b;
        }
    }
    let holds = |p: &[Q], x: (usize, usize), y: (usize, usize)| &p[x.0] * &p[y.1] >= &p[y.0] * &p[x.1];
    for x in &pairs {
        for y in &pairs {
            if holds(p1, *x, *y) != holds(p2, *x, *y) {
                let t = |z: (usize, usize)| Term::Cond(ev.names[z.0].clone(), ev.names[z.1].clone());
                return Some(Formula::geq(t(*x), t(*y)));
            }
        }
    }
    None
}

fn scan_quad(ev: &Events, p1: &[Q], p2: &[Q]) -> Option<Formula> {
    let n = ev.count();
    let pairs: Vec<(usize, usize)> = (0..n).flat_map(|a| (a..n).map(move |b| (a, b))).collect();
    let v1: Vec<Q> = pairs.iter().map(|(a, b)| &p1[*a] * &p1[*b]).collect();
    let v2: Vec<Q> = pairs.iter().map(|(a, b)| &p2[*a] * &p2[*b]).collect();
    for i in 0..pairs.len() {
        for j in 0..pairs.len() {
            if (v1[i] >= v1[j]) != (v2[i] >= v2[j]) {
                let t = |k: usize| p(ev, pairs[k].0).times(p(ev, pairs[k].1));
                return Some(Formula::geq(t(i), t(j)));
            }
        }
    }
    None
}

/// Additive witness: first a short equation `P(a) ≈ P(b) + P(c)` over the
/// event lattice (small models only), otherwise the constructive comparison
/// `n·P(⊤) ≿ m·P(δ)` with `n/m` strictly between the two values of a state `δ`.
fn add_witness(m1: &Model, m2: &Model) -> Result<Option<Formula>, ExprError> {
    if m1.letters.len() <= 2 {
        let ev = Events::new(&m1.letters);
        let (p1, p2) = (ev.probs(m1), ev.probs(m2));
        let n = ev.count();
        for a in 0..n {
            for b in 0..n {
                for c in b..n {
                    let t1 = p1[a] == &p1[b] + &p1[c];
                    let t2 = p2[a] == &p2[b] + &p2[c];
                    if t1 != t2 {
                        return Ok(Some(Formula::eq(p(&ev, a), p(&ev, b).plus(p(&ev, c)))));
                    }
                }
            }
        }
    }
    let letters = &m1.letters;
    let (t1, t2) = (m1.total(), m2.total());
    for v in state_valuations(letters.len()) {
        let (x1, x2) = (m1.weight(v) / &t1, m2.weight(v) / &t2);
        if x1 == x2 {
            continue;
        }
        let (lo, hi) = if x1 < x2 { (&x1, &x2) } else { (&x2, &x1) };
        let r = simplest_between(lo, hi);
        let (num, den) = (r.numer().clone(), r.denom().clone());
        let num: usize = num.try_into().expect("numerator fits");
        let den: usize = den.try_into().expect("denominator fits");
        let delta = BoolExpr::conj(letters.iter().enumerate().map(|(k, l)| {
            if v >> k & 1 == 1 {
                BoolExpr::letter(l)
            } else {
                BoolExpr::letter(l).not()
            }
        }));
        let lhs = if num == 0 { Term::zero() } else { Term::one().repeat_sum(num) };
        let f = Formula::geq(lhs, Term::p(delta).repeat_sum(den));
        return Ok(Some(f));
    }
    Ok(None)
}

// ---------------------------------------------------------------- fixtures

/// One measure pair with the expected verdict (`true` = distinguishable) per language.
#[derive(Clone, Debug)]
pub struct FixturePair {
    pub name: &'static str,
    pub m1: Model,
    pub m2: Model,
    pub expect: Vec<(LanguageTag, bool)>,
}

fn two(ws: [Q; 4]) -> Model {
    Model::from_state_weights(&["A", "B"], &ws).unwrap()
}

fn one(a: Q) -> Model {
    let na = Q::one() - &a;
    Model::from_state_weights(&["A"], &[a, na]).unwrap()
}

/// The six separating pairs. Two-letter weights are listed in the order
/// A∧B, ¬A∧B, A∧¬B, ¬A∧¬B.
pub fn fixture_pairs() -> Vec<FixturePair> {
    use LanguageTag::*;
    let d36 = |a: i64, b: i64, c: i64, d: i64| two([q(a, 36), q(b, 36), q(c, 36), q(d, 36)]);
    vec![
        FixturePair { name: "comp_vs_add", m1: one(q(2, 3)), m2: one(q(3, 5)), expect: vec![(Comp, false), (Add, true)] },
        FixturePair {
            name: "comp_vs_ind",
            m1: d36(25, 5, 5, 1),
            m2: d36(27, 4, 4, 1),
            expect: vec![(Comp, false), (Ind, true)],
        },
        FixturePair {
            name: "ind_vs_confirm",
            m1: d36(23, 6, 6, 1),
            m2: d36(27, 4, 4, 1),
            expect: vec![(Ind, false), (Confirm, true)],
        },
        FixturePair {
            name: "confirm_vs_comp",
            // A∧B = 1/9, A∧¬B = 1/3, ¬A∧B = 5/9 and the mirror image
            m1: two([q(1, 9), q(5, 9), q(1, 3), Q::zero()]),
            m2: two([q(1, 9), q(1, 3), q(5, 9), Q::zero()]),
            expect: vec![(Confirm, false), (Comp, true), (Cond, true)],
        },
        FixturePair {
            name: "cond_vs_quad",
            // α = A∧B, β = A∧¬B, γ = ¬A∧B; ¬A∧¬B is null
            m1: two([q(3, 20), q(13, 20), q(4, 20), Q::zero()]),
            m2: two([q(12, 100), q(69, 100), q(19, 100), Q::zero()]),
            expect: vec![(Cond, false), (Quad, true)],
        },
        FixturePair { name: "quad_vs_poly", m1: one(q(2, 3)), m2: one(q(3, 4)), expect: vec![(Quad, false), (Poly, true)] },
    ]
}

impl FixturePair {
    pub fn to_json(&self) -> Value {
        json!({
            "name": self.name,
            "m1": self.m1.to_json(),
            "m2": self.m2.to_json(),
            "expect": self.expect.iter().map(|(t, d)| json!({"lang": t.name(), "distinguishable": d})).collect::<Vec<_>>(),
        })
    }
}

#[derive(Clone, Debug)]
pub struct ReportRow {
    pub block: &'static str,
    pub lang: LanguageTag,
    pub expected: bool,
    pub witness: Option<Formula>,
}

impl ReportRow {
    pub fn ok(&self) -> bool {
        self.witness.is_some() == self.expected
    }
}

#[derive(Clone, Debug)]
pub struct HierarchyReport {
    pub rows: Vec<ReportRow>,
}

impl HierarchyReport {
    pub fn all_ok(&self) -> bool {
        self.rows.iter().all(|r| r.ok())
    }
    pub fn to_json(&self) -> Value {
        json!(self
            .rows
            .iter()
            .map(|r| json!({
                "block": r.block,
                "lang": r.lang.name(),
                "expected": r.expected,
                "distinguishable": r.witness.is_some(),
                "witness": r.witness.as_ref().map(render),
                "ok": r.ok(),
            }))
            .collect::<Vec<_>>())
    }
}

impl fmt::Display for HierarchyReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for r in &self.rows {
            let verdict = match &r.witness {
                Some(w) => format!("distinguishable by {}", render(w)),
                None => "indistinguishable".to_string(),
            };
            writeln!(f, "[{}] {:<16} {:<8} {}", if r.ok() { "ok" } else { "MISMATCH" }, r.block, r.lang.name(), verdict)?;
        }
        Ok(())
    }
}

pub fn run_pairs(pairs: &[FixturePair]) -> Result<HierarchyReport, ExprError> {
    let mut rows = Vec::new();
    for fx in pairs {
        for (lang, expected) in &fx.expect {
            let witness = distinguishable(&fx.m1, &fx.m2, *lang)?;
            rows.push(ReportRow { block: fx.name, lang: *lang, expected: *expected, witness });
        }
    }
    Ok(HierarchyReport { rows })
}

pub fn hierarchy_report() -> Result<HierarchyReport, ExprError> {
    run_pairs(&fixture_pairs())
}

/// Short Boolean names for every event over `letters`, indexed by state mask
/// in canonical state order.
pub fn event_exprs(letters: &[String]) -> Vec<BoolExpr> {
    Events::new(letters).names
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn add_block_equation() {
        let fx = &fixture_pairs()[0];
        let f = distinguishable(&fx.m1, &fx.m2, LanguageTag::Add).unwrap().unwrap();
        assert_eq!(render(&f), "P(A) = P(~A) + P(~A)");
        assert!(distinguishable(&fx.m1, &fx.m2, LanguageTag::Comp).unwrap().is_none());
    }

    #[test]
    fn constructive_add_witness() {
        let letters = ["A", "B", "C"];
        let u = Model::from_state_weights(&letters, &vec![q(1, 8); 8]).unwrap();
        let mut ws = vec![q(1, 8); 8];
        ws[0] = q(1, 8) + q(1, 100);
        ws[7] = q(1, 8) - q(1, 100);
        let v = Model::from_state_weights(&letters, &ws).unwrap();
        let f = distinguishable(&u, &v, LanguageTag::Poly).unwrap().unwrap();
        assert_ne!(satisfies(&u, &f).unwrap(), satisfies(&v, &f).unwrap());
    }

    #[test]
    fn identical_models() {
        let fx = &fixture_pairs()[1];
        for t in LanguageTag::ALL {
            assert!(distinguishable(&fx.m1, &fx.m1, t).unwrap().is_none());
        }
    }

    #[test]
    fn report_matches() {
        let r = hierarchy_report().unwrap();
        assert!(r.all_ok(), "{}", r);
    }

    #[test]
    fn swapped_expectations_flagged() {
        let mut pairs = fixture_pairs();
        for p in &mut pairs {
            for e in &mut p.expect {
                e.1 = !e.1;
            }
        }
        let r = run_pairs(&pairs).unwrap();
        assert!(r.rows.iter().all(|row| !row.ok()));
    }
}
