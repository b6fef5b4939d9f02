//! Reductions between languages: same-condition to comparative, the
//! inverse-problem encoding into `L_ind`, and `L_poly` to existential real
//! sentences with small-support enumeration.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use num_traits::{One, Signed, Zero};
use rand::seq::SliceRandom;
use rand::Rng;
use thiserror::Error;

use crate::normalize::{dnf, state_descriptions, Expander, PRel, PolySystem};
use crate::num::{fmt_q, q, qi, Q};
use crate::poly::Poly;
use crate::polysolve::{sat_multiplicative, PolyBudget, PolyError, PolyVerdict};
use crate::semantics::{Mode, Model, SemError, Valuation, MAX_LETTERS};
use crate::syntax::{classify, free_letters, Atom, BoolExpr, Formula, LanguageTag, Term};

#[derive(Debug, Error)]
pub enum ReductionError {
    #[error("expected a {expected} formula, got {got}")]
    WrongFragment { expected: &'static str, got: String },
    #[error("malformed constraint: {0}")]
    Malformed(String),
    #[error("value {0} lies outside [1/2, 2]")]
    OutOfRange(String),
    #[error("encoding needs {0} letters")]
    TooManyLetters(usize),
    #[error(transparent)]
    Sem(#[from] SemError),
    #[error(transparent)]
    Poly(#[from] PolyError),
}

// ---------------------------------------------------------------- same condition

fn flatten_cond(t: &Term) -> Term {
    match t {
        Term::Cond(a, c) => Term::Basic(a.clone().and(c.clone())),
        other => other.clone(),
    }
}

/// Replaces every `P(α | γ)` by `P(α ∧ γ)`. For atoms sharing one condition
/// the cross-multiplied clause is equivalent to the unconditional comparison,
/// including when `P(γ) = 0`.
pub fn same_cond_to_comp(f: &Formula) -> Result<Formula, ReductionError> {
    let tag = classify(f).map_err(|e| ReductionError::WrongFragment { expected: "same_cond", got: e.to_string() })?;
    if !matches!(tag, LanguageTag::SameCond | LanguageTag::Comp) {
        return Err(ReductionError::WrongFragment { expected: "same_cond", got: tag.name().into() });
    }
    Ok(f.map_atoms(&mut |a| {
        Formula::Atom(match a {
            Atom::Geq(x, y) => Atom::Geq(flatten_cond(x), flatten_cond(y)),
            Atom::Gt(x, y) => Atom::Gt(flatten_cond(x), flatten_cond(y)),
            Atom::Eq(x, y) => Atom::Eq(flatten_cond(x), flatten_cond(y)),
            other => other.clone(),
        })
    }))
}

// ---------------------------------------------------------------- inverse problem

/// One constraint of the inverse problem; indices are 0-based.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum InvConstraint {
    /// `x_i + x_j = x_k`
    Sum(usize, usize, usize),
    /// `x_i · x_j = 1`
    Inv(usize, usize),
}

/// Variables `x_1..x_n` restricted to `[1/2, 2]` and a list of constraints.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct InverseSystem {
    pub n: usize,
    pub constraints: Vec<InvConstraint>,
}

impl InverseSystem {
    pub fn new(n: usize, constraints: Vec<InvConstraint>) -> Result<InverseSystem, ReductionError> {
        if n == 0 {
            return Err(ReductionError::Malformed("no variables".into()));
        }
        for c in &constraints {
            let ok = match *c {
                InvConstraint::Sum(i, j, k) => i < n && j < n && k < n,
                InvConstraint::Inv(i, j) => i < n && j < n,
            };
            if !ok {
                return Err(ReductionError::Malformed(format!("{} refers past x{}", show_constraint(c), n)));
            }
        }
        Ok(InverseSystem { n, constraints })
    }

    /// Lines like `x1 + x2 = x3` and `x1 * x2 = 1`; `n` is the largest index seen
    /// unless a `vars N` line says otherwise. `#` starts a comment.
    pub fn parse(text: &str) -> Result<InverseSystem, ReductionError> {
        let mut n = 0;
        let mut declared = None;
        let mut cs = Vec::new();
        let var = |s: &str| -> Result<usize, ReductionError> {
            let s = s.trim();
            s.strip_prefix('x')
                .and_then(|d| d.parse::<usize>().ok())
                .filter(|d| *d >= 1)
                .map(|d| d - 1)
                .ok_or_else(|| ReductionError::Malformed(format!("bad variable {:?}", s)))
        };
        for line in text.lines() {
            let line = line.split('#').next().unwrap().trim();
            if line.is_empty() {
                continue;
            }
            if let Some(v) = line.strip_prefix("vars") {
                declared = Some(v.trim().parse().map_err(|_| ReductionError::Malformed(line.into()))?);
                continue;
            }
            let (lhs, rhs) = line.split_once('=').ok_or_else(|| ReductionError::Malformed(line.into()))?;
            let c = if let Some((a, b)) = lhs.split_once('+') {
                InvConstraint::Sum(var(a)?, var(b)?, var(rhs)?)
            } else if let Some((a, b)) = lhs.split_once('*') {
                if rhs.trim() != "1" {
                    return Err(ReductionError::Malformed(line.into()));
                }
                InvConstraint::Inv(var(a)?, var(b)?)
            } else {
                return Err(ReductionError::Malformed(line.into()));
            };
            n = n.max(match c {
                InvConstraint::Sum(i, j, k) => i.max(j).max(k) + 1,
                InvConstraint::Inv(i, j) => i.max(j) + 1,
            });
            cs.push(c);
        }
        InverseSystem::new(declared.unwrap_or(n), cs)
    }

    pub fn holds(&self, x: &[Q]) -> bool {
        let lo = q(1, 2);
        let hi = qi(2);
        x.len() == self.n
            && x.iter().all(|v| *v >= lo && *v <= hi)
            && self.constraints.iter().all(|c| match *c {
                InvConstraint::Sum(i, j, k) => &x[i] + &x[j] == x[k],
                InvConstraint::Inv(i, j) => (&x[i] * &x[j]).is_one(),
            })
    }

    /// Equisatisfiable `L_poly` formula over letters `X1..Xn` with `P(Xi) = x_i / 4`.
    pub fn to_poly_formula(&self) -> Formula {
        let p = |i: usize| Term::p(BoolExpr::letter(&format!("X{}", i + 1)));
        let one = Term::one();
        let mut parts = Vec::new();
        for i in 0..self.n {
            parts.push(Formula::geq(p(i).repeat_sum(8), one.clone()));
            parts.push(Formula::geq(one.clone(), p(i).repeat_sum(2)));
        }
        for c in &self.constraints {
            parts.push(match *c {
                InvConstraint::Sum(i, j, k) => Formula::eq(p(i).plus(p(j)), p(k)),
                InvConstraint::Inv(i, j) => Formula::eq(p(i).times(p(j)).repeat_sum(16), one.clone()),
            });
        }
        Formula::conj(parts).unwrap()
    }

    /// Reads `x_i = 4·P(Xi)` off a model of `to_poly_formula`.
    pub fn from_poly_model(&self, m: &Model) -> Result<Vec<Q>, ReductionError> {
        (0..self.n).map(|i| Ok(m.prob(&BoolExpr::letter(&format!("X{}", i + 1)))? * qi(4))).collect()
    }
}

fn show_constraint(c: &InvConstraint) -> String {
    match *c {
        InvConstraint::Sum(i, j, k) => format!("x{} + x{} = x{}", i + 1, j + 1, k + 1),
        InvConstraint::Inv(i, j) => format!("x{} * x{} = 1", i + 1, j + 1),
    }
}

impl fmt::Display for InverseSystem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "vars {}", self.n)?;
        for c in &self.constraints {
            writeln!(f, "{}", show_constraint(c))?;
        }
        Ok(())
    }
}

/// Equal-weight partition of `N` pieces. The pieces are the first `N` state
/// descriptions over `letters`, so they exclude each other by construction.
#[derive(Clone, Debug)]
pub struct Partition {
    pub size: usize,
    pub letters: Vec<String>,
    pub pieces: Vec<BoolExpr>,
    valuations: Vec<Valuation>,
}

impl Partition {
    fn new(size: usize) -> Partition {
        let bits = (usize::BITS - (size - 1).leading_zeros()) as usize;
        let letters: Vec<String> = (0..bits).map(|t| format!("E{}_{}", size, t)).collect();
        let sds = state_descriptions(&letters);
        let pieces = sds[..size].iter().map(|s| s.to_bool(&letters)).collect();
        let valuations = sds[..size].iter().map(|s| s.valuation).collect();
        Partition { size, letters, pieces, valuations }
    }

    /// The event standing for the constant `1/N`.
    pub fn unit(&self) -> BoolExpr {
        self.pieces[0].clone()
    }

    fn atoms(&self) -> Vec<Formula> {
        if self.size == 1 {
            return vec![];
        }
        let mut out: Vec<Formula> =
            self.pieces[1..].iter().map(|e| Formula::eq(Term::p(e.clone()), Term::p(self.unit()))).collect();
        out.push(Formula::eq(Term::p(BoolExpr::disj(self.pieces.clone())), Term::one()));
        out
    }
}

/// Output of `etr_inverse_to_ind` together with what the transport maps need.
#[derive(Clone, Debug)]
pub struct IndReduction {
    pub system: InverseSystem,
    pub formula: Formula,
    pub letters: Vec<String>,
    pub partitions: BTreeMap<usize, Partition>,
}

fn d(i: usize) -> String {
    format!("D{}", i + 1)
}

/// `δ'_i = Q_i ∧ ¬Q_1 ∧ … ∧ ¬Q_{i-1}`: pairwise exclusive by construction.
fn delta_prime(i: usize) -> BoolExpr {
    BoolExpr::conj(
        std::iter::once(BoolExpr::letter(&format!("Q{}", i + 1)))
            .chain((0..i).map(|j| BoolExpr::letter(&format!("Q{}", j + 1)).not())),
    )
}

/// Builds the `L_ind` instance for an inverse problem. Atom count is at most
/// `4n² + 7n + 3m` for `m` constraints.
///
/// Bounds `P(α) ≿ 1/N` and `1/N ≿ P(α)` become `P(α ∧ H) = P(ε_N)` and
/// `P(ε_N ∧ G) = P(α)` with fresh `H`, `G`, which need only equality atoms.
pub fn etr_inverse_to_ind(sys: &InverseSystem) -> Result<IndReduction, ReductionError> {
    let n = sys.n;
    let mut partitions = BTreeMap::new();
    for size in [n, 4 * n, 4 * n * n] {
        partitions.entry(size).or_insert_with(|| Partition::new(size));
    }
    let eps = |size: usize| partitions[&size].unit();
    let pd = |i: usize| Term::p(BoolExpr::letter(&d(i)));
    let mut atoms: Vec<Formula> = Vec::new();
    for part in partitions.values() {
        atoms.extend(part.atoms());
    }
    let mut letters: Vec<String> = (0..n).map(d).collect();
    for i in 0..n {
        let h = format!("H{}", i + 1);
        let g = format!("G{}", i + 1);
        atoms.push(Formula::eq(Term::p(BoolExpr::letter(&d(i)).and(BoolExpr::letter(&h))), Term::p(eps(4 * n))));
        atoms.push(Formula::eq(Term::p(eps(n).and(BoolExpr::letter(&g))), pd(i)));
        letters.push(h);
        letters.push(g);
    }
    let mut primed = BTreeSet::new();
    let mut prime = |i: usize, atoms: &mut Vec<Formula>| {
        if primed.insert(i) {
            atoms.push(Formula::eq(Term::p(delta_prime(i)), pd(i)));
        }
    };
    for (c, con) in sys.constraints.iter().enumerate() {
        match *con {
            InvConstraint::Inv(i, j) if i != j => {
                atoms.push(Formula::Atom(Atom::Indep(BoolExpr::letter(&d(i)), BoolExpr::letter(&d(j)))));
                atoms.push(Formula::eq(Term::p(BoolExpr::letter(&d(i)).and(BoolExpr::letter(&d(j)))), Term::p(eps(4 * n * n))));
            }
            InvConstraint::Inv(i, _) => {
                // an event is independent of itself only at 0 or 1, so square
                // constraints go through an independent copy
                let copy = format!("C{}", c + 1);
                let cb = BoolExpr::letter(&copy);
                atoms.push(Formula::eq(Term::p(cb.clone()), pd(i)));
                atoms.push(Formula::Atom(Atom::Indep(BoolExpr::letter(&d(i)), cb.clone())));
                atoms.push(Formula::eq(Term::p(BoolExpr::letter(&d(i)).and(cb)), Term::p(eps(4 * n * n))));
                letters.push(copy);
            }
            InvConstraint::Sum(i, j, k) if i != j => {
                prime(i, &mut atoms);
                prime(j, &mut atoms);
                atoms.push(Formula::eq(Term::p(delta_prime(i).or(delta_prime(j))), pd(k)));
            }
            InvConstraint::Sum(i, _, k) => {
                // δ'_i ∨ δ'_i collapses, so the second summand is a fresh event outside δ'_i
                prime(i, &mut atoms);
                let r = format!("R{}", c + 1);
                let second = BoolExpr::letter(&r).and(delta_prime(i).not());
                atoms.push(Formula::eq(Term::p(second.clone()), pd(i)));
                atoms.push(Formula::eq(Term::p(delta_prime(i).or(second)), pd(k)));
                letters.push(r);
            }
        }
    }
    letters.extend((0..n).map(|i| format!("Q{}", i + 1)));
    for part in partitions.values() {
        letters.extend(part.letters.iter().cloned());
    }
    if letters.len() > MAX_LETTERS {
        return Err(ReductionError::TooManyLetters(letters.len()));
    }
    let formula = Formula::conj(atoms).unwrap();
    Ok(IndReduction { system: sys.clone(), formula, letters, partitions })
}

/// Finite unions of half-open subintervals of `[0, 1)`.
#[derive(Clone, Debug, Default)]
struct Spans(Vec<(Q, Q)>);

impl Spans {
    fn one(a: Q, b: Q) -> Spans {
        Spans(vec![(a, b)])
    }
    fn mass(&self) -> Q {
        self.0.iter().map(|(a, b)| b - a).sum()
    }
    /// The leftmost part of total length `m`.
    fn prefix(&self, m: &Q) -> Spans {
        let mut left = m.clone();
        let mut out = Vec::new();
        for (a, b) in &self.0 {
            if left.is_zero() {
                break;
            }
            let len = b - a;
            if len <= left {
                out.push((a.clone(), b.clone()));
                left -= len;
            } else {
                out.push((a.clone(), a + &left));
                left = Q::zero();
            }
        }
        Spans(out)
    }
    /// The first fraction `t` of every interval.
    fn fraction(&self, t: &Q) -> Spans {
        Spans(self.0.iter().map(|(a, b)| (a.clone(), a + (b - a) * t)).collect())
    }
    fn complement(&self) -> Spans {
        let mut v = self.0.clone();
        v.sort();
        let mut out = Vec::new();
        let mut at = Q::zero();
        for (a, b) in v {
            if a > at {
                out.push((at.clone(), a.clone()));
            }
            if b > at {
                at = b;
            }
        }
        if at < Q::one() {
            out.push((at, Q::one()));
        }
        Spans(out)
    }
    fn rotate(&self, r: &Q) -> Spans {
        let mut out = Vec::new();
        for (a, b) in &self.0 {
            let (a, b) = (a + r, b + r);
            let one = Q::one();
            if b <= one {
                out.push((a, b));
            } else if a >= one {
                out.push((a - &one, b - &one));
            } else {
                out.push((a, one.clone()));
                out.push((Q::zero(), b - &one));
            }
        }
        Spans(out)
    }
    fn contains(&self, x: &Q) -> bool {
        self.0.iter().any(|(a, b)| a <= x && x < b)
    }
}

impl IndReduction {
    /// Sends a solution `x` to a model with `P(δ_i) = x_i / 2n`. Every letter is
    /// laid out as a union of intervals of `[0,1)`; `rotate` shifts everything
    /// not tied to the `D` letters, giving a different model of the same formula.
    pub fn forward(&self, x: &[Q], rotate: &Q) -> Result<Model, ReductionError> {
        let n = self.system.n;
        if x.len() != n {
            return Err(ReductionError::Malformed(format!("expected {} values", n)));
        }
        if let Some(v) = x.iter().find(|v| **v < q(1, 2) || **v > qi(2)) {
            return Err(ReductionError::OutOfRange(fmt_q(v)));
        }
        let scale = qi(2 * n as i64);
        let a: Vec<Q> = x.iter().map(|v| v / &scale).collect();
        let mut sets: BTreeMap<String, Spans> = BTreeMap::new();

        // D letters mutually independent: one interval per sign pattern
        let mut cells: Vec<(u64, Q, Q)> = Vec::new();
        let mut at = Q::zero();
        for mask in 0u64..(1 << n) {
            let w: Q = (0..n).map(|i| if mask >> i & 1 == 1 { a[i].clone() } else { Q::one() - &a[i] }).product();
            cells.push((mask, at.clone(), &at + &w));
            at += w;
        }
        let ds: Vec<Spans> = (0..n)
            .map(|i| Spans(cells.iter().filter(|(m, _, _)| m >> i & 1 == 1).map(|(_, s, e)| (s.clone(), e.clone())).collect()))
            .collect();
        let all_cells = Spans(cells.iter().map(|(_, s, e)| (s.clone(), e.clone())).collect());
        for i in 0..n {
            sets.insert(format!("H{}", i + 1), ds[i].prefix(&q(1, 4 * n as i64)));
            sets.insert(d(i), ds[i].clone());
        }
        for (c, con) in self.system.constraints.iter().enumerate() {
            if let InvConstraint::Inv(i, j) = *con {
                if i == j {
                    sets.insert(format!("C{}", c + 1), all_cells.fraction(&a[i]));
                }
            }
        }

        // everything else, rotated together
        let mut rest: BTreeMap<String, Spans> = BTreeMap::new();
        for part in self.partitions.values() {
            let nn = part.size as i64;
            for (t, l) in part.letters.iter().enumerate() {
                let spans = part
                    .valuations
                    .iter()
                    .enumerate()
                    .filter(|(_, v)| *v >> t & 1 == 1)
                    .map(|(p, _)| (q(p as i64, nn), q(p as i64 + 1, nn)))
                    .collect();
                rest.insert(l.clone(), Spans(spans));
            }
        }
        let mut start = Q::zero();
        let mut qs = Vec::new();
        for i in 0..n {
            rest.insert(format!("G{}", i + 1), Spans::one(Q::zero(), a[i].clone()));
            let qi_ = Spans::one(start.clone(), &start + &a[i]);
            start += &a[i];
            rest.insert(format!("Q{}", i + 1), qi_.clone());
            qs.push(qi_);
        }
        for (c, con) in self.system.constraints.iter().enumerate() {
            if let InvConstraint::Sum(i, j, _) = *con {
                if i == j {
                    rest.insert(format!("R{}", c + 1), qs[i].complement().prefix(&a[i]));
                }
            }
        }
        for (k, v) in rest {
            sets.insert(k, v.rotate(rotate));
        }
        for l in &self.letters {
            sets.entry(l.clone()).or_default();
        }
        Ok(interval_model(&self.letters, &sets)?)
    }

    /// `x_i = 2n · P(δ_i)`.
    pub fn backward(&self, m: &Model) -> Result<Vec<Q>, ReductionError> {
        let scale = qi(2 * self.system.n as i64);
        (0..self.system.n).map(|i| Ok(m.prob(&BoolExpr::letter(&d(i)))? * &scale)).collect()
    }

    pub fn atom_count(&self) -> usize {
        self.formula.atoms().len()
    }

    /// `4n² + 7n + 3m`.
    pub fn atom_bound(&self) -> usize {
        let n = self.system.n;
        4 * n * n + 7 * n + 3 * self.system.constraints.len()
    }
}

fn interval_model(letters: &[String], sets: &BTreeMap<String, Spans>) -> Result<Model, SemError> {
    let mut cuts: BTreeSet<Q> = BTreeSet::new();
    cuts.insert(Q::zero());
    cuts.insert(Q::one());
    for s in sets.values() {
        debug_assert!(s.mass() <= Q::one());
        for (a, b) in &s.0 {
            cuts.insert(a.clone());
            cuts.insert(b.clone());
        }
    }
    let cuts: Vec<Q> = cuts.into_iter().collect();
    let mut weights: BTreeMap<Valuation, Q> = BTreeMap::new();
    let half = q(1, 2);
    for w in cuts.windows(2) {
        let mid = (&w[0] + &w[1]) * &half;
        let mut v: Valuation = 0;
        for (i, l) in letters.iter().enumerate() {
            if sets[l].contains(&mid) {
                v |= 1 << i;
            }
        }
        *weights.entry(v).or_insert_with(Q::zero) += &w[1] - &w[0];
    }
    Model::new(Mode::Prob, letters.to_vec(), weights)
}

const PLANT_VALUES: [(i64, i64); 6] = [(1, 2), (2, 3), (1, 1), (4, 3), (3, 2), (2, 1)];

/// Random inverse-problem instance. Constraints are drawn from those a
/// planted solution satisfies; with probability `p_break` one constraint the
/// plant violates is added and the plant is dropped.
pub fn generate_inverse(n: usize, m: usize, p_break: f64, rng: &mut impl Rng) -> (InverseSystem, Option<Vec<Q>>) {
    let x: Vec<Q> = (0..n).map(|_| {
        let (a, b) = PLANT_VALUES[rng.gen_range(0..PLANT_VALUES.len())];
        q(a, b)
    }).collect();
    let mut good = Vec::new();
    let mut bad = Vec::new();
    for i in 0..n {
        for j in i..n {
            let c = InvConstraint::Inv(i, j);
            if (&x[i] * &x[j]).is_one() { good.push(c) } else { bad.push(c) }
            for k in 0..n {
                let c = InvConstraint::Sum(i, j, k);
                if &x[i] + &x[j] == x[k] { good.push(c) } else { bad.push(c) }
            }
        }
    }
    good.shuffle(rng);
    good.truncate(m);
    let sys_ok = InverseSystem { n, constraints: good.clone() };
    if !bad.is_empty() && rng.gen_bool(p_break) {
        let mut cs = good;
        cs.push(bad[rng.gen_range(0..bad.len())]);
        cs.shuffle(rng);
        return (InverseSystem { n, constraints: cs }, None);
    }
    (sys_ok, Some(x))
}

// ---------------------------------------------------------------- L_poly to ETR

/// `∃x ≥ 0. Σx = 1 ∧ (S_1 ∨ … ∨ S_k)`, one polynomial system per disjunct of
/// the formula, over the state variables of its letters.
#[derive(Clone, Debug)]
pub struct EtrSentence {
    pub letters: Vec<String>,
    pub vars: Vec<String>,
    pub disjuncts: Vec<PolySystem>,
}

pub fn poly_to_etr(f: &Formula) -> Result<EtrSentence, ReductionError> {
    let letters = free_letters(f);
    let ex = Expander::new(&letters);
    let disjuncts = dnf(f).iter().map(|c| ex.poly_system(c)).collect::<Result<Vec<_>, _>>()?;
    Ok(EtrSentence { letters, vars: ex.var_names(), disjuncts })
}

fn smt_q(c: &Q) -> String {
    let body = if c.is_integer() {
        format!("{}.0", c.numer().abs())
    } else {
        format!("(/ {}.0 {}.0)", c.numer().abs(), c.denom())
    };
    if c.is_negative() {
        format!("(- {})", body)
    } else {
        body
    }
}

fn smt_poly(p: &Poly, names: &[String]) -> String {
    if p.terms.is_empty() {
        return "0.0".into();
    }
    let mons: Vec<String> = p
        .terms
        .iter()
        .map(|(m, c)| {
            let mut fs = vec![smt_q(c)];
            for (v, e) in &m.0 {
                for _ in 0..*e {
                    fs.push(names[*v].clone());
                }
            }
            if fs.len() == 1 {
                fs.pop().unwrap()
            } else {
                format!("(* {})", fs.join(" "))
            }
        })
        .collect();
    if mons.len() == 1 {
        mons.into_iter().next().unwrap()
    } else {
        format!("(+ {})", mons.join(" "))
    }
}

impl EtrSentence {
    fn smt_names(&self) -> Vec<String> {
        (0..self.vars.len()).map(|i| format!("x{}", i)).collect()
    }

    /// SMT-LIB 2 in the QF_NRA logic.
    pub fn to_smtlib(&self) -> String {
        let names = self.smt_names();
        let mut s = String::from("(set-logic QF_NRA)\n");
        for (nm, v) in names.iter().zip(&self.vars) {
            s.push_str(&format!("(declare-fun {} () Real) ; {}\n", nm, v));
        }
        let systems: Vec<String> = self
            .disjuncts
            .iter()
            .map(|sys| {
                let rows: Vec<String> = sys
                    .rows
                    .iter()
                    .map(|r| {
                        let e = smt_poly(&r.poly, &names);
                        match r.rel {
                            PRel::Eq => format!("(= {} 0.0)", e),
                            PRel::Ge => format!("(>= {} 0.0)", e),
                            PRel::Gt => format!("(> {} 0.0)", e),
                            PRel::Ne => format!("(not (= {} 0.0))", e),
                        }
                    })
                    .collect();
                format!("(and {})", rows.join(" "))
            })
            .collect();
        match systems.len() {
            0 => s.push_str("(assert false)\n"),
            1 => s.push_str(&format!("(assert {})\n", systems[0])),
            _ => s.push_str(&format!("(assert (or {}))\n", systems.join(" "))),
        }
        s.push_str("(check-sat)\n");
        s
    }

    pub fn to_text(&self) -> String {
        let mut s = format!("exists {} .\n", self.vars.join(", "));
        for (i, sys) in self.disjuncts.iter().enumerate() {
            if i > 0 {
                s.push_str("OR\n");
            }
            for r in &sys.rows {
                s.push_str(&format!("  {} {} 0\n", r.poly.render(&|v| self.vars[v].clone()), r.rel.symbol()));
            }
        }
        s
    }
}

fn events_of(f: &Formula) -> BTreeSet<BoolExpr> {
    fn term(t: &Term, out: &mut BTreeSet<BoolExpr>) {
        match t {
            Term::Basic(b) => {
                out.insert(b.clone());
            }
            Term::Cond(a, b) => {
                out.insert(a.clone().and(b.clone()));
                out.insert(b.clone());
            }
            Term::Sum(x, y) | Term::Prod(x, y) => {
                term(x, out);
                term(y, out);
            }
        }
    }
    let mut out = BTreeSet::new();
    out.insert(BoolExpr::Top);
    for a in f.atoms() {
        match a {
            Atom::Geq(x, y) | Atom::Gt(x, y) | Atom::Eq(x, y) => {
                term(x, &mut out);
                term(y, &mut out);
            }
            Atom::Indep(x, y) | Atom::Confirm { alpha: x, beta: y, .. } => {
                out.insert(x.clone().and(y.clone()));
                out.insert(x.clone());
                out.insert(y.clone());
            }
        }
    }
    out
}

/// Candidate supports: every set of `min(|E ∪ {⊤}|, 2^n)` states, where `E`
/// is the set of events whose probability the formula mentions. Smaller
/// supports are covered since weights inside a candidate may vanish.
pub fn support_candidates(f: &Formula) -> (usize, Vec<Vec<usize>>) {
    let n_states = 1usize << free_letters(f).len();
    let k = events_of(f).len().min(n_states);
    let mut out = Vec::new();
    let mut cur = Vec::new();
    fn rec(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..=n - (k - cur.len()) {
            cur.push(i);
            rec(i + 1, n, k, cur, out);
            cur.pop();
        }
    }
    rec(0, n_states, k, &mut cur, &mut out);
    (k, out)
}

/// Decides `f` by trying each candidate support in turn.
pub fn sat_via_supports(f: &Formula, budget: &PolyBudget) -> Result<PolyVerdict, ReductionError> {
    let letters = free_letters(f);
    let sds = state_descriptions(&letters);
    let (_, cands) = support_candidates(f);
    let mut certs = Vec::new();
    let mut unknown = None;
    for s in cands {
        let off: Vec<Formula> = (0..sds.len())
            .filter(|i| !s.contains(i))
            .map(|i| Formula::eq(Term::p(sds[i].to_bool(&letters)), Term::zero()))
            .collect();
        let g = match Formula::conj(off) {
            Some(z) => f.clone().and(z),
            None => f.clone(),
        };
        match sat_multiplicative(&g, budget)? {
            v @ (PolyVerdict::SatRational(_) | PolyVerdict::SatNumeric(_)) => return Ok(v),
            PolyVerdict::UnsatCertified(c) => certs.extend(c),
            u @ PolyVerdict::Unknown(_) => unknown = Some(u),
        }
    }
    Ok(unknown.unwrap_or(PolyVerdict::UnsatCertified(certs)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::semantics::satisfies;
    use crate::syntax::{parse_formula, render};

    #[test]
    fn cond_flattened() {
        let f = parse_formula("P(A |: C) >= P(B |: C)").unwrap();
        assert_eq!(render(&same_cond_to_comp(&f).unwrap()), "P(A & C) >= P(B & C)");
        let g = parse_formula("P(A |: C) >= P(B |: D)").unwrap();
        assert!(matches!(same_cond_to_comp(&g), Err(ReductionError::WrongFragment { .. })));
    }

    #[test]
    fn inverse_pair() {
        let sys = InverseSystem::parse("x1 * x2 = 1").unwrap();
        let red = etr_inverse_to_ind(&sys).unwrap();
        let text = render(&red.formula);
        assert!(text.contains("indep(D1, D2)"));
        assert_eq!(red.partitions[&16].size, 16);
        assert_eq!(classify(&red.formula).unwrap(), LanguageTag::Ind);
        let m = red.forward(&[qi(1), qi(1)], &Q::zero()).unwrap();
        assert!(satisfies(&m, &red.formula).unwrap());
        assert_eq!(m.prob(&BoolExpr::letter("D1")).unwrap(), q(1, 4));
        assert_eq!(m.prob(&red.partitions[&16].unit()).unwrap(), q(1, 16));
        assert!(red.atom_count() <= red.atom_bound());
    }

    #[test]
    fn squares_and_doubles() {
        let sys = InverseSystem::parse("x1 * x1 = 1\nx1 + x1 = x2").unwrap();
        let red = etr_inverse_to_ind(&sys).unwrap();
        for r in [Q::zero(), q(1, 3), q(5, 7)] {
            let m = red.forward(&[qi(1), qi(2)], &r).unwrap();
            assert!(satisfies(&m, &red.formula).unwrap());
            assert_eq!(red.backward(&m).unwrap(), vec![qi(1), qi(2)]);
        }
    }

    #[test]
    fn parse_errors() {
        assert!(InverseSystem::parse("x1 * x2 = 2").is_err());
        assert!(InverseSystem::parse("y1 + x2 = x3").is_err());
        assert!(InverseSystem::new(2, vec![InvConstraint::Inv(0, 2)]).is_err());
    }

    #[test]
    fn smtlib_shape() {
        let f = parse_formula("P(A) * P(A) = P(T) + P(F) * P(A)").unwrap();
        let s = poly_to_etr(&f).unwrap().to_smtlib();
        assert!(s.starts_with("(set-logic QF_NRA)"));
        assert_eq!(s.matches("declare-fun").count(), 2);
        assert!(s.ends_with("(check-sat)\n"));
    }

    #[test]
    fn support_counts() {
        let f = parse_formula("P(A) >= P(B)").unwrap();
        let (k, c) = support_candidates(&f);
        assert_eq!(k, 3);
        assert_eq!(c.len(), 4);
    }
}
