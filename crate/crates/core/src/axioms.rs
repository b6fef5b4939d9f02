//! Axiom schemas of the base, additive, comparative and polynomial systems,
//! derived lemmas, semantic validity, randomized soundness checks, and the
//! relativization / polarization transforms.

use std::collections::BTreeMap;

use num_traits::Zero;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::expressivity::event_exprs;
use crate::linsolve::{sat_additive, FormulaSat, LinError};
use crate::normalize::{state_descriptions, state_valuations};
use crate::num::{q, Q};
use crate::polysolve::{sat_multiplicative, NumericWitness, PolyBudget, PolyError, PolyVerdict};
use crate::represent::{check_definetti_axioms, enumerate_orders, fincan_violation, Relation};
use crate::semantics::{satisfies, Model, SemError, Valuation};
use crate::syntax::{classify, free_letters, Atom, BoolExpr, Formula, LanguageTag, Term};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Group {
    Base,
    Add,
    Derived,
    Comp,
    Poly,
    /// Deliberately unsound, for exercising the fuzzer.
    Invalid,
}

impl Group {
    pub fn name(self) -> &'static str {
        match self {
            Group::Base => "base",
            Group::Add => "add",
            Group::Derived => "derived",
            Group::Comp => "comp",
            Group::Poly => "poly",
            Group::Invalid => "invalid",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SchemaInfo {
    pub name: String,
    pub group: Group,
    pub bools: usize,
    pub terms: usize,
}

const TABLE: &[(&str, Group, usize, usize)] = &[
    ("Lin", Group::Base, 0, 3),
    ("Bool", Group::Base, 0, 2),
    ("Dist", Group::Base, 2, 0),
    ("NonDeg", Group::Base, 0, 0),
    ("Add", Group::Add, 2, 0),
    ("Assoc", Group::Add, 0, 3),
    ("Comm", Group::Add, 0, 2),
    ("Zero", Group::Add, 0, 1),
    ("2Canc", Group::Add, 0, 6),
    ("Contr", Group::Add, 0, 4),
    ("NonNull", Group::Derived, 0, 1),
    ("Refl", Group::Derived, 0, 1),
    ("Mono", Group::Derived, 0, 2),
    ("1Canc", Group::Derived, 0, 3),
    ("Dupl", Group::Derived, 0, 2),
    ("Comb", Group::Derived, 0, 4),
    ("Sub1", Group::Derived, 0, 5),
    ("Sub2", Group::Derived, 0, 5),
    ("Elim", Group::Derived, 0, 5),
    ("Repl", Group::Derived, 0, 4),
    ("Quasi", Group::Comp, 2, 0),
    ("Ext", Group::Comp, 4, 0),
    ("Assoc*", Group::Poly, 0, 3),
    ("Comm*", Group::Poly, 0, 2),
    ("Zero*", Group::Poly, 0, 1),
    ("One", Group::Poly, 0, 1),
    ("Canc", Group::Poly, 0, 3),
    ("Dist*", Group::Poly, 0, 3),
    ("Sub", Group::Poly, 0, 4),
    ("Geq", Group::Invalid, 2, 0),
];

/// Every schema except the `FinCan:n` family, which `lookup` resolves for any n ≥ 1.
pub fn schemas() -> Vec<SchemaInfo> {
    TABLE
        .iter()
        .map(|(n, g, b, t)| SchemaInfo { name: n.to_string(), group: *g, bools: *b, terms: *t })
        .collect()
}

#[derive(Debug, Error)]
pub enum AxiomError {
    #[error("unknown schema {0}")]
    UnknownSchema(String),
    #[error("{schema} takes {bools} Boolean and {terms} term arguments")]
    Arity { schema: String, bools: usize, terms: usize },
    #[error("Dist needs a tautology {0}")]
    NotTautology(String),
    #[error("letter {0} already occurs in the formula")]
    LetterCollision(String),
    #[error("relativization applies to comparative formulas, got {0}")]
    WrongFragment(&'static str),
    #[error(transparent)]
    Lin(#[from] LinError),
    #[error(transparent)]
    Poly(#[from] PolyError),
    #[error(transparent)]
    Sem(#[from] SemError),
}

pub fn lookup(name: &str) -> Result<SchemaInfo, AxiomError> {
    let canon = name.replace('·', "*");
    if let Some(n) = canon.strip_prefix("FinCan:").or_else(|| canon.strip_prefix("FinCan_")) {
        let n: usize = n.parse().map_err(|_| AxiomError::UnknownSchema(name.into()))?;
        if n == 0 {
            return Err(AxiomError::UnknownSchema(name.into()));
        }
        return Ok(SchemaInfo { name: format!("FinCan:{}", n), group: Group::Comp, bools: 2 * n, terms: 0 });
    }
    schemas().into_iter().find(|s| s.name == canon).ok_or_else(|| AxiomError::UnknownSchema(name.into()))
}

/// Arguments for `instantiate`. `mask` selects which occurrences Repl replaces.
#[derive(Clone, Debug, Default)]
pub struct Args {
    pub bools: Vec<BoolExpr>,
    pub terms: Vec<Term>,
    pub mask: u32,
}

fn is_tautology(b: &BoolExpr) -> bool {
    let mut letters = std::collections::BTreeSet::new();
    b.letters_into(&mut letters);
    let letters: Vec<String> = letters.into_iter().collect();
    state_valuations(letters.len()).into_iter().all(|v| {
        b.eval(&|l: &str| {
            let k = letters.iter().position(|x| x == l).unwrap();
            v >> k & 1 == 1
        })
    })
}

fn iff_b(a: BoolExpr, b: BoolExpr) -> BoolExpr {
    a.clone().and(b.clone()).or(a.not().and(b.not()))
}

fn geq(a: &Term, b: &Term) -> Formula {
    Formula::geq(a.clone(), b.clone())
}
fn eqf(a: &Term, b: &Term) -> Formula {
    Formula::eq(a.clone(), b.clone())
}
fn gtf(a: &Term, b: &Term) -> Formula {
    Formula::gt(a.clone(), b.clone())
}
fn pl(a: &Term, b: &Term) -> Term {
    a.clone().plus(b.clone())
}
fn tm(a: &Term, b: &Term) -> Term {
    a.clone().times(b.clone())
}

/// Replaces the occurrences of `a` selected by `mask` (in traversal order) with `b`.
pub fn replace_some(f: &Formula, a: &Term, b: &Term, mask: u32) -> Formula {
    fn term(t: &Term, a: &Term, b: &Term, mask: u32, k: &mut u32) -> Term {
        if t == a {
            let hit = mask >> *k & 1 == 1;
            *k += 1;
            return if hit { b.clone() } else { t.clone() };
        }
        match t {
            Term::Sum(x, y) => term(x, a, b, mask, k).plus(term(y, a, b, mask, k)),
            Term::Prod(x, y) => term(x, a, b, mask, k).times(term(y, a, b, mask, k)),
            other => other.clone(),
        }
    }
    let mut k = 0;
    f.map_atoms(&mut |at| {
        Formula::Atom(match at {
            Atom::Geq(x, y) => Atom::Geq(term(x, a, b, mask, &mut k), term(y, a, b, mask, &mut k)),
            Atom::Gt(x, y) => Atom::Gt(term(x, a, b, mask, &mut k), term(y, a, b, mask, &mut k)),
            Atom::Eq(x, y) => Atom::Eq(term(x, a, b, mask, &mut k), term(y, a, b, mask, &mut k)),
            other => other.clone(),
        })
    })
}

/// `(α_1..α_n) ≡_0 (β_1..β_n)`: the disjunction of the balanced state
/// descriptions over the 2n formulas has probability one.
pub fn balanced_premise(alphas: &[BoolExpr], betas: &[BoolExpr]) -> Formula {
    let n = alphas.len();
    let mut disjuncts = Vec::new();
    for s in 0u64..(1 << (2 * n)) {
        let ca = (0..n).filter(|i| s >> i & 1 == 1).count();
        let cb = (0..n).filter(|i| s >> (n + i) & 1 == 1).count();
        if ca != cb {
            continue;
        }
        let lits = alphas.iter().chain(betas).enumerate().map(|(i, f)| if s >> i & 1 == 1 { f.clone() } else { f.clone().not() });
        disjuncts.push(BoolExpr::conj(lits));
    }
    Formula::geq(Term::p(BoolExpr::disj(disjuncts)), Term::one())
}

pub fn instantiate(name: &str, args: &Args) -> Result<Formula, AxiomError> {
    let info = lookup(name)?;
    if args.bools.len() != info.bools || args.terms.len() != info.terms {
        return Err(AxiomError::Arity { schema: info.name, bools: info.bools, terms: info.terms });
    }
    let b = &args.bools;
    let t = &args.terms;
    let p = |x: &BoolExpr| Term::p(x.clone());
    let zero = Term::zero();
    let one = Term::one();
    if let Some(n) = info.name.strip_prefix("FinCan:") {
        let n: usize = n.parse().unwrap();
        let (al, be) = b.split_at(n);
        let mut prem = vec![balanced_premise(al, be)];
        for i in 0..n - 1 {
            prem.push(geq(&p(&al[i]), &p(&be[i])));
        }
        return Ok(Formula::conj(prem).unwrap().implies(geq(&p(&be[n - 1]), &p(&al[n - 1]))));
    }
    let f = match info.name.as_str() {
        "Lin" => {
            let trans = geq(&t[0], &t[1]).and(geq(&t[1], &t[2])).implies(geq(&t[0], &t[2]));
            trans.and(geq(&t[0], &t[1]).or(geq(&t[1], &t[0])))
        }
        "Bool" => geq(&t[0], &t[1]).or(geq(&t[0], &t[1]).not()),
        "Dist" => {
            let imp = b[1].clone().not().or(b[0].clone());
            if !is_tautology(&imp) {
                return Err(AxiomError::NotTautology(crate::syntax::render_bool(&imp)));
            }
            geq(&p(&b[0]), &p(&b[1]))
        }
        "NonDeg" => geq(&zero, &one).not(),
        "Add" => eqf(&p(&b[0]), &pl(&p(&b[0].clone().and(b[1].clone())), &p(&b[0].clone().and(b[1].clone().not())))),
        "Assoc" => eqf(&pl(&t[0], &pl(&t[1], &t[2])), &pl(&pl(&t[0], &t[1]), &t[2])),
        "Comm" => eqf(&pl(&t[0], &t[1]), &pl(&t[1], &t[0])),
        "Zero" => eqf(&pl(&t[0], &zero), &t[0]),
        "2Canc" => {
            let (a, bb, c, d, e, f) = (&t[0], &t[1], &t[2], &t[3], &t[4], &t[5]);
            geq(&pl(a, e), &pl(c, f)).and(geq(&pl(bb, f), &pl(d, e))).implies(geq(&pl(a, bb), &pl(c, d)))
        }
        "Contr" => {
            let (a, bb, c, d) = (&t[0], &t[1], &t[2], &t[3]);
            geq(&pl(a, bb), &pl(c, d)).and(geq(d, bb)).implies(geq(a, c))
        }
        "NonNull" => geq(&t[0], &zero),
        "Refl" => geq(&t[0], &t[0]),
        "Mono" => geq(&pl(&t[0], &t[1]), &t[0]),
        "1Canc" => geq(&pl(&t[0], &t[2]), &pl(&t[1], &t[2])).iff(geq(&t[0], &t[1])),
        "Dupl" => geq(&pl(&t[0], &t[0]), &pl(&t[1], &t[1])).iff(geq(&t[0], &t[1])),
        "Comb" => geq(&t[0], &t[1]).and(geq(&t[2], &t[3])).implies(geq(&pl(&t[0], &t[2]), &pl(&t[1], &t[3]))),
        "Sub1" => {
            let (a, bb, c, d, e) = (&t[0], &t[1], &t[2], &t[3], &t[4]);
            eqf(&pl(e, c), a).implies(geq(&pl(a, d), &pl(bb, c)).iff(geq(&pl(e, d), bb)))
        }
        "Sub2" => {
            let (a, bb, c, d, e) = (&t[0], &t[1], &t[2], &t[3], &t[4]);
            eqf(&pl(e, c), a).implies(geq(&pl(bb, c), &pl(a, d)).iff(geq(bb, &pl(e, d))))
        }
        "Elim" => {
            let (a, bb, c, d, e) = (&t[0], &t[1], &t[2], &t[3], &t[4]);
            gtf(&pl(e, a), bb).and(gtf(c, &pl(e, d))).implies(gtf(&pl(a, c), &pl(bb, d)))
        }
        "Repl" => {
            // φ = (a + c ≿ d) ∧ (d + a ≿ c), with some occurrences of a replaced by b
            let (a, bb, c, d) = (&t[0], &t[1], &t[2], &t[3]);
            let phi = geq(&pl(a, c), d).and(geq(&pl(d, a), c));
            eqf(a, bb).implies(phi.clone().iff(replace_some(&phi, a, bb, args.mask)))
        }
        "Quasi" => {
            let (a, bb) = (&b[0], &b[1]);
            geq(&p(a), &p(bb)).iff(geq(&p(&a.clone().and(bb.clone().not())), &p(&bb.clone().and(a.clone().not()))))
        }
        "Ext" => {
            let prem = geq(&p(&iff_b(b[0].clone(), b[1].clone())), &one).and(geq(&p(&iff_b(b[2].clone(), b[3].clone())), &one));
            prem.implies(geq(&p(&b[0]), &p(&b[2])).implies(geq(&p(&b[1]), &p(&b[3]))))
        }
        "Assoc*" => eqf(&tm(&t[0], &tm(&t[1], &t[2])), &tm(&tm(&t[0], &t[1]), &t[2])),
        "Comm*" => eqf(&tm(&t[0], &t[1]), &tm(&t[1], &t[0])),
        "Zero*" => eqf(&tm(&t[0], &zero), &zero),
        "One" => eqf(&tm(&t[0], &one), &t[0]),
        "Canc" => gtf(&t[2], &zero).implies(geq(&tm(&t[0], &t[2]), &tm(&t[1], &t[2])).iff(geq(&t[0], &t[1]))),
        "Dist*" => eqf(&tm(&t[0], &pl(&t[1], &t[2])), &pl(&tm(&t[0], &t[1]), &tm(&t[0], &t[2]))),
        "Sub" => {
            let (a, bb, c, d) = (&t[0], &t[1], &t[2], &t[3]);
            geq(a, bb).and(geq(c, d)).implies(geq(&pl(&tm(a, c), &tm(bb, d)), &pl(&tm(a, d), &tm(bb, c))))
        }
        "Geq" => geq(&p(&b[0]), &p(&b[1])),
        _ => unreachable!(),
    };
    Ok(f)
}

// ---------------------------------------------------------------- validity

#[derive(Clone, Debug)]
pub enum Validity {
    Valid,
    Countermodel(Model),
    NumericCountermodel(NumericWitness),
    Unknown(String),
}

impl Validity {
    pub fn is_valid(&self) -> bool {
        matches!(self, Validity::Valid)
    }
}

/// `f` is valid iff `¬f` is unsatisfiable; additive negations go through
/// elimination, everything else through the polynomial pipeline.
pub fn validity(f: &Formula, budget: &PolyBudget) -> Result<Validity, AxiomError> {
    let neg = f.clone().not();
    let tag = classify(&neg).map_err(LinError::from)?;
    if tag.is_additive() || tag == LanguageTag::SameCond {
        return Ok(match sat_additive(&neg)? {
            FormulaSat::Sat(m) => Validity::Countermodel(m),
            FormulaSat::Unsat(_) => Validity::Valid,
        });
    }
    Ok(match sat_multiplicative(&neg, budget)? {
        PolyVerdict::SatRational(m) => Validity::Countermodel(m),
        PolyVerdict::SatNumeric(w) => Validity::NumericCountermodel(w),
        PolyVerdict::UnsatCertified(_) => Validity::Valid,
        PolyVerdict::Unknown(r) => Validity::Unknown(r.notes.join("; ")),
    })
}

// ---------------------------------------------------------------- soundness testing

/// All probability models over `letters` whose weights share a denominator
/// `d ≤ max_den` (deduplicated after reduction).
pub fn small_models(letters: &[&str], max_den: i64) -> Vec<Model> {
    let k = 1usize << letters.len();
    let mut seen = std::collections::BTreeSet::new();
    let mut out = Vec::new();
    for d in 1..=max_den {
        let mut parts = vec![0i64; k];
        fn rec(i: usize, left: i64, parts: &mut Vec<i64>, d: i64, out: &mut Vec<Vec<Q>>) {
            if i + 1 == parts.len() {
                parts[i] = left;
                out.push(parts.iter().map(|p| q(*p, d)).collect());
                return;
            }
            for v in 0..=left {
                parts[i] = v;
                rec(i + 1, left - v, parts, d, out);
            }
        }
        let mut ws = Vec::new();
        rec(0, d, &mut parts, d, &mut ws);
        for w in ws {
            if seen.insert(w.clone()) {
                out.push(Model::from_state_weights(letters, &w).unwrap());
            }
        }
    }
    out
}

pub fn random_model(letters: &[&str], max_weight: i64, rng: &mut impl Rng) -> Model {
    let k = 1usize << letters.len();
    loop {
        let raw: Vec<i64> = (0..k).map(|_| if rng.gen_bool(0.2) { 0 } else { rng.gen_range(0..=max_weight) }).collect();
        let s: i64 = raw.iter().sum();
        if s > 0 {
            let w: Vec<Q> = raw.iter().map(|x| q(*x, s)).collect();
            return Model::from_state_weights(letters, &w).unwrap();
        }
    }
}

fn random_event(events: &[BoolExpr], rng: &mut impl Rng) -> BoolExpr {
    events[rng.gen_range(0..events.len())].clone()
}

fn random_term(group: Group, events: &[BoolExpr], rng: &mut impl Rng) -> Term {
    let basic = |rng: &mut dyn rand::RngCore| Term::p(events[rng.gen_range(0..events.len())].clone());
    match group {
        Group::Add | Group::Derived => {
            let mut t = basic(rng);
            for _ in 0..rng.gen_range(0..3) {
                t = t.plus(basic(rng));
            }
            t
        }
        Group::Poly => {
            let mut t = basic(rng);
            for _ in 0..rng.gen_range(0..3) {
                t = if rng.gen_bool(0.5) { t.plus(basic(rng)) } else { t.times(basic(rng)) };
            }
            t
        }
        _ => basic(rng),
    }
}

/// Random arguments for `info` over the given events.
pub fn random_args(info: &SchemaInfo, events: &[BoolExpr], rng: &mut impl Rng) -> Args {
    let mut bools: Vec<BoolExpr> = (0..info.bools).map(|_| random_event(events, rng)).collect();
    if info.name == "Dist" {
        // β := α ∧ γ keeps β → α tautological
        bools[1] = bools[0].clone().and(bools[1].clone());
    }
    if info.name == "Ext" && rng.gen_bool(0.5) {
        // make the premise satisfiable more often
        bools[1] = bools[0].clone();
        bools[3] = bools[2].clone();
    }
    if info.name.starts_with("FinCan:") && rng.gen_bool(0.5) {
        // permute the α list to get balanced sequences
        let n = info.bools / 2;
        let mut perm: Vec<usize> = (0..n).collect();
        for i in (1..n).rev() {
            perm.swap(i, rng.gen_range(0..=i));
        }
        for i in 0..n {
            bools[n + i] = bools[perm[i]].clone();
        }
    }
    let mut terms: Vec<Term> = (0..info.terms).map(|_| random_term(info.group, events, rng)).collect();
    if (info.name == "Sub1" || info.name == "Sub2") && rng.gen_bool(0.5) {
        // a := e + c makes the premise hold
        terms[0] = terms[4].clone().plus(terms[2].clone());
    }
    if info.name == "Repl" && rng.gen_bool(0.5) {
        terms[1] = terms[0].clone();
    }
    Args { bools, terms, mask: rng.gen() }
}

/// Random instances against random models; returns the first pair where
/// the instance is false.
pub fn soundness_fuzz(name: &str, trials: usize, seed: u64) -> Result<Option<(Formula, Model)>, AxiomError> {
    let info = lookup(name)?;
    let letters = ["A", "B"];
    let owned: Vec<String> = letters.iter().map(|s| s.to_string()).collect();
    let events = event_exprs(&owned);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..trials {
        let args = random_args(&info, &events, &mut rng);
        let f = instantiate(&info.name, &args)?;
        let m = random_model(&letters, 6, &mut rng);
        if !satisfies(&m, &f)? {
            return Ok(Some((f, m)));
        }
    }
    Ok(None)
}

/// Checks every instance against every model; returns the first failure.
pub fn check_instances(instances: &[Formula], models: &[Model]) -> Result<Option<(Formula, Model)>, AxiomError> {
    for f in instances {
        for m in models {
            if !satisfies(m, f)? {
                return Ok(Some((f.clone(), m.clone())));
            }
        }
    }
    Ok(None)
}

/// Instances of `name` over the 16 events of two letters: all of them when
/// there are at most `limit`, otherwise `limit` seeded random ones.
pub fn instance_pool(name: &str, limit: usize, seed: u64) -> Result<Vec<Formula>, AxiomError> {
    let info = lookup(name)?;
    let owned = vec!["A".to_string(), "B".to_string()];
    let events = event_exprs(&owned);
    let total = (events.len() as f64).powi(info.bools as i32);
    if info.terms == 0 && total <= limit as f64 {
        let mut out = Vec::new();
        for idx in 0..total as usize {
            let mut k = idx;
            let bools: Vec<BoolExpr> = (0..info.bools)
                .map(|_| {
                    let e = events[k % events.len()].clone();
                    k /= events.len();
                    e
                })
                .collect();
            match instantiate(&info.name, &Args { bools, terms: vec![], mask: 0 }) {
                Ok(f) => out.push(f),
                Err(AxiomError::NotTautology(_)) => {}
                Err(e) => return Err(e),
            }
        }
        return Ok(out);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..limit).map(|_| instantiate(&info.name, &random_args(&info, &events, &mut rng))).collect()
}

// ---------------------------------------------------------------- relativization and polarization

/// `φ^A` and `π = ⋀_δ (δ∧A) ≈ (δ∧¬A)` over the state descriptions of `f`.
pub fn relativize(f: &Formula, fresh: &str) -> Result<(Formula, Formula), AxiomError> {
    let tag = classify(f).map_err(LinError::from)?;
    if tag != LanguageTag::Comp {
        return Err(AxiomError::WrongFragment(tag.name()));
    }
    let letters = free_letters(f);
    if letters.iter().any(|l| l == fresh) {
        return Err(AxiomError::LetterCollision(fresh.into()));
    }
    let a = BoolExpr::letter(fresh);
    let rel = |t: &Term| match t {
        Term::Basic(b) => Term::p(b.clone().and(a.clone())),
        other => other.clone(),
    };
    let phi_a = f.map_atoms(&mut |at| {
        Formula::Atom(match at {
            Atom::Geq(x, y) => Atom::Geq(rel(x), rel(y)),
            Atom::Gt(x, y) => Atom::Gt(rel(x), rel(y)),
            Atom::Eq(x, y) => Atom::Eq(rel(x), rel(y)),
            other => other.clone(),
        })
    });
    let pis = state_descriptions(&letters).into_iter().map(|s| {
        let d = s.to_bool(&letters);
        Formula::eq(Term::p(d.clone().and(a.clone())), Term::p(d.and(a.clone().not())))
    });
    Ok((phi_a, Formula::conj(pis).unwrap()))
}

/// Adds letter `fresh`: states satisfying `alpha` are split evenly between
/// `fresh` and `¬fresh`, the others go wholly to `fresh`.
pub fn polarize_model(m: &Model, alpha: &BoolExpr, fresh: &str) -> Result<Model, AxiomError> {
    if m.letters.iter().any(|l| l == fresh) {
        return Err(AxiomError::LetterCollision(fresh.into()));
    }
    let c = m.compile(alpha)?;
    let n = m.letters.len();
    let bit: Valuation = 1 << n;
    let mut weights: BTreeMap<Valuation, Q> = BTreeMap::new();
    for (v, w) in &m.weights {
        if c.eval(*v) {
            let half = w / Q::from_integer(2.into());
            *weights.entry(*v).or_insert_with(Q::zero) += &half;
            *weights.entry(*v | bit).or_insert_with(Q::zero) += half;
        } else {
            *weights.entry(*v | bit).or_insert_with(Q::zero) += w;
        }
    }
    let mut letters = m.letters.clone();
    letters.push(fresh.to_string());
    Ok(Model::new(m.mode, letters, weights)?)
}

/// Compares Quasi with bounded FinCan over every total order on the events of
/// `atoms` atoms satisfying NonTriv and NonDeg. Returns the number of orders
/// examined and the rank vectors on which the two disagree.
pub fn quasi_vs_fincan(atoms: usize, n: usize) -> (usize, Vec<Vec<i64>>) {
    let mut mismatches = Vec::new();
    let count = enumerate_orders(atoms, |rank| {
        let r = Relation::from_fn(atoms, &|a, b| rank[a as usize].cmp(&rank[b as usize]));
        let quasi = check_definetti_axioms(&r).iter().find(|c| c.name == "Quasi").unwrap().passed();
        let fc = fincan_violation(&r, n).is_none();
        if quasi != fc {
            mismatches.push(rank.to_vec());
        }
    });
    (count, mismatches)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::{parse_bool, render};

    fn b(s: &str) -> BoolExpr {
        parse_bool(s).unwrap()
    }

    #[test]
    fn quasi_shape() {
        let f = instantiate("Quasi", &Args { bools: vec![b("A"), b("B")], ..Default::default() }).unwrap();
        assert_eq!(render(&f), "(P(A) >= P(B) => P(A & ~B) >= P(B & ~A)) && (P(A & ~B) >= P(B & ~A) => P(A) >= P(B))");
    }

    #[test]
    fn dist_requires_tautology() {
        let bad = instantiate("Dist", &Args { bools: vec![b("A"), b("B")], ..Default::default() });
        assert!(matches!(bad, Err(AxiomError::NotTautology(_))));
        assert!(instantiate("Dist", &Args { bools: vec![b("A"), b("A & B")], ..Default::default() }).is_ok());
    }

    #[test]
    fn arity_checked() {
        assert!(matches!(instantiate("Comm", &Args::default()), Err(AxiomError::Arity { .. })));
        assert!(matches!(lookup("Nope"), Err(AxiomError::UnknownSchema(_))));
    }

    #[test]
    fn fincan2_balanced_count() {
        let f = balanced_premise(&[b("A"), b("B")], &[b("B"), b("A")]);
        // Σ_k C(2,k)^2 = 6 balanced state descriptions over four formulas
        let Formula::Atom(Atom::Geq(Term::Basic(d), _)) = f else { panic!() };
        assert_eq!(crate::syntax::render_bool(&d).matches(" | ").count(), 5);
    }

    #[test]
    fn invalid_schema_caught() {
        assert!(soundness_fuzz("Geq", 200, 1).unwrap().is_some());
    }

    #[test]
    fn polarize_one_letter() {
        let m = Model::from_state_weights(&["A"], &[q(1, 2), q(1, 2)]).unwrap();
        let p = polarize_model(&m, &BoolExpr::Top, "C").unwrap();
        let half = Formula::eq(Term::p(b("C")), Term::p(b("~C")));
        assert!(satisfies(&p, &half).unwrap());
        assert_eq!(p.letters.len(), 2);
    }

    #[test]
    fn relativize_example() {
        let f = crate::syntax::parse_formula("P(A) >= P(B)").unwrap();
        let (phi, pi) = relativize(&f, "C").unwrap();
        assert_eq!(render(&phi), "P(A & C) >= P(B & C)");
        assert_eq!(pi.atoms().len(), 4);
        assert!(matches!(relativize(&f, "A"), Err(AxiomError::LetterCollision(_))));
    }
}
