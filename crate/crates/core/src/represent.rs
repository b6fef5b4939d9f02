//! Representability of comparative and quadratic orders on finite sample
//! spaces: de Finetti axioms, Scott-style linear feasibility with balanced
//! certificates, bounded cancellation audits, Domotor's axioms and the
//! two-point quadratic classification.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};
use thiserror::Error;

use crate::linsolve::{lin_sat, trace_multipliers, SatResult};
use crate::normalize::{LinRow, LinSystem, Rel};
use crate::num::{fmt_q, lcm_denoms, parse_q, qi, simplest_between, Q};

/// A subset of the sample space as a bitmask over atoms.
pub type Event = u32;

pub fn event_name(e: Event, atoms: usize) -> String {
    let items: Vec<String> = (0..atoms).filter(|i| e >> i & 1 == 1).map(|i| i.to_string()).collect();
    format!("{{{}}}", items.join(","))
}

pub fn parse_event(s: &str, atoms: usize) -> Result<Event, OrderError> {
    let t = s.trim();
    let inner = t
        .strip_prefix('{')
        .and_then(|r| r.strip_suffix('}'))
        .ok_or_else(|| OrderError::Format(format!("bad event {}", s)))?;
    let mut e = 0;
    for part in inner.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        let i: usize = part.parse().map_err(|_| OrderError::Format(format!("bad atom {}", part)))?;
        if i >= atoms {
            return Err(OrderError::Format(format!("atom {} out of range", i)));
        }
        e |= 1 << i;
    }
    Ok(e)
}

fn indicator(e: Event, atoms: usize) -> Vec<i64> {
    (0..atoms).map(|i| (e >> i & 1) as i64).collect()
}

fn mass(w: &[Q], e: Event) -> Q {
    w.iter().enumerate().filter(|(i, _)| e >> i & 1 == 1).map(|(_, v)| v.clone()).sum()
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum OrderError {
    #[error("order file: {0}")]
    Format(String),
    #[error("inconsistent order: {0} strictly above {1} and conversely")]
    Inconsistent(String, String),
    #[error("order is not total: {0} and {1} are incomparable")]
    NotTotal(String, String),
    #[error("expected {expected} atoms, got {got}")]
    WrongSize { expected: usize, got: usize },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Cmp {
    Ge,
    Gt,
    Eq,
}

impl Cmp {
    pub fn symbol(self) -> &'static str {
        match self {
            Cmp::Ge => ">=",
            Cmp::Gt => ">",
            Cmp::Eq => "=",
        }
    }
}

fn parse_cmp(s: &str) -> Result<(Cmp, bool), OrderError> {
    Ok(match s.trim() {
        ">=" => (Cmp::Ge, false),
        ">" => (Cmp::Gt, false),
        "=" | "~" => (Cmp::Eq, false),
        "<=" => (Cmp::Ge, true),
        "<" => (Cmp::Gt, true),
        o => return Err(OrderError::Format(format!("unknown relation {}", o))),
    })
}

// ---------------------------------------------------------------- comparative orders

/// A (possibly partial) comparative order given by explicit comparisons.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CompOrder {
    pub atoms: usize,
    pub comparisons: Vec<(Event, Event, Cmp)>,
}

/// A binary relation on events, stored as full matrices.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Relation {
    pub atoms: usize,
    ge: Vec<Vec<bool>>,
    gt: Vec<Vec<bool>>,
}

impl Relation {
    pub fn size(&self) -> usize {
        1 << self.atoms
    }
    pub fn ge(&self, a: Event, b: Event) -> bool {
        self.ge[a as usize][b as usize]
    }
    pub fn gt(&self, a: Event, b: Event) -> bool {
        self.gt[a as usize][b as usize]
    }
    /// Relation given directly by a comparison function (no closure taken).
    pub fn from_fn(atoms: usize, f: &dyn Fn(Event, Event) -> Ordering) -> Relation {
        let n = 1usize << atoms;
        let mut ge = vec![vec![false; n]; n];
        let mut gt = vec![vec![false; n]; n];
        for a in 0..n {
            for b in 0..n {
                let o = f(a as Event, b as Event);
                ge[a][b] = o != Ordering::Less;
                gt[a][b] = o == Ordering::Greater;
            }
        }
        Relation { atoms, ge, gt }
    }
    pub fn from_measure(w: &[Q]) -> Relation {
        Relation::from_fn(w.len(), &|a, b| mass(w, a).cmp(&mass(w, b)))
    }
    /// Sets `a ≿ b` (and strictness) directly, for corruption experiments.
    pub fn set(&mut self, a: Event, b: Event, ge: bool, gt: bool) {
        self.ge[a as usize][b as usize] = ge;
        self.gt[a as usize][b as usize] = gt;
    }
    pub fn is_total(&self) -> bool {
        let n = self.size();
        (0..n).all(|a| (0..n).all(|b| self.ge[a][b] || self.ge[b][a]))
    }
    /// Indifference classes from most to least likely; requires a total preorder.
    pub fn classes(&self) -> Vec<Vec<Event>> {
        let n = self.size() as Event;
        let mut evs: Vec<Event> = (0..n).collect();
        evs.sort_by(|a, b| {
            if self.gt(*a, *b) {
                Ordering::Less
            } else if self.gt(*b, *a) {
                Ordering::Greater
            } else {
                Ordering::Equal
            }
        });
        let mut out: Vec<Vec<Event>> = Vec::new();
        for e in evs {
            match out.last_mut() {
                Some(c) if self.ge(c[0], e) && self.ge(e, c[0]) => c.push(e),
                _ => out.push(vec![e]),
            }
        }
        out
    }
    pub fn agrees_with_measure(&self, w: &[Q]) -> bool {
        let n = self.size() as Event;
        (0..n).all(|a| (0..n).all(|b| self.ge(a, b) == (mass(w, a) >= mass(w, b))))
    }
}

impl CompOrder {
    /// Transitive closure; strict if some step is strict.
    pub fn closure(&self) -> Result<Relation, OrderError> {
        let n = 1usize << self.atoms;
        // 0 none, 1 weak, 2 strict
        let mut r = vec![vec![0u8; n]; n];
        for (i, row) in r.iter_mut().enumerate() {
            row[i] = 1;
        }
        for (a, b, c) in &self.comparisons {
            let (a, b) = (*a as usize, *b as usize);
            match c {
                Cmp::Ge => r[a][b] = r[a][b].max(1),
                Cmp::Gt => r[a][b] = 2,
                Cmp::Eq => {
                    r[a][b] = r[a][b].max(1);
                    r[b][a] = r[b][a].max(1);
                }
            }
        }
        for k in 0..n {
            for i in 0..n {
                if r[i][k] == 0 {
                    continue;
                }
                for j in 0..n {
                    if r[k][j] > 0 {
                        let v = r[i][k].max(r[k][j]);
                        if v > r[i][j] {
                            r[i][j] = v;
                        }
                    }
                }
            }
        }
        for a in 0..n {
            for b in 0..n {
                if r[a][b] == 2 && r[b][a] > 0 {
                    return Err(OrderError::Inconsistent(event_name(a as Event, self.atoms), event_name(b as Event, self.atoms)));
                }
            }
        }
        Ok(Relation {
            atoms: self.atoms,
            ge: r.iter().map(|row| row.iter().map(|v| *v > 0).collect()).collect(),
            gt: r.iter().map(|row| row.iter().map(|v| *v == 2).collect()).collect(),
        })
    }

    /// Chain of consecutive indifference classes of a total relation.
    pub fn from_relation(rel: &Relation) -> CompOrder {
        let classes = rel.classes();
        let mut comparisons = Vec::new();
        for (ci, c) in classes.iter().enumerate() {
            for e in &c[1..] {
                comparisons.push((c[0], *e, Cmp::Eq));
            }
            if let Some(next) = classes.get(ci + 1) {
                comparisons.push((c[0], next[0], Cmp::Gt));
            }
        }
        CompOrder { atoms: rel.atoms, comparisons }
    }

    pub fn from_measure(w: &[Q]) -> CompOrder {
        CompOrder::from_relation(&Relation::from_measure(w))
    }

    pub fn to_json(&self) -> Value {
        let comps: Vec<Value> = self
            .comparisons
            .iter()
            .map(|(a, b, c)| json!([event_name(*a, self.atoms), event_name(*b, self.atoms), c.symbol()]))
            .collect();
        json!({"atoms": self.atoms, "comparisons": comps})
    }

    pub fn from_json(v: &Value) -> Result<CompOrder, OrderError> {
        let atoms = v["atoms"].as_u64().ok_or_else(|| OrderError::Format("missing atoms".into()))? as usize;
        if atoms > 12 {
            return Err(OrderError::Format("at most 12 atoms supported".into()));
        }
        let mut comparisons = Vec::new();
        for c in v["comparisons"].as_array().ok_or_else(|| OrderError::Format("missing comparisons".into()))? {
            let arr = c.as_array().filter(|a| a.len() == 3).ok_or_else(|| OrderError::Format("comparison must be [A, B, rel]".into()))?;
            let s = |i: usize| arr[i].as_str().ok_or_else(|| OrderError::Format("expected strings".into()));
            let a = parse_event(s(0)?, atoms)?;
            let b = parse_event(s(1)?, atoms)?;
            let (cmp, flip) = parse_cmp(s(2)?)?;
            comparisons.push(if flip { (b, a, cmp) } else { (a, b, cmp) });
        }
        Ok(CompOrder { atoms, comparisons })
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AxiomCheck {
    pub name: &'static str,
    /// Events of a failing instance.
    pub witness: Option<Vec<Event>>,
}

impl AxiomCheck {
    pub fn passed(&self) -> bool {
        self.witness.is_none()
    }
}

/// Tot, Trans, NonDeg, NonTriv and Quasi over all applicable tuples.
pub fn check_definetti_axioms(r: &Relation) -> Vec<AxiomCheck> {
    let n = r.size() as Event;
    let full = n - 1;
    let mut tot = None;
    let mut trans = None;
    let mut quasi = None;
    let mut nontriv = None;
    'a: for a in 0..n {
        if nontriv.is_none() && !r.ge(a, 0) {
            nontriv = Some(vec![a]);
        }
        for b in 0..n {
            if tot.is_none() && !r.ge(a, b) && !r.ge(b, a) {
                tot = Some(vec![a, b]);
            }
            if quasi.is_none() && r.ge(a, b) != r.ge(a & !b, b & !a) {
                quasi = Some(vec![a, b]);
            }
            if trans.is_none() && r.ge(a, b) {
                for c in 0..n {
                    if r.ge(b, c) && !r.ge(a, c) {
                        trans = Some(vec![a, b, c]);
                        continue 'a;
                    }
                }
            }
        }
    }
    let nondeg = if r.gt(full, 0) { None } else { Some(vec![full, 0]) };
    vec![
        AxiomCheck { name: "Tot", witness: tot },
        AxiomCheck { name: "Trans", witness: trans },
        AxiomCheck { name: "NonDeg", witness: nondeg },
        AxiomCheck { name: "NonTriv", witness: nontriv },
        AxiomCheck { name: "Quasi", witness: quasi },
    ]
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CertPair {
    pub a: Event,
    pub b: Event,
    pub mult: u64,
    pub strict: bool,
}

/// Sequences `(A_i)`, `(B_i)` (with multiplicities) covering every atom equally
/// often, with `A_i ≿ B_i` throughout and at least one strict comparison.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BalancedCertificate {
    pub atoms: usize,
    pub pairs: Vec<CertPair>,
}

impl BalancedCertificate {
    pub fn is_balanced(&self) -> bool {
        let mut s = vec![0i64; self.atoms];
        for p in &self.pairs {
            for i in 0..self.atoms {
                s[i] += p.mult as i64 * ((p.a >> i & 1) as i64 - (p.b >> i & 1) as i64);
            }
        }
        s.iter().all(|v| *v == 0)
    }

    /// Balance plus every comparison held by `r`, with one strict.
    pub fn check(&self, r: &Relation) -> bool {
        self.is_balanced()
            && self.pairs.iter().all(|p| p.mult > 0 && r.ge(p.a, p.b) && (!p.strict || r.gt(p.a, p.b)))
            && self.pairs.iter().any(|p| p.strict)
    }

    pub fn distinct_pairs(&self) -> usize {
        self.pairs.len()
    }
}

impl fmt::Display for BalancedCertificate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for p in &self.pairs {
            writeln!(
                f,
                "{} x  {} {} {}",
                p.mult,
                event_name(p.a, self.atoms),
                if p.strict { ">" } else { ">=" },
                event_name(p.b, self.atoms)
            )?;
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum NonRepr {
    /// NonDeg or NonTriv fails; the witness names the offending events.
    Axiom { axiom: &'static str, witness: Vec<Event> },
    Balanced(BalancedCertificate),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Representability {
    /// Normalised weights on the atoms.
    Yes(Vec<Q>),
    No(NonRepr),
}

/// Scott-style feasibility: one row `w·(1_A − 1_B) ≥ 0` or `> 0` per
/// comparison. Total orders are posed through their class chain; partial
/// orders additionally get `w_i ≥ 0` and `Σ w > 0`.
pub fn representable(o: &CompOrder) -> Result<Representability, OrderError> {
    let rel = o.closure()?;
    let total = rel.is_total();
    let full: Event = ((1u64 << o.atoms) - 1) as Event;
    if total {
        for ax in check_definetti_axioms(&rel) {
            if (ax.name == "NonDeg" || ax.name == "NonTriv") && !ax.passed() {
                return Ok(Representability::No(NonRepr::Axiom { axiom: ax.name, witness: ax.witness.unwrap() }));
            }
        }
    }
    let base = if total { CompOrder::from_relation(&rel) } else { o.clone() };
    let mut rows_src: Vec<(Event, Event, Cmp)> = base.comparisons.clone();
    if !total {
        for i in 0..o.atoms {
            rows_src.push((1 << i, 0, Cmp::Ge));
        }
        rows_src.push((full, 0, Cmp::Gt));
    }
    let vars: Vec<String> = (0..o.atoms).map(|i| format!("w{}", i)).collect();
    let rows: Vec<LinRow> = rows_src
        .iter()
        .map(|(a, b, c)| {
            let coeffs: BTreeMap<usize, Q> = (0..o.atoms).map(|i| (i, qi((a >> i & 1) as i64 - (b >> i & 1) as i64))).collect();
            let rel = match c {
                Cmp::Ge => Rel::Ge,
                Cmp::Gt => Rel::Gt,
                Cmp::Eq => Rel::Eq,
            };
            LinRow::new(coeffs, rel, Q::zero())
        })
        .collect();
    let sys = LinSystem { vars, rows };
    match lin_sat(&sys) {
        SatResult::Sat(w) => {
            let s: Q = w.iter().sum();
            let w: Vec<Q> = w.iter().map(|v| v / &s).collect();
            if total {
                assert!(rel.agrees_with_measure(&w), "measure does not reproduce the order");
            }
            Ok(Representability::Yes(w))
        }
        SatResult::Unsat(t) => {
            let lam = trace_multipliers(&t);
            let l = Q::from_integer(lcm_denoms(lam.values()));
            let mut pairs: Vec<CertPair> = Vec::new();
            for (i, k) in lam {
                let k = k * &l;
                let (a, b, c) = rows_src[i];
                let (a, b) = if k.is_negative() { (b, a) } else { (a, b) };
                let mult = k.abs().to_integer().to_u64().expect("multiplicity overflow");
                if mult == 0 {
                    continue;
                }
                pairs.push(CertPair { a, b, mult, strict: c == Cmp::Gt });
            }
            let cert = BalancedCertificate { atoms: o.atoms, pairs };
            debug_assert!(cert.is_balanced());
            Ok(Representability::No(NonRepr::Balanced(cert)))
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SkResult {
    HoldsUpTo { k: usize, budget: u64 },
    Violated(BalancedCertificate),
}

/// Searches all-strict balanced families with at most `k` distinct pairs and
/// multiplicities at most `budget`, smallest families first
/// (meet-in-the-middle over strict difference vectors).
pub fn check_sk(r: &Relation, k: usize, budget: u64) -> SkResult {
    let n = r.size() as Event;
    let atoms = r.atoms;
    let mut reps: BTreeMap<Vec<i64>, (Event, Event)> = BTreeMap::new();
    for a in 0..n {
        for b in 0..n {
            if r.gt(a, b) {
                let v: Vec<i64> = indicator(a, atoms).iter().zip(indicator(b, atoms)).map(|(x, y)| x - y).collect();
                reps.entry(v).or_insert((a, b));
            }
        }
    }
    let vecs: Vec<(Vec<i64>, (Event, Event))> = reps.into_iter().collect();
    let m = vecs.len();
    // combinations of `size` distinct indices in [lo, m) with multiplicities
    fn combos(m: usize, lo: usize, size: usize, budget: u64, f: &mut dyn FnMut(&[(usize, u64)])) {
        fn rec(m: usize, start: usize, size: usize, budget: u64, cur: &mut Vec<(usize, u64)>, f: &mut dyn FnMut(&[(usize, u64)])) {
            if cur.len() == size {
                f(cur);
                return;
            }
            for i in start..m {
                for mu in 1..=budget {
                    cur.push((i, mu));
                    rec(m, i + 1, size, budget, cur, f);
                    cur.pop();
                }
            }
        }
        rec(m, lo, size, budget, &mut Vec::new(), f)
    }
    let sum_of = |c: &[(usize, u64)]| -> Vec<i64> {
        let mut s = vec![0i64; atoms];
        for (i, mu) in c {
            for (t, v) in s.iter_mut().zip(&vecs[*i].0) {
                *t += *mu as i64 * v;
            }
        }
        s
    };
    let build = |c: &[(usize, u64)]| -> BalancedCertificate {
        BalancedCertificate {
            atoms,
            pairs: c.iter().map(|(i, mu)| CertPair { a: vecs[*i].1 .0, b: vecs[*i].1 .1, mult: *mu, strict: true }).collect(),
        }
    };
    for j in 1..=k {
        let h = j.div_ceil(2);
        let rsz = j - h;
        let mut left: HashMap<Vec<i64>, Vec<(usize, u64)>> = HashMap::new();
        combos(m, 0, h, budget, &mut |c| {
            let s = sum_of(c);
            let mx = c.last().unwrap().0;
            match left.get(&s) {
                Some(old) if old.last().unwrap().0 <= mx => {}
                _ => {
                    left.insert(s, c.to_vec());
                }
            }
        });
        let mut found: Option<Vec<(usize, u64)>> = None;
        if rsz == 0 {
            if let Some(c) = left.get(&vec![0i64; atoms]) {
                found = Some(c.clone());
            }
        } else {
            combos(m, 1, rsz, budget, &mut |c| {
                if found.is_some() {
                    return;
                }
                let s: Vec<i64> = sum_of(c).into_iter().map(|v| -v).collect();
                if let Some(l) = left.get(&s) {
                    if l.last().unwrap().0 < c[0].0 {
                        let mut all = l.clone();
                        all.extend_from_slice(c);
                        found = Some(all);
                    }
                }
            });
        }
        if let Some(c) = found {
            let cert = build(&c);
            debug_assert!(cert.check(r));
            return SkResult::Violated(cert);
        }
    }
    SkResult::HoldsUpTo { k, budget }
}

/// Bounded finite cancellation: a balanced family of at most `n`
/// comparisons `A_i ≿ B_i` held by `r` with one strict, if any.
pub fn fincan_violation(r: &Relation, n: usize) -> Option<BalancedCertificate> {
    let ne = r.size() as Event;
    let atoms = r.atoms;
    // difference vector -> (strict?, representative pair)
    let mut vecs: BTreeMap<Vec<i64>, (bool, Event, Event)> = BTreeMap::new();
    for a in 0..ne {
        for b in 0..ne {
            if r.ge(a, b) {
                let v: Vec<i64> = indicator(a, atoms).iter().zip(indicator(b, atoms)).map(|(x, y)| x - y).collect();
                let s = r.gt(a, b);
                let e = vecs.entry(v).or_insert((s, a, b));
                if s && !e.0 {
                    *e = (true, a, b);
                }
            }
        }
    }
    let all: Vec<(Vec<i64>, (bool, Event, Event))> = vecs.into_iter().collect();
    let mut layers: Vec<HashMap<Vec<i64>, Vec<usize>>> = vec![[(vec![0i64; atoms], Vec::new())].into_iter().collect()];
    for _ in 1..n {
        let mut next: HashMap<Vec<i64>, Vec<usize>> = HashMap::new();
        for (s, path) in layers.last().unwrap() {
            for (i, (v, _)) in all.iter().enumerate() {
                let t: Vec<i64> = s.iter().zip(v).map(|(a, b)| a + b).collect();
                next.entry(t).or_insert_with(|| {
                    let mut p = path.clone();
                    p.push(i);
                    p
                });
            }
        }
        layers.push(next);
    }
    for (v, (strict, a, b)) in &all {
        if !*strict {
            continue;
        }
        let neg: Vec<i64> = v.iter().map(|x| -x).collect();
        for layer in &layers {
            if let Some(path) = layer.get(&neg) {
                let mut pairs = vec![CertPair { a: *a, b: *b, mult: 1, strict: true }];
                for i in path {
                    let (s, x, y) = all[*i].1;
                    match pairs.iter_mut().find(|p| p.a == x && p.b == y) {
                        Some(p) => p.mult += 1,
                        None => pairs.push(CertPair { a: x, b: y, mult: 1, strict: s }),
                    }
                }
                let cert = BalancedCertificate { atoms, pairs };
                debug_assert!(cert.check(r));
                return Some(cert);
            }
        }
    }
    None
}

/// Every total preorder on the events of `atoms` atoms with `∅` in the
/// lowest class and `Ω` strictly above it (NonTriv and NonDeg), as ranks.
pub fn enumerate_orders(atoms: usize, mut visit: impl FnMut(&[i64])) -> usize {
    let ne = 1usize << atoms;
    let full = ne - 1;
    let mut rank = vec![0i64; ne];
    let mut count = 0;
    fn rec(remaining: u64, level: i64, full: usize, rank: &mut Vec<i64>, count: &mut usize, visit: &mut dyn FnMut(&[i64])) {
        if remaining == 0 {
            *count += 1;
            visit(rank);
            return;
        }
        let mut sub = remaining;
        while sub != 0 {
            let ok = if level == 0 { sub & 1 == 1 && sub >> full & 1 == 0 } else { true };
            if ok {
                for (i, r) in rank.iter_mut().enumerate() {
                    if sub >> i & 1 == 1 {
                        *r = level;
                    }
                }
                rec(remaining & !sub, level + 1, full, rank, count, visit);
            }
            sub = (sub - 1) & remaining;
        }
    }
    rec((1u64 << ne) - 1, 0, full, &mut rank, &mut count, &mut visit);
    count
}

/// Order where `X ≿ Y` is decided by comparing `X∖Y` with `Y∖X` under
/// integer weights, with selected ties between disjoint sets broken by
/// `orient` (`+1`: first above second). Quasi-additive by construction.
pub fn quasi_order_from_weights(w: &[i64], orient: &HashMap<(Event, Event), i8>) -> Relation {
    let atoms = w.len();
    let m = |e: Event| -> i64 { (0..atoms).filter(|i| e >> i & 1 == 1).map(|i| w[i]).sum() };
    Relation::from_fn(atoms, &|x, y| {
        let (u, v) = (x & !y, y & !x);
        match m(u).cmp(&m(v)) {
            Ordering::Equal if u != v => match (orient.get(&(u, v)), orient.get(&(v, u))) {
                (Some(s), _) => (*s as i64).cmp(&0),
                (_, Some(s)) => 0.cmp(&(*s as i64)),
                _ => Ordering::Equal,
            },
            o => o,
        }
    })
}

/// Random search for a total, transitive, quasi-additive order that is not
/// representable: weights with several ties among disjoint sets whose
/// orientations are chosen at random.
pub fn kps_search(atoms: usize, seed: u64, tries: usize) -> Option<(Vec<i64>, Vec<(Event, Event, i8)>, Relation)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = 1u32 << atoms;
    let pool: Vec<i64> = (1..=4 * atoms as i64 + 4).collect();
    for _ in 0..tries {
        let mut w: Vec<i64> = pool.choose_multiple(&mut rng, atoms).cloned().collect();
        w.sort();
        let m = |e: Event| -> i64 { (0..atoms).filter(|i| e >> i & 1 == 1).map(|i| w[i]).sum() };
        let mut ties = Vec::new();
        for u in 1..n {
            for v in (u + 1)..n {
                if u & v == 0 && m(u) == m(v) {
                    ties.push((u, v));
                }
            }
        }
        if ties.len() < 3 {
            continue;
        }
        for _ in 0..30 {
            let orient: HashMap<(Event, Event), i8> = ties.iter().map(|t| (*t, if rng.gen::<bool>() { 1 } else { -1 })).collect();
            let rel = quasi_order_from_weights(&w, &orient);
            if !check_definetti_axioms(&rel).iter().all(|a| a.passed()) {
                continue;
            }
            if let Ok(Representability::No(_)) = representable(&CompOrder::from_relation(&rel)) {
                let mut o: Vec<(Event, Event, i8)> = orient.into_iter().map(|((a, b), s)| (a, b, s)).collect();
                o.sort();
                return Some((w, o, rel));
            }
        }
    }
    None
}

// ---------------------------------------------------------------- quadratic orders

/// Total preorder on ordered pairs of events, stored as a rank per pair
/// (`index = A·2^n + B`, higher rank = more likely).
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct QuadOrder {
    pub atoms: usize,
    pub rank: Vec<i64>,
}

impl QuadOrder {
    pub fn events(&self) -> usize {
        1 << self.atoms
    }
    pub fn idx(&self, a: Event, b: Event) -> usize {
        a as usize * self.events() + b as usize
    }
    pub fn r(&self, a: Event, b: Event) -> i64 {
        self.rank[self.idx(a, b)]
    }
    pub fn from_values(atoms: usize, vals: &[Q]) -> QuadOrder {
        let mut sorted: Vec<&Q> = vals.iter().collect();
        sorted.sort();
        sorted.dedup();
        let rank = vals.iter().map(|v| sorted.binary_search(&v).unwrap() as i64).collect();
        QuadOrder { atoms, rank }
    }
    pub fn from_measure(w: &[Q]) -> QuadOrder {
        let ne = 1u32 << w.len();
        let vals: Vec<Q> = (0..ne).flat_map(|a| (0..ne).map(move |b| (a, b))).map(|(a, b)| mass(w, a) * mass(w, b)).collect();
        QuadOrder::from_values(w.len(), &vals)
    }
    /// Ranks compressed to 0..k.
    pub fn canonical(&self) -> QuadOrder {
        let mut s: Vec<i64> = self.rank.clone();
        s.sort();
        s.dedup();
        QuadOrder { atoms: self.atoms, rank: self.rank.iter().map(|r| s.binary_search(r).unwrap() as i64).collect() }
    }
    pub fn pair_name(&self, a: Event, b: Event) -> String {
        format!("{}x{}", event_name(a, self.atoms), event_name(b, self.atoms))
    }

    pub fn to_json(&self) -> Value {
        let ne = self.events() as Event;
        let mut items: Vec<(Event, Event)> = (0..ne).flat_map(|a| (0..ne).map(move |b| (a, b))).collect();
        items.sort_by_key(|(a, b)| std::cmp::Reverse(self.r(*a, *b)));
        let comps: Vec<Value> = items
            .windows(2)
            .map(|w| {
                let (x, y) = (w[0], w[1]);
                let rel = if self.r(x.0, x.1) > self.r(y.0, y.1) { ">" } else { "=" };
                json!([self.pair_name(x.0, x.1), self.pair_name(y.0, y.1), rel])
            })
            .collect();
        json!({"atoms": self.atoms, "comparisons": comps})
    }

    /// Reads a chain or any set of comparisons between pair keys `{..}x{..}`
    /// that determines a total preorder.
    pub fn from_json(v: &Value) -> Result<QuadOrder, OrderError> {
        let atoms = v["atoms"].as_u64().ok_or_else(|| OrderError::Format("missing atoms".into()))? as usize;
        if atoms > 3 {
            return Err(OrderError::Format("quadratic orders support at most 3 atoms".into()));
        }
        let ne = 1usize << atoms;
        let parse_pair = |s: &str| -> Result<usize, OrderError> {
            let (a, b) = s.split_once("}x{").ok_or_else(|| OrderError::Format(format!("bad pair {}", s)))?;
            let a = parse_event(&format!("{}}}", a), atoms)?;
            let b = parse_event(&format!("{{{}", b), atoms)?;
            Ok(a as usize * ne + b as usize)
        };
        let n = ne * ne;
        let mut r = vec![vec![0u8; n]; n];
        for (i, row) in r.iter_mut().enumerate() {
            row[i] = 1;
        }
        for c in v["comparisons"].as_array().ok_or_else(|| OrderError::Format("missing comparisons".into()))? {
            let arr = c.as_array().filter(|a| a.len() == 3).ok_or_else(|| OrderError::Format("comparison must be [X, Y, rel]".into()))?;
            let s = |i: usize| arr[i].as_str().ok_or_else(|| OrderError::Format("expected strings".into()));
            let (mut x, mut y) = (parse_pair(s(0)?)?, parse_pair(s(1)?)?);
            let (cmp, flip) = parse_cmp(s(2)?)?;
            if flip {
                std::mem::swap(&mut x, &mut y);
            }
            match cmp {
                Cmp::Ge => r[x][y] = r[x][y].max(1),
                Cmp::Gt => r[x][y] = 2,
                Cmp::Eq => {
                    r[x][y] = r[x][y].max(1);
                    r[y][x] = r[y][x].max(1);
                }
            }
        }
        for k in 0..n {
            for i in 0..n {
                for j in 0..n {
                    if r[i][k] > 0 && r[k][j] > 0 {
                        r[i][j] = r[i][j].max(r[i][k].max(r[k][j]));
                    }
                }
            }
        }
        let name = |i: usize| format!("pair {}", i);
        for i in 0..n {
            for j in 0..n {
                if r[i][j] == 0 && r[j][i] == 0 {
                    return Err(OrderError::NotTotal(name(i), name(j)));
                }
                if r[i][j] == 2 && r[j][i] > 0 {
                    return Err(OrderError::Inconsistent(name(i), name(j)));
                }
            }
        }
        // rank = number of pairs strictly below
        let rank = (0..n).map(|i| (0..n).filter(|j| r[i][*j] == 2).count() as i64).collect();
        Ok(QuadOrder { atoms, rank }.canonical())
    }
}

/// Rational `n×n` matrix inducing `Φ(1_A, 1_B) = 1_Aᵀ M 1_B`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BilinearMatrix {
    pub m: Vec<Vec<Q>>,
}

impl BilinearMatrix {
    pub fn new(rows: Vec<Vec<Q>>) -> BilinearMatrix {
        BilinearMatrix { m: rows }
    }
    pub fn phi(&self, a: Event, b: Event) -> Q {
        let n = self.m.len();
        let mut s = Q::zero();
        for i in 0..n {
            if a >> i & 1 == 1 {
                for j in 0..n {
                    if b >> j & 1 == 1 {
                        s += &self.m[i][j];
                    }
                }
            }
        }
        s
    }
    pub fn is_symmetric(&self) -> bool {
        let n = self.m.len();
        (0..n).all(|i| (0..n).all(|j| self.m[i][j] == self.m[j][i]))
    }
    pub fn rank(&self) -> usize {
        let mut a = self.m.clone();
        let rows = a.len();
        let cols = a.first().map_or(0, |r| r.len());
        let mut rank = 0;
        for c in 0..cols {
            let Some(p) = (rank..rows).find(|r| !a[*r][c].is_zero()) else { continue };
            a.swap(rank, p);
            for r in 0..rows {
                if r != rank && !a[r][c].is_zero() {
                    let k = &a[r][c] / &a[rank][c];
                    for cc in c..cols {
                        let t = &k * &a[rank][cc];
                        a[r][cc] -= t;
                    }
                }
            }
            rank += 1;
        }
        rank
    }
}

/// The order induced by a bilinear matrix, with the matrix rank.
pub fn order_from_matrix(m: &BilinearMatrix) -> (QuadOrder, usize) {
    let atoms = m.m.len();
    let ne = 1u32 << atoms;
    let vals: Vec<Q> = (0..ne).flat_map(|a| (0..ne).map(move |b| (a, b))).map(|(a, b)| m.phi(a, b)).collect();
    (QuadOrder::from_values(atoms, &vals), m.rank())
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct QuadAxiomCheck {
    pub name: String,
    /// Ordered pairs `(A, B)` of a failing instance.
    pub witness: Option<Vec<(Event, Event)>>,
}

impl QuadAxiomCheck {
    pub fn passed(&self) -> bool {
        self.witness.is_none()
    }
}

fn prod_indicator(a: Event, b: Event, atoms: usize) -> Vec<i64> {
    let mut v = Vec::with_capacity(atoms * atoms);
    for i in 0..atoms {
        for j in 0..atoms {
            v.push(((a >> i & 1) * (b >> j & 1)) as i64);
        }
    }
    v
}

/// Q1–Q4, then `Q5_m` and `Q6_m` for `m ≤ bound`.
pub fn quad_check_axioms(q: &QuadOrder, bound: usize) -> Vec<QuadAxiomCheck> {
    let mut out = Vec::new();
    let ne = q.events() as Event;
    let full = ne - 1;
    let q1 = if q.r(full, full) > q.r(0, full) { None } else { Some(vec![(full, full), (0, full)]) };
    out.push(QuadAxiomCheck { name: "Q1".into(), witness: q1 });
    let mut q2 = None;
    let mut q3 = None;
    for a in 0..ne {
        for b in 0..ne {
            for c in 0..ne {
                if q2.is_none() && q.r(b, c) < q.r(0, a) {
                    q2 = Some(vec![(b, c), (0, a)]);
                }
            }
            if q3.is_none() && q.r(a, b) < q.r(b, a) {
                q3 = Some(vec![(a, b), (b, a)]);
            }
        }
    }
    out.push(QuadAxiomCheck { name: "Q2".into(), witness: q2 });
    out.push(QuadAxiomCheck { name: "Q3".into(), witness: q3 });
    // rank storage makes the relation a total preorder
    out.push(QuadAxiomCheck { name: "Q4".into(), witness: None });
    for m in 2..=bound.max(2) {
        out.push(QuadAxiomCheck { name: format!("Q5_{}", m), witness: check_q5(q, m) });
    }
    for m in 1..=bound {
        out.push(QuadAxiomCheck { name: format!("Q6_{}", m), witness: check_q6(q, m) });
    }
    out
}

fn permutations(m: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut p: Vec<usize> = (0..m).collect();
    fn heap(k: usize, p: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if k == 1 {
            out.push(p.clone());
            return;
        }
        for i in 0..k {
            heap(k - 1, p, out);
            if k % 2 == 0 {
                p.swap(i, k - 1);
            } else {
                p.swap(0, k - 1);
            }
        }
    }
    heap(m, &mut p, &mut out);
    out
}

/// Multiplicative cancellation. For permutations π, τ: if every
/// `A_i×B_i` with `i < m` is non-null and `A_π(i)×B_τ(i) ≿ A_i×B_i`, then
/// `A_m×B_m ≿ A_π(m)×B_τ(m)`, strictly when some premise is strict and the
/// right-hand side is non-null.
fn check_q5(q: &QuadOrder, m: usize) -> Option<Vec<(Event, Event)>> {
    let ne = q.events() as Event;
    let full = ne - 1;
    let zero = q.r(0, full);
    let perms = permutations(m);
    let pairs: Vec<(Event, Event)> = (0..ne).flat_map(|a| (0..ne).map(move |b| (a, b))).collect();
    let nonnull: Vec<(Event, Event)> = pairs.iter().cloned().filter(|(a, b)| q.r(*a, *b) > zero).collect();
    let mut seq: Vec<(Event, Event)> = vec![(0, 0); m];
    fn rec(
        q: &QuadOrder,
        i: usize,
        m: usize,
        seq: &mut Vec<(Event, Event)>,
        nonnull: &[(Event, Event)],
        pairs: &[(Event, Event)],
        perms: &[Vec<usize>],
        zero: i64,
    ) -> Option<Vec<(Event, Event)>> {
        if i == m {
            for pi in perms {
                for tau in perms {
                    let mut strict = false;
                    let mut ok = true;
                    for j in 0..m - 1 {
                        let l = q.r(seq[pi[j]].0, seq[tau[j]].1);
                        let r = q.r(seq[j].0, seq[j].1);
                        if l < r {
                            ok = false;
                            break;
                        }
                        strict |= l > r;
                    }
                    if !ok {
                        continue;
                    }
                    let lhs = q.r(seq[m - 1].0, seq[m - 1].1);
                    let rhs = q.r(seq[pi[m - 1]].0, seq[tau[m - 1]].1);
                    if lhs < rhs || (strict && rhs > zero && lhs == rhs) {
                        let mut w = seq.clone();
                        w.push((seq[pi[m - 1]].0, seq[tau[m - 1]].1));
                        return Some(w);
                    }
                }
            }
            return None;
        }
        let pool = if i < m - 1 { nonnull } else { pairs };
        for p in pool {
            seq[i] = *p;
            if let Some(w) = rec(q, i + 1, m, seq, nonnull, pairs, perms, zero) {
                return Some(w);
            }
        }
        None
    }
    rec(q, 0, m, &mut seq, &nonnull, &pairs, &perms, zero)
}

/// Product cancellation: no balanced families of at most `m` comparisons
/// `A_i×B_i ≿ C_i×D_i` with one strict.
fn check_q6(q: &QuadOrder, m: usize) -> Option<Vec<(Event, Event)>> {
    let ne = q.events() as Event;
    let atoms = q.atoms;
    let pairs: Vec<(Event, Event)> = (0..ne).flat_map(|a| (0..ne).map(move |b| (a, b))).collect();
    // difference vector -> (strict?, witness pairs)
    let mut vecs: HashMap<Vec<i64>, (bool, (Event, Event), (Event, Event))> = HashMap::new();
    for x in &pairs {
        for y in &pairs {
            let (rx, ry) = (q.r(x.0, x.1), q.r(y.0, y.1));
            if rx >= ry {
                let v: Vec<i64> = prod_indicator(x.0, x.1, atoms).iter().zip(prod_indicator(y.0, y.1, atoms)).map(|(a, b)| a - b).collect();
                let e = vecs.entry(v).or_insert((rx > ry, *x, *y));
                if rx > ry && !e.0 {
                    *e = (true, *x, *y);
                }
            }
        }
    }
    let all: Vec<(Vec<i64>, (bool, (Event, Event), (Event, Event)))> = vecs.into_iter().collect();
    let dim = atoms * atoms;
    // sums of j weak vectors, remembering one decomposition
    let mut layers: Vec<HashMap<Vec<i64>, Vec<usize>>> = vec![[(vec![0i64; dim], Vec::new())].into_iter().collect()];
    for _ in 1..m {
        let prev = layers.last().unwrap();
        let mut next: HashMap<Vec<i64>, Vec<usize>> = HashMap::new();
        for (s, path) in prev {
            for (i, (v, _)) in all.iter().enumerate() {
                let t: Vec<i64> = s.iter().zip(v).map(|(a, b)| a + b).collect();
                next.entry(t).or_insert_with(|| {
                    let mut p = path.clone();
                    p.push(i);
                    p
                });
            }
        }
        layers.push(next);
    }
    for (v, (strict, x, y)) in &all {
        if !*strict {
            continue;
        }
        let neg: Vec<i64> = v.iter().map(|a| -a).collect();
        for layer in &layers {
            if let Some(path) = layer.get(&neg) {
                let mut w = vec![*x, *y];
                for i in path {
                    w.push(all[*i].1 .1);
                    w.push(all[*i].1 .2);
                }
                return Some(w);
            }
        }
    }
    None
}

// ---------------------------------------------------------------- exact quadratic surds

/// `a + b·√d` with `d` a squarefree positive integer (or `b = 0`).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Surd {
    pub a: Q,
    pub b: Q,
    pub d: BigInt,
}

fn squarefree_split(n: &BigInt) -> (BigInt, BigInt) {
    // n = s² · r with r squarefree
    let mut r = n.clone();
    let mut s = BigInt::one();
    let mut p = BigInt::from(2);
    while &p * &p <= r {
        let pp = &p * &p;
        while (&r % &pp).is_zero() {
            r /= &pp;
            s *= &p;
        }
        p += 1;
    }
    (s, r)
}

impl Surd {
    pub fn rational(a: Q) -> Surd {
        Surd { a, b: Q::zero(), d: BigInt::one() }
    }

    /// `a + b·√disc` for a rational discriminant.
    pub fn new(a: Q, b: Q, disc: &Q) -> Surd {
        if b.is_zero() || disc.is_zero() {
            return Surd::rational(a);
        }
        // √(p/q) = √(p·q)/q
        let num = disc.numer() * disc.denom();
        let (s, r) = squarefree_split(&num);
        let b = b * Q::new(s, disc.denom().clone());
        if r.is_one() {
            return Surd::rational(a + b);
        }
        Surd { a, b, d: r }
    }

    pub fn is_rational(&self) -> bool {
        self.b.is_zero()
    }

    pub fn sign(&self) -> Ordering {
        if self.b.is_zero() {
            return self.a.cmp(&Q::zero());
        }
        let sa = self.a.cmp(&Q::zero());
        let sb = self.b.cmp(&Q::zero());
        if sa == Ordering::Equal || sa == sb {
            return sb;
        }
        let a2 = &self.a * &self.a;
        let b2d = &self.b * &self.b * Q::from_integer(self.d.clone());
        match a2.cmp(&b2d) {
            Ordering::Greater => sa,
            Ordering::Less => sb,
            Ordering::Equal => Ordering::Equal,
        }
    }

    /// Rational enclosure of width at most `eps`.
    fn bounds(&self, eps: &Q) -> (Q, Q) {
        if self.b.is_zero() {
            return (self.a.clone(), self.a.clone());
        }
        let d = Q::from_integer(self.d.clone());
        let (mut lo, mut hi) = (Q::zero(), d.clone() + Q::one());
        let target = eps / (self.b.abs() + Q::one());
        while &hi - &lo > target {
            let mid = (&lo + &hi) / Q::from_integer(BigInt::from(2));
            if &mid * &mid <= d {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let (x, y) = (&self.a + &self.b * &lo, &self.a + &self.b * &hi);
        if x <= y {
            (x, y)
        } else {
            (y, x)
        }
    }

    pub fn to_f64(&self) -> f64 {
        crate::num::to_f64(&self.a) + crate::num::to_f64(&self.b) * self.d.to_f64().unwrap_or(f64::NAN).sqrt()
    }

    /// Exact comparison; same radicands subtract, otherwise enclosures are
    /// refined until they separate (distinct radicands never give equal values).
    pub fn cmp_exact(&self, o: &Surd) -> Ordering {
        if self.b.is_zero() || o.b.is_zero() || self.d == o.d {
            let d = if self.b.is_zero() { o.d.clone() } else { self.d.clone() };
            return Surd { a: &self.a - &o.a, b: &self.b - &o.b, d }.sign();
        }
        let mut eps = Q::new(BigInt::one(), BigInt::from(16));
        loop {
            let (l1, h1) = self.bounds(&eps);
            let (l2, h2) = o.bounds(&eps);
            if h1 < l2 {
                return Ordering::Less;
            }
            if h2 < l1 {
                return Ordering::Greater;
            }
            eps = eps / Q::from_integer(BigInt::from(16));
        }
    }

    /// Sign of a univariate rational polynomial (coefficients by degree) at this point.
    pub fn poly_sign(&self, coeffs: &[Q]) -> Ordering {
        let d = Q::from_integer(self.d.clone());
        let (mut ua, mut ub) = (Q::zero(), Q::zero());
        for c in coeffs.iter().rev() {
            // (ua + ub√d)(a + b√d) + c
            let na = &ua * &self.a + &ub * &self.b * &d + c;
            let nb = &ua * &self.b + &ub * &self.a;
            ua = na;
            ub = nb;
        }
        Surd { a: ua, b: ub, d: self.d.clone() }.sign()
    }
}

impl fmt::Display for Surd {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.b.is_zero() {
            write!(f, "{}", fmt_q(&self.a))
        } else if self.a.is_zero() {
            write!(f, "{}*sqrt({})", fmt_q(&self.b), self.d)
        } else {
            write!(f, "{} + {}*sqrt({})", fmt_q(&self.a), fmt_q(&self.b), self.d)
        }
    }
}

/// Positive real roots of `c0 + c1·x + c2·x²`.
fn positive_roots(c: &[Q; 3]) -> Vec<Surd> {
    let [c0, c1, c2] = c;
    let mut out = Vec::new();
    if c2.is_zero() {
        if !c1.is_zero() {
            let r = -c0 / c1;
            if r.is_positive() {
                out.push(Surd::rational(r));
            }
        }
        return out;
    }
    let disc = c1 * c1 - Q::from_integer(BigInt::from(4)) * c0 * c2;
    if disc.is_negative() {
        return out;
    }
    let two_a = c2 * Q::from_integer(BigInt::from(2));
    let a = -c1 / &two_a;
    let b = Q::one() / &two_a;
    for s in [Q::one(), -Q::one()] {
        let r = Surd::new(a.clone(), &b * &s, &disc);
        if r.sign() == Ordering::Greater && !out.iter().any(|o: &Surd| o.cmp_exact(&r) == Ordering::Equal) {
            out.push(r);
        }
    }
    out
}

// ---------------------------------------------------------------- two-point classification

/// A region of the ratio `x = P({1})/P({0})`; `Infinity` is the degenerate
/// measure concentrated on atom 1.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum XRegion {
    Point(Surd),
    Open { lo: Surd, hi: Option<Surd> },
    Infinity,
}

impl fmt::Display for XRegion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            XRegion::Point(p) => write!(f, "x = {}", p),
            XRegion::Open { lo, hi: Some(h) } => write!(f, "{} < x < {}", lo, h),
            XRegion::Open { lo, hi: None } => write!(f, "x > {}", lo),
            XRegion::Infinity => write!(f, "x = +inf (all mass on atom 1)"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum QuadRepr {
    /// `sample` is a rational ratio inside the region when one exists; the
    /// representing measure is then `P({0}) = 1/(1+x)`, `P({1}) = x/(1+x)`.
    Yes { region: XRegion, sample: Option<Q> },
    No,
}

/// Coefficients (by degree in x) of `s(A)·s(B)` with `s(∅)=0, s({0})=1, s({1})=x, s(Ω)=1+x`.
fn pair_poly(a: Event, b: Event) -> [Q; 3] {
    let s = |e: Event| -> [Q; 2] { [qi((e & 1) as i64), qi((e >> 1 & 1) as i64)] };
    let (p, r) = (s(a), s(b));
    [&p[0] * &r[0], &p[0] * &r[1] + &p[1] * &r[0], &p[1] * &r[1]]
}

/// The orders induced by every region of `x ∈ [0, ∞]`, in increasing x.
pub fn n2_regions() -> Vec<(XRegion, Option<Q>, QuadOrder)> {
    let pairs: Vec<(Event, Event)> = (0..4).flat_map(|a| (0..4).map(move |b| (a, b))).collect();
    let polys: Vec<[Q; 3]> = pairs.iter().map(|(a, b)| pair_poly(*a, *b)).collect();
    let mut roots: Vec<Surd> = Vec::new();
    for p in &polys {
        for r in &polys {
            let d = [&p[0] - &r[0], &p[1] - &r[1], &p[2] - &r[2]];
            if d.iter().all(|c| c.is_zero()) {
                continue;
            }
            for x in positive_roots(&d) {
                if !roots.iter().any(|o| o.cmp_exact(&x) == Ordering::Equal) {
                    roots.push(x);
                }
            }
        }
    }
    roots.sort_by(|a, b| a.cmp_exact(b));
    let order_at = |sign: &dyn Fn(&[Q; 3]) -> Ordering| -> QuadOrder {
        // rank by comparisons of polynomial values at the point
        let n = polys.len();
        let rank: Vec<i64> = (0..n)
            .map(|i| {
                (0..n)
                    .filter(|j| {
                        let d = [&polys[i][0] - &polys[*j][0], &polys[i][1] - &polys[*j][1], &polys[i][2] - &polys[*j][2]];
                        sign(&d) == Ordering::Greater
                    })
                    .count() as i64
            })
            .collect();
        QuadOrder { atoms: 2, rank }.canonical()
    };
    let at_rational = |x: &Q| order_at(&|d: &[Q; 3]| Surd::rational(x.clone()).poly_sign(d));
    let mut out = Vec::new();
    out.push((XRegion::Point(Surd::rational(Q::zero())), Some(Q::zero()), at_rational(&Q::zero())));
    let mut lo = Surd::rational(Q::zero());
    for r in roots.iter().cloned().map(Some).chain([None]) {
        // open interval (lo, r)
        let eps = Q::new(BigInt::one(), BigInt::from(1024));
        let (_, lo_hi) = lo.bounds(&eps);
        let sample = match &r {
            Some(h) => {
                let (h_lo, _) = h.bounds(&eps);
                simplest_between(&lo_hi, &h_lo)
            }
            None => lo_hi.floor() + Q::one(),
        };
        out.push((XRegion::Open { lo: lo.clone(), hi: r.clone() }, Some(sample.clone()), at_rational(&sample)));
        if let Some(h) = r {
            let o = order_at(&|d: &[Q; 3]| h.poly_sign(d));
            let s = if h.is_rational() { Some(h.a.clone()) } else { None };
            out.push((XRegion::Point(h.clone()), s, o));
            lo = h;
        }
    }
    let (degen, _) = order_from_matrix(&BilinearMatrix::new(vec![vec![qi(0), qi(0)], vec![qi(0), qi(1)]]));
    out.push((XRegion::Infinity, None, degen.canonical()));
    out
}

pub fn quad_representable_n2(q: &QuadOrder) -> Result<QuadRepr, OrderError> {
    if q.atoms != 2 {
        return Err(OrderError::WrongSize { expected: 2, got: q.atoms });
    }
    let c = q.canonical();
    for (region, sample, o) in n2_regions() {
        if o == c {
            return Ok(QuadRepr::Yes { region, sample });
        }
    }
    Ok(QuadRepr::No)
}

/// Every total preorder on ordered pairs of events over two atoms that is
/// symmetric (Q3), enumerated as ordered partitions of the ten unordered
/// pairs. Partitions where a pair with an empty factor is not in the lowest
/// block violate Q2 and are cut as soon as that is decided.
pub fn enumerate_symmetric_n2(mut visit: impl FnMut(&QuadOrder)) -> usize {
    let unordered: Vec<(Event, Event)> = (0..4).flat_map(|a| (a..4).map(move |b| (a, b))).collect();
    let null: Vec<bool> = unordered.iter().map(|(a, b)| *a == 0 || *b == 0).collect();
    let mut count = 0;
    fn rec(
        remaining: u32,
        level: i64,
        assign: &mut Vec<i64>,
        null: &[bool],
        unordered: &[(Event, Event)],
        count: &mut usize,
        visit: &mut dyn FnMut(&QuadOrder),
    ) {
        if remaining == 0 {
            let mut rank = vec![0i64; 16];
            for (i, (a, b)) in unordered.iter().enumerate() {
                rank[*a as usize * 4 + *b as usize] = assign[i];
                rank[*b as usize * 4 + *a as usize] = assign[i];
            }
            *count += 1;
            visit(&QuadOrder { atoms: 2, rank }.canonical());
            return;
        }
        // next block: nonempty subset of the remaining pairs
        let mut sub = remaining;
        while sub != 0 {
            let ok = (0..null.len()).all(|i| {
                let in_block = sub >> i & 1 == 1;
                let left = remaining >> i & 1 == 1;
                // Q2: null pairs all sit in the lowest block, and nothing else may be below them
                if level == 0 {
                    !null[i] || in_block || !left
                } else {
                    !(in_block && null[i])
                }
            });
            if ok {
                for i in 0..null.len() {
                    if sub >> i & 1 == 1 {
                        assign[i] = level;
                    }
                }
                rec(remaining & !sub, level + 1, assign, null, unordered, count, visit);
            }
            sub = (sub - 1) & remaining;
        }
    }
    let all = (1u32 << unordered.len()) - 1;
    let mut assign = vec![0i64; unordered.len()];
    rec(all, 0, &mut assign, &null, &unordered, &mut count, &mut visit);
    count
}

/// Survivors of Q1–Q4, `Q5_2` and `Q6_m` for `m ≤ q6_bound` among the
/// symmetric total preorders over two atoms.
pub fn sweep_n2(q6_bound: usize) -> Vec<QuadOrder> {
    let mut out = Vec::new();
    let mut seen = HashSet::new();
    enumerate_symmetric_n2(|q| {
        if !seen.insert(q.clone()) {
            return;
        }
        let ne: Event = 4;
        let full = ne - 1;
        if q.r(full, full) <= q.r(0, full) {
            return;
        }
        if check_q5(q, 2).is_some() {
            return;
        }
        if (1..=q6_bound).any(|m| check_q6(q, m).is_some()) {
            return;
        }
        out.push(q.clone());
    });
    out
}

/// Distinct indices of unordered pairs for display.
pub fn n2_chain(q: &QuadOrder) -> String {
    let unordered: Vec<(Event, Event)> = (0..4).flat_map(|a| (a..4).map(move |b| (a, b))).collect();
    let name = |e: Event| match e {
        0 => "∅",
        1 => "0",
        2 => "1",
        _ => "Ω",
    };
    let mut by: BTreeMap<i64, Vec<String>> = BTreeMap::new();
    for (a, b) in unordered {
        if a == 0 && b > 0 {
            continue;
        }
        let label = if a == 0 { "(∅,·)".to_string() } else { format!("({},{})", name(a), name(b)) };
        by.entry(q.r(a, b)).or_default().push(label);
    }
    by.values().map(|v| v.join(" ~ ")).collect::<Vec<_>>().join(" < ")
}

/// Gcd helper for integer certificates.
pub fn gcd_all(xs: &[u64]) -> u64 {
    xs.iter().fold(0u64, |g, x| g.gcd(x))
}

/// Distinct strict difference vectors of a relation (used by the S_k audit).
pub fn strict_vectors(r: &Relation) -> BTreeSet<Vec<i64>> {
    let n = r.size() as Event;
    let mut out = BTreeSet::new();
    for a in 0..n {
        for b in 0..n {
            if r.gt(a, b) {
                out.insert(indicator(a, r.atoms).iter().zip(indicator(b, r.atoms)).map(|(x, y)| x - y).collect());
            }
        }
    }
    out
}

pub fn parse_matrix(s: &str) -> Option<BilinearMatrix> {
    // rows separated by ';', entries by ','
    let rows: Option<Vec<Vec<Q>>> = s.split(';').map(|r| r.split(',').map(parse_q).collect()).collect();
    let rows = rows?;
    let n = rows.len();
    if n == 0 || rows.iter().any(|r| r.len() != n) {
        return None;
    }
    Some(BilinearMatrix::new(rows))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::num::q;

    #[test]
    fn uniform_two_atoms() {
        let r = Relation::from_measure(&[q(1, 2), q(1, 2)]);
        assert!(check_definetti_axioms(&r).iter().all(|a| a.passed()));
    }

    #[test]
    fn nondeg_failure() {
        let o = CompOrder { atoms: 1, comparisons: vec![(0, 1, Cmp::Eq)] };
        let r = o.closure().unwrap();
        let ax = check_definetti_axioms(&r);
        assert!(!ax.iter().find(|a| a.name == "NonDeg").unwrap().passed());
        assert!(matches!(representable(&o).unwrap(), Representability::No(NonRepr::Axiom { axiom: "NonDeg", .. })));
    }

    #[test]
    fn two_thirds_recovered() {
        let o = CompOrder::from_measure(&[q(2, 3), q(1, 3)]);
        let Representability::Yes(w) = representable(&o).unwrap() else { panic!() };
        assert!(o.closure().unwrap().agrees_with_measure(&w));
    }

    #[test]
    fn matrices_phi_psi() {
        let phi = BilinearMatrix::new(vec![vec![q(1, 16), q(3, 16)], vec![q(3, 16), q(9, 16)]]);
        let psi = BilinearMatrix::new(vec![vec![q(1, 12), q(3, 12)], vec![q(3, 12), q(5, 12)]]);
        let (a, ra) = order_from_matrix(&phi);
        let (b, rb) = order_from_matrix(&psi);
        assert_eq!((ra, rb), (1, 2));
        assert_eq!(a, b);
        assert_eq!(a, QuadOrder::from_measure(&[q(1, 4), q(3, 4)]));
        assert!(quad_check_axioms(&b, 3).iter().all(|c| c.passed()));
    }

    #[test]
    fn surd_ordering() {
        let phi = Surd::new(q(1, 2), q(1, 2), &qi(5));
        let inv = Surd::new(q(-1, 2), q(1, 2), &qi(5));
        assert_eq!(inv.cmp_exact(&Surd::rational(qi(1))), Ordering::Less);
        assert_eq!(phi.cmp_exact(&Surd::rational(qi(1))), Ordering::Greater);
        // x² - x - 1 vanishes at φ
        assert_eq!(phi.poly_sign(&[qi(-1), qi(-1), qi(1)]), Ordering::Equal);
        let r2 = Surd::new(Q::zero(), qi(1), &qi(2));
        assert_eq!(r2.cmp_exact(&phi), Ordering::Less);
    }

    #[test]
    fn nine_regions() {
        let regs = n2_regions();
        assert_eq!(regs.len(), 9);
        let distinct: HashSet<QuadOrder> = regs.iter().map(|r| r.2.clone()).collect();
        assert_eq!(distinct.len(), 9);
    }
}
