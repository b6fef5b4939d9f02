//! Decision machinery for polynomial systems on the probability simplex:
//! rational grid search, numeric search with exact checking, interval
//! branch-and-prune, and Positivstellensatz certificates.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::time::{Duration, Instant};

use nalgebra::{DMatrix, DVector};
use num_traits::{One, Signed, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::linsolve::{lin_sat, trace_multipliers, verify_farkas, SatResult, UnsatTrace};
use crate::lp;
use crate::normalize::{dnf, Expander, LinSystem, PRel, PolyRow, PolySystem};
use crate::num::{approx_rational, fmt_q, lcm_denoms, q, to_f64, Q};
use crate::poly::{Interval, Monomial, Poly};
use crate::semantics::{satisfies, valuation_key, CBool, Model, SemError};
use crate::syntax::{free_letters, BoolExpr, Formula};

#[derive(Clone, Debug)]
pub struct PolyBudget {
    /// Largest denominator visited by the rational grid.
    pub max_denom: u32,
    pub max_points: usize,
    /// Maximum bisection depth along one branch.
    pub bp_depth: u32,
    pub bp_max_boxes: usize,
    /// Maximum number of G-factors in a cone product.
    pub psatz_degree: u32,
    pub psatz_max_cols: usize,
    pub restarts: usize,
    pub lm_iters: usize,
    /// Residual tolerance for numeric witnesses.
    pub tol: f64,
    /// Target margin for strict rows during numeric search.
    pub margin: f64,
    pub seed: u64,
    pub timeout_ms: Option<u64>,
}

impl Default for PolyBudget {
    fn default() -> Self {
        PolyBudget {
            max_denom: 64,
            max_points: 200_000,
            bp_depth: 24,
            bp_max_boxes: 20_000,
            psatz_degree: 3,
            psatz_max_cols: 4_000,
            restarts: 32,
            lm_iters: 200,
            tol: 1e-9,
            margin: 1e-6,
            seed: 0,
            timeout_ms: Some(10_000),
        }
    }
}

struct Deadline(Option<Instant>);

impl Deadline {
    fn new(ms: Option<u64>) -> Deadline {
        Deadline(ms.map(|m| Instant::now() + Duration::from_millis(m)))
    }
    fn passed(&self) -> bool {
        self.0.is_some_and(|d| Instant::now() >= d)
    }
}

// ---------------------------------------------------------------- simplex reduction

/// A simplex system with its last variable eliminated through `Σ x = 1`;
/// the remaining variables range over `[0, 1]`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Reduced {
    pub nvars: usize,
    pub rows: Vec<PolyRow>,
}

fn is_simplex_row(r: &PolyRow, n: usize) -> bool {
    if r.rel != PRel::Eq {
        return false;
    }
    let mut target = Poly::constant(-Q::one());
    for i in 0..n {
        target = target.add(&Poly::var(i));
    }
    r.poly == target || r.poly == target.neg()
}

/// Substitutes `x_{n-1} = 1 - Σ_{i<n-1} x_i`. None when the system has no
/// `Σ x = 1` row.
pub fn reduce(sys: &PolySystem) -> Option<Reduced> {
    let n = sys.vars.len();
    let si = sys.rows.iter().position(|r| is_simplex_row(r, n))?;
    if n == 0 {
        return None;
    }
    let last = n - 1;
    let mut sub = Poly::one();
    for i in 0..last {
        sub = sub.sub(&Poly::var(i));
    }
    let rows = sys
        .rows
        .iter()
        .enumerate()
        .filter(|(i, _)| *i != si)
        .map(|(_, r)| PolyRow { poly: r.poly.substitute(last, &sub), rel: r.rel })
        .collect();
    Some(Reduced { nvars: last, rows })
}

fn lift(y: &[Q]) -> Vec<Q> {
    let mut x = y.to_vec();
    let s: Q = y.iter().sum();
    x.push(Q::one() - s);
    x
}

fn lift_f64(y: &[f64]) -> Vec<f64> {
    let mut x = y.to_vec();
    x.push(1.0 - y.iter().sum::<f64>());
    x
}

// ---------------------------------------------------------------- fast evaluation

struct FastPoly {
    terms: Vec<(Vec<(usize, i32)>, f64)>,
}

impl FastPoly {
    fn new(p: &Poly) -> FastPoly {
        FastPoly {
            terms: p.terms.iter().map(|(m, c)| (m.0.iter().map(|(v, e)| (*v, *e as i32)).collect(), to_f64(c))).collect(),
        }
    }
    fn eval(&self, x: &[f64]) -> f64 {
        self.terms.iter().map(|(m, c)| m.iter().fold(*c, |acc, (v, e)| acc * x[*v].powi(*e))).sum()
    }
}

fn violation(rel: PRel, v: f64, margin: f64) -> f64 {
    match rel {
        PRel::Eq => v.abs(),
        PRel::Ge => (-v).max(0.0),
        PRel::Gt => (margin - v).max(0.0),
        PRel::Ne => (margin - v.abs()).max(0.0),
    }
}

fn plausible(rel: PRel, v: f64) -> bool {
    const SLACK: f64 = 1e-9;
    match rel {
        PRel::Eq => v.abs() <= SLACK,
        PRel::Ge | PRel::Gt => v >= -SLACK,
        PRel::Ne => true,
    }
}

// ---------------------------------------------------------------- rational search

fn compositions(d: u32, parts: usize, f: &mut dyn FnMut(&[u32]) -> bool) -> bool {
    fn rec(rem: u32, parts: usize, cur: &mut Vec<u32>, f: &mut dyn FnMut(&[u32]) -> bool) -> bool {
        if parts == 1 {
            cur.push(rem);
            let go = f(cur);
            cur.pop();
            return go;
        }
        for k in (0..=rem).rev() {
            cur.push(k);
            let go = rec(rem - k, parts - 1, cur, f);
            cur.pop();
            if !go {
                return false;
            }
        }
        true
    }
    if parts == 0 {
        return true;
    }
    rec(d, parts, &mut Vec::with_capacity(parts), f)
}

/// Grid search over simplex points with denominators up to `max_denom`,
/// uniform point first, then local hill-climbing from the best points.
pub fn rational_search(sys: &PolySystem, budget: &PolyBudget) -> Option<Vec<Q>> {
    let dl = Deadline::new(budget.timeout_ms);
    rational_search_dl(sys, budget, &dl)
}

fn rational_search_dl(sys: &PolySystem, budget: &PolyBudget, dl: &Deadline) -> Option<Vec<Q>> {
    let n = sys.vars.len();
    if n == 0 {
        return if sys.holds(&[]) { Some(Vec::new()) } else { None };
    }
    let fast: Vec<(FastPoly, PRel)> = sys.rows.iter().map(|r| (FastPoly::new(&r.poly), r.rel)).collect();
    let uniform = vec![q(1, n as i64); n];
    if sys.holds(&uniform) {
        return Some(uniform);
    }
    let mut tried = 0usize;
    let mut found: Option<Vec<Q>> = None;
    // keep a few low-violation points for hill-climbing
    let mut best: Vec<(f64, Vec<u32>, u32)> = Vec::new();
    for d in 1..=budget.max_denom {
        let df = d as f64;
        let mut xf = vec![0.0; n];
        let go = compositions(d, n, &mut |c| {
            tried += 1;
            if tried > budget.max_points || (tried % 4096 == 0 && dl.passed()) {
                return false;
            }
            for (i, k) in c.iter().enumerate() {
                xf[i] = *k as f64 / df;
            }
            let mut score = 0.0;
            let mut ok = true;
            for (p, rel) in &fast {
                let v = p.eval(&xf);
                if !plausible(*rel, v) {
                    ok = false;
                }
                score += violation(*rel, v, 0.0);
            }
            if ok {
                let x: Vec<Q> = c.iter().map(|k| q(*k as i64, d as i64)).collect();
                if sys.holds(&x) {
                    found = Some(x);
                    return false;
                }
            }
            if best.len() < 8 || score < best[best.len() - 1].0 {
                best.push((score, c.to_vec(), d));
                best.sort_by(|a, b| a.0.total_cmp(&b.0));
                best.truncate(8);
            }
            true
        });
        if found.is_some() {
            return found;
        }
        if !go {
            break;
        }
    }
    // hill-climb on the finest grid
    let dd = budget.max_denom.max(1);
    for (_, c, d) in best {
        if dl.passed() {
            break;
        }
        let scale = dd / d.max(1);
        let mut cur: Vec<u32> = c.iter().map(|k| k * scale).collect();
        let total: u32 = cur.iter().sum();
        if total != dd {
            continue;
        }
        let eval = |c: &[u32]| -> (f64, bool) {
            let xf: Vec<f64> = c.iter().map(|k| *k as f64 / dd as f64).collect();
            let mut s = 0.0;
            let mut ok = true;
            for (p, rel) in &fast {
                let v = p.eval(&xf);
                ok &= plausible(*rel, v);
                s += violation(*rel, v, 0.0);
            }
            (s, ok)
        };
        let (mut score, _) = eval(&cur);
        for _ in 0..200 {
            let mut improved = false;
            'moves: for i in 0..n {
                if cur[i] == 0 {
                    continue;
                }
                for j in 0..n {
                    if i == j {
                        continue;
                    }
                    cur[i] -= 1;
                    cur[j] += 1;
                    let (s, ok) = eval(&cur);
                    if ok {
                        let x: Vec<Q> = cur.iter().map(|k| q(*k as i64, dd as i64)).collect();
                        if sys.holds(&x) {
                            return Some(x);
                        }
                    }
                    if s < score {
                        score = s;
                        improved = true;
                        break 'moves;
                    }
                    cur[i] += 1;
                    cur[j] -= 1;
                }
            }
            if !improved {
                break;
            }
        }
    }
    None
}

// ---------------------------------------------------------------- interval pruning

fn row_infeasible(rel: PRel, iv: &Interval) -> bool {
    let z = Q::zero();
    match rel {
        PRel::Gt => iv.hi <= z,
        PRel::Ge => iv.hi < z,
        PRel::Eq => iv.lo > z || iv.hi < z,
        PRel::Ne => iv.lo.is_zero() && iv.hi.is_zero(),
    }
}

/// Bisection tree whose leaves each name a row that is infeasible on the
/// leaf's box.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum PruneTree {
    Leaf { row: usize },
    Split { var: usize, at: Q, lo: Box<PruneTree>, hi: Box<PruneTree> },
}

impl PruneTree {
    pub fn leaves(&self) -> usize {
        match self {
            PruneTree::Leaf { .. } => 1,
            PruneTree::Split { lo, hi, .. } => lo.leaves() + hi.leaves(),
        }
    }

    /// Nested boxes, one line per node.
    pub fn to_text(&self, red: &Reduced) -> String {
        let root = vec![Interval::new(Q::zero(), Q::one()); red.nvars];
        let mut s = String::new();
        self.write_text(&root, 0, &mut s);
        s
    }

    fn write_text(&self, bx: &[Interval], depth: usize, s: &mut String) {
        let b: Vec<String> = bx.iter().map(|i| format!("[{}, {}]", fmt_q(&i.lo), fmt_q(&i.hi))).collect();
        let pad = "  ".repeat(depth);
        match self {
            PruneTree::Leaf { row } => {
                let _ = writeln!(s, "{}box {} pruned by row {}", pad, b.join(" x "), row);
            }
            PruneTree::Split { var, at, lo, hi } => {
                let _ = writeln!(s, "{}box {} split y{} at {}", pad, b.join(" x "), var, fmt_q(at));
                let (l, h) = split_box(bx, *var, at);
                lo.write_text(&l, depth + 1, s);
                hi.write_text(&h, depth + 1, s);
            }
        }
    }
}

fn split_box(bx: &[Interval], var: usize, at: &Q) -> (Vec<Interval>, Vec<Interval>) {
    let mut l = bx.to_vec();
    let mut h = bx.to_vec();
    l[var] = Interval::new(bx[var].lo.clone(), at.clone());
    h[var] = Interval::new(at.clone(), bx[var].hi.clone());
    (l, h)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum BpOutcome {
    Unsat(PruneTree),
    Unknown { boxes: usize },
    /// Midpoint of a surviving box at maximal depth.
    SatBoxHint { point: Vec<Q>, boxes: usize },
}

/// Bisects `[0,1]^n` over the reduced system. All leaves pruned means no
/// solution in the closed simplex.
pub fn branch_and_prune(red: &Reduced, depth: u32, max_boxes: usize) -> BpOutcome {
    let dl = Deadline(None);
    bp_dl(red, depth, max_boxes, &dl)
}

fn bp_dl(red: &Reduced, depth: u32, max_boxes: usize, dl: &Deadline) -> BpOutcome {
    let root = vec![Interval::new(Q::zero(), Q::one()); red.nvars];
    let mut boxes = 0usize;
    enum Fail {
        Budget,
        Hint(Vec<Q>),
    }
    fn rec(red: &Reduced, bx: &[Interval], depth: u32, boxes: &mut usize, max: usize, dl: &Deadline) -> Result<PruneTree, Fail> {
        *boxes += 1;
        if *boxes > max || (*boxes % 1024 == 0 && dl.passed()) {
            return Err(Fail::Budget);
        }
        for (i, r) in red.rows.iter().enumerate() {
            if row_infeasible(r.rel, &r.poly.interval_eval(bx)) {
                return Ok(PruneTree::Leaf { row: i });
            }
        }
        if depth == 0 || bx.is_empty() {
            return Err(Fail::Hint(bx.iter().map(|i| i.mid()).collect()));
        }
        let var = (0..bx.len()).max_by(|a, b| bx[*a].width().cmp(&bx[*b].width()).then(b.cmp(a))).unwrap();
        let at = bx[var].mid();
        let (l, h) = split_box(bx, var, &at);
        let lo = rec(red, &l, depth - 1, boxes, max, dl)?;
        let hi = rec(red, &h, depth - 1, boxes, max, dl)?;
        Ok(PruneTree::Split { var, at, lo: Box::new(lo), hi: Box::new(hi) })
    }
    match rec(red, &root, depth, &mut boxes, max_boxes, dl) {
        Ok(t) => BpOutcome::Unsat(t),
        Err(Fail::Budget) => BpOutcome::Unknown { boxes },
        Err(Fail::Hint(point)) => BpOutcome::SatBoxHint { point, boxes },
    }
}

/// Re-checks every split and leaf of a prune tree.
pub fn replay_prune_tree(red: &Reduced, tree: &PruneTree) -> bool {
    fn rec(red: &Reduced, bx: &[Interval], t: &PruneTree) -> bool {
        match t {
            PruneTree::Leaf { row } => red.rows.get(*row).is_some_and(|r| row_infeasible(r.rel, &r.poly.interval_eval(bx))),
            PruneTree::Split { var, at, lo, hi } => {
                if *var >= bx.len() || *at < bx[*var].lo || *at > bx[*var].hi {
                    return false;
                }
                let (l, h) = split_box(bx, *var, at);
                rec(red, &l, lo) && rec(red, &h, hi)
            }
        }
    }
    rec(red, &vec![Interval::new(Q::zero(), Q::one()); red.nvars], tree)
}

// ---------------------------------------------------------------- strict/equality conflicts

fn proportional(p: &Poly, r: &Poly) -> Option<Q> {
    let (m, c) = p.terms.iter().next()?;
    let k = r.terms.get(m)? / c;
    if r.terms.len() != p.terms.len() {
        return None;
    }
    if p.scale(&k) == *r {
        Some(k)
    } else {
        None
    }
}

/// Rows `a`, `b` with `poly_b = ratio·poly_a` whose relations cannot hold together.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Conflict {
    pub a: usize,
    pub b: usize,
    pub ratio: Q,
}

fn conflict_holds(red: &Reduced, c: &Conflict) -> bool {
    let (Some(ra), Some(rb)) = (red.rows.get(c.a), red.rows.get(c.b)) else { return false };
    if c.ratio.is_zero() || ra.poly.is_zero() || ra.poly.scale(&c.ratio) != rb.poly {
        return false;
    }
    let neg = c.ratio.is_negative();
    matches!(
        (ra.rel, rb.rel, neg),
        (PRel::Eq, PRel::Gt | PRel::Ne, _)
            | (PRel::Gt | PRel::Ne, PRel::Eq, _)
            | (PRel::Gt, PRel::Gt, true)
            | (PRel::Gt, PRel::Ge, true)
            | (PRel::Ge, PRel::Gt, true)
    )
}

/// Detects pairs such as `p = 0` with `p > 0`, which interval pruning alone
/// cannot refute.
pub fn find_conflict(red: &Reduced) -> Option<Conflict> {
    for a in 0..red.rows.len() {
        for b in 0..red.rows.len() {
            if a == b {
                continue;
            }
            if let Some(ratio) = proportional(&red.rows[a].poly, &red.rows[b].poly) {
                let c = Conflict { a, b, ratio };
                if conflict_holds(red, &c) {
                    return Some(c);
                }
            }
        }
    }
    None
}

// ---------------------------------------------------------------- Positivstellensatz

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PsatzSets {
    pub f: Vec<Poly>,
    pub g: Vec<Poly>,
    pub h: Vec<Poly>,
}

/// `≠` and `>` rows feed F; `≥` and `>` rows feed G; equalities feed H.
pub fn psatz_sets(sys: &PolySystem) -> PsatzSets {
    let mut s = PsatzSets { f: Vec::new(), g: Vec::new(), h: Vec::new() };
    for r in &sys.rows {
        match r.rel {
            PRel::Ne => s.f.push(r.poly.clone()),
            PRel::Gt => {
                s.f.push(r.poly.clone());
                s.g.push(r.poly.clone());
            }
            PRel::Ge => s.g.push(r.poly.clone()),
            PRel::Eq => s.h.push(r.poly.clone()),
        }
    }
    s
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ConeTerm {
    pub coeff: Q,
    /// Indices into G, with repetition.
    pub factors: Vec<usize>,
    /// The square is `square²`.
    pub square: Monomial,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IdealTerm {
    pub multiplier: Poly,
    pub member: usize,
}

/// `Σ cone + Σ ideal + d·(Π F)^{2n} = 0`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PsatzCertificate {
    pub cone: Vec<ConeTerm>,
    pub ideal: Vec<IdealTerm>,
    pub n: u32,
    pub d: Q,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum PsatzError {
    #[error("certificate references G[{0}] which does not exist")]
    BadG(usize),
    #[error("certificate references H[{0}] which does not exist")]
    BadH(usize),
}

fn product(ps: &[Poly], idx: &[usize]) -> Poly {
    idx.iter().fold(Poly::one(), |acc, i| acc.mul(&ps[*i]))
}

impl PsatzCertificate {
    /// The assembled polynomial, zero for a valid certificate.
    pub fn assemble(&self, sets: &PsatzSets) -> Result<Poly, PsatzError> {
        let mut total = Poly::zero();
        for t in &self.cone {
            if let Some(b) = t.factors.iter().find(|i| **i >= sets.g.len()) {
                return Err(PsatzError::BadG(*b));
            }
            let sq = Poly::monomial(t.square.mul(&t.square), Q::one());
            total = total.add(&product(&sets.g, &t.factors).mul(&sq).scale(&t.coeff));
        }
        for t in &self.ideal {
            let h = sets.h.get(t.member).ok_or(PsatzError::BadH(t.member))?;
            total = total.add(&t.multiplier.mul(h));
        }
        let f = sets.f.iter().fold(Poly::one(), |acc, p| acc.mul(p));
        Ok(total.add(&f.pow(2 * self.n).scale(&self.d)))
    }

    pub fn to_text(&self, names: &dyn Fn(usize) -> String) -> String {
        let mut s = format!("psatz n={} d={}\n", self.n, fmt_q(&self.d));
        for t in &self.cone {
            let f: Vec<String> = t.factors.iter().map(|i| format!("G{}", i)).collect();
            let sq = Poly::monomial(t.square.clone(), Q::one()).render(names);
            let _ = writeln!(s, "cone {} * [{}] * ({})^2", fmt_q(&t.coeff), f.join(" "), sq);
        }
        for t in &self.ideal {
            let _ = writeln!(s, "ideal ({}) * H{}", t.multiplier.render(names), t.member);
        }
        s
    }
}

/// True iff coefficients are admissible and the identity holds exactly.
pub fn psatz_verify(c: &PsatzCertificate, sets: &PsatzSets) -> Result<bool, PsatzError> {
    let total = c.assemble(sets)?;
    let admissible = c.cone.iter().all(|t| !t.coeff.is_negative()) && c.d.is_positive() && c.d.is_integer();
    Ok(admissible && total.is_zero())
}

fn multisets(k: usize, max: u32, out: &mut Vec<Vec<usize>>) {
    fn rec(start: usize, k: usize, left: u32, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        out.push(cur.clone());
        if left == 0 {
            return;
        }
        for i in start..k {
            cur.push(i);
            rec(i, k, left - 1, cur, out);
            cur.pop();
        }
    }
    rec(0, k, max, &mut Vec::new(), out);
}

/// Searches certificates whose cone part is a nonnegative combination of
/// products of at most `k` members of G times monomial squares, for
/// `k = 1..=k_max` and `n = 0..=2`. Coefficients are fitted by an exact LP.
pub fn psatz_search(sets: &PsatzSets, nvars: usize, k_max: u32, max_cols: usize) -> Option<PsatzCertificate> {
    psatz_search_until(sets, nvars, k_max, max_cols, None)
}

/// As `psatz_search`, stopping at `until`. Candidate shapes `(k, n)` are tried
/// in order of the degree they need, so cheap certificates come first.
pub fn psatz_search_until(
    sets: &PsatzSets,
    nvars: usize,
    k_max: u32,
    max_cols: usize,
    until: Option<Instant>,
) -> Option<PsatzCertificate> {
    let f = sets.f.iter().fold(Poly::one(), |acc, p| acc.mul(p));
    let ns: Vec<u32> = if sets.f.is_empty() { vec![0] } else { vec![0, 1, 2] };
    let mut shapes = Vec::new();
    for k in 1..=k_max.max(1) {
        let mut ms = Vec::new();
        multisets(sets.g.len(), k, &mut ms);
        let prods: Vec<(Vec<usize>, Poly)> = ms.into_iter().map(|m| {
            let p = product(&sets.g, &m);
            (m, p)
        }).collect();
        let top = prods.iter().map(|(_, p)| p.degree()).max().unwrap_or(0);
        for &n in &ns {
            let target = f.pow(2 * n);
            // products above the working degree are skipped by the fit
            for dmax in target.degree()..=top.max(target.degree()) {
                shapes.push((dmax, k, n, target.clone(), prods.clone()));
            }
        }
    }
    shapes.sort_by_key(|s| (s.0, s.1, s.2));
    for (dmax, _, n, target, prods) in shapes {
        if until.is_some_and(|d| Instant::now() >= d) {
            return None;
        }
        if let Some(c) = psatz_fit(sets, nvars, &prods, &target, n, dmax, max_cols, until) {
            return Some(c);
        }
    }
    None
}

#[allow(clippy::too_many_arguments)]
fn psatz_fit(
    sets: &PsatzSets,
    nvars: usize,
    prods: &[(Vec<usize>, Poly)],
    target: &Poly,
    n: u32,
    dmax: u32,
    max_cols: usize,
    until: Option<Instant>,
) -> Option<PsatzCertificate> {
    enum Col {
        Cone(usize, Monomial),
        Ideal(usize, Monomial, bool),
    }
    let mut cols: Vec<(Col, Poly)> = Vec::new();
    for (pi, (_, p)) in prods.iter().enumerate() {
        if p.is_zero() || p.degree() > dmax {
            continue;
        }
        let room = (dmax - p.degree()) / 2;
        for m in Monomial::all_up_to(nvars, room) {
            let poly = p.mul_monomial(&m.mul(&m));
            cols.push((Col::Cone(pi, m), poly));
        }
    }
    for (hi, h) in sets.h.iter().enumerate() {
        if h.degree() > dmax {
            continue;
        }
        for m in Monomial::all_up_to(nvars, dmax - h.degree()) {
            let poly = h.mul_monomial(&m);
            cols.push((Col::Ideal(hi, m.clone(), true), poly.clone()));
            cols.push((Col::Ideal(hi, m, false), poly.neg()));
        }
        if cols.len() > max_cols {
            return None;
        }
    }
    if cols.len() > max_cols {
        return None;
    }
    let mut rows: BTreeMap<Monomial, usize> = BTreeMap::new();
    for (_, p) in &cols {
        for m in p.terms.keys() {
            let l = rows.len();
            rows.entry(m.clone()).or_insert(l);
        }
    }
    for m in target.terms.keys() {
        let l = rows.len();
        rows.entry(m.clone()).or_insert(l);
    }
    let mut a = vec![vec![Q::zero(); cols.len()]; rows.len()];
    for (j, (_, p)) in cols.iter().enumerate() {
        for (m, c) in &p.terms {
            a[rows[m]][j] = c.clone();
        }
    }
    let mut b = vec![Q::zero(); rows.len()];
    for (m, c) in &target.terms {
        b[rows[m]] = -c.clone();
    }
    let x = lp::feasible_until(&a, &b, cols.len(), until)?;
    let mut cone = Vec::new();
    let mut ideal: BTreeMap<usize, Poly> = BTreeMap::new();
    for (j, (col, _)) in cols.iter().enumerate() {
        if x[j].is_zero() {
            continue;
        }
        match col {
            Col::Cone(pi, m) => cone.push(ConeTerm { coeff: x[j].clone(), factors: prods[*pi].0.clone(), square: m.clone() }),
            Col::Ideal(hi, m, pos) => {
                let c = if *pos { x[j].clone() } else { -x[j].clone() };
                let e = ideal.entry(*hi).or_insert_with(Poly::zero);
                *e = e.add(&Poly::monomial(m.clone(), c));
            }
        }
    }
    // clear denominators so that d is a positive integer
    let mut all: Vec<Q> = cone.iter().map(|t| t.coeff.clone()).collect();
    for p in ideal.values() {
        all.extend(p.terms.values().cloned());
    }
    let l = Q::from_integer(lcm_denoms(all.iter()));
    for t in &mut cone {
        t.coeff *= &l;
    }
    let ideal = ideal
        .into_iter()
        .filter(|(_, p)| !p.is_zero())
        .map(|(member, p)| IdealTerm { multiplier: p.scale(&l), member })
        .collect();
    let cert = PsatzCertificate { cone, ideal, n, d: l };
    debug_assert_eq!(psatz_verify(&cert, sets), Ok(true));
    Some(cert)
}

// ---------------------------------------------------------------- numeric search

struct NumSys {
    rows: Vec<(FastPoly, PRel, Vec<FastPoly>)>,
    n: usize,
}

impl NumSys {
    fn new(red: &Reduced) -> NumSys {
        NumSys {
            rows: red
                .rows
                .iter()
                .map(|r| (FastPoly::new(&r.poly), r.rel, (0..red.nvars).map(|v| FastPoly::new(&r.poly.derivative(v))).collect()))
                .collect(),
            n: red.nvars,
        }
    }

    fn residuals(&self, y: &[f64], margin: f64, jac: bool) -> (DVector<f64>, DMatrix<f64>) {
        let m = self.rows.len();
        let mut r = DVector::zeros(m);
        let mut j = DMatrix::zeros(m, self.n);
        for (i, (p, rel, d)) in self.rows.iter().enumerate() {
            let v = p.eval(y);
            let (res, active) = match rel {
                PRel::Eq => (v, true),
                PRel::Ge => (v.min(0.0), v < 0.0),
                PRel::Gt => ((v - margin).min(0.0), v < margin),
                PRel::Ne => (0.0, false),
            };
            r[i] = res;
            if jac && active {
                for k in 0..self.n {
                    j[(i, k)] = d[k].eval(y);
                }
            }
        }
        (r, j)
    }

    /// Largest violation measured against `tol`-relaxed relations.
    fn max_residual(&self, y: &[f64]) -> f64 {
        self.rows.iter().map(|(p, rel, _)| violation(*rel, p.eval(y), 0.0)).fold(0.0, f64::max)
    }

    fn accepts(&self, y: &[f64], tol: f64) -> bool {
        self.rows.iter().all(|(p, rel, _)| {
            let v = p.eval(y);
            match rel {
                PRel::Eq => v.abs() <= tol,
                PRel::Ge => v >= -tol,
                PRel::Gt => v >= tol,
                PRel::Ne => v.abs() >= tol,
            }
        })
    }
}

fn levenberg_marquardt(ns: &NumSys, start: &[f64], budget: &PolyBudget) -> Vec<f64> {
    let mut y = DVector::from_column_slice(start);
    let mut lambda = 1e-3;
    let (mut r, mut j) = ns.residuals(y.as_slice(), budget.margin, true);
    let mut cost = r.norm_squared();
    for _ in 0..budget.lm_iters {
        if cost < 1e-30 {
            break;
        }
        let jt = j.transpose();
        let jtj = &jt * &j;
        let g = &jt * &r;
        let mut a = jtj.clone();
        for k in 0..ns.n {
            a[(k, k)] += lambda * (1.0 + jtj[(k, k)]);
        }
        let Some(step) = a.lu().solve(&(-g)) else { break };
        let cand = &y + &step;
        let (rc, jc) = ns.residuals(cand.as_slice(), budget.margin, true);
        let cc = rc.norm_squared();
        if cc < cost {
            y = cand;
            r = rc;
            j = jc;
            cost = cc;
            lambda = (lambda / 3.0).max(1e-15);
        } else {
            lambda *= 4.0;
            if lambda > 1e12 {
                break;
            }
        }
    }
    y.as_slice().to_vec()
}

fn dirichlet(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    let e: Vec<f64> = (0..n).map(|_| -(1.0 - rng.gen::<f64>()).ln()).collect();
    let s: f64 = e.iter().sum();
    e.into_iter().map(|v| v / s).collect()
}

fn try_rationalize(sys: &PolySystem, y: &[f64]) -> Option<Vec<Q>> {
    for den in [8i64, 64, 1000, 10_000, 1_000_000] {
        let yq: Vec<Q> = y.iter().map(|v| approx_rational(*v, den)).collect();
        let x = lift(&yq);
        if sys.holds(&x) {
            return Some(x);
        }
    }
    None
}

// ---------------------------------------------------------------- verdicts

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum UnsatCert {
    Farkas { system: LinSystem, trace: UnsatTrace },
    Conflict { system: PolySystem, conflict: Conflict },
    PruneTree { system: PolySystem, tree: PruneTree },
    Psatz { system: PolySystem, cert: PsatzCertificate },
}

impl UnsatCert {
    pub fn kind(&self) -> &'static str {
        match self {
            UnsatCert::Farkas { .. } => "farkas",
            UnsatCert::Conflict { .. } => "conflict",
            UnsatCert::PruneTree { .. } => "prune-tree",
            UnsatCert::Psatz { .. } => "psatz",
        }
    }

    /// Independent replay of the certificate against its system.
    pub fn check(&self) -> bool {
        match self {
            UnsatCert::Farkas { system, trace } => verify_farkas(system, &trace_multipliers(trace)),
            UnsatCert::Conflict { system, conflict } => reduce(system).is_some_and(|r| conflict_holds(&r, conflict)),
            UnsatCert::PruneTree { system, tree } => reduce(system).is_some_and(|r| replay_prune_tree(&r, tree)),
            UnsatCert::Psatz { system, cert } => psatz_verify(cert, &psatz_sets(system)).unwrap_or(false),
        }
    }

    pub fn to_text(&self) -> String {
        match self {
            UnsatCert::Farkas { trace, .. } => {
                let m: Vec<String> = trace.multipliers.iter().map(|(i, c)| format!("{}*row{}", c, i)).collect();
                format!("farkas: {} gives {}\n", m.join(" + "), trace.contradiction)
            }
            UnsatCert::Conflict { conflict, .. } => {
                format!("conflict: row{} = {} * row{}\n", conflict.b, fmt_q(&conflict.ratio), conflict.a)
            }
            UnsatCert::PruneTree { system, tree } => match reduce(system) {
                Some(r) => format!("prune tree ({} leaves)\n{}", tree.leaves(), tree.to_text(&r)),
                None => String::new(),
            },
            UnsatCert::Psatz { system, cert } => {
                let names = |v: usize| format!("x[{}]", system.vars[v]);
                cert.to_text(&names)
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct NumericWitness {
    pub letters: Vec<String>,
    pub states: Vec<String>,
    pub x: Vec<f64>,
    pub residual: f64,
}

impl NumericWitness {
    pub fn prob(&self, b: &BoolExpr) -> Result<f64, SemError> {
        let idx = crate::semantics::letter_index(&self.letters);
        let c = CBool::compile(b, &idx)?;
        let e = Expander::new(&self.letters);
        Ok(e.states.iter().zip(&self.x).filter(|(v, _)| c.eval(**v)).map(|(_, w)| *w).sum())
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct BudgetReport {
    pub cases: usize,
    pub notes: Vec<String>,
}

#[derive(Clone, Debug, PartialEq)]
pub enum PolyVerdict {
    SatRational(Model),
    SatNumeric(NumericWitness),
    /// One certificate per disjunct (and sign case of `≠` rows).
    UnsatCertified(Vec<UnsatCert>),
    Unknown(BudgetReport),
}

impl PolyVerdict {
    pub fn label(&self) -> &'static str {
        match self {
            PolyVerdict::SatRational(_) => "SAT",
            PolyVerdict::SatNumeric(_) => "SAT (numeric)",
            PolyVerdict::UnsatCertified(_) => "UNSAT",
            PolyVerdict::Unknown(_) => "UNKNOWN",
        }
    }
}

#[derive(Debug, Error)]
pub enum PolyError {
    #[error(transparent)]
    Sem(#[from] SemError),
}

enum CaseOutcome {
    Rational(Vec<Q>),
    Unsat(UnsatCert),
    Numeric(Vec<f64>, f64),
    Unknown(String),
}

/// Splits `≠` rows into their two strict halves.
fn sign_cases(sys: &PolySystem) -> Vec<PolySystem> {
    let mut out = vec![PolySystem { vars: sys.vars.clone(), rows: Vec::new() }];
    for r in &sys.rows {
        if r.rel == PRel::Ne {
            let mut next = Vec::with_capacity(out.len() * 2);
            for s in &out {
                for p in [r.poly.clone(), r.poly.neg()] {
                    let mut t = s.clone();
                    t.rows.push(PolyRow { poly: p, rel: PRel::Gt });
                    next.push(t);
                }
            }
            out = next;
        } else {
            for s in &mut out {
                s.rows.push(r.clone());
            }
        }
    }
    out
}

/// Decision pipeline for one simplex system without `≠` rows.
fn solve_case(sys: &PolySystem, budget: &PolyBudget, dl: &Deadline, rng: &mut ChaCha8Rng) -> CaseOutcome {
    if let Some(lin) = sys.to_lin() {
        return match lin_sat(&lin) {
            SatResult::Sat(x) => CaseOutcome::Rational(x),
            SatResult::Unsat(trace) => CaseOutcome::Unsat(UnsatCert::Farkas { system: lin, trace }),
        };
    }
    if let Some(x) = rational_search_dl(sys, budget, dl) {
        return CaseOutcome::Rational(x);
    }
    let Some(red) = reduce(sys) else { return CaseOutcome::Unknown("not a simplex system".into()) };
    if let Some(conflict) = find_conflict(&red) {
        return CaseOutcome::Unsat(UnsatCert::Conflict { system: sys.clone(), conflict });
    }
    let mut hints = Vec::new();
    match bp_dl(&red, budget.bp_depth, budget.bp_max_boxes, dl) {
        BpOutcome::Unsat(tree) => return CaseOutcome::Unsat(UnsatCert::PruneTree { system: sys.clone(), tree }),
        BpOutcome::SatBoxHint { point, .. } => hints.push(point.iter().map(to_f64).collect::<Vec<f64>>()),
        BpOutcome::Unknown { .. } => {}
    }
    if !dl.passed() {
        let sets = psatz_sets(sys);
        if let Some(cert) = psatz_search_until(&sets, sys.vars.len(), budget.psatz_degree, budget.psatz_max_cols, dl.0) {
            return CaseOutcome::Unsat(UnsatCert::Psatz { system: sys.clone(), cert });
        }
    }
    let ns = NumSys::new(&red);
    let mut best: Option<(Vec<f64>, f64)> = None;
    for i in 0..budget.restarts.max(1) {
        if dl.passed() {
            break;
        }
        let start = if i < hints.len() { hints[i].clone() } else { dirichlet(rng, red.nvars + 1)[..red.nvars].to_vec() };
        let y = levenberg_marquardt(&ns, &start, budget);
        if y.iter().all(|v| v.is_finite()) && ns.accepts(&y, budget.tol) {
            if let Some(x) = try_rationalize(sys, &y) {
                return CaseOutcome::Rational(x);
            }
            let res = ns.max_residual(&y);
            if best.as_ref().is_none_or(|(_, r)| res < *r) {
                best = Some((y, res));
            }
            break;
        }
    }
    match best {
        Some((y, res)) => CaseOutcome::Numeric(lift_f64(&y), res),
        None => CaseOutcome::Unknown(format!("no verdict within budget ({} restarts)", budget.restarts)),
    }
}

/// Satisfiability for the multiplicative languages (any formula is accepted;
/// linear disjuncts go through Fourier-Motzkin).
pub fn sat_multiplicative(f: &Formula, budget: &PolyBudget) -> Result<PolyVerdict, PolyError> {
    let letters = free_letters(f);
    let ex = Expander::new(&letters);
    let dl = Deadline::new(budget.timeout_ms);
    let mut rng = ChaCha8Rng::seed_from_u64(budget.seed);
    let mut certs = Vec::new();
    let mut numeric: Option<NumericWitness> = None;
    let mut report = BudgetReport::default();
    for conj in dnf(f) {
        let sys = ex.poly_system(&conj)?;
        for case in sign_cases(&sys) {
            report.cases += 1;
            match solve_case(&case, budget, &dl, &mut rng) {
                CaseOutcome::Rational(x) => {
                    let m = ex.model_from(&x)?;
                    assert!(satisfies(&m, f)?, "rational witness failed re-verification");
                    return Ok(PolyVerdict::SatRational(m));
                }
                CaseOutcome::Unsat(c) => {
                    debug_assert!(c.check());
                    certs.push(c);
                }
                CaseOutcome::Numeric(x, residual) => {
                    if numeric.is_none() {
                        let states = ex.states.iter().map(|v| valuation_key(&letters, *v)).collect();
                        numeric = Some(NumericWitness { letters: letters.clone(), states, x, residual });
                    }
                }
                CaseOutcome::Unknown(why) => report.notes.push(why),
            }
        }
    }
    if let Some(w) = numeric {
        return Ok(PolyVerdict::SatNumeric(w));
    }
    if report.notes.is_empty() {
        return Ok(PolyVerdict::UnsatCertified(certs));
    }
    Ok(PolyVerdict::Unknown(report))
}

/// Variables with a nonzero coefficient somewhere in the system.
pub fn used_vars(sys: &PolySystem) -> BTreeSet<usize> {
    sys.rows.iter().flat_map(|r| r.poly.vars()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::num::qi;
    use crate::syntax::{parse_bool, parse_formula};

    #[test]
    fn uniform_independence() {
        let f = parse_formula("indep(A, B)").unwrap();
        let PolyVerdict::SatRational(m) = sat_multiplicative(&f, &PolyBudget::default()).unwrap() else { panic!() };
        assert!(m.weights.values().all(|w| *w == q(1, 4)));
    }

    #[test]
    fn square_exceeds() {
        let f = parse_formula("P(A) * P(A) > P(A)").unwrap();
        let v = sat_multiplicative(&f, &PolyBudget::default()).unwrap();
        let PolyVerdict::UnsatCertified(c) = v else { panic!("{:?}", v) };
        assert!(c.iter().all(|c| c.check()));
    }

    #[test]
    fn intro_numeric() {
        let f = parse_formula("P(A & B) = P(~(A & B)) && P(A |: B) = P(B)").unwrap();
        let PolyVerdict::SatNumeric(w) = sat_multiplicative(&f, &PolyBudget::default()).unwrap() else { panic!() };
        let pb = w.prob(&parse_bool("B").unwrap()).unwrap();
        assert!((pb - 0.5f64.sqrt()).abs() < 1e-6, "{}", pb);
        assert!(w.residual <= 1e-9);
    }

    #[test]
    fn farkas_fixture() {
        let x = Poly::var(0);
        let sets = PsatzSets { f: vec![], g: vec![x.clone(), x.neg().sub(&Poly::one())], h: vec![] };
        let c = PsatzCertificate {
            cone: vec![
                ConeTerm { coeff: qi(1), factors: vec![0], square: Monomial::one() },
                ConeTerm { coeff: qi(1), factors: vec![1], square: Monomial::one() },
            ],
            ideal: vec![],
            n: 0,
            d: qi(1),
        };
        assert_eq!(psatz_verify(&c, &sets), Ok(true));
        let mut bad = c.clone();
        bad.cone[0].coeff = qi(2);
        assert_eq!(psatz_verify(&bad, &sets), Ok(false));
        let found = psatz_search(&sets, 1, 1, 1000).unwrap();
        assert_eq!(psatz_verify(&found, &sets), Ok(true));
    }

    #[test]
    fn equality_strict_conflict() {
        let red = Reduced {
            nvars: 1,
            rows: vec![
                PolyRow { poly: Poly::var(0).sub(&Poly::constant(q(1, 2))), rel: PRel::Eq },
                PolyRow { poly: Poly::var(0).sub(&Poly::constant(q(1, 2))), rel: PRel::Gt },
            ],
        };
        assert!(!matches!(branch_and_prune(&red, 8, 10_000), BpOutcome::Unsat(_)));
        assert!(find_conflict(&red).is_some());
    }

    #[test]
    fn square_pruned_at_root() {
        let x = Poly::var(0);
        let red = Reduced { nvars: 1, rows: vec![PolyRow { poly: x.mul(&x).sub(&x), rel: PRel::Gt }] };
        let BpOutcome::Unsat(t) = branch_and_prune(&red, 3, 100) else { panic!() };
        assert!(replay_prune_tree(&red, &t));
    }

    #[test]
    fn psatz_square_exceeds() {
        let f = parse_formula("P(A) * P(A) > P(A)").unwrap();
        let ex = Expander::new(&free_letters(&f));
        let sys = ex.poly_system(&dnf(&f)[0]).unwrap();
        let sets = psatz_sets(&sys);
        assert!(psatz_search(&sets, 2, 1, 4000).is_none());
        let c = psatz_search(&sets, 2, 3, 4000).unwrap();
        assert_eq!(psatz_verify(&c, &sets), Ok(true));
    }
}
