//! Exact Fourier-Motzkin elimination with native strict inequalities,
//! witness extraction by back-substitution and small-support models.

use std::collections::{BTreeMap, BTreeSet};

use num_traits::{One, Signed, Zero};
use serde::Serialize;
use thiserror::Error;

use crate::num::{fmt_q, qi, simplest_between, Q};
use crate::normalize::{dnf, expand, Expanded, Expander, LinRow, LinSystem, Rel};
use crate::semantics::{satisfies, Model, SemError};
use crate::syntax::{classify, free_letters, ClassifyError, Formula, LanguageTag};

/// A row together with its multipliers over the rows of the input system.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DRow {
    pub coeffs: BTreeMap<usize, Q>,
    pub rel: Rel,
    pub rhs: Q,
    pub deriv: BTreeMap<usize, Q>,
    // phase-two base rows, for Chernikov's redundancy rule
    hist: BTreeSet<usize>,
}

impl DRow {
    fn from_row(i: usize, r: &LinRow) -> DRow {
        DRow {
            coeffs: r.coeffs.clone(),
            rel: r.rel,
            rhs: r.rhs.clone(),
            deriv: [(i, Q::one())].into_iter().collect(),
            hist: BTreeSet::new(),
        }
    }

    fn scale(&mut self, k: &Q) {
        for c in self.coeffs.values_mut() {
            *c *= k;
        }
        for c in self.deriv.values_mut() {
            *c *= k;
        }
        self.rhs *= k;
    }

    /// `self + k·o`; relation is the weaker of the two unless one is an equality.
    fn add_scaled(&self, k: &Q, o: &DRow) -> DRow {
        let mut coeffs = self.coeffs.clone();
        for (v, c) in &o.coeffs {
            let e = coeffs.entry(*v).or_insert_with(Q::zero);
            *e += k * c;
        }
        coeffs.retain(|_, c| !c.is_zero());
        let mut deriv = self.deriv.clone();
        for (v, c) in &o.deriv {
            let e = deriv.entry(*v).or_insert_with(Q::zero);
            *e += k * c;
        }
        deriv.retain(|_, c| !c.is_zero());
        let rel = match (self.rel, o.rel) {
            (Rel::Gt, _) | (_, Rel::Gt) => Rel::Gt,
            (Rel::Eq, Rel::Eq) => Rel::Eq,
            _ => Rel::Ge,
        };
        DRow { coeffs, rel, rhs: &self.rhs + k * &o.rhs, deriv, hist: self.hist.union(&o.hist).cloned().collect() }
    }

    fn ground_holds(&self) -> bool {
        let z = Q::zero();
        match self.rel {
            Rel::Eq => z == self.rhs,
            Rel::Ge => z >= self.rhs,
            Rel::Gt => z > self.rhs,
        }
    }

    pub fn to_row(&self) -> LinRow {
        LinRow::new(self.coeffs.clone(), self.rel, self.rhs.clone())
    }
}

/// Scales so the first coefficient has absolute value 1 (equalities also get
/// a positive leading sign) and removes duplicates, keeping the tighter row.
fn normalize_rows(rows: Vec<DRow>) -> Vec<DRow> {
    let mut by_key: BTreeMap<(Vec<(usize, Q)>, Option<Q>), DRow> = BTreeMap::new();
    let mut order = Vec::new();
    for mut r in rows {
        if let Some((_, c)) = r.coeffs.iter().next() {
            let c = c.clone();
            let k = if r.rel == Rel::Eq { Q::one() / &c } else { Q::one() / c.abs() };
            r.scale(&k);
        }
        // equalities with different right-hand sides stay separate and
        // contradict each other on substitution
        let tag = if r.rel == Rel::Eq { Some(r.rhs.clone()) } else { None };
        let key = (r.coeffs.iter().map(|(a, b)| (*a, b.clone())).collect::<Vec<_>>(), tag);
        match by_key.get_mut(&key) {
            None => {
                order.push(key.clone());
                by_key.insert(key, r);
            }
            Some(old) => {
                if r.rel == Rel::Eq {
                    // same equality twice
                } else if r.rhs > old.rhs || (r.rhs == old.rhs && r.rel == Rel::Gt && old.rel == Rel::Ge) {
                    *old = r;
                }
            }
        }
    }
    order.into_iter().filter_map(|k| by_key.remove(&k)).collect()
}

/// Rows mentioning `v` at the time it was eliminated.
#[derive(Clone, Debug)]
struct Step {
    var: usize,
    rows: Vec<DRow>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct UnsatTrace {
    /// Variables in elimination order.
    pub eliminated: Vec<usize>,
    /// The contradictory ground row, e.g. `0 > 1`.
    pub contradiction: String,
    /// Multipliers over input rows whose combination yields the contradiction.
    pub multipliers: Vec<(usize, String)>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SatResult {
    Sat(Vec<Q>),
    Unsat(UnsatTrace),
}

impl SatResult {
    pub fn is_sat(&self) -> bool {
        matches!(self, SatResult::Sat(_))
    }
}

fn occurrences(rows: &[DRow]) -> BTreeMap<usize, usize> {
    let mut occ = BTreeMap::new();
    for r in rows {
        for v in r.coeffs.keys() {
            *occ.entry(*v).or_insert(0) += 1;
        }
    }
    occ
}

enum Outcome {
    Done { steps: Vec<Step> },
    Contradiction { steps: Vec<Step>, row: DRow },
}

fn check_ground(rows: &mut Vec<DRow>) -> Option<DRow> {
    let mut bad = None;
    rows.retain(|r| {
        if r.coeffs.is_empty() {
            if !r.ground_holds() && bad.is_none() {
                bad = Some(r.clone());
            }
            false
        } else {
            true
        }
    });
    bad
}

/// One elimination step; returns the new rows and the rows that mentioned `v`.
fn eliminate_rows(rows: Vec<DRow>, v: usize, chernikov: Option<usize>) -> (Vec<DRow>, Vec<DRow>) {
    let (with, without): (Vec<DRow>, Vec<DRow>) = rows.into_iter().partition(|r| r.coeffs.contains_key(&v));
    let mut out = without;
    if let Some(ei) = with.iter().position(|r| r.rel == Rel::Eq) {
        // case (a): substitute the equality into every other row
        let e = &with[ei];
        let a = e.coeffs[&v].clone();
        for (i, r) in with.iter().enumerate() {
            if i == ei {
                continue;
            }
            let k = -(&r.coeffs[&v] / &a);
            let mut nr = r.add_scaled(&k, e);
            // substitution keeps the row's own relation
            nr.rel = r.rel;
            nr.coeffs.remove(&v);
            out.push(nr);
        }
    } else {
        // case (b): pair lower and upper bounds; one-sided rows (c, d) vanish
        let lower: Vec<&DRow> = with.iter().filter(|r| r.coeffs[&v].is_positive()).collect();
        let upper: Vec<&DRow> = with.iter().filter(|r| r.coeffs[&v].is_negative()).collect();
        for l in &lower {
            for u in &upper {
                let a = &l.coeffs[&v];
                let c = -&u.coeffs[&v];
                let mut nl = (*l).clone();
                nl.scale(&c);
                let mut nr = nl.add_scaled(a, u);
                nr.coeffs.remove(&v);
                if let Some(k) = chernikov {
                    if nr.hist.len() > k + 1 {
                        continue;
                    }
                }
                out.push(nr);
            }
        }
    }
    (normalize_rows(out), with)
}

fn run_fm(sys: &LinSystem, use_chernikov: bool) -> Outcome {
    let mut rows: Vec<DRow> = sys.rows.iter().enumerate().map(|(i, r)| DRow::from_row(i, r)).collect();
    rows = normalize_rows(rows);
    let mut steps = Vec::new();
    // Chernikov's rule is only valid for pure inequality systems, so it is
    // switched on after all equalities have been substituted away.
    let mut phase2_elims: Option<usize> = None;
    loop {
        if let Some(bad) = check_ground(&mut rows) {
            return Outcome::Contradiction { steps, row: bad };
        }
        let occ = occurrences(&rows);
        if occ.is_empty() {
            return Outcome::Done { steps };
        }
        let has_eq = rows.iter().any(|r| r.rel == Rel::Eq);
        if use_chernikov && !has_eq && phase2_elims.is_none() {
            for (i, r) in rows.iter_mut().enumerate() {
                r.hist = [i].into_iter().collect();
            }
            phase2_elims = Some(0);
        }
        let v = if has_eq {
            // eliminate a variable of some equality first, fewest occurrences
            let eq_vars: BTreeSet<usize> = rows.iter().filter(|r| r.rel == Rel::Eq).flat_map(|r| r.coeffs.keys().cloned()).collect();
            *eq_vars.iter().min_by_key(|v| (occ[v], **v)).unwrap()
        } else {
            *occ.iter().min_by_key(|(v, n)| (**n, **v)).unwrap().0
        };
        let ch = phase2_elims.map(|k| k + 1);
        let (nrows, with) = eliminate_rows(rows, v, ch);
        if let Some(k) = phase2_elims.as_mut() {
            *k += 1;
        }
        steps.push(Step { var: v, rows: with });
        rows = nrows;
    }
}

/// Eliminates `v` from `s`; the result's solution set is the projection.
pub fn fm_eliminate(s: &LinSystem, v: usize) -> LinSystem {
    let rows: Vec<DRow> = s.rows.iter().enumerate().map(|(i, r)| DRow::from_row(i, r)).collect();
    let (nrows, _) = eliminate_rows(rows, v, None);
    LinSystem { vars: s.vars.clone(), rows: nrows.iter().map(|r| r.to_row()).collect() }
}

#[derive(Default)]
struct Bound {
    val: Option<Q>,
    strict: bool,
}

fn pick_value(lo: &Bound, hi: &Bound, eq: Option<Q>) -> Q {
    if let Some(e) = eq {
        return e;
    }
    let z = Q::zero();
    let zero_ok = lo.val.as_ref().map_or(true, |l| if lo.strict { z > *l } else { z >= *l })
        && hi.val.as_ref().map_or(true, |h| if hi.strict { z < *h } else { z <= *h });
    if zero_ok {
        return z;
    }
    match (&lo.val, &hi.val) {
        (Some(l), None) => {
            if lo.strict {
                l.floor() + Q::one()
            } else {
                l.clone()
            }
        }
        (None, Some(h)) => {
            if hi.strict {
                h.ceil() - Q::one()
            } else {
                h.clone()
            }
        }
        (Some(l), Some(h)) => {
            if !lo.strict {
                l.clone()
            } else if !hi.strict {
                h.clone()
            } else if l < h {
                simplest_between(l, h)
            } else {
                // empty interval; the caller's witness check rejects it
                l.clone()
            }
        }
        (None, None) => z,
    }
}

fn back_substitute(nvars: usize, steps: &[Step]) -> Vec<Q> {
    let mut x = vec![Q::zero(); nvars];
    for st in steps.iter().rev() {
        let v = st.var;
        let mut lo = Bound::default();
        let mut hi = Bound::default();
        let mut eq = None;
        for r in &st.rows {
            let a = &r.coeffs[&v];
            let rest: Q = r.coeffs.iter().filter(|(i, _)| **i != v).map(|(i, c)| c * &x[*i]).sum();
            let b = (&r.rhs - rest) / a;
            match r.rel {
                Rel::Eq => {
                    eq.get_or_insert(b);
                }
                rel => {
                    let strict = rel == Rel::Gt;
                    let target = if a.is_positive() { &mut lo } else { &mut hi };
                    let better = match &target.val {
                        None => true,
                        Some(cur) => {
                            if a.is_positive() {
                                b > *cur || (b == *cur && strict)
                            } else {
                                b < *cur || (b == *cur && strict)
                            }
                        }
                    };
                    if better {
                        target.val = Some(b);
                        target.strict = strict;
                    }
                }
            }
        }
        x[v] = pick_value(&lo, &hi, eq);
    }
    x
}

fn trace(sys: &LinSystem, steps: &[Step], row: &DRow) -> UnsatTrace {
    let _ = sys;
    UnsatTrace {
        eliminated: steps.iter().map(|s| s.var).collect(),
        contradiction: format!("0 {} {}", row.rel.symbol(), fmt_q(&row.rhs)),
        multipliers: row.deriv.iter().map(|(i, c)| (*i, fmt_q(c))).collect(),
    }
}

/// Checks that the multipliers combine the rows of `sys` into a false ground row.
pub fn verify_farkas(sys: &LinSystem, multipliers: &BTreeMap<usize, Q>) -> bool {
    let mut coeffs: BTreeMap<usize, Q> = BTreeMap::new();
    let mut rhs = Q::zero();
    let mut strict = false;
    for (i, k) in multipliers {
        let Some(r) = sys.rows.get(*i) else { return false };
        if r.rel != Rel::Eq && k.is_negative() {
            return false;
        }
        if r.rel == Rel::Gt && k.is_positive() {
            strict = true;
        }
        for (v, c) in &r.coeffs {
            *coeffs.entry(*v).or_insert_with(Q::zero) += k * c;
        }
        rhs += k * &r.rhs;
    }
    if coeffs.values().any(|c| !c.is_zero()) {
        return false;
    }
    let all_eq = multipliers.iter().all(|(i, k)| k.is_zero() || sys.rows[*i].rel == Rel::Eq);
    if all_eq {
        !rhs.is_zero()
    } else if strict {
        !rhs.is_negative()
    } else {
        rhs.is_positive()
    }
}

/// Decides a linear system exactly. Sat witnesses are checked against every row.
pub fn lin_sat(s: &LinSystem) -> SatResult {
    for chern in [true, false] {
        match run_fm(s, chern) {
            Outcome::Contradiction { steps, row } => return SatResult::Unsat(trace(s, &steps, &row)),
            Outcome::Done { steps } => {
                let x = back_substitute(s.vars.len(), &steps);
                if s.holds(&x) {
                    return SatResult::Sat(x);
                }
            }
        }
    }
    // both runs are complete projections; a failed witness here means a bug
    panic!("back-substitution produced a non-solution");
}

/// Multipliers of an Unsat trace as rationals.
pub fn trace_multipliers(t: &UnsatTrace) -> BTreeMap<usize, Q> {
    t.multipliers.iter().map(|(i, c)| (*i, crate::num::parse_q(c).expect("trace multiplier"))).collect()
}

#[derive(Debug, Error)]
pub enum LinError {
    #[error("formula is in {0}, outside the additive fragment")]
    WrongFragment(&'static str),
    #[error(transparent)]
    Classify(#[from] ClassifyError),
    #[error(transparent)]
    Sem(#[from] SemError),
}

#[derive(Clone, Debug)]
pub enum FormulaSat {
    Sat(Model),
    /// One trace per disjunct.
    Unsat(Vec<UnsatTrace>),
}

impl FormulaSat {
    pub fn is_sat(&self) -> bool {
        matches!(self, FormulaSat::Sat(_))
    }
}

/// Rewrites same-condition formulas into comparative ones and rejects
/// everything outside the additive fragment.
pub fn additive_form(f: &Formula) -> Result<Formula, LinError> {
    let tag = classify(f)?;
    match tag {
        LanguageTag::Comp | LanguageTag::Add => Ok(f.clone()),
        LanguageTag::SameCond => Ok(crate::reductions::same_cond_to_comp(f).expect("classified same_cond")),
        t => Err(LinError::WrongFragment(t.name())),
    }
}

/// Satisfiability for `L_comp`, `L_add` and `L_same_cond`, one linear system per disjunct.
pub fn sat_additive(f: &Formula) -> Result<FormulaSat, LinError> {
    let g = additive_form(f)?;
    let letters = free_letters(f);
    let mut traces = Vec::new();
    for conj in dnf(&g) {
        let Expanded::Lin(sys) = expand(&conj, &letters)? else {
            unreachable!("additive conjunct expanded to a polynomial system")
        };
        match lin_sat(&sys) {
            SatResult::Sat(x) => {
                let m = Expander::new(&letters).model_from(&x)?;
                assert!(satisfies(&m, f)?, "witness failed re-verification");
                return Ok(FormulaSat::Sat(m));
            }
            SatResult::Unsat(t) => traces.push(t),
        }
    }
    Ok(FormulaSat::Unsat(traces))
}

/// Greedily forces state weights to zero while the chosen disjunct stays
/// satisfiable. The result has at most (literals in that disjunct) + 1
/// nonzero entries.
pub fn minimize_support(f: &Formula, witness: &Model) -> Model {
    let Ok(g) = additive_form(f) else { return witness.clone() };
    let letters = free_letters(f);
    let e = Expander::new(&letters);
    let Ok(w) = e.weights_of(witness) else { return witness.clone() };
    for conj in dnf(&g) {
        let Ok(Expanded::Lin(mut sys)) = expand(&conj, &letters) else { continue };
        if !sys.holds(&w) {
            continue;
        }
        let mut x = w.clone();
        let mut changed = true;
        while changed {
            changed = false;
            for v in 0..x.len() {
                if x[v].is_zero() {
                    continue;
                }
                let mut trial = sys.clone();
                trial.rows.push(LinRow::new([(v, Q::one())].into_iter().collect(), Rel::Eq, Q::zero()));
                if let SatResult::Sat(nx) = lin_sat(&trial) {
                    sys = trial;
                    x = nx;
                    changed = true;
                }
            }
        }
        if let Ok(m) = e.model_from(&x) {
            if satisfies(&m, f).unwrap_or(false) {
                return m;
            }
        }
    }
    witness.clone()
}

/// Largest denominator among witness entries.
pub fn max_denominator(x: &[Q]) -> Q {
    x.iter().map(|v| Q::from_integer(v.denom().clone())).max().unwrap_or_else(|| qi(1))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::num::q;
    use crate::syntax::parse_formula;

    fn sys(t: &str) -> LinSystem {
        LinSystem::from_text(t).unwrap()
    }

    #[test]
    fn eliminate_pair() {
        let s = sys("# vars: x, y\nx[y] - x[x] >= 0\nx[x] > 0");
        let r = fm_eliminate(&s, 0);
        assert_eq!(r.rows.len(), 1);
        assert_eq!(r.rows[0].render(&r.vars), "x[y] > 0");
    }

    #[test]
    fn eliminate_equality() {
        let s = sys("# vars: x, z\nx[x] - 2*x[z] = 0\nx[x] + x[z] = 1");
        let r = fm_eliminate(&s, 0);
        assert_eq!(r.rows.len(), 1);
        assert_eq!(r.rows[0].coeffs[&1], q(1, 1));
        assert_eq!(r.rows[0].rhs, q(1, 3));
    }

    #[test]
    fn infeasible_pair() {
        let s = sys("# vars: x\nx[x] > 1\n-x[x] > 0");
        let r = fm_eliminate(&s, 0);
        assert!(r.rows[0].coeffs.is_empty());
        assert!(!r.rows[0].holds(&[]));
        let SatResult::Unsat(t) = lin_sat(&s) else { panic!() };
        assert!(verify_farkas(&s, &trace_multipliers(&t)));
    }

    #[test]
    fn two_thirds() {
        let f = parse_formula("P(A) = P(~A) + P(~A)").unwrap();
        let FormulaSat::Sat(m) = sat_additive(&f).unwrap() else { panic!() };
        assert_eq!(m.prob(&crate::syntax::parse_bool("A").unwrap()).unwrap(), q(2, 3));
    }

    #[test]
    fn dist_violations() {
        for t in ["P(A) > P(T)", "P(A & B) > P(A)"] {
            assert!(!sat_additive(&parse_formula(t).unwrap()).unwrap().is_sat(), "{}", t);
        }
    }

    #[test]
    fn multiplicative_rejected() {
        assert!(matches!(sat_additive(&parse_formula("indep(A, B)").unwrap()), Err(LinError::WrongFragment("ind"))));
    }

    #[test]
    fn support_small() {
        let f = parse_formula("P(A) > P(B)").unwrap();
        let FormulaSat::Sat(w) = sat_additive(&f).unwrap() else { panic!() };
        let r = minimize_support(&f, &w);
        assert!(satisfies(&r, &f).unwrap());
        assert!(r.support() <= 2);
    }
}
