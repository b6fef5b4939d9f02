//! Finite models with exact rational weights, and the satisfaction relation.

use std::collections::{BTreeMap, HashMap};

use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::num::{fmt_q, parse_q, Q};
use crate::syntax::{classify, Atom, BoolExpr, ConfirmDir, Formula, LanguageTag, Term};

/// Bit `i` set means `letters[i]` is true.
pub type Valuation = u128;

pub const MAX_LETTERS: usize = 128;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Prob,
    Count,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Model {
    pub mode: Mode,
    pub letters: Vec<String>,
    /// Sparse: absent valuations have weight 0.
    pub weights: BTreeMap<Valuation, Q>,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum SemError {
    #[error("unknown letter {0}")]
    UnknownLetter(String),
    #[error("conditional term is not evaluable as a number: {0}")]
    CondTermNotEvaluable(String),
    #[error("formula outside the additive fragment")]
    NotAdditive,
    #[error("invalid model: {0}")]
    Invalid(String),
}

/// A Boolean expression with letters resolved to bit positions.
#[derive(Clone, Debug)]
pub enum CBool {
    Top,
    Bot,
    Var(usize),
    Not(Box<CBool>),
    And(Box<CBool>, Box<CBool>),
    Or(Box<CBool>, Box<CBool>),
}

impl CBool {
    pub fn compile(b: &BoolExpr, index: &HashMap<&str, usize>) -> Result<CBool, SemError> {
        Ok(match b {
            BoolExpr::Top => CBool::Top,
            BoolExpr::Bot => CBool::Bot,
            BoolExpr::Letter(s) => {
                CBool::Var(*index.get(s.as_str()).ok_or_else(|| SemError::UnknownLetter(s.clone()))?)
            }
            BoolExpr::Not(a) => CBool::Not(Box::new(CBool::compile(a, index)?)),
            BoolExpr::And(a, c) => {
                CBool::And(Box::new(CBool::compile(a, index)?), Box::new(CBool::compile(c, index)?))
            }
            BoolExpr::Or(a, c) => {
                CBool::Or(Box::new(CBool::compile(a, index)?), Box::new(CBool::compile(c, index)?))
            }
        })
    }

    pub fn eval(&self, v: Valuation) -> bool {
        match self {
            CBool::Top => true,
            CBool::Bot => false,
            CBool::Var(i) => v >> i & 1 == 1,
            CBool::Not(a) => !a.eval(v),
            CBool::And(a, b) => a.eval(v) && b.eval(v),
            CBool::Or(a, b) => a.eval(v) || b.eval(v),
        }
    }
}

pub fn letter_index(letters: &[String]) -> HashMap<&str, usize> {
    letters.iter().enumerate().map(|(i, s)| (s.as_str(), i)).collect()
}

/// Renders a valuation as the canonical conjunction in letter order, e.g. `A&~B`.
pub fn valuation_key(letters: &[String], v: Valuation) -> String {
    if letters.is_empty() {
        return "T".to_string();
    }
    letters
        .iter()
        .enumerate()
        .map(|(i, l)| if v >> i & 1 == 1 { l.clone() } else { format!("~{}", l) })
        .collect::<Vec<_>>()
        .join("&")
}

pub fn parse_valuation_key(letters: &[String], key: &str) -> Result<Valuation, SemError> {
    let idx = letter_index(letters);
    let key = key.trim();
    if key == "T" || key.is_empty() {
        return Ok(0);
    }
    let mut v: Valuation = 0;
    let mut seen = vec![false; letters.len()];
    for lit in key.split('&') {
        let lit = lit.trim();
        let (neg, name) = match lit.strip_prefix('~') {
            Some(n) => (true, n.trim()),
            None => (false, lit),
        };
        let i = *idx.get(name).ok_or_else(|| SemError::UnknownLetter(name.to_string()))?;
        if seen[i] {
            return Err(SemError::Invalid(format!("letter {} repeated in key {}", name, key)));
        }
        seen[i] = true;
        if !neg {
            v |= 1 << i;
        }
    }
    if seen.iter().any(|s| !s) {
        return Err(SemError::Invalid(format!("incomplete valuation key {}", key)));
    }
    Ok(v)
}

impl Model {
    pub fn new(mode: Mode, letters: Vec<String>, weights: BTreeMap<Valuation, Q>) -> Result<Model, SemError> {
        if letters.len() > MAX_LETTERS {
            return Err(SemError::Invalid(format!("at most {} letters", MAX_LETTERS)));
        }
        let weights: BTreeMap<_, _> = weights.into_iter().filter(|(_, w)| !w.is_zero()).collect();
        let m = Model { mode, letters, weights };
        m.validate()?;
        Ok(m)
    }

    /// Probability model from weights listed in canonical state order
    /// (first letter toggles fastest, positive literal first).
    pub fn from_state_weights(letters: &[&str], ws: &[Q]) -> Result<Model, SemError> {
        let n = letters.len();
        if ws.len() != 1usize << n {
            return Err(SemError::Invalid("expected 2^n weights".into()));
        }
        let full: Valuation = if n == 0 { 0 } else { (1u128 << n) - 1 };
        let weights = ws.iter().enumerate().map(|(s, w)| (!(s as Valuation) & full, w.clone())).collect();
        Model::new(Mode::Prob, letters.iter().map(|s| s.to_string()).collect(), weights)
    }

    fn validate(&self) -> Result<(), SemError> {
        let total: Q = self.weights.values().cloned().sum();
        for w in self.weights.values() {
            if w.is_negative() {
                return Err(SemError::Invalid("negative weight".into()));
            }
            if self.mode == Mode::Count && !w.is_integer() {
                return Err(SemError::Invalid("counting weights must be integers".into()));
            }
        }
        let n = self.letters.len();
        if n < MAX_LETTERS {
            if let Some((v, _)) = self.weights.iter().next_back() {
                if *v >> n != 0 {
                    return Err(SemError::Invalid("valuation outside letter set".into()));
                }
            }
        }
        match self.mode {
            Mode::Prob if !total.is_one() => Err(SemError::Invalid(format!("weights sum to {}", fmt_q(&total)))),
            Mode::Count if total.is_zero() => Err(SemError::Invalid("counting weights sum to 0".into())),
            _ => Ok(()),
        }
    }

    pub fn total(&self) -> Q {
        self.weights.values().cloned().sum()
    }

    pub fn weight(&self, v: Valuation) -> Q {
        self.weights.get(&v).cloned().unwrap_or_else(Q::zero)
    }

    pub fn support(&self) -> usize {
        self.weights.len()
    }

    pub fn compile(&self, b: &BoolExpr) -> Result<CBool, SemError> {
        CBool::compile(b, &letter_index(&self.letters))
    }

    /// Unnormalized mass of `b`.
    pub fn mass(&self, b: &BoolExpr) -> Result<Q, SemError> {
        let c = self.compile(b)?;
        Ok(self.weights.iter().filter(|(v, _)| c.eval(**v)).map(|(_, w)| w.clone()).sum())
    }

    /// Normalized probability, dividing by total weight in counting mode.
    pub fn prob(&self, b: &BoolExpr) -> Result<Q, SemError> {
        let m = self.mass(b)?;
        Ok(match self.mode {
            Mode::Prob => m,
            Mode::Count => m / self.total(),
        })
    }

    pub fn normalized(&self) -> Model {
        let t = self.total();
        Model {
            mode: Mode::Prob,
            letters: self.letters.clone(),
            weights: self.weights.iter().map(|(v, w)| (*v, w / &t)).collect(),
        }
    }

    /// Scales a probability model by the LCM of its denominators.
    pub fn to_counting(&self) -> Model {
        let l = crate::num::lcm_denoms(self.weights.values());
        let l = Q::from_integer(l);
        Model {
            mode: Mode::Count,
            letters: self.letters.clone(),
            weights: self.weights.iter().map(|(v, w)| (*v, w * &l)).collect(),
        }
    }

    /// Same measure over a larger (or reordered) letter set.
    pub fn extend_letters(&self, letters: &[String]) -> Result<Model, SemError> {
        let idx = letter_index(letters);
        let mut map = Vec::new();
        for l in &self.letters {
            map.push(*idx.get(l.as_str()).ok_or_else(|| SemError::UnknownLetter(l.clone()))?);
        }
        let weights = self
            .weights
            .iter()
            .map(|(v, w)| {
                let mut nv: Valuation = 0;
                for (i, j) in map.iter().enumerate() {
                    if v >> i & 1 == 1 {
                        nv |= 1 << j;
                    }
                }
                (nv, w.clone())
            })
            .collect();
        Model::new(self.mode, letters.to_vec(), weights)
    }

    pub fn to_json(&self) -> serde_json::Value {
        let weights: serde_json::Map<String, serde_json::Value> = self
            .weights
            .iter()
            .map(|(v, w)| (valuation_key(&self.letters, *v), serde_json::Value::String(fmt_q(w))))
            .collect();
        serde_json::json!({
            "mode": self.mode,
            "letters": self.letters,
            "weights": weights,
        })
    }

    pub fn from_json(v: &serde_json::Value) -> Result<Model, SemError> {
        #[derive(Deserialize)]
        struct Raw {
            mode: Mode,
            letters: Vec<String>,
            weights: BTreeMap<String, serde_json::Value>,
        }
        let raw: Raw = serde_json::from_value(v.clone()).map_err(|e| SemError::Invalid(e.to_string()))?;
        let mut weights = BTreeMap::new();
        for (k, w) in raw.weights {
            let val = parse_valuation_key(&raw.letters, &k)?;
            let q = match &w {
                serde_json::Value::String(s) => parse_q(s),
                serde_json::Value::Number(n) => parse_q(&n.to_string()),
                _ => None,
            }
            .ok_or_else(|| SemError::Invalid(format!("bad weight for {}", k)))?;
            weights.insert(val, q);
        }
        Model::new(raw.mode, raw.letters, weights)
    }
}

impl std::fmt::Display for Model {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let parts: Vec<String> = self
            .weights
            .iter()
            .map(|(v, w)| format!("{}: {}", valuation_key(&self.letters, *v), fmt_q(w)))
            .collect();
        write!(f, "{{{}}}", parts.join(", "))
    }
}

pub fn prob(m: &Model, b: &BoolExpr) -> Result<Q, SemError> {
    m.prob(b)
}

pub fn eval_term(m: &Model, t: &Term) -> Result<Q, SemError> {
    eval_term_with(t, &mut |b| m.prob(b))
}

fn eval_term_with(t: &Term, p: &mut dyn FnMut(&BoolExpr) -> Result<Q, SemError>) -> Result<Q, SemError> {
    match t {
        Term::Basic(b) => p(b),
        Term::Cond(..) => Err(SemError::CondTermNotEvaluable(t.to_string())),
        Term::Sum(a, b) => Ok(eval_term_with(a, p)? + eval_term_with(b, p)?),
        Term::Prod(a, b) => Ok(eval_term_with(a, p)? * eval_term_with(b, p)?),
    }
}

/// Truth of a single atom, with probabilities supplied by `p`.
pub fn eval_atom_with(a: &Atom, p: &mut dyn FnMut(&BoolExpr) -> Result<Q, SemError>) -> Result<bool, SemError> {
    if let Some((x, y)) = a.terms() {
        let (lhs, rhs) = if x.contains_cond() || y.contains_cond() {
            let (Some((al, be)), Some((ga, de))) = (x.as_cond(), y.as_cond()) else {
                return Err(SemError::CondTermNotEvaluable(a.to_string()));
            };
            let l = p(&al.and(be.clone()))? * p(&de)?;
            let r = p(&ga.and(de))? * p(&be)?;
            (l, r)
        } else {
            (eval_term_with(x, p)?, eval_term_with(y, p)?)
        };
        return Ok(match a {
            Atom::Geq(..) => lhs >= rhs,
            Atom::Gt(..) => lhs > rhs,
            _ => lhs == rhs,
        });
    }
    match a {
        Atom::Indep(x, y) => Ok(p(&x.clone().and(y.clone()))? == p(x)? * p(y)?),
        Atom::Confirm { alpha, beta, dir } => {
            let joint = p(&alpha.clone().and(beta.clone()))?;
            let prod = p(alpha)? * p(beta)?;
            Ok(match dir {
                ConfirmDir::CondOverUncond => joint >= prod,
                ConfirmDir::UncondOverCond => joint <= prod,
            })
        }
        _ => unreachable!(),
    }
}

pub fn satisfies(m: &Model, f: &Formula) -> Result<bool, SemError> {
    let mut cache: HashMap<BoolExpr, Q> = HashMap::new();
    let mut err = None;
    let r = f.eval_with(&mut |a| {
        let mut p = |b: &BoolExpr| -> Result<Q, SemError> {
            if let Some(v) = cache.get(b) {
                return Ok(v.clone());
            }
            let v = m.prob(b)?;
            cache.insert(b.clone(), v.clone());
            Ok(v)
        };
        match eval_atom_with(a, &mut p) {
            Ok(v) => v,
            Err(e) => {
                err.get_or_insert(e);
                false
            }
        }
    });
    match err {
        Some(e) => Err(e),
        None => Ok(r),
    }
}

/// Additive formulas evaluated over unnormalized integer counts.
pub fn eval_counting(m: &Model, f: &Formula) -> Result<bool, SemError> {
    match classify(f) {
        Ok(t) if t.leq(LanguageTag::Add) => {}
        _ => return Err(SemError::NotAdditive),
    }
    if m.mode != Mode::Count {
        return Err(SemError::Invalid("model is not in counting mode".into()));
    }
    let mut err = None;
    let r = f.eval_with(&mut |a| {
        let mut p = |b: &BoolExpr| m.mass(b);
        match eval_atom_with(a, &mut p) {
            Ok(v) => v,
            Err(e) => {
                err.get_or_insert(e);
                false
            }
        }
    });
    match err {
        Some(e) => Err(e),
        None => Ok(r),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::num::q;
    use crate::syntax::parse_formula;

    fn m2(ws: [(i64, i64); 4]) -> Model {
        Model::from_state_weights(&["A", "B"], &ws.map(|(a, b)| q(a, b))).unwrap()
    }

    #[test]
    fn probabilities() {
        let m = m2([(25, 36), (5, 36), (5, 36), (1, 36)]);
        assert_eq!(m.prob(&BoolExpr::letter("A")).unwrap(), q(5, 6));
        assert_eq!(m.prob(&BoolExpr::Top).unwrap(), q(1, 1));
        let a = BoolExpr::letter("A");
        assert_eq!(m.prob(&a.clone().and(a.not())).unwrap(), q(0, 1));
        assert!(m.prob(&BoolExpr::letter("Z")).is_err());
    }

    #[test]
    fn independence_and_confirmation_fixtures() {
        let p1 = m2([(25, 36), (5, 36), (5, 36), (1, 36)]);
        let p2 = m2([(27, 36), (4, 36), (4, 36), (1, 36)]);
        let ind = parse_formula("indep(A, B)").unwrap();
        assert!(satisfies(&p1, &ind).unwrap());
        assert!(!satisfies(&p2, &ind).unwrap());
        let c1 = m2([(23, 36), (6, 36), (6, 36), (1, 36)]);
        let below = parse_formula("P(A) > P(A |: B)").unwrap();
        let above = parse_formula("P(A |: B) > P(A)").unwrap();
        assert!(satisfies(&c1, &below).unwrap());
        assert!(satisfies(&p2, &above).unwrap());
        assert!(satisfies(&p1, &parse_formula("P(T) > P(F)").unwrap()).unwrap());
    }

    #[test]
    fn terms() {
        let m = Model::from_state_weights(&["A"], &[q(2, 3), q(1, 3)]).unwrap();
        let t = crate::syntax::parse_term("P(A) * P(A)").unwrap();
        assert_eq!(eval_term(&m, &t).unwrap(), q(4, 9));
        let t = crate::syntax::parse_term("P(A) + P(~A)").unwrap();
        assert_eq!(eval_term(&m, &t).unwrap(), q(1, 1));
        assert_eq!(eval_term(&m, &Term::zero()).unwrap(), q(0, 1));
        assert!(eval_term(&m, &crate::syntax::parse_term("P(A |: A)").unwrap()).is_err());
    }

    #[test]
    fn counting() {
        let c = Model::new(Mode::Count, vec!["A".into()], [(1, q(2, 1)), (0, q(1, 1))].into()).unwrap();
        assert!(eval_counting(&c, &parse_formula("P(A) = P(~A) + P(~A)").unwrap()).unwrap());
        let u = Model::new(Mode::Count, vec!["A".into()], [(1, q(1, 1)), (0, q(1, 1))].into()).unwrap();
        assert!(eval_counting(&u, &parse_formula("P(A) = P(~A)").unwrap()).unwrap());
        assert!(eval_counting(&u, &parse_formula("indep(A, A)").unwrap()).is_err());
    }

    #[test]
    fn zero_denominator_conditionals_hold_both_ways() {
        let m = Model::from_state_weights(&["A", "B"], &[q(0, 1), q(0, 1), q(1, 2), q(1, 2)]).unwrap();
        let f = parse_formula("P(A |: B) >= P(~A |: B) && P(~A |: B) >= P(A |: B)").unwrap();
        assert!(satisfies(&m, &f).unwrap());
    }

    #[test]
    fn json_roundtrip() {
        let m = m2([(25, 36), (5, 36), (5, 36), (1, 36)]);
        let j = m.to_json();
        assert_eq!(j["weights"]["A&~B"], "5/36");
        assert_eq!(Model::from_json(&j).unwrap(), m);
    }
}
