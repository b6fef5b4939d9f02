//! DNF over atoms, state descriptions, and translation of conjuncts into
//! constraint systems over one variable per state description.

use std::collections::BTreeMap;
use std::fmt;

use num_traits::{One, Signed, Zero};
use thiserror::Error;

use crate::num::{fmt_q, parse_q, Q};
use crate::poly::Poly;
use crate::semantics::{letter_index, valuation_key, CBool, Model, Mode, SemError, Valuation};
use crate::syntax::{Atom, BoolExpr, ConfirmDir, Formula, Term};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StateDescription {
    pub valuation: Valuation,
    pub key: String,
}

/// The 2^n state descriptions in canonical order: the first letter toggles
/// fastest and each letter appears positive before negated.
pub fn state_valuations(n: usize) -> Vec<Valuation> {
    assert!(n <= 24, "state expansion limited to 24 letters");
    let full: Valuation = if n == 0 { 0 } else { (1u128 << n) - 1 };
    (0..(1u128 << n)).map(|s| !s & full).collect()
}

pub fn state_descriptions(letters: &[String]) -> Vec<StateDescription> {
    state_valuations(letters.len())
        .into_iter()
        .map(|v| StateDescription { valuation: v, key: valuation_key(letters, v) })
        .collect()
}

impl StateDescription {
    pub fn to_bool(&self, letters: &[String]) -> BoolExpr {
        BoolExpr::conj(letters.iter().enumerate().map(|(i, l)| {
            let b = BoolExpr::letter(l);
            if self.valuation >> i & 1 == 1 {
                b
            } else {
                b.not()
            }
        }))
    }
}

// ---------------------------------------------------------------- DNF

/// A literal after negations have been pushed into atoms. Only independence
/// atoms keep an explicit negative form.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Literal {
    Pos(Atom),
    Neg(Atom),
}

impl Literal {
    pub fn to_formula(&self) -> Formula {
        match self {
            Literal::Pos(a) => Formula::Atom(a.clone()),
            Literal::Neg(a) => Formula::Atom(a.clone()).not(),
        }
    }
}

impl fmt::Display for Literal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Literal::Pos(a) => write!(f, "{}", a),
            Literal::Neg(a) => write!(f, "!({})", a),
        }
    }
}

pub type Conjunct = Vec<Literal>;

fn neg_atom(a: &Atom) -> Vec<Conjunct> {
    match a {
        Atom::Geq(x, y) => vec![vec![Literal::Pos(Atom::Gt(y.clone(), x.clone()))]],
        Atom::Gt(x, y) => vec![vec![Literal::Pos(Atom::Geq(y.clone(), x.clone()))]],
        Atom::Eq(x, y) => vec![
            vec![Literal::Pos(Atom::Gt(x.clone(), y.clone()))],
            vec![Literal::Pos(Atom::Gt(y.clone(), x.clone()))],
        ],
        Atom::Indep(..) => vec![vec![Literal::Neg(a.clone())]],
        Atom::Confirm { alpha, beta, dir } => {
            let c = Term::Cond(alpha.clone(), beta.clone());
            let u = Term::Basic(alpha.clone());
            let at = match dir {
                ConfirmDir::CondOverUncond => Atom::Gt(u, c),
                ConfirmDir::UncondOverCond => Atom::Gt(c, u),
            };
            vec![vec![Literal::Pos(at)]]
        }
    }
}

fn cross(a: Vec<Conjunct>, b: Vec<Conjunct>) -> Vec<Conjunct> {
    let mut out = Vec::with_capacity(a.len() * b.len());
    for x in &a {
        for y in &b {
            let mut c = x.clone();
            for l in y {
                if !c.contains(l) {
                    c.push(l.clone());
                }
            }
            out.push(c);
        }
    }
    out
}

fn dnf_sign(f: &Formula, positive: bool) -> Vec<Conjunct> {
    match (f, positive) {
        (Formula::Atom(a), true) => vec![vec![Literal::Pos(a.clone())]],
        (Formula::Atom(a), false) => neg_atom(a),
        (Formula::Not(g), p) => dnf_sign(g, !p),
        (Formula::And(a, b), true) | (Formula::Or(a, b), false) => cross(dnf_sign(a, positive), dnf_sign(b, positive)),
        (Formula::Or(a, b), true) | (Formula::And(a, b), false) => {
            let mut v = dnf_sign(a, positive);
            v.extend(dnf_sign(b, positive));
            v
        }
        (Formula::Implies(a, b), true) => {
            let mut v = dnf_sign(a, false);
            v.extend(dnf_sign(b, true));
            v
        }
        (Formula::Implies(a, b), false) => cross(dnf_sign(a, true), dnf_sign(b, false)),
    }
}

/// Disjunctive normal form; negated comparisons become strict comparisons with
/// swapped sides, negated equalities split into two disjuncts.
pub fn dnf(f: &Formula) -> Vec<Conjunct> {
    let mut out = dnf_sign(f, true);
    let mut seen = std::collections::HashSet::new();
    out.retain(|c| {
        let mut k = c.clone();
        k.sort();
        seen.insert(k)
    });
    out
}

// ---------------------------------------------------------------- systems

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Rel {
    Eq,
    Ge,
    Gt,
}

impl Rel {
    pub fn symbol(self) -> &'static str {
        match self {
            Rel::Eq => "=",
            Rel::Ge => ">=",
            Rel::Gt => ">",
        }
    }
}

/// `Σ coeffs[i]·x_i REL rhs`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LinRow {
    pub coeffs: BTreeMap<usize, Q>,
    pub rel: Rel,
    pub rhs: Q,
}

impl LinRow {
    pub fn new(coeffs: BTreeMap<usize, Q>, rel: Rel, rhs: Q) -> LinRow {
        let coeffs = coeffs.into_iter().filter(|(_, c)| !c.is_zero()).collect();
        LinRow { coeffs, rel, rhs }
    }
    pub fn lhs(&self, x: &[Q]) -> Q {
        self.coeffs.iter().map(|(i, c)| c * &x[*i]).sum()
    }
    pub fn holds(&self, x: &[Q]) -> bool {
        let l = self.lhs(x);
        match self.rel {
            Rel::Eq => l == self.rhs,
            Rel::Ge => l >= self.rhs,
            Rel::Gt => l > self.rhs,
        }
    }
    pub fn render(&self, names: &[String]) -> String {
        let mut s = String::new();
        for (k, (i, c)) in self.coeffs.iter().enumerate() {
            let neg = c.is_negative();
            let a = c.abs();
            if k == 0 {
                if neg {
                    s.push('-');
                }
            } else {
                s.push_str(if neg { " - " } else { " + " });
            }
            if !a.is_one() {
                s.push_str(&fmt_q(&a));
                s.push('*');
            }
            s.push_str(&format!("x[{}]", names[*i]));
        }
        if s.is_empty() {
            s.push('0');
        }
        format!("{} {} {}", s, self.rel.symbol(), fmt_q(&self.rhs))
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct LinSystem {
    pub vars: Vec<String>,
    pub rows: Vec<LinRow>,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum SystemParseError {
    #[error("line {line}: {msg}")]
    Bad { line: usize, msg: String },
}

impl LinSystem {
    pub fn holds(&self, x: &[Q]) -> bool {
        self.rows.iter().all(|r| r.holds(x))
    }

    /// One constraint per line; a leading `# vars:` line fixes variable order.
    pub fn to_text(&self) -> String {
        let mut s = format!("# vars: {}\n", self.vars.join(", "));
        for r in &self.rows {
            s.push_str(&r.render(&self.vars));
            s.push('\n');
        }
        s
    }

    pub fn from_text(text: &str) -> Result<LinSystem, SystemParseError> {
        let mut sys = LinSystem::default();
        let mut index: BTreeMap<String, usize> = BTreeMap::new();
        for (ln, line) in text.lines().enumerate() {
            let line = line.trim();
            let bad = |msg: &str| SystemParseError::Bad { line: ln + 1, msg: msg.to_string() };
            if let Some(rest) = line.strip_prefix("# vars:") {
                for v in rest.split(',').map(str::trim).filter(|v| !v.is_empty()) {
                    if !index.contains_key(v) {
                        index.insert(v.to_string(), sys.vars.len());
                        sys.vars.push(v.to_string());
                    }
                }
                continue;
            }
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (lhs, rel, rhs, flip) = split_rel(line).ok_or_else(|| bad("missing relation"))?;
            let rhs = parse_q(rhs).ok_or_else(|| bad("right-hand side must be a rational"))?;
            let mut coeffs: BTreeMap<usize, Q> = BTreeMap::new();
            let mut constant = Q::zero();
            for (sign, tok) in split_signed(lhs) {
                let tok = tok.trim();
                if tok.is_empty() {
                    return Err(bad("empty term"));
                }
                let (c, var) = match tok.find("x[") {
                    Some(p) => {
                        let c = tok[..p].trim().trim_end_matches('*').trim();
                        let c = if c.is_empty() { Q::one() } else { parse_q(c).ok_or_else(|| bad("bad coefficient"))? };
                        let name = tok[p + 2..].strip_suffix(']').ok_or_else(|| bad("unclosed x["))?;
                        (c, Some(name.trim().to_string()))
                    }
                    None => (parse_q(tok).ok_or_else(|| bad("bad constant"))?, None),
                };
                let c = if sign { c } else { -c };
                match var {
                    Some(name) => {
                        let n = index.len();
                        let i = *index.entry(name.clone()).or_insert(n);
                        if i == sys.vars.len() {
                            sys.vars.push(name);
                        }
                        *coeffs.entry(i).or_insert_with(Q::zero) += c;
                    }
                    None => constant += c,
                }
            }
            let mut row = LinRow::new(coeffs, rel, rhs - constant);
            if flip {
                row.coeffs.values_mut().for_each(|c| *c = -c.clone());
                row.rhs = -row.rhs;
            }
            sys.rows.push(row);
        }
        Ok(sys)
    }
}

fn split_rel(line: &str) -> Option<(&str, Rel, &str, bool)> {
    for (op, rel, flip) in [(">=", Rel::Ge, false), ("<=", Rel::Ge, true), (">", Rel::Gt, false), ("<", Rel::Gt, true), ("=", Rel::Eq, false)] {
        if let Some(p) = line.find(op) {
            return Some((&line[..p], rel, &line[p + op.len()..], flip));
        }
    }
    None
}

fn split_signed(s: &str) -> Vec<(bool, String)> {
    let mut out = Vec::new();
    let mut cur = String::new();
    let mut sign = true;
    let mut depth = 0;
    for ch in s.chars() {
        match ch {
            '[' => {
                depth += 1;
                cur.push(ch);
            }
            ']' => {
                depth -= 1;
                cur.push(ch);
            }
            '+' | '-' if depth == 0 => {
                if !cur.trim().is_empty() {
                    out.push((sign, std::mem::take(&mut cur)));
                } else {
                    cur.clear();
                }
                sign = ch == '+';
            }
            _ => cur.push(ch),
        }
    }
    if !cur.trim().is_empty() {
        out.push((sign, cur));
    }
    out
}

impl fmt::Display for LinSystem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_text())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum PRel {
    Eq,
    Ge,
    Gt,
    Ne,
}

impl PRel {
    pub fn symbol(self) -> &'static str {
        match self {
            PRel::Eq => "=",
            PRel::Ge => ">=",
            PRel::Gt => ">",
            PRel::Ne => "!=",
        }
    }
    pub fn holds(self, v: &Q) -> bool {
        match self {
            PRel::Eq => v.is_zero(),
            PRel::Ge => !v.is_negative(),
            PRel::Gt => v.is_positive(),
            PRel::Ne => !v.is_zero(),
        }
    }
}

/// `poly REL 0`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PolyRow {
    pub poly: Poly,
    pub rel: PRel,
}

#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct PolySystem {
    pub vars: Vec<String>,
    pub rows: Vec<PolyRow>,
}

impl PolySystem {
    pub fn holds(&self, x: &[Q]) -> bool {
        self.rows.iter().all(|r| r.rel.holds(&r.poly.eval(x)))
    }
    pub fn degree(&self) -> u32 {
        self.rows.iter().map(|r| r.poly.degree()).max().unwrap_or(0)
    }
    pub fn is_linear(&self) -> bool {
        self.rows.iter().all(|r| r.poly.is_linear() && r.rel != PRel::Ne)
    }
    pub fn to_lin(&self) -> Option<LinSystem> {
        if !self.is_linear() {
            return None;
        }
        let rows = self
            .rows
            .iter()
            .map(|r| {
                let mut coeffs = BTreeMap::new();
                for (m, c) in &r.poly.terms {
                    if let Some((v, _)) = m.0.first() {
                        coeffs.insert(*v, c.clone());
                    }
                }
                let rel = match r.rel {
                    PRel::Eq => Rel::Eq,
                    PRel::Ge => Rel::Ge,
                    PRel::Gt => Rel::Gt,
                    PRel::Ne => unreachable!(),
                };
                LinRow::new(coeffs, rel, -r.poly.constant_term())
            })
            .collect();
        Some(LinSystem { vars: self.vars.clone(), rows })
    }
    pub fn to_text(&self) -> String {
        let names = |v: usize| format!("x[{}]", self.vars[v]);
        let mut s = format!("# vars: {}\n", self.vars.join(", "));
        for r in &self.rows {
            s.push_str(&format!("{} {} 0\n", r.poly.render(&names), r.rel.symbol()));
        }
        s
    }
}

impl fmt::Display for PolySystem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_text())
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Expanded {
    Lin(LinSystem),
    Poly(PolySystem),
}

/// Translates terms to polynomials over state variables.
pub struct Expander {
    pub letters: Vec<String>,
    pub states: Vec<Valuation>,
    index: std::collections::HashMap<String, usize>,
}

impl Expander {
    pub fn new(letters: &[String]) -> Expander {
        let index = letter_index(letters).into_iter().map(|(k, v)| (k.to_string(), v)).collect();
        Expander { letters: letters.to_vec(), states: state_valuations(letters.len()), index }
    }

    pub fn var_names(&self) -> Vec<String> {
        self.states.iter().map(|v| valuation_key(&self.letters, *v)).collect()
    }

    /// `P(ε)` as the sum of its state variables; tautologies collapse to 1.
    pub fn basic(&self, b: &BoolExpr) -> Result<Poly, SemError> {
        let idx: std::collections::HashMap<&str, usize> = self.index.iter().map(|(k, v)| (k.as_str(), *v)).collect();
        let c = CBool::compile(b, &idx)?;
        let hits: Vec<usize> = self.states.iter().enumerate().filter(|(_, v)| c.eval(**v)).map(|(i, _)| i).collect();
        if hits.len() == self.states.len() {
            return Ok(Poly::one());
        }
        let mut p = Poly::zero();
        for i in hits {
            p = p.add(&Poly::var(i));
        }
        Ok(p)
    }

    pub fn term(&self, t: &Term) -> Result<Poly, SemError> {
        match t {
            Term::Basic(b) => self.basic(b),
            Term::Cond(..) => Err(SemError::CondTermNotEvaluable(t.to_string())),
            Term::Sum(a, b) => Ok(self.term(a)?.add(&self.term(b)?)),
            Term::Prod(a, b) => Ok(self.term(a)?.mul(&self.term(b)?)),
        }
    }

    /// `lhs - rhs` for a comparison atom (cross-multiplied when conditional).
    fn difference(&self, x: &Term, y: &Term) -> Result<Poly, SemError> {
        if x.contains_cond() || y.contains_cond() {
            let (Some((al, be)), Some((ga, de))) = (x.as_cond(), y.as_cond()) else {
                return Err(SemError::CondTermNotEvaluable(format!("{} vs {}", x, y)));
            };
            let l = self.basic(&al.and(be.clone()))?.mul(&self.basic(&de)?);
            let r = self.basic(&ga.and(de))?.mul(&self.basic(&be)?);
            return Ok(l.sub(&r));
        }
        Ok(self.term(x)?.sub(&self.term(y)?))
    }

    pub fn literal(&self, l: &Literal) -> Result<PolyRow, SemError> {
        let (atom, positive) = match l {
            Literal::Pos(a) => (a, true),
            Literal::Neg(a) => (a, false),
        };
        let row = match atom {
            Atom::Geq(x, y) => PolyRow { poly: self.difference(x, y)?, rel: PRel::Ge },
            Atom::Gt(x, y) => PolyRow { poly: self.difference(x, y)?, rel: PRel::Gt },
            Atom::Eq(x, y) => PolyRow { poly: self.difference(x, y)?, rel: PRel::Eq },
            Atom::Indep(a, b) => {
                let p = self.basic(&a.clone().and(b.clone()))?.sub(&self.basic(a)?.mul(&self.basic(b)?));
                PolyRow { poly: p, rel: PRel::Eq }
            }
            Atom::Confirm { alpha, beta, dir } => {
                let p = self.basic(&alpha.clone().and(beta.clone()))?.sub(&self.basic(alpha)?.mul(&self.basic(beta)?));
                match dir {
                    ConfirmDir::CondOverUncond => PolyRow { poly: p, rel: PRel::Ge },
                    ConfirmDir::UncondOverCond => PolyRow { poly: p.neg(), rel: PRel::Ge },
                }
            }
        };
        if positive {
            return Ok(row);
        }
        Ok(match row.rel {
            PRel::Eq => PolyRow { poly: row.poly, rel: PRel::Ne },
            PRel::Ne => PolyRow { poly: row.poly, rel: PRel::Eq },
            PRel::Ge => PolyRow { poly: row.poly.neg(), rel: PRel::Gt },
            PRel::Gt => PolyRow { poly: row.poly.neg(), rel: PRel::Ge },
        })
    }

    pub fn simplex_rows(&self) -> Vec<PolyRow> {
        let mut rows: Vec<PolyRow> = (0..self.states.len()).map(|i| PolyRow { poly: Poly::var(i), rel: PRel::Ge }).collect();
        let mut s = Poly::constant(-Q::one());
        for i in 0..self.states.len() {
            s = s.add(&Poly::var(i));
        }
        rows.push(PolyRow { poly: s, rel: PRel::Eq });
        rows
    }

    /// Conjunct rows first, then `x ≥ 0` per state and `Σ x = 1`.
    pub fn poly_system(&self, conj: &Conjunct) -> Result<PolySystem, SemError> {
        let mut rows = Vec::new();
        for l in conj {
            rows.push(self.literal(l)?);
        }
        rows.extend(self.simplex_rows());
        Ok(PolySystem { vars: self.var_names(), rows })
    }

    pub fn model_from(&self, x: &[Q]) -> Result<Model, SemError> {
        let weights = self.states.iter().zip(x).map(|(v, w)| (*v, w.clone())).collect();
        Model::new(Mode::Prob, self.letters.clone(), weights)
    }

    pub fn weights_of(&self, m: &Model) -> Result<Vec<Q>, SemError> {
        let mm = m.extend_letters(&self.letters)?;
        Ok(self.states.iter().map(|v| mm.weight(*v)).collect())
    }
}

/// Expansion of one conjunct over `letters`; linear systems come back as
/// `Expanded::Lin`.
pub fn expand(conj: &Conjunct, letters: &[String]) -> Result<Expanded, SemError> {
    let e = Expander::new(letters);
    let ps = e.poly_system(conj)?;
    Ok(match ps.to_lin() {
        Some(l) => Expanded::Lin(l),
        None => Expanded::Poly(ps),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::num::q;
    use crate::syntax::parse_formula;

    fn letters(v: &[&str]) -> Vec<String> {
        v.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn state_order() {
        let k: Vec<String> = state_descriptions(&letters(&["A", "B"])).into_iter().map(|s| s.key).collect();
        assert_eq!(k, vec!["A&B", "~A&B", "A&~B", "~A&~B"]);
        let k: Vec<String> = state_descriptions(&letters(&["A"])).into_iter().map(|s| s.key).collect();
        assert_eq!(k, vec!["A", "~A"]);
        assert_eq!(state_descriptions(&[]).len(), 1);
        assert_eq!(state_descriptions(&[])[0].key, "T");
    }

    #[test]
    fn negated_geq_becomes_strict() {
        let f = parse_formula("!(P(A) >= P(B))").unwrap();
        let d = dnf(&f);
        assert_eq!(d, vec![vec![Literal::Pos(parse_formula("P(B) > P(A)").unwrap().atoms()[0].clone())]]);
    }

    #[test]
    fn simple_expansion() {
        let f = parse_formula("P(A) >= P(~A)").unwrap();
        let Expanded::Lin(s) = expand(&dnf(&f)[0], &letters(&["A"])).unwrap() else { panic!() };
        let t = s.to_text();
        assert!(t.contains("x[A] - x[~A] >= 0"), "{}", t);
        assert!(t.contains("x[A] + x[~A] = 1"), "{}", t);
        assert!(t.contains("x[A] >= 0"));
    }

    #[test]
    fn independence_is_quadratic() {
        let f = parse_formula("indep(A, B)").unwrap();
        let Expanded::Poly(s) = expand(&dnf(&f)[0], &letters(&["A", "B"])).unwrap() else { panic!() };
        assert_eq!(s.rows[0].poly.degree(), 2);
        assert_eq!(s.rows[0].rel, PRel::Eq);
        // uniform weights satisfy it
        assert!(s.holds(&[q(1, 4), q(1, 4), q(1, 4), q(1, 4)]));
    }

    #[test]
    fn intro_expansion() {
        let f = parse_formula("P(A & B) = P(~(A & B)) && P(A |: B) = P(B)").unwrap();
        let Expanded::Poly(s) = expand(&dnf(&f)[0], &letters(&["A", "B"])).unwrap() else { panic!() };
        let t = s.to_text();
        // second row: x_AB - (x_AB + x_~AB)^2 = 0
        assert!(t.contains("-x[A&B]*x[A&B] - 2*x[A&B]*x[~A&B] - x[~A&B]*x[~A&B] + x[A&B] = 0"), "{}", t);
    }

    #[test]
    fn text_roundtrip() {
        let f = parse_formula("P(A) >= P(~A) + P(~A) && P(A) > 0").unwrap();
        let Expanded::Lin(s) = expand(&dnf(&f)[0], &letters(&["A"])).unwrap() else { panic!() };
        assert_eq!(LinSystem::from_text(&s.to_text()).unwrap(), s);
        let p = LinSystem::from_text("2/3*x[a] - x[b] + 1 >= 0\nx[a] <= 1/2").unwrap();
        assert_eq!(p.rows[0].rhs, q(-1, 1));
        assert_eq!(p.rows[1].coeffs[&0], q(-1, 1));
    }
}
