//! Sparse multivariate polynomials with exact rational coefficients,
//! plus rational interval enclosures.

use std::collections::btree_map::Entry;
use std::collections::BTreeMap;
use std::fmt;

use num_traits::{One, Signed, Zero};

use crate::num::{fmt_q, to_f64, Q};

/// Sorted `(variable, exponent)` pairs with positive exponents.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Monomial(pub Vec<(usize, u32)>);

impl Monomial {
    pub fn one() -> Monomial {
        Monomial(Vec::new())
    }
    pub fn var(v: usize) -> Monomial {
        Monomial(vec![(v, 1)])
    }
    pub fn degree(&self) -> u32 {
        self.0.iter().map(|(_, e)| e).sum()
    }
    pub fn mul(&self, o: &Monomial) -> Monomial {
        let mut out: Vec<(usize, u32)> = Vec::with_capacity(self.0.len() + o.0.len());
        let (mut i, mut j) = (0, 0);
        while i < self.0.len() || j < o.0.len() {
            match (self.0.get(i), o.0.get(j)) {
                (Some(a), Some(b)) if a.0 == b.0 => {
                    out.push((a.0, a.1 + b.1));
                    i += 1;
                    j += 1;
                }
                (Some(a), Some(b)) if a.0 < b.0 => {
                    out.push(*a);
                    i += 1;
                }
                (Some(_), Some(b)) => {
                    out.push(*b);
                    j += 1;
                }
                (Some(a), None) => {
                    out.push(*a);
                    i += 1;
                }
                (None, Some(b)) => {
                    out.push(*b);
                    j += 1;
                }
                (None, None) => unreachable!(),
            }
        }
        Monomial(out)
    }
    pub fn exp(&self, v: usize) -> u32 {
        self.0.iter().find(|(w, _)| *w == v).map(|(_, e)| *e).unwrap_or(0)
    }
    /// All monomials in `nvars` variables of total degree at most `d`.
    pub fn all_up_to(nvars: usize, d: u32) -> Vec<Monomial> {
        let mut out = vec![Monomial::one()];
        let mut frontier = vec![Monomial::one()];
        for _ in 0..d {
            let mut next = Vec::new();
            for m in &frontier {
                let last = m.0.last().map(|(v, _)| *v).unwrap_or(0);
                for v in last..nvars {
                    let nm = m.mul(&Monomial::var(v));
                    next.push(nm);
                }
            }
            next.sort();
            next.dedup();
            out.extend(next.iter().cloned());
            frontier = next;
        }
        out
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct Poly {
    pub terms: BTreeMap<Monomial, Q>,
}

impl Poly {
    pub fn zero() -> Poly {
        Poly::default()
    }
    pub fn constant(c: Q) -> Poly {
        let mut p = Poly::zero();
        p.add_term(Monomial::one(), c);
        p
    }
    pub fn one() -> Poly {
        Poly::constant(Q::one())
    }
    pub fn var(v: usize) -> Poly {
        let mut p = Poly::zero();
        p.add_term(Monomial::var(v), Q::one());
        p
    }
    pub fn monomial(m: Monomial, c: Q) -> Poly {
        let mut p = Poly::zero();
        p.add_term(m, c);
        p
    }
    pub fn add_term(&mut self, m: Monomial, c: Q) {
        if c.is_zero() {
            return;
        }
        match self.terms.entry(m) {
            Entry::Vacant(v) => {
                v.insert(c);
            }
            Entry::Occupied(mut o) => {
                *o.get_mut() += c;
                if o.get().is_zero() {
                    o.remove();
                }
            }
        }
    }
    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }
    pub fn degree(&self) -> u32 {
        self.terms.keys().map(|m| m.degree()).max().unwrap_or(0)
    }
    pub fn constant_term(&self) -> Q {
        self.terms.get(&Monomial::one()).cloned().unwrap_or_else(Q::zero)
    }
    pub fn vars(&self) -> Vec<usize> {
        let mut v: Vec<usize> = self.terms.keys().flat_map(|m| m.0.iter().map(|(x, _)| *x)).collect();
        v.sort();
        v.dedup();
        v
    }
    pub fn add(&self, o: &Poly) -> Poly {
        let mut r = self.clone();
        for (m, c) in &o.terms {
            r.add_term(m.clone(), c.clone());
        }
        r
    }
    pub fn sub(&self, o: &Poly) -> Poly {
        let mut r = self.clone();
        for (m, c) in &o.terms {
            r.add_term(m.clone(), -c.clone());
        }
        r
    }
    pub fn neg(&self) -> Poly {
        Poly { terms: self.terms.iter().map(|(m, c)| (m.clone(), -c.clone())).collect() }
    }
    pub fn scale(&self, k: &Q) -> Poly {
        if k.is_zero() {
            return Poly::zero();
        }
        Poly { terms: self.terms.iter().map(|(m, c)| (m.clone(), c * k)).collect() }
    }
    pub fn mul(&self, o: &Poly) -> Poly {
        let mut r = Poly::zero();
        for (m1, c1) in &self.terms {
            for (m2, c2) in &o.terms {
                r.add_term(m1.mul(m2), c1 * c2);
            }
        }
        r
    }
    pub fn mul_monomial(&self, m: &Monomial) -> Poly {
        Poly { terms: self.terms.iter().map(|(k, c)| (k.mul(m), c.clone())).collect() }
    }
    pub fn pow(&self, e: u32) -> Poly {
        let mut r = Poly::one();
        for _ in 0..e {
            r = r.mul(self);
        }
        r
    }
    pub fn eval(&self, x: &[Q]) -> Q {
        let mut s = Q::zero();
        for (m, c) in &self.terms {
            let mut t = c.clone();
            for (v, e) in &m.0 {
                for _ in 0..*e {
                    t *= &x[*v];
                }
            }
            s += t;
        }
        s
    }
    pub fn eval_f64(&self, x: &[f64]) -> f64 {
        self.terms
            .iter()
            .map(|(m, c)| {
                let mut t = to_f64(c);
                for (v, e) in &m.0 {
                    t *= x[*v].powi(*e as i32);
                }
                t
            })
            .sum()
    }
    pub fn derivative(&self, v: usize) -> Poly {
        let mut r = Poly::zero();
        for (m, c) in &self.terms {
            let e = m.exp(v);
            if e == 0 {
                continue;
            }
            let nm = Monomial(
                m.0.iter().filter_map(|(w, k)| if *w == v { (k > &1).then_some((*w, k - 1)) } else { Some((*w, *k)) }).collect(),
            );
            r.add_term(nm, c * Q::from_integer(e.into()));
        }
        r
    }
    /// Replaces variable `v` by the polynomial `s`.
    pub fn substitute(&self, v: usize, s: &Poly) -> Poly {
        let mut r = Poly::zero();
        for (m, c) in &self.terms {
            let e = m.exp(v);
            let rest = Monomial(m.0.iter().filter(|(w, _)| *w != v).cloned().collect());
            let base = Poly::monomial(rest, c.clone());
            r = r.add(&base.mul(&s.pow(e)));
        }
        r
    }
    /// Multiplies through by a positive constant so coefficients are coprime integers.
    pub fn primitive(&self) -> Poly {
        if self.is_zero() {
            return self.clone();
        }
        let l = crate::num::lcm_denoms(self.terms.values());
        let scaled: Vec<num_bigint::BigInt> = self.terms.values().map(|c| (c * Q::from_integer(l.clone())).to_integer()).collect();
        let g = scaled.iter().fold(num_bigint::BigInt::zero(), |a, b| num_integer::Integer::gcd(&a, b));
        let k = Q::new(l, g);
        self.scale(&k)
    }
    pub fn is_linear(&self) -> bool {
        self.degree() <= 1
    }

    /// Enclosure of the range over a box, using nested Horner form.
    pub fn interval_eval(&self, bx: &[Interval]) -> Interval {
        let terms: Vec<(Monomial, Q)> = self.terms.iter().map(|(m, c)| (m.clone(), c.clone())).collect();
        horner(&terms, bx)
    }

    pub fn render(&self, names: &dyn Fn(usize) -> String) -> String {
        if self.is_zero() {
            return "0".to_string();
        }
        let mut parts = Vec::new();
        // higher degree first, stable within degree
        let mut items: Vec<_> = self.terms.iter().collect();
        items.sort_by(|a, b| grlex_desc(a.0, b.0));
        for (i, (m, c)) in items.into_iter().enumerate() {
            let neg = c.is_negative();
            let a = c.abs();
            let mut s = String::new();
            if i == 0 {
                if neg {
                    s.push('-');
                }
            } else {
                s.push_str(if neg { " - " } else { " + " });
            }
            let mono: Vec<String> = m
                .0
                .iter()
                .flat_map(|(v, e)| std::iter::repeat_n(names(*v), *e as usize))
                .collect();
            if mono.is_empty() {
                s.push_str(&fmt_q(&a));
            } else if a.is_one() {
                s.push_str(&mono.join("*"));
            } else {
                s.push_str(&format!("{}*{}", fmt_q(&a), mono.join("*")));
            }
            parts.push(s);
        }
        parts.concat()
    }
}

fn grlex_desc(a: &Monomial, b: &Monomial) -> std::cmp::Ordering {
    b.degree().cmp(&a.degree()).then_with(|| {
        let top = a.0.iter().chain(&b.0).map(|(v, _)| *v).max().unwrap_or(0);
        (0..=top).map(|v| b.exp(v).cmp(&a.exp(v))).find(|o| o.is_ne()).unwrap_or(std::cmp::Ordering::Equal)
    })
}

fn horner(terms: &[(Monomial, Q)], bx: &[Interval]) -> Interval {
    if terms.is_empty() {
        return Interval::point(Q::zero());
    }
    // pick the smallest variable present
    let v = terms.iter().filter_map(|(m, _)| m.0.first().map(|(v, _)| *v)).min();
    let Some(v) = v else {
        let s: Q = terms.iter().map(|(_, c)| c.clone()).sum();
        return Interval::point(s);
    };
    let maxe = terms.iter().map(|(m, _)| m.exp(v)).max().unwrap_or(0);
    let mut groups: Vec<Vec<(Monomial, Q)>> = vec![Vec::new(); maxe as usize + 1];
    for (m, c) in terms {
        let e = m.exp(v);
        let rest = Monomial(m.0.iter().filter(|(w, _)| *w != v).cloned().collect());
        groups[e as usize].push((rest, c.clone()));
    }
    let x = &bx[v];
    let mut acc = horner(&groups[maxe as usize], bx);
    for e in (0..maxe as usize).rev() {
        acc = acc.mul(x).add(&horner(&groups[e], bx));
    }
    acc
}

impl fmt::Display for Poly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.render(&|v| format!("x{}", v)))
    }
}

/// Closed rational interval.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Interval {
    pub lo: Q,
    pub hi: Q,
}

impl Interval {
    pub fn new(lo: Q, hi: Q) -> Interval {
        debug_assert!(lo <= hi);
        Interval { lo, hi }
    }
    pub fn point(x: Q) -> Interval {
        Interval { lo: x.clone(), hi: x }
    }
    pub fn add(&self, o: &Interval) -> Interval {
        Interval { lo: &self.lo + &o.lo, hi: &self.hi + &o.hi }
    }
    pub fn mul(&self, o: &Interval) -> Interval {
        let c = [&self.lo * &o.lo, &self.lo * &o.hi, &self.hi * &o.lo, &self.hi * &o.hi];
        let lo = c.iter().min().unwrap().clone();
        let hi = c.iter().max().unwrap().clone();
        Interval { lo, hi }
    }
    pub fn contains(&self, x: &Q) -> bool {
        &self.lo <= x && x <= &self.hi
    }
    pub fn mid(&self) -> Q {
        (&self.lo + &self.hi) / Q::from_integer(2.into())
    }
    pub fn width(&self) -> Q {
        &self.hi - &self.lo
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::num::{q, qi};

    #[test]
    fn arithmetic() {
        let x = Poly::var(0);
        let y = Poly::var(1);
        let p = x.add(&y).pow(2);
        assert_eq!(p.terms.len(), 3);
        assert_eq!(p.eval(&[qi(2), qi(3)]), qi(25));
        let d = p.derivative(0);
        assert_eq!(d.eval(&[qi(2), qi(3)]), qi(10));
        assert!(p.sub(&p).is_zero());
        let s = p.substitute(1, &Poly::one().sub(&x));
        assert_eq!(s, Poly::one());
    }

    #[test]
    fn horner_tightens_x2_minus_x() {
        let x = Poly::var(0);
        let p = x.mul(&x).sub(&x);
        let iv = p.interval_eval(&[Interval::new(qi(0), q(1, 2))]);
        assert_eq!(iv.hi, qi(0));
        let iv = p.interval_eval(&[Interval::new(q(1, 2), qi(1))]);
        assert_eq!(iv.hi, qi(0));
    }

    #[test]
    fn monomial_basis_size() {
        assert_eq!(Monomial::all_up_to(2, 2).len(), 6);
        assert_eq!(Monomial::all_up_to(3, 3).len(), 20);
    }
}
