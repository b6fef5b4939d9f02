//! Fourier-Motzkin against an exhaustive vertex-enumeration oracle.

use std::collections::BTreeMap;

use num_traits::{One, Signed, Zero};
use probcalc::linsolve::{fm_eliminate, lin_sat, trace_multipliers, verify_farkas, SatResult};
use probcalc::normalize::{LinRow, LinSystem, Rel};
use probcalc::num::{qi, Q};
use proptest::prelude::*;

/// Solves a square system exactly; None when singular.
fn gauss(mut a: Vec<Vec<Q>>, mut b: Vec<Q>) -> Option<Vec<Q>> {
    let n = b.len();
    for col in 0..n {
        let piv = (col..n).find(|&r| !a[r][col].is_zero())?;
        a.swap(col, piv);
        b.swap(col, piv);
        for r in 0..n {
            if r != col && !a[r][col].is_zero() {
                let k = &a[r][col] / &a[col][col];
                for c in col..n {
                    let t = &k * &a[col][c];
                    a[r][c] -= t;
                }
                let t = &k * &b[col];
                b[r] -= t;
            }
        }
    }
    Some((0..n).map(|i| &b[i] / &a[i][i]).collect())
}

/// Maximises eps over {eq rows tight, ge rows, gt rows with slack eps, |x| <= M,
/// -1 <= eps <= 1} by visiting every vertex. Feasible iff the optimum is positive
/// (or, without strict rows, iff any vertex exists).
fn oracle(s: &LinSystem) -> bool {
    let n = s.vars.len();
    let big = qi(1_000_000);
    // constraint rows over (x, eps): coeffs · (x, eps) >= rhs, or equality
    let mut cons: Vec<(Vec<Q>, Q, bool)> = Vec::new();
    let has_strict = s.rows.iter().any(|r| r.rel == Rel::Gt);
    for r in &s.rows {
        let mut c = vec![Q::zero(); n + 1];
        for (i, v) in &r.coeffs {
            c[*i] = v.clone();
        }
        if r.rel == Rel::Gt {
            c[n] = -Q::one();
        }
        cons.push((c, r.rhs.clone(), r.rel == Rel::Eq));
    }
    for i in 0..n {
        let mut c = vec![Q::zero(); n + 1];
        c[i] = Q::one();
        cons.push((c.clone(), -big.clone(), false));
        c[i] = -Q::one();
        cons.push((c, -big.clone(), false));
    }
    let mut c = vec![Q::zero(); n + 1];
    c[n] = -Q::one();
    cons.push((c.clone(), -Q::one(), false));
    c[n] = Q::one();
    cons.push((c, -Q::one(), false));
    let dim = n + 1;
    let mut best: Option<Q> = None;
    let total = cons.len();
    let mut idx: Vec<usize> = Vec::new();
    fn rec(start: usize, k: usize, pool: &[usize], idx: &mut Vec<usize>, f: &mut dyn FnMut(&[usize])) {
        if idx.len() == k {
            f(idx);
            return;
        }
        for i in start..pool.len() {
            idx.push(pool[i]);
            rec(i + 1, k, pool, idx, f);
            idx.pop();
        }
    }
    let all: Vec<usize> = (0..total).collect();
    let mut visit = |sel: &[usize]| {
        let a: Vec<Vec<Q>> = sel.iter().map(|&i| cons[i].0.clone()).collect();
        let b: Vec<Q> = sel.iter().map(|&i| cons[i].1.clone()).collect();
        let Some(p) = gauss(a, b) else { return };
        let ok = cons.iter().all(|(c, r, eq)| {
            let l: Q = c.iter().zip(&p).map(|(x, y)| x * y).sum();
            if *eq {
                l == *r
            } else {
                l >= *r
            }
        });
        if ok && best.as_ref().map_or(true, |b| p[n] > *b) {
            best = Some(p[n].clone());
        }
    };
    rec(0, dim, &all, &mut idx, &mut visit);
    match best {
        None => false,
        Some(e) => !has_strict || e.is_positive(),
    }
}

fn arb_system() -> impl Strategy<Value = LinSystem> {
    (1usize..=4, 1usize..=5).prop_flat_map(|(n, m)| {
        let row = (prop::collection::vec(-4i64..=4, n), 0u8..3, -4i64..=4);
        prop::collection::vec(row, m).prop_map(move |rows| LinSystem {
            vars: (0..n).map(|i| format!("v{}", i)).collect(),
            rows: rows
                .into_iter()
                .map(|(c, r, b)| {
                    let coeffs: BTreeMap<usize, Q> = c.into_iter().enumerate().map(|(i, v)| (i, qi(v))).collect();
                    let rel = [Rel::Eq, Rel::Ge, Rel::Gt][r as usize];
                    LinRow::new(coeffs, rel, qi(b))
                })
                .collect(),
        })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn verdict_matches_vertex_oracle(s in arb_system()) {
        let r = lin_sat(&s);
        prop_assert_eq!(r.is_sat(), oracle(&s), "{}", s.to_text());
        match r {
            SatResult::Sat(x) => prop_assert!(s.holds(&x)),
            SatResult::Unsat(t) => prop_assert!(verify_farkas(&s, &trace_multipliers(&t))),
        }
    }

    #[test]
    fn projection_is_exact(s in arb_system(), v in 0usize..4) {
        let v = v % s.vars.len();
        let p = fm_eliminate(&s, v);
        // solutions project into the eliminated system
        if let SatResult::Sat(x) = lin_sat(&s) {
            prop_assert!(p.holds(&x));
        }
        // solutions of the eliminated system extend
        if let SatResult::Sat(y) = lin_sat(&p) {
            let mut fixed = s.clone();
            for i in 0..s.vars.len() {
                if i != v {
                    fixed.rows.push(LinRow::new([(i, Q::one())].into_iter().collect(), Rel::Eq, y[i].clone()));
                }
            }
            prop_assert!(lin_sat(&fixed).is_sat(), "{}\n{}", s.to_text(), p.to_text());
        } else {
            prop_assert!(!lin_sat(&s).is_sat());
        }
    }
}

#[test]
fn oracle_sanity() {
    let s = LinSystem::from_text("# vars: x\nx[x] > 1\n-x[x] > -2").unwrap();
    assert!(oracle(&s));
    let s = LinSystem::from_text("# vars: x\nx[x] > 1\n-x[x] >= -1").unwrap();
    assert!(!oracle(&s));
    let s = LinSystem::from_text("# vars: x, y\nx[x] + x[y] = 1\nx[x] - x[y] = 3\nx[y] >= 0").unwrap();
    assert!(!oracle(&s));
}
