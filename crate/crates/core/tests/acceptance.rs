//! Acceptance suite: one PASS/FAIL line per criterion, then a nonzero exit
//! status if anything failed. Runs without the libtest harness so the lines
//! are always shown.

use std::collections::BTreeMap;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::{Duration, Instant};

use num_traits::{One, Signed, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use probcalc::axioms::{check_instances, instance_pool, lookup, schemas, small_models, soundness_fuzz, validity, Group, Validity};
use probcalc::bench::generate;
use probcalc::expressivity::{distinguishable, fixture_pairs};
use probcalc::linsolve::{additive_form, minimize_support, sat_additive, FormulaSat};
use probcalc::normalize::{dnf, Expander};
use probcalc::num::{lcm_denoms, q, qi, Q};
use probcalc::poly::{Monomial, Poly};
use probcalc::polysolve::{
    psatz_search, psatz_sets, psatz_verify, sat_multiplicative, ConeTerm, PolyBudget, PolyVerdict, PsatzCertificate,
    PsatzSets,
};
use probcalc::reductions::{etr_inverse_to_ind, generate_inverse, same_cond_to_comp, InverseSystem};
use probcalc::represent::{
    check_definetti_axioms, enumerate_symmetric_n2, order_from_matrix, quad_check_axioms, quad_representable_n2,
    representable, sweep_n2, BilinearMatrix, CompOrder, NonRepr, QuadOrder, QuadRepr, Representability,
};
use probcalc::semantics::{eval_counting, satisfies};
use probcalc::syntax::{classify, free_letters, parse_bool, parse_formula, Atom, BoolExpr, Formula, LanguageTag, Term};

type Check = Result<String, String>;

macro_rules! ensure {
    ($cond:expr, $($msg:tt)*) => {
        if !$cond {
            return Err(format!($($msg)*));
        }
    };
}

fn main() {
    let criteria: Vec<(u32, &str, u64, fn() -> Check)> = vec![
        (1, "expressivity fixtures", 10, c1_expressivity),
        (2, "irrational forcing", 5, c2_irrational),
        (3, "additive decision vs vertex oracle", 60, c3_additive_oracle),
        (4, "small-model bound", 60, c4_small_model),
        (5, "axiom soundness", 120, c5_axioms),
        (6, "representability certificates", 30, c6_represent),
        (7, "two-atom quadratic classification", 600, c7_quad_n2),
        (8, "reduction round trips", 300, c8_reductions),
        (9, "Positivstellensatz certificates", 60, c9_psatz),
        (10, "counting semantics", 30, c10_counting),
    ];
    let mut failed = 0;
    for (n, name, limit, f) in criteria {
        let t0 = Instant::now();
        let r = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|p| {
            let msg = p.downcast_ref::<String>().cloned().or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()));
            Err(format!("panicked: {}", msg.unwrap_or_default()))
        });
        let dt = t0.elapsed();
        let r = match r {
            Ok(d) if dt > Duration::from_secs(limit) => Err(format!("{} but took {:.1} s (limit {} s)", d, dt.as_secs_f64(), limit)),
            other => other,
        };
        match r {
            Ok(d) => println!("criterion {:>2} PASS  {} ({:.2} s): {}", n, name, dt.as_secs_f64(), d),
            Err(d) => {
                failed += 1;
                println!("criterion {:>2} FAIL  {} ({:.2} s): {}", n, name, dt.as_secs_f64(), d);
            }
        }
    }
    if failed > 0 {
        println!("{} criteria failed", failed);
        std::process::exit(1);
    }
}

// ---------------------------------------------------------------- 1

fn c1_expressivity() -> Check {
    let mut verdicts = 0;
    for fx in fixture_pairs() {
        for (lang, expected) in &fx.expect {
            let w = distinguishable(&fx.m1, &fx.m2, *lang).map_err(|e| e.to_string())?;
            ensure!(w.is_some() == *expected, "{} in {}: expected distinguishable={}", fx.name, lang, expected);
            if let Some(w) = w {
                ensure!(classify(&w).unwrap().leq(*lang), "{}: witness outside {}", fx.name, lang);
                let (a, b) = (satisfies(&fx.m1, &w).unwrap(), satisfies(&fx.m2, &w).unwrap());
                ensure!(a != b, "{}: witness does not separate", fx.name);
            }
            verdicts += 1;
        }
    }
    // the named blocks
    let find = |n: &str| fixture_pairs().into_iter().find(|f| f.name == n).unwrap();
    let cases = [
        ("comp_vs_ind", LanguageTag::Comp, false),
        ("comp_vs_ind", LanguageTag::Ind, true),
        ("ind_vs_confirm", LanguageTag::Confirm, true),
        ("ind_vs_confirm", LanguageTag::Ind, false),
        ("cond_vs_quad", LanguageTag::Cond, false),
        ("cond_vs_quad", LanguageTag::Quad, true),
        ("quad_vs_poly", LanguageTag::Quad, false),
        ("quad_vs_poly", LanguageTag::Poly, true),
    ];
    for (name, lang, exp) in cases {
        let fx = find(name);
        let got = distinguishable(&fx.m1, &fx.m2, lang).map_err(|e| e.to_string())?.is_some();
        ensure!(got == exp, "{} in {}", name, lang);
    }
    let m = find("comp_vs_ind").m1;
    ensure!(m.prob(&parse_bool("A & B").unwrap()).unwrap() == q(25, 36), "25/36 block weight");
    Ok(format!("{} verdicts match, witnesses separate exactly", verdicts))
}

// ---------------------------------------------------------------- 2

fn c2_irrational() -> Check {
    let f = parse_formula("P(A & B) = P(~(A & B)) && P(A |: B) = P(B)").unwrap();
    let v = sat_multiplicative(&f, &PolyBudget::default()).map_err(|e| e.to_string())?;
    let PolyVerdict::SatNumeric(w) = v else { return Err(format!("expected a numeric witness, got {}", v.label())) };
    let pb = w.prob(&parse_bool("B").unwrap()).unwrap();
    let err = (pb - 0.5f64.sqrt()).abs();
    ensure!(err <= 1e-6, "|P(B) - 1/sqrt 2| = {:e}", err);
    ensure!(w.residual <= 1e-9, "residual {:e}", w.residual);
    Ok(format!("P(B) = {:.9}, error {:.1e}, residual {:.1e}", pb, err, w.residual))
}

// ---------------------------------------------------------------- 3 and 4

/// The shared corpus: up to 3 letters, up to 5 atoms, sums of length at most 4.
fn add_corpus() -> Vec<Formula> {
    (0..1000u64).map(|s| generate(LanguageTag::Add, 1 + (s % 3) as usize, 1 + ((s / 3) % 5) as usize, 10_000 + s)).collect()
}

/// Independent oracle. Enumerates truth assignments to the atoms, writes
/// each as linear rows over state weights, and decides every row set by
/// enumerating the vertices of the polytope with strict rows relaxed; strict
/// rows are satisfiable together iff each one is positive at some vertex.
mod oracle {
    use super::*;

    fn det(mut m: Vec<Vec<i128>>) -> i128 {
        // Bareiss fraction-free elimination
        let n = m.len();
        let mut sign = 1;
        let mut prev = 1i128;
        for k in 0..n {
            if m[k][k] == 0 {
                let Some(p) = (k + 1..n).find(|&i| m[i][k] != 0) else { return 0 };
                m.swap(k, p);
                sign = -sign;
            }
            for i in k + 1..n {
                for j in k + 1..n {
                    m[i][j] = (m[i][j] * m[k][k] - m[i][k] * m[k][j]) / prev;
                }
            }
            prev = m[k][k];
        }
        sign * m[n - 1][n - 1]
    }

    fn rank(rows: &[Vec<i64>]) -> usize {
        let mut m: Vec<Vec<Q>> = rows.iter().map(|r| r.iter().map(|v| qi(*v)).collect()).collect();
        let cols = m.first().map_or(0, |r| r.len());
        let mut r = 0;
        for c in 0..cols {
            let Some(p) = (r..m.len()).find(|&i| !m[i][c].is_zero()) else { continue };
            m.swap(r, p);
            for i in 0..m.len() {
                if i != r && !m[i][c].is_zero() {
                    let k = &m[i][c] / &m[r][c];
                    for j in 0..cols {
                        let d = &k * &m[r][j];
                        m[i][j] -= d;
                    }
                }
            }
            r += 1;
        }
        r
    }

    /// `eqs`: (a, b) meaning a·x = b; `ges`/`gts`: a·x ≥ 0 / a·x > 0.
    pub fn feasible(dim: usize, eqs: &[(Vec<i64>, i64)], ges: &[Vec<i64>], gts: &[Vec<i64>]) -> bool {
        let mut basis: Vec<(Vec<i64>, i64)> = Vec::new();
        for e in eqs {
            let mut probe: Vec<Vec<i64>> = basis.iter().map(|b| b.0.clone()).collect();
            probe.push(e.0.clone());
            if rank(&probe) > basis.len() {
                basis.push(e.clone());
            }
        }
        let mut ineq: Vec<Vec<i64>> = (0..dim).map(|i| (0..dim).map(|j| (i == j) as i64).collect()).collect();
        ineq.extend(ges.iter().cloned());
        ineq.extend(gts.iter().cloned());
        let pick = dim - basis.len();
        let mut need: Vec<bool> = vec![true; gts.len()];
        let mut any_vertex = false;
        let mut idx: Vec<usize> = Vec::new();
        let holds = |num: &[i128], den: i128| -> bool {
            let dot = |a: &[i64]| -> i128 { a.iter().zip(num).map(|(x, y)| *x as i128 * y).sum() };
            eqs.iter().all(|(a, b)| dot(a) == *b as i128 * den) && ineq.iter().all(|a| dot(a) >= 0)
        };
        fn rec(
            start: usize,
            pick: usize,
            total: usize,
            idx: &mut Vec<usize>,
            visit: &mut dyn FnMut(&[usize]) -> bool,
        ) -> bool {
            if idx.len() == pick {
                return visit(idx);
            }
            for i in start..total {
                idx.push(i);
                if rec(i + 1, pick, total, idx, visit) {
                    return true;
                }
                idx.pop();
            }
            false
        }
        let ngts = gts.len();
        let nineq = ineq.len();
        let mut visit = |sel: &[usize]| -> bool {
            let mut a: Vec<Vec<i128>> = basis.iter().map(|(r, _)| r.iter().map(|v| *v as i128).collect()).collect();
            let mut b: Vec<i128> = basis.iter().map(|(_, v)| *v as i128).collect();
            for &i in sel {
                a.push(ineq[i].iter().map(|v| *v as i128).collect());
                b.push(0);
            }
            let d = det(a.clone());
            if d == 0 {
                return false;
            }
            // Cramer, with the sign folded into the denominator
            let s = d.signum();
            let num: Vec<i128> = (0..dim)
                .map(|c| {
                    let mut m = a.clone();
                    for (r, row) in m.iter_mut().enumerate() {
                        row[c] = b[r];
                    }
                    det(m) * s
                })
                .collect();
            let den = d * s;
            if !holds(&num, den) {
                return false;
            }
            any_vertex = true;
            for (k, g) in gts.iter().enumerate() {
                let dot: i128 = g.iter().zip(&num).map(|(x, y)| *x as i128 * y).sum();
                if dot > 0 {
                    need[k] = false;
                }
            }
            need.iter().all(|n| !n)
        };
        let _ = nineq;
        rec(0, pick, ineq.len(), &mut idx, &mut visit);
        any_vertex && (ngts == 0 || need.iter().all(|n| !n))
    }

    fn coeffs(t: &Term, states: &[Vec<bool>], letters: &[String]) -> Vec<i64> {
        match t {
            Term::Basic(b) => states
                .iter()
                .map(|s| {
                    b.eval(&|l: &str| s[letters.iter().position(|x| x == l).expect("letter")]) as i64
                })
                .collect(),
            Term::Sum(a, b) => coeffs(a, states, letters).iter().zip(coeffs(b, states, letters)).map(|(x, y)| x + y).collect(),
            other => panic!("oracle handles sums of basic terms only: {:?}", other),
        }
    }

    pub fn sat(f: &Formula) -> bool {
        let letters = free_letters(f);
        let n = letters.len();
        let states: Vec<Vec<bool>> = (0..1usize << n).map(|m| (0..n).map(|i| m >> i & 1 == 1).collect()).collect();
        let dim = states.len();
        let mut atoms: Vec<Atom> = Vec::new();
        for a in f.atoms() {
            if !atoms.contains(a) {
                atoms.push(a.clone());
            }
        }
        let diffs: Vec<(Vec<i64>, u8)> = atoms
            .iter()
            .map(|a| {
                let (x, y, kind) = match a {
                    Atom::Geq(x, y) => (x, y, 0),
                    Atom::Gt(x, y) => (x, y, 1),
                    Atom::Eq(x, y) => (x, y, 2),
                    other => panic!("not additive: {:?}", other),
                };
                let d = coeffs(x, &states, &letters).iter().zip(coeffs(y, &states, &letters)).map(|(p, q)| p - q).collect();
                (d, kind)
            })
            .collect();
        let one = (vec![1i64; dim], 1i64);
        for mask in 0u32..1 << atoms.len() {
            let truth = |a: &Atom| mask >> atoms.iter().position(|b| b == a).unwrap() & 1 == 1;
            if !f.eval_with(&mut |a| truth(a)) {
                continue;
            }
            // each false equality splits in two
            let mut systems: Vec<(Vec<(Vec<i64>, i64)>, Vec<Vec<i64>>, Vec<Vec<i64>>)> = vec![(vec![one.clone()], vec![], vec![])];
            for (k, (d, kind)) in diffs.iter().enumerate() {
                let t = mask >> k & 1 == 1;
                let neg: Vec<i64> = d.iter().map(|v| -v).collect();
                match (kind, t) {
                    (0, true) => systems.iter_mut().for_each(|s| s.1.push(d.clone())),
                    (0, false) => systems.iter_mut().for_each(|s| s.2.push(neg.clone())),
                    (1, true) => systems.iter_mut().for_each(|s| s.2.push(d.clone())),
                    (1, false) => systems.iter_mut().for_each(|s| s.1.push(neg.clone())),
                    (_, true) => systems.iter_mut().for_each(|s| s.0.push((d.clone(), 0))),
                    (_, false) => {
                        let mut next = Vec::new();
                        for s in systems {
                            let mut a = s.clone();
                            a.2.push(d.clone());
                            let mut b = s;
                            b.2.push(neg.clone());
                            next.push(a);
                            next.push(b);
                        }
                        systems = next;
                    }
                }
            }
            if systems.iter().any(|(e, g, s)| feasible(dim, e, g, s)) {
                return true;
            }
        }
        false
    }
}

fn c3_additive_oracle() -> Check {
    let corpus = add_corpus();
    let mut sat = 0;
    let mut solver_time = Duration::ZERO;
    for (i, f) in corpus.iter().enumerate() {
        ensure!(classify(f).unwrap().leq(LanguageTag::Add), "formula {} outside L_add", i);
        let t0 = Instant::now();
        let r = sat_additive(f).map_err(|e| e.to_string())?;
        solver_time += t0.elapsed();
        let expect = oracle::sat(f);
        ensure!(r.is_sat() == expect, "formula {} ({}): solver {} oracle {}", i, f, r.is_sat(), expect);
        if let FormulaSat::Sat(m) = &r {
            ensure!(satisfies(m, f).unwrap(), "formula {}: witness fails", i);
            ensure!(m.total() == Q::one() && m.weights.values().all(|w| !w.is_negative()), "formula {}: not a measure", i);
            sat += 1;
        }
    }
    Ok(format!("1000/1000 agree ({} SAT, {} UNSAT), solver time {:.2} s", sat, 1000 - sat, solver_time.as_secs_f64()))
}

fn c4_small_model() -> Check {
    let mut checked = 0;
    let mut tight = 0;
    for (i, f) in add_corpus().iter().enumerate() {
        let FormulaSat::Sat(m) = sat_additive(f).map_err(|e| e.to_string())? else { continue };
        let small = minimize_support(f, &m);
        ensure!(satisfies(&small, f).unwrap(), "formula {}: minimized witness fails", i);
        let g = additive_form(f).map_err(|e| e.to_string())?;
        let ok = dnf(&g).iter().any(|conj| {
            conj.iter().all(|l| satisfies(&small, &l.to_formula()).unwrap()) && small.support() <= conj.len() + 1
        });
        ensure!(ok, "formula {} ({}): support {} exceeds every satisfied disjunct's bound", i, f, small.support());
        if dnf(&g).iter().any(|c| small.support() == c.len() + 1) {
            tight += 1;
        }
        checked += 1;
    }
    Ok(format!("{} witnesses within atoms + 1 ({} at the bound)", checked, tight))
}

// ---------------------------------------------------------------- 5

fn c5_axioms() -> Check {
    let models = small_models(&["A", "B"], 6);
    let mut names: Vec<String> = schemas().into_iter().filter(|s| s.group != Group::Invalid).map(|s| s.name).collect();
    names.extend((1..=4).map(|n| format!("FinCan:{}", n)));
    let mut instances = 0;
    for (i, n) in names.iter().enumerate() {
        let pool = instance_pool(n, 200, 7 + i as u64).map_err(|e| e.to_string())?;
        instances += pool.len();
        if let Some((f, m)) = check_instances(&pool, &models).map_err(|e| e.to_string())? {
            return Err(format!("{}: {} fails in {}", n, f, m));
        }
        if let Some((f, m)) = soundness_fuzz(n, 10_000, 1_000 + i as u64).map_err(|e| e.to_string())? {
            return Err(format!("{}: random instance {} fails in {}", n, f, m));
        }
    }
    // the deliberately unsound schema must be caught
    let bad = instance_pool("Geq", 200, 1).map_err(|e| e.to_string())?;
    ensure!(check_instances(&bad, &models).map_err(|e| e.to_string())?.is_some(), "unsound schema not caught");
    // derived lemmas through the solver
    let budget = PolyBudget { timeout_ms: Some(5_000), ..PolyBudget::default() };
    let mut certified = 0;
    let derived: Vec<String> = schemas().into_iter().filter(|s| s.group == Group::Derived).map(|s| s.name).collect();
    for (i, n) in derived.iter().enumerate() {
        ensure!(lookup(n).is_ok(), "{} missing", n);
        for f in instance_pool(n, 5, 40 + i as u64).map_err(|e| e.to_string())? {
            match validity(&f, &budget).map_err(|e| e.to_string())? {
                Validity::Valid => certified += 1,
                other => return Err(format!("{} instance {} not certified: {:?}", n, f, other)),
            }
        }
    }
    Ok(format!(
        "{} schemas, {} instances x {} models, 10^4 random trials each, {} derived instances certified",
        names.len(),
        instances,
        models.len(),
        certified
    ))
}

// ---------------------------------------------------------------- 6

fn indicator_sum(e: u64, w: &[Q]) -> Q {
    w.iter().enumerate().filter(|(i, _)| e >> i & 1 == 1).map(|(_, v)| v.clone()).sum()
}

fn c6_represent() -> Check {
    let text = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/fixtures/order5.json")).map_err(|e| e.to_string())?;
    let o = CompOrder::from_json(&serde_json::from_str(&text).unwrap()).map_err(|e| e.to_string())?;
    let rel = o.closure().map_err(|e| e.to_string())?;
    ensure!(o.atoms == 5 && rel.is_total(), "fixture is not a total 5-atom order");
    for ax in check_definetti_axioms(&rel) {
        ensure!(ax.passed(), "fixture fails {}", ax.name);
    }
    let Representability::No(NonRepr::Balanced(c)) = representable(&o).map_err(|e| e.to_string())? else {
        return Err("fixture reported representable".into());
    };
    // balance, recomputed here
    let mut bal = [0i64; 5];
    for p in &c.pairs {
        for (i, b) in bal.iter_mut().enumerate() {
            *b += p.mult as i64 * ((p.a as u64 >> i & 1) as i64 - (p.b as u64 >> i & 1) as i64);
        }
    }
    ensure!(bal.iter().all(|v| *v == 0), "certificate unbalanced: {:?}", bal);
    // directions against the closed order
    ensure!(c.pairs.iter().all(|p| p.mult > 0 && rel.ge(p.a, p.b)), "certificate comparison not in the order");
    ensure!(c.pairs.iter().all(|p| !p.strict || rel.gt(p.a, p.b)), "strict flag not backed by the order");
    ensure!(c.pairs.iter().any(|p| p.strict), "no strict comparison");
    let mut fixtures = vec![vec![q(2, 3), q(1, 3)], vec![q(1, 2), q(1, 2)], vec![q(1, 2), q(1, 3), q(1, 6)], vec![q(0, 1), q(1, 4), q(3, 4)]];
    fixtures.push(vec![q(1, 10), q(2, 10), q(3, 10), q(4, 10)]);
    for w0 in &fixtures {
        let o = CompOrder::from_measure(w0);
        let rel = o.closure().map_err(|e| e.to_string())?;
        let Representability::Yes(w) = representable(&o).map_err(|e| e.to_string())? else {
            return Err(format!("measure order {:?} reported non-representable", w0));
        };
        let n = 1u64 << w.len();
        for a in 0..n {
            for b in 0..n {
                let (pa, pb) = (indicator_sum(a, &w), indicator_sum(b, &w));
                ensure!(rel.ge(a as _, b as _) == (pa >= pb), "measure {:?} disagrees at {} vs {}", w0, a, b);
            }
        }
    }
    // an order with the empty event above everything
    let bad = CompOrder::from_json(&serde_json::json!({"atoms": 1, "comparisons": [["{}", "{0}", ">"]]})).map_err(|e| e.to_string())?;
    ensure!(matches!(representable(&bad), Ok(Representability::No(_)) | Err(_)), "degenerate order accepted");
    Ok(format!("5-atom fixture refuted by {} balanced pairs; {} measure orders reproduced event for event", c.pairs.len(), fixtures.len()))
}

// ---------------------------------------------------------------- 7

fn c7_quad_n2() -> Check {
    let mut sizes = Vec::new();
    for bound in 1..=4 {
        sizes.push(sweep_n2(bound).len());
    }
    let survivors = sweep_n2(3);
    ensure!(survivors.len() == 9, "sweep at Q6 bound 3 leaves {} orders (by bound: {:?})", survivors.len(), sizes);
    ensure!(sizes[1..].iter().all(|s| *s == 9), "sweep does not stabilize: {:?}", sizes);
    let mut total = 0;
    let mut accepted = 0;
    let mut mismatch = None;
    enumerate_symmetric_n2(|o: &QuadOrder| {
        total += 1;
        let yes = matches!(quad_representable_n2(o), Ok(QuadRepr::Yes { .. }));
        accepted += yes as usize;
        if yes != survivors.contains(o) && mismatch.is_none() {
            mismatch = Some(o.clone());
        }
    });
    ensure!(mismatch.is_none(), "classifier and sweep disagree on {:?}", mismatch);
    ensure!(accepted == 9, "classifier accepts {} orders", accepted);
    let phi = BilinearMatrix::new(vec![vec![q(1, 16), q(3, 16)], vec![q(3, 16), q(9, 16)]]);
    let psi = BilinearMatrix::new(vec![vec![q(1, 12), q(3, 12)], vec![q(3, 12), q(5, 12)]]);
    let (a, ra) = order_from_matrix(&phi);
    let (b, rb) = order_from_matrix(&psi);
    ensure!(ra == 1 && rb == 2, "ranks {} and {}", ra, rb);
    ensure!(a == b, "induced orders differ");
    ensure!(quad_check_axioms(&b, 3).iter().all(|c| c.passed()), "psi order fails an axiom at bound 3");
    ensure!(matches!(quad_representable_n2(&a), Ok(QuadRepr::Yes { .. })), "phi order rejected");
    Ok(format!("{} symmetric preorders, 9 survive (sizes by Q6 bound {:?}), classifier agrees; ranks 1 and 2 with equal orders", total, sizes))
}

// ---------------------------------------------------------------- 8

fn c8_reductions() -> Check {
    let budget = PolyBudget { timeout_ms: Some(2_000), ..PolyBudget::default() };
    let models = small_models(&["A", "B"], 6);
    let (mut sc_decided, mut sc_sat) = (0, 0);
    for seed in 0..100 {
        let f = generate(LanguageTag::SameCond, 2, 3, seed);
        let g = same_cond_to_comp(&f).map_err(|e| e.to_string())?;
        ensure!(classify(&g).unwrap() == LanguageTag::Comp, "seed {}: reduct not comparative", seed);
        for m in &models {
            ensure!(satisfies(m, &f).unwrap() == satisfies(m, &g).unwrap(), "seed {}: truth differs in {}", seed, m);
        }
        let reduced = sat_additive(&g).map_err(|e| e.to_string())?;
        if let FormulaSat::Sat(m) = &reduced {
            ensure!(satisfies(m, &f).unwrap(), "seed {}: witness does not transport back", seed);
            sc_sat += 1;
        }
        match sat_multiplicative(&f, &budget).map_err(|e| e.to_string())? {
            PolyVerdict::SatRational(m) => {
                ensure!(reduced.is_sat() && satisfies(&m, &g).unwrap(), "seed {}: verdicts disagree", seed);
                sc_decided += 1;
            }
            PolyVerdict::SatNumeric(_) => {
                ensure!(reduced.is_sat(), "seed {}: verdicts disagree", seed);
                sc_decided += 1;
            }
            PolyVerdict::UnsatCertified(_) => {
                ensure!(!reduced.is_sat(), "seed {}: verdicts disagree", seed);
                sc_decided += 1;
            }
            PolyVerdict::Unknown(_) => {}
        }
    }
    ensure!(sc_decided >= 80, "only {} same-condition instances decided on the original side", sc_decided);

    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let (mut sat, mut unsat, mut unknown) = (0, 0, 0);
    for i in 0..100 {
        let (sys, plant) = generate_inverse(1 + i % 3, 1 + i % 4, 0.4, &mut rng);
        let red = etr_inverse_to_ind(&sys).map_err(|e| e.to_string())?;
        // without products the reduct has no independence atoms and classifies as comp
        let tag = classify(&red.formula).unwrap();
        ensure!(matches!(tag, LanguageTag::Ind | LanguageTag::Comp), "instance {}: reduct classified {}", i, tag);
        ensure!(red.atom_count() <= red.atom_bound(), "instance {}: atom bound exceeded", i);
        let v = sat_multiplicative(&sys.to_poly_formula(), &budget).map_err(|e| e.to_string())?;
        let x = match (plant, v) {
            (Some(x), v) => {
                ensure!(!matches!(v, PolyVerdict::UnsatCertified(_)), "instance {}: planted solution but UNSAT", i);
                Some(x)
            }
            (None, PolyVerdict::SatRational(m)) => Some(sys.from_poly_model(&m).map_err(|e| e.to_string())?),
            (None, PolyVerdict::UnsatCertified(_)) => {
                unsat += 1;
                None
            }
            (None, _) => {
                unknown += 1;
                None
            }
        };
        if let Some(x) = x {
            ensure!(sys.holds(&x), "instance {}: solution fails", i);
            for r in [Q::zero(), q(3, 7)] {
                let m = red.forward(&x, &r).map_err(|e| e.to_string())?;
                ensure!(satisfies(&m, &red.formula).unwrap(), "instance {}: forward model fails", i);
                ensure!(red.backward(&m).map_err(|e| e.to_string())? == x, "instance {}: backward map differs", i);
            }
            sat += 1;
        }
    }
    ensure!(sat >= 50 && unsat >= 5, "inverse instances: {} sat, {} unsat, {} unknown", sat, unsat, unknown);

    let sys = InverseSystem::parse("vars 2\nx1 * x1 = 1").map_err(|e| e.to_string())?;
    let red = etr_inverse_to_ind(&sys).map_err(|e| e.to_string())?;
    let m = red.forward(&[qi(1), qi(1)], &Q::zero()).map_err(|e| e.to_string())?;
    ensure!(satisfies(&m, &red.formula).unwrap(), "square instance model fails");
    let eps = red.partitions[&16].unit();
    let d1 = BoolExpr::letter("D1");
    let both = d1.clone().and(BoolExpr::letter("C1"));
    ensure!(m.prob(&eps).unwrap() == q(1, 16), "P(eps) = {}", m.prob(&eps).unwrap());
    ensure!(m.prob(&both).unwrap() == q(1, 16), "intersection {}", m.prob(&both).unwrap());
    ensure!(m.prob(&d1).unwrap() == q(1, 4), "P(D1) = {}", m.prob(&d1).unwrap());
    Ok(format!(
        "same-cond: 100 equivalent, {} SAT, {} cross-checked; inverse: {} SAT transported, {} UNSAT, {} unknown; square constants 1/16 and 1/4",
        sc_sat, sc_decided, sat, unsat, unknown
    ))
}

// ---------------------------------------------------------------- 9

fn corrupt(c: &PsatzCertificate, rng: &mut ChaCha8Rng) -> PsatzCertificate {
    let mut bad = c.clone();
    let delta = loop {
        let d = q(rng.gen_range(-5..=5), rng.gen_range(1..=4));
        if !d.is_zero() {
            break d;
        }
    };
    let slots = bad.cone.len() + bad.ideal.len() + 1;
    match rng.gen_range(0..slots) {
        i if i < bad.cone.len() => bad.cone[i].coeff += delta,
        i if i < slots - 1 => {
            let t = &mut bad.ideal[i - bad.cone.len()];
            t.multiplier = t.multiplier.add(&Poly::constant(delta));
        }
        _ => {
            // keep d a positive integer so only the identity can fail
            bad.d += Q::one();
        }
    }
    bad
}

fn c9_psatz() -> Check {
    let x = Poly::var(0);
    let farkas_sets = PsatzSets { f: vec![], g: vec![x.clone(), x.neg().sub(&Poly::one())], h: vec![] };
    let fixture = PsatzCertificate {
        cone: vec![
            ConeTerm { coeff: qi(1), factors: vec![0], square: Monomial::one() },
            ConeTerm { coeff: qi(1), factors: vec![1], square: Monomial::one() },
        ],
        ideal: vec![],
        n: 0,
        d: qi(1),
    };
    ensure!(psatz_verify(&fixture, &farkas_sets) == Ok(true), "Farkas fixture rejected");

    let f = parse_formula("P(A) * P(A) > P(A)").unwrap();
    let ex = Expander::new(&free_letters(&f));
    let sys = ex.poly_system(&dnf(&f)[0]).map_err(|e| e.to_string())?;
    let square_sets = psatz_sets(&sys);
    let square = psatz_search(&square_sets, sys.vars.len(), 3, 4000).ok_or("no certificate for x^2 > x at degree 3")?;
    let deg = square.cone.iter().map(|t| t.factors.len()).max().unwrap_or(0);
    ensure!(deg <= 3, "certificate uses {} factors", deg);

    let mut emitted: Vec<(PsatzCertificate, PsatzSets)> = vec![(square, square_sets)];
    let found = psatz_search(&farkas_sets, 1, 1, 1000).ok_or("no certificate for the Farkas system")?;
    emitted.push((found, farkas_sets.clone()));
    for s in ["P(A) * P(B) > P(A)", "P(A & B) * P(A & B) > P(A & B) + P(B)"] {
        let f = parse_formula(s).unwrap();
        let ex = Expander::new(&free_letters(&f));
        let sys = ex.poly_system(&dnf(&f)[0]).map_err(|e| e.to_string())?;
        let sets = psatz_sets(&sys);
        if let Some(c) = psatz_search(&sets, sys.vars.len(), 2, 4000) {
            emitted.push((c, sets));
        }
    }
    for (c, s) in &emitted {
        ensure!(psatz_verify(c, s) == Ok(true), "emitted certificate rejected");
    }
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    for k in 0..100 {
        let (c, s) = &emitted[k % emitted.len()];
        let bad = corrupt(c, &mut rng);
        ensure!(psatz_verify(&bad, s) != Ok(true), "corruption {} accepted", k);
    }
    Ok(format!("fixture accepted, {} emitted certificates verified, 100/100 corruptions rejected, x^2 > x refuted with {} factors", emitted.len(), deg))
}

// ---------------------------------------------------------------- 10

fn c10_counting() -> Check {
    let mut found = 0;
    let mut seed = 50_000u64;
    let mut max_total = BTreeMap::new();
    while found < 500 {
        let f = generate(LanguageTag::Add, 1 + (seed % 3) as usize, 1 + (seed % 5) as usize, seed);
        seed += 1;
        let FormulaSat::Sat(m) = sat_additive(&f).map_err(|e| e.to_string())? else { continue };
        let l = Q::from_integer(lcm_denoms(m.weights.values()));
        let c = m.to_counting();
        for (v, w) in &m.weights {
            ensure!(c.weight(*v) == w * &l && c.weight(*v).is_integer(), "counts are not the scaled witness");
        }
        ensure!(eval_counting(&c, &f).map_err(|e| e.to_string())?, "counting model fails {}", f);
        *max_total.entry(c.total().to_integer().to_string().len()).or_insert(0) += 1;
        found += 1;
    }
    Ok(format!("500 satisfiable formulas (from {} draws) hold under counts", seed - 50_000))
}
