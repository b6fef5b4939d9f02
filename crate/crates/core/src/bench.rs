//! Random formulas per language and a timing harness.
//!
//! CSV columns: `id,lang,n,k,seed,verdict,kind,wall_ms,cases`. `kind` is
//! `exact`, `numeric` or `unknown`; `cases` counts the linear or polynomial
//! systems examined.

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::linsolve::{sat_additive, FormulaSat};
use crate::normalize::dnf;
use crate::polysolve::{sat_multiplicative, PolyBudget, PolyVerdict};
use crate::syntax::{Atom, BoolExpr, ConfirmDir, Formula, LanguageTag, Term};

fn letter_names(n: usize) -> Vec<String> {
    (0..n).map(|i| ((b'A' + (i % 26) as u8) as char).to_string() + &if i >= 26 { (i / 26).to_string() } else { String::new() }).collect()
}

fn random_bool(letters: &[String], rng: &mut ChaCha8Rng) -> BoolExpr {
    let lit = |rng: &mut ChaCha8Rng| {
        let l = BoolExpr::letter(&letters[rng.gen_range(0..letters.len())]);
        if rng.gen_bool(0.3) { l.not() } else { l }
    };
    match rng.gen_range(0..4) {
        0 | 1 => lit(rng),
        2 => lit(rng).and(lit(rng)),
        _ => lit(rng).or(lit(rng)),
    }
}

fn random_sum(letters: &[String], max_len: usize, rng: &mut ChaCha8Rng) -> Term {
    let mut t = Term::p(random_bool(letters, rng));
    for _ in 1..rng.gen_range(1..=max_len) {
        t = t.plus(Term::p(random_bool(letters, rng)));
    }
    t
}

fn random_poly_term(letters: &[String], rng: &mut ChaCha8Rng) -> Term {
    let mono = |rng: &mut ChaCha8Rng| {
        let mut m = Term::p(random_bool(letters, rng));
        for _ in 1..rng.gen_range(1..=2) {
            m = m.times(Term::p(random_bool(letters, rng)));
        }
        m
    };
    let mut t = mono(rng);
    for _ in 1..rng.gen_range(1..=3) {
        t = t.plus(mono(rng));
    }
    t
}

fn comparison(x: Term, y: Term, rng: &mut ChaCha8Rng) -> Formula {
    match rng.gen_range(0..3) {
        0 => Formula::geq(x, y),
        1 => Formula::gt(x, y),
        _ => Formula::eq(x, y),
    }
}

fn random_atom(lang: LanguageTag, letters: &[String], force_special: bool, rng: &mut ChaCha8Rng) -> Formula {
    use LanguageTag::*;
    let b = |rng: &mut ChaCha8Rng| random_bool(letters, rng);
    let r = rng;
    match lang {
        Comp => {
            let (x, y) = (Term::p(b(r)), Term::p(b(r)));
            comparison(x, y, r)
        }
        Add => {
            let (x, y) = (random_sum(letters, 4, r), random_sum(letters, 4, r));
            comparison(x, y, r)
        }
        SameCond => {
            let c = b(r);
            let (x, y) = (Term::Cond(b(r), c.clone()), Term::Cond(b(r), c));
            comparison(x, y, r)
        }
        Ind => {
            if force_special || r.gen_bool(0.5) {
                Formula::Atom(Atom::Indep(b(r), b(r)))
            } else {
                Formula::eq(Term::p(b(r)), Term::p(b(r)))
            }
        }
        Confirm => match (force_special, r.gen_range(0..3)) {
            (false, 0) => Formula::eq(Term::p(b(r)), Term::p(b(r))),
            (_, 1) => Formula::Atom(Atom::Indep(b(r), b(r))),
            _ => {
                let dir = if r.gen_bool(0.5) { ConfirmDir::CondOverUncond } else { ConfirmDir::UncondOverCond };
                Formula::Atom(Atom::Confirm { alpha: b(r), beta: b(r), dir })
            }
        },
        Cond => {
            let (x, y) = (Term::Cond(b(r), b(r)), Term::Cond(b(r), b(r)));
            comparison(x, y, r)
        }
        Quad => {
            let (x, y) = (Term::p(b(r)).times(Term::p(b(r))), Term::p(b(r)).times(Term::p(b(r))));
            comparison(x, y, r)
        }
        Poly => {
            let (x, y) = (random_poly_term(letters, r), random_poly_term(letters, r));
            comparison(x, y, r)
        }
    }
}

/// A random formula of `lang` with `k` atoms over `n` letters; deterministic in
/// `seed`. For `ind` and `confirm` one atom is always an independence or
/// confirmation atom, so the result does not fall into `comp`.
pub fn generate(lang: LanguageTag, n: usize, k: usize, seed: u64) -> Formula {
    let letters = letter_names(n.max(1));
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let special = rng.gen_range(0..k.max(1));
    let atoms: Vec<Formula> = (0..k.max(1))
        .map(|i| {
            let a = random_atom(lang, &letters, i == special, &mut rng);
            if rng.gen_bool(0.25) { a.not() } else { a }
        })
        .collect();
    let mut it = atoms.into_iter();
    let mut f = it.next().unwrap();
    for a in it {
        f = if rng.gen_bool(0.7) { f.and(a) } else { f.or(a) };
    }
    f
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PlanEntry {
    pub lang: LanguageTag,
    pub n: usize,
    pub k: usize,
    pub count: usize,
    pub timeout_ms: u64,
    pub seed: u64,
}

#[derive(Debug, Error)]
pub enum PlanError {
    #[error("line {line}: {msg}")]
    Bad { line: usize, msg: String },
}

/// Plan lines `lang,n,k,count,timeout_ms,seed`; blank lines and `#` comments skipped.
pub fn parse_plan(text: &str) -> Result<Vec<PlanEntry>, PlanError> {
    let mut out = Vec::new();
    for (ln, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap().trim();
        if line.is_empty() || line.starts_with("lang") {
            continue;
        }
        let bad = |msg: &str| PlanError::Bad { line: ln + 1, msg: msg.into() };
        let f: Vec<&str> = line.split(',').map(str::trim).collect();
        if f.len() != 6 {
            return Err(bad("expected 6 fields"));
        }
        let lang = LanguageTag::from_name(f[0]).ok_or_else(|| bad("unknown language"))?;
        let num = |s: &str| s.parse::<u64>().map_err(|_| bad("bad number"));
        out.push(PlanEntry {
            lang,
            n: num(f[1])? as usize,
            k: num(f[2])? as usize,
            count: num(f[3])? as usize,
            timeout_ms: num(f[4])?,
            seed: num(f[5])?,
        });
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq)]
pub struct BenchRow {
    pub id: usize,
    pub lang: LanguageTag,
    pub n: usize,
    pub k: usize,
    pub seed: u64,
    pub verdict: String,
    pub kind: &'static str,
    pub wall_ms: f64,
    pub cases: usize,
}

pub const CSV_HEADER: &str = "id,lang,n,k,seed,verdict,kind,wall_ms,cases";

impl BenchRow {
    pub fn to_csv(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{:.3},{}",
            self.id, self.lang, self.n, self.k, self.seed, self.verdict, self.kind, self.wall_ms, self.cases
        )
    }
}

fn run_one(id: usize, e: &PlanEntry, seed: u64) -> BenchRow {
    let f = generate(e.lang, e.n, e.k, seed);
    let t0 = Instant::now();
    let (verdict, kind, cases) = if matches!(e.lang, LanguageTag::Comp | LanguageTag::Add | LanguageTag::SameCond) {
        let cases = dnf(&f).len();
        match sat_additive(&f) {
            Ok(FormulaSat::Sat(_)) => ("SAT".to_string(), "exact", cases),
            Ok(FormulaSat::Unsat(_)) => ("UNSAT".to_string(), "exact", cases),
            Err(err) => (format!("ERROR {}", err), "unknown", cases),
        }
    } else {
        let budget = PolyBudget { timeout_ms: Some(e.timeout_ms), seed, ..PolyBudget::default() };
        match sat_multiplicative(&f, &budget) {
            Ok(v) => {
                let kind = match &v {
                    PolyVerdict::SatRational(_) | PolyVerdict::UnsatCertified(_) => "exact",
                    PolyVerdict::SatNumeric(_) => "numeric",
                    PolyVerdict::Unknown(_) => "unknown",
                };
                let cases = match &v {
                    PolyVerdict::Unknown(r) => r.cases,
                    _ => dnf(&f).len(),
                };
                (v.label().to_string(), kind, cases)
            }
            Err(err) => (format!("ERROR {}", err), "unknown", 0),
        }
    };
    BenchRow {
        id,
        lang: e.lang,
        n: e.n,
        k: e.k,
        seed,
        verdict,
        kind,
        wall_ms: t0.elapsed().as_secs_f64() * 1000.0,
        cases,
    }
}

/// Runs every instance of the plan on the rayon pool; rows come back ordered
/// by instance id. Instance `j` of an entry uses seed `entry.seed + j`.
pub fn run_bench(plan: &[PlanEntry]) -> Vec<BenchRow> {
    let jobs: Vec<(usize, &PlanEntry, u64)> = plan
        .iter()
        .flat_map(|e| (0..e.count).map(move |j| (e, e.seed + j as u64)))
        .enumerate()
        .map(|(id, (e, s))| (id, e, s))
        .collect();
    let mut rows: Vec<BenchRow> = jobs.par_iter().map(|(id, e, s)| run_one(*id, e, *s)).collect();
    rows.sort_by_key(|r| r.id);
    rows
}

pub fn to_csv(rows: &[BenchRow]) -> String {
    let mut s = String::from(CSV_HEADER);
    s.push('\n');
    for r in rows {
        s.push_str(&r.to_csv());
        s.push('\n');
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::classify;

    #[test]
    fn deterministic() {
        for lang in LanguageTag::ALL {
            assert_eq!(generate(lang, 3, 4, 9), generate(lang, 3, 4, 9));
        }
    }

    #[test]
    fn stays_in_language() {
        for lang in LanguageTag::ALL {
            for seed in 0..200 {
                let f = generate(lang, 3, 4, seed);
                let t = classify(&f).unwrap();
                assert!(t.leq(lang), "{} generated a {} formula", lang, t);
            }
        }
    }

    #[test]
    fn plan_round_trip() {
        let p = parse_plan("lang,n,k,count,timeout_ms,seed\ncomp,2,3,5,100,1\n# c\npoly,2,2,1,50,7").unwrap();
        assert_eq!(p.len(), 2);
        let rows = run_bench(&p);
        assert_eq!(rows.len(), 6);
        assert!(rows.iter().take(5).all(|r| r.kind == "exact"));
        assert!(to_csv(&rows).starts_with(CSV_HEADER));
    }
}
