use num_traits::Zero;
use probcalc::bench::generate;
use probcalc::axioms::small_models;
use probcalc::linsolve::{sat_additive, FormulaSat};
use probcalc::num::{q, qi, Q};
use probcalc::polysolve::{sat_multiplicative, PolyBudget, PolyVerdict};
use probcalc::reductions::*;
use probcalc::semantics::satisfies;
use probcalc::syntax::{classify, LanguageTag};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn budget() -> PolyBudget {
    PolyBudget { timeout_ms: Some(2_000), ..PolyBudget::default() }
}

#[test]
fn same_cond_equisatisfiable() {
    let models = small_models(&["A", "B"], 6);
    let mut decided = 0;
    for seed in 0..100 {
        let f = generate(LanguageTag::SameCond, 2, 3, seed);
        let g = same_cond_to_comp(&f).unwrap();
        assert_eq!(classify(&g).unwrap(), LanguageTag::Comp);
        // same truth value in every small model
        for m in &models {
            assert_eq!(satisfies(m, &f).unwrap(), satisfies(m, &g).unwrap(), "seed {} model {}", seed, m);
        }
        let reduced = sat_additive(&g).unwrap();
        if let FormulaSat::Sat(m) = &reduced {
            assert!(satisfies(m, &f).unwrap(), "comp witness does not transfer");
        }
        // the original goes through the cross-multiplied polynomial route
        match sat_multiplicative(&f, &budget()).unwrap() {
            PolyVerdict::SatRational(m) => {
                assert!(reduced.is_sat(), "seed {}", seed);
                assert!(satisfies(&m, &g).unwrap());
                decided += 1;
            }
            PolyVerdict::SatNumeric(_) => {
                assert!(reduced.is_sat(), "seed {}", seed);
                decided += 1;
            }
            PolyVerdict::UnsatCertified(_) => {
                assert!(!reduced.is_sat(), "seed {}", seed);
                decided += 1;
            }
            PolyVerdict::Unknown(_) => {}
        }
    }
    assert!(decided >= 80, "only {} decided", decided);
}

#[test]
fn inverse_instances_round_trip() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let budget = budget();
    let (mut sat, mut unsat, mut other) = (0, 0, 0);
    for i in 0..100 {
        let n = 1 + i % 3;
        let (sys, plant) = generate_inverse(n, 1 + i % 4, 0.4, &mut rng);
        let red = etr_inverse_to_ind(&sys).unwrap();
        assert!(red.atom_count() <= red.atom_bound());
        let solution = match (plant, sat_multiplicative(&sys.to_poly_formula(), &budget).unwrap()) {
            (Some(x), v) => {
                assert!(sys.holds(&x));
                assert!(!matches!(v, PolyVerdict::UnsatCertified(_)), "planted instance certified unsat: {}", sys);
                Some(x)
            }
            (None, PolyVerdict::SatRational(m)) => Some(sys.from_poly_model(&m).unwrap()),
            (None, PolyVerdict::UnsatCertified(_)) => {
                unsat += 1;
                None
            }
            (None, _) => {
                other += 1;
                None
            }
        };
        if let Some(x) = solution {
            assert!(sys.holds(&x), "{}", sys);
            sat += 1;
            for r in [Q::zero(), q(3, 7)] {
                let m = red.forward(&x, &r).unwrap();
                assert!(satisfies(&m, &red.formula).unwrap(), "forward model fails for {}", sys);
                let back = red.backward(&m).unwrap();
                assert!(sys.holds(&back));
                assert_eq!(back, x);
            }
        }
    }
    assert_eq!(sat + unsat + other, 100);
    assert!(sat >= 50 && unsat >= 5, "sat {} unsat {} other {}", sat, unsat, other);
}

#[test]
fn inverse_pair_constants() {
    let sys = InverseSystem::parse("x1 * x2 = 1").unwrap();
    let red = etr_inverse_to_ind(&sys).unwrap();
    let m = red.forward(&[qi(1), qi(1)], &Q::zero()).unwrap();
    let eps16 = red.partitions[&16].unit();
    assert_eq!(m.prob(&eps16).unwrap(), q(1, 16));
}

#[test]
fn supports_agree_with_direct() {
    let budget = budget();
    let mut compared = 0;
    for seed in 0..40 {
        let f = generate(LanguageTag::Quad, 2, 2, seed);
        let a = sat_via_supports(&f, &budget).unwrap();
        let b = sat_multiplicative(&f, &budget).unwrap();
        let sat = |v: &PolyVerdict| match v {
            PolyVerdict::SatRational(_) | PolyVerdict::SatNumeric(_) => Some(true),
            PolyVerdict::UnsatCertified(_) => Some(false),
            PolyVerdict::Unknown(_) => None,
        };
        if let (Some(x), Some(y)) = (sat(&a), sat(&b)) {
            assert_eq!(x, y, "seed {}", seed);
            compared += 1;
        }
    }
    assert!(compared >= 30);
}
