use probcalc::axioms::*;
use probcalc::polysolve::PolyBudget;
use probcalc::syntax::parse_bool;

#[test]
fn every_schema_survives_fuzzing() {
    let mut names: Vec<String> = schemas().into_iter().filter(|s| s.group != Group::Invalid).map(|s| s.name).collect();
    names.extend(["FinCan:1", "FinCan:2", "FinCan:3"].map(String::from));
    for (i, n) in names.iter().enumerate() {
        let hit = soundness_fuzz(n, 300, 17 + i as u64).unwrap();
        assert!(hit.is_none(), "{} failed: {:?}", n, hit.map(|(f, m)| (f.to_string(), m.to_string())));
    }
}

#[test]
fn exhaustive_two_letter_instances() {
    let models = small_models(&["A", "B"], 4);
    for n in ["Quasi", "Dist", "Add", "FinCan:1"] {
        let pool = instance_pool(n, 300, 5).unwrap();
        assert!(!pool.is_empty());
        assert!(check_instances(&pool, &models).unwrap().is_none(), "{}", n);
    }
    let bad = instance_pool("Geq", 300, 5).unwrap();
    assert!(check_instances(&bad, &models).unwrap().is_some());
}

#[test]
fn solver_validity_agrees() {
    let b = |s: &str| parse_bool(s).unwrap();
    let budget = PolyBudget::default();
    let quasi = instantiate("Quasi", &Args { bools: vec![b("A | B"), b("B")], ..Default::default() }).unwrap();
    assert!(validity(&quasi, &budget).unwrap().is_valid());
    let fc = instantiate("FinCan:2", &Args { bools: vec![b("A"), b("B"), b("B"), b("A")], ..Default::default() }).unwrap();
    assert!(validity(&fc, &budget).unwrap().is_valid());
    let bad = instantiate("Geq", &Args { bools: vec![b("A"), b("B")], ..Default::default() }).unwrap();
    assert!(matches!(validity(&bad, &budget).unwrap(), Validity::Countermodel(_)));
}

#[test]
fn quasi_matches_fincan3_on_three_atoms() {
    let (count, mismatches) = quasi_vs_fincan(3, 3);
    assert_eq!(count, 85220);
    assert!(mismatches.is_empty(), "{:?}", &mismatches[..mismatches.len().min(3)]);
}
