use probcalc::num::q;
use probcalc::represent::{check_definetti_axioms, check_sk, representable, CompOrder, NonRepr, Representability, SkResult};

fn show(name: &str, o: &CompOrder) {
    let rel = o.closure().unwrap();
    let failed: Vec<&str> = check_definetti_axioms(&rel).iter().filter(|a| !a.passed()).map(|a| a.name).collect();
    println!("{}: {} atoms, failing axioms {:?}", name, o.atoms, failed);
    match representable(o).unwrap() {
        Representability::Yes(w) => println!("  representable, weights {:?}", w.iter().map(|x| x.to_string()).collect::<Vec<_>>()),
        Representability::No(NonRepr::Balanced(c)) => println!("  not representable, balanced certificate:\n{}", c),
        Representability::No(other) => println!("  not representable: {:?}", other),
    }
    if let SkResult::Violated(c) = check_sk(&rel, 4, 1) {
        println!("  S_4 violated with {} pairs", c.distinct_pairs());
    }
}

fn main() {
    show("measure", &CompOrder::from_measure(&[q(1, 2), q(1, 3), q(1, 6)]));
    let text = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/fixtures/order5.json")).unwrap();
    show("order5", &CompOrder::from_json(&serde_json::from_str(&text).unwrap()).unwrap());
}
