use probcalc::axioms::{instantiate, lookup, schemas, soundness_fuzz, validity, Args};
use probcalc::polysolve::PolyBudget;
use probcalc::syntax::{parse_bool, render};

fn main() {
    for s in schemas() {
        let hit = soundness_fuzz(&s.name, 200, 1).unwrap();
        println!("{:<7} {:<8} {}", s.name, s.group.name(), if hit.is_some() { "countermodel" } else { "ok" });
    }
    let info = lookup("Quasi").unwrap();
    let args = Args { bools: vec![parse_bool("A").unwrap(), parse_bool("B").unwrap()], ..Args::default() };
    let f = instantiate(&info.name, &args).unwrap();
    println!("{}\n  valid: {}", render(&f), validity(&f, &PolyBudget::default()).unwrap().is_valid());
}
