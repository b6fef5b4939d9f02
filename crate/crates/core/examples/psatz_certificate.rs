use probcalc::normalize::{dnf, Expander};
use probcalc::polysolve::{psatz_search, psatz_sets, psatz_verify};
use probcalc::syntax::{free_letters, parse_formula};

fn main() {
    let f = parse_formula("P(A) * P(A) > P(A)").unwrap();
    let ex = Expander::new(&free_letters(&f));
    let sys = ex.poly_system(&dnf(&f)[0]).unwrap();
    println!("system:\n{}", sys.to_text());
    let sets = psatz_sets(&sys);
    let c = psatz_search(&sets, sys.vars.len(), 3, 4000).expect("certificate");
    print!("{}", c.to_text(&|v| format!("x[{}]", sys.vars[v])));
    println!("verified: {}", psatz_verify(&c, &sets).unwrap());
}
