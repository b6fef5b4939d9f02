use probcalc::polysolve::PolyBudget;
use probcalc::reductions::{poly_to_etr, sat_via_supports, support_candidates};
use probcalc::syntax::parse_formula;

fn main() {
    let f = parse_formula("P(A) * P(B) > P(A & B) && P(A) >= P(B)").unwrap();
    let s = poly_to_etr(&f).unwrap();
    println!("{}", s.to_text());
    println!("{}", s.to_smtlib());
    let (k, cands) = support_candidates(&f);
    println!("support size {} over {} candidates", k, cands.len());
    println!("{}", sat_via_supports(&f, &PolyBudget::default()).unwrap().label());
}
