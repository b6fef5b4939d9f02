use probcalc::linsolve::{sat_additive, FormulaSat};
use probcalc::semantics::eval_counting;
use probcalc::syntax::parse_formula;

fn main() {
    let f = parse_formula("P(A) + P(A) = P(B) && P(B) > P(A & B) + P(A & B)").unwrap();
    let FormulaSat::Sat(m) = sat_additive(&f).unwrap() else { panic!("unsat") };
    let c = m.to_counting();
    println!("rational witness {}\ncounting witness {}", m, c);
    println!("holds with counts: {}", eval_counting(&c, &f).unwrap());
}
