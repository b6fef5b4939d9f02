use probcalc::polysolve::{sat_multiplicative, PolyBudget, PolyVerdict};
use probcalc::syntax::{parse_bool, parse_formula};

fn main() {
    // P(A & B) = 1/2 and P(A & B) = P(B)^2
    let f = parse_formula("P(A & B) = P(~(A & B)) && P(A |: B) = P(B)").unwrap();
    match sat_multiplicative(&f, &PolyBudget::default()).unwrap() {
        PolyVerdict::SatNumeric(w) => {
            let pb = w.prob(&parse_bool("B").unwrap()).unwrap();
            println!("P(B) = {:.12}  1/sqrt(2) = {:.12}  residual {:.2e}", pb, 0.5f64.sqrt(), w.residual);
        }
        other => println!("{}", other.label()),
    }
}
