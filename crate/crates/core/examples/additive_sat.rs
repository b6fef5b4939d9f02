use probcalc::linsolve::{minimize_support, sat_additive, FormulaSat};
use probcalc::syntax::parse_formula;

fn main() {
    for s in [
        "P(A) > P(B) && P(B) > P(C) && P(C) > P(A & B)",
        "P(A) + P(B) = P(T) && P(A & B) > P(F)",
        "P(A) > P(T)",
    ] {
        let f = parse_formula(s).unwrap();
        match sat_additive(&f).unwrap() {
            FormulaSat::Sat(m) => {
                let small = minimize_support(&f, &m);
                println!("{}\n  SAT {}\n  minimized support {}: {}", s, m, small.support(), small);
            }
            FormulaSat::Unsat(traces) => {
                println!("{}\n  UNSAT", s);
                for t in traces {
                    println!("  eliminated {:?}, {}", t.eliminated, t.contradiction);
                }
            }
        }
    }
}
