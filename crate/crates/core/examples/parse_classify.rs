use probcalc::syntax::{accepting_tags, classify, parse_formula, render};

fn main() {
    let inputs = [
        "P(A) >= P(B)",
        "P(A) + P(B) > P(A & B)",
        "P(A |: C) >= P(B |: C)",
        "indep(A, B) && P(A) = P(B)",
        "P(A |: B) > P(A)",
        "P(A |: B) >= P(C |: D)",
        "P(A) * P(B) >= P(C) * P(C)",
        "P(A) * P(A) * P(B) + P(C) > P(T)",
    ];
    for s in inputs {
        let f = parse_formula(s).unwrap();
        let tags: Vec<&str> = accepting_tags(&f).iter().map(|t| t.name()).collect();
        println!("{:<40} {:<10} [{}]", render(&f), classify(&f).unwrap().name(), tags.join(" "));
    }
}
