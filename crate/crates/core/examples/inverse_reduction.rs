use probcalc::num::{fmt_q, q, qi};
use probcalc::reductions::{etr_inverse_to_ind, InverseSystem};
use probcalc::semantics::satisfies;
use probcalc::syntax::classify;

fn main() {
    let sys = InverseSystem::parse("x1 * x2 = 1\nx2 + x2 = x3").unwrap();
    let red = etr_inverse_to_ind(&sys).unwrap();
    println!(
        "{} letters, {} atoms (bound {}), language {}",
        red.letters.len(),
        red.atom_count(),
        red.atom_bound(),
        classify(&red.formula).unwrap()
    );
    let x = vec![qi(2), q(1, 2), qi(1)];
    assert!(sys.holds(&x));
    let m = red.forward(&x, &q(1, 3)).unwrap();
    println!("forward model satisfies: {}", satisfies(&m, &red.formula).unwrap());
    let back: Vec<String> = red.backward(&m).unwrap().iter().map(fmt_q).collect();
    println!("read back x = {:?}", back);
}
