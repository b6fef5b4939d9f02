use probcalc::num::q;
use probcalc::represent::{n2_chain, order_from_matrix, quad_representable_n2, sweep_n2, BilinearMatrix, QuadRepr};

fn main() {
    let survivors = sweep_n2(2);
    println!("{} two-atom orders pass the axiom checks", survivors.len());
    for o in &survivors {
        let QuadRepr::Yes { region, .. } = quad_representable_n2(o).unwrap() else { unreachable!() };
        println!("  {:<28} {}", region.to_string(), n2_chain(o));
    }
    let phi = BilinearMatrix::new(vec![vec![q(1, 16), q(3, 16)], vec![q(3, 16), q(9, 16)]]);
    let psi = BilinearMatrix::new(vec![vec![q(1, 12), q(3, 12)], vec![q(3, 12), q(5, 12)]]);
    let (a, ra) = order_from_matrix(&phi);
    let (b, rb) = order_from_matrix(&psi);
    println!("phi rank {}, psi rank {}, same order: {}", ra, rb, a == b);
}
