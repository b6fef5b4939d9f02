use probcalc::bench::{parse_plan, run_bench, to_csv};

fn main() {
    let plan = parse_plan("lang,n,k,count,timeout_ms,seed\ncomp,3,4,5,500,1\nadd,3,4,5,500,1\nquad,2,2,3,1000,1").unwrap();
    print!("{}", to_csv(&run_bench(&plan)));
}
