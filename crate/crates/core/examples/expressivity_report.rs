use probcalc::expressivity::hierarchy_report;

fn main() {
    let rep = hierarchy_report().unwrap();
    print!("{}", rep);
    println!("all verdicts as expected: {}", rep.all_ok());
}
