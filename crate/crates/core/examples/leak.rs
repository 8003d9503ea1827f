//! What an observer of `lo` learns about the initial `hi`, for a branching
//! program and for a loop.

use std::fs;
use std::path::Path;

use quantrans::infoflow::{leak, reachable_states};
use quantrans::oracle::EscapePolicy;
use quantrans::parser::parse_program;
use quantrans::syntax::{var, DomainSpec};

fn main() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("examples/programs");
    let load = |name: &str| parse_program(&fs::read_to_string(dir.join(name)).unwrap()).unwrap();

    let flow = load("branch_flow.ngcl");
    let dom = DomainSpec::uniform(&["hi"], (-2, 12), (-16, 16), 64).with_interval("lo", (0, 127));
    let reach = reachable_states(&flow, &dom, EscapePolicy::Error).unwrap();
    println!("{flow}: {} reachable final states, oracle agrees: {:?}", reach.states.len(), reach.agrees_with_oracle());
    println!("{}\n", leak(&flow, &var("hi"), &var("lo"), &dom).unwrap());

    let lp = load("loop_flow.ngcl");
    let dom = DomainSpec::uniform(&["hi", "lo"], (-4, 12), (-16, 16), 64);
    let r = leak(&lp, &var("hi"), &var("lo"), &dom).unwrap();
    println!("{lp}");
    print!("{}", r.table());
}
