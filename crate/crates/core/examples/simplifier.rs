//! Normal forms produced by the simplifier, including quantifiers it can
//! eliminate over the integers and ones it leaves for windowed evaluation.

use quantrans::parser::parse_quantity;
use quantrans::syntax::{DomainSpec, State};
use quantrans::transformers::simplify;

fn main() {
    let dom = DomainSpec::uniform(&["x", "y"], (-4, 4), (-12, 12), 64);
    let at = State::from_pairs([("x", 3), ("y", -1)]);
    for src in [
        "max(x, min(x, y))",
        "-(min(x + 1, 2*y))",
        "min([x > 2], [x >= 0 && x < 10])",
        "Sup a. min([x = a + 1], a)",
        "Inf a. max([a != 10], [x = 10], a)",
        "Sup a. min([x = 2*a], a)",
        "Sup a. min([y = a % 3], a)",
    ] {
        let q = parse_quantity(src).unwrap();
        let s = simplify(&q);
        println!("{src}\n  => {s}\n  at {at}: {}", s.eval(&at, &dom).unwrap());
    }
}
