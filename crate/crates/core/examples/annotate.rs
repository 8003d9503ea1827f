//! Annotates each program point with the intermediate quantity, the way a
//! hand derivation would write them between statements.

use quantrans::annotate::annotate;
use quantrans::parser::{parse_program, parse_quantity};
use quantrans::syntax::DomainSpec;
use quantrans::transformers::{Mode, TransformConfig};

fn main() {
    let c = parse_program("hi := hi + 5; while (lo < hi) {lo := lo + 1}").unwrap();
    let cfg = TransformConfig::new(DomainSpec::uniform(&["hi", "lo"], (-4, 12), (-16, 16), 64));
    for (mode, f) in [(Mode::Sp, "hi"), (Mode::Slp, "hi"), (Mode::Wlp, "[lo >= hi]")] {
        let f = parse_quantity(f).unwrap();
        println!("{mode} from {f}:");
        println!("{}\n", annotate(mode, &c, &f, &cfg).unwrap());
    }
}
