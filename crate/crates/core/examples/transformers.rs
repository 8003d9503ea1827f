//! The four transformers on straight-line code, a nondeterministic choice
//! and a loop. Loop results say whether Kleene iteration converged or was
//! cut off, and in which direction a truncated result is a bound.

use quantrans::parser::{parse_program, parse_quantity};
use quantrans::syntax::DomainSpec;
use quantrans::transformers::{transform, Mode, TransformConfig};

fn main() {
    let probe = DomainSpec::uniform(&["x", "y"], (-8, 8), (-16, 16), 32);
    let cfg = TransformConfig::new(probe);
    let cases = [
        ("x := x + 1", "x"),
        ("x := 10", "x"),
        ("{x := x + 1} [] {x := 2*x}", "x"),
        ("if (x < y) {x := y} else {skip}", "x - y"),
        ("while (x < 10) {x := x + 4}", "[x % 4 = 0]"),
    ];
    for (src, f) in cases {
        let c = parse_program(src).unwrap();
        let f = parse_quantity(f).unwrap();
        println!("{c}   with {f}");
        for mode in Mode::ALL {
            let r = transform(mode, &c, &f, &cfg).unwrap();
            println!("  {mode:<4} {r}");
        }
    }
}
