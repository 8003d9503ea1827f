//! Both Galois connections checked on a finite box. The box cuts off
//! states, so the guarded variant restricts f and g to its interior first.

use quantrans::parser::{parse_program, parse_quantity};
use quantrans::proofs::{check_galois, galois_guarded, Galois};
use quantrans::syntax::DomainSpec;

fn main() {
    let dom = DomainSpec::uniform(&["x"], (-6, 6), (-16, 16), 64);
    let q = |s: &str| parse_quantity(s).unwrap();
    let cases = [
        (Galois::WlpSp, "x := x + 1", "2*x", "2*x - 2"),
        (Galois::WlpSp, "x := x + 1", "[x <= 5]", "[x = 6]"),
        (Galois::WpSlp, "{x := x - 1} [] {x := x + 1}", "x", "x + 1"),
        (Galois::WpSlp, "if (x < 0) {x := 0 - x} else {skip}", "[x > 2]", "[x < -2 || x > 2]"),
    ];
    for (which, c, f, g) in cases {
        let c = parse_program(c).unwrap();
        let r = check_galois(which, &c, &q(f), &q(g), &dom);
        println!("{which:?} {c} f={f} g={g}");
        println!("  left {}  right {}  => {}", r.left, r.right, r.verdict);
        let (gf, gg) = galois_guarded(which, &q(f), &q(g), &dom);
        let r = check_galois(which, &c, &gf, &gg, &dom);
        println!("  guarded => {}", r.verdict);
    }
}
