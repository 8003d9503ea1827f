//! The collecting semantics: run a program on a set of states inside a
//! finite box, then read reference transformer values off the input-output
//! relation and compare them with the symbolic results.

use quantrans::oracle::{collect, compare, Config, EscapePolicy, Relation};
use quantrans::parser::{parse_program, parse_quantity};
use quantrans::syntax::{DomainSpec, State};
use quantrans::transformers::{transform, Mode, TransformConfig};

fn main() {
    // The branch with x > 5 climbs out of any box; `drop` treats leaving
    // the box as divergence, `error` refuses to answer.
    let c = parse_program("while (x > 5) {x := x + 1}").unwrap();
    let dom = DomainSpec::uniform(&["x"], (0, 64), (-16, 16), 128);
    let init: Config = [State::from_pairs([("x", 0)]), State::from_pairs([("x", 8)])].into();
    for policy in [EscapePolicy::Drop, EscapePolicy::Error] {
        match collect(&c, &init, &dom, policy) {
            Ok(out) => {
                let shown: Vec<String> = out.iter().map(ToString::to_string).collect();
                println!("{policy:?}: {{x=0}}, {{x=8}} -> {{{}}}", shown.join(", "))
            }
            Err(e) => println!("{policy:?}: {e}"),
        }
    }

    // Runs start in the middle box and must stay in the outer one, and
    // values are compared on the inner box, whose predecessors all lie in
    // the middle one. Then neither edge can pass for divergence or for
    // unreachability.
    let c = parse_program("if (x < y) {x := x + 1} else {{y := y - 1} [] {skip}}").unwrap();
    let inner = DomainSpec::uniform(&["x", "y"], (-3, 3), (-16, 16), 64);
    let middle = DomainSpec::uniform(&["x", "y"], (-5, 5), (-16, 16), 64);
    let outer = DomainSpec::uniform(&["x", "y"], (-8, 8), (-16, 16), 64);
    let rel = Relation::from_initial(&c, middle.states(), &outer, EscapePolicy::Error).unwrap();
    let f = parse_quantity("x + y").unwrap();
    let cfg = TransformConfig::new(inner.clone());
    for mode in Mode::ALL {
        let sym = transform(mode, &c, &f, &cfg).unwrap();
        let verdict = match compare(&rel, mode, &f, &sym.quantity, inner.states()).unwrap() {
            None => format!("agrees on all {} states", inner.size()),
            Some(m) => format!("differs: {m}"),
        };
        println!("{mode:<4} {}  {verdict}", sym.quantity);
    }
}
