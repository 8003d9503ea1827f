//! Loop proof rules and triples. The triple is read from a file next to
//! this example, in the same format the `check` subcommand takes.

use std::fs;
use std::path::Path;

use quantrans::parser::{parse_program, parse_quantity, parse_triple_file};
use quantrans::proofs::{check_induction, check_one_shot, check_triple, Triple};
use quantrans::syntax::DomainSpec;
use quantrans::transformers::Mode;

fn main() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("examples/programs");
    let q = |s: &str| parse_quantity(s).unwrap();
    let dom = DomainSpec::uniform(&["x"], (-8, 24), (-16, 16), 64);

    // [x % 4 = 0] is necessary for reaching x = 12.
    let lp = parse_program(&fs::read_to_string(dir.join("step_four.ngcl")).unwrap()).unwrap();
    let r = check_induction(Mode::Slp, &lp, &q("[x = 12]"), &q("[x % 4 = 0]"), &q("[x % 4 = 0]"), &dom);
    println!("slp induction for {lp}");
    for p in &r.premises {
        println!("  {p}");
    }
    println!("  {}: {}\n", r.verdict, r.conclusion);

    let tf = parse_triple_file(&fs::read_to_string(dir.join("step_four.triple")).unwrap()).unwrap();
    let c = parse_program(&fs::read_to_string(dir.join(&tf.program_path)).unwrap()).unwrap();
    let t = Triple { kind: tf.kind, pre: tf.pre, program: c, post: tf.post };
    let r = check_triple(&t, &dom);
    println!("{} triple", t.kind);
    for f in &r.formulations {
        println!("  {}: {}", f.statement, f.verdict);
    }
    println!("  {}\n", r.verdict);

    // One step of sp that does not grow the prequantity closes the loop.
    let small = DomainSpec::uniform(&["x"], (-2, 14), (-16, 16), 64);
    for (src, f) in [("while (x < 10) {{x := x + 1} [] {x := x + 2}}", "[x >= 0]"), ("while (x < 10) {x := x - 1}", "x")] {
        let lp = parse_program(src).unwrap();
        match check_one_shot(Mode::Sp, &lp, &q(f), &small) {
            Ok(r) if r.applies => println!("one-shot sp for {lp} from {f}: {}", r.result),
            Ok(_) => println!("one-shot sp for {lp} from {f}: does not apply"),
            Err(v) => println!("one-shot sp for {lp} from {f}: {v}"),
        }
    }
}
