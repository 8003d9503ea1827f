//! Order checks, loop proof rules, triples and Galois connections.
//!
//! Every check reduces to `g ⪯ f`, decided by evaluating both sides on each
//! state of a finite domain. A check that needs a truncated transform answers
//! `Unknown` instead of guessing.

use std::fmt;

use crate::lattice::ExtReal;
use crate::parser::TripleKind;
use crate::syntax::{AExpr, BExpr, CmpOp, DomainSpec, Program, Quantity, State};
use crate::transformers::{self, mk_max, mk_min, AnalysisResult, Mode, TransformConfig};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Verdict {
    Holds,
    /// `left ⪯ right` is violated at `state`.
    Fails { state: State, left: ExtReal, right: ExtReal },
    Unknown(String),
}

impl Verdict {
    pub fn holds(&self) -> bool {
        matches!(self, Verdict::Holds)
    }

    pub fn fails(&self) -> bool {
        matches!(self, Verdict::Fails { .. })
    }

    pub fn is_unknown(&self) -> bool {
        matches!(self, Verdict::Unknown(_))
    }

    /// Both must hold; the first failure or unknown wins.
    pub fn and(self, other: Verdict) -> Verdict {
        match self {
            Verdict::Holds => other,
            v => v,
        }
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Verdict::Holds => f.write_str("holds"),
            Verdict::Fails { state, left, right } => write!(f, "fails at {state}: {left} > {right}"),
            Verdict::Unknown(why) => write!(f, "unknown: {why}"),
        }
    }
}

/// `g ⪯ f` on every state of `dom`; otherwise the first violating state in
/// lexicographic order.
pub fn check_order(g: &Quantity, f: &Quantity, dom: &DomainSpec) -> Verdict {
    for s in dom.states() {
        let (left, right) = match (g.eval(&s, dom), f.eval(&s, dom)) {
            (Ok(l), Ok(r)) => (l, r),
            (Err(e), _) | (_, Err(e)) => return Verdict::Unknown(format!("evaluation failed at {s}: {e}")),
        };
        if left > right {
            return Verdict::Fails { state: s, left, right };
        }
    }
    Verdict::Holds
}

fn config(dom: &DomainSpec) -> TransformConfig {
    TransformConfig::new(dom.clone())
}

/// A transform whose result can be trusted as an equality.
fn decided(mode: Mode, c: &Program, f: &Quantity, dom: &DomainSpec) -> Result<Quantity, Verdict> {
    match transformers::transform(mode, c, f, &config(dom)) {
        Ok(AnalysisResult { status, .. }) if status.is_truncated() => {
            Err(Verdict::Unknown(format!("{mode} transform {status}")))
        }
        Ok(r) => Ok(r.quantity),
        Err(e) => Err(Verdict::Unknown(format!("{mode} transform failed: {e}"))),
    }
}

fn split_loop(lp: &Program) -> Result<(&BExpr, &Program), Verdict> {
    match lp {
        Program::While(b, body) => Ok((b, body)),
        other => Err(Verdict::Unknown(format!("not a loop: {other}"))),
    }
}

fn guard(b: &BExpr) -> Quantity {
    transformers::simplify(&Quantity::iverson(b.clone()))
}

fn not_guard(b: &BExpr) -> Quantity {
    transformers::simplify(&Quantity::iverson(BExpr::not(b.clone())))
}

/// One premise of a proof rule, as an order check.
#[derive(Debug, Clone)]
pub struct Premise {
    pub left: Quantity,
    pub right: Quantity,
    pub verdict: Verdict,
}

impl fmt::Display for Premise {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}  <=  {}  : {}", self.left, self.right, self.verdict)
    }
}

#[derive(Debug, Clone)]
pub struct InductionReport {
    pub rule: Mode,
    pub premises: Vec<Premise>,
    /// What the rule concludes when every premise holds.
    pub conclusion: String,
    pub verdict: Verdict,
}

fn premise(left: Quantity, right: Quantity, dom: &DomainSpec) -> Premise {
    let verdict = check_order(&left, &right, dom);
    Premise { left, right, verdict }
}

/// Checks the premises of the mode's induction rule for `lp` with invariant
/// `i`.
///
/// * wlp: `g ⪯ i ⪯ [¬φ]⋏f ⋎ [φ]⋏wlp⟦C⟧(i)` gives `g ⪯ wlp⟦lp⟧(f)`
/// * sp: `g ⋎ sp⟦C⟧([φ]⋏i) ⪯ i` and `[¬φ]⋏i ⪯ f` give `sp⟦lp⟧(g) ⪯ f`
/// * wp: `[¬φ]⋏f ⋎ [φ]⋏wp⟦C⟧(i) ⪯ i ⪯ g` gives `wp⟦lp⟧(f) ⪯ g`
/// * slp: `i ⪯ g ⋏ slp⟦C⟧([¬φ]⋎i)` and `f ⪯ [φ]⋎i` give `f ⪯ slp⟦lp⟧(g)`
pub fn check_induction(
    rule: Mode,
    lp: &Program,
    f: &Quantity,
    g: &Quantity,
    i: &Quantity,
    dom: &DomainSpec,
) -> InductionReport {
    let unknown = |v: Verdict| InductionReport {
        rule,
        premises: Vec::new(),
        conclusion: String::new(),
        verdict: v,
    };
    let (b, body) = match split_loop(lp) {
        Ok(x) => x,
        Err(v) => return unknown(v),
    };
    let simp = transformers::simplify;
    let (f, g, i) = (simp(f), simp(g), simp(i));
    let result = (|| -> Result<(Vec<Premise>, String), Verdict> {
        Ok(match rule {
            Mode::Wlp | Mode::Wp => {
                let t = decided(rule, body, &i, dom)?;
                let phi = mk_max(vec![mk_min(vec![not_guard(b), f.clone()]), mk_min(vec![guard(b), t])]);
                if rule == Mode::Wlp {
                    (
                        vec![premise(g.clone(), i.clone(), dom), premise(i.clone(), phi, dom)],
                        format!("{g}  <=  wlp[{lp}]({f})"),
                    )
                } else {
                    (
                        vec![premise(phi, i.clone(), dom), premise(i.clone(), g.clone(), dom)],
                        format!("wp[{lp}]({f})  <=  {g}"),
                    )
                }
            }
            Mode::Sp => {
                let t = decided(rule, body, &mk_min(vec![guard(b), i.clone()]), dom)?;
                (
                    vec![
                        premise(mk_max(vec![g.clone(), t]), i.clone(), dom),
                        premise(mk_min(vec![not_guard(b), i.clone()]), f.clone(), dom),
                    ],
                    format!("sp[{lp}]({g})  <=  {f}"),
                )
            }
            Mode::Slp => {
                let t = decided(rule, body, &mk_max(vec![not_guard(b), i.clone()]), dom)?;
                (
                    vec![
                        premise(i.clone(), mk_min(vec![g.clone(), t]), dom),
                        premise(f.clone(), mk_max(vec![guard(b), i.clone()]), dom),
                    ],
                    format!("{f}  <=  slp[{lp}]({g})"),
                )
            }
        })
    })();
    match result {
        Ok((premises, conclusion)) => {
            let verdict = premises.iter().fold(Verdict::Holds, |acc, p| acc.and(p.verdict.clone()));
            InductionReport { rule, premises, conclusion, verdict }
        }
        Err(v) => unknown(v),
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OneShot {
    pub applies: bool,
    /// `[¬φ]⋏f` for sp, `[φ]⋎f` for slp; meaningful only when `applies`.
    pub result: Quantity,
}

/// The one-step convergence rules: `sp⟦C⟧(f) ⪯ f` gives
/// `sp⟦while⟧(f) = [¬φ]⋏f`, and `f ⪯ slp⟦C⟧(f)` gives `slp⟦while⟧(f) = [φ]⋎f`.
pub fn check_one_shot(mode: Mode, lp: &Program, f: &Quantity, dom: &DomainSpec) -> Result<OneShot, Verdict> {
    let (b, body) = split_loop(lp)?;
    let f = transformers::simplify(f);
    let t = decided(mode, body, &f, dom)?;
    let (premise, result) = match mode {
        Mode::Sp => (check_order(&t, &f, dom), mk_min(vec![not_guard(b), f])),
        Mode::Slp => (check_order(&f, &t, dom), mk_max(vec![guard(b), f])),
        other => return Err(Verdict::Unknown(format!("no one-shot rule for {other}"))),
    };
    if let Verdict::Unknown(_) = premise {
        return Err(premise);
    }
    Ok(OneShot { applies: premise.holds(), result })
}

#[derive(Debug, Clone)]
pub struct Triple {
    pub kind: TripleKind,
    pub pre: Quantity,
    pub program: Program,
    pub post: Quantity,
}

/// One way of stating a triple as an order check.
#[derive(Debug, Clone)]
pub struct Formulation {
    pub statement: String,
    pub verdict: Verdict,
}

#[derive(Debug, Clone)]
pub struct TripleReport {
    pub formulations: Vec<Formulation>,
    pub verdict: Verdict,
}

/// Validity of a triple with precondition `G = t.pre` and postcondition
/// `F = t.post`:
///
/// * partial correctness: `G ⪯ wlp⟦C⟧(F)`, equivalently `sp⟦C⟧(G) ⪯ F`
/// * total correctness: `G ⪯ wp⟦C⟧(F)`
/// * total incorrectness: `F ⪯ sp⟦C⟧(G)`
/// * partial incorrectness: `F ⪯ slp⟦C⟧(G)`, equivalently `wp⟦C⟧(F) ⪯ G`
/// * necessary liberal pre: `wlp⟦C⟧(F) ⪯ G`
/// * necessary liberal post: `slp⟦C⟧(G) ⪯ F`
///
/// Kinds with two formulations check both. If one side is truncated the
/// other decides; if both are decided and disagree the result is `Unknown`
/// with an internal-error note, since the two are equal in theory.
pub fn check_triple(t: &Triple, dom: &DomainSpec) -> TripleReport {
    use TripleKind::*;
    let (c, pre, post) = (&t.program, &t.pre, &t.post);
    // (left is pre side?, mode, transformed quantity, other side)
    let one = |mode: Mode, arg: &Quantity, other: &Quantity, transformed_on_left: bool| -> Formulation {
        let name = format!("{mode}[C]({arg})");
        match decided(mode, c, arg, dom) {
            Ok(q) => {
                let (statement, verdict) = if transformed_on_left {
                    (format!("{name}  <=  {other}"), check_order(&q, other, dom))
                } else {
                    (format!("{other}  <=  {name}"), check_order(other, &q, dom))
                };
                Formulation { statement, verdict }
            }
            Err(v) => Formulation {
                statement: if transformed_on_left { format!("{name}  <=  {other}") } else { format!("{other}  <=  {name}") },
                verdict: by_induction(mode, c, arg, other, transformed_on_left, dom).unwrap_or(v),
            },
        }
    };
    let formulations = match t.kind {
        PartialCorrectness => vec![one(Mode::Wlp, post, pre, false), one(Mode::Sp, pre, post, true)],
        TotalCorrectness => vec![one(Mode::Wp, post, pre, false)],
        TotalIncorrectness => vec![one(Mode::Sp, pre, post, false)],
        PartialIncorrectness => vec![one(Mode::Slp, pre, post, false), one(Mode::Wp, post, pre, true)],
        NecessaryLiberalPre => vec![one(Mode::Wlp, post, pre, true)],
        NecessaryLiberalPost => vec![one(Mode::Slp, pre, post, true)],
    };
    let verdict = combine_formulations(&formulations);
    TripleReport { formulations, verdict }
}

/// Settles a bound on a truncated loop transform with the mode's induction
/// rule, taking the bounding side itself as the invariant. Only a success is
/// conclusive; a failed premise leaves the bound undecided.
fn by_induction(mode: Mode, c: &Program, arg: &Quantity, other: &Quantity, on_left: bool, dom: &DomainSpec) -> Option<Verdict> {
    if !matches!(c, Program::While(..)) {
        return None;
    }
    let r = match (mode, on_left) {
        (Mode::Wp, true) => check_induction(mode, c, arg, other, other, dom),
        (Mode::Wlp, false) => check_induction(mode, c, arg, other, other, dom),
        (Mode::Sp, true) => check_induction(mode, c, other, arg, other, dom),
        (Mode::Slp, false) => check_induction(mode, c, other, arg, other, dom),
        _ => return None,
    };
    r.verdict.holds().then_some(Verdict::Holds)
}

fn combine_formulations(fs: &[Formulation]) -> Verdict {
    let decided: Vec<&Verdict> = fs.iter().map(|f| &f.verdict).filter(|v| !v.is_unknown()).collect();
    match decided.as_slice() {
        [] => fs[0].verdict.clone(),
        [v] => (*v).clone(),
        [a, b] if a.holds() == b.holds() => (*a).clone(),
        _ => Verdict::Unknown("internal error: equivalent formulations disagree".into()),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Galois {
    /// `g ⪯ wlp⟦C⟧(f)` iff `sp⟦C⟧(g) ⪯ f`.
    WlpSp,
    /// `wp⟦C⟧(f) ⪯ g` iff `f ⪯ slp⟦C⟧(g)`.
    WpSlp,
}

#[derive(Debug, Clone)]
pub struct GaloisReport {
    pub left: Verdict,
    pub right: Verdict,
    /// Holds iff the two sides agree.
    pub verdict: Verdict,
}

/// Checks that both sides of the Galois biconditional have the same truth
/// value on `dom`.
///
/// Each side is decided only on `dom`. Guarding `f` and `g` with
/// [`box_guard`] (see [`galois_guarded`]) makes the finite check agree with
/// the unbounded one.
pub fn check_galois(which: Galois, c: &Program, f: &Quantity, g: &Quantity, dom: &DomainSpec) -> GaloisReport {
    let sides = || -> Result<(Verdict, Verdict), Verdict> {
        Ok(match which {
            Galois::WlpSp => {
                let wlp = decided(Mode::Wlp, c, f, dom)?;
                let sp = decided(Mode::Sp, c, g, dom)?;
                (check_order(g, &wlp, dom), check_order(&sp, f, dom))
            }
            Galois::WpSlp => {
                let wp = decided(Mode::Wp, c, f, dom)?;
                let slp = decided(Mode::Slp, c, g, dom)?;
                (check_order(&wp, g, dom), check_order(f, &slp, dom))
            }
        })
    };
    match sides() {
        Ok((left, right)) => {
            let verdict = if left.is_unknown() {
                left.clone()
            } else if right.is_unknown() {
                right.clone()
            } else if left.holds() == right.holds() {
                Verdict::Holds
            } else if left.fails() {
                left.clone()
            } else {
                right.clone()
            };
            GaloisReport { left, right, verdict }
        }
        Err(v) => GaloisReport { left: v.clone(), right: v.clone(), verdict: v },
    }
}

/// The conjunction of the domain's interval constraints.
pub fn box_guard(dom: &DomainSpec) -> BExpr {
    dom.vars
        .iter()
        .flat_map(|(v, &(lo, hi))| {
            let x = AExpr::Var(v.clone());
            [BExpr::cmp(x.clone(), CmpOp::Ge, AExpr::Lit(lo)), BExpr::cmp(x, CmpOp::Le, AExpr::Lit(hi))]
        })
        .reduce(BExpr::and)
        .unwrap_or(BExpr::True)
}

/// `(f', g')` confined to the domain box so that each side of the Galois
/// biconditional only depends on states inside it: the quantity on the
/// `⪯`-small side of a condition is `-inf` outside the box, the other `+inf`.
pub fn galois_guarded(which: Galois, f: &Quantity, g: &Quantity, dom: &DomainSpec) -> (Quantity, Quantity) {
    let inside = Quantity::iverson(box_guard(dom));
    let outside = Quantity::iverson(BExpr::not(box_guard(dom)));
    match which {
        Galois::WlpSp => (Quantity::max(f.clone(), outside), Quantity::min(g.clone(), inside)),
        Galois::WpSlp => (Quantity::min(f.clone(), inside), Quantity::max(g.clone(), outside)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parser::{parse_program, parse_quantity};

    fn q(s: &str) -> Quantity {
        parse_quantity(s).unwrap()
    }

    fn p(s: &str) -> Program {
        parse_program(s).unwrap()
    }

    fn xdom(lo: i64, hi: i64) -> DomainSpec {
        DomainSpec::uniform(&["x"], (lo, hi), (-16, 16), 64)
    }

    #[test]
    fn order_examples() {
        let d = xdom(-16, 16);
        assert!(check_order(&q("[x >= 1]"), &q("[x >= 0]"), &d).holds());
        assert!(check_order(&q("[x = 12]"), &q("max([x < 10], [x % 4 = 0])"), &d).holds());
        match check_order(&q("x"), &q("x - 1"), &d) {
            Verdict::Fails { state, .. } => assert_eq!(state, State::from_pairs([("x", -16)])),
            v => panic!("{v}"),
        }
    }

    #[test]
    fn slp_induction_example() {
        let d = xdom(-8, 24);
        let lp = p("while (x < 10) {x := x + 4}");
        let r = check_induction(Mode::Slp, &lp, &q("[x = 12]"), &q("[x % 4 = 0]"), &q("[x % 4 = 0]"), &d);
        assert!(r.verdict.holds(), "{}", r.verdict);
        let slp = transformers::transform(Mode::Slp, &lp, &q("[x % 4 = 0]"), &config(&d)).unwrap();
        assert!(check_order(&q("[x = 12]"), &slp.quantity, &d).holds());
    }

    #[test]
    fn trivial_and_failing_induction() {
        let d = xdom(-4, 14);
        let lp = p("while (x < 10) {x := x + 1}");
        let bot = Quantity::neg_inf();
        assert!(check_induction(Mode::Wlp, &lp, &q("x"), &bot, &bot, &d).verdict.holds());
        let r = check_induction(Mode::Sp, &lp, &q("[x = 0]"), &q("[x >= 0]"), &q("[x >= 0]"), &d);
        match r.verdict {
            Verdict::Fails { state, .. } => assert_eq!(state, State::from_pairs([("x", 10)])),
            v => panic!("{v}"),
        }
    }

    #[test]
    fn one_shot_examples() {
        let d = xdom(-2, 14);
        let r = check_one_shot(Mode::Sp, &p("while (x < 10) {{x := x + 1} [] {x := x + 2}}"), &q("[x >= 0]"), &d).unwrap();
        assert!(r.applies);
        assert_eq!(r.result.to_string(), "[x >= 10]");
        let d2 = DomainSpec::uniform(&["hi", "lo"], (-4, 12), (-16, 16), 64);
        let r = check_one_shot(Mode::Sp, &p("while (lo < hi) {lo := lo + 1}"), &q("hi - 5"), &d2).unwrap();
        assert!(r.applies);
        assert_eq!(r.result.to_string(), "min([lo >= hi], hi - 5)");
        let r = check_one_shot(Mode::Sp, &p("while (x < 10) {x := x - 1}"), &q("x"), &d).unwrap();
        assert!(!r.applies);
    }

    #[test]
    fn triples() {
        let d = xdom(-8, 24);
        let t = Triple {
            kind: TripleKind::PartialIncorrectness,
            pre: q("[x % 4 = 0]"),
            program: p("while (x < 10) {x := x + 4}"),
            post: q("[x = 12]"),
        };
        let r = check_triple(&t, &d);
        assert!(r.verdict.holds(), "{}", r.verdict);
        assert_eq!(r.formulations.len(), 2);
        assert!(r.formulations.iter().all(|f| f.verdict.holds()));
        let t = Triple { kind: TripleKind::TotalIncorrectness, pre: q("[true]"), program: p("x := 10"), post: q("[x = 10]") };
        assert!(check_triple(&t, &d).verdict.holds());
        let t = Triple { kind: TripleKind::TotalCorrectness, pre: q("[true]"), program: p("diverge"), post: q("[true]") };
        assert!(check_triple(&t, &d).verdict.fails());
    }

    #[test]
    fn galois_examples() {
        let d = xdom(-6, 6);
        let r = check_galois(Galois::WlpSp, &p("x := x + 1"), &q("2*x"), &q("2*x - 2"), &d);
        assert!(r.verdict.holds() && r.left.holds() && r.right.holds());
        let r = check_galois(Galois::WlpSp, &Program::Diverge, &q("x"), &q("x + 3"), &d);
        assert!(r.verdict.holds() && r.left.holds() && r.right.holds());
        // unguarded, the box cuts off the state where sp's side fails
        let (c, f, g) = (p("x := x + 1"), q("[x <= 5]"), q("[x = 6]"));
        let r = check_galois(Galois::WlpSp, &c, &f, &g, &d);
        assert!(!r.verdict.holds());
        let (f, g) = galois_guarded(Galois::WlpSp, &f, &g, &d);
        let r = check_galois(Galois::WlpSp, &c, &f, &g, &d);
        assert!(r.verdict.holds() && r.left.holds() && r.right.holds(), "{:?}", r);
    }
}
