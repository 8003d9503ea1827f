//! Symbolic weakest (liberal) pre and strongest (liberal) post transformers.
//!
//! Loop-free programs are handled by structural recursion. Loops iterate the
//! mode's characteristic function from the bottom (wp, sp) or top (wlp, slp)
//! of the lattice until two consecutive iterates coincide, both after
//! normalization and on every state of a probe domain.

pub mod simplify;

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use crate::syntax::{AExpr, BExpr, CmpOp, DomainSpec, EvalError, Program, Quantity, Var, fresh_var};

pub use simplify::{canonical_cmp, mk_inf, mk_max, mk_min, mk_neg, mk_sup, simplify};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Mode {
    Wp,
    Wlp,
    Sp,
    Slp,
}

impl Mode {
    pub const ALL: [Mode; 4] = [Mode::Wp, Mode::Wlp, Mode::Sp, Mode::Slp];

    pub fn name(self) -> &'static str {
        match self {
            Mode::Wp => "wp",
            Mode::Wlp => "wlp",
            Mode::Sp => "sp",
            Mode::Slp => "slp",
        }
    }

    /// wlp and slp: nontermination and unreachability map to `+inf`.
    pub fn is_liberal(self) -> bool {
        matches!(self, Mode::Wlp | Mode::Slp)
    }

    pub fn is_forward(self) -> bool {
        matches!(self, Mode::Sp | Mode::Slp)
    }

    /// wp <-> wlp, sp <-> slp.
    pub fn dual(self) -> Mode {
        match self {
            Mode::Wp => Mode::Wlp,
            Mode::Wlp => Mode::Wp,
            Mode::Sp => Mode::Slp,
            Mode::Slp => Mode::Sp,
        }
    }

    /// Direction in which a truncated chain under-approximates the fixpoint.
    pub fn truncation_bound(self) -> Bound {
        if self.is_liberal() {
            Bound::Upper
        } else {
            Bound::Lower
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Mode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Mode::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| format!("unknown mode `{s}` (expected wp, wlp, sp or slp)"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Bound {
    Lower,
    Upper,
}

impl fmt::Display for Bound {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Bound::Lower => "lower",
            Bound::Upper => "upper",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Status {
    Exact,
    /// The largest iteration count over all loops of the program.
    Converged { iterations: usize },
    Truncated { fuel: usize, bound: Bound },
}

impl Status {
    /// Status of a result assembled from two sub-results.
    pub fn combine(self, other: Status) -> Status {
        use Status::*;
        match (self, other) {
            (t @ Truncated { .. }, _) | (_, t @ Truncated { .. }) => t,
            (Converged { iterations: a }, Converged { iterations: b }) => Converged { iterations: a.max(b) },
            (c @ Converged { .. }, Exact) | (Exact, c @ Converged { .. }) => c,
            (Exact, Exact) => Exact,
        }
    }

    pub fn is_truncated(self) -> bool {
        matches!(self, Status::Truncated { .. })
    }
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Status::Exact => f.write_str("exact"),
            Status::Converged { iterations: 1 } => f.write_str("converged at 1 iteration"),
            Status::Converged { iterations } => write!(f, "converged at {iterations} iterations"),
            Status::Truncated { fuel, bound } => write!(f, "truncated at fuel {fuel}, {bound} bound"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AnalysisResult {
    pub quantity: Quantity,
    pub status: Status,
}

impl fmt::Display for AnalysisResult {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}  ({})", self.quantity, self.status)
    }
}

#[derive(Debug, Clone)]
pub struct TransformConfig {
    /// Maximum number of characteristic-function applications per loop.
    pub fuel: usize,
    /// States on which consecutive iterates must agree before a loop is
    /// declared converged.
    pub probe: DomainSpec,
}

impl TransformConfig {
    pub fn new(probe: DomainSpec) -> Self {
        TransformConfig { fuel: probe.fuel, probe }
    }

    pub fn with_fuel(mut self, fuel: usize) -> Self {
        self.fuel = fuel;
        self
    }
}

/// `mode⟦c⟧(f)`, simplified.
pub fn transform(mode: Mode, c: &Program, f: &Quantity, cfg: &TransformConfig) -> Result<AnalysisResult, EvalError> {
    let (quantity, status) = go(mode, c, &simplify(f), cfg)?;
    Ok(AnalysisResult { quantity, status })
}

/// The quantity `[b]`, unsimplified.
pub fn iverson_embed(b: &BExpr) -> Quantity {
    Quantity::iverson(b.clone())
}

/// One application of the loop's characteristic function at `x`.
///
/// wp/wlp: `[¬φ] ⋏ f ⋎ [φ] ⋏ T⟦body⟧(x)`.
/// sp: `f ⋎ sp⟦body⟧([φ] ⋏ x)`. slp: `f ⋏ slp⟦body⟧([¬φ] ⋎ x)`.
pub fn char_step(
    mode: Mode,
    guard: &BExpr,
    body: &Program,
    f: &Quantity,
    x: &Quantity,
    cfg: &TransformConfig,
) -> Result<AnalysisResult, EvalError> {
    let (quantity, status) = step(mode, guard, body, &simplify(f), &simplify(x), cfg)?;
    Ok(AnalysisResult { quantity, status })
}

fn guard_q(b: &BExpr) -> Quantity {
    simplify::mk_iverson(b)
}

fn not_guard_q(b: &BExpr) -> Quantity {
    simplify::mk_iverson(&BExpr::not(b.clone()))
}

fn step(
    mode: Mode,
    guard: &BExpr,
    body: &Program,
    f: &Quantity,
    x: &Quantity,
    cfg: &TransformConfig,
) -> Result<(Quantity, Status), EvalError> {
    Ok(match mode {
        Mode::Wp | Mode::Wlp => {
            let (inner, st) = go(mode, body, x, cfg)?;
            let exit = mk_min(vec![not_guard_q(guard), f.clone()]);
            let again = mk_min(vec![guard_q(guard), inner]);
            (mk_max(vec![exit, again]), st)
        }
        Mode::Sp => {
            let (inner, st) = go(mode, body, &mk_min(vec![guard_q(guard), x.clone()]), cfg)?;
            (mk_max(vec![f.clone(), inner]), st)
        }
        Mode::Slp => {
            let (inner, st) = go(mode, body, &mk_max(vec![not_guard_q(guard), x.clone()]), cfg)?;
            (mk_min(vec![f.clone(), inner]), st)
        }
    })
}

fn fresh_for(f: &Quantity, x: &Var, e: &AExpr) -> Var {
    let mut avoid: BTreeSet<Var> = f.all_vars();
    avoid.insert(x.clone());
    avoid.extend(e.vars());
    fresh_var(&avoid)
}

fn go(mode: Mode, c: &Program, f: &Quantity, cfg: &TransformConfig) -> Result<(Quantity, Status), EvalError> {
    use Program::*;
    Ok(match c {
        Skip => (f.clone(), Status::Exact),
        Diverge => (
            if mode.is_liberal() { Quantity::pos_inf() } else { Quantity::neg_inf() },
            Status::Exact,
        ),
        Assign(x, e) => {
            let q = match mode {
                Mode::Wp | Mode::Wlp => simplify(&f.subst(x, e)),
                Mode::Sp | Mode::Slp => {
                    let a = fresh_for(f, x, e);
                    let av = AExpr::Var(a.clone());
                    let shifted = e.subst(x, &av);
                    let f_at = simplify(&f.subst(x, &av));
                    if mode == Mode::Sp {
                        let eq = simplify::mk_iverson(&BExpr::cmp(AExpr::Var(x.clone()), CmpOp::Eq, shifted));
                        mk_sup(&a, mk_min(vec![eq, f_at]))
                    } else {
                        let ne = simplify::mk_iverson(&BExpr::cmp(AExpr::Var(x.clone()), CmpOp::Ne, shifted));
                        mk_inf(&a, mk_max(vec![ne, f_at]))
                    }
                }
            };
            (q, Status::Exact)
        }
        Seq(c1, c2) => {
            let (first, second) = if mode.is_forward() { (c1, c2) } else { (c2, c1) };
            let (mid, s1) = go(mode, first, f, cfg)?;
            let (out, s2) = go(mode, second, &mid, cfg)?;
            (out, s1.combine(s2))
        }
        Choice(c1, c2) => {
            let (a, s1) = go(mode, c1, f, cfg)?;
            let (b, s2) = go(mode, c2, f, cfg)?;
            let q = if mode.is_liberal() { mk_min(vec![a, b]) } else { mk_max(vec![a, b]) };
            (q, s1.combine(s2))
        }
        Ite(b, c1, c2) => {
            let (g, ng) = (guard_q(b), not_guard_q(b));
            match mode {
                Mode::Wp | Mode::Wlp => {
                    let (a, s1) = go(mode, c1, f, cfg)?;
                    let (e, s2) = go(mode, c2, f, cfg)?;
                    (mk_max(vec![mk_min(vec![g, a]), mk_min(vec![ng, e])]), s1.combine(s2))
                }
                Mode::Sp => {
                    let (a, s1) = go(mode, c1, &mk_min(vec![g, f.clone()]), cfg)?;
                    let (e, s2) = go(mode, c2, &mk_min(vec![ng, f.clone()]), cfg)?;
                    (mk_max(vec![a, e]), s1.combine(s2))
                }
                Mode::Slp => {
                    let (a, s1) = go(mode, c1, &mk_max(vec![ng, f.clone()]), cfg)?;
                    let (e, s2) = go(mode, c2, &mk_max(vec![g, f.clone()]), cfg)?;
                    (mk_min(vec![a, e]), s1.combine(s2))
                }
            }
        }
        While(b, body) => fixpoint(mode, b, body, f, cfg)?,
    })
}

fn fixpoint(
    mode: Mode,
    guard: &BExpr,
    body: &Program,
    f: &Quantity,
    cfg: &TransformConfig,
) -> Result<(Quantity, Status), EvalError> {
    let (x, status) = kleene(mode, guard, body, f, cfg)?;
    let x = match mode {
        Mode::Sp => mk_min(vec![not_guard_q(guard), x]),
        Mode::Slp => mk_max(vec![guard_q(guard), x]),
        _ => x,
    };
    Ok((x, status))
}

/// The least (wp, sp) or greatest (wlp, slp) fixpoint of the characteristic
/// function of `while (guard) {body}` for `f`. For sp and slp this is the
/// value before the exit guard is applied.
pub fn loop_fixpoint(
    mode: Mode,
    guard: &BExpr,
    body: &Program,
    f: &Quantity,
    cfg: &TransformConfig,
) -> Result<AnalysisResult, EvalError> {
    let (quantity, status) = kleene(mode, guard, body, &simplify(f), cfg)?;
    Ok(AnalysisResult { quantity, status })
}

fn kleene(
    mode: Mode,
    guard: &BExpr,
    body: &Program,
    f: &Quantity,
    cfg: &TransformConfig,
) -> Result<(Quantity, Status), EvalError> {
    let mut x = if mode.is_liberal() { Quantity::pos_inf() } else { Quantity::neg_inf() };
    let mut inner = Status::Exact;
    for n in 1..=cfg.fuel {
        let (next, st) = step(mode, guard, body, f, &x, cfg)?;
        inner = inner.combine(st);
        // both checks, so a normalization bug cannot fake convergence
        let same = next == x && agree_on_probe(&next, &x, &cfg.probe)?;
        x = next;
        if same {
            return Ok((x, Status::Converged { iterations: n }.combine(inner)));
        }
    }
    Ok((x, Status::Truncated { fuel: cfg.fuel, bound: mode.truncation_bound() }))
}

fn agree_on_probe(a: &Quantity, b: &Quantity, probe: &DomainSpec) -> Result<bool, EvalError> {
    for s in probe.states() {
        if a.eval(&s, probe)? != b.eval(&s, probe)? {
            return Ok(false);
        }
    }
    Ok(true)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parser::{parse_program, parse_quantity};

    fn cfg(names: &[&str], range: (i64, i64)) -> TransformConfig {
        TransformConfig::new(DomainSpec::uniform(names, range, (-16, 16), 64))
    }

    fn run(mode: Mode, prog: &str, q: &str, cfg: &TransformConfig) -> AnalysisResult {
        transform(mode, &parse_program(prog).unwrap(), &parse_quantity(q).unwrap(), cfg).unwrap()
    }

    #[test]
    fn assignment_rows() {
        let c = cfg(&["x"], (-16, 16));
        let cases = [
            (Mode::Sp, "x := x + 1", "x", "x - 1"),
            (Mode::Sp, "x := 10", "x", "[x = 10]"),
            (Mode::Slp, "x := 10", "x", "[x != 10]"),
            (Mode::Slp, "x := x + 1", "x", "x - 1"),
            (Mode::Wlp, "x := x + 1", "2*x", "2*x + 2"),
            (Mode::Wp, "x := 2*x", "x", "2*x"),
        ];
        for (mode, prog, q, want) in cases {
            let r = run(mode, prog, q, &c);
            assert_eq!(r.quantity.to_string(), want, "{mode} {prog} {q}");
            assert_eq!(r.status, Status::Exact);
        }
    }

    #[test]
    fn diverge_and_skip() {
        let c = cfg(&["x"], (-2, 2));
        assert_eq!(run(Mode::Wp, "diverge", "x", &c).quantity, Quantity::neg_inf());
        assert_eq!(run(Mode::Wlp, "diverge", "x", &c).to_string(), "+inf  (exact)");
        assert_eq!(run(Mode::Sp, "diverge", "x", &c).quantity, Quantity::neg_inf());
        assert_eq!(run(Mode::Slp, "diverge", "x", &c).quantity, Quantity::pos_inf());
        for m in Mode::ALL {
            assert_eq!(run(m, "skip", "x + 1", &c).quantity.to_string(), "x + 1");
        }
    }

    #[test]
    fn choice_is_angelic_or_demonic() {
        let c = cfg(&["x"], (-2, 2));
        assert_eq!(run(Mode::Wp, "{x := 1} [] {x := 2}", "x", &c).quantity, Quantity::int(2));
        assert_eq!(run(Mode::Wlp, "{x := 1} [] {x := 2}", "x", &c).quantity, Quantity::int(1));
    }

    const FLOW: &str = "if (hi > 7) {lo := 99} else {lo := 80}";
    const LOOP: &str = "hi := hi + 5; while (lo < hi) {lo := lo + 1}";

    #[test]
    fn branching_flow() {
        let c = cfg(&["hi", "lo"], (-2, 12));
        let sp = run(Mode::Sp, FLOW, "hi", &c);
        let want = parse_quantity("max(min([lo = 99], [hi > 7], hi), min([lo = 80], [hi <= 7], hi))").unwrap();
        assert_eq!(sp.quantity, simplify(&want));
        let slp = run(Mode::Slp, FLOW, "hi", &c);
        let want = parse_quantity("min(max([lo != 99], [hi <= 7], hi), max([lo != 80], [hi > 7], hi))").unwrap();
        assert_eq!(slp.quantity, simplify(&want));
    }

    #[test]
    fn loop_converges_in_two() {
        let c = cfg(&["hi", "lo"], (-4, 12));
        let sp = run(Mode::Sp, LOOP, "hi", &c);
        assert_eq!(sp.to_string(), "min([lo >= hi], hi - 5)  (converged at 2 iterations)");
        let slp = run(Mode::Slp, LOOP, "hi", &c);
        assert_eq!(slp.quantity.to_string(), "max([lo < hi], hi - 5)");
        assert_eq!(slp.status, Status::Converged { iterations: 2 });
    }

    #[test]
    fn char_step_examples() {
        let c = cfg(&["hi", "lo"], (-4, 12));
        let guard = crate::parser::parse_bexpr("lo < hi").unwrap();
        let body = parse_program("lo := lo + 1").unwrap();
        let f = parse_quantity("hi - 5").unwrap();
        let x1 = char_step(Mode::Sp, &guard, &body, &f, &Quantity::neg_inf(), &c).unwrap();
        assert_eq!(x1.quantity, f);
        let x2 = char_step(Mode::Sp, &guard, &body, &f, &x1.quantity, &c).unwrap();
        assert_eq!(x2.quantity, f);
        let no = BExpr::False;
        let w = char_step(Mode::Wp, &no, &body, &f, &Quantity::neg_inf(), &c).unwrap();
        assert_eq!(w.quantity, f);
    }

    #[test]
    fn wp_chain_does_not_stabilize() {
        let c = cfg(&["hi", "lo"], (0, 6)).with_fuel(16);
        let r = run(Mode::Wp, LOOP, "[lo = 4]", &c);
        assert_eq!(r.status, Status::Truncated { fuel: 16, bound: Bound::Lower });
    }

    #[test]
    fn embedding() {
        assert_eq!(simplify(&iverson_embed(&BExpr::True)), Quantity::pos_inf());
        assert_eq!(simplify(&iverson_embed(&BExpr::False)), Quantity::neg_inf());
        assert_eq!(iverson_embed(&crate::parser::parse_bexpr("x >= 0").unwrap()).to_string(), "[x >= 0]");
    }
}
