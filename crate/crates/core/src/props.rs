//! Property suites over generated programs.
//!
//! Each suite draws its instances from [`gen`](crate::gen) with a seed derived
//! from the suite name and the instance index, so a failing instance can be
//! replayed on its own. Truncated transforms are left out of a check; an
//! instance with nothing left to check is skipped, never counted as passing.

use std::fmt;

use num_rational::BigRational;

use crate::gen::{Boxes, GenConfig, Generator};
use crate::lattice::{self, ExtReal};
use crate::oracle::{EscapePolicy, Relation};
use crate::proofs::{self, check_galois, galois_guarded, Galois};
use crate::syntax::{DomainSpec, Program, Quantity, State};
use crate::transformers::{self, simplify, Mode, TransformConfig};

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SuiteResult {
    pub name: &'static str,
    pub checked: usize,
    pub skipped: usize,
    pub falsified: usize,
    /// The first falsified instance.
    pub counterexample: Option<String>,
}

impl SuiteResult {
    fn new(name: &'static str) -> Self {
        SuiteResult { name, ..Default::default() }
    }

    fn record(&mut self, outcome: Outcome) {
        match outcome {
            Outcome::Pass => self.checked += 1,
            Outcome::Skip => self.skipped += 1,
            Outcome::Fail(why) => {
                self.checked += 1;
                self.falsified += 1;
                self.counterexample.get_or_insert(why);
            }
        }
    }
}

impl fmt::Display for SuiteResult {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:<14} {:>4} checked {:>4} skipped {:>3} falsified", self.name, self.checked, self.skipped, self.falsified)?;
        if let Some(c) = &self.counterexample {
            write!(f, "\n    first: {c}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Default)]
pub struct PropsReport {
    pub suites: Vec<SuiteResult>,
}

impl PropsReport {
    pub fn falsified(&self) -> usize {
        self.suites.iter().map(|s| s.falsified).sum()
    }

    pub fn suite(&self, name: &str) -> Option<&SuiteResult> {
        self.suites.iter().find(|s| s.name == name)
    }

    pub fn table(&self) -> String {
        let mut out = String::from("suite,checked,skipped,falsified\n");
        for s in &self.suites {
            out.push_str(&format!("{},{},{},{}\n", s.name, s.checked, s.skipped, s.falsified));
        }
        out
    }
}

impl fmt::Display for PropsReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for s in &self.suites {
            writeln!(f, "{s}")?;
        }
        write!(f, "{} falsified", self.falsified())
    }
}

enum Outcome {
    Pass,
    Skip,
    Fail(String),
}

/// Runs a closure that reports the first problem as `Err`; transform or
/// evaluation errors count as falsifications too.
fn outcome(r: Result<Option<()>, String>) -> Outcome {
    match r {
        Ok(Some(())) => Outcome::Pass,
        Ok(None) => Outcome::Skip,
        Err(why) => Outcome::Fail(why),
    }
}

/// Instance generation settings shared by all suites.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PropsConfig {
    pub seed: u64,
    /// Instances per suite.
    pub count: usize,
    /// Instances cycle through 1 to `max_vars` program variables.
    pub max_vars: usize,
    pub depth: usize,
}

impl PropsConfig {
    pub fn new(seed: u64, count: usize) -> Self {
        PropsConfig { seed, count, max_vars: 3, depth: 3 }
    }
}

pub type Suite = fn(&PropsConfig) -> SuiteResult;

/// Every theorem suite, by name.
pub const THEOREMS: [(&str, Suite); 9] = [
    ("galois-wlp-sp", galois_wlp_sp),
    ("galois-wp-slp", galois_wp_slp),
    ("duality", duality),
    ("strictness", strictness),
    ("monotonicity", monotonicity),
    ("junctivity", junctivity),
    ("linearity", linearity),
    ("embedding", embedding),
    ("corollary", corollary),
];

/// All theorem suites with `count` instances each.
pub fn run_theorems(cfg: &PropsConfig) -> PropsReport {
    PropsReport { suites: THEOREMS.iter().map(|(_, s)| s(cfg)).collect() }
}

/// The theorem suites followed by both soundness suites; the loop suite
/// gets a quarter of the instances.
pub fn run_all(cfg: &PropsConfig) -> PropsReport {
    let mut r = run_theorems(cfg);
    r.suites.push(soundness(cfg));
    r.suites.push(loop_soundness(&PropsConfig { count: cfg.count / 4, ..*cfg }));
    r
}

fn instance_seed(seed: u64, name: &str, i: usize) -> u64 {
    // FNV-1a over the name, mixed with the seed and index.
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in name.bytes().chain(seed.to_le_bytes()).chain((i as u64).to_le_bytes()) {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0100_0000_01b3);
    }
    h
}

/// The generator behind instance `i` of suite `name`.
pub fn generator(cfg: &PropsConfig, name: &str, i: usize, deterministic: bool) -> Generator {
    let gen = GenConfig { vars: 1 + i % cfg.max_vars.clamp(1, 3), depth: cfg.depth.min(4), deterministic };
    Generator::new(instance_seed(cfg.seed, name, i), gen)
}

fn run(name: &'static str, cfg: &PropsConfig, mut f: impl FnMut(&mut Generator, usize) -> Result<Option<()>, String>) -> SuiteResult {
    let mut res = SuiteResult::new(name);
    for i in 0..cfg.count {
        let mut g = generator(cfg, name, i, false);
        res.record(outcome(f(&mut g, i)));
    }
    res
}

struct Ctx {
    boxes: Boxes,
    cfg: TransformConfig,
}

impl Ctx {
    fn new(g: &Generator) -> Self {
        let boxes = g.boxes();
        let cfg = TransformConfig::new(boxes.probe.clone());
        Ctx { boxes, cfg }
    }

    fn probe(&self) -> &DomainSpec {
        &self.boxes.probe
    }

    /// The transform, or `None` when truncated.
    fn t(&self, mode: Mode, c: &Program, f: &Quantity) -> Result<Option<Quantity>, String> {
        let r = transformers::transform(mode, c, f, &self.cfg).map_err(|e| format!("{mode} of {c} on {f}: {e}"))?;
        Ok((!r.status.is_truncated()).then_some(r.quantity))
    }

    fn eval(&self, q: &Quantity, s: &State) -> Result<ExtReal, String> {
        q.eval(s, self.probe()).map_err(|e| format!("evaluating {q} at {s}: {e}"))
    }

    /// Checks `pred(state)` on every probe state.
    fn everywhere(&self, mut pred: impl FnMut(&State) -> Result<Option<String>, String>) -> Result<Option<()>, String> {
        for s in self.probe().states() {
            if let Some(why) = pred(&s)? {
                return Err(format!("at {s}: {why}"));
            }
        }
        Ok(Some(()))
    }

    /// The oracle relation from the initial box; runs leaving the escape box
    /// are errors.
    fn relation(&self, c: &Program) -> Result<Relation, String> {
        Relation::from_initial(c, self.boxes.initial.states(), &self.boxes.escape, EscapePolicy::Error)
            .map_err(|e| format!("oracle on {c}: {e}"))
    }
}

/// A program for theorem suites: loop-free most of the time, a bounded loop
/// every fourth instance.
fn some_program(g: &mut Generator, i: usize) -> Program {
    if i % 4 == 3 {
        g.loop_program()
    } else {
        g.program()
    }
}

fn leq(a: &ExtReal, b: &ExtReal) -> bool {
    a <= b
}

/// The value, or on to the next mode when truncated.
macro_rules! some_or_next {
    ($e:expr) => {
        match $e? {
            Some(q) => q,
            None => continue,
        }
    };
    ($e:expr, $label:lifetime) => {
        match $e? {
            Some(q) => q,
            None => continue $label,
        }
    };
}

macro_rules! some_or_skip {
    ($e:expr) => {
        match $e? {
            Some(q) => q,
            None => return Ok(None),
        }
    };
}

fn galois(which: Galois, name: &'static str, cfg: &PropsConfig) -> SuiteResult {
    run(name, cfg, |g, i| {
        let ctx = Ctx::new(g);
        let c = some_program(g, i);
        let (f, gq) = (g.quantity(), g.quantity());
        let (mut f, mut gq) = galois_guarded(which, &f, &gq, ctx.probe());
        // Half the instances sit on the boundary where both sides hold.
        if i % 2 == 0 {
            match which {
                Galois::WlpSp => f = some_or_skip!(ctx.t(Mode::Sp, &c, &gq)),
                Galois::WpSlp => gq = some_or_skip!(ctx.t(Mode::Wp, &c, &f)),
            }
            (f, gq) = galois_guarded(which, &f, &gq, ctx.probe());
        }
        let r = check_galois(which, &c, &f, &gq, ctx.probe());
        if r.verdict.is_unknown() {
            return Ok(None);
        }
        if r.verdict.fails() {
            return Err(format!("{c} with f = {f}, g = {gq}: left {}, right {}", r.left, r.right));
        }
        Ok(Some(()))
    })
}

/// `g ⪯ wlp⟦C⟧(f)` iff `sp⟦C⟧(g) ⪯ f`.
pub fn galois_wlp_sp(cfg: &PropsConfig) -> SuiteResult {
    galois(Galois::WlpSp, "galois-wlp-sp", cfg)
}

/// `wp⟦C⟧(f) ⪯ g` iff `f ⪯ slp⟦C⟧(g)`.
pub fn galois_wp_slp(cfg: &PropsConfig) -> SuiteResult {
    galois(Galois::WpSlp, "galois-wp-slp", cfg)
}

/// `wp f = -wlp(-f)` and `sp f = -slp(-f)`, both directions.
pub fn duality(cfg: &PropsConfig) -> SuiteResult {
    run("duality", cfg, |g, i| {
        let ctx = Ctx::new(g);
        let c = some_program(g, i);
        let f = g.quantity();
        let neg_f = Quantity::neg(f.clone());
        let mut pairs = Vec::new();
        for mode in Mode::ALL {
            let direct = some_or_next!(ctx.t(mode, &c, &f));
            let dual = some_or_next!(ctx.t(mode.dual(), &c, &neg_f));
            pairs.push((mode, direct, dual));
        }
        if pairs.is_empty() {
            return Ok(None);
        }
        ctx.everywhere(|s| {
            for (mode, direct, dual) in &pairs {
                let (a, b) = (ctx.eval(direct, s)?, lattice::negate(&ctx.eval(dual, s)?));
                if a != b {
                    return Ok(Some(format!("{mode} of {c} on {f} is {a}, dual gives {b}")));
                }
            }
            Ok(None)
        })
    })
}

/// `wp(-inf)`, `sp(-inf)` simplify to `-inf`; `wlp(+inf)`, `slp(+inf)` to `+inf`.
pub fn strictness(cfg: &PropsConfig) -> SuiteResult {
    run("strictness", cfg, |g, i| {
        let ctx = Ctx::new(g);
        let c = some_program(g, i);
        for mode in Mode::ALL {
            let unit = if mode.is_liberal() { Quantity::pos_inf() } else { Quantity::neg_inf() };
            let r = some_or_next!(ctx.t(mode, &c, &unit));
            if r != unit {
                return Err(format!("{mode} of {c} on {unit} simplifies to {r}"));
            }
        }
        Ok(Some(()))
    })
}

/// `f ⪯ g` implies `T(f) ⪯ T(g)` for each transformer.
pub fn monotonicity(cfg: &PropsConfig) -> SuiteResult {
    run("monotonicity", cfg, |g, i| {
        let ctx = Ctx::new(g);
        let c = some_program(g, i);
        let f = g.quantity();
        let bigger = Quantity::max(f.clone(), g.quantity());
        let mut pairs = Vec::new();
        for mode in Mode::ALL {
            pairs.push((mode, some_or_next!(ctx.t(mode, &c, &f)), some_or_next!(ctx.t(mode, &c, &bigger))));
        }
        if pairs.is_empty() {
            return Ok(None);
        }
        ctx.everywhere(|s| {
            for (mode, tf, tg) in &pairs {
                let (a, b) = (ctx.eval(tf, s)?, ctx.eval(tg, s)?);
                if !leq(&a, &b) {
                    return Ok(Some(format!("{mode} of {c}: {a} on {f} but {b} on {bigger}")));
                }
            }
            Ok(None)
        })
    })
}

/// wp and sp distribute over joins of three quantities, wlp and slp over
/// meets.
pub fn junctivity(cfg: &PropsConfig) -> SuiteResult {
    run("junctivity", cfg, |g, i| {
        let ctx = Ctx::new(g);
        let c = some_program(g, i);
        let set = vec![g.quantity(), g.quantity(), g.quantity()];
        let mut checks = Vec::new();
        'modes: for mode in Mode::ALL {
            let whole = if mode.is_liberal() { Quantity::Min(set.clone()) } else { Quantity::Max(set.clone()) };
            let t_whole = some_or_next!(ctx.t(mode, &c, &whole));
            let mut parts = Vec::new();
            for q in &set {
                parts.push(some_or_next!(ctx.t(mode, &c, q), 'modes));
            }
            checks.push((mode, t_whole, parts));
        }
        if checks.is_empty() {
            return Ok(None);
        }
        ctx.everywhere(|s| {
            for (mode, whole, parts) in &checks {
                let a = ctx.eval(whole, s)?;
                let mut b = if mode.is_liberal() { ExtReal::PosInf } else { ExtReal::NegInf };
                for p in parts {
                    let v = ctx.eval(p, s)?;
                    b = if mode.is_liberal() { lattice::meet(&b, &v) } else { lattice::join(&b, &v) };
                }
                if a != b {
                    return Ok(Some(format!("{mode} of {c} over {set:?}: whole {a}, parts {b}")));
                }
            }
            Ok(None)
        })
    })
}

pub const RATIOS: [(i64, i64); 4] = [(0, 1), (1, 1), (2, 1), (1, 2)];

/// `wp(r·f + g) ⪯ r·wp f + wp g`, likewise sp; wlp and slp the other way.
pub fn linearity(cfg: &PropsConfig) -> SuiteResult {
    run("linearity", cfg, |g, i| {
        let ctx = Ctx::new(g);
        let c = some_program(g, i);
        let (f, h) = (g.finite_quantity(), g.finite_quantity());
        let (n, d) = RATIOS[i % RATIOS.len()];
        let r = BigRational::new(n.into(), d.into());
        let combined = Quantity::add(Quantity::scale(r.clone(), f.clone()), h.clone());
        let mut checks = Vec::new();
        for mode in Mode::ALL {
            let whole = some_or_next!(ctx.t(mode, &c, &combined));
            let tf = some_or_next!(ctx.t(mode, &c, &f));
            let th = some_or_next!(ctx.t(mode, &c, &h));
            checks.push((mode, whole, tf, th));
        }
        if checks.is_empty() {
            return Ok(None);
        }
        ctx.everywhere(|s| {
            for (mode, whole, tf, th) in &checks {
                let w = ctx.eval(whole, s)?;
                let vf = lattice::scale(&r, &ctx.eval(tf, s)?).map_err(|e| e.to_string())?;
                let sum = lattice::add(&vf, &ctx.eval(th, s)?).map_err(|e| e.to_string())?;
                let ok = if mode.is_liberal() { leq(&sum, &w) } else { leq(&w, &sum) };
                if !ok {
                    return Ok(Some(format!("{mode} of {c}, r = {r}, f = {f}, g = {h}: whole {w}, split {sum}")));
                }
            }
            Ok(None)
        })
    })
}

fn is_predicate(v: &ExtReal) -> bool {
    v.is_infinite()
}

/// Transforms of `[ψ]` take only the values `±inf` and agree with the
/// classical transformers, computed by running the program. sp and slp on
/// every instance, wp and wlp on deterministic ones.
pub fn embedding(cfg: &PropsConfig) -> SuiteResult {
    let mut res = SuiteResult::new("embedding");
    for i in 0..cfg.count {
        let deterministic = i % 2 == 1;
        let mut g = generator(cfg, "embedding", i, deterministic);
        res.record(outcome(embedding_instance(&mut g, i, deterministic)));
    }
    res
}

fn embedding_instance(g: &mut Generator, i: usize, deterministic: bool) -> Result<Option<()>, String> {
    let ctx = Ctx::new(g);
    let c = if deterministic { deterministic_program(g, i) } else { some_program(g, i) };
    let psi = Quantity::iverson(g.predicate());
    let modes: &[Mode] = if deterministic { &Mode::ALL } else { &[Mode::Sp, Mode::Slp] };
    let mut results = Vec::new();
    for &mode in modes {
        results.push((mode, some_or_next!(ctx.t(mode, &c, &psi))));
    }
    if results.is_empty() {
        return Ok(None);
    }
    let rel = ctx.relation(&c)?;
    ctx.everywhere(|s| {
        for (mode, q) in &results {
            let v = ctx.eval(q, s)?;
            if !is_predicate(&v) {
                return Ok(Some(format!("{mode} of {c} on {psi} takes the value {v}")));
            }
            let classical = rel.reference(*mode, &psi, s).map_err(|e| e.to_string())?;
            if v != classical {
                return Ok(Some(format!("{mode} of {c} on {psi} is {v}, classically {classical}")));
            }
        }
        Ok(None)
    })
}

/// Deterministic, sometimes with a guarded `diverge` in front.
fn deterministic_program(g: &mut Generator, i: usize) -> Program {
    let c = some_program(g, i);
    if i % 5 == 0 {
        Program::ite(g.predicate(), Program::Diverge, c)
    } else {
        c
    }
}

/// For deterministic programs wp and wlp agree where the program terminates;
/// elsewhere wp is `-inf` and wlp `+inf`.
pub fn corollary(cfg: &PropsConfig) -> SuiteResult {
    let mut res = SuiteResult::new("corollary");
    for i in 0..cfg.count {
        let mut g = generator(cfg, "corollary", i, true);
        res.record(outcome(corollary_instance(&mut g, i)));
    }
    res
}

fn corollary_instance(g: &mut Generator, i: usize) -> Result<Option<()>, String> {
    let ctx = Ctx::new(g);
    let c = deterministic_program(g, i);
    let f = g.quantity();
    let wp = some_or_skip!(ctx.t(Mode::Wp, &c, &f));
    let wlp = some_or_skip!(ctx.t(Mode::Wlp, &c, &f));
    let rel = Relation::from_initial(&c, ctx.probe().states(), &ctx.boxes.escape, EscapePolicy::Error)
        .map_err(|e| format!("oracle on {c}: {e}"))?;
    ctx.everywhere(|s| {
        let (a, b) = (ctx.eval(&wp, s)?, ctx.eval(&wlp, s)?);
        let terminates = rel.finals(s).is_some_and(|fin| !fin.is_empty());
        let ok = if terminates { a == b } else { a == ExtReal::NegInf && b == ExtReal::PosInf };
        Ok((!ok).then(|| format!("{c} on {f} (terminates: {terminates}): wp {a}, wlp {b}")))
    })
}

/// Symbolic transforms of loop-free programs equal the oracle on the probe
/// box: three quantities, four modes per program.
pub fn soundness(cfg: &PropsConfig) -> SuiteResult {
    run("soundness", cfg, |g, _| {
        let ctx = Ctx::new(g);
        let c = g.program();
        sound_on(&ctx, &c, &[g.quantity(), g.quantity(), g.quantity()])
    })
}

/// The same for bounded loops; only converged results are compared.
pub fn loop_soundness(cfg: &PropsConfig) -> SuiteResult {
    let mut res = SuiteResult::new("loop-soundness");
    for i in 0..cfg.count {
        let mut g = generator(cfg, "loop-soundness", i, false);
        let ctx = Ctx::new(&g);
        let c = g.loop_program();
        let qs = [g.quantity(), g.quantity(), g.quantity()];
        res.record(outcome(sound_on(&ctx, &c, &qs)));
    }
    res
}

/// `Some(())` if at least one non-truncated transform was compared.
fn sound_on(ctx: &Ctx, c: &Program, qs: &[Quantity]) -> Result<Option<()>, String> {
    let rel = ctx.relation(c)?;
    let mut compared = false;
    for f in qs {
        for mode in Mode::ALL {
            let Some(q) = ctx.t(mode, c, f)? else { continue };
            compared = true;
            let m = crate::oracle::compare(&rel, mode, &simplify(f), &q, ctx.probe().states()).map_err(|e| e.to_string())?;
            if let Some(m) = m {
                return Err(format!("{mode} of {c} on {f} = {q}: {m}"));
            }
        }
    }
    Ok(compared.then_some(()))
}

/// Checks `check_order` agrees with a direct pointwise comparison; a cheap
/// self-test for the suites' notion of `⪯`.
pub fn order_agrees(a: &Quantity, b: &Quantity, dom: &DomainSpec) -> bool {
    let direct = dom.states().all(|s| match (a.eval(&s, dom), b.eval(&s, dom)) {
        (Ok(x), Ok(y)) => leq(&x, &y),
        _ => false,
    });
    proofs::check_order(a, b, dom).holds() == direct
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seeds_differ_by_suite_and_index() {
        assert_ne!(instance_seed(7, "duality", 0), instance_seed(7, "duality", 1));
        assert_ne!(instance_seed(7, "duality", 0), instance_seed(7, "linearity", 0));
        assert_eq!(instance_seed(7, "duality", 3), instance_seed(7, "duality", 3));
    }

    #[test]
    fn small_runs_have_no_falsifications() {
        let r = run_all(&PropsConfig::new(11, 12));
        assert_eq!(r.falsified(), 0, "{r}");
        assert!(r.suites.iter().all(|s| s.checked > 0), "{r}");
        assert!(r.to_string().ends_with("0 falsified"));
    }

    #[test]
    fn order_check_catches_a_wrong_claim() {
        let g = Generator::new(3, GenConfig { vars: 1, depth: 1, deterministic: false });
        let ctx = Ctx::new(&g);
        let c = Program::choice(Program::Skip, Program::assign("x", crate::syntax::AExpr::Lit(0)));
        let f = Quantity::arith(crate::syntax::AExpr::var("x"));
        let wp = ctx.t(Mode::Wp, &c, &f).unwrap().unwrap();
        let wlp = ctx.t(Mode::Wlp, &c, &f).unwrap().unwrap();
        assert!(order_agrees(&wlp, &wp, ctx.probe()) && order_agrees(&wp, &wlp, ctx.probe()));
        assert!(proofs::check_order(&wlp, &wp, ctx.probe()).holds());
        assert!(proofs::check_order(&wp, &wlp, ctx.probe()).fails());
    }
}
