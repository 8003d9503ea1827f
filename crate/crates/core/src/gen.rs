//! Seeded random programs and quantities for property suites.
//!
//! Generated programs are small on purpose. The suites compare symbolic
//! transformers, which range over all integers, with an oracle that enumerates
//! a finite box, so the generator keeps every run that ends inside the probe
//! box starting inside the enumeration box:
//!
//! * at most [`MAX_ASSIGNMENTS`] assignments, each moving a value by at most 2;
//! * quantities only look at variables through clamps to `-3..3`, so states
//!   far outside the box look like states at its edge;
//! * loops have the shape `while (x < c) {x := x + k; rest}` with `k > 0` and
//!   `rest` never touching `x`, so they always terminate.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use num_rational::BigRational;

use crate::syntax::{var, AExpr, BExpr, CmpOp, DomainSpec, Program, Quantity, Var};

pub const MAX_ASSIGNMENTS: usize = 4;
pub const TRANSFORM_FUEL: usize = 16;
pub const NAMES: [&str; 3] = ["x", "y", "z"];

#[derive(Debug, Clone)]
pub struct GenConfig {
    /// Number of program variables, 1 to 3.
    pub vars: usize,
    /// Nesting depth of branches, at most 4.
    pub depth: usize,
    /// No nondeterministic choice.
    pub deterministic: bool,
}

impl Default for GenConfig {
    fn default() -> Self {
        GenConfig { vars: 3, depth: 3, deterministic: false }
    }
}

/// The boxes a generated instance is checked on.
#[derive(Debug, Clone)]
pub struct Boxes {
    /// States where symbolic and reference values are compared. Its fuel
    /// bounds Kleene iteration; generated loops that converge at all do so
    /// within a handful of steps, and truncated results are skipped anyway.
    pub probe: DomainSpec,
    /// Initial states the oracle enumerates; sp/slp fibers range over it.
    pub initial: DomainSpec,
    /// Runs leaving this box abort the check instead of being dropped.
    pub escape: DomainSpec,
}

impl Boxes {
    pub fn new(vars: &[Var]) -> Self {
        let names: Vec<&str> = vars.iter().map(Var::as_str).collect();
        let alpha = (-12, 12);
        Boxes {
            probe: DomainSpec::uniform(&names, (-4, 4), alpha, TRANSFORM_FUEL),
            initial: DomainSpec::uniform(&names, (-12, 12), alpha, 64),
            escape: DomainSpec::uniform(&names, (-24, 24), alpha, 64),
        }
    }
}

pub struct Generator {
    rng: ChaCha8Rng,
    cfg: GenConfig,
    vars: Vec<Var>,
    budget: usize,
}

impl Generator {
    pub fn new(seed: u64, cfg: GenConfig) -> Self {
        assert!((1..=3).contains(&cfg.vars), "1 to 3 variables");
        assert!(cfg.depth <= 4, "depth at most 4");
        let vars = NAMES[..cfg.vars].iter().map(|n| var(n)).collect();
        Generator { rng: ChaCha8Rng::seed_from_u64(seed), cfg, vars, budget: 0 }
    }

    pub fn vars(&self) -> &[Var] {
        &self.vars
    }

    pub fn boxes(&self) -> Boxes {
        Boxes::new(&self.vars)
    }

    pub fn rng(&mut self) -> &mut ChaCha8Rng {
        &mut self.rng
    }

    fn pick_var(&mut self) -> Var {
        self.vars.choose(&mut self.rng).expect("at least one variable").clone()
    }

    fn small(&mut self) -> i64 {
        self.rng.gen_range(-3..=3)
    }

    fn aexpr(&mut self) -> AExpr {
        let y = AExpr::Var(self.pick_var());
        match self.rng.gen_range(0..6) {
            0 => AExpr::Lit(self.small()),
            1 => y,
            2 => AExpr::mul(-1, y),
            3 | 4 => {
                let k = *[-2, -1, 1, 2].choose(&mut self.rng).expect("nonempty");
                if k > 0 {
                    AExpr::add(y, AExpr::Lit(k))
                } else {
                    AExpr::sub(y, AExpr::Lit(-k))
                }
            }
            _ => AExpr::modulo(y, self.rng.gen_range(2..=3)),
        }
    }

    fn atom(&mut self) -> BExpr {
        let x = AExpr::Var(self.pick_var());
        let ops = [CmpOp::Lt, CmpOp::Le, CmpOp::Eq, CmpOp::Ne, CmpOp::Ge, CmpOp::Gt];
        let op = *ops.choose(&mut self.rng).expect("nonempty");
        match self.rng.gen_range(0..5) {
            0 | 1 => BExpr::cmp(x, op, AExpr::Lit(self.small())),
            2 | 3 => {
                let y = AExpr::Var(self.pick_var());
                BExpr::cmp(x, op, y)
            }
            _ => {
                let r = self.rng.gen_range(0..2);
                BExpr::cmp(AExpr::modulo(x, 2), CmpOp::Eq, AExpr::Lit(r))
            }
        }
    }

    pub fn predicate(&mut self) -> BExpr {
        match self.rng.gen_range(0..6) {
            0 => BExpr::and(self.atom(), self.atom()),
            1 => BExpr::or(self.atom(), self.atom()),
            2 => BExpr::not(self.atom()),
            _ => self.atom(),
        }
    }

    fn assignment(&mut self) -> Program {
        self.budget -= 1;
        let x = self.pick_var();
        Program::Assign(x, self.aexpr())
    }

    fn statement(&mut self, depth: usize) -> Program {
        if self.budget == 0 {
            return Program::Skip;
        }
        let roll = self.rng.gen_range(0..10);
        match roll {
            0 if depth > 0 && self.budget >= 2 => {
                let b = self.predicate();
                let t = self.block(depth - 1);
                let e = self.block(depth - 1);
                Program::ite(b, t, e)
            }
            1 if depth > 0 && self.budget >= 2 && !self.cfg.deterministic => {
                let a = self.block(depth - 1);
                let b = self.block(depth - 1);
                Program::choice(a, b)
            }
            2 if self.cfg.depth > 0 && !self.cfg.deterministic => Program::Skip,
            _ => self.assignment(),
        }
    }

    fn block(&mut self, depth: usize) -> Program {
        let n = self.rng.gen_range(1..=2);
        let mut p = self.statement(depth);
        for _ in 1..n {
            if self.budget == 0 {
                break;
            }
            let s = self.statement(depth);
            p = Program::seq(p, s);
        }
        p
    }

    /// A loop-free program.
    pub fn program(&mut self) -> Program {
        self.budget = MAX_ASSIGNMENTS;
        let n = self.rng.gen_range(1..=3);
        let depth = self.cfg.depth;
        let mut p = self.statement(depth);
        for _ in 1..n {
            if self.budget == 0 {
                break;
            }
            let s = self.statement(depth);
            p = Program::seq(p, s);
        }
        p
    }

    /// `while (x < c) {x := x + k; rest}`, possibly preceded by an assignment
    /// to another variable.
    pub fn loop_program(&mut self) -> Program {
        let x = self.pick_var();
        let others: Vec<Var> = self.vars.iter().filter(|v| **v != x).cloned().collect();
        let c = self.rng.gen_range(-2..=4);
        let k = self.rng.gen_range(1..=2);
        let step = Program::Assign(x.clone(), AExpr::add(AExpr::Var(x.clone()), AExpr::Lit(k)));
        let mut body = step;
        if !others.is_empty() {
            for _ in 0..self.rng.gen_range(0..=2) {
                let y = others.choose(&mut self.rng).expect("nonempty").clone();
                let src = self.pick_var();
                let e = match self.rng.gen_range(0..3) {
                    0 => AExpr::Lit(self.small()),
                    1 => AExpr::Var(src),
                    _ => AExpr::modulo(AExpr::Var(src), 3),
                };
                let a = Program::Assign(y, e);
                body = if self.rng.gen_bool(0.5) { Program::seq(body, a) } else { Program::seq(a, body) };
            }
        }
        let guard = BExpr::cmp(AExpr::Var(x), CmpOp::Lt, AExpr::Lit(c));
        let lp = Program::while_loop(guard, body);
        if !others.is_empty() && self.rng.gen_bool(0.3) {
            let y = others.choose(&mut self.rng).expect("nonempty").clone();
            let e = AExpr::Lit(self.small());
            Program::seq(Program::Assign(y, e), lp)
        } else {
            lp
        }
    }

    /// `max(min(v, c), -c)` for `c` in 1..3.
    fn clamp(&mut self) -> Quantity {
        let v = Quantity::arith(AExpr::Var(self.pick_var()));
        let c = self.rng.gen_range(1..=3);
        Quantity::max(Quantity::min(v, Quantity::int(c)), Quantity::int(-c))
    }

    /// A quantity with finite values everywhere.
    pub fn finite_quantity(&mut self) -> Quantity {
        match self.rng.gen_range(0..6) {
            0 => Quantity::int(self.small()),
            1 => {
                let (a, b) = (self.clamp(), self.clamp());
                Quantity::add(a, b)
            }
            2 => {
                let a = self.clamp();
                Quantity::scale(BigRational::new(1.into(), 2.into()), a)
            }
            3 => {
                let a = self.clamp();
                let k = self.small();
                Quantity::add(a, Quantity::int(k))
            }
            4 => {
                let (a, b) = (self.clamp(), self.clamp());
                if self.rng.gen_bool(0.5) {
                    Quantity::min(a, b)
                } else {
                    Quantity::max(a, b)
                }
            }
            _ => Quantity::neg(self.clamp()),
        }
    }

    pub fn quantity(&mut self) -> Quantity {
        match self.rng.gen_range(0..8) {
            0 => Quantity::iverson(self.predicate()),
            1 => {
                let b = Quantity::iverson(self.predicate());
                let f = self.finite_quantity();
                Quantity::min(b, f)
            }
            2 => {
                let b = Quantity::iverson(self.predicate());
                let f = self.finite_quantity();
                Quantity::max(b, f)
            }
            3 => if self.rng.gen_bool(0.5) { Quantity::pos_inf() } else { Quantity::neg_inf() },
            _ => self.finite_quantity(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic_for_a_seed() {
        let mut a = Generator::new(7, GenConfig::default());
        let mut b = Generator::new(7, GenConfig::default());
        for _ in 0..20 {
            assert_eq!(a.program(), b.program());
            assert_eq!(a.quantity(), b.quantity());
        }
    }

    fn count_assignments(p: &Program) -> usize {
        match p {
            Program::Assign(..) => 1,
            Program::Seq(a, b) | Program::Choice(a, b) | Program::Ite(_, a, b) => {
                count_assignments(a) + count_assignments(b)
            }
            Program::While(_, b) => count_assignments(b),
            _ => 0,
        }
    }

    #[test]
    fn respects_bounds() {
        let mut g = Generator::new(1, GenConfig { vars: 2, depth: 4, deterministic: true });
        for _ in 0..200 {
            let p = g.program();
            assert!(p.is_loop_free() && p.is_deterministic());
            assert!(count_assignments(&p) <= MAX_ASSIGNMENTS, "{p}");
            assert!(p.vars().iter().all(|v| v.as_str() == "x" || v.as_str() == "y"));
            assert!(!g.loop_program().is_loop_free());
        }
    }
}
