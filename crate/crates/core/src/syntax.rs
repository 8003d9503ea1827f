//! Abstract syntax for guarded-command programs and quantities, program
//! states, finite domains, substitution and concrete evaluation.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;

use num_rational::BigRational;
use thiserror::Error;

use crate::lattice::{self, ExtReal, LatticeError};

/// Prefix reserved for quantifier binders. Program variables can never start
/// with it, so a binder never captures a program variable.
pub const BINDER_PREFIX: char = 'α';

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EvalError {
    #[error("unbound variable `{0}`")]
    Unbound(Var),
    #[error("integer overflow while evaluating `{0}`")]
    Overflow(AExpr),
    #[error("remainder by non-positive constant {0}")]
    BadModulus(i64),
    #[error(transparent)]
    Lattice(#[from] LatticeError),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("invalid variable name {0:?}")]
pub struct BadVarName(pub String);

/// A program variable or a quantifier binder.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Var(String);

impl Var {
    /// A program variable; must match `[A-Za-z_][A-Za-z0-9_']*`.
    pub fn new(name: impl Into<String>) -> Result<Self, BadVarName> {
        let name = name.into();
        if is_program_ident(&name) {
            Ok(Var(name))
        } else {
            Err(BadVarName(name))
        }
    }

    /// The `index`-th binder name, `α0`, `α1`, ...
    pub fn binder(index: usize) -> Self {
        Var(format!("{BINDER_PREFIX}{index}"))
    }

    pub fn is_binder(&self) -> bool {
        self.0.starts_with(BINDER_PREFIX)
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

pub(crate) fn is_program_ident(s: &str) -> bool {
    let mut chars = s.chars();
    match chars.next() {
        Some(c) if c.is_ascii_alphabetic() || c == '_' => {}
        _ => return false,
    }
    chars.all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '\'')
}

impl fmt::Display for Var {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// Convenience constructor for tests and examples. Panics on a bad name.
pub fn var(name: &str) -> Var {
    Var::new(name).unwrap_or_else(|e| panic!("{e}"))
}

/// Returns the first binder `α0, α1, ...` not contained in `avoid`.
pub fn fresh_var(avoid: &BTreeSet<Var>) -> Var {
    (0..)
        .map(Var::binder)
        .find(|v| !avoid.contains(v))
        .expect("unbounded supply of binder names")
}

/// Integer expressions: literals, variables, sums, differences, products with
/// a constant, and Euclidean remainder by a positive constant.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum AExpr {
    Lit(i64),
    Var(Var),
    Add(Box<AExpr>, Box<AExpr>),
    Sub(Box<AExpr>, Box<AExpr>),
    Mul(i64, Box<AExpr>),
    Mod(Box<AExpr>, i64),
}

impl AExpr {
    pub fn var(name: &str) -> Self {
        AExpr::Var(var(name))
    }

    #[allow(clippy::should_implement_trait)]
    pub fn add(a: AExpr, b: AExpr) -> Self {
        AExpr::Add(Box::new(a), Box::new(b))
    }

    #[allow(clippy::should_implement_trait)]
    pub fn sub(a: AExpr, b: AExpr) -> Self {
        AExpr::Sub(Box::new(a), Box::new(b))
    }

    #[allow(clippy::should_implement_trait)]
    pub fn mul(k: i64, e: AExpr) -> Self {
        AExpr::Mul(k, Box::new(e))
    }

    pub fn modulo(e: AExpr, k: i64) -> Self {
        AExpr::Mod(Box::new(e), k)
    }

    pub fn vars_into(&self, out: &mut BTreeSet<Var>) {
        match self {
            AExpr::Lit(_) => {}
            AExpr::Var(v) => {
                out.insert(v.clone());
            }
            AExpr::Add(a, b) | AExpr::Sub(a, b) => {
                a.vars_into(out);
                b.vars_into(out);
            }
            AExpr::Mul(_, e) | AExpr::Mod(e, _) => e.vars_into(out),
        }
    }

    pub fn vars(&self) -> BTreeSet<Var> {
        let mut out = BTreeSet::new();
        self.vars_into(&mut out);
        out
    }

    pub fn mentions(&self, x: &Var) -> bool {
        match self {
            AExpr::Lit(_) => false,
            AExpr::Var(v) => v == x,
            AExpr::Add(a, b) | AExpr::Sub(a, b) => a.mentions(x) || b.mentions(x),
            AExpr::Mul(_, e) | AExpr::Mod(e, _) => e.mentions(x),
        }
    }

    pub fn subst(&self, x: &Var, e: &AExpr) -> AExpr {
        match self {
            AExpr::Lit(_) => self.clone(),
            AExpr::Var(v) if v == x => e.clone(),
            AExpr::Var(_) => self.clone(),
            AExpr::Add(a, b) => AExpr::add(a.subst(x, e), b.subst(x, e)),
            AExpr::Sub(a, b) => AExpr::sub(a.subst(x, e), b.subst(x, e)),
            AExpr::Mul(k, a) => AExpr::mul(*k, a.subst(x, e)),
            AExpr::Mod(a, k) => AExpr::modulo(a.subst(x, e), *k),
        }
    }

    pub fn eval(&self, env: &impl Env) -> Result<i64, EvalError> {
        let overflow = || EvalError::Overflow(self.clone());
        match self {
            AExpr::Lit(n) => Ok(*n),
            AExpr::Var(v) => env.lookup(v).ok_or_else(|| EvalError::Unbound(v.clone())),
            AExpr::Add(a, b) => a.eval(env)?.checked_add(b.eval(env)?).ok_or_else(overflow),
            AExpr::Sub(a, b) => a.eval(env)?.checked_sub(b.eval(env)?).ok_or_else(overflow),
            AExpr::Mul(k, a) => a.eval(env)?.checked_mul(*k).ok_or_else(overflow),
            AExpr::Mod(a, k) => {
                if *k <= 0 {
                    return Err(EvalError::BadModulus(*k));
                }
                Ok(a.eval(env)?.rem_euclid(*k))
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum CmpOp {
    Lt,
    Le,
    Eq,
    Ne,
    Ge,
    Gt,
}

impl CmpOp {
    pub fn negate(self) -> Self {
        match self {
            CmpOp::Lt => CmpOp::Ge,
            CmpOp::Le => CmpOp::Gt,
            CmpOp::Eq => CmpOp::Ne,
            CmpOp::Ne => CmpOp::Eq,
            CmpOp::Ge => CmpOp::Lt,
            CmpOp::Gt => CmpOp::Le,
        }
    }

    pub fn holds(self, a: i64, b: i64) -> bool {
        match self {
            CmpOp::Lt => a < b,
            CmpOp::Le => a <= b,
            CmpOp::Eq => a == b,
            CmpOp::Ne => a != b,
            CmpOp::Ge => a >= b,
            CmpOp::Gt => a > b,
        }
    }

    pub fn symbol(self) -> &'static str {
        match self {
            CmpOp::Lt => "<",
            CmpOp::Le => "<=",
            CmpOp::Eq => "=",
            CmpOp::Ne => "!=",
            CmpOp::Ge => ">=",
            CmpOp::Gt => ">",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum BExpr {
    True,
    False,
    Cmp(AExpr, CmpOp, AExpr),
    And(Box<BExpr>, Box<BExpr>),
    Or(Box<BExpr>, Box<BExpr>),
    Not(Box<BExpr>),
}

impl BExpr {
    pub fn cmp(a: AExpr, op: CmpOp, b: AExpr) -> Self {
        BExpr::Cmp(a, op, b)
    }

    pub fn and(a: BExpr, b: BExpr) -> Self {
        BExpr::And(Box::new(a), Box::new(b))
    }

    pub fn or(a: BExpr, b: BExpr) -> Self {
        BExpr::Or(Box::new(a), Box::new(b))
    }

    #[allow(clippy::should_implement_trait)]
    pub fn not(b: BExpr) -> Self {
        BExpr::Not(Box::new(b))
    }

    pub fn vars_into(&self, out: &mut BTreeSet<Var>) {
        match self {
            BExpr::True | BExpr::False => {}
            BExpr::Cmp(a, _, b) => {
                a.vars_into(out);
                b.vars_into(out);
            }
            BExpr::And(a, b) | BExpr::Or(a, b) => {
                a.vars_into(out);
                b.vars_into(out);
            }
            BExpr::Not(a) => a.vars_into(out),
        }
    }

    pub fn vars(&self) -> BTreeSet<Var> {
        let mut out = BTreeSet::new();
        self.vars_into(&mut out);
        out
    }

    pub fn mentions(&self, x: &Var) -> bool {
        match self {
            BExpr::True | BExpr::False => false,
            BExpr::Cmp(a, _, b) => a.mentions(x) || b.mentions(x),
            BExpr::And(a, b) | BExpr::Or(a, b) => a.mentions(x) || b.mentions(x),
            BExpr::Not(a) => a.mentions(x),
        }
    }

    pub fn subst(&self, x: &Var, e: &AExpr) -> BExpr {
        match self {
            BExpr::True | BExpr::False => self.clone(),
            BExpr::Cmp(a, op, b) => BExpr::Cmp(a.subst(x, e), *op, b.subst(x, e)),
            BExpr::And(a, b) => BExpr::and(a.subst(x, e), b.subst(x, e)),
            BExpr::Or(a, b) => BExpr::or(a.subst(x, e), b.subst(x, e)),
            BExpr::Not(a) => BExpr::not(a.subst(x, e)),
        }
    }

    pub fn eval(&self, env: &impl Env) -> Result<bool, EvalError> {
        match self {
            BExpr::True => Ok(true),
            BExpr::False => Ok(false),
            BExpr::Cmp(a, op, b) => Ok(op.holds(a.eval(env)?, b.eval(env)?)),
            BExpr::And(a, b) => Ok(a.eval(env)? && b.eval(env)?),
            BExpr::Or(a, b) => Ok(a.eval(env)? || b.eval(env)?),
            BExpr::Not(a) => Ok(!a.eval(env)?),
        }
    }
}

/// Programs of the nondeterministic guarded command language.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Program {
    Skip,
    Diverge,
    Assign(Var, AExpr),
    Seq(Box<Program>, Box<Program>),
    Choice(Box<Program>, Box<Program>),
    Ite(BExpr, Box<Program>, Box<Program>),
    While(BExpr, Box<Program>),
}

impl Program {
    pub fn assign(x: &str, e: AExpr) -> Self {
        Program::Assign(var(x), e)
    }

    pub fn seq(a: Program, b: Program) -> Self {
        Program::Seq(Box::new(a), Box::new(b))
    }

    pub fn choice(a: Program, b: Program) -> Self {
        Program::Choice(Box::new(a), Box::new(b))
    }

    pub fn ite(b: BExpr, t: Program, e: Program) -> Self {
        Program::Ite(b, Box::new(t), Box::new(e))
    }

    pub fn while_loop(b: BExpr, body: Program) -> Self {
        Program::While(b, Box::new(body))
    }

    /// Every variable occurring anywhere in the program.
    pub fn vars(&self) -> BTreeSet<Var> {
        let mut out = BTreeSet::new();
        self.vars_into(&mut out);
        out
    }

    fn vars_into(&self, out: &mut BTreeSet<Var>) {
        match self {
            Program::Skip | Program::Diverge => {}
            Program::Assign(x, e) => {
                out.insert(x.clone());
                e.vars_into(out);
            }
            Program::Seq(a, b) | Program::Choice(a, b) => {
                a.vars_into(out);
                b.vars_into(out);
            }
            Program::Ite(g, a, b) => {
                g.vars_into(out);
                a.vars_into(out);
                b.vars_into(out);
            }
            Program::While(g, body) => {
                g.vars_into(out);
                body.vars_into(out);
            }
        }
    }

    pub fn is_loop_free(&self) -> bool {
        match self {
            Program::Skip | Program::Diverge | Program::Assign(..) => true,
            Program::Seq(a, b) | Program::Choice(a, b) | Program::Ite(_, a, b) => {
                a.is_loop_free() && b.is_loop_free()
            }
            Program::While(..) => false,
        }
    }

    /// No nondeterministic choice anywhere.
    pub fn is_deterministic(&self) -> bool {
        match self {
            Program::Skip | Program::Diverge | Program::Assign(..) => true,
            Program::Choice(..) => false,
            Program::Seq(a, b) | Program::Ite(_, a, b) => {
                a.is_deterministic() && b.is_deterministic()
            }
            Program::While(_, body) => body.is_deterministic(),
        }
    }
}

/// Syntactic quantities: functions from states to extended reals.
///
/// `Min` and `Max` are n-ary; the binary constructors are the common case.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Quantity {
    Const(ExtReal),
    Arith(AExpr),
    Iverson(BExpr),
    Min(Vec<Quantity>),
    Max(Vec<Quantity>),
    Add(Box<Quantity>, Box<Quantity>),
    Scale(BigRational, Box<Quantity>),
    Neg(Box<Quantity>),
    Sup(Var, Box<Quantity>),
    Inf(Var, Box<Quantity>),
}

impl Quantity {
    pub fn pos_inf() -> Self {
        Quantity::Const(ExtReal::PosInf)
    }

    pub fn neg_inf() -> Self {
        Quantity::Const(ExtReal::NegInf)
    }

    pub fn int(n: i64) -> Self {
        Quantity::Const(ExtReal::int(n))
    }

    pub fn arith(e: AExpr) -> Self {
        Quantity::Arith(e)
    }

    pub fn iverson(b: BExpr) -> Self {
        Quantity::Iverson(b)
    }

    pub fn min(a: Quantity, b: Quantity) -> Self {
        Quantity::Min(vec![a, b])
    }

    pub fn max(a: Quantity, b: Quantity) -> Self {
        Quantity::Max(vec![a, b])
    }

    #[allow(clippy::should_implement_trait)]
    pub fn add(a: Quantity, b: Quantity) -> Self {
        Quantity::Add(Box::new(a), Box::new(b))
    }

    pub fn scale(r: BigRational, q: Quantity) -> Self {
        Quantity::Scale(r, Box::new(q))
    }

    #[allow(clippy::should_implement_trait)]
    pub fn neg(q: Quantity) -> Self {
        Quantity::Neg(Box::new(q))
    }

    pub fn sup(binder: Var, body: Quantity) -> Self {
        Quantity::Sup(binder, Box::new(body))
    }

    pub fn inf(binder: Var, body: Quantity) -> Self {
        Quantity::Inf(binder, Box::new(body))
    }

    /// `Sup` whose binder is renamed to a binder fresh for `ambient` and the body.
    pub fn sup_fresh(binder: &Var, body: Quantity, ambient: &BTreeSet<Var>) -> Self {
        let (fresh, body) = freshen(binder, body, ambient);
        Quantity::sup(fresh, body)
    }

    /// `Inf` counterpart of [`Quantity::sup_fresh`].
    pub fn inf_fresh(binder: &Var, body: Quantity, ambient: &BTreeSet<Var>) -> Self {
        let (fresh, body) = freshen(binder, body, ambient);
        Quantity::inf(fresh, body)
    }

    /// All variables, free or bound.
    pub fn all_vars(&self) -> BTreeSet<Var> {
        let mut out = BTreeSet::new();
        self.all_vars_into(&mut out);
        out
    }

    fn all_vars_into(&self, out: &mut BTreeSet<Var>) {
        match self {
            Quantity::Const(_) => {}
            Quantity::Arith(e) => e.vars_into(out),
            Quantity::Iverson(b) => b.vars_into(out),
            Quantity::Min(qs) | Quantity::Max(qs) => qs.iter().for_each(|q| q.all_vars_into(out)),
            Quantity::Add(a, b) => {
                a.all_vars_into(out);
                b.all_vars_into(out);
            }
            Quantity::Scale(_, q) | Quantity::Neg(q) => q.all_vars_into(out),
            Quantity::Sup(v, q) | Quantity::Inf(v, q) => {
                out.insert(v.clone());
                q.all_vars_into(out);
            }
        }
    }

    pub fn free_vars(&self) -> BTreeSet<Var> {
        let mut out = BTreeSet::new();
        self.free_vars_into(&mut out);
        out
    }

    fn free_vars_into(&self, out: &mut BTreeSet<Var>) {
        match self {
            Quantity::Const(_) => {}
            Quantity::Arith(e) => e.vars_into(out),
            Quantity::Iverson(b) => b.vars_into(out),
            Quantity::Min(qs) | Quantity::Max(qs) => qs.iter().for_each(|q| q.free_vars_into(out)),
            Quantity::Add(a, b) => {
                a.free_vars_into(out);
                b.free_vars_into(out);
            }
            Quantity::Scale(_, q) | Quantity::Neg(q) => q.free_vars_into(out),
            Quantity::Sup(v, q) | Quantity::Inf(v, q) => {
                let mut inner = BTreeSet::new();
                q.free_vars_into(&mut inner);
                inner.remove(v);
                out.extend(inner);
            }
        }
    }

    pub fn mentions_free(&self, x: &Var) -> bool {
        match self {
            Quantity::Const(_) => false,
            Quantity::Arith(e) => e.mentions(x),
            Quantity::Iverson(b) => b.mentions(x),
            Quantity::Min(qs) | Quantity::Max(qs) => qs.iter().any(|q| q.mentions_free(x)),
            Quantity::Add(a, b) => a.mentions_free(x) || b.mentions_free(x),
            Quantity::Scale(_, q) | Quantity::Neg(q) => q.mentions_free(x),
            Quantity::Sup(v, q) | Quantity::Inf(v, q) => v != x && q.mentions_free(x),
        }
    }

    /// Replaces free occurrences of `x` by `e`.
    ///
    /// Binders are fresh for the ambient variables by construction, so no
    /// renaming is needed here; a binder equal to `x` shadows it.
    pub fn subst(&self, x: &Var, e: &AExpr) -> Quantity {
        match self {
            Quantity::Const(_) => self.clone(),
            Quantity::Arith(a) => Quantity::Arith(a.subst(x, e)),
            Quantity::Iverson(b) => Quantity::Iverson(b.subst(x, e)),
            Quantity::Min(qs) => Quantity::Min(qs.iter().map(|q| q.subst(x, e)).collect()),
            Quantity::Max(qs) => Quantity::Max(qs.iter().map(|q| q.subst(x, e)).collect()),
            Quantity::Add(a, b) => Quantity::add(a.subst(x, e), b.subst(x, e)),
            Quantity::Scale(r, q) => Quantity::scale(r.clone(), q.subst(x, e)),
            Quantity::Neg(q) => Quantity::neg(q.subst(x, e)),
            Quantity::Sup(v, q) if v == x => self.clone(),
            Quantity::Inf(v, q) if v == x => self.clone(),
            Quantity::Sup(v, q) => Quantity::sup(v.clone(), q.subst(x, e)),
            Quantity::Inf(v, q) => Quantity::inf(v.clone(), q.subst(x, e)),
        }
    }

    /// Evaluates the quantity at `state`; quantifiers range over the domain's
    /// alpha window.
    pub fn eval(&self, state: &State, dom: &DomainSpec) -> Result<ExtReal, EvalError> {
        let mut scope = Scope { state, bound: Vec::new(), free: HashMap::new(), memo: HashMap::new() };
        self.eval_in(&mut scope, dom.alpha)
    }

    /// Quantifiers nested in quantifiers are evaluated once per valuation of
    /// their free variables; without this, nesting depth `d` costs
    /// `window^d` evaluations.
    fn eval_quantifier(&self, scope: &mut Scope<'_>, window: (i64, i64)) -> Result<ExtReal, EvalError> {
        let id = self as *const Quantity;
        let free = scope.free.entry(id).or_insert_with(|| self.free_vars().into_iter().collect()).clone();
        let key: Vec<Option<i64>> = free.iter().map(|v| scope.lookup(v)).collect();
        if let Some(v) = scope.memo.get(&(id, key.clone())) {
            return Ok(v.clone());
        }
        let (v, q, sup) = match self {
            Quantity::Sup(v, q) => (v, q, true),
            Quantity::Inf(v, q) => (v, q, false),
            _ => unreachable!("quantifier node"),
        };
        let (unit, absorbing) = if sup { (ExtReal::NegInf, ExtReal::PosInf) } else { (ExtReal::PosInf, ExtReal::NegInf) };
        let mut acc = unit;
        for a in window.0..=window.1 {
            scope.bound.push((v.clone(), a));
            let val = q.eval_in(scope, window);
            scope.bound.pop();
            let val = val?;
            acc = if sup { lattice::join(&acc, &val) } else { lattice::meet(&acc, &val) };
            if acc == absorbing {
                break;
            }
        }
        scope.memo.insert((id, key), acc.clone());
        Ok(acc)
    }

    fn eval_in(&self, scope: &mut Scope<'_>, window: (i64, i64)) -> Result<ExtReal, EvalError> {
        match self {
            Quantity::Const(c) => Ok(c.clone()),
            Quantity::Arith(e) => Ok(ExtReal::int(e.eval(&*scope)?)),
            Quantity::Iverson(b) => Ok(if b.eval(&*scope)? {
                ExtReal::PosInf
            } else {
                ExtReal::NegInf
            }),
            Quantity::Min(qs) => {
                let mut acc = ExtReal::PosInf;
                for q in qs {
                    acc = lattice::meet(&acc, &q.eval_in(scope, window)?);
                    if acc == ExtReal::NegInf {
                        break;
                    }
                }
                Ok(acc)
            }
            Quantity::Max(qs) => {
                let mut acc = ExtReal::NegInf;
                for q in qs {
                    acc = lattice::join(&acc, &q.eval_in(scope, window)?);
                    if acc == ExtReal::PosInf {
                        break;
                    }
                }
                Ok(acc)
            }
            Quantity::Add(a, b) => {
                let a = a.eval_in(scope, window)?;
                let b = b.eval_in(scope, window)?;
                Ok(lattice::add(&a, &b)?)
            }
            Quantity::Scale(r, q) => Ok(lattice::scale(r, &q.eval_in(scope, window)?)?),
            Quantity::Neg(q) => Ok(lattice::negate(&q.eval_in(scope, window)?)),
            Quantity::Sup(..) | Quantity::Inf(..) => self.eval_quantifier(scope, window),
        }
    }
}

fn freshen(binder: &Var, body: Quantity, ambient: &BTreeSet<Var>) -> (Var, Quantity) {
    let mut avoid = ambient.clone();
    avoid.extend(body.all_vars());
    let fresh = fresh_var(&avoid);
    let body = body.subst(binder, &AExpr::Var(fresh.clone()));
    (fresh, body)
}

/// Variable lookup used by expression evaluation.
pub trait Env {
    fn lookup(&self, v: &Var) -> Option<i64>;
}

struct Scope<'a> {
    state: &'a State,
    bound: Vec<(Var, i64)>,
    /// Free variables of quantifier nodes, by address.
    free: HashMap<*const Quantity, Vec<Var>>,
    memo: HashMap<(*const Quantity, Vec<Option<i64>>), ExtReal>,
}

impl Env for Scope<'_> {
    fn lookup(&self, v: &Var) -> Option<i64> {
        self.bound
            .iter()
            .rev()
            .find(|(b, _)| b == v)
            .map(|(_, n)| *n)
            .or_else(|| self.state.get(v))
    }
}

/// A valuation of program variables. The derived order is lexicographic in
/// variable-name order, which fixes the scan order for counterexamples.
#[derive(Debug, Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct State(BTreeMap<Var, i64>);

impl State {
    pub fn new() -> Self {
        State(BTreeMap::new())
    }

    pub fn from_pairs<'a>(pairs: impl IntoIterator<Item = (&'a str, i64)>) -> Self {
        State(pairs.into_iter().map(|(k, v)| (var(k), v)).collect())
    }

    pub fn get(&self, v: &Var) -> Option<i64> {
        self.0.get(v).copied()
    }

    pub fn set(&mut self, v: Var, value: i64) {
        self.0.insert(v, value);
    }

    /// `self[x ↦ value]`.
    pub fn with(&self, v: &Var, value: i64) -> State {
        let mut s = self.clone();
        s.set(v.clone(), value);
        s
    }

    pub fn vars(&self) -> impl Iterator<Item = &Var> {
        self.0.keys()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Var, i64)> {
        self.0.iter().map(|(k, v)| (k, *v))
    }
}

impl Env for State {
    fn lookup(&self, v: &Var) -> Option<i64> {
        self.get(v)
    }
}

impl fmt::Display for State {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("{")?;
        for (i, (k, v)) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{k}={v}")?;
        }
        f.write_str("}")
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DomainError {
    #[error("empty interval {lo}..{hi} for `{name}`")]
    EmptyInterval { name: String, lo: i64, hi: i64 },
    #[error("fuel must be at least 1")]
    NoFuel,
    #[error("domain does not cover variable `{0}`")]
    Missing(Var),
}

/// A finite truncation of the state space: one closed interval per variable,
/// the range quantifiers are evaluated over, and an iteration budget.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DomainSpec {
    pub vars: BTreeMap<Var, (i64, i64)>,
    pub alpha: (i64, i64),
    pub fuel: usize,
}

impl DomainSpec {
    pub const DEFAULT_ALPHA: (i64, i64) = (-16, 16);
    pub const DEFAULT_FUEL: usize = 64;

    pub fn new(
        vars: impl IntoIterator<Item = (Var, (i64, i64))>,
        alpha: (i64, i64),
        fuel: usize,
    ) -> Result<Self, DomainError> {
        let vars: BTreeMap<_, _> = vars.into_iter().collect();
        for (v, &(lo, hi)) in &vars {
            if lo > hi {
                return Err(DomainError::EmptyInterval { name: v.to_string(), lo, hi });
            }
        }
        if alpha.0 > alpha.1 {
            return Err(DomainError::EmptyInterval { name: "alpha".into(), lo: alpha.0, hi: alpha.1 });
        }
        if fuel == 0 {
            return Err(DomainError::NoFuel);
        }
        Ok(DomainSpec { vars, alpha, fuel })
    }

    /// Same interval for every listed variable.
    pub fn uniform(names: &[&str], range: (i64, i64), alpha: (i64, i64), fuel: usize) -> Self {
        DomainSpec::new(names.iter().map(|n| (var(n), range)), alpha, fuel)
            .unwrap_or_else(|e| panic!("{e}"))
    }

    pub fn with_interval(mut self, name: &str, range: (i64, i64)) -> Self {
        self.vars.insert(var(name), range);
        self
    }

    /// Every interval grown by `by` on both sides.
    pub fn widened(&self, by: i64) -> Self {
        let vars = self.vars.iter().map(|(v, &(lo, hi))| (v.clone(), (lo - by, hi + by))).collect();
        DomainSpec { vars, alpha: self.alpha, fuel: self.fuel }
    }

    pub fn contains(&self, s: &State) -> bool {
        s.iter().all(|(v, n)| match self.vars.get(v) {
            Some(&(lo, hi)) => lo <= n && n <= hi,
            None => false,
        })
    }

    /// Fails if some variable in `vars` has no interval.
    pub fn covers<'a>(&self, vars: impl IntoIterator<Item = &'a Var>) -> Result<(), DomainError> {
        for v in vars {
            if !v.is_binder() && !self.vars.contains_key(v) {
                return Err(DomainError::Missing(v.clone()));
            }
        }
        Ok(())
    }

    pub fn size(&self) -> usize {
        self.vars.values().map(|(lo, hi)| (hi - lo + 1) as usize).product()
    }

    /// All states of the box, in lexicographic order.
    pub fn states(&self) -> impl Iterator<Item = State> + '_ {
        let names: Vec<&Var> = self.vars.keys().collect();
        let ranges: Vec<(i64, i64)> = self.vars.values().copied().collect();
        let total = self.size();
        let mut current: Vec<i64> = ranges.iter().map(|r| r.0).collect();
        let mut emitted = 0usize;
        std::iter::from_fn(move || {
            if emitted == total {
                return None;
            }
            let state = State(names.iter().map(|v| (*v).clone()).zip(current.iter().copied()).collect());
            emitted += 1;
            for i in (0..current.len()).rev() {
                if current[i] < ranges[i].1 {
                    current[i] += 1;
                    break;
                }
                current[i] = ranges[i].0;
            }
            Some(state)
        })
    }
}

impl fmt::Display for DomainSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let vars: Vec<String> =
            self.vars.iter().map(|(v, (lo, hi))| format!("{v}={lo}..{hi}")).collect();
        write!(
            f,
            "{}; alpha={}..{}; fuel={}",
            vars.join(", "),
            self.alpha.0,
            self.alpha.1,
            self.fuel
        )
    }
}

// ---------------------------------------------------------------------------
// Concrete syntax rendering. Every printer here is inverted by `parser`.

fn write_aexpr(e: &AExpr, f: &mut fmt::Formatter<'_>) -> fmt::Result {
    match e {
        AExpr::Lit(n) => write!(f, "{n}"),
        AExpr::Var(v) => write!(f, "{v}"),
        AExpr::Add(a, b) => {
            write_aexpr(a, f)?;
            f.write_str(" + ")?;
            write_aexpr_operand(b, f, matches!(**b, AExpr::Add(..) | AExpr::Sub(..)))
        }
        AExpr::Sub(a, b) => {
            write_aexpr(a, f)?;
            f.write_str(" - ")?;
            write_aexpr_operand(b, f, matches!(**b, AExpr::Add(..) | AExpr::Sub(..)))
        }
        AExpr::Mul(k, a) => {
            write!(f, "{k}*")?;
            let atomic = matches!(**a, AExpr::Var(_)) || matches!(**a, AExpr::Lit(n) if n >= 0);
            write_aexpr_operand(a, f, !atomic)
        }
        AExpr::Mod(a, k) => {
            write_aexpr_operand(a, f, matches!(**a, AExpr::Add(..) | AExpr::Sub(..)))?;
            write!(f, " % {k}")
        }
    }
}

fn write_aexpr_operand(e: &AExpr, f: &mut fmt::Formatter<'_>, parens: bool) -> fmt::Result {
    if parens {
        f.write_str("(")?;
        write_aexpr(e, f)?;
        f.write_str(")")
    } else {
        write_aexpr(e, f)
    }
}

impl fmt::Display for AExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_aexpr(self, f)
    }
}

impl fmt::Display for CmpOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.symbol())
    }
}

fn write_bexpr(b: &BExpr, f: &mut fmt::Formatter<'_>) -> fmt::Result {
    match b {
        BExpr::True => f.write_str("true"),
        BExpr::False => f.write_str("false"),
        BExpr::Cmp(a, op, c) => write!(f, "{a} {op} {c}"),
        BExpr::Or(a, c) => {
            write_bexpr(a, f)?;
            f.write_str(" || ")?;
            write_bexpr_operand(c, f, matches!(**c, BExpr::Or(..)))
        }
        BExpr::And(a, c) => {
            write_bexpr_operand(a, f, matches!(**a, BExpr::Or(..)))?;
            f.write_str(" && ")?;
            write_bexpr_operand(c, f, matches!(**c, BExpr::Or(..) | BExpr::And(..)))
        }
        BExpr::Not(a) => {
            f.write_str("!")?;
            write_bexpr_operand(a, f, !matches!(**a, BExpr::True | BExpr::False | BExpr::Not(_)))
        }
    }
}

fn write_bexpr_operand(b: &BExpr, f: &mut fmt::Formatter<'_>, parens: bool) -> fmt::Result {
    if parens {
        f.write_str("(")?;
        write_bexpr(b, f)?;
        f.write_str(")")
    } else {
        write_bexpr(b, f)
    }
}

impl fmt::Display for BExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_bexpr(self, f)
    }
}

fn write_program(p: &Program, f: &mut fmt::Formatter<'_>) -> fmt::Result {
    match p {
        Program::Skip => f.write_str("skip"),
        Program::Diverge => f.write_str("diverge"),
        Program::Assign(x, e) => write!(f, "{x} := {e}"),
        Program::Seq(a, b) => {
            if matches!(**a, Program::Seq(..)) {
                f.write_str("{")?;
                write_program(a, f)?;
                f.write_str("}")?;
            } else {
                write_program(a, f)?;
            }
            f.write_str("; ")?;
            write_program(b, f)
        }
        Program::Choice(a, b) => {
            f.write_str("{")?;
            write_program(a, f)?;
            f.write_str("} [] {")?;
            write_program(b, f)?;
            f.write_str("}")
        }
        Program::Ite(g, a, b) => {
            write!(f, "if ({g}) {{")?;
            write_program(a, f)?;
            f.write_str("} else {")?;
            write_program(b, f)?;
            f.write_str("}")
        }
        Program::While(g, body) => {
            write!(f, "while ({g}) {{")?;
            write_program(body, f)?;
            f.write_str("}")
        }
    }
}

impl fmt::Display for Program {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_program(self, f)
    }
}

fn write_quantity(q: &Quantity, f: &mut fmt::Formatter<'_>) -> fmt::Result {
    match q {
        Quantity::Const(c) => write!(f, "{c}"),
        Quantity::Arith(e) => write!(f, "{e}"),
        Quantity::Iverson(b) => write!(f, "[{b}]"),
        Quantity::Min(qs) | Quantity::Max(qs) => {
            f.write_str(if matches!(q, Quantity::Min(_)) { "min(" } else { "max(" })?;
            for (i, child) in qs.iter().enumerate() {
                if i > 0 {
                    f.write_str(", ")?;
                }
                write_quantity(child, f)?;
            }
            f.write_str(")")
        }
        Quantity::Add(a, b) => {
            write_quantity_operand(a, f, matches!(**a, Quantity::Sup(..) | Quantity::Inf(..)))?;
            f.write_str(" + ")?;
            write_quantity_operand(b, f, matches!(**b, Quantity::Add(..)))
        }
        Quantity::Scale(r, inner) => {
            lattice::fmt_rational(r, f)?;
            f.write_str(" * ")?;
            let atomic = matches!(
                **inner,
                Quantity::Iverson(_) | Quantity::Min(_) | Quantity::Max(_) | Quantity::Const(_)
            ) || matches!(&**inner, Quantity::Arith(AExpr::Var(_)));
            write_quantity_operand(inner, f, !atomic)
        }
        Quantity::Neg(inner) => {
            f.write_str("-")?;
            let atomic = matches!(**inner, Quantity::Iverson(_) | Quantity::Min(_) | Quantity::Max(_));
            write_quantity_operand(inner, f, !atomic)
        }
        Quantity::Sup(v, body) => {
            write!(f, "Sup {v}. ")?;
            write_quantity(body, f)
        }
        Quantity::Inf(v, body) => {
            write!(f, "Inf {v}. ")?;
            write_quantity(body, f)
        }
    }
}

fn write_quantity_operand(q: &Quantity, f: &mut fmt::Formatter<'_>, parens: bool) -> fmt::Result {
    if parens {
        f.write_str("(")?;
        write_quantity(q, f)?;
        f.write_str(")")
    } else {
        write_quantity(q, f)
    }
}

impl fmt::Display for Quantity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_quantity(self, f)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dom(range: (i64, i64)) -> DomainSpec {
        DomainSpec::uniform(&["x"], range, (-16, 16), 8)
    }

    #[test]
    fn fresh_var_is_deterministic() {
        assert_eq!(fresh_var(&BTreeSet::new()), Var::binder(0));
        assert_eq!(fresh_var(&[Var::binder(0)].into_iter().collect()), Var::binder(1));
        assert_eq!(fresh_var(&[var("x"), var("y")].into_iter().collect()), Var::binder(0));
        assert_eq!(Var::binder(0).as_str(), "α0");
    }

    #[test]
    fn var_names() {
        assert!(Var::new("hi").is_ok());
        assert!(Var::new("x'").is_ok());
        assert!(Var::new("_t9").is_ok());
        assert!(Var::new("").is_err());
        assert!(Var::new("9x").is_err());
        assert!(Var::new("α0").is_err());
    }

    #[test]
    fn aexpr_evaluation() {
        let s = State::from_pairs([("x", 9)]);
        assert_eq!(AExpr::add(AExpr::var("x"), AExpr::Lit(1)).eval(&s), Ok(10));
        let m = AExpr::modulo(AExpr::var("x"), 4);
        assert_eq!(m.eval(&State::from_pairs([("x", 12)])), Ok(0));
        assert_eq!(m.eval(&State::from_pairs([("x", -1)])), Ok(3));
        assert_eq!(AExpr::var("y").eval(&s), Err(EvalError::Unbound(var("y"))));
        assert!(matches!(
            AExpr::mul(i64::MAX, AExpr::var("x")).eval(&s),
            Err(EvalError::Overflow(_))
        ));
    }

    #[test]
    fn quantity_evaluation() {
        let d = dom((0, 20));
        let s10 = State::from_pairs([("x", 10)]);
        let x_eq_10 = BExpr::cmp(AExpr::var("x"), CmpOp::Eq, AExpr::Lit(10));
        assert_eq!(Quantity::iverson(x_eq_10).eval(&s10, &d), Ok(ExtReal::PosInf));
        assert_eq!(Quantity::min(Quantity::int(5), Quantity::int(3)).eval(&s10, &d), Ok(ExtReal::int(3)));
        // Sup a. min([x = a + 1], a) at x = 10 is 9.
        let a = Var::binder(0);
        let body = Quantity::min(
            Quantity::iverson(BExpr::cmp(
                AExpr::var("x"),
                CmpOp::Eq,
                AExpr::add(AExpr::Var(a.clone()), AExpr::Lit(1)),
            )),
            Quantity::arith(AExpr::Var(a.clone())),
        );
        assert_eq!(Quantity::sup(a, body).eval(&s10, &d), Ok(ExtReal::int(9)));
        let indeterminate = Quantity::add(Quantity::pos_inf(), Quantity::neg_inf());
        assert!(matches!(indeterminate.eval(&s10, &d), Err(EvalError::Lattice(_))));
    }

    #[test]
    fn subst_leaves_binders_alone() {
        let a = Var::binder(0);
        let q = Quantity::sup(
            a.clone(),
            Quantity::iverson(BExpr::cmp(AExpr::var("x"), CmpOp::Eq, AExpr::Var(a.clone()))),
        );
        let r = q.subst(&var("x"), &AExpr::Lit(5));
        assert_eq!(
            r,
            Quantity::sup(
                a.clone(),
                Quantity::iverson(BExpr::cmp(AExpr::Lit(5), CmpOp::Eq, AExpr::Var(a.clone())))
            )
        );
        assert_eq!(q.subst(&a, &AExpr::Lit(1)), q);
    }

    #[test]
    fn sup_fresh_renames_binder() {
        let q = Quantity::sup_fresh(
            &var("a"),
            Quantity::arith(AExpr::add(AExpr::var("a"), AExpr::var("x"))),
            &[var("x")].into_iter().collect(),
        );
        assert_eq!(
            q,
            Quantity::sup(
                Var::binder(0),
                Quantity::arith(AExpr::add(AExpr::Var(Var::binder(0)), AExpr::var("x")))
            )
        );
    }

    #[test]
    fn domain_enumeration_is_lexicographic() {
        let d = DomainSpec::new([(var("y"), (0, 1)), (var("x"), (0, 2))], (0, 0), 1).unwrap();
        let states: Vec<State> = d.states().collect();
        assert_eq!(states.len(), 6);
        let mut sorted = states.clone();
        sorted.sort();
        assert_eq!(states, sorted);
        assert_eq!(states[1], State::from_pairs([("x", 0), ("y", 1)]));
        assert!(DomainSpec::new([(var("x"), (5, 3))], (0, 0), 1).is_err());
        assert_eq!(DomainSpec::new([(var("x"), (0, 1))], (0, 0), 0), Err(DomainError::NoFuel));
    }

    #[test]
    fn program_printing() {
        let p = Program::ite(
            BExpr::cmp(AExpr::var("hi"), CmpOp::Gt, AExpr::Lit(7)),
            Program::assign("lo", AExpr::Lit(99)),
            Program::assign("lo", AExpr::Lit(80)),
        );
        assert_eq!(p.to_string(), "if (hi > 7) {lo := 99} else {lo := 80}");
        assert_eq!(
            p.vars().into_iter().map(|v| v.to_string()).collect::<Vec<_>>(),
            ["hi", "lo"]
        );
    }

    proptest::proptest! {
        #[test]
        fn sup_over_singleton_window_is_instantiation(x in -5i64..5, a in -5i64..5) {
            let d = DomainSpec::uniform(&["x"], (-5, 5), (a, a), 1);
            let b = Var::binder(0);
            let body = Quantity::add(Quantity::arith(AExpr::var("x")), Quantity::arith(AExpr::Var(b.clone())));
            let s = State::from_pairs([("x", x)]);
            let lhs = Quantity::sup(b.clone(), body.clone()).eval(&s, &d).unwrap();
            let rhs = body.subst(&b, &AExpr::Lit(a)).eval(&s, &d).unwrap();
            proptest::prop_assert_eq!(lhs, rhs);
        }
    }
}
