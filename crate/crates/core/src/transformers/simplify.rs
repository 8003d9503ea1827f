//! Semantics-preserving normalization of quantities.
//!
//! Simplification is bottom-up: children are normalized first and every node
//! is rebuilt through a smart constructor that assumes normalized inputs.
//! Conditions and integer expressions go through the linear normal forms of
//! [`crate::linear`]; min/max are flattened and sorted by a fixed order on
//! shapes; quantifiers are eliminated when a linear equation or unit-coefficient
//! bounds determine the binder.

use std::cmp::Ordering;

use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use crate::lattice::{self, ExtReal};
use crate::linear::{Conj, Dnf, LinExpr, Term};
use crate::syntax::{AExpr, BExpr, Quantity, Var};

/// Conjuncts beyond this are not split into separate quantifier problems.
const SPLIT_CAP: usize = 8;

pub fn simplify(q: &Quantity) -> Quantity {
    match q {
        Quantity::Const(_) => q.clone(),
        Quantity::Arith(e) => mk_arith(e),
        Quantity::Iverson(b) => mk_iverson(b),
        Quantity::Min(qs) => mk_min(qs.iter().map(simplify).collect()),
        Quantity::Max(qs) => mk_max(qs.iter().map(simplify).collect()),
        Quantity::Add(a, b) => mk_add(simplify(a), simplify(b)),
        Quantity::Scale(r, a) => mk_scale(r, simplify(a)),
        Quantity::Neg(a) => mk_neg(simplify(a)),
        Quantity::Sup(v, body) => mk_sup(v, simplify(body)),
        Quantity::Inf(v, body) => mk_inf(v, simplify(body)),
    }
}

/// Fixed order on shapes: brackets first, then constants, arithmetic, and
/// compound nodes; ties broken structurally.
pub fn canonical_cmp(a: &Quantity, b: &Quantity) -> Ordering {
    fn rank(q: &Quantity) -> u8 {
        match q {
            Quantity::Iverson(_) => 0,
            Quantity::Const(_) => 1,
            Quantity::Arith(_) => 2,
            Quantity::Scale(..) => 3,
            Quantity::Add(..) => 4,
            Quantity::Neg(_) => 5,
            Quantity::Min(_) => 6,
            Quantity::Max(_) => 7,
            Quantity::Sup(..) => 8,
            Quantity::Inf(..) => 9,
        }
    }
    rank(a).cmp(&rank(b)).then_with(|| a.cmp(b))
}

/// Takes only finite values, so adding it never hits an indeterminate form.
pub fn is_finite_valued(q: &Quantity) -> bool {
    match q {
        Quantity::Const(c) => c.is_finite(),
        Quantity::Arith(_) => true,
        Quantity::Iverson(_) | Quantity::Sup(..) | Quantity::Inf(..) => false,
        Quantity::Min(qs) | Quantity::Max(qs) => qs.iter().all(is_finite_valued),
        Quantity::Add(a, b) => is_finite_valued(a) && is_finite_valued(b),
        Quantity::Scale(_, a) | Quantity::Neg(a) => is_finite_valued(a),
    }
}

fn from_lin(l: &LinExpr) -> Quantity {
    match l.as_const() {
        Some(c) => Quantity::int(c),
        None => Quantity::Arith(l.to_aexpr()),
    }
}

fn lin_of(q: &Quantity) -> Option<LinExpr> {
    match q {
        Quantity::Arith(e) => LinExpr::from_aexpr(e),
        Quantity::Const(ExtReal::Finite(r)) if r.is_integer() => {
            i64::try_from(r.to_integer()).ok().map(LinExpr::constant)
        }
        _ => None,
    }
}

pub fn mk_arith(e: &AExpr) -> Quantity {
    match LinExpr::from_aexpr(e) {
        Some(l) => from_lin(&l),
        None => Quantity::Arith(e.clone()),
    }
}

fn dnf_quantity(d: &Dnf) -> Quantity {
    if d.is_true() {
        Quantity::pos_inf()
    } else if d.is_false() {
        Quantity::neg_inf()
    } else {
        Quantity::Iverson(d.to_bexpr())
    }
}

pub fn mk_iverson(b: &BExpr) -> Quantity {
    match Dnf::from_bexpr(b) {
        Some(d) => dnf_quantity(&d),
        None => match b {
            BExpr::True => Quantity::pos_inf(),
            BExpr::False => Quantity::neg_inf(),
            _ => Quantity::Iverson(b.clone()),
        },
    }
}

fn dnf_of(q: &Quantity) -> Option<Dnf> {
    match q {
        Quantity::Iverson(b) => Dnf::from_bexpr(b),
        _ => None,
    }
}

/// `a` implies `b`.
fn implies(a: &Dnf, b: &Dnf) -> bool {
    b.not().and_then(|nb| a.and(&nb)).is_some_and(|d| d.is_false())
}

fn disjoint(a: &Dnf, b: &Dnf) -> bool {
    a.and(b).is_some_and(|d| d.is_false())
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Lat {
    Min,
    Max,
}

impl Lat {
    fn dual(self) -> Lat {
        match self {
            Lat::Min => Lat::Max,
            Lat::Max => Lat::Min,
        }
    }

    /// The identity element.
    fn unit(self) -> ExtReal {
        match self {
            Lat::Min => ExtReal::PosInf,
            Lat::Max => ExtReal::NegInf,
        }
    }

    fn children(self, q: &Quantity) -> Option<&Vec<Quantity>> {
        match (self, q) {
            (Lat::Min, Quantity::Min(qs)) | (Lat::Max, Quantity::Max(qs)) => Some(qs),
            _ => None,
        }
    }

    fn build(self, qs: Vec<Quantity>) -> Quantity {
        match self {
            Lat::Min => Quantity::Min(qs),
            Lat::Max => Quantity::Max(qs),
        }
    }

    fn pick(self, a: &ExtReal, b: &ExtReal) -> ExtReal {
        match self {
            Lat::Min => lattice::meet(a, b),
            Lat::Max => lattice::join(a, b),
        }
    }

    /// Combines two bracket conditions the way this operation combines
    /// brackets: conjunction for min, disjunction for max.
    fn combine(self, a: &Dnf, b: &Dnf) -> Option<Dnf> {
        match self {
            Lat::Min => a.and(b),
            Lat::Max => Some(a.or(b)),
        }
    }
}

pub fn mk_min(children: Vec<Quantity>) -> Quantity {
    mk_lattice(Lat::Min, children)
}

pub fn mk_max(children: Vec<Quantity>) -> Quantity {
    mk_lattice(Lat::Max, children)
}

fn mk_lattice(op: Lat, children: Vec<Quantity>) -> Quantity {
    // flatten
    let mut flat = Vec::new();
    for c in children {
        match op.children(&c) {
            Some(inner) => flat.extend(inner.iter().cloned()),
            None => flat.push(c),
        }
    }

    // constants, brackets and arithmetic with a common linear part
    let absorbing = op.dual().unit();
    let mut constant: Option<ExtReal> = None;
    let mut bracket: Option<Dnf> = None;
    let mut loose_brackets = Vec::new();
    let mut ariths: Vec<LinExpr> = Vec::new();
    let mut rest = Vec::new();
    for c in flat {
        match &c {
            Quantity::Const(v) => {
                if *v == absorbing {
                    return Quantity::Const(absorbing);
                }
                constant = Some(match constant {
                    None => v.clone(),
                    Some(k) => op.pick(&k, v),
                });
            }
            Quantity::Iverson(_) => match (dnf_of(&c), &bracket) {
                (Some(d), None) => bracket = Some(d),
                (Some(d), Some(b)) => match op.combine(b, &d) {
                    Some(m) => bracket = Some(m),
                    None => loose_brackets.push(c),
                },
                (None, _) => loose_brackets.push(c),
            },
            Quantity::Arith(_) => match lin_of(&c) {
                Some(l) => {
                    let h = l.homogeneous();
                    if let Some(existing) = ariths.iter_mut().find(|e| e.homogeneous() == h) {
                        let keep = match op {
                            Lat::Min => existing.constant.min(l.constant),
                            Lat::Max => existing.constant.max(l.constant),
                        };
                        existing.constant = keep;
                    } else {
                        ariths.push(l);
                    }
                }
                None => rest.push(c),
            },
            _ => rest.push(c),
        }
    }
    if let Some(d) = &bracket {
        match dnf_quantity(d) {
            Quantity::Const(v) if v == absorbing => return Quantity::Const(absorbing),
            Quantity::Const(_) => bracket = None,
            _ => {}
        }
    }
    let mut out: Vec<Quantity> = Vec::new();
    if let Some(d) = &bracket {
        out.push(dnf_quantity(d));
    }
    out.extend(loose_brackets);
    if let Some(k) = constant {
        if k != op.unit() {
            out.push(Quantity::Const(k));
        }
    }
    out.extend(ariths.iter().map(from_lin));
    out.extend(rest);

    let out = factor(op, out);
    let out = absorb(op, out, bracket.as_ref());

    let mut out = out;
    out.sort_by(canonical_cmp);
    out.dedup();
    match out.len() {
        0 => Quantity::Const(op.unit()),
        1 => out.pop().expect("one child"),
        _ => op.build(out),
    }
}

/// Distributivity: children of the dual shape that share everything except
/// their bracket are merged, e.g. `max(min([a], g), min([b], g))` becomes
/// `min([a || b], g)`.
fn factor(op: Lat, children: Vec<Quantity>) -> Vec<Quantity> {
    let dual = op.dual();
    // (remainder, guard) pairs; a child without a bracket has a trivial guard
    let mut groups: Vec<(Vec<Quantity>, Option<Dnf>, Quantity)> = Vec::new();
    let mut untouched = Vec::new();
    for c in children {
        let (guard, remainder) = match dual.children(&c) {
            Some(inner) => {
                let mut guard = None;
                let mut remainder = Vec::new();
                for q in inner {
                    match (&guard, dnf_of(q)) {
                        (None, Some(d)) => guard = Some(d),
                        _ => remainder.push(q.clone()),
                    }
                }
                (guard, remainder)
            }
            None if matches!(c, Quantity::Iverson(_) | Quantity::Const(_)) => {
                untouched.push(c);
                continue;
            }
            None => (None, vec![c.clone()]),
        };
        let Some(guard) = guard else {
            groups.push((remainder, None, c));
            continue;
        };
        groups.push((remainder, Some(guard), c));
    }
    let mut merged: Vec<(Vec<Quantity>, Option<Dnf>, Quantity, bool)> = Vec::new();
    for (rem, guard, orig) in groups {
        if let Some(slot) = merged.iter_mut().find(|(r, ..)| *r == rem) {
            // no guard means the dual-unit guard: it dominates any other
            let combined = match (&slot.1, &guard) {
                (None, _) | (_, None) => Some(None),
                (Some(a), Some(b)) => op.combine_dual_guard(a, b).map(Some),
            };
            if let Some(g) = combined {
                slot.1 = g;
                slot.3 = true;
                continue;
            }
        }
        merged.push((rem, guard, orig, false));
    }
    let mut out = untouched;
    for (rem, guard, orig, changed) in merged {
        if !changed {
            out.push(orig);
            continue;
        }
        let mut inner = rem;
        if let Some(g) = guard {
            inner.push(dnf_quantity(&g));
        }
        out.push(mk_lattice(dual, inner));
    }
    out
}

impl Lat {
    /// Guards of dual-shaped siblings combine with this operation's logic:
    /// `max(min([a], g), min([b], g)) = min([a || b], g)`.
    fn combine_dual_guard(self, a: &Dnf, b: &Dnf) -> Option<Dnf> {
        self.combine(a, b)
    }
}

/// Lattice absorption, plus bracket-guided pruning of dual-shaped children.
fn absorb(op: Lat, children: Vec<Quantity>, bracket: Option<&Dnf>) -> Vec<Quantity> {
    let dual = op.dual();
    let mut out = Vec::new();
    for (i, c) in children.iter().enumerate() {
        let Some(inner) = dual.children(c) else {
            out.push(c.clone());
            continue;
        };
        // min(a, max(a, b)) = a
        let absorbed = children
            .iter()
            .enumerate()
            .any(|(j, other)| j != i && inner.contains(other));
        if absorbed {
            continue;
        }
        let Some(phi) = bracket else {
            out.push(c.clone());
            continue;
        };
        let inner_bracket = inner.iter().find_map(dnf_of);
        match (op, inner_bracket) {
            // min([φ], max([ψ], h)) with φ ⇒ ψ is [φ]
            (Lat::Min, Some(psi)) if implies(phi, &psi) => continue,
            // max([φ], min([ψ], h)) with ψ ⇒ φ is [φ]
            (Lat::Max, Some(psi)) if implies(&psi, phi) => continue,
            // min([φ], max([ψ], h)) with φ ∧ ψ unsatisfiable drops [ψ]
            (Lat::Min, Some(psi)) if disjoint(phi, &psi) => {
                let pruned: Vec<Quantity> =
                    inner.iter().filter(|q| !matches!(q, Quantity::Iverson(_))).cloned().collect();
                out.push(mk_lattice(dual, pruned));
            }
            // max([φ], min([ψ], h)) with φ ∨ ψ valid drops [ψ]
            (Lat::Max, Some(psi)) if phi.not().zip(psi.not()).is_some_and(|(a, b)| disjoint(&a, &b)) => {
                let pruned: Vec<Quantity> =
                    inner.iter().filter(|q| !matches!(q, Quantity::Iverson(_))).cloned().collect();
                out.push(mk_lattice(dual, pruned));
            }
            _ => out.push(c.clone()),
        }
    }
    out
}

pub fn mk_add(a: Quantity, b: Quantity) -> Quantity {
    if let (Quantity::Const(x), Quantity::Const(y)) = (&a, &b) {
        if let Ok(v) = lattice::add(x, y) {
            return Quantity::Const(v);
        }
        return ordered_add(a, b);
    }
    for (x, y) in [(&a, &b), (&b, &a)] {
        if *x == Quantity::int(0) {
            return y.clone();
        }
        if is_finite_valued(y) {
            match x {
                Quantity::Const(c) if c.is_infinite() => return x.clone(),
                Quantity::Iverson(_) => return x.clone(),
                Quantity::Min(qs) => return mk_min(qs.iter().map(|q| mk_add(q.clone(), y.clone())).collect()),
                Quantity::Max(qs) => return mk_max(qs.iter().map(|q| mk_add(q.clone(), y.clone())).collect()),
                _ => {}
            }
        }
    }
    if let (Some(x), Some(y)) = (lin_of(&a), lin_of(&b)) {
        if let Some(s) = x.plus(&y) {
            return from_lin(&s);
        }
    }
    if let (Quantity::Const(ExtReal::Finite(r)), Quantity::Const(ExtReal::Finite(s))) = (&a, &b) {
        return Quantity::Const(ExtReal::Finite(r + s));
    }
    ordered_add(a, b)
}

fn ordered_add(a: Quantity, b: Quantity) -> Quantity {
    if canonical_cmp(&a, &b) == Ordering::Greater {
        Quantity::add(b, a)
    } else {
        Quantity::add(a, b)
    }
}

pub fn mk_scale(r: &BigRational, q: Quantity) -> Quantity {
    if r.is_negative() {
        return Quantity::scale(r.clone(), q);
    }
    if r.is_zero() {
        return Quantity::int(0);
    }
    if r.is_one() {
        return q;
    }
    match q {
        Quantity::Const(c) => Quantity::Const(lattice::scale(r, &c).expect("non-negative factor")),
        Quantity::Iverson(_) => q,
        Quantity::Arith(_) if r.is_integer() => {
            let k = i64::try_from(r.to_integer()).ok();
            match (k, lin_of(&q)) {
                (Some(k), Some(l)) => match l.scaled(k) {
                    Some(s) => from_lin(&s),
                    None => Quantity::scale(r.clone(), q),
                },
                _ => Quantity::scale(r.clone(), q),
            }
        }
        Quantity::Min(qs) => mk_min(qs.into_iter().map(|c| mk_scale(r, c)).collect()),
        Quantity::Max(qs) => mk_max(qs.into_iter().map(|c| mk_scale(r, c)).collect()),
        Quantity::Add(a, b) => mk_add(mk_scale(r, *a), mk_scale(r, *b)),
        Quantity::Scale(s, inner) => mk_scale(&(r * s), *inner),
        Quantity::Neg(inner) => mk_neg(mk_scale(r, *inner)),
        Quantity::Sup(v, body) => mk_sup(&v, mk_scale(r, *body)),
        Quantity::Inf(v, body) => mk_inf(&v, mk_scale(r, *body)),
        other => Quantity::scale(r.clone(), other),
    }
}

pub fn mk_neg(q: Quantity) -> Quantity {
    match q {
        Quantity::Const(c) => Quantity::Const(lattice::negate(&c)),
        Quantity::Arith(ref e) => match LinExpr::from_aexpr(e).and_then(|l| l.scaled(-1)) {
            Some(l) => from_lin(&l),
            None => Quantity::neg(q),
        },
        Quantity::Iverson(b) => mk_iverson(&BExpr::not(b)),
        Quantity::Min(qs) => mk_max(qs.into_iter().map(mk_neg).collect()),
        Quantity::Max(qs) => mk_min(qs.into_iter().map(mk_neg).collect()),
        Quantity::Add(a, b) => mk_add(mk_neg(*a), mk_neg(*b)),
        Quantity::Scale(r, inner) => mk_scale(&r, mk_neg(*inner)),
        Quantity::Neg(inner) => *inner,
        // Arguments are simplified, so an unresolved quantifier stays
        // unresolved under negation; going through mk_inf/mk_sup again would
        // re-simplify every nested quantifier at each level.
        Quantity::Sup(v, body) => Quantity::inf(v, mk_neg(*body)),
        Quantity::Inf(v, body) => Quantity::sup(v, mk_neg(*body)),
    }
}

/// Substitutes `v := e` and renormalizes.
fn subst_lin(q: &Quantity, v: &Var, e: &LinExpr) -> Quantity {
    simplify(&q.subst(v, &e.to_aexpr()))
}

pub fn mk_sup(v: &Var, body: Quantity) -> Quantity {
    if !body.mentions_free(v) {
        return body;
    }
    let unresolved = |body: Quantity| Quantity::sup(v.clone(), body);
    match body {
        Quantity::Max(qs) => mk_max(qs.into_iter().map(|c| mk_sup(v, c)).collect()),
        Quantity::Iverson(ref b) => match Dnf::from_bexpr(b).and_then(|d| d.exists(v)) {
            Some(d) => dnf_quantity(&d),
            None => unresolved(body),
        },
        Quantity::Arith(ref e) => match LinExpr::from_aexpr(e) {
            Some(l) if l.coeff(v) != 0 && !l.mentions_inside_mod(v) => Quantity::pos_inf(),
            _ => unresolved(body),
        },
        Quantity::Scale(ref r, ref inner) if r.is_positive() => match lin_of(inner) {
            Some(l) if l.coeff(v) != 0 && !l.mentions_inside_mod(v) => Quantity::pos_inf(),
            _ => unresolved(body),
        },
        Quantity::Add(ref a, ref b) => {
            if !a.mentions_free(v) && is_finite_valued(a) {
                mk_add((**a).clone(), mk_sup(v, (**b).clone()))
            } else if !b.mentions_free(v) && is_finite_valued(b) {
                mk_add(mk_sup(v, (**a).clone()), (**b).clone())
            } else {
                unresolved(body)
            }
        }
        Quantity::Sup(ref w, ref inner) => match mk_sup(v, (**inner).clone()) {
            Quantity::Sup(u, _) if u == *v => unresolved(body),
            eliminated => mk_sup(w, eliminated),
        },
        Quantity::Min(qs) => sup_of_min(v, qs),
        other => unresolved(other),
    }
}

fn sup_of_min(v: &Var, qs: Vec<Quantity>) -> Quantity {
    let (free, dependent): (Vec<_>, Vec<_>) = qs.iter().cloned().partition(|q| !q.mentions_free(v));
    if !free.is_empty() {
        let mut children = free;
        children.push(mk_sup(v, mk_min(dependent)));
        return mk_min(children);
    }
    let unresolved = || Quantity::sup(v.clone(), Quantity::Min(qs.clone()));
    let Some(bracket_pos) = qs.iter().position(|q| matches!(q, Quantity::Iverson(_))) else {
        return unresolved();
    };
    let Some(dnf) = dnf_of(&qs[bracket_pos]) else {
        return unresolved();
    };
    let others: Vec<Quantity> =
        qs.iter().enumerate().filter(|(i, _)| *i != bracket_pos).map(|(_, q)| q.clone()).collect();

    // Sup v. min([A || B], g) = max(Sup v. min([A], g), Sup v. min([B], g))
    if dnf.0.len() > 1 {
        if dnf.0.len() > SPLIT_CAP {
            return unresolved();
        }
        return mk_max(
            dnf.0
                .iter()
                .map(|conj| {
                    let mut children = others.clone();
                    children.push(dnf_quantity(&Dnf(vec![conj.clone()])));
                    mk_sup(v, mk_min(children))
                })
                .collect(),
        );
    }
    let conj = &dnf.0[0];

    // a unit-coefficient equation pins the binder
    if let Some(solution) = Dnf::solve_for(conj, v) {
        return subst_lin(&Quantity::Min(qs.clone()), v, &solution);
    }

    if others.len() == 1 {
        match &others[0] {
            // Sup v. min([C], max(a, b)) = max(Sup v. min([C], a), Sup v. min([C], b))
            Quantity::Max(alts) if alts.len() <= SPLIT_CAP => {
                return mk_max(
                    alts.iter()
                        .map(|a| mk_sup(v, mk_min(vec![qs[bracket_pos].clone(), a.clone()])))
                        .collect(),
                );
            }
            g => {
                if let Some(r) = bounded_objective(v, conj, g) {
                    return r;
                }
            }
        }
    }
    unresolved()
}

/// `Sup v. min([C], e)` for linear `e` with a unit coefficient on `v`, when
/// every atom of `C` mentioning `v` is a unit-coefficient interval: the
/// supremum is reached at the tightest bound on `v`.
fn bounded_objective(v: &Var, conj: &Conj, g: &Quantity) -> Option<Quantity> {
    let obj = lin_of(g)?;
    let c = obj.coeff(v);
    if !(c == 1 || c == -1) || obj.mentions_inside_mod(v) {
        return None;
    }
    let mut bounds = Vec::new();
    for (k, s) in conj {
        if !k.mentions(v) {
            continue;
        }
        let kc = k.coeff(v);
        if !(kc == 1 || kc == -1) || k.mentions_inside_mod(v) {
            return None;
        }
        let [(lo, hi)] = s.intervals() else { return None };
        let mut rest = k.clone();
        rest.terms.remove(&Term::Var(v.clone()));
        // kc*v + rest ∈ [lo, hi]; the objective grows with c*v, so the bound
        // that matters caps c*v from above
        let cap = if kc == c { hi } else { lo };
        if let Some(b) = cap {
            // c*v <= c*kc*(b - rest)... with kc == ±c this is (b - rest) or (rest - b)
            let cv_max = if kc == c {
                LinExpr::constant(*b).plus(&rest.scaled(-1)?)?
            } else {
                rest.plus(&LinExpr::constant(-*b))?
            };
            // objective = c*v + (obj - c*v)
            let mut others = obj.clone();
            others.terms.remove(&Term::Var(v.clone()));
            bounds.push(from_lin(&cv_max.plus(&others)?));
        }
    }
    let feasible = Dnf(vec![conj.clone()]).exists(v)?;
    let mut children = vec![dnf_quantity(&feasible)];
    if bounds.is_empty() {
        children.push(Quantity::pos_inf());
    }
    children.extend(bounds);
    Some(mk_min(children))
}

pub fn mk_inf(v: &Var, body: Quantity) -> Quantity {
    if !body.mentions_free(v) {
        return body;
    }
    match mk_sup(v, mk_neg(body)) {
        Quantity::Sup(u, inner) if u == *v => Quantity::inf(u, mk_neg(*inner)),
        other => mk_neg(other),
    }
}
