//! Linear normal forms.
//!
//! Integer expressions normalize to a [`LinExpr`]: integer coefficients over
//! variables and opaque remainder terms, plus a constant. Boolean conditions
//! normalize to a [`Dnf`] whose atoms constrain a primitive linear form to a
//! finite union of integer intervals. Both forms render back to canonical
//! `AExpr`/`BExpr` syntax, so structurally equal normal forms print equally.
//!
//! All arithmetic is checked; an overflow makes the conversion return `None`
//! and callers keep the expression as written.

use std::collections::{BTreeMap, BTreeSet};

use num_integer::Integer;

use crate::syntax::{AExpr, BExpr, CmpOp, Var};

/// Upper bound on conjuncts produced while negating or distributing.
const DNF_CAP: usize = 96;

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Term {
    Var(Var),
    /// `inner % k` with `inner` reduced modulo `k`.
    Mod(Box<LinExpr>, i64),
}

#[derive(Debug, Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct LinExpr {
    /// Nonzero coefficients only.
    pub terms: BTreeMap<Term, i64>,
    pub constant: i64,
}

impl LinExpr {
    pub fn constant(c: i64) -> Self {
        LinExpr { terms: BTreeMap::new(), constant: c }
    }

    pub fn var(v: &Var) -> Self {
        let mut terms = BTreeMap::new();
        terms.insert(Term::Var(v.clone()), 1);
        LinExpr { terms, constant: 0 }
    }

    pub fn from_aexpr(e: &AExpr) -> Option<Self> {
        match e {
            AExpr::Lit(n) => Some(LinExpr::constant(*n)),
            AExpr::Var(v) => Some(LinExpr::var(v)),
            AExpr::Add(a, b) => LinExpr::from_aexpr(a)?.plus(&LinExpr::from_aexpr(b)?),
            AExpr::Sub(a, b) => LinExpr::from_aexpr(a)?.plus(&LinExpr::from_aexpr(b)?.scaled(-1)?),
            AExpr::Mul(k, a) => LinExpr::from_aexpr(a)?.scaled(*k),
            AExpr::Mod(a, k) => {
                if *k <= 0 {
                    return None;
                }
                LinExpr::from_aexpr(a)?.modulo(*k)
            }
        }
    }

    pub fn as_const(&self) -> Option<i64> {
        self.terms.is_empty().then_some(self.constant)
    }

    pub fn plus(&self, other: &LinExpr) -> Option<Self> {
        let mut out = self.clone();
        for (t, c) in &other.terms {
            let entry = out.terms.entry(t.clone()).or_insert(0);
            *entry = entry.checked_add(*c)?;
            if *entry == 0 {
                out.terms.remove(t);
            }
        }
        out.constant = out.constant.checked_add(other.constant)?;
        Some(out)
    }

    pub fn scaled(&self, k: i64) -> Option<Self> {
        if k == 0 {
            return Some(LinExpr::constant(0));
        }
        let mut terms = BTreeMap::new();
        for (t, c) in &self.terms {
            terms.insert(t.clone(), c.checked_mul(k)?);
        }
        Some(LinExpr { terms, constant: self.constant.checked_mul(k)? })
    }

    /// Euclidean remainder by `k > 0`, folded when the operand is constant.
    pub fn modulo(&self, k: i64) -> Option<Self> {
        if k == 1 {
            return Some(LinExpr::constant(0));
        }
        let mut inner = LinExpr::constant(self.constant.rem_euclid(k));
        for (t, c) in &self.terms {
            let r = c.rem_euclid(k);
            if r != 0 {
                inner.terms.insert(t.clone(), r);
            }
        }
        if inner.terms.is_empty() {
            return Some(inner);
        }
        let mut terms = BTreeMap::new();
        terms.insert(Term::Mod(Box::new(inner), k), 1);
        Some(LinExpr { terms, constant: 0 })
    }

    /// The same form without its constant.
    pub fn homogeneous(&self) -> LinExpr {
        LinExpr { terms: self.terms.clone(), constant: 0 }
    }

    /// Top-level coefficient of `v` (zero when absent or only inside remainders).
    pub fn coeff(&self, v: &Var) -> i64 {
        self.terms.get(&Term::Var(v.clone())).copied().unwrap_or(0)
    }

    pub fn mentions(&self, v: &Var) -> bool {
        self.terms.keys().any(|t| match t {
            Term::Var(w) => w == v,
            Term::Mod(inner, _) => inner.mentions(v),
        })
    }

    pub fn mentions_inside_mod(&self, v: &Var) -> bool {
        self.terms.keys().any(|t| matches!(t, Term::Mod(inner, _) if inner.mentions(v)))
    }

    pub fn vars_into(&self, out: &mut BTreeSet<Var>) {
        for t in self.terms.keys() {
            match t {
                Term::Var(v) => {
                    out.insert(v.clone());
                }
                Term::Mod(inner, _) => inner.vars_into(out),
            }
        }
    }

    /// Replaces `v` by `e` everywhere, renormalizing remainder terms.
    pub fn subst(&self, v: &Var, e: &LinExpr) -> Option<LinExpr> {
        let mut out = LinExpr::constant(self.constant);
        for (t, c) in &self.terms {
            let piece = match t {
                Term::Var(w) if w == v => e.clone(),
                Term::Var(w) => LinExpr::var(w),
                Term::Mod(inner, k) => inner.subst(v, e)?.modulo(*k)?,
            };
            out = out.plus(&piece.scaled(*c)?)?;
        }
        Some(out)
    }

    fn gcd_of_coeffs(&self) -> i64 {
        self.terms.values().fold(0i64, |g, c| g.gcd(c))
    }

    fn leading_coeff(&self) -> i64 {
        self.terms.values().next_back().copied().unwrap_or(0)
    }

    /// Canonical rendering: positive terms first, then negative terms, then
    /// the constant.
    pub fn to_aexpr(&self) -> AExpr {
        let positive: Vec<(&Term, i64)> =
            self.terms.iter().filter(|(_, c)| **c > 0).map(|(t, c)| (t, *c)).collect();
        let negative: Vec<(&Term, i64)> =
            self.terms.iter().filter(|(_, c)| **c < 0).map(|(t, c)| (t, *c)).collect();
        let mut constant = self.constant;
        let mut acc: Option<AExpr> = None;
        let mut neg_iter = negative.into_iter().peekable();
        if positive.is_empty() {
            if constant != 0 {
                acc = Some(AExpr::Lit(constant));
                constant = 0;
            } else if let Some((t, c)) = neg_iter.next() {
                acc = Some(AExpr::mul(c, term_aexpr(t)));
            } else {
                return AExpr::Lit(0);
            }
        }
        for (t, c) in positive {
            let piece = scaled_term(t, c);
            acc = Some(match acc {
                None => piece,
                Some(a) => AExpr::add(a, piece),
            });
        }
        let mut acc = acc.expect("nonempty linear form");
        for (t, c) in neg_iter {
            acc = AExpr::sub(acc, scaled_term(t, -c));
        }
        if constant > 0 {
            acc = AExpr::add(acc, AExpr::Lit(constant));
        } else if constant < 0 {
            acc = match constant.checked_neg() {
                Some(m) => AExpr::sub(acc, AExpr::Lit(m)),
                None => AExpr::add(acc, AExpr::Lit(constant)),
            };
        }
        acc
    }
}

fn term_aexpr(t: &Term) -> AExpr {
    match t {
        Term::Var(v) => AExpr::Var(v.clone()),
        Term::Mod(inner, k) => AExpr::modulo(inner.to_aexpr(), *k),
    }
}

fn scaled_term(t: &Term, c: i64) -> AExpr {
    if c == 1 {
        term_aexpr(t)
    } else {
        AExpr::mul(c, term_aexpr(t))
    }
}

/// Canonical form of an integer expression, or the expression itself when
/// normalization overflows.
pub fn normalize_aexpr(e: &AExpr) -> AExpr {
    LinExpr::from_aexpr(e).map(|l| l.to_aexpr()).unwrap_or_else(|| e.clone())
}

// ---------------------------------------------------------------------------
// Integer sets

/// A finite union of integer intervals; `None` bounds are infinite. Intervals
/// are sorted, disjoint and non-adjacent.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct IntSet(Vec<(Option<i64>, Option<i64>)>);

impl IntSet {
    pub fn full() -> Self {
        IntSet(vec![(None, None)])
    }

    pub fn empty() -> Self {
        IntSet(Vec::new())
    }

    pub fn point(c: i64) -> Self {
        IntSet(vec![(Some(c), Some(c))])
    }

    pub fn range(lo: Option<i64>, hi: Option<i64>) -> Self {
        IntSet::normalized(vec![(lo, hi)])
    }

    /// `{v | v op c}`.
    pub fn from_cmp(op: CmpOp, c: i64) -> Self {
        match op {
            CmpOp::Eq => IntSet::point(c),
            CmpOp::Ne => IntSet::point(c).complement(),
            CmpOp::Le => IntSet::range(None, Some(c)),
            CmpOp::Lt => match c.checked_sub(1) {
                Some(u) => IntSet::range(None, Some(u)),
                None => IntSet::empty(),
            },
            CmpOp::Ge => IntSet::range(Some(c), None),
            CmpOp::Gt => match c.checked_add(1) {
                Some(l) => IntSet::range(Some(l), None),
                None => IntSet::empty(),
            },
        }
    }

    pub fn intervals(&self) -> &[(Option<i64>, Option<i64>)] {
        &self.0
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn is_full(&self) -> bool {
        self.0 == [(None, None)]
    }

    pub fn as_point(&self) -> Option<i64> {
        match self.0.as_slice() {
            [(Some(l), Some(u))] if l == u => Some(*l),
            _ => None,
        }
    }

    pub fn contains(&self, v: i64) -> bool {
        self.0
            .iter()
            .any(|(l, u)| l.is_none_or(|l| l <= v) && u.is_none_or(|u| v <= u))
    }

    fn normalized(mut ivs: Vec<(Option<i64>, Option<i64>)>) -> Self {
        ivs.retain(|(l, u)| match (l, u) {
            (Some(l), Some(u)) => l <= u,
            _ => true,
        });
        // None lower bound sorts first, as required.
        ivs.sort();
        let mut out: Vec<(Option<i64>, Option<i64>)> = Vec::new();
        for (l, u) in ivs {
            if let Some(last) = out.last_mut() {
                let touches = match (last.1, l) {
                    (None, _) | (_, None) => true,
                    (Some(pu), Some(l)) => l <= pu.saturating_add(1),
                };
                if touches {
                    last.1 = match (last.1, u) {
                        (None, _) | (_, None) => None,
                        (Some(a), Some(b)) => Some(a.max(b)),
                    };
                    continue;
                }
            }
            out.push((l, u));
        }
        IntSet(out)
    }

    pub fn union(&self, other: &IntSet) -> IntSet {
        IntSet::normalized(self.0.iter().chain(other.0.iter()).copied().collect())
    }

    pub fn complement(&self) -> IntSet {
        let mut out = Vec::new();
        let mut cursor: Option<Option<i64>> = Some(None);
        for (l, u) in &self.0 {
            if let Some(start) = cursor {
                if let Some(l) = l {
                    if let Some(end) = l.checked_sub(1) {
                        out.push((start, Some(end)));
                    }
                }
            }
            cursor = u.map(|u| u.checked_add(1));
            // an infinite upper bound ends the sweep
            if u.is_none() {
                cursor = None;
            }
        }
        if let Some(start) = cursor {
            out.push((start, None));
        }
        IntSet::normalized(out)
    }

    pub fn intersect(&self, other: &IntSet) -> IntSet {
        self.complement().union(&other.complement()).complement()
    }

    pub fn is_subset(&self, other: &IntSet) -> bool {
        &self.intersect(other) == self
    }

    /// `{-v | v in self}`.
    pub fn reflect(&self) -> Option<IntSet> {
        let mut out = Vec::new();
        for (l, u) in &self.0 {
            let nl = match u {
                Some(u) => Some(u.checked_neg()?),
                None => None,
            };
            let nu = match l {
                Some(l) => Some(l.checked_neg()?),
                None => None,
            };
            out.push((nl, nu));
        }
        Some(IntSet::normalized(out))
    }

    /// `{v | g*v in self}` for `g > 0`.
    pub fn divide(&self, g: i64) -> IntSet {
        IntSet::normalized(
            self.0
                .iter()
                .map(|(l, u)| (l.map(|l| Integer::div_ceil(&l, &g)), u.map(|u| Integer::div_floor(&u, &g))))
                .collect(),
        )
    }

    /// `{v - c | v in self}`.
    pub fn shift_down(&self, c: i64) -> Option<IntSet> {
        let mut out = Vec::new();
        for (l, u) in &self.0 {
            let nl = match l {
                Some(l) => Some(l.checked_sub(c)?),
                None => None,
            };
            let nu = match u {
                Some(u) => Some(u.checked_sub(c)?),
                None => None,
            };
            out.push((nl, nu));
        }
        Some(IntSet::normalized(out))
    }
}

// ---------------------------------------------------------------------------
// Disjunctive normal form

/// A conjunction of atoms `key ∈ set`. Keys are primitive homogeneous linear
/// forms whose last coefficient is positive.
pub type Conj = BTreeMap<LinExpr, IntSet>;

/// A disjunction of conjunctions. `[]` is false; `[{}]` is true.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Dnf(pub Vec<Conj>);

enum Atom {
    Const(bool),
    Constraint(LinExpr, IntSet),
}

/// Normalizes `lin ∈ set`, where `lin` may carry a constant.
fn atom(lin: &LinExpr, set: IntSet) -> Option<Atom> {
    let mut set = set.shift_down(lin.constant)?;
    let mut key = lin.homogeneous();
    if key.terms.is_empty() {
        return Some(Atom::Const(set.contains(0)));
    }
    let g = key.gcd_of_coeffs();
    if g > 1 {
        key.terms.values_mut().for_each(|c| *c /= g);
        set = set.divide(g);
    }
    if key.leading_coeff() < 0 {
        key = key.scaled(-1)?;
        set = set.reflect()?;
    }
    if key.terms.len() == 1 {
        if let Some((Term::Mod(_, k), 1)) = key.terms.iter().next() {
            let range = IntSet::range(Some(0), Some(k - 1));
            set = set.intersect(&range);
            if set == range {
                return Some(Atom::Const(true));
            }
        }
    }
    if set.is_empty() {
        Some(Atom::Const(false))
    } else if set.is_full() {
        Some(Atom::Const(true))
    } else {
        Some(Atom::Constraint(key, set))
    }
}

/// `key ∈ set` holds everywhere.
fn is_vacuous(key: &LinExpr, set: &IntSet) -> bool {
    if set.is_full() {
        return true;
    }
    match key.terms.iter().next() {
        Some((Term::Mod(_, k), 1)) if key.terms.len() == 1 => {
            IntSet::range(Some(0), Some(k - 1)).is_subset(set)
        }
        _ => false,
    }
}

fn conj_insert(conj: &mut Conj, key: LinExpr, set: IntSet) -> bool {
    let merged = match conj.get(&key) {
        Some(old) => old.intersect(&set),
        None => set,
    };
    if merged.is_empty() {
        return false;
    }
    conj.insert(key, merged);
    true
}

fn conj_and(a: &Conj, b: &Conj) -> Option<Conj> {
    let mut out = a.clone();
    for (k, s) in b {
        if !conj_insert(&mut out, k.clone(), s.clone()) {
            return None;
        }
    }
    Some(out)
}

/// Substitutes variables pinned to a point into the other atoms. `None` if
/// the conjunction turns out unsatisfiable.
fn propagate_points(conj: Conj) -> Option<Conj> {
    let mut conj = conj;
    let mut done: BTreeSet<Var> = BTreeSet::new();
    loop {
        let pinned = conj.iter().find_map(|(k, s)| {
            let (Some((Term::Var(v), 1)), 1) = (k.terms.iter().next(), k.terms.len()) else { return None };
            let p = s.as_point()?;
            (!done.contains(v) && conj.keys().any(|k2| k2 != k && k2.mentions(v))).then(|| (v.clone(), p))
        });
        let Some((v, p)) = pinned else { return Some(conj) };
        done.insert(v.clone());
        let pin = LinExpr::var(&v);
        let mut out = Conj::new();
        for (k, s) in conj {
            let sub = if k != pin && k.mentions(&v) { k.subst(&v, &LinExpr::constant(p)).and_then(|l| atom(&l, s.clone())) } else { None };
            let ok = match sub {
                Some(Atom::Const(true)) => true,
                Some(Atom::Const(false)) => false,
                Some(Atom::Constraint(k2, s2)) => conj_insert(&mut out, k2, s2),
                None => conj_insert(&mut out, k, s),
            };
            if !ok {
                return None;
            }
        }
        conj = out;
    }
}

/// `a` implies `b`.
fn conj_implies(a: &Conj, b: &Conj) -> bool {
    b.iter().all(|(k, s)| a.get(k).is_some_and(|t| t.is_subset(s)))
}

impl Dnf {
    pub fn truth() -> Self {
        Dnf(vec![Conj::new()])
    }

    pub fn falsity() -> Self {
        Dnf(Vec::new())
    }

    pub fn is_true(&self) -> bool {
        self.0.iter().any(|c| c.is_empty())
    }

    pub fn is_false(&self) -> bool {
        self.0.is_empty()
    }

    fn from_atom(a: Atom) -> Self {
        match a {
            Atom::Const(true) => Dnf::truth(),
            Atom::Const(false) => Dnf::falsity(),
            Atom::Constraint(k, s) => Dnf(vec![[(k, s)].into_iter().collect()]),
        }
    }

    pub fn from_bexpr(b: &BExpr) -> Option<Self> {
        let d = match b {
            BExpr::True => Dnf::truth(),
            BExpr::False => Dnf::falsity(),
            BExpr::Cmp(l, op, r) => {
                let lin = LinExpr::from_aexpr(l)?.plus(&LinExpr::from_aexpr(r)?.scaled(-1)?)?;
                Dnf::from_atom(atom(&lin, IntSet::from_cmp(*op, 0))?)
            }
            BExpr::And(a, c) => Dnf::from_bexpr(a)?.and(&Dnf::from_bexpr(c)?)?,
            BExpr::Or(a, c) => Dnf::from_bexpr(a)?.or(&Dnf::from_bexpr(c)?),
            BExpr::Not(a) => Dnf::from_bexpr(a)?.not()?,
        };
        Some(d)
    }

    pub fn or(&self, other: &Dnf) -> Dnf {
        let mut out = self.0.clone();
        out.extend(other.0.iter().cloned());
        Dnf(out).simplified()
    }

    pub fn and(&self, other: &Dnf) -> Option<Dnf> {
        let mut out = Vec::new();
        for a in &self.0 {
            for b in &other.0 {
                if let Some(c) = conj_and(a, b) {
                    out.push(c);
                }
            }
            if out.len() > DNF_CAP * 4 {
                return None;
            }
        }
        let d = Dnf(out).simplified();
        (d.0.len() <= DNF_CAP).then_some(d)
    }

    pub fn not(&self) -> Option<Dnf> {
        let mut acc = Dnf::truth();
        for conj in &self.0 {
            let mut negated = Dnf::falsity();
            for (k, s) in conj {
                negated = negated.or(&Dnf::from_atom(atom(k, s.complement())?));
            }
            acc = acc.and(&negated)?;
        }
        Some(acc)
    }

    /// Absorption, widening and merging until nothing changes.
    pub fn simplified(self) -> Dnf {
        let mut cs: Vec<Conj> = self.0.into_iter().filter_map(propagate_points).collect();
        if cs.iter().any(|c| c.is_empty()) {
            return Dnf::truth();
        }
        for _ in 0..64 {
            cs.sort();
            cs.dedup();
            let mut changed = false;
            // drop conjuncts implied by another one
            let mut i = 0;
            while i < cs.len() {
                let implied = (0..cs.len()).any(|j| j != i && conj_implies(&cs[i], &cs[j]));
                if implied {
                    cs.remove(i);
                    changed = true;
                } else {
                    i += 1;
                }
            }
            // widen: if cs[i] restricted to key k ∈ T implies cs[j] (whose own
            // constraint on k is T), cs[i] may admit T on k as well
            'outer: for i in 0..cs.len() {
                for j in 0..cs.len() {
                    if i == j {
                        continue;
                    }
                    for (k, t) in &cs[j] {
                        let Some(s) = cs[i].get(k) else { continue };
                        if t.is_subset(s) {
                            continue;
                        }
                        let others_implied = cs[j]
                            .iter()
                            .filter(|(k2, _)| *k2 != k)
                            .all(|(k2, t2)| cs[i].get(k2).is_some_and(|s2| s2.is_subset(t2)));
                        if others_implied {
                            let widened = s.union(t);
                            let k = k.clone();
                            if is_vacuous(&k, &widened) {
                                cs[i].remove(&k);
                            } else {
                                cs[i].insert(k, widened);
                            }
                            changed = true;
                            break 'outer;
                        }
                    }
                }
            }
            if cs.iter().any(|c| c.is_empty()) {
                return Dnf::truth();
            }
            if !changed {
                break;
            }
        }
        cs.sort();
        cs.dedup();
        Dnf(cs)
    }

    pub fn mentions(&self, v: &Var) -> bool {
        self.0.iter().any(|c| c.keys().any(|k| k.mentions(v)))
    }

    /// Substitutes `v := e` and renormalizes.
    pub fn subst(&self, v: &Var, e: &LinExpr) -> Option<Dnf> {
        let mut out = Dnf::falsity();
        for conj in &self.0 {
            let mut acc = Dnf::truth();
            for (k, s) in conj {
                let a = if k.mentions(v) {
                    Dnf::from_atom(atom(&k.subst(v, e)?, s.clone())?)
                } else {
                    Dnf(vec![[(k.clone(), s.clone())].into_iter().collect()])
                };
                acc = acc.and(&a)?;
            }
            out = out.or(&acc);
        }
        Some(out)
    }

    /// If a conjunct pins `v` by a unit-coefficient equation, the solution.
    pub fn solve_for(conj: &Conj, v: &Var) -> Option<LinExpr> {
        for (k, s) in conj {
            let c = k.coeff(v);
            if (c == 1 || c == -1) && !k.mentions_inside_mod(v) {
                if let Some(p) = s.as_point() {
                    // c*v + rest = p  =>  v = c*(p - rest)
                    let mut rest = k.clone();
                    rest.terms.remove(&Term::Var(v.clone()));
                    return LinExpr::constant(p).plus(&rest.scaled(-1)?)?.scaled(c);
                }
            }
        }
        None
    }

    /// Eliminates `∃v`, exactly, when every conjunct is in a supported shape.
    pub fn exists(&self, v: &Var) -> Option<Dnf> {
        let mut out = Dnf::falsity();
        for conj in &self.0 {
            out = out.or(&exists_conj(conj, v)?);
        }
        Some(out)
    }

    pub fn to_bexpr(&self) -> BExpr {
        let mut disjuncts = self.0.iter().map(conj_to_bexpr);
        match disjuncts.next() {
            None => BExpr::False,
            Some(first) => disjuncts.fold(first, BExpr::or),
        }
    }
}

fn exists_conj(conj: &Conj, v: &Var) -> Option<Dnf> {
    let (with_v, without_v): (Vec<_>, Vec<_>) = conj.iter().partition(|(k, _)| k.mentions(v));
    if with_v.is_empty() {
        return Some(Dnf(vec![conj.clone()]));
    }
    if let Some(solution) = Dnf::solve_for(conj, v) {
        return Dnf(vec![conj.clone()]).subst(v, &solution);
    }
    let base: Conj = without_v.into_iter().map(|(k, s)| (k.clone(), s.clone())).collect();
    // A single unit-coefficient atom can always be satisfied by choosing v.
    if let [(k, _)] = with_v.as_slice() {
        let c = k.coeff(v);
        if (c == 1 || c == -1) && !k.mentions_inside_mod(v) {
            return Some(Dnf(vec![base]));
        }
    }
    // Unit coefficients only, outside remainders, single-interval sets:
    // pairwise Fourier-Motzkin is exact over the integers.
    let mut lowers = Vec::new();
    let mut uppers = Vec::new();
    for (k, s) in &with_v {
        let c = k.coeff(v);
        if !(c == 1 || c == -1) || k.mentions_inside_mod(v) {
            return None;
        }
        let [(lo, hi)] = s.intervals() else { return None };
        // c*v + rest ∈ [lo, hi]  =>  v bounds in terms of rest
        let mut rest = (*k).clone();
        rest.terms.remove(&Term::Var(v.clone()));
        for (bound, is_lower) in [(lo, true), (hi, false)] {
            let Some(b) = bound else { continue };
            // c = 1: lo - rest <= v <= hi - rest;  c = -1: rest - hi <= v <= rest - lo
            let expr = LinExpr::constant(*b).plus(&rest.scaled(-1)?)?.scaled(c)?;
            if (c == 1) == is_lower {
                lowers.push(expr);
            } else {
                uppers.push(expr);
            }
        }
    }
    let mut acc = Dnf(vec![base]);
    for l in &lowers {
        for u in &uppers {
            // l <= u  <=>  u - l ∈ [0, ∞)
            let diff = u.plus(&l.scaled(-1)?)?;
            acc = acc.and(&Dnf::from_atom(atom(&diff, IntSet::range(Some(0), None))?))?;
        }
    }
    Some(acc)
}

fn conj_to_bexpr(conj: &Conj) -> BExpr {
    let mut atoms = conj.iter().map(|(k, s)| atom_to_bexpr(k, s));
    match atoms.next() {
        None => BExpr::True,
        Some(first) => atoms.fold(first, BExpr::and),
    }
}

/// Renders `key ∈ set` with positive terms on the left.
pub fn atom_to_bexpr(key: &LinExpr, set: &IntSet) -> BExpr {
    let complement = set.complement();
    if let Some(p) = complement.as_point() {
        return cmp_atom(key, CmpOp::Ne, p);
    }
    let mut parts = set.intervals().iter().map(|(l, u)| match (l, u) {
        (Some(l), Some(u)) if l == u => cmp_atom(key, CmpOp::Eq, *l),
        (Some(l), Some(u)) => BExpr::and(cmp_atom(key, CmpOp::Ge, *l), cmp_atom(key, CmpOp::Le, *u)),
        (Some(l), None) => cmp_atom(key, CmpOp::Ge, *l),
        (None, Some(u)) => cmp_atom(key, CmpOp::Le, *u),
        (None, None) => BExpr::True,
    });
    let first = parts.next().unwrap_or(BExpr::False);
    parts.fold(first, BExpr::or)
}

fn cmp_atom(key: &LinExpr, op: CmpOp, bound: i64) -> BExpr {
    let pos = LinExpr {
        terms: key.terms.iter().filter(|(_, c)| **c > 0).map(|(t, c)| (t.clone(), *c)).collect(),
        constant: 0,
    };
    let neg = LinExpr {
        terms: key.terms.iter().filter(|(_, c)| **c < 0).map(|(t, c)| (t.clone(), -*c)).collect(),
        constant: 0,
    };
    let has_rhs_terms = !neg.terms.is_empty();
    let (op, bound) = match op {
        CmpOp::Ge if has_rhs_terms && bound == 1 => (CmpOp::Gt, 0),
        CmpOp::Le if has_rhs_terms && bound == -1 => (CmpOp::Lt, 0),
        _ => (op, bound),
    };
    let rhs = LinExpr { terms: neg.terms, constant: bound };
    BExpr::cmp(pos.to_aexpr(), op, rhs.to_aexpr())
}

/// Canonical form of a condition; `None` when normalization gives up.
pub fn normalize_bexpr(b: &BExpr) -> Option<BExpr> {
    Dnf::from_bexpr(b).map(|d| d.to_bexpr())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::{var, State};
    use proptest::prelude::*;

    fn x() -> AExpr {
        AExpr::var("x")
    }

    fn lit(n: i64) -> AExpr {
        AExpr::Lit(n)
    }

    #[test]
    fn linear_rendering() {
        let e = AExpr::mul(2, AExpr::add(x(), lit(1)));
        assert_eq!(normalize_aexpr(&e).to_string(), "2*x + 2");
        let e = AExpr::sub(AExpr::add(AExpr::var("hi"), lit(5)), lit(10));
        assert_eq!(normalize_aexpr(&e).to_string(), "hi - 5");
        let e = AExpr::sub(AExpr::var("lo"), AExpr::var("hi"));
        assert_eq!(normalize_aexpr(&e).to_string(), "lo - hi");
        let e = AExpr::sub(lit(3), x());
        assert_eq!(normalize_aexpr(&e).to_string(), "3 - x");
        let e = AExpr::sub(lit(0), x());
        assert_eq!(normalize_aexpr(&e).to_string(), "-1*x");
        let e = AExpr::modulo(AExpr::add(x(), lit(9)), 4);
        assert_eq!(normalize_aexpr(&e).to_string(), "(x + 1) % 4");
        assert_eq!(normalize_aexpr(&AExpr::modulo(lit(-1), 4)).to_string(), "3");
    }

    #[test]
    fn int_sets() {
        let s = IntSet::range(Some(0), Some(3)).union(&IntSet::range(Some(4), Some(9)));
        assert_eq!(s, IntSet::range(Some(0), Some(9)));
        assert_eq!(IntSet::point(3).complement().complement(), IntSet::point(3));
        assert_eq!(IntSet::full().complement(), IntSet::empty());
        assert_eq!(IntSet::range(Some(1), None).divide(2), IntSet::range(Some(1), None));
        assert_eq!(IntSet::range(None, Some(-1)).divide(2), IntSet::range(None, Some(-1)));
        assert_eq!(IntSet::range(Some(3), Some(3)).divide(2), IntSet::empty());
        assert!(IntSet::point(2).is_subset(&IntSet::range(Some(0), None)));
    }

    #[test]
    fn atoms_render_canonically() {
        let lo_ge_hi = BExpr::cmp(AExpr::var("hi"), CmpOp::Le, AExpr::var("lo"));
        assert_eq!(normalize_bexpr(&lo_ge_hi).unwrap().to_string(), "lo >= hi");
        let lo_lt_hi = BExpr::not(lo_ge_hi);
        assert_eq!(normalize_bexpr(&lo_lt_hi).unwrap().to_string(), "lo < hi");
        let b = BExpr::cmp(x(), CmpOp::Gt, lit(7));
        assert_eq!(normalize_bexpr(&b).unwrap().to_string(), "x >= 8");
        let b = BExpr::cmp(AExpr::mul(2, x()), CmpOp::Eq, lit(3));
        assert_eq!(normalize_bexpr(&b).unwrap().to_string(), "false");
        let b = BExpr::cmp(AExpr::modulo(x(), 4), CmpOp::Ge, lit(0));
        assert_eq!(normalize_bexpr(&b).unwrap(), BExpr::True);
        let b = BExpr::cmp(x(), CmpOp::Ne, lit(10));
        assert_eq!(normalize_bexpr(&b).unwrap().to_string(), "x != 10");
    }

    #[test]
    fn dnf_merges_and_absorbs() {
        let le5 = BExpr::cmp(x(), CmpOp::Le, lit(5));
        let ge6 = BExpr::cmp(x(), CmpOp::Ge, lit(6));
        let y0 = BExpr::cmp(AExpr::var("y"), CmpOp::Ge, lit(0));
        let b = BExpr::or(BExpr::and(le5.clone(), y0.clone()), BExpr::and(ge6.clone(), y0.clone()));
        assert_eq!(normalize_bexpr(&b).unwrap().to_string(), "y >= 0");
        let b = BExpr::or(BExpr::and(le5, y0), ge6);
        assert_eq!(normalize_bexpr(&b).unwrap().to_string(), "x >= 6 || y >= 0");
    }

    #[test]
    fn existential_elimination() {
        let a = Var::binder(0);
        // ∃a. x = a + 1 ∧ a >= 3  ==  x >= 4
        let b = BExpr::and(
            BExpr::cmp(x(), CmpOp::Eq, AExpr::add(AExpr::Var(a.clone()), lit(1))),
            BExpr::cmp(AExpr::Var(a.clone()), CmpOp::Ge, lit(3)),
        );
        let d = Dnf::from_bexpr(&b).unwrap().exists(&a).unwrap();
        assert_eq!(d.to_bexpr().to_string(), "x >= 4");
        // ∃a. a >= x ∧ a <= y  ==  y >= x
        let b = BExpr::and(
            BExpr::cmp(AExpr::Var(a.clone()), CmpOp::Ge, x()),
            BExpr::cmp(AExpr::Var(a.clone()), CmpOp::Le, AExpr::var("y")),
        );
        let d = Dnf::from_bexpr(&b).unwrap().exists(&a).unwrap();
        assert_eq!(d.to_bexpr().to_string(), "y >= x");
    }

    fn small_aexpr() -> impl Strategy<Value = AExpr> {
        let leaf = prop_oneof![
            (-4i64..5).prop_map(AExpr::Lit),
            Just(AExpr::var("x")),
            Just(AExpr::var("y")),
        ];
        leaf.prop_recursive(3, 12, 2, |inner| {
            prop_oneof![
                (inner.clone(), inner.clone()).prop_map(|(a, b)| AExpr::add(a, b)),
                (inner.clone(), inner.clone()).prop_map(|(a, b)| AExpr::sub(a, b)),
                (-3i64..4, inner.clone()).prop_map(|(k, a)| AExpr::mul(k, a)),
                (inner, 2i64..5).prop_map(|(a, k)| AExpr::modulo(a, k)),
            ]
        })
    }

    fn small_bexpr() -> impl Strategy<Value = BExpr> {
        let op = prop_oneof![
            Just(CmpOp::Lt),
            Just(CmpOp::Le),
            Just(CmpOp::Eq),
            Just(CmpOp::Ne),
            Just(CmpOp::Ge),
            Just(CmpOp::Gt)
        ];
        let leaf = (small_aexpr(), op, small_aexpr()).prop_map(|(a, o, b)| BExpr::cmp(a, o, b));
        leaf.prop_recursive(3, 10, 2, |inner| {
            prop_oneof![
                (inner.clone(), inner.clone()).prop_map(|(a, b)| BExpr::and(a, b)),
                (inner.clone(), inner.clone()).prop_map(|(a, b)| BExpr::or(a, b)),
                inner.prop_map(BExpr::not),
            ]
        })
    }

    fn states() -> Vec<State> {
        let mut out = Vec::new();
        for x in -6..=6 {
            for y in -6..=6 {
                out.push(State::from_pairs([("x", x), ("y", y)]));
            }
        }
        out
    }

    proptest! {
        #[test]
        fn aexpr_normalization_preserves_value(e in small_aexpr()) {
            let n = normalize_aexpr(&e);
            for s in states() {
                prop_assert_eq!(e.eval(&s).unwrap(), n.eval(&s).unwrap());
            }
            prop_assert_eq!(normalize_aexpr(&n), n);
        }

        #[test]
        fn bexpr_normalization_preserves_truth(b in small_bexpr()) {
            if let Some(n) = normalize_bexpr(&b) {
                for s in states() {
                    prop_assert_eq!(b.eval(&s).unwrap(), n.eval(&s).unwrap(), "{} vs {} at {}", b, n, s);
                }
                prop_assert_eq!(normalize_bexpr(&n).unwrap(), n);
            }
        }

        #[test]
        fn exists_is_exact(b in small_bexpr()) {
            // treat y as the bound variable; the window covers every witness
            // the generator can need
            let y = var("y");
            if let Some(d) = Dnf::from_bexpr(&b).and_then(|d| d.exists(&y)) {
                let e = d.to_bexpr();
                prop_assert!(!e.mentions(&y));
                for xv in -6..=6 {
                    let expected = (-400..=400).any(|yv| {
                        b.eval(&State::from_pairs([("x", xv), ("y", yv)])).unwrap()
                    });
                    let got = e.eval(&State::from_pairs([("x", xv)])).unwrap();
                    prop_assert_eq!(expected, got, "{} -> {} at x={}", b, e, xv);
                }
            }
        }
    }
}
