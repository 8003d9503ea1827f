//! Reference collecting semantics over a finite box of states.
//!
//! `collect` runs a program on a set of states by brute force. The `ref_*`
//! functions read the four transformers off the resulting input/output
//! relation: wp/wlp take the join/meet of the postquantity over reachable
//! final states, sp/slp take the join/meet of the prequantity over all initial
//! states that reach a given final state.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::lattice::{self, ExtReal};
use crate::syntax::{BExpr, DomainSpec, EvalError, Program, Quantity, State};
use crate::transformers::Mode;

/// A finite set of program states.
pub type Config = BTreeSet<State>;

/// What happens to a state that leaves the domain box.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EscapePolicy {
    /// Abort the run.
    Error,
    /// Treat the escaping execution as diverging.
    Drop,
}

impl fmt::Display for EscapePolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            EscapePolicy::Error => "error",
            EscapePolicy::Drop => "drop",
        })
    }
}

impl FromStr for EscapePolicy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "error" => Ok(EscapePolicy::Error),
            "drop" => Ok(EscapePolicy::Drop),
            _ => Err(format!("unknown escape policy `{s}` (expected error or drop)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum OracleError {
    #[error("state {0} escapes the domain")]
    Escape(State),
    #[error("loop `while ({guard}) ...` did not stabilize within {fuel} iterations")]
    Fuel { guard: BExpr, fuel: usize },
    #[error("state {0} is outside the domain")]
    OutsideDomain(State),
    #[error("state {0} is not among the relation's initial states")]
    NotInitial(State),
    #[error(transparent)]
    Eval(#[from] EvalError),
}

/// `⟦b⟧S`: the states of `s` satisfying `b`.
pub fn filter(b: &BExpr, s: &Config) -> Result<Config, EvalError> {
    let mut out = Config::new();
    for st in s {
        if b.eval(st)? {
            out.insert(st.clone());
        }
    }
    Ok(out)
}

/// The final states reachable from `s`.
///
/// Loops iterate `F(X) = S ∪ ⟦body⟧(⟦φ⟧X)` from the empty set; each
/// application counts against `dom.fuel`.
pub fn collect(c: &Program, s: &Config, dom: &DomainSpec, policy: EscapePolicy) -> Result<Config, OracleError> {
    for st in s {
        if !dom.contains(st) {
            return Err(OracleError::OutsideDomain(st.clone()));
        }
    }
    run(c, s.clone(), dom, policy)
}

fn run(c: &Program, s: Config, dom: &DomainSpec, policy: EscapePolicy) -> Result<Config, OracleError> {
    use Program::*;
    if s.is_empty() {
        return Ok(s);
    }
    Ok(match c {
        Skip => s,
        Diverge => Config::new(),
        Assign(x, e) => {
            let mut out = Config::new();
            for st in &s {
                let next = st.with(x, e.eval(st)?);
                if dom.contains(&next) {
                    out.insert(next);
                } else if policy == EscapePolicy::Error {
                    return Err(OracleError::Escape(next));
                }
            }
            out
        }
        Seq(a, b) => run(b, run(a, s, dom, policy)?, dom, policy)?,
        Choice(a, b) => {
            let mut out = run(a, s.clone(), dom, policy)?;
            out.extend(run(b, s, dom, policy)?);
            out
        }
        Ite(b, t, e) => {
            let (yes, no): (Config, Config) = partition(b, s)?;
            let mut out = run(t, yes, dom, policy)?;
            out.extend(run(e, no, dom, policy)?);
            out
        }
        While(b, body) => {
            // Kleene iteration, run on the frontier of newly added states
            let mut all = s.clone();
            let mut frontier = s;
            let mut applications = 1;
            loop {
                let entering = filter(b, &frontier)?;
                let next: Config = run(body, entering, dom, policy)?.into_iter().filter(|t| !all.contains(t)).collect();
                applications += 1;
                if next.is_empty() {
                    break;
                }
                if applications > dom.fuel {
                    return Err(OracleError::Fuel { guard: b.clone(), fuel: dom.fuel });
                }
                all.extend(next.iter().cloned());
                frontier = next;
            }
            filter(&BExpr::not(b.clone()), &all)?
        }
    })
}

fn partition(b: &BExpr, s: Config) -> Result<(Config, Config), EvalError> {
    let mut yes = Config::new();
    let mut no = Config::new();
    for st in s {
        if b.eval(&st)? {
            yes.insert(st);
        } else {
            no.insert(st);
        }
    }
    Ok((yes, no))
}

/// The input/output relation of a program on a set of initial states.
#[derive(Debug, Clone)]
pub struct Relation {
    forward: BTreeMap<State, Config>,
    backward: BTreeMap<State, Vec<State>>,
    dom: DomainSpec,
}

impl Relation {
    /// Runs `c` separately from each initial state.
    pub fn from_initial(
        c: &Program,
        initial: impl IntoIterator<Item = State>,
        dom: &DomainSpec,
        policy: EscapePolicy,
    ) -> Result<Self, OracleError> {
        let mut forward = BTreeMap::new();
        let mut backward: BTreeMap<State, Vec<State>> = BTreeMap::new();
        for sigma in initial {
            let finals = collect(c, &Config::from([sigma.clone()]), dom, policy)?;
            for tau in &finals {
                backward.entry(tau.clone()).or_default().push(sigma.clone());
            }
            forward.insert(sigma, finals);
        }
        Ok(Relation { forward, backward, dom: dom.clone() })
    }

    /// Every state of the domain box as an initial state.
    pub fn full(c: &Program, dom: &DomainSpec, policy: EscapePolicy) -> Result<Self, OracleError> {
        Relation::from_initial(c, dom.states(), dom, policy)
    }

    pub fn domain(&self) -> &DomainSpec {
        &self.dom
    }

    pub fn initial_states(&self) -> impl Iterator<Item = &State> {
        self.forward.keys()
    }

    pub fn finals(&self, sigma: &State) -> Option<&Config> {
        self.forward.get(sigma)
    }

    /// Initial states from which `tau` is reachable.
    pub fn fiber(&self, tau: &State) -> &[State] {
        self.backward.get(tau).map(Vec::as_slice).unwrap_or(&[])
    }

    /// All final states reached from some initial state.
    pub fn reachable(&self) -> Config {
        self.backward.keys().cloned().collect()
    }

    /// The reference value of `mode⟦c⟧(f)` at `state`, which is an initial
    /// state for wp/wlp and a final state for sp/slp.
    pub fn reference(&self, mode: Mode, f: &Quantity, state: &State) -> Result<ExtReal, OracleError> {
        let group: Vec<&State> = match mode {
            Mode::Wp | Mode::Wlp => match self.forward.get(state) {
                Some(finals) => finals.iter().collect(),
                None => return Err(OracleError::NotInitial(state.clone())),
            },
            Mode::Sp | Mode::Slp => self.fiber(state).iter().collect(),
        };
        let (mut acc, liberal) = if mode.is_liberal() { (ExtReal::PosInf, true) } else { (ExtReal::NegInf, false) };
        for st in group {
            let v = f.eval(st, &self.dom)?;
            acc = if liberal { lattice::meet(&acc, &v) } else { lattice::join(&acc, &v) };
        }
        Ok(acc)
    }
}

fn reference_backward(
    mode: Mode,
    c: &Program,
    f: &Quantity,
    sigma: &State,
    dom: &DomainSpec,
    policy: EscapePolicy,
) -> Result<ExtReal, OracleError> {
    Relation::from_initial(c, [sigma.clone()], dom, policy)?.reference(mode, f, sigma)
}

/// Join of `f` over the final states reachable from `sigma`; `-inf` if none.
pub fn ref_wp(c: &Program, f: &Quantity, sigma: &State, dom: &DomainSpec, policy: EscapePolicy) -> Result<ExtReal, OracleError> {
    reference_backward(Mode::Wp, c, f, sigma, dom, policy)
}

/// Meet of `f` over the final states reachable from `sigma`; `+inf` if none.
pub fn ref_wlp(c: &Program, f: &Quantity, sigma: &State, dom: &DomainSpec, policy: EscapePolicy) -> Result<ExtReal, OracleError> {
    reference_backward(Mode::Wlp, c, f, sigma, dom, policy)
}

/// Join of `f` over every initial state of the domain that reaches `tau`.
pub fn ref_sp(c: &Program, f: &Quantity, tau: &State, dom: &DomainSpec, policy: EscapePolicy) -> Result<ExtReal, OracleError> {
    Relation::full(c, dom, policy)?.reference(Mode::Sp, f, tau)
}

/// Meet of `f` over every initial state of the domain that reaches `tau`.
pub fn ref_slp(c: &Program, f: &Quantity, tau: &State, dom: &DomainSpec, policy: EscapePolicy) -> Result<ExtReal, OracleError> {
    Relation::full(c, dom, policy)?.reference(Mode::Slp, f, tau)
}

/// The first state of `states` where `symbolic` and the oracle disagree.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Mismatch {
    pub state: State,
    pub symbolic: ExtReal,
    pub reference: ExtReal,
}

impl fmt::Display for Mismatch {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "at {}: symbolic {} but reference {}", self.state, self.symbolic, self.reference)
    }
}

/// Compares a symbolic result with the reference values on `states`.
pub fn compare(
    rel: &Relation,
    mode: Mode,
    f: &Quantity,
    symbolic: &Quantity,
    states: impl IntoIterator<Item = State>,
) -> Result<Option<Mismatch>, OracleError> {
    for st in states {
        let reference = rel.reference(mode, f, &st)?;
        let value = symbolic.eval(&st, rel.domain())?;
        if value != reference {
            return Ok(Some(Mismatch { state: st, symbolic: value, reference }));
        }
    }
    Ok(None)
}
