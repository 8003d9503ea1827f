//! Reachability and leakage through strongest posts.
//!
//! For a secret `h` and an observable `l`, the final states with `l = v`
//! bound the initial value of `h` from below by `slp⟦C⟧(h)` and from above by
//! `sp⟦C⟧(h)`. A final state is unreachable exactly when `sp` is `-inf` there,
//! equivalently when `slp` is `+inf`.

use std::collections::BTreeMap;
use std::fmt;

use thiserror::Error;

use crate::lattice::{self, ExtReal};
use crate::oracle::{self, Config, EscapePolicy, OracleError};
use crate::syntax::{AExpr, DomainError, DomainSpec, EvalError, Program, Quantity, State, Var};
use crate::transformers::{self, AnalysisResult, Mode, Status, TransformConfig};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FlowError {
    #[error(transparent)]
    Domain(#[from] DomainError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Oracle(#[from] OracleError),
    #[error("`{0}` has no interval in the domain")]
    NotStateVar(Var),
    #[error("at {state}: sp is {sp} but slp is {slp}; exactly one of them marks the state unreachable")]
    Inconsistent { state: State, sp: ExtReal, slp: ExtReal },
}

#[derive(Debug, Clone)]
pub struct Reachable {
    pub states: Config,
    pub status: Status,
    /// The oracle's reachable set from the whole domain, when the oracle
    /// could compute it.
    pub oracle: Option<Config>,
}

impl Reachable {
    pub fn agrees_with_oracle(&self) -> Option<bool> {
        self.oracle.as_ref().map(|o| *o == self.states)
    }
}

/// The domain states where `sp⟦c⟧([true])` is `+inf`, cross-checked against
/// running `c` on every state of the domain.
pub fn reachable_states(c: &Program, dom: &DomainSpec, policy: EscapePolicy) -> Result<Reachable, FlowError> {
    dom.covers(&c.vars())?;
    let cfg = TransformConfig::new(dom.clone());
    let AnalysisResult { quantity, status } = transformers::transform(Mode::Sp, c, &Quantity::pos_inf(), &cfg)?;
    let mut states = Config::new();
    for s in dom.states() {
        if quantity.eval(&s, dom)? == ExtReal::PosInf {
            states.insert(s);
        }
    }
    let oracle = oracle::collect(c, &dom.states().collect(), dom, policy).ok();
    Ok(Reachable { states, status, oracle })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LeakEntry {
    Unreachable,
    /// Possible initial values of the secret lie in `[lower, upper]`.
    Interval { lower: ExtReal, upper: ExtReal },
    /// A transform was truncated; the endpoints are the bounds it produced.
    Unknown { lower: ExtReal, upper: ExtReal },
}

impl LeakEntry {
    pub fn status(&self) -> &'static str {
        match self {
            LeakEntry::Unreachable => "unreachable",
            LeakEntry::Interval { .. } => "interval",
            LeakEntry::Unknown { .. } => "unknown",
        }
    }

    pub fn bounds(&self) -> Option<(&ExtReal, &ExtReal)> {
        match self {
            LeakEntry::Unreachable => None,
            LeakEntry::Interval { lower, upper } | LeakEntry::Unknown { lower, upper } => Some((lower, upper)),
        }
    }
}

#[derive(Debug, Clone)]
pub struct LeakReport {
    pub secret: Var,
    pub observable: Var,
    pub entries: BTreeMap<i64, LeakEntry>,
    pub sp: AnalysisResult,
    pub slp: AnalysisResult,
    pub domain: DomainSpec,
}

impl LeakReport {
    pub fn entry(&self, value: i64) -> Option<&LeakEntry> {
        self.entries.get(&value)
    }

    /// Observable values some final state can take.
    pub fn reachable_values(&self) -> impl Iterator<Item = i64> + '_ {
        self.entries.iter().filter(|(_, e)| **e != LeakEntry::Unreachable).map(|(v, _)| *v)
    }

    /// `value, status, lower, upper` lines with a header row.
    pub fn table(&self) -> String {
        let mut out = String::from("value,status,lower,upper\n");
        for (v, e) in &self.entries {
            match e.bounds() {
                Some((lo, hi)) => out.push_str(&format!("{v},{},{lo},{hi}\n", e.status())),
                None => out.push_str(&format!("{v},{},,\n", e.status())),
            }
        }
        out
    }
}

impl fmt::Display for LeakReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "secret {} observed through {} on {}", self.secret, self.observable, self.domain)?;
        writeln!(f, "sp  = {}", self.sp)?;
        writeln!(f, "slp = {}", self.slp)?;
        let mut unreachable = 0;
        for (v, e) in &self.entries {
            match e {
                LeakEntry::Unreachable => unreachable += 1,
                LeakEntry::Interval { lower, upper } => {
                    writeln!(f, "  {} = {v}: {lower} <= {} <= {upper}", self.observable, self.secret)?
                }
                LeakEntry::Unknown { lower, upper } => {
                    writeln!(f, "  {} = {v}: {lower} <= {} <= {upper} (bounds only)", self.observable, self.secret)?
                }
            }
        }
        write!(f, "  {unreachable} other values unreachable")
    }
}

/// The leak function for `secret` observed through `observable`.
///
/// Each entry aggregates all final states with the given observable value:
/// the lower end is the meet of `slp⟦c⟧(secret)`, the upper end the join of
/// `sp⟦c⟧(secret)`, both over the reachable ones.
pub fn leak(c: &Program, secret: &Var, observable: &Var, dom: &DomainSpec) -> Result<LeakReport, FlowError> {
    for v in [secret, observable] {
        if !dom.vars.contains_key(v) {
            return Err(FlowError::NotStateVar(v.clone()));
        }
    }
    dom.covers(&c.vars())?;
    let cfg = TransformConfig::new(dom.clone());
    let h = Quantity::arith(AExpr::Var(secret.clone()));
    let sp = transformers::transform(Mode::Sp, c, &h, &cfg)?;
    let slp = transformers::transform(Mode::Slp, c, &h, &cfg)?;
    let truncated = sp.status.is_truncated() || slp.status.is_truncated();

    // value -> (lower, upper, any reachable)
    let mut acc: BTreeMap<i64, (ExtReal, ExtReal, bool)> = BTreeMap::new();
    let (lo, hi) = dom.vars[observable];
    for v in lo..=hi {
        acc.insert(v, (ExtReal::PosInf, ExtReal::NegInf, false));
    }
    for tau in dom.states() {
        let up = sp.quantity.eval(&tau, dom)?;
        let low = slp.quantity.eval(&tau, dom)?;
        let unreachable_sp = up == ExtReal::NegInf;
        let unreachable_slp = low == ExtReal::PosInf;
        if unreachable_sp != unreachable_slp && !truncated {
            return Err(FlowError::Inconsistent { state: tau, sp: up, slp: low });
        }
        if unreachable_sp && unreachable_slp {
            continue;
        }
        let slot = acc.get_mut(&tau.get(observable).expect("domain covers observable")).expect("in range");
        slot.0 = lattice::meet(&slot.0, &low);
        slot.1 = lattice::join(&slot.1, &up);
        slot.2 = true;
    }
    let entries = acc
        .into_iter()
        .map(|(v, (lower, upper, seen))| {
            let e = match (seen, truncated) {
                (false, false) => LeakEntry::Unreachable,
                (_, true) => LeakEntry::Unknown { lower, upper },
                (true, false) => LeakEntry::Interval { lower, upper },
            };
            (v, e)
        })
        .collect();
    Ok(LeakReport {
        secret: secret.clone(),
        observable: observable.clone(),
        entries,
        sp,
        slp,
        domain: dom.clone(),
    })
}

/// The exact set of initial secret values behind each observable value, by
/// running `c` from every domain state.
pub fn leak_by_oracle(
    c: &Program,
    secret: &Var,
    observable: &Var,
    dom: &DomainSpec,
    policy: EscapePolicy,
) -> Result<BTreeMap<i64, Vec<i64>>, FlowError> {
    let rel = oracle::Relation::full(c, dom, policy)?;
    let mut out: BTreeMap<i64, Vec<i64>> = BTreeMap::new();
    for tau in rel.reachable() {
        let slot = out.entry(tau.get(observable).expect("observable")).or_default();
        for sigma in rel.fiber(&tau) {
            slot.push(sigma.get(secret).expect("secret"));
        }
    }
    for v in out.values_mut() {
        v.sort_unstable();
        v.dedup();
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parser::parse_program;
    use crate::syntax::var;

    const FLOW: &str = "if (hi > 7) {lo := 99} else {lo := 80}";

    fn flow_dom() -> DomainSpec {
        DomainSpec::uniform(&["hi"], (-2, 12), (-16, 16), 64).with_interval("lo", (0, 127))
    }

    #[test]
    fn branching_flow_leak() {
        let c = parse_program(FLOW).unwrap();
        let r = leak(&c, &var("hi"), &var("lo"), &flow_dom()).unwrap();
        assert_eq!(r.entry(99), Some(&LeakEntry::Interval { lower: ExtReal::int(8), upper: ExtReal::int(12) }));
        assert_eq!(r.entry(80), Some(&LeakEntry::Interval { lower: ExtReal::int(-2), upper: ExtReal::int(7) }));
        assert_eq!(r.reachable_values().collect::<Vec<_>>(), vec![80, 99]);
        assert!(r.table().starts_with("value,status,lower,upper\n0,unreachable,,\n"));
    }

    #[test]
    fn reachable_sets() {
        let d = flow_dom();
        let r = reachable_states(&parse_program(FLOW).unwrap(), &d, EscapePolicy::Error).unwrap();
        assert_eq!(r.agrees_with_oracle(), Some(true));
        for s in d.states() {
            let (hi, lo) = (s.get(&var("hi")).unwrap(), s.get(&var("lo")).unwrap());
            assert_eq!(r.states.contains(&s), lo == 99 && hi > 7 || lo == 80 && hi <= 7);
        }
        let small = DomainSpec::uniform(&["x"], (0, 3), (-4, 4), 8);
        assert_eq!(reachable_states(&Program::Skip, &small, EscapePolicy::Error).unwrap().states.len(), 4);
        assert!(reachable_states(&Program::Diverge, &small, EscapePolicy::Error).unwrap().states.is_empty());
    }

    #[test]
    fn forgetting_assignment() {
        let d = DomainSpec::uniform(&["hi", "lo"], (-3, 3), (-8, 8), 8);
        let c = parse_program("lo := 0").unwrap();
        let r = leak(&c, &var("hi"), &var("lo"), &d).unwrap();
        assert_eq!(r.entry(0), Some(&LeakEntry::Interval { lower: ExtReal::int(-3), upper: ExtReal::int(3) }));
        assert!(r.entries.iter().filter(|(v, _)| **v != 0).all(|(_, e)| *e == LeakEntry::Unreachable));
    }

    #[test]
    fn intervals_contain_oracle_fibers() {
        let d = flow_dom();
        let c = parse_program(FLOW).unwrap();
        let r = leak(&c, &var("hi"), &var("lo"), &d).unwrap();
        let exact = leak_by_oracle(&c, &var("hi"), &var("lo"), &d, EscapePolicy::Error).unwrap();
        for (v, secrets) in exact {
            let (lo, hi) = r.entry(v).unwrap().bounds().unwrap();
            assert_eq!(*lo, ExtReal::int(secrets[0]));
            assert_eq!(*hi, ExtReal::int(*secrets.last().unwrap()));
        }
    }
}
