//! Annotated listings: the program with the transformer's value at every
//! program point.
//!
//! Forward modes (sp, slp) start from the prequantity at the top; backward
//! modes (wp, wlp) start from the postquantity at the bottom. Either way the
//! listing reads top-down and each annotation describes the point where it
//! appears.

use std::fmt;

use crate::syntax::{BExpr, EvalError, Program, Quantity};
use crate::transformers::{self, mk_max, mk_min, simplify, Mode, Status, TransformConfig};

const INDENT: &str = "    ";

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Line {
    Code(String),
    Annotation(Quantity),
}

#[derive(Debug, Clone)]
pub struct Listing {
    /// `(depth, line)` pairs.
    pub lines: Vec<(usize, Line)>,
    pub status: Status,
}

impl Listing {
    pub fn annotations(&self) -> impl Iterator<Item = &Quantity> {
        self.lines.iter().filter_map(|(_, l)| match l {
            Line::Annotation(q) => Some(q),
            Line::Code(_) => None,
        })
    }

    pub fn first_annotation(&self) -> Option<&Quantity> {
        self.annotations().next()
    }

    pub fn last_annotation(&self) -> Option<&Quantity> {
        self.annotations().last()
    }
}

impl fmt::Display for Listing {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (depth, line) in &self.lines {
            let pad = INDENT.repeat(*depth);
            match line {
                Line::Code(s) => writeln!(f, "{pad}{s}")?,
                Line::Annotation(q) => writeln!(f, "{pad}// {{{{ {q} }}}}")?,
            }
        }
        write!(f, "// {}", self.status)
    }
}

/// Annotates `c` with `mode`'s values, starting from `f`.
pub fn annotate(mode: Mode, c: &Program, f: &Quantity, cfg: &TransformConfig) -> Result<Listing, EvalError> {
    let status = transformers::transform(mode, c, f, cfg)?.status;
    let f = simplify(f);
    let mut a = Annotator { mode, cfg };
    let (other, mut body) = a.emit(c, &f, 0, true)?;
    let top = if mode.is_forward() { f } else { other };
    let mut lines = vec![(0, Line::Annotation(top))];
    lines.append(&mut body);
    Ok(Listing { lines, status })
}

struct Annotator<'a> {
    mode: Mode,
    cfg: &'a TransformConfig,
}

type Lines = Vec<(usize, Line)>;

impl Annotator<'_> {
    fn t(&self, c: &Program, q: &Quantity) -> Result<Quantity, EvalError> {
        Ok(transformers::transform(self.mode, c, q, self.cfg)?.quantity)
    }

    fn guard(&self, b: &BExpr) -> Quantity {
        simplify(&Quantity::iverson(b.clone()))
    }

    fn not_guard(&self, b: &BExpr) -> Quantity {
        simplify(&Quantity::iverson(BExpr::not(b.clone())))
    }

    /// Emits `c` followed by the annotation after it. `q` is the value before
    /// `c` for forward modes and after it for backward modes; the value at the
    /// other end is returned.
    fn emit(&mut self, c: &Program, q: &Quantity, depth: usize, last: bool) -> Result<(Quantity, Lines), EvalError> {
        let fwd = self.mode.is_forward();
        let sep = if last { "" } else { ";" };
        let mut lines = Lines::new();
        let other = match c {
            Program::Seq(a, b) => {
                if fwd {
                    let (mid, mut la) = self.emit(a, q, depth, false)?;
                    let (end, mut lb) = self.emit(b, &mid, depth, last)?;
                    lines.append(&mut la);
                    lines.append(&mut lb);
                    return Ok((end, lines));
                }
                let (mid, mut lb) = self.emit(b, q, depth, last)?;
                let (start, mut la) = self.emit(a, &mid, depth, false)?;
                lines.append(&mut la);
                lines.append(&mut lb);
                return Ok((start, lines));
            }
            Program::Ite(b, c1, c2) => {
                let (g, ng) = (self.guard(b), self.not_guard(b));
                let (in1, in2) = match self.mode {
                    Mode::Sp => (mk_min(vec![g.clone(), q.clone()]), mk_min(vec![ng.clone(), q.clone()])),
                    Mode::Slp => (mk_max(vec![ng.clone(), q.clone()]), mk_max(vec![g.clone(), q.clone()])),
                    _ => (q.clone(), q.clone()),
                };
                let (o1, l1) = self.emit(c1, &in1, depth + 1, true)?;
                let (o2, l2) = self.emit(c2, &in2, depth + 1, true)?;
                lines.push((depth, Line::Code(format!("if ({b}) {{"))));
                let (e1, e2) = if fwd { (in1, in2) } else { (o1.clone(), o2.clone()) };
                lines.push((depth + 1, Line::Annotation(e1)));
                lines.extend(l1);
                lines.push((depth, Line::Code("} else {".into())));
                lines.push((depth + 1, Line::Annotation(e2)));
                lines.extend(l2);
                lines.push((depth, Line::Code(format!("}}{sep}"))));
                match self.mode {
                    Mode::Sp => mk_max(vec![o1, o2]),
                    Mode::Slp => mk_min(vec![o1, o2]),
                    _ => mk_max(vec![mk_min(vec![g, o1]), mk_min(vec![ng, o2])]),
                }
            }
            Program::Choice(c1, c2) => {
                let (o1, l1) = self.emit(c1, q, depth + 1, true)?;
                let (o2, l2) = self.emit(c2, q, depth + 1, true)?;
                let (e1, e2) = if fwd { (q.clone(), q.clone()) } else { (o1.clone(), o2.clone()) };
                lines.push((depth, Line::Code("{".into())));
                lines.push((depth + 1, Line::Annotation(e1)));
                lines.extend(l1);
                lines.push((depth, Line::Code("} [] {".into())));
                lines.push((depth + 1, Line::Annotation(e2)));
                lines.extend(l2);
                lines.push((depth, Line::Code(format!("}}{sep}"))));
                if self.mode.is_liberal() {
                    mk_min(vec![o1, o2])
                } else {
                    mk_max(vec![o1, o2])
                }
            }
            Program::While(b, body) => {
                let x = transformers::loop_fixpoint(self.mode, b, body, q, self.cfg)?.quantity;
                let entry = match self.mode {
                    Mode::Sp => mk_min(vec![self.guard(b), x.clone()]),
                    Mode::Slp => mk_max(vec![self.not_guard(b), x.clone()]),
                    _ => x.clone(),
                };
                let (o, lb) = self.emit(body, &entry, depth + 1, true)?;
                lines.push((depth, Line::Code(format!("while ({b}) {{"))));
                lines.push((depth + 1, Line::Annotation(if fwd { entry } else { o })));
                lines.extend(lb);
                lines.push((depth, Line::Code(format!("}}{sep}"))));
                match self.mode {
                    Mode::Sp => mk_min(vec![self.not_guard(b), x]),
                    Mode::Slp => mk_max(vec![self.guard(b), x]),
                    _ => x,
                }
            }
            atomic => {
                lines.push((depth, Line::Code(format!("{atomic}{sep}"))));
                self.t(atomic, q)?
            }
        };
        let after = if fwd { other.clone() } else { q.clone() };
        lines.push((depth, Line::Annotation(after)));
        Ok((other, lines))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parser::{parse_program, parse_quantity};
    use crate::syntax::DomainSpec;

    fn cfg() -> TransformConfig {
        TransformConfig::new(DomainSpec::uniform(&["hi", "lo", "x"], (-2, 12), (-16, 16), 64))
    }

    fn listing(mode: Mode, prog: &str, q: &str) -> Listing {
        annotate(mode, &parse_program(prog).unwrap(), &parse_quantity(q).unwrap(), &cfg()).unwrap()
    }

    #[test]
    fn skip_has_two_equal_annotations() {
        let l = listing(Mode::Sp, "skip", "x");
        let anns: Vec<_> = l.annotations().collect();
        assert_eq!(anns.len(), 2);
        assert_eq!(anns[0], anns[1]);
    }

    #[test]
    fn endpoints_match_transform() {
        let progs = [
            "if (hi > 7) {lo := 99} else {lo := 80}",
            "hi := hi + 5; while (lo < hi) {lo := lo + 1}",
            "x := x + 1; {x := 2*x} [] {if (x < 3) {x := 0} else {skip}}",
        ];
        for p in progs {
            for mode in Mode::ALL {
                let c = parse_program(p).unwrap();
                let f = parse_quantity("hi + x").unwrap();
                let l = annotate(mode, &c, &f, &cfg()).unwrap();
                let t = transformers::transform(mode, &c, &f, &cfg()).unwrap();
                let (start, end) = (l.first_annotation().unwrap(), l.last_annotation().unwrap());
                if mode.is_forward() {
                    assert_eq!((start, end), (&simplify(&f), &t.quantity), "{mode} {p}\n{l}");
                } else {
                    assert_eq!((start, end), (&t.quantity, &simplify(&f)), "{mode} {p}\n{l}");
                }
            }
        }
    }

    #[test]
    fn branching_listing() {
        let l = listing(Mode::Sp, "if (hi > 7) {lo := 99} else {lo := 80}", "hi");
        let text = l.to_string();
        assert!(text.starts_with("// {{ hi }}\nif (hi > 7) {\n    // {{ min([hi >= 8], hi) }}\n    lo := 99\n"), "{text}");
        assert_eq!(l.annotations().count(), 6);
    }
}
