//! Parsers for programs, quantities, domain specs and triple files.
//!
//! Every printer in [`crate::syntax`] is inverted here. Quantifier binders are
//! renamed to reserved `α` names while parsing, so user-written binders never
//! clash with program variables.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::Signed;
use thiserror::Error;

use crate::lattice::ExtReal;
use crate::syntax::{
    fresh_var, is_program_ident, AExpr, BExpr, CmpOp, DomainSpec, Program, Quantity, Var,
    BINDER_PREFIX,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SourceSpan {
    pub start: usize,
    pub end: usize,
    pub line: usize,
    pub column: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub struct ParseError {
    pub span: SourceSpan,
    pub message: String,
    pub expected: Vec<String>,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "line {}, column {}: {}", self.span.line, self.span.column, self.message)?;
        if !self.expected.is_empty() {
            write!(f, " (expected {})", self.expected.join(", "))?;
        }
        Ok(())
    }
}

impl ParseError {
    /// Renders the error with the offending source line and a caret.
    pub fn render(&self, source: &str) -> String {
        let line = source.lines().nth(self.span.line - 1).unwrap_or("");
        let caret = " ".repeat(self.span.column - 1);
        format!("error: {self}\n  | {line}\n  | {caret}^")
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Tok {
    Int(i64),
    Ident(String),
    Assign,
    Semi,
    Comma,
    Dot,
    DotDot,
    LBrace,
    RBrace,
    LParen,
    RParen,
    LBracket,
    RBracket,
    Box,
    Plus,
    Minus,
    Star,
    Percent,
    Slash,
    Cmp(CmpOp),
    AndAnd,
    OrOr,
    Bang,
    Eof,
}

impl Tok {
    fn describe(&self) -> String {
        match self {
            Tok::Int(n) => format!("integer {n}"),
            Tok::Ident(s) => format!("`{s}`"),
            Tok::Eof => "end of input".into(),
            other => format!("`{}`", other.symbol()),
        }
    }

    fn symbol(&self) -> &'static str {
        match self {
            Tok::Assign => ":=",
            Tok::Semi => ";",
            Tok::Comma => ",",
            Tok::Dot => ".",
            Tok::DotDot => "..",
            Tok::LBrace => "{",
            Tok::RBrace => "}",
            Tok::LParen => "(",
            Tok::RParen => ")",
            Tok::LBracket => "[",
            Tok::RBracket => "]",
            Tok::Box => "[]",
            Tok::Plus => "+",
            Tok::Minus => "-",
            Tok::Star => "*",
            Tok::Percent => "%",
            Tok::Slash => "/",
            Tok::Cmp(op) => op.symbol(),
            Tok::AndAnd => "&&",
            Tok::OrOr => "||",
            Tok::Bang => "!",
            Tok::Int(_) | Tok::Ident(_) | Tok::Eof => "",
        }
    }
}

const KEYWORDS: &[&str] = &[
    "skip", "diverge", "if", "else", "while", "true", "false", "min", "max", "Sup", "Inf", "inf",
];

fn line_col(src: &str, offset: usize) -> (usize, usize) {
    let before = &src[..offset];
    let line = before.matches('\n').count() + 1;
    let column = before.rsplit('\n').next().map_or(0, |l| l.chars().count()) + 1;
    (line, column)
}

fn span(src: &str, start: usize, end: usize) -> SourceSpan {
    let (line, column) = line_col(src, start);
    SourceSpan { start, end, line, column }
}

fn error(src: &str, start: usize, end: usize, message: impl Into<String>) -> ParseError {
    ParseError { span: span(src, start, end), message: message.into(), expected: Vec::new() }
}

fn lex(src: &str) -> Result<Vec<(Tok, usize, usize)>, ParseError> {
    let mut out = Vec::new();
    let chars: Vec<(usize, char)> = src.char_indices().collect();
    let at = |i: usize| chars.get(i).map(|(_, c)| *c);
    let offset = |i: usize| chars.get(i).map_or(src.len(), |(o, _)| *o);
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i].1;
        let start = offset(i);
        if c.is_whitespace() {
            i += 1;
            continue;
        }
        if c == '#' {
            while i < chars.len() && chars[i].1 != '\n' {
                i += 1;
            }
            continue;
        }
        if c.is_ascii_digit() {
            let mut j = i;
            while at(j).is_some_and(|c| c.is_ascii_digit()) {
                j += 1;
            }
            let text = &src[start..offset(j)];
            let n: i64 = text
                .parse()
                .map_err(|_| error(src, start, offset(j), format!("integer literal {text} out of range")))?;
            out.push((Tok::Int(n), start, offset(j)));
            i = j;
            continue;
        }
        if c.is_ascii_alphabetic() || c == '_' || c == BINDER_PREFIX {
            let mut j = i + 1;
            if c == BINDER_PREFIX {
                while at(j).is_some_and(|c| c.is_ascii_digit()) {
                    j += 1;
                }
            } else {
                while at(j).is_some_and(|c| c.is_ascii_alphanumeric() || c == '_' || c == '\'') {
                    j += 1;
                }
            }
            out.push((Tok::Ident(src[start..offset(j)].to_string()), start, offset(j)));
            i = j;
            continue;
        }
        let two: String = chars[i..chars.len().min(i + 2)].iter().map(|(_, c)| *c).collect();
        let tok2 = match two.as_str() {
            ":=" => Some(Tok::Assign),
            ".." => Some(Tok::DotDot),
            "[]" => Some(Tok::Box),
            "<=" => Some(Tok::Cmp(CmpOp::Le)),
            ">=" => Some(Tok::Cmp(CmpOp::Ge)),
            "!=" => Some(Tok::Cmp(CmpOp::Ne)),
            "&&" => Some(Tok::AndAnd),
            "||" => Some(Tok::OrOr),
            _ => None,
        };
        if let Some(t) = tok2 {
            out.push((t, start, offset(i + 2)));
            i += 2;
            continue;
        }
        let tok1 = match c {
            ';' => Tok::Semi,
            ',' => Tok::Comma,
            '.' => Tok::Dot,
            '{' => Tok::LBrace,
            '}' => Tok::RBrace,
            '(' => Tok::LParen,
            ')' => Tok::RParen,
            '[' => Tok::LBracket,
            ']' => Tok::RBracket,
            '+' => Tok::Plus,
            '-' => Tok::Minus,
            '*' => Tok::Star,
            '%' => Tok::Percent,
            '/' => Tok::Slash,
            '<' => Tok::Cmp(CmpOp::Lt),
            '>' => Tok::Cmp(CmpOp::Gt),
            '=' => Tok::Cmp(CmpOp::Eq),
            '!' => Tok::Bang,
            other => {
                return Err(error(src, start, offset(i + 1), format!("unexpected character {other:?}")))
            }
        };
        out.push((tok1, start, offset(i + 1)));
        i += 1;
    }
    out.push((Tok::Eof, src.len(), src.len()));
    Ok(out)
}

/// Arithmetic-or-quantity intermediate used while parsing quantities: maximal
/// pure integer subexpressions stay arithmetic.
enum QTerm {
    A(AExpr),
    Q(Quantity),
}

impl QTerm {
    fn into_quantity(self) -> Quantity {
        match self {
            QTerm::A(AExpr::Lit(n)) => Quantity::int(n),
            QTerm::A(e) => Quantity::Arith(e),
            QTerm::Q(q) => q,
        }
    }

    fn as_rational(&self) -> Option<BigRational> {
        match self {
            QTerm::A(AExpr::Lit(n)) => Some(BigRational::from_integer(BigInt::from(*n))),
            QTerm::Q(Quantity::Const(ExtReal::Finite(r))) => Some(r.clone()),
            _ => None,
        }
    }
}

struct Parser<'a> {
    src: &'a str,
    toks: Vec<(Tok, usize, usize)>,
    pos: usize,
    /// Innermost binder last: (written name, assigned binder).
    scope: Vec<(String, Var)>,
    used_binders: BTreeSet<Var>,
    /// Every identifier in the input; fresh binders avoid all of them.
    idents: BTreeSet<Var>,
}

impl<'a> Parser<'a> {
    fn new(src: &'a str) -> Result<Self, ParseError> {
        let toks = lex(src)?;
        let idents = toks
            .iter()
            .filter_map(|(t, _, _)| match t {
                Tok::Ident(s) if s.starts_with(BINDER_PREFIX) => {
                    s[BINDER_PREFIX.len_utf8()..].parse().ok().map(Var::binder)
                }
                _ => None,
            })
            .collect();
        Ok(Parser {
            src,
            toks,
            pos: 0,
            scope: Vec::new(),
            used_binders: BTreeSet::new(),
            idents,
        })
    }

    fn peek(&self) -> &Tok {
        &self.toks[self.pos].0
    }

    fn peek_at(&self, k: usize) -> &Tok {
        &self.toks[(self.pos + k).min(self.toks.len() - 1)].0
    }

    fn here(&self) -> (usize, usize) {
        let (_, s, e) = &self.toks[self.pos];
        (*s, *e)
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.pos].0.clone();
        if self.pos < self.toks.len() - 1 {
            self.pos += 1;
        }
        t
    }

    fn fail<T>(&self, expected: &[&str]) -> Result<T, ParseError> {
        let (s, e) = self.here();
        Err(ParseError {
            span: span(self.src, s, e),
            message: format!("unexpected {}", self.peek().describe()),
            expected: expected.iter().map(|x| x.to_string()).collect(),
        })
    }

    fn fail_msg<T>(&self, message: impl Into<String>) -> Result<T, ParseError> {
        let (s, e) = self.here();
        Err(error(self.src, s, e, message))
    }

    fn expect(&mut self, t: Tok) -> Result<(), ParseError> {
        if *self.peek() == t {
            self.bump();
            Ok(())
        } else {
            self.fail(&[&format!("`{}`", t.symbol())])
        }
    }

    fn eat(&mut self, t: &Tok) -> bool {
        if self.peek() == t {
            self.bump();
            true
        } else {
            false
        }
    }

    fn is_keyword(&self, kw: &str) -> bool {
        matches!(self.peek(), Tok::Ident(s) if s == kw)
    }

    fn expect_keyword(&mut self, kw: &str) -> Result<(), ParseError> {
        if self.is_keyword(kw) {
            self.bump();
            Ok(())
        } else {
            self.fail(&[&format!("`{kw}`")])
        }
    }

    fn finish(&self) -> Result<(), ParseError> {
        if *self.peek() == Tok::Eof {
            Ok(())
        } else {
            self.fail(&["end of input"])
        }
    }

    fn int_literal(&mut self) -> Result<i64, ParseError> {
        let negative = self.eat(&Tok::Minus);
        match self.peek().clone() {
            Tok::Int(n) => {
                self.bump();
                Ok(if negative { -n } else { n })
            }
            _ => self.fail(&["integer"]),
        }
    }

    /// A variable occurrence: a binder in scope or a program variable.
    fn variable(&mut self) -> Result<Var, ParseError> {
        let Tok::Ident(name) = self.peek().clone() else {
            return self.fail(&["identifier"]);
        };
        if KEYWORDS.contains(&name.as_str()) {
            return self.fail(&["identifier"]);
        }
        if let Some((_, v)) = self.scope.iter().rev().find(|(n, _)| *n == name) {
            let v = v.clone();
            self.bump();
            return Ok(v);
        }
        if name.starts_with(BINDER_PREFIX) {
            return self.fail_msg(format!("`{name}` is reserved for quantifier binders"));
        }
        debug_assert!(is_program_ident(&name));
        self.bump();
        Ok(Var::new(name).expect("lexer only produces valid identifiers"))
    }

    // ----- programs

    fn program(&mut self) -> Result<Program, ParseError> {
        let first = self.statement()?;
        if self.eat(&Tok::Semi) {
            let rest = self.program()?;
            Ok(Program::seq(first, rest))
        } else {
            Ok(first)
        }
    }

    fn braced_program(&mut self) -> Result<Program, ParseError> {
        self.expect(Tok::LBrace)?;
        let p = self.program()?;
        self.expect(Tok::RBrace)?;
        Ok(p)
    }

    fn statement(&mut self) -> Result<Program, ParseError> {
        match self.peek().clone() {
            Tok::Ident(kw) if kw == "skip" => {
                self.bump();
                Ok(Program::Skip)
            }
            Tok::Ident(kw) if kw == "diverge" => {
                self.bump();
                Ok(Program::Diverge)
            }
            Tok::Ident(kw) if kw == "if" => {
                self.bump();
                self.expect(Tok::LParen)?;
                let g = self.bexpr()?;
                self.expect(Tok::RParen)?;
                let t = self.braced_program()?;
                self.expect_keyword("else")?;
                let e = self.braced_program()?;
                Ok(Program::ite(g, t, e))
            }
            Tok::Ident(kw) if kw == "while" => {
                self.bump();
                self.expect(Tok::LParen)?;
                let g = self.bexpr()?;
                self.expect(Tok::RParen)?;
                let body = self.braced_program()?;
                Ok(Program::while_loop(g, body))
            }
            Tok::LBrace => {
                let mut p = self.braced_program()?;
                while self.eat(&Tok::Box) {
                    let q = self.braced_program()?;
                    p = Program::choice(p, q);
                }
                Ok(p)
            }
            Tok::Ident(_) => {
                let x = self.variable()?;
                self.expect(Tok::Assign)?;
                let e = self.aexpr()?;
                Ok(Program::Assign(x, e))
            }
            _ => self.fail(&["statement"]),
        }
    }

    // ----- integer expressions

    fn aexpr(&mut self) -> Result<AExpr, ParseError> {
        let mut acc = self.aterm()?;
        loop {
            if self.eat(&Tok::Plus) {
                acc = AExpr::add(acc, self.aterm()?);
            } else if self.eat(&Tok::Minus) {
                acc = AExpr::sub(acc, self.aterm()?);
            } else {
                return Ok(acc);
            }
        }
    }

    fn aterm(&mut self) -> Result<AExpr, ParseError> {
        let mut acc = self.aunary()?;
        loop {
            if *self.peek() == Tok::Star {
                let (s, _) = self.here();
                self.bump();
                let rhs = self.aunary()?;
                acc = self.product(acc, rhs, s)?;
            } else if self.eat(&Tok::Percent) {
                acc = AExpr::modulo(acc, self.modulus()?);
            } else {
                return Ok(acc);
            }
        }
    }

    fn product(&self, a: AExpr, b: AExpr, at: usize) -> Result<AExpr, ParseError> {
        match (a, b) {
            (AExpr::Lit(k), e) | (e, AExpr::Lit(k)) => Ok(AExpr::mul(k, e)),
            _ => Err(error(self.src, at, at + 1, "product of two non-constant expressions")),
        }
    }

    fn modulus(&mut self) -> Result<i64, ParseError> {
        match self.peek().clone() {
            Tok::Int(k) if k > 0 => {
                self.bump();
                Ok(k)
            }
            Tok::Int(_) => self.fail_msg("remainder divisor must be positive"),
            _ => self.fail(&["positive integer"]),
        }
    }

    fn aunary(&mut self) -> Result<AExpr, ParseError> {
        if self.eat(&Tok::Minus) {
            return Ok(match self.aunary()? {
                AExpr::Lit(n) => AExpr::Lit(n.checked_neg().ok_or_else(|| {
                    let (s, e) = self.here();
                    error(self.src, s, e, "integer literal out of range")
                })?),
                e => AExpr::mul(-1, e),
            });
        }
        match self.peek().clone() {
            Tok::Int(n) => {
                self.bump();
                Ok(AExpr::Lit(n))
            }
            Tok::Ident(_) => Ok(AExpr::Var(self.variable()?)),
            Tok::LParen => {
                self.bump();
                let e = self.aexpr()?;
                self.expect(Tok::RParen)?;
                Ok(e)
            }
            _ => self.fail(&["integer", "identifier", "`(`"]),
        }
    }

    // ----- conditions

    fn bexpr(&mut self) -> Result<BExpr, ParseError> {
        let mut acc = self.band()?;
        while self.eat(&Tok::OrOr) {
            acc = BExpr::or(acc, self.band()?);
        }
        Ok(acc)
    }

    fn band(&mut self) -> Result<BExpr, ParseError> {
        let mut acc = self.bnot()?;
        while self.eat(&Tok::AndAnd) {
            acc = BExpr::and(acc, self.bnot()?);
        }
        Ok(acc)
    }

    fn bnot(&mut self) -> Result<BExpr, ParseError> {
        if self.eat(&Tok::Bang) {
            return Ok(BExpr::not(self.bnot()?));
        }
        self.batom()
    }

    fn batom(&mut self) -> Result<BExpr, ParseError> {
        if self.is_keyword("true") {
            self.bump();
            return Ok(BExpr::True);
        }
        if self.is_keyword("false") {
            self.bump();
            return Ok(BExpr::False);
        }
        if *self.peek() == Tok::LParen {
            // Either a parenthesized condition or a comparison whose left
            // operand starts with a parenthesis.
            let save = self.pos;
            self.bump();
            let attempt = self.bexpr().and_then(|b| {
                self.expect(Tok::RParen)?;
                Ok(b)
            });
            match attempt {
                Ok(b) if !self.continues_arith() => return Ok(b),
                Ok(_) => self.pos = save,
                Err(first) => {
                    self.pos = save;
                    return match self.comparison() {
                        Ok(b) => Ok(b),
                        Err(second) => Err(if second.span.start >= first.span.start { second } else { first }),
                    };
                }
            }
        }
        self.comparison()
    }

    fn continues_arith(&self) -> bool {
        matches!(self.peek(), Tok::Plus | Tok::Minus | Tok::Star | Tok::Percent | Tok::Cmp(_))
    }

    fn comparison(&mut self) -> Result<BExpr, ParseError> {
        let a = self.aexpr()?;
        let Tok::Cmp(op) = *self.peek() else {
            return self.fail(&["comparison operator"]);
        };
        self.bump();
        let b = self.aexpr()?;
        Ok(BExpr::cmp(a, op, b))
    }

    // ----- quantities

    fn qsum(&mut self) -> Result<QTerm, ParseError> {
        let mut acc = self.qterm()?;
        loop {
            let negate = if self.eat(&Tok::Plus) {
                false
            } else if self.eat(&Tok::Minus) {
                true
            } else {
                return Ok(acc);
            };
            let rhs = self.qterm()?;
            acc = match (acc, rhs) {
                (QTerm::A(a), QTerm::A(b)) if negate => QTerm::A(AExpr::sub(a, b)),
                (QTerm::A(a), QTerm::A(b)) => QTerm::A(AExpr::add(a, b)),
                (a, b) => {
                    let b = b.into_quantity();
                    let b = if negate { Quantity::neg(b) } else { b };
                    QTerm::Q(Quantity::add(a.into_quantity(), b))
                }
            };
        }
    }

    fn qterm(&mut self) -> Result<QTerm, ParseError> {
        let mut acc = self.qunary()?;
        loop {
            if *self.peek() == Tok::Star {
                let (s, _) = self.here();
                self.bump();
                let rhs = self.qunary()?;
                acc = self.qproduct(acc, rhs, s)?;
            } else if *self.peek() == Tok::Percent {
                let QTerm::A(e) = acc else {
                    return self.fail_msg("remainder of a non-arithmetic quantity");
                };
                self.bump();
                acc = QTerm::A(AExpr::modulo(e, self.modulus()?));
            } else {
                return Ok(acc);
            }
        }
    }

    fn qproduct(&self, a: QTerm, b: QTerm, at: usize) -> Result<QTerm, ParseError> {
        if let (QTerm::A(x), QTerm::A(y)) = (&a, &b) {
            return self.product(x.clone(), y.clone(), at).map(QTerm::A);
        }
        let (r, q) = match (a.as_rational(), b.as_rational()) {
            (Some(r), _) => (r, b),
            (None, Some(r)) => (r, a),
            (None, None) => {
                return Err(error(self.src, at, at + 1, "scaling factor must be a constant"))
            }
        };
        if r.is_negative() {
            return Err(error(self.src, at, at + 1, "scaling factor must be non-negative"));
        }
        Ok(QTerm::Q(Quantity::scale(r, q.into_quantity())))
    }

    fn qunary(&mut self) -> Result<QTerm, ParseError> {
        if self.eat(&Tok::Minus) {
            if self.is_keyword("inf") {
                self.bump();
                return Ok(QTerm::Q(Quantity::neg_inf()));
            }
            return Ok(match self.qunary()? {
                QTerm::A(AExpr::Lit(n)) => QTerm::A(AExpr::Lit(-n)),
                QTerm::A(e) => QTerm::A(AExpr::mul(-1, e)),
                QTerm::Q(Quantity::Const(ExtReal::Finite(r))) => {
                    QTerm::Q(Quantity::Const(ExtReal::Finite(-r)))
                }
                QTerm::Q(q) => QTerm::Q(Quantity::neg(q)),
            });
        }
        if *self.peek() == Tok::Plus && matches!(self.peek_at(1), Tok::Ident(s) if s == "inf") {
            self.bump();
            self.bump();
            return Ok(QTerm::Q(Quantity::pos_inf()));
        }
        self.qprimary()
    }

    fn qprimary(&mut self) -> Result<QTerm, ParseError> {
        match self.peek().clone() {
            Tok::Int(n) => {
                self.bump();
                if *self.peek() == Tok::Slash {
                    self.bump();
                    let Tok::Int(d) = *self.peek() else {
                        return self.fail(&["integer denominator"]);
                    };
                    if d == 0 {
                        return self.fail_msg("zero denominator");
                    }
                    self.bump();
                    let r = BigRational::new(BigInt::from(n), BigInt::from(d));
                    return Ok(if r.is_integer() {
                        QTerm::A(AExpr::Lit(r.to_integer().try_into().unwrap_or(n)))
                    } else {
                        QTerm::Q(Quantity::Const(ExtReal::Finite(r)))
                    });
                }
                Ok(QTerm::A(AExpr::Lit(n)))
            }
            Tok::LBracket => {
                self.bump();
                let b = self.bexpr()?;
                self.expect(Tok::RBracket)?;
                Ok(QTerm::Q(Quantity::Iverson(b)))
            }
            Tok::LParen => {
                self.bump();
                let q = self.qsum()?;
                self.expect(Tok::RParen)?;
                Ok(q)
            }
            Tok::Ident(kw) if kw == "inf" => {
                self.bump();
                Ok(QTerm::Q(Quantity::pos_inf()))
            }
            Tok::Ident(kw) if kw == "min" || kw == "max" => {
                self.bump();
                self.expect(Tok::LParen)?;
                let mut args = vec![self.qsum()?.into_quantity()];
                while self.eat(&Tok::Comma) {
                    args.push(self.qsum()?.into_quantity());
                }
                self.expect(Tok::RParen)?;
                if args.len() < 2 {
                    return self.fail_msg(format!("`{kw}` needs at least two arguments"));
                }
                Ok(QTerm::Q(if kw == "min" { Quantity::Min(args) } else { Quantity::Max(args) }))
            }
            Tok::Ident(kw) if kw == "Sup" || kw == "Inf" => {
                self.bump();
                let Tok::Ident(name) = self.peek().clone() else {
                    return self.fail(&["binder name"]);
                };
                if KEYWORDS.contains(&name.as_str()) {
                    return self.fail(&["binder name"]);
                }
                self.bump();
                self.expect(Tok::Dot)?;
                let binder = self.assign_binder(&name);
                self.scope.push((name, binder.clone()));
                let body = self.qsum();
                self.scope.pop();
                let body = body?.into_quantity();
                Ok(QTerm::Q(if kw == "Sup" {
                    Quantity::sup(binder, body)
                } else {
                    Quantity::inf(binder, body)
                }))
            }
            Tok::Ident(_) => Ok(QTerm::A(AExpr::Var(self.variable()?))),
            _ => self.fail(&["quantity"]),
        }
    }

    /// Keeps a written `αN` binder when it is still unused, otherwise picks
    /// the first binder name unused anywhere in the input.
    fn assign_binder(&mut self, written: &str) -> Var {
        let candidate = written
            .strip_prefix(BINDER_PREFIX)
            .and_then(|d| d.parse().ok())
            .map(Var::binder)
            .filter(|v| !self.used_binders.contains(v) && !self.scope.iter().any(|(_, b)| b == v));
        let chosen = candidate.unwrap_or_else(|| {
            let mut avoid = self.idents.clone();
            avoid.extend(self.used_binders.iter().cloned());
            fresh_var(&avoid)
        });
        self.used_binders.insert(chosen.clone());
        self.idents.insert(chosen.clone());
        chosen
    }

    // ----- domains

    fn domain(&mut self) -> Result<DomainSpec, ParseError> {
        let mut vars = BTreeMap::new();
        let mut alpha = None;
        let mut fuel = None;
        loop {
            let (start, _) = self.here();
            let Tok::Ident(name) = self.peek().clone() else {
                return self.fail(&["variable name", "`alpha`", "`fuel`"]);
            };
            self.bump();
            self.expect(Tok::Cmp(CmpOp::Eq))?;
            if name == "fuel" {
                let n = self.int_literal()?;
                if n <= 0 {
                    return Err(error(self.src, start, self.here().0, "fuel must be positive"));
                }
                fuel = Some(n as usize);
            } else {
                let lo = self.int_literal()?;
                self.expect(Tok::DotDot)?;
                let hi = self.int_literal()?;
                let end = self.toks[self.pos - 1].2;
                if lo > hi {
                    return Err(error(self.src, start, end, format!("empty interval {lo}..{hi} for `{name}`")));
                }
                if name == "alpha" {
                    alpha = Some((lo, hi));
                } else {
                    let v = Var::new(name.clone())
                        .map_err(|_| error(self.src, start, end, format!("invalid variable name `{name}`")))?;
                    if vars.insert(v, (lo, hi)).is_some() {
                        return Err(error(self.src, start, end, format!("duplicate interval for `{name}`")));
                    }
                }
            }
            if !(self.eat(&Tok::Comma) || self.eat(&Tok::Semi)) || *self.peek() == Tok::Eof {
                break;
            }
        }
        self.finish()?;
        Ok(DomainSpec {
            vars,
            alpha: alpha.unwrap_or(DomainSpec::DEFAULT_ALPHA),
            fuel: fuel.unwrap_or(DomainSpec::DEFAULT_FUEL),
        })
    }
}

pub fn parse_program(text: &str) -> Result<Program, ParseError> {
    let mut p = Parser::new(text)?;
    let prog = p.program()?;
    p.finish()?;
    Ok(prog)
}

pub fn parse_aexpr(text: &str) -> Result<AExpr, ParseError> {
    let mut p = Parser::new(text)?;
    let e = p.aexpr()?;
    p.finish()?;
    Ok(e)
}

pub fn parse_bexpr(text: &str) -> Result<BExpr, ParseError> {
    let mut p = Parser::new(text)?;
    let b = p.bexpr()?;
    p.finish()?;
    Ok(b)
}

pub fn parse_quantity(text: &str) -> Result<Quantity, ParseError> {
    let mut p = Parser::new(text)?;
    let q = p.qsum()?.into_quantity();
    p.finish()?;
    Ok(q)
}

/// Parses `x=0..7, hi=-8..8; alpha=-16..16; fuel=64`. `alpha` and `fuel`
/// default to -16..16 and 64.
pub fn parse_domain(text: &str) -> Result<DomainSpec, ParseError> {
    let mut p = Parser::new(text)?;
    p.domain()
}

/// Like [`parse_domain`], additionally requiring an interval for every
/// variable in `required`.
pub fn parse_domain_for<'v>(
    text: &str,
    required: impl IntoIterator<Item = &'v Var>,
) -> Result<DomainSpec, ParseError> {
    let dom = parse_domain(text)?;
    for v in required {
        if !dom.vars.contains_key(v) {
            return Err(error(text, 0, text.len(), format!("domain has no interval for variable `{v}`")));
        }
    }
    Ok(dom)
}

/// The kinds of program triples, named after the order they assert.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum TripleKind {
    PartialCorrectness,
    TotalCorrectness,
    TotalIncorrectness,
    PartialIncorrectness,
    NecessaryLiberalPre,
    NecessaryLiberalPost,
}

impl TripleKind {
    pub const ALL: [TripleKind; 6] = [
        TripleKind::PartialCorrectness,
        TripleKind::TotalCorrectness,
        TripleKind::TotalIncorrectness,
        TripleKind::PartialIncorrectness,
        TripleKind::NecessaryLiberalPre,
        TripleKind::NecessaryLiberalPost,
    ];

    pub fn name(self) -> &'static str {
        match self {
            TripleKind::PartialCorrectness => "partial_correctness",
            TripleKind::TotalCorrectness => "total_correctness",
            TripleKind::TotalIncorrectness => "total_incorrectness",
            TripleKind::PartialIncorrectness => "partial_incorrectness",
            TripleKind::NecessaryLiberalPre => "necessary_liberal_pre",
            TripleKind::NecessaryLiberalPost => "necessary_liberal_post",
        }
    }
}

impl fmt::Display for TripleKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for TripleKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        TripleKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| format!("unknown triple kind `{s}`"))
    }
}

/// A parsed triple file: `kind; pre; program-file; post`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TripleFile {
    pub kind: TripleKind,
    pub pre: Quantity,
    pub program_path: String,
    pub post: Quantity,
}

pub fn parse_triple_file(text: &str) -> Result<TripleFile, ParseError> {
    // blank out comments, keeping byte offsets
    let mut cleaned = String::with_capacity(text.len());
    let mut in_comment = false;
    for c in text.chars() {
        match c {
            '\n' => {
                in_comment = false;
                cleaned.push(c);
            }
            '#' => {
                in_comment = true;
                cleaned.push(' ');
            }
            _ if in_comment => cleaned.extend(std::iter::repeat_n(' ', c.len_utf8())),
            _ => cleaned.push(c),
        }
    }
    let mut fields = Vec::new();
    let mut start = 0;
    for (i, c) in cleaned.char_indices() {
        if c == ';' {
            fields.push((start, &cleaned[start..i]));
            start = i + 1;
        }
    }
    fields.push((start, &cleaned[start..]));
    if fields.len() != 4 {
        return Err(error(
            text,
            0,
            text.len(),
            format!("a triple has 4 `;`-separated fields, found {}", fields.len()),
        ));
    }
    let shift = |e: ParseError, base: usize| {
        let start = e.span.start + base;
        let end = e.span.end + base;
        ParseError { span: span(text, start, end), ..e }
    };
    let (ks, kind_text) = fields[0];
    let kind: TripleKind = kind_text
        .trim()
        .parse()
        .map_err(|m: String| error(text, ks, ks + kind_text.len(), m))?;
    let pre = parse_quantity(fields[1].1).map_err(|e| shift(e, fields[1].0))?;
    let program_path = fields[2].1.trim().to_string();
    if program_path.is_empty() {
        return Err(error(text, fields[2].0, fields[2].0, "missing program file"));
    }
    let post = parse_quantity(fields[3].1).map_err(|e| shift(e, fields[3].0))?;
    Ok(TripleFile { kind, pre, program_path, post })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::var;

    #[test]
    fn parses_flow_program() {
        let p = parse_program("if (hi > 7) {lo := 99} else {lo := 80}").unwrap();
        assert_eq!(
            p,
            Program::ite(
                BExpr::cmp(AExpr::var("hi"), CmpOp::Gt, AExpr::Lit(7)),
                Program::assign("lo", AExpr::Lit(99)),
                Program::assign("lo", AExpr::Lit(80)),
            )
        );
        assert_eq!(parse_program("skip").unwrap(), Program::Skip);
    }

    #[test]
    fn truncated_input_reports_offset() {
        let e = parse_program("x := ").unwrap_err();
        assert_eq!(e.span.start, 5);
        assert!(!e.message.is_empty());
        assert_eq!((e.span.line, e.span.column), (1, 6));
    }

    #[test]
    fn quantity_examples() {
        assert_eq!(
            parse_quantity("[x = 10]").unwrap(),
            Quantity::iverson(BExpr::cmp(AExpr::var("x"), CmpOp::Eq, AExpr::Lit(10)))
        );
        assert_eq!(parse_quantity("hi").unwrap(), Quantity::arith(AExpr::var("hi")));
        assert_eq!(
            parse_quantity("min([lo >= hi], hi - 5)").unwrap(),
            Quantity::min(
                Quantity::iverson(BExpr::cmp(AExpr::var("lo"), CmpOp::Ge, AExpr::var("hi"))),
                Quantity::arith(AExpr::sub(AExpr::var("hi"), AExpr::Lit(5))),
            )
        );
        assert_eq!(parse_quantity("-inf").unwrap(), Quantity::neg_inf());
        assert_eq!(parse_quantity("+inf").unwrap(), Quantity::pos_inf());
        assert_eq!(parse_quantity("3").unwrap(), Quantity::int(3));
        assert_eq!(parse_quantity("-1/2").unwrap(), Quantity::Const(ExtReal::ratio(-1, 2)));
        assert_eq!(
            parse_quantity("1/2 * x").unwrap(),
            Quantity::scale(BigRational::new(1.into(), 2.into()), Quantity::arith(AExpr::var("x")))
        );
        assert_eq!(
            parse_quantity("[x > 0] + x").unwrap(),
            Quantity::add(
                Quantity::iverson(BExpr::cmp(AExpr::var("x"), CmpOp::Gt, AExpr::Lit(0))),
                Quantity::arith(AExpr::var("x"))
            )
        );
    }

    #[test]
    fn binders_are_renamed() {
        let q = parse_quantity("Sup a. min([x = a + 1], a)").unwrap();
        let a = Var::binder(0);
        assert_eq!(
            q,
            Quantity::sup(
                a.clone(),
                Quantity::min(
                    Quantity::iverson(BExpr::cmp(
                        AExpr::var("x"),
                        CmpOp::Eq,
                        AExpr::add(AExpr::Var(a.clone()), AExpr::Lit(1))
                    )),
                    Quantity::arith(AExpr::Var(a)),
                )
            )
        );
        // a program variable named like the binder is not captured
        let q = parse_quantity("max(a, Sup a. a)").unwrap();
        assert_eq!(q.to_string(), "max(a, Sup α0. α0)");
        assert_eq!(q.free_vars(), [var("a")].into_iter().collect());
        // printed binders are kept
        let q = parse_quantity("Sup α3. Inf α1. α3 + α1").unwrap();
        assert_eq!(q.to_string(), "Sup α3. Inf α1. α3 + α1");
        assert!(parse_quantity("α0 + 1").is_err());
        assert!(parse_program("α0 := 1").is_err());
    }

    #[test]
    fn parenthesized_conditions() {
        let b = parse_bexpr("(x + 1) * 2 < 3 && !(y = 2 || true)").unwrap();
        assert_eq!(b.to_string(), "2*(x + 1) < 3 && !(y = 2 || true)");
        let b = parse_bexpr("((x < 1))").unwrap();
        assert_eq!(b, BExpr::cmp(AExpr::var("x"), CmpOp::Lt, AExpr::Lit(1)));
        let b = parse_bexpr("(x) < 1").unwrap();
        assert_eq!(b, BExpr::cmp(AExpr::var("x"), CmpOp::Lt, AExpr::Lit(1)));
    }

    #[test]
    fn nonlinear_products_are_rejected() {
        assert!(parse_aexpr("x * y").is_err());
        assert!(parse_aexpr("x % 0").is_err());
        assert_eq!(parse_aexpr("x * 3").unwrap(), AExpr::mul(3, AExpr::var("x")));
    }

    #[test]
    fn domains() {
        let d = parse_domain("x=0..7, hi=-8..8; alpha=-16..16; fuel=64").unwrap();
        assert_eq!(d.vars[&var("hi")], (-8, 8));
        assert_eq!(d.vars[&var("x")], (0, 7));
        assert_eq!(d.alpha, (-16, 16));
        assert_eq!(d.fuel, 64);
        let d = parse_domain("x=0..7; alpha=-8..8; fuel=32").unwrap();
        assert_eq!((d.alpha, d.fuel), ((-8, 8), 32));
        let e = parse_domain("x=5..3; alpha=0..0; fuel=1").unwrap_err();
        assert!(e.message.contains("empty interval"));
        let d = parse_domain("x=0..1; alpha=0..0; fuel=1").unwrap();
        assert_eq!(d.size(), 2);
        assert!(parse_domain("x=0..1; fuel=0").is_err());
        assert!(parse_domain_for("x=0..1", [&var("y")]).is_err());
        assert_eq!(parse_domain(&d.to_string()).unwrap(), d);
    }

    #[test]
    fn triple_files() {
        let t = parse_triple_file(
            "# from the inductive reasoning example\npartial_incorrectness; [x % 4 = 0]; loop.ngcl; [x = 12]\n",
        )
        .unwrap();
        assert_eq!(t.kind, TripleKind::PartialIncorrectness);
        assert_eq!(t.program_path, "loop.ngcl");
        assert!(parse_triple_file("bogus; 1; p; 2").is_err());
        let e = parse_triple_file("total_correctness; [x >; p; 1").unwrap_err();
        assert!(e.span.start >= 19);
    }

    #[test]
    fn errors_never_panic() {
        for s in ["", "(", "{", "if", "x :=", "[", "min(1)", "Sup . x", "1/0", "99999999999999999999", "x % -1", "}"] {
            let _ = parse_program(s);
            let _ = parse_quantity(s);
            let _ = parse_bexpr(s);
            let _ = parse_domain(s);
        }
    }
}
