//! The line-oriented problem format.
//!
//! ```text
//! problem dfkn2
//! vars x y z t
//! equation D_z(u_y/u_x) - D_x(u_t/u_x) = 0
//! lax D_t - lam*D_z - u_t/u_x*D_x
//! lax D_y - (lam + u_y/u_x)*D_x
//! twist f1_1 = -u_xz/u_x
//! twist f2_1 = -u_xx/u_x
//! orientation forward
//! ```
//!
//! Other directives: `ranking t > z > y > x` (greatest first; default is
//! declaration order with later variables ranking higher), `param alpha`,
//! `let m = <expr>`, `assume <expr> != 0`, and
//! `ansatz f1_0|f1_1|f2_0|f2_1|all <expr>, <expr>, ...`.

use std::collections::HashMap;
use std::fmt;

use num_bigint::BigInt;
use num_traits::ToPrimitive;

use crate::error::{Error, Result};
use crate::jet::{genericity_factors, push_unique, total_derivative, Ranking};
use crate::kernel::{Expr, Q};
use crate::lax::{FirstOrderOperator, LaxPair};
use crate::recursion::{slot_name, AnsatzBasis, Orientation};
use crate::symbol::{JetVar, MultiIndex, Symbol, Unknown, Var};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OrientationChoice {
    Forward,
    Swapped,
    Both,
}

impl OrientationChoice {
    pub fn parse(s: &str) -> Option<OrientationChoice> {
        match s {
            "forward" => Some(OrientationChoice::Forward),
            "swapped" => Some(OrientationChoice::Swapped),
            "both" => Some(OrientationChoice::Both),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            OrientationChoice::Forward => "forward",
            OrientationChoice::Swapped => "swapped",
            OrientationChoice::Both => "both",
        }
    }

    pub fn orientations(self) -> Vec<Orientation> {
        match self {
            OrientationChoice::Forward => vec![Orientation::Forward],
            OrientationChoice::Swapped => vec![Orientation::Swapped],
            OrientationChoice::Both => vec![Orientation::Forward, Orientation::Swapped],
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Problem {
    pub name: String,
    pub vars: Vec<Var>,
    pub ranking: Ranking,
    pub params: Vec<Symbol>,
    /// The numerator of the equation's canonical form.
    pub equation: Expr,
    /// The Lax operators as written, before splitting.
    pub lax: [FirstOrderOperator; 2],
    pub pair: LaxPair,
    /// Declared nonzero expressions and the factors of the equation's
    /// cleared denominator.
    pub assumptions: Vec<Expr>,
    /// `twist[i][s]` is `f_{i+1}^s`; `None` when the file has no twist lines.
    pub twist: Option<[[Expr; 2]; 2]>,
    pub orientation: Option<OrientationChoice>,
    pub ansatz: Option<AnsatzBasis>,
    pub warnings: Vec<String>,
}

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Ident(String),
    Num(BigInt),
    Sym(char),
    Ne,
}

#[derive(Clone, Debug)]
struct Token {
    tok: Tok,
    col: usize,
}

fn lex(line: &str, lineno: usize) -> Result<Vec<Token>> {
    let chars: Vec<char> = line.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        let col = i + 1;
        if c == '#' {
            break;
        }
        if c.is_whitespace() {
            i += 1;
        } else if c.is_ascii_alphabetic() {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            out.push(Token { tok: Tok::Ident(chars[start..i].iter().collect()), col });
        } else if c.is_ascii_digit() {
            let start = i;
            while i < chars.len() && chars[i].is_ascii_digit() {
                i += 1;
            }
            let s: String = chars[start..i].iter().collect();
            out.push(Token { tok: Tok::Num(s.parse().expect("digits")), col });
        } else if c == '!' && chars.get(i + 1) == Some(&'=') {
            out.push(Token { tok: Tok::Ne, col });
            i += 2;
        } else if "+-*/^()=,>".contains(c) {
            out.push(Token { tok: Tok::Sym(c), col });
            i += 1;
        } else {
            return Err(perr(lineno, col, format!("unexpected character `{c}`")));
        }
    }
    Ok(out)
}

fn perr(line: usize, col: usize, message: impl Into<String>) -> Error {
    Error::Parse { line, col, message: message.into() }
}

#[derive(Clone, Debug)]
enum Value {
    Scalar(Expr),
    Op(FirstOrderOperator),
}

impl Value {
    fn op(self) -> FirstOrderOperator {
        match self {
            Value::Scalar(e) => FirstOrderOperator::scalar(e),
            Value::Op(o) => o,
        }
    }

    fn settled(op: FirstOrderOperator) -> Value {
        if op.is_scalar() {
            Value::Scalar(op.free)
        } else {
            Value::Op(op)
        }
    }
}

struct Scope {
    vars: Vec<Var>,
    params: HashMap<String, Symbol>,
    lets: HashMap<String, Expr>,
}

impl Scope {
    fn var(&self, c: char) -> Option<Var> {
        self.vars.iter().copied().find(|v| v.letter() == c)
    }
}

struct ExprParser<'a> {
    toks: &'a [Token],
    pos: usize,
    line: usize,
    end_col: usize,
    scope: &'a Scope,
}

impl<'a> ExprParser<'a> {
    fn col(&self) -> usize {
        self.toks.get(self.pos).map_or(self.end_col, |t| t.col)
    }

    fn err(&self, msg: impl Into<String>) -> Error {
        perr(self.line, self.col(), msg)
    }

    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|t| &t.tok)
    }

    fn eat(&mut self, c: char) -> bool {
        if self.peek() == Some(&Tok::Sym(c)) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, c: char) -> Result<()> {
        if self.eat(c) {
            Ok(())
        } else {
            Err(self.err(format!("expected `{c}`")))
        }
    }

    fn at_end(&self) -> bool {
        self.pos >= self.toks.len()
    }

    fn expr(&mut self) -> Result<Value> {
        let mut acc = self.term()?;
        loop {
            let neg = if self.eat('+') {
                false
            } else if self.eat('-') {
                true
            } else {
                return Ok(acc);
            };
            let rhs = self.term()?;
            acc = match (acc, rhs) {
                (Value::Scalar(a), Value::Scalar(b)) => Value::Scalar(if neg { &a - &b } else { &a + &b }),
                (a, b) => {
                    let (a, b) = (a.op(), b.op());
                    Value::settled(if neg { a.sub(&b) } else { a.add(&b) })
                }
            };
        }
    }

    fn term(&mut self) -> Result<Value> {
        let mut acc = self.unary()?;
        loop {
            let col = self.col();
            if self.eat('*') {
                let rhs = self.unary()?;
                acc = match (acc, rhs) {
                    (Value::Scalar(a), Value::Scalar(b)) => Value::Scalar(&a * &b),
                    (Value::Scalar(a), Value::Op(b)) => Value::settled(b.scale(&a)),
                    (Value::Op(a), Value::Scalar(b)) => Value::settled(a.compose_scalar(&b)?),
                    (Value::Op(_), Value::Op(_)) => {
                        return Err(perr(self.line, col, "product of two differential operators is not first order"))
                    }
                };
            } else if self.eat('/') {
                let rhs = self.unary()?;
                let Value::Scalar(b) = rhs else {
                    return Err(perr(self.line, col, "cannot divide by an operator"));
                };
                let inv = b.recip().map_err(|_| perr(self.line, col, "division by zero"))?;
                acc = match acc {
                    Value::Scalar(a) => Value::Scalar(&a * &inv),
                    Value::Op(a) => Value::settled(a.scale(&inv)),
                };
            } else {
                return Ok(acc);
            }
        }
    }

    fn unary(&mut self) -> Result<Value> {
        if self.eat('-') {
            return Ok(match self.unary()? {
                Value::Scalar(e) => Value::Scalar(-&e),
                Value::Op(o) => Value::Op(o.neg()),
            });
        }
        if self.eat('+') {
            return self.unary();
        }
        self.power()
    }

    fn power(&mut self) -> Result<Value> {
        let base = self.atom()?;
        let col = self.col();
        if !self.eat('^') {
            return Ok(base);
        }
        let neg = self.eat('-');
        let Some(Tok::Num(n)) = self.peek().cloned() else {
            return Err(self.err("expected an integer exponent"));
        };
        self.pos += 1;
        let Some(mut k) = n.to_i32() else {
            return Err(perr(self.line, col, "exponent too large"));
        };
        if neg {
            k = -k;
        }
        match base {
            Value::Scalar(e) => Ok(Value::Scalar(e.pow(k).map_err(|_| perr(self.line, col, "division by zero"))?)),
            Value::Op(_) => Err(perr(self.line, col, "powers of operators are not first order")),
        }
    }

    fn index(&self, letters: &str, col: usize) -> Result<MultiIndex> {
        let mut vars = Vec::new();
        for c in letters.chars() {
            match self.scope.var(c) {
                Some(v) => vars.push(v),
                None => return Err(perr(self.line, col, format!("`{c}` is not a declared variable"))),
            }
        }
        MultiIndex::from_vars(&vars).map_err(|e| perr(self.line, col, e.to_string()))
    }

    fn atom(&mut self) -> Result<Value> {
        let col = self.col();
        let Some(tok) = self.peek().cloned() else {
            return Err(self.err("unexpected end of expression"));
        };
        self.pos += 1;
        match tok {
            Tok::Num(n) => Ok(Value::Scalar(Expr::rational(Q::from_integer(n)))),
            Tok::Sym('(') => {
                let v = self.expr()?;
                self.expect(')')?;
                Ok(v)
            }
            Tok::Ident(name) => self.ident(&name, col),
            _ => Err(perr(self.line, col, "expected an expression")),
        }
    }

    fn ident(&mut self, name: &str, col: usize) -> Result<Value> {
        if let Some(e) = self.scope.lets.get(name) {
            return Ok(Value::Scalar(e.clone()));
        }
        if let Some(s) = self.scope.params.get(name) {
            return Ok(Value::Scalar(Expr::symbol(*s)));
        }
        if name == "lam" {
            return Ok(Value::Scalar(Expr::symbol(Symbol::lambda())));
        }
        if let Some(letter) = name.strip_prefix("D_") {
            let mut cs = letter.chars();
            let (Some(c), None) = (cs.next(), cs.next()) else {
                return Err(perr(self.line, col, format!("`{name}`: total derivatives take a single variable")));
            };
            let Some(v) = self.scope.var(c) else {
                return Err(perr(self.line, col, format!("`{c}` is not a declared variable")));
            };
            if self.eat('(') {
                let inner = self.expr()?;
                self.expect(')')?;
                let Value::Scalar(e) = inner else {
                    return Err(perr(self.line, col, "total derivatives apply to scalar expressions"));
                };
                return Ok(Value::Scalar(total_derivative(&e, v)?));
            }
            return Ok(Value::Op(FirstOrderOperator::derivative(v)));
        }
        let (head, letters) = match name.split_once('_') {
            Some((h, l)) => (h, l),
            None => (name, ""),
        };
        let unknown = match head {
            "u" => Some(Unknown::Field),
            "U" => Some(Unknown::Seed),
            "Ut" => Some(Unknown::Image),
            _ => None,
        };
        if let Some(unknown) = unknown {
            if name.ends_with('_') {
                return Err(perr(self.line, col, format!("`{name}`: empty derivative index")));
            }
            let idx = self.index(letters, col)?;
            return Ok(Value::Scalar(Expr::symbol(JetVar::new(unknown, idx).symbol())));
        }
        let mut cs = name.chars();
        if let (Some(c), None) = (cs.next(), cs.next()) {
            if let Some(v) = self.scope.var(c) {
                return Ok(Value::Scalar(Expr::symbol(Symbol::independent(v))));
            }
        }
        Err(perr(self.line, col, format!("unknown symbol `{name}`")))
    }
}

fn parse_value(toks: &[Token], line: usize, end_col: usize, scope: &Scope) -> Result<Value> {
    if toks.is_empty() {
        return Err(perr(line, end_col, "expected an expression"));
    }
    let mut p = ExprParser { toks, pos: 0, line, end_col, scope };
    let v = p.expr()?;
    if !p.at_end() {
        return Err(p.err("unexpected token"));
    }
    Ok(v)
}

fn parse_scalar(toks: &[Token], line: usize, end_col: usize, scope: &Scope) -> Result<Expr> {
    let col = toks.first().map_or(end_col, |t| t.col);
    match parse_value(toks, line, end_col, scope)? {
        Value::Scalar(e) => Ok(e),
        Value::Op(_) => Err(perr(line, col, "expected a scalar expression, found an operator")),
    }
}

fn split_top_level(toks: &[Token], sep: char) -> Vec<&[Token]> {
    let mut out = Vec::new();
    let mut depth = 0i32;
    let mut start = 0;
    for (i, t) in toks.iter().enumerate() {
        match t.tok {
            Tok::Sym('(') => depth += 1,
            Tok::Sym(')') => depth -= 1,
            Tok::Sym(c) if c == sep && depth == 0 => {
                out.push(&toks[start..i]);
                start = i + 1;
            }
            _ => {}
        }
    }
    out.push(&toks[start..]);
    out
}

fn slot_index(name: &str) -> Option<(usize, usize)> {
    match name {
        "f1_0" => Some((0, 0)),
        "f1_1" => Some((0, 1)),
        "f2_0" => Some((1, 0)),
        "f2_1" => Some((1, 1)),
        _ => None,
    }
}

fn ident_at(toks: &[Token], i: usize) -> Option<&str> {
    match toks.get(i).map(|t| &t.tok) {
        Some(Tok::Ident(s)) => Some(s),
        _ => None,
    }
}

const RESERVED: &[&str] = &["lam", "u", "U", "Ut"];

fn check_name(name: &str, line: usize, col: usize, scope: &Scope) -> Result<()> {
    if RESERVED.contains(&name) || name.starts_with("D_") || name.starts_with("u_") || name.starts_with("U_") || name.starts_with("Ut_") {
        return Err(perr(line, col, format!("`{name}` is reserved")));
    }
    if scope.params.contains_key(name) || scope.lets.contains_key(name) {
        return Err(perr(line, col, format!("`{name}` is already defined")));
    }
    let mut cs = name.chars();
    if let (Some(c), None) = (cs.next(), cs.next()) {
        if scope.var(c).is_some() {
            return Err(perr(line, col, format!("`{name}` is already a variable")));
        }
    }
    Ok(())
}

pub fn parse_problem(text: &str) -> Result<Problem> {
    let mut scope = Scope { vars: Vec::new(), params: HashMap::new(), lets: HashMap::new() };
    let mut name: Option<String> = None;
    let mut ranking: Option<Ranking> = None;
    let mut params = Vec::new();
    let mut equation: Option<(Expr, usize)> = None;
    let mut lax: Vec<(FirstOrderOperator, usize)> = Vec::new();
    let mut assumptions: Vec<Expr> = Vec::new();
    let mut twist: Option<[[Expr; 2]; 2]> = None;
    let mut orientation = None;
    let mut ansatz: Option<AnsatzBasis> = None;
    let mut warnings = Vec::new();

    for (k, raw) in text.lines().enumerate() {
        let line = k + 1;
        let toks = lex(raw, line)?;
        let Some(first) = toks.first() else { continue };
        let end_col = raw.chars().count() + 1;
        let Tok::Ident(directive) = &first.tok else {
            return Err(perr(line, first.col, "expected a directive"));
        };
        let rest = &toks[1..];
        let rest_col = rest.first().map_or(end_col, |t| t.col);
        match directive.as_str() {
            "problem" => {
                let (Some(n), 1) = (ident_at(rest, 0), rest.len()) else {
                    return Err(perr(line, rest_col, "expected `problem <name>`"));
                };
                name = Some(n.to_string());
            }
            "vars" => {
                if !scope.vars.is_empty() {
                    return Err(perr(line, first.col, "variables declared twice"));
                }
                for t in rest {
                    let Tok::Ident(s) = &t.tok else {
                        return Err(perr(line, t.col, "expected a variable name"));
                    };
                    let mut cs = s.chars();
                    let (Some(c), None) = (cs.next(), cs.next()) else {
                        return Err(perr(line, t.col, format!("`{s}`: variable names must be a single letter")));
                    };
                    let v = Var::new(c).map_err(|e| perr(line, t.col, e.to_string()))?;
                    if scope.vars.contains(&v) {
                        return Err(perr(line, t.col, format!("`{s}` declared twice")));
                    }
                    scope.vars.push(v);
                }
                if scope.vars.is_empty() {
                    return Err(perr(line, rest_col, "expected at least one variable"));
                }
            }
            "ranking" => {
                let mut order = Vec::new();
                for (i, t) in rest.iter().enumerate() {
                    if i % 2 == 1 {
                        if t.tok != Tok::Sym('>') {
                            return Err(perr(line, t.col, "expected `>`"));
                        }
                        continue;
                    }
                    let v = match &t.tok {
                        Tok::Ident(s) if s.chars().count() == 1 => scope.var(s.chars().next().unwrap()),
                        _ => None,
                    };
                    match v {
                        Some(v) if !order.contains(&v) => order.push(v),
                        _ => return Err(perr(line, t.col, "expected a declared variable not yet ranked")),
                    }
                }
                if order.len() != scope.vars.len() {
                    return Err(perr(line, rest_col, "the ranking must list every declared variable"));
                }
                ranking = Some(Ranking::new(order)?);
            }
            "param" => {
                for t in rest {
                    let Tok::Ident(s) = &t.tok else {
                        return Err(perr(line, t.col, "expected a parameter name"));
                    };
                    check_name(s, line, t.col, &scope)?;
                    let sym = Symbol::parameter(s).map_err(|e| perr(line, t.col, e.to_string()))?;
                    scope.params.insert(s.clone(), sym);
                    params.push(sym);
                }
            }
            "let" => {
                let (Some(id), Some(Tok::Sym('='))) = (ident_at(rest, 0), rest.get(1).map(|t| &t.tok)) else {
                    return Err(perr(line, rest_col, "expected `let <name> = <expr>`"));
                };
                check_name(id, line, rest_col, &scope)?;
                let e = parse_scalar(&rest[2..], line, end_col, &scope)?;
                scope.lets.insert(id.to_string(), e);
            }
            "equation" => {
                if equation.is_some() {
                    return Err(perr(line, first.col, "only one equation is allowed"));
                }
                let sides = split_top_level(rest, '=');
                let f = match sides.as_slice() {
                    [lhs] => parse_scalar(lhs, line, end_col, &scope)?,
                    [lhs, rhs] => {
                        let l = parse_scalar(lhs, line, end_col, &scope)?;
                        let r = parse_scalar(rhs, line, end_col, &scope)?;
                        &l - &r
                    }
                    _ => return Err(perr(line, rest_col, "expected `equation <expr> = <expr>`")),
                };
                equation = Some((f, rest_col));
            }
            "lax" => {
                let op = parse_value(rest, line, end_col, &scope)?.op();
                if op.is_scalar() {
                    return Err(perr(line, rest_col, "a Lax operator needs at least one D_ term"));
                }
                if lax.len() == 2 {
                    return Err(perr(line, first.col, "exactly two lax lines are allowed"));
                }
                lax.push((op, line));
            }
            "assume" => {
                let Some(ne) = rest.iter().position(|t| t.tok == Tok::Ne) else {
                    return Err(perr(line, rest_col, "expected `assume <expr> != 0`"));
                };
                let e = parse_scalar(&rest[..ne], line, end_col, &scope)?;
                let z = parse_scalar(&rest[ne + 1..], line, end_col, &scope)?;
                if !z.is_zero() {
                    return Err(perr(line, rest[ne].col, "expected `!= 0`"));
                }
                if e.is_zero() {
                    return Err(perr(line, rest_col, "assumed-nonzero expression is zero"));
                }
                push_unique(&mut assumptions, [e]);
            }
            "twist" => {
                let slot = ident_at(rest, 0).and_then(slot_index);
                let (Some((i, s)), Some(Tok::Sym('='))) = (slot, rest.get(1).map(|t| &t.tok)) else {
                    return Err(perr(line, rest_col, "expected `twist f1_0|f1_1|f2_0|f2_1 = <expr>`"));
                };
                let e = parse_scalar(&rest[2..], line, end_col, &scope)?;
                let t = twist.get_or_insert_with(|| {
                    [[Expr::zero(), Expr::zero()], [Expr::zero(), Expr::zero()]]
                });
                t[i][s] = e;
            }
            "orientation" => {
                let choice = ident_at(rest, 0).and_then(OrientationChoice::parse);
                match (choice, rest.len()) {
                    (Some(c), 1) => orientation = Some(c),
                    _ => return Err(perr(line, rest_col, "expected `orientation forward|swapped|both`")),
                }
            }
            "ansatz" => {
                let target = ident_at(rest, 0);
                let slots: Vec<(usize, usize)> = match target {
                    Some("all") => vec![(0, 0), (0, 1), (1, 0), (1, 1)],
                    Some(n) => match slot_index(n) {
                        Some(s) => vec![s],
                        None => return Err(perr(line, rest_col, "expected a slot f1_0|f1_1|f2_0|f2_1 or `all`")),
                    },
                    None => return Err(perr(line, rest_col, "expected a slot f1_0|f1_1|f2_0|f2_1 or `all`")),
                };
                let mut terms = Vec::new();
                if rest.len() > 1 {
                    for part in split_top_level(&rest[1..], ',') {
                        terms.push(parse_scalar(part, line, end_col, &scope)?);
                    }
                }
                let basis = ansatz.get_or_insert_with(AnsatzBasis::empty);
                for (i, s) in slots {
                    for t in &terms {
                        if !basis.slots[i][s].contains(t) {
                            basis.slots[i][s].push(t.clone());
                        }
                    }
                }
            }
            other => return Err(perr(line, first.col, format!("unknown directive `{other}`"))),
        }
    }

    let last = text.lines().count().max(1);
    let name = name.ok_or_else(|| perr(1, 1, "missing `problem <name>`"))?;
    if scope.vars.is_empty() {
        return Err(perr(last, 1, "missing `vars`"));
    }
    if scope.vars.len() < 3 {
        warnings.push(format!(
            "{} independent variables; the method targets three or more",
            scope.vars.len()
        ));
    }
    let ranking = match ranking {
        Some(r) => r,
        None => Ranking::from_declaration(&scope.vars)?,
    };
    let (f, eq_line_col) = equation.ok_or_else(|| perr(last, 1, "missing `equation`"))?;
    if f.contains_any(|s| s.as_jet().is_some_and(|j| j.unknown != Unknown::Field)) {
        return Err(Error::WrongUnknown("the equation may only involve u-jets".into()));
    }
    if f.contains_any(|s| s == Symbol::lambda()) {
        return Err(perr(last, eq_line_col, "the equation must not contain lam"));
    }
    push_unique(&mut assumptions, genericity_factors(f.den()));
    let equation = Expr::from_poly(f.num().clone());
    if !equation.contains_any(|s| s.as_jet().is_some_and(|j| j.order() >= 2)) {
        return Err(Error::Usage("the equation must involve a second-order (or higher) u-jet".into()));
    }
    if lax.len() != 2 {
        return Err(perr(last, 1, format!("expected exactly two lax lines, found {}", lax.len())));
    }
    let input = [lax[0].0.clone(), lax[1].0.clone()];
    let pair = LaxPair::new(input.clone(), &ranking)?;
    if let Some(t) = &twist {
        for (i, row) in t.iter().enumerate() {
            for (s, e) in row.iter().enumerate() {
                crate::recursion::check_twist_coefficient(e, &slot_name(i, s))?;
            }
        }
    }
    if let Some(b) = &ansatz {
        b.validate()?;
    }
    Ok(Problem {
        name,
        vars: scope.vars,
        ranking,
        params,
        equation,
        lax: input,
        pair,
        assumptions,
        twist,
        orientation,
        ansatz,
        warnings,
    })
}

impl fmt::Display for Problem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "problem {}", self.name)?;
        let vars: Vec<String> = self.vars.iter().map(|v| v.to_string()).collect();
        writeln!(f, "vars {}", vars.join(" "))?;
        writeln!(f, "ranking {}", self.ranking)?;
        if !self.params.is_empty() {
            let ps: Vec<String> = self.params.iter().map(|p| p.name()).collect();
            writeln!(f, "param {}", ps.join(" "))?;
        }
        writeln!(f, "equation {} = 0", self.equation)?;
        for op in &self.lax {
            writeln!(f, "lax {op}")?;
        }
        for a in &self.assumptions {
            writeln!(f, "assume {a} != 0")?;
        }
        if let Some(t) = &self.twist {
            for (i, row) in t.iter().enumerate() {
                for (s, e) in row.iter().enumerate() {
                    writeln!(f, "twist {} = {e}", slot_name(i, s))?;
                }
            }
        }
        if let Some(o) = self.orientation {
            writeln!(f, "orientation {}", o.name())?;
        }
        if let Some(b) = &self.ansatz {
            for (i, row) in b.slots.iter().enumerate() {
                for (s, terms) in row.iter().enumerate() {
                    let ts: Vec<String> = terms.iter().map(|t| t.to_string()).collect();
                    writeln!(f, "ansatz {} {}", slot_name(i, s), ts.join(", "))?;
                }
            }
        }
        Ok(())
    }
}
