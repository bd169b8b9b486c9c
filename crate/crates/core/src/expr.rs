//! A small real-valued expression language.
//!
//! Symbols, boundary symbols, test functions and custom radial weights are
//! all given as text and parsed into an [`Expr`]. The grammar is
//!
//! ```text
//! expr   := term (("+" | "-") term)*
//! term   := factor (("*" | "/") factor)*
//! factor := "-" factor | power
//! power  := atom ("^" factor)?
//! atom   := NUMBER | IDENT | IDENT "(" expr ("," expr)* ")" | "(" expr ")"
//! ```
//!
//! so `^` is right-associative and `-x^2` parses as `-(x^2)`.
//!
//! For repeated evaluation (quadrature sweeps) an expression is compiled into
//! a [`Program`] whose variables are resolved to slots once.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use thiserror::Error;

/// Parse failures. Offsets are byte offsets into the source text.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum ParseError {
    #[error("syntax error at offset {offset}: {message}")]
    Syntax { offset: usize, message: String },
    #[error("unknown function '{name}' at offset {offset}")]
    UnknownFunction { name: String, offset: usize },
    #[error("unknown identifier '{name}' at offset {offset}")]
    UnknownIdentifier { name: String, offset: usize },
}

impl ParseError {
    pub fn offset(&self) -> usize {
        match self {
            ParseError::Syntax { offset, .. }
            | ParseError::UnknownFunction { offset, .. }
            | ParseError::UnknownIdentifier { offset, .. } => *offset,
        }
    }
}

/// Evaluation failures.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvalError {
    #[error("unbound variable '{0}'")]
    Unbound(String),
    #[error("domain error in '{expr}': {reason}")]
    Domain { expr: String, reason: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

impl BinOp {
    fn symbol(self) -> &'static str {
        match self {
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Mul => "*",
            BinOp::Div => "/",
            BinOp::Pow => "^",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Func {
    Sin,
    Cos,
    Tan,
    Exp,
    Log,
    Sqrt,
    Abs,
    Min,
    Max,
}

impl Func {
    fn from_name(name: &str) -> Option<Func> {
        Some(match name {
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "tan" => Func::Tan,
            "exp" => Func::Exp,
            "log" => Func::Log,
            "sqrt" => Func::Sqrt,
            "abs" => Func::Abs,
            "min" => Func::Min,
            "max" => Func::Max,
            _ => return None,
        })
    }

    pub fn name(self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Tan => "tan",
            Func::Exp => "exp",
            Func::Log => "log",
            Func::Sqrt => "sqrt",
            Func::Abs => "abs",
            Func::Min => "min",
            Func::Max => "max",
        }
    }

    fn variadic(self) -> bool {
        matches!(self, Func::Min | Func::Max)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Constant {
    Pi,
    E,
}

impl Constant {
    fn from_name(name: &str) -> Option<Constant> {
        match name {
            "pi" => Some(Constant::Pi),
            "e" => Some(Constant::E),
            _ => None,
        }
    }

    pub fn value(self) -> f64 {
        match self {
            Constant::Pi => std::f64::consts::PI,
            Constant::E => std::f64::consts::E,
        }
    }
}

/// Expression tree.
#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Num(f64),
    Const(Constant),
    Var(String),
    Neg(Box<Expr>),
    Binary(BinOp, Box<Expr>, Box<Expr>),
    Call(Func, Vec<Expr>),
}

/// Variable bindings for [`evaluate`].
pub type Bindings = BTreeMap<String, f64>;

/// Parses `source` accepting any identifier that is not a named constant as a
/// variable.
pub fn parse(source: &str) -> Result<Expr, ParseError> {
    Parser::new(source, None).parse_all()
}

/// Parses `source`, rejecting bare identifiers that are neither named
/// constants nor in `allowed`.
pub fn parse_with_vars(source: &str, allowed: &[&str]) -> Result<Expr, ParseError> {
    Parser::new(source, Some(allowed)).parse_all()
}

/// Evaluates `e` against named bindings.
pub fn evaluate(e: &Expr, b: &Bindings) -> Result<f64, EvalError> {
    e.eval_with(&|name| b.get(name).copied())
}

/// The set of variable names occurring in `e`.
pub fn free_variables(e: &Expr) -> BTreeSet<String> {
    let mut out = BTreeSet::new();
    e.collect_vars(&mut out);
    out
}

impl Expr {
    fn collect_vars(&self, out: &mut BTreeSet<String>) {
        match self {
            Expr::Num(_) | Expr::Const(_) => {}
            Expr::Var(v) => {
                out.insert(v.clone());
            }
            Expr::Neg(a) => a.collect_vars(out),
            Expr::Binary(_, a, b) => {
                a.collect_vars(out);
                b.collect_vars(out);
            }
            Expr::Call(_, args) => args.iter().for_each(|a| a.collect_vars(out)),
        }
    }

    pub fn free_variables(&self) -> BTreeSet<String> {
        free_variables(self)
    }

    /// Replaces every occurrence of variable `name` with `with`.
    pub fn substitute(&self, name: &str, with: &Expr) -> Expr {
        match self {
            Expr::Var(v) if v == name => with.clone(),
            Expr::Num(_) | Expr::Const(_) | Expr::Var(_) => self.clone(),
            Expr::Neg(a) => Expr::Neg(Box::new(a.substitute(name, with))),
            Expr::Binary(op, a, b) => Expr::Binary(
                *op,
                Box::new(a.substitute(name, with)),
                Box::new(b.substitute(name, with)),
            ),
            Expr::Call(f, args) => {
                Expr::Call(*f, args.iter().map(|a| a.substitute(name, with)).collect())
            }
        }
    }

    fn eval_with(&self, lookup: &dyn Fn(&str) -> Option<f64>) -> Result<f64, EvalError> {
        match self {
            Expr::Num(v) => Ok(*v),
            Expr::Const(c) => Ok(c.value()),
            Expr::Var(name) => lookup(name).ok_or_else(|| EvalError::Unbound(name.clone())),
            Expr::Neg(a) => Ok(-a.eval_with(lookup)?),
            Expr::Binary(op, a, b) => {
                let x = a.eval_with(lookup)?;
                let y = b.eval_with(lookup)?;
                apply_binary(*op, x, y).map_err(|reason| self.domain(reason))
            }
            Expr::Call(f, args) => {
                let mut vals = Vec::with_capacity(args.len());
                for a in args {
                    vals.push(a.eval_with(lookup)?);
                }
                apply_func(*f, &vals).map_err(|reason| self.domain(reason))
            }
        }
    }

    fn domain(&self, reason: &str) -> EvalError {
        EvalError::Domain {
            expr: self.to_string(),
            reason: reason.to_string(),
        }
    }

    fn precedence(&self) -> u8 {
        match self {
            Expr::Binary(BinOp::Add | BinOp::Sub, ..) => 1,
            Expr::Binary(BinOp::Mul | BinOp::Div, ..) => 2,
            Expr::Neg(_) => 3,
            Expr::Binary(BinOp::Pow, ..) => 4,
            Expr::Num(v) if v.is_sign_negative() => 3,
            _ => 5,
        }
    }
}

fn apply_binary(op: BinOp, x: f64, y: f64) -> Result<f64, &'static str> {
    match op {
        BinOp::Add => Ok(x + y),
        BinOp::Sub => Ok(x - y),
        BinOp::Mul => Ok(x * y),
        BinOp::Div => {
            if y == 0.0 {
                Err("division by zero")
            } else {
                Ok(x / y)
            }
        }
        BinOp::Pow => {
            let v = x.powf(y);
            if v.is_nan() && !x.is_nan() && !y.is_nan() {
                Err("negative base with non-integer exponent")
            } else {
                Ok(v)
            }
        }
    }
}

fn apply_func(f: Func, v: &[f64]) -> Result<f64, &'static str> {
    Ok(match f {
        Func::Sin => v[0].sin(),
        Func::Cos => v[0].cos(),
        Func::Tan => v[0].tan(),
        Func::Exp => v[0].exp(),
        Func::Log => {
            if v[0] <= 0.0 {
                return Err("log of a non-positive number");
            }
            v[0].ln()
        }
        Func::Sqrt => {
            if v[0] < 0.0 {
                return Err("sqrt of a negative number");
            }
            v[0].sqrt()
        }
        Func::Abs => v[0].abs(),
        Func::Min => v.iter().copied().fold(f64::INFINITY, f64::min),
        Func::Max => v.iter().copied().fold(f64::NEG_INFINITY, f64::max),
    })
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fn wrap(f: &mut fmt::Formatter<'_>, e: &Expr, paren: bool) -> fmt::Result {
            if paren {
                write!(f, "({e})")
            } else {
                write!(f, "{e}")
            }
        }
        match self {
            Expr::Num(v) => write!(f, "{v}"),
            Expr::Const(Constant::Pi) => f.write_str("pi"),
            Expr::Const(Constant::E) => f.write_str("e"),
            Expr::Var(v) => f.write_str(v),
            Expr::Neg(a) => {
                f.write_str("-")?;
                wrap(f, a, a.precedence() < 3)
            }
            Expr::Binary(op, a, b) => {
                let (lmin, rmin) = match op {
                    BinOp::Add | BinOp::Sub => (1, 2),
                    BinOp::Mul | BinOp::Div => (2, 3),
                    BinOp::Pow => (5, 3),
                };
                wrap(f, a, a.precedence() < lmin)?;
                if *op == BinOp::Pow {
                    f.write_str("^")?;
                } else {
                    write!(f, " {} ", op.symbol())?;
                }
                wrap(f, b, b.precedence() < rmin)
            }
            Expr::Call(func, args) => {
                write!(f, "{}(", func.name())?;
                for (i, a) in args.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{a}")?;
                }
                f.write_str(")")
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Sym(char),
    End,
}

struct Parser<'a> {
    src: &'a str,
    allowed: Option<&'a [&'a str]>,
    toks: Vec<(Tok, usize)>,
    pos: usize,
    lex_error: Option<ParseError>,
}

impl<'a> Parser<'a> {
    fn new(src: &'a str, allowed: Option<&'a [&'a str]>) -> Self {
        let (toks, lex_error) = match lex(src) {
            Ok(t) => (t, None),
            Err(e) => (Vec::new(), Some(e)),
        };
        Parser {
            src,
            allowed,
            toks,
            pos: 0,
            lex_error,
        }
    }

    fn parse_all(mut self) -> Result<Expr, ParseError> {
        if let Some(e) = self.lex_error.take() {
            return Err(e);
        }
        if self.src.trim().is_empty() {
            return Err(ParseError::Syntax {
                offset: 0,
                message: "empty expression".into(),
            });
        }
        let e = self.expr()?;
        match self.peek() {
            Tok::End => Ok(e),
            t => Err(self.unexpected(&t)),
        }
    }

    fn peek(&self) -> Tok {
        self.toks[self.pos].0.clone()
    }

    fn offset(&self) -> usize {
        self.toks[self.pos].1
    }

    fn bump(&mut self) {
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
    }

    fn unexpected(&self, t: &Tok) -> ParseError {
        let message = match t {
            Tok::End => "unexpected end of input".to_string(),
            Tok::Num(v) => format!("unexpected number {v}"),
            Tok::Ident(s) => format!("unexpected identifier '{s}'"),
            Tok::Sym(c) => format!("unexpected '{c}'"),
        };
        ParseError::Syntax {
            offset: self.offset(),
            message,
        }
    }

    fn expect(&mut self, c: char) -> Result<(), ParseError> {
        match self.peek() {
            Tok::Sym(s) if s == c => {
                self.bump();
                Ok(())
            }
            t => Err(ParseError::Syntax {
                offset: self.offset(),
                message: format!("expected '{c}', found {}", describe(&t)),
            }),
        }
    }

    fn expr(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.term()?;
        loop {
            let op = match self.peek() {
                Tok::Sym('+') => BinOp::Add,
                Tok::Sym('-') => BinOp::Sub,
                _ => return Ok(lhs),
            };
            self.bump();
            let rhs = self.term()?;
            lhs = Expr::Binary(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn term(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.factor()?;
        loop {
            let op = match self.peek() {
                Tok::Sym('*') => BinOp::Mul,
                Tok::Sym('/') => BinOp::Div,
                _ => return Ok(lhs),
            };
            self.bump();
            let rhs = self.factor()?;
            lhs = Expr::Binary(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn factor(&mut self) -> Result<Expr, ParseError> {
        if self.peek() == Tok::Sym('-') {
            self.bump();
            return Ok(Expr::Neg(Box::new(self.factor()?)));
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr, ParseError> {
        let base = self.atom()?;
        if self.peek() == Tok::Sym('^') {
            self.bump();
            let exp = self.factor()?;
            return Ok(Expr::Binary(BinOp::Pow, Box::new(base), Box::new(exp)));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Expr, ParseError> {
        let offset = self.offset();
        match self.peek() {
            Tok::Num(v) => {
                self.bump();
                Ok(Expr::Num(v))
            }
            Tok::Sym('(') => {
                self.bump();
                let e = self.expr()?;
                self.expect(')')?;
                Ok(e)
            }
            Tok::Ident(name) => {
                self.bump();
                if self.peek() == Tok::Sym('(') {
                    let func = Func::from_name(&name).ok_or_else(|| ParseError::UnknownFunction {
                        name: name.clone(),
                        offset,
                    })?;
                    self.bump();
                    let mut args = vec![self.expr()?];
                    while self.peek() == Tok::Sym(',') {
                        self.bump();
                        args.push(self.expr()?);
                    }
                    self.expect(')')?;
                    let ok = if func.variadic() {
                        args.len() >= 2
                    } else {
                        args.len() == 1
                    };
                    if !ok {
                        return Err(ParseError::Syntax {
                            offset,
                            message: format!(
                                "wrong number of arguments to '{}': {}",
                                func.name(),
                                args.len()
                            ),
                        });
                    }
                    return Ok(Expr::Call(func, args));
                }
                if let Some(c) = Constant::from_name(&name) {
                    return Ok(Expr::Const(c));
                }
                match self.allowed {
                    Some(allowed) if !allowed.contains(&name.as_str()) => {
                        Err(ParseError::UnknownIdentifier { name, offset })
                    }
                    _ => Ok(Expr::Var(name)),
                }
            }
            t => Err(self.unexpected(&t)),
        }
    }
}

fn describe(t: &Tok) -> String {
    match t {
        Tok::End => "end of input".into(),
        Tok::Num(v) => format!("number {v}"),
        Tok::Ident(s) => format!("'{s}'"),
        Tok::Sym(c) => format!("'{c}'"),
    }
}

fn lex(src: &str) -> Result<Vec<(Tok, usize)>, ParseError> {
    let bytes = src.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        if c.is_ascii_whitespace() {
            i += 1;
        } else if c.is_ascii_digit() || (c == b'.' && bytes.get(i + 1).is_some_and(u8::is_ascii_digit)) {
            let start = i;
            while i < bytes.len() && bytes[i].is_ascii_digit() {
                i += 1;
            }
            if i < bytes.len() && bytes[i] == b'.' {
                i += 1;
                while i < bytes.len() && bytes[i].is_ascii_digit() {
                    i += 1;
                }
            }
            if i < bytes.len() && (bytes[i] == b'e' || bytes[i] == b'E') {
                let mut j = i + 1;
                if j < bytes.len() && (bytes[j] == b'+' || bytes[j] == b'-') {
                    j += 1;
                }
                if j < bytes.len() && bytes[j].is_ascii_digit() {
                    while j < bytes.len() && bytes[j].is_ascii_digit() {
                        j += 1;
                    }
                    i = j;
                }
            }
            let text = &src[start..i];
            let v: f64 = text.parse().map_err(|_| ParseError::Syntax {
                offset: start,
                message: format!("malformed number '{text}'"),
            })?;
            out.push((Tok::Num(v), start));
        } else if c.is_ascii_alphabetic() || c == b'_' {
            let start = i;
            while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                i += 1;
            }
            out.push((Tok::Ident(src[start..i].to_string()), start));
        } else if b"+-*/^(),".contains(&c) {
            out.push((Tok::Sym(c as char), i));
            i += 1;
        } else {
            let ch = src[i..].chars().next().unwrap_or('?');
            return Err(ParseError::Syntax {
                offset: i,
                message: format!("unexpected character '{ch}'"),
            });
        }
    }
    out.push((Tok::End, src.len()));
    Ok(out)
}

#[derive(Debug, Clone)]
enum Node {
    Num(f64),
    Slot(usize),
    Neg(Box<Node>),
    Binary(BinOp, Box<Node>, Box<Node>),
    Call(Func, Vec<Node>),
}

/// An expression with its variables resolved to positional slots.
#[derive(Debug, Clone)]
pub struct Program {
    source: Expr,
    slots: Vec<String>,
    root: Node,
}

impl Program {
    /// Compiles `e` with variables taken from `slots` in order. Every free
    /// variable of `e` must appear in `slots`.
    pub fn compile(e: &Expr, slots: &[&str]) -> Result<Program, EvalError> {
        fn go(e: &Expr, slots: &[&str]) -> Result<Node, EvalError> {
            Ok(match e {
                Expr::Num(v) => Node::Num(*v),
                Expr::Const(c) => Node::Num(c.value()),
                Expr::Var(name) => Node::Slot(
                    slots
                        .iter()
                        .position(|s| s == name)
                        .ok_or_else(|| EvalError::Unbound(name.clone()))?,
                ),
                Expr::Neg(a) => Node::Neg(Box::new(go(a, slots)?)),
                Expr::Binary(op, a, b) => {
                    Node::Binary(*op, Box::new(go(a, slots)?), Box::new(go(b, slots)?))
                }
                Expr::Call(f, args) => Node::Call(
                    *f,
                    args.iter().map(|a| go(a, slots)).collect::<Result<_, _>>()?,
                ),
            })
        }
        Ok(Program {
            source: e.clone(),
            slots: slots.iter().map(|s| s.to_string()).collect(),
            root: go(e, slots)?,
        })
    }

    pub fn expr(&self) -> &Expr {
        &self.source
    }

    pub fn slots(&self) -> &[String] {
        &self.slots
    }

    /// Evaluates with `values[i]` bound to slot `i`.
    pub fn eval(&self, values: &[f64]) -> Result<f64, EvalError> {
        debug_assert_eq!(values.len(), self.slots.len());
        match eval_node(&self.root, values) {
            Ok(v) => Ok(v),
            // Re-walk the source tree to name the failing sub-expression.
            Err(()) => {
                let err = self
                    .source
                    .eval_with(&|name| {
                        self.slots.iter().position(|s| s == name).map(|i| values[i])
                    })
                    .err();
                Err(err.unwrap_or_else(|| EvalError::Domain {
                    expr: self.source.to_string(),
                    reason: "evaluation failed".into(),
                }))
            }
        }
    }
}

fn eval_node(n: &Node, vals: &[f64]) -> Result<f64, ()> {
    match n {
        Node::Num(v) => Ok(*v),
        Node::Slot(i) => Ok(vals[*i]),
        Node::Neg(a) => Ok(-eval_node(a, vals)?),
        Node::Binary(op, a, b) => {
            let x = eval_node(a, vals)?;
            let y = eval_node(b, vals)?;
            apply_binary(*op, x, y).map_err(|_| ())
        }
        Node::Call(f, args) => match args.as_slice() {
            [a] => apply_func(*f, &[eval_node(a, vals)?]).map_err(|_| ()),
            _ => {
                let mut v = Vec::with_capacity(args.len());
                for a in args {
                    v.push(eval_node(a, vals)?);
                }
                apply_func(*f, &v).map_err(|_| ())
            }
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn eval_str(s: &str, vars: &[(&str, f64)]) -> Result<f64, EvalError> {
        let b: Bindings = vars.iter().map(|(k, v)| (k.to_string(), *v)).collect();
        evaluate(&parse(s).unwrap(), &b)
    }

    #[test]
    fn parses_function_call() {
        assert_eq!(
            parse("cos(theta)").unwrap(),
            Expr::Call(Func::Cos, vec![Expr::Var("theta".into())])
        );
    }

    #[test]
    fn power_is_right_associative() {
        assert_eq!(eval_str("2^3^2", &[]).unwrap(), 512.0);
    }

    #[test]
    fn unary_minus_below_power() {
        assert_eq!(eval_str("-x^2", &[("x", 3.0)]).unwrap(), -9.0);
        assert_eq!(eval_str("2^-1", &[]).unwrap(), 0.5);
        assert_eq!(eval_str("--2", &[]).unwrap(), 2.0);
    }

    #[test]
    fn syntax_error_offset() {
        let err = parse("r*+2").unwrap_err();
        assert!(matches!(err, ParseError::Syntax { offset: 2, .. }), "{err:?}");
        assert!(parse("").is_err());
        assert!(parse("(1+2").is_err());
        assert!(parse("1 2").is_err());
        assert!(parse("3 $ 4").is_err());
    }

    #[test]
    fn unknown_names() {
        assert!(matches!(
            parse("foo(1)"),
            Err(ParseError::UnknownFunction { .. })
        ));
        let err = parse_with_vars("cos(thetaa)", &["r", "theta"]).unwrap_err();
        assert_eq!(err.to_string(), "unknown identifier 'thetaa' at offset 4");
        assert!(parse("min(1)").is_err());
        assert!(parse("sin(1, 2)").is_err());
    }

    #[test]
    fn evaluation_examples() {
        assert_eq!(eval_str("x^2", &[("x", 3.0)]).unwrap(), 9.0);
        let v = eval_str("cos(theta)", &[("theta", std::f64::consts::PI)]).unwrap();
        assert!((v + 1.0).abs() < 1e-15);
        let v = eval_str("exp(-r^2)", &[("r", 1.0)]).unwrap();
        assert!((v - 0.36787944117).abs() < 1e-10);
        assert_eq!(eval_str("max(1, 4, 2) - min(3, -1)", &[]).unwrap(), 5.0);
        assert_eq!(eval_str("1.5e2 + .5", &[]).unwrap(), 150.5);
        assert!((eval_str("pi + e", &[]).unwrap() - 5.859874482048838).abs() < 1e-15);
    }

    #[test]
    fn evaluation_errors() {
        assert!(matches!(eval_str("x", &[]), Err(EvalError::Unbound(_))));
        for s in ["log(0)", "log(-1)", "sqrt(-2)", "1/(x-x)"] {
            match eval_str(s, &[("x", 1.0)]) {
                Err(EvalError::Domain { .. }) => {}
                other => panic!("{s}: {other:?}"),
            }
        }
        match eval_str("2 + sqrt(x - 3)", &[("x", 1.0)]) {
            Err(EvalError::Domain { expr, .. }) => assert_eq!(expr, "sqrt(x - 3)"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn free_variable_sets() {
        let names = |s: &str| free_variables(&parse(s).unwrap()).into_iter().collect::<Vec<_>>();
        assert_eq!(names("cos(theta)"), ["theta"]);
        assert!(names("3.5").is_empty());
        assert_eq!(names("r*cos(theta)+x"), ["r", "theta", "x"]);
        assert!(names("pi*e").is_empty());
    }

    #[test]
    fn program_matches_tree_walk() {
        let e = parse("r*cos(theta) + x^2 - max(y, 0.5)").unwrap();
        let p = Program::compile(&e, &["r", "theta", "x", "y"]).unwrap();
        let vals = [0.3, 1.2, -0.7, 0.9];
        let b: Bindings = ["r", "theta", "x", "y"]
            .iter()
            .zip(vals)
            .map(|(k, v)| (k.to_string(), v))
            .collect();
        assert_eq!(p.eval(&vals).unwrap(), evaluate(&e, &b).unwrap());
        assert!(Program::compile(&e, &["r", "theta"]).is_err());
        let bad = Program::compile(&parse("log(r)").unwrap(), &["r"]).unwrap();
        assert!(matches!(bad.eval(&[0.0]), Err(EvalError::Domain { .. })));
    }

    #[test]
    fn substitution() {
        let e = parse("r*cos(theta)").unwrap().substitute("r", &Expr::Num(1.0));
        let b: Bindings = [("theta".to_string(), 0.25)].into_iter().collect();
        assert_eq!(evaluate(&e, &b).unwrap(), 0.25f64.cos());
        assert!(!free_variables(&e).contains("r"));
    }

    #[test]
    fn pythagorean_identity() {
        use rand::{Rng, SeedableRng};
        let e = parse("sin(x)^2+cos(x)^2").unwrap();
        let p = Program::compile(&e, &["x"]).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for _ in 0..1000 {
            let x: f64 = rng.gen_range(-10.0..10.0);
            let v = p.eval(&[x]).unwrap();
            assert!((v - 1.0).abs() <= 1e-12);
            assert_eq!(v.to_bits(), p.eval(&[x]).unwrap().to_bits());
        }
    }

    fn arb_expr() -> impl Strategy<Value = Expr> {
        let leaf = prop_oneof![
            (0.0f64..1e6).prop_map(Expr::Num),
            prop_oneof![Just("r"), Just("theta"), Just("x")].prop_map(|s| Expr::Var(s.into())),
            prop_oneof![Just(Constant::Pi), Just(Constant::E)].prop_map(Expr::Const),
        ];
        leaf.prop_recursive(5, 48, 3, |inner| {
            prop_oneof![
                inner.clone().prop_map(|e| Expr::Neg(Box::new(e))),
                (
                    prop_oneof![
                        Just(BinOp::Add),
                        Just(BinOp::Sub),
                        Just(BinOp::Mul),
                        Just(BinOp::Div),
                        Just(BinOp::Pow)
                    ],
                    inner.clone(),
                    inner.clone()
                )
                    .prop_map(|(op, a, b)| Expr::Binary(op, Box::new(a), Box::new(b))),
                (
                    prop_oneof![Just(Func::Sin), Just(Func::Exp), Just(Func::Abs)],
                    inner.clone()
                )
                    .prop_map(|(f, a)| Expr::Call(f, vec![a])),
                (inner.clone(), inner).prop_map(|(a, b)| Expr::Call(Func::Max, vec![a, b])),
            ]
        })
    }

    proptest! {
        #[test]
        fn display_round_trips(e in arb_expr()) {
            let text = e.to_string();
            let back = parse(&text).unwrap();
            prop_assert_eq!(&back, &e, "{}", text);
            prop_assert_eq!(parse(&back.to_string()).unwrap(), back);
        }
    }
}
