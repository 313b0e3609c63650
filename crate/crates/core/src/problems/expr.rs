//! Infix expression language: lexer, recursive-descent parser, printer and
//! evaluator.
//!
//! Precedence from tightest: `^` (right-associative, exponent parsed at the
//! unary level so `2^-x` works), unary `-`, `* /`, `+ -`. Functions are
//! `sin cos exp sqrt abs`; the constants `pi` and `e` are folded to numbers.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Func {
    Sin,
    Cos,
    Exp,
    Sqrt,
    Abs,
}

impl Func {
    fn from_name(s: &str) -> Option<Func> {
        Some(match s {
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "exp" => Func::Exp,
            "sqrt" => Func::Sqrt,
            "abs" => Func::Abs,
            _ => return None,
        })
    }

    pub fn name(self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Exp => "exp",
            Func::Sqrt => "sqrt",
            Func::Abs => "abs",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Expr {
    Const(f64),
    Var(String),
    Neg(Box<Expr>),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, Box<Expr>),
    Call(Func, Box<Expr>),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ParseErrorKind {
    #[error("empty expression")]
    Empty,
    #[error("unexpected character `{0}`")]
    UnexpectedChar(char),
    #[error("unexpected `{0}`")]
    UnexpectedToken(String),
    #[error("unexpected end of input")]
    UnexpectedEnd,
    #[error("unbalanced parenthesis")]
    UnbalancedParen,
    #[error("unknown identifier `{0}`")]
    UnknownIdentifier(String),
    #[error("`{0}` must be called like `{0}(...)`")]
    MissingCall(String),
    #[error("malformed number `{0}`")]
    BadNumber(String),
}

/// Syntax error with the 0-based character position where it was detected.
#[derive(Debug, Clone, PartialEq, Error)]
#[error("{kind} at position {pos}")]
pub struct ParseError {
    pub pos: usize,
    pub kind: ParseErrorKind,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvalError {
    #[error("domain error in `{expr}`: {reason}")]
    Domain { expr: String, reason: &'static str },
    #[error("`{0}` evaluated to a non-finite value")]
    NonFinite(String),
    #[error("variable `{0}` has no value")]
    Unbound(String),
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Op(char),
    LParen,
    RParen,
    End,
}

fn lex(text: &str) -> Result<Vec<(Tok, usize)>, ParseError> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        if c.is_whitespace() {
            i += 1;
        } else if c.is_ascii_digit() || c == '.' {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_digit() || chars[i] == '.') {
                i += 1;
            }
            if i < chars.len() && (chars[i] == 'e' || chars[i] == 'E') {
                let mut k = i + 1;
                if k < chars.len() && (chars[k] == '+' || chars[k] == '-') {
                    k += 1;
                }
                if k < chars.len() && chars[k].is_ascii_digit() {
                    while k < chars.len() && chars[k].is_ascii_digit() {
                        k += 1;
                    }
                    i = k;
                }
            }
            let s: String = chars[start..i].iter().collect();
            let v = s.parse::<f64>().map_err(|_| ParseError {
                pos: start,
                kind: ParseErrorKind::BadNumber(s.clone()),
            })?;
            out.push((Tok::Num(v), start));
        } else if c.is_alphabetic() || c == '_' {
            let start = i;
            while i < chars.len() && (chars[i].is_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            out.push((Tok::Ident(chars[start..i].iter().collect()), start));
        } else if "+-*/^".contains(c) {
            out.push((Tok::Op(c), i));
            i += 1;
        } else if c == '(' {
            out.push((Tok::LParen, i));
            i += 1;
        } else if c == ')' {
            out.push((Tok::RParen, i));
            i += 1;
        } else {
            return Err(ParseError {
                pos: i,
                kind: ParseErrorKind::UnexpectedChar(c),
            });
        }
    }
    out.push((Tok::End, chars.len()));
    Ok(out)
}

struct Parser<'a> {
    toks: Vec<(Tok, usize)>,
    pos: usize,
    depth: usize,
    known: Option<&'a [String]>,
}

impl Parser<'_> {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].0
    }

    fn at(&self) -> usize {
        self.toks[self.pos].1
    }

    fn fail<T>(&self, kind: ParseErrorKind) -> Result<T, ParseError> {
        Err(ParseError {
            pos: self.at(),
            kind,
        })
    }

    fn unexpected<T>(&self) -> Result<T, ParseError> {
        match self.peek() {
            Tok::End => self.fail(if self.depth > 0 {
                ParseErrorKind::UnbalancedParen
            } else {
                ParseErrorKind::UnexpectedEnd
            }),
            Tok::RParen if self.depth == 0 => self.fail(ParseErrorKind::UnbalancedParen),
            t => {
                let shown = match t {
                    Tok::Num(v) => v.to_string(),
                    Tok::Ident(s) => s.clone(),
                    Tok::Op(c) => c.to_string(),
                    Tok::LParen => "(".into(),
                    Tok::RParen => ")".into(),
                    Tok::End => unreachable!(),
                };
                self.fail(ParseErrorKind::UnexpectedToken(shown))
            }
        }
    }

    fn sum(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.product()?;
        loop {
            match self.peek() {
                Tok::Op('+') => {
                    self.pos += 1;
                    lhs = Expr::Add(Box::new(lhs), Box::new(self.product()?));
                }
                Tok::Op('-') => {
                    self.pos += 1;
                    lhs = Expr::Sub(Box::new(lhs), Box::new(self.product()?));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn product(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.unary()?;
        loop {
            match self.peek() {
                Tok::Op('*') => {
                    self.pos += 1;
                    lhs = Expr::Mul(Box::new(lhs), Box::new(self.unary()?));
                }
                Tok::Op('/') => {
                    self.pos += 1;
                    lhs = Expr::Div(Box::new(lhs), Box::new(self.unary()?));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn unary(&mut self) -> Result<Expr, ParseError> {
        if *self.peek() == Tok::Op('-') {
            self.pos += 1;
            return Ok(Expr::Neg(Box::new(self.unary()?)));
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr, ParseError> {
        let base = self.atom()?;
        if *self.peek() == Tok::Op('^') {
            self.pos += 1;
            let exp = self.unary()?;
            return Ok(Expr::Pow(Box::new(base), Box::new(exp)));
        }
        Ok(base)
    }

    fn parenthesized(&mut self) -> Result<Expr, ParseError> {
        // caller has checked for `(`
        self.pos += 1;
        self.depth += 1;
        let inner = self.sum()?;
        if *self.peek() != Tok::RParen {
            return self.unexpected();
        }
        self.pos += 1;
        self.depth -= 1;
        Ok(inner)
    }

    fn atom(&mut self) -> Result<Expr, ParseError> {
        match self.peek().clone() {
            Tok::Num(v) => {
                self.pos += 1;
                Ok(Expr::Const(v))
            }
            Tok::LParen => self.parenthesized(),
            Tok::Ident(name) => {
                let start = self.at();
                self.pos += 1;
                let called = *self.peek() == Tok::LParen;
                if let Some(f) = Func::from_name(&name) {
                    if !called {
                        return Err(ParseError {
                            pos: start,
                            kind: ParseErrorKind::MissingCall(name),
                        });
                    }
                    return Ok(Expr::Call(f, Box::new(self.parenthesized()?)));
                }
                if called {
                    return Err(ParseError {
                        pos: start,
                        kind: ParseErrorKind::UnknownIdentifier(name),
                    });
                }
                match name.as_str() {
                    "pi" => Ok(Expr::Const(std::f64::consts::PI)),
                    "e" => Ok(Expr::Const(std::f64::consts::E)),
                    _ => {
                        if let Some(known) = self.known {
                            if !known.contains(&name) {
                                return Err(ParseError {
                                    pos: start,
                                    kind: ParseErrorKind::UnknownIdentifier(name),
                                });
                            }
                        }
                        Ok(Expr::Var(name))
                    }
                }
            }
            _ => self.unexpected(),
        }
    }
}

fn parse_inner(text: &str, known: Option<&[String]>) -> Result<Expr, ParseError> {
    let toks = lex(text)?;
    if toks.len() == 1 {
        return Err(ParseError {
            pos: 0,
            kind: ParseErrorKind::Empty,
        });
    }
    let mut p = Parser {
        toks,
        pos: 0,
        depth: 0,
        known,
    };
    let e = p.sum()?;
    if *p.peek() != Tok::End {
        return p.unexpected();
    }
    Ok(e)
}

/// Parses `text`; any identifier that is not a function or constant is a
/// variable.
pub fn parse_expr(text: &str) -> Result<Expr, ParseError> {
    parse_inner(text, None)
}

/// Parses `text`, rejecting variables not listed in `vars`.
pub fn parse_expr_with_vars(text: &str, vars: &[String]) -> Result<Expr, ParseError> {
    parse_inner(text, Some(vars))
}

impl Expr {
    fn level(&self) -> u8 {
        match self {
            Expr::Add(..) | Expr::Sub(..) => 1,
            Expr::Mul(..) | Expr::Div(..) => 2,
            Expr::Neg(_) => 3,
            Expr::Pow(..) => 4,
            Expr::Const(v) if *v < 0.0 || v.is_sign_negative() => 3,
            _ => 5,
        }
    }

    /// Variable names in order of first appearance.
    pub fn variables(&self) -> Vec<String> {
        let mut out = Vec::new();
        self.collect_vars(&mut out);
        out
    }

    fn collect_vars(&self, out: &mut Vec<String>) {
        match self {
            Expr::Const(_) => {}
            Expr::Var(n) => {
                if !out.contains(n) {
                    out.push(n.clone());
                }
            }
            Expr::Neg(a) | Expr::Call(_, a) => a.collect_vars(out),
            Expr::Add(a, b)
            | Expr::Sub(a, b)
            | Expr::Mul(a, b)
            | Expr::Div(a, b)
            | Expr::Pow(a, b) => {
                a.collect_vars(out);
                b.collect_vars(out);
            }
        }
    }

    pub fn is_constant(&self) -> bool {
        match self {
            Expr::Const(_) => true,
            Expr::Var(_) => false,
            Expr::Neg(a) | Expr::Call(_, a) => a.is_constant(),
            Expr::Add(a, b)
            | Expr::Sub(a, b)
            | Expr::Mul(a, b)
            | Expr::Div(a, b)
            | Expr::Pow(a, b) => a.is_constant() && b.is_constant(),
        }
    }

    /// Evaluates with variable values supplied by `env`.
    pub fn eval<F>(&self, env: &F) -> Result<f64, EvalError>
    where
        F: Fn(&str) -> Option<f64>,
    {
        let v = match self {
            Expr::Const(c) => *c,
            Expr::Var(n) => env(n).ok_or_else(|| EvalError::Unbound(n.clone()))?,
            Expr::Neg(a) => -a.eval(env)?,
            Expr::Add(a, b) => a.eval(env)? + b.eval(env)?,
            Expr::Sub(a, b) => a.eval(env)? - b.eval(env)?,
            Expr::Mul(a, b) => a.eval(env)? * b.eval(env)?,
            Expr::Div(a, b) => {
                let num = a.eval(env)?;
                let den = b.eval(env)?;
                if den == 0.0 {
                    return Err(self.domain("division by zero"));
                }
                num / den
            }
            Expr::Pow(a, b) => {
                let base = a.eval(env)?;
                let exp = b.eval(env)?;
                if base < 0.0 && exp.fract() != 0.0 {
                    return Err(self.domain("negative base with fractional exponent"));
                }
                if base == 0.0 && exp < 0.0 {
                    return Err(self.domain("zero to a negative power"));
                }
                if exp.fract() == 0.0 && exp.abs() <= 64.0 {
                    base.powi(exp as i32)
                } else {
                    base.powf(exp)
                }
            }
            Expr::Call(f, a) => {
                let x = a.eval(env)?;
                match f {
                    Func::Sin => x.sin(),
                    Func::Cos => x.cos(),
                    Func::Exp => x.exp(),
                    Func::Abs => x.abs(),
                    Func::Sqrt => {
                        if x < 0.0 {
                            return Err(self.domain("square root of a negative number"));
                        }
                        x.sqrt()
                    }
                }
            }
        };
        if v.is_finite() {
            Ok(v)
        } else {
            Err(EvalError::NonFinite(self.to_string()))
        }
    }

    fn domain(&self, reason: &'static str) -> EvalError {
        EvalError::Domain {
            expr: self.to_string(),
            reason,
        }
    }

    /// Evaluates with `vars[i]` bound to `values[i]`.
    pub fn eval_at(&self, vars: &[String], values: &[f64]) -> Result<f64, EvalError> {
        self.eval(&|n: &str| vars.iter().position(|v| v == n).map(|i| values[i]))
    }
}

fn write_child(f: &mut fmt::Formatter<'_>, e: &Expr, min_level: u8) -> fmt::Result {
    if e.level() < min_level {
        write!(f, "({e})")
    } else {
        write!(f, "{e}")
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Const(v) => write!(f, "{v}"),
            Expr::Var(n) => f.write_str(n),
            Expr::Neg(a) => {
                f.write_str("-")?;
                write_child(f, a, 3)
            }
            Expr::Add(a, b) | Expr::Sub(a, b) => {
                write_child(f, a, 1)?;
                f.write_str(if matches!(self, Expr::Add(..)) {
                    " + "
                } else {
                    " - "
                })?;
                write_child(f, b, 2)
            }
            Expr::Mul(a, b) | Expr::Div(a, b) => {
                write_child(f, a, 2)?;
                f.write_str(if matches!(self, Expr::Mul(..)) {
                    "*"
                } else {
                    "/"
                })?;
                write_child(f, b, 3)
            }
            Expr::Pow(a, b) => {
                write_child(f, a, 5)?;
                f.write_str("^")?;
                write_child(f, b, 3)
            }
            Expr::Call(func, a) => write!(f, "{}({a})", func.name()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn var(n: &str) -> Box<Expr> {
        Box::new(Expr::Var(n.into()))
    }
    fn num(v: f64) -> Box<Expr> {
        Box::new(Expr::Const(v))
    }

    #[test]
    fn rosenbrock_text_has_two_variables() {
        let e = parse_expr("x^2 + 100*(y - x^2)^2").unwrap();
        assert_eq!(e.variables(), vec!["x".to_string(), "y".to_string()]);
    }

    #[test]
    fn unary_minus_is_looser_than_power() {
        assert_eq!(
            parse_expr("-x^2").unwrap(),
            Expr::Neg(Box::new(Expr::Pow(var("x"), num(2.0))))
        );
        assert_eq!(
            parse_expr("2^-x").unwrap(),
            Expr::Pow(num(2.0), Box::new(Expr::Neg(var("x"))))
        );
        // right associative
        assert_eq!(
            parse_expr("a^b^c").unwrap(),
            Expr::Pow(var("a"), Box::new(Expr::Pow(var("b"), var("c"))))
        );
        // left associative
        assert_eq!(
            parse_expr("a - b - c").unwrap(),
            Expr::Sub(Box::new(Expr::Sub(var("a"), var("b"))), var("c"))
        );
    }

    #[test]
    fn syntax_errors_carry_positions() {
        let err = parse_expr("sin(x").unwrap_err();
        assert_eq!(err.pos, 5);
        assert_eq!(err.kind, ParseErrorKind::UnbalancedParen);
        assert_eq!(parse_expr("   ").unwrap_err().kind, ParseErrorKind::Empty);
        assert_eq!(
            parse_expr("x)").unwrap_err(),
            ParseError {
                pos: 1,
                kind: ParseErrorKind::UnbalancedParen
            }
        );
        assert_eq!(
            parse_expr("x + foo(2)").unwrap_err(),
            ParseError {
                pos: 4,
                kind: ParseErrorKind::UnknownIdentifier("foo".into())
            }
        );
        assert_eq!(
            parse_expr("x $ y").unwrap_err().kind,
            ParseErrorKind::UnexpectedChar('$')
        );
        assert_eq!(parse_expr("x +").unwrap_err().pos, 3);
        let known = vec!["x".to_string()];
        assert_eq!(
            parse_expr_with_vars("x + z", &known).unwrap_err(),
            ParseError {
                pos: 4,
                kind: ParseErrorKind::UnknownIdentifier("z".into())
            }
        );
    }

    #[test]
    fn evaluation_and_domain_errors() {
        let e = parse_expr("x^2 + y").unwrap();
        let names = vec!["x".to_string(), "y".to_string()];
        assert_eq!(e.eval_at(&names, &[2.0, 1.0]).unwrap(), 5.0);
        assert!(matches!(
            parse_expr("sqrt(-1)").unwrap().eval_at(&[], &[]),
            Err(EvalError::Domain { .. })
        ));
        assert!(matches!(
            parse_expr("1/(x - x)")
                .unwrap()
                .eval_at(&names, &[1.0, 0.0]),
            Err(EvalError::Domain {
                reason: "division by zero",
                ..
            })
        ));
        assert!(matches!(
            parse_expr("exp(1000)").unwrap().eval_at(&[], &[]),
            Err(EvalError::NonFinite(_))
        ));
        assert_eq!(
            parse_expr("q").unwrap().eval_at(&[], &[]),
            Err(EvalError::Unbound("q".into()))
        );
    }

    #[test]
    fn printing_keeps_structure() {
        for text in [
            "-x^2",
            "(-x)^2",
            "a - (b - c)",
            "a/(b*c)",
            "-(a + b)*c",
            "2^-x",
            "(a^b)^c",
            "sin(x)^2 + cos(2*pi*y)",
            "--x",
            "1e-7*x",
        ] {
            let e = parse_expr(text).unwrap();
            let printed = e.to_string();
            assert_eq!(parse_expr(&printed).unwrap(), e, "{text} -> {printed}");
        }
    }
}
