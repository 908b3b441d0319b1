//! One-variable real expressions.
//!
//! ```text
//! expr    := term (('+'|'-') term)* ;
//! term    := factor (('*'|'/') factor)* ;
//! factor  := '-' factor | primary ('^' factor)? ;
//! primary := NUMBER | 'x' | '(' expr ')' | FUNC '(' expr ')' ;
//! FUNC    := 'exp'|'log'|'sin'|'cos'|'abs'|'sqrt' ;
//! ```
//!
//! `^` is right-associative and binds tighter than unary minus, so `-x^2`
//! is `-(x^2)`. Evaluation never yields NaN or infinity: such results are
//! reported as [`EvalError`]s.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Func {
    Exp,
    Log,
    Sin,
    Cos,
    Abs,
    Sqrt,
}

impl Func {
    fn from_name(name: &str) -> Option<Self> {
        Some(match name {
            "exp" => Func::Exp,
            "log" => Func::Log,
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "abs" => Func::Abs,
            "sqrt" => Func::Sqrt,
            _ => return None,
        })
    }

    pub fn name(self) -> &'static str {
        match self {
            Func::Exp => "exp",
            Func::Log => "log",
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Abs => "abs",
            Func::Sqrt => "sqrt",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Expr {
    Num(f64),
    Var,
    Neg(Box<Expr>),
    Binary(BinOp, Box<Expr>, Box<Expr>),
    Call(Func, Box<Expr>),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseError {
    #[error("syntax error at position {position}: {message}")]
    Syntax { position: usize, message: String },
    #[error("unknown identifier `{name}` at position {position}")]
    UnknownIdentifier { name: String, position: usize },
}

impl ParseError {
    /// 1-based character position of the error.
    pub fn position(&self) -> usize {
        match self {
            ParseError::Syntax { position, .. } | ParseError::UnknownIdentifier { position, .. } => {
                *position
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvalError {
    #[error("division by zero at x = {x}")]
    DivisionByZero { x: f64 },
    #[error("log of nonpositive value {arg} at x = {x}")]
    LogDomain { x: f64, arg: f64 },
    #[error("sqrt of negative value {arg} at x = {x}")]
    SqrtDomain { x: f64, arg: f64 },
    #[error("non-finite result at x = {x}")]
    NonFinite { x: f64 },
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Sym(char),
    End,
}

struct Lexer<'a> {
    chars: Vec<char>,
    pos: usize,
    _src: &'a str,
}

impl<'a> Lexer<'a> {
    fn new(src: &'a str) -> Self {
        Self {
            chars: src.chars().collect(),
            pos: 0,
            _src: src,
        }
    }

    fn syntax(position: usize, message: impl Into<String>) -> ParseError {
        ParseError::Syntax {
            position,
            message: message.into(),
        }
    }

    /// Returns the token and its 1-based start position.
    fn next(&mut self) -> Result<(Tok, usize), ParseError> {
        while self.pos < self.chars.len() && self.chars[self.pos].is_whitespace() {
            self.pos += 1;
        }
        let start = self.pos;
        let Some(&c) = self.chars.get(self.pos) else {
            return Ok((Tok::End, start + 1));
        };
        if c.is_ascii_digit() {
            while self.peek_is(|c| c.is_ascii_digit()) {
                self.pos += 1;
            }
            if self.peek_is(|c| c == '.') {
                self.pos += 1;
                while self.peek_is(|c| c.is_ascii_digit()) {
                    self.pos += 1;
                }
            }
            if self.peek_is(|c| c == 'e' || c == 'E') {
                let mark = self.pos;
                self.pos += 1;
                if self.peek_is(|c| c == '+' || c == '-') {
                    self.pos += 1;
                }
                if !self.peek_is(|c| c.is_ascii_digit()) {
                    return Err(Self::syntax(self.pos + 1, "expected exponent digits"));
                }
                while self.peek_is(|c| c.is_ascii_digit()) {
                    self.pos += 1;
                }
                debug_assert!(self.pos > mark);
            }
            let text: String = self.chars[start..self.pos].iter().collect();
            let value: f64 = text
                .parse()
                .map_err(|_| Self::syntax(start + 1, format!("invalid number `{text}`")))?;
            if !value.is_finite() {
                return Err(Self::syntax(start + 1, format!("number `{text}` out of range")));
            }
            return Ok((Tok::Num(value), start + 1));
        }
        if c.is_ascii_alphabetic() || c == '_' {
            while self.peek_is(|c| c.is_ascii_alphanumeric() || c == '_') {
                self.pos += 1;
            }
            let ident = self.chars[start..self.pos].iter().collect();
            return Ok((Tok::Ident(ident), start + 1));
        }
        if "+-*/^()".contains(c) {
            self.pos += 1;
            return Ok((Tok::Sym(c), start + 1));
        }
        Err(Self::syntax(start + 1, format!("unexpected character `{c}`")))
    }

    fn peek_is(&self, f: impl Fn(char) -> bool) -> bool {
        self.chars.get(self.pos).is_some_and(|&c| f(c))
    }
}

struct Parser<'a> {
    lexer: Lexer<'a>,
    tok: Tok,
    at: usize,
}

impl<'a> Parser<'a> {
    fn new(src: &'a str) -> Result<Self, ParseError> {
        let mut lexer = Lexer::new(src);
        let (tok, at) = lexer.next()?;
        Ok(Self { lexer, tok, at })
    }

    fn bump(&mut self) -> Result<(), ParseError> {
        let (tok, at) = self.lexer.next()?;
        self.tok = tok;
        self.at = at;
        Ok(())
    }

    fn unexpected(&self, wanted: &str) -> ParseError {
        let found = match &self.tok {
            Tok::Num(v) => format!("number {v}"),
            Tok::Ident(s) => format!("`{s}`"),
            Tok::Sym(c) => format!("`{c}`"),
            Tok::End => "end of input".to_string(),
        };
        Lexer::syntax(self.at, format!("expected {wanted}, found {found}"))
    }

    fn expect_sym(&mut self, c: char) -> Result<(), ParseError> {
        if self.tok == Tok::Sym(c) {
            self.bump()
        } else {
            Err(self.unexpected(&format!("`{c}`")))
        }
    }

    fn expr(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.term()?;
        loop {
            let op = match self.tok {
                Tok::Sym('+') => BinOp::Add,
                Tok::Sym('-') => BinOp::Sub,
                _ => return Ok(lhs),
            };
            self.bump()?;
            let rhs = self.term()?;
            lhs = Expr::Binary(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn term(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.factor()?;
        loop {
            let op = match self.tok {
                Tok::Sym('*') => BinOp::Mul,
                Tok::Sym('/') => BinOp::Div,
                _ => return Ok(lhs),
            };
            self.bump()?;
            let rhs = self.factor()?;
            lhs = Expr::Binary(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn factor(&mut self) -> Result<Expr, ParseError> {
        if self.tok == Tok::Sym('-') {
            self.bump()?;
            return Ok(Expr::Neg(Box::new(self.factor()?)));
        }
        let base = self.primary()?;
        if self.tok == Tok::Sym('^') {
            self.bump()?;
            let exponent = self.factor()?;
            return Ok(Expr::Binary(BinOp::Pow, Box::new(base), Box::new(exponent)));
        }
        Ok(base)
    }

    fn primary(&mut self) -> Result<Expr, ParseError> {
        match self.tok.clone() {
            Tok::Num(v) => {
                self.bump()?;
                Ok(Expr::Num(v))
            }
            Tok::Sym('(') => {
                self.bump()?;
                let inner = self.expr()?;
                self.expect_sym(')')?;
                Ok(inner)
            }
            Tok::Ident(name) => {
                let at = self.at;
                if name == "x" {
                    self.bump()?;
                    return Ok(Expr::Var);
                }
                let Some(func) = Func::from_name(&name) else {
                    return Err(ParseError::UnknownIdentifier { name, position: at });
                };
                self.bump()?;
                self.expect_sym('(')?;
                let arg = self.expr()?;
                self.expect_sym(')')?;
                Ok(Expr::Call(func, Box::new(arg)))
            }
            _ => Err(self.unexpected("a number, `x`, `(` or a function")),
        }
    }
}

impl Expr {
    pub fn parse(text: &str) -> Result<Self, ParseError> {
        if text.trim().is_empty() {
            return Err(Lexer::syntax(1, "empty expression"));
        }
        let mut p = Parser::new(text)?;
        let e = p.expr()?;
        if p.tok != Tok::End {
            return Err(p.unexpected("an operator or end of input"));
        }
        Ok(e)
    }

    pub fn eval<T: Scalar>(&self, x: T) -> Result<T, EvalError> {
        let xf = x.as_f64();
        let finite = |v: T| {
            if v.is_finite() {
                Ok(v)
            } else {
                Err(EvalError::NonFinite { x: xf })
            }
        };
        match self {
            Expr::Num(v) => Ok(T::of(*v)),
            Expr::Var => Ok(x),
            Expr::Neg(e) => Ok(-e.eval(x)?),
            Expr::Binary(op, a, b) => {
                let a = a.eval(x)?;
                let b = b.eval(x)?;
                finite(match op {
                    BinOp::Add => a + b,
                    BinOp::Sub => a - b,
                    BinOp::Mul => a * b,
                    BinOp::Div => {
                        if b.is_zero() {
                            return Err(EvalError::DivisionByZero { x: xf });
                        }
                        a / b
                    }
                    BinOp::Pow => {
                        // integer powers by repeated multiplication stay exact
                        // where the result is representable
                        if b.fract().is_zero() && b.abs() <= T::of(64.0) {
                            a.powi(b.to_i32().unwrap_or(0))
                        } else {
                            a.powf(b)
                        }
                    }
                })
            }
            Expr::Call(f, arg) => {
                let v = arg.eval(x)?;
                finite(match f {
                    Func::Exp => v.exp(),
                    Func::Log => {
                        if v <= T::zero() {
                            return Err(EvalError::LogDomain { x: xf, arg: v.as_f64() });
                        }
                        v.ln()
                    }
                    Func::Sin => v.sin(),
                    Func::Cos => v.cos(),
                    Func::Abs => v.abs(),
                    Func::Sqrt => {
                        if v < T::zero() {
                            return Err(EvalError::SqrtDomain { x: xf, arg: v.as_f64() });
                        }
                        v.sqrt()
                    }
                })
            }
        }
    }

    fn precedence(&self) -> u8 {
        match self {
            Expr::Binary(BinOp::Add | BinOp::Sub, ..) => 1,
            Expr::Binary(BinOp::Mul | BinOp::Div, ..) => 2,
            Expr::Neg(_) => 3,
            Expr::Binary(BinOp::Pow, ..) => 4,
            Expr::Num(_) | Expr::Var | Expr::Call(..) => 5,
        }
    }
}

fn write_wrapped(f: &mut fmt::Formatter<'_>, e: &Expr, wrap: bool) -> fmt::Result {
    if wrap {
        write!(f, "({e})")
    } else {
        write!(f, "{e}")
    }
}

/// Prints the minimal parenthesization that reparses to the same tree.
impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Num(v) => write!(f, "{v}"),
            Expr::Var => write!(f, "x"),
            Expr::Neg(e) => {
                write!(f, "-")?;
                write_wrapped(f, e, e.precedence() < 3)
            }
            Expr::Call(func, arg) => write!(f, "{}({arg})", func.name()),
            Expr::Binary(op, a, b) => {
                let (sym, level) = match op {
                    BinOp::Add => ('+', 1),
                    BinOp::Sub => ('-', 1),
                    BinOp::Mul => ('*', 2),
                    BinOp::Div => ('/', 2),
                    BinOp::Pow => ('^', 4),
                };
                if *op == BinOp::Pow {
                    // base must be a primary; exponent may be any factor
                    write_wrapped(f, a, a.precedence() < 5)?;
                    write!(f, "^")?;
                    write_wrapped(f, b, b.precedence() < 3)
                } else {
                    write_wrapped(f, a, a.precedence() < level)?;
                    write!(f, "{sym}")?;
                    write_wrapped(f, b, b.precedence() <= level)
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn p(s: &str) -> Expr {
        Expr::parse(s).unwrap()
    }

    fn num(v: f64) -> Box<Expr> {
        Box::new(Expr::Num(v))
    }

    #[test]
    fn parses_reference_maps() {
        assert_eq!(p("x+1"), Expr::Binary(BinOp::Add, Box::new(Expr::Var), num(1.0)));
        assert_eq!(
            p("2*exp(-x)"),
            Expr::Binary(
                BinOp::Mul,
                num(2.0),
                Box::new(Expr::Call(Func::Exp, Box::new(Expr::Neg(Box::new(Expr::Var)))))
            )
        );
    }

    #[test]
    fn double_plus_is_error_at_three() {
        let err = Expr::parse("x++1").unwrap_err();
        assert_eq!(err.position(), 3);
        assert!(matches!(err, ParseError::Syntax { .. }));
    }

    #[test]
    fn unknown_identifier() {
        let err = Expr::parse("2*y").unwrap_err();
        assert_eq!(
            err,
            ParseError::UnknownIdentifier {
                name: "y".into(),
                position: 3
            }
        );
    }

    #[test]
    fn precedence_rules() {
        assert_eq!(p("-x^2").eval(3.0).unwrap(), -9.0);
        assert_eq!(p("2^3^2").eval(0.0).unwrap(), 512.0);
        assert_eq!(p("8/4/2").eval(0.0).unwrap(), 1.0);
        assert_eq!(p("2^-1").eval(0.0).unwrap(), 0.5);
        assert_eq!(p("1 - 2 - 3").eval(0.0).unwrap(), -4.0);
    }

    #[test]
    fn eval_examples() {
        assert_eq!(p("exp(-x)").eval(0.0).unwrap(), 1.0);
        assert_eq!(p("x+1").eval(2.0).unwrap(), 3.0);
        assert!(matches!(
            p("1/x").eval(0.0),
            Err(EvalError::DivisionByZero { .. })
        ));
        assert!(matches!(p("log(x)").eval(-1.0), Err(EvalError::LogDomain { .. })));
        assert!(matches!(p("sqrt(x)").eval(-1.0), Err(EvalError::SqrtDomain { .. })));
        assert!(matches!(p("x^0.5").eval(-1.0), Err(EvalError::NonFinite { .. })));
        assert!(matches!(p("exp(x)").eval(1e4), Err(EvalError::NonFinite { .. })));
    }

    #[test]
    fn eval_in_single_precision() {
        let v: f32 = p("2*exp(-x)").eval(0.0f32).unwrap();
        assert_eq!(v, 2.0);
    }

    #[test]
    fn malformed_inputs() {
        for (src, pos) in [("", 1), ("(x", 3), ("x)", 2), ("exp x", 5), ("3 $", 3), ("1e", 3)] {
            let err = Expr::parse(src).unwrap_err();
            assert_eq!(err.position(), pos, "{src}: {err}");
        }
    }

    #[test]
    fn display_examples() {
        assert_eq!(p("-(x+1)").to_string(), "-(x+1)");
        assert_eq!(p("(2^3)^2").to_string(), "(2^3)^2");
        assert_eq!(p("x - (1 - x)").to_string(), "x-(1-x)");
        assert_eq!(p("(-x)^2").to_string(), "(-x)^2");
        assert_eq!(p("2*-x").to_string(), "2*-x");
    }

    fn arb_expr() -> impl Strategy<Value = Expr> {
        let leaf = prop_oneof![
            Just(Expr::Var),
            (0.0f64..1e6).prop_map(Expr::Num),
            (0u32..1000).prop_map(|n| Expr::Num(n as f64)),
        ];
        leaf.prop_recursive(5, 48, 2, |inner| {
            let op = prop_oneof![
                Just(BinOp::Add),
                Just(BinOp::Sub),
                Just(BinOp::Mul),
                Just(BinOp::Div),
                Just(BinOp::Pow)
            ];
            let func = prop_oneof![
                Just(Func::Exp),
                Just(Func::Log),
                Just(Func::Sin),
                Just(Func::Cos),
                Just(Func::Abs),
                Just(Func::Sqrt)
            ];
            prop_oneof![
                inner.clone().prop_map(|e| Expr::Neg(Box::new(e))),
                (op, inner.clone(), inner.clone())
                    .prop_map(|(o, a, b)| Expr::Binary(o, Box::new(a), Box::new(b))),
                (func, inner).prop_map(|(f, a)| Expr::Call(f, Box::new(a))),
            ]
        })
    }

    proptest! {
        #[test]
        fn unparse_reparse_identity(e in arb_expr()) {
            let text = e.to_string();
            let back = Expr::parse(&text).unwrap();
            prop_assert_eq!(back, e);
        }

        #[test]
        fn whitespace_is_ignored(e in arb_expr()) {
            // numbers print without exponents, so every operator char is a token
            let spaced: String = e
                .to_string()
                .chars()
                .map(|c| if "+-*/^()".contains(c) { format!(" {c}\t") } else { c.to_string() })
                .collect();
            prop_assert_eq!(Expr::parse(&spaced).unwrap(), e);
        }
    }
}
