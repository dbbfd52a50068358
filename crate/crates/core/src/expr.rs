//! A small expression language over the single variable `t`, used to write
//! the exponent residual of a barrier (e.g. `2*sqrt(t)`, `-t*abs(sin(t))`).
//!
//! Grammar:
//!
//! ```text
//! expr   := term (('+'|'-') term)*
//! term   := factor (('*'|'/') factor)*
//! factor := base ('^' factor)?
//! base   := number | 't' | func '(' expr (',' expr)? ')' | '(' expr ')' | '-' base
//! func   := sqrt | ln | exp | sin | cos | abs | min | max
//! ```
//!
//! Whitespace is ignored between tokens. `^` is right-associative and unary
//! minus binds tighter than `^` (so `-t^2` is `(-t)^2`).

use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ParseError {
    #[error("syntax error at offset {position}: expected {expected}")]
    Syntax { position: usize, expected: String },
    #[error("unknown identifier `{name}` at offset {position}")]
    UnknownIdentifier { name: String, position: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EvalErrorKind {
    LnOfNonPositive,
    SqrtOfNegative,
    DivisionByZero,
    ZeroToNegativePower,
    PowDomain,
    NonFinite,
    NegativeTime,
}

#[derive(Debug, Clone, PartialEq, Error)]
#[error("evaluation error at t={t}: {kind:?}")]
pub struct EvalError {
    pub kind: EvalErrorKind,
    pub t: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Sqrt,
    Ln,
    Exp,
    Sin,
    Cos,
    Abs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func2 {
    Min,
    Max,
}

/// Expression tree node.
#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Const(f64),
    T,
    Neg(Box<Expr>),
    Binary(BinOp, Box<Expr>, Box<Expr>),
    Call(Func, Box<Expr>),
    Call2(Func2, Box<Expr>, Box<Expr>),
}

impl Expr {
    pub fn constant(v: f64) -> Expr {
        Expr::Const(v)
    }

    pub fn binary(op: BinOp, lhs: Expr, rhs: Expr) -> Expr {
        Expr::Binary(op, Box::new(lhs), Box::new(rhs))
    }

    pub fn call(f: Func, arg: Expr) -> Expr {
        Expr::Call(f, Box::new(arg))
    }

    pub fn eval(&self, t: f64) -> Result<f64, EvalError> {
        let err = |kind| EvalError { kind, t };
        let v = match self {
            Expr::Const(c) => *c,
            Expr::T => t,
            Expr::Neg(e) => -e.eval(t)?,
            Expr::Binary(op, a, b) => {
                let x = a.eval(t)?;
                let y = b.eval(t)?;
                match op {
                    BinOp::Add => x + y,
                    BinOp::Sub => x - y,
                    BinOp::Mul => x * y,
                    BinOp::Div => {
                        if y == 0.0 {
                            return Err(err(EvalErrorKind::DivisionByZero));
                        }
                        x / y
                    }
                    BinOp::Pow => {
                        if x == 0.0 && y < 0.0 {
                            return Err(err(EvalErrorKind::ZeroToNegativePower));
                        }
                        let r = x.powf(y);
                        if r.is_nan() {
                            return Err(err(EvalErrorKind::PowDomain));
                        }
                        r
                    }
                }
            }
            Expr::Call(f, a) => {
                let x = a.eval(t)?;
                match f {
                    Func::Sqrt => {
                        if x < 0.0 {
                            return Err(err(EvalErrorKind::SqrtOfNegative));
                        }
                        x.sqrt()
                    }
                    Func::Ln => {
                        if x <= 0.0 {
                            return Err(err(EvalErrorKind::LnOfNonPositive));
                        }
                        x.ln()
                    }
                    Func::Exp => x.exp(),
                    Func::Sin => x.sin(),
                    Func::Cos => x.cos(),
                    Func::Abs => x.abs(),
                }
            }
            Expr::Call2(f, a, b) => {
                let x = a.eval(t)?;
                let y = b.eval(t)?;
                match f {
                    Func2::Min => x.min(y),
                    Func2::Max => x.max(y),
                }
            }
        };
        if v.is_finite() {
            Ok(v)
        } else {
            Err(err(EvalErrorKind::NonFinite))
        }
    }
}

/// Parsed barrier residual `t ↦ B̃(t)` (or an inflation log-factor `ln A(t)`).
///
/// Serializes as its source text in canonical printed form.
#[derive(Debug, Clone, PartialEq)]
pub struct TildeExpr {
    root: Expr,
}

impl TildeExpr {
    pub fn new(root: Expr) -> Self {
        TildeExpr { root }
    }

    pub fn zero() -> Self {
        TildeExpr {
            root: Expr::Const(0.0),
        }
    }

    pub fn root(&self) -> &Expr {
        &self.root
    }

    pub fn eval(&self, t: f64) -> Result<f64, EvalError> {
        if t < 0.0 || t.is_nan() {
            return Err(EvalError {
                kind: EvalErrorKind::NegativeTime,
                t,
            });
        }
        self.root.eval(t)
    }

    /// `self − other` as a new tree.
    pub fn minus(&self, other: &TildeExpr) -> TildeExpr {
        TildeExpr::new(Expr::binary(
            BinOp::Sub,
            self.root.clone(),
            other.root.clone(),
        ))
    }

    /// `self + other` as a new tree.
    pub fn plus(&self, other: &TildeExpr) -> TildeExpr {
        TildeExpr::new(Expr::binary(
            BinOp::Add,
            self.root.clone(),
            other.root.clone(),
        ))
    }

    /// True when the tree is syntactically the constant zero.
    pub fn is_literal_zero(&self) -> bool {
        matches!(self.root, Expr::Const(c) if c == 0.0)
    }
}

impl fmt::Display for TildeExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        print_expr(&self.root, f)
    }
}

impl std::str::FromStr for TildeExpr {
    type Err = ParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse_tilde(s)
    }
}

impl Serialize for TildeExpr {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for TildeExpr {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let text = String::deserialize(d)?;
        parse_tilde(&text).map_err(serde::de::Error::custom)
    }
}

/// Parse DSL text into an expression tree.
pub fn parse_tilde(text: &str) -> Result<TildeExpr, ParseError> {
    let tokens = lex(text)?;
    let mut p = Parser { tokens, pos: 0 };
    let root = p.expr()?;
    match p.peek() {
        Token { kind: Tok::End, .. } => Ok(TildeExpr { root }),
        tok => Err(ParseError::Syntax {
            position: tok.offset,
            expected: "operator or end of input".into(),
        }),
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
    Comma,
    End,
}

#[derive(Debug, Clone)]
struct Token {
    kind: Tok,
    offset: usize,
}

fn lex(text: &str) -> Result<Vec<Token>, ParseError> {
    let bytes = text.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        if c.is_ascii_whitespace() {
            i += 1;
            continue;
        }
        let start = i;
        let kind = match c {
            b'+' => Tok::Plus,
            b'-' => Tok::Minus,
            b'*' => {
                if bytes.get(i + 1) == Some(&b'*') {
                    return Err(ParseError::Syntax {
                        position: i,
                        expected: "operand (use '^' for exponentiation)".into(),
                    });
                }
                Tok::Star
            }
            b'/' => Tok::Slash,
            b'^' => Tok::Caret,
            b'(' => Tok::LParen,
            b')' => Tok::RParen,
            b',' => Tok::Comma,
            b'0'..=b'9' | b'.' => {
                let mut j = i;
                while j < bytes.len() && bytes[j].is_ascii_digit() {
                    j += 1;
                }
                if j < bytes.len() && bytes[j] == b'.' {
                    j += 1;
                    while j < bytes.len() && bytes[j].is_ascii_digit() {
                        j += 1;
                    }
                }
                if j < bytes.len() && (bytes[j] == b'e' || bytes[j] == b'E') {
                    let mut k = j + 1;
                    if k < bytes.len() && (bytes[k] == b'+' || bytes[k] == b'-') {
                        k += 1;
                    }
                    let digits_start = k;
                    while k < bytes.len() && bytes[k].is_ascii_digit() {
                        k += 1;
                    }
                    if k == digits_start {
                        return Err(ParseError::Syntax {
                            position: k,
                            expected: "exponent digits".into(),
                        });
                    }
                    j = k;
                }
                let lit = &text[i..j];
                let v: f64 = lit.parse().map_err(|_| ParseError::Syntax {
                    position: start,
                    expected: "number".into(),
                })?;
                i = j;
                out.push(Token {
                    kind: Tok::Num(v),
                    offset: start,
                });
                continue;
            }
            c if c.is_ascii_alphabetic() || c == b'_' => {
                let mut j = i;
                while j < bytes.len() && (bytes[j].is_ascii_alphanumeric() || bytes[j] == b'_') {
                    j += 1;
                }
                let name = text[i..j].to_string();
                i = j;
                out.push(Token {
                    kind: Tok::Ident(name),
                    offset: start,
                });
                continue;
            }
            _ => {
                return Err(ParseError::Syntax {
                    position: i,
                    expected: "number, 't', function, '(' or operator".into(),
                })
            }
        };
        i += 1;
        out.push(Token {
            kind,
            offset: start,
        });
    }
    out.push(Token {
        kind: Tok::End,
        offset: text.len(),
    });
    Ok(out)
}

struct Parser {
    tokens: Vec<Token>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> &Token {
        &self.tokens[self.pos]
    }

    fn bump(&mut self) -> Token {
        let t = self.tokens[self.pos].clone();
        if t.kind != Tok::End {
            self.pos += 1;
        }
        t
    }

    fn expect(&mut self, kind: Tok, what: &str) -> Result<(), ParseError> {
        let tok = self.peek();
        if tok.kind == kind {
            self.bump();
            Ok(())
        } else {
            Err(ParseError::Syntax {
                position: tok.offset,
                expected: what.into(),
            })
        }
    }

    fn expr(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.term()?;
        loop {
            let op = match self.peek().kind {
                Tok::Plus => BinOp::Add,
                Tok::Minus => BinOp::Sub,
                _ => return Ok(lhs),
            };
            self.bump();
            let rhs = self.term()?;
            lhs = Expr::binary(op, lhs, rhs);
        }
    }

    fn term(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.factor()?;
        loop {
            let op = match self.peek().kind {
                Tok::Star => BinOp::Mul,
                Tok::Slash => BinOp::Div,
                _ => return Ok(lhs),
            };
            self.bump();
            let rhs = self.factor()?;
            lhs = Expr::binary(op, lhs, rhs);
        }
    }

    fn factor(&mut self) -> Result<Expr, ParseError> {
        let base = self.base()?;
        if self.peek().kind == Tok::Caret {
            self.bump();
            let exponent = self.factor()?;
            return Ok(Expr::binary(BinOp::Pow, base, exponent));
        }
        Ok(base)
    }

    fn base(&mut self) -> Result<Expr, ParseError> {
        let tok = self.bump();
        match tok.kind {
            Tok::Num(v) => Ok(Expr::Const(v)),
            Tok::Minus => Ok(Expr::Neg(Box::new(self.base()?))),
            Tok::LParen => {
                let inner = self.expr()?;
                self.expect(Tok::RParen, "')'")?;
                Ok(inner)
            }
            Tok::Ident(name) => {
                if name == "t" {
                    return Ok(Expr::T);
                }
                enum Kind {
                    One(Func),
                    Two(Func2),
                }
                let kind = match name.as_str() {
                    "sqrt" => Kind::One(Func::Sqrt),
                    "ln" => Kind::One(Func::Ln),
                    "exp" => Kind::One(Func::Exp),
                    "sin" => Kind::One(Func::Sin),
                    "cos" => Kind::One(Func::Cos),
                    "abs" => Kind::One(Func::Abs),
                    "min" => Kind::Two(Func2::Min),
                    "max" => Kind::Two(Func2::Max),
                    _ => {
                        return Err(ParseError::UnknownIdentifier {
                            name,
                            position: tok.offset,
                        })
                    }
                };
                self.expect(Tok::LParen, "'(' after function name")?;
                let first = self.expr()?;
                let node = match kind {
                    Kind::One(f) => Expr::Call(f, Box::new(first)),
                    Kind::Two(f) => {
                        self.expect(Tok::Comma, "',' (function takes two arguments)")?;
                        let second = self.expr()?;
                        Expr::Call2(f, Box::new(first), Box::new(second))
                    }
                };
                self.expect(Tok::RParen, "')'")?;
                Ok(node)
            }
            _ => Err(ParseError::Syntax {
                position: tok.offset,
                expected: "number, 't', function, '(' or '-'".into(),
            }),
        }
    }
}

fn func_name(f: Func) -> &'static str {
    match f {
        Func::Sqrt => "sqrt",
        Func::Ln => "ln",
        Func::Exp => "exp",
        Func::Sin => "sin",
        Func::Cos => "cos",
        Func::Abs => "abs",
    }
}

// Printing precedence: 1 = additive, 2 = multiplicative, 3 = power, 4 = base.
fn level(e: &Expr) -> u8 {
    match e {
        Expr::Binary(BinOp::Add | BinOp::Sub, ..) => 1,
        Expr::Binary(BinOp::Mul | BinOp::Div, ..) => 2,
        Expr::Binary(BinOp::Pow, ..) => 3,
        _ => 4,
    }
}

fn print_at(e: &Expr, min_level: u8, f: &mut fmt::Formatter<'_>) -> fmt::Result {
    if level(e) < min_level {
        f.write_str("(")?;
        print_expr(e, f)?;
        f.write_str(")")
    } else {
        print_expr(e, f)
    }
}

fn print_expr(e: &Expr, f: &mut fmt::Formatter<'_>) -> fmt::Result {
    match e {
        Expr::Const(c) => {
            if c.is_sign_negative() {
                write!(f, "(-{})", -c)
            } else {
                write!(f, "{c}")
            }
        }
        Expr::T => f.write_str("t"),
        Expr::Neg(inner) => {
            f.write_str("-")?;
            print_at(inner, 4, f)
        }
        Expr::Binary(op, a, b) => {
            let (sym, lhs_min, rhs_min) = match op {
                BinOp::Add => ("+", 1, 2),
                BinOp::Sub => ("-", 1, 2),
                BinOp::Mul => ("*", 2, 3),
                BinOp::Div => ("/", 2, 3),
                BinOp::Pow => ("^", 4, 3),
            };
            print_at(a, lhs_min, f)?;
            f.write_str(sym)?;
            print_at(b, rhs_min, f)
        }
        Expr::Call(func, a) => {
            write!(f, "{}(", func_name(*func))?;
            print_expr(a, f)?;
            f.write_str(")")
        }
        Expr::Call2(func, a, b) => {
            let name = match func {
                Func2::Min => "min",
                Func2::Max => "max",
            };
            write!(f, "{name}(")?;
            print_expr(a, f)?;
            f.write_str(",")?;
            print_expr(b, f)?;
            f.write_str(")")
        }
    }
}
