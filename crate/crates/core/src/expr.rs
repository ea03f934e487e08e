//! Arithmetic expression AST for kinetic laws.
//!
//! One tree type is shared by the shorthand infix syntax and the MathML
//! subset: `Number`, `Symbol`, the four binary operators, `Pow`, and unary
//! negation. The infix grammar has precedence `^` > unary minus > `*`/`/` >
//! `+`/`-`, with `^` right-associative and everything else left-associative.
//!
//! [`Expression::to_infix`] prints a canonical form with minimal parentheses;
//! `parse_infix(to_infix(e)) == e` holds for every expression the parser can
//! produce (the parser folds a leading minus into numeric literals, so
//! `Neg(Number(x))` never appears in parsed trees).

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq)]
pub enum Expression {
    Number(f64),
    Symbol(String),
    Add(Box<Expression>, Box<Expression>),
    Sub(Box<Expression>, Box<Expression>),
    Mul(Box<Expression>, Box<Expression>),
    Div(Box<Expression>, Box<Expression>),
    Pow(Box<Expression>, Box<Expression>),
    Neg(Box<Expression>),
}

#[derive(Debug, Error, PartialEq)]
#[error("column {column}: expected {expected}")]
pub struct ParseError {
    /// 1-based character column of the offending token.
    pub column: usize,
    pub expected: String,
}

#[derive(Debug, Error, PartialEq)]
pub enum EvalError {
    #[error("unbound symbol `{0}`")]
    UnboundSymbol(String),
    #[error("non-finite result in `{0}`")]
    NonFiniteResult(String),
}

// Expressions travel through JSON as their canonical infix text; the
// parse/print identity makes this lossless.
impl Serialize for Expression {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_infix())
    }
}

impl<'de> Deserialize<'de> for Expression {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        parse_infix(&s).map_err(serde::de::Error::custom)
    }
}

impl Expression {
    /// Inherent alias for [`parse_infix`].
    pub fn parse_infix(input: &str) -> Result<Expression, ParseError> {
        parse_infix(input)
    }

    pub fn number(v: f64) -> Self {
        Expression::Number(v)
    }

    pub fn symbol(name: impl Into<String>) -> Self {
        Expression::Symbol(name.into())
    }

    pub fn add(a: Expression, b: Expression) -> Self {
        Expression::Add(Box::new(a), Box::new(b))
    }

    pub fn sub(a: Expression, b: Expression) -> Self {
        Expression::Sub(Box::new(a), Box::new(b))
    }

    pub fn mul(a: Expression, b: Expression) -> Self {
        Expression::Mul(Box::new(a), Box::new(b))
    }

    pub fn div(a: Expression, b: Expression) -> Self {
        Expression::Div(Box::new(a), Box::new(b))
    }

    pub fn pow(a: Expression, b: Expression) -> Self {
        Expression::Pow(Box::new(a), Box::new(b))
    }

    pub fn neg(a: Expression) -> Self {
        Expression::Neg(Box::new(a))
    }

    /// A copy with symbol names replaced per the map; unmapped symbols kept.
    pub fn rename_symbols(&self, map: &BTreeMap<String, String>) -> Expression {
        match self {
            Expression::Number(v) => Expression::Number(*v),
            Expression::Symbol(s) => Expression::Symbol(
                map.get(s).cloned().unwrap_or_else(|| s.clone()),
            ),
            Expression::Add(a, b) => Expression::add(a.rename_symbols(map), b.rename_symbols(map)),
            Expression::Sub(a, b) => Expression::sub(a.rename_symbols(map), b.rename_symbols(map)),
            Expression::Mul(a, b) => Expression::mul(a.rename_symbols(map), b.rename_symbols(map)),
            Expression::Div(a, b) => Expression::div(a.rename_symbols(map), b.rename_symbols(map)),
            Expression::Pow(a, b) => Expression::pow(a.rename_symbols(map), b.rename_symbols(map)),
            Expression::Neg(a) => Expression::neg(a.rename_symbols(map)),
        }
    }

    /// All symbol names referenced anywhere in the tree.
    pub fn symbols(&self) -> BTreeSet<&str> {
        let mut out = BTreeSet::new();
        self.collect_symbols(&mut out);
        out
    }

    fn collect_symbols<'a>(&'a self, out: &mut BTreeSet<&'a str>) {
        match self {
            Expression::Number(_) => {}
            Expression::Symbol(s) => {
                out.insert(s.as_str());
            }
            Expression::Add(a, b)
            | Expression::Sub(a, b)
            | Expression::Mul(a, b)
            | Expression::Div(a, b)
            | Expression::Pow(a, b) => {
                a.collect_symbols(out);
                b.collect_symbols(out);
            }
            Expression::Neg(a) => a.collect_symbols(out),
        }
    }

    /// Evaluate against a symbol environment. Division by zero and any other
    /// non-finite intermediate is reported as [`EvalError::NonFiniteResult`].
    pub fn eval(&self, env: &dyn Fn(&str) -> Option<f64>) -> Result<f64, EvalError> {
        let v = match self {
            Expression::Number(v) => *v,
            Expression::Symbol(s) => env(s).ok_or_else(|| EvalError::UnboundSymbol(s.clone()))?,
            Expression::Add(a, b) => a.eval(env)? + b.eval(env)?,
            Expression::Sub(a, b) => a.eval(env)? - b.eval(env)?,
            Expression::Mul(a, b) => a.eval(env)? * b.eval(env)?,
            Expression::Div(a, b) => a.eval(env)? / b.eval(env)?,
            Expression::Pow(a, b) => a.eval(env)?.powf(b.eval(env)?),
            Expression::Neg(a) => -a.eval(env)?,
        };
        if v.is_finite() {
            Ok(v)
        } else {
            Err(EvalError::NonFiniteResult(self.to_infix()))
        }
    }

    /// Canonical infix rendering with minimal parentheses.
    pub fn to_infix(&self) -> String {
        let mut s = String::new();
        self.write_infix(&mut s, 0);
        s
    }

    // Precedence levels: 1 add/sub, 2 mul/div, 3 unary minus, 4 pow, 5 atoms.
    fn precedence(&self) -> u8 {
        match self {
            Expression::Add(..) | Expression::Sub(..) => 1,
            Expression::Mul(..) | Expression::Div(..) => 2,
            Expression::Neg(..) => 3,
            Expression::Pow(..) => 4,
            Expression::Number(v) if *v < 0.0 => 3,
            Expression::Number(_) | Expression::Symbol(_) => 5,
        }
    }

    fn write_infix(&self, out: &mut String, min_prec: u8) {
        let prec = self.precedence();
        let parens = prec < min_prec;
        if parens {
            out.push('(');
        }
        match self {
            Expression::Number(v) => {
                out.push_str(&format_number(*v));
            }
            Expression::Symbol(s) => out.push_str(s),
            Expression::Add(a, b) => {
                a.write_infix(out, 1);
                out.push('+');
                b.write_infix(out, 2);
            }
            Expression::Sub(a, b) => {
                a.write_infix(out, 1);
                out.push('-');
                b.write_infix(out, 2);
            }
            Expression::Mul(a, b) => {
                a.write_infix(out, 2);
                out.push('*');
                b.write_infix(out, 3);
            }
            Expression::Div(a, b) => {
                a.write_infix(out, 2);
                out.push('/');
                b.write_infix(out, 3);
            }
            Expression::Neg(a) => {
                out.push('-');
                a.write_infix(out, 3);
            }
            Expression::Pow(a, b) => {
                a.write_infix(out, 5);
                out.push('^');
                b.write_infix(out, 3);
            }
        }
        if parens {
            out.push(')');
        }
    }
}

impl fmt::Display for Expression {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_infix())
    }
}

/// Shortest decimal form that round-trips through `f64` parsing.
pub fn format_number(v: f64) -> String {
    if v == v.trunc() && v.abs() < 1e15 {
        format!("{}", v as i64)
    } else {
        format!("{v}")
    }
}

/// Commutativity-insensitive canonical key: associative chains of `+` and `*`
/// are flattened and their operands sorted, so two trees that differ only in
/// the order of sum or product operands map to the same key.
pub fn canonical_key(e: &Expression) -> String {
    match e {
        Expression::Number(v) => format_number(*v),
        Expression::Symbol(s) => s.clone(),
        Expression::Add(..) | Expression::Sub(..) => {
            let mut terms = Vec::new();
            collect_sum(e, false, &mut terms);
            let mut keys: Vec<String> = terms
                .into_iter()
                .map(|(neg, t)| {
                    let k = canonical_key(&t);
                    if neg {
                        format!("(neg {k})")
                    } else {
                        k
                    }
                })
                .collect();
            keys.sort();
            format!("(+ {})", keys.join(" "))
        }
        Expression::Mul(..) => {
            let mut factors = Vec::new();
            collect_product(e, &mut factors);
            let mut keys: Vec<String> = factors.iter().map(canonical_key).collect();
            keys.sort();
            format!("(* {})", keys.join(" "))
        }
        Expression::Div(a, b) => format!("(/ {} {})", canonical_key(a), canonical_key(b)),
        Expression::Pow(a, b) => format!("(^ {} {})", canonical_key(a), canonical_key(b)),
        Expression::Neg(a) => format!("(neg {})", canonical_key(a)),
    }
}

/// Flatten an additive spine into signed terms. `Sub(a, b)` contributes `a`
/// and a negated `b`; `Neg` at a term position flips the sign.
pub fn collect_sum(e: &Expression, negated: bool, out: &mut Vec<(bool, Expression)>) {
    match e {
        Expression::Add(a, b) => {
            collect_sum(a, negated, out);
            collect_sum(b, negated, out);
        }
        Expression::Sub(a, b) => {
            collect_sum(a, negated, out);
            collect_sum(b, !negated, out);
        }
        Expression::Neg(a) => collect_sum(a, !negated, out),
        other => out.push((negated, other.clone())),
    }
}

/// Flatten a multiplicative spine into factors (division is not flattened).
pub fn collect_product(e: &Expression, out: &mut Vec<Expression>) {
    match e {
        Expression::Mul(a, b) => {
            collect_product(a, out);
            collect_product(b, out);
        }
        other => out.push(other.clone()),
    }
}

/// Parse the infix subset. Column numbers in errors are 1-based character
/// positions within the input line.
pub fn parse_infix(input: &str) -> Result<Expression, ParseError> {
    let tokens = lex(input)?;
    let mut p = Parser { tokens, pos: 0 };
    let e = p.parse_add_sub()?;
    match p.peek() {
        None => Ok(e),
        Some(t) => Err(ParseError {
            column: t.column,
            expected: "end of expression".into(),
        }),
    }
}

#[derive(Debug, Clone, PartialEq)]
enum TokenKind {
    Number(f64),
    Ident(String),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
}

#[derive(Debug, Clone)]
struct Token {
    kind: TokenKind,
    column: usize,
}

fn lex(input: &str) -> Result<Vec<Token>, ParseError> {
    let chars: Vec<char> = input.chars().collect();
    let mut tokens = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        let column = i + 1;
        match c {
            ' ' | '\t' => {
                i += 1;
            }
            '+' => {
                tokens.push(Token { kind: TokenKind::Plus, column });
                i += 1;
            }
            '-' => {
                tokens.push(Token { kind: TokenKind::Minus, column });
                i += 1;
            }
            '*' => {
                tokens.push(Token { kind: TokenKind::Star, column });
                i += 1;
            }
            '/' => {
                tokens.push(Token { kind: TokenKind::Slash, column });
                i += 1;
            }
            '^' => {
                tokens.push(Token { kind: TokenKind::Caret, column });
                i += 1;
            }
            '(' => {
                tokens.push(Token { kind: TokenKind::LParen, column });
                i += 1;
            }
            ')' => {
                tokens.push(Token { kind: TokenKind::RParen, column });
                i += 1;
            }
            c if c.is_ascii_digit() || c == '.' => {
                let start = i;
                while i < chars.len() && (chars[i].is_ascii_digit() || chars[i] == '.') {
                    i += 1;
                }
                // exponent part: 1e-3, 2.5E+10
                if i < chars.len() && (chars[i] == 'e' || chars[i] == 'E') {
                    let mut j = i + 1;
                    if j < chars.len() && (chars[j] == '+' || chars[j] == '-') {
                        j += 1;
                    }
                    if j < chars.len() && chars[j].is_ascii_digit() {
                        i = j;
                        while i < chars.len() && chars[i].is_ascii_digit() {
                            i += 1;
                        }
                    }
                }
                let text: String = chars[start..i].iter().collect();
                let value: f64 = text.parse().map_err(|_| ParseError {
                    column,
                    expected: "number".into(),
                })?;
                tokens.push(Token { kind: TokenKind::Number(value), column });
            }
            c if c.is_ascii_alphabetic() || c == '_' => {
                let start = i;
                while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                    i += 1;
                }
                let text: String = chars[start..i].iter().collect();
                tokens.push(Token { kind: TokenKind::Ident(text), column });
            }
            _ => {
                return Err(ParseError {
                    column,
                    expected: "number, identifier, or operator".into(),
                })
            }
        }
    }
    Ok(tokens)
}

struct Parser {
    tokens: Vec<Token>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.pos)
    }

    fn end_column(&self) -> usize {
        self.tokens
            .last()
            .map(|t| t.column + 1)
            .unwrap_or(1)
    }

    fn parse_add_sub(&mut self) -> Result<Expression, ParseError> {
        let mut left = self.parse_mul_div()?;
        while let Some(t) = self.peek() {
            match t.kind {
                TokenKind::Plus => {
                    self.pos += 1;
                    let right = self.parse_mul_div()?;
                    left = Expression::add(left, right);
                }
                TokenKind::Minus => {
                    self.pos += 1;
                    let right = self.parse_mul_div()?;
                    left = Expression::sub(left, right);
                }
                _ => break,
            }
        }
        Ok(left)
    }

    fn parse_mul_div(&mut self) -> Result<Expression, ParseError> {
        let mut left = self.parse_unary()?;
        while let Some(t) = self.peek() {
            match t.kind {
                TokenKind::Star => {
                    self.pos += 1;
                    let right = self.parse_unary()?;
                    left = Expression::mul(left, right);
                }
                TokenKind::Slash => {
                    self.pos += 1;
                    let right = self.parse_unary()?;
                    left = Expression::div(left, right);
                }
                _ => break,
            }
        }
        Ok(left)
    }

    fn parse_unary(&mut self) -> Result<Expression, ParseError> {
        if let Some(t) = self.peek() {
            if t.kind == TokenKind::Minus {
                self.pos += 1;
                let inner = self.parse_unary()?;
                // Fold `-3` into a literal so printing round-trips.
                return Ok(match inner {
                    Expression::Number(v) => Expression::Number(-v),
                    other => Expression::neg(other),
                });
            }
        }
        self.parse_pow()
    }

    fn parse_pow(&mut self) -> Result<Expression, ParseError> {
        let base = self.parse_atom()?;
        if let Some(t) = self.peek() {
            if t.kind == TokenKind::Caret {
                self.pos += 1;
                let exp = self.parse_unary()?;
                return Ok(Expression::pow(base, exp));
            }
        }
        Ok(base)
    }

    fn parse_atom(&mut self) -> Result<Expression, ParseError> {
        let Some(t) = self.peek().cloned() else {
            return Err(ParseError {
                column: self.end_column(),
                expected: "number, identifier, or `(`".into(),
            });
        };
        match t.kind {
            TokenKind::Number(v) => {
                self.pos += 1;
                Ok(Expression::Number(v))
            }
            TokenKind::Ident(name) => {
                self.pos += 1;
                Ok(Expression::Symbol(name))
            }
            TokenKind::LParen => {
                self.pos += 1;
                let e = self.parse_add_sub()?;
                match self.peek() {
                    Some(t) if t.kind == TokenKind::RParen => {
                        self.pos += 1;
                        Ok(e)
                    }
                    Some(t) => Err(ParseError {
                        column: t.column,
                        expected: "`)`".into(),
                    }),
                    None => Err(ParseError {
                        column: self.end_column(),
                        expected: "`)`".into(),
                    }),
                }
            }
            _ => Err(ParseError {
                column: t.column,
                expected: "number, identifier, or `(`".into(),
            }),
        }
    }
}
