//! Scalar expressions over a fixed, ordered set of variables.
//!
//! Expressions are immutable trees. Derivatives are built with simplifying
//! constructors that fold constants and drop identities (`0*a`, `0+a`,
//! `a^1`, `a^0`) but never collect terms, so a derivative is always a
//! faithful transcription of the calculus rules.

mod parser;

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use parser::parse;
pub(crate) use parser::FUNCTIONS;

/// Ordered, duplicate-free list of variable names; position is the
/// coordinate index.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<String>", into = "Vec<String>")]
pub struct VariableOrder(Vec<String>);

impl VariableOrder {
    pub fn new<S: AsRef<str>>(names: &[S]) -> Result<Self> {
        let mut out: Vec<String> = Vec::with_capacity(names.len());
        for n in names {
            let n = n.as_ref().trim();
            if !is_identifier(n) {
                return Err(Error::Syntax {
                    position: 0,
                    message: format!("`{n}` is not a valid variable name"),
                });
            }
            if parser::FUNCTIONS.contains(&n) {
                return Err(Error::Syntax {
                    position: 0,
                    message: format!("`{n}` is a reserved function name"),
                });
            }
            if out.iter().any(|o| o == n) {
                return Err(Error::DuplicateVariable(n.to_string()));
            }
            out.push(n.to_string());
        }
        Ok(VariableOrder(out))
    }

    /// `x1, ..., xn`
    pub fn indexed(n: usize) -> Self {
        VariableOrder((1..=n).map(|i| format!("x{i}")).collect())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.0.iter().position(|n| n == name)
    }

    pub fn name(&self, index: usize) -> &str {
        &self.0[index]
    }

    pub fn names(&self) -> &[String] {
        &self.0
    }
}

impl TryFrom<Vec<String>> for VariableOrder {
    type Error = Error;
    fn try_from(v: Vec<String>) -> Result<Self> {
        VariableOrder::new(&v)
    }
}

impl From<VariableOrder> for Vec<String> {
    fn from(v: VariableOrder) -> Self {
        v.0
    }
}

fn is_identifier(s: &str) -> bool {
    let mut chars = s.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_alphabetic() || c == '_')
        && chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

/// Expression tree. `Variable` holds the coordinate index into the owning
/// [`VariableOrder`].
#[derive(Debug, Clone, PartialEq)]
pub enum Expression {
    Constant(f64),
    Variable(usize),
    Neg(Box<Expression>),
    Add(Box<Expression>, Box<Expression>),
    Sub(Box<Expression>, Box<Expression>),
    Mul(Box<Expression>, Box<Expression>),
    Div(Box<Expression>, Box<Expression>),
    IntPow(Box<Expression>, u32),
    Sin(Box<Expression>),
    Cos(Box<Expression>),
    Exp(Box<Expression>),
}

use Expression::*;

#[allow(clippy::should_implement_trait)]
impl Expression {
    pub fn constant(v: f64) -> Self {
        Constant(v)
    }

    pub fn var(index: usize) -> Self {
        Variable(index)
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, Constant(c) if *c == 0.0)
    }

    fn is_one(&self) -> bool {
        matches!(self, Constant(c) if *c == 1.0)
    }

    fn as_constant(&self) -> Option<f64> {
        match self {
            Constant(c) => Some(*c),
            _ => None,
        }
    }

    // Simplifying constructors. Division by a literal zero is never folded;
    // it survives to evaluation and is reported there.

    pub fn neg(a: Expression) -> Expression {
        match a {
            Constant(c) => Constant(-c),
            Neg(inner) => *inner,
            a => Neg(Box::new(a)),
        }
    }

    pub fn add(a: Expression, b: Expression) -> Expression {
        match (a.as_constant(), b.as_constant()) {
            (Some(x), Some(y)) => Constant(x + y),
            _ if a.is_zero() => b,
            _ if b.is_zero() => a,
            _ => Add(Box::new(a), Box::new(b)),
        }
    }

    pub fn sub(a: Expression, b: Expression) -> Expression {
        match (a.as_constant(), b.as_constant()) {
            (Some(x), Some(y)) => Constant(x - y),
            _ if b.is_zero() => a,
            _ if a.is_zero() => Expression::neg(b),
            _ => Sub(Box::new(a), Box::new(b)),
        }
    }

    pub fn mul(a: Expression, b: Expression) -> Expression {
        if a.is_zero() || b.is_zero() {
            return Constant(0.0);
        }
        // constant factor goes first
        let (a, b) = if b.as_constant().is_some() && a.as_constant().is_none() {
            (b, a)
        } else {
            (a, b)
        };
        match (a, b) {
            (Constant(x), Constant(y)) => Constant(x * y),
            (a, b) if a.is_one() => b,
            (Constant(x), Mul(l, r)) if l.as_constant().is_some() => {
                Expression::mul(Constant(x * l.as_constant().unwrap_or(1.0)), *r)
            }
            (Constant(x), Neg(inner)) => Expression::mul(Constant(-x), *inner),
            (a, b) => Mul(Box::new(a), Box::new(b)),
        }
    }

    pub fn div(a: Expression, b: Expression) -> Expression {
        match (a, b) {
            (Constant(x), Constant(y)) if y != 0.0 => Constant(x / y),
            (a, b) if b.is_one() => a,
            (a, b) if a.is_zero() && b.as_constant().is_some_and(|c| c != 0.0) => Constant(0.0),
            (Mul(l, r), Constant(y)) if y != 0.0 && l.as_constant().is_some() => {
                Expression::mul(Constant(l.as_constant().unwrap_or(1.0) / y), *r)
            }
            (a, b) => Div(Box::new(a), Box::new(b)),
        }
    }

    pub fn pow(a: Expression, n: u32) -> Expression {
        match (a, n) {
            (_, 0) => Constant(1.0),
            (a, 1) => a,
            (Constant(c), n) => Constant(c.powi(n as i32)),
            (a, n) => IntPow(Box::new(a), n),
        }
    }

    pub fn sin(a: Expression) -> Expression {
        match a {
            Constant(c) => Constant(c.sin()),
            a => Sin(Box::new(a)),
        }
    }

    pub fn cos(a: Expression) -> Expression {
        match a {
            Constant(c) => Constant(c.cos()),
            a => Cos(Box::new(a)),
        }
    }

    pub fn exp(a: Expression) -> Expression {
        match a {
            Constant(c) => Constant(c.exp()),
            a => Exp(Box::new(a)),
        }
    }

    /// Value at `point`; every intermediate result must be finite.
    pub fn evaluate(&self, point: &[f64]) -> Result<f64> {
        let v = match self {
            Constant(c) => *c,
            Variable(i) => *point.get(*i).ok_or(Error::DimensionMismatch {
                expected: i + 1,
                got: point.len(),
            })?,
            Neg(a) => -a.evaluate(point)?,
            Add(a, b) => a.evaluate(point)? + b.evaluate(point)?,
            Sub(a, b) => a.evaluate(point)? - b.evaluate(point)?,
            Mul(a, b) => a.evaluate(point)? * b.evaluate(point)?,
            Div(a, b) => a.evaluate(point)? / b.evaluate(point)?,
            IntPow(a, n) => powu(a.evaluate(point)?, *n),
            Sin(a) => a.evaluate(point)?.sin(),
            Cos(a) => a.evaluate(point)?.cos(),
            Exp(a) => a.evaluate(point)?.exp(),
        };
        if v.is_finite() {
            Ok(v)
        } else {
            Err(Error::NonFiniteValue)
        }
    }

    /// Partial derivative with respect to coordinate `var`.
    pub fn derivative(&self, var: usize) -> Expression {
        match self {
            Constant(_) => Constant(0.0),
            Variable(i) => Constant(if *i == var { 1.0 } else { 0.0 }),
            Neg(a) => Expression::neg(a.derivative(var)),
            Add(a, b) => Expression::add(a.derivative(var), b.derivative(var)),
            Sub(a, b) => Expression::sub(a.derivative(var), b.derivative(var)),
            Mul(a, b) => Expression::add(
                Expression::mul(a.derivative(var), (**b).clone()),
                Expression::mul((**a).clone(), b.derivative(var)),
            ),
            Div(a, b) => {
                let da = a.derivative(var);
                let db = b.derivative(var);
                if db.is_zero() {
                    Expression::div(da, (**b).clone())
                } else {
                    Expression::div(
                        Expression::sub(Expression::mul(da, (**b).clone()), Expression::mul((**a).clone(), db)),
                        Expression::pow((**b).clone(), 2),
                    )
                }
            }
            IntPow(a, n) => {
                if *n == 0 {
                    return Constant(0.0);
                }
                Expression::mul(
                    Expression::mul(Constant(*n as f64), Expression::pow((**a).clone(), n - 1)),
                    a.derivative(var),
                )
            }
            Sin(a) => Expression::mul(Expression::cos((**a).clone()), a.derivative(var)),
            Cos(a) => Expression::neg(Expression::mul(Expression::sin((**a).clone()), a.derivative(var))),
            Exp(a) => Expression::mul(Expression::exp((**a).clone()), a.derivative(var)),
        }
    }

    /// Partial derivative with respect to the variable called `name`.
    pub fn differentiate(&self, vars: &VariableOrder, name: &str) -> Result<Expression> {
        let i = vars
            .index_of(name)
            .ok_or_else(|| Error::UnknownVariable(name.to_string()))?;
        Ok(self.derivative(i))
    }

    /// Whether the expression mentions coordinate `var`.
    pub fn depends_on(&self, var: usize) -> bool {
        match self {
            Constant(_) => false,
            Variable(i) => *i == var,
            Neg(a) | IntPow(a, _) | Sin(a) | Cos(a) | Exp(a) => a.depends_on(var),
            Add(a, b) | Sub(a, b) | Mul(a, b) | Div(a, b) => a.depends_on(var) || b.depends_on(var),
        }
    }

    /// Largest variable index referenced, if any.
    pub fn max_variable(&self) -> Option<usize> {
        match self {
            Constant(_) => None,
            Variable(i) => Some(*i),
            Neg(a) | IntPow(a, _) | Sin(a) | Cos(a) | Exp(a) => a.max_variable(),
            Add(a, b) | Sub(a, b) | Mul(a, b) | Div(a, b) => a.max_variable().max(b.max_variable()),
        }
    }

    /// Display adapter that prints variable names.
    pub fn display<'a>(&'a self, vars: &'a VariableOrder) -> DisplayExpr<'a> {
        DisplayExpr { expr: self, vars }
    }

    fn precedence(&self) -> u8 {
        match self {
            Add(..) | Sub(..) => 1,
            Mul(..) | Div(..) => 2,
            Neg(_) => 3,
            Constant(c) if c.is_sign_negative() => 3,
            IntPow(..) => 4,
            _ => 5,
        }
    }
}

/// Exponentiation by squaring, so `x^n` uses the same products a
/// hand-written `x*x*...` would for small `n`.
fn powu(mut base: f64, mut n: u32) -> f64 {
    let mut acc = 1.0;
    while n > 0 {
        if n & 1 == 1 {
            acc *= base;
        }
        n >>= 1;
        if n > 0 {
            base *= base;
        }
    }
    acc
}

pub struct DisplayExpr<'a> {
    expr: &'a Expression,
    vars: &'a VariableOrder,
}

impl DisplayExpr<'_> {
    fn child<'b>(&'b self, e: &'b Expression) -> DisplayExpr<'b> {
        DisplayExpr {
            expr: e,
            vars: self.vars,
        }
    }

    fn wrap(&self, f: &mut fmt::Formatter<'_>, e: &Expression, min_prec: u8) -> fmt::Result {
        if e.precedence() < min_prec {
            write!(f, "({})", self.child(e))
        } else {
            write!(f, "{}", self.child(e))
        }
    }
}

impl fmt::Display for DisplayExpr<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.expr {
            Constant(c) => write!(f, "{c}"),
            Variable(i) => match self.vars.0.get(*i) {
                Some(name) => write!(f, "{name}"),
                None => write!(f, "#{i}"),
            },
            Neg(a) => {
                write!(f, "-")?;
                self.wrap(f, a, 3)
            }
            Add(a, b) => {
                self.wrap(f, a, 1)?;
                write!(f, " + ")?;
                self.wrap(f, b, 2)
            }
            Sub(a, b) => {
                self.wrap(f, a, 1)?;
                write!(f, " - ")?;
                self.wrap(f, b, 2)
            }
            Mul(a, b) => {
                self.wrap(f, a, 2)?;
                write!(f, "*")?;
                self.wrap(f, b, 3)
            }
            Div(a, b) => {
                self.wrap(f, a, 2)?;
                write!(f, "/")?;
                self.wrap(f, b, 3)
            }
            IntPow(a, n) => {
                self.wrap(f, a, 5)?;
                write!(f, "^{n}")
            }
            Sin(a) => write!(f, "sin({})", self.child(a)),
            Cos(a) => write!(f, "cos({})", self.child(a)),
            Exp(a) => write!(f, "exp({})", self.child(a)),
        }
    }
}

#[cfg(test)]
mod tests;
