//! Immutable symbolic expressions over named coordinates.
//!
//! An [`Expr`] is a tree of rational constants, float constants, variables,
//! sums, products, integer powers and a handful of elementary functions
//! (`sin`, `cos`, `exp`, `ln`, `sqrt`). Every public constructor and
//! operation returns the expression in normal form:
//!
//! * `Add`/`Mul` lists are flattened and sorted by a fixed total order,
//! * numeric factors are folded exactly (rational arithmetic on
//!   arbitrary-precision integers), zero/one identities removed,
//! * products of sums are expanded over the polynomial fragment and like
//!   terms collected, so e.g. `y1*(v1_1 - v1_1)` normalizes to `0`,
//! * function applications and powers of sums with negative exponents are
//!   kept as opaque atoms (no trigonometric rewriting, no rational-function
//!   simplification).
//!
//! Expressions are value-semantic: cloning is deep, sharing across threads
//! is safe, and all operations are pure.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::ops;

use num::{BigInt, BigRational, One, Signed, ToPrimitive, Zero};
use ordered_float::OrderedFloat;
use thiserror::Error;

mod equiv;
mod normalize;
mod parser;

pub use equiv::{equivalence_check, Equivalence};
pub use parser::{parse_expr, ParseError};

/// Map from coordinate name to a real value, used by [`Expr::evaluate`].
pub type Assignment = BTreeMap<String, f64>;

/// Elementary functions admitted in expressions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Func {
    Sin,
    Cos,
    Exp,
    Ln,
    Sqrt,
}

impl Func {
    pub fn name(self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Exp => "exp",
            Func::Ln => "ln",
            Func::Sqrt => "sqrt",
        }
    }

    pub fn from_name(name: &str) -> Option<Func> {
        match name {
            "sin" => Some(Func::Sin),
            "cos" => Some(Func::Cos),
            "exp" => Some(Func::Exp),
            "ln" => Some(Func::Ln),
            "sqrt" => Some(Func::Sqrt),
            _ => None,
        }
    }

    fn apply(self, x: f64) -> Result<f64, EvalError> {
        match self {
            Func::Sin => Ok(x.sin()),
            Func::Cos => Ok(x.cos()),
            Func::Exp => Ok(x.exp()),
            Func::Ln => {
                if x <= 0.0 {
                    Err(EvalError::Domain(format!("ln of non-positive value {x}")))
                } else {
                    Ok(x.ln())
                }
            }
            Func::Sqrt => {
                if x < 0.0 {
                    Err(EvalError::Domain(format!("sqrt of negative value {x}")))
                } else {
                    Ok(x.sqrt())
                }
            }
        }
    }
}

/// A symbolic expression. The variant order defines the total order used
/// to sort operand lists, so it is part of the normal-form contract.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Expr {
    /// Exact rational constant, stored in lowest terms with positive denominator.
    Rational(BigRational),
    /// Floating-point constant. Never produced by the parser (numeric
    /// literals parse to exact rationals); available for API callers.
    Float(OrderedFloat<f64>),
    Var(String),
    Add(Vec<Expr>),
    Mul(Vec<Expr>),
    Pow(Box<Expr>, i64),
    Func(Func, Box<Expr>),
}

/// Errors raised by [`Expr::evaluate`].
#[derive(Debug, Clone, Error, PartialEq)]
pub enum EvalError {
    #[error("missing variable `{0}` in assignment")]
    MissingVariable(String),
    #[error("domain error: {0}")]
    Domain(String),
}

impl Expr {
    pub fn zero() -> Expr {
        Expr::Rational(BigRational::zero())
    }

    pub fn one() -> Expr {
        Expr::Rational(BigRational::one())
    }

    pub fn int(n: i64) -> Expr {
        Expr::Rational(BigRational::from_integer(BigInt::from(n)))
    }

    /// Exact rational `numer / denom`. Panics if `denom == 0`.
    pub fn rational(numer: i64, denom: i64) -> Expr {
        Expr::Rational(BigRational::new(BigInt::from(numer), BigInt::from(denom)))
    }

    pub fn float(x: f64) -> Expr {
        Expr::Float(OrderedFloat(x))
    }

    pub fn var(name: impl Into<String>) -> Expr {
        Expr::Var(name.into())
    }

    pub fn func(f: Func, arg: Expr) -> Expr {
        Expr::Func(f, Box::new(arg)).normalize()
    }

    /// Integer power in normal form.
    pub fn pow(self, exponent: i64) -> Expr {
        Expr::Pow(Box::new(self), exponent).normalize()
    }

    /// Rewrites the expression into the canonical normal form. Idempotent
    /// and value-preserving at every assignment.
    pub fn normalize(&self) -> Expr {
        normalize::normalize(self)
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, Expr::Rational(r) if r.is_zero())
    }

    pub fn is_one(&self) -> bool {
        matches!(self, Expr::Rational(r) if r.is_one())
    }

    /// True for constant expressions (no free variables at all).
    pub fn is_constant(&self) -> bool {
        matches!(self, Expr::Rational(_) | Expr::Float(_))
    }

    pub fn as_rational(&self) -> Option<&BigRational> {
        match self {
            Expr::Rational(r) => Some(r),
            _ => None,
        }
    }

    /// Numeric value of a constant expression, if it is one.
    pub fn constant_value(&self) -> Option<f64> {
        match self {
            Expr::Rational(r) => rational_to_f64(r),
            Expr::Float(f) => Some(f.0),
            _ => None,
        }
    }

    /// Set of variable names appearing in the expression.
    pub fn free_vars(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.collect_vars(&mut out);
        out
    }

    fn collect_vars(&self, out: &mut BTreeSet<String>) {
        match self {
            Expr::Rational(_) | Expr::Float(_) => {}
            Expr::Var(name) => {
                out.insert(name.clone());
            }
            Expr::Add(ops) | Expr::Mul(ops) => {
                for op in ops {
                    op.collect_vars(out);
                }
            }
            Expr::Pow(base, _) => base.collect_vars(out),
            Expr::Func(_, arg) => arg.collect_vars(out),
        }
    }

    /// Exact partial derivative with respect to `var`, in normal form.
    pub fn differentiate(&self, var: &str) -> Expr {
        self.diff_raw(var).normalize()
    }

    fn diff_raw(&self, var: &str) -> Expr {
        match self {
            Expr::Rational(_) | Expr::Float(_) => Expr::zero(),
            Expr::Var(name) => {
                if name == var {
                    Expr::one()
                } else {
                    Expr::zero()
                }
            }
            Expr::Add(ops) => Expr::Add(ops.iter().map(|op| op.diff_raw(var)).collect()),
            Expr::Mul(ops) => {
                // Product rule over the whole factor list.
                let mut terms = Vec::with_capacity(ops.len());
                for (i, _) in ops.iter().enumerate() {
                    let factors: Vec<Expr> = ops
                        .iter()
                        .enumerate()
                        .map(|(j, op)| if i == j { op.diff_raw(var) } else { op.clone() })
                        .collect();
                    terms.push(Expr::Mul(factors));
                }
                Expr::Add(terms)
            }
            Expr::Pow(base, n) => {
                // d(b^n) = n * b^(n-1) * db
                let db = base.diff_raw(var);
                Expr::Mul(vec![
                    Expr::int(*n),
                    Expr::Pow(base.clone(), n - 1),
                    db,
                ])
            }
            Expr::Func(f, arg) => {
                let darg = arg.diff_raw(var);
                let outer = match f {
                    Func::Sin => Expr::Func(Func::Cos, arg.clone()),
                    Func::Cos => Expr::Mul(vec![Expr::int(-1), Expr::Func(Func::Sin, arg.clone())]),
                    Func::Exp => Expr::Func(Func::Exp, arg.clone()),
                    Func::Ln => Expr::Pow(arg.clone(), -1),
                    Func::Sqrt => Expr::Mul(vec![
                        Expr::rational(1, 2),
                        Expr::Pow(Box::new(Expr::Func(Func::Sqrt, arg.clone())), -1),
                    ]),
                };
                Expr::Mul(vec![outer, darg])
            }
        }
    }

    /// Simultaneous substitution of variables by expressions, then
    /// normalization.
    pub fn substitute(&self, subst: &BTreeMap<String, Expr>) -> Expr {
        self.subst_raw(subst).normalize()
    }

    fn subst_raw(&self, subst: &BTreeMap<String, Expr>) -> Expr {
        match self {
            Expr::Rational(_) | Expr::Float(_) => self.clone(),
            Expr::Var(name) => match subst.get(name) {
                Some(replacement) => replacement.clone(),
                None => self.clone(),
            },
            Expr::Add(ops) => Expr::Add(ops.iter().map(|op| op.subst_raw(subst)).collect()),
            Expr::Mul(ops) => Expr::Mul(ops.iter().map(|op| op.subst_raw(subst)).collect()),
            Expr::Pow(base, n) => Expr::Pow(Box::new(base.subst_raw(subst)), *n),
            Expr::Func(f, arg) => Expr::Func(*f, Box::new(arg.subst_raw(subst))),
        }
    }

    /// IEEE-double evaluation at an assignment covering every free variable.
    pub fn evaluate(&self, at: &Assignment) -> Result<f64, EvalError> {
        match self {
            Expr::Rational(r) => {
                rational_to_f64(r).ok_or_else(|| EvalError::Domain("rational overflow".into()))
            }
            Expr::Float(f) => Ok(f.0),
            Expr::Var(name) => at
                .get(name)
                .copied()
                .ok_or_else(|| EvalError::MissingVariable(name.clone())),
            Expr::Add(ops) => {
                let mut acc = 0.0;
                for op in ops {
                    acc += op.evaluate(at)?;
                }
                Ok(acc)
            }
            Expr::Mul(ops) => {
                let mut acc = 1.0;
                for op in ops {
                    acc *= op.evaluate(at)?;
                }
                Ok(acc)
            }
            Expr::Pow(base, n) => {
                let b = base.evaluate(at)?;
                if b == 0.0 && *n < 0 {
                    return Err(EvalError::Domain("division by zero".into()));
                }
                let e = i32::try_from(*n)
                    .map_err(|_| EvalError::Domain(format!("exponent {n} out of range")))?;
                Ok(b.powi(e))
            }
            Expr::Func(f, arg) => f.apply(arg.evaluate(at)?),
        }
    }
}

pub(crate) fn rational_to_f64(r: &BigRational) -> Option<f64> {
    r.to_f64()
        .or_else(|| Some(r.numer().to_f64()? / r.denom().to_f64()?))
}

// Arithmetic operators build a raw tree and normalize once.

impl ops::Add for Expr {
    type Output = Expr;
    fn add(self, rhs: Expr) -> Expr {
        Expr::Add(vec![self, rhs]).normalize()
    }
}

impl ops::Sub for Expr {
    type Output = Expr;
    fn sub(self, rhs: Expr) -> Expr {
        Expr::Add(vec![self, Expr::Mul(vec![Expr::int(-1), rhs])]).normalize()
    }
}

impl ops::Mul for Expr {
    type Output = Expr;
    fn mul(self, rhs: Expr) -> Expr {
        Expr::Mul(vec![self, rhs]).normalize()
    }
}

impl ops::Div for Expr {
    type Output = Expr;
    fn div(self, rhs: Expr) -> Expr {
        Expr::Mul(vec![self, Expr::Pow(Box::new(rhs), -1)]).normalize()
    }
}

impl ops::Neg for Expr {
    type Output = Expr;
    fn neg(self) -> Expr {
        Expr::Mul(vec![Expr::int(-1), self]).normalize()
    }
}

// Rendering. The output re-parses to the same normal form (for float-free
// expressions), which the integration tests rely on.

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.fmt_prec(f, 0)
    }
}

impl Expr {
    /// Printing precedence: Add 1, Mul 2, Pow 3, atoms 4.
    fn prec(&self) -> u8 {
        match self {
            Expr::Add(_) => 1,
            Expr::Mul(_) => 2,
            Expr::Rational(r) => {
                if r.is_integer() && !r.is_negative() {
                    4
                } else {
                    2
                }
            }
            Expr::Float(x) => {
                if x.0 < 0.0 {
                    2
                } else {
                    4
                }
            }
            Expr::Pow(_, _) => 3,
            Expr::Var(_) | Expr::Func(_, _) => 4,
        }
    }

    fn fmt_prec(&self, f: &mut fmt::Formatter<'_>, parent: u8) -> fmt::Result {
        let me = self.prec();
        if me < parent {
            write!(f, "(")?;
        }
        match self {
            Expr::Rational(r) => {
                if r.is_integer() {
                    write!(f, "{}", r.numer())?;
                } else {
                    write!(f, "{}/{}", r.numer(), r.denom())?;
                }
            }
            Expr::Float(x) => write!(f, "{}", x.0)?,
            Expr::Var(name) => write!(f, "{name}")?,
            Expr::Add(ops) => {
                for (i, op) in ops.iter().enumerate() {
                    if i == 0 {
                        op.fmt_prec(f, 1)?;
                    } else {
                        match op.split_negation() {
                            Some(positive) => {
                                write!(f, " - ")?;
                                positive.fmt_prec(f, 2)?;
                            }
                            None => {
                                write!(f, " + ")?;
                                op.fmt_prec(f, 2)?;
                            }
                        }
                    }
                }
            }
            Expr::Mul(ops) => {
                for (i, op) in ops.iter().enumerate() {
                    if i > 0 {
                        write!(f, "*")?;
                    }
                    op.fmt_prec(f, 3)?;
                }
            }
            Expr::Pow(base, n) => {
                base.fmt_prec(f, 4)?;
                write!(f, "^{n}")?;
            }
            Expr::Func(func, arg) => {
                write!(f, "{}(", func.name())?;
                arg.fmt_prec(f, 0)?;
                write!(f, ")")?;
            }
        }
        if me < parent {
            write!(f, ")")?;
        }
        Ok(())
    }

    /// If the expression is a negated term, returns the positive part.
    fn split_negation(&self) -> Option<Expr> {
        match self {
            Expr::Rational(r) if r.is_negative() => Some(Expr::Rational(-r.clone())),
            Expr::Float(x) if x.0 < 0.0 => Some(Expr::float(-x.0)),
            Expr::Mul(ops) => match ops.first() {
                Some(Expr::Rational(r)) if r.is_negative() => {
                    let mut rest: Vec<Expr> = ops[1..].to_vec();
                    let flipped = -r.clone();
                    if !flipped.is_one() || rest.is_empty() {
                        rest.insert(0, Expr::Rational(flipped));
                    }
                    Some(if rest.len() == 1 {
                        rest.pop().unwrap()
                    } else {
                        Expr::Mul(rest)
                    })
                }
                _ => None,
            },
            _ => None,
        }
    }
}

#[cfg(test)]
mod tests;
