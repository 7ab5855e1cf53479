//! Normal-form rewriting.
//!
//! Expressions are flattened into a sparse sum-of-products: a map from
//! monomials (atom -> exponent) to numeric coefficients. Atoms are
//! variables, function applications (with normalized arguments) and sums
//! raised to powers that are not expanded — negative exponents, or positive
//! ones whose expansion would exceed the term cap. Rebuilding from that map
//! yields the canonical tree: flattened, sorted, folded, like terms
//! collected.

use std::collections::BTreeMap;

use num::{BigRational, One, Zero};

use super::{rational_to_f64, Expr};

/// Expanding a power of a sum is skipped when the multinomial term-count
/// estimate exceeds this bound; the power is then kept as an opaque atom.
const MAX_EXPAND_TERMS: usize = 50_000;

/// Distributing a product aborts (falling back to opaque factors) when the
/// accumulated term map grows beyond this bound.
const HARD_TERM_CAP: usize = 200_000;

/// Numeric coefficient: exact rational unless a float constant entered the
/// expression, in which case arithmetic degrades to f64.
#[derive(Debug, Clone, PartialEq)]
enum Coeff {
    Rat(BigRational),
    Float(f64),
}

impl Coeff {
    fn one() -> Coeff {
        Coeff::Rat(BigRational::one())
    }

    fn is_zero(&self) -> bool {
        match self {
            Coeff::Rat(r) => r.is_zero(),
            Coeff::Float(f) => *f == 0.0,
        }
    }

    fn is_one(&self) -> bool {
        match self {
            Coeff::Rat(r) => r.is_one(),
            Coeff::Float(f) => *f == 1.0,
        }
    }

    fn to_f64(&self) -> f64 {
        match self {
            Coeff::Rat(r) => rational_to_f64(r).unwrap_or(f64::NAN),
            Coeff::Float(f) => *f,
        }
    }

    fn add(&self, other: &Coeff) -> Coeff {
        match (self, other) {
            (Coeff::Rat(a), Coeff::Rat(b)) => Coeff::Rat(a + b),
            _ => Coeff::Float(self.to_f64() + other.to_f64()),
        }
    }

    fn mul(&self, other: &Coeff) -> Coeff {
        match (self, other) {
            (Coeff::Rat(a), Coeff::Rat(b)) => Coeff::Rat(a * b),
            _ => Coeff::Float(self.to_f64() * other.to_f64()),
        }
    }

    /// `self^n`; `None` when the power cannot be formed exactly
    /// (zero base with negative exponent, or out-of-range exponent).
    fn pow(&self, n: i64) -> Option<Coeff> {
        if n == 0 {
            return Some(Coeff::one());
        }
        match self {
            Coeff::Rat(r) => {
                let mag = u32::try_from(n.unsigned_abs()).ok()?;
                if r.is_zero() {
                    return if n > 0 { Some(Coeff::Rat(BigRational::zero())) } else { None };
                }
                let p = BigRational::new(r.numer().pow(mag), r.denom().pow(mag));
                Some(Coeff::Rat(if n > 0 { p } else { p.recip() }))
            }
            Coeff::Float(f) => {
                let e = i32::try_from(n).ok()?;
                if *f == 0.0 && n < 0 {
                    return None;
                }
                Some(Coeff::Float(f.powi(e)))
            }
        }
    }

    fn to_expr(&self) -> Expr {
        match self {
            Coeff::Rat(r) => Expr::Rational(r.clone()),
            Coeff::Float(f) => Expr::float(*f),
        }
    }
}

/// Monomial: atom expression -> nonzero integer exponent.
type Monomial = BTreeMap<Expr, i64>;

#[derive(Debug, Clone)]
struct Poly {
    terms: BTreeMap<Monomial, Coeff>,
}

/// Signals that distribution was abandoned because the term map grew past
/// [`HARD_TERM_CAP`]; the caller keeps the factors opaque instead.
struct Blowup;

impl Poly {
    fn zero() -> Poly {
        Poly { terms: BTreeMap::new() }
    }

    fn constant(c: Coeff) -> Poly {
        let mut p = Poly::zero();
        p.insert(Monomial::new(), c);
        p
    }

    fn atom(e: Expr) -> Poly {
        Poly::atom_pow(e, 1)
    }

    fn atom_pow(e: Expr, exp: i64) -> Poly {
        if exp == 0 {
            return Poly::constant(Coeff::one());
        }
        let mut mono = Monomial::new();
        mono.insert(e, exp);
        let mut p = Poly::zero();
        p.insert(mono, Coeff::one());
        p
    }

    fn insert(&mut self, mono: Monomial, coeff: Coeff) {
        if coeff.is_zero() {
            return;
        }
        match self.terms.get_mut(&mono) {
            Some(existing) => {
                let sum = existing.add(&coeff);
                if sum.is_zero() {
                    self.terms.remove(&mono);
                } else {
                    *existing = sum;
                }
            }
            None => {
                self.terms.insert(mono, coeff);
            }
        }
    }

    fn add(mut self, other: Poly) -> Poly {
        for (mono, coeff) in other.terms {
            self.insert(mono, coeff);
        }
        self
    }

    fn mul(&self, other: &Poly) -> Result<Poly, Blowup> {
        let mut out = Poly::zero();
        for (ma, ca) in &self.terms {
            for (mb, cb) in &other.terms {
                let mut mono = ma.clone();
                for (atom, exp) in mb {
                    let entry = mono.entry(atom.clone()).or_insert(0);
                    *entry = entry.checked_add(*exp).ok_or(Blowup)?;
                    if *entry == 0 {
                        mono.remove(atom);
                    }
                }
                out.insert(mono, ca.mul(cb));
                if out.terms.len() > HARD_TERM_CAP {
                    return Err(Blowup);
                }
            }
        }
        Ok(out)
    }

    /// Single-term polynomials can always be raised exactly; fails only on
    /// coefficient/exponent overflow.
    fn pow_single(&self, n: i64) -> Option<Poly> {
        debug_assert_eq!(self.terms.len(), 1);
        let (mono, coeff) = self.terms.iter().next().unwrap();
        let new_coeff = coeff.pow(n)?;
        let mut new_mono = Monomial::new();
        for (atom, exp) in mono {
            let e = exp.checked_mul(n)?;
            if e != 0 {
                new_mono.insert(atom.clone(), e);
            }
        }
        let mut p = Poly::zero();
        p.insert(new_mono, new_coeff);
        Some(p)
    }

    fn pow_multi(&self, n: u32) -> Result<Poly, Blowup> {
        let mut result = Poly::constant(Coeff::one());
        let mut base = self.clone();
        let mut k = n;
        while k > 0 {
            if k & 1 == 1 {
                result = result.mul(&base)?;
            }
            k >>= 1;
            if k > 0 {
                base = base.mul(&base)?;
            }
        }
        Ok(result)
    }
}

/// Upper bound on the number of distinct monomials of `(t terms)^n`:
/// the multiset coefficient C(n + t - 1, t - 1), computed in f64.
fn expansion_estimate(t: usize, n: u32) -> f64 {
    let mut acc = 1.0f64;
    for i in 1..t {
        acc *= (n as f64 + i as f64) / i as f64;
        if acc > 1e18 {
            return acc;
        }
    }
    acc
}

/// Fallback for products whose distribution blew past the cap: both factors
/// are rebuilt and kept as atoms of a single term. Deterministic, so
/// re-normalizing the result reproduces it.
fn opaque_product(a: &Poly, b: &Poly) -> Poly {
    let mut mono = Monomial::new();
    for factor in [rebuild(a), rebuild(b)] {
        let entry = mono.entry(factor).or_insert(0);
        *entry += 1;
    }
    let mut p = Poly::zero();
    p.insert(mono, Coeff::one());
    p
}

fn to_poly(e: &Expr) -> Poly {
    match e {
        Expr::Rational(r) => Poly::constant(Coeff::Rat(r.clone())),
        Expr::Float(f) => Poly::constant(Coeff::Float(f.0)),
        Expr::Var(_) => Poly::atom(e.clone()),
        Expr::Add(ops) => ops.iter().fold(Poly::zero(), |acc, op| acc.add(to_poly(op))),
        Expr::Mul(ops) => {
            let mut acc = Poly::constant(Coeff::one());
            for op in ops {
                let p = to_poly(op);
                acc = match acc.mul(&p) {
                    Ok(product) => product,
                    Err(Blowup) => opaque_product(&acc, &p),
                };
            }
            acc
        }
        Expr::Pow(base, n) => {
            if *n == 0 {
                return Poly::constant(Coeff::one());
            }
            let bp = to_poly(base);
            match bp.terms.len() {
                0 => {
                    // 0^n
                    if *n > 0 {
                        Poly::zero()
                    } else {
                        Poly::atom_pow(Expr::zero(), *n)
                    }
                }
                1 => match bp.pow_single(*n) {
                    Some(p) => p,
                    None => Poly::atom_pow(rebuild(&bp), *n),
                },
                t => {
                    if *n > 0 && expansion_estimate(t, *n as u32) <= MAX_EXPAND_TERMS as f64 {
                        match bp.pow_multi(*n as u32) {
                            Ok(p) => p,
                            Err(Blowup) => Poly::atom_pow(rebuild(&bp), *n),
                        }
                    } else {
                        Poly::atom_pow(rebuild(&bp), *n)
                    }
                }
            }
        }
        Expr::Func(f, arg) => Poly::atom(Expr::Func(*f, Box::new(normalize(arg)))),
    }
}

fn rebuild(p: &Poly) -> Expr {
    if p.terms.is_empty() {
        return Expr::zero();
    }
    let mut terms: Vec<Expr> = p
        .terms
        .iter()
        .map(|(mono, coeff)| {
            let mut factors: Vec<Expr> = mono
                .iter()
                .map(|(atom, exp)| {
                    if *exp == 1 {
                        atom.clone()
                    } else {
                        Expr::Pow(Box::new(atom.clone()), *exp)
                    }
                })
                .collect();
            if factors.is_empty() {
                coeff.to_expr()
            } else {
                if !coeff.is_one() {
                    factors.push(coeff.to_expr());
                }
                factors.sort();
                if factors.len() == 1 {
                    factors.pop().unwrap()
                } else {
                    Expr::Mul(factors)
                }
            }
        })
        .collect();
    terms.sort();
    if terms.len() == 1 {
        terms.pop().unwrap()
    } else {
        Expr::Add(terms)
    }
}

pub(super) fn normalize(e: &Expr) -> Expr {
    rebuild(&to_poly(e))
}
