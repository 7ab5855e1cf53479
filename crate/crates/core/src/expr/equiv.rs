//! Four-valued zero-equivalence testing.
//!
//! Exact zero testing is undecidable over this expression language, so the
//! verdict always records how it was reached: a proof via normal forms, or
//! sampled evidence. A `NumericallyEqual` verdict is not a proof — the
//! normal form does not rewrite transcendental identities such as
//! `sin^2 + cos^2 = 1`.

use crate::rng::SplitMix64;

use super::{Assignment, EvalError, Expr};

/// Sampling range used for numeric equivalence fallbacks, matching the
/// default range of the sampling engine.
pub(crate) const SAMPLE_RANGE: (f64, f64) = (-2.0, 2.0);

/// Number of re-draws allowed per sample point when evaluation hits a
/// domain error (or a non-finite value) before the error is reported.
const RETRY_BUDGET: usize = 8;

/// Outcome of an equivalence check between two expressions.
#[derive(Debug, Clone, PartialEq)]
pub enum Equivalence {
    /// The difference normalizes to the zero constant.
    ProvedEqual,
    /// The difference normalizes to a nonzero constant.
    ProvedUnequal { difference: Expr },
    /// All sampled residuals were within tolerance.
    NumericallyEqual { max_residual: f64 },
    /// Some sampled point violated the tolerance.
    NumericallyUnequal { witness: Assignment, residual: f64 },
}

impl Equivalence {
    /// True when the verdict supports equality (proved or sampled).
    pub fn holds(&self) -> bool {
        matches!(
            self,
            Equivalence::ProvedEqual | Equivalence::NumericallyEqual { .. }
        )
    }

    pub fn is_proved(&self) -> bool {
        matches!(self, Equivalence::ProvedEqual)
    }

    pub fn decided_numerically(&self) -> bool {
        matches!(
            self,
            Equivalence::NumericallyEqual { .. } | Equivalence::NumericallyUnequal { .. }
        )
    }

    pub fn max_residual(&self) -> Option<f64> {
        match self {
            Equivalence::NumericallyEqual { max_residual } => Some(*max_residual),
            Equivalence::NumericallyUnequal { residual, .. } => Some(*residual),
            _ => None,
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            Equivalence::ProvedEqual => "proved-equal",
            Equivalence::ProvedUnequal { .. } => "proved-unequal",
            Equivalence::NumericallyEqual { .. } => "numerically-equal",
            Equivalence::NumericallyUnequal { .. } => "numerically-unequal",
        }
    }
}

/// Decides whether `a` and `b` agree, symbolically first and by sampling
/// otherwise. Residuals are compared against `tol * (1 + max(|a|, |b|))`
/// pointwise. A domain error that survives the per-point retry budget is
/// reported as an error rather than silently skipped.
pub fn equivalence_check(
    a: &Expr,
    b: &Expr,
    samples: usize,
    tol: f64,
    seed: u64,
) -> Result<Equivalence, EvalError> {
    let diff = a.clone() - b.clone();
    if diff.is_zero() {
        return Ok(Equivalence::ProvedEqual);
    }
    if diff.is_constant() {
        return Ok(Equivalence::ProvedUnequal { difference: diff });
    }

    let mut vars = a.free_vars();
    vars.extend(b.free_vars());
    let vars: Vec<String> = vars.into_iter().collect();

    let mut rng = SplitMix64::new(seed);
    let mut max_residual = 0.0f64;
    for _ in 0..samples.max(1) {
        let mut last_err: Option<EvalError> = None;
        let mut decided = false;
        for _ in 0..RETRY_BUDGET {
            let point: Assignment = vars
                .iter()
                .map(|v| (v.clone(), rng.next_in_range(SAMPLE_RANGE.0, SAMPLE_RANGE.1)))
                .collect();
            let va = match a.evaluate(&point) {
                Ok(v) if v.is_finite() => v,
                Ok(v) => {
                    last_err = Some(EvalError::Domain(format!("non-finite value {v}")));
                    continue;
                }
                Err(e) => {
                    last_err = Some(e);
                    continue;
                }
            };
            let vb = match b.evaluate(&point) {
                Ok(v) if v.is_finite() => v,
                Ok(v) => {
                    last_err = Some(EvalError::Domain(format!("non-finite value {v}")));
                    continue;
                }
                Err(e) => {
                    last_err = Some(e);
                    continue;
                }
            };
            let residual = (va - vb).abs();
            let scale = tol * (1.0 + va.abs().max(vb.abs()));
            if residual > scale {
                return Ok(Equivalence::NumericallyUnequal {
                    witness: point,
                    residual,
                });
            }
            max_residual = max_residual.max(residual);
            decided = true;
            break;
        }
        if !decided {
            return Err(last_err.unwrap_or_else(|| {
                EvalError::Domain("sampling retry budget exhausted".into())
            }));
        }
    }
    Ok(Equivalence::NumericallyEqual { max_residual })
}
