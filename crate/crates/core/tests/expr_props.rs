//! Property tests for the expression engine: normal-form idempotence,
//! value preservation, derivative commutation and finite-difference
//! agreement.

use std::collections::BTreeSet;

use proptest::prelude::*;

use jetcalc_core::expr::{equivalence_check, Assignment, Equivalence, Expr, Func};
use jetcalc_core::numeric::finite_difference_check;

const VARS: [&str; 4] = ["x1", "x2", "y1", "v1_1"];

fn leaf() -> impl Strategy<Value = Expr> {
    prop_oneof![
        (-6i64..7).prop_map(Expr::int),
        ((-6i64..7), (1i64..5)).prop_map(|(n, d)| Expr::rational(n, d)),
        (0usize..VARS.len()).prop_map(|i| Expr::var(VARS[i])),
    ]
}

/// Raw (not necessarily normalized) trees in the polynomial fragment.
fn poly_expr() -> impl Strategy<Value = Expr> {
    leaf().prop_recursive(3, 24, 3, |inner| {
        prop_oneof![
            prop::collection::vec(inner.clone(), 2..4).prop_map(Expr::Add),
            prop::collection::vec(inner.clone(), 2..4).prop_map(Expr::Mul),
            (inner, 0i64..4).prop_map(|(base, n)| Expr::Pow(Box::new(base), n)),
        ]
    })
}

/// Smooth trees: polynomial structure plus sin/cos/exp nodes (ln and sqrt
/// are excluded to keep every sample point in domain).
fn smooth_expr() -> impl Strategy<Value = Expr> {
    leaf().prop_recursive(3, 16, 3, |inner| {
        prop_oneof![
            prop::collection::vec(inner.clone(), 2..3).prop_map(Expr::Add),
            prop::collection::vec(inner.clone(), 2..3).prop_map(Expr::Mul),
            (inner.clone(), 1i64..3).prop_map(|(base, n)| Expr::Pow(Box::new(base), n)),
            inner
                .clone()
                .prop_map(|arg| Expr::Func(Func::Sin, Box::new(arg))),
            inner
                .clone()
                .prop_map(|arg| Expr::Func(Func::Cos, Box::new(arg))),
        ]
    })
}

fn point() -> impl Strategy<Value = Assignment> {
    prop::collection::vec(-2.0f64..2.0, VARS.len()).prop_map(|values| {
        VARS.iter()
            .map(|v| v.to_string())
            .zip(values)
            .collect::<Assignment>()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn normalize_is_idempotent(e in poly_expr()) {
        let once = e.normalize();
        prop_assert_eq!(once.normalize(), once);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn normalize_preserves_value(e in poly_expr(), at in point()) {
        let raw = e.evaluate(&at).unwrap();
        let normalized = e.normalize().evaluate(&at).unwrap();
        prop_assume!(raw.is_finite() && raw.abs() < 1e12);
        let tolerance = 1e-12 * (1.0 + raw.abs());
        prop_assert!(
            (raw - normalized).abs() <= tolerance,
            "raw {} vs normalized {}",
            raw,
            normalized
        );
    }

    #[test]
    fn mixed_partials_commute(e in poly_expr()) {
        let du_dw = e.differentiate("x1").differentiate("y1");
        let dw_du = e.differentiate("y1").differentiate("x1");
        prop_assert_eq!(
            equivalence_check(&du_dw, &dw_du, 4, 1e-9, 17).unwrap(),
            Equivalence::ProvedEqual
        );
    }

    #[test]
    fn smooth_mixed_partials_commute(e in smooth_expr()) {
        let du_dw = e.differentiate("x1").differentiate("v1_1");
        let dw_du = e.differentiate("v1_1").differentiate("x1");
        prop_assert!(equivalence_check(&du_dw, &dw_du, 8, 1e-9, 18).unwrap().holds());
    }

    #[test]
    fn derivative_matches_finite_difference(e in smooth_expr(), at in point()) {
        let fd = match finite_difference_check(&e, "x1", &at, 1e-6) {
            Ok(fd) => fd,
            Err(_) => return Ok(()), // out-of-domain draw
        };
        prop_assume!(fd.symbolic.is_finite() && fd.symbolic.abs() < 1e6);
        prop_assert!(
            fd.abs_diff <= f64::max(1e-6, 1e-4 * fd.symbolic.abs()),
            "symbolic {} vs numeric {}",
            fd.symbolic,
            fd.numeric
        );
    }

    #[test]
    fn display_round_trips(e in poly_expr()) {
        let normalized = e.normalize();
        let vocabulary: BTreeSet<String> = VARS.iter().map(|s| s.to_string()).collect();
        let reparsed = jetcalc_core::parse_expr(&normalized.to_string(), &vocabulary).unwrap();
        prop_assert_eq!(reparsed, normalized);
    }
}
