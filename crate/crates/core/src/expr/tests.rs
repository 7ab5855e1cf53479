use std::collections::{BTreeMap, BTreeSet};

use super::*;

fn vocab(names: &[&str]) -> BTreeSet<String> {
    names.iter().map(|s| s.to_string()).collect()
}

fn parse(src: &str, names: &[&str]) -> Expr {
    parse_expr(src, &vocab(names)).unwrap()
}

fn kg_vocab() -> BTreeSet<String> {
    vocab(&["x1", "x2", "y1", "v1_1", "v1_2"])
}

fn kg_lagrangian() -> Expr {
    parse_expr("1/2*v1_1^2 - 1/2*v1_2^2 - 1/2*y1^2", &kg_vocab()).unwrap()
}

fn assignment(pairs: &[(&str, f64)]) -> Assignment {
    pairs.iter().map(|(k, v)| (k.to_string(), *v)).collect()
}

#[test]
fn parse_half_v_squared() {
    let e = parse("1/2*v1_1^2", &["v1_1"]);
    let expected = Expr::Mul(vec![
        Expr::rational(1, 2),
        Expr::Pow(Box::new(Expr::var("v1_1")), 2),
    ]);
    assert_eq!(e, expected);
}

#[test]
fn parse_cancelling_product_is_zero() {
    let e = parse("y1*(v1_1 - v1_1)", &["y1", "v1_1"]);
    assert_eq!(e, Expr::zero());
}

#[test]
fn parse_sin_squared() {
    let e = parse("sin(x1)^2", &["x1"]);
    let expected = Expr::Pow(Box::new(Expr::Func(Func::Sin, Box::new(Expr::var("x1")))), 2);
    assert_eq!(e, expected);
}

#[test]
fn parse_decimal_literal_is_exact_rational() {
    let e = parse("0.25*x1", &["x1"]);
    assert_eq!(e, parse("1/4*x1", &["x1"]));
}

#[test]
fn parse_negative_exponent() {
    let e = parse("x1^-2", &["x1"]);
    assert_eq!(e, Expr::Pow(Box::new(Expr::var("x1")), -2));
}

#[test]
fn unary_minus_binds_tighter_than_power() {
    // `base := '-' base` puts the sign inside the power: -x^2 == (-x)^2.
    let e = parse("-x1^2", &["x1"]);
    assert_eq!(e, Expr::Pow(Box::new(Expr::var("x1")), 2));
    assert_eq!(parse("-(x1^2)", &["x1"]), parse("0 - x1^2", &["x1"]));
    assert_eq!(parse("-x1^3", &["x1"]), parse("0 - x1^3", &["x1"]));
}

#[test]
fn parse_reports_syntax_error_position() {
    let err = parse_expr("x1 + * 2", &vocab(&["x1"])).unwrap_err();
    match err {
        ParseError::Syntax { position, .. } => assert_eq!(position, 5),
        other => panic!("expected syntax error, got {other:?}"),
    }
}

#[test]
fn parse_rejects_unknown_identifier() {
    let err = parse_expr("x1 + q7", &vocab(&["x1"])).unwrap_err();
    match err {
        ParseError::UnknownIdentifier { name, .. } => assert_eq!(name, "q7"),
        other => panic!("expected unknown identifier, got {other:?}"),
    }
}

#[test]
fn parse_rejects_trailing_input() {
    assert!(matches!(
        parse_expr("x1 )", &vocab(&["x1"])),
        Err(ParseError::Syntax { .. })
    ));
}

#[test]
fn parse_rejects_deep_nesting() {
    let src = format!("{}x1{}", "(".repeat(500), ")".repeat(500));
    assert!(matches!(
        parse_expr(&src, &vocab(&["x1"])),
        Err(ParseError::Syntax { .. })
    ));
}

#[test]
fn func_name_without_call_is_ordinary_identifier() {
    // `sin` not followed by `(` is looked up in the vocabulary.
    assert!(matches!(
        parse_expr("sin + 1", &vocab(&["x1"])),
        Err(ParseError::UnknownIdentifier { .. })
    ));
    let e = parse("sin + 1", &["sin"]);
    assert_eq!(e, Expr::Add(vec![Expr::one(), Expr::var("sin")]));
}

#[test]
fn differentiate_kg_by_velocity() {
    let e = kg_lagrangian();
    assert_eq!(e.differentiate("v1_1"), Expr::var("v1_1"));
}

#[test]
fn differentiate_independent_variable() {
    assert_eq!(Expr::var("y1").differentiate("x1"), Expr::zero());
}

#[test]
fn differentiate_sine() {
    let e = Expr::Func(Func::Sin, Box::new(Expr::var("y1")));
    assert_eq!(
        e.differentiate("y1"),
        Expr::Func(Func::Cos, Box::new(Expr::var("y1")))
    );
}

#[test]
fn differentiate_chain_and_product() {
    // d/dx [x * ln(x)] = ln(x) + 1
    let x = Expr::var("x1");
    let e = x.clone() * Expr::Func(Func::Ln, Box::new(x.clone()));
    let expected = Expr::Func(Func::Ln, Box::new(x)) + Expr::one();
    assert_eq!(e.differentiate("x1"), expected);
}

#[test]
fn evaluate_kg_at_running_point() {
    let e = kg_lagrangian();
    let at = assignment(&[("y1", 1.0), ("v1_1", 2.0), ("v1_2", 1.0)]);
    assert_eq!(e.evaluate(&at).unwrap(), 1.0);
}

#[test]
fn evaluate_zero_constant_without_variables() {
    assert_eq!(Expr::zero().evaluate(&Assignment::new()).unwrap(), 0.0);
}

#[test]
fn evaluate_even_power_of_negative() {
    let e = Expr::Pow(Box::new(Expr::var("x1")), 2);
    assert_eq!(e.evaluate(&assignment(&[("x1", -3.0)])).unwrap(), 9.0);
}

#[test]
fn evaluate_missing_variable_errors() {
    assert_eq!(
        Expr::var("x1").evaluate(&Assignment::new()),
        Err(EvalError::MissingVariable("x1".into()))
    );
}

#[test]
fn evaluate_domain_errors() {
    let inv = parse("1/x1", &["x1"]);
    assert!(matches!(
        inv.evaluate(&assignment(&[("x1", 0.0)])),
        Err(EvalError::Domain(_))
    ));
    let ln = Expr::Func(Func::Ln, Box::new(Expr::var("x1")));
    assert!(matches!(
        ln.evaluate(&assignment(&[("x1", -1.0)])),
        Err(EvalError::Domain(_))
    ));
    let sqrt = Expr::Func(Func::Sqrt, Box::new(Expr::var("x1")));
    assert!(matches!(
        sqrt.evaluate(&assignment(&[("x1", -1.0)])),
        Err(EvalError::Domain(_))
    ));
}

#[test]
fn substitute_renames_momentum() {
    let e = parse("p1_1^2", &["p1_1"]);
    let map: BTreeMap<String, Expr> = [("p1_1".to_string(), Expr::var("v1_1"))].into();
    assert_eq!(e.substitute(&map), parse("v1_1^2", &["v1_1"]));
}

#[test]
fn substitute_identity_is_noop() {
    let e = kg_lagrangian();
    let map: BTreeMap<String, Expr> = [("x1".to_string(), Expr::var("x1"))].into();
    assert_eq!(e.substitute(&map), e);
}

#[test]
fn substitute_velocities_by_momenta() {
    let e = kg_lagrangian();
    let map: BTreeMap<String, Expr> = [
        ("v1_1".to_string(), Expr::var("p1_1")),
        (
            "v1_2".to_string(),
            Expr::Mul(vec![Expr::int(-1), Expr::var("p1_2")]),
        ),
    ]
    .into();
    let expected = parse(
        "1/2*p1_1^2 - 1/2*p1_2^2 - 1/2*y1^2",
        &["p1_1", "p1_2", "y1"],
    );
    assert_eq!(e.substitute(&map), expected);
}

#[test]
fn normalize_cancels_opposite_terms() {
    let e = Expr::Add(vec![
        Expr::Mul(vec![Expr::int(2), Expr::var("x1")]),
        Expr::Mul(vec![Expr::int(-2), Expr::var("x1")]),
    ]);
    assert_eq!(e.normalize(), Expr::zero());
}

#[test]
fn normalize_collects_repeated_factor() {
    let e = Expr::Mul(vec![Expr::var("x1"), Expr::var("x1")]);
    assert_eq!(e.normalize(), Expr::Pow(Box::new(Expr::var("x1")), 2));
}

#[test]
fn normalize_sorts_sum_operands() {
    let a = Expr::Add(vec![Expr::var("y1"), Expr::var("x1")]).normalize();
    let b = Expr::Add(vec![Expr::var("x1"), Expr::var("y1")]).normalize();
    assert_eq!(a, b);
}

#[test]
fn normalize_is_idempotent_on_samples() {
    let samples = [
        "(x1 + y1)^3 - x1^3",
        "sin(x1)^2 + cos(x1)^2",
        "1/(x1 + y1) * (x1 + y1)",
        "x1/3 - 2*y1/7 + x1*y1*x1",
        "sqrt(x1^2 + 1) * exp(y1) - ln(x1)^2",
        "-(x1 - y1)^2",
    ];
    for src in samples {
        let e = parse(src, &["x1", "y1"]);
        assert_eq!(e.normalize(), e, "normal form not idempotent for {src}");
    }
}

#[test]
fn equivalence_proves_polynomial_expansion() {
    let a = parse("(v1_1 + y1)^2", &["v1_1", "y1"]);
    let b = parse("v1_1^2 + 2*v1_1*y1 + y1^2", &["v1_1", "y1"]);
    assert_eq!(
        equivalence_check(&a, &b, 10, 1e-9, 1).unwrap(),
        Equivalence::ProvedEqual
    );
}

#[test]
fn equivalence_trig_identity_is_numeric() {
    let a = parse("sin(x1)^2 + cos(x1)^2", &["x1"]);
    let b = Expr::one();
    match equivalence_check(&a, &b, 50, 1e-9, 2).unwrap() {
        Equivalence::NumericallyEqual { max_residual } => assert!(max_residual <= 1e-9),
        other => panic!("expected numeric verdict, got {other:?}"),
    }
}

#[test]
fn equivalence_detects_constant_offset() {
    let a = Expr::var("x1");
    let b = parse("x1 + 1", &["x1"]);
    assert!(matches!(
        equivalence_check(&a, &b, 10, 1e-9, 3).unwrap(),
        Equivalence::ProvedUnequal { .. }
    ));
}

#[test]
fn equivalence_finds_numeric_witness() {
    let a = parse("sin(x1)", &["x1"]);
    let b = parse("x1", &["x1"]);
    match equivalence_check(&a, &b, 50, 1e-9, 4).unwrap() {
        Equivalence::NumericallyUnequal { witness, residual } => {
            assert!(witness.contains_key("x1"));
            assert!(residual > 1e-9);
        }
        other => panic!("expected unequal verdict, got {other:?}"),
    }
}

#[test]
fn display_round_trips_through_parser() {
    let sources = [
        "1/2*v1_1^2 - 1/2*v1_2^2 - 1/2*y1^2",
        "(x1 + y1)^3",
        "sin(x1)^2*cos(y1) - 3*x1",
        "x1^-2 + 1/(x1 + 1)",
        "-x1 - y1",
    ];
    let names = ["x1", "y1", "v1_1", "v1_2"];
    for src in sources {
        let e = parse(src, &names);
        let rendered = e.to_string();
        let reparsed = parse(&rendered, &names);
        assert_eq!(reparsed, e, "display round-trip failed: {src} -> {rendered}");
    }
}

#[test]
fn float_constants_fold() {
    let e = Expr::Mul(vec![Expr::float(2.0), Expr::float(3.0), Expr::var("x1")]);
    assert_eq!(
        e.normalize(),
        Expr::Mul(vec![Expr::float(6.0), Expr::var("x1")])
    );
}

#[test]
fn power_of_sum_with_negative_exponent_stays_opaque() {
    let e = parse("(x1 + y1)^-1", &["x1", "y1"]);
    match &e {
        Expr::Pow(base, -1) => assert!(matches!(**base, Expr::Add(_))),
        other => panic!("expected opaque inverse, got {other:?}"),
    }
    // x * (x + y)^-1 evaluates consistently.
    let prod = parse("x1/(x1 + y1)", &["x1", "y1"]);
    let at = assignment(&[("x1", 1.0), ("y1", 3.0)]);
    assert!((prod.evaluate(&at).unwrap() - 0.25).abs() < 1e-15);
}
