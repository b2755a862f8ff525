use super::*;
use proptest::prelude::*;

fn vars(names: &[&str]) -> VariableOrder {
    VariableOrder::new(names).unwrap()
}

fn close(a: f64, b: f64, rel: f64) -> bool {
    (a - b).abs() <= rel * a.abs().max(b.abs()).max(1.0)
}

#[test]
fn parses_single_variable() {
    assert_eq!(parse("x", &vars(&["x"])).unwrap(), Variable(0));
}

#[test]
fn parses_line_of_saddles_cost() {
    let v = vars(&["x", "y", "z"]);
    let e = parse("2*x*y + 2*x*z - 2*x - y - z", &v).unwrap();
    let (x, y, z) = (0.3, -1.2, 2.5);
    let want = 2.0 * x * y + 2.0 * x * z - 2.0 * x - y - z;
    assert_eq!(e.evaluate(&[x, y, z]).unwrap(), want);
}

#[test]
fn parses_double_well_cost() {
    let v = vars(&["x", "y"]);
    let e = parse("x^2/2 + y^4/4 - y^2/2", &v).unwrap();
    assert_eq!(e.evaluate(&[0.0, 1.0]).unwrap(), -0.25);
}

#[test]
fn precedence_rules() {
    let v = vars(&["x"]);
    let at = |s: &str, x: f64| parse(s, &v).unwrap().evaluate(&[x]).unwrap();
    assert_eq!(at("-x^2", 3.0), -9.0);
    assert_eq!(at("2*x^2", 3.0), 18.0);
    assert_eq!(at("1 - 2 - 3", 0.0), -4.0);
    assert_eq!(at("8 / 4 / 2", 0.0), 1.0);
    assert_eq!(at("(1 + x)^2", 2.0), 9.0);
    assert_eq!(at("x^(3)", 2.0), 8.0);
    assert_eq!(at("2 * -x", 2.0), -4.0);
    assert_eq!(at("1.5e1 + x", 0.0), 15.0);
    assert_eq!(at("exp(0) + cos(0) + sin(0)", 0.0), 2.0);
}

#[test]
fn parse_errors() {
    let v = vars(&["x", "y"]);
    assert!(matches!(parse("", &v), Err(Error::Syntax { .. })));
    assert!(matches!(parse("x +", &v), Err(Error::Syntax { .. })));
    assert!(matches!(parse("(x", &v), Err(Error::Syntax { .. })));
    assert!(matches!(parse("x y", &v), Err(Error::Syntax { position: 2, .. })));
    assert!(matches!(parse("x $ y", &v), Err(Error::Syntax { position: 2, .. })));
    assert!(matches!(parse("x^-1", &v), Err(Error::Syntax { .. })));
    assert!(matches!(parse("x^y", &v), Err(Error::Syntax { .. })));
    assert!(matches!(parse("x^2^3", &v), Err(Error::Syntax { .. })));
    assert!(matches!(parse("sin x", &v), Err(Error::Syntax { .. })));
    assert_eq!(parse("x + z", &v), Err(Error::UnknownVariable("z".into())));
    assert_eq!(parse("x^1.5", &v), Err(Error::NonIntegerExponent("1.5".into())));
    assert!(parse("x^2.0", &v).is_ok());
}

#[test]
fn variable_order_validation() {
    assert!(matches!(
        VariableOrder::new(&["x", "x"]),
        Err(Error::DuplicateVariable(_))
    ));
    assert!(VariableOrder::new(&["sin"]).is_err());
    assert!(VariableOrder::new(&["1x"]).is_err());
    assert_eq!(VariableOrder::indexed(2).names(), &["x1".to_string(), "x2".to_string()]);
}

#[test]
fn base_derivative_rules() {
    let v = vars(&["x", "y"]);
    let x = parse("x", &v).unwrap();
    assert_eq!(x.differentiate(&v, "x").unwrap(), Constant(1.0));
    assert_eq!(x.differentiate(&v, "y").unwrap(), Constant(0.0));
    assert!(matches!(x.differentiate(&v, "w"), Err(Error::UnknownVariable(_))));
}

#[test]
fn line_of_saddles_gradient_is_affine() {
    let v = vars(&["x", "y", "z"]);
    let f = parse("2*x*y + 2*x*z - 2*x - y - z", &v).unwrap();
    let dx = f.differentiate(&v, "x").unwrap();
    assert_eq!(dx.display(&v).to_string(), "2*y + 2*z - 2");
    let dy = f.differentiate(&v, "y").unwrap();
    assert_eq!(dy.display(&v).to_string(), "2*x - 1");
    let dz = f.differentiate(&v, "z").unwrap();
    assert_eq!(dz.display(&v).to_string(), "2*x - 1");
    for w in [0.0, 0.3, 1.0] {
        let p = [0.5, w, 1.0 - w];
        assert_eq!(dx.evaluate(&p).unwrap(), 0.0);
        assert_eq!(dy.evaluate(&p).unwrap(), 0.0);
        assert_eq!(dz.evaluate(&p).unwrap(), 0.0);
    }
}

#[test]
fn double_well_second_derivative() {
    let v = vars(&["x", "y"]);
    let f = parse("x^2/2 + y^4/4 - y^2/2", &v).unwrap();
    let dyy = f.derivative(1).derivative(1);
    assert_eq!(dyy.display(&v).to_string(), "3*y^2 - 1");
    for y in [-2.0, -0.5, 0.0, 1.0, 2.0] {
        assert_eq!(dyy.evaluate(&[0.0, y]).unwrap(), 3.0 * y * y - 1.0);
    }
    assert!(f.derivative(0).derivative(1).is_zero());
    assert!(f.derivative(1).derivative(0).is_zero());
}

#[test]
fn evaluation_flags_non_finite() {
    let v = vars(&["x"]);
    assert_eq!(parse("1/x", &v).unwrap().evaluate(&[0.0]), Err(Error::NonFiniteValue));
    assert_eq!(
        parse("exp(x)", &v).unwrap().evaluate(&[1e3]),
        Err(Error::NonFiniteValue)
    );
    assert_eq!(parse("x/0", &v).unwrap().evaluate(&[1.0]), Err(Error::NonFiniteValue));
    // intermediate overflow is flagged even if the final value would be finite
    assert_eq!(
        parse("x^400 - x^400", &v).unwrap().evaluate(&[10.0]),
        Err(Error::NonFiniteValue)
    );
    assert_eq!(Constant(5.0).evaluate(&[]).unwrap(), 5.0);
}

#[test]
fn division_derivative_uses_quotient_rule() {
    let v = vars(&["x"]);
    let e = parse("1/(1 + x^2)", &v).unwrap();
    let d = e.derivative(0);
    for x in [-2.0, -0.3, 0.0, 0.7, 3.0] {
        let want = -2.0 * x / ((1.0 + x * x) * (1.0 + x * x));
        assert!(close(d.evaluate(&[x]).unwrap(), want, 1e-14));
    }
}

type Hand = fn(f64, f64, f64) -> f64;

/// Polynomial corpus with hand-written evaluators.
fn corpus() -> Vec<(&'static str, Hand)> {
    vec![
        ("x", |x, _, _| x),
        ("3", |_, _, _| 3.0),
        ("x + y", |x, y, _| x + y),
        ("x - y - z", |x, y, z| x - y - z),
        ("x*y*z", |x, y, z| x * y * z),
        ("2*x*y + 2*x*z - 2*x - y - z", |x, y, z| {
            2.0 * x * y + 2.0 * x * z - 2.0 * x - y - z
        }),
        ("x^2/2 + y^4/4 - y^2/2", |x, y, _| {
            x * x / 2.0 + y * y * y * y / 4.0 - y * y / 2.0
        }),
        ("x^2 + y^2 + z^2", |x, y, z| x * x + y * y + z * z),
        ("(x - 1)^2 + 100*(y - x^2)^2", |x, y, _| {
            (x - 1.0) * (x - 1.0) + 100.0 * (y - x * x) * (y - x * x)
        }),
        ("x^3 - 3*x*y^2", |x, y, _| x * x * x - 3.0 * x * y * y),
        ("-x^2 + y", |x, y, _| -(x * x) + y),
        ("(x + y)*(x - y)", |x, y, _| (x + y) * (x - y)),
        ("x^5", |x, _, _| x * x * x * x * x),
        ("0.5*x^2 - 0.25*y", |x, y, _| 0.5 * x * x - 0.25 * y),
        ("x*y + y*z + z*x", |x, y, z| x * y + y * z + z * x),
        ("(x^2 + y^2 - 1)^2", |x, y, _| {
            (x * x + y * y - 1.0) * (x * x + y * y - 1.0)
        }),
        ("x^4 - 2*x^2 + z", |x, _, z| x * x * x * x - 2.0 * x * x + z),
        ("1 - x/2 + y/3 - z/4", |x, y, z| 1.0 - x / 2.0 + y / 3.0 - z / 4.0),
        ("x^2*y^2*z^2", |x, y, z| x * x * y * y * z * z),
        ("(1 + x + y + z)^3", |x, y, z| {
            let s = 1.0 + x + y + z;
            s * s * s
        }),
        ("x*(y*(z + 1) - 2)", |x, y, z| x * (y * (z + 1.0) - 2.0)),
        ("7*x^6 - 6*y^7 + z", |x, y, z| 7.0 * x.powi(6) - 6.0 * y.powi(7) + z),
    ]
}

#[test]
fn corpus_matches_hand_coded_evaluation() {
    let v = vars(&["x", "y", "z"]);
    let mut rng = crate::rng::Stream::new(7, 0);
    let corpus = corpus();
    assert!(corpus.len() >= 20);
    for (text, hand) in &corpus {
        let e = parse(text, &v).unwrap();
        for _ in 0..100 {
            let p = [
                rng.open_interval(-2.0, 2.0),
                rng.open_interval(-2.0, 2.0),
                rng.open_interval(-2.0, 2.0),
            ];
            let got = e.evaluate(&p).unwrap();
            let want = hand(p[0], p[1], p[2]);
            assert!(close(got, want, 1e-14), "{text} at {p:?}: {got} vs {want}");
        }
    }
}

#[test]
fn symbolic_derivatives_match_central_differences() {
    let v = vars(&["x", "y", "z"]);
    let mut rng = crate::rng::Stream::new(11, 0);
    let h = 1e-6;
    for (text, _) in corpus() {
        let e = parse(text, &v).unwrap();
        for var in 0..3 {
            let d = e.derivative(var);
            for _ in 0..20 {
                let p = [
                    rng.open_interval(-1.5, 1.5),
                    rng.open_interval(-1.5, 1.5),
                    rng.open_interval(-1.5, 1.5),
                ];
                let mut hi = p;
                let mut lo = p;
                hi[var] += h;
                lo[var] -= h;
                let fd = (e.evaluate(&hi).unwrap() - e.evaluate(&lo).unwrap()) / (2.0 * h);
                let sym = d.evaluate(&p).unwrap();
                assert!(close(sym, fd, 1e-6), "d/d{var} {text} at {p:?}: {sym} vs {fd}");
            }
        }
    }
}

#[test]
fn transcendental_derivatives() {
    let v = vars(&["x", "y"]);
    let e = parse("sin(x*y) + exp(-x^2) * cos(y)", &v).unwrap();
    let (x, y) = (0.4_f64, -1.1_f64);
    let dx = (y * (x * y).cos()) + (-2.0 * x) * (-x * x).exp() * y.cos();
    let dy = (x * (x * y).cos()) - (-x * x).exp() * y.sin();
    assert!(close(e.derivative(0).evaluate(&[x, y]).unwrap(), dx, 1e-14));
    assert!(close(e.derivative(1).evaluate(&[x, y]).unwrap(), dy, 1e-14));
}

fn arb_expr() -> impl Strategy<Value = Expression> {
    let leaf = prop_oneof![
        (-3.0f64..3.0).prop_map(|c| Constant((c * 8.0).round() / 8.0)),
        (0usize..3).prop_map(Variable),
    ];
    leaf.prop_recursive(4, 24, 2, |inner| {
        prop_oneof![
            inner.clone().prop_map(|a| Neg(Box::new(a))),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Add(Box::new(a), Box::new(b))),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Sub(Box::new(a), Box::new(b))),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Mul(Box::new(a), Box::new(b))),
            (inner.clone(), 0u32..4).prop_map(|(a, n)| IntPow(Box::new(a), n)),
            inner.clone().prop_map(|a| Sin(Box::new(a))),
        ]
    })
}

proptest! {
    #[test]
    fn differentiation_is_linear(
        e1 in arb_expr(),
        e2 in arb_expr(),
        a in -2.0f64..2.0,
        b in -2.0f64..2.0,
        p in prop::array::uniform3(-1.0f64..1.0),
        var in 0usize..3,
    ) {
        let combo = Add(
            Box::new(Mul(Box::new(Constant(a)), Box::new(e1.clone()))),
            Box::new(Mul(Box::new(Constant(b)), Box::new(e2.clone()))),
        );
        let lhs = combo.derivative(var).evaluate(&p).unwrap();
        let rhs = a * e1.derivative(var).evaluate(&p).unwrap()
            + b * e2.derivative(var).evaluate(&p).unwrap();
        prop_assert!(close(lhs, rhs, 1e-12), "{lhs} vs {rhs}");
    }

    #[test]
    fn display_round_trips(e in arb_expr(), p in prop::array::uniform3(-1.0f64..1.0)) {
        let v = vars(&["x", "y", "z"]);
        let text = e.display(&v).to_string();
        let back = parse(&text, &v).unwrap();
        let a = e.evaluate(&p).unwrap();
        let b = back.evaluate(&p).unwrap();
        prop_assert!(close(a, b, 1e-12), "{text}: {a} vs {b}");
    }
}

#[test]
fn negative_zero_base_is_parenthesized() {
    let v = vars(&["x"]);
    let e = IntPow(Box::new(Constant(-0.0)), 0);
    let text = e.display(&v).to_string();
    assert_eq!(text, "(-0)^0");
    assert_eq!(parse(&text, &v).unwrap().evaluate(&[0.0]).unwrap(), 1.0);
}
