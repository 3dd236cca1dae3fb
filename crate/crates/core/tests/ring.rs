mod common;

use common::{arb_fn, arb_real_fn, p};
use coiso::ring::*;
use proptest::prelude::*;

fn chart() -> Chart {
    Chart::standard(5, 2, vec![0, 1]).unwrap()
}

#[test]
fn pythagorean_identity() {
    let c = chart();
    let s = p(&c, "sin(ph_1)");
    let co = p(&c, "cos(ph_1)");
    assert_eq!(&(&s * &s) + &(&co * &co), ScalarFn::one(5, 2));
}

#[test]
fn sine_cosine_as_exponentials() {
    let c = chart();
    let e1 = ScalarFn::exp_mode(5, 2, &[1, 0, 0, 0, 0]);
    let em1 = ScalarFn::exp_mode(5, 2, &[-1, 0, 0, 0, 0]);
    let sin = (&e1 - &em1).scale(&GaussianRational::i().inv().unwrap()).scale_ratio(1, 2);
    let cos = (&e1 + &em1).scale_ratio(1, 2);
    assert_eq!(sin, p(&c, "sin(ph_1)"));
    assert_eq!(cos, p(&c, "cos(ph_1)"));
}

#[test]
fn fiber_monomial_product() {
    let c = chart();
    let f = &p(&c, "y_1") * &p(&c, "y_2");
    assert_eq!(f.num_terms(), 1);
    let (mono, coef) = f.terms().next().unwrap();
    assert_eq!(mono.fiber, vec![1, 1]);
    assert_eq!(mono.torus, vec![0; 5]);
    assert!(coef.is_one());
}

#[test]
fn double_angle_in_modes() {
    let c = chart();
    let f = &p(&c, "sin(ph_3)") * &p(&c, "cos(ph_3)");
    let e2 = ScalarFn::exp_mode(5, 2, &[0, 0, 2, 0, 0]);
    let em2 = ScalarFn::exp_mode(5, 2, &[0, 0, -2, 0, 0]);
    let expected = (&e2 - &em2).scale(&GaussianRational::from_int(4).inv().unwrap()).scale(&GaussianRational::i().inv().unwrap());
    assert_eq!(f, expected);
    assert_eq!(f, p(&c, "1/2*sin(2*ph_3)"));
}

#[test]
fn arith_selector_and_chart_mismatch() {
    let c = chart();
    let f = p(&c, "y_1 + cos(ph_2)");
    let g = p(&c, "sin(ph_2)");
    assert_eq!(f.arith(&g, ArithOp::Add).unwrap(), &f + &g);
    assert_eq!(f.arith(&g, ArithOp::Sub).unwrap(), &f - &g);
    assert_eq!(f.arith(&g, ArithOp::Mul).unwrap(), &f * &g);
    assert!(matches!(f.arith(&ScalarFn::one(3, 1), ArithOp::Add), Err(RingError::ChartMismatch { .. })));
}

#[test]
fn partial_examples() {
    let c = chart();
    assert_eq!(p(&c, "sin(ph_3)").partial(2), p(&c, "cos(ph_3)"));
    assert_eq!(p(&c, "y_1^2*y_2").partial(5), p(&c, "2*y_1*y_2"));
    assert!(p(&c, "cos(ph_4)").partial(0).is_zero());
    assert!(matches!(p(&c, "y_1").partial_checked(7), Err(RingError::UnknownCoordinate(_))));
}

#[test]
fn substitution_examples() {
    let c = chart();
    // y_1^2 with y_1 -> y_1 - t y_1, integrated over t in [0, 1]; t is an extra fiber.
    let f = p(&c, "y_1^2");
    let y1 = ScalarFn::fiber_var(5, 3, 0);
    let t = ScalarFn::fiber_var(5, 3, 2);
    let path = &y1 - &(&t * &y1);
    let sub = f.substitute_fiber(&[Some(path), None], 5, 3).unwrap();
    assert_eq!(sub.integrate_unit_interval(2), p(&c, "1/3*y_1^2"));

    let g = p(&c, "sin(ph_2) + cos(ph_5)");
    let sub = p(&c, "y_1").substitute_fiber(&[Some(g.clone()), None], 5, 2).unwrap();
    assert_eq!(sub, g);

    let sub = p(&c, "y_1*sin(ph_4)").substitute_fiber(&[Some(p(&c, "cos(ph_4)")), None], 5, 2).unwrap();
    assert_eq!(sub, p(&c, "1/2*sin(2*ph_4)"));

    assert!(matches!(f.substitute_fiber(&[None], 5, 2), Err(RingError::Substitution(_))));
}

#[test]
fn torus_integral_examples() {
    let c = chart();
    let ti = p(&c, "cos(ph_4)").integrate_torus(&[0, 1]).unwrap();
    assert_eq!(ti.value, p(&c, "cos(ph_4)"));
    assert_eq!(ti.two_pi_power, 2);
    let ti = p(&c, "sin(ph_1)").integrate_torus(&[0, 1]).unwrap();
    assert!(ti.value.is_zero());
    assert_eq!(ti.two_pi_power, 2);
    let ti = p(&c, "(cos(ph_4)^2 + sin(ph_4)^2)*sin(ph_3)").integrate_torus(&[0, 1]).unwrap();
    assert_eq!(ti.value, p(&c, "sin(ph_3)"));
    assert_eq!(format_torus_integral(&ti, &c), "(2*pi)^2 * (sin(ph_3))");
}

#[test]
fn parse_errors_carry_positions() {
    let c = chart();
    match parse_fn("cos(ph_1) + ", &c) {
        Err(RingError::Parse { pos, .. }) => assert_eq!(pos, 12),
        other => panic!("{other:?}"),
    }
    assert!(matches!(parse_fn("cos(q)", &c), Err(RingError::Parse { .. } | RingError::UnknownCoordinate(_))));
}

#[test]
fn chart_validation() {
    assert!(Chart::new(vec!["a".into(), "a".into()], vec![], vec![]).is_err());
    assert!(Chart::new(vec!["a".into()], vec!["y".into()], vec![1]).is_err());
    let c = Chart::standard(2, 1, vec![0]).unwrap();
    assert_eq!(c.coord_index("y_1").unwrap(), 2);
    assert_eq!(c.coord_name(1), "ph_2");
}

#[test]
fn degenerate_charts() {
    let c0 = Chart::standard(0, 2, vec![]).unwrap();
    let f = p(&c0, "y_1^2 - 3*y_2");
    assert_eq!(f.partial(0), p(&c0, "2*y_1"));
    let c1 = Chart::standard(2, 0, vec![0]).unwrap();
    let g = p(&c1, "cos(ph_1)*sin(ph_2)");
    assert_eq!(g.partial(1), p(&c1, "cos(ph_1)*cos(ph_2)"));
}

#[test]
fn json_shape() {
    let c = chart();
    let v = scalar_to_json(&p(&c, "1/2*y_1"));
    assert_eq!(v, serde_json::json!([{"torus": [0, 0, 0, 0, 0], "fiber": [1, 0], "re": "1/2", "im": "0"}]));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn ring_axioms(f in arb_fn(3, 2, 4, 2), g in arb_fn(3, 2, 4, 2), h in arb_fn(3, 2, 4, 2)) {
        prop_assert_eq!(&(&f * &g) * &h, &f * &(&g * &h));
        prop_assert_eq!(&f * &(&g + &h), &(&f * &g) + &(&f * &h));
        prop_assert_eq!(&f * &g, &g * &f);
        prop_assert_eq!(&(&f + &g) - &g, f.clone());
        prop_assert_eq!(&f * &ScalarFn::one(3, 2), f);
    }

    #[test]
    fn partials_commute(f in arb_fn(3, 2, 5, 3), a in 0usize..5, b in 0usize..5) {
        prop_assert_eq!(f.partial(a).partial(b), f.partial(b).partial(a));
    }

    #[test]
    fn leibniz_rule(f in arb_fn(3, 2, 4, 2), g in arb_fn(3, 2, 4, 2), a in 0usize..5) {
        prop_assert_eq!((&f * &g).partial(a), &(&f.partial(a) * &g) + &(&f * &g.partial(a)));
    }

    #[test]
    fn exact_derivatives_integrate_to_zero(f in arb_fn(3, 2, 5, 2), i in 0usize..3) {
        let ti = f.partial(i).integrate_torus(&[i]).unwrap();
        prop_assert!(ti.value.is_zero());
        let ti = f.partial(i).integrate_torus(&[0, 1, 2]).unwrap();
        prop_assert!(ti.value.is_zero());
    }

    #[test]
    fn reality_is_preserved(f in arb_real_fn(3, 2, 4, 2), g in arb_real_fn(3, 2, 4, 2), a in 0usize..5, e in arb_real_fn(3, 2, 2, 1)) {
        prop_assert!(f.is_real());
        prop_assert!((&f * &g).is_real());
        prop_assert!((&f - &g).is_real());
        prop_assert!(f.partial(a).is_real());
        let sub = f.substitute_fiber(&[Some(e), None], 3, 2).unwrap();
        prop_assert!(sub.is_real());
    }

    #[test]
    fn format_parse_round_trip(f in arb_fn(3, 2, 5, 2)) {
        let c = Chart::standard(3, 2, vec![0]).unwrap();
        let s = format_fn(&f, &c);
        prop_assert_eq!(parse_fn(&s, &c).unwrap(), f);
    }

    #[test]
    fn json_round_trip(f in arb_fn(3, 2, 5, 2)) {
        prop_assert_eq!(scalar_from_json(&scalar_to_json(&f), 3, 2).unwrap(), f);
    }

    #[test]
    fn substitution_is_a_ring_map(f in arb_fn(2, 2, 3, 2), g in arb_fn(2, 2, 3, 2), e in arb_fn(2, 2, 2, 1)) {
        let s = |x: &ScalarFn| x.substitute_fiber(&[Some(e.clone()), None], 2, 2).unwrap();
        prop_assert_eq!(s(&(&f * &g)), &s(&f) * &s(&g));
        prop_assert_eq!(s(&(&f + &g)), &s(&f) + &s(&g));
    }
}
