mod common;

use coiso::geom::{fiberwise_linear_jacobi, injection_i, is_coisotropic_section, projection_p, SectionOfNormalBundle};
use coiso::linfty::*;
use coiso::multider::{MultiDerivation, MultiVectorField};
use coiso::ring::{Chart, ScalarFn};
use coiso::Error;
use common::{arb_base_fn, arb_leaf_form, arb_multider, p, section, torus, torus_bracket, torus_coisotropy_lhs};
use proptest::prelude::*;

fn torus_algebra() -> LInfinity {
    let (c, j) = torus();
    LInfinity::new(c, j).unwrap()
}

fn func(f: &ScalarFn) -> LeafForm {
    LeafForm::function(f.clone())
}

fn one_form(c: &Chart, comps: &[&str]) -> LeafForm {
    section(c, comps).to_leaf_form()
}

fn two_form(f: ScalarFn) -> LeafForm {
    LeafForm::monomial(&[0, 1], f)
}

/// Shifted degree of a leaf form.
fn shifted(w: &LeafForm) -> i64 {
    w.degree() as i64 - 1
}

/// The L-infinity[1] relation of total arity `n` on the given arguments.
fn linfty_relation(l: &LInfinity, xs: &[LeafForm]) -> Option<LeafForm> {
    let n = xs.len();
    let mut total: Option<LeafForm> = None;
    for mask in 1u32..(1 << n) {
        let inner: Vec<usize> = (0..n).filter(|i| mask & (1 << i) != 0).collect();
        let outer: Vec<usize> = (0..n).filter(|i| mask & (1 << i) == 0).collect();
        let mut sign = 1i64;
        for &a in &outer {
            for &b in &inner {
                if a < b && (shifted(&xs[a]) * shifted(&xs[b])) % 2 != 0 {
                    sign = -sign;
                }
            }
        }
        let first = l.bracket(&inner.iter().map(|&i| xs[i].clone()).collect::<Vec<_>>()).unwrap();
        let mut args = vec![first];
        args.extend(outer.iter().map(|&i| xs[i].clone()));
        let v = l.bracket(&args).unwrap();
        let v = if sign < 0 { v.neg() } else { v };
        total = Some(match total {
            Some(t) if t.degree() == v.degree() => t.add(&v),
            Some(t) if v.is_zero() => t,
            Some(t) if t.is_zero() => v,
            Some(t) => panic!("degree mismatch {} vs {}", t.degree(), v.degree()),
            None => v,
        });
    }
    total
}

#[test]
fn torus_binary_bracket_is_minus_the_jacobi_bracket() {
    let l = torus_algebra();
    let c = l.chart.clone();
    let f = p(&c, "cos(ph_3)*sin(ph_4) + cos(ph_1)");
    let g = p(&c, "sin(ph_5) + sin(ph_3)*cos(ph_2)");
    assert_eq!(l.bracket(&[func(&f), func(&g)]).unwrap(), func(&-&torus_bracket(&c, &f, &g)));
}

#[test]
fn torus_higher_brackets_vanish() {
    let l = torus_algebra();
    let c = l.chart.clone();
    assert!(l.table.structurally_zero(3));
    assert!(l.table.structurally_zero(4));
    let s = one_form(&c, &["cos(ph_4)", "sin(ph_3)*cos(ph_5)"]);
    let f = func(&p(&c, "sin(ph_1)*cos(ph_3)"));
    for args in [vec![s.clone(), s.clone(), s.clone()], vec![f.clone(), s.clone(), s.clone()], vec![f.clone(), f.clone(), s.clone()], vec![f.clone(), s.clone(), s.clone(), s.clone()]] {
        assert!(l.bracket(&args).unwrap().is_zero());
        assert!(derived_bracket(&l.j, &args).unwrap().is_zero());
    }
}

#[test]
fn jet_model_is_a_dg_algebra() {
    let (c, j) = fiberwise_linear_jacobi(1).unwrap();
    let table = extract_multibrackets(&j).unwrap();
    assert!(projection_p(&j).is_zero());
    let f = LeafForm::function(p(&c, "cos(ph_1) + 2*sin(2*ph_1)"));
    let g = LeafForm::function(p(&c, "sin(ph_1)"));
    let s = LeafForm::monomial(&[0], p(&c, "cos(ph_1)")).add(&LeafForm::monomial(&[1], p(&c, "sin(ph_1)")));
    let t = LeafForm::monomial(&[1], p(&c, "cos(3*ph_1)"));
    for args in [vec![f.clone(), g.clone()], vec![f.clone(), s.clone()], vec![s.clone(), t.clone()], vec![f.clone(), s.clone(), t.clone()], vec![s.clone(), s.clone(), t.clone()]] {
        assert!(table.eval(&args).unwrap().is_zero());
        assert!(derived_bracket(&j, &args).unwrap().is_zero());
    }
    // m_1 of a function: the 1-jet differential, a section of the normal bundle.
    let m1f = table.eval(&[f.clone()]).unwrap();
    assert_eq!(m1f, derived_bracket(&j, &[f.clone()]).unwrap());
    assert!(!m1f.is_zero());
    assert!(table.eval(&[m1f]).unwrap().is_zero());
}

#[test]
fn unary_bracket_is_the_leafwise_differential() {
    let l = torus_algebra();
    let c = l.chart.clone();
    let f = p(&c, "cos(ph_1)*sin(ph_4) + sin(2*ph_2)*cos(ph_3)");
    let expected = LeafForm::monomial(&[0], f.partial(0)).add(&LeafForm::monomial(&[1], f.partial(1)));
    assert_eq!(l.m1(&func(&f)).unwrap(), expected);
    assert_eq!(leafwise_d(&func(&f), &c).unwrap(), expected);
    assert!(leafwise_d(&LeafForm::monomial(&[0], ScalarFn::from_int(5, 2, 3)), &c).unwrap().is_zero());
}

#[test]
fn solve_df_examples() {
    let (c, _) = torus();
    let w = two_form(p(&c, "cos(ph_1)"));
    match solve_df(&w, &c).unwrap() {
        SolveOutcome::Exact(eta) => {
            assert_eq!(eta, LeafForm::monomial(&[1], p(&c, "sin(ph_1)")));
            assert_eq!(leafwise_d(&eta, &c).unwrap(), w);
        }
        other => panic!("{other:?}"),
    }
    let w = two_form(ScalarFn::one(5, 2));
    assert_eq!(solve_df(&w, &c).unwrap(), SolveOutcome::Obstructed(w.clone()));
    assert_eq!(solve_df(&LeafForm::zero(5, 2, 2), &c).unwrap(), SolveOutcome::Exact(LeafForm::zero(5, 2, 1)));
    let not_closed = LeafForm::monomial(&[0], p(&c, "cos(ph_2)"));
    assert!(matches!(solve_df(&not_closed, &c), Err(Error::Precondition(_))));
}

#[test]
fn torus_mc_series_examples() {
    let l = torus_algebra();
    let c = l.chart.clone();
    assert!(l.mc_series(&SectionOfNormalBundle::zero(5, 2)).unwrap().is_zero());
    let s = section(&c, &["cos(ph_4)", "sin(ph_4)"]);
    assert_eq!(l.mc_series(&s).unwrap(), two_form(p(&c, "sin(ph_3)")));
}

#[test]
fn torus_kuranishi_obstruction() {
    let l = torus_algebra();
    let c = l.chart.clone();
    let (f, g) = (p(&c, "cos(ph_4)"), p(&c, "sin(ph_4)"));
    assert!((&g.partial(0) - &f.partial(1)).is_zero());
    let s = section(&c, &["cos(ph_4)", "sin(ph_4)"]);
    let rep = l.kuranishi(&s).unwrap();
    assert_eq!(rep.density, two_form(torus_bracket(&c, &f, &g)));
    assert_eq!(rep.class, two_form(p(&c, "2*sin(ph_3)")));
    assert!(rep.obstructed());
    let ints = rep.integrals();
    assert_eq!(ints.len(), 1);
    assert_eq!(ints[0].0, vec![0, 1]);
    assert_eq!(ints[0].1.value, p(&c, "sin(ph_3)"));
    assert_eq!(ints[0].1.two_pi_power, 2);

    let zero = l.kuranishi(&SectionOfNormalBundle::zero(5, 2)).unwrap();
    assert!(zero.class.is_zero() && !zero.obstructed());
    assert!(matches!(l.kuranishi(&section(&c, &["sin(ph_2)", "0"])), Err(Error::Precondition(_))));
}

#[test]
fn torus_prolongation() {
    let l = torus_algebra();
    let c = l.chart.clone();
    let zero = l.prolong_formal(&SectionOfNormalBundle::zero(5, 2), 4).unwrap();
    assert_eq!(zero.obstructed_at, None);
    assert_eq!(zero.coefficients.len(), 4);
    assert!(zero.coefficients.iter().all(|s| s.components().iter().all(ScalarFn::is_zero)));

    let obs = l.prolong_formal(&section(&c, &["cos(ph_4)", "sin(ph_4)"]), 4).unwrap();
    assert_eq!(obs.obstructed_at, Some(2));
    let last = obs.reports.last().unwrap();
    assert!(!last.solved);
    assert_eq!(last.obstruction_zero_mode, two_form(p(&c, "sin(ph_3)")));

    let s1 = section(&c, &["cos(ph_3)", "0"]);
    assert!(l.bracket(&[s1.to_leaf_form(), s1.to_leaf_form()]).unwrap().is_zero());
    let ok = l.prolong_formal(&s1, 2).unwrap();
    assert_eq!(ok.obstructed_at, None);
    assert_eq!(ok.coefficients[1], SectionOfNormalBundle::zero(5, 2));
}

#[test]
fn gauge_direction_examples() {
    let l = torus_algebra();
    let c = l.chart.clone();
    let lam = p(&c, "cos(ph_1)*sin(ph_5)");
    assert_eq!(l.delta_mc(&SectionOfNormalBundle::zero(5, 2), &lam).unwrap(), l.m1(&func(&lam)).unwrap());
    let s = section(&c, &["cos(ph_4)", "sin(ph_3)"]);
    assert!(l.delta_mc(&s, &ScalarFn::zero(5, 2)).unwrap().is_zero());
    assert!(matches!(l.delta_mc(&s, &p(&c, "y_1")), Err(Error::Precondition(_))));
}

#[test]
fn extended_brackets_examples() {
    let l = torus_algebra();
    let c = l.chart.clone();
    let s = section(&c, &["cos(ph_4)", "sin(ph_4)"]);
    let zero = MultiDerivation::zero(5, 2, 2);
    let (der, form) = l.extended_mc(&zero, &s).unwrap();
    assert!(der.is_zero());
    assert_eq!(form, l.mc_series(&s).unwrap());

    // J + D = 2J is Jacobi with coisotropic zero section.
    let (der, form) = l.extended_mc(&l.j, &SectionOfNormalBundle::zero(5, 2)).unwrap();
    assert!(der.is_zero() && form.is_zero());
    let (der, form) = l.extended_mc_closed(&l.j, &SectionOfNormalBundle::zero(5, 2)).unwrap();
    assert!(der.is_zero() && form.is_zero());

    // Infinitesimal pair: n_1(D, -s) = 0 iff [[J, D]] = 0 and m_1 s = P D.
    let s1 = section(&c, &["cos(ph_4) + sin(ph_1)", "sin(ph_4) + sin(ph_2)"]);
    let d = injection_i(&l.m1(&s1.to_leaf_form()).unwrap());
    let (der, form) = l.extended_n1(&d, &s1).unwrap();
    assert_eq!(der.is_zero(), l.j.sj_bracket(&d).is_zero());
    assert!(form.is_zero());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn table_agrees_with_derived_brackets(
        n in 1usize..=3,
        d in proptest::collection::vec(0usize..=1, 3),
        xs in proptest::collection::vec((arb_leaf_form(5, 2, 0), arb_leaf_form(5, 2, 1)), 3),
    ) {
        let l = torus_algebra();
        let args: Vec<LeafForm> = (0..n).map(|i| if d[i] == 0 { xs[i].0.clone() } else { xs[i].1.clone() }).collect();
        prop_assert_eq!(l.table.eval(&args).unwrap(), derived_bracket(&l.j, &args).unwrap());
    }

    #[test]
    fn binary_bracket_matches_the_jacobi_bracket(f in arb_base_fn(5, 2, vec![0, 2, 3], 3), g in arb_base_fn(5, 2, vec![1, 2, 4], 3)) {
        let l = torus_algebra();
        let c = l.chart.clone();
        prop_assert_eq!(l.bracket(&[func(&f), func(&g)]).unwrap(), func(&-&torus_bracket(&c, &f, &g)));
    }

    #[test]
    fn graded_symmetry(a in arb_leaf_form(5, 2, 1), b in arb_leaf_form(5, 2, 0), c in arb_leaf_form(5, 2, 1)) {
        let l = torus_algebra();
        prop_assert_eq!(l.bracket(&[a.clone(), b.clone()]).unwrap(), l.bracket(&[b.clone(), a.clone()]).unwrap());
        prop_assert_eq!(l.bracket(&[a.clone(), c.clone()]).unwrap(), l.bracket(&[c, a.clone()]).unwrap());
        prop_assert_eq!(l.bracket(&[b.clone(), b.clone()]).unwrap(), l.bracket(&[b.clone(), b]).unwrap().neg());
    }

    #[test]
    fn binary_bracket_is_a_derivation(f in arb_base_fn(5, 2, vec![0, 2, 3], 2), g in arb_base_fn(5, 2, vec![1, 3, 4], 2), h in arb_base_fn(5, 2, vec![0, 4], 2)) {
        let l = torus_algebra();
        // m_2(f, g h) = m_2(f, g) h + g m_2(f, h) - g h m_2(f, 1) on a line bundle.
        let one = ScalarFn::one(5, 2);
        let gh = &g * &h;
        let lhs = l.bracket(&[func(&f), func(&gh)]).unwrap().coeff(&[]);
        let b = |x: &ScalarFn| l.bracket(&[func(&f), func(x)]).unwrap().coeff(&[]);
        let rhs = &(&(&b(&g) * &h) + &(&g * &b(&h))) - &(&gh * &b(&one));
        prop_assert_eq!(lhs, rhs);
    }

    #[test]
    fn leafwise_differential_squares_to_zero(d in 0usize..=1, a in arb_leaf_form(5, 2, 0), b in arb_leaf_form(5, 2, 1)) {
        let (c, _) = torus();
        let w = if d == 0 { a } else { b };
        prop_assert!(leafwise_d(&leafwise_d(&w, &c).unwrap(), &c).unwrap().is_zero());
    }

    #[test]
    fn fourier_homotopy_identity(d in 0usize..=2, a in arb_leaf_form(5, 2, 0), b in arb_leaf_form(5, 2, 1), e in arb_leaf_form(5, 2, 2)) {
        let (c, _) = torus();
        let w = [a, b, e][d].clone();
        let dk = if w.degree() > 0 { leafwise_d(&homotopy_k(&w, &c).unwrap(), &c).unwrap() } else { LeafForm::zero(5, 2, 0) };
        let kd = homotopy_k(&leafwise_d(&w, &c).unwrap(), &c).unwrap();
        let lhs = if dk.degree() == kd.degree() { dk.add(&kd) } else { kd };
        prop_assert_eq!(lhs, w.sub(&leaf_zero_mode(&w, &c)));
    }

    #[test]
    fn solve_df_inverts_exact_forms(a in arb_leaf_form(5, 2, 1)) {
        let (c, _) = torus();
        let w = leafwise_d(&a, &c).unwrap();
        match solve_df(&w, &c).unwrap() {
            SolveOutcome::Exact(eta) => prop_assert_eq!(leafwise_d(&eta, &c).unwrap(), w),
            SolveOutcome::Obstructed(z) => prop_assert!(false, "exact form reported obstructed: {:?}", z),
        }
    }

    #[test]
    fn mc_series_is_the_displayed_equation(f in arb_base_fn(5, 2, vec![0, 2, 3], 2), g in arb_base_fn(5, 2, vec![1, 2, 4], 2)) {
        let l = torus_algebra();
        let c = l.chart.clone();
        let s = SectionOfNormalBundle::new(vec![f.clone(), g.clone()]).unwrap();
        let mc = l.mc_series(&s).unwrap();
        prop_assert_eq!(mc.clone(), two_form(torus_coisotropy_lhs(&c, &f, &g)));
        prop_assert_eq!(mc.is_zero(), is_coisotropic_section(&l.j, &s).unwrap().coisotropic);
    }

    #[test]
    fn mc_series_agrees_with_substitution_on_random_structures(
        f in proptest::collection::vec(arb_base_fn(2, 2, vec![0], 2), 3),
        g in proptest::collection::vec(arb_base_fn(2, 2, vec![1], 2), 3),
        g1 in arb_base_fn(2, 2, vec![0, 1], 2),
        g2 in arb_base_fn(2, 2, vec![0, 1], 2),
    ) {
        // F(ph_1, y_1) d_1 ^ d_y1 + G(ph_2, y_2) d_2 ^ d_y2 is Poisson with coisotropic zero section.
        let poly = |cs: &[ScalarFn], a: usize| cs.iter().enumerate().fold(ScalarFn::zero(2, 2), |acc, (e, c)| &acc + &(c * &ScalarFn::fiber_var(2, 2, a).pow(e as u32)));
        let lam = MultiVectorField::monomial(&[0, 2], poly(&f, 0)).add(&MultiVectorField::monomial(&[1, 3], poly(&g, 1)));
        let j = MultiDerivation::jacobi(lam, MultiVectorField::zero(2, 2, 1)).unwrap();
        let l = LInfinity::new(Chart::standard(2, 2, vec![0, 1]).unwrap(), j.clone()).unwrap();
        let s = SectionOfNormalBundle::new(vec![g1, g2]).unwrap();
        let mc = l.mc_series(&s).unwrap();
        let rep = is_coisotropic_section(&j, &s).unwrap();
        prop_assert_eq!(mc.is_zero(), rep.coisotropic);
        if let Some((_, r)) = rep.residues.first() {
            prop_assert!(mc.coeff(&[0, 1]) == *r || mc.coeff(&[0, 1]) == -r);
        }
    }

    #[test]
    fn gauge_direction_matches_derived_brackets(f in arb_base_fn(5, 2, vec![0, 3], 2), g in arb_base_fn(5, 2, vec![1, 2], 2), lam in arb_base_fn(5, 2, vec![0, 1, 2, 4], 2)) {
        let l = torus_algebra();
        let s = SectionOfNormalBundle::new(vec![f, g]).unwrap();
        let ms = s.neg().to_leaf_form();
        let mut oracle = LeafForm::zero(5, 2, 1);
        let mut fact = 1i64;
        for n in 0..4usize {
            if n > 0 {
                fact *= n as i64;
            }
            let mut args = vec![ms.clone(); n];
            args.push(func(&lam));
            oracle = oracle.add(&derived_bracket(&l.j, &args).unwrap().scale_ratio(1, fact));
        }
        prop_assert_eq!(l.delta_mc(&s, &lam).unwrap(), oracle);
    }

    #[test]
    fn closed_functions_bracket_to_closed_functions(f in arb_base_fn(5, 2, vec![2, 3, 4], 3), g in arb_base_fn(5, 2, vec![2, 3, 4], 3)) {
        let l = torus_algebra();
        prop_assert!(l.m1(&func(&f)).unwrap().is_zero());
        let b = l.bracket(&[func(&f), func(&g)]).unwrap();
        prop_assert!(l.m1(&b).unwrap().is_zero());
    }

    #[test]
    fn prolongation_solves_the_hierarchy(h in arb_base_fn(5, 2, vec![0, 1, 2, 3], 2)) {
        let l = torus_algebra();
        let s1 = SectionOfNormalBundle::from_leaf_form(&l.m1(&func(&h)).unwrap()).unwrap();
        let pr = l.prolong_formal(&s1, 3).unwrap();
        for (i, r) in pr.reports.iter().enumerate() {
            if r.solved {
                let sn = pr.coefficients[i + 1].to_leaf_form();
                prop_assert_eq!(l.m1(&sn).unwrap(), r.rhs.clone());
            } else {
                prop_assert_eq!(pr.obstructed_at, Some(r.order_k));
                prop_assert!(!r.obstruction_zero_mode.is_zero());
            }
        }
    }

    #[test]
    fn extended_mc_matches_its_closed_form(dd in arb_multider(5, 2, 2, 1, 1), f in arb_base_fn(5, 2, vec![0, 3], 1), g in arb_base_fn(5, 2, vec![1, 4], 1)) {
        let l = torus_algebra();
        let s = SectionOfNormalBundle::new(vec![f, g]).unwrap();
        let (d1, f1) = l.extended_mc(&dd, &s).unwrap();
        let (d2, f2) = l.extended_mc_closed(&dd, &s).unwrap();
        prop_assert_eq!(d1, d2);
        prop_assert_eq!(f1, f2);
    }

    #[test]
    fn extended_unary_bracket(dd in arb_multider(5, 2, 2, 2, 1), f in arb_base_fn(5, 2, vec![0, 3], 2), g in arb_base_fn(5, 2, vec![1, 4], 2)) {
        let l = torus_algebra();
        let s = SectionOfNormalBundle::new(vec![f, g]).unwrap();
        let (der, form) = l.extended_n1(&dd, &s).unwrap();
        prop_assert_eq!(der, l.j.sj_bracket(&dd).neg());
        prop_assert_eq!(form, projection_p(&dd).sub(&l.m1(&s.to_leaf_form()).unwrap()));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn linfty_relations(
        n in 1usize..=4,
        d in proptest::collection::vec(0usize..=2, 4),
        xs in proptest::collection::vec((arb_leaf_form(5, 2, 0), arb_leaf_form(5, 2, 1), arb_leaf_form(5, 2, 2)), 4),
    ) {
        let l = torus_algebra();
        let args: Vec<LeafForm> = (0..n).map(|i| match d[i] { 0 => xs[i].0.clone(), 1 => xs[i].1.clone(), _ => xs[i].2.clone() }).collect();
        let rel = linfty_relation(&l, &args).unwrap();
        prop_assert!(rel.is_zero(), "{:?}", rel);
    }
}
