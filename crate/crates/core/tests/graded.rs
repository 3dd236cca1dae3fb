mod common;

use coiso::geom::SectionOfNormalBundle;
use coiso::graded::*;
use coiso::multider::MultiDerivation;
use coiso::ring::ScalarFn;
use common::graded::*;
use common::{arb_base_fn, arb_fn, arb_multider};
use proptest::prelude::*;

const GK: usize = 1;
const GM: usize = 1;

fn dims() -> GradedDims {
    GradedDims::new(GK, GM, 2).unwrap()
}

fn one(d: GradedDims) -> GradedSection {
    GradedSection::function(ScalarFn::one(d.k, d.m), d.r).unwrap()
}

fn func(f: ScalarFn, r: usize) -> GradedSection {
    GradedSection::function(f, r).unwrap()
}

fn word(symbols: &[Symbol], d: GradedDims) -> GradedOperator {
    GradedOperator::from_word(symbols, &one(d)).unwrap()
}

fn sec_op(s: &GradedSection) -> GradedOperator {
    GradedOperator::from_section(s)
}

/// Sign of sorting the concatenation of two ascending letter lists, counted
/// as inversions; `None` on a repeated letter.
fn inversion_sign(a: &[usize], b: &[usize]) -> Option<i64> {
    let all: Vec<usize> = a.iter().chain(b).copied().collect();
    let mut inv = 0;
    for i in 0..all.len() {
        for j in i + 1..all.len() {
            if all[i] == all[j] {
                return None;
            }
            if all[i] > all[j] {
                inv += 1;
            }
        }
    }
    Some(parity(inv))
}

/// Letters of a word with antighost `A` numbered `r + A`.
fn letters(w: &GhostWord, r: usize) -> Vec<usize> {
    w.ghost_indices().into_iter().chain(w.antighost_indices().into_iter().map(|a| a + r)).collect()
}

#[test]
fn odd_generators_anticommute() {
    let d = dims();
    let x1 = GradedSection::ghost(d, 0);
    let x2 = GradedSection::ghost(d, 1);
    assert_eq!(graded_mul(&x1, &x2), graded_mul(&x2, &x1).neg());
    assert!(graded_mul(&x1, &x1).is_zero());
    assert!(graded_mul(&GradedSection::antighost(d, 1), &GradedSection::antighost(d, 1)).is_zero());
    let lhs = graded_mul(&GradedSection::antighost(d, 0), &x2);
    assert_eq!(lhs, GradedSection::monomial(d, &[1], &[0], ScalarFn::from_int(GK, GM, -1)));
}

#[test]
fn fiber_weighted_product_has_canonical_sign() {
    let d = GradedDims::new(1, 2, 2).unwrap();
    let y = |a| ScalarFn::fiber_var(1, 2, a);
    let a = GradedSection::ghost(d, 0).mul_fn(&y(0));
    let b = GradedSection::antighost(d, 1).mul_fn(&y(1));
    let expected = GradedSection::monomial(d, &[0], &[1], &y(0) * &y(1));
    assert_eq!(graded_mul(&a, &b), expected);
    assert_eq!(graded_mul(&b, &a), expected.neg());
}

#[test]
fn sections_bracket_to_zero() {
    let d = dims();
    let a = sec_op(&GradedSection::ghost(d, 0).mul_fn(&ScalarFn::fiber_var(GK, GM, 0)));
    let b = sec_op(&GradedSection::antighost(d, 1));
    assert!(a.bracket(&b).is_zero());
    assert!(a.bracket(&a).is_zero());
}

#[test]
fn generator_derivatives_are_dual() {
    let d = dims();
    for a in 0..d.r {
        for b in 0..d.r {
            let delta = if a == b { one(d) } else { GradedSection::zero(d) };
            let g = sec_op(&GradedSection::ghost(d, b));
            let ag = sec_op(&GradedSection::antighost(d, b));
            assert_eq!(word(&[Symbol::DXi(a)], d).bracket(&g).to_section().unwrap(), delta);
            assert_eq!(word(&[Symbol::DXiStar(a)], d).bracket(&ag).to_section().unwrap(), delta);
            assert!(word(&[Symbol::DXiStar(a)], d).bracket(&g).is_zero());
            assert!(word(&[Symbol::DXi(a)], d).bracket(&ag).is_zero());
        }
    }
}

#[test]
fn tautological_structure_is_maurer_cartan() {
    for r in 1..=3 {
        let g = tautological_g(GradedDims::new(2, 1, r).unwrap());
        assert!(g.bracket(&g).is_zero());
        assert_eq!(g.arity(), Some(2));
    }
}

#[test]
fn tautological_pairing_on_generators() {
    let d = dims();
    let g = tautological_g(d);
    for a in 0..d.r {
        for b in 0..d.r {
            let u = GradedSection::ghost(d, a);
            let al = GradedSection::antighost(d, b);
            let expected = if a == b { one(d) } else { GradedSection::zero(d) };
            assert_eq!(eval_graded(&g, &[u.clone(), al.clone()]).unwrap(), expected);
            assert_eq!(eval_graded(&g, &[al, u]).unwrap(), expected);
        }
    }
    let u = GradedSection::ghost(d, 0);
    let u2 = GradedSection::ghost(d, 1);
    assert!(eval_graded(&g, &[u.clone(), u2]).unwrap().is_zero());
    assert!(eval_graded(&g, &[u.clone(), u]).unwrap().is_zero());
}

#[test]
fn d_g_on_generators() {
    let d = dims();
    for a in 0..d.r {
        assert_eq!(d_g(&sec_op(&GradedSection::ghost(d, a))), word(&[Symbol::DXiStar(a)], d));
        assert_eq!(d_g(&sec_op(&GradedSection::antighost(d, a))), word(&[Symbol::DXi(a)], d));
    }
    let f = func(ScalarFn::fiber_var(GK, GM, 0).pow(2), 2);
    assert!(d_g(&sec_op(&f)).is_zero());
}

#[test]
fn arity_mismatch_is_reported() {
    let d = dims();
    let g = tautological_g(d);
    assert!(eval_graded(&g, &[GradedSection::ghost(d, 0)]).is_err());
    let mixed = g.add(&word(&[Symbol::Id], d));
    assert!(eval_graded(&mixed, &[GradedSection::ghost(d, 0)]).is_err());
}

#[test]
fn identity_word_acts_as_identity() {
    let d = dims();
    let l = GradedSection::monomial(d, &[0], &[1], ScalarFn::fiber_var(GK, GM, 0));
    assert_eq!(eval_graded(&word(&[Symbol::Id], d), &[l.clone()]).unwrap(), l);
    let dy = eval_graded(&word(&[Symbol::DY(0)], d), &[l]).unwrap();
    assert_eq!(dy, GradedSection::monomial(d, &[0], &[1], ScalarFn::one(GK, GM)));
}

#[test]
fn symbol_vocabulary() {
    let d = dims();
    let symbols = [Symbol::Id, Symbol::DPh(0), Symbol::DY(0), Symbol::DXi(1), Symbol::DXiStar(0)];
    let names = ["ID", "D_PH(1)", "D_Y(1)", "D_XI(2)", "D_XISTAR(1)"];
    for (s, n) in symbols.iter().zip(names) {
        assert_eq!(s.to_string(), n);
        assert_eq!(Symbol::parse(n).unwrap(), *s);
    }
    for bad in ["D_PH(0)", "D_FOO(1)", "D_XI", "D_XI(x)", ""] {
        assert!(Symbol::parse(bad).is_err(), "{bad}");
    }
    assert!(GradedOperator::from_word(&[Symbol::DXi(2)], &one(d)).is_err());
    assert!(GradedOperator::from_word(&[Symbol::DPh(1)], &one(d)).is_err());
}

#[test]
fn trivial_connection_is_flat() {
    let d = GradedDims::new(2, 1, 2).unwrap();
    assert!(contraction_one(d, Connection::trivial(d)).unwrap().is_flat().unwrap());
}

#[test]
fn malformed_connection_is_rejected() {
    let d = dims();
    let mut c = Connection::trivial(d);
    c.on_id.pop();
    assert!(contraction_one(d, c).is_err());
}

#[test]
fn contraction_two_at_the_zero_section() {
    let k = 1;
    let m = 2;
    let s = SectionOfNormalBundle::new(vec![ScalarFn::zero(k, m); m]).unwrap();
    let c2 = contraction_two(&s).unwrap();
    let d = c2.dims();
    let mut expected = GradedOperator::zero(d);
    for a in 0..m {
        let ya = func(ScalarFn::fiber_var(k, m, a), m);
        expected = expected.add(&GradedOperator::from_word(&[Symbol::DXiStar(a)], &ya).unwrap());
    }
    assert_eq!(c2.d_operator(), &expected);
    let y1 = func(ScalarFn::fiber_var(k, m, 0), m);
    let h = c2.h(&y1).unwrap();
    assert_eq!(h, GradedSection::antighost(d, 0).neg());
    let dh = c2.d(&h).unwrap().add(&c2.h(&c2.d(&y1).unwrap()).unwrap());
    assert_eq!(dh, y1.neg());
    let ip = c2.iota(&c2.wp(&y1).unwrap()).unwrap();
    assert_eq!(ip.sub(&y1), dh);
}

#[test]
fn contraction_two_preconditions() {
    let s = SectionOfNormalBundle::new(vec![ScalarFn::zero(1, 1)]).unwrap();
    let c2 = contraction_two(&s).unwrap();
    let d = c2.dims();
    assert!(c2.iota(&GradedSection::antighost(d, 0)).is_err());
    assert!(c2.iota(&func(ScalarFn::fiber_var(1, 1, 0), 1)).is_err());
    assert!(leaf_forms(&GradedSection::antighost(d, 0)).is_err());
}

#[test]
fn omega_e_is_the_shifted_tautological_form() {
    let s = SectionOfNormalBundle::new(vec![ScalarFn::sin_coord(2, 2, 1), ScalarFn::cos_coord(2, 2, 0)]).unwrap();
    let om = omega_e(&s).unwrap();
    let d = om.dims();
    let mut expected = GradedSection::zero(d);
    for a in 0..2 {
        let c = &ScalarFn::fiber_var(2, 2, a) - &s.components()[a];
        expected = expected.add(&GradedSection::monomial(d, &[a], &[], c));
    }
    assert_eq!(om, expected);
}

#[test]
fn tautological_json_shape() {
    let g = tautological_g(dims());
    let v = g.to_json().unwrap();
    let words: Vec<Vec<String>> = v["terms"]
        .as_array()
        .unwrap()
        .iter()
        .map(|t| t["word"].as_array().unwrap().iter().map(|s| s.as_str().unwrap().to_string()).collect())
        .collect();
    assert_eq!(words, vec![vec!["D_XI(1)", "D_XISTAR(1)"], vec!["D_XI(2)", "D_XISTAR(2)"]]);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn product_sign_matches_inversion_count(g1 in 0u32..8, a1 in 0u32..8, g2 in 0u32..8, a2 in 0u32..8) {
        let d = GradedDims::new(1, 1, 3).unwrap();
        let w1 = GhostWord { ghosts: g1, antighosts: a1 };
        let w2 = GhostWord { ghosts: g2, antighosts: a2 };
        let f = ScalarFn::one(1, 1);
        let mut x = GradedSection::zero(d);
        x.add_term(w1, f.clone());
        let mut y = GradedSection::zero(d);
        y.add_term(w2, f.clone());
        let prod = graded_mul(&x, &y);
        match inversion_sign(&letters(&w1, 3), &letters(&w2, 3)) {
            None => prop_assert!(prod.is_zero()),
            Some(s) => {
                let w = GhostWord { ghosts: g1 | g2, antighosts: a1 | a2 };
                let mut expected = GradedSection::zero(d);
                expected.add_term(w, f.scale_int(s));
                prop_assert_eq!(prod, expected);
            }
        }
    }

    #[test]
    fn product_is_associative_and_supercommutative(a in arb_homogeneous_section(dims()), b in arb_homogeneous_section(dims()), c in arb_section(dims(), 2)) {
        prop_assert_eq!(graded_mul(&graded_mul(&a, &b), &c), graded_mul(&a, &graded_mul(&b, &c)));
        let pa = a.terms().next().map(|(w, _)| w.bidegree().0 + w.bidegree().1).unwrap_or(0) as i64;
        let pb = b.terms().next().map(|(w, _)| w.bidegree().0 + w.bidegree().1).unwrap_or(0) as i64;
        prop_assert_eq!(graded_mul(&a, &b), graded_mul(&b, &a).scale_int(parity(pa * pb)));
    }

    #[test]
    fn tautological_pairing_is_contraction(u in proptest::collection::vec(arb_fn(GK, GM, 2, 1), 2), al in proptest::collection::vec(arb_fn(GK, GM, 2, 1), 2)) {
        let d = dims();
        let us = (0..2).fold(GradedSection::zero(d), |acc, a| acc.add(&GradedSection::ghost(d, a).mul_fn(&u[a])));
        let als = (0..2).fold(GradedSection::zero(d), |acc, a| acc.add(&GradedSection::antighost(d, a).mul_fn(&al[a])));
        let pairing = &(&u[0] * &al[0]) + &(&u[1] * &al[1]);
        let expected = func(pairing, 2);
        let g = tautological_g(d);
        prop_assert_eq!(eval_graded(&g, &[us.clone(), als.clone()]).unwrap(), expected.clone());
        prop_assert_eq!(eval_graded(&g, &[als, us.clone()]).unwrap(), expected);
        prop_assert!(eval_graded(&g, &[us.clone(), us]).unwrap().is_zero());
    }

    #[test]
    fn bracket_is_graded_skew(a in arb_arity_op(dims()), b in arb_arity_op(dims())) {
        prop_assume!(a.0 + b.0 >= 1);
        let (a, b) = (a.1, b.1);
        let sign = parity(deg(&a) * deg(&b));
        prop_assert_eq!(a.bracket(&b), b.bracket(&a).scale_int(-sign));
    }

    #[test]
    fn graded_jacobi(a in arb_arity_op(dims()), b in arb_arity_op(dims()), c in arb_arity_op(dims())) {
        let (ra, rb, rc) = (a.0, b.0, c.0);
        prop_assume!(ra + rb >= 1 && rb + rc >= 1 && ra + rc >= 1 && ra + rb + rc >= 2);
        let (a, b, c) = (a.1, b.1, c.1);
        let lhs = a.bracket(&b.bracket(&c));
        let rhs = a.bracket(&b).bracket(&c).add(&b.bracket(&a.bracket(&c)).scale_int(parity(deg(&a) * deg(&b))));
        prop_assert_eq!(lhs, rhs);
    }

    #[test]
    fn derivation_leibniz_rule(x in arb_word_op(dims(), 1), f in arb_homogeneous_section(dims()), y in arb_arity_op(dims())) {
        let d = dims();
        let (_, y) = y;
        let fy = y.mul_section_coefficient(&f);
        let lhs = x.bracket(&fy);
        let x_f = eval_graded(&x, &[f.clone()]).unwrap().sub(&graded_mul(&f, &eval_graded(&x, &[one(d)]).unwrap()));
        let fdeg = f.degree().unwrap_or(0);
        let rhs = y.mul_section_coefficient(&x_f).add(&x.bracket(&y).mul_section_coefficient(&f).scale_int(parity(deg(&x) * fdeg)));
        prop_assert_eq!(lhs, rhs);
    }

    #[test]
    fn d_g_squares_to_zero(o in arb_op(dims(), 1), s in arb_section(dims(), 3)) {
        prop_assert!(d_g(&d_g(&o)).is_zero());
        prop_assert!(d_g(&d_g(&sec_op(&s))).is_zero());
    }

    #[test]
    fn word_expansion_reconstructs(o in arb_op(dims(), 2)) {
        let back = o.words().unwrap().iter().fold(GradedOperator::zero(dims()), |acc, (w, c)| acc.add(&GradedOperator::from_word(w, c).unwrap()));
        prop_assert_eq!(back, o);
    }

    #[test]
    fn operator_json_round_trip(o in arb_op(dims(), 2)) {
        prop_assert_eq!(GradedOperator::from_json(&o.to_json().unwrap(), GK, GM).unwrap(), o);
    }

    #[test]
    fn section_json_round_trip(s in arb_section(dims(), 4)) {
        prop_assert_eq!(GradedSection::from_json(&s.to_json(), dims()).unwrap(), s);
    }

    #[test]
    fn multider_embedding_round_trip(m in arb_multider(GK, GM, 2, 2, 1), n in 0usize..3) {
        let o = GradedOperator::from_multider(&m, n).unwrap();
        let parts = o.ungraded_parts().unwrap();
        if m.is_zero() {
            prop_assert!(parts.is_empty());
        } else {
            prop_assert_eq!(parts.get(&2), Some(&m));
        }
    }

    #[test]
    fn p_is_left_inverse_of_i_nabla(m in arb_multider(GK, GM, 2, 2, 1), c in arb_connection(dims())) {
        let c1 = contraction_one(dims(), c).unwrap();
        let parts = c1.p_multider(&c1.i_nabla(&m).unwrap()).unwrap();
        if m.is_zero() {
            prop_assert!(parts.is_empty());
        } else {
            prop_assert_eq!(parts.len(), 1);
            prop_assert_eq!(parts.get(&2), Some(&m));
        }
    }

    #[test]
    fn flat_i_nabla_is_a_bracket_morphism(a in arb_multider(GK, GM, 1, 2, 1), b in arb_multider(GK, GM, 2, 2, 1)) {
        let c1 = contraction_one(dims(), Connection::trivial(dims())).unwrap();
        let lhs = c1.i_nabla(&a).unwrap().bracket(&c1.i_nabla(&b).unwrap());
        prop_assert_eq!(lhs, c1.i_nabla(&a.sj_bracket(&b)).unwrap());
    }

    #[test]
    fn h_tilde_commutator_is_weight(o in arb_op(dims(), 1)) {
        let c1 = contraction_one(dims(), Connection::trivial(dims())).unwrap();
        let comm = c1.h_tilde(&d_g(&o)).add(&d_g(&c1.h_tilde(&o)));
        prop_assert_eq!(comm, c1.weight(&o));
    }

    #[test]
    fn weight_eigenspaces_are_preserved(o in arb_op(dims(), 2), c in arb_connection(dims())) {
        let flat = contraction_one(dims(), Connection::trivial(dims())).unwrap();
        prop_assert_eq!(flat.weight(&d_g(&o)), d_g(&flat.weight(&o)));
        let c1 = contraction_one(dims(), c).unwrap();
        prop_assert_eq!(c1.weight(&c1.h_tilde(&o)), c1.h_tilde(&c1.weight(&o)));
    }

    #[test]
    fn weight_is_diagonalizable(o in arb_op(dims(), 2), c in arb_connection(dims())) {
        let c1 = contraction_one(dims(), c).unwrap();
        let mut acc = o;
        for k in 0..=8 {
            acc = c1.weight(&acc).sub(&acc.scale_int(k));
        }
        prop_assert!(acc.is_zero());
    }

    #[test]
    fn id_free_words_are_weight_eigenvectors(w in proptest::collection::vec(arb_symbol(dims()), 2), c in arb_homogeneous_section(dims())) {
        prop_assume!(!w.contains(&Symbol::Id));
        let o = GradedOperator::from_word(&w, &c).unwrap();
        let c1 = contraction_one(dims(), Connection::trivial(dims())).unwrap();
        let k = c.terms().next().map(|(g, _)| g.bidegree().0 + g.bidegree().1).unwrap_or(0)
            + w.iter().filter(|s| matches!(s, Symbol::DXi(_) | Symbol::DXiStar(_))).count();
        prop_assert_eq!(c1.weight(&o), o.scale_int(k as i64));
    }

    #[test]
    fn contraction_one_side_conditions(o in arb_op(dims(), 2), m in arb_multider(GK, GM, 2, 2, 1), c in arb_connection(dims())) {
        let c1 = contraction_one(dims(), c).unwrap();
        prop_assert!(c1.h(&c1.h(&o)).is_zero());
        prop_assert!(c1.h(&c1.i_nabla(&m).unwrap()).is_zero());
        prop_assert!(c1.p(&c1.h(&o)).is_zero());
    }

    #[test]
    fn contraction_one_homotopy(o in arb_op(dims(), 2)) {
        let c1 = contraction_one(dims(), Connection::trivial(dims())).unwrap();
        let comm = d_g(&c1.h(&o)).add(&c1.h(&d_g(&o)));
        prop_assert_eq!(comm, c1.p(&o).sub(&o));
    }

    #[test]
    fn omega_e_is_maurer_cartan(g in proptest::collection::vec(arb_base_fn(2, 2, vec![0, 1], 2), 2)) {
        let s = SectionOfNormalBundle::new(g).unwrap();
        let om = omega_e(&s).unwrap();
        let g = tautological_g(om.dims());
        prop_assert!(section_bracket(&g, &om, &om).unwrap().is_zero());
        let c2 = contraction_two(&s).unwrap();
        prop_assert!(c2.d_operator().bracket(c2.d_operator()).is_zero());
    }

    #[test]
    fn contraction_two_axioms(g in proptest::collection::vec(arb_base_fn(2, 2, vec![0, 1], 2), 2), l in arb_section(GradedDims::new(2, 2, 2).unwrap(), 3)) {
        let s = SectionOfNormalBundle::new(g).unwrap();
        let c2 = contraction_two(&s).unwrap();
        prop_assert!(c2.d(&c2.d(&l).unwrap()).unwrap().is_zero());
        let hl = c2.h(&l).unwrap();
        prop_assert!(c2.h(&hl).unwrap().is_zero());
        prop_assert!(c2.wp(&hl).unwrap().is_zero());
        let comm = c2.d(&hl).unwrap().add(&c2.h(&c2.d(&l).unwrap()).unwrap());
        let ip = c2.iota(&c2.wp(&l).unwrap()).unwrap();
        prop_assert_eq!(comm, ip.sub(&l));
    }

    #[test]
    fn wp_is_left_inverse_of_iota(g in proptest::collection::vec(arb_base_fn(2, 2, vec![0, 1], 2), 2), w in proptest::collection::vec((0u32..4, arb_base_fn(2, 2, vec![0, 1], 2)), 0..4)) {
        let s = SectionOfNormalBundle::new(g).unwrap();
        let c2 = contraction_two(&s).unwrap();
        let mut form = GradedSection::zero(c2.dims());
        for (mask, f) in w {
            form.add_term(GhostWord { ghosts: mask, antighosts: 0 }, f);
        }
        let back = c2.wp(&c2.iota(&form).unwrap()).unwrap();
        prop_assert!(c2.h(&c2.iota(&form).unwrap()).unwrap().is_zero());
        prop_assert_eq!(back, form.clone());
        let leaf = c2.to_leaf_form(&form).unwrap();
        let rebuilt = leaf.iter().fold(GradedSection::zero(c2.dims()), |acc, lf| acc.add(&ghost_form_from_leaf(lf).unwrap()));
        prop_assert_eq!(rebuilt, form);
    }
}

#[test]
fn multider_arities_embed_with_their_degree() {
    let m = MultiDerivation::section(ScalarFn::one(GK, GM));
    let o = GradedOperator::from_multider(&m, 2).unwrap();
    assert_eq!(o.arity(), Some(0));
    assert_eq!(o.to_section().unwrap(), one(dims()));
}
