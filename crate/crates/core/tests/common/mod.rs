#![allow(dead_code)]

use coiso::geom::{contact_to_jacobi, ContactChart, SectionOfNormalBundle};
use coiso::linfty::LeafForm;
use coiso::multider::{MultiDerivation, MultiVectorField};
use coiso::ring::{parse_fn, Chart, GaussianRational, Mono, ScalarFn};
use proptest::prelude::*;

pub mod graded;

pub const K: usize = 5;
pub const M: usize = 2;

pub fn torus() -> (Chart, MultiDerivation) {
    let cc = ContactChart::torus_obstructed().unwrap();
    let j = contact_to_jacobi(&cc).unwrap();
    (cc.chart, j)
}

pub fn p(chart: &Chart, s: &str) -> ScalarFn {
    parse_fn(s, chart).unwrap()
}

pub fn vf(chart: &Chart, c: usize, s: &str) -> MultiVectorField {
    MultiVectorField::vector(c, p(chart, s))
}

/// `X = cos ph_3 d_4 - sin ph_3 d_5`
pub fn x_field(chart: &Chart) -> MultiVectorField {
    vf(chart, 3, "cos(ph_3)").add(&vf(chart, 4, "-sin(ph_3)"))
}

/// `Y = sin ph_3 d_4 + cos ph_3 d_5`
pub fn y_field(chart: &Chart) -> MultiVectorField {
    vf(chart, 3, "sin(ph_3)").add(&vf(chart, 4, "cos(ph_3)"))
}

/// `{f, g} = d_3 f X g - d_3 g X f + f Y g - g Y f` on base functions.
pub fn torus_bracket(chart: &Chart, f: &ScalarFn, g: &ScalarFn) -> ScalarFn {
    let x = x_field(chart);
    let y = y_field(chart);
    let a = &f.partial(2) * &x.apply(g);
    let b = &g.partial(2) * &x.apply(f);
    let c = f * &y.apply(g);
    let d = g * &y.apply(f);
    &(&(&a - &b) + &c) - &d
}

/// The left-hand side of the coisotropy equation for `s = (f, g)` on the torus chart.
pub fn torus_coisotropy_lhs(chart: &Chart, f: &ScalarFn, g: &ScalarFn) -> ScalarFn {
    &(&f.partial(1) - &g.partial(0)) + &torus_bracket(chart, f, g)
}

pub fn section(chart: &Chart, comps: &[&str]) -> SectionOfNormalBundle {
    SectionOfNormalBundle::new(comps.iter().map(|s| p(chart, s)).collect()).unwrap()
}

pub fn gr(re: (i64, i64), im: (i64, i64)) -> GaussianRational {
    &GaussianRational::from_ratio(re.0, re.1) + &(&GaussianRational::i() * &GaussianRational::from_ratio(im.0, im.1))
}

/// Random Fourier polynomial on `T^k x R^m` with at most `terms` terms,
/// frequencies in `-2..=2` and fiber exponents up to `max_fiber`.
pub fn arb_fn(k: usize, m: usize, terms: usize, max_fiber: u32) -> impl Strategy<Value = ScalarFn> {
    let term = (
        proptest::collection::vec(-2i64..=2, k),
        proptest::collection::vec(0u32..=max_fiber, m),
        -3i64..=3,
        1i64..=3,
        -2i64..=2,
    );
    proptest::collection::vec(term, 0..=terms).prop_map(move |ts| {
        let mut f = ScalarFn::zero(k, m);
        for (torus, fiber, re, den, im) in ts {
            f.add_term(Mono { torus, fiber }, gr((re, den), (im, 1)));
        }
        f
    })
}

/// Random real Fourier polynomial: `f + conj(f)`.
pub fn arb_real_fn(k: usize, m: usize, terms: usize, max_fiber: u32) -> impl Strategy<Value = ScalarFn> {
    arb_fn(k, m, terms, max_fiber).prop_map(|f| &f + &f.conj())
}

/// Random base-only function of the given torus coordinates (0-based), small.
pub fn arb_base_fn(k: usize, m: usize, coords: Vec<usize>, terms: usize) -> impl Strategy<Value = ScalarFn> {
    let n = coords.len();
    let term = (proptest::collection::vec(-1i64..=1, n), -2i64..=2, -1i64..=1);
    proptest::collection::vec(term, 0..=terms).prop_map(move |ts| {
        let mut f = ScalarFn::zero(k, m);
        for (freq, re, im) in ts {
            let mut torus = vec![0; k];
            for (c, e) in coords.iter().zip(freq) {
                torus[*c] = e;
            }
            f.add_term(Mono { torus, fiber: vec![0; m] }, gr((re, 1), (im, 1)));
        }
        f
    })
}

/// Random multivector field of the given degree on `T^k x R^m`.
pub fn arb_mvf(k: usize, m: usize, degree: usize, terms: usize, max_fiber: u32) -> impl Strategy<Value = MultiVectorField> {
    let n = k + m;
    let idx = proptest::sample::subsequence((0..n).collect::<Vec<_>>(), degree);
    proptest::collection::vec((idx, arb_fn(k, m, 2, max_fiber)), 0..=terms).prop_map(move |ts| {
        let mut out = MultiVectorField::zero(k, m, degree);
        for (i, f) in ts {
            out = out.add(&MultiVectorField::monomial(&i, f));
        }
        out
    })
}

/// Random multi-derivation of the given arity.
pub fn arb_multider(k: usize, m: usize, arity: usize, terms: usize, max_fiber: u32) -> impl Strategy<Value = MultiDerivation> {
    (arb_mvf(k, m, arity, terms, max_fiber), arb_mvf(k, m, arity.saturating_sub(1), terms, max_fiber)).prop_map(move |(pp, q)| {
        if arity == 0 {
            MultiDerivation::section(pp.coeff(&[]))
        } else {
            MultiDerivation::new(pp, q).unwrap()
        }
    })
}

/// Random leaf form of the given degree with base-only coefficients in every torus coordinate.
pub fn arb_leaf_form(k: usize, m: usize, degree: usize) -> impl Strategy<Value = LeafForm> {
    let idx = proptest::sample::subsequence((0..m).collect::<Vec<_>>(), degree);
    proptest::collection::vec((idx, arb_base_fn(k, m, (0..k).collect(), 3)), 0..=3).prop_map(move |ts| {
        let mut out = LeafForm::zero(k, m, degree);
        for (i, f) in ts {
            out.add_term(&i, f);
        }
        out
    })
}
