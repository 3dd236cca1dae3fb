use super::{arb_base_fn, arb_fn};
use coiso::graded::*;
use proptest::prelude::*;

pub fn parity(n: i64) -> i64 {
    if n.rem_euclid(2) == 0 {
        1
    } else {
        -1
    }
}

pub fn arb_section(d: GradedDims, terms: usize) -> impl Strategy<Value = GradedSection> {
    let mask = (1u32 << d.r) - 1;
    proptest::collection::vec((0..=mask, 0..=mask, arb_fn(d.k, d.m, 2, 1)), 0..=terms).prop_map(move |ts| {
        let mut out = GradedSection::zero(d);
        for (g, a, f) in ts {
            out.add_term(GhostWord { ghosts: g, antighosts: a }, f);
        }
        out
    })
}

/// A homogeneous section: one ghost word, random coefficient.
pub fn arb_homogeneous_section(d: GradedDims) -> impl Strategy<Value = GradedSection> {
    let mask = (1u32 << d.r) - 1;
    (0..=mask, 0..=mask, arb_fn(d.k, d.m, 2, 1)).prop_map(move |(g, a, f)| {
        let mut out = GradedSection::zero(d);
        out.add_term(GhostWord { ghosts: g, antighosts: a }, f);
        out
    })
}

pub fn arb_symbol(d: GradedDims) -> impl Strategy<Value = Symbol> {
    prop_oneof![
        (0..d.k).prop_map(Symbol::DPh),
        (0..d.m).prop_map(Symbol::DY),
        (0..d.r).prop_map(Symbol::DXi),
        (0..d.r).prop_map(Symbol::DXiStar),
        Just(Symbol::Id),
    ]
}

/// A single word of the given arity with a homogeneous coefficient.
pub fn arb_word_op(d: GradedDims, arity: usize) -> impl Strategy<Value = GradedOperator> {
    (proptest::collection::vec(arb_symbol(d), arity), arb_homogeneous_section(d))
        .prop_map(|(w, c)| GradedOperator::from_word(&w, &c).unwrap())
}

/// A sum of a few words of the given arity, not necessarily homogeneous.
pub fn arb_op(d: GradedDims, arity: usize) -> impl Strategy<Value = GradedOperator> {
    proptest::collection::vec(arb_word_op(d, arity), 1..=3).prop_map(move |ws| ws.iter().fold(GradedOperator::zero(d), |acc, w| acc.add(w)))
}

pub fn arb_arity_op(d: GradedDims) -> impl Strategy<Value = (usize, GradedOperator)> {
    arb_arity_op_upto(d, 2)
}

/// A single word of arity at most `max`, tagged with its arity.
pub fn arb_arity_op_upto(d: GradedDims, max: usize) -> impl Strategy<Value = (usize, GradedOperator)> {
    (0usize..=max).prop_flat_map(move |n| arb_word_op(d, n).prop_map(move |o| (n, o)))
}

pub fn arb_connection(d: GradedDims) -> impl Strategy<Value = Connection> {
    let cell = move || arb_base_fn(d.k, d.m, (0..d.k).collect(), 1);
    (
        proptest::collection::vec(proptest::collection::vec(cell(), d.r), d.r),
        proptest::collection::vec(proptest::collection::vec(proptest::collection::vec(cell(), d.r), d.r), d.k + d.m),
    )
        .prop_map(|(on_id, on_coord)| Connection { on_id, on_coord })
}

pub fn deg(o: &GradedOperator) -> i64 {
    o.degree().unwrap_or(0)
}

