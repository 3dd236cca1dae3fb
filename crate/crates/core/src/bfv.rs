//! The BFV layer: lifting a Jacobi structure to the graded bundle, BRST
//! charges, the BFV differential, the step-by-step obstruction method and
//! the homological perturbation lemma, BFV Kuranishi and geometric
//! Maurer-Cartan zero loci.

use crate::error::{Error, Result};
use crate::geom::{invert_unit_matrix, SectionOfNormalBundle};
use crate::graded::{
    contraction_one, contraction_two, eval_graded, ghost_form_from_leaf, leaf_forms, omega_e, section_bracket, tautological_g, Connection,
    ContractionOne, ContractionTwo, GhostWord, GradedDims, GradedOperator, GradedSection,
};
use crate::linfty::{leaf_zero_mode, KuranishiReport, LeafForm};
use crate::multider::MultiDerivation;
use crate::ring::{Chart, ScalarFn};
use std::collections::BTreeMap;
use std::fmt;
use std::rc::Rc;

/// Vector-space operations needed by the generic engines.
pub trait Linear: Clone + PartialEq {
    fn add(&self, o: &Self) -> Self;
    fn sub(&self, o: &Self) -> Self;
    fn scale_ratio(&self, p: i64, q: i64) -> Self;
    fn is_zero(&self) -> bool;
}

impl Linear for GradedSection {
    fn add(&self, o: &Self) -> Self {
        GradedSection::add(self, o)
    }
    fn sub(&self, o: &Self) -> Self {
        GradedSection::sub(self, o)
    }
    fn scale_ratio(&self, p: i64, q: i64) -> Self {
        GradedSection::scale_ratio(self, p, q)
    }
    fn is_zero(&self) -> bool {
        GradedSection::is_zero(self)
    }
}

impl Linear for GradedOperator {
    fn add(&self, o: &Self) -> Self {
        GradedOperator::add(self, o)
    }
    fn sub(&self, o: &Self) -> Self {
        GradedOperator::sub(self, o)
    }
    fn scale_ratio(&self, p: i64, q: i64) -> Self {
        GradedOperator::scale_ratio(self, p, q)
    }
    fn is_zero(&self) -> bool {
        GradedOperator::is_zero(self)
    }
}

/// A linear map, possibly failing.
pub type Map<E> = Rc<dyn Fn(&E) -> Result<E>>;

/// Contraction data `(q, j, h)` from `(K, d)` to `(K_, d_)`. The small side
/// is represented inside the same element type.
#[derive(Clone)]
pub struct ContractionData<E> {
    pub q: Map<E>,
    pub j: Map<E>,
    pub h: Map<E>,
    pub d: Map<E>,
    pub d_small: Map<E>,
}

impl<E> fmt::Debug for ContractionData<E> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("ContractionData { .. }")
    }
}

/// Which contraction axioms hold on a sample.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ContractionCheck {
    pub q_j_identity: bool,
    pub homotopy: bool,
    pub h_squared_zero: bool,
    pub h_j_zero: bool,
    pub q_h_zero: bool,
    pub chain_maps: bool,
}

impl ContractionCheck {
    pub fn all(&self) -> bool {
        self.q_j_identity && self.homotopy && self.h_squared_zero && self.h_j_zero && self.q_h_zero && self.chain_maps
    }
}

impl<E: Linear> ContractionData<E> {
    pub fn q(&self, x: &E) -> Result<E> {
        (self.q)(x)
    }
    pub fn j(&self, x: &E) -> Result<E> {
        (self.j)(x)
    }
    pub fn h(&self, x: &E) -> Result<E> {
        (self.h)(x)
    }
    pub fn d(&self, x: &E) -> Result<E> {
        (self.d)(x)
    }
    pub fn d_small(&self, x: &E) -> Result<E> {
        (self.d_small)(x)
    }

    /// Checks every axiom on the given elements of the big side; the small
    /// side is sampled through `q`.
    pub fn check(&self, samples: &[E]) -> Result<ContractionCheck> {
        let mut c = ContractionCheck { q_j_identity: true, homotopy: true, h_squared_zero: true, h_j_zero: true, q_h_zero: true, chain_maps: true };
        for x in samples {
            let y = self.q(x)?;
            let jy = self.j(&y)?;
            c.q_j_identity &= self.q(&jy)? == y;
            let lhs = jy.sub(x);
            let rhs = self.d(&self.h(x)?)?.add(&self.h(&self.d(x)?)?);
            c.homotopy &= lhs == rhs;
            let hx = self.h(x)?;
            c.h_squared_zero &= self.h(&hx)?.is_zero();
            c.h_j_zero &= self.h(&jy)?.is_zero();
            c.q_h_zero &= self.q(&hx)?.is_zero();
            c.chain_maps &= self.q(&self.d(x)?)? == self.d_small(&y)?;
            c.chain_maps &= self.d(&jy)? == self.j(&self.d_small(&y)?)?;
        }
        Ok(c)
    }
}

const SERIES_BOUND: usize = 64;

/// `sum_n (a b)^n x`, which must terminate.
fn nilpotent_series<E: Linear>(a: &Map<E>, b: &Map<E>, x: &E) -> Result<E> {
    let mut term = x.clone();
    let mut sum = x.clone();
    for _ in 0..SERIES_BOUND {
        term = a(&b(&term)?)?;
        if term.is_zero() {
            return Ok(sum);
        }
        sum = sum.add(&term);
    }
    Err(Error::Precondition("perturbation is not small: the geometric series does not terminate".into()))
}

/// The homological perturbation lemma. `samples` are used to check that
/// `d + delta` squares to zero.
pub fn hpl<E: Linear + 'static>(cd: &ContractionData<E>, delta: Map<E>, samples: &[E]) -> Result<ContractionData<E>> {
    let d0 = cd.d.clone();
    let total: Map<E> = {
        let (d0, delta) = (d0.clone(), delta.clone());
        Rc::new(move |x| Ok(d0(x)?.add(&delta(x)?)))
    };
    for x in samples {
        if !total(&total(x)?)?.is_zero() {
            return Err(Error::Precondition("the perturbed differential does not square to zero".into()));
        }
    }
    let (q, j, h, ds) = (cd.q.clone(), cd.j.clone(), cd.h.clone(), cd.d_small.clone());
    let q2: Map<E> = {
        let (q, h, delta) = (q.clone(), h.clone(), delta.clone());
        Rc::new(move |x| q(&nilpotent_series(&delta, &h, x)?))
    };
    let j2: Map<E> = {
        let (j, h, delta) = (j.clone(), h.clone(), delta.clone());
        Rc::new(move |x| nilpotent_series(&h, &delta, &j(x)?))
    };
    let h2: Map<E> = {
        let (h, delta) = (h.clone(), delta.clone());
        Rc::new(move |x| h(&nilpotent_series(&delta, &h, x)?))
    };
    let ds2: Map<E> = {
        let (q, j, h, delta) = (q, j, h, delta);
        Rc::new(move |x| {
            let inner = delta(&j(x)?)?;
            Ok(ds(x)?.add(&q(&nilpotent_series(&delta, &h, &inner)?)?))
        })
    };
    Ok(ContractionData { q: q2, j: j2, h: h2, d: total, d_small: ds2 })
}

/// Input of the step-by-step obstruction method.
pub struct Sbso<'a, E> {
    pub cd: &'a ContractionData<E>,
    pub bracket: &'a dyn Fn(&E, &E) -> Result<E>,
    /// Largest `n` with the element in `F_n`; `None` for zero.
    pub level: &'a dyn Fn(&E) -> Option<i64>,
    /// `P F_{N+1} = 0`.
    pub n: i64,
    /// Every degree-2 element of `F_n` vanishes for `n > max_level`.
    pub max_level: i64,
}

#[derive(Clone, Debug, PartialEq)]
pub enum SbsoOutcome<E> {
    /// An MC element and the corrections `Q_n` added, by filtration level.
    Solved { q: E, corrections: Vec<(i64, E)> },
    /// The existence condition fails; `offending` is `P[Qbar, Qbar]` when
    /// nonzero, and `[Qbar, Qbar]` itself otherwise.
    Obstructed { offending: E, reason: String },
}

/// Deforms `qbar` to an MC element with `Q = Qbar mod F_{N+1}` via
/// `Q_{k+1} = 1/2 H[Q(k), Q(k)]`.
pub fn sbso<E: Linear>(p: &Sbso<'_, E>, qbar: &E) -> Result<SbsoOutcome<E>> {
    let b = (p.bracket)(qbar, qbar)?;
    let pb = p.cd.q(&b)?;
    if !pb.is_zero() {
        return Ok(SbsoOutcome::Obstructed { offending: pb, reason: "P[Qbar, Qbar] != 0".into() });
    }
    if let Some(l) = (p.level)(&b) {
        if l < p.n {
            return Ok(SbsoOutcome::Obstructed { offending: b, reason: format!("[Qbar, Qbar] lies in F_{l}, not in F_{}", p.n) });
        }
    }
    let mut q = qbar.clone();
    let mut corrections = Vec::new();
    let mut k = p.n;
    loop {
        let b = (p.bracket)(&q, &q)?;
        if b.is_zero() {
            return Ok(SbsoOutcome::Solved { q, corrections });
        }
        if k > p.max_level {
            return Err(Error::Invariant("step-by-step obstruction did not terminate".into()));
        }
        if (p.level)(&b).is_some_and(|l| l < k) {
            return Err(Error::Invariant(format!("[Q({k}), Q({k})] left F_{k}")));
        }
        let step = p.cd.h(&b)?.scale_ratio(1, 2);
        if !step.is_zero() {
            q = q.add(&step);
            corrections.push((k + 1, step));
        }
        k += 1;
    }
}

/// `exp(ad R) x`, finite by filtration.
pub fn exp_ad<E: Linear>(bracket: &dyn Fn(&E, &E) -> Result<E>, r: &E, x: &E) -> Result<E> {
    let mut term = x.clone();
    let mut sum = x.clone();
    for n in 1..=SERIES_BOUND as i64 {
        term = bracket(r, &term)?.scale_ratio(1, n);
        if term.is_zero() {
            return Ok(sum);
        }
        sum = sum.add(&term);
    }
    Err(Error::Invariant("exp(ad R) does not terminate".into()))
}

/// The gauge ladder `R_1, R_2, ..` with `R = H(Q1 - Q)` and
/// `Q -> exp(ad R) Q` until `Q = Q1`.
pub fn sbso_gauge<E: Linear>(p: &Sbso<'_, E>, q0: &E, q1: &E) -> Result<Vec<E>> {
    for q in [q0, q1] {
        if !(p.bracket)(q, q)?.is_zero() {
            return Err(Error::Precondition("gauge ladder inputs must be Maurer-Cartan".into()));
        }
    }
    let mut cur = q0.clone();
    let mut ladder = Vec::new();
    let mut last: Option<i64> = None;
    while cur != *q1 {
        let diff = q1.sub(&cur);
        let lvl = (p.level)(&diff);
        if let (Some(a), Some(b)) = (last, lvl) {
            if b <= a {
                return Err(Error::Invariant("gauge ladder does not advance in the filtration".into()));
            }
        }
        if lvl.is_some_and(|l| l > p.max_level) || ladder.len() > SERIES_BOUND {
            return Err(Error::Invariant("gauge ladder does not terminate".into()));
        }
        last = lvl;
        let r = p.cd.h(&diff)?;
        if r.is_zero() {
            return Err(Error::Precondition("the charges differ by a class the homotopy cannot reach".into()));
        }
        cur = exp_ad(p.bracket, &r, &cur)?;
        ladder.push(r);
    }
    Ok(ladder)
}

/// The first contraction as generic data on graded operators.
pub fn contraction_data_one(c1: &ContractionOne) -> ContractionData<GradedOperator> {
    let dims = c1.dims();
    let (a, b, c) = (c1.clone(), c1.clone(), c1.clone());
    ContractionData {
        q: Rc::new(move |x| Ok(a.p(x))),
        j: Rc::new(move |x| {
            let mut out = GradedOperator::zero(dims);
            for d in b.p_multider(x)?.values() {
                out = out.add(&b.i_nabla(d)?);
            }
            Ok(out)
        }),
        h: Rc::new(move |x| Ok(c.h(x))),
        d: Rc::new(|x| Ok(crate::graded::d_g(x))),
        d_small: Rc::new(move |_| Ok(GradedOperator::zero(dims))),
    }
}

/// The second contraction as generic data on graded sections.
pub fn contraction_data_two(c2: &ContractionTwo) -> ContractionData<GradedSection> {
    let dims = c2.dims();
    let (a, b, c, e) = (c2.clone(), c2.clone(), c2.clone(), c2.clone());
    ContractionData {
        q: Rc::new(move |x| a.wp(x)),
        j: Rc::new(move |x| b.iota(x)),
        h: Rc::new(move |x| c.h(x)),
        d: Rc::new(move |x| e.d(x)),
        d_small: Rc::new(move |_| Ok(GradedSection::zero(dims))),
    }
}

/// Filtration level for liftings: `floor((h + k) / 2)` minimised over
/// bidegrees.
pub fn lifting_level(op: &GradedOperator) -> Option<i64> {
    op.bidegrees().into_iter().map(|(h, k)| (h + k).div_euclid(2)).min()
}

/// Filtration level for charges: `F_n` holds antighost degree `>= n + 1`.
pub fn charge_level(s: &GradedSection) -> Option<i64> {
    s.terms().map(|(w, _)| w.bidegree().1 as i64 - 1).min()
}

/// Result of lifting a Jacobi structure.
#[derive(Clone, Debug, PartialEq)]
pub struct LiftReport {
    pub j_hat: GradedOperator,
    /// `J^_k` of bidegree `(k - 1, k - 1)`.
    pub components_by_k: BTreeMap<i64, GradedOperator>,
    pub corrections_added: usize,
    pub fast_path: bool,
}

fn split_lift(j_hat: &GradedOperator) -> Result<BTreeMap<i64, GradedOperator>> {
    let mut out = BTreeMap::new();
    for (h, k) in j_hat.bidegrees() {
        if h != k {
            return Err(Error::Invariant(format!("lifted structure has off-diagonal bidegree ({h}, {k})")));
        }
        out.insert(h + 1, j_hat.bidegree_part(h, k));
    }
    Ok(out)
}

fn check_jacobi_input(j: &MultiDerivation) -> Result<()> {
    if j.arity() != 2 {
        return Err(Error::ArityMismatch { expected: 2, got: j.arity() });
    }
    if !j.is_jacobi() {
        return Err(Error::NotJacobi("cannot lift a structure with nonzero Jacobiator".into()));
    }
    Ok(())
}

/// `J^ = G + i_nabla J` for a flat connection.
pub fn lift_flat(j: &MultiDerivation, connection: Connection, r: usize) -> Result<LiftReport> {
    check_jacobi_input(j)?;
    let (k, m) = j.dims();
    let c1 = contraction_one(GradedDims::new(k, m, r)?, connection)?;
    if !c1.is_flat()? {
        return Err(Error::Precondition("lift_flat needs a flat connection".into()));
    }
    let j_hat = tautological_g(c1.dims()).add(&c1.i_nabla(j)?);
    if !j_hat.bracket(&j_hat).is_zero() {
        return Err(Error::Invariant("[J^, J^] != 0 for a flat lift".into()));
    }
    Ok(LiftReport { components_by_k: split_lift(&j_hat)?, j_hat, corrections_added: 0, fast_path: true })
}

/// Lifts through the step-by-step obstruction method, taking the flat fast
/// path when the connection passes the morphism test.
pub fn lift(j: &MultiDerivation, connection: Connection, r: usize) -> Result<LiftReport> {
    check_jacobi_input(j)?;
    let (k, m) = j.dims();
    let dims = GradedDims::new(k, m, r)?;
    let c1 = contraction_one(dims, connection.clone())?;
    if c1.is_flat()? {
        return lift_flat(j, connection, r);
    }
    let cd = contraction_data_one(&c1);
    let qbar = tautological_g(dims).add(&c1.i_nabla(j)?);
    let bracket = |a: &GradedOperator, b: &GradedOperator| Ok(a.bracket(b));
    let p = Sbso { cd: &cd, bracket: &bracket, level: &lifting_level, n: 0, max_level: 2 * r as i64 + 2 };
    match sbso(&p, &qbar)? {
        SbsoOutcome::Solved { q, corrections } => {
            Ok(LiftReport { components_by_k: split_lift(&q)?, j_hat: q, corrections_added: corrections.len(), fast_path: false })
        }
        SbsoOutcome::Obstructed { reason, .. } => Err(Error::Invariant(format!("lifting obstructed: {reason}"))),
    }
}

/// `{l_1, l_2}_BFV`.
pub fn bfv_bracket(j_hat: &GradedOperator, a: &GradedSection, b: &GradedSection) -> Result<GradedSection> {
    section_bracket(j_hat, a, b)
}

#[derive(Clone, Debug, PartialEq)]
pub struct ChargeReport {
    pub omega: GradedSection,
    pub components_by_antighost: BTreeMap<usize, GradedSection>,
    /// Filtration level of the last correction, `-1` when none was needed.
    pub converged_at: i64,
}

#[derive(Clone, Debug, PartialEq)]
pub enum ChargeOutcome {
    Charge(ChargeReport),
    /// `wp[s]{Omega_E[s], Omega_E[s]}_BFV != 0`: the section is not
    /// coisotropic.
    Obstructed { residual: GradedSection },
}

fn check_rank(j_hat: &GradedOperator, s: &SectionOfNormalBundle) -> Result<()> {
    let d = j_hat.dims();
    if (d.k, d.m) != s.dims() || d.r != d.m {
        return Err(Error::ChartMismatch(format!("lifted structure {d:?} vs section {:?}", s.dims())));
    }
    Ok(())
}

/// The BRST charge of the graph of `s`.
pub fn brst_charge(j_hat: &GradedOperator, s: &SectionOfNormalBundle) -> Result<ChargeOutcome> {
    check_rank(j_hat, s)?;
    let c2 = contraction_two(s)?;
    let cd = contraction_data_two(&c2);
    let jh = j_hat.clone();
    let bracket = move |a: &GradedSection, b: &GradedSection| section_bracket(&jh, a, b);
    let p = Sbso { cd: &cd, bracket: &bracket, level: &charge_level, n: -1, max_level: j_hat.dims().r as i64 + 1 };
    match sbso(&p, c2.omega())? {
        SbsoOutcome::Solved { q, corrections } => {
            let mut by: BTreeMap<usize, GradedSection> = BTreeMap::new();
            for (w, f) in q.terms() {
                by.entry(w.bidegree().1).or_insert_with(|| GradedSection::zero(q.dims())).add_term(*w, f.clone());
            }
            let converged_at = corrections.last().map_or(-1, |c| c.0);
            Ok(ChargeOutcome::Charge(ChargeReport { omega: q, components_by_antighost: by, converged_at }))
        }
        SbsoOutcome::Obstructed { offending, .. } => Ok(ChargeOutcome::Obstructed { residual: offending }),
    }
}

/// `{Omega_E[s], Omega_E[s]}_BFV`.
pub fn bfv_coisotropy_residual(j_hat: &GradedOperator, s: &SectionOfNormalBundle) -> Result<GradedSection> {
    check_rank(j_hat, s)?;
    let om = omega_e(s)?;
    section_bracket(j_hat, &om, &om)
}

/// `d_BFV = {Omega, -}_BFV` as a derivation.
pub fn d_bfv(j_hat: &GradedOperator, omega: &GradedSection) -> Result<GradedOperator> {
    if !section_bracket(j_hat, omega, omega)?.is_zero() {
        return Err(Error::Precondition("Omega is not a Maurer-Cartan element".into()));
    }
    let op = j_hat.bracket(&GradedOperator::from_section(omega));
    if !op.bracket(&op).is_zero() {
        return Err(Error::Invariant("d_BFV does not square to zero".into()));
    }
    Ok(op)
}

/// Applies `d_BFV` to a section.
pub fn apply(op: &GradedOperator, l: &GradedSection) -> Result<GradedSection> {
    eval_graded(op, &[l.clone()])
}

/// The BFV complex resolved over the leafwise complex: `contraction_two(0)`
/// perturbed by `d_BFV - d[0]`.
pub fn bfv_resolution(j_hat: &GradedOperator, omega: &GradedSection, samples: &[GradedSection]) -> Result<ContractionData<GradedSection>> {
    let d = j_hat.dims();
    let c2 = contraction_two(&SectionOfNormalBundle::zero(d.k, d.m))?;
    let cd = contraction_data_two(&c2);
    let op = d_bfv(j_hat, omega)?;
    let delta: Map<GradedSection> = Rc::new(move |x| Ok(apply(&op, x)?.sub(&c2.d(x)?)));
    hpl(&cd, delta, samples)
}

/// The ghost form `sum g_a xi^a` of a normal section.
pub fn ghost_form(s: &SectionOfNormalBundle) -> Result<GradedSection> {
    let (k, m) = s.dims();
    let dims = GradedDims::new(k, m, m)?;
    let mut out = GradedSection::zero(dims);
    for (a, g) in s.components().iter().enumerate() {
        out = out.add(&GradedSection::ghost(dims, a).mul_fn(g));
    }
    Ok(out)
}

/// `j'` of the resolution applied to a section: a `d_BFV`-closed degree-1
/// lift whenever `s` is leafwise closed.
pub fn bfv_lift_section(resolution: &ContractionData<GradedSection>, s: &SectionOfNormalBundle) -> Result<GradedSection> {
    resolution.j(&ghost_form(s)?)
}

/// `[nu] -> [{nu, nu}_BFV]`, reduced by `wp[0]` and the leaf zero mode.
pub fn bfv_kuranishi(j_hat: &GradedOperator, omega: &GradedSection, nu: &GradedSection, chart: &Chart) -> Result<KuranishiReport> {
    let d = j_hat.dims();
    if chart.dims() != (d.k, d.m) {
        return Err(Error::ChartMismatch(format!("{:?} vs {:?}", chart.dims(), (d.k, d.m))));
    }
    if !section_bracket(j_hat, omega, nu)?.is_zero() {
        return Err(Error::Precondition("nu is not d_BFV-closed".into()));
    }
    let b = section_bracket(j_hat, nu, nu)?;
    let c2 = contraction_two(&SectionOfNormalBundle::zero(d.k, d.m))?;
    let reduced = c2.wp(&b)?;
    let class = leaf_forms(&reduced)?.into_iter().nth(2).unwrap_or_else(|| LeafForm::zero(d.k, d.m, 2));
    let density = class.scale_ratio(1, 2);
    let zero_mode = leaf_zero_mode(&density, chart);
    Ok(KuranishiReport { class, density, zero_mode, two_pi_power: chart.leaf_coords.len() as u32 })
}

/// A geometric MC element read back as a section, with the frame matrix
/// `M` such that `pr^(1,0) Omega = M (y - g)` componentwise.
#[derive(Clone, Debug, PartialEq)]
pub struct GeometricMc {
    pub section: SectionOfNormalBundle,
    pub frame: Vec<Vec<ScalarFn>>,
}

/// Solves the zero locus of `pr^(1,0) Omega = sum e_A xi^A`.
pub fn geometric_mc_zero_locus(omega: &GradedSection) -> Result<GeometricMc> {
    let d = omega.dims();
    if d.r != d.m {
        return Err(Error::Precondition("ghost rank must equal the fiber count".into()));
    }
    let (k, m) = (d.k, d.m);
    let mut mat = vec![vec![ScalarFn::zero(k, m); m]; m];
    let mut constant = vec![ScalarFn::zero(k, m); m];
    for a in 0..m {
        let e = omega.coeff(&GhostWord { ghosts: 1 << a, antighosts: 0 });
        if e.fiber_degree().is_some_and(|deg| deg > 1) {
            return Err(Error::NotInvertible(format!("e_{} is not linear in the fibers: the zero locus is not a section graph", a + 1)));
        }
        constant[a] = e.restrict_zero_fibers();
        for b in 0..m {
            mat[a][b] = e.partial_fiber(b);
        }
    }
    let inv = invert_unit_matrix(&mat, k, m, "linear part of pr^(1,0) Omega")?;
    let mut g = Vec::with_capacity(m);
    for row in &inv {
        let mut acc = ScalarFn::zero(k, m);
        for (x, c) in row.iter().zip(&constant) {
            acc = &acc - &(x * c);
        }
        if !acc.is_base_only() {
            return Err(Error::NotInvertible("the zero locus is not a section graph".into()));
        }
        g.push(acc);
    }
    let section = SectionOfNormalBundle::new(g)?;
    let e = omega.bidegree_part(1, 0).substitute_fibers(section.components())?;
    if !e.is_zero() {
        return Err(Error::Invariant("zero locus check failed".into()));
    }
    Ok(GeometricMc { section, frame: mat })
}

/// The base ghost form of a leaf form, for use with the resolution.
pub fn leaf_to_ghost(w: &LeafForm) -> Result<GradedSection> {
    ghost_form_from_leaf(w)
}
