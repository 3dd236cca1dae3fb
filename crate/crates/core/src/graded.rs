//! The graded layer: ghosts `xi^A`, antighosts `xi*_A`, graded sections of
//! the ghost line bundle, graded multi-derivations, the tautological
//! structure `G` and the two families of contraction data.
//!
//! Internally a graded multi-derivation is stored as a superfunction on the
//! shifted cotangent bundle of the line bundle's dual, in the coordinates
//! `(x, t, xt^A = t xi^A, xi*_A)` with momenta `th_x`, `th_t` (odd) and
//! `pt_A`, `ps^A` (even). The Schouten-Jacobi bracket is then the canonical
//! odd Poisson bracket, and every Koszul sign comes from reordering odd
//! letters. Words in the basic symbols `id, D_i, D_A, D^A` are produced by
//! [`GradedOperator::words`] and accepted by [`GradedOperator::from_word`].

use crate::error::{Error, Result};
use crate::geom::SectionOfNormalBundle;
use crate::linfty::LeafForm;
use crate::multider::{parity_sign, sort_sign, MultiDerivation, MultiVectorField};
use crate::ring::{format_fn, scalar_from_json, scalar_to_json, Chart, GaussianRational, ScalarFn};
use serde_json::{json, Value};
use std::collections::BTreeMap;
use std::fmt;

/// Chart dimensions plus the ghost rank `r`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct GradedDims {
    pub k: usize,
    pub m: usize,
    pub r: usize,
}

impl GradedDims {
    pub fn new(k: usize, m: usize, r: usize) -> Result<Self> {
        if r > 16 || 2 * r + k + m + 1 > 64 {
            return Err(Error::Malformed(format!("graded chart too large: k={k}, m={m}, r={r}")));
        }
        Ok(Self { k, m, r })
    }

    fn n(&self) -> usize {
        self.k + self.m
    }

    fn xi(&self, a: usize) -> u32 {
        a as u32
    }

    fn xs(&self, a: usize) -> u32 {
        (self.r + a) as u32
    }

    fn th(&self, c: usize) -> u32 {
        (2 * self.r + c) as u32
    }

    fn tt(&self) -> u32 {
        (2 * self.r + self.n()) as u32
    }

    fn ghost_mask(&self) -> u64 {
        (1u64 << (2 * self.r)) - 1
    }
}

/// A product of ghosts and antighosts in canonical order
/// `xi^1 < .. < xi^r < xi*_1 < .. < xi*_r`, stored as two bit masks.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct GhostWord {
    pub ghosts: u32,
    pub antighosts: u32,
}

impl GhostWord {
    pub fn empty() -> Self {
        Self::default()
    }

    pub fn ghost_indices(&self) -> Vec<usize> {
        bits(self.ghosts as u64)
    }

    pub fn antighost_indices(&self) -> Vec<usize> {
        bits(self.antighosts as u64)
    }

    /// `(ghost count, antighost count)`.
    pub fn bidegree(&self) -> (usize, usize) {
        (self.ghosts.count_ones() as usize, self.antighosts.count_ones() as usize)
    }

    /// Ghosts minus antighosts.
    pub fn degree(&self) -> i64 {
        let (h, k) = self.bidegree();
        h as i64 - k as i64
    }

    fn odd_mask(&self, d: &GradedDims) -> u64 {
        (self.ghosts as u64) | ((self.antighosts as u64) << d.r)
    }

    fn from_odd_mask(mask: u64, d: &GradedDims) -> Self {
        let low = (1u64 << d.r) - 1;
        Self { ghosts: (mask & low) as u32, antighosts: ((mask >> d.r) & low) as u32 }
    }
}

fn bits(mask: u64) -> Vec<usize> {
    (0..64).filter(|&i| mask & (1u64 << i) != 0).collect()
}

/// Sign of the product of two canonically ordered odd monomials, or `None`
/// when they share a letter.
fn merge_masks(a: u64, b: u64) -> Option<i64> {
    if a & b != 0 {
        return None;
    }
    let mut swaps = 0u32;
    let mut rest = b;
    while rest != 0 {
        let j = rest.trailing_zeros();
        rest &= rest - 1;
        swaps += if j == 63 { 0 } else { (a >> (j + 1)).count_ones() };
    }
    Some(if swaps % 2 == 0 { 1 } else { -1 })
}

/// A section `sum f_w w mu` of the ghost line bundle with `w` a ghost word
/// and `f` a function on the chart.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GradedSection {
    dims: GradedDims,
    terms: BTreeMap<GhostWord, ScalarFn>,
}

impl GradedSection {
    pub fn zero(dims: GradedDims) -> Self {
        Self { dims, terms: BTreeMap::new() }
    }

    pub fn function(f: ScalarFn, r: usize) -> Result<Self> {
        let (k, m) = f.dims();
        let mut out = Self::zero(GradedDims::new(k, m, r)?);
        out.add_term(GhostWord::empty(), f);
        Ok(out)
    }

    /// `f xi^{ghosts} xi*_{antighosts}` with the letters in the given order.
    pub fn monomial(dims: GradedDims, ghosts: &[usize], antighosts: &[usize], f: ScalarFn) -> Self {
        let mut out = Self::zero(dims);
        let Some((sg, g)) = sort_sign(ghosts) else { return out };
        let Some((sa, a)) = sort_sign(antighosts) else { return out };
        assert!(g.iter().chain(&a).all(|&i| i < dims.r), "ghost index out of range");
        let w = GhostWord {
            ghosts: g.iter().fold(0, |acc, &i| acc | (1 << i)),
            antighosts: a.iter().fold(0, |acc, &i| acc | (1 << i)),
        };
        out.add_term(w, f.scale_int(sg * sa));
        out
    }

    /// The ghost `xi^a`.
    pub fn ghost(dims: GradedDims, a: usize) -> Self {
        Self::monomial(dims, &[a], &[], ScalarFn::one(dims.k, dims.m))
    }

    /// The antighost section `xi*_a (x) mu`.
    pub fn antighost(dims: GradedDims, a: usize) -> Self {
        Self::monomial(dims, &[], &[a], ScalarFn::one(dims.k, dims.m))
    }

    pub fn dims(&self) -> GradedDims {
        self.dims
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&GhostWord, &ScalarFn)> {
        self.terms.iter()
    }

    pub fn coeff(&self, w: &GhostWord) -> ScalarFn {
        self.terms.get(w).cloned().unwrap_or_else(|| ScalarFn::zero(self.dims.k, self.dims.m))
    }

    pub fn add_term(&mut self, w: GhostWord, f: ScalarFn) {
        assert_eq!(f.dims(), (self.dims.k, self.dims.m), "chart mismatch in graded section");
        if f.is_zero() {
            return;
        }
        let e = self.terms.entry(w).or_insert_with(|| ScalarFn::zero(f.k(), f.m()));
        *e = &*e + &f;
        if e.is_zero() {
            self.terms.remove(&w);
        }
    }

    pub fn add(&self, o: &Self) -> Self {
        assert_eq!(self.dims, o.dims, "adding graded sections over different charts");
        let mut out = self.clone();
        for (w, f) in &o.terms {
            out.add_term(*w, f.clone());
        }
        out
    }

    pub fn sub(&self, o: &Self) -> Self {
        self.add(&o.neg())
    }

    pub fn neg(&self) -> Self {
        self.map(|f| -f)
    }

    pub fn scale_int(&self, n: i64) -> Self {
        self.map(|f| f.scale_int(n))
    }

    pub fn scale_ratio(&self, p: i64, q: i64) -> Self {
        self.map(|f| f.scale_ratio(p, q))
    }

    pub fn scale(&self, c: &GaussianRational) -> Self {
        self.map(|f| f.scale(c))
    }

    pub fn mul_fn(&self, g: &ScalarFn) -> Self {
        self.map(|f| f * g)
    }

    pub fn map(&self, op: impl Fn(&ScalarFn) -> ScalarFn) -> Self {
        let mut out = Self::zero(self.dims);
        for (w, f) in &self.terms {
            out.add_term(*w, op(f));
        }
        out
    }

    /// Keeps the terms whose word satisfies `keep`.
    pub fn filter(&self, keep: impl Fn(&GhostWord) -> bool) -> Self {
        Self { dims: self.dims, terms: self.terms.iter().filter(|(w, _)| keep(w)).map(|(w, f)| (*w, f.clone())).collect() }
    }

    /// The component of ghost/antighost bidegree `(h, k)`.
    pub fn bidegree_part(&self, h: usize, k: usize) -> Self {
        self.filter(|w| w.bidegree() == (h, k))
    }

    /// Total degree `ghosts - antighosts` when homogeneous.
    pub fn degree(&self) -> Option<i64> {
        let mut it = self.terms.keys().map(GhostWord::degree);
        let first = it.next()?;
        it.all(|d| d == first).then_some(first)
    }

    /// The homogeneous components by total degree.
    pub fn degree_parts(&self) -> BTreeMap<i64, GradedSection> {
        let mut out: BTreeMap<i64, GradedSection> = BTreeMap::new();
        for (w, f) in &self.terms {
            out.entry(w.degree()).or_insert_with(|| Self::zero(self.dims)).add_term(*w, f.clone());
        }
        out
    }

    /// Largest antighost count among the terms.
    pub fn max_antighosts(&self) -> Option<usize> {
        self.terms.keys().map(|w| w.bidegree().1).max()
    }

    /// Substitutes `y_a -> g_a` in every coefficient.
    pub fn substitute_fibers(&self, g: &[ScalarFn]) -> Result<Self> {
        let assign: Vec<Option<ScalarFn>> = g.iter().cloned().map(Some).collect();
        let mut out = Self::zero(self.dims);
        for (w, f) in &self.terms {
            out.add_term(*w, f.substitute_fiber(&assign, self.dims.k, self.dims.m)?);
        }
        Ok(out)
    }

    pub fn to_json(&self) -> Value {
        Value::Array(
            self.terms
                .iter()
                .map(|(w, f)| {
                    json!({
                        "ghosts": w.ghost_indices().iter().map(|i| i + 1).collect::<Vec<_>>(),
                        "antighosts": w.antighost_indices().iter().map(|i| i + 1).collect::<Vec<_>>(),
                        "coef": scalar_to_json(f),
                    })
                })
                .collect(),
        )
    }

    pub fn from_json(v: &Value, dims: GradedDims) -> Result<Self> {
        let arr = v.as_array().ok_or_else(|| Error::Malformed("graded section: expected a term list".into()))?;
        let mut out = Self::zero(dims);
        for t in arr {
            let idx = |key: &str| -> Result<Vec<usize>> {
                t.get(key)
                    .and_then(Value::as_array)
                    .ok_or_else(|| Error::Malformed(format!("graded section: missing `{key}`")))?
                    .iter()
                    .map(|x| match x.as_u64() {
                        Some(i) if i >= 1 && (i as usize) <= dims.r => Ok(i as usize - 1),
                        _ => Err(Error::Malformed(format!("graded section: bad index in `{key}`"))),
                    })
                    .collect()
            };
            let f = scalar_from_json(t.get("coef").unwrap_or(&Value::Null), dims.k, dims.m)?;
            out = out.add(&Self::monomial(dims, &idx("ghosts")?, &idx("antighosts")?, f));
        }
        Ok(out)
    }

    pub fn format(&self, chart: &Chart) -> String {
        if self.terms.is_empty() {
            return "0".into();
        }
        self.terms
            .iter()
            .map(|(w, f)| {
                let mut s = format!("({})", format_fn(f, chart));
                for a in w.ghost_indices() {
                    s.push_str(&format!("*xi^{}", a + 1));
                }
                for a in w.antighost_indices() {
                    s.push_str(&format!("*xi*_{}", a + 1));
                }
                s
            })
            .collect::<Vec<_>>()
            .join(" + ")
    }
}

/// Product in the ghost algebra, with the sign of merging canonical words.
pub fn graded_mul(a: &GradedSection, b: &GradedSection) -> GradedSection {
    assert_eq!(a.dims, b.dims, "multiplying graded sections over different charts");
    let d = a.dims;
    let mut out = GradedSection::zero(d);
    for (wa, fa) in &a.terms {
        for (wb, fb) in &b.terms {
            let Some(s) = merge_masks(wa.odd_mask(&d), wb.odd_mask(&d)) else { continue };
            let w = GhostWord::from_odd_mask(wa.odd_mask(&d) | wb.odd_mask(&d), &d);
            out.add_term(w, (fa * fb).scale_int(s));
        }
    }
    out
}

/// A basic symbol of an operator word.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Symbol {
    /// `D_i` along torus coordinate `i`.
    DPh(usize),
    /// `D_i` along fiber coordinate `a`.
    DY(usize),
    /// `D_A`, the ghost derivative.
    DXi(usize),
    /// `D^A`, the antighost derivative.
    DXiStar(usize),
    /// The identity, always last in a word.
    Id,
}

impl fmt::Display for Symbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Symbol::DPh(i) => write!(f, "D_PH({})", i + 1),
            Symbol::DY(a) => write!(f, "D_Y({})", a + 1),
            Symbol::DXi(a) => write!(f, "D_XI({})", a + 1),
            Symbol::DXiStar(a) => write!(f, "D_XISTAR({})", a + 1),
            Symbol::Id => write!(f, "ID"),
        }
    }
}

impl Symbol {
    pub fn parse(s: &str) -> Result<Self> {
        let s = s.trim();
        if s == "ID" {
            return Ok(Symbol::Id);
        }
        let bad = || Error::Malformed(format!("unknown symbol `{s}`"));
        let (head, rest) = s.split_once('(').ok_or_else(bad)?;
        let idx: usize = rest.strip_suffix(')').ok_or_else(bad)?.trim().parse().map_err(|_| bad())?;
        if idx == 0 {
            return Err(bad());
        }
        let i = idx - 1;
        match head {
            "D_PH" => Ok(Symbol::DPh(i)),
            "D_Y" => Ok(Symbol::DY(i)),
            "D_XI" => Ok(Symbol::DXi(i)),
            "D_XISTAR" => Ok(Symbol::DXiStar(i)),
            _ => Err(bad()),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
struct Key {
    t: i32,
    odd: u64,
    even: Vec<u16>,
}

impl Key {
    fn unit(r: usize) -> Self {
        Self { t: 0, odd: 0, even: vec![0; 2 * r] }
    }

    fn momenta(&self, d: &GradedDims) -> u32 {
        (self.odd >> (2 * d.r)).count_ones() + self.even.iter().map(|&e| e as u32).sum::<u32>()
    }

    fn superdegree(&self, d: &GradedDims) -> i64 {
        let gh = (self.odd & ((1u64 << d.r) - 1)).count_ones() as i64;
        let ag = ((self.odd >> d.r) & ((1u64 << d.r) - 1)).count_ones() as i64;
        let th = (self.odd >> (2 * d.r)).count_ones() as i64;
        let ps: i64 = self.even[d.r..].iter().map(|&e| e as i64).sum();
        gh - ag + th + 2 * ps
    }

    fn bidegree(&self, d: &GradedDims) -> (i64, i64) {
        let gh = (self.odd & ((1u64 << d.r) - 1)).count_ones() as i64;
        let ag = ((self.odd >> d.r) & ((1u64 << d.r) - 1)).count_ones() as i64;
        let pt: i64 = self.even[..d.r].iter().map(|&e| e as i64).sum();
        let ps: i64 = self.even[d.r..].iter().map(|&e| e as i64).sum();
        (gh - pt, ag - ps)
    }

    fn naive_weight(&self, d: &GradedDims) -> u32 {
        (self.odd & d.ghost_mask()).count_ones() + self.even.iter().map(|&e| e as u32).sum::<u32>()
    }
}

#[derive(Clone, Copy)]
enum Var {
    X(usize),
    T,
    Odd(u32),
    Even(usize),
}

/// A graded multi-derivation of the ghost line bundle (sections are the
/// arity-0 case), as a finite sum of words in the basic symbols.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GradedOperator {
    dims: GradedDims,
    terms: BTreeMap<Key, ScalarFn>,
}

impl GradedOperator {
    pub fn zero(dims: GradedDims) -> Self {
        Self { dims, terms: BTreeMap::new() }
    }

    pub fn dims(&self) -> GradedDims {
        self.dims
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    fn add_raw(&mut self, key: Key, f: ScalarFn) {
        if f.is_zero() {
            return;
        }
        match self.terms.get_mut(&key) {
            Some(e) => {
                *e = &*e + &f;
                if e.is_zero() {
                    self.terms.remove(&key);
                }
            }
            None => {
                self.terms.insert(key, f);
            }
        }
    }

    fn single(dims: GradedDims, key: Key, f: ScalarFn) -> Self {
        let mut out = Self::zero(dims);
        out.add_raw(key, f);
        out
    }

    fn odd_letter(dims: GradedDims, bit: u32, t: i32) -> Self {
        let mut key = Key::unit(dims.r);
        key.odd = 1u64 << bit;
        key.t = t;
        Self::single(dims, key, ScalarFn::one(dims.k, dims.m))
    }

    fn even_letter(dims: GradedDims, i: usize, t: i32) -> Self {
        let mut key = Key::unit(dims.r);
        key.even[i] = 1;
        key.t = t;
        Self::single(dims, key, ScalarFn::one(dims.k, dims.m))
    }

    fn t_power(dims: GradedDims, e: i32) -> Self {
        let mut key = Key::unit(dims.r);
        key.t = e;
        Self::single(dims, key, ScalarFn::one(dims.k, dims.m))
    }

    pub fn add(&self, o: &Self) -> Self {
        assert_eq!(self.dims, o.dims, "adding graded operators over different charts");
        let mut out = self.clone();
        for (k, f) in &o.terms {
            out.add_raw(k.clone(), f.clone());
        }
        out
    }

    pub fn sub(&self, o: &Self) -> Self {
        self.add(&o.neg())
    }

    pub fn neg(&self) -> Self {
        self.map(|f| -f)
    }

    pub fn scale_int(&self, n: i64) -> Self {
        self.map(|f| f.scale_int(n))
    }

    pub fn scale_ratio(&self, p: i64, q: i64) -> Self {
        self.map(|f| f.scale_ratio(p, q))
    }

    pub fn mul_fn(&self, g: &ScalarFn) -> Self {
        self.map(|f| f * g)
    }

    fn map(&self, op: impl Fn(&ScalarFn) -> ScalarFn) -> Self {
        let mut out = Self::zero(self.dims);
        for (k, f) in &self.terms {
            out.add_raw(k.clone(), op(f));
        }
        out
    }

    fn filter(&self, keep: impl Fn(&Key) -> bool) -> Self {
        Self { dims: self.dims, terms: self.terms.iter().filter(|(k, _)| keep(k)).map(|(k, f)| (k.clone(), f.clone())).collect() }
    }

    /// Supercommutative product of the underlying superfunctions.
    fn mul(&self, o: &Self) -> Self {
        let mut out = Self::zero(self.dims);
        for (ka, fa) in &self.terms {
            for (kb, fb) in &o.terms {
                if let Some((k, s)) = mul_keys(ka, kb) {
                    out.add_raw(k, (fa * fb).scale_int(s));
                }
            }
        }
        out
    }

    /// Product of a function on the total graded chart with this operator.
    pub fn mul_section_coefficient(&self, a: &GradedSection) -> Self {
        coefficient_encoding(a).mul(self)
    }

    /// The encoding of a graded section as an arity-0 operator.
    pub fn from_section(s: &GradedSection) -> Self {
        let d = s.dims;
        let mut out = Self::zero(d);
        for (w, f) in &s.terms {
            let (h, _) = w.bidegree();
            let mut key = Key::unit(d.r);
            key.odd = w.odd_mask(&d);
            key.t = 1 - h as i32;
            out.add_raw(key, f.clone());
        }
        out
    }

    /// Reads back an arity-0 operator as a graded section.
    pub fn to_section(&self) -> Result<GradedSection> {
        let d = self.dims;
        let mut out = GradedSection::zero(d);
        for (key, f) in &self.terms {
            if key.momenta(&d) != 0 {
                return Err(Error::ArityMismatch { expected: 0, got: key.momenta(&d) as usize });
            }
            let w = GhostWord::from_odd_mask(key.odd, &d);
            if key.t != 1 - w.bidegree().0 as i32 {
                return Err(Error::Invariant("inhomogeneous line-bundle weight in a section".into()));
            }
            out.add_term(w, f.clone());
        }
        Ok(out)
    }

    /// The ungraded multi-derivation `P - Q ^ id`, embedded through the
    /// trivial connection.
    pub fn from_multider(d: &MultiDerivation, r: usize) -> Result<Self> {
        let (k, m) = d.dims();
        let dims = GradedDims::new(k, m, r)?;
        let n = d.arity() as i32;
        let mut out = Self::zero(dims);
        for (idx, f) in d.p().terms() {
            let mut key = Key::unit(r);
            key.t = 1 - n;
            key.odd = idx.iter().fold(0, |acc, &c| acc | (1u64 << dims.th(c)));
            out.add_raw(key, f.clone());
        }
        if n > 0 {
            for (idx, f) in d.q().terms() {
                let mut key = Key::unit(r);
                key.t = 2 - n;
                key.odd = idx.iter().fold(0, |acc, &c| acc | (1u64 << dims.th(c))) | (1u64 << dims.tt());
                out.add_raw(key, -f);
            }
        }
        Ok(out)
    }

    /// The part free of ghosts, antighosts and their derivatives, read as an
    /// ungraded multi-derivation per arity.
    pub fn ungraded_parts(&self) -> Result<BTreeMap<usize, MultiDerivation>> {
        let d = self.dims;
        let mut ps: BTreeMap<usize, MultiVectorField> = BTreeMap::new();
        let mut qs: BTreeMap<usize, MultiVectorField> = BTreeMap::new();
        for (key, f) in &self.terms {
            if key.odd & d.ghost_mask() != 0 || key.even.iter().any(|&e| e != 0) {
                continue;
            }
            let has_t = key.odd & (1u64 << d.tt()) != 0;
            let idx: Vec<usize> = bits(key.odd >> (2 * d.r)).into_iter().filter(|&c| c < d.n()).collect();
            let n = idx.len() + has_t as usize;
            let expected_t = if has_t { 2 - n as i32 } else { 1 - n as i32 };
            if key.t != expected_t {
                return Err(Error::Invariant("inhomogeneous line-bundle weight".into()));
            }
            if has_t {
                qs.entry(n).or_insert_with(|| MultiVectorField::zero(d.k, d.m, n - 1)).add_term(&idx, -f);
            } else {
                ps.entry(n).or_insert_with(|| MultiVectorField::zero(d.k, d.m, n)).add_term(&idx, f.clone());
            }
        }
        let mut out = BTreeMap::new();
        let arities: Vec<usize> = ps.keys().chain(qs.keys()).copied().collect();
        for n in arities {
            if out.contains_key(&n) {
                continue;
            }
            let p = ps.get(&n).cloned().unwrap_or_else(|| MultiVectorField::zero(d.k, d.m, n));
            let q = qs.get(&n).cloned().unwrap_or_else(|| MultiVectorField::zero(d.k, d.m, n.saturating_sub(1)));
            let md = if n == 0 { MultiDerivation::section(p.coeff(&[])) } else { MultiDerivation::new(p, q)? };
            if !md.is_zero() {
                out.insert(n, md);
            }
        }
        Ok(out)
    }

    /// `coef * s_1 * .. * s_n` for a word of basic symbols.
    pub fn from_word(word: &[Symbol], coef: &GradedSection) -> Result<Self> {
        let d = coef.dims;
        let n = word.len() as i32;
        let mut acc = coefficient_encoding(coef).mul(&Self::t_power(d, 1 - n));
        for s in word {
            let enc = match *s {
                Symbol::DPh(i) if i < d.k => Self::odd_letter(d, d.th(i), 0),
                Symbol::DY(a) if a < d.m => Self::odd_letter(d, d.th(d.k + a), 0),
                Symbol::DXi(a) if a < d.r => Self::even_letter(d, a, 1),
                Symbol::DXiStar(a) if a < d.r => Self::even_letter(d, d.r + a, 0),
                Symbol::Id => Self::identity_symbol(d),
                _ => return Err(Error::Malformed(format!("symbol {s} out of range"))),
            };
            acc = acc.mul(&enc);
        }
        Ok(acc)
    }

    /// The encoding of `id`.
    fn identity_symbol(d: GradedDims) -> Self {
        let mut out = Self::odd_letter(d, d.tt(), 1);
        for a in 0..d.r {
            out = out.add(&Self::odd_letter(d, d.xi(a), 0).mul(&Self::even_letter(d, a, 0)));
        }
        out
    }

    /// The word expansion `sum coef(w) w`; words list `D_i` by coordinate,
    /// then `D_A`, then `D^A`, then `id`.
    pub fn words(&self) -> Result<BTreeMap<Vec<Symbol>, GradedSection>> {
        let d = self.dims;
        let mut out: BTreeMap<Vec<Symbol>, GradedSection> = BTreeMap::new();
        let mut pending: Vec<(Key, ScalarFn)> = self.terms.iter().map(|(k, f)| (k.clone(), f.clone())).collect();
        let mut corrections = Self::zero(d);
        for a in 0..d.r {
            corrections = corrections.add(&Self::odd_letter(d, d.xi(a), 0).mul(&Self::even_letter(d, a, 0)));
        }
        while let Some((key, f)) = pending.pop() {
            let tt = 1u64 << d.tt();
            if key.odd & tt != 0 {
                let mut x = key.clone();
                x.odd &= !tt;
                x.t -= 1;
                decode_plain(&d, &x, &f, true, &mut out)?;
                let extra = Self::single(d, x, f).mul(&corrections).neg();
                pending.extend(extra.terms);
            } else {
                decode_plain(&d, &key, &f, false, &mut out)?;
            }
        }
        out.retain(|_, s| !s.is_zero());
        Ok(out)
    }

    /// Arities occurring in the operator.
    pub fn arities(&self) -> Vec<usize> {
        let mut v: Vec<usize> = self.terms.keys().map(|k| k.momenta(&self.dims) as usize).collect();
        v.sort_unstable();
        v.dedup();
        v
    }

    /// The arity when homogeneous (zero counts as any arity).
    pub fn arity(&self) -> Option<usize> {
        let a = self.arities();
        match a.len() {
            0 => Some(0),
            1 => Some(a[0]),
            _ => None,
        }
    }

    /// Total degree on `D*(L[1])`, `arity - 1 + h - k`, when homogeneous.
    pub fn degree(&self) -> Option<i64> {
        let mut it = self.terms.keys().map(|k| k.superdegree(&self.dims) - 1);
        let first = it.next()?;
        it.all(|x| x == first).then_some(first)
    }

    /// The component of bidegree `(h, k)`, where `D_A` counts `-1` ghosts and
    /// `D^A` counts `-1` antighosts.
    pub fn bidegree_part(&self, h: i64, k: i64) -> Self {
        let d = self.dims;
        self.filter(|key| key.bidegree(&d) == (h, k))
    }

    /// All bidegrees occurring.
    pub fn bidegrees(&self) -> Vec<(i64, i64)> {
        let mut v: Vec<(i64, i64)> = self.terms.keys().map(|k| k.bidegree(&self.dims)).collect();
        v.sort_unstable();
        v.dedup();
        v
    }

    /// The component of arity `n`.
    pub fn arity_part(&self, n: usize) -> Self {
        let d = self.dims;
        self.filter(|key| key.momenta(&d) as usize == n)
    }

    fn deriv(&self, key: &Key, f: &ScalarFn, v: Var, right: bool) -> Option<(Key, ScalarFn)> {
        match v {
            Var::X(c) => {
                let g = f.partial(c);
                (!g.is_zero()).then(|| (key.clone(), g))
            }
            Var::T => {
                if key.t == 0 {
                    return None;
                }
                let mut k2 = key.clone();
                k2.t -= 1;
                Some((k2, f.scale_int(key.t as i64)))
            }
            Var::Odd(j) => {
                if key.odd & (1u64 << j) == 0 {
                    return None;
                }
                let others = if right {
                    if j == 63 {
                        0
                    } else {
                        (key.odd >> (j + 1)).count_ones()
                    }
                } else {
                    (key.odd & ((1u64 << j) - 1)).count_ones()
                };
                let mut k2 = key.clone();
                k2.odd &= !(1u64 << j);
                Some((k2, if others % 2 == 0 { f.clone() } else { -f }))
            }
            Var::Even(i) => {
                let e = key.even[i];
                if e == 0 {
                    return None;
                }
                let mut k2 = key.clone();
                k2.even[i] -= 1;
                Some((k2, f.scale_int(e as i64)))
            }
        }
    }

    fn derivative_table(&self, vars: &[Var], right: bool) -> Vec<Vec<(Key, ScalarFn)>> {
        vars.iter()
            .map(|&v| self.terms.iter().filter_map(|(k, f)| self.deriv(k, f, v, right)).collect())
            .collect()
    }

    fn canonical_pairs(&self) -> Vec<(Var, Var)> {
        let d = self.dims;
        let mut pairs = Vec::new();
        for c in 0..d.n() {
            pairs.push((Var::X(c), Var::Odd(d.th(c))));
        }
        pairs.push((Var::T, Var::Odd(d.tt())));
        for a in 0..d.r {
            pairs.push((Var::Odd(d.xi(a)), Var::Even(a)));
            pairs.push((Var::Odd(d.xs(a)), Var::Even(d.r + a)));
        }
        pairs
    }

    /// The graded Schouten-Jacobi bracket.
    pub fn bracket(&self, o: &Self) -> Self {
        assert_eq!(self.dims, o.dims, "bracket of graded operators over different charts");
        let pairs = self.canonical_pairs();
        let qs: Vec<Var> = pairs.iter().map(|p| p.0).collect();
        let ps: Vec<Var> = pairs.iter().map(|p| p.1).collect();
        let fr_p = self.derivative_table(&ps, true);
        let fr_q = self.derivative_table(&qs, true);
        let gl_p = o.derivative_table(&ps, false);
        let gl_q = o.derivative_table(&qs, false);
        let mut out = Self::zero(self.dims);
        for i in 0..pairs.len() {
            for (sign, left, right) in [(1, &fr_p[i], &gl_q[i]), (-1, &fr_q[i], &gl_p[i])] {
                for (ka, fa) in left {
                    for (kb, fb) in right {
                        if let Some((k, s)) = mul_keys(ka, kb) {
                            out.add_raw(k, (fa * fb).scale_int(s * sign));
                        }
                    }
                }
            }
        }
        out
    }

    /// Algebra substitution of the coordinate momenta; used to pass to the
    /// frame adapted to a connection.
    fn substitute_momenta(&self, th_images: &[GradedOperator], tt_image: &GradedOperator) -> Self {
        let d = self.dims;
        let mut out = Self::zero(d);
        for (key, f) in &self.terms {
            let mut prefix = Key::unit(d.r);
            prefix.t = key.t;
            prefix.odd = key.odd & d.ghost_mask();
            let mut acc = Self::single(d, prefix, f.clone());
            for c in 0..d.n() {
                if key.odd & (1u64 << d.th(c)) != 0 {
                    acc = acc.mul(&th_images[c]);
                }
            }
            if key.odd & (1u64 << d.tt()) != 0 {
                acc = acc.mul(tt_image);
            }
            let mut tail = Key::unit(d.r);
            tail.even = key.even.clone();
            acc = acc.mul(&Self::single(d, tail, ScalarFn::one(d.k, d.m)));
            out = out.add(&acc);
        }
        out
    }

    pub fn to_json(&self) -> Result<Value> {
        let words = self.words()?;
        Ok(json!({
            "rank": self.dims.r,
            "terms": words
                .iter()
                .map(|(w, c)| json!({
                    "word": w.iter().map(|s| s.to_string()).collect::<Vec<_>>(),
                    "coef": c.to_json(),
                }))
                .collect::<Vec<_>>(),
        }))
    }

    pub fn from_json(v: &Value, k: usize, m: usize) -> Result<Self> {
        let r = v.get("rank").and_then(Value::as_u64).ok_or_else(|| Error::Malformed("graded operator: missing `rank`".into()))?;
        let dims = GradedDims::new(k, m, r as usize)?;
        let terms = v.get("terms").and_then(Value::as_array).ok_or_else(|| Error::Malformed("graded operator: missing `terms`".into()))?;
        let mut out = Self::zero(dims);
        for t in terms {
            let word = t
                .get("word")
                .and_then(Value::as_array)
                .ok_or_else(|| Error::Malformed("graded operator: missing `word`".into()))?
                .iter()
                .map(|s| s.as_str().ok_or_else(|| Error::Malformed("graded operator: symbol must be a string".into())).and_then(Symbol::parse))
                .collect::<Result<Vec<_>>>()?;
            let coef = GradedSection::from_json(t.get("coef").unwrap_or(&Value::Null), dims)?;
            out = out.add(&Self::from_word(&word, &coef)?);
        }
        Ok(out)
    }

    pub fn format(&self, chart: &Chart) -> Result<String> {
        let words = self.words()?;
        if words.is_empty() {
            return Ok("0".into());
        }
        Ok(words
            .iter()
            .map(|(w, c)| {
                let syms = w.iter().map(|s| s.to_string()).collect::<Vec<_>>().join(" ");
                if w.is_empty() {
                    format!("[{}]", c.format(chart))
                } else {
                    format!("[{}] {}", c.format(chart), syms)
                }
            })
            .collect::<Vec<_>>()
            .join(" + "))
    }
}

fn mul_keys(a: &Key, b: &Key) -> Option<(Key, i64)> {
    let s = merge_masks(a.odd, b.odd)?;
    Some((Key { t: a.t + b.t, odd: a.odd | b.odd, even: a.even.iter().zip(&b.even).map(|(x, y)| x + y).collect() }, s))
}

/// A function on the graded chart (coefficient of a word): `xi^A` enters as
/// `xt^A / t`.
fn coefficient_encoding(a: &GradedSection) -> GradedOperator {
    let d = a.dims;
    let mut out = GradedOperator::zero(d);
    for (w, f) in &a.terms {
        let mut key = Key::unit(d.r);
        key.odd = w.odd_mask(&d);
        key.t = -(w.bidegree().0 as i32);
        out.add_raw(key, f.clone());
    }
    out
}

fn decode_plain(d: &GradedDims, key: &Key, f: &ScalarFn, id: bool, out: &mut BTreeMap<Vec<Symbol>, GradedSection>) -> Result<()> {
    let w = GhostWord::from_odd_mask(key.odd & d.ghost_mask(), d);
    let mut word = Vec::new();
    for c in bits(key.odd >> (2 * d.r)) {
        if c < d.k {
            word.push(Symbol::DPh(c));
        } else if c < d.n() {
            word.push(Symbol::DY(c - d.k));
        } else {
            return Err(Error::Invariant("unexpected identity momentum in word decoding".into()));
        }
    }
    let mut pt = 0i32;
    for a in 0..d.r {
        for _ in 0..key.even[a] {
            word.push(Symbol::DXi(a));
        }
        pt += key.even[a] as i32;
    }
    for a in 0..d.r {
        for _ in 0..key.even[d.r + a] {
            word.push(Symbol::DXiStar(a));
        }
    }
    if id {
        word.push(Symbol::Id);
    }
    let n = word.len() as i32;
    let h = w.bidegree().0 as i32;
    if key.t + h - pt != 1 - n {
        return Err(Error::Invariant("inhomogeneous line-bundle weight in a graded operator".into()));
    }
    let e = out.entry(word).or_insert_with(|| GradedSection::zero(*d));
    e.add_term(w, f.clone());
    Ok(())
}

/// The graded Schouten-Jacobi bracket.
pub fn graded_sj_bracket(a: &GradedOperator, b: &GradedOperator) -> GradedOperator {
    a.bracket(b)
}

/// `op(l_1, .., l_n) = [[..[op, l_1], ..], l_n]`.
pub fn eval_graded(op: &GradedOperator, args: &[GradedSection]) -> Result<GradedSection> {
    match op.arity() {
        Some(n) if n == args.len() || op.is_zero() => {}
        Some(n) => return Err(Error::ArityMismatch { expected: n, got: args.len() }),
        None => return Err(Error::Malformed("evaluation of an operator of mixed arity".into())),
    }
    let mut acc = op.clone();
    for a in args {
        if a.dims != op.dims {
            return Err(Error::ChartMismatch(format!("{:?} vs {:?}", a.dims, op.dims)));
        }
        acc = acc.bracket(&GradedOperator::from_section(a));
    }
    acc.to_section()
}

/// The bracket of sections induced by a bi-derivation `op`, with the
/// suspension sign: `{l_1, l_2} = (-1)^{|l_1|} op(l_1, l_2)`, `|l_1|` the
/// shifted degree `ghosts - antighosts - 1`.
pub fn section_bracket(op: &GradedOperator, a: &GradedSection, b: &GradedSection) -> Result<GradedSection> {
    let mut out = GradedSection::zero(a.dims);
    for (deg, part) in a.degree_parts() {
        let v = eval_graded(op, &[part, b.clone()])?;
        out = out.add(&v.scale_int(parity_sign(deg - 1)));
    }
    Ok(out)
}

/// The tautological structure `G = D_A D^A`.
pub fn tautological_g(dims: GradedDims) -> GradedOperator {
    let mut out = GradedOperator::zero(dims);
    for a in 0..dims.r {
        let mut key = Key::unit(dims.r);
        key.even[a] = 1;
        key.even[dims.r + a] = 1;
        out.add_raw(key, ScalarFn::one(dims.k, dims.m));
    }
    out
}

/// `d_G = [G, -]`.
pub fn d_g(op: &GradedOperator) -> GradedOperator {
    tautological_g(op.dims).bracket(op)
}

/// Coefficients of a connection in the ghost bundle: `nabla_id xi^A =
/// Gamma^A_B xi^B` as `on_id[A][B]`, and `nabla_{D_i} xi^A = Gamma_{iB}^A
/// xi^B` as `on_coord[i][A][B]`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Connection {
    pub on_id: Vec<Vec<ScalarFn>>,
    pub on_coord: Vec<Vec<Vec<ScalarFn>>>,
}

impl Connection {
    pub fn trivial(dims: GradedDims) -> Self {
        let z = ScalarFn::zero(dims.k, dims.m);
        Self { on_id: vec![vec![z.clone(); dims.r]; dims.r], on_coord: vec![vec![vec![z; dims.r]; dims.r]; dims.n()] }
    }

    pub fn is_trivial(&self) -> bool {
        self.on_id.iter().flatten().all(ScalarFn::is_zero) && self.on_coord.iter().flatten().flatten().all(ScalarFn::is_zero)
    }

    fn check(&self, dims: GradedDims) -> Result<()> {
        let ok = self.on_id.len() == dims.r
            && self.on_id.iter().all(|row| row.len() == dims.r && row.iter().all(|f| f.dims() == (dims.k, dims.m)))
            && self.on_coord.len() == dims.n()
            && self.on_coord.iter().all(|m| m.len() == dims.r && m.iter().all(|row| row.len() == dims.r && row.iter().all(|f| f.dims() == (dims.k, dims.m))));
        if ok {
            Ok(())
        } else {
            Err(Error::Malformed("connection coefficients do not match the graded chart".into()))
        }
    }

    /// `Gamma^A_B xt^B pt_A - Gamma^B_A xi*_B ps^A`.
    fn correction(dims: GradedDims, gamma: &[Vec<ScalarFn>]) -> GradedOperator {
        let mut out = GradedOperator::zero(dims);
        for a in 0..dims.r {
            for b in 0..dims.r {
                let g = &gamma[a][b];
                if g.is_zero() {
                    continue;
                }
                let x = GradedOperator::odd_letter(dims, dims.xi(b), 0).mul(&GradedOperator::even_letter(dims, a, 0)).mul_fn(g);
                let y = GradedOperator::odd_letter(dims, dims.xs(a), 0).mul(&GradedOperator::even_letter(dims, dims.r + b, 0)).mul_fn(g);
                out = out.add(&x).sub(&y);
            }
        }
        out
    }
}

/// The first contraction data: from graded multi-derivations with `d_G` to
/// ungraded multi-derivations with zero differential.
#[derive(Clone, Debug)]
pub struct ContractionOne {
    dims: GradedDims,
    connection: Connection,
    forward_th: Vec<GradedOperator>,
    forward_tt: GradedOperator,
    backward_th: Vec<GradedOperator>,
    backward_tt: GradedOperator,
}

/// Builds `(p, i_nabla, H_nabla, weight)` for a connection.
pub fn contraction_one(dims: GradedDims, connection: Connection) -> Result<ContractionOne> {
    connection.check(dims)?;
    let mut forward_th = Vec::new();
    let mut backward_th = Vec::new();
    for c in 0..dims.n() {
        let base = GradedOperator::odd_letter(dims, dims.th(c), 0);
        let corr = Connection::correction(dims, &connection.on_coord[c]);
        forward_th.push(base.add(&corr));
        backward_th.push(base.sub(&corr));
    }
    let base = GradedOperator::odd_letter(dims, dims.tt(), 0);
    let corr = Connection::correction(dims, &connection.on_id).mul(&GradedOperator::t_power(dims, -1));
    Ok(ContractionOne {
        dims,
        connection,
        forward_tt: base.add(&corr),
        backward_tt: base.sub(&corr),
        forward_th,
        backward_th,
    })
}

impl ContractionOne {
    pub fn dims(&self) -> GradedDims {
        self.dims
    }

    pub fn connection(&self) -> &Connection {
        &self.connection
    }

    fn to_adapted(&self, op: &GradedOperator) -> GradedOperator {
        if self.connection.is_trivial() {
            return op.clone();
        }
        op.substitute_momenta(&self.backward_th, &self.backward_tt)
    }

    fn from_adapted(&self, op: &GradedOperator) -> GradedOperator {
        if self.connection.is_trivial() {
            return op.clone();
        }
        op.substitute_momenta(&self.forward_th, &self.forward_tt)
    }

    /// `i_nabla`: embeds an ungraded multi-derivation.
    pub fn i_nabla(&self, d: &MultiDerivation) -> Result<GradedOperator> {
        if d.dims() != (self.dims.k, self.dims.m) {
            return Err(Error::ChartMismatch(format!("{:?} vs {:?}", d.dims(), (self.dims.k, self.dims.m))));
        }
        Ok(self.from_adapted(&GradedOperator::from_multider(d, self.dims.r)?))
    }

    /// `p`: the bidegree-(0,0) restriction to ungraded sections, kept inside
    /// the graded operators through the trivial embedding.
    pub fn p(&self, op: &GradedOperator) -> GradedOperator {
        let d = self.dims;
        op.filter(|k| k.odd & d.ghost_mask() == 0 && k.even.iter().all(|&e| e == 0))
    }

    /// `p` read as ungraded multi-derivations by arity.
    pub fn p_multider(&self, op: &GradedOperator) -> Result<BTreeMap<usize, MultiDerivation>> {
        self.p(op).ungraded_parts()
    }

    /// The weight derivation.
    pub fn weight(&self, op: &GradedOperator) -> GradedOperator {
        let d = self.dims;
        let a = self.to_adapted(op);
        let mut out = GradedOperator::zero(d);
        for (k, f) in &a.terms {
            out.add_raw(k.clone(), f.scale_int(k.naive_weight(&d) as i64));
        }
        self.from_adapted(&out)
    }

    fn h_tilde_adapted(&self, a: &GradedOperator) -> GradedOperator {
        let d = self.dims;
        let mut out = GradedOperator::zero(d);
        for (key, f) in &a.terms {
            for i in 0..2 * d.r {
                let e = key.even[i];
                if e == 0 {
                    continue;
                }
                let mut rest = key.clone();
                rest.even[i] -= 1;
                let letter = if i < d.r {
                    GradedOperator::odd_letter(d, d.xs(i), 0)
                } else {
                    GradedOperator::odd_letter(d, d.xi(i - d.r), 0)
                };
                out = out.add(&letter.mul(&GradedOperator::single(d, rest, f.scale_int(e as i64))));
            }
        }
        out
    }

    /// `H~_nabla`: `D_A -> xi*_A mu`, `D^A -> xi^A`, zero on the rest.
    pub fn h_tilde(&self, op: &GradedOperator) -> GradedOperator {
        self.from_adapted(&self.h_tilde_adapted(&self.to_adapted(op)))
    }

    /// `H_nabla = -k^{-1} H~_nabla` on the weight-`k` part, zero on weight 0.
    pub fn h(&self, op: &GradedOperator) -> GradedOperator {
        let d = self.dims;
        let a = self.to_adapted(op);
        let mut by_weight: BTreeMap<u32, GradedOperator> = BTreeMap::new();
        for (k, f) in &a.terms {
            let w = k.naive_weight(&d);
            if w > 0 {
                by_weight.entry(w).or_insert_with(|| GradedOperator::zero(d)).add_raw(k.clone(), f.clone());
            }
        }
        let mut out = GradedOperator::zero(d);
        for (w, part) in by_weight {
            out = out.add(&self.h_tilde_adapted(&part).scale_ratio(-1, w as i64));
        }
        self.from_adapted(&out)
    }

    /// Checks that `i_nabla` is a bracket morphism on the frame `id, D_i`,
    /// which is equivalent to flatness.
    pub fn is_flat(&self) -> Result<bool> {
        let d = self.dims;
        let mut frame = vec![MultiDerivation::new(MultiVectorField::zero(d.k, d.m, 1), MultiVectorField::scalar(-ScalarFn::one(d.k, d.m)))?];
        for c in 0..d.n() {
            frame.push(MultiDerivation::derivation(MultiVectorField::vector(c, ScalarFn::one(d.k, d.m)), ScalarFn::zero(d.k, d.m))?);
        }
        for a in &frame {
            for b in &frame {
                let lhs = self.i_nabla(a)?.bracket(&self.i_nabla(b)?);
                let rhs = self.i_nabla(&a.sj_bracket(b))?;
                if lhs != rhs {
                    return Ok(false);
                }
            }
        }
        Ok(true)
    }
}

/// `Omega_E[s] = sum (y_a - g_a) xi^a`.
pub fn omega_e(s: &SectionOfNormalBundle) -> Result<GradedSection> {
    let (k, m) = s.dims();
    let dims = GradedDims::new(k, m, m)?;
    let mut out = GradedSection::zero(dims);
    for (a, g) in s.components().iter().enumerate() {
        out = out.add(&GradedSection::ghost(dims, a).mul_fn(&(&ScalarFn::fiber_var(k, m, a) - g)));
    }
    Ok(out)
}

/// The second contraction data attached to a section `s`: from graded
/// sections with `d[s]` to base ghost forms with zero differential.
#[derive(Clone, Debug)]
pub struct ContractionTwo {
    dims: GradedDims,
    s: SectionOfNormalBundle,
    omega: GradedSection,
    d_op: GradedOperator,
}

/// Builds `(wp[s], iota, h[s], d[s])`.
pub fn contraction_two(s: &SectionOfNormalBundle) -> Result<ContractionTwo> {
    let omega = omega_e(s)?;
    let dims = omega.dims;
    let d_op = tautological_g(dims).bracket(&GradedOperator::from_section(&omega));
    Ok(ContractionTwo { dims, s: s.clone(), omega, d_op })
}

impl ContractionTwo {
    pub fn dims(&self) -> GradedDims {
        self.dims
    }

    pub fn section(&self) -> &SectionOfNormalBundle {
        &self.s
    }

    pub fn omega(&self) -> &GradedSection {
        &self.omega
    }

    /// `d[s] = {Omega_E[s], -}_G` as an operator.
    pub fn d_operator(&self) -> &GradedOperator {
        &self.d_op
    }

    pub fn d(&self, l: &GradedSection) -> Result<GradedSection> {
        eval_graded(&self.d_op, &[l.clone()])
    }

    /// Restricts to the graph of `s` and drops antighost words.
    pub fn wp(&self, l: &GradedSection) -> Result<GradedSection> {
        l.filter(|w| w.antighosts == 0).substitute_fibers(self.s.components())
    }

    /// Pulls back a base ghost form.
    pub fn iota(&self, w: &GradedSection) -> Result<GradedSection> {
        if w.terms.iter().any(|(word, f)| word.antighosts != 0 || !f.is_base_only()) {
            return Err(Error::Precondition("iota takes fiber-constant ghost forms".into()));
        }
        Ok(w.clone())
    }

    /// `h[s] = int_0^1 j_t[s] dt`, evaluated exactly.
    pub fn h(&self, l: &GradedSection) -> Result<GradedSection> {
        let d = self.dims;
        let (k, m) = (d.k, d.m);
        let svar = ScalarFn::fiber_var(k, m + 1, m);
        let one = ScalarFn::one(k, m + 1);
        let assign: Vec<Option<ScalarFn>> = (0..m)
            .map(|a| {
                let y = ScalarFn::fiber_var(k, m + 1, a);
                let g = self.s.components()[a].embed(k, m + 1);
                Some(&(&svar * &y) + &(&(&one - &svar) * &g))
            })
            .collect();
        let mut out = GradedSection::zero(d);
        for (w, f) in &l.terms {
            let nb = w.bidegree().1 as u32;
            for c in 0..m {
                let df = f.partial_fiber(c);
                if df.is_zero() {
                    continue;
                }
                let moved = df.substitute_fiber(&assign, k, m + 1)?;
                let integral = (&moved * &svar.pow(nb)).integrate_unit_interval(m);
                let word = GradedSection { dims: d, terms: [(*w, -integral)].into_iter().collect() };
                out = out.add(&graded_mul(&GradedSection::antighost(d, c), &word));
            }
        }
        Ok(out)
    }

    /// A base ghost form as a leaf form, the ghost `xi^a` read as `eta^a`.
    pub fn to_leaf_form(&self, w: &GradedSection) -> Result<Vec<LeafForm>> {
        leaf_forms(w)
    }
}

/// Splits a fiber-constant ghost form into leaf forms by ghost degree.
pub fn leaf_forms(w: &GradedSection) -> Result<Vec<LeafForm>> {
    let d = w.dims;
    let mut out: Vec<LeafForm> = (0..=d.r).map(|deg| LeafForm::zero(d.k, d.m, deg)).collect();
    for (word, f) in &w.terms {
        if word.antighosts != 0 || !f.is_base_only() {
            return Err(Error::Precondition("not a fiber-constant ghost form".into()));
        }
        let idx = word.ghost_indices();
        out[idx.len()].add_term(&idx, f.clone());
    }
    Ok(out)
}

/// The ghost form of a leaf form, `eta^a` read as the ghost `xi^a`.
pub fn ghost_form_from_leaf(w: &LeafForm) -> Result<GradedSection> {
    let (k, m) = w.dims();
    let dims = GradedDims::new(k, m, m)?;
    let mut out = GradedSection::zero(dims);
    for (idx, f) in w.terms() {
        out = out.add(&GradedSection::monomial(dims, idx, &[], f.clone()));
    }
    Ok(out)
}
