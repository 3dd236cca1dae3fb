//! The L-infinity[1] algebra of the zero section: leafwise forms, the
//! multibrackets (by derived brackets and by restricted jets of `J`), the
//! Maurer-Cartan series, the Kuranishi map and formal prolongation.

use crate::error::{Error, Result};
use crate::geom::{injection_i, projection_p, SectionOfNormalBundle};
use crate::multider::{parity_sign, sort_sign, MultiDerivation};
use crate::ring::{format_fn, scalar_from_json, scalar_to_json, Chart, GaussianRational, ScalarFn, TorusIntegral};
use serde_json::{json, Value};
use std::collections::BTreeMap;

/// A section of `wedge^d N S` on the zero section, keyed by increasing
/// fiber-index tuples. With a leaf pairing, `eta^a` reads as `d phi_{leaf(a)}`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LeafForm {
    k: usize,
    m: usize,
    degree: usize,
    terms: BTreeMap<Vec<usize>, ScalarFn>,
}

impl LeafForm {
    pub fn zero(k: usize, m: usize, degree: usize) -> Self {
        Self { k, m, degree, terms: BTreeMap::new() }
    }

    pub fn function(f: ScalarFn) -> Self {
        let (k, m) = f.dims();
        let mut out = Self::zero(k, m, 0);
        out.add_term(&[], f);
        out
    }

    /// `f eta^{idx}` in the given (unsorted) order.
    pub fn monomial(idx: &[usize], f: ScalarFn) -> Self {
        let (k, m) = f.dims();
        let mut out = Self::zero(k, m, idx.len());
        out.add_term(idx, f);
        out
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.k, self.m)
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Vec<usize>, &ScalarFn)> {
        self.terms.iter()
    }

    pub fn coeff(&self, idx: &[usize]) -> ScalarFn {
        match sort_sign(idx) {
            None => ScalarFn::zero(self.k, self.m),
            Some((s, sorted)) => self.terms.get(&sorted).map(|f| f.scale_int(s)).unwrap_or_else(|| ScalarFn::zero(self.k, self.m)),
        }
    }

    pub fn add_term(&mut self, idx: &[usize], f: ScalarFn) {
        assert_eq!(idx.len(), self.degree, "leaf form degree mismatch");
        assert_eq!(f.dims(), self.dims(), "chart mismatch in leaf form");
        assert!(f.is_base_only(), "leaf form coefficients live on the zero section");
        assert!(idx.iter().all(|&a| a < self.m), "fiber index out of range");
        if f.is_zero() {
            return;
        }
        let Some((s, sorted)) = sort_sign(idx) else { return };
        let f = f.scale_int(s);
        let e = self.terms.entry(sorted.clone()).or_insert_with(|| ScalarFn::zero(f.k(), f.m()));
        *e = &*e + &f;
        if e.is_zero() {
            self.terms.remove(&sorted);
        }
    }

    pub fn add(&self, o: &Self) -> Self {
        assert_eq!(self.degree, o.degree, "adding leaf forms of different degree");
        let mut out = self.clone();
        for (i, f) in &o.terms {
            out.add_term(i, f.clone());
        }
        out
    }

    pub fn sub(&self, o: &Self) -> Self {
        self.add(&o.neg())
    }

    pub fn neg(&self) -> Self {
        self.map(|f| -f)
    }

    pub fn scale(&self, c: &GaussianRational) -> Self {
        self.map(|f| f.scale(c))
    }

    pub fn scale_ratio(&self, p: i64, q: i64) -> Self {
        self.map(|f| f.scale_ratio(p, q))
    }

    pub fn mul_fn(&self, g: &ScalarFn) -> Self {
        self.map(|f| f * g)
    }

    pub fn map(&self, op: impl Fn(&ScalarFn) -> ScalarFn) -> Self {
        let mut out = Self::zero(self.k, self.m, self.degree);
        for (i, f) in &self.terms {
            let g = op(f);
            if !g.is_zero() {
                out.terms.insert(i.clone(), g);
            }
        }
        out
    }

    pub fn wedge(&self, o: &Self) -> Self {
        let mut out = Self::zero(self.k, self.m, self.degree + o.degree);
        for (a, f) in &self.terms {
            for (b, g) in &o.terms {
                let mut idx = a.clone();
                idx.extend_from_slice(b);
                out.add_term(&idx, f * g);
            }
        }
        out
    }

    /// `{"degree": d, "terms": [{"idx": [...], "coef": <ScalarFn>}]}`
    pub fn to_json(&self) -> Value {
        let terms: Vec<Value> = self.terms.iter().map(|(i, f)| json!({"idx": i, "coef": scalar_to_json(f)})).collect();
        json!({"degree": self.degree, "terms": terms})
    }

    pub fn from_json(v: &Value, k: usize, m: usize) -> Result<Self> {
        let degree = v.get("degree").and_then(Value::as_u64).ok_or_else(|| Error::Malformed("missing `degree`".into()))? as usize;
        let mut out = Self::zero(k, m, degree);
        for t in v.get("terms").and_then(Value::as_array).ok_or_else(|| Error::Malformed("missing `terms`".into()))? {
            let idx: Vec<usize> = t
                .get("idx")
                .and_then(Value::as_array)
                .ok_or_else(|| Error::Malformed("missing `idx`".into()))?
                .iter()
                .map(|x| x.as_u64().map(|x| x as usize).ok_or_else(|| Error::Malformed("bad index".into())))
                .collect::<Result<_>>()?;
            if idx.len() != degree || idx.iter().any(|&a| a >= m) {
                return Err(Error::Malformed(format!("bad index tuple {idx:?}")));
            }
            let f = scalar_from_json(t.get("coef").ok_or_else(|| Error::Malformed("missing `coef`".into()))?, k, m)?;
            if !f.is_base_only() {
                return Err(Error::Malformed("leaf form coefficient depends on fiber coordinates".into()));
            }
            out.add_term(&idx, f);
        }
        Ok(out)
    }

    /// Text form; `eta^a` prints as `d<leaf>` when the chart pairs fibers with leaves.
    pub fn format(&self, chart: &Chart) -> String {
        if self.terms.is_empty() {
            return "0".into();
        }
        let name = |a: usize| match chart.leaf_of_fiber(a) {
            Some(j) => format!("d{}", chart.torus[j]),
            None => format!("eta_{}", chart.fiber[a]),
        };
        self.terms
            .iter()
            .map(|(idx, f)| {
                let coef = format_fn(f, chart);
                if idx.is_empty() {
                    coef
                } else {
                    let basis: Vec<String> = idx.iter().map(|&a| name(a)).collect();
                    format!("({coef})*{}", basis.join("^"))
                }
            })
            .collect::<Vec<_>>()
            .join(" + ")
    }
}

fn leaf_map(chart: &Chart) -> Result<Vec<usize>> {
    if !chart.has_leaf_pairing() {
        return Err(Error::Precondition("the chart does not pair fiber coordinates with leaf coordinates".into()));
    }
    Ok(chart.leaf_coords.clone())
}

/// Leafwise exterior derivative `d_F` through the fiber/leaf pairing.
pub fn leafwise_d(w: &LeafForm, chart: &Chart) -> Result<LeafForm> {
    let leaf = leaf_map(chart)?;
    let mut out = LeafForm::zero(w.k, w.m, w.degree + 1);
    for (idx, f) in &w.terms {
        for (a, &j) in leaf.iter().enumerate() {
            let mut full = vec![a];
            full.extend_from_slice(idx);
            out.add_term(&full, f.partial_torus(j));
        }
    }
    Ok(out)
}

/// The projector onto leaf-frequency-zero modes.
pub fn leaf_zero_mode(w: &LeafForm, chart: &Chart) -> LeafForm {
    w.map(|f| f.zero_mode(&chart.leaf_coords))
}

/// The Fourier homotopy `K(e^{i n.phi} alpha) = (i n_j)^{-1} i_{d_j} (e^{i n.phi} alpha)`,
/// `j` the first leaf with `n_j != 0`; zero on leaf-constant modes.
pub fn homotopy_k(w: &LeafForm, chart: &Chart) -> Result<LeafForm> {
    let leaf = leaf_map(chart)?;
    let (k, m) = w.dims();
    let mut out = LeafForm::zero(k, m, w.degree.saturating_sub(1));
    if w.degree == 0 {
        return Ok(out);
    }
    for (idx, f) in &w.terms {
        for (mono, c) in f.terms() {
            let Some(a) = (0..leaf.len()).find(|&a| mono.torus[leaf[a]] != 0) else { continue };
            let Some(pos) = idx.iter().position(|&x| x == a) else { continue };
            let n = mono.torus[leaf[a]];
            let coef = c.times_i_int(-1).div_int(n).scale_int(parity_sign(pos as i64));
            let mut rest = idx.clone();
            rest.remove(pos);
            out.add_term(&rest, ScalarFn::monomial(k, m, mono.clone(), coef));
        }
    }
    Ok(out)
}

/// Result of [`solve_df`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SolveOutcome {
    Exact(LeafForm),
    Obstructed(LeafForm),
}

/// Solves `d_F eta = omega` by the Fourier homotopy, or returns the
/// zero-mode obstruction.
pub fn solve_df(w: &LeafForm, chart: &Chart) -> Result<SolveOutcome> {
    if !leafwise_d(w, chart)?.is_zero() {
        return Err(Error::Precondition("the form is not d_F-closed".into()));
    }
    let z = leaf_zero_mode(w, chart);
    if w.degree > 0 && !z.is_zero() {
        return Ok(SolveOutcome::Obstructed(z));
    }
    Ok(SolveOutcome::Exact(homotopy_k(w, chart)?))
}

/// `P [[..[[J, I xi_1]], ..], I xi_k]]`.
pub fn derived_bracket(j: &MultiDerivation, args: &[LeafForm]) -> Result<LeafForm> {
    let mut acc = j.clone();
    for a in args {
        if a.dims() != j.dims() {
            return Err(Error::ChartMismatch("bracket argument on a different chart".into()));
        }
        acc = acc.try_sj_bracket(&injection_i(a))?;
    }
    Ok(projection_p(&acc))
}

/// A component of `J = J^{ab} nabla_a ^ nabla_b (x) mu + J^a nabla_a ^ id`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum Component {
    /// `J^{ab} = Lambda^{ab} / 2`, skew.
    Pair(usize, usize),
    /// `J^a = -Gamma^a`.
    Single(usize),
}

/// Restricted fiber jets `d_{a_1} .. d_{a_n} J^{..} |_{y=0}` of every
/// component, up to the fiber degree of `J`. The multibrackets on
/// functions and normal sections are evaluated from these by the
/// coordinate formulas.
#[derive(Clone, Debug)]
pub struct MultibracketTable {
    k: usize,
    m: usize,
    fiber_degree: usize,
    jets: BTreeMap<(Component, Vec<usize>), ScalarFn>,
}

#[derive(Clone, Debug)]
enum Operand {
    Base(ScalarFn),
    Fiber(usize),
}

/// `coef * [y_b] * D..(J^comp)`
#[derive(Clone, Debug)]
struct LinTerm {
    coef: ScalarFn,
    y: Option<usize>,
    comp: Component,
}

pub fn extract_multibrackets(j: &MultiDerivation) -> Result<MultibracketTable> {
    if j.arity() != 2 {
        return Err(Error::ArityMismatch { expected: 2, got: j.arity() });
    }
    if !j.is_jacobi() {
        return Err(Error::NotJacobi("the structure has a nonzero Jacobiator".into()));
    }
    Ok(MultibracketTable::from_structure(j))
}

fn multisets(m: usize, max: usize) -> Vec<Vec<usize>> {
    let mut out = vec![vec![]];
    let mut frontier = vec![vec![]];
    for _ in 0..max {
        let mut next = Vec::new();
        for ms in &frontier {
            let start = ms.last().copied().unwrap_or(0);
            for a in start..m {
                let mut v: Vec<usize> = ms.clone();
                v.push(a);
                next.push(v);
            }
        }
        out.extend(next.iter().cloned());
        frontier = next;
    }
    out
}

impl MultibracketTable {
    /// Builds the jet table without checking the Jacobi identity.
    pub fn from_structure(j: &MultiDerivation) -> Self {
        let (k, m) = j.dims();
        let n = k + m;
        let half = GaussianRational::from_ratio(1, 2);
        let mut raw: Vec<(Component, ScalarFn)> = Vec::new();
        for a in 0..n {
            for b in a + 1..n {
                let f = j.p().coeff(&[a, b]).scale(&half);
                if !f.is_zero() {
                    raw.push((Component::Pair(a, b), f));
                }
            }
            let g = -j.q().coeff(&[a]);
            if !g.is_zero() {
                raw.push((Component::Single(a), g));
            }
        }
        let fiber_degree = raw.iter().filter_map(|(_, f)| f.fiber_degree()).max().unwrap_or(0) as usize;
        let mut jets = BTreeMap::new();
        for ms in multisets(m, fiber_degree) {
            for (c, f) in &raw {
                let mut d = f.clone();
                for &a in &ms {
                    d = d.partial_fiber(a);
                }
                let d = d.restrict_zero_fibers();
                if !d.is_zero() {
                    jets.insert((*c, ms.clone()), d);
                }
            }
        }
        Self { k, m, fiber_degree, jets }
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.k, self.m)
    }

    pub fn fiber_degree(&self) -> usize {
        self.fiber_degree
    }

    /// Every `m_n` with `n` above this bound vanishes identically.
    pub fn order_bound(&self) -> usize {
        self.fiber_degree + 2
    }

    pub fn jets(&self) -> impl Iterator<Item = (&(Component, Vec<usize>), &ScalarFn)> {
        self.jets.iter()
    }

    fn jet(&self, c: Component, ms: &[usize]) -> ScalarFn {
        let (c, sign) = match c {
            Component::Pair(a, b) if a == b => return ScalarFn::zero(self.k, self.m),
            Component::Pair(a, b) if a > b => (Component::Pair(b, a), -1),
            other => (other, 1),
        };
        let mut key = ms.to_vec();
        key.sort_unstable();
        match self.jets.get(&(c, key)) {
            Some(f) => f.scale_int(sign),
            None => ScalarFn::zero(self.k, self.m),
        }
    }

    /// `m_n` vanishes on all generators when every jet it reads is zero:
    /// order `n-2` of `J^{ij}, J^i`, order `n-1` of `J^{ai}, J^a`, order `n` of `J^{ab}`.
    pub fn structurally_zero(&self, n: usize) -> bool {
        let k = self.k;
        self.jets.keys().all(|(c, ms)| {
            let fibers = match *c {
                Component::Pair(a, b) => (a >= k) as usize + (b >= k) as usize,
                Component::Single(a) => (a >= k) as usize,
            };
            ms.len() + 2 < n + fibers
        })
    }

    fn partial_operand(&self, u: &Operand, c: usize) -> Option<ScalarFn> {
        match u {
            Operand::Base(f) => {
                let d = f.partial(c);
                (!d.is_zero()).then_some(d)
            }
            Operand::Fiber(b) => (c == self.k + b).then(|| ScalarFn::one(self.k, self.m)),
        }
    }

    /// `{u, v} = 2 J^{ab} d_a u d_b v + J^a (v d_a u - u d_a v)` as a linear expression.
    fn bracket_expr(&self, u: &Operand, v: &Operand) -> Vec<LinTerm> {
        let n = self.k + self.m;
        let mut out = Vec::new();
        let du: Vec<Option<ScalarFn>> = (0..n).map(|c| self.partial_operand(u, c)).collect();
        let dv: Vec<Option<ScalarFn>> = (0..n).map(|c| self.partial_operand(v, c)).collect();
        for a in 0..n {
            let Some(da) = &du[a] else { continue };
            for b in 0..n {
                let Some(db) = &dv[b] else { continue };
                out.push(LinTerm { coef: (da * db).scale_int(2), y: None, comp: Component::Pair(a, b) });
            }
        }
        let times = |f: &ScalarFn, w: &Operand, sign: i64, comp: Component| match w {
            Operand::Base(g) => LinTerm { coef: (f * g).scale_int(sign), y: None, comp },
            Operand::Fiber(b) => LinTerm { coef: f.scale_int(sign), y: Some(*b), comp },
        };
        for a in 0..n {
            if let Some(da) = &du[a] {
                out.push(times(da, v, 1, Component::Single(a)));
            }
            if let Some(da) = &dv[a] {
                out.push(times(da, u, -1, Component::Single(a)));
            }
        }
        out
    }

    /// `D_{s_1} .. D_{s_r} (J^comp) |_S`.
    fn d_jet(&self, comp: Component, secs: &[&[ScalarFn]]) -> ScalarFn {
        let r = secs.len();
        let mut out = ScalarFn::zero(self.k, self.m);
        if r > self.fiber_degree {
            return out;
        }
        let mut choice = vec![0usize; r];
        loop {
            let mut coef = ScalarFn::one(self.k, self.m);
            for (i, &a) in choice.iter().enumerate() {
                coef = &coef * &secs[i][a];
                if coef.is_zero() {
                    break;
                }
            }
            if !coef.is_zero() {
                let j = self.jet(comp, &choice);
                if !j.is_zero() {
                    out = &out + &(&coef * &j);
                }
            }
            let mut i = 0;
            loop {
                if i == r {
                    return out;
                }
                choice[i] += 1;
                if choice[i] < self.m {
                    break;
                }
                choice[i] = 0;
                i += 1;
            }
        }
    }

    /// `D_{s_1} .. D_{s_r} (expr) |_S`, using `D_s y_b = g_b` and `y_b|_S = 0`.
    fn d_eval(&self, expr: &[LinTerm], secs: &[&[ScalarFn]]) -> ScalarFn {
        let mut out = ScalarFn::zero(self.k, self.m);
        for t in expr {
            match t.y {
                None => out = &out + &(&t.coef * &self.d_jet(t.comp, secs)),
                Some(b) => {
                    for j in 0..secs.len() {
                        if secs[j][b].is_zero() {
                            continue;
                        }
                        let rest: Vec<&[ScalarFn]> = secs.iter().enumerate().filter(|(i, _)| *i != j).map(|(_, s)| *s).collect();
                        out = &out + &(&(&t.coef * &secs[j][b]) * &self.d_jet(t.comp, &rest));
                    }
                }
            }
        }
        out
    }

    fn omit<'s>(secs: &[&'s [ScalarFn]], skip: &[usize]) -> Vec<&'s [ScalarFn]> {
        secs.iter().enumerate().filter(|(i, _)| !skip.contains(i)).map(|(_, s)| *s).collect()
    }

    /// `m_n` on functions and normal sections, by the coordinate formulas.
    /// Higher-degree arguments are rejected.
    pub fn eval(&self, args: &[LeafForm]) -> Result<LeafForm> {
        let (k, m) = (self.k, self.m);
        if args.is_empty() {
            return Err(Error::ArityMismatch { expected: 1, got: 0 });
        }
        let mut funcs = Vec::new();
        let mut secs_owned: Vec<Vec<ScalarFn>> = Vec::new();
        for a in args {
            if a.dims() != (k, m) {
                return Err(Error::ChartMismatch("bracket argument on a different chart".into()));
            }
            match a.degree {
                0 => funcs.push(a.coeff(&[])),
                1 => secs_owned.push((0..m).map(|b| a.coeff(&[b])).collect()),
                d => {
                    return Err(Error::Malformed(format!(
                        "the coordinate formulas take functions and sections, got a degree-{d} form"
                    )))
                }
            }
        }
        let secs: Vec<&[ScalarFn]> = secs_owned.iter().map(|v| v.as_slice()).collect();
        let ns = secs.len() as i64;
        match funcs.len() {
            2 => {
                let kk = ns + 1;
                let e = self.bracket_expr(&Operand::Base(funcs[0].clone()), &Operand::Base(funcs[1].clone()));
                Ok(LeafForm::function(self.d_eval(&e, &secs).scale_int(parity_sign(kk))))
            }
            1 => {
                let kk = ns;
                let lam = Operand::Base(funcs[0].clone());
                let mut out = LeafForm::zero(k, m, 1);
                for b in 0..m {
                    let mut v = self.d_eval(&self.bracket_expr(&lam, &Operand::Fiber(b)), &secs);
                    for i in 0..secs.len() {
                        let e = self.bracket_expr(&lam, &Operand::Base(secs[i][b].clone()));
                        v = &v - &self.d_eval(&e, &Self::omit(&secs, &[i]));
                    }
                    out.add_term(&[b], v.scale_int(-parity_sign(kk)));
                }
                Ok(out)
            }
            0 => {
                let kk = ns - 1;
                let mut out = LeafForm::zero(k, m, 2);
                for b in 0..m {
                    for c in b + 1..m {
                        let mut v = self.d_eval(&self.bracket_expr(&Operand::Fiber(b), &Operand::Fiber(c)), &secs);
                        for i in 0..secs.len() {
                            for j in i + 1..secs.len() {
                                let rest = Self::omit(&secs, &[i, j]);
                                let e1 = self.bracket_expr(&Operand::Base(secs[i][b].clone()), &Operand::Base(secs[j][c].clone()));
                                let e2 = self.bracket_expr(&Operand::Base(secs[j][b].clone()), &Operand::Base(secs[i][c].clone()));
                                v = &v + &self.d_eval(&e1, &rest);
                                v = &v + &self.d_eval(&e2, &rest);
                            }
                        }
                        for i in 0..secs.len() {
                            let rest = Self::omit(&secs, &[i]);
                            let e1 = self.bracket_expr(&Operand::Base(secs[i][b].clone()), &Operand::Fiber(c));
                            let e2 = self.bracket_expr(&Operand::Fiber(b), &Operand::Base(secs[i][c].clone()));
                            v = &v - &self.d_eval(&e1, &rest);
                            v = &v - &self.d_eval(&e2, &rest);
                        }
                        out.add_term(&[b, c], v.scale_int(-parity_sign(kk)));
                    }
                }
                Ok(out)
            }
            _ => Ok(LeafForm::zero(k, m, 0)),
        }
    }
}

/// One order of [`LInfinity::prolong_formal`].
#[derive(Clone, Debug)]
pub struct OrderReport {
    pub order_k: usize,
    pub rhs: LeafForm,
    pub obstruction_zero_mode: LeafForm,
    pub two_pi_power: u32,
    pub solved: bool,
}

/// Outcome of a formal prolongation.
#[derive(Clone, Debug)]
pub struct Prolongation {
    /// `s_1, s_2, ...` up to the last solved order.
    pub coefficients: Vec<SectionOfNormalBundle>,
    pub reports: Vec<OrderReport>,
    /// First order whose right-hand side has a nonzero class.
    pub obstructed_at: Option<usize>,
}

/// Output of [`LInfinity::kuranishi`].
#[derive(Clone, Debug)]
pub struct KuranishiReport {
    /// `m_2(s, s)`
    pub class: LeafForm,
    /// `m_2(s, s) / 2`, the right-hand side of the second-order equation.
    pub density: LeafForm,
    /// Leaf-torus integral of the density, one per component.
    pub zero_mode: LeafForm,
    pub two_pi_power: u32,
}

impl KuranishiReport {
    pub fn obstructed(&self) -> bool {
        !self.zero_mode.is_zero()
    }

    pub fn integrals(&self) -> Vec<(Vec<usize>, TorusIntegral)> {
        self.zero_mode
            .terms()
            .map(|(i, f)| (i.clone(), TorusIntegral { value: f.clone(), two_pi_power: self.two_pi_power }))
            .collect()
    }
}

/// An element of the extended algebra: a multi-derivation together with a leaf form.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ExtendedElement {
    pub der: Option<MultiDerivation>,
    pub form: Option<LeafForm>,
}

/// The L-infinity[1] algebra of the zero section of a chart.
#[derive(Clone, Debug)]
pub struct LInfinity {
    pub chart: Chart,
    pub j: MultiDerivation,
    pub table: MultibracketTable,
}

fn factorial(n: usize) -> i64 {
    (1..=n as i64).product()
}

/// All ordered tuples of positive integers summing to `total` with `parts` entries.
fn compositions(total: usize, parts: usize) -> Vec<Vec<usize>> {
    if parts == 0 {
        return if total == 0 { vec![vec![]] } else { vec![] };
    }
    let mut out = Vec::new();
    for first in 1..=total.saturating_sub(parts - 1) {
        for mut rest in compositions(total - first, parts - 1) {
            rest.insert(0, first);
            out.push(rest);
        }
    }
    out
}

impl LInfinity {
    pub fn new(chart: Chart, j: MultiDerivation) -> Result<Self> {
        if j.dims() != chart.dims() {
            return Err(Error::ChartMismatch("structure and chart differ".into()));
        }
        let table = extract_multibrackets(&j)?;
        if !projection_p(&j).is_zero() {
            return Err(Error::Precondition("the zero section is not coisotropic".into()));
        }
        Ok(Self { chart, j, table })
    }

    pub fn dims(&self) -> (usize, usize) {
        self.chart.dims()
    }

    /// `m_n(args)`: by the jet table on functions and sections, by derived
    /// brackets otherwise.
    pub fn bracket(&self, args: &[LeafForm]) -> Result<LeafForm> {
        if args.iter().all(|a| a.degree() <= 1) {
            self.table.eval(args)
        } else {
            derived_bracket(&self.j, args)
        }
    }

    pub fn m1(&self, w: &LeafForm) -> Result<LeafForm> {
        self.bracket(std::slice::from_ref(w))
    }

    /// `MC(-s) = sum_k m_k(-s, .., -s) / k!`
    pub fn mc_series(&self, s: &SectionOfNormalBundle) -> Result<LeafForm> {
        let (k, m) = self.dims();
        let ms = s.neg().to_leaf_form();
        let mut out = LeafForm::zero(k, m, 2);
        for n in 1..=self.table.order_bound() {
            let args = vec![ms.clone(); n];
            out = out.add(&self.bracket(&args)?.scale_ratio(1, factorial(n)));
        }
        Ok(out)
    }

    /// `delta_lambda MC(-s) = sum_k m_{k+1}(-s, .., -s, lambda) / k!`
    pub fn delta_mc(&self, s: &SectionOfNormalBundle, lam: &ScalarFn) -> Result<LeafForm> {
        if !lam.is_base_only() {
            return Err(Error::Precondition("lambda must live on the zero section".into()));
        }
        let (k, m) = self.dims();
        let ms = s.neg().to_leaf_form();
        let mut out = LeafForm::zero(k, m, 1);
        for n in 0..self.table.order_bound() {
            let mut args = vec![ms.clone(); n];
            args.push(LeafForm::function(lam.clone()));
            out = out.add(&self.bracket(&args)?.scale_ratio(1, factorial(n)));
        }
        Ok(out)
    }

    pub fn kuranishi(&self, s: &SectionOfNormalBundle) -> Result<KuranishiReport> {
        let sf = s.to_leaf_form();
        if !self.m1(&sf)?.is_zero() {
            return Err(Error::Precondition("m_1 s != 0: not an infinitesimal deformation".into()));
        }
        let class = self.bracket(&[sf.clone(), sf])?;
        let density = class.scale_ratio(1, 2);
        let zero_mode = leaf_zero_mode(&density, &self.chart);
        Ok(KuranishiReport { class, density, zero_mode, two_pi_power: self.chart.leaf_coords.len() as u32 })
    }

    /// Solves the order-by-order Maurer-Cartan hierarchy
    /// `m_1 s_n = sum_{h>=2} (-1)^h / h! sum m_h(s_{i_1}, .., s_{i_h})`.
    pub fn prolong_formal(&self, s1: &SectionOfNormalBundle, order: usize) -> Result<Prolongation> {
        let (k, m) = self.dims();
        let first = s1.to_leaf_form();
        if !self.m1(&first)?.is_zero() {
            return Err(Error::Precondition("m_1 s_1 != 0: not an infinitesimal deformation".into()));
        }
        let mut sols = vec![first];
        let mut reports = Vec::new();
        let power = self.chart.leaf_coords.len() as u32;
        for n in 2..=order {
            let mut rhs = LeafForm::zero(k, m, 2);
            for h in 2..=n.min(self.table.order_bound()) {
                let mut sum = LeafForm::zero(k, m, 2);
                for comp in compositions(n, h) {
                    let args: Vec<LeafForm> = comp.iter().map(|&i| sols[i - 1].clone()).collect();
                    sum = sum.add(&self.bracket(&args)?);
                }
                rhs = rhs.add(&sum.scale_ratio(parity_sign(h as i64), factorial(h)));
            }
            let zero_mode = leaf_zero_mode(&rhs, &self.chart);
            match solve_df(&rhs, &self.chart)? {
                SolveOutcome::Exact(eta) => {
                    reports.push(OrderReport { order_k: n, rhs, obstruction_zero_mode: zero_mode, two_pi_power: power, solved: true });
                    sols.push(eta);
                }
                SolveOutcome::Obstructed(z) => {
                    reports.push(OrderReport { order_k: n, rhs, obstruction_zero_mode: z, two_pi_power: power, solved: false });
                    let coefficients = sols.iter().map(SectionOfNormalBundle::from_leaf_form).collect::<Result<_>>()?;
                    return Ok(Prolongation { coefficients, reports, obstructed_at: Some(n) });
                }
            }
        }
        let coefficients = sols.iter().map(SectionOfNormalBundle::from_leaf_form).collect::<Result<_>>()?;
        Ok(Prolongation { coefficients, reports, obstructed_at: None })
    }

    /// The extended brackets `n_k` on elements of `Der L [1] (+) Omega`.
    pub fn extended_bracket(&self, args: &[ExtendedElement]) -> Result<ExtendedElement> {
        // Split each argument into its two components and expand multilinearly.
        let n = args.len();
        let mut der_out: Option<MultiDerivation> = None;
        let mut form_out: Option<LeafForm> = None;
        for mask in 0u32..(1 << n) {
            let ders: Vec<&MultiDerivation> = (0..n).filter(|i| mask & (1 << i) != 0).filter_map(|i| args[i].der.as_ref()).collect();
            let forms: Vec<&LeafForm> = (0..n).filter(|i| mask & (1 << i) == 0).filter_map(|i| args[i].form.as_ref()).collect();
            if ders.len() + forms.len() != n {
                continue;
            }
            // graded-symmetric reordering: derivations first; all forms in the
            // slots here have the parity fixed by their degree.
            let mut sign = 1i64;
            let mut seen_forms_deg = 0i64;
            for i in 0..n {
                if mask & (1 << i) != 0 {
                    let d = args[i].der.as_ref().unwrap().arity() as i64 - 1;
                    sign *= parity_sign(d * seen_forms_deg);
                } else {
                    seen_forms_deg += args[i].form.as_ref().unwrap().degree() as i64 - 1;
                }
            }
            match ders.len() {
                0 => {
                    let v = self.bracket(&forms.into_iter().cloned().collect::<Vec<_>>())?;
                    let v = if sign < 0 { v.neg() } else { v };
                    form_out = Some(match form_out { Some(f) => f.add(&v), None => v });
                }
                1 if n == 1 => {
                    let d = ders[0];
                    let bracket = self.j.try_sj_bracket(d)?.neg();
                    der_out = Some(match der_out { Some(x) => x.add(&bracket), None => bracket });
                    let p = projection_p(d);
                    form_out = Some(match form_out { Some(f) => f.add(&p), None => p });
                }
                1 => {
                    let v = derived_bracket(ders[0], &forms.into_iter().cloned().collect::<Vec<_>>())?;
                    let v = if sign < 0 { v.neg() } else { v };
                    form_out = Some(match form_out { Some(f) => f.add(&v), None => v });
                }
                2 if n == 2 => {
                    let v = ders[0].try_sj_bracket(ders[1])?.scale_int(parity_sign(ders[0].arity() as i64 - 1) * sign);
                    der_out = Some(match der_out { Some(x) => x.add(&v), None => v });
                }
                _ => {}
            }
        }
        Ok(ExtendedElement { der: der_out, form: form_out })
    }

    /// `n_1(D, -s) = (-[[J, D]], P D - m_1 s)`.
    pub fn extended_n1(&self, d: &MultiDerivation, s: &SectionOfNormalBundle) -> Result<(MultiDerivation, LeafForm)> {
        let x = self.extended_bracket(&[ExtendedElement { der: Some(d.clone()), form: Some(s.neg().to_leaf_form()) }])?;
        let (k, m) = self.dims();
        Ok((
            x.der.unwrap_or_else(|| MultiDerivation::zero(k, m, d.arity() + 1)),
            x.form.unwrap_or_else(|| LeafForm::zero(k, m, 2)),
        ))
    }

    /// `sum_k n_k((D, -s), .., (D, -s)) / k!`, the extended Maurer-Cartan residual.
    pub fn extended_mc(&self, d: &MultiDerivation, s: &SectionOfNormalBundle) -> Result<(MultiDerivation, LeafForm)> {
        let (k, m) = self.dims();
        let x = ExtendedElement { der: Some(d.clone()), form: Some(s.neg().to_leaf_form()) };
        let mut der = MultiDerivation::zero(k, m, 3);
        let mut form = LeafForm::zero(k, m, 2);
        let bound = self.table.order_bound().max(d.p().terms().filter_map(|(_, f)| f.fiber_degree()).max().unwrap_or(0) as usize + 3);
        for n in 1..=bound {
            let r = self.extended_bracket(&vec![x.clone(); n])?;
            if let Some(v) = r.der {
                der = der.add(&v.map(|f| f.scale_ratio(1, factorial(n))));
            }
            if let Some(v) = r.form {
                form = form.add(&v.scale_ratio(1, factorial(n)));
            }
        }
        Ok((der, form))
    }

    /// Closed form `(-[[J + D, J + D]] / 2, P(exp L_{I(s)} (J + D)))` of [`Self::extended_mc`].
    pub fn extended_mc_closed(&self, d: &MultiDerivation, s: &SectionOfNormalBundle) -> Result<(MultiDerivation, LeafForm)> {
        let (k, m) = self.dims();
        let jd = self.j.add(d);
        let der = jd.sj_bracket(&jd).map(|f| f.scale_ratio(-1, 2));
        let lift = injection_i(&s.neg().to_leaf_form());
        let mut term = jd;
        let mut form = LeafForm::zero(k, m, 2);
        let mut n = 0usize;
        loop {
            let p = projection_p(&term);
            form = form.add(&p.scale_ratio(1, factorial(n)));
            // L_{I(s)} X = [[I(s), X]] = [[X, I(-s)]]
            let next = term.try_sj_bracket(&lift)?;
            if next.is_zero() || n > 16 {
                break;
            }
            term = next;
            n += 1;
        }
        Ok((der, form))
    }
}
