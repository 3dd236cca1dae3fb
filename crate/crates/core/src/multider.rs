//! Multivector fields, multi-derivations of the trivial line bundle and
//! their Schouten brackets.
//!
//! A multi-derivation of arity `n` is stored as a pair `(P, Q)` with `P` an
//! `n`-vector and `Q` an `(n-1)`-vector, standing for `P - Q ^ id`. Sections
//! are arity-0 multi-derivations with `P = lambda` and `Q = 0`.

use crate::error::{Error, Result};
use crate::ring::{scalar_from_json, scalar_to_json, ScalarFn};
use serde_json::{json, Value};
use std::collections::BTreeMap;

pub(crate) fn parity_sign(e: i64) -> i64 {
    if e.rem_euclid(2) == 0 {
        1
    } else {
        -1
    }
}

/// Sign of sorting the concatenation of two increasing index lists, or
/// `None` if they share an index.
pub(crate) fn merge_sign(a: &[usize], b: &[usize]) -> Option<(i64, Vec<usize>)> {
    let mut out = Vec::with_capacity(a.len() + b.len());
    let (mut i, mut j) = (0, 0);
    let mut inversions = 0usize;
    while i < a.len() && j < b.len() {
        if a[i] == b[j] {
            return None;
        }
        if a[i] < b[j] {
            out.push(a[i]);
            i += 1;
        } else {
            out.push(b[j]);
            inversions += a.len() - i;
            j += 1;
        }
    }
    out.extend_from_slice(&a[i..]);
    out.extend_from_slice(&b[j..]);
    Some((if inversions % 2 == 0 { 1 } else { -1 }, out))
}

/// Sorts an index list, returning the permutation sign, or `None` on a repeat.
pub(crate) fn sort_sign(idx: &[usize]) -> Option<(i64, Vec<usize>)> {
    let mut v = idx.to_vec();
    let mut sign = 1;
    for i in 0..v.len() {
        for j in 0..v.len() - 1 - i {
            if v[j] == v[j + 1] {
                return None;
            }
            if v[j] > v[j + 1] {
                v.swap(j, j + 1);
                sign = -sign;
            }
        }
    }
    if v.windows(2).any(|w| w[0] == w[1]) {
        return None;
    }
    Some((sign, v))
}

/// A multivector field `sum f_I d_I` over a chart of dimensions `(k, m)`.
/// Coordinate indices put the torus first, then the fiber.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MultiVectorField {
    k: usize,
    m: usize,
    degree: usize,
    terms: BTreeMap<Vec<usize>, ScalarFn>,
}

impl MultiVectorField {
    pub fn zero(k: usize, m: usize, degree: usize) -> Self {
        Self { k, m, degree, terms: BTreeMap::new() }
    }

    pub fn scalar(f: ScalarFn) -> Self {
        let (k, m) = f.dims();
        let mut out = Self::zero(k, m, 0);
        out.add_term(&[], f);
        out
    }

    /// `f d_c`
    pub fn vector(c: usize, f: ScalarFn) -> Self {
        let (k, m) = f.dims();
        let mut out = Self::zero(k, m, 1);
        out.add_term(&[c], f);
        out
    }

    /// `f d_{idx[0]} ^ ... ^ d_{idx[d-1]}` in the given (unsorted) order.
    pub fn monomial(idx: &[usize], f: ScalarFn) -> Self {
        let (k, m) = f.dims();
        let mut out = Self::zero(k, m, idx.len());
        out.add_term(idx, f);
        out
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.k, self.m)
    }

    pub fn dim(&self) -> usize {
        self.k + self.m
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
            Some((s, sorted)) => match self.terms.get(&sorted) {
                Some(f) => f.scale_int(s),
                None => ScalarFn::zero(self.k, self.m),
            },
        }
    }

    pub fn add_term(&mut self, idx: &[usize], f: ScalarFn) {
        assert_eq!(idx.len(), self.degree, "multivector degree mismatch");
        assert_eq!(f.dims(), self.dims(), "chart mismatch in multivector");
        assert!(idx.iter().all(|&c| c < self.dim()), "coordinate index out of range");
        if f.is_zero() {
            return;
        }
        let Some((s, sorted)) = sort_sign(idx) else { return };
        let f = if s < 0 { -&f } else { f };
        let entry = self.terms.entry(sorted.clone()).or_insert_with(|| ScalarFn::zero(f.k(), f.m()));
        *entry = &*entry + &f;
        if entry.is_zero() {
            self.terms.remove(&sorted);
        }
    }

    fn check(&self, o: &Self) -> Result<()> {
        if self.dims() != o.dims() {
            return Err(Error::ChartMismatch(format!("{:?} vs {:?}", self.dims(), o.dims())));
        }
        Ok(())
    }

    pub fn add(&self, o: &Self) -> Self {
        assert_eq!(self.degree, o.degree, "adding multivectors of different degree");
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

    pub fn scale(&self, f: &ScalarFn) -> Self {
        self.map(|g| g * f)
    }

    pub fn scale_int(&self, n: i64) -> Self {
        self.map(|g| g.scale_int(n))
    }

    /// Applies `op` to every coefficient, dropping zeros.
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
        assert_eq!(self.dims(), o.dims(), "chart mismatch in wedge");
        let mut out = Self::zero(self.k, self.m, self.degree + o.degree);
        for (a, f) in &self.terms {
            for (b, g) in &o.terms {
                if let Some((s, idx)) = merge_sign(a, b) {
                    out.add_term(&idx, (f * g).scale_int(s));
                }
            }
        }
        out
    }

    /// Schouten-Nijenhuis bracket, `deg = |a| + |b| - 1`. A bracket with a
    /// degree-0 argument that has no room to drop a degree is zero.
    pub fn sn_bracket(&self, o: &Self) -> Self {
        self.try_sn_bracket(o).expect("chart mismatch in Schouten bracket")
    }

    pub fn try_sn_bracket(&self, o: &Self) -> Result<Self> {
        self.check(o)?;
        let (p, q) = (self.degree as i64, o.degree as i64);
        if p + q == 0 {
            return Ok(Self::zero(self.k, self.m, 0));
        }
        let mut out = Self::zero(self.k, self.m, (p + q - 1) as usize);
        let swap = -parity_sign((p - 1) * (q - 1));
        for (lhs, rhs, sgn) in [(self, o, 1i64), (o, self, swap)] {
            let dl = lhs.degree as i64;
            for (idx, f) in &lhs.terms {
                for (pos, &c) in idx.iter().enumerate() {
                    let s = sgn * parity_sign(dl - 1 - pos as i64);
                    let mut rest = idx.clone();
                    rest.remove(pos);
                    for (jdx, g) in &rhs.terms {
                        let dg = g.partial(c);
                        if dg.is_zero() {
                            continue;
                        }
                        if let Some((ms, merged)) = merge_sign(&rest, jdx) {
                            out.add_term(&merged, (f * &dg).scale_int(s * ms));
                        }
                    }
                }
            }
        }
        Ok(out)
    }

    /// `X(f)` for a vector field.
    pub fn apply(&self, f: &ScalarFn) -> ScalarFn {
        assert_eq!(self.degree, 1, "apply needs a vector field");
        let mut out = ScalarFn::zero(self.k, self.m);
        for (idx, g) in &self.terms {
            out = &out + &(g * &f.partial(idx[0]));
        }
        out
    }

    /// `P(df_1, ..., df_d) = sum_I P^I det(d_{I_a} f_b)`.
    pub fn eval_differentials(&self, fs: &[ScalarFn]) -> ScalarFn {
        assert_eq!(fs.len(), self.degree, "wrong number of differentials");
        let mut out = ScalarFn::zero(self.k, self.m);
        for (idx, g) in &self.terms {
            let mat: Vec<Vec<ScalarFn>> = idx.iter().map(|&c| fs.iter().map(|f| f.partial(c)).collect()).collect();
            out = &out + &(g * &det(&mat, self.k, self.m));
        }
        out
    }

    /// Contraction with a 1-form on the first slot: `(i_alpha P)(...) = P(alpha, ...)`.
    pub fn contract_first(&self, alpha: &[ScalarFn]) -> Self {
        assert!(self.degree >= 1);
        let mut out = Self::zero(self.k, self.m, self.degree - 1);
        for (idx, g) in &self.terms {
            for (pos, &c) in idx.iter().enumerate() {
                if alpha[c].is_zero() {
                    continue;
                }
                let mut rest = idx.clone();
                rest.remove(pos);
                out.add_term(&rest, (g * &alpha[c]).scale_int(parity_sign(pos as i64)));
            }
        }
        out
    }

    pub fn to_json(&self) -> Value {
        Value::Array(
            self.terms
                .iter()
                .map(|(i, f)| json!({"idx": i, "coef": scalar_to_json(f)}))
                .collect(),
        )
    }

    pub fn from_json(v: &Value, k: usize, m: usize, degree: usize) -> Result<Self> {
        let arr = v.as_array().ok_or_else(|| Error::Malformed("expected multivector term list".into()))?;
        let mut out = Self::zero(k, m, degree);
        for t in arr {
            let idx: Vec<usize> = t
                .get("idx")
                .and_then(Value::as_array)
                .ok_or_else(|| Error::Malformed("missing `idx`".into()))?
                .iter()
                .map(|x| x.as_u64().map(|x| x as usize).ok_or_else(|| Error::Malformed("bad index".into())))
                .collect::<Result<_>>()?;
            if idx.len() != degree || idx.iter().any(|&c| c >= k + m) {
                return Err(Error::Malformed(format!("bad index tuple {idx:?}")));
            }
            let coef = scalar_from_json(t.get("coef").ok_or_else(|| Error::Malformed("missing `coef`".into()))?, k, m)?;
            out.add_term(&idx, coef);
        }
        Ok(out)
    }
}

/// Determinant by cofactor expansion; matrices here are at most a few rows.
pub(crate) fn det(mat: &[Vec<ScalarFn>], k: usize, m: usize) -> ScalarFn {
    match mat.len() {
        0 => ScalarFn::one(k, m),
        1 => mat[0][0].clone(),
        n => {
            let mut out = ScalarFn::zero(k, m);
            for col in 0..n {
                if mat[0][col].is_zero() {
                    continue;
                }
                let minor: Vec<Vec<ScalarFn>> = mat[1..]
                    .iter()
                    .map(|row| row.iter().enumerate().filter(|(c, _)| *c != col).map(|(_, x)| x.clone()).collect())
                    .collect();
                let term = &mat[0][col] * &det(&minor, k, m);
                out = if col % 2 == 0 { &out + &term } else { &out - &term };
            }
            out
        }
    }
}

/// A first-order skew multi-differential operator `P - Q ^ id` of a given arity.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MultiDerivation {
    arity: usize,
    p: MultiVectorField,
    q: MultiVectorField,
}

/// Output of [`MultiDerivation::pair_dictionary`].
#[derive(Clone, Debug)]
pub struct JacobiPairReport {
    pub lambda: MultiVectorField,
    pub gamma: MultiVectorField,
    pub lie_gamma_lambda_zero: bool,
    pub lambda_lambda_plus_gamma_lambda_zero: bool,
}

impl JacobiPairReport {
    pub fn valid(&self) -> bool {
        self.lie_gamma_lambda_zero && self.lambda_lambda_plus_gamma_lambda_zero
    }
}

impl MultiDerivation {
    pub fn new(p: MultiVectorField, q: MultiVectorField) -> Result<Self> {
        p.check(&q)?;
        let arity = p.degree;
        let expected_q = arity.saturating_sub(1);
        if q.degree != expected_q || (arity == 0 && !q.is_zero()) {
            return Err(Error::Malformed(format!(
                "q-part of degree {} does not fit a p-part of degree {}",
                q.degree, p.degree
            )));
        }
        Ok(Self { arity, p, q })
    }

    pub fn zero(k: usize, m: usize, arity: usize) -> Self {
        Self {
            arity,
            p: MultiVectorField::zero(k, m, arity),
            q: MultiVectorField::zero(k, m, arity.saturating_sub(1)),
        }
    }

    pub fn section(f: ScalarFn) -> Self {
        let (k, m) = f.dims();
        Self { arity: 0, p: MultiVectorField::scalar(f), q: MultiVectorField::zero(k, m, 0) }
    }

    /// The arity-2 operator `Lambda - Gamma ^ id`.
    pub fn jacobi(lambda: MultiVectorField, gamma: MultiVectorField) -> Result<Self> {
        if lambda.degree != 2 || gamma.degree != 1 {
            return Err(Error::Malformed("a Jacobi pair needs a bivector and a vector field".into()));
        }
        Self::new(lambda, gamma)
    }

    /// A derivation `X - a`, acting as `lambda -> X(lambda) - a lambda`.
    pub fn derivation(x: MultiVectorField, a: ScalarFn) -> Result<Self> {
        Self::new(x, MultiVectorField::scalar(a))
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn dims(&self) -> (usize, usize) {
        self.p.dims()
    }

    pub fn p(&self) -> &MultiVectorField {
        &self.p
    }

    pub fn q(&self) -> &MultiVectorField {
        &self.q
    }

    /// The section value of an arity-0 element.
    pub fn as_section(&self) -> ScalarFn {
        assert_eq!(self.arity, 0);
        self.p.coeff(&[])
    }

    pub fn is_zero(&self) -> bool {
        self.p.is_zero() && self.q.is_zero()
    }

    pub fn add(&self, o: &Self) -> Self {
        assert_eq!(self.arity, o.arity, "adding multi-derivations of different arity");
        Self { arity: self.arity, p: self.p.add(&o.p), q: self.q.add(&o.q) }
    }

    pub fn sub(&self, o: &Self) -> Self {
        self.add(&o.neg())
    }

    pub fn neg(&self) -> Self {
        Self { arity: self.arity, p: self.p.neg(), q: self.q.neg() }
    }

    pub fn scale(&self, f: &ScalarFn) -> Self {
        Self { arity: self.arity, p: self.p.scale(f), q: self.q.scale(f) }
    }

    pub fn scale_int(&self, n: i64) -> Self {
        Self { arity: self.arity, p: self.p.scale_int(n), q: self.q.scale_int(n) }
    }

    pub fn map(&self, op: impl Fn(&ScalarFn) -> ScalarFn) -> Self {
        Self { arity: self.arity, p: self.p.map(&op), q: self.q.map(&op) }
    }

    /// Schouten-Jacobi bracket in the `(P, Q)` picture; the result has arity
    /// `a + b - 1`, and is zero when that is negative.
    pub fn sj_bracket(&self, o: &Self) -> Self {
        self.try_sj_bracket(o).expect("chart mismatch in Schouten-Jacobi bracket")
    }

    pub fn try_sj_bracket(&self, o: &Self) -> Result<Self> {
        self.p.check(&o.p)?;
        let (km, mm) = self.dims();
        if self.arity + o.arity == 0 {
            return Ok(Self::zero(km, mm, 0));
        }
        let arity = self.arity + o.arity - 1;
        let k = self.arity as i64 - 1;
        let k2 = o.arity as i64 - 1;
        let mut p = self.p.sn_bracket(&o.p);
        let mut q = MultiVectorField::zero(km, mm, arity.saturating_sub(1));
        if o.arity > 0 && k != 0 {
            p = p.add(&self.p.wedge(&o.q).scale_int(-parity_sign(k2) * k));
        }
        if self.arity > 0 && k2 != 0 {
            p = p.add(&self.q.wedge(&o.p).scale_int(k2));
        }
        if arity > 0 {
            if o.arity > 0 {
                q = q.add(&self.p.sn_bracket(&o.q));
            }
            if self.arity > 0 {
                q = q.add(&self.q.sn_bracket(&o.p).scale_int(parity_sign(k2)));
            }
            if self.arity > 0 && o.arity > 0 && k != k2 {
                q = q.add(&self.q.wedge(&o.q).scale_int(-(k - k2)));
            }
        }
        Self::new(p, q)
    }

    /// Direct evaluation
    /// `(P - Q ^ id)(f_1..f_n) = P(df_1..df_n) + sum_i (-1)^(n-1-i) Q(..^i..) f_i`
    /// (1-based `i`), so that a biderivation gives `J(f, g) = Lambda(df, dg) + f Gamma g - g Gamma f`.
    pub fn eval(&self, args: &[ScalarFn]) -> Result<ScalarFn> {
        if args.len() != self.arity {
            return Err(Error::ArityMismatch { expected: self.arity, got: args.len() });
        }
        for a in args {
            if a.dims() != self.dims() {
                return Err(Error::ChartMismatch(format!("{:?} vs {:?}", a.dims(), self.dims())));
            }
        }
        let n = self.arity as i64;
        if n == 0 {
            return Ok(self.as_section());
        }
        let mut out = self.p.eval_differentials(args);
        for i in 0..args.len() {
            let rest: Vec<ScalarFn> = args.iter().enumerate().filter(|(j, _)| *j != i).map(|(_, f)| f.clone()).collect();
            let term = &self.q.eval_differentials(&rest) * &args[i];
            out = &out + &term.scale_int(parity_sign(n - 2 - i as i64));
        }
        Ok(out)
    }

    /// Evaluation by nested brackets `[[..[D, f_1], ..], f_n]`; agrees with
    /// [`Self::eval`] up to the sign `(-1)^(n(n-1)/2)`.
    pub fn eval_nested(&self, args: &[ScalarFn]) -> Result<ScalarFn> {
        if args.len() != self.arity {
            return Err(Error::ArityMismatch { expected: self.arity, got: args.len() });
        }
        let mut acc = self.clone();
        for a in args {
            acc = acc.try_sj_bracket(&Self::section(a.clone()))?;
        }
        Ok(acc.as_section())
    }

    /// `Jac(J) = 1/2 [J, J]`.
    pub fn jacobiator(&self) -> Result<Self> {
        if self.arity != 2 {
            return Err(Error::ArityMismatch { expected: 2, got: self.arity });
        }
        Ok(self.sj_bracket(self).map(|f| f.scale_ratio(1, 2)))
    }

    pub fn is_jacobi(&self) -> bool {
        self.jacobiator().map(|j| j.is_zero()).unwrap_or(false)
    }

    /// `Delta_lambda = -[J, lambda]`; its p-part is the symbol `X_lambda`.
    pub fn hamiltonian(&self, lam: &ScalarFn) -> Result<Self> {
        if self.arity != 2 {
            return Err(Error::ArityMismatch { expected: 2, got: self.arity });
        }
        Ok(self.try_sj_bracket(&Self::section(lam.clone()))?.neg())
    }

    pub fn hamiltonian_symbol(&self, lam: &ScalarFn) -> Result<MultiVectorField> {
        Ok(self.hamiltonian(lam)?.p)
    }

    /// `(Lambda, Gamma)` with the two compatibility conditions evaluated.
    pub fn pair_dictionary(&self) -> Result<JacobiPairReport> {
        if self.arity != 2 {
            return Err(Error::ArityMismatch { expected: 2, got: self.arity });
        }
        let lie = self.q.sn_bracket(&self.p);
        let ll = self.p.sn_bracket(&self.p).add(&self.q.wedge(&self.p).scale_int(2));
        Ok(JacobiPairReport {
            lambda: self.p.clone(),
            gamma: self.q.clone(),
            lie_gamma_lambda_zero: lie.is_zero(),
            lambda_lambda_plus_gamma_lambda_zero: ll.is_zero(),
        })
    }

    /// The bi-symbol `Lambda_J`, which in a trivialization is the p-part.
    pub fn bisymbol(&self) -> Result<MultiVectorField> {
        if self.arity != 2 {
            return Err(Error::ArityMismatch { expected: 2, got: self.arity });
        }
        Ok(self.p.clone())
    }

    /// `Lambda_J^#(df) = X_f - f X_1`.
    pub fn bisymbol_sharp(&self, f: &ScalarFn) -> Result<MultiVectorField> {
        let (k, m) = self.dims();
        let xf = self.hamiltonian_symbol(f)?;
        let x1 = self.hamiltonian_symbol(&ScalarFn::one(k, m))?;
        Ok(xf.sub(&x1.scale(f)))
    }

    pub fn to_json(&self) -> Value {
        json!({"arity": self.arity, "p": self.p.to_json(), "q": self.q.to_json()})
    }

    pub fn from_json(v: &Value, k: usize, m: usize) -> Result<Self> {
        let arity = v
            .get("arity")
            .and_then(Value::as_u64)
            .ok_or_else(|| Error::Malformed("missing `arity`".into()))? as usize;
        let p = MultiVectorField::from_json(v.get("p").unwrap_or(&Value::Array(vec![])), k, m, arity)?;
        let q = MultiVectorField::from_json(
            v.get("q").unwrap_or(&Value::Array(vec![])),
            k,
            m,
            arity.saturating_sub(1),
        )?;
        Self::new(p, q)
    }
}
