//! Fourier-polynomial functions `sum c exp(i n.phi) y^alpha` on `T^k x R^m`.

use super::{GaussianRational, RingError};
use num::{BigInt, BigRational};
use std::collections::btree_map::Entry;
use std::collections::BTreeMap;
use std::ops::{Add, Mul, Neg, Sub};

/// Exponent key of one term: torus frequencies and fiber powers.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Mono {
    pub torus: Vec<i64>,
    pub fiber: Vec<u32>,
}

impl Mono {
    pub fn zero(k: usize, m: usize) -> Self {
        Self { torus: vec![0; k], fiber: vec![0; m] }
    }

    fn mul(&self, o: &Mono) -> Mono {
        Mono {
            torus: self.torus.iter().zip(&o.torus).map(|(a, b)| a + b).collect(),
            fiber: self.fiber.iter().zip(&o.fiber).map(|(a, b)| a + b).collect(),
        }
    }

    pub fn is_base(&self) -> bool {
        self.fiber.iter().all(|&e| e == 0)
    }

    pub fn fiber_degree(&self) -> u32 {
        self.fiber.iter().sum()
    }
}

/// Arithmetic selector for [`ScalarFn::arith`].
#[derive(Clone, Debug)]
pub enum ArithOp {
    Add,
    Sub,
    Mul,
}

/// An exact function on a chart, in canonical form: no zero coefficients,
/// terms ordered by exponent key. Only the chart dimensions are carried;
/// coordinate names live in [`super::Chart`].
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct ScalarFn {
    k: usize,
    m: usize,
    terms: BTreeMap<Mono, GaussianRational>,
}

/// A torus integral with the `(2 pi)^d` factor kept symbolic.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TorusIntegral {
    pub value: ScalarFn,
    pub two_pi_power: u32,
}

impl ScalarFn {
    pub fn zero(k: usize, m: usize) -> Self {
        Self { k, m, terms: BTreeMap::new() }
    }

    pub fn constant(k: usize, m: usize, c: GaussianRational) -> Self {
        let mut f = Self::zero(k, m);
        f.add_term(Mono::zero(k, m), c);
        f
    }

    pub fn one(k: usize, m: usize) -> Self {
        Self::constant(k, m, GaussianRational::one())
    }

    pub fn from_int(k: usize, m: usize, n: i64) -> Self {
        Self::constant(k, m, GaussianRational::from_int(n))
    }

    pub fn from_ratio(k: usize, m: usize, p: i64, q: i64) -> Self {
        Self::constant(k, m, GaussianRational::from_ratio(p, q))
    }

    /// A single term `c exp(i n.phi) y^alpha`.
    pub fn monomial(k: usize, m: usize, mono: Mono, c: GaussianRational) -> Self {
        assert_eq!(mono.torus.len(), k);
        assert_eq!(mono.fiber.len(), m);
        let mut f = Self::zero(k, m);
        f.add_term(mono, c);
        f
    }

    /// `exp(i n.phi)`
    pub fn exp_mode(k: usize, m: usize, n: &[i64]) -> Self {
        Self::monomial(k, m, Mono { torus: n.to_vec(), fiber: vec![0; m] }, GaussianRational::one())
    }

    /// `exp(i phi_j)`
    pub fn exp_coord(k: usize, m: usize, j: usize) -> Self {
        let mut n = vec![0; k];
        n[j] = 1;
        Self::exp_mode(k, m, &n)
    }

    /// `cos(n.phi)`
    pub fn cos_mode(k: usize, m: usize, n: &[i64]) -> Self {
        let neg: Vec<i64> = n.iter().map(|x| -x).collect();
        let half = GaussianRational::from_ratio(1, 2);
        (&Self::exp_mode(k, m, n) + &Self::exp_mode(k, m, &neg)).scale(&half)
    }

    /// `sin(n.phi)`
    pub fn sin_mode(k: usize, m: usize, n: &[i64]) -> Self {
        let neg: Vec<i64> = n.iter().map(|x| -x).collect();
        // 1/(2i) = -i/2
        let c = GaussianRational::new(BigRational::from_integer(0.into()), BigRational::new((-1).into(), 2.into()));
        (&Self::exp_mode(k, m, n) - &Self::exp_mode(k, m, &neg)).scale(&c)
    }

    pub fn cos_coord(k: usize, m: usize, j: usize) -> Self {
        let mut n = vec![0; k];
        n[j] = 1;
        Self::cos_mode(k, m, &n)
    }

    pub fn sin_coord(k: usize, m: usize, j: usize) -> Self {
        let mut n = vec![0; k];
        n[j] = 1;
        Self::sin_mode(k, m, &n)
    }

    /// The fiber coordinate `y_a`.
    pub fn fiber_var(k: usize, m: usize, a: usize) -> Self {
        let mut mono = Mono::zero(k, m);
        mono.fiber[a] = 1;
        Self::monomial(k, m, mono, GaussianRational::one())
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.k, self.m)
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Mono, &GaussianRational)> {
        self.terms.iter()
    }

    pub fn coeff(&self, mono: &Mono) -> GaussianRational {
        self.terms.get(mono).cloned().unwrap_or_else(GaussianRational::zero)
    }

    /// Coefficient of the constant mode.
    pub fn constant_term(&self) -> GaussianRational {
        self.coeff(&Mono::zero(self.k, self.m))
    }

    pub fn as_constant(&self) -> Option<GaussianRational> {
        match self.terms.len() {
            0 => Some(GaussianRational::zero()),
            1 => {
                let (mono, c) = self.terms.iter().next().unwrap();
                if mono.torus.iter().all(|&n| n == 0) && mono.is_base() {
                    Some(c.clone())
                } else {
                    None
                }
            }
            _ => None,
        }
    }

    pub fn add_term(&mut self, mono: Mono, c: GaussianRational) {
        if c.is_zero() {
            return;
        }
        match self.terms.entry(mono) {
            Entry::Vacant(v) => {
                v.insert(c);
            }
            Entry::Occupied(mut o) => {
                *o.get_mut() += &c;
                if o.get().is_zero() {
                    o.remove();
                }
            }
        }
    }


    fn check_dims(&self, o: &ScalarFn) -> Result<(), RingError> {
        if self.dims() != o.dims() {
            return Err(RingError::ChartMismatch { left: self.dims(), right: o.dims() });
        }
        Ok(())
    }

    /// Checked arithmetic; the operator impls panic on a chart mismatch instead.
    pub fn arith(&self, o: &ScalarFn, op: ArithOp) -> Result<ScalarFn, RingError> {
        self.check_dims(o)?;
        Ok(match op {
            ArithOp::Add => self + o,
            ArithOp::Sub => self - o,
            ArithOp::Mul => self * o,
        })
    }

    pub fn scale(&self, c: &GaussianRational) -> ScalarFn {
        if c.is_zero() {
            return Self::zero(self.k, self.m);
        }
        Self {
            k: self.k,
            m: self.m,
            terms: self.terms.iter().map(|(mo, x)| (mo.clone(), x * c)).collect(),
        }
    }

    pub fn scale_int(&self, n: i64) -> ScalarFn {
        self.scale(&GaussianRational::from_int(n))
    }

    pub fn scale_ratio(&self, p: i64, q: i64) -> ScalarFn {
        self.scale(&GaussianRational::from_ratio(p, q))
    }

    pub fn pow(&self, e: u32) -> ScalarFn {
        let mut acc = Self::one(self.k, self.m);
        for _ in 0..e {
            acc = &acc * self;
        }
        acc
    }

    /// Derivative along coordinate `c` (torus indices first, then fiber).
    pub fn partial(&self, c: usize) -> ScalarFn {
        if c < self.k {
            self.partial_torus(c)
        } else {
            self.partial_fiber(c - self.k)
        }
    }

    pub fn partial_checked(&self, c: usize) -> Result<ScalarFn, RingError> {
        if c >= self.k + self.m {
            return Err(RingError::UnknownCoordinate(format!("#{c}")));
        }
        Ok(self.partial(c))
    }

    pub fn partial_torus(&self, j: usize) -> ScalarFn {
        let mut out = Self::zero(self.k, self.m);
        for (mo, c) in &self.terms {
            let n = mo.torus[j];
            if n != 0 {
                out.terms.insert(mo.clone(), c.times_i_int(n));
            }
        }
        out
    }

    pub fn partial_fiber(&self, a: usize) -> ScalarFn {
        let mut out = Self::zero(self.k, self.m);
        for (mo, c) in &self.terms {
            let e = mo.fiber[a];
            if e > 0 {
                let mut nm = mo.clone();
                nm.fiber[a] -= 1;
                out.add_term(nm, c.scale_int(e as i64));
            }
        }
        out
    }

    /// Restriction to the zero section `y = 0`.
    pub fn restrict_zero_fibers(&self) -> ScalarFn {
        Self {
            k: self.k,
            m: self.m,
            terms: self.terms.iter().filter(|(mo, _)| mo.is_base()).map(|(a, b)| (a.clone(), b.clone())).collect(),
        }
    }

    /// True when no term involves a fiber coordinate.
    pub fn is_base_only(&self) -> bool {
        self.terms.keys().all(|mo| mo.is_base())
    }

    pub fn depends_on_torus(&self, j: usize) -> bool {
        self.terms.keys().any(|mo| mo.torus[j] != 0)
    }

    pub fn depends_on_fiber(&self, a: usize) -> bool {
        self.terms.keys().any(|mo| mo.fiber[a] != 0)
    }

    /// Maximal total fiber degree; `None` for the zero function.
    pub fn fiber_degree(&self) -> Option<u32> {
        self.terms.keys().map(|mo| mo.fiber_degree()).max()
    }

    /// Degree in a single fiber variable.
    pub fn fiber_degree_in(&self, a: usize) -> u32 {
        self.terms.keys().map(|mo| mo.fiber[a]).max().unwrap_or(0)
    }

    /// Embeds into a chart with at least as many torus and fiber coordinates;
    /// the new coordinates are appended.
    pub fn embed(&self, k2: usize, m2: usize) -> ScalarFn {
        assert!(k2 >= self.k && m2 >= self.m, "embedding into a smaller chart");
        let terms = self
            .terms
            .iter()
            .map(|(mo, c)| {
                let mut t = mo.torus.clone();
                t.resize(k2, 0);
                let mut f = mo.fiber.clone();
                f.resize(m2, 0);
                (Mono { torus: t, fiber: f }, c.clone())
            })
            .collect();
        Self { k: k2, m: m2, terms }
    }

    /// Removes fiber coordinate `a`, which must not occur.
    pub fn drop_fiber(&self, a: usize) -> ScalarFn {
        assert!(!self.depends_on_fiber(a), "dropping a fiber coordinate that occurs");
        let terms = self
            .terms
            .iter()
            .map(|(mo, c)| {
                let mut f = mo.fiber.clone();
                f.remove(a);
                (Mono { torus: mo.torus.clone(), fiber: f }, c.clone())
            })
            .collect();
        Self { k: self.k, m: self.m - 1, terms }
    }

    /// Composition with fiber substitutions. `assign[a] = Some(e)` replaces `y_a`
    /// by `e`; `None` keeps `y_a` as fiber `a` of the target chart. All
    /// assigned expressions and the result live on the target chart
    /// `(tk, tm)`, which must contain this chart.
    pub fn substitute_fiber(&self, assign: &[Option<ScalarFn>], tk: usize, tm: usize) -> Result<ScalarFn, RingError> {
        if assign.len() != self.m {
            return Err(RingError::Substitution(format!(
                "expected {} assignments, got {}",
                self.m,
                assign.len()
            )));
        }
        if tk < self.k {
            return Err(RingError::Substitution("target chart has fewer torus coordinates".into()));
        }
        for (a, e) in assign.iter().enumerate() {
            match e {
                Some(e) if e.dims() != (tk, tm) => {
                    return Err(RingError::ChartMismatch { left: (tk, tm), right: e.dims() })
                }
                None if a >= tm => {
                    return Err(RingError::Substitution(format!("fiber {a} kept but target has {tm} fibers")))
                }
                _ => {}
            }
        }
        let mut powers: Vec<Vec<ScalarFn>> = assign
            .iter()
            .enumerate()
            .map(|(a, e)| {
                vec![Self::one(tk, tm), e.clone().unwrap_or_else(|| Self::fiber_var(tk, tm, a))]
            })
            .collect();
        let mut out = Self::zero(tk, tm);
        for (mo, c) in &self.terms {
            let mut t = mo.torus.clone();
            t.resize(tk, 0);
            let mut term = Self::monomial(tk, tm, Mono { torus: t, fiber: vec![0; tm] }, c.clone());
            for (a, &e) in mo.fiber.iter().enumerate() {
                if e == 0 {
                    continue;
                }
                while powers[a].len() <= e as usize {
                    let next = &powers[a][powers[a].len() - 1] * &powers[a][1];
                    powers[a].push(next);
                }
                term = &term * &powers[a][e as usize];
            }
            out = &out + &term;
        }
        Ok(out)
    }

    /// Exact integral over `y_a` in `[0, 1]`; the coordinate is removed.
    pub fn integrate_unit_interval(&self, a: usize) -> ScalarFn {
        let mut out = Self::zero(self.k, self.m - 1);
        for (mo, c) in &self.terms {
            let e = mo.fiber[a] as i64;
            let mut f = mo.fiber.clone();
            f.remove(a);
            out.add_term(Mono { torus: mo.torus.clone(), fiber: f }, c.div_int(e + 1));
        }
        out
    }

    /// Zero-frequency part in the given torus coordinates.
    pub fn zero_mode(&self, coords: &[usize]) -> ScalarFn {
        Self {
            k: self.k,
            m: self.m,
            terms: self
                .terms
                .iter()
                .filter(|(mo, _)| coords.iter().all(|&j| mo.torus[j] == 0))
                .map(|(a, b)| (a.clone(), b.clone()))
                .collect(),
        }
    }

    /// Integral over the torus factors `coords`, keeping `(2 pi)^d` symbolic.
    pub fn integrate_torus(&self, coords: &[usize]) -> Result<TorusIntegral, RingError> {
        let mut uniq = coords.to_vec();
        uniq.sort_unstable();
        uniq.dedup();
        if let Some(&bad) = uniq.iter().find(|&&j| j >= self.k) {
            return Err(RingError::UnknownCoordinate(format!("torus #{bad}")));
        }
        Ok(TorusIntegral { value: self.zero_mode(&uniq), two_pi_power: uniq.len() as u32 })
    }

    pub fn conj(&self) -> ScalarFn {
        let terms = self
            .terms
            .iter()
            .map(|(mo, c)| {
                (Mono { torus: mo.torus.iter().map(|n| -n).collect(), fiber: mo.fiber.clone() }, c.conj())
            })
            .collect();
        Self { k: self.k, m: self.m, terms }
    }

    /// A function is real iff `coeff(-n, alpha) = conj(coeff(n, alpha))`.
    pub fn is_real(&self) -> bool {
        self.conj() == *self
    }

    /// Inverse of a unit `c exp(i n.phi)`; `None` for anything else.
    pub fn try_inverse(&self) -> Option<ScalarFn> {
        if self.terms.len() != 1 {
            return None;
        }
        let (mo, c) = self.terms.iter().next().unwrap();
        if !mo.is_base() {
            return None;
        }
        let inv = c.inv()?;
        Some(Self::monomial(
            self.k,
            self.m,
            Mono { torus: mo.torus.iter().map(|n| -n).collect(), fiber: mo.fiber.clone() },
            inv,
        ))
    }

    pub fn is_unit(&self) -> bool {
        self.try_inverse().is_some()
    }

    /// Sum of terms whose fiber exponent equals `alpha`, as a base function.
    pub fn fiber_coefficient(&self, alpha: &[u32]) -> ScalarFn {
        let mut out = Self::zero(self.k, self.m);
        for (mo, c) in &self.terms {
            if mo.fiber == alpha {
                out.terms.insert(Mono { torus: mo.torus.clone(), fiber: vec![0; self.m] }, c.clone());
            }
        }
        out
    }

    pub fn rational(k: usize, m: usize, r: BigRational) -> Self {
        Self::constant(k, m, GaussianRational::from_rational(r))
    }

    pub fn integer(k: usize, m: usize, n: BigInt) -> Self {
        Self::rational(k, m, BigRational::from_integer(n))
    }
}

impl Add for &ScalarFn {
    type Output = ScalarFn;
    fn add(self, o: &ScalarFn) -> ScalarFn {
        assert_eq!(self.dims(), o.dims(), "chart mismatch in addition");
        let (big, small) = if self.terms.len() >= o.terms.len() { (self, o) } else { (o, self) };
        let mut out = big.clone();
        for (mo, c) in &small.terms {
            out.add_term(mo.clone(), c.clone());
        }
        out
    }
}

impl Sub for &ScalarFn {
    type Output = ScalarFn;
    fn sub(self, o: &ScalarFn) -> ScalarFn {
        assert_eq!(self.dims(), o.dims(), "chart mismatch in subtraction");
        let mut out = self.clone();
        for (mo, c) in &o.terms {
            out.add_term(mo.clone(), -c);
        }
        out
    }
}

impl Mul for &ScalarFn {
    type Output = ScalarFn;
    fn mul(self, o: &ScalarFn) -> ScalarFn {
        assert_eq!(self.dims(), o.dims(), "chart mismatch in multiplication");
        let mut out = ScalarFn::zero(self.k, self.m);
        for (ma, ca) in &self.terms {
            for (mb, cb) in &o.terms {
                out.add_term(ma.mul(mb), ca * cb);
            }
        }
        out
    }
}

impl Neg for &ScalarFn {
    type Output = ScalarFn;
    fn neg(self) -> ScalarFn {
        ScalarFn {
            k: self.k,
            m: self.m,
            terms: self.terms.iter().map(|(mo, c)| (mo.clone(), -c)).collect(),
        }
    }
}

impl Add for ScalarFn {
    type Output = ScalarFn;
    fn add(self, o: ScalarFn) -> ScalarFn {
        &self + &o
    }
}

impl Sub for ScalarFn {
    type Output = ScalarFn;
    fn sub(self, o: ScalarFn) -> ScalarFn {
        &self - &o
    }
}

impl Mul for ScalarFn {
    type Output = ScalarFn;
    fn mul(self, o: ScalarFn) -> ScalarFn {
        &self * &o
    }
}

impl Neg for ScalarFn {
    type Output = ScalarFn;
    fn neg(self) -> ScalarFn {
        -&self
    }
}
