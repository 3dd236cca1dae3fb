//! Constructors of Jacobi structures and the coisotropy machinery of the
//! zero section `y = 0`.

use crate::error::{Error, Result};
use crate::linfty::LeafForm;
use crate::multider::{det, MultiDerivation, MultiVectorField};
use crate::ring::{Chart, ScalarFn};

/// A differential form stored like a multivector: increasing index tuples
/// to coefficients, read as `f_I dx_I`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DiffForm(pub MultiVectorField);

impl DiffForm {
    pub fn zero(k: usize, m: usize, degree: usize) -> Self {
        Self(MultiVectorField::zero(k, m, degree))
    }

    /// A 1-form from its coefficient list.
    pub fn one_form(coefs: &[ScalarFn]) -> Self {
        let (k, m) = coefs[0].dims();
        assert_eq!(coefs.len(), k + m, "one coefficient per coordinate");
        let mut out = MultiVectorField::zero(k, m, 1);
        for (c, f) in coefs.iter().enumerate() {
            out.add_term(&[c], f.clone());
        }
        Self(out)
    }

    pub fn degree(&self) -> usize {
        self.0.degree()
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_zero()
    }

    pub fn wedge(&self, o: &Self) -> Self {
        Self(self.0.wedge(&o.0))
    }

    pub fn add(&self, o: &Self) -> Self {
        Self(self.0.add(&o.0))
    }

    /// Exterior derivative.
    pub fn d(&self) -> Self {
        let (k, m) = self.0.dims();
        let mut out = MultiVectorField::zero(k, m, self.degree() + 1);
        for (idx, f) in self.0.terms() {
            for c in 0..k + m {
                let mut full = vec![c];
                full.extend_from_slice(idx);
                out.add_term(&full, f.partial(c));
            }
        }
        Self(out)
    }

    /// Coefficients of a 1-form, one per coordinate.
    pub fn components(&self) -> Vec<ScalarFn> {
        assert_eq!(self.degree(), 1);
        let (k, m) = self.0.dims();
        (0..k + m).map(|c| self.0.coeff(&[c])).collect()
    }

    /// Skew matrix `omega(d_a, d_b)` of a 2-form.
    pub fn matrix(&self) -> Vec<Vec<ScalarFn>> {
        assert_eq!(self.degree(), 2);
        let (k, m) = self.0.dims();
        (0..k + m).map(|a| (0..k + m).map(|b| self.0.coeff(&[a, b])).collect()).collect()
    }

    /// `alpha(X)` for a 1-form and a vector field.
    pub fn pair(&self, x: &MultiVectorField) -> ScalarFn {
        let comps = self.components();
        let (k, m) = self.0.dims();
        let mut out = ScalarFn::zero(k, m);
        for (idx, f) in x.terms() {
            out = &out + &(f * &comps[idx[0]]);
        }
        out
    }
}

/// Inverse of a square matrix over the ring whose determinant is a unit.
/// On failure the error names the offending determinant.
pub fn invert_unit_matrix(mat: &[Vec<ScalarFn>], k: usize, m: usize, what: &str) -> Result<Vec<Vec<ScalarFn>>> {
    let n = mat.len();
    let d = det(mat, k, m);
    let inv = d.try_inverse().ok_or_else(|| {
        Error::NotInvertible(format!(
            "{what}: the full {n}x{n} minor has determinant with {} term(s), not a unit",
            d.num_terms()
        ))
    })?;
    let mut out = vec![vec![ScalarFn::zero(k, m); n]; n];
    for (i, row) in out.iter_mut().enumerate() {
        for (j, slot) in row.iter_mut().enumerate() {
            // adjugate: (adj A)_{ij} = (-1)^{i+j} det(A without row j, col i)
            let minor: Vec<Vec<ScalarFn>> = mat
                .iter()
                .enumerate()
                .filter(|(r, _)| *r != j)
                .map(|(_, row)| row.iter().enumerate().filter(|(c, _)| *c != i).map(|(_, x)| x.clone()).collect())
                .collect();
            let cof = det(&minor, k, m);
            let cof = if (i + j) % 2 == 0 { cof } else { -cof };
            *slot = &cof * &inv;
        }
    }
    Ok(out)
}

/// Recovers `J = Lambda - Gamma ^ id` from a first-order skew bracket by
/// probing with `exp(i phi_c)` on torus coordinates and `y_a` on fibers.
pub fn extract_jacobi(k: usize, m: usize, bracket: impl Fn(&ScalarFn, &ScalarFn) -> ScalarFn) -> Result<MultiDerivation> {
    let n = k + m;
    let one = ScalarFn::one(k, m);
    let mut probes = Vec::with_capacity(n);
    let mut dprobe_inv = Vec::with_capacity(n);
    for c in 0..n {
        let (u, du) = if c < k {
            let e = ScalarFn::exp_coord(k, m, c);
            let du = e.partial(c);
            (e, du)
        } else {
            (ScalarFn::fiber_var(k, m, c - k), one.clone())
        };
        dprobe_inv.push(du.try_inverse().expect("probe differential is a unit"));
        probes.push(u);
    }
    let mut gamma = MultiVectorField::zero(k, m, 1);
    let mut gamma_on = Vec::with_capacity(n);
    for c in 0..n {
        let g = bracket(&one, &probes[c]);
        gamma.add_term(&[c], &g * &dprobe_inv[c]);
        gamma_on.push(g);
    }
    let mut lambda = MultiVectorField::zero(k, m, 2);
    for c in 0..n {
        for d in c + 1..n {
            let raw = &(&bracket(&probes[c], &probes[d]) - &(&probes[c] * &gamma_on[d])) + &(&probes[d] * &gamma_on[c]);
            lambda.add_term(&[c, d], &(&raw * &dprobe_inv[c]) * &dprobe_inv[d]);
        }
    }
    MultiDerivation::jacobi(lambda, gamma)
}

/// A contact form with a declared frame: a Reeb candidate `R` and vector
/// fields `C_a` spanning `ker theta`.
#[derive(Clone, Debug)]
pub struct ContactChart {
    pub chart: Chart,
    pub theta: DiffForm,
    pub reeb: MultiVectorField,
    pub frame: Vec<MultiVectorField>,
}

/// The contact Jacobi structure together with its Hamiltonian-field recipe.
#[derive(Clone, Debug)]
pub struct ContactJacobi {
    pub jacobi: MultiDerivation,
    /// `omega_ab = theta([C_a, C_b])`
    pub curvature: Vec<Vec<ScalarFn>>,
    pub curvature_inverse: Vec<Vec<ScalarFn>>,
    /// `r_b = theta([R, C_b])`
    pub reeb_terms: Vec<ScalarFn>,
}

impl ContactChart {
    pub fn new(chart: Chart, theta: DiffForm, reeb: MultiVectorField, frame: Vec<MultiVectorField>) -> Result<Self> {
        let (k, m) = chart.dims();
        if theta.0.dims() != (k, m) || theta.degree() != 1 {
            return Err(Error::Malformed("contact form must be a 1-form on the chart".into()));
        }
        if frame.len() + 1 != k + m {
            return Err(Error::Malformed(format!(
                "frame of ker theta needs {} fields, got {}",
                k + m - 1,
                frame.len()
            )));
        }
        if !theta.pair(&reeb).as_constant().is_some_and(|c| c.is_one()) {
            return Err(Error::Precondition("theta(R) != 1".into()));
        }
        for (a, c) in frame.iter().enumerate() {
            if !theta.pair(c).is_zero() {
                return Err(Error::Precondition(format!("theta(C_{}) != 0", a + 1)));
            }
        }
        Ok(Self { chart, theta, reeb, frame })
    }

    /// `theta = dz - sum p_i dphi_i` on `J^1(T^b)`, with fibers `(z, p_1..p_b)`,
    /// Reeb field `d_z` and frame `d_phi_i + p_i d_z`, `d_p_i`.
    pub fn jet(b: usize) -> Result<Self> {
        let torus = (1..=b).map(|i| format!("ph_{i}")).collect();
        let mut fiber = vec!["z".to_string()];
        fiber.extend((1..=b).map(|i| format!("p_{i}")));
        let chart = Chart::new(torus, fiber, (0..b).collect())?;
        let (k, m) = (b, b + 1);
        let z = k;
        let p = |i: usize| k + 1 + i;
        let mut coefs = vec![ScalarFn::zero(k, m); k + m];
        coefs[z] = ScalarFn::one(k, m);
        for i in 0..b {
            coefs[i] = -ScalarFn::fiber_var(k, m, 1 + i);
        }
        let mut frame = Vec::new();
        for i in 0..b {
            let v = MultiVectorField::vector(i, ScalarFn::one(k, m))
                .add(&MultiVectorField::vector(z, ScalarFn::fiber_var(k, m, 1 + i)));
            frame.push(v);
            frame.push(MultiVectorField::vector(p(i), ScalarFn::one(k, m)));
        }
        Self::new(chart, DiffForm::one_form(&coefs), MultiVectorField::vector(z, ScalarFn::one(k, m)), frame)
    }

    /// `theta = y_1 dph_1 + y_2 dph_2 + sin(ph_3) dph_4 + cos(ph_3) dph_5` on
    /// `T^5 x R^2`, with `R = Y = sin(ph_3) d_4 + cos(ph_3) d_5` and frame
    /// `d_3, X = cos(ph_3) d_4 - sin(ph_3) d_5, d_y1, d_y2, d_1 - y_1 Y, d_2 - y_2 Y`.
    pub fn torus_obstructed() -> Result<Self> {
        let chart = Chart::standard(5, 2, vec![0, 1])?;
        let (k, m) = (5, 2);
        let one = ScalarFn::one(k, m);
        let (s3, c3) = (ScalarFn::sin_coord(k, m, 2), ScalarFn::cos_coord(k, m, 2));
        let y = |a: usize| ScalarFn::fiber_var(k, m, a);
        let theta = DiffForm::one_form(&[
            y(0),
            y(1),
            ScalarFn::zero(k, m),
            s3.clone(),
            c3.clone(),
            ScalarFn::zero(k, m),
            ScalarFn::zero(k, m),
        ]);
        let v = |c: usize, f: &ScalarFn| MultiVectorField::vector(c, f.clone());
        let reeb = v(3, &s3).add(&v(4, &c3));
        let frame = vec![
            v(2, &one),
            v(3, &c3).add(&v(4, &-&s3)),
            v(5, &one),
            v(6, &one),
            v(0, &one).sub(&reeb.scale(&y(0))),
            v(1, &one).sub(&reeb.scale(&y(1))),
        ];
        Self::new(chart, theta, reeb, frame)
    }

    /// `theta = dz - y dx` on a chart with three fiber coordinates `(x, y, z)`.
    pub fn darboux3() -> Result<Self> {
        let chart = Chart::new(vec![], vec!["x".into(), "y".into(), "z".into()], vec![])?;
        let (k, m) = (0, 3);
        let one = ScalarFn::one(k, m);
        let y = ScalarFn::fiber_var(k, m, 1);
        let theta = DiffForm::one_form(&[-y.clone(), ScalarFn::zero(k, m), one.clone()]);
        let frame = vec![
            MultiVectorField::vector(0, one.clone()).add(&MultiVectorField::vector(2, y)),
            MultiVectorField::vector(1, one.clone()),
        ];
        Self::new(chart, theta, MultiVectorField::vector(2, one), frame)
    }

    pub fn dims(&self) -> (usize, usize) {
        self.chart.dims()
    }

    fn curvature_data(&self) -> (Vec<Vec<ScalarFn>>, Vec<ScalarFn>) {
        let n = self.frame.len();
        let mut omega = vec![vec![ScalarFn::zero(self.dims().0, self.dims().1); n]; n];
        for a in 0..n {
            for b in 0..n {
                omega[a][b] = self.theta.pair(&self.frame[a].sn_bracket(&self.frame[b]));
            }
        }
        let r = self.frame.iter().map(|c| self.theta.pair(&self.reeb.sn_bracket(c))).collect();
        (omega, r)
    }

    /// `X_lambda = lambda R + sum (C_b lambda - lambda r_b) W^{ba} C_a`, the
    /// unique contact vector field with `theta(X_lambda) = lambda`.
    pub fn contact_field(&self, w: &[Vec<ScalarFn>], r: &[ScalarFn], lam: &ScalarFn) -> MultiVectorField {
        let mut x = self.reeb.scale(lam);
        let v: Vec<ScalarFn> = self.frame.iter().zip(r).map(|(c, rb)| &c.apply(lam) - &(lam * rb)).collect();
        for a in 0..self.frame.len() {
            let mut coef = ScalarFn::zero(lam.k(), lam.m());
            for b in 0..self.frame.len() {
                coef = &coef + &(&v[b] * &w[b][a]);
            }
            if !coef.is_zero() {
                x = x.add(&self.frame[a].scale(&coef));
            }
        }
        x
    }

    /// The Jacobi structure `{lambda, mu} = theta([X_lambda, X_mu])`.
    pub fn to_jacobi(&self) -> Result<ContactJacobi> {
        let (k, m) = self.dims();
        let (omega, r) = self.curvature_data();
        let w = invert_unit_matrix(&omega, k, m, "curvature of ker theta")?;
        let bracket = |l: &ScalarFn, mu: &ScalarFn| {
            let xl = self.contact_field(&w, &r, l);
            let xm = self.contact_field(&w, &r, mu);
            self.theta.pair(&xl.sn_bracket(&xm))
        };
        let jacobi = extract_jacobi(k, m, bracket)?;
        for probe in [ScalarFn::one(k, m)].into_iter().chain((0..m).map(|a| ScalarFn::fiber_var(k, m, a))) {
            if self.theta.pair(&self.contact_field(&w, &r, &probe)) != probe {
                return Err(Error::Invariant("theta(X_lambda) != lambda".into()));
            }
        }
        if !jacobi.is_jacobi() {
            return Err(Error::Invariant("contact bracket fails the Jacobi identity".into()));
        }
        Ok(ContactJacobi { jacobi, curvature: omega, curvature_inverse: w, reeb_terms: r })
    }
}

pub fn contact_to_jacobi(cc: &ContactChart) -> Result<MultiDerivation> {
    Ok(cc.to_jacobi()?.jacobi)
}

/// The Jacobi structure of a locally conformal symplectic pair:
/// `X_lambda = omega^#(d lambda + lambda theta1)`, `{lambda, mu} = omega(X_mu, X_lambda)`.
pub fn lcs_to_jacobi(omega: &DiffForm, theta1: &DiffForm) -> Result<MultiDerivation> {
    let (k, m) = omega.0.dims();
    if omega.degree() != 2 || theta1.degree() != 1 || theta1.0.dims() != (k, m) {
        return Err(Error::Malformed("lcs data must be a 2-form and a 1-form on one chart".into()));
    }
    if !theta1.d().is_zero() {
        return Err(Error::Precondition("d theta1 != 0".into()));
    }
    if !omega.d().add(&omega.wedge(theta1)).is_zero() {
        return Err(Error::Precondition("d omega + omega ^ theta1 != 0".into()));
    }
    let mat = omega.matrix();
    let inv = invert_unit_matrix(&mat, k, m, "omega")?;
    let t = theta1.components();
    let n = k + m;
    let sharp = |l: &ScalarFn| -> Vec<ScalarFn> {
        let alpha: Vec<ScalarFn> = (0..n).map(|b| &l.partial(b) + &(l * &t[b])).collect();
        (0..n)
            .map(|a| (0..n).fold(ScalarFn::zero(k, m), |acc, b| &acc + &(&alpha[b] * &inv[b][a])))
            .collect()
    };
    let bracket = |l: &ScalarFn, mu: &ScalarFn| {
        let xl = sharp(l);
        let xm = sharp(mu);
        let mut out = ScalarFn::zero(k, m);
        for a in 0..n {
            for b in 0..n {
                if !mat[a][b].is_zero() {
                    out = &out + &(&(&xm[a] * &xl[b]) * &mat[a][b]);
                }
            }
        }
        out
    };
    let j = extract_jacobi(k, m, bracket)?;
    if !j.is_jacobi() {
        return Err(Error::Invariant("lcs bracket fails the Jacobi identity".into()));
    }
    Ok(j)
}

/// The canonical fiberwise-linear Jacobi structure on `J^1(T^b)`.
pub fn fiberwise_linear_jacobi(b: usize) -> Result<(Chart, MultiDerivation)> {
    let cc = ContactChart::jet(b)?;
    let j = contact_to_jacobi(&cc)?;
    Ok((cc.chart, j))
}

/// A normal section `s = sum g_a eta^a` with base-only components.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SectionOfNormalBundle {
    components: Vec<ScalarFn>,
}

impl SectionOfNormalBundle {
    pub fn new(components: Vec<ScalarFn>) -> Result<Self> {
        if components.is_empty() {
            return Err(Error::Malformed("a section needs one component per fiber coordinate".into()));
        }
        let dims = components[0].dims();
        if dims.1 != components.len() {
            return Err(Error::Malformed(format!(
                "{} components for {} fiber coordinates",
                components.len(),
                dims.1
            )));
        }
        for (a, g) in components.iter().enumerate() {
            if g.dims() != dims {
                return Err(Error::ChartMismatch("section components on different charts".into()));
            }
            if !g.is_base_only() {
                return Err(Error::Precondition(format!("component {} depends on fiber coordinates", a + 1)));
            }
        }
        Ok(Self { components })
    }

    pub fn zero(k: usize, m: usize) -> Self {
        Self { components: vec![ScalarFn::zero(k, m); m] }
    }

    pub fn components(&self) -> &[ScalarFn] {
        &self.components
    }

    pub fn dims(&self) -> (usize, usize) {
        self.components[0].dims()
    }

    pub fn neg(&self) -> Self {
        Self { components: self.components.iter().map(|g| -g).collect() }
    }

    pub fn to_leaf_form(&self) -> LeafForm {
        let (k, m) = self.dims();
        let mut out = LeafForm::zero(k, m, 1);
        for (a, g) in self.components.iter().enumerate() {
            out.add_term(&[a], g.clone());
        }
        out
    }

    pub fn from_leaf_form(w: &LeafForm) -> Result<Self> {
        if w.degree() != 1 {
            return Err(Error::Malformed("a normal section is a degree-1 leaf form".into()));
        }
        let m = w.dims().1;
        Self::new((0..m).map(|a| w.coeff(&[a])).collect())
    }

    /// Substitution `y_a -> g_a` for every fiber coordinate.
    pub fn restrict(&self, f: &ScalarFn) -> ScalarFn {
        let (k, m) = self.dims();
        let assign: Vec<Option<ScalarFn>> = self.components.iter().cloned().map(Some).collect();
        f.substitute_fiber(&assign, k, m).expect("section substitution on its own chart")
    }
}

/// `P(D)`: the coefficients of `d_{y_a1} ^ .. ^ d_{y_an}` in the p-part, at `y = 0`.
pub fn projection_p(sq: &MultiDerivation) -> LeafForm {
    let (k, m) = sq.dims();
    let mut out = LeafForm::zero(k, m, sq.arity());
    for (idx, f) in sq.p().terms() {
        if idx.iter().all(|&c| c >= k) {
            let fib: Vec<usize> = idx.iter().map(|&c| c - k).collect();
            out.add_term(&fib, f.restrict_zero_fibers());
        }
    }
    out
}

/// `I(xi) = sum xi_A d_{y_A}`, a fiberwise-constant vertical multivector with `Q = 0`.
pub fn injection_i(xi: &LeafForm) -> MultiDerivation {
    let (k, m) = xi.dims();
    let mut p = MultiVectorField::zero(k, m, xi.degree());
    for (idx, f) in xi.terms() {
        let full: Vec<usize> = idx.iter().map(|&a| k + a).collect();
        p.add_term(&full, f.clone());
    }
    MultiDerivation::new(p, MultiVectorField::zero(k, m, xi.degree().saturating_sub(1))).expect("valid injection")
}

/// Result of [`is_coisotropic_section`].
#[derive(Clone, Debug)]
pub struct CoisotropyReport {
    pub coisotropic: bool,
    /// Nonzero residues `{y_A - g_A, y_B - g_B}|_{y = g}` with `A < B` (0-based).
    pub residues: Vec<((usize, usize), ScalarFn)>,
}

/// Coisotropy of the graph of `s` by the substitution criterion.
pub fn is_coisotropic_section(j: &MultiDerivation, s: &SectionOfNormalBundle) -> Result<CoisotropyReport> {
    if j.arity() != 2 {
        return Err(Error::ArityMismatch { expected: 2, got: j.arity() });
    }
    if !j.is_jacobi() {
        return Err(Error::NotJacobi("the structure has a nonzero Jacobiator".into()));
    }
    let (k, m) = j.dims();
    if s.dims() != (k, m) {
        return Err(Error::ChartMismatch("section and structure live on different charts".into()));
    }
    let defining: Vec<ScalarFn> = (0..m).map(|a| &ScalarFn::fiber_var(k, m, a) - &s.components[a]).collect();
    let mut residues = Vec::new();
    for a in 0..m {
        for b in a + 1..m {
            let r = s.restrict(&j.eval(&[defining[a].clone(), defining[b].clone()])?);
            if !r.is_zero() {
                residues.push(((a, b), r));
            }
        }
    }
    Ok(CoisotropyReport { coisotropic: residues.is_empty(), residues })
}
