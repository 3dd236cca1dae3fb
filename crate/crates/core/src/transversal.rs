//! Multibrackets of a coisotropic submanifold of a contact manifold from the
//! transversal geometry of its characteristic foliation: the matrices `W`,
//! `F^i` and the jet prolongation along a complement `G` of the leaves.
//!
//! Frame indices run over `(bullet, a_1 .. a_2n, circ)`: `bullet` is the
//! unit jet, `a` the transverse frame `G_a`, `circ` the Reeb-type field `G`.

use crate::error::{Error, Result};
use crate::geom::{invert_unit_matrix, DiffForm};
use crate::linfty::LeafForm;
use crate::multider::MultiVectorField;
use crate::ring::{Chart, ScalarFn};

pub type Matrix = Vec<Vec<ScalarFn>>;

fn zeros(n: usize, k: usize, m: usize) -> Matrix {
    vec![vec![ScalarFn::zero(k, m); n]; n]
}

pub fn mat_mul(a: &Matrix, b: &Matrix) -> Matrix {
    let n = a.len();
    let (k, m) = a[0][0].dims();
    let mut out = zeros(n, k, m);
    for i in 0..n {
        for l in 0..n {
            if a[i][l].is_zero() {
                continue;
            }
            for j in 0..n {
                if !b[l][j].is_zero() {
                    out[i][j] = &out[i][j] + &(&a[i][l] * &b[l][j]);
                }
            }
        }
    }
    out
}

pub fn is_identity(a: &Matrix) -> bool {
    a.iter().enumerate().all(|(i, row)| {
        row.iter().enumerate().all(|(j, x)| if i == j { x.as_constant().is_some_and(|c| c.is_one()) } else { x.is_zero() })
    })
}

/// A leaf-form argument of a multibracket: `d_F x^i (x) mu` or `f mu`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Generator {
    /// `d_F x^i`, `i` a leaf index (paired with fiber `i`).
    Dx(usize),
    Function(ScalarFn),
}

impl Generator {
    pub fn to_leaf_form(&self, k: usize, m: usize) -> LeafForm {
        match self {
            Generator::Dx(i) => LeafForm::monomial(&[*i], ScalarFn::one(k, m)),
            Generator::Function(f) => LeafForm::function(f.clone()),
        }
    }
}

#[derive(Clone, Debug)]
pub struct TransversalData {
    pub chart: Chart,
    /// `G_a` then `G`, vector fields on the zero section.
    pub frame: Vec<MultiVectorField>,
    pub w: Matrix,
    pub w_inv: Matrix,
    /// One matrix per leaf coordinate.
    pub f: Vec<Matrix>,
}

impl TransversalData {
    pub fn new(chart: Chart, frame: Vec<MultiVectorField>, w: Matrix, f: Vec<Matrix>) -> Result<Self> {
        let (k, m) = chart.dims();
        if !chart.has_leaf_pairing() {
            return Err(Error::Precondition("transversal data needs a fiber/leaf pairing".into()));
        }
        let n = frame.len() + 1;
        if frame.len() % 2 == 0 {
            return Err(Error::Malformed("the transverse frame must have odd length 2n+1".into()));
        }
        for g in &frame {
            if g.dims() != (k, m) || g.degree() != 1 {
                return Err(Error::Malformed("frame entries must be vector fields on the chart".into()));
            }
            for (idx, c) in g.terms() {
                if idx[0] >= k || !c.is_base_only() {
                    return Err(Error::Malformed("frame fields must be tangent to the zero section".into()));
                }
            }
        }
        let square = |a: &Matrix| a.len() == n && a.iter().all(|r| r.len() == n && r.iter().all(|x| x.dims() == (k, m)));
        if !square(&w) || f.len() != m || !f.iter().all(square) {
            return Err(Error::Malformed(format!("W and each F^i must be {n}x{n}, with one F^i per leaf")));
        }
        let c = n - 1;
        for a in 0..n {
            for b in 0..n {
                if w[a][b] != -&w[b][a] {
                    return Err(Error::Malformed("W is not skew-symmetric".into()));
                }
            }
        }
        if !w[0][c].as_constant().is_some_and(|x| x == -crate::ring::GaussianRational::one()) {
            return Err(Error::Malformed("W must have -1 in the (bullet, circ) slot".into()));
        }
        if (1..n).any(|a| !w[c][a].is_zero()) {
            return Err(Error::Malformed("W must vanish on (circ, a) and (circ, circ)".into()));
        }
        for fi in &f {
            let ok = (0..n).all(|a| fi[0][a].is_zero() && fi[a][0].is_zero())
                && fi[c][c].is_zero()
                && (1..c).all(|a| fi[c][a] == -&fi[a][c])
                && (1..c).all(|a| (1..c).all(|b| fi[a][b] == -&fi[b][a]));
            if !ok {
                return Err(Error::Malformed("F^i violates its block pattern".into()));
            }
        }
        let w_inv = invert_unit_matrix(&w, k, m, "W")?;
        Ok(Self { chart, frame, w, w_inv, f })
    }

    /// Builds `W` and `F^i` from a pre-contact form on the zero section and a
    /// complement frame `G_a, G`. The frame's transverse parts must be
    /// independent of the leaf coordinates.
    pub fn from_contact_frame(chart: Chart, theta: &DiffForm, frame: Vec<MultiVectorField>) -> Result<Self> {
        let (k, m) = chart.dims();
        let leaf = chart.leaf_coords.clone();
        let trans: Vec<usize> = (0..k).filter(|c| !leaf.contains(c)).collect();
        if trans.len() != frame.len() {
            return Err(Error::Malformed(format!(
                "{} transverse coordinates but {} frame fields",
                trans.len(),
                frame.len()
            )));
        }
        let n = frame.len() + 1;
        for g in &frame {
            for &t in &trans {
                let coef = g.coeff(&[t]);
                if leaf.iter().any(|&l| coef.depends_on_torus(l)) {
                    return Err(Error::Precondition("transverse frame depends on leaf coordinates".into()));
                }
            }
        }
        let th: Vec<ScalarFn> = frame.iter().map(|g| theta.pair(g)).collect();
        let dtheta = |x: &MultiVectorField, y: &MultiVectorField| {
            &(&x.apply(&theta.pair(y)) - &y.apply(&theta.pair(x))) - &theta.pair(&x.sn_bracket(y))
        };
        let mut w = zeros(n, k, m);
        for a in 0..frame.len() {
            w[0][a + 1] = -&th[a];
            w[a + 1][0] = th[a].clone();
            for b in 0..frame.len() {
                w[a + 1][b + 1] = -dtheta(&frame[a], &frame[b]);
            }
        }
        // leaf parts of frame brackets after removing their span in the frame
        let tmat: Matrix = frame.iter().map(|g| trans.iter().map(|&t| g.coeff(&[t])).collect()).collect();
        let tinv = invert_unit_matrix(&tmat, k, m, "transverse frame")?;
        let mut f = vec![zeros(n, k, m); leaf.len()];
        for a in 0..frame.len() {
            for b in 0..frame.len() {
                let v = frame[a].sn_bracket(&frame[b]);
                let vt: Vec<ScalarFn> = trans.iter().map(|&t| v.coeff(&[t])).collect();
                let coef: Vec<ScalarFn> = (0..frame.len())
                    .map(|g| (0..trans.len()).fold(ScalarFn::zero(k, m), |acc, t| &acc + &(&vt[t] * &tinv[t][g])))
                    .collect();
                for (i, &l) in leaf.iter().enumerate() {
                    let mut x = v.coeff(&[l]);
                    for (g, cg) in coef.iter().enumerate() {
                        x = &x - &(cg * &frame[g].coeff(&[l]));
                    }
                    f[i][a + 1][b + 1] = x;
                }
            }
        }
        Self::new(chart, frame, w, f)
    }

    pub fn dims(&self) -> (usize, usize) {
        self.chart.dims()
    }

    pub fn size(&self) -> usize {
        self.frame.len() + 1
    }

    /// `Y^{i_1..i_k} = W^{-1} F^{i_1} W^{-1} .. F^{i_k} W^{-1}`.
    pub fn y_matrix(&self, indices: &[usize]) -> Result<Matrix> {
        let mut out = self.w_inv.clone();
        for &i in indices {
            let fi = self.f.get(i).ok_or_else(|| Error::Malformed(format!("no leaf index {i}")))?;
            out = mat_mul(&mat_mul(&out, fi), &self.w_inv);
        }
        Ok(out)
    }

    fn frame_apply(&self, alpha: usize, f: &ScalarFn) -> ScalarFn {
        self.frame[alpha].apply(f)
    }

    /// `G^i_alpha`, the leaf component `i` of frame field `alpha`.
    fn g_leaf(&self, alpha: usize, i: usize) -> ScalarFn {
        self.frame[alpha].coeff(&[self.chart.leaf_coords[i]])
    }

    /// `j^1_G(f mu)_alpha = (f, G_a f, G f)`.
    pub fn j1_function(&self, f: &ScalarFn) -> Vec<ScalarFn> {
        let mut out = vec![f.clone()];
        out.extend((0..self.frame.len()).map(|a| self.frame_apply(a, f)));
        out
    }

    /// `j^1_G(d_F x^i (x) mu)_{h alpha} = (delta^i_h, d_h G^i_a, d_h G^i)`.
    pub fn j1_dx(&self, i: usize) -> Vec<Vec<ScalarFn>> {
        let (k, m) = self.dims();
        (0..m)
            .map(|h| {
                let mut row = vec![if h == i { ScalarFn::one(k, m) } else { ScalarFn::zero(k, m) }];
                row.extend((0..self.frame.len()).map(|a| self.g_leaf(a, i).partial_torus(self.chart.leaf_coords[h])));
                row
            })
            .collect()
    }

    fn pair(&self, y: &Matrix, u: &[ScalarFn], v: &[ScalarFn]) -> ScalarFn {
        let (k, m) = self.dims();
        let mut out = ScalarFn::zero(k, m);
        for (a, ua) in u.iter().enumerate() {
            if ua.is_zero() {
                continue;
            }
            for (b, vb) in v.iter().enumerate() {
                if !vb.is_zero() && !y[a][b].is_zero() {
                    out = &out + &(&(ua * vb) * &y[a][b]);
                }
            }
        }
        out
    }

    /// `m_k` on generators by the transversal formulas.
    pub fn multibracket(&self, args: &[Generator]) -> Result<LeafForm> {
        let (k, m) = self.dims();
        if args.is_empty() {
            return Err(Error::ArityMismatch { expected: 1, got: 0 });
        }
        let mut dx = Vec::new();
        let mut fs = Vec::new();
        for g in args {
            match g {
                Generator::Dx(i) if *i < m => dx.push(*i),
                Generator::Dx(i) => return Err(Error::Malformed(format!("leaf index {i} out of range"))),
                Generator::Function(f) if f.dims() == (k, m) && f.is_base_only() => fs.push(f.clone()),
                Generator::Function(_) => return Err(Error::Malformed("function argument must live on the zero section".into())),
            }
        }
        if args.len() == 1 {
            return Ok(match &args[0] {
                Generator::Dx(_) => LeafForm::zero(k, m, 2),
                Generator::Function(f) => {
                    let mut out = LeafForm::zero(k, m, 1);
                    for (h, &l) in self.chart.leaf_coords.iter().enumerate() {
                        out.add_term(&[h], f.partial_torus(l));
                    }
                    out
                }
            });
        }
        match fs.len() {
            0 => {
                let mut out = LeafForm::zero(k, m, 2);
                for perm in permutations(dx.len()) {
                    let idx: Vec<usize> = perm.iter().map(|&p| dx[p]).collect();
                    let n = idx.len();
                    let y = self.y_matrix(&idx[..n - 2])?;
                    let (u, v) = (self.j1_dx(idx[n - 2]), self.j1_dx(idx[n - 1]));
                    for s in 0..m {
                        for t in 0..m {
                            if s != t {
                                out.add_term(&[s, t], self.pair(&y, &u[s], &v[t]).scale_ratio(1, 2));
                            }
                        }
                    }
                }
                Ok(out)
            }
            1 => {
                let jf = self.j1_function(&fs[0]);
                let mut out = LeafForm::zero(k, m, 1);
                for perm in permutations(dx.len()) {
                    let idx: Vec<usize> = perm.iter().map(|&p| dx[p]).collect();
                    let n = idx.len();
                    let y = self.y_matrix(&idx[..n - 1])?;
                    let v = self.j1_dx(idx[n - 1]);
                    for s in 0..m {
                        out.add_term(&[s], -self.pair(&y, &jf, &v[s]));
                    }
                }
                Ok(out)
            }
            2 => {
                let (jf, jg) = (self.j1_function(&fs[0]), self.j1_function(&fs[1]));
                let mut out = ScalarFn::zero(k, m);
                for perm in permutations(dx.len()) {
                    let idx: Vec<usize> = perm.iter().map(|&p| dx[p]).collect();
                    out = &out - &self.pair(&self.y_matrix(&idx)?, &jf, &jg);
                }
                Ok(LeafForm::function(out))
            }
            _ => Ok(LeafForm::zero(k, m, 0)),
        }
    }

    /// `d_G f = (G_a f, G f)` in the coframe dual to the complement frame.
    pub fn d_g(&self, f: &ScalarFn) -> Vec<ScalarFn> {
        (0..self.frame.len()).map(|a| self.frame_apply(a, f)).collect()
    }

    /// The extension `epsilon` of `d_G` commuting with `d_F`: one leaf form per transverse covector.
    pub fn dg_extension(&self, tau: &LeafForm) -> Vec<LeafForm> {
        let (k, m) = self.dims();
        let mut out = vec![LeafForm::zero(k, m, tau.degree()); self.frame.len()];
        for (idx, c) in tau.terms() {
            for (a, slot) in out.iter_mut().enumerate() {
                slot.add_term(idx, self.frame_apply(a, c));
                for r in 0..idx.len() {
                    let ga = self.g_leaf(a, idx[r]);
                    for (h, &l) in self.chart.leaf_coords.iter().enumerate() {
                        let d = ga.partial_torus(l);
                        if d.is_zero() {
                            continue;
                        }
                        let mut j = idx.clone();
                        j[r] = h;
                        slot.add_term(&j, c * &d);
                    }
                }
            }
        }
        out
    }

    /// The extension `delta` of `j^1_G` commuting with `d_F`: components `(bullet, a.., circ)`.
    pub fn j1g_prolong(&self, omega: &LeafForm) -> Vec<LeafForm> {
        let mut out = vec![omega.clone()];
        out.extend(self.dg_extension(omega));
        out
    }
}

/// Leafwise differential applied componentwise to frame-valued forms.
pub fn leafwise_d_components(forms: &[LeafForm], chart: &Chart) -> Result<Vec<LeafForm>> {
    forms.iter().map(|w| crate::linfty::leafwise_d(w, chart)).collect()
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur: Vec<usize> = (0..n).collect();
    heap(n, &mut cur, &mut out);
    out
}

fn heap(n: usize, a: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
    if n <= 1 {
        out.push(a.clone());
        return;
    }
    for i in 0..n - 1 {
        heap(n - 1, a, out);
        if n % 2 == 0 {
            a.swap(i, n - 1);
        } else {
            a.swap(0, n - 1);
        }
    }
    heap(n - 1, a, out);
}
