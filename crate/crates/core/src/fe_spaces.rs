//! Discontinuous Lagrange, Raviart-Thomas and Brezzi-Douglas-Marini spaces.
//!
//! H(div) bases are built directly on each physical cell as the dual basis of
//! the moment degrees of freedom:
//!
//! * facet moments `∫_F v·n_F q dS` with `q` a monomial in the barycentric
//!   parameters of `F` taken in ascending global vertex order, and `n_F` the
//!   facet's global normal;
//! * interior moments `s⁻¹ ∫_K v·p dx` with `p` from `P_{r-1}^d` (RT_r) or from
//!   the first-kind Nédélec space `P_{r-2}^d ⊕ {p ∈ H̃_{r-1}^d : p·ξ = 0}`
//!   (BDM_r).
//!
//! Polynomials are written in local coordinates `ξ = (x - x_K)/s_K` where
//! `x_K` is the centroid and `s_K` the longest edge. Because facet functionals
//! use the global facet orientation, the resulting basis functions are
//! already the global ones and need no sign flips; the result coincides with
//! the contravariant Piola push-forward of the reference dual basis. Cells that
//! are translates of each other with the same vertex ordering share one set of
//! coefficients.
//!
//! `P_disc` uses a per-cell `L²`-orthonormal basis, so its mass matrix is the
//! identity.

use std::collections::HashMap;
use std::sync::Arc;

use nalgebra::DMatrix;
use thiserror::Error;

use crate::mesh::Mesh;
use crate::polynomial::{count, homogeneous_exponents, Monomials};
use crate::quadrature::QuadratureRule;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ElementFamily {
    PDisc,
    RT,
    BDM,
}

/// Element family and order, using `RT_0` for the lowest Raviart-Thomas
/// space and `BDM_1` for the lowest BDM space.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ElementKind {
    pub family: ElementFamily,
    pub degree: usize,
}

#[derive(Debug, Error, PartialEq)]
pub enum FeError {
    #[error("unsupported element {0} in dimension {1}")]
    Unsupported(String, usize),
}

impl ElementKind {
    pub const fn p_disc(k: usize) -> Self {
        Self { family: ElementFamily::PDisc, degree: k }
    }
    pub const fn rt(k: usize) -> Self {
        Self { family: ElementFamily::RT, degree: k }
    }
    pub const fn bdm(k: usize) -> Self {
        Self { family: ElementFamily::BDM, degree: k }
    }

    pub fn is_hdiv(&self) -> bool {
        self.family != ElementFamily::PDisc
    }

    pub fn name(&self) -> String {
        match self.family {
            ElementFamily::PDisc => format!("P{}disc", self.degree),
            ElementFamily::RT => format!("RT{}", self.degree),
            ElementFamily::BDM => format!("BDM{}", self.degree),
        }
    }

    pub fn check(&self, dim: usize) -> Result<(), FeError> {
        let ok = (dim == 2 || dim == 3)
            && match self.family {
                ElementFamily::PDisc => self.degree <= 3,
                ElementFamily::RT => self.degree <= 2,
                ElementFamily::BDM => (1..=3).contains(&self.degree),
            };
        if ok {
            Ok(())
        } else {
            Err(FeError::Unsupported(self.name(), dim))
        }
    }

    /// Highest total degree of the local polynomials.
    pub fn poly_degree(&self) -> usize {
        match self.family {
            ElementFamily::RT => self.degree + 1,
            _ => self.degree,
        }
    }

    /// Degree of the divergence range (`P_disc` of this degree).
    pub fn div_degree(&self) -> Option<usize> {
        match self.family {
            ElementFamily::PDisc => None,
            ElementFamily::RT => Some(self.degree),
            ElementFamily::BDM => Some(self.degree - 1),
        }
    }

    /// Local dimension on a `dim`-simplex.
    pub fn local_dim(&self, dim: usize) -> usize {
        let r = self.degree;
        match self.family {
            ElementFamily::PDisc => count(dim, r),
            ElementFamily::BDM => dim * count(dim, r),
            ElementFamily::RT => dim * count(dim, r) + homogeneous_exponents(dim, r).len(),
        }
    }

    /// DOFs attached to each facet.
    pub fn facet_dofs(&self, dim: usize) -> usize {
        match self.family {
            ElementFamily::PDisc => 0,
            _ => count(dim - 1, self.degree),
        }
    }

    pub fn interior_dofs(&self, dim: usize) -> usize {
        self.local_dim(dim) - (dim + 1) * self.facet_dofs(dim)
    }
}

/// Coefficients of the local basis in monomials of `ξ`.
#[derive(Debug)]
struct LocalBasis {
    ncomp: usize,
    nbasis: usize,
    mono: Monomials,
    /// `coef[(j * ncomp + c) * nmono + m]`.
    coef: Vec<f64>,
}

/// Basis values at a set of points, indexed `[q * nbasis + j]`.
#[derive(Debug, Clone, Default)]
pub struct Tabulation {
    pub npts: usize,
    pub nbasis: usize,
    /// Vector value (H(div)) or value in component 0 (`P_disc`).
    pub values: Vec<[f64; 3]>,
    /// Divergence (H(div) only).
    pub divs: Vec<f64>,
    /// Gradient (`P_disc` only).
    pub grads: Vec<[f64; 3]>,
}

impl Tabulation {
    #[inline]
    pub fn value(&self, q: usize, j: usize) -> [f64; 3] {
        self.values[q * self.nbasis + j]
    }
    #[inline]
    pub fn div(&self, q: usize, j: usize) -> f64 {
        self.divs[q * self.nbasis + j]
    }
    #[inline]
    pub fn scalar(&self, q: usize, j: usize) -> f64 {
        self.values[q * self.nbasis + j][0]
    }
}

/// A scalar or vector element space, optionally stacked `multiplicity`
/// times (rows of a matrix field or components of a vector field). Copy `c`
/// of scalar DOF `i` has global index `c * n_scalar + i`.
#[derive(Debug, Clone)]
pub struct FiniteElementSpace {
    mesh: Arc<Mesh>,
    kind: ElementKind,
    multiplicity: usize,
    n_scalar: usize,
    local_dim: usize,
    cell_dofs: Vec<usize>,
    cell_signs: Vec<i8>,
    bases: Vec<Arc<LocalBasis>>,
    cell_basis: Vec<u32>,
    centers: Vec<[f64; 3]>,
    scales: Vec<f64>,
}

/// Physical quadrature points and weights on a cell.
pub fn cell_quadrature(mesh: &Mesh, cell: usize, rule: &QuadratureRule) -> (Vec<[f64; 3]>, Vec<f64>) {
    let map = mesh.affine_map(cell);
    let pts = rule.points.iter().map(|p| map.apply(p)).collect();
    let wts = rule.weights.iter().map(|w| w * map.det.abs()).collect();
    (pts, wts)
}

/// Physical quadrature on facet `f`, parametrised from its ascending
/// vertex order. Returns points, weights and the facet parameters.
pub fn facet_quadrature(
    mesh: &Mesh,
    f: usize,
    rule: &QuadratureRule,
) -> (Vec<[f64; 3]>, Vec<f64>, Vec<[f64; 3]>) {
    let verts: Vec<[f64; 3]> = mesh.facet(f).iter().map(|&v| mesh.vertex(v)).collect();
    let (pts, wts) = facet_points(&verts, mesh.facet_measure(f), rule);
    (pts, wts, rule.points.clone())
}

fn facet_points(verts: &[[f64; 3]], measure: f64, rule: &QuadratureRule) -> (Vec<[f64; 3]>, Vec<f64>) {
    let fd = verts.len() - 1;
    let fact = if fd == 2 { 2.0 } else { 1.0 };
    let mut pts = Vec::with_capacity(rule.len());
    let mut wts = Vec::with_capacity(rule.len());
    for (p, w) in rule.points.iter().zip(&rule.weights) {
        let mut x = verts[0];
        for i in 0..fd {
            for r in 0..3 {
                x[r] += p[i] * (verts[i + 1][r] - verts[0][r]);
            }
        }
        pts.push(x);
        wts.push(w * measure * fact);
    }
    (pts, wts)
}

impl FiniteElementSpace {
    pub fn new(mesh: Arc<Mesh>, kind: ElementKind, multiplicity: usize) -> Result<Self, FeError> {
        let dim = mesh.dim();
        kind.check(dim)?;
        let nc = mesh.num_cells();
        let local_dim = kind.local_dim(dim);
        let mut cell_dofs = Vec::with_capacity(nc * local_dim);
        let mut cell_signs = Vec::with_capacity(nc * local_dim);
        let n_scalar;
        if kind.is_hdiv() {
            let nf = kind.facet_dofs(dim);
            let ni = kind.interior_dofs(dim);
            let base = mesh.num_facets() * nf;
            n_scalar = base + nc * ni;
            for c in 0..nc {
                let facets = mesh.cell_facets(c);
                let signs = mesh.cell_facet_signs(c);
                for (f, s) in facets.iter().zip(signs) {
                    for j in 0..nf {
                        cell_dofs.push(f * nf + j);
                        cell_signs.push(*s);
                    }
                }
                for j in 0..ni {
                    cell_dofs.push(base + c * ni + j);
                    cell_signs.push(1);
                }
            }
        } else {
            n_scalar = nc * local_dim;
            for c in 0..nc {
                for j in 0..local_dim {
                    cell_dofs.push(c * local_dim + j);
                    cell_signs.push(1);
                }
            }
        }

        let mut cache: HashMap<Vec<i64>, u32> = HashMap::new();
        let mut bases = Vec::new();
        let mut cell_basis = Vec::with_capacity(nc);
        let mut centers = Vec::with_capacity(nc);
        let mut scales = Vec::with_capacity(nc);
        for c in 0..nc {
            let center = mesh.cell_centroid(c);
            let s = mesh.cell_diameter(c);
            let key = shape_key(&mesh, c, s);
            let idx = *cache.entry(key).or_insert_with(|| {
                let b = if kind.is_hdiv() {
                    build_hdiv(&mesh, c, kind, center, s)
                } else {
                    build_pdisc(&mesh, c, kind.degree, center, s)
                };
                bases.push(Arc::new(b));
                (bases.len() - 1) as u32
            });
            cell_basis.push(idx);
            centers.push(center);
            scales.push(s);
        }
        Ok(Self {
            mesh,
            kind,
            multiplicity,
            n_scalar,
            local_dim,
            cell_dofs,
            cell_signs,
            bases,
            cell_basis,
            centers,
            scales,
        })
    }

    pub fn mesh(&self) -> &Arc<Mesh> {
        &self.mesh
    }
    pub fn kind(&self) -> ElementKind {
        self.kind
    }
    pub fn dim(&self) -> usize {
        self.mesh.dim()
    }
    pub fn multiplicity(&self) -> usize {
        self.multiplicity
    }
    /// DOFs of one copy.
    pub fn n_scalar_dofs(&self) -> usize {
        self.n_scalar
    }
    pub fn n_dofs(&self) -> usize {
        self.n_scalar * self.multiplicity
    }
    pub fn local_dim(&self) -> usize {
        self.local_dim
    }

    /// Global scalar DOFs of a cell.
    pub fn cell_dofs(&self, c: usize) -> &[usize] {
        &self.cell_dofs[c * self.local_dim..(c + 1) * self.local_dim]
    }

    /// Orientation signs of the cell's DOFs relative to the global facet
    /// orientation. They are informational: the basis already carries them.
    pub fn cell_signs(&self, c: usize) -> &[i8] {
        &self.cell_signs[c * self.local_dim..(c + 1) * self.local_dim]
    }

    pub fn global_dof(&self, copy: usize, scalar: usize) -> usize {
        copy * self.n_scalar + scalar
    }

    /// Number of distinct local bases (congruence classes of cells).
    pub fn n_distinct_bases(&self) -> usize {
        self.bases.len()
    }

    /// Basis functions of `cell` at physical points.
    pub fn tabulate(&self, cell: usize, points: &[[f64; 3]]) -> Tabulation {
        let b = &self.bases[self.cell_basis[cell] as usize];
        let center = self.centers[cell];
        let s = self.scales[cell];
        let dim = self.dim();
        let nm = b.mono.len();
        let mut mv = vec![0.0; nm];
        let mut mg = vec![[0.0; 3]; nm];
        let nb = b.nbasis;
        let hdiv = self.kind.is_hdiv();
        let mut tab = Tabulation {
            npts: points.len(),
            nbasis: nb,
            values: vec![[0.0; 3]; points.len() * nb],
            divs: if hdiv { vec![0.0; points.len() * nb] } else { Vec::new() },
            grads: if hdiv { Vec::new() } else { vec![[0.0; 3]; points.len() * nb] },
        };
        for (q, x) in points.iter().enumerate() {
            let mut xi = [0.0; 3];
            for r in 0..dim {
                xi[r] = (x[r] - center[r]) / s;
            }
            b.mono.eval(&xi, &mut mv);
            b.mono.eval_grad(&xi, &mut mg);
            for j in 0..nb {
                let mut val = [0.0; 3];
                if hdiv {
                    let mut div = 0.0;
                    for c in 0..b.ncomp {
                        let row = &b.coef[(j * b.ncomp + c) * nm..(j * b.ncomp + c + 1) * nm];
                        let mut v = 0.0;
                        let mut d = 0.0;
                        for m in 0..nm {
                            v += row[m] * mv[m];
                            d += row[m] * mg[m][c];
                        }
                        val[c] = v;
                        div += d;
                    }
                    tab.divs[q * nb + j] = div / s;
                } else {
                    let row = &b.coef[j * nm..(j + 1) * nm];
                    let mut g = [0.0; 3];
                    for m in 0..nm {
                        val[0] += row[m] * mv[m];
                        for r in 0..dim {
                            g[r] += row[m] * mg[m][r];
                        }
                    }
                    for gr in g.iter_mut() {
                        *gr /= s;
                    }
                    tab.grads[q * nb + j] = g;
                }
                tab.values[q * nb + j] = val;
            }
        }
        tab
    }

    /// Basis functions at reference-simplex points mapped onto `cell`.
    pub fn tabulate_reference(&self, cell: usize, ref_points: &[[f64; 3]]) -> Tabulation {
        let map = self.mesh.affine_map(cell);
        let pts: Vec<[f64; 3]> = ref_points.iter().map(|p| map.apply(p)).collect();
        self.tabulate(cell, &pts)
    }

    /// Local coefficients of copy `copy` on `cell`.
    pub fn local_coeffs(&self, coeffs: &[f64], copy: usize, cell: usize) -> Vec<f64> {
        let off = copy * self.n_scalar;
        self.cell_dofs(cell).iter().map(|&d| coeffs[off + d]).collect()
    }

    /// Value (and divergence or gradient) of copy `copy` of a global function.
    pub fn evaluate(
        &self,
        coeffs: &[f64],
        copy: usize,
        cell: usize,
        points: &[[f64; 3]],
    ) -> Vec<([f64; 3], [f64; 3])> {
        let tab = self.tabulate(cell, points);
        let loc = self.local_coeffs(coeffs, copy, cell);
        let hdiv = self.kind.is_hdiv();
        (0..points.len())
            .map(|q| {
                let mut v = [0.0; 3];
                let mut d = [0.0; 3];
                for (j, a) in loc.iter().enumerate() {
                    let bv = tab.value(q, j);
                    for r in 0..3 {
                        v[r] += a * bv[r];
                    }
                    if hdiv {
                        d[0] += a * tab.div(q, j);
                    } else {
                        let g = tab.grads[q * tab.nbasis + j];
                        for r in 0..3 {
                            d[r] += a * g[r];
                        }
                    }
                }
                (v, d)
            })
            .collect()
    }

    /// Canonical moment interpolant of a field. For H(div) kinds `field`
    /// returns one vector per copy (rows of a matrix field); for `P_disc`
    /// the result is the `L²` projection and `field` returns one scalar per
    /// copy in component `copy` of the returned array.
    pub fn interpolate(
        &self,
        field: &dyn Fn(&[f64; 3]) -> [[f64; 3]; 3],
        quad_degree: usize,
    ) -> Vec<f64> {
        if !self.kind.is_hdiv() {
            return self.l2_project(&|x| {
                let v = field(x);
                [v[0][0], v[1][0], v[2][0]]
            }, quad_degree);
        }
        let dim = self.dim();
        let mesh = &*self.mesh;
        let nf = self.kind.facet_dofs(dim);
        let ni = self.kind.interior_dofs(dim);
        let r = self.kind.degree;
        let mut out = vec![0.0; self.n_dofs()];
        let frule = QuadratureRule::simplex(dim - 1, quad_degree);
        let fmono = Monomials::new(dim - 1, r);
        let mut qv = vec![0.0; fmono.len()];
        for f in 0..mesh.num_facets() {
            let (pts, wts, params) = facet_quadrature(mesh, f, &frule);
            let n = mesh.facet_normal(f);
            for ((x, w), p) in pts.iter().zip(&wts).zip(&params) {
                let val = field(x);
                fmono.eval(p, &mut qv);
                for copy in 0..self.multiplicity {
                    let vn: f64 = (0..dim).map(|i| val[copy][i] * n[i]).sum();
                    for j in 0..nf {
                        out[copy * self.n_scalar + f * nf + j] += w * vn * qv[j];
                    }
                }
            }
        }
        if ni > 0 {
            let crule = QuadratureRule::simplex(dim, quad_degree);
            let tests = interior_tests(dim, self.kind);
            let base = mesh.num_facets() * nf;
            for c in 0..mesh.num_cells() {
                let (pts, wts) = cell_quadrature(mesh, c, &crule);
                let center = self.centers[c];
                let s = self.scales[c];
                let mut tv = vec![[0.0; 3]; tests.len()];
                for (x, w) in pts.iter().zip(&wts) {
                    let val = field(x);
                    let xi = local_xi(x, &center, s, dim);
                    tests.eval(&xi, &mut tv);
                    for copy in 0..self.multiplicity {
                        for (j, t) in tv.iter().enumerate() {
                            let dot: f64 = (0..dim).map(|i| val[copy][i] * t[i]).sum();
                            out[copy * self.n_scalar + base + c * ni + j] += w * dot / s;
                        }
                    }
                }
            }
        }
        out
    }

    /// `L²` projection onto a `P_disc` space, one scalar per copy.
    pub fn l2_project(&self, field: &dyn Fn(&[f64; 3]) -> [f64; 3], quad_degree: usize) -> Vec<f64> {
        assert!(!self.kind.is_hdiv(), "l2_project is implemented for P_disc spaces");
        let mesh = &*self.mesh;
        let rule = QuadratureRule::simplex(self.dim(), quad_degree);
        let mut out = vec![0.0; self.n_dofs()];
        for c in 0..mesh.num_cells() {
            let (pts, wts) = cell_quadrature(mesh, c, &rule);
            let tab = self.tabulate(c, &pts);
            let dofs = self.cell_dofs(c);
            for (q, (x, w)) in pts.iter().zip(&wts).enumerate() {
                let v = field(x);
                for copy in 0..self.multiplicity {
                    for (j, &d) in dofs.iter().enumerate() {
                        out[copy * self.n_scalar + d] += w * v[copy] * tab.scalar(q, j);
                    }
                }
            }
        }
        out
    }
}

fn local_xi(x: &[f64; 3], center: &[f64; 3], s: f64, dim: usize) -> [f64; 3] {
    let mut xi = [0.0; 3];
    for r in 0..dim {
        xi[r] = (x[r] - center[r]) / s;
    }
    xi
}

/// Key identifying cells with identical local bases: edge vectors scaled
/// by the diameter and, per facet, the ascending global vertex order.
fn shape_key(mesh: &Mesh, c: usize, s: f64) -> Vec<i64> {
    let dim = mesh.dim();
    let v = mesh.cell(c);
    let x0 = mesh.vertex(v[0]);
    let mut key = Vec::new();
    key.push((s * 1e9).round() as i64);
    for &vi in &v[1..] {
        let x = mesh.vertex(vi);
        for r in 0..dim {
            key.push(((x[r] - x0[r]) / s * (1u64 << 30) as f64).round() as i64);
        }
    }
    let mut order: Vec<usize> = (0..=dim).collect();
    order.sort_by_key(|&i| v[i]);
    key.extend(order.iter().map(|&i| i as i64));
    key
}

/// Vector polynomials with coefficients over a monomial set.
struct VecPolys {
    dim: usize,
    mono: Monomials,
    /// `coef[(i * dim + c) * nmono + m]`.
    coef: Vec<f64>,
    n: usize,
}

impl VecPolys {
    fn new(dim: usize, degree: usize) -> Self {
        Self { dim, mono: Monomials::new(dim, degree), coef: Vec::new(), n: 0 }
    }

    fn push(&mut self, terms: &[(usize, [u8; 3], f64)]) {
        let nm = self.mono.len();
        let mut row = vec![0.0; self.dim * nm];
        for &(c, e, a) in terms {
            let m = self.mono.index_of(e).expect("monomial in range");
            row[c * nm + m] += a;
        }
        self.coef.extend(row);
        self.n += 1;
    }

    fn len(&self) -> usize {
        self.n
    }

    fn eval(&self, xi: &[f64; 3], out: &mut [[f64; 3]]) {
        let nm = self.mono.len();
        let mut mv = vec![0.0; nm];
        self.mono.eval(xi, &mut mv);
        for (i, o) in out.iter_mut().enumerate().take(self.n) {
            *o = [0.0; 3];
            for c in 0..self.dim {
                let row = &self.coef[(i * self.dim + c) * nm..(i * self.dim + c + 1) * nm];
                o[c] = row.iter().zip(&mv).map(|(a, b)| a * b).sum();
            }
        }
    }
}

fn add_exp(e: [u8; 3], c: usize) -> [u8; 3] {
    let mut e = e;
    e[c] += 1;
    e
}

/// Prime basis of the element: `P_r^d` (BDM_r) or `P_r^d ⊕ ξ H̃_r` (RT_r).
fn prime_basis(dim: usize, kind: ElementKind) -> VecPolys {
    let r = kind.degree;
    let mut vp = VecPolys::new(dim, kind.poly_degree());
    let low = Monomials::new(dim, r);
    for c in 0..dim {
        for &e in &low.exps {
            vp.push(&[(c, e, 1.0)]);
        }
    }
    if kind.family == ElementFamily::RT {
        for h in homogeneous_exponents(dim, r) {
            let terms: Vec<_> = (0..dim).map(|c| (c, add_exp(h, c), 1.0)).collect();
            vp.push(&terms);
        }
    }
    vp
}

/// Test functions for the interior moments.
fn interior_tests(dim: usize, kind: ElementKind) -> VecPolys {
    let r = kind.degree;
    match kind.family {
        ElementFamily::RT => {
            let tdeg = r.saturating_sub(1);
            let mut vp = VecPolys::new(dim, tdeg);
            if r >= 1 {
                let m = Monomials::new(dim, r - 1);
                for c in 0..dim {
                    for &e in &m.exps {
                        vp.push(&[(c, e, 1.0)]);
                    }
                }
            }
            vp
        }
        ElementFamily::BDM => {
            let mut vp = VecPolys::new(dim, r - 1);
            if r >= 2 {
                let m = Monomials::new(dim, r - 2);
                for c in 0..dim {
                    for &e in &m.exps {
                        vp.push(&[(c, e, 1.0)]);
                    }
                }
                let hs = homogeneous_exponents(dim, r - 2);
                if dim == 2 {
                    for h in hs {
                        vp.push(&[(0, add_exp(h, 1), -1.0), (1, add_exp(h, 0), 1.0)]);
                    }
                } else {
                    // ξ × (e_c h); these span the kernel-free part after
                    // dropping dependent columns (ξ × ξ h' = 0).
                    let mut cand = VecPolys::new(dim, r - 1);
                    for &h in &hs {
                        cand.push(&[(1, add_exp(h, 2), 1.0), (2, add_exp(h, 1), -1.0)]);
                        cand.push(&[(0, add_exp(h, 2), -1.0), (2, add_exp(h, 0), 1.0)]);
                        cand.push(&[(0, add_exp(h, 1), 1.0), (1, add_exp(h, 0), -1.0)]);
                    }
                    let len = dim * cand.mono.len();
                    let mut basis: Vec<Vec<f64>> = Vec::new();
                    for i in 0..cand.len() {
                        let mut v = cand.coef[i * len..(i + 1) * len].to_vec();
                        for b in &basis {
                            let d: f64 = v.iter().zip(b).map(|(x, y)| x * y).sum();
                            for (x, y) in v.iter_mut().zip(b) {
                                *x -= d * y;
                            }
                        }
                        let nrm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
                        if nrm > 1e-10 {
                            basis.push(v.iter().map(|x| x / nrm).collect());
                            vp.coef.extend(&cand.coef[i * len..(i + 1) * len]);
                            vp.n += 1;
                        }
                    }
                }
            }
            vp
        }
        ElementFamily::PDisc => unreachable!(),
    }
}

fn build_hdiv(mesh: &Mesh, c: usize, kind: ElementKind, center: [f64; 3], s: f64) -> LocalBasis {
    let dim = mesh.dim();
    let r = kind.degree;
    let prime = prime_basis(dim, kind);
    let n = prime.len();
    assert_eq!(n, kind.local_dim(dim));
    let mut m = DMatrix::<f64>::zeros(n, n);
    let mut gv = vec![[0.0; 3]; n];

    let cell = mesh.cell(c);
    let facets = mesh.cell_facets(c);
    let nf = kind.facet_dofs(dim);
    let frule = QuadratureRule::simplex(dim - 1, 2 * r + 2);
    let fmono = Monomials::new(dim - 1, r);
    let mut qv = vec![0.0; fmono.len()];
    let mut row = 0;
    for (i, &f) in facets.iter().enumerate() {
        let mut fv: Vec<usize> = (0..=dim).filter(|&j| j != i).map(|j| cell[j]).collect();
        fv.sort_unstable();
        debug_assert_eq!(fv.as_slice(), mesh.facet(f));
        let verts: Vec<[f64; 3]> = fv.iter().map(|&v| mesh.vertex(v)).collect();
        let (pts, wts) = facet_points(&verts, mesh.facet_measure(f), &frule);
        let nrm = mesh.facet_normal(f);
        for ((x, w), p) in pts.iter().zip(&wts).zip(&frule.points) {
            let xi = local_xi(x, &center, s, dim);
            prime.eval(&xi, &mut gv);
            fmono.eval(p, &mut qv);
            for (a, g) in gv.iter().enumerate() {
                let gn: f64 = (0..dim).map(|k| g[k] * nrm[k]).sum();
                for j in 0..nf {
                    m[(row + j, a)] += w * gn * qv[j];
                }
            }
        }
        row += nf;
    }
    let tests = interior_tests(dim, kind);
    if tests.len() > 0 {
        let crule = QuadratureRule::simplex(dim, 2 * kind.poly_degree());
        let (pts, wts) = cell_quadrature(mesh, c, &crule);
        let mut tv = vec![[0.0; 3]; tests.len()];
        for (x, w) in pts.iter().zip(&wts) {
            let xi = local_xi(x, &center, s, dim);
            prime.eval(&xi, &mut gv);
            tests.eval(&xi, &mut tv);
            for (a, g) in gv.iter().enumerate() {
                for (j, t) in tv.iter().enumerate() {
                    let d: f64 = (0..dim).map(|k| g[k] * t[k]).sum();
                    m[(row + j, a)] += w * d / s;
                }
            }
        }
        row += tests.len();
    }
    assert_eq!(row, n, "dof count mismatch for {}", kind.name());
    let inv = m.lu().try_inverse().expect("unisolvent degrees of freedom");
    let nm = prime.mono.len();
    let mut coef = vec![0.0; n * dim * nm];
    for j in 0..n {
        for a in 0..n {
            let w = inv[(a, j)];
            if w == 0.0 {
                continue;
            }
            for k in 0..dim * nm {
                coef[j * dim * nm + k] += w * prime.coef[a * dim * nm + k];
            }
        }
    }
    LocalBasis { ncomp: dim, nbasis: n, mono: prime.mono, coef }
}

fn build_pdisc(mesh: &Mesh, c: usize, k: usize, center: [f64; 3], s: f64) -> LocalBasis {
    let dim = mesh.dim();
    let mono = Monomials::new(dim, k);
    let n = mono.len();
    let rule = QuadratureRule::simplex(dim, 2 * k);
    let (pts, wts) = cell_quadrature(mesh, c, &rule);
    let mut g = DMatrix::<f64>::zeros(n, n);
    let mut mv = vec![0.0; n];
    for (x, w) in pts.iter().zip(&wts) {
        mono.eval(&local_xi(x, &center, s, dim), &mut mv);
        for a in 0..n {
            for b in 0..n {
                g[(a, b)] += w * mv[a] * mv[b];
            }
        }
    }
    let l = g.cholesky().expect("monomial Gram matrix is SPD").l();
    let linv = l.try_inverse().expect("nonsingular Cholesky factor");
    let mut coef = vec![0.0; n * n];
    for j in 0..n {
        for m in 0..n {
            coef[j * n + m] = linv[(j, m)];
        }
    }
    LocalBasis { ncomp: 1, nbasis: n, mono, coef }
}
