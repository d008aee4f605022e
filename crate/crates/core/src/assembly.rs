//! Discrete saddle-point systems for the strongly and weakly coupled
//! families.
//!
//! Unknowns are ordered `p = (σ, ω)` and `u = (u, r)`. Each matrix field is
//! stored row by row, one H(div) copy per row; in 2D the couple stress is the
//! single row 2 and the rotation the single component 2. The assembled system
//! is
//!
//! ```text
//! [ M_A  -Bᵀ ] [p]   [ 0 ]
//! [ B     0  ] [u] = [ f ]
//! ```
//!
//! with `M_A` the material mass form and `B` the weak form of
//! `S_ℓ p = (-∇·σ, Sσ - ∇·(ℓω))`. The strongly coupled family uses `ℓ ≡ 1`
//! in `B` and `A_ω = ℓ⁻² Ã_ω` in `M_A`; the weakly coupled family works with
//! `ω̃ = ℓ⁻¹ω` and `Ã_ω`.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use nalgebra::{Matrix3, Vector3};
use rayon::prelude::*;
use thiserror::Error;

use crate::cosserat_core::{affine_gradient, asym, ExactFields, MaterialError, MaterialModel};
use crate::fe_spaces::{cell_quadrature, ElementFamily, ElementKind, FeError, FiniteElementSpace};
use crate::mesh::Mesh;
use crate::quadrature::QuadratureRule;
use crate::sparse::CsrMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Family {
    SC,
    WC,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum WKind {
    RT,
    BDM,
}

/// One of the four element families.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Method {
    pub family: Family,
    pub w_kind: WKind,
}

impl Method {
    pub const SC_RT: Method = Method { family: Family::SC, w_kind: WKind::RT };
    pub const SC_BDM: Method = Method { family: Family::SC, w_kind: WKind::BDM };
    pub const WC_RT: Method = Method { family: Family::WC, w_kind: WKind::RT };
    pub const WC_BDM: Method = Method { family: Family::WC, w_kind: WKind::BDM };
    pub const ALL: [Method; 4] = [Self::SC_RT, Self::SC_BDM, Self::WC_RT, Self::WC_BDM];

    pub fn name(&self) -> &'static str {
        match (self.family, self.w_kind) {
            (Family::SC, WKind::RT) => "SC-RT",
            (Family::SC, WKind::BDM) => "SC-BDM",
            (Family::WC, WKind::RT) => "WC-RT",
            (Family::WC, WKind::BDM) => "WC-BDM",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.pad(self.name())
    }
}

impl FromStr for Method {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        Method::ALL
            .iter()
            .find(|m| m.name().eq_ignore_ascii_case(s))
            .copied()
            .ok_or_else(|| format!("unknown family {s:?} (expected SC-RT, SC-BDM, WC-RT or WC-BDM)"))
    }
}

/// `W_k`: `RT_k` or `BDM_{k+1}`.
fn w_space(w: WKind, k: usize) -> ElementKind {
    match w {
        WKind::RT => ElementKind::rt(k),
        WKind::BDM => ElementKind::bdm(k + 1),
    }
}

/// Element kinds of the four unknowns.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SpaceLayout {
    pub sigma: ElementKind,
    pub omega: ElementKind,
    pub u: ElementKind,
    pub r: ElementKind,
}

impl SpaceLayout {
    pub fn for_method(method: Method, k: usize) -> Self {
        match method.family {
            Family::SC => Self {
                sigma: w_space(method.w_kind, k),
                omega: w_space(method.w_kind, k + 1),
                u: ElementKind::p_disc(k),
                r: ElementKind::p_disc(k + 1),
            },
            Family::WC => Self {
                sigma: ElementKind::bdm(k + 1),
                omega: w_space(method.w_kind, k),
                u: ElementKind::p_disc(k),
                r: ElementKind::p_disc(k),
            },
        }
    }
}

#[derive(Debug, Error)]
pub enum AssemblyError {
    #[error(transparent)]
    Element(#[from] FeError),
    #[error(transparent)]
    Material(#[from] MaterialError),
    #[error("strongly coupled spaces need ell bounded away from zero (min over mesh = {0})")]
    DegenerateLength(f64),
    #[error("order k = {0} is not supported (expected 0 or 1)")]
    Order(usize),
}

#[derive(Debug, Clone, Copy)]
struct CellEll {
    x0: [f64; 3],
    l0: f64,
    grad: Vector3<f64>,
    max: f64,
}

impl CellEll {
    fn at(&self, x: &[f64; 3]) -> f64 {
        self.l0 + (0..3).map(|r| self.grad[r] * (x[r] - self.x0[r])).sum::<f64>()
    }
}

/// Spaces, material and mesh of one discretisation.
#[derive(Debug, Clone)]
pub struct DiscreteProblem {
    pub method: Method,
    pub k: usize,
    pub layout: SpaceLayout,
    pub mesh: Arc<Mesh>,
    pub material: MaterialModel,
    pub sigma: FiniteElementSpace,
    pub omega: FiniteElementSpace,
    pub u: FiniteElementSpace,
    pub r: FiniteElementSpace,
    /// Degree of the cell rule used for all bilinear forms.
    pub quad_degree: usize,
    cell_ell: Vec<CellEll>,
}

/// Assembled blocks of the saddle-point system.
#[derive(Debug, Clone)]
pub struct BlockSystem {
    pub m_a: CsrMatrix,
    pub b: CsrMatrix,
    pub rhs_u: Vec<f64>,
    pub n_p: usize,
    pub n_u: usize,
}

/// Which local forms to compute in one pass over a cell.
#[derive(Clone, Copy, Default)]
struct Want {
    mass: bool,
    coupling: bool,
    norm: bool,
    precond: bool,
}

/// Dense local blocks of one cell (row-major; empty when not requested).
#[derive(Default)]
struct CellOut {
    p_dofs: Vec<usize>,
    u_dofs: Vec<usize>,
    mass: Vec<f64>,
    coupling: Vec<f64>,
    norm: Vec<f64>,
    precond: Vec<f64>,
}

/// Cells assembled per parallel batch; bounds the memory held in dense
/// local blocks before they are scattered.
const CELL_BATCH: usize = 512;

struct LocalP {
    global: usize,
    row: usize,
    omega: bool,
    j: usize,
}

struct LocalU {
    global: usize,
    comp: usize,
    rot: bool,
    j: usize,
}

impl DiscreteProblem {
    pub fn new(mesh: Arc<Mesh>, method: Method, k: usize, material: MaterialModel) -> Result<Self, AssemblyError> {
        if k > 1 {
            return Err(AssemblyError::Order(k));
        }
        Self::with_layout(mesh, method, k, SpaceLayout::for_method(method, k), material)
    }

    /// Problem with explicitly chosen element kinds (used for deliberately
    /// mismatched pairs).
    pub fn with_layout(
        mesh: Arc<Mesh>,
        method: Method,
        k: usize,
        layout: SpaceLayout,
        material: MaterialModel,
    ) -> Result<Self, AssemblyError> {
        let dim = mesh.dim();
        material.check(dim)?;
        if method.family == Family::SC {
            let min = material.ell.min_on(&mesh);
            if min <= 0.0 {
                return Err(AssemblyError::DegenerateLength(min));
            }
        }
        let nrot = if dim == 3 { 3 } else { 1 };
        let sigma = FiniteElementSpace::new(mesh.clone(), layout.sigma, dim)?;
        let omega = FiniteElementSpace::new(mesh.clone(), layout.omega, nrot)?;
        let u = FiniteElementSpace::new(mesh.clone(), layout.u, dim)?;
        let r = FiniteElementSpace::new(mesh.clone(), layout.r, nrot)?;
        let cell_ell = (0..mesh.num_cells())
            .map(|c| {
                let v = mesh.cell(c);
                let x0 = mesh.vertex(v[0]);
                let vals: Vec<f64> = v.iter().map(|&i| material.ell.eval(&mesh.vertex(i))).collect();
                CellEll {
                    x0,
                    l0: vals[0],
                    grad: if material.ell.is_constant() {
                        Vector3::zeros()
                    } else {
                        affine_gradient(&mesh, c, &|x| material.ell.eval(x))
                    },
                    max: vals.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
                }
            })
            .collect();
        Ok(Self {
            method,
            k,
            layout,
            quad_degree: 2 * k + 6,
            mesh,
            material,
            sigma,
            omega,
            u,
            r,
            cell_ell,
        })
    }

    pub fn dim(&self) -> usize {
        self.mesh.dim()
    }
    pub fn n_p(&self) -> usize {
        self.sigma.n_dofs() + self.omega.n_dofs()
    }
    pub fn n_u(&self) -> usize {
        self.u.n_dofs() + self.r.n_dofs()
    }
    pub fn n_dofs(&self) -> usize {
        self.n_p() + self.n_u()
    }
    /// Offset of the ω block inside `p`.
    pub fn omega_offset(&self) -> usize {
        self.sigma.n_dofs()
    }
    /// Offset of the r block inside `u`.
    pub fn r_offset(&self) -> usize {
        self.u.n_dofs()
    }

    /// Matrix row carried by ω copy `c` (also the component of r copy `c`).
    pub fn rot_index(&self, c: usize) -> usize {
        if self.dim() == 2 {
            2
        } else {
            c
        }
    }

    /// Affine `ℓ` of `cell` at `x` (the interpolant of the vertex values).
    pub fn ell_at(&self, cell: usize, x: &[f64; 3]) -> f64 {
        self.cell_ell[cell].at(x)
    }
    pub fn ell_grad(&self, cell: usize) -> Vector3<f64> {
        self.cell_ell[cell].grad
    }
    /// `ℓ_h`: the maximum of `ℓ` over the cell.
    pub fn ell_max(&self, cell: usize) -> f64 {
        self.cell_ell[cell].max
    }

    fn weighted_family(&self) -> bool {
        self.method.family == Family::WC
    }

    fn local_p(&self, c: usize) -> Vec<LocalP> {
        let dim = self.dim();
        let mut out = Vec::new();
        let sd = self.sigma.cell_dofs(c);
        for a in 0..dim {
            for (j, &d) in sd.iter().enumerate() {
                out.push(LocalP { global: self.sigma.global_dof(a, d), row: a, omega: false, j });
            }
        }
        let od = self.omega.cell_dofs(c);
        let off = self.omega_offset();
        for cp in 0..self.omega.multiplicity() {
            for (j, &d) in od.iter().enumerate() {
                out.push(LocalP { global: off + self.omega.global_dof(cp, d), row: self.rot_index(cp), omega: true, j });
            }
        }
        out
    }

    fn local_u(&self, c: usize) -> Vec<LocalU> {
        let mut out = Vec::new();
        let ud = self.u.cell_dofs(c);
        for a in 0..self.dim() {
            for (j, &d) in ud.iter().enumerate() {
                out.push(LocalU { global: self.u.global_dof(a, d), comp: a, rot: false, j });
            }
        }
        let rd = self.r.cell_dofs(c);
        let off = self.r_offset();
        for cp in 0..self.r.multiplicity() {
            for (j, &d) in rd.iter().enumerate() {
                out.push(LocalU { global: off + self.r.global_dof(cp, d), comp: self.rot_index(cp), rot: true, j });
            }
        }
        out
    }

    fn cell_forms(&self, c: usize, rule: &QuadratureRule, want: Want) -> CellOut {
        let dim = self.dim();
        let (pts, wts) = cell_quadrature(&self.mesh, c, rule);
        let ts = self.sigma.tabulate(c, &pts);
        let to = self.omega.tabulate(c, &pts);
        let lp = self.local_p(c);
        let lu = if want.coupling { self.local_u(c) } else { Vec::new() };
        let (tu, tr) = if want.coupling {
            (self.u.tabulate(c, &pts), self.r.tabulate(c, &pts))
        } else {
            Default::default()
        };
        let np = lp.len();
        let nu = lu.len();
        let mut mass = if want.mass { vec![0.0; np * np] } else { Vec::new() };
        let mut norm = if want.norm { vec![0.0; np * np] } else { Vec::new() };
        let mut prec = if want.precond { vec![0.0; np * np] } else { Vec::new() };
        let mut coup = if want.coupling { vec![0.0; nu * np] } else { Vec::new() };
        let gl = self.ell_grad(c);
        let weighted = self.weighted_family();
        let mut phi = vec![[0.0; 3]; np];
        let mut ae = vec![Matrix3::zeros(); np];
        // S_ℓ image: u part and r part; and the divergence part of the norm
        let mut sl = vec![(Vector3::zeros(), Vector3::zeros()); np];
        let mut dv = vec![(Vector3::zeros(), Vector3::zeros()); np];
        for (q, (x, &w)) in pts.iter().zip(&wts).enumerate() {
            let l = self.ell_at(c, x);
            for (i, p) in lp.iter().enumerate() {
                let (v, d) = if p.omega { (to.value(q, p.j), to.div(q, p.j)) } else { (ts.value(q, p.j), ts.div(q, p.j)) };
                phi[i] = v;
                let mut e = Matrix3::zeros();
                for col in 0..dim {
                    e[(p.row, col)] = v[col];
                }
                if want.mass || want.precond {
                    ae[i] = if p.omega {
                        let t = self.material.apply_a_omega_tilde(&e, dim);
                        if weighted {
                            t
                        } else {
                            t / (l * l)
                        }
                    } else {
                        self.material.apply_a_sigma(&e, dim)
                    };
                }
                let mut su = Vector3::zeros();
                let mut sr = Vector3::zeros();
                let mut du = Vector3::zeros();
                let mut dr = Vector3::zeros();
                if p.omega {
                    let dl = if weighted {
                        l * d + (0..dim).map(|r| v[r] * gl[r]).sum::<f64>()
                    } else {
                        d
                    };
                    sr[p.row] = -dl;
                    dr[p.row] = dl;
                } else {
                    su[p.row] = -d;
                    du[p.row] = d;
                    sr = asym(&e, dim);
                }
                sl[i] = (su, sr);
                dv[i] = (du, dr);
            }
            for i in 0..np {
                for j in 0..np {
                    let same_block = lp[i].omega == lp[j].omega;
                    let rj = lp[j].row;
                    if same_block && (want.mass || want.precond) {
                        let mut a = 0.0;
                        for col in 0..dim {
                            a += ae[i][(rj, col)] * phi[j][col];
                        }
                        if want.mass {
                            mass[i * np + j] += w * a;
                        }
                        if want.precond {
                            let s = sl[i].0.dot(&sl[j].0) + sl[i].1.dot(&sl[j].1);
                            prec[i * np + j] += w * (a + s);
                        }
                    } else if want.precond {
                        let s = sl[i].0.dot(&sl[j].0) + sl[i].1.dot(&sl[j].1);
                        prec[i * np + j] += w * s;
                    }
                    if want.norm {
                        let mut v = dv[i].0.dot(&dv[j].0) + dv[i].1.dot(&dv[j].1);
                        if same_block && lp[i].row == rj {
                            v += (0..dim).map(|col| phi[i][col] * phi[j][col]).sum::<f64>();
                        }
                        norm[i * np + j] += w * v;
                    }
                }
            }
            if want.coupling {
                for (m, ud) in lu.iter().enumerate() {
                    let val = if ud.rot { tr.scalar(q, ud.j) } else { tu.scalar(q, ud.j) };
                    for i in 0..np {
                        let img = if ud.rot { sl[i].1[ud.comp] } else { sl[i].0[ud.comp] };
                        coup[m * np + i] += w * img * val;
                    }
                }
            }
        }
        CellOut {
            p_dofs: lp.iter().map(|p| p.global).collect(),
            u_dofs: lu.iter().map(|u| u.global).collect(),
            mass,
            coupling: coup,
            norm,
            precond: prec,
        }
    }

    fn assemble_forms(&self, want: Want) -> (Option<CsrMatrix>, Option<CsrMatrix>, Option<CsrMatrix>, Option<CsrMatrix>) {
        let rule = QuadratureRule::simplex(self.dim(), self.quad_degree);
        let nc = self.mesh.num_cells();
        let (np, nu) = (self.n_p(), self.n_u());
        let locals: Vec<Vec<LocalP>> = (0..nc).map(|c| self.local_p(c)).collect();
        let p_lists: Vec<Vec<usize>> = locals.iter().map(|l| l.iter().map(|p| p.global).collect()).collect();
        // mass couples within the σ and ω blocks, the norm within single rows
        let grouped = |key: &dyn Fn(&LocalP) -> usize| -> Vec<Vec<usize>> {
            let mut out = Vec::new();
            for l in &locals {
                let mut groups: Vec<(usize, Vec<usize>)> = Vec::new();
                for p in l {
                    let k = key(p);
                    match groups.iter_mut().find(|g| g.0 == k) {
                        Some(g) => g.1.push(p.global),
                        None => groups.push((k, vec![p.global])),
                    }
                }
                out.extend(groups.into_iter().map(|g| g.1));
            }
            out
        };
        let mut mass = want.mass.then(|| {
            let g = grouped(&|p| p.omega as usize);
            CsrMatrix::from_cell_pattern(np, np, &g, &g)
        });
        let mut norm = want.norm.then(|| {
            let g = grouped(&|p| 3 * p.omega as usize + p.row);
            CsrMatrix::from_cell_pattern(np, np, &g, &g)
        });
        let mut prec = want.precond.then(|| CsrMatrix::from_cell_pattern(np, np, &p_lists, &p_lists));
        drop(locals);
        let mut coup = want.coupling.then(|| {
            let u_lists: Vec<Vec<usize>> = (0..nc).map(|c| self.local_u(c).iter().map(|u| u.global).collect()).collect();
            CsrMatrix::from_cell_pattern(nu, np, &u_lists, &p_lists)
        });
        let cells: Vec<usize> = (0..nc).collect();
        for batch in cells.chunks(CELL_BATCH) {
            let outs: Vec<CellOut> = batch.par_iter().map(|&c| self.cell_forms(c, &rule, want)).collect();
            // merged in cell order, so the sums do not depend on threading
            for o in outs {
                if let Some(m) = mass.as_mut() {
                    m.add_local(&o.p_dofs, &o.p_dofs, &o.mass);
                }
                if let Some(m) = norm.as_mut() {
                    m.add_local(&o.p_dofs, &o.p_dofs, &o.norm);
                }
                if let Some(m) = prec.as_mut() {
                    m.add_local(&o.p_dofs, &o.p_dofs, &o.precond);
                }
                if let Some(m) = coup.as_mut() {
                    m.add_local(&o.u_dofs, &o.p_dofs, &o.coupling);
                }
            }
        }
        (mass, coup, norm, prec)
    }

    /// `(A_σσ, τ) + (A_ω ω, ρ)` (SC) or `(A_σσ, τ) + (Ã_ω ω̃, ρ̃)` (WC).
    pub fn assemble_mass(&self) -> CsrMatrix {
        self.assemble_forms(Want { mass: true, ..Want::default() }).0.unwrap()
    }

    /// `B` with rows over `(u, r)` test functions and columns over `(σ, ω)`.
    pub fn assemble_coupling(&self) -> CsrMatrix {
        self.assemble_forms(Want { coupling: true, ..Want::default() }).1.unwrap()
    }

    /// Matrix of `‖σ‖² + ‖∇·σ‖² + ‖ω‖² + ‖∇·(ℓω)‖²` (`ℓ ≡ 1` for SC).
    pub fn assemble_hl_norm(&self) -> CsrMatrix {
        self.assemble_forms(Want { norm: true, ..Want::default() }).2.unwrap()
    }

    /// Matrix of `(A p, p') + (S_ℓ p, S_ℓ p')` used as the `p` block of the
    /// preconditioner.
    pub fn assemble_preconditioner(&self) -> CsrMatrix {
        self.assemble_forms(Want { precond: true, ..Want::default() }).3.unwrap()
    }

    /// `L²` mass on `X^u`; the identity for the orthonormal basis.
    pub fn assemble_u_mass(&self) -> CsrMatrix {
        let rule = QuadratureRule::simplex(self.dim(), 2 * self.layout.r.degree);
        let mut t = Vec::new();
        for c in 0..self.mesh.num_cells() {
            let (pts, wts) = cell_quadrature(&self.mesh, c, &rule);
            let tu = self.u.tabulate(c, &pts);
            let tr = self.r.tabulate(c, &pts);
            let lu = self.local_u(c);
            for a in &lu {
                for b in &lu {
                    if a.comp != b.comp || a.rot != b.rot {
                        continue;
                    }
                    let tab = if a.rot { &tr } else { &tu };
                    let v: f64 = (0..pts.len()).map(|q| wts[q] * tab.scalar(q, a.j) * tab.scalar(q, b.j)).sum();
                    t.push((a.global, b.global, v));
                }
            }
        }
        CsrMatrix::from_triplets(self.n_u(), self.n_u(), &t)
    }

    /// `(f_u, u') + (f_r, r')`.
    pub fn assemble_rhs(&self, load: &(dyn Fn(&[f64; 3]) -> (Vector3<f64>, Vector3<f64>) + Sync), degree: usize) -> Vec<f64> {
        let rule = QuadratureRule::simplex(self.dim(), degree);
        let parts: Vec<Vec<(usize, f64)>> = (0..self.mesh.num_cells())
            .into_par_iter()
            .map(|c| {
                let (pts, wts) = cell_quadrature(&self.mesh, c, &rule);
                let tu = self.u.tabulate(c, &pts);
                let tr = self.r.tabulate(c, &pts);
                let lu = self.local_u(c);
                let mut acc = vec![0.0; lu.len()];
                for (q, (x, w)) in pts.iter().zip(&wts).enumerate() {
                    let (fu, fr) = load(x);
                    for (m, d) in lu.iter().enumerate() {
                        let (f, val) = if d.rot { (fr[d.comp], tr.scalar(q, d.j)) } else { (fu[d.comp], tu.scalar(q, d.j)) };
                        acc[m] += w * f * val;
                    }
                }
                lu.iter().zip(acc).map(|(d, v)| (d.global, v)).collect()
            })
            .collect();
        let mut rhs = vec![0.0; self.n_u()];
        for part in parts {
            for (g, v) in part {
                rhs[g] += v;
            }
        }
        rhs
    }

    pub fn assemble(&self, load: &(dyn Fn(&[f64; 3]) -> (Vector3<f64>, Vector3<f64>) + Sync)) -> BlockSystem {
        let (m, b, _, _) = self.assemble_forms(Want { mass: true, coupling: true, ..Want::default() });
        BlockSystem {
            m_a: m.unwrap(),
            b: b.unwrap(),
            rhs_u: self.assemble_rhs(load, 10),
            n_p: self.n_p(),
            n_u: self.n_u(),
        }
    }

    /// The system together with the preconditioner block, in one pass.
    pub fn assemble_with_preconditioner(
        &self,
        load: &(dyn Fn(&[f64; 3]) -> (Vector3<f64>, Vector3<f64>) + Sync),
    ) -> (BlockSystem, CsrMatrix) {
        let (m, b, _, pp) = self.assemble_forms(Want { mass: true, coupling: true, precond: true, ..Want::default() });
        let sys = BlockSystem {
            m_a: m.unwrap(),
            b: b.unwrap(),
            rhs_u: self.assemble_rhs(load, 10),
            n_p: self.n_p(),
            n_u: self.n_u(),
        };
        (sys, pp.unwrap())
    }

    /// Canonical interpolant of the exact `(σ, ω)` (or `(σ, ω̃)` for WC).
    pub fn interpolate_p(&self, exact: &(dyn Fn(&[f64; 3]) -> ExactFields + Sync), degree: usize) -> Vec<f64> {
        let dim = self.dim();
        let weighted = self.weighted_family();
        let sig = self.sigma.interpolate(
            &|x| {
                let f = exact(x);
                let mut out = [[0.0; 3]; 3];
                for (a, row) in out.iter_mut().enumerate().take(dim) {
                    for col in 0..3 {
                        row[col] = f.sigma[(a, col)];
                    }
                }
                out
            },
            degree,
        );
        let om = self.omega.interpolate(
            &|x| {
                let f = exact(x);
                let m = if weighted { f.omega_tilde } else { f.omega };
                let mut out = [[0.0; 3]; 3];
                for (cp, row) in out.iter_mut().enumerate().take(self.omega.multiplicity()) {
                    let rr = self.rot_index(cp);
                    for col in 0..3 {
                        row[col] = m[(rr, col)];
                    }
                }
                out
            },
            degree,
        );
        [sig, om].concat()
    }

    /// `L²` projection `ϖ` of the exact `(u, r)` onto `X^u`.
    pub fn project_u(&self, exact: &(dyn Fn(&[f64; 3]) -> ExactFields + Sync), degree: usize) -> Vec<f64> {
        let dim = self.dim();
        let u = self.u.l2_project(
            &|x| {
                let f = exact(x);
                [f.u[0], f.u[1], if dim == 3 { f.u[2] } else { 0.0 }]
            },
            degree,
        );
        let r = self.r.l2_project(
            &|x| {
                let f = exact(x);
                if dim == 3 {
                    [f.r[0], f.r[1], f.r[2]]
                } else {
                    [f.r[2], 0.0, 0.0]
                }
            },
            degree,
        );
        [u, r].concat()
    }

    /// Largest relative `L²` residual of projecting `S p_h` onto `X^u`, over
    /// all local basis functions `p_h` of `X^p` (`ℓ ≡ 1` in the coupling for
    /// SC). Zero for strongly coupled spaces.
    pub fn strong_coupling_residual(&self) -> f64 {
        let dim = self.dim();
        let deg = 2 * self.layout.omega.poly_degree().max(self.layout.sigma.poly_degree()) + 2;
        let rule = QuadratureRule::simplex(dim, deg);
        let weighted = self.weighted_family();
        (0..self.mesh.num_cells())
            .map(|c| {
                let (pts, wts) = cell_quadrature(&self.mesh, c, &rule);
                let ts = self.sigma.tabulate(c, &pts);
                let to = self.omega.tabulate(c, &pts);
                let tu = self.u.tabulate(c, &pts);
                let tr = self.r.tabulate(c, &pts);
                let lu = self.local_u(c);
                let gl = self.ell_grad(c);
                let mut worst: f64 = 0.0;
                for p in self.local_p(c) {
                    // image at each point
                    let img: Vec<(Vector3<f64>, Vector3<f64>)> = pts
                        .iter()
                        .enumerate()
                        .map(|(q, x)| {
                            let mut su = Vector3::zeros();
                            let mut sr = Vector3::zeros();
                            if p.omega {
                                let v = to.value(q, p.j);
                                let d = to.div(q, p.j);
                                let dl = if weighted {
                                    self.ell_at(c, x) * d + (0..dim).map(|r| v[r] * gl[r]).sum::<f64>()
                                } else {
                                    d
                                };
                                sr[p.row] = -dl;
                            } else {
                                let v = ts.value(q, p.j);
                                let mut e = Matrix3::zeros();
                                for col in 0..dim {
                                    e[(p.row, col)] = v[col];
                                }
                                su[p.row] = -ts.div(q, p.j);
                                sr = asym(&e, dim);
                            }
                            (su, sr)
                        })
                        .collect();
                    let coef: Vec<f64> = lu
                        .iter()
                        .map(|d| {
                            (0..pts.len())
                                .map(|q| {
                                    let (f, val) = if d.rot { (img[q].1[d.comp], tr.scalar(q, d.j)) } else { (img[q].0[d.comp], tu.scalar(q, d.j)) };
                                    wts[q] * f * val
                                })
                                .sum()
                        })
                        .collect();
                    let mut res2 = 0.0;
                    let mut tot2 = 0.0;
                    for q in 0..pts.len() {
                        let (mut ru, mut rr) = img[q];
                        tot2 += wts[q] * (ru.norm_squared() + rr.norm_squared());
                        for (d, a) in lu.iter().zip(&coef) {
                            if d.rot {
                                rr[d.comp] -= a * tr.scalar(q, d.j);
                            } else {
                                ru[d.comp] -= a * tu.scalar(q, d.j);
                            }
                        }
                        res2 += wts[q] * (ru.norm_squared() + rr.norm_squared());
                    }
                    worst = worst.max(res2.sqrt() / tot2.sqrt().max(1.0));
                }
                worst
            })
            .fold(0.0, f64::max)
    }

    /// `(σ, ω)` coefficients split into the two blocks.
    pub fn split_p<'a>(&self, p: &'a [f64]) -> (&'a [f64], &'a [f64]) {
        p.split_at(self.omega_offset())
    }

    pub fn split_u<'a>(&self, u: &'a [f64]) -> (&'a [f64], &'a [f64]) {
        u.split_at(self.r_offset())
    }

    pub fn is_hdiv_rows(&self) -> bool {
        self.layout.sigma.family != ElementFamily::PDisc
    }
}

impl BlockSystem {
    /// `[[M_A, -Bᵀ], [B, 0]]`.
    pub fn full_matrix(&self) -> CsrMatrix {
        let bt = self.b.transpose().scale(-1.0);
        CsrMatrix::block(Some(&self.m_a), Some(&bt), Some(&self.b), None, self.n_p, self.n_u)
    }

    /// Symmetric form `[[M_A, -Bᵀ], [-B, 0]]` with right-hand side `(0, -f)`.
    pub fn symmetric_matrix(&self) -> CsrMatrix {
        let bt = self.b.transpose().scale(-1.0);
        let mb = self.b.scale(-1.0);
        CsrMatrix::block(Some(&self.m_a), Some(&bt), Some(&mb), None, self.n_p, self.n_u)
    }

    pub fn symmetric_rhs(&self) -> Vec<f64> {
        let mut v = vec![0.0; self.n_p];
        v.extend(self.rhs_u.iter().map(|x| -x));
        v
    }

    /// Original right-hand side `(0, f)`.
    pub fn rhs(&self) -> Vec<f64> {
        let mut v = vec![0.0; self.n_p];
        v.extend(&self.rhs_u);
        v
    }

    /// `‖K z - b‖ / ‖b‖` for the unsymmetrised system (absolute if `b = 0`).
    pub fn relative_residual(&self, p: &[f64], u: &[f64]) -> f64 {
        let mp = self.m_a.mul_vec(p);
        let btu = self.b.mul_t_vec(u);
        let bp = self.b.mul_vec(p);
        let mut r2 = 0.0;
        for i in 0..self.n_p {
            r2 += (mp[i] - btu[i]).powi(2);
        }
        for i in 0..self.n_u {
            r2 += (bp[i] - self.rhs_u[i]).powi(2);
        }
        let b2: f64 = self.rhs_u.iter().map(|x| x * x).sum();
        if b2 > 0.0 {
            (r2 / b2).sqrt()
        } else {
            r2.sqrt()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cosserat_core::LengthField;

    fn problem(dim: usize, n: usize, method: Method, k: usize, ell: LengthField) -> DiscreteProblem {
        let mesh = Arc::new(Mesh::structured(dim, n).unwrap());
        DiscreteProblem::new(mesh, method, k, MaterialModel::with(1.0, ell)).unwrap()
    }

    #[test]
    fn method_names_roundtrip() {
        for m in Method::ALL {
            assert_eq!(m.name().parse::<Method>().unwrap(), m);
        }
        assert!("XX".parse::<Method>().is_err());
    }

    #[test]
    fn sc_rejects_degenerate_length() {
        let mesh = Arc::new(Mesh::structured(2, 3).unwrap());
        let r = DiscreteProblem::new(mesh.clone(), Method::SC_RT, 0, MaterialModel::with(1.0, LengthField::Kinked));
        assert!(matches!(r, Err(AssemblyError::DegenerateLength(_))));
        assert!(DiscreteProblem::new(mesh, Method::WC_RT, 0, MaterialModel::with(1.0, LengthField::Kinked)).is_ok());
    }

    #[test]
    fn mass_is_symmetric() {
        for m in Method::ALL {
            for dim in [2, 3] {
                let p = problem(dim, 1, m, 0, LengthField::Constant(0.5));
                let ma = p.assemble_mass();
                assert!(ma.asymmetry() <= 1e-12 * ma.max_abs(), "{m} {dim}");
            }
        }
    }

    #[test]
    fn identity_material_gives_plain_mass() {
        // μ = μ_c = 1/2 and λ = 0 make A_σ the identity
        let mesh = Arc::new(Mesh::structured(2, 1).unwrap());
        let mat = MaterialModel { mu: 0.5, mu_c_sigma: 0.5, lambda_sigma: 0.0, ..MaterialModel::default() };
        let p = DiscreteProblem::new(mesh, Method::WC_RT, 0, mat).unwrap();
        let ma = p.assemble_mass();
        let n = p.assemble_hl_norm();
        // the σ block of the H_ℓ norm minus the divergence part is the L² mass
        let rule = QuadratureRule::simplex(2, 6);
        let ns = p.sigma.n_dofs();
        let mut l2 = vec![vec![0.0; ns]; ns];
        for c in 0..p.mesh.num_cells() {
            let (pts, wts) = cell_quadrature(&p.mesh, c, &rule);
            let t = p.sigma.tabulate(c, &pts);
            let dofs = p.sigma.cell_dofs(c);
            for a in 0..2 {
                for (i, &di) in dofs.iter().enumerate() {
                    for (j, &dj) in dofs.iter().enumerate() {
                        let v: f64 = (0..pts.len())
                            .map(|q| {
                                let x = t.value(q, i);
                                let y = t.value(q, j);
                                wts[q] * (x[0] * y[0] + x[1] * y[1])
                            })
                            .sum();
                        l2[p.sigma.global_dof(a, di)][p.sigma.global_dof(a, dj)] += v;
                    }
                }
            }
        }
        for i in 0..ns {
            for j in 0..ns {
                assert!((ma.get(i, j) - l2[i][j]).abs() < 1e-12);
            }
        }
        assert!(n.nnz() > 0);
    }

    #[test]
    fn sc_omega_block_scales_with_ell() {
        let p1 = problem(2, 2, Method::SC_BDM, 0, LengthField::Constant(1.0));
        let p2 = problem(2, 2, Method::SC_BDM, 0, LengthField::Constant(0.1));
        let (m1, m2) = (p1.assemble_mass(), p2.assemble_mass());
        let off = p1.omega_offset();
        for (r, c, v) in m1.triplets() {
            let w = m2.get(r, c);
            if r >= off && c >= off {
                assert!((w - 100.0 * v).abs() < 1e-10 * w.abs().max(1.0));
            } else {
                assert!((w - v).abs() < 1e-13);
            }
        }
    }

    #[test]
    fn wc_with_zero_ell_drops_omega_coupling() {
        let p0 = problem(2, 2, Method::WC_RT, 0, LengthField::Constant(0.0));
        let p1 = problem(2, 2, Method::WC_RT, 0, LengthField::Constant(1.0));
        let (b0, b1) = (p0.assemble_coupling(), p1.assemble_coupling());
        let off = p0.omega_offset();
        for (r, c, v) in b0.triplets() {
            if c >= off {
                assert_eq!(v, 0.0);
            } else {
                assert!((v - b1.get(r, c)).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn strongly_coupled_inclusion() {
        for m in [Method::SC_RT, Method::SC_BDM] {
            for k in [0, 1] {
                for n in [1, 2] {
                    let p = problem(2, n, m, k, LengthField::Constant(1.0));
                    assert!(p.strong_coupling_residual() < 1e-10, "{m} k={k} n={n}");
                }
            }
        }
        // the weak pairing is not strongly coupled
        let p = problem(2, 1, Method::WC_BDM, 0, LengthField::Constant(1.0));
        assert!(p.strong_coupling_residual() > 1e-3);
    }

    #[test]
    fn constant_load_rhs() {
        let p = problem(2, 2, Method::WC_RT, 0, LengthField::Constant(1.0));
        let c = Vector3::new(2.0, -1.0, 3.0);
        let rhs = p.assemble_rhs(&|_| (c, c), 10);
        // orthonormal P0 basis is 1/sqrt(|K|)
        let vol = p.mesh.cell_volume(0);
        let dof = p.u.global_dof(1, p.u.cell_dofs(0)[0]);
        assert!((rhs[dof] - c[1] * vol / vol.sqrt()).abs() < 1e-14);
        assert!(p.assemble_rhs(&|_| (Vector3::zeros(), Vector3::zeros()), 10).iter().all(|&v| v == 0.0));
    }

    #[test]
    fn u_mass_is_identity() {
        let p = problem(3, 1, Method::SC_RT, 1, LengthField::Constant(1.0));
        let m = p.assemble_u_mass();
        for (r, c, v) in m.triplets() {
            let e = if r == c { 1.0 } else { 0.0 };
            assert!((v - e).abs() < 1e-12);
        }
    }
}
