//! Error norms, convergence rates, discrete inf-sup constants and the
//! weighted-mass ratio bound.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector, Matrix3, SymmetricEigen, Vector3};
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::assembly::{DiscreteProblem, Family, WKind};
use crate::cosserat_core::{ExactFields, LengthField};
use crate::fe_spaces::{cell_quadrature, Tabulation};
use crate::mesh::Mesh;
use crate::polynomial::Monomials;
use crate::quadrature::QuadratureRule;
use crate::sparse::{norm, CsrMatrix};

/// Degree of the cell rule used for error integration.
pub const ERROR_QUAD_DEGREE: usize = 12;

/// Names of the error columns, in CSV order.
pub const NORM_NAMES: [&str; 10] = [
    "err_sigma_l2",
    "err_sigma_hdiv",
    "err_omega_l2",
    "err_omega_hdivl",
    "err_u_l2",
    "err_r_l2",
    "err_u_proj",
    "err_r_proj",
    "err_composite",
    "err_improved",
];

#[derive(Debug, Error)]
pub enum AnalysisError {
    #[error("matrix is not positive definite")]
    NotPositiveDefinite,
    #[error("problem too large for a dense eigensolve ({0} unknowns)")]
    TooLarge(usize),
    #[error("at least two refinement levels are needed")]
    TooFewLevels,
}

/// Discrete fields at one point.
#[derive(Debug, Clone, Default)]
pub struct PointValues {
    pub sigma: Matrix3<f64>,
    pub div_sigma: Vector3<f64>,
    /// `ω_h` (SC) or `ω̃_h` (WC).
    pub omega: Matrix3<f64>,
    pub div_omega: Vector3<f64>,
    /// `∇·(ℓω̃_h)` for WC; equal to `div_omega` for SC.
    pub div_l_omega: Vector3<f64>,
    pub u: Vector3<f64>,
    pub r: Vector3<f64>,
}

fn hdiv_rows(
    tab: &Tabulation,
    space_rows: &[(usize, Vec<f64>)],
    q: usize,
    m: &mut Matrix3<f64>,
    d: &mut Vector3<f64>,
) {
    for (row, loc) in space_rows {
        for (j, a) in loc.iter().enumerate() {
            let v = tab.value(q, j);
            for c in 0..3 {
                m[(*row, c)] += a * v[c];
            }
            d[*row] += a * tab.div(q, j);
        }
    }
}

/// Evaluate the discrete solution at physical points of `cell`.
pub fn eval_discrete(problem: &DiscreteProblem, p: &[f64], u: &[f64], cell: usize, pts: &[[f64; 3]]) -> Vec<PointValues> {
    let dim = problem.dim();
    let (ps, po) = problem.split_p(p);
    let (uu, ur) = problem.split_u(u);
    let ts = problem.sigma.tabulate(cell, pts);
    let to = problem.omega.tabulate(cell, pts);
    let tu = problem.u.tabulate(cell, pts);
    let tr = problem.r.tabulate(cell, pts);
    let srows: Vec<(usize, Vec<f64>)> = (0..dim).map(|a| (a, problem.sigma.local_coeffs(ps, a, cell))).collect();
    let orows: Vec<(usize, Vec<f64>)> = (0..problem.omega.multiplicity())
        .map(|c| (problem.rot_index(c), problem.omega.local_coeffs(po, c, cell)))
        .collect();
    let ucomp: Vec<(usize, Vec<f64>)> = (0..dim).map(|a| (a, problem.u.local_coeffs(uu, a, cell))).collect();
    let rcomp: Vec<(usize, Vec<f64>)> = (0..problem.r.multiplicity())
        .map(|c| (problem.rot_index(c), problem.r.local_coeffs(ur, c, cell)))
        .collect();
    let weighted = problem.method.family == Family::WC;
    let gl = problem.ell_grad(cell);
    pts.iter()
        .enumerate()
        .map(|(q, x)| {
            let mut pv = PointValues::default();
            hdiv_rows(&ts, &srows, q, &mut pv.sigma, &mut pv.div_sigma);
            hdiv_rows(&to, &orows, q, &mut pv.omega, &mut pv.div_omega);
            for (comp, loc) in &ucomp {
                pv.u[*comp] = loc.iter().enumerate().map(|(j, a)| a * tu.scalar(q, j)).sum();
            }
            for (comp, loc) in &rcomp {
                pv.r[*comp] = loc.iter().enumerate().map(|(j, a)| a * tr.scalar(q, j)).sum();
            }
            pv.div_l_omega = if weighted {
                let l = problem.ell_at(cell, x);
                pv.div_omega * l + pv.omega * gl
            } else {
                pv.div_omega
            };
            pv
        })
        .collect()
}

/// Squared-error building blocks, already square-rooted.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct ErrorPieces {
    pub sigma_l2: f64,
    pub sigma_div: f64,
    pub omega_l2: f64,
    /// `‖∇·(ω - ω_h)‖` (SC) or `‖∇·(ℓ(ω̃ - ω̃_h))‖` (WC).
    pub omega_div: f64,
    pub u_l2: f64,
    pub r_l2: f64,
    /// `‖ϖu - u_h‖` with `ϖ` the `L²` projection onto `X^u`.
    pub u_proj: f64,
    pub r_proj: f64,
}

/// Error pieces of a discrete solution against exact fields.
pub fn error_pieces(
    problem: &DiscreteProblem,
    p: &[f64],
    u: &[f64],
    exact: &(dyn Fn(&[f64; 3]) -> ExactFields + Sync),
) -> ErrorPieces {
    let rule = QuadratureRule::simplex(problem.dim(), ERROR_QUAD_DEGREE);
    let weighted = problem.method.family == Family::WC;
    let sums: [f64; 6] = (0..problem.mesh.num_cells())
        .into_par_iter()
        .map(|c| {
            let (pts, wts) = cell_quadrature(&problem.mesh, c, &rule);
            let vals = eval_discrete(problem, p, u, c, &pts);
            let mut s = [0.0; 6];
            for ((x, w), h) in pts.iter().zip(&wts).zip(&vals) {
                let f = exact(x);
                let om = if weighted { f.omega_tilde } else { f.omega };
                s[0] += w * (f.sigma - h.sigma).norm_squared();
                s[1] += w * (f.div_sigma - h.div_sigma).norm_squared();
                s[2] += w * (om - h.omega).norm_squared();
                // ∇·(ℓω̃) = ∇·ω for the exact field
                s[3] += w * (f.div_omega - h.div_l_omega).norm_squared();
                s[4] += w * (f.u - h.u).norm_squared();
                s[5] += w * (f.r - h.r).norm_squared();
            }
            s
        })
        .reduce(|| [0.0; 6], |a, b| std::array::from_fn(|i| a[i] + b[i]));
    let proj = problem.project_u(exact, ERROR_QUAD_DEGREE);
    let off = problem.r_offset();
    let du: Vec<f64> = proj[..off].iter().zip(&u[..off]).map(|(a, b)| a - b).collect();
    let dr: Vec<f64> = proj[off..].iter().zip(&u[off..]).map(|(a, b)| a - b).collect();
    ErrorPieces {
        sigma_l2: sums[0].sqrt(),
        sigma_div: sums[1].sqrt(),
        omega_l2: sums[2].sqrt(),
        omega_div: sums[3].sqrt(),
        u_l2: sums[4].sqrt(),
        r_l2: sums[5].sqrt(),
        // the X^u basis is L²-orthonormal
        u_proj: norm(&du),
        r_proj: norm(&dr),
    }
}

/// The named errors written to the experiment tables.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct ErrorSet {
    pub sigma_l2: f64,
    pub sigma_hdiv: f64,
    pub omega_l2: f64,
    pub omega_hdivl: f64,
    pub u_l2: f64,
    pub r_l2: f64,
    pub u_proj: f64,
    pub r_proj: f64,
    pub composite: f64,
    pub improved: f64,
}

impl ErrorSet {
    /// Combine pieces into the composite and improved norms.
    /// `incompressible` selects the weakly coupled improved norm used for the
    /// nearly incompressible sweep.
    pub fn from_pieces(e: &ErrorPieces, family: Family, w_kind: WKind, h: f64, incompressible: bool) -> Self {
        let sigma_hdiv = e.sigma_l2.hypot(e.sigma_div);
        let omega_hdivl = e.omega_l2.hypot(e.omega_div);
        let composite = sigma_hdiv + omega_hdivl + e.u_l2 + e.r_l2;
        let improved = match (family, w_kind) {
            (Family::SC, WKind::RT) => e.omega_l2 + e.r_l2 + e.u_proj,
            (Family::SC, WKind::BDM) => e.sigma_l2 + omega_hdivl + e.r_l2 + e.u_proj,
            (Family::WC, WKind::RT) if incompressible => e.sigma_l2 + h.sqrt() * omega_hdivl + e.r_proj + e.u_proj,
            (Family::WC, WKind::BDM) if incompressible => e.sigma_l2 + e.omega_l2 + e.r_proj + e.u_proj,
            (Family::WC, _) => e.u_proj,
        };
        Self {
            sigma_l2: e.sigma_l2,
            sigma_hdiv,
            omega_l2: e.omega_l2,
            omega_hdivl,
            u_l2: e.u_l2,
            r_l2: e.r_l2,
            u_proj: e.u_proj,
            r_proj: e.r_proj,
            composite,
            improved,
        }
    }

    pub fn values(&self) -> [f64; 10] {
        [
            self.sigma_l2,
            self.sigma_hdiv,
            self.omega_l2,
            self.omega_hdivl,
            self.u_l2,
            self.r_l2,
            self.u_proj,
            self.r_proj,
            self.composite,
            self.improved,
        ]
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        NORM_NAMES.iter().position(|n| *n == name).map(|i| self.values()[i])
    }
}

/// Errors of a discrete solution in every named norm.
pub fn error_norms(
    problem: &DiscreteProblem,
    p: &[f64],
    u: &[f64],
    exact: &(dyn Fn(&[f64; 3]) -> ExactFields + Sync),
    incompressible: bool,
) -> ErrorSet {
    let e = error_pieces(problem, p, u, exact);
    ErrorSet::from_pieces(&e, problem.method.family, problem.method.w_kind, problem.mesh.h(), incompressible)
}

/// Observed order between two levels.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Rate {
    Value(f64),
    /// One of the errors is at round-off level; no rate is defined.
    Exact,
}

impl Rate {
    /// `true` if the rate is at least `min` (an exact level always passes).
    pub fn at_least(&self, min: f64) -> bool {
        match self {
            Rate::Value(r) => *r >= min,
            Rate::Exact => true,
        }
    }
}

impl std::fmt::Display for Rate {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Rate::Value(r) => write!(f, "{r:.3}"),
            Rate::Exact => f.write_str("exact"),
        }
    }
}

const ROUNDOFF: f64 = 1e-14;

/// `log(e_coarse/e_fine) / log(h_coarse/h_fine)`; `log₂` for halving.
pub fn rate(e_coarse: f64, e_fine: f64, h_coarse: f64, h_fine: f64) -> Rate {
    if e_coarse <= ROUNDOFF || e_fine <= ROUNDOFF {
        Rate::Exact
    } else {
        Rate::Value((e_coarse / e_fine).ln() / (h_coarse / h_fine).ln())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ErrorRow {
    pub n: usize,
    pub h: f64,
    pub n_dofs: usize,
    pub errors: BTreeMap<String, f64>,
}

/// Per-level errors of one sweep, coarse to fine.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ErrorTable {
    pub rows: Vec<ErrorRow>,
}

impl ErrorTable {
    pub fn push(&mut self, n: usize, h: f64, n_dofs: usize, errors: &ErrorSet) {
        let errors = NORM_NAMES.iter().zip(errors.values()).map(|(k, v)| (k.to_string(), v)).collect();
        self.rows.push(ErrorRow { n, h, n_dofs, errors });
    }

    /// Rates of norm `name` between consecutive rows.
    pub fn rates(&self, name: &str) -> Result<Vec<Rate>, AnalysisError> {
        rate_table(&self.rows, name)
    }

    /// Rate between the two finest levels.
    pub fn final_rate(&self, name: &str) -> Result<Rate, AnalysisError> {
        Ok(*self.rates(name)?.last().expect("nonempty"))
    }
}

pub fn rate_table(rows: &[ErrorRow], name: &str) -> Result<Vec<Rate>, AnalysisError> {
    if rows.len() < 2 {
        return Err(AnalysisError::TooFewLevels);
    }
    Ok(rows
        .windows(2)
        .map(|w| {
            let a = w[0].errors.get(name).copied().unwrap_or(f64::NAN);
            let b = w[1].errors.get(name).copied().unwrap_or(f64::NAN);
            rate(a, b, w[0].h, w[1].h)
        })
        .collect())
}

fn dense_cholesky(m: DMatrix<f64>) -> Result<nalgebra::Cholesky<f64, nalgebra::Dyn>, AnalysisError> {
    m.cholesky().ok_or(AnalysisError::NotPositiveDefinite)
}

/// Largest size accepted by the dense eigen-instruments.
pub const DENSE_LIMIT: usize = 8000;

/// `β_h = sqrt(λ_min(B N_p⁻¹ Bᵀ))` with `N_p` the `H_ℓ` norm matrix on
/// `X^p`; the `X^u` mass is the identity. `N_p` is factored sparsely and
/// the Schur complement formed column by column.
pub fn infsup_constant(problem: &DiscreteProblem) -> Result<f64, AnalysisError> {
    let n = problem.n_dofs();
    if n > DENSE_LIMIT {
        return Err(AnalysisError::TooLarge(n));
    }
    let b = problem.assemble_coupling();
    let np = problem.assemble_hl_norm();
    let schur = schur_complement(&b, &np)?;
    let eig = SymmetricEigen::new(schur);
    let lmin = eig.eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min);
    Ok(lmin.max(0.0).sqrt())
}

fn schur_complement(b: &CsrMatrix, np: &CsrMatrix) -> Result<DMatrix<f64>, AnalysisError> {
    use faer::linalg::solvers::Solve;
    let llt = np
        .to_faer_lower()
        .sp_cholesky(faer::Side::Lower)
        .map_err(|_| AnalysisError::NotPositiveDefinite)?;
    let bt = b.transpose();
    let nu = b.nrows();
    let npd = b.ncols();
    let mut rhs = faer::Mat::<f64>::zeros(npd, nu);
    for (r, c, v) in bt.triplets() {
        rhs[(r, c)] = v;
    }
    llt.solve_in_place(rhs.as_mut());
    let mut s = DMatrix::zeros(nu, nu);
    for j in 0..nu {
        let col = b.mul_vec(rhs.col_as_slice(j));
        for i in 0..nu {
            s[(i, j)] = col[i];
        }
    }
    Ok((&s + s.transpose()) * 0.5)
}

/// `min (M_A p, p) / (N_p p, p)` over the discrete kernel of `B`.
pub fn kernel_coercivity(problem: &DiscreteProblem) -> Result<f64, AnalysisError> {
    let n = problem.n_p();
    if n > DENSE_LIMIT / 2 {
        return Err(AnalysisError::TooLarge(n));
    }
    let b = problem.assemble_coupling().to_dense();
    let m = problem.assemble_mass().to_dense();
    let np = problem.assemble_hl_norm().to_dense();
    let btb = b.transpose() * &b;
    let eig = SymmetricEigen::new(btb);
    let scale = eig.eigenvalues.amax().max(1.0);
    let kernel: Vec<usize> = (0..n).filter(|&i| eig.eigenvalues[i] <= 1e-11 * scale).collect();
    if kernel.is_empty() {
        return Ok(f64::INFINITY);
    }
    let z = DMatrix::from_fn(n, kernel.len(), |r, c| eig.eigenvectors[(r, kernel[c])]);
    let mz = z.transpose() * &m * &z;
    let nz = z.transpose() * &np * &z;
    Ok(generalized_extreme(&mz, &nz)?.0)
}

/// Smallest and largest eigenvalue of `a x = λ b x` for SPD `b`.
pub fn generalized_extreme(a: &DMatrix<f64>, b: &DMatrix<f64>) -> Result<(f64, f64), AnalysisError> {
    let l = dense_cholesky(b.clone())?.l();
    let linv = l
        .clone()
        .solve_lower_triangular(&DMatrix::identity(l.nrows(), l.nrows()))
        .ok_or(AnalysisError::NotPositiveDefinite)?;
    let c = &linv * a * linv.transpose();
    let c = (&c + c.transpose()) * 0.5;
    let ev = SymmetricEigen::new(c).eigenvalues;
    Ok((ev.min(), ev.max()))
}

/// `sup_u ‖ℓ_h u‖ / ‖√(ℓ ℓ_h) u‖` over discontinuous `P_k` fields, with
/// `ℓ_h` the per-cell maximum of `ℓ`. Cells with `ℓ_h = 0` count as 1.
pub fn weighted_inverse_ratio(mesh: &Mesh, ell: &LengthField, k: usize) -> f64 {
    let dim = mesh.dim();
    let mono = Monomials::new(dim, k);
    let rule = QuadratureRule::simplex(dim, 2 * k + 1);
    (0..mesh.num_cells())
        .into_par_iter()
        .map(|c| {
            let verts = mesh.cell(c);
            let lv: Vec<f64> = verts.iter().map(|&v| ell.eval(&mesh.vertex(v))).collect();
            let lh = lv.iter().cloned().fold(0.0, f64::max);
            if lh <= 0.0 {
                return 1.0;
            }
            let map = mesh.affine_map(c);
            let centre = mesh.cell_centroid(c);
            let s = mesh.cell_diameter(c);
            let nb = mono.len();
            let mut m1 = DMatrix::zeros(nb, nb);
            let mut m2 = DMatrix::zeros(nb, nb);
            let mut vals = vec![0.0; nb];
            for (xr, w) in rule.points.iter().zip(&rule.weights) {
                // barycentric interpolation of ℓ
                let lam0 = 1.0 - xr.iter().take(dim).sum::<f64>();
                let lq = lam0 * lv[0] + (0..dim).map(|i| xr[i] * lv[i + 1]).sum::<f64>();
                let x = map.apply(xr);
                let mut xi = [0.0; 3];
                for r in 0..dim {
                    xi[r] = (x[r] - centre[r]) / s;
                }
                mono.eval(&xi, &mut vals);
                for i in 0..nb {
                    for j in 0..nb {
                        let v = w * vals[i] * vals[j];
                        m1[(i, j)] += lh * lh * v;
                        m2[(i, j)] += lq * lh * v;
                    }
                }
            }
            let (_, lmax) = generalized_extreme(&m1, &m2).expect("positive weighted mass");
            lmax.sqrt()
        })
        .reduce(|| 1.0, f64::max)
}

/// `max |∇·σ_h + ϖf_u|` over cell quadrature points, where `pf` holds the
/// `L²` projection of `f_u` onto the displacement space (first block of
/// `X^u`).
pub fn momentum_balance_defect(problem: &DiscreteProblem, p: &[f64], pf: &[f64]) -> f64 {
    let dim = problem.dim();
    let rule = QuadratureRule::simplex(dim, 2 * problem.k + 4);
    let zeros = vec![0.0; problem.n_u()];
    (0..problem.mesh.num_cells())
        .map(|c| {
            let (pts, _) = cell_quadrature(&problem.mesh, c, &rule);
            let vals = eval_discrete(problem, p, &zeros, c, &pts);
            let fv: Vec<Vec<([f64; 3], [f64; 3])>> = (0..dim).map(|a| problem.u.evaluate(pf, a, c, &pts)).collect();
            let mut worst: f64 = 0.0;
            for (q, v) in vals.iter().enumerate() {
                for a in 0..dim {
                    worst = worst.max((v.div_sigma[a] + fv[a][q].0[0]).abs());
                }
            }
            worst
        })
        .fold(0.0, f64::max)
}

/// `‖p_h‖_A + ‖S p_h‖ + ‖u_h‖` for a strongly coupled solution (where
/// `S p_h` lies in `X^u`, so its norm is that of `B p_h`).
pub fn discrete_stability_norm(m_a: &CsrMatrix, b: &CsrMatrix, p: &[f64], u: &[f64]) -> f64 {
    let mp = m_a.mul_vec(p);
    let pa: f64 = p.iter().zip(&mp).map(|(a, b)| a * b).sum::<f64>().max(0.0).sqrt();
    pa + norm(&b.mul_vec(p)) + norm(u)
}

/// Dense `L²` inner product of two coefficient vectors in an orthonormal
/// space (a convenience for tests).
pub fn coeff_distance(a: &[f64], b: &[f64]) -> f64 {
    DVector::from_iterator(a.len(), a.iter().zip(b).map(|(x, y)| x - y)).norm()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::assembly::Method;
    use crate::cosserat_core::MaterialModel;
    use std::sync::Arc;

    #[test]
    fn rate_arithmetic() {
        assert_eq!(rate(1.0, 0.25, 0.2, 0.1), Rate::Value(2.0));
        match rate(1e-3, 5e-4, 0.2, 0.1) {
            Rate::Value(r) => assert!((r - 1.0).abs() < 1e-12),
            Rate::Exact => panic!(),
        }
        assert_eq!(rate(1e-17, 1e-18, 0.2, 0.1), Rate::Exact);
    }

    #[test]
    fn table_needs_two_levels() {
        let mut t = ErrorTable::default();
        t.push(2, 0.5, 10, &ErrorSet::default());
        assert!(t.rates("err_u_l2").is_err());
        t.push(4, 0.25, 40, &ErrorSet::default());
        assert_eq!(t.final_rate("err_u_l2").unwrap(), Rate::Exact);
    }

    #[test]
    fn constant_ell_ratio_is_one() {
        let mesh = Mesh::structured(2, 3).unwrap();
        for k in [0, 1] {
            let r = weighted_inverse_ratio(&mesh, &LengthField::Constant(0.4), k);
            assert!((r - 1.0).abs() < 1e-12, "{r}");
        }
    }

    #[test]
    fn zero_solution_zero_errors() {
        let mesh = Arc::new(Mesh::structured(2, 2).unwrap());
        let pr = DiscreteProblem::new(mesh, Method::SC_RT, 0, MaterialModel::default()).unwrap();
        let zero = |_: &[f64; 3]| ExactFields { ell: 1.0, ..Default::default() };
        let e = error_norms(&pr, &vec![0.0; pr.n_p()], &vec![0.0; pr.n_u()], &zero, false);
        assert!(e.values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn generalized_extremes_of_diagonal_pair() {
        let a = DMatrix::from_diagonal(&DVector::from_vec(vec![2.0, 6.0]));
        let b = DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 2.0]));
        let (lo, hi) = generalized_extreme(&a, &b).unwrap();
        assert!((lo - 2.0).abs() < 1e-14 && (hi - 3.0).abs() < 1e-14);
    }
}
