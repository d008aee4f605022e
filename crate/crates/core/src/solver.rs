//! Linear solvers for the assembled saddle-point system.
//!
//! The direct path factors the symmetrised matrix `[[M_A, -Bᵀ], [-B, 0]]`
//! with a sparse LU and applies a few steps of iterative refinement. The
//! iterative path is MINRES with the block-diagonal preconditioner
//! `diag(P_p, M_u)`, where `P_p` is the matrix of
//! `(A p, p') + (S_ℓ p, S_ℓ p')` applied through its sparse Cholesky factor.

use std::time::Instant;

use faer::linalg::solvers::Solve;
use faer::sparse::linalg::solvers::{Llt, Lu};
use faer::{Mat, Side};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::assembly::BlockSystem;
use crate::sparse::{dot, CsrMatrix};


#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum SolverKind {
    #[default]
    Direct,
    Minres,
}

impl SolverKind {
    pub fn name(&self) -> &'static str {
        match self {
            SolverKind::Direct => "direct",
            SolverKind::Minres => "minres",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    pub kind: SolverKind,
    /// Target relative residual of the unsymmetrised system.
    pub tolerance: f64,
    pub max_iterations: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self { kind: SolverKind::Direct, tolerance: 1e-10, max_iterations: 5000 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveReport {
    pub method: SolverKind,
    pub iterations: usize,
    /// Relative residual: of the unsymmetrised system for the direct path,
    /// in the preconditioner norm for MINRES.
    pub final_relative_residual: f64,
    /// Seconds spent factoring and solving.
    pub wall_time: f64,
}

#[derive(Debug, Clone)]
pub struct Solution {
    pub p: Vec<f64>,
    pub u: Vec<f64>,
    pub report: SolveReport,
}

#[derive(Debug, Error)]
pub enum SolverError {
    #[error("sparse factorisation failed: {0}")]
    Factorization(String),
    #[error("MINRES needs the preconditioner block")]
    MissingPreconditioner,
    #[error("no convergence after {iterations} iterations (relative residual {residual:.3e})")]
    NotConverged { iterations: usize, residual: f64 },
}

/// Factored `p` block of the preconditioner `diag(P_p, M_u)`; the `X^u`
/// mass is the identity.
pub struct BlockPreconditioner {
    llt: Llt<usize, f64>,
    n_p: usize,
    /// Seconds spent in the factorisation.
    pub setup_time: f64,
}

impl BlockPreconditioner {
    /// Factor `P_p`; the matrix is consumed so that only its lower triangle
    /// is alive during the factorisation.
    pub fn new(precond_p: CsrMatrix) -> Result<Self, SolverError> {
        let start = Instant::now();
        let n_p = precond_p.nrows();
        let lower = precond_p.to_faer_lower();
        drop(precond_p);
        let llt = lower.sp_cholesky(Side::Lower).map_err(|e| SolverError::Factorization(format!("{e:?}")))?;
        Ok(Self { llt, n_p, setup_time: start.elapsed().as_secs_f64() })
    }

    pub fn apply(&self, r: &[f64]) -> Vec<f64> {
        let mut y = llt_solve(&self.llt, &r[..self.n_p]);
        y.extend_from_slice(&r[self.n_p..]);
        y
    }
}

/// Solve `[[M_A, -Bᵀ], [B, 0]] (p, u) = (0, f)`.
pub fn solve(
    system: &BlockSystem,
    precond: Option<&BlockPreconditioner>,
    opts: &SolverOptions,
) -> Result<Solution, SolverError> {
    match opts.kind {
        SolverKind::Direct => solve_direct(system, opts),
        SolverKind::Minres => {
            let pc = precond.ok_or(SolverError::MissingPreconditioner)?;
            solve_minres(system, pc, opts)
        }
    }
}

fn lu_solve(lu: &Lu<usize, f64>, b: &[f64]) -> Vec<f64> {
    let mut m = Mat::from_fn(b.len(), 1, |i, _| b[i]);
    lu.solve_in_place(m.as_mut());
    m.col_as_slice(0).to_vec()
}

fn llt_solve(llt: &Llt<usize, f64>, b: &[f64]) -> Vec<f64> {
    let mut m = Mat::from_fn(b.len(), 1, |i, _| b[i]);
    llt.solve_in_place(m.as_mut());
    m.col_as_slice(0).to_vec()
}

pub fn solve_direct(system: &BlockSystem, opts: &SolverOptions) -> Result<Solution, SolverError> {
    let start = Instant::now();
    let k = system.symmetric_matrix();
    let b = system.symmetric_rhs();
    let lu = k.to_faer().sp_lu().map_err(|e| SolverError::Factorization(format!("{e:?}")))?;
    let mut z = lu_solve(&lu, &b);
    let np = system.n_p;
    let mut res = system.relative_residual(&z[..np], &z[np..]);
    let mut steps = 0;
    // refinement against the symmetrised residual
    while res > 0.1 * opts.tolerance && steps < 3 {
        let kz = k.mul_vec(&z);
        let r: Vec<f64> = b.iter().zip(&kz).map(|(x, y)| x - y).collect();
        let dz = lu_solve(&lu, &r);
        let cand: Vec<f64> = z.iter().zip(&dz).map(|(a, d)| a + d).collect();
        let cres = system.relative_residual(&cand[..np], &cand[np..]);
        steps += 1;
        if cres >= res {
            break;
        }
        z = cand;
        res = cres;
    }
    let u = z.split_off(np);
    Ok(Solution {
        p: z,
        u,
        report: SolveReport {
            method: SolverKind::Direct,
            iterations: 0,
            final_relative_residual: res,
            wall_time: start.elapsed().as_secs_f64(),
        },
    })
}

/// Preconditioned MINRES (Paige and Saunders) on the symmetrised system,
/// applied block-wise without forming the full matrix. Stops when the
/// preconditioned residual `‖b - Kx‖_{P⁻¹} / ‖b‖_{P⁻¹}` is below the tolerance,
/// recomputed from the iterate; the recurrence estimate can drift, in which
/// case the solve restarts from the current iterate.
pub fn solve_minres(system: &BlockSystem, precond: &BlockPreconditioner, opts: &SolverOptions) -> Result<Solution, SolverError> {
    let start = Instant::now();
    let np = system.n_p;
    assert_eq!(np, precond.n_p, "preconditioner does not match the system");
    let b = system.symmetric_rhs();
    let apply_m = |r: &[f64]| precond.apply(r);
    let apply_k = |z: &[f64]| -> Vec<f64> {
        let (p, u) = z.split_at(np);
        let mut y = system.m_a.mul_vec(p);
        for (yi, v) in y.iter_mut().zip(system.b.mul_t_vec(u)) {
            *yi -= v;
        }
        y.extend(system.b.mul_vec(p).into_iter().map(|v| -v));
        y
    };
    let p_norm = |r: &[f64]| dot(r, &apply_m(r)).max(0.0).sqrt();
    let b_norm = p_norm(&b);
    let mut x = vec![0.0; b.len()];
    let mut iterations = 0;
    let mut res = if b_norm == 0.0 { 0.0 } else { 1.0 };
    while res > opts.tolerance && iterations < opts.max_iterations {
        let kx = apply_k(&x);
        let r: Vec<f64> = b.iter().zip(&kx).map(|(a, c)| a - c).collect();
        let (dx, it) = minres(&apply_k, &apply_m, &r, opts.tolerance / res, opts.max_iterations - iterations);
        iterations += it;
        for (xi, d) in x.iter_mut().zip(&dx) {
            *xi += d;
        }
        let kx = apply_k(&x);
        let r: Vec<f64> = b.iter().zip(&kx).map(|(a, c)| a - c).collect();
        let new_res = p_norm(&r) / b_norm;
        if it == 0 || new_res >= res {
            res = new_res;
            break;
        }
        res = new_res;
    }
    let mut p = x;
    let u = p.split_off(np);
    let report = SolveReport {
        method: SolverKind::Minres,
        iterations,
        final_relative_residual: res,
        wall_time: start.elapsed().as_secs_f64() + precond.setup_time,
    };
    if res > opts.tolerance {
        return Err(SolverError::NotConverged { iterations, residual: res });
    }
    Ok(Solution { p, u, report })
}

/// MINRES for a symmetric operator `a` with SPD preconditioner `m`
/// (`m` applies the inverse). Stops when the preconditioned residual has
/// dropped by `rtol`. Returns the iterate and the iteration count.
pub fn minres(
    a: &dyn Fn(&[f64]) -> Vec<f64>,
    m: &dyn Fn(&[f64]) -> Vec<f64>,
    b: &[f64],
    rtol: f64,
    max_iter: usize,
) -> (Vec<f64>, usize) {
    let n = b.len();
    let mut x = vec![0.0; n];
    let mut r1 = b.to_vec();
    let mut y = m(&r1);
    let beta1 = dot(&r1, &y).max(0.0).sqrt();
    if beta1 == 0.0 {
        return (x, 0);
    }
    let mut r2 = r1.clone();
    let (mut oldb, mut beta) = (0.0, beta1);
    let (mut dbar, mut epsln, mut phibar) = (0.0, 0.0, beta1);
    let (mut cs, mut sn) = (-1.0f64, 0.0f64);
    let mut w = vec![0.0; n];
    let mut w2 = vec![0.0; n];
    let mut itn = 0;
    while itn < max_iter {
        itn += 1;
        let s = 1.0 / beta;
        let v: Vec<f64> = y.iter().map(|yi| s * yi).collect();
        y = a(&v);
        if itn >= 2 {
            let f = beta / oldb;
            for (yi, ri) in y.iter_mut().zip(&r1) {
                *yi -= f * ri;
            }
        }
        let alfa = dot(&v, &y);
        let f = alfa / beta;
        for (yi, ri) in y.iter_mut().zip(&r2) {
            *yi -= f * ri;
        }
        r1 = std::mem::replace(&mut r2, y);
        y = m(&r2);
        oldb = beta;
        beta = dot(&r2, &y).max(0.0).sqrt();
        let oldeps = epsln;
        let delta = cs * dbar + sn * alfa;
        let gbar = sn * dbar - cs * alfa;
        epsln = sn * beta;
        dbar = -cs * beta;
        let gamma = gbar.hypot(beta).max(f64::EPSILON);
        cs = gbar / gamma;
        sn = beta / gamma;
        let phi = cs * phibar;
        phibar *= sn;
        let denom = 1.0 / gamma;
        let w1 = std::mem::replace(&mut w2, std::mem::take(&mut w));
        w = (0..n).map(|i| (v[i] - oldeps * w1[i] - delta * w2[i]) * denom).collect();
        for (xi, wi) in x.iter_mut().zip(&w) {
            *xi += phi * wi;
        }
        if phibar <= rtol * beta1 || beta == 0.0 {
            break;
        }
    }
    (x, itn)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minres_on_small_indefinite_system() {
        let a = [[4.0, 1.0, 0.0], [1.0, -3.0, 2.0], [0.0, 2.0, 1.0]];
        let b = [1.0, 2.0, 3.0];
        let op = |v: &[f64]| (0..3).map(|i| (0..3).map(|j| a[i][j] * v[j]).sum()).collect();
        let id = |v: &[f64]| v.to_vec();
        let (x, it) = minres(&op, &id, &b, 1e-14, 50);
        assert!(it <= 4);
        let ax: Vec<f64> = op(&x);
        for i in 0..3 {
            assert!((ax[i] - b[i]).abs() < 1e-12);
        }
    }

    #[test]
    fn zero_rhs_returns_zero() {
        let (x, it) = minres(&|v: &[f64]| v.to_vec(), &|v: &[f64]| v.to_vec(), &[0.0; 4], 1e-10, 10);
        assert_eq!(it, 0);
        assert!(x.iter().all(|&v| v == 0.0));
    }
}
